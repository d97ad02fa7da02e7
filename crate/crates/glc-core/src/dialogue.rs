//! Role-tagged dialogues and the line-delimited corpus format.
//!
//! A dialogue is an ordered list of utterances, each rendered as
//! `role:sentence`. A summary target ("user", "agent", or "final") can be
//! attached as a synthetic prompt pseudo-utterance at position 0; content
//! utterances then occupy pipeline indices `1..=N` whether or not a prompt is
//! present.

use std::collections::BTreeMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{GlcError, Result};

/// A speaker role label. Never empty and never contains `:`, which is
/// reserved as the role/sentence separator in the rendered form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Role {
    name: String,
}

impl Role {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() {
            return Err(GlcError::validation("role name must be non-empty"));
        }
        if name.contains(':') {
            return Err(GlcError::validation(format!(
                "role name {name:?} must not contain ':'"
            )));
        }
        Ok(Role { name })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

/// One speaker turn.
#[derive(Debug, Clone, PartialEq)]
pub struct Utterance {
    pub role: Role,
    pub sentence: String,
    /// 0-based ordinal within the owning dialogue.
    pub index: usize,
}

impl Utterance {
    /// Rendered form fed to the tokenizer: exactly `role` + `:` + `sentence`.
    pub fn rendered(&self) -> String {
        format!("{}:{}", self.role.name(), self.sentence)
    }
}

/// Which summary a run is oriented towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SummaryTarget {
    User,
    Agent,
    Final,
}

impl SummaryTarget {
    /// The control prompt prepended to the dialogue for this target.
    pub fn prompt_text(self) -> &'static str {
        match self {
            SummaryTarget::User => "[User Summary]",
            SummaryTarget::Agent => "[Agent Summary]",
            SummaryTarget::Final => "[Final Summary]",
        }
    }

    /// Role name the extractive selector filters on, if any. The overall
    /// "final" summary draws from every speaker.
    pub fn role_filter(self) -> Option<&'static str> {
        match self {
            SummaryTarget::User => Some("user"),
            SummaryTarget::Agent => Some("agent"),
            SummaryTarget::Final => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SummaryTarget::User => "user",
            SummaryTarget::Agent => "agent",
            SummaryTarget::Final => "final",
        }
    }
}

/// An ordered dialogue plus optional per-target reference summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct Dialogue {
    pub id: String,
    pub utterances: Vec<Utterance>,
    pub references: BTreeMap<SummaryTarget, String>,
}

impl Dialogue {
    pub fn new(
        id: impl Into<String>,
        turns: Vec<(Role, String)>,
        references: BTreeMap<SummaryTarget, String>,
    ) -> Result<Self> {
        if turns.is_empty() {
            return Err(GlcError::validation("dialogue must contain at least one utterance"));
        }
        let utterances = turns
            .into_iter()
            .enumerate()
            .map(|(index, (role, sentence))| Utterance { role, sentence, index })
            .collect();
        Ok(Dialogue {
            id: id.into(),
            utterances,
            references,
        })
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }
}

/// A dialogue ready for tokenization, with an optional prompt pseudo-utterance
/// at position 0. Content utterances keep pipeline indices `1..=N` either way;
/// index 0 is reserved for the prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptedDialogue {
    dialogue: Dialogue,
    prompt: Option<SummaryTarget>,
}

impl PromptedDialogue {
    /// Prepend the target's prompt as pseudo-utterance 0.
    pub fn attach(dialogue: Dialogue, target: SummaryTarget) -> Self {
        PromptedDialogue {
            dialogue,
            prompt: Some(target),
        }
    }

    /// Skip prompt attachment (corpora without role-oriented summaries).
    pub fn without_prompt(dialogue: Dialogue) -> Self {
        PromptedDialogue {
            dialogue,
            prompt: None,
        }
    }

    /// Remove position 0 again, recovering the original dialogue.
    pub fn strip_prompt(self) -> Dialogue {
        self.dialogue
    }

    pub fn dialogue(&self) -> &Dialogue {
        &self.dialogue
    }

    pub fn prompt(&self) -> Option<SummaryTarget> {
        self.prompt
    }

    /// Total unit count: N+1 with a prompt, N without.
    pub fn unit_count(&self) -> usize {
        self.dialogue.len() + usize::from(self.prompt.is_some())
    }

    /// Rendered units in pipeline order as `(pipeline index, text)`. The
    /// prompt, when present, is index 0; content utterances are `1..=N`.
    pub fn units(&self) -> Vec<(usize, String)> {
        let mut units = Vec::with_capacity(self.unit_count());
        if let Some(target) = self.prompt {
            units.push((0, target.prompt_text().to_string()));
        }
        for utterance in &self.dialogue.utterances {
            units.push((utterance.index + 1, utterance.rendered()));
        }
        units
    }

    /// Content utterance for a pipeline index in `1..=N`.
    pub fn content_utterance(&self, pipeline_index: usize) -> Option<&Utterance> {
        pipeline_index
            .checked_sub(1)
            .and_then(|i| self.dialogue.utterances.get(i))
    }
}

/// Attach `target`'s prompt to `dialogue` as pseudo-utterance 0.
pub fn attach_role_prompt(dialogue: Dialogue, target: SummaryTarget) -> PromptedDialogue {
    PromptedDialogue::attach(dialogue, target)
}

#[derive(Deserialize)]
struct UtteranceRecord {
    role: String,
    text: String,
}

#[derive(Deserialize)]
struct DialogueRecord {
    id: String,
    utterances: Vec<UtteranceRecord>,
    #[serde(default)]
    references: BTreeMap<SummaryTarget, String>,
}

fn dialogue_from_record(record: DialogueRecord, line: usize) -> Result<Dialogue> {
    let turns = record
        .utterances
        .into_iter()
        .map(|u| Ok((Role::new(u.role)?, u.text)))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| line_error(line, &e))?;
    Dialogue::new(record.id, turns, record.references).map_err(|e| line_error(line, &e))
}

fn line_error(line: usize, source: &GlcError) -> GlcError {
    GlcError::Parse {
        line,
        message: source.to_string(),
    }
}

/// Parse a line-delimited corpus: one JSON dialogue record per line.
/// Fails on the first malformed or invalid line.
pub fn parse_dialogues<R: BufRead>(reader: R) -> Result<Vec<Dialogue>> {
    let mut dialogues = Vec::new();
    for (dialogue, _) in parse_dialogues_lenient(reader)?.0 {
        dialogues.push(dialogue);
    }
    Ok(dialogues)
}

/// A record that could not be parsed, with its 1-based line number.
#[derive(Debug)]
pub struct ParseFailure {
    pub line: usize,
    pub error: GlcError,
}

/// Like [`parse_dialogues`] but collects per-line failures instead of
/// stopping at the first one. Used by the pipeline, which reports and skips
/// bad records. [`parse_dialogues`] itself surfaces the first failure.
#[allow(clippy::type_complexity)]
pub fn parse_dialogues_lenient<R: BufRead>(
    reader: R,
) -> Result<(Vec<(Dialogue, usize)>, Vec<ParseFailure>)> {
    let mut dialogues = Vec::new();
    let mut failures = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let text = line?;
        if text.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<DialogueRecord>(&text)
            .map_err(|e| GlcError::Parse {
                line: line_no,
                message: e.to_string(),
            })
            .and_then(|record| dialogue_from_record(record, line_no));
        match parsed {
            Ok(dialogue) => dialogues.push((dialogue, line_no)),
            Err(error) => failures.push(ParseFailure { line: line_no, error }),
        }
    }
    Ok((dialogues, failures))
}
