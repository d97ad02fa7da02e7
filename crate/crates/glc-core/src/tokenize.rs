//! Deterministic tokenization of prompted dialogues.
//!
//! Two modes: whitespace-separated words (default) and per-character for
//! unsegmented scripts. The output is a flat token stream plus a span map
//! assigning every token to exactly one utterance. Truncation to the token
//! budget drops trailing content: utterances wholly past the budget are
//! removed, the utterance straddling the boundary loses its trailing tokens,
//! and the prompt is never cut.

use serde::{Deserialize, Serialize};

use crate::dialogue::PromptedDialogue;
use crate::error::{GlcError, Result};

pub const DEFAULT_MAX_TOKENS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenizerMode {
    /// Split on Unicode whitespace.
    Words,
    /// One token per non-whitespace character.
    Chars,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizerConfig {
    pub mode: TokenizerMode,
    pub lowercase: bool,
    pub max_tokens: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            mode: TokenizerMode::Words,
            lowercase: false,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }
}

impl TokenizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_tokens == 0 {
            return Err(GlcError::config("max_tokens must be at least 1"));
        }
        Ok(())
    }
}

/// Contiguous token range belonging to one utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UtteranceSpan {
    /// Pipeline index: 0 is the prompt, content utterances are `1..=N`.
    pub utterance_index: usize,
    pub start: usize,
    pub len: usize,
}

impl UtteranceSpan {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

/// A flat token stream with its utterance span map.
///
/// Invariants (upheld by [`tokenize`]): spans are ordered, contiguous, and
/// partition the token list exactly; every span is non-empty; if a prompt is
/// attached its span has utterance index 0 and comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedDialogue {
    pub tokens: Vec<String>,
    pub spans: Vec<UtteranceSpan>,
    pub prompt_attached: bool,
}

impl TokenizedDialogue {
    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }

    /// Tokens of one span.
    pub fn span_tokens(&self, span: &UtteranceSpan) -> &[String] {
        &self.tokens[span.range()]
    }

    pub fn span_for(&self, utterance_index: usize) -> Option<&UtteranceSpan> {
        self.spans.iter().find(|s| s.utterance_index == utterance_index)
    }

    /// Spans of content utterances (pipeline index >= 1).
    pub fn content_spans(&self) -> impl Iterator<Item = &UtteranceSpan> {
        self.spans.iter().filter(|s| s.utterance_index >= 1)
    }
}

/// Split one piece of text with the configured mode, ignoring any budget.
pub fn tokenize_text(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let text = if config.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    match config.mode {
        TokenizerMode::Words => text.split_whitespace().map(str::to_string).collect(),
        TokenizerMode::Chars => text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(String::from)
            .collect(),
    }
}

/// Tokenize a prompted dialogue into a budgeted token stream.
pub fn tokenize(prompted: &PromptedDialogue, config: &TokenizerConfig) -> Result<TokenizedDialogue> {
    config.validate()?;
    let budget = config.max_tokens;
    let prompt_attached = prompted.prompt().is_some();

    let mut tokens: Vec<String> = Vec::new();
    let mut spans: Vec<UtteranceSpan> = Vec::new();
    let mut kept_content = 0usize;

    for (utterance_index, text) in prompted.units() {
        let mut unit_tokens = tokenize_text(&text, config);
        let remaining = budget - tokens.len();
        if utterance_index == 0 {
            // The prompt steers target selection and is kept whole or not at all.
            if unit_tokens.len() > remaining {
                return Err(GlcError::validation(
                    "dialogue exceeds budget irreducibly: prompt alone overflows max_tokens",
                ));
            }
        } else {
            if remaining == 0 {
                break;
            }
            unit_tokens.truncate(remaining);
            kept_content += 1;
        }
        spans.push(UtteranceSpan {
            utterance_index,
            start: tokens.len(),
            len: unit_tokens.len(),
        });
        tokens.extend(unit_tokens);
    }

    if kept_content == 0 {
        return Err(GlcError::validation(
            "dialogue exceeds budget irreducibly: no content utterance fits within max_tokens",
        ));
    }
    debug_assert!(spans.iter().all(|s| s.len >= 1));

    Ok(TokenizedDialogue {
        tokens,
        spans,
        prompt_attached,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dialogue::{Dialogue, Role, SummaryTarget};
    use std::collections::BTreeMap;

    fn dialogue(turns: &[(&str, &str)]) -> Dialogue {
        Dialogue::new(
            "d",
            turns
                .iter()
                .map(|(r, t)| (Role::new(*r).unwrap(), (*t).to_string()))
                .collect(),
            BTreeMap::new(),
        )
        .unwrap()
    }

    #[test]
    fn whitespace_mode_splits_rendered_utterance() {
        let prompted = PromptedDialogue::without_prompt(dialogue(&[("user", " hi there")]));
        let tokenized = tokenize(&prompted, &TokenizerConfig::default()).unwrap();
        assert_eq!(tokenized.tokens, ["user:", "hi", "there"]);
        assert_eq!(tokenized.spans.len(), 1);
        assert_eq!(tokenized.spans[0].utterance_index, 1);
        assert_eq!(tokenized.spans[0].range(), 0..3);
    }

    #[test]
    fn budget_truncates_boundary_utterance() {
        // Two 3-token utterances under a budget of 4: the first survives
        // whole, the second keeps a single leading token.
        let prompted = PromptedDialogue::without_prompt(dialogue(&[("a", " x y"), ("b", " p q")]));
        let config = TokenizerConfig {
            max_tokens: 4,
            ..TokenizerConfig::default()
        };
        let tokenized = tokenize(&prompted, &config).unwrap();
        assert_eq!(tokenized.tokens, ["a:", "x", "y", "b:"]);
        assert_eq!(tokenized.spans[0].len, 3);
        assert_eq!(tokenized.spans[1].len, 1);
    }

    #[test]
    fn budget_drops_whole_trailing_utterances() {
        let prompted = PromptedDialogue::without_prompt(dialogue(&[
            ("a", " x y"),
            ("b", " p q"),
            ("c", " m n"),
        ]));
        let config = TokenizerConfig {
            max_tokens: 3,
            ..TokenizerConfig::default()
        };
        let tokenized = tokenize(&prompted, &config).unwrap();
        assert_eq!(tokenized.spans.len(), 1);
        assert_eq!(tokenized.tokens.len(), 3);
    }

    #[test]
    fn default_budget_is_512() {
        assert_eq!(TokenizerConfig::default().max_tokens, 512);
    }

    #[test]
    fn prompt_survives_truncation_and_comes_first() {
        let prompted =
            PromptedDialogue::attach(dialogue(&[("user", " a b c d")]), SummaryTarget::User);
        let config = TokenizerConfig {
            max_tokens: 4,
            ..TokenizerConfig::default()
        };
        let tokenized = tokenize(&prompted, &config).unwrap();
        assert!(tokenized.prompt_attached);
        assert_eq!(tokenized.spans[0].utterance_index, 0);
        // "[User Summary]" -> 2 word tokens, leaving 2 for content.
        assert_eq!(tokenized.span_tokens(&tokenized.spans[0]), ["[User", "Summary]"]);
        assert_eq!(tokenized.spans[1].len, 2);
    }

    #[test]
    fn irreducible_budget_is_an_error() {
        let prompted =
            PromptedDialogue::attach(dialogue(&[("user", "hello")]), SummaryTarget::User);
        let config = TokenizerConfig {
            max_tokens: 2, // exactly the prompt, leaving nothing for content
            ..TokenizerConfig::default()
        };
        let err = tokenize(&prompted, &config).unwrap_err();
        assert!(err.to_string().contains("exceeds budget irreducibly"));

        let config = TokenizerConfig {
            max_tokens: 1, // not even the prompt fits
            ..TokenizerConfig::default()
        };
        let err = tokenize(&prompted, &config).unwrap_err();
        assert!(err.to_string().contains("exceeds budget irreducibly"));
    }

    #[test]
    fn char_mode_skips_whitespace() {
        let prompted = PromptedDialogue::without_prompt(dialogue(&[("u", "你 好")]));
        let config = TokenizerConfig {
            mode: TokenizerMode::Chars,
            ..TokenizerConfig::default()
        };
        let tokenized = tokenize(&prompted, &config).unwrap();
        assert_eq!(tokenized.tokens, ["u", ":", "你", "好"]);
    }

    #[test]
    fn lowercase_flag_applies_before_splitting() {
        let config = TokenizerConfig {
            lowercase: true,
            ..TokenizerConfig::default()
        };
        assert_eq!(tokenize_text("Hi THERE", &config), ["hi", "there"]);
    }

    #[test]
    fn tokenization_is_idempotent_on_presplit_text() {
        let config = TokenizerConfig::default();
        let first = tokenize_text("alpha beta gamma", &config);
        let second = tokenize_text(&first.join(" "), &config);
        assert_eq!(first, second);
    }

    #[test]
    fn spans_partition_token_stream() {
        let prompted = PromptedDialogue::attach(
            dialogue(&[("user", " one two"), ("agent", " three"), ("user", " four five six")]),
            SummaryTarget::Final,
        );
        let tokenized = tokenize(&prompted, &TokenizerConfig::default()).unwrap();
        let mut cursor = 0;
        for span in &tokenized.spans {
            assert_eq!(span.start, cursor);
            assert!(span.len >= 1);
            cursor += span.len;
        }
        assert_eq!(cursor, tokenized.token_count());
    }
}
