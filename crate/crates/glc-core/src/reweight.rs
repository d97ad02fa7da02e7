//! Token re-weighting and blending.
//!
//! Every token row is scaled by its utterance's weight, and the scaled matrix
//! is blended with the original under `lambda`. The blended matrix is the
//! exact tensor a downstream decoder would consume; since each step is a
//! per-token scalar, the end-to-end factor `lambda * w + (1 - lambda)` is
//! also exposed directly.

use std::io::Write;

use crate::embedding::TokenEmbeddings;
use crate::error::{GlcError, Result};
use crate::matrix::Matrix;
use crate::tokenize::TokenizedDialogue;

pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Original, re-weighted, and blended token matrices for one dialogue.
#[derive(Debug, Clone, PartialEq)]
pub struct ReweightedRepresentation {
    pub original: Matrix,
    pub reweighted: Matrix,
    pub blended: Matrix,
    pub lambda: f64,
    /// The utterance weight inherited by each token; constant within a span.
    pub token_weights: Vec<f64>,
}

/// Scale each token row by its utterance's weight. Returns the scaled matrix
/// and the per-token weight vector.
pub fn reweight_tokens(
    tokens: &TokenEmbeddings,
    weights: &[f64],
    tokenized: &TokenizedDialogue,
) -> Result<(Matrix, Vec<f64>)> {
    if weights.len() != tokenized.spans.len() {
        return Err(GlcError::validation(format!(
            "{} utterance weights supplied for {} spans",
            weights.len(),
            tokenized.spans.len()
        )));
    }
    if tokens.matrix.rows() != tokenized.token_count() {
        return Err(GlcError::validation(format!(
            "token matrix has {} rows but the dialogue has {} tokens",
            tokens.matrix.rows(),
            tokenized.token_count()
        )));
    }
    let mut token_weights = vec![0.0; tokenized.token_count()];
    for (span, &w) in tokenized.spans.iter().zip(weights) {
        for t in span.range() {
            token_weights[t] = w;
        }
    }
    let mut reweighted = tokens.matrix.clone();
    for (t, &w) in token_weights.iter().enumerate() {
        for v in reweighted.row_mut(t) {
            *v *= w;
        }
    }
    Ok((reweighted, token_weights))
}

/// Row-wise convex combination `lambda * reweighted + (1 - lambda) * original`.
pub fn blend(original: &Matrix, reweighted: &Matrix, lambda: f64) -> Result<Matrix> {
    validate_lambda(lambda)?;
    if original.rows() != reweighted.rows() || original.cols() != reweighted.cols() {
        return Err(GlcError::validation(format!(
            "blend shape mismatch: {}x{} vs {}x{}",
            original.rows(),
            original.cols(),
            reweighted.rows(),
            reweighted.cols()
        )));
    }
    let data = original
        .as_slice()
        .iter()
        .zip(reweighted.as_slice())
        .map(|(o, r)| lambda * r + (1.0 - lambda) * o)
        .collect();
    Matrix::from_flat(original.rows(), original.cols(), data)
}

/// The scalar each token row is multiplied by end to end:
/// `lambda * w_t + (1 - lambda)`.
pub fn effective_token_salience(token_weights: &[f64], lambda: f64) -> Vec<f64> {
    token_weights
        .iter()
        .map(|w| lambda * w + (1.0 - lambda))
        .collect()
}

/// Run both steps and package every intermediate.
pub fn reweight_and_blend(
    tokens: &TokenEmbeddings,
    weights: &[f64],
    tokenized: &TokenizedDialogue,
    lambda: f64,
) -> Result<ReweightedRepresentation> {
    validate_lambda(lambda)?;
    let (reweighted, token_weights) = reweight_tokens(tokens, weights, tokenized)?;
    let blended = blend(&tokens.matrix, &reweighted, lambda)?;
    Ok(ReweightedRepresentation {
        original: tokens.matrix.clone(),
        reweighted,
        blended,
        lambda,
        token_weights,
    })
}

fn validate_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(GlcError::config(format!(
            "lambda must lie in [0, 1], got {lambda}"
        )));
    }
    Ok(())
}

/// Binary dump of a matrix for external decoders: two little-endian u64
/// values (rows, cols) followed by the row-major f64 data, little-endian.
pub fn write_matrix_dump<W: Write>(writer: &mut W, matrix: &Matrix) -> std::io::Result<()> {
    writer.write_all(&(matrix.rows() as u64).to_le_bytes())?;
    writer.write_all(&(matrix.cols() as u64).to_le_bytes())?;
    for v in matrix.as_slice() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tokenize::UtteranceSpan;

    fn stream(span_lens: &[usize]) -> TokenizedDialogue {
        let mut spans = Vec::new();
        let mut start = 0;
        for (i, &len) in span_lens.iter().enumerate() {
            spans.push(UtteranceSpan {
                utterance_index: i + 1,
                start,
                len,
            });
            start += len;
        }
        TokenizedDialogue {
            tokens: (0..start).map(|t| format!("t{t}")).collect(),
            spans,
            prompt_attached: false,
        }
    }

    fn tokens(rows: Vec<Vec<f64>>) -> TokenEmbeddings {
        TokenEmbeddings {
            matrix: Matrix::from_rows(rows).unwrap(),
        }
    }

    #[test]
    fn unit_weights_leave_tokens_unchanged() {
        let tokenized = stream(&[2, 1]);
        let emb = tokens(vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]);
        let (reweighted, token_weights) =
            reweight_tokens(&emb, &[1.0, 1.0], &tokenized).unwrap();
        assert_eq!(reweighted, emb.matrix);
        assert_eq!(token_weights, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn rows_scale_by_their_utterance_weight() {
        let tokenized = stream(&[1, 1]);
        let emb = tokens(vec![vec![2.0, 4.0], vec![2.0, 4.0]]);
        let (reweighted, token_weights) =
            reweight_tokens(&emb, &[0.5, 0.0], &tokenized).unwrap();
        assert_eq!(reweighted.row(0), &[1.0, 2.0]);
        assert_eq!(reweighted.row(1), &[0.0, 0.0]);
        assert_eq!(token_weights, vec![0.5, 0.0]);
    }

    #[test]
    fn weight_count_must_match_span_count() {
        let tokenized = stream(&[1, 1]);
        let emb = tokens(vec![vec![1.0], vec![1.0]]);
        assert!(reweight_tokens(&emb, &[0.5], &tokenized).is_err());
    }

    #[test]
    fn blend_endpoints_reproduce_inputs_exactly() {
        let original = Matrix::from_rows(vec![vec![1.0, -2.0], vec![0.25, 8.0]]).unwrap();
        let reweighted = original.scaled(0.3);
        assert_eq!(blend(&original, &reweighted, 0.0).unwrap(), original);
        assert_eq!(blend(&original, &reweighted, 1.0).unwrap(), reweighted);
    }

    #[test]
    fn lambda_outside_unit_interval_is_rejected() {
        let m = Matrix::zeros(1, 1);
        assert!(matches!(blend(&m, &m, -0.1), Err(GlcError::Config(_))));
        assert!(matches!(blend(&m, &m, 1.1), Err(GlcError::Config(_))));
    }

    #[test]
    fn default_lambda_is_half() {
        assert_eq!(DEFAULT_LAMBDA, 0.5);
    }

    #[test]
    fn effective_salience_formula() {
        assert_eq!(effective_token_salience(&[1.0], 0.3), vec![1.0]);
        assert_eq!(effective_token_salience(&[0.0], 0.5), vec![0.5]);
        let w = 4.0 / 24.0f64.sqrt();
        let expected = 0.5 * w + 0.5;
        assert_eq!(effective_token_salience(&[w], 0.5), vec![expected]);
        assert!((expected - 0.9082).abs() < 5e-5);
    }

    #[test]
    fn composition_is_a_per_token_scalar() {
        let tokenized = stream(&[2, 2]);
        let emb = tokens(vec![
            vec![1.0, -1.0],
            vec![2.0, 0.5],
            vec![-3.0, 3.0],
            vec![0.0, 7.0],
        ]);
        let weights = [0.75, -0.25];
        let lambda = 0.4;
        let rep = reweight_and_blend(&emb, &weights, &tokenized, lambda).unwrap();
        let salience = effective_token_salience(&rep.token_weights, lambda);
        for t in 0..4 {
            for (b, o) in rep.blended.row(t).iter().zip(emb.matrix.row(t)) {
                assert!((b - salience[t] * o).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn negative_weights_flip_row_signs() {
        let tokenized = stream(&[1]);
        let emb = tokens(vec![vec![2.0, -4.0]]);
        let (reweighted, _) = reweight_tokens(&emb, &[-1.0], &tokenized).unwrap();
        assert_eq!(reweighted.row(0), &[-2.0, 4.0]);
    }

    #[test]
    fn matrix_dump_layout() {
        let m = Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let mut buf = Vec::new();
        write_matrix_dump(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 16 + 4 * 8);
        assert_eq!(u64::from_le_bytes(buf[0..8].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[8..16].try_into().unwrap()), 2);
        assert_eq!(f64::from_le_bytes(buf[16..24].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(buf[40..48].try_into().unwrap()), 4.0);
    }
}
