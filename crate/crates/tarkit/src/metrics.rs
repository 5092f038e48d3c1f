//! Corpus-level evaluation: think-answer consistency over correct samples
//! and over the whole corpus, attention-score aggregation, and the Pearson
//! correlation used for judge-stability checks.

use serde::{Deserialize, Serialize};

use crate::model::RewardBreakdown;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("metric over an empty corpus")]
    EmptyCorpus,
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("zero variance in {which} series")]
    ZeroVariance { which: &'static str },
}

/// Per-sample evaluation row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEval {
    pub id: String,
    pub correct: bool,
    pub tac_bit: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vas_raw: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vas_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reward: Option<RewardBreakdown>,
}

impl SampleEval {
    /// Builds a row, deriving the normalized attention score from the raw
    /// 0-10 value.
    pub fn new(id: &str, correct: bool, tac_bit: u8, vas_raw: Option<u8>) -> Self {
        Self {
            id: id.to_string(),
            correct,
            tac_bit,
            vas_raw,
            vas_norm: vas_raw.map(|raw| f64::from(raw) / 10.0),
            reward: None,
        }
    }

    pub fn with_reward(mut self, reward: RewardBreakdown) -> Self {
        self.reward = Some(reward);
        self
    }
}

/// Consistency over the correctly answered subset. An empty correct subset
/// has no defined value and reports as absent, never as zero.
pub fn tac(evals: &[SampleEval]) -> Option<f64> {
    let correct: Vec<&SampleEval> = evals.iter().filter(|e| e.correct).collect();
    if correct.is_empty() {
        return None;
    }
    let sum: f64 = correct.iter().map(|e| f64::from(e.tac_bit)).sum();
    Some(sum / correct.len() as f64)
}

/// Consistency over every sample, regardless of correctness.
pub fn tac_all(evals: &[SampleEval]) -> Result<f64, MetricsError> {
    if evals.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let sum: f64 = evals.iter().map(|e| f64::from(e.tac_bit)).sum();
    Ok(sum / evals.len() as f64)
}

/// Mean normalized attention score plus a disclosure of how many samples
/// actually carried a score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VasAggregate {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean: Option<f64>,
    pub scored: usize,
    pub total: usize,
}

/// Mean of the normalized attention scores over the scored subset. Samples
/// without a score are excluded and disclosed via the counts; they are
/// never imputed as zero.
pub fn vas(evals: &[SampleEval]) -> VasAggregate {
    let scored: Vec<f64> = evals.iter().filter_map(|e| e.vas_norm).collect();
    VasAggregate {
        mean: if scored.is_empty() {
            None
        } else {
            Some(scored.iter().sum::<f64>() / scored.len() as f64)
        },
        scored: scored.len(),
        total: evals.len(),
    }
}

/// Sample Pearson correlation coefficient.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, MetricsError> {
    if xs.len() != ys.len() {
        return Err(MetricsError::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    let n = xs.len() as f64;
    if xs.is_empty() {
        return Err(MetricsError::ZeroVariance { which: "both" });
    }
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 {
        return Err(MetricsError::ZeroVariance { which: "x" });
    }
    if var_y == 0.0 {
        return Err(MetricsError::ZeroVariance { which: "y" });
    }
    Ok((cov / (var_x.sqrt() * var_y.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(id: &str, correct: bool, tac_bit: u8, vas_raw: Option<u8>) -> SampleEval {
        SampleEval::new(id, correct, tac_bit, vas_raw)
    }

    #[test]
    fn tac_over_correct_subset() {
        let evals = vec![
            eval("a", true, 1, None),
            eval("b", true, 1, None),
            eval("c", true, 0, None),
            eval("d", false, 0, None),
        ];
        let value = tac(&evals).unwrap();
        assert!((value - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tac_absent_without_correct_samples() {
        let evals = vec![eval("a", false, 1, None)];
        assert_eq!(tac(&evals), None);
    }

    #[test]
    fn tac_all_over_everything() {
        let evals = vec![
            eval("a", true, 1, None),
            eval("b", false, 0, None),
            eval("c", true, 1, None),
            eval("d", false, 0, None),
        ];
        assert_eq!(tac_all(&evals).unwrap(), 0.5);
        assert!(matches!(tac_all(&[]), Err(MetricsError::EmptyCorpus)));
    }

    #[test]
    fn tac_equals_tac_all_when_all_correct() {
        let evals = vec![
            eval("a", true, 1, None),
            eval("b", true, 0, None),
            eval("c", true, 1, None),
        ];
        assert_eq!(tac(&evals).unwrap(), tac_all(&evals).unwrap());
    }

    #[test]
    fn vas_means_normalized_scores() {
        let evals = vec![
            eval("a", true, 1, Some(9)),
            eval("b", true, 1, Some(9)),
            eval("c", true, 1, Some(10)),
        ];
        let aggregate = vas(&evals);
        assert!((aggregate.mean.unwrap() - (0.9 + 0.9 + 1.0) / 3.0).abs() < 1e-12);
        assert_eq!(aggregate.scored, 3);
    }

    #[test]
    fn vas_excludes_unscored_with_disclosure() {
        let evals = vec![
            eval("a", true, 1, Some(0)),
            eval("b", true, 1, None),
        ];
        let aggregate = vas(&evals);
        assert_eq!(aggregate.mean, Some(0.0));
        assert_eq!(aggregate.scored, 1);
        assert_eq!(aggregate.total, 2);
    }

    #[test]
    fn vas_all_zero_scores() {
        let evals = vec![eval("a", false, 0, Some(0)), eval("b", false, 0, Some(0))];
        assert_eq!(vas(&evals).mean, Some(0.0));
    }

    #[test]
    fn pearson_perfect_correlations() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.to_vec();
        assert!((pearson(&xs, &ys).unwrap() - 1.0).abs() < 1e-15);
        let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &neg).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn pearson_hand_computed_triples() {
        // For xs = [1,2,3]: cov([1,2,3],[2,4,7]) = 5, var_x = 2,
        // var_y = 114/9, so r = 5 / sqrt(2 * 114/9) = 15 / sqrt(228).
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 7.0]).unwrap();
        assert!((r - 15.0 / 228.0_f64.sqrt()).abs() < 1e-12);
        // And for ys = [2,4,8]: cov = 6, var_y = 168/9, so
        // r = 6 / sqrt(2 * 168/9) = 18 / sqrt(336) ≈ 0.98198.
        let r = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 8.0]).unwrap();
        assert!((r - 18.0 / 336.0_f64.sqrt()).abs() < 1e-12);
        assert!((r - 0.9819805060619657).abs() < 1e-12);
    }

    #[test]
    fn pearson_errors() {
        assert!(matches!(
            pearson(&[1.0, 2.0], &[1.0]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson(&[1.0, 1.0], &[1.0, 2.0]),
            Err(MetricsError::ZeroVariance { which: "x" })
        ));
        assert!(matches!(
            pearson(&[5.0], &[3.0]),
            Err(MetricsError::ZeroVariance { .. })
        ));
    }

    proptest! {
        #[test]
        fn vas_is_permutation_invariant(
            scores in proptest::collection::vec(0u8..=10, 1..30),
            seed in 0u64..1000,
        ) {
            let evals: Vec<SampleEval> = scores
                .iter()
                .enumerate()
                .map(|(i, s)| eval(&format!("s{i}"), true, 1, Some(*s)))
                .collect();
            let mut shuffled = evals.clone();
            // Deterministic Fisher-Yates driven by a tiny LCG.
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            for i in (1..shuffled.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
                let j = (state >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let a = vas(&evals);
            let b = vas(&shuffled);
            prop_assert!((a.mean.unwrap() - b.mean.unwrap()).abs() < 1e-12);
        }

        #[test]
        fn pearson_affine_invariance(
            xs in proptest::collection::vec(-100.0f64..100.0, 3..20),
            a in 0.1f64..10.0,
            b in -50.0f64..50.0,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x * 0.5 + (i as f64)).collect();
            let scaled: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            if let (Ok(base), Ok(transformed)) = (pearson(&xs, &ys), pearson(&scaled, &ys)) {
                prop_assert!((base - transformed).abs() < 1e-9);
            }
        }

        #[test]
        fn tac_values_bounded(
            bits in proptest::collection::vec(0u8..=1, 1..40),
            correct in proptest::collection::vec(proptest::bool::ANY, 1..40),
        ) {
            let evals: Vec<SampleEval> = bits
                .iter()
                .zip(correct.iter().cycle())
                .enumerate()
                .map(|(i, (bit, ok))| eval(&format!("s{i}"), *ok, *bit, None))
                .collect();
            if let Some(value) = tac(&evals) {
                prop_assert!((0.0..=1.0).contains(&value));
            }
            let all = tac_all(&evals).unwrap();
            prop_assert!((0.0..=1.0).contains(&all));
        }
    }
}
