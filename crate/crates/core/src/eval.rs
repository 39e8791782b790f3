//! Metrics, bootstrap significance testing, cross-validation driving
//! and report rendering.
//!
//! Precision, recall and F1 use the 0/0 -> 0 convention so macro F1
//! over the four classes stays defined when a rare class collapses;
//! affected classes are flagged in the report metadata.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::PolarityLabel;
use crate::util::subseed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("gold and predictions have different lengths ({gold} vs {pred})")]
    LengthMismatch { gold: usize, pred: usize },
    #[error("cannot score an empty prediction set")]
    Empty,
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Feature(#[from] crate::features::FeatureError),
    #[error("training failed: {0}")]
    Train(String),
}

/// 4x4 confusion counts: rows are gold, columns are predicted, in the
/// fixed label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[usize; 4]; 4]);

impl ConfusionMatrix {
    pub fn add(&mut self, gold: PolarityLabel, pred: PolarityLabel) {
        self.0[gold.index()][pred.index()] += 1;
    }

    pub fn total(&self) -> usize {
        self.0.iter().flatten().sum()
    }

    pub fn diagonal(&self) -> usize {
        (0..4).map(|i| self.0[i][i]).sum()
    }

    pub fn gold_count(&self, label: PolarityLabel) -> usize {
        self.0[label.index()].iter().sum()
    }

    pub fn pred_count(&self, label: PolarityLabel) -> usize {
        self.0.iter().map(|row| row[label.index()]).sum()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

/// Scores for one system on one prediction set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: [ClassMetrics; 4],
    pub macro_f1: f64,
    pub confusion: ConfusionMatrix,
    pub instances: usize,
    pub metadata: BTreeMap<String, String>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class precision/recall/F1 plus macro F1 and the confusion
/// matrix.
pub fn score(gold: &[PolarityLabel], pred: &[PolarityLabel]) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut confusion = ConfusionMatrix::default();
    for (&g, &p) in gold.iter().zip(pred) {
        confusion.add(g, p);
    }

    let mut per_class = [ClassMetrics::default(); 4];
    let mut zero_division = Vec::new();
    let mut macro_sum = 0.0;
    for label in PolarityLabel::ALL {
        let i = label.index();
        let tp = confusion.0[i][i];
        let gold_n = confusion.gold_count(label);
        let pred_n = confusion.pred_count(label);
        if gold_n == 0 && pred_n == 0 {
            zero_division.push(label.as_str());
        }
        let precision = ratio(tp, pred_n);
        let recall = ratio(tp, gold_n);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class[i] = ClassMetrics {
            precision,
            recall,
            f1,
            support: gold_n,
        };
        macro_sum += f1;
    }

    let mut metadata = BTreeMap::new();
    if !zero_division.is_empty() {
        metadata.insert("zero_division_classes".into(), zero_division.join(","));
    }
    Ok(EvalReport {
        per_class,
        macro_f1: macro_sum / 4.0,
        confusion,
        instances: gold.len(),
        metadata,
    })
}

/// Macro F1 alone, on index-selected instances. Shared by the bootstrap
/// resampling loop.
fn macro_f1_indexed(gold: &[PolarityLabel], pred: &[PolarityLabel], idx: &[usize]) -> f64 {
    let mut tp = [0usize; 4];
    let mut gold_n = [0usize; 4];
    let mut pred_n = [0usize; 4];
    for &i in idx {
        let g = gold[i].index();
        let p = pred[i].index();
        gold_n[g] += 1;
        pred_n[p] += 1;
        if g == p {
            tp[g] += 1;
        }
    }
    let mut sum = 0.0;
    for c in 0..4 {
        let precision = ratio(tp[c], pred_n[c]);
        let recall = ratio(tp[c], gold_n[c]);
        if precision + recall > 0.0 {
            sum += 2.0 * precision * recall / (precision + recall);
        }
    }
    sum / 4.0
}

/// Macro F1 over all instances.
pub fn macro_f1(gold: &[PolarityLabel], pred: &[PolarityLabel]) -> f64 {
    let idx: Vec<usize> = (0..gold.len()).collect();
    macro_f1_indexed(gold, pred, &idx)
}

/// Outcome of the bootstrap significance test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub observed_delta: f64,
    pub p_value: f64,
    pub replicates: usize,
    pub seed: u64,
    /// reporting threshold (conservative Bonferroni-corrected 0.001)
    pub threshold: f64,
    pub significant: bool,
}

/// Default significance threshold reported with every comparison.
pub const SIGNIFICANCE_THRESHOLD: f64 = 0.001;

/// One-sided bootstrap test for "system a beats system b" on macro F1.
///
/// Observed delta d = m(a) - m(b). Each replicate resamples instances
/// with replacement and recomputes the delta; p is the fraction of
/// replicate deltas at or above 2d (ties count as exceeding, the
/// conservative choice). Each replicate draws from its own seed
/// substream, so parallel execution is bitwise identical to sequential.
pub fn bootstrap_test(
    gold: &[PolarityLabel],
    pred_a: &[PolarityLabel],
    pred_b: &[PolarityLabel],
    replicates: usize,
    seed: u64,
) -> Result<BootstrapResult, EvalError> {
    if gold.len() != pred_a.len() || gold.len() != pred_b.len() {
        return Err(EvalError::LengthMismatch {
            gold: gold.len(),
            pred: pred_a.len().max(pred_b.len()),
        });
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = gold.len();
    let all: Vec<usize> = (0..n).collect();
    let observed = macro_f1_indexed(gold, pred_a, &all) - macro_f1_indexed(gold, pred_b, &all);

    let exceed: usize = (0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, r));
            let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let delta =
                macro_f1_indexed(gold, pred_a, &idx) - macro_f1_indexed(gold, pred_b, &idx);
            usize::from(delta >= 2.0 * observed)
        })
        .sum();

    let p_value = exceed as f64 / replicates as f64;
    Ok(BootstrapResult {
        observed_delta: observed,
        p_value,
        replicates,
        seed,
        threshold: SIGNIFICANCE_THRESHOLD,
        significant: p_value < SIGNIFICANCE_THRESHOLD,
    })
}

/// Render a text grid shaped like the published results table: one row
/// per system, per-class Pr/Rec/F1 plus macro F1, values in percent to
/// one decimal.
pub fn render_report(rows: &[(String, &EvalReport)]) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<18}", "System"));
    for label in PolarityLabel::ALL {
        out.push_str(&format!("{:<21}", label.as_str()));
    }
    out.push_str("Macro F1\n");
    out.push_str(&format!("{:<18}", ""));
    for _ in 0..4 {
        out.push_str(&format!("{:<7}{:<7}{:<7}", "Pr", "Rec", "F1"));
    }
    out.push('\n');
    for (name, report) in rows {
        out.push_str(&format!("{name:<18}"));
        for label in PolarityLabel::ALL {
            let m = report.per_class[label.index()];
            out.push_str(&format!(
                "{:<7.1}{:<7.1}{:<7.1}",
                m.precision * 100.0,
                m.recall * 100.0,
                m.f1 * 100.0
            ));
        }
        out.push_str(&format!("{:.1}\n", report.macro_f1 * 100.0));
    }
    out
}

/// Render a confusion matrix as a count grid (rows gold, columns
/// predicted).
pub fn render_confusion(confusion: &ConfusionMatrix) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<12}", "gold\\pred"));
    for label in PolarityLabel::ALL {
        out.push_str(&format!("{:>9}", label.as_str()));
    }
    out.push('\n');
    for gold in PolarityLabel::ALL {
        out.push_str(&format!("{:<12}", gold.as_str()));
        for pred in PolarityLabel::ALL {
            out.push_str(&format!("{:>9}", confusion.0[gold.index()][pred.index()]));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use PolarityLabel::*;

    #[test]
    fn identical_predictions_score_one() {
        let gold = vec![Able, Unable, Unclear, NoInfo, Able];
        let report = score(&gold, &gold).unwrap();
        for label in PolarityLabel::ALL {
            let m = report.per_class[label.index()];
            assert_eq!(m.precision, 1.0);
            assert_eq!(m.recall, 1.0);
            assert_eq!(m.f1, 1.0);
        }
        assert_eq!(report.macro_f1, 1.0);
        assert_eq!(report.confusion.diagonal(), 5);
    }

    #[test]
    fn hand_computed_mixed_case() {
        // Able: P=1.0 R=0.5 F1=2/3; Unable: P=0.5 R=1.0 F1=2/3;
        // absent classes F1=0; macro = (2/3 + 2/3 + 0 + 0)/4 = 1/3
        let gold = vec![Able, Able, Unable];
        let pred = vec![Able, Unable, Unable];
        let report = score(&gold, &pred).unwrap();
        let able = report.per_class[Able.index()];
        assert!((able.precision - 1.0).abs() < 1e-12);
        assert!((able.recall - 0.5).abs() < 1e-12);
        assert!((able.f1 - 2.0 / 3.0).abs() < 1e-12);
        let unable = report.per_class[Unable.index()];
        assert!((unable.precision - 0.5).abs() < 1e-12);
        assert!((unable.recall - 1.0).abs() < 1e-12);
        assert!((report.macro_f1 - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(
            report.metadata.get("zero_division_classes").unwrap(),
            "Unclear,None"
        );
    }

    #[test]
    fn absent_class_flagged_and_zero() {
        let gold = vec![Able, Able];
        let pred = vec![Able, Able];
        let report = score(&gold, &pred).unwrap();
        assert_eq!(report.per_class[Unable.index()].f1, 0.0);
        assert!(report
            .metadata
            .get("zero_division_classes")
            .unwrap()
            .contains("Unable"));
        assert!((report.macro_f1 - 0.25).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(matches!(
            score(&[Able], &[Able, Able]),
            Err(EvalError::LengthMismatch { .. })
        ));
        assert!(matches!(score(&[], &[]), Err(EvalError::Empty)));
    }

    #[test]
    fn micro_consistency() {
        let gold = vec![Able, Unable, Unclear, NoInfo, Able, Unclear];
        let pred = vec![Able, Able, Unclear, NoInfo, Unable, NoInfo];
        let report = score(&gold, &pred).unwrap();
        let tp_sum: usize = PolarityLabel::ALL
            .iter()
            .map(|l| report.confusion.0[l.index()][l.index()])
            .sum();
        assert_eq!(tp_sum, report.confusion.diagonal());
        assert_eq!(report.confusion.total(), gold.len());
    }

    #[test]
    fn bootstrap_identical_predictions_give_p_one() {
        let gold = vec![Able, Unable, Unclear, NoInfo, Able, NoInfo];
        let pred = vec![Able, Able, Unclear, NoInfo, Able, Unclear];
        let result = bootstrap_test(&gold, &pred, &pred, 200, 3).unwrap();
        assert_eq!(result.observed_delta, 0.0);
        // ties count as exceeding: every replicate delta (0) >= 2d (0)
        assert_eq!(result.p_value, 1.0);
    }

    #[test]
    fn bootstrap_detects_dominating_improvement() {
        // 20 instances; a is strictly better on 10, identical elsewhere
        let mut gold = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..20 {
            let label = PolarityLabel::from_index(i % 4);
            gold.push(label);
            a.push(label);
            if i < 10 {
                b.push(PolarityLabel::from_index((i + 1) % 4));
            } else {
                b.push(label);
            }
        }
        let result = bootstrap_test(&gold, &a, &b, 10_000, 17).unwrap();
        assert!(result.observed_delta > 0.0);
        assert!(result.p_value < 0.05, "p = {}", result.p_value);
    }

    #[test]
    fn bootstrap_single_replicate_is_binary() {
        let gold = vec![Able, Unable, Able, NoInfo];
        let a = vec![Able, Unable, Able, NoInfo];
        let b = vec![Able, Able, Able, Able];
        let result = bootstrap_test(&gold, &a, &b, 1, 5).unwrap();
        assert!(result.p_value == 0.0 || result.p_value == 1.0);
    }

    #[test]
    fn bootstrap_deterministic_across_runs() {
        let gold = vec![Able, Unable, Unclear, NoInfo, Able, Unable, NoInfo, NoInfo];
        let a = vec![Able, Unable, Unclear, NoInfo, Able, Able, NoInfo, Able];
        let b = vec![Able, Able, Able, NoInfo, Able, Able, NoInfo, NoInfo];
        let r1 = bootstrap_test(&gold, &a, &b, 2000, 9).unwrap();
        let r2 = bootstrap_test(&gold, &a, &b, 2000, 9).unwrap();
        assert_eq!(r1.p_value, r2.p_value);
        let r3 = bootstrap_test(&gold, &a, &b, 2000, 10).unwrap();
        // different seed may move p slightly; both stay probabilities
        assert!((0.0..=1.0).contains(&r3.p_value));
    }

    #[test]
    fn report_roundtrips_through_json() {
        let gold = vec![Able, Unable, Unclear, NoInfo];
        let pred = vec![Able, Unable, NoInfo, NoInfo];
        let report = score(&gold, &pred).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn render_orders_systems_as_given() {
        let gold = vec![Able, Unable];
        let pred = vec![Able, Unable];
        let report = score(&gold, &pred).unwrap();
        let rows = vec![
            ("rule".to_string(), &report),
            ("svm".to_string(), &report),
            ("cnn".to_string(), &report),
        ];
        let text = render_report(&rows);
        let rule_pos = text.find("rule").unwrap();
        let svm_pos = text.find("svm").unwrap();
        let cnn_pos = text.find("cnn").unwrap();
        assert!(rule_pos < svm_pos && svm_pos < cnn_pos);
        assert!(text.contains("100.0"));
    }
}
