//! Accuracy, binary F1, ROC curve and AUC.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("no instances")]
    Empty,
    #[error("ROC/AUC needs both positive and negative instances")]
    SingleClass,
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn from_predictions(preds: &[usize], truth: &[usize], positive: usize) -> Result<Self, MetricsError> {
        check_lengths(preds.len(), truth.len())?;
        let mut c = Confusion::default();
        for (&p, &t) in preds.iter().zip(truth) {
            match (p == positive, t == positive) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, true) => c.fn_ += 1,
                (false, false) => c.tn += 1,
            }
        }
        Ok(c)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// `2tp / (2tp + fp + fn)`, zero when nothing is positive.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            0.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub f1: f64,
    pub auc: f64,
    pub n: usize,
    pub confusion: Confusion,
}

/// Accuracy and F1 of hard decisions, AUC of `scores` (higher = more positive).
pub fn evaluate(preds: &[usize], truth: &[usize], scores: &[f64], positive: usize) -> Result<MetricsReport, MetricsError> {
    check_lengths(scores.len(), truth.len())?;
    let confusion = Confusion::from_predictions(preds, truth, positive)?;
    let positives: Vec<bool> = truth.iter().map(|&t| t == positive).collect();
    Ok(MetricsReport {
        accuracy: accuracy(preds, truth)?,
        f1: confusion.f1(),
        auc: auc(scores, &positives)?,
        n: truth.len(),
        confusion,
    })
}

fn check_lengths(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        Err(MetricsError::LengthMismatch(a, b))
    } else if a == 0 {
        Err(MetricsError::Empty)
    } else {
        Ok(())
    }
}

pub fn accuracy(preds: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    check_lengths(preds.len(), truth.len())?;
    let hits = preds.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / truth.len() as f64)
}

pub fn f1(preds: &[usize], truth: &[usize], positive: usize) -> Result<f64, MetricsError> {
    Ok(Confusion::from_predictions(preds, truth, positive)?.f1())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Instances scoring at or above this value are called positive. The
    /// first point uses `+∞`.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

/// Cumulative `(fp, tp, threshold)` counts at each distinct score, descending.
fn sweep(scores: &[f64], positives: &[bool]) -> Result<(Vec<(u64, u64, f64)>, u64, u64), MetricsError> {
    if scores.len() != positives.len() {
        return Err(MetricsError::LengthMismatch(scores.len(), positives.len()));
    }
    if let Some(&s) = scores.iter().find(|s| !s.is_finite()) {
        return Err(MetricsError::NonFiniteScore(s));
    }
    let n_pos = positives.iter().filter(|&&p| p).count() as u64;
    let n_neg = positives.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricsError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut steps = vec![(0, 0, f64::INFINITY)];
    let (mut fp, mut tp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if positives[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        steps.push((fp, tp, threshold));
    }
    Ok((steps, n_pos, n_neg))
}

pub fn roc_points(scores: &[f64], positives: &[bool]) -> Result<RocCurve, MetricsError> {
    let (steps, n_pos, n_neg) = sweep(scores, positives)?;
    let points = steps
        .into_iter()
        .map(|(fp, tp, threshold)| RocPoint {
            fpr: fp as f64 / n_neg as f64,
            tpr: tp as f64 / n_pos as f64,
            threshold,
        })
        .collect();
    Ok(RocCurve { points })
}

/// Trapezoidal area under the ROC curve. Accumulated in integer counts, so it
/// equals the Mann-Whitney statistic up to one final division.
pub fn auc(scores: &[f64], positives: &[bool]) -> Result<f64, MetricsError> {
    let (steps, n_pos, n_neg) = sweep(scores, positives)?;
    // twice the area, in units of 1 / (n_pos · n_neg)
    let doubled: u128 = steps
        .windows(2)
        .map(|w| u128::from(w[1].0 - w[0].0) * u128::from(w[1].1 + w[0].1))
        .sum();
    Ok(doubled as f64 / (2.0 * n_pos as f64 * n_neg as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap(), 0.75);
        assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[], &[]), Err(MetricsError::Empty));
        assert_eq!(accuracy(&[1], &[1, 0]), Err(MetricsError::LengthMismatch(1, 2)));
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(&[0, 1, 0], &[0, 1, 0], 0).unwrap(), 1.0);
        // tp = 8, fp = 2, fn = 4, tn = 1
        let mut preds = vec![0; 10];
        let mut truth = vec![0; 8];
        truth.extend([1, 1]);
        preds.extend([1; 5]);
        truth.extend([0, 0, 0, 0, 1]);
        let c = Confusion::from_predictions(&preds, &truth, 0).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_, c.tn), (8, 2, 4, 1));
        assert!((f1(&preds, &truth, 0).unwrap() - 16.0 / 22.0).abs() < 1e-15);
        assert_eq!(f1(&[1, 1], &[1, 1], 0).unwrap(), 0.0);
        assert_eq!(f1(&[], &[], 0), Err(MetricsError::Empty));
    }

    #[test]
    fn roc_examples() {
        let scores = [0.8, 0.4, 0.6, 0.2];
        let pos = [true, true, false, false];
        let curve = roc_points(&scores, &pos).unwrap();
        let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fpr, p.tpr)).collect();
        assert_eq!(pts, vec![(0.0, 0.0), (0.0, 0.5), (0.5, 0.5), (0.5, 1.0), (1.0, 1.0)]);
        assert_eq!(auc(&scores, &pos).unwrap(), 0.75);

        let tied = roc_points(&[0.3; 4], &pos).unwrap();
        assert_eq!(tied.points.len(), 2);
        assert_eq!((tied.points[1].fpr, tied.points[1].tpr), (1.0, 1.0));
        assert_eq!(auc(&[0.3; 4], &pos).unwrap(), 0.5);

        let separated = [0.9, 0.8, 0.1, 0.2];
        let curve = roc_points(&separated, &pos).unwrap();
        assert!(curve.points.iter().any(|p| p.fpr == 0.0 && p.tpr == 1.0));
        assert_eq!(auc(&separated, &pos).unwrap(), 1.0);
    }

    #[test]
    fn roc_errors() {
        assert_eq!(roc_points(&[0.1, 0.2], &[true, true]), Err(MetricsError::SingleClass));
        assert_eq!(auc(&[0.1, 0.2], &[false, false]), Err(MetricsError::SingleClass));
        assert_eq!(auc(&[0.1], &[true, false]), Err(MetricsError::LengthMismatch(1, 2)));
        assert!(matches!(auc(&[f64::NAN, 0.1], &[true, false]), Err(MetricsError::NonFiniteScore(_))));
    }

    #[test]
    fn report_combines_metrics() {
        let r = evaluate(&[0, 1, 1, 1], &[0, 1, 0, 1], &[0.9, 0.2, 0.5, 0.1], 0).unwrap();
        assert_eq!(r.n, 4);
        assert_eq!(r.accuracy, 0.75);
        assert_eq!(r.confusion.total(), 4);
        assert_eq!(r.auc, 1.0);
        assert!((r.f1 - 2.0 / 3.0).abs() < 1e-15);
    }
}
