//! Evaluation metrics: ROC-AUC, accuracy, and RMSE.

use super::HarnessError;

fn check_lengths(scores: &[f64], labels: &[f64]) -> Result<(), HarnessError> {
    if scores.len() != labels.len() {
        return Err(HarnessError::Metric(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.is_empty() {
        return Err(HarnessError::Metric("no samples to score".to_string()));
    }
    if !scores.iter().all(|s| s.is_finite()) {
        return Err(HarnessError::Metric("non-finite score".to_string()));
    }
    Ok(())
}

fn check_binary(labels: &[f64]) -> Result<(), HarnessError> {
    if let Some(bad) = labels.iter().find(|&&l| l != 0.0 && l != 1.0) {
        return Err(HarnessError::Metric(format!(
            "classification labels must be 0 or 1, got {bad}"
        )));
    }
    Ok(())
}

/// Area under the ROC curve by the exact pairwise method: the fraction of
/// (positive, negative) pairs the scores rank correctly, with ties counted
/// as half. Quadratic in the class sizes, which is exact and fast at the
/// test-set sizes this crate works with.
///
/// Errors when a class is absent — the ranking quality of a one-class set is
/// undefined, and reporting a number for it would hide a broken split.
pub fn roc_auc(scores: &[f64], labels: &[f64]) -> Result<f64, HarnessError> {
    check_lengths(scores, labels)?;
    check_binary(labels)?;
    let positives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 1.0)
        .map(|(&s, _)| s)
        .collect();
    let negatives: Vec<f64> = scores
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l == 0.0)
        .map(|(&s, _)| s)
        .collect();
    if positives.is_empty() || negatives.is_empty() {
        return Err(HarnessError::Metric(
            "ROC-AUC needs both classes present in the evaluation set".to_string(),
        ));
    }
    let mut ranked = 0.0;
    for &p in &positives {
        for &n in &negatives {
            if p > n {
                ranked += 1.0;
            } else if p == n {
                ranked += 0.5;
            }
        }
    }
    Ok(ranked / (positives.len() as f64 * negatives.len() as f64))
}

/// Fraction of samples whose logit lands on the correct side of zero
/// (scores are logits, so zero is the 0.5-probability boundary).
pub fn accuracy(scores: &[f64], labels: &[f64]) -> Result<f64, HarnessError> {
    check_lengths(scores, labels)?;
    check_binary(labels)?;
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &l)| (s > 0.0) == (l == 1.0))
        .count();
    Ok(correct as f64 / scores.len() as f64)
}

/// Root mean squared error between predictions and targets.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64, HarnessError> {
    check_lengths(predictions, targets)?;
    let mse = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / predictions.len() as f64;
    Ok(mse.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_matches_the_pairwise_hand_count() {
        // Pairs won: (0.35 > 0.1), (0.8 > 0.1), (0.8 > 0.4); lost: (0.35 < 0.4).
        let scores = [0.1, 0.4, 0.35, 0.8];
        let labels = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn auc_hits_the_extremes_for_perfect_and_inverted_rankings() {
        let labels = [0.0, 0.0, 1.0, 1.0];
        assert_eq!(roc_auc(&[-2.0, -1.0, 1.0, 2.0], &labels).unwrap(), 1.0);
        assert_eq!(roc_auc(&[2.0, 1.0, -1.0, -2.0], &labels).unwrap(), 0.0);
    }

    #[test]
    fn tied_scores_count_half() {
        let scores = [0.5, 0.5, 0.5, 0.5];
        let labels = [0.0, 1.0, 0.0, 1.0];
        assert_eq!(roc_auc(&scores, &labels).unwrap(), 0.5);
    }

    #[test]
    fn single_class_sets_are_rejected() {
        assert!(roc_auc(&[0.1, 0.2], &[1.0, 1.0]).is_err());
        assert!(roc_auc(&[0.1, 0.2], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn non_binary_labels_are_rejected() {
        assert!(roc_auc(&[0.1, 0.2], &[0.0, 2.0]).is_err());
        assert!(accuracy(&[0.1, 0.2], &[0.5, 1.0]).is_err());
    }

    #[test]
    fn accuracy_thresholds_logits_at_zero() {
        let scores = [-1.0, 0.5, 2.0, -0.5];
        let labels = [0.0, 1.0, 0.0, 0.0];
        // Correct: -1.0 -> 0, 0.5 -> 1, -0.5 -> 0. Wrong: 2.0 -> 1 but label 0.
        assert_eq!(accuracy(&scores, &labels).unwrap(), 0.75);
    }

    #[test]
    fn rmse_matches_hand_arithmetic() {
        let predictions = [1.0, 2.0, 3.0];
        let targets = [1.0, 2.0, 5.0];
        // Squared errors 0, 0, 4 -> mean 4/3.
        assert!((rmse(&predictions, &targets).unwrap() - (4.0_f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mismatched_or_empty_inputs_are_rejected() {
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(rmse(&[], &[]).is_err());
        assert!(roc_auc(&[f64::NAN, 0.0], &[0.0, 1.0]).is_err());
    }
}
