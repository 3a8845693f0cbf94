use crate::{Error, Result};

/// Confusion matrix indexed `[truth][prediction]`.
pub fn confusion_matrix(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
    if predictions.len() != labels.len() {
        return Err(Error::shape(
            "confusion_matrix",
            format!("{} predictions", labels.len()),
            predictions.len(),
        ));
    }
    let mut cm = vec![vec![0usize; num_classes]; num_classes];
    for (&p, &t) in predictions.iter().zip(labels) {
        let bad = if t >= num_classes { t } else { p };
        if t >= num_classes || p >= num_classes {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: num_classes,
            });
        }
        cm[t][p] += 1;
    }
    Ok(cm)
}

/// Per-class F1. A class with a zero denominator scores 0.
pub fn per_class_f1(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<Vec<f64>> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let cm = confusion_matrix(predictions, labels, num_classes)?;
    Ok((0..num_classes)
        .map(|c| {
            let tp = cm[c][c] as f64;
            let fp = (0..num_classes).map(|t| cm[t][c]).sum::<usize>() as f64 - tp;
            let fn_ = cm[c].iter().sum::<usize>() as f64 - tp;
            let denom = 2.0 * tp + fp + fn_;
            if denom == 0.0 {
                0.0
            } else {
                2.0 * tp / denom
            }
        })
        .collect())
}

/// Unweighted mean of the per-class F1 scores.
pub fn macro_f1(predictions: &[usize], labels: &[usize], num_classes: usize) -> Result<f64> {
    let f = per_class_f1(predictions, labels, num_classes)?;
    Ok(f.iter().sum::<f64>() / num_classes as f64)
}
