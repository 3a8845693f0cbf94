//! Elementwise activations, dropout, and the classification loss.

use rand::Rng;

use super::{Matrix, Scalar};
use crate::{Error, Result};

/// Default negative-side slope of the leaky ReLU.
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

pub fn leaky_relu<S: Scalar>(x: &Matrix<S>, slope: f64) -> Matrix<S> {
    let s = S::of(slope);
    x.map(|v| if v >= S::zero() { v } else { v * s })
}

/// Chain rule through the leaky ReLU: `grad · (1 | slope)` chosen by the sign of the input.
pub fn leaky_relu_backward<S: Scalar>(x: &Matrix<S>, grad: &Matrix<S>, slope: f64) -> Matrix<S> {
    let s = S::of(slope);
    let data = x
        .data()
        .iter()
        .zip(grad.data())
        .map(|(&v, &g)| if v >= S::zero() { g } else { g * s })
        .collect();
    Matrix::from_vec(x.rows(), x.cols(), data).expect("same shape")
}

/// Inverted dropout. Returns the output and the per-element scale that was
/// applied (0 or `1/(1-rate)`), which is also the backward multiplier.
pub fn dropout<S: Scalar, R: Rng + ?Sized>(
    x: &Matrix<S>,
    rate: f64,
    training: bool,
    rng: &mut R,
) -> Result<(Matrix<S>, Option<Matrix<S>>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must be in [0, 1), got {rate}"
        )));
    }
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = S::of(1.0 / (1.0 - rate));
    let scale: Vec<S> = (0..x.data().len())
        .map(|_| if rng.gen::<f64>() < rate { S::zero() } else { keep })
        .collect();
    let scale = Matrix::from_vec(x.rows(), x.cols(), scale).expect("same shape");
    let out = x
        .data()
        .iter()
        .zip(scale.data())
        .map(|(&v, &m)| v * m)
        .collect();
    Ok((
        Matrix::from_vec(x.rows(), x.cols(), out).expect("same shape"),
        Some(scale),
    ))
}

/// Row-wise softmax computed in `f64`.
pub fn softmax<S: Scalar>(logits: &Matrix<S>) -> Matrix<f64> {
    let mut out = Matrix::<f64>::zeros(logits.rows(), logits.cols());
    for b in 0..logits.rows() {
        let row = logits.row(b);
        let max = row
            .iter()
            .map(|v| v.f64())
            .fold(f64::NEG_INFINITY, f64::max);
        let dst = out.row_mut(b);
        let mut sum = 0.0;
        for (d, v) in dst.iter_mut().zip(row) {
            *d = (v.f64() - max).exp();
            sum += *d;
        }
        dst.iter_mut().for_each(|d| *d /= sum);
    }
    out
}

/// Mean cross-entropy over the batch and its gradient w.r.t. the logits.
pub fn softmax_cross_entropy<S: Scalar>(
    logits: &Matrix<S>,
    labels: &[usize],
) -> Result<(f64, Matrix<S>)> {
    let (batch, classes) = logits.shape();
    if labels.len() != batch {
        return Err(Error::shape(
            "softmax_cross_entropy",
            format!("{batch} labels"),
            labels.len(),
        ));
    }
    if batch == 0 {
        return Err(Error::EmptyDataset);
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes) {
        return Err(Error::LabelOutOfRange { label, classes });
    }
    let probs = softmax(logits);
    let n = batch as f64;
    let mut loss = 0.0;
    let mut grad = Matrix::<S>::zeros(batch, classes);
    for (b, &label) in labels.iter().enumerate() {
        let row = logits.row(b);
        // log-sum-exp form keeps confident rows accurate.
        let max = row.iter().map(|v| v.f64()).fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v.f64() - max).exp()).sum::<f64>().ln();
        loss += lse - row[label].f64();
        for c in 0..classes {
            let onehot = if c == label { 1.0 } else { 0.0 };
            grad[(b, c)] = S::of((probs[(b, c)] - onehot) / n);
        }
    }
    Ok((loss / n, grad))
}
