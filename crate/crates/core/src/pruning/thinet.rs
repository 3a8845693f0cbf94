use std::cmp::Ordering;

use super::{sub_seed, top_k_indices, PrunePlan, StrategyConfig};
use crate::engine::{train, Dataset, LinearLayer, Matrix};
use crate::model::PrunableNet;
use crate::{Error, Result};

const TAG_SAMPLES: u64 = 0x7411;
const TAG_TRAIN: u64 = 0x7A11;

/// Contribution of each filter of `layer_index` to its successor.
///
/// `score[j] = |mean_b a[b][j]| · Σ_i |W_next[i][j]|` over unmasked successor
/// rows, i.e. the absolute successor pre-activation produced by a vector that
/// holds the mean activation of filter `j` and zeros elsewhere.
pub fn thinet_scores(net: &PrunableNet, layer_index: usize, samples: &Matrix<f32>) -> Result<Vec<f64>> {
    if layer_index >= net.output_index() {
        return Err(Error::InvalidArgument(format!(
            "layer {layer_index} has no successor to score against"
        )));
    }
    let acts = net.activations(samples, layer_index)?;
    Ok(scores_from(&acts, &net.layers[layer_index + 1]))
}

fn scores_from(acts: &Matrix<f32>, next: &LinearLayer<f32>) -> Vec<f64> {
    let means = acts.column_means();
    (0..next.in_dim())
        .map(|j| {
            let col: f64 = (0..next.out_dim())
                .filter(|&i| next.mask[i])
                .map(|i| (next.weights[(i, j)] as f64).abs())
                .sum();
            means[j].abs() * col
        })
        .collect()
}

/// Least-squares scale for each kept input column of `next`.
///
/// Minimises `Σ_b Σ_i (Σ_l W_il a_bl − Σ_{j∈keep} W_ij s_j a_bj)²` over `s`,
/// where `activations` holds every filter's output before pruning. Filters
/// with no signal get scale 1; a singular system gives all ones.
pub fn thinet_rescale(next: &LinearLayer<f32>, activations: &Matrix<f32>, keep: &[usize]) -> Result<Vec<f64>> {
    let width = next.in_dim();
    if activations.cols() != width {
        return Err(Error::shape(
            "thinet_rescale",
            format!("{width} activation columns"),
            activations.cols(),
        ));
    }
    if let Some(&bad) = keep.iter().find(|&&j| j >= width) {
        return Err(Error::InvalidArgument(format!("kept filter {bad} out of range")));
    }
    let rows: Vec<usize> = (0..next.out_dim()).filter(|&i| next.mask[i]).collect();
    // Gram matrices of successor columns and activation columns.
    let wgram = |a: usize, b: usize| -> f64 {
        rows.iter()
            .map(|&i| next.weights[(i, a)] as f64 * next.weights[(i, b)] as f64)
            .sum()
    };
    let agram = |a: usize, b: usize| -> f64 {
        (0..activations.rows())
            .map(|r| activations[(r, a)] as f64 * activations[(r, b)] as f64)
            .sum()
    };
    let n = keep.len();
    let mut scales = vec![1.0; n];
    let live: Vec<usize> = (0..n)
        .filter(|&p| wgram(keep[p], keep[p]) * agram(keep[p], keep[p]) > 0.0)
        .collect();
    if live.is_empty() {
        return Ok(scales);
    }
    let (wfull, afull): (Vec<Vec<f64>>, Vec<Vec<f64>>) = live
        .iter()
        .map(|&p| {
            let j = keep[p];
            ((0..width).map(|l| wgram(j, l)).collect(), (0..width).map(|l| agram(j, l)).collect())
        })
        .unzip();
    let m = live.len();
    let mut g = vec![vec![0.0; m]; m];
    let mut r = vec![0.0; m];
    for a in 0..m {
        for b in 0..m {
            let kb = keep[live[b]];
            g[a][b] = wfull[a][kb] * afull[a][kb];
        }
        r[a] = (0..width).map(|l| wfull[a][l] * afull[a][l]).sum();
    }
    if let Some(s) = solve(g, r) {
        for (a, &p) in live.iter().enumerate() {
            scales[p] = s[a];
        }
    }
    Ok(scales)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a
        .iter()
        .enumerate()
        .map(|(i, row)| row[i].abs())
        .fold(0.0, f64::max);
    let tol = scale * 1e-10;
    for col in 0..n {
        let piv = (col..n).max_by(|&x, &y| {
            a[x][col]
                .abs()
                .partial_cmp(&a[y][col].abs())
                .unwrap_or(Ordering::Equal)
        })?;
        // Also rejects a NaN pivot.
        if a[piv][col].abs().partial_cmp(&tol) != Some(Ordering::Greater) {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                let (upper, lower) = a.split_at_mut(row);
                for (t, &p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *t -= f * p;
                }
                b[row] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|c| a[row][c] * x[c]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Physically removes the lowest-scoring filters layer by layer, rescales
/// the successor's surviving columns, then retrains once.
pub fn thinet_prune(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    let mut out = thinet_surgery(net, plan, data, config)?;
    train(&mut out, data, &config.phase(config.prune_epochs, TAG_TRAIN))?;
    Ok(out)
}

/// The pruning and rescaling steps of [`thinet_prune`] without the retrain.
pub fn thinet_surgery(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    let fraction = (config.thinet.samples as f64 / data.len().max(1) as f64).min(1.0);
    let samples = data
        .sample_fraction(fraction, sub_seed(config.seed, TAG_SAMPLES))
        .features;
    let mut out = net.clone();
    for (k, &keep) in plan.keep.iter().enumerate() {
        let acts = out.activations(&samples, k)?;
        let scores = scores_from(&acts, &out.layers[k + 1]);
        let chosen = top_k_indices(&scores, keep);
        let scales = thinet_rescale(&out.layers[k + 1], &acts, &chosen)?;
        out.shrink_layer(k, &chosen)?;
        let next = &mut out.layers[k + 1];
        for i in 0..next.out_dim() {
            for (c, &s) in scales.iter().enumerate() {
                next.weights[(i, c)] = (next.weights[(i, c)] as f64 * s) as f32;
            }
        }
    }
    Ok(out)
}
