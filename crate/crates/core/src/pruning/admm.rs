use std::cmp::Ordering;

use super::{PrunePlan, StrategyConfig};
use crate::engine::{adam_step, train_with, AdamState, Dataset, Matrix, StepOptions, Trainer};
use crate::model::PrunableNet;
use crate::Result;

const TAG_SEARCH: u64 = 0xAD33;
const TAG_RETRAIN: u64 = 0xAD34;

/// Indices of the `k` largest values, lower index first on ties, returned sorted.
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

/// Keeps the `k` entries of largest magnitude and zeroes the rest.
pub fn project_top_k(values: &[f32], k: usize) -> Vec<f32> {
    let mags: Vec<f64> = values.iter().map(|v| (*v as f64).abs()).collect();
    let mut out = vec![0.0; values.len()];
    for i in top_k_indices(&mags, k) {
        out[i] = values[i];
    }
    out
}

/// Per-epoch diagnostics of the ADMM search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdmmTrace {
    /// `‖W − Z‖` over the prunable layers after each dual update.
    pub primal_residual: Vec<f64>,
    pub loss: Vec<f64>,
}

pub fn admm_joint(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    admm_joint_traced(net, plan, data, config).map(|(n, _)| n)
}

/// Z-projection of one layer: top `k` of `W + U` among weights in rows kept by `rows`.
fn project_layer(w: &Matrix<f32>, u: &[f32], rows: &[bool], k: usize) -> Vec<f32> {
    let cols = w.cols();
    let v: Vec<f32> = w.data().iter().zip(u).map(|(a, b)| a + b).collect();
    let mags: Vec<f64> = v
        .iter()
        .enumerate()
        .map(|(i, x)| if rows[i / cols] { (*x as f64).abs() } else { -1.0 })
        .collect();
    let eligible = rows.iter().filter(|&&r| r).count() * cols;
    let mut z = vec![0.0; v.len()];
    for i in top_k_indices(&mags, k.min(eligible)) {
        z[i] = v[i];
    }
    z
}

/// Joint weight-sparsity and filter-mask search by ADMM, followed by a
/// hard projection and a short masked retrain.
pub fn admm_joint_traced(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<(PrunableNet, AdmmTrace)> {
    let p = &config.admm;
    let retrain_epochs = p.retrain_epochs.unwrap_or(config.prune_epochs / 5);
    let epochs = p
        .epochs
        .unwrap_or(config.prune_epochs.saturating_sub(retrain_epochs));
    let mut out = net.clone();
    let n_pr = plan.keep.len();
    let k_weights: Vec<usize> = (0..n_pr)
        .map(|k| {
            let total = out.layers[k].weights.data().len() as f64;
            (p.k_fraction * plan.percent * total).round() as usize
        })
        .collect();

    let mut z: Vec<Vec<f32>> = (0..n_pr).map(|k| out.layers[k].weights.data().to_vec()).collect();
    let mut u: Vec<Vec<f32>> = z.iter().map(|w| vec![0.0; w.len()]).collect();
    let mut m: Vec<Vec<f32>> = (0..n_pr)
        .map(|k| out.layers[k].mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut zm: Vec<Vec<bool>> = (0..n_pr).map(|k| out.layers[k].mask.clone()).collect();
    let mut m_adam: Vec<AdamState> = m.iter().map(|v| AdamState::new(v.len())).collect();
    let mut trace = AdmmTrace::default();

    let cfg = config.phase(epochs, TAG_SEARCH);
    cfg.validate()?;
    let mut trainer = Trainer::new(&out, &cfg);
    for _ in 0..epochs {
        let lr = trainer.lr();
        let order = trainer.shuffled(data.len());
        let mut total = 0.0;
        let mut batches = 0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = data.features.select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            let mut bg = {
                let gates: Vec<Option<&[f32]>> = (0..out.layers.len())
                    .map(|k| m.get(k).map(|v| v.as_slice()))
                    .collect();
                let opts = StepOptions {
                    gates: Some(&gates),
                    ..StepOptions::default()
                };
                trainer.batch_grads(&out, &x, &y, &opts)?
            };
            for k in 0..n_pr {
                let w = out.layers[k].weights.data();
                let g = bg.grads.layers[k].weights.data_mut();
                for (i, gi) in g.iter_mut().enumerate() {
                    *gi += p.rho * (w[i] as f64 - z[k][i] as f64 + u[k][i] as f64);
                }
                let task = bg.grads.gates[k].as_deref().unwrap_or(&[]);
                let mg: Vec<f64> = m[k]
                    .iter()
                    .enumerate()
                    .map(|(j, &mj)| {
                        let mj = mj as f64;
                        let tie = if zm[k][j] { 1.0 } else { 0.0 };
                        task.get(j).copied().unwrap_or(0.0)
                            + p.mask_penalty * (2.0 * (mj - tie) + (1.0 - 2.0 * mj))
                    })
                    .collect();
                adam_step(&mut m[k], &mg, &mut m_adam[k], p.mask_lr)?;
                for (v, &alive) in m[k].iter_mut().zip(&out.layers[k].mask) {
                    *v = if alive { v.clamp(0.0, 1.0) } else { 0.0 };
                }
            }
            trainer.apply(&mut out, &bg.grads.layers, &StepOptions::default(), lr)?;
            total += bg.loss;
            batches += 1;
        }
        trainer.epoch += 1;
        trace.loss.push(total / batches.max(1) as f64);

        let mut residual = 0.0;
        for k in 0..n_pr {
            let mv: Vec<f64> = m[k].iter().map(|&v| v as f64).collect();
            let kept = top_k_indices(&mv, plan.keep[k]);
            zm[k] = vec![false; mv.len()];
            for j in kept {
                zm[k][j] = true;
            }
            z[k] = project_layer(&out.layers[k].weights, &u[k], &zm[k], k_weights[k]);
            let w = out.layers[k].weights.data();
            for i in 0..w.len() {
                let d = w[i] - z[k][i];
                u[k][i] += d;
                residual += (d as f64) * (d as f64);
            }
        }
        trace.primal_residual.push(residual.sqrt());
    }

    // Fold the relaxed mask into the kept filters, then hard-apply both projections.
    let mut support: Vec<Option<Vec<bool>>> = vec![None; out.layers.len()];
    for k in 0..n_pr {
        if epochs == 0 {
            let mv: Vec<f64> = m[k].iter().map(|&v| v as f64).collect();
            zm[k] = vec![false; mv.len()];
            for j in top_k_indices(&mv, plan.keep[k]) {
                zm[k][j] = true;
            }
            z[k] = project_layer(&out.layers[k].weights, &u[k], &zm[k], k_weights[k]);
        }
        let keep: Vec<usize> = (0..zm[k].len()).filter(|&j| zm[k][j]).collect();
        let layer = &mut out.layers[k];
        for &j in &keep {
            let s = m[k][j];
            layer.weights.row_mut(j).iter_mut().for_each(|w| *w *= s);
            layer.bias[j] *= s;
        }
        let sup: Vec<bool> = z[k].iter().map(|v| *v != 0.0).collect();
        for (w, &s) in layer.weights.data_mut().iter_mut().zip(&sup) {
            if !s {
                *w = 0.0;
            }
        }
        out.mask_filters(k, &keep)?;
        support[k] = Some(sup);
    }
    let opts = StepOptions {
        support: Some(&support),
        ..StepOptions::default()
    };
    train_with(&mut out, data, &config.phase(retrain_epochs, TAG_RETRAIN), &opts)?;
    Ok((out, trace))
}
