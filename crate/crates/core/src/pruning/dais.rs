use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sub_seed, top_k_indices, PrunePlan, StrategyConfig};
use crate::dataio::split_indices;
use crate::engine::{adam_step, batch_grads, train, AdamState, Dataset, StepOptions, TrainConfig, Trainer};
use crate::model::PrunableNet;
use crate::{Error, Result};

const TAG_SPLIT: u64 = 0xDA15;
const TAG_SEARCH: u64 = 0xDA16;
const TAG_MASK: u64 = 0xDA17;
const TAG_RETRAIN: u64 = 0xDA18;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Weight-set and mask-set halves of the pruning data.
pub fn dais_split(data: &Dataset<f32>, config: &StrategyConfig) -> Result<(Dataset<f32>, Dataset<f32>)> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(
            "dais needs at least two rows to split".into(),
        ));
    }
    let (w, m) = split_indices(data.len(), 0.5, sub_seed(config.seed, TAG_SPLIT))?;
    Ok((data.subset(&w), data.subset(&m)))
}

/// Training configs of the search phase (weight passes) and the final retrain.
pub fn dais_phase_configs(config: &StrategyConfig) -> (TrainConfig, TrainConfig) {
    let retrain = config.dais.retrain_epochs.unwrap_or(config.prune_epochs / 5);
    let search = config
        .dais
        .epochs
        .unwrap_or(config.prune_epochs.saturating_sub(retrain));
    (
        config.phase(search, TAG_SEARCH),
        config.phase(retrain, TAG_RETRAIN),
    )
}

fn masks(alpha: &[Vec<f64>], temp: f64) -> Vec<Vec<f32>> {
    alpha
        .iter()
        .map(|a| a.iter().map(|&v| sigmoid(temp * v) as f32).collect())
        .collect()
}

/// Differentiable annealed masks searched on a held-out half of the data
/// against a one-step look-ahead of the weights.
pub fn dais(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    let p = &config.dais;
    let (weight_set, mask_set) = dais_split(data, config)?;
    let (search_cfg, retrain_cfg) = dais_phase_configs(config);
    search_cfg.validate()?;
    let mut out = net.clone();
    let n_pr = plan.keep.len();
    let n_layers = out.layers.len();
    let mut alpha: Vec<Vec<f64>> = (0..n_pr)
        .map(|k| vec![p.logit_init; out.layers[k].out_dim()])
        .collect();
    let mut alpha_adam: Vec<AdamState> = alpha.iter().map(|a| AdamState::new(a.len())).collect();
    let mut mask_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_MASK));
    let mut trainer = Trainer::new(&out, &search_cfg);
    let mut temp = p.temp_start;

    for _ in 0..search_cfg.epochs {
        let m = masks(&alpha, temp);
        let gates: Vec<Option<&[f32]>> = (0..n_layers)
            .map(|k| m.get(k).map(|v| v.as_slice()))
            .collect();
        let opts = StepOptions {
            gates: Some(&gates),
            ..StepOptions::default()
        };
        let lr = trainer.lr();
        trainer.run_epoch(&mut out, &weight_set, &opts)?;

        if !p.freeze_logits {
            let trainable = vec![false; n_layers];
            let mask_opts = StepOptions {
                gates: Some(&gates),
                trainable: Some(&trainable),
                ..StepOptions::default()
            };
            let mut widx: Vec<usize> = (0..weight_set.len()).collect();
            let mut midx: Vec<usize> = (0..mask_set.len()).collect();
            widx.shuffle(&mut mask_rng);
            midx.shuffle(&mut mask_rng);
            let bs = search_cfg.batch_size;
            let mut wbatches = widx.chunks(bs).cycle();
            for mchunk in midx.chunks(bs) {
                let wchunk = wbatches.next().expect("weight set is non-empty");
                let wx = weight_set.features.select_rows(wchunk);
                let wy: Vec<usize> = wchunk.iter().map(|&i| weight_set.labels[i]).collect();
                let wg = batch_grads(&out, &wx, &wy, &opts, search_cfg.dropout_rate, &mut mask_rng)?;
                // Speculative plain gradient step.
                let mut ahead = out.clone();
                for (layer, g) in ahead.layers.iter_mut().zip(&wg.grads.layers) {
                    for (w, d) in layer.weights.data_mut().iter_mut().zip(g.weights.data()) {
                        *w = (*w as f64 - lr * d) as f32;
                    }
                    for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                        *b = (*b as f64 - lr * d) as f32;
                    }
                }
                let mx = mask_set.features.select_rows(mchunk);
                let my: Vec<usize> = mchunk.iter().map(|&i| mask_set.labels[i]).collect();
                let mg = batch_grads(&ahead, &mx, &my, &mask_opts, search_cfg.dropout_rate, &mut mask_rng)?;
                for k in 0..n_pr {
                    let gm = mg.grads.gates[k].as_deref().unwrap_or(&[]);
                    let n = m[k].len() as f64;
                    let mean: f64 = m[k].iter().map(|&v| v as f64).sum::<f64>() / n;
                    let reg = p.lambda * 2.0 * (mean - plan.targets[k]) / n;
                    let ga: Vec<f64> = m[k]
                        .iter()
                        .enumerate()
                        .map(|(j, &mj)| {
                            let mj = mj as f64;
                            (gm.get(j).copied().unwrap_or(0.0) + reg) * mj * (1.0 - mj) * temp
                        })
                        .collect();
                    adam_step(&mut alpha[k], &ga, &mut alpha_adam[k], p.mask_lr)?;
                }
            }
        }
        temp *= p.temp_growth;
    }

    // Budget-exact binarisation: top logits survive, their soft mask is folded in.
    let m = masks(&alpha, temp);
    for k in 0..n_pr {
        let ranked: Vec<f64> = alpha[k]
            .iter()
            .zip(&out.layers[k].mask)
            .map(|(&a, &alive)| if alive { a } else { f64::NEG_INFINITY })
            .collect();
        let keep = top_k_indices(&ranked, plan.keep[k]);
        let layer = &mut out.layers[k];
        for &j in &keep {
            let s = m[k][j];
            layer.weights.row_mut(j).iter_mut().for_each(|w| *w *= s);
            layer.bias[j] *= s;
        }
        out.mask_filters(k, &keep)?;
    }
    train(&mut out, data, &retrain_cfg)?;
    Ok(out)
}
