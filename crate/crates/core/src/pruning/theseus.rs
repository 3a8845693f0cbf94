//! Layer-replacement strategies.
//!
//! `bert_theseus` trains one successor layer per block of hidden layers while
//! randomly routing batches through either the successor or the frozen
//! original block. `iterative_theseus` swaps one layer at a time for a
//! narrower fresh layer and trains it in isolation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{sub_seed, PrunePlan, StrategyConfig};
use crate::engine::stack::{stack_backward, stack_forward, Mode};
use crate::engine::{
    adam_step, lr_at_epoch, softmax_cross_entropy, train, train_with, AdamState, Dataset,
    LinearLayer, StepOptions,
};
use crate::model::{Net, PrunableNet};
use crate::{Error, Result};

const TAG_SUCC_INIT: u64 = 0xBE27;
const TAG_ROUTE: u64 = 0xBE28;
const TAG_DROPOUT: u64 = 0xBE29;
const TAG_LAYER: u64 = 0x17E0;
const TAG_FINETUNE: u64 = 0x17FF;

/// `ceil(1 / percent)` hidden layers per replaced block.
pub fn bert_block_size(percent: f64) -> Result<usize> {
    if !(percent > 0.0 && percent <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "block replacement needs percent in (0, 1], got {percent}"
        )));
    }
    Ok(((1.0 / percent) - 1e-9).ceil().max(1.0) as usize)
}

/// Everything produced by one block-replacement run.
#[derive(Debug, Clone)]
pub struct BertTheseusRun {
    /// The original net as it stands after training; every original layer is frozen.
    pub pre_swap: PrunableNet,
    /// Input layer, successors, output layer.
    pub pruned: PrunableNet,
    /// Inclusive layer-index span of every block in the original net.
    pub blocks: Vec<(usize, usize)>,
    /// Replacement probability used in each epoch.
    pub schedule: Vec<f64>,
}

fn replace_probability(e: usize, ramp: usize, p_start: f64, p_end: f64) -> f64 {
    if e >= ramp {
        1.0
    } else {
        p_start + (p_end - p_start) * e as f64 / ramp as f64
    }
}

pub fn bert_theseus(
    net: &PrunableNet,
    percent: f64,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    Ok(bert_theseus_run(net, percent, data, config)?.pruned)
}

pub fn bert_theseus_run(
    net: &PrunableNet,
    percent: f64,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<BertTheseusRun> {
    let block = bert_block_size(percent)?;
    let out_idx = net.output_index();
    let blocks: Vec<(usize, usize)> = (1..out_idx)
        .step_by(block)
        .map(|first| (first, (first + block - 1).min(out_idx - 1)))
        .collect();
    let mut init_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_SUCC_INIT));
    let mut successors: Vec<LinearLayer<f32>> = blocks
        .iter()
        .map(|&(a, b)| LinearLayer::init(net.layers[a].in_dim(), net.layers[b].out_dim(), &mut init_rng))
        .collect();
    let mut adam: Vec<(AdamState, AdamState)> = successors
        .iter()
        .map(|s| (AdamState::new(s.weights.data().len()), AdamState::new(s.bias.len())))
        .collect();

    let cfg = config.phase(config.prune_epochs, TAG_DROPOUT);
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let ramp = config.bert.ramp_epochs.unwrap_or(cfg.epochs / 2);
    let mut route_rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_ROUTE));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut schedule = Vec::with_capacity(cfg.epochs);

    for e in 0..cfg.epochs {
        let p = replace_probability(e, ramp, config.bert.p_start, config.bert.p_end);
        schedule.push(p);
        let lr = lr_at_epoch(&cfg, e);
        let mut order: Vec<usize> = (0..data.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let routes: Vec<bool> = blocks.iter().map(|_| route_rng.gen_bool(p.clamp(0.0, 1.0))).collect();
            let x = data.features.select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            // Assemble the mixed stack and remember where each active successor sits.
            let mut refs: Vec<&LinearLayer<f32>> = vec![&net.layers[0]];
            let mut slots: Vec<(usize, usize)> = Vec::new();
            for (b, &(first, last)) in blocks.iter().enumerate() {
                if routes[b] {
                    slots.push((refs.len(), b));
                    refs.push(&successors[b]);
                } else {
                    refs.extend(&net.layers[first..=last]);
                }
            }
            refs.push(&net.layers[out_idx]);
            if slots.is_empty() {
                // Nothing trainable on this path; keep the dropout stream aligned.
                stack_forward(&refs, &x, None, net.leaky_slope, Mode::Train { dropout: cfg.dropout_rate, rng: &mut rng })?;
                continue;
            }
            let mut need = vec![false; refs.len()];
            for &(pos, _) in &slots {
                need[pos] = true;
            }
            let pass = stack_forward(&refs, &x, None, net.leaky_slope, Mode::Train { dropout: cfg.dropout_rate, rng: &mut rng })?;
            let (_, grad) = softmax_cross_entropy(&pass.output, &y)?;
            let grads = stack_backward(&refs, &pass, &grad, None, net.leaky_slope, Some(&need), false)?;
            drop(refs);
            for (pos, b) in slots {
                let g = &grads.layers[pos];
                let (aw, ab) = &mut adam[b];
                adam_step(successors[b].weights.data_mut(), g.weights.data(), aw, lr)?;
                adam_step(&mut successors[b].bias, &g.bias, ab, lr)?;
            }
        }
    }

    let mut layers = vec![net.layers[0].clone()];
    layers.extend(successors);
    layers.push(net.layers[out_idx].clone());
    let mut pruned = Net::from_layers(layers)?;
    pruned.leaky_slope = net.leaky_slope;
    Ok(BertTheseusRun {
        pre_swap: net.clone(),
        pruned,
        blocks,
        schedule,
    })
}

/// Replaces every planned layer, front to back, with a fresh layer at the
/// planned width and trains it with the rest of the net frozen.
pub fn iterative_theseus(
    net: &PrunableNet,
    plan: &PrunePlan,
    data: &Dataset<f32>,
    config: &StrategyConfig,
) -> Result<PrunableNet> {
    let replaced = plan.keep.len();
    let per_layer = config
        .iterative
        .per_layer_epochs
        .unwrap_or_else(|| (config.prune_epochs / (2 * replaced.max(1))).max(1));
    let radius = config.iterative.neighbor_radius;
    let mut out = net.clone();
    let n_layers = out.layers.len();
    for (k, &keep) in plan.keep.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(config.seed, TAG_LAYER + k as u64));
        let fresh = LinearLayer::init(out.layers[k].in_dim(), keep, &mut rng);
        out.layers[k] = fresh;
        let next = &mut out.layers[k + 1];
        let cols: Vec<usize> = (0..keep.min(next.in_dim())).collect();
        next.weights = next.weights.select_cols(&cols);
        let trainable: Vec<bool> = (0..n_layers)
            .map(|i| i + radius >= k && i <= k + radius)
            .collect();
        let opts = StepOptions {
            trainable: Some(&trainable),
            ..StepOptions::default()
        };
        train_with(&mut out, data, &config.phase(per_layer, TAG_LAYER + k as u64), &opts)?;
    }
    let used = per_layer * replaced;
    let finetune = config
        .iterative
        .finetune_epochs
        .unwrap_or(config.prune_epochs.saturating_sub(used));
    train(&mut out, data, &config.phase(finetune, TAG_FINETUNE))?;
    Ok(out)
}
