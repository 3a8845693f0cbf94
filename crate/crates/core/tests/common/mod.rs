#![allow(dead_code)]

pub mod gradcheck;

use prunebench::engine::stack::{stack_backward, stack_forward, Mode, StackGrads};
use prunebench::engine::{softmax_cross_entropy, train, Dataset, Matrix, TrainConfig};
use prunebench::pruning::{Strategy, StrategyConfig};
use prunebench::{build_model, ModelConfig, Net, PrunableNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gaussian-ish blobs around random class centres.
pub fn blobs(per_class: usize, width: usize, classes: usize, seed: u64) -> Dataset<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centres: Vec<Vec<f32>> = (0..classes)
        .map(|_| (0..width).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let mut data = Vec::with_capacity(per_class * classes * width);
    let mut labels = Vec::with_capacity(per_class * classes);
    for i in 0..per_class * classes {
        let c = i % classes;
        for v in &centres[c] {
            let noise: f32 = (0..3).map(|_| rng.gen_range(-0.5..0.5)).sum();
            data.push(v + noise);
        }
        labels.push(c);
    }
    Dataset::new(
        Matrix::from_vec(labels.len(), width, data).unwrap(),
        labels,
        classes,
    )
    .unwrap()
}

pub fn tiny_model() -> ModelConfig {
    ModelConfig {
        input_width: 12,
        base_filters: 10,
        hidden_layers: 4,
        width_step: 1,
        num_classes: 3,
    }
}

pub fn quick_train(epochs: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 16,
        ..TrainConfig::default().with_epochs(epochs)
    }
}

/// A tiny trained net and the data it was trained on.
pub fn trained_tiny(seed: u64) -> (PrunableNet, Dataset<f32>) {
    let data = blobs(40, 12, 3, seed);
    let mut net = build_model(&tiny_model(), seed).unwrap();
    train(&mut net, &data, &quick_train(8).with_seed(seed)).unwrap();
    (net, data)
}

pub fn quick_strategy(strategy: Strategy, percent: f64, seed: u64) -> StrategyConfig {
    let mut c = StrategyConfig::new(strategy, percent);
    c.prune_epochs = 6;
    c.seed = seed;
    c.train = quick_train(6);
    c
}

pub fn max_abs_diff(a: &Matrix<f32>, b: &Matrix<f32>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (*x as f64 - *y as f64).abs())
        .fold(0.0, f64::max)
}

fn grads_of(
    net: &Net<f64>,
    x: &Matrix<f64>,
    y: &[usize],
    gates: Option<&[Option<&[f64]>]>,
) -> (f64, StackGrads<f64>) {
    let refs = net.layer_refs();
    let pass = stack_forward::<f64, ChaCha8Rng>(&refs, x, gates, net.leaky_slope, Mode::Eval).unwrap();
    let (loss, g) = softmax_cross_entropy(&pass.output, y).unwrap();
    let grads = stack_backward(&refs, &pass, &g, gates, net.leaky_slope, None, true).unwrap();
    (loss, grads)
}

/// Largest gap between gradients of a net whose per-filter mask multiplies
/// the linear output and the same net with the mask folded into its weight
/// rows and biases. Folded-row gradients are pulled back through the fold
/// (scaled by the mask) so both sides are derivatives w.r.t. the same weights.
pub fn mask_placement_gap(seed: u64, soft: bool) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let depth = rng.gen_range(2..5);
    let mut dims = vec![rng.gen_range(2..7)];
    for _ in 0..depth {
        dims.push(rng.gen_range(2..7));
    }
    let net = Net::<f64>::from_dims(&dims, seed).unwrap();
    let masks: Vec<Vec<f64>> = net
        .layers
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let last = k + 1 == net.layers.len();
            (0..l.out_dim())
                .map(|j| match (last, soft) {
                    (true, _) => 1.0,
                    (false, true) => rng.gen_range(0.0..1.0),
                    (false, false) => f64::from(j == 0 || rng.gen_bool(0.6)),
                })
                .collect()
        })
        .collect();
    let b = rng.gen_range(1..6);
    let x = Matrix::from_vec(b, dims[0], (0..b * dims[0]).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let classes = *dims.last().unwrap();
    let y: Vec<usize> = (0..b).map(|_| rng.gen_range(0..classes)).collect();

    // Mask after the linear layer: hard masks for binary values, gates for soft ones.
    let mut after = net.clone();
    let gate_refs: Vec<Option<&[f64]>> = masks.iter().map(|m| Some(m.as_slice())).collect();
    let (loss_a, ga) = if soft {
        grads_of(&after, &x, &y, Some(&gate_refs))
    } else {
        for (l, m) in after.layers.iter_mut().zip(&masks) {
            l.mask = m.iter().map(|&v| v == 1.0).collect();
        }
        grads_of(&after, &x, &y, None)
    };

    let mut folded = net.clone();
    for (l, m) in folded.layers.iter_mut().zip(&masks) {
        for (j, &mj) in m.iter().enumerate() {
            l.weights.row_mut(j).iter_mut().for_each(|w| *w *= mj);
            l.bias[j] *= mj;
        }
    }
    let (loss_b, gb) = grads_of(&folded, &x, &y, None);

    let mut gap = (loss_a - loss_b).abs();
    for (k, m) in masks.iter().enumerate() {
        let (wa, wb) = (&ga.layers[k].weights, &gb.layers[k].weights);
        for (j, &mj) in m.iter().enumerate() {
            for (a, bv) in wa.row(j).iter().zip(wb.row(j)) {
                gap = gap.max((a - mj * bv).abs());
            }
            gap = gap.max((ga.layers[k].bias[j] - mj * gb.layers[k].bias[j]).abs());
        }
    }
    for (a, bv) in ga.input.unwrap().data().iter().zip(gb.input.unwrap().data()) {
        gap = gap.max((a - bv).abs());
    }
    gap
}

/// Filter ranking of a seeded 5-filter layer by brute force: mask each filter
/// in turn and measure how far the successor's mean pre-activation moves,
/// summed over successor outputs. Highest impact first, ties to lower index.
pub fn drop_one_ranking(net: &PrunableNet, layer: usize, x: &Matrix<f32>) -> Vec<usize> {
    let successor = |n: &PrunableNet| {
        let acts = n.activations(x, layer).unwrap();
        n.layers[layer + 1].affine(&acts).unwrap().column_means()
    };
    let full = successor(net);
    let mut impact: Vec<(usize, f64)> = (0..net.layers[layer].out_dim())
        .map(|j| {
            let mut n = net.clone();
            n.layers[layer].mask[j] = false;
            let moved: f64 = successor(&n).iter().zip(&full).map(|(a, b)| (a - b).abs()).sum();
            (j, moved)
        })
        .collect();
    impact.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    impact.into_iter().map(|(j, _)| j).collect()
}

/// A seeded toy net whose layer 0 has five filters.
pub fn five_filter_toy(seed: u64) -> (PrunableNet, Matrix<f32>) {
    let net = Net::<f32>::from_dims(&[6, 5, 4], seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x55);
    let x = Matrix::from_vec(64, 6, (0..64 * 6).map(|_| rng.gen_range(-1.0..2.0)).collect()).unwrap();
    (net, x)
}

pub fn ranking_of(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}
