//! Minibatch training with Adam.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::optim::{adam_step, lr_at_epoch, AdamState, TrainConfig};
use super::stack::{stack_backward, stack_forward, Mode, StackGrads};
use super::{softmax_cross_entropy, LayerGrad, Matrix, Scalar};
use crate::model::Net;
use crate::{Error, Result};

/// Feature matrix with one class index per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<S = f32> {
    pub features: Matrix<S>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl<S: Scalar> Dataset<S> {
    pub fn new(features: Matrix<S>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::shape(
                "Dataset::new",
                format!("{} labels", features.rows()),
                labels.len(),
            ));
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::LabelOutOfRange {
                label,
                classes: num_classes,
            });
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.features.cols()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            num_classes: self.num_classes,
        }
    }

    /// Seeded shuffle, then the first `ceil(fraction · n)` rows.
    pub fn sample_fraction(&self, fraction: f64, seed: u64) -> Self {
        if fraction >= 1.0 {
            return self.clone();
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n = ((self.len() as f64 * fraction).ceil() as usize).clamp(1, self.len().max(1));
        idx.truncate(n);
        self.subset(&idx)
    }
}

/// Per-step options shared by every training loop.
#[derive(Default, Clone, Copy)]
pub struct StepOptions<'a, S> {
    /// Real-valued multiplier per output filter, per layer.
    pub gates: Option<&'a [Option<&'a [S]>]>,
    /// Layers whose parameters are updated; `None` means all.
    pub trainable: Option<&'a [bool]>,
    /// Per-layer weight support; weights outside it are held at zero.
    pub support: Option<&'a [Option<Vec<bool>>]>,
}

/// Loss and gradients of one batch.
pub struct BatchGrads<S> {
    pub loss: f64,
    pub grads: StackGrads<S>,
}

/// Training state that persists across epochs of one phase.
pub struct Trainer {
    pub config: TrainConfig,
    pub rng: ChaCha8Rng,
    pub epoch: usize,
    adam_w: Vec<AdamState>,
    adam_b: Vec<AdamState>,
}

impl Trainer {
    pub fn new<S: Scalar>(net: &Net<S>, config: &TrainConfig) -> Self {
        Self {
            config: config.clone(),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            epoch: 0,
            adam_w: net
                .layers
                .iter()
                .map(|l| AdamState::new(l.weights.data().len()))
                .collect(),
            adam_b: net.layers.iter().map(|l| AdamState::new(l.bias.len())).collect(),
        }
    }

    pub fn lr(&self) -> f64 {
        lr_at_epoch(&self.config, self.epoch)
    }

    /// Forward and backward on one batch in training mode.
    pub fn batch_grads<S: Scalar>(
        &mut self,
        net: &Net<S>,
        x: &Matrix<S>,
        y: &[usize],
        opts: &StepOptions<'_, S>,
    ) -> Result<BatchGrads<S>> {
        batch_grads(net, x, y, opts, self.config.dropout_rate, &mut self.rng)
    }

    /// Adam update of every trainable layer.
    pub fn apply<S: Scalar>(
        &mut self,
        net: &mut Net<S>,
        grads: &[LayerGrad],
        opts: &StepOptions<'_, S>,
        lr: f64,
    ) -> Result<()> {
        for (k, layer) in net.layers.iter_mut().enumerate() {
            if opts.trainable.is_some_and(|t| !t[k]) || grads[k].bias.is_empty() {
                continue;
            }
            adam_step(
                layer.weights.data_mut(),
                grads[k].weights.data(),
                &mut self.adam_w[k],
                lr,
            )?;
            adam_step(&mut layer.bias, &grads[k].bias, &mut self.adam_b[k], lr)?;
            if let Some(Some(keep)) = opts.support.map(|s| &s[k]) {
                for (w, &k) in layer.weights.data_mut().iter_mut().zip(keep) {
                    if !k {
                        *w = S::zero();
                    }
                }
            }
        }
        Ok(())
    }

    /// Shuffled order of `n` rows, consuming the trainer's RNG.
    pub fn shuffled(&mut self, n: usize) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut self.rng);
        idx
    }

    /// One pass over `data`; returns the mean batch loss and advances the epoch.
    pub fn run_epoch<S: Scalar>(
        &mut self,
        net: &mut Net<S>,
        data: &Dataset<S>,
        opts: &StepOptions<'_, S>,
    ) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let lr = self.lr();
        let order = self.shuffled(data.len());
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(self.config.batch_size) {
            let x = data.features.select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
            let bg = self.batch_grads(net, &x, &y, opts)?;
            self.apply(net, &bg.grads.layers, opts, lr)?;
            total += bg.loss;
            batches += 1;
        }
        self.epoch += 1;
        Ok(total / batches as f64)
    }
}

pub fn batch_grads<S: Scalar>(
    net: &Net<S>,
    x: &Matrix<S>,
    y: &[usize],
    opts: &StepOptions<'_, S>,
    dropout: f64,
    rng: &mut ChaCha8Rng,
) -> Result<BatchGrads<S>> {
    let refs = net.layer_refs();
    let pass = stack_forward(
        &refs,
        x,
        opts.gates,
        net.leaky_slope,
        Mode::Train { dropout, rng },
    )?;
    let (loss, grad) = softmax_cross_entropy(&pass.output, y)?;
    let grads = stack_backward(
        &refs,
        &pass,
        &grad,
        opts.gates,
        net.leaky_slope,
        opts.trainable,
        false,
    )?;
    Ok(BatchGrads { loss, grads })
}

fn check_data<S: Scalar>(net: &Net<S>, data: &Dataset<S>) -> Result<()> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.width() != net.input_width() {
        return Err(Error::shape(
            "train",
            format!("{} feature columns", net.input_width()),
            data.width(),
        ));
    }
    if data.num_classes > net.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "dataset has {} classes but the net outputs {}",
            data.num_classes,
            net.num_classes()
        )));
    }
    Ok(())
}

/// Trains `net` in place for `config.epochs` and returns the per-epoch mean loss.
pub fn train<S: Scalar>(
    net: &mut Net<S>,
    data: &Dataset<S>,
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    train_with(net, data, config, &StepOptions::default())
}

pub fn train_with<S: Scalar>(
    net: &mut Net<S>,
    data: &Dataset<S>,
    config: &TrainConfig,
    opts: &StepOptions<'_, S>,
) -> Result<Vec<f64>> {
    check_data(net, data)?;
    config.validate()?;
    let mut trainer = Trainer::new(net, config);
    (0..config.epochs)
        .map(|_| trainer.run_epoch(net, data, opts))
        .collect()
}
