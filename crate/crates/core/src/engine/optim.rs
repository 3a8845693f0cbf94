//! Adam and the step learning-rate schedule.

use super::Scalar;
use crate::{Error, Result};

/// Moment estimates for one flat parameter buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub step_count: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            first_moment: vec![0.0; len],
            second_moment: vec![0.0; len],
            step_count: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn len(&self) -> usize {
        self.first_moment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first_moment.is_empty()
    }
}

/// One bias-corrected Adam update of `params` in place.
pub fn adam_step<S: Scalar>(
    params: &mut [S],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.len() {
        return Err(Error::shape(
            "adam_step",
            format!("{} params and moments", params.len()),
            format!("{} grads, {} moments", grads.len(), state.len()),
        ));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        let m = &mut state.first_moment[i];
        let v = &mut state.second_moment[i];
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        let update = lr * m_hat / (v_hat.sqrt() + state.epsilon);
        if update != 0.0 {
            params[i] = S::of(params[i].f64() - update);
        }
    }
    Ok(())
}

/// Hyperparameters of one training phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub leaky_slope: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.0009,
            lr_decay_factor: 0.1,
            lr_decay_every: 30,
            epochs: 150,
            dropout_rate: 0.0002,
            batch_size: 100,
            seed: 0,
            leaky_slope: super::DEFAULT_LEAKY_SLOPE,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::InvalidArgument(format!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if self.batch_size == 0 || self.lr_decay_every == 0 {
            return Err(Error::InvalidArgument(
                "batch size and decay period must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn with_epochs(&self, epochs: usize) -> Self {
        Self {
            epochs,
            ..self.clone()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// `learning_rate · decay^⌊epoch / decay_every⌋`.
pub fn lr_at_epoch(config: &TrainConfig, epoch: usize) -> f64 {
    let decays = (epoch / config.lr_decay_every.max(1)) as i32;
    config.learning_rate * config.lr_decay_factor.powi(decays)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = vec![1.0f32, -2.0, 3.0];
        let mut s = AdamState::new(3);
        for _ in 0..5 {
            adam_step(&mut p, &[0.0; 3], &mut s, 0.1).unwrap();
        }
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.step_count, 5);
    }

    #[test]
    fn first_step_magnitude_is_lr() {
        // m̂ = g, v̂ = g² after one step, so the update is lr·g/(|g|+ε).
        let mut p = vec![0.0f64];
        let mut s = AdamState::new(1);
        adam_step(&mut p, &[1.0], &mut s, 0.1).unwrap();
        let expected = -0.1 / (1.0 + 1e-8);
        assert!((p[0] - expected).abs() < 1e-15, "{}", p[0]);
    }

    #[test]
    fn identical_params_stay_identical() {
        let mut p = vec![0.5f32, 0.5];
        let mut s = AdamState::new(2);
        for k in 0..10 {
            let g = (k as f64).sin();
            adam_step(&mut p, &[g, g], &mut s, 0.01).unwrap();
        }
        assert_eq!(p[0].to_bits(), p[1].to_bits());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = vec![0.0f32; 2];
        let mut s = AdamState::new(3);
        assert!(adam_step(&mut p, &[0.0; 2], &mut s, 0.1).is_err());
    }

    #[test]
    fn schedule_values() {
        let c = TrainConfig::default();
        assert_eq!(lr_at_epoch(&c, 0), 0.0009);
        assert!((lr_at_epoch(&c, 30) - 0.00009).abs() < 1e-18);
        assert!((lr_at_epoch(&c, 89) - 0.000009).abs() < 1e-18);
        assert_eq!(lr_at_epoch(&c, 29), lr_at_epoch(&c, 0));
    }
}
