//! Pruning strategies behind one interface.
//!
//! Every strategy takes a trained net, a percent target, the pruning data
//! (the training partition) and a retraining budget, and returns a new net.
//! Structured strategies either mask filters (`random_structured`, `dais`,
//! `admm_joint`) or change layer shapes (`thinet`, `iterative_theseus`,
//! `recreation`, `bert_theseus`).

mod admm;
mod baselines;
mod dais;
mod plan;
mod theseus;
mod thinet;

use std::fmt;
use std::str::FromStr;

pub use admm::{admm_joint, admm_joint_traced, project_top_k, top_k_indices, AdmmTrace};
pub use baselines::{random_structured, recreation};
pub use dais::{dais, dais_phase_configs, dais_split};
pub use plan::{keep_count, make_plan, PrunePlan, HIDDEN_TARGET_RATIO};
pub use theseus::{bert_block_size, bert_theseus, bert_theseus_run, iterative_theseus, BertTheseusRun};
pub use thinet::{thinet_prune, thinet_rescale, thinet_scores, thinet_surgery};

use crate::engine::{Dataset, TrainConfig};
use crate::model::PrunableNet;
use crate::{Error, Result};

/// The seven strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    AdmmJoint,
    Dais,
    BertTheseus,
    IterativeTheseus,
    Thinet,
    RandomStructured,
    Recreation,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::AdmmJoint,
        Strategy::BertTheseus,
        Strategy::Dais,
        Strategy::IterativeTheseus,
        Strategy::RandomStructured,
        Strategy::Recreation,
        Strategy::Thinet,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::AdmmJoint => "admm_joint",
            Strategy::Dais => "dais",
            Strategy::BertTheseus => "bert_theseus",
            Strategy::IterativeTheseus => "iterative_theseus",
            Strategy::Thinet => "thinet",
            Strategy::RandomStructured => "random_structured",
            Strategy::Recreation => "recreation",
        }
    }

    /// Row label used in the aggregate table.
    pub fn display_name(self) -> &'static str {
        match self {
            Strategy::AdmmJoint => "ADMM Joint",
            Strategy::Dais => "DAIS",
            Strategy::BertTheseus => "BERT Theseus",
            Strategy::IterativeTheseus => "Iterative Theseus",
            Strategy::Thinet => "Thinet",
            Strategy::RandomStructured => "Random Structured",
            Strategy::Recreation => "Recreation",
        }
    }

    /// Whether the strategy keeps to a per-filter budget.
    pub fn has_filter_budget(self) -> bool {
        self != Strategy::BertTheseus
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmmParams {
    pub rho: f64,
    pub k_fraction: f64,
    pub mask_penalty: f64,
    pub mask_lr: f64,
    /// Search epochs; defaults to the prune budget minus the retrain epochs.
    pub epochs: Option<usize>,
    /// Final retraining epochs; defaults to a fifth of the prune budget.
    pub retrain_epochs: Option<usize>,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            rho: 1e-3,
            k_fraction: 1.0,
            mask_penalty: 1e-2,
            mask_lr: 1e-2,
            epochs: None,
            retrain_epochs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaisParams {
    pub temp_start: f64,
    pub temp_growth: f64,
    pub lambda: f64,
    pub logit_init: f64,
    pub mask_lr: f64,
    /// Leaves the mask logits untouched (useful for equivalence checks).
    pub freeze_logits: bool,
    pub epochs: Option<usize>,
    pub retrain_epochs: Option<usize>,
}

impl Default for DaisParams {
    fn default() -> Self {
        Self {
            temp_start: 1.0,
            temp_growth: 1.1,
            lambda: 1.0,
            logit_init: 2.0,
            mask_lr: 1e-2,
            freeze_logits: false,
            epochs: None,
            retrain_epochs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BertParams {
    pub p_start: f64,
    pub p_end: f64,
    /// Defaults to half the epochs.
    pub ramp_epochs: Option<usize>,
}

impl Default for BertParams {
    fn default() -> Self {
        Self {
            p_start: 0.3,
            p_end: 1.0,
            ramp_epochs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterativeParams {
    /// Defaults to `max(1, prune_epochs / (2 · replaced layers))`, leaving
    /// about half the budget for the final fine-tune.
    pub per_layer_epochs: Option<usize>,
    /// Layers on each side of the replaced one that also train.
    pub neighbor_radius: usize,
    /// Whole-net epochs at the end; defaults to whatever is left of the budget.
    pub finetune_epochs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThinetParams {
    pub samples: usize,
}

impl Default for ThinetParams {
    fn default() -> Self {
        Self { samples: 1000 }
    }
}

/// A strategy choice plus everything needed to run it.
#[derive(Debug, Clone, PartialEq)]
pub struct StrategyConfig {
    pub strategy: Strategy,
    pub percent: f64,
    pub prune_epochs: usize,
    pub seed: u64,
    /// Optimiser settings for every retraining phase; epochs and seed are
    /// overridden per phase.
    pub train: TrainConfig,
    /// Fraction of the training partition handed to the strategy.
    pub pruning_fraction: f64,
    pub admm: AdmmParams,
    pub dais: DaisParams,
    pub bert: BertParams,
    pub iterative: IterativeParams,
    pub thinet: ThinetParams,
}

impl StrategyConfig {
    pub fn new(strategy: Strategy, percent: f64) -> Self {
        Self {
            strategy,
            percent,
            prune_epochs: 50,
            seed: 0,
            train: TrainConfig::default(),
            pruning_fraction: 1.0,
            admm: AdmmParams::default(),
            dais: DaisParams::default(),
            bert: BertParams::default(),
            iterative: IterativeParams::default(),
            thinet: ThinetParams::default(),
        }
    }

    /// Training config of one phase, seeded independently per `tag`.
    pub fn phase(&self, epochs: usize, tag: u64) -> TrainConfig {
        self.train.with_epochs(epochs).with_seed(sub_seed(self.seed, tag))
    }
}

/// Decorrelated seed for a named sub-stream (splitmix64 finaliser).
pub fn sub_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Result of one strategy run.
#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub net: PrunableNet,
    pub plan: PrunePlan,
}

/// Runs the configured strategy on a copy of `net`.
pub fn prune(net: &PrunableNet, data: &Dataset<f32>, config: &StrategyConfig) -> Result<PruneOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let plan = make_plan(net, config.percent)?;
    let data = data.sample_fraction(config.pruning_fraction, sub_seed(config.seed, 0xDA7A));
    let pruned = match config.strategy {
        Strategy::RandomStructured => random_structured(net, &plan, &data, config)?,
        Strategy::Recreation => recreation(net, &plan, &data, config)?,
        Strategy::Thinet => thinet_prune(net, &plan, &data, config)?,
        Strategy::AdmmJoint => admm_joint(net, &plan, &data, config)?,
        Strategy::Dais => dais(net, &plan, &data, config)?,
        Strategy::BertTheseus => bert_theseus(net, config.percent, &data, config)?,
        Strategy::IterativeTheseus => iterative_theseus(net, &plan, &data, config)?,
    };
    Ok(PruneOutcome { net: pruned, plan })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        let err = "magic".parse::<Strategy>().unwrap_err().to_string();
        for s in Strategy::ALL {
            assert!(err.contains(s.name()), "{err}");
        }
    }

    #[test]
    fn sub_seeds_differ() {
        assert_ne!(sub_seed(1, 2), sub_seed(1, 3));
        assert_ne!(sub_seed(1, 2), sub_seed(2, 2));
        assert_eq!(sub_seed(5, 5), sub_seed(5, 5));
    }
}
