use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use super::macro_f1;
use crate::dataio::DatasetSplit;
use crate::engine::{train, Dataset, TrainConfig};
use crate::model::{build_model, CountMode, ModelConfig, PrunableNet};
use crate::pruning::{prune, StrategyConfig};
use crate::{Error, Result};

/// Label of the unpruned reference row.
pub const ORIGINAL: &str = "original";

/// Metrics of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub strategy: String,
    pub percent: f64,
    pub seed: u64,
    pub f1_macro: f64,
    pub params_nonzero: usize,
    /// Wall time of the pruning step (search and surgery, including retraining).
    pub prune_seconds: f64,
    /// Base-model training time; nonzero only on the original row.
    pub train_seconds: f64,
}

impl RunResult {
    pub fn total_seconds(&self) -> f64 {
        self.prune_seconds + self.train_seconds
    }

    pub fn is_original(&self) -> bool {
        self.strategy == ORIGINAL
    }
}

/// A trained reference model plus how long it took to train.
#[derive(Debug, Clone)]
pub struct BaseModel {
    pub net: PrunableNet,
    pub train_seconds: f64,
    pub seed: u64,
}

pub fn evaluate(net: &PrunableNet, data: &Dataset<f32>) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    macro_f1(&net.predict(&data.features)?, &data.labels, net.num_classes())
}

/// Builds and trains a base model on the training partition.
pub fn train_base(
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    data: &DatasetSplit,
    seed: u64,
) -> Result<BaseModel> {
    let mut net = build_model(model, seed)?;
    let start = Instant::now();
    train(&mut net, &data.train, &train_cfg.with_seed(seed))?;
    Ok(BaseModel {
        net,
        train_seconds: start.elapsed().as_secs_f64(),
        seed,
    })
}

/// FNV-1a, used only to key cache files.
fn fnv64(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn cache_key(model: &ModelConfig, cfg: &TrainConfig, data: &DatasetSplit, seed: u64) -> String {
    let mut feat = 0u64;
    for v in data.train.features.data().iter().step_by(97) {
        feat = feat.rotate_left(5) ^ v.to_bits() as u64;
    }
    let desc = format!(
        "{model:?}|{cfg:?}|{}|{}|{}|{}|{feat:x}|{seed}",
        data.train.len(),
        data.test.len(),
        data.fraction,
        data.seed
    );
    format!("{:016x}", fnv64(&desc))
}

/// Reuses a checkpointed base model from `dir` when one matches, otherwise
/// trains and stores it.
pub fn cached_base(
    dir: &Path,
    model: &ModelConfig,
    train_cfg: &TrainConfig,
    data: &DatasetSplit,
    seed: u64,
) -> Result<BaseModel> {
    let key = cache_key(model, train_cfg, data, seed);
    let net_path: PathBuf = dir.join(format!("base_{key}.pbnet"));
    let meta_path: PathBuf = dir.join(format!("base_{key}.seconds"));
    if net_path.exists() && meta_path.exists() {
        let net = PrunableNet::load(&net_path)?;
        let raw = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let train_seconds = raw
            .trim()
            .parse()
            .map_err(|_| Error::Checkpoint(format!("bad timing sidecar {}", meta_path.display())))?;
        return Ok(BaseModel {
            net,
            train_seconds,
            seed,
        });
    }
    let base = train_base(model, train_cfg, data, seed)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    base.net.save(&net_path)?;
    fs::write(&meta_path, base.train_seconds.to_string()).map_err(|e| Error::io(&meta_path, e))?;
    Ok(base)
}

/// The reference row: the base model at percent 1.0 carrying its training time.
pub fn original_result(base: &BaseModel, data: &DatasetSplit) -> Result<RunResult> {
    Ok(RunResult {
        strategy: ORIGINAL.to_string(),
        percent: 1.0,
        seed: base.seed,
        f1_macro: evaluate(&base.net, &data.test)?,
        params_nonzero: base.net.count_params(CountMode::Nonzero),
        prune_seconds: 0.0,
        train_seconds: base.train_seconds,
    })
}

/// Runs one strategy on the base model and scores it on the test partition.
pub fn run_cell(base: &BaseModel, config: &StrategyConfig, data: &DatasetSplit) -> Result<RunResult> {
    let wrap = |e: Error| Error::Cell {
        strategy: config.strategy.name().to_string(),
        percent: config.percent,
        seed: config.seed,
        source: Box::new(e),
    };
    let (net, prune_seconds) = run_cell_net(base, config, data).map_err(wrap)?;
    Ok(RunResult {
        strategy: config.strategy.name().to_string(),
        percent: config.percent,
        seed: config.seed,
        f1_macro: evaluate(&net, &data.test).map_err(wrap)?,
        params_nonzero: net.count_params(CountMode::Nonzero),
        prune_seconds,
        train_seconds: 0.0,
    })
}

/// The pruned net of one cell and the pruning wall time.
pub fn run_cell_net(
    base: &BaseModel,
    config: &StrategyConfig,
    data: &DatasetSplit,
) -> Result<(PrunableNet, f64)> {
    let start = Instant::now();
    let out = prune(&base.net, &data.train, config)?;
    Ok((out.net, start.elapsed().as_secs_f64()))
}
