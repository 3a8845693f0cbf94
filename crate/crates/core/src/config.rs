//! Flat `section.key=value` configuration with file and flag layers.
//!
//! Lines are `key = value`; `#` starts a comment. Unknown keys are rejected
//! by name. Later assignments win, so resolving defaults, then a file, then
//! flag overrides gives flags > file > defaults.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataio::{
    load_csv, split, synthesize_dataset, to_dataset, undersample, ClassScheme, DatasetSplit,
    FeatureScaling,
};
use crate::engine::TrainConfig;
use crate::harness::{DEFAULT_PERCENTS, DEFAULT_SEEDS};
use crate::model::ModelConfig;
use crate::pruning::{Strategy, StrategyConfig};
use crate::{Error, Result};

/// Env var that overrides the configured output directory.
pub const OUT_ENV: &str = "PRUNEBENCH_OUT";
pub const DEFAULT_OUT_DIR: &str = "prunebench-out";

#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    /// Packet CSV to load; `None` means synthesize.
    pub path: Option<PathBuf>,
    /// Rows per class when synthesizing.
    pub synth_per_class: Option<usize>,
    pub scheme: ClassScheme,
    pub scaling: FeatureScaling,
    /// Apply the per-class caps when loading a CSV.
    pub undersample: bool,
    pub split: f64,
    pub seed: u64,
    /// Fraction of the training partition handed to pruning strategies.
    pub pruning_fraction: f64,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            path: None,
            synth_per_class: None,
            scheme: ClassScheme::Grouped5,
            scaling: FeatureScaling::Raw,
            undersample: true,
            split: 0.8,
            seed: 0,
            pruning_fraction: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub strategies: Vec<Strategy>,
    pub percents: Vec<f64>,
    pub seeds: Vec<u64>,
    pub workers: usize,
    pub resume: bool,
    pub log_time: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            strategies: Strategy::ALL.to_vec(),
            percents: DEFAULT_PERCENTS.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            workers: 1,
            resume: false,
            log_time: false,
        }
    }
}

/// Everything a command needs, fully resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub data: DataConfig,
    /// Strategy selection and knobs; its `train` and `pruning_fraction` are
    /// filled from the other sections by [`Config::strategy_config`].
    pub prune: StrategyConfig,
    pub sweep: SweepConfig,
    pub out_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            model: ModelConfig::small(),
            train: TrainConfig::default(),
            data: DataConfig::default(),
            prune: StrategyConfig::new(Strategy::RandomStructured, 0.49),
            sweep: SweepConfig::default(),
            out_dir: PathBuf::from(DEFAULT_OUT_DIR),
        }
    }
}

/// Every accepted key, in dump order.
pub const KEYS: &[&str] = &[
    "model.input_width",
    "model.base_filters",
    "model.hidden_layers",
    "model.width_step",
    "model.num_classes",
    "train.lr",
    "train.lr_decay",
    "train.lr_decay_every",
    "train.epochs",
    "train.dropout",
    "train.batch_size",
    "train.seed",
    "data.path",
    "data.synth_per_class",
    "data.scheme",
    "data.scaling",
    "data.undersample",
    "data.split",
    "data.seed",
    "data.pruning_fraction",
    "prune.strategy",
    "prune.percent",
    "prune.epochs",
    "prune.seed",
    "prune.admm_rho",
    "prune.admm_k_fraction",
    "prune.admm_mask_penalty",
    "prune.admm_mask_lr",
    "prune.admm_epochs",
    "prune.admm_retrain_epochs",
    "prune.dais_temp_start",
    "prune.dais_temp_growth",
    "prune.dais_lambda",
    "prune.dais_logit_init",
    "prune.dais_mask_lr",
    "prune.dais_epochs",
    "prune.dais_retrain_epochs",
    "prune.bert_p_start",
    "prune.bert_p_end",
    "prune.bert_ramp_epochs",
    "prune.iterative_per_layer_epochs",
    "prune.iterative_neighbor_radius",
    "prune.iterative_finetune_epochs",
    "prune.thinet_samples",
    "sweep.strategies",
    "sweep.percents",
    "sweep.seeds",
    "sweep.workers",
    "sweep.resume",
    "sweep.log_time",
    "out.dir",
];

/// Keys that are accepted on input but not part of the dump.
const ALIASES: &[&str] = &["model.preset"];

fn bad(key: &str, reason: impl ToString) -> Error {
    Error::BadConfigValue {
        key: key.to_string(),
        reason: reason.to_string(),
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| bad(key, format!("`{v}`: {e}")))
}

/// `auto` (or empty) means "use the strategy default".
fn parse_opt<T: FromStr>(key: &str, v: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if v.is_empty() || v == "auto" {
        Ok(None)
    } else {
        parse(key, v).map(Some)
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(bad(key, format!("expected true|false, got `{v}`"))),
    }
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(|| "auto".to_string(), T::to_string)
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

impl Config {
    /// Assigns one key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let p = &mut self.prune;
        match key {
            "model.preset" => {
                self.model = match v {
                    "big" => ModelConfig::big(),
                    "small" => ModelConfig::small(),
                    _ => return Err(bad(key, format!("expected big|small, got `{v}`"))),
                }
            }
            "model.input_width" => self.model.input_width = parse(key, v)?,
            "model.base_filters" => self.model.base_filters = parse(key, v)?,
            "model.hidden_layers" => self.model.hidden_layers = parse(key, v)?,
            "model.width_step" => self.model.width_step = parse(key, v)?,
            "model.num_classes" => self.model.num_classes = parse(key, v)?,
            "train.lr" => self.train.learning_rate = parse(key, v)?,
            "train.lr_decay" => self.train.lr_decay_factor = parse(key, v)?,
            "train.lr_decay_every" => self.train.lr_decay_every = parse(key, v)?,
            "train.epochs" => self.train.epochs = parse(key, v)?,
            "train.dropout" => self.train.dropout_rate = parse(key, v)?,
            "train.batch_size" => self.train.batch_size = parse(key, v)?,
            "train.seed" => self.train.seed = parse(key, v)?,
            "data.path" => {
                self.data.path = (!v.is_empty() && v != "none").then(|| PathBuf::from(v))
            }
            "data.synth_per_class" => {
                self.data.synth_per_class = if v == "none" { None } else { parse_opt(key, v)? }
            }
            "data.scheme" => self.data.scheme = parse(key, v)?,
            "data.scaling" => self.data.scaling = parse(key, v)?,
            "data.undersample" => self.data.undersample = parse_bool(key, v)?,
            "data.split" => self.data.split = parse(key, v)?,
            "data.seed" => self.data.seed = parse(key, v)?,
            "data.pruning_fraction" => self.data.pruning_fraction = parse(key, v)?,
            "prune.strategy" => p.strategy = parse(key, v)?,
            "prune.percent" => p.percent = parse(key, v)?,
            "prune.epochs" => p.prune_epochs = parse(key, v)?,
            "prune.seed" => p.seed = parse(key, v)?,
            "prune.admm_rho" => p.admm.rho = parse(key, v)?,
            "prune.admm_k_fraction" => p.admm.k_fraction = parse(key, v)?,
            "prune.admm_mask_penalty" => p.admm.mask_penalty = parse(key, v)?,
            "prune.admm_mask_lr" => p.admm.mask_lr = parse(key, v)?,
            "prune.admm_epochs" => p.admm.epochs = parse_opt(key, v)?,
            "prune.admm_retrain_epochs" => p.admm.retrain_epochs = parse_opt(key, v)?,
            "prune.dais_temp_start" => p.dais.temp_start = parse(key, v)?,
            "prune.dais_temp_growth" => p.dais.temp_growth = parse(key, v)?,
            "prune.dais_lambda" => p.dais.lambda = parse(key, v)?,
            "prune.dais_logit_init" => p.dais.logit_init = parse(key, v)?,
            "prune.dais_mask_lr" => p.dais.mask_lr = parse(key, v)?,
            "prune.dais_epochs" => p.dais.epochs = parse_opt(key, v)?,
            "prune.dais_retrain_epochs" => p.dais.retrain_epochs = parse_opt(key, v)?,
            "prune.bert_p_start" => p.bert.p_start = parse(key, v)?,
            "prune.bert_p_end" => p.bert.p_end = parse(key, v)?,
            "prune.bert_ramp_epochs" => p.bert.ramp_epochs = parse_opt(key, v)?,
            "prune.iterative_per_layer_epochs" => p.iterative.per_layer_epochs = parse_opt(key, v)?,
            "prune.iterative_neighbor_radius" => p.iterative.neighbor_radius = parse(key, v)?,
            "prune.iterative_finetune_epochs" => p.iterative.finetune_epochs = parse_opt(key, v)?,
            "prune.thinet_samples" => p.thinet.samples = parse(key, v)?,
            "sweep.strategies" => {
                self.sweep.strategies = if v == "all" {
                    Strategy::ALL.to_vec()
                } else {
                    v.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(str::parse)
                        .collect::<Result<_>>()?
                }
            }
            "sweep.percents" => self.sweep.percents = parse_list(key, v)?,
            "sweep.seeds" => self.sweep.seeds = parse_list(key, v)?,
            "sweep.workers" => self.sweep.workers = parse(key, v)?,
            "sweep.resume" => self.sweep.resume = parse_bool(key, v)?,
            "sweep.log_time" => self.sweep.log_time = parse_bool(key, v)?,
            "out.dir" => self.out_dir = PathBuf::from(v),
            _ => return Err(Error::UnknownConfigKey(key.to_string())),
        }
        Ok(())
    }

    /// Current value of a key in the same text form `set` accepts.
    pub fn get(&self, key: &str) -> Result<String> {
        let p = &self.prune;
        Ok(match key {
            "model.input_width" => self.model.input_width.to_string(),
            "model.base_filters" => self.model.base_filters.to_string(),
            "model.hidden_layers" => self.model.hidden_layers.to_string(),
            "model.width_step" => self.model.width_step.to_string(),
            "model.num_classes" => self.model.num_classes.to_string(),
            "train.lr" => self.train.learning_rate.to_string(),
            "train.lr_decay" => self.train.lr_decay_factor.to_string(),
            "train.lr_decay_every" => self.train.lr_decay_every.to_string(),
            "train.epochs" => self.train.epochs.to_string(),
            "train.dropout" => self.train.dropout_rate.to_string(),
            "train.batch_size" => self.train.batch_size.to_string(),
            "train.seed" => self.train.seed.to_string(),
            "data.path" => self
                .data
                .path
                .as_ref()
                .map_or_else(|| "none".into(), |p| p.display().to_string()),
            "data.synth_per_class" => self
                .data
                .synth_per_class
                .map_or_else(|| "none".into(), |n| n.to_string()),
            "data.scheme" => self.data.scheme.to_string(),
            "data.scaling" => self.data.scaling.to_string(),
            "data.undersample" => self.data.undersample.to_string(),
            "data.split" => self.data.split.to_string(),
            "data.seed" => self.data.seed.to_string(),
            "data.pruning_fraction" => self.data.pruning_fraction.to_string(),
            "prune.strategy" => p.strategy.to_string(),
            "prune.percent" => p.percent.to_string(),
            "prune.epochs" => p.prune_epochs.to_string(),
            "prune.seed" => p.seed.to_string(),
            "prune.admm_rho" => p.admm.rho.to_string(),
            "prune.admm_k_fraction" => p.admm.k_fraction.to_string(),
            "prune.admm_mask_penalty" => p.admm.mask_penalty.to_string(),
            "prune.admm_mask_lr" => p.admm.mask_lr.to_string(),
            "prune.admm_epochs" => opt_str(&p.admm.epochs),
            "prune.admm_retrain_epochs" => opt_str(&p.admm.retrain_epochs),
            "prune.dais_temp_start" => p.dais.temp_start.to_string(),
            "prune.dais_temp_growth" => p.dais.temp_growth.to_string(),
            "prune.dais_lambda" => p.dais.lambda.to_string(),
            "prune.dais_logit_init" => p.dais.logit_init.to_string(),
            "prune.dais_mask_lr" => p.dais.mask_lr.to_string(),
            "prune.dais_epochs" => opt_str(&p.dais.epochs),
            "prune.dais_retrain_epochs" => opt_str(&p.dais.retrain_epochs),
            "prune.bert_p_start" => p.bert.p_start.to_string(),
            "prune.bert_p_end" => p.bert.p_end.to_string(),
            "prune.bert_ramp_epochs" => opt_str(&p.bert.ramp_epochs),
            "prune.iterative_per_layer_epochs" => opt_str(&p.iterative.per_layer_epochs),
            "prune.iterative_neighbor_radius" => p.iterative.neighbor_radius.to_string(),
            "prune.iterative_finetune_epochs" => opt_str(&p.iterative.finetune_epochs),
            "prune.thinet_samples" => p.thinet.samples.to_string(),
            "sweep.strategies" => join(&self.sweep.strategies),
            "sweep.percents" => join(&self.sweep.percents),
            "sweep.seeds" => join(&self.sweep.seeds),
            "sweep.workers" => self.sweep.workers.to_string(),
            "sweep.resume" => self.sweep.resume.to_string(),
            "sweep.log_time" => self.sweep.log_time.to_string(),
            "out.dir" => self.out_dir.display().to_string(),
            _ => return Err(Error::UnknownConfigKey(key.to_string())),
        })
    }

    /// Applies every `key=value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Record {
                row: i + 1,
                reason: format!("expected key=value, got `{line}`"),
            })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text)
    }

    /// Defaults, then the file, then the overrides in order.
    pub fn resolve(file: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut c = Self::default();
        if let Some(text) = file {
            c.apply_text(text)?;
        }
        for (k, v) in overrides {
            c.set(k, v)?;
        }
        Ok(c)
    }

    /// Every key with its current value; feeding this back reproduces `self`.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for k in KEYS {
            let _ = writeln!(s, "{k}={}", self.get(k).expect("listed key"));
        }
        s
    }

    /// Cross-section checks that single keys cannot catch.
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.model.num_classes != self.data.scheme.num_classes() {
            return Err(bad(
                "model.num_classes",
                format!(
                    "{} classes but data.scheme={} has {}",
                    self.model.num_classes,
                    self.data.scheme,
                    self.data.scheme.num_classes()
                ),
            ));
        }
        if !(self.data.pruning_fraction > 0.0 && self.data.pruning_fraction <= 1.0) {
            return Err(bad("data.pruning_fraction", "must be in (0, 1]"));
        }
        Ok(())
    }

    /// The strategy config with the shared training settings filled in.
    pub fn strategy_config(&self) -> StrategyConfig {
        let mut s = self.prune.clone();
        s.train = self.train.clone();
        s.pruning_fraction = self.data.pruning_fraction;
        s
    }

    /// `--out-dir` beats the env var, which beats the config value.
    pub fn resolve_out_dir(&self, flag: Option<&Path>, env: Option<&str>) -> PathBuf {
        match (flag, env.filter(|e| !e.is_empty())) {
            (Some(f), _) => f.to_path_buf(),
            (None, Some(e)) => PathBuf::from(e),
            (None, None) => self.out_dir.clone(),
        }
    }
}

impl DataConfig {
    /// Loads (or synthesizes) the records and cuts the train/test split.
    pub fn build_split(&self) -> Result<DatasetSplit> {
        let records = match (&self.path, self.synth_per_class) {
            (Some(path), _) => {
                let raw = load_csv(path, false)?;
                if self.undersample {
                    undersample(&raw, self.scheme, &self.scheme.table_caps(), self.seed)?
                } else {
                    raw
                }
            }
            (None, Some(n)) => synthesize_dataset(n, self.scheme, self.seed),
            (None, None) => {
                return Err(Error::InvalidArgument(
                    "no dataset: set data.path or data.synth_per_class".into(),
                ))
            }
        };
        let data = to_dataset(&records, self.scheme, self.scaling)?;
        split(&data, self.split, self.seed)
    }
}

/// Whether `key` is accepted by [`Config::set`].
pub fn is_known_key(key: &str) -> bool {
    KEYS.contains(&key) || ALIASES.contains(&key)
}

/// Provenance record written next to every command's outputs.
///
/// The file is a valid config: metadata lines are comments, so
/// `--config manifest.txt` replays the run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub config: Config,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, config: &Config) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# prunebench {}", self.version);
        let _ = writeln!(s, "# command: {}", self.command);
        let _ = writeln!(
            s,
            "# seeds: train={} data={} prune={} sweep={}",
            self.config.train.seed,
            self.config.data.seed,
            self.config.prune.seed,
            join(&self.config.sweep.seeds)
        );
        for p in &self.inputs {
            let _ = writeln!(s, "# input: {}", p.display());
        }
        for p in &self.outputs {
            let _ = writeln!(s, "# output: {}", p.display());
        }
        s.push_str(&self.config.dump());
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(|e| Error::io(path, e))
    }
}
