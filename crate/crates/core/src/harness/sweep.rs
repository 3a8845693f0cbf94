use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::Mutex;

use super::report::{append_results, load_results};
use super::run::{original_result, run_cell, BaseModel, RunResult};
use crate::dataio::DatasetSplit;
use crate::pruning::{Strategy, StrategyConfig};
use crate::{Error, Result};

/// The ten pruning percents of the reference grid.
pub const DEFAULT_PERCENTS: [f64; 10] = [0.99, 0.87, 0.74, 0.62, 0.49, 0.37, 0.25, 0.12, 0.08, 0.04];
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];

/// A grid of strategy × percent × seed cells sharing one base model.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub strategies: Vec<Strategy>,
    pub percents: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Knobs shared by every cell; strategy, percent and seed are overwritten.
    pub template: StrategyConfig,
    pub workers: usize,
    /// Skip cells already present in the results file instead of starting over.
    pub resume: bool,
}

impl SweepSpec {
    /// Full 7 × 10 × 3 grid.
    pub fn full_grid(template: StrategyConfig) -> Self {
        Self {
            strategies: Strategy::ALL.to_vec(),
            percents: DEFAULT_PERCENTS.to_vec(),
            seeds: DEFAULT_SEEDS.to_vec(),
            template,
            workers: 1,
            resume: false,
        }
    }

    /// Cell configs in grid order: strategy, then percent, then seed.
    pub fn cells(&self) -> Vec<StrategyConfig> {
        let mut out = Vec::new();
        for &s in &self.strategies {
            for &p in &self.percents {
                for &seed in &self.seeds {
                    let mut c = self.template.clone();
                    c.strategy = s;
                    c.percent = p;
                    c.seed = seed;
                    out.push(c);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutcome {
    /// Every row now in the results file, previous rows first.
    pub results: Vec<RunResult>,
    pub ran: usize,
    pub skipped: usize,
}

fn key(strategy: &str, percent: f64, seed: u64) -> (String, u64, u64) {
    (strategy.to_string(), percent.to_bits(), seed)
}

/// Runs every missing cell, appending each result to `results_path` as soon
/// as it finishes so an interrupted sweep can resume.
///
/// Cells run on up to `spec.workers` threads. The original row is added
/// once if absent.
pub fn sweep(
    spec: &SweepSpec,
    base: &BaseModel,
    data: &DatasetSplit,
    results_path: &Path,
) -> Result<SweepOutcome> {
    let mut existing = Vec::new();
    if spec.resume && results_path.exists() {
        existing = load_results(results_path)?;
    } else if results_path.exists() {
        fs::remove_file(results_path).map_err(|e| Error::io(results_path, e))?;
    }
    if let Some(dir) = results_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let done: HashSet<_> = existing
        .iter()
        .map(|r| key(&r.strategy, r.percent, r.seed))
        .collect();
    if !existing.iter().any(RunResult::is_original) {
        let orig = original_result(base, data)?;
        append_results(results_path, std::slice::from_ref(&orig))?;
        existing.push(orig);
    }

    let cells = spec.cells();
    let todo: Vec<&StrategyConfig> = cells
        .iter()
        .filter(|c| !done.contains(&key(c.strategy.name(), c.percent, c.seed)))
        .collect();
    let skipped = cells.len() - todo.len();

    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let file_lock = Mutex::new(());
    let finished: Mutex<Vec<(usize, RunResult)>> = Mutex::new(Vec::new());
    let first_error: Mutex<Option<Error>> = Mutex::new(None);
    let workers = spec.workers.clamp(1, todo.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                if failed.load(Ordering::SeqCst) {
                    break;
                }
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = todo.get(i) else { break };
                let outcome = run_cell(base, cfg, data).and_then(|r| {
                    let _guard = file_lock.lock().expect("results lock poisoned");
                    append_results(results_path, std::slice::from_ref(&r))?;
                    Ok(r)
                });
                match outcome {
                    Ok(r) => finished.lock().expect("results lock poisoned").push((i, r)),
                    Err(e) => {
                        failed.store(true, Ordering::SeqCst);
                        first_error.lock().expect("error lock poisoned").get_or_insert(e);
                        break;
                    }
                }
            });
        }
    });
    if let Some(e) = first_error.into_inner().expect("error lock poisoned") {
        return Err(e);
    }
    let mut fresh = finished.into_inner().expect("results lock poisoned");
    fresh.sort_by_key(|(i, _)| *i);
    let ran = fresh.len();
    existing.extend(fresh.into_iter().map(|(_, r)| r));
    Ok(SweepOutcome {
        results: existing,
        ran,
        skipped,
    })
}
