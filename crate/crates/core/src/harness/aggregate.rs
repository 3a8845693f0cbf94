use super::run::{RunResult, ORIGINAL};
use crate::pruning::Strategy;
use crate::{Error, Result};

/// z-score of a two-sided 95% normal interval.
pub const Z95: f64 = 1.960;

/// Summary of all seeds of one (strategy, percent) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub strategy: String,
    pub percent: f64,
    pub mean_f1: f64,
    /// Sample standard deviation (n − 1 denominator); 0 for a single run.
    pub std_f1: f64,
    /// `1.960 · σ / √n`; absent for a single run.
    pub ci95: Option<f64>,
    pub mean_params: f64,
    /// Mean cell time divided by the longest cell of the grid.
    pub time_norm: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn ci_halfwidth(std: f64, n: usize) -> Option<f64> {
    (n >= 2).then(|| Z95 * std / (n as f64).sqrt())
}

/// Aggregates the runs of one cell. `time_norm` holds the raw mean time in
/// seconds until [`normalize_times`] rescales it.
pub fn aggregate(runs: &[RunResult]) -> Result<AggregateRow> {
    let first = runs.first().ok_or_else(|| {
        Error::InvalidArgument("cannot aggregate an empty cell".into())
    })?;
    // Sorting makes the reduction independent of run order.
    let mut f1: Vec<f64> = runs.iter().map(|r| r.f1_macro).collect();
    f1.sort_by(f64::total_cmp);
    let mut params: Vec<f64> = runs.iter().map(|r| r.params_nonzero as f64).collect();
    params.sort_by(f64::total_cmp);
    let mut times: Vec<f64> = runs.iter().map(RunResult::total_seconds).collect();
    times.sort_by(f64::total_cmp);
    let (mean_f1, std_f1) = mean_std(&f1);
    Ok(AggregateRow {
        strategy: first.strategy.clone(),
        percent: first.percent,
        mean_f1,
        std_f1,
        ci95: ci_halfwidth(std_f1, runs.len()),
        mean_params: mean_std(&params).0,
        time_norm: mean_std(&times).0,
    })
}

fn strategy_rank(name: &str) -> usize {
    if name == ORIGINAL {
        return 0;
    }
    name.parse::<Strategy>()
        .ok()
        .and_then(|s| Strategy::ALL.iter().position(|&x| x == s))
        .map_or(usize::MAX, |p| p + 1)
}

/// Groups runs by cell, aggregates, and normalises times across the grid.
///
/// Rows come out as the original first, then strategies by name with
/// percents descending.
pub fn aggregate_grid(results: &[RunResult]) -> Result<Vec<AggregateRow>> {
    let mut cells: Vec<(String, f64, Vec<RunResult>)> = Vec::new();
    for r in results {
        match cells
            .iter_mut()
            .find(|(s, p, _)| *s == r.strategy && p.to_bits() == r.percent.to_bits())
        {
            Some((_, _, v)) => v.push(r.clone()),
            None => cells.push((r.strategy.clone(), r.percent, vec![r.clone()])),
        }
    }
    cells.sort_by(|a, b| {
        strategy_rank(&a.0)
            .cmp(&strategy_rank(&b.0))
            .then_with(|| a.0.cmp(&b.0))
            .then(b.1.total_cmp(&a.1))
    });
    let mut rows = cells
        .iter()
        .map(|(_, _, runs)| aggregate(runs))
        .collect::<Result<Vec<_>>>()?;
    normalize_times(&mut rows);
    Ok(rows)
}

/// Divides every row's time by the grid maximum so the longest cell is 1.
pub fn normalize_times(rows: &mut [AggregateRow]) {
    let max = rows.iter().map(|r| r.time_norm).fold(0.0, f64::max);
    for r in rows.iter_mut() {
        r.time_norm = if max > 0.0 { r.time_norm / max } else { 1.0 };
    }
}

/// One point of the scaled accuracy/size plot.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPoint {
    pub strategy: String,
    pub percent: f64,
    pub x_scaled: f64,
    pub y_scaled: f64,
    pub ci95_scaled: Option<f64>,
}

/// Divides parameters and F1 by the original row so it lands at (1, 1).
pub fn scale_to_original(rows: &[AggregateRow], original: &AggregateRow) -> Result<Vec<ScaledPoint>> {
    if !(original.mean_f1 > 0.0 && original.mean_params > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "original row needs positive F1 and parameters, got {} and {}",
            original.mean_f1, original.mean_params
        )));
    }
    Ok(rows
        .iter()
        .map(|r| ScaledPoint {
            strategy: r.strategy.clone(),
            percent: r.percent,
            x_scaled: r.mean_params / original.mean_params,
            y_scaled: r.mean_f1 / original.mean_f1,
            ci95_scaled: r.ci95.map(|c| c / original.mean_f1),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f1: f64, seed: u64) -> RunResult {
        RunResult {
            strategy: "thinet".into(),
            percent: 0.5,
            seed,
            f1_macro: f1,
            params_nonzero: 100,
            prune_seconds: 1.0,
            train_seconds: 0.0,
        }
    }

    #[test]
    fn constant_runs() {
        let a = aggregate(&[run(0.9, 0), run(0.9, 1), run(0.9, 2)]).unwrap();
        assert!((a.mean_f1 - 0.9).abs() < 1e-15);
        assert_eq!(a.std_f1, 0.0);
        assert_eq!(a.ci95, Some(0.0));
    }

    #[test]
    fn spread_runs() {
        let a = aggregate(&[run(0.8, 0), run(0.9, 1), run(1.0, 2)]).unwrap();
        assert!((a.std_f1 - 0.1).abs() < 1e-12);
        assert!((a.ci95.unwrap() - 1.960 * 0.1 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_run_has_no_interval() {
        assert_eq!(aggregate(&[run(0.7, 0)]).unwrap().ci95, None);
        assert!(aggregate(&[]).is_err());
    }
}
