use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::aggregate::{aggregate_grid, scale_to_original, AggregateRow, ScaledPoint};
use super::run::{RunResult, ORIGINAL};
use crate::pruning::Strategy;
use crate::{Error, Result};

pub const RESULTS_HEADER: [&str; 7] = [
    "strategy",
    "percent",
    "seed",
    "f1_macro",
    "params_nonzero",
    "prune_seconds",
    "train_seconds",
];
pub const AGGREGATE_HEADER: [&str; 7] = [
    "strategy",
    "percent",
    "mean_f1",
    "std_f1",
    "ci95",
    "mean_params",
    "time_norm",
];
pub const PLOT_HEADER: [&str; 4] = ["strategy", "x_scaled", "y_scaled", "ci95_scaled"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize, name: &str) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Record {
        row,
        reason: format!("missing column `{name}`"),
    })?;
    raw.trim().parse().map_err(|_| Error::Record {
        row,
        reason: format!("bad `{name}` value `{raw}`"),
    })
}

fn check_header(rdr: &mut csv::Reader<impl Read>, expected: &[&str]) -> Result<()> {
    let h = rdr.headers()?;
    if h.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Record {
            row: 0,
            reason: format!("expected header `{}`", expected.join(",")),
        });
    }
    Ok(())
}

fn result_record(r: &RunResult) -> [String; 7] {
    [
        r.strategy.clone(),
        r.percent.to_string(),
        r.seed.to_string(),
        r.f1_macro.to_string(),
        r.params_nonzero.to_string(),
        r.prune_seconds.to_string(),
        r.train_seconds.to_string(),
    ]
}

pub fn write_results<W: Write>(out: W, results: &[RunResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in results {
        w.write_record(result_record(r))?;
    }
    w.flush().map_err(|e| Error::io("<results>", e))?;
    Ok(())
}

pub fn read_results<R: Read>(input: R) -> Result<Vec<RunResult>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &RESULTS_HEADER)?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let row = i + 1;
            Ok(RunResult {
                strategy: field(&rec, 0, row, "strategy")?,
                percent: field(&rec, 1, row, "percent")?,
                seed: field(&rec, 2, row, "seed")?,
                f1_macro: field(&rec, 3, row, "f1_macro")?,
                params_nonzero: field(&rec, 4, row, "params_nonzero")?,
                prune_seconds: field(&rec, 5, row, "prune_seconds")?,
                train_seconds: field(&rec, 6, row, "train_seconds")?,
            })
        })
        .collect()
}

pub fn load_results(path: &Path) -> Result<Vec<RunResult>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_results(f)
}

/// Appends rows, writing the header when the file is new or empty.
pub fn append_results(path: &Path, results: &[RunResult]) -> Result<()> {
    let fresh = fs::metadata(path).map(|m| m.len() == 0).unwrap_or(true);
    let f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(f);
    if fresh {
        w.write_record(RESULTS_HEADER)?;
    }
    for r in results {
        w.write_record(result_record(r))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_aggregate<W: Write>(out: W, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(AGGREGATE_HEADER)?;
    for r in rows {
        w.write_record([
            r.strategy.clone(),
            r.percent.to_string(),
            r.mean_f1.to_string(),
            r.std_f1.to_string(),
            opt(r.ci95),
            r.mean_params.to_string(),
            r.time_norm.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<aggregate>", e))?;
    Ok(())
}

pub fn read_aggregate<R: Read>(input: R) -> Result<Vec<AggregateRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    check_header(&mut rdr, &AGGREGATE_HEADER)?;
    rdr.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            let row = i + 1;
            let ci = rec.get(4).unwrap_or("").trim();
            Ok(AggregateRow {
                strategy: field(&rec, 0, row, "strategy")?,
                percent: field(&rec, 1, row, "percent")?,
                mean_f1: field(&rec, 2, row, "mean_f1")?,
                std_f1: field(&rec, 3, row, "std_f1")?,
                ci95: if ci.is_empty() {
                    None
                } else {
                    Some(field(&rec, 4, row, "ci95")?)
                },
                mean_params: field(&rec, 5, row, "mean_params")?,
                time_norm: field(&rec, 6, row, "time_norm")?,
            })
        })
        .collect()
}

pub fn write_plot<W: Write>(out: W, points: &[ScaledPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_HEADER)?;
    for p in points {
        w.write_record([
            p.strategy.clone(),
            p.x_scaled.to_string(),
            p.y_scaled.to_string(),
            opt(p.ci95_scaled),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<plot>", e))?;
    Ok(())
}

fn short_count(n: f64) -> String {
    if n >= 1000.0 {
        format!("{}k", (n / 1000.0).round())
    } else {
        format!("{}", n.round())
    }
}

fn display_name(strategy: &str) -> String {
    if strategy == ORIGINAL {
        return "Original".into();
    }
    strategy
        .parse::<Strategy>()
        .map_or_else(|_| strategy.to_string(), |s| s.display_name().to_string())
}

/// Fixed-width table with one row per cell. `log_time` shows `log10` of the
/// normalised time instead of the linear value.
pub fn format_table(rows: &[AggregateRow], log_time: bool) -> String {
    let mut s = String::new();
    let time_head = if log_time { "Time (log10)" } else { "Time" };
    let _ = writeln!(
        s,
        "{:<20} {:>7} {:>10} {:>8} {:>8} {:>8} {:>12}",
        "Strategy", "Percent", "Parameters", "F1", "Std", "CI95", time_head
    );
    for r in rows {
        let time = if log_time {
            r.time_norm.log10()
        } else {
            r.time_norm
        };
        let ci = r.ci95.map_or_else(|| "-".to_string(), |c| format!("{c:.4}"));
        let _ = writeln!(
            s,
            "{:<20} {:>7.2} {:>10} {:>8.4} {:>8.4} {:>8} {:>12.4}",
            display_name(&r.strategy),
            r.percent,
            short_count(r.mean_params),
            r.mean_f1,
            r.std_f1,
            ci,
            time
        );
    }
    s.push_str(
        "\nCI95 = 1.960*std/sqrt(n) assumes normally distributed F1 across seeds.\n\
         Times are scaled so the longest cell is 1.00; the original row includes base training.\n",
    );
    s
}

/// Paths of the four report artefacts.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportFiles {
    pub results_csv: PathBuf,
    pub aggregate_csv: PathBuf,
    pub table: PathBuf,
    pub plot_csv: PathBuf,
}

impl ReportFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            results_csv: dir.join("results.csv"),
            aggregate_csv: dir.join("aggregate.csv"),
            table: dir.join("table.txt"),
            plot_csv: dir.join("plot.csv"),
        }
    }
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// Writes the results, aggregate, table and plot files into `dir`.
///
/// Plot points need an original row; without one the plot file holds only
/// its header.
pub fn emit_report(results: &[RunResult], dir: &Path, log_time: bool) -> Result<ReportFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = ReportFiles::in_dir(dir);
    let rows = aggregate_grid(results)?;
    write_results(create(&files.results_csv)?, results)?;
    write_aggregate(create(&files.aggregate_csv)?, &rows)?;
    fs::write(&files.table, format_table(&rows, log_time)).map_err(|e| Error::io(&files.table, e))?;
    let points = match rows.iter().find(|r| r.strategy == ORIGINAL) {
        Some(orig) => scale_to_original(&rows, orig)?,
        None => Vec::new(),
    };
    write_plot(create(&files.plot_csv)?, &points)?;
    Ok(files)
}
