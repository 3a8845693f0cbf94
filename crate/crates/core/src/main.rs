use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use prunebench::config::{Config, RunManifest, OUT_ENV};
use prunebench::dataio::{save_csv, synthesize_dataset};
use prunebench::harness::{
    append_results, cached_base, emit_report, evaluate, load_results, run_cell_net, sweep, train_base,
    BaseModel, RunResult, SweepSpec,
};
use prunebench::{CountMode, Error, PrunableNet, Result};

#[derive(Parser, Debug)]
#[command(name = "prunebench", version, about = "Structured pruning benchmark for packet classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file of `section.key=value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for base training and pruning.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Strategy name; restricts the sweep to it
    #[arg(long, global = true)]
    strategy: Option<String>,
    /// Kept fraction in (0, 1]; restricts the sweep to it
    #[arg(long, global = true)]
    percent: Option<f64>,
    /// Model preset; also picks the matching class scheme.
    #[arg(long, global = true, value_enum)]
    model: Option<Preset>,
    /// Parallel sweep cells
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory (beats PRUNEBENCH_OUT and out.dir).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Skip sweep cells already in the results file.
    #[arg(long, global = true)]
    resume: bool,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Big,
    Small,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a base model and write its checkpoint.
    Train,
    /// Prune one checkpoint with one strategy.
    Prune {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run the strategy × percent × seed grid and write the reports.
    Sweep,
    /// Write a synthetic packet CSV.
    Synth {
        /// Rows per class (default: data.synth_per_class, else 10).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Rebuild aggregate, table and plot files from a results CSV.
    Report {
        #[arg(long)]
        results: PathBuf,
    },
}

impl Cli {
    fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut o = Vec::new();
        let mut push = |k: &str, v: String| o.push((k.to_string(), v));
        if let Some(m) = self.model {
            let (preset, scheme) = match m {
                Preset::Big => ("big", "full10"),
                Preset::Small => ("small", "grouped5"),
            };
            push("model.preset", preset.into());
            push("data.scheme", scheme.into());
        }
        if let Some(s) = self.seed {
            push("train.seed", s.to_string());
            push("prune.seed", s.to_string());
        }
        if let Some(s) = &self.strategy {
            push("prune.strategy", s.clone());
            push("sweep.strategies", s.clone());
        }
        if let Some(p) = self.percent {
            push("prune.percent", p.to_string());
            push("sweep.percents", p.to_string());
        }
        if let Some(w) = self.workers {
            push("sweep.workers", w.to_string());
        }
        if self.resume {
            push("sweep.resume", "true".into());
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::BadConfigValue {
                key: kv.clone(),
                reason: "expected KEY=VALUE".into(),
            })?;
            o.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(o)
    }

    fn resolve(&self) -> Result<Config> {
        let text = match &self.config {
            Some(p) => Some(fs::read_to_string(p).map_err(|e| io_err(p, e))?),
            None => None,
        };
        let mut cfg = Config::resolve(text.as_deref(), &self.overrides()?)?;
        let env = std::env::var(OUT_ENV).ok();
        cfg.out_dir = cfg.resolve_out_dir(self.out_dir.as_deref(), env.as_deref());
        Ok(cfg)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

fn cmd_train(cfg: &Config) -> Result<()> {
    cfg.validate()?;
    let data = cfg.data.build_split()?;
    ensure_dir(&cfg.out_dir)?;
    let base = train_base(&cfg.model, &cfg.train, &data, cfg.train.seed)?;
    let ckpt = cfg.out_dir.join("model.pbnet");
    base.net.save(&ckpt)?;
    let f1 = evaluate(&base.net, &data.test)?;
    println!("checkpoint {}", ckpt.display());
    println!(
        "macro_f1={f1} params={} train_seconds={:.3}",
        base.net.count_params(CountMode::All),
        base.train_seconds
    );
    let mut m = RunManifest::new("train", cfg);
    m.inputs.extend(cfg.data.path.clone());
    m.outputs.push(ckpt);
    m.write(&cfg.out_dir.join("train.manifest"))
}

fn cmd_prune(cfg: &Config, checkpoint: &Path) -> Result<()> {
    cfg.validate()?;
    let net = PrunableNet::load(checkpoint)?;
    let data = cfg.data.build_split()?;
    let base = BaseModel {
        net,
        train_seconds: 0.0,
        seed: cfg.train.seed,
    };
    let sc = cfg.strategy_config();
    let wrap = |e: Error| Error::Cell {
        strategy: sc.strategy.name().into(),
        percent: sc.percent,
        seed: sc.seed,
        source: Box::new(e),
    };
    let (pruned, secs) = run_cell_net(&base, &sc, &data).map_err(wrap)?;
    let result = RunResult {
        strategy: sc.strategy.name().into(),
        percent: sc.percent,
        seed: sc.seed,
        f1_macro: evaluate(&pruned, &data.test)?,
        params_nonzero: pruned.count_params(CountMode::Nonzero),
        prune_seconds: secs,
        train_seconds: 0.0,
    };
    ensure_dir(&cfg.out_dir)?;
    let results = cfg.out_dir.join("results.csv");
    append_results(&results, std::slice::from_ref(&result))?;
    let out = cfg
        .out_dir
        .join(format!("pruned_{}_{}_{}.pbnet", sc.strategy, sc.percent, sc.seed));
    pruned.save(&out)?;
    println!(
        "{} percent={} seed={} macro_f1={} params_nonzero={} prune_seconds={:.3}",
        result.strategy, result.percent, result.seed, result.f1_macro, result.params_nonzero, secs
    );
    let mut m = RunManifest::new("prune", cfg);
    m.inputs.push(checkpoint.to_path_buf());
    m.inputs.extend(cfg.data.path.clone());
    m.outputs.extend([out, results]);
    m.write(&cfg.out_dir.join("prune.manifest"))
}

fn cmd_sweep(cfg: &Config) -> Result<()> {
    cfg.validate()?;
    let data = cfg.data.build_split()?;
    ensure_dir(&cfg.out_dir)?;
    let base = cached_base(&cfg.out_dir.join("cache"), &cfg.model, &cfg.train, &data, cfg.train.seed)?;
    let spec = SweepSpec {
        strategies: cfg.sweep.strategies.clone(),
        percents: cfg.sweep.percents.clone(),
        seeds: cfg.sweep.seeds.clone(),
        template: cfg.strategy_config(),
        workers: cfg.sweep.workers,
        resume: cfg.sweep.resume,
    };
    let results_path = cfg.out_dir.join("results.csv");
    let outcome = sweep(&spec, &base, &data, &results_path)?;
    let files = emit_report(&outcome.results, &cfg.out_dir, cfg.sweep.log_time)?;
    println!(
        "ran {} cells, skipped {}, {} rows in {}",
        outcome.ran,
        outcome.skipped,
        outcome.results.len(),
        files.results_csv.display()
    );
    print!("{}", fs::read_to_string(&files.table).map_err(|e| io_err(&files.table, e))?);
    let mut m = RunManifest::new("sweep", cfg);
    m.inputs.extend(cfg.data.path.clone());
    m.outputs
        .extend([files.results_csv, files.aggregate_csv, files.table, files.plot_csv]);
    m.write(&cfg.out_dir.join("sweep.manifest"))
}

fn cmd_synth(cfg: &Config, n: Option<usize>, output: Option<&Path>) -> Result<()> {
    let n = n.or(cfg.data.synth_per_class).unwrap_or(10);
    let records = synthesize_dataset(n, cfg.data.scheme, cfg.data.seed);
    let out = output.map_or_else(|| cfg.out_dir.join("synth.csv"), Path::to_path_buf);
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        ensure_dir(dir)?;
    }
    save_csv(&out, &records)?;
    println!("{} records -> {}", records.len(), out.display());
    let mut m = RunManifest::new("synth", cfg);
    m.outputs.push(out.clone());
    let manifest = out.with_extension("manifest");
    m.write(&manifest)
}

fn cmd_report(cfg: &Config, results: &Path) -> Result<()> {
    let rows = load_results(results)?;
    let files = emit_report(&rows, &cfg.out_dir, cfg.sweep.log_time)?;
    println!("{} rows -> {}", rows.len(), files.aggregate_csv.display());
    let mut m = RunManifest::new("report", cfg);
    m.inputs.push(results.to_path_buf());
    m.outputs
        .extend([files.aggregate_csv, files.table, files.plot_csv]);
    m.write(&cfg.out_dir.join("report.manifest"))
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = cli.resolve()?;
    match &cli.command {
        Command::Train => cmd_train(&cfg),
        Command::Prune { checkpoint } => cmd_prune(&cfg, checkpoint),
        Command::Sweep => cmd_sweep(&cfg),
        Command::Synth { n, output } => cmd_synth(&cfg, *n, output.as_deref()),
        Command::Report { results } => cmd_report(&cfg, results),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                eprintln!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
