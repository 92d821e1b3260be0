//! Command-line entry point. Exit codes: 0 success, 2 configuration error
//! (bad flags, unreadable or invalid config/map/input files), 3 runtime
//! error (a failure while running or writing results).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qdbench::archive::{load_heatmap, Heatmap};
use qdbench::config::{load_config, ExperimentConfig};
use qdbench::runner::{run_experiment, validate_experiment, write_artifacts};

#[derive(Parser)]
#[command(
    name = "qdbench",
    version,
    about = "Lexicase selection with objective subaggregation vs MAP-Elites, \
             on knight's tour and maze benchmarks"
)]
struct Cli {
    /// Worker threads for evaluation (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Overrides {
    /// Output directory (default: the config's out_dir; for sweep, "out")
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the replicate count
    #[arg(long)]
    replicates: Option<usize>,
    /// Override the base seed (replicate i runs at seed+i)
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config; writes metrics.csv, summary.csv, archive.csv
    Run {
        /// Config file
        config: Option<PathBuf>,
        /// Config file (alternative to the positional form)
        #[arg(long = "config", value_name = "FILE")]
        config_flag: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run every *.cfg in a directory, one output subdirectory per config
    Sweep {
        /// Directory containing .cfg files
        config_dir: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Render an archive.csv heatmap as a text grid
    Heatmap {
        /// Heatmap CSV produced by run/sweep
        archive: PathBuf,
    },
}

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn fail(code: u8, err: &qdbench::Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

/// Load a config and apply CLI overrides; all failures here are the
/// caller's configuration, not the run.
fn prepare(path: &Path, overrides: &Overrides) -> qdbench::Result<ExperimentConfig> {
    let mut cfg = load_config(path)?;
    if let Some(replicates) = overrides.replicates {
        cfg.override_replicates(replicates)?;
    }
    if let Some(seed) = overrides.seed {
        cfg.override_seed(seed);
    }
    validate_experiment(&cfg)?;
    Ok(cfg)
}

fn cmd_run(
    config: Option<PathBuf>,
    config_flag: Option<PathBuf>,
    overrides: &Overrides,
) -> ExitCode {
    let path = match (config, config_flag) {
        (Some(a), Some(b)) if a != b => {
            eprintln!(
                "error: positional config {} conflicts with --config {}",
                a.display(),
                b.display()
            );
            return ExitCode::from(EXIT_CONFIG);
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => {
            eprintln!("error: no config file given (positional or --config)");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let cfg = match prepare(&path, overrides) {
        Ok(cfg) => cfg,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    let out = overrides.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
    let artifacts = match run_experiment(&cfg) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_RUNTIME, &e),
    };
    if let Err(e) = write_artifacts(&artifacts, &out) {
        return fail(EXIT_RUNTIME, &e);
    }
    println!("wrote {}", out.display());
    ExitCode::SUCCESS
}

fn cmd_sweep(config_dir: &Path, overrides: &Overrides) -> ExitCode {
    let entries = match std::fs::read_dir(config_dir) {
        Ok(entries) => entries,
        Err(e) => return fail(EXIT_CONFIG, &qdbench::Error::io(config_dir, e)),
    };
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "cfg"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        eprintln!("error: no .cfg files in {}", config_dir.display());
        return ExitCode::from(EXIT_CONFIG);
    }
    // Validate the whole grid before running any of it.
    let mut jobs: Vec<(String, ExperimentConfig)> = Vec::with_capacity(paths.len());
    for path in &paths {
        let cfg = match prepare(path, overrides) {
            Ok(cfg) => cfg,
            Err(e) => return fail(EXIT_CONFIG, &e),
        };
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("run")
            .to_string();
        jobs.push((stem, cfg));
    }
    let root = overrides
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out"));
    for (stem, cfg) in &jobs {
        let artifacts = match run_experiment(cfg) {
            Ok(a) => a,
            Err(e) => return fail(EXIT_RUNTIME, &e),
        };
        let dir = root.join(stem);
        if let Err(e) = write_artifacts(&artifacts, &dir) {
            return fail(EXIT_RUNTIME, &e);
        }
        println!("wrote {}", dir.display());
    }
    ExitCode::SUCCESS
}

/// Text rendering: highest y row on top, '.' for empty cells, digits 0-9
/// scaling occupant scores from the archive's min to max.
fn render_heatmap(hm: &Heatmap) -> String {
    let mut out = format!(
        "{}x{} cells over [{}, {}] x [{}, {}]\n",
        hm.rows, hm.cols, hm.bounds.x_min, hm.bounds.x_max, hm.bounds.y_min, hm.bounds.y_max
    );
    let occupied: Vec<f64> = (0..hm.rows)
        .flat_map(|r| (0..hm.cols).filter_map(move |c| hm.value(r, c)))
        .collect();
    let Some((min, max)) = occupied
        .iter()
        .fold(None, |acc: Option<(f64, f64)>, &v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
    else {
        out.push_str("empty archive\n");
        return out;
    };
    out.push_str(&format!(
        "{} occupied, score min {} max {} ('.' empty, 0-9 scaled)\n\n",
        occupied.len(),
        min,
        max
    ));
    for row in (0..hm.rows).rev() {
        for col in 0..hm.cols {
            out.push(match hm.value(row, col) {
                None => '.',
                Some(v) if max > min => {
                    let digit = (((v - min) / (max - min)) * 10.0).floor().min(9.0);
                    char::from(b'0' + digit as u8)
                }
                Some(_) => '9',
            });
        }
        out.push('\n');
    }
    out
}

fn cmd_heatmap(archive: &Path) -> ExitCode {
    let hm = match load_heatmap(archive) {
        Ok(hm) => hm,
        Err(e) => return fail(EXIT_CONFIG, &e),
    };
    print!("{}", render_heatmap(&hm));
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            return ExitCode::from(EXIT_RUNTIME);
        }
    }
    match cli.command {
        Command::Run {
            config,
            config_flag,
            overrides,
        } => cmd_run(config, config_flag, &overrides),
        Command::Sweep {
            config_dir,
            overrides,
        } => cmd_sweep(&config_dir, &overrides),
        Command::Heatmap { archive } => cmd_heatmap(&archive),
    }
}
