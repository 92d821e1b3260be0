//! Experiment orchestration: the lexicase and MAP-Elites loops, replicate
//! aggregation, and the CSV formats the CLI writes.
//!
//! Determinism contract: all RNG consumption (genome init, selection,
//! mutation) is serial on the replicate's own stream; only the RNG-free
//! evaluations fan out to worker threads, and their results are consumed in
//! population-index order. Outputs are therefore byte-identical for a given
//! seed regardless of thread count.

use std::path::Path;

use rayon::prelude::*;

use crate::archive::Archive;
use crate::config::{AlgorithmKind, DomainKind, ExperimentConfig, MapSource};
use crate::domain::{Domain, KnightsDomain, MazeDomain};
use crate::evo::MlpLayout;
use crate::maze::{load_maze_map, MazeMap, MazePhysics, RewardMode};
use crate::rng::RngStream;
use crate::selection::{LexicaseSelector, ObjectiveMatrix};
use crate::subagg::{subaggregate, ObjectiveVector, SubaggSpec, Trajectory};
use crate::{Error, Result};

/// One generation's statistics for one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub replicate: usize,
    pub generation: usize,
    /// Cumulative evaluate calls: p·(generation+1), counted not derived.
    pub evaluations: usize,
    pub best_score: f64,
    pub qd_score: f64,
    pub coverage: f64,
}

/// Per-generation mean and sample standard deviation across replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub generation: usize,
    pub evaluations: usize,
    pub best_score_mean: f64,
    pub best_score_std: f64,
    pub qd_score_mean: f64,
    pub qd_score_std: f64,
    pub coverage_mean: f64,
    pub coverage_std: f64,
}

fn metrics_row<G: Clone>(
    replicate: usize,
    generation: usize,
    evaluations: usize,
    archive: &Archive<G>,
) -> Result<MetricsRow> {
    Ok(MetricsRow {
        replicate,
        generation,
        evaluations,
        best_score: archive.best_score()?,
        qd_score: archive.qd_score(),
        coverage: archive.coverage(),
    })
}

/// Evaluate a population on worker threads; results keep population order.
fn evaluate_all<D: Domain>(domain: &D, population: &[D::Genome]) -> Vec<Trajectory> {
    population.par_iter().map(|g| domain.evaluate(g)).collect()
}

/// One lexicase replicate. Every generation the whole population is scored
/// into a statistics archive (the same insertion rule MAP-Elites uses) so
/// the two systems are compared on identical metrics at identical budgets.
pub fn run_lexicase<D: Domain>(
    domain: &D,
    spec: SubaggSpec,
    selector: &LexicaseSelector,
    population_size: usize,
    generations: usize,
    replicate: usize,
    seed: u64,
) -> Result<(Vec<MetricsRow>, Archive<D::Genome>)> {
    if population_size == 0 {
        return Err(Error::config("population must be at least 1"));
    }
    let mut rng = RngStream::new(seed, replicate as u64);
    let mut archive = Archive::new(domain.measure_spec(), domain.score_floor());
    let mut population: Vec<D::Genome> = (0..population_size)
        .map(|_| domain.init_genome(&mut rng))
        .collect();
    let mut rows = Vec::with_capacity(generations + 1);
    let mut evaluations = 0usize;
    for generation in 0..=generations {
        let trajectories = evaluate_all(domain, &population);
        evaluations += trajectories.len();
        for (genome, traj) in population.iter().zip(&trajectories) {
            archive.insert(genome.clone(), domain.measure(traj), domain.score(traj))?;
        }
        rows.push(metrics_row(replicate, generation, evaluations, &archive)?);
        if generation == generations {
            break;
        }
        let vectors: Vec<ObjectiveVector> = trajectories
            .iter()
            .map(|t| subaggregate(t, spec))
            .collect::<Result<_>>()?;
        let matrix = ObjectiveMatrix::from_rows(&vectors)?;
        let parents = selector.select_parents(&matrix, population_size, &mut rng)?;
        population = parents
            .into_iter()
            .map(|idx| domain.mutate(&population[idx], &mut rng))
            .collect();
    }
    Ok((rows, archive))
}

/// One MAP-Elites replicate: seed the archive with p random genomes, then
/// per generation mutate a uniform batch of p elites and re-insert.
pub fn run_map_elites<D: Domain>(
    domain: &D,
    population_size: usize,
    generations: usize,
    replicate: usize,
    seed: u64,
) -> Result<(Vec<MetricsRow>, Archive<D::Genome>)> {
    if population_size == 0 {
        return Err(Error::config("population must be at least 1"));
    }
    let mut rng = RngStream::new(seed, replicate as u64);
    let mut archive = Archive::new(domain.measure_spec(), domain.score_floor());
    let seeds: Vec<D::Genome> = (0..population_size)
        .map(|_| domain.init_genome(&mut rng))
        .collect();
    let mut rows = Vec::with_capacity(generations + 1);
    let mut evaluations = 0usize;
    let trajectories = evaluate_all(domain, &seeds);
    evaluations += trajectories.len();
    for (genome, traj) in seeds.into_iter().zip(&trajectories) {
        archive.insert(genome, domain.measure(traj), domain.score(traj))?;
    }
    rows.push(metrics_row(replicate, 0, evaluations, &archive)?);
    for generation in 1..=generations {
        let children: Vec<D::Genome> = {
            let batch = archive.select_batch(population_size, &mut rng)?;
            batch
                .into_iter()
                .map(|parent| domain.mutate(parent, &mut rng))
                .collect()
        };
        let trajectories = evaluate_all(domain, &children);
        evaluations += trajectories.len();
        for (genome, traj) in children.into_iter().zip(&trajectories) {
            archive.insert(genome, domain.measure(traj), domain.score(traj))?;
        }
        rows.push(metrics_row(replicate, generation, evaluations, &archive)?);
    }
    Ok((rows, archive))
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    debug_assert!(n >= 1);
    let mean = values.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

/// Collapse per-replicate tables into per-generation mean and sample std.
/// Tables must share the exact (generation, evaluations) axis.
pub fn aggregate_replicates(tables: &[Vec<MetricsRow>]) -> Result<Vec<SummaryRow>> {
    let Some(first) = tables.first() else {
        return Err(Error::input("aggregation needs at least one replicate"));
    };
    for table in tables {
        if table.len() != first.len()
            || table
                .iter()
                .zip(first)
                .any(|(a, b)| a.generation != b.generation || a.evaluations != b.evaluations)
        {
            return Err(Error::input(
                "replicate tables have misaligned generation axes",
            ));
        }
    }
    Ok(first
        .iter()
        .enumerate()
        .map(|(i, head)| {
            let column = |f: fn(&MetricsRow) -> f64| tables.iter().map(move |t| f(&t[i]));
            let (best_score_mean, best_score_std) = mean_std(column(|r| r.best_score));
            let (qd_score_mean, qd_score_std) = mean_std(column(|r| r.qd_score));
            let (coverage_mean, coverage_std) = mean_std(column(|r| r.coverage));
            SummaryRow {
                generation: head.generation,
                evaluations: head.evaluations,
                best_score_mean,
                best_score_std,
                qd_score_mean,
                qd_score_std,
                coverage_mean,
                coverage_std,
            }
        })
        .collect())
}

pub const METRICS_HEADER: &str = "replicate,generation,evaluations,best_score,qd_score,coverage";
pub const SUMMARY_HEADER: &str = "generation,evaluations,best_score_mean,best_score_std,\
                                  qd_score_mean,qd_score_std,coverage_mean,coverage_std";

pub fn metrics_to_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.replicate, r.generation, r.evaluations, r.best_score, r.qd_score, r.coverage
        ));
    }
    out
}

pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::with_capacity(96 * (rows.len() + 1));
    out.push_str(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.generation,
            r.evaluations,
            r.best_score_mean,
            r.best_score_std,
            r.qd_score_mean,
            r.qd_score_std,
            r.coverage_mean,
            r.coverage_std
        ));
    }
    out
}

/// Strict inverse of [`metrics_to_csv`]: exact header, 6 fields per row,
/// finite floats, rows densely ordered by (replicate, generation) with the
/// shared evaluations-per-generation schedule.
pub fn parse_metrics_csv(name: &str, text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == METRICS_HEADER => {}
        _ => return Err(Error::parse(name, 1, "bad or missing metrics header")),
    }
    let mut rows: Vec<MetricsRow> = Vec::new();
    let mut per_generation: Option<usize> = None;
    for (idx, line) in lines {
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::parse(
                name,
                lineno,
                format!("expected 6 fields, got {}", fields.len()),
            ));
        }
        let int = |i: usize| -> Result<usize> {
            fields[i]
                .parse::<usize>()
                .map_err(|_| Error::parse(name, lineno, format!("bad integer {:?}", fields[i])))
        };
        let float = |i: usize| -> Result<f64> {
            let v: f64 = fields[i]
                .parse()
                .map_err(|_| Error::parse(name, lineno, format!("bad number {:?}", fields[i])))?;
            if !v.is_finite() {
                return Err(Error::parse(name, lineno, "non-finite metric"));
            }
            Ok(v)
        };
        let row = MetricsRow {
            replicate: int(0)?,
            generation: int(1)?,
            evaluations: int(2)?,
            best_score: float(3)?,
            qd_score: float(4)?,
            coverage: float(5)?,
        };
        let expected = match rows.last() {
            None => (0, 0),
            Some(prev) if prev.replicate == row.replicate => (prev.replicate, prev.generation + 1),
            Some(prev) => (prev.replicate + 1, 0),
        };
        if (row.replicate, row.generation) != expected {
            return Err(Error::parse(
                name,
                lineno,
                format!(
                    "rows must advance by (replicate, generation); expected {expected:?}, \
                     got ({}, {})",
                    row.replicate, row.generation
                ),
            ));
        }
        let per_gen = *per_generation.get_or_insert(row.evaluations);
        if per_gen == 0 || row.evaluations != per_gen * (row.generation + 1) {
            return Err(Error::parse(
                name,
                lineno,
                "inconsistent evaluations column",
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Everything one experiment produces: flattened per-replicate metrics, the
/// cross-replicate summary, and replicate 0's final archive as heatmap CSV.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub metrics: Vec<MetricsRow>,
    pub summary: Vec<SummaryRow>,
    pub archive_csv: String,
}

fn run_generic<D: Domain>(cfg: &ExperimentConfig, domain: &D) -> Result<RunArtifacts> {
    let selector = LexicaseSelector::new(cfg.epsilon)?;
    let results: Vec<(Vec<MetricsRow>, Archive<D::Genome>)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|replicate| {
            let seed = cfg.replicate_seed(replicate);
            match cfg.algorithm {
                AlgorithmKind::Lexicase => {
                    let spec = cfg
                        .subagg
                        .ok_or_else(|| Error::config("lexicase requires a subagg spec"))?;
                    run_lexicase(
                        domain,
                        spec,
                        &selector,
                        cfg.population,
                        cfg.generations,
                        replicate,
                        seed,
                    )
                }
                AlgorithmKind::MapElites => {
                    run_map_elites(domain, cfg.population, cfg.generations, replicate, seed)
                }
            }
        })
        .collect::<Result<_>>()?;
    let (tables, archives): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let summary = aggregate_replicates(&tables)?;
    let archive_csv = archives[0].to_heatmap_csv();
    Ok(RunArtifacts {
        metrics: tables.concat(),
        summary,
        archive_csv,
    })
}

fn resolve_maze_domain(cfg: &ExperimentConfig) -> Result<MazeDomain> {
    let map = match &cfg.map {
        MapSource::BuiltinDeceptive => MazeMap::builtin_deceptive(),
        MapSource::Path(path) => load_maze_map(path)?,
    };
    let mode = match cfg.domain {
        DomainKind::MazeDeceptive => RewardMode::Deceptive,
        _ => RewardMode::Illumination,
    };
    let defaults = MazePhysics::default();
    let physics = MazePhysics {
        rho: cfg.rho.unwrap_or(defaults.rho),
        laser_range: cfg.laser_range.unwrap_or(defaults.laser_range),
    };
    MazeDomain::new(
        map,
        mode,
        physics,
        MlpLayout::new(cfg.hidden)?,
        cfg.sigma,
        cfg.steps,
        cfg.archive_rows,
        cfg.archive_cols,
    )
}

/// Construct the configured domain and discard it, surfacing every error
/// that only shows up once the map file is loaded (bad path, start pose
/// colliding at the configured radius, ...). Lets a caller separate
/// configuration failures from failures of the run itself.
pub fn validate_experiment(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.domain {
        DomainKind::Knights => KnightsDomain::new(cfg.per_gene_rate).map(|_| ()),
        _ => resolve_maze_domain(cfg).map(|_| ()),
    }
}

/// Resolve the configured domain and run every replicate (concurrently;
/// each owns an independent stream).
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunArtifacts> {
    match cfg.domain {
        DomainKind::Knights => {
            let domain = KnightsDomain::new(cfg.per_gene_rate)?;
            run_generic(cfg, &domain)
        }
        DomainKind::MazeDeceptive | DomainKind::MazeIllumination => {
            let domain = resolve_maze_domain(cfg)?;
            run_generic(cfg, &domain)
        }
    }
}

/// Write metrics.csv, summary.csv, and archive.csv under out_dir.
pub fn write_artifacts(artifacts: &RunArtifacts, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let write = |file: &str, contents: &str| -> Result<()> {
        let path = out_dir.join(file);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))
    };
    write("metrics.csv", &metrics_to_csv(&artifacts.metrics))?;
    write("summary.csv", &summary_to_csv(&artifacts.summary))?;
    write("archive.csv", &artifacts.archive_csv)
}
