//! Experiment configuration: a sectioned key-value text format, strictly
//! validated. Unknown sections or keys, duplicates, and cross-field
//! inconsistencies are all errors; silent typos in experiment configs are
//! worse than loud ones.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::subagg::{SubaggKind, SubaggSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainKind {
    Knights,
    MazeDeceptive,
    MazeIllumination,
}

impl DomainKind {
    pub fn is_maze(self) -> bool {
        !matches!(self, DomainKind::Knights)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlgorithmKind {
    MapElites,
    Lexicase,
}

/// Replicate seeding: a base seed (replicate i runs at base+i) or an
/// explicit per-replicate list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSpec {
    Base(u64),
    List(Vec<u64>),
}

/// Maze geometry source. Paths are resolved against the config file's
/// directory by [`load_config`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MapSource {
    BuiltinDeceptive,
    Path(PathBuf),
}

pub const DEFAULT_POPULATION: usize = 256;
pub const DEFAULT_GENERATIONS: usize = 300;
pub const DEFAULT_REPLICATES: usize = 10;
pub const DEFAULT_BASE_SEED: u64 = 42;
pub const DEFAULT_PER_GENE_RATE: f64 = 2.0 / 63.0;
pub const DEFAULT_SIGMA: f64 = 0.1;
pub const DEFAULT_STEPS: usize = 250;
pub const DEFAULT_HIDDEN: usize = 8;
pub const DEFAULT_MAZE_ARCHIVE_SIDE: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: DomainKind,
    pub algorithm: AlgorithmKind,
    /// Required for lexicase, rejected for MAP-Elites.
    pub subagg: Option<SubaggSpec>,
    pub epsilon: f64,
    pub population: usize,
    pub generations: usize,
    pub replicates: usize,
    pub seeds: SeedSpec,
    pub per_gene_rate: f64,
    pub sigma: f64,
    pub map: MapSource,
    pub steps: usize,
    pub hidden: usize,
    pub rho: Option<f64>,
    pub laser_range: Option<f64>,
    pub archive_rows: usize,
    pub archive_cols: usize,
    pub out_dir: PathBuf,
}

impl ExperimentConfig {
    /// Master seed for replicate i.
    pub fn replicate_seed(&self, replicate: usize) -> u64 {
        match &self.seeds {
            SeedSpec::Base(base) => base.wrapping_add(replicate as u64),
            SeedSpec::List(list) => list[replicate],
        }
    }

    /// CLI `--seed`: switch to base seeding from the given seed.
    pub fn override_seed(&mut self, base: u64) {
        self.seeds = SeedSpec::Base(base);
    }

    /// CLI `--replicates`: resize, which an explicit seed list of a
    /// different length cannot accommodate.
    pub fn override_replicates(&mut self, replicates: usize) -> Result<()> {
        if replicates == 0 {
            return Err(Error::config("replicates must be at least 1"));
        }
        if let SeedSpec::List(list) = &self.seeds {
            if list.len() != replicates {
                return Err(Error::config(format!(
                    "--replicates {} conflicts with the config's seed list of length {}",
                    replicates,
                    list.len()
                )));
            }
        }
        self.replicates = replicates;
        Ok(())
    }
}

/// One parsed `key = value` with its line for diagnostics.
type RawSection = BTreeMap<String, (String, usize)>;

fn split_sections(name: &str, text: &str) -> Result<BTreeMap<String, (RawSection, usize)>> {
    let mut sections: BTreeMap<String, (RawSection, usize)> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(header) = line.strip_prefix('[') {
            let Some(section) = header.strip_suffix(']') else {
                return Err(Error::parse(name, lineno, "unterminated section header"));
            };
            let section = section.trim();
            if section.is_empty() {
                return Err(Error::parse(name, lineno, "empty section name"));
            }
            if sections.contains_key(section) {
                return Err(Error::parse(
                    name,
                    lineno,
                    format!("duplicate section [{section}]"),
                ));
            }
            sections.insert(section.to_string(), (RawSection::new(), lineno));
            current = Some(section.to_string());
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(
                name,
                lineno,
                format!("expected key = value, got {line:?}"),
            ));
        };
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() {
            return Err(Error::parse(name, lineno, "empty key"));
        }
        if value.is_empty() {
            return Err(Error::parse(
                name,
                lineno,
                format!("empty value for {key:?}"),
            ));
        }
        let Some(section) = &current else {
            return Err(Error::parse(
                name,
                lineno,
                format!("key {key:?} outside any section"),
            ));
        };
        let entries = &mut sections.get_mut(section).expect("current section exists").0;
        if entries.contains_key(key) {
            return Err(Error::parse(name, lineno, format!("duplicate key {key:?}")));
        }
        entries.insert(key.to_string(), (value.to_string(), lineno));
    }
    Ok(sections)
}

/// Typed accessor over one section that tracks which keys were consumed so
/// leftovers can be rejected.
struct Section<'a> {
    file: &'a str,
    entries: RawSection,
}

impl<'a> Section<'a> {
    fn empty(file: &'a str) -> Section<'a> {
        Section {
            file,
            entries: RawSection::new(),
        }
    }

    fn take_raw(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn take<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((value, lineno)) => value.parse::<T>().map(Some).map_err(|_| {
                Error::parse(
                    self.file,
                    lineno,
                    format!("bad value {value:?} for {key:?}"),
                )
            }),
        }
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<(f64, usize)>> {
        match self.take_raw(key) {
            None => Ok(None),
            Some((value, lineno)) => {
                let parsed: f64 = value.parse().map_err(|_| {
                    Error::parse(
                        self.file,
                        lineno,
                        format!("bad value {value:?} for {key:?}"),
                    )
                })?;
                if !parsed.is_finite() {
                    return Err(Error::parse(
                        self.file,
                        lineno,
                        format!("non-finite value for {key:?}"),
                    ));
                }
                Ok(Some((parsed, lineno)))
            }
        }
    }

    fn finish(self) -> Result<()> {
        if let Some((key, (_, lineno))) = self.entries.into_iter().next() {
            return Err(Error::parse(
                self.file,
                lineno,
                format!("unknown key {key:?}"),
            ));
        }
        Ok(())
    }
}

/// Parse and validate a config. Pure function of the text; map paths stay
/// unresolved (see [`load_config`]).
pub fn parse_config(name: &str, text: &str) -> Result<ExperimentConfig> {
    let mut sections = split_sections(name, text)?;
    let known = [
        "experiment",
        "subagg",
        "mutation",
        "maze",
        "archive",
        "output",
    ];
    for (section, (_, lineno)) in &sections {
        if !known.contains(&section.as_str()) {
            return Err(Error::parse(
                name,
                *lineno,
                format!("unknown section [{section}]"),
            ));
        }
    }
    let subagg_present = sections.contains_key("subagg");
    let maze_present = sections.contains_key("maze");
    let mut grab = |key: &str| -> Section<'_> {
        match sections.remove(key) {
            Some((entries, _)) => Section {
                file: name,
                entries,
            },
            None => Section::empty(name),
        }
    };
    let mut experiment = grab("experiment");
    let mut subagg_sec = grab("subagg");
    let mut mutation = grab("mutation");
    let mut maze_sec = grab("maze");
    let mut archive_sec = grab("archive");
    let mut output = grab("output");

    let domain = match experiment.take_raw("domain") {
        None => return Err(Error::parse(name, 0, "missing experiment.domain")),
        Some((v, lineno)) => match v.as_str() {
            "knights" => DomainKind::Knights,
            "maze_deceptive" => DomainKind::MazeDeceptive,
            "maze_illumination" => DomainKind::MazeIllumination,
            other => {
                return Err(Error::parse(
                    name,
                    lineno,
                    format!("unknown domain {other:?}"),
                ))
            }
        },
    };
    let algorithm = match experiment.take_raw("algorithm") {
        None => return Err(Error::parse(name, 0, "missing experiment.algorithm")),
        Some((v, lineno)) => match v.as_str() {
            "map_elites" => AlgorithmKind::MapElites,
            "lexicase" => AlgorithmKind::Lexicase,
            other => {
                return Err(Error::parse(
                    name,
                    lineno,
                    format!("unknown algorithm {other:?}"),
                ))
            }
        },
    };
    let population = experiment
        .take::<usize>("population")?
        .unwrap_or(DEFAULT_POPULATION);
    let generations = experiment
        .take::<usize>("generations")?
        .unwrap_or(DEFAULT_GENERATIONS);
    let replicates = experiment
        .take::<usize>("replicates")?
        .unwrap_or(DEFAULT_REPLICATES);
    if population == 0 {
        return Err(Error::parse(name, 0, "population must be at least 1"));
    }
    if replicates == 0 {
        return Err(Error::parse(name, 0, "replicates must be at least 1"));
    }
    let base_seed = experiment.take::<u64>("seed")?;
    let seed_list = match experiment.take_raw("seeds") {
        None => None,
        Some((value, lineno)) => {
            let list: Vec<u64> = value
                .split(',')
                .map(|part| {
                    part.trim().parse::<u64>().map_err(|_| {
                        Error::parse(name, lineno, format!("bad seed {:?}", part.trim()))
                    })
                })
                .collect::<Result<_>>()?;
            if list.len() != replicates {
                return Err(Error::parse(
                    name,
                    lineno,
                    format!("{} seeds listed for {} replicates", list.len(), replicates),
                ));
            }
            Some(list)
        }
    };
    let seeds = match (base_seed, seed_list) {
        (Some(_), Some(_)) => {
            return Err(Error::parse(
                name,
                0,
                "seed and seeds are mutually exclusive",
            ))
        }
        (Some(base), None) => SeedSpec::Base(base),
        (None, Some(list)) => SeedSpec::List(list),
        (None, None) => SeedSpec::Base(DEFAULT_BASE_SEED),
    };
    experiment.finish()?;

    let subagg = match algorithm {
        AlgorithmKind::Lexicase => {
            if !subagg_present {
                return Err(Error::parse(
                    name,
                    0,
                    "lexicase requires a [subagg] section",
                ));
            }
            let kind = match subagg_sec.take_raw("kind") {
                None => return Err(Error::parse(name, 0, "missing subagg.kind")),
                Some((v, lineno)) => match v.as_str() {
                    "space" => SubaggKind::SpaceQuadtree,
                    "time" => SubaggKind::TimeWindows,
                    other => {
                        return Err(Error::parse(
                            name,
                            lineno,
                            format!("unknown subagg kind {other:?}"),
                        ))
                    }
                },
            };
            let n = match subagg_sec.take::<usize>("objectives")? {
                None => return Err(Error::parse(name, 0, "missing subagg.objectives")),
                Some(n) => n,
            };
            Some(SubaggSpec::new(kind, n)?)
        }
        AlgorithmKind::MapElites => {
            if subagg_present {
                return Err(Error::parse(
                    name,
                    0,
                    "[subagg] only applies to lexicase; map_elites ignores objectives",
                ));
            }
            None
        }
    };
    let epsilon = match subagg_sec.take_f64("epsilon")? {
        None => 0.0,
        Some((eps, lineno)) => {
            if eps < 0.0 {
                return Err(Error::parse(name, lineno, "epsilon must be non-negative"));
            }
            eps
        }
    };
    subagg_sec.finish()?;

    if let Some(spec) = &subagg {
        if spec.kind == SubaggKind::TimeWindows && domain == DomainKind::Knights {
            return Err(Error::parse(
                name,
                0,
                "time windows are invalid for knights: tours can be a single step, \
                 shorter than the window count",
            ));
        }
    }

    let per_gene_rate = match mutation.take_f64("per_gene_rate")? {
        None => DEFAULT_PER_GENE_RATE,
        Some((rate, lineno)) => {
            if domain.is_maze() {
                return Err(Error::parse(
                    name,
                    lineno,
                    "per_gene_rate applies to the knights domain only",
                ));
            }
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::parse(
                    name,
                    lineno,
                    "per_gene_rate must be in [0, 1]",
                ));
            }
            rate
        }
    };
    let sigma = match mutation.take_f64("sigma")? {
        None => DEFAULT_SIGMA,
        Some((sigma, lineno)) => {
            if !domain.is_maze() {
                return Err(Error::parse(
                    name,
                    lineno,
                    "sigma applies to maze domains only",
                ));
            }
            if sigma <= 0.0 {
                return Err(Error::parse(name, lineno, "sigma must be positive"));
            }
            sigma
        }
    };
    mutation.finish()?;

    if maze_present && !domain.is_maze() {
        return Err(Error::parse(
            name,
            0,
            "[maze] section is only valid for maze domains",
        ));
    }
    let map = match maze_sec.take_raw("map") {
        None => MapSource::BuiltinDeceptive,
        Some((v, _)) if v == "builtin:deceptive" => MapSource::BuiltinDeceptive,
        Some((v, _)) => MapSource::Path(PathBuf::from(v)),
    };
    let steps = match maze_sec.take::<usize>("steps")? {
        None => DEFAULT_STEPS,
        Some(0) => return Err(Error::parse(name, 0, "steps must be at least 1")),
        Some(s) => s,
    };
    let hidden = match maze_sec.take::<usize>("hidden")? {
        None => DEFAULT_HIDDEN,
        Some(0) => return Err(Error::parse(name, 0, "hidden must be at least 1")),
        Some(h) => h,
    };
    let positive = |sec: &mut Section<'_>, key: &str| -> Result<Option<f64>> {
        match sec.take_f64(key)? {
            None => Ok(None),
            Some((v, lineno)) => {
                if v <= 0.0 {
                    return Err(Error::parse(
                        name,
                        lineno,
                        format!("{key} must be positive"),
                    ));
                }
                Ok(Some(v))
            }
        }
    };
    let rho = positive(&mut maze_sec, "rho")?;
    let laser_range = positive(&mut maze_sec, "laser_range")?;
    maze_sec.finish()?;

    let (default_rows, default_cols) = if domain.is_maze() {
        (DEFAULT_MAZE_ARCHIVE_SIDE, DEFAULT_MAZE_ARCHIVE_SIDE)
    } else {
        (8, 8)
    };
    let archive_rows = archive_sec.take::<usize>("rows")?.unwrap_or(default_rows);
    let archive_cols = archive_sec.take::<usize>("cols")?.unwrap_or(default_cols);
    archive_sec.finish()?;
    if archive_rows == 0 || archive_cols == 0 {
        return Err(Error::parse(name, 0, "archive grid must be at least 1x1"));
    }
    if domain == DomainKind::Knights && (archive_rows, archive_cols) != (8, 8) {
        return Err(Error::parse(
            name,
            0,
            "the knights archive is pinned to 8x8, one cell per board tile",
        ));
    }

    let out_dir = output
        .take_raw("out_dir")
        .map(|(v, _)| PathBuf::from(v))
        .unwrap_or_else(|| PathBuf::from("out"));
    output.finish()?;

    Ok(ExperimentConfig {
        domain,
        algorithm,
        subagg,
        epsilon,
        population,
        generations,
        replicates,
        seeds,
        per_gene_rate,
        sigma,
        map,
        steps,
        hidden,
        rho,
        laser_range,
        archive_rows,
        archive_cols,
        out_dir,
    })
}

/// Read and parse a config file; relative map paths resolve against the
/// config file's directory.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&path.display().to_string(), &text)?;
    if let MapSource::Path(map_path) = &cfg.map {
        if map_path.is_relative() {
            let base = path.parent().unwrap_or_else(|| Path::new("."));
            cfg.map = MapSource::Path(base.join(map_path));
        }
    }
    Ok(cfg)
}
