//! File-based pipeline stages shared by the command-line tool.
//!
//! All stages work inside one output directory:
//!
//! | stage   | reads                        | writes |
//! |---------|------------------------------|--------|
//! | synth   |                              | `corpus.jsonl`, `truth_records.csv`, `truth_edges.csv` |
//! | ingest  | input (default `corpus.jsonl`) | `records.jsonl` |
//! | dedup   | `records.jsonl`              | `assignments.csv`, `clusters.csv` |
//! | build   | `records.jsonl`, `assignments.csv` | `nodes.csv`, `edges.csv` |
//! | metrics | `nodes.csv`, `edges.csv`     | `metrics/` |
//! | fit     | `nodes.csv`, `edges.csv`     | `fits.json` |
//! | report  | `nodes.csv`, `edges.csv`, `assignments.csv` | `report/`, `report/manifest.json` |

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dedup::{cluster_duplicates, read_assignments, write_assignments, write_cluster_report, PaperCluster};
use crate::fit::{fit_power_law, fit_truncated_power_law, log_bin_from, FitError, FitOptions, FitResult, Histogram};
use crate::format::{round6, sig6};
use crate::graph::{build_bipartite, giant_component, project_tcn, CollaborationNetwork};
use crate::ingest::{parse_records, write_jsonl, Gender, IngestOptions, InputFormat, MajorField, ScientistRecord};
use crate::metrics::{
    binned_curve_with, degree_distribution, field_stats_with, metric_values, weight_distribution, write_collaboration_table,
    write_curve, write_field_stats, write_g_ratio_bars, write_histogram, write_m_ratio_table, write_population_table,
    GeometricBins, Metric,
};
use crate::synth::{generate_corpus, write_truth_edges, write_truth_records, SynthConfig, SynthError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl PipelineError {
    /// 1 usage, 2 data, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Usage(_) => 1,
            PipelineError::Data(_) => 2,
            PipelineError::Numerical(_) => 3,
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Data(format!("{}: {e}", path.display()))
}

impl From<FitError> for PipelineError {
    fn from(e: FitError) -> Self {
        PipelineError::Numerical(e.to_string())
    }
}

impl From<SynthError> for PipelineError {
    fn from(e: SynthError) -> Self {
        PipelineError::Usage(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Ingest,
    Dedup,
    Build,
    Metrics,
    Fit,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 7] =
        [Stage::Synth, Stage::Ingest, Stage::Dedup, Stage::Build, Stage::Metrics, Stage::Fit, Stage::Report];
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub out: PathBuf,
    /// Ingest input; `corpus.jsonl` in `out` when absent.
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub year_range: (i32, i32),
    pub dedup_threshold: f64,
    /// Log-bin ratio for the heavy-tail fits.
    pub bin_ratio: f64,
    /// Geometric bin ratio of the metric-versus-degree curves.
    pub curve_ratio: f64,
    pub k_min: u64,
    pub w_min: u64,
    pub synth: SynthConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            out: PathBuf::from("out"),
            input: None,
            format: InputFormat::Jsonl,
            year_range: IngestOptions::default().year_range,
            dedup_threshold: crate::dedup::DEFAULT_THRESHOLD,
            bin_ratio: 2.0,
            curve_ratio: 2.0,
            k_min: 1,
            w_min: 1,
            synth: SynthConfig::default(),
        }
    }
}

fn parse_value<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, PipelineError> {
    value
        .trim()
        .parse()
        .map_err(|_| PipelineError::Usage(format!("bad value `{value}` for `{key}`")))
}

fn parse_pair<T: std::str::FromStr>(key: &str, value: &str) -> Result<(T, T), PipelineError> {
    let (a, b) = value
        .split_once(',')
        .ok_or_else(|| PipelineError::Usage(format!("`{key}` takes two comma-separated values")))?;
    Ok((parse_value(key, a)?, parse_value(key, b)?))
}

fn parse_fields(key: &str, value: &str) -> Result<[f64; 8], PipelineError> {
    let parts: Vec<&str> = value.split(',').collect();
    if parts.len() != 8 {
        return Err(PipelineError::Usage(format!(
            "`{key}` takes 8 comma-separated values in the order {}",
            MajorField::ALL.map(MajorField::code).join(",")
        )));
    }
    let mut out = [0.0; 8];
    for (slot, p) in out.iter_mut().zip(parts) {
        *slot = parse_value(key, p)?;
    }
    Ok(out)
}

impl PipelineConfig {
    /// Keys accepted in config files and by `--set`.
    pub const KEYS: &'static [&'static str] = &[
        "out",
        "input",
        "format",
        "year_range",
        "dedup_threshold",
        "bin_ratio",
        "curve_ratio",
        "k_min",
        "w_min",
        "seed",
        "n_scientists",
        "field_proportions",
        "female_proportions",
        "unknown_field_rate",
        "unknown_gender_rate",
        "secondary_field_rate",
        "homophily",
        "interdisciplinarity",
        "degree_female",
        "degree_male",
        "weight_exponent",
        "max_weight",
        "solo_papers_mean",
        "external_authors_mean",
        "typo_rate",
        "first_char_typos",
        "doi_rate",
        "years",
    ];

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let s = &mut self.synth;
        match key {
            "out" => self.out = PathBuf::from(value.trim()),
            "input" => self.input = Some(PathBuf::from(value.trim())),
            "format" => self.format = parse_value(key, value)?,
            "year_range" => self.year_range = parse_pair(key, value)?,
            "dedup_threshold" => self.dedup_threshold = parse_value(key, value)?,
            "bin_ratio" => self.bin_ratio = parse_value(key, value)?,
            "curve_ratio" => self.curve_ratio = parse_value(key, value)?,
            "k_min" => self.k_min = parse_value(key, value)?,
            "w_min" => self.w_min = parse_value(key, value)?,
            "seed" => s.seed = parse_value(key, value)?,
            "n_scientists" => s.n_scientists = parse_value(key, value)?,
            "field_proportions" => s.field_proportions = parse_fields(key, value)?,
            "female_proportions" => s.female_proportions = parse_fields(key, value)?,
            "unknown_field_rate" => s.unknown_field_rate = parse_value(key, value)?,
            "unknown_gender_rate" => s.unknown_gender_rate = parse_value(key, value)?,
            "secondary_field_rate" => s.secondary_field_rate = parse_value(key, value)?,
            "homophily" => s.homophily = parse_value(key, value)?,
            "interdisciplinarity" => s.interdisciplinarity = parse_value(key, value)?,
            "degree_female" => s.degree_female = parse_pair(key, value)?,
            "degree_male" => s.degree_male = parse_pair(key, value)?,
            "weight_exponent" => s.weight_exponent = parse_value(key, value)?,
            "max_weight" => s.max_weight = parse_value(key, value)?,
            "solo_papers_mean" => s.solo_papers_mean = parse_value(key, value)?,
            "external_authors_mean" => s.external_authors_mean = parse_value(key, value)?,
            "typo_rate" => s.typo_rate = parse_value(key, value)?,
            "first_char_typos" => s.first_char_typos = parse_value(key, value)?,
            "doi_rate" => s.doi_rate = parse_value(key, value)?,
            "years" => s.years = parse_pair(key, value)?,
            _ => return Err(PipelineError::Usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are skipped.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), PipelineError> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| PipelineError::Usage(format!("config line {}: expected key = value", n + 1)))?;
            self.set(key.trim(), value.trim())
                .map_err(|e| PipelineError::Usage(format!("config line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if !(self.dedup_threshold > 0.0 && self.dedup_threshold < 1.0) {
            return Err(PipelineError::Usage(format!(
                "dedup threshold must lie in (0, 1), got {}",
                self.dedup_threshold
            )));
        }
        for (name, r) in [("bin ratio", self.bin_ratio), ("curve ratio", self.curve_ratio)] {
            if !(r > 1.0) || !r.is_finite() {
                return Err(PipelineError::Usage(format!("{name} must exceed 1, got {r}")));
            }
        }
        if self.k_min == 0 || self.w_min == 0 {
            return Err(PipelineError::Usage("fit ranges start at 1 or above".into()));
        }
        if self.year_range.0 > self.year_range.1 {
            return Err(PipelineError::Usage(format!("empty year range {:?}", self.year_range)));
        }
        self.synth.validate()?;
        Ok(())
    }

    /// Settings that shape outputs, for the run manifest. Paths are left out
    /// so runs in different directories compare equal.
    pub fn to_json(&self) -> Value {
        let s = &self.synth;
        let r = |x: f64| json!(round6(x));
        let arr = |a: &[f64; 8]| Value::Array(a.iter().map(|&x| r(x)).collect());
        json!({
            "format": match self.format { InputFormat::Jsonl => "jsonl", InputFormat::Csv => "csv" },
            "year_range": [self.year_range.0, self.year_range.1],
            "dedup_threshold": r(self.dedup_threshold),
            "bin_ratio": r(self.bin_ratio),
            "curve_ratio": r(self.curve_ratio),
            "k_min": self.k_min,
            "w_min": self.w_min,
            "synth": {
                "seed": s.seed,
                "n_scientists": s.n_scientists,
                "field_order": MajorField::ALL.map(MajorField::code),
                "field_proportions": arr(&s.field_proportions),
                "female_proportions": arr(&s.female_proportions),
                "unknown_field_rate": r(s.unknown_field_rate),
                "unknown_gender_rate": r(s.unknown_gender_rate),
                "secondary_field_rate": r(s.secondary_field_rate),
                "homophily": r(s.homophily),
                "interdisciplinarity": r(s.interdisciplinarity),
                "degree_female": [r(s.degree_female.0), r(s.degree_female.1)],
                "degree_male": [r(s.degree_male.0), r(s.degree_male.1)],
                "weight_exponent": r(s.weight_exponent),
                "max_weight": s.max_weight,
                "solo_papers_mean": r(s.solo_papers_mean),
                "external_authors_mean": r(s.external_authors_mean),
                "typo_rate": r(s.typo_rate),
                "first_char_typos": s.first_char_typos,
                "doi_rate": r(s.doi_rate),
                "years": [s.years.0, s.years.1],
            },
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn fit_options(&self) -> FitOptions {
        FitOptions {
            bin_ratio: self.bin_ratio,
            ..FitOptions::default()
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, PipelineError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn open(path: &Path, hint: &str) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| PipelineError::Data(format!("missing input {} ({e}); {hint}", path.display())))
}

/// Writes a file through `emit`, mapping any error to a data error.
fn write_with<E: std::fmt::Display>(
    path: &Path,
    emit: impl FnOnce(&mut BufWriter<File>) -> Result<(), E>,
) -> Result<(), PipelineError> {
    let mut w = create(path)?;
    emit(&mut w).map_err(|e| io_error(path, e))?;
    w.flush().map_err(|e| io_error(path, e))
}

fn write_json(path: &Path, value: &Value) -> Result<(), PipelineError> {
    write_with(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| e.to_string())?;
        w.write_all(b"\n").map_err(|e| e.to_string())
    })
}

/// What a stage did, one line per item.
pub type Summary = Vec<String>;

pub fn run_stage(stage: Stage, cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    cfg.validate()?;
    match stage {
        Stage::Synth => synth(cfg),
        Stage::Ingest => ingest(cfg),
        Stage::Dedup => dedup(cfg),
        Stage::Build => build(cfg),
        Stage::Metrics => metrics(cfg),
        Stage::Fit => fit(cfg),
        Stage::Report => report(cfg),
    }
}

/// Runs every stage in order.
pub fn run_all(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let mut out = Vec::new();
    for stage in Stage::ALL {
        out.extend(run_stage(stage, cfg)?);
    }
    Ok(out)
}

fn synth(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let corpus = generate_corpus(&cfg.synth)?;
    write_with(&cfg.path("corpus.jsonl"), |w| write_jsonl(w, &corpus.records))?;
    write_with(&cfg.path("truth_records.csv"), |w| write_truth_records(w, &corpus))?;
    write_with(&cfg.path("truth_edges.csv"), |w| write_truth_edges(w, &corpus))?;
    Ok(vec![
        format!("scientists {}", corpus.records.len()),
        format!("papers {}", corpus.papers),
        format!("records {}", corpus.record_count()),
        format!("planted edges {}", corpus.edges.len()),
    ])
}

fn ingest(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let input = cfg.input.clone().unwrap_or_else(|| cfg.path("corpus.jsonl"));
    let reader = open(&input, "pass --input or run `synth` first")?;
    let records = parse_records(reader, cfg.format, &IngestOptions { year_range: cfg.year_range })
        .map_err(|e| PipelineError::Data(format!("{}: {e}", input.display())))?;
    write_with(&cfg.path("records.jsonl"), |w| write_jsonl(w, &records))?;
    let pubs: usize = records.iter().map(|r| r.publications.len()).sum();
    Ok(vec![format!("scientists {}", records.len()), format!("records {pubs}")])
}

fn load_records(cfg: &PipelineConfig) -> Result<Vec<ScientistRecord>, PipelineError> {
    let path = cfg.path("records.jsonl");
    let reader = open(&path, "run `ingest` first")?;
    parse_records(reader, InputFormat::Jsonl, &IngestOptions { year_range: cfg.year_range })
        .map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}

fn dedup(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let records = load_records(cfg)?;
    let clusters = cluster_duplicates(&records, cfg.dedup_threshold);
    write_with(&cfg.path("assignments.csv"), |w| write_assignments(w, &clusters))?;
    write_with(&cfg.path("clusters.csv"), |w| write_cluster_report(w, &clusters, &records))?;
    let pubs: usize = clusters.iter().map(|c| c.members.len()).sum();
    Ok(vec![format!("records {pubs}"), format!("clusters {}", clusters.len())])
}

fn load_clusters(cfg: &PipelineConfig, records: &[ScientistRecord]) -> Result<Vec<PaperCluster>, PipelineError> {
    let path = cfg.path("assignments.csv");
    let reader = open(&path, "run `dedup` first")?;
    read_assignments(reader, records).map_err(|e| PipelineError::Data(format!("{}: {e}", path.display())))
}

fn build(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let records = load_records(cfg)?;
    let clusters = load_clusters(cfg, &records)?;
    let bn = build_bipartite(&records, &clusters).map_err(|e| PipelineError::Data(e.to_string()))?;
    let tcn = project_tcn(&bn);
    write_with(&cfg.path("nodes.csv"), |w| tcn.write_node_list(w))?;
    write_with(&cfg.path("edges.csv"), |w| tcn.write_edge_list(w))?;
    Ok(vec![
        format!("scientists {}", tcn.len()),
        format!("papers {}", clusters.len()),
        format!("edges {}", tcn.edge_count()),
        format!("giant component {}", sig6(giant_component(&tcn).fraction)),
    ])
}

fn load_network(cfg: &PipelineConfig) -> Result<CollaborationNetwork, PipelineError> {
    let nodes = open(&cfg.path("nodes.csv"), "run `build` first")?;
    let edges = open(&cfg.path("edges.csv"), "run `build` first")?;
    CollaborationNetwork::read(nodes, edges).map_err(|e| PipelineError::Data(format!("network files: {e}")))
}

const GENDER_SERIES: [(&str, Option<Gender>); 3] =
    [("all", None), ("female", Some(Gender::Female)), ("male", Some(Gender::Male))];

/// Everything derived from the network, computed once.
struct Analysis {
    tcn: CollaborationNetwork,
    g: Vec<Option<f64>>,
    m: Vec<Option<f64>>,
    bins: GeometricBins,
}

impl Analysis {
    fn new(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        let tcn = load_network(cfg)?;
        let g = metric_values(&tcn, Metric::GRatio);
        let m = metric_values(&tcn, Metric::MRatio);
        let bins = GeometricBins::new(1.0, cfg.curve_ratio).map_err(PipelineError::Usage)?;
        Ok(Analysis { tcn, g, m, bins })
    }

    fn values(&self, metric: Metric) -> &[Option<f64>] {
        match metric {
            Metric::GRatio => &self.g,
            Metric::MRatio => &self.m,
        }
    }

    fn write_scientists(&self, path: &Path) -> Result<(), PipelineError> {
        write_with(path, |out| -> csv::Result<()> {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["id", "gender", "field", "degree", "strength", "papers", "g_ratio", "m_ratio"])?;
            for (i, n) in self.tcn.nodes().iter().enumerate() {
                w.write_record([
                    n.id.clone(),
                    n.gender.code().to_string(),
                    n.field.map_or("", MajorField::code).to_string(),
                    self.tcn.degree_of(i).to_string(),
                    self.tcn.strength_of(i).to_string(),
                    n.papers.to_string(),
                    crate::format::opt_sig6(self.g[i]),
                    crate::format::opt_sig6(self.m[i]),
                ])?;
            }
            w.flush()?;
            Ok(())
        })
    }

    /// Curve files `<dir>/<FIELD|ALL>_<F|M>.csv`.
    fn write_curves(&self, dir: &Path, metric: Metric) -> Result<Vec<PathBuf>, PipelineError> {
        let mut written = Vec::new();
        let fields = std::iter::once(None).chain(MajorField::ALL.into_iter().map(Some));
        for field in fields {
            for gender in Gender::KNOWN {
                let curve = binned_curve_with(&self.tcn, self.values(metric), field, Some(gender), &self.bins);
                let name = format!("{}_{}.csv", field.map_or("ALL", MajorField::code), gender.code());
                let path = dir.join(name);
                write_with(&path, |w| write_curve(w, &curve))?;
                written.push(path);
            }
        }
        Ok(written)
    }

    fn fits(&self, cfg: &PipelineConfig) -> Result<BTreeMap<String, (Histogram, FitResult)>, PipelineError> {
        let opts = cfg.fit_options();
        let mut out = BTreeMap::new();
        for (name, gender) in GENDER_SERIES {
            let hist = degree_distribution(&self.tcn, gender);
            let fit = fit_truncated_power_law(&hist, cfg.k_min, &opts)
                .map_err(|e| PipelineError::Numerical(format!("degree fit ({name}): {e}")))?;
            out.insert(format!("degree_{name}"), (hist, fit));
            let hist = weight_distribution(&self.tcn, gender);
            let fit = fit_power_law(&hist, cfg.w_min, &opts)
                .map_err(|e| PipelineError::Numerical(format!("weight fit ({name}): {e}")))?;
            out.insert(format!("weight_{name}"), (hist, fit));
        }
        Ok(out)
    }
}

const WEIGHT_RULE: &str = "a weight counts toward every gender present among its two endpoints";

fn fits_json(cfg: &PipelineConfig, fits: &BTreeMap<String, (Histogram, FitResult)>) -> Value {
    let series: serde_json::Map<String, Value> = fits.iter().map(|(k, (_, f))| (k.clone(), f.to_json())).collect();
    json!({
        "bin_ratio": round6(cfg.bin_ratio),
        "k_min": cfg.k_min,
        "w_min": cfg.w_min,
        "weight_gender_rule": WEIGHT_RULE,
        "fits": series,
    })
}

fn metrics(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let a = Analysis::new(cfg)?;
    let dir = cfg.path("metrics");
    a.write_scientists(&dir.join("scientists.csv"))?;
    let stats = field_stats_with(&a.tcn, &a.g, &a.m);
    write_with(&dir.join("field_stats.csv"), |w| write_field_stats(w, &stats))?;
    for (name, gender) in GENDER_SERIES {
        let deg = degree_distribution(&a.tcn, gender);
        write_with(&dir.join(format!("degree_{name}.csv")), |w| write_histogram(w, &deg))?;
        let wts = weight_distribution(&a.tcn, gender);
        write_with(&dir.join(format!("weight_{name}.csv")), |w| write_histogram(w, &wts))?;
    }
    a.write_curves(&dir.join("g_ratio"), Metric::GRatio)?;
    a.write_curves(&dir.join("m_ratio"), Metric::MRatio)?;
    let defined = |v: &[Option<f64>]| v.iter().flatten().count();
    Ok(vec![
        format!("scientists {}", a.tcn.len()),
        format!("defined g-ratios {}", defined(&a.g)),
        format!("defined m-ratios {}", defined(&a.m)),
    ])
}

fn fit(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let a = Analysis::new(cfg)?;
    let fits = a.fits(cfg)?;
    write_json(&cfg.path("fits.json"), &fits_json(cfg, &fits))?;
    Ok(fits
        .iter()
        .map(|(name, (_, f))| {
            let e = f.exponent();
            match f.model {
                crate::fit::Model::TruncatedPowerLaw => format!(
                    "{name}: alpha {} ± {}, beta {}",
                    sig6(e.value),
                    sig6(e.stderr),
                    sig6(f.beta().value)
                ),
                crate::fit::Model::PowerLaw => format!("{name}: lambda {} ± {}", sig6(e.value), sig6(e.stderr)),
            }
        })
        .collect())
}

fn write_fit_points(
    path: &Path,
    cfg: &PipelineConfig,
    fits: &BTreeMap<String, (Histogram, FitResult)>,
) -> Result<(), PipelineError> {
    let mut rows = Vec::new();
    for (name, (hist, fit)) in fits {
        let start = if name.starts_with("degree") { cfg.k_min } else { cfg.w_min };
        for b in log_bin_from(hist, cfg.bin_ratio, start)? {
            rows.push([
                name.clone(),
                b.lo.to_string(),
                b.hi.to_string(),
                sig6(b.x),
                sig6(b.density),
                b.count.to_string(),
                sig6(fit.density_at(b.x)),
            ]);
        }
    }
    write_with(path, |out| -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["series", "bin_lo", "bin_hi", "x", "density", "count", "model"])?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    })
}

fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Files under `dir`, relative and sorted, `/`-separated.
fn list_files(dir: &Path) -> Result<Vec<String>, PipelineError> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
        for entry in fs::read_dir(dir)? {
            let path = entry?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else if let Ok(rel) = path.strip_prefix(root) {
                out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(dir, dir, &mut out).map_err(|e| io_error(dir, e))?;
    out.sort();
    Ok(out)
}

pub const MANIFEST: &str = "report/manifest.json";

fn report(cfg: &PipelineConfig) -> Result<Summary, PipelineError> {
    let a = Analysis::new(cfg)?;
    let records = load_records(cfg)?;
    let clusters = load_clusters(cfg, &records)?;
    let dir = cfg.path("report");
    let stats = field_stats_with(&a.tcn, &a.g, &a.m);
    write_with(&dir.join("table1_collaborators_papers.csv"), |w| write_collaboration_table(w, &stats))?;
    write_with(&dir.join("table2_m_ratio.csv"), |w| write_m_ratio_table(w, &stats))?;
    write_with(&dir.join("table3_population.csv"), |w| write_population_table(w, &stats))?;
    write_with(&dir.join("fig2_g_ratio_bars.csv"), |w| write_g_ratio_bars(w, &stats))?;

    let fits = a.fits(cfg)?;
    for (name, (hist, _)) in &fits {
        write_with(&dir.join(format!("fig1_{name}.csv")), |w| write_histogram(w, hist))?;
    }
    write_fit_points(&dir.join("fig1_fit_points.csv"), cfg, &fits)?;
    write_json(&dir.join("fig1_fits.json"), &fits_json(cfg, &fits))?;

    a.write_curves(&dir.join("fig3_g_ratio"), Metric::GRatio)?;
    a.write_curves(&dir.join("fig4_m_ratio"), Metric::MRatio)?;

    let giant = giant_component(&a.tcn);
    let input_hash = match &cfg.input {
        Some(p) => Value::String(sha256_file(p)?),
        None => Value::Null,
    };
    let manifest_path = cfg.path(MANIFEST);
    let mut files = Vec::new();
    for rel in list_files(&cfg.out)? {
        if rel == MANIFEST {
            continue;
        }
        let path = cfg.out.join(&rel);
        let bytes = fs::metadata(&path).map_err(|e| io_error(&path, e))?.len();
        files.push(json!({"path": rel, "bytes": bytes, "sha256": sha256_file(&path)?}));
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "config": cfg.to_json(),
        "input_sha256": input_hash,
        "counts": {
            "scientists": a.tcn.len(),
            "records": records.iter().map(|r| r.publications.len()).sum::<usize>(),
            "papers": clusters.len(),
            "edges": a.tcn.edge_count(),
            "total_weight": a.tcn.total_weight(),
            "unknown_gender": stats.unknown_gender,
            "unknown_field": stats.unknown_field,
            "defined_g_ratio": a.g.iter().flatten().count(),
            "defined_m_ratio": a.m.iter().flatten().count(),
        },
        "giant_component_fraction": round6(giant.fraction),
        "giant_component_size": giant.nodes.len(),
        "weight_gender_rule": WEIGHT_RULE,
        "files": files,
    });
    write_json(&manifest_path, &manifest)?;
    Ok(vec![
        format!("report {}", dir.display()),
        format!("files {}", manifest["files"].as_array().map_or(0, Vec::len)),
        format!("giant component {}", sig6(giant.fraction)),
    ])
}
