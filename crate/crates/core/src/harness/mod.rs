//! Multi-seed experiment harness.
//!
//! An experiment is described by a TOML file: a name, a seed list, PPO
//! overrides, and a list of agent variants. Running it trains every
//! (variant, seed) pair — in parallel across a bounded worker pool — and
//! lays results out as
//!
//! ```text
//! out/<name>/
//!   manifest.json            run metadata, per-seed status
//!   <label>/seed_<s>.csv     step,episodic_return per completed episode
//!   <label>/aggregate.csv    bin_start,mean,std,n_seeds
//!   <name>.svg               learning-curve plot
//! ```
//!
//! Training is bitwise deterministic per seed, so rerunning a config
//! reproduces every per-seed CSV byte for byte.

mod plot;

pub use plot::{render_svg, VariantSeries};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{Agent, AgentKind};
use crate::ppo::{train, CurvePoint, PpoConfig};
use crate::{Error, Result};

/// Default histogram width (in environment steps) for learning curves.
pub const DEFAULT_BIN_WIDTH: u64 = 2000;

fn default_seeds() -> Vec<u64> {
    (0..10).collect()
}

/// One agent variant inside an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantConfig {
    /// Short name used for the results directory and the plot legend.
    pub label: String,
    pub agent: AgentKind,
}

/// A full experiment: variants x seeds under one PPO configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Marks a deliberately loose reproduction (noted on the plot).
    #[serde(default)]
    pub approximated: bool,
    #[serde(default)]
    pub ppo: PpoConfig,
    pub variants: Vec<VariantConfig>,
}

fn filesystem_safe(s: &str) -> bool {
    !s.is_empty()
        && !s.starts_with('.')
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || "._-=+".contains(c))
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !filesystem_safe(&self.name) {
            return Err(Error::config(format!(
                "experiment name {:?} must be nonempty and use only [A-Za-z0-9._-=+]",
                self.name
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("seed list must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("seed list contains duplicates"));
        }
        if self.variants.is_empty() {
            return Err(Error::config("an experiment needs at least one variant"));
        }
        let mut labels: Vec<&str> = self.variants.iter().map(|v| v.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.variants.len() {
            return Err(Error::config("variant labels must be distinct"));
        }
        for v in &self.variants {
            if !filesystem_safe(&v.label) {
                return Err(Error::config(format!(
                    "variant label {:?} must be nonempty and use only [A-Za-z0-9._-=+]",
                    v.label
                )));
            }
            // Surface bad agent configs at load time, not mid-run.
            Agent::new(v.agent.clone())?;
        }
        self.ppo.validate()
    }

    /// Canonical serialized form, hashed into the manifest so result
    /// directories can be traced back to an exact configuration.
    pub fn sha256(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Parses and validates an experiment config file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let config: ExperimentConfig = toml::from_str(&text)?;
    config.validate()?;
    Ok(config)
}

/// Number of parallel training workers: an explicit request wins, then the
/// `QRL_WORKERS` environment variable, then the machine's parallelism.
pub fn resolve_workers(requested: Option<usize>) -> usize {
    let from_env = || {
        std::env::var("QRL_WORKERS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|w| *w > 0)
    };
    requested
        .filter(|w| *w > 0)
        .or_else(from_env)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// Metadata written next to the result CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub config_sha256: String,
    pub seeds: Vec<u64>,
    pub variant_labels: Vec<String>,
    pub total_steps: u64,
    pub approximated: bool,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub version: String,
    /// `label -> seed -> "ok" | "aborted: ..." | "error: ..."`.
    pub results: BTreeMap<String, BTreeMap<String, String>>,
}

/// Outcome of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub experiment_dir: PathBuf,
    pub manifest: Manifest,
    /// Seeds that failed outright (error, not divergence-abort).
    pub failures: usize,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Trains every (variant, seed) pair of `config` under `workers` parallel
/// workers and writes per-seed CSVs plus a manifest under
/// `out_root/<name>/`. A failing seed is recorded and skipped; the rest of
/// the experiment continues.
pub fn run_experiment(
    config: &ExperimentConfig,
    out_root: &Path,
    workers: usize,
) -> Result<RunSummary> {
    config.validate()?;
    let started = unix_now();
    let exp_dir = out_root.join(&config.name);
    fs::create_dir_all(&exp_dir)?;

    let tasks: Vec<(usize, u64)> = (0..config.variants.len())
        .flat_map(|v| config.seeds.iter().map(move |s| (v, *s)))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot build worker pool: {e}")))?;
    let outcomes: Vec<(usize, u64, std::result::Result<crate::ppo::LearningCurve, String>)> =
        pool.install(|| {
            use rayon::prelude::*;
            tasks
                .par_iter()
                .map(|&(v, seed)| {
                    let result = train(&config.variants[v].agent, &config.ppo, seed)
                        .map_err(|e| e.to_string());
                    (v, seed, result)
                })
                .collect()
        });

    let mut results: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut failures = 0;
    for (v, seed, outcome) in outcomes {
        let label = &config.variants[v].label;
        let status = match outcome {
            Ok(curve) => {
                let dir = exp_dir.join(label);
                fs::create_dir_all(&dir)?;
                write_seed_csv(&dir.join(format!("seed_{seed}.csv")), &curve.points)?;
                match curve.aborted {
                    Some(diag) => format!("aborted: {diag}"),
                    None => "ok".to_string(),
                }
            }
            Err(msg) => {
                failures += 1;
                format!("error: {msg}")
            }
        };
        results
            .entry(label.clone())
            .or_default()
            .insert(seed.to_string(), status);
    }

    let manifest = Manifest {
        name: config.name.clone(),
        config_sha256: config.sha256(),
        seeds: config.seeds.clone(),
        variant_labels: config.variants.iter().map(|v| v.label.clone()).collect(),
        total_steps: config.ppo.total_steps,
        approximated: config.approximated,
        started_unix: started,
        finished_unix: unix_now(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        results,
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)?;
    fs::write(exp_dir.join("manifest.json"), manifest_json + "\n")?;

    Ok(RunSummary { experiment_dir: exp_dir, manifest, failures })
}

/// Writes one learning curve as `step,episodic_return` rows.
pub fn write_seed_csv(path: &Path, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["step", "episodic_return"])?;
    for p in points {
        w.write_record([p.step.to_string(), p.episodic_return.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a curve written by [`write_seed_csv`]; exact round-trip (f64
/// values are printed in shortest-round-trip form).
pub fn read_seed_csv(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut points = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 2 {
            return Err(Error::Parse(format!(
                "{}: expected 2 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        let step: u64 = record[0]
            .parse()
            .map_err(|e| Error::Parse(format!("{}: bad step: {e}", path.display())))?;
        let episodic_return: f64 = record[1]
            .parse()
            .map_err(|e| Error::Parse(format!("{}: bad return: {e}", path.display())))?;
        points.push(CurvePoint { step, episodic_return });
    }
    Ok(points)
}

/// One aggregated histogram bin across seeds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub bin_start: u64,
    /// Mean over seeds of the per-seed mean return inside the bin.
    pub mean: f64,
    /// Population standard deviation across those per-seed means.
    pub std: f64,
    /// Seeds contributing at least one episode to the bin.
    pub n_seeds: usize,
}

/// Bins every curve at `bin_width` steps and combines seeds: each seed
/// contributes its within-bin mean; bins some seed touched produce a row
/// with cross-seed mean and population std.
pub fn aggregate_curves(curves: &[Vec<CurvePoint>], bin_width: u64) -> Result<Vec<AggregateRow>> {
    if bin_width == 0 {
        return Err(Error::config("bin width must be positive"));
    }
    let max_step = curves
        .iter()
        .flat_map(|c| c.iter().map(|p| p.step))
        .max();
    let Some(max_step) = max_step else {
        return Ok(Vec::new());
    };
    let num_bins = (max_step / bin_width + 1) as usize;
    let mut rows = Vec::new();
    for bin in 0..num_bins {
        let lo = bin as u64 * bin_width;
        let hi = lo + bin_width;
        let mut seed_means = Vec::new();
        for curve in curves {
            let mut sum = 0.0;
            let mut n = 0usize;
            for p in curve.iter().filter(|p| p.step >= lo && p.step < hi) {
                sum += p.episodic_return;
                n += 1;
            }
            if n > 0 {
                seed_means.push(sum / n as f64);
            }
        }
        if seed_means.is_empty() {
            continue;
        }
        let n = seed_means.len();
        let mean = seed_means.iter().sum::<f64>() / n as f64;
        let var = seed_means.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n as f64;
        rows.push(AggregateRow { bin_start: lo, mean, std: var.sqrt(), n_seeds: n });
    }
    Ok(rows)
}

pub fn write_aggregate_csv(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_start", "mean", "std", "n_seeds"])?;
    for r in rows {
        w.write_record([
            r.bin_start.to_string(),
            r.mean.to_string(),
            r.std.to_string(),
            r.n_seeds.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregate_csv(path: &Path) -> Result<Vec<AggregateRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record?;
        if record.len() != 4 {
            return Err(Error::Parse(format!(
                "{}: expected 4 columns, got {}",
                path.display(),
                record.len()
            )));
        }
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| Error::Parse(format!("{}: bad {what}: {e}", path.display())))
        };
        rows.push(AggregateRow {
            bin_start: record[0]
                .parse()
                .map_err(|e| Error::Parse(format!("{}: bad bin_start: {e}", path.display())))?,
            mean: parse_f(&record[1], "mean")?,
            std: parse_f(&record[2], "std")?,
            n_seeds: record[3]
                .parse()
                .map_err(|e| Error::Parse(format!("{}: bad n_seeds: {e}", path.display())))?,
        });
    }
    Ok(rows)
}

fn seed_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name();
        let name = name.to_string_lossy();
        if let Some(num) = name.strip_prefix("seed_").and_then(|n| n.strip_suffix(".csv")) {
            if let Ok(seed) = num.parse::<u64>() {
                files.push((seed, entry.path()));
            }
        }
    }
    files.sort_by_key(|(seed, _)| *seed);
    Ok(files)
}

/// Variant subdirectories of an experiment dir: every directory holding at
/// least one `seed_*.csv`, in manifest order when a manifest is present,
/// alphabetical otherwise.
fn variant_dirs(exp_dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest_order: Option<Vec<String>> = read_manifest(exp_dir)
        .ok()
        .map(|m| m.variant_labels);
    let mut dirs = Vec::new();
    for entry in fs::read_dir(exp_dir)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() && !seed_files(&entry.path())?.is_empty() {
            dirs.push(entry.path());
        }
    }
    dirs.sort();
    if let Some(order) = manifest_order {
        dirs.sort_by_key(|d| {
            let base = d.file_name().unwrap_or_default().to_string_lossy().to_string();
            order.iter().position(|l| *l == base).unwrap_or(usize::MAX)
        });
    }
    Ok(dirs)
}

pub fn read_manifest(exp_dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(exp_dir.join("manifest.json"))?;
    Ok(serde_json::from_str(&text)?)
}

/// Aggregates every variant directory under `exp_dir` at `bin_width`,
/// writing `aggregate.csv` beside the seed files. Returns the paths of
/// the aggregate files written.
pub fn aggregate_dir(exp_dir: &Path, bin_width: u64) -> Result<Vec<PathBuf>> {
    let dirs = variant_dirs(exp_dir)?;
    if dirs.is_empty() {
        return Err(Error::config(format!(
            "{} contains no variant directories with seed CSVs",
            exp_dir.display()
        )));
    }
    let mut written = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        let mut curves = Vec::new();
        for (_, path) in seed_files(dir)? {
            curves.push(read_seed_csv(&path)?);
        }
        let rows = aggregate_curves(&curves, bin_width)?;
        let out = dir.join("aggregate.csv");
        write_aggregate_csv(&out, &rows)?;
        written.push(out);
    }
    Ok(written)
}

/// Renders the experiment's learning-curve plot from the per-variant
/// `aggregate.csv` files into `<exp_dir>/<name>.<format>`. Only `svg` is
/// supported.
pub fn plot_dir(exp_dir: &Path, format: &str) -> Result<PathBuf> {
    if format != "svg" {
        return Err(Error::config(format!(
            "unsupported plot format {format:?}; only \"svg\" is available"
        )));
    }
    let manifest = read_manifest(exp_dir).ok();
    let mut series = Vec::new();
    for dir in variant_dirs(exp_dir)? {
        let agg = dir.join("aggregate.csv");
        if !agg.exists() {
            return Err(Error::config(format!(
                "{} has no aggregate.csv; run the aggregate step first",
                dir.display()
            )));
        }
        let label = dir
            .file_name()
            .unwrap_or_default()
            .to_string_lossy()
            .to_string();
        series.push(VariantSeries { label, rows: read_aggregate_csv(&agg)? });
    }
    if series.is_empty() {
        return Err(Error::config(format!(
            "{} contains no aggregated variants to plot",
            exp_dir.display()
        )));
    }
    let name = exp_dir
        .file_name()
        .map(|n| n.to_string_lossy().to_string())
        .unwrap_or_else(|| "experiment".to_string());
    let mut title = name.clone();
    let mut x_max = 0u64;
    if let Some(m) = &manifest {
        x_max = m.total_steps;
        if m.approximated {
            title.push_str(" (approximate reproduction)");
        }
    }
    let svg = render_svg(&series, &title, x_max);
    let out = exp_dir.join(format!("{name}.svg"));
    fs::write(&out, svg)?;
    Ok(out)
}
