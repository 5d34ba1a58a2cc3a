//! End-to-end runs: manifest → tensor → solver → spectral clustering →
//! metrics, recorded in a versioned JSON report.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::construct::{build_tensor, synth_generate, MultiViewDataset, SynthParams};
use crate::error::{DataErrorCode, Error, Result};
use crate::io::{self, Manifest, ParamOverrides};
use crate::metrics::{evaluate_trials, MetricReport};
use crate::solver::{solve, Residuals, SolveStatus, SolverConfig};
use crate::spectral::{cluster_trials, SpectralConfig};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Settings given on the command line; they override the manifest.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub params: ParamOverrides,
    pub clusters: Option<usize>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub clusters: usize,
    pub normalize: bool,
    pub solver: SolverConfig<f64>,
    pub spectral: SpectralConfig,
}

impl RunConfig {
    /// Command line, then manifest, then built-in defaults.
    pub fn resolve(manifest: &Manifest, overrides: &RunOverrides) -> Self {
        let p = overrides.params.or(&manifest.params);
        let defaults = SolverConfig::<f64>::default();
        let seed = p.seed.unwrap_or(defaults.seed);
        let solver = SolverConfig {
            alpha: p.alpha.unwrap_or(defaults.alpha),
            lambda: p.lambda.unwrap_or(defaults.lambda),
            beta: p.beta.unwrap_or(defaults.beta),
            eps: p.eps.unwrap_or(defaults.eps),
            max_outer: p.max_outer.unwrap_or(defaults.max_outer),
            seed,
            ..defaults
        };
        Self {
            clusters: overrides.clusters.unwrap_or(manifest.clusters),
            normalize: overrides.normalize.unwrap_or(manifest.normalize),
            solver,
            spectral: SpectralConfig {
                seed,
                ..SpectralConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSummary {
    pub name: String,
    pub n: usize,
    pub k: usize,
    pub view_dims: Vec<usize>,
    pub labelled: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSummary {
    pub status: SolveStatus,
    pub iterations: usize,
    pub final_residuals: Residuals<f64>,
    pub final_objective: Option<f64>,
    pub final_rho: f64,
    pub inner_iterations: usize,
    /// Largest of the five stopping residuals after each outer iteration.
    pub max_residual_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Timings {
    pub load_s: f64,
    pub solve_s: f64,
    pub cluster_s: f64,
    pub evaluate_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schema_version: u32,
    pub tool_version: String,
    pub seed: u64,
    pub manifest_path: PathBuf,
    pub manifest: Manifest,
    pub config: RunConfig,
    pub dataset: DatasetSummary,
    pub solver: TraceSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<MetricReport>,
    /// Labels of the lowest-WCSS k-means trial.
    pub labels: Vec<usize>,
    pub trial_wcss: Vec<f64>,
    pub timings: Timings,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)
            .map_err(|e| Error::data(DataErrorCode::BadManifest, "<report>", Some(e.line() as u64), e.to_string()))?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "report schema version {} is not supported",
                report.schema_version
            )));
        }
        Ok(report)
    }

    /// The report without wall-clock fields; equal inputs give equal bytes.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        value.as_object_mut().expect("report is an object").remove("timings");
        serde_json::to_string_pretty(&value).expect("value serializes") + "\n"
    }

    pub fn converged(&self) -> bool {
        self.solver.status == SolveStatus::Converged
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Stage {
        stage: name,
        source: Box::new(e),
    })
}

/// Where the labels of a report at `report_path` are written.
pub fn labels_path(report_path: &Path) -> PathBuf {
    let stem = report_path.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    report_path.with_file_name(format!("{stem}.labels.txt"))
}

/// Clusters an in-memory dataset. `manifest` and `manifest_path` are only
/// echoed into the report.
pub fn cluster_dataset(
    ds: &MultiViewDataset<f64>,
    manifest: &Manifest,
    manifest_path: &Path,
    cfg: &RunConfig,
    load_s: f64,
) -> Result<RunReport> {
    let start = Instant::now();
    let x = build_tensor(ds, cfg.normalize);
    let out = stage("solve", solve(&x, &cfg.solver))?;
    let solve_s = start.elapsed().as_secs_f64();

    let t = Instant::now();
    let trials = stage("cluster", cluster_trials(&out.c, cfg.clusters, &cfg.spectral))?;
    let cluster_s = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let metrics = match ds.labels() {
        Some(truth) => {
            let preds: Vec<Vec<usize>> = trials.trials.iter().map(|r| r.labels.clone()).collect();
            Some(stage("evaluate", evaluate_trials(truth, &preds))?)
        }
        None => None,
    };
    let evaluate_s = t.elapsed().as_secs_f64();

    let records = &out.trace.records;
    let last = records.last().expect("solver runs at least one iteration");
    let solver = TraceSummary {
        status: out.trace.status,
        iterations: records.len(),
        final_residuals: last.residuals,
        final_objective: last.objective,
        final_rho: last.rho,
        inner_iterations: records.iter().map(|r| r.inner_iterations).sum(),
        max_residual_history: records.iter().map(|r| r.residuals.max()).collect(),
    };
    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        tool_version: TOOL_VERSION.to_string(),
        seed: cfg.solver.seed,
        manifest_path: manifest_path.to_path_buf(),
        manifest: manifest.clone(),
        config: cfg.clone(),
        dataset: DatasetSummary {
            name: manifest.name.clone(),
            n: ds.n_samples(),
            k: ds.n_views(),
            view_dims: ds.view_dims(),
            labelled: ds.labels().is_some(),
        },
        solver,
        metrics,
        labels: trials.best().labels.clone(),
        trial_wcss: trials.trials.iter().map(|r| r.wcss).collect(),
        timings: Timings {
            load_s,
            solve_s,
            cluster_s,
            evaluate_s,
            total_s: load_s + start.elapsed().as_secs_f64(),
        },
    })
}

/// Loads the manifest, runs the full pipeline and, when `out` is given,
/// writes the report there and the predicted labels next to it.
pub fn run_cluster(manifest_path: &Path, overrides: &RunOverrides, out: Option<&Path>) -> Result<RunReport> {
    let start = Instant::now();
    let manifest = stage("load", io::load_manifest(manifest_path))?;
    let cfg = RunConfig::resolve(&manifest, overrides);
    let ds = stage("load", io::load_dataset::<f64>(&manifest))?;
    let load_s = start.elapsed().as_secs_f64();
    let report = cluster_dataset(&ds, &manifest, manifest_path, &cfg, load_s)?;
    if let Some(out) = out {
        stage("report", write_report(&report, out))?;
    }
    Ok(report)
}

pub fn write_report(report: &RunReport, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::data(DataErrorCode::Io, dir, None, e.to_string()))?;
    }
    std::fs::write(path, report.to_json()).map_err(|e| Error::data(DataErrorCode::Io, path, None, e.to_string()))?;
    io::write_labels(&report.labels, labels_path(path))
}

/// Generates a synthetic dataset and writes it (views, labels, manifest)
/// into `out_dir`. Returns the manifest path.
pub fn run_synth(params: &SynthParams, out_dir: &Path) -> Result<PathBuf> {
    let ds = synth_generate::<f64>(params)?;
    io::write_dataset(&ds, "synthetic", params.clusters, out_dir)
}
