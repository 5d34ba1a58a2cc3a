//! Dataset manifests, per-view CSV files and label files.
//!
//! A view file has one row per sample and one column per feature, with an
//! optional header row. The first row is taken as a header exactly when none
//! of its cells parses as a number. Label files hold one integer per line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::construct::MultiViewDataset;
use crate::error::{DataErrorCode as Code, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewEntry {
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
    pub features: usize,
}

/// Solver settings a manifest may pin; anything absent falls back to the
/// built-in defaults, and command-line flags take precedence over both.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_outer: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ParamOverrides {
    /// Fields set in `self` win over those in `fallback`.
    pub fn or(&self, fallback: &Self) -> Self {
        Self {
            alpha: self.alpha.or(fallback.alpha),
            lambda: self.lambda.or(fallback.lambda),
            beta: self.beta.or(fallback.beta),
            eps: self.eps.or(fallback.eps),
            max_outer: self.max_outer.or(fallback.max_outer),
            seed: self.seed.or(fallback.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub name: String,
    pub views: Vec<ViewEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default = "default_normalize")]
    pub normalize: bool,
    pub clusters: usize,
    #[serde(default, skip_serializing_if = "is_default")]
    pub params: ParamOverrides,
    #[serde(skip)]
    base_dir: PathBuf,
}

fn default_normalize() -> bool {
    true
}

fn is_default(p: &ParamOverrides) -> bool {
    *p == ParamOverrides::default()
}

impl Manifest {
    pub fn new(name: impl Into<String>, views: Vec<ViewEntry>, labels: Option<PathBuf>, clusters: usize) -> Self {
        Self {
            name: name.into(),
            views,
            labels,
            normalize: true,
            clusters,
            params: ParamOverrides::default(),
            base_dir: PathBuf::new(),
        }
    }

    /// Directory relative paths are resolved against.
    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn with_base_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.base_dir = dir.into();
        self
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn validate(&self, origin: &Path) -> Result<()> {
        let bad = |detail: String| Err(Error::data(Code::BadManifest, origin, None, detail));
        if self.views.is_empty() {
            return bad("manifest lists no views".into());
        }
        if let Some(v) = self.views.iter().find(|v| v.features == 0) {
            return bad(format!("view {} declares zero features", v.path.display()));
        }
        if self.clusters == 0 {
            return bad("cluster count must be at least 1".into());
        }
        Ok(())
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| {
        let code = if e.kind() == std::io::ErrorKind::NotFound {
            Code::MissingFile
        } else {
            Code::Io
        };
        Error::data(code, path, None, e.to_string())
    })
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::data(Code::BadManifest, path, Some(e.line() as u64), e.to_string()))?;
    manifest.validate(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(manifest.with_base_dir(base))
}

pub fn save_manifest(manifest: &Manifest, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_text(path.as_ref(), &(text + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::data(Code::Io, path, None, e.to_string()))
}

/// Reads a row-per-sample CSV into a `features × samples` matrix.
pub fn read_view_csv<T: Real>(path: impl AsRef<Path>) -> Result<DMatrix<T>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line());
            Error::data(Code::Io, path, line, e.to_string())
        })?;
        let line = record.position().map_or(idx as u64 + 1, |p| p.line());
        if idx == 0 && record.iter().all(|cell| cell.parse::<f64>().is_err()) {
            continue;
        }
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                return Err(Error::data(
                    Code::RaggedRows,
                    path,
                    Some(line),
                    format!("row has {} cells, expected {w}", record.len()),
                ));
            }
            _ => {}
        }
        let row = record
            .iter()
            .enumerate()
            .map(|(col, cell)| match cell.parse::<T>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::data(
                    Code::NonNumericCell,
                    path,
                    Some(line),
                    format!("column {}: {cell:?} is not a finite number", col + 1),
                )),
            })
            .collect::<Result<Vec<T>>>()?;
        rows.push(row);
    }
    let d = width.unwrap_or(0);
    if rows.is_empty() || d == 0 {
        return Err(Error::data(Code::SampleCountMismatch, path, None, "file contains no samples"));
    }
    Ok(DMatrix::from_fn(d, rows.len(), |f, i| rows[i][f]))
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = read_text(path)?;
    let mut labels = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let cell = raw.trim();
        if cell.is_empty() {
            continue;
        }
        let label = cell.parse::<usize>().map_err(|_| {
            Error::data(
                Code::NonNumericCell,
                path,
                Some(idx as u64 + 1),
                format!("{cell:?} is not a nonnegative integer label"),
            )
        })?;
        labels.push(label);
    }
    Ok(labels)
}

/// Loads every view listed in the manifest and checks it against the
/// declared feature counts and the other views' sample counts.
pub fn load_dataset<T: Real>(manifest: &Manifest) -> Result<MultiViewDataset<T>> {
    let mut views = Vec::with_capacity(manifest.views.len());
    let mut n = None;
    for entry in &manifest.views {
        let path = manifest.resolve(&entry.path);
        let view: DMatrix<T> = read_view_csv(&path)?;
        if view.nrows() != entry.features {
            return Err(Error::data(
                Code::FeatureCountMismatch,
                &path,
                None,
                format!("{} feature columns, manifest declares {}", view.nrows(), entry.features),
            ));
        }
        match n {
            None => n = Some(view.ncols()),
            Some(n) if n != view.ncols() => {
                return Err(Error::data(
                    Code::SampleCountMismatch,
                    &path,
                    None,
                    format!("{} samples, earlier views have {n}", view.ncols()),
                ));
            }
            _ => {}
        }
        views.push(view);
    }
    let n = n.expect("manifest has at least one view");
    let labels = match &manifest.labels {
        Some(p) => {
            let path = manifest.resolve(p);
            let labels = read_labels(&path)?;
            if labels.len() != n {
                return Err(Error::data(
                    Code::SampleCountMismatch,
                    &path,
                    None,
                    format!("{} labels for {n} samples", labels.len()),
                ));
            }
            Some(labels)
        }
        None => None,
    };
    let names = manifest.views.iter().map(|v| v.path.display().to_string()).collect();
    MultiViewDataset::new(views, labels)?.with_names(names)
}

/// Writes a `features × samples` view as a headerless row-per-sample CSV.
/// Values use the shortest representation that parses back to the same
/// float, so a reload is bitwise identical.
pub fn write_view_csv<T: Real>(view: &DMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io_err = |e: std::io::Error| Error::data(Code::Io, path, None, e.to_string());
    let file = fs::File::create(path).map_err(io_err)?;
    let mut out = BufWriter::new(file);
    for sample in view.column_iter() {
        let mut first = true;
        for v in sample.iter() {
            if !first {
                out.write_all(b",").map_err(io_err)?;
            }
            write!(out, "{v}").map_err(io_err)?;
            first = false;
        }
        out.write_all(b"\n").map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

pub fn write_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 3);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    write_text(path.as_ref(), &text)
}

/// Writes `view_<v>.csv` files, `labels.txt` (when labelled) and
/// `manifest.json` into `dir`, returning the manifest path.
pub fn write_dataset<T: Real>(ds: &MultiViewDataset<T>, name: &str, clusters: usize, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::data(Code::Io, dir, None, e.to_string()))?;
    let mut entries = Vec::with_capacity(ds.n_views());
    for (v, view) in ds.views().iter().enumerate() {
        let file = PathBuf::from(format!("view_{v}.csv"));
        write_view_csv(view, dir.join(&file))?;
        entries.push(ViewEntry {
            path: file,
            features: view.nrows(),
        });
    }
    let labels = match ds.labels() {
        Some(l) => {
            let file = PathBuf::from("labels.txt");
            write_labels(l, dir.join(&file))?;
            Some(file)
        }
        None => None,
    };
    let manifest = Manifest::new(name, entries, labels, clusters);
    let path = dir.join("manifest.json");
    save_manifest(&manifest, &path)?;
    Ok(path)
}
