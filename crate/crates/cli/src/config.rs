//! JSON documents read by `condition`, `sample` and `radon`.
//!
//! All documents reject unknown keys. Relative CSV paths resolve against the
//! directory holding the document.

use std::fs;
use std::path::{Path, PathBuf};

use rkhs_radon::{AffineConditioning, Dataset, FunctionalSpec, Kernel, Point};
use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::ingest::ingest_csv;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum TrainConfig {
    Rows(Vec<Vec<f64>>),
    Csv(CsvRef),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvRef {
    pub csv: PathBuf,
}

/// Inclusive, evenly spaced 1-d grid or an explicit list of points.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridConfig {
    Linspace(Linspace),
    Points(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Linspace {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalKind {
    Eval,
    Sup,
    Inf,
    Mean,
    Exceed,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalConfig {
    pub kind: FunctionalKind,
    #[serde(default)]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub at: Option<Vec<f64>>,
    #[serde(default)]
    pub level: Option<f64>,
}

/// `condition` and `sample`: the posterior over `query`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosteriorSpec {
    pub kernel: Kernel,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub query: GridConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadonSpec {
    pub kernel: Kernel,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    #[serde(default)]
    pub lambda: Option<f64>,
    pub functional: FunctionalConfig,
    #[serde(default)]
    pub samples: Option<usize>,
    pub seed: u64,
}

/// Parses a JSON document, returning it with the directory it lives in.
pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<(T, PathBuf)> {
    let text = fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let value = serde_json::from_str(&text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((value, base))
}

fn to_point(coords: &[f64], what: &str) -> Result<Point> {
    Point::new(coords.to_vec()).map_err(|e| CliError::input(format!("{what}: {e}")))
}

impl GridConfig {
    pub fn points(&self) -> Result<Vec<Point>> {
        match self {
            GridConfig::Linspace(l) => l.points(),
            GridConfig::Points(rows) => {
                if rows.is_empty() {
                    return Err(CliError::input("point list is empty"));
                }
                rows.iter().map(|r| to_point(r, "point list")).collect()
            }
        }
    }
}

impl Linspace {
    pub fn points(&self) -> Result<Vec<Point>> {
        if self.count == 0 {
            return Err(CliError::input("grid count must be at least 1"));
        }
        if !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::input("grid bounds must be finite"));
        }
        if self.count == 1 {
            return Ok(vec![to_point(&[self.start], "grid")?]);
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = if i + 1 == self.count { self.stop } else { self.start + step * i as f64 };
                to_point(&[t], "grid")
            })
            .collect()
    }
}

fn train_dataset(train: &Option<TrainConfig>, base: &Path) -> Result<Option<Dataset>> {
    match train {
        None => Ok(None),
        Some(TrainConfig::Rows(rows)) if rows.is_empty() => Ok(None),
        Some(TrainConfig::Rows(rows)) => {
            let mut points = Vec::with_capacity(rows.len());
            let mut targets = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let Some((y, x)) = row.split_last().filter(|(_, x)| !x.is_empty()) else {
                    return Err(CliError::input(format!("train row {}: expected [x..., y]", i + 1)));
                };
                points.push(to_point(x, &format!("train row {}", i + 1))?);
                targets.push(*y);
            }
            Ok(Some(Dataset::new(points, targets).map_err(|e| CliError::input(format!("train: {e}")))?))
        }
        Some(TrainConfig::Csv(r)) => {
            let path = if r.csv.is_absolute() { r.csv.clone() } else { base.join(&r.csv) };
            Ok(Some(ingest_csv(&path)?))
        }
    }
}

/// Builds the conditioning; λ is required whenever training data is present.
pub fn conditioning(
    kernel: &Kernel,
    train: &Option<TrainConfig>,
    lambda: Option<f64>,
    base: &Path,
) -> Result<AffineConditioning> {
    match train_dataset(train, base)? {
        None => Ok(AffineConditioning::unconditioned(kernel.clone())?),
        Some(data) => {
            let lambda = lambda.ok_or_else(|| CliError::input("\"lambda\" is required when \"train\" is non-empty"))?;
            Ok(AffineConditioning::from_dataset(kernel.clone(), &data, lambda)?)
        }
    }
}

impl FunctionalConfig {
    pub fn build(&self) -> Result<FunctionalSpec> {
        let over = || -> Result<Vec<Point>> {
            match (&self.grid, &self.points) {
                (Some(g), None) => g.points(),
                (None, Some(p)) => GridConfig::Points(p.clone()).points(),
                (Some(_), Some(_)) => Err(CliError::input("functional: give either \"grid\" or \"points\", not both")),
                (None, None) => Err(CliError::input("functional: \"grid\" or \"points\" is required")),
            }
        };
        let unexpected = |field: &str| CliError::input(format!("functional: \"{field}\" is not valid for this kind"));
        if self.kind != FunctionalKind::Exceed && self.level.is_some() {
            return Err(unexpected("level"));
        }
        if self.kind != FunctionalKind::Eval && self.at.is_some() {
            return Err(unexpected("at"));
        }
        Ok(match self.kind {
            FunctionalKind::Eval => {
                if self.grid.is_some() || self.points.is_some() {
                    return Err(CliError::input("functional: \"eval\" takes \"at\" only"));
                }
                let at = self.at.as_ref().ok_or_else(|| CliError::input("functional: \"eval\" requires \"at\""))?;
                FunctionalSpec::Eval { at: to_point(at, "functional at")? }
            }
            FunctionalKind::Sup => FunctionalSpec::Sup { over: over()? },
            FunctionalKind::Inf => FunctionalSpec::Inf { over: over()? },
            FunctionalKind::Mean => FunctionalSpec::Mean { over: over()? },
            FunctionalKind::Exceed => {
                let level = self.level.ok_or_else(|| CliError::input("functional: \"exceed\" requires \"level\""))?;
                FunctionalSpec::Exceed { level, over: over()? }
            }
        })
    }
}
