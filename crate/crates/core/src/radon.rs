//! Gaussian Radon transform on finite marginals.
//!
//! For the closed affine subspace cut out by the (noisy) observations
//! `⟨K_{p_j} + √λ e_j, ·⟩ = y_j`, the transform of a linear functional
//! `K̃_p` is the conditional mean, which coincides with the ridge (λ > 0) or
//! spline (λ = 0) prediction. Nonlinear functionals of the path, such as the
//! supremum over a set of future inputs, are integrated by Monte Carlo over
//! the conditioned process restricted to a finite grid.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::gauss::{posterior_over, GaussianSampler};
use crate::kernels::{Kernel, Point};
use crate::regress::Dataset;

pub const DEFAULT_SAMPLES: usize = 100_000;
pub const MIN_SAMPLES: usize = 100;
pub const MAX_POINTS: usize = 10_000;

/// Observations defining the affine subspace; may be empty.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineConditioning {
    kernel: Kernel,
    train_points: Vec<Point>,
    targets: Vec<f64>,
    lambda: f64,
}

impl AffineConditioning {
    pub fn new(kernel: Kernel, train_points: Vec<Point>, targets: Vec<f64>, lambda: f64) -> Result<Self> {
        if train_points.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: train_points.len(), found: targets.len() });
        }
        check_finite(&targets, "targets")?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        kernel.check_points(&train_points)?;
        Ok(AffineConditioning { kernel, train_points, targets, lambda })
    }

    pub fn from_dataset(kernel: Kernel, data: &Dataset, lambda: f64) -> Result<Self> {
        Self::new(kernel, data.points().to_vec(), data.targets().to_vec(), lambda)
    }

    /// No observations: the unconditioned centered process.
    pub fn unconditioned(kernel: Kernel) -> Result<Self> {
        Self::new(kernel, Vec::new(), Vec::new(), 0.0)
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn train_points(&self) -> &[Point] {
        &self.train_points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Scalar functional of a sampled path.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalSpec {
    Eval {
        at: Point,
    },
    Sup {
        over: Vec<Point>,
    },
    Inf {
        over: Vec<Point>,
    },
    Mean {
        over: Vec<Point>,
    },
    /// Indicator that the path exceeds `level` somewhere on `over`.
    Exceed {
        level: f64,
        over: Vec<Point>,
    },
}

impl FunctionalSpec {
    pub fn points(&self) -> &[Point] {
        match self {
            FunctionalSpec::Eval { at } => std::slice::from_ref(at),
            FunctionalSpec::Sup { over }
            | FunctionalSpec::Inf { over }
            | FunctionalSpec::Mean { over }
            | FunctionalSpec::Exceed { over, .. } => over,
        }
    }

    fn validate(&self, k: &Kernel) -> Result<()> {
        let pts = self.points();
        if pts.is_empty() {
            return Err(Error::EmptyInput("functional point set"));
        }
        if pts.len() > MAX_POINTS {
            return Err(Error::InvalidParameter(format!(
                "functional point set has {} points; at most {MAX_POINTS} supported",
                pts.len()
            )));
        }
        if let FunctionalSpec::Exceed { level, .. } = self {
            if !level.is_finite() {
                return Err(Error::NonFinite("exceedance level"));
            }
        }
        k.check_points(pts)?;
        Ok(())
    }

    /// F(path) where `path[i]` is the value at `self.points()[i]`.
    pub fn apply(&self, path: &[f64]) -> f64 {
        match self {
            FunctionalSpec::Eval { .. } => path[0],
            FunctionalSpec::Sup { .. } => path.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            FunctionalSpec::Inf { .. } => path.iter().copied().fold(f64::INFINITY, f64::min),
            FunctionalSpec::Mean { .. } => path.iter().sum::<f64>() / path.len() as f64,
            FunctionalSpec::Exceed { level, .. } => {
                if path.iter().any(|v| v > level) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Monte-Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    /// Approximate 95% interval, value ± 1.96·std_error.
    pub fn approx_ci95(&self) -> (f64, f64) {
        (self.value - 1.96 * self.std_error, self.value + 1.96 * self.std_error)
    }

    /// Sample mean and standard error of `values` with a fixed reduction order.
    pub fn from_values(values: &[f64], seed: u64) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidParameter("an estimate needs at least 2 samples".into()));
        }
        check_finite(values, "functional values")?;
        let mean = pairwise_sum(values) / n as f64;
        let dev: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        let var = pairwise_sum(&dev) / (n - 1) as f64;
        Ok(McEstimate { value: mean, std_error: (var / n as f64).sqrt(), samples: n, seed })
    }
}

const PAIRWISE_BASE: usize = 256;

/// Sum with a fixed binary tree over blocks of 256 terms.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= PAIRWISE_BASE {
        return xs.iter().sum();
    }
    let blocks = xs.len().div_ceil(PAIRWISE_BASE);
    let mid = (blocks / 2) * PAIRWISE_BASE;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// G K̃_p: the conditional mean at `p`.
pub fn grt_linear(cond: &AffineConditioning, p: &Point) -> Result<f64> {
    Ok(grt_linear_many(cond, std::slice::from_ref(p))?[0])
}

/// Conditional means at several points at once.
pub fn grt_linear_many(cond: &AffineConditioning, points: &[Point]) -> Result<Vec<f64>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("query points"));
    }
    let post = posterior_over(&cond.kernel, &cond.train_points, &cond.targets, cond.lambda, points)?;
    Ok(post.mean().to_vec())
}

/// GF(L) = ∫ F dμ_L estimated from `samples` conditioned paths on F's point set.
pub fn grt_mc(cond: &AffineConditioning, f: &FunctionalSpec, samples: usize, seed: u64) -> Result<McEstimate> {
    if samples < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_SAMPLES} samples, got {samples}")));
    }
    f.validate(&cond.kernel)?;
    let post = posterior_over(&cond.kernel, &cond.train_points, &cond.targets, cond.lambda, f.points())?;
    let sampler = GaussianSampler::new(&post)?;
    let blocks =
        sampler.map_chunks(samples, seed, |rows| (0..rows.nrows()).map(|i| f.apply(rows.row(i))).collect::<Vec<f64>>());
    let values: Vec<f64> = blocks.into_iter().flatten().collect();
    McEstimate::from_values(&values, seed)
}

/// (E[sup over grid], sup over grid of E) under the conditioned process.
pub fn predicted_sup_vs_sup_of_predictions(
    cond: &AffineConditioning,
    grid: &[Point],
    samples: usize,
    seed: u64,
) -> Result<(McEstimate, f64)> {
    let est = grt_mc(cond, &FunctionalSpec::Sup { over: grid.to_vec() }, samples, seed)?;
    let sup_of_means = grt_linear_many(cond, grid)?.into_iter().fold(f64::NEG_INFINITY, f64::max);
    Ok((est, sup_of_means))
}
