//! Classical Wiener space: Cameron–Martin paths, Brownian sampling, and a
//! Monte-Carlo check of the measurable norm |h| = ‖Ah‖ with A e_n = e_n / n.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::gauss::{sample, ConditionalGaussian, JointGaussian, SAMPLE_CHUNK};
use crate::kernels::{gram, points_1d, Kernel};
use crate::linalg::Matrix;
use crate::radon::pairwise_sum;
use crate::rng::CounterRng;

/// Continuous piecewise-linear path on [0, T] starting at (0, 0), constant
/// after its last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinearPath {
    horizon: f64,
    knots: Vec<f64>,
    values: Vec<f64>,
}

impl PiecewiseLinearPath {
    pub fn new(horizon: f64, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
        }
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: knots.len(), found: values.len() });
        }
        check_finite(&knots, "knots")?;
        check_finite(&values, "path values")?;
        if knots.first() != Some(&0.0) || values[0] != 0.0 {
            return Err(Error::InvalidParameter("path must start at (0, 0)".into()));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("knot times must be strictly increasing".into()));
        }
        if *knots.last().unwrap() > horizon {
            return Err(Error::OutOfDomain { value: *knots.last().unwrap(), horizon });
        }
        Ok(PiecewiseLinearPath { horizon, knots, values })
    }

    /// The kernel section K^BM_s(t) = min(s, t).
    pub fn brownian_section(horizon: f64, s: f64) -> Result<Self> {
        if s == 0.0 {
            return Self::zero(horizon);
        }
        Self::new(horizon, vec![0.0, s], vec![0.0, s])
    }

    pub fn zero(horizon: f64) -> Result<Self> {
        Self::new(horizon, vec![0.0], vec![0.0])
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Slope on the segment containing (t, t + dt) for t in [0, T).
    fn slope_at(&self, t: f64) -> f64 {
        // Index of the last knot ≤ t.
        let i = self.knots.partition_point(|&k| k <= t) - 1;
        if i + 1 >= self.knots.len() {
            0.0
        } else {
            (self.values[i + 1] - self.values[i]) / (self.knots[i + 1] - self.knots[i])
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        let i = self.knots.partition_point(|&k| k <= t).max(1) - 1;
        if i + 1 >= self.knots.len() {
            return self.values[i];
        }
        let w = (t - self.knots[i]) / (self.knots[i + 1] - self.knots[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

/// ∫₀ᵀ f′(u)² du.
pub fn cameron_martin_norm_sq(f: &PiecewiseLinearPath) -> f64 {
    f.knots
        .windows(2)
        .zip(f.values.windows(2))
        .map(|(t, v)| {
            let len = t[1] - t[0];
            let slope = (v[1] - v[0]) / len;
            slope * slope * len
        })
        .sum()
}

/// ∫₀ᵀ f′(u) g′(u) du over the common refinement of both knot sets.
pub fn cm_inner(f: &PiecewiseLinearPath, g: &PiecewiseLinearPath) -> Result<f64> {
    if f.horizon != g.horizon {
        return Err(Error::InvalidParameter(format!("horizon mismatch: {} vs {}", f.horizon, g.horizon)));
    }
    let mut cuts: Vec<f64> = f.knots.iter().chain(&g.knots).copied().chain([f.horizon]).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    Ok(cuts
        .windows(2)
        .map(|w| {
            let len = w[1] - w[0];
            f.slope_at(w[0]) * g.slope_at(w[0]) * len
        })
        .sum())
}

/// `count` Brownian paths observed at the ascending times `grid ⊂ (0, T]`.
pub fn sample_bm_paths(horizon: f64, grid: &[f64], count: usize, seed: u64) -> Result<Matrix> {
    if grid.is_empty() {
        return Err(Error::EmptyInput("time grid"));
    }
    if grid.iter().any(|&t| !(t > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("grid must be strictly increasing in (0, T]".into()));
    }
    let k = Kernel::brownian_min(horizon)?;
    let cov = gram(&k, &points_1d(grid)?)?.to_spd()?;
    let joint = JointGaussian::new(vec![0.0; grid.len()], cov, grid.iter().map(|t| format!("t={t}")).collect())?;
    sample(&ConditionalGaussian::unconditioned(&joint), count, seed)
}

/// Tail mass of the measurable norm on F = span(e_{N+1}, ..., e_{N+k}).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailMassReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub k: u64,
    pub epsilon: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub markov_bound: f64,
    pub samples: usize,
    pub seed: u64,
}

/// (Σ_{n=N+1}^{N+k} n⁻²) / ε², Markov's bound on P(|h| > ε).
pub fn markov_bound(n: u64, k: u64, epsilon: f64) -> f64 {
    let s: f64 = (n + 1..=n + k).rev().map(|m| 1.0 / (m as f64 * m as f64)).sum();
    s / (epsilon * epsilon)
}

/// Estimates γ_F{h : |h| > ε} with |h|² = Σ ξ_n² / n², ξ standard normal.
pub fn tail_mass(n: u64, k: u64, epsilon: f64, samples: usize, seed: u64) -> Result<TailMassReport> {
    if n < 1 || k < 1 {
        return Err(Error::InvalidParameter("N and k must be at least 1".into()));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {epsilon}")));
    }
    if samples < 1000 {
        return Err(Error::InvalidParameter(format!("need at least 1000 samples, got {samples}")));
    }
    let rng = CounterRng::new(seed);
    let weights: Vec<f64> = (n + 1..=n + k).map(|m| 1.0 / (m as f64 * m as f64)).collect();
    let eps2 = epsilon * epsilon;
    let chunks = samples.div_ceil(SAMPLE_CHUNK);
    let hits: Vec<f64> = (0..chunks)
        .into_par_iter()
        .flat_map_iter(|c| {
            let start = c * SAMPLE_CHUNK;
            let end = (start + SAMPLE_CHUNK).min(samples);
            let weights = &weights;
            (start..end).map(move |i| {
                let norm2: f64 = weights
                    .iter()
                    .enumerate()
                    .map(|(j, w)| {
                        let xi = rng.normal(i as u64, j as u64);
                        w * xi * xi
                    })
                    .sum();
                if norm2 > eps2 {
                    1.0
                } else {
                    0.0
                }
            })
        })
        .collect();
    let p = pairwise_sum(&hits) / samples as f64;
    let var = if samples > 1 { p * (1.0 - p) * samples as f64 / (samples - 1) as f64 } else { 0.0 };
    Ok(TailMassReport {
        n,
        k,
        epsilon,
        estimate: p,
        std_error: (var / samples as f64).sqrt(),
        markov_bound: markov_bound(n, k, epsilon),
        samples,
        seed,
    })
}
