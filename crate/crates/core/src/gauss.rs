//! Finite-dimensional Gaussian conditioning, the noise-augmented joint
//! covariance behind ridge regression, and reproducible sampling.

use rayon::prelude::*;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{check_finite, Error, Result};
use crate::kernels::{gram, Kernel, Point};
use crate::linalg::{dot, Matrix, PsdFactor, SpdMatrix};
use crate::regress::Dataset;
use crate::rng::CounterRng;

/// Samples are generated in fixed blocks of this many rows; the block layout
/// never depends on the number of worker threads.
pub const SAMPLE_CHUNK: usize = 256;

/// Centered (by default) Gaussian vector with labelled coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGaussian {
    mean: Vec<f64>,
    covariance: SpdMatrix,
    labels: Vec<String>,
}

impl JointGaussian {
    pub fn new(mean: Vec<f64>, covariance: SpdMatrix, labels: Vec<String>) -> Result<Self> {
        let m = covariance.dim();
        if mean.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: mean.len() });
        }
        if labels.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: labels.len() });
        }
        check_finite(&mean, "mean")?;
        Ok(JointGaussian { mean, covariance, labels })
    }

    /// Zero-mean joint with labels "z0", "z1", ...
    pub fn centered(covariance: SpdMatrix) -> Result<Self> {
        let m = covariance.dim();
        Self::new(vec![0.0; m], covariance, (0..m).map(|i| format!("z{i}")).collect())
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.covariance
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub label: String,
    pub value: f64,
}

/// Posterior over the unobserved coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalGaussian {
    mean: Vec<f64>,
    covariance: SpdMatrix,
    labels: Vec<String>,
    conditioned_on: Vec<Observation>,
}

impl ConditionalGaussian {
    /// The joint itself, conditioned on nothing.
    pub fn unconditioned(j: &JointGaussian) -> Self {
        ConditionalGaussian {
            mean: j.mean.clone(),
            covariance: j.covariance.clone(),
            labels: j.labels.clone(),
            conditioned_on: Vec::new(),
        }
    }

    pub fn from_parts(mean: Vec<f64>, covariance: SpdMatrix) -> Result<Self> {
        let j = JointGaussian::centered(covariance)?;
        let mut cg = Self::unconditioned(&j);
        if mean.len() != cg.mean.len() {
            return Err(Error::DimensionMismatch { expected: cg.mean.len(), found: mean.len() });
        }
        check_finite(&mean, "mean")?;
        cg.mean = mean;
        Ok(cg)
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &SpdMatrix {
        &self.covariance
    }

    pub fn variances(&self) -> Vec<f64> {
        self.covariance.matrix().diag()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn conditioned_on(&self) -> &[Observation] {
        &self.conditioned_on
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

impl Serialize for ConditionalGaussian {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("ConditionalGaussian", 5)?;
        st.serialize_field("labels", &self.labels)?;
        st.serialize_field("mean", &self.mean)?;
        st.serialize_field("covariance", &self.covariance.matrix().to_rows())?;
        st.serialize_field("jitter_applied", &self.covariance.jitter_applied())?;
        st.serialize_field("conditioned_on", &self.conditioned_on)?;
        st.end()
    }
}

/// Conditions `j` on `Z_o = observed_values` for the coordinates in
/// `observed_idx`. Mean `μ_q + Σ_qo A⁻¹ (y − μ_o)`, covariance
/// `Σ_qq − Σ_qo A⁻¹ Σ_oq` with `A = Σ_oo`.
pub fn condition(j: &JointGaussian, observed_idx: &[usize], observed_values: &[f64]) -> Result<ConditionalGaussian> {
    let m = j.dim();
    if observed_idx.is_empty() {
        return Err(Error::EmptyInput("observed index set"));
    }
    if observed_idx.len() != observed_values.len() {
        return Err(Error::DimensionMismatch { expected: observed_idx.len(), found: observed_values.len() });
    }
    check_finite(observed_values, "observed values")?;
    let mut is_observed = vec![false; m];
    for &i in observed_idx {
        if i >= m {
            return Err(Error::InvalidParameter(format!("observed index {i} out of range for dimension {m}")));
        }
        if std::mem::replace(&mut is_observed[i], true) {
            return Err(Error::InvalidParameter(format!("observed index {i} repeated")));
        }
    }
    let query_idx: Vec<usize> = (0..m).filter(|&i| !is_observed[i]).collect();
    if query_idx.is_empty() {
        return Err(Error::InvalidParameter("observed index set must be a proper subset".into()));
    }

    let cov = j.covariance.matrix();
    let a = SpdMatrix::new(cov.select(observed_idx, observed_idx))?;
    let chol = a.cholesky()?;
    let residual: Vec<f64> = observed_idx.iter().zip(observed_values).map(|(&i, y)| y - j.mean[i]).collect();
    let alpha = chol.solve(&residual)?;

    let cross = cov.select(&query_idx, observed_idx);
    let mean: Vec<f64> = query_idx.iter().enumerate().map(|(r, &q)| j.mean[q] + dot(cross.row(r), &alpha)).collect();

    // W = A⁻¹ Σ_oq
    let w = chol.solve_matrix(&cross.transpose())?;
    let mut post = cov.select(&query_idx, &query_idx);
    let reduction = cross.matmul(&w)?;
    for r in 0..post.nrows() {
        for (p, s) in post.row_mut(r).iter_mut().zip(reduction.row(r)) {
            *p -= s;
        }
    }
    post.symmetrize();

    Ok(ConditionalGaussian {
        mean,
        covariance: SpdMatrix::new(post)?,
        labels: query_idx.iter().map(|&i| j.labels[i].clone()).collect(),
        conditioned_on: observed_idx
            .iter()
            .zip(observed_values)
            .map(|(&i, &value)| Observation { label: j.labels[i].clone(), value })
            .collect(),
    })
}

/// Joint covariance of `[K̃_q (query) | K̃_{p_j} + √λ ẽ_j (train)]`: the
/// noise directions are orthogonal to every kernel section, so they only
/// add `λI` to the train block.
pub fn noise_augmented_joint(
    k: &Kernel,
    train_points: &[Point],
    query_points: &[Point],
    lambda: f64,
) -> Result<JointGaussian> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    let nq = query_points.len();
    let nt = train_points.len();
    let all: Vec<Point> = query_points.iter().chain(train_points).cloned().collect();
    let mut cov = gram(k, &all)?.into_matrix();
    for i in nq..nq + nt {
        cov[(i, i)] += lambda;
    }
    let labels = (0..nq).map(|i| format!("q{i}")).chain((0..nt).map(|i| format!("y{i}"))).collect();
    JointGaussian::new(vec![0.0; nq + nt], SpdMatrix::new(cov)?, labels)
}

/// Posterior of the query coordinates given the training targets; with no
/// training data this is the prior over the query points.
pub fn posterior_over(
    k: &Kernel,
    train: &[Point],
    targets: &[f64],
    lambda: f64,
    query: &[Point],
) -> Result<ConditionalGaussian> {
    if train.len() != targets.len() {
        return Err(Error::DimensionMismatch { expected: train.len(), found: targets.len() });
    }
    let joint = noise_augmented_joint(k, train, query, lambda)?;
    if train.is_empty() {
        return Ok(ConditionalGaussian::unconditioned(&joint));
    }
    let nq = query.len();
    let idx: Vec<usize> = (nq..nq + train.len()).collect();
    condition(&joint, &idx, targets)
}

/// E[K̃_p | K̃_{p_j} + √λ ẽ_j = y_j, j = 1..n]. Equals the ridge prediction
/// for λ > 0 and the spline prediction for λ = 0.
pub fn ridge_via_conditioning(data: &Dataset, k: &Kernel, lambda: f64, p: &Point) -> Result<f64> {
    let post = posterior_over(k, data.points(), data.targets(), lambda, std::slice::from_ref(p))?;
    Ok(post.mean[0])
}

/// Draws `mean + F ξ` with `F Fᵀ = Σ` from a pivoted Cholesky factor.
#[derive(Debug, Clone)]
pub struct GaussianSampler {
    mean: Vec<f64>,
    factor: PsdFactor,
}

impl GaussianSampler {
    pub fn new(cg: &ConditionalGaussian) -> Result<Self> {
        let factor = PsdFactor::factor(cg.covariance.matrix())?;
        Ok(GaussianSampler { mean: cg.mean.clone(), factor })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn rank(&self) -> usize {
        self.factor.rank()
    }

    /// Rows `start .. start + count` of the sample stream keyed by `rng`.
    /// Row `i`, standard normal `k` is `rng.normal(i, k)`.
    pub fn rows(&self, rng: &CounterRng, start: usize, count: usize) -> Matrix {
        let m = self.dim();
        let r = self.rank();
        let mut out = Matrix::zeros(count, m);
        if count == 0 || m == 0 {
            return out;
        }
        if r == 0 {
            for i in 0..count {
                out.row_mut(i).copy_from_slice(&self.mean);
            }
            return out;
        }
        let xi = Matrix::from_fn(count, r, |i, k| rng.normal((start + i) as u64, k as u64));
        let y = lower_trapezoidal_product(&xi, self.factor.l());
        let perm = self.factor.perm();
        for i in 0..count {
            let src = y.row(i);
            let dst = out.row_mut(i);
            for (pi, &p) in perm.iter().enumerate() {
                dst[p] = self.mean[p] + src[pi];
            }
        }
        out
    }

    /// Applies `f` to each fixed-size block of the `count`-row stream, in order.
    pub fn map_chunks<T, F>(&self, count: usize, seed: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&Matrix) -> T + Sync,
    {
        let rng = CounterRng::new(seed);
        let chunks = count.div_ceil(SAMPLE_CHUNK);
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let start = c * SAMPLE_CHUNK;
                let len = SAMPLE_CHUNK.min(count - start);
                f(&self.rows(&rng, start, len))
            })
            .collect()
    }
}

const COL_BLOCK: usize = 64;

/// Y = Ξ Lᵀ for lower-trapezoidal L (dim × rank), skipping the zero blocks.
fn lower_trapezoidal_product(xi: &Matrix, l: &Matrix) -> Matrix {
    let (c, r) = (xi.nrows(), xi.ncols());
    let m = l.nrows();
    debug_assert_eq!(l.ncols(), r);
    let mut y = Matrix::zeros(c, m);
    let a = xi.as_slice();
    let b = l.as_slice();
    let out = y.as_mut_slice().as_mut_ptr();
    let mut i0 = 0;
    while i0 < m {
        let i1 = (i0 + COL_BLOCK).min(m);
        let kk = i1.min(r);
        // SAFETY: all strides address in-bounds elements: A is c×r row-major
        // (we read its first kk ≤ r columns), B(k, j) = l[(i0 + j) * r + k] with
        // i0 + j < m and k < r, and C(i, j) = y[i * m + i0 + j]; `y` is
        // exclusively owned here.
        unsafe {
            matrixmultiply::dgemm(
                c,
                kk,
                i1 - i0,
                1.0,
                a.as_ptr(),
                r as isize,
                1,
                b.as_ptr().add(i0 * r),
                1,
                r as isize,
                0.0,
                out.add(i0),
                m as isize,
                1,
            );
        }
        i0 = i1;
    }
    y
}

/// `count` i.i.d. draws (rows) from `cg`, reproducible for a given seed
/// regardless of thread count.
pub fn sample(cg: &ConditionalGaussian, count: usize, seed: u64) -> Result<Matrix> {
    if count == 0 {
        return Err(Error::InvalidParameter("sample count must be at least 1".into()));
    }
    let sampler = GaussianSampler::new(cg)?;
    let blocks = sampler.map_chunks(count, seed, |rows| rows.clone().into_vec());
    let data: Vec<f64> = blocks.into_iter().flatten().collect();
    Matrix::from_row_major(count, cg.dim(), data)
}
