//! Kernel ridge regression and minimum-norm spline interpolation.
//!
//! Ridge coefficients are computed along two routes that must agree:
//!
//! * closed form: `c = (K_D + λI)⁻¹ y`;
//! * geometric: with `S = λ⁻¹ K_D`, solve `(S + I) v = y`, keep `b = −v`
//!   (the offset of the closest point on the graph of the sampling operator)
//!   and set `c = λ⁻¹ v`.
//!
//! The minimum of the ridge objective is available three ways: by evaluating
//! the objective at the fit, as `‖(S + I)^{-1/2} y‖²`, and as `⟨−y, b⟩`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, Error, Result};
use crate::json;
use crate::kernels::{gram, Kernel, Point};
use crate::linalg::{cholesky_solve, dot, spd_function, Cholesky, Matrix, SpdFunction, SpdMatrix};

/// Training pairs (p_j, y_j).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Point>,
    targets: Vec<f64>,
}

impl Dataset {
    pub fn new(points: Vec<Point>, targets: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput("dataset"));
        }
        if points.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: targets.len() });
        }
        check_finite(&targets, "targets")?;
        let d = points[0].dim();
        if let Some(p) = points.iter().find(|p| p.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
        }
        Ok(Dataset { points, targets })
    }

    /// One-dimensional dataset from (t, y) pairs.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        let points = pairs.iter().map(|&(t, _)| Point::scalar(t)).collect::<Result<Vec<_>>>()?;
        Self::new(points, pairs.iter().map(|&(_, y)| y).collect())
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolvePath {
    #[default]
    ClosedForm,
    Geometric,
}

/// f̂ = Σ c_j K(p_j, ·). Immutable once fitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RidgeModel {
    kernel: Kernel,
    points: Vec<Point>,
    coefficients: Vec<f64>,
    lambda: f64,
    solve_path: SolvePath,
    jitter_applied: f64,
    /// Offset vector of the geometric route.
    #[serde(skip)]
    offset: Option<Vec<f64>>,
}

impl RidgeModel {
    /// Model with explicit coefficients (e.g. a perturbation of a fit).
    pub fn from_parts(kernel: Kernel, points: Vec<Point>, coefficients: Vec<f64>, lambda: f64) -> Result<Self> {
        let m = RidgeModel {
            kernel,
            points,
            coefficients,
            lambda,
            solve_path: SolvePath::ClosedForm,
            jitter_applied: 0.0,
            offset: None,
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::EmptyInput("model points"));
        }
        if self.points.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch { expected: self.points.len(), found: self.coefficients.len() });
        }
        check_finite(&self.coefficients, "coefficients")?;
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("lambda must be finite and >= 0, got {}", self.lambda)));
        }
        if !(self.jitter_applied >= 0.0 && self.jitter_applied.is_finite()) {
            return Err(Error::InvalidParameter("jitter_applied must be finite and >= 0".into()));
        }
        self.kernel.check_points(&self.points)?;
        Ok(())
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn solve_path(&self) -> SolvePath {
        self.solve_path
    }

    pub fn jitter_applied(&self) -> f64 {
        self.jitter_applied
    }

    /// `b = −(λ⁻¹K_D + I)⁻¹ y`, present only for geometric fits made in this process.
    pub fn offset(&self) -> Option<&[f64]> {
        self.offset.as_deref()
    }

    /// Same model with coefficients `c + eps * direction`.
    pub fn perturbed(&self, direction: &[f64], eps: f64) -> Result<Self> {
        if direction.len() != self.coefficients.len() {
            return Err(Error::DimensionMismatch { expected: self.coefficients.len(), found: direction.len() });
        }
        let coefficients = self.coefficients.iter().zip(direction).map(|(c, g)| c + eps * g).collect();
        RidgeModel::from_parts(self.kernel.clone(), self.points.clone(), coefficients, self.lambda)
    }

    pub fn to_json(&self) -> Result<String> {
        json::to_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: RidgeModel = serde_json::from_str(s).map_err(|e| Error::Serialization(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda == 0.0 {
        return Err(Error::InvalidParameter("lambda = 0 is spline interpolation; use spline_fit".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// Fits the ridge minimizer of Σ(y_j − f(p_j))² + λ‖f‖² for λ > 0.
pub fn ridge_fit(data: &Dataset, k: &Kernel, lambda: f64, path: SolvePath) -> Result<RidgeModel> {
    check_lambda(lambda)?;
    let kd = gram(k, data.points())?.into_matrix();
    let y = data.targets();
    let (coefficients, offset, jitter_applied) = match path {
        SolvePath::ClosedForm => {
            let mut m = kd;
            m.add_diag(lambda);
            let m = SpdMatrix::new(m)?;
            let c = cholesky_solve(&m, y)?;
            (c, None, m.jitter_applied())
        }
        SolvePath::Geometric => {
            let m = SpdMatrix::new(sampling_gram_plus_identity(kd, lambda))?;
            let v = cholesky_solve(&m, y)?;
            let c = v.iter().map(|vi| vi / lambda).collect();
            let b = v.iter().map(|vi| -vi).collect();
            (c, Some(b), m.jitter_applied())
        }
    };
    check_finite(&coefficients, "coefficients")?;
    Ok(RidgeModel {
        kernel: k.clone(),
        points: data.points().to_vec(),
        coefficients,
        lambda,
        solve_path: path,
        jitter_applied,
        offset,
    })
}

/// λ⁻¹ K_D + I.
fn sampling_gram_plus_identity(mut kd: Matrix, lambda: f64) -> Matrix {
    kd.scale(1.0 / lambda);
    kd.add_diag(1.0);
    kd
}

/// Minimum-norm interpolant c = K_D⁻¹ y.
pub fn spline_fit(data: &Dataset, k: &Kernel) -> Result<RidgeModel> {
    let g = gram(k, data.points())?;
    if g.has_duplicates() {
        return Err(Error::LinearlyDependent { smallest_pivot: 0.0 });
    }
    let scale = g.entries().max_diag();
    // At most the first jitter level.
    let chol = Cholesky::factor(g.entries(), 1).map_err(|e| match e {
        Error::Singular { smallest_pivot, .. } => Error::LinearlyDependent { smallest_pivot },
        other => other,
    })?;
    if !(chol.min_pivot() > 1e-10 * scale) {
        return Err(Error::LinearlyDependent { smallest_pivot: chol.min_pivot() });
    }
    let coefficients = chol.solve(data.targets())?;
    Ok(RidgeModel {
        kernel: k.clone(),
        points: data.points().to_vec(),
        coefficients,
        lambda: 0.0,
        solve_path: SolvePath::ClosedForm,
        jitter_applied: chol.jitter(),
        offset: None,
    })
}

/// Σ_j c_j K(p_j, p).
pub fn predict(m: &RidgeModel, p: &Point) -> Result<f64> {
    let d = m.points[0].dim();
    if p.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: p.dim() });
    }
    m.kernel.check_point(p)?;
    Ok(m.coefficients.iter().zip(&m.points).map(|(c, pj)| c * m.kernel.eval_unchecked(pj, p)).sum())
}

/// Predictions in input order.
pub fn predict_many(m: &RidgeModel, points: &[Point]) -> Result<Vec<f64>> {
    points.par_iter().map(|p| predict(m, p)).collect()
}

/// ‖f̂‖² = cᵀ K_D c.
pub fn rkhs_norm_sq(m: &RidgeModel) -> Result<f64> {
    let kd = gram(&m.kernel, &m.points)?.into_matrix();
    let kc = kd.matvec(&m.coefficients)?;
    Ok(dot(&m.coefficients, &kc))
}

/// Σ (y_j − f̂(p_j))² + λ ‖f̂‖².
pub fn objective(m: &RidgeModel, data: &Dataset) -> Result<f64> {
    let mut residual = 0.0;
    for (p, y) in data.points().iter().zip(data.targets()) {
        let r = y - predict(m, p)?;
        residual += r * r;
    }
    Ok(residual + m.lambda * rkhs_norm_sq(m)?)
}

/// yᵀ(I + λ⁻¹K_D)⁻¹ y computed as ‖(λ⁻¹K_D + I)^{-1/2} y‖².
pub fn min_objective_closed_form(data: &Dataset, k: &Kernel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let kd = gram(k, data.points())?.into_matrix();
    let m = SpdMatrix::new(sampling_gram_plus_identity(kd, lambda))?;
    let r = spd_function(&m, SpdFunction::InvSqrt)?;
    let z = r.matrix().matvec(data.targets())?;
    Ok(dot(&z, &z))
}

/// ⟨−y, b⟩ for the offset vector of a geometric fit.
pub fn min_objective_from_offset(data: &Dataset, offset: &[f64]) -> Result<f64> {
    if offset.len() != data.len() {
        return Err(Error::DimensionMismatch { expected: data.len(), found: offset.len() });
    }
    Ok(-dot(data.targets(), offset))
}

/// ‖f̂_λ‖² of the ridge minimizer as λ⁻¹ ‖S^{1/2} (S + I)⁻¹ y‖² with S = λ⁻¹K_D.
pub fn fitted_norm_sq_closed_form(data: &Dataset, k: &Kernel, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let mut s = gram(k, data.points())?.into_matrix();
    s.scale(1.0 / lambda);
    let s = SpdMatrix::new(s)?;
    let root = spd_function(&s, SpdFunction::Sqrt)?;
    let mut shifted = s.matrix().clone();
    shifted.add_diag(1.0);
    let v = cholesky_solve(&SpdMatrix::new(shifted)?, data.targets())?;
    let w = root.matrix().matvec(&v)?;
    Ok(dot(&w, &w) / lambda)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::points_1d;
    use approx::assert_relative_eq;

    /// K ≡ 1 on any point set.
    fn unit_kernel() -> Kernel {
        Kernel::custom("one", |_, _| 1.0)
    }

    fn unit_data() -> Dataset {
        Dataset::new(vec![Point::scalar(0.0).unwrap()], vec![1.0]).unwrap()
    }

    #[test]
    fn ridge_scalar() {
        for path in [SolvePath::ClosedForm, SolvePath::Geometric] {
            let m = ridge_fit(&unit_data(), &unit_kernel(), 1.0, path).unwrap();
            assert_eq!(m.coefficients(), &[0.5]);
        }
    }

    #[test]
    fn ridge_brownian_two_points() {
        let k = Kernel::brownian_min(1.0).unwrap();
        let data = Dataset::from_pairs(&[(0.5, 1.0), (1.0, 1.0)]).unwrap();
        for path in [SolvePath::ClosedForm, SolvePath::Geometric] {
            let m = ridge_fit(&data, &k, 0.1, path).unwrap();
            // (K + 0.1 I) = [[0.6, 0.5], [0.5, 1.1]], det 0.41.
            assert_relative_eq!(m.coefficients()[0], 0.6 / 0.41, max_relative = 1e-13);
            assert_relative_eq!(m.coefficients()[1], 0.1 / 0.41, max_relative = 1e-12);
        }
    }

    #[test]
    fn ridge_zero_targets() {
        let k = Kernel::rbf(1.0).unwrap();
        let data = Dataset::new(points_1d(&[0.0, 0.3, 0.9]).unwrap(), vec![0.0; 3]).unwrap();
        let m = ridge_fit(&data, &k, 0.2, SolvePath::Geometric).unwrap();
        assert!(m.coefficients().iter().all(|&c| c == 0.0));
        assert_eq!(min_objective_closed_form(&data, &k, 0.2).unwrap(), 0.0);
    }

    #[test]
    fn ridge_rejects_bad_lambda() {
        let k = Kernel::rbf(1.0).unwrap();
        for lambda in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(ridge_fit(&unit_data(), &k, lambda, SolvePath::ClosedForm).is_err());
        }
    }

    #[test]
    fn ridge_accepts_duplicates() {
        let k = Kernel::rbf(1.0).unwrap();
        let data = Dataset::from_pairs(&[(0.0, 1.0), (0.0, 3.0)]).unwrap();
        let m = ridge_fit(&data, &k, 0.5, SolvePath::ClosedForm).unwrap();
        // Symmetric system: both coefficients solve (1.5 c1 + c2 = 1, c1 + 1.5 c2 = 3).
        assert_relative_eq!(m.coefficients()[0], -1.2, max_relative = 1e-12);
        assert_relative_eq!(m.coefficients()[1], 2.8, max_relative = 1e-12);
    }

    #[test]
    fn spline_brownian_single_observation() {
        let k = Kernel::brownian_min(1.0).unwrap();
        let data = Dataset::from_pairs(&[(1.0, 2.0)]).unwrap();
        let m = spline_fit(&data, &k).unwrap();
        assert_eq!(m.coefficients(), &[2.0]);
        assert_eq!(m.lambda(), 0.0);
        assert_eq!(predict(&m, &Point::scalar(0.5).unwrap()).unwrap(), 1.0);
        assert_eq!(rkhs_norm_sq(&m).unwrap(), 4.0);
        assert!(objective(&m, &data).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn spline_diagonal_gram() {
        let k = Kernel::custom("diag2", |a, b| if a == b { 2.0 } else { 0.0 });
        let data = Dataset::from_pairs(&[(0.0, 2.0), (1.0, 4.0)]).unwrap();
        assert_eq!(spline_fit(&data, &k).unwrap().coefficients(), &[1.0, 2.0]);
    }

    #[test]
    fn spline_rejects_duplicates() {
        let k = Kernel::rbf(1.0).unwrap();
        let data = Dataset::from_pairs(&[(0.2, 1.0), (0.2, 1.0)]).unwrap();
        assert!(matches!(spline_fit(&data, &k), Err(Error::LinearlyDependent { .. })));
        // Linearly dependent without being identical.
        let lin = Dataset::from_pairs(&[(1.0, 1.0), (2.0, 2.0)]).unwrap();
        assert!(matches!(spline_fit(&lin, &Kernel::Linear), Err(Error::LinearlyDependent { .. })));
    }

    #[test]
    fn predict_cases() {
        let k = Kernel::brownian_min(1.0).unwrap();
        let m = RidgeModel::from_parts(k.clone(), points_1d(&[0.5, 1.0]).unwrap(), vec![1.0, 2.0], 0.1).unwrap();
        assert_eq!(predict(&m, &Point::scalar(0.25).unwrap()).unwrap(), 0.75);
        assert!(predict(&m, &Point::scalar(1.5).unwrap()).is_err());
        assert!(predict(&m, &Point::new(vec![0.1, 0.1]).unwrap()).is_err());

        let zero = RidgeModel::from_parts(k, points_1d(&[0.5, 1.0]).unwrap(), vec![0.0, 0.0], 0.1).unwrap();
        assert_eq!(predict(&zero, &Point::scalar(0.7).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn objective_cases() {
        let m = ridge_fit(&unit_data(), &unit_kernel(), 1.0, SolvePath::ClosedForm).unwrap();
        assert_eq!(objective(&m, &unit_data()).unwrap(), 0.5);
        assert_eq!(rkhs_norm_sq(&m).unwrap(), 0.25);
        assert_relative_eq!(
            min_objective_closed_form(&unit_data(), &unit_kernel(), 1.0).unwrap(),
            0.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            fitted_norm_sq_closed_form(&unit_data(), &unit_kernel(), 1.0).unwrap(),
            0.25,
            max_relative = 1e-15
        );

        let data = Dataset::from_pairs(&[(0.0, 3.0)]).unwrap();
        let zero =
            RidgeModel::from_parts(Kernel::rbf(1.0).unwrap(), points_1d(&[0.0]).unwrap(), vec![0.0], 1.0).unwrap();
        assert_eq!(objective(&zero, &data).unwrap(), 9.0);
    }

    #[test]
    fn offset_gives_minimum() {
        let m = ridge_fit(&unit_data(), &unit_kernel(), 1.0, SolvePath::Geometric).unwrap();
        assert_eq!(m.offset(), Some(&[-0.5][..]));
        assert_eq!(min_objective_from_offset(&unit_data(), m.offset().unwrap()).unwrap(), 0.5);
    }

    #[test]
    fn min_objective_large_lambda_tends_to_norm_of_y() {
        let k = Kernel::rbf(0.7).unwrap();
        let data = Dataset::new(points_1d(&[0.0, 0.4, 1.1, 2.0]).unwrap(), vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let norm_k = gram(&k, data.points()).unwrap().entries().norm_inf();
        let y2: f64 = data.targets().iter().map(|y| y * y).sum();
        let v = min_objective_closed_form(&data, &k, 1e8 * norm_k).unwrap();
        assert!((v - y2).abs() <= 0.01 * y2);
    }

    #[test]
    fn model_json_round_trip() {
        let k = Kernel::rbf(0.37).unwrap();
        let data = Dataset::new(points_1d(&[0.1, 0.2, 0.7]).unwrap(), vec![1.0 / 3.0, -0.2, 2.5]).unwrap();
        let m = ridge_fit(&data, &k, 0.013, SolvePath::Geometric).unwrap();
        let s = m.to_json().unwrap();
        let back = RidgeModel::from_json(&s).unwrap();
        assert_eq!(back.coefficients(), m.coefficients());
        assert_eq!(back.kernel(), m.kernel());
        assert_eq!(back.solve_path(), SolvePath::Geometric);
        assert!(back.offset().is_none());
        assert!(RidgeModel::from_json(&s.replace("\"lambda\"", "\"extra\":1,\"lambda\"")).is_err());
    }
}
