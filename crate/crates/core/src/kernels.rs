//! Reproducing kernels on ℝ^d, Gram matrices and feature-map distances.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_finite, Error, Result};
use crate::linalg::{Matrix, SpdMatrix};

/// An input point in ℝ^d with finite coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::EmptyInput("point coordinates"));
        }
        check_finite(&coords, "point coordinates")?;
        Ok(Point(coords))
    }

    /// One-dimensional point.
    pub fn scalar(t: f64) -> Result<Self> {
        Self::new(vec![t])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn sq_dist(&self, other: &Point) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let coords = Vec::<f64>::deserialize(d)?;
        Point::new(coords).map_err(serde::de::Error::custom)
    }
}

/// Convenience for building 1-D point lists.
pub fn points_1d(ts: &[f64]) -> Result<Vec<Point>> {
    ts.iter().map(|&t| Point::scalar(t)).collect()
}

/// User-supplied kernel function. It must be symmetric and positive
/// definite; `Kernel::eval` enforces exact symmetry by ordering its arguments.
#[derive(Clone)]
pub struct CustomKernel {
    name: String,
    func: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
}

impl CustomKernel {
    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomKernel").field("name", &self.name).finish_non_exhaustive()
    }
}

/// Closed set of kernels, plus one extension point for pure user functions.
#[derive(Debug, Clone)]
pub enum Kernel {
    /// exp(-|p - q|² / (2 s)).
    Rbf { scale: f64 },
    /// min(s, t) on [0, T]; the covariance of standard Brownian motion.
    BrownianMin { horizon: f64 },
    /// ⟨p, q⟩.
    Linear,
    /// Not serializable.
    Custom(CustomKernel),
}

impl Kernel {
    pub fn rbf(scale: f64) -> Result<Self> {
        let k = Kernel::Rbf { scale };
        k.validate()?;
        Ok(k)
    }

    pub fn brownian_min(horizon: f64) -> Result<Self> {
        let k = Kernel::BrownianMin { horizon };
        k.validate()?;
        Ok(k)
    }

    pub fn custom(name: impl Into<String>, func: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Kernel::Custom(CustomKernel { name: name.into(), func: Arc::new(func) })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::Rbf { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(Error::InvalidParameter(format!("rbf scale must be positive and finite, got {scale}")))
            }
            Kernel::BrownianMin { horizon } if !(horizon > 0.0 && horizon.is_finite()) => {
                Err(Error::InvalidParameter(format!("brownian_min horizon must be positive and finite, got {horizon}")))
            }
            _ => Ok(()),
        }
    }

    /// Checks that `p` lies in the kernel's domain.
    pub fn check_point(&self, p: &Point) -> Result<()> {
        if let Kernel::BrownianMin { horizon } = *self {
            if p.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, found: p.dim() });
            }
            let t = p.coords()[0];
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::OutOfDomain { value: t, horizon });
            }
        }
        Ok(())
    }

    /// K(p, q). Symmetric bit-for-bit in its arguments.
    pub fn eval(&self, p: &Point, q: &Point) -> Result<f64> {
        self.validate()?;
        if p.dim() != q.dim() {
            return Err(Error::DimensionMismatch { expected: p.dim(), found: q.dim() });
        }
        self.check_point(p)?;
        self.check_point(q)?;
        Ok(self.eval_unchecked(p, q))
    }

    pub(crate) fn eval_unchecked(&self, p: &Point, q: &Point) -> f64 {
        match self {
            Kernel::Rbf { scale } => (-p.sq_dist(q) / (2.0 * scale)).exp(),
            Kernel::BrownianMin { .. } => p.coords()[0].min(q.coords()[0]),
            Kernel::Linear => p.coords().iter().zip(q.coords()).map(|(a, b)| a * b).sum(),
            Kernel::Custom(c) => {
                let (a, b) = if lex_le(p.coords(), q.coords()) { (p, q) } else { (q, p) };
                (c.func)(a.coords(), b.coords())
            }
        }
    }

    /// Validates a point list against the kernel and returns the shared dimension.
    pub fn check_points(&self, points: &[Point]) -> Result<usize> {
        self.validate()?;
        let dim = points.first().map_or(0, Point::dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: p.dim() });
            }
            self.check_point(p)?;
        }
        Ok(dim)
    }

    /// Rectangular matrix K(a_i, b_j).
    pub fn cross(&self, a: &[Point], b: &[Point]) -> Result<Matrix> {
        let da = self.check_points(a)?;
        let db = self.check_points(b)?;
        if !a.is_empty() && !b.is_empty() && da != db {
            return Err(Error::DimensionMismatch { expected: da, found: db });
        }
        Ok(Matrix::from_fn(a.len(), b.len(), |i, j| self.eval_unchecked(&a[i], &b[j])))
    }
}

fn lex_le(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Kernel::Rbf { scale: a }, Kernel::Rbf { scale: b }) => a.to_bits() == b.to_bits(),
            (Kernel::BrownianMin { horizon: a }, Kernel::BrownianMin { horizon: b }) => a.to_bits() == b.to_bits(),
            (Kernel::Linear, Kernel::Linear) => true,
            (Kernel::Custom(a), Kernel::Custom(b)) => a.name == b.name && Arc::ptr_eq(&a.func, &b.func),
            _ => false,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum KernelRepr {
    Rbf { scale: f64 },
    BrownianMin { horizon: f64 },
    Linear,
}

impl Serialize for Kernel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match *self {
            Kernel::Rbf { scale } => KernelRepr::Rbf { scale },
            Kernel::BrownianMin { horizon } => KernelRepr::BrownianMin { horizon },
            Kernel::Linear => KernelRepr::Linear,
            Kernel::Custom(ref c) => {
                return Err(serde::ser::Error::custom(format!("custom kernel '{}' cannot be serialized", c.name)))
            }
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let k = match KernelRepr::deserialize(d)? {
            KernelRepr::Rbf { scale } => Kernel::Rbf { scale },
            KernelRepr::BrownianMin { horizon } => Kernel::BrownianMin { horizon },
            KernelRepr::Linear => Kernel::Linear,
        };
        k.validate().map_err(serde::de::Error::custom)?;
        Ok(k)
    }
}

/// Gram matrix [K(p_i, p_j)] together with the points that produced it.
#[derive(Debug, Clone)]
pub struct GramMatrix {
    entries: Matrix,
    points: Vec<Point>,
    duplicates: Vec<(usize, usize)>,
}

impl GramMatrix {
    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index pairs (i < j) of coincident points.
    pub fn duplicates(&self) -> &[(usize, usize)] {
        &self.duplicates
    }

    pub fn has_duplicates(&self) -> bool {
        !self.duplicates.is_empty()
    }

    pub fn to_spd(&self) -> Result<SpdMatrix> {
        SpdMatrix::new(self.entries.clone())
    }

    pub fn into_matrix(self) -> Matrix {
        self.entries
    }
}

/// Builds the Gram matrix, evaluating each unordered pair once.
pub fn gram(k: &Kernel, points: &[Point]) -> Result<GramMatrix> {
    if points.is_empty() {
        return Err(Error::EmptyInput("point list"));
    }
    k.check_points(points)?;
    let n = points.len();
    let mut entries = Matrix::zeros(n, n);
    let mut duplicates = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = k.eval_unchecked(&points[i], &points[j]);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
            if j > i && points[i] == points[j] {
                duplicates.push((i, j));
            }
        }
    }
    Ok(GramMatrix { entries, points: points.to_vec(), duplicates })
}

/// ‖Φ(p) − Φ(q)‖² = K(p,p) − 2K(p,q) + K(q,q), clamped at zero.
pub fn feature_distance_sq(k: &Kernel, p: &Point, q: &Point) -> Result<f64> {
    let v = k.eval(p, p)? - 2.0 * k.eval(p, q)? + k.eval(q, q)?;
    Ok(v.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn brownian_min_eval() {
        let k = Kernel::brownian_min(1.0).unwrap();
        assert_eq!(k.eval(&pt(&[0.25]), &pt(&[0.5])).unwrap(), 0.25);
    }

    #[test]
    fn rbf_eval() {
        let k = Kernel::rbf(1.0).unwrap();
        assert_eq!(k.eval(&pt(&[0.3, 0.1]), &pt(&[0.3, 0.1])).unwrap(), 1.0);
        // |p - q|² = 2
        let v = k.eval(&pt(&[0.0, 0.0]), &pt(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(v, 0.36787944117144233, max_relative = 1e-15);
    }

    #[test]
    fn eval_errors() {
        let k = Kernel::brownian_min(1.0).unwrap();
        assert!(matches!(k.eval(&pt(&[1.5]), &pt(&[0.5])), Err(Error::OutOfDomain { .. })));
        assert!(matches!(k.eval(&pt(&[0.1, 0.2]), &pt(&[0.1, 0.2])), Err(Error::DimensionMismatch { .. })));
        let r = Kernel::rbf(1.0).unwrap();
        assert!(r.eval(&pt(&[0.1, 0.2]), &pt(&[0.1])).is_err());
        assert!(Point::new(vec![f64::NAN]).is_err());
        assert!(Point::new(vec![f64::INFINITY]).is_err());
        assert!(Kernel::rbf(0.0).is_err());
        assert!(Kernel::rbf(-1.0).is_err());
        assert!(Kernel::brownian_min(0.0).is_err());
    }

    #[test]
    fn gram_cases() {
        let k = Kernel::brownian_min(1.0).unwrap();
        let g = gram(&k, &points_1d(&[0.25, 0.5, 1.0]).unwrap()).unwrap();
        assert_eq!(g.entries().to_rows(), vec![vec![0.25, 0.25, 0.25], vec![0.25, 0.5, 0.5], vec![0.25, 0.5, 1.0]]);
        assert!(!g.has_duplicates());

        let r = Kernel::rbf(1.0).unwrap();
        assert_eq!(gram(&r, &[pt(&[3.0])]).unwrap().entries().to_rows(), vec![vec![1.0]]);

        let half = Kernel::rbf(0.5).unwrap();
        let g = gram(&half, &points_1d(&[0.0, 1.0]).unwrap()).unwrap();
        assert_relative_eq!(g.entries()[(0, 1)], (-1.0f64).exp(), max_relative = 1e-15);
        assert_eq!(g.entries()[(0, 1)], g.entries()[(1, 0)]);

        assert!(matches!(gram(&r, &[]), Err(Error::EmptyInput(_))));
        assert!(gram(&k, &points_1d(&[0.5, 2.0]).unwrap()).is_err());
    }

    #[test]
    fn gram_flags_duplicates() {
        let k = Kernel::rbf(1.0).unwrap();
        let g = gram(&k, &points_1d(&[0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(g.duplicates(), &[(0, 2)]);
    }

    #[test]
    fn feature_distance_cases() {
        let r = Kernel::rbf(1.0).unwrap();
        let p = pt(&[0.2, -0.4]);
        assert_eq!(feature_distance_sq(&r, &p, &p).unwrap(), 0.0);
        let d = feature_distance_sq(&r, &pt(&[0.0, 0.0]), &pt(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(d, 2.0 * (1.0 - (-1.0f64).exp()), max_relative = 1e-15);
        assert_relative_eq!(d, 1.2642411, epsilon = 1e-7);

        let b = Kernel::brownian_min(1.0).unwrap();
        assert_eq!(feature_distance_sq(&b, &pt(&[0.25]), &pt(&[1.0])).unwrap(), 0.75);
    }

    #[test]
    fn custom_kernel_is_symmetric() {
        // Deliberately asymmetric in floating point for unordered arguments.
        let k = Kernel::custom("skew", |a, b| (a[0] * 3.0 + b[0]).cos() + (b[0] * 3.0 + a[0]).cos());
        let (p, q) = (pt(&[0.1]), pt(&[0.7]));
        assert_eq!(k.eval(&p, &q).unwrap().to_bits(), k.eval(&q, &p).unwrap().to_bits());
        assert!(serde_json::to_string(&k).is_err());
    }

    #[test]
    fn kernel_json() {
        let k: Kernel = serde_json::from_str(r#"{"kind": "rbf", "scale": 1.0}"#).unwrap();
        assert_eq!(k, Kernel::Rbf { scale: 1.0 });
        let k: Kernel = serde_json::from_str(r#"{"kind": "brownian_min", "horizon": 2.0}"#).unwrap();
        assert_eq!(k, Kernel::BrownianMin { horizon: 2.0 });
        let k: Kernel = serde_json::from_str(r#"{"kind": "linear"}"#).unwrap();
        assert_eq!(k, Kernel::Linear);
        assert_eq!(serde_json::to_string(&Kernel::Rbf { scale: 0.5 }).unwrap(), r#"{"kind":"rbf","scale":0.5}"#);
        assert!(serde_json::from_str::<Kernel>(r#"{"kind": "rbf", "scale": -1.0}"#).is_err());
        assert!(serde_json::from_str::<Kernel>(r#"{"kind": "rbf", "scale": 1.0, "extra": 1}"#).is_err());
        assert!(serde_json::from_str::<Kernel>(r#"{"kind": "poly"}"#).is_err());
    }
}
