//! Kernel machines seen through Gaussian measures.
//!
//! * [`kernels`]: reproducing kernels, Gram matrices, feature-map distances.
//! * [`linalg`]: Cholesky with jitter escalation, Jacobi eigen-solver, matrix square roots.
//! * [`regress`]: kernel ridge regression (closed-form and geometric routes) and
//!   minimum-norm spline interpolation.
//! * [`gauss`]: Gaussian conditioning, the noise-augmented joint covariance, sampling.
//! * [`radon`]: Gaussian Radon transform of linear and nonlinear path functionals.
//! * [`wiener`]: Cameron–Martin geometry of Brownian motion and measurable-norm tail mass.
//!
//! Ridge prediction and Gaussian conditioning agree exactly:
//!
//! ```
//! use rkhs_radon::{gauss, regress, Dataset, Kernel, Point, SolvePath};
//!
//! let k = Kernel::rbf(0.5).unwrap();
//! let data = Dataset::from_pairs(&[(0.0, 1.0), (0.7, -0.3), (1.5, 0.8)]).unwrap();
//! let model = regress::ridge_fit(&data, &k, 0.1, SolvePath::ClosedForm).unwrap();
//! let p = Point::scalar(0.4).unwrap();
//! let a = regress::predict(&model, &p).unwrap();
//! let b = gauss::ridge_via_conditioning(&data, &k, 0.1, &p).unwrap();
//! assert!((a - b).abs() < 1e-12);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gauss;
pub mod json;
pub mod kernels;
pub mod linalg;
pub mod radon;
pub mod regress;
pub mod rng;
pub mod wiener;

pub use error::{Error, Result};
pub use gauss::{ConditionalGaussian, GaussianSampler, JointGaussian, Observation};
pub use kernels::{CustomKernel, GramMatrix, Kernel, Point};
pub use linalg::{Cholesky, EigenDecomp, Matrix, PsdFactor, SpdFunction, SpdMatrix};
pub use radon::{AffineConditioning, FunctionalSpec, McEstimate};
pub use regress::{Dataset, RidgeModel, SolvePath};
pub use rng::CounterRng;
pub use wiener::{PiecewiseLinearPath, TailMassReport};
