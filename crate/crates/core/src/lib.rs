//! Point recovery from Euclidean distance matrices via the smooth stress
//! objective.
//!
//! Given a target matrix of squared pairwise distances `D̄`, the library
//! evaluates the quartic objective `f(P) = ½‖𝒦(PPᵀ) − D̄‖²_F` (half the
//! smooth stress) together with its analytic gradient and Hessian, in three
//! equivalent coordinate systems:
//!
//! * `P ∈ ℝ^{n×d}` — the full configuration of `n` points in dimension `d`;
//! * `L ∈ ℝ^{(n−1)×d}` — centered coordinates `P = VL`, which quotient out
//!   translations through an orthonormal basis `V` of the complement of the
//!   all-ones vector;
//! * `ℓ ∈ ℝ^{t_ℓ}` — packed lower-trapezoidal coordinates, which additionally
//!   quotient out rotations through a QR factorization.
//!
//! On top of the calculus the crate provides a trust-region Newton solver
//! that locates and classifies second-order stationary points, and a
//! certifier that turns a numerically stationary point with positive
//! objective value and positive-definite reduced Hessian into a Kantorovich
//! existence proof of a strict local nonglobal minimizer.
//!
//! All numerical kernels are generic over the scalar type through the
//! [`Scalar`] trait; `f64` aliases for the common types are exported at the
//! crate root.

pub mod certifier;
pub mod edm;
pub mod error;
pub mod fd;
pub mod instance;
pub mod io;
pub mod linalg;
pub mod points;
pub mod scalar;
pub mod solver;
pub mod stress;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Dense column-major matrix over a generic scalar.
pub type Mat<T> = nalgebra::DMatrix<T>;
/// Dense column vector over a generic scalar.
pub type Vector<T> = nalgebra::DVector<T>;

/// Double-precision matrix, the default working type.
pub type Mat64 = Mat<f64>;
/// Double-precision vector.
pub type Vec64 = Vector<f64>;
/// Double-precision problem instance.
pub type Instance64 = instance::Instance<f64>;
/// Double-precision evaluation context.
pub type EvalContext64 = stress::EvalContext<f64>;
/// Double-precision solve report.
pub type SolveReport64 = solver::SolveReport<f64>;
/// Double-precision certificate.
pub type Certificate64 = certifier::Certificate<f64>;
