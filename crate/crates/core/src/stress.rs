//! The smooth-stress objective `f = ½‖𝒦(PPᵀ) − D̄‖²_F` and its calculus.
//!
//! The analytic derivatives follow from the adjoint calculus of the
//! Lindenstrauss operator:
//!
//! * gradient: `f′(P) = 4[Diag(F(P)e) − F(P)]P = 2𝒦*(F(P))P`;
//! * Hessian action:
//!   `f″(P)(Δ) = 2𝒦*(𝒦(PΔᵀ + ΔPᵀ))P + 2𝒦*(F(P))Δ`,
//!   whose quadratic form is `‖𝒦(PΔᵀ+ΔPᵀ)‖² + 2⟨F(P), 𝒦(ΔΔᵀ)⟩`;
//! * the matrix representation splits as `H = 4H₁ + 2H₂` with `H₁ = J*J`
//!   positive semidefinite and `H₂ = I_d ⊗ 𝒦*(F(P))`, which vanishes
//!   exactly at global minimizers.
//!
//! Reduced formulations are obtained by the chain rules
//! `f_L′ = Vᵀf′(VL)`, `f_ℓ′ = ltriag_adjoint(f_L′)` and their second-order
//! analogues. Vectors use the column-major flattening throughout.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::edm::{self, TriVector, VBasis};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linalg;
use crate::points::{EvalReport, Formulation, Point};
use crate::scalar::Scalar;

/// Columns beyond which dense Hessian assembly refuses to run.
pub const DENSE_HESSIAN_GUARD: usize = 5000;

/// Residual `F(P) = edm(P) − D̄`; hollow and symmetric.
pub fn residual<T: Scalar>(p: &DMatrix<T>, dbar: &DMatrix<T>) -> Result<DMatrix<T>> {
    let n = dbar.nrows();
    if p.nrows() != n {
        return Err(Error::Dimension(format!(
            "configuration has {} rows but target matrix is {n}x{}",
            p.nrows(),
            dbar.ncols()
        )));
    }
    Ok(edm::edm_of(p) - dbar)
}

/// `½‖F‖²_F` of a residual matrix.
pub fn value_from_residual<T: Scalar>(f: &DMatrix<T>) -> T {
    T::cast(0.5) * f.norm_squared()
}

/// Gradient of `f` at a full configuration: `2𝒦*(F(P))P`.
pub fn gradient_full<T: Scalar>(p: &DMatrix<T>, fres: &DMatrix<T>) -> DMatrix<T> {
    let kstar = edm::lindenstrauss_adjoint_raw(fres);
    (kstar * p).scale(T::cast(2.0))
}

/// Hessian action at a full configuration,
/// `2𝒦*(𝒦(PΔᵀ + ΔPᵀ))P + 2𝒦*(F(P))Δ`, with `𝒦*(F(P))` precomputed.
pub fn hessian_apply_full<T: Scalar>(
    p: &DMatrix<T>,
    kstar_f: &DMatrix<T>,
    delta: &DMatrix<T>,
) -> DMatrix<T> {
    let two = T::cast(2.0);
    let sym = p * delta.transpose() + delta * p.transpose();
    let first = (edm::lindenstrauss_adjoint_raw(&edm::lindenstrauss_raw(&sym)) * p).scale(two);
    first + (kstar_f * delta).scale(two)
}

/// The `H₁` part of the action (Gauss-Newton term divided by 4):
/// `½𝒦*(𝒦(PΔᵀ + ΔPᵀ))P`.
pub fn h1_apply_full<T: Scalar>(p: &DMatrix<T>, delta: &DMatrix<T>) -> DMatrix<T> {
    let sym = p * delta.transpose() + delta * p.transpose();
    (edm::lindenstrauss_adjoint_raw(&edm::lindenstrauss_raw(&sym)) * p).scale(T::cast(0.5))
}

/// `‖J(Δ)‖ = ½‖𝒦(PΔᵀ + ΔPᵀ)‖`, the Gauss-Newton residual of a direction.
pub fn j_norm<T: Scalar>(p: &DMatrix<T>, delta: &DMatrix<T>) -> T {
    let sym = p * delta.transpose() + delta * p.transpose();
    T::cast(0.5) * edm::lindenstrauss_raw(&sym).norm()
}

/// Dense Hessian with its `4H₁ + 2H₂` decomposition, in the vec ordering of
/// the owning formulation.
#[derive(Debug, Clone)]
pub struct HessianParts<T: Scalar> {
    /// Positive semidefinite Gauss-Newton part.
    pub h1: DMatrix<T>,
    /// Residual-weighted part; zero exactly at global minimizers.
    pub h2: DMatrix<T>,
    /// The Hessian, computed as `4·h1 + 2·h2`.
    pub h: DMatrix<T>,
}

/// A conversion between formulations; carries the rotation factor when a
/// triangular reduction was involved.
#[derive(Debug, Clone)]
pub struct ConvertedPoint<T: Scalar> {
    pub point: Point<T>,
    pub q: Option<DMatrix<T>>,
    pub rank_deficient: bool,
}

/// Immutable evaluation context: an instance, a formulation, and the cached
/// centering basis. Shareable across threads.
#[derive(Debug, Clone)]
pub struct EvalContext<T: Scalar> {
    instance: Instance<T>,
    formulation: Formulation,
    vbasis: VBasis<T>,
}

impl<T: Scalar> EvalContext<T> {
    pub fn new(instance: Instance<T>, formulation: Formulation) -> Result<Self> {
        let vbasis = edm::build_v(instance.n())?;
        Ok(Self {
            instance,
            formulation,
            vbasis,
        })
    }

    pub fn instance(&self) -> &Instance<T> {
        &self.instance
    }

    pub fn formulation(&self) -> Formulation {
        self.formulation
    }

    pub fn vbasis(&self) -> &VBasis<T> {
        &self.vbasis
    }

    /// Same instance, different formulation.
    pub fn with_formulation(&self, formulation: Formulation) -> Self {
        Self {
            instance: self.instance.clone(),
            formulation,
            vbasis: self.vbasis.clone(),
        }
    }

    /// Number of free variables of the formulation.
    pub fn dim(&self) -> usize {
        let (n, d) = (self.instance.n(), self.instance.d());
        match self.formulation {
            Formulation::FullP => n * d,
            Formulation::ReducedL => (n - 1) * d,
            Formulation::TriangularEll => edm::tri_len(n, d),
        }
    }

    fn check_dim(&self, x: &DVector<T>, what: &str) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Dimension(format!(
                "{what} has length {} but formulation {} needs {}",
                x.len(),
                self.formulation,
                self.dim()
            )));
        }
        Ok(())
    }

    /// Interprets a flat vector as a point of this context's formulation.
    pub fn point_from_vec(&self, x: &DVector<T>) -> Result<Point<T>> {
        self.check_dim(x, "point vector")?;
        let (n, d) = (self.instance.n(), self.instance.d());
        Ok(match self.formulation {
            Formulation::FullP => Point::Full(DMatrix::from_column_slice(n, d, x.as_slice())),
            Formulation::ReducedL => {
                Point::Reduced(DMatrix::from_column_slice(n - 1, d, x.as_slice()))
            }
            Formulation::TriangularEll => Point::Tri(TriVector::new(x.clone(), n, d)?),
        })
    }

    /// Lifts a flat vector of this formulation to the full configuration.
    pub fn configuration(&self, x: &DVector<T>) -> Result<DMatrix<T>> {
        self.check_dim(x, "point vector")?;
        let (n, d) = (self.instance.n(), self.instance.d());
        Ok(match self.formulation {
            Formulation::FullP => DMatrix::from_column_slice(n, d, x.as_slice()),
            Formulation::ReducedL => self
                .vbasis
                .lift(&DMatrix::from_column_slice(n - 1, d, x.as_slice())),
            Formulation::TriangularEll => self
                .vbasis
                .lift(&edm::ltriag(&TriVector::new(x.clone(), n, d)?)),
        })
    }

    /// Objective value `f = ½‖F‖²`; identical across formulations under the
    /// exact lifts.
    pub fn value(&self, x: &DVector<T>) -> Result<T> {
        let p = self.configuration(x)?;
        let f = residual(&p, self.instance.dbar())?;
        Ok(value_from_residual(&f))
    }

    /// Analytic gradient in the formulation's coordinates.
    pub fn gradient(&self, x: &DVector<T>) -> Result<DVector<T>> {
        let p = self.configuration(x)?;
        let f = residual(&p, self.instance.dbar())?;
        let g_p = gradient_full(&p, &f);
        Ok(self.pull_back(&g_p))
    }

    /// Hessian action on a direction given in the formulation's
    /// coordinates.
    pub fn hessian_apply(&self, x: &DVector<T>, dx: &DVector<T>) -> Result<DVector<T>> {
        self.check_dim(dx, "direction")?;
        let p = self.configuration(x)?;
        let f = residual(&p, self.instance.dbar())?;
        let kstar_f = edm::lindenstrauss_adjoint_raw(&f);
        let dp = self.push_forward(dx)?;
        let hp = hessian_apply_full(&p, &kstar_f, &dp);
        Ok(self.pull_back(&hp))
    }

    /// Dense Hessian and its split, assembled by applying the `H₁` and `H₂`
    /// actions to every unit direction. Guarded against accidental
    /// quadratic-memory blowups; use [`EvalContext::hessian_apply`] beyond
    /// the guard.
    pub fn hessian_dense(&self, x: &DVector<T>) -> Result<HessianParts<T>> {
        let m = self.dim();
        if m > DENSE_HESSIAN_GUARD {
            return Err(Error::Capacity(format!(
                "dense Hessian would have {m} > {DENSE_HESSIAN_GUARD} columns; \
                 use the matrix-free hessian_apply instead"
            )));
        }
        self.check_dim(x, "point vector")?;
        let p = self.configuration(x)?;
        let f = residual(&p, self.instance.dbar())?;
        let kstar_f = edm::lindenstrauss_adjoint_raw(&f);

        let mut h1 = DMatrix::zeros(m, m);
        let mut h2 = DMatrix::zeros(m, m);
        let mut unit = DVector::zeros(m);
        for k in 0..m {
            unit[k] = T::one();
            let dp = self.push_forward(&unit)?;
            h1.set_column(k, &self.pull_back(&h1_apply_full(&p, &dp)));
            h2.set_column(k, &self.pull_back(&(&kstar_f * &dp)));
            unit[k] = T::zero();
        }
        let half = T::cast(0.5);
        h1 = (&h1 + h1.transpose()).scale(half);
        h2 = (&h2 + h2.transpose()).scale(half);
        let h = &h1 * T::cast(4.0) + &h2 * T::cast(2.0);
        Ok(HessianParts { h1, h2, h })
    }

    /// Value, gradient norm, and smallest Hessian eigenvalue (when dense
    /// assembly is affordable).
    pub fn evaluate_report(&self, x: &DVector<T>) -> Result<EvalReport<T>> {
        let f = self.value(x)?;
        let grad_norm = self.gradient(x)?.norm();
        let lambda_min = if self.dim() <= DENSE_HESSIAN_GUARD {
            Some(linalg::lambda_min(&self.hessian_dense(x)?.h))
        } else {
            None
        };
        Ok(EvalReport {
            f,
            grad_norm,
            lambda_min,
        })
    }

    /// Maps a direction of the formulation to a full-configuration
    /// direction (the differential of the lift).
    fn push_forward(&self, dx: &DVector<T>) -> Result<DMatrix<T>> {
        let (n, d) = (self.instance.n(), self.instance.d());
        Ok(match self.formulation {
            Formulation::FullP => DMatrix::from_column_slice(n, d, dx.as_slice()),
            Formulation::ReducedL => self
                .vbasis
                .lift(&DMatrix::from_column_slice(n - 1, d, dx.as_slice())),
            Formulation::TriangularEll => self
                .vbasis
                .lift(&edm::ltriag(&TriVector::new(dx.clone(), n, d)?)),
        })
    }

    /// Adjoint of [`EvalContext::push_forward`]: maps a full-configuration
    /// (co)direction back to the formulation's coordinates.
    fn pull_back(&self, mp: &DMatrix<T>) -> DVector<T> {
        match self.formulation {
            Formulation::FullP => DVector::from_column_slice(mp.as_slice()),
            Formulation::ReducedL => {
                let l = self.vbasis.project(mp);
                DVector::from_column_slice(l.as_slice())
            }
            Formulation::TriangularEll => {
                let l = self.vbasis.project(mp);
                edm::ltriag_adjoint(&l).into_values()
            }
        }
    }

    /// Converts a point to another formulation. Going from `P` or `L` to
    /// `ell` performs the rotation reduction and reports its orthogonal
    /// factor; lifting from `ell` is exact.
    pub fn convert(&self, point: &Point<T>, target: Formulation) -> Result<ConvertedPoint<T>> {
        let (n, d) = (self.instance.n(), self.instance.d());
        // normalize to L coordinates first
        let l = match point {
            Point::Full(p) => {
                if p.nrows() != n || p.ncols() != d {
                    return Err(Error::Dimension(format!(
                        "configuration must be {n}x{d}, got {}x{}",
                        p.nrows(),
                        p.ncols()
                    )));
                }
                self.vbasis.project(&edm::center(p))
            }
            Point::Reduced(l) => {
                if l.nrows() != n - 1 || l.ncols() != d {
                    return Err(Error::Dimension(format!(
                        "reduced point must be {}x{d}, got {}x{}",
                        n - 1,
                        l.nrows(),
                        l.ncols()
                    )));
                }
                l.clone()
            }
            Point::Tri(t) => {
                if t.n() != n || t.d() != d {
                    return Err(Error::Dimension(
                        "packed point does not match the instance dimensions".into(),
                    ));
                }
                edm::ltriag(t)
            }
        };
        Ok(match target {
            Formulation::FullP => ConvertedPoint {
                point: Point::Full(self.vbasis.lift(&l)),
                q: None,
                rank_deficient: false,
            },
            Formulation::ReducedL => ConvertedPoint {
                point: Point::Reduced(l),
                q: None,
                rank_deficient: false,
            },
            Formulation::TriangularEll => {
                let red = edm::reduce_to_triangular(&l);
                ConvertedPoint {
                    point: Point::Tri(red.ell),
                    q: Some(red.q),
                    rank_deficient: red.rank_deficient,
                }
            }
        })
    }
}

/// The two sides of the stationarity pairing for `H₂`:
/// `(p̄ᵀH₂p̄, −‖F(P)‖²)` with `p̄ = vec(P̄)`.
///
/// The exact identity `p̄ᵀH₂p̄ + ‖F‖² = ½⟨f′(P), P⟩` bounds their
/// disagreement by `½‖g‖·‖P‖`, so the two values coincide at stationary
/// points.
pub fn h2_pairing<T: Scalar>(p: &DMatrix<T>, instance: &Instance<T>) -> Result<(T, T)> {
    let p_bar = instance.p_bar().ok_or_else(|| {
        Error::Domain("h2 pairing requires the instance to carry a generator P_bar".into())
    })?;
    let f = residual(p, instance.dbar())?;
    let kstar_f = edm::lindenstrauss_adjoint_raw(&f);
    let lhs = linalg::frob_inner(p_bar, &(&kstar_f * p_bar));
    Ok((lhs, -f.norm_squared()))
}

/// Classification thresholds and scalars snapshotted at a stationary point;
/// shared between the solver and its reports.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct StationaryScalars<T: Scalar> {
    pub f: T,
    pub grad_norm: T,
    pub lambda_min: T,
    /// `‖edm(P)‖_F` of the lifted configuration (detects collapse).
    pub dp_norm: T,
    /// `‖D̄‖_F` of the instance.
    pub dbar_norm: T,
    pub g_tol_eff: T,
    pub lambda_tol_eff: T,
    pub f_tol: T,
    pub collapse_tol: T,
}
