//! Linear and structural transformations of Euclidean distance matrix
//! theory.
//!
//! The central object is the Lindenstrauss operator
//! `𝒦(G) = diag(G)eᵀ + e diag(G)ᵀ − 2G`, which maps Gram matrices to
//! matrices of squared pairwise distances, together with its adjoint
//! `𝒦*(S) = 2(Diag(Se) − S)`, a graph-Laplacian-type map. The module also
//! provides the centering basis `V` (an orthonormal basis of `e⊥` used to
//! quotient out translations), the packed lower-trapezoidal coordinates `ℓ`
//! used to quotient out rotations, and the QR-based reduction between the
//! two reduced coordinate systems.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Triangular number `t(k) = k(k+1)/2`.
pub fn triangular(k: usize) -> usize {
    k * (k + 1) / 2
}

fn check_square_symmetric<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = T::one() + m.amax();
    let tol = T::cast(1e-12) * scale;
    for i in 0..m.nrows() {
        for j in (i + 1)..m.ncols() {
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return Err(Error::Asymmetric(format!(
                    "{what} entry ({i},{j}) differs from ({j},{i}) beyond 1e-12 relative"
                )));
            }
        }
    }
    Ok(())
}

/// `𝒦(G) = diag(G)eᵀ + e diag(G)ᵀ − 2G` for symmetric `G`.
///
/// The result is hollow (its diagonal is set exactly to zero) and symmetric;
/// for `G = PPᵀ` it is the matrix of squared pairwise distances of the rows
/// of `P`.
pub fn lindenstrauss<T: Scalar>(g: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square_symmetric(g, "lindenstrauss input")?;
    Ok(lindenstrauss_raw(g))
}

pub(crate) fn lindenstrauss_raw<T: Scalar>(g: &DMatrix<T>) -> DMatrix<T> {
    let n = g.nrows();
    let two = T::cast(2.0);
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                d[(i, j)] = g[(i, i)] + g[(j, j)] - two * g[(i, j)];
            }
        }
    }
    d
}

/// Adjoint of the Lindenstrauss operator, `𝒦*(S) = 2(Diag(Se) − S)`.
///
/// Row sums of the result vanish; when `S` is elementwise nonnegative the
/// result is diagonally dominant and hence positive semidefinite.
pub fn lindenstrauss_adjoint<T: Scalar>(s: &DMatrix<T>) -> Result<DMatrix<T>> {
    check_square_symmetric(s, "lindenstrauss_adjoint input")?;
    Ok(lindenstrauss_adjoint_raw(s))
}

pub(crate) fn lindenstrauss_adjoint_raw<T: Scalar>(s: &DMatrix<T>) -> DMatrix<T> {
    let n = s.nrows();
    let two = T::cast(2.0);
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        let row_sum = (0..n).fold(T::zero(), |acc, j| acc + s[(i, j)]);
        for j in 0..n {
            out[(i, j)] = if i == j {
                two * (row_sum - s[(i, j)])
            } else {
                -two * s[(i, j)]
            };
        }
    }
    out
}

/// Squared-distance matrix of the rows of `P`: entry `(i,j)` is
/// `‖pᵢ − pⱼ‖²`. Equals `𝒦(PPᵀ)` but is computed pairwise, which avoids
/// cancellation and is exactly symmetric and hollow.
pub fn edm_of<T: Scalar>(p: &DMatrix<T>) -> DMatrix<T> {
    let n = p.nrows();
    let mut d = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = T::zero();
            for k in 0..p.ncols() {
                let diff = p[(i, k)] - p[(j, k)];
                acc += diff * diff;
            }
            d[(i, j)] = acc;
            d[(j, i)] = acc;
        }
    }
    d
}

/// Subtracts the column means, so the output has `Pᵀe = 0`. Squared
/// pairwise distances are unchanged.
pub fn center<T: Scalar>(p: &DMatrix<T>) -> DMatrix<T> {
    let n = p.nrows();
    let inv_n = T::one() / T::cast(n as f64);
    let mut out = p.clone();
    for j in 0..p.ncols() {
        let mean = (0..n).fold(T::zero(), |acc, i| acc + p[(i, j)]) * inv_n;
        for i in 0..n {
            out[(i, j)] -= mean;
        }
    }
    out
}

/// Orthonormal basis `V ∈ ℝ^{n×(n−1)}` of the complement of the all-ones
/// vector: `VᵀV = I`, `Vᵀe = 0`, `VVᵀ = I − eeᵀ/n`.
///
/// Built from the Householder reflector mapping `e` to `√n·e₁`; its columns
/// 2..n are exactly such a basis, so the construction is deterministic and
/// orthonormal up to rounding.
#[derive(Debug, Clone)]
pub struct VBasis<T: Scalar> {
    v: DMatrix<T>,
}

impl<T: Scalar> VBasis<T> {
    /// Number of points `n` (rows of `V`).
    pub fn n(&self) -> usize {
        self.v.nrows()
    }

    /// The matrix `V` itself.
    pub fn matrix(&self) -> &DMatrix<T> {
        &self.v
    }

    /// Lifts centered coordinates: `P = VL`.
    pub fn lift(&self, l: &DMatrix<T>) -> DMatrix<T> {
        &self.v * l
    }

    /// Projects a configuration: `L = VᵀP`. Together with [`center`] this
    /// inverts [`VBasis::lift`] on centered configurations.
    pub fn project(&self, p: &DMatrix<T>) -> DMatrix<T> {
        self.v.transpose() * p
    }
}

/// Builds the centering basis for `n ≥ 2` points.
pub fn build_v<T: Scalar>(n: usize) -> Result<VBasis<T>> {
    if n < 2 {
        return Err(Error::Domain(format!("V basis requires n >= 2, got {n}")));
    }
    let nf = T::cast(n as f64);
    let sqrt_n = nf.sqrt();
    // u = e − √n·e₁; the reflector I − 2uuᵀ/(uᵀu) maps e to √n·e₁.
    let mut u = DVector::from_element(n, T::one());
    u[0] -= sqrt_n;
    let factor = T::cast(2.0) / u.dot(&u);
    let mut v = DMatrix::zeros(n, n - 1);
    for j in 0..(n - 1) {
        let col = j + 1;
        for i in 0..n {
            let id = if i == col { T::one() } else { T::zero() };
            v[(i, j)] = id - factor * u[i] * u[col];
        }
    }
    Ok(VBasis { v })
}

/// Number of packed lower-trapezoidal coordinates for an `(n−1)×d` matrix:
/// `t(n−1)` when `d ≥ n−1`, otherwise `(n−1)d − t(d−1)`.
pub fn tri_len(n: usize, d: usize) -> usize {
    assert!(n >= 2 && d >= 1, "tri_len requires n >= 2, d >= 1");
    if d >= n - 1 {
        triangular(n - 1)
    } else {
        (n - 1) * d - triangular(d - 1)
    }
}

/// Packed lower-trapezoidal coordinates `ℓ` with their `(n, d)` context.
#[derive(Debug, Clone, PartialEq)]
pub struct TriVector<T: Scalar> {
    values: DVector<T>,
    n: usize,
    d: usize,
}

impl<T: Scalar> TriVector<T> {
    /// Wraps a packed vector, checking its length against `tri_len(n, d)`.
    pub fn new(values: DVector<T>, n: usize, d: usize) -> Result<Self> {
        let want = tri_len(n, d);
        if values.len() != want {
            return Err(Error::Dimension(format!(
                "packed triangular vector for n={n}, d={d} must have length {want}, got {}",
                values.len()
            )));
        }
        Ok(Self { values, n, d })
    }

    pub fn values(&self) -> &DVector<T> {
        &self.values
    }

    pub fn into_values(self) -> DVector<T> {
        self.values
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }
}

/// Unpacks `ℓ` into the `(n−1)×d` lower-trapezoidal matrix, column-major:
/// column `j` (1-based) receives rows `j..n−1`, so entry `(i,j)` with
/// `j ≤ i` is `ℓ[nj − n − t(j) + i + 1]` and everything above is zero.
pub fn ltriag<T: Scalar>(ell: &TriVector<T>) -> DMatrix<T> {
    let (n, d) = (ell.n, ell.d);
    let mut l = DMatrix::zeros(n - 1, d);
    let mut k = 0;
    for j in 0..d.min(n - 1) {
        for i in j..(n - 1) {
            l[(i, j)] = ell.values[k];
            k += 1;
        }
    }
    debug_assert_eq!(k, ell.values.len());
    l
}

/// Extracts the packed lower-trapezoidal part of an `(n−1)×d` matrix. The
/// composition `ltriag ∘ ltriag_adjoint` is the orthogonal projection onto
/// lower-trapezoidal matrices, and `ltriag_adjoint ∘ ltriag` is the
/// identity.
pub fn ltriag_adjoint<T: Scalar>(l: &DMatrix<T>) -> TriVector<T> {
    let n = l.nrows() + 1;
    let d = l.ncols();
    let mut values = DVector::zeros(tri_len(n, d));
    let mut k = 0;
    for j in 0..d.min(n - 1) {
        for i in j..(n - 1) {
            values[k] = l[(i, j)];
            k += 1;
        }
    }
    TriVector { values, n, d }
}

/// Result of the rotation reduction `L = ltriag(ℓ)Qᵀ`.
#[derive(Debug, Clone)]
pub struct TriangularReduction<T: Scalar> {
    /// Packed triangular coordinates.
    pub ell: TriVector<T>,
    /// The `d×d` orthogonal factor.
    pub q: DMatrix<T>,
    /// Set when the smallest pivot is negligible relative to the largest;
    /// the factorization is then valid but not unique.
    pub rank_deficient: bool,
    /// Smallest absolute pivot of the triangular factor.
    pub min_pivot: T,
    /// Largest absolute pivot of the triangular factor.
    pub max_pivot: T,
}

/// Rotation reduction of centered coordinates via the QR factorization of
/// `Lᵀ`, normalized so every pivot of the triangular factor is nonnegative.
///
/// Returns `(ℓ, Q)` with `ltriag(ℓ)Qᵀ = L`. Rank-deficient inputs still
/// factor correctly but are flagged, since the triangular representative is
/// no longer unique.
pub fn reduce_to_triangular<T: Scalar>(l: &DMatrix<T>) -> TriangularReduction<T> {
    let rows = l.nrows(); // n − 1
    let d = l.ncols();
    let qr = l.transpose().qr();
    let q_thin = qr.q(); // d × min(d, rows)
    let r = qr.r(); // min(d, rows) × rows
    let q = if q_thin.ncols() == d {
        q_thin
    } else {
        crate::linalg::complete_orthonormal(&q_thin)
    };

    // Resolve the sign freedom: flip so all pivots are >= 0.
    let mut q = q;
    let mut rt = DMatrix::zeros(rows, d);
    rt.view_mut((0, 0), (r.ncols(), r.nrows()))
        .copy_from(&r.transpose());
    let npiv = d.min(rows);
    for k in 0..npiv {
        if rt[(k, k)] < T::zero() {
            for i in 0..rows {
                rt[(i, k)] = -rt[(i, k)];
            }
            for i in 0..d {
                q[(i, k)] = -q[(i, k)];
            }
        }
    }

    let mut min_pivot = T::max_value().unwrap();
    let mut max_pivot = T::zero();
    for k in 0..npiv {
        let p = rt[(k, k)].abs();
        if p < min_pivot {
            min_pivot = p;
        }
        if p > max_pivot {
            max_pivot = p;
        }
    }
    let rank_deficient = min_pivot <= T::cast(1e-8) * max_pivot || max_pivot == T::zero();

    TriangularReduction {
        ell: ltriag_adjoint(&rt),
        q,
        rank_deficient,
        min_pivot,
        max_pivot,
    }
}
