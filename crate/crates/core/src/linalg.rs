//! Small dense linear-algebra helpers layered over nalgebra.
//!
//! Everything here is deterministic: eigenvalues are returned sorted
//! ascending and eigenvector signs follow a fixed convention, so identical
//! inputs produce bitwise identical outputs across runs.

use nalgebra::{DMatrix, DVector};

use crate::scalar::Scalar;

/// Symmetric eigendecomposition with eigenvalues sorted ascending.
#[derive(Debug, Clone)]
pub struct SymEig<T: Scalar> {
    /// Eigenvalues, ascending.
    pub values: DVector<T>,
    /// Matching eigenvectors as columns, signs normalized.
    pub vectors: DMatrix<T>,
}

impl<T: Scalar> SymEig<T> {
    /// Smallest eigenvalue.
    pub fn lambda_min(&self) -> T {
        self.values[0]
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> T {
        self.values[self.values.len() - 1]
    }

    /// Spectral norm, `max |λ_i|`.
    pub fn spectral_norm(&self) -> T {
        let lo = self.lambda_min().abs();
        let hi = self.lambda_max().abs();
        if lo > hi {
            lo
        } else {
            hi
        }
    }

    /// Eigenvector for the smallest eigenvalue.
    pub fn min_vector(&self) -> DVector<T> {
        self.vectors.column(0).into_owned()
    }

    /// Solves `A x = b` through the eigenbasis. The caller is responsible
    /// for checking conditioning first.
    pub fn solve(&self, b: &DVector<T>) -> DVector<T> {
        let proj = self.vectors.transpose() * b;
        let scaled =
            DVector::from_iterator(proj.len(), proj.iter().zip(self.values.iter()).map(|(c, l)| *c / *l));
        &self.vectors * scaled
    }

    /// Condition estimate `max|λ| / min|λ|`; `f64::INFINITY` when the
    /// smallest magnitude vanishes.
    pub fn condition(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for l in self.values.iter() {
            let a = l.abs().to_f64();
            lo = lo.min(a);
            hi = hi.max(a);
        }
        if lo == 0.0 {
            f64::INFINITY
        } else {
            hi / lo
        }
    }
}

/// Flips `v` so that its largest-magnitude entry is positive (first such
/// entry on ties). Fixes the sign freedom of eigenvectors.
pub fn normalize_sign<T: Scalar>(v: &mut DVector<T>) {
    let mut idx = 0;
    let mut best = T::zero();
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v[idx] < T::zero() {
        v.neg_mut();
    }
}

/// Eigendecomposition of a symmetric matrix, sorted and sign-normalized.
///
/// The input is symmetrized as `(A + Aᵀ)/2` first so that callers may pass
/// matrices that are symmetric only up to rounding.
pub fn sym_eig<T: Scalar>(a: &DMatrix<T>) -> SymEig<T> {
    assert_eq!(a.nrows(), a.ncols(), "sym_eig requires a square matrix");
    let half = T::cast(0.5);
    let sym = (a + a.transpose()).scale(half);
    let eig = sym.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .expect("eigenvalues are finite")
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        normalize_sign(&mut col);
        vectors.set_column(k, &col);
    }
    SymEig { values, vectors }
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min<T: Scalar>(a: &DMatrix<T>) -> T {
    sym_eig(a).lambda_min()
}

/// Spectral norm of a symmetric matrix.
pub fn spectral_norm_sym<T: Scalar>(a: &DMatrix<T>) -> T {
    sym_eig(a).spectral_norm()
}

/// Extends a matrix with orthonormal columns to a full orthogonal basis.
///
/// The added columns are obtained by projecting standard basis vectors and
/// greedily taking the one with the largest residual, with one
/// reorthogonalization pass; the output is deterministic.
pub fn complete_orthonormal<T: Scalar>(q: &DMatrix<T>) -> DMatrix<T> {
    let dim = q.nrows();
    let mut cols: Vec<DVector<T>> = q.column_iter().map(|c| c.into_owned()).collect();
    assert!(cols.len() <= dim);
    while cols.len() < dim {
        let mut best: Option<(T, DVector<T>)> = None;
        for i in 0..dim {
            let mut r: DVector<T> = DVector::zeros(dim);
            r[i] = T::one();
            for c in &cols {
                let coeff = c.dot(&r);
                r.axpy(-coeff, c, T::one());
            }
            // second pass for numerical orthogonality
            for c in &cols {
                let coeff = c.dot(&r);
                r.axpy(-coeff, c, T::one());
            }
            let norm = r.norm();
            if best.as_ref().is_none_or(|(b, _)| norm > *b) {
                best = Some((norm, r));
            }
        }
        let (norm, mut r) = best.expect("dim > 0");
        assert!(
            norm > T::cast(1e-8),
            "orthonormal completion lost rank; input columns were not orthonormal"
        );
        r /= norm;
        normalize_sign(&mut r);
        cols.push(r);
    }
    DMatrix::from_columns(&cols)
}

/// Frobenius inner product `⟨A, B⟩ = trace(AᵀB)`.
pub fn frob_inner<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> T {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigendecomposition_sorted_and_consistent() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let e = sym_eig(&a);
        assert!(e.values[0] <= e.values[1] && e.values[1] <= e.values[2]);
        for k in 0..3 {
            let v = e.vectors.column(k).into_owned();
            let av = &a * &v;
            let lv = v.scale(e.values[k]);
            assert!((av - lv).norm() < 1e-12 * (1.0 + e.spectral_norm()));
        }
        // orthonormal
        let qtq = e.vectors.transpose() * &e.vectors;
        assert!((qtq - DMatrix::<f64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn completion_builds_orthogonal_matrix() {
        let q0 = DMatrix::from_column_slice(4, 2, &[0.5, 0.5, 0.5, 0.5, 0.5, -0.5, 0.5, -0.5]);
        let q = complete_orthonormal(&q0);
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::<f64>::identity(4, 4)).norm() < 1e-12);
        // original columns preserved
        assert_eq!(q.column(0), q0.column(0));
        assert_eq!(q.column(1), q0.column(1));
    }

    #[test]
    fn eig_solve_matches_direct() {
        let a = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0]);
        let x = sym_eig(&a).solve(&b);
        assert!((&a * &x - &b).norm() < 1e-12);
    }
}
