//! Central finite differences, used to verify the analytic calculus.
//!
//! These are verification utilities (the `check calculus` suite and the test
//! batteries use them); the production gradient and Hessian are always
//! analytic. Step size per coordinate is `h = 1e-5·(1 + |x_i|)`.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::scalar::Scalar;

fn step<T: Scalar>(xi: T) -> T {
    T::cast(1e-5) * (T::one() + xi.abs())
}

/// Central-difference gradient of a scalar function.
pub fn fd_gradient<T: Scalar>(
    f: impl Fn(&DVector<T>) -> Result<T>,
    x: &DVector<T>,
) -> Result<DVector<T>> {
    let mut g = DVector::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let h = step(x[i]);
        probe[i] = x[i] + h;
        let plus = f(&probe)?;
        probe[i] = x[i] - h;
        let minus = f(&probe)?;
        probe[i] = x[i];
        g[i] = (plus - minus) / (T::cast(2.0) * h);
    }
    Ok(g)
}

/// Central-difference Jacobian of a vector function; column `i` is the
/// difference quotient in coordinate `i`. Applied to an analytic gradient
/// this yields a Hessian check that is independent of the Hessian code
/// path.
pub fn fd_jacobian<T: Scalar>(
    g: impl Fn(&DVector<T>) -> Result<DVector<T>>,
    x: &DVector<T>,
) -> Result<DMatrix<T>> {
    let n = x.len();
    let mut probe = x.clone();
    let mut out: Option<DMatrix<T>> = None;
    for i in 0..n {
        let h = step(x[i]);
        probe[i] = x[i] + h;
        let plus = g(&probe)?;
        probe[i] = x[i] - h;
        let minus = g(&probe)?;
        probe[i] = x[i];
        let col = (plus - minus) / (T::cast(2.0) * h);
        let jac = out.get_or_insert_with(|| DMatrix::zeros(col.len(), n));
        jac.set_column(i, &col);
    }
    Ok(out.expect("x must have at least one coordinate"))
}
