//! Scalar abstraction for the numerical kernels: `f32` or `f64`.

use nalgebra::RealField;
use num_traits::{NumCast, ToPrimitive};
use serde::{de::DeserializeOwned, Serialize};

/// Real scalar the core math is generic over.
///
/// Tolerances throughout the crate are stated as `f64` literals and converted
/// with [`Scalar::cast`]; they are calibrated for `f64`, so the `f32`
/// instantiation is only appropriate for loose-tolerance work.
pub trait Scalar:
    RealField + Copy + NumCast + Serialize + DeserializeOwned + Send + Sync + 'static
{
    /// Converts an `f64` constant into the scalar type.
    fn cast(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("finite f64 constant must be representable")
    }

    /// Widens the scalar back to `f64` (used for reporting and hashing).
    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).expect("real scalar converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
