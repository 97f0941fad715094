//! Points in the three coordinate systems and their file form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::edm::{self, TriVector};
use crate::error::{Error, Result};
use crate::instance::{matrix_to_rows, rows_to_matrix};
use crate::scalar::Scalar;

/// Which coordinate system a point lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// Full configuration `P ∈ ℝ^{n×d}`.
    #[serde(rename = "P")]
    FullP,
    /// Centered coordinates `L ∈ ℝ^{(n−1)×d}` with `P = VL`.
    #[serde(rename = "L")]
    ReducedL,
    /// Packed lower-trapezoidal coordinates `ℓ ∈ ℝ^{t_ℓ}`.
    #[serde(rename = "ell")]
    TriangularEll,
}

impl std::fmt::Display for Formulation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Formulation::FullP => "P",
            Formulation::ReducedL => "L",
            Formulation::TriangularEll => "ell",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Formulation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Formulation::FullP),
            "L" | "l" => Ok(Formulation::ReducedL),
            "ell" => Ok(Formulation::TriangularEll),
            other => Err(Error::Invalid(format!(
                "unknown formulation {other:?}; expected \"P\", \"L\" or \"ell\""
            ))),
        }
    }
}

/// A point bound to a formulation.
#[derive(Debug, Clone, PartialEq)]
pub enum Point<T: Scalar> {
    Full(DMatrix<T>),
    Reduced(DMatrix<T>),
    Tri(TriVector<T>),
}

impl<T: Scalar> Point<T> {
    pub fn formulation(&self) -> Formulation {
        match self {
            Point::Full(_) => Formulation::FullP,
            Point::Reduced(_) => Formulation::ReducedL,
            Point::Tri(_) => Formulation::TriangularEll,
        }
    }

    /// The column-major flattening used everywhere in the crate.
    pub fn to_vec(&self) -> DVector<T> {
        match self {
            Point::Full(m) | Point::Reduced(m) => DVector::from_column_slice(m.as_slice()),
            Point::Tri(t) => t.values().clone(),
        }
    }
}

/// File form of a point: `{"formulation": "P"|"L"|"ell", "data": ...}`.
/// `data` is a row-major nested array for matrix formulations and a flat
/// array for `ell`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PointFile<T: Scalar> {
    pub formulation: Formulation,
    pub data: PointData<T>,
    /// Orthogonal factor from a rotation reduction, when one produced this
    /// point. Informational; readers may ignore it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<Vec<T>>>,
}

/// Nested (matrix) or flat (packed vector) payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "", untagged)]
pub enum PointData<T: Scalar> {
    Nested(Vec<Vec<T>>),
    Flat(Vec<T>),
}

impl<T: Scalar> PointFile<T> {
    pub fn from_point(point: &Point<T>) -> Self {
        match point {
            Point::Full(m) => PointFile {
                formulation: Formulation::FullP,
                data: PointData::Nested(matrix_to_rows(m)),
                q: None,
            },
            Point::Reduced(m) => PointFile {
                formulation: Formulation::ReducedL,
                data: PointData::Nested(matrix_to_rows(m)),
                q: None,
            },
            Point::Tri(t) => PointFile {
                formulation: Formulation::TriangularEll,
                data: PointData::Flat(t.values().iter().copied().collect()),
                q: None,
            },
        }
    }

    /// Binds the file to an instance's dimensions, checking shapes and
    /// finiteness.
    pub fn into_point(self, n: usize, d: usize) -> Result<Point<T>> {
        let point = match (self.formulation, self.data) {
            (Formulation::FullP, PointData::Nested(rows)) => {
                Point::Full(rows_to_matrix(&rows, n, d, "point data (P)")?)
            }
            (Formulation::ReducedL, PointData::Nested(rows)) => {
                Point::Reduced(rows_to_matrix(&rows, n - 1, d, "point data (L)")?)
            }
            (Formulation::TriangularEll, PointData::Flat(vals)) => {
                let v = DVector::from_vec(vals);
                Point::Tri(TriVector::new(v, n, d)?)
            }
            (f, _) => {
                return Err(Error::Invalid(format!(
                    "point data shape does not match formulation {f}: \
                     matrix formulations need nested rows, ell needs a flat array"
                )))
            }
        };
        let finite = match &point {
            Point::Full(m) | Point::Reduced(m) => m.iter().all(|x| x.is_finite()),
            Point::Tri(t) => t.values().iter().all(|x| x.is_finite()),
        };
        if !finite {
            return Err(Error::Invalid("finiteness: point contains NaN or Inf".into()));
        }
        Ok(point)
    }

    pub fn save<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        crate::io::write_json(path, self)
    }

    pub fn load<P: AsRef<std::path::Path>>(path: P) -> Result<Self> {
        crate::io::read_json(path)
    }
}

/// Evaluation summary written by the CLI: objective value, gradient norm
/// and (when the dense Hessian is affordable) its smallest eigenvalue.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvalReport<T: Scalar> {
    pub f: T,
    pub grad_norm: T,
    pub lambda_min: Option<T>,
}

/// Canonical triangular representative of a point: center, project onto the
/// `V` basis, and rotation-reduce. Used to compare stationary points modulo
/// translations and rotations.
pub fn canonical_ell<T: Scalar>(
    point: &Point<T>,
    vbasis: &edm::VBasis<T>,
) -> Result<DVector<T>> {
    let l = match point {
        Point::Full(p) => vbasis.project(&edm::center(p)),
        Point::Reduced(l) => l.clone(),
        Point::Tri(t) => return Ok(t.values().clone()),
    };
    Ok(edm::reduce_to_triangular(&l).ell.into_values())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_file_round_trip() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let p = Point::Full(m);
        let file = PointFile::from_point(&p);
        let text = crate::io::to_json_string(&file).unwrap();
        let back: PointFile<f64> = crate::io::from_json_str(&text).unwrap();
        assert_eq!(back.into_point(3, 2).unwrap(), p);
    }

    #[test]
    fn ell_uses_flat_data() {
        let t = TriVector::new(DVector::from_column_slice(&[1.0, 2.0, 3.0]), 4, 1).unwrap();
        let file = PointFile::from_point(&Point::Tri(t.clone()));
        let text = crate::io::to_json_string(&file).unwrap();
        assert!(text.contains("\"ell\""));
        let back: PointFile<f64> = crate::io::from_json_str(&text).unwrap();
        assert_eq!(back.into_point(4, 1).unwrap(), Point::Tri(t));
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let file: PointFile<f64> =
            crate::io::from_json_str(r#"{"formulation":"P","data":[[0.0],[1.0]]}"#).unwrap();
        assert!(file.into_point(3, 1).is_err());
    }

    #[test]
    fn canonical_ell_quotients_translation_and_rotation() {
        let vb = edm::build_v::<f64>(4).unwrap();
        let p = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 1.0, 0.2, -0.3, 1.0, 2.0, -1.0]);
        // rotate and translate
        let theta: f64 = 0.7;
        let q = DMatrix::from_row_slice(
            2,
            2,
            &[theta.cos(), -theta.sin(), theta.sin(), theta.cos()],
        );
        let mut moved = &p * &q;
        for i in 0..4 {
            moved[(i, 0)] += 5.0;
            moved[(i, 1)] -= 2.5;
        }
        let a = canonical_ell(&Point::Full(p), &vb).unwrap();
        let b = canonical_ell(&Point::Full(moved), &vb).unwrap();
        assert!((a - b).amax() < 1e-10);
    }
}
