//! Problem instances: the target squared-distance matrix and its optional
//! generator configuration.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::edm;
use crate::error::{Error, Result};
use crate::io;
use crate::scalar::Scalar;

/// Problem data: `n` points in dimension `d`, the target matrix `D̄` of
/// squared pairwise distances, and (optionally) the generator configuration
/// `P̄` whose rows realize `D̄` exactly.
///
/// The file form is JSON with row-major nested arrays:
/// `{"n", "d", "D", "P_bar", "seed"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "", into = "InstanceFile<T>", try_from = "InstanceFile<T>")]
pub struct Instance<T: Scalar> {
    n: usize,
    d: usize,
    dbar: DMatrix<T>,
    p_bar: Option<DMatrix<T>>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "")]
struct InstanceFile<T: Scalar> {
    n: usize,
    d: usize,
    #[serde(rename = "D")]
    dmat: Vec<Vec<T>>,
    #[serde(rename = "P_bar", default, skip_serializing_if = "Option::is_none")]
    p_bar: Option<Vec<Vec<T>>>,
    seed: u64,
}

/// Row-major nested-array form of a matrix, as used by the JSON schemas.
pub fn matrix_to_rows<T: Scalar>(m: &DMatrix<T>) -> Vec<Vec<T>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub(crate) fn rows_to_matrix<T: Scalar>(
    rows: &[Vec<T>],
    nrows: usize,
    ncols: usize,
    what: &str,
) -> Result<DMatrix<T>> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Dimension(format!(
            "{what} must be a {nrows}x{ncols} row-major array"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

impl<T: Scalar> From<Instance<T>> for InstanceFile<T> {
    fn from(inst: Instance<T>) -> Self {
        InstanceFile {
            n: inst.n,
            d: inst.d,
            dmat: matrix_to_rows(&inst.dbar),
            p_bar: inst.p_bar.as_ref().map(matrix_to_rows),
            seed: inst.seed,
        }
    }
}

impl<T: Scalar> TryFrom<InstanceFile<T>> for Instance<T> {
    type Error = Error;

    fn try_from(file: InstanceFile<T>) -> Result<Self> {
        let dbar = rows_to_matrix(&file.dmat, file.n, file.n, "D")?;
        let p_bar = match &file.p_bar {
            Some(rows) => Some(rows_to_matrix(rows, file.n, file.d, "P_bar")?),
            None => None,
        };
        Instance::new(file.n, file.d, dbar, p_bar, file.seed)
    }
}

impl<T: Scalar> Instance<T> {
    /// Builds and validates an instance. Every invariant violation is
    /// reported with the name of the failed invariant.
    pub fn new(
        n: usize,
        d: usize,
        dbar: DMatrix<T>,
        p_bar: Option<DMatrix<T>>,
        seed: u64,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("point count: n must be >= 2, got {n}")));
        }
        if d < 1 {
            return Err(Error::Invalid(format!(
                "embedding dimension: d must be >= 1, got {d}"
            )));
        }
        if dbar.nrows() != n || dbar.ncols() != n {
            return Err(Error::Invalid(format!(
                "shape: D must be {n}x{n}, got {}x{}",
                dbar.nrows(),
                dbar.ncols()
            )));
        }
        if dbar.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("finiteness: D contains NaN or Inf".into()));
        }
        let scale = T::one() + dbar.amax();
        let tol = T::cast(1e-12) * scale;
        for i in 0..n {
            if dbar[(i, i)].abs() > tol {
                return Err(Error::Invalid(format!(
                    "zero diagonal: |D[{i},{i}]| = {:e} exceeds 1e-12 * (1 + max entry)",
                    dbar[(i, i)].to_f64()
                )));
            }
            for j in (i + 1)..n {
                if (dbar[(i, j)] - dbar[(j, i)]).abs() > tol {
                    return Err(Error::Invalid(format!(
                        "symmetry: D[{i},{j}] and D[{j},{i}] differ beyond 1e-12 relative"
                    )));
                }
                if dbar[(i, j)] < T::zero() {
                    return Err(Error::Invalid(format!(
                        "nonnegativity: D[{i},{j}] = {:e} is negative",
                        dbar[(i, j)].to_f64()
                    )));
                }
            }
        }
        if let Some(p) = &p_bar {
            if p.nrows() != n || p.ncols() != d {
                return Err(Error::Invalid(format!(
                    "shape: P_bar must be {n}x{d}, got {}x{}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            if p.iter().any(|x| !x.is_finite()) {
                return Err(Error::Invalid("finiteness: P_bar contains NaN or Inf".into()));
            }
            let diff = (edm::edm_of(p) - &dbar).amax();
            if diff > tol {
                return Err(Error::Invalid(format!(
                    "generator consistency: max |edm(P_bar) - D| = {:e} exceeds 1e-12 relative",
                    diff.to_f64()
                )));
            }
        }
        Ok(Self {
            n,
            d,
            dbar,
            p_bar,
            seed,
        })
    }

    /// Draws `n` standard-normal points in dimension `d`, centers them, and
    /// takes `D̄` as their exact squared-distance matrix. Deterministic per
    /// seed (points are sampled in column-major order from a ChaCha8 stream).
    pub fn generate(n: usize, d: usize, seed: u64) -> Result<Self> {
        Self::generate_anisotropic(n, d, seed, 1.0)
    }

    /// Like [`Instance::generate`] but with coordinate `j` scaled by
    /// `decay^j`, producing flattened point clouds for `decay < 1`. With
    /// `decay = 1` this is exactly the isotropic generator. Local nonglobal
    /// minimizers of the recovery objective are empirically abundant for
    /// strongly anisotropic data and essentially absent for isotropic
    /// clouds in dimension two and up, so this is the family the
    /// higher-dimensional certification demonstrations draw from.
    pub fn generate_anisotropic(n: usize, d: usize, seed: u64, decay: f64) -> Result<Self> {
        if n < 2 || d < 1 {
            return Err(Error::Domain(format!(
                "generation requires n >= 2 and d >= 1, got n={n}, d={d}"
            )));
        }
        if !(decay > 0.0 && decay <= 1.0) {
            return Err(Error::Domain(format!(
                "anisotropy decay must be in (0, 1], got {decay}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut raw = DMatrix::from_fn(n, d, |_, _| T::cast(rng.sample::<f64, _>(StandardNormal)));
        for j in 1..d {
            let scale = T::cast(decay.powi(j as i32));
            for i in 0..n {
                raw[(i, j)] *= scale;
            }
        }
        let p_bar = edm::center(&raw);
        let dbar = edm::edm_of(&p_bar);
        Self::new(n, d, dbar, Some(p_bar), seed)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn dbar(&self) -> &DMatrix<T> {
        &self.dbar
    }

    pub fn p_bar(&self) -> Option<&DMatrix<T>> {
        self.p_bar.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Frobenius norm of the target matrix.
    pub fn dbar_norm(&self) -> T {
        self.dbar.norm()
    }

    /// Root-mean-square pairwise distance of the data,
    /// `sqrt(Σ_{i≠j} D̄_ij / (n(n−1)))`. Used as the natural length scale
    /// for random starts.
    pub fn rms_distance(&self) -> T {
        let n = self.n;
        let sum = self.dbar.iter().fold(T::zero(), |acc, x| acc + *x);
        (sum / T::cast((n * (n - 1)) as f64)).sqrt()
    }

    /// Optional strict validation: the centered Gram matrix
    /// `Ḡ = −½(I − eeᵀ/n) D̄ (I − eeᵀ/n)` must be positive semidefinite up
    /// to `1e-10` relative slack and have numerical rank at most `d`.
    pub fn validate_strict(&self) -> Result<()> {
        let n = self.n;
        let nf = T::cast(n as f64);
        let j = DMatrix::<T>::identity(n, n) - DMatrix::from_element(n, n, T::one() / nf);
        let gram = (&j * &self.dbar * &j).scale(T::cast(-0.5));
        let eig = crate::linalg::sym_eig(&gram);
        let scale = T::one() + eig.spectral_norm();
        let tol = T::cast(1e-10) * scale;
        if eig.lambda_min() < -tol {
            return Err(Error::Invalid(format!(
                "embeddability: centered Gram has eigenvalue {:e} < -1e-10 relative",
                eig.lambda_min().to_f64()
            )));
        }
        let rank = eig.values.iter().filter(|l| **l > tol).count();
        if rank > self.d {
            return Err(Error::Invalid(format!(
                "embeddability: centered Gram has numerical rank {rank} > d = {}",
                self.d
            )));
        }
        Ok(())
    }

    /// Canonical JSON form of the instance.
    pub fn to_json_string(&self) -> Result<String> {
        io::to_json_string(self)
    }

    /// SHA-256 of the canonical JSON form, hex encoded. Ties certificates to
    /// the exact instance they were produced from.
    pub fn content_hash(&self) -> Result<String> {
        let text = self.to_json_string()?;
        Ok(hex::encode(Sha256::digest(text.as_bytes())))
    }

    pub fn save<P: AsRef<std::path::Path>>(&self, path: P) -> Result<()> {
        io::write_json(path, self)
    }

    /// Loads and validates an instance file; `strict` additionally runs the
    /// embeddability check.
    pub fn load<P: AsRef<std::path::Path>>(path: P, strict: bool) -> Result<Self> {
        let inst: Self = io::read_json(path)?;
        if strict {
            inst.validate_strict()?;
        }
        Ok(inst)
    }
}
