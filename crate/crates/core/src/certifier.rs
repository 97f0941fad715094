//! Kantorovich existence certificates for strict local nonglobal
//! minimizers.
//!
//! Given a numerically stationary point `x̃` with positive objective value
//! and positive-definite reduced Hessian, the certifier establishes, in
//! exact formulas evaluated in floating point with conservative slack:
//!
//! 1. a Hessian Lipschitz constant on the ball `B_r(x̃)`,
//!    `γ = 48√2·(S_max + √2·n·r)` with `S_max = max_i Σ_j ‖p̃ᵢ − p̃ⱼ‖`
//!    (see [`gamma_row_bound`]; the diameter-form variant
//!    `48√2·r·(Σ_{i,j}‖p̃ᵢ − p̃ⱼ‖ + 2n√n·r)` bounds Hessian differences
//!    across the ball by a constant rather than Lipschitz-in-distance and
//!    is kept as [`gamma_diameter_formula`] for reference);
//! 2. an eigenvalue floor `λ_min(H(x)) ≥ λ_min(H(x̃)) − γr` on the ball;
//! 3. an objective floor `f > f̄` on the ball of radius
//!    `min{r, (f − f̄)/‖g‖}`;
//! 4. the Kantorovich quantities `β = ‖H⁻¹‖`, `η = ‖H⁻¹g‖`, `γ_R = βγ`,
//!    `α = γ_R·η`: when `α ≤ ½`, Newton's method from `x̃` converges to a
//!    gradient root within `r₀ = (1−√(1−2α))/(βγ)`, unique within
//!    `r₁ = min{r, (1+√(1−2α))/(βγ)}` for `α < ½`.
//!
//! When everything holds, the root is a strict local minimizer with
//! positive objective value: a local nonglobal minimizer exists in the
//! closure of `B_{r₀}(x̃)`. Certificates work with `f_L` for `d = 1` and
//! with `f_ℓ` for `d ≥ 2` (minimizers of `f_L` are rotation orbits for
//! `d ≥ 2`, so their Hessians are singular there and can never satisfy the
//! positive-definiteness hypothesis).

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::edm;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::linalg;
use crate::points::{Formulation, PointFile};
use crate::scalar::Scalar;
use crate::stress::EvalContext;

/// Conservative slacks applied to every certified inequality.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CertifySettings<T: Scalar> {
    /// Multiplicative inflation of the Lipschitz constant (default 1.1).
    pub safety_factor: T,
    /// Additive slack required of the eigenvalue floor (default 1e-9).
    pub eigen_slack: T,
    /// The first `d` rows of `ltriag(ℓ̃)` must keep smallest singular value
    /// at least this multiple of `r₁` (default 10), so linear independence
    /// persists at the certified root.
    pub margin_factor: T,
}

impl<T: Scalar> Default for CertifySettings<T> {
    fn default() -> Self {
        Self {
            safety_factor: T::cast(1.1),
            eigen_slack: T::cast(1e-9),
            margin_factor: T::cast(10.0),
        }
    }
}

/// `48√2·r·(sum + 2n√n·r)` — the diameter-form bound on Hessian
/// differences across `B_r`: for `x, y ∈ B_r(x̃)` it bounds `‖H(x) − H(y)‖`
/// by a constant. It is not Lipschitz in `‖x − y‖` (the bound does not
/// shrink with the separation), so certification uses [`gamma_row_bound`];
/// this form is kept because published computations quote it.
pub fn gamma_diameter_formula<T: Scalar>(pairwise_sum: T, n: usize, r: T) -> T {
    let c = T::cast(48.0 * std::f64::consts::SQRT_2);
    let nf = T::cast(n as f64);
    c * r * (pairwise_sum + T::cast(2.0) * nf * nf.sqrt() * r)
}

/// `48√2·(s_max + √2·n·r)` — a true Hessian Lipschitz constant on `B_r`,
/// with `s_max` the largest row sum of pairwise distances of the reference
/// configuration.
///
/// Derivation sketch: the Hessian-difference quadratic form is bounded by
/// `6 Σᵢⱼ ‖p̂ᵢⱼ−p̌ᵢⱼ‖·‖p̂ᵢⱼ+p̌ᵢⱼ‖·‖Δᵢⱼ‖²` (with `xᵢⱼ = xᵢ−xⱼ`); the first
/// factor is at most `√2·‖x−y‖`, and pairing the remaining two through
/// `‖Δᵢⱼ‖² ≤ 2(‖Δᵢ‖²+‖Δⱼ‖²)` gives `Σᵢⱼ‖p̃ᵢⱼ‖‖Δᵢⱼ‖² ≤ 4·s_max` for unit
/// `Δ`, plus the `√2·n·r` correction for the in-ball drift of the rows.
pub fn gamma_row_bound<T: Scalar>(s_max: T, n: usize, r: T) -> T {
    let c = T::cast(48.0 * std::f64::consts::SQRT_2);
    let nf = T::cast(n as f64);
    c * (s_max + T::cast(std::f64::consts::SQRT_2) * nf * r)
}

/// Sum of `‖p̃ᵢ − p̃ⱼ‖` over all ordered pairs of rows, and the largest
/// per-row sum.
pub fn distance_sums<T: Scalar>(p: &DMatrix<T>) -> (T, T) {
    let n = p.nrows();
    let mut row = vec![T::zero(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = T::zero();
            for k in 0..p.ncols() {
                let diff = p[(i, k)] - p[(j, k)];
                acc += diff * diff;
            }
            let d = acc.sqrt();
            row[i] += d;
            row[j] += d;
        }
    }
    let mut total = T::zero();
    let mut s_max = T::zero();
    for s in row {
        total += s;
        if s > s_max {
            s_max = s;
        }
    }
    (total, s_max)
}

/// Hessian Lipschitz data on `B_r(x̃)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LipschitzBound<T: Scalar> {
    /// The certifying constant: row-sum bound times the safety factor.
    pub gamma: T,
    /// Row-sum bound before safety inflation.
    pub gamma_raw: T,
    /// Largest row sum of pairwise distances of `p̃`.
    pub s_max: T,
    /// Ordered-pair sum of pairwise distances of `p̃`.
    pub pairwise_sum: T,
    /// Diameter-form value, for comparison with published computations.
    pub gamma_diameter: T,
}

/// Lipschitz constant of the reduced Hessian on `B_r(x̃)`, evaluated from
/// the lifted configuration `p̃ = V·L̃` (or `V·ltriag(ℓ̃)`), inflated by the
/// configured safety factor. Valid simultaneously for the Hessians of `f_L`
/// and (via the isometric packing) `f_ℓ`.
pub fn lipschitz_gamma<T: Scalar>(
    x: &DVector<T>,
    ctx: &EvalContext<T>,
    r: T,
    safety_factor: T,
) -> Result<LipschitzBound<T>> {
    if !(r > T::zero()) {
        return Err(Error::Domain("lipschitz radius r must be > 0".into()));
    }
    if ctx.formulation() == Formulation::FullP {
        return Err(Error::Domain(
            "the Lipschitz bound is stated for the reduced formulations L and ell".into(),
        ));
    }
    let p = ctx.configuration(x)?;
    let (pairwise_sum, s_max) = distance_sums(&p);
    let n = ctx.instance().n();
    let gamma_raw = gamma_row_bound(s_max, n, r);
    Ok(LipschitzBound {
        gamma: gamma_raw * safety_factor,
        gamma_raw,
        s_max,
        pairwise_sum,
        gamma_diameter: gamma_diameter_formula(pairwise_sum, n, r),
    })
}

/// Eigenvalue floor `λ_min − γr` valid on the whole ball.
pub fn hessian_floor<T: Scalar>(lambda_min: T, gamma: T, r: T) -> T {
    lambda_min - gamma * r
}

/// Radius on which the objective provably stays above `f̄`:
/// `min{r, (f − f̄)/‖g‖}` (all of `r` when the gradient vanishes).
pub fn objective_floor_radius<T: Scalar>(f: T, f_bar: T, grad_norm: T, r: T) -> Result<T> {
    if !(f_bar > T::zero()) {
        return Err(Error::Domain("objective floor f_bar must be > 0".into()));
    }
    if !(f > f_bar) {
        return Err(Error::Domain(format!(
            "objective floor requires f > f_bar, got f = {:.6e}, f_bar = {:.6e}",
            f.to_f64(),
            f_bar.to_f64()
        )));
    }
    if grad_norm == T::zero() {
        return Ok(r);
    }
    let quotient = (f - f_bar) / grad_norm;
    Ok(if quotient < r { quotient } else { r })
}

/// The Newton-Kantorovich quantities derived from `H`, `g` and `γ`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct KantorovichParams<T: Scalar> {
    /// `‖H⁻¹‖ = 1/λ_min(H)` (spectral norm).
    pub beta: T,
    /// Newton step length `‖H⁻¹g‖`.
    pub eta: T,
    pub gamma_r: T,
    pub alpha: T,
    /// Existence radius; absent when `α > ½`.
    pub r0: Option<T>,
    /// Uniqueness radius before clamping to `r`; absent when `α > ½`.
    pub r1_unclamped: Option<T>,
}

/// Computes `β, η, γ_R, α, r₀, r₁` from a symmetric positive definite
/// Hessian. `r₀` is evaluated as `2η/(1+√(1−2α))`, which is algebraically
/// `(1−√(1−2α))/(βγ)` but avoids cancellation for small `α`.
pub fn kantorovich_params<T: Scalar>(
    h: &DMatrix<T>,
    g: &DVector<T>,
    gamma: T,
) -> Result<KantorovichParams<T>> {
    let eig = linalg::sym_eig(h);
    if !(eig.lambda_min() > T::zero()) {
        return Err(Error::Domain(format!(
            "Kantorovich parameters require a positive definite Hessian; λ_min = {:.6e}",
            eig.lambda_min().to_f64()
        )));
    }
    let beta = T::one() / eig.lambda_min();
    let eta = eig.solve(g).norm();
    Ok(kantorovich_from_scalars(beta, eta, gamma))
}

/// Same arithmetic from already-known `β`, `η`, `γ`.
pub fn kantorovich_from_scalars<T: Scalar>(beta: T, eta: T, gamma: T) -> KantorovichParams<T> {
    let gamma_r = beta * gamma;
    let alpha = gamma_r * eta;
    let half = T::cast(0.5);
    let (r0, r1_unclamped) = if alpha <= half {
        let root = (T::one() - alpha - alpha).sqrt();
        let r0 = T::cast(2.0) * eta / (T::one() + root);
        let r1 = (T::one() + root) / (beta * gamma);
        (Some(r0), Some(r1))
    } else {
        (None, None)
    };
    KantorovichParams {
        beta,
        eta,
        gamma_r,
        alpha,
        r0,
        r1_unclamped,
    }
}

/// Certification verdict; failures carry one reason per violated
/// inequality.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status")]
pub enum Verdict {
    #[serde(rename = "CERTIFIED")]
    Certified,
    #[serde(rename = "FAILED")]
    Failed { reasons: Vec<String> },
}

impl Verdict {
    pub fn is_certified(&self) -> bool {
        matches!(self, Verdict::Certified)
    }
}

/// Everything needed to re-check a certification decision.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Certificate<T: Scalar> {
    /// Version of the tool that produced the certificate.
    pub version: String,
    /// SHA-256 of the canonical instance JSON.
    pub instance_hash: String,
    pub n: usize,
    pub d: usize,
    pub formulation: Formulation,
    pub candidate: PointFile<T>,
    pub r: T,
    pub settings: CertifySettings<T>,
    /// Lipschitz constant actually used (row-sum bound times the safety
    /// factor).
    pub gamma: T,
    pub gamma_raw: T,
    pub s_max: T,
    pub pairwise_sum: T,
    /// Diameter-form value, recorded for comparison only.
    pub gamma_diameter: T,
    pub f: T,
    pub f_bar: T,
    pub grad_norm: T,
    pub lambda_min: T,
    pub lambda_floor: T,
    /// `min{r, (f − f̄)/‖g‖}`; absent when `f ≤ f̄`.
    pub floor_radius: Option<T>,
    pub beta: Option<T>,
    pub eta: Option<T>,
    pub gamma_r: Option<T>,
    pub alpha: Option<T>,
    pub r0: Option<T>,
    /// Uniqueness radius `min{r, r1_unclamped}`, absent when `α ≥ ½`.
    pub r1: Option<T>,
    pub r1_unclamped: Option<T>,
    /// Smallest singular value of the first `d` rows of `ltriag(ℓ̃)`
    /// (`d ≥ 2` only).
    pub sigma_min_first_rows: Option<T>,
    /// Newton error bounds `(2α)^{2k}·η/α` for `k = 1..4` as printed in the
    /// source theorem, and the classical `(2α)^{2^k}·η/α` next to them;
    /// they differ from `k = 3` on and the printed (weaker) form is the one
    /// the consistency tests use.
    pub newton_bound_printed: Vec<T>,
    pub newton_bound_classical: Vec<T>,
    pub verdict: Verdict,
}

struct DecisionInputs<T: Scalar> {
    d: usize,
    lambda_min: T,
    gamma: T,
    f: T,
    f_bar: T,
    grad_norm: T,
    beta_eta: Option<(T, T)>,
    r: T,
    sigma_min_first_rows: Option<T>,
}

struct Decision<T: Scalar> {
    lambda_floor: T,
    floor_radius: Option<T>,
    params: Option<KantorovichParams<T>>,
    r1: Option<T>,
    verdict: Verdict,
}

fn decide<T: Scalar>(inputs: &DecisionInputs<T>, settings: &CertifySettings<T>) -> Decision<T> {
    let mut reasons = Vec::new();
    let half = T::cast(0.5);

    let lambda_floor = hessian_floor(inputs.lambda_min, inputs.gamma, inputs.r);
    if !(lambda_floor > settings.eigen_slack) {
        reasons.push(format!(
            "hessian floor: lambda_min - gamma*r = {:.6e} must exceed {:.1e}",
            lambda_floor.to_f64(),
            settings.eigen_slack.to_f64()
        ));
    }

    let floor_radius = match objective_floor_radius(inputs.f, inputs.f_bar, inputs.grad_norm, inputs.r)
    {
        Ok(radius) => {
            if radius < inputs.r {
                reasons.push(format!(
                    "objective floor: (f - f_bar)/‖g‖ = {:.6e} does not cover the ball radius {:.6e}",
                    radius.to_f64(),
                    inputs.r.to_f64()
                ));
            }
            Some(radius)
        }
        Err(e) => {
            reasons.push(format!("objective floor: {e}"));
            None
        }
    };

    let params = inputs
        .beta_eta
        .map(|(beta, eta)| kantorovich_from_scalars(beta, eta, inputs.gamma));
    let mut r1 = None;
    match &params {
        None => reasons.push("newton step: Hessian must be positive definite".into()),
        Some(p) => {
            if p.alpha > half {
                reasons.push(format!(
                    "kantorovich: alpha = {:.6e} exceeds 1/2",
                    p.alpha.to_f64()
                ));
            }
            if let Some(r0) = p.r0 {
                if r0 > inputs.r {
                    reasons.push(format!(
                        "kantorovich: r0 = {:.6e} exceeds the ball radius {:.6e}",
                        r0.to_f64(),
                        inputs.r.to_f64()
                    ));
                }
            }
            if p.alpha < half {
                if let Some(r1u) = p.r1_unclamped {
                    r1 = Some(if r1u < inputs.r { r1u } else { inputs.r });
                }
            }
            if inputs.d >= 2 {
                // the uniqueness radius bounds how far the certified root
                // can drift; independence must survive that drift
                let drift = r1.or(p.r1_unclamped).unwrap_or(inputs.r);
                match inputs.sigma_min_first_rows {
                    Some(sigma) => {
                        if sigma < settings.margin_factor * drift {
                            reasons.push(format!(
                                "first rows: smallest singular value {:.6e} is below {} × r1 = {:.6e}",
                                sigma.to_f64(),
                                settings.margin_factor.to_f64(),
                                (settings.margin_factor * drift).to_f64()
                            ));
                        }
                    }
                    None => reasons.push("first rows: singular value unavailable".into()),
                }
            }
        }
    }

    let verdict = if reasons.is_empty() {
        Verdict::Certified
    } else {
        Verdict::Failed { reasons }
    };
    Decision {
        lambda_floor,
        floor_radius,
        params,
        r1,
        verdict,
    }
}

fn newton_bounds<T: Scalar>(params: Option<&KantorovichParams<T>>) -> (Vec<T>, Vec<T>) {
    let Some(p) = params else {
        return (Vec::new(), Vec::new());
    };
    if !(p.alpha > T::zero()) {
        return (Vec::new(), Vec::new());
    }
    let two_alpha = p.alpha + p.alpha;
    let lead = p.eta / p.alpha;
    let printed = (1..=4)
        .map(|k| two_alpha.powi(2 * k) * lead)
        .collect();
    let classical = (1..=4u32)
        .map(|k| two_alpha.powi(2i32.pow(k)) * lead)
        .collect();
    (printed, classical)
}

/// Produces a certificate for a candidate point in the formulation required
/// by its dimension: `L` for `d = 1` (or the equivalent packed form) and
/// `ell` for `d ≥ 2`.
pub fn certify_lngm<T: Scalar>(
    x: &DVector<T>,
    ctx: &EvalContext<T>,
    r: T,
    f_bar: Option<T>,
    settings: &CertifySettings<T>,
) -> Result<Certificate<T>> {
    let d = ctx.instance().d();
    match ctx.formulation() {
        Formulation::FullP => {
            return Err(Error::Domain(
                "certification needs a reduced formulation: translations make the \
                 full-configuration Hessian singular"
                    .into(),
            ))
        }
        Formulation::ReducedL if d >= 2 => {
            return Err(Error::Domain(
                "certification in L is impossible for d >= 2: minimizers form rotation \
                 orbits, so the Hessian of f_L is singular at every local minimizer; \
                 use the triangular formulation"
                    .into(),
            ))
        }
        _ => {}
    }
    if !(r > T::zero()) {
        return Err(Error::Domain("certification radius r must be > 0".into()));
    }

    let f = ctx.value(x)?;
    let g = ctx.gradient(x)?;
    let grad_norm = g.norm();
    let h = ctx.hessian_dense(x)?.h;
    let eig = linalg::sym_eig(&h);
    let lambda_min = eig.lambda_min();
    let bound = lipschitz_gamma(x, ctx, r, settings.safety_factor)?;
    let gamma = bound.gamma;
    let f_bar = f_bar.unwrap_or_else(|| f * T::cast(0.5));

    let beta_eta = if lambda_min > T::zero() {
        let beta = T::one() / lambda_min;
        let eta = eig.solve(&g).norm();
        Some((beta, eta))
    } else {
        None
    };

    let sigma_min_first_rows = if d >= 2 {
        let point = ctx.point_from_vec(x)?;
        let l = match &point {
            crate::points::Point::Tri(t) => edm::ltriag(t),
            crate::points::Point::Reduced(l) => l.clone(),
            crate::points::Point::Full(_) => unreachable!("rejected above"),
        };
        let top = l.rows(0, d).into_owned();
        let gram = top.transpose() * &top;
        Some(linalg::sym_eig(&gram).lambda_min().max(T::zero()).sqrt())
    } else {
        None
    };

    let decision = decide(
        &DecisionInputs {
            d,
            lambda_min,
            gamma,
            f,
            f_bar,
            grad_norm,
            beta_eta,
            r,
            sigma_min_first_rows,
        },
        settings,
    );
    let (printed, classical) = newton_bounds(decision.params.as_ref());

    Ok(Certificate {
        version: env!("CARGO_PKG_VERSION").to_string(),
        instance_hash: ctx.instance().content_hash()?,
        n: ctx.instance().n(),
        d,
        formulation: ctx.formulation(),
        candidate: PointFile::from_point(&ctx.point_from_vec(x)?),
        r,
        settings: settings.clone(),
        gamma,
        gamma_raw: bound.gamma_raw,
        s_max: bound.s_max,
        pairwise_sum: bound.pairwise_sum,
        gamma_diameter: bound.gamma_diameter,
        f,
        f_bar,
        grad_norm,
        lambda_min,
        lambda_floor: decision.lambda_floor,
        floor_radius: decision.floor_radius,
        beta: decision.params.as_ref().map(|p| p.beta),
        eta: decision.params.as_ref().map(|p| p.eta),
        gamma_r: decision.params.as_ref().map(|p| p.gamma_r),
        alpha: decision.params.as_ref().map(|p| p.alpha),
        r0: decision.params.as_ref().and_then(|p| p.r0),
        r1: decision.r1,
        r1_unclamped: decision.params.as_ref().and_then(|p| p.r1_unclamped),
        sigma_min_first_rows,
        newton_bound_printed: printed,
        newton_bound_classical: classical,
        verdict: decision.verdict,
    })
}

/// Outcome of re-checking a stored certificate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VerifyOutcome<T: Scalar> {
    pub recomputed: Certificate<T>,
    /// Whether the recomputed verdict matches the stored one.
    pub verdict_reproduced: bool,
}

/// Recomputes every certified inequality from the stored candidate and the
/// instance; the instance must hash to the value recorded in the
/// certificate.
pub fn verify_certificate<T: Scalar>(
    cert: &Certificate<T>,
    instance: &Instance<T>,
) -> Result<VerifyOutcome<T>> {
    let hash = instance.content_hash()?;
    if hash != cert.instance_hash {
        return Err(Error::Invalid(format!(
            "instance hash mismatch: certificate was produced from {}, got {hash}",
            cert.instance_hash
        )));
    }
    let ctx = EvalContext::new(instance.clone(), cert.formulation)?;
    let point = cert
        .candidate
        .clone()
        .into_point(instance.n(), instance.d())?;
    let x = point.to_vec();
    let recomputed = certify_lngm(&x, &ctx, cert.r, Some(cert.f_bar), &cert.settings)?;
    let verdict_reproduced = recomputed.verdict == cert.verdict;
    Ok(VerifyOutcome {
        recomputed,
        verdict_reproduced,
    })
}

/// Uniform sample from the ball of radius `r` around `center`.
fn sample_in_ball<T: Scalar>(
    center: &DVector<T>,
    r: T,
    rng: &mut ChaCha8Rng,
) -> DVector<T> {
    let m = center.len();
    let mut dir = DVector::from_fn(m, |_, _| T::cast(rng.sample::<f64, _>(StandardNormal)));
    let norm = dir.norm();
    if norm > T::zero() {
        dir /= norm;
    }
    let u: f64 = rng.random();
    let radius = r * T::cast(u.powf(1.0 / m as f64));
    center + dir.scale(radius)
}

/// Empirical check that sampled Hessian pairs in `B_r(x̃)` respect the
/// Lipschitz constant. Returns the worst observed ratio
/// `‖H(x)−H(y)‖₂ / (γ‖x−y‖)`; soundness means it stays at or below one.
pub fn lipschitz_soundness<T: Scalar>(
    ctx: &EvalContext<T>,
    x_tilde: &DVector<T>,
    r: T,
    gamma: T,
    pairs: usize,
    seed: u64,
) -> Result<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = T::zero();
    for _ in 0..pairs {
        let x = sample_in_ball(x_tilde, r, &mut rng);
        let y = sample_in_ball(x_tilde, r, &mut rng);
        let sep = (&x - &y).norm();
        if sep == T::zero() {
            continue;
        }
        let hx = ctx.hessian_dense(&x)?.h;
        let hy = ctx.hessian_dense(&y)?.h;
        let diff_norm = linalg::spectral_norm_sym(&(hx - hy));
        let ratio = diff_norm / (gamma * sep);
        if ratio > worst {
            worst = ratio;
        }
    }
    Ok(worst)
}

/// Empirical margins of the certified floors: the minimum of `f − f̄` over
/// samples of the floor ball and the minimum of `λ_min(H) − λ_floor` over
/// samples of `B_r`. Both must come out positive on a sound certificate.
pub fn floor_soundness<T: Scalar>(
    ctx: &EvalContext<T>,
    x_tilde: &DVector<T>,
    r: T,
    floor_radius: T,
    f_bar: T,
    lambda_floor: T,
    samples: usize,
    seed: u64,
) -> Result<(T, T)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_f = T::max_value().unwrap();
    let mut worst_lambda = T::max_value().unwrap();
    for _ in 0..samples {
        let x = sample_in_ball(x_tilde, floor_radius, &mut rng);
        let margin = ctx.value(&x)? - f_bar;
        if margin < worst_f {
            worst_f = margin;
        }
        let y = sample_in_ball(x_tilde, r, &mut rng);
        let lam = linalg::lambda_min(&ctx.hessian_dense(&y)?.h);
        let margin = lam - lambda_floor;
        if margin < worst_lambda {
            worst_lambda = margin;
        }
    }
    Ok((worst_f, worst_lambda))
}
