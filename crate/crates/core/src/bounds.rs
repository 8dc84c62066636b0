//! Closed-form query-complexity bounds and the Haar-moment / likelihood-ratio
//! quantities they are built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, partial_trace_system, ComplexMatrix, StateVector, C64};

/// Coefficient of s²N/d in g.
pub const G_LINEAR_COEFF: f64 = 606.0;
/// Coefficient of s⁴N²/d² in g.
pub const G_QUADRATIC_COEFF: f64 = 720072.0;

/// Query count below which incoherent certification provably fails, per unit d/s².
pub const INCOHERENT_THRESHOLD_SCALE: f64 = 1e-8;

/// Largest tensor-power dimension [`haar_moment_operator`] will build.
pub const HAAR_MOMENT_MAX_DIM: usize = 4096;

/// Arc width s = 2 asin(ε/2) for a target diamond distance ε.
pub fn s_of_eps(epsilon: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 2], got {epsilon}")));
    }
    Ok(2.0 * (epsilon / 2.0).asin())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GBound {
    pub value: f64,
    /// False when s ≥ 1, outside the range the bound was derived for.
    pub valid: bool,
}

/// g(s, d, N) = 606 s²N/d + 720072 s⁴N²/d².
pub fn g_bound(s: f64, d: usize, n: f64) -> GBound {
    let r = s * s * n / d as f64;
    GBound { value: G_LINEAR_COEFF * r + G_QUADRATIC_COEFF * r * r, valid: s < 1.0 }
}

/// Free constants of the total-variation bound. α only enters the
/// hypotheses, never the F terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl BoundParams {
    pub fn defaults(d: usize) -> Self {
        Self { alpha: 100.0 * d as f64, beta: 0.1, gamma: 0.0003, eta: 0.3 }
    }

    pub fn validate(&self, s: f64, d: usize) -> Result<()> {
        if !(self.beta > 0.0 && self.gamma > 0.0 && self.eta > 0.0) {
            return Err(Error::InfeasibleParameters(format!(
                "beta, gamma and eta must be positive, got {}, {}, {}",
                self.beta, self.gamma, self.eta
            )));
        }
        let floor = 4.0 * s * s / d as f64;
        if self.beta <= floor {
            return Err(Error::InfeasibleParameters(format!("beta = {} must exceed 4s^2/d = {floor}", self.beta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub s: f64,
    pub d: usize,
    #[serde(rename = "N")]
    pub n: f64,
    pub g: f64,
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    #[serde(rename = "F3")]
    pub f3: f64,
    #[serde(rename = "F4")]
    pub f4: f64,
    pub tvd_upper: f64,
    /// tvd_upper < 1/3, so no incoherent strategy with N queries succeeds.
    pub feasible: bool,
}

/// Upper bound F1 + F2 + F3 + F4 on the total variation distance between
/// the outcome laws under the identity and under a random single-basis rotation.
pub fn tvd_upper(s: f64, d: usize, n: f64, params: &BoundParams) -> Result<BoundReport> {
    params.validate(s, d)?;
    let BoundParams { beta, gamma, eta, .. } = *params;
    let g = g_bound(s, d, n).value;
    let f1 = 0.01 + 20.0 * g / (beta * beta);
    let f2 = 0.01 + g / gamma;
    let f3 = 1.0 - (-(1.0 + 1.0 / beta) * gamma - eta).exp();
    let f4 = (-eta * eta / (4.0 * gamma + 2.0 * beta * eta / 3.0)).exp();
    let tvd = f1 + f2 + f3 + f4;
    Ok(BoundReport { s, d, n, g, f1, f2, f3, f4, tvd_upper: tvd, feasible: tvd < 1.0 / 3.0 })
}

fn check_small_eps_hypotheses(d: usize, epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::HypothesisViolation(format!("need 0 < epsilon < 1/2, got {epsilon}")));
    }
    if !(d as f64 > 50.0 * epsilon * epsilon) {
        return Err(Error::HypothesisViolation(format!("need d > 50 epsilon^2, got d = {d}")));
    }
    Ok(())
}

/// ⌊10⁻⁸ d/s²⌋: incoherent certification needs more queries than this.
pub fn incoherent_threshold(d: usize, epsilon: f64) -> Result<u64> {
    check_small_eps_hypotheses(d, epsilon)?;
    let s = s_of_eps(epsilon)?;
    Ok((INCOHERENT_THRESHOLD_SCALE * d as f64 / (s * s)).floor() as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherentBounds {
    /// min(2, 3sN/√d), a trace-distance bound after N coherent queries.
    pub trace_bound: f64,
    /// ⌊√d/(6s)⌋: below this, the trace bound stays under 1/2.
    pub threshold: u64,
}

pub fn coherent_bounds(s: f64, d: usize, n: f64) -> CoherentBounds {
    let sd = (d as f64).sqrt();
    CoherentBounds {
        trace_bound: (3.0 * s * n / sd).min(2.0),
        threshold: if s > 0.0 { (sd / (6.0 * s)).floor() as u64 } else { u64::MAX },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AverageCaseConstants {
    /// e^{−(d−2)/18}.
    pub fraction_first: f64,
    /// 2 e^{−d²/(50(d−2))}.
    pub fraction_second: f64,
    pub fraction_bound: f64,
    /// The fraction bound is at least 1 and says nothing.
    pub vacuous: bool,
    /// 217 e²⁴ ln 3 / s², the proven sufficient query count. Practical
    /// counts are many orders of magnitude smaller.
    pub n_required: f64,
}

/// Constants of the average-case guarantee over ε-CUE channels.
pub fn average_case_constants(d: usize, epsilon: f64) -> Result<AverageCaseConstants> {
    if d < 4 {
        return Err(Error::HypothesisViolation(format!("need d >= 4, got {d}")));
    }
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::HypothesisViolation(format!("need 0 < epsilon < 1/2, got {epsilon}")));
    }
    let df = d as f64;
    let fraction_first = (-(df - 2.0) / 18.0).exp();
    let fraction_second = 2.0 * (-df * df / (50.0 * (df - 2.0))).exp();
    let fraction_bound = fraction_first + fraction_second;
    let s = s_of_eps(epsilon)?;
    Ok(AverageCaseConstants {
        fraction_first,
        fraction_second,
        fraction_bound,
        vacuous: fraction_bound >= 1.0,
        n_required: 217.0 * 24f64.exp() * 3f64.ln() / (s * s),
    })
}

/// Bound 8dδ/ε² on Pr_ψ[|⟨ψ|U|ψ⟩| > 1 − δ] for channels at distance ≥ ε, clamped to [0, 1].
pub fn overlap_tail_bound(d: usize, epsilon: f64, delta: f64) -> f64 {
    (8.0 * d as f64 * delta / (epsilon * epsilon)).clamp(0.0, 1.0)
}

/// E(|ψ⟩⟨ψ|)^{⊗n} over Haar ψ: the symmetrizer Σ_σ F_σ divided by d(d+1)⋯(d+n−1).
pub fn haar_moment_operator(d: usize, n: usize) -> Result<ComplexMatrix> {
    if d == 0 || n == 0 || n > 4 {
        return Err(Error::InvalidArgument(format!("need d >= 1 and 1 <= n <= 4, got d={d}, n={n}")));
    }
    let dim = (d as u64).checked_pow(n as u32).filter(|&v| v <= HAAR_MOMENT_MAX_DIM as u64).ok_or_else(|| {
        Error::InvalidArgument(format!("d^n must not exceed {HAAR_MOMENT_MAX_DIM}"))
    })? as usize;
    let norm: f64 = (0..n).map(|k| (d + k) as f64).product();
    let perms = permutations(n);
    let mut m = ComplexMatrix::zeros(dim, dim);
    let mut digits = vec![0usize; n];
    let mut permuted = vec![0usize; n];
    for col in 0..dim {
        let mut rest = col;
        for slot in (0..n).rev() {
            digits[slot] = rest % d;
            rest /= d;
        }
        for p in &perms {
            for (slot, &src) in p.iter().enumerate() {
                permuted[slot] = digits[src];
            }
            let row = permuted.iter().fold(0, |acc, &x| acc * d + x);
            m[(row, col)] += C64::new(1.0 / norm, 0.0);
        }
    }
    Ok(m)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..n {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    // tr(AB) without forming AB
    let n = a.rows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.cols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn checked_denominator(e: &ComplexMatrix, rho: &ComplexMatrix) -> Result<f64> {
    let den = trace_product(e, rho).re;
    let scale = e.frobenius_norm() * rho.frobenius_norm();
    if !(den.abs() > 1e-14 * scale) {
        return Err(Error::UndefinedRatio);
    }
    Ok(den)
}

/// f(E, ρ) = tr(tr_S E · tr_S ρ) / tr(Eρ).
pub fn f_ratio(e: &ComplexMatrix, rho: &ComplexMatrix, d: usize, d_anc: usize) -> Result<f64> {
    let den = checked_denominator(e, rho)?;
    let es = partial_trace_system(e, d, d_anc)?;
    let rs = partial_trace_system(rho, d, d_anc)?;
    Ok(trace_product(&es, &rs).re / den)
}

/// (U_ψ ⊗ I)|v⟩ with U_ψ = I + (e^{is} − 1)|ψ⟩⟨ψ|, for `v` on system ⊗ ancilla.
fn rotate_system(v: &[C64], psi: &[C64], s: f64, d_anc: usize) -> Vec<C64> {
    let c = C64::from_polar(1.0, s) - 1.0;
    let mut out = v.to_vec();
    for k in 0..d_anc {
        let overlap: C64 = psi.iter().enumerate().map(|(i, p)| p.conj() * v[i * d_anc + k]).sum();
        for (i, p) in psi.iter().enumerate() {
            out[i * d_anc + k] += c * overlap * p;
        }
    }
    out
}

/// X = tr(E (U_ψ⊗I) ρ (U_ψ⊗I)†) / tr(Eρ) − 1.
pub fn x_statistic(
    e: &ComplexMatrix,
    rho: &ComplexMatrix,
    psi: &StateVector,
    s: f64,
    d: usize,
    d_anc: usize,
) -> Result<f64> {
    if psi.dim() != d {
        return Err(Error::DimensionMismatch(format!("state of dimension {} for d={d}", psi.dim())));
    }
    partial_trace_system(e, d, d_anc)?;
    partial_trace_system(rho, d, d_anc)?;
    let den = checked_denominator(e, rho)?;
    // (U⊗I) ρ (U⊗I)† built column by column, then transposed sides
    let n = d * d_anc;
    let mut m = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<C64> = (0..n).map(|i| rho[(i, j)]).collect();
        let rotated = rotate_system(&col, psi.amplitudes(), s, d_anc);
        for i in 0..n {
            m[(i, j)] = rotated[i];
        }
    }
    let m = m.adjoint();
    let mut mr = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let col: Vec<C64> = (0..n).map(|i| m[(i, j)]).collect();
        let rotated = rotate_system(&col, psi.amplitudes(), s, d_anc);
        for i in 0..n {
            mr[(i, j)] = rotated[i];
        }
    }
    // mr = U (U ρ)† = U ρ† U† = U ρ U† for Hermitian ρ
    Ok(trace_product(e, &mr).re / den - 1.0)
}

/// [`x_statistic`] for pure E = |e⟩⟨e| and ρ = |r⟩⟨r|: |⟨e|U⊗I|r⟩|² / |⟨e|r⟩|² − 1.
pub fn x_statistic_pure(e: &[C64], r: &[C64], psi: &[C64], s: f64, d_anc: usize) -> Result<f64> {
    if e.len() != r.len() || psi.len() * d_anc != r.len() {
        return Err(Error::DimensionMismatch("pure-state X statistic".into()));
    }
    let den = inner(e, r).norm_sqr();
    if !(den > 1e-28) {
        return Err(Error::UndefinedRatio);
    }
    let ur = rotate_system(r, psi, s, d_anc);
    Ok(inner(e, &ur).norm_sqr() / den - 1.0)
}

/// Lower bound −s²/d on E_ψ X.
pub fn x_mean_lower_bound(s: f64, d: usize) -> f64 {
    -s * s / d as f64
}

/// Upper bound 6s²(f+1)/d² + 72s³(f²+1)/d⁴ on E_ψ X². The s³ form is the
/// weaker of the two published variants whenever s < 1.
pub fn x_second_moment_bound(s: f64, d: usize, f: f64) -> f64 {
    let df = d as f64;
    6.0 * s * s * (f + 1.0) / (df * df) + 72.0 * s.powi(3) * (f * f + 1.0) / df.powi(4)
}
