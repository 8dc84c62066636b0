//! Coherent certification by amplitude deamplification.
//!
//! A Haar state ψ is pushed through an alternating sequence of phase
//! rotations about ψ and about Uψ. In span{ψ, Uψ} this acts as single-qubit
//! signal processing with signal x = |⟨ψ|U|ψ⟩|, so the overlap becomes a
//! polynomial in x. We use the rescaled Chebyshev polynomial
//! P(x) = T_n(x/(1−δ)) / T_n(1/(1−δ)), which keeps P(1) = 1 for the identity
//! and crushes every overlap below 1−δ.
//!
//! Two phase conventions appear here:
//! * signal convention, W(x) = [[x, i√(1−x²)], [i√(1−x²), x]], where all-zero phases give T_n;
//!   the solver works here;
//! * reflection convention, R(x) = [[x, √(1−x²)], [√(1−x²), −x]], which is what the
//!   projector-rotation circuit realizes; [`qsp_response`] and the circuits use it.
//!
//! An even-degree ancilla-free sequence always has |response(0)| = 1, so no
//! phase choice makes its magnitude equal |P| when P(0) ≠ ±1. The phases are
//! therefore fitted so that the real part of the response is P, and the real
//! part is extracted exactly by running the sequence with Φ and −Φ under one
//! control qubit ([`real_part_circuit_apply`]). Query count is unchanged.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{Decision, DecisionDetail, Verdict};
use crate::ensembles::haar_state;
use crate::error::{Error, Result};
use crate::linalg::{inner, normalize_angle, StateVector, UnitaryMatrix, C64};

/// Largest degree the phase solver accepts by default.
pub const PHASE_SOLVER_MAX_DEGREE: usize = 120;

/// Required agreement between Re(response) and P on the check grid.
pub const PHASE_RESIDUAL_TOLERANCE: f64 = 1e-8;

const CHECK_GRID_POINTS: usize = 1000;

/// Parameters of one coherent certification run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QsvtPlan {
    pub d: usize,
    pub epsilon: f64,
    /// Width of the window below 1 that P must suppress.
    pub delta: f64,
    /// Ceiling on |P| outside that window.
    pub cap_delta: f64,
    pub degree: usize,
    /// Reflection-convention phases, `degree + 1` of them once solved.
    pub phases: Vec<f64>,
}

impl QsvtPlan {
    pub fn is_solved(&self) -> bool {
        self.phases.len() == self.degree + 1
    }

    /// Solves for the phases in place and returns the achieved grid residual.
    pub fn solve(&mut self) -> Result<f64> {
        let (phases, residual) = solve_plan_phases(self, PHASE_SOLVER_MAX_DEGREE)?;
        self.phases = phases;
        Ok(residual)
    }

    pub fn poly(&self, x: f64) -> f64 {
        rescaled_chebyshev(x, self.delta, self.degree).expect("plan degree is even")
    }
}

/// δ = ε²/(48d), Δ = 1/√6 and degree n = 2⌈ln(2/Δ)/√δ⌉.
pub fn qsvt_params(d: usize, epsilon: f64) -> Result<QsvtPlan> {
    if !(epsilon > 0.0 && epsilon < 2.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 2), got {epsilon}")));
    }
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    let delta = epsilon * epsilon / (48.0 * d as f64);
    let cap_delta = 1.0 / 6f64.sqrt();
    let degree = 2 * ((2.0 / cap_delta).ln() / delta.sqrt()).ceil() as usize;
    Ok(QsvtPlan { d, epsilon, delta, cap_delta, degree, phases: Vec::new() })
}

/// Chebyshev polynomial T_n via its trigonometric forms; valid for any real x.
pub fn chebyshev_t(n: usize, x: f64) -> f64 {
    let nf = n as f64;
    if x.abs() <= 1.0 {
        (nf * x.acos()).cos()
    } else {
        let v = (nf * x.abs().acosh()).cosh();
        if x < 0.0 && n % 2 == 1 {
            -v
        } else {
            v
        }
    }
}

/// P(x) = T_n(x/(1−δ)) / T_n(1/(1−δ)) for even n.
///
/// Both numerator and denominator can overflow for large n, so the ratio is
/// formed from exponentials of the difference.
pub fn rescaled_chebyshev(x: f64, delta: f64, degree: usize) -> Result<f64> {
    if degree % 2 == 1 {
        return Err(Error::InvalidArgument(format!("degree must be even, got {degree}")));
    }
    if !(delta > 0.0 && delta < 0.5) {
        return Err(Error::InvalidArgument(format!("delta must lie in (0, 1/2), got {delta}")));
    }
    let n = degree as f64;
    let b = n * (1.0 / (1.0 - delta)).acosh();
    // even degree: evaluate at |x| so P(−x) = P(x) holds bit for bit
    let y = x.abs() / (1.0 - delta);
    // cosh(a)/cosh(b) = e^{a−b} (1 + e^{−2a}) / (1 + e^{−2b})
    let denom_tail = 1.0 + (-2.0 * b).exp();
    if y.abs() <= 1.0 {
        let num = (n * y.acos()).cos();
        Ok(num * 2.0 * (-b).exp() / denom_tail)
    } else {
        let a = n * y.abs().acosh();
        Ok((a - b).exp() * (1.0 + (-2.0 * a).exp()) / denom_tail)
    }
}

type Mat2 = [[C64; 2]; 2];

const I2: Mat2 = [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(1.0, 0.0)]];

fn mul2(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `m · e^{iφZ}`: scales the columns by e^{±iφ}.
fn mul_zphase(m: &Mat2, phi: f64) -> Mat2 {
    let (p, q) = (C64::from_polar(1.0, phi), C64::from_polar(1.0, -phi));
    [[m[0][0] * p, m[0][1] * q], [m[1][0] * p, m[1][1] * q]]
}

fn signal_w(x: f64) -> Mat2 {
    let c = C64::new(0.0, (1.0 - x * x).max(0.0).sqrt());
    [[C64::new(x, 0.0), c], [c, C64::new(x, 0.0)]]
}

fn signal_r(x: f64) -> Mat2 {
    let c = C64::new((1.0 - x * x).max(0.0).sqrt(), 0.0);
    [[C64::new(x, 0.0), c], [c, C64::new(-x, 0.0)]]
}

fn sequence(phases: &[f64], signal: &Mat2) -> Mat2 {
    let Some((&first, rest)) = phases.split_first() else {
        return I2;
    };
    let mut m = mul_zphase(&I2, first);
    for &phi in rest {
        m = mul_zphase(&mul2(&m, signal), phi);
    }
    m
}

/// Top-left entry of e^{iφ₀Z} ∏_k R(x) e^{iφ_kZ}, the reflection-convention
/// sequence realized by the projector-rotation circuit.
pub fn qsp_response(phases: &[f64], x: f64) -> C64 {
    sequence(phases, &signal_r(x))[0][0]
}

/// Top-left entry of e^{iψ₀Z} ∏_k W(x) e^{iψ_kZ}.
pub fn signal_convention_response(phases: &[f64], x: f64) -> C64 {
    sequence(phases, &signal_w(x))[0][0]
}

/// Converts signal-convention phases to reflection-convention phases with
/// the same top-left entry, using W = −i e^{i3π/4 Z} R e^{−iπ/4 Z}.
pub fn signal_to_reflection_phases(psi: &[f64]) -> Vec<f64> {
    let n = psi.len().saturating_sub(1);
    if n == 0 {
        return psi.to_vec();
    }
    // the global (−i)^n is absorbed into the first phase
    psi.iter()
        .enumerate()
        .map(|(k, &p)| {
            let shifted = if k == 0 {
                p + 3.0 * FRAC_PI_4 - n as f64 * FRAC_PI_2
            } else if k == n {
                p - FRAC_PI_4
            } else {
                p + FRAC_PI_2
            };
            normalize_angle(shifted)
        })
        .collect()
}

/// Response value and its gradient in every phase, via prefix/suffix products.
fn response_and_gradient(phases: &[f64], w: &Mat2) -> (C64, Vec<C64>) {
    let n = phases.len() - 1;
    let factors: Vec<Mat2> = phases
        .iter()
        .enumerate()
        .map(|(k, &p)| if k == 0 { mul_zphase(&I2, p) } else { mul_zphase(w, p) })
        .collect();
    let mut prefix = Vec::with_capacity(n + 2);
    prefix.push(I2);
    for f in &factors {
        let next = mul2(prefix.last().unwrap(), f);
        prefix.push(next);
    }
    let mut suffix = vec![I2; n + 2];
    for k in (0..=n).rev() {
        suffix[k] = mul2(&factors[k], &suffix[k + 1]);
    }
    // ∂/∂ψ_k inserts iZ right after factor k
    let grad = (0..=n)
        .map(|k| {
            let left = prefix[k + 1][0];
            let right = [suffix[k + 1][0][0], suffix[k + 1][1][0]];
            C64::i() * (left[0] * right[0] - left[1] * right[1])
        })
        .collect();
    (prefix[n + 1][0][0], grad)
}

fn symmetric_phases(half: &[f64], n: usize) -> Vec<f64> {
    let mut psi = vec![0.0; n + 1];
    for (k, &h) in half.iter().enumerate() {
        psi[k] = h;
        psi[n - k] = h;
    }
    psi
}

/// Dense grid on which solved phases are checked: Chebyshev nodes plus x = 1.
pub fn check_grid() -> Vec<f64> {
    let m = CHECK_GRID_POINTS;
    let mut g: Vec<f64> = (1..=m).map(|j| ((2 * j - 1) as f64 * std::f64::consts::PI / (2 * m) as f64).cos()).collect();
    g.push(1.0);
    g
}

/// Max |Re response − target| over [`check_grid`], for reflection-convention phases.
pub fn phase_residual(phases: &[f64], target: impl Fn(f64) -> f64) -> f64 {
    check_grid().into_iter().map(|x| (qsp_response(phases, x).re - target(x)).abs()).fold(0.0, f64::max)
}

/// Fits symmetric signal-convention phases so that Re(response) equals an
/// even target polynomial of the given degree, then converts them to the
/// reflection convention. Returns the phases and the check-grid residual.
///
/// Gauss–Newton on n/2+1 Chebyshev nodes in [0, 1], falling back to
/// Levenberg–Marquardt damping when a full step does not help.
pub fn solve_phases(target: impl Fn(f64) -> f64, degree: usize, max_degree: usize) -> Result<(Vec<f64>, f64)> {
    if degree % 2 == 1 {
        return Err(Error::InvalidArgument(format!("degree must be even, got {degree}")));
    }
    if degree > max_degree {
        return Err(Error::InvalidArgument(format!("degree {degree} exceeds the solver limit {max_degree}")));
    }
    let n = degree;
    if n == 0 {
        let c = target(1.0);
        if (c.abs() - 1.0).abs() > PHASE_RESIDUAL_TOLERANCE {
            return Err(Error::PhaseSolver { residual: (c.abs() - 1.0).abs() });
        }
        let phases = vec![if c > 0.0 { 0.0 } else { std::f64::consts::PI }];
        let residual = phase_residual(&phases, &target);
        return Ok((phases, residual));
    }

    let m = n / 2 + 1;
    let nodes: Vec<f64> =
        (1..=m).map(|j| ((2 * j - 1) as f64 * std::f64::consts::PI / (4 * m) as f64).cos()).collect();
    let goal: Vec<f64> = nodes.iter().map(|&x| target(x)).collect();
    let signals: Vec<Mat2> = nodes.iter().map(|&x| signal_w(x)).collect();

    let evaluate = |half: &[f64]| -> (DVector<f64>, DMatrix<f64>) {
        let psi = symmetric_phases(half, n);
        let mut r = DVector::zeros(m);
        let mut jac = DMatrix::zeros(m, m);
        for (row, w) in signals.iter().enumerate() {
            let (v, g) = response_and_gradient(&psi, w);
            r[row] = v.re - goal[row];
            for k in 0..m {
                let gk = if k == n - k { g[k] } else { g[k] + g[n - k] };
                jac[(row, k)] = gk.re;
            }
        }
        (r, jac)
    };

    let mut half = vec![0.0; m];
    half[0] = FRAC_PI_4;
    let (mut r, mut jac) = evaluate(&half);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-6;
    for _ in 0..200 {
        if r.amax() < 1e-14 {
            break;
        }
        let mut improved = false;
        // plain Gauss–Newton first, then increasingly damped steps
        for attempt in 0..12 {
            let step = if attempt == 0 {
                jac.clone().svd(true, true).solve(&(-&r), 1e-15).ok()
            } else {
                let jt = jac.transpose();
                let mut a = &jt * &jac;
                for i in 0..m {
                    a[(i, i)] += lambda * (a[(i, i)] + 1e-12);
                }
                let rhs = -(&jt * &r);
                let step = a.lu().solve(&rhs);
                lambda *= 10.0;
                step
            };
            let Some(step) = step else { continue };
            let trial: Vec<f64> = half.iter().zip(step.iter()).map(|(h, s)| h + s).collect();
            let (r2, j2) = evaluate(&trial);
            let c2 = r2.norm_squared();
            if c2 < cost {
                half = trial;
                r = r2;
                jac = j2;
                cost = c2;
                lambda = (lambda / 100.0).max(1e-12);
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
    }

    let phases = signal_to_reflection_phases(&symmetric_phases(&half, n));
    let residual = phase_residual(&phases, &target);
    if !(residual <= PHASE_RESIDUAL_TOLERANCE) {
        return Err(Error::PhaseSolver { residual });
    }
    Ok((phases, residual))
}

/// Phases for a plan's polynomial, with the achieved residual.
pub fn solve_plan_phases(plan: &QsvtPlan, max_degree: usize) -> Result<(Vec<f64>, f64)> {
    let (delta, n) = (plan.delta, plan.degree);
    rescaled_chebyshev(0.0, delta, n)?;
    solve_phases(|x| rescaled_chebyshev(x, delta, n).expect("checked above"), n, max_degree)
}

/// Reflection-convention phases reproducing the plan's polynomial as Re(response).
pub fn qsp_phases(plan: &QsvtPlan) -> Result<Vec<f64>> {
    Ok(solve_plan_phases(plan, PHASE_SOLVER_MAX_DEGREE)?.0)
}

/// v ↦ e^{iφ(2|a⟩⟨a| − I)} v for a unit vector a, in place.
fn rotate_about(v: &mut [C64], a: &[C64], phi: f64) {
    let overlap = inner(a, v);
    let back = C64::from_polar(1.0, -phi);
    let gain = C64::new(0.0, 2.0 * phi.sin()) * overlap;
    for (vi, ai) in v.iter_mut().zip(a) {
        *vi = *vi * back + gain * ai;
    }
}

fn check_circuit_args(u: &UnitaryMatrix, psi: &StateVector, phases: &[f64], input_dim: usize) -> Result<()> {
    let d = u.dim();
    if psi.dim() != d || input_dim != d {
        return Err(Error::DimensionMismatch(format!(
            "unitary of dimension {d}, reference state {}, input {input_dim}",
            psi.dim()
        )));
    }
    if phases.is_empty() || phases.len() % 2 == 0 {
        return Err(Error::InvalidArgument(format!(
            "need an odd number of phases (even degree), got {}",
            phases.len()
        )));
    }
    Ok(())
}

/// Applies the ancilla-free sequence
/// Π_{φ₀} Π̃_{φ₁} Π_{φ₂} ⋯ Π_{φ_n}, with Π_φ = e^{iφ(2|ψ⟩⟨ψ| − I)} and
/// Π̃_φ = U Π_φ U†, to `input`. The rightmost rotation acts first; each Π̃
/// costs one query to U and one to U†.
pub fn build_vphi_apply(
    u: &UnitaryMatrix,
    psi: &StateVector,
    phases: &[f64],
    input: &StateVector,
) -> Result<StateVector> {
    check_circuit_args(u, psi, phases, input.dim())?;
    let mut v = input.amplitudes().to_vec();
    run_sequence(u, psi.amplitudes(), phases, &mut v, 1.0);
    Ok(StateVector::from_normalized_unchecked(v))
}

fn run_sequence(u: &UnitaryMatrix, psi: &[C64], phases: &[f64], v: &mut Vec<C64>, sign: f64) {
    let udag = u.matrix().adjoint();
    for (k, &phi) in phases.iter().enumerate().rev() {
        if k % 2 == 0 {
            rotate_about(v, psi, sign * phi);
        } else {
            let mut w = udag.apply(v);
            rotate_about(&mut w, psi, sign * phi);
            *v = u.matrix().apply(&w);
        }
    }
}

/// One-control-qubit version of [`build_vphi_apply`] whose ⟨ψ,0|·|ψ,0⟩
/// amplitude is the real part of the ancilla-free one.
///
/// The control is put in |+⟩, the sequence runs with Φ on the |0⟩ branch and
/// −Φ on the |1⟩ branch (a rotation e^{iφ(2Π−I)⊗Z}, so U and U† stay
/// uncontrolled), and the control is rotated back. `input` lives on
/// system ⊗ control with dimension 2d.
pub fn real_part_circuit_apply(
    u: &UnitaryMatrix,
    psi: &StateVector,
    phases: &[f64],
    input: &StateVector,
) -> Result<StateVector> {
    let d = u.dim();
    if input.dim() != 2 * d {
        return Err(Error::DimensionMismatch(format!("input of dimension {} for 2d = {}", input.dim(), 2 * d)));
    }
    check_circuit_args(u, psi, phases, d)?;
    let amps = input.amplitudes();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut plus: Vec<C64> = (0..d).map(|i| (amps[2 * i] + amps[2 * i + 1]) * h).collect();
    let mut minus: Vec<C64> = (0..d).map(|i| (amps[2 * i] - amps[2 * i + 1]) * h).collect();
    run_sequence(u, psi.amplitudes(), phases, &mut plus, 1.0);
    run_sequence(u, psi.amplitudes(), phases, &mut minus, -1.0);
    let mut out = vec![C64::new(0.0, 0.0); 2 * d];
    for i in 0..d {
        out[2 * i] = (plus[i] + minus[i]) * h;
        out[2 * i + 1] = (plus[i] - minus[i]) * h;
    }
    Ok(StateVector::from_normalized_unchecked(out))
}

/// ⟨ψ,0| V |ψ,0⟩ for the controlled circuit: equals P(|⟨ψ|U|ψ⟩|) when the phases are solved.
pub fn circuit_overlap(u: &UnitaryMatrix, psi: &StateVector, phases: &[f64]) -> Result<C64> {
    let zero = StateVector::basis(2, 0)?;
    let start = psi.tensor(&zero);
    let out = real_part_circuit_apply(u, psi, phases, &start)?;
    Ok(start.inner(&out))
}

/// Overlap signal x = |⟨ψ|U†|ψ⟩|.
pub fn signal_of(u: &UnitaryMatrix, psi: &StateVector) -> f64 {
    u.expectation(psi).norm().min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CircuitPath {
    /// Evaluate P at the overlap signal directly.
    Fast,
    /// Simulate the controlled projector-rotation circuit.
    Explicit,
}

/// Probability that the coherent test accepts (outcome 0) for input ψ.
pub fn accept_probability(u: &UnitaryMatrix, psi: &StateVector, plan: &QsvtPlan, path: CircuitPath) -> Result<f64> {
    match path {
        CircuitPath::Fast => {
            let p = rescaled_chebyshev(signal_of(u, psi), plan.delta, plan.degree)?;
            Ok(p * p)
        }
        CircuitPath::Explicit => {
            if !plan.is_solved() {
                return Err(Error::InvalidArgument("explicit circuit path needs solved phases".into()));
            }
            Ok(circuit_overlap(u, psi, &plan.phases)?.norm_sqr())
        }
    }
}

/// Monte Carlo mean of P(|⟨ψ|U†|ψ⟩|)² over Haar ψ with its standard error.
pub fn coherent_error_probability<R: Rng + ?Sized>(
    u: &UnitaryMatrix,
    plan: &QsvtPlan,
    trials: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::InvalidArgument("need at least one trial".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let psi = haar_state(u.dim(), rng)?;
        let v = accept_probability(u, &psi, plan, CircuitPath::Fast)?;
        sum += v;
        sum_sq += v * v;
    }
    let t = trials as f64;
    let mean = sum / t;
    let var = if trials > 1 { ((sum_sq - t * mean * mean) / (t - 1.0)).max(0.0) } else { 0.0 };
    Ok((mean, (var / t).sqrt()))
}

/// One run of the coherent certifier on a fresh Haar state. Uses n/2
/// queries to U and n/2 to U†, reported as n.
pub fn simulate_coherent<R: Rng + ?Sized>(
    u: &UnitaryMatrix,
    plan: &QsvtPlan,
    path: CircuitPath,
    rng: &mut R,
) -> Result<Decision> {
    if u.dim() != plan.d {
        return Err(Error::DimensionMismatch(format!("plan for d={} used with d={}", plan.d, u.dim())));
    }
    let psi = haar_state(u.dim(), rng)?;
    let p0 = accept_probability(u, &psi, plan, path)?;
    let verdict = if rng.random::<f64>() < p0 { Verdict::Identity } else { Verdict::Far };
    Ok(Decision { verdict, queries_used: plan.degree as u64, detail: DecisionDetail::Statistic(p0) })
}
