//! Distance to the identity channel and the incoherent certifiers.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensembles::haar_state;
use crate::error::{Error, Result};
use crate::linalg::{eigenangles, shortest_covering_arc, StateVector, UnitaryMatrix};

/// Diamond distance between the channel of `u` and the identity channel.
///
/// Depends only on the shortest arc covering the eigenangles: 2 sin(arc/2),
/// saturating at 2 once the arc reaches π.
pub fn diamond_distance_to_identity(u: &UnitaryMatrix) -> Result<f64> {
    let arc = shortest_covering_arc(&eigenangles(u)?)?;
    Ok(distance_from_arc(arc))
}

pub fn distance_from_arc(arc: f64) -> f64 {
    if arc >= PI {
        2.0
    } else {
        2.0 * (arc / 2.0).sin()
    }
}

/// Probability that one round of random-state testing accepts, (d + |tr U|²)/(d(d+1)).
pub fn per_query_pass_probability(u: &UnitaryMatrix) -> f64 {
    pass_probability_from_trace(u.dim(), u.trace().norm())
}

pub fn pass_probability_from_trace(d: usize, trace_abs: f64) -> f64 {
    let d = d as f64;
    ((d + trace_abs * trace_abs) / (d * (d + 1.0))).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u64,
    pub p_error: f64,
}

/// Probability of wrongly accepting a far channel, as a function of N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCurve {
    pub d: usize,
    pub epsilon: f64,
    pub trace_abs: f64,
    pub pass_prob: f64,
    pub points: Vec<CurvePoint>,
}

pub fn error_curve(u: &UnitaryMatrix, ns: &[u64], epsilon: f64) -> ErrorCurve {
    let trace_abs = u.trace().norm();
    let pass_prob = pass_probability_from_trace(u.dim(), trace_abs);
    let points = ns.iter().map(|&n| CurvePoint { n, p_error: pow_u64(pass_prob, n) }).collect();
    ErrorCurve { d: u.dim(), epsilon, trace_abs, pass_prob, points }
}

/// `p^n` for a possibly huge integer exponent.
pub fn pow_u64(p: f64, n: u64) -> f64 {
    if n <= i32::MAX as u64 {
        p.powi(n as i32)
    } else {
        p.powf(n as f64)
    }
}

/// Smallest N with p^N ≤ target.
pub fn queries_to_target(u: &UnitaryMatrix, target: f64) -> Result<u64> {
    queries_for_pass_probability(per_query_pass_probability(u), target)
}

pub fn queries_for_pass_probability(p: f64, target: f64) -> Result<u64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::InvalidArgument(format!("target must lie in (0, 1), got {target}")));
    }
    if !(p < 1.0) {
        return Err(Error::Unreachable);
    }
    if p <= 0.0 {
        return Ok(1);
    }
    let mut n = (target.ln() / p.ln()).ceil().max(1.0) as u64;
    // guard against the ceiling landing one off after rounding
    while n > 1 && pow_u64(p, n - 1) <= target {
        n -= 1;
    }
    while pow_u64(p, n) > target {
        n += 1;
    }
    Ok(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "H0_identity")]
    Identity,
    #[serde(rename = "H1_far")]
    Far,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecisionDetail {
    /// 1-based round of the first rejecting outcome.
    FirstRejection(u64),
    /// Final test statistic.
    Statistic(f64),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub queries_used: u64,
    pub detail: DecisionDetail,
}

/// Random-state testing: each round prepares a Haar state, applies U and
/// checks it is unchanged, rejecting at the first failure.
pub fn simulate_incoherent<R: Rng + ?Sized>(u: &UnitaryMatrix, n: u64, rng: &mut R) -> Result<Decision> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one query".into()));
    }
    for k in 1..=n {
        let psi = haar_state(u.dim(), rng)?;
        let pass = u.expectation(&psi).norm_sqr();
        if rng.random::<f64>() >= pass {
            return Ok(Decision { verdict: Verdict::Far, queries_used: k, detail: DecisionDetail::FirstRejection(k) });
        }
    }
    Ok(Decision { verdict: Verdict::Identity, queries_used: n, detail: DecisionDetail::None })
}

/// Acceptance threshold on the estimate of Re⟨ψ|U|ψ⟩: halfway between 1 and cos s.
pub fn hadamard_threshold(epsilon: f64) -> f64 {
    let c = (2.0 * (epsilon / 2.0).asin()).cos();
    c + (1.0 - c) / 2.0
}

/// Known-basis certifier: N Hadamard tests estimate Re⟨ψ|U|ψ⟩, accepted
/// when the estimate clears [`hadamard_threshold`].
pub fn hadamard_test_certify<R: Rng + ?Sized>(
    u: &UnitaryMatrix,
    psi: &StateVector,
    n: u64,
    epsilon: f64,
    rng: &mut R,
) -> Result<Decision> {
    if psi.dim() != u.dim() {
        return Err(Error::DimensionMismatch(format!("state of dimension {} for d={}", psi.dim(), u.dim())));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one query".into()));
    }
    let p0 = ((1.0 + u.expectation(psi).re) / 2.0).clamp(0.0, 1.0);
    let zeros = (0..n).filter(|_| rng.random::<f64>() < p0).count() as f64;
    let estimate = 2.0 * zeros / n as f64 - 1.0;
    let verdict = if estimate > hadamard_threshold(epsilon) { Verdict::Identity } else { Verdict::Far };
    Ok(Decision { verdict, queries_used: n, detail: DecisionDetail::Statistic(estimate) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{haar_unitary, single_basis_rotation, PerturbationParams};
    use crate::linalg::ComplexMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn distance_examples() {
        assert_eq!(diamond_distance_to_identity(&UnitaryMatrix::identity(3)).unwrap(), 0.0);
        let flip = UnitaryMatrix::from_phases(&[0.0, PI]);
        assert!((diamond_distance_to_identity(&flip).unwrap() - 2.0).abs() < 1e-12);
        let wide = UnitaryMatrix::from_phases(&[0.0, 2.0, -2.0]);
        assert_eq!(diamond_distance_to_identity(&wide).unwrap(), 2.0);
        let quarter = UnitaryMatrix::from_phases(&[0.0, PI / 2.0]);
        assert!((diamond_distance_to_identity(&quarter).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pass_probability_examples() {
        assert_eq!(per_query_pass_probability(&UnitaryMatrix::identity(5)), 1.0);
        let u = UnitaryMatrix::from_phases(&[0.0, PI / 3.0]);
        assert!((per_query_pass_probability(&u) - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn curve_examples() {
        let c = error_curve(&UnitaryMatrix::identity(4), &[1, 10, 1000], 0.1);
        assert!(c.points.iter().all(|p| p.p_error == 1.0));
        let u = UnitaryMatrix::from_phases(&[0.0, PI / 3.0]);
        let c = error_curve(&u, &[4], 1.0);
        assert!((c.points[0].p_error - 625.0 / 1296.0).abs() < 1e-15);
        assert_eq!(c.d, 2);
    }

    #[test]
    fn queries_examples() {
        assert_eq!(queries_for_pass_probability(0.5, 1.0 / 3.0).unwrap(), 2);
        assert_eq!(queries_for_pass_probability(5.0 / 6.0, 1.0 / 3.0).unwrap(), 7);
        assert!(matches!(queries_to_target(&UnitaryMatrix::identity(3), 1.0 / 3.0), Err(Error::Unreachable)));
        assert!(queries_for_pass_probability(0.5, 1.5).is_err());
        assert_eq!(queries_for_pass_probability(0.0, 0.5).unwrap(), 1);
    }

    #[test]
    fn identity_is_never_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let id = UnitaryMatrix::identity(3);
        for _ in 0..50 {
            let dec = simulate_incoherent(&id, 20, &mut rng).unwrap();
            assert_eq!(dec.verdict, Verdict::Identity);
            assert_eq!(dec.queries_used, 20);
            let psi = haar_state(3, &mut rng).unwrap();
            let dec = hadamard_test_certify(&id, &psi, 10, 0.5, &mut rng).unwrap();
            assert_eq!(dec.verdict, Verdict::Identity);
        }
    }

    #[test]
    fn seeded_decisions_repeat() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = haar_unitary(4, &mut rng);
        let a = simulate_incoherent(&u, 30, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = simulate_incoherent(&u, 30, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn off_basis_state_passes_hadamard_test() {
        let eps = PerturbationParams::new(0.5).unwrap();
        let phi = StateVector::basis(3, 0).unwrap();
        let u = single_basis_rotation(3, &eps, &phi).unwrap();
        let psi = StateVector::basis(3, 2).unwrap();
        assert!((u.expectation(&psi).re - 1.0).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let dec = hadamard_test_certify(&u, &psi, 100, 0.5, &mut rng).unwrap();
        assert_eq!(dec.verdict, Verdict::Identity);
    }

    #[test]
    fn distance_ignores_phase_and_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = UnitaryMatrix::from_phases(&[0.1, -0.2, 0.4]);
        let v = haar_unitary(3, &mut rng);
        let w = u.conjugate_by(&v).scale_phase(1.3);
        let a = diamond_distance_to_identity(&u).unwrap();
        let b = diamond_distance_to_identity(&w).unwrap();
        assert!((a - b).abs() < 1e-8);
        assert!(w.matrix().max_abs_diff(&ComplexMatrix::identity(3)) > 0.1);
    }
}
