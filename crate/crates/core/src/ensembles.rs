//! Haar states and unitaries, single-basis rotations, and the ε-CUE /
//! ε-uniform eigenangle ensembles.
//!
//! ε-CUE eigenangles have density ∝ ∏_{k<l} |e^{iθ_k} − e^{iθ_l}|² restricted
//! to configurations with min θ = −s/2 and max θ = s/2. Two endpoint angles
//! are pinned and the d−2 interior angles are sampled; three samplers are
//! available so that each can be checked against another at small d.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    angle_spread, unitary_from_spectrum, ComplexMatrix, EigenangleSet, StateVector, UnitaryMatrix, C64,
};

/// Largest d accepted by the rejection sampler. Acceptance is roughly 1e-4
/// at d = 4 and 1e-8 at d = 5, so anything larger is impractical.
pub const REJECTION_MAX_D: usize = 5;

/// Gelman–Rubin threshold for accepting an MCMC run.
pub const R_HAT_THRESHOLD: f64 = 1.05;

/// Grid size of the d = 3 inverse-CDF table.
pub const EXACT_D3_GRID: usize = 100_000;

const MIN_DIAGNOSTIC_DRAWS: usize = 64;
const MAX_EXTENSIONS: usize = 3;

/// Target diamond distance ε and the matching arc half-angle scale s = 2 asin(ε/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbationParams {
    epsilon: f64,
    s: f64,
}

impl PerturbationParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..2.0).contains(&epsilon) {
            return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 2), got {epsilon}")));
        }
        Ok(Self { epsilon, s: 2.0 * (epsilon / 2.0).asin() })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Width of the eigenangle arc.
    pub fn s(&self) -> f64 {
        self.s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerMethod {
    ExactD3,
    Rejection,
    Mcmc,
}

impl SamplerMethod {
    /// Exact samplers where they are cheap, MCMC otherwise.
    pub fn default_for(d: usize) -> Self {
        match d {
            0..=2 => SamplerMethod::Rejection,
            3 => SamplerMethod::ExactD3,
            4 => SamplerMethod::Rejection,
            _ => SamplerMethod::Mcmc,
        }
    }
}

/// Sampler choice and MCMC tuning. Step counts are single-angle updates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub method: SamplerMethod,
    pub mcmc_burn_in: usize,
    pub mcmc_thinning: usize,
    pub mcmc_step_scale: f64,
    pub chains: usize,
    pub seed: u64,
}

impl SamplerConfig {
    pub fn defaults(d: usize, eps: &PerturbationParams, seed: u64) -> Self {
        Self {
            method: SamplerMethod::default_for(d),
            mcmc_burn_in: 5000 * d,
            mcmc_thinning: 50 * d,
            mcmc_step_scale: eps.s() / 8.0,
            chains: 4,
            seed,
        }
    }

    pub fn with_method(mut self, method: SamplerMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.mcmc_thinning < 1 || self.chains < 1 {
            return Err(Error::InvalidArgument("thinning and chains must be at least 1".into()));
        }
        if !(self.mcmc_step_scale > 0.0) || !self.mcmc_step_scale.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "step scale must be positive, got {}",
                self.mcmc_step_scale
            )));
        }
        Ok(())
    }

    /// Random stream seeded from `seed`.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

/// Haar-random pure state: normalized i.i.d. complex Gaussians.
pub fn haar_state<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<StateVector> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    loop {
        let amps: Vec<C64> = (0..d).map(|_| complex_gaussian(rng)).collect();
        if let Ok(v) = StateVector::normalized(amps) {
            return Ok(v);
        }
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Haar-random unitary from the QR factorization of a complex Ginibre
/// matrix, with R's diagonal phases folded back into Q.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitaryMatrix {
    let g = DMatrix::from_fn(d, d, |_, _| complex_gaussian(rng));
    let (q, r) = g.qr().unpack();
    let q = ComplexMatrix::from_fn(d, d, |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { C64::new(1.0, 0.0) };
        q[(i, j)] * phase
    });
    UnitaryMatrix::new_unchecked(q)
}

/// U_ψ = I + (e^{is} − 1)|ψ⟩⟨ψ|: phase s on ψ, identity on its complement.
pub fn single_basis_rotation(d: usize, eps: &PerturbationParams, psi: &StateVector) -> Result<UnitaryMatrix> {
    if psi.dim() != d {
        return Err(Error::DimensionMismatch(format!("state of dimension {} for d={d}", psi.dim())));
    }
    let c = C64::from_polar(1.0, eps.s()) - 1.0;
    let a = psi.amplitudes();
    let m = ComplexMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        c * a[i] * a[j].conj() + delta
    });
    Ok(UnitaryMatrix::new_unchecked(m))
}

/// Log of the unnormalized ε-CUE density, Σ_{k<l} 2 ln|e^{iθ_k} − e^{iθ_l}|.
/// Coincident angles give −∞.
pub fn log_weight(angles: &[f64], s: f64) -> Result<f64> {
    let h = s / 2.0;
    if let Some(&bad) = angles.iter().find(|&&t| !(t >= -h && t <= h)) {
        return Err(Error::AngleOutOfDomain { angle: bad, half_width: h });
    }
    let mut acc = 0.0;
    for (k, &a) in angles.iter().enumerate() {
        for &b in &angles[k + 1..] {
            // |e^{ia} − e^{ib}| = 2|sin((a−b)/2)|
            acc += 2.0 * (2.0 * ((a - b) / 2.0).sin().abs()).ln();
        }
    }
    Ok(acc)
}

/// One ε-CUE eigenangle sample.
pub fn eps_cue_eigenangles<R: Rng + ?Sized>(
    d: usize,
    eps: &PerturbationParams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<EigenangleSet> {
    Ok(eps_cue_batch(d, eps, cfg, 1, rng)?.pop().expect("batch of one"))
}

/// `count` ε-CUE eigenangle samples.
///
/// The exact samplers draw independently. MCMC runs `cfg.chains` chains once,
/// checks R̂ across them and returns thinned draws interleaved by chain, so a
/// large batch costs one burn-in instead of `count`.
pub fn eps_cue_batch<R: Rng + ?Sized>(
    d: usize,
    eps: &PerturbationParams,
    cfg: &SamplerConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<EigenangleSet>> {
    check_arc_args(d, eps)?;
    cfg.validate()?;
    let s = eps.s();
    let interiors: Vec<Vec<f64>> = if d == 2 {
        vec![Vec::new(); count]
    } else {
        match cfg.method {
            SamplerMethod::ExactD3 => {
                if d != 3 {
                    return Err(Error::InvalidArgument(format!("exact_d3 sampler needs d = 3, got d = {d}")));
                }
                let table = InverseCdfD3::new(s);
                (0..count).map(|_| vec![table.sample(rng)]).collect()
            }
            SamplerMethod::Rejection => {
                if d > REJECTION_MAX_D {
                    return Err(Error::InvalidArgument(format!(
                        "rejection sampler supports d <= {REJECTION_MAX_D}, got d = {d}"
                    )));
                }
                (0..count).map(|_| rejection_interior(d, s, rng)).collect()
            }
            SamplerMethod::Mcmc => mcmc_interiors(d, s, cfg, count, rng)?,
        }
    };
    Ok(interiors.into_iter().map(|inner| place_endpoints(inner, s, rng)).collect())
}

/// ε-CUE unitary V diag(e^{iθ}) V† with an independent Haar basis V.
pub fn eps_cue_unitary<R: Rng + ?Sized>(
    d: usize,
    eps: &PerturbationParams,
    cfg: &SamplerConfig,
    rng: &mut R,
) -> Result<UnitaryMatrix> {
    let angles = eps_cue_eigenangles(d, eps, cfg, rng)?;
    let basis = haar_unitary(d, rng);
    unitary_from_spectrum(&angles, &basis)
}

/// Endpoints pinned at ±s/2, interior angles i.i.d. uniform on [−s/2, s/2].
pub fn eps_uniform_eigenangles<R: Rng + ?Sized>(
    d: usize,
    eps: &PerturbationParams,
    rng: &mut R,
) -> Result<EigenangleSet> {
    check_arc_args(d, eps)?;
    let h = eps.s() / 2.0;
    let inner = (0..d - 2).map(|_| uniform_in(h, rng)).collect();
    Ok(place_endpoints(inner, eps.s(), rng))
}

fn check_arc_args(d: usize, eps: &PerturbationParams) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!("need d >= 2, got {d}")));
    }
    if !(eps.epsilon() > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    Ok(())
}

fn uniform_in<R: Rng + ?Sized>(h: f64, rng: &mut R) -> f64 {
    if h == 0.0 {
        0.0
    } else {
        rng.random_range(-h..=h)
    }
}

/// Inserts −s/2 and s/2 at two distinct uniformly random positions.
fn place_endpoints<R: Rng + ?Sized>(interior: Vec<f64>, s: f64, rng: &mut R) -> EigenangleSet {
    let d = interior.len() + 2;
    let lo = rng.random_range(0..d);
    let mut hi = rng.random_range(0..d - 1);
    if hi >= lo {
        hi += 1;
    }
    let mut rest = interior.into_iter();
    let angles = (0..d)
        .map(|i| {
            if i == lo {
                -s / 2.0
            } else if i == hi {
                s / 2.0
            } else {
                rest.next().expect("interior count")
            }
        })
        .collect();
    EigenangleSet::new(angles).expect("arc lies inside (-pi, pi]")
}

/// Inverse-CDF table for the single interior angle at d = 3.
///
/// The density is ∝ |e^{iθ} − e^{is/2}|² |e^{iθ} − e^{−is/2}|²; it is
/// integrated with the trapezoid rule on a uniform grid and inverted by
/// linear interpolation.
#[derive(Debug, Clone)]
pub struct InverseCdfD3 {
    grid: Vec<f64>,
    cdf: Vec<f64>,
}

impl InverseCdfD3 {
    pub fn new(s: f64) -> Self {
        let h = s / 2.0;
        let n = EXACT_D3_GRID;
        let grid: Vec<f64> = (0..n).map(|i| -h + s * i as f64 / (n - 1) as f64).collect();
        let dens: Vec<f64> = grid
            .iter()
            .map(|&t| {
                let a = 2.0 * ((t - h) / 2.0).sin();
                let b = 2.0 * ((t + h) / 2.0).sin();
                a * a * b * b
            })
            .collect();
        let mut cdf = Vec::with_capacity(n);
        cdf.push(0.0);
        for i in 1..n {
            let prev = cdf[i - 1];
            cdf.push(prev + 0.5 * (dens[i] + dens[i - 1]) * (grid[i] - grid[i - 1]));
        }
        let total = cdf[n - 1];
        for c in &mut cdf {
            *c /= total;
        }
        Self { grid, cdf }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        let k = self.cdf.partition_point(|&c| c < u).clamp(1, self.cdf.len() - 1);
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.0 };
        self.grid[k - 1] + t * (self.grid[k] - self.grid[k - 1])
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random())
    }
}

fn rejection_interior<R: Rng + ?Sized>(d: usize, s: f64, rng: &mut R) -> Vec<f64> {
    let h = s / 2.0;
    // every squared chord is at most (2 sin(s/2))², reached by the endpoints
    let chord_max = (2.0 * h.sin()).powi(2);
    let mut x = vec![0.0; d];
    x[0] = -h;
    x[1] = h;
    loop {
        for xi in &mut x[2..] {
            *xi = uniform_in(h, rng);
        }
        let mut ratio = 1.0;
        for k in 0..d {
            for l in (k + 1)..d {
                ratio *= (2.0 * ((x[k] - x[l]) / 2.0).sin()).powi(2) / chord_max;
            }
        }
        if rng.random::<f64>() < ratio {
            return x[2..].to_vec();
        }
    }
}

/// Metropolis chain over the interior angles with both endpoints held fixed.
struct Chain {
    /// Endpoints first, then the interior angles.
    angles: Vec<f64>,
    half_sin: Vec<f64>,
    half_cos: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Chain {
    fn new(d: usize, h: f64, mut rng: ChaCha8Rng) -> Self {
        let mut angles = vec![-h, h];
        angles.extend((0..d - 2).map(|_| uniform_in(h, &mut rng)));
        let half_sin = angles.iter().map(|t| (t / 2.0).sin()).collect();
        let half_cos = angles.iter().map(|t| (t / 2.0).cos()).collect();
        Self { angles, half_sin, half_cos, rng }
    }

    /// `steps` single-angle updates, sweeping the interior cyclically.
    fn advance(&mut self, steps: usize, h: f64, step_scale: f64) {
        let d = self.angles.len();
        let interior = d - 2;
        for t in 0..steps {
            let j = 2 + t % interior;
            let z: f64 = self.rng.sample(StandardNormal);
            let y = reflect(self.angles[j] + step_scale * z, h);
            let (ys, yc) = (y / 2.0).sin_cos();
            let (xs, xc) = (self.half_sin[j], self.half_cos[j]);
            // ∏_k sin((y−θ_k)/2)² / sin((x−θ_k)/2)², rescaled to stay in range
            let mut ratio = 1.0f64;
            let mut log_acc = 0.0f64;
            for k in 0..d {
                if k == j {
                    continue;
                }
                let (ks, kc) = (self.half_sin[k], self.half_cos[k]);
                let num = ys * kc - yc * ks;
                let den = xs * kc - xc * ks;
                ratio *= (num * num) / (den * den);
                if !(1e-150..=1e150).contains(&ratio) {
                    log_acc += ratio.ln();
                    ratio = 1.0;
                }
            }
            let log_ratio = log_acc + ratio.ln();
            if log_ratio >= 0.0 || self.rng.random::<f64>().ln() < log_ratio {
                self.angles[j] = y;
                self.half_sin[j] = ys;
                self.half_cos[j] = yc;
            }
        }
    }

    fn interior(&self) -> Vec<f64> {
        self.angles[2..].to_vec()
    }
}

/// Folds `x` back into `[−h, h]` by mirror reflection at the walls.
fn reflect(x: f64, h: f64) -> f64 {
    let width = 2.0 * h;
    let mut u = (x + h).rem_euclid(2.0 * width);
    if u > width {
        u = 2.0 * width - u;
    }
    u - h
}

fn mcmc_interiors<R: Rng + ?Sized>(
    d: usize,
    s: f64,
    cfg: &SamplerConfig,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let h = s / 2.0;
    let m = cfg.chains;
    let mut chains: Vec<Chain> = (0..m).map(|_| Chain::new(d, h, ChaCha8Rng::seed_from_u64(rng.random()))).collect();
    let per_chain = count.div_ceil(m);
    let mut target = per_chain.max(MIN_DIAGNOSTIC_DRAWS);

    chains.par_iter_mut().for_each(|c| c.advance(cfg.mcmc_burn_in, h, cfg.mcmc_step_scale));
    let mut draws: Vec<Vec<Vec<f64>>> = vec![Vec::new(); m];
    let mut r_hat = f64::NAN;
    for attempt in 0..=MAX_EXTENSIONS {
        chains.par_iter_mut().zip(draws.par_iter_mut()).for_each(|(c, out)| {
            while out.len() < target {
                c.advance(cfg.mcmc_thinning, h, cfg.mcmc_step_scale);
                out.push(c.interior());
            }
        });
        let stats: Vec<Vec<f64>> = draws
            .iter()
            .map(|chain| chain.iter().map(|x| spread_with_endpoints(x, h)).collect())
            .collect();
        r_hat = gelman_rubin(&stats);
        if r_hat < R_HAT_THRESHOLD {
            break;
        }
        if attempt < MAX_EXTENSIONS {
            target *= 2;
        }
    }
    if !(r_hat < R_HAT_THRESHOLD) {
        return Err(Error::NotConverged { r_hat, threshold: R_HAT_THRESHOLD });
    }

    // the most recent draws of every chain, interleaved
    let mut out = Vec::with_capacity(count);
    for i in 0..per_chain {
        for chain in &draws {
            if out.len() < count {
                out.push(chain[chain.len() - per_chain + i].clone());
            }
        }
    }
    Ok(out)
}

fn spread_with_endpoints(interior: &[f64], h: f64) -> f64 {
    let mut all = Vec::with_capacity(interior.len() + 2);
    all.push(-h);
    all.push(h);
    all.extend_from_slice(interior);
    angle_spread(&all)
}

/// Gelman–Rubin potential scale reduction for scalar draws, one slice per
/// chain. A single chain is split in half. Constant draws give 1.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> f64 {
    let split;
    let chains: &[Vec<f64>] = if chains.len() == 1 {
        let c = &chains[0];
        let half = c.len() / 2;
        split = vec![c[..half].to_vec(), c[c.len() - half..].to_vec()];
        &split
    } else {
        chains
    };
    let m = chains.len() as f64;
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if n < 2 || chains.len() < 2 {
        return f64::NAN;
    }
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| c[..n].iter().sum::<f64>() / nf).collect();
    let grand = means.iter().sum::<f64>() / m;
    let b = nf / (m - 1.0) * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c[..n].iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if w == 0.0 {
        return if b == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (nf - 1.0) / nf * w + b / nf;
    (var_plus / w).sqrt()
}

/// Uniformly random angle in (−π, π].
pub fn uniform_angle<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let t = rng.random_range(-PI..PI);
    if t == -PI {
        PI
    } else {
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::diamond_distance_to_identity;
    use crate::linalg::eigenangles;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn perturbation_params() {
        let p = PerturbationParams::new(1.0).unwrap();
        assert!((p.s() - PI / 3.0).abs() < 1e-12);
        assert!(PerturbationParams::new(2.0).is_err());
        assert!(PerturbationParams::new(-0.1).is_err());
    }

    #[test]
    fn haar_state_d1_has_unit_modulus() {
        let v = haar_state(1, &mut rng(1)).unwrap();
        assert!((v.amplitudes()[0].norm() - 1.0).abs() < 1e-15);
        assert!(haar_state(0, &mut rng(1)).is_err());
    }

    #[test]
    fn haar_unitary_is_unitary() {
        let mut r = rng(2);
        for d in [1, 2, 5, 17] {
            assert!(haar_unitary(d, &mut r).matrix().unitarity_defect() <= 1e-10);
        }
    }

    #[test]
    fn single_basis_rotation_examples() {
        let psi = StateVector::basis(2, 1).unwrap();
        let u = single_basis_rotation(2, &PerturbationParams::new(0.0).unwrap(), &psi).unwrap();
        assert!(u.matrix().max_abs_diff(&ComplexMatrix::identity(2)) < 1e-15);

        let u = single_basis_rotation(2, &PerturbationParams::new(1.0).unwrap(), &psi).unwrap();
        let expect = UnitaryMatrix::from_phases(&[0.0, PI / 3.0]);
        assert!(u.matrix().max_abs_diff(expect.matrix()) < 1e-15);

        let mut r = rng(3);
        let eps = PerturbationParams::new(0.37).unwrap();
        let psi = haar_state(6, &mut r).unwrap();
        let u = single_basis_rotation(6, &eps, &psi).unwrap();
        assert!(u.matrix().unitarity_defect() < 1e-12);
        let angles = eigenangles(&u).unwrap().sorted();
        assert!(angles[..5].iter().all(|t| t.abs() < 1e-10));
        assert!((angles[5] - eps.s()).abs() < 1e-10);
        assert!((diamond_distance_to_identity(&u).unwrap() - 0.37).abs() < 1e-10);

        assert!(single_basis_rotation(3, &eps, &psi).is_err());
    }

    #[test]
    fn log_weight_examples() {
        let s = PI / 3.0;
        assert!(log_weight(&[-s / 2.0, s / 2.0], s).unwrap().abs() < 1e-15);
        assert_eq!(log_weight(&[0.1, 0.1], s).unwrap(), f64::NEG_INFINITY);
        assert!(matches!(log_weight(&[0.0, 1.0], s), Err(Error::AngleOutOfDomain { .. })));

        let mut r = rng(4);
        let x: Vec<f64> = (0..3).map(|_| r.random_range(-s / 2.0..s / 2.0)).collect();
        let direct: f64 = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(k, l)| (C64::from_polar(1.0, x[k]) - C64::from_polar(1.0, x[l])).norm_sqr())
            .product();
        assert!((log_weight(&x, s).unwrap() - direct.ln()).abs() < 1e-10);
        let permuted = [x[2], x[0], x[1]];
        assert_eq!(log_weight(&permuted, s).unwrap().to_bits(), log_weight(&x, s).unwrap().to_bits());
    }

    #[test]
    fn d2_samples_are_the_endpoints() {
        let eps = PerturbationParams::new(0.5).unwrap();
        let cfg = SamplerConfig::defaults(2, &eps, 0);
        let mut r = rng(5);
        for _ in 0..10 {
            let a = eps_cue_eigenangles(2, &eps, &cfg, &mut r).unwrap().sorted();
            assert_eq!(a, vec![-eps.s() / 2.0, eps.s() / 2.0]);
            let b = eps_uniform_eigenangles(2, &eps, &mut r).unwrap().sorted();
            assert_eq!(b, a);
        }
    }

    #[test]
    fn every_method_pins_the_endpoints() {
        let eps = PerturbationParams::new(0.5).unwrap();
        let h = eps.s() / 2.0;
        let mut r = rng(6);
        for (d, method) in [(3, SamplerMethod::ExactD3), (4, SamplerMethod::Rejection), (6, SamplerMethod::Mcmc)] {
            let cfg = SamplerConfig::defaults(d, &eps, 0).with_method(method);
            for a in eps_cue_batch(d, &eps, &cfg, 20, &mut r).unwrap() {
                assert_eq!(a.dim(), d);
                assert_eq!(a.min(), -h);
                assert_eq!(a.max(), h);
            }
        }
    }

    #[test]
    fn sampler_argument_errors() {
        let eps = PerturbationParams::new(0.5).unwrap();
        let mut r = rng(7);
        let cfg = SamplerConfig::defaults(4, &eps, 0).with_method(SamplerMethod::ExactD3);
        assert!(eps_cue_eigenangles(4, &eps, &cfg, &mut r).is_err());
        let cfg = SamplerConfig::defaults(6, &eps, 0).with_method(SamplerMethod::Rejection);
        assert!(eps_cue_eigenangles(6, &eps, &cfg, &mut r).is_err());
        let mut cfg = SamplerConfig::defaults(6, &eps, 0);
        cfg.chains = 0;
        assert!(eps_cue_eigenangles(6, &eps, &cfg, &mut r).is_err());
    }

    #[test]
    fn mcmc_reports_non_convergence() {
        // no burn-in, a tiny step and one draw per thinning step cannot mix
        let eps = PerturbationParams::new(0.5).unwrap();
        let mut cfg = SamplerConfig::defaults(8, &eps, 0);
        cfg.mcmc_burn_in = 0;
        cfg.mcmc_thinning = 1;
        cfg.mcmc_step_scale = 1e-9;
        match eps_cue_eigenangles(8, &eps, &cfg, &mut rng(8)) {
            Err(Error::NotConverged { r_hat, .. }) => assert!(r_hat >= R_HAT_THRESHOLD),
            other => panic!("expected a convergence failure, got {other:?}"),
        }
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let eps = PerturbationParams::new(0.3).unwrap();
        let cfg = SamplerConfig::defaults(5, &eps, 99);
        let a = eps_cue_batch(5, &eps, &cfg, 8, &mut cfg.rng()).unwrap();
        let b = eps_cue_batch(5, &eps, &cfg, 8, &mut cfg.rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reflection_stays_in_range() {
        for x in [-5.0, -0.3, 0.0, 0.29, 0.31, 1.7, 12.0] {
            let y = reflect(x, 0.3);
            assert!((-0.3..=0.3).contains(&y), "{x} -> {y}");
        }
        assert!((reflect(0.35, 0.3) - 0.25).abs() < 1e-15);
        assert!((reflect(-0.35, 0.3) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn gelman_rubin_basics() {
        let same = vec![vec![1.0, 2.0, 3.0, 4.0]; 3];
        assert!((gelman_rubin(&same) - (0.75f64).sqrt()).abs() < 1e-12);
        let apart = vec![vec![0.0, 0.1, 0.0, 0.1], vec![5.0, 5.1, 5.0, 5.1]];
        assert!(gelman_rubin(&apart) > 10.0);
        assert_eq!(gelman_rubin(&[vec![2.0; 10], vec![2.0; 10]]), 1.0);
    }

    #[test]
    fn inverse_cdf_table_endpoints() {
        let t = InverseCdfD3::new(0.5);
        assert!((t.quantile(0.0) + 0.25).abs() < 1e-12);
        assert!((t.quantile(1.0) - 0.25).abs() < 1e-12);
        // the density is even, so the median sits at 0
        assert!(t.quantile(0.5).abs() < 1e-6);
    }
}
