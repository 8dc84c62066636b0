#![allow(dead_code)]

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

/// Asymptotic 1% critical value of the two-sample KS statistic.
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    let (n, m) = (n as f64, m as f64);
    1.628 * ((n + m) / (n * m)).sqrt()
}

/// Standard error of a binomial proportion.
pub fn binomial_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Interior-angle CDF at d = 3 in closed form. The density is
/// 4(cos h − cos θ)² on [−h, h] with h = s/2.
pub fn d3_cdf(theta: f64, s: f64) -> f64 {
    let h = s / 2.0;
    let antideriv = |t: f64| {
        let c = h.cos();
        t * c * c - 2.0 * c * t.sin() + t / 2.0 + (2.0 * t).sin() / 4.0
    };
    (antideriv(theta) - antideriv(-h)) / (antideriv(h) - antideriv(-h))
}

/// Inverts [`d3_cdf`] by bisection.
pub fn d3_quantile(u: f64, s: f64) -> f64 {
    let (mut lo, mut hi) = (-s / 2.0, s / 2.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if d3_cdf(mid, s) < u {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
