//! Reference laws, empirical distribution functions and Kolmogorov–Smirnov
//! decisions.
//!
//! The closed forms here are all written through `erf`/`erfc` so that
//! complementary probabilities stay accurate in both tails:
//!
//! * fragmentation time `τ = 4Z²/θ²`: `P(τ ≤ t) = erf(|θ|√t / (2√2))`
//! * first passage of BM to level `a`: `P(T_a ≤ t) = erfc(a / √(2t))`
//! * if-branch of the germ transform: `P(U ≤ e^{θB(T) − θ²T/2}) = erfc(θ√T / (2√2))`

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Φ(x), the standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Φ⁻¹(p). Rational starting point (Acklam) polished by one Halley step
/// against [`std_normal_cdf`]; `p > 0.5` is mapped through `1 − p`, which is
/// exact, so the result is odd-symmetric to the bit.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    if p > 0.5 {
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

fn lower_quantile(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };

    let e = std_normal_cdf(x) - p;
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// `P(4θ⁻²Z² ≤ t)`, the law of the maximal fragmentation time between
/// drift 0 and drift `θ`.
pub fn frag_cdf(theta: f64, t: f64) -> Result<f64> {
    if theta == 0.0 || !theta.is_finite() {
        return Err(Error::invalid(
            "theta",
            format!("{theta}: the fragmentation law needs a finite non-zero drift"),
        ));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid("t", format!("{t} must be >= 0")));
    }
    if t == f64::INFINITY {
        return Ok(1.0);
    }
    Ok(libm::erf(theta.abs() * t.sqrt() / (2.0 * SQRT_2)))
}

/// `P(T_a ≤ t) = 2(1 − Φ(a/√t))`: first passage of standard BM to level `a`
/// (the Lévy distribution). Level sign is irrelevant; `t ≤ 0` gives 0.
pub fn levy_cdf(a: f64, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t == f64::INFINITY {
        return 1.0;
    }
    libm::erfc(a.abs() / (SQRT_2 * t.sqrt()))
}

/// Probability that the germ transform keeps the input path unchanged,
/// `E[min{e^{θB(T) − θ²T/2}, 1}] = 2(1 − Φ(θ√T/2))`.
pub fn branch_probability(theta: f64, horizon: f64) -> f64 {
    libm::erfc(theta.abs() * horizon.sqrt() / (2.0 * SQRT_2))
}

/// Asymptotic Kolmogorov critical value `√(−½ ln(α/2)) / √n`.
pub fn ks_threshold(n: usize, alpha: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("n", "need at least one sample"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid("alpha", format!("{alpha} not in (0, 1)")));
    }
    Ok((-0.5 * (0.5 * alpha).ln()).sqrt() / (n as f64).sqrt())
}

/// Closed interval the reference CDF is renormalized on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::invalid("support", format!("[{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Empirical CDF. Values above the censoring bound (including `+∞`) are
/// counted but kept out of the sample.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
    censor: Option<f64>,
    n_censored: usize,
}

impl Ecdf {
    pub fn new(samples: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut sorted: Vec<f64> = samples.into_iter().collect();
        if sorted.is_empty() {
            return Err(Error::EmptySample);
        }
        if sorted.iter().any(|x| x.is_nan()) {
            return Err(Error::invalid("samples", "NaN in sample"));
        }
        sorted.sort_by(f64::total_cmp);
        Ok(Self {
            sorted,
            censor: None,
            n_censored: 0,
        })
    }

    /// Keeps samples `≤ bound`; the rest are recorded as censored.
    pub fn with_censoring(samples: impl IntoIterator<Item = f64>, bound: f64) -> Result<Self> {
        let mut kept = Vec::new();
        let mut n_censored = 0;
        for x in samples {
            if x.is_nan() {
                return Err(Error::invalid("samples", "NaN in sample"));
            }
            if x <= bound {
                kept.push(x);
            } else {
                n_censored += 1;
            }
        }
        if kept.is_empty() {
            return Err(Error::EmptySample);
        }
        kept.sort_by(f64::total_cmp);
        Ok(Self {
            sorted: kept,
            censor: Some(bound),
            n_censored,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn n_censored(&self) -> usize {
        self.n_censored
    }

    pub fn censor_bound(&self) -> Option<f64> {
        self.censor
    }

    pub fn samples(&self) -> &[f64] {
        &self.sorted
    }

    /// Right-continuous `#{x_i ≤ x} / n` over the uncensored sample.
    pub fn eval(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&v| v <= x);
        k as f64 / self.sorted.len() as f64
    }
}

/// Two-sided KS distance between the ECDF and a continuous reference CDF,
/// `sup_x |F_n(x) − G(x)|`, where `G` is `cdf` renormalized on `support`
/// (intersected with the ECDF's censoring bound, if any). Ties are handled by
/// evaluating both one-sided limits at every distinct sample value.
pub fn ks_statistic(samples: &Ecdf, cdf: impl Fn(f64) -> f64, support: Support) -> Result<f64> {
    ks_statistic_binned(samples, cdf, support, |x| (x, x))
}

/// KS distance for samples that are a deterministic rounding of a continuous
/// variable `X` with CDF `cdf`.
///
/// `cell(x)` returns the `(a, b)` such that the observed value is `x` exactly
/// when `a < X ≤ b`; the discretized reference is then `P(obs ≤ x) = G(b)`
/// and `P(obs < x) = G(a)`. With `cell(x) = (x, x)` this is [`ks_statistic`].
/// Use it for grid-detected times, e.g. a time rounded up to a grid of step
/// `h` has `cell(x) = (x − h, x)`.
pub fn ks_statistic_binned(
    samples: &Ecdf,
    cdf: impl Fn(f64) -> f64,
    support: Support,
    cell: impl Fn(f64) -> (f64, f64),
) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::EmptySample);
    }
    let hi = match samples.censor {
        Some(bound) => bound.min(support.hi),
        None => support.hi,
    };
    let f_lo = if support.lo == f64::NEG_INFINITY {
        0.0
    } else {
        cdf(support.lo)
    };
    let f_hi = if hi == f64::INFINITY { 1.0 } else { cdf(hi) };
    let mass = f_hi - f_lo;
    if !(mass > 0.0) {
        return Err(Error::invalid(
            "support",
            format!("reference CDF puts no mass on [{}, {hi}]", support.lo),
        ));
    }
    let reference = |x: f64| {
        if x <= support.lo {
            0.0
        } else if x >= hi {
            1.0
        } else {
            ((cdf(x) - f_lo) / mass).clamp(0.0, 1.0)
        }
    };

    let xs = &samples.sorted;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < xs.len() {
        let x = xs[i];
        if !(support.lo <= x && x <= hi) {
            return Err(Error::invalid(
                "samples",
                format!("sample {x} outside support [{}, {hi}]", support.lo),
            ));
        }
        let mut j = i;
        while j < xs.len() && xs[j] == x {
            j += 1;
        }
        let (a, b) = cell(x);
        let below = i as f64 / n;
        let at = j as f64 / n;
        d = d.max((at - reference(b)).abs()).max((below - reference(a)).abs());
        i = j;
    }
    Ok(d)
}

/// Outcome of one statistical check: `pass ⇔ statistic ≤ threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofReport {
    #[serde(rename = "test")]
    pub test_name: String,
    pub n: usize,
    pub statistic: f64,
    pub threshold: f64,
    pub alpha: f64,
    pub pass: bool,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl GofReport {
    pub fn new(test_name: impl Into<String>, n: usize, statistic: f64, threshold: f64, alpha: f64) -> Self {
        Self {
            test_name: test_name.into(),
            n,
            statistic,
            threshold,
            alpha,
            pass: statistic <= threshold,
            meta: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }
}

/// `|k/n − p|` against `z·√(p(1−p)/n)`.
pub fn binomial_report(test_name: &str, successes: usize, n: usize, p: f64, z: f64) -> GofReport {
    let phat = successes as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    let alpha = libm::erfc(z / SQRT_2);
    GofReport::new(test_name, n, (phat - p).abs(), z * sigma, alpha)
        .with_meta("observed", phat)
        .with_meta("expected", p)
}

/// Sample mean and unbiased variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    /// Maclaurin series of erf, summed until terms vanish. Independent of libm.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x * x / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    }

    fn phi_oracle(x: f64) -> f64 {
        0.5 * (1.0 + erf_series(x / SQRT_2))
    }

    #[test]
    fn phi_against_series_oracle() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(1.0) - 0.8413447461).abs() < 1e-9);
        for k in -40..=40 {
            let x = k as f64 * 0.1;
            assert!(
                (std_normal_cdf(x) - phi_oracle(x)).abs() < 1e-10,
                "x = {x}: {} vs {}",
                std_normal_cdf(x),
                phi_oracle(x)
            );
            assert!((std_normal_cdf(x) + std_normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            let x = std_normal_quantile(p);
            assert!((std_normal_cdf(x) - p).abs() < 1e-14, "p = {p}");
        }
        for &p in &[1e-300, 1e-100, 1e-20, 1e-10, 1e-5] {
            let x = std_normal_quantile(p);
            assert!(((std_normal_cdf(x) - p) / p).abs() < 1e-12, "p = {p}");
        }
        assert_eq!(std_normal_quantile(0.5), 0.0);
        assert_eq!(std_normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(std_normal_quantile(1.0), f64::INFINITY);
        assert!(std_normal_quantile(1.5).is_nan());
        assert_eq!(std_normal_quantile(0.25), -std_normal_quantile(0.75));
        assert!((std_normal_quantile(0.75) - 0.6744897501960817).abs() < 1e-14);
    }

    #[test]
    fn frag_cdf_values() {
        let expected = 2.0 * phi_oracle(1.0) - 1.0;
        let got = frag_cdf(2.0, 1.0).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 0.6826894921).abs() < 1e-9);
        assert_eq!(frag_cdf(3.0, 0.0).unwrap(), 0.0);
        assert_eq!(frag_cdf(3.0, f64::INFINITY).unwrap(), 1.0);
        assert!((frag_cdf(0.5, 1e6).unwrap() - 1.0).abs() < 1e-15);
        assert!(frag_cdf(0.0, 1.0).is_err());
        assert!(frag_cdf(1.0, -1.0).is_err());
        assert_eq!(frag_cdf(-2.0, 1.0).unwrap(), got);
    }

    #[test]
    fn levy_cdf_values() {
        let expected = 2.0 * (1.0 - phi_oracle(1.0));
        assert!((levy_cdf(1.0, 1.0) - expected).abs() < 1e-12);
        assert!((levy_cdf(1.0, 1.0) - 0.3173105079).abs() < 1e-9);
        assert_eq!(levy_cdf(1.0, f64::INFINITY), 1.0);
        assert!((levy_cdf(1.0, 1e12) - 1.0).abs() < 1e-5);
        assert_eq!(levy_cdf(1.0, 0.0), 0.0);
    }

    #[test]
    fn branch_probability_values() {
        assert_eq!(branch_probability(0.0, 3.0), 1.0);
        let expected = 2.0 * (1.0 - phi_oracle(0.5));
        assert!((branch_probability(1.0, 1.0) - expected).abs() < 1e-12);
        assert!((branch_probability(1.0, 1.0) - 0.6170750775).abs() < 1e-9);
        assert!(branch_probability(1.0, 1e4) < 1e-100);
    }

    #[test]
    fn closed_form_identities_on_lattice() {
        for i in 1..=20 {
            for j in 1..=20 {
                let theta = 0.25 * i as f64;
                let t = 0.3 * j as f64;
                let frag = frag_cdf(theta, t).unwrap();
                assert!((levy_cdf(theta / 2.0, 1.0 / t) - (1.0 - frag)).abs() < 1e-12);
                assert!((branch_probability(theta, t) - (1.0 - frag)).abs() < 1e-12);
                assert!((0.0..=1.0).contains(&frag));
                let later = frag_cdf(theta, t + 0.1).unwrap();
                assert!(later >= frag);
            }
        }
    }

    #[test]
    fn ks_threshold_values() {
        assert!((ks_threshold(10_000, 0.001).unwrap() - 0.019495).abs() < 1e-6);
        assert!((ks_threshold(100, 0.05).unwrap() - 0.13581).abs() < 1e-5);
        assert!(ks_threshold(1000, 0.01).unwrap() > ks_threshold(2000, 0.01).unwrap());
        assert!(ks_threshold(0, 0.01).is_err());
        assert!(ks_threshold(10, 1.0).is_err());
    }

    #[test]
    fn ks_single_and_degenerate() {
        let e = Ecdf::new([0.0]).unwrap();
        let d = ks_statistic(&e, std_normal_cdf, Support::real_line()).unwrap();
        assert!((d - 0.5).abs() < 1e-15);

        let e = Ecdf::new([1.0, 2.0, 3.0]).unwrap();
        let d = ks_statistic(&e, |_| 0.0, Support::new(0.0, 4.0).unwrap());
        // cdf ≡ 0 has no mass to renormalize on a bounded support.
        assert!(d.is_err());
        let d = ks_statistic(&e, |_| 0.0, Support::real_line()).unwrap();
        assert_eq!(d, 1.0);

        assert!(Ecdf::new(Vec::<f64>::new()).is_err());
    }

    #[test]
    fn ks_on_exact_samples_passes() {
        let mut s = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..10_000).map(|_| s.standard_normal()).collect();
        let e = Ecdf::new(xs).unwrap();
        let d = ks_statistic(&e, std_normal_cdf, Support::real_line()).unwrap();
        assert!(d < 0.0193, "d = {d}");
        let shifted = ks_statistic(&e, |x| std_normal_cdf(x - 0.1), Support::real_line()).unwrap();
        assert!(shifted > 0.03);
    }

    #[test]
    fn ks_censored_renormalizes() {
        // Uniform(0, 2) samples censored at 1 are Uniform(0, 1) on [0, 1].
        let xs: Vec<f64> = (0..2000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let e = Ecdf::with_censoring(xs, 1.0).unwrap();
        assert_eq!(e.len(), 1000);
        assert_eq!(e.n_censored(), 1000);
        let d = ks_statistic(&e, |x| (x / 2.0).clamp(0.0, 1.0), Support::new(0.0, 2.0).unwrap()).unwrap();
        assert!(d <= 0.0005 + 1e-12, "d = {d}");
    }

    #[test]
    fn binned_ks_removes_lattice_gap() {
        // Exponential(1) rounded up to a grid of step 0.1: the continuous KS
        // sees the jump at the first cell, the binned one does not.
        let h = 0.1;
        let n = 100_000;
        let cdf = |x: f64| if x <= 0.0 { 0.0 } else { 1.0 - (-x).exp() };
        let xs: Vec<f64> = (0..n)
            .map(|i| {
                let p = (i as f64 + 0.5) / n as f64;
                let x = -(1.0 - p).ln();
                (x / h).ceil() * h
            })
            .collect();
        let e = Ecdf::new(xs).unwrap();
        let plain = ks_statistic(&e, cdf, Support::real_line()).unwrap();
        let binned = ks_statistic_binned(&e, cdf, Support::real_line(), |x| (x - h, x)).unwrap();
        assert!(plain > 0.09, "plain = {plain}");
        assert!(binned < 1e-3, "binned = {binned}");
    }

    #[test]
    fn ecdf_is_right_continuous() {
        let e = Ecdf::new([3.0, 1.0, 2.0, 2.0]).unwrap();
        assert_eq!(e.samples(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(e.eval(0.5), 0.0);
        assert_eq!(e.eval(2.0), 0.75);
        assert_eq!(e.eval(3.0), 1.0);
    }

    #[test]
    fn report_pass_matches_threshold() {
        assert!(GofReport::new("a", 10, 0.1, 0.1, 0.001).pass);
        assert!(!GofReport::new("a", 10, 0.2, 0.1, 0.001).pass);
        assert!(!GofReport::new("a", 10, f64::NAN, 0.1, 0.001).pass);
        let r = GofReport::new("ks", 5, 0.01, 0.02, 0.001).with_meta("theta", 2.0);
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["test"], "ks");
        assert_eq!(v["meta"]["theta"], 2.0);
        assert_eq!(v["pass"], true);
    }

    #[test]
    fn binomial_report_bounds() {
        let r = binomial_report("b", 617, 1000, 0.6170750775, 3.0);
        assert!(r.pass);
        let r = binomial_report("b", 700, 1000, 0.6170750775, 3.0);
        assert!(!r.pass);
    }
}
