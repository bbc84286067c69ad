//! Statistical verification suite behind `germ verify`.
//!
//! Each check turns a simulated quantity into a [`GofReport`]; `pass` is
//! always `statistic ≤ threshold`. Sample sizes and thresholds are fixed
//! constants below. Every check draws from its own seed, derived from the
//! run seed and the check number, with one substream per path.

use std::f64::consts::SQRT_2;

use crate::cli::{run_jobs, sample_pair, sample_stem, sample_stem_and_uniform};
use crate::coupling::{
    first_meeting, keeps_stem, last_visit, time_invert, IrregularPath, MeetingTime, TransformHook, Trajectory,
};
use crate::error::{Error, Result};
use crate::paths::{line_value, sample_bm, DriftedLaw, TimeGrid};
use crate::rng::{substream, RngStream};
use crate::stats::{
    binomial_report, branch_probability, frag_cdf, ks_statistic, ks_statistic_binned, ks_threshold, levy_cdf,
    mean_variance, std_normal_cdf, Ecdf, GofReport, Support,
};
use crate::subordinator::{agree_within, frag_process, frag_process_dual, sample_stable_half_passage, DriftGrid};

pub const FRAG_THETA: f64 = 2.0;
pub const FRAG_HORIZON: f64 = 10.0;
pub const FRAG_STEPS: usize = 10_000;
pub const FRAG_PATHS: usize = 20_000;
/// KS critical value at α = 0.001 for n ≈ 2·10⁴ (0.0138) plus 0.006 for
/// crossings missed between grid points.
pub const FRAG_KS_THRESHOLD: f64 = 0.02;
/// Binomial σ multiple for censoring and branch frequencies.
pub const SIGMA_MULTIPLE: f64 = 3.0;

pub const BRANCH_THETA: f64 = 1.0;
pub const BRANCH_HORIZON: f64 = 1.0;
pub const BRANCH_PATHS: usize = 100_000;
pub const BRANCH_STEPS: usize = 100;
pub const BRANCH_TOLERANCE: f64 = 0.005;

pub const MARGINAL_THETA: f64 = 2.0;
pub const MARGINAL_HORIZON: f64 = 1.0;
pub const MARGINAL_PATHS: usize = 10_000;
pub const MARGINAL_STEPS: usize = 1000;
pub const MARGINAL_MEAN_TOLERANCE: f64 = 0.03;
pub const MARGINAL_VARIANCE_TOLERANCE: f64 = 0.05;

pub const MONOTONE_THETAS: [f64; 5] = [0.5, 1.0, 2.0, 4.0, 8.0];
pub const MONOTONE_STEMS: usize = 1000;

pub const STABLE_DRAWS: usize = 10_000;
pub const STABLE_KS_THRESHOLD: f64 = 0.0195;
pub const RECIPROCAL_KS_THRESHOLD: f64 = 0.02;

pub const INVOLUTION_PATHS: usize = 1000;
pub const INVOLUTION_STEPS: usize = 1000;
pub const INVOLUTION_MAX_REL_ERROR: f64 = 1e-9;
pub const DUALITY_PAIRS: usize = 1000;
pub const DUALITY_GRID_POINTS: usize = 1000;

pub const INVERSION_LAW_PATHS: usize = 10_000;
pub const INVERSION_LAW_HORIZON: f64 = 2.0;
pub const INVERSION_LAW_STEPS: usize = 200;
pub const INVERSION_LAW_T_MIN: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub alpha: f64,
    pub hook: TransformHook,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            alpha: 0.001,
            hook: TransformHook::None,
        }
    }
}

impl VerifyConfig {
    /// Independent seed for check `criterion`.
    pub fn seed_for(&self, criterion: u64) -> u64 {
        self.seed ^ criterion.wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

fn tag(report: GofReport, criterion: u32, seed: u64) -> GofReport {
    report.with_meta("criterion", criterion).with_meta("seed", seed)
}

/// One coupled pair of the fragmentation-law run, reduced to what the
/// checks need.
#[derive(Clone, Debug, PartialEq)]
pub struct PairCheck {
    pub frag_time: MeetingTime,
    pub kept_stem: bool,
    /// Bit-exact agreement strictly before `frag_time`, mirror image across
    /// `ℓ^θ` from `frag_time` on, stem strictly below the line there, and
    /// the interpolated last visit in the cell just before `frag_time`.
    pub germ_ok: bool,
}

/// The coupled sample shared by the fragmentation-law, germ-property and
/// reciprocal-law checks.
#[derive(Clone, Debug)]
pub struct FragRun {
    pub seed: u64,
    pub theta: f64,
    pub grid: TimeGrid,
    pub pairs: Vec<PairCheck>,
}

impl FragRun {
    pub fn simulate(seed: u64, theta: f64, grid: TimeGrid, n_paths: usize, hook: TransformHook) -> Result<Self> {
        let dt = grid.dt();
        let pairs = run_jobs(n_paths, |id| {
            let (stem, u) = sample_stem_and_uniform(seed, id, &grid);
            let kept_stem = keeps_stem(&stem, u, theta);
            let pair = crate::coupling::couple_with_hook(stem, u, theta, hook)?;
            let (stem, branch) = (pair.stem.values(), pair.branch.values());
            let first = match pair.frag_time {
                MeetingTime::At(t) => grid.ceil_index(t),
                _ => grid.n_points(),
            };
            let mut ok = first > 0;
            ok &= (0..first).all(|i| stem[i].to_bits() == branch[i].to_bits());
            for i in first..grid.n_points() {
                let t = grid.time(i);
                let line = line_value(theta, t);
                let mirror = (stem[i] + branch[i] - theta * t).abs()
                    <= 2.0 * f64::EPSILON * (theta * t).abs().max(stem[i].abs());
                ok &= stem[i] < line && branch[i] > line && mirror;
            }
            if let MeetingTime::At(t) = pair.frag_time {
                ok &= match last_visit(&pair.stem, theta) {
                    MeetingTime::At(lv) => lv <= t && t - lv <= dt * (1.0 + 1e-9),
                    _ => false,
                };
            }
            Ok(PairCheck {
                frag_time: pair.frag_time,
                kept_stem,
                germ_ok: ok,
            })
        })?;
        Ok(Self {
            seed,
            theta,
            grid,
            pairs,
        })
    }

    fn uncensored(&self) -> Vec<f64> {
        self.pairs.iter().filter_map(|p| p.frag_time.value()).collect()
    }

    fn meta(&self, report: GofReport) -> GofReport {
        report
            .with_meta("theta", self.theta)
            .with_meta("horizon", self.grid.horizon())
            .with_meta("n_steps", self.grid.n_steps())
    }

    /// KS of the uncensored fragmentation times against `P(4θ⁻²Z² ≤ t)`
    /// renormalized on `[0, T]`. Detected times are the first reflected grid
    /// point, i.e. the last visit rounded up to the grid, so the reference is
    /// discretized the same way.
    pub fn frag_law_ks(&self) -> Result<GofReport> {
        let samples = self.uncensored();
        let dt = self.grid.dt();
        let horizon = self.grid.horizon();
        let statistic = if samples.is_empty() {
            1.0
        } else {
            let ecdf = Ecdf::new(samples.iter().copied())?;
            let theta = self.theta;
            ks_statistic_binned(
                &ecdf,
                |t| frag_cdf(theta, t.max(0.0)).unwrap_or(0.0),
                Support::new(0.0, horizon)?,
                |t| ((t - dt).max(0.0), t),
            )?
        };
        Ok(self.meta(GofReport::new(
            "frag_time_law_ks",
            samples.len(),
            statistic,
            FRAG_KS_THRESHOLD,
            0.001,
        ))
        .with_meta("n_total", self.pairs.len()))
    }

    /// Censored fraction against `1 − P(4θ⁻²Z² ≤ T)`.
    pub fn censored_fraction(&self) -> Result<GofReport> {
        let censored = self.pairs.iter().filter(|p| p.frag_time.is_beyond_horizon()).count();
        let p = 1.0 - frag_cdf(self.theta, self.grid.horizon())?;
        Ok(self.meta(binomial_report(
            "frag_time_censored_fraction",
            censored,
            self.pairs.len(),
            p,
            SIGMA_MULTIPLE,
        )))
    }

    /// Number of pairs violating the germ property, and of non-positive
    /// fragmentation times; both must be 0.
    pub fn germ_property(&self) -> Vec<GofReport> {
        let n = self.pairs.len();
        let broken = self.pairs.iter().filter(|p| !p.germ_ok).count();
        let non_positive = self
            .pairs
            .iter()
            .filter(|p| matches!(p.frag_time, MeetingTime::At(t) if t <= 0.0))
            .count();
        vec![
            self.meta(GofReport::new("germ_property_violations", n, broken as f64, 0.0, 0.0)),
            self.meta(GofReport::new("frag_time_non_positive", n, non_positive as f64, 0.0, 0.0)),
        ]
    }

    /// KS of `1/τ_frag` against the first-passage law of level `θ/2`,
    /// renormalized on `[1/T, ∞)`.
    pub fn reciprocal_law_ks(&self) -> Result<GofReport> {
        let samples: Vec<f64> = self.uncensored().into_iter().map(|t| 1.0 / t).collect();
        let dt = self.grid.dt();
        let level = 0.5 * self.theta;
        let statistic = if samples.is_empty() {
            1.0
        } else {
            let ecdf = Ecdf::new(samples.iter().copied())?;
            // Observed 1/t_i stands for a reciprocal in [1/t_i, 1/t_{i-1}).
            ks_statistic_binned(
                &ecdf,
                |s| levy_cdf(level, s),
                Support::new(1.0 / self.grid.horizon(), f64::INFINITY)?,
                |s| {
                    let prev = 1.0 / s - dt;
                    let upper = if prev > 0.5 * dt { 1.0 / prev } else { f64::INFINITY };
                    (s, upper)
                },
            )?
        };
        Ok(self.meta(GofReport::new(
            "reciprocal_frag_time_levy_ks",
            samples.len(),
            statistic,
            RECIPROCAL_KS_THRESHOLD,
            0.001,
        )))
    }
}

/// Fraction of paths on which the germ transform keeps the stem, against
/// `2(1 − Φ(θ√T/2))`.
pub fn branch_frequency(seed: u64) -> Result<GofReport> {
    let grid = TimeGrid::new(BRANCH_HORIZON, BRANCH_STEPS)?;
    let kept = run_jobs(BRANCH_PATHS, |id| {
        let (stem, u) = sample_stem_and_uniform(seed, id, &grid);
        Ok(keeps_stem(&stem, u, BRANCH_THETA))
    })?;
    let k = kept.iter().filter(|&&b| b).count();
    let p = branch_probability(BRANCH_THETA, BRANCH_HORIZON);
    let freq = k as f64 / BRANCH_PATHS as f64;
    Ok(GofReport::new("branch_probability", BRANCH_PATHS, (freq - p).abs(), BRANCH_TOLERANCE, 0.001)
        .with_meta("observed", freq)
        .with_meta("expected", p)
        .with_meta("theta", BRANCH_THETA)
        .with_meta("horizon", BRANCH_HORIZON))
}

/// Mean, variance and KS of `branch(T)` against `N(θT, T)`.
pub fn output_marginal(seed: u64, alpha: f64, hook: TransformHook) -> Result<Vec<GofReport>> {
    let grid = TimeGrid::new(MARGINAL_HORIZON, MARGINAL_STEPS)?;
    let ends = run_jobs(MARGINAL_PATHS, |id| {
        Ok(sample_pair(seed, id, &grid, MARGINAL_THETA, hook)?.branch.end())
    })?;
    let (mean, var) = mean_variance(&ends);
    let mu = MARGINAL_THETA * MARGINAL_HORIZON;
    let sd = MARGINAL_HORIZON.sqrt();
    let ecdf = Ecdf::new(ends.iter().copied())?;
    let ks = ks_statistic(&ecdf, |x| std_normal_cdf((x - mu) / sd), Support::real_line())?;
    let n = ends.len();
    Ok(vec![
        GofReport::new("branch_end_mean", n, (mean - mu).abs(), MARGINAL_MEAN_TOLERANCE, 0.0027)
            .with_meta("observed", mean),
        GofReport::new("branch_end_variance", n, (var - MARGINAL_HORIZON).abs(), MARGINAL_VARIANCE_TOLERANCE, 0.0027)
            .with_meta("observed", var),
        GofReport::new("branch_end_normal_ks", n, ks, ks_threshold(n, alpha)?, alpha),
    ]
    .into_iter()
    .map(|r| r.with_meta("theta", MARGINAL_THETA).with_meta("horizon", MARGINAL_HORIZON))
    .collect())
}

/// Monotonicity of the fragmentation-time process and agreement of its two
/// computations (direct last visit, first passage of the inverted stem).
pub fn frag_process_checks(seed: u64) -> Result<Vec<GofReport>> {
    let grid = TimeGrid::new(FRAG_HORIZON, FRAG_STEPS)?;
    let drifts = DriftGrid::new(MONOTONE_THETAS.to_vec())?;
    let dt = grid.dt();
    let results = run_jobs(MONOTONE_STEMS, |id| {
        let stem = sample_stem(seed, id, &grid);
        let primal = frag_process(&stem, &drifts);
        let dual = frag_process_dual(&stem, &drifts, None)?;
        let compared = primal
            .times
            .iter()
            .zip(&dual.times)
            .filter(|(a, b)| a.value().is_some() && b.value().is_some())
            .count();
        Ok((primal.is_non_increasing(), agree_within(&primal, &dual, dt), compared))
    })?;
    let non_monotone = results.iter().filter(|r| !r.0).count();
    let disagree = results.iter().filter(|r| !r.1).count();
    let compared: usize = results.iter().map(|r| r.2).sum();
    Ok(vec![
        GofReport::new("frag_process_non_increasing_violations", MONOTONE_STEMS, non_monotone as f64, 0.0, 0.0),
        GofReport::new("frag_process_dual_disagreements", MONOTONE_STEMS, disagree as f64, 0.0, 0.0)
            .with_meta("entries_compared", compared),
    ]
    .into_iter()
    .map(|r| r.with_meta("thetas", MONOTONE_THETAS.to_vec()).with_meta("n_steps", FRAG_STEPS).with_meta("horizon", FRAG_HORIZON))
    .collect())
}

/// KS of the exact ½-stable passage sampler at level 1 against the Lévy CDF.
pub fn stable_sampler_law(seed: u64) -> Result<GofReport> {
    let mut stream = RngStream::new(seed, 0);
    let draws = (0..STABLE_DRAWS)
        .map(|_| sample_stable_half_passage(1.0, &mut stream))
        .collect::<Result<Vec<_>>>()?;
    let ecdf = Ecdf::new(draws)?;
    let d = ks_statistic(&ecdf, |t| levy_cdf(1.0, t), Support::new(0.0, f64::INFINITY)?)?;
    Ok(GofReport::new("stable_half_passage_ks", STABLE_DRAWS, d, STABLE_KS_THRESHOLD, 0.001).with_meta("level", 1.0))
}

/// Largest relative error of `I(I(w)) = w` over standard Brownian paths.
pub fn involution_error(seed: u64) -> Result<GofReport> {
    let grid = TimeGrid::new(1.0, INVOLUTION_STEPS)?;
    let errors = run_jobs(INVOLUTION_PATHS, |id| {
        let w = sample_stem(seed, id, &grid);
        let twice = time_invert(&w, grid.dt())?.inverted()?;
        let offset = w.len() - twice.len();
        let mut worst: f64 = 0.0;
        for (k, &v) in twice.values().iter().enumerate() {
            let orig = w.values()[offset + k];
            let t_err = (twice.time(k) - w.time(offset + k)).abs() / w.time(offset + k);
            let v_err = if orig == 0.0 { v.abs() } else { (v - orig).abs() / orig.abs() };
            worst = worst.max(t_err).max(v_err);
        }
        Ok(worst)
    })?;
    let worst = errors.into_iter().fold(0.0, f64::max);
    Ok(GofReport::new("time_inversion_involution", INVOLUTION_PATHS, worst, INVOLUTION_MAX_REL_ERROR, 0.0))
}

/// A pair of piecewise-linear paths whose last meeting time is known.
#[derive(Clone, Debug)]
pub struct SyntheticPair {
    /// Last meeting time.
    pub last_meeting: f64,
    knots: Vec<(f64, f64)>,
    tail_slope: f64,
    base_slope: f64,
    base_intercept: f64,
}

impl SyntheticPair {
    /// Difference `w1 − w2` alternates sign on knots at `m·k/4` (k = 0..3),
    /// reaches 0 at `m` and crosses it linearly; `w2` is a random line.
    pub fn random(stream: &mut RngStream) -> Self {
        let m = (stream.uniform01() * (100f64).ln() - (10f64).ln()).exp();
        let mut sign = if stream.uniform01() < 0.5 { 1.0 } else { -1.0 };
        let mut knots = Vec::with_capacity(5);
        for k in 0..4 {
            knots.push((m * k as f64 / 4.0, sign * (0.2 + 0.8 * stream.uniform01())));
            sign = -sign;
        }
        knots.push((m, 0.0));
        // `sign` is now opposite to the last nonzero knot, so the tail crosses.
        let tail_slope = sign * (0.5 + 1.5 * stream.uniform01());
        let base_slope = 4.0 * stream.uniform01() - 2.0;
        let base_intercept = 4.0 * stream.uniform01() - 2.0;
        Self {
            last_meeting: m,
            knots,
            tail_slope,
            base_slope,
            base_intercept,
        }
    }

    pub fn difference(&self, t: f64) -> f64 {
        let m = self.last_meeting;
        if t >= m {
            return self.tail_slope * (t - m);
        }
        let k = self.knots.partition_point(|&(tk, _)| tk <= t).clamp(1, self.knots.len() - 1);
        let (t0, v0) = self.knots[k - 1];
        let (t1, v1) = self.knots[k];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }

    pub fn w2(&self, t: f64) -> f64 {
        self.base_slope * t + self.base_intercept
    }

    pub fn w1(&self, t: f64) -> f64 {
        self.w2(t) + self.difference(t)
    }

    /// Both paths inverted analytically, `s·w(1/s)`, on a uniform grid of
    /// `points` values of `s` spanning `[1/(4m), 2/m]`.
    pub fn inverted_pair(&self, points: usize) -> Result<(IrregularPath, IrregularPath, f64)> {
        let m = self.last_meeting;
        let lo = 0.25 / m;
        let hi = 2.0 / m;
        let h = (hi - lo) / (points - 1) as f64;
        let s: Vec<f64> = (0..points).map(|k| lo + k as f64 * h).collect();
        let v1 = s.iter().map(|&s| s * self.w1(1.0 / s)).collect();
        let v2 = s.iter().map(|&s| s * self.w2(1.0 / s)).collect();
        Ok((IrregularPath::new(s.clone(), v1)?, IrregularPath::new(s, v2)?, h))
    }
}

/// First meeting of time-inverted synthetic pairs against the reciprocal of
/// their last meeting time; counts pairs off by more than one grid cell.
pub fn meeting_duality(seed: u64) -> Result<GofReport> {
    let misses = run_jobs(DUALITY_PAIRS, |id| {
        let mut stream = substream(seed, id as u64);
        let pair = SyntheticPair::random(&mut stream);
        let (p1, p2, h) = pair.inverted_pair(DUALITY_GRID_POINTS)?;
        let hit = match first_meeting(&p1, &p2, 0.0)? {
            MeetingTime::At(s) => (s - 1.0 / pair.last_meeting).abs() <= h,
            _ => false,
        };
        Ok(!hit)
    })?;
    let misses = misses.into_iter().filter(|&m| m).count();
    Ok(GofReport::new("inversion_meeting_duality_misses", DUALITY_PAIRS, misses as f64, 0.0, 0.0))
}

/// Time inversion of `BM^θ_δ` has law `BM^δ_θ`: value at `s` is
/// `N(θ + δs, s)`.
pub fn inversion_law(seed: u64, alpha: f64, theta: f64, delta: f64, probe: &[f64]) -> Result<Vec<GofReport>> {
    let grid = TimeGrid::new(INVERSION_LAW_HORIZON, INVERSION_LAW_STEPS)?;
    let law = DriftedLaw::new(theta, delta)?;
    let columns = run_jobs(INVERSION_LAW_PATHS, |id| {
        let mut stream = substream(seed, id as u64);
        let w = sample_bm(&grid, law, &mut stream);
        let inv = time_invert(&w, INVERSION_LAW_T_MIN)?;
        probe
            .iter()
            .map(|&s| {
                let k = inv
                    .times()
                    .iter()
                    .position(|&x| (x - s).abs() <= 1e-12 * s)
                    .ok_or_else(|| Error::invalid("probe", format!("s = {s} is not on the inverted grid")))?;
                Ok(inv.values()[k])
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let threshold = ks_threshold(INVERSION_LAW_PATHS, alpha)?;
    probe
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let ecdf = Ecdf::new(columns.iter().map(|c| c[j]))?;
            let mean = theta + delta * s;
            let sd = s.sqrt();
            let d = ks_statistic(&ecdf, |x| libm::erfc(-(x - mean) / (sd * SQRT_2)) * 0.5, Support::real_line())?;
            Ok(GofReport::new(format!("inversion_law_ks_s{s}"), INVERSION_LAW_PATHS, d, threshold, alpha)
                .with_meta("theta", theta)
                .with_meta("delta", delta)
                .with_meta("s", s)
                .with_meta("mean", mean)
                .with_meta("variance", s))
        })
        .collect()
}

/// Reruns the fragmentation-law check with reflection disabled; the check
/// must fail. Statistic is 1 if the corrupted run still passed.
pub fn negative_control(seed: u64) -> Result<GofReport> {
    let grid = TimeGrid::new(FRAG_HORIZON, FRAG_STEPS)?;
    let run = FragRun::simulate(seed, FRAG_THETA, grid, FRAG_PATHS, TransformHook::SkipReflection)?;
    let ks = run.frag_law_ks()?;
    Ok(GofReport::new("negative_control_skip_reflection", FRAG_PATHS, if ks.pass { 1.0 } else { 0.0 }, 0.0, 0.0)
        .with_meta("corrupted_statistic", ks.statistic)
        .with_meta("corrupted_threshold", ks.threshold))
}

/// Runs every check. With a hook active, the negative control is skipped
/// (the whole run is already corrupted).
pub fn run_all(config: &VerifyConfig) -> Result<Vec<GofReport>> {
    let mut reports = Vec::new();

    let s1 = config.seed_for(1);
    let grid = TimeGrid::new(FRAG_HORIZON, FRAG_STEPS)?;
    let run = FragRun::simulate(s1, FRAG_THETA, grid, FRAG_PATHS, config.hook)?;
    reports.push(tag(run.frag_law_ks()?, 1, s1));
    reports.push(tag(run.censored_fraction()?, 1, s1));

    let s2 = config.seed_for(2);
    reports.push(tag(branch_frequency(s2)?, 2, s2));

    let s3 = config.seed_for(3);
    reports.extend(output_marginal(s3, config.alpha, config.hook)?.into_iter().map(|r| tag(r, 3, s3)));

    reports.extend(run.germ_property().into_iter().map(|r| tag(r, 4, s1)));

    let s5 = config.seed_for(5);
    reports.extend(frag_process_checks(s5)?.into_iter().map(|r| tag(r, 5, s5)));

    let s6 = config.seed_for(6);
    reports.push(tag(stable_sampler_law(s6)?, 6, s6));
    reports.push(tag(run.reciprocal_law_ks()?, 6, s1));

    let s7 = config.seed_for(7);
    reports.push(tag(involution_error(s7)?, 7, s7));
    reports.push(tag(meeting_duality(s7)?, 7, s7));

    let s8 = config.seed_for(8);
    reports.extend(inversion_law(s8, config.alpha, 1.0, 0.0, &[1.0, 0.5])?.into_iter().map(|r| tag(r, 8, s8)));

    if config.hook == TransformHook::None {
        let s10 = config.seed_for(10);
        reports.push(tag(negative_control(s10)?, 10, s10));
    }
    Ok(reports)
}

pub fn all_pass(reports: &[GofReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_pair_has_stated_last_meeting() {
        let mut s = RngStream::new(1, 0);
        for _ in 0..200 {
            let p = SyntheticPair::random(&mut s);
            let m = p.last_meeting;
            assert!(p.difference(m).abs() < 1e-12);
            assert!((0.1..=10.0).contains(&m));
            // Crosses at m, no zero afterwards.
            let before = p.difference(0.99 * m);
            let after = p.difference(1.01 * m);
            assert!(before * after < 0.0);
            for k in 1..100 {
                assert!(p.difference(m * (1.0 + k as f64 * 0.1)) != 0.0);
            }
            // Knots alternate in sign before 3m/4.
            for k in 0..3 {
                let a = p.difference(m * k as f64 / 4.0);
                let b = p.difference(m * (k + 1) as f64 / 4.0);
                assert!(a * b < 0.0);
            }
        }
    }

    #[test]
    fn small_frag_run_is_consistent() {
        let grid = TimeGrid::new(2.0, 500).unwrap();
        let run = FragRun::simulate(5, 2.0, grid, 300, TransformHook::None).unwrap();
        assert!(run.pairs.iter().all(|p| p.germ_ok));
        for p in &run.pairs {
            assert_eq!(p.kept_stem, p.frag_time.is_beyond_horizon());
        }
        assert!(run.germ_property().iter().all(|r| r.pass));
    }

    #[test]
    fn skip_reflection_censors_everything() {
        let grid = TimeGrid::new(2.0, 200).unwrap();
        let run = FragRun::simulate(5, 2.0, grid, 100, TransformHook::SkipReflection).unwrap();
        assert!(run.pairs.iter().all(|p| p.frag_time.is_beyond_horizon()));
        let ks = run.frag_law_ks().unwrap();
        assert_eq!(ks.statistic, 1.0);
        assert!(!ks.pass);
    }
}
