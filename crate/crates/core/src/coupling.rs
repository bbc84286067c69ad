//! Reflection after the last visit to `ℓ^θ`, the finite-horizon germ
//! transform, fragmentation and meeting times, and time inversion.
//!
//! Grid semantics: [`h_theta`] and [`germ_transform`] touch grid points only,
//! exactly as the backward scan is written; [`last_visit`] additionally
//! interpolates the crossing inside a cell. The two can disagree by at most
//! one cell.

use crate::error::{Error, Result};
use crate::paths::{line_value, Path, TimeGrid};

/// A first/last meeting or fragmentation time on a finite window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeetingTime {
    At(f64),
    /// No meeting was found on the window.
    Never,
    /// The paths still agree (or the event is still pending) at the horizon.
    BeyondHorizon,
}

impl MeetingTime {
    pub fn value(self) -> Option<f64> {
        match self {
            MeetingTime::At(t) => Some(t),
            _ => None,
        }
    }

    pub fn is_beyond_horizon(self) -> bool {
        matches!(self, MeetingTime::BeyondHorizon)
    }

    /// `At(t) ↦ t`, `BeyondHorizon ↦ +∞`, `Never ↦ never`.
    pub fn to_f64(self, never: f64) -> f64 {
        match self {
            MeetingTime::At(t) => t,
            MeetingTime::BeyondHorizon => f64::INFINITY,
            MeetingTime::Never => never,
        }
    }
}

/// Anything sampled at strictly increasing times.
pub trait Trajectory {
    fn len(&self) -> usize;
    fn time(&self, i: usize) -> f64;
    fn values(&self) -> &[f64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Trajectory for Path {
    fn len(&self) -> usize {
        Path::len(self)
    }

    fn time(&self, i: usize) -> f64 {
        Path::time(self, i)
    }

    fn values(&self) -> &[f64] {
        Path::values(self)
    }
}

/// A path on a non-uniform grid, e.g. the image of a [`Path`] under time
/// inversion.
#[derive(Clone, Debug, PartialEq)]
pub struct IrregularPath {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl IrregularPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptySample);
        }
        if times.len() != values.len() {
            return Err(Error::invalid(
                "values",
                format!("{} times but {} values", times.len(), values.len()),
            ));
        }
        if times.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(Error::invalid("values", "non-finite entry"));
        }
        if times.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("times", "must be strictly increasing"));
        }
        Ok(Self { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `I(self)` on the full window; every time must be positive.
    pub fn inverted(&self) -> Result<IrregularPath> {
        time_invert(self, self.times[0])
    }
}

impl Trajectory for IrregularPath {
    fn len(&self) -> usize {
        self.times.len()
    }

    fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    fn values(&self) -> &[f64] {
        &self.values
    }
}

impl From<&Path> for IrregularPath {
    fn from(p: &Path) -> Self {
        Self {
            times: p.grid().times().collect(),
            values: p.values().to_vec(),
        }
    }
}

/// A stem, its drift-`θ` branch and their fragmentation time.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupledPair {
    pub stem: Path,
    pub branch: Path,
    pub theta: f64,
    pub frag_time: MeetingTime,
}

/// Fault injection for the germ transform, used as a negative control by the
/// verification suite.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TransformHook {
    #[default]
    None,
    /// The else-branch copies the input instead of reflecting it.
    SkipReflection,
}

fn opposite_signs(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

/// Root of the chord through `(ta, da)`, `(tb, db)`; requires opposite signs.
fn chord_root(ta: f64, da: f64, tb: f64, db: f64) -> f64 {
    (ta + (tb - ta) * (da / (da - db))).clamp(ta, tb)
}

/// Latest zero of the piecewise-linear interpolant of `d`.
fn last_zero(n: usize, time: impl Fn(usize) -> f64, d: impl Fn(usize) -> f64) -> MeetingTime {
    let mut next = d(n - 1);
    if next == 0.0 {
        return MeetingTime::At(time(n - 1));
    }
    for i in (0..n - 1).rev() {
        let cur = d(i);
        if opposite_signs(cur, next) {
            return MeetingTime::At(chord_root(time(i), cur, time(i + 1), next));
        }
        if cur == 0.0 {
            return MeetingTime::At(time(i));
        }
        next = cur;
    }
    MeetingTime::Never
}

/// Earliest point with `|d| ≤ tol`, or earliest zero of the interpolant.
fn first_zero(n: usize, time: impl Fn(usize) -> f64, d: impl Fn(usize) -> f64, tol: f64) -> MeetingTime {
    let mut cur = d(0);
    for i in 0..n {
        if cur.abs() <= tol {
            return MeetingTime::At(time(i));
        }
        if i + 1 == n {
            break;
        }
        let next = d(i + 1);
        if opposite_signs(cur, next) {
            return MeetingTime::At(chord_root(time(i), cur, time(i + 1), next));
        }
        cur = next;
    }
    MeetingTime::Never
}

/// Last time in `[0, T]` at which the sampled path touches or crosses `ℓ^θ`.
///
/// Works on `d(t_i) = w(t_i) − θt_i/2`: an exact zero at a grid point counts,
/// as does a sign change, which is resolved by linear interpolation. Returns
/// [`MeetingTime::Never`] if neither occurs.
pub fn last_visit(w: &Path, theta: f64) -> MeetingTime {
    let v = w.values();
    last_zero(w.len(), |i| w.time(i), |i| v[i] - line_value(theta, w.time(i)))
}

/// Backward scan of the germ transform: writes `θt − w(t)` into `out` while
/// `w(t) < θt/2`, then copies the remaining prefix. Each grid point is read
/// and written once. Returns the first reflected index, if any.
fn reflect_scan(grid: &TimeGrid, w: &[f64], theta: f64, out: &mut [f64]) -> Option<usize> {
    let mut i = grid.n_steps();
    loop {
        let t = grid.time(i);
        if w[i] < line_value(theta, t) {
            out[i] = theta * t - w[i];
        } else {
            out[..=i].copy_from_slice(&w[..=i]);
            return (i < grid.n_steps()).then_some(i + 1);
        }
        if i == 0 {
            return Some(0);
        }
        i -= 1;
    }
}

/// Reflection of `w` across `ℓ^θ` after its last grid visit.
///
/// For `θ ≥ 0` this is the backward scan of the germ transform's else-branch.
/// Negative drifts use `H^θ(w) = −H^{−θ}(−w)`. For `θ = 0` the scan negates
/// the strictly negative tail after the last non-negative grid point.
pub fn h_theta(w: &Path, theta: f64) -> Path {
    if theta < 0.0 {
        return h_theta(&w.negated(), -theta).negated();
    }
    let mut out = vec![0.0; w.len()];
    reflect_scan(w.grid(), w.values(), theta, &mut out);
    Path::from_parts(*w.grid(), out)
}

/// `u ≤ exp(θw(T) − θ²T/2)`: whether the germ transform keeps `w` intact.
pub fn keeps_stem(w: &Path, u: f64, theta: f64) -> bool {
    let horizon = w.grid().horizon();
    u <= (theta * w.end() - 0.5 * theta * theta * horizon).exp()
}

fn check_transform_args(u: f64, theta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::invalid("u", format!("{u} not in [0, 1]")));
    }
    if theta.is_nan() || theta.is_infinite() {
        return Err(Error::invalid("theta", format!("{theta} is not finite")));
    }
    if theta < 0.0 {
        return Err(Error::NegativeDrift { theta });
    }
    Ok(())
}

/// Maps a standard Brownian path and an independent uniform to a drift-`θ`
/// path maximally germ coupled to it on `[0, T]`.
///
/// If `u ≤ exp(θw(T) − θ²T/2)` the path is returned unchanged; otherwise it
/// is reflected across `ℓ^θ` after its last grid visit. Only `θ ≥ 0` is
/// accepted; for negative drifts negate both the path and the drift.
pub fn germ_transform(w: &Path, u: f64, theta: f64) -> Result<Path> {
    germ_transform_with_hook(w, u, theta, TransformHook::None)
}

pub fn germ_transform_with_hook(w: &Path, u: f64, theta: f64, hook: TransformHook) -> Result<Path> {
    check_transform_args(u, theta)?;
    if keeps_stem(w, u, theta) || hook == TransformHook::SkipReflection {
        return Ok(w.clone());
    }
    let mut out = vec![0.0; w.len()];
    reflect_scan(w.grid(), w.values(), theta, &mut out);
    Ok(Path::from_parts(*w.grid(), out))
}

/// [`germ_transform`] packaged with the resulting fragmentation time.
pub fn couple(stem: Path, u: f64, theta: f64) -> Result<CoupledPair> {
    couple_with_hook(stem, u, theta, TransformHook::None)
}

pub fn couple_with_hook(stem: Path, u: f64, theta: f64, hook: TransformHook) -> Result<CoupledPair> {
    let branch = germ_transform_with_hook(&stem, u, theta, hook)?;
    let frag_time = frag_time(&stem, &branch)?;
    Ok(CoupledPair {
        stem,
        branch,
        theta,
        frag_time,
    })
}

/// First grid time at which the two paths differ; `BeyondHorizon` if they
/// agree everywhere. Comparison is exact.
pub fn frag_time(p1: &Path, p2: &Path) -> Result<MeetingTime> {
    if p1.grid() != p2.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(p1
        .values()
        .iter()
        .zip(p2.values())
        .position(|(a, b)| a != b)
        .map_or(MeetingTime::BeyondHorizon, |i| MeetingTime::At(p1.time(i))))
}

/// Time inversion `(I w)(s) = s·w(1/s)` of the window `t ≥ t_min`.
///
/// The result lives on the ascending grid `{1/T, …, 1/t_min}`. The value at
/// `s = 0` needs the slope at infinity and is not produced.
pub fn time_invert(w: &impl Trajectory, t_min: f64) -> Result<IrregularPath> {
    if !(t_min.is_finite() && t_min > 0.0) {
        return Err(Error::invalid("t_min", format!("{t_min} must be finite and > 0")));
    }
    let n = w.len();
    let first = (0..n).find(|&i| w.time(i) >= t_min).ok_or_else(|| {
        Error::invalid("t_min", format!("{t_min} is beyond the last sample time"))
    })?;
    let values = w.values();
    let mut times = Vec::with_capacity(n - first);
    let mut inverted = Vec::with_capacity(n - first);
    for i in (first..n).rev() {
        let t = w.time(i);
        if t <= 0.0 {
            return Err(Error::invalid("t_min", format!("window contains time {t} <= 0")));
        }
        let s = 1.0 / t;
        times.push(s);
        inverted.push(s * values[i]);
    }
    IrregularPath::new(times, inverted)
}

fn same_times(p1: &impl Trajectory, p2: &impl Trajectory) -> bool {
    p1.len() == p2.len() && (0..p1.len()).all(|i| p1.time(i) == p2.time(i))
}

/// Earliest time with `|p1 − p2| ≤ tol` at a grid point, or the earliest
/// interpolated sign change of `p1 − p2`, whichever comes first.
pub fn first_meeting(p1: &impl Trajectory, p2: &impl Trajectory, tol: f64) -> Result<MeetingTime> {
    if !same_times(p1, p2) {
        return Err(Error::GridMismatch);
    }
    if !(tol >= 0.0) {
        return Err(Error::invalid("tol", format!("{tol} must be >= 0")));
    }
    let (a, b) = (p1.values(), p2.values());
    Ok(first_zero(p1.len(), |i| p1.time(i), |i| a[i] - b[i], tol))
}

/// Latest time at which `p1 − p2` vanishes on the interpolated path.
pub fn last_meeting(p1: &impl Trajectory, p2: &impl Trajectory) -> Result<MeetingTime> {
    if !same_times(p1, p2) {
        return Err(Error::GridMismatch);
    }
    let (a, b) = (p1.values(), p2.values());
    Ok(last_zero(p1.len(), |i| p1.time(i), |i| a[i] - b[i]))
}

/// Hitting time `inf{t : w(t) = level}` of the linearly interpolated path.
pub fn first_passage(w: &impl Trajectory, level: f64) -> MeetingTime {
    let v = w.values();
    first_zero(w.len(), |i| w.time(i), |i| v[i] - level, 0.0)
}
