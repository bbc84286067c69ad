//! The fragmentation-time process `θ ↦ τ_frag(B, H^θ(B))` over a drift grid,
//! its dual computation through time inversion, and the first-passage
//! (½-stable subordinator) process.

use crate::coupling::{first_passage, last_visit, time_invert, MeetingTime, Trajectory};
use crate::error::{Error, Result};
use crate::paths::{line_value, Path};
use crate::rng::RngStream;

/// Strictly increasing, non-negative drifts.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftGrid {
    thetas: Vec<f64>,
}

impl DriftGrid {
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::invalid("thetas", "need at least one drift"));
        }
        if let Some(t) = thetas.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::invalid("thetas", format!("{t} is not a finite drift >= 0")));
        }
        if thetas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("thetas", "must be strictly increasing"));
        }
        Ok(Self { thetas })
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn len(&self) -> usize {
        self.thetas.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// `τ_frag(θ)` for every drift of a grid; censored entries are
/// [`MeetingTime::BeyondHorizon`].
#[derive(Clone, Debug, PartialEq)]
pub struct FragProcess {
    pub grid: DriftGrid,
    pub times: Vec<MeetingTime>,
}

impl FragProcess {
    /// Non-increasing in `θ`, reading censored entries as `+∞` and `Never`
    /// as 0.
    pub fn is_non_increasing(&self) -> bool {
        self.times
            .windows(2)
            .all(|w| w[0].to_f64(0.0) >= w[1].to_f64(0.0))
    }
}

/// `τ_coal(θ) = inf{s : w(s) = θ/2}` for every drift of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PassageProcess {
    pub grid: DriftGrid,
    pub times: Vec<MeetingTime>,
}

impl PassageProcess {
    /// Non-decreasing in `θ`, reading `Never` as `+∞`.
    pub fn is_non_decreasing(&self) -> bool {
        self.times
            .windows(2)
            .all(|w| w[0].to_f64(f64::INFINITY) <= w[1].to_f64(f64::INFINITY))
    }
}

/// Last visit of a drift-0 stem to each line `ℓ^θ`.
///
/// An entry is censored when the last visit cannot lie in `[0, T]`: for
/// `θ = 0` (the stem returns to 0 at arbitrarily late times) and whenever the
/// stem ends strictly above `ℓ^θ` (it must still cross back below the line).
pub fn frag_process(stem: &Path, grid: &DriftGrid) -> FragProcess {
    let horizon = stem.grid().horizon();
    let times = grid
        .thetas()
        .iter()
        .map(|&theta| {
            if theta == 0.0 || stem.end() > line_value(theta, horizon) {
                MeetingTime::BeyondHorizon
            } else {
                last_visit(stem, theta)
            }
        })
        .collect();
    FragProcess {
        grid: grid.clone(),
        times,
    }
}

/// The same process computed on the time-inverted stem: the first passage
/// of `I(stem)` to `θ/2` is the reciprocal of the last visit to `ℓ^θ`.
///
/// The inverted window is `[1/T, 1/t_min]` (`t_min` defaults to one grid
/// cell). An inverted path already above `θ/2` at `s = 1/T` gives a censored
/// entry; no passage inside the window means the last visit precedes
/// `t_min`, reported as [`MeetingTime::Never`].
pub fn frag_process_dual(stem: &Path, grid: &DriftGrid, t_min: Option<f64>) -> Result<FragProcess> {
    let t_min = t_min.unwrap_or_else(|| stem.grid().dt());
    let inverted = time_invert(stem, t_min)?;
    let start = inverted.values()[0];
    let times = grid
        .thetas()
        .iter()
        .map(|&theta| {
            let level = 0.5 * theta;
            if theta == 0.0 || start > level {
                return MeetingTime::BeyondHorizon;
            }
            match first_passage(&inverted, level) {
                MeetingTime::At(s) => MeetingTime::At(1.0 / s),
                other => other,
            }
        })
        .collect();
    Ok(FragProcess {
        grid: grid.clone(),
        times,
    })
}

/// Whether two computations of the process agree within `cell` wherever
/// both report a time.
pub fn agree_within(a: &FragProcess, b: &FragProcess, cell: f64) -> bool {
    a.times.iter().zip(&b.times).all(|pair| match pair {
        (MeetingTime::At(x), MeetingTime::At(y)) => (x - y).abs() <= cell * (1.0 + 1e-9),
        _ => true,
    })
}

/// First passage of the path to each level `θ/2`.
pub fn first_passage_process(w: &Path, grid: &DriftGrid) -> PassageProcess {
    let times = grid
        .thetas()
        .iter()
        .map(|&theta| first_passage(w, 0.5 * theta))
        .collect();
    PassageProcess {
        grid: grid.clone(),
        times,
    }
}

/// `a²/z²`: the first-passage time of standard BM to level `a`, given the
/// normal draw `z`.
pub fn stable_half_passage_from_normal(a: f64, z: f64) -> f64 {
    (a / z) * (a / z)
}

/// Exact draw of the first-passage time of standard BM to level `a > 0`.
pub fn sample_stable_half_passage(a: f64, stream: &mut RngStream) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::invalid("a", format!("{a} must be finite and > 0")));
    }
    Ok(stable_half_passage_from_normal(a, stream.standard_normal()))
}
