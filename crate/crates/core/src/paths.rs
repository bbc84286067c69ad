//! Uniform time grids, sampled paths and Brownian sampling.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Uniform grid `t_i = i·T/n` for `i = 0..=n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeGrid {
    horizon: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid("horizon", format!("{horizon} must be finite and > 0")));
        }
        if n_steps == 0 {
            return Err(Error::invalid("n_steps", "need at least one step"));
        }
        Ok(Self { horizon, n_steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_points(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps as f64
    }

    /// `t_i`; the last point is exactly `T`.
    pub fn time(&self, i: usize) -> f64 {
        debug_assert!(i <= self.n_steps);
        if i == self.n_steps {
            self.horizon
        } else {
            i as f64 * self.horizon / self.n_steps as f64
        }
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n_steps).map(move |i| self.time(i))
    }

    /// Index of the first grid point `≥ t`.
    pub fn ceil_index(&self, t: f64) -> usize {
        if t <= 0.0 {
            return 0;
        }
        let mut i = ((t / self.horizon) * self.n_steps as f64).ceil() as usize;
        i = i.min(self.n_steps);
        while i > 0 && self.time(i - 1) >= t {
            i -= 1;
        }
        while i < self.n_steps && self.time(i) < t {
            i += 1;
        }
        i
    }
}

/// A trajectory sampled on a [`TimeGrid`]. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl Path {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::invalid(
                "values",
                format!("expected {} values, got {}", grid.n_points(), values.len()),
            ));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid("values", format!("non-finite value at index {i}")));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(t_i)` on the grid.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, grid.times().map(f).collect())
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self, i: usize) -> f64 {
        self.grid.time(i)
    }

    pub fn start(&self) -> f64 {
        self.values[0]
    }

    /// `w(T)`.
    pub fn end(&self) -> f64 {
        self.values[self.grid.n_steps]
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn negated(&self) -> Path {
        Path {
            grid: self.grid,
            values: self.values.iter().map(|v| -v).collect(),
        }
    }

    /// Crate-internal constructor for values already known to be finite.
    pub(crate) fn from_parts(grid: TimeGrid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n_points());
        Self { grid, values }
    }
}

/// Brownian motion with drift `θ` started at `δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriftedLaw {
    pub drift: f64,
    pub start: f64,
}

impl DriftedLaw {
    pub fn new(drift: f64, start: f64) -> Result<Self> {
        if !drift.is_finite() {
            return Err(Error::invalid("drift", format!("{drift} is not finite")));
        }
        if !start.is_finite() {
            return Err(Error::invalid("start", format!("{start} is not finite")));
        }
        Ok(Self { drift, start })
    }

    pub fn standard() -> Self {
        Self {
            drift: 0.0,
            start: 0.0,
        }
    }
}

/// `w(0) = δ`, increments `N(θΔt, Δt)`. Consumes `n_steps` normals.
pub fn sample_bm(grid: &TimeGrid, law: DriftedLaw, stream: &mut RngStream) -> Path {
    let dt = grid.dt();
    let sd = dt.sqrt();
    let mean = law.drift * dt;
    let mut values = Vec::with_capacity(grid.n_points());
    let mut w = law.start;
    values.push(w);
    for _ in 0..grid.n_steps() {
        w += mean + sd * stream.standard_normal();
        values.push(w);
    }
    Path::from_parts(*grid, values)
}

/// Height of the line `ℓ^θ` at time `t`: `θt/2`.
pub fn line_value(theta: f64, t: f64) -> f64 {
    0.5 * theta * t
}

const CSV_HEADER: &str = "t,value";

/// Writes `t,value` rows. Rust's shortest round-trip float formatting makes
/// `read_csv(write_csv(p)) == p` bit for bit.
pub fn write_csv(path: &Path, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for (i, v) in path.values.iter().enumerate() {
        writeln!(out, "{},{}", path.time(i), v)?;
    }
    out.flush()
}

pub fn read_csv(input: impl BufRead) -> Result<Path> {
    let mut lines = input.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::Parse {
            line: 1,
            reason: e.to_string(),
        })?,
        None => {
            return Err(Error::Parse {
                line: 1,
                reason: "empty input, expected header `t,value`".into(),
            })
        }
    };
    if header.trim() != CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header `{CSV_HEADER}`, found `{}`", header.trim()),
        });
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::Parse {
            line: lineno,
            reason: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let (Some(t), Some(v), None) = (cells.next(), cells.next(), cells.next()) else {
            return Err(Error::Parse {
                line: lineno,
                reason: format!("expected 2 cells, found `{line}`"),
            });
        };
        let parse = |cell: &str, what: &str| -> Result<f64> {
            let x: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                line: lineno,
                reason: format!("non-numeric {what} `{}`", cell.trim()),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse {
                    line: lineno,
                    reason: format!("non-finite {what} `{}`", cell.trim()),
                });
            }
            Ok(x)
        };
        times.push((lineno, parse(t, "time")?));
        values.push(parse(v, "value")?);
    }

    if times.len() < 2 {
        return Err(Error::Parse {
            line: times.last().map_or(1, |&(l, _)| l),
            reason: format!("need at least 2 rows (1 step), found {}", times.len()),
        });
    }
    if times[0].1 != 0.0 {
        return Err(Error::Parse {
            line: times[0].0,
            reason: format!("grid must start at t = 0, found {}", times[0].1),
        });
    }
    let horizon = times[times.len() - 1].1;
    let grid = TimeGrid::new(horizon, times.len() - 1).map_err(|e| Error::Parse {
        line: times[times.len() - 1].0,
        reason: e.to_string(),
    })?;
    let tol = 1e-9 * horizon;
    for (i, &(lineno, t)) in times.iter().enumerate() {
        if (t - grid.time(i)).abs() > tol {
            return Err(Error::Parse {
                line: lineno,
                reason: format!("time {t} is off the uniform grid (expected {})", grid.time(i)),
            });
        }
    }
    Ok(Path::from_parts(grid, values))
}

pub fn save_csv(path: &Path, file: &std::path::Path) -> Result<()> {
    let f = File::create(file).map_err(|e| Error::io(file, e))?;
    write_csv(path, BufWriter::new(f)).map_err(|e| Error::io(file, e))
}

pub fn load_csv(file: &std::path::Path) -> Result<Path> {
    let f = File::open(file).map_err(|e| Error::io(file, e))?;
    read_csv(BufReader::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean_variance;
    use proptest::prelude::*;

    #[test]
    fn grid_rejects_bad_input() {
        assert!(TimeGrid::new(0.0, 10).is_err());
        assert!(TimeGrid::new(-1.0, 10).is_err());
        assert!(TimeGrid::new(f64::INFINITY, 10).is_err());
        assert!(TimeGrid::new(1.0, 0).is_err());
    }

    #[test]
    fn grid_endpoints_exact() {
        for n in [1, 3, 7, 10, 999, 10_000] {
            for t in [0.1, 1.0, 0.7, 10.0, 3.3] {
                let g = TimeGrid::new(t, n).unwrap();
                assert_eq!(g.time(0), 0.0);
                assert_eq!(g.time(n), t);
                assert_eq!(g.times().count(), n + 1);
            }
        }
    }

    #[test]
    fn ceil_index_finds_cell() {
        let g = TimeGrid::new(1.0, 10).unwrap();
        assert_eq!(g.ceil_index(0.0), 0);
        assert_eq!(g.ceil_index(0.05), 1);
        assert_eq!(g.ceil_index(g.time(3)), 3);
        assert_eq!(g.ceil_index(0.999), 10);
        assert_eq!(g.ceil_index(5.0), 10);
    }

    #[test]
    fn path_validates() {
        let g = TimeGrid::new(1.0, 2).unwrap();
        assert!(Path::new(g, vec![0.0, 1.0]).is_err());
        assert!(Path::new(g, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(Path::new(g, vec![0.0, 1.0, 2.0]).is_ok());
    }

    #[test]
    fn line_values() {
        assert_eq!(line_value(2.0, 1.0), 1.0);
        assert_eq!(line_value(0.0, 5.0), 0.0);
        assert_eq!(line_value(-3.0, 2.0), -3.0);
    }

    #[test]
    fn start_value_is_exact() {
        let g = TimeGrid::new(1.0, 1).unwrap();
        let mut s = RngStream::new(0, 0);
        let p = sample_bm(&g, DriftedLaw::new(0.0, 5.0).unwrap(), &mut s);
        assert_eq!(p.start(), 5.0);
        assert_eq!(p.len(), 2);
    }

    fn endpoint_moments(drift: f64, seed: u64) -> (f64, f64) {
        let g = TimeGrid::new(1.0, 16).unwrap();
        let law = DriftedLaw::new(drift, 0.0).unwrap();
        let ends: Vec<f64> = (0..10_000)
            .map(|k| {
                let mut s = RngStream::new(seed, k);
                sample_bm(&g, law, &mut s).end()
            })
            .collect();
        mean_variance(&ends)
    }

    #[test]
    fn standard_endpoint_moments() {
        let (m, v) = endpoint_moments(0.0, 21);
        assert!(m.abs() < 0.03, "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn drifted_endpoint_mean() {
        let (m, v) = endpoint_moments(2.0, 22);
        assert!((m - 2.0).abs() < 0.03, "mean {m}");
        assert!((v - 1.0).abs() < 0.05, "var {v}");
    }

    #[test]
    fn increment_moments() {
        let g = TimeGrid::new(2.0, 20_000).unwrap();
        let theta = 1.5;
        let mut s = RngStream::new(5, 0);
        let p = sample_bm(&g, DriftedLaw::new(theta, 0.0).unwrap(), &mut s);
        let inc: Vec<f64> = p.values().windows(2).map(|w| w[1] - w[0]).collect();
        let dt = g.dt();
        let (m, v) = mean_variance(&inc);
        let n = inc.len() as f64;
        assert!((m - theta * dt).abs() < 3.0 * (dt / n).sqrt(), "mean {m}");
        assert!((v - dt).abs() < 3.0 * dt * (2.0 / n).sqrt(), "var {v}");
    }

    #[test]
    fn csv_round_trip_three_points() {
        let g = TimeGrid::new(0.3, 2).unwrap();
        let p = Path::new(g, vec![0.0, 0.1 + 0.2, -1.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        write_csv(&p, &mut buf).unwrap();
        let q = read_csv(buf.as_slice()).unwrap();
        assert_eq!(p, q);
        for (a, b) in p.values().iter().zip(q.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_header_only_is_rejected() {
        let err = read_csv("t,value\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
        let err = read_csv("t,value\n0,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn csv_errors_cite_line() {
        let text = "t,value\n0,0\n0.5,1\n1,abc\n";
        match read_csv(text.as_bytes()).unwrap_err() {
            Error::Parse { line, reason } => {
                assert_eq!(line, 4);
                assert!(reason.contains("abc"));
            }
            e => panic!("unexpected {e}"),
        }
        match read_csv("time,v\n0,0\n".as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 1),
            e => panic!("unexpected {e}"),
        }
        match read_csv("t,value\n0,0\n0.5,1,2\n".as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
        match read_csv("t,value\n0,0\n0.7,1\n1,2\n".as_bytes()).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            horizon in 1e-3f64..1e3,
            values in prop::collection::vec(-1e6f64..1e6, 2..50),
        ) {
            let g = TimeGrid::new(horizon, values.len() - 1).unwrap();
            let p = Path::new(g, values).unwrap();
            let mut buf = Vec::new();
            write_csv(&p, &mut buf).unwrap();
            let q = read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
