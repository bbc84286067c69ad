//! Experiment commands behind the `germ` binary.
//!
//! Every path job `k` draws from substream `k` of the run seed: first the
//! `n_steps` Gaussian increments of the stem, then (where needed) the uniform
//! fed to the germ transform. Jobs run on a rayon pool capped by
//! `GERM_THREADS` and are merged in job order, so outputs are byte-identical
//! for a given configuration regardless of the worker count.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path as FsPath, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::coupling::{couple_with_hook, germ_transform, CoupledPair, MeetingTime, TransformHook};
use crate::error::{Error, Result};
use crate::paths::{load_csv, sample_bm, save_csv, DriftedLaw, Path, TimeGrid};
use crate::rng::substream;
use crate::subordinator::{frag_process, DriftGrid, FragProcess};
use crate::VERSION;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "GERM_THREADS";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub seed: u64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub horizon: f64,
    pub thetas: Vec<f64>,
    pub alpha: f64,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n_paths: 1,
            n_steps: 1000,
            horizon: 1.0,
            thetas: Vec::new(),
            alpha: 0.001,
            out_dir: PathBuf::from("out"),
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths", "must be >= 1"));
        }
        if self.n_steps == 0 {
            return Err(Error::invalid("n_steps", "must be >= 1"));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::invalid("horizon", format!("{} must be finite and > 0", self.horizon)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid("alpha", format!("{} not in (0, 1)", self.alpha)));
        }
        if let Some(t) = self.thetas.iter().find(|t| !t.is_finite()) {
            return Err(Error::invalid("thetas", format!("{t} is not finite")));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(self.horizon, self.n_steps)
    }

    fn drift_grid(&self) -> Result<DriftGrid> {
        if let Some(&theta) = self.thetas.iter().find(|&&t| t < 0.0) {
            return Err(Error::NegativeDrift { theta });
        }
        DriftGrid::new(self.thetas.clone())
    }
}

/// Runs `job(k)` for `k in 0..n` on the capped pool; results in job order.
pub fn run_jobs<T, F>(n: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(cap) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        builder = builder.num_threads(cap.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::invalid("GERM_THREADS", e.to_string()))?;
    pool.install(|| (0..n).into_par_iter().map(job).collect())
}

/// The drift-0 stem of path job `id`.
pub fn sample_stem(seed: u64, id: usize, grid: &TimeGrid) -> Path {
    let mut stream = substream(seed, id as u64);
    sample_bm(grid, DriftedLaw::standard(), &mut stream)
}

/// Stem and uniform of path job `id`, in that draw order.
pub fn sample_stem_and_uniform(seed: u64, id: usize, grid: &TimeGrid) -> (Path, f64) {
    let mut stream = substream(seed, id as u64);
    let stem = sample_bm(grid, DriftedLaw::standard(), &mut stream);
    let u = stream.uniform01();
    (stem, u)
}

/// Coupled pair of path job `id`.
pub fn sample_pair(seed: u64, id: usize, grid: &TimeGrid, theta: f64, hook: TransformHook) -> Result<CoupledPair> {
    let (stem, u) = sample_stem_and_uniform(seed, id, grid);
    couple_with_hook(stem, u, theta, hook)
}

fn create_dir(dir: &FsPath) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(file: &FsPath, text: &str) -> Result<()> {
    fs::write(file, text).map_err(|e| Error::io(file, e))
}

fn write_manifest(config: &RunConfig, command: &str, extra: serde_json::Value) -> Result<PathBuf> {
    let manifest = json!({
        "command": command,
        "version": VERSION,
        "config": config,
        "extra": extra,
    });
    let file = config.out_dir.join("manifest.json");
    write_text(&file, &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(file)
}

fn time_cell(t: MeetingTime) -> String {
    match t {
        MeetingTime::At(t) => t.to_string(),
        MeetingTime::BeyondHorizon => "inf".into(),
        MeetingTime::Never => "nan".into(),
    }
}

fn time_json(t: MeetingTime) -> serde_json::Value {
    match t {
        MeetingTime::At(t) => json!(t),
        _ => serde_json::Value::Null,
    }
}

fn write_frag_process(file: &FsPath, process: &FragProcess, format: Format) -> Result<()> {
    let body = match format {
        Format::Csv => {
            let mut s = String::from("theta,tau_frag,censored\n");
            for (theta, t) in process.grid.thetas().iter().zip(&process.times) {
                s += &format!("{theta},{},{}\n", time_cell(*t), t.is_beyond_horizon());
            }
            s
        }
        Format::Json => {
            let rows: Vec<_> = process
                .grid
                .thetas()
                .iter()
                .zip(&process.times)
                .map(|(theta, t)| json!({"theta": theta, "tau_frag": time_json(*t), "censored": t.is_beyond_horizon()}))
                .collect();
            serde_json::to_string_pretty(&rows)? + "\n"
        }
    };
    write_text(file, &body)
}

fn frag_process_file(dir: &FsPath, id: usize, format: Format) -> PathBuf {
    let ext = match format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    dir.join(format!("frag_process_{id}.{ext}"))
}

/// `sample`: `n_paths` standard Brownian stems as `path_<id>.csv`.
pub fn cmd_sample(config: &RunConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let grid = config.grid()?;
    create_dir(&config.out_dir)?;
    let mut files = run_jobs(config.n_paths, |id| {
        let file = config.out_dir.join(format!("path_{id}.csv"));
        save_csv(&sample_stem(config.seed, id, &grid), &file)?;
        Ok(file)
    })?;
    files.push(write_manifest(config, "sample", json!({}))?);
    Ok(files)
}

/// Per-path result of `couple`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoupleRecord {
    pub frag_time: MeetingTime,
    pub kept_stem: bool,
}

/// `couple`: stem/branch CSVs per path and a `frag_times` table.
pub fn cmd_couple(config: &RunConfig, theta: f64) -> Result<Vec<CoupleRecord>> {
    config.validate()?;
    if theta < 0.0 {
        return Err(Error::NegativeDrift { theta });
    }
    let grid = config.grid()?;
    create_dir(&config.out_dir)?;
    let records = run_jobs(config.n_paths, |id| {
        let pair = sample_pair(config.seed, id, &grid, theta, TransformHook::None)?;
        save_csv(&pair.stem, &config.out_dir.join(format!("stem_{id}.csv")))?;
        save_csv(&pair.branch, &config.out_dir.join(format!("branch_{id}.csv")))?;
        Ok(CoupleRecord {
            frag_time: pair.frag_time,
            kept_stem: pair.stem == pair.branch,
        })
    })?;

    match config.format {
        Format::Csv => {
            let mut s = String::from("path_id,frag_time_or_inf\n");
            for (id, r) in records.iter().enumerate() {
                s += &format!("{id},{}\n", time_cell(r.frag_time));
            }
            write_text(&config.out_dir.join("frag_times.csv"), &s)?;
        }
        Format::Json => {
            let rows: Vec<_> = records
                .iter()
                .enumerate()
                .map(|(id, r)| json!({"path_id": id, "frag_time": time_json(r.frag_time), "censored": r.frag_time.is_beyond_horizon()}))
                .collect();
            write_text(
                &config.out_dir.join("frag_times.json"),
                &(serde_json::to_string_pretty(&rows)? + "\n"),
            )?;
        }
    }
    write_manifest(config, "couple", json!({ "theta": theta }))?;
    Ok(records)
}

/// `bouquet`: one stem and one branch per drift, all from the same stem and
/// the same uniform. The if-branch probability is non-increasing in `θ`, so a
/// shared uniform gives nested censoring events, as the last visits are
/// nested. Writes `stem_<id>.csv`, `branch_<id>_<k>.csv` (k indexes the
/// drift) and `frag_process_<id>.csv` with the grid fragmentation times.
pub fn cmd_bouquet(config: &RunConfig) -> Result<Vec<FragProcess>> {
    config.validate()?;
    let drifts = config.drift_grid()?;
    let grid = config.grid()?;
    create_dir(&config.out_dir)?;
    let processes = run_jobs(config.n_paths, |id| {
        let (stem, u) = sample_stem_and_uniform(config.seed, id, &grid);
        save_csv(&stem, &config.out_dir.join(format!("stem_{id}.csv")))?;
        let mut times = Vec::with_capacity(drifts.len());
        for (k, &theta) in drifts.thetas().iter().enumerate() {
            let branch = germ_transform(&stem, u, theta)?;
            save_csv(&branch, &config.out_dir.join(format!("branch_{id}_{k}.csv")))?;
            times.push(crate::coupling::frag_time(&stem, &branch)?);
        }
        let process = FragProcess {
            grid: drifts.clone(),
            times,
        };
        write_frag_process(&frag_process_file(&config.out_dir, id, config.format), &process, config.format)?;
        Ok(process)
    })?;
    write_manifest(config, "bouquet", json!({}))?;
    Ok(processes)
}

/// `frag-process`: last visits of each stem to every line `ℓ^θ`.
pub fn cmd_frag_process(config: &RunConfig) -> Result<Vec<FragProcess>> {
    config.validate()?;
    let drifts = config.drift_grid()?;
    let grid = config.grid()?;
    create_dir(&config.out_dir)?;
    let processes = run_jobs(config.n_paths, |id| {
        let stem = sample_stem(config.seed, id, &grid);
        let process = frag_process(&stem, &drifts);
        write_frag_process(&frag_process_file(&config.out_dir, id, config.format), &process, config.format)?;
        Ok(process)
    })?;
    write_manifest(config, "frag-process", json!({}))?;
    Ok(processes)
}

/// `germ-transform`: applies the transform to a path stored as CSV.
pub fn cmd_germ_transform(input: &FsPath, theta: f64, u: f64, output: &FsPath) -> Result<Path> {
    let stem = load_csv(input)?;
    let branch = germ_transform(&stem, u, theta)?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    save_csv(&branch, output)?;
    Ok(branch)
}

/// Writes verification reports as pretty JSON or a flat CSV table.
pub fn write_reports(reports: &[crate::stats::GofReport], format: Format, mut out: impl Write) -> Result<()> {
    let io = |e| Error::io("<report>", e);
    match format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, reports)?;
            writeln!(out).map_err(io)?;
        }
        Format::Csv => {
            writeln!(out, "test,n,statistic,threshold,alpha,pass").map_err(io)?;
            for r in reports {
                writeln!(out, "{},{},{},{},{},{}", r.test_name, r.n, r.statistic, r.threshold, r.alpha, r.pass)
                    .map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

pub fn save_reports(reports: &[crate::stats::GofReport], format: Format, file: &FsPath) -> Result<()> {
    let f = File::create(file).map_err(|e| Error::io(file, e))?;
    write_reports(reports, format, BufWriter::new(f))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_name_field() {
        let mut c = RunConfig::default();
        c.n_steps = 0;
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("n_steps"), "{err}");
        let mut c = RunConfig::default();
        c.n_paths = 0;
        assert!(c.validate().unwrap_err().to_string().contains("n_paths"));
        let mut c = RunConfig::default();
        c.horizon = -1.0;
        assert!(c.validate().unwrap_err().to_string().contains("horizon"));
        let mut c = RunConfig::default();
        c.alpha = 0.0;
        assert!(c.validate().unwrap_err().to_string().contains("alpha"));
    }

    #[test]
    fn empty_or_negative_thetas_rejected() {
        let c = RunConfig::default();
        assert!(c.drift_grid().unwrap_err().to_string().contains("thetas"));
        let c = RunConfig {
            thetas: vec![-1.0, 1.0],
            ..RunConfig::default()
        };
        assert!(matches!(c.drift_grid(), Err(Error::NegativeDrift { .. })));
    }

    #[test]
    fn jobs_keep_order() {
        let out = run_jobs(100, |k| Ok(k * 2)).unwrap();
        assert_eq!(out, (0..100).map(|k| k * 2).collect::<Vec<_>>());
    }

    #[test]
    fn pair_uses_path_substream() {
        let grid = TimeGrid::new(1.0, 50).unwrap();
        let a = sample_pair(3, 7, &grid, 1.0, TransformHook::None).unwrap();
        let b = sample_pair(3, 7, &grid, 1.0, TransformHook::None).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.stem, sample_stem(3, 7, &grid));
        assert_ne!(a.stem, sample_stem(3, 8, &grid));
    }
}
