//! Maximal germ couplings of Brownian motions with drift.
//!
//! A standard Brownian path `B` is turned into a drift-`θ` path by reflecting it
//! across the line `t ↦ θt/2` after its last visit to that line. The two paths
//! agree exactly up to that last visit, and the agreement time has the largest
//! law any coupling of the two can achieve. On a finite horizon the last visit
//! is not observable, so [`coupling::germ_transform`] resolves it with a single
//! uniform draw against the likelihood ratio `exp(θB(T) − θ²T/2)`.
//!
//! Module map:
//!
//! * [`rng`] – seedable ChaCha8 streams with O(1) per-task substreams.
//! * [`paths`] – uniform time grids, sampled paths, Brownian sampling, CSV I/O.
//! * [`coupling`] – last visit, reflection, the germ transform, fragmentation
//!   and meeting times, time inversion.
//! * [`subordinator`] – fragmentation-time process over a drift grid, its dual
//!   first-passage process and an exact ½-stable passage sampler.
//! * [`stats`] – reference laws, empirical CDFs and Kolmogorov–Smirnov checks.
//! * [`cli`] – reproducible experiment commands behind the `germ` binary.
//! * [`verify`] – the statistical acceptance suite run by `germ verify`.

pub mod cli;
pub mod coupling;
pub mod error;
pub mod paths;
pub mod rng;
pub mod stats;
pub mod subordinator;
pub mod verify;

pub use coupling::{CoupledPair, IrregularPath, MeetingTime, Trajectory};
pub use error::{Error, Result};
pub use paths::{DriftedLaw, Path, TimeGrid};
pub use rng::RngStream;
pub use stats::{Ecdf, GofReport, Support};
pub use subordinator::{DriftGrid, FragProcess, PassageProcess};

/// Library version recorded in run manifests and reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
