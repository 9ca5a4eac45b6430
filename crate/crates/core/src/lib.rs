//! Phase retrieval through sensor network localization.
//!
//! A signal `x ∈ Cⁿ` is read as a set of sensors in the plane (the real line for
//! real signals) with the origin as a fixed anchor. Coordinate measurements
//! `|x_k|²` are squared sensor-to-origin distances and difference measurements
//! `|x_j − x_k|²` are squared sensor-to-sensor distances. Choosing the ensemble so
//! that the induced graph is a lateration graph makes the localization unique,
//! and the positions follow in closed form.
//!
//! Modules:
//! - [`signal`]: signal type, global-phase canonical form, phase-invariant errors.
//! - [`ensemble`]: structured measurement vectors, deterministic ensembles,
//!   intensity maps, noise.
//! - [`graph`]: measurement graphs, lateration checking, complex frameworks.
//! - [`recovery`]: the closed-form real and two-stage complex recovery.
//! - [`baselines`]: Fienup-style error reduction and Wirtinger flow.
//! - [`bench`]: seeded experiment harness with CSV output.

pub mod baselines;
pub mod bench;
pub mod ensemble;
mod error;
pub mod graph;
pub mod recovery;
pub mod rng;
pub mod signal;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub use ensemble::{Ensemble, EnsembleKind, MeasurementSet, MeasurementVector};
pub use graph::{Framework, MeasurementGraph};
pub use recovery::{Anchors, RecoveryOptions};
pub use signal::Signal;
