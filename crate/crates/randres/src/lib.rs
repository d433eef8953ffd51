//! Random feature networks and reservoir systems with importance-sampling readouts.
//!
//! The crate builds shallow ReLU networks whose hidden weights are *sampled*
//! rather than trained, and whose readout is given in closed form by an
//! importance-sampling density ratio. The same construction extends to echo
//! state networks driven by nilpotent shift reservoirs, with and without
//! output feedback. Everything is deterministic given a master seed.
//!
//! Module map:
//!
//! - [`stats`]: reproducible RNG streams, Monte Carlo and adaptive quadrature
//!   integrators, confidence intervals, log-log rate fitting.
//! - [`targets`]: approximation targets with closed-form Fourier densities and
//!   the moment functionals entering every error constant.
//! - [`repr`]: the signed density `pi(w, u)` that represents a smooth target as
//!   an integral of ReLU ridge functions over a compact support box.
//! - [`ranfeat`]: static random feature networks, hidden-weight samplers,
//!   oracle (importance-sampling) and ridge readouts, error constants and
//!   radius schedules.
//! - [`reservoir`]: shift-matrix linear reservoirs, the equivalent ReLU echo
//!   state network construction, and the Gaussian-functional rate experiment.
//! - [`feedback`]: echo state networks with output feedback (Jordan networks),
//!   empirical echo-state-property and risk-gap estimation.
//! - [`cli`]: experiment configuration, orchestration, CSV and SVG emission
//!   for the `randres` binary.

pub mod cli;
pub mod error;
pub mod feedback;
pub mod linalg;
pub mod ranfeat;
pub mod repr;
pub mod reservoir;
pub mod stats;
pub mod targets;

pub use error::{RandresError, Result};
