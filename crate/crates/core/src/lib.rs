//! Joint active and passive beamforming for a MISO link assisted by an
//! intelligent reflecting surface (IRS).
//!
//! - [`model`]: signal model, received power and MRT.
//! - [`channel`]: geometry-driven channel realizations.
//! - [`sdr`]: centralized design via semidefinite relaxation.
//! - [`alternating`]: distributed design via alternating optimization.
//! - [`baselines`]: benchmark schemes.
//! - [`sim`]: Monte Carlo sweeps, brute-force oracle and CSV output.

pub mod alternating;
pub mod baselines;
pub mod channel;
pub mod error;
pub mod model;
pub mod sdr;
pub mod sim;

pub use error::{Error, Result};
pub use model::{Beamformer, ChannelSet, PhaseConfig, SystemParams};
