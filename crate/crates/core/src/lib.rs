//! Simulator for mode-division-multiplexed optical links with
//! Kramers-Kronig receivers and a full MIMO DSP chain.
//!
//! The crate is organised by stage:
//!
//! - [`sigkit`]: frames, constellations, PRBS, RRC, FIR, resampling, Hilbert.
//! - [`txchain`]: multi-mode transmitted waveforms.
//! - [`channel`]: multi-section mode-coupling channel with calibrated MDL.
//! - [`kk`]: Kramers-Kronig front-end (square-law detection, DC bias, field recovery).
//! - [`dsp`]: frequency-offset estimation, matched filtering, MIMO equalization.
//! - [`metrics`]: GMI, FEC net rate, MDL, crosstalk matrices.
//! - [`sim`]: experiment configuration, sweeps, CSV/JSON persistence.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod channel;
pub mod dsp;
pub mod error;
pub mod kk;
pub mod matrix;
pub mod metrics;
pub mod sigkit;
pub mod sim;
pub mod txchain;

pub use error::{Error, Result};
pub use sigkit::{ComplexFrame, Constellation, C64};
