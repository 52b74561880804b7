//! Link-level simulation of DFT-precoded OFDM (SC-FDMA) receivers.
//!
//! The crate covers eight equalizers, conventional and widely linear, each
//! with zero-forcing or MMSE filters and a linear or decision-feedback
//! structure. Filters are synthesized per channel realization in the
//! frequency domain, with the feedback filter obtained from a
//! Levinson-Durbin solve of the error autocovariance. On top of that sit
//! closed-form limiting post-SNR formulas for an i.i.d. Rayleigh channel
//! with many taps, and a deterministic Monte Carlo engine for BER sweeps.
//!
//! The signal-processing path is generic over the real scalar type (see
//! [`Real`]); the aliases at the crate root fix it to `f64`, which is what
//! the simulator and the CLI use.

// Argument checks are written `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod channel;
pub mod equalizer;
mod error;
pub mod modem;
pub mod numerics;
pub mod oracle;
mod scalar;
pub mod selftest;
pub mod simulator;

pub use error::{Error, Result};
pub use num_complex::Complex;
pub use scalar::Real;

/// Double-precision channel realization.
pub type ChannelRealization64 = channel::ChannelRealization<f64>;
/// Single-precision channel realization.
pub type ChannelRealization32 = channel::ChannelRealization<f32>;
/// Double-precision constellation.
pub type Constellation64 = modem::Constellation<f64>;
/// Single-precision constellation.
pub type Constellation32 = modem::Constellation<f32>;
/// Double-precision equalizer filters.
pub type EqualizerFilters64 = equalizer::EqualizerFilters<f64>;
/// Single-precision equalizer filters.
pub type EqualizerFilters32 = equalizer::EqualizerFilters<f32>;
/// Double-precision symbol block.
pub type SymbolBlock64 = modem::SymbolBlock<f64>;
/// Double-precision noise level.
pub type NoiseSpec64 = channel::NoiseSpec<f64>;
