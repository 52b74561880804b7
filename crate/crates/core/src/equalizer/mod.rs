//! The eight receivers: {conventional, widely linear} x {ZF, MMSE} x {LE, DFE}.
//!
//! All feed-forward filtering happens per subcarrier in the frequency domain.
//! DFE feedback runs in the time domain over the circular block, with the
//! feedback taps chosen as the order-`L` prediction-error filter of the
//! companion LE's error spectrum.
//!
//! Widely linear receivers apply to real alphabets only. They filter `y(k)`
//! together with the conjugated, frequency-reversed `y*(M-k)`, which doubles
//! the number of observations of every precoded symbol. Their output is real
//! and their feedback taps are real.

mod apply;
mod spec;
mod synth;

pub use apply::{equalize_dfe, equalize_le, unbiased_post_snr, DfeOutput};
pub use spec::{Criterion, Family, FeedbackMode, ReceiverKind, ReceiverSpec, Structure, DEFAULT_ZF_EPSILON};
pub use synth::{
    mmse_dfe_conventional, mmse_le_conventional, synthesize, wl_mmse_dfe, wl_mmse_le, wl_zf_dfe, wl_zf_le,
    zf_dfe_conventional, zf_le_conventional,
};

use num_complex::Complex;

/// Filters synthesized for one channel realization.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizerFilters<T> {
    pub(crate) kind: ReceiverKind,
    /// Per-subcarrier FFF rows: `N_r` entries (conventional) or `2 N_r`
    /// entries `[w(k), w*(M-k)]` (widely linear).
    pub(crate) fff: Vec<Vec<Complex<T>>>,
    /// Time-domain feedback taps `b_t(1..=L)`; empty for linear receivers.
    pub(crate) fbf_taps: Vec<Complex<T>>,
    pub(crate) predicted_mse: T,
    pub(crate) bias_factor: T,
    pub(crate) sigma_x_sq: T,
    pub(crate) n_r: usize,
    /// LE of the same family and criterion, used to seed decision feedback.
    pub(crate) companion: Option<Box<EqualizerFilters<T>>>,
}

impl<T: Copy> EqualizerFilters<T> {
    pub fn kind(&self) -> ReceiverKind {
        self.kind
    }

    pub fn fff(&self) -> &[Vec<Complex<T>>] {
        &self.fff
    }

    pub fn fbf_taps(&self) -> &[Complex<T>] {
        &self.fbf_taps
    }

    /// MSE of the decision variable assuming error-free feedback.
    pub fn predicted_mse(&self) -> T {
        self.predicted_mse
    }

    /// Mean gain on the desired symbol; below one for MMSE filters.
    pub fn bias_factor(&self) -> T {
        self.bias_factor
    }

    pub fn sigma_x_sq(&self) -> T {
        self.sigma_x_sq
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn m(&self) -> usize {
        self.fff.len()
    }

    pub fn companion(&self) -> Option<&EqualizerFilters<T>> {
        self.companion.as_deref()
    }
}
