//! Monte Carlo BER sweeps, ensemble post-SNR measurement and gap-at-BER
//! extraction.
//!
//! Every block draws its bits, channel and noise from its own RNG stream,
//! addressed by the master seed, the SNR and the block ordinal. Workers
//! simulate blocks in parallel but results are folded strictly in block
//! order, so outputs are bit-identical for any thread count.

mod config;
mod engine;
mod gap;

pub use config::{Receiver, SweepConfig, CONFIG_KEYS, MIN_BIT_ERRORS_FLOOR};
pub use engine::{
    analytic_reference_db, cell_stream_offset, curves, measure_post_snr, read_sweep_csv, run_block, run_sweep,
    run_sweep_with_progress, BlockOutcome, PostSnrReport, PostSnrStudy, SweepResult, SweepRow,
};
pub use gap::{
    gap_at_ber, gaps_to_csv, mfb_ber_bpsk, mfb_block_errors, mfb_finite_channel_curve, mfb_reference_curve, mfb_snr_samples, snr_at_ber,
    GapAtBer, MfbCurve,
};
