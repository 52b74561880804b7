use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Receiver, SweepConfig};
use crate::analytics::{limit_snr, mmse_dfe_limit_snr_mc, wl_mmse_dfe_limit_snr_mc, LimitInputs, LimitReceiver};
use crate::channel::{apply_channel_freq, draw_channel, ChannelRealization, NoiseSpec};
use crate::equalizer::{
    equalize_dfe, equalize_le, synthesize, Criterion, FeedbackMode, Family, ReceiverKind, ReceiverSpec, Structure,
};
use crate::modem::{map_bits, precode, Constellation, Modulation};
use crate::numerics::RngStream;
use crate::{Complex, Error};

/// Blocks handed to the worker pool at a time. Results are folded in block
/// order, so this only affects how much work is wasted past the stop point.
const BATCH: u64 = 32;

/// Consecutive singular channel draws tolerated within one block.
const MAX_REDRAWS: u32 = 1000;

/// Samples behind the Monte Carlo MMSE-DFE reference column.
const ANALYTIC_MC_SAMPLES: usize = 200_000;

/// Stream reserved for that reference; block streams never reach it because
/// their low 32 bits count blocks.
const ANALYTIC_STREAM: u64 = u64::MAX;

/// Outcome of one simulated block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockOutcome {
    pub bit_errors: u64,
    pub bits: u64,
    /// Mean `|soft - x|^2` before the slicer; from the genie path for DFEs.
    pub mse_sample: f64,
    /// Channel draws discarded as singular.
    pub redraws: u32,
}

/// One `(receiver, snr)` cell of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub receiver: String,
    pub snr_db: f64,
    pub bits: u64,
    pub errors: u64,
    pub ber: f64,
    /// Unbiased post-SNR from the mean of the per-block MSE samples.
    pub post_snr_db: f64,
    /// Limiting-channel reference, where one exists.
    pub analytic_db: Option<f64>,
    pub blocks: u64,
    /// Set when `max_blocks` ran out before `min_bit_errors` was reached.
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// High 32 bits of the stream index for every block at `snr_db`.
///
/// Depends on the SNR only, so all receivers at one SNR see the same bits,
/// channels and noise (common random numbers); distinct SNRs get unrelated
/// streams.
pub fn cell_stream_offset(snr_db: f64) -> u64 {
    let h = splitmix64(snr_db.to_bits()) & 0xffff_ffff_0000_0000;
    if h == ANALYTIC_STREAM & 0xffff_ffff_0000_0000 {
        0
    } else {
        h
    }
}

fn stream_for(config: &SweepConfig, snr_db: f64, trial_index: u64) -> crate::Result<RngStream> {
    if trial_index > u32::MAX as u64 {
        return Err(Error::invalid(format!("trial index {trial_index} exceeds 2^32")));
    }
    Ok(RngStream::new(config.master_seed, cell_stream_offset(snr_db) | trial_index))
}

fn redraw_guard<T>(
    stream: &mut RngStream,
    config: &SweepConfig,
    mut make: impl FnMut(&ChannelRealization<f64>) -> crate::Result<T>,
) -> crate::Result<(ChannelRealization<f64>, T, u32)> {
    let mut redraws = 0;
    loop {
        let ch = draw_channel(stream, config.n_r, config.v, config.m)?;
        match make(&ch) {
            Ok(t) => return Ok((ch, t, redraws)),
            Err(Error::SingularChannel { .. }) if redraws < MAX_REDRAWS => redraws += 1,
            Err(e) => return Err(e),
        }
    }
}

fn mean_error(soft: &[Complex<f64>], x: &[Complex<f64>]) -> f64 {
    let mut acc = CompensatedSum::default();
    for (s, t) in soft.iter().zip(x) {
        acc.add((s - t).norm_sqr());
    }
    acc.value() / soft.len() as f64
}

/// Simulates one block: bits, mapping, precoding, a fresh channel, the
/// frequency-domain received signal, filter synthesis, equalization and
/// slicing. Fully determined by `(master_seed, snr_db, trial_index)`.
///
/// A singular channel is redrawn from the same stream and counted in
/// `redraws`.
pub fn run_block(
    trial_index: u64,
    config: &SweepConfig,
    receiver: &Receiver,
    snr_db: f64,
) -> crate::Result<BlockOutcome> {
    let c = Constellation::<f64>::new(config.constellation);
    let m = config.m;
    let mut s = stream_for(config, snr_db, trial_index)?;
    let bits = s.bits(m * c.bits_per_symbol());
    let x = map_bits(&bits, &c)?;
    let noise = NoiseSpec::<f64>::from_snr_db(snr_db);
    let sigma_n_sq = noise.sigma_n_sq;

    let (soft, labels, mse_sample, redraws) = match receiver {
        Receiver::Mfb => {
            let (ch, energy, redraws) = redraw_guard(&mut s, config, |ch| {
                let e = ch.energy();
                if e > 0.0 {
                    Ok(e)
                } else {
                    Err(Error::SingularChannel { subcarrier: 0 })
                }
            })?;
            let _ = ch;
            let soft: Vec<Complex<f64>> = if sigma_n_sq > 0.0 {
                let w = s.gaussian_complex(m, sigma_n_sq / energy)?;
                x.iter().zip(w).map(|(a, b)| a + b).collect()
            } else {
                x.clone()
            };
            let labels: Vec<usize> = soft.iter().map(|&z| c.decide(z)).collect();
            let mse = mean_error(&soft, &x);
            (soft, labels, mse, redraws)
        }
        Receiver::Equalizer(spec) => {
            let (ch, filters, redraws) = redraw_guard(&mut s, config, |ch| synthesize(spec, ch, &c, 1.0, sigma_n_sq))?;
            let block = precode(&x)?;
            let y = apply_channel_freq(&block.precoded, &ch, noise, &mut s)?;
            if spec.kind.is_dfe() {
                let genie = equalize_dfe(&filters, &y, FeedbackMode::Genie, Some(&x), &c)?;
                let mse = mean_error(&genie.soft, &x);
                match spec.feedback {
                    FeedbackMode::Genie => (genie.soft, genie.labels, mse, redraws),
                    FeedbackMode::DecisionDirected => {
                        let dd = equalize_dfe(&filters, &y, FeedbackMode::DecisionDirected, None, &c)?;
                        (dd.soft, dd.labels, mse, redraws)
                    }
                }
            } else {
                let mut z = equalize_le(&filters, &y)?;
                if spec.kind.is_wl() {
                    z.iter_mut().for_each(|v| v.im = 0.0);
                }
                let labels = z.iter().map(|&v| c.decide(v)).collect();
                let mse = mean_error(&z, &x);
                (z, labels, mse, redraws)
            }
        }
    };
    debug_assert_eq!(soft.len(), m);

    let k = c.bits_per_symbol();
    let mut errors = 0u64;
    for (i, &label) in labels.iter().enumerate() {
        let tx = &bits[i * k..(i + 1) * k];
        errors += c.bit_label(label).iter().zip(tx).filter(|(a, b)| a != b).count() as u64;
    }
    Ok(BlockOutcome { bit_errors: errors, bits: bits.len() as u64, mse_sample, redraws })
}

fn criterion_of(receiver: &Receiver) -> Option<Criterion> {
    match receiver {
        Receiver::Equalizer(spec) => Some(spec.kind.criterion),
        Receiver::Mfb => None,
    }
}

/// Limiting-channel reference for a receiver at `snr_db`, in dB.
///
/// ZF receivers use the closed-form limits (complex-noise version for
/// conventional receivers, to match the MSE they report). MMSE-DFEs use a
/// Monte Carlo evaluation of the log-mean formula. MMSE-LEs have none.
pub fn analytic_reference_db(config: &SweepConfig, receiver: &Receiver, snr_db: f64) -> crate::Result<Option<f64>> {
    let r = 10f64.powf(snr_db / 10.0);
    let lin = match receiver {
        Receiver::Mfb => Some(config.n_r as f64 * r),
        Receiver::Equalizer(spec) => {
            let ReceiverKind { family, criterion, structure } = spec.kind;
            let wl = family == Family::WidelyLinear;
            match (criterion, structure) {
                (Criterion::Zf, _) => {
                    let which = match (wl, structure) {
                        (false, Structure::Le) => LimitReceiver::ConvZfLe,
                        (false, Structure::Dfe) => LimitReceiver::ConvZfDfe,
                        (true, Structure::Le) => LimitReceiver::WlZfLe,
                        (true, Structure::Dfe) => LimitReceiver::WlZfDfe,
                    };
                    match limit_snr(which, &LimitInputs::at_snr(config.n_r, r, wl)) {
                        Ok(v) => Some(v),
                        Err(Error::Domain(_)) => None,
                        Err(e) => return Err(e),
                    }
                }
                (Criterion::Mmse, Structure::Dfe) => {
                    let mut s = RngStream::new(config.master_seed, ANALYTIC_STREAM);
                    Some(if wl {
                        wl_mmse_dfe_limit_snr_mc(config.n_r, r, ANALYTIC_MC_SAMPLES, &mut s)?
                    } else {
                        mmse_dfe_limit_snr_mc(config.n_r, r, ANALYTIC_MC_SAMPLES, &mut s)?
                    })
                }
                (Criterion::Mmse, Structure::Le) => None,
            }
        }
    };
    Ok(lin.map(|v| 10.0 * v.log10()))
}

fn build_pool(width: usize) -> crate::Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(width)
        .build()
        .map_err(|e| Error::invalid(format!("could not start {width} worker threads: {e}")))
}

fn run_cell(
    config: &SweepConfig,
    receiver: &Receiver,
    snr_db: f64,
    pool: &rayon::ThreadPool,
) -> crate::Result<SweepRow> {
    let mut bits = 0u64;
    let mut errors = 0u64;
    let mut blocks = 0u64;
    let mut mse = CompensatedSum::default();
    let mut next = 0u64;
    'outer: while blocks < config.max_blocks {
        let end = (next + BATCH).min(config.max_blocks);
        let outcomes: Vec<BlockOutcome> = pool.install(|| {
            (next..end).into_par_iter().map(|i| run_block(i, config, receiver, snr_db)).collect::<crate::Result<_>>()
        })?;
        next = end;
        for o in outcomes {
            bits += o.bits;
            errors += o.bit_errors;
            blocks += 1;
            mse.add(o.mse_sample);
            if errors >= config.min_bit_errors {
                break 'outer;
            }
        }
    }
    let mean_mse = mse.value() / blocks as f64;
    let mut snr = 1.0 / mean_mse;
    if criterion_of(receiver) == Some(Criterion::Mmse) {
        snr -= 1.0;
    }
    Ok(SweepRow {
        receiver: receiver.label(),
        snr_db,
        bits,
        errors,
        ber: errors as f64 / bits as f64,
        post_snr_db: 10.0 * snr.log10(),
        analytic_db: analytic_reference_db(config, receiver, snr_db)?,
        blocks,
        capped: errors < config.min_bit_errors,
    })
}

/// Runs every `(receiver, snr)` cell, in configured receiver order and
/// ascending SNR. Each cell accumulates blocks until `min_bit_errors` or
/// `max_blocks`. The result does not depend on `parallel_width`.
pub fn run_sweep(config: &SweepConfig) -> crate::Result<SweepResult> {
    run_sweep_with_progress(config, |_| {})
}

/// [`run_sweep`] with a callback invoked after each finished cell.
pub fn run_sweep_with_progress(
    config: &SweepConfig,
    mut progress: impl FnMut(&SweepRow),
) -> crate::Result<SweepResult> {
    config.validate()?;
    let receivers = config.parsed_receivers()?;
    let pool = build_pool(config.parallel_width)?;
    let mut rows = Vec::with_capacity(receivers.len() * config.snr_grid_db.len());
    for receiver in &receivers {
        for &snr_db in &config.snr_grid_db {
            let row = run_cell(config, receiver, snr_db, &pool)
                .map_err(|e| e.context(format!("{receiver} at {snr_db} dB")))?;
            progress(&row);
            rows.push(row);
        }
    }
    Ok(SweepResult { config: config.clone(), rows })
}

impl SweepResult {
    /// CSV with one row per cell; `analytic_db` is empty where undefined.
    pub fn write_csv<W: Write>(&self, out: W) -> crate::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> crate::Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// `(snr_db, ber)` points per receiver, in row order.
    pub fn curves(&self) -> Vec<(String, Vec<(f64, f64)>)> {
        curves(&self.rows)
    }
}

/// Groups rows into `(snr_db, ber)` curves, keeping first-seen receiver order.
pub fn curves(rows: &[SweepRow]) -> Vec<(String, Vec<(f64, f64)>)> {
    let mut out: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in rows {
        match out.iter_mut().find(|(name, _)| *name == row.receiver) {
            Some((_, pts)) => pts.push((row.snr_db, row.ber)),
            None => out.push((row.receiver.clone(), vec![(row.snr_db, row.ber)])),
        }
    }
    out
}

/// Reads rows written by [`SweepResult::write_csv`].
pub fn read_sweep_csv<R: Read>(input: R) -> crate::Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Settings for a channel-ensemble post-SNR measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PostSnrStudy {
    pub receiver: ReceiverSpec,
    pub constellation: Modulation,
    pub n_r: usize,
    pub v: usize,
    pub m: usize,
    pub snr_db: f64,
    pub realizations: u64,
    pub master_seed: u64,
    pub parallel_width: usize,
}

impl PostSnrStudy {
    /// Single-antenna, 20-tap, 512-subcarrier setup at 30 dB with a
    /// 20-tap feedback filter where applicable.
    pub fn new(receiver: ReceiverSpec, n_r: usize) -> Self {
        Self {
            receiver,
            constellation: Modulation::Bpsk,
            n_r,
            v: 20,
            m: 512,
            snr_db: 30.0,
            realizations: 5000,
            master_seed: 1,
            parallel_width: 1,
        }
    }
}

/// Ensemble post-SNR from the filters' conditional MSE.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostSnrReport {
    pub receiver: String,
    pub n_r: usize,
    pub snr_db: f64,
    pub realizations: u64,
    pub mean_mse: f64,
    /// Unbiased post-SNR, `1/mean_mse` less one for MMSE.
    pub post_snr: f64,
    pub post_snr_db: f64,
    /// Post-SNR divided by `sigma_x^2 / sigma_n^2`.
    pub normalized: f64,
    pub analytic_db: Option<f64>,
}

/// Averages the predicted MSE of the synthesized filters over independent
/// channel draws.
pub fn measure_post_snr(study: &PostSnrStudy) -> crate::Result<PostSnrReport> {
    if study.realizations == 0 {
        return Err(Error::invalid("need at least one realization"));
    }
    let config = SweepConfig {
        constellation: study.constellation,
        receivers: vec![study.receiver.label()],
        feedback: study.receiver.feedback,
        fbf_len: study.receiver.fbf_len.max(1),
        n_r: study.n_r,
        v: study.v,
        m: study.m,
        snr_grid_db: vec![study.snr_db],
        master_seed: study.master_seed,
        parallel_width: study.parallel_width,
        zf_epsilon: study.receiver.zf_epsilon,
        ..SweepConfig::default()
    };
    config.validate()?;
    let c = Constellation::<f64>::new(study.constellation);
    let sigma_n_sq = NoiseSpec::<f64>::from_snr_db(study.snr_db).sigma_n_sq;
    let pool = build_pool(study.parallel_width)?;
    let spec = &study.receiver;
    let samples: Vec<f64> = pool.install(|| {
        (0..study.realizations)
            .into_par_iter()
            .map(|i| {
                let mut s = stream_for(&config, study.snr_db, i)?;
                let (_, f, _) = redraw_guard(&mut s, &config, |ch| synthesize(spec, ch, &c, 1.0, sigma_n_sq))?;
                Ok(f.predicted_mse())
            })
            .collect::<crate::Result<_>>()
    })?;
    let mut acc = CompensatedSum::default();
    samples.iter().for_each(|&v| acc.add(v));
    let mean_mse = acc.value() / study.realizations as f64;
    let mut post = 1.0 / mean_mse;
    if spec.kind.criterion == Criterion::Mmse {
        post -= 1.0;
    }
    let r = 1.0 / sigma_n_sq;
    Ok(PostSnrReport {
        receiver: spec.label(),
        n_r: study.n_r,
        snr_db: study.snr_db,
        realizations: study.realizations,
        mean_mse,
        post_snr: post,
        post_snr_db: 10.0 * post.log10(),
        normalized: post / r,
        analytic_db: analytic_reference_db(&config, &Receiver::Equalizer(*spec), study.snr_db)?,
    })
}
