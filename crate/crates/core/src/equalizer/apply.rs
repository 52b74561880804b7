use num_complex::Complex;

use super::{Criterion, EqualizerFilters, FeedbackMode};
use crate::modem::Constellation;
use crate::numerics::idft;
use crate::{Error, Real};

/// Soft outputs and decisions of a DFE pass over one block.
#[derive(Debug, Clone, PartialEq)]
pub struct DfeOutput<T> {
    /// Decision variable per time index, after feedback subtraction.
    pub soft: Vec<Complex<T>>,
    /// Constellation label decided at each index.
    pub labels: Vec<usize>,
}

/// Applies the FFF on every subcarrier and returns the time-domain output.
///
/// For a DFE filter set this is the FFF output before feedback. For widely
/// linear filters the imaginary part of the result is numerically zero.
pub fn equalize_le<T: Real>(filters: &EqualizerFilters<T>, received: &[Vec<Complex<T>>]) -> crate::Result<Vec<Complex<T>>> {
    let m = filters.m();
    let n_r = filters.n_r();
    if received.len() != n_r {
        return Err(Error::invalid(format!("filters expect {n_r} antennas, got {}", received.len())));
    }
    if let Some(row) = received.iter().find(|r| r.len() != m) {
        return Err(Error::invalid(format!("received row has {} subcarriers, filters have {m}", row.len())));
    }
    let wl = filters.kind().is_wl();
    let z: Vec<Complex<T>> = (0..m)
        .map(|k| {
            let w = &filters.fff[k];
            let mut acc = Complex::new(T::zero(), T::zero());
            for r in 0..n_r {
                acc = acc + w[r] * received[r][k];
            }
            if wl {
                let mk = (m - k) % m;
                for r in 0..n_r {
                    acc = acc + w[n_r + r] * received[r][mk].conj();
                }
            }
            acc
        })
        .collect();
    idft(&z)
}

/// Runs the feedback loop over the circular block.
///
/// Indices before the start of the block wrap to its tail. With genie
/// feedback those samples are the transmitted symbols in `genie`; with
/// decision feedback they are the companion LE's decisions.
pub fn equalize_dfe<T: Real>(
    filters: &EqualizerFilters<T>,
    received: &[Vec<Complex<T>>],
    mode: FeedbackMode,
    genie: Option<&[Complex<T>]>,
    constellation: &Constellation<T>,
) -> crate::Result<DfeOutput<T>> {
    let kind = filters.kind();
    if !kind.is_dfe() {
        return Err(Error::invalid(format!("{kind} has no feedback section")));
    }
    if kind.is_wl() && !constellation.is_real() {
        return Err(Error::invalid(format!("{kind} needs a real constellation")));
    }
    let m = filters.m();
    let mut z = equalize_le(filters, received)?;
    if kind.is_wl() {
        for v in z.iter_mut() {
            v.im = T::zero();
        }
    }

    let mut fed: Vec<Complex<T>> = match mode {
        FeedbackMode::Genie => {
            let g = genie.ok_or_else(|| Error::invalid("genie feedback needs the transmitted symbols"))?;
            if g.len() != m {
                return Err(Error::invalid(format!("genie block has {} symbols, expected {m}", g.len())));
            }
            g.to_vec()
        }
        FeedbackMode::DecisionDirected => {
            let le = filters.companion().ok_or_else(|| Error::invalid("DFE filters lack a companion LE"))?;
            let pts = constellation.points();
            equalize_le(le, received)?.into_iter().map(|v| pts[constellation.decide(v)]).collect()
        }
    };

    let taps = filters.fbf_taps();
    let mut soft = Vec::with_capacity(m);
    let mut labels = Vec::with_capacity(m);
    for l in 0..m {
        let mut isi = Complex::new(T::zero(), T::zero());
        for (i, b) in taps.iter().enumerate() {
            isi = isi + *b * fed[(l + m - 1 - i) % m];
        }
        let s = z[l] - isi;
        let label = constellation.decide(s);
        if mode == FeedbackMode::DecisionDirected {
            fed[l] = constellation.points()[label];
        }
        soft.push(s);
        labels.push(label);
    }
    Ok(DfeOutput { soft, labels })
}

/// Unbiased decision-point SNR: `sigma_x^2 / mse - 1` for MMSE filters,
/// `sigma_x^2 / mse` for ZF.
pub fn unbiased_post_snr<T: Real>(filters: &EqualizerFilters<T>, criterion: Criterion) -> T {
    let raw = filters.sigma_x_sq() / filters.predicted_mse();
    match criterion {
        Criterion::Mmse => raw - T::one(),
        Criterion::Zf => raw,
    }
}
