use num_complex::Complex;

use super::{Criterion, EqualizerFilters, Family, ReceiverKind, ReceiverSpec, Structure};
use crate::channel::ChannelRealization;
use crate::modem::Constellation;
use crate::numerics::{dct_type1, dft, idft, levinson_complex, levinson_real};
use crate::{Error, Real};

#[derive(Clone, Copy)]
struct Design<T> {
    kind: ReceiverKind,
    /// Added to the per-subcarrier channel energy: `sigma_n^2 / sigma_x^2`
    /// for MMSE, the ZF epsilon otherwise.
    reg: T,
    sigma_x_sq: T,
    sigma_n_sq: T,
    fbf_len: usize,
}

fn check_levels<T: Real>(sigma_x_sq: T, sigma_n_sq: T) -> crate::Result<()> {
    if !(sigma_x_sq > T::zero()) || !sigma_x_sq.is_finite() {
        return Err(Error::invalid(format!("symbol variance must be positive, got {sigma_x_sq}")));
    }
    if !(sigma_n_sq >= T::zero()) || !sigma_n_sq.is_finite() {
        return Err(Error::invalid(format!("noise variance must be finite and >= 0, got {sigma_n_sq}")));
    }
    Ok(())
}

fn check_epsilon<T: Real>(eps: T) -> crate::Result<()> {
    if !(eps >= T::zero()) || !eps.is_finite() {
        return Err(Error::invalid(format!("zf_epsilon must be finite and >= 0, got {eps}")));
    }
    Ok(())
}

fn check_fbf_len(family: Family, fbf_len: usize, m: usize) -> crate::Result<()> {
    let max = match family {
        Family::Conventional => m - 1,
        Family::WidelyLinear => m / 2,
    };
    if fbf_len == 0 || fbf_len > max {
        return Err(Error::invalid(format!("feedback length {fbf_len} outside 1..={max} for block size {m}")));
    }
    Ok(())
}

/// Per-subcarrier energy the filter inverts: `||h(k)||^2`, or
/// `||h(k)||^2 + ||h(M-k)||^2` when the conjugate image is also used.
fn effective_gains<T: Real>(ch: &ChannelRealization<T>, family: Family) -> Vec<T> {
    let g = ch.gains();
    let m = g.len();
    match family {
        Family::Conventional => g,
        Family::WidelyLinear => (0..m).map(|k| g[k] + g[(m - k) % m]).collect(),
    }
}

/// `(1/M) sum_k s(k) cos(2 pi k l / M)` for `l = 0..=max_lag`, with `s` even.
fn cosine_lags<T: Real>(s: &[T], max_lag: usize) -> crate::Result<Vec<T>> {
    let m = s.len();
    let scale = T::one() / T::of_usize(m);
    let mut q = if m.is_multiple_of(2) && m >= 2 {
        dct_type1(&s[..=m / 2])?
    } else {
        let c: Vec<Complex<T>> = s.iter().map(|&v| Complex::new(v, T::zero())).collect();
        idft(&c)?.into_iter().map(|v| v.re * T::of_usize(m)).collect()
    };
    q.truncate(max_lag + 1);
    Ok(q.into_iter().map(|v| v * scale).collect())
}

fn synthesize_design<T: Real>(ch: &ChannelRealization<T>, d: &Design<T>) -> crate::Result<EqualizerFilters<T>> {
    let m = ch.m();
    let n_r = ch.n_r();
    let zero = Complex::new(T::zero(), T::zero());
    let family = d.kind.family;
    let eff = effective_gains(ch, family);

    let mut inv = Vec::with_capacity(m);
    for (k, &g) in eff.iter().enumerate() {
        let denom = g + d.reg;
        if !(denom > T::zero()) || !denom.is_finite() {
            return Err(Error::SingularChannel { subcarrier: k });
        }
        inv.push(T::one() / denom);
    }

    let fbf_taps: Vec<Complex<T>> = match d.kind.structure {
        Structure::Le => Vec::new(),
        Structure::Dfe => {
            check_fbf_len(family, d.fbf_len, m)?;
            let solved = match family {
                Family::Conventional => {
                    let spec: Vec<Complex<T>> = inv.iter().map(|&v| Complex::new(v, T::zero())).collect();
                    let q = idft(&spec)?;
                    levinson_complex(&q[..=d.fbf_len], d.fbf_len).map(|p| p.taps)
                }
                Family::WidelyLinear => {
                    let q = cosine_lags(&inv, d.fbf_len)?;
                    levinson_real(&q, d.fbf_len)
                        .map(|p| p.taps.into_iter().map(|b| Complex::new(b, T::zero())).collect())
                }
            };
            solved.map_err(|e| e.context(format!("{} feedback synthesis", d.kind)))?
        }
    };

    // 1 + b(k): DFT of the monic prediction-error filter.
    let mut monic = vec![zero; m];
    monic[0] = Complex::new(T::one(), T::zero());
    monic[1..=fbf_taps.len()].copy_from_slice(&fbf_taps);
    let one_plus_b = dft(&monic)?;

    let h = ch.freq_response();
    let fff = (0..m)
        .map(|k| {
            let gain = one_plus_b[k] * inv[k];
            let mut row: Vec<Complex<T>> = (0..n_r).map(|r| h[r][k].conj() * gain).collect();
            if family == Family::WidelyLinear {
                let mk = (m - k) % m;
                row.extend((0..n_r).map(|r| h[r][mk] * gain));
            }
            row
        })
        .collect();

    let mut mse = T::zero();
    let mut bias = T::zero();
    for k in 0..m {
        mse = mse + one_plus_b[k].norm_sqr() * inv[k];
        bias = bias + one_plus_b[k].re * eff[k] * inv[k];
    }
    let scale = T::one() / T::of_usize(m);

    let companion = if d.kind.is_dfe() {
        let le = Design { kind: d.kind.linear(), fbf_len: 0, ..*d };
        Some(Box::new(synthesize_design(ch, &le)?))
    } else {
        None
    };

    Ok(EqualizerFilters {
        kind: d.kind,
        fff,
        fbf_taps,
        predicted_mse: d.sigma_n_sq * mse * scale,
        bias_factor: bias * scale,
        sigma_x_sq: d.sigma_x_sq,
        n_r,
        companion,
    })
}

fn kind(family: Family, criterion: Criterion, structure: Structure) -> ReceiverKind {
    ReceiverKind { family, criterion, structure }
}

fn mmse<T: Real>(
    ch: &ChannelRealization<T>,
    family: Family,
    structure: Structure,
    sigma_x_sq: T,
    sigma_n_sq: T,
    fbf_len: usize,
) -> crate::Result<EqualizerFilters<T>> {
    check_levels(sigma_x_sq, sigma_n_sq)?;
    let d = Design {
        kind: kind(family, Criterion::Mmse, structure),
        reg: sigma_n_sq / sigma_x_sq,
        sigma_x_sq,
        sigma_n_sq,
        fbf_len,
    };
    synthesize_design(ch, &d)
}

fn zf<T: Real>(
    ch: &ChannelRealization<T>,
    family: Family,
    structure: Structure,
    sigma_x_sq: T,
    sigma_n_sq: T,
    fbf_len: usize,
    zf_epsilon: T,
) -> crate::Result<EqualizerFilters<T>> {
    check_levels(sigma_x_sq, sigma_n_sq)?;
    check_epsilon(zf_epsilon)?;
    let d = Design { kind: kind(family, Criterion::Zf, structure), reg: zf_epsilon, sigma_x_sq, sigma_n_sq, fbf_len };
    synthesize_design(ch, &d)
}

/// Conventional MMSE linear equalizer: `w(k) = h^H(k) / (||h(k)||^2 + sigma_n^2 / sigma_x^2)`.
pub fn mmse_le_conventional<T: Real>(
    ch: &ChannelRealization<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
) -> crate::Result<EqualizerFilters<T>> {
    mmse(ch, Family::Conventional, Structure::Le, sigma_x_sq, sigma_n_sq, 0)
}

/// Conventional ZF linear equalizer. `sigma_n_sq` is only used for the MSE
/// bookkeeping.
pub fn zf_le_conventional<T: Real>(
    ch: &ChannelRealization<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
    zf_epsilon: T,
) -> crate::Result<EqualizerFilters<T>> {
    zf(ch, Family::Conventional, Structure::Le, sigma_x_sq, sigma_n_sq, 0, zf_epsilon)
}

/// Conventional MMSE-DFE with `fbf_len` feedback taps (`1..=M-1`).
pub fn mmse_dfe_conventional<T: Real>(
    ch: &ChannelRealization<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
    fbf_len: usize,
) -> crate::Result<EqualizerFilters<T>> {
    mmse(ch, Family::Conventional, Structure::Dfe, sigma_x_sq, sigma_n_sq, fbf_len)
}

/// Conventional ZF-DFE with `fbf_len` feedback taps (`1..=M-1`).
pub fn zf_dfe_conventional<T: Real>(
    ch: &ChannelRealization<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
    fbf_len: usize,
    zf_epsilon: T,
) -> crate::Result<EqualizerFilters<T>> {
    zf(ch, Family::Conventional, Structure::Dfe, sigma_x_sq, sigma_n_sq, fbf_len, zf_epsilon)
}

/// Widely linear MMSE-LE for real alphabets.
pub fn wl_mmse_le<T: Real>(ch: &ChannelRealization<T>, sigma_x_sq: T, sigma_n_sq: T) -> crate::Result<EqualizerFilters<T>> {
    mmse(ch, Family::WidelyLinear, Structure::Le, sigma_x_sq, sigma_n_sq, 0)
}

/// Widely linear ZF-LE for real alphabets.
pub fn wl_zf_le<T: Real>(
    ch: &ChannelRealization<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
    zf_epsilon: T,
) -> crate::Result<EqualizerFilters<T>> {
    zf(ch, Family::WidelyLinear, Structure::Le, sigma_x_sq, sigma_n_sq, 0, zf_epsilon)
}

/// Widely linear MMSE-DFE with real feedback taps (`1..=M/2`).
pub fn wl_mmse_dfe<T: Real>(
    ch: &ChannelRealization<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
    fbf_len: usize,
) -> crate::Result<EqualizerFilters<T>> {
    mmse(ch, Family::WidelyLinear, Structure::Dfe, sigma_x_sq, sigma_n_sq, fbf_len)
}

/// Widely linear ZF-DFE with real feedback taps (`1..=M/2`).
pub fn wl_zf_dfe<T: Real>(
    ch: &ChannelRealization<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
    fbf_len: usize,
    zf_epsilon: T,
) -> crate::Result<EqualizerFilters<T>> {
    zf(ch, Family::WidelyLinear, Structure::Dfe, sigma_x_sq, sigma_n_sq, fbf_len, zf_epsilon)
}

/// Synthesizes whichever receiver `spec` names. Widely linear receivers
/// require a real constellation.
pub fn synthesize<T: Real>(
    spec: &ReceiverSpec,
    ch: &ChannelRealization<T>,
    constellation: &Constellation<T>,
    sigma_x_sq: T,
    sigma_n_sq: T,
) -> crate::Result<EqualizerFilters<T>> {
    spec.validate()?;
    let k = spec.kind;
    if k.is_wl() && !constellation.is_real() {
        return Err(Error::invalid(format!("{k} needs a real constellation, not {}", constellation.modulation())));
    }
    match k.criterion {
        Criterion::Mmse => mmse(ch, k.family, k.structure, sigma_x_sq, sigma_n_sq, spec.fbf_len),
        Criterion::Zf => zf(ch, k.family, k.structure, sigma_x_sq, sigma_n_sq, spec.fbf_len, T::of(spec.zf_epsilon)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::draw_channel;
    use crate::equalizer::{FeedbackMode, DEFAULT_ZF_EPSILON};
    use crate::modem::Modulation;
    use crate::numerics::RngStream;
    use crate::oracle;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    fn channel(seed: u64, n_r: usize, v: usize, m: usize) -> ChannelRealization<f64> {
        draw_channel(&mut RngStream::new(seed, 0), n_r, v, m).unwrap()
    }

    #[test]
    fn flat_mmse_le_closed_form() {
        let h = c(0.6, -0.8);
        let ch = ChannelRealization::flat(h, 1, 16).unwrap();
        let f = mmse_le_conventional(&ch, 1.0, 0.25).unwrap();
        let expect = h.conj() / 1.25;
        assert!(f.fff().iter().all(|row| (row[0] - expect).norm() < 1e-14));
        assert!((f.predicted_mse() - 0.2).abs() < 1e-14);
        assert!((f.bias_factor() - 0.8).abs() < 1e-14);
        assert!((unbiased(&f) - 4.0).abs() < 1e-12);
    }

    fn unbiased(f: &EqualizerFilters<f64>) -> f64 {
        crate::equalizer::unbiased_post_snr(f, f.kind().criterion)
    }

    #[test]
    fn flat_channel_needs_no_feedback() {
        let ch = ChannelRealization::flat(c(1.0, 0.0), 2, 32).unwrap();
        let dfe = mmse_dfe_conventional(&ch, 1.0, 0.1, 4).unwrap();
        let le = mmse_le_conventional(&ch, 1.0, 0.1).unwrap();
        assert!(dfe.fbf_taps().iter().all(|b| b.norm() < 1e-14));
        assert!((dfe.predicted_mse() - le.predicted_mse()).abs() < 1e-14);
        let wl = wl_zf_dfe(&ch, 1.0, 0.1, 4, 0.0).unwrap();
        assert!(wl.fbf_taps().iter().all(|b| b.norm() < 1e-14));
        // two antennas, two images: ZF error 0.1 / 4
        assert!((wl.predicted_mse() - 0.025).abs() < 1e-14);
    }

    #[test]
    fn widely_linear_rows_pair_conjugate_images() {
        let ch = channel(5, 2, 6, 32);
        let f = wl_mmse_dfe(&ch, 1.0, 0.05, 5).unwrap();
        let h = ch.freq_response();
        let g = ch.gains();
        for k in 0..32 {
            let mk = (32 - k) % 32;
            let row = &f.fff()[k];
            assert_eq!(row.len(), 4);
            // both halves share the factor (1 + b(k)) / P(k)
            let ratio0 = row[0] / h[0][k].conj();
            let ratio2 = row[2] / h[0][mk];
            assert!((ratio0 - ratio2).norm() < 1e-12 * ratio0.norm());
            let p = g[k] + g[mk] + 0.05;
            let mirror = f.fff()[mk][0] / h[0][mk].conj();
            // real taps: (1 + b(M-k)) = conj(1 + b(k))
            assert!((mirror * p - (ratio0 * p).conj()).norm() < 1e-10);
        }
        assert!(f.fbf_taps().iter().all(|b| b.im == 0.0));
    }

    #[test]
    fn feedback_matches_dense_solve() {
        let ch = channel(11, 1, 20, 512);
        for eps_zf in [false, true] {
            let f = if eps_zf {
                zf_dfe_conventional(&ch, 1.0, 0.01, 20, DEFAULT_ZF_EPSILON).unwrap()
            } else {
                mmse_dfe_conventional(&ch, 1.0, 0.01, 20).unwrap()
            };
            let reg = if eps_zf { DEFAULT_ZF_EPSILON } else { 0.01 };
            let spec: Vec<Complex<f64>> = ch.gains().iter().map(|g| c(1.0 / (g + reg), 0.0)).collect();
            let conj: Vec<_> = spec.iter().map(|v| v.conj()).collect();
            let q: Vec<Complex<f64>> = oracle::naive_dft(&conj).into_iter().map(|v| v.conj() / 512.0).collect();
            let dense = oracle::dense_prediction_taps(&q, 20).unwrap();
            let scale = dense.iter().map(|b| b.norm()).fold(0.0, f64::max);
            for (a, b) in f.fbf_taps().iter().zip(&dense) {
                assert!((a - b).norm() < 1e-8 * scale.max(1.0), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn widely_linear_feedback_matches_dense_solve() {
        for m in [64, 63] {
            let ch = channel(12, 2, 8, m);
            let f = wl_mmse_dfe(&ch, 1.0, 0.02, 10).unwrap();
            let g = ch.gains();
            let s: Vec<f64> = (0..m).map(|k| 1.0 / (g[k] + g[(m - k) % m] + 0.02)).collect();
            let q = oracle::cosine_autocov(&s);
            let dense = oracle::dense_prediction_taps_real(&q, 10).unwrap();
            for (a, b) in f.fbf_taps().iter().zip(&dense) {
                assert!((a.re - b).abs() < 1e-10, "m={m}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn mmse_feedback_whitens_the_error() {
        // With L >= v - 1 the MMSE error spectrum is exactly all-pole, so the
        // residual after prediction is white.
        let ch = channel(21, 1, 8, 512);
        let f = mmse_dfe_conventional(&ch, 1.0, 0.05, 7).unwrap();
        let g = ch.gains();
        let mut monic = vec![c(0.0, 0.0); 512];
        monic[0] = c(1.0, 0.0);
        monic[1..8].copy_from_slice(f.fbf_taps());
        let b = dft(&monic).unwrap();
        let resid: Vec<Complex<f64>> = (0..512).map(|k| c(b[k].norm_sqr() / (g[k] + 0.05), 0.0)).collect();
        let r = idft(&resid).unwrap();
        for lag in 1..=7 {
            assert!(r[lag].norm() < 1e-10 * r[0].norm(), "lag {lag}: {}", r[lag] / r[0]);
        }
    }

    #[test]
    fn mse_shrinks_with_feedback_length() {
        let ch = channel(31, 1, 10, 128);
        let le = mmse_le_conventional(&ch, 1.0, 0.1).unwrap().predicted_mse();
        let mut prev = le;
        for l in 1..=12 {
            let mse = mmse_dfe_conventional(&ch, 1.0, 0.1, l).unwrap().predicted_mse();
            assert!(mse <= prev * (1.0 + 1e-12), "L={l}: {mse} > {prev}");
            prev = mse;
        }
        let wl_le = wl_zf_le(&ch, 1.0, 0.1, 1e-12).unwrap().predicted_mse();
        let wl_dfe = wl_zf_dfe(&ch, 1.0, 0.1, 12, 1e-12).unwrap().predicted_mse();
        assert!(wl_dfe <= wl_le);
    }

    #[test]
    fn mmse_tends_to_zf_at_high_snr() {
        let ch = channel(41, 2, 6, 64);
        let sn = 1e-8;
        let mmse = mmse_dfe_conventional(&ch, 1.0, sn, 5).unwrap();
        let zf = zf_dfe_conventional(&ch, 1.0, sn, 5, 0.0).unwrap();
        let ratio = unbiased(&mmse) / unbiased(&zf);
        assert!((ratio - 1.0).abs() < 1e-4, "{ratio}");
    }

    #[test]
    fn feedback_length_bounds() {
        let ch = channel(1, 1, 4, 16);
        assert!(mmse_dfe_conventional(&ch, 1.0, 0.1, 15).is_ok());
        assert!(mmse_dfe_conventional(&ch, 1.0, 0.1, 16).is_err());
        assert!(mmse_dfe_conventional(&ch, 1.0, 0.1, 0).is_err());
        assert!(wl_mmse_dfe(&ch, 1.0, 0.1, 8).is_ok());
        assert!(wl_mmse_dfe(&ch, 1.0, 0.1, 9).is_err());
    }

    #[test]
    fn singular_channel_without_regularization() {
        let ch = ChannelRealization::from_taps(vec![vec![c(1.0, 0.0), c(1.0, 0.0)]], 8).unwrap();
        // 1 + e^{-j pi k / 4 * 4} vanishes at k = 4
        let err = zf_le_conventional(&ch, 1.0, 0.1, 0.0).unwrap_err();
        assert!(matches!(err, Error::SingularChannel { subcarrier: 4 }));
        assert!(zf_le_conventional(&ch, 1.0, 0.1, 1e-6).is_ok());
        assert!(zf_le_conventional(&ch, 1.0, 0.1, -1.0).is_err());
        assert!(mmse_le_conventional(&ch, 0.0, 0.1).is_err());
    }

    #[test]
    fn widely_linear_needs_real_alphabet() {
        let ch = channel(2, 1, 4, 16);
        let spec = ReceiverSpec::new("wl-mmse-le".parse().unwrap(), 0, FeedbackMode::Genie);
        let qam = Constellation::new(Modulation::Qam16);
        assert!(synthesize(&spec, &ch, &qam, 1.0, 0.1).is_err());
        let bpsk = Constellation::new(Modulation::Bpsk);
        assert!(synthesize(&spec, &ch, &bpsk, 1.0, 0.1).is_ok());
    }

    #[test]
    fn single_precision_agrees() {
        let ch64 = channel(3, 2, 5, 64);
        let taps32: Vec<Vec<Complex<f32>>> =
            ch64.taps().iter().map(|r| r.iter().map(|v| Complex::new(v.re as f32, v.im as f32)).collect()).collect();
        let ch32 = ChannelRealization::from_taps(taps32, 64).unwrap();
        let a = wl_mmse_dfe(&ch64, 1.0, 0.1, 4).unwrap().predicted_mse();
        let b = wl_mmse_dfe(&ch32, 1.0f32, 0.1, 4).unwrap().predicted_mse();
        assert!((a - b as f64).abs() < 1e-5 * a);
    }
}
