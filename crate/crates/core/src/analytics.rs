//! Limiting post-SNR of ZF receivers in an i.i.d. Rayleigh channel with
//! unbounded memory, plus the chi-square statistics behind them.
//!
//! In that limit `||h(k)||^2` on each subcarrier is a sum of `N_r` unit-mean
//! exponentials. The ZF-DFE post-SNR is `r exp(E ln ||h||^2)`, the ZF-LE
//! post-SNR is `r / E[1/||h||^2]`, and the MFB is `N_r r`, with
//! `r = sigma_x^2 / sigma_n^2`. Widely linear receivers see `2 N_r`
//! exponentials per subcarrier. For real alphabets only the real part of the
//! noise matters, which doubles every conventional figure and the MFB.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::numerics::RngStream;
use crate::Error;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Receivers with a closed-form limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LimitReceiver {
    ConvZfLe,
    ConvZfDfe,
    WlZfLe,
    WlZfDfe,
    Mfb,
}

impl LimitReceiver {
    /// The four equalizers, in table order.
    pub const EQUALIZERS: [LimitReceiver; 4] =
        [LimitReceiver::ConvZfLe, LimitReceiver::ConvZfDfe, LimitReceiver::WlZfLe, LimitReceiver::WlZfDfe];

    pub fn name(self) -> &'static str {
        match self {
            LimitReceiver::ConvZfLe => "conv-zf-le",
            LimitReceiver::ConvZfDfe => "conv-zf-dfe",
            LimitReceiver::WlZfLe => "wl-zf-le",
            LimitReceiver::WlZfDfe => "wl-zf-dfe",
            LimitReceiver::Mfb => "mfb",
        }
    }

    pub fn is_wl(self) -> bool {
        matches!(self, LimitReceiver::WlZfLe | LimitReceiver::WlZfDfe)
    }
}

impl fmt::Display for LimitReceiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for LimitReceiver {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl FromStr for LimitReceiver {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let canonical = if lower.starts_with("wl-") || lower.starts_with("conv-") || lower == "mfb" {
            lower
        } else {
            format!("conv-{lower}")
        };
        [LimitReceiver::Mfb].into_iter().chain(LimitReceiver::EQUALIZERS).find(|r| r.name() == canonical).ok_or_else(
            || {
                Error::invalid(format!(
                    "no closed-form limit for {s:?}; expected conv-zf-le, conv-zf-dfe, wl-zf-le, wl-zf-dfe or mfb"
                ))
            },
        )
    }
}

/// Operating point for the limit formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitInputs {
    pub n_r: usize,
    pub sigma_x_sq: f64,
    pub sigma_n_sq: f64,
    pub real_modulation: bool,
}

impl LimitInputs {
    /// Unit symbol energy at linear SNR `r`.
    pub fn at_snr(n_r: usize, r: f64, real_modulation: bool) -> Self {
        Self { n_r, sigma_x_sq: 1.0, sigma_n_sq: 1.0 / r, real_modulation }
    }

    fn validate(&self) -> crate::Result<f64> {
        if self.n_r == 0 {
            return Err(Error::invalid("n_r must be at least 1"));
        }
        for (name, v) in [("sigma_x_sq", self.sigma_x_sq), ("sigma_n_sq", self.sigma_n_sq)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(self.sigma_x_sq / self.sigma_n_sq)
    }
}

/// `H_n = sum_{m=1}^{n} 1/m`, with `H_0 = 0`.
pub fn harmonic(n: i64) -> crate::Result<f64> {
    if n < 0 {
        return Err(Error::invalid(format!("harmonic number of negative order {n}")));
    }
    Ok((1..=n).map(|m| 1.0 / m as f64).sum())
}

fn h(n: usize) -> f64 {
    (1..=n).map(|m| 1.0 / m as f64).sum()
}

/// Limiting linear post-SNR of `receiver`.
///
/// Conventional ZF-LE has no finite limit with one antenna. Widely linear
/// receivers need `real_modulation`. The WL ZF-LE value for `N_r = 1` is the
/// mean-based figure; its spread is unbounded there.
pub fn limit_snr(receiver: LimitReceiver, inputs: &LimitInputs) -> crate::Result<f64> {
    limit_snr_with(receiver, inputs, EULER_GAMMA)
}

pub(crate) fn limit_snr_with(receiver: LimitReceiver, inputs: &LimitInputs, beta: f64) -> crate::Result<f64> {
    let r = inputs.validate()?;
    let n = inputs.n_r;
    if receiver.is_wl() && !inputs.real_modulation {
        return Err(Error::Domain(format!("{receiver} applies to real modulation only")));
    }
    let real = if inputs.real_modulation { 2.0 } else { 1.0 };
    Ok(match receiver {
        LimitReceiver::ConvZfLe => {
            if n == 1 {
                return Err(Error::Domain("conv-zf-le has no finite limit for N_r=1".into()));
            }
            real * (n - 1) as f64 * r
        }
        LimitReceiver::ConvZfDfe => real * r * (h(n - 1) - beta).exp(),
        LimitReceiver::WlZfLe => (2 * n - 1) as f64 * r,
        LimitReceiver::WlZfDfe => r * (h(2 * n - 1) - beta).exp(),
        LimitReceiver::Mfb => real * n as f64 * r,
    })
}

/// `10 log10(MFB / limit)`; independent of the SNR.
pub fn gap_to_mfb_db(receiver: LimitReceiver, inputs: &LimitInputs) -> crate::Result<f64> {
    gap_with(receiver, inputs, EULER_GAMMA)
}

fn gap_with(receiver: LimitReceiver, inputs: &LimitInputs, beta: f64) -> crate::Result<f64> {
    let limit = limit_snr_with(receiver, inputs, beta)?;
    let mfb = limit_snr_with(LimitReceiver::Mfb, inputs, beta)?;
    Ok(10.0 * (mfb / limit).log10())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub receiver: LimitReceiver,
    pub n_r: usize,
    /// `None` where no finite limit exists.
    pub gap_db: Option<f64>,
}

/// Gap to the MFB for each receiver and antenna count, real modulation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapTable {
    pub rows: Vec<GapRow>,
}

impl GapTable {
    pub fn new(receivers: &[LimitReceiver], n_rs: &[usize]) -> crate::Result<Self> {
        Self::with_beta(receivers, n_rs, EULER_GAMMA)
    }

    /// The four ZF equalizers at one and two antennas.
    pub fn standard() -> Self {
        Self::new(&LimitReceiver::EQUALIZERS, &[1, 2]).expect("standard table is well defined")
    }

    pub(crate) fn with_beta(receivers: &[LimitReceiver], n_rs: &[usize], beta: f64) -> crate::Result<Self> {
        let mut rows = Vec::with_capacity(receivers.len() * n_rs.len());
        for &receiver in receivers {
            for &n_r in n_rs {
                let inputs = LimitInputs::at_snr(n_r, 1.0, true);
                let gap_db = match gap_with(receiver, &inputs, beta) {
                    Ok(g) => Some(g),
                    Err(Error::Domain(_)) => None,
                    Err(e) => return Err(e),
                };
                rows.push(GapRow { receiver, n_r, gap_db });
            }
        }
        Ok(Self { rows })
    }

    pub fn get(&self, receiver: LimitReceiver, n_r: usize) -> Option<&GapRow> {
        self.rows.iter().find(|r| r.receiver == receiver && r.n_r == n_r)
    }

    /// CSV with columns `receiver,n_r,gap_db`; undefined gaps print `NA`.
    pub fn to_csv(&self) -> crate::Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["receiver", "n_r", "gap_db"])?;
        for row in &self.rows {
            let gap = row.gap_db.map_or_else(|| "NA".to_string(), |g| format!("{g:.4}"));
            w.write_record([row.receiver.name(), &row.n_r.to_string(), &gap])?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is ascii"))
    }
}

/// `E[ln X]` for `X` a sum of `n_r` unit-mean exponentials: `-beta + H_{n_r - 1}`.
pub fn expected_log_chisq(n_r: usize) -> crate::Result<f64> {
    if n_r == 0 {
        return Err(Error::invalid("n_r must be at least 1"));
    }
    Ok(h(n_r - 1) - EULER_GAMMA)
}

/// Mean and variance of `1/X`, `X` a sum of `2 n_r` unit-mean exponentials
/// (the per-subcarrier widely linear channel energy).
///
/// The mean is `1/(2 n_r - 1)`. The variance,
/// `1 / ((2 n_r - 1)^2 (2 n_r - 2))`, exists only for `n_r > 1`; asking for
/// it at `n_r = 1` is a domain error.
pub fn inverse_chisq_mean_var(n_r: usize) -> crate::Result<(f64, f64)> {
    if n_r == 0 {
        return Err(Error::invalid("n_r must be at least 1"));
    }
    if n_r == 1 {
        return Err(Error::Domain("variance of 1/X is unbounded for n_r=1".into()));
    }
    let a = (2 * n_r - 1) as f64;
    Ok((1.0 / a, 1.0 / (a * a * (a - 1.0))))
}

/// Mean of `1/X` alone, defined for every `n_r >= 1`.
pub fn inverse_chisq_mean(n_r: usize) -> crate::Result<f64> {
    if n_r == 0 {
        return Err(Error::invalid("n_r must be at least 1"));
    }
    Ok(1.0 / (2 * n_r - 1) as f64)
}

fn log_mean_mc(branches: usize, r: f64, samples: usize, stream: &mut RngStream) -> crate::Result<f64> {
    if samples < 10_000 {
        return Err(Error::invalid(format!("need at least 10000 samples, got {samples}")));
    }
    if branches == 0 {
        return Err(Error::invalid("n_r must be at least 1"));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("SNR must be positive and finite, got {r}")));
    }
    let mut acc = 0.0;
    let mut comp = 0.0;
    for _ in 0..samples {
        // Kahan summation keeps the mean stable at 1e6+ samples.
        let y = (r * stream.unit_chi_square(branches)).ln_1p() - comp;
        let t = acc + y;
        comp = (t - acc) - y;
        acc = t;
    }
    Ok((acc / samples as f64).exp() - 1.0)
}

/// Unbiased conventional MMSE-DFE post-SNR in the limiting channel,
/// `exp(E ln(1 + r ||h||^2)) - 1`, by Monte Carlo over `||h||^2`.
///
/// Tends to `N_r r` as `r -> 0` and to the ZF-DFE limit as `r -> inf`.
pub fn mmse_dfe_limit_snr_mc(n_r: usize, r: f64, samples: usize, stream: &mut RngStream) -> crate::Result<f64> {
    log_mean_mc(n_r, r, samples, stream)
}

/// Widely linear counterpart of [`mmse_dfe_limit_snr_mc`]: `2 n_r` branches.
pub fn wl_mmse_dfe_limit_snr_mc(n_r: usize, r: f64, samples: usize, stream: &mut RngStream) -> crate::Result<f64> {
    log_mean_mc(2 * n_r, r, samples, stream)
}
