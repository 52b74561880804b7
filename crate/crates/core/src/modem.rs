//! Modulation alphabets, Gray bit mapping, DFT precoding and hard decisions.
//!
//! Label tables (bits are MSB first within a symbol, and `points[i]` carries
//! label `i`):
//!
//! | alphabet | mapping |
//! |----------|---------|
//! | BPSK     | `0 -> +1`, `1 -> -1` |
//! | 8-PSK    | `exp(j 2 pi m / 8)` carries label `m ^ (m >> 1)` |
//! | 16-QAM   | bits `b0 b1` pick I, `b2 b3` pick Q; per axis `00 -> -3`, `01 -> -1`, `11 -> +1`, `10 -> +3`, all scaled by `1/sqrt(10)` |
//!
//! Every alphabet has unit average energy, so the symbol variance is 1 and
//! the SNR is `1 / sigma_n^2`.
//!
//! Hard decisions pick the nearest point in Euclidean distance; ties go to
//! the lower label. For real alphabets only the real part of the soft value
//! enters the metric.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::numerics::dft;
use crate::{Error, Real};

pub type Bit = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "bpsk")]
    Bpsk,
    #[serde(rename = "8psk")]
    Psk8,
    #[serde(rename = "16qam")]
    Qam16,
}

impl Modulation {
    pub const ALL: [Modulation; 3] = [Modulation::Bpsk, Modulation::Psk8, Modulation::Qam16];

    pub fn name(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Psk8 => "8psk",
            Modulation::Qam16 => "16qam",
        }
    }

    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Psk8 => 3,
            Modulation::Qam16 => 4,
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Modulation {
    type Err = Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "8psk" | "psk8" => Ok(Modulation::Psk8),
            "16qam" | "qam16" => Ok(Modulation::Qam16),
            other => Err(Error::invalid(format!("unknown constellation {other:?}; expected bpsk, 8psk or 16qam"))),
        }
    }
}

const QAM_AXIS: [f64; 4] = [-3.0, -1.0, 3.0, 1.0]; // indexed by the 2-bit axis label

#[derive(Debug, Clone, PartialEq)]
pub struct Constellation<T> {
    modulation: Modulation,
    points: Vec<Complex<T>>,
}

impl<T: Real> Constellation<T> {
    pub fn new(modulation: Modulation) -> Self {
        let points: Vec<Complex<f64>> = match modulation {
            Modulation::Bpsk => vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)],
            Modulation::Psk8 => {
                let mut pts = vec![Complex::new(0.0, 0.0); 8];
                for m in 0..8usize {
                    pts[m ^ (m >> 1)] = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * m as f64 / 8.0);
                }
                pts
            }
            Modulation::Qam16 => {
                let s = 10f64.sqrt().recip();
                (0..16usize)
                    .map(|label| Complex::new(QAM_AXIS[label >> 2] * s, QAM_AXIS[label & 3] * s))
                    .collect()
            }
        };
        Self { modulation, points: points.into_iter().map(|p| Complex::new(T::of(p.re), T::of(p.im))).collect() }
    }

    pub fn modulation(&self) -> Modulation {
        self.modulation
    }

    /// Points indexed by label.
    pub fn points(&self) -> &[Complex<T>] {
        &self.points
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.modulation.bits_per_symbol()
    }

    pub fn is_real(&self) -> bool {
        self.modulation == Modulation::Bpsk
    }

    /// Average energy over uniformly used labels.
    pub fn symbol_variance(&self) -> T {
        self.points.iter().fold(T::zero(), |acc, p| acc + p.norm_sqr()) / T::of_usize(self.points.len())
    }

    /// Bit pattern of label `i`, MSB first.
    pub fn bit_label(&self, i: usize) -> Vec<Bit> {
        let k = self.bits_per_symbol();
        (0..k).map(|b| ((i >> (k - 1 - b)) & 1) as Bit).collect()
    }

    pub fn bit_labels(&self) -> Vec<Vec<Bit>> {
        (0..self.points.len()).map(|i| self.bit_label(i)).collect()
    }

    /// Label of the nearest point; ties resolve to the lower label.
    pub fn decide(&self, z: Complex<T>) -> usize {
        let mut best = 0;
        let mut best_d = T::infinity();
        for (i, p) in self.points.iter().enumerate() {
            let d = if self.is_real() { (z.re - p.re) * (z.re - p.re) } else { (z - p).norm_sqr() };
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

/// Time-domain symbols together with their DFT-precoded subcarrier values.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlock<T> {
    pub time_symbols: Vec<Complex<T>>,
    pub precoded: Vec<Complex<T>>,
}

/// Maps bits to symbols, `bits_per_symbol` bits at a time, MSB first.
pub fn map_bits<T: Real>(bits: &[Bit], c: &Constellation<T>) -> crate::Result<Vec<Complex<T>>> {
    let k = c.bits_per_symbol();
    if !bits.len().is_multiple_of(k) {
        return Err(Error::invalid(format!(
            "{} bits do not divide into {}-bit {} symbols",
            bits.len(),
            k,
            c.modulation()
        )));
    }
    bits.chunks(k)
        .map(|chunk| {
            let mut label = 0usize;
            for &b in chunk {
                if b > 1 {
                    return Err(Error::invalid(format!("bit value {b} is not 0 or 1")));
                }
                label = (label << 1) | b as usize;
            }
            Ok(c.points[label])
        })
        .collect()
}

/// DFT precoding of a block of time-domain symbols.
pub fn precode<T: Real>(x_t: &[Complex<T>]) -> crate::Result<SymbolBlock<T>> {
    Ok(SymbolBlock { precoded: dft(x_t)?, time_symbols: x_t.to_vec() })
}

/// Nearest-point decisions for every soft sample, with the decided bits.
pub fn demod_hard<T: Real>(z_t: &[Complex<T>], c: &Constellation<T>) -> (Vec<Complex<T>>, Vec<Bit>) {
    let mut symbols = Vec::with_capacity(z_t.len());
    let mut bits = Vec::with_capacity(z_t.len() * c.bits_per_symbol());
    for &z in z_t {
        let i = c.decide(z);
        symbols.push(c.points[i]);
        bits.extend(c.bit_label(i));
    }
    (symbols, bits)
}

/// Hamming distance between two bit sequences.
pub fn count_bit_errors(tx: &[Bit], rx: &[Bit]) -> crate::Result<usize> {
    if tx.len() != rx.len() {
        return Err(Error::invalid(format!("bit sequences differ in length: {} vs {}", tx.len(), rx.len())));
    }
    Ok(tx.iter().zip(rx).filter(|(a, b)| a != b).count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn c64(m: Modulation) -> Constellation<f64> {
        Constellation::new(m)
    }

    #[test]
    fn bpsk_sign_convention() {
        let c = c64(Modulation::Bpsk);
        assert_eq!(map_bits(&[0], &c).unwrap(), vec![Complex::new(1.0, 0.0)]);
        assert_eq!(map_bits(&[1], &c).unwrap(), vec![Complex::new(-1.0, 0.0)]);
    }

    #[test]
    fn qam_all_zero_label_is_a_corner() {
        let c = c64(Modulation::Qam16);
        let s = map_bits(&[0, 0, 0, 0], &c).unwrap()[0];
        let corner = 3.0 / 10f64.sqrt();
        assert!((s.re.abs() - corner).abs() < 1e-15 && (s.im.abs() - corner).abs() < 1e-15);
    }

    #[test]
    fn unit_energy_and_bijective_labels() {
        for m in Modulation::ALL {
            let c = c64(m);
            assert!((c.symbol_variance() - 1.0).abs() < 1e-14, "{m}");
            let mut labels = c.bit_labels();
            labels.sort();
            labels.dedup();
            assert_eq!(labels.len(), 1 << c.bits_per_symbol());
            assert_eq!(c.is_real(), c.points().iter().all(|p| p.im == 0.0));
        }
    }

    #[test]
    fn indivisible_bit_count() {
        assert!(map_bits(&[0, 1], &c64(Modulation::Psk8)).is_err());
        assert!(map_bits(&[0, 2, 0], &c64(Modulation::Psk8)).is_err());
    }

    #[test]
    fn bpsk_decisions_ignore_imaginary_part() {
        let c = c64(Modulation::Bpsk);
        let (s, b) = demod_hard(&[Complex::new(0.3, 0.0), Complex::new(-0.1, 5.0)], &c);
        assert_eq!(s, vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)]);
        assert_eq!(b, vec![0, 1]);
    }

    #[test]
    fn ties_go_to_the_lower_label() {
        let c = c64(Modulation::Qam16);
        // Midpoint of labels 0 (-3,-3) and 1 (-3,-1).
        let mid = (c.points()[0] + c.points()[1]) * 0.5;
        assert_eq!(c.decide(mid), 0);
        let c = c64(Modulation::Bpsk);
        assert_eq!(c.decide(Complex::new(0.0, 1.0)), 0);
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        // 8-PSK: angular neighbours.
        let c = c64(Modulation::Psk8);
        for m in 0..8usize {
            let a = m ^ (m >> 1);
            let n = (m + 1) % 8;
            let b = n ^ (n >> 1);
            assert_eq!((a ^ b).count_ones(), 1);
            assert!((c.points()[a] - c.points()[b]).norm() < 0.77);
        }
        // 16-QAM: points at the minimum distance are decision-region neighbours.
        let c = c64(Modulation::Qam16);
        let dmin = 2.0 / 10f64.sqrt();
        for i in 0..16usize {
            for j in 0..16usize {
                if ((c.points()[i] - c.points()[j]).norm() - dmin).abs() < 1e-12 {
                    assert_eq!((i ^ j).count_ones(), 1, "{i} {j}");
                }
            }
        }
    }

    #[test]
    fn noiseless_round_trip() {
        let mut rng = RngStream::new(11, 0);
        for m in Modulation::ALL {
            let c = c64(m);
            let bits = rng.bits(c.bits_per_symbol() * 257);
            let syms = map_bits(&bits, &c).unwrap();
            let (back, rx) = demod_hard(&syms, &c);
            assert_eq!(back, syms);
            assert_eq!(rx, bits);
        }
    }

    #[test]
    fn precode_examples() {
        let mut x = vec![Complex::new(0.0, 0.0); 8];
        x[0] = Complex::new(1.0, 0.0);
        let b = precode(&x).unwrap();
        assert!(b.precoded.iter().all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-15));
        let b = precode(&[Complex::new(0.5, -1.0); 8]).unwrap();
        assert!((b.precoded[0] - Complex::new(4.0, -8.0)).norm() < 1e-14);
        assert!(b.precoded[1..].iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn hamming_distance() {
        assert_eq!(count_bit_errors(&[0, 1, 1, 0], &[0, 1, 1, 0]).unwrap(), 0);
        assert_eq!(count_bit_errors(&[0; 8], &[1; 8]).unwrap(), 8);
        assert_eq!(count_bit_errors(&[0, 1, 1, 0], &[0, 0, 1, 1]).unwrap(), 2);
        assert!(count_bit_errors(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn names_parse() {
        for m in Modulation::ALL {
            assert_eq!(m.name().parse::<Modulation>().unwrap(), m);
        }
        assert!("qpsk".parse::<Modulation>().is_err());
    }
}
