use num_complex::Complex;

use super::fft::dft_in_place;
use crate::{Error, Real};

/// Type-1 DCT of `x[0..=N]`:
///
/// `X(l) = x(0) + (-1)^l x(N) + 2 sum_{k=1}^{N-1} x(k) cos(pi k l / N)`, `l = 0..=N`.
///
/// For an even-symmetric length-`2N` spectrum `s` (`s(k) = s(2N-k)`), `X(l) / (2N)`
/// equals `(1/2N) sum_k s(k) cos(2 pi k l / 2N)`, i.e. the real autocovariance whose
/// remaining lags follow from `X(2N-l) = X(l)`. Computed as a length-`2N` FFT of the
/// even extension.
pub fn dct_type1<T: Real>(x: &[T]) -> crate::Result<Vec<T>> {
    if x.len() < 2 {
        return Err(Error::invalid(format!("dct_type1 needs at least 2 samples, got {}", x.len())));
    }
    let n = x.len() - 1;
    let mut ext: Vec<Complex<T>> = Vec::with_capacity(2 * n);
    ext.extend(x.iter().map(|&v| Complex::new(v, T::zero())));
    ext.extend(x[1..n].iter().rev().map(|&v| Complex::new(v, T::zero())));
    dft_in_place(&mut ext)?;
    Ok(ext[..=n].iter().map(|c| c.re).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_is_impulse() {
        // 2N = 8 point even spectrum, constant c.
        let c = 2.5f64;
        let out = dct_type1(&[c; 5]).unwrap();
        assert!((out[0] / 8.0 - c).abs() < 1e-14);
        for v in &out[1..] {
            assert!(v.abs() < 1e-13);
        }
    }

    #[test]
    fn two_samples() {
        // N = 1: X(0) = x0 + x1, X(1) = x0 - x1.
        let out = dct_type1(&[3.0_f64, 1.0]).unwrap();
        assert!((out[0] - 4.0).abs() < 1e-15);
        assert!((out[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn too_short() {
        assert!(dct_type1::<f64>(&[1.0]).is_err());
        assert!(dct_type1::<f64>(&[]).is_err());
    }
}
