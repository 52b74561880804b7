use num_complex::Complex;

use crate::{Error, Real};

/// Solution of an order-`L` prediction problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction<S, T> {
    /// Prediction-error filter taps `b(1..=L)` (the leading 1 is implied).
    pub taps: Vec<S>,
    /// Residual variance `q(0) + Re sum_m b(m) q*(m)`.
    pub prediction_error: T,
}

/// Scalars a Hermitian Toeplitz recursion can run over.
trait ToeplitzScalar<T: Real>:
    Copy + std::ops::Add<Output = Self> + std::ops::Mul<Output = Self> + std::ops::Neg<Output = Self>
{
    fn conj(self) -> Self;
    fn norm_sqr(self) -> T;
    fn re(self) -> T;
    fn im(self) -> T;
    fn scale(self, s: T) -> Self;
}

impl<T: Real> ToeplitzScalar<T> for T {
    fn conj(self) -> Self {
        self
    }
    fn norm_sqr(self) -> T {
        self * self
    }
    fn re(self) -> T {
        self
    }
    fn im(self) -> T {
        T::zero()
    }
    fn scale(self, s: T) -> Self {
        self * s
    }
}

impl<T: Real> ToeplitzScalar<T> for Complex<T> {
    fn conj(self) -> Self {
        Complex::conj(&self)
    }
    fn norm_sqr(self) -> T {
        Complex::norm_sqr(&self)
    }
    fn re(self) -> T {
        self.re
    }
    fn im(self) -> T {
        self.im
    }
    fn scale(self, s: T) -> Self {
        self * s
    }
}

// Solves sum_{m=1}^{L} q(l-m) b(m) = -q(l), l = 1..=L, with q(-n) = q*(n).
fn levinson<T: Real, S: ToeplitzScalar<T>>(autocov: &[S], order: usize) -> crate::Result<Prediction<S, T>> {
    if autocov.len() < order + 1 {
        return Err(Error::invalid(format!(
            "autocovariance has {} lags, order {} needs {}",
            autocov.len(),
            order,
            order + 1
        )));
    }
    let q0 = autocov[0];
    if !(q0.re() > T::zero()) || !q0.re().is_finite() {
        return Err(Error::Conditioning { step: 0, prediction_error: q0.re().to_f64_lossy() });
    }
    if q0.im().abs() > T::of(1e-9) * q0.re() {
        return Err(Error::invalid("autocovariance lag 0 must be real"));
    }

    let mut taps: Vec<S> = Vec::with_capacity(order);
    let mut next: Vec<S> = Vec::with_capacity(order);
    let mut err = q0.re();
    for p in 1..=order {
        let mut acc = autocov[p];
        for m in 1..p {
            acc = acc + taps[m - 1] * autocov[p - m];
        }
        let k = (-acc).scale(T::one() / err);

        next.clear();
        for m in 1..p {
            next.push(taps[m - 1] + k * taps[p - m - 1].conj());
        }
        next.push(k);
        std::mem::swap(&mut taps, &mut next);

        err = err * (T::one() - k.norm_sqr());
        if !(err > T::zero()) || !err.is_finite() {
            return Err(Error::Conditioning { step: p, prediction_error: err.to_f64_lossy() });
        }
    }

    // Recompute the residual from the solution; the product form above drifts.
    let mut resid = q0;
    for (m, b) in taps.iter().enumerate() {
        resid = resid + *b * autocov[m + 1].conj();
    }
    Ok(Prediction { taps, prediction_error: resid.re() })
}

/// Levinson-Durbin solve of the Hermitian Toeplitz system `A b* = -q*` with
/// `A(l, m) = q(m - l)`, i.e. the order-`L` prediction-error filter of the
/// process with autocovariance `q`.
///
/// Fails with [`Error::Conditioning`] when the sequence is not positive
/// definite up to order `L`.
pub fn levinson_complex<T: Real>(
    autocov: &[Complex<T>],
    order: usize,
) -> crate::Result<Prediction<Complex<T>, T>> {
    levinson(autocov, order)
}

/// Real-valued counterpart of [`levinson_complex`]: solves `A b = -q` with
/// `A(l, m) = q(m - l)`.
pub fn levinson_real<T: Real>(autocov: &[T], order: usize) -> crate::Result<Prediction<T, T>> {
    levinson(autocov, order)
}
