//! Brute-force reference routines.
//!
//! These are deliberately naive (direct sums, dense elimination) and share
//! no code with the fast paths they are used to check. The `selftest`
//! suites and the test suites compare against them.

use num_complex::Complex;

/// Direct O(M^2) DFT.
pub fn naive_dft(x: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let m = x.len();
    (0..m)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(l, v)| {
                    let ang = -2.0 * std::f64::consts::PI * ((k * l) % m) as f64 / m as f64;
                    v * Complex::from_polar(1.0, ang)
                })
                .sum()
        })
        .collect()
}

/// `(1/M) sum_k s(k) cos(2 pi k l / M)` for `l = 0..M`.
pub fn cosine_autocov(spectrum: &[f64]) -> Vec<f64> {
    let m = spectrum.len();
    (0..m)
        .map(|l| {
            spectrum
                .iter()
                .enumerate()
                .map(|(k, s)| s * (2.0 * std::f64::consts::PI * ((k * l) % m) as f64 / m as f64).cos())
                .sum::<f64>()
                / m as f64
        })
        .collect()
}

/// Gaussian elimination with partial pivoting on a dense complex system.
pub fn dense_solve(mut a: Vec<Vec<Complex<f64>>>, mut rhs: Vec<Complex<f64>>) -> Option<Vec<Complex<f64>>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))?;
        if a[piv][col].norm() == 0.0 {
            return None;
        }
        a.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            let (upper, lower) = a.split_at_mut(row);
            for (dst, &src) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *dst -= f * src;
            }
            let v = rhs[col];
            rhs[row] -= f * v;
        }
    }
    let mut x = vec![Complex::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for c in row + 1..n {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Prediction-error taps from a dense solve of `sum_m q(l-m) b(m) = -q(l)`,
/// `l = 1..=L`, with `q(-n) = q*(n)`.
pub fn dense_prediction_taps(autocov: &[Complex<f64>], order: usize) -> Option<Vec<Complex<f64>>> {
    let lag = |d: isize| -> Complex<f64> {
        if d >= 0 {
            autocov[d as usize]
        } else {
            autocov[(-d) as usize].conj()
        }
    };
    let a = (1..=order)
        .map(|l| (1..=order).map(|m| lag(l as isize - m as isize)).collect())
        .collect();
    let rhs = (1..=order).map(|l| -autocov[l]).collect();
    dense_solve(a, rhs)
}

/// Real counterpart of [`dense_prediction_taps`].
pub fn dense_prediction_taps_real(autocov: &[f64], order: usize) -> Option<Vec<f64>> {
    let c: Vec<Complex<f64>> = autocov.iter().map(|&v| Complex::new(v, 0.0)).collect();
    dense_prediction_taps(&c, order).map(|b| b.into_iter().map(|v| v.re).collect())
}

/// Autocovariance of a random positive-definite process: `|P(e^jw)|^2 + floor`
/// for a random MA polynomial, sampled on `m` bins and inverse transformed.
pub fn random_pd_autocov(stream: &mut crate::numerics::RngStream, taps: usize, m: usize, floor: f64) -> Vec<Complex<f64>> {
    let h: Vec<Complex<f64>> = stream.gaussian_complex(taps, 1.0).expect("positive variance");
    let mut padded = h;
    padded.resize(m, Complex::new(0.0, 0.0));
    let spec: Vec<Complex<f64>> = naive_dft(&padded)
        .into_iter()
        .map(|v| Complex::new(v.norm_sqr() + floor, 0.0))
        .collect();
    // inverse via conjugation trick on the naive forward transform
    let conj: Vec<Complex<f64>> = spec.iter().map(|v| v.conj()).collect();
    naive_dft(&conj).into_iter().map(|v| v.conj() / m as f64).collect()
}
