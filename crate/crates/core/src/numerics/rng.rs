use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Real};

/// Reproducible random stream addressed by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8 keyed with the master seed and using the 64-bit ChaCha
/// stream id for the index, so distinct indices never overlap.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_index: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_index);
        Self { master_seed, stream_index, rng }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn bits(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| u8::from(self.rng.random::<bool>())).collect()
    }

    /// `n` circularly-symmetric complex Gaussians with total variance `variance`
    /// (`variance / 2` per real dimension).
    pub fn gaussian_complex<T: Real>(&mut self, n: usize, variance: T) -> crate::Result<Vec<Complex<T>>> {
        if !(variance > T::zero()) || !variance.is_finite() {
            return Err(Error::invalid(format!("gaussian variance must be positive, got {variance}")));
        }
        let sd = (variance.to_f64_lossy() / 2.0).sqrt();
        Ok((0..n)
            .map(|_| {
                let re = self.standard_normal() * sd;
                let im = self.standard_normal() * sd;
                Complex::new(T::of(re), T::of(im))
            })
            .collect())
    }

    /// Sum of `n` independent unit-mean exponentials, i.e. `||h||^2` for an
    /// `n`-vector of unit-variance complex Gaussians.
    pub fn unit_chi_square(&mut self, n: usize) -> f64 {
        (0..n)
            .map(|_| {
                let a = self.standard_normal();
                let b = self.standard_normal();
                0.5 * (a * a + b * b)
            })
            .sum()
    }
}

/// Free-function form of [`RngStream::gaussian_complex`].
pub fn gaussian_complex<T: Real>(stream: &mut RngStream, n: usize, variance: T) -> crate::Result<Vec<Complex<T>>> {
    stream.gaussian_complex(n, variance)
}
