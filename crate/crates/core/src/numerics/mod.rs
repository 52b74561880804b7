//! Numerical kernels: DFT/IDFT, DCT-I, Levinson-Durbin Toeplitz solvers,
//! seeded Gaussian streams and the Gaussian tail function.

mod dct;
mod fft;
mod rng;
mod special;
mod toeplitz;

pub use dct::dct_type1;
pub use fft::{dft, dft_in_place, idft, idft_in_place};
pub use rng::{gaussian_complex, RngStream};
pub use special::q_function;
pub use toeplitz::{levinson_complex, levinson_real, Prediction};
