use std::any::{Any, TypeId};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Real};

thread_local! {
    // One planner per scalar type and thread; rustfft caches plans by length.
    static PLANNERS: RefCell<HashMap<TypeId, Box<dyn Any>>> = RefCell::new(HashMap::new());
}

fn plan<T: Real>(len: usize, inverse: bool) -> Arc<dyn Fft<T>> {
    PLANNERS.with(|cell| {
        let mut map = cell.borrow_mut();
        let planner = map
            .entry(TypeId::of::<T>())
            .or_insert_with(|| Box::new(FftPlanner::<T>::new()))
            .downcast_mut::<FftPlanner<T>>()
            .expect("planner keyed by its scalar type");
        if inverse {
            planner.plan_fft_inverse(len)
        } else {
            planner.plan_fft_forward(len)
        }
    })
}

/// In-place `X(k) = sum_l x(l) exp(-j 2 pi k l / M)`.
pub fn dft_in_place<T: Real>(x: &mut [Complex<T>]) -> crate::Result<()> {
    if x.is_empty() {
        return Err(Error::invalid("dft of an empty sequence"));
    }
    plan::<T>(x.len(), false).process(x);
    Ok(())
}

/// In-place `x(l) = (1/M) sum_k X(k) exp(+j 2 pi k l / M)`.
pub fn idft_in_place<T: Real>(x: &mut [Complex<T>]) -> crate::Result<()> {
    if x.is_empty() {
        return Err(Error::invalid("idft of an empty sequence"));
    }
    plan::<T>(x.len(), true).process(x);
    let scale = T::one() / T::of_usize(x.len());
    for v in x.iter_mut() {
        *v = *v * scale;
    }
    Ok(())
}

/// M-point DFT, unnormalized.
pub fn dft<T: Real>(x: &[Complex<T>]) -> crate::Result<Vec<Complex<T>>> {
    let mut out = x.to_vec();
    dft_in_place(&mut out)?;
    Ok(out)
}

/// M-point inverse DFT with the 1/M factor.
pub fn idft<T: Real>(x: &[Complex<T>]) -> crate::Result<Vec<Complex<T>>> {
    let mut out = x.to_vec();
    idft_in_place(&mut out)?;
    Ok(out)
}
