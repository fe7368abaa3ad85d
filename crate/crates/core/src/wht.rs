//! Walsh-Hadamard transform over GF(2)^k.
//!
//! The forward transform uses the kernel `1/2 [[1, 1], [1, -1]]` at every
//! level, the inverse uses the unscaled kernel, so `wht_inverse(wht(v)) == v`.
//! For probability vectors `p1`, `p2` this normalization gives
//! `wht_inverse(wht(p1) * wht(p2)) == 2^-k (p1 (*) p2)` where `(*)` is
//! XOR-convolution. The constant factor cancels in the decoder, which only
//! ever differences log-domain entries.

use crate::error::{usage, Result};

fn check_len(len: usize) -> Result<()> {
    if len == 0 || !len.is_power_of_two() {
        return Err(usage(format!("transform length {len} is not a power of two")));
    }
    Ok(())
}

#[inline]
fn butterfly(v: &mut [f64], scale: f64) {
    let n = v.len();
    let mut h = 1;
    while h < n {
        for block in v.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = (x + y) * scale;
                *b = (x - y) * scale;
            }
        }
        h *= 2;
    }
}

/// Forward transform in place.
pub fn wht_in_place(v: &mut [f64]) -> Result<()> {
    check_len(v.len())?;
    butterfly(v, 0.5);
    Ok(())
}

/// Inverse transform in place.
pub fn wht_inverse_in_place(v: &mut [f64]) -> Result<()> {
    check_len(v.len())?;
    butterfly(v, 1.0);
    Ok(())
}

pub fn wht(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    wht_in_place(&mut out)?;
    Ok(out)
}

pub fn wht_inverse(v: &[f64]) -> Result<Vec<f64>> {
    let mut out = v.to_vec();
    wht_inverse_in_place(&mut out)?;
    Ok(out)
}
