//! The binary polar transform `x = u G_N` with `G_N = B_N F^{⊗n}`.
//!
//! Positions are zero-based. `B_N` commutes with `F^{⊗n}`, so the transform
//! is computed as the in-place butterfly for `F^{⊗n}` followed by the
//! bit-reversal permutation.

use crate::error::{Error, Result};

/// `log2(n)` for a power of two, or an error.
pub fn log2_exact(n: usize) -> Result<u32> {
    if n == 0 || !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    Ok(n.trailing_zeros())
}

/// Reverses the low `bits` bits of `i`.
pub fn reverse_bits(i: usize, bits: u32) -> usize {
    if bits == 0 {
        return 0;
    }
    i.reverse_bits() >> (usize::BITS - bits)
}

/// The bit-reversal permutation of `0..n`.
pub fn bit_reversal_permutation(n: usize) -> Result<Vec<usize>> {
    let bits = log2_exact(n)?;
    Ok((0..n).map(|i| reverse_bits(i, bits)).collect())
}

/// Applies `F^{⊗n}` in place (no permutation).
pub(crate) fn butterfly_in_place(x: &mut [u8]) {
    let n = x.len();
    let mut half = 1;
    while half < n {
        for block in x.chunks_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter()) {
                *a ^= *b;
            }
        }
        half *= 2;
    }
}

/// Computes `u G_N` over GF(2).
pub fn polar_encode(u: &[u8]) -> Result<Vec<u8>> {
    let bits = log2_exact(u.len())?;
    let mut w = u.to_vec();
    butterfly_in_place(&mut w);
    Ok((0..u.len()).map(|j| w[reverse_bits(j, bits)]).collect())
}

/// Inverse transform; `G_N` is an involution over GF(2).
pub fn polar_decode_inverse(x: &[u8]) -> Result<Vec<u8>> {
    polar_encode(x)
}
