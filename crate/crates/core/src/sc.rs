//! Successive cancellation over the polar transform.
//!
//! Values are log-likelihood ratios `ln P(0)/P(1)` of exact posteriors, with
//! `±∞` for deterministic bits. Several "lanes" of LLRs can be carried through
//! one pass: every lane sees the same bit decisions, which lets a decoder
//! track e.g. the encoder's conditional and its own posterior side by side.

use crate::transform::{log2_exact, reverse_bits};
use crate::error::Result;

/// Posterior LLR of `a ⊕ b` from independent LLRs of `a` and `b`.
pub fn boxplus(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() || a == 0.0 || b == 0.0 {
        return 0.0;
    }
    let s = a.signum() * b.signum();
    let m = a.abs().min(b.abs());
    if m.is_infinite() {
        return s * f64::INFINITY;
    }
    s * m + (-(a + b).abs()).exp().ln_1p() - (-(a - b).abs()).exp().ln_1p()
}

/// LLR of `b` given `a ⊕ b` observed through `la`, `b` through `lb`, and `a = bit`.
fn combine_upper(la: f64, lb: f64, bit: u8) -> f64 {
    let v = if bit == 0 { lb + la } else { lb - la };
    if v.is_nan() {
        0.0
    } else {
        v
    }
}

/// `P(bit = 1)` from an LLR.
pub fn prob_one(llr: f64) -> f64 {
    if llr.is_nan() {
        return 0.5;
    }
    if llr >= 0.0 {
        let e = (-llr).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + llr.exp())
    }
}

/// `2 √(P(0) P(1))` for a posterior given by its LLR.
pub fn posterior_bhattacharyya(llr: f64) -> f64 {
    if llr.is_nan() {
        return 1.0;
    }
    1.0 / (llr / 2.0).cosh()
}

/// Hard decision: the more likely bit, ties to 0.
pub fn hard_decision(llr: f64) -> u8 {
    u8::from(llr < 0.0)
}

/// Randomized rounding: 1 with probability `P(1)`, driven by `r ∈ [0,1)`.
pub fn rounding_decision(llr: f64, r: f64) -> u8 {
    u8::from(r < prob_one(llr))
}

/// Runs successive cancellation over a block.
///
/// `llr` holds `lanes` LLRs per codeword coordinate (coordinate-major).
/// For each position `i` in order, `decide(i, lane_llrs)` receives the
/// per-lane posterior LLRs of `u_i` given the decided `u_0..u_{i-1}` and
/// returns the bit to commit. Returns the codeword `x = u G_N`.
pub fn successive_cancel(
    llr: &[f64],
    lanes: usize,
    decide: &mut dyn FnMut(usize, &[f64]) -> u8,
) -> Result<Vec<u8>> {
    let n = llr.len() / lanes;
    let bits = log2_exact(n)?;
    let mut w_llr = vec![0.0; n * lanes];
    for m in 0..n {
        let src = reverse_bits(m, bits);
        w_llr[m * lanes..(m + 1) * lanes].copy_from_slice(&llr[src * lanes..(src + 1) * lanes]);
    }
    let w = recurse(&w_llr, lanes, 0, decide);
    Ok((0..n).map(|j| w[reverse_bits(j, bits)]).collect())
}

fn recurse(llr: &[f64], lanes: usize, offset: usize, decide: &mut dyn FnMut(usize, &[f64]) -> u8) -> Vec<u8> {
    let n = llr.len() / lanes;
    if n == 1 {
        return vec![decide(offset, llr)];
    }
    let half = n / 2;
    let (lo, hi) = llr.split_at(half * lanes);
    let minus: Vec<f64> = lo.iter().zip(hi).map(|(&a, &b)| boxplus(a, b)).collect();
    let alpha = recurse(&minus, lanes, offset, decide);
    let mut plus = vec![0.0; half * lanes];
    for j in 0..half {
        for l in 0..lanes {
            let k = j * lanes + l;
            plus[k] = combine_upper(lo[k], hi[k], alpha[j]);
        }
    }
    let beta = recurse(&plus, lanes, offset + half, decide);
    let mut out = Vec::with_capacity(n);
    out.extend(alpha.iter().zip(&beta).map(|(a, b)| a ^ b));
    out.extend_from_slice(&beta);
    out
}
