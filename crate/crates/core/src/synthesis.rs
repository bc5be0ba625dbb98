//! Channel combining and splitting.
//!
//! A [`HybridChannel`] is a binary source `U` together with its side
//! information: a classical register (branch label) and a payload, which is
//! either a quantum state or a classical output symbol. Each branch stores the
//! joint, sub-normalized operators `p(u=0, label) ρ_0` and `p(u=1, label) ρ_1`,
//! so non-uniform priors need no special casing.
//!
//! One split step takes two independent copies `(U', S'), (U'', S'')` and
//! forms `U_1 = U' ⊕ U''`, `U_2 = U''`. The minus channel predicts `U_1`
//! from `(S', S'')`; the plus channel predicts `U_2` from `(U_1, S', S'')`.
//! The synthesized channel of index `i` (zero-based) applies these steps
//! along the bits of `i`, most significant bit first.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::quantum::{binary_entropy, shannon_entropy, ClassicalChannelTable, CqEnsemble, Operator};
use crate::transform::log2_exact;

/// Guards against the exponential growth of exact synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthesisBudget {
    pub max_dim: usize,
    pub max_branches: usize,
}

impl Default for SynthesisBudget {
    fn default() -> Self {
        Self {
            max_dim: 4096,
            max_branches: 4096,
        }
    }
}

impl SynthesisBudget {
    fn check(&self, what: &'static str, depth: usize, required: usize, allowed: usize) -> Result<()> {
        if required > allowed {
            return Err(Error::Budget {
                what,
                depth,
                required,
                allowed,
            });
        }
        Ok(())
    }
}

/// One classical-register value with its joint payload operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    /// Classical register contents (previous source bits), oldest first.
    pub label: Vec<u8>,
    pub zero: Operator,
    pub one: Operator,
}

impl Branch {
    pub fn weight(&self) -> f64 {
        self.zero.trace() + self.one.trace()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayloadKind {
    Quantum,
    Classical,
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Quantum(Vec<Branch>),
    /// Joint columns `(p(u=0, y), p(u=1, y))` over merged output symbols.
    Classical(Vec<[f64; 2]>),
}

/// A binary source with classical and/or quantum side information.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridChannel {
    payload: Payload,
    depth: usize,
}

/// Z and I of one synthesized channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthValues {
    pub z: f64,
    pub i: f64,
}

impl HybridChannel {
    /// A single-branch quantum channel from a cq ensemble.
    pub fn from_ensemble(e: &CqEnsemble) -> Self {
        Self::from_branches(vec![Branch {
            label: Vec::new(),
            zero: e.rho0.operator().scaled(e.p0),
            one: e.rho1.operator().scaled(e.p1),
        }])
        .expect("ensemble is valid")
    }

    /// A classical channel with input prior `(p0, 1 − p0)`.
    pub fn from_table(t: &ClassicalChannelTable, p0: f64) -> Self {
        let cols = t.row(0).iter().zip(t.row(1)).map(|(&a, &b)| [p0 * a, (1.0 - p0) * b]).collect();
        Self::from_columns(cols).expect("table is valid")
    }

    /// A classical source from its joint columns `(p(0, s), p(1, s))`.
    pub fn from_columns(cols: Vec<[f64; 2]>) -> Result<Self> {
        let total: f64 = cols.iter().map(|c| c[0] + c[1]).sum();
        if cols.iter().flatten().any(|&x| x < 0.0) || (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDistribution(format!("joint columns sum to {total}")));
        }
        Ok(Self {
            payload: Payload::Classical(merge_columns(cols)),
            depth: 0,
        })
    }

    /// A quantum hybrid channel from explicit branches.
    pub fn from_branches(branches: Vec<Branch>) -> Result<Self> {
        let Some(first) = branches.first() else {
            return Err(Error::InvalidDistribution("no branches".into()));
        };
        let dim = first.zero.dim();
        for b in &branches {
            if b.zero.dim() != dim || b.one.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: b.zero.dim().max(b.one.dim()),
                });
            }
        }
        let total: f64 = branches.iter().map(Branch::weight).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidDistribution(format!("branch weights sum to {total}")));
        }
        Ok(Self {
            payload: Payload::Quantum(branches),
            depth: 0,
        })
    }

    pub fn kind(&self) -> PayloadKind {
        match self.payload {
            Payload::Quantum(_) => PayloadKind::Quantum,
            Payload::Classical(_) => PayloadKind::Classical,
        }
    }

    /// Number of split steps applied so far.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn branch_count(&self) -> usize {
        match &self.payload {
            Payload::Quantum(b) => b.len(),
            Payload::Classical(c) => c.len(),
        }
    }

    /// Payload dimension (output alphabet size for classical payloads).
    pub fn payload_dim(&self) -> usize {
        match &self.payload {
            Payload::Quantum(b) => b[0].zero.dim(),
            Payload::Classical(c) => c.len(),
        }
    }

    pub fn branches(&self) -> Option<&[Branch]> {
        match &self.payload {
            Payload::Quantum(b) => Some(b),
            Payload::Classical(_) => None,
        }
    }

    pub fn columns(&self) -> Option<&[[f64; 2]]> {
        match &self.payload {
            Payload::Classical(c) => Some(c),
            Payload::Quantum(_) => None,
        }
    }

    /// Input prior `(p0, p1)`.
    pub fn prior(&self) -> (f64, f64) {
        match &self.payload {
            Payload::Quantum(b) => {
                let p0: f64 = b.iter().map(|x| x.zero.trace()).sum();
                let p1: f64 = b.iter().map(|x| x.one.trace()).sum();
                (p0, p1)
            }
            Payload::Classical(c) => c.iter().fold((0.0, 0.0), |acc, x| (acc.0 + x[0], acc.1 + x[1])),
        }
    }

    /// Erasure probability, when this is a uniform-prior erasure channel.
    pub fn erasure_parameter(&self) -> Option<f64> {
        let Payload::Classical(cols) = &self.payload else {
            return None;
        };
        let (p0, _) = self.prior();
        if (p0 - 0.5).abs() > 1e-12 {
            return None;
        }
        let mut eps = 0.0;
        for &[a, b] in cols {
            if a == 0.0 || b == 0.0 {
                continue;
            }
            if (a - b).abs() > 1e-12 * (a + b) {
                return None;
            }
            eps += a + b;
        }
        Some(eps)
    }

    /// Overlap `|⟨ψ0|ψ1⟩|`, when this is a uniform-prior channel with two pure outputs.
    pub fn pure_state_overlap(&self) -> Option<f64> {
        let Payload::Quantum(b) = &self.payload else {
            return None;
        };
        if b.len() != 1 {
            return None;
        }
        let (p0, _) = self.prior();
        if (p0 - 0.5).abs() > 1e-12 {
            return None;
        }
        let is_pure = |op: &Operator| {
            let ev = op.eigenvalues();
            let tr = op.trace();
            ev.iter().copied().fold(0.0, f64::max) > tr * (1.0 - 1e-12)
        };
        if !is_pure(&b[0].zero) || !is_pure(&b[0].one) {
            return None;
        }
        Some((2.0 * b[0].zero.root_fidelity(&b[0].one)).clamp(0.0, 1.0))
    }
}

/// Merges classical output symbols with identical posteriors.
fn merge_columns(cols: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    const SCALE: f64 = (1u64 << 44) as f64;
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut out: Vec<[f64; 2]> = Vec::new();
    for [a, b] in cols {
        let w = a + b;
        if w <= 0.0 {
            continue;
        }
        let key = ((a / w) * SCALE).round() as u64;
        match index.get(&key) {
            Some(&k) => {
                out[k][0] += a;
                out[k][1] += b;
            }
            None => {
                index.insert(key, out.len());
                out.push([a, b]);
            }
        }
    }
    out
}

/// Restricts both operators to the support of their sum.
fn compress(zero: Operator, one: Operator) -> (Operator, Operator) {
    if zero.is_diagonal() && one.is_diagonal() {
        let (Operator::Diagonal(a), Operator::Diagonal(b)) = (&zero, &one) else {
            unreachable!()
        };
        let keep: Vec<usize> = (0..a.len()).filter(|&k| a[k] + b[k] > 0.0).collect();
        if keep.len() == a.len() {
            return (zero, one);
        }
        return (
            Operator::Diagonal(keep.iter().map(|&k| a[k]).collect()),
            Operator::Diagonal(keep.iter().map(|&k| b[k]).collect()),
        );
    }
    let sum = zero.add_scaled(&one, 1.0).to_dense();
    let (vals, vecs) = crate::quantum::hermitian_eigen(&sum);
    let tr: f64 = vals.iter().filter(|v| **v > 0.0).sum();
    let keep: Vec<usize> = (0..vals.len()).filter(|&k| vals[k] > 1e-13 * tr).collect();
    if keep.len() == vals.len() {
        return (zero, one);
    }
    let basis = vecs.select_columns(keep.iter());
    let adj = basis.adjoint();
    let project = |op: &Operator| Operator::Dense(&adj * op.to_dense() * &basis);
    (project(&zero), project(&one))
}

/// The minus channel `U' ⊕ U''` given both side informations.
pub fn split_minus(w: &HybridChannel, budget: &SynthesisBudget) -> Result<HybridChannel> {
    let depth = w.depth + 1;
    let payload = match &w.payload {
        Payload::Classical(c) => {
            budget.check("output symbols", depth, c.len() * c.len(), budget.max_branches * budget.max_branches)?;
            let mut cols = Vec::with_capacity(c.len() * c.len());
            for x in c {
                for y in c {
                    cols.push([x[0] * y[0] + x[1] * y[1], x[1] * y[0] + x[0] * y[1]]);
                }
            }
            let cols = merge_columns(cols);
            budget.check("output symbols", depth, cols.len(), budget.max_branches)?;
            Payload::Classical(cols)
        }
        Payload::Quantum(b) => {
            let dim = b[0].zero.dim();
            budget.check("payload dimension", depth, dim * dim, budget.max_dim)?;
            budget.check("branches", depth, b.len() * b.len(), budget.max_branches)?;
            let mut out = Vec::with_capacity(b.len() * b.len());
            for x in b {
                for y in b {
                    let zero = x.zero.kron(&y.zero).add_scaled(&x.one.kron(&y.one), 1.0);
                    let one = x.one.kron(&y.zero).add_scaled(&x.zero.kron(&y.one), 1.0);
                    let (zero, one) = compress(zero, one);
                    let mut label = x.label.clone();
                    label.extend_from_slice(&y.label);
                    out.push(Branch { label, zero, one });
                }
            }
            Payload::Quantum(out)
        }
    };
    Ok(HybridChannel { payload, depth })
}

/// The plus channel `U''` given `U' ⊕ U''` and both side informations.
pub fn split_plus(w: &HybridChannel, budget: &SynthesisBudget) -> Result<HybridChannel> {
    let depth = w.depth + 1;
    let payload = match &w.payload {
        Payload::Classical(c) => {
            budget.check("output symbols", depth, 2 * c.len() * c.len(), budget.max_branches * budget.max_branches)?;
            let mut cols = Vec::with_capacity(2 * c.len() * c.len());
            for x in c {
                for y in c {
                    cols.push([x[0] * y[0], x[1] * y[1]]);
                    cols.push([x[1] * y[0], x[0] * y[1]]);
                }
            }
            let cols = merge_columns(cols);
            budget.check("output symbols", depth, cols.len(), budget.max_branches)?;
            Payload::Classical(cols)
        }
        Payload::Quantum(b) => {
            let dim = b[0].zero.dim();
            budget.check("payload dimension", depth, dim * dim, budget.max_dim)?;
            budget.check("branches", depth, 2 * b.len() * b.len(), budget.max_branches)?;
            let mut out = Vec::with_capacity(2 * b.len() * b.len());
            for x in b {
                for y in b {
                    for u1 in 0..2u8 {
                        let (zero, one) = if u1 == 0 {
                            (x.zero.kron(&y.zero), x.one.kron(&y.one))
                        } else {
                            (x.one.kron(&y.zero), x.zero.kron(&y.one))
                        };
                        if zero.trace() + one.trace() <= 0.0 {
                            continue;
                        }
                        let (zero, one) = compress(zero, one);
                        let mut label = x.label.clone();
                        label.extend_from_slice(&y.label);
                        label.push(u1);
                        out.push(Branch { label, zero, one });
                    }
                }
            }
            Payload::Quantum(out)
        }
    };
    Ok(HybridChannel { payload, depth })
}

/// The synthesized channel of zero-based index `i` at blocklength `n`.
pub fn synthesize(w: &HybridChannel, n: usize, i: usize, budget: &SynthesisBudget) -> Result<HybridChannel> {
    let bits = log2_exact(n)?;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let mut cur = w.clone();
    for level in (0..bits).rev() {
        cur = if (i >> level) & 1 == 0 {
            split_minus(&cur, budget)?
        } else {
            split_plus(&cur, budget)?
        };
    }
    Ok(cur)
}

/// `Z(U | side information)`, summed over branches.
pub fn channel_z(w: &HybridChannel) -> f64 {
    let z = match &w.payload {
        Payload::Classical(c) => 2.0 * c.iter().map(|x| (x[0] * x[1]).max(0.0).sqrt()).sum::<f64>(),
        Payload::Quantum(b) => 2.0 * b.iter().map(|x| x.zero.root_fidelity(&x.one)).sum::<f64>(),
    };
    z.clamp(0.0, 1.0)
}

/// `I(U; side information)` in bits.
pub fn channel_i(w: &HybridChannel) -> f64 {
    let (p0, _) = w.prior();
    let (joint, side) = match &w.payload {
        Payload::Classical(c) => {
            let joint: Vec<f64> = c.iter().flat_map(|x| [x[0], x[1]]).collect();
            let side: Vec<f64> = c.iter().map(|x| x[0] + x[1]).collect();
            (shannon_entropy(&joint), shannon_entropy(&side))
        }
        Payload::Quantum(b) => {
            let mut joint = 0.0;
            let mut side = 0.0;
            for x in b {
                joint += x.zero.spectral_entropy() + x.one.spectral_entropy();
                side += x.zero.add_scaled(&x.one, 1.0).spectral_entropy();
            }
            (joint, side)
        }
    };
    (binary_entropy(p0) + side - joint).max(0.0)
}

pub fn channel_values(w: &HybridChannel) -> SynthValues {
    SynthValues {
        z: channel_z(w),
        i: channel_i(w),
    }
}

/// Z of every synthesized channel of a uniform-prior erasure channel.
pub fn erasure_profile(eps: f64, n: usize) -> Result<Vec<f64>> {
    log2_exact(n)?;
    let mut z = vec![eps];
    while z.len() < n {
        // index bit appended as least significant: children of node j are 2j, 2j+1
        z = z.iter().flat_map(|&e| [2.0 * e - e * e, e * e]).collect();
    }
    Ok(z)
}

/// Exact Z and I of `W_N^{(i)}` for a uniform-prior channel with pure outputs of overlap `s`.
///
/// With prefix bits fixed to zero, the two outputs are uniform mixtures of the
/// product states `ψ_c` over the coset code spanned by rows `i..n` of `F^{⊗n}`.
/// Their Gram matrix `s^{wt(c ⊕ c')}` is diagonalized by the characters of that
/// code, and in the character basis both outputs split into rank-one 2×2
/// blocks, which gives closed forms for fidelity and entropies.
pub fn pure_state_values(s: f64, n: usize, i: usize, budget: &SynthesisBudget) -> Result<SynthValues> {
    let bits = log2_exact(n)?;
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let k = n - i;
    let allowed = budget.max_dim.saturating_mul(budget.max_branches);
    budget.check("character blocks", bits as usize, 1usize << (k - 1).min(62), allowed)?;
    let words = n.div_ceil(64);
    let row = |r: usize| -> Vec<u64> {
        let mut v = vec![0u64; words];
        for c in 0..n {
            if c & !r == 0 {
                v[c / 64] |= 1 << (c % 64);
            }
        }
        v
    };
    let size = 1usize << k;
    let mut codewords = vec![0u64; size * words];
    for j in 0..k {
        let g = row(i + j);
        let step = 1usize << j;
        for m in 0..step {
            for w in 0..words {
                codewords[(m + step) * words + w] = codewords[m * words + w] ^ g[w];
            }
        }
    }
    let mut lambda: Vec<f64> = (0..size)
        .map(|m| {
            let wt: u32 = codewords[m * words..(m + 1) * words].iter().map(|x| x.count_ones()).sum();
            s.powi(wt as i32)
        })
        .collect();
    walsh_hadamard(&mut lambda);
    let norm = size as f64;
    let mut z = 0.0;
    let mut avg = Vec::with_capacity(size);
    let mut pairs = Vec::with_capacity(size / 2);
    for t in (0..size).step_by(2) {
        let a = lambda[t].max(0.0) / norm;
        let b = lambda[t + 1].max(0.0) / norm;
        z += (a - b).abs();
        avg.push(a);
        avg.push(b);
        pairs.push(a + b);
    }
    Ok(SynthValues {
        z: z.clamp(0.0, 1.0),
        i: (shannon_entropy(&avg) - shannon_entropy(&pairs)).max(0.0),
    })
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

/// Z and I of all `n` synthesized channels, exactly.
///
/// Erasure channels and uniform pure-state channels use closed forms; other
/// channels are synthesized along the split tree, sharing common prefixes.
pub fn exact_values(w: &HybridChannel, n: usize, budget: &SynthesisBudget, mode: ExecMode) -> Result<Vec<SynthValues>> {
    let bits = log2_exact(n)? as usize;
    let (p0, p1) = w.prior();
    if p0 <= 0.0 || p1 <= 0.0 {
        return Ok(vec![SynthValues { z: 0.0, i: 0.0 }; n]);
    }
    if let Some(eps) = w.erasure_parameter() {
        return Ok(erasure_profile(eps, n)?
            .into_iter()
            .map(|z| SynthValues { z, i: 1.0 - z })
            .collect());
    }
    if let Some(s) = w.pure_state_overlap() {
        let vals = exec::map_range(n, mode, |i| pure_state_values(s, n, i, budget));
        return vals.into_iter().collect();
    }
    tree_values(w, bits, budget, mode)
}

fn tree_values(w: &HybridChannel, remaining: usize, budget: &SynthesisBudget, mode: ExecMode) -> Result<Vec<SynthValues>> {
    if remaining == 0 {
        return Ok(vec![channel_values(w)]);
    }
    let (minus, plus) = exec::join(
        mode,
        || split_minus(w, budget).and_then(|c| tree_values(&c, remaining - 1, budget, mode)),
        || split_plus(w, budget).and_then(|c| tree_values(&c, remaining - 1, budget, mode)),
    );
    let mut out = minus?;
    out.extend(plus?);
    Ok(out)
}
