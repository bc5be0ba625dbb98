//! Broadcast channels, auxiliary structures and the induced sources
//! `(target layer | conditioning layers, receiver output)` that the scheme
//! polarizes.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::{partial_trace, DensityMatrix, Operator, C64};
use crate::synthesis::{Branch, HybridChannel};

/// One of the three auxiliary layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    V,
    V1,
    V2,
}

impl Layer {
    /// The private layer of a receiver.
    pub fn private(r: Receiver) -> Layer {
        match r {
            Receiver::One => Layer::V1,
            Receiver::Two => Layer::V2,
        }
    }

    fn bit(self, v: usize, v1: usize, v2: usize) -> usize {
        match self {
            Layer::V => v,
            Layer::V1 => v1,
            Layer::V2 => v2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Receiver {
    One,
    Two,
}

impl Receiver {
    pub fn other(self) -> Receiver {
        match self {
            Receiver::One => Receiver::Two,
            Receiver::Two => Receiver::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Receiver::One => 0,
            Receiver::Two => 1,
        }
    }

    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidDistribution(format!("{name} = {p} is not a probability")));
    }
    Ok(())
}

/// Joint law of `(V, V1, V2)` and the deterministic input map `x = φ(v, v1, v2)`.
///
/// Entries are indexed by `4v + 2v1 + v2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuxiliaryStructure {
    joint: [f64; 8],
    phi: [u8; 8],
}

impl AuxiliaryStructure {
    /// Builds `p_V p_{V2|V} p_{V1|V,V2}` from Bernoulli parameters.
    ///
    /// `p_v = P(V=1)`, `p_v2[v] = P(V2=1 | V=v)`, `p_v1[v][v2] = P(V1=1 | V=v, V2=v2)`.
    pub fn from_conditionals(p_v: f64, p_v2: [f64; 2], p_v1: [[f64; 2]; 2], phi: [u8; 8]) -> Result<Self> {
        check_prob("p_v", p_v)?;
        for (v, p) in p_v2.iter().enumerate() {
            check_prob(&format!("p_v2[{v}]"), *p)?;
        }
        for v in 0..2 {
            for v2 in 0..2 {
                check_prob(&format!("p_v1[{v}][{v2}]"), p_v1[v][v2])?;
            }
        }
        let mut joint = [0.0; 8];
        for v in 0..2 {
            let pv = if v == 1 { p_v } else { 1.0 - p_v };
            for v2 in 0..2 {
                let pv2 = if v2 == 1 { p_v2[v] } else { 1.0 - p_v2[v] };
                for v1 in 0..2 {
                    let pv1 = if v1 == 1 { p_v1[v][v2] } else { 1.0 - p_v1[v][v2] };
                    joint[4 * v + 2 * v1 + v2] = pv * pv2 * pv1;
                }
            }
        }
        Self::from_joint(joint, phi)
    }

    pub fn from_joint(joint: [f64; 8], phi: [u8; 8]) -> Result<Self> {
        let total: f64 = joint.iter().sum();
        if joint.iter().any(|&p| p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("auxiliary joint sums to {total}")));
        }
        if phi.iter().any(|&x| x > 1) {
            return Err(Error::InvalidDistribution("φ must map into {0,1}".into()));
        }
        Ok(Self { joint, phi })
    }

    /// `V = X` with prior `P(X=1) = p`, both private layers constant.
    pub fn superposition_only(p: f64) -> Result<Self> {
        Self::from_conditionals(p, [0.0, 0.0], [[0.0; 2]; 2], [0, 0, 0, 0, 1, 1, 1, 1])
    }

    pub fn p(&self, v: usize, v1: usize, v2: usize) -> f64 {
        self.joint[4 * v + 2 * v1 + v2]
    }

    pub fn phi(&self, v: usize, v1: usize, v2: usize) -> u8 {
        self.phi[4 * v + 2 * v1 + v2]
    }

    pub fn joint(&self) -> &[f64; 8] {
        &self.joint
    }

    pub fn phi_table(&self) -> &[u8; 8] {
        &self.phi
    }

    /// Exchanges the labels of `V1` and `V2`.
    pub fn swapped(&self) -> Self {
        let mut joint = [0.0; 8];
        let mut phi = [0u8; 8];
        for v in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    joint[4 * v + 2 * a + b] = self.p(v, b, a);
                    phi[4 * v + 2 * a + b] = self.phi(v, b, a);
                }
            }
        }
        Self { joint, phi }
    }

    /// Inverse of [`Self::from_conditionals`]; conditionals on null events are 0.
    pub fn conditionals(&self) -> (f64, [f64; 2], [[f64; 2]; 2]) {
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else { 0.0 };
        let pv: [f64; 2] = std::array::from_fn(|v| (0..4).map(|k| self.joint[4 * v + k]).sum());
        let mut p_v2 = [0.0; 2];
        let mut p_v1 = [[0.0; 2]; 2];
        for v in 0..2 {
            p_v2[v] = ratio(self.p(v, 0, 1) + self.p(v, 1, 1), pv[v]);
            for v2 in 0..2 {
                p_v1[v][v2] = ratio(self.p(v, 1, v2), self.p(v, 0, v2) + self.p(v, 1, v2));
            }
        }
        (pv[1], p_v2, p_v1)
    }

    /// Distribution of the channel input.
    pub fn input_distribution(&self) -> [f64; 2] {
        let mut px = [0.0; 2];
        for (k, &p) in self.joint.iter().enumerate() {
            px[self.phi[k] as usize] += p;
        }
        px
    }

    /// Iterates `(v, v1, v2, probability)`.
    pub fn outcomes(&self) -> impl Iterator<Item = (usize, usize, usize, f64)> + '_ {
        (0..8).map(move |k| (k >> 2, (k >> 1) & 1, k & 1, self.joint[k]))
    }
}

/// A binary-input two-receiver broadcast channel.
#[derive(Debug, Clone, PartialEq)]
pub enum BroadcastChannelSpec {
    /// `p(y1, y2 | x)` with `y = y1 * outputs.1 + y2`.
    Classical { outputs: (usize, usize), rows: [Vec<f64>; 2] },
    /// Joint output states `ρ_x^{B1 B2}` and their marginals.
    Quantum {
        dims: (usize, usize),
        states: [DensityMatrix; 2],
        marginals: [[DensityMatrix; 2]; 2],
    },
}

impl BroadcastChannelSpec {
    pub fn classical(outputs: (usize, usize), rows: [Vec<f64>; 2]) -> Result<Self> {
        let m = outputs.0 * outputs.1;
        for row in &rows {
            let s: f64 = row.iter().sum();
            if row.len() != m || row.iter().any(|&p| p < 0.0) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!(
                    "broadcast row must have {m} nonnegative entries summing to 1 (sum {s})"
                )));
            }
        }
        Ok(Self::Classical { outputs, rows })
    }

    /// Product of two independent classical channels, one per receiver.
    pub fn classical_product(ch1: &crate::quantum::ClassicalChannelTable, ch2: &crate::quantum::ClassicalChannelTable) -> Result<Self> {
        let (m1, m2) = (ch1.outputs(), ch2.outputs());
        let rows = [0, 1].map(|x| {
            let mut r = Vec::with_capacity(m1 * m2);
            for a in ch1.row(x) {
                for b in ch2.row(x) {
                    r.push(a * b);
                }
            }
            r
        });
        Self::classical((m1, m2), rows)
    }

    pub fn quantum(dims: (usize, usize), states: [DensityMatrix; 2]) -> Result<Self> {
        let mut marginals: Vec<[DensityMatrix; 2]> = Vec::new();
        for keep_first in [true, false] {
            let pair = [0, 1].map(|x| -> Result<DensityMatrix> {
                DensityMatrix::new(partial_trace(&states[x].matrix(), dims.0, dims.1, keep_first)?)
            });
            let [a, b] = pair;
            marginals.push([a?, b?]);
        }
        let second = marginals.pop().expect("two marginals");
        let first = marginals.pop().expect("two marginals");
        Ok(Self::Quantum {
            dims,
            states,
            marginals: [first, second],
        })
    }

    /// Product states `ρ_x^{B1} ⊗ ρ_x^{B2}`.
    pub fn quantum_product(r1: [DensityMatrix; 2], r2: [DensityMatrix; 2]) -> Result<Self> {
        let dims = (r1[0].dim(), r2[0].dim());
        let states = [0, 1].map(|x| DensityMatrix::new(r1[x].matrix().kronecker(&r2[x].matrix())));
        let [a, b] = states;
        Self::quantum(dims, [a?, b?])
    }

    pub fn is_quantum(&self) -> bool {
        matches!(self, Self::Quantum { .. })
    }

    /// Output alphabet size seen by a receiver (classical channels).
    pub fn alphabet(&self, r: Receiver) -> usize {
        match self {
            Self::Classical { outputs, .. } => match r {
                Receiver::One => outputs.0,
                Receiver::Two => outputs.1,
            },
            Self::Quantum { dims, .. } => match r {
                Receiver::One => dims.0,
                Receiver::Two => dims.1,
            },
        }
    }

    /// `p(y_l | x)` for a classical channel.
    pub fn marginal_row(&self, r: Receiver, x: usize) -> Option<Vec<f64>> {
        let Self::Classical { outputs, rows } = self else {
            return None;
        };
        let (m1, m2) = *outputs;
        let mut out = vec![0.0; if r == Receiver::One { m1 } else { m2 }];
        for y1 in 0..m1 {
            for y2 in 0..m2 {
                let p = rows[x][y1 * m2 + y2];
                match r {
                    Receiver::One => out[y1] += p,
                    Receiver::Two => out[y2] += p,
                }
            }
        }
        Some(out)
    }

    /// The output seen by receiver `r` for input `x`, as an operator.
    pub fn marginal_operator(&self, r: Receiver, x: usize) -> Operator {
        match self {
            Self::Classical { .. } => Operator::Diagonal(self.marginal_row(r, x).expect("classical")),
            Self::Quantum { marginals, .. } => marginals[r.index()][x].operator().clone(),
        }
    }

    /// Exchanges the two receivers.
    pub fn swapped(&self) -> Self {
        match self {
            Self::Classical { outputs, rows } => {
                let (m1, m2) = *outputs;
                let rows = [0, 1].map(|x| {
                    let mut r = vec![0.0; m1 * m2];
                    for y1 in 0..m1 {
                        for y2 in 0..m2 {
                            r[y2 * m1 + y1] = rows[x][y1 * m2 + y2];
                        }
                    }
                    r
                });
                Self::Classical { outputs: (m2, m1), rows }
            }
            Self::Quantum { dims, states, marginals } => {
                let (d1, d2) = *dims;
                let swap = |m: &DMatrix<C64>| {
                    DMatrix::from_fn(d1 * d2, d1 * d2, |i, j| {
                        let (a, b) = (i % d1, i / d1);
                        let (c, d) = (j % d1, j / d1);
                        m[(a * d2 + b, c * d2 + d)]
                    })
                };
                let states = [0, 1].map(|x| DensityMatrix::new(swap(&states[x].matrix())).expect("swap preserves validity"));
                Self::Quantum {
                    dims: (d2, d1),
                    states,
                    marginals: [marginals[1].clone(), marginals[0].clone()],
                }
            }
        }
    }

    /// Samples `(y1, y2)` for input `x` (classical channels only).
    pub fn sample<R: Rng>(&self, x: usize, rng: &mut R) -> Result<(usize, usize)> {
        let Self::Classical { outputs, rows } = self else {
            return Err(Error::Unsupported("sampling a quantum channel output".into()));
        };
        let r: f64 = rng.random();
        let mut acc = 0.0;
        let row = &rows[x];
        let mut pick = row.len() - 1;
        for (k, &p) in row.iter().enumerate() {
            acc += p;
            if r < acc {
                pick = k;
                break;
            }
        }
        // skip zero-probability tail entries picked by rounding
        while row[pick] == 0.0 && pick > 0 {
            pick -= 1;
        }
        Ok((pick / outputs.1, pick % outputs.1))
    }
}

/// Joint columns `(p(t=0, s), p(t=1, s))` of a target bit and its classical side information.
///
/// The side-information index is `s = c * outputs + y`, where `c` packs the
/// conditioning layer bits in the order given and `y` is the receiver output
/// (`outputs = 1` when no output is observed).
#[derive(Debug, Clone, PartialEq)]
pub struct SideInfoTable {
    pub target: Layer,
    pub given: Vec<Layer>,
    pub receiver: Option<Receiver>,
    pub outputs: usize,
    pub cols: Vec<[f64; 2]>,
}

impl SideInfoTable {
    pub fn index(&self, given_bits: &[u8], y: usize) -> usize {
        let c = given_bits.iter().fold(0usize, |acc, &b| 2 * acc + b as usize);
        c * self.outputs + y
    }

    /// `ln p(t=0 | s) / p(t=1 | s)`; unreachable symbols give 0.
    pub fn llr(&self, s: usize) -> f64 {
        let [a, b] = self.cols[s];
        match (a > 0.0, b > 0.0) {
            (true, true) => (a / b).ln(),
            (true, false) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => 0.0,
        }
    }

    pub fn to_channel(&self) -> Result<HybridChannel> {
        HybridChannel::from_columns(self.cols.clone())
    }
}

fn validate_conditioning(target: Layer, given: &[Layer]) -> Result<()> {
    let mut seen = Vec::new();
    for &g in given {
        if g == target {
            return Err(Error::LayerOrdering(format!("{target:?} cannot condition on itself")));
        }
        if seen.contains(&g) {
            return Err(Error::LayerOrdering(format!("{g:?} listed twice")));
        }
        seen.push(g);
    }
    if target == Layer::V && !given.is_empty() {
        return Err(Error::LayerOrdering("V is decoded first and takes no layer side information".into()));
    }
    if given.iter().any(|&g| g != Layer::V) && !given.contains(&Layer::V) {
        return Err(Error::LayerOrdering("private layers are decoded after V".into()));
    }
    Ok(())
}

/// Side-information table for a classical channel (or no channel output).
pub fn side_info_table(
    spec: &BroadcastChannelSpec,
    aux: &AuxiliaryStructure,
    target: Layer,
    given: &[Layer],
    receiver: Option<Receiver>,
) -> Result<SideInfoTable> {
    validate_conditioning(target, given)?;
    let rows: Option<[Vec<f64>; 2]> = match receiver {
        None => None,
        Some(r) => Some([0, 1].map(|x| spec.marginal_row(r, x))).map(|[a, b]| -> Result<[Vec<f64>; 2]> {
            match (a, b) {
                (Some(a), Some(b)) => Ok([a, b]),
                _ => Err(Error::Unsupported("classical side-information table of a quantum channel".into())),
            }
        }).transpose()?,
    };
    let outputs = rows.as_ref().map_or(1, |r| r[0].len());
    let mut cols = vec![[0.0; 2]; (1 << given.len()) * outputs];
    for (v, v1, v2, p) in aux.outcomes() {
        if p == 0.0 {
            continue;
        }
        let t = target.bit(v, v1, v2);
        let c = given.iter().fold(0usize, |acc, g| 2 * acc + g.bit(v, v1, v2));
        match &rows {
            None => cols[c][t] += p,
            Some(rows) => {
                let x = aux.phi(v, v1, v2) as usize;
                for (y, &py) in rows[x].iter().enumerate() {
                    cols[c * outputs + y][t] += p * py;
                }
            }
        }
    }
    Ok(SideInfoTable {
        target,
        given: given.to_vec(),
        receiver,
        outputs,
        cols,
    })
}

/// The induced source `target | given layers, receiver output` as a hybrid channel.
///
/// For quantum channels with an observed output, each conditioning value is a
/// classical branch carrying `Σ p(t, c, rest) ρ^{B_l}_{φ}`.
pub fn induced_source(
    spec: &BroadcastChannelSpec,
    aux: &AuxiliaryStructure,
    target: Layer,
    given: &[Layer],
    receiver: Option<Receiver>,
) -> Result<HybridChannel> {
    match (spec, receiver) {
        (BroadcastChannelSpec::Quantum { .. }, Some(r)) => {
            validate_conditioning(target, given)?;
            let dim = spec.alphabet(r);
            let count = 1 << given.len();
            let mut branches: Vec<Branch> = (0..count)
                .map(|c| Branch {
                    label: (0..given.len()).rev().map(|b| ((c >> b) & 1) as u8).collect(),
                    zero: Operator::zeros(dim),
                    one: Operator::zeros(dim),
                })
                .collect();
            for (v, v1, v2, p) in aux.outcomes() {
                if p == 0.0 {
                    continue;
                }
                let c = given.iter().fold(0usize, |acc, g| 2 * acc + g.bit(v, v1, v2));
                let rho = spec.marginal_operator(r, aux.phi(v, v1, v2) as usize);
                let b = &mut branches[c];
                if target.bit(v, v1, v2) == 0 {
                    b.zero = b.zero.add_scaled(&rho, p);
                } else {
                    b.one = b.one.add_scaled(&rho, p);
                }
            }
            branches.retain(|b| b.weight() > 0.0);
            HybridChannel::from_branches(branches)
        }
        _ => side_info_table(spec, aux, target, given, receiver)?.to_channel(),
    }
}

/// The effective channel for a layer at a receiver: `V → B_l` or `V_l → B_l` given `V`.
pub fn induced_cq_channel(
    spec: &BroadcastChannelSpec,
    aux: &AuxiliaryStructure,
    layer: Layer,
    receiver: Receiver,
) -> Result<HybridChannel> {
    let given: &[Layer] = match layer {
        Layer::V => &[],
        l if l == Layer::private(receiver) => &[Layer::V],
        _ => {
            return Err(Error::LayerOrdering(format!(
                "layer {layer:?} is not decoded by receiver {}",
                receiver.number()
            )))
        }
    };
    induced_source(spec, aux, layer, given, Some(receiver))
}
