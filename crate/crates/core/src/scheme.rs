//! The layered broadcast polar code: construction, encoding, decoding and
//! Monte Carlo simulation.
//!
//! Three layers are coded per block: the superposition layer `U0` (carried
//! into `V`), the private layer of `sup` and the private layer of `oth`. A
//! frame is `k` blocks; chained content moves between neighbouring blocks as
//! laid out by [`ChainingSchedule`].

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chaining::{build_schedule, derive_set_bundle, ChainingSchedule, ProfileSet, SetBundle, SetReading};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, map_range, ExecMode};
use crate::model::{side_info_table, AuxiliaryStructure, BroadcastChannelSpec, Layer, Receiver, SideInfoTable};
use crate::profile::{IndexSet, ProfileOptions, Threshold};
use crate::region::information_quantities;
use crate::sc::{hard_decision, rounding_decision, successive_cancel};

/// Which corner point the code targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Corner {
    /// The receiver with the larger `I(V;B)` owns the superposition layer.
    #[default]
    A,
    /// The receiver with the smaller `I(V;B)` owns it.
    B,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CodeConfig {
    pub n: usize,
    pub k: usize,
    pub threshold: Threshold,
    pub corner: Corner,
    pub reading: SetReading,
    pub profile: ProfileOptions,
    pub shared_seed: u64,
}

impl Default for CodeConfig {
    fn default() -> Self {
        Self {
            n: 256,
            k: 4,
            threshold: Threshold::default(),
            corner: Corner::A,
            reading: SetReading::RateConsistent,
            profile: ProfileOptions::default(),
            shared_seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodeLayer {
    Superposition,
    Sup,
    Oth,
}

impl CodeLayer {
    pub const ALL: [CodeLayer; 3] = [CodeLayer::Superposition, CodeLayer::Sup, CodeLayer::Oth];

    fn index(self) -> usize {
        match self {
            CodeLayer::Superposition => 0,
            CodeLayer::Sup => 1,
            CodeLayer::Oth => 2,
        }
    }
}

/// What a position of a block holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Message(Receiver),
    Common,
    /// Uniform bit from the shared randomness.
    Shared,
    /// Repeats the value at a position of the following block.
    Copy { layer: CodeLayer, block: usize, pos: usize },
    /// Drawn from the encoder's conditional with the shared randomness.
    Sampled,
    /// Drawn from the conditional the binned receiver can reproduce.
    Forced,
}

/// Position counts of one steady-state block of a layer; they sum to `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Census {
    pub info: usize,
    pub chained: usize,
    pub shared: usize,
    /// Sampled positions whose encoder conditional is nearly deterministic.
    pub frozen: usize,
    /// Sampled positions that did not polarize.
    pub overhead: usize,
}

impl Census {
    pub fn total(&self) -> usize {
        self.info + self.chained + self.shared + self.frozen + self.overhead
    }
}

/// Counted rates in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CodeRates {
    /// Per block in steady state.
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    /// Over the whole frame of `k` blocks.
    pub r0_frame: f64,
    pub r1_frame: f64,
    pub r2_frame: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BroadcastPolarCode {
    pub n: usize,
    pub k: usize,
    pub threshold: Threshold,
    pub corner: Corner,
    pub shared_seed: u64,
    /// Receiver owning the superposition layer.
    pub sup: Receiver,
    /// True when receiver 1 owns the superposition layer.
    pub role_swapped: bool,
    #[serde(skip)]
    pub spec: BroadcastChannelSpec,
    pub aux: AuxiliaryStructure,
    #[serde(skip)]
    pub profiles: ProfileSet,
    pub bundle: SetBundle,
    pub schedule: ChainingSchedule,
    /// Superposition positions carrying the common message.
    pub common: IndexSet,
    /// Message positions given up for reliability, per layer.
    pub dropped: [IndexSet; 3],
    #[serde(skip)]
    roles: Vec<Role>,
}

/// The receiver whose message rides the superposition layer at a corner.
pub fn superposition_owner(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure, corner: Corner) -> Receiver {
    let stronger = information_quantities(spec, aux).stronger();
    match corner {
        Corner::A => stronger,
        Corner::B => stronger.other(),
    }
}

pub fn build_code(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure, config: &CodeConfig) -> Result<BroadcastPolarCode> {
    if config.reading == SetReading::Literal {
        return Err(Error::Unsupported("the literal set reading is for rate accounting only".into()));
    }
    let sup = superposition_owner(spec, aux, config.corner);
    let profiles = ProfileSet::compute(spec, aux, sup, config.n, &config.profile)?;
    let bundle = derive_set_bundle(&profiles, &config.threshold, config.reading)?;
    let schedule = build_schedule(&bundle, config.k)?;
    let n = config.n;
    let mut code = BroadcastPolarCode {
        n,
        k: config.k,
        threshold: config.threshold,
        corner: config.corner,
        shared_seed: config.shared_seed,
        sup,
        role_swapped: sup == Receiver::One,
        spec: spec.clone(),
        aux: aux.clone(),
        profiles,
        bundle,
        schedule,
        common: IndexSet::empty(n),
        dropped: [IndexSet::empty(n), IndexSet::empty(n), IndexSet::empty(n)],
        roles: Vec::new(),
    };
    code.roles = code.layout();
    Ok(code)
}

impl BroadcastPolarCode {
    pub fn oth(&self) -> Receiver {
        self.sup.other()
    }

    fn slot(&self, layer: CodeLayer, block: usize, pos: usize) -> usize {
        (layer.index() * self.k + block) * self.n + pos
    }

    pub fn role(&self, layer: CodeLayer, block: usize, pos: usize) -> Role {
        self.roles[self.slot(layer, block, pos)]
    }

    /// Superposition positions decodable by `sup` (after alignment, by both).
    fn superposition_messages(&self) -> IndexSet {
        let b = &self.bundle;
        b.i_sup.difference(&self.dropped[0]).expect("same n")
    }

    /// Positions of the common message in priority order: decodable by both first, then chained.
    fn common_candidates(&self) -> Vec<usize> {
        let both = self.bundle.i_sup.intersection(&self.bundle.i_v_oth).expect("same n");
        let mut out: Vec<usize> = both.iter().collect();
        out.extend(self.schedule.p2.iter());
        out.extend(self.schedule.b2.iter());
        out.retain(|&p| !self.dropped[0].contains(p));
        out
    }

    fn layout(&self) -> Vec<Role> {
        let (n, k) = (self.n, self.k);
        let b = &self.bundle;
        let s = &self.schedule;
        let both = b.i_sup.intersection(&b.i_v_oth).expect("same n");
        let mut a1_source = vec![None; n];
        for p in &s.superposition_pairs {
            a1_source[p.carrier] = Some(p.source);
        }
        let mut b1_source = vec![None; n];
        for p in &s.b_pairs {
            b1_source[p.carrier] = Some(p.source);
        }
        let mut r_source = vec![None; n];
        for p in &s.r_pairs {
            r_source[p.carrier] = Some(p.source);
        }
        let f1 = b.f_chain();
        let (sup, oth) = (self.sup, self.oth());
        let mut roles = vec![Role::Shared; 3 * k * n];
        for j in 0..k {
            let last = j + 1 == k;
            for pos in 0..n {
                // superposition layer
                let dropped = self.dropped[0].contains(pos);
                let sup_msg = if self.common.contains(pos) { Role::Common } else { Role::Message(sup) };
                let r0 = if !b.free_v.contains(pos) {
                    Role::Sampled
                } else if both.contains(pos) {
                    if dropped { Role::Shared } else { sup_msg }
                } else if s.p2.contains(pos) || s.b2.contains(pos) {
                    if dropped || j == 0 { Role::Shared } else { sup_msg }
                } else if let Some(src) = a1_source[pos] {
                    if last || self.dropped[0].contains(src) {
                        Role::Shared
                    } else {
                        Role::Copy { layer: CodeLayer::Superposition, block: j + 1, pos: src }
                    }
                } else {
                    Role::Shared
                };
                roles[self.slot(CodeLayer::Superposition, j, pos)] = r0;

                let r1 = if !b.free_sup.contains(pos) {
                    Role::Sampled
                } else if b.i_bin.contains(pos) && !self.dropped[1].contains(pos) {
                    Role::Message(sup)
                } else {
                    Role::Shared
                };
                roles[self.slot(CodeLayer::Sup, j, pos)] = r1;

                let r2 = if !b.free_oth.contains(pos) {
                    if f1.contains(pos) && j == 0 { Role::Forced } else { Role::Sampled }
                } else if !b.i_oth.contains(pos) {
                    Role::Shared
                } else if let Some(src) = b1_source[pos] {
                    if self.dropped[0].contains(src) {
                        Role::Shared
                    } else if last {
                        Role::Message(oth)
                    } else {
                        Role::Copy { layer: CodeLayer::Superposition, block: j + 1, pos: src }
                    }
                } else if let Some(src) = r_source[pos] {
                    if last {
                        Role::Message(oth)
                    } else {
                        Role::Copy { layer: CodeLayer::Oth, block: j + 1, pos: src }
                    }
                } else if self.dropped[2].contains(pos) {
                    Role::Shared
                } else {
                    Role::Message(oth)
                };
                roles[self.slot(CodeLayer::Oth, j, pos)] = r2;
            }
        }
        roles
    }

    /// Message slots of a stream in transmission order: blocks, then layers, then positions.
    fn stream_slots(&self, want: impl Fn(Role) -> bool) -> Vec<usize> {
        let mut out = Vec::new();
        for j in 0..self.k {
            for layer in CodeLayer::ALL {
                for pos in 0..self.n {
                    let s = self.slot(layer, j, pos);
                    if want(self.roles[s]) {
                        out.push(s);
                    }
                }
            }
        }
        out
    }

    fn private_slots(&self, r: Receiver) -> Vec<usize> {
        self.stream_slots(|role| role == Role::Message(r))
    }

    fn common_slots(&self) -> Vec<usize> {
        self.stream_slots(|role| role == Role::Common)
    }

    /// Bits per frame of `(m1, m2, m0)`.
    pub fn message_lengths(&self) -> (usize, usize, usize) {
        (
            self.private_slots(Receiver::One).len(),
            self.private_slots(Receiver::Two).len(),
            self.common_slots().len(),
        )
    }

    pub fn rates(&self) -> CodeRates {
        let b = &self.bundle;
        let s = &self.schedule;
        let n = self.n as f64;
        let common = self.common.len();
        let sup_steady = self.superposition_messages().len() - common + b.i_bin.difference(&self.dropped[1]).expect("same n").len();
        let carriers = s.b1.len() + s.rbin.len();
        let oth_steady = b.i_oth.len() - carriers - b.i_oth.intersection(&self.dropped[2]).expect("same n").len();
        let (m1, m2, m0) = self.message_lengths();
        let kn = (self.k * self.n) as f64;
        let (r_sup, r_oth) = (sup_steady as f64 / n, oth_steady as f64 / n);
        let (r1, r2) = match self.sup {
            Receiver::One => (r_sup, r_oth),
            Receiver::Two => (r_oth, r_sup),
        };
        CodeRates {
            r0: common as f64 / n,
            r1,
            r2,
            r0_frame: m0 as f64 / kn,
            r1_frame: m1 as f64 / kn,
            r2_frame: m2 as f64 / kn,
        }
    }

    /// Census of a steady-state block (the last block when `k = 1`).
    pub fn census(&self, layer: CodeLayer) -> Census {
        let j = if self.k > 1 { 1 } else { 0 };
        let z = match layer {
            CodeLayer::Superposition => &self.profiles.v.z,
            CodeLayer::Sup => &self.profiles.s_v.z,
            CodeLayer::Oth => &self.profiles.o_vs.z,
        };
        let mut c = Census::default();
        for pos in 0..self.n {
            match self.role(layer, j, pos) {
                Role::Message(_) | Role::Common => c.info += 1,
                Role::Copy { .. } => c.chained += 1,
                Role::Shared => c.shared += 1,
                Role::Sampled | Role::Forced => {
                    if z[pos] <= self.threshold.low {
                        c.frozen += 1
                    } else {
                        c.overhead += 1
                    }
                }
            }
        }
        c
    }

    /// Moves `floor(r0 · n)` superposition message positions per block to the common message.
    pub fn allocate_common(&self, r0: f64) -> Result<BroadcastPolarCode> {
        if !(0.0..=1.0).contains(&r0) {
            return Err(Error::Config(format!("common rate {r0} outside [0, 1]")));
        }
        let requested = (r0 * self.n as f64 + 1e-9).floor() as usize;
        let candidates = self.common_candidates();
        if requested > candidates.len() {
            return Err(Error::CommonCapacity {
                requested,
                maximum: candidates.len(),
            });
        }
        let mut code = self.clone();
        code.common = IndexSet::new(self.n, candidates[..requested].to_vec())?;
        code.roles = code.layout();
        Ok(code)
    }

    /// Largest common rate `allocate_common` accepts, in bits per use.
    pub fn common_capacity(&self) -> f64 {
        self.common_candidates().len() as f64 / self.n as f64
    }

    /// Keeps the most reliable `fraction` of each receiver's per-block message positions.
    ///
    /// Given-up positions become shared randomness, as do their chaining carriers.
    pub fn backoff(&self, fraction: f64) -> Result<BroadcastPolarCode> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Config(format!("backoff fraction {fraction} outside [0, 1]")));
        }
        let b = &self.bundle;
        let s = &self.schedule;
        let n = self.n;
        // sup: superposition positions (non-common) and binning positions, ranked together
        let mut sup_pool: Vec<(f64, usize, usize)> = self
            .superposition_messages()
            .iter()
            .filter(|&p| !self.common.contains(p))
            .map(|p| (b.z_v_sup[p], 0, p))
            .collect();
        sup_pool.extend(b.i_bin.difference(&self.dropped[1])?.iter().map(|p| (b.z_sup_dec[p], 1, p)));
        let carriers = s.b1.union(&s.rbin)?;
        let mut oth_pool: Vec<(f64, usize, usize)> = b
            .i_oth
            .difference(&carriers)?
            .difference(&self.dropped[2])?
            .iter()
            .map(|p| (b.z_oth_dec[p], 2, p))
            .collect();
        let mut dropped: [Vec<usize>; 3] = self.dropped.clone().map(|d| d.indices().to_vec());
        for pool in [&mut sup_pool, &mut oth_pool] {
            let keep = (fraction * pool.len() as f64 + 1e-9).floor() as usize;
            pool.sort_by(|a, b| b.0.total_cmp(&a.0).then(b.2.cmp(&a.2)));
            for &(_, layer, p) in &pool[..pool.len() - keep] {
                dropped[layer].push(p);
            }
        }
        let mut code = self.clone();
        code.dropped = [0, 1, 2].map(|l| IndexSet::new(n, dropped[l].clone()).expect("positions below n"));
        code.roles = code.layout();
        Ok(code)
    }

    /// Sum of `Z` over the positions each receiver decides by hard decision, per layer.
    pub fn analyze_error_bound(&self) -> ErrorBound {
        let j = if self.k > 1 { 1 } else { 0 };
        let b = &self.bundle;
        let (sup, oth) = (self.sup, self.oth());
        let mut sup_layers = [0.0; 2];
        let mut oth_layers = [0.0; 2];
        for pos in 0..self.n {
            match self.role(CodeLayer::Superposition, j, pos) {
                Role::Message(_) | Role::Common => {
                    if b.i_sup.contains(pos) {
                        sup_layers[0] += b.z_v_sup[pos];
                    }
                    if b.i_v_oth.contains(pos) {
                        oth_layers[0] += b.z_v_oth[pos];
                    }
                }
                Role::Copy { .. } => oth_layers[0] += b.z_v_oth[pos],
                _ => {}
            }
            if self.role(CodeLayer::Sup, j, pos) == Role::Message(sup) {
                sup_layers[1] += b.z_sup_dec[pos];
            }
            match self.role(CodeLayer::Oth, j, pos) {
                Role::Message(_) | Role::Copy { .. } => oth_layers[1] += b.z_oth_dec[pos],
                Role::Sampled if !b.f_chain().contains(pos) => oth_layers[1] += b.z_oth_dec[pos],
                _ => {}
            }
        }
        let mut per_receiver = [[0.0; 2]; 2];
        per_receiver[sup.index()] = sup_layers;
        per_receiver[oth.index()] = oth_layers;
        ErrorBound { per_receiver }
    }
}

/// Union bounds per receiver: `[superposition layer, own private layer]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorBound {
    pub per_receiver: [[f64; 2]; 2],
}

impl ErrorBound {
    pub fn total(&self, r: Receiver) -> f64 {
        self.per_receiver[r.index()].iter().sum()
    }
}

/// Messages of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Messages {
    pub m1: Vec<u8>,
    pub m2: Vec<u8>,
    pub m0: Vec<u8>,
}

impl Messages {
    pub fn random<R: Rng>(code: &BroadcastPolarCode, rng: &mut R) -> Self {
        let (l1, l2, l0) = code.message_lengths();
        let mut draw = |l: usize| (0..l).map(|_| rng.random_range(0..2u8)).collect();
        Self {
            m1: draw(l1),
            m2: draw(l2),
            m0: draw(l0),
        }
    }

    fn private(&self, r: Receiver) -> &[u8] {
        match r {
            Receiver::One => &self.m1,
            Receiver::Two => &self.m2,
        }
    }
}

/// The uniforms shared by encoder and decoders, one per slot of a frame.
pub fn shared_randomness(code: &BroadcastPolarCode, trial: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(code.shared_seed, trial));
    (0..3 * code.k * code.n).map(|_| rng.random::<f64>()).collect()
}

/// Encoder output for one frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Encoded {
    /// `u` sequences per layer, `k n` each.
    pub u: [Vec<u8>; 3],
    /// Layer codewords `V`, `V_sup`, `V_oth`, `k n` each.
    pub layers: [Vec<u8>; 3],
    pub x: Vec<u8>,
}

struct Lanes {
    tables: Vec<SideInfoTable>,
}

impl Lanes {
    fn new(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure, entries: &[(Layer, &[Layer], Option<Receiver>)]) -> Result<Self> {
        let tables = entries
            .iter()
            .map(|&(t, g, r)| side_info_table(spec, aux, t, g, r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { tables })
    }

    /// Coordinate-major LLRs for one block.
    fn llrs(&self, given: &[&[u8]], y: Option<&[usize]>, n: usize) -> Vec<f64> {
        let lanes = self.tables.len();
        let mut out = vec![0.0; n * lanes];
        let mut bits = Vec::with_capacity(given.len());
        for t in 0..n {
            for (l, table) in self.tables.iter().enumerate() {
                bits.clear();
                bits.extend(given.iter().take(table.given.len()).map(|g| g[t]));
                let yy = if table.receiver.is_some() { y.map_or(0, |y| y[t]) } else { 0 };
                out[t * lanes + l] = table.llr(table.index(&bits, yy));
            }
        }
        out
    }
}

impl BroadcastPolarCode {
    fn layer_of(&self, r: Receiver) -> Layer {
        Layer::private(r)
    }

    pub fn encode(&self, msgs: &Messages, shared: &[f64]) -> Result<Encoded> {
        let (n, k) = (self.n, self.k);
        let (l1, l2, l0) = self.message_lengths();
        for (stream, expected, got) in [("m1", l1, msgs.m1.len()), ("m2", l2, msgs.m2.len()), ("m0", l0, msgs.m0.len())] {
            if expected != got {
                return Err(Error::MessageLength { stream, expected, got });
            }
        }
        if shared.len() != 3 * k * n {
            return Err(Error::DimensionMismatch {
                expected: 3 * k * n,
                got: shared.len(),
            });
        }
        let mut val: Vec<Option<u8>> = vec![None; 3 * k * n];
        for r in [Receiver::One, Receiver::Two] {
            for (s, &bit) in self.private_slots(r).iter().zip(msgs.private(r)) {
                val[*s] = Some(bit);
            }
        }
        for (s, &bit) in self.common_slots().iter().zip(&msgs.m0) {
            val[*s] = Some(bit);
        }
        let (ls, lo) = (self.layer_of(self.sup), self.layer_of(self.oth()));
        let spec = &self.spec;
        let aux = &self.aux;
        let lanes_v = Lanes::new(spec, aux, &[(Layer::V, &[], None)])?;
        let lanes_s = Lanes::new(spec, aux, &[(ls, &[Layer::V], None)])?;
        let lanes_o = Lanes::new(spec, aux, &[(lo, &[Layer::V, ls], None), (lo, &[Layer::V], None)])?;
        let mut u = [vec![0u8; k * n], vec![0u8; k * n], vec![0u8; k * n]];
        let mut layers = [vec![0u8; k * n], vec![0u8; k * n], vec![0u8; k * n]];

        let run = |layer: CodeLayer, j: usize, llr: &[f64], lanes: usize, val: &mut Vec<Option<u8>>, u: &mut [Vec<u8>; 3]| -> Result<Vec<u8>> {
            let mut decide = |i: usize, l: &[f64]| -> u8 {
                let s = self.slot(layer, j, i);
                let r = shared[s];
                let bit = match self.roles[s] {
                    Role::Sampled => rounding_decision(l[0], r),
                    Role::Forced => rounding_decision(l[lanes - 1], r),
                    Role::Shared => u8::from(r < 0.5),
                    Role::Message(_) | Role::Common => val[s].expect("message bits assigned"),
                    Role::Copy { layer, block, pos } => val[self.slot(layer, block, pos)].expect("chained source encoded first"),
                };
                val[s] = Some(bit);
                u[layer.index()][j * n + i] = bit;
                bit
            };
            successive_cancel(llr, lanes, &mut decide)
        };

        for j in 0..k {
            let llr = lanes_v.llrs(&[], None, n);
            let v = run(CodeLayer::Superposition, j, &llr, 1, &mut val, &mut u)?;
            layers[0][j * n..(j + 1) * n].copy_from_slice(&v);
        }
        for j in 0..k {
            let llr = lanes_s.llrs(&[&layers[0][j * n..(j + 1) * n]], None, n);
            let w = run(CodeLayer::Sup, j, &llr, 1, &mut val, &mut u)?;
            layers[1][j * n..(j + 1) * n].copy_from_slice(&w);
        }
        for j in (0..k).rev() {
            let llr = lanes_o.llrs(&[&layers[0][j * n..(j + 1) * n], &layers[1][j * n..(j + 1) * n]], None, n);
            let w = run(CodeLayer::Oth, j, &llr, 2, &mut val, &mut u)?;
            layers[2][j * n..(j + 1) * n].copy_from_slice(&w);
        }
        let x = (0..k * n)
            .map(|t| {
                let (vs, vo) = (layers[1][t] as usize, layers[2][t] as usize);
                let (v1, v2) = match self.sup {
                    Receiver::One => (vs, vo),
                    Receiver::Two => (vo, vs),
                };
                self.aux.phi(layers[0][t] as usize, v1, v2)
            })
            .collect();
        Ok(Encoded { u, layers, x })
    }

    /// Decodes the private message and the common message at receiver `r`.
    pub fn decode(&self, r: Receiver, y: &[usize], shared: &[f64]) -> Result<Decoded> {
        let (n, k) = (self.n, self.k);
        if y.len() != k * n {
            return Err(Error::DimensionMismatch { expected: k * n, got: y.len() });
        }
        if self.spec.is_quantum() {
            return Err(Error::Unsupported("decoding needs a classical channel; use the error bound".into()));
        }
        let is_sup = r == self.sup;
        let own = if is_sup { CodeLayer::Sup } else { CodeLayer::Oth };
        let ll = self.layer_of(r);
        let lanes_v = Lanes::new(&self.spec, &self.aux, &[(Layer::V, &[], None), (Layer::V, &[], Some(r))])?;
        let lanes_p = Lanes::new(&self.spec, &self.aux, &[(ll, &[Layer::V], None), (ll, &[Layer::V], Some(r))])?;
        let mut dec: Vec<Option<u8>> = vec![None; 3 * k * n];
        let mut known: Vec<Option<u8>> = vec![None; 3 * k * n];
        let mut v = vec![0u8; k * n];
        let mut w = vec![0u8; k * n];

        let run = |layer: CodeLayer, j: usize, llr: &[f64], dec: &mut Vec<Option<u8>>, known: &mut Vec<Option<u8>>| -> Result<Vec<u8>> {
            let mut decide = |i: usize, l: &[f64]| -> u8 {
                let s = self.slot(layer, j, i);
                let rnd = shared[s];
                let role = self.roles[s];
                let copied = match role {
                    Role::Copy { layer, block, pos } => dec[self.slot(layer, block, pos)],
                    _ => None,
                };
                let bit = if let Some(b) = known[s].or(copied) {
                    b
                } else {
                    match role {
                        Role::Sampled if layer == CodeLayer::Oth => hard_decision(l[1]),
                        Role::Sampled | Role::Forced => rounding_decision(l[0], rnd),
                        Role::Shared => u8::from(rnd < 0.5),
                        Role::Message(_) | Role::Common | Role::Copy { .. } => hard_decision(l[1]),
                    }
                };
                if let Role::Copy { layer, block, pos } = role {
                    let src = self.slot(layer, block, pos);
                    if dec[src].is_none() {
                        known[src] = Some(bit);
                    }
                }
                dec[s] = Some(bit);
                bit
            };
            successive_cancel(llr, 2, &mut decide)
        };

        let order: Vec<usize> = if is_sup { (0..k).rev().collect() } else { (0..k).collect() };
        for &j in &order {
            let yb = &y[j * n..(j + 1) * n];
            let llr = lanes_v.llrs(&[], Some(yb), n);
            let vb = run(CodeLayer::Superposition, j, &llr, &mut dec, &mut known)?;
            v[j * n..(j + 1) * n].copy_from_slice(&vb);
            let llr = lanes_p.llrs(&[&vb], Some(yb), n);
            let wb = run(own, j, &llr, &mut dec, &mut known)?;
            w[j * n..(j + 1) * n].copy_from_slice(&wb);
        }
        let collect = |slots: Vec<usize>| slots.iter().map(|&s| dec[s].expect("every slot decided")).collect();
        Ok(Decoded {
            private: collect(self.private_slots(r)),
            common: collect(self.common_slots()),
            v,
            own_layer: w,
        })
    }

    pub fn decode_receiver1(&self, y1: &[usize], shared: &[f64]) -> Result<Decoded> {
        self.decode(Receiver::One, y1, shared)
    }

    pub fn decode_receiver2(&self, y2: &[usize], shared: &[f64]) -> Result<Decoded> {
        self.decode(Receiver::Two, y2, shared)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decoded {
    pub private: Vec<u8>,
    pub common: Vec<u8>,
    /// Decoded `V` codeword.
    pub v: Vec<u8>,
    /// Decoded codeword of the receiver's private layer.
    pub own_layer: Vec<u8>,
}

/// Seeds of a simulation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSeeds {
    pub messages: u64,
    pub noise: u64,
}

/// Everything about one simulated frame.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransmissionRecord {
    pub trial: u64,
    pub messages: Messages,
    pub encoded: Encoded,
    pub y1: Vec<usize>,
    pub y2: Vec<usize>,
    pub decoded1: Decoded,
    pub decoded2: Decoded,
    pub m1_ok: bool,
    pub m2_ok: bool,
    /// Both receivers recovered the common message.
    pub m0_ok: bool,
    /// Blocks in which some private bit of receiver 1 (resp. 2) was wrong.
    pub block_errors: [usize; 2],
}

impl BroadcastPolarCode {
    /// Number of blocks whose private bits for `r` differ between `sent` and `got`.
    pub fn block_errors(&self, r: Receiver, sent: &[u8], got: &[u8]) -> usize {
        let mut bad = vec![false; self.k];
        for ((&s, a), b) in self.private_slots(r).iter().zip(sent).zip(got) {
            if a != b {
                bad[(s / self.n) % self.k] = true;
            }
        }
        bad.iter().filter(|&&b| b).count()
    }
}

pub fn run_trial(code: &BroadcastPolarCode, trial: u64, seeds: SimulationSeeds) -> Result<TransmissionRecord> {
    let shared = shared_randomness(code, trial);
    let mut msg_rng = ChaCha8Rng::seed_from_u64(derive_seed(seeds.messages, trial));
    let messages = Messages::random(code, &mut msg_rng);
    let encoded = code.encode(&messages, &shared)?;
    let mut noise = ChaCha8Rng::seed_from_u64(derive_seed(seeds.noise, trial));
    let mut y1 = Vec::with_capacity(encoded.x.len());
    let mut y2 = Vec::with_capacity(encoded.x.len());
    for &x in &encoded.x {
        let (a, b) = code.spec.sample(x as usize, &mut noise)?;
        y1.push(a);
        y2.push(b);
    }
    let decoded1 = code.decode_receiver1(&y1, &shared)?;
    let decoded2 = code.decode_receiver2(&y2, &shared)?;
    let block_errors = [
        code.block_errors(Receiver::One, &messages.m1, &decoded1.private),
        code.block_errors(Receiver::Two, &messages.m2, &decoded2.private),
    ];
    Ok(TransmissionRecord {
        trial,
        block_errors,
        m1_ok: decoded1.private == messages.m1,
        m2_ok: decoded2.private == messages.m2,
        m0_ok: decoded1.common == messages.m0 && decoded2.common == messages.m0,
        messages,
        encoded,
        y1,
        y2,
        decoded1,
        decoded2,
    })
}

/// One CSV row per trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub trial: u64,
    pub m1_ok: bool,
    pub m2_ok: bool,
    pub m0_ok: bool,
    pub m1_block_errors: usize,
    pub m2_block_errors: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub trials: usize,
    pub blocks_per_frame: usize,
    /// Frames in error for `m1`, `m2`, `m0`.
    pub errors: [usize; 3],
    /// Frame error rates of `m1`, `m2`, `m0`.
    pub error_rate: [f64; 3],
    /// Fraction of the `trials · k` blocks in error, per receiver.
    pub block_error_rate: [f64; 2],
    pub outcomes: Vec<TrialOutcome>,
}

pub fn simulate(code: &BroadcastPolarCode, trials: usize, seeds: SimulationSeeds, mode: ExecMode) -> Result<SimulationSummary> {
    let results = map_range(trials, mode, |t| {
        run_trial(code, t as u64, seeds).map(|r| TrialOutcome {
            trial: r.trial,
            m1_ok: r.m1_ok,
            m2_ok: r.m2_ok,
            m0_ok: r.m0_ok,
            m1_block_errors: r.block_errors[0],
            m2_block_errors: r.block_errors[1],
        })
    });
    let outcomes = results.into_iter().collect::<Result<Vec<_>>>()?;
    let errors = [
        outcomes.iter().filter(|o| !o.m1_ok).count(),
        outcomes.iter().filter(|o| !o.m2_ok).count(),
        outcomes.iter().filter(|o| !o.m0_ok).count(),
    ];
    let denom = trials.max(1) as f64;
    let blocks = denom * code.k as f64;
    let block_error_rate = [
        outcomes.iter().map(|o| o.m1_block_errors).sum::<usize>() as f64 / blocks,
        outcomes.iter().map(|o| o.m2_block_errors).sum::<usize>() as f64 / blocks,
    ];
    Ok(SimulationSummary {
        trials,
        blocks_per_frame: code.k,
        errors,
        error_rate: errors.map(|e| e as f64 / denom),
        block_error_rate,
        outcomes,
    })
}

impl SimulationSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for o in &self.outcomes {
            w.serialize(o)?;
        }
        w.flush()?;
        Ok(())
    }
}
