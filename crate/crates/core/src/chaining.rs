//! Index sets of the broadcast construction and the alignment/chaining
//! schedule across blocks.
//!
//! Roles are generic: `sup` is the receiver whose message rides the
//! superposition layer `U_(0)` and whose private layer is encoded first; `oth`
//! is the receiver whose private layer is binned against it. In the default
//! corner `sup` is the receiver with the larger `I(V;B)`.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{AuxiliaryStructure, BroadcastChannelSpec, Layer, Receiver};
use crate::profile::{conditional_profile, high_set, low_set, IndexSet, PolarizationProfile, ProfileOptions, Threshold};

/// All profiles the construction needs, by role.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSet {
    pub sup: Receiver,
    /// `V`
    pub v: PolarizationProfile,
    /// `V | B_sup`
    pub v_sup: PolarizationProfile,
    /// `V | B_oth`
    pub v_oth: PolarizationProfile,
    /// `V_sup | V`
    pub s_v: PolarizationProfile,
    /// `V_sup | V, B_sup`
    pub s_vb: PolarizationProfile,
    /// `V_oth | V`
    pub o_v: PolarizationProfile,
    /// `V_oth | V, V_sup`
    pub o_vs: PolarizationProfile,
    /// `V_oth | V, B_oth`
    pub o_vb: PolarizationProfile,
}

impl ProfileSet {
    pub fn compute(
        spec: &BroadcastChannelSpec,
        aux: &AuxiliaryStructure,
        sup: Receiver,
        n: usize,
        opts: &ProfileOptions,
    ) -> Result<Self> {
        let oth = sup.other();
        let (ls, lo) = (Layer::private(sup), Layer::private(oth));
        let p = |target, given: &[Layer], r| conditional_profile(spec, aux, target, given, r, n, opts);
        Ok(Self {
            sup,
            v: p(Layer::V, &[], None)?,
            v_sup: p(Layer::V, &[], Some(sup))?,
            v_oth: p(Layer::V, &[], Some(oth))?,
            s_v: p(ls, &[Layer::V], None)?,
            s_vb: p(ls, &[Layer::V], Some(sup))?,
            o_v: p(lo, &[Layer::V], None)?,
            o_vs: p(lo, &[Layer::V, ls], None)?,
            o_vb: p(lo, &[Layer::V], Some(oth))?,
        })
    }

    pub fn n(&self) -> usize {
        self.v.n
    }

    pub fn all(&self) -> [&PolarizationProfile; 8] {
        [&self.v, &self.v_sup, &self.v_oth, &self.s_v, &self.s_vb, &self.o_v, &self.o_vs, &self.o_vb]
    }
}

/// Which second member the binning sets use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetReading {
    /// `I_bin = H_{Vs|V} ∩ L_{Vs|V,Bs}`, `I_oth = H_{Vo|V,Vs} ∩ L_{Vo|V,Bo}`.
    #[default]
    RateConsistent,
    /// `I_bin = H_{Vs|V} ∩ L_{V|Bs}`, `I_oth = H_{Vo|V} ∩ L_{V|Bo}`; accounting only.
    Literal,
}

/// The index sets of one block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetBundle {
    pub n: usize,
    pub sup: Receiver,
    pub reading: SetReading,
    /// `H_V ∩ L_{V|B_sup}`
    pub i_sup: IndexSet,
    /// `H_V ∩ L_{V|B_oth}`
    pub i_v_oth: IndexSet,
    /// Binning positions of the `sup` layer.
    pub i_bin: IndexSet,
    /// Message positions of the `oth` layer.
    pub i_oth: IndexSet,
    /// `L_{Vo|V,Vs} ∩ H_{Vo|V} ∩ H_{Vo|V,Bo}`
    pub f_oth: IndexSet,
    /// Positions of the `oth` layer neither free for the encoder nor decodable by `oth`.
    pub f_oth_eff: IndexSet,
    /// `H_V`, `H_{Vs|V}`, `H_{Vo|V,Vs}`: positions the encoder fills freely.
    pub free_v: IndexSet,
    pub free_sup: IndexSet,
    pub free_oth: IndexSet,
    #[serde(skip)]
    pub z_v_sup: Vec<f64>,
    #[serde(skip)]
    pub z_v_oth: Vec<f64>,
    #[serde(skip)]
    pub z_sup_dec: Vec<f64>,
    #[serde(skip)]
    pub z_oth_dec: Vec<f64>,
}

impl SetBundle {
    /// Chained positions: the effective set unless the literal reading is in use.
    pub fn f_chain(&self) -> &IndexSet {
        match self.reading {
            SetReading::RateConsistent => &self.f_oth_eff,
            SetReading::Literal => &self.f_oth,
        }
    }
}

pub fn derive_set_bundle(p: &ProfileSet, t: &Threshold, reading: SetReading) -> Result<SetBundle> {
    let n = p.n();
    for prof in p.all() {
        if prof.n != n {
            return Err(Error::DimensionMismatch { expected: n, got: prof.n });
        }
    }
    let h_v = high_set(&p.v, t);
    let l_v_sup = low_set(&p.v_sup, t);
    let l_v_oth = low_set(&p.v_oth, t);
    let h_s_v = high_set(&p.s_v, t);
    let l_s_vb = low_set(&p.s_vb, t);
    let h_o_v = high_set(&p.o_v, t);
    let h_o_vs = high_set(&p.o_vs, t);
    let l_o_vs = low_set(&p.o_vs, t);
    let h_o_vb = high_set(&p.o_vb, t);
    let l_o_vb = low_set(&p.o_vb, t);
    let (i_bin, i_oth) = match reading {
        SetReading::RateConsistent => (h_s_v.intersection(&l_s_vb)?, h_o_vs.intersection(&l_o_vb)?),
        SetReading::Literal => (h_s_v.intersection(&l_v_sup)?, h_o_v.intersection(&l_v_oth)?),
    };
    Ok(SetBundle {
        n,
        sup: p.sup,
        reading,
        i_sup: h_v.intersection(&l_v_sup)?,
        i_v_oth: h_v.intersection(&l_v_oth)?,
        i_bin,
        i_oth,
        f_oth: l_o_vs.intersection(&h_o_v)?.intersection(&h_o_vb)?,
        f_oth_eff: h_o_vs.complement().difference(&l_o_vb)?,
        free_v: h_v,
        free_sup: h_s_v,
        free_oth: h_o_vs,
        z_v_sup: p.v_sup.z.clone(),
        z_v_oth: p.v_oth.z.clone(),
        z_sup_dec: p.s_vb.z.clone(),
        z_oth_dec: p.o_vb.z.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

/// Block traversal order per layer, for the encoder and each receiver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Directions {
    pub encode_superposition: Direction,
    pub encode_sup: Direction,
    pub encode_oth: Direction,
    pub oth_decodes_superposition: Direction,
    pub oth_decodes_private: Direction,
    pub sup_decodes_superposition: Direction,
    pub sup_decodes_private: Direction,
}

impl Default for Directions {
    fn default() -> Self {
        Self {
            encode_superposition: Direction::Forward,
            encode_sup: Direction::Forward,
            encode_oth: Direction::Backward,
            oth_decodes_superposition: Direction::Forward,
            oth_decodes_private: Direction::Forward,
            sup_decodes_superposition: Direction::Backward,
            sup_decodes_private: Direction::Backward,
        }
    }
}

/// `carrier` in block `j` repeats the content of `source` in block `j + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pair {
    pub carrier: usize,
    pub source: usize,
}

impl Serialize for Pair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.carrier + 1, self.source + 1].serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainingSchedule {
    pub n: usize,
    pub k: usize,
    /// Superposition positions only `oth` decodes, carrying `p2` of the next block.
    pub a1: IndexSet,
    /// Superposition positions only `sup` decodes, paired with `a1`.
    pub p2: IndexSet,
    /// Superposition positions only `oth` decodes that found no partner (frozen).
    pub a1_unpaired: IndexSet,
    /// Superposition positions only `sup` decodes that found no partner.
    pub b2: IndexSet,
    /// `oth`-layer positions carrying `b2` of the next block.
    pub b1: IndexSet,
    /// `oth`-layer positions repeating `f1` of the next block.
    pub rbin: IndexSet,
    pub f1: IndexSet,
    pub superposition_pairs: Vec<Pair>,
    pub b_pairs: Vec<Pair>,
    pub r_pairs: Vec<Pair>,
    pub directions: Directions,
}

impl ChainingSchedule {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn has_chaining(&self) -> bool {
        !(self.p2.is_empty() && self.b2.is_empty() && self.f1.is_empty())
    }
}

fn pairs(carriers: &[usize], sources: &[usize]) -> Vec<Pair> {
    carriers
        .iter()
        .zip(sources)
        .map(|(&carrier, &source)| Pair { carrier, source })
        .collect()
}

/// Selects the alignment partners inside one block.
///
/// Superposition positions decodable by only one receiver are paired across
/// consecutive blocks (lowest Z first); the unpaired `sup`-only remainder is
/// `b2`. Inside `i_oth`, `b1` and then `rbin` take the most reliable positions.
pub fn build_schedule(bundle: &SetBundle, k: usize) -> Result<ChainingSchedule> {
    let n = bundle.n;
    let d_sup = bundle.i_sup.difference(&bundle.i_v_oth)?.ordered_by(&bundle.z_v_sup);
    let d_oth = bundle.i_v_oth.difference(&bundle.i_sup)?.ordered_by(&bundle.z_v_oth);
    let paired = d_sup.len().min(d_oth.len());
    let f1 = bundle.f_chain().clone();
    let b2_len = d_sup.len() - paired;
    let need = b2_len + f1.len();
    if bundle.i_oth.len() < need {
        return Err(Error::Infeasible {
            deficit: need - bundle.i_oth.len(),
            detail: format!(
                "|B2| + |F1| = {} + {} exceeds |I_oth| = {}",
                b2_len,
                f1.len(),
                bundle.i_oth.len()
            ),
        });
    }
    let chained = paired + b2_len + f1.len() > 0;
    if chained && k < 2 {
        return Err(Error::Config(format!("chaining needs at least 2 blocks, got k = {k}")));
    }
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let oth_order = bundle.i_oth.ordered_by(&bundle.z_oth_dec);
    let b1_pos = &oth_order[..b2_len];
    let r_pos = &oth_order[b2_len..need];
    let b2_pos = &d_sup[paired..];
    let set = |v: &[usize]| IndexSet::new(n, v.to_vec());
    Ok(ChainingSchedule {
        n,
        k,
        a1: set(&d_oth[..paired])?,
        p2: set(&d_sup[..paired])?,
        a1_unpaired: set(&d_oth[paired..])?,
        b2: set(b2_pos)?,
        b1: set(b1_pos)?,
        rbin: set(r_pos)?,
        superposition_pairs: pairs(&d_oth[..paired], &d_sup[..paired]),
        b_pairs: pairs(b1_pos, b2_pos),
        r_pairs: pairs(r_pos, f1.indices()),
        f1,
        directions: Directions::default(),
    })
}

/// Set-count rates, per block in steady state and over the `k`-block frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateAccount {
    pub n: usize,
    pub k: usize,
    pub r_sup: f64,
    pub r_oth: f64,
    /// Including the edge blocks: chained superposition content is lost once.
    pub r_sup_frame: f64,
    pub r_oth_frame: f64,
    /// `(k − 1) / k`, applied to chained content.
    pub edge_factor: f64,
    pub r1: f64,
    pub r2: f64,
    pub r1_frame: f64,
    pub r2_frame: f64,
}

pub fn rate_accounting(bundle: &SetBundle, schedule: &ChainingSchedule) -> RateAccount {
    let (n, k) = (bundle.n as f64, schedule.k as f64);
    let chained_sup = (schedule.p2.len() + schedule.b2.len()) as f64;
    let carriers = (schedule.b1.len() + schedule.rbin.len()) as f64;
    let sup_per_block = (bundle.i_sup.len() + bundle.i_bin.len()) as f64;
    let oth_per_block = bundle.i_oth.len() as f64 - carriers;
    let edge_factor = (k - 1.0) / k;
    let r_sup = sup_per_block / n;
    let r_oth = oth_per_block / n;
    let r_sup_frame = (sup_per_block - chained_sup / k) / n;
    let r_oth_frame = (oth_per_block + carriers / k) / n;
    let (r1, r2, r1_frame, r2_frame) = match bundle.sup {
        Receiver::Two => (r_oth, r_sup, r_oth_frame, r_sup_frame),
        Receiver::One => (r_sup, r_oth, r_sup_frame, r_oth_frame),
    };
    RateAccount {
        n: bundle.n,
        k: schedule.k,
        r_sup,
        r_oth,
        r_sup_frame,
        r_oth_frame,
        edge_factor,
        r1,
        r2,
        r1_frame,
        r2_frame,
    }
}

/// Incompatible-index counts under repeated pairwise alignment.
///
/// `a_only` positions are good only for the first channel, `b_only` only for
/// the second. Each round pairs an `a_only` with a `b_only` position of the
/// neighbouring block; a pair leaves one incompatible position behind, and the
/// residues are labelled so that the two kinds stay balanced. Returns the
/// count before the first round followed by the count after each round.
pub fn alignment_rounds(a_only: &IndexSet, b_only: &IndexSet, rounds: usize) -> Vec<usize> {
    let (mut a, mut b) = (a_only.len(), b_only.len());
    let mut out = vec![a + b];
    for _ in 0..rounds {
        let p = a.min(b);
        let (la, lb) = (a - p, b - p);
        let total = p + la + lb;
        // residues go to whichever kind is short
        let target_a = total.div_ceil(2).max(la).min(la + p);
        let ra = target_a - la;
        a = la + ra;
        b = lb + (p - ra);
        out.push(a + b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::Conditioning;

    fn set(n: usize, v: &[usize]) -> IndexSet {
        IndexSet::from_one_based(n, v).unwrap()
    }

    pub(crate) fn bundle_from_sets(n: usize, i_sup: &[usize], i_v_oth: &[usize], i_oth: &[usize], f: &[usize]) -> SetBundle {
        let z: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        SetBundle {
            n,
            sup: Receiver::Two,
            reading: SetReading::RateConsistent,
            i_sup: set(n, i_sup),
            i_v_oth: set(n, i_v_oth),
            i_bin: IndexSet::empty(n),
            i_oth: set(n, i_oth),
            f_oth: set(n, f),
            f_oth_eff: set(n, f),
            free_v: IndexSet::full(n),
            free_sup: IndexSet::empty(n),
            free_oth: set(n, i_oth),
            z_v_sup: z.clone(),
            z_v_oth: z.clone(),
            z_sup_dec: z.clone(),
            z_oth_dec: z.iter().map(|v| 1.0 - v).collect(),
        }
    }

    fn profile(z: Vec<f64>) -> PolarizationProfile {
        PolarizationProfile::exact(z, Conditioning::None, "t").unwrap()
    }

    #[test]
    fn intersections() {
        let n = 8;
        let one = vec![1.0; n];
        let half: Vec<f64> = (0..n).map(|i| if i < n / 2 { 0.0 } else { 1.0 }).collect();
        let p = ProfileSet {
            sup: Receiver::Two,
            v: profile(one.clone()),
            v_sup: profile(half.clone()),
            v_oth: profile(one.clone()),
            s_v: profile(one.clone()),
            s_vb: profile(one.clone()),
            o_v: profile(one.clone()),
            o_vs: profile(one.clone()),
            o_vb: profile(one.clone()),
        };
        let b = derive_set_bundle(&p, &Threshold::default(), SetReading::RateConsistent).unwrap();
        assert_eq!(b.i_sup.one_based(), vec![1, 2, 3, 4]);
        assert!(b.i_v_oth.is_empty());
        // disjoint H_V and L_{V|B}
        let mut q = p.clone();
        q.v = profile(vec![0.0; n]);
        let b = derive_set_bundle(&q, &Threshold::default(), SetReading::RateConsistent).unwrap();
        assert!(b.i_sup.is_empty());
        q.v = profile(vec![0.0; 4]);
        assert!(derive_set_bundle(&q, &Threshold::default(), SetReading::RateConsistent).is_err());
    }

    #[test]
    fn empty_chaining() {
        let b = bundle_from_sets(16, &[1, 2], &[1, 2], &[5, 6, 7], &[]);
        let s = build_schedule(&b, 1).unwrap();
        assert!(!s.has_chaining());
        let r = rate_accounting(&b, &s);
        assert_eq!(r.r_oth, 3.0 / 16.0);
        assert_eq!(r.r_sup, 2.0 / 16.0);
        assert_eq!(r.r_oth_frame, r.r_oth);
    }

    #[test]
    fn counting_example() {
        // |B2| = 3, |F1| = 2, |I_oth| = 10
        let b = bundle_from_sets(16, &[1, 2, 3], &[], &(5..15).collect::<Vec<_>>(), &[15, 16]);
        let s = build_schedule(&b, 4).unwrap();
        assert_eq!(s.b2.len(), 3);
        assert_eq!(s.b1.len(), 3);
        assert_eq!(s.rbin.len(), 2);
        assert!(s.b1.is_disjoint(&s.rbin));
        // lowest z_oth_dec first: z_oth_dec decreases with the index
        assert_eq!(s.b1.one_based(), vec![12, 13, 14]);
        assert_eq!(s.rbin.one_based(), vec![10, 11]);
        let r = rate_accounting(&b, &s);
        assert_eq!(r.r_oth, 5.0 / 16.0);
    }

    #[test]
    fn infeasible_reports_deficit() {
        let b = bundle_from_sets(16, &[1, 2, 3], &[], &[5, 6], &[15, 16]);
        match build_schedule(&b, 4) {
            Err(Error::Infeasible { deficit, .. }) => assert_eq!(deficit, 3),
            other => panic!("expected infeasible, got {other:?}"),
        }
    }

    #[test]
    fn superposition_pairing() {
        let b = bundle_from_sets(16, &[1, 2, 3, 4], &[3, 4, 5], &(8..16).collect::<Vec<_>>(), &[]);
        let s = build_schedule(&b, 3).unwrap();
        assert_eq!(s.p2.one_based(), vec![1]);
        assert_eq!(s.a1.one_based(), vec![5]);
        assert_eq!(s.b2.one_based(), vec![2]);
        assert_eq!(s.b1.len(), 1);
        let json = s.to_json().unwrap();
        assert!(json.contains("\"encode_oth\": \"backward\""));
        assert!(json.contains("[\n      5,\n      1\n    ]"));
    }

    #[test]
    fn halving() {
        let n = 64;
        for (a, b) in [(10, 10), (11, 10), (7, 8), (1, 0), (32, 32)] {
            let sa = IndexSet::new(n, (0..a).collect()).unwrap();
            let sb = IndexSet::new(n, (32..32 + b).collect()).unwrap();
            let counts = alignment_rounds(&sa, &sb, 6);
            let initial = counts[0];
            for (j, &c) in counts.iter().enumerate() {
                assert!(c <= initial.div_ceil(1 << j), "round {j}: {c} > ceil({initial}/2^{j})");
            }
        }
    }
}
