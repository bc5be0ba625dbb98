//! The Marton-Gelfand-Pinsker region for a broadcast channel and a binary
//! auxiliary structure, its corner points, and a grid search over auxiliaries.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::model::{AuxiliaryStructure, BroadcastChannelSpec, Receiver};
use crate::quantum::{shannon_entropy, Operator};

const V: u8 = 0b100;
const V1: u8 = 0b010;
const V2: u8 = 0b001;

/// Joint entropy of the classical registers in `mask` and, optionally, a receiver's output.
///
/// Registers are block-diagonal, so `H(S B) = Σ_s H(Σ_{rest} p ρ_x)`.
pub fn joint_entropy(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure, mask: u8, output: Option<Receiver>) -> f64 {
    let key = |v: usize, v1: usize, v2: usize| {
        let mut k = 0;
        if mask & V != 0 {
            k |= v << 2;
        }
        if mask & V1 != 0 {
            k |= v1 << 1;
        }
        if mask & V2 != 0 {
            k |= v2;
        }
        k
    };
    match output {
        None => {
            let mut p = [0.0; 8];
            for (v, v1, v2, q) in aux.outcomes() {
                p[key(v, v1, v2)] += q;
            }
            shannon_entropy(&p)
        }
        Some(r) => {
            // group by (key, x): the output only depends on x
            let mut w = [[0.0; 2]; 8];
            for (v, v1, v2, q) in aux.outcomes() {
                w[key(v, v1, v2)][aux.phi(v, v1, v2) as usize] += q;
            }
            let ops = [spec.marginal_operator(r, 0), spec.marginal_operator(r, 1)];
            w.iter()
                .filter(|g| g[0] + g[1] > 0.0)
                .map(|g| {
                    let op: Operator = ops[0].scaled(g[0]).add_scaled(&ops[1], g[1]);
                    op.spectral_entropy()
                })
                .sum()
        }
    }
}

/// The mutual informations the region is built from, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoQuantities {
    /// `I(V; B_l)`
    pub i_v_b: [f64; 2],
    /// `I(V_l; B_l | V)`
    pub i_vl_b_given_v: [f64; 2],
    /// `I(V, V_l; B_l)`
    pub i_v_vl_b: [f64; 2],
    /// `I(V1; V2 | V)`
    pub i_v1_v2_given_v: f64,
}

impl InfoQuantities {
    /// The receiver with the larger `I(V;B)`; ties go to receiver 2.
    pub fn stronger(&self) -> Receiver {
        if self.i_v_b[0] > self.i_v_b[1] {
            Receiver::One
        } else {
            Receiver::Two
        }
    }
}

pub fn information_quantities(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure) -> InfoQuantities {
    let h = |mask, out| joint_entropy(spec, aux, mask, out);
    let hv = h(V, None);
    let mut i_v_b = [0.0; 2];
    let mut i_vl_b_given_v = [0.0; 2];
    for r in [Receiver::One, Receiver::Two] {
        let l = if r == Receiver::One { V1 } else { V2 };
        let hb = h(0, Some(r));
        let hvb = h(V, Some(r));
        i_v_b[r.index()] = (hv + hb - hvb).max(0.0);
        i_vl_b_given_v[r.index()] = (h(V | l, None) + hvb - hv - h(V | l, Some(r))).max(0.0);
    }
    let i12 = (h(V | V1, None) + h(V | V2, None) - hv - h(V | V1 | V2, None)).max(0.0);
    InfoQuantities {
        i_v_b,
        i_vl_b_given_v,
        i_v_vl_b: [i_v_b[0] + i_vl_b_given_v[0], i_v_b[1] + i_vl_b_given_v[1]],
        i_v1_v2_given_v: i12,
    }
}

/// Bounds of the private-message region, clamped at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrivateRegion {
    pub r1: f64,
    pub r2: f64,
    /// `I(V,V1;B1) + I(V2;B2|V) − I(V1;V2|V)`
    pub sum_a: f64,
    /// `I(V,V2;B2) + I(V1;B1|V) − I(V1;V2|V)`
    pub sum_b: f64,
}

/// Bounds of the region with a common message, clamped at 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommonRegion {
    pub r0: f64,
    pub r0_r1: f64,
    pub r0_r2: f64,
    pub sum_a: f64,
    pub sum_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RatePoint {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
}

impl PrivateRegion {
    pub fn contains(&self, p: &RatePoint, tol: f64) -> bool {
        p.r1 <= self.r1 + tol && p.r2 <= self.r2 + tol && p.r1 + p.r2 <= self.sum_a + tol && p.r1 + p.r2 <= self.sum_b + tol
    }
}

impl CommonRegion {
    pub fn contains(&self, p: &RatePoint, tol: f64) -> bool {
        let s = p.r0 + p.r1 + p.r2;
        p.r0 <= self.r0 + tol
            && p.r0 + p.r1 <= self.r0_r1 + tol
            && p.r0 + p.r2 <= self.r0_r2 + tol
            && s <= self.sum_a + tol
            && s <= self.sum_b + tol
    }
}

pub fn private_region_from(q: &InfoQuantities) -> PrivateRegion {
    let i12 = q.i_v1_v2_given_v;
    PrivateRegion {
        r1: q.i_v_vl_b[0],
        r2: q.i_v_vl_b[1],
        sum_a: (q.i_v_vl_b[0] + q.i_vl_b_given_v[1] - i12).max(0.0),
        sum_b: (q.i_v_vl_b[1] + q.i_vl_b_given_v[0] - i12).max(0.0),
    }
}

pub fn evaluate_private_region(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure) -> PrivateRegion {
    private_region_from(&information_quantities(spec, aux))
}

pub fn evaluate_common_region(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure) -> CommonRegion {
    let q = information_quantities(spec, aux);
    let p = private_region_from(&q);
    CommonRegion {
        r0: q.i_v_b[0].min(q.i_v_b[1]),
        r0_r1: p.r1,
        r0_r2: p.r2,
        sum_a: p.sum_a,
        sum_b: p.sum_b,
    }
}

/// How the penalty of the binned receiver is written in corner A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CornerFormula {
    /// `R_oth = I(V,V_oth;B_oth) − I(V1;V2|V) − I(V;B_sup)`
    #[default]
    Printed,
    /// `R_oth = I(V,V_oth;B_oth) − I(V1;V2|V) − (I(V;B_sup) − I(V;B_oth))`
    Variant,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Corners {
    /// `sup` is the stronger receiver for `V`; it gets `I(V,V_sup;B_sup)`.
    pub a: RatePoint,
    /// Roles swapped: the weaker receiver gets `I(V,V_l;B_l)`.
    pub b: RatePoint,
    /// The stronger receiver (the superposition owner in corner A).
    pub sup: Receiver,
    /// Some coordinate was negative and the point was pulled back into the region.
    pub clamped: bool,
}

fn point(r_sup: f64, r_oth: f64, sup: Receiver) -> RatePoint {
    match sup {
        Receiver::Two => RatePoint { r0: 0.0, r1: r_oth, r2: r_sup },
        Receiver::One => RatePoint { r0: 0.0, r1: r_sup, r2: r_oth },
    }
}

/// Clamps a negative coordinate to 0 and caps the other by the sum bounds.
fn clamp_into(p: RatePoint, region: &PrivateRegion) -> (RatePoint, bool) {
    let mut q = p;
    let mut clamped = false;
    if q.r1 < 0.0 {
        q.r1 = 0.0;
        clamped = true;
    }
    if q.r2 < 0.0 {
        q.r2 = 0.0;
        clamped = true;
    }
    if clamped {
        let cap = region.sum_a.min(region.sum_b);
        q.r1 = q.r1.min(cap).min(region.r1);
        q.r2 = q.r2.min(cap - q.r1).min(region.r2).max(0.0);
    }
    (q, clamped)
}

pub fn corners_from(q: &InfoQuantities, formula: CornerFormula) -> Corners {
    let sup = q.stronger();
    let (s, o) = (sup.index(), sup.other().index());
    let i12 = q.i_v1_v2_given_v;
    let penalty = match formula {
        CornerFormula::Printed => q.i_v_b[s],
        CornerFormula::Variant => q.i_v_b[s] - q.i_v_b[o],
    };
    let a = point(q.i_v_vl_b[s], q.i_v_vl_b[o] - i12 - penalty, sup);
    let b = point(q.i_vl_b_given_v[s] - i12, q.i_v_vl_b[o], sup);
    let region = private_region_from(q);
    let (a, ca) = clamp_into(a, &region);
    let (b, cb) = clamp_into(b, &region);
    Corners {
        a,
        b,
        sup,
        clamped: ca || cb,
    }
}

pub fn corner_points(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure, formula: CornerFormula) -> Corners {
    corners_from(&information_quantities(spec, aux), formula)
}

/// Largest per-parameter resolution keeping the grid within this many cells.
pub const MAX_GRID_CELLS: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub aux: AuxiliaryStructure,
    pub point: RatePoint,
    pub objective: f64,
    pub requested_resolution: usize,
    pub resolution: usize,
    pub cells: usize,
}

/// Grid search over binary auxiliaries and all 256 input maps.
///
/// Each of `p_V`, `p_{V2|V}` (two values) and `p_{V1|V,V2}` (four values) runs
/// over `{0, 1/(r−1), …, 1}`. The objective `w1 R1 + w2 R2` is maximized over
/// both corner points; the first maximizer in grid order wins ties.
pub fn search_auxiliaries(
    spec: &BroadcastChannelSpec,
    weights: (f64, f64),
    resolution: usize,
    mode: ExecMode,
) -> Result<SearchResult> {
    if resolution < 2 {
        return Err(Error::Config(format!("grid resolution must be at least 2, got {resolution}")));
    }
    let mut res = resolution;
    while res > 2 && res.pow(7) * 256 > MAX_GRID_CELLS {
        res -= 1;
    }
    let grid: Vec<f64> = (0..res).map(|i| i as f64 / (res - 1) as f64).collect();
    let tuples = res.pow(7);
    let best_per_tuple = exec::map_range(tuples, mode, |t| {
        let mut d = [0usize; 7];
        let mut rest = t;
        for slot in d.iter_mut() {
            *slot = rest % res;
            rest /= res;
        }
        let g = |i: usize| grid[d[i]];
        let mut best: Option<(f64, usize, RatePoint)> = None;
        for m in 0..256usize {
            let phi: [u8; 8] = std::array::from_fn(|b| ((m >> b) & 1) as u8);
            let aux = AuxiliaryStructure::from_conditionals(g(0), [g(1), g(2)], [[g(3), g(4)], [g(5), g(6)]], phi)
                .expect("grid values are probabilities");
            let c = corner_points(spec, &aux, CornerFormula::Printed);
            for p in [c.a, c.b] {
                let obj = weights.0 * p.r1 + weights.1 * p.r2;
                if best.is_none_or(|b| obj > b.0 + 1e-12) {
                    best = Some((obj, m, p));
                }
            }
        }
        best.expect("256 maps evaluated")
    });
    let mut winner: Option<(usize, f64, usize, RatePoint)> = None;
    for (t, &(obj, m, p)) in best_per_tuple.iter().enumerate() {
        if winner.is_none_or(|w| obj > w.1 + 1e-12) {
            winner = Some((t, obj, m, p));
        }
    }
    let (t, objective, m, point) = winner.expect("non-empty grid");
    let mut d = [0usize; 7];
    let mut rest = t;
    for slot in d.iter_mut() {
        *slot = rest % res;
        rest /= res;
    }
    let g = |i: usize| grid[d[i]];
    let phi: [u8; 8] = std::array::from_fn(|b| ((m >> b) & 1) as u8);
    let aux = AuxiliaryStructure::from_conditionals(g(0), [g(1), g(2)], [[g(3), g(4)], [g(5), g(6)]], phi)?;
    Ok(SearchResult {
        aux,
        point,
        objective,
        requested_resolution: resolution,
        resolution: res,
        cells: tuples * 256,
    })
}

/// Writes one row of aux parameters, bounds and corner points.
pub fn write_region_csv<W: Write>(out: W, aux: &AuxiliaryStructure, spec: &BroadcastChannelSpec, formula: CornerFormula) -> Result<()> {
    let p = evaluate_private_region(spec, aux);
    let c = evaluate_common_region(spec, aux);
    let k = corner_points(spec, aux, formula);
    let (pv, pv2, pv1) = aux.conditionals();
    let phi: String = aux.phi_table().iter().map(|b| b.to_string()).collect();
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p_v", "p_v2_given_v0", "p_v2_given_v1", "p_v1_given_00", "p_v1_given_01", "p_v1_given_10", "p_v1_given_11", "phi",
        "r1", "r2", "sum_a", "sum_b", "c_r0", "c_r0_r1", "c_r0_r2", "c_sum_a", "c_sum_b",
        "corner_a_r1", "corner_a_r2", "corner_b_r1", "corner_b_r2", "clamped",
    ])?;
    let nums = [
        pv, pv2[0], pv2[1], pv1[0][0], pv1[0][1], pv1[1][0], pv1[1][1],
    ];
    let mut row: Vec<String> = nums.iter().map(ToString::to_string).collect();
    row.push(phi);
    row.extend(
        [p.r1, p.r2, p.sum_a, p.sum_b, c.r0, c.r0_r1, c.r0_r2, c.sum_a, c.sum_b, k.a.r1, k.a.r2, k.b.r1, k.b.r2]
            .iter()
            .map(ToString::to_string),
    );
    row.push(k.clamped.to_string());
    w.write_record(&row)?;
    w.flush()?;
    Ok(())
}
