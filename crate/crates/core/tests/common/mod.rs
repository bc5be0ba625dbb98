#![allow(dead_code)]

use nalgebra::DMatrix;
use polar_broadcast::catalog::builtin_channel;
use polar_broadcast::chaining::{build_schedule, SetBundle, SetReading};
use polar_broadcast::model::{AuxiliaryStructure, BroadcastChannelSpec, Receiver};
use polar_broadcast::profile::{IndexSet, ProfileMode, ProfileOptions, Threshold};
use polar_broadcast::quantum::{ClassicalChannelTable, DensityMatrix, C64};
use polar_broadcast::region::{evaluate_common_region, evaluate_private_region, information_quantities};
use polar_broadcast::scheme::{build_code, BroadcastPolarCode, CodeConfig, Corner};
use polar_broadcast::transform::polar_encode;
use polar_broadcast::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `V ~ Bern(1/2)`, `V1 ~ Bern(1/2)`, `V2 = 0`, `x = v AND v1`.
pub fn and_aux() -> AuxiliaryStructure {
    AuxiliaryStructure::from_conditionals(0.5, [0.0, 0.0], [[0.5, 0.5], [0.5, 0.5]], [0, 0, 0, 0, 0, 0, 1, 1]).unwrap()
}

/// `V ~ Bern(1/2)`, `V2 = 0`, `x = v1` with `V1` uniform: X carries only receiver 1's layer.
pub fn private_only_aux() -> AuxiliaryStructure {
    AuxiliaryStructure::from_conditionals(0.5, [0.0, 0.0], [[0.5, 0.5], [0.5, 0.5]], [0, 0, 1, 1, 0, 0, 1, 1]).unwrap()
}

pub fn bec(e1: f64, e2: f64) -> BroadcastChannelSpec {
    builtin_channel("erasure-broadcast", &[e1, e2]).unwrap()
}

pub fn random_distribution<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

pub fn random_table<R: Rng>(rng: &mut R, outputs: usize) -> ClassicalChannelTable {
    ClassicalChannelTable::new(random_distribution(rng, outputs), random_distribution(rng, outputs)).unwrap()
}

/// `G G† / tr` with entries uniform in the unit square.
pub fn random_state_matrix<R: Rng>(rng: &mut R, dim: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    m.map(|c| c / tr)
}

pub fn random_state<R: Rng>(rng: &mut R, dim: usize) -> DensityMatrix {
    let m = random_state_matrix(rng, dim);
    DensityMatrix::new((&m + m.adjoint()).map(|c| c * 0.5)).unwrap()
}

pub fn random_aux<R: Rng>(rng: &mut R) -> AuxiliaryStructure {
    let p = random_distribution(rng, 8);
    let mut joint = [0.0; 8];
    joint.copy_from_slice(&p);
    let phi = std::array::from_fn(|_| rng.random_range(0..2u8));
    AuxiliaryStructure::from_joint(joint, phi).unwrap()
}

pub fn random_classical_spec<R: Rng>(rng: &mut R, outputs: (usize, usize)) -> BroadcastChannelSpec {
    let m = outputs.0 * outputs.1;
    BroadcastChannelSpec::classical(outputs, [random_distribution(rng, m), random_distribution(rng, m)]).unwrap()
}

pub fn random_quantum_spec<R: Rng>(rng: &mut R, dims: (usize, usize)) -> BroadcastChannelSpec {
    let d = dims.0 * dims.1;
    BroadcastChannelSpec::quantum(dims, [random_state(rng, d), random_state(rng, d)]).unwrap()
}

/// Von Neumann entropy in bits from a full Hermitian eigendecomposition.
pub fn entropy_bits(m: &DMatrix<C64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .filter(|&&l| l > 1e-15)
        .map(|&l| -l * l.log2())
        .sum()
}

/// Total variation distance between two distributions.
pub fn tv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

/// Erasure probability of `W_n^{(i)}`, walking the index bits from the most significant.
pub fn erasure_oracle(eps: f64, bits: u32, i: usize) -> f64 {
    (0..bits).rev().fold(eps, |z, b| if (i >> b) & 1 == 0 { 2.0 * z - z * z } else { z * z })
}

pub fn spread(z: &[f64]) -> f64 {
    z.iter().map(|z| z * (1.0 - z)).sum::<f64>() / z.len() as f64
}

pub fn fwht(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for i in (0..v.len()).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (v[j], v[j + h]);
                v[j] = a + b;
                v[j + h] = a - b;
            }
        }
        h *= 2;
    }
}

/// `Z(U_i | U^{i-1}, B^n)` for a uniform-prior pure-state pair of overlap `s`.
///
/// With the prefix fixed to zero, the outputs for `u_i = 0, 1` are uniform
/// mixtures of product states over `m = 2^{n-i-1}` suffixes, so the root
/// fidelity is `‖A0† A1‖₁ / m`. The cross Gram matrix has entries
/// `s^{wt(x(0, 1, w ⊕ w'))}`; it is dense-diagonalized when small and
/// otherwise reduced through its group-convolution structure.
pub fn pure_state_oracle(s: f64, n: usize, i: usize) -> f64 {
    let m = 1usize << (n - i - 1);
    let g: Vec<f64> = (0..m)
        .map(|w| {
            let mut u = vec![0u8; n];
            u[i] = 1;
            for b in 0..n - i - 1 {
                u[i + 1 + b] = ((w >> b) & 1) as u8;
            }
            let wt = polar_encode(&u).unwrap().iter().filter(|&&x| x == 1).count();
            s.powi(wt as i32)
        })
        .collect();
    if m <= 256 {
        let cross = DMatrix::from_fn(m, m, |a, b| g[a ^ b]);
        cross.singular_values().sum() / m as f64
    } else {
        let mut spec = g;
        fwht(&mut spec);
        spec.iter().map(|x| x.abs()).sum::<f64>() / m as f64
    }
}

/// Full state on `V ⊗ V1 ⊗ V2 ⊗ B1 ⊗ B2`, registers as diagonal blocks of dimension `d1 d2`.
pub struct JointState {
    m: DMatrix<C64>,
    d1: usize,
    d2: usize,
}

impl JointState {
    pub fn new(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure) -> Self {
        let (d1, d2, out): (usize, usize, [DMatrix<C64>; 2]) = match spec {
            BroadcastChannelSpec::Classical { outputs, rows } => {
                let d = outputs.0 * outputs.1;
                let diag = |x: usize| DMatrix::from_fn(d, d, |i, j| if i == j { C64::new(rows[x][i], 0.0) } else { C64::new(0.0, 0.0) });
                (outputs.0, outputs.1, [diag(0), diag(1)])
            }
            BroadcastChannelSpec::Quantum { dims, states, .. } => (dims.0, dims.1, [states[0].matrix(), states[1].matrix()]),
        };
        let d = d1 * d2;
        let mut m = DMatrix::zeros(8 * d, 8 * d);
        for (v, v1, v2, p) in aux.outcomes() {
            let k = 4 * v + 2 * v1 + v2;
            let x = aux.phi(v, v1, v2) as usize;
            for i in 0..d {
                for j in 0..d {
                    m[(k * d + i, k * d + j)] = out[x][(i, j)] * p;
                }
            }
        }
        Self { m, d1, d2 }
    }

    /// Entropy of the marginal on the kept registers: `regs` over (V, V1, V2), `outs` over (B1, B2).
    pub fn entropy(&self, regs: [bool; 3], outs: [bool; 2]) -> f64 {
        let dims = [2, 2, 2, self.d1, self.d2];
        let keep = [regs[0], regs[1], regs[2], outs[0], outs[1]];
        let total: usize = dims.iter().product();
        let kept: usize = dims.iter().zip(keep).filter(|(_, k)| *k).map(|(d, _)| d).product();
        let split = |mut idx: usize| -> [usize; 5] {
            let mut c = [0; 5];
            for t in (0..5).rev() {
                c[t] = idx % dims[t];
                idx /= dims[t];
            }
            c
        };
        let kept_index = |c: &[usize; 5]| {
            (0..5).filter(|&t| keep[t]).fold(0, |acc, t| acc * dims[t] + c[t])
        };
        let mut r = DMatrix::<C64>::zeros(kept, kept);
        for a in 0..total {
            let ca = split(a);
            for b in 0..total {
                let cb = split(b);
                if (0..5).any(|t| !keep[t] && ca[t] != cb[t]) {
                    continue;
                }
                r[(kept_index(&ca), kept_index(&cb))] += self.m[(a, b)];
            }
        }
        entropy_bits(&r)
    }
}

pub struct Oracle {
    pub i_v_b: [f64; 2],
    pub i_vl_b_given_v: [f64; 2],
    pub i_v_vl_b: [f64; 2],
    pub i12: f64,
}

pub fn oracle(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure) -> Oracle {
    let s = JointState::new(spec, aux);
    let h = |regs, outs| s.entropy(regs, outs);
    let none = [false, false];
    let hv = h([true, false, false], none);
    let mut i_v_b = [0.0; 2];
    let mut i_vl_b_given_v = [0.0; 2];
    let mut i_v_vl_b = [0.0; 2];
    for r in 0..2 {
        let mut o = [false; 2];
        o[r] = true;
        let l = if r == 0 { [true, true, false] } else { [true, false, true] };
        let hb = h([false; 3], o);
        let hvb = h([true, false, false], o);
        let hl = h(l, none);
        let hlb = h(l, o);
        i_v_b[r] = hv + hb - hvb;
        i_vl_b_given_v[r] = hl + hvb - hv - hlb;
        i_v_vl_b[r] = hl + hb - hlb;
    }
    let i12 = h([true, true, false], none) + h([true, false, true], none) - hv - h([true, true, true], none);
    Oracle {
        i_v_b,
        i_vl_b_given_v,
        i_v_vl_b,
        i12,
    }
}

pub fn instance(seed: u64) -> (BroadcastChannelSpec, AuxiliaryStructure) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = if rng.random::<bool>() {
        random_quantum_spec(&mut rng, (2, 2))
    } else {
        random_classical_spec(&mut rng, (2, 3))
    };
    (spec, random_aux(&mut rng))
}

pub fn check_against_oracle(spec: &BroadcastChannelSpec, aux: &AuxiliaryStructure) {
    let o = oracle(spec, aux);
    let q = information_quantities(spec, aux);
    for r in 0..2 {
        assert!((q.i_v_b[r] - o.i_v_b[r].max(0.0)).abs() < 1e-9);
        assert!((q.i_vl_b_given_v[r] - o.i_vl_b_given_v[r].max(0.0)).abs() < 1e-9);
        assert!((q.i_v_vl_b[r] - o.i_v_vl_b[r]).abs() < 1e-9);
    }
    assert!((q.i_v1_v2_given_v - o.i12.max(0.0)).abs() < 1e-9);
    let p = evaluate_private_region(spec, aux);
    let sum_a = (o.i_v_vl_b[0] + o.i_vl_b_given_v[1] - o.i12).max(0.0);
    let sum_b = (o.i_v_vl_b[1] + o.i_vl_b_given_v[0] - o.i12).max(0.0);
    assert!((p.r1 - o.i_v_vl_b[0]).abs() < 1e-9);
    assert!((p.r2 - o.i_v_vl_b[1]).abs() < 1e-9);
    assert!((p.sum_a - sum_a).abs() < 1e-9);
    assert!((p.sum_b - sum_b).abs() < 1e-9);
    let c = evaluate_common_region(spec, aux);
    assert!((c.r0 - o.i_v_b[0].min(o.i_v_b[1])).abs() < 1e-9);
    assert!((c.r0_r1 - o.i_v_vl_b[0]).abs() < 1e-9);
    assert!((c.r0_r2 - o.i_v_vl_b[1]).abs() < 1e-9);
    assert!((c.sum_a - sum_a).abs() < 1e-9 && (c.sum_b - sum_b).abs() < 1e-9);
}

pub fn config(n: usize, k: usize, corner: Corner) -> CodeConfig {
    CodeConfig {
        n,
        k,
        threshold: Threshold::new(0.05, 0.95).unwrap(),
        corner,
        profile: ProfileOptions {
            mode: ProfileMode::Auto,
            samples: 300,
            ..ProfileOptions::default()
        },
        ..CodeConfig::default()
    }
}

pub fn subset<R: Rng>(rng: &mut R, pool: &[usize], p: f64) -> Vec<usize> {
    pool.iter().copied().filter(|_| rng.random_bool(p)).collect()
}

/// A bundle with random sets obeying only the structural relations the schedule relies on.
pub fn random_bundle(seed: u64) -> SetBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize << rng.random_range(3..8);
    let all: Vec<usize> = (0..n).collect();
    let set = |v: Vec<usize>| IndexSet::new(n, v).unwrap();
    let free_v = subset(&mut rng, &all, 0.6);
    let (ps, po, pi, pf): (f64, f64, f64, f64) = (rng.random(), rng.random(), rng.random(), rng.random());
    let i_sup = subset(&mut rng, &free_v, ps);
    let i_v_oth = subset(&mut rng, &free_v, po);
    let free_oth = subset(&mut rng, &all, 0.7);
    let i_oth = subset(&mut rng, &free_oth, pi);
    let not_free: Vec<usize> = all.iter().copied().filter(|i| !free_oth.contains(i)).collect();
    let f_eff = subset(&mut rng, &not_free, pf * 0.5);
    let free_sup = subset(&mut rng, &all, 0.5);
    let i_bin = subset(&mut rng, &free_sup, 0.5);
    let z = |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.random::<f64>()).collect::<Vec<_>>();
    SetBundle {
        n,
        sup: if rng.random() { Receiver::One } else { Receiver::Two },
        reading: SetReading::RateConsistent,
        i_sup: set(i_sup),
        i_v_oth: set(i_v_oth),
        i_bin: set(i_bin),
        i_oth: set(i_oth),
        f_oth: set(f_eff.clone()),
        f_oth_eff: set(f_eff),
        free_v: set(free_v),
        free_sup: set(free_sup),
        free_oth: set(free_oth),
        z_v_sup: z(&mut rng),
        z_v_oth: z(&mut rng),
        z_sup_dec: z(&mut rng),
        z_oth_dec: z(&mut rng),
    }
}

/// Checks every schedule invariant; returns whether the bundle was feasible.
pub fn check_schedule(b: &SetBundle, k: usize) -> bool {
    let d_sup = b.i_sup.difference(&b.i_v_oth).unwrap();
    let d_oth = b.i_v_oth.difference(&b.i_sup).unwrap();
    let paired = d_sup.len().min(d_oth.len());
    let need = d_sup.len() - paired + b.f_oth_eff.len();
    match build_schedule(b, k) {
        Ok(s) => {
            assert!(need <= b.i_oth.len());
            assert_eq!(s.b1.len(), s.b2.len());
            assert_eq!(s.rbin.len(), s.f1.len());
            assert_eq!(s.p2.len(), s.a1.len());
            assert!(s.b1.is_disjoint(&s.rbin));
            assert!(s.b1.is_subset(&b.i_oth) && s.rbin.is_subset(&b.i_oth));
            assert!(s.p2.is_disjoint(&s.b2) && s.a1.is_disjoint(&s.a1_unpaired));
            assert_eq!(s.p2.union(&s.b2).unwrap(), d_sup);
            assert_eq!(s.a1.union(&s.a1_unpaired).unwrap(), d_oth);
            assert!(s.f1.is_disjoint(&b.i_oth));
            assert_eq!(s.b_pairs.len(), s.b1.len());
            assert_eq!(s.r_pairs.len(), s.rbin.len());
            assert_eq!(s.superposition_pairs.len(), s.p2.len());
            true
        }
        Err(Error::Infeasible { deficit, .. }) => {
            assert_eq!(deficit, need - b.i_oth.len());
            false
        }
        Err(e) => panic!("unexpected error {e}"),
    }
}

pub fn random_code(seed: u64, n: usize) -> Option<BroadcastPolarCode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = bec(rng.random_range(0.0..0.6), rng.random_range(0.0..0.6));
    // superposition-only, AND-map and unrestricted auxiliaries in turn
    let family = seed % 3;
    let aux = match family {
        0 => AuxiliaryStructure::superposition_only(rng.random_range(0.2..0.8)).unwrap(),
        1 => {
            let (p_v, a, b) = (rng.random_range(0.2..0.8), rng.random_range(0.2..0.8), rng.random_range(0.2..0.8));
            AuxiliaryStructure::from_conditionals(p_v, [0.0, 0.0], [[a, a], [b, b]], [0, 0, 0, 0, 0, 0, 1, 1]).unwrap()
        }
        _ => random_aux(&mut rng),
    };
    let corner = if family < 2 || rng.random() { Corner::B } else { Corner::A };
    match build_code(&spec, &aux, &config(n, 3, corner)) {
        Ok(c) => Some(c),
        Err(Error::Infeasible { .. }) => None,
        Err(e) => panic!("{e}"),
    }
}

