//! Finite-dimensional quantum and classical information quantities.
//!
//! All logarithms are base 2. Operators are stored either as a diagonal
//! (commuting / classical case) or as a dense Hermitian matrix; the diagonal
//! form lets classical channels flow through the same code paths as quantum
//! ones without paying for eigendecompositions.

use nalgebra::DMatrix;
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Tolerance on Hermiticity, trace and negative eigenvalues of a state.
pub const STATE_TOL: f64 = 1e-10;
/// Eigenvalues at or below this contribute nothing to entropies.
pub const ENTROPY_FLOOR: f64 = 1e-14;

/// Shannon entropy of a (possibly sub-normalized) weight vector, in bits.
///
/// Weights are used as given; callers normalize when they need to.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > ENTROPY_FLOOR)
        .map(|&x| -x * x.log2())
        .sum()
}

/// Binary entropy h(p).
pub fn binary_entropy(p: f64) -> f64 {
    shannon_entropy(&[p, 1.0 - p])
}

/// Positive semi-definite operator, not necessarily normalized.
#[derive(Debug, Clone, PartialEq)]
pub enum Operator {
    Diagonal(Vec<f64>),
    Dense(DMatrix<C64>),
}

impl Operator {
    pub fn dim(&self) -> usize {
        match self {
            Operator::Diagonal(d) => d.len(),
            Operator::Dense(m) => m.nrows(),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Operator::Diagonal(vec![0.0; dim])
    }

    pub fn is_diagonal(&self) -> bool {
        matches!(self, Operator::Diagonal(_))
    }

    pub fn trace(&self) -> f64 {
        match self {
            Operator::Diagonal(d) => d.iter().sum(),
            Operator::Dense(m) => m.diagonal().iter().map(|c| c.re).sum(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        match self {
            Operator::Diagonal(d) => {
                DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
                    d.len(),
                    d.iter().map(|&x| C64::new(x, 0.0)),
                ))
            }
            Operator::Dense(m) => m.clone(),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Operator::Diagonal(d) => Operator::Diagonal(d.iter().map(|x| x * s).collect()),
            Operator::Dense(m) => Operator::Dense(m * C64::new(s, 0.0)),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, other: &Operator, s: f64) -> Self {
        debug_assert_eq!(self.dim(), other.dim());
        match (self, other) {
            (Operator::Diagonal(a), Operator::Diagonal(b)) => {
                Operator::Diagonal(a.iter().zip(b).map(|(x, y)| x + s * y).collect())
            }
            _ => Operator::Dense(self.to_dense() + other.to_dense() * C64::new(s, 0.0)),
        }
    }

    pub fn kron(&self, other: &Operator) -> Self {
        match (self, other) {
            (Operator::Diagonal(a), Operator::Diagonal(b)) => {
                let mut out = Vec::with_capacity(a.len() * b.len());
                for x in a {
                    out.extend(b.iter().map(|y| x * y));
                }
                Operator::Diagonal(out)
            }
            _ => Operator::Dense(self.to_dense().kronecker(&other.to_dense())),
        }
    }

    /// Eigenvalues with small negative drift clamped to zero.
    pub fn eigenvalues(&self) -> Vec<f64> {
        match self {
            Operator::Diagonal(d) => d.iter().map(|&x| x.max(0.0)).collect(),
            Operator::Dense(m) => hermitian_eigenvalues(m).into_iter().map(|x| x.max(0.0)).collect(),
        }
    }

    /// Spectral square root.
    pub fn sqrt(&self) -> Self {
        match self {
            Operator::Diagonal(d) => Operator::Diagonal(d.iter().map(|&x| x.max(0.0).sqrt()).collect()),
            Operator::Dense(m) => {
                // eigenvalues at rounding level are zeros; their roots would not be
                let (vals, vecs) = hermitian_eigen(m);
                let top = vals.iter().fold(0.0f64, |a, &b| a.max(b));
                let d = nalgebra::DVector::from_iterator(
                    vals.len(),
                    vals.iter().map(|&x| C64::new(if x > 1e-14 * top { x.sqrt() } else { 0.0 }, 0.0)),
                );
                Operator::Dense(&vecs * DMatrix::from_diagonal(&d) * vecs.adjoint())
            }
        }
    }

    /// Unnormalized entropy term `-Σ λ log2 λ` over the spectrum.
    pub fn spectral_entropy(&self) -> f64 {
        shannon_entropy(&self.eigenvalues())
    }

    /// Trace norm of `√self √other`, i.e. the root fidelity for unit-trace inputs.
    pub fn root_fidelity(&self, other: &Operator) -> f64 {
        match (self, other) {
            (Operator::Diagonal(a), Operator::Diagonal(b)) => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x.max(0.0) * y.max(0.0)).sqrt())
                .sum(),
            _ => {
                let prod = self.sqrt().to_dense() * other.sqrt().to_dense();
                prod.singular_values().iter().sum()
            }
        }
    }
}

fn hermitize(m: DMatrix<C64>) -> DMatrix<C64> {
    let adj = m.adjoint();
    (m + adj) * C64::new(0.5, 0.0)
}

pub(crate) fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    if m.nrows() == 1 {
        return vec![m[(0, 0)].re];
    }
    m.clone().symmetric_eigenvalues().iter().copied().collect()
}

pub(crate) fn hermitian_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = m.clone().symmetric_eigen();
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// A validated quantum state: Hermitian, PSD and unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    op: Operator,
}

impl DensityMatrix {
    /// Validates a dense matrix as a density matrix.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "matrix must be square and non-empty, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let dev = (&m - m.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max);
        if dev > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let m = hermitize(m);
        Self::from_operator(Operator::Dense(m))
    }

    /// A diagonal (classical) state.
    pub fn from_diagonal(p: Vec<f64>) -> Result<Self> {
        Self::from_operator(Operator::Diagonal(p))
    }

    /// The pure state `|ψ⟩⟨ψ|`; the vector is normalized here.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = nalgebra::DVector::from_iterator(psi.len(), psi.iter().map(|c| c / norm));
        Self::from_operator(Operator::Dense(&v * v.adjoint()))
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::from_diagonal(vec![1.0 / dim as f64; dim])
    }

    pub fn from_operator(op: Operator) -> Result<Self> {
        let tr = op.trace();
        if (tr - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let raw_min = match &op {
            Operator::Diagonal(d) => d.iter().copied().fold(f64::INFINITY, f64::min),
            Operator::Dense(m) => hermitian_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min),
        };
        if raw_min < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {raw_min:e}")));
        }
        Ok(Self { op })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn matrix(&self) -> DMatrix<C64> {
        self.op.to_dense()
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    rho.op.spectral_entropy()
}

/// Root fidelity `‖√ρ √σ‖₁`.
pub fn fidelity_sqrt(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho.dim(), sigma.dim())?;
    Ok(rho.op.root_fidelity(&sigma.op).clamp(0.0, 1.0))
}

/// Squared fidelity `‖√ρ √σ‖₁²`.
pub fn fidelity_squared(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    fidelity_sqrt(rho, sigma).map(|f| f * f)
}

fn check_dims(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn check_prior(p0: f64, p1: f64) -> Result<()> {
    if p0 < 0.0 || p1 < 0.0 || (p0 + p1 - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("prior ({p0}, {p1})")));
    }
    Ok(())
}

/// Binary-input classical-quantum state `p0 |0⟩⟨0| ⊗ ρ0 + p1 |1⟩⟨1| ⊗ ρ1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CqEnsemble {
    pub p0: f64,
    pub p1: f64,
    pub rho0: DensityMatrix,
    pub rho1: DensityMatrix,
}

impl CqEnsemble {
    pub fn new(p0: f64, p1: f64, rho0: DensityMatrix, rho1: DensityMatrix) -> Result<Self> {
        check_prior(p0, p1)?;
        check_dims(rho0.dim(), rho1.dim())?;
        Ok(Self { p0, p1, rho0, rho1 })
    }

    pub fn uniform(rho0: DensityMatrix, rho1: DensityMatrix) -> Result<Self> {
        Self::new(0.5, 0.5, rho0, rho1)
    }
}

/// Holevo information `I(X;B) = H(Σ p_x ρ_x) − Σ p_x H(ρ_x)`.
pub fn holevo_information(e: &CqEnsemble) -> f64 {
    holevo_of(&[(e.p0, e.rho0.operator()), (e.p1, e.rho1.operator())])
}

/// `H(X|B) = h(p0) − I(X;B)`.
pub fn conditional_entropy_xb(e: &CqEnsemble) -> f64 {
    (binary_entropy(e.p0) - holevo_information(e)).max(0.0)
}

/// `Z(X|B) = 2 √(p0 p1) ‖√ρ0 √ρ1‖₁`.
pub fn bhattacharyya_z(e: &CqEnsemble) -> f64 {
    (2.0 * (e.p0 * e.p1).sqrt() * e.rho0.op.root_fidelity(&e.rho1.op)).clamp(0.0, 1.0)
}

/// Holevo quantity of a weighted ensemble of normalized states.
pub(crate) fn holevo_of(items: &[(f64, &Operator)]) -> f64 {
    let Some(first) = items.first() else {
        return 0.0;
    };
    let mut avg = Operator::zeros(first.1.dim());
    let mut inner = 0.0;
    for &(p, op) in items {
        if p <= 0.0 {
            continue;
        }
        avg = avg.add_scaled(op, p);
        inner += p * op.spectral_entropy();
    }
    (avg.spectral_entropy() - inner).max(0.0)
}

/// Ensemble of states labeled by a classical pair `(x, y)`.
#[derive(Debug, Clone, Default)]
pub struct LabeledEnsemble {
    entries: Vec<(usize, usize, f64, DensityMatrix)>,
}

impl LabeledEnsemble {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: usize, y: usize, p: f64, rho: DensityMatrix) -> Result<()> {
        if let Some(first) = self.entries.first() {
            check_dims(first.3.dim(), rho.dim())?;
        }
        if p < 0.0 {
            return Err(Error::InvalidDistribution(format!("negative weight {p}")));
        }
        if self.entries.iter().any(|e| e.0 == x && e.1 == y) {
            return Err(Error::InvalidDistribution(format!("duplicate label ({x}, {y})")));
        }
        self.entries.push((x, y, p, rho));
        Ok(())
    }

    pub fn entries(&self) -> &[(usize, usize, f64, DensityMatrix)] {
        &self.entries
    }
}

/// `I(X;B|Y) = H(XY) + H(YB) − H(Y) − H(XYB)` for a classical-classical-quantum state.
pub fn conditional_mutual_information(e: &LabeledEnsemble) -> Result<f64> {
    let total: f64 = e.entries.iter().map(|x| x.2).sum();
    if e.entries.is_empty() || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "labeled ensemble weights sum to {total}"
        )));
    }
    let mut ys: Vec<usize> = e.entries.iter().map(|x| x.1).collect();
    ys.sort_unstable();
    ys.dedup();
    // I(X;B|Y) = Σ_y p(y) I(X;B | Y=y)
    let mut acc = 0.0;
    for y in ys {
        let group: Vec<(f64, &Operator)> = e
            .entries
            .iter()
            .filter(|x| x.1 == y)
            .map(|x| (x.2, x.3.operator()))
            .collect();
        let py: f64 = group.iter().map(|g| g.0).sum();
        if py <= 0.0 {
            continue;
        }
        let normalized: Vec<(f64, &Operator)> = group.iter().map(|&(p, o)| (p / py, o)).collect();
        acc += py * holevo_of(&normalized);
    }
    Ok(acc)
}

/// Binary-input classical channel `p(y|x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalChannelTable {
    rows: [Vec<f64>; 2],
}

impl ClassicalChannelTable {
    pub fn new(row0: Vec<f64>, row1: Vec<f64>) -> Result<Self> {
        if row0.len() != row1.len() || row0.is_empty() {
            return Err(Error::InvalidDistribution("rows must share a non-empty alphabet".into()));
        }
        for row in [&row0, &row1] {
            let s: f64 = row.iter().sum();
            if row.iter().any(|&x| x < 0.0) || (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidDistribution(format!("row sums to {s}")));
            }
        }
        Ok(Self { rows: [row0, row1] })
    }

    pub fn erasure(eps: f64) -> Result<Self> {
        Self::new(vec![1.0 - eps, 0.0, eps], vec![0.0, 1.0 - eps, eps])
    }

    pub fn bsc(p: f64) -> Result<Self> {
        Self::new(vec![1.0 - p, p], vec![p, 1.0 - p])
    }

    pub fn outputs(&self) -> usize {
        self.rows[0].len()
    }

    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x]
    }

    /// Embeds the table as a cq ensemble with diagonal output states.
    pub fn to_ensemble(&self, p0: f64) -> Result<CqEnsemble> {
        CqEnsemble::new(
            p0,
            1.0 - p0,
            DensityMatrix::from_diagonal(self.rows[0].clone())?,
            DensityMatrix::from_diagonal(self.rows[1].clone())?,
        )
    }

    /// Classical Bhattacharyya parameter `2 Σ_y √(p0 p(y|0) p1 p(y|1))`.
    pub fn bhattacharyya(&self, p0: f64) -> f64 {
        let p1 = 1.0 - p0;
        2.0 * self.rows[0]
            .iter()
            .zip(&self.rows[1])
            .map(|(a, b)| (p0 * a * p1 * b).sqrt())
            .sum::<f64>()
    }

    /// Mutual information `I(X;Y)` for input prior `(p0, 1 − p0)`.
    pub fn mutual_information(&self, p0: f64) -> f64 {
        let p1 = 1.0 - p0;
        let out: Vec<f64> = self.rows[0].iter().zip(&self.rows[1]).map(|(a, b)| p0 * a + p1 * b).collect();
        shannon_entropy(&out) - p0 * shannon_entropy(&self.rows[0]) - p1 * shannon_entropy(&self.rows[1])
    }
}

/// Partial trace of an operator on `H_A ⊗ H_B`, keeping A (`keep_first`) or B.
pub fn partial_trace(m: &DMatrix<C64>, dim_a: usize, dim_b: usize, keep_first: bool) -> Result<DMatrix<C64>> {
    check_dims(dim_a * dim_b, m.nrows())?;
    let out = if keep_first {
        DMatrix::from_fn(dim_a, dim_a, |i, j| {
            (0..dim_b).map(|k| m[(i * dim_b + k, j * dim_b + k)]).sum()
        })
    } else {
        DMatrix::from_fn(dim_b, dim_b, |i, j| {
            (0..dim_a).map(|k| m[(k * dim_b + i, k * dim_b + j)]).sum()
        })
    };
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn ket0() -> DensityMatrix {
        DensityMatrix::pure(&[c(1.0), c(0.0)]).unwrap()
    }

    fn ket1() -> DensityMatrix {
        DensityMatrix::pure(&[c(0.0), c(1.0)]).unwrap()
    }

    fn plus() -> DensityMatrix {
        DensityMatrix::pure(&[c(1.0), c(1.0)]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((von_neumann_entropy(&mixed) - 1.0).abs() < 1e-12);
        assert!(von_neumann_entropy(&ket0()).abs() < 1e-12);
        let d = DensityMatrix::from_diagonal(vec![0.9, 0.1]).unwrap();
        let h = -(0.9f64 * 0.9f64.log2() + 0.1 * 0.1f64.log2());
        assert!((von_neumann_entropy(&d) - h).abs() < 1e-12);
        assert!((h - 0.468_995_593_589_281_2).abs() < 1e-12);
    }

    #[test]
    fn invalid_states_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.5), c(0.0), c(0.0)]);
        assert!(matches!(DensityMatrix::new(m), Err(Error::InvalidState(_))));
        assert!(DensityMatrix::from_diagonal(vec![0.5, 0.6]).is_err());
        assert!(DensityMatrix::from_diagonal(vec![1.1, -0.1]).is_err());
        // tiny negative drift is tolerated
        assert!(DensityMatrix::from_diagonal(vec![1.0 + 5e-11, -5e-11]).is_ok());
    }

    #[test]
    fn holevo_examples() {
        let e = CqEnsemble::uniform(ket0(), ket1()).unwrap();
        assert!((holevo_information(&e) - 1.0).abs() < 1e-12);
        let e = CqEnsemble::uniform(plus(), plus()).unwrap();
        assert!(holevo_information(&e).abs() < 1e-12);
        // average state of |0>,|+> has eigenvalues cos²(π/8), sin²(π/8)
        let e = CqEnsemble::uniform(ket0(), plus()).unwrap();
        let a = (std::f64::consts::PI / 8.0).cos().powi(2);
        let expected = binary_entropy(a);
        assert!((holevo_information(&e) - expected).abs() < 1e-12);
        assert!((expected - 0.600_876_036_692_856_2).abs() < 1e-12);
    }

    #[test]
    fn conditional_entropy_examples() {
        let e = CqEnsemble::uniform(ket0(), ket1()).unwrap();
        assert!(conditional_entropy_xb(&e).abs() < 1e-12);
        let e = CqEnsemble::uniform(plus(), plus()).unwrap();
        assert!((conditional_entropy_xb(&e) - 1.0).abs() < 1e-12);
        let e = CqEnsemble::new(0.9, 0.1, plus(), plus()).unwrap();
        assert!((conditional_entropy_xb(&e) - 0.468_995_593_589_281_2).abs() < 1e-12);
    }

    #[test]
    fn fidelity_and_z_examples() {
        assert!((fidelity_sqrt(&plus(), &plus()).unwrap() - 1.0).abs() < 1e-12);
        assert!(fidelity_sqrt(&ket0(), &ket1()).unwrap().abs() < 1e-12);
        let p = DensityMatrix::from_diagonal(vec![0.2, 0.3, 0.5]).unwrap();
        let q = DensityMatrix::from_diagonal(vec![0.6, 0.3, 0.1]).unwrap();
        let expected = (0.12f64).sqrt() + 0.3 + (0.05f64).sqrt();
        assert!((fidelity_sqrt(&p, &q).unwrap() - expected).abs() < 1e-12);
        assert!((fidelity_squared(&p, &q).unwrap() - expected * expected).abs() < 1e-12);

        assert!((bhattacharyya_z(&CqEnsemble::uniform(plus(), plus()).unwrap()) - 1.0).abs() < 1e-12);
        assert!(bhattacharyya_z(&CqEnsemble::uniform(ket0(), ket1()).unwrap()).abs() < 1e-12);
        let z = bhattacharyya_z(&CqEnsemble::uniform(ket0(), plus()).unwrap());
        assert!((z - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn fidelity_dimension_mismatch() {
        let a = DensityMatrix::maximally_mixed(2).unwrap();
        let b = DensityMatrix::maximally_mixed(3).unwrap();
        assert!(matches!(fidelity_sqrt(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(CqEnsemble::uniform(a, b).is_err());
    }

    #[test]
    fn cmi_reductions() {
        // trivial Y: equals Holevo information of the X ensemble
        let mut e = LabeledEnsemble::new();
        e.push(0, 0, 0.5, ket0()).unwrap();
        e.push(1, 0, 0.5, plus()).unwrap();
        let h = holevo_information(&CqEnsemble::uniform(ket0(), plus()).unwrap());
        assert!((conditional_mutual_information(&e).unwrap() - h).abs() < 1e-12);

        // X independent of (Y, B)
        let mut e = LabeledEnsemble::new();
        for x in 0..2 {
            e.push(x, 0, 0.25, ket0()).unwrap();
            e.push(x, 1, 0.25, plus()).unwrap();
        }
        assert!(conditional_mutual_information(&e).unwrap().abs() < 1e-12);

        let mut bad = LabeledEnsemble::new();
        bad.push(0, 0, 0.5, ket0()).unwrap();
        assert!(bad.push(0, 0, 0.5, ket1()).is_err());
    }

    #[test]
    fn partial_trace_of_product() {
        let a = DensityMatrix::from_diagonal(vec![0.3, 0.7]).unwrap().matrix();
        let b = plus().matrix();
        let ab = a.kronecker(&b);
        let ta = partial_trace(&ab, 2, 2, true).unwrap();
        let tb = partial_trace(&ab, 2, 2, false).unwrap();
        assert!((ta - a).norm() < 1e-12);
        assert!((tb - b).norm() < 1e-12);
    }
}
