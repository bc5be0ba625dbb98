//! Polarization profiles and the high/low index sets derived from them.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, derive_seed, ExecMode};
use crate::model::{self, AuxiliaryStructure, BroadcastChannelSpec, Layer, Receiver};
use crate::sc::{posterior_bhattacharyya, successive_cancel};
use crate::synthesis::{exact_values, HybridChannel, PayloadKind, SynthesisBudget};
use crate::transform::{log2_exact, polar_encode};

/// Sorted, distinct, zero-based indices into a block of length `n`.
///
/// Serialized and displayed one-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSet {
    n: usize,
    idx: Vec<usize>,
}

impl IndexSet {
    pub fn new(n: usize, mut idx: Vec<usize>) -> Result<Self> {
        idx.sort_unstable();
        idx.dedup();
        if let Some(&last) = idx.last() {
            if last >= n {
                return Err(Error::IndexOutOfRange { index: last, n });
            }
        }
        Ok(Self { n, idx })
    }

    pub fn from_one_based(n: usize, idx: &[usize]) -> Result<Self> {
        if idx.contains(&0) {
            return Err(Error::IndexOutOfRange { index: 0, n });
        }
        Self::new(n, idx.iter().map(|i| i - 1).collect())
    }

    pub fn empty(n: usize) -> Self {
        Self { n, idx: Vec::new() }
    }

    pub fn full(n: usize) -> Self {
        Self { n, idx: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.idx.binary_search(&i).is_ok()
    }

    pub fn indices(&self) -> &[usize] {
        &self.idx
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.idx.iter().map(|i| i + 1).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.idx.iter().copied()
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            n: self.n,
            idx: self.iter().filter(|&i| other.contains(i)).collect(),
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Self::new(self.n, self.iter().chain(other.iter()).collect())
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            n: self.n,
            idx: self.iter().filter(|&i| !other.contains(i)).collect(),
        })
    }

    pub fn complement(&self) -> Self {
        Self {
            n: self.n,
            idx: (0..self.n).filter(|&i| !self.contains(i)).collect(),
        }
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.iter().all(|i| !other.contains(i))
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|i| other.contains(i))
    }

    /// The `count` members with the smallest `key`, ties broken by index.
    pub fn lowest(&self, key: &[f64], count: usize) -> Self {
        let mut order = self.idx.clone();
        order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
        order.truncate(count);
        order.sort_unstable();
        Self { n: self.n, idx: order }
    }

    /// Members ordered by ascending `key`, ties broken by index.
    pub fn ordered_by(&self, key: &[f64]) -> Vec<usize> {
        let mut order = self.idx.clone();
        order.sort_by(|&a, &b| key[a].total_cmp(&key[b]).then(a.cmp(&b)));
        order
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.one_based().iter().map(ToString::to_string).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Serialize for IndexSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

/// Cut-offs for the high (`Z ≥ high`) and low (`Z ≤ low`) sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold {
    pub low: f64,
    pub high: f64,
}

impl Threshold {
    pub fn new(low: f64, high: f64) -> Result<Self> {
        if !(low > 0.0 && high < 1.0 && low <= high) {
            return Err(Error::Config(format!("thresholds need 0 < low <= high < 1, got ({low}, {high})")));
        }
        Ok(Self { low, high })
    }
}

impl Default for Threshold {
    fn default() -> Self {
        Self { low: 0.01, high: 0.99 }
    }
}

/// What the target bit is conditioned on besides its own past.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Conditioning {
    None,
    ClassicalSide,
    QuantumOutput,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Method {
    Exact,
    MonteCarlo { samples: usize, max_half_width: f64 },
}

/// Per-index Bhattacharyya values of one synthesized family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationProfile {
    pub n: usize,
    pub z: Vec<f64>,
    /// 95% normal-approximation half-widths (Monte Carlo only).
    pub half_width: Option<Vec<f64>>,
    pub method: Method,
    pub conditioning: Conditioning,
    pub label: String,
}

impl PolarizationProfile {
    pub fn exact(z: Vec<f64>, conditioning: Conditioning, label: impl Into<String>) -> Result<Self> {
        log2_exact(z.len())?;
        if let Some(bad) = z.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidDistribution(format!("Z value {bad} outside [0,1]")));
        }
        Ok(Self {
            n: z.len(),
            z,
            half_width: None,
            method: Method::Exact,
            conditioning,
            label: label.into(),
        })
    }

    /// Writes `index,Z,method,half_width` rows (one-based indices).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "Z", "method", "half_width"])?;
        let method = match self.method {
            Method::Exact => "exact",
            Method::MonteCarlo { .. } => "monte-carlo",
        };
        for (i, z) in self.z.iter().enumerate() {
            let hw = self.half_width.as_ref().map_or(0.0, |h| h[i]);
            w.write_record([(i + 1).to_string(), z.to_string(), method.to_string(), hw.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn high_set(p: &PolarizationProfile, t: &Threshold) -> IndexSet {
    IndexSet {
        n: p.n,
        idx: (0..p.n).filter(|&i| p.z[i] >= t.high).collect(),
    }
}

pub fn low_set(p: &PolarizationProfile, t: &Threshold) -> IndexSet {
    IndexSet {
        n: p.n,
        idx: (0..p.n).filter(|&i| p.z[i] <= t.low).collect(),
    }
}

/// How profiles are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    Exact,
    MonteCarlo,
    /// Exact within a reduced classical budget, Monte Carlo beyond it.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileOptions {
    pub mode: ProfileMode,
    pub samples: usize,
    pub seed: u64,
    pub budget: SynthesisBudget,
    /// Column cap for the exact classical attempt in `Auto` mode.
    pub auto_classical_columns: usize,
    #[serde(skip)]
    pub exec: ExecMode,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            mode: ProfileMode::Auto,
            samples: 2000,
            seed: 0,
            budget: SynthesisBudget::default(),
            auto_classical_columns: 256,
            exec: ExecMode::default(),
        }
    }
}

/// Monte Carlo estimate of every `Z(U_i | U^{i-1}, S^n)` for i.i.d. pairs drawn from joint columns.
///
/// Each sample draws `(t_j, s_j)`, forms `u = t G_n` and runs genie-aided
/// successive cancellation with the exact posteriors `ln p(0|s)/p(1|s)`;
/// `Z_i` is the mean of `2√(P(0)P(1))` of the posterior of `u_i`.
pub fn monte_carlo_profile(
    cols: &[[f64; 2]],
    n: usize,
    samples: usize,
    seed: u64,
    mode: ExecMode,
    conditioning: Conditioning,
    label: impl Into<String>,
) -> Result<PolarizationProfile> {
    log2_exact(n)?;
    if samples == 0 {
        return Err(Error::Config("Monte Carlo profiles need at least one sample".into()));
    }
    let total: f64 = cols.iter().map(|c| c[0] + c[1]).sum();
    let mut cdf = Vec::with_capacity(2 * cols.len());
    let mut acc = 0.0;
    for (s, c) in cols.iter().enumerate() {
        for t in 0..2 {
            if c[t] > 0.0 {
                acc += c[t] / total;
                cdf.push((acc, t as u8, s));
            }
        }
    }
    let llrs: Vec<f64> = cols
        .iter()
        .map(|&[a, b]| match (a > 0.0, b > 0.0) {
            (true, true) => (a / b).ln(),
            (true, false) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => 0.0,
        })
        .collect();
    let draw = |r: f64| -> (u8, usize) {
        let k = cdf.partition_point(|e| e.0 <= r).min(cdf.len() - 1);
        (cdf[k].1, cdf[k].2)
    };
    let per_sample = exec::map_range(samples, mode, |m| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, m as u64));
        let mut t = vec![0u8; n];
        let mut llr = vec![0.0; n];
        for j in 0..n {
            let (bit, s) = draw(rng.random());
            t[j] = bit;
            llr[j] = llrs[s];
        }
        let u = polar_encode(&t).expect("power of two");
        let mut z = vec![0.0; n];
        successive_cancel(&llr, 1, &mut |i, l| {
            z[i] = posterior_bhattacharyya(l[0]);
            u[i]
        })
        .expect("power of two");
        z
    });
    let mut mean = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for z in &per_sample {
        for i in 0..n {
            mean[i] += z[i];
            sq[i] += z[i] * z[i];
        }
    }
    let m = samples as f64;
    let mut hw = vec![0.0; n];
    for i in 0..n {
        mean[i] /= m;
        let var = if samples > 1 { ((sq[i] - m * mean[i] * mean[i]) / (m - 1.0)).max(0.0) } else { 0.0 };
        hw[i] = 1.96 * (var / m).sqrt();
        mean[i] = mean[i].clamp(0.0, 1.0);
    }
    let max_hw = hw.iter().copied().fold(0.0, f64::max);
    Ok(PolarizationProfile {
        n,
        z: mean,
        half_width: Some(hw),
        method: Method::MonteCarlo {
            samples,
            max_half_width: max_hw,
        },
        conditioning,
        label: label.into(),
    })
}

/// Profile of an arbitrary hybrid channel under the given options.
pub fn profile_of(
    w: &HybridChannel,
    n: usize,
    conditioning: Conditioning,
    label: &str,
    opts: &ProfileOptions,
) -> Result<PolarizationProfile> {
    let exact = |budget: &SynthesisBudget| -> Result<PolarizationProfile> {
        let vals = exact_values(w, n, budget, opts.exec)?;
        PolarizationProfile::exact(vals.iter().map(|v| v.z).collect(), conditioning, label)
    };
    let mc = || -> Result<PolarizationProfile> {
        let cols = w
            .columns()
            .ok_or_else(|| Error::Unsupported("Monte Carlo profiles with quantum side information".into()))?;
        monte_carlo_profile(cols, n, opts.samples, opts.seed, opts.exec, conditioning, label)
    };
    match opts.mode {
        ProfileMode::Exact => exact(&opts.budget),
        ProfileMode::MonteCarlo => mc(),
        ProfileMode::Auto => {
            if w.kind() == PayloadKind::Quantum {
                return exact(&opts.budget);
            }
            let small = SynthesisBudget {
                max_dim: opts.budget.max_dim,
                max_branches: opts.budget.max_branches.min(opts.auto_classical_columns),
            };
            match exact(&small) {
                Err(Error::Budget { .. }) => mc(),
                other => other,
            }
        }
    }
}

/// Profile of a binary source with no side information, `P(V=1) = p1`.
pub fn source_profile(p1: f64, n: usize, opts: &ProfileOptions) -> Result<PolarizationProfile> {
    if !(0.0..=1.0).contains(&p1) {
        return Err(Error::InvalidDistribution(format!("P(V=1) = {p1}")));
    }
    let w = HybridChannel::from_columns(vec![[1.0 - p1, p1]])?;
    profile_of(&w, n, Conditioning::None, "V", opts)
}

/// Profile of a channel (classical or quantum) with its input prior.
pub fn channel_profile(w: &HybridChannel, n: usize, opts: &ProfileOptions) -> Result<PolarizationProfile> {
    let conditioning = match w.kind() {
        PayloadKind::Quantum => Conditioning::QuantumOutput,
        PayloadKind::Classical => Conditioning::ClassicalSide,
    };
    profile_of(w, n, conditioning, "channel", opts)
}

/// Short label such as `V1|V,B1`.
pub fn context_label(target: Layer, given: &[Layer], receiver: Option<Receiver>) -> String {
    let name = |l: &Layer| match l {
        Layer::V => "V",
        Layer::V1 => "V1",
        Layer::V2 => "V2",
    };
    let mut parts: Vec<String> = given.iter().map(|l| name(l).to_string()).collect();
    if let Some(r) = receiver {
        parts.push(format!("B{}", r.number()));
    }
    if parts.is_empty() {
        name(&target).to_string()
    } else {
        format!("{}|{}", name(&target), parts.join(","))
    }
}

/// Profile of `target` given full realizations of `given` layers and, optionally, a receiver output.
pub fn conditional_profile(
    spec: &BroadcastChannelSpec,
    aux: &AuxiliaryStructure,
    target: Layer,
    given: &[Layer],
    receiver: Option<Receiver>,
    n: usize,
    opts: &ProfileOptions,
) -> Result<PolarizationProfile> {
    let w = model::induced_source(spec, aux, target, given, receiver)?;
    let conditioning = match (given.is_empty(), receiver.is_some()) {
        (true, false) => Conditioning::None,
        (false, false) => Conditioning::ClassicalSide,
        (true, true) if spec.is_quantum() => Conditioning::QuantumOutput,
        (false, true) if spec.is_quantum() => Conditioning::Both,
        _ => Conditioning::ClassicalSide,
    };
    let label = context_label(target, given, receiver);
    // distinct seeds per context keep profiles independent
    let stream = label.bytes().fold(0u64, |h, b| h.wrapping_mul(131).wrapping_add(b as u64));
    let opts = ProfileOptions {
        seed: derive_seed(opts.seed, stream),
        ..*opts
    };
    profile_of(&w, n, conditioning, &label, &opts)
}
