//! Constructors for the optical state families and seeded batch generators.
//!
//! Pure families are built from analytic Fock amplitudes, truncated to `dim`
//! levels and renormalized. Where the truncation discards measurable weight
//! the `*_report` variants return it alongside the state.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::linalg::{expm_apply, Banded};
use crate::quantum::{BosonicOperators, ComplexMatrix, ComplexVector, DensityMatrix};
use crate::rng::{rng_from_seed, substream_seed};

/// Discarded probability above which a coherent/cat state is flagged.
pub const COHERENT_TRUNCATION_WARN: f64 = 1e-6;
/// Discarded probability above which a GKP state is flagged.
pub const GKP_TRUNCATION_WARN: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Fock,
    Coherent,
    Thermal,
    Cat,
    Binomial,
    Num,
    Gkp,
    RandomMixed,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Fock,
        Family::Coherent,
        Family::Thermal,
        Family::Cat,
        Family::Binomial,
        Family::Num,
        Family::Gkp,
        Family::RandomMixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Fock => "fock",
            Family::Coherent => "coherent",
            Family::Thermal => "thermal",
            Family::Cat => "cat",
            Family::Binomial => "binomial",
            Family::Num => "num",
            Family::Gkp => "gkp",
            Family::RandomMixed => "random_mixed",
        }
    }

    /// Parameter keys a label of this family must carry.
    pub fn required_keys(self) -> &'static [&'static str] {
        match self {
            Family::Fock => &["n"],
            Family::Coherent => &["alpha"],
            Family::Thermal => &["nth"],
            Family::Cat => &["alpha", "parity"],
            Family::Binomial => &["N", "S"],
            Family::Num => &["name", "amplitudes"],
            Family::Gkp => &["delta", "logical", "halfwidth"],
            Family::RandomMixed => &["rank", "seed"],
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse(format!("unknown state family `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Logical {
    Zero,
    One,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Complex([f64; 2]),
    ComplexList(Vec<[f64; 2]>),
    Text(String),
}

/// Family plus the parameters a state was built from. Enough to rebuild it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateLabel {
    pub family: Family,
    pub params: BTreeMap<String, ParamValue>,
}

impl StateLabel {
    pub fn new(family: Family, params: impl IntoIterator<Item = (&'static str, ParamValue)>) -> Result<Self> {
        let params: BTreeMap<String, ParamValue> = params.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        let required = family.required_keys();
        if params.len() != required.len() || required.iter().any(|k| !params.contains_key(*k)) {
            return Err(Error::InvalidParameter(format!(
                "{} label needs exactly the keys {:?}",
                family.name(),
                required
            )));
        }
        Ok(Self { family, params })
    }

    fn get(&self, key: &str) -> Result<&ParamValue> {
        self.params.get(key).ok_or_else(|| Error::InvalidParameter(format!("missing `{key}`")))
    }

    fn int(&self, key: &str) -> Result<i64> {
        match self.get(key)? {
            ParamValue::Int(v) => Ok(*v),
            other => Err(Error::InvalidParameter(format!("`{key}` should be an integer, got {other:?}"))),
        }
    }

    fn count(&self, key: &str) -> Result<usize> {
        usize::try_from(self.int(key)?).map_err(|_| Error::InvalidParameter(format!("`{key}` must be non-negative")))
    }

    fn real(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            ParamValue::Real(v) => Ok(*v),
            ParamValue::Int(v) => Ok(*v as f64),
            other => Err(Error::InvalidParameter(format!("`{key}` should be real, got {other:?}"))),
        }
    }

    fn complex(&self, key: &str) -> Result<C64> {
        match self.get(key)? {
            ParamValue::Complex([re, im]) => Ok(C64::new(*re, *im)),
            ParamValue::Real(v) => Ok(C64::new(*v, 0.0)),
            other => Err(Error::InvalidParameter(format!("`{key}` should be complex, got {other:?}"))),
        }
    }

    /// Rebuilds the state in a `dim`-level space.
    pub fn build(&self, dim: usize) -> Result<DensityMatrix> {
        match self.family {
            Family::Fock => fock(dim, self.count("n")?),
            Family::Coherent => coherent(dim, self.complex("alpha")?),
            Family::Thermal => thermal(dim, self.real("nth")?),
            Family::Cat => {
                let parity = if self.int("parity")? == 0 { Parity::Even } else { Parity::Odd };
                cat(dim, self.complex("alpha")?, parity)
            }
            Family::Binomial => binomial(dim, self.count("N")?, self.count("S")?),
            Family::Num => match self.get("amplitudes")? {
                ParamValue::ComplexList(a) => num(dim, &a.iter().map(|[re, im]| C64::new(*re, *im)).collect::<Vec<_>>()),
                _ => Err(Error::InvalidParameter("`amplitudes` should be a complex list".into())),
            },
            Family::Gkp => {
                let logical = if self.int("logical")? == 0 { Logical::Zero } else { Logical::One };
                gkp(dim, self.real("delta")?, logical, self.count("halfwidth")?)
            }
            Family::RandomMixed => random_dm(dim, self.count("rank")?, self.int("seed")? as u64),
        }
    }
}

/// How much probability the Fock truncation threw away.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationReport {
    pub discarded: f64,
    pub warning: bool,
}

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Coherent amplitudes e^{-|α|²/2} αⁿ/√n! for n < dim, not renormalized.
/// Evaluated in log space so large |α| neither overflows nor underflows early.
pub fn coherent_amplitudes(dim: usize, alpha: C64) -> ComplexVector {
    let r = alpha.norm();
    let theta = alpha.arg();
    ComplexVector::from_fn(dim, |n, _| {
        if r == 0.0 {
            return if n == 0 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
        }
        let ln_mag = -0.5 * r * r + n as f64 * r.ln() - 0.5 * ln_factorial(n);
        C64::from_polar(ln_mag.exp(), n as f64 * theta)
    })
}

pub fn fock(dim: usize, n: usize) -> Result<DensityMatrix> {
    if n >= dim {
        return Err(Error::IndexOutOfRange { index: n, dim });
    }
    let mut psi = ComplexVector::zeros(dim);
    psi[n] = C64::new(1.0, 0.0);
    DensityMatrix::from_pure(&psi)
}

pub fn coherent(dim: usize, alpha: C64) -> Result<DensityMatrix> {
    coherent_report(dim, alpha).map(|(dm, _)| dm)
}

pub fn coherent_report(dim: usize, alpha: C64) -> Result<(DensityMatrix, TruncationReport)> {
    if dim == 0 {
        return Err(Error::DimensionTooSmall { dim, required: 0 });
    }
    let psi = coherent_amplitudes(dim, alpha);
    let discarded = (1.0 - psi.norm_squared()).max(0.0);
    let dm = DensityMatrix::from_pure(&psi)?;
    Ok((dm, TruncationReport { discarded, warning: discarded > COHERENT_TRUNCATION_WARN }))
}

/// Thermal state with mean occupancy `nth`, ρ_nn ∝ nthⁿ/(1+nth)^{n+1}.
pub fn thermal(dim: usize, nth: f64) -> Result<DensityMatrix> {
    if !(nth >= 0.0) {
        return Err(Error::NegativeParameter { name: "nth", value: nth });
    }
    if dim == 0 {
        return Err(Error::DimensionTooSmall { dim, required: 0 });
    }
    let ratio = nth / (1.0 + nth);
    let weights: Vec<f64> = (0..dim).map(|n| ratio.powi(n as i32) / (1.0 + nth)).collect();
    let total: f64 = weights.iter().sum();
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (n, w) in weights.iter().enumerate() {
        m[(n, n)] = C64::new(w / total, 0.0);
    }
    Ok(DensityMatrix::from_psd_unchecked(m))
}

/// (|α⟩ ± |−α⟩)/√N±. Parity selection is applied per Fock level, so the
/// wrong-parity amplitudes are exactly zero.
pub fn cat(dim: usize, alpha: C64, parity: Parity) -> Result<DensityMatrix> {
    cat_report(dim, alpha, parity).map(|(dm, _)| dm)
}

pub fn cat_report(dim: usize, alpha: C64, parity: Parity) -> Result<(DensityMatrix, TruncationReport)> {
    if dim < 2 {
        return Err(Error::DimensionTooSmall { dim, required: 1 });
    }
    if parity == Parity::Odd && alpha.norm() < 1e-8 {
        return Err(Error::DegenerateCat(alpha.norm()));
    }
    let keep = match parity {
        Parity::Even => 0,
        Parity::Odd => 1,
    };
    let sign = if keep == 0 { 1.0 } else { -1.0 };
    let norm_factor = 2.0 * (1.0 + sign * (-2.0 * alpha.norm_sqr()).exp());
    let mut psi = coherent_amplitudes(dim, alpha);
    for n in 0..dim {
        psi[n] = if n % 2 == keep { psi[n] * (2.0 / norm_factor.sqrt()) } else { C64::new(0.0, 0.0) };
    }
    let discarded = (1.0 - psi.norm_squared()).max(0.0);
    let dm = DensityMatrix::from_pure(&psi)?;
    Ok((dm, TruncationReport { discarded, warning: discarded > COHERENT_TRUNCATION_WARN }))
}

fn binomial_coefficient(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Binomial code word with amplitudes √(C(N+1, m)/2^{N+1}) on levels m(S+1).
pub fn binomial(dim: usize, n: usize, s: usize) -> Result<DensityMatrix> {
    let top = (n + 1) * (s + 1);
    if top >= dim {
        return Err(Error::DimensionTooSmall { dim, required: top });
    }
    let mut psi = ComplexVector::zeros(dim);
    let denom = 2f64.powi(n as i32 + 1);
    for m in 0..=n + 1 {
        psi[m * (s + 1)] = C64::new((binomial_coefficient(n + 1, m) / denom).sqrt(), 0.0);
    }
    DensityMatrix::from_pure(&psi)
}

/// Pure state from a user-supplied Fock amplitude table.
pub fn num(dim: usize, amplitudes: &[C64]) -> Result<DensityMatrix> {
    if amplitudes.len() > dim {
        return Err(Error::DimensionTooSmall { dim, required: amplitudes.len() - 1 });
    }
    let mut psi = ComplexVector::zeros(dim);
    for (n, a) in amplitudes.iter().enumerate() {
        psi[n] = *a;
    }
    DensityMatrix::from_pure(&psi)
}

/// Square-lattice finite-energy GKP code word
/// ∝ Σ_{s=-S}^{S} e^{-πΔ²s²} D(μ_s) S(r)|0⟩, r = -ln Δ, μ_s = (2s + b)√(π/2).
pub fn gkp(dim: usize, delta: f64, logical: Logical, halfwidth: usize) -> Result<DensityMatrix> {
    gkp_report(dim, delta, logical, halfwidth).map(|(dm, _)| dm)
}

/// Fock levels used to build GKP states before truncating to `dim`.
fn gkp_working_dim(dim: usize) -> usize {
    4 * dim + 128
}

pub fn gkp_report(dim: usize, delta: f64, logical: Logical, halfwidth: usize) -> Result<(DensityMatrix, TruncationReport)> {
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("GKP delta must be positive, got {delta}")));
    }
    if dim < 8 {
        return Err(Error::DimensionTooSmall { dim, required: 7 });
    }
    if halfwidth == 0 {
        return Err(Error::InvalidParameter("GKP lattice half-width must be at least 1".into()));
    }
    let work = gkp_working_dim(dim);
    let ops = BosonicOperators::new(work);
    let mut vacuum = ComplexVector::zeros(work);
    vacuum[0] = C64::new(1.0, 0.0);
    let r = -delta.ln();
    let squeezed = expm_apply(&Banded::from_dense(&ops.squeeze_generator(C64::new(r, 0.0))), &vacuum);

    // D(k μ₁) = D(μ₁)^k for collinear real shifts, μ₁ = √(π/2).
    let step = Banded::from_dense(&ops.displacement_generator(C64::new((PI / 2.0).sqrt(), 0.0)));
    let back = step.scale(C64::new(-1.0, 0.0));
    let b: i64 = match logical {
        Logical::Zero => 0,
        Logical::One => 1,
    };
    let s_max = halfwidth as i64;
    let mut psi = ComplexVector::zeros(work);
    let mut forward = squeezed.clone();
    let mut shift = 0_i64;
    let mut backward = squeezed;
    let mut back_shift = 0_i64;
    for s in -s_max..=s_max {
        let k = 2 * s + b;
        let envelope = (-PI * delta * delta * (s * s) as f64).exp();
        let displaced = if k >= 0 {
            while shift < k {
                forward = expm_apply(&step, &forward);
                shift += 1;
            }
            forward.clone()
        } else {
            while back_shift > k {
                backward = expm_apply(&back, &backward);
                back_shift -= 1;
            }
            backward.clone()
        };
        psi += displaced * C64::new(envelope, 0.0);
    }
    let total = psi.norm_squared();
    let kept = psi.rows(0, dim).into_owned();
    let discarded = (1.0 - kept.norm_squared() / total).max(0.0);
    let dm = DensityMatrix::from_pure(&kept)?;
    Ok((dm, TruncationReport { discarded, warning: discarded > GKP_TRUNCATION_WARN }))
}

/// Ginibre random state GG†/Tr(GG†) with G a dim×rank standard complex
/// Gaussian matrix, filled row-major (re then im) from the seeded stream.
pub fn random_dm(dim: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if rank == 0 || rank > dim {
        return Err(Error::BadRank { rank, dim });
    }
    let mut rng = rng_from_seed(seed);
    let mut g = ComplexMatrix::zeros(dim, rank);
    for i in 0..dim {
        for j in 0..rank {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            g[(i, j)] = C64::new(re, im);
        }
    }
    let gram = &g * g.adjoint();
    Ok(DensityMatrix::from_psd_unchecked(gram))
}

/// One named entry of a num-state amplitude table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumEntry {
    pub name: String,
    pub amplitudes: Vec<[f64; 2]>,
}

impl NumEntry {
    pub fn complex_amplitudes(&self) -> Vec<C64> {
        self.amplitudes.iter().map(|[re, im]| C64::new(*re, *im)).collect()
    }

    pub fn label(&self) -> StateLabel {
        StateLabel {
            family: Family::Num,
            params: BTreeMap::from([
                ("name".to_string(), ParamValue::Text(self.name.clone())),
                ("amplitudes".to_string(), ParamValue::ComplexList(self.amplitudes.clone())),
            ]),
        }
    }
}

const DEFAULT_NUM_TABLE: &str = include_str!("../data/num_states.txt");

/// Parses the num-state table format: one state per line, the name followed
/// by whitespace-separated `re,im` pairs. Blank lines and `#` comments are
/// skipped. Amplitudes are normalized.
pub fn parse_num_table(text: &str) -> Result<Vec<NumEntry>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let name = fields.next().unwrap_or_default().to_string();
        let mut amplitudes = Vec::new();
        for field in fields {
            let (re, im) = field
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected re,im but got `{field}`", lineno + 1)))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)));
            amplitudes.push([parse(re)?, parse(im)?]);
        }
        let norm: f64 = amplitudes.iter().map(|[re, im]| re * re + im * im).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::ZeroVector);
        }
        let amplitudes = amplitudes.into_iter().map(|[re, im]| [re / norm, im / norm]).collect();
        out.push(NumEntry { name, amplitudes });
    }
    Ok(out)
}

/// The shipped stand-in num states (`M1`..`M4`).
pub fn default_num_table() -> Vec<NumEntry> {
    parse_num_table(DEFAULT_NUM_TABLE).expect("shipped num table parses")
}

pub fn num_entry(name: &str) -> Result<NumEntry> {
    default_num_table()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::InvalidParameter(format!("unknown num state `{name}`")))
}

/// Inclusive real range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub low: f64,
    pub high: f64,
}

impl Range {
    pub fn new(low: f64, high: f64) -> Self {
        Self { low, high }
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.low <= self.high && self.low.is_finite() && self.high.is_finite() {
            Ok(())
        } else {
            Err(Error::EmptyRange(name.to_string()))
        }
    }

    fn sample(&self, rng: &mut crate::rng::Rng) -> f64 {
        if self.low == self.high {
            self.low
        } else {
            rng.random_range(self.low..=self.high)
        }
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub low: usize,
    pub high: usize,
}

impl IntRange {
    pub fn new(low: usize, high: usize) -> Self {
        Self { low, high }
    }

    fn check(&self, name: &str) -> Result<()> {
        if self.low <= self.high {
            Ok(())
        } else {
            Err(Error::EmptyRange(name.to_string()))
        }
    }

    fn sample(&self, rng: &mut crate::rng::Rng) -> usize {
        rng.random_range(self.low..=self.high)
    }
}

/// A family together with the ranges its parameters are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum BatchSpec {
    Fock { n: IntRange },
    Coherent { alpha_magnitude: Range },
    Thermal { nth: Range },
    /// `parity: None` draws even/odd with equal probability.
    Cat { alpha_magnitude: Range, parity: Option<Parity> },
    Binomial { n: IntRange, s: IntRange },
    Num { table: Vec<NumEntry> },
    /// `logical: None` draws the code word with equal probability.
    Gkp { delta: Range, logical: Option<Logical>, halfwidth: usize },
    RandomMixed { rank: Option<IntRange> },
}

impl BatchSpec {
    pub fn family(&self) -> Family {
        match self {
            BatchSpec::Fock { .. } => Family::Fock,
            BatchSpec::Coherent { .. } => Family::Coherent,
            BatchSpec::Thermal { .. } => Family::Thermal,
            BatchSpec::Cat { .. } => Family::Cat,
            BatchSpec::Binomial { .. } => Family::Binomial,
            BatchSpec::Num { .. } => Family::Num,
            BatchSpec::Gkp { .. } => Family::Gkp,
            BatchSpec::RandomMixed { .. } => Family::RandomMixed,
        }
    }

    /// Default ranges used by the standard dataset.
    pub fn dataset_default(family: Family) -> Self {
        match family {
            Family::Fock => BatchSpec::Fock { n: IntRange::new(0, 10) },
            Family::Coherent => BatchSpec::Coherent { alpha_magnitude: Range::new(0.0, 3.0) },
            Family::Thermal => BatchSpec::Thermal { nth: Range::new(0.1, 3.0) },
            Family::Cat => BatchSpec::Cat { alpha_magnitude: Range::new(0.0, 3.0), parity: Some(Parity::Even) },
            Family::Binomial => BatchSpec::Binomial { n: IntRange::new(1, 3), s: IntRange::new(0, 2) },
            Family::Num => BatchSpec::Num { table: default_num_table() },
            Family::Gkp => BatchSpec::Gkp { delta: Range::new(0.25, 0.45), logical: None, halfwidth: 3 },
            Family::RandomMixed => BatchSpec::RandomMixed { rank: None },
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BatchSpec::Fock { n } => n.check("n"),
            BatchSpec::Coherent { alpha_magnitude } | BatchSpec::Cat { alpha_magnitude, .. } => {
                alpha_magnitude.check("alpha_magnitude")?;
                if alpha_magnitude.low < 0.0 {
                    return Err(Error::EmptyRange("alpha_magnitude".into()));
                }
                Ok(())
            }
            BatchSpec::Thermal { nth } => nth.check("nth"),
            BatchSpec::Binomial { n, s } => {
                n.check("N")?;
                s.check("S")
            }
            BatchSpec::Num { table } => {
                if table.is_empty() {
                    Err(Error::EmptyRange("num table".into()))
                } else {
                    Ok(())
                }
            }
            BatchSpec::Gkp { delta, .. } => delta.check("delta"),
            BatchSpec::RandomMixed { rank } => rank.map_or(Ok(()), |r| r.check("rank")),
        }
    }

    /// Draws one label from the ranges.
    pub fn sample_label(&self, dim: usize, rng: &mut crate::rng::Rng) -> StateLabel {
        let complex_alpha = |range: &Range, rng: &mut crate::rng::Rng| {
            let mag = range.sample(rng);
            let phase = rng.random_range(0.0..TAU);
            let z = C64::from_polar(mag, phase);
            ParamValue::Complex([z.re, z.im])
        };
        let params: Vec<(&'static str, ParamValue)> = match self {
            BatchSpec::Fock { n } => vec![("n", ParamValue::Int(n.sample(rng) as i64))],
            BatchSpec::Coherent { alpha_magnitude } => vec![("alpha", complex_alpha(alpha_magnitude, rng))],
            BatchSpec::Thermal { nth } => vec![("nth", ParamValue::Real(nth.sample(rng)))],
            BatchSpec::Cat { alpha_magnitude, parity } => {
                let alpha = complex_alpha(alpha_magnitude, rng);
                let parity = match parity {
                    Some(p) => *p,
                    None if rng.random_bool(0.5) => Parity::Odd,
                    None => Parity::Even,
                };
                vec![("alpha", alpha), ("parity", ParamValue::Int(if parity == Parity::Odd { 1 } else { 0 }))]
            }
            BatchSpec::Binomial { n, s } => {
                vec![("N", ParamValue::Int(n.sample(rng) as i64)), ("S", ParamValue::Int(s.sample(rng) as i64))]
            }
            BatchSpec::Num { table } => {
                let entry = &table[rng.random_range(0..table.len())];
                return entry.label();
            }
            BatchSpec::Gkp { delta, logical, halfwidth } => {
                let d = delta.sample(rng);
                let logical = match logical {
                    Some(l) => *l,
                    None if rng.random_bool(0.5) => Logical::One,
                    None => Logical::Zero,
                };
                vec![
                    ("delta", ParamValue::Real(d)),
                    ("logical", ParamValue::Int(if logical == Logical::One { 1 } else { 0 })),
                    ("halfwidth", ParamValue::Int(*halfwidth as i64)),
                ]
            }
            BatchSpec::RandomMixed { rank } => {
                let rank = rank.map_or(dim, |r| r.sample(rng));
                vec![("rank", ParamValue::Int(rank as i64)), ("seed", ParamValue::Int((rng.random::<u32>()) as i64))]
            }
        };
        StateLabel::new(self.family(), params).expect("sampled labels carry the family's keys")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateBatch {
    pub states: Vec<DensityMatrix>,
    pub labels: Vec<StateLabel>,
    pub seed: u64,
}

/// `n_states` states with parameters drawn from `spec`. State `i` draws from
/// the substream `(seed, i)`, so the batch is identical however it is
/// scheduled across threads.
pub fn generate_batch(spec: &BatchSpec, n_states: usize, dim: usize, seed: u64) -> Result<StateBatch> {
    spec.validate()?;
    if n_states == 0 {
        return Err(Error::InvalidParameter("n_states must be at least 1".into()));
    }
    let results: Vec<Result<(DensityMatrix, StateLabel)>> = (0..n_states)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(substream_seed(seed, i as u64));
            let label = spec.sample_label(dim, &mut rng);
            let dm = label.build(dim).map_err(|e| Error::Record { index: i, source: Box::new(e) })?;
            Ok((dm, label))
        })
        .collect();
    let mut states = Vec::with_capacity(n_states);
    let mut labels = Vec::with_capacity(n_states);
    for r in results {
        let (dm, label) = r?;
        states.push(dm);
        labels.push(label);
    }
    Ok(StateBatch { states, labels, seed })
}
