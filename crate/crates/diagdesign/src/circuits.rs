//! Phase-random circuits and their discrete controlled-phase decomposition,
//! Haar-random two-qubit layers for the decay experiment, gate-count
//! reporting, and a line-oriented gate-list serialization.

use crate::bitseq::{enumerate_classes, CanonicalClass, IndexSubset};
use crate::error::{Error, Result};
use faer::Mat;
use num_complex::Complex64;
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;
use std::f64::consts::TAU;
use std::fmt::Write as _;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// A diagonal unitary stored as its 2^N phase angles; entry x holds the
/// phase multiplying |x>. Composition is phase addition, never a matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagonalUnitary {
    n: usize,
    phases: Vec<f64>,
}

impl DiagonalUnitary {
    pub fn new(n: usize, phases: Vec<f64>) -> Result<Self> {
        if phases.len() != 1 << n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} phases for {n} qubits, got {}",
                1usize << n,
                phases.len()
            )));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("phases must be finite".into()));
        }
        let phases = phases.into_iter().map(|p| p.rem_euclid(TAU)).collect();
        Ok(Self { n, phases })
    }

    pub fn identity(n: usize) -> Self {
        Self { n, phases: vec![0.0; 1 << n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn phase_factor(&self, x: usize) -> Complex64 {
        Complex64::from_polar(1.0, self.phases[x])
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::ShapeMismatch("qubit counts differ".into()));
        }
        let phases = self
            .phases
            .iter()
            .zip(&other.phases)
            .map(|(a, b)| (a + b).rem_euclid(TAU))
            .collect();
        Ok(Self { n: self.n, phases })
    }

    pub fn conjugate(&self) -> Self {
        let phases = self.phases.iter().map(|p| (-p).rem_euclid(TAU)).collect();
        Self { n: self.n, phases }
    }
}

/// The r-qubit phase-random circuit layout: one diagonal gate per size-r
/// support, C(N,r) gates total.
#[derive(Clone, Debug)]
pub struct PhaseRandomCircuitSpec {
    pub n: usize,
    pub r: usize,
    pub gate_supports: Vec<IndexSubset>,
}

impl PhaseRandomCircuitSpec {
    pub fn new(n: usize, r: usize) -> Result<Self> {
        if r == 0 || r > n {
            return Err(Error::InvalidArgument(format!("need 1 <= r <= n, got r={r}, n={n}")));
        }
        Ok(Self { n, r, gate_supports: IndexSubset::all(n, r) })
    }
}

/// The bits of `x` (an N-qubit basis index) read at `subset`, packed MSB-first
/// in subset order.
fn sub_value(x: usize, n: usize, subset: &IndexSubset) -> usize {
    let mut v = 0usize;
    for idx in subset.indices() {
        v = (v << 1) | ((x >> (n - idx)) & 1);
    }
    v
}

/// True when every bit of `x` at `subset` is one.
fn all_ones_at(x: usize, n: usize, subset: &IndexSubset) -> bool {
    sub_value(x, n, subset) == (1 << subset.len()) - 1
}

/// Sample the continuous circuit: each support gets 2^r i.i.d. uniform
/// angles, accumulated additively into the global phase vector.
pub fn sample_phase_random(spec: &PhaseRandomCircuitSpec, rng: &mut impl Rng) -> DiagonalUnitary {
    let n = spec.n;
    let mut phases = vec![0.0f64; 1 << n];
    for support in &spec.gate_supports {
        let gate: Vec<f64> = (0..1usize << spec.r).map(|_| rng.random::<f64>() * TAU).collect();
        for (x, phase) in phases.iter_mut().enumerate() {
            *phase += gate[sub_value(x, n, support)];
        }
    }
    DiagonalUnitary::new(n, phases).expect("lengths match by construction")
}

/// Size of the discrete phase set for an s-qubit controlled-phase gate at
/// design order t: floor(t / 2^(s-1)) + 1.
pub fn phase_domain_size(t: usize, s: usize) -> u64 {
    (t >> (s - 1)) as u64 + 1
}

/// A controlled-phase-type gate diag(1,...,1,e^{i 2 pi k/m}) on `targets`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CPhaseGate {
    pub targets: IndexSubset,
    /// Phase numerator k, 0 <= k < denom.
    pub numer: u64,
    /// Phase denominator m.
    pub denom: u64,
}

impl CPhaseGate {
    pub fn angle(&self) -> f64 {
        TAU * self.numer as f64 / self.denom as f64
    }
}

/// A sampled discrete replacement of the r-qubit phase-random circuit: for
/// every size-r support and every nonempty subset of it, one
/// controlled-phase gate with angle drawn from the discrete set.
#[derive(Clone, Debug)]
pub struct CPhaseDecomposition {
    pub n: usize,
    pub t: usize,
    pub r: usize,
    pub gates: Vec<CPhaseGate>,
}

impl CPhaseDecomposition {
    /// Subsets shared by several supports are drawn independently each time,
    /// matching the product of independent r-qubit gates.
    pub fn sample(n: usize, t: usize, r: usize, rng: &mut impl Rng) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidArgument("t must be at least 1".into()));
        }
        let spec = PhaseRandomCircuitSpec::new(n, r)?;
        let mut gates = Vec::new();
        for support in &spec.gate_supports {
            let members: Vec<usize> = support.indices().collect();
            for mask in 1usize..1 << r {
                let indices: Vec<usize> = (0..r).filter(|i| mask >> i & 1 == 1).map(|i| members[i]).collect();
                let s = indices.len();
                let m = phase_domain_size(t, s);
                gates.push(CPhaseGate {
                    targets: IndexSubset::new(indices, n)?,
                    numer: rng.random_range(0..m),
                    denom: m,
                });
            }
        }
        Ok(Self { n, t, r, gates })
    }

    pub fn to_diagonal(&self) -> DiagonalUnitary {
        let mut phases = vec![0.0f64; 1 << self.n];
        for gate in &self.gates {
            let angle = gate.angle();
            for (x, phase) in phases.iter_mut().enumerate() {
                if all_ones_at(x, self.n, &gate.targets) {
                    *phase += angle;
                }
            }
        }
        DiagonalUnitary::new(self.n, phases).expect("lengths match by construction")
    }
}

pub fn sample_discrete_design(n: usize, t: usize, r: usize, rng: &mut impl Rng) -> Result<DiagonalUnitary> {
    Ok(CPhaseDecomposition::sample(n, t, r, rng)?.to_diagonal())
}

/// For every nonempty subset of size <= r, the number of entries of the
/// class representative whose bits there are all ones.
fn ones_profile(class: &CanonicalClass, subsets: &[IndexSubset]) -> Vec<i64> {
    let tuple = class.representative();
    let n = tuple.width();
    subsets
        .iter()
        .map(|subset| {
            tuple
                .values()
                .iter()
                .filter(|&&v| all_ones_at(v as usize, n, subset))
                .count() as i64
        })
        .collect()
}

/// Whether the phase-factor average over the finite phase sets vanishes for
/// this pair: nonzero iff every subset difference is divisible by its m_s.
fn pair_average_is_one(a: &[i64], b: &[i64], moduli: &[u64]) -> bool {
    a.iter()
        .zip(b)
        .zip(moduli)
        .all(|((&x, &y), &m)| (x - y).rem_euclid(m as i64) == 0)
}

fn discrete_check_inputs(
    n: usize,
    t: usize,
    r: usize,
    budget: u64,
) -> Result<(Vec<Vec<i64>>, Vec<u64>)> {
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!("need 1 <= r <= n, got r={r}, n={n}")));
    }
    let mut subsets = Vec::new();
    for s in 1..=r {
        subsets.extend(IndexSubset::all(n, s));
    }
    let moduli: Vec<u64> = subsets.iter().map(|i| phase_domain_size(t, i.len())).collect();
    let profiles: Vec<Vec<i64>> = enumerate_classes(n, t, budget)?
        .map(|class| ones_profile(&class, &subsets))
        .collect();
    Ok((profiles, moduli))
}

/// Exact average of the discrete phase factor over every class pair: true
/// iff the finite phase sets reproduce the diagonal-Haar moment exactly.
///
/// The average over one gate's phase set is a geometric sum of m-th roots of
/// unity: 1 when m divides the all-ones occurrence difference, 0 otherwise,
/// so the whole check reduces to integer divisibility. Distinct classes have
/// some unequal occurrence profile over all subsets (sizes 1..=N), so the
/// check fails exactly when a distinct pair still passes every divisibility
/// constraint available at sizes 1..=r.
pub fn exact_discrete_moment_check_seq(n: usize, t: usize, r: usize, budget: u64) -> Result<bool> {
    let (profiles, moduli) = discrete_check_inputs(n, t, r, budget)?;
    for i in 0..profiles.len() {
        for j in i + 1..profiles.len() {
            if pair_average_is_one(&profiles[i], &profiles[j], &moduli) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(feature = "parallel")]
pub fn exact_discrete_moment_check_par(n: usize, t: usize, r: usize, budget: u64) -> Result<bool> {
    let (profiles, moduli) = discrete_check_inputs(n, t, r, budget)?;
    let bad = (0..profiles.len()).into_par_iter().any(|i| {
        profiles[i + 1..]
            .iter()
            .any(|other| pair_average_is_one(&profiles[i], other, &moduli))
    });
    Ok(!bad)
}

pub fn exact_discrete_moment_check(n: usize, t: usize, r: usize, budget: u64) -> Result<bool> {
    #[cfg(feature = "parallel")]
    {
        exact_discrete_moment_check_par(n, t, r, budget)
    }
    #[cfg(not(feature = "parallel"))]
    {
        exact_discrete_moment_check_seq(n, t, r, budget)
    }
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut result = 1u128;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result
}

/// Gate counts of the discrete decomposition at the exactness threshold r.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GateCount {
    pub n: usize,
    pub t: usize,
    pub r: usize,
    pub supports: u128,
    /// (gate size s, number of size-s controlled-phase gates C(N,r)*C(r,s)).
    pub per_size: Vec<(usize, u128)>,
    /// Cost-weighted total over s = 1..r-1 (the convention that drops the
    /// full-size term).
    pub total_below_r: u128,
    /// Cost-weighted total over s = 1..r.
    pub total_through_r: u128,
}

/// Default elementary cost of an s-qubit controlled-phase gate.
pub fn quadratic_cost(s: usize) -> u128 {
    (s * s) as u128
}

pub fn gate_count(n: usize, t: usize, cost: impl Fn(usize) -> u128) -> Result<GateCount> {
    if n == 0 || t == 0 {
        return Err(Error::InvalidArgument("need n >= 1 and t >= 1".into()));
    }
    let r = crate::moments::design_threshold(n, t);
    let supports = binomial_u128(n, r);
    let per_size: Vec<(usize, u128)> =
        (1..=r).map(|s| (s, supports * binomial_u128(r, s))).collect();
    let weighted = |max_s: usize| -> u128 {
        per_size.iter().filter(|(s, _)| *s <= max_s).map(|(s, c)| c * cost(*s)).sum()
    };
    Ok(GateCount {
        n,
        t,
        r,
        supports,
        total_below_r: weighted(r.saturating_sub(1)),
        total_through_r: weighted(r),
        per_size,
    })
}

/// Brickwork parity of a two-qubit layer on the open chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// Gates on (1,2), (3,4), ...
    Even,
    /// Gates on (2,3), (4,5), ...
    Odd,
}

impl Parity {
    pub fn for_layer(layer_index: usize) -> Self {
        if layer_index % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// One parallel layer of Haar-random two-qubit gates.
#[derive(Clone, Debug)]
pub struct LocalRandomLayer {
    pub n: usize,
    pub parity: Parity,
    /// (first qubit of the pair, 4x4 unitary), pairs (q, q+1).
    pub gates: Vec<(usize, Mat<Complex64>)>,
}

/// A Haar-random 4x4 unitary: complex Ginibre matrix orthonormalized by
/// modified Gram-Schmidt. The positive column norms make the triangular
/// factor's diagonal real positive, which is what keeps the distribution
/// unitarily invariant.
pub fn haar_two_qubit(rng: &mut impl Rng) -> Mat<Complex64> {
    let mut g = Mat::<Complex64>::zeros(4, 4);
    for j in 0..4 {
        for i in 0..4 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            g[(i, j)] = Complex64::new(re, im);
        }
    }
    for j in 0..4 {
        for k in 0..j {
            let mut inner = Complex64::ZERO;
            for i in 0..4 {
                inner += g[(i, k)].conj() * g[(i, j)];
            }
            for i in 0..4 {
                let sub = inner * g[(i, k)];
                g[(i, j)] -= sub;
            }
        }
        let norm: f64 = (0..4).map(|i| g[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..4 {
            g[(i, j)] /= norm;
        }
    }
    g
}

pub fn sample_local_random_layer(n: usize, parity: Parity, rng: &mut impl Rng) -> Result<LocalRandomLayer> {
    if n < 2 {
        return Err(Error::InvalidArgument("need at least 2 qubits".into()));
    }
    let first = match parity {
        Parity::Even => 1,
        Parity::Odd => 2,
    };
    let gates = (first..n).step_by(2).map(|q| (q, haar_two_qubit(rng))).collect();
    Ok(LocalRandomLayer { n, parity, gates })
}

/// One line of the gate-list text format.
#[derive(Clone, Debug, PartialEq)]
pub enum GateLine {
    ControlledPhase(CPhaseGate),
    Diagonal { targets: IndexSubset, phases: Vec<f64> },
}

fn targets_field(subset: &IndexSubset) -> String {
    let mut s = String::new();
    for (k, idx) in subset.indices().enumerate() {
        if k > 0 {
            s.push(',');
        }
        let _ = write!(s, "{idx}");
    }
    s
}

/// C-style hex-float rendering, exact for every finite f64.
pub fn f64_to_hex(x: f64) -> String {
    let bits = x.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = (bits >> 52 & 0x7ff) as i64;
    let frac = bits & (1u64 << 52) - 1;
    if exp == 0 {
        if frac == 0 {
            format!("{sign}0x0p+0")
        } else {
            format!("{sign}0x0.{frac:013x}p-1022")
        }
    } else {
        format!("{sign}0x1.{frac:013x}p{:+}", exp - 1023)
    }
}

pub fn hex_to_f64(text: &str) -> Result<f64> {
    let bad = || Error::InvalidArgument(format!("malformed hex float {text:?}"));
    let (negative, rest) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text),
    };
    let rest = rest.strip_prefix("0x").ok_or_else(bad)?;
    let (mantissa, exp) = rest.split_once('p').ok_or_else(bad)?;
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let lead = u64::from_str_radix(int_part, 16).map_err(|_| bad())?;
    if frac_part.len() > 13 {
        return Err(bad());
    }
    let frac = if frac_part.is_empty() {
        0
    } else {
        u64::from_str_radix(frac_part, 16).map_err(|_| bad())? << (4 * (13 - frac_part.len()))
    };
    let magnitude = (lead as f64 + frac as f64 / (1u64 << 52) as f64) * 2f64.powi(exp);
    Ok(if negative { -magnitude } else { magnitude })
}

impl GateLine {
    pub fn render(&self) -> String {
        match self {
            GateLine::ControlledPhase(gate) => format!(
                "CP s={} targets={} phase={}/{}",
                gate.targets.len(),
                targets_field(&gate.targets),
                gate.numer,
                gate.denom
            ),
            GateLine::Diagonal { targets, phases } => {
                let rendered: Vec<String> = phases.iter().map(|&p| f64_to_hex(p)).collect();
                format!(
                    "DIAG r={} targets={} phases={}",
                    targets.len(),
                    targets_field(targets),
                    rendered.join(",")
                )
            }
        }
    }

    pub fn parse(line: &str, n: usize) -> Result<Self> {
        let bad = |what: &str| Error::InvalidArgument(format!("{what} in gate line {line:?}"));
        let fields: Vec<&str> = line.split_whitespace().collect();
        let field = |key: &str| -> Result<&str> {
            fields
                .iter()
                .find_map(|f| f.strip_prefix(key).and_then(|f| f.strip_prefix('=')))
                .ok_or_else(|| bad(&format!("missing {key}=")))
        };
        let targets = || -> Result<IndexSubset> {
            let indices = field("targets")?
                .split(',')
                .map(|tok| tok.parse::<usize>().map_err(|_| bad("bad target index")))
                .collect::<Result<Vec<_>>>()?;
            IndexSubset::new(indices, n)
        };
        match fields.first() {
            Some(&"CP") => {
                let targets = targets()?;
                let declared: usize = field("s")?.parse().map_err(|_| bad("bad size"))?;
                if declared != targets.len() {
                    return Err(bad("size does not match targets"));
                }
                let (numer, denom) = field("phase")?.split_once('/').ok_or_else(|| bad("bad phase"))?;
                let numer = numer.parse().map_err(|_| bad("bad phase numerator"))?;
                let denom: u64 = denom.parse().map_err(|_| bad("bad phase denominator"))?;
                if denom == 0 || numer >= denom {
                    return Err(bad("phase out of range"));
                }
                Ok(GateLine::ControlledPhase(CPhaseGate { targets, numer, denom }))
            }
            Some(&"DIAG") => {
                let targets = targets()?;
                let declared: usize = field("r")?.parse().map_err(|_| bad("bad size"))?;
                if declared != targets.len() {
                    return Err(bad("size does not match targets"));
                }
                let phases = field("phases")?
                    .split(',')
                    .map(hex_to_f64)
                    .collect::<Result<Vec<_>>>()?;
                if phases.len() != 1 << targets.len() {
                    return Err(bad("wrong phase count"));
                }
                Ok(GateLine::Diagonal { targets, phases })
            }
            _ => Err(bad("unknown gate kind")),
        }
    }
}
