//! Closed-form exact quantities: the Haar-vs-phase-random distance eta(N,t)
//! via collision-pattern counting, its large-d asymptotics, the probabilistic
//! mixing curve D(p) with its exact minimizer, and the conjectured circuit
//! length T(eps).
//!
//! Everything here is exact rational arithmetic; floats only appear in
//! `required_length`, which is a float formula by nature.

use crate::bitseq::{binomial_big, class_count, enumerate_classes};
use crate::error::{Error, Result};
use num::{BigInt, BigRational, BigUint, One, Signed, Zero};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// An integer partition of t, recording how many entries of a tuple coincide.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CollisionPattern {
    /// Nonincreasing positive parts summing to t.
    parts: Vec<u32>,
}

impl CollisionPattern {
    pub fn new(mut parts: Vec<u32>) -> Result<Self> {
        if parts.is_empty() || parts.iter().any(|&p| p == 0) {
            return Err(Error::InvalidArgument("parts must be positive".into()));
        }
        parts.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { parts })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn total(&self) -> usize {
        self.parts.iter().map(|&p| p as usize).sum()
    }

    pub fn part_count(&self) -> usize {
        self.parts.len()
    }

    /// Class size shared by every class with this pattern: t! / prod(parts!).
    pub fn class_size(&self) -> BigUint {
        let mut result = BigUint::one();
        let mut consumed = 0u64;
        for &p in &self.parts {
            for j in 1..=u64::from(p) {
                consumed += 1;
                result = result * consumed / j;
            }
        }
        result
    }
}

/// All partitions of t in reverse lexicographic order.
pub fn partitions(t: usize) -> Vec<CollisionPattern> {
    fn rec(remaining: u32, max_part: u32, prefix: &mut Vec<u32>, out: &mut Vec<CollisionPattern>) {
        if remaining == 0 {
            out.push(CollisionPattern { parts: prefix.clone() });
            return;
        }
        for p in (1..=remaining.min(max_part)).rev() {
            prefix.push(p);
            rec(remaining - p, p, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(t as u32, t as u32, &mut Vec::new(), &mut out);
    out
}

/// Number of canonical classes whose multiplicity profile equals `pattern`:
/// C(d, l) * l! / prod_j m_j! with m_j the number of parts of size j.
pub fn pattern_class_count(n: usize, t: usize, pattern: &CollisionPattern) -> Result<BigUint> {
    if pattern.total() != t {
        return Err(Error::InvalidArgument(format!(
            "pattern sums to {}, expected {t}",
            pattern.total()
        )));
    }
    let d = BigUint::one() << n;
    let l = pattern.part_count();
    if BigUint::from(l as u64) > d {
        return Ok(BigUint::zero());
    }
    let mut count = binomial_big(&d, l);
    // l! / prod m_j!: distinct ways to assign sizes to the chosen strings
    let mut perm = BigUint::one();
    for j in 2..=l as u64 {
        perm *= j;
    }
    let mut run = 1u64;
    for i in 1..pattern.parts.len() {
        if pattern.parts[i] == pattern.parts[i - 1] {
            run += 1;
            perm /= run;
        } else {
            run = 1;
        }
    }
    count *= perm;
    Ok(count)
}

/// Exact trace distance between the Haar and phase-random moments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactDistance {
    pub n: usize,
    pub t: usize,
    pub value: BigRational,
}

fn rational(num: BigUint, den: BigUint) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// eta(N,t) summed over collision patterns; cost depends on the number of
/// partitions of t, not on the dimension.
pub fn eta_exact(n: usize, t: usize) -> ExactDistance {
    let c = class_count(n, t);
    let haar_weight = rational(BigUint::one(), c);
    let den = BigUint::one() << (n * t);
    let pats = partitions(t);

    let term = |pattern: &CollisionPattern| -> BigRational {
        let count = pattern_class_count(n, t, pattern).expect("pattern sums to t");
        let weight = rational(pattern.class_size(), den.clone());
        BigRational::from(BigInt::from(count)) * (&haar_weight - weight).abs()
    };

    let value: BigRational = {
        #[cfg(feature = "parallel")]
        {
            pats.par_iter().map(term).reduce(BigRational::zero, |a, b| a + b)
        }
        #[cfg(not(feature = "parallel"))]
        {
            pats.iter().map(term).sum()
        }
    };
    ExactDistance { n, t, value }
}

/// eta(N,t) by direct enumeration of every canonical class; the independent
/// route used to cross-check the pattern sum.
pub fn eta_via_enumeration(n: usize, t: usize, budget: u64) -> Result<BigRational> {
    let c = class_count(n, t);
    let haar_weight = rational(BigUint::one(), c);
    let den = BigUint::one() << (n * t);
    let mut sum = BigRational::zero();
    for class in enumerate_classes(n, t, budget)? {
        let weight = rational(BigUint::from(class.class_size()), den.clone());
        sum += (&haar_weight - weight).abs();
    }
    Ok(sum)
}

/// Leading-order prediction t(t-1)/2^N.
pub fn eta_asymptotic(n: usize, t: usize) -> BigRational {
    rational(
        BigUint::from((t * (t - 1)) as u64),
        BigUint::one() << n,
    )
}

/// The exact distance curve D(p) of the classical mixing protocol: with
/// probability p apply the diagonal design to |+>^N, otherwise emit a random
/// computational basis state.
#[derive(Clone, Debug)]
pub struct MixingCurve {
    pub n: usize,
    pub t: usize,
    /// Kink locations of the piecewise-linear curve inside [0,1], sorted.
    pub breakpoints: Vec<BigRational>,
    /// Closed-form minimizer (1 - d/C) / (1 - d^(1-t)).
    pub p_star: BigRational,
    pub d_at_p_star: BigRational,
    pub d_at_one: BigRational,
}

impl MixingCurve {
    /// Evaluate D(p) exactly.
    pub fn eval(&self, p: &BigRational) -> BigRational {
        mixing_distance(self.n, self.t, p)
    }

    /// Minimize D over [0,1] by scanning breakpoints (D is convex piecewise
    /// linear, so the minimum sits on a kink or an endpoint).
    pub fn minimizer(&self) -> (BigRational, BigRational) {
        let mut candidates = vec![BigRational::zero(), BigRational::one()];
        candidates.extend(self.breakpoints.iter().cloned());
        let mut best: Option<(BigRational, BigRational)> = None;
        for p in candidates {
            let v = self.eval(&p);
            match &best {
                Some((bv, _)) if *bv <= v => {}
                _ => best = Some((v, p)),
            }
        }
        let (value, arg) = best.unwrap();
        (arg, value)
    }
}

/// D(p) as the appendix sum: the d fully-repeated classes merge with the
/// basis-state mixture; every other class carries p times its design weight.
pub fn mixing_distance(n: usize, t: usize, p: &BigRational) -> BigRational {
    let d = BigUint::one() << n;
    let c = class_count(n, t);
    let haar_weight = rational(BigUint::one(), c.clone());
    let den = BigUint::one() << (n * t);
    let d_rat = BigRational::from(BigInt::from(d.clone()));
    let one = BigRational::one();

    // repeated classes: weight (1-p)/d + p/d^t each
    let repeated_weight = (&one - p) / &d_rat + p * rational(BigUint::one(), den.clone());
    let mut sum = &d_rat * (&haar_weight - repeated_weight).abs();

    for pattern in partitions(t) {
        if pattern.part_count() == 1 {
            continue; // the fully-repeated pattern handled above
        }
        let count = pattern_class_count(n, t, &pattern).expect("pattern sums to t");
        let weight = p * rational(pattern.class_size(), den.clone());
        sum += BigRational::from(BigInt::from(count)) * (&haar_weight - weight).abs();
    }
    sum
}

/// Build the mixing curve with its exact closed-form minimizer.
pub fn mixing_curve(n: usize, t: usize) -> MixingCurve {
    let d = BigUint::one() << n;
    let c = class_count(n, t);
    let den = BigUint::one() << (n * t);
    let d_rat = BigRational::from(BigInt::from(d.clone()));
    let one = BigRational::one();

    // closed form (1 - d/C) / (1 - d^(1-t))
    let p_star = (&one - &d_rat / BigRational::from(BigInt::from(c.clone())))
        / (&one - &one / d_rat.clone().pow((t - 1) as i32));

    let mut breakpoints = vec![p_star.clone()];
    for pattern in partitions(t) {
        if pattern.part_count() == 1 {
            continue;
        }
        // kink of |1/C - p * size/d^t| at p = d^t / (C * size)
        let kink = rational(den.clone(), c.clone() * pattern.class_size());
        if kink <= one {
            breakpoints.push(kink);
        }
    }
    breakpoints.sort();
    breakpoints.dedup();

    let d_at_p_star = mixing_distance(n, t, &p_star);
    let d_at_one = mixing_distance(n, t, &one);
    MixingCurve { n, t, breakpoints, p_star, d_at_p_star, d_at_one }
}

/// Conjectured local-random-circuit length achieving distance eps after a
/// diagonal design: zero for eps >= eta, else alpha*(log2(1/eps) - N +
/// log2 t(t-1)), floored at zero.
pub fn required_length(epsilon: f64, n: usize, t: usize, alpha: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be positive".into()));
    }
    let eta = rational_to_f64(&eta_exact(n, t).value);
    if epsilon >= eta {
        return Ok(0.0);
    }
    let tt = (t * (t - 1)) as f64;
    let length = alpha * ((1.0 / epsilon).log2() - n as f64 + tt.log2());
    Ok(length.max(0.0))
}

/// Shortest-round-trip f64 value of an exact rational.
pub fn rational_to_f64(x: &BigRational) -> f64 {
    // num's BigRational has no direct conversion; go through a scaled
    // integer quotient to keep full f64 precision.
    let num = x.numer();
    let den = x.denom();
    if num.is_zero() {
        return 0.0;
    }
    let sign = if num.is_negative() { -1.0 } else { 1.0 };
    let num = num.abs().to_biguint().unwrap();
    let den = den.abs().to_biguint().unwrap();
    let shift = 64i64 + den.bits() as i64 - num.bits() as i64;
    let scaled = if shift >= 0 {
        (num << shift as u64) / den
    } else {
        num / (den << (-shift) as u64)
    };
    let mantissa = scaled.to_u64_digits();
    let mut value = 0.0f64;
    for (i, digit) in mantissa.iter().enumerate() {
        value += (*digit as f64) * 2f64.powi(64 * i as i32);
    }
    sign * value * 2f64.powi(-shift.min(i64::from(i32::MAX)) as i32)
}
