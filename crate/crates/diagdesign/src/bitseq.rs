//! Combinatorics of t-tuples of N-bit strings.
//!
//! Tuples are compared and canonicalized under permutations of the t slots.
//! Classes are enumerated as combinations-with-repetition over the integer
//! values `0..2^N`, so the full `2^{Nt}`-element tuple space is never
//! materialized.

use crate::error::{Error, Result};
use num::BigUint;

/// Largest supported qubit count. Keeps every bit string in a `u32`.
pub const MAX_QUBITS: usize = 24;

/// A fixed-width binary string. Bit 1 is the most significant bit, matching
/// the binary reading `sum_k n_k 2^(N-k)`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BitString {
    value: u32,
    width: u8,
}

impl BitString {
    pub fn new(value: u32, width: usize) -> Result<Self> {
        if width == 0 || width > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "bit width {width} outside 1..={MAX_QUBITS}"
            )));
        }
        if u64::from(value) >= 1u64 << width {
            return Err(Error::InvalidArgument(format!(
                "value {value} does not fit in {width} bits"
            )));
        }
        Ok(Self {
            value,
            width: width as u8,
        })
    }

    pub fn value(&self) -> u32 {
        self.value
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    /// Bit at position `k`, 1-based from the most significant end.
    pub fn bit(&self, k: usize) -> u8 {
        debug_assert!(k >= 1 && k <= self.width());
        ((self.value >> (self.width() - k)) & 1) as u8
    }

    /// Number of ones.
    pub fn weight(&self) -> u32 {
        self.value.count_ones()
    }
}

impl std::fmt::Display for BitString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for k in 1..=self.width() {
            write!(f, "{}", self.bit(k))?;
        }
        Ok(())
    }
}

/// An ordered list of `t` N-bit strings.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct BitTuple {
    values: Vec<u32>,
    width: u8,
}

impl BitTuple {
    pub fn new(values: Vec<u32>, width: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("tuple length must be >= 1".into()));
        }
        if width == 0 || width > MAX_QUBITS {
            return Err(Error::InvalidArgument(format!(
                "bit width {width} outside 1..={MAX_QUBITS}"
            )));
        }
        if let Some(&v) = values.iter().find(|&&v| u64::from(v) >= 1u64 << width) {
            return Err(Error::InvalidArgument(format!(
                "entry {v} does not fit in {width} bits"
            )));
        }
        Ok(Self {
            values,
            width: width as u8,
        })
    }

    pub fn from_strings(entries: &[BitString]) -> Result<Self> {
        let width = entries
            .first()
            .ok_or_else(|| Error::InvalidArgument("tuple length must be >= 1".into()))?
            .width();
        if entries.iter().any(|e| e.width() != width) {
            return Err(Error::ShapeMismatch("mixed bit widths in tuple".into()));
        }
        Self::new(entries.iter().map(|e| e.value()).collect(), width)
    }

    pub fn width(&self) -> usize {
        self.width as usize
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn entry(&self, k: usize) -> BitString {
        BitString {
            value: self.values[k],
            width: self.width,
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = BitString> + '_ {
        let width = self.width;
        self.values.iter().map(move |&value| BitString { value, width })
    }
}

impl std::fmt::Display for BitTuple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.entries().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

/// A permutation-equivalence class of tuples, held by its sorted
/// representative together with the class size |pi^-1(n')|.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CanonicalClass {
    representative: BitTuple,
    class_size: u128,
}

impl CanonicalClass {
    pub fn representative(&self) -> &BitTuple {
        &self.representative
    }

    pub fn class_size(&self) -> u128 {
        self.class_size
    }

    /// Multiplicities of the distinct strings in the representative,
    /// in order of first appearance.
    pub fn multiplicities(&self) -> Vec<usize> {
        multiplicities_of_sorted(self.representative.values())
    }
}

/// A strictly increasing subset of qubit positions `{1,..,N}`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IndexSubset {
    indices: Vec<u8>,
}

impl IndexSubset {
    pub fn new(mut indices: Vec<usize>, n: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(Error::InvalidArgument("subset must be nonempty".into()));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidArgument("subset indices must be distinct".into()));
        }
        if indices[0] < 1 || *indices.last().unwrap() > n {
            return Err(Error::InvalidArgument(format!(
                "subset indices must lie in 1..={n}"
            )));
        }
        Ok(Self {
            indices: indices.into_iter().map(|i| i as u8).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().map(|&i| i as usize)
    }

    /// All size-`s` subsets of `{1,..,n}`, in lexicographic order.
    pub fn all(n: usize, s: usize) -> Vec<IndexSubset> {
        assert!(s >= 1 && s <= n);
        let mut out = Vec::new();
        let mut cur: Vec<u8> = (1..=s as u8).collect();
        loop {
            out.push(IndexSubset { indices: cur.clone() });
            // next combination
            let mut i = s;
            while i > 0 && cur[i - 1] == (n - s + i) as u8 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            cur[i - 1] += 1;
            for j in i..s {
                cur[j] = cur[j - 1] + 1;
            }
        }
        out
    }
}

impl std::fmt::Display for IndexSubset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn multiplicities_of_sorted(sorted: &[u32]) -> Vec<usize> {
    let mut mults = Vec::new();
    let mut run = 1usize;
    for i in 1..sorted.len() {
        if sorted[i] == sorted[i - 1] {
            run += 1;
        } else {
            mults.push(run);
            run = 1;
        }
    }
    mults.push(run);
    mults
}

/// t! / prod(mu_j!) without intermediate factorials, as a u128.
fn multinomial(mults: &[usize]) -> u128 {
    let mut result: u128 = 1;
    let mut consumed = 0usize;
    for &m in mults {
        // multiply C(consumed + m, m)
        for j in 1..=m {
            consumed += 1;
            result = result * consumed as u128 / j as u128;
        }
    }
    result
}

/// Sort the tuple entries by binary value and compute the class size.
pub fn canonicalize(tuple: &BitTuple) -> CanonicalClass {
    let mut values = tuple.values().to_vec();
    values.sort_unstable();
    let class_size = multinomial(&multiplicities_of_sorted(&values));
    CanonicalClass {
        representative: BitTuple {
            values,
            width: tuple.width,
        },
        class_size,
    }
}

/// Project every entry of the tuple onto the positions in `subset`.
pub fn restrict(tuple: &BitTuple, subset: &IndexSubset) -> Result<BitTuple> {
    let n = tuple.width();
    if subset.indices.iter().any(|&i| i as usize > n) {
        return Err(Error::ShapeMismatch(format!(
            "subset index exceeds tuple width {n}"
        )));
    }
    let s = subset.len();
    let values = tuple
        .values()
        .iter()
        .map(|&v| {
            let mut out = 0u32;
            for (pos, i) in subset.indices().enumerate() {
                let bit = (v >> (n - i)) & 1;
                out |= bit << (s - 1 - pos);
            }
            out
        })
        .collect();
    Ok(BitTuple {
        values,
        width: s as u8,
    })
}

/// Number of entries of `tuple` equal to `target` (the count G_n(v)).
pub fn occurrence_count(tuple: &BitTuple, target: BitString) -> Result<usize> {
    if target.width() != tuple.width() {
        return Err(Error::ShapeMismatch(format!(
            "target width {} != tuple width {}",
            target.width(),
            tuple.width()
        )));
    }
    Ok(tuple.values().iter().filter(|&&v| v == target.value()).count())
}

/// Number of canonical classes, C(2^N + t - 1, t).
pub fn class_count(n: usize, t: usize) -> BigUint {
    let d = BigUint::from(1u32) << n;
    binomial_big(&(d + BigUint::from(t as u64 - 1)), t)
}

/// C(top, k) for a big `top`.
pub fn binomial_big(top: &BigUint, k: usize) -> BigUint {
    let mut result = BigUint::from(1u32);
    for j in 0..k {
        result = result * (top - BigUint::from(j as u64)) / BigUint::from(j as u64 + 1);
    }
    result
}

/// Iterator over all canonical classes for `n` qubits and tuple length `t`,
/// in lexicographic order of representatives.
pub struct ClassIter {
    current: Option<Vec<u32>>,
    max_value: u32,
    width: u8,
}

impl Iterator for ClassIter {
    type Item = CanonicalClass;

    fn next(&mut self) -> Option<CanonicalClass> {
        let values = self.current.as_ref()?.clone();
        let class = CanonicalClass {
            class_size: multinomial(&multiplicities_of_sorted(&values)),
            representative: BitTuple {
                values,
                width: self.width,
            },
        };
        // advance: next nondecreasing sequence over 0..=max_value
        let cur = self.current.as_mut().unwrap();
        let t = cur.len();
        let mut i = t;
        while i > 0 && cur[i - 1] == self.max_value {
            i -= 1;
        }
        if i == 0 {
            self.current = None;
        } else {
            cur[i - 1] += 1;
            let v = cur[i - 1];
            for j in i..t {
                cur[j] = v;
            }
        }
        Some(class)
    }
}

/// Enumerate every canonical class exactly once, refusing up front when the
/// class count exceeds `budget`.
pub fn enumerate_classes(n: usize, t: usize, budget: u64) -> Result<ClassIter> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::InvalidArgument(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    if t == 0 {
        return Err(Error::InvalidArgument("tuple length must be >= 1".into()));
    }
    let required = class_count(n, t);
    if required > BigUint::from(budget) {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(ClassIter {
        current: Some(vec![0u32; t]),
        max_value: ((1u64 << n) - 1) as u32,
        width: n as u8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tuple(values: &[u32], width: usize) -> BitTuple {
        BitTuple::new(values.to_vec(), width).unwrap()
    }

    #[test]
    fn canonicalize_examples() {
        // (01, 00) -> (00, 01), size 2
        let c = canonicalize(&tuple(&[0b01, 0b00], 2));
        assert_eq!(c.representative().values(), &[0b00, 0b01]);
        assert_eq!(c.class_size(), 2);

        // (00, 01, 01) -> itself, size 3!/2! = 3
        let c = canonicalize(&tuple(&[0b00, 0b01, 0b01], 2));
        assert_eq!(c.representative().values(), &[0b00, 0b01, 0b01]);
        assert_eq!(c.class_size(), 3);

        // fully repeated tuple
        let c = canonicalize(&tuple(&[0b11, 0b11, 0b11], 2));
        assert_eq!(c.class_size(), 1);
    }

    #[test]
    fn canonicalize_idempotent_on_representatives() {
        let c = canonicalize(&tuple(&[0b10, 0b01, 0b01], 2));
        let again = canonicalize(c.representative());
        assert_eq!(&again, &c);
    }

    #[test]
    fn restrict_examples() {
        let t2 = tuple(&[0b101, 0b110], 3);
        let sub = IndexSubset::new(vec![1, 3], 3).unwrap();
        assert_eq!(restrict(&t2, &sub).unwrap().values(), &[0b11, 0b10]);

        let full = IndexSubset::new(vec![1, 2, 3], 3).unwrap();
        assert_eq!(restrict(&t2, &full).unwrap(), t2);

        let t3 = tuple(&[0b00, 0b01, 0b10], 2);
        let col = IndexSubset::new(vec![2], 2).unwrap();
        assert_eq!(restrict(&t3, &col).unwrap().values(), &[0, 1, 0]);
    }

    #[test]
    fn restrict_out_of_range() {
        let t = tuple(&[0b01], 2);
        assert!(IndexSubset::new(vec![3], 2).is_err());
        let sub = IndexSubset::new(vec![3], 3).unwrap();
        assert!(matches!(restrict(&t, &sub), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn occurrence_count_examples() {
        let t = tuple(&[0b00, 0b01, 0b01], 2);
        assert_eq!(occurrence_count(&t, BitString::new(0b01, 2).unwrap()).unwrap(), 2);
        assert_eq!(occurrence_count(&t, BitString::new(0b11, 2).unwrap()).unwrap(), 0);
        let t1 = tuple(&[0, 1], 1);
        assert_eq!(occurrence_count(&t1, BitString::new(0, 1).unwrap()).unwrap(), 1);
        // sums to t over all targets
        let total: usize = (0..4)
            .map(|v| occurrence_count(&t, BitString::new(v, 2).unwrap()).unwrap())
            .sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn enumerate_classes_small() {
        let classes: Vec<_> = enumerate_classes(1, 2, 1000).unwrap().collect();
        let reps: Vec<_> = classes.iter().map(|c| c.representative().values().to_vec()).collect();
        assert_eq!(reps, vec![vec![0, 0], vec![0, 1], vec![1, 1]]);

        assert_eq!(enumerate_classes(3, 2, 1000).unwrap().count(), 36);
        assert_eq!(enumerate_classes(1, 1, 1000).unwrap().count(), 2);
    }

    #[test]
    fn enumerate_classes_budget() {
        assert!(matches!(
            enumerate_classes(10, 4, 100),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn class_sizes_sum_to_tuple_count() {
        for n in 1..=3usize {
            for t in 1..=4usize {
                let total: u128 = enumerate_classes(n, t, 1_000_000)
                    .unwrap()
                    .map(|c| c.class_size())
                    .sum();
                assert_eq!(total, 1u128 << (n * t), "n={n} t={t}");
            }
        }
    }

    /// Brute-force count of distinct permutations of a tuple.
    fn distinct_permutations(values: &[u32]) -> usize {
        fn permute(values: &mut Vec<u32>, k: usize, seen: &mut std::collections::HashSet<Vec<u32>>) {
            if k == values.len() {
                seen.insert(values.clone());
                return;
            }
            for i in k..values.len() {
                values.swap(k, i);
                permute(values, k + 1, seen);
                values.swap(k, i);
            }
        }
        let mut seen = std::collections::HashSet::new();
        permute(&mut values.to_vec(), 0, &mut seen);
        seen.len()
    }

    proptest! {
        #[test]
        fn canonicalize_permutation_invariant(
            values in proptest::collection::vec(0u32..8, 1..6),
            seed in any::<u64>(),
        ) {
            let t = tuple(&values, 3);
            let mut shuffled = values.clone();
            // cheap seeded shuffle
            let mut state = seed | 1;
            for i in (1..shuffled.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                shuffled.swap(i, j);
            }
            let t_shuffled = tuple(&shuffled, 3);
            prop_assert_eq!(canonicalize(&t), canonicalize(&t_shuffled));
        }

        #[test]
        fn class_size_matches_permutation_enumeration(
            values in proptest::collection::vec(0u32..4, 1..6),
        ) {
            let c = canonicalize(&tuple(&values, 2));
            prop_assert_eq!(c.class_size() as usize, distinct_permutations(&values));
        }

        #[test]
        fn restrict_commutes_with_permutation(
            values in proptest::collection::vec(0u32..8, 2..6),
            rot in 1usize..5,
            idx in proptest::collection::btree_set(1usize..=3, 1..=2),
        ) {
            let t = tuple(&values, 3);
            let mut rotated = values.clone();
            rotated.rotate_left(rot % values.len());
            let t_rot = tuple(&rotated, 3);
            let sub = IndexSubset::new(idx.into_iter().collect(), 3).unwrap();
            prop_assert_eq!(
                canonicalize(&restrict(&t_rot, &sub).unwrap()),
                canonicalize(&restrict(&t, &sub).unwrap())
            );
        }
    }
}
