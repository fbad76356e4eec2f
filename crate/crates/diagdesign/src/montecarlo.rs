//! Statevector simulation and moment estimation on the symmetric subspace:
//! the C(d+t-1,t)-dimensional class basis replaces the d^t tensor power,
//! which is what makes the decay experiment tractable.

use crate::bitseq::{enumerate_classes, CanonicalClass};
use crate::circuits::{DiagonalUnitary, LocalRandomLayer};
use crate::error::{Error, Result};
use crate::exact::rational_to_f64;
use crate::moments::StateMomentDiagonal;
use faer::{Accum, Mat, Par, Side};
use num_complex::Complex64;
use std::collections::HashMap;

/// A pure state on n qubits as a dense amplitude vector.
#[derive(Clone, Debug)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1 << n {
            return Err(Error::ShapeMismatch(format!(
                "expected {} amplitudes for {n} qubits, got {}",
                1usize << n,
                amplitudes.len()
            )));
        }
        Ok(Self { n, amplitudes })
    }

    pub fn plus_state(n: usize) -> Self {
        let amp = Complex64::new(1.0 / ((1u64 << n) as f64).sqrt(), 0.0);
        Self { n, amplitudes: vec![amp; 1 << n] }
    }

    pub fn basis(n: usize, x: usize) -> Result<Self> {
        if x >= 1 << n {
            return Err(Error::InvalidArgument(format!("basis index {x} out of range")));
        }
        let mut amplitudes = vec![Complex64::ZERO; 1 << n];
        amplitudes[x] = Complex64::ONE;
        Ok(Self { n, amplitudes })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply_diagonal(&mut self, u: &DiagonalUnitary) -> Result<()> {
        if u.n() != self.n {
            return Err(Error::ShapeMismatch("qubit counts differ".into()));
        }
        for (x, amp) in self.amplitudes.iter_mut().enumerate() {
            *amp *= u.phase_factor(x);
        }
        Ok(())
    }

    pub fn apply_layer(&mut self, layer: &LocalRandomLayer) -> Result<()> {
        if layer.n != self.n {
            return Err(Error::ShapeMismatch("qubit counts differ".into()));
        }
        for (q, gate) in &layer.gates {
            apply_two_qubit(&mut self.amplitudes, self.n, *q, gate);
        }
        Ok(())
    }
}

/// Apply a 4x4 gate to qubits (q, q+1), 1-based MSB-first.
pub(crate) fn apply_two_qubit(amplitudes: &mut [Complex64], n: usize, q: usize, gate: &Mat<Complex64>) {
    let hi = n - q; // bit position of qubit q (0-based from LSB)
    let lo = hi - 1; // qubit q+1
    let hi_bit = 1usize << hi;
    let lo_bit = 1usize << lo;
    for x in 0..amplitudes.len() {
        if x & hi_bit != 0 || x & lo_bit != 0 {
            continue;
        }
        let idx = [x, x | lo_bit, x | hi_bit, x | hi_bit | lo_bit];
        let old = idx.map(|i| amplitudes[i]);
        for (row, &i) in idx.iter().enumerate() {
            let mut acc = Complex64::ZERO;
            for (col, &o) in old.iter().enumerate() {
                acc += gate[(row, col)] * o;
            }
            amplitudes[i] = acc;
        }
    }
}

/// The ordered class basis of the symmetric subspace with an index lookup.
#[derive(Clone, Debug)]
pub struct ClassBasis {
    pub n: usize,
    pub t: usize,
    pub classes: Vec<CanonicalClass>,
    index: HashMap<Vec<u32>, usize>,
}

impl ClassBasis {
    pub fn new(n: usize, t: usize, budget: u64) -> Result<Self> {
        let classes: Vec<CanonicalClass> = enumerate_classes(n, t, budget)?.collect();
        let index = classes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.representative().values().to_vec(), i))
            .collect();
        Ok(Self { n, t, classes, index })
    }

    pub fn dim(&self) -> usize {
        self.classes.len()
    }

    /// Index of the class whose sorted representative is `values`.
    pub fn index_of(&self, values: &[u32]) -> Option<usize> {
        self.index.get(values).copied()
    }
}

/// Overlaps of |state>^{tensor t} with the class basis: component at class c
/// is sqrt(class_size) times the product of the representative's amplitudes.
pub fn symmetric_amplitudes(state: &StateVector, basis: &ClassBasis) -> Result<Vec<Complex64>> {
    if state.n() != basis.n {
        return Err(Error::ShapeMismatch("qubit counts differ".into()));
    }
    let amps = state.amplitudes();
    Ok(basis
        .classes
        .iter()
        .map(|class| {
            let mut product = Complex64::ONE;
            for &v in class.representative().values() {
                product *= amps[v as usize];
            }
            product * (class.class_size() as f64).sqrt()
        })
        .collect())
}

/// A Hermitian operator on the symmetric subspace in the class basis.
#[derive(Clone, Debug)]
pub struct SymmetricOperator {
    pub n: usize,
    pub t: usize,
    pub matrix: Mat<Complex64>,
}

impl SymmetricOperator {
    /// Embed an exact diagonal moment with float weights.
    pub fn from_diagonal(moment: &StateMomentDiagonal) -> Self {
        let dim = moment.classes.len();
        let mut matrix = Mat::zeros(dim, dim);
        for (i, w) in moment.weights.iter().enumerate() {
            matrix[(i, i)] = Complex64::new(rational_to_f64(w), 0.0);
        }
        Self { n: moment.n, t: moment.t, matrix }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.matrix[(i, i)]).sum()
    }
}

/// Average the t-fold outer products of sampled states.
pub fn estimate_moment(
    mut sampler: impl FnMut() -> StateVector,
    basis: &ClassBasis,
    samples: usize,
) -> Result<SymmetricOperator> {
    if samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    let dim = basis.dim();
    let mut matrix = Mat::<Complex64>::zeros(dim, dim);
    let batch = 64.min(samples);
    let mut columns = Mat::<Complex64>::zeros(dim, batch);
    let mut filled = 0usize;
    let scale = Complex64::new(1.0 / samples as f64, 0.0);
    for _ in 0..samples {
        let v = symmetric_amplitudes(&sampler(), basis)?;
        for (i, &x) in v.iter().enumerate() {
            columns[(i, filled)] = x;
        }
        filled += 1;
        if filled == batch {
            let cols = columns.as_ref().subcols(0, filled);
            faer::linalg::matmul::matmul(matrix.as_mut(), Accum::Add, cols, cols.adjoint(), scale, Par::Seq);
            filled = 0;
        }
    }
    if filled > 0 {
        let cols = columns.as_ref().subcols(0, filled);
        faer::linalg::matmul::matmul(matrix.as_mut(), Accum::Add, cols, cols.adjoint(), scale, Par::Seq);
    }
    Ok(SymmetricOperator { n: basis.n, t: basis.t, matrix })
}

/// Trace distance: sum of absolute eigenvalues of the Hermitian difference.
pub fn trace_distance(a: &SymmetricOperator, b: &SymmetricOperator) -> Result<f64> {
    if a.dim() != b.dim() {
        return Err(Error::ShapeMismatch(format!(
            "operator dimensions differ: {} vs {}",
            a.dim(),
            b.dim()
        )));
    }
    let diff = &a.matrix - &b.matrix;
    let evd = diff
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::InvalidArgument(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    Ok((0..a.dim()).map(|i| s[i].re.abs()).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{sample_local_random_layer, sample_phase_random, Parity, PhaseRandomCircuitSpec};
    use crate::moments::{haar_state_moment, phase_random_state_moment};
    use rand::{Rng, RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use rand_distr::StandardNormal;

    fn rng(seed: u64) -> ChaCha12Rng {
        ChaCha12Rng::seed_from_u64(seed)
    }

    fn random_state(n: usize, rng: &mut impl Rng) -> StateVector {
        let mut amplitudes: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        StateVector::new(n, amplitudes).unwrap()
    }

    #[test]
    fn symmetric_amplitudes_examples() {
        let basis = ClassBasis::new(2, 2, 1000).unwrap();
        // |+>^2: component sqrt(size)/2^{Nt/2}
        let v = symmetric_amplitudes(&StateVector::plus_state(2), &basis).unwrap();
        for (class, &x) in basis.classes.iter().zip(&v) {
            let expect = (class.class_size() as f64).sqrt() / 4.0;
            assert!((x - expect).norm() < 1e-12);
        }
        // basis state: single component at the doubled class
        let v = symmetric_amplitudes(&StateVector::basis(2, 3).unwrap(), &basis).unwrap();
        let hot = basis.index_of(&[3, 3]).unwrap();
        for (i, &x) in v.iter().enumerate() {
            let expect = if i == hot { 1.0 } else { 0.0 };
            assert!((x - expect).norm() < 1e-12);
        }
        // single qubit (a, b): components (a^2, sqrt(2) a b, b^2)
        let basis1 = ClassBasis::new(1, 2, 1000).unwrap();
        let (a, b) = (Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8));
        let v = symmetric_amplitudes(&StateVector::new(1, vec![a, b]).unwrap(), &basis1).unwrap();
        assert!((v[0] - a * a).norm() < 1e-12);
        assert!((v[1] - 2f64.sqrt() * a * b).norm() < 1e-12);
        assert!((v[2] - b * b).norm() < 1e-12);
    }

    #[test]
    fn symmetric_amplitudes_unit_norm() {
        for n in 1..=5 {
            for t in 1..=3 {
                let basis = ClassBasis::new(n, t, 100_000).unwrap();
                let mut r = rng(n as u64 * 10 + t as u64);
                for _ in 0..3 {
                    let v = symmetric_amplitudes(&random_state(n, &mut r), &basis).unwrap();
                    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                    assert!((norm - 1.0).abs() < 1e-9, "n={n} t={t} norm={norm}");
                }
            }
        }
    }

    #[test]
    fn layers_preserve_norm() {
        let mut state = StateVector::plus_state(5);
        let mut r = rng(2);
        for layer_idx in 0..6 {
            let layer = sample_local_random_layer(5, Parity::for_layer(layer_idx), &mut r).unwrap();
            state.apply_layer(&layer).unwrap();
        }
        assert!((state.norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn constant_sampler_gives_projector() {
        let basis = ClassBasis::new(2, 2, 1000).unwrap();
        let moment = estimate_moment(|| StateVector::plus_state(2), &basis, 10).unwrap();
        let v = symmetric_amplitudes(&StateVector::plus_state(2), &basis).unwrap();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let expect = v[i] * v[j].conj();
                assert!((moment.matrix[(i, j)] - expect).norm() < 1e-12);
            }
        }
        assert!((moment.trace() - Complex64::ONE).norm() < 1e-9);
    }

    #[test]
    fn phase_random_sampler_matches_exact_moment() {
        let basis = ClassBasis::new(2, 2, 1000).unwrap();
        let spec = PhaseRandomCircuitSpec::new(2, 2).unwrap();
        let mut r = rng(9);
        let samples = 100_000;
        let moment = estimate_moment(
            || {
                let mut state = StateVector::plus_state(2);
                state.apply_diagonal(&sample_phase_random(&spec, &mut r)).unwrap();
                state
            },
            &basis,
            samples,
        )
        .unwrap();
        let exact = SymmetricOperator::from_diagonal(&phase_random_state_moment(2, 2, 1000).unwrap());
        // weights bounded by ~1/8, per-entry sigma <= 1/sqrt(samples)
        let tol = 3.0 / (samples as f64).sqrt();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let delta = (moment.matrix[(i, j)] - exact.matrix[(i, j)]).norm();
                assert!(delta < tol, "entry ({i},{j}) off by {delta}");
            }
        }
    }

    #[test]
    fn trace_distance_properties() {
        let haar = SymmetricOperator::from_diagonal(&haar_state_moment(1, 2, 1000).unwrap());
        let dephased = SymmetricOperator::from_diagonal(&phase_random_state_moment(1, 2, 1000).unwrap());
        assert!(trace_distance(&haar, &haar).unwrap() < 1e-12);
        let d = trace_distance(&haar, &dephased).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-12);

        // orthogonal rank-1 projectors are at distance 2
        let basis = ClassBasis::new(1, 2, 1000).unwrap();
        let a = estimate_moment(|| StateVector::basis(1, 0).unwrap(), &basis, 1).unwrap();
        let b = estimate_moment(|| StateVector::basis(1, 1).unwrap(), &basis, 1).unwrap();
        assert!((trace_distance(&a, &b).unwrap() - 2.0).abs() < 1e-10);

        // triangle inequality on random triples
        let mut r = rng(17);
        for _ in 0..5 {
            let ops: Vec<SymmetricOperator> = (0..3)
                .map(|_| {
                    let state = random_state(2, &mut r);
                    estimate_moment(|| state.clone(), &basis_2(), 1).unwrap()
                })
                .collect();
            let dab = trace_distance(&ops[0], &ops[1]).unwrap();
            let dbc = trace_distance(&ops[1], &ops[2]).unwrap();
            let dac = trace_distance(&ops[0], &ops[2]).unwrap();
            assert!(dac <= dab + dbc + 1e-9);
        }
    }

    fn basis_2() -> ClassBasis {
        ClassBasis::new(2, 2, 1000).unwrap()
    }
}
