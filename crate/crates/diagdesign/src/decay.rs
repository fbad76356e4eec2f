//! The decay experiment: trace distance to the Haar moment after a diagonal
//! design followed by T brickwork layers of Haar-random two-qubit gates,
//! with bootstrap error bars and the log-linear decay-rate fit.
//!
//! The average over the diagonal design is taken analytically: its moment
//! splits into a multiple of the identity (invariant under the symmetric
//! power of any unitary) plus a deficit term supported on the classes with
//! repeated strings. Only those deficit vectors are evolved through the
//! sampled layers, so T=0 reproduces the exact distance and every Monte
//! Carlo sample spends its variance budget on the circuit randomness alone.

use crate::bitseq::CanonicalClass;
use crate::circuits::{sample_local_random_layer, Parity};
use crate::error::{Error, Result};
use crate::exact::{eta_exact, rational_to_f64};
use crate::montecarlo::ClassBasis;
use faer::{Accum, Mat, Par, Side};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Uniform};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecayPoint {
    pub depth: usize,
    pub distance: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug)]
pub struct DecayResult {
    pub n: usize,
    pub t: usize,
    pub samples: usize,
    /// Exact eta(N,t), the T=0 reference value.
    pub eta: f64,
    pub points: Vec<DecayPoint>,
    /// Fitted decay rate alpha in D(T) ~ eta * 2^(-T/alpha).
    pub alpha: Option<f64>,
    /// Weighted R^2 of the log-linear fit.
    pub r_squared: Option<f64>,
}

const BOOTSTRAP_RESAMPLES: usize = 200;
/// Points whose distance is below this multiple of their standard error sit
/// at the noise floor and are excluded from the fit.
const FIT_SNR: f64 = 3.0;
/// Relative-error floor for fit weights, so the exact T=0 point cannot get
/// infinite weight.
const MIN_LOG2_SIGMA: f64 = 0.01;

fn factorial(t: usize) -> f64 {
    (1..=t).map(|k| k as f64).product()
}

/// Permanent of a small complex matrix (Ryser's formula, Gray-code order).
fn permanent(m: &[Vec<Complex64>]) -> Complex64 {
    let t = m.len();
    debug_assert!(t <= 16);
    let mut row_sums = vec![Complex64::ZERO; t];
    let mut total = Complex64::ZERO;
    let mut gray = 0usize;
    for iter in 1usize..1 << t {
        let flipped = iter.trailing_zeros() as usize;
        let added = gray >> flipped & 1 == 0;
        gray ^= 1 << flipped;
        for (k, sums) in row_sums.iter_mut().enumerate() {
            if added {
                *sums += m[k][flipped];
            } else {
                *sums -= m[k][flipped];
            }
        }
        let product: Complex64 = row_sums.iter().product();
        if (t - gray.count_ones() as usize) % 2 == 0 {
            total += product;
        } else {
            total -= product;
        }
    }
    total
}

/// The classes with repeated strings, paired with their moment deficit
/// (t! - class_size)/d^t relative to a fully generic class.
fn deficit_classes(basis: &ClassBasis) -> Vec<(usize, f64)> {
    let tfact = factorial(basis.t);
    let dt = (1u64 << basis.n) as f64;
    let dt = dt.powi(basis.t as i32);
    basis
        .classes
        .iter()
        .enumerate()
        .filter(|(_, c)| (c.class_size() as f64) < tfact)
        .map(|(i, c)| (i, (tfact - c.class_size() as f64) / dt))
        .collect()
}

/// Columns of the sampled circuit W as amplitude vectors. One depth step is
/// a full brickwork period (an even sublayer followed by an odd one): a
/// single alternating sublayer leaves boundary qubits untouched at small N
/// and puts a visible kink into log2 D(T).
fn circuit_columns(n: usize, depth: usize, rng: &mut ChaCha12Rng) -> Result<Vec<Vec<Complex64>>> {
    let d = 1usize << n;
    let mut cols: Vec<Vec<Complex64>> = (0..d)
        .map(|x| {
            let mut col = vec![Complex64::ZERO; d];
            col[x] = Complex64::ONE;
            col
        })
        .collect();
    for _ in 0..depth {
        for parity in [Parity::Even, Parity::Odd] {
            let layer = sample_local_random_layer(n, parity, rng)?;
            for col in &mut cols {
                for (q, gate) in &layer.gates {
                    crate::montecarlo::apply_two_qubit(col, n, *q, gate);
                }
            }
        }
    }
    Ok(cols)
}

/// Apply the t-th symmetric power of W to the class vector of `class`.
///
/// Component at class a: sqrt(|pi^-1(a)|) * perm(W[a_k, c_j]) /
/// sqrt(t! * prod mu_j(c)!), with a fast product-state path when the class
/// is a single repeated string.
fn evolved_class_vector(
    cols: &[Vec<Complex64>],
    class: &CanonicalClass,
    basis: &ClassBasis,
) -> Vec<Complex64> {
    let values = class.representative().values();
    let t = values.len();
    if values.iter().all(|&v| v == values[0]) {
        let state = &cols[values[0] as usize];
        return basis
            .classes
            .iter()
            .map(|a| {
                let mut product = Complex64::ONE;
                for &v in a.representative().values() {
                    product *= state[v as usize];
                }
                product * (a.class_size() as f64).sqrt()
            })
            .collect();
    }
    let mu_product: f64 = class.multiplicities().iter().map(|&m| factorial(m)).product();
    let norm = (factorial(t) * mu_product).sqrt();
    basis
        .classes
        .iter()
        .map(|a| {
            let entries = a.representative().values();
            let m: Vec<Vec<Complex64>> = (0..t)
                .map(|k| values.iter().map(|&c| cols[c as usize][entries[k] as usize]).collect())
                .collect();
            (a.class_size() as f64).sqrt() * permanent(&m) / norm
        })
        .collect()
}

/// Fill one sample's scaled deficit columns into `out` starting at `offset`.
fn fill_sample_columns(
    basis: &ClassBasis,
    deficits: &[(usize, f64)],
    depth: usize,
    seed: u64,
    sample: usize,
    out: &mut Mat<Complex64>,
    offset: usize,
) -> Result<()> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64 + 1);
    let cols = circuit_columns(basis.n, depth, &mut rng)?;
    for (j, &(class_idx, weight)) in deficits.iter().enumerate() {
        let v = evolved_class_vector(&cols, &basis.classes[class_idx], basis);
        let scale = weight.sqrt();
        for (i, &x) in v.iter().enumerate() {
            out[(i, offset + j)] = x * scale;
        }
    }
    Ok(())
}

struct DepthEstimate {
    distance: f64,
    stderr: f64,
}

/// Eigenvector matrix and signs of gamma*I minus a half-sample average.
struct SignBasis {
    u: Mat<Complex64>,
    signs: Vec<f64>,
    sign_sum: f64,
}

fn sign_basis(h: &Mat<Complex64>, gamma: f64) -> Result<SignBasis> {
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::InvalidArgument(format!("eigendecomposition failed: {e:?}")))?;
    let s = evd.S();
    let dim = h.nrows();
    let signs: Vec<f64> = (0..dim).map(|i| if gamma - s[i].re >= 0.0 { 1.0 } else { -1.0 }).collect();
    let sign_sum = signs.iter().sum();
    Ok(SignBasis { u: evd.U().to_owned(), signs, sign_sum })
}

/// Split-half cross estimator of the trace distance ||gamma*I - H||_1.
///
/// A plug-in estimate (eigenvalues of the full-sample average) is biased
/// upward by a Monte Carlo floor of order dim/sqrt(samples) that the
/// per-sample spread does not see, because the same noise picks the signs
/// and gets measured by them. Taking the sign pattern from one half of the
/// samples and the quadratic forms from the other half removes that floor:
/// each half-term has expectation tr(S (gamma*I - H_true)) <= D_true with
/// equality when the signs are right, and expectation zero once the true
/// difference vanishes. The per-sample contributions feed the bootstrap.
fn estimate_depth(
    basis: &ClassBasis,
    deficits: &[(usize, f64)],
    gamma: f64,
    depth: usize,
    samples: usize,
    seed: u64,
) -> Result<DepthEstimate> {
    let dim = basis.dim();
    let k = deficits.len();
    let batch = (1024 / k.max(1)).clamp(1, samples);
    let first_half = samples / 2;

    // first pass: accumulate the two half-sample averages
    let mut h_first = Mat::<Complex64>::zeros(dim, dim);
    let mut h_second = Mat::<Complex64>::zeros(dim, dim);
    let mut columns = Mat::<Complex64>::zeros(dim, batch * k);
    let fill_batch = |columns: &mut Mat<Complex64>, start: usize, count: usize| -> Result<()> {
        #[cfg(feature = "parallel")]
        {
            let blocks: Vec<Result<Mat<Complex64>>> = (0..count)
                .into_par_iter()
                .map(|b| {
                    let mut block = Mat::<Complex64>::zeros(dim, k);
                    fill_sample_columns(basis, deficits, depth, seed, start + b, &mut block, 0)?;
                    Ok(block)
                })
                .collect();
            for (b, block) in blocks.into_iter().enumerate() {
                let block = block?;
                for j in 0..k {
                    for i in 0..dim {
                        columns[(i, b * k + j)] = block[(i, j)];
                    }
                }
            }
            Ok(())
        }
        #[cfg(not(feature = "parallel"))]
        {
            for b in 0..count {
                fill_sample_columns(basis, deficits, depth, seed, start + b, columns, b * k)?;
            }
            Ok(())
        }
    };
    let mut done = 0usize;
    while done < samples {
        // never mix halves within one accumulation batch
        let half_end = if done < first_half { first_half } else { samples };
        let count = batch.min(half_end - done);
        fill_batch(&mut columns, done, count)?;
        let cols = columns.as_ref().subcols(0, count * k);
        let (h, half_size) = if done < first_half {
            (&mut h_first, first_half)
        } else {
            (&mut h_second, samples - first_half)
        };
        let scale = Complex64::new(1.0 / half_size as f64, 0.0);
        faer::linalg::matmul::matmul(h.as_mut(), Accum::Add, cols, cols.adjoint(), scale, Par::Seq);
        done += count;
    }

    let basis_first = sign_basis(&h_first, gamma)?;
    let basis_second = sign_basis(&h_second, gamma)?;

    // second pass: evaluate each sample against the opposite half's signs
    let mut contributions = vec![0.0f64; samples];
    let mut projected = Mat::<Complex64>::zeros(dim, batch * k);
    let one = Complex64::ONE;
    let mut done = 0usize;
    while done < samples {
        let half_end = if done < first_half { first_half } else { samples };
        let count = batch.min(half_end - done);
        fill_batch(&mut columns, done, count)?;
        let opposite = if done < first_half { &basis_second } else { &basis_first };
        let cols = columns.as_ref().subcols(0, count * k);
        faer::linalg::matmul::matmul(
            projected.as_mut().subcols_mut(0, count * k),
            Accum::Replace,
            opposite.u.adjoint(),
            cols,
            one,
            Par::Seq,
        );
        for b in 0..count {
            let mut quad = 0.0f64;
            for j in 0..k {
                for (i, sign) in opposite.signs.iter().enumerate() {
                    quad += sign * projected[(i, b * k + j)].norm_sqr();
                }
            }
            contributions[done + b] = gamma * opposite.sign_sum - quad;
        }
        done += count;
    }
    let distance: f64 = contributions.iter().sum::<f64>() / samples as f64;

    // bootstrap over the per-sample scalars
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let picker = Uniform::new(0, samples).expect("nonempty range");
    let mut means = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let total: f64 = (0..samples).map(|_| contributions[picker.sample(&mut rng)]).sum();
        means.push(total / samples as f64);
    }
    let grand = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (means.len() - 1) as f64;
    // the cross estimator can dip below zero once the true distance is gone
    Ok(DepthEstimate { distance: distance.max(0.0), stderr: var.sqrt() })
}

/// Weighted least squares of log2(distance) against depth over points above
/// the noise floor; returns (alpha, weighted R^2).
pub fn fit_decay(points: &[DecayPoint]) -> Option<(f64, f64)> {
    let usable: Vec<&DecayPoint> = points
        .iter()
        .filter(|p| p.distance > 0.0 && p.distance > FIT_SNR * p.stderr)
        .collect();
    if usable.len() < 3 {
        return None;
    }
    let ln2 = std::f64::consts::LN_2;
    let data: Vec<(f64, f64, f64)> = usable
        .iter()
        .map(|p| {
            let y = p.distance.log2();
            let sigma = (p.stderr / (p.distance * ln2)).max(MIN_LOG2_SIGMA);
            (p.depth as f64, y, 1.0 / (sigma * sigma))
        })
        .collect();
    let sw: f64 = data.iter().map(|d| d.2).sum();
    let sx: f64 = data.iter().map(|d| d.0 * d.2).sum::<f64>() / sw;
    let sy: f64 = data.iter().map(|d| d.1 * d.2).sum::<f64>() / sw;
    let sxx: f64 = data.iter().map(|d| (d.0 - sx).powi(2) * d.2).sum();
    let sxy: f64 = data.iter().map(|d| (d.0 - sx) * (d.1 - sy) * d.2).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    if slope >= 0.0 {
        return None;
    }
    let intercept = sy - slope * sx;
    let ss_res: f64 = data.iter().map(|d| (d.1 - slope * d.0 - intercept).powi(2) * d.2).sum();
    let ss_tot: f64 = data.iter().map(|d| (d.1 - sy).powi(2) * d.2).sum();
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Some((-1.0 / slope, r_squared))
}

pub fn decay_experiment(
    n: usize,
    t: usize,
    max_depth: usize,
    samples: usize,
    seed: u64,
    budget: u64,
) -> Result<DecayResult> {
    if n < 2 {
        return Err(Error::InvalidArgument("decay experiment needs at least 2 qubits".into()));
    }
    if t < 2 {
        return Err(Error::InvalidArgument("decay experiment needs t >= 2".into()));
    }
    if t > 12 {
        return Err(Error::InvalidArgument("permanent evaluation limited to t <= 12".into()));
    }
    if samples == 0 || (samples < 2 && max_depth > 0) {
        return Err(Error::InvalidArgument("need at least two samples per depth".into()));
    }
    let basis = ClassBasis::new(n, t, budget)?;
    let dim = basis.dim();
    let dt = ((1u64 << n) as f64).powi(t as i32);
    let gamma = factorial(t) / dt - 1.0 / dim as f64;
    let deficits = deficit_classes(&basis);

    // T=0 is exact: the deficit operator is still diagonal
    let mut d0 = (dim - deficits.len()) as f64 * gamma.abs();
    for &(_, w) in &deficits {
        d0 += (gamma - w).abs();
    }
    let mut points = vec![DecayPoint { depth: 0, distance: d0, stderr: 0.0 }];

    for depth in 1..=max_depth {
        let est = estimate_depth(&basis, &deficits, gamma, depth, samples, seed)?;
        points.push(DecayPoint { depth, distance: est.distance, stderr: est.stderr });
    }

    let fit = fit_decay(&points);
    Ok(DecayResult {
        n,
        t,
        samples,
        eta: rational_to_f64(&eta_exact(n, t).value),
        points,
        alpha: fit.map(|f| f.0),
        r_squared: fit.map(|f| f.1),
    })
}
