//! Slater decomposition of two-boson states and the entanglement measures
//! derived from it.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{GateError, Result};
use crate::propagator::PropagationResult;
use crate::tp_basis::{computational_extraction, AmplitudeVector, TwoParticleBasis};

pub type CMatrix = DMatrix<Complex64>;

/// `λ̃² = λ²/Σλ²` above this counts toward the Slater rank.
pub const RANK_THRESHOLD: f64 = 1e-10;
const DEGENERACY_RTOL: f64 = 1e-9;
/// Below this the projected state is treated as absent.
pub const MIN_PROJECTED_WEIGHT: f64 = 1e-12;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Amplitudes on the normalized symmetric mode pairs `|m n⟩_S`, keyed by `(m, n)` with `m ≤ n`.
fn pair_amplitudes(v: &AmplitudeVector, basis: &TwoParticleBasis) -> HashMap<(usize, usize), Complex64> {
    let mut out: HashMap<(usize, usize), Complex64> = HashMap::new();
    for (amp, s) in v.coeffs.iter().zip(basis.states()) {
        for &(m, n, c) in &s.terms {
            *out.entry((m.min(n), m.max(n))).or_insert_with(zero) += amp * c;
        }
    }
    out
}

/// Symmetric `v` with `|ψ⟩ = Σ v_ij b†_i b†_j |Ω⟩`.
pub fn amplitudes_to_mode_matrix(v: &AmplitudeVector, basis: &TwoParticleBasis) -> Result<CMatrix> {
    if v.coeffs.len() != basis.dim() {
        return Err(GateError::BasisMismatch(format!("vector of length {} for a basis of {}", v.coeffs.len(), basis.dim())));
    }
    let n = basis.n_sp();
    let mut m = CMatrix::zeros(n, n);
    for ((i, j), a) in pair_amplitudes(v, basis) {
        if i == j {
            m[(i, i)] += a * FRAC_1_SQRT_2;
        } else {
            m[(i, j)] += a * 0.5;
            m[(j, i)] += a * 0.5;
        }
    }
    Ok(m)
}

/// Inverse of [`amplitudes_to_mode_matrix`] (for symmetric `v`).
pub fn mode_matrix_to_amplitudes(m: &CMatrix, basis: &TwoParticleBasis) -> Result<AmplitudeVector> {
    let n = basis.n_sp();
    if m.nrows() != n || m.ncols() != n {
        return Err(GateError::BasisMismatch(format!("{}×{} mode matrix for {n} modes", m.nrows(), m.ncols())));
    }
    let coeffs = basis
        .states()
        .iter()
        .map(|s| {
            s.terms
                .iter()
                .map(|&(p, q, c)| if p == q { m[(p, p)] * (c * SQRT_2) } else { (m[(p, q)] + m[(q, p)]) * c })
                .sum()
        })
        .collect();
    Ok(AmplitudeVector { coeffs, time: 0.0 })
}

/// Symmetric unitary square root of a symmetric unitary `z`.
fn symmetric_sqrt(z: &CMatrix) -> CMatrix {
    let k = z.nrows();
    if k == 1 {
        return CMatrix::from_element(1, 1, z[(0, 0)].sqrt());
    }
    let zs = (z + z.transpose()) * Complex64::new(0.5, 0.0);
    // real and imaginary parts commute; a generic combination separates every eigenspace
    let mix = 0.618_033_988_749_894_9;
    let real = DMatrix::from_fn(k, k, |i, j| zs[(i, j)].re + mix * zs[(i, j)].im);
    let eig = SymmetricEigen::new(real);
    let q = eig.eigenvectors.map(|x| Complex64::new(x, 0.0));
    let d = q.transpose() * &zs * &q;
    let half = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |i, _| d[(i, i)].sqrt()));
    &q * half * q.transpose()
}

/// Autonne–Takagi factorization `v = T Λ Tᵀ` with `T` unitary and `Λ ≥ 0` descending.
pub fn takagi(v: &CMatrix) -> Result<(CMatrix, Vec<f64>)> {
    let n = v.nrows();
    if v.ncols() != n {
        return Err(GateError::invalid("mode matrix", "must be square"));
    }
    let scale = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if n == 0 || scale == 0.0 {
        return Ok((CMatrix::identity(n, n), vec![0.0; n]));
    }
    let sym = (v + v.transpose()) * Complex64::new(0.5, 0.0);
    let svd = sym.svd(true, true);
    let u_raw = svd.u.expect("left singular vectors");
    let vt_raw = svd.v_t.expect("right singular vectors");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sigma: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let u = CMatrix::from_fn(n, n, |i, j| u_raw[(i, order[j])]);
    // conj(V) = (V^H)^T
    let vbar = CMatrix::from_fn(n, n, |i, j| vt_raw[(order[j], i)]);
    let z = u.adjoint() * vbar;

    let mut s = CMatrix::zeros(n, n);
    let tiny = scale * 1e-14 * n as f64;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (sigma[start] - sigma[end]).abs() <= DEGENERACY_RTOL * sigma[start].max(tiny) {
            end += 1;
        }
        if sigma[start] <= tiny {
            // null space: any unitary completion works
            for k in start..n {
                s[(k, k)] = Complex64::new(1.0, 0.0);
            }
            break;
        }
        let block = z.view((start, start), (end - start, end - start)).into_owned();
        let root = symmetric_sqrt(&block);
        s.view_mut((start, start), (end - start, end - start)).copy_from(&root);
        start = end;
    }
    let mut t = u * s;
    for j in 0..n {
        let (mut best, mut mag) = (0, -1.0);
        for i in 0..n {
            if t[(i, j)].norm() > mag + 1e-12 {
                mag = t[(i, j)].norm();
                best = i;
            }
        }
        if t[(best, j)].re < 0.0 {
            for i in 0..n {
                t[(i, j)] = -t[(i, j)];
            }
        }
    }
    Ok((t, sigma))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlaterSpectrum {
    /// Takagi values, descending; `Σλ² = 1/2` for a normalized state.
    pub lambda: Vec<f64>,
    pub rank: usize,
}

impl SlaterSpectrum {
    pub fn from_lambda(mut lambda: Vec<f64>) -> Self {
        lambda.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = lambda.iter().map(|l| l * l).sum();
        let rank = if total > 0.0 { lambda.iter().filter(|l| *l * *l / total > RANK_THRESHOLD).count() } else { 0 };
        SlaterSpectrum { lambda, rank }
    }

    pub fn weight(&self) -> f64 {
        self.lambda.iter().map(|l| l * l).sum()
    }
}

pub fn slater_spectrum(v: &AmplitudeVector, basis: &TwoParticleBasis) -> Result<SlaterSpectrum> {
    let (_, lambda) = takagi(&amplitudes_to_mode_matrix(v, basis)?)?;
    Ok(SlaterSpectrum::from_lambda(lambda))
}

fn shannon_bits(p: impl Iterator<Item = f64>) -> f64 {
    p.filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum::<f64>().max(0.0)
}

/// `−Σ λ̃² log₂ λ̃²` with `λ̃² = λ²/Σλ²`; 0 for a single Slater term, `log₂ r` for `r` equal ones.
pub fn bosonic_entropy(spectrum: &SlaterSpectrum) -> Result<f64> {
    let total = spectrum.weight();
    if !(total > 0.0) {
        return Err(GateError::UndefinedEntropy("all-zero Slater spectrum".into()));
    }
    Ok(shannon_bits(spectrum.lambda.iter().map(|l| l * l / total)))
}

/// `−Σ λ² log₂ λ²` on the raw coefficients (`Σλ² = 1/2`), kept for comparison.
pub fn bosonic_entropy_raw(spectrum: &SlaterSpectrum) -> f64 {
    shannon_bits(spectrum.lambda.iter().map(|l| l * l))
}

fn entropy_of_matrix(psi: &CMatrix) -> f64 {
    let sv = psi.clone().svd(false, false).singular_values;
    let total: f64 = sv.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0.0;
    }
    shannon_bits(sv.iter().map(|s| s * s / total))
}

/// Entanglement of the state restricted to `{|00⟩⁺, |01⟩⁺, |01⟩⁻, |11⟩⁺}`, read as
/// two distinguishable qubits (left trap = A, right trap = B), and the weight of that projection.
pub fn projected_entropy(v: &AmplitudeVector, basis: &TwoParticleBasis) -> Result<(f64, f64)> {
    let x = computational_extraction(basis, v)?;
    let p_single: f64 = x.amplitudes.iter().map(|a| a.norm_sqr()).sum();
    if p_single <= MIN_PROJECTED_WEIGHT {
        return Err(GateError::UndefinedEntropy(format!("projected weight {p_single:e}")));
    }
    let psi = CMatrix::from_fn(2, 2, |i, j| x.amplitudes[2 * i + j]);
    Ok((entropy_of_matrix(&psi), p_single))
}

/// Entropy of the left-trap occupation numbers in the Fock representation.
pub fn occupation_entropy(v: &AmplitudeVector, basis: &TwoParticleBasis) -> Result<f64> {
    if v.coeffs.len() != basis.dim() {
        return Err(GateError::BasisMismatch("vector length differs from basis".into()));
    }
    let nl = basis.n_sp() / 2;
    // occupied left / right modes as sorted lists
    let mut left: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut right: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut entries = Vec::new();
    let mut pairs: Vec<((usize, usize), Complex64)> = pair_amplitudes(v, basis).into_iter().collect();
    pairs.sort_by_key(|(k, _)| *k);
    for ((m, n), a) in pairs {
        let (mut l, mut r) = (Vec::new(), Vec::new());
        for k in [m, n] {
            if k < nl {
                l.push(k);
            } else {
                r.push(k);
            }
        }
        let nli = left.len();
        let li = *left.entry(l).or_insert(nli);
        let nri = right.len();
        let ri = *right.entry(r).or_insert(nri);
        entries.push((li, ri, a));
    }
    let mut psi = CMatrix::zeros(left.len().max(1), right.len().max(1));
    for (i, j, a) in entries {
        psi[(i, j)] += a;
    }
    Ok(entropy_of_matrix(&psi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrelationRow {
    pub time: f64,
    /// `S_B / 2`, scaled to `[0, 1]` over a four-mode subspace.
    pub s_b_half: f64,
    pub slater_rank: usize,
    pub s_projected: f64,
    pub p_single: f64,
    pub s_projected_weighted: f64,
    pub s_occupation: f64,
}

impl CorrelationRow {
    pub const HEADER: [&'static str; 7] = ["time", "S_B/2", "slater_rank", "S", "p_single", "S*p_single", "S_Z"];
}

pub fn correlations_of(v: &AmplitudeVector, basis: &TwoParticleBasis) -> Result<CorrelationRow> {
    let spec = slater_spectrum(v, basis)?;
    let s_b = bosonic_entropy(&spec)?;
    let (s, p) = match projected_entropy(v, basis) {
        Ok(x) => x,
        Err(GateError::UndefinedEntropy(_)) => (f64::NAN, 0.0),
        Err(e) => return Err(e),
    };
    Ok(CorrelationRow {
        time: v.time,
        s_b_half: s_b / 2.0,
        slater_rank: spec.rank,
        s_projected: s,
        p_single: p,
        s_projected_weighted: if p > 0.0 { s * p } else { 0.0 },
        s_occupation: occupation_entropy(v, basis)?,
    })
}

/// Correlation measures at every propagation sample.
pub fn correlation_trace(basis: &TwoParticleBasis, result: &PropagationResult) -> Result<Vec<CorrelationRow>> {
    result.states.par_iter().map(|v| correlations_of(v, basis)).collect()
}
