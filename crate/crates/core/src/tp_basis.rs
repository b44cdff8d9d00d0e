//! Symmetrized two-boson states of definite parity and the computational qubit embedding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{GateError, Result};
use crate::sp_basis::{Side, SingleParticleBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Occupancy {
    /// One atom per trap.
    Single,
    /// Both atoms in the same trap.
    Double,
}

/// Single-particle mode `|level⟩_side`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Mode {
    pub level: usize,
    pub side: Side,
}

impl Mode {
    pub fn new(level: usize, side: Side) -> Self {
        Mode { level, side }
    }

    /// Index into a mode list of `n_sp` entries: left levels first, then right.
    pub fn index(self, n_sp: usize) -> usize {
        match self.side {
            Side::L => self.level,
            Side::R => n_sp / 2 + self.level,
        }
    }

    pub fn from_index(index: usize, n_sp: usize) -> Self {
        let nl = n_sp / 2;
        if index < nl {
            Mode::new(index, Side::L)
        } else {
            Mode::new(index - nl, Side::R)
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:?}", self.level, self.side)
    }
}

/// One symmetrized two-particle basis state.
///
/// `terms` expands it over normalized symmetric mode pairs `|m n⟩_S`
/// (`(|m⟩|n⟩ + |n⟩|m⟩)/√2` for `m ≠ n`, `|m⟩|m⟩` otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoParticleState {
    pub label: String,
    /// Representative mode pair; the mirror pair enters with the parity sign.
    pub modes: (Mode, Mode),
    pub parity: i8,
    pub occupancy: Occupancy,
    /// Total vibrational quanta `i + j`.
    pub quanta: usize,
    pub terms: Vec<(usize, usize, f64)>,
}

impl TwoParticleState {
    /// First-quantized wavefunction `ψ(x₁, x₂)`.
    pub fn evaluate(&self, sp: &SingleParticleBasis, x1: f64, x2: f64) -> f64 {
        let phi = |m: usize, x: f64| {
            let (level, side) = sp.mode(m);
            sp.evaluate(level, side, x)
        };
        self.terms
            .iter()
            .map(|&(m, n, c)| {
                if m == n {
                    c * phi(m, x1) * phi(m, x2)
                } else {
                    c * FRAC_1_SQRT_2 * (phi(m, x1) * phi(n, x2) + phi(n, x1) * phi(m, x2))
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoParticleBasis {
    n_sp: usize,
    states: Vec<TwoParticleState>,
}

fn parity_mark(parity: i8) -> char {
    if parity > 0 {
        '+'
    } else {
        '-'
    }
}

fn make_state(n_sp: usize, a: Mode, b: Mode, parity: i8, occupancy: Occupancy) -> TwoParticleState {
    let quanta = a.level + b.level;
    let p = (a.index(n_sp), b.index(n_sp));
    let mirror = (Mode::new(a.level, a.side.mirror()).index(n_sp), Mode::new(b.level, b.side.mirror()).index(n_sp));
    let same_orbit = p == mirror || p == (mirror.1, mirror.0);
    let terms = if same_orbit {
        vec![(p.0, p.1, 1.0)]
    } else {
        let sign = f64::from(parity) * if quanta % 2 == 0 { 1.0 } else { -1.0 };
        vec![(p.0, p.1, FRAC_1_SQRT_2), (mirror.0, mirror.1, sign * FRAC_1_SQRT_2)]
    };
    let tilde = if occupancy == Occupancy::Double { "~" } else { "" };
    TwoParticleState {
        label: format!("{tilde}{}{}{}", a.level, b.level, parity_mark(parity)),
        modes: (a, b),
        parity,
        occupancy,
        quanta,
        terms,
    }
}

/// All symmetrized pairs of `n_sp` modes, combined into parity eigenstates.
///
/// Ordering: positive parity block first; within a block single occupancy then
/// double occupancy; within a class lexicographic in the levels `(i, j)`, `i ≤ j`.
pub fn enumerate_basis(n_sp: usize) -> Result<TwoParticleBasis> {
    if n_sp == 0 || n_sp % 2 != 0 {
        return Err(GateError::invalid("n_sp", format!("must be even and positive, got {n_sp}")));
    }
    let nl = n_sp / 2;
    let mut states = Vec::with_capacity(n_sp * (n_sp + 1) / 2);
    for parity in [1i8, -1] {
        for i in 0..nl {
            for j in i..nl {
                // (iL, iR) is its own mirror and only has a symmetric combination
                if i == j && parity < 0 {
                    continue;
                }
                states.push(make_state(n_sp, Mode::new(i, Side::L), Mode::new(j, Side::R), parity, Occupancy::Single));
            }
        }
        for i in 0..nl {
            for j in i..nl {
                states.push(make_state(n_sp, Mode::new(i, Side::L), Mode::new(j, Side::L), parity, Occupancy::Double));
            }
        }
    }
    Ok(TwoParticleBasis { n_sp, states })
}

impl TwoParticleBasis {
    pub fn n_sp(&self) -> usize {
        self.n_sp
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[TwoParticleState] {
        &self.states
    }

    pub fn state(&self, k: usize) -> &TwoParticleState {
        &self.states[k]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.states.iter().position(|s| s.label == label)
    }

    fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label).ok_or_else(|| GateError::UnknownLabel(label.to_string()))
    }

    pub fn count_parity(&self, parity: i8) -> usize {
        self.states.iter().filter(|s| s.parity == parity).count()
    }

    pub fn count_class(&self, parity: i8, occupancy: Occupancy) -> usize {
        self.states.iter().filter(|s| s.parity == parity && s.occupancy == occupancy).count()
    }

    /// Column-major embedding `B` of the basis into the product space:
    /// `B[(m·n_sp + n) + k·n_sp²]` is the amplitude of `|m⟩|n⟩` in state `k`.
    pub fn product_embedding(&self) -> Vec<f64> {
        let n = self.n_sp;
        let nn = n * n;
        let mut b = vec![0.0; nn * self.dim()];
        for (k, s) in self.states.iter().enumerate() {
            let col = &mut b[k * nn..(k + 1) * nn];
            for &(m, q, c) in &s.terms {
                if m == q {
                    col[m * n + m] += c;
                } else {
                    col[m * n + q] += c * FRAC_1_SQRT_2;
                    col[q * n + m] += c * FRAC_1_SQRT_2;
                }
            }
        }
        b
    }

    /// Per-state JSON metadata (index, label, mode pair, parity, occupancy class).
    pub fn metadata(&self) -> serde_json::Value {
        let rows: Vec<serde_json::Value> = self
            .states
            .iter()
            .enumerate()
            .map(|(k, s)| {
                serde_json::json!({
                    "index": k,
                    "label": s.label,
                    "modes": [s.modes.0.to_string(), s.modes.1.to_string()],
                    "parity": s.parity,
                    "occupancy": s.occupancy,
                })
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// Normalized complex coefficients over a [`TwoParticleBasis`].
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeVector {
    pub coeffs: Vec<Complex64>,
    pub time: f64,
}

impl AmplitudeVector {
    pub fn zeros(dim: usize) -> Self {
        AmplitudeVector { coeffs: vec![Complex64::new(0.0, 0.0); dim], time: 0.0 }
    }

    pub fn basis_state(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coeffs[k] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn inner(&self, other: &AmplitudeVector) -> Complex64 {
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ComputationalLabel {
    #[serde(rename = "00")]
    Q00,
    #[serde(rename = "01")]
    Q01,
    #[serde(rename = "10")]
    Q10,
    #[serde(rename = "11")]
    Q11,
}

impl ComputationalLabel {
    pub const ALL: [ComputationalLabel; 4] =
        [ComputationalLabel::Q00, ComputationalLabel::Q01, ComputationalLabel::Q10, ComputationalLabel::Q11];

    pub fn as_str(self) -> &'static str {
        match self {
            ComputationalLabel::Q00 => "00",
            ComputationalLabel::Q01 => "01",
            ComputationalLabel::Q10 => "10",
            ComputationalLabel::Q11 => "11",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "00" => Ok(ComputationalLabel::Q00),
            "01" => Ok(ComputationalLabel::Q01),
            "10" => Ok(ComputationalLabel::Q10),
            "11" => Ok(ComputationalLabel::Q11),
            other => Err(GateError::UnknownLabel(other.to_string())),
        }
    }
}

impl fmt::Display for ComputationalLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Indices of `|00⟩⁺`, `|01⟩⁺`, `|01⟩⁻`, `|11⟩⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComputationalIndices {
    pub s00: usize,
    pub s01_plus: usize,
    pub s01_minus: usize,
    pub s11: usize,
}

impl ComputationalIndices {
    pub fn of(basis: &TwoParticleBasis) -> Result<Self> {
        if basis.n_sp() < 4 {
            return Err(GateError::invalid("n_sp", "the computational basis needs at least two levels per trap"));
        }
        Ok(ComputationalIndices {
            s00: basis.require("00+")?,
            s01_plus: basis.require("01+")?,
            s01_minus: basis.require("01-")?,
            s11: basis.require("11+")?,
        })
    }
}

/// `|00⟩ → |00⟩⁺`, `|01⟩ → (|01⟩⁺ + |01⟩⁻)/√2`, `|10⟩ → (|01⟩⁺ − |01⟩⁻)/√2`, `|11⟩ → |11⟩⁺`.
pub fn computational_embedding(basis: &TwoParticleBasis, label: ComputationalLabel) -> Result<AmplitudeVector> {
    let idx = ComputationalIndices::of(basis)?;
    let mut v = AmplitudeVector::zeros(basis.dim());
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    match label {
        ComputationalLabel::Q00 => v.coeffs[idx.s00] = Complex64::new(1.0, 0.0),
        ComputationalLabel::Q01 => {
            v.coeffs[idx.s01_plus] = h;
            v.coeffs[idx.s01_minus] = h;
        }
        ComputationalLabel::Q10 => {
            v.coeffs[idx.s01_plus] = h;
            v.coeffs[idx.s01_minus] = -h;
        }
        ComputationalLabel::Q11 => v.coeffs[idx.s11] = Complex64::new(1.0, 0.0),
    }
    Ok(v)
}

/// Amplitude vector of a computational label given by its string form.
pub fn embedding_for(basis: &TwoParticleBasis, label: &str) -> Result<AmplitudeVector> {
    computational_embedding(basis, ComputationalLabel::parse(label)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extraction {
    pub amplitudes: [Complex64; 4],
    /// Weight inside the computational subspace.
    pub p_single: f64,
    /// Weight on double-occupancy states.
    pub p_double: f64,
    /// Remaining single-occupancy weight outside the computational subspace.
    pub p_leak: f64,
}

pub fn computational_extraction(basis: &TwoParticleBasis, v: &AmplitudeVector) -> Result<Extraction> {
    let idx = ComputationalIndices::of(basis)?;
    let c = &v.coeffs;
    let h = FRAC_1_SQRT_2;
    let amplitudes = [
        c[idx.s00],
        (c[idx.s01_plus] + c[idx.s01_minus]) * h,
        (c[idx.s01_plus] - c[idx.s01_minus]) * h,
        c[idx.s11],
    ];
    let comp = [idx.s00, idx.s01_plus, idx.s01_minus, idx.s11];
    let mut p_single = 0.0;
    let mut p_double = 0.0;
    let mut p_leak = 0.0;
    for (k, s) in basis.states().iter().enumerate() {
        let p = c[k].norm_sqr();
        if comp.contains(&k) {
            p_single += p;
        } else if s.occupancy == Occupancy::Double {
            p_double += p;
        } else {
            p_leak += p;
        }
    }
    Ok(Extraction { amplitudes, p_single, p_double, p_leak })
}
