//! Displaced harmonic-oscillator states and the parity-preserving Gram–Schmidt
//! single-particle basis `|ī⟩_{L,R}`.
//!
//! Orthonormalization runs in the coefficient space of the bare displaced states
//! (`|i⟩_L`, `|i⟩_R`), with inner products taken by quadrature on the sampled
//! functions. Every basis function is therefore a fixed linear combination of
//! Hermite–Gaussians and can be evaluated anywhere, not only on the grid.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{GateError, Result};

/// Highest oscillator level with a supported Hermite–Gaussian.
pub const MAX_LEVEL: usize = 5;
/// Below this half-separation the negative-parity normalizers blow up.
pub const DEGENERACY_FLOOR: f64 = 0.05;
/// Margin beyond the outermost trap centre required of any quadrature grid.
pub const GRID_MARGIN: f64 = 8.0;
pub const DEFAULT_GRID_POINTS: usize = 4097;
const MAX_SPACING: f64 = 0.02;
const GRAM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    L,
    R,
}

impl Side {
    pub fn mirror(self) -> Side {
        match self {
            Side::L => Side::R,
            Side::R => Side::L,
        }
    }

    /// Trap centre for half-separation `a`.
    pub fn centre(self, a: f64) -> f64 {
        match self {
            Side::L => -a,
            Side::R => a,
        }
    }
}

/// Uniform grid on `[-L, L]` with `x = 0` as a node and composite Simpson
/// weights on each half line, so integrands with a kink at the origin are still
/// integrated to fourth order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    half_width: f64,
    spacing: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureGrid {
    pub fn new(half_width: f64, points: usize) -> Result<Self> {
        if points < 9 || points % 2 == 0 {
            return Err(GateError::invalid("grid.points", format!("must be odd and >= 9, got {points}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(GateError::invalid("grid.half_width", "must be > 0"));
        }
        let spacing = 2.0 * half_width / (points - 1) as f64;
        if spacing > MAX_SPACING {
            return Err(GateError::Resolution(format!(
                "grid spacing {spacing:.4} exceeds {MAX_SPACING} (L = {half_width}, M = {points})"
            )));
        }
        let centre = (points - 1) / 2;
        let nodes = (0..points).map(|k| (k as f64 - centre as f64) * spacing).collect();
        let mut weights = vec![0.0; points];
        let half = half_simpson_weights(centre, spacing);
        for (j, w) in half.iter().enumerate() {
            // half[0] sits at the origin, half[centre] at the edge.
            weights[centre + j] += w;
            weights[centre - j] += w;
        }
        Ok(QuadratureGrid { half_width, spacing, nodes, weights })
    }

    /// Default grid for trajectories that reach out to `a_max`.
    pub fn for_separation(a_max: f64) -> Result<Self> {
        Self::new(a_max + GRID_MARGIN, DEFAULT_GRID_POINTS)
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points(&self) -> usize {
        self.nodes.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    pub fn covers(&self, a: f64) -> Result<()> {
        // slack admits the finite-difference neighbours of a_max
        if self.half_width + 1e-4 < a + GRID_MARGIN {
            return Err(GateError::Resolution(format!(
                "grid half-width {} < a + {GRID_MARGIN} = {}",
                self.half_width,
                a + GRID_MARGIN
            )));
        }
        Ok(())
    }
}

/// Weights for `n` intervals of width `h` starting at the origin. Simpson's rule,
/// with a 3/8 panel at the far end when `n` is odd.
fn half_simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n + 1];
    let simpson_intervals = if n % 2 == 0 { n } else { n - 3 };
    for k in (0..simpson_intervals).step_by(2) {
        w[k] += h / 3.0;
        w[k + 1] += 4.0 * h / 3.0;
        w[k + 2] += h / 3.0;
    }
    if simpson_intervals < n {
        let s = simpson_intervals;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

/// Normalized Hermite functions ψ_0..ψ_{n-1} at `y`, by the stable three-term recurrence.
pub fn hermite_functions(y: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = PI.powf(-0.25) * (-0.5 * y * y).exp();
    if out.len() > 1 {
        out[1] = 2f64.sqrt() * y * out[0];
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = (2.0 / (nf + 1.0)).sqrt() * y * out[n] - (nf / (nf + 1.0)).sqrt() * out[n - 1];
    }
}

/// Eigenfunction of level `level` of the harmonic trap centred at `∓a`.
pub fn displaced_ho_state(level: usize, side: Side, a: f64, grid: &QuadratureGrid) -> Result<Vec<f64>> {
    if level > MAX_LEVEL {
        return Err(GateError::UnsupportedLevel { level, max: MAX_LEVEL });
    }
    let c = side.centre(a);
    let mut buf = [0.0; MAX_LEVEL + 1];
    Ok(grid
        .nodes()
        .iter()
        .map(|&x| {
            hermite_functions(x - c, &mut buf[..=level]);
            buf[level]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiCoefficients {
    pub zero_plus: f64,
    pub zero_minus: f64,
    pub one_plus: f64,
    pub one_minus: f64,
}

/// Closed-form normalizers of the two lowest parity functions.
///
/// Written in terms of `e^{-a²}` so that large separations do not overflow.
pub fn xi_coefficients(a: f64) -> Result<XiCoefficients> {
    if !(a > DEGENERACY_FLOOR) {
        return Err(GateError::DegenerateSeparation { a, floor: DEGENERACY_FLOOR });
    }
    let a2 = a * a;
    let e = (-a2).exp();
    // 1 - e^{-a²} and 1 - e^{-2a²} - 2a²e^{-a²} = 2e^{-a²}(sinh a² - a²) without cancellation
    let one_minus_e = -(-a2).exp_m1();
    let sinh_minus_x = if a2 < 0.5 {
        let x2 = a2 * a2;
        a2 * x2 / 6.0 * (1.0 + x2 / 20.0 * (1.0 + x2 / 42.0 * (1.0 + x2 / 72.0 * (1.0 + x2 / 110.0))))
    } else {
        a2.sinh() - a2
    };
    let odd_gap = 2.0 * e * sinh_minus_x;
    let even_gap = 1.0 - e * e + 2.0 * a2 * e;
    Ok(XiCoefficients {
        zero_plus: 1.0 / (1.0 + e).sqrt(),
        zero_minus: 1.0 / one_minus_e.sqrt(),
        one_plus: 1.0 / ((1.0 + e) * even_gap).sqrt(),
        one_minus: 1.0 / (one_minus_e * odd_gap).sqrt(),
    })
}

/// Analytic φ₀^±, φ₁^± at position `x`, ordered `[φ₀⁺, φ₀⁻, φ₁⁺, φ₁⁻]`.
///
/// `φ₁^± = ξ₁^± (⟨x|1⟩^± ± √2 x e^{-a²} ⟨x|0⟩^∓)`; the √2 prefactor is what
/// Gram–Schmidt actually produces from `⟨0^±|1^±⟩ = ±√2 a e^{-a²}`.
pub fn analytic_parity_functions(a: f64, x: f64) -> Result<[f64; 4]> {
    let xi = xi_coefficients(a)?;
    let mut l = [0.0; 2];
    let mut r = [0.0; 2];
    hermite_functions(x + a, &mut l);
    hermite_functions(x - a, &mut r);
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let zero_p = s2 * (l[0] + r[0]);
    let zero_m = s2 * (l[0] - r[0]);
    // |1⟩^± = (|1⟩_L ∓ |1⟩_R)/√2
    let one_p = s2 * (l[1] - r[1]);
    let one_m = s2 * (l[1] + r[1]);
    let e = (-a * a).exp();
    let k = 2f64.sqrt() * x * e;
    Ok([
        xi.zero_plus * zero_p,
        xi.zero_minus * zero_m,
        xi.one_plus * (one_p + k * zero_m),
        xi.one_minus * (one_m - k * zero_p),
    ])
}

/// Orthonormal single-particle basis at one trap separation.
///
/// Modes are indexed `level` for the left trap and `n_levels + level` for the right.
#[derive(Debug, Clone)]
pub struct SingleParticleBasis {
    n_sp: usize,
    separation: f64,
    grid_points: usize,
    grid_half_width: f64,
    /// Mode coefficients over the bare states `[|0⟩_L..|n⟩_L, |0⟩_R..|n⟩_R]`.
    coeffs: Vec<Vec<f64>>,
    plus_coeffs: Vec<Vec<f64>>,
    minus_coeffs: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    xi: Option<XiCoefficients>,
}

impl SingleParticleBasis {
    pub fn n_sp(&self) -> usize {
        self.n_sp
    }

    pub fn n_levels(&self) -> usize {
        self.n_sp / 2
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn mode_index(&self, level: usize, side: Side) -> usize {
        match side {
            Side::L => level,
            Side::R => self.n_levels() + level,
        }
    }

    /// `(level, side)` of a mode index.
    pub fn mode(&self, index: usize) -> (usize, Side) {
        let nl = self.n_levels();
        if index < nl {
            (index, Side::L)
        } else {
            (index - nl, Side::R)
        }
    }

    /// Sampled `⟨x|ī⟩_side` on the construction grid.
    pub fn values(&self, level: usize, side: Side) -> &[f64] {
        &self.values[self.mode_index(level, side)]
    }

    /// All sampled modes, in mode-index order.
    pub fn mode_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Mode coefficients over the bare displaced states, one row per mode index.
    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn xi(&self) -> Option<XiCoefficients> {
        self.xi
    }

    pub fn check_grid(&self, grid: &QuadratureGrid) -> Result<()> {
        if grid.points() != self.grid_points || (grid.half_width() - self.grid_half_width).abs() > 1e-12 {
            return Err(GateError::BasisMismatch(format!(
                "basis sampled on M = {}, L = {}; grid has M = {}, L = {}",
                self.grid_points,
                self.grid_half_width,
                grid.points(),
                grid.half_width()
            )));
        }
        Ok(())
    }

    fn eval_coeffs(&self, coeffs: &[f64], x: f64) -> f64 {
        let nl = self.n_levels();
        let mut l = [0.0; MAX_LEVEL + 1];
        let mut r = [0.0; MAX_LEVEL + 1];
        hermite_functions(x + self.separation, &mut l[..nl]);
        hermite_functions(x - self.separation, &mut r[..nl]);
        (0..nl).map(|k| coeffs[k] * l[k] + coeffs[nl + k] * r[k]).sum()
    }

    /// `⟨x|ī⟩_side` anywhere on the real line.
    pub fn evaluate(&self, level: usize, side: Side, x: f64) -> f64 {
        self.eval_coeffs(&self.coeffs[self.mode_index(level, side)], x)
    }

    /// Parity function φ_level^± at `x` (`positive` selects the even set).
    pub fn evaluate_parity(&self, level: usize, positive: bool, x: f64) -> f64 {
        let c = if positive { &self.plus_coeffs[level] } else { &self.minus_coeffs[level] };
        self.eval_coeffs(c, x)
    }

    /// Sampled parity functions φ_i^± on the construction grid.
    pub fn parity_values(&self, level: usize, positive: bool, grid: &QuadratureGrid) -> Vec<f64> {
        grid.nodes().iter().map(|&x| self.evaluate_parity(level, positive, x)).collect()
    }

    pub fn gram_matrix(&self, grid: &QuadratureGrid) -> Vec<Vec<f64>> {
        let n = self.values.len();
        (0..n).map(|i| (0..n).map(|j| grid.inner(&self.values[i], &self.values[j])).collect()).collect()
    }
}

/// Modified Gram–Schmidt with one reorthogonalization pass, run on the sampled
/// functions while the same operations are mirrored on their bare-state coefficients.
fn gram_schmidt_parity(bare: &[Vec<f64>], grid: &QuadratureGrid, n_levels: usize, sign: f64) -> Vec<Vec<f64>> {
    let nb = 2 * n_levels;
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut coeffs: Vec<Vec<f64>> = Vec::with_capacity(n_levels);
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(n_levels);
    for level in 0..n_levels {
        let parity_sign = if level % 2 == 0 { 1.0 } else { -1.0 };
        let mut c = vec![0.0; nb];
        c[level] = s2;
        c[n_levels + level] = sign * parity_sign * s2;
        let seed: Vec<f64> = bare[level].iter().zip(&bare[n_levels + level]).map(|(l, r)| s2 * l + c[n_levels + level] * r).collect();
        let mut v = seed.clone();
        for _ in 0..2 {
            for (prev, prev_c) in samples.iter().zip(&coeffs) {
                let p = grid.inner(prev, &v);
                for (vi, pi) in v.iter_mut().zip(prev) {
                    *vi -= p * pi;
                }
                for (ci, pi) in c.iter_mut().zip(prev_c) {
                    *ci -= p * pi;
                }
            }
        }
        let mut norm = grid.inner(&v, &v).sqrt();
        if grid.inner(&v, &seed) < 0.0 {
            norm = -norm;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        c.iter_mut().for_each(|x| *x /= norm);
        samples.push(v);
        coeffs.push(c);
    }
    coeffs
}

/// Gram–Schmidt within each parity set, then `|ī⟩_L = (φ⁺+φ⁻)/√2`,
/// `|ī⟩_R = (-1)^i (φ⁺-φ⁻)/√2`.
pub fn build_orthonormal_basis(n_sp: usize, a: f64, grid: &QuadratureGrid) -> Result<SingleParticleBasis> {
    if n_sp % 2 != 0 || !(4..=2 * (MAX_LEVEL + 1)).contains(&n_sp) {
        return Err(GateError::invalid("n_sp", format!("must be even in [4, {}], got {n_sp}", 2 * (MAX_LEVEL + 1))));
    }
    if !(a > DEGENERACY_FLOOR) {
        return Err(GateError::DegenerateSeparation { a, floor: DEGENERACY_FLOOR });
    }
    grid.covers(a)?;
    let nl = n_sp / 2;
    let nb = 2 * nl;

    let mut bare = vec![vec![0.0; grid.points()]; nb];
    let mut l = [0.0; MAX_LEVEL + 1];
    let mut r = [0.0; MAX_LEVEL + 1];
    for (k, &x) in grid.nodes().iter().enumerate() {
        hermite_functions(x + a, &mut l[..nl]);
        hermite_functions(x - a, &mut r[..nl]);
        for n in 0..nl {
            bare[n][k] = l[n];
            bare[nl + n][k] = r[n];
        }
    }
    let plus = gram_schmidt_parity(&bare, grid, nl, 1.0);
    let minus = gram_schmidt_parity(&bare, grid, nl, -1.0);
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut coeffs = vec![vec![0.0; nb]; nb];
    for i in 0..nl {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        for k in 0..nb {
            coeffs[i][k] = s2 * (plus[i][k] + minus[i][k]);
            coeffs[nl + i][k] = sign * s2 * (plus[i][k] - minus[i][k]);
        }
    }
    let values: Vec<Vec<f64>> = coeffs
        .iter()
        .map(|c| {
            let mut v = vec![0.0; grid.points()];
            for (ck, b) in c.iter().zip(&bare) {
                if *ck == 0.0 {
                    continue;
                }
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi += ck * bi;
                }
            }
            v
        })
        .collect();

    let basis = SingleParticleBasis {
        n_sp,
        separation: a,
        grid_points: grid.points(),
        grid_half_width: grid.half_width(),
        coeffs,
        plus_coeffs: plus,
        minus_coeffs: minus,
        values,
        xi: xi_coefficients(a).ok(),
    };
    let gram = basis.gram_matrix(grid);
    let mut residual: f64 = 0.0;
    for (i, row) in gram.iter().enumerate() {
        for (j, g) in row.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((g - target).abs());
        }
    }
    if residual > GRAM_TOLERANCE {
        return Err(GateError::Resolution(format!("Gram residual {residual:e} at a = {a}")));
    }
    Ok(basis)
}
