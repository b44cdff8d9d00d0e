//! Two-particle Hamiltonian and derivative-coupling matrices in the symmetrized
//! basis, plus spline tables over the trap separation.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{GateError, Result};
use crate::sp_basis::{build_orthonormal_basis, hermite_functions, QuadratureGrid, Side, SingleParticleBasis, MAX_LEVEL};
use crate::tp_basis::TwoParticleBasis;

pub const DEFAULT_FD_STEP: f64 = 1e-5;
pub const DEFAULT_KNOTS: usize = 801;

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianAtSeparation {
    pub separation: f64,
    pub h: DMatrix<f64>,
    pub a: DMatrix<f64>,
}

/// Single-particle and interaction parts of `H`, kept apart so one table serves any `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianParts {
    pub separation: f64,
    pub single: DMatrix<f64>,
    pub interaction: DMatrix<f64>,
}

impl HamiltonianParts {
    pub fn hamiltonian(&self, g: f64) -> DMatrix<f64> {
        &self.single + &self.interaction * g
    }
}

fn check_compatible(a: f64, basis: &TwoParticleBasis, sp: &SingleParticleBasis, grid: &QuadratureGrid) -> Result<()> {
    if (sp.separation() - a).abs() > 1e-12 {
        return Err(GateError::BasisMismatch(format!("single-particle basis built at a = {}, requested a = {a}", sp.separation())));
    }
    if basis.n_sp() != sp.n_sp() {
        return Err(GateError::BasisMismatch(format!("two-particle basis over {} modes, single-particle basis has {}", basis.n_sp(), sp.n_sp())));
    }
    sp.check_grid(grid)
}

/// `⟨ī|−½∂² + V(x, a)|j̄⟩` over the `N_sp` modes.
///
/// Each bare displaced state is an eigenfunction of its own harmonic well, so
/// `h ψ_k = (k + ½) ψ_k + ΔV ψ_k`, where `ΔV` is the difference between the
/// piecewise potential and that well (nonzero only on the far half line).
pub fn single_particle_matrix(sp: &SingleParticleBasis, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    sp.check_grid(grid)?;
    let n = sp.n_sp();
    let nl = sp.n_levels();
    let a = sp.separation();
    let coeffs = sp.coefficients();
    let mut h_phi = vec![vec![0.0; grid.points()]; n];
    let mut l = [0.0; MAX_LEVEL + 1];
    let mut r = [0.0; MAX_LEVEL + 1];
    for (k, &x) in grid.nodes().iter().enumerate() {
        hermite_functions(x + a, &mut l[..nl]);
        hermite_functions(x - a, &mut r[..nl]);
        let dv_l = if x >= 0.0 { -2.0 * a * x } else { 0.0 };
        let dv_r = if x < 0.0 { 2.0 * a * x } else { 0.0 };
        for (m, c) in coeffs.iter().enumerate() {
            let mut acc = 0.0;
            for lev in 0..nl {
                let e = lev as f64 + 0.5;
                acc += c[lev] * (e + dv_l) * l[lev] + c[nl + lev] * (e + dv_r) * r[lev];
            }
            h_phi[m][k] = acc;
        }
    }
    let vals = sp.mode_values();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = grid.inner(&vals[i], &h_phi[j]);
        }
    }
    Ok(parity_project(symmetrize(h)))
}

/// Contact tensor `W[(m,n),(p,q)] = ∫ φ_m φ_n φ_p φ_q dx` on the `N_sp²` product space.
pub fn interaction_tensor(sp: &SingleParticleBasis, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    sp.check_grid(grid)?;
    let n = sp.n_sp();
    let vals = sp.mode_values();
    let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
    for m in 0..n {
        for q in m..n {
            let prod: Vec<f64> = vals[m].iter().zip(&vals[q]).map(|(x, y)| x * y).collect();
            pairs.push(((m, q), prod));
        }
    }
    let mut w = DMatrix::zeros(n * n, n * n);
    for (s, ((m, q), f)) in pairs.iter().enumerate() {
        for ((p, r), g) in pairs.iter().skip(s) {
            let v = grid.inner(f, g);
            for &(i, j) in &[(*m, *q), (*q, *m)] {
                for &(k, l) in &[(*p, *r), (*r, *p)] {
                    w[(i * n + j, k * n + l)] = v;
                    w[(k * n + l, i * n + j)] = v;
                }
            }
        }
    }
    Ok(w)
}

fn embedding_matrix(basis: &TwoParticleBasis) -> DMatrix<f64> {
    let nn = basis.n_sp() * basis.n_sp();
    DMatrix::from_column_slice(nn, basis.dim(), &basis.product_embedding())
}

/// `Bᵀ (M ⊗ I + I ⊗ M) B` for a one-body operator `M` on the modes.
fn lift_one_body(basis: &TwoParticleBasis, b: &DMatrix<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
    let n = basis.n_sp();
    let id = DMatrix::<f64>::identity(n, n);
    let full = m.kronecker(&id) + id.kronecker(m);
    b.transpose() * full * b
}

/// `(M + P M P)/2` with `P|i⟩_L = (-1)^i |i⟩_R`; removes quadrature and
/// finite-difference noise that breaks the reflection symmetry.
fn parity_project(m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    let nl = n / 2;
    let image = |k: usize| -> (usize, f64) {
        let level = k % nl;
        let sign = if level % 2 == 0 { 1.0 } else { -1.0 };
        (if k < nl { k + nl } else { k - nl }, sign)
    };
    let mut out = m.clone();
    for i in 0..n {
        let (pi, si) = image(i);
        for j in 0..n {
            let (pj, sj) = image(j);
            out[(i, j)] = 0.5 * (m[(i, j)] + si * sj * m[(pi, pj)]);
        }
    }
    out
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn antisymmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m - m.transpose()) * 0.5
}

pub fn assemble_parts(a: f64, basis: &TwoParticleBasis, sp: &SingleParticleBasis, grid: &QuadratureGrid) -> Result<HamiltonianParts> {
    check_compatible(a, basis, sp, grid)?;
    let b = embedding_matrix(basis);
    let single = symmetrize(lift_one_body(basis, &b, &single_particle_matrix(sp, grid)?));
    let interaction = symmetrize(b.transpose() * interaction_tensor(sp, grid)? * &b);
    Ok(HamiltonianParts { separation: a, single, interaction })
}

/// Two-particle Hamiltonian at half-separation `a` and contact coupling `g`.
pub fn assemble_h(a: f64, basis: &TwoParticleBasis, sp: &SingleParticleBasis, g: f64, grid: &QuadratureGrid) -> Result<DMatrix<f64>> {
    Ok(assemble_parts(a, basis, sp, grid)?.hamiltonian(g))
}

/// `⟨φ_m(a)|∂_a φ_n(a)⟩` by central differences, antisymmetrized.
pub fn single_particle_coupling(a: f64, n_sp: usize, grid: &QuadratureGrid, step: f64) -> Result<DMatrix<f64>> {
    if !(step > 0.0) {
        return Err(GateError::invalid("fd_step", "must be > 0"));
    }
    let centre = build_orthonormal_basis(n_sp, a, grid)?;
    let plus = build_orthonormal_basis(n_sp, a + step, grid)?;
    let minus = build_orthonormal_basis(n_sp, a - step, grid)?;
    Ok(coupling_from_bases(&centre, &plus, &minus, grid, step))
}

fn coupling_from_bases(
    centre: &SingleParticleBasis,
    plus: &SingleParticleBasis,
    minus: &SingleParticleBasis,
    grid: &QuadratureGrid,
    step: f64,
) -> DMatrix<f64> {
    let n = centre.n_sp();
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        let d: Vec<f64> = plus.mode_values()[j]
            .iter()
            .zip(&minus.mode_values()[j])
            .map(|(p, q)| (p - q) / (2.0 * step))
            .collect();
        for i in 0..n {
            m[(i, j)] = grid.inner(&centre.mode_values()[i], &d);
        }
    }
    parity_project(antisymmetrize(m))
}

/// Two-particle derivative coupling `A_kl = ⟨k|∂_a l⟩`.
pub fn assemble_coupling(a: f64, basis: &TwoParticleBasis, grid: &QuadratureGrid, step: f64) -> Result<DMatrix<f64>> {
    let m = single_particle_coupling(a, basis.n_sp(), grid, step)?;
    Ok(antisymmetrize(lift_one_body(basis, &embedding_matrix(basis), &m)))
}

/// `H` and `A` together at one separation.
pub fn assemble_at(a: f64, basis: &TwoParticleBasis, g: f64, grid: &QuadratureGrid, step: f64) -> Result<HamiltonianAtSeparation> {
    let sp = build_orthonormal_basis(basis.n_sp(), a, grid)?;
    Ok(HamiltonianAtSeparation { separation: a, h: assemble_h(a, basis, &sp, g, grid)?, a: assemble_coupling(a, basis, grid, step)? })
}

/// Not-a-knot cubic splines through many series sampled on one uniform knot set.
///
/// Data are stored knot-major: `values[k * width + e]` is entry `e` at knot `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSplines {
    lo: f64,
    spacing: f64,
    knots: usize,
    width: usize,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl UniformSplines {
    pub fn new(lo: f64, hi: f64, width: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || values.len() % width != 0 {
            return Err(GateError::invalid("spline", "data length is not a multiple of the width"));
        }
        let knots = values.len() / width;
        if knots == 1 {
            return Ok(UniformSplines { lo, spacing: 0.0, knots, width, second: vec![0.0; width], values });
        }
        if knots < 4 || !(hi > lo) {
            return Err(GateError::invalid("spline", format!("need >= 4 knots on a nonempty interval, got {knots}")));
        }
        let h = (hi - lo) / (knots - 1) as f64;
        let n = knots - 1;
        // Unknowns M_1..M_{n-1}; not-a-knot gives M_0 = 2M_1 - M_2 and
        // M_n = 2M_{n-1} - M_{n-2}, which turns the first and last rows into 6M = rhs.
        let m = n - 1;
        let mut diag = vec![4.0; m];
        let mut lower = vec![1.0; m];
        let mut upper = vec![1.0; m];
        diag[0] = 6.0;
        upper[0] = 0.0;
        diag[m - 1] = 6.0;
        lower[m - 1] = 0.0;
        // Thomas factorization, shared by all series
        let mut c_prime = vec![0.0; m];
        let mut denom = vec![0.0; m];
        denom[0] = diag[0];
        c_prime[0] = upper[0] / denom[0];
        for i in 1..m {
            denom[i] = diag[i] - lower[i] * c_prime[i - 1];
            c_prime[i] = upper[i] / denom[i];
        }
        let scale = 6.0 / (h * h);
        let mut second = vec![0.0; values.len()];
        for i in 0..m {
            let k = i + 1;
            for e in 0..width {
                let rhs = scale * (values[(k - 1) * width + e] - 2.0 * values[k * width + e] + values[(k + 1) * width + e]);
                let prev = if i > 0 { second[k * width - width + e] } else { 0.0 };
                second[k * width + e] = (rhs - lower[i] * prev) / denom[i];
            }
        }
        for i in (0..m.saturating_sub(1)).rev() {
            let k = i + 1;
            for e in 0..width {
                let next = second[(k + 1) * width + e];
                second[k * width + e] -= c_prime[i] * next;
            }
        }
        for e in 0..width {
            second[e] = 2.0 * second[width + e] - second[2 * width + e];
            second[n * width + e] = 2.0 * second[(n - 1) * width + e] - second[(n - 2) * width + e];
        }
        Ok(UniformSplines { lo, spacing: h, knots, width, values, second })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn range(&self) -> (f64, f64) {
        (self.lo, self.lo + self.spacing * (self.knots - 1) as f64)
    }

    /// Interpolated entries at `x` written into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        let (lo, hi) = self.range();
        let slack = 1e-9 * (1.0 + hi.abs());
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(GateError::TableCoverage { a: x, lo, hi });
        }
        let w = self.width;
        if self.knots == 1 {
            out.copy_from_slice(&self.values);
            return Ok(());
        }
        let h = self.spacing;
        let i = (((x - lo) / h).floor().max(0.0) as usize).min(self.knots - 2);
        let xl = lo + i as f64 * h;
        let t = (x - xl) / h;
        let u = 1.0 - t;
        let h2 = h * h / 6.0;
        let (c0, c1) = (u, t);
        let (d0, d1) = (h2 * (u * u * u - u), h2 * (t * t * t - t));
        let (y0, y1) = (&self.values[i * w..(i + 1) * w], &self.values[(i + 1) * w..(i + 2) * w]);
        let (m0, m1) = (&self.second[i * w..(i + 1) * w], &self.second[(i + 1) * w..(i + 2) * w]);
        for e in 0..w {
            out[e] = c0 * y0[e] + c1 * y1[e] + d0 * m0[e] + d1 * m1[e];
        }
        Ok(())
    }

    /// `Σ_s weight_s · spline_s`, valid because the spline is linear in its data.
    pub fn combine(parts: &[(f64, &UniformSplines)]) -> Result<UniformSplines> {
        let first = parts.first().ok_or_else(|| GateError::invalid("spline", "nothing to combine"))?.1;
        let mut out = UniformSplines { values: vec![0.0; first.values.len()], second: vec![0.0; first.second.len()], ..first.clone() };
        for (c, s) in parts {
            if s.values.len() != first.values.len() || s.knots != first.knots || s.lo != first.lo || s.spacing != first.spacing {
                return Err(GateError::invalid("spline", "tables have different knots"));
            }
            for (o, v) in out.values.iter_mut().zip(&s.values) {
                *o += c * v;
            }
            for (o, v) in out.second.iter_mut().zip(&s.second) {
                *o += c * v;
            }
        }
        Ok(out)
    }
}

/// Spline tables of `H_single`, `W` and `A` over `[a_lo, a_hi]`.
#[derive(Debug, Clone)]
pub struct HamiltonianTable {
    dim: usize,
    n_sp: usize,
    single: UniformSplines,
    interaction: UniformSplines,
    coupling: UniformSplines,
}

/// Matrices at one separation, in nalgebra's column-major layout.
#[derive(Debug, Clone)]
pub struct KnotMatrices {
    pub single: DMatrix<f64>,
    pub interaction: DMatrix<f64>,
    pub coupling: DMatrix<f64>,
}

pub fn knot_matrices(a: f64, basis: &TwoParticleBasis, grid: &QuadratureGrid, step: f64) -> Result<KnotMatrices> {
    let n_sp = basis.n_sp();
    let centre = build_orthonormal_basis(n_sp, a, grid)?;
    let plus = build_orthonormal_basis(n_sp, a + step, grid)?;
    let minus = build_orthonormal_basis(n_sp, a - step, grid)?;
    let parts = assemble_parts(a, basis, &centre, grid)?;
    let b = embedding_matrix(basis);
    let coupling = antisymmetrize(lift_one_body(basis, &b, &coupling_from_bases(&centre, &plus, &minus, grid, step)));
    Ok(KnotMatrices { single: parts.single, interaction: parts.interaction, coupling })
}

impl HamiltonianTable {
    /// Tabulates on `knots` uniform separations; a single knot when `a_lo == a_hi`.
    pub fn build(basis: &TwoParticleBasis, a_lo: f64, a_hi: f64, knots: usize, grid: &QuadratureGrid, step: f64) -> Result<Self> {
        if !(a_hi >= a_lo) {
            return Err(GateError::Range { field: "a_min/a_max".into(), reason: format!("a_min = {a_lo} exceeds a_max = {a_hi}") });
        }
        let knots = if a_hi == a_lo { 1 } else { knots };
        if knots != 1 && knots < 4 {
            return Err(GateError::invalid("knots", "need at least 4"));
        }
        grid.covers(a_hi)?;
        let xs: Vec<f64> =
            (0..knots).map(|k| if knots == 1 { a_lo } else { a_lo + (a_hi - a_lo) * k as f64 / (knots - 1) as f64 }).collect();
        let mats: Vec<KnotMatrices> = xs.par_iter().map(|&a| knot_matrices(a, basis, grid, step)).collect::<Result<_>>()?;
        let dim = basis.dim();
        let gather = |f: &dyn Fn(&KnotMatrices) -> &DMatrix<f64>| -> Vec<f64> {
            mats.iter().flat_map(|m| f(m).as_slice().to_vec()).collect()
        };
        let w = dim * dim;
        Ok(HamiltonianTable {
            dim,
            n_sp: basis.n_sp(),
            single: UniformSplines::new(a_lo, a_hi, w, gather(&|m| &m.single))?,
            interaction: UniformSplines::new(a_lo, a_hi, w, gather(&|m| &m.interaction))?,
            coupling: UniformSplines::new(a_lo, a_hi, w, gather(&|m| &m.coupling))?,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_sp(&self) -> usize {
        self.n_sp
    }

    pub fn range(&self) -> (f64, f64) {
        self.single.range()
    }

    pub fn covers(&self, lo: f64, hi: f64) -> Result<()> {
        let (tlo, thi) = self.range();
        let slack = 1e-9 * (1.0 + thi.abs());
        for a in [lo, hi] {
            if a < tlo - slack || a > thi + slack {
                return Err(GateError::TableCoverage { a, lo: tlo, hi: thi });
            }
        }
        Ok(())
    }

    /// Interpolated `H(a)` for coupling `g` and `A(a)`.
    pub fn at(&self, a: f64, g: f64) -> Result<HamiltonianAtSeparation> {
        let mut s = vec![0.0; self.single.width()];
        let mut w = vec![0.0; self.single.width()];
        let mut c = vec![0.0; self.single.width()];
        self.single.eval_into(a, &mut s)?;
        self.interaction.eval_into(a, &mut w)?;
        self.coupling.eval_into(a, &mut c)?;
        let h: Vec<f64> = s.iter().zip(&w).map(|(x, y)| x + g * y).collect();
        Ok(HamiltonianAtSeparation {
            separation: a,
            h: DMatrix::from_column_slice(self.dim, self.dim, &h),
            a: DMatrix::from_column_slice(self.dim, self.dim, &c),
        })
    }

    /// Table specialised to one coupling `g`, as used inside the integrator.
    pub fn for_coupling(&self, g: f64) -> Result<CoupledTable> {
        Ok(CoupledTable {
            dim: self.dim,
            g,
            h: UniformSplines::combine(&[(1.0, &self.single), (g, &self.interaction)])?,
            a: self.coupling.clone(),
        })
    }
}

/// `H(a) = H_single(a) + g·W(a)` and `A(a)` for a fixed `g`.
#[derive(Debug, Clone)]
pub struct CoupledTable {
    dim: usize,
    g: f64,
    h: UniformSplines,
    a: UniformSplines,
}

impl CoupledTable {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coupling_strength(&self) -> f64 {
        self.g
    }

    pub fn covers(&self, lo: f64, hi: f64) -> Result<()> {
        let (tlo, thi) = self.range();
        let slack = 1e-9 * (1.0 + thi.abs());
        for a in [lo, hi] {
            if a < tlo - slack || a > thi + slack {
                return Err(GateError::TableCoverage { a, lo: tlo, hi: thi });
            }
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        self.h.range()
    }

    /// Column-major `H(a)` and `A(a)` into caller buffers of length `dim²`.
    pub fn eval_into(&self, a: f64, h: &mut [f64], coupling: &mut [f64]) -> Result<()> {
        self.h.eval_into(a, h)?;
        self.a.eval_into(a, coupling)
    }
}

/// Mode index of `|level⟩_side` for a basis of `n_sp` modes.
pub fn mode(n_sp: usize, level: usize, side: Side) -> usize {
    match side {
        Side::L => level,
        Side::R => n_sp / 2 + level,
    }
}
