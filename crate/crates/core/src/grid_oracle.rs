//! Split-operator FFT propagation of the full two-particle wavefunction
//! `ψ(x₁, x₂)`, used to cross-check the basis-expansion dynamics.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::correlations::amplitudes_to_mode_matrix;
use crate::error::{GateError, Result};
use crate::physical_model::{potential, DimensionlessModel};
use crate::sp_basis::SingleParticleBasis;
use crate::tp_basis::{computational_embedding, AmplitudeVector, ComputationalLabel, TwoParticleBasis};

pub const DEFAULT_POINTS: usize = 256;
pub const DEFAULT_MARGIN: f64 = 6.0;
pub const DEFAULT_DT: f64 = 2e-3;
pub const MAX_DT: f64 = 5e-3;
pub const NORM_LOSS_LIMIT: f64 = 1e-4;
pub const FRAME_MAGIC: [u8; 4] = *b"MTGF";

/// Periodic grid `x_k = −L + k·2L/N`, `k = 0..N`, on both axes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid2D {
    pub points: usize,
    pub half_width: f64,
}

impl Grid2D {
    pub fn new(points: usize, half_width: f64) -> Result<Self> {
        if points < 8 || points % 2 != 0 {
            return Err(GateError::invalid("oracle.points", format!("must be even and >= 8, got {points}")));
        }
        if !(half_width > 0.0) {
            return Err(GateError::invalid("oracle.half_width", "must be > 0"));
        }
        Ok(Grid2D { points, half_width })
    }

    /// Default geometry for a trajectory starting at `a_max`.
    pub fn for_separation(a_max: f64) -> Result<Self> {
        Self::new(DEFAULT_POINTS, a_max + DEFAULT_MARGIN)
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.points).map(|k| -self.half_width + k as f64 * h).collect()
    }

    pub fn check_fits(&self, a_max: f64) -> Result<()> {
        if self.half_width + 1e-9 < a_max + DEFAULT_MARGIN {
            return Err(GateError::Resolution(format!(
                "oracle half-width {} < a_max + {DEFAULT_MARGIN} = {}",
                self.half_width,
                a_max + DEFAULT_MARGIN
            )));
        }
        Ok(())
    }

    /// Angular wavenumbers in FFT order.
    fn wavenumbers(&self) -> Vec<f64> {
        let n = self.points;
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * self.spacing());
        (0..n).map(|k| if k < n / 2 { k as f64 * dk } else { (k as f64 - n as f64) * dk }).collect()
    }
}

/// `ψ[i·N + j] = ψ(x_i, x_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWavefunction {
    pub grid: Grid2D,
    pub time: f64,
    pub psi: Vec<Complex64>,
}

impl GridWavefunction {
    pub fn norm_sqr(&self) -> f64 {
        let h = self.grid.spacing();
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * h * h
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn inner(&self, other: &GridWavefunction) -> Complex64 {
        let h = self.grid.spacing();
        self.psi.iter().zip(&other.psi).map(|(a, b)| a.conj() * b).sum::<Complex64>() * (h * h)
    }

    /// `max |ψ(x₁,x₂) − ψ(x₂,x₁)|`.
    pub fn exchange_asymmetry(&self) -> f64 {
        let n = self.grid.points;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.psi[i * n + j] - self.psi[j * n + i]).norm());
            }
        }
        worst
    }
}

fn sample_modes(sp: &SingleParticleBasis, xs: &[f64]) -> Vec<Vec<f64>> {
    (0..sp.n_sp())
        .map(|m| {
            let (level, side) = sp.mode(m);
            xs.iter().map(|&x| sp.evaluate(level, side, x)).collect()
        })
        .collect()
}

/// First-quantized `ψ = √2 Σ v_ij φ_i(x₁) φ_j(x₂)` for an arbitrary amplitude vector, not renormalized.
pub fn grid_state_from_amplitudes(
    v: &AmplitudeVector,
    basis: &TwoParticleBasis,
    sp: &SingleParticleBasis,
    grid: Grid2D,
) -> Result<GridWavefunction> {
    let m = amplitudes_to_mode_matrix(v, basis)?;
    let xs = grid.nodes();
    let phi = sample_modes(sp, &xs);
    let n = grid.points;
    let ns = sp.n_sp();
    // t[a][j] = Σ_b v_ab φ_b(x_j)
    let mut t = vec![vec![Complex64::new(0.0, 0.0); n]; ns];
    for a in 0..ns {
        for b in 0..ns {
            let c = m[(a, b)];
            if c == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                t[a][j] += c * phi[b][j];
            }
        }
    }
    let s2 = std::f64::consts::SQRT_2;
    let mut psi = vec![Complex64::new(0.0, 0.0); n * n];
    psi.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for a in 0..ns {
            let p = phi[a][i] * s2;
            if p == 0.0 {
                continue;
            }
            for (r, tv) in row.iter_mut().zip(&t[a]) {
                *r += tv * p;
            }
        }
    });
    Ok(GridWavefunction { grid, time: v.time, psi })
}

/// Grid image of a computational input, normalized on the grid.
pub fn init_grid_state(
    label: ComputationalLabel,
    basis: &TwoParticleBasis,
    sp: &SingleParticleBasis,
    grid: Grid2D,
) -> Result<GridWavefunction> {
    grid.check_fits(sp.separation())?;
    let v = computational_embedding(basis, label)?;
    let mut w = grid_state_from_amplitudes(&v, basis, sp, grid)?;
    let norm = w.norm_sqr().sqrt();
    w.psi.iter_mut().for_each(|z| *z /= norm);
    Ok(w)
}

/// Overlaps with every two-particle basis state; `residual = ‖ψ‖² − Σ|c|²`.
pub fn project_onto_basis(
    w: &GridWavefunction,
    basis: &TwoParticleBasis,
    sp: &SingleParticleBasis,
) -> Result<(AmplitudeVector, f64)> {
    if basis.n_sp() != sp.n_sp() {
        return Err(GateError::BasisMismatch("mode counts differ".into()));
    }
    let n = w.grid.points;
    let h = w.grid.spacing();
    let phi = sample_modes(sp, &w.grid.nodes());
    let ns = sp.n_sp();
    // r[i][b] = Σ_j ψ_ij φ_b(x_j)
    let r: Vec<Vec<Complex64>> = w
        .psi
        .par_chunks(n)
        .map(|row| (0..ns).map(|b| row.iter().zip(&phi[b]).map(|(p, f)| p * f).sum()).collect())
        .collect();
    let mut m = vec![Complex64::new(0.0, 0.0); ns * ns];
    for a in 0..ns {
        for (i, ri) in r.iter().enumerate() {
            let p = phi[a][i];
            for b in 0..ns {
                m[a * ns + b] += ri[b] * p;
            }
        }
    }
    m.iter_mut().for_each(|z| *z *= h * h);
    let emb = basis.product_embedding();
    let nn = ns * ns;
    let coeffs: Vec<Complex64> =
        (0..basis.dim()).map(|k| (0..nn).map(|p| m[p] * emb[k * nn + p]).sum()).collect();
    let v = AmplitudeVector { coeffs, time: w.time };
    let residual = w.norm_sqr() - v.norm_sqr();
    Ok((v, residual))
}

/// Discretization of the contact term `g δ(x₁ − x₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Contact {
    /// `g/h` on the diagonal nodes. Converges linearly in `h` towards the true contact.
    GridDelta,
    /// Normalized Gaussian in `x₁ − x₂` with the given width in grid spacings.
    /// Converges far more slowly: near fermionization the energy shift is of order `gσ`.
    Gaussian { width_spacings: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleSettings {
    pub dt: f64,
    pub contact: Contact,
}

impl Default for OracleSettings {
    fn default() -> Self {
        OracleSettings { dt: DEFAULT_DT, contact: Contact::GridDelta }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub time: f64,
    pub separation: f64,
    pub density: Vec<f64>,
}

struct SplitStepper {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    kinetic: Vec<Complex64>,
    contact_half: Vec<Complex64>,
    contact_full: Vec<Complex64>,
    xs: Vec<f64>,
    scratch: Vec<Complex64>,
}

fn contact_factor(grid: &Grid2D, g: f64, contact: Contact, tau: f64) -> Vec<Complex64> {
    let n = grid.points;
    let h = grid.spacing();
    let xs = grid.nodes();
    let mut out = vec![Complex64::new(1.0, 0.0); n * n];
    match contact {
        Contact::GridDelta => {
            for i in 0..n {
                out[i * n + i] = Complex64::from_polar(1.0, -g / h * tau);
            }
        }
        Contact::Gaussian { width_spacings } => {
            let sigma = width_spacings * h;
            let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
            out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
                for (j, z) in row.iter_mut().enumerate() {
                    let d = xs[i] - xs[j];
                    let v = g * norm * (-0.5 * d * d / (sigma * sigma)).exp();
                    *z = Complex64::from_polar(1.0, -v * tau);
                }
            });
        }
    }
    out
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], n: usize) {
    const B: usize = 32;
    for ib in (0..n).step_by(B) {
        for jb in (0..n).step_by(B) {
            for i in ib..(ib + B).min(n) {
                for j in jb..(jb + B).min(n) {
                    dst[j * n + i] = src[i * n + j];
                }
            }
        }
    }
}

impl SplitStepper {
    fn new(grid: Grid2D, g: f64, settings: &OracleSettings, dt: f64) -> Self {
        let n = grid.points;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let k = grid.wavenumbers();
        let scale = 1.0 / (n * n) as f64;
        let mut kinetic = vec![Complex64::new(0.0, 0.0); n * n];
        for a in 0..n {
            for b in 0..n {
                let e = 0.5 * (k[a] * k[a] + k[b] * k[b]);
                kinetic[a * n + b] = Complex64::from_polar(scale, -e * dt);
            }
        }
        SplitStepper {
            n,
            fwd,
            inv,
            kinetic,
            contact_half: contact_factor(&grid, g, settings.contact, 0.5 * dt),
            contact_full: contact_factor(&grid, g, settings.contact, dt),
            xs: grid.nodes(),
            scratch: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    fn fft_rows(&self, data: &mut [Complex64], forward: bool) {
        let n = self.n;
        let plan = if forward { &self.fwd } else { &self.inv };
        let len = plan.get_inplace_scratch_len();
        let rows_per_task = 16;
        data.par_chunks_mut(n * rows_per_task).for_each_init(
            || vec![Complex64::new(0.0, 0.0); len],
            |scratch, chunk| plan.process_with_scratch(chunk, scratch),
        );
    }

    /// Full kinetic propagator; the k-space array stays transposed, which is
    /// harmless because the kinetic factor is symmetric in `(k₁, k₂)`.
    fn kinetic_step(&mut self, psi: &mut [Complex64]) {
        let n = self.n;
        self.fft_rows(psi, true);
        transpose(psi, &mut self.scratch, n);
        let mut buf = std::mem::take(&mut self.scratch);
        self.fft_rows(&mut buf, true);
        buf.par_iter_mut().zip(self.kinetic.par_iter()).for_each(|(z, k)| *z *= k);
        self.fft_rows(&mut buf, false);
        transpose(&buf, psi, n);
        self.scratch = buf;
        self.fft_rows(psi, false);
    }

    fn potential_step(&self, psi: &mut [Complex64], a: f64, tau: f64, full: bool) {
        let n = self.n;
        let axis: Vec<Complex64> = self.xs.iter().map(|&x| Complex64::from_polar(1.0, -potential(x, a) * tau)).collect();
        let contact = if full { &self.contact_full } else { &self.contact_half };
        psi.par_chunks_mut(n).zip(contact.par_chunks(n)).enumerate().for_each(|(i, (row, crow))| {
            let ai = axis[i];
            for ((z, c), aj) in row.iter_mut().zip(crow).zip(&axis) {
                *z *= ai * aj * c;
            }
        });
    }
}

/// Strang-split evolution of `w` under the trajectory of `model` until `t_end`.
///
/// Snapshots are taken at the step boundaries nearest to `snapshot_times`.
pub fn split_step_evolve(
    w: &GridWavefunction,
    model: &DimensionlessModel,
    t_end: f64,
    settings: &OracleSettings,
    snapshot_times: &[f64],
) -> Result<(GridWavefunction, Vec<Snapshot>)> {
    if !(settings.dt > 0.0 && settings.dt <= MAX_DT) {
        return Err(GateError::invalid("oracle.dt", format!("must be in (0, {MAX_DT}]")));
    }
    let traj = &model.trajectory;
    w.grid.check_fits(traj.a_max)?;
    let t0 = w.time;
    if t_end < t0 {
        return Err(GateError::invalid("t_end", "must not precede the current time"));
    }
    let steps = ((t_end - t0) / settings.dt).ceil().max(1.0) as usize;
    let dt = (t_end - t0) / steps as f64;
    let mut marks: Vec<usize> =
        snapshot_times.iter().filter(|t| **t >= t0 && **t <= t_end).map(|t| ((t - t0) / dt).round() as usize).collect();
    marks.sort_unstable();
    marks.dedup();

    let mut stepper = SplitStepper::new(w.grid, model.g, settings, dt);
    let mut psi = w.psi.clone();
    let norm0 = w.norm_sqr();
    let h2 = w.grid.spacing() * w.grid.spacing();
    let mut snaps = Vec::with_capacity(marks.len());
    let mut next_mark = 0;
    let snap = |psi: &[Complex64], step: usize| -> Result<Snapshot> {
        let t = t0 + step as f64 * dt;
        Ok(Snapshot { time: t, separation: traj.separation(t.min(traj.total_time()))?, density: psi.iter().map(|z| z.norm_sqr()).collect() })
    };
    let a_at = |t: f64| traj.separation(t.min(traj.total_time()));
    if next_mark < marks.len() && marks[next_mark] == 0 {
        snaps.push(snap(&psi, 0)?);
        next_mark += 1;
    }
    stepper.potential_step(&mut psi, a_at(t0)?, 0.5 * dt, false);
    for step in 1..=steps {
        stepper.kinetic_step(&mut psi);
        let t = t0 + step as f64 * dt;
        let a = a_at(t)?;
        let wants_snapshot = next_mark < marks.len() && marks[next_mark] == step;
        if step == steps || wants_snapshot {
            stepper.potential_step(&mut psi, a, 0.5 * dt, false);
            if wants_snapshot {
                snaps.push(snap(&psi, step)?);
                next_mark += 1;
            }
            if step < steps {
                stepper.potential_step(&mut psi, a, 0.5 * dt, false);
            }
        } else {
            stepper.potential_step(&mut psi, a, dt, true);
        }
        if step % 1000 == 0 || step == steps {
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * h2;
            if !((norm - norm0).abs() <= NORM_LOSS_LIMIT * norm0) {
                return Err(GateError::Stability(format!("norm changed from {norm0} to {norm} at t = {t}")));
            }
        }
    }
    Ok((GridWavefunction { grid: w.grid, time: t0 + steps as f64 * dt, psi }, snaps))
}

/// Writes `|ψ|²` as a 16-byte header (`MTGF`, `N` as u32 LE, `L` as f64 LE) and `N²` f64 LE values.
pub fn write_frame<W: Write>(mut out: W, grid: &Grid2D, density: &[f64]) -> Result<()> {
    if density.len() != grid.points * grid.points {
        return Err(GateError::invalid("frame", "density size does not match the grid"));
    }
    out.write_all(&FRAME_MAGIC)?;
    out.write_all(&(grid.points as u32).to_le_bytes())?;
    out.write_all(&grid.half_width.to_le_bytes())?;
    let mut buf = Vec::with_capacity(density.len() * 8);
    for v in density {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_frame<R: Read>(mut input: R) -> Result<(Grid2D, Vec<f64>)> {
    let mut head = [0u8; 16];
    input.read_exact(&mut head)?;
    if head[..4] != FRAME_MAGIC {
        return Err(GateError::Io("not a grid frame (bad magic)".into()));
    }
    let n = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
    let l = f64::from_le_bytes(head[8..16].try_into().expect("8 bytes"));
    let mut body = vec![0u8; n * n * 8];
    input.read_exact(&mut body)?;
    let data = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    Ok((Grid2D { points: n, half_width: l }, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physical_model::TrapTrajectory;
    use crate::sp_basis::{build_orthonormal_basis, QuadratureGrid};
    use crate::tp_basis::enumerate_basis;

    fn setup(a: f64) -> (TwoParticleBasis, SingleParticleBasis, Grid2D) {
        let q = QuadratureGrid::for_separation(a).unwrap();
        (enumerate_basis(8).unwrap(), build_orthonormal_basis(8, a, &q).unwrap(), Grid2D::for_separation(a).unwrap())
    }

    #[test]
    fn contact_energy_of_a_ground_pair() {
        // ⟨φ₀φ₀| g δ(x₁ − x₂) |φ₀φ₀⟩ = g/√(2π) for one trap
        let grid = Grid2D::new(256, 8.0).unwrap();
        let xs = grid.nodes();
        let h = grid.spacing();
        let n = grid.points;
        let phi: Vec<f64> = xs.iter().map(|x| std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp()).collect();
        let (g, tau) = (3.0, 1e-3);
        for contact in [Contact::GridDelta, Contact::Gaussian { width_spacings: 2.0 }] {
            let f = contact_factor(&grid, g, contact, tau);
            let mut e = 0.0;
            for i in 0..n {
                for j in 0..n {
                    e += (phi[i] * phi[j]).powi(2) * (-f[i * n + j].arg() / tau) * h * h;
                }
            }
            let exact = g / (2.0 * std::f64::consts::PI).sqrt();
            let tol = if contact == Contact::GridDelta { 1e-10 } else { 1e-2 };
            assert!((e - exact).abs() < tol, "{contact:?}: {e} vs {exact}");
        }
    }

    #[test]
    fn initial_states_roundtrip() {
        let (basis, sp, grid) = setup(5.0);
        for label in ComputationalLabel::ALL {
            let w = init_grid_state(label, &basis, &sp, grid).unwrap();
            assert!((w.norm_sqr() - 1.0).abs() < 1e-12);
            assert!(w.exchange_asymmetry() < 1e-12);
            let (v, residual) = project_onto_basis(&w, &basis, &sp).unwrap();
            let e = computational_embedding(&basis, label).unwrap();
            assert!(v.inner(&e).norm_sqr() > 1.0 - 1e-6, "{label}");
            assert!(residual.abs() < 1e-6);
        }
    }

    #[test]
    fn ground_pair_has_no_nodes() {
        let (basis, sp, grid) = setup(5.0);
        let w = init_grid_state(ComputationalLabel::Q00, &basis, &sp, grid).unwrap();
        let xs = grid.nodes();
        let n = grid.points;
        let i = xs.iter().position(|x| (x + 5.0).abs() < grid.spacing() / 2.0).unwrap();
        let j = xs.iter().position(|x| (x - 5.0).abs() < grid.spacing() / 2.0).unwrap();
        let peak = w.psi[i * n + j];
        assert!(peak.re > 0.0);
        assert!((w.psi[j * n + i] - peak).norm() < 1e-12);
        // no sign change across the bump
        for d in 1..20 {
            assert!(w.psi[(i + d) * n + j].re > 0.0 && w.psi[(i - d) * n + j].re > 0.0);
        }
    }

    #[test]
    fn projection_is_linear() {
        let (basis, sp, grid) = setup(5.0);
        let mut w = init_grid_state(ComputationalLabel::Q01, &basis, &sp, grid).unwrap();
        let (v1, _) = project_onto_basis(&w, &basis, &sp).unwrap();
        w.psi.iter_mut().for_each(|z| *z *= Complex64::new(0.0, 3.0));
        let (v3, _) = project_onto_basis(&w, &basis, &sp).unwrap();
        for (a, b) in v1.coeffs.iter().zip(&v3.coeffs) {
            assert!((a * Complex64::new(0.0, 3.0) - b).norm() < 1e-12);
        }
    }

    #[test]
    fn stationary_pair_is_preserved() {
        let (basis, sp, _) = setup(5.0);
        let grid = Grid2D::new(128, 11.0).unwrap();
        let w = init_grid_state(ComputationalLabel::Q00, &basis, &sp, grid).unwrap();
        let duration = 20.0 * std::f64::consts::PI;
        let model = DimensionlessModel::new(0.0, TrapTrajectory::stationary(5.0, duration).unwrap());
        let (end, snaps) = split_step_evolve(&w, &model, duration, &OracleSettings { dt: 5e-3, ..Default::default() }, &[0.0, duration]).unwrap();
        assert_eq!(snaps.len(), 2);
        assert!(w.inner(&end).norm() > 1.0 - 1e-4);
        assert!((end.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn frame_roundtrip() {
        let grid = Grid2D::new(8, 3.5).unwrap();
        let data: Vec<f64> = (0..64).map(|k| k as f64 * 0.25).collect();
        let mut buf = Vec::new();
        write_frame(&mut buf, &grid, &data).unwrap();
        assert_eq!(buf.len(), 16 + 64 * 8);
        assert_eq!(&buf[..4], b"MTGF");
        let (g, d) = read_frame(buf.as_slice()).unwrap();
        assert_eq!((g, d), (grid, data));
    }

    #[test]
    fn rejects_bad_settings() {
        let (basis, sp, _) = setup(5.0);
        assert!(init_grid_state(ComputationalLabel::Q00, &basis, &sp, Grid2D::new(64, 8.0).unwrap()).is_err());
        let grid = Grid2D::new(64, 11.0).unwrap();
        let w = init_grid_state(ComputationalLabel::Q00, &basis, &sp, grid).unwrap();
        let model = DimensionlessModel::new(0.0, TrapTrajectory::stationary(5.0, 1.0).unwrap());
        assert!(split_step_evolve(&w, &model, 1.0, &OracleSettings { dt: 1e-2, ..Default::default() }, &[]).is_err());
    }
}
