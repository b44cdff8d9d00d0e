//! Realized gate matrices, averaged fidelity, the universality compositions and
//! the parameter sweeps built on top of full gate runs.

use nalgebra::Matrix4;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GateError, Result};
use crate::hamiltonian::{CoupledTable, HamiltonianTable};
use crate::physical_model::{derive_dimensionless, DimensionlessModel, PhysicalParams, TrapTrajectory};
use crate::propagator::{populations, propagate, remove_trivial_phase, PopulationRow, PropagationResult, PropagationSettings};
use crate::tp_basis::{computational_embedding, computational_extraction, ComputationalLabel, Extraction, TwoParticleBasis};

pub type Matrix4c = Matrix4<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 4×4 gate over `{|00⟩, |01⟩, |10⟩, |11⟩}` (first digit: left trap) with per-column leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct GateMatrix {
    pub u: Matrix4c,
    pub leakage: [f64; 4],
}

impl GateMatrix {
    pub fn exact(u: Matrix4c) -> Self {
        GateMatrix { u, leakage: [0.0; 4] }
    }

    pub fn column_norms(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.u.column(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        }
        out
    }

    /// `‖U†U − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        (self.u.adjoint() * self.u - Matrix4c::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn compose(&self, then: &GateMatrix) -> GateMatrix {
        GateMatrix::exact(then.u * self.u)
    }

    pub fn rows(&self) -> Vec<Vec<[f64; 2]>> {
        (0..4).map(|i| (0..4).map(|j| [self.u[(i, j)].re, self.u[(i, j)].im]).collect()).collect()
    }
}

pub fn sqrt_swap() -> Matrix4c {
    let p = c(0.5, 0.5);
    let m = c(0.5, -0.5);
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    Matrix4c::new(o, z, z, z, z, p, m, z, z, m, p, z, z, z, z, o)
}

pub fn swap() -> Matrix4c {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    Matrix4c::new(o, z, z, z, z, z, o, z, z, o, z, z, z, z, z, o)
}

/// Controlled NOT with the left qubit as control.
pub fn cnot() -> Matrix4c {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    Matrix4c::new(o, z, z, z, z, o, z, z, z, z, z, o, z, z, o, z)
}

fn kron2(a: [[Complex64; 2]; 2], b: [[Complex64; 2]; 2]) -> Matrix4c {
    Matrix4c::from_fn(|i, j| a[i / 2][j / 2] * b[i % 2][j % 2])
}

const ID2: [[Complex64; 2]; 2] = [[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)], [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]];

/// Single-qubit phase gate `diag(1, −i)`.
pub fn sigma() -> [[Complex64; 2]; 2] {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, -1.0)]]
}

pub fn hadamard() -> [[Complex64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
}

pub fn on_left(m: [[Complex64; 2]; 2]) -> Matrix4c {
    kron2(m, ID2)
}

pub fn on_right(m: [[Complex64; 2]; 2]) -> Matrix4c {
    kron2(ID2, m)
}

/// Largest elementwise difference after removing the best global phase.
pub fn distance_up_to_phase(a: &Matrix4c, b: &Matrix4c) -> f64 {
    let overlap: Complex64 = a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum();
    let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { c(1.0, 0.0) };
    a.iter().zip(b.iter()).map(|(x, y)| (x * phase - y).norm()).fold(0.0, f64::max)
}

pub fn max_abs_difference(a: &Matrix4c, b: &Matrix4c) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Mean over the four computational inputs of `|⟨target_c|U_c⟩|²`.
pub fn averaged_fidelity(u: &GateMatrix, target: &Matrix4c) -> f64 {
    (0..4)
        .map(|j| {
            let ov: Complex64 = (0..4).map(|i| target[(i, j)].conj() * u.u[(i, j)]).sum();
            ov.norm_sqr()
        })
        .sum::<f64>()
        / 4.0
}

/// Phase-sensitive `|Tr(T†U)|²/16`.
pub fn process_overlap(u: &GateMatrix, target: &Matrix4c) -> f64 {
    let tr: Complex64 = (target.adjoint() * u.u).trace();
    tr.norm_sqr() / 16.0
}

#[derive(Debug, Clone, Serialize)]
pub struct UniversalityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub passed: bool,
}

pub const ALGEBRA_TOLERANCE: f64 = 1e-14;

/// Exact compositions: the controlled phase from two √SWAPs and single-qubit
/// phases, CNOT from it with Hadamards, and `√SWAP² = SWAP`.
pub fn universality_suite() -> Vec<UniversalityCheck> {
    let u = sqrt_swap();
    let s = sigma();
    let s_inv = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]];
    let s_sq = [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
    let phase = on_left(s_inv) * on_right(s) * u * on_left(s_sq) * u;
    let mut cz = Matrix4c::identity();
    cz[(3, 3)] = c(-1.0, 0.0);
    let h_b = on_right(hadamard());
    let h_a = on_left(hadamard());
    let cnot_right_target = h_b * phase * h_b;
    let cnot_left_target = h_a * phase * h_a;
    // diag(1, −i) = e^{−iπ/4} · exp(+iπσ_z/4)
    let q = std::f64::consts::FRAC_PI_4;
    let from_exp = [
        [Complex64::from_polar(1.0, -q) * Complex64::from_polar(1.0, q), c(0.0, 0.0)],
        [c(0.0, 0.0), Complex64::from_polar(1.0, -q) * Complex64::from_polar(1.0, -q)],
    ];
    let sigma_residual =
        (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| (from_exp[i][j] - s[i][j]).norm()).fold(0.0, f64::max);
    let unitarity = GateMatrix::exact(u).unitarity_defect();
    let checks = [
        ("phase gate diag(1,1,1,-1)", distance_up_to_phase(&phase, &cz)),
        ("CNOT (Hadamards on target qubit)", distance_up_to_phase(&cnot_right_target, &cnot())),
        ("CNOT reversed (Hadamards on left qubit)", distance_up_to_phase(&cnot_left_target, &(swap() * cnot() * swap()))),
        ("sigma = exp form", sigma_residual),
        ("sqrt(SWAP)^2 = SWAP", max_abs_difference(&(u * u), &swap())),
        ("sqrt(SWAP) unitary", unitarity),
    ];
    checks.iter().map(|&(name, residual)| UniversalityCheck { name, residual, passed: residual <= ALGEBRA_TOLERANCE }).collect()
}

/// Full record of a gate reconstruction.
#[derive(Debug, Clone)]
pub struct GateRun {
    pub gate: GateMatrix,
    pub propagations: Vec<PropagationResult>,
    pub extractions: Vec<Extraction>,
    pub final_populations: Vec<PopulationRow>,
    pub global_phase: f64,
}

/// Propagates the four computational inputs, removes the trivial phase at the
/// end of the trajectory and fixes the global phase by the `|00⟩` element.
pub fn reconstruct_gate(
    model: &DimensionlessModel,
    basis: &TwoParticleBasis,
    table: &CoupledTable,
    settings: &PropagationSettings,
) -> Result<GateRun> {
    let total = model.trajectory.total_time();
    let runs: Vec<Result<PropagationResult>> = ComputationalLabel::ALL
        .par_iter()
        .map(|&label| {
            let v = computational_embedding(basis, label)?;
            propagate(&v, model, table, settings)
        })
        .collect();
    let runs: Vec<PropagationResult> = runs.into_iter().collect::<Result<_>>()?;
    let mut u = Matrix4c::zeros();
    let mut leakage = [0.0; 4];
    let mut extractions = Vec::with_capacity(4);
    let mut finals = Vec::with_capacity(4);
    for (j, r) in runs.iter().enumerate() {
        let v = remove_trivial_phase(basis, r.final_state(), total);
        let x = computational_extraction(basis, &v)?;
        for i in 0..4 {
            u[(i, j)] = x.amplitudes[i];
        }
        leakage[j] = x.p_double + x.p_leak;
        extractions.push(x);
        finals.push(populations(basis, &v)?);
    }
    let g00 = u[(0, 0)];
    let global_phase = if g00.norm() > 0.0 { -g00.arg() } else { 0.0 };
    let rot = Complex64::from_polar(1.0, global_phase);
    u.iter_mut().for_each(|z| *z *= rot);
    Ok(GateRun { gate: GateMatrix { u, leakage }, propagations: runs, extractions, final_populations: finals, global_phase })
}

/// Builds the coupling-specific table and reconstructs the gate.
pub fn reconstruct_gate_from_table(
    model: &DimensionlessModel,
    basis: &TwoParticleBasis,
    table: &HamiltonianTable,
    settings: &PropagationSettings,
) -> Result<GateRun> {
    reconstruct_gate(model, basis, &table.for_coupling(model.g)?, settings)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScatteringPoint {
    /// Scattering length in Bohr radii.
    pub a_t_bohr: f64,
    pub g: f64,
    pub from01_p01: f64,
    pub from01_p10: f64,
    pub from01_double: f64,
    pub from01_p02: f64,
    pub from11_p11: f64,
    pub from11_double: f64,
    pub from11_p02: f64,
    /// Largest `|02⟩⁺` population seen along the run from `|11⟩`.
    pub from11_p02_max: f64,
    pub error: Option<String>,
}

impl ScatteringPoint {
    fn failed(a_t_bohr: f64, g: f64, e: GateError) -> Self {
        ScatteringPoint {
            a_t_bohr,
            g,
            from01_p01: f64::NAN,
            from01_p10: f64::NAN,
            from01_double: f64::NAN,
            from01_p02: f64::NAN,
            from11_p11: f64::NAN,
            from11_double: f64::NAN,
            from11_p02: f64::NAN,
            from11_p02_max: f64::NAN,
            error: Some(e.to_string()),
        }
    }
}

/// Final populations from `|01⟩` and `|11⟩` for each scattering length (in Bohr radii).
///
/// `table` must cover the trajectory of `template`; the coupling is rederived per point.
pub fn sweep_scattering(
    template: &PhysicalParams,
    a_t_bohr: &[f64],
    basis: &TwoParticleBasis,
    table: &HamiltonianTable,
    settings: &PropagationSettings,
) -> Result<Vec<ScatteringPoint>> {
    if a_t_bohr.is_empty() {
        return Err(GateError::invalid("a_t list", "must not be empty"));
    }
    let one = |at: f64| -> ScatteringPoint {
        let params = PhysicalParams { a_t: at * crate::physical_model::constants::BOHR_RADIUS, ..*template };
        let model = match derive_dimensionless(&params) {
            Ok(m) => m,
            Err(e) => return ScatteringPoint::failed(at, f64::NAN, e),
        };
        let run = || -> Result<ScatteringPoint> {
            let t = table.for_coupling(model.g)?;
            let p = |label| -> Result<(PopulationRow, f64)> {
                let r = propagate(&computational_embedding(basis, label)?, &model, &t, settings)?;
                let trace = crate::propagator::population_trace(basis, &r)?;
                let peak = trace.iter().map(|row| row.p02).fold(0.0, f64::max);
                Ok((*trace.last().expect("samples"), peak))
            };
            let (a, _) = p(ComputationalLabel::Q01)?;
            let (b, peak) = p(ComputationalLabel::Q11)?;
            Ok(ScatteringPoint {
                a_t_bohr: at,
                g: model.g,
                from01_p01: a.p01,
                from01_p10: a.p10,
                from01_double: a.double,
                from01_p02: a.p02,
                from11_p11: b.p11,
                from11_double: b.double,
                from11_p02: b.p02,
                from11_p02_max: peak,
                error: None,
            })
        };
        run().unwrap_or_else(|e| ScatteringPoint::failed(at, model.g, e))
    };
    Ok(a_t_bohr.par_iter().map(|&at| one(at)).collect())
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct MapPoint {
    pub t_r: f64,
    pub a_min: f64,
    pub t_i: f64,
    pub fidelity: f64,
    pub process_overlap: f64,
    /// Fidelity against the complex-conjugate target (the inverse √SWAP).
    pub fidelity_conjugate: f64,
    pub max_leakage: f64,
}

impl MapPoint {
    fn failed(t_r: f64, a_min: f64, t_i: f64) -> Self {
        MapPoint {
            t_r,
            a_min,
            t_i,
            fidelity: f64::NAN,
            process_overlap: f64::NAN,
            fidelity_conjugate: f64::NAN,
            max_leakage: f64::NAN,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FidelityMap {
    pub t_r: Vec<f64>,
    pub a_min: Vec<f64>,
    pub t_i: f64,
    /// `points[row][col]` with rows over `t_r` and columns over `a_min`.
    pub points: Vec<Vec<MapPoint>>,
}

impl FidelityMap {
    pub fn fidelity(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|r| r.iter().map(|p| p.fidelity).collect()).collect()
    }

    /// Grid index and value of the highest finite fidelity.
    pub fn best(&self) -> Option<(usize, usize, MapPoint)> {
        let mut best: Option<(usize, usize, MapPoint)> = None;
        for (i, row) in self.points.iter().enumerate() {
            for (j, p) in row.iter().enumerate() {
                if p.fidelity.is_finite() && best.map_or(true, |b| p.fidelity > b.2.fidelity) {
                    best = Some((i, j, *p));
                }
            }
        }
        best
    }
}

/// Evaluates one `(t_r, a_min, t_i)` point against the √SWAP target.
pub fn map_point(
    template: &DimensionlessModel,
    t_r: f64,
    a_min: f64,
    t_i: f64,
    basis: &TwoParticleBasis,
    table: &CoupledTable,
    settings: &PropagationSettings,
) -> Result<MapPoint> {
    let tr = &template.trajectory;
    let traj = TrapTrajectory::new(tr.a_max, a_min, t_r, t_i, tr.ramp)?;
    let model = template.with_trajectory(traj);
    let run = reconstruct_gate(&model, basis, table, settings)?;
    let target = sqrt_swap();
    Ok(MapPoint {
        t_r,
        a_min,
        t_i,
        fidelity: averaged_fidelity(&run.gate, &target),
        process_overlap: process_overlap(&run.gate, &target),
        fidelity_conjugate: averaged_fidelity(&run.gate, &target.map(|z| z.conj())),
        max_leakage: run.gate.leakage.iter().copied().fold(0.0, f64::max),
    })
}

/// Averaged fidelity over a `(t_r, a_min)` grid at fixed `t_i`.
///
/// `done` supplies points restored from a checkpoint; `on_point` sees each newly
/// computed point (in completion order). Failed points are NaN.
pub fn fidelity_map_with(
    template: &DimensionlessModel,
    t_r: &[f64],
    a_min: &[f64],
    t_i: f64,
    basis: &TwoParticleBasis,
    table: &CoupledTable,
    settings: &PropagationSettings,
    done: &dyn Fn(usize, usize) -> Option<MapPoint>,
    on_point: &(dyn Fn(usize, usize, &MapPoint) + Sync),
) -> Result<FidelityMap> {
    if t_r.is_empty() || a_min.is_empty() {
        return Err(GateError::invalid("map grid", "t_r and a_min lists must not be empty"));
    }
    let cells: Vec<(usize, usize)> = (0..t_r.len()).flat_map(|i| (0..a_min.len()).map(move |j| (i, j))).collect();
    let restored: Vec<Option<MapPoint>> = cells.iter().map(|&(i, j)| done(i, j)).collect();
    let computed: Vec<MapPoint> = cells
        .par_iter()
        .zip(restored.par_iter())
        .map(|(&(i, j), prior)| {
            if let Some(p) = prior {
                return *p;
            }
            let p = map_point(template, t_r[i], a_min[j], t_i, basis, table, settings)
                .unwrap_or_else(|_| MapPoint::failed(t_r[i], a_min[j], t_i));
            on_point(i, j, &p);
            p
        })
        .collect();
    let points = computed.chunks(a_min.len()).map(|r| r.to_vec()).collect();
    Ok(FidelityMap { t_r: t_r.to_vec(), a_min: a_min.to_vec(), t_i, points })
}

pub fn fidelity_map(
    template: &DimensionlessModel,
    t_r: &[f64],
    a_min: &[f64],
    t_i: f64,
    basis: &TwoParticleBasis,
    table: &CoupledTable,
    settings: &PropagationSettings,
) -> Result<FidelityMap> {
    fidelity_map_with(template, t_r, a_min, t_i, basis, table, settings, &|_, _| None, &|_, _, _| {})
}
