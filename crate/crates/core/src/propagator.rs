//! Time evolution of the expansion coefficients along the trap trajectory.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{GateError, Result};
use crate::hamiltonian::CoupledTable;
use crate::ode::{Dopri5, Dopri5Options, IntegratorStats};
use crate::physical_model::DimensionlessModel;
use crate::tp_basis::{computational_extraction, AmplitudeVector, Occupancy, TwoParticleBasis};

pub const MIN_SAMPLES: usize = 400;
/// Per-step error target as a fraction of the requested tolerance. The norm
/// error of the 5(4) pair accumulates to roughly 25× the local target over a
/// full gate, so this keeps the drift well under the tolerance itself.
const LOCAL_ERROR_FRACTION: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSettings {
    pub tolerance: f64,
    pub include_couplings: bool,
    /// Number of uniformly spaced output times, endpoints included.
    pub samples: usize,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        PropagationSettings { tolerance: 1e-9, include_couplings: true, samples: MIN_SAMPLES + 1 }
    }
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub times: Vec<f64>,
    pub states: Vec<AmplitudeVector>,
    /// Largest deviation of the vector norm from its initial value.
    pub norm_drift: f64,
    pub stats: IntegratorStats,
}

impl PropagationResult {
    pub fn final_state(&self) -> &AmplitudeVector {
        self.states.last().expect("at least one sample")
    }
}

/// Integrates `i ċ = [H(a) − i ȧ A(a)] c` over the whole trajectory of `model`.
pub fn propagate(
    initial: &AmplitudeVector,
    model: &DimensionlessModel,
    table: &CoupledTable,
    settings: &PropagationSettings,
) -> Result<PropagationResult> {
    let dim = table.dim();
    if initial.coeffs.len() != dim {
        return Err(GateError::BasisMismatch(format!("initial vector has {} entries, table has {dim}", initial.coeffs.len())));
    }
    if (table.coupling_strength() - model.g).abs() > 1e-12 * model.g.abs().max(1.0) {
        return Err(GateError::BasisMismatch(format!("table built for g = {}, model has g = {}", table.coupling_strength(), model.g)));
    }
    if settings.samples < MIN_SAMPLES {
        return Err(GateError::invalid("samples", format!("need at least {MIN_SAMPLES}")));
    }
    let traj = &model.trajectory;
    table.covers(traj.a_min, traj.a_max)?;
    let norm0 = initial.norm();
    let total = traj.total_time();
    let times: Vec<f64> = (0..settings.samples).map(|k| total * k as f64 / (settings.samples - 1) as f64).collect();
    let mut stops: Vec<f64> = times.iter().copied().chain(traj.breakpoints()).filter(|t| *t > 0.0 && *t <= total).collect();
    stops.sort_by(f64::total_cmp);
    stops.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * total);

    let mut h = vec![0.0; dim * dim];
    let mut cpl = vec![0.0; dim * dim];
    let couplings = settings.include_couplings;
    let mut rhs = |t: f64, y: &[Complex64], dy: &mut [Complex64]| -> Result<()> {
        let (a, adot) = traj.state(t.min(total))?;
        table.eval_into(a, &mut h, &mut cpl)?;
        for d in dy.iter_mut() {
            *d = Complex64::new(0.0, 0.0);
        }
        for (j, yj) in y.iter().enumerate() {
            let hcol = &h[j * dim..(j + 1) * dim];
            let ccol = &cpl[j * dim..(j + 1) * dim];
            // -i H y - ȧ A y
            let (re, im) = (yj.re, yj.im);
            if couplings && adot != 0.0 {
                for i in 0..dim {
                    let hv = hcol[i];
                    let cv = adot * ccol[i];
                    dy[i].re += hv * im - cv * re;
                    dy[i].im += -hv * re - cv * im;
                }
            } else {
                for i in 0..dim {
                    let hv = hcol[i];
                    dy[i].re += hv * im;
                    dy[i].im -= hv * re;
                }
            }
        }
        Ok(())
    };

    let mut ode = Dopri5::new(0.0, initial.coeffs.clone(), Dopri5Options::with_tolerance(settings.tolerance * LOCAL_ERROR_FRACTION))?;
    let mut states = Vec::with_capacity(times.len());
    states.push(AmplitudeVector { coeffs: initial.coeffs.clone(), time: 0.0 });
    let mut next_sample = 1;
    let mut drift: f64 = 0.0;
    for &stop in &stops {
        ode.advance(&mut rhs, stop)?;
        while next_sample < times.len() && (times[next_sample] - stop).abs() <= 1e-12 * total {
            let v = AmplitudeVector { coeffs: ode.y().to_vec(), time: times[next_sample] };
            drift = drift.max((v.norm() - norm0).abs());
            states.push(v);
            next_sample += 1;
        }
    }
    debug_assert_eq!(states.len(), times.len());
    Ok(PropagationResult { times, states, norm_drift: drift, stats: ode.stats() })
}

/// Multiplies each coefficient by `exp(+i (N + 1) τ)`, `N` the total quanta of its state.
pub fn remove_trivial_phase(basis: &TwoParticleBasis, v: &AmplitudeVector, tau: f64) -> AmplitudeVector {
    let coeffs = v
        .coeffs
        .iter()
        .zip(basis.states())
        .map(|(c, s)| c * Complex64::from_polar(1.0, (s.quanta as f64 + 1.0) * tau))
        .collect();
    AmplitudeVector { coeffs, time: v.time }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PopulationRow {
    pub time: f64,
    pub p00: f64,
    pub p01: f64,
    pub p10: f64,
    pub p11: f64,
    pub p02: f64,
    pub double: f64,
    pub other: f64,
}

impl PopulationRow {
    pub const HEADER: [&'static str; 8] = ["time", "p00", "p01", "p10", "p11", "p02+", "double", "other"];

    pub fn values(&self) -> [f64; 8] {
        [self.time, self.p00, self.p01, self.p10, self.p11, self.p02, self.double, self.other]
    }

    pub fn sum(&self) -> f64 {
        self.p00 + self.p01 + self.p10 + self.p11 + self.p02 + self.double + self.other
    }
}

/// Labelled populations of one amplitude vector.
pub fn populations(basis: &TwoParticleBasis, v: &AmplitudeVector) -> Result<PopulationRow> {
    let x = computational_extraction(basis, v)?;
    let p02 = basis.index_of("02+").map(|k| v.coeffs[k].norm_sqr()).unwrap_or(0.0);
    let double: f64 =
        basis.states().iter().zip(&v.coeffs).filter(|(s, _)| s.occupancy == Occupancy::Double).map(|(_, c)| c.norm_sqr()).sum();
    Ok(PopulationRow {
        time: v.time,
        p00: x.amplitudes[0].norm_sqr(),
        p01: x.amplitudes[1].norm_sqr(),
        p10: x.amplitudes[2].norm_sqr(),
        p11: x.amplitudes[3].norm_sqr(),
        p02,
        double,
        other: x.p_leak - p02,
    })
}

pub fn population_trace(basis: &TwoParticleBasis, result: &PropagationResult) -> Result<Vec<PopulationRow>> {
    result.states.iter().map(|v| populations(basis, v)).collect()
}
