//! Run configuration: a flat `section.key = value` text format with bundled presets.

use serde::Serialize;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{GateError, Result};
use crate::physical_model::{constants, derive_dimensionless, DimensionlessModel, PhysicalParams, RampShape, TrapTrajectory};
use crate::tp_basis::ComputationalLabel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Gate,
    SweepScattering,
    FidelityMap,
    EntanglementTrace,
    Snapshots,
    Verify,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Gate,
        ExperimentKind::SweepScattering,
        ExperimentKind::FidelityMap,
        ExperimentKind::EntanglementTrace,
        ExperimentKind::Snapshots,
        ExperimentKind::Verify,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Gate => "gate",
            ExperimentKind::SweepScattering => "sweep-scattering",
            ExperimentKind::FidelityMap => "fidelity-map",
            ExperimentKind::EntanglementTrace => "entanglement-trace",
            ExperimentKind::Snapshots => "snapshots",
            ExperimentKind::Verify => "verify",
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL.into_iter().find(|k| k.as_str() == s).ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Rb87,
    Rb85,
}

impl Species {
    pub fn mass(self) -> f64 {
        match self {
            Species::Rb87 => constants::MASS_RB87,
            Species::Rb85 => constants::MASS_RB85,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhysicalSection {
    pub species: Species,
    /// Overrides the species mass when set (kg).
    pub mass: Option<f64>,
    pub omega_x: f64,
    pub omega_p: f64,
    /// Scattering length in Bohr radii.
    pub a_t_bohr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySection {
    pub a_max: f64,
    pub a_min: f64,
    pub t_r: f64,
    pub t_i: f64,
    pub ramp: RampShape,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasisSection {
    pub n_sp: usize,
    /// 0 selects the default for the largest separation.
    pub quadrature_points: usize,
    /// Target separation spacing of the Hamiltonian table.
    pub knot_spacing: f64,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorSection {
    pub tolerance: f64,
    pub derivative_couplings: bool,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSection {
    pub points: usize,
    /// Grid half-width beyond `a_max`.
    pub margin: f64,
    pub dt: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSection {
    pub a_t_min: f64,
    pub a_t_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MapSection {
    pub t_r_min: f64,
    pub t_r_max: f64,
    pub t_r_points: usize,
    pub a_min_min: f64,
    pub a_min_max: f64,
    pub a_min_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub kind: ExperimentKind,
    /// Computational input for single-trajectory experiments.
    pub input: ComputationalLabel,
    pub physical: PhysicalSection,
    pub trajectory: TrajectorySection,
    pub basis: BasisSection,
    pub integrator: IntegratorSection,
    pub oracle: OracleSection,
    pub sweep: SweepSection,
    pub map: MapSection,
    pub output: PathBuf,
    /// 0 uses every available core.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            kind: ExperimentKind::Gate,
            input: ComputationalLabel::Q01,
            physical: PhysicalSection { species: Species::Rb87, mass: None, omega_x: 1.25e4, omega_p: 7.9e6, a_t_bohr: 106.0 },
            trajectory: TrajectorySection { a_max: 5.0, a_min: 1.99, t_r: 70.0, t_i: 69.0, ramp: RampShape::default() },
            basis: BasisSection { n_sp: 8, quadrature_points: 0, knot_spacing: 3.75e-3, fd_step: 1e-5 },
            integrator: IntegratorSection { tolerance: 1e-9, derivative_couplings: true, samples: 401 },
            oracle: OracleSection { points: 256, margin: 6.0, dt: 2e-3, frames: 6 },
            sweep: SweepSection { a_t_min: 0.0, a_t_max: 127.2, points: 25 },
            map: MapSection { t_r_min: 50.0, t_r_max: 90.0, t_r_points: 9, a_min_min: 1.79, a_min_max: 2.19, a_min_points: 9 },
            output: PathBuf::from("out"),
            workers: 0,
        }
    }
}

pub const PRESET_NAMES: [&str; 5] = ["fig2", "fig3", "fig4", "fig6a", "fig6b"];

const FIG3: &str = "\
experiment.kind = gate
physical.species = rb87
physical.omega_x = 1.25e4
physical.omega_p = 7.9e6
physical.a_t_bohr = 106
trajectory.a_max = 5
trajectory.a_min = 1.99
trajectory.t_r = 70
trajectory.t_i = 69
";

const FIG2: &str = "\
experiment.kind = sweep-scattering
sweep.a_t_min = 0
sweep.a_t_max = 127.2
sweep.points = 25
";

const FIG4: &str = "\
experiment.kind = gate
physical.species = rb85
physical.omega_x = 1.25e4
physical.omega_p = 1.6e6
physical.a_t_bohr = -369
trajectory.a_max = 5
trajectory.a_min = 1.956
trajectory.t_r = 77
trajectory.t_i = 97.2
";

const FIG6: &str = "\
experiment.kind = fidelity-map
map.t_r_min = 50
map.t_r_max = 90
map.t_r_points = 9
map.a_min_min = 1.79
map.a_min_max = 2.19
map.a_min_points = 9
";

/// Preset text, layered on the `fig3` parameter set where applicable.
pub fn preset_text(name: &str) -> Result<String> {
    let text = match name {
        "fig3" => FIG3.to_string(),
        "fig2" => format!("{FIG3}{FIG2}"),
        "fig4" => FIG4.to_string(),
        "fig6a" => format!("{FIG3}{FIG6}"),
        "fig6b" => format!("{FIG3}{FIG6}trajectory.t_i = 20\n"),
        _ => return Err(GateError::invalid("preset", format!("unknown preset `{name}` (known: {})", PRESET_NAMES.join(", ")))),
    };
    Ok(text)
}

pub fn preset(name: &str) -> Result<RunConfig> {
    parse_config(&preset_text(name)?)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_onto(RunConfig::default(), text)
}

/// Applies `text` on top of `base`, then validates.
pub fn parse_onto(mut cfg: RunConfig, text: &str) -> Result<RunConfig> {
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| GateError::ConfigSyntax { line, message: format!("expected `key = value`, got `{content}`") })?;
        let (key, value) = (key.trim(), value.trim());
        if value.is_empty() {
            return Err(GateError::ConfigSyntax { line, message: format!("missing value for `{key}`") });
        }
        set_key(&mut cfg, key, value, line)?;
    }
    validate(&cfg)?;
    Ok(cfg)
}

fn parse_value<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| GateError::ConfigSyntax { line, message: format!("cannot parse `{value}` for `{key}`") })
}

fn set_key(cfg: &mut RunConfig, key: &str, value: &str, line: usize) -> Result<()> {
    macro_rules! set {
        ($field:expr) => {
            $field = parse_value(key, value, line)?
        };
    }
    match key {
        "experiment.kind" => {
            cfg.kind = value.parse().map_err(|m| GateError::ConfigSyntax { line, message: m })?;
        }
        "experiment.input" => {
            cfg.input = ComputationalLabel::parse(value).map_err(|e| GateError::ConfigSyntax { line, message: e.to_string() })?;
        }
        "physical.species" => {
            cfg.physical.species = match value {
                "rb87" => Species::Rb87,
                "rb85" => Species::Rb85,
                _ => return Err(GateError::ConfigSyntax { line, message: format!("unknown species `{value}`") }),
            };
        }
        "physical.mass" => cfg.physical.mass = Some(parse_value(key, value, line)?),
        "physical.omega_x" => set!(cfg.physical.omega_x),
        "physical.omega_p" => set!(cfg.physical.omega_p),
        "physical.a_t_bohr" => set!(cfg.physical.a_t_bohr),
        "trajectory.a_max" => set!(cfg.trajectory.a_max),
        "trajectory.a_min" => set!(cfg.trajectory.a_min),
        "trajectory.t_r" => set!(cfg.trajectory.t_r),
        "trajectory.t_i" => set!(cfg.trajectory.t_i),
        "trajectory.ramp" => {
            cfg.trajectory.ramp = RampShape::parse(value)
                .ok_or_else(|| GateError::ConfigSyntax { line, message: format!("unknown ramp `{value}` (flat-min or flat-max)") })?;
        }
        "basis.n_sp" => set!(cfg.basis.n_sp),
        "basis.quadrature_points" => set!(cfg.basis.quadrature_points),
        "basis.knot_spacing" => set!(cfg.basis.knot_spacing),
        "basis.fd_step" => set!(cfg.basis.fd_step),
        "integrator.tolerance" => set!(cfg.integrator.tolerance),
        "integrator.derivative_couplings" => set!(cfg.integrator.derivative_couplings),
        "integrator.samples" => set!(cfg.integrator.samples),
        "oracle.points" => set!(cfg.oracle.points),
        "oracle.margin" => set!(cfg.oracle.margin),
        "oracle.dt" => set!(cfg.oracle.dt),
        "oracle.frames" => set!(cfg.oracle.frames),
        "sweep.a_t_min" => set!(cfg.sweep.a_t_min),
        "sweep.a_t_max" => set!(cfg.sweep.a_t_max),
        "sweep.points" => set!(cfg.sweep.points),
        "map.t_r_min" => set!(cfg.map.t_r_min),
        "map.t_r_max" => set!(cfg.map.t_r_max),
        "map.t_r_points" => set!(cfg.map.t_r_points),
        "map.a_min_min" => set!(cfg.map.a_min_min),
        "map.a_min_max" => set!(cfg.map.a_min_max),
        "map.a_min_points" => set!(cfg.map.a_min_points),
        "run.output" => cfg.output = PathBuf::from(value),
        "run.workers" => set!(cfg.workers),
        _ => return Err(GateError::UnknownKey(key.to_string())),
    }
    Ok(())
}

fn range(field: &str, reason: impl Into<String>) -> GateError {
    GateError::Range { field: field.to_string(), reason: reason.into() }
}

fn check(field: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v.is_finite() && v >= lo && v <= hi {
        Ok(())
    } else {
        Err(range(field, format!("{v} not in [{lo}, {hi}]")))
    }
}

fn check_n(field: &str, v: usize, lo: usize, hi: usize) -> Result<()> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(range(field, format!("{v} not in [{lo}, {hi}]")))
    }
}

pub fn validate(cfg: &RunConfig) -> Result<()> {
    let p = &cfg.physical;
    check("physical.omega_x", p.omega_x, 1e-3, 1e12)?;
    check("physical.omega_p", p.omega_p, 1e-3, 1e15)?;
    if let Some(m) = p.mass {
        check("physical.mass", m, 1e-30, 1e-20)?;
    }
    check("physical.a_t_bohr", p.a_t_bohr, -1e5, 1e5)?;
    let t = &cfg.trajectory;
    check("trajectory.a_max", t.a_max, 0.1, 50.0)?;
    check("trajectory.a_min", t.a_min, 0.05, 50.0)?;
    if t.a_min > t.a_max {
        return Err(range("trajectory.a_min/trajectory.a_max", format!("a_min = {} exceeds a_max = {}", t.a_min, t.a_max)));
    }
    check("trajectory.t_r", t.t_r, 1e-6, 1e6)?;
    check("trajectory.t_i", t.t_i, 0.0, 1e6)?;
    let b = &cfg.basis;
    if b.n_sp % 2 != 0 {
        return Err(range("basis.n_sp", "must be even"));
    }
    check_n("basis.n_sp", b.n_sp, 4, 12)?;
    if b.quadrature_points != 0 {
        check_n("basis.quadrature_points", b.quadrature_points, 101, 1_000_001)?;
    }
    check("basis.knot_spacing", b.knot_spacing, 1e-5, 0.5)?;
    check("basis.fd_step", b.fd_step, 1e-8, 1e-2)?;
    let i = &cfg.integrator;
    check("integrator.tolerance", i.tolerance, 1e-14, 1e-3)?;
    check_n("integrator.samples", i.samples, crate::propagator::MIN_SAMPLES, 10_000_000)?;
    let o = &cfg.oracle;
    if o.points % 2 != 0 {
        return Err(range("oracle.points", "must be even"));
    }
    check_n("oracle.points", o.points, 32, 8192)?;
    check("oracle.margin", o.margin, crate::grid_oracle::DEFAULT_MARGIN, 100.0)?;
    check("oracle.dt", o.dt, 1e-6, crate::grid_oracle::MAX_DT)?;
    check_n("oracle.frames", o.frames, 1, 10_000)?;
    let s = &cfg.sweep;
    check("sweep.a_t_min", s.a_t_min, -1e5, 1e5)?;
    check("sweep.a_t_max", s.a_t_max, -1e5, 1e5)?;
    if s.a_t_min > s.a_t_max {
        return Err(range("sweep.a_t_min/sweep.a_t_max", "a_t_min exceeds a_t_max"));
    }
    check_n("sweep.points", s.points, 1, 100_000)?;
    let m = &cfg.map;
    check("map.t_r_min", m.t_r_min, 1e-6, 1e6)?;
    check("map.t_r_max", m.t_r_max, m.t_r_min, 1e6)?;
    check("map.a_min_min", m.a_min_min, 0.05, t.a_max)?;
    check("map.a_min_max", m.a_min_max, m.a_min_min, t.a_max)?;
    check_n("map.t_r_points", m.t_r_points, 1, 10_000)?;
    check_n("map.a_min_points", m.a_min_points, 1, 10_000)?;
    check_n("run.workers", cfg.workers, 0, 4096)?;
    Ok(())
}

/// `n` evenly spaced values covering `[lo, hi]`; a single point sits at `lo`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|k| if k + 1 == n { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect()
}

impl RunConfig {
    pub fn mass(&self) -> f64 {
        self.physical.mass.unwrap_or_else(|| self.physical.species.mass())
    }

    pub fn physical_params(&self) -> PhysicalParams {
        let t = &self.trajectory;
        PhysicalParams {
            omega_x: self.physical.omega_x,
            omega_p: self.physical.omega_p,
            mass: self.mass(),
            a_t: self.physical.a_t_bohr * constants::BOHR_RADIUS,
            a_max: t.a_max,
            a_min: t.a_min,
            t_r: t.t_r,
            t_i: t.t_i,
            ramp: t.ramp,
        }
    }

    pub fn model(&self) -> Result<DimensionlessModel> {
        derive_dimensionless(&self.physical_params())
    }

    pub fn trajectory(&self) -> Result<TrapTrajectory> {
        let t = &self.trajectory;
        TrapTrajectory::new(t.a_max, t.a_min, t.t_r, t.t_i, t.ramp)
    }

    pub fn propagation_settings(&self) -> crate::propagator::PropagationSettings {
        crate::propagator::PropagationSettings {
            tolerance: self.integrator.tolerance,
            include_couplings: self.integrator.derivative_couplings,
            samples: self.integrator.samples,
        }
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        linspace(self.sweep.a_t_min, self.sweep.a_t_max, self.sweep.points)
    }

    pub fn map_axes(&self) -> (Vec<f64>, Vec<f64>) {
        let m = &self.map;
        (linspace(m.t_r_min, m.t_r_max, m.t_r_points), linspace(m.a_min_min, m.a_min_max, m.a_min_points))
    }
}
