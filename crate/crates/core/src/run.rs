//! Experiment orchestration and artifact emission.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::fs::{self, File};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use crate::config::{ExperimentKind, RunConfig};
use crate::correlations::{bosonic_entropy, correlation_trace, slater_spectrum, takagi, CorrelationRow};
use crate::error::{GateError, Result};
use crate::gate_analysis::{
    averaged_fidelity, fidelity_map_with, process_overlap, reconstruct_gate, sqrt_swap, sweep_scattering, universality_suite,
    MapPoint,
};
use crate::grid_oracle::{init_grid_state, project_onto_basis, split_step_evolve, write_frame, Grid2D, OracleSettings};
use crate::hamiltonian::HamiltonianTable;
use crate::physical_model::DimensionlessModel;
use crate::propagator::{population_trace, populations, propagate, remove_trivial_phase, PopulationRow};
use crate::sp_basis::{analytic_parity_functions, build_orthonormal_basis, QuadratureGrid, GRID_MARGIN};
use crate::tp_basis::{computational_embedding, enumerate_basis, ComputationalLabel, TwoParticleBasis};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Also write the single- and two-particle basis at `a_max`.
    pub dump_basis: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Value,
    /// False when a verification check failed; errors are reported through `Err`.
    pub passed: bool,
}

/// Twelve significant digits.
pub fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        format!("{v}")
    }
}

fn round12(v: f64) -> f64 {
    if v.is_finite() {
        fmt_num(v).parse().unwrap_or(v)
    } else {
        v
    }
}

fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n.as_f64().map(|f| json!(round12(f))).unwrap_or(Value::Number(n)),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&round_json(v.clone()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn nums(values: &[f64]) -> Vec<String> {
    values.iter().map(|v| fmt_num(*v)).collect()
}

fn population_rows(rows: &[PopulationRow]) -> Vec<Vec<String>> {
    rows.iter().map(|r| nums(&r.values())).collect()
}

fn correlation_rows(rows: &[CorrelationRow]) -> Vec<Vec<String>> {
    rows.iter()
        .map(|r| {
            vec![
                fmt_num(r.time),
                fmt_num(r.s_b_half),
                r.slater_rank.to_string(),
                fmt_num(r.s_projected),
                fmt_num(r.p_single),
                fmt_num(r.s_projected_weighted),
                fmt_num(r.s_occupation),
            ]
        })
        .collect()
}

fn quadrature(cfg: &RunConfig, a_max: f64) -> Result<QuadratureGrid> {
    match cfg.basis.quadrature_points {
        0 => QuadratureGrid::for_separation(a_max),
        m => QuadratureGrid::new(a_max + GRID_MARGIN, m),
    }
}

fn table(cfg: &RunConfig, basis: &TwoParticleBasis, lo: f64, hi: f64) -> Result<HamiltonianTable> {
    let grid = quadrature(cfg, hi)?;
    let knots = if hi > lo { (((hi - lo) / cfg.basis.knot_spacing).ceil() as usize + 1).max(4) } else { 1 };
    HamiltonianTable::build(basis, lo, hi, knots, &grid, cfg.basis.fd_step)
}

struct Context<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    model: DimensionlessModel,
    basis: TwoParticleBasis,
}

/// Runs the configured experiment inside a worker pool of the configured size.
pub fn run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| GateError::invalid("run.workers", e.to_string()))?;
    pool.install(|| run_serial(cfg, opts))
}

fn run_serial(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let start = Instant::now();
    crate::config::validate(cfg)?;
    fs::create_dir_all(&cfg.output)?;
    let model = cfg.model()?;
    let ctx = Context { cfg, out: cfg.output.clone(), model, basis: enumerate_basis(cfg.basis.n_sp)? };
    if opts.dump_basis {
        dump_basis(&ctx)?;
    }
    let outcome = match cfg.kind {
        ExperimentKind::Gate => gate(&ctx),
        ExperimentKind::SweepScattering => sweep(&ctx),
        ExperimentKind::FidelityMap => map(&ctx),
        ExperimentKind::EntanglementTrace => entanglement(&ctx),
        ExperimentKind::Snapshots => snapshots(&ctx),
        ExperimentKind::Verify => verify(&ctx),
    };
    let (results, passed, error) = match outcome {
        Ok((r, p)) => (r, p, None),
        Err((r, e)) => (r, false, Some(e)),
    };
    let traj = &ctx.model.trajectory;
    let mut manifest = json!({
        "version": VERSION,
        "kind": cfg.kind.as_str(),
        "config": cfg,
        "derived": {
            "g": ctx.model.g,
            "alpha_inv_m": ctx.model.alpha_inv,
            "duration": traj.total_time(),
            "duration_s": traj.total_time() / cfg.physical.omega_x,
            "basis_dim": ctx.basis.dim(),
        },
        "results": results,
        "passed": passed,
        "wall_time_s": start.elapsed().as_secs_f64(),
    });
    if let Some(e) = &error {
        manifest["error"] = json!({ "category": e.category(), "message": e.to_string() });
    }
    write_json(&ctx.out.join("manifest.json"), &manifest)?;
    match error {
        Some(e) => Err(e),
        None => Ok(RunOutcome { manifest, passed }),
    }
}

type Experiment = std::result::Result<(Value, bool), (Value, GateError)>;

fn fail(e: GateError) -> (Value, GateError) {
    (Value::Null, e)
}

fn dump_basis(ctx: &Context) -> Result<()> {
    let a = ctx.model.trajectory.a_max;
    let grid = quadrature(ctx.cfg, a)?;
    let sp = build_orthonormal_basis(ctx.cfg.basis.n_sp, a, &grid)?;
    let mut header = vec!["x".to_string()];
    header.extend((0..sp.n_sp()).map(|m| {
        let (level, side) = sp.mode(m);
        format!("{level}{side:?}")
    }));
    let rows = grid.nodes().iter().enumerate().map(|(k, &x)| {
        let mut r = vec![fmt_num(x)];
        r.extend(sp.mode_values().iter().map(|v| fmt_num(v[k])));
        r
    });
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&ctx.out.join("sp_basis.csv"), &header, rows)?;
    write_json(&ctx.out.join("tp_basis.json"), &ctx.basis.metadata())
}

fn gate(ctx: &Context) -> Experiment {
    let traj = ctx.model.trajectory;
    let t = table(ctx.cfg, &ctx.basis, traj.a_min, traj.a_max).map_err(fail)?;
    let coupled = t.for_coupling(ctx.model.g).map_err(fail)?;
    let run = reconstruct_gate(&ctx.model, &ctx.basis, &coupled, &ctx.cfg.propagation_settings()).map_err(fail)?;
    let u = &run.gate.u;
    let mut rows = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            let z = u[(i, j)];
            rows.push(vec![
                ComputationalLabel::ALL[i].to_string(),
                ComputationalLabel::ALL[j].to_string(),
                fmt_num(z.re),
                fmt_num(z.im),
                fmt_num(z.norm()),
                fmt_num(z.arg()),
            ]);
        }
    }
    let io = |e: GateError| fail(e);
    write_csv(&ctx.out.join("gate.csv"), &["out", "in", "re", "im", "abs", "arg"], rows).map_err(io)?;
    let mut finals = Vec::new();
    for (label, r) in ComputationalLabel::ALL.iter().zip(&run.propagations) {
        let trace = population_trace(&ctx.basis, r).map_err(io)?;
        write_csv(&ctx.out.join(format!("populations_{label}.csv")), &PopulationRow::HEADER, population_rows(&trace))
            .map_err(io)?;
    }
    for (label, p) in ComputationalLabel::ALL.iter().zip(&run.final_populations) {
        let mut r = vec![label.to_string()];
        r.extend(nums(&p.values()[1..]));
        finals.push(r);
    }
    let mut header = vec!["input"];
    header.extend(&PopulationRow::HEADER[1..]);
    write_csv(&ctx.out.join("final_populations.csv"), &header, finals).map_err(io)?;
    let target = sqrt_swap();
    let results = json!({
        "fidelity": averaged_fidelity(&run.gate, &target),
        "process_overlap": process_overlap(&run.gate, &target),
        "fidelity_conjugate": averaged_fidelity(&run.gate, &target.map(|z| z.conj())),
        "leakage": run.gate.leakage,
        "unitarity_defect": run.gate.unitarity_defect(),
        "global_phase": run.global_phase,
        "gate": run.gate.rows(),
        "split_01": { "p01": u[(1, 1)].norm_sqr(), "p10": u[(2, 1)].norm_sqr(), "arg01": u[(1, 1)].arg(), "arg10": u[(2, 1)].arg() },
        "norm_drift": run.propagations.iter().map(|r| r.norm_drift).collect::<Vec<_>>(),
        "integrator": run.propagations.iter().map(|r| r.stats).collect::<Vec<_>>(),
    });
    Ok((results, true))
}

fn sweep(ctx: &Context) -> Experiment {
    let traj = ctx.model.trajectory;
    let t = table(ctx.cfg, &ctx.basis, traj.a_min, traj.a_max).map_err(fail)?;
    let values = ctx.cfg.sweep_values();
    let points = sweep_scattering(&ctx.cfg.physical_params(), &values, &ctx.basis, &t, &ctx.cfg.propagation_settings())
        .map_err(fail)?;
    let header = [
        "a_t_bohr", "g", "from01_p01", "from01_p10", "from01_double", "from01_p02+", "from11_p11", "from11_double",
        "from11_p02+", "from11_p02+_max", "error",
    ];
    let rows = points.iter().map(|p| {
        let mut r = nums(&[
            p.a_t_bohr,
            p.g,
            p.from01_p01,
            p.from01_p10,
            p.from01_double,
            p.from01_p02,
            p.from11_p11,
            p.from11_double,
            p.from11_p02,
            p.from11_p02_max,
        ]);
        r.push(p.error.clone().unwrap_or_default());
        r
    });
    // Written before any failure is reported so that completed points survive.
    write_csv(&ctx.out.join("sweep.csv"), &header, rows).map_err(fail)?;
    let failed: Vec<&str> = points.iter().filter_map(|p| p.error.as_deref()).collect();
    let results = json!({ "points": points.len(), "failed": failed.len() });
    match failed.first() {
        Some(msg) => Err((results, GateError::Stability(format!("{} sweep point(s) failed; first: {msg}", failed.len())))),
        None => Ok((results, true)),
    }
}

const CHECKPOINT: &str = "map_checkpoint.csv";
const CHECKPOINT_CONFIG: &str = "map_checkpoint.json";
const MAP_HEADER: [&str; 9] = ["i", "j", "t_r", "a_min", "t_i", "fidelity", "process_overlap", "fidelity_conjugate", "max_leakage"];

fn map_values(p: &MapPoint) -> [f64; 7] {
    [p.t_r, p.a_min, p.t_i, p.fidelity, p.process_overlap, p.fidelity_conjugate, p.max_leakage]
}

/// Points from a previous interrupted run with an identical configuration.
fn load_checkpoint(out: &Path, signature: &str) -> HashMap<(usize, usize), MapPoint> {
    let mut done = HashMap::new();
    if fs::read_to_string(out.join(CHECKPOINT_CONFIG)).ok().as_deref() != Some(signature) {
        return done;
    }
    let Ok(mut r) = csv::Reader::from_path(out.join(CHECKPOINT)) else { return done };
    for rec in r.records().flatten() {
        let f: Vec<f64> = rec.iter().skip(2).filter_map(|s| s.parse().ok()).collect();
        let (Some(i), Some(j)) = (rec.get(0).and_then(|s| s.parse().ok()), rec.get(1).and_then(|s| s.parse().ok())) else {
            continue;
        };
        if f.len() == 7 {
            let p = MapPoint {
                t_r: f[0],
                a_min: f[1],
                t_i: f[2],
                fidelity: f[3],
                process_overlap: f[4],
                fidelity_conjugate: f[5],
                max_leakage: f[6],
            };
            done.insert((i, j), p);
        }
    }
    done
}

fn map(ctx: &Context) -> Experiment {
    let (t_r, a_min) = ctx.cfg.map_axes();
    let a_lo = a_min.iter().copied().fold(ctx.model.trajectory.a_min, f64::min);
    let t = table(ctx.cfg, &ctx.basis, a_lo, ctx.model.trajectory.a_max).map_err(fail)?;
    let coupled = t.for_coupling(ctx.model.g).map_err(fail)?;
    let signature = serde_json::to_string(ctx.cfg).map_err(|e| fail(e.into()))?;
    let done = load_checkpoint(&ctx.out, &signature);
    let restored = done.len();
    let cp_path = ctx.out.join(CHECKPOINT);
    let fresh = restored == 0 || !cp_path.exists();
    let file = fs::OpenOptions::new().create(true).append(!fresh).write(true).truncate(fresh).open(&cp_path);
    let file = file.map_err(|e| fail(e.into()))?;
    let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    if fresh {
        writer.write_record(MAP_HEADER).map_err(|e| fail(e.into()))?;
        writer.flush().map_err(|e| fail(e.into()))?;
        fs::write(ctx.out.join(CHECKPOINT_CONFIG), &signature).map_err(|e| fail(e.into()))?;
    }
    let writer = Mutex::new(writer);
    let on_point = |i: usize, j: usize, p: &MapPoint| {
        let mut rec = vec![i.to_string(), j.to_string()];
        rec.extend(map_values(p).iter().map(|v| format!("{v:e}")));
        let mut w = writer.lock().expect("checkpoint writer");
        // A lost checkpoint line only costs recomputation.
        let _ = w.write_record(&rec).and_then(|_| w.flush().map_err(Into::into));
    };
    let fmap = fidelity_map_with(
        &ctx.model,
        &t_r,
        &a_min,
        ctx.model.trajectory.t_i,
        &ctx.basis,
        &coupled,
        &ctx.cfg.propagation_settings(),
        &|i, j| done.get(&(i, j)).copied(),
        &on_point,
    )
    .map_err(fail)?;
    let rows = fmap.points.iter().enumerate().flat_map(|(i, row)| {
        row.iter().enumerate().map(move |(j, p)| {
            let mut r = vec![i.to_string(), j.to_string()];
            r.extend(nums(&map_values(p)));
            r
        })
    });
    write_csv(&ctx.out.join("map.csv"), &MAP_HEADER, rows).map_err(fail)?;
    let mut header = vec!["t_r \\ a_min".to_string()];
    header.extend(a_min.iter().map(|a| fmt_num(*a)));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let grid_rows = fmap.points.iter().zip(&t_r).map(|(row, tr)| {
        let mut r = vec![fmt_num(*tr)];
        r.extend(row.iter().map(|p| fmt_num(p.fidelity)));
        r
    });
    write_csv(&ctx.out.join("fidelity_grid.csv"), &header, grid_rows).map_err(fail)?;
    let failed = fmap.points.iter().flatten().filter(|p| !p.fidelity.is_finite()).count();
    let best = fmap.best().map(|(i, j, p)| json!({ "i": i, "j": j, "point": p }));
    let results = json!({ "t_i": fmap.t_i, "cells": t_r.len() * a_min.len(), "restored": restored, "failed": failed, "best": best });
    if failed > 0 {
        return Err((results, GateError::Stability(format!("{failed} map point(s) failed"))));
    }
    Ok((results, true))
}

fn entanglement(ctx: &Context) -> Experiment {
    let traj = ctx.model.trajectory;
    let t = table(ctx.cfg, &ctx.basis, traj.a_min, traj.a_max).map_err(fail)?;
    let coupled = t.for_coupling(ctx.model.g).map_err(fail)?;
    let v = computational_embedding(&ctx.basis, ctx.cfg.input).map_err(fail)?;
    let r = propagate(&v, &ctx.model, &coupled, &ctx.cfg.propagation_settings()).map_err(fail)?;
    let corr = correlation_trace(&ctx.basis, &r).map_err(fail)?;
    write_csv(&ctx.out.join("correlations.csv"), &CorrelationRow::HEADER, correlation_rows(&corr)).map_err(fail)?;
    let pops = population_trace(&ctx.basis, &r).map_err(fail)?;
    write_csv(&ctx.out.join("populations.csv"), &PopulationRow::HEADER, population_rows(&pops)).map_err(fail)?;
    let first = corr.first().expect("samples");
    let last = corr.last().expect("samples");
    let peak = corr.iter().fold(first, |m, c| if c.s_occupation > m.s_occupation { c } else { m });
    let results = json!({
        "input": ctx.cfg.input,
        "start": first,
        "end": last,
        "occupation_entropy_max": { "time": peak.time, "value": peak.s_occupation },
        "norm_drift": r.norm_drift,
    });
    Ok((results, true))
}

#[derive(Serialize)]
struct FrameInfo {
    file: String,
    time: f64,
    separation: f64,
    norm: f64,
}

fn snapshots(ctx: &Context) -> Experiment {
    let cfg = ctx.cfg;
    let traj = ctx.model.trajectory;
    let q = quadrature(cfg, traj.a_max).map_err(fail)?;
    let sp = build_orthonormal_basis(cfg.basis.n_sp, traj.a_max, &q).map_err(fail)?;
    let grid = Grid2D::new(cfg.oracle.points, traj.a_max + cfg.oracle.margin).map_err(fail)?;
    let w = init_grid_state(cfg.input, &ctx.basis, &sp, grid).map_err(fail)?;
    let total = traj.total_time();
    let times = crate::config::linspace(0.0, total, cfg.oracle.frames.max(2));
    let settings = OracleSettings { dt: cfg.oracle.dt, ..Default::default() };
    let (end, snaps) = split_step_evolve(&w, &ctx.model, total, &settings, &times).map_err(fail)?;
    let dir = ctx.out.join("frames");
    fs::create_dir_all(&dir).map_err(|e| fail(e.into()))?;
    let h2 = grid.spacing() * grid.spacing();
    let mut frames = Vec::new();
    for (k, s) in snaps.iter().enumerate() {
        let name = format!("frame_{k:03}.bin");
        let f = File::create(dir.join(&name)).map_err(|e| fail(e.into()))?;
        write_frame(std::io::BufWriter::new(f), &grid, &s.density).map_err(fail)?;
        frames.push(FrameInfo { file: name, time: s.time, separation: s.separation, norm: s.density.iter().sum::<f64>() * h2 });
    }
    let (v, residual) = project_onto_basis(&end, &ctx.basis, &sp).map_err(fail)?;
    let v = remove_trivial_phase(&ctx.basis, &v, end.time);
    let p = populations(&ctx.basis, &v).map_err(fail)?;
    let index = json!({ "points": grid.points, "half_width": grid.half_width, "spacing": grid.spacing(), "frames": frames });
    write_json(&dir.join("frames.json"), &index).map_err(fail)?;
    let results = json!({
        "input": cfg.input,
        "frames": snaps.len(),
        "grid": grid,
        "dt": settings.dt,
        "final_norm": end.norm_sqr(),
        "exchange_asymmetry": end.exchange_asymmetry(),
        "projection_residual": residual,
        "final_populations": p,
    });
    Ok((results, true))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyCheck {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

fn check(name: impl Into<String>, value: f64, threshold: f64) -> VerifyCheck {
    VerifyCheck { name: name.into(), value, threshold, passed: value.is_finite() && value <= threshold }
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m = (&m + m.transpose()) * Complex64::new(0.5, 0.0);
    m
}

/// Basis orthonormality and closed forms, gate algebra, Takagi roundtrips and
/// the entanglement of a computational input.
pub fn verification_checks() -> Result<Vec<VerifyCheck>> {
    let mut out = Vec::new();
    for a in [0.5, 1.0, 1.99, 5.0, 10.0] {
        let grid = QuadratureGrid::for_separation(a)?;
        let sp = build_orthonormal_basis(8, a, &grid)?;
        let gram = sp.gram_matrix(&grid);
        let mut worst: f64 = 0.0;
        for (i, row) in gram.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((v - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        out.push(check(format!("orthonormal basis at a = {a}"), worst, 1e-10));
        let mut worst: f64 = 0.0;
        for &x in grid.nodes().iter().step_by(5) {
            let exact = analytic_parity_functions(a, x)?;
            let num = [
                sp.evaluate_parity(0, true, x),
                sp.evaluate_parity(0, false, x),
                sp.evaluate_parity(1, true, x),
                sp.evaluate_parity(1, false, x),
            ];
            worst = exact.iter().zip(&num).fold(worst, |w, (e, n)| w.max((e - n).abs()));
        }
        out.push(check(format!("closed-form parity states at a = {a}"), worst, 1e-9));
    }
    for c in universality_suite() {
        out.push(check(c.name, c.residual, crate::gate_analysis::ALGEBRA_TOLERANCE));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut recon, mut unit): (f64, f64) = (0.0, 0.0);
    for k in 0..200 {
        let v = random_symmetric(&mut rng, 4 + k % 9);
        let (t, lambda) = takagi(&v)?;
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(lambda.len(), lambda.iter().map(|l| Complex64::new(*l, 0.0))));
        recon = recon.max((&t * d * t.transpose() - &v).camax());
        unit = unit.max((t.adjoint() * &t - DMatrix::identity(t.nrows(), t.ncols())).camax());
    }
    out.push(check("Takagi reconstruction (200 random matrices)", recon, 1e-10));
    out.push(check("Takagi unitarity (200 random matrices)", unit, 1e-10));
    let basis = enumerate_basis(8)?;
    let s = bosonic_entropy(&slater_spectrum(&computational_embedding(&basis, ComputationalLabel::Q01)?, &basis)?)?;
    out.push(check("S_B of |01> equals 1", (s - 1.0).abs(), 1e-6));
    Ok(out)
}

fn verify(ctx: &Context) -> Experiment {
    let checks = verification_checks().map_err(fail)?;
    let all = checks.iter().all(|c| c.passed);
    println!("{:<48} {:>14} {:>10}  result", "check", "value", "threshold");
    for c in &checks {
        println!("{:<48} {:>14.3e} {:>10.0e}  {}", c.name, c.value, c.threshold, if c.passed { "pass" } else { "FAIL" });
    }
    let rows = checks.iter().map(|c| vec![c.name.clone(), fmt_num(c.value), fmt_num(c.threshold), c.passed.to_string()]);
    write_csv(&ctx.out.join("verify.csv"), &["check", "value", "threshold", "passed"], rows).map_err(fail)?;
    Ok((json!({ "checks": checks }), all))
}
