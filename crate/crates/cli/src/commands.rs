//! Each command splits into a `plan_*` step, which does all validation and
//! touches nothing but the config and its inputs, and a run step.

use std::path::{Path, PathBuf};

use subradiance::fitting::{fit_g2_with, normalize_histogram, FitOptions, FitParams, FitReport, Histogram};
use subradiance::sweep::{evaluate_observables, run_sweep, Observable, SweepSpec};
use subradiance::{
    correlation_curve, dicke_populations, evolve, steady_state, CorrelationKind, DensityMatrix, LiouvillianMap,
    SpaceDescriptor, SystemParams,
};

use crate::config::{time_grid, InitialState, RunConfig};
use crate::error::{invalid, CliError};
use crate::output::{emit, format_float, sidecar_path, sweep_csv, sweep_sidecar, write_file};

fn csv_line(values: impl IntoIterator<Item = f64>) -> String {
    let mut line = values.into_iter().map(format_float).collect::<Vec<_>>().join(",");
    line.push('\n');
    line
}

fn warn_cutoff(rho: &DensityMatrix) {
    if rho.violates_cutoff() {
        eprintln!(
            "warning: steady state puts {:.3e} in the top Fock level; raise fock_cutoff",
            rho.top_fock_population()
        );
    }
}

fn model(cfg: &RunConfig) -> Result<(SpaceDescriptor, SystemParams), CliError> {
    let m = cfg.model()?;
    Ok((m.space()?, m.params()))
}

pub struct SteadyPlan {
    space: SpaceDescriptor,
    params: SystemParams,
    observables: Vec<Observable>,
}

pub fn plan_steady(cfg: &RunConfig) -> Result<SteadyPlan, CliError> {
    let (space, params) = model(cfg)?;
    let n = space.n_emitters();
    let observables = match &cfg.steady {
        Some(s) => s.observables.clone(),
        None if n == 2 => Observable::ALL.to_vec(),
        None => vec![Observable::Cooperativity, Observable::G2Zero],
    };
    if observables.is_empty() {
        return Err(invalid("steady: no observables requested"));
    }
    if n != 2 {
        if let Some(o) = observables.iter().find(|o| o.needs_dicke()) {
            return Err(invalid(format!(
                "steady: {} needs the two-emitter Dicke basis, model has N = {n}",
                o.as_str()
            )));
        }
    }
    Ok(SteadyPlan { space, params, observables })
}

pub fn run_steady(plan: &SteadyPlan) -> Result<String, CliError> {
    let l = LiouvillianMap::build(plan.space, &plan.params)?;
    let rho = steady_state(&l)?;
    let (values, status, message) = evaluate_observables(&rho, &plan.observables)?;
    if let Some(m) = message {
        eprintln!("note: {m}");
    }
    let mut header: Vec<&str> = plan.observables.iter().map(|o| o.as_str()).collect();
    header.extend(["top_fock_population", "status"]);
    let mut out = header.join(",");
    out.push('\n');
    let mut line = csv_line(values.into_iter().chain([rho.top_fock_population()]));
    line.pop();
    out += &format!("{line},{}\n", status.as_str());
    Ok(out)
}

pub struct EvolvePlan {
    space: SpaceDescriptor,
    params: SystemParams,
    times: Vec<f64>,
    rho0: DensityMatrix,
}

pub fn plan_evolve(cfg: &RunConfig) -> Result<EvolvePlan, CliError> {
    let (space, params) = model(cfg)?;
    let e = cfg.evolve.as_ref().ok_or_else(|| invalid("config has no `evolve` block"))?;
    if space.n_emitters() != 2 {
        return Err(invalid(format!("evolve reports Dicke populations and needs N = 2, got {}", space.n_emitters())));
    }
    let times = time_grid(e.t_max, e.points, "evolve.t_max")?;
    let rho0 = match &e.initial_state {
        InitialState::Ground => DensityMatrix::basis(space, 0, 0),
        InitialState::FullyExcited => DensityMatrix::basis(space, (1 << space.n_emitters()) - 1, 0),
        InitialState::CustomDiagonal(p) => DensityMatrix::diagonal(space, p),
    }
    .map_err(|err| invalid(format!("evolve.initial_state: {err}")))?;
    Ok(EvolvePlan { space, params, times, rho0 })
}

pub fn run_evolve(plan: &EvolvePlan) -> Result<String, CliError> {
    let l = LiouvillianMap::build(plan.space, &plan.params)?;
    let traj = evolve(&l, &plan.rho0, &plan.times)?;
    let mut out = String::from("time,p_gg,p_ee,p_plus,p_minus\n");
    for (t, rho) in traj.times.iter().zip(&traj.states) {
        let p = dicke_populations(rho)?;
        out += &csv_line([*t, p.p_gg, p.p_ee, p.p_plus, p.p_minus]);
    }
    Ok(out)
}

pub struct G2Plan {
    space: SpaceDescriptor,
    params: SystemParams,
    delays: Vec<f64>,
    kind: CorrelationKind,
}

pub fn plan_g2(cfg: &RunConfig) -> Result<G2Plan, CliError> {
    let (space, params) = model(cfg)?;
    let g = cfg.g2.as_ref().ok_or_else(|| invalid("config has no `g2` block"))?;
    let delays = time_grid(g.tau_max, g.points, "g2.tau_max")?;
    Ok(G2Plan { space, params, delays, kind: g.kind })
}

pub fn run_g2(plan: &G2Plan) -> Result<String, CliError> {
    let l = LiouvillianMap::build(plan.space, &plan.params)?;
    let rho = steady_state(&l)?;
    warn_cutoff(&rho);
    let curve = correlation_curve(&l, &rho, &plan.delays, plan.kind)?;
    let mut out = String::from("delay,g2\n");
    for (t, v) in curve.delays.iter().zip(&curve.values) {
        out += &csv_line([*t, *v]);
    }
    Ok(out)
}

pub fn plan_sweep(cfg: &RunConfig) -> Result<SweepSpec, CliError> {
    let spec = cfg.sweep.clone().ok_or_else(|| invalid("config has no `sweep` block"))?;
    spec.validate().map_err(|e| invalid(e.to_string()))?;
    Ok(spec)
}

/// Writes the CSV to `out` (or stdout) and, with a file target, the JSON
/// sidecar next to it.
pub fn run_sweep_command(spec: &SweepSpec, out: Option<&Path>) -> Result<(), CliError> {
    let result = run_sweep(spec, None)?;
    emit(out, &sweep_csv(&result)?)?;
    if let Some(path) = out {
        write_file(&sidecar_path(path), sweep_sidecar(&result)?.as_bytes())?;
    }
    let total: f64 = result.rows.iter().map(|r| r.wall_time_s).sum();
    eprintln!("{} points, {:.3} s summed point time", result.rows.len(), total);
    Ok(())
}

pub struct FitPlan {
    histogram: Histogram,
    init: Option<FitParams>,
    options: FitOptions,
}

pub fn plan_fit(cfg: &RunConfig, config_dir: &Path) -> Result<FitPlan, CliError> {
    let f = cfg.fit.as_ref().ok_or_else(|| invalid("config has no `fit` block"))?;
    let path: PathBuf = if f.data.is_absolute() { f.data.clone() } else { config_dir.join(&f.data) };
    let raw = Histogram::from_csv_path(&path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
    let histogram = match f.normalization_window {
        Some(w) => normalize_histogram(&raw, w).map_err(|e| invalid(format!("fit.normalization_window: {e}")))?,
        None => Histogram::from_normalized(raw.delays, raw.counts).map_err(|e| invalid(e.to_string()))?,
    };
    if let Some(s) = f.irf_sigma {
        if !(s > 0.0 && s.is_finite()) {
            return Err(invalid(format!("fit.irf_sigma must be positive, got {s}")));
        }
    }
    let init = f.init.map(|s| s.params());
    if let Some(p) = &init {
        p.validate().map_err(|e| invalid(format!("fit.init: {e}")))?;
    }
    Ok(FitPlan { histogram, init, options: FitOptions { irf_sigma: f.irf_sigma } })
}

pub fn run_fit(plan: &FitPlan) -> Result<FitReport, CliError> {
    Ok(fit_g2_with(&plan.histogram, plan.init.as_ref(), &plan.options)?)
}
