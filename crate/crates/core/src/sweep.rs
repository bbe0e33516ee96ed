//! Parameter grids over `(κ, P, γ, g, N)`, peak search in `κ`, and
//! population trajectories.
//!
//! Every grid point is an independent task keyed by its flat index; rows are
//! assembled in index order so the output does not depend on the worker
//! count.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, g2_zero_of, CorrelationKind};
use crate::error::{Error, Result};
use crate::liouvillian::{LiouvillianMap, SystemParams};
use crate::observables::{cooperativity, dicke_populations, population_contrast, DickePopulations};
use crate::space::SpaceDescriptor;
use crate::state::DensityMatrix;
use crate::steady::steady_state;

/// Largest emitter count a sweep may request.
pub const MAX_SWEEP_EMITTERS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisName {
    Kappa,
    Pump,
    Dephasing,
    Coupling,
    NEmitters,
}

impl AxisName {
    pub fn as_str(self) -> &'static str {
        match self {
            AxisName::Kappa => "kappa",
            AxisName::Pump => "pump",
            AxisName::Dephasing => "dephasing",
            AxisName::Coupling => "coupling",
            AxisName::NEmitters => "n_emitters",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Log,
    Linear,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub name: AxisName,
    pub scale: Scale,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub fn log(name: AxisName, min: f64, max: f64, points: usize) -> Self {
        Self { name, scale: Scale::Log, min, max, points }
    }

    pub fn linear(name: AxisName, min: f64, max: f64, points: usize) -> Self {
        Self { name, scale: Scale::Linear, min, max, points }
    }

    /// Grid values; the endpoints are exactly `min` and `max`.
    pub fn values(&self) -> Vec<f64> {
        let last = self.points.saturating_sub(1).max(1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    return self.min;
                }
                if i + 1 == self.points {
                    return self.max;
                }
                let f = i as f64 / last;
                match self.scale {
                    Scale::Linear => self.min + (self.max - self.min) * f,
                    Scale::Log => 10f64.powf(self.min.log10() + (self.max.log10() - self.min.log10()) * f),
                }
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSweep(format!("axis {}: {msg}", self.name.as_str())));
        if self.points < 2 {
            return bad(format!("needs at least 2 points, got {}", self.points));
        }
        if !self.min.is_finite() || !self.max.is_finite() || self.max < self.min {
            return bad(format!("invalid bounds [{}, {}]", self.min, self.max));
        }
        if self.scale == Scale::Log && !(self.min > 0.0) {
            return bad("log-scale bounds must be positive".into());
        }
        if self.min < 0.0 {
            return bad("rates must be non-negative".into());
        }
        if self.name == AxisName::NEmitters {
            for v in self.values() {
                if (v - v.round()).abs() > 1e-9 || v < 1.0 || v.round() as usize > MAX_SWEEP_EMITTERS {
                    return bad(format!("n_emitters values must be integers in 1..={MAX_SWEEP_EMITTERS}, got {v}"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    PGg,
    PEe,
    PPlus,
    PMinus,
    Contrast,
    Cooperativity,
    G2Zero,
}

impl Observable {
    pub const ALL: [Observable; 7] = [
        Observable::PGg,
        Observable::PEe,
        Observable::PPlus,
        Observable::PMinus,
        Observable::Contrast,
        Observable::Cooperativity,
        Observable::G2Zero,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Observable::PGg => "p_gg",
            Observable::PEe => "p_ee",
            Observable::PPlus => "p_plus",
            Observable::PMinus => "p_minus",
            Observable::Contrast => "contrast",
            Observable::Cooperativity => "cooperativity",
            Observable::G2Zero => "g2_zero",
        }
    }

    /// Needs the two-emitter Dicke decomposition.
    pub fn needs_dicke(self) -> bool {
        matches!(
            self,
            Observable::PGg | Observable::PEe | Observable::PPlus | Observable::PMinus | Observable::Contrast
        )
    }
}

/// Parameters held constant across a sweep. Detunings are one common value
/// so that they broadcast over an `n_emitters` axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FixedParams {
    pub coupling: f64,
    pub kappa: f64,
    pub pump: f64,
    pub dephasing: f64,
    pub gamma_r: f64,
    pub detuning: f64,
}

impl Default for FixedParams {
    fn default() -> Self {
        Self { coupling: 1.0, kappa: 0.0, pump: 0.0, dephasing: 0.0, gamma_r: 0.0, detuning: 0.0 }
    }
}

impl FixedParams {
    pub fn to_params(&self, n_emitters: usize) -> SystemParams {
        SystemParams {
            coupling: self.coupling,
            kappa: self.kappa,
            pump: self.pump,
            dephasing: self.dephasing,
            gamma_r: self.gamma_r,
            detunings: vec![self.detuning; n_emitters],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub fixed: FixedParams,
    #[serde(default = "default_emitters")]
    pub n_emitters: usize,
    pub observables: Vec<Observable>,
    #[serde(default = "default_cutoff")]
    pub fock_cutoff: usize,
}

fn default_emitters() -> usize {
    2
}

fn default_cutoff() -> usize {
    3
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() || self.axes.len() > 2 {
            return Err(Error::InvalidSweep(format!("expected 1 or 2 axes, got {}", self.axes.len())));
        }
        if self.axes.len() == 2 && self.axes[0].name == self.axes[1].name {
            return Err(Error::InvalidSweep(format!("duplicate axis {}", self.axes[0].name.as_str())));
        }
        self.axes.iter().try_for_each(Axis::validate)?;
        if self.observables.is_empty() {
            return Err(Error::InvalidSweep("no observables requested".into()));
        }
        for (i, o) in self.observables.iter().enumerate() {
            if self.observables[..i].contains(o) {
                return Err(Error::InvalidSweep(format!("observable {} listed twice", o.as_str())));
            }
        }
        if self.fock_cutoff == 0 {
            return Err(Error::InvalidSweep("fock_cutoff must be at least 1".into()));
        }
        let emitter_counts: Vec<usize> = match self.axes.iter().find(|a| a.name == AxisName::NEmitters) {
            Some(a) => a.values().iter().map(|v| v.round() as usize).collect(),
            None => vec![self.n_emitters],
        };
        for &n in &emitter_counts {
            if n == 0 || n > MAX_SWEEP_EMITTERS {
                return Err(Error::InvalidSweep(format!("n_emitters must be in 1..={MAX_SWEEP_EMITTERS}, got {n}")));
            }
            if n != 2 && self.observables.iter().any(|o| o.needs_dicke()) {
                return Err(Error::UnsupportedEmitterCount(n));
            }
            SpaceDescriptor::new(n, self.fock_cutoff)?;
        }
        self.fixed.to_params(self.n_emitters).validate(self.n_emitters)
    }

    pub fn grid_size(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    /// Axis values of the point with flat index `k` (last axis fastest).
    pub fn point(&self, k: usize) -> Vec<f64> {
        let mut rem = k;
        let mut out = vec![0.0; self.axes.len()];
        for (slot, axis) in self.axes.iter().enumerate().rev() {
            out[slot] = axis.values()[rem % axis.points];
            rem /= axis.points;
        }
        out
    }

    /// Space and parameters at the given axis values.
    pub fn resolve(&self, values: &[f64]) -> Result<(SpaceDescriptor, SystemParams)> {
        let n = self
            .axes
            .iter()
            .zip(values)
            .find(|(a, _)| a.name == AxisName::NEmitters)
            .map_or(self.n_emitters, |(_, v)| v.round() as usize);
        let mut p = self.fixed.to_params(n);
        for (axis, &v) in self.axes.iter().zip(values) {
            match axis.name {
                AxisName::Kappa => p.kappa = v,
                AxisName::Pump => p.pump = v,
                AxisName::Dephasing => p.dephasing = v,
                AxisName::Coupling => p.coupling = v,
                AxisName::NEmitters => {}
            }
        }
        Ok((SpaceDescriptor::new(n, self.fock_cutoff)?, p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PointStatus {
    Ok,
    Undefined,
    CutoffViolation,
    SolverError,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::Undefined => "undefined",
            PointStatus::CutoffViolation => "cutoff-violation",
            PointStatus::SolverError => "solver-error",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub axis_values: Vec<f64>,
    /// One value per requested observable; NaN where undefined.
    pub values: Vec<f64>,
    pub status: PointStatus,
    /// Error text for non-ok rows.
    pub message: Option<String>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn count(&self, status: PointStatus) -> usize {
        self.rows.iter().filter(|r| r.status == status).count()
    }

    /// Observable column by name, in row order.
    pub fn column(&self, o: Observable) -> Option<Vec<f64>> {
        let k = self.spec.observables.iter().position(|x| *x == o)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }

    /// Axis columns, then observables, then status. Wall time is omitted so
    /// the file is byte-identical across runs.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let header: Vec<&str> = self
            .spec
            .axes
            .iter()
            .map(|a| a.name.as_str())
            .chain(self.spec.observables.iter().map(|o| o.as_str()))
            .chain(std::iter::once("status"))
            .collect();
        out.write_record(&header)?;
        for row in &self.rows {
            let record: Vec<String> = row
                .axis_values
                .iter()
                .chain(&row.values)
                .map(|v| format_float(*v))
                .chain(std::iter::once(row.status.as_str().to_string()))
                .collect();
            out.write_record(&record)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Shortest round-trip scientific notation; `nan` for undefined values.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

fn is_undefined(e: &Error) -> bool {
    matches!(e, Error::UndefinedContrast(_) | Error::UndefinedCooperativity(_) | Error::DarkSteadyState { .. })
}

fn evaluate_point(spec: &SweepSpec, index: usize) -> SweepRow {
    let start = Instant::now();
    let axis_values = spec.point(index);
    let nan = vec![f64::NAN; spec.observables.len()];
    let (values, status, message) = match solve_point(spec, &axis_values) {
        Ok((values, status, message)) => (values, status, message),
        Err(e) => (nan, PointStatus::SolverError, Some(e.to_string())),
    };
    SweepRow { index, axis_values, values, status, message, wall_time_s: start.elapsed().as_secs_f64() }
}

fn solve_point(spec: &SweepSpec, axis_values: &[f64]) -> Result<(Vec<f64>, PointStatus, Option<String>)> {
    let (space, params) = spec.resolve(axis_values)?;
    let l = LiouvillianMap::build(space, &params)?;
    let rho = steady_state(&l)?;
    evaluate_observables(&rho, &spec.observables)
}

/// Requested observables of one state. Undefined quantities become NaN with
/// status `Undefined`; a populated top Fock level marks `CutoffViolation`
/// but keeps the values. Other failures are returned as errors.
pub fn evaluate_observables(
    rho: &DensityMatrix,
    observables: &[Observable],
) -> Result<(Vec<f64>, PointStatus, Option<String>)> {
    let mut status = PointStatus::Ok;
    let mut message = None;
    let dicke = if observables.iter().any(|o| o.needs_dicke()) { Some(dicke_populations(rho)?) } else { None };
    let mut values = Vec::with_capacity(observables.len());
    for &o in observables {
        let value = match o {
            Observable::PGg => Ok(dicke.expect("computed above").p_gg),
            Observable::PEe => Ok(dicke.expect("computed above").p_ee),
            Observable::PPlus => Ok(dicke.expect("computed above").p_plus),
            Observable::PMinus => Ok(dicke.expect("computed above").p_minus),
            Observable::Contrast => population_contrast(dicke.as_ref().expect("computed above")),
            Observable::Cooperativity => cooperativity(rho),
            Observable::G2Zero => g2_zero_of(rho, CorrelationKind::Collective),
        };
        match value {
            Ok(v) => values.push(v),
            Err(e) if is_undefined(&e) => {
                values.push(f64::NAN);
                status = PointStatus::Undefined;
                message.get_or_insert_with(|| e.to_string());
            }
            Err(e) => return Err(e),
        }
    }
    if rho.violates_cutoff() {
        status = PointStatus::CutoffViolation;
        message = Some(format!("top Fock level population {:.3e}", rho.top_fock_population()));
    }
    Ok((values, status, message))
}

/// Evaluate every grid point. `jobs = None` uses the global rayon pool.
/// Per-point failures land in the row status; only an invalid spec errors.
pub fn run_sweep(spec: &SweepSpec, jobs: Option<usize>) -> Result<SweepResult> {
    spec.validate()?;
    let run = || (0..spec.grid_size()).into_par_iter().map(|k| evaluate_point(spec, k)).collect::<Vec<_>>();
    let rows = match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    };
    Ok(SweepResult { spec: spec.clone(), rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub kappa_star: f64,
    pub g2_peak: f64,
}

fn g2_at_kappa(space: SpaceDescriptor, fixed: &SystemParams, kappa: f64) -> Option<f64> {
    let params = SystemParams { kappa, ..fixed.clone() };
    let l = LiouvillianMap::build(space, &params).ok()?;
    let rho = steady_state(&l).ok()?;
    g2_zero_of(&rho, CorrelationKind::Collective).ok().filter(|v| v.is_finite())
}

/// Location and height of the `g²(0)` maximum over `κ`: argmax on a log grid,
/// then a golden-section search in `log κ` between the neighbouring points.
pub fn find_peak_kappa(
    fixed: &SystemParams,
    kappa_range: (f64, f64),
    points: usize,
    n_emitters: usize,
    fock_cutoff: usize,
) -> Result<Peak> {
    let (lo, hi) = kappa_range;
    if points < 15 {
        return Err(Error::InvalidSweep(format!("peak search needs at least 15 points, got {points}")));
    }
    if !(lo > 0.0 && lo <= fixed.coupling && hi >= 10.0 * fixed.coupling && hi.is_finite()) {
        return Err(Error::InvalidSweep(format!("kappa range [{lo}, {hi}] must span [g, 10g]")));
    }
    let space = SpaceDescriptor::new(n_emitters, fock_cutoff)?;
    fixed.validate(n_emitters)?;
    let grid = Axis::log(AxisName::Kappa, lo, hi, points).values();
    let values: Vec<Option<f64>> = grid.par_iter().map(|&k| g2_at_kappa(space, fixed, k)).collect();
    let (best, g2_best) = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .fold(None, |acc: Option<(usize, f64)>, (i, v)| match acc {
            Some((_, b)) if b >= v => acc,
            _ => Some((i, v)),
        })
        .ok_or(Error::NoPeak)?;

    let f = |x: f64| g2_at_kappa(space, fixed, x.exp()).unwrap_or(f64::NEG_INFINITY);
    let (mut a, mut b) = (grid[best.saturating_sub(1)].ln(), grid[(best + 1).min(points - 1)].ln());
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-6 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if fx > g2_best {
        Ok(Peak { kappa_star: x.exp(), g2_peak: fx })
    } else {
        Ok(Peak { kappa_star: grid[best], g2_peak: g2_best })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PopulationTable {
    pub pump: f64,
    pub times: Vec<f64>,
    pub populations: Vec<DickePopulations>,
    /// Steady-state limit for reference.
    pub steady: DickePopulations,
}

/// Two-emitter Dicke populations over time from `|gg, 0⟩`, one table per pump.
pub fn population_trajectories(
    params: &SystemParams,
    fock_cutoff: usize,
    pumps: &[f64],
    t_grid: &[f64],
) -> Result<Vec<PopulationTable>> {
    let space = SpaceDescriptor::new(2, fock_cutoff)?;
    let rho0 = DensityMatrix::basis(space, 0, 0)?;
    pumps
        .par_iter()
        .map(|&pump| {
            let p = SystemParams { pump, ..params.clone() };
            let l = LiouvillianMap::build(space, &p)?;
            let traj = evolve(&l, &rho0, t_grid)?;
            let populations = traj.states.iter().map(dicke_populations).collect::<Result<Vec<_>>>()?;
            let steady = dicke_populations(&steady_state(&l)?)?;
            Ok(PopulationTable { pump, times: traj.times, populations, steady })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(axes: Vec<Axis>) -> SweepSpec {
        SweepSpec {
            axes,
            fixed: FixedParams { kappa: 3.0, pump: 0.01, ..FixedParams::default() },
            n_emitters: 2,
            observables: vec![Observable::PMinus, Observable::G2Zero],
            fock_cutoff: 3,
        }
    }

    #[test]
    fn axis_endpoints_are_exact() {
        let v = Axis::log(AxisName::Kappa, 0.1, 100.0, 40).values();
        assert_eq!((v[0], v[39]), (0.1, 100.0));
        assert!(v.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(Axis::linear(AxisName::NEmitters, 2.0, 4.0, 3).values(), vec![2.0, 3.0, 4.0]);
    }

    #[test]
    fn two_by_two_grid() {
        let s = spec(vec![Axis::log(AxisName::Kappa, 3.0, 10.0, 2), Axis::log(AxisName::Pump, 1e-3, 1e-2, 2)]);
        let r = run_sweep(&s, Some(2)).unwrap();
        assert_eq!(r.rows.len(), 4);
        assert_eq!(r.rows[1].axis_values, vec![3.0, 1e-2]);
        assert!(r.rows.iter().all(|row| row.status == PointStatus::Ok));
    }

    #[test]
    fn invalid_specs() {
        let mut s = spec(vec![Axis::log(AxisName::Kappa, 0.0, 10.0, 3)]);
        assert!(s.validate().is_err());
        s.axes = vec![Axis::log(AxisName::Kappa, 1.0, 10.0, 1)];
        assert!(s.validate().is_err());
        s.axes = vec![Axis::log(AxisName::Kappa, 1.0, 10.0, 2), Axis::log(AxisName::Kappa, 1.0, 10.0, 2)];
        assert!(s.validate().is_err());
        s.axes = vec![Axis::linear(AxisName::NEmitters, 2.0, 5.0, 4)];
        assert!(s.validate().is_err());
        s.axes = vec![Axis::linear(AxisName::NEmitters, 2.0, 3.0, 3)];
        assert!(s.validate().is_err());
        s.axes = vec![Axis::linear(AxisName::NEmitters, 2.0, 4.0, 3)];
        assert!(matches!(s.validate(), Err(Error::UnsupportedEmitterCount(3))));
    }

    #[test]
    fn undefined_rows_are_recorded() {
        // P = 0 with free-space decay: vacuum, so contrast and g2 are undefined.
        let mut s = spec(vec![Axis::linear(AxisName::Pump, 0.0, 0.01, 2)]);
        s.fixed.gamma_r = 0.1;
        let r = run_sweep(&s, None).unwrap();
        assert_eq!(r.rows[0].status, PointStatus::Undefined);
        assert!(r.rows[0].values[1].is_nan());
        assert_eq!(r.rows[1].status, PointStatus::Ok);
    }
}
