//! Built-in reproduction runs. Rates are in units of `g`.

use std::path::Path;

use serde::Serialize;
use subradiance::sweep::{
    find_peak_kappa, population_trajectories, run_sweep, Axis, AxisName, FixedParams, Observable, Peak, PointStatus,
    SweepSpec,
};
use subradiance::SystemParams;

use crate::error::CliError;
use crate::output::{format_float, sweep_sidecar, write_file, write_sweep};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    #[value(name = "fig3")]
    Fig3,
    #[value(name = "figS3")]
    FigS3,
    #[value(name = "figS4")]
    FigS4,
    #[value(name = "figS5")]
    FigS5,
    #[value(name = "figS6")]
    FigS6,
}

pub const GRID_POINTS: usize = 40;
pub const WEAK_PUMP: f64 = 9e-4;
pub const EXPERIMENT_KAPPA: f64 = 11.7;
pub const FIG_S6_DEPHASING: [f64; 4] = [0.0, 0.1, 1.0, 10.0];
pub const FIG_S3_PUMPS: [f64; 3] = [0.1, 1.0, 10.0];
/// The P = 10g trajectory needs this many Fock levels to keep the top level
/// below the cutoff tolerance.
pub const FIG_S3_CUTOFF: usize = 8;

fn kappa_axis() -> Axis {
    Axis::log(AxisName::Kappa, 0.1, 100.0, GRID_POINTS)
}

fn pump_axis() -> Axis {
    Axis::log(AxisName::Pump, 1e-4, 100.0, GRID_POINTS)
}

/// `fig3`: populations, contrast, cooperativity and `g²(0)` over (κ, P).
pub fn fig3_spec() -> SweepSpec {
    SweepSpec {
        axes: vec![kappa_axis(), pump_axis()],
        fixed: FixedParams::default(),
        n_emitters: 2,
        observables: Observable::ALL.to_vec(),
        fock_cutoff: 3,
    }
}

/// `fig3g`: cooperativity and `g²(0)` against P at the experimental κ.
pub fn fig3g_spec() -> SweepSpec {
    SweepSpec {
        axes: vec![pump_axis()],
        fixed: FixedParams { kappa: EXPERIMENT_KAPPA, ..FixedParams::default() },
        n_emitters: 2,
        observables: vec![Observable::Cooperativity, Observable::G2Zero],
        fock_cutoff: 3,
    }
}

/// `fig3h`: `g²(0)` against κ for N = 2, 3, 4 under weak pumping.
pub fn fig3h_spec() -> SweepSpec {
    SweepSpec {
        axes: vec![Axis::linear(AxisName::NEmitters, 2.0, 4.0, 3), kappa_axis()],
        fixed: FixedParams { pump: WEAK_PUMP, ..FixedParams::default() },
        n_emitters: 2,
        observables: vec![Observable::G2Zero],
        fock_cutoff: 3,
    }
}

/// `figS4`: κ against the coupling g′ at weak pumping.
pub fn fig_s4_spec() -> SweepSpec {
    let mut observables = Observable::ALL.to_vec();
    observables.retain(|o| *o != Observable::Cooperativity);
    SweepSpec {
        axes: vec![kappa_axis(), Axis::log(AxisName::Coupling, 0.1, 100.0, GRID_POINTS)],
        fixed: FixedParams { pump: WEAK_PUMP, ..FixedParams::default() },
        n_emitters: 2,
        observables,
        fock_cutoff: 3,
    }
}

/// `figS5`: P against pure dephasing γ at the experimental κ.
pub fn fig_s5_spec() -> SweepSpec {
    SweepSpec {
        axes: vec![pump_axis(), Axis::log(AxisName::Dephasing, 1e-3, 100.0, GRID_POINTS)],
        fixed: FixedParams { kappa: EXPERIMENT_KAPPA, ..FixedParams::default() },
        n_emitters: 2,
        observables: vec![
            Observable::PGg,
            Observable::PEe,
            Observable::PPlus,
            Observable::PMinus,
            Observable::Contrast,
            Observable::G2Zero,
        ],
        fock_cutoff: 3,
    }
}

/// `figS6`: `g²(0)` against κ at one dephasing rate.
pub fn fig_s6_spec(dephasing: f64) -> SweepSpec {
    SweepSpec {
        axes: vec![kappa_axis()],
        fixed: FixedParams { pump: WEAK_PUMP, dephasing, ..FixedParams::default() },
        n_emitters: 2,
        observables: vec![Observable::G2Zero],
        fock_cutoff: 3,
    }
}

pub fn fig_s3_times() -> Vec<f64> {
    (0..=200).map(f64::from).collect()
}

#[derive(Serialize)]
struct PeakRecord {
    n_emitters: usize,
    dephasing: f64,
    #[serde(flatten)]
    peak: Peak,
}

fn peak(n_emitters: usize, dephasing: f64) -> Result<PeakRecord, CliError> {
    let fixed = SystemParams::resonant(n_emitters, 1.0, WEAK_PUMP).with_dephasing(dephasing);
    let peak = find_peak_kappa(&fixed, (1.0, 10.0), 25, n_emitters, 3)?;
    Ok(PeakRecord { n_emitters, dephasing, peak })
}

/// Every spec the figure uses, for `--validate-only`.
pub fn validate(figure: Figure) -> Result<(), CliError> {
    let specs = match figure {
        Figure::Fig3 => vec![fig3_spec(), fig3g_spec(), fig3h_spec()],
        Figure::FigS3 => vec![],
        Figure::FigS4 => vec![fig_s4_spec()],
        Figure::FigS5 => vec![fig_s5_spec()],
        Figure::FigS6 => FIG_S6_DEPHASING.iter().map(|&g| fig_s6_spec(g)).collect(),
    };
    for s in specs {
        s.validate().map_err(|e| crate::error::invalid(e.to_string()))?;
    }
    Ok(())
}

fn sweep_to(dir: &Path, stem: &str, spec: &SweepSpec) -> Result<usize, CliError> {
    let result = run_sweep(spec, None)?;
    write_sweep(&result, &dir.join(format!("{stem}.csv")))?;
    write_file(&dir.join(format!("{stem}.json")), sweep_sidecar(&result)?.as_bytes())?;
    Ok(result.count(PointStatus::CutoffViolation))
}

/// Run one figure into `dir`; returns the file stems written and the number
/// of cutoff-violation rows across its sweeps.
pub fn reproduce(figure: Figure, dir: &Path) -> Result<(Vec<String>, usize), CliError> {
    std::fs::create_dir_all(dir).map_err(crate::error::io_error(dir))?;
    let mut written = Vec::new();
    let mut violations = 0;
    let mut sweep = |stem: &str, spec: SweepSpec| -> Result<(), CliError> {
        violations += sweep_to(dir, stem, &spec)?;
        written.push(format!("{stem}.csv"));
        written.push(format!("{stem}.json"));
        Ok(())
    };
    match figure {
        Figure::Fig3 => {
            sweep("fig3", fig3_spec())?;
            sweep("fig3g", fig3g_spec())?;
            sweep("fig3h", fig3h_spec())?;
            let peaks = (2..=4).map(|n| peak(n, 0.0)).collect::<Result<Vec<_>, _>>()?;
            write_file(&dir.join("fig3h_peaks.json"), serde_json::to_string_pretty(&peaks)?.as_bytes())?;
            written.push("fig3h_peaks.json".into());
        }
        Figure::FigS3 => {
            let base = SystemParams::resonant(2, 3.0, 0.0);
            let tables = population_trajectories(&base, FIG_S3_CUTOFF, &FIG_S3_PUMPS, &fig_s3_times())?;
            let mut steady = String::from("pump,p_gg,p_ee,p_plus,p_minus\n");
            for t in &tables {
                let mut csv = String::from("time,p_gg,p_ee,p_plus,p_minus\n");
                for (time, p) in t.times.iter().zip(&t.populations) {
                    csv += &row(*time, [p.p_gg, p.p_ee, p.p_plus, p.p_minus]);
                }
                let name = format!("figS3_P{}.csv", t.pump);
                write_file(&dir.join(&name), csv.as_bytes())?;
                written.push(name);
                let s = t.steady;
                steady += &row(t.pump, [s.p_gg, s.p_ee, s.p_plus, s.p_minus]);
            }
            write_file(&dir.join("figS3_steady.csv"), steady.as_bytes())?;
            written.push("figS3_steady.csv".into());
        }
        Figure::FigS4 => sweep("figS4", fig_s4_spec())?,
        Figure::FigS5 => sweep("figS5", fig_s5_spec())?,
        Figure::FigS6 => {
            for &g in &FIG_S6_DEPHASING {
                sweep(&format!("figS6_gamma{g}"), fig_s6_spec(g))?;
            }
            let peaks = FIG_S6_DEPHASING.iter().map(|&g| peak(2, g)).collect::<Result<Vec<_>, _>>()?;
            write_file(&dir.join("figS6_peaks.json"), serde_json::to_string_pretty(&peaks)?.as_bytes())?;
            written.push("figS6_peaks.json".into());
        }
    }
    Ok((written, violations))
}

fn row<const K: usize>(first: f64, rest: [f64; K]) -> String {
    let mut s = format_float(first);
    for v in rest {
        s.push(',');
        s += &format_float(v);
    }
    s.push('\n');
    s
}
