use subradiance::sweep::{
    find_peak_kappa, population_trajectories, run_sweep, Axis, AxisName, FixedParams, Observable, PointStatus,
    SweepResult, SweepSpec,
};
use subradiance::{Error, SystemParams};

fn csv_bytes(r: &SweepResult) -> Vec<u8> {
    let mut out = Vec::new();
    r.write_csv(&mut out).unwrap();
    out
}

fn kappa_pump_spec(
    kp: (f64, f64, usize),
    pp: (f64, f64, usize),
    observables: Vec<Observable>,
    cutoff: usize,
) -> SweepSpec {
    SweepSpec {
        axes: vec![Axis::log(AxisName::Kappa, kp.0, kp.1, kp.2), Axis::log(AxisName::Pump, pp.0, pp.1, pp.2)],
        fixed: FixedParams::default(),
        n_emitters: 2,
        observables,
        fock_cutoff: cutoff,
    }
}

#[test]
fn output_is_identical_across_worker_counts() {
    let spec = kappa_pump_spec((0.3, 30.0, 6), (1e-3, 3.0, 5), Observable::ALL.to_vec(), 3);
    let reference = csv_bytes(&run_sweep(&spec, Some(1)).unwrap());
    for jobs in [Some(3), Some(8), None, Some(1)] {
        assert_eq!(csv_bytes(&run_sweep(&spec, jobs).unwrap()), reference, "jobs {jobs:?}");
    }
}

#[test]
fn rows_follow_grid_order_and_partition_by_status() {
    let spec = kappa_pump_spec((0.1, 100.0, 7), (1e-4, 100.0, 6), Observable::ALL.to_vec(), 3);
    let result = run_sweep(&spec, None).unwrap();
    assert_eq!(result.rows.len(), 42);
    let statuses = [PointStatus::Ok, PointStatus::Undefined, PointStatus::CutoffViolation, PointStatus::SolverError];
    assert_eq!(statuses.iter().map(|&s| result.count(s)).sum::<usize>(), 42);
    let kappas = spec.axes[0].values();
    let pumps = spec.axes[1].values();
    for (k, row) in result.rows.iter().enumerate() {
        assert_eq!(row.index, k);
        assert_eq!(row.axis_values, vec![kappas[k / 6], pumps[k % 6]]);
        if row.status == PointStatus::Ok {
            assert!(row.values.iter().all(|v| v.is_finite()));
        }
    }
}

#[test]
fn csv_layout_round_trips_axis_values() {
    let spec = kappa_pump_spec((0.1, 100.0, 3), (1e-4, 1e-2, 2), vec![Observable::G2Zero, Observable::PMinus], 3);
    let result = run_sweep(&spec, Some(2)).unwrap();
    let text = String::from_utf8(csv_bytes(&result)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "kappa,pump,g2_zero,p_minus,status");
    for (line, row) in lines.zip(&result.rows) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[0].parse::<f64>().unwrap(), row.axis_values[0]);
        assert_eq!(fields[1].parse::<f64>().unwrap(), row.axis_values[1]);
        assert_eq!(fields[2].parse::<f64>().unwrap(), row.values[0]);
        assert_eq!(fields[4], row.status.as_str());
    }
    assert_eq!(text.lines().next().unwrap().split(',').next(), Some("kappa"));
    assert_eq!(text.lines().nth(1).unwrap().split(',').next(), Some("1e-1"));
}

#[test]
fn kappa_pump_map_shows_bunching_band_and_inversion() {
    let spec = kappa_pump_spec(
        (0.1, 100.0, 8),
        (1e-4, 100.0, 8),
        vec![Observable::G2Zero, Observable::PEe, Observable::Contrast],
        5,
    );
    let r = run_sweep(&spec, None).unwrap();
    let g2 = r.column(Observable::G2Zero).unwrap();
    let p_ee = r.column(Observable::PEe).unwrap();
    // Weakest pump row at intermediate kappa (index 3 of the kappa axis ≈ 1.9g).
    let weak = 3 * 8;
    assert!(g2[weak] > 100.0, "{}", g2[weak]);
    // Strongest pump, largest kappa.
    let corner = 63;
    assert!(p_ee[corner] > 0.9, "{}", p_ee[corner]);
    assert!(r.rows[corner].status == PointStatus::Ok);
}

#[test]
fn dephasing_erodes_bunching() {
    let spec = SweepSpec {
        axes: vec![Axis::log(AxisName::Pump, 1e-4, 1e-2, 3), Axis::linear(AxisName::Dephasing, 0.0, 1.0, 5)],
        fixed: FixedParams { kappa: 11.7, ..FixedParams::default() },
        n_emitters: 2,
        observables: vec![Observable::G2Zero],
        fock_cutoff: 3,
    };
    let g2 = run_sweep(&spec, None).unwrap().column(Observable::G2Zero).unwrap();
    for row in g2.chunks(5) {
        assert!(row.windows(2).all(|w| w[1] < w[0]), "{row:?}");
    }
}

#[test]
fn emitter_axis_changes_dimension() {
    let spec = SweepSpec {
        axes: vec![Axis::linear(AxisName::NEmitters, 1.0, 4.0, 4)],
        fixed: FixedParams { kappa: 3.0, pump: 0.01, ..FixedParams::default() },
        n_emitters: 2,
        observables: vec![Observable::G2Zero, Observable::Cooperativity],
        fock_cutoff: 2,
    };
    let r = run_sweep(&spec, Some(4)).unwrap();
    let g2 = r.column(Observable::G2Zero).unwrap();
    assert_eq!(g2[0], 0.0);
    assert!(g2[1..].iter().all(|&v| v > 1.0), "{g2:?}");
}

#[test]
fn undefined_points_do_not_abort_the_grid() {
    let spec = SweepSpec {
        axes: vec![Axis::linear(AxisName::Pump, 0.0, 0.02, 3)],
        fixed: FixedParams { kappa: 2.0, gamma_r: 0.1, ..FixedParams::default() },
        n_emitters: 2,
        observables: vec![Observable::PGg, Observable::Contrast, Observable::G2Zero],
        fock_cutoff: 3,
    };
    let r = run_sweep(&spec, None).unwrap();
    assert_eq!(r.rows[0].status, PointStatus::Undefined);
    assert_eq!(r.rows[0].values[0], 1.0);
    assert!(r.rows[0].values[1].is_nan() && r.rows[0].values[2].is_nan());
    assert!(r.rows[1..].iter().all(|row| row.status == PointStatus::Ok), "{:?}", r.rows);
    let text = String::from_utf8(csv_bytes(&r)).unwrap();
    assert!(text.lines().nth(1).unwrap().ends_with("nan,nan,undefined"));
}

#[test]
fn invalid_specs_are_rejected() {
    let ok = kappa_pump_spec((0.1, 10.0, 2), (1e-3, 1e-2, 2), vec![Observable::G2Zero], 3);
    assert!(ok.validate().is_ok());
    let mut bad = ok.clone();
    bad.axes[0] = Axis::log(AxisName::Kappa, 0.0, 10.0, 2);
    assert!(run_sweep(&bad, None).is_err());
    let mut bad = ok.clone();
    bad.axes[1].name = AxisName::Kappa;
    assert!(bad.validate().is_err());
    let mut bad = ok.clone();
    bad.axes[0].points = 1;
    assert!(bad.validate().is_err());
    let mut bad = ok.clone();
    bad.n_emitters = 3;
    bad.observables = vec![Observable::PPlus];
    assert!(matches!(bad.validate(), Err(Error::UnsupportedEmitterCount(3))));
    let mut bad = ok.clone();
    bad.n_emitters = 5;
    assert!(bad.validate().is_err());
    let json =
        r#"{"axes":[{"name":"kappa","scale":"log","min":1,"max":2,"points":2}],"observables":["g2_zero"],"extra":1}"#;
    assert!(serde_json::from_str::<SweepSpec>(json).is_err());
}

#[test]
fn spec_json_round_trip() {
    let spec = kappa_pump_spec((0.1, 100.0, 40), (1e-4, 100.0, 40), Observable::ALL.to_vec(), 3);
    let text = serde_json::to_string(&spec).unwrap();
    assert!(text.contains("\"n_emitters\":2") && text.contains("\"scale\":\"log\""));
    assert_eq!(serde_json::from_str::<SweepSpec>(&text).unwrap(), spec);
}

#[test]
fn cutoff_doubling_probe() {
    // The fig3 axes at a coarser resolution; the ok rows at n_max = 3 are
    // compared with n_max = 6.
    let obs = Observable::ALL.to_vec();
    let a = run_sweep(&kappa_pump_spec((0.1, 100.0, 12), (1e-4, 100.0, 12), obs.clone(), 3), None).unwrap();
    let b = run_sweep(&kappa_pump_spec((0.1, 100.0, 12), (1e-4, 100.0, 12), obs, 6), None).unwrap();
    let mut worst = 0.0f64;
    for (ra, rb) in a.rows.iter().zip(&b.rows).filter(|(r, _)| r.status == PointStatus::Ok) {
        for (x, y) in ra.values.iter().zip(&rb.values) {
            worst = worst.max((x - y).abs() / x.abs());
        }
    }
    assert!(worst < 1e-3, "worst relative change {worst:e}");
}

#[test]
fn peak_sits_near_balanced_dissipation() {
    let fixed = SystemParams::resonant(2, 1.0, 9e-4);
    let peak = find_peak_kappa(&fixed, (1.0, 10.0), 25, 2, 3).unwrap();
    assert!((2.0..=4.0).contains(&peak.kappa_star), "{peak:?}");
    for k in [2.0, 2.5, 3.5, 4.0] {
        let s = subradiance::SpaceDescriptor::new(2, 3).unwrap();
        let g2 = subradiance::g2_zero(s, &SystemParams { kappa: k, ..fixed.clone() }).unwrap();
        assert!(g2 <= peak.g2_peak);
    }
}

#[test]
fn peak_search_preconditions() {
    let fixed = SystemParams::resonant(2, 1.0, 9e-4);
    assert!(find_peak_kappa(&fixed, (1.0, 10.0), 14, 2, 3).is_err());
    assert!(find_peak_kappa(&fixed, (1.5, 10.0), 25, 2, 3).is_err());
    assert!(find_peak_kappa(&fixed, (1.0, 9.0), 25, 2, 3).is_err());
    let dark = SystemParams::resonant(2, 1.0, 0.0).with_gamma_r(0.1);
    assert!(matches!(find_peak_kappa(&dark, (1.0, 10.0), 15, 2, 2), Err(Error::NoPeak)));
}

#[test]
fn population_trajectories_reach_the_steady_ordering() {
    let base = SystemParams::resonant(2, 3.0, 0.0);
    let times: Vec<f64> = (0..=200).map(|k| k as f64).collect();
    let tables = population_trajectories(&base, 8, &[0.1, 1.0, 10.0], &times).unwrap();
    for t in &tables {
        let p0 = t.populations[0];
        assert_eq!((p0.p_gg, p0.p_ee, p0.p_plus, p0.p_minus), (1.0, 0.0, 0.0, 0.0));
        let end = t.populations.last().unwrap();
        for (x, y) in [(end.p_gg, t.steady.p_gg), (end.p_ee, t.steady.p_ee), (end.p_minus, t.steady.p_minus)] {
            assert!((x - y).abs() < 1e-6, "pump {}: {x} vs {y}", t.pump);
        }
    }
    let weak = tables[0].populations.last().unwrap();
    assert!(weak.p_gg > 0.4 && weak.p_minus > 0.4);
    assert!(weak.p_plus < weak.p_minus && weak.p_ee < weak.p_plus);
    let strong = &tables[2];
    let end = strong.populations.last().unwrap();
    assert!(end.p_ee > end.p_gg.max(end.p_plus).max(end.p_minus));
    // p_ee starts below p_gg and crosses above it.
    assert!(strong.populations.iter().any(|p| p.p_ee > p.p_gg));
}
