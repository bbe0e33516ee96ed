use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use subradiance::fitting::{
    derived_coupling, eval_g2_model, eval_g2_model_irf, fit_g2, fit_g2_with, kappa_from_q, normalize_histogram,
    FitOptions, FitParams, Histogram, SPEED_OF_LIGHT,
};
use subradiance::Error;

fn uniform_delays(half_span: f64, bin: f64) -> Vec<f64> {
    let n = (half_span / bin).round() as i64;
    (-n..=n).map(|k| k as f64 * bin).collect()
}

/// Symmetric grid, dense near zero and geometric outwards.
fn graded_delays(first: f64, growth: f64, reach: f64) -> Vec<f64> {
    let mut pos = vec![first];
    while *pos.last().unwrap() < reach {
        let next = pos.last().unwrap() * growth;
        pos.push(next);
    }
    let mut d: Vec<f64> = pos.iter().rev().map(|t| -t).collect();
    d.push(0.0);
    d.extend(pos);
    d
}

fn synthetic(p: &FitParams, delays: &[f64]) -> Histogram {
    Histogram::from_normalized(delays.to_vec(), delays.iter().map(|&t| eval_g2_model(p, t)).collect()).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn assert_recovered(fit: &FitParams, truth: &FitParams, tol: f64) {
    for (got, want, name) in
        [(fit.a, truth.a, "A"), (fit.b, truth.b, "B"), (fit.t_a, truth.t_a, "T_a"), (fit.t_b, truth.t_b, "T_b")]
    {
        assert!(rel(got, want) < tol, "{name}: {got} vs {want}");
    }
}

#[test]
fn noiseless_round_trip() {
    let truth = FitParams::new(0.2, 4.0, 30_000.0, 60.0);
    let h = synthetic(&truth, &uniform_delays(100_000.0, 10.0));
    let report = fit_g2(&h, None).unwrap();
    assert_recovered(&report.params, &truth, 1e-3);
    assert!(rel(report.g2_zero, 1.0) < 1e-3);
    assert!(report.converged && report.unconstrained.is_empty());
    assert!(report.n_iterations <= 200);
}

#[test]
fn poisson_round_trip() {
    let truth = FitParams::new(0.2, 4.0, 30_000.0, 60.0);
    let delays = uniform_delays(300_000.0, 25.0);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let counts: Vec<f64> =
        delays.iter().map(|&t| Poisson::new(1e5 * eval_g2_model(&truth, t)).unwrap().sample(&mut rng)).collect();
    let h = normalize_histogram(&Histogram::new(delays, counts).unwrap(), 240_000.0).unwrap();
    let report = fit_g2(&h, None).unwrap();
    assert_recovered(&report.params, &truth, 0.05);
    // Poisson weights make the reduced chi-square close to one.
    assert!((report.reduced_chi2 - 1.0).abs() < 0.1, "{}", report.reduced_chi2);
    for k in 0..4 {
        assert!(report.params.covariance[k][k] > 0.0);
    }
}

#[test]
fn random_draws_are_recovered_or_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut identifiable = 0;
    for draw in 0..100 {
        let a: f64 = rng.random_range(0.0..1.0);
        let b: f64 = rng.random_range(0.0..10.0);
        let t_b = 10f64.powf(rng.random_range(1.0..2.5));
        let t_a = t_b * 10f64.powf(rng.random_range(1.0..4.0));
        let truth = FitParams::new(a, b, t_a, t_b);
        let h = synthetic(&truth, &graded_delays(0.02 * t_b, 1.02, 6.0 * t_a));
        let report = fit_g2(&h, None).unwrap_or_else(|e| panic!("draw {draw} {truth:?}: {e}"));
        let ok = [(report.params.a, a), (report.params.b, b), (report.params.t_a, t_a), (report.params.t_b, t_b)]
            .iter()
            .all(|(x, y)| rel(*x, *y) < 1e-3);
        if b > 0.05 {
            identifiable += 1;
            assert!(ok, "draw {draw}: {truth:?} -> {:?}", report.params);
        } else {
            assert!(ok || !report.unconstrained.is_empty(), "draw {draw}: silent miss {:?}", report.params);
        }
    }
    assert!(identifiable > 90);
}

#[test]
fn degenerate_bunching_is_flagged() {
    let truth = FitParams::new(0.5, 0.0, 5_000.0, 60.0);
    let h = synthetic(&truth, &uniform_delays(30_000.0, 20.0));
    let report = fit_g2(&h, None).unwrap();
    assert!(rel(report.params.a, 0.5) < 1e-3);
    assert!(rel(report.params.t_a, 5_000.0) < 1e-3);
    assert!(report.params.b.abs() < 1e-6, "{}", report.params.b);
    assert!(report.unconstrained.iter().any(|n| n == "T_b"), "{:?}", report.unconstrained);
}

#[test]
fn irf_round_trip() {
    let truth = FitParams::new(0.3, 2.5, 8_000.0, 60.0);
    let sigma = 35.0;
    let delays = uniform_delays(40_000.0, 8.0);
    let values: Vec<f64> = delays.iter().map(|&t| eval_g2_model_irf(&truth, t, sigma)).collect();
    let h = Histogram::from_normalized(delays, values).unwrap();
    let report = fit_g2_with(&h, None, &FitOptions { irf_sigma: Some(sigma) }).unwrap();
    assert_recovered(&report.params, &truth, 1e-3);
    // Ignoring the response biases the bunching amplitude low.
    let naive = fit_g2(&h, None).unwrap();
    assert!(naive.params.b < 0.9 * truth.b);
}

#[test]
fn mirrored_bins_leave_the_fit_unchanged() {
    let truth = FitParams::new(0.25, 3.0, 4_000.0, 80.0);
    let delays = uniform_delays(20_000.0, 20.0);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let counts: Vec<f64> =
        delays.iter().map(|&t| Poisson::new(2e3 * eval_g2_model(&truth, t)).unwrap().sample(&mut rng)).collect();
    let mirrored: Vec<f64> = counts.iter().rev().cloned().collect();
    let fit = |c: Vec<f64>| {
        fit_g2(&normalize_histogram(&Histogram::new(delays.clone(), c).unwrap(), 16_000.0).unwrap(), None).unwrap()
    };
    let (a, b) = (fit(counts), fit(mirrored));
    assert!(rel(a.reduced_chi2, b.reduced_chi2) < 1e-9);
    assert_recovered(&a.params, &b.params, 1e-6);
}

#[test]
fn normalization_recovers_model_values() {
    let truth = FitParams::new(0.2, 4.0, 3_000.0, 60.0);
    let delays = uniform_delays(40_000.0, 20.0);
    let counts: Vec<f64> = delays.iter().map(|&t| 1000.0 * eval_g2_model(&truth, t)).collect();
    let tau_norm = 10.0 * truth.t_a;
    let h = normalize_histogram(&Histogram::new(delays.clone(), counts.clone()).unwrap(), tau_norm).unwrap();
    assert!(h.normalized);
    assert_eq!(h.normalization_window, Some(tau_norm));
    for (t, v) in delays.iter().zip(&h.counts).filter(|(t, _)| t.abs() >= tau_norm) {
        assert!(rel(*v, eval_g2_model(&truth, *t)) < 0.01);
    }
    let scaled: Vec<f64> = counts.iter().map(|c| 7.0 * c).collect();
    let h7 = normalize_histogram(&Histogram::new(delays, scaled).unwrap(), tau_norm).unwrap();
    for (x, y) in h.counts.iter().zip(&h7.counts) {
        assert!((x - y).abs() <= 4.0 * f64::EPSILON * x.abs());
    }
}

#[test]
fn flat_histogram_normalizes_to_one() {
    let delays = uniform_delays(100.0, 1.0);
    let h = normalize_histogram(&Histogram::new(delays.clone(), vec![42.0; delays.len()]).unwrap(), 0.0).unwrap();
    assert!(h.counts.iter().all(|&v| v == 1.0));
    let zero = Histogram::new(delays.clone(), vec![0.0; delays.len()]).unwrap();
    assert!(matches!(normalize_histogram(&zero, 0.0), Err(Error::ZeroPlateau)));
    assert!(matches!(normalize_histogram(&zero, 95.5), Err(Error::EmptyWindow(10))));
}

#[test]
fn fit_rejects_unusable_input() {
    let truth = FitParams::new(0.2, 1.0, 500.0, 50.0);
    let delays = uniform_delays(5_000.0, 10.0);
    let raw = Histogram::new(delays.clone(), delays.iter().map(|&t| eval_g2_model(&truth, t)).collect()).unwrap();
    assert!(matches!(fit_g2(&raw, None), Err(Error::NotNormalized)));
    let short = synthetic(&truth, &uniform_delays(1_000.0, 10.0));
    assert!(matches!(fit_g2(&short, Some(&truth)), Err(Error::InvalidHistogram(_))));
    let h = synthetic(&truth, &delays);
    assert!(fit_g2_with(&h, None, &FitOptions { irf_sigma: Some(-1.0) }).is_err());
    assert!(fit_g2(&h, Some(&FitParams::new(0.2, 1.0, -5.0, 50.0))).is_err());
}

#[test]
fn explicit_start_is_honoured() {
    let truth = FitParams::new(0.2, 4.0, 30_000.0, 60.0);
    let h = synthetic(&truth, &graded_delays(1.0, 1.02, 150_000.0));
    let start = FitParams::new(0.3, 3.0, 20_000.0, 80.0);
    assert_recovered(&fit_g2(&h, Some(&start)).unwrap().params, &truth, 1e-3);
}

#[test]
fn histogram_csv_ingestion() {
    let text = "# HBT export\ndelay_ps,counts\n-20, 5\n0,12\n\n20 ,6\n# trailing\n";
    let h = Histogram::from_csv_reader(text.as_bytes()).unwrap();
    assert_eq!(h.delays, vec![-20.0, 0.0, 20.0]);
    assert_eq!(h.counts, vec![5.0, 12.0, 6.0]);
    assert!(!h.normalized);
    assert_eq!(h.central_value(), 12.0);
    for bad in ["0,1,2\n", "0,1\n0,2\n", "0,-1\n", "a,b\nc,d\n", "0,1\nx,2\n", "", "5,nan\n"] {
        assert!(Histogram::from_csv_reader(bad.as_bytes()).is_err(), "{bad:?}");
    }
}

#[test]
fn physical_unit_chain() {
    let kappa = kappa_from_q(592.0, 916.18).unwrap();
    assert!((549.0..=557.0).contains(&kappa), "{kappa}");
    let g = derived_coupling(553.0, 61.6).unwrap();
    assert!((47.2..=47.6).contains(&g), "{g}");
    // Γ = 1/T_b = 1 GHz at T_b = 1000 ps; g = √(1·4/4).
    assert!((derived_coupling(4.0, 1000.0).unwrap() - 1.0).abs() < 1e-15);
    let ratio = derived_coupling(2.0 * 553.0, 61.6).unwrap() / g;
    assert!((ratio - 2f64.sqrt()).abs() < 1e-14);
    assert!(kappa_from_q(1e300, 916.18).unwrap() < 1e-290);
    let nu = SPEED_OF_LIGHT / 916.18e-9 / 1e9;
    assert!(rel(kappa_from_q(1.0, 916.18).unwrap(), nu) < 1e-15);
    assert!(kappa_from_q(0.0, 900.0).is_err() && derived_coupling(553.0, 0.0).is_err());
}

fn params_strategy() -> impl Strategy<Value = FitParams> {
    (0.0f64..1.0, 0.0f64..10.0, 1.0f64..1e5, 1.0f64..1e4).prop_map(|(a, b, ta, tb)| FitParams::new(a, b, ta, tb))
}

proptest! {
    #[test]
    fn model_is_even_and_relaxes_to_one(p in params_strategy(), tau in 0.0f64..1e6) {
        prop_assert_eq!(eval_g2_model(&p, tau), eval_g2_model(&p, -tau));
        prop_assert!((eval_g2_model(&p, 1e3 * (p.t_a + p.t_b)) - 1.0).abs() < 1e-12);
        prop_assert!((eval_g2_model(&p, 0.0) - p.a * (1.0 + p.b)).abs() <= 1e-12 * (1.0 + p.b));
    }

    #[test]
    fn smeared_model_is_even_and_tends_to_plain(p in params_strategy(), tau in 0.0f64..1e4) {
        let s = 35.0;
        prop_assert!((eval_g2_model_irf(&p, tau, s) - eval_g2_model_irf(&p, -tau, s)).abs() < 1e-12);
        let narrow = eval_g2_model_irf(&p, tau, 1e-6 * p.t_b.min(p.t_a));
        prop_assert!((narrow - eval_g2_model(&p, tau)).abs() < 1e-6 * (1.0 + p.b));
    }
}
