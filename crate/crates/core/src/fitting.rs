//! Empirical `g²(τ)` model, coincidence histograms and least-squares fits.
//!
//! ```text
//! g²(τ) = [1 − (1 − A) e^{−|τ|/T_a}] [1 + B e^{−|τ|/T_b}]
//! ```
//!
//! Delays and timescales are in picoseconds. Physical-unit helpers use
//! ordinary frequency: `κ = c / (λ Q)`, `Γ = 1 / T_b`, `g = √(Γ κ / 4)`.

use std::io::Read;
use std::path::Path;

use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Minimum number of bins in a normalization window.
pub const MIN_WINDOW_BINS: usize = 20;
pub const MAX_ITERATIONS: usize = 200;
pub const STEP_TOL: f64 = 1e-10;

pub const PARAM_NAMES: [&str; 4] = ["A", "B", "T_a", "T_b"];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "T_a_ps")]
    pub t_a: f64,
    #[serde(rename = "T_b_ps")]
    pub t_b: f64,
    /// Covariance of `(A, B, T_a, T_b)`; zero unless produced by a fit.
    pub covariance: [[f64; 4]; 4],
}

impl FitParams {
    pub fn new(a: f64, b: f64, t_a: f64, t_b: f64) -> Self {
        Self { a, b, t_a, t_b, covariance: [[0.0; 4]; 4] }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.a.is_finite() && self.b.is_finite() && self.a >= 0.0 && self.b >= 0.0;
        if !ok || !(self.t_a > 0.0 && self.t_a.is_finite()) || !(self.t_b > 0.0 && self.t_b.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "fit parameters need A, B >= 0 and T_a, T_b > 0 (got {}, {}, {}, {})",
                self.a, self.b, self.t_a, self.t_b
            )));
        }
        Ok(())
    }

    /// Model value at zero delay, `A (1 + B)`.
    pub fn g2_zero(&self) -> f64 {
        self.a * (1.0 + self.b)
    }
}

pub fn eval_g2_model(p: &FitParams, tau: f64) -> f64 {
    let t = tau.abs();
    (1.0 - (1.0 - p.a) * (-t / p.t_a).exp()) * (1.0 + p.b * (-t / p.t_b).exp())
}

/// Model convolved with a normalized Gaussian of width `sigma` (ps).
pub fn eval_g2_model_irf(p: &FitParams, tau: f64, sigma: f64) -> f64 {
    if !(sigma > 0.0) {
        return eval_g2_model(p, tau);
    }
    let t_ab = 1.0 / (1.0 / p.t_a + 1.0 / p.t_b);
    1.0 - (1.0 - p.a) * smeared_exp(tau, p.t_a, sigma) + p.b * smeared_exp(tau, p.t_b, sigma)
        - p.b * (1.0 - p.a) * smeared_exp(tau, t_ab, sigma)
}

/// `exp(x²) erfc(x)`, accurate for large positive `x`.
fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        (x * x).exp() * libm::erfc(x)
    } else {
        // Asymptotic series; the first omitted term is below 1e-12 relative.
        let inv = 1.0 / (2.0 * x * x);
        (1.0 - inv + 3.0 * inv * inv - 15.0 * inv.powi(3)) / (x * std::f64::consts::PI.sqrt())
    }
}

/// `(e^{−|·|/T} ∗ N(0, σ²))(τ)`.
fn smeared_exp(tau: f64, t: f64, sigma: f64) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    let side = |x: f64| {
        let u = (sigma / t - x / sigma) / s2;
        if u >= 0.0 {
            0.5 * (-x * x / (2.0 * sigma * sigma)).exp() * erfcx(u)
        } else {
            0.5 * (sigma * sigma / (2.0 * t * t) - x / t).exp() * libm::erfc(u)
        }
    };
    side(tau) + side(-tau)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Histogram {
    pub delays: Vec<f64>,
    pub counts: Vec<f64>,
    pub normalized: bool,
    /// `τ_norm` of the window `|τ| ≥ τ_norm` used for normalization.
    pub normalization_window: Option<f64>,
    /// Counts before normalization, kept for Poisson weights.
    pub raw_counts: Option<Vec<f64>>,
}

impl Histogram {
    pub fn new(delays: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        if delays.len() != counts.len() {
            return Err(Error::InvalidHistogram(format!("{} delays but {} counts", delays.len(), counts.len())));
        }
        if delays.is_empty() {
            return Err(Error::InvalidHistogram("no bins".into()));
        }
        if delays.iter().any(|d| !d.is_finite()) {
            return Err(Error::InvalidHistogram("non-finite delay".into()));
        }
        if let Some(w) = delays.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidHistogram(format!("delays not strictly increasing at {}", w[1])));
        }
        if let Some(c) = counts.iter().find(|c| !c.is_finite() || **c < 0.0) {
            return Err(Error::InvalidHistogram(format!("count {c} is negative or non-finite")));
        }
        Ok(Self { delays, counts, normalized: false, normalization_window: None, raw_counts: None })
    }

    /// Histogram whose values are already `g²(τ)` samples.
    pub fn from_normalized(delays: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut h = Self::new(delays, values)?;
        h.normalized = true;
        Ok(h)
    }

    /// Two columns `delay_ps, counts`; `#` starts a comment line and an
    /// optional non-numeric header row is skipped.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let (mut delays, mut counts) = (Vec::new(), Vec::new());
        for (k, record) in rdr.records().enumerate() {
            let record = record?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            if record.len() != 2 {
                return Err(Error::InvalidHistogram(format!(
                    "line {}: expected 2 columns, found {}",
                    k + 1,
                    record.len()
                )));
            }
            match (record[0].parse::<f64>(), record[1].parse::<f64>()) {
                (Ok(d), Ok(c)) => {
                    delays.push(d);
                    counts.push(c);
                }
                _ if delays.is_empty() && k == 0 && record[0].parse::<f64>().is_err() => continue,
                _ => {
                    return Err(Error::InvalidHistogram(format!(
                        "line {}: cannot parse {:?}",
                        k + 1,
                        record.iter().collect::<Vec<_>>()
                    )))
                }
            }
        }
        Self::new(delays, counts)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_csv_reader(std::fs::File::open(path)?)
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// Value in the bin closest to zero delay.
    pub fn central_value(&self) -> f64 {
        let k = (0..self.len()).min_by(|&i, &j| self.delays[i].abs().total_cmp(&self.delays[j].abs())).unwrap_or(0);
        self.counts[k]
    }
}

/// Divide by the mean count over `|τ| ≥ tau_norm`.
pub fn normalize_histogram(h: &Histogram, tau_norm: f64) -> Result<Histogram> {
    if !(tau_norm >= 0.0) || !tau_norm.is_finite() {
        return Err(Error::InvalidArgument(format!("normalization delay {tau_norm} must be finite and >= 0")));
    }
    let window: Vec<f64> =
        h.delays.iter().zip(&h.counts).filter(|(d, _)| d.abs() >= tau_norm).map(|(_, c)| *c).collect();
    if window.len() < MIN_WINDOW_BINS {
        return Err(Error::EmptyWindow(window.len()));
    }
    let mean = window.iter().sum::<f64>() / window.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::ZeroPlateau);
    }
    Ok(Histogram {
        delays: h.delays.clone(),
        counts: h.counts.iter().map(|c| c / mean).collect(),
        normalized: true,
        normalization_window: Some(tau_norm),
        raw_counts: Some(h.raw_counts.clone().unwrap_or_else(|| h.counts.clone())),
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Gaussian instrument-response width in ps; `None` disables convolution.
    pub irf_sigma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitReport {
    #[serde(flatten)]
    pub params: FitParams,
    /// Fit-extrapolated `A (1 + B)`.
    pub g2_zero: f64,
    /// Histogram value in the bin closest to zero delay.
    pub raw_g2_zero: f64,
    pub n_iterations: usize,
    pub converged: bool,
    pub reduced_chi2: f64,
    /// Parameters the data do not determine (their covariance entries are
    /// not meaningful).
    pub unconstrained: Vec<String>,
}

struct Problem<'a> {
    tau: &'a [f64],
    y: &'a [f64],
    sqrt_w: Vec<f64>,
    irf: Option<f64>,
}

fn params_of(theta: &Vector4<f64>) -> FitParams {
    FitParams::new(theta[0], theta[1], theta[2].exp(), theta[3].exp())
}

impl Problem<'_> {
    fn model(&self, p: &FitParams, tau: f64) -> f64 {
        match self.irf {
            Some(s) => eval_g2_model_irf(p, tau, s),
            None => eval_g2_model(p, tau),
        }
    }

    fn cost(&self, theta: &Vector4<f64>) -> f64 {
        let p = params_of(theta);
        0.5 * self
            .tau
            .iter()
            .zip(self.y)
            .zip(&self.sqrt_w)
            .map(|((&t, &y), &w)| (w * (y - self.model(&p, t))).powi(2))
            .sum::<f64>()
    }

    /// Weighted normal equations `JᵀJ` and `Jᵀr` with `r = y − model`.
    fn normal_equations(&self, theta: &Vector4<f64>) -> (Matrix4<f64>, Vector4<f64>) {
        let p = params_of(theta);
        let mut jtj = Matrix4::zeros();
        let mut jtr = Vector4::zeros();
        for ((&t, &y), &w) in self.tau.iter().zip(self.y).zip(&self.sqrt_w) {
            let (m, grad) = match self.irf {
                None => analytic_gradient(&p, t),
                Some(_) => (self.model(&p, t), self.numeric_gradient(theta, t)),
            };
            let j = grad * w;
            jtj += j * j.transpose();
            jtr += j * (w * (y - m));
        }
        (jtj, jtr)
    }

    fn numeric_gradient(&self, theta: &Vector4<f64>, t: f64) -> Vector4<f64> {
        let mut g = Vector4::zeros();
        for k in 0..4 {
            let h = 1e-6 * theta[k].abs().max(1e-3);
            let (mut up, mut dn) = (*theta, *theta);
            up[k] += h;
            dn[k] -= h;
            g[k] = (self.model(&params_of(&up), t) - self.model(&params_of(&dn), t)) / (2.0 * h);
        }
        g
    }
}

/// Model value and gradient with respect to `(A, B, ln T_a, ln T_b)`.
fn analytic_gradient(p: &FitParams, tau: f64) -> (f64, Vector4<f64>) {
    let t = tau.abs();
    let ea = (-t / p.t_a).exp();
    let eb = (-t / p.t_b).exp();
    let fa = 1.0 - (1.0 - p.a) * ea;
    let fb = 1.0 + p.b * eb;
    let grad = Vector4::new(ea * fb, fa * eb, -(1.0 - p.a) * ea * (t / p.t_a) * fb, fa * p.b * eb * (t / p.t_b));
    (fa * fb, grad)
}

fn project(theta: &mut Vector4<f64>) {
    theta[0] = theta[0].max(0.0);
    theta[1] = theta[1].max(0.0);
}

struct LmOutcome {
    theta: Vector4<f64>,
    cost: f64,
    iterations: usize,
}

fn levenberg_marquardt(problem: &Problem, start: Vector4<f64>) -> Result<LmOutcome> {
    let mut theta = start;
    project(&mut theta);
    let mut cost = problem.cost(&theta);
    if !cost.is_finite() {
        return Err(Error::SingularJacobian);
    }
    let mut lambda = 1e-3;
    for it in 1..=MAX_ITERATIONS {
        let (jtj, jtr) = problem.normal_equations(&theta);
        let dmax = jtj.diagonal().max();
        if !(dmax > 0.0) || !dmax.is_finite() {
            return Err(Error::SingularJacobian);
        }
        loop {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * dmax);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 4.0;
                if lambda > 1e20 {
                    return Err(Error::SingularJacobian);
                }
                continue;
            };
            let mut trial = theta + chol.solve(&jtr);
            project(&mut trial);
            let trial_cost = problem.cost(&trial);
            if trial_cost < cost {
                let step = (trial - theta)
                    .iter()
                    .zip(theta.iter())
                    .map(|(d, t)| d.abs() / t.abs().max(1e-3))
                    .fold(0.0, f64::max);
                theta = trial;
                cost = trial_cost;
                lambda = (lambda / 3.0).max(1e-15);
                if step < STEP_TOL {
                    return Ok(LmOutcome { theta, cost, iterations: it });
                }
                break;
            }
            lambda *= 4.0;
            if lambda > 1e16 {
                // No descent direction left: a stationary point.
                return Ok(LmOutcome { theta, cost, iterations: it });
            }
        }
    }
    Err(Error::NonConvergence(MAX_ITERATIONS))
}

/// Starting point from the histogram shape: `A` from the dip, `B` from the
/// central peak, `T_b` from the half width of the peak and `T_a` from the
/// recovery towards the plateau.
pub fn initial_guess(h: &Histogram) -> FitParams {
    let mut order: Vec<usize> = (0..h.len()).collect();
    order.sort_by(|&i, &j| h.delays[i].abs().total_cmp(&h.delays[j].abs()));
    let folded: Vec<(f64, f64)> = order.iter().map(|&k| (h.delays[k].abs(), h.counts[k])).collect();
    let tmax = folded.last().map_or(1.0, |f| f.0).max(f64::MIN_POSITIVE);
    let spacing = h.delays.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min).min(tmax);
    let peak = folded[0].1;
    let (imin, ymin) =
        folded.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, f)| if f.1 < acc.1 { (i, f.1) } else { acc });
    let a = ymin.clamp(0.0, 1.0);
    let b = if a > 1e-3 { (peak / a - 1.0).max(0.0) } else { (peak - 1.0).max(0.0) };
    let half = a + 0.5 * (peak - a);
    let t_b = folded.iter().find(|f| f.1 <= half).map_or(spacing, |f| f.0 / std::f64::consts::LN_2).max(spacing);
    let recovered = a + (1.0 - a) * (1.0 - (-1.0f64).exp());
    let t_a = folded[imin..].iter().find(|f| f.1 >= recovered).map_or(tmax / 3.0, |f| f.0).max(spacing);
    FitParams::new(a, b, t_a, t_b)
}

/// Weighted least-squares fit of the model to a normalized histogram.
pub fn fit_g2(h: &Histogram, init: Option<&FitParams>) -> Result<FitReport> {
    fit_g2_with(h, init, &FitOptions::default())
}

pub fn fit_g2_with(h: &Histogram, init: Option<&FitParams>, opts: &FitOptions) -> Result<FitReport> {
    if !h.normalized {
        return Err(Error::NotNormalized);
    }
    if h.len() < 5 {
        return Err(Error::InvalidHistogram(format!("{} bins are too few for a 4-parameter fit", h.len())));
    }
    if let Some(s) = opts.irf_sigma {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("IRF width {s} must be positive")));
        }
    }
    let sqrt_w = match &h.raw_counts {
        // Poisson: σ_i = √max(raw_i, 1) / mean, where mean = raw_i / value_i.
        Some(raw) => {
            let mean = raw.iter().zip(&h.counts).find(|(_, &v)| v > 0.0).map_or(1.0, |(r, v)| r / v);
            raw.iter().map(|&r| mean / r.max(1.0).sqrt()).collect()
        }
        None => vec![1.0; h.len()],
    };
    let problem = Problem { tau: &h.delays, y: &h.counts, sqrt_w, irf: opts.irf_sigma };

    let guess = match init {
        Some(p) => {
            p.validate()?;
            *p
        }
        None => initial_guess(h),
    };
    let tmax = h.delays.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if tmax < 3.0 * guess.t_a {
        return Err(Error::InvalidHistogram(format!(
            "delay span {tmax} ps does not reach 3 T_a = {} ps",
            3.0 * guess.t_a
        )));
    }
    let theta0 = |p: &FitParams| Vector4::new(p.a, p.b, p.t_a.ln(), p.t_b.ln());
    let mut starts = vec![theta0(&guess)];
    if init.is_none() {
        // The heuristics can confuse the two timescales; add a coarse grid of
        // alternatives and keep the most promising starts.
        starts.push(theta0(&FitParams::new(guess.a, guess.b, guess.t_b, guess.t_a)));
        let spacing = h.delays.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let (lo, hi) = (spacing.max(tmax * 1e-6).ln(), (tmax / 2.0).ln());
        let grid: Vec<f64> = (0..6).map(|i| (lo + (hi - lo) * i as f64 / 5.0).exp()).collect();
        let mut extra: Vec<(f64, Vector4<f64>)> = grid
            .iter()
            .flat_map(|&ta| grid.iter().map(move |&tb| (ta, tb)))
            .map(|(ta, tb)| {
                let th = theta0(&FitParams::new(guess.a, guess.b, ta, tb));
                (problem.cost(&th), th)
            })
            .filter(|(c, _)| c.is_finite())
            .collect();
        extra.sort_by(|x, y| x.0.total_cmp(&y.0));
        starts.extend(extra.into_iter().take(3).map(|(_, th)| th));
    }

    let mut best: Option<LmOutcome> = None;
    let mut last_err = None;
    for s in starts {
        match levenberg_marquardt(&problem, s) {
            Ok(out) if best.as_ref().is_none_or(|b| out.cost < b.cost) => best = Some(out),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    let out = best.ok_or_else(|| last_err.unwrap_or(Error::SingularJacobian))?;

    let (jtj, _) = problem.normal_equations(&out.theta);
    let dof = (h.len() as f64 - 4.0).max(1.0);
    let reduced_chi2 = 2.0 * out.cost / dof;
    let scale = if h.raw_counts.is_some() { 1.0 } else { reduced_chi2 };
    let (cov_theta, unconstrained) = pseudo_inverse_with_flags(&jtj);
    let mut params = params_of(&out.theta);
    // Back to natural parameters: dT = T d(ln T).
    let jac = [1.0, 1.0, params.t_a, params.t_b];
    for i in 0..4 {
        for j in 0..4 {
            params.covariance[i][j] = scale * cov_theta[(i, j)] * jac[i] * jac[j];
        }
    }
    Ok(FitReport {
        g2_zero: params.g2_zero(),
        raw_g2_zero: h.central_value(),
        params,
        n_iterations: out.iterations,
        converged: true,
        reduced_chi2,
        unconstrained: unconstrained.into_iter().map(|k| PARAM_NAMES[k].to_string()).collect(),
    })
}

/// Pseudo-inverse of the Fisher matrix plus the parameters lying in its
/// numerically null directions.
fn pseudo_inverse_with_flags(f: &Matrix4<f64>) -> (Matrix4<f64>, Vec<usize>) {
    let diag: Vec<f64> = (0..4).map(|k| f[(k, k)].max(0.0).sqrt()).collect();
    let dmax = diag.iter().cloned().fold(0.0, f64::max);
    let mut flagged = [false; 4];
    let live: Vec<usize> = (0..4)
        .filter(|&k| {
            let ok = diag[k] > 1e-6 * dmax;
            flagged[k] = !ok;
            ok
        })
        .collect();
    // Correlation form of the live block.
    let corr = Matrix4::from_fn(|i, j| {
        if live.contains(&i) && live.contains(&j) {
            f[(i, j)] / (diag[i] * diag[j])
        } else if i == j {
            1.0
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(corr);
    let mut inv = Matrix4::zeros();
    for k in 0..4 {
        let v = eig.eigenvectors.column(k);
        if eig.eigenvalues[k] > 1e-10 {
            inv += v * v.transpose() / eig.eigenvalues[k];
        } else {
            for i in 0..4 {
                if v[i].abs() > 0.3 {
                    flagged[i] = true;
                }
            }
        }
    }
    let cov =
        Matrix4::from_fn(
            |i, j| {
                if live.contains(&i) && live.contains(&j) {
                    inv[(i, j)] / (diag[i] * diag[j])
                } else {
                    0.0
                }
            },
        );
    (cov, (0..4).filter(|&k| flagged[k]).collect())
}

/// Coupling `g = √(Γ κ / 4)` in GHz from `κ` (GHz) and `T_b` (ps), with `Γ = 1/T_b`.
pub fn derived_coupling(kappa_ghz: f64, t_b_ps: f64) -> Result<f64> {
    if !(kappa_ghz > 0.0) || !(t_b_ps > 0.0) || !kappa_ghz.is_finite() || !t_b_ps.is_finite() {
        return Err(Error::InvalidArgument(format!("need kappa > 0 and T_b > 0, got {kappa_ghz}, {t_b_ps}")));
    }
    let gamma_ghz = 1e3 / t_b_ps;
    Ok((gamma_ghz * kappa_ghz / 4.0).sqrt())
}

/// Cavity loss `κ = c / (λ Q)` in GHz for wavelength `λ` in nm.
pub fn kappa_from_q(q: f64, lambda_nm: f64) -> Result<f64> {
    if !(q > 0.0) || !(lambda_nm > 0.0) || lambda_nm.is_infinite() {
        return Err(Error::InvalidArgument(format!("need Q > 0 and lambda > 0, got {q}, {lambda_nm}")));
    }
    Ok(SPEED_OF_LIGHT / (lambda_nm * 1e-9) / q / 1e9)
}
