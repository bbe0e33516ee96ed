//! Dormand-Prince 5(4) integrator with the 4th-order continuous extension
//! (Hairer, Nørsett & Wanner's DOPRI5), specialized to autonomous complex
//! systems `y' = f(y)`.

use num_complex::Complex64 as C64;

use crate::error::{invalid, Error, Result};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;

// Butcher tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// 5th minus embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Dense output.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

#[derive(Clone, Copy, Debug)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri5 {
    fn default() -> Self {
        Self { rtol: DEFAULT_RTOL, atol: DEFAULT_ATOL, max_steps: 50_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

impl Dopri5 {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    /// Integrate from `t0` and call `out(k, t_out[k], y)` at every requested
    /// time. `t_out` must be non-decreasing and start at or after `t0`.
    pub fn integrate<F, O>(&self, mut f: F, t0: f64, y0: &[C64], t_out: &[f64], mut out: O) -> Result<Stats>
    where
        F: FnMut(&[C64], &mut [C64]),
        O: FnMut(usize, f64, &[C64]) -> Result<()>,
    {
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(invalid("integrator tolerances must be positive"));
        }
        if t_out.iter().any(|t| !t.is_finite()) || !t0.is_finite() {
            return Err(invalid("output times must be finite"));
        }
        if t_out.first().is_some_and(|&t| t < t0) || t_out.windows(2).any(|w| w[1] < w[0]) {
            return Err(invalid("output times must be non-decreasing and not precede t0"));
        }
        let n = y0.len();
        let mut stats = Stats::default();
        let mut y = y0.to_vec();
        let mut t = t0;
        let mut next = 0;
        while next < t_out.len() && t_out[next] == t0 {
            out(next, t0, &y)?;
            next += 1;
        }
        let Some(&t_end) = t_out.last() else { return Ok(stats) };
        if next == t_out.len() {
            return Ok(stats);
        }

        let zero = C64::new(0.0, 0.0);
        let mut k1 = vec![zero; n];
        let mut k2 = vec![zero; n];
        let mut k3 = vec![zero; n];
        let mut k4 = vec![zero; n];
        let mut k5 = vec![zero; n];
        let mut k6 = vec![zero; n];
        let mut k7 = vec![zero; n];
        let mut stage = vec![zero; n];
        let mut y_new = vec![zero; n];
        let mut rcont = [vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]];
        let mut dense = vec![zero; n];

        f(&y, &mut k1);
        stats.evaluations += 1;
        let hmax = t_end - t0;
        let mut h = self.initial_step(&mut f, &y, &k1, hmax, &mut stats);
        let mut fac_old = 1e-4f64;
        let mut last_rejected = false;

        loop {
            if stats.accepted + stats.rejected >= self.max_steps {
                return Err(Error::StepLimit(self.max_steps));
            }
            if h.abs() <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t, h });
            }
            let remaining = t_end - t;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }

            let combo = |stage: &mut [C64], terms: &[(&[C64], f64)]| {
                for (i, s) in stage.iter_mut().enumerate() {
                    let mut acc = y[i];
                    for &(k, a) in terms {
                        if a != 0.0 {
                            acc += k[i] * (h * a);
                        }
                    }
                    *s = acc;
                }
            };
            combo(&mut stage, &[(&k1, A21)]);
            f(&stage, &mut k2);
            combo(&mut stage, &[(&k1, A31), (&k2, A32)]);
            f(&stage, &mut k3);
            combo(&mut stage, &[(&k1, A41), (&k2, A42), (&k3, A43)]);
            f(&stage, &mut k4);
            combo(&mut stage, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]);
            f(&stage, &mut k5);
            combo(&mut stage, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)]);
            f(&stage, &mut k6);
            combo(&mut y_new, &[(&k1, A71), (&k3, A73), (&k4, A74), (&k5, A75), (&k6, A76)]);
            f(&y_new, &mut k7);
            stats.evaluations += 6;

            let mut err = 0.0;
            for i in 0..n {
                let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
                let sk = self.atol + self.rtol * y[i].norm().max(y_new[i].norm());
                err += (e.norm() / sk).powi(2);
            }
            let err = (err / n.max(1) as f64).sqrt();
            if !err.is_finite() {
                stats.rejected += 1;
                h *= FAC_MIN;
                last_rejected = true;
                continue;
            }

            let fac11 = err.powf(0.2 - BETA * 0.75);
            if err <= 1.0 {
                stats.accepted += 1;
                // Continuous extension over [t, t + h].
                for i in 0..n {
                    let ydiff = y_new[i] - y[i];
                    let bspl = k1[i] * h - ydiff;
                    rcont[0][i] = y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - k7[i] * h - bspl;
                    rcont[4][i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
                }
                let t_new = if last { t_end } else { t + h };
                while next < t_out.len() && (t_out[next] <= t_new || last) {
                    let to = t_out[next];
                    if to == t_new {
                        out(next, to, &y_new)?;
                    } else {
                        let theta = (to - t) / h;
                        let theta1 = 1.0 - theta;
                        for i in 0..n {
                            dense[i] = rcont[0][i]
                                + (rcont[1][i] + (rcont[2][i] + (rcont[3][i] + rcont[4][i] * theta1) * theta) * theta1)
                                    * theta;
                        }
                        out(next, to, &dense)?;
                    }
                    next += 1;
                }
                std::mem::swap(&mut y, &mut y_new);
                std::mem::swap(&mut k1, &mut k7);
                t = t_new;
                if next == t_out.len() {
                    return Ok(stats);
                }
                let mut fac = fac11 / fac_old.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if last_rejected {
                    h_new = h_new.min(h);
                }
                fac_old = err.max(1e-4);
                last_rejected = false;
                h = h_new;
            } else {
                stats.rejected += 1;
                h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
                last_rejected = true;
            }
        }
    }

    fn initial_step<F>(&self, f: &mut F, y: &[C64], f0: &[C64], hmax: f64, stats: &mut Stats) -> f64
    where
        F: FnMut(&[C64], &mut [C64]),
    {
        let sk: Vec<f64> = y.iter().map(|v| self.atol + self.rtol * v.norm()).collect();
        let dnf: f64 = f0.iter().zip(&sk).map(|(v, s)| (v.norm() / s).powi(2)).sum();
        let dny: f64 = y.iter().zip(&sk).map(|(v, s)| (v.norm() / s).powi(2)).sum();
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
        h = h.min(hmax);
        let y1: Vec<C64> = y.iter().zip(f0).map(|(a, b)| a + b * h).collect();
        let mut f1 = vec![C64::new(0.0, 0.0); y.len()];
        f(&y1, &mut f1);
        stats.evaluations += 1;
        let der2 = f1.iter().zip(f0).zip(&sk).map(|((a, b), s)| ((a - b).norm() / s).powi(2)).sum::<f64>().sqrt() / h;
        let der12 = der2.abs().max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
        (100.0 * h).min(h1).min(hmax)
    }
}
