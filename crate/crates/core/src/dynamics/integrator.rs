//! Dormand–Prince 5(4) with PI step control and quartic dense output.

use crate::error::DynamicsError;
use crate::linalg::vec_norm_inf;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

// fifth- minus fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MAX_SHRINK: f64 = 0.1;
const PI_BETA: f64 = 0.04;
const MIN_STEP: f64 = 1e-12;
const MAX_POSITIVITY_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Spacing of the stored samples.
    pub sample_dt: f64,
    /// Disables error control and steps with this size.
    pub fixed_step: Option<f64>,
    /// Rejects steps that leave the open positive orthant.
    pub keep_positive: bool,
    pub max_steps: usize,
}

impl IntegratorOptions {
    pub fn new(rel_tol: f64, abs_tol: f64, sample_dt: f64) -> Self {
        Self { rel_tol, abs_tol, sample_dt, fixed_step: None, keep_positive: true, max_steps: 20_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Solution {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
}

/// Integrates `dy/dt = f(t, y)` from `t0` to `t_end`.
///
/// `on_accept(t, y, dydt)` is called with the derivative evaluation at the
/// start of every accepted step and once at the end point.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &IntegratorOptions,
    mut on_accept: O,
) -> Result<Solution, DynamicsError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64], &[f64]),
{
    let dim = y0.len();
    if !(t_end > t0) {
        return Err(DynamicsError::InvalidInput(format!("t_end = {t_end} must exceed t0 = {t0}")));
    }
    if !(opts.sample_dt > 0.0) {
        return Err(DynamicsError::InvalidInput("sample spacing must be positive".into()));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::BlowUp { t: t0 });
    }

    let mut sol = Solution::default();
    sol.times.push(t0);
    sol.states.push(y0.to_vec());
    let mut next_sample = 1usize;
    let sample_time = |k: usize| (t0 + k as f64 * opts.sample_dt).min(t_end);

    let mut y = y0.to_vec();
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut k5 = vec![0.0; dim];
    let mut k6 = vec![0.0; dim];
    let mut k7 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    let mut y1 = vec![0.0; dim];
    let mut cont = vec![vec![0.0; dim]; 5];
    let mut pending: Vec<(f64, Vec<f64>)> = Vec::new();

    let mut t = t0;
    f(t, &y, &mut k1);
    let mut h = match opts.fixed_step {
        Some(h) if h > 0.0 => h,
        Some(h) => return Err(DynamicsError::InvalidInput(format!("fixed step {h} must be positive"))),
        None => initial_step(&mut f, t, &y, &k1, opts),
    };
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut halvings = 0usize;
    let mut steps = 0usize;

    while t < t_end {
        steps += 1;
        if steps > opts.max_steps {
            return Err(DynamicsError::StepUnderflow { t, h });
        }
        if h < MIN_STEP && t_end - t > MIN_STEP {
            return Err(DynamicsError::StepUnderflow { t, h });
        }
        let last = t + h >= t_end;
        let h_step = if last { t_end - t } else { h };

        for i in 0..dim {
            tmp[i] = y[i] + h_step * A21 * k1[i];
        }
        f(t + C2 * h_step, &tmp, &mut k2);
        for i in 0..dim {
            tmp[i] = y[i] + h_step * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h_step, &tmp, &mut k3);
        for i in 0..dim {
            tmp[i] = y[i] + h_step * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h_step, &tmp, &mut k4);
        for i in 0..dim {
            tmp[i] = y[i] + h_step * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h_step, &tmp, &mut k5);
        for i in 0..dim {
            tmp[i] = y[i] + h_step * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        f(t + h_step, &tmp, &mut k6);
        for i in 0..dim {
            y1[i] = y[i] + h_step * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        let t_new = if last { t_end } else { t + h_step };
        f(t_new, &y1, &mut k7);

        if y1.iter().chain(k7.iter()).any(|v| !v.is_finite()) {
            sol.rejected += 1;
            last_rejected = true;
            h = h_step * MAX_SHRINK;
            if h < MIN_STEP {
                return Err(DynamicsError::BlowUp { t });
            }
            continue;
        }

        let err = if opts.fixed_step.is_some() {
            0.0
        } else {
            let mut acc = 0.0;
            for i in 0..dim {
                let e = h_step * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y1[i].abs());
                acc += (e / sc) * (e / sc);
            }
            (acc / dim as f64).sqrt()
        };

        if err > 1.0 {
            sol.rejected += 1;
            last_rejected = true;
            let fac11 = err.powf(0.2 - PI_BETA * 0.75);
            h = h_step / (fac11 / SAFETY).min(1.0 / MAX_SHRINK);
            continue;
        }

        // dense output coefficients for this step
        for i in 0..dim {
            let ydiff = y1[i] - y[i];
            let bspl = h_step * k1[i] - ydiff;
            cont[0][i] = y[i];
            cont[1][i] = ydiff;
            cont[2][i] = bspl;
            cont[3][i] = ydiff - h_step * k7[i] - bspl;
            cont[4][i] = h_step
                * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
        }
        pending.clear();
        let mut k = next_sample;
        loop {
            let ts = sample_time(k);
            if ts > t_new {
                break;
            }
            let s = if ts == t_new {
                y1.clone()
            } else {
                let th = (ts - t) / h_step;
                let th1 = 1.0 - th;
                (0..dim)
                    .map(|i| {
                        cont[0][i]
                            + th * (cont[1][i] + th1 * (cont[2][i] + th * (cont[3][i] + th1 * cont[4][i])))
                    })
                    .collect()
            };
            pending.push((ts, s));
            k += 1;
            if ts >= t_end {
                break;
            }
        }

        if opts.keep_positive {
            let bad = y1.iter().any(|v| *v <= 0.0) || pending.iter().any(|(_, s)| s.iter().any(|v| *v <= 0.0));
            if bad {
                sol.rejected += 1;
                halvings += 1;
                if halvings > MAX_POSITIVITY_HALVINGS {
                    return Err(DynamicsError::PositivityLost { t });
                }
                last_rejected = true;
                h = 0.5 * h_step;
                if opts.fixed_step.is_some() && h < MIN_STEP {
                    return Err(DynamicsError::PositivityLost { t });
                }
                continue;
            }
        }
        halvings = 0;

        on_accept(t, &y, &k1);
        sol.accepted += 1;
        for (ts, s) in pending.drain(..) {
            sol.times.push(ts);
            sol.states.push(s);
        }
        next_sample = k;
        t = t_new;
        std::mem::swap(&mut y, &mut y1);
        std::mem::swap(&mut k1, &mut k7);

        h = if let Some(fixed) = opts.fixed_step {
            fixed
        } else {
            let fac11 = err.powf(0.2 - PI_BETA * 0.75);
            let fac = (fac11 / fac_old.powf(PI_BETA) / SAFETY).clamp(1.0 / MAX_GROWTH, 1.0 / MAX_SHRINK);
            fac_old = err.max(1e-4);
            let mut hn = h_step / fac;
            if last_rejected {
                hn = hn.min(h_step);
            }
            hn
        };
        last_rejected = false;
    }
    on_accept(t, &y, &k1);
    if sol.times.last() != Some(&t_end) {
        sol.times.push(t_end);
        sol.states.push(y);
    }
    Ok(sol)
}

fn initial_step<F>(f: &mut F, t: f64, y: &[f64], f0: &[f64], opts: &IntegratorOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let dim = y.len();
    let sc: Vec<f64> = y.iter().map(|v| opts.abs_tol + opts.rel_tol * v.abs()).collect();
    let rms = |v: &[f64]| (v.iter().zip(&sc).map(|(a, s)| (a / s) * (a / s)).sum::<f64>() / dim as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(a, b)| a + h0 * b).collect();
    let mut f1 = vec![0.0; dim];
    f(t + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    let h = (100.0 * h0).min(h1);
    if vec_norm_inf(f0) == 0.0 {
        h.max(1e-6)
    } else {
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let opts = IntegratorOptions { keep_positive: false, ..IntegratorOptions::new(1e-10, 1e-12, 0.5) };
        let sol = integrate(|_, y, dy| dy[0] = -y[0], 0.0, &[1.0], 5.0, &opts, |_, _, _| {}).unwrap();
        assert_eq!(sol.times.len(), 11);
        for (t, s) in sol.times.iter().zip(&sol.states) {
            assert!((s[0] - (-t).exp()).abs() < 1e-9, "t={t}");
        }
        assert_eq!(*sol.times.last().unwrap(), 5.0);
    }

    #[test]
    fn harmonic_oscillator_dense_output() {
        let opts = IntegratorOptions { keep_positive: false, ..IntegratorOptions::new(1e-9, 1e-12, 0.01) };
        let sol = integrate(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            0.0,
            &[1.0, 0.0],
            10.0,
            &opts,
            |_, _, _| {},
        )
        .unwrap();
        let worst = sol
            .times
            .iter()
            .zip(&sol.states)
            .map(|(t, s)| (s[0] - t.cos()).abs().max((s[1] + t.sin()).abs()))
            .fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst}");
        for w in sol.times.windows(2) {
            assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn fixed_step_is_fifth_order() {
        let f = |_: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let err = |h: f64| {
            let opts = IntegratorOptions {
                fixed_step: Some(h),
                keep_positive: false,
                ..IntegratorOptions::new(1e-6, 1e-6, 1.0)
            };
            let s = integrate(f, 0.0, &[1.0, 0.0], 5.0, &opts, |_, _, _| {}).unwrap();
            let y = s.states.last().unwrap();
            (y[0] - 5f64.cos()).abs().max((y[1] + 5f64.sin()).abs())
        };
        let r = err(0.1) / err(0.05);
        assert!(r > 32.0 / 3.0 && r < 96.0, "ratio {r}");
    }

    #[test]
    fn positivity_is_enforced() {
        // dy/dt = -1 reaches zero at t = 1; the flow leaves the orthant
        let opts = IntegratorOptions::new(1e-8, 1e-10, 0.1);
        let r = integrate(|_, _, dy| dy[0] = -1.0, 0.0, &[1.0], 2.0, &opts, |_, _, _| {});
        assert!(matches!(r, Err(DynamicsError::PositivityLost { .. }) | Err(DynamicsError::StepUnderflow { .. })));
    }

    #[test]
    fn blow_up_is_reported() {
        let opts = IntegratorOptions { keep_positive: false, ..IntegratorOptions::new(1e-6, 1e-9, 0.1) };
        let r = integrate(|_, y, dy| dy[0] = y[0] * y[0], 0.0, &[1.0], 2.0, &opts, |_, _, _| {});
        assert!(r.is_err());
    }

    #[test]
    fn rejects_bad_requests() {
        let opts = IntegratorOptions::new(1e-6, 1e-9, 0.1);
        assert!(integrate(|_, _, dy| dy[0] = 0.0, 1.0, &[1.0], 0.5, &opts, |_, _, _| {}).is_err());
        let bad = IntegratorOptions { sample_dt: 0.0, ..opts };
        assert!(integrate(|_, _, dy| dy[0] = 0.0, 0.0, &[1.0], 0.5, &bad, |_, _, _| {}).is_err());
    }
}
