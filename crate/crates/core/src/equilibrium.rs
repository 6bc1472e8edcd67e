//! Positive equilibrium of the patch network.
//!
//! At `lambda = 0` the coupling alone fixes the shape of the state (a
//! multiple of the Perron vectors) and the two amplitudes follow from the
//! summed reaction balances in closed form. For `lambda > 0` Newton's method
//! is run on the full `2n` system starting from that closed form, marching
//! in `lambda` from zero when a direct attempt fails.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::EquilibriumError;
use crate::linalg::vec_norm_inf;
use crate::network::{PatchNetwork, PerronPair};

const MAX_NEWTON_ITERS: usize = 50;
const MAX_HALVINGS: usize = 30;
const TOL: f64 = 1e-12;
const MAX_CONTINUATION_STEP: f64 = 0.02;

/// Closed-form amplitudes of the `lambda = 0` equilibrium
/// `(x, y) = (c0 xi, r0beta eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZerothOrderEquilibrium {
    pub c0: f64,
    pub r0beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Coefficient of `xi` in `x`; `u = x - c xi` has zero sum.
    pub c: f64,
    /// Coefficient of `eta` in `y`; `v = y - r eta` has zero sum.
    pub r: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub residual: f64,
    pub lambda: f64,
    pub beta: f64,
}

impl Equilibrium {
    pub fn state(&self) -> Vec<f64> {
        self.x.iter().chain(&self.y).copied().collect()
    }

    pub fn norm_inf(&self) -> f64 {
        vec_norm_inf(&self.x).max(vec_norm_inf(&self.y))
    }

    fn build(model: &PatchNetwork, perron: &PerronPair, x: Vec<f64>, y: Vec<f64>) -> Self {
        let (c, u) = decompose(&x, &perron.xi);
        let (r, v) = decompose(&y, &perron.eta);
        let residual = residual(model, &x, &y);
        Self { x, y, c, r, u, v, residual, lambda: model.lambda, beta: model.beta }
    }
}

pub fn zeroth_order(model: &PatchNetwork, perron: &PerronPair) -> ZerothOrderEquilibrium {
    let c0: f64 = model.a.iter().sum();
    let bxi: f64 = model.b.iter().zip(&perron.xi).map(|(b, x)| b * x).sum();
    let xxe: f64 = perron.xi.iter().zip(&perron.eta).map(|(x, e)| x * x * e).sum();
    ZerothOrderEquilibrium { c0, r0beta: model.beta * bxi / (c0 * xxe) }
}

/// Splits `w` into its component along `direction` (which sums to one) and
/// a zero-sum remainder.
pub fn decompose(w: &[f64], direction: &[f64]) -> (f64, Vec<f64>) {
    let coefficient: f64 = w.iter().sum();
    let remainder = w.iter().zip(direction).map(|(wi, di)| wi - coefficient * di).collect();
    (coefficient, remainder)
}

/// Infinity norm of the equilibrium equations at `(x, y)`.
pub fn residual(model: &PatchNetwork, x: &[f64], y: &[f64]) -> f64 {
    let (dx, dy) = model.rhs(x, y);
    vec_norm_inf(&dx).max(vec_norm_inf(&dy))
}

/// Solves for the positive equilibrium at the model's `(lambda, beta)`.
///
/// `init` is an optional stacked `(x, y)` starting point; the closed-form
/// `lambda = 0` state is used otherwise.
pub fn solve(
    model: &PatchNetwork,
    perron: &PerronPair,
    init: Option<&[f64]>,
) -> Result<Equilibrium, EquilibriumError> {
    let n = model.n();
    let z0 = zeroth_order(model, perron);
    let base: Vec<f64> = perron
        .xi
        .iter()
        .map(|v| z0.c0 * v)
        .chain(perron.eta.iter().map(|v| z0.r0beta * v))
        .collect();

    if model.lambda == 0.0 {
        let (x, y) = base.split_at(n);
        return Ok(Equilibrium::build(model, perron, x.to_vec(), y.to_vec()));
    }

    let start = match init {
        Some(s) if s.len() != 2 * n => return Err(EquilibriumError::Shape { expected: 2 * n, got: s.len() }),
        Some(s) => s.to_vec(),
        None => base.clone(),
    };

    let state = match newton(model, start) {
        Ok(z) => z,
        Err(_) => continuation(model, base)?,
    };

    let (x, y) = state.split_at(n);
    let min = state.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(EquilibriumError::Positivity { lambda: model.lambda, min, x: x.to_vec(), y: y.to_vec() });
    }
    Ok(Equilibrium::build(model, perron, x.to_vec(), y.to_vec()))
}

fn continuation(model: &PatchNetwork, mut state: Vec<f64>) -> Result<Vec<f64>, EquilibriumError> {
    let target = model.lambda;
    let step = MAX_CONTINUATION_STEP.min(target / 5.0);
    let steps = (target / step).ceil() as usize;
    for k in 1..=steps {
        let lam = if k == steps { target } else { k as f64 * step };
        state = newton(&model.with_lambda(lam), state)?;
    }
    Ok(state)
}

fn newton(model: &PatchNetwork, mut z: Vec<f64>) -> Result<Vec<f64>, EquilibriumError> {
    let n = model.n();
    let mut f = vec![0.0; 2 * n];
    let mut trial = vec![0.0; 2 * n];
    let mut ft = vec![0.0; 2 * n];

    let fail = |z: &[f64], res: f64| EquilibriumError::NoConvergence {
        lambda: model.lambda,
        residual: res,
        x: z[..n].to_vec(),
        y: z[n..].to_vec(),
    };

    model.rhs_into(&z, &mut f);
    let mut res = vec_norm_inf(&f);
    for _ in 0..MAX_NEWTON_ITERS {
        if !res.is_finite() {
            return Err(fail(&z, res));
        }
        let scale = vec_norm_inf(&z).max(1.0);
        let jac = model.jacobian(&z[..n], &z[n..]);
        let rhs = DVector::from_iterator(2 * n, f.iter().map(|v| -v));
        let dz = match jac.lu().solve(&rhs) {
            Some(d) if d.iter().all(|v| v.is_finite()) => d,
            _ => return Err(fail(&z, res)),
        };
        let step = dz.amax();
        if res <= TOL * scale && step <= TOL * scale {
            for (zi, di) in z.iter_mut().zip(dz.iter()) {
                *zi += di;
            }
            return Ok(z);
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            for i in 0..2 * n {
                trial[i] = z[i] + t * dz[i];
            }
            model.rhs_into(&trial, &mut ft);
            let rt = vec_norm_inf(&ft);
            if rt < res {
                std::mem::swap(&mut z, &mut trial);
                std::mem::swap(&mut f, &mut ft);
                res = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // stagnated at round-off level
            if res <= TOL * scale {
                return Ok(z);
            }
            return Err(fail(&z, res));
        }
    }
    if res <= TOL * vec_norm_inf(&z).max(1.0) {
        Ok(z)
    } else {
        Err(fail(&z, res))
    }
}
