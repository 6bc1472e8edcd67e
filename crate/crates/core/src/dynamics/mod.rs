//! Time integration of the patch network and classification of the
//! long-time behaviour.

mod attractor;
pub mod integrator;

pub use attractor::{classify_attractor, find_peaks, AttractorOptions, AttractorVerdict, Peak};
pub use integrator::IntegratorOptions;

use serde::{Deserialize, Serialize};

use crate::error::DynamicsError;
use crate::network::PatchNetwork;

const MIN_TOL: f64 = 1e-12;
const MAX_TOL: f64 = 1e-2;
const DEFAULT_SAMPLES: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrateOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Sample spacing; defaults to `t_end / 2000`.
    pub sample_dt: Option<f64>,
    /// Constant step size with error control switched off.
    pub fixed_step: Option<f64>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-12, sample_dt: None, fixed_step: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub n: usize,
    pub times: Vec<f64>,
    /// Each sample is `(x_1..x_n, y_1..y_n)`.
    pub states: Vec<Vec<f64>>,
    pub accepted: usize,
    pub rejected: usize,
    /// Largest `|sum(dx + dy) - lambda (sum a - sum x)|` seen at accepted steps.
    pub max_mass_residual: f64,
    /// Largest state infinity norm seen at accepted steps.
    pub max_state_norm: f64,
}

impl Trajectory {
    pub fn x(&self, k: usize) -> &[f64] {
        &self.states[k][..self.n]
    }

    pub fn y(&self, k: usize) -> &[f64] {
        &self.states[k][self.n..]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn check_tol(name: &str, v: f64) -> Result<(), DynamicsError> {
    if (MIN_TOL..=MAX_TOL).contains(&v) {
        Ok(())
    } else {
        Err(DynamicsError::InvalidInput(format!("{name} = {v:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]")))
    }
}

/// Integrates the network from `initial = (x, y)` over `[0, t_end]`.
pub fn integrate(
    model: &PatchNetwork,
    initial: &[f64],
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<Trajectory, DynamicsError> {
    let n = model.n();
    if initial.len() != 2 * n {
        return Err(DynamicsError::InvalidInput(format!("initial state has {} entries, expected {}", initial.len(), 2 * n)));
    }
    if initial.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(DynamicsError::InvalidInput("initial state must be finite and nonnegative".into()));
    }
    if initial.iter().all(|v| *v == 0.0) {
        return Err(DynamicsError::InvalidInput("initial state is identically zero".into()));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(DynamicsError::InvalidInput(format!("t_end = {t_end} must be positive")));
    }
    check_tol("rel_tol", opts.rel_tol)?;
    check_tol("abs_tol", opts.abs_tol)?;
    let sample_dt = opts.sample_dt.unwrap_or(t_end / DEFAULT_SAMPLES);
    if !(sample_dt > 0.0) {
        return Err(DynamicsError::InvalidInput(format!("sample_dt = {sample_dt} must be positive")));
    }

    let iopts = IntegratorOptions { fixed_step: opts.fixed_step, ..IntegratorOptions::new(opts.rel_tol, opts.abs_tol, sample_dt) };
    let total_a: f64 = model.a.iter().sum();
    let mut max_mass: f64 = 0.0;
    let mut max_norm: f64 = 0.0;
    let sol = integrator::integrate(
        |_, s, out| model.rhs_into(s, out),
        0.0,
        initial,
        t_end,
        &iopts,
        |_, s, ds| {
            let sum_x: f64 = s[..n].iter().sum();
            let r = (ds.iter().sum::<f64>() - model.lambda * (total_a - sum_x)).abs();
            max_mass = max_mass.max(r);
            max_norm = max_norm.max(s.iter().fold(0.0, |m, v| m.max(v.abs())));
        },
    )?;
    Ok(Trajectory {
        n,
        times: sol.times,
        states: sol.states,
        accepted: sol.accepted,
        rejected: sol.rejected,
        max_mass_residual: max_mass,
        max_state_norm: max_norm,
    })
}

/// Largest mass-law residual over the stored samples, using the model's own
/// right-hand side.
pub fn mass_law_residual(model: &PatchNetwork, traj: &Trajectory) -> f64 {
    mass_law_residual_with(|s, out| model.rhs_into(s, out), model.lambda, &model.a, traj)
}

/// Same as [`mass_law_residual`] with an arbitrary right-hand side.
pub fn mass_law_residual_with<F>(mut rhs: F, lambda: f64, a: &[f64], traj: &Trajectory) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = traj.n;
    let total_a: f64 = a.iter().sum();
    let mut out = vec![0.0; 2 * n];
    traj.states
        .iter()
        .map(|s| {
            rhs(s, &mut out);
            let sum_x: f64 = s[..n].iter().sum();
            (out.iter().sum::<f64>() - lambda * (total_a - sum_x)).abs()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CouplingMatrix;

    fn two_patch(lambda: f64, beta: f64) -> PatchNetwork {
        let p = CouplingMatrix::new(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        PatchNetwork::new(p.clone(), p, vec![1.0, 1.0], vec![1.0, 1.0], beta, lambda, 1.0).unwrap()
    }

    #[test]
    fn default_sampling_and_endpoints() {
        let m = two_patch(0.5, 1.0);
        let tr = integrate(&m, &[1.0, 1.2, 0.8, 1.0], 10.0, &IntegrateOptions::default()).unwrap();
        assert_eq!(tr.times.len(), 2001);
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(*tr.times.last().unwrap(), 10.0);
        assert!(tr.states.iter().flatten().all(|v| *v > 0.0));
        assert!(tr.max_mass_residual <= 1e-10 * tr.max_state_norm.max(1.0));
        assert!(mass_law_residual(&m, &tr) <= 1e-10 * tr.max_state_norm.max(1.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = two_patch(0.5, 1.0);
        let o = IntegrateOptions::default();
        assert!(integrate(&m, &[1.0, 1.0, 1.0], 1.0, &o).is_err());
        assert!(integrate(&m, &[0.0; 4], 1.0, &o).is_err());
        assert!(integrate(&m, &[1.0, -1.0, 1.0, 1.0], 1.0, &o).is_err());
        assert!(integrate(&m, &[1.0; 4], 0.0, &o).is_err());
        assert!(integrate(&m, &[1.0; 4], 1.0, &IntegrateOptions { rel_tol: 1e-13, ..o }).is_err());
        assert!(integrate(&m, &[1.0; 4], 1.0, &IntegrateOptions { abs_tol: 0.1, ..o }).is_err());
    }

    #[test]
    fn zero_components_become_positive() {
        let m = two_patch(0.5, 1.0);
        let tr = integrate(&m, &[1.0, 0.0, 0.0, 1.0], 2.0, &IntegrateOptions::default()).unwrap();
        assert!(tr.states[1..].iter().flatten().all(|v| *v > 0.0));
    }

    #[test]
    fn deterministic() {
        let m = two_patch(0.5, 2.5);
        let o = IntegrateOptions::default();
        let a = integrate(&m, &[1.0, 1.0, 1.0, 1.0], 5.0, &o).unwrap();
        let b = integrate(&m, &[1.0, 1.0, 1.0, 1.0], 5.0, &o).unwrap();
        assert_eq!(a, b);
    }
}
