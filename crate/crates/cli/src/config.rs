//! Scenario files and the built-in scenarios.

use std::path::Path;

use brusselator_net::network::validate_coupling;
use brusselator_net::{CouplingMatrix, PatchNetwork, ValidationReport};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const BUILTIN_NAMES: [&str; 3] = ["paper-3patch-L", "paper-3patch-NL", "paper-5patch"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Values of `beta` simulated by `reproduce`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate_betas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "P", alias = "p")]
    pub p: Vec<Vec<f64>>,
    #[serde(rename = "Q", alias = "q")]
    pub q: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    #[serde(default)]
    pub run: RunOptions,
}

fn p_line_sum() -> Vec<Vec<f64>> {
    vec![vec![-2., 1., 1.], vec![1., -3., 2.], vec![1., 2., -3.]]
}

fn p_non_line_sum() -> Vec<Vec<f64>> {
    vec![vec![-3., 2., 3.], vec![2., -3., 2.], vec![1., 1., -5.]]
}

fn three_patch(name: &str, p: Vec<Vec<f64>>) -> ScenarioConfig {
    ScenarioConfig {
        name: name.into(),
        n: Some(3),
        q: p.clone(),
        p,
        a: vec![1.0; 3],
        b: vec![1.0; 3],
        lambda: Some(0.1),
        theta: Some(1.0),
        d1: None,
        d2: None,
        beta: Some(2.05),
        beta_range: None,
        initial: Some(InitialState { x: vec![1.0; 3], y: vec![1.0; 3] }),
        run: RunOptions { t_end: Some(2000.0), simulate_betas: Some(vec![2.05]), ..Default::default() },
    }
}

fn five_patch() -> ScenarioConfig {
    ScenarioConfig {
        name: "paper-5patch".into(),
        n: Some(5),
        p: vec![
            vec![-4., 1., 1., 1., 1.],
            vec![1., -5., 2., 1., 1.],
            vec![1., 1., -5., 1., 1.],
            vec![1., 2., 1., -4., 2.],
            vec![1., 1., 1., 1., -5.],
        ],
        q: vec![
            vec![-5., 1., 1., 1., 1.],
            vec![1., -6., 2., 1., 1.],
            vec![1., 1., -5., 1., 1.],
            vec![2., 1., 1., -6., 3.],
            vec![1., 3., 1., 3., -6.],
        ],
        a: vec![1., 2., 1., 0.5, 1.],
        b: vec![0.1, 0.2, 0.4, 0.1, 0.2],
        lambda: Some(0.1),
        theta: Some(1.0),
        d1: None,
        d2: None,
        beta: None,
        beta_range: Some((10.0, 13.0)),
        initial: Some(InitialState { x: vec![0.5, 1., 1., 0.5, 1.], y: vec![2., 1., 2., 1., 1.] }),
        run: RunOptions { t_end: Some(2000.0), simulate_betas: Some(vec![10.0, 13.0]), ..Default::default() },
    }
}

pub fn builtin(name: &str) -> Option<ScenarioConfig> {
    match name {
        "paper-3patch-L" => Some(three_patch(name, p_line_sum())),
        "paper-3patch-NL" => Some(three_patch(name, p_non_line_sum())),
        "paper-5patch" => Some(five_patch()),
        _ => None,
    }
}

pub fn unknown_scenario(name: &str) -> CliError {
    CliError::Usage(format!("unknown scenario '{name}'; built-in scenarios are: {}", BUILTIN_NAMES.join(", ")))
}

/// Loads a config from a file path, falling back to the built-in of that
/// name.
pub fn load(source: &str) -> Result<ScenarioConfig, CliError> {
    let path = Path::new(source);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        let cfg: ScenarioConfig = serde_json::from_str(&text)?;
        return Ok(cfg);
    }
    builtin(source).ok_or_else(|| {
        CliError::Usage(format!(
            "'{source}' is neither a readable file nor a built-in scenario ({})",
            BUILTIN_NAMES.join(", ")
        ))
    })
}

impl ScenarioConfig {
    fn size(&self) -> usize {
        self.n.unwrap_or(self.p.len())
    }

    /// Shape and parameter-presence checks that do not look at the
    /// coupling invariants.
    pub fn check_structure(&self) -> Result<(), CliError> {
        let n = self.size();
        let shape = |what: &str, m: &[Vec<f64>]| -> Result<(), CliError> {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                let cols: Vec<usize> = m.iter().map(Vec::len).collect();
                return Err(CliError::Usage(format!("{what} must be {n}x{n}; got {} rows with lengths {cols:?}", m.len())));
            }
            Ok(())
        };
        shape("P", &self.p)?;
        shape("Q", &self.q)?;
        for (what, v) in [("a", &self.a), ("b", &self.b)] {
            if v.len() != n {
                return Err(CliError::Usage(format!("{what} has {} entries, expected {n}", v.len())));
            }
        }
        let rescaled = self.lambda.is_some() || self.theta.is_some();
        let dispersal = self.d1.is_some() || self.d2.is_some();
        match (rescaled, dispersal) {
            (true, true) => return Err(CliError::Usage("give either (lambda, theta) or (d1, d2), not both".into())),
            (false, false) => return Err(CliError::Usage("missing (lambda, theta) or (d1, d2)".into())),
            (true, false) if self.lambda.is_none() || self.theta.is_none() => {
                return Err(CliError::Usage("lambda and theta must be given together".into()))
            }
            (false, true) if self.d1.is_none() || self.d2.is_none() => {
                return Err(CliError::Usage("d1 and d2 must be given together".into()))
            }
            _ => {}
        }
        if self.beta.is_some() && self.beta_range.is_some() {
            return Err(CliError::Usage("give either beta or beta_range, not both".into()));
        }
        if let Some(init) = &self.initial {
            if init.x.len() != n || init.y.len() != n {
                return Err(CliError::Usage(format!("initial state must have {n} entries per species")));
            }
        }
        Ok(())
    }

    pub fn validation(&self) -> Result<(ValidationReport, ValidationReport), CliError> {
        self.check_structure()?;
        Ok((validate_coupling(&self.p)?, validate_coupling(&self.q)?))
    }

    /// Builds the model at the given `beta`, checking every invariant.
    pub fn network(&self, beta: f64) -> Result<PatchNetwork, CliError> {
        let (vp, vq) = self.validation()?;
        for (what, v) in [("P", &vp), ("Q", &vq)] {
            if !v.ok {
                let list: Vec<String> = v.violations.iter().map(|x| x.to_string()).collect();
                return Err(CliError::Domain(format!("{what} is not a valid coupling matrix: {}", list.join("; "))));
            }
        }
        let p = CouplingMatrix::new(&self.p)?;
        let q = CouplingMatrix::new(&self.q)?;
        let model = match (self.lambda, self.theta, self.d1, self.d2) {
            (Some(lambda), Some(theta), _, _) => {
                PatchNetwork::new(p, q, self.a.clone(), self.b.clone(), beta, lambda, theta)?
            }
            (_, _, Some(d1), Some(d2)) => PatchNetwork::from_dispersal(p, q, self.a.clone(), self.b.clone(), beta, d1, d2)?,
            _ => unreachable!("checked by check_structure"),
        };
        Ok(model)
    }

    /// `beta` from the flag, else the config; required.
    pub fn beta(&self, flag: Option<f64>) -> Result<f64, CliError> {
        flag.or(self.beta).ok_or_else(|| CliError::Usage("this command needs --beta or a 'beta' entry".into()))
    }

    /// Any admissible `beta` for commands that do not depend on it.
    pub fn nominal_beta(&self) -> f64 {
        self.beta.or(self.beta_range.map(|(lo, hi)| 0.5 * (lo + hi))).unwrap_or(1.0)
    }

    pub fn initial_state(&self) -> Vec<f64> {
        match &self.initial {
            Some(i) => i.x.iter().chain(&i.y).copied().collect(),
            None => vec![1.0; 2 * self.size()],
        }
    }

    /// Identical boxes with `P = Q`, uniform `a` and unit `b`.
    pub fn identical_boxes(&self) -> Option<f64> {
        let a0 = *self.a.first()?;
        let same = self.p == self.q && self.a.iter().all(|v| *v == a0) && self.b.iter().all(|v| *v == 1.0);
        same.then_some(a0)
    }
}
