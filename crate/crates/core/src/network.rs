//! Model data for an n-patch Brusselator network.
//!
//! Two coupling matrices move the reactants X and Y between boxes. Column
//! `k` of a coupling matrix describes what leaves box `k`: off-diagonal
//! entries are the rates into the other boxes and the diagonal is minus
//! their sum, so every column sums to zero. Together with irreducibility
//! this makes zero the Perron root, with a strictly positive null vector.
//!
//! The reaction terms are written in the rescaled time of the model, with
//! `lambda = 1/d1` multiplying the kinetics and `theta = d2/d1` scaling the
//! coupling of the second species.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::NetworkError;
use crate::linalg;

const COLUMN_SUM_TOL: f64 = 1e-12;
const NEGATIVE_ROUNDOFF: f64 = -1e-14;
const PERRON_RESIDUAL_TOL: f64 = 1e-10;
const POWER_ITERATION_BUDGET: usize = 200_000;

/// A single violated coupling-matrix invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "invariant", rename_all = "snake_case")]
pub enum Violation {
    NegativeOffDiagonal { row: usize, col: usize, value: f64 },
    NonzeroColumnSum { col: usize, sum: f64 },
    NotIrreducible { unreachable: Vec<usize> },
}

impl Violation {
    pub fn name(&self) -> &'static str {
        match self {
            Violation::NegativeOffDiagonal { .. } => "essentially nonnegative",
            Violation::NonzeroColumnSum { .. } => "column sums zero",
            Violation::NotIrreducible { .. } => "irreducible",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NegativeOffDiagonal { row, col, value } => {
                write!(f, "{}: entry ({row},{col}) = {value} < 0", self.name())
            }
            Violation::NonzeroColumnSum { col, sum } => {
                write!(f, "{}: column {col} sums to {sum:e}", self.name())
            }
            Violation::NotIrreducible { unreachable } => {
                write!(f, "{}: patches {unreachable:?} are not strongly connected to patch 0", self.name())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

/// Checks a raw row-major matrix against the coupling-matrix invariants.
///
/// Shape problems (ragged or non-square input, `n < 2`, non-finite
/// entries) are structural errors; broken invariants are collected in the
/// returned report.
pub fn validate_coupling(rows: &[Vec<f64>]) -> Result<ValidationReport, NetworkError> {
    let m = to_matrix(rows)?;
    Ok(validate_matrix(&m))
}

fn to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, NetworkError> {
    let n = rows.len();
    if n < 2 {
        return Err(NetworkError::TooSmall(n));
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(NetworkError::NotSquare { rows: n, row: i, len: r.len() });
        }
        if let Some(j) = r.iter().position(|v| !v.is_finite()) {
            return Err(NetworkError::NonFinite { row: i, col: j });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn validate_matrix(m: &DMatrix<f64>) -> ValidationReport {
    let n = m.nrows();
    let mut violations = Vec::new();

    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] < NEGATIVE_ROUNDOFF {
                violations.push(Violation::NegativeOffDiagonal { row: i, col: j, value: m[(i, j)] });
            }
        }
    }

    let tol = COLUMN_SUM_TOL * m.amax().max(1.0);
    for j in 0..n {
        let sum: f64 = m.column(j).iter().sum();
        if sum.abs() > tol {
            violations.push(Violation::NonzeroColumnSum { col: j, sum });
        }
    }

    let unreachable = not_strongly_connected(m);
    if !unreachable.is_empty() {
        violations.push(Violation::NotIrreducible { unreachable });
    }

    ValidationReport { ok: violations.is_empty(), violations }
}

/// Patches that fail forward or reverse reachability from patch 0 in the
/// digraph with an edge `k -> j` whenever `m[j][k] > 0`.
fn not_strongly_connected(m: &DMatrix<f64>) -> Vec<usize> {
    let n = m.nrows();
    let sweep = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(k) = stack.pop() {
            for j in 0..n {
                let w = if forward { m[(j, k)] } else { m[(k, j)] };
                if j != k && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen
    };
    let fwd = sweep(true);
    let bwd = sweep(false);
    (0..n).filter(|&j| !(fwd[j] && bwd[j])).collect()
}

/// Validated coupling matrix (essentially nonnegative, zero column sums,
/// irreducible).
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix(DMatrix<f64>);

impl CouplingMatrix {
    pub fn new(rows: &[Vec<f64>]) -> Result<Self, NetworkError> {
        let m = to_matrix(rows)?;
        Self::from_matrix(m)
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self, NetworkError> {
        if m.nrows() != m.ncols() {
            return Err(NetworkError::NotSquare { rows: m.nrows(), row: 0, len: m.ncols() });
        }
        if m.nrows() < 2 {
            return Err(NetworkError::TooSmall(m.nrows()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(NetworkError::NonFinite { row: 0, col: 0 });
        }
        let report = validate_matrix(&m);
        if !report.ok {
            return Err(NetworkError::Invalid(report));
        }
        Ok(Self(m))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n()).map(|i| self.0.row(i).iter().copied().collect()).collect()
    }

    /// Reorders patches: entry `(i, j)` of the result is entry
    /// `(perm[i], perm[j])` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        Self(DMatrix::from_fn(n, n, |i, j| self.0[(perm[i], perm[j])]))
    }

    /// Row and column off-diagonal sums agree for every patch.
    pub fn is_line_sum_symmetric(&self) -> bool {
        let m = &self.0;
        let n = self.n();
        let tol = COLUMN_SUM_TOL * m.amax().max(1.0);
        (0..n).all(|j| {
            let row: f64 = (0..n).filter(|&k| k != j).map(|k| m[(j, k)]).sum();
            let col: f64 = (0..n).filter(|&k| k != j).map(|k| m[(k, j)]).sum();
            (row - col).abs() <= tol
        })
    }

    /// `|M v|_inf`, the null-vector residual of `v`.
    pub fn null_residual(&self, v: &[f64]) -> f64 {
        perron_residual(&self.0, &DVector::from_column_slice(v))
    }

    /// Strictly positive null vector normalized to unit sum.
    pub fn perron_vector(&self) -> Result<Vec<f64>, NetworkError> {
        let m = &self.0;
        let n = self.n();

        let mut v = linalg::null_vector_full_pivot(m);
        let s: f64 = v.iter().sum();
        if s != 0.0 && s.is_finite() {
            v /= s;
            // one inverse-iteration refinement with a tiny shift
            let shift = 1e-8 * linalg::norm_inf(m).max(1.0);
            let shifted = m + DMatrix::identity(n, n) * shift;
            if let Some(z) = shifted.lu().solve(&v) {
                let s: f64 = z.iter().sum();
                if s != 0.0 && s.is_finite() {
                    let z = z / s;
                    if perron_residual(m, &z) <= perron_residual(m, &v) {
                        v = z;
                    }
                }
            }
            if acceptable(m, &v) {
                return Ok(v.iter().copied().collect());
            }
        }
        self.perron_by_power_iteration()
    }

    fn perron_by_power_iteration(&self) -> Result<Vec<f64>, NetworkError> {
        let m = &self.0;
        let n = self.n();
        let sigma = 1.0 + (0..n).map(|i| m[(i, i)].abs()).fold(0.0, f64::max);
        let b = m + DMatrix::identity(n, n) * sigma;
        let mut v = DVector::from_element(n, 1.0 / n as f64);
        let mut residual = f64::INFINITY;
        for _ in 0..POWER_ITERATION_BUDGET {
            let w = &b * &v;
            let s: f64 = w.iter().sum();
            v = w / s;
            residual = perron_residual(m, &v);
            if residual <= 0.1 * PERRON_RESIDUAL_TOL {
                break;
            }
        }
        if acceptable(m, &v) {
            Ok(v.iter().copied().collect())
        } else {
            Err(NetworkError::PerronNoConvergence { residual })
        }
    }
}

fn perron_residual(m: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (m * v).amax()
}

fn acceptable(m: &DMatrix<f64>, v: &DVector<f64>) -> bool {
    v.iter().all(|&x| x > 0.0) && perron_residual(m, v) <= PERRON_RESIDUAL_TOL
}

/// Perron vectors of the two coupling matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronPair {
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
}

impl PerronPair {
    pub fn new(p: &CouplingMatrix, q: &CouplingMatrix) -> Result<Self, NetworkError> {
        Ok(Self { xi: p.perron_vector()?, eta: q.perron_vector()? })
    }

    pub fn of(model: &PatchNetwork) -> Result<Self, NetworkError> {
        Self::new(&model.p, &model.q)
    }
}

/// Diagonals of the three reaction Jacobian blocks at a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobianBlocks {
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub m3: Vec<f64>,
}

/// Full model instance in rescaled time.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchNetwork {
    pub p: CouplingMatrix,
    pub q: CouplingMatrix,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub beta: f64,
    pub lambda: f64,
    pub theta: f64,
}

impl PatchNetwork {
    pub fn new(
        p: CouplingMatrix,
        q: CouplingMatrix,
        a: Vec<f64>,
        b: Vec<f64>,
        beta: f64,
        lambda: f64,
        theta: f64,
    ) -> Result<Self, NetworkError> {
        let n = p.n();
        if q.n() != n || a.len() != n || b.len() != n {
            return Err(NetworkError::ShapeMismatch(format!(
                "P is {n}x{n}, Q is {m}x{m}, a has {}, b has {}",
                a.len(),
                b.len(),
                m = q.n()
            )));
        }
        if let Some(j) = a.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(NetworkError::InvalidParameter(format!("a[{j}] = {} must be positive", a[j])));
        }
        if let Some(j) = b.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(NetworkError::InvalidParameter(format!("b[{j}] = {} must be positive", b[j])));
        }
        check_positive("beta", beta)?;
        check_positive("theta", theta)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(NetworkError::InvalidParameter(format!("lambda = {lambda} must be nonnegative")));
        }
        Ok(Self { p, q, a, b, beta, lambda, theta })
    }

    /// Builds the rescaled model from the dispersal rates of the two
    /// species: `lambda = 1/d1`, `theta = d2/d1`.
    pub fn from_dispersal(
        p: CouplingMatrix,
        q: CouplingMatrix,
        a: Vec<f64>,
        b: Vec<f64>,
        beta: f64,
        d1: f64,
        d2: f64,
    ) -> Result<Self, NetworkError> {
        check_positive("d1", d1)?;
        check_positive("d2", d2)?;
        Self::new(p, q, a, b, beta, 1.0 / d1, d2 / d1)
    }

    pub fn n(&self) -> usize {
        self.a.len()
    }

    pub fn d1(&self) -> f64 {
        1.0 / self.lambda
    }

    pub fn d2(&self) -> f64 {
        self.theta / self.lambda
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        Self { lambda, ..self.clone() }
    }

    /// Applies a patch permutation consistently to every input.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            p: self.p.permuted(perm),
            q: self.q.permuted(perm),
            a: perm.iter().map(|&i| self.a[i]).collect(),
            b: perm.iter().map(|&i| self.b[i]).collect(),
            ..self.clone()
        }
    }

    /// Right-hand side of the rescaled system.
    pub fn rhs(&self, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let mut state = Vec::with_capacity(2 * n);
        state.extend_from_slice(x);
        state.extend_from_slice(y);
        let mut out = vec![0.0; 2 * n];
        self.rhs_into(&state, &mut out);
        let dy = out.split_off(n);
        (out, dy)
    }

    /// Right-hand side on a stacked state `(x, y)`.
    pub fn rhs_into(&self, state: &[f64], out: &mut [f64]) {
        let n = self.n();
        let (x, y) = state.split_at(n);
        let p = self.p.matrix();
        let q = self.q.matrix();
        let lam = self.lambda;
        for j in 0..n {
            let mut cx = 0.0;
            let mut cy = 0.0;
            for k in 0..n {
                cx += p[(j, k)] * x[k];
                cy += q[(j, k)] * y[k];
            }
            let bb = self.beta * self.b[j];
            let auto = x[j] * x[j] * y[j];
            out[j] = cx + lam * (self.a[j] - (bb + 1.0) * x[j] + auto);
            out[n + j] = self.theta * cy + lam * (bb * x[j] - auto);
        }
    }

    pub fn jacobian_blocks(&self, x: &[f64], y: &[f64]) -> JacobianBlocks {
        let n = self.n();
        let mut m1 = Vec::with_capacity(n);
        let mut m2 = Vec::with_capacity(n);
        let mut m3 = Vec::with_capacity(n);
        for j in 0..n {
            let bb = self.beta * self.b[j];
            let xy2 = 2.0 * x[j] * y[j];
            m1.push(xy2 - bb - 1.0);
            m2.push(x[j] * x[j]);
            m3.push(bb - xy2);
        }
        JacobianBlocks { m1, m2, m3 }
    }

    /// Jacobian of the right-hand side at `(x, y)`:
    /// `[[P + lam M1, lam M2], [lam M3, theta Q - lam M2]]`.
    pub fn jacobian(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let blocks = self.jacobian_blocks(x, y);
        let mut j = DMatrix::zeros(2 * n, 2 * n);
        j.view_mut((0, 0), (n, n)).copy_from(self.p.matrix());
        j.view_mut((n, n), (n, n)).copy_from(&(self.q.matrix() * self.theta));
        let lam = self.lambda;
        for i in 0..n {
            j[(i, i)] += lam * blocks.m1[i];
            j[(i, n + i)] = lam * blocks.m2[i];
            j[(n + i, i)] = lam * blocks.m3[i];
            j[(n + i, n + i)] -= lam * blocks.m2[i];
        }
        j
    }

    pub fn total_input(&self) -> f64 {
        self.a.iter().sum()
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), NetworkError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(NetworkError::InvalidParameter(format!("{name} = {v} must be positive")))
    }
}
