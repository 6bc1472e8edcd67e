//! Hopf bifurcation in the scaling parameter `beta`.
//!
//! As `lambda -> 0` the crossing is governed by a 2x2 reduced problem on the
//! Perron directions, which gives the limit frequency `nu0` and limit
//! bifurcation value `beta0` in closed form. For `lambda > 0` the crossing is
//! located numerically by bisection on the spectral abscissa of the
//! linearization, re-solving the equilibrium at every trial `beta`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, Equilibrium};
use crate::error::{HopfError, NetworkError};
use crate::network::{CouplingMatrix, PatchNetwork, PerronPair};
use crate::spectrum::{self, SpectrumReport};

const IMAG_FLOOR: f64 = 1e-8;
const PAIRING_FLOOR: f64 = 1e-10;
const LINE_SUM_TOL: f64 = 1e-10;

/// Closed-form `lambda -> 0` limit of the Hopf crossing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticHopf {
    pub nu0: f64,
    pub beta0: f64,
    pub delta0: f64,
    pub s10: f64,
    pub s20: f64,
}

pub fn asymptotic(model: &PatchNetwork, perron: &PerronPair) -> AsymptoticHopf {
    let xi = &perron.xi;
    let eta = &perron.eta;
    let total_a: f64 = model.a.iter().sum();
    let xxe: f64 = xi.iter().zip(eta).map(|(x, e)| x * x * e).sum();
    let bxi: f64 = model.b.iter().zip(xi).map(|(b, x)| b * x).sum();
    let nu0 = total_a * xxe.sqrt();
    let beta0 = (nu0 * nu0 + 1.0) / bxi;
    let xi2: f64 = xi.iter().map(|v| v * v).sum();
    let eta2: f64 = eta.iter().map(|v| v * v).sum();
    let delta0 = ((xi2 + eta2) / (xi2 + (1.0 + 1.0 / (nu0 * nu0)) * eta2)).sqrt();
    AsymptoticHopf { nu0, beta0, delta0, s10: -delta0, s20: delta0 / nu0 }
}

/// Limit bifurcation value for identical boxes (`a_j = a`, `b_j = 1`) and
/// `P = Q`: `1 + (n a)^2 sum xi_j^3`.
pub fn asymptotic_special(a: f64, n: usize, xi: &[f64]) -> f64 {
    let cube: f64 = xi.iter().map(|v| v * v * v).sum();
    let na = n as f64 * a;
    1.0 + na * na * cube
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopfOptions {
    /// Defines the admissible window `[epsilon, 1/epsilon]` for `beta`.
    pub epsilon: f64,
    pub scan_points: usize,
    pub bracket_tol: f64,
}

impl Default for HopfOptions {
    fn default() -> Self {
        Self { epsilon: 1e-3, scan_points: 32, bracket_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfPoint {
    pub lambda: f64,
    pub beta_hopf: f64,
    /// Crossing eigenvalue is `i * lambda * nu`.
    pub nu: f64,
    pub eigenvalue: Complex64,
    pub right_eigvec: Vec<Complex64>,
    pub left_eigvec: Vec<Complex64>,
    pub dmu_dbeta: Complex64,
    pub bracket: (f64, f64),
    /// Every sign change seen in the initial scan (empty when the bracket
    /// came from a warm start).
    pub sign_changes: Vec<(f64, f64)>,
    pub equilibrium: Equilibrium,
}

/// Default search window `[max(eps, beta0/2), min(1/eps, 2 beta0)]`.
pub fn default_range(model: &PatchNetwork, perron: &PerronPair, opts: &HopfOptions) -> (f64, f64) {
    let b0 = asymptotic(model, perron).beta0;
    ((0.5 * b0).max(opts.epsilon), (2.0 * b0).min(1.0 / opts.epsilon))
}

fn abscissa_at(
    model: &PatchNetwork,
    perron: &PerronPair,
    beta: f64,
    init: Option<&[f64]>,
) -> Result<(f64, Equilibrium), HopfError> {
    let at = model.with_beta(beta);
    let eq = equilibrium::solve(&at, perron, init)?;
    let report = spectrum::eigen(&spectrum::assemble(&at, &eq)?)?;
    Ok((report.spectral_abscissa, eq))
}

/// Locates the Hopf value `beta_lambda` at the model's `lambda`.
///
/// The window (default from [`default_range`]) is scanned at
/// `opts.scan_points` equally spaced values; the first sign change of the
/// spectral abscissa is refined by bisection to `opts.bracket_tol`.
pub fn find_hopf(
    model: &PatchNetwork,
    perron: &PerronPair,
    range: Option<(f64, f64)>,
    opts: &HopfOptions,
) -> Result<HopfPoint, HopfError> {
    if !(model.lambda > 0.0) {
        return Err(HopfError::ZeroLambda);
    }
    let (lo, hi) = range.unwrap_or_else(|| default_range(model, perron, opts));
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(HopfError::BadRange(lo, hi));
    }
    let k = opts.scan_points.max(2);
    let grid: Vec<f64> = (0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect();
    let scan: Vec<Option<(f64, Equilibrium)>> =
        grid.par_iter().map(|&b| abscissa_at(model, perron, b, None).ok()).collect();

    let mut changes = Vec::new();
    let mut first = None;
    for i in 0..k - 1 {
        if let (Some((s0, e0)), Some((s1, e1))) = (&scan[i], &scan[i + 1]) {
            if (*s0 < 0.0) != (*s1 < 0.0) {
                changes.push((grid[i], grid[i + 1]));
                if first.is_none() {
                    first = Some(((grid[i], *s0, e0.clone()), (grid[i + 1], *s1, e1.clone())));
                }
            }
        }
    }
    let Some((lo_end, hi_end)) = first else {
        let end = |s: &Option<(f64, Equilibrium)>| s.as_ref().map_or(f64::NAN, |v| v.0);
        return Err(HopfError::NotFound {
            beta_lo: lo,
            beta_hi: hi,
            abscissa_lo: end(&scan[0]),
            abscissa_hi: end(&scan[k - 1]),
        });
    };
    let mut point = bisect(model, perron, lo_end, hi_end, opts)?;
    point.sign_changes = changes;
    Ok(point)
}

fn bisect(
    model: &PatchNetwork,
    perron: &PerronPair,
    lo: (f64, f64, Equilibrium),
    hi: (f64, f64, Equilibrium),
    opts: &HopfOptions,
) -> Result<HopfPoint, HopfError> {
    let (mut b_lo, s_lo, mut warm) = lo;
    let (mut b_hi, _, _) = hi;
    let lo_negative = s_lo < 0.0;
    while b_hi - b_lo > opts.bracket_tol {
        let mid = 0.5 * (b_lo + b_hi);
        let (s, eq) = abscissa_at(model, perron, mid, Some(&warm.state()))?;
        if (s < 0.0) == lo_negative {
            b_lo = mid;
        } else {
            b_hi = mid;
        }
        warm = eq;
    }
    let beta = 0.5 * (b_lo + b_hi);
    let at = model.with_beta(beta);
    let eq = equilibrium::solve(&at, perron, Some(&warm.state()))?;
    let report = spectrum::eigen(&spectrum::assemble(&at, &eq)?)?;
    let mu = report.rightmost;
    if !(mu.im.abs() > IMAG_FLOOR) {
        return Err(HopfError::RealCrossing { beta, eigenvalue: mu });
    }
    let dmu = transversality(&at, perron, &eq, &report)?;
    Ok(HopfPoint {
        lambda: model.lambda,
        beta_hopf: beta,
        nu: mu.im / model.lambda,
        eigenvalue: mu,
        right_eigvec: report.right_eigenvector,
        left_eigvec: report.left_eigenvector,
        dmu_dbeta: dmu,
        bracket: (b_lo, b_hi),
        sign_changes: Vec::new(),
        equilibrium: eq,
    })
}

/// `d mu / d beta` of the rightmost eigenvalue from the eigenvector
/// pairing `<w, (dA/dbeta) v> / <w, v>`, with `dA/dbeta` a central
/// difference of linearizations re-assembled at re-solved equilibria.
pub fn transversality(
    model: &PatchNetwork,
    perron: &PerronPair,
    eq: &Equilibrium,
    report: &SpectrumReport,
) -> Result<Complex64, HopfError> {
    let beta = model.beta;
    let h = 1e-6 * beta.max(1.0);
    let matrix_at = |b: f64| -> Result<DMatrix<f64>, HopfError> {
        let m = model.with_beta(b);
        let e = equilibrium::solve(&m, perron, Some(&eq.state()))?;
        Ok(spectrum::assemble(&m, &e)?.matrix)
    };
    let da = (matrix_at(beta + h)? - matrix_at(beta - h)?) / (2.0 * h);
    pairing_ratio(&da, &report.right_eigenvector, &report.left_eigenvector)
}

/// `<w, B v> / <w, v>` with the inner product conjugate-linear in `w`.
pub fn pairing_ratio(b: &DMatrix<f64>, v: &[Complex64], w: &[Complex64]) -> Result<Complex64, HopfError> {
    let n = v.len();
    let mut num = Complex64::new(0.0, 0.0);
    let mut den = Complex64::new(0.0, 0.0);
    for i in 0..n {
        let mut bv = Complex64::new(0.0, 0.0);
        for k in 0..n {
            bv += v[k] * b[(i, k)];
        }
        num += w[i].conj() * bv;
        den += w[i].conj() * v[i];
    }
    let wn = crate::linalg::cvec_norm2(w);
    let vn = crate::linalg::cvec_norm2(v);
    if !(den.norm() > PAIRING_FLOOR * wn * vn) {
        return Err(HopfError::DegenerateEigenvector(den.norm()));
    }
    Ok(num / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopfCurvePoint {
    pub lambda: f64,
    pub point: Option<HopfPoint>,
    pub error: Option<String>,
}

/// Hopf points along a `lambda` grid, each bracket warm-started from the
/// previous `beta_lambda` (the first from `beta0`).
pub fn hopf_curve(
    template: &PatchNetwork,
    perron: &PerronPair,
    lambda_grid: &[f64],
    opts: &HopfOptions,
) -> Result<Vec<HopfCurvePoint>, HopfError> {
    if lambda_grid.windows(2).any(|w| !(w[0] < w[1])) || lambda_grid.iter().any(|l| !(*l > 0.0)) {
        return Err(HopfError::BadRange(
            lambda_grid.first().copied().unwrap_or(f64::NAN),
            lambda_grid.last().copied().unwrap_or(f64::NAN),
        ));
    }
    let mut center = asymptotic(template, perron).beta0;
    let mut out = Vec::with_capacity(lambda_grid.len());
    for &lam in lambda_grid {
        let model = template.with_lambda(lam);
        let found = warm_bracket(&model, perron, center, opts)
            .and_then(|(lo, hi)| bisect(&model, perron, lo, hi, opts))
            .or_else(|_| find_hopf(&model, perron, None, opts));
        match found {
            Ok(p) => {
                center = p.beta_hopf;
                out.push(HopfCurvePoint { lambda: lam, point: Some(p), error: None });
            }
            Err(e) => out.push(HopfCurvePoint { lambda: lam, point: None, error: Some(e.to_string()) }),
        }
    }
    Ok(out)
}

type Bracket = ((f64, f64, Equilibrium), (f64, f64, Equilibrium));

fn warm_bracket(model: &PatchNetwork, perron: &PerronPair, center: f64, opts: &HopfOptions) -> Result<Bracket, HopfError> {
    let (min_b, max_b) = (opts.epsilon, 1.0 / opts.epsilon);
    let mut width = 0.02;
    for _ in 0..6 {
        let lo = (center * (1.0 - width)).max(min_b);
        let hi = (center * (1.0 + width)).min(max_b);
        let (s_lo, e_lo) = abscissa_at(model, perron, lo, None)?;
        let (s_hi, e_hi) = abscissa_at(model, perron, hi, None)?;
        if (s_lo < 0.0) != (s_hi < 0.0) {
            return Ok(((lo, s_lo, e_lo), (hi, s_hi, e_hi)));
        }
        width *= 2.0;
    }
    Err(HopfError::NotFound { beta_lo: center, beta_hi: center, abscissa_lo: f64::NAN, abscissa_hi: f64::NAN })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSumEntry {
    pub n: usize,
    pub beta0: f64,
    pub line_sum_symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSumComparison {
    pub entries: Vec<LineSumEntry>,
    /// `1 + a^2`, the smallest attainable limit value.
    pub minimum: f64,
    /// Variant indices ordered by increasing `beta0`.
    pub order: Vec<usize>,
    /// Every line-sum-symmetric variant sits at the minimum.
    pub symmetric_at_minimum: bool,
}

/// Limit Hopf values for identical boxes with `P = Q`, one per variant.
pub fn compare_line_sum(variants: &[CouplingMatrix], a: f64) -> Result<LineSumComparison, NetworkError> {
    let minimum = 1.0 + a * a;
    let mut entries = Vec::with_capacity(variants.len());
    for p in variants {
        let xi = p.perron_vector()?;
        entries.push(LineSumEntry {
            n: p.n(),
            beta0: asymptotic_special(a, p.n(), &xi),
            line_sum_symmetric: p.is_line_sum_symmetric(),
        });
    }
    let mut order: Vec<usize> = (0..entries.len()).collect();
    order.sort_by(|&i, &j| entries[i].beta0.total_cmp(&entries[j].beta0));
    let symmetric_at_minimum = entries
        .iter()
        .filter(|e| e.line_sum_symmetric)
        .all(|e| (e.beta0 - minimum).abs() <= LINE_SUM_TOL * minimum.max(1.0));
    Ok(LineSumComparison { entries, minimum, order, symmetric_at_minimum })
}
