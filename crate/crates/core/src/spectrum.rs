//! Linearization at an equilibrium and its full eigenvalue spectrum.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::equilibrium::{self, Equilibrium};
use crate::error::{Error, SpectrumError};
use crate::linalg::{self, cvec_norm2, norm_inf};
use crate::network::{PatchNetwork, PerronPair};

const EIGVEC_RESIDUAL: f64 = 1e-8;
const MARGINAL_TOL: f64 = 1e-9;
const CLUSTER_RADIUS: f64 = 1e-6;

/// Jacobian of the network at an equilibrium, tagged with the parameters
/// it was assembled at.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizationMatrix {
    pub matrix: DMatrix<f64>,
    pub lambda: f64,
    pub beta: f64,
}

impl LinearizationMatrix {
    pub fn size(&self) -> usize {
        self.matrix.nrows()
    }
}

pub fn assemble(model: &PatchNetwork, eq: &Equilibrium) -> Result<LinearizationMatrix, SpectrumError> {
    if eq.lambda != model.lambda || eq.beta != model.beta || eq.x.len() != model.n() {
        return Err(SpectrumError::ParameterMismatch {
            lambda: model.lambda,
            beta: model.beta,
            eq_lambda: eq.lambda,
            eq_beta: eq.beta,
        });
    }
    Ok(LinearizationMatrix { matrix: model.jacobian(&eq.x, &eq.y), lambda: model.lambda, beta: model.beta })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Sorted by decreasing real part, then decreasing imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub rightmost: Complex64,
    pub spectral_abscissa: f64,
    /// Unit 2-norm; the largest-modulus component is real and positive.
    pub right_eigenvector: Vec<Complex64>,
    /// Solves `A^T w = conj(mu) w`, normalized like the right vector.
    pub left_eigenvector: Vec<Complex64>,
    pub matrix_norm_inf: f64,
}

/// All eigenvalues of a dense real matrix, sorted.
pub fn eigenvalues(a: &DMatrix<f64>) -> Result<Vec<Complex64>, SpectrumError> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SpectrumError::NonFinite);
    }
    let mut bal = a.clone();
    linalg::balance(&mut bal);
    let (h, _) = linalg::hessenberg(&bal);
    let mut ev = linalg::hessenberg_eigenvalues(h).map_err(|f| SpectrumError::QrNoConvergence { found: f.found })?;
    sort_eigenvalues(&mut ev);
    Ok(ev)
}

fn sort_eigenvalues(ev: &mut [Complex64]) {
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

pub fn eigen(lin: &LinearizationMatrix) -> Result<SpectrumReport, SpectrumError> {
    eigen_matrix(&lin.matrix)
}

/// Spectrum plus right and left eigenvectors of the rightmost eigenvalue.
pub fn eigen_matrix(a: &DMatrix<f64>) -> Result<SpectrumReport, SpectrumError> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(SpectrumError::NonFinite);
    }
    let n = a.nrows();
    let mut bal = a.clone();
    let d = linalg::balance(&mut bal);
    let (h, q) = linalg::hessenberg(&bal);
    let mut ev =
        linalg::hessenberg_eigenvalues(h.clone()).map_err(|f| SpectrumError::QrNoConvergence { found: f.found })?;
    sort_eigenvalues(&mut ev);
    let mu = ev[0];
    let anorm = norm_inf(a);
    let bound = EIGVEC_RESIDUAL * anorm.max(f64::MIN_POSITIVE);

    let back = |z: &[Complex64], left: bool| -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let mut s = Complex64::new(0.0, 0.0);
            for k in 0..n {
                s += z[k] * q[(i, k)];
            }
            v[i] = if left { s / d[i] } else { s * d[i] };
        }
        normalize(&mut v);
        v
    };

    let mut right = Vec::new();
    let mut left = Vec::new();
    let mut worst = f64::INFINITY;
    for sweeps in [3, 6] {
        right = back(&linalg::inverse_iteration(&h, mu, false, sweeps), false);
        left = back(&linalg::inverse_iteration(&h, mu, true, sweeps), true);
        let rr = eigen_residual(a, mu, &right, false);
        let rl = eigen_residual(a, mu, &left, true);
        worst = rr.max(rl);
        if worst <= bound {
            break;
        }
    }
    if !(worst <= bound) {
        return Err(SpectrumError::EigenvectorResidual { residual: worst, bound });
    }

    Ok(SpectrumReport {
        spectral_abscissa: mu.re,
        rightmost: mu,
        eigenvalues: ev,
        right_eigenvector: right,
        left_eigenvector: left,
        matrix_norm_inf: anorm,
    })
}

/// `||A v - mu v||_2`, or `||A^T w - conj(mu) w||_2` for a left vector.
pub fn eigen_residual(a: &DMatrix<f64>, mu: Complex64, v: &[Complex64], left: bool) -> f64 {
    let n = a.nrows();
    let shift = if left { mu.conj() } else { mu };
    let r: Vec<Complex64> = (0..n)
        .map(|i| {
            let mut s = -shift * v[i];
            for k in 0..n {
                let aik = if left { a[(k, i)] } else { a[(i, k)] };
                s += v[k] * aik;
            }
            s
        })
        .collect();
    cvec_norm2(&r)
}

fn normalize(v: &mut [Complex64]) {
    let nrm = cvec_norm2(v);
    if nrm == 0.0 {
        return;
    }
    let mut pivot = 0;
    let mut best = -1.0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > best {
            best = z.norm();
            pivot = i;
        }
    }
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z = *z * phase / nrm;
    }
    v[pivot] = Complex64::new(v[pivot].re, 0.0);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StabilityVerdict {
    Stable,
    Unstable,
    Marginal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: StabilityVerdict,
    pub spectral_abscissa: f64,
    /// Half-width of the dead zone around zero used for the verdict.
    pub marginal_tol: f64,
    pub equilibrium: Equilibrium,
    pub spectrum: SpectrumReport,
}

pub fn verdict_for(abscissa: f64, marginal_tol: f64) -> StabilityVerdict {
    if abscissa < -marginal_tol {
        StabilityVerdict::Stable
    } else if abscissa > marginal_tol {
        StabilityVerdict::Unstable
    } else {
        StabilityVerdict::Marginal
    }
}

pub fn default_marginal_tol(a: &DMatrix<f64>) -> f64 {
    MARGINAL_TOL * norm_inf(a).max(1.0)
}

/// Solves for the equilibrium, then classifies its linear stability.
pub fn classify(model: &PatchNetwork, perron: &PerronPair) -> Result<StabilityReport, Error> {
    classify_from(model, perron, None)
}

pub fn classify_from(model: &PatchNetwork, perron: &PerronPair, init: Option<&[f64]>) -> Result<StabilityReport, Error> {
    let eq = equilibrium::solve(model, perron, init)?;
    let lin = assemble(model, &eq)?;
    let spectrum = eigen(&lin)?;
    let marginal_tol = default_marginal_tol(&lin.matrix);
    Ok(StabilityReport {
        verdict: verdict_for(spectrum.spectral_abscissa, marginal_tol),
        spectral_abscissa: spectrum.spectral_abscissa,
        marginal_tol,
        equilibrium: eq,
        spectrum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub count: usize,
    pub radius: f64,
    pub simple: bool,
}

/// Counts computed eigenvalues clustered around `mu`.
pub fn simplicity(eigenvalues: &[Complex64], matrix_norm_inf: f64, mu: Complex64) -> MultiplicityReport {
    let radius = CLUSTER_RADIUS * matrix_norm_inf;
    let count = eigenvalues.iter().filter(|z| (**z - mu).norm() <= radius).count();
    MultiplicityReport { count, radius, simple: count == 1 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::CouplingMatrix;

    fn cm(r: &[&[f64]]) -> CouplingMatrix {
        CouplingMatrix::new(&r.iter().map(|x| x.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    fn p_l() -> CouplingMatrix {
        cm(&[&[-2.0, 1.0, 1.0], &[1.0, -3.0, 2.0], &[1.0, 2.0, -3.0]])
    }

    fn p_nl() -> CouplingMatrix {
        cm(&[&[-3.0, 2.0, 3.0], &[2.0, -3.0, 2.0], &[1.0, 1.0, -5.0]])
    }

    fn three(p: CouplingMatrix, beta: f64, lambda: f64) -> PatchNetwork {
        PatchNetwork::new(p.clone(), p, vec![1.0; 3], vec![1.0; 3], beta, lambda, 1.0).unwrap()
    }

    #[test]
    fn lambda_zero_is_block_diagonal() {
        let m = PatchNetwork::new(p_nl(), p_l(), vec![1.0; 3], vec![1.0; 3], 2.0, 0.0, 2.0).unwrap();
        let pp = PerronPair::of(&m).unwrap();
        let eq = equilibrium::solve(&m, &pp, None).unwrap();
        let lin = assemble(&m, &eq).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(lin.matrix[(i, j)], p_nl().matrix()[(i, j)]);
                assert_eq!(lin.matrix[(i, 3 + j)], 0.0);
                assert_eq!(lin.matrix[(3 + i, j)], 0.0);
                assert_eq!(lin.matrix[(3 + i, 3 + j)], 2.0 * p_l().matrix()[(i, j)]);
            }
        }
        let rep = eigen(&lin).unwrap();
        assert!(rep.spectral_abscissa.abs() < 1e-12);
        let mult = simplicity(&rep.eigenvalues, rep.matrix_norm_inf, Complex64::new(0.0, 0.0));
        assert!(mult.count >= 2 && !mult.simple);
        // P^L has spectrum {0, -3, -5}; theta = 2 doubles it
        for target in [-6.0, -10.0] {
            assert!(rep.eigenvalues.iter().any(|z| (z - target).norm() < 1e-10));
        }
    }

    #[test]
    fn uniform_blocks() {
        let beta = 2.3;
        let lam = 0.1;
        let m = three(p_l(), beta, lam);
        let pp = PerronPair::of(&m).unwrap();
        let eq = equilibrium::solve(&m, &pp, None).unwrap();
        let lin = assemble(&m, &eq).unwrap();
        let a = &lin.matrix;
        let p = p_l();
        for i in 0..3 {
            for j in 0..3 {
                let d = if i == j { 1.0 } else { 0.0 };
                assert!((a[(i, j)] - (p.matrix()[(i, j)] + lam * (beta - 1.0) * d)).abs() < 1e-12);
                assert!((a[(i, 3 + j)] - lam * d).abs() < 1e-12);
                assert!((a[(3 + i, j)] + lam * beta * d).abs() < 1e-12);
                assert!((a[(3 + i, 3 + j)] - (p.matrix()[(i, j)] - lam * d)).abs() < 1e-12);
            }
        }
        // first-n column sums over all rows equal lam (m1 + m3) = -lam
        for j in 0..3 {
            let s: f64 = a.column(j).iter().sum();
            assert!((s + lam).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_mismatch_is_rejected() {
        let m = three(p_l(), 2.0, 0.1);
        let pp = PerronPair::of(&m).unwrap();
        let eq = equilibrium::solve(&m, &pp, None).unwrap();
        assert!(matches!(assemble(&m.with_beta(2.1), &eq), Err(SpectrumError::ParameterMismatch { .. })));
    }

    #[test]
    fn two_patch_synchronous_block() {
        // P = Q = [[-1,1],[1,-1]], uniform state (1, beta): the uniform mode
        // evolves under lam [[beta-1, 1], [-beta, -1]].
        let p = cm(&[&[-1.0, 1.0], &[1.0, -1.0]]);
        let beta = 1.7;
        let lam = 0.05;
        let m = PatchNetwork::new(p.clone(), p, vec![1.0; 2], vec![1.0; 2], beta, lam, 1.0).unwrap();
        let pp = PerronPair::of(&m).unwrap();
        let eq = equilibrium::solve(&m, &pp, None).unwrap();
        let rep = eigen(&assemble(&m, &eq).unwrap()).unwrap();
        // eigenvalues of the 2x2 synchronous block
        let tr = lam * (beta - 2.0);
        let det = lam * lam;
        let disc = Complex64::new(tr * tr - 4.0 * det, 0.0).sqrt();
        for mu in [(tr + disc) / 2.0, (tr - disc) / 2.0] {
            assert!(rep.eigenvalues.iter().any(|z| (z - Complex64::new(mu.re, mu.im)).norm() < 1e-12), "{mu}");
        }
    }

    #[test]
    fn classify_examples() {
        let pp_l = PerronPair::new(&p_l(), &p_l()).unwrap();
        let pp_nl = PerronPair::new(&p_nl(), &p_nl()).unwrap();
        assert_eq!(classify(&three(p_l(), 1.5, 0.1), &pp_l).unwrap().verdict, StabilityVerdict::Stable);
        assert_eq!(classify(&three(p_l(), 2.05, 0.1), &pp_l).unwrap().verdict, StabilityVerdict::Unstable);
        assert_eq!(classify(&three(p_nl(), 2.05, 0.1), &pp_nl).unwrap().verdict, StabilityVerdict::Stable);
    }

    #[test]
    fn verdict_band() {
        assert_eq!(verdict_for(-1e-3, 1e-9), StabilityVerdict::Stable);
        assert_eq!(verdict_for(1e-3, 1e-9), StabilityVerdict::Unstable);
        assert_eq!(verdict_for(5e-10, 1e-9), StabilityVerdict::Marginal);
    }

    #[test]
    fn diagonal_matrix_eigenvalues_are_simple() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, -1.0, 0.5, 2.0]));
        let rep = eigen_matrix(&a).unwrap();
        let re: Vec<f64> = rep.eigenvalues.iter().map(|z| z.re).collect();
        assert_eq!(re, vec![3.0, 2.0, 0.5, -1.0]);
        for z in &rep.eigenvalues {
            assert!(simplicity(&rep.eigenvalues, rep.matrix_norm_inf, *z).simple);
        }
        assert!((rep.right_eigenvector[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn rightmost_pair_reports_positive_imaginary_part() {
        // rotation generator plus damping: eigenvalues -0.1 +/- 2i and -3
        let a = DMatrix::from_row_slice(3, 3, &[-0.1, 2.0, 0.0, -2.0, -0.1, 0.0, 0.0, 1.0, -3.0]);
        let rep = eigen_matrix(&a).unwrap();
        assert!((rep.rightmost - Complex64::new(-0.1, 2.0)).norm() < 1e-12);
        assert!((rep.eigenvalues[1] - Complex64::new(-0.1, -2.0)).norm() < 1e-12);
        assert!(eigen_residual(&a, rep.rightmost, &rep.right_eigenvector, false) < 1e-12);
        assert!(eigen_residual(&a, rep.rightmost, &rep.left_eigenvector, true) < 1e-12);
    }

    #[test]
    fn nonfinite_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 0.0, 1.0]);
        assert!(matches!(eigen_matrix(&a), Err(SpectrumError::NonFinite)));
    }
}
