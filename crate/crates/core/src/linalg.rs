//! Small dense linear-algebra kernels used across the crate.
//!
//! Everything here works on `nalgebra::DMatrix` storage and is written for
//! the modest sizes this toolkit targets (a few hundred rows at most). The
//! eigenvalue path is the classical one: balancing, Householder reduction to
//! upper Hessenberg form, then the Francis implicit double-shift QR sweep.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Infinity norm (maximum absolute row sum).
pub fn norm_inf(a: &DMatrix<f64>) -> f64 {
    (0..a.nrows())
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn vec_norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn cvec_norm2(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Null vector of a (numerically) rank-deficient square matrix.
///
/// Gaussian elimination with complete pivoting drives the smallest pivot to
/// the last position; that column is taken as the free variable and the
/// remaining unknowns are recovered by back substitution.
pub fn null_vector_full_pivot(m: &DMatrix<f64>) -> DVector<f64> {
    let n = m.nrows();
    let mut u = m.clone();
    let mut col_perm: Vec<usize> = (0..n).collect();

    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for j in k..n {
            for i in k..n {
                let v = u[(i, j)].abs();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        if pr != k {
            u.swap_rows(pr, k);
        }
        if pc != k {
            u.swap_columns(pc, k);
            col_perm.swap(pc, k);
        }
        let pivot = u[(k, k)];
        if pivot == 0.0 || k == n - 1 {
            continue;
        }
        for i in (k + 1)..n {
            let f = u[(i, k)] / pivot;
            if f == 0.0 {
                continue;
            }
            u[(i, k)] = 0.0;
            for j in (k + 1)..n {
                u[(i, j)] -= f * u[(k, j)];
            }
        }
    }

    // free variable: last permuted column
    let mut z = DVector::zeros(n);
    z[n - 1] = 1.0;
    for i in (0..n - 1).rev() {
        let mut s = 0.0;
        for j in (i + 1)..n {
            s += u[(i, j)] * z[j];
        }
        let d = u[(i, i)];
        z[i] = if d != 0.0 { -s / d } else { 0.0 };
    }

    let mut out = DVector::zeros(n);
    for (k, &orig) in col_perm.iter().enumerate() {
        out[orig] = z[k];
    }
    out
}

/// Dense complex LU factorization with partial pivoting.
///
/// Exactly-singular pivots are replaced by `eps * scale` so that the
/// factorization can be used for inverse iteration at a computed eigenvalue.
pub struct ComplexLu {
    lu: Vec<Complex64>,
    perm: Vec<usize>,
    n: usize,
}

impl ComplexLu {
    pub fn factor(mut a: Vec<Complex64>, n: usize, scale: f64) -> Self {
        let tiny = f64::EPSILON * scale.max(f64::MIN_POSITIVE);
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].norm();
            for i in (k + 1)..n {
                let v = a[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            if a[k * n + k].norm() < tiny {
                a[k * n + k] = Complex64::new(tiny, 0.0);
            }
            let pivot = a[k * n + k];
            for i in (k + 1)..n {
                let f = a[i * n + k] / pivot;
                a[i * n + k] = f;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in (k + 1)..n {
                    let ukj = a[k * n + j];
                    a[i * n + j] -= f * ukj;
                }
            }
        }
        Self { lu: a, perm, n }
    }

    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in (i + 1)..n {
                s -= self.lu[i * n + j] * x[j];
            }
            x[i] = s / self.lu[i * n + i];
        }
        x
    }
}

/// Diagonal similarity scaling by powers of two that equalizes row and
/// column norms. Returns the scaling `d` with `a <- D^{-1} a D`.
pub fn balance(a: &mut DMatrix<f64>) -> Vec<f64> {
    const RADIX: f64 = 2.0;
    let n = a.nrows();
    let sqrdx = RADIX * RADIX;
    let mut scale = vec![1.0; n];
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let (mut r, mut c) = (0.0, 0.0);
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqrdx;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let ginv = 1.0 / f;
                scale[i] *= f;
                for j in 0..n {
                    a[(i, j)] *= ginv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
    scale
}

/// Householder reduction `a = Q H Q^T` with `H` upper Hessenberg.
pub fn hessenberg(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let mut h = a.clone();
    let mut q = DMatrix::<f64>::identity(n, n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let alpha_norm = ((k + 1)..n).map(|i| h[(i, k)] * h[(i, k)]).sum::<f64>().sqrt();
        if alpha_norm == 0.0 {
            continue;
        }
        let x0 = h[(k + 1, k)];
        let alpha = if x0 >= 0.0 { -alpha_norm } else { alpha_norm };
        let mut v: Vec<f64> = ((k + 1)..n).map(|i| h[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;
        // H <- (I - beta v v^T) H
        for j in 0..n {
            let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * h[(k + 1 + t, j)]).sum();
            let s = beta * s;
            for (t, vt) in v.iter().enumerate() {
                h[(k + 1 + t, j)] -= s * vt;
            }
        }
        // H <- H (I - beta v v^T), Q <- Q (I - beta v v^T)
        for i in 0..n {
            let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * h[(i, k + 1 + t)]).sum();
            let s = beta * s;
            for (t, vt) in v.iter().enumerate() {
                h[(i, k + 1 + t)] -= s * vt;
            }
            let s: f64 = v.iter().enumerate().map(|(t, vt)| vt * q[(i, k + 1 + t)]).sum();
            let s = beta * s;
            for (t, vt) in v.iter().enumerate() {
                q[(i, k + 1 + t)] -= s * vt;
            }
        }
        h[(k + 1, k)] = alpha;
        for i in (k + 2)..n {
            h[(i, k)] = 0.0;
        }
    }
    (h, q)
}

/// QR iteration ran out of sweeps; carries the eigenvalues already deflated.
#[derive(Debug, Clone)]
pub struct QrFailure {
    pub found: Vec<Complex64>,
}

const MAX_SWEEPS_PER_ROOT: usize = 60;

/// Eigenvalues of an upper Hessenberg matrix by the Francis implicit
/// double-shift QR algorithm (eigenvalues only, `h` is consumed).
pub fn hessenberg_eigenvalues(mut a: DMatrix<f64>) -> Result<Vec<Complex64>, QrFailure> {
    let n = a.nrows();
    let eps = f64::EPSILON;
    let mut wr = vec![Complex64::new(f64::NAN, 0.0); n];
    let mut done = vec![false; n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[(i, j)].abs();
        }
    }

    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0usize;
        loop {
            let nu = nn as usize;
            // look for a single small subdiagonal element
            let mut l = nu;
            while l > 0 {
                let mut s = a[(l - 1, l - 1)].abs() + a[(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[(l, l - 1)].abs() <= eps * s {
                    a[(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[(nu, nu)];
            if l == nu {
                wr[nu] = Complex64::new(x + t, 0.0);
                done[nu] = true;
                nn -= 1;
                break;
            }
            let mut y = a[(nu - 1, nu - 1)];
            let mut w = a[(nu, nu - 1)] * a[(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + z.copysign(p);
                    wr[nu - 1] = Complex64::new(x + z, 0.0);
                    wr[nu] = Complex64::new(x + z, 0.0);
                    if z != 0.0 {
                        wr[nu] = Complex64::new(x - w / z, 0.0);
                    }
                } else {
                    wr[nu] = Complex64::new(x + p, -z);
                    wr[nu - 1] = Complex64::new(x + p, z);
                }
                done[nu] = true;
                done[nu - 1] = true;
                nn -= 2;
                break;
            }

            if its == MAX_SWEEPS_PER_ROOT {
                let found = wr
                    .iter()
                    .zip(&done)
                    .filter(|(_, d)| **d)
                    .map(|(z, _)| *z)
                    .collect();
                return Err(QrFailure { found });
            }
            if its > 0 && its.is_multiple_of(10) {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    a[(i, i)] -= x;
                }
                let s = a[(nu, nu - 1)].abs() + a[(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;

            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            let (mut p, mut q, mut r);
            loop {
                let z = a[(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[(m + 1, m)] + a[(m, m + 1)];
                q = a[(m + 1, m + 1)] - z - rr - ss;
                r = a[(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[(m - 1, m - 1)].abs() + z.abs() + a[(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[(i + 2, i)] = 0.0;
                if i != m {
                    a[(i + 2, i - 1)] = 0.0;
                }
            }

            // double-shift QR sweep on rows/columns l..=nu
            for k in m..nu {
                if k != m {
                    p = a[(k, k - 1)];
                    q = a[(k + 1, k - 1)];
                    r = 0.0;
                    if k + 1 != nu {
                        r = a[(k + 2, k - 1)];
                    }
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = (p * p + q * q + r * r).sqrt().copysign(p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[(k, k - 1)] = -a[(k, k - 1)];
                    }
                } else {
                    a[(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                let z = r / s;
                q /= p;
                r /= p;
                for j in k..=nu {
                    let mut pp = a[(k, j)] + q * a[(k + 1, j)];
                    if k + 1 != nu {
                        pp += r * a[(k + 2, j)];
                        a[(k + 2, j)] -= pp * z;
                    }
                    a[(k + 1, j)] -= pp * y;
                    a[(k, j)] -= pp * x;
                }
                let mmin = if nu < k + 3 { nu } else { k + 3 };
                for i in l..=mmin {
                    let mut pp = x * a[(i, k)] + y * a[(i, k + 1)];
                    if k + 1 != nu {
                        pp += z * a[(i, k + 2)];
                        a[(i, k + 2)] -= pp * r;
                    }
                    a[(i, k + 1)] -= pp * q;
                    a[(i, k)] -= pp;
                }
            }
            if l >= nu - 1 {
                break;
            }
        }
    }
    Ok(wr)
}

/// Inverse iteration for an eigenvector of `h` (or of `h^H` when
/// `adjoint`) at the eigenvalue estimate `mu`.
pub fn inverse_iteration(
    h: &DMatrix<f64>,
    mu: Complex64,
    adjoint: bool,
    sweeps: usize,
) -> Vec<Complex64> {
    let n = h.nrows();
    let shift = if adjoint { mu.conj() } else { mu };
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let v = if adjoint { h[(j, i)] } else { h[(i, j)] };
            a[i * n + j] = Complex64::new(v, 0.0);
        }
        a[i * n + i] -= shift;
    }
    let lu = ComplexLu::factor(a, n, norm_inf(h).max(1.0));
    // fixed, non-symmetric start vector
    let mut z: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.1 * ((i * 7 + 3) % 11) as f64, 0.05 * (i % 5) as f64))
        .collect();
    for _ in 0..sweeps {
        z = lu.solve(&z);
        let nrm = cvec_norm2(&z);
        if !nrm.is_finite() || nrm == 0.0 {
            break;
        }
        for v in z.iter_mut() {
            *v /= nrm;
        }
    }
    z
}
