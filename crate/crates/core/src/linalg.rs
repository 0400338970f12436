//! Small dense complex linear algebra helpers shared across the crate.
//!
//! All operators here are tiny (dimension <= 27 at desk scale), so nothing
//! is sparse and the Hermitian eigensolver is a plain cyclic Jacobi on the
//! real embedding -- deterministic, dependency-free, and accurate to machine
//! precision at these sizes.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

pub type C64 = Complex64;

/// Conjugate transpose.
pub fn dagger(m: &Array2<C64>) -> Array2<C64> {
    m.t().mapv(|z| z.conj())
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    a.dot(b) - b.dot(a)
}

/// Largest entry magnitude, `max_ij |m_ij|`.
pub fn max_abs(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max_ij |a_ij - b_ij|`.
pub fn max_abs_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Deviation from Hermiticity, `max_ij |m_ij - conj(m_ji)|`.
pub fn hermiticity_deviation(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    dev
}

/// Inner product `<a|b>` with the first argument conjugated.
pub fn inner(a: &Array1<C64>, b: &Array1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigenvalues of a Hermitian matrix, ascending.
///
/// Works on the real symmetric embedding `[[Re, -Im], [Im, Re]]`, whose
/// spectrum is that of the input with every eigenvalue doubled; the
/// duplicates are collapsed after sorting. Input Hermiticity is the caller's
/// responsibility (only the lower triangle's conjugate symmetry is assumed).
pub fn hermitian_eigenvalues(m: &Array2<C64>) -> Vec<f64> {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "hermitian_eigenvalues: matrix must be square");
    let mut b = vec![0.0_f64; 4 * n * n];
    let d = 2 * n;
    for i in 0..n {
        for j in 0..n {
            let z = m[[i, j]];
            b[i * d + j] = z.re;
            b[(i + n) * d + (j + n)] = z.re;
            b[i * d + (j + n)] = -z.im;
            b[(i + n) * d + j] = z.im;
        }
    }
    let mut eigs = jacobi_symmetric_eigenvalues(&mut b, d);
    eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    // every eigenvalue appears exactly twice in the embedding
    eigs.into_iter().step_by(2).collect()
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &Array2<C64>) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

// Cyclic Jacobi for a dense real symmetric matrix stored row-major in `a`.
// Rotations annihilate off-diagonal entries until their total norm falls
// below machine-level tolerance relative to the matrix scale.
fn jacobi_symmetric_eigenvalues(a: &mut [f64], n: usize) -> Vec<f64> {
    let scale = a.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
    let tol = 1e-15 * scale;
    for _sweep in 0..64 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p * n + q].abs());
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= tol * 1e-2 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i * n + i]).collect()
}
