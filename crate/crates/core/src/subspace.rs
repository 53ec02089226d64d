//! Sample covariance and signal/noise subspace decomposition.
//!
//! The eigensolver reduces the Hermitian matrix to real symmetric
//! tridiagonal form with complex Householder reflections (plus a diagonal
//! phase rescaling), then diagonalizes the tridiagonal matrix with the
//! implicit QL algorithm.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, C64};

/// `(1/K) Y Y^H`, symmetrized to exact Hermitian form.
pub fn sample_covariance(y: &CMatrix) -> Result<CMatrix> {
    let (n, k) = (y.rows(), y.cols());
    if n == 0 || k == 0 {
        return Err(invalid("y", "covariance needs at least one row and one snapshot"));
    }
    let mut cov = CMatrix::zeros(n, n);
    // Lower triangle only, one rank-1 update per snapshot.
    for s in 0..k {
        let col = y.col(s);
        for j in 0..n {
            let cj = col[j].conj();
            let out = &mut cov.col_mut(j)[j..];
            for (o, &x) in out.iter_mut().zip(&col[j..]) {
                *o += x * cj;
            }
        }
    }
    let scale = 1.0 / k as f64;
    for j in 0..n {
        let d = cov[(j, j)].re * scale;
        cov[(j, j)] = C64::new(d, 0.0);
        for i in j + 1..n {
            let v = cov[(i, j)] * scale;
            cov[(i, j)] = v;
            cov[(j, i)] = v.conj();
        }
    }
    Ok(cov)
}

/// Full eigendecomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Real eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `i` pairs with `values[i]`.
    pub vectors: CMatrix,
}

/// Signal and noise subspaces of one covariance matrix.
#[derive(Debug, Clone)]
pub struct SubspaceDecomposition {
    /// `N x P` eigenvectors of the `P` largest eigenvalues.
    pub signal_basis: CMatrix,
    /// `N x (N - P)` remaining eigenvectors.
    pub noise_basis: CMatrix,
    /// All eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
}

impl SubspaceDecomposition {
    pub fn n_elements(&self) -> usize {
        self.signal_basis.rows()
    }

    pub fn n_signals(&self) -> usize {
        self.signal_basis.cols()
    }
}

/// Eigendecomposition of a Hermitian matrix. Only the lower triangle is
/// read; the input is symmetrized first.
pub fn hermitian_eig(sigma: &CMatrix) -> Result<Eigen> {
    if !sigma.is_square() {
        return Err(Error::DimensionMismatch { expected: sigma.rows(), found: sigma.cols() });
    }
    if !sigma.is_finite() {
        return Err(Error::NonFinite);
    }
    let n = sigma.rows();
    if n == 0 {
        return Ok(Eigen { values: Vec::new(), vectors: CMatrix::zeros(0, 0) });
    }
    let mut a = sigma.clone();
    a.symmetrize();

    let tri = tridiagonalize(&mut a);
    let mut d = tri.diag;
    let mut e = vec![0.0; n];
    let mut phases = vec![C64::new(1.0, 0.0); n];
    for k in 0..n - 1 {
        let s = tri.sub[k];
        let mag = s.norm();
        e[k] = mag;
        phases[k + 1] = if mag > 0.0 { phases[k] * (s / mag) } else { phases[k] };
    }

    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql2(&mut d, &mut e, &mut z, n)?;

    // V = Q D Z
    let mut v = CMatrix::from_fn(n, n, |i, j| phases[i] * z[j * n + i]);
    for (k, w) in tri.reflectors.iter().rev() {
        apply_reflector(&mut v, *k + 1, w);
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable: equal eigenvalues keep the solver's order.
    order.sort_by(|&i, &j| d[j].partial_cmp(&d[i]).unwrap_or(core::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// Splits an eigendecomposition into `P` signal and `N - P` noise vectors.
pub fn split_subspaces(eig: &Eigen, n_signals: usize) -> Result<SubspaceDecomposition> {
    let n = eig.values.len();
    if n_signals == 0 || n_signals >= n {
        return Err(invalid("n_signals", "need 1 <= P < N"));
    }
    Ok(SubspaceDecomposition {
        signal_basis: eig.vectors.columns(0, n_signals),
        noise_basis: eig.vectors.columns(n_signals, n),
        eigenvalues: eig.values.clone(),
    })
}

/// Covariance, eigendecomposition and split for one snapshot matrix.
pub fn decompose(y: &CMatrix, n_signals: usize) -> Result<SubspaceDecomposition> {
    let cov = sample_covariance(y)?;
    split_subspaces(&hermitian_eig(&cov)?, n_signals)
}

struct Tridiagonal {
    diag: Vec<f64>,
    sub: Vec<C64>,
    /// `(k, w)`: reflector `I - 2 w w^H` acting on rows `k+1..n`.
    reflectors: Vec<(usize, Vec<C64>)>,
}

fn tridiagonalize(a: &mut CMatrix) -> Tridiagonal {
    let n = a.rows();
    let mut sub = vec![C64::new(0.0, 0.0); n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    let mut p = vec![C64::new(0.0, 0.0); n];

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let x: Vec<C64> = a.col(k)[k + 1..].to_vec();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            sub[k] = x[0];
            continue;
        }
        let xnorm = (x[0].norm_sqr() + tail).sqrt();
        let x0 = x[0].norm();
        let unit = if x0 > 0.0 { x[0] / x0 } else { C64::new(1.0, 0.0) };
        let alpha = -unit * xnorm;
        let mut w = x;
        w[0] -= alpha;
        let wn = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in &mut w {
            *z /= wn;
        }

        // Trailing block B = a[k+1.., k+1..]: B <- H B H with H = I - 2 w w^H.
        let off = k + 1;
        let p = &mut p[..m];
        p.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (jj, &wj) in w.iter().enumerate() {
            let col = &a.col(off + jj)[off..];
            for (pi, &b) in p.iter_mut().zip(col) {
                *pi += b * wj;
            }
        }
        let kappa: f64 = w.iter().zip(p.iter()).map(|(wi, pi)| (wi.conj() * pi).re).sum();
        for (pi, &wi) in p.iter_mut().zip(&w) {
            *pi -= wi * kappa;
        }
        for jj in 0..m {
            let wj = w[jj].conj() * 2.0;
            let qj = p[jj].conj() * 2.0;
            let col = &mut a.col_mut(off + jj)[off..];
            for ((b, &wi), &qi) in col.iter_mut().zip(&w).zip(p.iter()) {
                *b -= wi * qj + qi * wj;
            }
        }
        sub[k] = alpha;
        reflectors.push((k, w));
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    Tridiagonal { diag, sub, reflectors }
}

fn apply_reflector(v: &mut CMatrix, start: usize, w: &[C64]) {
    for j in 0..v.cols() {
        let col = &mut v.col_mut(j)[start..];
        let mut s = C64::new(0.0, 0.0);
        for (wi, x) in w.iter().zip(col.iter()) {
            s += wi.conj() * x;
        }
        let s = s * 2.0;
        for (x, wi) in col.iter_mut().zip(w) {
            *x -= wi * s;
        }
    }
}

/// Implicit QL on a real symmetric tridiagonal matrix (diagonal `d`,
/// subdiagonal `e[0..n-1]`, `e[n-1] = 0`). Rotations are accumulated into
/// the column-major `n x n` matrix `z`.
fn tql2(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    const MAX_SWEEPS: usize = 60;
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut sweeps = 0;
            loop {
                sweeps += 1;
                if sweeps > MAX_SWEEPS {
                    return Err(invalid("sigma", "eigenvalue iteration did not converge"));
                }
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let h = g - d[l];
                for di in d.iter_mut().take(n).skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    let h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    let (left, right) = z.split_at_mut((i + 1) * n);
                    let zi = &mut left[i * n..];
                    let zi1 = &mut right[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let h = *b;
                        *b = s * *a + c * h;
                        *a = c * *a - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot_conj;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(rows, cols, |_, _| {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut a = random_matrix(n, n, seed);
        a.symmetrize();
        a
    }

    /// Gram-Schmidt orthonormalization of the columns.
    fn random_unitary(n: usize, seed: u64) -> CMatrix {
        let mut q = random_matrix(n, n, seed);
        for j in 0..n {
            for k in 0..j {
                let proj = dot_conj(q.col(k), q.col(j));
                let qk = q.col(k).to_vec();
                for (x, y) in q.col_mut(j).iter_mut().zip(&qk) {
                    *x -= y * proj;
                }
            }
            let nrm = q.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            q.col_mut(j).iter_mut().for_each(|z| *z /= nrm);
        }
        q
    }

    fn check_residuals(sigma: &CMatrix, eig: &Eigen, tol: f64) {
        let scale = sigma.frobenius_norm().max(1e-300);
        for (i, &lambda) in eig.values.iter().enumerate() {
            let v = eig.vectors.col(i);
            let sv = sigma.mul_vec(v);
            let res: f64 = sv.iter().zip(v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt();
            assert!(res <= tol * scale, "pair {i}: residual {res}");
        }
        let gram = eig.vectors.adjoint().matmul(&eig.vectors);
        assert!(gram.max_abs_diff(&CMatrix::identity(sigma.rows())) < 1e-10);
        assert!(eig.values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn covariance_zero_and_rank_one() {
        let z = CMatrix::zeros(3, 4);
        assert_eq!(sample_covariance(&z).unwrap(), CMatrix::zeros(3, 3));
        let y = CMatrix::from_columns(&[vec![C64::new(1.0, 1.0), C64::new(0.0, -2.0)]]);
        let c = sample_covariance(&y).unwrap();
        assert_eq!(c[(0, 0)], C64::new(2.0, 0.0));
        assert_eq!(c[(1, 0)], C64::new(0.0, -2.0) * C64::new(1.0, -1.0));
        let eig = hermitian_eig(&c).unwrap();
        assert!(eig.values[1].abs() < 1e-14);
        assert!(sample_covariance(&CMatrix::zeros(3, 0)).is_err());
    }

    #[test]
    fn covariance_matches_double_loop_oracle() {
        let y = random_matrix(3, 5, 11);
        let c = sample_covariance(&y).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..5 {
                    acc += y[(i, k)] * y[(j, k)].conj();
                }
                assert!((c[(i, j)] - acc / 5.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_and_diagonal() {
        let eig = hermitian_eig(&CMatrix::identity(4)).unwrap();
        assert!(eig.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        let mut d = CMatrix::zeros(3, 3);
        d[(0, 0)] = C64::new(1.0, 0.0);
        d[(1, 1)] = C64::new(3.0, 0.0);
        d[(2, 2)] = C64::new(2.0, 0.0);
        let eig = hermitian_eig(&d).unwrap();
        assert_eq!(eig.values, [3.0, 2.0, 1.0]);
        for (col, axis) in [(0, 1), (1, 2), (2, 0)] {
            assert!((eig.vectors[(axis, col)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn constructed_spectrum_recovered() {
        let q = random_unitary(3, 5);
        let lam = [5.0, 1.0, 0.1];
        let sigma = CMatrix::from_fn(3, 3, |i, j| {
            (0..3).map(|k| q[(i, k)] * lam[k] * q[(j, k)].conj()).sum()
        });
        let eig = hermitian_eig(&sigma).unwrap();
        for (a, b) in eig.values.iter().zip(lam) {
            assert!((a - b).abs() < 1e-9);
        }
        check_residuals(&sigma, &eig, 1e-12);
    }

    #[test]
    fn random_hermitian_residuals_and_reconstruction() {
        for (n, seed) in [(2, 1), (7, 2), (40, 3), (129, 4)] {
            let sigma = random_hermitian(n, seed);
            let eig = hermitian_eig(&sigma).unwrap();
            check_residuals(&sigma, &eig, 1e-10);
            let rebuilt = CMatrix::from_fn(n, n, |i, j| {
                (0..n).map(|k| eig.vectors[(i, k)] * eig.values[k] * eig.vectors[(j, k)].conj()).sum()
            });
            assert!(rebuilt.max_abs_diff(&sigma) < 1e-10 * sigma.frobenius_norm());
        }
    }

    #[test]
    fn split_checks_and_orthogonality() {
        let sigma = random_hermitian(6, 9);
        let eig = hermitian_eig(&sigma).unwrap();
        assert!(split_subspaces(&eig, 0).is_err());
        assert!(split_subspaces(&eig, 6).is_err());
        let s = split_subspaces(&eig, 5).unwrap();
        assert_eq!(s.noise_basis.cols(), 1);
        let s = split_subspaces(&eig, 2).unwrap();
        let cross = s.signal_basis.adjoint().matmul(&s.noise_basis);
        assert!(cross.frobenius_norm() < 1e-10);
    }

    #[test]
    fn rejects_non_finite() {
        let mut a = CMatrix::identity(3);
        a[(1, 2)] = C64::new(f64::NAN, 0.0);
        assert_eq!(hermitian_eig(&a).unwrap_err(), Error::NonFinite);
    }
}
