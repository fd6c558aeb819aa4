//! Dense linear algebra kernels backing the factorizations and solvers.
//!
//! Everything here is deterministic: fixed accumulation order, no threading,
//! no platform-dependent branching.

use ndarray::Array2;

/// Dot product with four independent accumulators so the loop pipelines.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let chunks = n / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for c in 0..chunks {
        let i = 4 * c;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in 4 * chunks..n {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for i in 0..x.len() {
        y[i] += alpha * x[i];
    }
}

pub(crate) fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// out = A x.
pub(crate) fn mat_vec(a: &Array2<f64>, x: &[f64], out: &mut [f64]) {
    let (m, n) = (a.nrows(), a.ncols());
    debug_assert_eq!(x.len(), n);
    debug_assert_eq!(out.len(), m);
    let flat = a.as_slice().expect("matrix is row-major");
    for i in 0..m {
        out[i] = dot(&flat[i * n..(i + 1) * n], x);
    }
}

/// out = A^T x.
pub(crate) fn mat_t_vec(a: &Array2<f64>, x: &[f64], out: &mut [f64]) {
    let (m, n) = (a.nrows(), a.ncols());
    debug_assert_eq!(x.len(), m);
    debug_assert_eq!(out.len(), n);
    let flat = a.as_slice().expect("matrix is row-major");
    out.fill(0.0);
    for i in 0..m {
        axpy(x[i], &flat[i * n..(i + 1) * n], out);
    }
}

/// c += A^T A, accumulating the upper triangle row by row, then mirroring.
pub(crate) fn add_gram_at_a(a: &Array2<f64>, c: &mut Array2<f64>) {
    let (m, n) = (a.nrows(), a.ncols());
    debug_assert_eq!(c.nrows(), n);
    debug_assert_eq!(c.ncols(), n);
    let flat = a.as_slice().expect("matrix is row-major");
    let cf = c.as_slice_mut().expect("gram is row-major");
    for r in 0..m {
        let row = &flat[r * n..(r + 1) * n];
        for i in 0..n {
            let v = row[i];
            if v != 0.0 {
                axpy(v, &row[i..], &mut cf[i * n + i..(i + 1) * n]);
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            cf[i * n + j] = cf[j * n + i];
        }
    }
}

/// Cholesky factorization of a symmetric positive definite matrix.
///
/// Stores both L and L^T row-major so forward and backward substitution
/// both stream over contiguous memory.
pub(crate) struct Chol {
    n: usize,
    l: Vec<f64>,
    u: Vec<f64>,
}

pub(crate) fn cholesky(a: &Array2<f64>) -> Option<Chol> {
    let n = a.nrows();
    if a.ncols() != n {
        return None;
    }
    let af = a.as_slice().expect("matrix is row-major");
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s = af[i * n + j] - dot_prefix(&l, n, i, j);
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut u = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            u[j * n + i] = l[i * n + j];
        }
    }
    Some(Chol { n, l, u })
}

#[inline]
fn dot_prefix(l: &[f64], n: usize, i: usize, j: usize) -> f64 {
    dot(&l[i * n..i * n + j], &l[j * n..j * n + j])
}

impl Chol {
    /// Solves (L L^T) x = b in place.
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for i in 0..n {
            let s = dot(&self.l[i * n..i * n + i], &b[..i]);
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let s = dot(&self.u[i * n + i + 1..(i + 1) * n], &b[i + 1..]);
            b[i] = (b[i] - s) / self.u[i * n + i];
        }
    }
}

/// LDL^T factorization of a symmetric positive definite tridiagonal matrix.
pub(crate) struct Tridiag {
    dhat: Vec<f64>,
    sub: Vec<f64>,
}

pub(crate) fn tridiag_factor(diag: &[f64], off: &[f64]) -> Option<Tridiag> {
    let n = diag.len();
    debug_assert_eq!(off.len(), n.saturating_sub(1));
    let mut dhat = vec![0.0f64; n];
    let mut sub = vec![0.0f64; n.saturating_sub(1)];
    dhat[0] = diag[0];
    if dhat[0] <= 0.0 {
        return None;
    }
    for i in 1..n {
        sub[i - 1] = off[i - 1] / dhat[i - 1];
        dhat[i] = diag[i] - sub[i - 1] * off[i - 1];
        if dhat[i] <= 0.0 || !dhat[i].is_finite() {
            return None;
        }
    }
    Some(Tridiag { dhat, sub })
}

impl Tridiag {
    pub(crate) fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.dhat.len();
        debug_assert_eq!(b.len(), n);
        for i in 1..n {
            b[i] -= self.sub[i - 1] * b[i - 1];
        }
        for i in 0..n {
            b[i] /= self.dhat[i];
        }
        for i in (0..n - 1).rev() {
            b[i] -= self.sub[i] * b[i + 1];
        }
    }
}

/// Householder QR of a rows x cols matrix (rows >= cols).
pub(crate) struct Qr {
    rows: usize,
    cols: usize,
    r: Vec<f64>,
    reflectors: Vec<Vec<f64>>,
}

pub(crate) fn householder_qr(a: &Array2<f64>) -> Qr {
    let (rows, cols) = (a.nrows(), a.ncols());
    assert!(rows >= cols, "householder_qr expects rows >= cols");
    let mut r: Vec<f64> = a.as_slice().expect("matrix is row-major").to_vec();
    let mut reflectors = Vec::with_capacity(cols);
    for j in 0..cols {
        let len = rows - j;
        let mut v = vec![0.0f64; len];
        for i in 0..len {
            v[i] = r[(j + i) * cols + j];
        }
        let norm = norm2(&v);
        if norm <= f64::MIN_POSITIVE {
            reflectors.push(Vec::new());
            continue;
        }
        let alpha = if v[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vn2 = dot(&v, &v);
        if vn2 <= f64::MIN_POSITIVE {
            reflectors.push(Vec::new());
            continue;
        }
        r[j * cols + j] = alpha;
        for i in 1..len {
            r[(j + i) * cols + j] = 0.0;
        }
        for c in j + 1..cols {
            let mut s = 0.0;
            for i in 0..len {
                s += v[i] * r[(j + i) * cols + c];
            }
            s *= 2.0 / vn2;
            for i in 0..len {
                r[(j + i) * cols + c] -= s * v[i];
            }
        }
        reflectors.push(v);
    }
    Qr {
        rows,
        cols,
        r,
        reflectors,
    }
}

impl Qr {
    pub(crate) fn r_diag(&self, j: usize) -> f64 {
        self.r[j * self.cols + j]
    }

    /// Full rows x rows orthogonal factor.
    pub(crate) fn q_full(&self) -> Array2<f64> {
        let n = self.rows;
        let mut q = vec![0.0f64; n * n];
        for i in 0..n {
            q[i * n + i] = 1.0;
        }
        for j in (0..self.reflectors.len()).rev() {
            let v = &self.reflectors[j];
            if v.is_empty() {
                continue;
            }
            let vn2 = dot(v, v);
            for c in 0..n {
                let mut s = 0.0;
                for i in 0..v.len() {
                    s += v[i] * q[(j + i) * n + c];
                }
                s *= 2.0 / vn2;
                for i in 0..v.len() {
                    q[(j + i) * n + c] -= s * v[i];
                }
            }
        }
        Array2::from_shape_vec((n, n), q).expect("square shape")
    }
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub(crate) fn jacobi_eigenvalues(a: &Array2<f64>) -> Vec<f64> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n, "jacobi_eigenvalues expects a square matrix");
    let mut m: Vec<f64> = a.as_slice().expect("matrix is row-major").to_vec();
    if n == 1 {
        return vec![m[0]];
    }
    let frob: f64 = dot(&m, &m).sqrt();
    let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);
    for _sweep in 0..64 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for i in 0..n {
                    let aip = m[i * n + p];
                    let aiq = m[i * n + q];
                    m[i * n + p] = c * aip - s * aiq;
                    m[i * n + q] = s * aip + c * aiq;
                }
                for i in 0..n {
                    let api = m[p * n + i];
                    let aqi = m[q * n + i];
                    m[p * n + i] = c * api - s * aqi;
                    m[q * n + i] = s * api + c * aqi;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    eig.sort_by(|a, b| a.total_cmp(b));
    eig
}
