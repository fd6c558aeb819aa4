//! Gaussian measurement ensembles, null space bases, extreme singular values.

use crate::error::{Error, Result};
use crate::linalg;
use crate::seed::SeedSpec;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;

/// Measurement matrix together with the seed that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementEnsemble {
    matrix: Array2<f64>,
    seed: u64,
}

impl MeasurementEnsemble {
    /// Wraps an explicit matrix. Zero rows are allowed (trivial null space
    /// checks); the column count must be at least 2.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        if matrix.ncols() < 2 {
            return Err(Error::InvalidArgument(format!(
                "measurement matrix needs >= 2 columns, got {}",
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        let matrix = if matrix.is_standard_layout() {
            matrix
        } else {
            matrix.as_standard_layout().to_owned()
        };
        Ok(MeasurementEnsemble { matrix, seed: 0 })
    }

    pub fn m_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// y = A x for a flat signal.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.m_rows()];
        linalg::mat_vec(&self.matrix, x, &mut y);
        y
    }
}

/// m x n matrix with i.i.d. standard normal entries, drawn row-major from
/// the stream keyed by `seed`.
pub fn gaussian_matrix(m: usize, n: usize, seed: SeedSpec) -> Result<MeasurementEnsemble> {
    if m < 1 {
        return Err(Error::InvalidArgument("need m >= 1 rows".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 columns, got {n}"
        )));
    }
    let mut rng = seed.rng();
    let data: Vec<f64> = (0..m * n).map(|_| rng.sample(StandardNormal)).collect();
    let matrix = Array2::from_shape_vec((m, n), data).expect("shape matches draw count");
    Ok(MeasurementEnsemble {
        matrix,
        seed: seed.child_seed(),
    })
}

/// Orthonormal basis of null(A), as the columns of an n x (n - m) matrix.
#[derive(Clone, Debug)]
pub struct NullBasis {
    basis: Array2<f64>,
    source_seed: u64,
}

impl NullBasis {
    /// Wraps explicit orthonormal columns (each length-n column a basis
    /// vector). Intended for re-parametrized bases of an existing null
    /// space; orthonormality is verified.
    pub fn from_columns(basis: Array2<f64>, source_seed: u64) -> Result<Self> {
        let (n, h) = (basis.nrows(), basis.ncols());
        if h > n || n == 0 {
            return Err(Error::InvalidArgument(format!(
                "basis shape {n} x {h} cannot span a subspace"
            )));
        }
        for i in 0..h {
            for j in i..h {
                let dot: f64 = basis
                    .column(i)
                    .iter()
                    .zip(basis.column(j))
                    .map(|(a, b)| a * b)
                    .sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-8 {
                    return Err(Error::InvalidArgument(
                        "basis columns are not orthonormal".into(),
                    ));
                }
            }
        }
        let basis = basis.as_standard_layout().to_owned();
        Ok(NullBasis { basis, source_seed })
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn source_seed(&self) -> u64 {
        self.source_seed
    }

    /// Projects a full-space vector onto the null space: out = B (B^T x).
    pub fn project(&self, x: &[f64], out: &mut [f64]) {
        let mut w = vec![0.0; self.dim()];
        linalg::mat_t_vec(&self.basis, x, &mut w);
        linalg::mat_vec(&self.basis, &w, out);
    }

    /// out = B w for subspace coordinates w.
    pub fn lift(&self, w: &[f64], out: &mut [f64]) {
        linalg::mat_vec(&self.basis, w, out);
    }
}

/// Null space basis from a full orthogonal decomposition of A^T: the
/// trailing n - m columns of the orthogonal factor.
pub fn null_space_basis(a: &MeasurementEnsemble) -> Result<NullBasis> {
    let (m, n) = (a.m_rows(), a.n_cols());
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "null basis expects m <= n, got {m} x {n}"
        )));
    }
    if m == 0 {
        let basis = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { 0.0 });
        return Ok(NullBasis {
            basis,
            source_seed: a.seed(),
        });
    }
    let at = a.matrix().t().as_standard_layout().to_owned();
    let qr = linalg::householder_qr(&at);
    let scale = a.matrix().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let rank_tol = 1e-10 * scale.max(f64::MIN_POSITIVE) * (n as f64).sqrt();
    for j in 0..m {
        if qr.r_diag(j).abs() <= rank_tol {
            return Err(Error::DegenerateEnsemble(format!(
                "matrix is rank-deficient (pivot {j} of {m} below tolerance)"
            )));
        }
    }
    let q = qr.q_full();
    let mut basis = Array2::zeros((n, n - m));
    for i in 0..n {
        for j in 0..n - m {
            basis[[i, j]] = q[[i, m + j]];
        }
    }
    Ok(NullBasis {
        basis,
        source_seed: a.seed(),
    })
}

/// Smallest singular value, via the eigenvalues of the smaller Gram matrix.
pub fn min_singular_value(a: &MeasurementEnsemble) -> Result<f64> {
    let (m, n) = (a.m_rows(), a.n_cols());
    if m == 0 {
        return Err(Error::InvalidArgument("singular values need m >= 1".into()));
    }
    let flat = a.matrix().as_slice().expect("matrix is row-major");
    let gram = if m <= n {
        // A A^T, m x m.
        let mut g = Array2::zeros((m, m));
        for i in 0..m {
            for j in 0..=i {
                let v = linalg::dot(&flat[i * n..(i + 1) * n], &flat[j * n..(j + 1) * n]);
                g[[i, j]] = v;
                g[[j, i]] = v;
            }
        }
        g
    } else {
        let mut g = Array2::zeros((n, n));
        linalg::add_gram_at_a(a.matrix(), &mut g);
        g
    };
    let eig = linalg::jacobi_eigenvalues(&gram);
    Ok(eig[0].max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn gaussian_matrix_is_deterministic_per_seed() {
        let a = gaussian_matrix(6, 10, SeedSpec::new(3, 0)).unwrap();
        let b = gaussian_matrix(6, 10, SeedSpec::new(3, 0)).unwrap();
        let c = gaussian_matrix(6, 10, SeedSpec::new(3, 1)).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        assert_ne!(a.matrix(), c.matrix());
    }

    #[test]
    fn gaussian_moments_are_plausible() {
        let a = gaussian_matrix(100, 100, SeedSpec::new(17, 0)).unwrap();
        let mean: f64 = a.matrix().iter().sum::<f64>() / 1e4;
        let var: f64 = a.matrix().iter().map(|v| v * v).sum::<f64>() / 1e4;
        assert!(mean.abs() < 0.05, "mean = {mean}");
        assert!((var - 1.0).abs() < 0.05, "var = {var}");
    }

    #[test]
    fn null_basis_is_orthonormal_and_annihilated() {
        for trial in 0..20 {
            let m = 3 + (trial % 5) as usize;
            let n = m + 2 + (trial % 7) as usize;
            let a = gaussian_matrix(m, n, SeedSpec::new(40, trial)).unwrap();
            let nb = null_space_basis(&a).unwrap();
            assert_eq!(nb.dim(), n - m);
            let b = nb.basis();
            for i in 0..nb.dim() {
                for j in 0..nb.dim() {
                    let mut s = 0.0;
                    for r in 0..n {
                        s += b[[r, i]] * b[[r, j]];
                    }
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!((s - want).abs() < 1e-12);
                }
            }
            let scale = a.matrix().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            let prod = a.matrix().dot(b);
            let worst = prod.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            assert!(worst <= 1e-10 * scale, "residual {worst}");
        }
    }

    #[test]
    fn rank_deficient_matrix_is_rejected() {
        let mut m = Array2::zeros((3, 6));
        for j in 0..6 {
            m[[0, j]] = j as f64 + 1.0;
            m[[1, j]] = 2.0 * (j as f64 + 1.0);
            m[[2, j]] = (j as f64).sin();
        }
        let a = MeasurementEnsemble::from_matrix(m).unwrap();
        assert!(matches!(
            null_space_basis(&a),
            Err(Error::DegenerateEnsemble(_))
        ));
    }

    #[test]
    fn zero_row_ensemble_has_full_null_space() {
        let a = MeasurementEnsemble::from_matrix(Array2::zeros((0, 4))).unwrap();
        let nb = null_space_basis(&a).unwrap();
        assert_eq!(nb.dim(), 4);
        assert_eq!(nb.basis()[[2, 2]], 1.0);
    }

    #[test]
    fn min_singular_value_known_cases() {
        let eye = MeasurementEnsemble::from_matrix(array![
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0]
        ])
        .unwrap();
        assert!((min_singular_value(&eye).unwrap() - 1.0).abs() < 1e-12);

        let diag =
            MeasurementEnsemble::from_matrix(array![[3.0, 0.0, 0.0, 0.0], [0.0, 2.0, 0.0, 0.0]])
                .unwrap();
        assert!((min_singular_value(&diag).unwrap() - 2.0).abs() < 1e-12);
    }
}
