//! Truncated-SVD least squares on dense matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Right singular vectors and singular values of `A`, sorted descending.
struct Svd {
    /// `U` restricted to the row space used (`A = (Q U) Σ Vᵀ` for tall `A`).
    left: DMatrix<f64>,
    sigma: Vec<f64>,
    v: DMatrix<f64>,
}

fn sorted_svd(a: &DMatrix<f64>) -> Svd {
    let (m, n) = a.shape();
    let (left, sigma, vt) = if m > n {
        let qr = a.clone().qr();
        let r = qr.r();
        let svd = r.svd(true, true);
        let u_r = svd.u.expect("requested U");
        let q = qr.q();
        (q * u_r, svd.singular_values, svd.v_t.expect("requested Vᵀ"))
    } else {
        let svd = a.clone().svd(true, true);
        (svd.u.expect("requested U"), svd.singular_values, svd.v_t.expect("requested Vᵀ"))
    };
    let k = sigma.len();
    let mut order: Vec<usize> = (0..k).collect();
    // stable sort keeps the smaller index first on ties
    order.sort_by(|&i, &j| sigma[j].partial_cmp(&sigma[i]).unwrap_or(std::cmp::Ordering::Equal));
    let left = DMatrix::from_fn(left.nrows(), k, |r, c| left[(r, order[c])]);
    let v = DMatrix::from_fn(n, k, |r, c| vt[(order[c], r)]);
    Svd {
        left,
        sigma: order.iter().map(|&i| sigma[i]).collect(),
        v,
    }
}

fn kept_rank(sigma: &[f64], truncation: f64) -> usize {
    let smax = sigma.first().copied().unwrap_or(0.0);
    if !(smax > 0.0) {
        return 0;
    }
    sigma.iter().take_while(|&&s| s > 0.0 && s >= truncation * smax).count()
}

/// Minimum-norm truncated least-squares solution.
#[derive(Clone, Debug)]
pub struct Lstsq {
    pub x: DVector<f64>,
    /// `‖A x − b‖₂`.
    pub residual: f64,
    pub rank: usize,
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Absolute cut: singular values below it were discarded.
    pub cutoff: f64,
}

impl Lstsq {
    /// `σ_max / σ_min` over all singular values (infinite if singular).
    pub fn condition(&self) -> f64 {
        match (self.singular_values.first(), self.singular_values.last()) {
            (Some(&a), Some(&b)) if b > 0.0 => a / b,
            _ => f64::INFINITY,
        }
    }
}

/// Solves `min ‖A x − b‖₂`, discarding singular values below
/// `truncation · σ_max`, and returns the minimum-norm minimizer on the kept
/// subspace.
pub fn lstsq_truncated(a: &DMatrix<f64>, b: &DVector<f64>, truncation: f64) -> Result<Lstsq> {
    if !(0.0..1.0).contains(&truncation) {
        return Err(Error::InvalidParameters(format!("truncation {truncation} must lie in [0, 1)")));
    }
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: b.len(),
        });
    }
    if a.ncols() == 0 || a.nrows() == 0 {
        return Err(Error::SystemNumericallyZero);
    }
    let svd = sorted_svd(a);
    let rank = kept_rank(&svd.sigma, truncation);
    if rank == 0 {
        return Err(Error::SystemNumericallyZero);
    }
    let ub = svd.left.columns(0, rank).tr_mul(b);
    let mut x = DVector::zeros(a.ncols());
    for i in 0..rank {
        x += svd.v.column(i) * (ub[i] / svd.sigma[i]);
    }
    let residual = (a * &x - b).norm();
    Ok(Lstsq {
        x,
        residual,
        rank,
        cutoff: truncation * svd.sigma[0],
        singular_values: svd.sigma,
    })
}

/// `max_c ‖F c‖ / ‖C c‖` over coefficient vectors in the numerically
/// nonsingular subspace of `C` (singular values `≥ truncation · σ_max`).
pub fn max_generalized_singular_value(fine: &DMatrix<f64>, coarse: &DMatrix<f64>, truncation: f64) -> Result<f64> {
    if fine.ncols() != coarse.ncols() {
        return Err(Error::DimensionMismatch {
            expected: coarse.ncols(),
            got: fine.ncols(),
        });
    }
    let svd = sorted_svd(coarse);
    let rank = kept_rank(&svd.sigma, truncation);
    if rank == 0 {
        return Err(Error::UntestableTrialSpace);
    }
    let mut w = svd.v.columns(0, rank).into_owned();
    for (i, mut col) in w.column_iter_mut().enumerate() {
        col /= svd.sigma[i];
    }
    let m = fine * w;
    let s = m.singular_values();
    Ok(s.iter().copied().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_overdetermined_system() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let x0 = DVector::from_vec(vec![0.5, -2.0]);
        let b = &a * &x0;
        let s = lstsq_truncated(&a, &b, 1e-12).unwrap();
        assert!((s.x - x0).norm() < 1e-13);
        assert!(s.residual < 1e-13);
        assert_eq!(s.rank, 2);
    }

    #[test]
    fn duplicate_columns_give_minimum_norm() {
        // columns 0 and 1 identical: minimum-norm solution splits the weight
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.5, 0.5]);
        let b = DVector::from_vec(vec![2.0, 4.0, 1.0]);
        let s = lstsq_truncated(&a, &b, 1e-12).unwrap();
        assert_eq!(s.rank, 1);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_matrix_is_rejected() {
        let a = DMatrix::zeros(3, 2);
        let b = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(lstsq_truncated(&a, &b, 1e-12), Err(Error::SystemNumericallyZero)));
    }

    #[test]
    fn generalized_value_of_identical_pair_is_one() {
        let a = DMatrix::from_fn(6, 3, |i, j| ((i + 1) as f64).powi(j as i32));
        let g = max_generalized_singular_value(&a, &a, 1e-14).unwrap();
        assert!((g - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generalized_value_of_scaled_pair() {
        let a = DMatrix::from_fn(5, 2, |i, j| (i as f64 + 1.0) * (j as f64 + 0.5));
        let a = a + DMatrix::identity(5, 2);
        let f = &a * 3.0;
        let g = max_generalized_singular_value(&f, &a, 1e-14).unwrap();
        assert!((g - 3.0).abs() < 1e-12);
    }
}
