//! Dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, VemError};

/// Default relative singular-value cutoff for nullspace computations.
pub const NULLSPACE_RTOL: f64 = 1e-10;

/// Orthonormal basis of `ker(c)` as matrix columns.
///
/// The rank decision uses the singular values of `c` with cutoff
/// `rtol * σ_max`. A singular value within a factor 10 on either side of the
/// cutoff makes the decision ambiguous and is reported as an error instead of
/// being silently classified.
pub fn nullspace(c: &DMatrix<f64>, rtol: f64) -> Result<DMatrix<f64>> {
    let (m, n) = c.shape();
    if n == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    if m == 0 {
        return Ok(DMatrix::identity(n, n));
    }
    // Zero rows keep the singular values but make the right factor square.
    let padded;
    let a = if m < n {
        let mut p = DMatrix::zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(c);
        padded = p;
        &padded
    } else {
        c
    };
    let svd = a.clone().svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| VemError::Singular("SVD did not return right singular vectors".into()))?;
    let sigma = &svd.singular_values;
    let smax = sigma.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let cutoff = rtol * smax;
    for &s in sigma.iter() {
        if s > cutoff / 10.0 && s < cutoff * 10.0 {
            return Err(VemError::AmbiguousRank { value: s, cutoff });
        }
    }
    let keep: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] <= cutoff).collect();
    let mut out = DMatrix::zeros(n, keep.len());
    for (j, &i) in keep.iter().enumerate() {
        out.set_column(j, &v_t.row(i).transpose());
    }
    Ok(out)
}

/// Numerical rank with the same cutoff convention as [`nullspace`]
/// (no ambiguity check).
pub fn rank(a: &DMatrix<f64>, rtol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let s = a.clone().singular_values();
    let smax = s.iter().cloned().fold(0.0_f64, f64::max);
    if smax == 0.0 {
        return 0;
    }
    s.iter().filter(|&&x| x > rtol * smax).count()
}

/// Eigenvalues (ascending) and matching eigenvector columns of a symmetric matrix.
pub fn sym_eigen(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Solve `a x = b` for symmetric positive definite `a`.
pub fn spd_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| VemError::Singular("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

/// Solve a general square system with partial-pivoting LU.
pub fn lu_solve(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| VemError::Singular("LU factorization is singular".into()))
}

pub fn lu_solve_vec(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| VemError::Singular("LU factorization is singular".into()))
}

/// Upper-triangular `t` such that the columns of `values * t` are orthonormal.
///
/// `values` holds basis functions evaluated at quadrature points with rows
/// already scaled by the square roots of the weights. Householder QR is
/// applied twice; the result is insensitive to column scaling of `values`.
pub fn orthonormalizing_transform(values: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = values.ncols();
    let mut total = DMatrix::<f64>::identity(n, n);
    let mut current = values.clone();
    for _ in 0..2 {
        let r = current.clone().qr().r();
        let mut r_inv = DMatrix::<f64>::identity(n, n);
        if !r.solve_upper_triangular_mut(&mut r_inv) {
            return Err(VemError::Singular(
                "basis functions are linearly dependent on the quadrature set".into(),
            ));
        }
        current = &current * &r_inv;
        total = &total * &r_inv;
    }
    // Fix signs so the diagonal of the transform is positive.
    for j in 0..n {
        if total[(j, j)] < 0.0 {
            let neg = -total.column(j);
            total.set_column(j, &neg);
        }
    }
    Ok(total)
}

/// Transform `t` with `tᵀ m t = I` for SPD `m`, built from its eigenpairs.
pub fn gram_orthonormalizer(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let n = vals.len();
    let mut t = vecs;
    for (j, &v) in vals.iter().enumerate() {
        if !(v > 0.0) {
            return Err(VemError::Singular(format!(
                "Gram matrix is not positive definite (eigenvalue {v:.3e})"
            )));
        }
        let s = 1.0 / v.sqrt();
        for i in 0..n {
            t[(i, j)] *= s;
        }
    }
    Ok(t)
}

/// `max |a_ij - a_ji| / max |a_ij|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    (a - a.transpose()).amax() / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_wide_matrix() {
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let n = nullspace(&c, NULLSPACE_RTOL).unwrap();
        assert_eq!(n.ncols(), 2);
        assert!((&c * &n).amax() < 1e-14);
        let g = n.transpose() * &n;
        assert!((g - DMatrix::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn nullspace_of_full_rank_square_is_empty() {
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        assert_eq!(nullspace(&c, NULLSPACE_RTOL).unwrap().ncols(), 0);
    }

    #[test]
    fn ambiguous_rank_is_reported() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2e-10]);
        assert!(matches!(
            nullspace(&c, NULLSPACE_RTOL),
            Err(VemError::AmbiguousRank { .. })
        ));
    }

    #[test]
    fn orthonormalizer_handles_badly_scaled_columns() {
        // columns 1, y, y^2 sampled on a thin interval
        let ys: Vec<f64> = (0..20).map(|i| 1e-4 * (i as f64 / 19.0 - 0.5)).collect();
        let v = DMatrix::from_fn(20, 3, |i, j| ys[i].powi(j as i32));
        let t = orthonormalizing_transform(&v).unwrap();
        let q = &v * &t;
        let g = q.transpose() * &q;
        assert!((g - DMatrix::identity(3, 3)).amax() < 1e-12);
    }

    #[test]
    fn gram_orthonormalizer_works() {
        let m = DMatrix::from_row_slice(2, 2, &[4.0, 1.0, 1.0, 3.0]);
        let t = gram_orthonormalizer(&m).unwrap();
        let i = t.transpose() * &m * &t;
        assert!((i - DMatrix::identity(2, 2)).amax() < 1e-13);
    }
}
