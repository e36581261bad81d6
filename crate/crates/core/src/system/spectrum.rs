use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sprs::CsMat;

use super::solve::{factor_ldl, matvec};
use crate::par::Execution;

use crate::error::{Result, VemError};
use crate::linalg::sym_eigen;

/// Eigenvalues at or below this fraction of the largest one count as zero.
pub const DEFAULT_ZERO_THRESHOLD: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumStats {
    pub lam_max: f64,
    pub lam_min_nz: f64,
    pub n_zero: usize,
    pub cond: f64,
    /// Smallest eigenvalue, kept to check semi-definiteness.
    pub lam_min: f64,
    pub zero_threshold: f64,
}

/// Full symmetric eigendecomposition of `a` summarized as extreme
/// eigenvalues, zero count and `λ_max / λ_min_nz`.
pub fn spectrum_stats(a: &DMatrix<f64>, zero_threshold: f64) -> Result<SpectrumStats> {
    let (ev, _) = sym_eigen(a);
    let lam_max = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lam_min = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let cutoff = zero_threshold * lam_max.max(0.0);
    let n_zero = ev.iter().filter(|&&l| l <= cutoff).count();
    let lam_min_nz = ev
        .iter()
        .cloned()
        .filter(|&l| l > cutoff)
        .fold(f64::INFINITY, f64::min);
    if !(lam_max > 0.0) || !lam_min_nz.is_finite() {
        return Err(VemError::EmptySpectrum);
    }
    Ok(SpectrumStats {
        lam_max,
        lam_min_nz,
        n_zero,
        cond: lam_max / lam_min_nz,
        lam_min,
        zero_threshold,
    })
}

/// Like [`spectrum_stats`], but with the kernel dimension known: the
/// condition number is `λ_max / λ_{kernel}` (ascending order, zero-based)
/// whatever the threshold says. Needed once `λ_min_nz / λ_max` drops below
/// the zero threshold.
pub fn spectrum_stats_known_kernel(a: &DMatrix<f64>, kernel: usize, zero_threshold: f64) -> Result<SpectrumStats> {
    let (mut ev, _) = sym_eigen(a);
    ev.sort_by(f64::total_cmp);
    let lam_max = *ev.last().ok_or(VemError::EmptySpectrum)?;
    let lam_min_nz = *ev.get(kernel).ok_or(VemError::EmptySpectrum)?;
    if !(lam_max > 0.0) || !(lam_min_nz > 0.0) {
        return Err(VemError::EmptySpectrum);
    }
    let cutoff = zero_threshold * lam_max;
    Ok(SpectrumStats {
        lam_max,
        lam_min_nz,
        n_zero: ev.iter().filter(|&&l| l <= cutoff).count(),
        cond: lam_max / lam_min_nz,
        lam_min: ev[0],
        zero_threshold,
    })
}

/// Extreme eigenvalues of a sparse SPD matrix by power iteration and by
/// inverse iteration through a sparse LDLᵀ factor; `(λ_max, λ_min)`.
pub fn extreme_eigenvalues_spd(a: &CsMat<f64>, iterations: usize) -> Result<(f64, f64)> {
    let n = a.rows();
    if n == 0 {
        return Err(VemError::EmptySpectrum);
    }
    // Deterministic start vector with components along every eigenvector
    // in practice.
    let start = DVector::from_fn(n, |i, _| 1.0 + ((i * 7919) % 113) as f64 / 113.0);
    let mut x = start.normalize();
    let mut y = DVector::zeros(n);
    let mut lam_max = 0.0;
    for _ in 0..iterations {
        matvec(a, &x, &mut y, Execution::Sequential);
        lam_max = x.dot(&y);
        let norm = y.norm();
        if norm == 0.0 {
            return Err(VemError::EmptySpectrum);
        }
        x = &y / norm;
    }
    let ldl = factor_ldl(a)?;
    let mut x = start.normalize();
    let mut mu = 0.0;
    for _ in 0..iterations {
        let z = DVector::from_vec(ldl.solve(x.as_slice()));
        mu = x.dot(&z);
        x = z.normalize();
    }
    if !(mu > 0.0) {
        return Err(VemError::Singular("inverse iteration found no positive eigenvalue".into()));
    }
    Ok((lam_max, 1.0 / mu))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_matrix_has_no_condition_number() {
        assert!(matches!(
            spectrum_stats(&DMatrix::zeros(1, 1), DEFAULT_ZERO_THRESHOLD),
            Err(VemError::EmptySpectrum)
        ));
    }

    #[test]
    fn diagonal_example() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 2.0, 8.0, 1e-12]));
        let s = spectrum_stats(&a, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(s.n_zero, 2);
        assert_eq!(s.lam_max, 8.0);
        assert_eq!(s.lam_min_nz, 2.0);
        assert_eq!(s.cond, 4.0);
    }

    #[test]
    fn known_kernel_ignores_the_threshold() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1e-20, 1e-12, 3.0]));
        let s = spectrum_stats_known_kernel(&a, 1, DEFAULT_ZERO_THRESHOLD).unwrap();
        assert_eq!(s.n_zero, 2);
        assert_eq!(s.lam_min_nz, 1e-12);
        assert_eq!(s.cond, 3e12);
    }

    #[test]
    fn sparse_estimates_match_dense_eigenvalues() {
        // 1D Laplacian: eigenvalues 2 − 2cos(jπ/(n+1)).
        let n = 40;
        let mut tri = sprs::TriMat::new((n, n));
        for i in 0..n {
            tri.add_triplet(i, i, 2.0);
            if i + 1 < n {
                tri.add_triplet(i, i + 1, -1.0);
                tri.add_triplet(i + 1, i, -1.0);
            }
        }
        let (hi, lo) = extreme_eigenvalues_spd(&tri.to_csr(), 3000).unwrap();
        let h = std::f64::consts::PI / (n + 1) as f64;
        assert!((lo - (2.0 - 2.0 * h.cos())).abs() < 1e-10);
        assert!((hi - (2.0 + 2.0 * h.cos())).abs() < 1e-6);
    }
}
