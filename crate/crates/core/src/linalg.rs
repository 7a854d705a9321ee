//! Symmetric PSD square roots via eigendecomposition.

use log::warn;
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Eigenvalues below `-PSD_TOLERANCE * max(1, largest |eigenvalue|)` mean
/// the matrix was not a covariance.
pub const PSD_TOLERANCE: f64 = 1e-8;

/// Symmetric square root, clamping negative eigenvalues to zero.
pub fn psd_sqrt(c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = c.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let min = eig.eigenvalues.min();
    if min < -PSD_TOLERANCE * scale {
        return Err(Error::NotPositiveSemidefinite(min));
    }
    let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let q = &eig.eigenvectors;
    Ok(q * DMatrix::from_diagonal(&roots) * q.transpose())
}

/// Clamp negative eigenvalues to zero, warning when the clamp is larger than roundoff.
pub fn clamp_psd(c: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = c.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min >= 0.0 {
        return c.clone();
    }
    if min < -PSD_TOLERANCE {
        warn!("clamping covariance eigenvalue {min:e}");
    }
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    let q = &eig.eigenvectors;
    q * DMatrix::from_diagonal(&clamped) * q.transpose()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let c = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let s = psd_sqrt(&c).unwrap();
        assert!((&s * &s - &c).abs().max() < 1e-12);
        assert!((&s - s.transpose()).abs().max() < 1e-12);
    }

    #[test]
    fn identity_and_zero() {
        assert!((psd_sqrt(&DMatrix::identity(2, 2)).unwrap() - DMatrix::identity(2, 2)).abs().max() < 1e-15);
        assert_eq!(psd_sqrt(&DMatrix::zeros(2, 2)).unwrap(), DMatrix::zeros(2, 2));
    }

    #[test]
    fn rank_deficient_is_fine() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let s = psd_sqrt(&c).unwrap();
        assert!((&s * &s - &c).abs().max() < 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.1]);
        assert!(psd_sqrt(&c).is_err());
        let fixed = clamp_psd(&c);
        assert!(fixed.clone().symmetric_eigen().eigenvalues.min() >= -1e-15);
    }
}
