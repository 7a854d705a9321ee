//! Localizing kernels, evaluated in the log domain.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Result};
use crate::matrix::dist_sq;

/// A kernel `k(x, y)` with `k(x, x) = 1`, returned as `log k`.
///
/// Implement this for a custom localization; the means and cluster code are
/// generic over it.
pub trait LogKernel: Sync {
    /// `log k(x, y)` without a dimension check. Both slices have equal length.
    fn log_eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case")]
pub enum Kernel {
    /// `exp(-|x-y|^2 / (2 kappa^2))`
    Gaussian { kappa: f64 },
    /// `exp(-|x-y| / kappa)`
    Laplace { kappa: f64 },
    /// `1_{|x-y| <= kappa}`
    BoundedConfidence { kappa: f64 },
    Constant,
}

impl Kernel {
    /// Gaussian kernel; `kappa = +inf` yields [`Kernel::Constant`].
    pub fn gaussian(kappa: f64) -> Self {
        if kappa == f64::INFINITY {
            Kernel::Constant
        } else {
            Kernel::Gaussian { kappa }
        }
    }

    /// Laplace kernel; `kappa = +inf` yields [`Kernel::Constant`].
    pub fn laplace(kappa: f64) -> Self {
        if kappa == f64::INFINITY {
            Kernel::Constant
        } else {
            Kernel::Laplace { kappa }
        }
    }

    pub fn bounded_confidence(kappa: f64) -> Self {
        if kappa == f64::INFINITY {
            Kernel::Constant
        } else {
            Kernel::BoundedConfidence { kappa }
        }
    }

    pub fn kappa(&self) -> f64 {
        match *self {
            Kernel::Gaussian { kappa } | Kernel::Laplace { kappa } | Kernel::BoundedConfidence { kappa } => kappa,
            Kernel::Constant => f64::INFINITY,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::Laplace { .. } => "laplace",
            Kernel::BoundedConfidence { .. } => "bounded-confidence",
            Kernel::Constant => "constant",
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Kernel::Constant)
    }

    /// True when the kernel can vanish, so weighted averages may be empty.
    pub fn has_compact_support(&self) -> bool {
        matches!(self, Kernel::BoundedConfidence { .. })
    }

    pub fn log_eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        check_dim(x.len(), y.len())?;
        Ok(self.log_eval_unchecked(x, y))
    }
}

impl LogKernel for Kernel {
    #[inline]
    fn log_eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Kernel::Gaussian { kappa } => -dist_sq(x, y) / (2.0 * kappa * kappa),
            Kernel::Laplace { kappa } => -dist_sq(x, y).sqrt() / kappa,
            Kernel::BoundedConfidence { kappa } => {
                if dist_sq(x, y).sqrt() <= kappa {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
            Kernel::Constant => 0.0,
        }
    }
}

impl<K: LogKernel + ?Sized> LogKernel for &K {
    #[inline]
    fn log_eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        (**self).log_eval_unchecked(x, y)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Constant => write!(f, "constant"),
            k => write!(f, "{}(kappa={})", k.name(), k.kappa()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all_kernels() -> Vec<Kernel> {
        vec![
            Kernel::gaussian(0.7),
            Kernel::laplace(0.3),
            Kernel::bounded_confidence(1.5),
            Kernel::Constant,
        ]
    }

    #[test]
    fn gaussian_self_is_zero() {
        assert_eq!(Kernel::gaussian(1.0).log_eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_unit_distance() {
        assert_eq!(Kernel::gaussian(1.0).log_eval(&[0.0], &[1.0]).unwrap(), -0.5);
    }

    #[test]
    fn bounded_confidence_boundary_is_inclusive() {
        let k = Kernel::bounded_confidence(2.0);
        assert_eq!(k.log_eval(&[0.0, 0.0], &[2.0, 0.0]).unwrap(), 0.0);
        assert_eq!(k.log_eval(&[0.0, 0.0], &[2.0, 1e-6]).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn laplace_formula() {
        let k = Kernel::laplace(0.5);
        assert!((k.log_eval(&[0.0, 0.0], &[3.0, 4.0]).unwrap() + 10.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        assert!(Kernel::Constant.log_eval(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn infinite_kappa_maps_to_constant() {
        assert_eq!(Kernel::gaussian(f64::INFINITY), Kernel::Constant);
        assert_eq!(Kernel::laplace(f64::INFINITY), Kernel::Constant);
        assert_eq!(Kernel::Constant.kappa(), f64::INFINITY);
    }

    #[test]
    fn huge_kappa_degenerates_to_constant() {
        let pts = [[-5.0, 3.0], [4.0, 4.5], [0.0, 0.0], [2.5, -1.0]];
        for k in [Kernel::gaussian(1e12), Kernel::laplace(1e12)] {
            for x in &pts {
                for y in &pts {
                    let v = k.log_eval(x, y).unwrap();
                    assert!(v.abs() <= 1e-11, "{k}: {v}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn symmetric_and_normalized(
            x in prop::collection::vec(-10.0f64..10.0, 3),
            y in prop::collection::vec(-10.0f64..10.0, 3),
        ) {
            for k in all_kernels() {
                let a = k.log_eval(&x, &y).unwrap();
                let b = k.log_eval(&y, &x).unwrap();
                prop_assert!(a == b || (a.is_infinite() && b.is_infinite()));
                prop_assert_eq!(k.log_eval(&x, &x).unwrap(), 0.0);
                prop_assert!(a <= 0.0);
            }
        }
    }
}
