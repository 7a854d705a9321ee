//! Particle ensembles, noise models and inverse-temperature schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{RngStream, STREAM_INIT_POSITIONS};

/// `J` particles in `d` dimensions, all coordinates finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    positions: Matrix,
}

impl Ensemble {
    pub fn new(positions: Matrix) -> Result<Self> {
        if positions.rows() == 0 || positions.cols() == 0 {
            return Err(Error::InvalidInput("ensemble needs J >= 1 and d >= 1".into()));
        }
        if !positions.is_finite() {
            return Err(Error::NonFinite("ensemble positions".into()));
        }
        Ok(Self { positions })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Uniform draw from the axis-aligned box `[low, high]^d` on the reserved
    /// initialization stream of `master_seed`.
    pub fn uniform_box(j: usize, d: usize, low: f64, high: f64, master_seed: u64) -> Result<Self> {
        if !(low < high) || !low.is_finite() || !high.is_finite() {
            return Err(Error::InvalidInput(format!("invalid init box [{low}, {high}]")));
        }
        let mut rng = RngStream::new(master_seed, STREAM_INIT_POSITIONS);
        let data = (0..j * d).map(|_| rng.uniform_range(low, high)).collect();
        Self::new(Matrix::from_vec(j, d, data)?)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.rows()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.positions.cols()
    }

    #[inline]
    pub fn particle(&self, i: usize) -> &[f64] {
        self.positions.row(i)
    }

    pub fn positions(&self) -> &Matrix {
        &self.positions
    }

    pub fn into_positions(self) -> Matrix {
        self.positions
    }

    /// Largest pairwise Euclidean distance.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                best = best.max(crate::matrix::dist_sq(self.particle(i), self.particle(j)));
            }
        }
        best.sqrt()
    }
}

/// Diffusion model of the particle update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// `|x - m| xi`, one Euclidean norm scaling the whole increment.
    #[default]
    Isotropic,
    /// `(x - m)_n xi_n` per coordinate.
    Coordinatewise,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(kind: NoiseKind, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self { kind, sigma })
    }

    pub fn isotropic(sigma: f64) -> Self {
        Self { kind: NoiseKind::Isotropic, sigma }
    }

    pub fn coordinatewise(sigma: f64) -> Self {
        Self { kind: NoiseKind::Coordinatewise, sigma }
    }
}

/// Multiplicative inverse-temperature schedule
/// `beta(t+1) = min(factor * beta(t), beta_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub beta0: f64,
    pub factor: f64,
    pub beta_max: f64,
}

impl BetaSchedule {
    pub fn new(beta0: f64, factor: f64, beta_max: f64) -> Result<Self> {
        if !(beta0 > 0.0) || !beta0.is_finite() {
            return Err(Error::InvalidInput(format!("beta0 must be positive, got {beta0}")));
        }
        if !(factor >= 1.0) || !factor.is_finite() {
            return Err(Error::InvalidInput(format!("beta factor must be >= 1, got {factor}")));
        }
        if !(beta_max > 0.0) {
            return Err(Error::InvalidInput(format!("beta_max must be positive, got {beta_max}")));
        }
        Ok(Self { beta0, factor, beta_max })
    }

    /// Fixed inverse temperature.
    pub fn constant(beta: f64) -> Self {
        Self { beta0: beta, factor: 1.0, beta_max: beta }
    }

    pub fn initial(&self) -> f64 {
        self.beta0.min(self.beta_max)
    }

    pub fn advance(&self, beta: f64) -> f64 {
        (self.factor * beta).min(self.beta_max)
    }

    /// The first `n` values of the schedule.
    pub fn values(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let mut b = self.initial();
        for _ in 0..n {
            out.push(b);
            b = self.advance(b);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_nonfinite() {
        assert!(Ensemble::new(Matrix::zeros(0, 2)).is_err());
        assert!(Ensemble::from_rows(&[[f64::NAN, 0.0]]).is_err());
    }

    #[test]
    fn uniform_box_is_reproducible_and_bounded() {
        let a = Ensemble::uniform_box(50, 3, -3.0, 3.0, 9).unwrap();
        let b = Ensemble::uniform_box(50, 3, -3.0, 3.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.positions().as_slice().iter().all(|v| (-3.0..=3.0).contains(v)));
    }

    #[test]
    fn schedule_is_capped_and_nondecreasing() {
        let s = BetaSchedule::new(30.0, 1.01, 1e7).unwrap();
        let v = s.values(2000);
        assert_eq!(v[0], 30.0);
        assert!(v.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(*v.last().unwrap(), 1e7);
        for (t, b) in v.iter().enumerate().take(500) {
            let closed = (30.0 * 1.01f64.powi(t as i32)).min(1e7);
            assert!((b - closed).abs() <= 1e-12 * closed);
        }
    }

    #[test]
    fn schedule_validation() {
        assert!(BetaSchedule::new(0.0, 1.0, 1.0).is_err());
        assert!(BetaSchedule::new(1.0, 0.5, 1.0).is_err());
        assert!(NoiseModel::new(NoiseKind::Isotropic, -1.0).is_err());
    }
}
