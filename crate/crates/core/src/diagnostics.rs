//! Numerical checks of the analytical behaviour of the dynamics: the
//! proximal map and Lyapunov functional, exponential-decay fitting, and the
//! Gaussian stationarity oracle.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::ensemble::Ensemble;
use crate::error::{check_dim, Error, Result};
use crate::kernel::{Kernel, LogKernel};
use crate::matrix::{dist_sq, Matrix};
use crate::means::{neg_beta_potential, normalize_log_weights, polarized_means, polarized_moments_at};
use crate::objectives::Objective;
pub use crate::prox::{proximal, residual};
use crate::rng::{RngStream, STREAM_MONTE_CARLO};

/// Solver tolerance used by the Lyapunov diagnostics.
pub const LYAPUNOV_TOLERANCE: f64 = 1e-10;

/// `L = (1 / 2J) sum_i |x_i - p(x_i)|^2`.
pub fn lyapunov(ensemble: &Ensemble, objective: &Objective, kappa: f64) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..ensemble.len() {
        let x = ensemble.particle(i);
        let p = proximal(objective, kappa, x, LYAPUNOV_TOLERANCE)?;
        total += dist_sq(x, &p);
    }
    Ok(total / (2.0 * ensemble.len() as f64))
}

/// Finite-temperature variant with polarized means in place of `p`.
pub fn lyapunov_beta(ensemble: &Ensemble, kernel: &Kernel, objective: &Objective, beta: f64) -> f64 {
    let means = polarized_means(ensemble, kernel, objective, beta);
    let total: f64 = (0..ensemble.len()).map(|i| dist_sq(ensemble.particle(i), means.row(i))).sum();
    total / (2.0 * ensemble.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    /// Slope of `log L` against time.
    pub rate: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Snapshots that entered the fit.
    pub points: usize,
}

impl DecayFit {
    pub fn decays(&self) -> bool {
        self.rate < 0.0
    }
}

/// Ordinary least squares of `log L(t)` over the trajectory snapshots.
///
/// Snapshots where `L` is zero are skipped; fewer than three usable points
/// is an [`Error::InsufficientData`].
pub fn lyapunov_decay_rate(trajectory: &Trajectory, objective: &Objective, kappa: f64) -> Result<DecayFit> {
    let mut pts = Vec::with_capacity(trajectory.snapshots.len());
    for s in &trajectory.snapshots {
        let l = lyapunov(&Ensemble::new(s.positions.clone())?, objective, kappa)?;
        if l > 0.0 && l.is_finite() {
            pts.push((s.time, l.ln()));
        }
    }
    fit_line(&pts)
}

pub(crate) fn fit_line(pts: &[(f64, f64)]) -> Result<DecayFit> {
    if pts.len() < 3 {
        return Err(Error::InsufficientData(pts.len()));
    }
    let n = pts.len() as f64;
    let tx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ty = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - tx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - tx) * (p.1 - ty)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - ty).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData(1));
    }
    let rate = sxy / sxx;
    let intercept = ty - rate * tx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - rate * p.0).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(DecayFit { rate, intercept, r_squared, points: pts.len() })
}

/// Gaussian target `N(m, Sigma_2)` probed with an anisotropic Gaussian kernel
/// `k(x, y) = exp(-(x - y)^T Sigma_1^{-1} (x - y) / 2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianTarget {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
    pub kernel_covariance: DMatrix<f64>,
}

fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if (m - m.transpose()).abs().max() > 1e-12 * m.abs().max().max(1.0) {
        return Err(Error::InvalidInput(format!("{what} is not symmetric")));
    }
    m.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::InvalidInput(format!("{what} is not positive definite")))
}

impl GaussianTarget {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>, kernel_covariance: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        check_dim(d, covariance.nrows())?;
        check_dim(d, covariance.ncols())?;
        check_dim(d, kernel_covariance.nrows())?;
        check_dim(d, kernel_covariance.ncols())?;
        spd_inverse(&covariance, "target covariance")?;
        spd_inverse(&kernel_covariance, "kernel covariance")?;
        Ok(Self { mean, covariance, kernel_covariance })
    }

    /// Isotropic kernel `Sigma_1 = kappa^2 I`.
    pub fn with_kappa(mean: DVector<f64>, covariance: DMatrix<f64>, kappa: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, covariance, DMatrix::identity(d, d) * (kappa * kappa))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `V(y) = (y - m)^T Sigma_2^{-1} (y - m) / 2`, so the target is `exp(-V)`.
    pub fn potential(&self) -> Result<Objective> {
        let prec = spd_inverse(&self.covariance, "target covariance")?;
        Objective::quadratic(self.mean.iter().copied().collect(), (&prec + prec.transpose()) * 0.5)
    }

    pub fn kernel(&self) -> Result<MahalanobisKernel> {
        Ok(MahalanobisKernel { precision: spd_inverse(&self.kernel_covariance, "kernel covariance")? })
    }

    /// `Sigma_3 = (Sigma_1^{-1} + (1 + beta) Sigma_2^{-1})^{-1}`.
    pub fn sigma3(&self, beta: f64) -> Result<DMatrix<f64>> {
        let a = spd_inverse(&self.kernel_covariance, "kernel covariance")?;
        let b = spd_inverse(&self.covariance, "target covariance")?;
        let s = a + b * (1.0 + beta);
        spd_inverse(&((&s + s.transpose()) * 0.5), "Sigma_3 system")
    }

    /// Draw `n` samples from `N(m, Sigma_2)`.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Result<Ensemble> {
        let d = self.dim();
        let l = self
            .covariance
            .clone()
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("target covariance is not positive definite".into()))?
            .l();
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let z = DVector::from_iterator(d, (0..d).map(|_| rng.standard_normal()));
            data.extend((&self.mean + &l * z).iter());
        }
        Ensemble::new(Matrix::from_vec(n, d, data)?)
    }
}

/// Closed-form stationary mean `m_x = Sigma_3 (Sigma_1^{-1} x + (1 + beta) Sigma_2^{-1} m)`.
pub fn stationary_mean_oracle(target: &GaussianTarget, beta: f64, x: &[f64]) -> Result<DVector<f64>> {
    check_dim(target.dim(), x.len())?;
    let s3 = target.sigma3(beta)?;
    let a = spd_inverse(&target.kernel_covariance, "kernel covariance")?;
    let b = spd_inverse(&target.covariance, "target covariance")?;
    Ok(s3 * (a * DVector::from_column_slice(x) + b * &target.mean * (1.0 + beta)))
}

/// Gaussian kernel with a general SPD precision matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MahalanobisKernel {
    pub precision: DMatrix<f64>,
}

impl LogKernel for MahalanobisKernel {
    fn log_eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = x.len();
        let mut q = 0.0;
        for r in 0..d {
            let dr = x[r] - y[r];
            for c in 0..d {
                q += dr * self.precision[(r, c)] * (x[c] - y[c]);
            }
        }
        -0.5 * q
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryReport {
    pub query: Vec<f64>,
    pub oracle_mean: Vec<f64>,
    pub empirical_mean: Vec<f64>,
    /// Per-coordinate standard error of the self-normalized weighted mean.
    pub standard_error: Vec<f64>,
    /// Largest `|empirical - oracle| / standard_error` over coordinates.
    pub max_z: f64,
    pub mean_error: f64,
    /// `|C - Sigma_3|_F / |Sigma_3|_F`.
    pub covariance_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationarityReport {
    pub beta: f64,
    pub n_samples: usize,
    pub queries: Vec<QueryReport>,
}

impl StationarityReport {
    pub fn passes(&self, max_z: f64, max_cov_rel: f64) -> bool {
        self.queries.iter().all(|q| q.max_z <= max_z && q.covariance_rel_error <= max_cov_rel)
    }
}

/// Sample the target, evaluate polarized moments at each query with the
/// target's kernel and compare with the closed-form stationary moments.
pub fn stationarity_check(
    target: &GaussianTarget,
    beta: f64,
    n_samples: usize,
    queries: &Matrix,
    master_seed: u64,
) -> Result<StationarityReport> {
    if n_samples < 1000 {
        return Err(Error::InvalidInput(format!("need at least 1000 samples, got {n_samples}")));
    }
    check_dim(target.dim(), queries.cols())?;
    let mut rng = RngStream::new(master_seed, STREAM_MONTE_CARLO);
    let samples = target.sample(n_samples, &mut rng)?;
    let objective = target.potential()?;
    let kernel = target.kernel()?;
    let nbv = neg_beta_potential(&samples, &objective, beta);
    let (means, covs) = polarized_moments_at(&samples, &kernel, &nbv, queries, true)?;
    let s3 = target.sigma3(beta)?;
    let s3_norm = s3.norm();
    let d = target.dim();
    let reports = (0..queries.rows())
        .into_par_iter()
        .map(|q| {
            let x = queries.row(q);
            let oracle = stationary_mean_oracle(target, beta, x)?;
            let emp = means.row(q);
            let mut w: Vec<f64> = (0..samples.len())
                .map(|j| kernel.log_eval_unchecked(x, samples.particle(j)) + nbv[j])
                .collect();
            normalize_log_weights(&mut w);
            let mut se = vec![0.0; d];
            for (j, wj) in w.iter().enumerate() {
                let y = samples.particle(j);
                for n in 0..d {
                    se[n] += wj * wj * (y[n] - emp[n]).powi(2);
                }
            }
            se.iter_mut().for_each(|s| *s = s.sqrt());
            let max_z = (0..d).map(|n| (emp[n] - oracle[n]).abs() / se[n]).fold(0.0, f64::max);
            let mean_error = (0..d).map(|n| (emp[n] - oracle[n]).powi(2)).sum::<f64>().sqrt();
            Ok(QueryReport {
                query: x.to_vec(),
                oracle_mean: oracle.iter().copied().collect(),
                empirical_mean: emp.to_vec(),
                standard_error: se,
                max_z,
                mean_error,
                covariance_rel_error: (&covs[q] - &s3).norm() / s3_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StationarityReport { beta, n_samples, queries: reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{run, Method, StepperConfig};
    use crate::ensemble::{BetaSchedule, NoiseModel};
    use crate::means::standard_mean;

    fn unit_target(d: usize, kappa: f64) -> GaussianTarget {
        GaussianTarget::with_kappa(DVector::zeros(d), DMatrix::identity(d, d), kappa).unwrap()
    }

    #[test]
    fn lyapunov_zero_at_minimizer() {
        let o = Objective::quadratic(vec![1.0, -2.0], DMatrix::identity(2, 2)).unwrap();
        let e = Ensemble::from_rows(&vec![vec![1.0, -2.0]; 5]).unwrap();
        assert!(lyapunov(&e, &o, 1.0).unwrap() <= 1e-20);
    }

    #[test]
    fn lyapunov_single_particle_closed_form() {
        let o = Objective::quadratic(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        for (kappa, x) in [(1.0, 2.0), (0.5, -3.0), (2.0, 0.7)] {
            let e = Ensemble::from_rows(&[vec![x]]).unwrap();
            let k2: f64 = kappa * kappa;
            let expected = 0.5 * (k2 / (1.0 + k2)).powi(2) * x * x;
            assert!((lyapunov(&e, &o, kappa).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn lyapunov_permutation_invariant() {
        let o = Objective::quadratic(vec![0.3, 0.1], DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0])).unwrap();
        let e = Ensemble::uniform_box(9, 2, -3.0, 3.0, 1).unwrap();
        let mut rows = e.positions().to_rows();
        rows.reverse();
        rows.swap(0, 4);
        let p = Ensemble::from_rows(&rows).unwrap();
        assert!((lyapunov(&e, &o, 0.7).unwrap() - lyapunov(&p, &o, 0.7).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn lyapunov_zero_characterization() {
        let o = Objective::quadratic(vec![0.5], DMatrix::identity(1, 1)).unwrap();
        let at = Ensemble::from_rows(&[vec![0.5], vec![0.5 + 1e-12]]).unwrap();
        assert!(lyapunov(&at, &o, 1.0).unwrap() <= 1e-10);
        let off = Ensemble::from_rows(&[vec![0.5], vec![0.5 + 1e-3]]).unwrap();
        assert!(lyapunov(&off, &o, 1.0).unwrap() > 1e-10 * 1e-3);
        let far = Ensemble::from_rows(&[vec![0.5], vec![0.6]]).unwrap();
        assert!(lyapunov(&far, &o, 1.0).unwrap() > 1e-10);
    }

    #[test]
    fn lyapunov_beta_tracks_proximal_form_at_large_beta() {
        let o = Objective::quadratic(vec![0.0], DMatrix::identity(1, 1)).unwrap();
        let e = Ensemble::uniform_box(400, 1, -2.0, 2.0, 3).unwrap();
        let l = lyapunov(&e, &o, 0.5).unwrap();
        // the limit holds for a kernel whose exponent also scales with beta
        let beta: f64 = 100.0;
        let lb = lyapunov_beta(&e, &Kernel::gaussian(0.5 / beta.sqrt()), &o, beta);
        assert!((l - lb).abs() < 0.1 * l, "{l} {lb}");
    }

    #[test]
    fn fit_recovers_known_rate() {
        let pts: Vec<(f64, f64)> = (0..50).map(|k| (k as f64 * 0.1, 2.0 - 0.7 * k as f64 * 0.1)).collect();
        let f = fit_line(&pts).unwrap();
        assert!((f.rate + 0.7).abs() < 1e-12 && (f.intercept - 2.0).abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_trajectory_at_minimizer_is_an_error() {
        let o = Objective::quadratic(vec![0.0, 0.0], DMatrix::identity(2, 2)).unwrap();
        let e = Ensemble::from_rows(&vec![vec![0.0, 0.0]; 4]).unwrap();
        let c = StepperConfig::new(Method::StandardCbo, Kernel::Constant, NoiseModel::isotropic(0.0), BetaSchedule::constant(1.0));
        let t = run(&c, e, &o, 20, 0).unwrap();
        assert!(matches!(lyapunov_decay_rate(&t, &o, 1.0), Err(Error::InsufficientData(0))));
    }

    #[test]
    fn proximal_flow_decays_exponentially() {
        let o = Objective::quadratic(vec![0.5, -0.5], DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.8])).unwrap();
        let e = Ensemble::uniform_box(30, 2, -3.0, 3.0, 2).unwrap();
        let mut c = StepperConfig::new(Method::Proximal { tol: 1e-10 }, Kernel::gaussian(1.0), NoiseModel::isotropic(0.0), BetaSchedule::constant(1.0));
        c.snapshot_stride = 50;
        let t = run(&c, e, &o, 1000, 0).unwrap();
        let f = lyapunov_decay_rate(&t, &o, 1.0).unwrap();
        assert!(f.rate < 0.0 && f.r_squared >= 0.95, "{f:?}");
    }

    #[test]
    fn oracle_identity_case() {
        let t = unit_target(3, 1.0);
        let s3 = t.sigma3(1.0).unwrap();
        assert!((s3 - DMatrix::identity(3, 3) / 3.0).abs().max() < 1e-15);
        let m = stationary_mean_oracle(&t, 1.0, &[0.9, -3.0, 1.5]).unwrap();
        for (a, b) in m.iter().zip([0.3, -1.0, 0.5]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn oracle_fixed_point_and_beta_limit() {
        let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let t = GaussianTarget::with_kappa(DVector::from_vec(vec![1.0, -1.0]), cov, 0.7).unwrap();
        let m = stationary_mean_oracle(&t, 3.0, &[1.0, -1.0]).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-14 && (m[1] + 1.0).abs() < 1e-14);
        let far = stationary_mean_oracle(&t, 1e12, &[10.0, 10.0]).unwrap();
        assert!((far[0] - 1.0).abs() < 1e-9 && (far[1] + 1.0).abs() < 1e-9);
    }

    #[test]
    fn invalid_target_rejected() {
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(GaussianTarget::with_kappa(DVector::zeros(2), bad, 1.0).is_err());
        assert!(GaussianTarget::with_kappa(DVector::zeros(2), DMatrix::identity(2, 2), 0.0).is_err());
    }

    #[test]
    fn stationarity_one_dimensional() {
        let t = unit_target(1, 1.0);
        let q = Matrix::from_rows(&[vec![1.0], vec![0.0]]).unwrap();
        let r = stationarity_check(&t, 1.0, 100_000, &q, 11).unwrap();
        assert!(r.passes(5.0, 0.05), "{r:?}");
        assert!((r.queries[0].empirical_mean[0] - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn stationarity_error_shrinks_like_inverse_sqrt_n() {
        let t = unit_target(1, 1.0);
        let q = Matrix::from_rows(&[vec![1.0]]).unwrap();
        let avg = |n: usize| -> f64 {
            (0..16).map(|s| stationarity_check(&t, 1.0, n, &q, 100 + s).unwrap().queries[0].mean_error).sum::<f64>() / 16.0
        };
        let ratio = avg(1_000) / avg(100_000);
        assert!(ratio > 4.0 && ratio < 25.0, "ratio {ratio}");
    }

    #[test]
    fn wide_kernel_oracle_matches_gibbs_mean() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.4, 0.4, 2.0]);
        let mean = DVector::from_vec(vec![0.5, -1.0]);
        let t = GaussianTarget::new(mean.clone(), cov, DMatrix::identity(2, 2) * 1e8).unwrap();
        let oracle = stationary_mean_oracle(&t, 2.0, &[3.0, 3.0]).unwrap();
        assert!((&oracle - &mean).norm() < 1e-6);
        let mut rng = RngStream::new(5, STREAM_MONTE_CARLO);
        let samples = t.sample(200_000, &mut rng).unwrap();
        let m = standard_mean(&samples, &t.potential().unwrap(), 2.0);
        assert!((m[0] - 0.5).abs() < 0.02 && (m[1] + 1.0).abs() < 0.02, "{m:?}");
    }

    #[test]
    fn mahalanobis_reduces_to_isotropic_gaussian() {
        let k = unit_target(2, 0.5).kernel().unwrap();
        let g = Kernel::gaussian(0.5);
        let (x, y) = ([0.3, -0.2], [1.0, 0.4]);
        assert!((k.log_eval_unchecked(&x, &y) - g.log_eval(&x, &y).unwrap()).abs() < 1e-14);
    }
}
