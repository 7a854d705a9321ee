//! Kernel-localized Gibbs-weighted means and covariances.
//!
//! All weights live in the log domain: the weight of particle `j` as seen
//! from `x` is `log k(x, x_j) - beta V(x_j)`. Each weighted average is shifted
//! by its maximum log weight before exponentiating, so very large `beta`
//! stays finite.
//!
//! Evaluation is `O(J^2 d)` and streams one row at a time, holding `O(J)`
//! scratch per worker.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::ensemble::Ensemble;
use crate::error::{check_dim, Error, Result};
use crate::kernel::LogKernel;
use crate::matrix::Matrix;
use crate::objectives::Objective;

/// `-beta V(x_j)` for every particle.
pub fn neg_beta_potential(ensemble: &Ensemble, objective: &Objective, beta: f64) -> Vec<f64> {
    (0..ensemble.len()).map(|j| -beta * objective.eval(ensemble.particle(j))).collect()
}

/// Normalize log weights in place to linear weights summing to one.
/// Returns `false` (leaving `log_w` untouched) when every weight is zero.
pub fn normalize_log_weights(log_w: &mut [f64]) -> bool {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return false;
    }
    let mut total = 0.0;
    for w in log_w.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in log_w.iter_mut() {
        *w /= total;
    }
    true
}

/// Weighted average of `points` rows under unnormalized log weights, written
/// into `out`. Returns `false` if all weights vanish.
pub fn weighted_average(log_w: &[f64], points: &Matrix, out: &mut [f64]) -> bool {
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return false;
    }
    out.iter_mut().for_each(|v| *v = 0.0);
    let mut total = 0.0;
    for (j, &lw) in log_w.iter().enumerate() {
        let w = (lw - max).exp();
        if w == 0.0 {
            continue;
        }
        total += w;
        for (o, &p) in out.iter_mut().zip(points.row(j)) {
            *o += w * p;
        }
    }
    for o in out.iter_mut() {
        *o /= total;
    }
    true
}

/// Weighted covariance about `center` with normalized weights `w`.
fn weighted_covariance(w: &[f64], points: &Matrix, center: &[f64]) -> DMatrix<f64> {
    let d = center.len();
    let mut cov = DMatrix::zeros(d, d);
    let mut diff = vec![0.0; d];
    for (j, &wj) in w.iter().enumerate() {
        if wj == 0.0 {
            continue;
        }
        for (n, (p, c)) in points.row(j).iter().zip(center).enumerate() {
            diff[n] = p - c;
        }
        for r in 0..d {
            let a = wj * diff[r];
            for c in r..d {
                cov[(r, c)] += a * diff[c];
            }
        }
    }
    for r in 0..d {
        for c in 0..r {
            cov[(r, c)] = cov[(c, r)];
        }
    }
    cov
}

fn fill_row_log_weights<K: LogKernel>(kernel: &K, x: &[f64], positions: &Matrix, nbv: &[f64], buf: &mut [f64]) {
    for (j, b) in buf.iter_mut().enumerate() {
        *b = kernel.log_eval_unchecked(x, positions.row(j)) + nbv[j];
    }
}

/// Gibbs-weighted mean over all particles (single consensus point).
pub fn standard_mean_from(ensemble: &Ensemble, neg_beta_v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; ensemble.dim()];
    if !weighted_average(neg_beta_v, ensemble.positions(), &mut out) {
        // only reachable for V = +inf everywhere
        out.copy_from_slice(&plain_average(ensemble));
    }
    out
}

pub fn standard_mean(ensemble: &Ensemble, objective: &Objective, beta: f64) -> Vec<f64> {
    standard_mean_from(ensemble, &neg_beta_potential(ensemble, objective, beta))
}

/// Plain unweighted average of particle positions.
pub fn plain_average(ensemble: &Ensemble) -> Vec<f64> {
    let mut out = vec![0.0; ensemble.dim()];
    for i in 0..ensemble.len() {
        for (o, p) in out.iter_mut().zip(ensemble.particle(i)) {
            *o += p;
        }
    }
    out.iter_mut().for_each(|v| *v /= ensemble.len() as f64);
    out
}

/// Weighted mean and covariance over all particles.
pub fn standard_moments_from(ensemble: &Ensemble, neg_beta_v: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let mean = standard_mean_from(ensemble, neg_beta_v);
    let mut w = neg_beta_v.to_vec();
    if !normalize_log_weights(&mut w) {
        w = vec![1.0 / ensemble.len() as f64; ensemble.len()];
    }
    let cov = weighted_covariance(&w, ensemble.positions(), &mean);
    (mean, cov)
}

pub fn standard_covariance(ensemble: &Ensemble, objective: &Objective, beta: f64) -> DMatrix<f64> {
    standard_moments_from(ensemble, &neg_beta_potential(ensemble, objective, beta)).1
}

/// Per-particle polarized means. A row with no positive weight falls back to
/// the particle itself.
pub fn polarized_means_from<K: LogKernel>(ensemble: &Ensemble, kernel: &K, neg_beta_v: &[f64]) -> Matrix {
    let j = ensemble.len();
    let d = ensemble.dim();
    let positions = ensemble.positions();
    let mut out = Matrix::zeros(j, d);
    out.as_mut_slice()
        .par_chunks_mut(d)
        .enumerate()
        .for_each_init(
            || vec![0.0; j],
            |buf, (i, row)| {
                let x = positions.row(i);
                fill_row_log_weights(kernel, x, positions, neg_beta_v, buf);
                if !weighted_average(buf, positions, row) {
                    row.copy_from_slice(x);
                }
            },
        );
    out
}

pub fn polarized_means<K: LogKernel>(ensemble: &Ensemble, kernel: &K, objective: &Objective, beta: f64) -> Matrix {
    polarized_means_from(ensemble, kernel, &neg_beta_potential(ensemble, objective, beta))
}

/// Polarized means evaluated at arbitrary query points.
///
/// A query with no particle inside a compactly supported kernel yields
/// [`Error::EmptyNeighborhood`].
pub fn polarized_means_at<K: LogKernel>(
    ensemble: &Ensemble,
    kernel: &K,
    objective: &Objective,
    beta: f64,
    queries: &Matrix,
) -> Result<Matrix> {
    Ok(polarized_moments_at(ensemble, kernel, &neg_beta_potential(ensemble, objective, beta), queries, false)?.0)
}

/// Means and (optionally) covariances at query points, sharing one weight pass.
pub fn polarized_moments_at<K: LogKernel>(
    ensemble: &Ensemble,
    kernel: &K,
    neg_beta_v: &[f64],
    queries: &Matrix,
    with_covariance: bool,
) -> Result<(Matrix, Vec<DMatrix<f64>>)> {
    check_dim(ensemble.dim(), queries.cols())?;
    let positions = ensemble.positions();
    let d = ensemble.dim();
    let results: Vec<Option<(Vec<f64>, Option<DMatrix<f64>>)>> = (0..queries.rows())
        .into_par_iter()
        .map(|q| {
            let x = queries.row(q);
            let mut buf = vec![0.0; ensemble.len()];
            fill_row_log_weights(kernel, x, positions, neg_beta_v, &mut buf);
            let mut mean = vec![0.0; d];
            if !weighted_average(&buf, positions, &mut mean) {
                return None;
            }
            let cov = with_covariance.then(|| {
                normalize_log_weights(&mut buf);
                weighted_covariance(&buf, positions, &mean)
            });
            Some((mean, cov))
        })
        .collect();
    let mut means = Matrix::zeros(queries.rows(), d);
    let mut covs = Vec::new();
    for (q, r) in results.into_iter().enumerate() {
        let (m, c) = r.ok_or(Error::EmptyNeighborhood(q))?;
        means.row_mut(q).copy_from_slice(&m);
        if let Some(c) = c {
            covs.push(c);
        }
    }
    Ok((means, covs))
}

/// Per-particle polarized means and covariances `C_i = sum_j w_ij (x_j - m_i)(x_j - m_i)^T`.
pub fn polarized_moments_from<K: LogKernel>(
    ensemble: &Ensemble,
    kernel: &K,
    neg_beta_v: &[f64],
) -> (Matrix, Vec<DMatrix<f64>>) {
    let j = ensemble.len();
    let d = ensemble.dim();
    let positions = ensemble.positions();
    let rows: Vec<(Vec<f64>, DMatrix<f64>)> = (0..j)
        .into_par_iter()
        .map_init(
            || vec![0.0; j],
            |buf, i| {
                let x = positions.row(i);
                fill_row_log_weights(kernel, x, positions, neg_beta_v, buf);
                let mut mean = vec![0.0; d];
                if !weighted_average(buf, positions, &mut mean) {
                    return (x.to_vec(), DMatrix::zeros(d, d));
                }
                normalize_log_weights(buf);
                let cov = weighted_covariance(buf, positions, &mean);
                (mean, cov)
            },
        )
        .collect();
    let mut means = Matrix::zeros(j, d);
    let mut covs = Vec::with_capacity(j);
    for (i, (m, c)) in rows.into_iter().enumerate() {
        means.row_mut(i).copy_from_slice(&m);
        covs.push(c);
    }
    (means, covs)
}

pub fn polarized_covariances<K: LogKernel>(
    ensemble: &Ensemble,
    kernel: &K,
    objective: &Objective,
    beta: f64,
) -> Vec<DMatrix<f64>> {
    polarized_moments_from(ensemble, kernel, &neg_beta_potential(ensemble, objective, beta)).1
}

/// Materialized `J x J` log-weight matrix, entry `(i, j) = log k(x_i, x_j) - beta V(x_j)`.
#[derive(Debug, Clone)]
pub struct WeightMatrix {
    log_weights: Matrix,
}

impl WeightMatrix {
    pub fn build<K: LogKernel>(ensemble: &Ensemble, kernel: &K, objective: &Objective, beta: f64) -> Self {
        let nbv = neg_beta_potential(ensemble, objective, beta);
        let j = ensemble.len();
        let mut log_weights = Matrix::zeros(j, j);
        for i in 0..j {
            fill_row_log_weights(kernel, ensemble.particle(i), ensemble.positions(), &nbv, log_weights.row_mut(i));
        }
        Self { log_weights }
    }

    pub fn log_weights(&self) -> &Matrix {
        &self.log_weights
    }

    /// Row-normalized linear weights; an all-zero row stays zero.
    pub fn normalized(&self) -> Matrix {
        let mut out = self.log_weights.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            if !normalize_log_weights(row) {
                row.iter_mut().for_each(|v| *v = 0.0);
            }
        }
        out
    }
}
