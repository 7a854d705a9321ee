//! Cluster-based means at cost `O(J J_c)`.
//!
//! Each particle holds soft assignments `p_ij` to `J_c` cluster centers. One
//! step discounts the non-dominant assignments by `(p_ij / max_j p_ij)^alpha`,
//! reweights by the kernel distance to the previous centers, renormalizes,
//! recomputes the centers as Gibbs-and-assignment-weighted averages, and emits
//! per-particle means `m_i = sum_j p_ij c_j`.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::kernel::LogKernel;
use crate::matrix::Matrix;
use crate::means::weighted_average;
use crate::rng::{RngStream, STREAM_CLUSTER_INIT};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterState {
    /// `J_c x d`
    pub centers: Matrix,
    /// `J x J_c`, row-stochastic
    pub probs: Matrix,
    /// Discounting exponent, `>= 0`, may be `+inf`.
    pub alpha: f64,
}

/// Counters for the zero-weight fallbacks taken during a step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepEvents {
    /// Particle rows that kept their previous probabilities.
    pub retained_rows: usize,
    /// Centers that kept their previous position.
    pub retained_centers: usize,
}

fn validate(j: usize, j_c: usize, alpha: f64) -> Result<()> {
    if j_c == 0 || j_c > j {
        return Err(Error::InvalidInput(format!("need 1 <= J_c <= J, got J_c = {j_c}, J = {j}")));
    }
    if !(alpha >= 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be >= 0, got {alpha}")));
    }
    Ok(())
}

impl ClusterState {
    /// Random i.i.d. `Unif(0,1)` assignments, row-normalized, with centers
    /// computed once from them. Draws come from the cluster-init stream of
    /// `master_seed`, leaving the particle streams untouched.
    pub fn init_random(ensemble: &Ensemble, neg_beta_v: &[f64], j_c: usize, alpha: f64, master_seed: u64) -> Result<Self> {
        validate(ensemble.len(), j_c, alpha)?;
        let mut rng = RngStream::new(master_seed, STREAM_CLUSTER_INIT);
        let mut probs = Matrix::zeros(ensemble.len(), j_c);
        for i in 0..ensemble.len() {
            let row = probs.row_mut(i);
            row.iter_mut().for_each(|p| *p = rng.uniform_open());
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= total);
        }
        Self::from_probs(ensemble, neg_beta_v, probs, alpha)
    }

    /// Uniform `1/J_c` assignments. Every center then equals the standard
    /// weighted mean, and the dynamics degenerate to standard CBO.
    pub fn init_uniform(ensemble: &Ensemble, neg_beta_v: &[f64], j_c: usize, alpha: f64) -> Result<Self> {
        validate(ensemble.len(), j_c, alpha)?;
        let probs = Matrix::from_vec(ensemble.len(), j_c, vec![1.0 / j_c as f64; ensemble.len() * j_c])?;
        Self::from_probs(ensemble, neg_beta_v, probs, alpha)
    }

    fn from_probs(ensemble: &Ensemble, neg_beta_v: &[f64], probs: Matrix, alpha: f64) -> Result<Self> {
        let j_c = probs.cols();
        let mut state = Self { centers: Matrix::zeros(j_c, ensemble.dim()), probs, alpha };
        // no previous centers exist yet; seed them with the standard mean so a
        // zero-weight column has something to retain
        let fallback = crate::means::standard_mean_from(ensemble, neg_beta_v);
        for c in 0..j_c {
            state.centers.row_mut(c).copy_from_slice(&fallback);
        }
        state.update_centers(ensemble, neg_beta_v);
        Ok(state)
    }

    pub fn num_clusters(&self) -> usize {
        self.centers.rows()
    }

    /// Per-particle means `m_i = sum_j p_ij c_j`.
    pub fn means(&self) -> Matrix {
        let (j, j_c, d) = (self.probs.rows(), self.probs.cols(), self.centers.cols());
        let mut out = Matrix::zeros(j, d);
        for i in 0..j {
            let p = self.probs.row(i);
            let row = out.row_mut(i);
            for c in 0..j_c {
                if p[c] == 0.0 {
                    continue;
                }
                for (o, &v) in row.iter_mut().zip(self.centers.row(c)) {
                    *o += p[c] * v;
                }
            }
        }
        out
    }

    /// Discounted, kernel-reweighted, renormalized assignments using the
    /// current centers. Returns the number of rows left unchanged because
    /// every candidate weight vanished.
    pub fn update_probs<K: LogKernel>(&mut self, ensemble: &Ensemble, kernel: &K) -> usize {
        let j_c = self.num_clusters();
        let mut retained = 0;
        let mut log_p = vec![0.0; j_c];
        for i in 0..ensemble.len() {
            let x = ensemble.particle(i);
            let row = self.probs.row(i);
            let p_max = row.iter().copied().fold(0.0f64, f64::max);
            assert!(p_max > 0.0, "assignment row {i} has no positive entry");
            let log_max = p_max.ln();
            for c in 0..j_c {
                let log_r = discount_log(row[c], p_max, log_max, self.alpha);
                log_p[c] = if log_r == f64::NEG_INFINITY {
                    f64::NEG_INFINITY
                } else {
                    log_r + kernel.log_eval_unchecked(x, self.centers.row(c))
                };
            }
            if crate::means::normalize_log_weights(&mut log_p) {
                self.probs.row_mut(i).copy_from_slice(&log_p);
            } else {
                retained += 1;
                debug!("particle {i}: no reachable cluster center, keeping previous assignments");
            }
        }
        retained
    }

    /// Recompute every center as the `p_ij exp(-beta V(x_i))` weighted average
    /// of the particles. Returns the number of centers whose total weight
    /// vanished and which therefore kept their position.
    pub fn update_centers(&mut self, ensemble: &Ensemble, neg_beta_v: &[f64]) -> usize {
        let positions = ensemble.positions();
        let mut log_w = vec![0.0; ensemble.len()];
        let mut retained = 0;
        let mut center = vec![0.0; ensemble.dim()];
        for c in 0..self.num_clusters() {
            for (i, lw) in log_w.iter_mut().enumerate() {
                *lw = self.probs.get(i, c).ln() + neg_beta_v[i];
            }
            if weighted_average(&log_w, positions, &mut center) {
                self.centers.row_mut(c).copy_from_slice(&center);
            } else {
                retained += 1;
                debug!("cluster center {c} lost all weight, keeping previous position");
            }
        }
        retained
    }

    /// One pass of the assignment and center updates followed by the
    /// per-particle means. `inner_iterations > 1` repeats the assignment and
    /// center updates before emitting means.
    pub fn step<K: LogKernel>(
        &mut self,
        ensemble: &Ensemble,
        kernel: &K,
        neg_beta_v: &[f64],
        inner_iterations: usize,
    ) -> (Matrix, StepEvents) {
        let mut events = StepEvents::default();
        for _ in 0..inner_iterations.max(1) {
            events.retained_rows += self.update_probs(ensemble, kernel);
            events.retained_centers += self.update_centers(ensemble, neg_beta_v);
        }
        (self.means(), events)
    }
}

/// `log((p / p_max)^alpha)` with `alpha = 0 -> 0` and `alpha = inf ->` argmax indicator.
fn discount_log(p: f64, p_max: f64, log_max: f64, alpha: f64) -> f64 {
    if alpha == 0.0 {
        0.0
    } else if alpha == f64::INFINITY {
        if p == p_max {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else if p == 0.0 {
        f64::NEG_INFINITY
    } else {
        alpha * (p.ln() - log_max)
    }
}

/// Functional form of [`ClusterState::step`] with one inner iteration.
pub fn cluster_step<K: LogKernel>(
    state: &ClusterState,
    ensemble: &Ensemble,
    kernel: &K,
    neg_beta_v: &[f64],
) -> (ClusterState, Matrix) {
    let mut next = state.clone();
    let (means, _) = next.step(ensemble, kernel, neg_beta_v, 1);
    (next, means)
}
