use crate::error::{check_dim, Error, Result};
use crate::matrix::Matrix;

/// Default detection radius in the infinity norm.
pub const DEFAULT_THRESHOLD: f64 = 0.25;

/// Indices of the minimizers that have some row of `final_means` within
/// `threshold` in the infinity norm (boundary included).
pub fn detect_minima(final_means: &Matrix, minimizers: &[Vec<f64>], threshold: f64) -> Result<Vec<usize>> {
    if minimizers.is_empty() {
        return Err(Error::InvalidInput("detection needs at least one minimizer".into()));
    }
    let mut found = Vec::new();
    for (k, z) in minimizers.iter().enumerate() {
        check_dim(final_means.cols(), z.len())?;
        let hit = final_means
            .row_iter()
            .any(|m| m.iter().zip(z).all(|(a, b)| (a - b).abs() <= threshold));
        if hit {
            found.push(k);
        }
    }
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn means(rows: &[[f64; 2]]) -> Matrix {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn threshold_examples() {
        let z = vec![vec![3.0, 2.0]];
        assert_eq!(detect_minima(&means(&[[3.2, 2.1]]), &z, 0.25).unwrap(), vec![0]);
        assert_eq!(detect_minima(&means(&[[3.0, 2.0]]), &z, 0.25).unwrap(), vec![0]);
        assert!(detect_minima(&means(&[[3.3, 2.0]]), &z, 0.25).unwrap().is_empty());
        assert_eq!(detect_minima(&means(&[[3.25, 1.75]]), &z, 0.25).unwrap(), vec![0]);
    }

    #[test]
    fn broadcast_mean_detects_at_most_one_of_separated_minima() {
        let zs = vec![vec![1.0, -2.0], vec![-1.0, 2.0], vec![-3.0, -1.0]];
        for p in [[1.0, -2.0], [0.0, 0.0], [-1.1, 2.2]] {
            let m = Matrix::broadcast(50, &p);
            assert!(detect_minima(&m, &zs, 0.25).unwrap().len() <= 1);
        }
    }

    #[test]
    fn several_rows_several_minima() {
        let zs = vec![vec![1.0, -2.0], vec![-1.0, 2.0], vec![-3.0, -1.0]];
        let m = means(&[[1.1, -2.0], [9.0, 9.0], [-3.0, -0.9], [1.0, -2.1]]);
        assert_eq!(detect_minima(&m, &zs, 0.25).unwrap(), vec![0, 2]);
    }

    #[test]
    fn empty_minimizers_rejected() {
        assert!(detect_minima(&means(&[[0.0, 0.0]]), &[], 0.25).is_err());
    }
}
