//! Polarized CBS on a single Gaussian target should sample the target.

use nalgebra::{DMatrix, DVector};
use polarcbo::dynamics::{LambdaMode, Method, Stepper, StepperConfig};
use polarcbo::harness::sampling::partition_by_mode;
use polarcbo::{BetaSchedule, Ensemble, Kernel, NoiseModel, Objective};

#[test]
fn polarized_cbs_covariance_matches_target() {
    let mean = vec![1.0, -1.0];
    let cov = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.6]);
    let precision = cov.clone().try_inverse().unwrap();
    let target = Objective::quadratic(mean.clone(), precision).unwrap();
    let config = StepperConfig::new(
        Method::PolarizedCbs { lambda: LambdaMode::Sampling },
        Kernel::gaussian(1.0),
        NoiseModel::isotropic(1.0),
        BetaSchedule::constant(1.0),
    );

    let mut pooled = DMatrix::zeros(2, 2);
    let mut pooled_mean = DVector::zeros(2);
    let mut count = 0.0;
    for seed in 0..4u64 {
        let e0 = Ensemble::uniform_box(300, 2, -3.0, 3.0, seed).unwrap();
        let mut stepper = Stepper::new(config, &target, e0, seed).unwrap();
        for step in 0..1500 {
            stepper.step().unwrap();
            if step >= 500 && step % 100 == 0 {
                let stats = partition_by_mode(stepper.ensemble(), &[mean.clone()]);
                let c = stats[0].covariance.as_ref().unwrap();
                pooled += DMatrix::from_fn(2, 2, |r, k| c[r][k]);
                pooled_mean += DVector::from_column_slice(stats[0].mean.as_ref().unwrap());
                count += 1.0;
            }
        }
    }
    pooled /= count;
    pooled_mean /= count;
    let rel = (&pooled - &cov).norm() / cov.norm();
    assert!(rel <= 0.25, "relative covariance error {rel}, estimate {pooled}");
    let dm = (pooled_mean - DVector::from_vec(mean)).amax();
    assert!(dm <= 0.2, "mean offset {dm}");
}
