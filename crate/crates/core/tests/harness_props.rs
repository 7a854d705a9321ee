use polarcbo::harness::emit::{render, reports_from_json, to_csv, to_json, CSV_HEADER};
use polarcbo::harness::{detect_minima, run_config, Aggregate, Format, KernelName, MethodName, RunConfig, RunReport, SeedResult};
use polarcbo::Matrix;
use proptest::prelude::*;

fn seed_result(seed: u64, detected: Vec<usize>, failed: bool, wall_time: f64) -> SeedResult {
    SeedResult {
        seed,
        final_means: if failed { None } else { Some(Matrix::broadcast(2, &[0.5, -0.25])) },
        detected: if failed { vec![] } else { detected },
        wall_time,
        failed,
        failure: failed.then(|| "non-finite ensemble".to_string()),
    }
}

fn arb_seed() -> impl Strategy<Value = SeedResult> {
    (any::<u64>(), proptest::sample::subsequence(vec![0usize, 1, 2], 0..=3), prop::bool::weighted(0.1), 0.0f64..10.0)
        .prop_map(|(s, d, f, w)| seed_result(s, d, f, w))
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        prop::sample::select(vec![MethodName::StandardCbo, MethodName::PolarizedCbo, MethodName::ClusterCbo]),
        prop::sample::select(vec![KernelName::Gaussian, KernelName::Laplace, KernelName::BoundedConfidence]),
        1e-3f64..10.0,
        1usize..500,
        prop::collection::vec(any::<u64>(), 1..6),
        prop::bool::ANY,
    )
        .prop_map(|(method, kernel, kappa, particles, seeds, inf_max)| RunConfig {
            method,
            kernel,
            kappa,
            particles,
            seeds,
            beta_max: if inf_max { f64::INFINITY } else { 1e7 },
            beta_factor: 1.01,
            sigma: kappa * 3.0,
            ..Default::default()
        })
}

fn report(config: RunConfig, seeds: Vec<SeedResult>) -> RunReport {
    RunReport {
        config_hash: config.hash(),
        config,
        detection_rule: "final-iterate means, infinity-norm radius".into(),
        minimizers: vec![vec![0.0, 0.0]],
        aggregate: Aggregate::from_seeds(&seeds),
        seeds,
    }
}

proptest! {
    #[test]
    fn aggregate_fractions_are_monotone(seeds in prop::collection::vec(arb_seed(), 0..30)) {
        let a = Aggregate::from_seeds(&seeds);
        prop_assert!(a.frac_ge1 >= a.frac_ge2 && a.frac_ge2 >= a.frac_ge3);
        prop_assert!((0.0..=1.0).contains(&a.frac_ge1));
        prop_assert_eq!(a.seeds, seeds.len());
    }

    #[test]
    fn json_round_trips(config in arb_config(), seeds in prop::collection::vec(arb_seed(), 0..8)) {
        let reports = vec![report(config, seeds)];
        let text = to_json(&reports).unwrap();
        let back = reports_from_json(&text).unwrap();
        prop_assert_eq!(&back, &reports);
        prop_assert_eq!(to_json(&back).unwrap(), text);
    }

    #[test]
    fn config_toml_round_trips(config in arb_config()) {
        let text = config.to_toml_string().unwrap();
        let back = RunConfig::from_toml_str(&text).unwrap();
        prop_assert_eq!(back.hash(), config.hash());
        prop_assert_eq!(back, config);
    }

    #[test]
    fn emit_is_deterministic(config in arb_config(), seeds in prop::collection::vec(arb_seed(), 0..8)) {
        let reports = vec![report(config, seeds)];
        for f in [Format::Csv, Format::Json, Format::Markdown] {
            prop_assert_eq!(render(&reports, f).unwrap(), render(&reports.clone(), f).unwrap());
        }
    }

    #[test]
    fn detection_matches_brute_force(
        rows in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..6),
        mins in prop::collection::vec(prop::collection::vec(-1.0f64..1.0, 2), 1..4),
    ) {
        let means = Matrix::from_rows(&rows).unwrap();
        let got = detect_minima(&means, &mins, 0.25).unwrap();
        let expected: Vec<usize> = (0..mins.len())
            .filter(|&k| rows.iter().any(|r| r.iter().zip(&mins[k]).all(|(a, b)| (a - b).abs() <= 0.25)))
            .collect();
        prop_assert_eq!(got, expected);
    }
}

#[test]
fn detection_examples() {
    let z = vec![vec![3.0, 2.0]];
    let at = |m: [f64; 2]| detect_minima(&Matrix::from_rows(&[m]).unwrap(), &z, 0.25).unwrap();
    assert_eq!(at([3.2, 2.1]), vec![0]);
    assert_eq!(at([3.0, 2.0]), vec![0]);
    assert!(at([3.3, 2.0]).is_empty());
}

#[test]
fn all_at_one_minimizer_gives_single_detection_row() {
    let seeds: Vec<SeedResult> = (0..5).map(|s| seed_result(s, vec![0], false, 0.0)).collect();
    let a = Aggregate::from_seeds(&seeds);
    assert_eq!((a.frac_ge1, a.frac_ge2, a.frac_ge3), (1.0, 0.0, 0.0));
}

#[test]
fn empty_report_list_gives_header_only_csv() {
    assert_eq!(to_csv(&[]), format!("{CSV_HEADER}\n"));
}

fn tiny(seeds: Vec<u64>) -> RunConfig {
    RunConfig {
        objective: "multimodal-ackley".into(),
        particles: 30,
        steps: 60,
        kappa: 0.5,
        seeds,
        record_timing: false,
        ..Default::default()
    }
}

#[test]
fn deleting_a_seed_only_removes_its_contribution() {
    let full = run_config(&tiny(vec![4, 7, 9])).unwrap();
    let partial = run_config(&tiny(vec![4, 9])).unwrap();
    assert_eq!(full.seeds[0], partial.seeds[0]);
    assert_eq!(full.seeds[2], partial.seeds[1]);
    let expected = Aggregate::from_seeds(&[full.seeds[0].clone(), full.seeds[2].clone()]);
    assert_eq!(partial.aggregate, expected);
}

#[test]
fn standard_cbo_never_detects_two_separated_minima() {
    let r = run_config(&RunConfig { method: MethodName::StandardCbo, ..tiny((0..6).collect()) }).unwrap();
    assert_eq!(r.aggregate.frac_ge2, 0.0);
}

#[test]
fn every_emitted_row_reconstructs_its_config() {
    let r = run_config(&tiny(vec![1, 2])).unwrap();
    let back = reports_from_json(&to_json(&vec![r.clone()]).unwrap()).unwrap();
    assert_eq!(back[0].config, r.config);
    assert_eq!(back[0].config.hash(), r.config_hash);
}
