mod common;

use std::collections::BTreeMap;

use chebkern::dataset_io::{read_dataset, write_dataset};
use chebkern::response::{build_response, generate_sample};
use chebkern::{generate_dataset, split_dataset, DatasetConfig, GridSpec, SkewedGaussianParams, SplitCounts};
use proptest::prelude::*;

fn small_config(seed: u64) -> DatasetConfig {
    DatasetConfig {
        n_eigenvalues: 40,
        n_samples: 12,
        n_alpha: 4,
        n_sigma: 3,
        moment_count: 12,
        seed,
        ..DatasetConfig::default().with_grid(GridSpec::new(70, 6).unwrap())
    }
}

#[test]
fn generated_spectra_are_normalized_and_parameters_in_range() {
    let config = DatasetConfig {
        n_samples: 100,
        n_alpha: 10,
        n_sigma: 10,
        seed: 5,
        ..DatasetConfig::default()
    };
    let samples = generate_dataset(&config).unwrap();
    for s in &samples {
        let total: f64 = s.spectrum.weights().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(s.spectrum.weights().iter().all(|w| *w >= 0.0));
        assert!((-0.3..=0.3).contains(&s.params.mu));
        assert!(s.params.sigma >= config.grid.delta() - 1e-15 && s.params.sigma <= 0.4 + 1e-15);
        assert!((0.0..=2.5).contains(&s.params.alpha));
        assert!(s.moments.values().iter().all(|m| m.abs() <= 1.0 + 1e-12));
    }
}

#[test]
fn parameter_pairs_cover_the_full_grid() {
    let config = small_config(1);
    let samples = generate_dataset(&config).unwrap();
    let mut seen: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for s in &samples {
        *seen.entry((s.params.alpha.to_bits(), s.params.sigma.to_bits())).or_default() += 1;
    }
    assert_eq!(seen.len(), config.n_alpha * config.n_sigma);
    assert!(seen.values().all(|c| *c == 1));
    let alphas: Vec<f64> = (0..config.n_alpha).map(|i| 2.5 * i as f64 / 3.0).collect();
    for s in &samples {
        assert!(alphas.iter().any(|a| (a - s.params.alpha).abs() < 1e-15));
    }
}

#[test]
fn parallel_generation_matches_serial() {
    let config = small_config(9);
    let parallel = generate_dataset(&config).unwrap();
    let serial: Vec<_> = (0..config.n_samples).map(|i| generate_sample(&config, i).unwrap()).collect();
    assert_eq!(parallel, serial);
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    assert_eq!(single.install(|| generate_dataset(&config).unwrap()), serial);
}

#[test]
fn seeds_change_the_draws() {
    let a = generate_sample(&small_config(1), 0).unwrap();
    let b = generate_sample(&small_config(2), 0).unwrap();
    assert_ne!(a.spectrum.eigenvalues(), b.spectrum.eigenvalues());
    let c = generate_sample(&small_config(1), 1).unwrap();
    assert_ne!(a.spectrum.eigenvalues(), c.spectrum.eigenvalues());
}

#[test]
fn dataset_files_round_trip_exactly() {
    let config = small_config(4);
    let mut samples = generate_dataset(&config).unwrap();
    samples[3].target_c = Some((0..12).map(|i| (i as f64 + 0.1) / 3.0 * std::f64::consts::PI).collect());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.jsonl");
    write_dataset(&path, &config, &samples).unwrap();
    let (read_config, read_samples) = read_dataset(&path).unwrap();
    assert_eq!(read_config, config);
    assert_eq!(read_samples, samples);
}

#[test]
fn corrupted_dataset_is_rejected() {
    let config = small_config(4);
    let samples = generate_dataset(&config).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.jsonl");
    write_dataset(&path, &config, &samples).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let truncated: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
    std::fs::write(&path, truncated).unwrap();
    assert!(read_dataset(&path).is_err());
    std::fs::write(&path, "not json\n").unwrap();
    assert!(read_dataset(&path).is_err());
}

#[test]
fn split_is_a_seeded_partition() {
    let counts = SplitCounts { train: 7, validation: 3, test: 2 };
    let items: Vec<usize> = (0..12).collect();
    let a = split_dataset(items.clone(), counts, 3).unwrap();
    let b = split_dataset(items.clone(), counts, 3).unwrap();
    assert_eq!((a.train.len(), a.validation.len(), a.test.len()), (7, 3, 2));
    assert_eq!(a.train, b.train);
    let mut all: Vec<usize> = a.train.iter().chain(&a.validation).chain(&a.test).copied().collect();
    all.sort();
    assert_eq!(all, items);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn unskewed_profile_is_mirror_symmetric(
        mu in -0.3f64..0.3,
        sigma in 0.05f64..0.4,
        offsets in prop::collection::vec(0.0f64..0.6, 1..30),
    ) {
        let mut eigs = Vec::new();
        for o in &offsets {
            eigs.push(mu - o);
            eigs.push(mu + o);
        }
        let params = SkewedGaussianParams::new(mu, sigma, 0.0, 1.0).unwrap();
        let spectrum = build_response(&eigs, &params).unwrap();
        let w = spectrum.weights();
        for pair in w.chunks(2) {
            prop_assert!((pair[0] - pair[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn responses_are_normalized(
        mu in -0.3f64..0.3,
        sigma in 0.05f64..0.4,
        alpha in 0.0f64..2.5,
        seed in any::<u64>(),
    ) {
        let mut rng = common::rng(seed);
        let eigs = chebkern::response::sample_eigenvalues(&mut rng, 200);
        let params = SkewedGaussianParams::new(mu, sigma, alpha, 1.0).unwrap();
        let spectrum = build_response(&eigs, &params).unwrap();
        let total: f64 = spectrum.weights().iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        prop_assert!(spectrum.weights().iter().all(|w| *w >= 0.0));
    }
}
