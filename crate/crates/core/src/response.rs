//! Synthetic discrete responses drawn from the skewed-Gaussian family.
//!
//! Each sample gets its own eigenvalue draw and location `μ` from a ChaCha8
//! stream keyed by `(seed, sample index)`, so generation order does not
//! affect the output.

use std::f64::consts::SQRT_2;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{moments, MomentVector, Spectrum};
use crate::cost::{GridSpec, KernelCoefficients};
use crate::error::{Error, Result};
use crate::lsq::lift_coefficients;

/// Attempts at redrawing `μ` before a degenerate sample is reported.
pub const MAX_DEGENERATE_RETRIES: usize = 16;

/// Stream reserved for the train/validation/test shuffle.
const SPLIT_STREAM: u64 = u64::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewedGaussianParams {
    pub mu: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl SkewedGaussianParams {
    pub fn new(mu: f64, sigma: f64, alpha: f64, gamma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !(gamma > 0.0) || !(alpha >= 0.0) || !mu.is_finite() {
            return Err(Error::invalid(format!(
                "skewed Gaussian needs sigma > 0, gamma > 0, alpha >= 0; got mu={mu}, sigma={sigma}, alpha={alpha}, gamma={gamma}"
            )));
        }
        Ok(Self {
            mu,
            sigma,
            alpha,
            gamma,
        })
    }
}

/// `Γ exp(-(ω-μ)²/2σ²) [1 + erf(ωα / σ√2)]`.
///
/// The error-function argument is `ω α`, not `(ω - μ) α`.
pub fn skewed_gaussian_density(omega: f64, params: &SkewedGaussianParams) -> f64 {
    let z = (omega - params.mu) / params.sigma;
    let skew = if omega == 0.0 {
        0.0
    } else {
        omega * params.alpha / (params.sigma * SQRT_2)
    };
    params.gamma * (-0.5 * z * z).exp() * (1.0 + libm::erf(skew))
}

/// `count` independent uniform draws on `[-1, 1]`.
pub fn sample_eigenvalues<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// Weights `s_k ∝ S_S(λ_k; μ, σ, α, 1)` normalized to unit sum.
pub fn build_response(eigenvalues: &[f64], params: &SkewedGaussianParams) -> Result<Spectrum> {
    let unit = SkewedGaussianParams {
        gamma: 1.0,
        ..*params
    };
    let raw: Vec<f64> = eigenvalues
        .iter()
        .map(|&x| skewed_gaussian_density(x, &unit))
        .collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::DegenerateSample(format!(
            "all weights vanish for mu={}, sigma={}, alpha={}",
            params.mu, params.sigma, params.alpha
        )));
    }
    Spectrum::new(eigenvalues.to_vec(), raw.into_iter().map(|w| w / total).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetConfig {
    pub n_eigenvalues: usize,
    pub n_samples: usize,
    pub n_alpha: usize,
    pub n_sigma: usize,
    pub alpha_range: [f64; 2],
    /// Lower bound must equal the grid resolution `Δ`.
    pub sigma_range: [f64; 2],
    pub mu_range: [f64; 2],
    pub moment_count: usize,
    pub grid: GridSpec,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        let grid = GridSpec::new(70, 2).expect("default grid is valid");
        Self {
            n_eigenvalues: 200,
            n_samples: 2500,
            n_alpha: 50,
            n_sigma: 50,
            alpha_range: [0.0, 2.5],
            sigma_range: [grid.delta(), 0.4],
            mu_range: [-0.3, 0.3],
            moment_count: 70,
            grid,
            seed: 0,
        }
    }
}

impl DatasetConfig {
    /// Same configuration on another grid; the width range is re-anchored at the new `Δ`.
    pub fn with_grid(&self, grid: GridSpec) -> Self {
        Self {
            grid,
            sigma_range: [grid.delta(), self.sigma_range[1]],
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_eigenvalues == 0 || self.n_samples == 0 || self.moment_count == 0 {
            return Err(Error::invalid(
                "dataset sizes and moment count must be positive",
            ));
        }
        if self.n_alpha == 0 || self.n_sigma == 0 || self.n_alpha * self.n_sigma != self.n_samples {
            return Err(Error::invalid(format!(
                "n_alpha x n_sigma = {} x {} does not equal n_samples = {}",
                self.n_alpha, self.n_sigma, self.n_samples
            )));
        }
        if (self.sigma_range[0] - self.grid.delta()).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "sigma lower bound {} must equal the grid resolution {}",
                self.sigma_range[0],
                self.grid.delta()
            )));
        }
        let ordered = |r: [f64; 2]| r[0] <= r[1] && r.iter().all(|v| v.is_finite());
        if !ordered(self.alpha_range) || !ordered(self.sigma_range) || !ordered(self.mu_range) {
            return Err(Error::invalid("parameter ranges must be finite and ordered"));
        }
        if self.alpha_range[0] < 0.0 || self.sigma_range[0] <= 0.0 {
            return Err(Error::invalid("alpha must be >= 0 and sigma > 0"));
        }
        if self.mu_range[0] < -1.0 || self.mu_range[1] > 1.0 {
            return Err(Error::invalid("mu range must lie inside [-1, 1]"));
        }
        Ok(())
    }

    /// `(α, σ)` for sample `index` on the `n_alpha × n_sigma` grid.
    pub fn grid_params(&self, index: usize) -> (f64, f64) {
        let alpha = spaced(self.alpha_range, self.n_alpha, index / self.n_sigma);
        let sigma = spaced(self.sigma_range, self.n_sigma, index % self.n_sigma);
        (alpha, sigma)
    }
}

fn spaced(range: [f64; 2], count: usize, i: usize) -> f64 {
    if count == 1 {
        range[0]
    } else {
        range[0] + (range[1] - range[0]) * i as f64 / (count - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSample {
    pub index: usize,
    pub params: SkewedGaussianParams,
    pub spectrum: Spectrum,
    pub moments: MomentVector,
    /// Least-squares effective coefficients `c`, once solved.
    pub target_c: Option<Vec<f64>>,
}

impl DatasetSample {
    /// The lifted target matrix `b^(min)`.
    pub fn target_kernel(&self) -> Result<KernelCoefficients> {
        let c = self.target_c.as_ref().ok_or_else(|| {
            Error::Precondition(format!("sample {} has no least-squares target", self.index))
        })?;
        lift_coefficients(c, &self.moments)
    }

    /// Same sample restricted to its first `count` moments; targets are dropped
    /// unless they already have that length.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        Ok(Self {
            index: self.index,
            params: self.params,
            spectrum: self.spectrum.clone(),
            moments: self.moments.truncated(count)?,
            target_c: self.target_c.clone().filter(|c| c.len() == count),
        })
    }
}

/// RNG for sample `index` of a dataset with the given seed.
pub fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn generate_sample(config: &DatasetConfig, index: usize) -> Result<DatasetSample> {
    let mut rng = sample_rng(config.seed, index);
    let eigenvalues = sample_eigenvalues(&mut rng, config.n_eigenvalues);
    let (alpha, sigma) = config.grid_params(index);
    let [mu_lo, mu_hi] = config.mu_range;
    let mut last_err = None;
    for _ in 0..=MAX_DEGENERATE_RETRIES {
        let mu = rng.random_range(mu_lo..=mu_hi);
        let params = SkewedGaussianParams::new(mu, sigma, alpha, 1.0)?;
        match build_response(&eigenvalues, &params) {
            Ok(spectrum) => {
                let moments = moments(&spectrum, config.moment_count)?;
                return Ok(DatasetSample {
                    index,
                    params,
                    spectrum,
                    moments,
                    target_c: None,
                });
            }
            Err(err @ Error::DegenerateSample(_)) => last_err = Some(err),
            Err(err) => return Err(err),
        }
    }
    Err(last_err.expect("retry loop ran at least once"))
}

/// All `n_samples` samples, in index order. Runs on the ambient rayon pool.
pub fn generate_dataset(config: &DatasetConfig) -> Result<Vec<DatasetSample>> {
    config.validate()?;
    (0..config.n_samples)
        .into_par_iter()
        .map(|index| generate_sample(config, index))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for SplitCounts {
    fn default() -> Self {
        Self {
            train: 2000,
            validation: 400,
            test: 100,
        }
    }
}

impl SplitCounts {
    pub fn total(&self) -> usize {
        self.train + self.validation + self.test
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Split<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub test: Vec<T>,
}

/// Seeded shuffle followed by a partition into train/validation/test.
pub fn split_dataset<T>(samples: Vec<T>, counts: SplitCounts, seed: u64) -> Result<Split<T>> {
    if counts.total() != samples.len() {
        return Err(Error::invalid(format!(
            "split counts sum to {} but there are {} samples",
            counts.total(),
            samples.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SPLIT_STREAM);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.shuffle(&mut rng);

    let mut slots: Vec<Option<T>> = samples.into_iter().map(Some).collect();
    let mut take = |range: std::ops::Range<usize>| -> Vec<T> {
        order[range]
            .iter()
            .map(|&i| slots[i].take().expect("indices are a permutation"))
            .collect()
    };
    let train = take(0..counts.train);
    let validation = take(counts.train..counts.train + counts.validation);
    let test = take(counts.train + counts.validation..counts.total());
    Ok(Split {
        train,
        validation,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn density_examples() {
        let p = SkewedGaussianParams::new(0.0, 0.2, 0.0, 1.0).unwrap();
        assert_eq!(skewed_gaussian_density(0.0, &p), 1.0);
        let p = SkewedGaussianParams::new(0.3, 0.1, f64::INFINITY, 1.0).unwrap();
        assert_eq!(skewed_gaussian_density(0.3, &p), 2.0);
        let p = SkewedGaussianParams::new(0.0, 0.1, 5.0, 3.0).unwrap();
        assert!(skewed_gaussian_density(-0.4, &p) >= 0.0);
    }

    #[test]
    fn params_validation() {
        assert!(SkewedGaussianParams::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(SkewedGaussianParams::new(0.0, 0.1, -1.0, 1.0).is_err());
        assert!(SkewedGaussianParams::new(0.0, 0.1, 1.0, 0.0).is_err());
    }

    #[test]
    fn eigenvalue_draws_are_seeded() {
        let a = sample_eigenvalues(&mut sample_rng(9, 3), 200);
        let b = sample_eigenvalues(&mut sample_rng(9, 3), 200);
        assert_eq!(a, b);
        assert!(a.iter().all(|x| (-1.0..=1.0).contains(x)));
        let one = sample_eigenvalues(&mut sample_rng(1, 0), 1);
        assert_eq!(one.len(), 1);
        assert!((-1.0..=1.0).contains(&one[0]));
    }

    #[test]
    fn eigenvalue_mean_is_centred() {
        let draws = sample_eigenvalues(&mut sample_rng(42, 0), 100_000);
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn response_examples() {
        let p = SkewedGaussianParams::new(0.1, 0.2, 1.5, 1.0).unwrap();
        let single = build_response(&[0.4], &p).unwrap();
        assert_eq!(single.weights(), &[1.0]);

        let p0 = SkewedGaussianParams::new(0.2, 0.1, 0.0, 1.0).unwrap();
        let pair = build_response(&[0.05, 0.35], &p0).unwrap();
        assert!((pair.weights()[0] - 0.5).abs() < 1e-15);
        assert!((pair.weights()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_response_is_reported() {
        let p = SkewedGaussianParams::new(0.0, 1e-3, 0.0, 1.0).unwrap();
        assert!(matches!(
            build_response(&[0.9, -0.9], &p),
            Err(Error::DegenerateSample(_))
        ));
    }

    #[test]
    fn degenerate_grid_uses_lower_bounds() {
        let grid = GridSpec::new(70, 2).unwrap();
        let config = DatasetConfig {
            n_samples: 1,
            n_alpha: 1,
            n_sigma: 1,
            moment_count: 5,
            ..DatasetConfig::default().with_grid(grid)
        };
        let data = generate_dataset(&config).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data[0].params.alpha, 0.0);
        assert_eq!(data[0].params.sigma, grid.delta());
    }

    #[test]
    fn config_validation() {
        let mut c = DatasetConfig::default();
        c.validate().unwrap();
        c.n_alpha = 49;
        assert!(c.validate().is_err());
        let mut c = DatasetConfig::default();
        c.sigma_range[0] = 0.01;
        assert!(c.validate().is_err());
    }

    #[test]
    fn split_examples() {
        let s = split_dataset(vec![10, 20], SplitCounts { train: 1, validation: 1, test: 0 }, 5).unwrap();
        assert_eq!(s.train.len() + s.validation.len(), 2);
        assert!(s.test.is_empty());
        assert!(split_dataset(vec![1, 2, 3], SplitCounts { train: 1, validation: 1, test: 0 }, 5).is_err());

        let items: Vec<usize> = (0..2500).collect();
        let a = split_dataset(items.clone(), SplitCounts::default(), 11).unwrap();
        let b = split_dataset(items, SplitCounts::default(), 11).unwrap();
        assert_eq!((a.train.len(), a.validation.len(), a.test.len()), (2000, 400, 100));
        assert_eq!(a, b);
        let mut all: Vec<usize> = a.train.iter().chain(&a.validation).chain(&a.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..2500).collect::<Vec<_>>());
    }
}
