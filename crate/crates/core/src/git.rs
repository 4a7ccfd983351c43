//! Gaussian-kernel baseline ("GIT-style").
//!
//! The kernel `K(ω, ν) = Σ_j g_j(ω; λ) T_j(ν)` is the Chebyshev projection in
//! `ν` of a normalized Gaussian `G_λ(ω - ν)`, so its transform
//! `Φ(ω) = Σ_j g_j(ω; λ) m_j` is computable from moments alone. The
//! projection integrals use Chebyshev–Gauss quadrature.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{segment_integrals_unchecked, MomentVector, Spectrum};
use crate::cost::{window_strengths, GridSpec, ResidualVector};
use crate::error::{Error, Result};
use crate::quadrature::chebyshev_gauss_angles;
use crate::response::DatasetSample;

/// Centres `ω₀` scanned by [`sigma_accuracy`].
pub const SIGMA_SCAN_POINTS: usize = 200;
/// Size of the logarithmic width grid in [`select_lambda`].
pub const LAMBDA_GRID_POINTS: usize = 64;
/// `Σ` values closer than this to the minimum count as ties.
pub const LAMBDA_TIE_TOLERANCE: f64 = 1e-9;

/// Quadrature order resolving a Gaussian of width `lambda` against `T_{M-1}`.
pub fn default_quadrature_order(lambda: f64, moment_count: usize) -> usize {
    let resolve = moment_count + (6.0 / lambda).ceil() as usize;
    (4 * moment_count).max(resolve)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianKernelConfig {
    /// Standard deviation of the Gaussian, in rescaled-energy units.
    pub lambda: f64,
    pub moment_count: usize,
    pub quadrature_order: usize,
}

impl GaussianKernelConfig {
    pub fn new(lambda: f64, moment_count: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("Gaussian width must be positive, got {lambda}")));
        }
        Self::with_order(lambda, moment_count, default_quadrature_order(lambda, moment_count))
    }

    pub fn with_order(lambda: f64, moment_count: usize, quadrature_order: usize) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::invalid(format!("Gaussian width must be positive, got {lambda}")));
        }
        if moment_count == 0 {
            return Err(Error::invalid("moment count must be >= 1"));
        }
        if quadrature_order < 2 * moment_count {
            return Err(Error::invalid(format!(
                "quadrature order {quadrature_order} below 2M = {}",
                2 * moment_count
            )));
        }
        Ok(Self {
            lambda,
            moment_count,
            quadrature_order,
        })
    }
}

/// Precomputed projection tables for one [`GaussianKernelConfig`].
#[derive(Clone, Debug)]
pub struct GaussianKernel {
    config: GaussianKernelConfig,
    nodes: Vec<f64>,
    /// `Q × M`, entry `(q, j) = (2 - δ_j0) T_j(ν_q) / Q`.
    basis: DMatrix<f64>,
}

impl GaussianKernel {
    pub fn new(config: GaussianKernelConfig) -> Self {
        let q = config.quadrature_order;
        let m = config.moment_count;
        let angles = chebyshev_gauss_angles(q);
        let nodes = angles.iter().map(|t| t.cos()).collect();
        let basis = DMatrix::from_fn(q, m, |row, j| {
            let norm = if j == 0 { 1.0 } else { 2.0 };
            norm * (j as f64 * angles[row]).cos() / q as f64
        });
        Self {
            config,
            nodes,
            basis,
        }
    }

    pub fn config(&self) -> &GaussianKernelConfig {
        &self.config
    }

    fn gaussian(&self, x: f64) -> f64 {
        let lambda = self.config.lambda;
        (-0.5 * (x / lambda).powi(2)).exp() / (lambda * (2.0 * PI).sqrt())
    }

    /// Coefficient functions at several `ω`: row `r` holds `g_j(omegas[r])`.
    pub fn coefficient_matrix(&self, omegas: &[f64]) -> DMatrix<f64> {
        let samples = DMatrix::from_fn(omegas.len(), self.nodes.len(), |r, q| {
            self.gaussian(omegas[r] - self.nodes[q])
        });
        samples * &self.basis
    }

    /// Row `l` holds `∫_{a_l}^{b_l} g_j(ω) dω`, integrated in closed form through `erf`.
    pub fn window_integrals(&self, windows: &[(f64, f64)]) -> DMatrix<f64> {
        let scale = 1.0 / (self.config.lambda * SQRT_2);
        let masses = DMatrix::from_fn(windows.len(), self.nodes.len(), |l, q| {
            let (a, b) = windows[l];
            let nu = self.nodes[q];
            0.5 * (libm::erf((b - nu) * scale) - libm::erf((a - nu) * scale))
        });
        masses * &self.basis
    }

    pub fn coefficients(&self, omega: f64) -> Vec<f64> {
        self.coefficient_matrix(&[omega]).row(0).iter().copied().collect()
    }

    /// `Φ^G(ω) = Σ_j g_j(ω) m_j`.
    pub fn transform(&self, omega: f64, moments: &MomentVector) -> Result<f64> {
        check_moments(moments, self.config.moment_count)?;
        let g = self.coefficients(omega);
        Ok(g.iter().zip(moments.values()).map(|(a, b)| a * b).sum())
    }
}

fn check_moments(moments: &MomentVector, expected: usize) -> Result<()> {
    if moments.len() != expected {
        return Err(Error::mismatch("Gaussian kernel moments", expected, moments.len()));
    }
    Ok(())
}

fn check_omega(omega: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&omega) {
        return Err(Error::domain(format!("frequency {omega} outside [-1, 1]")));
    }
    Ok(())
}

/// `g_j(ω; λ)` for `j = 0..M`.
pub fn gaussian_cheb_coefficients(omega: f64, config: &GaussianKernelConfig) -> Result<Vec<f64>> {
    check_omega(omega)?;
    Ok(GaussianKernel::new(*config).coefficients(omega))
}

pub fn git_transform(omega: f64, moments: &MomentVector, config: &GaussianKernelConfig) -> Result<f64> {
    check_omega(omega)?;
    GaussianKernel::new(*config).transform(omega, moments)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SigmaReport {
    /// `1 - inf_ω₀ ∫_{ω₀-Δ/2}^{ω₀+Δ/2} K(ω₀, ν) dν`.
    pub sigma: f64,
    pub argmin_omega: f64,
}

/// Accuracy deficit of the truncated kernel at resolution `delta`, scanned over
/// 200 centres in `[-1 + Δ/2, 1 - Δ/2]`.
pub fn sigma_accuracy(config: &GaussianKernelConfig, delta: f64) -> Result<SigmaReport> {
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::invalid(format!("resolution must lie in (0, 2], got {delta}")));
    }
    let kernel = GaussianKernel::new(*config);
    let half = 0.5 * delta;
    let (lo, hi) = (-1.0 + half, 1.0 - half);
    let centres: Vec<f64> = (0..SIGMA_SCAN_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (SIGMA_SCAN_POINTS - 1) as f64)
        .collect();
    let coeffs = kernel.coefficient_matrix(&centres);
    let mut integrals = vec![0.0; config.moment_count];
    let mut best = SigmaReport {
        sigma: f64::NEG_INFINITY,
        argmin_omega: centres[0],
    };
    let mut min_mass = f64::INFINITY;
    for (r, &w0) in centres.iter().enumerate() {
        let a = (w0 - half).max(-1.0);
        let b = (w0 + half).min(1.0);
        segment_integrals_unchecked(&mut integrals, a, b);
        let mass: f64 = coeffs.row(r).iter().zip(&integrals).map(|(g, t)| g * t).sum();
        if mass < min_mass {
            min_mass = mass;
            best.argmin_omega = w0;
        }
    }
    best.sigma = 1.0 - min_mass;
    Ok(best)
}

/// The logarithmic grid `Δ/16 · 32^{r/63}`, `r = 0..64`, spanning `[Δ/16, 2Δ]`.
pub fn lambda_grid(delta: f64) -> Vec<f64> {
    let last = (LAMBDA_GRID_POINTS - 1) as f64;
    (0..LAMBDA_GRID_POINTS)
        .map(|r| delta / 16.0 * 32f64.powf(r as f64 / last))
        .collect()
}

/// Width on [`lambda_grid`] minimizing `Σ`; near-ties go to the smaller width.
pub fn select_lambda(moment_count: usize, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 2.0) {
        return Err(Error::invalid(format!("resolution must lie in (0, 2], got {delta}")));
    }
    let grid = lambda_grid(delta);
    let sigmas = grid
        .iter()
        .map(|&lambda| {
            let config = GaussianKernelConfig::new(lambda, moment_count)?;
            Ok(sigma_accuracy(&config, delta)?.sigma)
        })
        .collect::<Result<Vec<f64>>>()?;
    let min = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    let pick = sigmas
        .iter()
        .position(|s| *s <= min + LAMBDA_TIE_TOLERANCE)
        .expect("grid is non-empty");
    Ok(grid[pick])
}

/// The baseline prepared for one `(grid, M)` cell: selected width and the
/// per-window integrals `W[l][j] = ∫_{window l} g_j(ω) dω`.
#[derive(Clone, Debug)]
pub struct GitBaseline {
    grid: GridSpec,
    config: GaussianKernelConfig,
    window_weights: DMatrix<f64>,
}

impl GitBaseline {
    pub fn new(grid: &GridSpec, moment_count: usize) -> Result<Self> {
        let lambda = select_lambda(moment_count, grid.delta())?;
        Self::with_lambda(grid, moment_count, lambda)
    }

    pub fn with_lambda(grid: &GridSpec, moment_count: usize, lambda: f64) -> Result<Self> {
        let config = GaussianKernelConfig::new(lambda, moment_count)?;
        let kernel = GaussianKernel::new(config);
        let windows: Vec<(f64, f64)> = grid.windows().collect();
        Ok(Self {
            grid: *grid,
            config,
            window_weights: kernel.window_integrals(&windows),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.config.lambda
    }

    pub fn config(&self) -> &GaussianKernelConfig {
        &self.config
    }

    pub fn residuals(&self, sample: &DatasetSample) -> Result<ResidualVector> {
        self.spectrum_residuals(&sample.spectrum, &sample.moments)
    }

    /// Residuals for a bare spectrum; `moments` may be longer than the budget.
    pub fn spectrum_residuals(&self, spectrum: &Spectrum, moments: &MomentVector) -> Result<ResidualVector> {
        let m = self.config.moment_count;
        if moments.len() < m {
            return Err(Error::mismatch("sample moments", m, moments.len()));
        }
        let moments = &moments.values()[..m];
        let strengths = window_strengths(spectrum, &self.grid);
        Ok(ResidualVector(
            strengths
                .iter()
                .enumerate()
                .map(|(l, s)| {
                    let phi: f64 = self
                        .window_weights
                        .row(l)
                        .iter()
                        .zip(moments)
                        .map(|(w, mj)| w * mj)
                        .sum();
                    phi - s
                })
                .collect(),
        ))
    }

    /// `C_U` of the baseline transform for one sample.
    pub fn cost(&self, sample: &DatasetSample) -> Result<f64> {
        Ok(crate::cost::cost_upper(&self.residuals(sample)?))
    }
}

/// One-shot baseline cost; prefer [`GitBaseline`] when scoring many samples.
pub fn git_cost(sample: &DatasetSample, grid: &GridSpec, moment_count: usize) -> Result<f64> {
    GitBaseline::new(grid, moment_count)?.cost(sample)
}
