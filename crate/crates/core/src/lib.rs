//! Reconstruction of response functions from a small budget of Chebyshev
//! moments.
//!
//! A discrete response `S(ω) = Σ_k s_k δ(ω - λ_k)` on `[-1, 1]` is observed only
//! through its moments `m_j = Σ_k s_k T_j(λ_k)`. A truncated kernel
//! `K(ω, ν) = Σ_ij b_ij T_i(ω) T_j(ν)` turns those moments into an integral
//! transform `Φ(ω)`, scored by how well `∫Φ` matches `∫S` over sliding windows
//! of width `Δ`. The crate provides:
//!
//! * [`lsq`]: the per-sample least-squares optimal kernel,
//! * [`nn`]: a small MLP that predicts kernels from moments,
//! * [`git`]: a Gaussian-kernel baseline,
//! * [`experiment`]: the end-to-end comparison sweep behind the `chebkern` CLI.

pub mod chebyshev;
pub mod cost;
pub mod dataset_io;
pub mod error;
pub mod experiment;
pub mod git;
pub mod lsq;
pub mod nn;
pub mod quadrature;
pub mod response;

pub use chebyshev::{cheb_eval, cheb_eval_all, moments, rescale_spectrum, segment_integral, MomentVector, Spectrum};
pub use cost::{cost_infinity, cost_upper, residual_vector, transform_eval, window_strength, GridSpec, KernelCoefficients, ResidualVector};
pub use error::{Error, Result};
pub use response::{generate_dataset, split_dataset, DatasetConfig, DatasetSample, SkewedGaussianParams, SplitCounts};
