//! The truncated-kernel integral transform and the windowed resolution costs.
//!
//! A kernel `K(ω, ν) = Σ_ij b_ij T_i(ω) T_j(ν)` acts on moments through the
//! effective coefficients `c_i = Σ_j b_ij m_j`, so that `Φ(ω) = Σ_i c_i T_i(ω)`.
//! Costs compare `∫Φ` and `∫S` over the sliding windows of a [`GridSpec`];
//! both integrals are evaluated exactly.

use serde::{Deserialize, Serialize};

use crate::chebyshev::{self, segment_integrals_unchecked, MomentVector, Spectrum};
use crate::error::{Error, Result};

/// Uniform grid of `K` cells on `[-1, 1]` with windows `L` cells wide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    k: usize,
    l: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    k: usize,
    l: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.k, raw.l)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(grid: GridSpec) -> Self {
        RawGrid {
            k: grid.k,
            l: grid.l,
        }
    }
}

impl GridSpec {
    pub fn new(k: usize, l: usize) -> Result<Self> {
        if l == 0 || l > k {
            return Err(Error::invalid(format!(
                "grid needs 1 <= L <= K, got K={k}, L={l}"
            )));
        }
        Ok(Self { k, l })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn l(&self) -> usize {
        self.l
    }

    /// Grid spacing `d = 2/K`.
    pub fn spacing(&self) -> f64 {
        2.0 / self.k as f64
    }

    /// Resolution `Δ = 2L/K`.
    pub fn delta(&self) -> f64 {
        2.0 * self.l as f64 / self.k as f64
    }

    /// Number of windows fully contained in `[-1, 1]`, i.e. `K - L + 1`.
    pub fn window_count(&self) -> usize {
        self.k - self.l + 1
    }

    fn point(&self, index: usize) -> f64 {
        (2.0 * index as f64 - self.k as f64) / self.k as f64
    }

    /// Endpoints `[-1 + l d, -1 + (l + L) d]` of window `index`.
    pub fn window(&self, index: usize) -> (f64, f64) {
        (self.point(index), self.point(index + self.l))
    }

    pub fn windows(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.window_count()).map(|l| self.window(l))
    }
}

/// Row-major `M × M` kernel coefficient matrix `b_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficients {
    side: usize,
    entries: Vec<f64>,
}

impl KernelCoefficients {
    pub fn zeros(side: usize) -> Self {
        Self {
            side,
            entries: vec![0.0; side * side],
        }
    }

    /// Builds from a flat row-major buffer; entry `(i, j)` is `flat[i * M + j]`.
    pub fn from_flat(side: usize, entries: Vec<f64>) -> Result<Self> {
        if side == 0 {
            return Err(Error::invalid("kernel side must be >= 1"));
        }
        if entries.len() != side * side {
            return Err(Error::mismatch("kernel coefficients", side * side, entries.len()));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("kernel coefficients must be finite"));
        }
        Ok(Self { side, entries })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.side + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.entries[i * self.side + j] = value;
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.entries
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.side..(i + 1) * self.side]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `c_i = Σ_j b_ij m_j`.
    pub fn effective(&self, moments: &MomentVector) -> Result<Vec<f64>> {
        if moments.len() != self.side {
            return Err(Error::mismatch("kernel/moments", self.side, moments.len()));
        }
        let m = moments.values();
        Ok((0..self.side)
            .map(|i| self.row(i).iter().zip(m).map(|(b, mj)| b * mj).sum())
            .collect())
    }
}

/// Per-window integrated error `C_l = ∫_window (Φ - S)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ResidualVector(pub Vec<f64>);

impl ResidualVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `Φ(ω) = Σ_ij b_ij T_i(ω) m_j`.
pub fn transform_eval(omega: f64, coeffs: &KernelCoefficients, moments: &MomentVector) -> Result<f64> {
    let c = coeffs.effective(moments)?;
    let t = chebyshev::cheb_eval_all(coeffs.side(), omega)?;
    Ok(c.iter().zip(&t).map(|(ci, ti)| ci * ti).sum())
}

/// Total weight of eigenvalues in `[a, b)`. A window ending at the domain edge
/// `b = 1` is closed so the last grid window keeps eigenvalues sitting on `+1`.
pub fn window_strength(spectrum: &Spectrum, a: f64, b: f64) -> f64 {
    let closed = b >= 1.0;
    spectrum
        .iter()
        .filter(|&(x, _)| x >= a && (x < b || (closed && x <= b)))
        .map(|(_, w)| w)
        .sum()
}

/// Window strengths of every grid window, in window order.
pub fn window_strengths(spectrum: &Spectrum, grid: &GridSpec) -> Vec<f64> {
    grid.windows()
        .map(|(a, b)| window_strength(spectrum, a, b))
        .collect()
}

/// Residuals of the transform whose effective coefficients are `c`.
pub fn residual_from_effective(c: &[f64], spectrum: &Spectrum, grid: &GridSpec) -> Result<ResidualVector> {
    if c.is_empty() {
        return Err(Error::invalid("effective coefficients must not be empty"));
    }
    let mut integrals = vec![0.0; c.len()];
    let values = grid
        .windows()
        .map(|(a, b)| {
            segment_integrals_unchecked(&mut integrals, a, b);
            let phi: f64 = c.iter().zip(&integrals).map(|(ci, ii)| ci * ii).sum();
            phi - window_strength(spectrum, a, b)
        })
        .collect();
    Ok(ResidualVector(values))
}

pub fn residual_vector(
    coeffs: &KernelCoefficients,
    moments: &MomentVector,
    spectrum: &Spectrum,
    grid: &GridSpec,
) -> Result<ResidualVector> {
    let c = coeffs.effective(moments)?;
    residual_from_effective(&c, spectrum, grid)
}

/// `C(Δ) = ‖C‖_∞`.
pub fn cost_infinity(residuals: &ResidualVector) -> f64 {
    residuals.0.iter().fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// `C_U(Δ) = ‖C‖_2`, an upper bound on [`cost_infinity`].
pub fn cost_upper(residuals: &ResidualVector) -> f64 {
    residuals.0.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::moments;

    fn unit(side: usize, i: usize, j: usize) -> KernelCoefficients {
        let mut b = KernelCoefficients::zeros(side);
        b.set(i, j, 1.0);
        b
    }

    #[test]
    fn grid_geometry() {
        let grid = GridSpec::new(70, 6).unwrap();
        assert_eq!(grid.window_count(), 65);
        assert_eq!(grid.window(0).0, -1.0);
        assert_eq!(grid.window(64).1, 1.0);
        assert!((grid.delta() - 12.0 / 70.0).abs() < 1e-16);
        assert!((grid.spacing() * 70.0 - 2.0).abs() < 1e-15);
        assert_eq!(GridSpec::new(10, 10).unwrap().window_count(), 1);
        assert!(GridSpec::new(10, 11).is_err());
        assert!(GridSpec::new(10, 0).is_err());
        let parsed: std::result::Result<GridSpec, _> = serde_json::from_str(r#"{"k":4,"l":9}"#);
        assert!(parsed.is_err());
    }

    #[test]
    fn transform_examples() {
        let m = MomentVector::new(vec![1.0, 0.25, -0.3]).unwrap();
        assert_eq!(transform_eval(0.77, &unit(3, 0, 0), &m).unwrap(), 1.0);
        assert!((transform_eval(0.4, &unit(3, 1, 1), &m).unwrap() - 0.1).abs() < 1e-16);
        let short = MomentVector::new(vec![1.0]).unwrap();
        assert!(matches!(
            transform_eval(0.1, &unit(3, 0, 0), &short),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn transform_matches_double_sum() {
        let side = 5;
        let flat: Vec<f64> = (0..side * side).map(|k| ((k * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let b = KernelCoefficients::from_flat(side, flat).unwrap();
        let m = MomentVector::new(vec![1.0, -0.2, 0.4, 0.1, -0.05]).unwrap();
        let w = -0.3_f64;
        let mut naive = 0.0;
        for i in 0..side {
            for j in 0..side {
                naive += b.get(i, j) * (i as f64 * w.acos()).cos() * m.values()[j];
            }
        }
        assert!((transform_eval(w, &b, &m).unwrap() - naive).abs() < 1e-13);
    }

    #[test]
    fn window_strength_examples() {
        let s = Spectrum::new(vec![-0.5, 0.0, 1.0], vec![0.25, 0.25, 0.5]).unwrap();
        assert!((window_strength(&s, -1.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(window_strength(&s, -1.0, -0.6), 0.0);
        // half-open on the right away from the edge
        assert_eq!(window_strength(&s, -0.5, 0.0), 0.25);
    }

    #[test]
    fn residuals_of_zero_kernel() {
        let grid = GridSpec::new(10, 2).unwrap();
        let s = Spectrum::new(vec![-0.95, 0.05, 0.33], vec![0.2, 0.3, 0.5]).unwrap();
        let m = moments(&s, 4).unwrap();
        let r = residual_vector(&KernelCoefficients::zeros(4), &m, &s, &grid).unwrap();
        assert_eq!(r.values().len(), 9);
        for (l, (a, b)) in grid.windows().enumerate() {
            assert_eq!(r.values()[l], -window_strength(&s, a, b));
        }
        // window 7 is [0.4, 0.8)
        assert_eq!(r.values()[7], 0.0);
    }

    #[test]
    fn norm_examples() {
        assert_eq!(cost_infinity(&ResidualVector(vec![0.0; 3])), 0.0);
        assert_eq!(cost_infinity(&ResidualVector(vec![0.1, -0.3, 0.2])), 0.3);
        assert_eq!(cost_upper(&ResidualVector(vec![3.0, 4.0])), 5.0);
        assert_eq!(cost_upper(&ResidualVector(vec![0.0; 4])), 0.0);
    }

    #[test]
    fn single_window_partition() {
        let grid = GridSpec::new(8, 7).unwrap();
        let s = Spectrum::new(vec![-0.2, 0.9], vec![0.6, 0.4]).unwrap();
        let m = moments(&s, 3).unwrap();
        let b = KernelCoefficients::from_flat(3, vec![0.5, 0.1, 0.0, 0.2, -0.3, 0.4, 1.0, 0.0, 2.0]).unwrap();
        let c = b.effective(&m).unwrap();
        let (a, end) = grid.window(0);
        let expected: f64 = (0..3)
            .map(|i| c[i] * crate::chebyshev::segment_integral(i, a, end).unwrap())
            .sum::<f64>()
            - window_strength(&s, a, end);
        let r = residual_vector(&b, &m, &s, &grid).unwrap();
        assert!((r.values()[0] - expected).abs() < 1e-15);
    }
}
