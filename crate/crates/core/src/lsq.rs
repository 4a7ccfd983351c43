//! Per-sample least-squares kernels.
//!
//! `C_U²` depends on `b` only through `c = b m`, so the minimization is carried
//! out over `c` (`min ‖A c - B‖₂`, minimum-norm when rank deficient) and the
//! result is lifted back to the minimum-Frobenius-norm `b` with `b m = c`.

use nalgebra::{DMatrix, DVector, SVD};

use crate::chebyshev::{segment_integrals_unchecked, MomentVector, Spectrum};
use crate::cost::{window_strengths, GridSpec, KernelCoefficients};
use crate::error::{Error, Result};
use crate::response::DatasetSample;

/// `A[l][i] = ∫_{window l} T_i(ω) dω`. Depends only on the grid and `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    grid: GridSpec,
    matrix: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn moment_count(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[(row, col)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    /// `A c` as a plain vector.
    pub fn apply(&self, c: &[f64]) -> Result<Vec<f64>> {
        if c.len() != self.moment_count() {
            return Err(Error::mismatch("design matrix", self.moment_count(), c.len()));
        }
        Ok((&self.matrix * DVector::from_column_slice(c)).as_slice().to_vec())
    }

    /// `‖A c - B‖₂`, i.e. `C_U` of the transform with effective coefficients `c`.
    pub fn cost_upper(&self, c: &[f64], target: &TargetVector) -> Result<f64> {
        let ac = self.apply(c)?;
        if ac.len() != target.0.len() {
            return Err(Error::mismatch("target vector", ac.len(), target.0.len()));
        }
        Ok(ac
            .iter()
            .zip(&target.0)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt())
    }
}

/// Window strengths `B[l]` of a spectrum on the design grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetVector(pub Vec<f64>);

impl TargetVector {
    pub fn from_spectrum(spectrum: &Spectrum, grid: &GridSpec) -> Self {
        Self(window_strengths(spectrum, grid))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

pub fn build_design_matrix(grid: &GridSpec, moment_count: usize) -> Result<DesignMatrix> {
    if moment_count == 0 {
        return Err(Error::invalid("moment count must be >= 1"));
    }
    let rows = grid.window_count();
    let mut matrix = DMatrix::zeros(rows, moment_count);
    let mut buf = vec![0.0; moment_count];
    for (l, (a, b)) in grid.windows().enumerate() {
        segment_integrals_unchecked(&mut buf, a, b);
        for (i, v) in buf.iter().enumerate() {
            matrix[(l, i)] = *v;
        }
    }
    Ok(DesignMatrix {
        grid: *grid,
        matrix,
    })
}

fn cutoff(matrix: &DMatrix<f64>, svd: &SVD<f64, nalgebra::Dyn, nalgebra::Dyn>) -> f64 {
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |m, v| m.max(*v));
    matrix.nrows().max(matrix.ncols()) as f64 * f64::EPSILON * sigma_max
}

/// Minimum-norm least-squares solver for a fixed design matrix.
///
/// Holds the pseudo-inverse so that many samples on the same grid can be
/// solved with one matrix-vector product each.
#[derive(Clone, Debug)]
pub struct LeastSquaresSolver {
    design: DesignMatrix,
    pseudo_inverse: DMatrix<f64>,
    rank: usize,
}

impl LeastSquaresSolver {
    pub fn new(design: DesignMatrix) -> Result<Self> {
        if design.matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("design matrix has non-finite entries"));
        }
        let svd = SVD::new(design.matrix.clone(), true, true);
        let eps = cutoff(&design.matrix, &svd);
        let rank = svd.rank(eps);
        let pseudo_inverse = svd
            .pseudo_inverse(eps)
            .map_err(|e| Error::invalid(format!("pseudo-inverse failed: {e}")))?;
        Ok(Self {
            design,
            pseudo_inverse,
            rank,
        })
    }

    pub fn for_grid(grid: &GridSpec, moment_count: usize) -> Result<Self> {
        Self::new(build_design_matrix(grid, moment_count)?)
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn solve(&self, target: &TargetVector) -> Result<Vec<f64>> {
        if target.0.len() != self.design.rows() {
            return Err(Error::mismatch("target vector", self.design.rows(), target.0.len()));
        }
        if target.0.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("target vector has non-finite entries"));
        }
        let b = DVector::from_column_slice(&target.0);
        Ok((&self.pseudo_inverse * b).as_slice().to_vec())
    }

    /// Least-squares effective coefficients for one spectrum.
    pub fn solve_spectrum(&self, spectrum: &Spectrum) -> Result<Vec<f64>> {
        self.solve(&TargetVector::from_spectrum(spectrum, self.design.grid()))
    }
}

/// `argmin_c ‖A c - B‖₂`, minimum-norm among minimizers. Singular values below
/// `max(rows, cols) · ε · σ_max` are treated as zero.
pub fn solve_effective_coefficients(design: &DesignMatrix, target: &TargetVector) -> Result<Vec<f64>> {
    if target.0.len() != design.rows() {
        return Err(Error::mismatch("target vector", design.rows(), target.0.len()));
    }
    if target.0.iter().chain(design.matrix.iter()).any(|v| !v.is_finite()) {
        return Err(Error::invalid("least-squares inputs must be finite"));
    }
    let svd = SVD::new(design.matrix.clone(), true, true);
    let eps = cutoff(&design.matrix, &svd);
    let b = DVector::from_column_slice(&target.0);
    let c = svd
        .solve(&b, eps)
        .map_err(|e| Error::invalid(format!("least-squares solve failed: {e}")))?;
    Ok(c.as_slice().to_vec())
}

/// `b_ij = c_i m_j / ‖m‖²`: the smallest-Frobenius-norm matrix with `b m = c`.
pub fn lift_coefficients(c: &[f64], moments: &MomentVector) -> Result<KernelCoefficients> {
    let m = moments.values();
    if c.len() != m.len() {
        return Err(Error::mismatch("lift", m.len(), c.len()));
    }
    let norm2: f64 = m.iter().map(|v| v * v).sum();
    if !(norm2 > 0.0) {
        return Err(Error::invalid("cannot lift onto a zero moment vector"));
    }
    let side = m.len();
    let mut entries = Vec::with_capacity(side * side);
    for ci in c {
        let scale = ci / norm2;
        entries.extend(m.iter().map(|mj| scale * mj));
    }
    KernelCoefficients::from_flat(side, entries)
}

/// `b^(min)` for a sample: solve in `c`-space, then lift.
pub fn solve_sample_target(sample: &DatasetSample, design: &DesignMatrix) -> Result<KernelCoefficients> {
    if sample.moments.len() != design.moment_count() {
        return Err(Error::mismatch(
            "sample moments",
            design.moment_count(),
            sample.moments.len(),
        ));
    }
    let target = TargetVector::from_spectrum(&sample.spectrum, design.grid());
    let c = solve_effective_coefficients(design, &target)?;
    lift_coefficients(&c, &sample.moments)
}
