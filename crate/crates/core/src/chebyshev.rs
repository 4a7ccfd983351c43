//! Chebyshev polynomials of the first kind on `[-1, 1]`, their exact segment
//! integrals, spectrum rescaling and moment extraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Arguments within this distance outside `[-1, 1]` are clamped onto the edge.
pub const EDGE_TOLERANCE: f64 = 1e-14;

/// Tolerance on `Σ s_k = 1` accepted by [`Spectrum::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

fn check_unit(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("non-finite argument {x}")));
    }
    if x.abs() <= 1.0 {
        Ok(x)
    } else if x.abs() <= 1.0 + EDGE_TOLERANCE {
        Ok(x.signum())
    } else {
        Err(Error::domain(format!(
            "argument {x} outside [-1, 1]; was the spectrum rescaled?"
        )))
    }
}

/// `T_n(x)` by the three-term recurrence.
pub fn cheb_eval(degree: usize, x: f64) -> Result<f64> {
    let x = check_unit(x)?;
    Ok(eval_unchecked(degree, x))
}

fn eval_unchecked(degree: usize, x: f64) -> f64 {
    match degree {
        0 => 1.0,
        1 => x,
        _ => {
            let (mut prev, mut cur) = (1.0, x);
            for _ in 1..degree {
                let next = 2.0 * x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// `[T_0(x), …, T_{count-1}(x)]` in a single recurrence pass.
pub fn cheb_eval_all(count: usize, x: f64) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::invalid("cheb_eval_all needs count >= 1"));
    }
    let x = check_unit(x)?;
    let mut out = vec![0.0; count];
    fill_unchecked(&mut out, x);
    Ok(out)
}

/// Writes `T_j(x)` into `out[j]`; `x` must already lie in `[-1, 1]`.
pub(crate) fn fill_unchecked(out: &mut [f64], x: f64) {
    if let Some(t0) = out.get_mut(0) {
        *t0 = 1.0;
    }
    if let Some(t1) = out.get_mut(1) {
        *t1 = x;
    }
    for j in 2..out.len() {
        out[j] = 2.0 * x * out[j - 1] - out[j - 2];
    }
}

fn antiderivative(degree: usize, x: f64) -> f64 {
    match degree {
        0 => x,
        1 => 0.5 * x * x,
        n => {
            let up = eval_unchecked(n + 1, x) / (n + 1) as f64;
            let down = eval_unchecked(n - 1, x) / (n - 1) as f64;
            0.5 * (up - down)
        }
    }
}

/// Exact `∫_a^b T_degree(ω) dω` from the closed-form antiderivative.
pub fn segment_integral(degree: usize, a: f64, b: f64) -> Result<f64> {
    let a = check_unit(a)?;
    let b = check_unit(b)?;
    if a > b {
        return Err(Error::invalid(format!(
            "segment endpoints out of order: {a} > {b}"
        )));
    }
    Ok(antiderivative(degree, b) - antiderivative(degree, a))
}

/// Writes `∫_a^b T_i` for `i = 0..out.len()` with endpoints already validated.
pub(crate) fn segment_integrals_unchecked(out: &mut [f64], a: f64, b: f64) {
    let n = out.len();
    let mut ta = vec![0.0; n + 1];
    let mut tb = vec![0.0; n + 1];
    fill_unchecked(&mut ta, a);
    fill_unchecked(&mut tb, b);
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = match i {
            0 => b - a,
            1 => 0.5 * (b * b - a * a),
            _ => {
                let up = (tb[i + 1] - ta[i + 1]) / (i + 1) as f64;
                let down = (tb[i - 1] - ta[i - 1]) / (i - 1) as f64;
                0.5 * (up - down)
            }
        };
    }
}

/// Maps raw energies from `[e0, emax]` onto `[-1, 1]`.
pub fn rescale_spectrum(raw_energies: &[f64], e0: f64, emax: f64) -> Result<Vec<f64>> {
    if !(e0 < emax) {
        return Err(Error::invalid(format!(
            "energy bounds must satisfy E0 < Emax, got {e0} and {emax}"
        )));
    }
    let width = emax - e0;
    raw_energies
        .iter()
        .map(|&e| {
            if !(e0..=emax).contains(&e) {
                return Err(Error::domain(format!(
                    "energy {e} outside [{e0}, {emax}]"
                )));
            }
            let x = (2.0 * e - (e0 + emax)) / width;
            Ok(x.clamp(-1.0, 1.0))
        })
        .collect()
}

/// Inverse of [`rescale_spectrum`].
pub fn unscale_spectrum(scaled: &[f64], e0: f64, emax: f64) -> Vec<f64> {
    scaled
        .iter()
        .map(|&x| 0.5 * (x * (emax - e0) + (e0 + emax)))
        .collect()
}

/// A discrete response: Dirac deltas at `eigenvalues` with weights summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
}

impl Spectrum {
    pub fn new(eigenvalues: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::invalid("spectrum needs at least one eigenvalue"));
        }
        if eigenvalues.len() != weights.len() {
            return Err(Error::mismatch("spectrum", eigenvalues.len(), weights.len()));
        }
        let eigenvalues = eigenvalues
            .into_iter()
            .map(check_unit)
            .collect::<Result<Vec<_>>>()?;
        if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid(format!("negative or non-finite weight {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self {
            eigenvalues,
            weights,
        })
    }

    /// A single delta at `x` carrying all the weight.
    pub fn delta(x: f64) -> Result<Self> {
        Self::new(vec![x], vec![1.0])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.eigenvalues.iter().copied().zip(self.weights.iter().copied())
    }
}

/// The first `M` Chebyshev moments `m_j = Σ_k s_k T_j(λ_k)` of a spectrum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MomentVector(Vec<f64>);

impl MomentVector {
    /// Wraps externally supplied moments. Only finiteness and non-emptiness are
    /// checked; moments of a valid spectrum additionally have `m_0 = 1`.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("moment vector must not be empty"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("moment vector has non-finite entries"));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// The leading `count` moments.
    pub fn truncated(&self, count: usize) -> Result<Self> {
        if count == 0 || count > self.0.len() {
            return Err(Error::invalid(format!(
                "cannot truncate {} moments to {count}",
                self.0.len()
            )));
        }
        Ok(Self(self.0[..count].to_vec()))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

pub fn moments(spectrum: &Spectrum, count: usize) -> Result<MomentVector> {
    if count == 0 {
        return Err(Error::invalid("moment count must be >= 1"));
    }
    let mut acc = vec![0.0; count];
    let mut t = vec![0.0; count];
    for (lambda, weight) in spectrum.iter() {
        fill_unchecked(&mut t, lambda);
        for (a, tj) in acc.iter_mut().zip(&t) {
            *a += weight * tj;
        }
    }
    Ok(MomentVector(acc))
}
