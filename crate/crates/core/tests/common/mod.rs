#![allow(dead_code)]

use chebkern::Spectrum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

fn adaptive(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: (f64, f64, f64),
    tol: f64,
    depth: u32,
) -> f64 {
    let (m, fm, s) = whole;
    let left = simpson(f, a, fa, m, fm);
    let right = simpson(f, m, fm, b, fb);
    let diff = left.2 + right.2 - s;
    if depth == 0 || diff.abs() <= 15.0 * tol {
        return left.2 + right.2 + diff / 15.0;
    }
    adaptive(f, a, fa, m, fm, left, tol / 2.0, depth - 1) + adaptive(f, m, fm, b, fb, right, tol / 2.0, depth - 1)
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`, started from 64 panels so
/// narrow peaks are not stepped over.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let f: &dyn Fn(f64) -> f64 = &f;
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|i| {
            let lo = a + h * i as f64;
            let hi = if i + 1 == panels { b } else { lo + h };
            let (fa, fb) = (f(lo), f(hi));
            let whole = simpson(f, lo, fa, hi, fb);
            adaptive(f, lo, fa, hi, fb, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// `∫_a^b T_n(x) dx` computed as `∫ cos(nθ) sin θ dθ` over the matching angles.
pub fn cheb_integral_oracle(n: usize, a: f64, b: f64) -> f64 {
    let (ta, tb) = (a.clamp(-1.0, 1.0).acos(), b.clamp(-1.0, 1.0).acos());
    integrate(|t| (n as f64 * t).cos() * t.sin(), tb, ta, 1e-14)
}

pub fn cos_identity(n: usize, x: f64) -> f64 {
    (n as f64 * x.clamp(-1.0, 1.0).acos()).cos()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_spectrum<R: Rng>(rng: &mut R, len: usize) -> Spectrum {
    let eigs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let raw: Vec<f64> = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Spectrum::new(eigs, raw.iter().map(|w| w / total).collect()).unwrap()
}
