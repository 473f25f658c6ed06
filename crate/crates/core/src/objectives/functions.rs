//! Base test-function formulas, evaluated in the canonical frame z (already
//! shifted and rotated by the instance). Construction convention: every base
//! satisfies `base(0) == 0` exactly and `base(z) >= 0` everywhere, so the
//! instance optimum is `f_opt` at `x_opt` by construction.

use std::f64::consts::PI;

/// One local optimum of a peak-composition landscape.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Peak {
    pub weight: f64,
    pub location: Vec<f64>,
    /// Diagonal of the quadratic form shaping the basin.
    pub scales: Vec<f64>,
}

pub(crate) fn sphere(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

/// Separable quadratic with condition number 1e6.
pub(crate) fn ellipsoid(z: &[f64]) -> f64 {
    let n = z.len();
    z.iter()
        .enumerate()
        .map(|(i, v)| 10f64.powf(6.0 * i as f64 / (n - 1) as f64) * v * v)
        .sum()
}

/// `10 (n - sum cos 2 pi z_i) + |z|^2`: ~10^n local optima on the unit grid.
pub(crate) fn rastrigin(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let cos_sum: f64 = z.iter().map(|v| (2.0 * PI * v).cos()).sum();
    10.0 * (n - cos_sum) + sphere(z)
}

/// 12-term truncated Weierstrass cosine sum per coordinate.
fn weierstrass_term(x: f64) -> f64 {
    let (a, b) = (0.5f64, 3.0f64);
    (0..12)
        .map(|k| a.powi(k) * (2.0 * PI * b.powi(k) * (x + 0.5)).cos())
        .sum()
}

/// Continuous, nowhere-differentiable-looking landscape; minimum 0 on the
/// integer grid. The correction term reuses the same expression at 0, so the
/// cancellation at z = 0 is exact.
pub(crate) fn weierstrass(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let total: f64 = z.iter().map(|&v| weierstrass_term(v)).sum();
    total - n * weierstrass_term(0.0)
}

/// Schaffers F7 over a diagonally conditioned frame; `cond` is the squared
/// scale ratio between the last and first coordinate.
pub(crate) fn schaffers_f7(z: &[f64], cond: f64) -> f64 {
    let n = z.len();
    let w: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, v)| cond.powf(0.5 * i as f64 / (n - 1) as f64) * v)
        .collect();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let s = (w[i] * w[i] + w[i + 1] * w[i + 1]).sqrt();
        acc += s.sqrt() * (1.0 + (50.0 * s.powf(0.2)).sin().powi(2));
    }
    (acc / (n - 1) as f64).powi(2)
}

/// Griewank-modulated Rosenbrock composite, shifted so the optimum sits at 0.
pub(crate) fn griewank_rosenbrock(z: &[f64]) -> f64 {
    let n = z.len();
    let v: Vec<f64> = z.iter().map(|x| x + 1.0).collect();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let s = 100.0 * (v[i] * v[i] - v[i + 1]).powi(2) + (v[i] - 1.0).powi(2);
        // Each term is >= 0 and exactly 0 at s = 0, keeping base(0) == 0.
        acc += s / 4000.0 - s.cos() + 1.0;
    }
    10.0 * acc / (n - 1) as f64
}

/// Location of the Schwefel sine optimum within one coordinate.
const SCHWEFEL_OPT: f64 = 420.9687462275036;

fn schwefel_g(w: f64) -> f64 {
    w * w.abs().sqrt().sin()
}

/// Deceptive sine landscape: the optimum basin hugs a corner of the domain.
/// Coordinates map to `[-500, 500]`-style Schwefel space via `100 z + w*`.
pub(crate) fn schwefel(z: &[f64]) -> f64 {
    let g_opt = schwefel_g(SCHWEFEL_OPT);
    z.iter()
        .map(|&v| {
            let zh = 100.0 * v + SCHWEFEL_OPT;
            let pen = (zh.abs() / 100.0 - 5.0).max(0.0);
            (g_opt - schwefel_g(zh)) / 100.0 + 100.0 * pen * pen
        })
        .sum()
}

/// Composition of Gaussian-shaped peaks; the strongest peak (weight 10 at
/// the origin) defines the global optimum: `(10 - max_j w_j e^(-q_j/2n))^2`.
pub(crate) fn gallagher(z: &[f64], peaks: &[Peak]) -> f64 {
    let n = z.len() as f64;
    let best = peaks
        .iter()
        .map(|p| {
            let quad: f64 = z
                .iter()
                .zip(&p.location)
                .zip(&p.scales)
                .map(|((zi, li), si)| si * (zi - li) * (zi - li))
                .sum();
            p.weight * (-quad / (2.0 * n)).exp()
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let d = 10.0 - best;
    d * d
}

/// Fractal-like product of dyadic distances; highly rugged, nearly flat
/// global structure.
pub(crate) fn katsuura(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let factor = 10.0 / (n * n);
    let expo = 10.0 / n.powf(1.2);
    let prod: f64 = z
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let s: f64 = (1..=32)
                .map(|j| {
                    let w = 2f64.powi(j) * v;
                    (w - w.round()).abs() / 2f64.powi(j)
                })
                .sum();
            (1.0 + (i as f64 + 1.0) * s).powf(expo)
        })
        .product();
    factor * (prod - 1.0)
}

/// Two-funnel Rastrigin: a sphere funnel at the optimum competes with a
/// shifted, slightly worse funnel.
pub(crate) fn lunacek_bi_rastrigin(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mu0 = 2.5f64;
    let d = 1.0;
    let s = 1.0 - 1.0 / (2.0 * (n + 20.0).sqrt() - 8.2);
    let mu1 = -((mu0 * mu0 - d) / s).sqrt();
    let sum1: f64 = z.iter().map(|v| v * v).sum();
    let sum2: f64 = z.iter().map(|v| (v + mu0 - mu1) * (v + mu0 - mu1)).sum();
    let cos_sum: f64 = z.iter().map(|v| (2.0 * PI * v).cos()).sum();
    sum1.min(d * n + s * sum2) + 10.0 * (n - cos_sum)
}
