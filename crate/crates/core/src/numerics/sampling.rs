//! Multivariate normal sampling through the covariance eigenbasis.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::eigen::{eig_sym, eigenvalue_floor};
use crate::numerics::matrix::SymMatrix;

/// `E‖N(0, I_n)‖` via the usual expansion `√n (1 − 1/(4n) + 1/(21n²))`.
pub fn expected_norm(n: usize) -> f64 {
    let n = n as f64;
    n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
}

/// Draws `n` iid standard normal coordinates in index order.
pub fn sample_standard(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Draws `count` samples `x = mean + scale · B · diag(√λ) · z` with
/// `z ~ N(0, I)`, where `B, λ` come from the eigendecomposition of `cov`.
///
/// Eigenvalues below the shared floor are clamped, so rank-deficient
/// covariances yield well-defined (nearly flat) directions instead of NaNs.
/// Draw order is fixed: sample by sample, coordinate by coordinate.
pub fn sample_mvn(
    mean: &[f64],
    scale: f64,
    cov: &SymMatrix,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>> {
    if mean.len() != cov.n() {
        return Err(Error::DimensionMismatch {
            expected: cov.n(),
            got: mean.len(),
        });
    }
    if !scale.is_finite() || mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput);
    }
    let e = eig_sym(cov)?;
    let floor = eigenvalue_floor(&e.values);
    let sd: Vec<f64> = e.values.iter().map(|&v| v.max(floor).sqrt()).collect();
    let n = mean.len();

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let z = sample_standard(n, rng);
        let mut x = mean.to_vec();
        for (i, xi) in x.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in 0..n {
                acc += e.basis.get(i, k) * sd[k] * z[k];
            }
            *xi += scale * acc;
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rng::RngStream;

    #[test]
    fn expected_norm_tracks_the_exact_low_dimensional_values() {
        // Exact value at n = 1 is sqrt(2/pi).
        let exact1 = (2.0 / std::f64::consts::PI).sqrt();
        assert!((expected_norm(1) - exact1).abs() < 1e-2);
        // Grows with dimension and stays below sqrt(n).
        assert!(expected_norm(10) > expected_norm(5));
        assert!(expected_norm(10) < 10f64.sqrt());
    }

    #[test]
    fn zero_scale_returns_the_mean_exactly() {
        let mut rng = RngStream::new(3, 0).rng();
        let out = sample_mvn(&[5.0, 5.0], 0.0, &SymMatrix::identity(2), 4, &mut rng).unwrap();
        for x in out {
            assert_eq!(x, vec![5.0, 5.0]);
        }
    }

    #[test]
    fn same_stream_reproduces_samples_bitwise() {
        let cov = SymMatrix::identity(2);
        let a = sample_mvn(&[0.0, 0.0], 1.0, &cov, 8, &mut RngStream::new(9, 1).rng()).unwrap();
        let b = sample_mvn(&[0.0, 0.0], 1.0, &cov, 8, &mut RngStream::new(9, 1).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn diagonal_covariance_shapes_the_coordinate_variances() {
        let cov = SymMatrix::diag(&[100.0, 1.0]);
        let mut rng = RngStream::new(11, 0).rng();
        let samples = sample_mvn(&[0.0, 0.0], 1.0, &cov, 10_000, &mut rng).unwrap();
        let var = |k: usize| {
            let mean: f64 = samples.iter().map(|x| x[k]).sum::<f64>() / samples.len() as f64;
            samples.iter().map(|x| (x[k] - mean).powi(2)).sum::<f64>() / samples.len() as f64
        };
        let v0 = var(0);
        let v1 = var(1);
        assert!((90.0..110.0).contains(&v0), "var(x0) = {v0}");
        assert!((0.9..1.1).contains(&v1), "var(x1) = {v1}");
    }

    #[test]
    fn empirical_covariance_converges_to_the_target() {
        // Dense PSD target; 1e5 samples pin every entry well inside
        // 10% of trace(C).
        let cov = SymMatrix::from_fn(3, |i, j| if i == j { 2.0 + i as f64 } else { 0.8 });
        let mut rng = RngStream::new(5, 2).rng();
        let samples = sample_mvn(&[0.0, 0.0, 0.0], 1.0, &cov, 100_000, &mut rng).unwrap();
        let m = samples.len() as f64;
        let mean: Vec<f64> = (0..3)
            .map(|k| samples.iter().map(|x| x[k]).sum::<f64>() / m)
            .collect();
        let tol = 0.1 * cov.trace();
        for i in 0..3 {
            for j in 0..3 {
                let c: f64 = samples
                    .iter()
                    .map(|x| (x[i] - mean[i]) * (x[j] - mean[j]))
                    .sum::<f64>()
                    / m;
                assert!(
                    (c - cov.get(i, j)).abs() <= tol,
                    "cov({i},{j}): sample {c} vs target {}",
                    cov.get(i, j)
                );
            }
        }
    }

    #[test]
    fn mismatched_mean_length_is_rejected() {
        let mut rng = RngStream::new(0, 0).rng();
        let err = sample_mvn(&[0.0; 3], 1.0, &SymMatrix::identity(2), 1, &mut rng).unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 2,
                got: 3
            }
        ));
    }

    #[test]
    fn rank_deficient_covariance_still_samples_finite_points() {
        // Rank-one covariance: the dead direction is floored near zero.
        let cov = SymMatrix::from_fn(2, |_, _| 1.0);
        let mut rng = RngStream::new(1, 0).rng();
        let samples = sample_mvn(&[0.0, 0.0], 1.0, &cov, 100, &mut rng).unwrap();
        for x in &samples {
            assert!(x.iter().all(|v| v.is_finite()));
            // Components along (1, -1) are ~1e-6, not O(1).
            assert!((x[0] - x[1]).abs() < 1e-3);
        }
    }
}
