//! Cyclic Jacobi eigensolver for symmetric matrices. Dimensions here stay in
//! the tens, where Jacobi is simple, robust, and accurate to machine
//! precision; no external LAPACK-style dependency is warranted.

use crate::error::{Error, Result};
use crate::numerics::matrix::{Mat, SymMatrix};

const MAX_SWEEPS: usize = 64;

/// Eigendecomposition `M = B · diag(values) · B^T` of a symmetric matrix.
///
/// `values` are sorted descending and `basis` holds the matching eigenvectors
/// as columns, orthonormal to roughly machine precision.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub basis: Mat,
}

impl EigenDecomposition {
    /// Rebuilds `B · diag(values) · B^T`; test and sanity-check helper.
    pub fn reconstruct(&self) -> SymMatrix {
        let n = self.values.len();
        SymMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.basis.get(i, k) * self.values[k] * self.basis.get(j, k))
                .sum()
        })
    }
}

/// One Jacobi rotation applied to entries `(i, j)` and `(k, l)`.
#[inline]
fn rotate(m: &mut Mat, i: usize, j: usize, k: usize, l: usize, s: f64, tau: f64) {
    let g = m.get(i, j);
    let h = m.get(k, l);
    m.set(i, j, g - s * (h + g * tau));
    m.set(k, l, h + s * (g - h * tau));
}

/// Diagonalizes a symmetric matrix by cyclic Jacobi sweeps.
///
/// Returns eigenvalues sorted descending with eigenvectors as the columns of
/// an orthogonal basis. Rejects matrices containing NaN or infinities.
pub fn eig_sym(m: &SymMatrix) -> Result<EigenDecomposition> {
    if !m.is_finite() {
        return Err(Error::InvalidMatrix);
    }
    let n = m.n();
    let mut a = m.to_mat();
    let mut v = Mat::identity(n);
    // d carries the evolving diagonal; b and z implement the deferred
    // diagonal-update bookkeeping that keeps accumulation errors small.
    let mut d: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    let mut b = d.clone();
    let mut z = vec![0.0; n];

    for sweep in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.get(p, q).abs();
            }
        }
        // With the annihilation rule below, off underflows to exactly zero.
        if off == 0.0 {
            break;
        }
        let thresh = if sweep < 3 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };

        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                let g = 100.0 * a.get(p, q).abs();
                // After a few sweeps, zero out entries that are negligible
                // next to both diagonal neighbours.
                if sweep > 3 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a.set(p, q, 0.0);
                } else if a.get(p, q).abs() > thresh {
                    let mut h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        a.get(p, q) / h
                    } else {
                        let theta = 0.5 * h / a.get(p, q);
                        let t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            -t
                        } else {
                            t
                        }
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    h = t * a.get(p, q);
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a.set(p, q, 0.0);
                    for j in 0..p {
                        rotate(&mut a, j, p, j, q, s, tau);
                    }
                    for j in (p + 1)..q {
                        rotate(&mut a, p, j, j, q, s, tau);
                    }
                    for j in (q + 1)..n {
                        rotate(&mut a, p, j, q, j, s, tau);
                    }
                    for j in 0..n {
                        rotate(&mut v, j, p, j, q, s, tau);
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }

    // Sort descending by eigenvalue, permuting the basis columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[j].total_cmp(&d[i]));
    let values: Vec<f64> = order.iter().map(|&i| d[i]).collect();
    let basis = Mat::from_fn(n, n, |i, j| v.get(i, order[j]));
    Ok(EigenDecomposition { values, basis })
}

/// Eigenvalue floor shared by `inv_sqrt` and covariance sampling: tiny or
/// negative eigenvalues from roundoff are lifted to `1e-12 · max(λ_max, 1)`.
pub(crate) fn eigenvalue_floor(values: &[f64]) -> f64 {
    let lam_max = values.first().copied().unwrap_or(0.0);
    1e-12 * lam_max.max(1.0)
}

/// Computes `M^(-1/2)` through the eigendecomposition, clamping eigenvalues
/// at the shared floor so near-singular matrices stay invertible.
pub fn inv_sqrt(m: &SymMatrix) -> Result<SymMatrix> {
    let e = eig_sym(m)?;
    let floor = eigenvalue_floor(&e.values);
    let inv: Vec<f64> = e
        .values
        .iter()
        .map(|&v| 1.0 / v.max(floor).sqrt())
        .collect();
    let n = e.values.len();
    Ok(SymMatrix::from_fn(n, |i, j| {
        (0..n)
            .map(|k| e.basis.get(i, k) * inv[k] * e.basis.get(j, k))
            .sum()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;

    fn assert_orthonormal(basis: &Mat, tol: f64) {
        let n = basis.rows();
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|k| basis.get(k, i) * basis.get(k, j)).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (dot - want).abs() < tol,
                    "basis columns {i},{j} not orthonormal: dot = {dot}"
                );
            }
        }
    }

    fn assert_reconstructs(m: &SymMatrix, e: &EigenDecomposition, tol: f64) {
        let r = e.reconstruct();
        for i in 0..m.n() {
            for j in 0..m.n() {
                let want = m.get(i, j);
                let got = r.get(i, j);
                assert!(
                    (got - want).abs() <= tol * (1.0 + want.abs()),
                    "entry ({i},{j}): want {want}, got {got}"
                );
            }
        }
    }

    #[test]
    fn identity_has_unit_eigenvalues() {
        let e = eig_sym(&SymMatrix::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
        assert_orthonormal(&e.basis, 1e-12);
    }

    #[test]
    fn diagonal_matrix_yields_sorted_diagonal_and_axis_vectors() {
        let e = eig_sym(&SymMatrix::diag(&[1.0, 4.0])).unwrap();
        assert_eq!(e.values, vec![4.0, 1.0]);
        // Columns are signed coordinate axes.
        assert!((e.basis.get(1, 0).abs() - 1.0).abs() < 1e-12);
        assert!(e.basis.get(0, 0).abs() < 1e-12);
        assert!((e.basis.get(0, 1).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_by_two_with_coupling_gives_known_pair() {
        let m = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let e = eig_sym(&m).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        // Leading eigenvector is (1, 1)/sqrt(2) up to sign.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let dot = e.basis.get(0, 0) * s + e.basis.get(1, 0) * s;
        assert!(
            (dot.abs() - 1.0).abs() < 1e-12,
            "leading vector off: dot = {dot}"
        );
        assert_reconstructs(&m, &e, 1e-12);
    }

    #[test]
    fn non_finite_matrix_is_rejected() {
        let mut m = SymMatrix::identity(2);
        m.set_sym(0, 1, f64::NAN);
        assert!(matches!(eig_sym(&m), Err(Error::InvalidMatrix)));
    }

    #[test]
    fn random_psd_40x40_reconstructs_tightly() {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let n = 40;
        let a = Mat::from_fn(n, n, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        // A^T A is PSD by construction.
        let m = SymMatrix::from_mat_symmetrized(&a.transpose().matmul(&a));
        let e = eig_sym(&m).unwrap();
        assert!(
            e.values.windows(2).all(|w| w[0] >= w[1]),
            "values not descending"
        );
        assert!(
            e.values.iter().all(|&v| v > -1e-9),
            "PSD input produced negative eigenvalue"
        );
        assert_orthonormal(&e.basis, 1e-10);
        assert_reconstructs(&m, &e, 1e-9);
    }

    #[test]
    fn inv_sqrt_inverts_diagonal_squares() {
        let r = inv_sqrt(&SymMatrix::diag(&[4.0, 9.0])).unwrap();
        assert!((r.get(0, 0) - 0.5).abs() < 1e-12);
        assert!((r.get(1, 1) - 1.0 / 3.0).abs() < 1e-12);
        assert!(r.get(0, 1).abs() < 1e-12);
    }

    #[test]
    fn inv_sqrt_of_identity_is_identity() {
        let r = inv_sqrt(&SymMatrix::identity(4)).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((r.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn inv_sqrt_sandwich_recovers_identity() {
        let m = SymMatrix::from_fn(2, |i, j| if i == j { 2.0 } else { 1.0 });
        let r = inv_sqrt(&m).unwrap();
        // r * m * r == I within 1e-9.
        let prod = r.to_mat().matmul(&m.to_mat()).matmul(&r.to_mat());
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn inv_sqrt_handles_wide_eigenvalue_range() {
        // Eigenvalues spanning 1e-3 .. 1e3. The sandwich accuracy is limited
        // by the condition number times machine epsilon (~1e-10 here), so a
        // wider spread would demand more precision than f64 can deliver.
        let base = SymMatrix::diag(&[1e3, 1.0, 1e-3]);
        let e = eig_sym(&SymMatrix::from_fn(
            3,
            |i, j| {
                if i == j {
                    2.0
                } else {
                    -1.0
                }
            },
        ))
        .unwrap();
        // Use the basis of an unrelated symmetric matrix as the rotation.
        let q = e.basis;
        let m = SymMatrix::from_mat_symmetrized(&q.matmul(&base.to_mat()).matmul(&q.transpose()));
        let r = inv_sqrt(&m).unwrap();
        let prod = r.to_mat().matmul(&m.to_mat()).matmul(&r.to_mat());
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (prod.get(i, j) - want).abs() < 1e-8,
                    "sandwich entry ({i},{j}) = {}",
                    prod.get(i, j)
                );
            }
        }
    }

    #[test]
    fn inv_sqrt_clamps_singular_directions() {
        // Rank-one matrix: the null direction is floored, not inverted to inf.
        let m = SymMatrix::from_fn(2, |_, _| 1.0);
        let r = inv_sqrt(&m).unwrap();
        assert!(
            r.is_finite(),
            "singular input must still give finite output"
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn random_symmetric_matrices_decompose_cleanly(
            seed in 0u64..1_000,
            n in 1usize..12,
        ) {
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let m = SymMatrix::from_fn(n, |_, _| rng.random::<f64>() * 10.0 - 5.0);
            let e = eig_sym(&m).unwrap();
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
            assert_orthonormal(&e.basis, 1e-10);
            assert_reconstructs(&m, &e, 1e-9);
        }
    }
}
