//! Principal-component fits over elite point sets and the covariance
//! transform that pushes an n-dimensional search covariance into the
//! retained k-dimensional subspace.
//!
//! Conventions: data are decentralized by their componentwise mean, the data
//! covariance uses divisor `m` (number of points), rows of the projection
//! are the top-k eigenvectors, and each row's sign is canonicalized so that
//! its largest-magnitude entry is positive. The transform rule is the
//! bilinear double sum `C'_{i,j} = sum_a sum_b P_{i,a} P_{j,b} C_{a,b}`,
//! i.e. `P C P^T`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{eig_sym, Mat, SymMatrix};

/// How the retained dimension k is chosen from the variance spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    /// Keep exactly k components (clamped to `[1, n-1]` and to the data rank).
    Fixed(usize),
    /// Keep the smallest k whose cumulative explained variance reaches the
    /// threshold, clamped to `[2, n-1]` and to the data rank.
    VarianceThreshold(f64),
}

impl Default for KRule {
    fn default() -> Self {
        KRule::VarianceThreshold(0.95)
    }
}

/// Eigenvalues of a data covariance, descending, with the running fraction
/// of total variance they account for.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSpectrum {
    pub eigenvalues: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// A fitted linear reduction: `project(x) = P (x - center)` maps into the
/// retained subspace, `back_map(y) = P^T y + center` lifts back.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMap {
    p: Mat,
    center: Vec<f64>,
    explained: Vec<f64>,
}

impl ProjectionMap {
    /// Wraps explicit rows after checking they are orthonormal within 1e-10.
    pub fn from_rows(p: Mat, center: Vec<f64>) -> Result<Self> {
        let k = p.rows();
        let n = p.cols();
        if k == 0 || k > n || center.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: center.len(),
            });
        }
        for i in 0..k {
            for j in 0..k {
                let dot: f64 = p.row(i).iter().zip(p.row(j)).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return Err(Error::InvalidParams(format!(
                        "projection rows {i} and {j} are not orthonormal (dot = {dot})"
                    )));
                }
            }
        }
        Ok(Self::from_rows_unchecked(p, center))
    }

    /// Wraps rows without the orthonormality check. Needed for general linear
    /// coordinate changes (the covariance transform is defined for any P);
    /// `project`/`back_map` are only mutual inverses for orthonormal rows.
    pub fn from_rows_unchecked(p: Mat, center: Vec<f64>) -> Self {
        let k = p.rows();
        Self {
            p,
            center,
            explained: vec![0.0; k],
        }
    }

    /// Retained dimension.
    pub fn k(&self) -> usize {
        self.p.rows()
    }

    /// Ambient dimension.
    pub fn n(&self) -> usize {
        self.p.cols()
    }

    /// Projection rows (k×n); rows are the principal directions.
    pub fn rows(&self) -> &Mat {
        &self.p
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// Fraction of total variance per retained component, descending.
    /// All zeros for maps built directly from rows.
    pub fn explained(&self) -> &[f64] {
        &self.explained
    }

    /// `P (x - center)`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                got: x.len(),
            });
        }
        let centered: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        Ok(self.p.mul_vec(&centered))
    }

    /// `P^T y + center`.
    pub fn back_map(&self, y: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.lift_displacement(y)?;
        for (o, c) in out.iter_mut().zip(&self.center) {
            *o += c;
        }
        Ok(out)
    }

    /// `P^T y` without the center: lifts a displacement (a vector relative
    /// to whatever origin the caller manages, e.g. the search mean).
    pub fn lift_displacement(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.k() {
            return Err(Error::DimensionMismatch {
                expected: self.k(),
                got: y.len(),
            });
        }
        let mut out = vec![0.0; self.n()];
        for (j, &yj) in y.iter().enumerate() {
            for (o, &pji) in out.iter_mut().zip(self.p.row(j)) {
                *o += pji * yj;
            }
        }
        Ok(out)
    }
}

/// Eigenvalues below `1e-12 · λ_max` count as numerically zero rank.
fn numerical_rank(values: &[f64]) -> usize {
    let lam_max = values.first().copied().unwrap_or(0.0);
    values.iter().filter(|&&v| v > 1e-12 * lam_max).count()
}

/// Spectrum of the divisor-m data covariance of `points`.
///
/// Negative eigenvalues from roundoff are treated as zero variance. Errors
/// with [`Error::DegenerateData`] when total variance is zero (fewer than
/// two distinct points).
pub fn variance_spectrum(points: &[Vec<f64>]) -> Result<VarianceSpectrum> {
    let cov = data_covariance(points)?.1;
    let e = eig_sym(&cov)?;
    let clamped: Vec<f64> = e.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 || total.is_nan() {
        return Err(Error::DegenerateData);
    }
    let mut acc = 0.0;
    let cumulative: Vec<f64> = clamped
        .iter()
        .map(|&v| {
            acc += v / total;
            acc
        })
        .collect();
    Ok(VarianceSpectrum {
        eigenvalues: e.values,
        cumulative,
    })
}

/// Componentwise mean and divisor-m covariance of the point set.
fn data_covariance(points: &[Vec<f64>]) -> Result<(Vec<f64>, SymMatrix)> {
    let m = points.len();
    if m < 2 {
        return Err(Error::DegenerateData);
    }
    let n = points[0].len();
    for p in points {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: p.len(),
            });
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput);
        }
    }
    if n < 3 {
        return Err(Error::DimensionTooSmallForPca(n));
    }
    let mf = m as f64;
    let center: Vec<f64> = (0..n)
        .map(|i| points.iter().map(|p| p[i]).sum::<f64>() / mf)
        .collect();
    let cov = SymMatrix::from_fn(n, |i, j| {
        points
            .iter()
            .map(|p| (p[i] - center[i]) * (p[j] - center[j]))
            .sum::<f64>()
            / mf
    });
    Ok((center, cov))
}

/// Fits a PCA reduction on `points`.
///
/// The projection rows are the top-k eigenvectors of the data covariance,
/// sign-canonicalized (largest-magnitude entry of each row positive). k is
/// chosen by `k_rule`, then clamped to the numerical rank of the data so no
/// zero-variance direction is ever retained, and kept strictly below n.
pub fn fit_pca(points: &[Vec<f64>], k_rule: KRule) -> Result<ProjectionMap> {
    let (center, cov) = data_covariance(points)?;
    let n = cov.n();
    let e = eig_sym(&cov)?;
    let clamped: Vec<f64> = e.values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();
    if total <= 0.0 || total.is_nan() {
        return Err(Error::DegenerateData);
    }
    let rank = numerical_rank(&e.values);

    let k = match k_rule {
        KRule::Fixed(k0) => {
            if k0 == 0 {
                return Err(Error::InvalidParams("fixed k must be at least 1".into()));
            }
            k0.clamp(1, n - 1)
        }
        KRule::VarianceThreshold(tau) => {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::InvalidParams(
                    "variance threshold must lie in (0, 1]".into(),
                ));
            }
            let mut acc = 0.0;
            let mut k_raw = n;
            for (i, &v) in clamped.iter().enumerate() {
                acc += v / total;
                if acc >= tau - 1e-12 {
                    k_raw = i + 1;
                    break;
                }
            }
            k_raw.clamp(2.min(n - 1), n - 1)
        }
    };
    let k = k.min(rank).max(1);

    let mut p = Mat::zeros(k, n);
    for r in 0..k {
        // Eigenvectors are basis columns; canonicalize each row's sign by its
        // largest-magnitude entry (first such entry on ties).
        let mut pivot = 0;
        for i in 1..n {
            if e.basis.get(i, r).abs() > e.basis.get(pivot, r).abs() {
                pivot = i;
            }
        }
        let flip = if e.basis.get(pivot, r) < 0.0 {
            -1.0
        } else {
            1.0
        };
        for i in 0..n {
            p.set(r, i, flip * e.basis.get(i, r));
        }
    }
    let explained: Vec<f64> = clamped[..k].iter().map(|&v| v / total).collect();
    Ok(ProjectionMap {
        p,
        center,
        explained,
    })
}

/// Pushes a covariance through the map: `C' = P C P^T`, the bilinear
/// double-sum rule, valid for any linear P.
pub fn transform_covariance(c_old: &SymMatrix, map: &ProjectionMap) -> Result<SymMatrix> {
    if map.n() != c_old.n() {
        return Err(Error::DimensionMismatch {
            expected: map.n(),
            got: c_old.n(),
        });
    }
    let n = map.n();
    let k = map.k();
    // t[a][j] = sum_b C[a][b] P[j][b]
    let t = Mat::from_fn(n, k, |a, j| {
        (0..n).map(|b| c_old.get(a, b) * map.p.get(j, b)).sum()
    });
    Ok(SymMatrix::from_fn(k, |i, j| {
        (0..n).map(|a| map.p.get(i, a) * t.get(a, j)).sum()
    }))
}
