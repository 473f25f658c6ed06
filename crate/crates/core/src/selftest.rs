//! Fast embedded consistency checks, runnable from the CLI. Each check
//! recomputes a known quantity through an independent path (a double-sum
//! oracle, a bitwise replay, a hand-computed fixture) and compares.
//!
//! The whole battery is designed to finish in well under a minute.

use crate::bench::stats::{compute_ecdf, compute_ert};
use crate::bench::RunTrace;
use crate::error::Result;
use crate::es::EsParams;
use crate::numerics::{eig_sym, Mat, RngStream, SymMatrix};
use crate::objectives::make_instance;
use crate::pca::{transform_covariance, ProjectionMap};
use crate::strategy::{run_variant, VariantSpec};
use crate::trace::TracePoint;

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Human-readable explanation, filled in on failure.
    pub detail: String,
}

impl CheckResult {
    fn pass(name: &'static str) -> Self {
        CheckResult {
            name,
            passed: true,
            detail: String::new(),
        }
    }

    fn fail(name: &'static str, detail: String) -> Self {
        CheckResult {
            name,
            passed: false,
            detail,
        }
    }
}

/// The covariance transform under test; parameterized so the test suite can
/// feed a deliberately corrupted implementation and watch the check fail.
pub type CovarianceTransform = dyn Fn(&SymMatrix, &ProjectionMap) -> Result<SymMatrix>;

/// Verifies `P C P^T` entry-wise against the explicit double sum
/// `sum_{a,b} P[i][a] C[a][b] P[j][b]` on a hand fixture and on a seeded
/// random matrix.
pub fn check_transform(transform: &CovarianceTransform) -> CheckResult {
    const NAME: &str = "covariance-transform-oracle";
    // Fixture: y1 = x1 - x3, y2 = -x1 + x2 over c11 = 4, c13 = 1 gives the
    // cross-covariance c13 - c11 = -3.
    let p = match Mat::from_rows(&[vec![1.0, 0.0, -1.0], vec![-1.0, 1.0, 0.0]]) {
        Ok(p) => p,
        Err(e) => return CheckResult::fail(NAME, format!("fixture construction: {e}")),
    };
    let map = ProjectionMap::from_rows_unchecked(p, vec![0.0; 3]);
    let mut c = SymMatrix::identity(3);
    c.set_sym(0, 0, 4.0);
    c.set_sym(0, 2, 1.0);
    match transform(&c, &map) {
        Ok(t) => {
            if t.get(0, 1) != -3.0 {
                return CheckResult::fail(
                    NAME,
                    format!("fixture cross-covariance: expected -3, got {}", t.get(0, 1)),
                );
            }
        }
        Err(e) => return CheckResult::fail(NAME, format!("fixture transform failed: {e}")),
    }
    // Random case: seeded symmetric C and a seeded general P, checked
    // against the double sum within 1e-12 relative.
    let mut rng = RngStream::new(20_240_501, 3).rng();
    let mut draw = move || {
        use rand::Rng;
        rng.random::<f64>() * 2.0 - 1.0
    };
    let n = 6;
    let k = 3;
    let c = {
        let m = Mat::from_fn(n, n, |_, _| draw());
        SymMatrix::from_mat_symmetrized(&m)
    };
    let p = Mat::from_fn(k, n, |_, _| draw());
    let map = ProjectionMap::from_rows_unchecked(p, vec![0.0; n]);
    let t = match transform(&c, &map) {
        Ok(t) => t,
        Err(e) => return CheckResult::fail(NAME, format!("random transform failed: {e}")),
    };
    for i in 0..k {
        for j in 0..k {
            let mut want = 0.0;
            for a in 0..n {
                for b in 0..n {
                    want += map.rows().get(i, a) * c.get(a, b) * map.rows().get(j, b);
                }
            }
            let got = t.get(i, j);
            if (got - want).abs() > 1e-12 * (1.0 + want.abs()) {
                return CheckResult::fail(
                    NAME,
                    format!("entry ({i},{j}): transform {got} vs double sum {want}"),
                );
            }
        }
    }
    CheckResult::pass(NAME)
}

/// The gated variant at gate probability 0 must replay the plain variant
/// bitwise, and at probability 1 the always-reduced variant, because the
/// gate draws from its own stream and never touches the sampling stream.
pub fn check_variant_collapse() -> CheckResult {
    const NAME: &str = "variant-gate-collapse";
    let run = |spec: &VariantSpec| -> Result<Vec<TracePoint>> {
        let inst = make_instance("sphere", 4, 9)?;
        let params = EsParams::defaults(4, 160);
        let (_, trace, _) = run_variant(&inst, &params, spec, RngStream::new(11, 5))?;
        Ok(trace)
    };
    let pairs = [
        (
            VariantSpec::plain(),
            VariantSpec::random_pca(0.0),
            "plain vs gate 0",
        ),
        (
            VariantSpec::always_pca(),
            VariantSpec::random_pca(1.0),
            "always vs gate 1",
        ),
    ];
    for (a, b, what) in pairs {
        let (ta, tb) = match (run(&a), run(&b)) {
            (Ok(ta), Ok(tb)) => (ta, tb),
            (Err(e), _) | (_, Err(e)) => {
                return CheckResult::fail(NAME, format!("{what}: run failed: {e}"))
            }
        };
        if ta.len() != tb.len()
            || ta
                .iter()
                .zip(&tb)
                .any(|(x, y)| x.evals != y.evals || x.gap.to_bits() != y.gap.to_bits())
        {
            return CheckResult::fail(NAME, format!("{what}: traces differ"));
        }
    }
    CheckResult::pass(NAME)
}

fn fixture_trace(rep: u32, points: &[(u64, f64)]) -> RunTrace {
    RunTrace {
        variant: "v".into(),
        function_id: "f".into(),
        dim: 2,
        rep,
        seed: 0,
        points: points
            .iter()
            .map(|&(evals, gap)| TracePoint { evals, gap })
            .collect(),
        diverged: false,
        gen_logs: Vec::new(),
    }
}

/// ERT on a two-run fixture: one success at 100 evals plus one failure that
/// consumed 300 must give (100 + 300) / 1 = 400.
pub fn check_ert_fixture() -> CheckResult {
    const NAME: &str = "ert-fixture";
    let a = fixture_trace(0, &[(100, 1e-9)]);
    let b = fixture_trace(1, &[(300, 5.0)]);
    match compute_ert([&a, &b], 1e-8) {
        Ok(est) if est.ert == 400.0 && est.successes == 1 => CheckResult::pass(NAME),
        Ok(est) => CheckResult::fail(
            NAME,
            format!(
                "expected ERT 400 with 1 success, got {} with {}",
                est.ert, est.successes
            ),
        ),
        Err(e) => CheckResult::fail(NAME, format!("{e}")),
    }
}

/// ECDF on a two-run, two-target fixture whose proportions are 1/4, 2/4, 2/4.
pub fn check_ecdf_fixture() -> CheckResult {
    const NAME: &str = "ecdf-fixture";
    let t1 = fixture_trace(0, &[(4, 0.5), (8, 0.05)]);
    let t2 = fixture_trace(1, &[(8, 7.0)]);
    let curve = compute_ecdf(&[&t1, &t2], &[1.0, 0.1], &[2.0, 4.0, 8.0]);
    let got: Vec<f64> = curve.points.iter().map(|p| p.proportion).collect();
    if got == [0.25, 0.5, 0.5] {
        CheckResult::pass(NAME)
    } else {
        CheckResult::fail(NAME, format!("expected [0.25, 0.5, 0.5], got {got:?}"))
    }
}

/// Eigendecomposition must reconstruct a seeded symmetric matrix to 1e-9.
pub fn check_eigen_reconstruction() -> CheckResult {
    const NAME: &str = "eigen-reconstruction";
    let mut rng = RngStream::new(314, 1).rng();
    let m = Mat::from_fn(8, 8, |_, _| {
        use rand::Rng;
        rng.random::<f64>() * 4.0 - 2.0
    });
    let c = SymMatrix::from_mat_symmetrized(&m);
    let dec = match eig_sym(&c) {
        Ok(d) => d,
        Err(e) => return CheckResult::fail(NAME, format!("decomposition failed: {e}")),
    };
    let back = dec.reconstruct();
    for i in 0..8 {
        for j in 0..8 {
            let (got, want) = (back.get(i, j), c.get(i, j));
            if (got - want).abs() > 1e-9 * (1.0 + want.abs()) {
                return CheckResult::fail(
                    NAME,
                    format!("entry ({i},{j}): reconstructed {got} vs {want}"),
                );
            }
        }
    }
    CheckResult::pass(NAME)
}

/// Runs the whole battery against the production implementations.
pub fn run_all() -> Vec<CheckResult> {
    vec![
        check_transform(&|c, m| transform_covariance(c, m)),
        check_variant_collapse(),
        check_ert_fixture(),
        check_ecdf_fixture(),
        check_eigen_reconstruction(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Instant;

    #[test]
    fn the_full_battery_passes_quickly() {
        let started = Instant::now();
        let results = run_all();
        assert_eq!(results.len(), 5);
        for r in &results {
            assert!(r.passed, "{} failed: {}", r.name, r.detail);
        }
        assert!(
            started.elapsed().as_secs() < 60,
            "self-test battery must stay fast, took {:?}",
            started.elapsed()
        );
    }

    #[test]
    fn a_corrupted_transform_is_caught() {
        // Negative control: nudge one entry and the oracle must object.
        let corrupted = |c: &SymMatrix, m: &ProjectionMap| -> Result<SymMatrix> {
            let mut t = transform_covariance(c, m)?;
            let bumped = t.get(0, 0) + 1e-6;
            t.set_sym(0, 0, bumped);
            Ok(t)
        };
        let result = check_transform(&corrupted);
        assert!(
            !result.passed,
            "corrupted transform slipped past the oracle"
        );
        assert!(!result.detail.is_empty());
    }

    #[test]
    fn check_names_are_unique() {
        let names: Vec<&str> = run_all().iter().map(|r| r.name).collect();
        let mut dedup = names.clone();
        dedup.sort_unstable();
        dedup.dedup();
        assert_eq!(dedup.len(), names.len());
    }
}
