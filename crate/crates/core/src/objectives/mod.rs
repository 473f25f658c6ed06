//! Seeded multi-modal test-function suite.
//!
//! Each problem instance owns a hidden optimum location `x_opt` (uniform in
//! `[-4, 4]^n`), an optimum value `f_opt` (uniform in `[-100, 100]`), and for
//! non-separable functions a seeded rotation. Evaluation maps the query into
//! the canonical frame `z = R (x - x_opt)`, applies the base formula (zero at
//! the origin, nonnegative everywhere), and adds an out-of-bounds penalty
//! `sum_i max(0, |x_i| - 5)^2`, so the global optimum is exactly
//! `f(x_opt) = f_opt`.
//!
//! Instance construction is a pure function of `(function_id, dim, seed)`:
//! the same triple always yields bitwise-identical landscapes.

mod functions;

use functions::Peak;
use rand::Rng;

use crate::error::{Error, Result};
use crate::numerics::{fnv1a64, Mat, RngStream};
use crate::objective::Objective;

/// Function ids of the rotated multi-modal benchmark set, in canonical order.
pub const MULTIMODAL_SUITE: [&str; 10] = [
    "rastrigin-rotated",
    "weierstrass",
    "schaffers-f7",
    "schaffers-f7-ill",
    "griewank-rosenbrock",
    "schwefel",
    "gallagher-101",
    "gallagher-21",
    "katsuura",
    "lunacek-bi-rastrigin",
];

/// Smooth separable functions used for smoke tests and calibration.
pub const SANITY_SUITE: [&str; 2] = ["sphere", "ellipsoid"];

/// Named set of benchmark functions selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Multimodal,
    Sanity,
    All,
}

impl Suite {
    pub fn parse(name: &str) -> Result<Suite> {
        match name {
            "paper-multimodal" | "multimodal" => Ok(Suite::Multimodal),
            "sanity" => Ok(Suite::Sanity),
            "all" => Ok(Suite::All),
            other => Err(Error::UnknownFunction(other.to_string())),
        }
    }

    pub fn function_ids(self) -> Vec<&'static str> {
        match self {
            Suite::Multimodal => MULTIMODAL_SUITE.to_vec(),
            Suite::Sanity => SANITY_SUITE.to_vec(),
            Suite::All => {
                let mut ids = SANITY_SUITE.to_vec();
                ids.extend_from_slice(&MULTIMODAL_SUITE);
                ids
            }
        }
    }
}

/// Returns true if `id` names a known benchmark function.
pub fn is_known_function(id: &str) -> bool {
    SANITY_SUITE.contains(&id) || MULTIMODAL_SUITE.contains(&id)
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Sphere,
    Ellipsoid,
    Rastrigin,
    Weierstrass,
    Schaffers { cond: f64 },
    GriewankRosenbrock,
    Schwefel,
    Gallagher { peaks: Vec<Peak> },
    Katsuura,
    Lunacek,
}

/// A fully materialized benchmark problem: function, dimension, hidden
/// optimum, and frame. Cheap to share across threads (read-only after
/// construction).
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    function_id: String,
    dim: usize,
    seed: u64,
    x_opt: Vec<f64>,
    f_opt: f64,
    rotation: Option<Mat>,
    kind: Kind,
}

/// Number of Gaussian peaks (including the global one) in the two
/// peak-composition landscapes.
const GALLAGHER_PEAKS: [(&str, usize); 2] = [("gallagher-101", 101), ("gallagher-21", 21)];

/// Builds the peak set: the global peak has weight 10, unit scales, and sits
/// at the canonical origin; the rest get descending weights in [1.1, 9.1],
/// random centers in [-4.9, 4.9]^n, and log-uniform basin scales.
fn build_peaks(n: usize, count: usize, rng: &mut impl Rng) -> Vec<Peak> {
    let mut peaks = Vec::with_capacity(count);
    peaks.push(Peak {
        weight: 10.0,
        location: vec![0.0; n],
        scales: vec![1.0; n],
    });
    for j in 1..count {
        let weight = 1.1 + 8.0 * (count - 1 - j) as f64 / (count - 1) as f64;
        let location = (0..n).map(|_| rng.random::<f64>() * 9.8 - 4.9).collect();
        let scales = (0..n)
            .map(|_| 10f64.powf(rng.random::<f64>() * 2.0 - 1.0))
            .collect();
        peaks.push(Peak {
            weight,
            location,
            scales,
        });
    }
    peaks
}

fn make_kind(function_id: &str, n: usize, rng: &mut impl Rng) -> Result<Kind> {
    Ok(match function_id {
        "sphere" => Kind::Sphere,
        "ellipsoid" => Kind::Ellipsoid,
        "rastrigin-rotated" => Kind::Rastrigin,
        "weierstrass" => Kind::Weierstrass,
        "schaffers-f7" => Kind::Schaffers { cond: 10.0 },
        "schaffers-f7-ill" => Kind::Schaffers { cond: 1000.0 },
        "griewank-rosenbrock" => Kind::GriewankRosenbrock,
        "schwefel" => Kind::Schwefel,
        "katsuura" => Kind::Katsuura,
        "lunacek-bi-rastrigin" => Kind::Lunacek,
        id => {
            if let Some((_, count)) = GALLAGHER_PEAKS.iter().find(|(name, _)| *name == id) {
                Kind::Gallagher {
                    peaks: build_peaks(n, *count, rng),
                }
            } else {
                return Err(Error::UnknownFunction(id.to_string()));
            }
        }
    })
}

/// Draws a uniformly random rotation by Gram-Schmidt orthonormalization of a
/// Gaussian matrix. A second orthogonalization pass keeps the columns
/// orthonormal to near machine precision even in high dimension.
pub(crate) fn seeded_rotation(n: usize, rng: &mut impl Rng) -> Mat {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n)
            .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
            .collect();
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= dot * ci;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // A degenerate draw is astronomically unlikely; redraw keeps the
        // stream deterministic either way.
        if norm < 1e-8 {
            continue;
        }
        for x in &mut v {
            *x /= norm;
        }
        cols.push(v);
    }
    Mat::from_fn(n, n, |i, j| cols[j][i])
}

/// Builds the instance for `(function_id, dim, seed)` deterministically.
pub fn make_instance(function_id: &str, dim: usize, seed: u64) -> Result<ProblemInstance> {
    if !is_known_function(function_id) {
        return Err(Error::UnknownFunction(function_id.to_string()));
    }
    if dim < 2 {
        return Err(Error::DimensionTooSmall(dim));
    }
    let stream = RngStream::new(
        seed,
        fnv1a64(format!("instance|{function_id}|{dim}").as_bytes()),
    );
    let x_opt: Vec<f64> = {
        let mut rng = stream.derive_str("xopt").rng();
        (0..dim).map(|_| rng.random::<f64>() * 8.0 - 4.0).collect()
    };
    let f_opt = stream.derive_str("fopt").rng().random::<f64>() * 200.0 - 100.0;
    let kind = {
        let mut rng = stream.derive_str("shape").rng();
        make_kind(function_id, dim, &mut rng)?
    };
    // The sanity functions stay separable; every multi-modal instance gets
    // its own rotation so coordinate-wise exploits cannot help.
    let rotation = if matches!(kind, Kind::Sphere | Kind::Ellipsoid) {
        None
    } else {
        let mut rng = stream.derive_str("rotation").rng();
        Some(seeded_rotation(dim, &mut rng))
    };
    Ok(ProblemInstance {
        function_id: function_id.to_string(),
        dim,
        seed,
        x_opt,
        f_opt,
        rotation,
        kind,
    })
}

impl ProblemInstance {
    pub fn function_id(&self) -> &str {
        &self.function_id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The value attained at the hidden optimum.
    pub fn f_opt(&self) -> f64 {
        self.f_opt
    }

    /// The hidden optimum location.
    pub fn x_opt(&self) -> &[f64] {
        &self.x_opt
    }

    /// Evaluates the instance at `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput);
        }
        let shifted: Vec<f64> = x.iter().zip(&self.x_opt).map(|(a, b)| a - b).collect();
        let z = match &self.rotation {
            Some(r) => r.mul_vec(&shifted),
            None => shifted,
        };
        let base = match &self.kind {
            Kind::Sphere => functions::sphere(&z),
            Kind::Ellipsoid => functions::ellipsoid(&z),
            Kind::Rastrigin => functions::rastrigin(&z),
            Kind::Weierstrass => functions::weierstrass(&z),
            Kind::Schaffers { cond } => functions::schaffers_f7(&z, *cond),
            Kind::GriewankRosenbrock => functions::griewank_rosenbrock(&z),
            Kind::Schwefel => functions::schwefel(&z),
            Kind::Gallagher { peaks } => functions::gallagher(&z, peaks),
            Kind::Katsuura => functions::katsuura(&z),
            Kind::Lunacek => functions::lunacek_bi_rastrigin(&z),
        };
        let penalty: f64 = x
            .iter()
            .map(|v| {
                let excess = (v.abs() - 5.0).max(0.0);
                excess * excess
            })
            .sum();
        Ok(self.f_opt + base + penalty)
    }
}

impl Objective for ProblemInstance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.evaluate(x).unwrap_or(f64::INFINITY)
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(self.f_opt)
    }
}

/// Tracks evaluations spent against a fixed budget. The owner decides what
/// to do when the budget runs out; `charge` refuses to overdraw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalCounter {
    used: u64,
    budget: u64,
}

impl EvalCounter {
    pub fn new(budget: u64) -> EvalCounter {
        EvalCounter { used: 0, budget }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn remaining(&self) -> u64 {
        self.budget - self.used
    }

    pub fn is_exhausted(&self) -> bool {
        self.used >= self.budget
    }

    /// Records `count` evaluations; errors if that would exceed the budget.
    pub fn charge(&mut self, count: u64) -> Result<()> {
        if count > self.remaining() {
            return Err(Error::InvalidParams(format!(
                "evaluation budget exceeded: {} used + {count} requested > {} total",
                self.used, self.budget
            )));
        }
        self.used += count;
        Ok(())
    }
}
