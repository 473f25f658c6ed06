//! The three sampling variants sharing one generation loop.
//!
//! `Plain` samples every generation from the full n-dimensional search
//! distribution. `AlwaysPca` fits a PCA reduction on the most recent elite
//! set and samples inside the retained subspace every generation after the
//! first. `RandomPca(rho)` flips a seeded coin per generation. Whatever the
//! sampling space, candidates always carry full-dimensional displacements
//! (`x = mean + sigma * y` exactly), so the distribution updates are
//! identical across variants.
//!
//! Generation 0 is always plain: it produces the elite set the first PCA fit
//! needs. Two-dimensional problems never reduce (there is no room between 1
//! and n), so every variant degenerates to plain there.

use std::collections::VecDeque;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::es;
use crate::es::{
    sample_generation, score_displacements, update_from_population, EsParams, EsState,
    ScoredCandidate, TARGET_PRECISION,
};
use crate::numerics::{sample_mvn, RngStream};
use crate::objective::Objective;
use crate::pca::{fit_pca, transform_covariance, KRule, ProjectionMap};
use crate::trace::{Trace, TracePoint};

/// Which sampling rule a variant uses after the seeding generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    Plain,
    AlwaysPca,
    RandomPca,
}

/// Full configuration of one optimizer variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub kind: VariantKind,
    /// Per-generation probability of reducing; only read for `RandomPca`.
    pub rho: f64,
    /// How the retained dimension is chosen on each fit.
    pub pca_k_rule: KRule,
    /// Reduced-space sample count; `None` uses the full population size.
    pub theta: Option<usize>,
    /// How many recent elite sets are pooled for a fit. 1 = refit from the
    /// latest generation only.
    pub window: usize,
}

impl VariantSpec {
    pub fn plain() -> Self {
        Self {
            kind: VariantKind::Plain,
            rho: 0.0,
            pca_k_rule: KRule::default(),
            theta: None,
            window: 1,
        }
    }

    pub fn always_pca() -> Self {
        Self {
            kind: VariantKind::AlwaysPca,
            rho: 1.0,
            ..Self::plain()
        }
    }

    pub fn random_pca(rho: f64) -> Self {
        Self {
            kind: VariantKind::RandomPca,
            rho,
            ..Self::plain()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) || !self.rho.is_finite() {
            return Err(Error::InvalidParams("rho must lie in [0, 1]".into()));
        }
        if self.theta == Some(0) {
            return Err(Error::InvalidParams("theta must be at least 1".into()));
        }
        if self.window == 0 {
            return Err(Error::InvalidParams("window must be at least 1".into()));
        }
        if let KRule::VarianceThreshold(tau) = self.pca_k_rule {
            if !(tau > 0.0 && tau <= 1.0) {
                return Err(Error::InvalidParams(
                    "variance threshold must lie in (0, 1]".into(),
                ));
            }
        }
        Ok(())
    }

    /// Stable name used in result files and run-seed derivation.
    ///
    /// Gate probabilities 0 and 1 collapse to the variants they are provably
    /// identical to, so equivalent configurations produce byte-identical
    /// result files.
    pub fn canonical_label(&self) -> &'static str {
        match self.kind {
            VariantKind::Plain => "plain",
            VariantKind::AlwaysPca => "pca",
            VariantKind::RandomPca => {
                if self.rho == 0.0 {
                    "plain"
                } else if self.rho == 1.0 {
                    "pca"
                } else {
                    "pca-random"
                }
            }
        }
    }
}

/// What one generation did: sampling space, cost, and outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationLog {
    /// Generation index, 0-based.
    pub t: u64,
    /// Whether sampling happened in a PCA-reduced space.
    pub used_pca: bool,
    /// Retained dimension of that space, when used_pca.
    pub k: Option<usize>,
    /// Objective evaluations consumed by this generation.
    pub evals: u64,
    /// Best raw objective value among this generation's candidates.
    pub best_f: f64,
}

/// Driver for one run of one variant. Owns the evolving state, the sampling
/// and gate randomness, and the elite history the PCA fits consume.
pub struct VariantRunner<'a> {
    problem: &'a dyn Objective,
    params: &'a EsParams,
    spec: &'a VariantSpec,
    state: EsState,
    sample_rng: ChaCha12Rng,
    gate_rng: ChaCha12Rng,
    recent_elites: VecDeque<Vec<Vec<f64>>>,
    trace: Trace,
    logs: Vec<GenerationLog>,
    best_f: f64,
    f_opt: Option<f64>,
}

impl<'a> VariantRunner<'a> {
    /// Seeds a fresh run. The start mean is drawn uniformly from [-4, 4]^n
    /// (the same range instance optima are shifted within), and sampling and
    /// gating get independent child streams so the gate never perturbs the
    /// candidate draws.
    pub fn new(
        problem: &'a dyn Objective,
        params: &'a EsParams,
        spec: &'a VariantSpec,
        stream: RngStream,
    ) -> Result<Self> {
        spec.validate()?;
        let n = problem.dim();
        let mut init_rng = stream.derive_str("init").rng();
        let start_mean: Vec<f64> = (0..n)
            .map(|_| init_rng.random::<f64>() * 8.0 - 4.0)
            .collect();
        let state = es::init(n, params, &start_mean)?;
        Ok(Self {
            problem,
            params,
            spec,
            state,
            sample_rng: stream.derive_str("sample").rng(),
            gate_rng: stream.derive_str("gate").rng(),
            recent_elites: VecDeque::new(),
            trace: Vec::new(),
            logs: Vec::new(),
            best_f: f64::INFINITY,
            f_opt: problem.optimum_value(),
        })
    }

    pub fn state(&self) -> &EsState {
        &self.state
    }

    pub fn logs(&self) -> &[GenerationLog] {
        &self.logs
    }

    fn generation_index(&self) -> u64 {
        self.logs.len() as u64
    }

    fn remaining_budget(&self) -> u64 {
        self.params.budget.saturating_sub(self.state.evals_used)
    }

    fn gap(&self) -> f64 {
        self.best_f - self.f_opt.unwrap_or(0.0)
    }

    /// Records improvements and the generation log, then runs the
    /// distribution updates when the generation was full-sized.
    fn absorb_generation(
        &mut self,
        pop: Vec<ScoredCandidate>,
        evals_before: u64,
        used_pca: bool,
        k: Option<usize>,
    ) -> Result<()> {
        let mut gen_best = f64::INFINITY;
        for (i, c) in pop.iter().enumerate() {
            gen_best = gen_best.min(c.f);
            if c.f < self.best_f {
                self.best_f = c.f;
                self.trace.push(TracePoint {
                    evals: evals_before + i as u64 + 1,
                    gap: self.gap(),
                });
            }
        }
        self.logs.push(GenerationLog {
            t: self.generation_index(),
            used_pca,
            k,
            evals: pop.len() as u64,
            best_f: gen_best,
        });
        if pop.len() >= self.params.lambda_elite {
            let elites = update_from_population(&mut self.state, self.params, &pop)?;
            self.recent_elites
                .push_front(elites.into_iter().map(|e| e.x).collect());
            self.recent_elites.truncate(self.spec.window);
        }
        Ok(())
    }

    /// One generation sampled from the full n-dimensional distribution.
    pub fn plain_step(&mut self) -> Result<()> {
        let evals_before = self.state.evals_used;
        let pop = sample_generation(
            &mut self.state,
            self.params,
            self.problem,
            &mut self.sample_rng,
        )?;
        self.absorb_generation(pop, evals_before, false, None)
    }

    /// Draws reduced displacements from the transformed covariance and lifts
    /// them to full dimension through `P^T` (no centering: displacements are
    /// relative to the search mean).
    fn sample_reduced(&mut self, map: &ProjectionMap, count: usize) -> Result<Vec<Vec<f64>>> {
        let ck = transform_covariance(&self.state.cov, map)?;
        let zero = vec![0.0; map.k()];
        let reduced = sample_mvn(&zero, 1.0, &ck, count, &mut self.sample_rng)?;
        reduced
            .into_iter()
            .map(|y| map.lift_displacement(&y))
            .collect()
    }

    /// One generation sampled inside a PCA reduction of the elite history.
    /// Falls back to a plain generation (logged with `used_pca = false`)
    /// when no usable fit exists: n < 3, no elites yet, or degenerate data.
    pub fn pca_step(&mut self) -> Result<()> {
        if self.problem.dim() < 3 || self.recent_elites.is_empty() {
            return self.plain_step();
        }
        let points: Vec<Vec<f64>> = self
            .recent_elites
            .iter()
            .flat_map(|set| set.iter().cloned())
            .collect();
        let map = match fit_pca(&points, self.spec.pca_k_rule) {
            Ok(map) => map,
            Err(Error::DegenerateData) | Err(Error::DimensionTooSmallForPca(_)) => {
                return self.plain_step();
            }
            Err(e) => return Err(e),
        };
        let theta = self.spec.theta.unwrap_or(self.params.lambda_sample);
        let count = (theta as u64).min(self.remaining_budget()) as usize;
        let evals_before = self.state.evals_used;
        let k = map.k();
        let ys = self.sample_reduced(&map, count)?;
        let pop = score_displacements(&mut self.state, self.problem, ys);
        self.absorb_generation(pop, evals_before, true, Some(k))
    }

    /// Flips the seeded gate coin: reduce with probability `rho`, else plain.
    pub fn gated_step(&mut self) -> Result<()> {
        let u: f64 = self.gate_rng.random();
        if u < self.spec.rho {
            self.pca_step()
        } else {
            self.plain_step()
        }
    }

    /// Dispatches one generation per the variant rules: generation 0 and all
    /// generations of 2-D problems are plain.
    pub fn step(&mut self) -> Result<()> {
        if self.generation_index() == 0 || self.problem.dim() < 3 {
            return self.plain_step();
        }
        match self.spec.kind {
            VariantKind::Plain => self.plain_step(),
            VariantKind::AlwaysPca => self.pca_step(),
            VariantKind::RandomPca => self.gated_step(),
        }
    }

    /// Runs generations until the budget is spent, the target precision is
    /// reached (when the problem exposes its optimum), or the state diverges.
    pub fn run(mut self) -> Result<(EsState, Trace, Vec<GenerationLog>)> {
        while self.remaining_budget() > 0 {
            self.step()?;
            if self.state.diverged {
                break;
            }
            if self.f_opt.is_some() && self.gap() <= TARGET_PRECISION {
                break;
            }
        }
        // Close the trace at the final consumed evaluation count.
        let consumed = self.state.evals_used;
        if self.trace.last().map(|p| p.evals) != Some(consumed) && consumed > 0 {
            let gap = self.gap();
            self.trace.push(TracePoint {
                evals: consumed,
                gap,
            });
        }
        Ok((self.state, self.trace, self.logs))
    }
}

/// Full run of one variant on one problem under one seed stream.
pub fn run_variant(
    problem: &dyn Objective,
    params: &EsParams,
    spec: &VariantSpec,
    stream: RngStream,
) -> Result<(EsState, Trace, Vec<GenerationLog>)> {
    params.validate()?;
    VariantRunner::new(problem, params, spec, stream)?.run()
}
