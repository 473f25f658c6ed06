//! Evolution strategy core: covariance matrix adaptation with cumulative
//! step-size control and uniformly weighted elites.
//!
//! One generation samples `lambda_sample` candidates from
//! `N(mean, sigma^2 C)`, keeps the best `lambda_elite`, and then updates, in
//! this order and all reading the pre-update state: mean, step-size path and
//! step size, covariance path, covariance. The covariance update combines a
//! rank-one term from the evolution path with an unweighted rank-mu term over
//! the elite displacements.

use crate::error::{Error, Result};
use crate::numerics::{expected_norm, inv_sqrt, sample_mvn, SymMatrix};
use crate::objective::Objective;
use crate::strategy::{run_variant, VariantSpec};
use crate::trace::Trace;
use crate::RngStream;

/// Step-size values outside this range flag the run as diverged.
const SIGMA_MIN: f64 = 1e-300;
const SIGMA_MAX: f64 = 1e300;

/// Optimality gap at which a run counts as solved and stops.
pub const TARGET_PRECISION: f64 = 1e-8;

/// Learning rates and population sizes for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct EsParams {
    /// Candidates sampled per generation (the population size).
    pub lambda_sample: usize,
    /// Elites kept for the updates.
    pub lambda_elite: usize,
    /// Mean learning rate.
    pub alpha_mu: f64,
    /// Step-size path learning rate.
    pub alpha_sigma: f64,
    /// Step-size damping.
    pub d_sigma: f64,
    /// Covariance path learning rate.
    pub alpha_cp: f64,
    /// Rank-one covariance learning rate.
    pub alpha_c1: f64,
    /// Rank-mu covariance learning rate.
    pub alpha_clambda: f64,
    /// Initial step size.
    pub sigma0: f64,
    /// Total objective-evaluation budget for the run.
    pub budget: u64,
}

impl EsParams {
    /// Standard parameterization for dimension `n`.
    ///
    /// Population `4 + floor(3 ln n)` with half kept as elites; rates follow
    /// the usual dimension-dependent schedules, with the rank-mu rate capped
    /// at `lambda/n^2` and the convexity of the covariance update preserved.
    pub fn defaults(n: usize, budget: u64) -> Self {
        let nf = n as f64;
        let lambda_sample = 4 + (3.0 * nf.ln()).floor() as usize;
        let lambda_elite = (lambda_sample / 2).max(1);
        let le = lambda_elite as f64;
        let alpha_sigma = (le + 2.0) / (nf + le + 5.0);
        let alpha_c1 = 2.0 / ((nf + 1.3).powi(2) + le);
        let alpha_clambda = (le / (nf * nf)).min(1.0 - alpha_c1);
        Self {
            lambda_sample,
            lambda_elite,
            alpha_mu: 1.0,
            alpha_sigma,
            d_sigma: 1.0 + alpha_sigma,
            alpha_cp: 4.0 / (nf + 4.0),
            alpha_c1,
            alpha_clambda,
            sigma0: 2.0,
            budget,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if self.lambda_sample == 0 {
            return bad("lambda_sample must be at least 1");
        }
        if self.lambda_elite == 0 || self.lambda_elite > self.lambda_sample {
            return bad("lambda_elite must satisfy 1 <= lambda_elite <= lambda_sample");
        }
        for (name, v) in [
            ("alpha_mu", self.alpha_mu),
            ("alpha_sigma", self.alpha_sigma),
            ("alpha_cp", self.alpha_cp),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(&format!("{name} must lie in (0, 1]"));
            }
        }
        for (name, v) in [
            ("alpha_c1", self.alpha_c1),
            ("alpha_clambda", self.alpha_clambda),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(&format!("{name} must lie in [0, 1]"));
            }
        }
        if self.alpha_c1 + self.alpha_clambda > 1.0 {
            return bad("alpha_c1 + alpha_clambda must not exceed 1");
        }
        if self.d_sigma <= 0.0 || self.d_sigma.is_nan() {
            return bad("d_sigma must be positive");
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return bad("sigma0 must be positive and finite");
        }
        if self.budget == 0 {
            return bad("budget must be at least 1");
        }
        Ok(())
    }
}

/// Full search-distribution state after `t` generations.
#[derive(Debug, Clone)]
pub struct EsState {
    pub mean: Vec<f64>,
    pub sigma: f64,
    pub cov: SymMatrix,
    /// Step-size evolution path.
    pub p_sigma: Vec<f64>,
    /// Covariance evolution path.
    pub p_c: Vec<f64>,
    /// Completed update generations.
    pub t: u64,
    pub evals_used: u64,
    /// Best point evaluated so far with its objective value.
    pub best_seen: Option<(Vec<f64>, f64)>,
    /// Set when the step size leaves `[1e-300, 1e300]` or the state goes
    /// non-finite; the run stops and is reported as diverged.
    pub diverged: bool,
}

/// A sampled point: `x = mean + sigma * y` with fitness `f`.
///
/// `y` is the unscaled displacement actually drawn (or lifted from a reduced
/// space); the covariance update consumes `y`, never `x`.
#[derive(Debug, Clone)]
pub struct ScoredCandidate {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: f64,
}

/// Fresh state centered at `start_mean` with isotropic unit covariance.
pub fn init(n: usize, params: &EsParams, start_mean: &[f64]) -> Result<EsState> {
    if n < 2 {
        return Err(Error::DimensionTooSmall(n));
    }
    params.validate()?;
    if start_mean.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: start_mean.len(),
        });
    }
    if start_mean.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput);
    }
    Ok(EsState {
        mean: start_mean.to_vec(),
        sigma: params.sigma0,
        cov: SymMatrix::identity(n),
        p_sigma: vec![0.0; n],
        p_c: vec![0.0; n],
        t: 0,
        evals_used: 0,
        best_seen: None,
        diverged: false,
    })
}

/// Records `(x, f)` into `best_seen` if it improves on it.
pub(crate) fn absorb_best(state: &mut EsState, x: &[f64], f: f64) {
    let improves = state.best_seen.as_ref().is_none_or(|(_, best)| f < *best);
    if improves {
        state.best_seen = Some((x.to_vec(), f));
    }
}

/// Scores a batch of displacement vectors at `x = mean + sigma * y`,
/// charging the budget and folding results into `best_seen`. Non-finite
/// objective values become `+inf` fitness.
pub(crate) fn score_displacements(
    state: &mut EsState,
    objective: &dyn Objective,
    ys: Vec<Vec<f64>>,
) -> Vec<ScoredCandidate> {
    let mut pop = Vec::with_capacity(ys.len());
    for y in ys {
        let x: Vec<f64> = state
            .mean
            .iter()
            .zip(&y)
            .map(|(m, yi)| m + state.sigma * yi)
            .collect();
        let raw = objective.value(&x);
        let f = if raw.is_finite() { raw } else { f64::INFINITY };
        absorb_best(state, &x, f);
        state.evals_used += 1;
        pop.push(ScoredCandidate { x, y, f });
    }
    pop
}

/// Samples and scores one plain generation from `N(mean, sigma^2 C)`.
///
/// Draws `min(lambda_sample, remaining budget)` candidates, so the final
/// generation of a run may be short. Returns them in sampling order.
pub fn sample_generation(
    state: &mut EsState,
    params: &EsParams,
    objective: &dyn Objective,
    rng: &mut impl rand::Rng,
) -> Result<Vec<ScoredCandidate>> {
    if objective.dim() != state.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: state.mean.len(),
            got: objective.dim(),
        });
    }
    let remaining = params.budget.saturating_sub(state.evals_used);
    let count = (params.lambda_sample as u64).min(remaining) as usize;
    let zero = vec![0.0; state.mean.len()];
    let ys = sample_mvn(&zero, 1.0, &state.cov, count, rng)?;
    Ok(score_displacements(state, objective, ys))
}

/// Best `lambda_elite` candidates by fitness, ties resolved by sampling
/// order. Returns fewer when the population itself is smaller.
pub fn select_elites(pop: &[ScoredCandidate], lambda_elite: usize) -> Vec<ScoredCandidate> {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&i, &j| pop[i].f.total_cmp(&pop[j].f));
    order
        .into_iter()
        .take(lambda_elite.min(pop.len()))
        .map(|i| pop[i].clone())
        .collect()
}

/// New mean: a step of length `alpha_mu` toward the elite average.
pub fn update_mean(state: &EsState, elites: &[ScoredCandidate], params: &EsParams) -> Vec<f64> {
    let le = elites.len() as f64;
    state
        .mean
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let avg_shift: f64 = elites.iter().map(|e| e.x[i] - m).sum::<f64>() / le;
            m + params.alpha_mu * avg_shift
        })
        .collect()
}

/// Step-size path and step-size update, both reading the pre-update state.
///
/// `p' = (1 - a_s) p + sqrt(a_s (2 - a_s) lambda) C^(-1/2) (m' - m) / sigma`,
/// then `sigma' = sigma * exp((a_s / d_s) (|p'| / E|N(0,I)| - 1))`.
pub fn update_sigma(
    state: &EsState,
    params: &EsParams,
    new_mean: &[f64],
) -> Result<(Vec<f64>, f64)> {
    let n = state.mean.len();
    let a = params.alpha_sigma;
    let coeff = (a * (2.0 - a) * params.lambda_elite as f64).sqrt();
    let cinv = inv_sqrt(&state.cov)?;
    let delta: Vec<f64> = new_mean
        .iter()
        .zip(&state.mean)
        .map(|(nm, m)| (nm - m) / state.sigma)
        .collect();
    let whitened = cinv.mul_vec(&delta);
    let p_new: Vec<f64> = (0..n)
        .map(|i| (1.0 - a) * state.p_sigma[i] + coeff * whitened[i])
        .collect();
    let norm = p_new.iter().map(|v| v * v).sum::<f64>().sqrt();
    let sigma_new = state.sigma * ((a / params.d_sigma) * (norm / expected_norm(n) - 1.0)).exp();
    Ok((p_new, sigma_new))
}

/// Covariance path and covariance update, both reading the pre-update state.
///
/// `pc' = (1 - a_cp) pc + sqrt(a_cp (2 - a_cp) lambda) (m' - m) / sigma`, then
/// `C' = (1 - a_c1 - a_cl) C + a_c1 pc' pc'^T + a_cl (1/lambda) sum y y^T`.
pub fn update_cov(
    state: &EsState,
    params: &EsParams,
    new_mean: &[f64],
    elites: &[ScoredCandidate],
) -> (Vec<f64>, SymMatrix) {
    let n = state.mean.len();
    let a = params.alpha_cp;
    let coeff = (a * (2.0 - a) * params.lambda_elite as f64).sqrt();
    let pc_new: Vec<f64> = (0..n)
        .map(|i| (1.0 - a) * state.p_c[i] + coeff * (new_mean[i] - state.mean[i]) / state.sigma)
        .collect();
    let le = elites.len() as f64;
    let keep = 1.0 - params.alpha_c1 - params.alpha_clambda;
    let cov_new = SymMatrix::from_fn(n, |i, j| {
        let rank_mu: f64 = elites.iter().map(|e| e.y[i] * e.y[j]).sum::<f64>() / le;
        keep * state.cov.get(i, j)
            + params.alpha_c1 * pc_new[i] * pc_new[j]
            + params.alpha_clambda * rank_mu
    });
    (pc_new, cov_new)
}

/// Runs the full post-sampling update chain on a scored population and
/// commits it, returning the elites for callers that reuse them.
///
/// All updates read the generation-`t` state; nothing is committed until
/// every new quantity is computed. Sets `diverged` instead of propagating
/// non-finite state.
pub fn update_from_population(
    state: &mut EsState,
    params: &EsParams,
    pop: &[ScoredCandidate],
) -> Result<Vec<ScoredCandidate>> {
    let elites = select_elites(pop, params.lambda_elite);
    let new_mean = update_mean(state, &elites, params);
    let (p_sigma, sigma_new) = update_sigma(state, params, &new_mean)?;
    let (p_c, cov_new) = update_cov(state, params, &new_mean, &elites);

    let finite = sigma_new.is_finite()
        && new_mean.iter().all(|v| v.is_finite())
        && p_sigma.iter().all(|v| v.is_finite())
        && p_c.iter().all(|v| v.is_finite())
        && cov_new.is_finite();
    if !finite || !(SIGMA_MIN..=SIGMA_MAX).contains(&sigma_new) {
        state.diverged = true;
    }
    state.mean = new_mean;
    state.sigma = sigma_new;
    state.cov = cov_new;
    state.p_sigma = p_sigma;
    state.p_c = p_c;
    state.t += 1;
    Ok(elites)
}

/// Full plain run: generations of sample / select / update until the budget
/// is exhausted, the target precision is reached, or the state diverges.
pub fn run(
    problem: &dyn Objective,
    params: &EsParams,
    stream: RngStream,
) -> Result<(EsState, Trace)> {
    let (state, trace, _logs) = run_variant(problem, params, &VariantSpec::plain(), stream)?;
    Ok((state, trace))
}
