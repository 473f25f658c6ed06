//! Convergence traces: the best-so-far optimality gap as a function of the
//! number of objective evaluations consumed.

/// One improvement event. `evals` is the cumulative evaluation count at which
/// the best-so-far value dropped to leave a gap of `gap` above the optimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub evals: u64,
    pub gap: f64,
}

/// Improvement events in evaluation order, closed by a final point at the
/// last consumed evaluation. `evals` is strictly increasing and `gap` is
/// non-increasing along the trace.
pub type Trace = Vec<TracePoint>;

/// First evaluation count at which the trace reaches `gap <= target`, if any.
pub fn first_hit(trace: &[TracePoint], target: f64) -> Option<u64> {
    trace.iter().find(|p| p.gap <= target).map(|p| p.evals)
}

/// Best gap achieved over the whole trace (`+inf` for an empty trace).
pub fn final_gap(trace: &[TracePoint]) -> f64 {
    trace.last().map_or(f64::INFINITY, |p| p.gap)
}
