//! The minimization interface the search engine drives. Implementations must
//! be `Sync`: the benchmark runner shares one instance across worker threads.

/// A continuous function to minimize over `R^dim`.
pub trait Objective: Sync {
    fn dim(&self) -> usize;

    /// Objective value at `x`. May return non-finite values; the engine maps
    /// those to `+inf` fitness so they lose every selection.
    fn value(&self, x: &[f64]) -> f64;

    /// Known optimum value, when the instance exposes one. The engine uses it
    /// to report optimality gaps and to stop early at the target precision.
    fn optimum_value(&self) -> Option<f64> {
        None
    }
}

/// Adapter turning a closure into an [`Objective`].
pub struct FnObjective<F: Fn(&[f64]) -> f64 + Sync> {
    dim: usize,
    f: F,
    f_opt: Option<f64>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnObjective<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self {
            dim,
            f,
            f_opt: None,
        }
    }

    /// Same, with a known optimum value for gap reporting and early stopping.
    pub fn with_optimum(dim: usize, f_opt: f64, f: F) -> Self {
        Self {
            dim,
            f,
            f_opt: Some(f_opt),
        }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Objective for FnObjective<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    fn optimum_value(&self) -> Option<f64> {
        self.f_opt
    }
}
