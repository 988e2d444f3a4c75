use dfmud_core::TrialExecutor;
use rayon::prelude::*;

/// Fans trials out over the rayon pool. Results come back in trial order,
/// so reductions match [`dfmud_core::Sequential`] bit for bit.
#[derive(Debug, Clone, Copy, Default)]
pub struct Parallel;

impl TrialExecutor for Parallel {
    fn run<T, F>(&self, trials: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..trials).into_par_iter().map(job).collect()
    }
}
