use alloc::vec::Vec;

/// Runs independent Monte Carlo trials.
///
/// Implementations may execute trials concurrently but must return the
/// results indexed by trial, so that reductions performed by the caller are
/// identical regardless of scheduling.
pub trait TrialExecutor: Sync {
    fn run<T, F>(&self, trials: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send;
}

/// Runs trials one after another on the calling thread.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sequential;

impl TrialExecutor for Sequential {
    fn run<T, F>(&self, trials: usize, job: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..trials).map(job).collect()
    }
}
