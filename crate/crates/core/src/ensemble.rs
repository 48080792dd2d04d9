//! Independent trajectories of one configuration. Each trajectory owns the
//! stream `(seed, index)`, so results are identical whether the ensemble is
//! run sequentially or across a thread pool.

use crate::error::Result;
use crate::operators::{LindbladModel, PureState};
use crate::trajectory::{run_trajectory, Trajectory, TrajectoryConfig};

/// Environment variable bounding the worker count of [`with_threads`].
pub const THREADS_ENV: &str = "UNRAVEL_THREADS";

/// Applies `f` to every index in `0..n`, in order.
pub fn map_indices_sequential<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    F: Fn(u64) -> Result<T>,
{
    (0..n).map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_indices_parallel<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

/// Parallel when the `parallel` feature is on, sequential otherwise.
pub fn map_indices<T, F>(n: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_indices_parallel(n, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_indices_sequential(n, f)
    }
}

pub fn run_ensemble_sequential(
    model: &LindbladModel,
    config: &TrajectoryConfig,
    n_traj: u64,
    initial: &PureState,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    map_indices_sequential(n_traj, |i| run_one(model, config, i, initial))
}

#[cfg(feature = "parallel")]
pub fn run_ensemble_parallel(
    model: &LindbladModel,
    config: &TrajectoryConfig,
    n_traj: u64,
    initial: &PureState,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    map_indices_parallel(n_traj, |i| run_one(model, config, i, initial))
}

/// Trajectories `0..n_traj`, ordered by index.
pub fn run_ensemble(
    model: &LindbladModel,
    config: &TrajectoryConfig,
    n_traj: u64,
    initial: &PureState,
) -> Result<Vec<Trajectory>> {
    config.validate()?;
    map_indices(n_traj, |i| run_one(model, config, i, initial))
}

fn run_one(model: &LindbladModel, config: &TrajectoryConfig, index: u64, initial: &PureState) -> Result<Trajectory> {
    let mut traj = run_trajectory(model, &config.with_index(index), initial)?;
    traj.trajectory_index = index;
    Ok(traj)
}

/// Worker count from `UNRAVEL_THREADS`, if set to a positive integer.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Runs `f` inside a dedicated pool of `threads` workers, or the global pool
/// when `None`. A no-op without the `parallel` feature.
pub fn with_threads<R, F>(threads: Option<usize>, f: F) -> R
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            return pool.install(f);
        }
    }
    let _ = threads;
    f()
}
