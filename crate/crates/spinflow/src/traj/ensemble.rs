//! Deterministic parallel ensembles.
//!
//! Every trajectory draws from its own counter-based stream derived from
//! (master_seed, trajectory index), so results are bit-identical for a given
//! seed regardless of thread count or completion order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Independent RNG stream for one trajectory.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    // stream 0 is reserved for non-trajectory draws
    rng.set_stream(index + 1);
    rng
}

/// Run `n_traj` trajectories in parallel, preserving index order in the
/// output.
pub fn run_trajectories<T, F>(n_traj: usize, master_seed: u64, runner: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, ChaCha12Rng) -> Result<T> + Sync,
{
    assert!(n_traj >= 1);
    let results: Vec<std::result::Result<T, (usize, Error)>> = (0..n_traj)
        .into_par_iter()
        .map(|idx| {
            runner(idx, trajectory_rng(master_seed, idx as u64)).map_err(|e| (idx, e))
        })
        .collect();
    let mut out = Vec::with_capacity(n_traj);
    for r in results {
        match r {
            Ok(v) => out.push(v),
            Err((index, e)) => {
                return Err(Error::Trajectory { index, source: Box::new(e) })
            }
        }
    }
    Ok(out)
}

/// Per-time mean and standard error of one observable.
#[derive(Debug, Clone)]
pub struct SeriesStats {
    pub mean: Vec<f64>,
    /// Sample standard deviation / sqrt(n); zeros for a single trajectory.
    pub stderr: Vec<f64>,
}

/// Reduce per-trajectory series (indexed [trajectory][time]) in trajectory
/// order.
pub fn reduce_series(per_traj: &[Vec<f64>]) -> SeriesStats {
    let n = per_traj.len();
    assert!(n >= 1);
    let n_t = per_traj[0].len();
    let mut mean = vec![0.0; n_t];
    for series in per_traj {
        assert_eq!(series.len(), n_t);
        for (m, v) in mean.iter_mut().zip(series.iter()) {
            *m += v;
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut stderr = vec![0.0; n_t];
    if n > 1 {
        for series in per_traj {
            for (s, (v, m)) in stderr.iter_mut().zip(series.iter().zip(mean.iter())) {
                *s += (v - m) * (v - m);
            }
        }
        for s in stderr.iter_mut() {
            *s = (*s / (n as f64 - 1.0)).sqrt() / (n as f64).sqrt();
        }
    }
    SeriesStats { mean, stderr }
}

/// A reduced trajectory ensemble: named observable series over a common
/// time grid.
#[derive(Debug, Clone)]
pub struct TrajectoryEnsemble {
    pub n_traj: usize,
    pub master_seed: u64,
    pub times: Vec<f64>,
    pub observables: BTreeMap<String, SeriesStats>,
}

impl TrajectoryEnsemble {
    /// Assemble from per-trajectory maps of series.
    pub fn reduce(
        n_traj: usize,
        master_seed: u64,
        times: Vec<f64>,
        per_traj: Vec<BTreeMap<String, Vec<f64>>>,
    ) -> Self {
        assert_eq!(per_traj.len(), n_traj);
        let mut observables = BTreeMap::new();
        if let Some(first) = per_traj.first() {
            for name in first.keys() {
                let series: Vec<Vec<f64>> =
                    per_traj.iter().map(|m| m[name].clone()).collect();
                observables.insert(name.clone(), reduce_series(&series));
            }
        }
        Self { n_traj, master_seed, times, observables }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn streams_are_deterministic_and_distinct() {
        let a: Vec<f64> = {
            let mut r = trajectory_rng(9, 0);
            (0..5).map(|_| r.gen()).collect()
        };
        let a2: Vec<f64> = {
            let mut r = trajectory_rng(9, 0);
            (0..5).map(|_| r.gen()).collect()
        };
        let b: Vec<f64> = {
            let mut r = trajectory_rng(9, 1);
            (0..5).map(|_| r.gen()).collect()
        };
        assert_eq!(a, a2);
        assert_ne!(a, b);
    }

    #[test]
    fn parallel_matches_serial_order() {
        let par = run_trajectories(64, 3, |idx, mut rng| {
            Ok(vec![idx as f64 + rng.gen::<f64>()])
        })
        .unwrap();
        let ser: Vec<Vec<f64>> = (0..64)
            .map(|idx| vec![idx as f64 + trajectory_rng(3, idx as u64).gen::<f64>()])
            .collect();
        assert_eq!(par, ser);
    }

    #[test]
    fn single_trajectory_has_zero_stderr() {
        let stats = reduce_series(&[vec![1.0, 2.0]]);
        assert_eq!(stats.mean, vec![1.0, 2.0]);
        assert_eq!(stats.stderr, vec![0.0, 0.0]);
    }

    #[test]
    fn stderr_scales_as_inverse_sqrt_n() {
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let draw = |rng: &mut ChaCha12Rng, n: usize| -> f64 {
            let series: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.gen::<f64>()]).collect();
            reduce_series(&series).stderr[0]
        };
        let s_n = draw(&mut rng, 4000);
        let s_4n = draw(&mut rng, 16000);
        let ratio = s_n / s_4n;
        assert_abs_diff_eq!(ratio, 2.0, epsilon = 0.4);
    }

    #[test]
    fn failed_trajectory_reports_index() {
        let r = run_trajectories(8, 0, |idx, _rng| {
            if idx == 5 {
                Err(Error::InvalidModel("boom".into()))
            } else {
                Ok(idx)
            }
        });
        match r {
            Err(Error::Trajectory { index, .. }) => assert_eq!(index, 5),
            other => panic!("expected trajectory error, got {other:?}"),
        }
    }
}
