use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::Seed;

/// Independent seeded trials averaged in the linear domain.
///
/// Trial `t` receives `seed.split(t)`. Trials run on a rayon pool in chunks;
/// partial sums are always accumulated in trial order, so the result does
/// not depend on the thread count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarlo {
    pub trials: usize,
    pub seed: Seed,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloOutcome {
    /// Per metric, the per-iteration mean over non-diverged trials.
    pub mean: Vec<Vec<f64>>,
    pub completed: usize,
    /// Indices of trials that diverged.
    pub diverged: Vec<usize>,
}

impl MonteCarlo {
    pub fn new(trials: usize, seed: impl Into<Seed>) -> Self {
        MonteCarlo {
            trials,
            seed: seed.into(),
            threads: None,
        }
    }

    pub fn with_threads(mut self, threads: Option<usize>) -> Self {
        self.threads = threads;
        self
    }

    /// Runs `trial(index, seed)`, each returning one linear-domain curve per
    /// metric. A [`Error::Diverged`] result is recorded and skipped; any
    /// other error aborts the run.
    pub fn run<F>(&self, trial: F) -> Result<MonteCarloOutcome>
    where
        F: Fn(usize, Seed) -> Result<Vec<Vec<f64>>> + Sync,
    {
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be >= 1"));
        }
        match self.threads {
            Some(0) => Err(Error::invalid("threads", "must be >= 1")),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::invalid("threads", e.to_string()))?;
                pool.install(|| self.run_inner(&trial, n))
            }
            None => self.run_inner(&trial, rayon::current_num_threads()),
        }
    }

    fn run_inner<F>(&self, trial: &F, threads: usize) -> Result<MonteCarloOutcome>
    where
        F: Fn(usize, Seed) -> Result<Vec<Vec<f64>>> + Sync,
    {
        let chunk = (2 * threads).max(1);
        let mut sums: Option<Vec<Vec<f64>>> = None;
        let mut completed = 0;
        let mut diverged = Vec::new();
        for start in (0..self.trials).step_by(chunk) {
            let end = (start + chunk).min(self.trials);
            let results: Vec<Result<Vec<Vec<f64>>>> = (start..end)
                .into_par_iter()
                .map(|t| trial(t, self.seed.split(t as u64)))
                .collect();
            for (t, result) in (start..end).zip(results) {
                match result {
                    Ok(curves) => {
                        accumulate(&mut sums, curves)?;
                        completed += 1;
                    }
                    Err(Error::Diverged { .. }) => diverged.push(t),
                    Err(e) => return Err(e),
                }
            }
        }
        let Some(mut mean) = sums else {
            return Err(Error::AllTrialsDiverged {
                trials: self.trials,
            });
        };
        let scale = 1.0 / completed as f64;
        mean.iter_mut().flatten().for_each(|v| *v *= scale);
        Ok(MonteCarloOutcome {
            mean,
            completed,
            diverged,
        })
    }
}

fn accumulate(sums: &mut Option<Vec<Vec<f64>>>, curves: Vec<Vec<f64>>) -> Result<()> {
    match sums {
        None => *sums = Some(curves),
        Some(acc) => {
            Error::check_len("metric count", acc.len(), curves.len())?;
            for (a, c) in acc.iter_mut().zip(&curves) {
                Error::check_len("metric length", a.len(), c.len())?;
                for (x, y) in a.iter_mut().zip(c) {
                    *x += y;
                }
            }
        }
    }
    Ok(())
}

/// Shorthand for `MonteCarlo::new(trials, seed).run(trial)`.
pub fn monte_carlo<F>(trials: usize, seed: impl Into<Seed>, trial: F) -> Result<MonteCarloOutcome>
where
    F: Fn(usize, Seed) -> Result<Vec<Vec<f64>>> + Sync,
{
    MonteCarlo::new(trials, seed).run(trial)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;

    fn noisy(_: usize, seed: Seed) -> Result<Vec<Vec<f64>>> {
        let mut rng = seed.rng();
        Ok(vec![(0..50).map(|_| rng.random::<f64>()).collect()])
    }

    #[test]
    fn single_trial_is_the_trial() {
        let out = monte_carlo(1, 9, noisy).unwrap();
        assert_eq!(out.mean, noisy(0, Seed::new(9).split(0)).unwrap());
    }

    #[test]
    fn thread_count_does_not_change_bits() {
        let base = MonteCarlo::new(13, 5);
        let a = base.with_threads(Some(1)).run(noisy).unwrap();
        let b = base.with_threads(Some(3)).run(noisy).unwrap();
        let c = base.run(noisy).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn divergence_is_recorded_not_fatal() {
        let out = monte_carlo(4, 1, |t, _| {
            if t % 2 == 0 {
                Err(Error::Diverged { step: 3 })
            } else {
                Ok(vec![vec![t as f64]])
            }
        })
        .unwrap();
        assert_eq!(out.diverged, vec![0, 2]);
        assert_eq!(out.completed, 2);
        assert_eq!(out.mean, vec![vec![2.0]]);
        let all = monte_carlo(3, 1, |_, _| Err(Error::Diverged { step: 1 }));
        assert_eq!(all, Err(Error::AllTrialsDiverged { trials: 3 }));
        assert!(monte_carlo(2, 1, |_, _| Err(Error::invalid("x", "boom"))).is_err());
        assert!(monte_carlo(0, 1, noisy).is_err());
    }
}
