//! Many independent trials at once. Trial `i` under `seed` always uses
//! [`trial_rng`]`(seed, i)`, so the sequential and parallel versions return
//! identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::gen::{variant_rng, Gen};
use crate::prng::RngState;

pub fn trial_rng(seed: u64, index: u64) -> RngState {
    variant_rng(index, RngState::new(seed))
}

/// Hit count of a predicate over a number of generated values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Estimate {
    pub hits: u64,
    pub trials: u64,
}

impl Estimate {
    pub fn proportion(&self) -> f64 {
        self.hits as f64 / self.trials as f64
    }

    /// Binomial standard deviation of the hit count under probability `p`.
    pub fn sigma(&self, p: f64) -> f64 {
        (self.trials as f64 * p * (1.0 - p)).sqrt()
    }

    /// Whether the hit count is within `k` standard deviations of its mean
    /// under `p`. With `p` at 0 or 1 the count must match exactly.
    pub fn within_sigmas(&self, p: f64, k: f64) -> bool {
        let mean = self.trials as f64 * p;
        (self.hits as f64 - mean).abs() <= k * self.sigma(p)
    }
}

pub fn count_hits_seq<T: 'static>(
    g: &Gen<T>,
    seed: u64,
    size: usize,
    trials: u64,
    pred: impl Fn(&T) -> bool,
) -> Estimate {
    let hits = (0..trials)
        .filter(|&i| pred(&g.run(size, trial_rng(seed, i))))
        .count() as u64;
    Estimate { hits, trials }
}

#[cfg(feature = "parallel")]
pub fn count_hits_par<T: 'static>(
    g: &Gen<T>,
    seed: u64,
    size: usize,
    trials: u64,
    pred: impl Fn(&T) -> bool + Sync,
) -> Estimate {
    let hits = (0..trials)
        .into_par_iter()
        .filter(|&i| pred(&g.run(size, trial_rng(seed, i))))
        .count() as u64;
    Estimate { hits, trials }
}

pub fn count_hits<T: 'static>(
    g: &Gen<T>,
    seed: u64,
    size: usize,
    trials: u64,
    pred: impl Fn(&T) -> bool + Sync,
) -> Estimate {
    #[cfg(feature = "parallel")]
    return count_hits_par(g, seed, size, trials, pred);
    #[cfg(not(feature = "parallel"))]
    return count_hits_seq(g, seed, size, trials, pred);
}

pub fn map_seeds_seq<R>(seeds: &[u64], f: impl Fn(u64) -> R) -> Vec<R> {
    seeds.iter().map(|&s| f(s)).collect()
}

#[cfg(feature = "parallel")]
pub fn map_seeds_par<R: Send>(seeds: &[u64], f: impl Fn(u64) -> R + Sync) -> Vec<R> {
    seeds.par_iter().map(|&s| f(s)).collect()
}

/// `f` applied to every seed, results in seed order.
pub fn map_seeds<R: Send>(seeds: &[u64], f: impl Fn(u64) -> R + Sync) -> Vec<R> {
    #[cfg(feature = "parallel")]
    return map_seeds_par(seeds, f);
    #[cfg(not(feature = "parallel"))]
    return map_seeds_seq(seeds, f);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::choose;

    #[test]
    fn estimate_bounds() {
        let e = Estimate {
            hits: 50,
            trials: 100,
        };
        assert_eq!(e.proportion(), 0.5);
        assert!(e.within_sigmas(0.5, 0.0));
        assert!(!e.within_sigmas(0.3, 3.0));
        assert!(Estimate {
            hits: 0,
            trials: 10
        }
        .within_sigmas(0.0, 4.0));
        assert!(!Estimate {
            hits: 1,
            trials: 10
        }
        .within_sigmas(0.0, 4.0));
    }

    #[test]
    fn dispatch_matches_sequential() {
        let g = choose(0, 9).unwrap();
        let seq = count_hits_seq(&g, 5, 30, 5000, |x| *x < 3);
        assert_eq!(count_hits(&g, 5, 30, 5000, |x| *x < 3), seq);
        assert!(seq.within_sigmas(0.3, 3.0), "{seq:?}");
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn parallel_matches_sequential() {
        let g = choose(-50, 50).unwrap();
        for seed in 0..4 {
            assert_eq!(
                count_hits_par(&g, seed, 30, 3000, |x| *x > 10),
                count_hits_seq(&g, seed, 30, 3000, |x| *x > 10)
            );
        }
        let seeds: Vec<u64> = (0..64).collect();
        assert_eq!(
            map_seeds_par(&seeds, |s| s * 3),
            map_seeds_seq(&seeds, |s| s * 3)
        );
    }

    #[test]
    fn trial_rngs_are_distinct() {
        let mut seen = std::collections::HashSet::new();
        for i in 0..1000 {
            assert!(seen.insert(trial_rng(1, i)));
        }
    }
}
