use std::time::Instant;

use rand::Rng;

use super::{restart_rng, CompiledQubo, PoolCollector, SolutionPool, DEFAULT_POOL_SIZE};
use crate::error::{Error, Result};
use crate::qubo::Qubo;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaConfig {
    pub initial_temperature: f64,
    /// Multiplier applied to the temperature after every sweep.
    pub cooling_ratio: f64,
    pub sweeps: usize,
    pub restarts: usize,
    pub seed: u64,
    pub pool_size: usize,
}

impl Default for SaConfig {
    fn default() -> Self {
        Self { initial_temperature: 10.0, cooling_ratio: 0.99, sweeps: 1000, restarts: 10, seed: 0, pool_size: DEFAULT_POOL_SIZE }
    }
}

impl SaConfig {
    /// Schedule scaled to the model: the start temperature accepts the
    /// largest single-flip uphill move with probability ~e^-2 and the final one
    /// sits well below the smallest coefficient.
    pub fn for_model(model: &Qubo, seed: u64) -> Self {
        let compiled = CompiledQubo::new(model);
        let hi = compiled.max_flip_delta();
        let lo = compiled.min_abs_coefficient();
        let mut config = Self { seed, ..Self::default() };
        if hi > 0.0 && lo.is_finite() {
            let t_end = lo / 20.0;
            config.initial_temperature = (hi / 2.0).max(t_end);
            config.cooling_ratio = (t_end / config.initial_temperature).powf(1.0 / config.sweeps as f64).min(0.9999);
        }
        config
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.initial_temperature > 0.0 && self.initial_temperature.is_finite()) {
            return Err(Error::InvalidParameter("initial_temperature must be positive".into()));
        }
        if !(self.cooling_ratio > 0.0 && self.cooling_ratio < 1.0) {
            return Err(Error::InvalidParameter("cooling_ratio must lie in (0, 1)".into()));
        }
        if self.sweeps == 0 || self.restarts == 0 || self.pool_size == 0 {
            return Err(Error::InvalidParameter("sweeps, restarts and pool_size must be positive".into()));
        }
        Ok(())
    }
}

/// Metropolis single-flip annealing with geometric cooling.
pub fn solve_sa(model: &Qubo, config: &SaConfig) -> Result<SolutionPool> {
    config.validate()?;
    let start = Instant::now();
    let compiled = CompiledQubo::new(model);
    let n = compiled.size();
    let mut pool = PoolCollector::new(config.pool_size);
    let mut evaluations = 0u64;

    for restart in 0..config.restarts {
        let mut rng = restart_rng(config.seed, restart as u64);
        let mut bits: Vec<bool> = (0..n).map(|_| rng.random()).collect();
        let mut fields = compiled.fields(&bits);
        let mut energy = model.energy_unchecked(&bits);
        let mut best = energy;
        pool.offer(&bits, energy);
        let mut t = config.initial_temperature;
        for _ in 0..config.sweeps {
            for i in 0..n {
                let delta = compiled.delta(&bits, &fields, i);
                if delta <= 0.0 || rng.random::<f64>() < (-delta / t).exp() {
                    compiled.flip(&mut bits, &mut fields, i);
                    energy += delta;
                    if energy < best {
                        best = energy;
                        pool.offer(&bits, model.energy_unchecked(&bits));
                    }
                }
            }
            evaluations += n as u64;
            if pool.admits(energy) {
                pool.offer(&bits, model.energy_unchecked(&bits));
            }
            t *= config.cooling_ratio;
        }
    }
    Ok(pool.finish(|b| model.energy_unchecked(b), start.elapsed().as_secs_f64(), evaluations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{solve_exact, ExactConfig};

    #[test]
    fn single_linear_term_always_found() {
        let q = Qubo::from_terms(1, [((0, 0), -1.0)], 0.0).unwrap();
        let hits = (0..100)
            .filter(|&seed| solve_sa(&q, &SaConfig::for_model(&q, seed)).unwrap().best().unwrap().energy == -1.0)
            .count();
        assert_eq!(hits, 100);
    }

    #[test]
    fn deterministic_per_seed() {
        let q = Qubo::from_terms(4, [((0, 1), -2.0), ((1, 2), 3.0), ((2, 3), -1.0), ((0, 0), 1.0)], 0.0).unwrap();
        let cfg = SaConfig::for_model(&q, 7);
        let a = solve_sa(&q, &cfg).unwrap();
        let b = solve_sa(&q, &cfg).unwrap();
        assert_eq!(a.entries, b.entries);
    }

    #[test]
    fn never_beats_exact_and_energies_are_fresh() {
        let q = Qubo::from_terms(
            6,
            [((0, 0), -3.0), ((0, 1), 4.0), ((1, 2), -2.5), ((3, 3), 1.0), ((3, 5), -4.0), ((4, 4), -1.0), ((2, 4), 2.0)],
            1.0,
        )
        .unwrap();
        let exact = solve_exact(&q, &ExactConfig::default()).unwrap().best().unwrap().energy;
        let pool = solve_sa(&q, &SaConfig::for_model(&q, 3)).unwrap();
        assert!(pool.best().unwrap().energy >= exact);
        for e in &pool.entries {
            assert_eq!(e.energy, q.energy(&e.assignment).unwrap());
        }
        assert!(pool.entries.windows(2).all(|w| w[0].energy <= w[1].energy));
    }

    #[test]
    fn rejects_bad_schedule() {
        let q = Qubo::new(2);
        assert!(solve_sa(&q, &SaConfig { cooling_ratio: 1.0, ..SaConfig::default() }).is_err());
        assert!(solve_sa(&q, &SaConfig { initial_temperature: 0.0, ..SaConfig::default() }).is_err());
    }
}
