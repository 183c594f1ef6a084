//! Discrete-time mean-field stand-in for a measurement-feedback coherent
//! Ising machine.
//!
//! Each roundtrip updates every pulse amplitude synchronously:
//!
//! ```text
//! c_i <- c_i + dt [ (p(t) - 1) c_i - c_i^3 + e_i beta (sum_j J~_ij c_j + h~_i) ] + noise
//! ```
//!
//! then clips to `[-saturation, saturation]`. `J~` and `h~` are the couplings
//! and fields divided by their largest magnitude, so one configuration works
//! across models of different scale. Spins are read out as `sign(c_i)`.
//!
//! With the defaults `dt = 1` and `e_i = 1` this is the plain update. The
//! optional [`ErrorCorrection`] lets each `e_i` grow while its pulse is weaker
//! than a target amplitude and shrink while it is stronger, which keeps
//! heavily penalized models from freezing into the first local minimum.

use std::time::Instant;

use rand_distr::{Distribution, Normal};

use super::{restart_rng, PoolCollector, SolutionPool, Trajectory, TrajectorySample, DEFAULT_POOL_SIZE};
use crate::error::{Error, Result};
use crate::qubo::{ising_to_maxcut, IsingModel};

/// Linear pump ramp from `start` at the first roundtrip to `end` at the last.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PumpSchedule {
    pub start: f64,
    pub end: f64,
}

impl PumpSchedule {
    pub fn constant(level: f64) -> Self {
        Self { start: level, end: level }
    }

    pub fn at(&self, roundtrip: usize, roundtrips: usize) -> f64 {
        if roundtrips <= 1 {
            return self.end;
        }
        self.start + (self.end - self.start) * roundtrip as f64 / (roundtrips - 1) as f64
    }
}

/// Per-pulse feedback gains `e_i <- e_i - dt rate (c_i^2 - target) e_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorCorrection {
    pub rate: f64,
    pub target: f64,
}

/// Bounds on the feedback gains. Wider bounds let runaway gains lock pulses
/// into bad states on the m = 9 replica instance.
const ERROR_GAIN_RANGE: (f64, f64) = (1e-3, 1e3);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CimConfig {
    pub pulses_per_roundtrip: usize,
    /// Simulated time per roundtrip; only used to stamp trajectory samples.
    pub roundtrip_seconds: f64,
    pub pump: PumpSchedule,
    pub feedback_strength: f64,
    pub noise_std: f64,
    pub saturation: f64,
    pub roundtrips: usize,
    /// Standard deviation of the initial amplitudes (zero starts from vacuum).
    pub initial_amplitude_std: f64,
    /// Integration step applied to the deterministic part of the update.
    pub step: f64,
    pub error_correction: Option<ErrorCorrection>,
    pub seed: u64,
    pub pool_size: usize,
}

impl Default for CimConfig {
    fn default() -> Self {
        Self {
            pulses_per_roundtrip: 211,
            roundtrip_seconds: 2.11e-6,
            pump: PumpSchedule { start: 0.0, end: 1.5 },
            feedback_strength: 0.1,
            noise_std: 0.01,
            saturation: 1.5,
            roundtrips: 1000,
            initial_amplitude_std: 0.0,
            step: 1.0,
            error_correction: None,
            seed: 0,
            pool_size: DEFAULT_POOL_SIZE,
        }
    }
}

impl CimConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    /// Setting used for penalty models: pump held below the bare threshold,
    /// error-corrected feedback and a small integration step.
    pub fn amplitude_controlled(seed: u64) -> Self {
        Self {
            pump: PumpSchedule::constant(0.4),
            feedback_strength: 0.3,
            noise_std: 0.01,
            saturation: 3.0,
            roundtrips: 10_000,
            step: 0.1,
            error_correction: Some(ErrorCorrection { rate: 0.2, target: 1.0 }),
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x > 0.0 && x.is_finite();
        let non_negative = |x: f64| x >= 0.0 && x.is_finite();
        if self.pulses_per_roundtrip == 0 || self.roundtrips == 0 || self.pool_size == 0 {
            return Err(Error::InvalidParameter("pulses_per_roundtrip, roundtrips and pool_size must be positive".into()));
        }
        if ![self.roundtrip_seconds, self.feedback_strength, self.saturation, self.step].into_iter().all(positive) {
            return Err(Error::InvalidParameter(
                "roundtrip_seconds, feedback_strength, saturation and step must be positive".into(),
            ));
        }
        if !non_negative(self.noise_std) || !non_negative(self.initial_amplitude_std) {
            return Err(Error::InvalidParameter("noise levels must be non-negative".into()));
        }
        if !self.pump.start.is_finite() || !self.pump.end.is_finite() {
            return Err(Error::InvalidParameter("pump schedule must be finite".into()));
        }
        if let Some(ec) = self.error_correction {
            if !positive(ec.rate) || !positive(ec.target) {
                return Err(Error::InvalidParameter("error correction rate and target must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Runs the simulator and returns the best distinct spin patterns (as bits,
/// `x = (s + 1) / 2`) together with one trajectory sample per roundtrip.
pub fn solve_cim_sim(model: &IsingModel, config: &CimConfig) -> Result<(SolutionPool, Trajectory)> {
    run(model, config, false)
}

/// Leading eigenvalue of `E^1/2 J~ E^1/2`, refined by one shifted power step per call.
struct LeadingMode {
    vector: Vec<f64>,
    shift: f64,
    value: f64,
}

impl LeadingMode {
    fn new(adjacency: &[Vec<(usize, f64)>]) -> Self {
        let n = adjacency.len();
        let shift = adjacency.iter().map(|row| row.iter().map(|(_, w)| w.abs()).sum::<f64>()).fold(0.0, f64::max);
        let vector = vec![1.0 / (n.max(1) as f64).sqrt(); n];
        Self { vector, shift, value: 0.0 }
    }

    fn refine(&mut self, adjacency: &[Vec<(usize, f64)>], gains: &[f64]) {
        let n = self.vector.len();
        let root: Vec<f64> = gains.iter().map(|e| e.sqrt()).collect();
        let mut w = vec![0.0; n];
        for i in 0..n {
            let s: f64 = adjacency[i].iter().map(|&(j, c)| c * root[j] * self.vector[j]).sum();
            w[i] = root[i] * s;
        }
        self.value = self.vector.iter().zip(&w).map(|(a, b)| a * b).sum();
        let max_gain = gains.iter().copied().fold(0.0, f64::max);
        for i in 0..n {
            w[i] += self.shift * max_gain * self.vector[i];
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            self.vector = w.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// `mirror` negates the initial amplitudes and every noise draw.
pub(crate) fn run(model: &IsingModel, config: &CimConfig, mirror: bool) -> Result<(SolutionPool, Trajectory)> {
    config.validate()?;
    let n = model.size();
    if n > config.pulses_per_roundtrip {
        return Err(Error::TooLarge(format!(
            "model has {n} spins but only {} pulses circulate",
            config.pulses_per_roundtrip
        )));
    }
    let start = Instant::now();

    let scale = model
        .couplings()
        .map(|(_, j)| j.abs())
        .chain(model.fields().iter().map(|h| h.abs()))
        .fold(0.0, f64::max);
    let norm = if scale > 0.0 { 1.0 / scale } else { 0.0 };
    let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for ((i, j), v) in model.couplings() {
        adjacency[i].push((j, v * norm));
        adjacency[j].push((i, v * norm));
    }
    let field: Vec<f64> = model.fields().iter().map(|h| h * norm).collect();
    let graph = ising_to_maxcut(model);
    let beta = config.feedback_strength;
    let dt = config.step;

    let sign = if mirror { -1.0 } else { 1.0 };
    let mut rng = restart_rng(config.seed, 0);
    let noise = Normal::new(0.0, config.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let init = Normal::new(0.0, config.initial_amplitude_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut amp: Vec<f64> = (0..n).map(|_| sign * init.sample(&mut rng)).collect();
    let mut next = vec![0.0; n];
    let mut gains = vec![1.0f64; n];
    let mut spins = vec![1i8; n];
    let mut bits = vec![true; n];
    let mut mode = LeadingMode::new(&adjacency);
    for _ in 0..200 {
        mode.refine(&adjacency, &gains);
    }

    let mut pool = PoolCollector::new(config.pool_size);
    let mut trajectory = Trajectory { samples: Vec::with_capacity(config.roundtrips) };
    let mut best = f64::INFINITY;

    for t in 0..config.roundtrips {
        let pump = config.pump.at(t, config.roundtrips);
        let gain = pump - 1.0;
        for i in 0..n {
            let c = amp[i];
            let injected: f64 = adjacency[i].iter().map(|&(j, w)| w * amp[j]).sum();
            let kick = if config.noise_std > 0.0 { sign * noise.sample(&mut rng) } else { 0.0 };
            let drift = gain * c - c * c * c + gains[i] * beta * (injected + field[i]);
            next[i] = (c + dt * drift + kick).clamp(-config.saturation, config.saturation);
        }
        std::mem::swap(&mut amp, &mut next);
        if let Some(ec) = config.error_correction {
            for (e, c) in gains.iter_mut().zip(&amp) {
                *e = (*e - dt * ec.rate * (c * c - ec.target) * *e).clamp(ERROR_GAIN_RANGE.0, ERROR_GAIN_RANGE.1);
            }
            mode.refine(&adjacency, &gains);
        }

        for i in 0..n {
            spins[i] = if amp[i] < 0.0 { -1 } else { 1 };
            bits[i] = spins[i] > 0;
        }
        let energy = model.energy_unchecked(&spins);
        best = best.min(energy);
        pool.offer(&bits, energy);
        trajectory.samples.push(TrajectorySample {
            roundtrip: t + 1,
            time_s: (t + 1) as f64 * config.roundtrip_seconds,
            energy,
            cut_value: graph.cut_from_energy(energy),
            best_energy: best,
            gain_margin: gain + beta * mode.value,
        });
    }
    let evaluations = config.roundtrips as u64 * n as u64;
    let pool = pool.finish(
        |b| {
            let s: Vec<i8> = b.iter().map(|&x| if x { 1 } else { -1 }).collect();
            model.energy_unchecked(&s)
        },
        start.elapsed().as_secs_f64(),
        evaluations,
    );
    Ok((pool, trajectory))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::{Qubo, SpinConfig};

    fn ferromagnet() -> IsingModel {
        let mut m = IsingModel::new(2);
        m.add_coupling(0, 1, 1.0).unwrap();
        m
    }

    #[test]
    fn ferromagnet_aligns() {
        let model = ferromagnet();
        let hits = (0..100)
            .filter(|&seed| {
                let (pool, traj) = solve_cim_sim(&model, &CimConfig::with_seed(seed)).unwrap();
                let last = traj.samples.last().unwrap();
                pool.best().unwrap().energy == -1.0 && last.energy == -1.0
            })
            .count();
        assert!(hits >= 95, "{hits}/100");
    }

    #[test]
    fn vacuum_without_noise_stays_flat() {
        let cfg = CimConfig { noise_std: 0.0, ..CimConfig::default() };
        let (pool, traj) = solve_cim_sim(&ferromagnet(), &cfg).unwrap();
        assert!(traj.samples.iter().all(|s| s.energy == -1.0));
        assert_eq!(pool.len(), 1);
        assert_eq!(pool.best().unwrap().assignment.to_string(), "11");
    }

    #[test]
    fn tiny_seed_amplitude_stays_then_bifurcates() {
        // Frustrated triangle plus a free spin; without noise the pattern can only
        // change once the pump makes the amplitudes grow.
        let mut m = IsingModel::new(3);
        m.add_coupling(0, 1, -1.0).unwrap();
        m.add_coupling(1, 2, 1.0).unwrap();
        let cfg = CimConfig { noise_std: 0.0, initial_amplitude_std: 1e-3, seed: 4, ..CimConfig::default() };
        let (_, traj) = solve_cim_sim(&m, &cfg).unwrap();
        assert_eq!(traj.samples.last().unwrap().energy, -2.0);
    }

    #[test]
    fn gain_margin_tracks_the_ramp() {
        // Normalized coupling 1 gives leading eigenvalue 1, so the plain pump
        // ramp 0..1.5 crosses threshold at p = 1 - 0.1.
        let (_, traj) = solve_cim_sim(&ferromagnet(), &CimConfig::default()).unwrap();
        for (t, s) in traj.samples.iter().enumerate() {
            let expected = 1.5 * t as f64 / 999.0 - 1.0 + 0.1;
            assert!((s.gain_margin - expected).abs() < 1e-9, "{t}: {}", s.gain_margin);
        }
        assert_eq!(traj.threshold_index(), Some(600));
    }

    #[test]
    fn error_correction_raises_the_margin() {
        let cfg = CimConfig { pump: PumpSchedule::constant(0.4), ..CimConfig::amplitude_controlled(1) };
        let (_, traj) = solve_cim_sim(&ferromagnet(), &cfg).unwrap();
        assert!(traj.samples[0].gain_margin < 0.0);
        assert!(traj.threshold_index().is_some());
        assert_eq!(traj.best_energy(), Some(-1.0));
    }

    #[test]
    fn rejects_bad_error_correction() {
        let cfg = CimConfig { error_correction: Some(ErrorCorrection { rate: 0.0, target: 1.0 }), ..CimConfig::default() };
        assert!(solve_cim_sim(&ferromagnet(), &cfg).is_err());
        assert!(solve_cim_sim(&ferromagnet(), &CimConfig { step: 0.0, ..CimConfig::default() }).is_err());
    }

    #[test]
    fn trajectory_timestamps() {
        let cfg = CimConfig { roundtrips: 50, ..CimConfig::default() };
        let (_, traj) = solve_cim_sim(&ferromagnet(), &cfg).unwrap();
        assert_eq!(traj.samples.len(), 50);
        for (idx, s) in traj.samples.iter().enumerate() {
            assert_eq!(s.roundtrip, idx + 1);
            assert!((s.time_s - (idx + 1) as f64 * 2.11e-6).abs() < 1e-18);
        }
        assert!(traj.samples.windows(2).all(|w| w[1].best_energy <= w[0].best_energy));
    }

    #[test]
    fn mirrored_run_negates_spins() {
        let q = Qubo::from_terms(4, [((0, 1), 2.0), ((1, 2), -3.0), ((2, 3), 1.0), ((0, 3), -1.0)], 0.0).unwrap();
        let mut model = IsingModel::from_qubo(&q);
        // drop the fields to get a pure coupling model
        for i in 0..4 {
            let h = model.fields()[i];
            model.add_field(i, -h).unwrap();
        }
        let cfg = CimConfig { seed: 9, roundtrips: 300, initial_amplitude_std: 0.05, ..CimConfig::default() };
        let (_, a) = run(&model, &cfg, false).unwrap();
        let (_, b) = run(&model, &cfg, true).unwrap();
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert_eq!(x.energy, y.energy);
        }
    }

    #[test]
    fn cut_value_tracks_energy() {
        let mut m = ferromagnet();
        m.add_field(0, 0.5).unwrap();
        let graph = ising_to_maxcut(&m);
        let (pool, traj) = solve_cim_sim(&m, &CimConfig { roundtrips: 20, ..CimConfig::default() }).unwrap();
        for s in &traj.samples {
            assert!((graph.energy_from_cut(s.cut_value) - s.energy).abs() < 1e-12);
        }
        let best = pool.best().unwrap();
        let spins = SpinConfig::from_assignment(&best.assignment);
        assert_eq!(m.energy(&spins).unwrap(), best.energy);
    }

    #[test]
    fn rejects_oversized_model() {
        let cfg = CimConfig { pulses_per_roundtrip: 1, ..CimConfig::default() };
        assert!(matches!(solve_cim_sim(&ferromagnet(), &cfg), Err(Error::TooLarge(_))));
    }
}
