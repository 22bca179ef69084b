//! Ogata thinning for any [`IntensityModel`].
//!
//! Each sequence index owns a ChaCha8 stream derived from the dataset seed,
//! so datasets are reproducible regardless of how work is scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{spectral_radius, HawkesModel, IntensityModel, Kernel, SinePoisson, TypeJets};
use crate::sequence::{EventSequence, History};

pub const DEFAULT_MAX_EVENTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub t_end: f64,
    pub num_sequences: usize,
    pub seed: u64,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
}

fn default_max_events() -> usize {
    DEFAULT_MAX_EVENTS
}

impl SimConfig {
    pub fn new(t_end: f64, num_sequences: usize, seed: u64) -> Self {
        Self {
            t_end,
            num_sequences,
            seed,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidWindow(self.t_end));
        }
        if self.num_sequences == 0 {
            return Err(Error::Config("at least one sequence is needed".into()));
        }
        Ok(())
    }
}

/// The random stream used for sequence `index` of a dataset seeded `seed`.
pub fn sequence_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// One draw on `(0, t_end]`.
pub fn sample_sequence<R: Rng + ?Sized>(
    model: &dyn IntensityModel,
    params: &[f64],
    t_end: f64,
    max_events: usize,
    rng: &mut R,
) -> Result<EventSequence> {
    if !(t_end > 0.0) {
        return Err(Error::InvalidWindow(t_end));
    }
    let kk = model.num_types();
    let horizon = model.bound_horizon(params);
    let mut jets = TypeJets::for_model(model);
    let mut times: Vec<f64> = Vec::new();
    let mut marks: Vec<usize> = Vec::new();
    let mut t = 0.0;
    while t < t_end {
        let hi = horizon.map_or(t_end, |h| (t + h).min(t_end));
        let history = History::new(&times, Some(&marks));
        let bound = model.upper_bound(params, history, t, hi);
        if !bound.is_finite() {
            return Err(Error::ExplosionGuard { cap: max_events });
        }
        if bound <= 0.0 {
            t = hi;
            continue;
        }
        let gap: f64 = rng.sample(Exp1);
        let s = t + gap / bound;
        if s > hi {
            t = hi;
            continue;
        }
        if times.last().is_some_and(|&last| s <= last) {
            continue;
        }
        model.eval_jets(params, s, history, false, &mut jets)?;
        let total: f64 = jets.value.iter().sum();
        debug_assert!(
            total <= bound * (1.0 + 1e-9),
            "intensity {total} above thinning bound {bound}"
        );
        t = s;
        if rng.random::<f64>() * bound > total {
            continue;
        }
        let k = if kk == 1 {
            0
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut k = kk - 1;
            for (i, &v) in jets.value.iter().enumerate() {
                if u < v {
                    k = i;
                    break;
                }
                u -= v;
            }
            k
        };
        if times.len() >= max_events {
            return Err(Error::ExplosionGuard { cap: max_events });
        }
        times.push(s);
        marks.push(k);
    }
    if kk == 1 {
        EventSequence::new(times, t_end)
    } else {
        EventSequence::with_marks(times, marks, t_end, kk)
    }
}

/// Draws from `λ(t) = exp(θ sin t)`.
pub fn sample_poisson<R: Rng + ?Sized>(
    model: &SinePoisson,
    theta: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<EventSequence> {
    sample_sequence(model, &[theta], t_end, DEFAULT_MAX_EVENTS, rng)
}

/// Draws a (marked, for `K > 1`) Hawkes sequence.
pub fn sample_hawkes<K: Kernel + 'static, R: Rng + ?Sized>(
    model: &HawkesModel<K>,
    params: &[f64],
    t_end: f64,
    rng: &mut R,
) -> Result<EventSequence> {
    sample_sequence(model, params, t_end, DEFAULT_MAX_EVENTS, rng)
}

/// `cfg.num_sequences` independent draws, sequence `i` using
/// [`sequence_rng`]`(cfg.seed, i)`.
pub fn simulate_dataset(
    model: &dyn IntensityModel,
    params: &[f64],
    cfg: &SimConfig,
) -> Result<Dataset> {
    cfg.validate()?;
    if params.len() != model.num_params() {
        return Err(Error::InvalidParameter(format!(
            "{} expects {} parameters, got {}",
            model.name(),
            model.num_params(),
            params.len()
        )));
    }
    if let Some(b) = model.branching_matrix(params) {
        let rho = spectral_radius(&b, model.num_types());
        if rho >= 1.0 {
            log::warn!("branching matrix has spectral radius {rho:.3} >= 1; the process is unstable");
        }
    }
    let seqs = (0..cfg.num_sequences)
        .into_par_iter()
        .map(|i| sample_sequence(model, params, cfg.t_end, cfg.max_events, &mut sequence_rng(cfg.seed, i)))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(seqs, model.num_types())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_seed_repeats() {
        let m = HawkesModel::exponential(2, 5.0);
        let p = [1.0, 1.0, 1.6, 0.2, 1.0, 1.0];
        let a = sample_hawkes(&m, &p, 10.0, &mut sequence_rng(7, 3)).unwrap();
        let b = sample_hawkes(&m, &p, 10.0, &mut sequence_rng(7, 3)).unwrap();
        assert_eq!(a, b);
        let c = sample_hawkes(&m, &p, 10.0, &mut sequence_rng(7, 4)).unwrap();
        assert_ne!(a, c);
        a.validate(2).unwrap();
    }

    #[test]
    fn dataset_is_order_independent() {
        let m = SinePoisson::default();
        let cfg = SimConfig::new(2.0, 20, 11);
        let d = simulate_dataset(&m, &[2.0], &cfg).unwrap();
        let s5 = sample_poisson(&m, 2.0, 2.0, &mut sequence_rng(11, 5)).unwrap();
        assert_eq!(d.sequences()[5], s5);
    }

    #[test]
    fn tiny_window_is_usually_empty() {
        let m = SinePoisson::default();
        let s = sample_poisson(&m, 0.0, 1e-9, &mut sequence_rng(0, 0)).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn homogeneous_mean_count() {
        let m = SinePoisson::default();
        let d = simulate_dataset(&m, &[0.0], &SimConfig::new(2.0, 10_000, 5)).unwrap();
        let mean = d.num_events() as f64 / 10_000.0;
        assert!((mean - 2.0).abs() < 3.0 * 2f64.sqrt() / 100.0, "{mean}");
    }

    #[test]
    fn explosion_guard_trips() {
        let m = HawkesModel::exponential(1, 1.0);
        let mut cfg = SimConfig::new(50.0, 1, 0);
        cfg.max_events = 50;
        let err = simulate_dataset(&m, &[1.0, 3.0], &cfg).unwrap_err();
        assert_eq!(err, Error::ExplosionGuard { cap: 50 });
    }

    #[test]
    fn invalid_config() {
        let m = SinePoisson::default();
        assert!(simulate_dataset(&m, &[1.0], &SimConfig::new(0.0, 1, 0)).is_err());
        assert!(simulate_dataset(&m, &[1.0], &SimConfig::new(1.0, 0, 0)).is_err());
    }
}
