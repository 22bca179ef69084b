use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{mean_over, Evaluation, Objective};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{IntensityModel, Jet, ScoreJet, ScoreKind, TypeJets};

/// Denoising score matching with Gaussian perturbations of every event time.
///
/// For each event `L` perturbed copies `t̃ = t_n + ε`, `ε ~ N(0, σ²)`, are
/// drawn; copies leaving `(t_{n-1}, T]` are reflected back and the effective
/// displacement `t̃ − t_n` replaces `ε` in the target. Each copy contributes
/// `(1/2L)(ψ(t̃) + ε/σ²)²`. The noise depends only on `(seed, step, sequence
/// index)`.
pub struct Denoising<'a> {
    model: &'a dyn IntensityModel,
    data: &'a Dataset,
    sigma: f64,
    samples: usize,
    seed: u64,
    kind: ScoreKind,
    ce_weight: f64,
}

impl<'a> Denoising<'a> {
    pub fn new(
        model: &'a dyn IntensityModel,
        data: &'a Dataset,
        sigma: f64,
        samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("noise scale must be positive, got {sigma}")));
        }
        if samples == 0 {
            return Err(Error::Config("at least one noise sample is needed".into()));
        }
        if data.num_types() != model.num_types() {
            return Err(Error::MarkMismatch(format!(
                "dataset has {} types, model {}",
                data.num_types(),
                model.num_types()
            )));
        }
        Ok(Self {
            model,
            data,
            sigma,
            samples,
            seed,
            kind: ScoreKind::Conditional,
            ce_weight: 0.0,
        })
    }

    /// Score used in the target; conditional by default.
    pub fn with_score(mut self, kind: ScoreKind) -> Self {
        self.kind = kind;
        self
    }

    /// Adds `alpha · J_CE` on marked data.
    pub fn with_cross_entropy(mut self, alpha: f64) -> Self {
        self.ce_weight = alpha;
        self
    }

    fn rng(&self, step: u64, m: usize) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&step.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(m as u64);
        rng
    }

    fn sequence_term(&self, params: &[f64], step: u64, m: usize, grad: &mut [f64]) -> Result<f64> {
        let seq = &self.data.sequences()[m];
        let mut rng = self.rng(step, m);
        let mut jets = TypeJets::for_model(self.model);
        let mut total = Jet::default();
        let mut score = ScoreJet::default();
        let history = seq.history();
        let var = self.sigma * self.sigma;
        let scale = 1.0 / self.samples as f64;
        let use_ce = self.ce_weight != 0.0 && self.model.num_types() > 1;
        let mut value = 0.0;
        for (n, &t) in seq.times().iter().enumerate() {
            let lo = if n == 0 { 0.0 } else { seq.times()[n - 1] };
            let h = history.prefix(n);
            for _ in 0..self.samples {
                let z: f64 = rng.sample(StandardNormal);
                let tilde = reflect(t + self.sigma * z, lo, seq.t_end());
                let eps = tilde - t;
                self.model.eval_jets(params, tilde, h, true, &mut jets)?;
                jets.total_into(&mut total);
                score.fill(&total, self.kind);
                let resid = score.psi + eps / var;
                value += 0.5 * scale * resid * resid;
                for (gi, gp) in grad.iter_mut().zip(&score.grad_psi) {
                    *gi += scale * resid * gp;
                }
            }
            if use_ce {
                self.model.eval_jets(params, t, h, true, &mut jets)?;
                jets.total_into(&mut total);
                let k = seq.mark(n);
                let lam_k = jets.value[k];
                value += self.ce_weight * (total.value.ln() - lam_k.ln());
                for ((gi, a), b) in grad.iter_mut().zip(jets.grad_value_of(k)).zip(&total.grad_value) {
                    *gi += self.ce_weight * (b / total.value - a / lam_k);
                }
            }
        }
        Ok(value)
    }
}

/// Folds `x` into `(lo, hi]` by reflection at both ends.
fn reflect(mut x: f64, lo: f64, hi: f64) -> f64 {
    let width = hi - lo;
    if !(width > 0.0) {
        return hi;
    }
    if x <= lo || x > hi {
        // reflection is periodic with period 2·width
        let period = 2.0 * width;
        let r = (x - lo).rem_euclid(period);
        x = if r <= width { lo + r } else { lo + period - r };
    }
    if x <= lo {
        // only reachable for an exact hit on the lower end
        x = lo + 0.5 * width;
    }
    x
}

impl Objective for Denoising<'_> {
    fn name(&self) -> &str {
        "dsm"
    }

    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn evaluate(&self, params: &[f64], step: u64) -> Result<Evaluation> {
        mean_over(self.data.len(), self.num_params(), |m, g| {
            self.sequence_term(params, step, m, g)
        })
    }
}

/// `(ψ(t̃) + ε/σ²)² / 2L` for one perturbed copy, given the score there.
pub fn dsm_term(psi: f64, eps: f64, sigma: f64, samples: usize) -> f64 {
    let r = psi + eps / (sigma * sigma);
    0.5 * r * r / samples as f64
}
