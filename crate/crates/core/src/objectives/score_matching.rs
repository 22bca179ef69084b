use super::{mean_over, Evaluation, Objective};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{IntensityModel, Jet, ScoreJet, ScoreKind, TypeJets};
use crate::sequence::EventSequence;
use crate::weights::{Support, WeightFunction, WeightKind, WeightValue};

/// Implicit (weighted) score matching:
/// `Σ_n ½ψ²h_n + (∂ψ/∂t_n) h_n + ψ ∂h_n/∂t_n`, averaged over sequences.
///
/// With the unit weight this is plain SM (joint score) or ASM (conditional
/// score). An optional event-type cross-entropy term is added for marked
/// data.
pub struct ScoreMatching<'a> {
    model: &'a dyn IntensityModel,
    data: Dataset,
    weights: Vec<Vec<WeightValue>>,
    kind: ScoreKind,
    ce_weight: f64,
    name: String,
}

impl<'a> ScoreMatching<'a> {
    pub fn new(
        model: &'a dyn IntensityModel,
        data: &Dataset,
        weight: WeightFunction,
        kind: ScoreKind,
    ) -> Result<Self> {
        if data.num_types() != model.num_types() {
            return Err(Error::MarkMismatch(format!(
                "dataset has {} types, model {}",
                data.num_types(),
                model.num_types()
            )));
        }
        let prepared = weight.prepare(data, support_for(kind))?;
        let name = match (weight.kind, kind) {
            (WeightKind::Unit, ScoreKind::Joint) => "sm",
            (WeightKind::Unit, ScoreKind::Conditional) => "asm",
            (_, ScoreKind::Joint) => "wsm",
            (_, ScoreKind::Conditional) => "awsm",
        };
        Ok(Self {
            model,
            data: prepared.data,
            weights: prepared.weights,
            kind,
            ce_weight: 0.0,
            name: name.to_string(),
        })
    }

    /// Adds `alpha · J_CE`; ignored for single-type data.
    pub fn with_cross_entropy(mut self, alpha: f64) -> Self {
        self.ce_weight = alpha;
        if alpha != 0.0 && self.model.num_types() > 1 {
            self.name = format!("{}+ce", self.name);
        }
        self
    }

    /// The dataset after window handling (truncation may shorten sequences).
    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn sequence_term(&self, params: &[f64], m: usize, grad: Option<&mut [f64]>) -> Result<f64> {
        let seq = &self.data.sequences()[m];
        let weights = &self.weights[m];
        let model = self.model;
        let with_grads = grad.is_some();
        let mut grad = grad;
        let mut jets = TypeJets::for_model(model);
        let mut total = Jet::default();
        let mut score = ScoreJet::default();
        let use_ce = self.ce_weight != 0.0 && model.num_types() > 1;
        let mut value = 0.0;
        let history = seq.history();
        for (n, w) in weights.iter().enumerate() {
            let sm_active = w.h != 0.0 || w.dh != 0.0;
            if !sm_active && !use_ce {
                continue;
            }
            let t = seq.times()[n];
            model.eval_jets(params, t, history.prefix(n), with_grads, &mut jets)?;
            jets.total_into(&mut total);
            if sm_active {
                score.fill(&total, self.kind);
                value += 0.5 * score.psi * score.psi * w.h + score.dpsi * w.h + score.psi * w.dh;
                if let Some(g) = grad.as_deref_mut() {
                    let c_psi = score.psi * w.h + w.dh;
                    for ((gi, gp), gd) in g.iter_mut().zip(&score.grad_psi).zip(&score.grad_dpsi) {
                        *gi += c_psi * gp + w.h * gd;
                    }
                }
            }
            if use_ce {
                let k = seq.mark(n);
                let lam_k = jets.value[k];
                value += self.ce_weight * (total.value.ln() - lam_k.ln());
                if let Some(g) = grad.as_deref_mut() {
                    let gk = jets.grad_value_of(k);
                    for ((gi, a), b) in g.iter_mut().zip(gk).zip(&total.grad_value) {
                        *gi += self.ce_weight * (b / total.value - a / lam_k);
                    }
                }
            }
        }
        Ok(value)
    }

    /// Per-sequence objective values, in dataset order.
    pub fn per_sequence_values(&self, params: &[f64]) -> Result<Vec<f64>> {
        use rayon::prelude::*;
        (0..self.data.len())
            .into_par_iter()
            .map(|m| {
                let v = self.sequence_term(params, m, None)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::non_finite_in(m))
                }
            })
            .collect()
    }
}

impl Objective for ScoreMatching<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn evaluate(&self, params: &[f64], _step: u64) -> Result<Evaluation> {
        mean_over(self.data.len(), self.num_params(), |m, g| {
            self.sequence_term(params, m, Some(g))
        })
    }

    fn value(&self, params: &[f64], _step: u64) -> Result<f64> {
        let v = self.per_sequence_values(params)?;
        Ok(v.iter().sum::<f64>() / v.len().max(1) as f64)
    }
}

/// Weight support matching a score: the joint score bounds `t_n` by its
/// successor as well.
pub fn support_for(kind: ScoreKind) -> Support {
    match kind {
        ScoreKind::Joint => Support::NextEvent,
        ScoreKind::Conditional => Support::WindowEnd,
    }
}

/// `A_n = ½ψ² + ∂ψ/∂t_n` and `B_n = ψ` for event `n` (zero-based).
pub fn an_bn_terms(
    model: &dyn IntensityModel,
    params: &[f64],
    seq: &EventSequence,
    n: usize,
    kind: ScoreKind,
) -> Result<(f64, f64)> {
    let history = seq.history_before(n)?;
    if n >= seq.len() {
        return Err(Error::IndexOutOfRange {
            index: n,
            len: seq.len(),
        });
    }
    let s = crate::models::score_jet(model, params, seq.times()[n], history, kind)?;
    Ok((0.5 * s.psi * s.psi + s.dpsi, s.psi))
}
