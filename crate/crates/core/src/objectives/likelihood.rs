use serde::{Deserialize, Serialize};

use super::{mean_over, Evaluation, Objective};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{IntensityModel, Jet, TypeJets};
use crate::quadrature::GaussLegendre;
use crate::sequence::EventSequence;

/// How the likelihood's compensator `∫_0^T λ_total` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum CompensatorRule {
    /// The model's own compensator (closed form where available).
    Exact,
    /// One Gauss–Legendre rule over the whole window.
    Global { nodes: usize },
    /// A Gauss–Legendre rule on every inter-event segment.
    PerSegment { nodes: usize },
}

impl Default for CompensatorRule {
    fn default() -> Self {
        CompensatorRule::Global { nodes: 100 }
    }
}

fn check_types(model: &dyn IntensityModel, data: &Dataset) -> Result<()> {
    if data.num_types() != model.num_types() {
        return Err(Error::MarkMismatch(format!(
            "dataset has {} types, model {}",
            data.num_types(),
            model.num_types()
        )));
    }
    Ok(())
}

/// Negative log-likelihood `−Σ_n log λ_{k_n}(t_n) + ∫_0^T λ_total`,
/// averaged over sequences.
pub struct NegLogLikelihood<'a> {
    model: &'a dyn IntensityModel,
    data: &'a Dataset,
    rule: CompensatorRule,
    quadrature: Option<GaussLegendre>,
}

impl<'a> NegLogLikelihood<'a> {
    pub fn new(model: &'a dyn IntensityModel, data: &'a Dataset, rule: CompensatorRule) -> Result<Self> {
        check_types(model, data)?;
        let quadrature = match rule {
            CompensatorRule::Exact => None,
            CompensatorRule::Global { nodes } | CompensatorRule::PerSegment { nodes } => {
                if nodes == 0 {
                    return Err(Error::Config("quadrature needs at least one node".into()));
                }
                Some(GaussLegendre::new(nodes))
            }
        };
        Ok(Self {
            model,
            data,
            rule,
            quadrature,
        })
    }

    /// Compensator over the window of `seq`, with gradients added to `grad`.
    fn compensator(
        &self,
        params: &[f64],
        seq: &EventSequence,
        jets: &mut TypeJets,
        total: &mut Jet,
        mut grad: Option<&mut [f64]>,
    ) -> Result<f64> {
        let history = seq.history();
        let t_end = seq.t_end();
        let Some(rule) = &self.quadrature else {
            return self.model.compensator(params, 0.0, t_end, history, grad);
        };
        let with_grads = grad.is_some();
        let mut value = 0.0;
        let mut integrate = |a: f64, b: f64, n_before: Option<usize>| -> Result<()> {
            for (x, w) in rule.on(a, b) {
                let h = match n_before {
                    Some(n) => history.prefix(n),
                    None => history.before(x),
                };
                self.model.eval_jets(params, x, h, with_grads, jets)?;
                jets.total_into(total);
                value += w * total.value;
                if let Some(g) = grad.as_deref_mut() {
                    for (gi, gv) in g.iter_mut().zip(&total.grad_value) {
                        *gi += w * gv;
                    }
                }
            }
            Ok(())
        };
        match self.rule {
            CompensatorRule::PerSegment { .. } => {
                let mut prev = 0.0;
                for (n, &t) in seq.times().iter().enumerate() {
                    integrate(prev, t, Some(n))?;
                    prev = t;
                }
                integrate(prev, t_end, Some(seq.len()))?;
            }
            _ => integrate(0.0, t_end, None)?,
        }
        Ok(value)
    }

    fn sequence_term(&self, params: &[f64], m: usize, grad: &mut [f64]) -> Result<f64> {
        let seq = &self.data.sequences()[m];
        let mut jets = TypeJets::for_model(self.model);
        let mut total = Jet::default();
        let history = seq.history();
        let mut value = 0.0;
        for (n, &t) in seq.times().iter().enumerate() {
            self.model.eval_jets(params, t, history.prefix(n), true, &mut jets)?;
            let k = seq.mark(n);
            let lam = jets.value[k];
            value -= lam.ln();
            for (gi, gv) in grad.iter_mut().zip(jets.grad_value_of(k)) {
                *gi -= gv / lam;
            }
        }
        value += self.compensator(params, seq, &mut jets, &mut total, Some(grad))?;
        Ok(value)
    }
}

impl Objective for NegLogLikelihood<'_> {
    fn name(&self) -> &str {
        "mle"
    }

    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn evaluate(&self, params: &[f64], _step: u64) -> Result<Evaluation> {
        mean_over(self.data.len(), self.num_params(), |m, g| {
            self.sequence_term(params, m, g)
        })
    }
}

/// Event-type negative log-likelihood
/// `−Σ_n [log λ_{k_n}(t_n) − log λ_total(t_n)]`, averaged over sequences.
pub struct CrossEntropy<'a> {
    model: &'a dyn IntensityModel,
    data: &'a Dataset,
}

impl<'a> CrossEntropy<'a> {
    pub fn new(model: &'a dyn IntensityModel, data: &'a Dataset) -> Result<Self> {
        check_types(model, data)?;
        Ok(Self { model, data })
    }

    fn sequence_term(&self, params: &[f64], m: usize, grad: &mut [f64]) -> Result<f64> {
        let seq = &self.data.sequences()[m];
        if self.model.num_types() == 1 {
            return Ok(0.0);
        }
        let mut jets = TypeJets::for_model(self.model);
        let mut total = Jet::default();
        let history = seq.history();
        let mut value = 0.0;
        for (n, &t) in seq.times().iter().enumerate() {
            self.model.eval_jets(params, t, history.prefix(n), true, &mut jets)?;
            jets.total_into(&mut total);
            let k = seq.mark(n);
            let lam_k = jets.value[k];
            value += total.value.ln() - lam_k.ln();
            for ((gi, a), b) in grad.iter_mut().zip(jets.grad_value_of(k)).zip(&total.grad_value) {
                *gi += b / total.value - a / lam_k;
            }
        }
        Ok(value)
    }
}

impl Objective for CrossEntropy<'_> {
    fn name(&self) -> &str {
        "ce"
    }

    fn num_params(&self) -> usize {
        self.model.num_params()
    }

    fn evaluate(&self, params: &[f64], _step: u64) -> Result<Evaluation> {
        mean_over(self.data.len(), self.num_params(), |m, g| {
            self.sequence_term(params, m, g)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{HawkesModel, SinePoisson};
    use crate::objectives::{j_ce, nll_mle};

    fn one(times: Vec<f64>, t_end: f64) -> Dataset {
        Dataset::new(vec![EventSequence::new(times, t_end).unwrap()], 1).unwrap()
    }

    #[test]
    fn homogeneous_closed_form() {
        let m = HawkesModel::exponential(1, 5.0);
        let d = one(vec![0.5, 1.0, 2.5], 3.0);
        let c: f64 = 1.7;
        for rule in [
            CompensatorRule::Exact,
            CompensatorRule::Global { nodes: 5 },
            CompensatorRule::PerSegment { nodes: 2 },
        ] {
            let v = nll_mle(&m, &[c, 1e-300], &d, rule).unwrap().value;
            assert!((v - (-3.0 * c.ln() + 3.0 * c)).abs() < 1e-12, "{rule:?}");
        }
    }

    #[test]
    fn flat_sine_poisson() {
        let m = SinePoisson::default();
        let d = one(vec![0.2, 0.9, 1.4], 2.0);
        let v = nll_mle(&m, &[0.0], &d, CompensatorRule::default()).unwrap().value;
        assert!((v - 2.0).abs() < 1e-13);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        let m = HawkesModel::exponential(1, 5.0);
        let d = one(vec![0.3, 0.35, 1.2, 2.0, 2.1, 3.7], 4.0);
        let p = [0.9, 1.4];
        let exact = nll_mle(&m, &p, &d, CompensatorRule::Exact).unwrap().value;
        let quad = nll_mle(&m, &p, &d, CompensatorRule::PerSegment { nodes: 1000 })
            .unwrap()
            .value;
        assert!(((exact - quad) / exact).abs() < 1e-8);
    }

    #[test]
    fn zero_nodes_rejected() {
        let m = SinePoisson::default();
        let d = one(vec![], 1.0);
        assert!(NegLogLikelihood::new(&m, &d, CompensatorRule::Global { nodes: 0 }).is_err());
    }

    fn marked(times: Vec<f64>, marks: Vec<usize>, t_end: f64) -> Dataset {
        Dataset::new(vec![EventSequence::with_marks(times, marks, t_end, 2).unwrap()], 2).unwrap()
    }

    #[test]
    fn uniform_types_give_log_two() {
        let m = HawkesModel::exponential(2, 5.0);
        let d = marked(vec![0.4, 1.0, 1.5], vec![0, 1, 1], 2.0);
        let p = [1.0, 1.0, 0.3, 0.3, 0.3, 0.3];
        let v = j_ce(&m, &p, &d).unwrap().value;
        assert!((v - 3.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn certain_types_give_zero() {
        let m = HawkesModel::exponential(2, 5.0);
        let d = marked(vec![0.4, 1.0], vec![0, 0], 2.0);
        let p = [1.0, 1e-300, 0.5, 1e-300, 1e-300, 1e-300];
        let v = j_ce(&m, &p, &d).unwrap().value;
        assert!(v.abs() < 1e-12);
    }

    #[test]
    fn ce_requires_matching_types() {
        let m = HawkesModel::exponential(2, 5.0);
        let d = one(vec![0.5], 1.0);
        assert!(matches!(CrossEntropy::new(&m, &d), Err(Error::MarkMismatch(_))));
    }
}
