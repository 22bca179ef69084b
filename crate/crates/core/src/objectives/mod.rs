//! Empirical losses with analytic parameter gradients.
//!
//! All objectives average per-sequence terms over the `M` sequences of a
//! dataset. Sequences are evaluated in parallel and reduced in index order,
//! so values are bit-identical for any number of worker threads.

mod denoising;
mod likelihood;
mod oracle;
mod score_matching;

pub use denoising::{dsm_term, Denoising};
pub use likelihood::{CompensatorRule, CrossEntropy, NegLogLikelihood};
pub use oracle::{explicit_loss_per_sequence, explicit_oracle_gap, OracleGap};
pub use score_matching::{an_bn_terms, support_for, ScoreMatching};

use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::models::{IntensityModel, ScoreKind};
use crate::weights::WeightFunction;

/// Value and gradient with respect to the (constrained) parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub grad: Vec<f64>,
}

pub trait Objective: Sync {
    fn name(&self) -> &str;

    fn num_params(&self) -> usize;

    /// Evaluates at optimizer step `step`. Deterministic objectives ignore
    /// the step; stochastic ones derive their noise from it.
    fn evaluate(&self, params: &[f64], step: u64) -> Result<Evaluation>;

    fn value(&self, params: &[f64], step: u64) -> Result<f64> {
        Ok(self.evaluate(params, step)?.value)
    }
}

/// Mean of per-sequence `(value, grad)` terms over `m` sequences.
pub(crate) fn mean_over<F>(m: usize, r: usize, per_sequence: F) -> Result<Evaluation>
where
    F: Fn(usize, &mut [f64]) -> Result<f64> + Sync,
{
    let parts: Vec<Result<(f64, Vec<f64>)>> = (0..m)
        .into_par_iter()
        .map(|i| {
            let mut g = vec![0.0; r];
            let v = per_sequence(i, &mut g)?;
            if !v.is_finite() || g.iter().any(|x| !x.is_finite()) {
                return Err(Error::non_finite_in(i));
            }
            Ok((v, g))
        })
        .collect();
    let mut value = 0.0;
    let mut grad = vec![0.0; r];
    for part in parts {
        let (v, g) = part?;
        value += v;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    if m > 0 {
        let scale = 1.0 / m as f64;
        value *= scale;
        for g in &mut grad {
            *g *= scale;
        }
    }
    Ok(Evaluation { value, grad })
}

fn eval_once(obj: &dyn Objective, params: &[f64]) -> Result<Evaluation> {
    obj.evaluate(params, 0)
}

/// Implicit autoregressive weighted score matching.
pub fn j_awsm(
    model: &dyn IntensityModel,
    params: &[f64],
    data: &Dataset,
    weight: WeightFunction,
) -> Result<Evaluation> {
    eval_once(
        &ScoreMatching::new(model, data, weight, ScoreKind::Conditional)?,
        params,
    )
}

/// Implicit weighted score matching with the joint Poisson score.
pub fn j_wsm(
    model: &dyn IntensityModel,
    params: &[f64],
    data: &Dataset,
    weight: WeightFunction,
) -> Result<Evaluation> {
    eval_once(&ScoreMatching::new(model, data, weight, ScoreKind::Joint)?, params)
}

/// Plain implicit score matching with the joint Poisson score.
pub fn j_sm(model: &dyn IntensityModel, params: &[f64], data: &Dataset) -> Result<Evaluation> {
    j_wsm(model, params, data, WeightFunction::unit())
}

/// Plain implicit autoregressive score matching.
pub fn j_asm(model: &dyn IntensityModel, params: &[f64], data: &Dataset) -> Result<Evaluation> {
    j_awsm(model, params, data, WeightFunction::unit())
}

/// `J_AWSM + α J_CE`.
pub fn j_combined(
    model: &dyn IntensityModel,
    params: &[f64],
    data: &Dataset,
    weight: WeightFunction,
    alpha: f64,
) -> Result<Evaluation> {
    let obj = ScoreMatching::new(model, data, weight, ScoreKind::Conditional)?
        .with_cross_entropy(alpha);
    eval_once(&obj, params)
}

/// Mean event-type negative log-likelihood.
pub fn j_ce(model: &dyn IntensityModel, params: &[f64], data: &Dataset) -> Result<Evaluation> {
    eval_once(&CrossEntropy::new(model, data)?, params)
}

/// Mean negative log-likelihood per sequence.
pub fn nll_mle(
    model: &dyn IntensityModel,
    params: &[f64],
    data: &Dataset,
    rule: CompensatorRule,
) -> Result<Evaluation> {
    eval_once(&NegLogLikelihood::new(model, data, rule)?, params)
}

/// Denoising score matching with noise drawn from `(seed, step)`.
pub fn j_dsm(
    model: &dyn IntensityModel,
    params: &[f64],
    data: &Dataset,
    sigma: f64,
    samples: usize,
    seed: u64,
) -> Result<Evaluation> {
    Denoising::new(model, data, sigma, samples, seed)?.evaluate(params, 0)
}
