//! Maps estimator names to objectives.

use tpp_core::objectives::{CrossEntropy, Denoising, NegLogLikelihood, ScoreMatching};
use tpp_core::{Dataset, IntensityModel, Objective, Result, ScoreKind, WeightFunction};

use crate::config::{ObjectiveConfig, ObjectiveName};

/// Builds the objective for `name`.
///
/// On marked data every score-based estimator carries `alpha · J_CE`, since
/// the total-intensity score alone does not identify how excitation splits
/// across types. `dsm_score` is the score DSM uses: the joint score for
/// Poisson models and the conditional score for Hawkes models.
pub fn build_objective<'a>(
    name: ObjectiveName,
    model: &'a dyn IntensityModel,
    data: &'a Dataset,
    weight: WeightFunction,
    cfg: &ObjectiveConfig,
    dsm_score: ScoreKind,
    seed: u64,
) -> Result<Box<dyn Objective + 'a>> {
    let alpha = cfg.alpha;
    let score = |w: WeightFunction, kind: ScoreKind| -> Result<Box<dyn Objective + 'a>> {
        Ok(Box::new(ScoreMatching::new(model, data, w, kind)?.with_cross_entropy(alpha)))
    };
    match name {
        ObjectiveName::Mle => Ok(Box::new(NegLogLikelihood::new(model, data, cfg.compensator_rule())?)),
        ObjectiveName::Sm => score(WeightFunction::unit(), ScoreKind::Joint),
        ObjectiveName::Asm => score(WeightFunction::unit(), ScoreKind::Conditional),
        ObjectiveName::Wsm => score(weight, ScoreKind::Joint),
        ObjectiveName::Awsm | ObjectiveName::Combined => score(weight, ScoreKind::Conditional),
        ObjectiveName::Ce => Ok(Box::new(CrossEntropy::new(model, data)?)),
        ObjectiveName::Dsm => Ok(Box::new(
            Denoising::new(model, data, cfg.dsm_sigma, cfg.dsm_samples, seed)?
                .with_score(dsm_score)
                .with_cross_entropy(alpha),
        )),
    }
}
