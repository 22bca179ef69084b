//! Analytic-versus-finite-difference gradient checks on random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tpp_core::models::{HawkesModel, SinePoisson};
use tpp_core::objectives::{CompensatorRule, CrossEntropy, Denoising, NegLogLikelihood, ScoreMatching};
use tpp_core::optimize::finite_diff_grad;
use tpp_core::simulate::{simulate_dataset, SimConfig};
use tpp_core::{Dataset, IntensityModel, Objective, ParamVector, Result, ScoreKind, WeightFunction, WeightKind};

/// Objectives covered by the suite.
pub const CHECKED: [&str; 8] = ["sm", "asm", "wsm", "awsm", "combined", "ce", "mle", "dsm"];

pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GradientCheck {
    pub objective: &'static str,
    pub instances: usize,
    pub max_rel_err: f64,
    /// Description of the worst instance.
    pub worst: String,
}

/// `‖g_analytic − g_fd‖ / max(‖g_analytic‖, ‖g_fd‖)` in unconstrained
/// coordinates at optimizer step 0.
pub fn relative_gradient_error(objective: &dyn Objective, params: &ParamVector, h: f64) -> Result<f64> {
    let analytic = params.chain_to_unconstrained(&objective.evaluate(params.values(), 0)?.grad);
    let fd = finite_diff_grad(objective, params, h, 0)?;
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = analytic.iter().zip(&fd).map(|(a, b)| a - b).collect();
    let scale = norm(&analytic).max(norm(&fd));
    Ok(if scale == 0.0 { 0.0 } else { norm(&diff) / scale })
}

struct Instance {
    model: Box<dyn IntensityModel>,
    data: Dataset,
    params: ParamVector,
    label: String,
}

fn random_model(rng: &mut ChaCha8Rng, marked: bool) -> Box<dyn IntensityModel> {
    let k = if marked || rng.random_bool(0.5) { 2 } else { 1 };
    let pick = if !marked { rng.random_range(0..4) } else { rng.random_range(1..4) };
    match pick {
        0 => Box::new(SinePoisson::default()),
        1 => Box::new(HawkesModel::exponential(k, rng.random_range(1.0..6.0))),
        2 => Box::new(HawkesModel::gaussian(k)),
        _ => Box::new(HawkesModel::half_sin(k)),
    }
}

fn random_params(rng: &mut ChaCha8Rng, model: &dyn IntensityModel) -> Result<ParamVector> {
    let specs = model.param_specs();
    let values = specs
        .iter()
        .map(|s| {
            if s.name == "theta" {
                rng.random_range(-2.5..2.5)
            } else if s.name.starts_with("mu") {
                rng.random_range(0.3..1.5)
            } else if s.name.starts_with("alpha") {
                rng.random_range(0.05..0.6)
            } else {
                rng.random_range(0.5..1.5)
            }
        })
        .collect();
    ParamVector::new(specs, values)
}

fn random_instance(rng: &mut ChaCha8Rng, marked: bool) -> Result<Instance> {
    let model = random_model(rng, marked);
    let truth = random_params(rng, model.as_ref())?;
    let sim = SimConfig::new(rng.random_range(1.5..5.0), rng.random_range(2..6), rng.random());
    let data = simulate_dataset(model.as_ref(), truth.values(), &sim)?;
    let params = random_params(rng, model.as_ref())?;
    let label = format!("{} K={} T={:.2} M={} theta={:?}", model.name(), model.num_types(), sim.t_end, sim.num_sequences, params.values());
    Ok(Instance {
        model,
        data,
        params,
        label,
    })
}

fn random_weight(rng: &mut ChaCha8Rng) -> WeightFunction {
    const KINDS: [WeightKind; 4] = [WeightKind::TentH0, WeightKind::ProductH1, WeightKind::SqrtH2, WeightKind::PoissonDistance];
    WeightFunction::new(KINDS[rng.random_range(0..KINDS.len())])
}

fn objective_for<'a>(name: &str, inst: &'a Instance, rng: &mut ChaCha8Rng) -> Result<Box<dyn Objective + 'a>> {
    let m = inst.model.as_ref();
    let d = &inst.data;
    Ok(match name {
        "sm" => Box::new(ScoreMatching::new(m, d, WeightFunction::unit(), ScoreKind::Joint)?),
        "asm" => Box::new(ScoreMatching::new(m, d, WeightFunction::unit(), ScoreKind::Conditional)?),
        "wsm" => Box::new(ScoreMatching::new(m, d, random_weight(rng), ScoreKind::Joint)?),
        "awsm" => Box::new(ScoreMatching::new(m, d, random_weight(rng), ScoreKind::Conditional)?),
        "combined" => Box::new(
            ScoreMatching::new(m, d, random_weight(rng), ScoreKind::Conditional)?
                .with_cross_entropy(rng.random_range(0.5..20.0)),
        ),
        "ce" => Box::new(CrossEntropy::new(m, d)?),
        "mle" => {
            let rule = match rng.random_range(0..3) {
                0 => CompensatorRule::Exact,
                1 => CompensatorRule::Global { nodes: 50 },
                _ => CompensatorRule::PerSegment { nodes: 8 },
            };
            Box::new(NegLogLikelihood::new(m, d, rule)?)
        }
        "dsm" => {
            let kind = if m.name() == "sine_poisson" { ScoreKind::Joint } else { ScoreKind::Conditional };
            Box::new(Denoising::new(m, d, 0.05, 2, rng.random())?.with_score(kind))
        }
        other => unreachable!("unknown objective {other}"),
    })
}

/// Runs `instances` random checks of every objective in [`CHECKED`].
pub fn gradient_suite(instances: usize, seed: u64) -> Result<Vec<GradientCheck>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for name in CHECKED {
        let marked = matches!(name, "ce" | "combined");
        let mut worst = (0.0, String::new());
        for _ in 0..instances {
            let inst = random_instance(&mut rng, marked)?;
            let obj = objective_for(name, &inst, &mut rng)?;
            let err = relative_gradient_error(obj.as_ref(), &inst.params, FD_STEP)?;
            if !(err <= worst.0) {
                worst = (err, inst.label.clone());
            }
        }
        out.push(GradientCheck {
            objective: name,
            instances,
            max_rel_err: worst.0,
            worst: worst.1,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        for c in gradient_suite(3, 11).unwrap() {
            assert!(c.max_rel_err < 1e-5, "{c:?}");
        }
    }
}
