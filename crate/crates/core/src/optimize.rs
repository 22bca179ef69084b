//! Full-batch Adam over the unconstrained parameterization.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objectives::Objective;
use crate::params::ParamVector;

/// Losses above this abort the fit.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum GradMode {
    Analytic,
    FiniteDiff { step: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    #[serde(alias = "iters")]
    pub iterations: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub grad_mode: GradMode,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            iterations: 500,
            lr: 0.05,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 1,
            grad_mode: GradMode::Analytic,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::Config("Adam decay rates must lie in [0, 1)".into()));
        }
        if let GradMode::FiniteDiff { step } = self.grad_mode {
            if !(step > 0.0) {
                return Err(Error::Config(format!("finite-difference step must be positive, got {step}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub objective: String,
    pub estimate: ParamVector,
    /// Loss at each iterate before its update.
    pub loss_trace: Vec<f64>,
    /// Euclidean norm of the unconstrained gradient at each iterate.
    pub grad_norm_trace: Vec<f64>,
    pub iterations: usize,
    /// Seconds; the only field that varies between identical runs.
    pub wall_time: f64,
}

fn at_iteration(e: Error, iteration: usize) -> Error {
    match e {
        Error::NonFiniteLoss { sequence, .. } => Error::NonFiniteLoss {
            sequence,
            iteration: Some(iteration),
        },
        other => other,
    }
}

/// Value and unconstrained gradient at the unconstrained point `u`.
fn value_and_grad(
    objective: &dyn Objective,
    template: &ParamVector,
    u: &[f64],
    step: u64,
    mode: GradMode,
) -> Result<(f64, Vec<f64>)> {
    let p = template.from_unconstrained(u)?;
    match mode {
        GradMode::Analytic => {
            let e = objective.evaluate(p.values(), step)?;
            Ok((e.value, p.chain_to_unconstrained(&e.grad)))
        }
        GradMode::FiniteDiff { step: h } => {
            let v = objective.value(p.values(), step)?;
            Ok((v, finite_diff_grad(objective, &p, h, step)?))
        }
    }
}

/// Central differences of `objective` in the unconstrained coordinates of
/// `params`, evaluated at optimizer step `step`.
pub fn finite_diff_grad(objective: &dyn Objective, params: &ParamVector, h: f64, step: u64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let u = params.to_unconstrained();
    let mut grad = Vec::with_capacity(u.len());
    let mut probe = u.clone();
    for i in 0..u.len() {
        probe[i] = u[i] + h;
        let up = objective.value(params.from_unconstrained(&probe)?.values(), step)?;
        probe[i] = u[i] - h;
        let down = objective.value(params.from_unconstrained(&probe)?.values(), step)?;
        probe[i] = u[i];
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Minimizes `objective` from `init` with Adam.
pub fn fit(objective: &dyn Objective, init: &ParamVector, cfg: &OptimConfig) -> Result<FitResult> {
    cfg.validate()?;
    if init.len() != objective.num_params() {
        return Err(Error::InvalidParameter(format!(
            "objective has {} parameters, init has {}",
            objective.num_params(),
            init.len()
        )));
    }
    let start = Instant::now();
    let r = init.len();
    let mut u = init.to_unconstrained();
    let mut m = vec![0.0; r];
    let mut v = vec![0.0; r];
    let mut loss_trace = Vec::with_capacity(cfg.iterations);
    let mut grad_norm_trace = Vec::with_capacity(cfg.iterations);
    let (mut b1t, mut b2t) = (1.0, 1.0);
    for it in 0..cfg.iterations {
        let (loss, g) = value_and_grad(objective, init, &u, it as u64, cfg.grad_mode)
            .map_err(|e| at_iteration(e, it))?;
        if loss > DIVERGENCE_LIMIT {
            return Err(Error::Diverged { iteration: it, loss });
        }
        loss_trace.push(loss);
        grad_norm_trace.push(g.iter().map(|x| x * x).sum::<f64>().sqrt());
        b1t *= cfg.beta1;
        b2t *= cfg.beta2;
        for i in 0..r {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let m_hat = m[i] / (1.0 - b1t);
            let v_hat = v[i] / (1.0 - b2t);
            u[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::Diverged { iteration: it, loss });
        }
    }
    let estimate = init.from_unconstrained(&u)?;
    Ok(FitResult {
        objective: objective.name().to_string(),
        estimate,
        loss_trace,
        grad_norm_trace,
        iterations: cfg.iterations,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::Evaluation;
    use crate::params::ParamSpec;

    struct Quadratic;

    impl Objective for Quadratic {
        fn name(&self) -> &str {
            "quadratic"
        }
        fn num_params(&self) -> usize {
            1
        }
        fn evaluate(&self, p: &[f64], _step: u64) -> Result<Evaluation> {
            Ok(Evaluation {
                value: (p[0] - 3.0).powi(2),
                grad: vec![2.0 * (p[0] - 3.0)],
            })
        }
    }

    struct Linear(Vec<f64>);

    impl Objective for Linear {
        fn name(&self) -> &str {
            "linear"
        }
        fn num_params(&self) -> usize {
            self.0.len()
        }
        fn evaluate(&self, p: &[f64], _step: u64) -> Result<Evaluation> {
            Ok(Evaluation {
                value: p.iter().zip(&self.0).map(|(a, b)| a * b).sum(),
                grad: self.0.clone(),
            })
        }
    }

    fn free(values: Vec<f64>) -> ParamVector {
        let specs = (0..values.len()).map(|i| ParamSpec::free(format!("x{i}"))).collect();
        ParamVector::new(specs, values).unwrap()
    }

    #[test]
    fn quadratic_converges() {
        let cfg = OptimConfig {
            lr: 0.1,
            ..OptimConfig::default()
        };
        let r = fit(&Quadratic, &free(vec![0.0]), &cfg).unwrap();
        assert!((r.estimate.values()[0] - 3.0).abs() < 1e-3, "{:?}", r.estimate);
        assert_eq!(r.loss_trace.len(), 500);
    }

    #[test]
    fn stationary_start_is_fixed_point() {
        let r = fit(&Quadratic, &free(vec![3.0]), &OptimConfig::default()).unwrap();
        assert_eq!(r.estimate.values()[0], 3.0);
    }

    #[test]
    fn linear_finite_difference() {
        let obj = Linear(vec![1.5, -2.0]);
        let g = finite_diff_grad(&obj, &free(vec![0.3, 0.7]), 1e-3, 0).unwrap();
        assert!((g[0] - 1.5).abs() < 1e-8 && (g[1] + 2.0).abs() < 1e-8);
        assert!(finite_diff_grad(&obj, &free(vec![0.3, 0.7]), 0.0, 0).is_err());
    }

    #[test]
    fn finite_diff_mode_matches_analytic() {
        let a = fit(&Quadratic, &free(vec![0.0]), &OptimConfig::default()).unwrap();
        let cfg = OptimConfig {
            grad_mode: GradMode::FiniteDiff { step: 1e-6 },
            ..OptimConfig::default()
        };
        let b = fit(&Quadratic, &free(vec![0.0]), &cfg).unwrap();
        assert!((a.estimate.values()[0] - b.estimate.values()[0]).abs() < 1e-3);
    }

    #[test]
    fn positive_parameters_stay_positive() {
        let specs = vec![ParamSpec::positive("x")];
        let init = ParamVector::new(specs, vec![1.0]).unwrap();
        // minimum of x·5 on x > 0 is at the boundary
        let r = fit(&Linear(vec![5.0]), &init, &OptimConfig::default()).unwrap();
        assert!(r.estimate.values()[0] > 0.0);
        assert!(r.estimate.values()[0] < 1.0);
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = OptimConfig {
            iterations: 0,
            ..OptimConfig::default()
        };
        assert!(matches!(fit(&Quadratic, &free(vec![0.0]), &cfg), Err(Error::Config(_))));
    }

    struct Exploding;

    impl Objective for Exploding {
        fn name(&self) -> &str {
            "exploding"
        }
        fn num_params(&self) -> usize {
            1
        }
        fn evaluate(&self, p: &[f64], step: u64) -> Result<Evaluation> {
            if step == 3 {
                return Err(Error::NonFiniteLoss {
                    sequence: Some(2),
                    iteration: None,
                });
            }
            Ok(Evaluation {
                value: p[0],
                grad: vec![1.0],
            })
        }
    }

    #[test]
    fn non_finite_reports_iteration() {
        let err = fit(&Exploding, &free(vec![0.0]), &OptimConfig::default()).unwrap_err();
        assert_eq!(
            err,
            Error::NonFiniteLoss {
                sequence: Some(2),
                iteration: Some(3)
            }
        );
    }
}
