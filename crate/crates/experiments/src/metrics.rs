//! Error metrics and held-out likelihood.

use tpp_core::objectives::{CompensatorRule, NegLogLikelihood};
use tpp_core::{Dataset, Error, IntensityModel, Objective, ParamVector, Result};

fn aligned<'a>(est: &'a ParamVector, truth: &'a ParamVector) -> Result<impl Iterator<Item = (&'a str, f64, f64)>> {
    if est.len() != truth.len() || est.names().zip(truth.names()).any(|(a, b)| a != b) {
        return Err(Error::NameMismatch(format!(
            "estimate has [{}], truth has [{}]",
            est.names().collect::<Vec<_>>().join(", "),
            truth.names().collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(est
        .names()
        .zip(est.values().iter().zip(truth.values()))
        .map(|(n, (&a, &b))| (n, a, b)))
}

/// `|θ̂ − θ|` per parameter, in parameter order.
pub fn mae(est: &ParamVector, truth: &ParamVector) -> Result<Vec<(String, f64)>> {
    Ok(aligned(est, truth)?.map(|(n, a, b)| (n.to_string(), (a - b).abs())).collect())
}

/// `θ̂ − θ` per parameter.
pub fn signed_error(est: &ParamVector, truth: &ParamVector) -> Result<Vec<(String, f64)>> {
    Ok(aligned(est, truth)?.map(|(n, a, b)| (n.to_string(), a - b)).collect())
}

/// Test log-likelihood in nats per event, with the model's own compensator.
pub fn evaluate_tll(model: &dyn IntensityModel, params: &[f64], test: &Dataset) -> Result<f64> {
    let events = test.num_events();
    if test.is_empty() || events == 0 {
        return Err(Error::Config("test log-likelihood needs at least one event".into()));
    }
    let nll = NegLogLikelihood::new(model, test, CompensatorRule::Exact)?;
    let per_sequence = nll.value(params, 0)?;
    Ok(-per_sequence * test.len() as f64 / events as f64)
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}
