//! MLE quadrature-node sweep against a single AWSM fit.

use std::path::Path;

use serde::Serialize;
use tpp_core::simulate::simulate_dataset;
use tpp_core::{Error, Result};

use crate::config::{ExperimentConfig, ObjectiveName, QuadratureLayout};
use crate::metrics::evaluate_tll;
use crate::output::{ensure_dir, write_csv, write_json, write_timings, Manifest};
use crate::table::fit_estimator;

/// Fraction of sequences, by index, used for training.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub estimator: ObjectiveName,
    /// Quadrature nodes of the MLE compensator; empty for AWSM.
    pub nodes: Option<usize>,
    /// Held-out log-likelihood, nats per event.
    pub tll: Option<f64>,
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: f64,
}

/// Fits MLE with a global `n`-node rule for each `n` in `nodes`, and AWSM
/// once, on the training part of the first seed's dataset.
pub fn sweep_mle_nodes(cfg: &ExperimentConfig, nodes: &[usize]) -> Result<Vec<SweepRow>> {
    if nodes.is_empty() {
        return Err(Error::Config("node list is empty".into()));
    }
    let model = cfg.model.build()?;
    let truth = cfg.model.truth_params(model.as_ref())?;
    let data = simulate_dataset(model.as_ref(), truth.values(), &cfg.sim_for_seed(cfg.seeds[0])?)?;
    let (train, test) = data.split(TRAIN_FRACTION);
    let run = |c: &ExperimentConfig, name: ObjectiveName, n: Option<usize>| -> Result<SweepRow> {
        let outcome = fit_estimator(c, model.as_ref(), &train, name, c.weight)
            .and_then(|r| Ok((evaluate_tll(model.as_ref(), r.estimate.values(), &test)?, r.wall_time)));
        Ok(match outcome {
            Ok((tll, wall_time)) => SweepRow {
                estimator: name,
                nodes: n,
                tll: Some(tll),
                error: None,
                wall_time,
            },
            Err(e) if e.is_numerical() => SweepRow {
                estimator: name,
                nodes: n,
                tll: None,
                error: Some(e.to_string()),
                wall_time: 0.0,
            },
            Err(e) => return Err(e),
        })
    };
    let mut rows = Vec::with_capacity(nodes.len() + 1);
    for &n in nodes {
        let mut c = cfg.clone();
        c.objective.mle_nodes = n;
        c.objective.mle_layout = QuadratureLayout::Global;
        rows.push(run(&c, ObjectiveName::Mle, Some(n))?);
    }
    rows.push(run(cfg, ObjectiveName::Awsm, None)?);
    Ok(rows)
}

pub fn write_sweep(cfg: &ExperimentConfig, nodes: &[usize], rows: &[SweepRow], dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_csv(&dir.join("sweep_nodes.csv"), rows)?;
    write_json(&dir.join("sweep_nodes.json"), rows)?;
    let timings: Vec<(String, f64)> = rows
        .iter()
        .map(|r| {
            let label = match r.nodes {
                Some(n) => format!("{}\tnodes {n}", r.estimator.as_str()),
                None => r.estimator.as_str().to_string(),
            };
            (label, r.wall_time)
        })
        .collect();
    write_timings(&dir.join("timings.log"), &timings)?;
    Manifest::new("sweep-nodes", cfg, serde_json::json!({ "nodes": nodes })).write(dir)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ModelName;

    #[test]
    fn small_sweep() {
        let mut cfg = ExperimentConfig::table1_preset(ModelName::ExpHawkes).unwrap();
        cfg.simulate.as_mut().unwrap().num_sequences = 20;
        cfg.optim.iterations = 20;
        let rows = sweep_mle_nodes(&cfg, &[2, 20]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].nodes, Some(2));
        assert_eq!(rows[2].estimator, ObjectiveName::Awsm);
        assert!(rows.iter().all(|r| r.tll.is_some_and(f64::is_finite)));
        assert!(sweep_mle_nodes(&cfg, &[]).is_err());
    }
}
