//! AWSM error against sample size for several weight functions.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use tpp_core::simulate::simulate_dataset;
use tpp_core::{Error, Result, WeightFunction, WeightKind};

use crate::config::{ExperimentConfig, ObjectiveName};
use crate::metrics::{mae, mean_std};
use crate::output::{ensure_dir, write_csv, write_json, Manifest};
use crate::table::fit_estimator;

pub const DEFAULT_SIZES: [usize; 5] = [125, 250, 500, 1000, 2000];
pub const COMPARED_WEIGHTS: [WeightKind; 3] = [WeightKind::TentH0, WeightKind::ProductH1, WeightKind::SqrtH2];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightRow {
    pub weight: WeightKind,
    pub num_sequences: usize,
    pub parameter: String,
    /// Mean absolute error over the seeds that fitted.
    pub mae: Option<f64>,
    pub mae_std: Option<f64>,
    pub seeds: usize,
    pub error: Option<String>,
}

/// For every seed one dataset of the largest size is simulated; smaller
/// sizes use its leading sequences, so the datasets are nested.
pub fn compare_weights(cfg: &ExperimentConfig, sizes: &[usize]) -> Result<Vec<WeightRow>> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Config("sample sizes must be positive".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config("sample sizes must be strictly ascending".into()));
    }
    let model = cfg.model.build()?;
    let truth = cfg.model.truth_params(model.as_ref())?;
    let largest = *sizes.last().expect("nonempty");
    let datasets = cfg
        .seeds
        .iter()
        .map(|&s| {
            let mut sim = cfg.sim_for_seed(s)?;
            sim.num_sequences = largest;
            simulate_dataset(model.as_ref(), truth.values(), &sim)
        })
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(WeightKind, usize, usize)> = COMPARED_WEIGHTS
        .iter()
        .flat_map(|&w| sizes.iter().flat_map(move |&m| (0..cfg.seeds.len()).map(move |i| (w, m, i))))
        .collect();
    let fits: Vec<Result<Vec<f64>>> = cells
        .par_iter()
        .map(|&(w, m, i)| {
            let weight = WeightFunction::with_window_mode(w, cfg.weight.window_mode);
            let r = fit_estimator(cfg, model.as_ref(), &datasets[i].take(m), ObjectiveName::Awsm, weight)?;
            Ok(mae(&r.estimate, &truth)?.into_iter().map(|(_, e)| e).collect())
        })
        .collect();
    let mut rows = Vec::new();
    let per_group = cfg.seeds.len();
    for (g, group) in fits.chunks(per_group).enumerate() {
        let (w, m, _) = cells[g * per_group];
        let mut errors = Vec::new();
        let mut ok = Vec::new();
        for (i, f) in group.iter().enumerate() {
            match f {
                Ok(v) => ok.push(v),
                Err(e) if e.is_numerical() => errors.push(format!("seed {}: {e}", cfg.seeds[i])),
                Err(e) => return Err(e.clone()),
            }
        }
        for (j, name) in truth.names().enumerate() {
            let xs: Vec<f64> = ok.iter().map(|v| v[j]).collect();
            let (mean, sd) = mean_std(&xs);
            let has = !xs.is_empty();
            rows.push(WeightRow {
                weight: w,
                num_sequences: m,
                parameter: name.to_string(),
                mae: has.then_some(mean),
                mae_std: has.then_some(sd),
                seeds: xs.len(),
                error: (!errors.is_empty()).then(|| errors.join("; ")),
            });
        }
    }
    Ok(rows)
}

pub fn find<'a>(rows: &'a [WeightRow], weight: WeightKind, m: usize, parameter: &str) -> Option<&'a WeightRow> {
    rows.iter()
        .find(|r| r.weight == weight && r.num_sequences == m && r.parameter == parameter)
}

pub fn write_comparison(cfg: &ExperimentConfig, sizes: &[usize], rows: &[WeightRow], dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_csv(&dir.join("compare_weights.csv"), rows)?;
    write_json(&dir.join("compare_weights.json"), rows)?;
    Manifest::new("compare-weights", cfg, serde_json::json!({ "sizes": sizes })).write(dir)
}
