//! Parameter-recovery tables on simulated data.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use tpp_core::simulate::simulate_dataset;
use tpp_core::{fit, Dataset, Error, EventSequence, FitResult, IntensityModel, ParamVector, Result, WeightFunction};

use crate::config::{ExperimentConfig, ModelName, ObjectiveName};
use crate::curves::{export_intensity_curves, uniform_grid};
use crate::estimators::build_objective;
use crate::metrics::{mae, mean_std, signed_error};
use crate::output::{write_csv, write_json, write_text, write_timings, Manifest};

/// Fits estimator `name` to `data` with the configured optimizer and init.
pub fn fit_estimator(
    cfg: &ExperimentConfig,
    model: &dyn IntensityModel,
    data: &Dataset,
    name: ObjectiveName,
    weight: WeightFunction,
) -> Result<FitResult> {
    let init = cfg.model.init_params(model)?;
    let objective = build_objective(
        name,
        model,
        data,
        weight,
        &cfg.objective,
        cfg.model.model.native_score(),
        cfg.optim.seed,
    )?;
    fit(objective.as_ref(), &init, &cfg.optim)
}

/// One fitted (estimator, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitRecord {
    pub estimator: ObjectiveName,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub wall_time: f64,
    #[serde(skip)]
    pub params: Option<ParamVector>,
}

impl FitRecord {
    pub fn from_outcome(estimator: ObjectiveName, seed: u64, outcome: Result<FitResult>) -> Self {
        match outcome {
            Ok(r) => Self {
                estimator,
                seed,
                estimate: Some(r.estimate.to_map()),
                final_loss: r.loss_trace.last().copied(),
                error: None,
                wall_time: r.wall_time,
                params: Some(r.estimate),
            },
            Err(e) => Self {
                estimator,
                seed,
                estimate: None,
                final_loss: None,
                error: Some(e.to_string()),
                wall_time: 0.0,
                params: None,
            },
        }
    }
}

/// MAE summary of one estimator on one parameter across seeds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultRow {
    pub estimator: ObjectiveName,
    pub parameter: String,
    pub mae_mean: Option<f64>,
    pub mae_std: Option<f64>,
    pub signed_error_mean: Option<f64>,
    /// Seeds whose fit succeeded.
    pub seeds: usize,
    /// Set when any seed failed; the statistics cover the remaining seeds.
    pub error: Option<String>,
    /// Mean seconds per successful fit; kept out of the CSV and JSON.
    #[serde(skip)]
    pub wall_time: f64,
}

#[derive(Debug, Clone)]
pub struct Table1 {
    pub rows: Vec<ResultRow>,
    pub fits: Vec<FitRecord>,
    pub truth: ParamVector,
    /// First sequence of the first seed, the reference history for curves.
    pub reference: Option<EventSequence>,
}

/// Simulates one dataset per seed, fits every estimator, and summarizes the
/// per-parameter absolute errors. A failing fit marks its rows instead of
/// aborting the table.
pub fn run_table1(cfg: &ExperimentConfig) -> Result<Table1> {
    if cfg.model.model == ModelName::HalfSinHawkes {
        return Err(Error::Config("tables cover sine_poisson, exp_hawkes and gauss_hawkes".into()));
    }
    if cfg.estimators.is_empty() {
        return Err(Error::Config("no estimators configured".into()));
    }
    let model = cfg.model.build()?;
    let truth = cfg.model.truth_params(model.as_ref())?;
    let datasets = cfg
        .seeds
        .iter()
        .map(|&s| simulate_dataset(model.as_ref(), truth.values(), &cfg.sim_for_seed(s)?))
        .collect::<Result<Vec<_>>>()?;
    let cells: Vec<(usize, ObjectiveName)> = cfg
        .estimators
        .iter()
        .flat_map(|&e| (0..cfg.seeds.len()).map(move |i| (i, e)))
        .collect();
    let fits: Vec<FitRecord> = cells
        .par_iter()
        .map(|&(i, e)| {
            let outcome = fit_estimator(cfg, model.as_ref(), &datasets[i], e, cfg.weight);
            if let Err(err) = &outcome {
                log::warn!("{} seed {}: {err}", e.as_str(), cfg.seeds[i]);
            }
            FitRecord::from_outcome(e, cfg.seeds[i], outcome)
        })
        .collect();
    let mut rows = Vec::new();
    for &e in &cfg.estimators {
        let cell: Vec<&FitRecord> = fits.iter().filter(|f| f.estimator == e).collect();
        let errors: Vec<String> = cell
            .iter()
            .filter_map(|f| f.error.as_ref().map(|m| format!("seed {}: {m}", f.seed)))
            .collect();
        let ok: Vec<&ParamVector> = cell.iter().filter_map(|f| f.params.as_ref()).collect();
        let abs = ok.iter().map(|p| mae(p, &truth)).collect::<Result<Vec<_>>>()?;
        let signed = ok.iter().map(|p| signed_error(p, &truth)).collect::<Result<Vec<_>>>()?;
        let times: Vec<f64> = cell.iter().filter(|f| f.params.is_some()).map(|f| f.wall_time).collect();
        for (j, name) in truth.names().enumerate() {
            let a: Vec<f64> = abs.iter().map(|v| v[j].1).collect();
            let s: Vec<f64> = signed.iter().map(|v| v[j].1).collect();
            let (m, sd) = mean_std(&a);
            let finite = |x: f64| (!ok.is_empty()).then_some(x);
            rows.push(ResultRow {
                estimator: e,
                parameter: name.to_string(),
                mae_mean: finite(m),
                mae_std: finite(sd),
                signed_error_mean: finite(mean_std(&s).0),
                seeds: ok.len(),
                error: (!errors.is_empty()).then(|| errors.join("; ")),
                wall_time: mean_std(&times).0,
            });
        }
    }
    let reference = datasets.first().and_then(|d| d.sequences().first().cloned());
    Ok(Table1 {
        rows,
        fits,
        truth,
        reference,
    })
}

impl Table1 {
    pub fn row(&self, estimator: ObjectiveName, parameter: &str) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.estimator == estimator && r.parameter == parameter)
    }

    /// Truth and first-seed estimates on a 201-point grid over the window.
    pub fn curves(&self, cfg: &ExperimentConfig) -> Result<crate::curves::Curves> {
        let model = cfg.model.build()?;
        let t_end = cfg.sim_for_seed(0)?.t_end;
        let first = cfg.seeds[0];
        let mut columns = vec![("truth".to_string(), self.truth.values().to_vec())];
        for f in self.fits.iter().filter(|f| f.seed == first) {
            if let Some(p) = &f.params {
                columns.push((f.estimator.as_str().to_string(), p.values().to_vec()));
            }
        }
        let history = match (&self.reference, cfg.model.model) {
            (Some(seq), m) if m != ModelName::SinePoisson => seq.history(),
            _ => tpp_core::History::empty(),
        };
        export_intensity_curves(model.as_ref(), &columns, &uniform_grid(t_end, 201), history, t_end)
    }

    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<()> {
        crate::output::ensure_dir(dir)?;
        write_csv(&dir.join("table1.csv"), &self.rows)?;
        #[derive(Serialize)]
        struct Out<'a> {
            model: &'static str,
            truth: BTreeMap<String, f64>,
            rows: &'a [ResultRow],
            fits: &'a [FitRecord],
        }
        write_json(
            &dir.join("table1.json"),
            &Out {
                model: cfg.model.model.as_str(),
                truth: self.truth.to_map(),
                rows: &self.rows,
                fits: &self.fits,
            },
        )?;
        write_text(&dir.join("curves.csv"), &self.curves(cfg)?.to_csv()?)?;
        let timings: Vec<(String, f64)> = self
            .fits
            .iter()
            .map(|f| (format!("{}\tseed {}", f.estimator.as_str(), f.seed), f.wall_time))
            .collect();
        write_timings(&dir.join("timings.log"), &timings)?;
        Manifest::new("table1", cfg, serde_json::Value::Null).write(dir)
    }
}
