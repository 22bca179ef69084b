use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use tpp_core::simulate::simulate_dataset;
use tpp_core::{Dataset, Error, ParamVector, Result};
use tpp_experiments::compare::{compare_weights, write_comparison, DEFAULT_SIZES};
use tpp_experiments::config::{ExperimentConfig, ModelConfig, ModelName};
use tpp_experiments::metrics::{evaluate_tll, mae};
use tpp_experiments::output::{ensure_dir, write_json, Manifest};
use tpp_experiments::sweep::{sweep_mle_nodes, write_sweep, TRAIN_FRACTION};
use tpp_experiments::table::{fit_estimator, run_table1};

#[derive(Parser)]
#[command(name = "tpp", version, about = "Simulate point processes and fit them by weighted score matching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Overrides applied on top of a preset or configuration file.
#[derive(clap::Args, Clone)]
struct Overrides {
    /// Configuration file replacing the built-in preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Sequences per simulated dataset.
    #[arg(long)]
    num_sequences: Option<usize>,
    /// Comma-separated data seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Optimizer iterations.
    #[arg(long)]
    iterations: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset and write train/test JSONL files plus a sidecar.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Data seed; defaults to the first configured seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Fit the configured objective to a dataset.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// JSONL file, or a directory holding `train.jsonl`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter-recovery table on simulated data.
    Table1 {
        #[arg(long, value_parser = parse_model)]
        model: ModelName,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// MLE test log-likelihood against quadrature nodes, with one AWSM fit.
    SweepNodes {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 5, 10, 50, 100])]
        nodes: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// AWSM error against sample size for the tent, product and sqrt weights.
    CompareWeights {
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SIZES)]
        sizes: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Test log-likelihood of a fitted model.
    Eval {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Optional JSON output; the result is printed either way.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_model(s: &str) -> std::result::Result<ModelName, String> {
    ModelName::parse(s).map_err(|e| e.to_string())
}

/// What `fit` writes and `eval` reads.
#[derive(Serialize, Deserialize)]
struct FitOutput {
    model: ModelConfig,
    objective: String,
    estimate: std::collections::BTreeMap<String, f64>,
    loss_trace: Vec<f64>,
    grad_norm_trace: Vec<f64>,
    iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mae: Option<std::collections::BTreeMap<String, f64>>,
}

fn resolve(preset: ModelName, o: &Overrides) -> Result<ExperimentConfig> {
    let mut cfg = match &o.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::table1_preset(preset)?,
    };
    if let Some(m) = o.num_sequences {
        cfg.simulate
            .as_mut()
            .ok_or_else(|| Error::Config("configuration has no simulate section".into()))?
            .num_sequences = m;
    }
    if let Some(s) = &o.seeds {
        cfg.seeds = s.clone();
    }
    if let Some(i) = o.iterations {
        cfg.optim.iterations = i;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn training_data(path: &Path, num_types: usize) -> Result<Dataset> {
    let train = path.join("train.jsonl");
    if path.is_dir() && train.exists() {
        Dataset::read(&train, Some(num_types))
    } else {
        Dataset::read(path, Some(num_types))
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let cfg = ExperimentConfig::load(&config)?;
            let seed = seed.unwrap_or(cfg.seeds[0]);
            let model = cfg.model.build()?;
            let truth = cfg.model.truth_params(model.as_ref())?;
            let sim = cfg.sim_for_seed(seed)?;
            let data = simulate_dataset(model.as_ref(), truth.values(), &sim)?;
            let (train, test) = data.split(TRAIN_FRACTION);
            ensure_dir(&out)?;
            train.write_jsonl(&out.join("train.jsonl"))?;
            test.write_jsonl(&out.join("test.jsonl"))?;
            write_json(
                &out.join("simulation.json"),
                &serde_json::json!({
                    "model": cfg.model,
                    "simulate": sim,
                    "truth": truth.to_map(),
                    "train_fraction": TRAIN_FRACTION,
                }),
            )?;
            Manifest::new("simulate", &cfg, serde_json::json!({ "seed": seed })).write(&out)?;
            log::info!("{} train and {} test sequences in {}", train.len(), test.len(), out.display());
        }
        Command::Fit { config, data, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let model = cfg.model.build()?;
            let dataset = training_data(&data, model.num_types())?;
            let r = fit_estimator(&cfg, model.as_ref(), &dataset, cfg.objective.name, cfg.weight)?;
            eprintln!("{}: {} iterations in {:.2}s", r.objective, r.iterations, r.wall_time);
            let errors = match cfg.model.truth {
                Some(_) => Some(
                    mae(&r.estimate, &cfg.model.truth_params(model.as_ref())?)?
                        .into_iter()
                        .collect(),
                ),
                None => None,
            };
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                ensure_dir(dir)?;
            }
            write_json(
                &out,
                &FitOutput {
                    model: cfg.model.clone(),
                    objective: r.objective,
                    estimate: r.estimate.to_map(),
                    loss_trace: r.loss_trace,
                    grad_norm_trace: r.grad_norm_trace,
                    iterations: r.iterations,
                    mae: errors,
                },
            )?;
            let manifest = Manifest::new("fit", &cfg, serde_json::json!({ "data": data }));
            write_json(&out.with_extension("manifest.json"), &manifest)?;
        }
        Command::Table1 { model, out, overrides } => {
            let cfg = resolve(model, &overrides)?;
            let table = run_table1(&cfg)?;
            table.write(&cfg, &out)?;
            for r in &table.rows {
                match (r.mae_mean, r.mae_std) {
                    (Some(m), Some(s)) => println!("{:<6} {:<10} {m:.3} ± {s:.3}", r.estimator.as_str(), r.parameter),
                    _ => println!("{:<6} {:<10} failed", r.estimator.as_str(), r.parameter),
                }
            }
        }
        Command::SweepNodes { nodes, out, overrides } => {
            let cfg = resolve(ModelName::ExpHawkes, &overrides)?;
            let rows = sweep_mle_nodes(&cfg, &nodes)?;
            write_sweep(&cfg, &nodes, &rows, &out)?;
            for r in &rows {
                let label = r.nodes.map_or_else(|| r.estimator.as_str().to_string(), |n| format!("mle/{n}"));
                match r.tll {
                    Some(t) => println!("{label:<8} tll {t:.4}  {:.2}s", r.wall_time),
                    None => println!("{label:<8} failed"),
                }
            }
        }
        Command::CompareWeights { sizes, out, overrides } => {
            let cfg = resolve(ModelName::ExpHawkes, &overrides)?;
            let rows = compare_weights(&cfg, &sizes)?;
            write_comparison(&cfg, &sizes, &rows, &out)?;
            for r in rows.iter().filter(|r| r.parameter == "alpha_1_1") {
                let v = r.mae.map_or("failed".to_string(), |m| format!("{m:.4}"));
                println!("{:?} M={:<5} alpha_1_1 {v}", r.weight, r.num_sequences);
            }
        }
        Command::Eval { fit, test, out } => {
            let text = std::fs::read_to_string(&fit).map_err(|e| Error::Config(format!("{}: {e}", fit.display())))?;
            let fitted: FitOutput = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            let model = fitted.model.build()?;
            let params = ParamVector::from_map(model.param_specs(), &fitted.estimate, None)?;
            let data = Dataset::read(&test, Some(model.num_types()))?;
            let tll = evaluate_tll(model.as_ref(), params.values(), &data)?;
            println!("tll {tll:.6} nats/event over {} events", data.num_events());
            if let Some(path) = out {
                write_json(&path, &serde_json::json!({ "tll": tll, "events": data.num_events(), "sequences": data.len() }))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
