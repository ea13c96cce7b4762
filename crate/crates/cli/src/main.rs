use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use log::error;

use lobflow::pipeline::{write_error_report, Pipeline, PipelineConfig, Stage};

const AFTER_HELP: &str = "\
Stages: synth, features, cluster, signals, roles, backtest, all.
`all` runs every stage after `synth` against the data root.

Outputs under --out:
  features/<T>/<T>_<date>_features.csv  event_index,time,event_type,side,price,
                                        v,t_m,t_1,t_prev,sbs,obs,z_v,...,z_obs
  models/reference.json, models/<T>.json
  signals/signals.csv   stock,date,bucket,cluster_scope,event_scope,measure,ofi_value
  signals/returns.csv   stock,date,bucket,conr,frnb,freb
  roles.json
  backtest/report.json, backtest/training_sharpe.csv, backtest/pnl/*.csv

On failure the run writes error.json and leaves an INCOMPLETE marker.";

#[derive(Debug, Parser)]
#[command(name = "lobflow", version, about = "Cluster order flow and backtest OFI strategies", after_help = AFTER_HELP)]
struct Args {
    /// TOML config; built-in defaults when omitted.
    #[arg(long, env = "LOBFLOW_CONFIG")]
    config: Option<PathBuf>,

    #[arg(long, env = "LOBFLOW_STAGE", default_value = "all")]
    stage: Stage,

    /// Worker threads (0 = all cores).
    #[arg(long, env = "LOBFLOW_WORKERS")]
    workers: Option<usize>,

    #[arg(long, env = "LOBFLOW_SEED")]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, env = "LOBFLOW_OUT")]
    out: Option<PathBuf>,

    /// Data directory holding the message and orderbook files.
    #[arg(long, env = "LOBFLOW_DATA")]
    data: Option<PathBuf>,
}

fn load_config(args: &Args) -> anyhow::Result<PipelineConfig> {
    let mut config = match &args.config {
        Some(path) => PipelineConfig::load(path)
            .with_context(|| format!("loading {}", path.display()))?,
        None => PipelineConfig::default(),
    };
    if let Some(w) = args.workers {
        config.workers = w;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(o) = &args.out {
        config.output_dir = o.clone();
    }
    if let Some(d) = &args.data {
        config.data_root = d.clone();
    }
    config.validate()?;
    Ok(config)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let config = match load_config(&args) {
        Ok(c) => c,
        Err(e) => {
            error!("{e:#}");
            let _ = write_error_report(&out, "config", &format!("{e:#}"), "");
            return ExitCode::FAILURE;
        }
    };
    let out = config.output_dir.clone();
    let hash = config.hash();
    let result = Pipeline::new(config).and_then(|p| p.run(args.stage));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("stage {} failed: {e}", args.stage);
            if let Err(w) = write_error_report(&out, args.stage.name(), &e.to_string(), &hash) {
                error!("could not write the error report: {w}");
            }
            ExitCode::FAILURE
        }
    }
}
