use std::io::Write;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use imcsim::funcsim::{self, XbarParams};
use imcsim::mapping::{self, Residency, ResidencyRequest};
use imcsim::policy::PolicyKind;
use imcsim::schedule::dataflow::DataflowConfig;
use imcsim::sim::{self, SweepAxis};

use imcsim_cli::config::{self, ConfigError, RunConfig};
use imcsim_cli::output;

/// Latency/energy simulator for a hybrid NVM-crossbar + in-SRAM
/// transformer inference accelerator.
#[derive(Parser)]
#[command(name = "imcsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file path or preset name (bert-base, bert-large, table1-hw,
    /// glue, squad).
    #[arg(long)]
    config: String,
    /// Override the dataflow, e.g. `traditional` or `seqblock:64`.
    #[arg(long)]
    dataflow: Option<String>,
    /// Override the mapping policy: hybrid, nvm-all, simd-dynamic.
    #[arg(long)]
    policy: Option<String>,
    /// Override the run seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and emit the JSON report.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<String>,
        /// Also write the placement (mapping) as JSON.
        #[arg(long)]
        mapping_out: Option<String>,
    },
    /// Sweep one axis and emit a CSV of reports.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Axis spec, e.g. `SL=64,128,256,512` or `policy=hybrid,nvm-all`.
        #[arg(long)]
        axis: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Emit the scheduled timeline as JSON lines.
    Trace {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: Option<String>,
    },
    /// Monte-Carlo crossbar error sweep; emits CSV (sigma, trial, rmse,
    /// max_abs).
    Funcsim {
        #[arg(long, default_value_t = 16)]
        rows: usize,
        #[arg(long, default_value_t = 16)]
        cols: usize,
        #[arg(long, default_value_t = 8)]
        bits: u32,
        /// Comma-separated variation levels.
        #[arg(long, default_value = "0.05,0.1,0.2")]
        sigmas: String,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<String>,
    },
    /// Check storage capacity only; fails (exit 1) when nothing fits.
    Validate {
        /// Config file path or preset name.
        #[arg(long)]
        config: String,
        /// Substitute the model section from another preset.
        #[arg(long)]
        model: Option<String>,
        /// Residency to check: spatial or replay (default: both).
        #[arg(long)]
        residency: Option<String>,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify(&e))
        }
    }
}

/// Exit codes: 0 success, 1 validation/capacity failure, 2 I/O failure.
fn classify(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<std::io::Error>().is_some() {
        return 2;
    }
    if let Some(c) = e.downcast_ref::<ConfigError>() {
        return match c {
            ConfigError::Io(_) => 2,
            ConfigError::Invalid(_) => 1,
        };
    }
    1
}

fn load(cfg: &ConfigArgs) -> anyhow::Result<RunConfig> {
    let mut run = config::parse_config(&cfg.config)?;
    if let Some(df) = &cfg.dataflow {
        run.dataflow = DataflowConfig::parse(df)?;
    }
    if let Some(p) = &cfg.policy {
        run.policy = PolicyKind::parse(p)?;
    }
    if let Some(s) = cfg.seed {
        run.seed = s;
    }
    run.dataflow.strategy().blocks(run.model.seq_len)?;
    Ok(run)
}

fn write_out(path: Option<&str>, fallback: Option<&str>, data: &str) -> anyhow::Result<()> {
    match path.or(fallback) {
        Some(p) => std::fs::write(p, data)?,
        None => {
            std::io::stdout().write_all(data.as_bytes())?;
        }
    }
    Ok(())
}

fn dispatch() -> anyhow::Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            cfg,
            out,
            mapping_out,
        } => {
            let run_cfg = load(&cfg)?;
            let report = sim::run(&run_cfg.sim_config())?;
            if let Some(path) = mapping_out {
                let graph = imcsim::workload::build_op_graph(&run_cfg.model)?;
                let pol = imcsim::policy::from_kind(run_cfg.policy);
                let sim_cfg = run_cfg.sim_config();
                let mapping = mapping::map_model(
                    &run_cfg.hardware,
                    &graph,
                    pol.as_ref(),
                    sim_cfg.mapping_options(),
                )?;
                let mut s = serde_json::to_string_pretty(&mapping)?;
                s.push('\n');
                std::fs::write(path, s)?;
            }
            write_out(out.as_deref(), run_cfg.output.report.as_deref(), &output::report_json(&report))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { cfg, axis, out } => {
            let run_cfg = load(&cfg)?;
            let (axis_name, values) = match (&axis, &run_cfg.sweep) {
                (Some(spec), _) => parse_axis_spec(spec)?,
                (None, Some(s)) => (s.axis.clone(), s.values.clone()),
                (None, None) => anyhow::bail!("no --axis given and config has no [sweep] section"),
            };
            let axis = SweepAxis::parse(&axis_name)?;
            let points = sim::sweep(&run_cfg.sim_config(), axis, &values);
            let mut buf = Vec::new();
            output::write_sweep_csv(&points, &mut buf)?;
            write_out(
                out.as_deref(),
                run_cfg.output.sweep_csv.as_deref(),
                std::str::from_utf8(&buf)?,
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace { cfg, out } => {
            let run_cfg = load(&cfg)?;
            let sim_cfg = run_cfg.sim_config();
            let graph = imcsim::workload::build_op_graph(&sim_cfg.model)?;
            let pol = imcsim::policy::from_kind(sim_cfg.policy);
            let mapping = mapping::map_model(
                &sim_cfg.hardware,
                &graph,
                pol.as_ref(),
                sim_cfg.mapping_options(),
            )?;
            let (_, timeline) = imcsim::schedule::schedule_with(
                sim_cfg.dataflow.strategy().as_ref(),
                &graph,
                &mapping,
                &sim_cfg.hardware,
                &sim_cfg.cost_table,
            )?;
            let mut buf = Vec::new();
            timeline.write_trace(&mut buf)?;
            write_out(out.as_deref(), run_cfg.output.trace.as_deref(), std::str::from_utf8(&buf)?)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Funcsim {
            rows,
            cols,
            bits,
            sigmas,
            trials,
            seed,
            out,
        } => {
            let sigmas: Vec<f64> = sigmas
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| anyhow::anyhow!("bad sigma list: {e}"))?;
            let recs =
                funcsim::error_sweep(rows, cols, bits, &sigmas, trials, XbarParams::default(), seed)?;
            let mut buf = String::from("sigma,trial,rmse,max_abs\n");
            for r in recs {
                buf.push_str(&format!("{},{},{},{}\n", r.sigma, r.trial, r.rmse, r.max_abs));
            }
            write_out(out.as_deref(), None, &buf)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            config: cfg_name,
            model,
            residency,
        } => {
            let mut run_cfg = config::parse_config(&cfg_name)?;
            if let Some(m) = model {
                run_cfg.model = config::model_preset(&m)?;
            }
            let checks: Vec<Residency> = match residency.as_deref() {
                Some("spatial") => vec![Residency::Spatial],
                Some("replay") | Some("per_layer_replay") => vec![Residency::PerLayerReplay],
                None => vec![Residency::Spatial, Residency::PerLayerReplay],
                Some(other) => anyhow::bail!("unknown residency '{other}' (spatial, replay)"),
            };
            let mut all = Vec::new();
            let mut any_pass = false;
            for r in checks {
                let rep = mapping::validate_capacity(
                    &run_cfg.hardware,
                    &run_cfg.model,
                    r,
                    run_cfg.policy,
                )?;
                any_pass |= rep.pass;
                all.push(rep);
            }
            let mut s = serde_json::to_string_pretty(&all)?;
            s.push('\n');
            std::io::stdout().write_all(s.as_bytes())?;
            if any_pass {
                Ok(ExitCode::SUCCESS)
            } else {
                for rep in &all {
                    eprintln!(
                        "{:?} residency fails: needs {} crossbars ({} available), min {} tiles",
                        rep.residency,
                        rep.projection.required_crossbars,
                        rep.projection.available_crossbars,
                        rep.projection.min_tiles
                    );
                }
                Ok(ExitCode::from(1))
            }
        }
    }
}

fn parse_axis_spec(spec: &str) -> anyhow::Result<(String, Vec<String>)> {
    let (axis, vals) = spec
        .split_once('=')
        .ok_or_else(|| anyhow::anyhow!("axis spec must look like SL=64,128,256"))?;
    let values = vals.split(',').map(|v| v.trim().to_string()).collect();
    Ok((axis.to_string(), values))
}

// Residency requests are accepted in configs; map CLI names onto them when
// users pass --residency to run-like commands in future extensions.
#[allow(dead_code)]
fn residency_from_str(s: &str) -> anyhow::Result<ResidencyRequest> {
    match s {
        "spatial" => Ok(ResidencyRequest::Spatial),
        "replay" | "per_layer_replay" => Ok(ResidencyRequest::PerLayerReplay),
        "auto" => Ok(ResidencyRequest::Auto),
        other => anyhow::bail!("unknown residency '{other}'"),
    }
}
