//! `fdi` command line: `simulate`, `analyze`, `train`, `evaluate`, `ablate`
//! and `report`. Every subcommand regenerates its datasets from the config,
//! so a run depends only on the config file and the seed.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{ExperimentConfig, SystemKind};
use super::cubic::{evaluate_cubic, train_cubic, CubicReport};
use super::data::load_data;
use super::pipeline::*;
use crate::ensemble::EnsemblePredictor;
use crate::error::{Error, Result};
use crate::pnn::Pnn;
use crate::simulator::make_cubic_toy_with;
use crate::util::{read_json, write_atomic, write_json};

#[derive(Debug, Parser)]
#[command(name = "fdi", version, about = "Uncertainty-aware consistency-based fault diagnosis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate (or ingest) the experiment datasets as CSV.
    Simulate(CommonArgs),
    /// MSO family, fault signature and isolability matrices, residual designs.
    Analyze(CommonArgs),
    /// Train and calibrate one ensemble per residual.
    Train(CommonArgs),
    /// Uncertainty and decision traces, diagnoses, matrices and metrics.
    Evaluate(CommonArgs),
    /// Metrics of the four component combinations on the same traces.
    Ablate(CommonArgs),
    /// Recompute matrices and metrics from persisted decision traces.
    Report(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `seed` in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output_dir` in the config.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict to one scenario (evaluate).
    #[arg(long)]
    pub scenario: Option<String>,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Simulate(a)
            | Command::Analyze(a)
            | Command::Train(a)
            | Command::Evaluate(a)
            | Command::Ablate(a)
            | Command::Report(a) => a,
        }
    }
}

pub fn load_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
        cfg.cubic.seed = seed;
    }
    if let Some(out) = &args.out {
        cfg.output_dir = out.clone();
    }
    Ok(cfg)
}

/// Run one parsed command.
pub fn run(cli: &Cli) -> Result<()> {
    let args = cli.command.common();
    if let Some(n) = args.jobs {
        if n == 0 {
            return Err(Error::config("--jobs", "must be at least 1"));
        }
        // Fails only if a pool already exists, which then stays in use.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = load_config(args)?;
    eprintln!("config {} seed {}", cfg.hash(), cfg.seed);
    let out = cfg.output_dir.clone();
    let only = args.scenario.as_deref();
    if cfg.system == SystemKind::CubicToy {
        return run_cubic_command(&cli.command, &cfg, &out);
    }
    match &cli.command {
        Command::Simulate(_) => {
            let data = load_data(&cfg, only)?;
            let dir = out.join("data");
            for (i, ds) in data.nominal.iter().enumerate() {
                ds.write(&dir.join(format!("nominal_{i:02}.csv")))?;
            }
            for sc in &data.scenarios {
                sc.data.write(&dir.join("scenarios").join(format!("{}.csv", sc.def.name)))?;
            }
            println!(
                "wrote {} nominal runs and {} scenarios to {}",
                data.nominal.len(),
                data.scenarios.len(),
                dir.display()
            );
        }
        Command::Analyze(_) => {
            let a = analyze(&cfg)?;
            write_analysis(&out.join("analysis"), &a)?;
            println!(
                "{} MSOs, {} residuals selected: {}",
                a.family.len(),
                a.residuals.len(),
                a.residuals.iter().map(|r| format!("{}=MSO{}", r.name, r.mso)).collect::<Vec<_>>().join(" ")
            );
        }
        Command::Train(_) => {
            let a = analyze(&cfg)?;
            let data = load_data(&cfg, Some(crate::simulator::NOMINAL_LABEL)).or_else(|_| load_data(&cfg, None))?;
            let (trained, logs) = train_residuals(&cfg, &a, &data)?;
            save_models(&out, &cfg, &trained)?;
            for (tr, log) in trained.iter().zip(&logs) {
                write_json(&out.join("models").join(&tr.info.name).join("train_log.json"), log)?;
                println!(
                    "{}: {} members, eps_scale {:.4e}, fixed J {:.4e}",
                    tr.info.name,
                    tr.ensemble.len(),
                    tr.ensemble.eps_scale,
                    tr.j_fixed
                );
            }
        }
        Command::Evaluate(_) => {
            let a = analyze(&cfg)?;
            let trained = load_models(&out, &cfg, &a)?;
            let data = load_data(&cfg, only)?;
            let ev = evaluate(&cfg, &a, &trained, &data)?;
            write_evaluation(&out, &ev)?;
            if let Some(rep) = &ev.report {
                print!("{}", metrics_text(&rep.metrics));
            }
        }
        Command::Ablate(_) => {
            let a = analyze(&cfg)?;
            let trained = load_models(&out, &cfg, &a)?;
            let data = load_data(&cfg, only)?;
            let defs: Vec<_> = data.scenarios.iter().map(|s| s.def.clone()).collect();
            let traces = predict_scenarios(&trained, &data.scenarios, cfg.horizon())?;
            let rows = ablation_rows(
                &cfg.hash(),
                &traces,
                &defs,
                &trained,
                &cfg.decision.config()?,
                &a.fsm,
                &a.isolability,
            )?;
            let dir = out.join("ablation");
            let table = ablation_table(&rows);
            write_atomic(&dir.join("metrics.csv"), &ablation_csv(&rows)?)?;
            write_json(&dir.join("metrics.json"), &rows)?;
            write_atomic(&dir.join("table.txt"), table.as_bytes())?;
            print!("{table}");
        }
        Command::Report(_) => {
            let (manifest, rep) = report_from_traces(&out)?;
            print!("{}", report_text(&manifest, &rep));
        }
    }
    Ok(())
}

fn cubic_model_dir(out: &Path) -> PathBuf {
    out.join("models").join("cubic")
}

fn run_cubic_command(cmd: &Command, cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let c = &cfg.cubic;
    match cmd {
        Command::Simulate(_) => {
            let (train, test) = make_cubic_toy_with(&c.toy, c.n_train, c.n_test, c.seed)?;
            train.write(&out.join("data").join("cubic_train.csv"))?;
            test.write(&out.join("data").join("cubic_test.csv"))?;
            println!("wrote {} train and {} test samples", train.len(), test.len());
        }
        Command::Analyze(_) | Command::Ablate(_) => {
            return Err(Error::config("system", "cubic_toy has no structural model or scenarios"));
        }
        Command::Train(_) => {
            let (ens, _, _) = train_cubic(c)?;
            let dir = cubic_model_dir(out);
            let hash = cfg.hash();
            for (m, member) in ens.members.iter().enumerate() {
                member.save(&dir.join(format!("member_{m:02}.json")), &hash)?;
            }
            write_json(&dir.join("eps_scale.json"), &ens.eps_scale)?;
            println!("{} members, eps_scale {:.4e}", ens.len(), ens.eps_scale);
        }
        Command::Evaluate(_) => {
            let dir = cubic_model_dir(out);
            let scale_path = dir.join("eps_scale.json");
            if !scale_path.exists() {
                return Err(Error::MissingCheckpoint(scale_path));
            }
            let members = (0..c.members)
                .map(|m| Pnn::load(&dir.join(format!("member_{m:02}.json"))).map(|(p, _)| p))
                .collect::<Result<Vec<_>>>()?;
            let mut ens = EnsemblePredictor::new(members)?;
            ens.eps_scale = read_json(&scale_path)?;
            let (_, test) = make_cubic_toy_with(&c.toy, c.n_train, c.n_test, c.seed)?;
            let (trace, report) = evaluate_cubic(c, &ens, &test)?;
            let dir = out.join("evaluation");
            write_atomic(&dir.join("cubic_uncertainty.csv"), &trace.to_csv_bytes()?)?;
            write_json(&dir.join("cubic_report.json"), &report)?;
            print!("{}", cubic_text(&report));
        }
        Command::Report(_) => {
            let report: CubicReport = read_json(&out.join("evaluation").join("cubic_report.json"))?;
            print!("{}", cubic_text(&report));
        }
    }
    Ok(())
}

pub fn cubic_text(r: &CubicReport) -> String {
    let mut s = format!("{:>6} {:>6} {:>6} {:>12} {:>12} {:>12}\n", "x_lo", "x_hi", "n", "u_epi_norm", "u_ale", "noise_var");
    for b in &r.bins {
        s.push_str(&format!(
            "{:>6.2} {:>6.2} {:>6} {:>12.4} {:>12.4} {:>12.4}\n",
            b.x_lo, b.x_hi, b.count, b.mean_u_epi_norm, b.mean_u_ale, b.mean_noise_var
        ));
    }
    s.push_str(&format!(
        "u_epi_norm outer/inner {:.2}  worst u_ale factor {:.2}\n",
        r.epi_ratio, r.worst_ale_factor
    ));
    s
}

/// Parse `argv`, run it and map the outcome to an exit status: 0 success,
/// 1 invalid input, 2 runtime failure.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
