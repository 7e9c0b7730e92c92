//! End-to-end two-tank experiment: structural analysis, ensemble training per
//! residual, evaluation of the full framework and the four-row component
//! ablation on identical traces.
//!
//! Run with `cargo run --release --example two_tank_ablation [config.toml]`;
//! without an argument a reduced configuration runs in under a minute.

use std::time::Instant;

use fdi_ensemble::harness::{
    ablation_rows, ablation_table, analyze, evaluate, load_data, report_text, train_residuals, ExperimentConfig,
    SystemKind,
};

fn main() -> fdi_ensemble::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => ExperimentConfig::load(path.as_ref())?,
        None => {
            let mut c = ExperimentConfig::new(SystemKind::TwoTank);
            c.ensemble.members = 3;
            c.training.warmup_epochs = 20;
            c.training.nll_epochs = 10;
            c
        }
    };
    let start = Instant::now();
    let a = analyze(&cfg)?;
    for r in &a.residuals {
        println!("{}: MSO{} predicts {} from {:?}, sensitive to {:?}", r.name, r.mso, r.target, r.inputs, r.faults);
    }
    let data = load_data(&cfg, None)?;
    let (trained, _) = train_residuals(&cfg, &a, &data)?;
    println!("trained {} ensembles in {:.0?}", trained.len(), start.elapsed());

    let ev = evaluate(&cfg, &a, &trained, &data)?;
    if let Some(rep) = &ev.report {
        print!("\n{}", report_text(&ev.manifest, rep));
    }
    let defs: Vec<_> = data.scenarios.iter().map(|s| s.def.clone()).collect();
    let rows = ablation_rows(
        &cfg.hash(),
        &ev.traces,
        &defs,
        &trained,
        &cfg.decision.config()?,
        &a.fsm,
        &a.isolability,
    )?;
    print!("\n{}", ablation_table(&rows));
    println!("total {:.0?}", start.elapsed());
    Ok(())
}
