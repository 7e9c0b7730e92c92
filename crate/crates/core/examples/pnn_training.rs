//! Train one probabilistic recurrent model on three-tank data: check its
//! gradients against finite differences, run the two training phases and
//! compare the rollout error with the predicted standard deviation.
//!
//! Run with `cargo run --release --example pnn_training`.

use fdi_ensemble::pnn::{grad_check, train_member, Objective, Pnn, PnnArchitecture, TrainConfig, Normalization};
use fdi_ensemble::simulator::{simulate_three_tank, three_tank_default_config};

fn main() -> fdi_ensemble::Result<()> {
    let mut sim = three_tank_default_config();
    sim.duration = 300.0;
    let train = simulate_three_tank(&sim, None)?;
    sim.seed += 1;
    sim.duration = 120.0;
    let test = simulate_three_tank(&sim, None)?;
    let arch = PnnArchitecture::new(&["y2", "y3"], "y1", 8);

    let short = train.slice(0..60);
    let norm = Normalization::fit(&arch, std::slice::from_ref(&short))?;
    let probe = Pnn::new(arch.clone(), norm, 1)?;
    for obj in [Objective::Mse, Objective::Nll] {
        let e = grad_check(&probe, std::slice::from_ref(&short), 10, obj, 100, obj as u64)?;
        println!("{obj:?} gradient, max relative error vs finite differences: {e:.2e}");
    }

    let cfg = TrainConfig {
        horizon: 20,
        warmup_epochs: 40,
        nll_epochs: 20,
        ..TrainConfig::default()
    };
    let (model, log) = train_member(std::slice::from_ref(&train), &[], &arch, &cfg)?;
    for e in log.epochs.iter().filter(|e| e.epoch % 10 == 0) {
        println!(
            "epoch {:>3} {:?} horizon {:>2} loss {:+.4}",
            e.epoch, e.objective, e.horizon, e.train_loss
        );
    }
    let roll = model.predict_rollout(&test, cfg.horizon)?;
    let y = &test.channel("y1").unwrap()[roll.start..];
    let rmse = (y.iter().zip(&roll.mu).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64).sqrt();
    let mean_sigma = roll.sigma.iter().sum::<f64>() / roll.sigma.len() as f64;
    let inside = y
        .iter()
        .zip(roll.mu.iter().zip(&roll.sigma))
        .filter(|(a, (m, s))| (*a - *m).abs() <= 2.576 * *s)
        .count();
    println!("held-out rollout RMSE {rmse:.4}, mean predicted sigma {mean_sigma:.4}");
    println!(
        "{:.1}% of held-out samples inside the 99% band",
        100.0 * inside as f64 / y.len() as f64
    );
    Ok(())
}
