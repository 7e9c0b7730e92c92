use fdi_ensemble::harness::{run_cubic, CubicExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let start = std::time::Instant::now();
    let run = run_cubic(&CubicExperimentConfig::default())?;
    let r = &run.report;
    println!("{:>6} {:>6} {:>5} {:>12} {:>10} {:>10}", "lo", "hi", "n", "u_epi/eps", "u_ale", "xi^2");
    for b in &r.bins {
        println!(
            "{:>6.2} {:>6.2} {:>5} {:>12.4} {:>10.5} {:>10.5}",
            b.x_lo, b.x_hi, b.count, b.mean_u_epi_norm, b.mean_u_ale, b.mean_noise_var
        );
    }
    println!("eps_scale {:.3e}", r.eps_scale);
    println!("epistemic outer/inner {:.2} ({:.3} / {:.3})", r.epi_ratio, r.epi_outer, r.epi_inner);
    println!("worst aleatoric factor on the training range {:.2}", r.worst_ale_factor);
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
