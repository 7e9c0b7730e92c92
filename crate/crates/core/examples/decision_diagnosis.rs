//! Three-way residual decisions and consistency-based diagnosis on the
//! three-tank fault signature matrix: which faults remain diagnoses for a
//! few alarm patterns, with and without out-of-range residuals.
//!
//! Run with `cargo run --example decision_diagnosis`.

use fdi_ensemble::decision::{classify, minimal_diagnoses, single_fault_diagnoses, DecisionConfig};
use fdi_ensemble::structural::{enumerate_msos, fault_signature, select_tests, three_tank_model};

fn main() -> fdi_ensemble::Result<()> {
    let cfg = DecisionConfig::new(0.01, 1.0)?;
    println!("p_fa {} gives alpha {:.4}", cfg.p_fa, cfg.alpha);
    for (r, sigma, u) in [(0.10, 0.05, 0.2), (0.15, 0.05, 0.2), (0.15, 0.05, 3.0)] {
        println!("  r={r:<5} sigma*={sigma} u_epi={u:<4} -> {}", classify(r, sigma, u, &cfg)?);
    }

    let model = three_tank_model();
    let family = enumerate_msos(&model);
    let full = fault_signature(&model, &family);
    let fsm = full.select_rows(&select_tests(&full, None));
    println!("\nfault signature of the selected residuals:");
    println!("    {}", fsm.faults.join(" "));
    for (i, row) in fsm.rows.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .zip(&fsm.faults)
            .map(|(&b, f)| format!("{:^w$}", if b { "x" } else { "." }, w = f.len()))
            .collect();
        println!("r{} {}", i + 1, cells.join(" "));
    }

    let n = fsm.n_residuals();
    let patterns: Vec<(Vec<bool>, Vec<bool>)> = vec![
        (vec![false; n], vec![false; n]),
        ((0..n).map(|i| i == 0).collect(), vec![false; n]),
        ((0..n).map(|i| i < 2).collect(), vec![false; n]),
        ((0..n).map(|i| i < 2).collect(), (0..n).map(|i| i == 1).collect()),
        (vec![true; n], vec![false; n]),
    ];
    println!();
    for (alarms, ood) in patterns {
        let show = |v: &[bool]| v.iter().map(|&b| if b { '1' } else { '0' }).collect::<String>();
        let d = minimal_diagnoses(&alarms, &ood, &fsm)?;
        let single = single_fault_diagnoses(&alarms, &ood, &fsm)?;
        let singles: Vec<&str> = fsm
            .faults
            .iter()
            .zip(&single.faults)
            .filter(|(_, &b)| b)
            .map(|(f, _)| f.as_str())
            .collect();
        let sets: Vec<String> = d.named(&fsm.faults).iter().map(|s| format!("{{{}}}", s.join(","))).collect();
        println!(
            "alarms {} ood {} -> minimal diagnoses {}  single faults [{}]",
            show(&alarms),
            show(&ood),
            sets.join(" "),
            if single.nf { "NF".to_string() } else { singles.join(",") }
        );
    }
    Ok(())
}
