//! Structural analysis of the bundled three-tank and two-tank models: DM
//! decomposition, MSO family, fault signature / isolability matrices and the
//! residual generators picked by test selection.
//!
//! Run with `cargo run --example structural_analysis`.

use fdi_ensemble::structural::{
    dm_decompose, enumerate_msos, fault_signature, isolability, residual_specs, select_tests,
    three_tank_model, two_tank_model, StructuralModel,
};

fn mark(b: bool) -> &'static str {
    if b {
        "x"
    } else {
        "."
    }
}

fn analyse(model: &StructuralModel) -> fdi_ensemble::Result<()> {
    let dm = dm_decompose(model)?;
    println!(
        "== {}: {} equations, {} unknowns, redundancy {}",
        model.name,
        model.n_equations(),
        model.n_unknowns(),
        dm.redundancy()
    );
    let family = enumerate_msos(model);
    println!("{} MSO sets", family.len());
    for (i, mso) in family.iter().enumerate() {
        println!("  MSO{i:<2} {{{}}}", model.equation_names(mso).join(", "));
    }

    let fsm = fault_signature(model, &family);
    let selected = select_tests(&fsm, None);
    let chosen: Vec<Vec<usize>> = selected.iter().map(|&i| family[i].clone()).collect();
    let specs = residual_specs(model, &chosen)?;
    let sub = fsm.select_rows(&selected);

    println!("selected tests {selected:?}");
    println!("fault signature matrix:");
    println!("        {}", model.faults.join(" "));
    for (row, spec) in sub.rows.iter().zip(&specs) {
        let target = spec
            .target_known(model)
            .map(|k| model.knowns[k].clone())
            .unwrap_or_default();
        let cells: Vec<String> = row
            .iter()
            .zip(&model.faults)
            .map(|(&b, f)| format!("{:>w$}", mark(b), w = f.len()))
            .collect();
        println!(
            "  r({target:>3}) {}   residual eq {}",
            cells.join(" "),
            model.equations[spec.residual_equation].name
        );
    }
    let iso = isolability(&sub);
    println!("isolability matrix:");
    for (i, f) in model.faults.iter().enumerate() {
        let cells: String = (0..iso.size()).map(|j| mark(iso.get(i, j))).collect();
        println!("  {f:>4} {cells}");
    }
    println!();
    Ok(())
}

fn main() -> fdi_ensemble::Result<()> {
    analyse(&three_tank_model())?;
    analyse(&two_tank_model())?;
    Ok(())
}
