//! Enumeration of minimally structurally over-determined (MSO) equation sets.
//!
//! Top-down: starting from the over-determined part, equations are removed
//! one equivalence class at a time, where two equations are equivalent when
//! removing either one discards the other from the over-determined part. A
//! removal set `R` restricts which classes a branch may still remove so each
//! MSO is reached exactly once.

use super::dm::{overdetermined_part, redundancy};
use super::model::StructuralModel;

/// All MSO sets of `model`, each sorted, the family sorted lexicographically.
pub fn enumerate_msos(model: &StructuralModel) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..model.n_equations()).collect();
    let plus = overdetermined_part(model, &all);
    let mut out = Vec::new();
    if plus.is_empty() {
        return out;
    }
    let r = plus.clone();
    find_msos(model, plus, &r, &mut out);
    out.sort();
    out.dedup();
    out
}

fn find_msos(model: &StructuralModel, s: Vec<usize>, r: &[usize], out: &mut Vec<Vec<usize>>) {
    if redundancy(model, &s) == 1 {
        out.push(s);
        return;
    }

    let mut remaining: Vec<usize> = s.iter().copied().filter(|e| r.contains(e)).collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    while let Some(&e) = remaining.first() {
        let rest: Vec<usize> = s.iter().copied().filter(|&x| x != e).collect();
        let plus = overdetermined_part(model, &rest);
        let class: Vec<usize> = s.iter().copied().filter(|x| !plus.contains(x)).collect();
        remaining.retain(|x| !class.contains(x));
        if class.iter().all(|x| r.contains(x)) {
            classes.push(class);
        }
    }

    for k in 0..classes.len() {
        let removed = &classes[k];
        let next: Vec<usize> = s.iter().copied().filter(|x| !removed.contains(x)).collect();
        let mut r_next: Vec<usize> = classes[k + 1..].iter().flatten().copied().collect();
        r_next.sort_unstable();
        find_msos(model, next, &r_next, out);
    }
}
