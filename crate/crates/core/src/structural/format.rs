//! Declarative text format for structural models.
//!
//! ```text
//! # comments run to end of line
//! model three_tank
//! unknowns: q0 q1 p1 dp1
//! knowns: y1 y3
//! inputs: y3            # optional: knowns that are commands, not sensors
//! faults: fV1
//! equation e1: q1 p1 fV1
//! dynamic e10: p1 -> dp1   # dp1 = d(p1)/dt
//! ```
//!
//! Declaration lines may repeat (they append). Each equation line lists the
//! names of every variable it contains; a name's kind comes from its
//! declaration. `write_model` emits a canonical form that `parse_model` reads
//! back into an equal model.

use std::fmt::Write as _;

use super::model::{ModelBuilder, StructuralModel};
use crate::error::StructuralError;

pub fn parse_model(text: &str) -> Result<StructuralModel, StructuralError> {
    let mut name: Option<String> = None;
    let mut unknowns: Vec<String> = Vec::new();
    let mut knowns: Vec<String> = Vec::new();
    let mut inputs: Vec<String> = Vec::new();
    let mut faults: Vec<String> = Vec::new();
    enum Line {
        Eq(usize, String, Vec<String>),
        Dyn(usize, String, String, String),
    }
    let mut lines = Vec::new();

    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        let err = |msg: &str| StructuralError::Parse {
            line: line_no,
            msg: msg.to_string(),
        };
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = match line.split_once(char::is_whitespace) {
            Some((h, r)) => (h, r.trim()),
            None => (line, ""),
        };
        let words = |s: &str| s.split_whitespace().map(str::to_string).collect::<Vec<_>>();
        match head {
            "model" => {
                if rest.is_empty() || rest.contains(char::is_whitespace) {
                    return Err(err("expected `model <name>`"));
                }
                name = Some(rest.to_string());
            }
            "unknowns:" => unknowns.extend(words(rest)),
            "knowns:" => knowns.extend(words(rest)),
            "inputs:" => inputs.extend(words(rest)),
            "faults:" => faults.extend(words(rest)),
            "equation" | "dynamic" => {
                let (eq_name, body) = rest
                    .split_once(':')
                    .ok_or_else(|| err("expected `<name>: ...` after keyword"))?;
                let eq_name = eq_name.trim();
                if eq_name.is_empty() || eq_name.contains(char::is_whitespace) {
                    return Err(err("bad equation name"));
                }
                if head == "equation" {
                    lines.push(Line::Eq(line_no, eq_name.to_string(), words(body)));
                } else {
                    let (s, d) = body
                        .split_once("->")
                        .ok_or_else(|| err("expected `<state> -> <derivative>`"))?;
                    let (s, d) = (s.trim(), d.trim());
                    if s.is_empty() || d.is_empty() || s.contains(' ') || d.contains(' ') {
                        return Err(err("expected `<state> -> <derivative>`"));
                    }
                    lines.push(Line::Dyn(
                        line_no,
                        eq_name.to_string(),
                        s.to_string(),
                        d.to_string(),
                    ));
                }
            }
            other => return Err(err(&format!("unrecognised keyword `{other}`"))),
        }
    }

    let mut builder: ModelBuilder = StructuralModel::builder(name.unwrap_or_default())
        .unknowns(&unknowns)
        .knowns(&knowns)
        .inputs(&inputs)
        .faults(&faults);
    for l in lines {
        let line_no = match l {
            Line::Eq(no, n, vars) => {
                builder = builder.equation(&n, &vars);
                no
            }
            Line::Dyn(no, n, s, d) => {
                builder = builder.dynamic(&n, &s, &d);
                no
            }
        };
        if let Some(StructuralError::Invalid(msg)) = builder.pending_error() {
            return Err(StructuralError::Parse {
                line: line_no,
                msg: msg.clone(),
            });
        }
    }
    builder.build()
}

pub fn write_model(model: &StructuralModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "model {}", model.name);
    let decl = |out: &mut String, key: &str, names: &[String]| {
        if !names.is_empty() {
            let _ = writeln!(out, "{key}: {}", names.join(" "));
        }
    };
    decl(&mut out, "unknowns", &model.unknowns);
    decl(&mut out, "knowns", &model.knowns);
    decl(&mut out, "inputs", &model.inputs);
    decl(&mut out, "faults", &model.faults);
    for (i, eq) in model.equations.iter().enumerate() {
        if let Some(d) = model.dynamic_of_equation(i) {
            let _ = writeln!(
                out,
                "dynamic {}: {} -> {}",
                eq.name, model.unknowns[d.state], model.unknowns[d.derivative]
            );
            continue;
        }
        let vars: Vec<&str> = eq
            .unknowns
            .iter()
            .map(|&u| model.unknowns[u].as_str())
            .chain(eq.knowns.iter().map(|&k| model.knowns[k].as_str()))
            .chain(eq.faults.iter().map(|&f| model.faults[f].as_str()))
            .collect();
        let _ = writeln!(out, "equation {}: {}", eq.name, vars.join(" "));
    }
    out
}
