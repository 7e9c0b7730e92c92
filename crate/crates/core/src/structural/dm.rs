use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::model::StructuralModel;
use crate::error::StructuralError;

/// Equations and unknowns of one DM block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmPart {
    pub equations: Vec<usize>,
    pub unknowns: Vec<usize>,
}

/// Coarse Dulmage–Mendelsohn partition: under-, exactly- and over-determined parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DmPartition {
    pub under: DmPart,
    pub exact: DmPart,
    pub over: DmPart,
    pub matching_size: usize,
}

impl DmPartition {
    /// Structural redundancy `|E+| - |X+|` of the over-determined part.
    pub fn redundancy(&self) -> usize {
        self.over.equations.len() - self.over.unknowns.len()
    }
}

/// Maximum bipartite matching between `eqs` and their unknowns.
///
/// Returned vectors are indexed by position in `eqs` and in `vars`
/// respectively. Augmenting paths are searched in declaration order so the
/// result is deterministic.
pub(crate) struct Matching {
    pub vars: Vec<usize>,
    pub adj: Vec<Vec<usize>>,
    pub eq_match: Vec<Option<usize>>,
    pub var_match: Vec<Option<usize>>,
}

impl Matching {
    pub fn size(&self) -> usize {
        self.eq_match.iter().filter(|m| m.is_some()).count()
    }
}

pub(crate) fn max_matching(model: &StructuralModel, eqs: &[usize]) -> Matching {
    let vars = model.unknowns_of(eqs);
    let adj: Vec<Vec<usize>> = eqs
        .iter()
        .map(|&e| {
            let mut a: Vec<usize> = model.equations[e]
                .unknowns
                .iter()
                .map(|u| vars.binary_search(u).expect("unknown in var list"))
                .collect();
            a.sort_unstable();
            a.dedup();
            a
        })
        .collect();
    let mut eq_match = vec![None; eqs.len()];
    let mut var_match = vec![None; vars.len()];

    fn augment(
        e: usize,
        adj: &[Vec<usize>],
        seen: &mut [bool],
        eq_match: &mut [Option<usize>],
        var_match: &mut [Option<usize>],
    ) -> bool {
        for &v in &adj[e] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            let free = match var_match[v] {
                None => true,
                Some(other) => augment(other, adj, seen, eq_match, var_match),
            };
            if free {
                eq_match[e] = Some(v);
                var_match[v] = Some(e);
                return true;
            }
        }
        false
    }

    for e in 0..eqs.len() {
        let mut seen = vec![false; vars.len()];
        augment(e, &adj, &mut seen, &mut eq_match, &mut var_match);
    }
    Matching {
        vars,
        adj,
        eq_match,
        var_match,
    }
}

/// DM decomposition of the subsystem formed by `eqs` (indices into the model).
pub fn dm_decompose_subset(model: &StructuralModel, eqs: &[usize]) -> DmPartition {
    let mut eqs = eqs.to_vec();
    eqs.sort_unstable();
    eqs.dedup();
    let m = max_matching(model, &eqs);
    let ne = eqs.len();
    let nv = m.vars.len();

    // var -> incident equations (local indices)
    let mut var_adj = vec![Vec::new(); nv];
    for (e, a) in m.adj.iter().enumerate() {
        for &v in a {
            var_adj[v].push(e);
        }
    }

    // Over-determined: alternating paths from unmatched equations.
    let mut over_eq = vec![false; ne];
    let mut queue: VecDeque<usize> = (0..ne).filter(|&e| m.eq_match[e].is_none()).collect();
    for &e in &queue {
        over_eq[e] = true;
    }
    while let Some(e) = queue.pop_front() {
        for &v in &m.adj[e] {
            if let Some(e2) = m.var_match[v] {
                if !over_eq[e2] {
                    over_eq[e2] = true;
                    queue.push_back(e2);
                }
            }
        }
    }
    let mut over_var = vec![false; nv];
    for e in (0..ne).filter(|&e| over_eq[e]) {
        for &v in &m.adj[e] {
            over_var[v] = true;
        }
    }

    // Under-determined: alternating paths from unmatched variables.
    let mut under_var = vec![false; nv];
    let mut under_eq = vec![false; ne];
    let mut queue: VecDeque<usize> = (0..nv).filter(|&v| m.var_match[v].is_none()).collect();
    for &v in &queue {
        under_var[v] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &e in &var_adj[v] {
            if under_eq[e] {
                continue;
            }
            under_eq[e] = true;
            if let Some(v2) = m.eq_match[e] {
                if !under_var[v2] {
                    under_var[v2] = true;
                    queue.push_back(v2);
                }
            }
        }
    }

    let pick = |flags: &[bool], ids: &[usize]| -> Vec<usize> {
        flags
            .iter()
            .zip(ids)
            .filter(|(f, _)| **f)
            .map(|(_, &i)| i)
            .collect()
    };
    let exact_eq: Vec<bool> = (0..ne).map(|e| !over_eq[e] && !under_eq[e]).collect();
    let exact_var: Vec<bool> = (0..nv).map(|v| !over_var[v] && !under_var[v]).collect();
    DmPartition {
        under: DmPart {
            equations: pick(&under_eq, &eqs),
            unknowns: pick(&under_var, &m.vars),
        },
        exact: DmPart {
            equations: pick(&exact_eq, &eqs),
            unknowns: pick(&exact_var, &m.vars),
        },
        over: DmPart {
            equations: pick(&over_eq, &eqs),
            unknowns: pick(&over_var, &m.vars),
        },
        matching_size: m.size(),
    }
}

/// DM decomposition of the whole model.
pub fn dm_decompose(model: &StructuralModel) -> Result<DmPartition, StructuralError> {
    model.validate()?;
    let all: Vec<usize> = (0..model.n_equations()).collect();
    Ok(dm_decompose_subset(model, &all))
}

/// Over-determined part `S+` of an equation subset.
pub fn overdetermined_part(model: &StructuralModel, eqs: &[usize]) -> Vec<usize> {
    dm_decompose_subset(model, eqs).over.equations
}

/// Structural redundancy `|S| - ν(S)` of an equation subset.
pub fn redundancy(model: &StructuralModel, eqs: &[usize]) -> usize {
    let m = max_matching(model, eqs);
    eqs.len() - m.size()
}
