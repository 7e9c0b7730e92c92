use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::dm::max_matching;
use super::model::StructuralModel;
use crate::error::StructuralError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Causality {
    Algebraic,
    /// State obtained by integrating its derivative.
    Integral,
    /// Derivative obtained by differentiating its state.
    Derivative,
}

/// `variable` is solved from `equation`. Assignments sharing a `block`
/// form an algebraic loop and are solved simultaneously.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub equation: usize,
    pub variable: usize,
    pub causality: Causality,
    pub block: usize,
}

/// One residual generator: an MSO, the equation left out of the matching, the
/// evaluation sequence for the remaining just-determined part, and the fault
/// sensitivity row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResidualSpec {
    pub mso: Vec<usize>,
    pub residual_equation: usize,
    pub sequence: Vec<Assignment>,
    pub sensitivity: Vec<bool>,
}

impl ResidualSpec {
    /// Measured known of the residual equation, used as the prediction target.
    pub fn target_known(&self, model: &StructuralModel) -> Option<usize> {
        let eq = &model.equations[self.residual_equation];
        eq.knowns
            .iter()
            .copied()
            .find(|&k| model.is_measured(k))
            .or_else(|| eq.knowns.first().copied())
    }

    /// Known signals of the MSO other than the target.
    pub fn input_knowns(&self, model: &StructuralModel) -> Vec<usize> {
        let target = self.target_known(model);
        model
            .knowns_of(&self.mso)
            .into_iter()
            .filter(|&k| Some(k) != target)
            .collect()
    }

    pub fn causality_counts(&self) -> (usize, usize) {
        let integral = self
            .sequence
            .iter()
            .filter(|a| a.causality == Causality::Integral)
            .count();
        let derivative = self
            .sequence
            .iter()
            .filter(|a| a.causality == Causality::Derivative)
            .count();
        (integral, derivative)
    }
}

/// First equation of `mso` (declaration order) that contains a measured known.
pub fn default_residual_equation(model: &StructuralModel, mso: &[usize]) -> Option<usize> {
    let mut eqs = mso.to_vec();
    eqs.sort_unstable();
    eqs.into_iter().find(|&e| {
        model.equations[e]
            .knowns
            .iter()
            .any(|&k| model.is_measured(k))
    })
}

/// Match the unknowns of `mso \ {residual_equation}` and order the solution.
///
/// Among perfect matchings the one with the fewest derivative-causality
/// assignments is chosen.
pub fn compute_matching(
    model: &StructuralModel,
    mso: &[usize],
    residual_equation: usize,
) -> Result<ResidualSpec, StructuralError> {
    let mut mso = mso.to_vec();
    mso.sort_unstable();
    mso.dedup();
    if !mso.contains(&residual_equation) {
        return Err(StructuralError::NotInSet(
            model
                .equations
                .get(residual_equation)
                .map(|e| e.name.clone())
                .unwrap_or_else(|| format!("#{residual_equation}")),
        ));
    }
    let eqs: Vec<usize> = mso
        .iter()
        .copied()
        .filter(|&e| e != residual_equation)
        .collect();

    let m = max_matching(model, &eqs);
    if m.size() < m.vars.len() || eqs.len() != m.vars.len() {
        let mut unmatched: Vec<String> = (0..m.vars.len())
            .filter(|&v| m.var_match[v].is_none())
            .map(|v| model.unknowns[m.vars[v]].clone())
            .collect();
        if unmatched.is_empty() {
            // More equations than unknowns: the remainder is still over-determined.
            unmatched = (0..eqs.len())
                .filter(|&e| m.eq_match[e].is_none())
                .map(|e| format!("(surplus equation {})", model.equations[eqs[e]].name))
                .collect();
        }
        return Err(StructuralError::Unmatched(unmatched));
    }

    let n = eqs.len();
    const NO_EDGE: i64 = 1 << 40;
    let cost: Vec<Vec<i64>> = (0..n)
        .map(|e| {
            let dynamic = model.dynamic_of_equation(eqs[e]);
            (0..n)
                .map(|v| {
                    if !m.adj[e].contains(&v) {
                        NO_EDGE
                    } else if dynamic.is_some_and(|d| d.derivative == m.vars[v]) {
                        1
                    } else {
                        0
                    }
                })
                .collect()
        })
        .collect();
    let assign = hungarian(&cost);

    let mut raw: Vec<(usize, usize, Causality)> = (0..n)
        .map(|e| {
            let var = m.vars[assign[e]];
            let causality = match model.dynamic_of_equation(eqs[e]) {
                Some(d) if d.state == var => Causality::Integral,
                Some(_) => Causality::Derivative,
                None => Causality::Algebraic,
            };
            (eqs[e], var, causality)
        })
        .collect();
    raw.sort_by_key(|a| a.0);

    let sequence = order_assignments(model, &raw);
    Ok(ResidualSpec {
        sensitivity: {
            let fs = model.faults_of(&mso);
            (0..model.n_faults()).map(|f| fs.contains(&f)).collect()
        },
        mso,
        residual_equation,
        sequence,
    })
}

/// Topological order over strongly connected blocks; ties go to the block
/// with the lowest equation index. Integral assignments read the state from
/// the previous time step and so carry no same-step dependencies.
fn order_assignments(
    model: &StructuralModel,
    raw: &[(usize, usize, Causality)],
) -> Vec<Assignment> {
    let n = raw.len();
    let producer = |var: usize| raw.iter().position(|a| a.1 == var);
    let deps: Vec<Vec<usize>> = raw
        .iter()
        .map(|&(eq, var, c)| {
            if c == Causality::Integral {
                return Vec::new();
            }
            model.equations[eq]
                .unknowns
                .iter()
                .filter(|&&u| u != var)
                .filter_map(|&u| producer(u))
                .collect()
        })
        .collect();

    let comp = tarjan_scc(&deps);
    let n_comp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut comp_min = vec![usize::MAX; n_comp];
    for (i, &c) in comp.iter().enumerate() {
        comp_min[c] = comp_min[c].min(raw[i].0);
    }
    // Edges dep -> dependent between components.
    let mut indeg = vec![0usize; n_comp];
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for (i, ds) in deps.iter().enumerate() {
        for &d in ds {
            let (a, b) = (comp[d], comp[i]);
            if a != b && !succ[a].contains(&b) {
                succ[a].push(b);
                indeg[b] += 1;
            }
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n_comp)
        .filter(|&c| indeg[c] == 0)
        .map(|c| Reverse((comp_min[c], c)))
        .collect();
    let mut out = Vec::with_capacity(n);
    let mut block = 0;
    while let Some(Reverse((_, c))) = heap.pop() {
        for (i, &(eq, var, causality)) in raw.iter().enumerate() {
            if comp[i] == c {
                out.push(Assignment {
                    equation: eq,
                    variable: var,
                    causality,
                    block,
                });
            }
        }
        block += 1;
        for &s in &succ[c] {
            indeg[s] -= 1;
            if indeg[s] == 0 {
                heap.push(Reverse((comp_min[s], s)));
            }
        }
    }
    out
}

fn tarjan_scc(adj: &[Vec<usize>]) -> Vec<usize> {
    struct State<'a> {
        adj: &'a [Vec<usize>],
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }
    fn visit(s: &mut State, v: usize) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for k in 0..s.adj[v].len() {
            let w = s.adj[v][k];
            match s.index[w] {
                None => {
                    visit(s, w);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            while let Some(w) = s.stack.pop() {
                s.on_stack[w] = false;
                s.comp[w] = s.next_comp;
                if w == v {
                    break;
                }
            }
            s.next_comp += 1;
        }
    }
    let n = adj.len();
    let mut s = State {
        adj,
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![0; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(&mut s, v);
        }
    }
    s.comp
}

/// Minimum-cost perfect assignment (rows → columns) of a square matrix.
fn hungarian(cost: &[Vec<i64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    // 1-based potentials formulation.
    let inf = i64::MAX / 4;
    let mut u = vec![0i64; n + 1];
    let mut v = vec![0i64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0; n];
    for j in 1..=n {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_equation_mso_gives_single_step() {
        let m = StructuralModel::builder("pair")
            .unknowns(&["x"])
            .knowns(&["y1", "y2"])
            .equation("e1", &["x", "y1"])
            .equation("e2", &["x", "y2"])
            .build()
            .unwrap();
        for res in [0, 1] {
            let spec = compute_matching(&m, &[0, 1], res).unwrap();
            assert_eq!(spec.sequence.len(), 1);
            assert_eq!(spec.sequence[0].variable, 0);
            assert_ne!(spec.sequence[0].equation, res);
        }
    }

    #[test]
    fn unmatchable_removal_names_variables() {
        // Dropping e2 leaves e1 to determine both x1 and x2.
        let m = StructuralModel::builder("broken")
            .unknowns(&["x1", "x2"])
            .knowns(&["y"])
            .equation("e1", &["x1", "x2"])
            .equation("e2", &["x1", "y"])
            .equation("e3", &["y"])
            .build()
            .unwrap();
        let err = compute_matching(&m, &[0, 1, 2], 1).unwrap_err();
        assert_eq!(err, StructuralError::Unmatched(vec!["x2".into()]));
    }

    #[test]
    fn hungarian_prefers_cheap_assignment() {
        let cost = vec![vec![1, 0], vec![0, 1]];
        assert_eq!(hungarian(&cost), vec![1, 0]);
    }

    #[test]
    fn integral_causality_preferred() {
        // x' = -x + u, y = x, plus differential constraint.
        let m = StructuralModel::builder("first_order")
            .unknowns(&["x", "dx"])
            .knowns(&["u", "y"])
            .equation("e1", &["dx", "x", "u"])
            .equation("e2", &["y", "x"])
            .dynamic("e3", "x", "dx")
            .build()
            .unwrap();
        let spec = compute_matching(&m, &[0, 1, 2], 1).unwrap();
        let (integral, derivative) = spec.causality_counts();
        assert_eq!((integral, derivative), (1, 0));
        // State comes first, then its derivative from e1.
        assert_eq!(spec.sequence[0].causality, Causality::Integral);
        assert_eq!(spec.sequence[1].equation, 0);
    }
}
