use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::StructuralError;

/// One row of the incidence structure. Variable references are indices into
/// the owning model's `unknowns`, `knowns` and `faults` lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Equation {
    pub name: String,
    pub unknowns: Vec<usize>,
    pub knowns: Vec<usize>,
    pub faults: Vec<usize>,
}

/// A state/derivative pair joined by a differential-constraint equation
/// `derivative = d(state)/dt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DynamicPair {
    pub state: usize,
    pub derivative: usize,
    pub equation: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    Unknown,
    Known,
    Fault,
}

/// Bipartite equation/variable graph with fault and known-signal annotations.
///
/// `inputs` is the subset of `knowns` that are commanded signals rather than
/// sensor readings; measurement equations are equations that contain a known
/// signal outside this subset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuralModel {
    pub name: String,
    pub unknowns: Vec<String>,
    pub knowns: Vec<String>,
    pub inputs: Vec<String>,
    pub faults: Vec<String>,
    pub equations: Vec<Equation>,
    pub dynamics: Vec<DynamicPair>,
}

impl StructuralModel {
    pub fn builder(name: impl Into<String>) -> ModelBuilder {
        ModelBuilder {
            model: StructuralModel {
                name: name.into(),
                unknowns: Vec::new(),
                knowns: Vec::new(),
                inputs: Vec::new(),
                faults: Vec::new(),
                equations: Vec::new(),
                dynamics: Vec::new(),
            },
            error: None,
        }
    }

    pub fn n_equations(&self) -> usize {
        self.equations.len()
    }

    pub fn n_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn n_faults(&self) -> usize {
        self.faults.len()
    }

    pub fn equation_index(&self, name: &str) -> Option<usize> {
        self.equations.iter().position(|e| e.name == name)
    }

    pub fn unknown_index(&self, name: &str) -> Option<usize> {
        self.unknowns.iter().position(|v| v == name)
    }

    pub fn known_index(&self, name: &str) -> Option<usize> {
        self.knowns.iter().position(|v| v == name)
    }

    pub fn fault_index(&self, name: &str) -> Option<usize> {
        self.faults.iter().position(|v| v == name)
    }

    /// Resolve equation names to indices.
    pub fn equation_set(&self, names: &[impl AsRef<str>]) -> Result<Vec<usize>, StructuralError> {
        let mut out = names
            .iter()
            .map(|n| {
                self.equation_index(n.as_ref())
                    .ok_or_else(|| StructuralError::NotInSet(n.as_ref().to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    pub fn equation_names(&self, set: &[usize]) -> Vec<String> {
        set.iter().map(|&e| self.equations[e].name.clone()).collect()
    }

    pub fn kind_of(&self, name: &str) -> Option<(VarKind, usize)> {
        if let Some(i) = self.unknown_index(name) {
            return Some((VarKind::Unknown, i));
        }
        if let Some(i) = self.known_index(name) {
            return Some((VarKind::Known, i));
        }
        self.fault_index(name).map(|i| (VarKind::Fault, i))
    }

    /// All (equation, variable-name) incidences.
    pub fn edges(&self) -> BTreeSet<(usize, String)> {
        let mut out = BTreeSet::new();
        for (i, eq) in self.equations.iter().enumerate() {
            for &u in &eq.unknowns {
                out.insert((i, self.unknowns[u].clone()));
            }
            for &k in &eq.knowns {
                out.insert((i, self.knowns[k].clone()));
            }
            for &f in &eq.faults {
                out.insert((i, self.faults[f].clone()));
            }
        }
        out
    }

    pub fn is_measured(&self, known: usize) -> bool {
        !self.inputs.iter().any(|i| *i == self.knowns[known])
    }

    /// True when `eq` is a differential-constraint equation.
    pub fn dynamic_of_equation(&self, eq: usize) -> Option<&DynamicPair> {
        self.dynamics.iter().find(|d| d.equation == eq)
    }

    /// Unknowns incident to any equation of `eqs`, sorted.
    pub fn unknowns_of(&self, eqs: &[usize]) -> Vec<usize> {
        let mut vars: Vec<usize> = eqs
            .iter()
            .flat_map(|&e| self.equations[e].unknowns.iter().copied())
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn knowns_of(&self, eqs: &[usize]) -> Vec<usize> {
        let mut vars: Vec<usize> = eqs
            .iter()
            .flat_map(|&e| self.equations[e].knowns.iter().copied())
            .collect();
        vars.sort_unstable();
        vars.dedup();
        vars
    }

    pub fn faults_of(&self, eqs: &[usize]) -> Vec<usize> {
        let mut f: Vec<usize> = eqs
            .iter()
            .flat_map(|&e| self.equations[e].faults.iter().copied())
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    pub fn validate(&self) -> Result<(), StructuralError> {
        let invalid = |msg: String| Err(StructuralError::Invalid(msg));
        let mut names = BTreeSet::new();
        for n in self.unknowns.iter().chain(&self.knowns).chain(&self.faults) {
            if !names.insert(n.as_str()) {
                return invalid(format!("variable `{n}` declared more than once"));
            }
        }
        for i in &self.inputs {
            if !self.knowns.contains(i) {
                return invalid(format!("input `{i}` is not a known signal"));
            }
        }
        let mut eq_names = BTreeSet::new();
        for eq in &self.equations {
            if !eq_names.insert(eq.name.as_str()) {
                return invalid(format!("equation `{}` declared more than once", eq.name));
            }
            if let Some(&u) = eq.unknowns.iter().find(|&&u| u >= self.unknowns.len()) {
                return invalid(format!("equation `{}` references unknown #{u}", eq.name));
            }
            if let Some(&k) = eq.knowns.iter().find(|&&k| k >= self.knowns.len()) {
                return invalid(format!("equation `{}` references known #{k}", eq.name));
            }
            if let Some(&f) = eq.faults.iter().find(|&&f| f >= self.faults.len()) {
                return invalid(format!("equation `{}` references fault #{f}", eq.name));
            }
        }
        let mut seen_eq = BTreeSet::new();
        let mut seen_state = BTreeSet::new();
        for d in &self.dynamics {
            if d.equation >= self.equations.len()
                || d.state >= self.unknowns.len()
                || d.derivative >= self.unknowns.len()
            {
                return invalid("dynamic pair references missing equation or unknown".into());
            }
            if d.state == d.derivative {
                return invalid(format!(
                    "state `{}` cannot be its own derivative",
                    self.unknowns[d.state]
                ));
            }
            let eq = &self.equations[d.equation];
            let mut u = eq.unknowns.clone();
            u.sort_unstable();
            let mut want = vec![d.state, d.derivative];
            want.sort_unstable();
            if u != want || !eq.knowns.is_empty() || !eq.faults.is_empty() {
                return invalid(format!(
                    "differential equation `{}` must contain exactly its state and derivative",
                    eq.name
                ));
            }
            if !seen_eq.insert(d.equation) || !seen_state.insert(d.state) {
                return invalid(format!(
                    "dynamic pair for `{}` is not linked by exactly one equation",
                    self.unknowns[d.state]
                ));
            }
        }
        Ok(())
    }
}

/// Name-based construction of a [`StructuralModel`]; every variable must be
/// declared before an equation mentions it.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    model: StructuralModel,
    error: Option<StructuralError>,
}

impl ModelBuilder {
    pub fn unknowns<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.model
            .unknowns
            .extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }

    pub fn knowns<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.model
            .knowns
            .extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }

    pub fn inputs<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.model
            .inputs
            .extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }

    pub fn faults<S: AsRef<str>>(mut self, names: &[S]) -> Self {
        self.model
            .faults
            .extend(names.iter().map(|s| s.as_ref().to_string()));
        self
    }

    /// Add an algebraic or differential equation over the named variables.
    pub fn equation<S: AsRef<str>>(mut self, name: &str, vars: &[S]) -> Self {
        if self.error.is_some() {
            return self;
        }
        let mut eq = Equation {
            name: name.to_string(),
            unknowns: Vec::new(),
            knowns: Vec::new(),
            faults: Vec::new(),
        };
        for v in vars {
            let v = v.as_ref();
            match self.model.kind_of(v) {
                Some((VarKind::Unknown, i)) => eq.unknowns.push(i),
                Some((VarKind::Known, i)) => eq.knowns.push(i),
                Some((VarKind::Fault, i)) => eq.faults.push(i),
                None => {
                    self.error = Some(StructuralError::Invalid(format!(
                        "equation `{name}` references undeclared variable `{v}`"
                    )));
                    return self;
                }
            }
        }
        self.model.equations.push(eq);
        self
    }

    /// Add the differential constraint `derivative = d(state)/dt`.
    pub fn dynamic(mut self, name: &str, state: &str, derivative: &str) -> Self {
        if self.error.is_some() {
            return self;
        }
        let (Some(s), Some(d)) = (
            self.model.unknown_index(state),
            self.model.unknown_index(derivative),
        ) else {
            self.error = Some(StructuralError::Invalid(format!(
                "dynamic equation `{name}` needs declared unknowns `{state}` and `{derivative}`"
            )));
            return self;
        };
        let idx = self.model.equations.len();
        self.model.equations.push(Equation {
            name: name.to_string(),
            unknowns: vec![s, d],
            knowns: Vec::new(),
            faults: Vec::new(),
        });
        self.model.dynamics.push(DynamicPair {
            state: s,
            derivative: d,
            equation: idx,
        });
        self
    }

    pub(crate) fn pending_error(&self) -> Option<&StructuralError> {
        self.error.as_ref()
    }

    pub fn build(self) -> Result<StructuralModel, StructuralError> {
        if let Some(e) = self.error {
            return Err(e);
        }
        self.model.validate()?;
        Ok(self.model)
    }
}
