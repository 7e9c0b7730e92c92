use serde::{Deserialize, Serialize};

use super::model::StructuralModel;

/// Residual × fault sensitivity booleans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultSignatureMatrix {
    pub faults: Vec<String>,
    pub rows: Vec<Vec<bool>>,
}

impl FaultSignatureMatrix {
    pub fn new(faults: Vec<String>, rows: Vec<Vec<bool>>) -> Self {
        debug_assert!(rows.iter().all(|r| r.len() == faults.len()));
        Self { faults, rows }
    }

    pub fn n_residuals(&self) -> usize {
        self.rows.len()
    }

    pub fn n_faults(&self) -> usize {
        self.faults.len()
    }

    pub fn get(&self, residual: usize, fault: usize) -> bool {
        self.rows[residual][fault]
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            faults: self.faults.clone(),
            rows: rows.iter().map(|&r| self.rows[r].clone()).collect(),
        }
    }

    /// Faults with at least one sensitive residual.
    pub fn detectable(&self) -> Vec<bool> {
        (0..self.n_faults())
            .map(|j| self.rows.iter().any(|r| r[j]))
            .collect()
    }
}

/// Fault × fault relation: `get(i, j)` means fault j stays a diagnosis when
/// fault i is the true fault.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsolabilityMatrix {
    pub faults: Vec<String>,
    pub entries: Vec<Vec<bool>>,
}

impl IsolabilityMatrix {
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i][j]
    }

    pub fn size(&self) -> usize {
        self.faults.len()
    }

    /// Number of ordered pairs (i, j), i ≠ j, that are isolable.
    pub fn isolable_pairs(&self) -> usize {
        let n = self.size();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j && !self.entries[i][j])
            .count()
    }
}

/// `T[i][j]` is true iff fault j occurs in some equation of MSO i.
pub fn fault_signature(model: &StructuralModel, msos: &[Vec<usize>]) -> FaultSignatureMatrix {
    let rows = msos
        .iter()
        .map(|mso| {
            let present = model.faults_of(mso);
            (0..model.n_faults()).map(|f| present.contains(&f)).collect()
        })
        .collect();
    FaultSignatureMatrix::new(model.faults.clone(), rows)
}

/// Column-support inclusion: every residual sensitive to `f_i` is also sensitive to `f_j`.
pub fn isolability(fsm: &FaultSignatureMatrix) -> IsolabilityMatrix {
    let n = fsm.n_faults();
    let entries = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| fsm.rows.iter().all(|row| !row[i] || row[j]))
                .collect()
        })
        .collect();
    IsolabilityMatrix {
        faults: fsm.faults.clone(),
        entries,
    }
}

/// Smallest subset of rows whose isolability equals that of the full family.
///
/// Subsets are searched by increasing size in lexicographic order, so ties go
/// to the lowest row indices. With a `budget` smaller than the minimal size
/// the subset of `budget` rows with the most matching isolability entries is
/// returned.
pub fn select_tests(fsm: &FaultSignatureMatrix, budget: Option<usize>) -> Vec<usize> {
    let n = fsm.n_residuals();
    if n == 0 {
        return Vec::new();
    }
    let target = isolability(fsm);
    let max_k = budget.unwrap_or(n).clamp(1, n);
    let mut best: Option<(usize, Vec<usize>)> = None;
    for k in 1..=max_k {
        let mut combo: Vec<usize> = (0..k).collect();
        loop {
            let iso = isolability(&fsm.select_rows(&combo));
            if iso == target {
                return combo;
            }
            if k == max_k {
                let score = agreement(&iso, &target);
                if best.as_ref().map_or(true, |(s, _)| score > *s) {
                    best = Some((score, combo.clone()));
                }
            }
            if !next_combination(&mut combo, n) {
                break;
            }
        }
    }
    best.map(|(_, c)| c).unwrap_or_default()
}

fn agreement(a: &IsolabilityMatrix, b: &IsolabilityMatrix) -> usize {
    a.entries
        .iter()
        .flatten()
        .zip(b.entries.iter().flatten())
        .filter(|(x, y)| x == y)
        .count()
}

/// Advance `combo` to the next k-combination of `0..n` in lexicographic order.
pub(crate) fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fsm(rows: &[&[u8]]) -> FaultSignatureMatrix {
        let nf = rows[0].len();
        FaultSignatureMatrix::new(
            (0..nf).map(|j| format!("f{j}")).collect(),
            rows.iter().map(|r| r.iter().map(|&b| b == 1).collect()).collect(),
        )
    }

    #[test]
    fn identity_signature_isolates_everything() {
        let iso = isolability(&fsm(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]));
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(iso.get(i, j), i == j);
            }
        }
    }

    #[test]
    fn identical_columns_not_isolable() {
        let iso = isolability(&fsm(&[&[1, 1, 0], &[0, 0, 1]]));
        assert!(iso.get(0, 1) && iso.get(1, 0));
        assert!(!iso.get(0, 2));
    }

    #[test]
    fn dominating_row_selected_alone() {
        // Row 1 alone already isolates f0 from f1; the others add nothing.
        let f = fsm(&[&[1, 1], &[1, 0], &[1, 1]]);
        assert_eq!(select_tests(&f, None), vec![1]);
    }

    #[test]
    fn budget_too_small_returns_best_partial() {
        let f = fsm(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]);
        let sel = select_tests(&f, Some(1));
        assert_eq!(sel.len(), 1);
    }

    #[test]
    fn combinations_enumerate_in_order() {
        let mut c = vec![0, 1];
        let mut all = vec![c.clone()];
        while next_combination(&mut c, 4) {
            all.push(c.clone());
        }
        assert_eq!(all.len(), 6);
        assert_eq!(all.last().unwrap(), &vec![2, 3]);
    }
}
