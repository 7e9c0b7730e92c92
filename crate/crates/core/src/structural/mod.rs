//! Structural models of DAE systems and the analyses used to design residual
//! generators: DM decomposition, MSO enumeration, fault signature and
//! isolability matrices, test selection and matching.

mod dm;
mod format;
mod isolability;
mod matching;
mod model;
mod mso;

pub use dm::{dm_decompose, dm_decompose_subset, overdetermined_part, redundancy, DmPart, DmPartition};
pub use format::{parse_model, write_model};
pub use isolability::{
    fault_signature, isolability, select_tests, FaultSignatureMatrix, IsolabilityMatrix,
};
pub use matching::{
    compute_matching, default_residual_equation, Assignment, Causality, ResidualSpec,
};
pub use model::{DynamicPair, Equation, ModelBuilder, StructuralModel, VarKind};
pub use mso::enumerate_msos;

const THREE_TANK: &str = include_str!("../../data/three_tank.model");
const TWO_TANK: &str = include_str!("../../data/two_tank.model");

/// The three-tank model with its twelve equations and ten unknowns.
pub fn three_tank_model() -> StructuralModel {
    parse_model(THREE_TANK).expect("bundled three-tank model parses")
}

/// The two-tank benchmark model matching the simulator's fault catalog.
pub fn two_tank_model() -> StructuralModel {
    parse_model(TWO_TANK).expect("bundled two-tank model parses")
}

/// Residual generators for every MSO in `family`, using the default residual
/// equation (first measurement equation) or the first equation that admits a
/// complete matching.
pub fn residual_specs(
    model: &StructuralModel,
    family: &[Vec<usize>],
) -> Result<Vec<ResidualSpec>, crate::error::StructuralError> {
    family
        .iter()
        .map(|mso| {
            let preferred = default_residual_equation(model, mso);
            let candidates = preferred.into_iter().chain(mso.iter().copied());
            let mut last_err = None;
            for eq in candidates {
                match compute_matching(model, mso, eq) {
                    Ok(spec) => return Ok(spec),
                    Err(e) => last_err = Some(e),
                }
            }
            Err(last_err.unwrap_or_else(|| {
                crate::error::StructuralError::Invalid("empty MSO".into())
            }))
        })
        .collect()
}
