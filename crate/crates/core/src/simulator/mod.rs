//! Time-series generators: the three-tank system, the two-tank benchmark with
//! its ten-fault catalog, and the one-dimensional cubic toy problem.
//!
//! Plants are integrated with fixed-step RK4. Measurement noise is added at
//! sample times from a ChaCha stream seeded by [`SimConfig::seed`].

mod config;
mod cubic;
mod dataset;
mod tanks;

pub use config::{
    magnitude_range, FaultKind, FaultProfile, FaultShape, InputProfile, InputSignal, Severity,
    SimConfig,
};
pub use cubic::{make_cubic_toy, make_cubic_toy_with, CubicToyConfig};
pub use dataset::{read_csv_table, sidecar_path, Channel, DatasetMeta, TimeSeriesDataset, NOMINAL_LABEL};
pub use tanks::{
    simulate_three_tank, simulate_two_tank, three_tank_default_config, three_tank_states,
    two_tank_default_config, FaultInfo, THREE_TANK_FAULTS, TWO_TANK_FAULTS,
};

/// Fault catalog of a bundled system, looked up by name.
pub fn fault_catalog(system: &str) -> Option<&'static [FaultInfo]> {
    match system {
        "three_tank" => Some(THREE_TANK_FAULTS),
        "two_tank" => Some(TWO_TANK_FAULTS),
        _ => None,
    }
}

/// Catalog profile for `fault_id` with its first accepted kind.
pub fn catalog_fault(
    system: &str,
    fault_id: &str,
    severity: Severity,
    onset: f64,
) -> Option<FaultProfile> {
    let info = fault_catalog(system)?.iter().find(|i| i.id == fault_id)?;
    let kind = info.kinds[0];
    Some(FaultProfile::step(fault_id, kind, severity.magnitude(kind), onset))
}
