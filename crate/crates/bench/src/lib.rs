//! Shared fixtures for the criterion benchmarks.
//!
//! Every workload is built from the cone and Efron regions at the two
//! observed points used throughout the test suite, so timings stay
//! comparable across engine changes.

use regionboot::rejection_lab::table1_points;
use regionboot::{LabConfig, Region};

/// A named `(region, point)` pair.
pub struct Workload {
    pub name: &'static str,
    pub region: Region,
    pub y: [f64; 2],
}

/// The four observed cases: both points against both regions.
pub fn workloads() -> Vec<Workload> {
    let [y1, y2] = table1_points();
    vec![
        Workload { name: "cone_y1", region: Region::cone(), y: y1 },
        Workload { name: "cone_y2", region: Region::cone(), y: y2 },
        Workload { name: "efron_y1", region: Region::efron(0.1), y: y1 },
        Workload { name: "efron_y2", region: Region::efron(0.1), y: y2 },
    ]
}

/// Boundary point of the cone at tangent coordinate `u`.
pub fn cone_mean(u: f64) -> [f64; 2] {
    [u, -Region::cone().h(&[u])]
}

/// Laboratory settings with a reduced Monte Carlo budget for timing runs.
pub fn quick_lab() -> LabConfig {
    LabConfig {
        mc_replicates: 2_000,
        ..LabConfig::default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cone_means_lie_on_the_boundary() {
        for u in [0.0, 1.0, 3.0] {
            let mu = cone_mean(u);
            assert!((mu[1] + u / 3f64.sqrt()).abs() < 1e-15);
        }
    }
}
