//! Fixtures shared by the benchmarks.

use choquard_core::config::{ElectricPotential, MagneticMode, MagneticPotential, PotentialSpec, ProblemConfig, Region};
use choquard_core::sampling::{random_field, seeded_rng, FieldShape};
use choquard_core::{Field, GridSpec, Problem};

/// One-dimensional concentration problem with a clipped well and an oscillating potential.
pub fn problem_1d(points: usize) -> Problem {
    let pot = PotentialSpec {
        electric: ElectricPotential::ClippedQuadratic {
            base: 1.0,
            center: vec![0.0],
            curvature: 1.0,
            cap: 4.0,
        },
        magnetic: MagneticPotential::Fourier {
            base: vec![0.5],
            modes: vec![MagneticMode {
                amplitude: vec![0.3],
                wavevector: vec![1.0],
                phase: 0.0,
            }],
        },
        region: Region::Box {
            lower: vec![-1.0],
            upper: vec![1.0],
        },
    };
    let cfg = ProblemConfig {
        dim: 1,
        s: 0.75,
        mu: 0.5,
        q: 4.0,
        eps: 0.25,
        v0: 1.0,
        ell0: None,
        kappa: None,
    };
    Problem::new(cfg, pot, GridSpec::new(1, 40.0, points).expect("valid grid")).expect("admissible problem")
}

pub fn sample_field(grid: GridSpec, seed: u64) -> Field {
    random_field(grid, &FieldShape::default(), &mut seeded_rng(seed))
}
