//! Stated probabilities on a handful of values handled with count densities.
//!
//! `cargo run --release --example discrete_support`

use asf_bounds::bounds::{bounds_with_exclusion, SolverOptions};
use asf_bounds::inference::estimate_theta;
use asf_bounds::kernel::suggest_p_mode;
use asf_bounds::{AnalysisConfig, Dataset, PMode, Point, RevealedObservation, StatedObservation};

fn main() -> asf_bounds::Result<()> {
    let mut stated = Vec::new();
    for (x, hi, lo) in [(1, 16, 4), (0, 4, 16)] {
        for (p, count) in [(0.9, hi), (0.1, lo)] {
            stated.extend((0..count).map(|_| StatedObservation { p: Point::scalar(p), x, z: None }));
        }
    }
    let revealed: Vec<RevealedObservation> = (0..40)
        .map(|i| RevealedObservation { d: u8::from(i % 20 < 12), x: i64::from(i < 20), z: None })
        .collect();
    let (revealed, stated) = (Dataset::new(revealed)?, Dataset::new(stated)?);

    let p_mode = suggest_p_mode(&stated.points());
    println!("suggested mode: {p_mode:?}");
    let config = AnalysisConfig { p_mode: PMode::Discrete, z_drop_floor: 1, ..AnalysisConfig::default() };
    let fit = estimate_theta(&revealed, &stated, 1, &config)?;
    let b = bounds_with_exclusion(&fit.theta, &SolverOptions::from(&config))?;
    println!("x=1: [{:.4}, {:.4}]", b.lower, b.upper);
    Ok(())
}
