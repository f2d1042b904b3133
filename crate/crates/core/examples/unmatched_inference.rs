//! Bounds and a bootstrap confidence region from unmatched samples.
//!
//! `cargo run --release --example unmatched_inference`

use asf_bounds::bounds::{bounds_with_exclusion, SolverOptions};
use asf_bounds::inference::{confidence_region, estimate_theta};
use asf_bounds::simulation::simulate_sample;
use asf_bounds::AnalysisConfig;

fn main() -> asf_bounds::Result<()> {
    let sample = simulate_sample(1_000, 5)?;
    let (revealed, stated) = (sample.revealed(), sample.stated());
    let config = AnalysisConfig { bootstrap_reps: 400, seed: 5, ..AnalysisConfig::default() };

    let fit = estimate_theta(&revealed, &stated, 0, &config)?;
    let plug_in = bounds_with_exclusion(&fit.theta, &SolverOptions::from(&config))?;
    println!("plug-in bounds [{:.4}, {:.4}]", plug_in.lower, plug_in.upper);
    for cell in &fit.theta.cells {
        println!("  z={:?}: E[1-D|x,z]={:.4} n={:?}", cell.z, cell.e, cell.n_stated);
    }

    for alpha in [0.05, 0.5] {
        let region = confidence_region(&revealed, &stated, 0, &AnalysisConfig { alpha, ..config.clone() })?;
        println!(
            "alpha={alpha}: [{:.4}, {:.4}]  r_n={:.2} xi_n={:.4}",
            region.lo, region.hi, region.r_n, region.xi_n
        );
    }
    Ok(())
}
