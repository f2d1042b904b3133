//! Point estimate and bootstrap interval from a matched sample.
//!
//! `cargo run --release --example matched_estimate`

use asf_bounds::matched::bootstrap_matched;
use asf_bounds::simulation::simulate_sample;
use asf_bounds::AnalysisConfig;

fn main() -> asf_bounds::Result<()> {
    let sample = simulate_sample(5_000, 3)?;
    let config = AnalysisConfig { bootstrap_reps: 200, seed: 3, ..AnalysisConfig::default() };
    for x in [0, 1] {
        let e = bootstrap_matched(&sample.matched, x, &config)?;
        let (lo, hi) = e.ci.unwrap_or((f64::NAN, f64::NAN));
        println!(
            "x={x}: mu_hat={:.4}  se={:.4}  95% [{lo:.4}, {hi:.4}]  skipped={}",
            e.mu_hat,
            e.se.unwrap_or(f64::NAN),
            e.skipped
        );
    }
    Ok(())
}
