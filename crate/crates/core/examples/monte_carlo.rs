//! A small coverage study; pass `desk` or `full` for the larger grids.
//!
//! `cargo run --release --example monte_carlo -- [quick|desk|full]`

use asf_bounds::simulation::{run_monte_carlo, MonteCarloPlan};
use asf_bounds::AnalysisConfig;

fn main() -> asf_bounds::Result<()> {
    let plan = match std::env::args().nth(1).as_deref() {
        Some("desk") => MonteCarloPlan::desk(0),
        Some("full") => MonteCarloPlan::full(0),
        _ => MonteCarloPlan { ns: vec![500], xi_scales: vec![1.0], repetitions: 20, bootstrap_reps: 100, ..MonteCarloPlan::desk(0) },
    };
    let report = run_monte_carlo(&plan, &AnalysisConfig::default())?;
    println!(
        "mu({})={}  identified set [{:.4}, {:.4}]",
        report.x, report.true_value, report.identified_set.0, report.identified_set.1
    );
    report.write_csv(std::io::stdout())?;
    Ok(())
}
