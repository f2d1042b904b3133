//! Population bounds on mu(x) under the simulation design.
//!
//! `cargo run --release --example analytic_bounds`

use asf_bounds::bounds::SolverOptions;
use asf_bounds::simulation::{analytic_bounds, analytic_e, true_asf};

fn main() -> asf_bounds::Result<()> {
    let opts = SolverOptions::default();
    for x in [0, 1] {
        let b = analytic_bounds(x, 1001, &opts)?;
        println!(
            "x={x}: mu={:.4}  [{:.4}, {:.4}]  e(z=0)={:.4}  e(z=1)={:.4}",
            true_asf(x)?,
            b.lower,
            b.upper,
            analytic_e(x, 0)?,
            analytic_e(x, 1)?,
        );
        for cell in &b.per_z {
            println!("    z={:?}: [{:.4}, {:.4}]", cell.z, cell.lb, cell.ub);
        }
    }
    Ok(())
}
