//! Kernel density of P in one (x, z) cell compared with the population density 3p^2.
//!
//! `cargo run --release --example kernel_density -- [n]`

use asf_bounds::kernel::{bandwidths, kde_fit};
use asf_bounds::simulation::{conditional_density, simulate_sample};
use asf_bounds::{BoundaryCorrection, Grid};

fn main() -> asf_bounds::Result<()> {
    let n: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50_000);
    let sample = simulate_sample(n, 1)?;
    let cell = sample.stated().subsample(1, Some(1))?.points();
    let h = bandwidths(&cell)?;
    let grid = Grid::new(1, 1001)?;
    println!("cell size {}  bandwidth {:.4}", cell.len(), h[0]);
    for correction in [BoundaryCorrection::None, BoundaryCorrection::Reflection] {
        let fit = kde_fit(&cell, &h, grid, correction)?;
        let sup = (0..grid.len())
            .map(|k| (grid.coordinate(k), fit.density.values()[k]))
            .filter(|(p, _)| (0.1..=0.9).contains(p))
            .map(|(p, f)| (f - conditional_density(1, 1, p)).abs())
            .fold(0.0, f64::max);
        println!(
            "{correction:?}: mass {:.5}  sup error on [0.1, 0.9] {:.4}",
            fit.density.integrate(),
            sup
        );
    }
    Ok(())
}
