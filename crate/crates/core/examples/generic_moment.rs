//! Bounds on E[h(P) m(X, P) | X = x] for a few choices of h.
//!
//! `cargo run --release --example generic_moment`

use asf_bounds::bounds::{moment_bounds_generic_h, SolverOptions};
use asf_bounds::simulation::conditional_density;
use asf_bounds::{DensityFunction, Grid};

type Weight = fn(f64) -> f64;

fn main() -> asf_bounds::Result<()> {
    let grid = Grid::new(1, 2001)?;
    // P | X = 1 mixes the two z cells with equal weight.
    let f = DensityFunction::tabulate(grid, |p| {
        0.5 * (conditional_density(1, 0, p[0]) + conditional_density(1, 1, p[0]))
    });
    let mean_d = 0.4;
    let opts = SolverOptions::default();
    let hs: [(&str, Weight); 3] = [
        ("1", |_| 1.0),
        ("p", |p| p),
        ("1{p > 1/2}", |p| f64::from(u8::from(p > 0.5))),
    ];
    for (name, h) in hs {
        let (lo, hi) = moment_bounds_generic_h(|p| h(p[0]), &f, mean_d, &opts)?;
        println!("h = {name:<10} [{lo:.4}, {hi:.4}]");
    }
    Ok(())
}
