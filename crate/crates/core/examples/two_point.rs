//! Stated probabilities on two points: closed form against the dual solver.
//!
//! `cargo run --release --example two_point`

use asf_bounds::bounds::{bounds_given_z, two_point_closed_form, SolverOptions};
use asf_bounds::{DensityFunction, Point, ThetaCell};

fn main() -> asf_bounds::Result<()> {
    let support = vec![Point::scalar(0.1), Point::scalar(0.9)];
    // P(P = 0.9 | X = 1) = 0.8, P(P = 0.9) = 0.5, E[D | X = 1] = 0.6.
    let (q_cond, q_marg, mean_d) = (0.8, 0.5, 0.6);
    let f_cond = DensityFunction::from_atoms(support.clone(), vec![1.0 - q_cond, q_cond])?;
    let f_marg = DensityFunction::from_atoms(support, vec![1.0 - q_marg, q_marg])?;
    let cell = ThetaCell { z: None, f_cond, e: 1.0 - mean_d, n_stated: None, n_revealed: None };

    let dual = bounds_given_z(&cell, &f_marg, &SolverOptions::default())?;
    let closed = two_point_closed_form(mean_d, q_cond, q_marg)?;
    println!("dual solver:  [{:.6}, {:.6}]", dual.lb, dual.ub);
    println!("closed form:  [{:.6}, {:.6}]", closed.0, closed.1);
    Ok(())
}
