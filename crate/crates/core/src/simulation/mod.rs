//! Retirement-decision data-generating process and its closed-form oracles.
//!
//! Latent type `eta ~ N(0,1)` with `U = Phi(eta)`. Potential decisions are
//! `D(x) = 1{Phi((x+1) eta) >= nu}`, the stated probability is `P = 1 - U`,
//! and health at decision and elicitation time are `X = 1{U <= nu_x}`,
//! `Z = 1{U <= nu_z}`, with `nu, nu_x, nu_z` independent uniforms.

mod monte_carlo;

pub use monte_carlo::{run_monte_carlo, CellReport, MonteCarloPlan, MonteCarloReport, SplitMode};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bounds::{bounds_with_exclusion, BoundsResult, SolverOptions};
use crate::density::{DensityFunction, Grid};
use crate::error::{Error, Result};
use crate::model::{
    Dataset, MatchedDataset, MatchedObservation, Point, RevealedDataset, StatedDataset,
};
use crate::normal;
use crate::rng;
use crate::theta::{ThetaCell, ThetaEstimate};

const SAMPLE_STREAM: u64 = 0x5a3b_1e00;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DgpDraw {
    pub eta: f64,
    pub nu: f64,
    pub nu_x: f64,
    pub nu_z: f64,
    pub d0: u8,
    pub d1: u8,
    pub p: f64,
    pub x: u8,
    pub z: u8,
}

impl DgpDraw {
    pub fn from_latent(eta: f64, nu: f64, nu_x: f64, nu_z: f64) -> Self {
        let u = normal::cdf(eta);
        let d0 = u8::from(normal::cdf(eta) >= nu);
        let d1 = u8::from(normal::cdf(2.0 * eta) >= nu);
        DgpDraw {
            eta,
            nu,
            nu_x,
            nu_z,
            d0,
            d1,
            p: 1.0 - u,
            x: u8::from(u <= nu_x),
            z: u8::from(u <= nu_z),
        }
    }

    /// Observed decision `D = X D(1) + (1 - X) D(0)`.
    pub fn d(&self) -> u8 {
        if self.x == 1 {
            self.d1
        } else {
            self.d0
        }
    }

    pub fn observation(&self) -> MatchedObservation {
        MatchedObservation {
            d: self.d(),
            p: Point::scalar(self.p),
            x: i64::from(self.x),
            z: Some(i64::from(self.z)),
        }
    }
}

/// One simulated population with its matched and split views.
#[derive(Clone, Debug)]
pub struct SimulatedSample {
    pub draws: Vec<DgpDraw>,
    pub matched: MatchedDataset,
}

impl SimulatedSample {
    pub fn revealed(&self) -> RevealedDataset {
        self.matched.revealed_view()
    }

    pub fn stated(&self) -> StatedDataset {
        self.matched.stated_view()
    }
}

/// `n` independent draws from the DGP, fully determined by `seed`.
pub fn simulate_sample(n: usize, seed: u64) -> Result<SimulatedSample> {
    if n == 0 {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut rng = rng::stream(seed, &[SAMPLE_STREAM]);
    let draws: Vec<DgpDraw> = (0..n)
        .map(|_| {
            let eta: f64 = rng.sample(StandardNormal);
            let nu: f64 = rng.random();
            let nu_x: f64 = rng.random();
            let nu_z: f64 = rng.random();
            DgpDraw::from_latent(eta, nu, nu_x, nu_z)
        })
        .collect();
    let matched = Dataset::new(draws.iter().map(DgpDraw::observation).collect())?;
    Ok(SimulatedSample { draws, matched })
}

fn check_x(x: i64) -> Result<()> {
    if x == 0 || x == 1 {
        Ok(())
    } else {
        Err(Error::Domain(format!("x={x}; the simulation design has x in {{0,1}}")))
    }
}

/// `mu(x) = ∫ (1 - Phi((x+1) eta)) phi(eta) d eta`.
pub fn true_asf(x: i64) -> Result<f64> {
    check_x(x)?;
    let slope = (x + 1) as f64;
    Ok(normal::expect(|eta| normal::cdf(-slope * eta)))
}

/// Density of `U = Phi(eta)` given `X = x, Z = z` at `u`: `P(X=1|U=u) = 1-u`.
fn type_density(x: i64, z: i64, u: f64) -> f64 {
    let px = if x == 1 { 1.0 - u } else { u };
    let pz = if z == 1 { 1.0 - u } else { u };
    let norm = match (x, z) {
        (1, 1) | (0, 0) => 3.0,
        _ => 6.0,
    };
    norm * px * pz
}

/// `f_{P|X=x,Z=z}(p)`: `3p^2`, `6p(1-p)`, `6p(1-p)`, `3(1-p)^2` for
/// `(x,z) = (1,1), (1,0), (0,1), (0,0)`.
pub fn conditional_density(x: i64, z: i64, p: f64) -> f64 {
    type_density(x, z, 1.0 - p)
}

/// `E[1 - D | X = x, Z = z]` by quadrature over the latent type:
/// `∫ f_{U|x,z}(Phi(eta)) (1 - Phi((x+1) eta)) phi(eta) d eta`.
pub fn analytic_e(x: i64, z: i64) -> Result<f64> {
    check_x(x)?;
    check_x(z)?;
    let slope = (x + 1) as f64;
    Ok(normal::expect(|eta| {
        type_density(x, z, normal::cdf(eta)) * normal::cdf(-slope * eta)
    }))
}

/// Population `theta_x` tabulated on a scalar grid with `grid_m` nodes.
pub fn analytic_theta(x: i64, grid_m: usize) -> Result<ThetaEstimate> {
    check_x(x)?;
    let grid = Grid::new(1, grid_m)?;
    let cells = [0, 1]
        .into_iter()
        .map(|z| {
            Ok(ThetaCell {
                z: Some(z),
                f_cond: DensityFunction::tabulate(grid, |p| conditional_density(x, z, p[0])),
                e: analytic_e(x, z)?,
                n_stated: None,
                n_revealed: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaEstimate {
        x,
        cells,
        f_marg: DensityFunction::tabulate(grid, |_| 1.0),
        n_revealed: None,
        n_stated: None,
    })
}

/// Identified set for `mu(x)` under the simulation design.
pub fn analytic_bounds(x: i64, grid_m: usize, opts: &SolverOptions) -> Result<BoundsResult> {
    bounds_with_exclusion(&analytic_theta(x, grid_m)?, opts)
}
