//! Confidence regions for the identified set `[LB_x, UB_x]` from unmatched
//! revealed and stated samples.
//!
//! The bounds are directionally (not fully) differentiable functionals of
//! `theta_x`, so the bootstrap is applied through a numerical directional
//! derivative: each replicate `theta*` perturbs the plug-in densities by
//! `xi_n r_n (theta* - theta_hat)`, the dual programs are re-solved, and the
//! change is scaled by `1 / xi_n`. `E[1-D|x,z]` is held at its plug-in value
//! inside the derivative since it converges faster than the densities.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{bounds_with_exclusion, DualCell, SolverOptions};
use crate::config::{AnalysisConfig, BoundaryCorrection, PMode};
use crate::density::{DensityFunction, Grid};
use crate::error::{Error, Result};
use crate::kernel::{bandwidths, conditional_mean_complement, count_density_on, kde_fit, support_of};
use crate::model::{Point, RevealedDataset, StatedDataset};
use crate::rng::{self, Resampler, WithReplacement};
use crate::theta::{ThetaCell, ThetaEstimate};

const REGION_STREAM: u64 = 0x7e61_0b00;

/// Smallest number of bootstrap replicates accepted by [`confidence_region`].
pub const MIN_REGION_REPLICATES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// How densities are rebuilt for a resample: kernel fits with the bandwidths
/// of the original sample, or count densities on its support.
#[derive(Clone, Debug, PartialEq)]
pub enum Representation {
    Kernel {
        grid: Grid,
        correction: BoundaryCorrection,
        marginal_bandwidth: Vec<f64>,
        cell_bandwidths: Vec<Vec<f64>>,
    },
    Counts {
        support: Vec<Point>,
    },
}

/// Everything needed to recompute `theta_x` on a resample.
#[derive(Clone, Debug, PartialEq)]
pub struct EstimationPlan {
    pub x: i64,
    pub zs: Vec<Option<i64>>,
    pub representation: Representation,
}

#[derive(Clone, Debug)]
pub struct ThetaFit {
    pub theta: ThetaEstimate,
    pub plan: EstimationPlan,
    pub warnings: Vec<String>,
}

fn cell_points(stated: &StatedDataset, x: i64, z: Option<i64>) -> Result<Vec<Point>> {
    Ok(stated.subsample(x, z)?.points())
}

/// Cells `z` with enough observations in both samples, plus drop warnings.
fn retained_cells(
    revealed: &RevealedDataset,
    stated: &StatedDataset,
    x: i64,
    floor: usize,
) -> Result<(Vec<Option<i64>>, Vec<String>)> {
    let candidates: Vec<Option<i64>> = if stated.has_z() {
        let mut zs = stated.z_support().unwrap_or_default();
        zs.extend(revealed.z_support().unwrap_or_default());
        zs.sort_unstable();
        zs.dedup();
        zs.into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let mut keep = Vec::new();
    let mut warnings = Vec::new();
    for z in candidates {
        let ns = stated.subsample(x, z)?.len();
        let nr = revealed.subsample(x, z)?.len();
        if ns == 0 || nr == 0 || ns < floor || nr < floor {
            warnings.push(format!(
                "dropped z={z:?} at x={x}: {ns} stated and {nr} revealed observations (floor {floor})"
            ));
        } else {
            keep.push(z);
        }
    }
    Ok((keep, warnings))
}

/// Plug-in `theta_x`: `f_P` from the whole stated sample, `f_{P|x,z}` from
/// each stated cell with its own bandwidth `s_xz n_xz^(-1/5)`, and
/// `E[1-D|x,z]` as a revealed-cell average.
pub fn estimate_theta(
    revealed: &RevealedDataset,
    stated: &StatedDataset,
    x: i64,
    config: &AnalysisConfig,
) -> Result<ThetaFit> {
    config.validate()?;
    if revealed.is_empty() || stated.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if revealed.has_z() != stated.has_z() {
        return Err(Error::ZColumnMismatch);
    }
    let dim = stated.dim_p().ok_or(Error::EmptyDataset)?;
    let (zs, warnings) = retained_cells(revealed, stated, x, config.z_drop_floor)?;
    if zs.is_empty() {
        return Err(Error::NoRetainedZ(x));
    }

    let all_points = stated.points();
    let representation = match config.p_mode {
        PMode::Continuous => Representation::Kernel {
            grid: Grid::new(dim, config.grid_m)?,
            correction: config.boundary_correction,
            marginal_bandwidth: bandwidths(&all_points)?,
            cell_bandwidths: zs
                .iter()
                .map(|&z| bandwidths(&cell_points(stated, x, z)?))
                .collect::<Result<_>>()?,
        },
        PMode::Discrete => Representation::Counts {
            support: support_of(&all_points),
        },
    };
    let plan = EstimationPlan {
        x,
        zs,
        representation,
    };
    let theta = theta_with_plan(revealed, stated, &plan)?;
    Ok(ThetaFit {
        theta,
        plan,
        warnings,
    })
}

/// Recomputes `theta_x` under a fixed plan (same cells, bandwidths, grid or
/// support). Fails with [`Error::EmptySubsample`] when a cell is empty.
pub fn theta_with_plan(
    revealed: &RevealedDataset,
    stated: &StatedDataset,
    plan: &EstimationPlan,
) -> Result<ThetaEstimate> {
    let x = plan.x;
    let density = |points: &[Point], h: Option<&[f64]>| -> Result<DensityFunction> {
        match (&plan.representation, h) {
            (Representation::Kernel { grid, correction, .. }, Some(h)) => {
                Ok(kde_fit(points, h, *grid, *correction)?.density)
            }
            (Representation::Counts { support }, _) => count_density_on(points, support),
            _ => unreachable!("kernel plans carry bandwidths"),
        }
    };
    let (marg_h, cell_h) = match &plan.representation {
        Representation::Kernel {
            marginal_bandwidth,
            cell_bandwidths,
            ..
        } => (Some(marginal_bandwidth.as_slice()), Some(cell_bandwidths)),
        Representation::Counts { .. } => (None, None),
    };

    let f_marg = density(&stated.points(), marg_h)?;
    let cells = plan
        .zs
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            let points = cell_points(stated, x, z)?;
            if points.is_empty() {
                return Err(Error::EmptySubsample { x, z });
            }
            let n_revealed = revealed.subsample(x, z)?.len();
            Ok(ThetaCell {
                z,
                f_cond: density(&points, cell_h.map(|h| h[i].as_slice()))?,
                e: conditional_mean_complement(revealed, x, z)?,
                n_stated: Some(points.len()),
                n_revealed: Some(n_revealed),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaEstimate {
        x,
        cells,
        f_marg,
        n_revealed: Some(revealed.len()),
        n_stated: Some(stated.len()),
    })
}

/// One bootstrap `theta*`: both samples resampled independently, rows drawn
/// from `resampler`, redrawn while a retained cell comes out empty.
pub fn bootstrap_theta_with(
    revealed: &RevealedDataset,
    stated: &StatedDataset,
    plan: &EstimationPlan,
    max_redraws: usize,
    replicate: usize,
    resampler: &mut impl Resampler,
) -> Result<ThetaEstimate> {
    for _ in 0..max_redraws.max(1) {
        let r = revealed.resample(&resampler.draw(revealed.len()));
        let s = stated.resample(&resampler.draw(stated.len()));
        match theta_with_plan(&r, &s, plan) {
            Err(Error::EmptySubsample { .. }) => continue,
            other => return other,
        }
    }
    Err(Error::BootstrapExhausted {
        replicate,
        attempts: max_redraws.max(1),
    })
}

/// Replicate `b` drawn from the stream keyed by `(config.seed, b)`.
pub fn bootstrap_theta(
    revealed: &RevealedDataset,
    stated: &StatedDataset,
    plan: &EstimationPlan,
    config: &AnalysisConfig,
    replicate: usize,
) -> Result<ThetaEstimate> {
    let mut resampler = WithReplacement(rng::stream(config.seed, &[REGION_STREAM, replicate as u64]));
    bootstrap_theta_with(revealed, stated, plan, config.max_redraws, replicate, &mut resampler)
}

/// The bound functionals `theta -> (LB_x, UB_x)` around a plug-in estimate.
#[derive(Clone, Debug)]
pub struct BoundFunctional {
    weights: Vec<f64>,
    zs: Vec<Option<i64>>,
    cond: Vec<Vec<f64>>,
    e: Vec<f64>,
    marg: Vec<f64>,
    opts: SolverOptions,
    base: (f64, f64),
    binding: bool,
}

fn solve(cells: &[DualCell], opts: &SolverOptions) -> ((f64, f64), bool) {
    let mut lb = f64::NEG_INFINITY;
    let mut ub = f64::INFINITY;
    let mut binding = false;
    for c in cells {
        let lo = c.solve_lower(opts);
        let up = c.solve_upper(opts);
        lb = lb.max(lo.value);
        ub = ub.min(up.value);
        binding |= lo.binding || up.binding;
    }
    ((lb, ub), binding)
}

impl BoundFunctional {
    pub fn new(theta_hat: &ThetaEstimate, opts: &SolverOptions) -> Result<Self> {
        theta_hat.validate()?;
        let weights = theta_hat.f_marg.quadrature_weights();
        let marg = theta_hat.f_marg.values().to_vec();
        let cond: Vec<Vec<f64>> = theta_hat.cells.iter().map(|c| c.f_cond.values().to_vec()).collect();
        let e: Vec<f64> = theta_hat.cells.iter().map(|c| c.e).collect();
        let duals: Vec<DualCell> = cond
            .iter()
            .zip(&e)
            .map(|(c, &e)| DualCell::from_nodes(&weights, c, &marg, e))
            .collect();
        let (base, binding) = solve(&duals, opts);
        Ok(BoundFunctional {
            weights,
            zs: theta_hat.zs(),
            cond,
            e,
            marg,
            opts: *opts,
            base,
            binding,
        })
    }

    /// `(LB, UB)` at the plug-in estimate.
    pub fn base(&self) -> (f64, f64) {
        self.base
    }

    /// Whether a plug-in dual optimum sits at the `[-K, K]` edge.
    pub fn binding(&self) -> bool {
        self.binding
    }

    /// `(LB, UB)` at `theta_hat + step (theta_star - theta_hat)`, holding
    /// `E[1-D|x,z]` at its plug-in values. Perturbed densities may go
    /// negative; the programs remain well defined.
    pub fn perturbed(&self, theta_star: &ThetaEstimate, step: f64) -> Result<((f64, f64), bool)> {
        if theta_star.zs() != self.zs {
            return Err(Error::RepresentationMismatch("bootstrap cells differ from the estimate".into()));
        }
        let shift = |hat: &[f64], star: &DensityFunction| -> Result<Vec<f64>> {
            let star = star.values();
            if star.len() != hat.len() {
                return Err(Error::RepresentationMismatch("bootstrap density on a different grid".into()));
            }
            Ok(hat.iter().zip(star).map(|(h, s)| h + step * (s - h)).collect())
        };
        let marg = shift(&self.marg, &theta_star.f_marg)?;
        let duals = self
            .cond
            .iter()
            .zip(&theta_star.cells)
            .zip(&self.e)
            .map(|((hat, star), &e)| Ok(DualCell::from_nodes(&self.weights, &shift(hat, &star.f_cond)?, &marg, e)))
            .collect::<Result<Vec<_>>>()?;
        Ok(solve(&duals, &self.opts))
    }

    /// Both derivative draws `((LB' - LB) / xi, (UB' - UB) / xi)`.
    pub fn derivatives(&self, theta_star: &ThetaEstimate, xi_n: f64, r_n: f64) -> Result<(f64, f64)> {
        let ((lb, ub), _) = self.perturbed(theta_star, xi_n * r_n)?;
        Ok(((lb - self.base.0) / xi_n, (ub - self.base.1) / xi_n))
    }
}

/// Numerical directional derivative of one bound along `r_n (theta* - theta_hat)`.
pub fn numerical_derivative(
    theta_hat: &ThetaEstimate,
    theta_star: &ThetaEstimate,
    side: Side,
    xi_n: f64,
    r_n: f64,
    opts: &SolverOptions,
) -> Result<f64> {
    if !(xi_n > 0.0 && r_n > 0.0) {
        return Err(Error::InvalidConfig("xi_n and r_n must be positive".into()));
    }
    let (lower, upper) = BoundFunctional::new(theta_hat, opts)?.derivatives(theta_star, xi_n, r_n)?;
    Ok(match side {
        Side::Lower => lower,
        Side::Upper => upper,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceRegion {
    pub x: i64,
    pub lb_hat: f64,
    pub ub_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
    #[serde(rename = "B")]
    pub bootstrap_reps: usize,
    pub r_n: f64,
    pub xi_n: f64,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub empty: bool,
    #[serde(skip)]
    pub lower_draws: Vec<f64>,
    #[serde(skip)]
    pub upper_draws: Vec<f64>,
}

impl ConfidenceRegion {
    pub fn contains(&self, value: f64) -> bool {
        !self.empty && self.lo <= value && value <= self.hi
    }

    pub fn length(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    /// Writes `b,lower,upper` rows for the stored derivative draws.
    pub fn write_draws_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["b", "lower", "upper"]).map_err(err)?;
        for (b, (l, u)) in self.lower_draws.iter().zip(&self.upper_draws).enumerate() {
            w.write_record([(b + 1).to_string(), l.to_string(), u.to_string()])
                .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }
}

/// `r_n = n^(2/5)`.
pub fn rate(n: usize) -> f64 {
    (n as f64).powf(0.4)
}

/// `xi_n = c n^(-3/10)`.
pub fn step_size(n: usize, scale: f64) -> f64 {
    scale * (n as f64).powf(-0.3)
}

/// 1-based order statistic `k` with the largest value first.
fn descending_order_stat(sorted_desc: &[f64], k: usize) -> f64 {
    sorted_desc[k.clamp(1, sorted_desc.len()) - 1]
}

/// Region endpoints from the derivative draws:
/// `[LB - lower_(ceil(B a/2)) / r_n, UB - upper_(floor(B (1 - a/2))) / r_n]`
/// with order statistics counted from the largest.
pub fn region_from_draws(
    lb_hat: f64,
    ub_hat: f64,
    r_n: f64,
    alpha: f64,
    lower_draws: &[f64],
    upper_draws: &[f64],
) -> (f64, f64) {
    let b = lower_draws.len();
    let desc = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    };
    // Nudges keep exact products like 200 * 0.05 / 2 from rounding up.
    let k_lower = ((b as f64 * alpha / 2.0) - 1e-9).ceil() as usize;
    let k_upper = ((b as f64 * (1.0 - alpha / 2.0)) + 1e-9).floor() as usize;
    let lo = lb_hat - descending_order_stat(&desc(lower_draws), k_lower) / r_n;
    let hi = ub_hat - descending_order_stat(&desc(upper_draws), k_upper) / r_n;
    (lo, hi)
}

/// Bootstrap confidence region for `mu(x)` at level `1 - alpha`.
///
/// `r_n` and `xi_n` use the smaller of the two sample sizes.
pub fn confidence_region(
    revealed: &RevealedDataset,
    stated: &StatedDataset,
    x: i64,
    config: &AnalysisConfig,
) -> Result<ConfidenceRegion> {
    config.validate()?;
    let b = config.bootstrap_reps;
    if b < MIN_REGION_REPLICATES {
        return Err(Error::InvalidConfig(format!(
            "confidence regions need B >= {MIN_REGION_REPLICATES}, got {b}"
        )));
    }
    let fit = estimate_theta(revealed, stated, x, config)?;
    let opts = SolverOptions::from(config);
    let plug_in = bounds_with_exclusion(&fit.theta, &opts)?;
    let functional = BoundFunctional::new(&fit.theta, &opts)?;

    let n = revealed.len().min(stated.len());
    let r_n = rate(n);
    let xi_n = step_size(n, config.xi_scale);

    let draws: Vec<(f64, f64)> = config.install(|| {
        (0..b)
            .into_par_iter()
            .map(|rep| {
                let star = bootstrap_theta(revealed, stated, &fit.plan, config, rep)?;
                functional.derivatives(&star, xi_n, r_n)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let (lower_draws, upper_draws): (Vec<f64>, Vec<f64>) = draws.into_iter().unzip();

    let (lb_hat, ub_hat) = (plug_in.lower, plug_in.upper);
    let (lo, hi) = region_from_draws(lb_hat, ub_hat, r_n, config.alpha, &lower_draws, &upper_draws);

    let mut warnings = fit.warnings;
    warnings.extend(plug_in.warnings);
    if revealed.len() != stated.len() {
        warnings.push(format!(
            "sample sizes differ ({} revealed, {} stated); r_n and xi_n use n={n}",
            revealed.len(),
            stated.len()
        ));
    }
    let empty = lo > hi;
    if empty {
        warnings.push(format!("empty region: lower end {lo} exceeds upper end {hi}"));
    }
    Ok(ConfidenceRegion {
        x,
        lb_hat,
        ub_hat,
        lo,
        hi,
        alpha: config.alpha,
        bootstrap_reps: b,
        r_n,
        xi_n,
        warnings,
        empty,
        lower_draws,
        upper_draws,
    })
}
