//! Sharp bounds on the average structural function from the dual programs
//!
//! ```text
//! LB = sup_phi { ∫ min(phi f_cond, f_marg) dp - phi E[1-D | x] }
//! UB = inf_phi { ∫ max(-phi f_cond, f_marg) dp + phi E[1-D | x] }
//! ```
//!
//! and their tightening over the values of an excluded covariate `z`
//! (largest lower bound, smallest upper bound). Integrals are trapezoid sums
//! on grids and plain sums on atoms, so both representations share one code
//! path.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::density::DensityFunction;
use crate::error::{Error, Result};
use crate::model::Point;
use crate::optimize::{optimize_scalar, Direction, ScalarOptimum};
use crate::theta::{ThetaCell, ThetaEstimate};

pub use crate::density::trapezoid_integrate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub k: f64,
    pub tolerance: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            k: 50.0,
            tolerance: 1e-8,
        }
    }
}

impl From<&AnalysisConfig> for SolverOptions {
    fn from(cfg: &AnalysisConfig) -> Self {
        SolverOptions {
            k: cfg.k,
            tolerance: cfg.phi_tolerance,
        }
    }
}

/// One dual program with quadrature weights folded into the node values.
///
/// Weights are nonnegative, so `w * max(-phi c, m) = max(-phi wc, wm)`.
/// Node values may be negative (perturbed densities); the objectives stay
/// convex and concave in `phi` regardless.
#[derive(Clone, Debug, PartialEq)]
pub struct DualCell {
    cond: Vec<f64>,
    marg: Vec<f64>,
    e: f64,
}

impl DualCell {
    pub fn new(f_cond: &DensityFunction, f_marg: &DensityFunction, e: f64) -> Result<Self> {
        f_cond.check_compatible(f_marg)?;
        Ok(Self::from_nodes(
            &f_cond.quadrature_weights(),
            f_cond.values(),
            f_marg.values(),
            e,
        ))
    }

    pub fn from_nodes(weights: &[f64], cond: &[f64], marg: &[f64], e: f64) -> Self {
        DualCell {
            cond: weights.iter().zip(cond).map(|(w, c)| w * c).collect(),
            marg: weights.iter().zip(marg).map(|(w, m)| w * m).collect(),
            e,
        }
    }

    pub fn upper(&self, phi: f64) -> f64 {
        let s: f64 = self
            .cond
            .iter()
            .zip(&self.marg)
            .map(|(c, m)| (-phi * c).max(*m))
            .sum();
        s + phi * self.e
    }

    pub fn lower(&self, phi: f64) -> f64 {
        let s: f64 = self
            .cond
            .iter()
            .zip(&self.marg)
            .map(|(c, m)| (phi * c).min(*m))
            .sum();
        s - phi * self.e
    }

    pub fn solve_upper(&self, opts: &SolverOptions) -> ScalarOptimum {
        optimize_scalar(|phi| self.upper(phi), Direction::Minimize, opts.k, opts.tolerance)
    }

    pub fn solve_lower(&self, opts: &SolverOptions) -> ScalarOptimum {
        optimize_scalar(|phi| self.lower(phi), Direction::Maximize, opts.k, opts.tolerance)
    }
}

/// `∫ max(-phi f_cond, f_marg) dp + phi e`.
pub fn objective_upper(
    phi: f64,
    f_cond: &DensityFunction,
    f_marg: &DensityFunction,
    e: f64,
) -> Result<f64> {
    Ok(DualCell::new(f_cond, f_marg, e)?.upper(phi))
}

/// `∫ min(phi f_cond, f_marg) dp - phi e`.
pub fn objective_lower(
    phi: f64,
    f_cond: &DensityFunction,
    f_marg: &DensityFunction,
    e: f64,
) -> Result<f64> {
    Ok(DualCell::new(f_cond, f_marg, e)?.lower(phi))
}

/// Bounds from a single exclusion cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZBounds {
    pub z: Option<i64>,
    pub lb: f64,
    pub ub: f64,
    pub phi_lower: f64,
    pub phi_upper: f64,
    pub lower_binding: bool,
    pub upper_binding: bool,
}

impl ZBounds {
    fn from_optima(z: Option<i64>, lo: ScalarOptimum, up: ScalarOptimum) -> Self {
        ZBounds {
            z,
            lb: lo.value,
            ub: up.value,
            phi_lower: lo.phi,
            phi_upper: up.phi,
            lower_binding: lo.binding,
            upper_binding: up.binding,
        }
    }

    fn warnings(&self, k: f64) -> Vec<String> {
        let mut w = Vec::new();
        for (side, hit) in [("lower", self.lower_binding), ("upper", self.upper_binding)] {
            if hit {
                w.push(format!(
                    "{side} bound for z={:?} attained at the box edge |phi|={k}; rerun with a larger K",
                    self.z
                ));
            }
        }
        w
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsResult {
    pub lower: f64,
    pub upper: f64,
    pub phi_lower: f64,
    pub phi_upper: f64,
    pub z_lower: Option<i64>,
    pub z_upper: Option<i64>,
    pub per_z: Vec<ZBounds>,
    pub warnings: Vec<String>,
}

pub fn bounds_given_z(
    cell: &ThetaCell,
    f_marg: &DensityFunction,
    opts: &SolverOptions,
) -> Result<ZBounds> {
    let dual = DualCell::new(&cell.f_cond, f_marg, cell.e)?;
    Ok(ZBounds::from_optima(cell.z, dual.solve_lower(opts), dual.solve_upper(opts)))
}

/// Combines per-cell bounds: largest lower bound, smallest upper bound,
/// ties resolved toward the earlier (smaller) `z`.
pub fn combine(per_z: Vec<ZBounds>, k: f64) -> Result<BoundsResult> {
    let first = per_z
        .first()
        .ok_or_else(|| Error::Domain("no z cells to combine".into()))?;
    let (mut lo, mut up) = (first, first);
    for b in &per_z[1..] {
        if b.lb > lo.lb {
            lo = b;
        }
        if b.ub < up.ub {
            up = b;
        }
    }
    let warnings = per_z.iter().flat_map(|b| b.warnings(k)).collect();
    Ok(BoundsResult {
        lower: lo.lb,
        upper: up.ub,
        phi_lower: lo.phi_lower,
        phi_upper: up.phi_upper,
        z_lower: lo.z,
        z_upper: up.z,
        per_z: per_z.clone(),
        warnings,
    })
}

/// Bounds tightened over every cell of `theta`. Invalid cells are skipped
/// with a warning; it is an error if none remains.
pub fn bounds_with_exclusion(theta: &ThetaEstimate, opts: &SolverOptions) -> Result<BoundsResult> {
    let mut cells: Vec<&ThetaCell> = theta.cells.iter().collect();
    cells.sort_by_key(|c| c.z);
    let mut skipped = Vec::new();
    cells.retain(|c| match c.validate(&theta.f_marg) {
        Ok(()) => true,
        Err(e) => {
            skipped.push(format!("z={:?} skipped: {e}", c.z));
            false
        }
    });
    if cells.is_empty() {
        return Err(Error::NoRetainedZ(theta.x));
    }
    let per_z = cells
        .par_iter()
        .map(|c| bounds_given_z(c, &theta.f_marg, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut res = combine(per_z, opts.k)?;
    res.warnings.extend(skipped);
    Ok(res)
}

/// Bounds on `E[h(P) m(X,P) | X = x]` for a user-supplied weight `h`:
///
/// ```text
/// sup_phi { E[min(0, h(P) - phi) | x] + phi E[D | x] }
///     <= E[h(P) m(X,P) | x] <=
/// inf_phi { E[max(0, h(P) + phi) | x] - phi E[D | x] }
/// ```
///
/// `h` is only evaluated where `f_given_x` carries mass.
pub fn moment_bounds_generic_h(
    h: impl Fn(&Point) -> f64,
    f_given_x: &DensityFunction,
    mean_d: f64,
    opts: &SolverOptions,
) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&mean_d) {
        return Err(Error::Domain(format!("E[D|x]={mean_d} outside [0,1]")));
    }
    let nodes: Vec<(f64, f64)> = f_given_x
        .quadrature_weights()
        .iter()
        .zip(f_given_x.values())
        .enumerate()
        .filter(|(_, (w, f))| **w * **f != 0.0)
        .map(|(k, (w, f))| (w * f, h(&f_given_x.node(k))))
        .collect();

    let lower = optimize_scalar(
        |phi| {
            nodes.iter().map(|(wf, hk)| wf * (hk - phi).min(0.0)).sum::<f64>() + phi * mean_d
        },
        Direction::Maximize,
        opts.k,
        opts.tolerance,
    );
    let upper = optimize_scalar(
        |phi| {
            nodes.iter().map(|(wf, hk)| wf * (hk + phi).max(0.0)).sum::<f64>() - phi * mean_d
        },
        Direction::Minimize,
        opts.k,
        opts.tolerance,
    );
    Ok((lower.value, upper.value))
}

/// Closed-form bounds when `P` takes two values `p_lo < p_hi`.
///
/// `q_bar_cond = P(P = p_hi | X = x)`, `q_bar_marg = P(P = p_hi)`. The two
/// extreme configurations put all `p_hi` types (or all `p_lo` types) at a
/// corner of `[0, 1]`; the result is ordered `(min, max)`.
pub fn two_point_closed_form(mean_d: f64, q_bar_cond: f64, q_bar_marg: f64) -> Result<(f64, f64)> {
    for (name, v) in [("E[D|x]", mean_d), ("q_bar_cond", q_bar_cond), ("q_bar_marg", q_bar_marg)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Domain(format!("{name}={v} outside [0,1]")));
        }
    }
    if q_bar_cond == 0.0 || q_bar_cond == 1.0 {
        return Err(Error::DegenerateSupport(format!(
            "P(P=p_hi|X=x)={q_bar_cond} leaves one type unobserved"
        )));
    }
    let q_lo = 1.0 - q_bar_cond;
    let psi_low_at_lo = ((mean_d - q_bar_cond) / q_lo).max(0.0);
    let psi_high_at_hi = (mean_d / q_bar_cond).min(1.0);
    let psi_high_at_lo = (mean_d / q_lo).min(1.0);
    let psi_low_at_hi = ((mean_d - q_lo) / q_bar_cond).max(0.0);

    let a = q_bar_marg * psi_low_at_hi + (1.0 - q_bar_marg) * psi_high_at_lo;
    let b = q_bar_marg * psi_high_at_hi + (1.0 - q_bar_marg) * psi_low_at_lo;
    Ok((a.min(b), a.max(b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Grid;
    use rand::Rng;

    fn two_point() -> (DensityFunction, DensityFunction) {
        let support = vec![Point::scalar(0.9), Point::scalar(0.1)];
        (
            DensityFunction::from_atoms(support.clone(), vec![0.8, 0.2]).unwrap(),
            DensityFunction::from_atoms(support, vec![0.5, 0.5]).unwrap(),
        )
    }

    fn uniform() -> DensityFunction {
        DensityFunction::tabulate(Grid::new(1, 1001).unwrap(), |_| 1.0)
    }

    /// Extreme points of `{a in [0,1]^J : sum c_j a_j = mean_d}`: every
    /// coordinate at 0 or 1 except at most one.
    fn lp_oracle(c: &[f64], m: &[f64], mean_d: f64) -> (f64, f64) {
        let j = c.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for free in 0..j {
            if c[free] == 0.0 {
                continue;
            }
            for mask in 0..(1u32 << j) {
                if mask & (1 << free) != 0 {
                    continue;
                }
                let fixed: f64 = (0..j).filter(|k| mask & (1 << k) != 0).map(|k| c[k]).sum();
                let a_free = (mean_d - fixed) / c[free];
                if !(-1e-12..=1.0 + 1e-12).contains(&a_free) {
                    continue;
                }
                let v: f64 = (0..j)
                    .filter(|k| mask & (1 << k) != 0)
                    .map(|k| m[k])
                    .sum::<f64>()
                    + m[free] * a_free.clamp(0.0, 1.0);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (lo, hi)
    }

    #[test]
    fn objective_hand_values() {
        let (c, m) = two_point();
        assert!((objective_upper(-0.625, &c, &m, 0.4).unwrap() - 0.75).abs() < 1e-15);
        assert!((objective_lower(0.625, &c, &m, 0.4).unwrap() - 0.375).abs() < 1e-15);
        assert!((objective_upper(0.0, &c, &m, 0.4).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(objective_lower(0.0, &c, &m, 0.4).unwrap(), 0.0);
    }

    #[test]
    fn objective_collapse_case() {
        let f = uniform();
        assert!((objective_upper(-1.0, &f, &f, 0.3).unwrap() - 0.7).abs() < 1e-12);
        assert!((objective_lower(1.0, &f, &f, 0.3).unwrap() - 0.7).abs() < 1e-12);
        assert!((objective_upper(0.0, &f, &f, 0.3).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_mixed_representations() {
        let (c, _) = two_point();
        assert!(matches!(
            objective_upper(1.0, &c, &uniform(), 0.5),
            Err(Error::RepresentationMismatch(_))
        ));
    }

    #[test]
    fn optimizer_on_two_point_kinks() {
        let (c, m) = two_point();
        let dual = DualCell::new(&c, &m, 0.4).unwrap();
        let opts = SolverOptions::default();
        let up = dual.solve_upper(&opts);
        assert!((up.phi + 0.625).abs() < 1e-6 && (up.value - 0.75).abs() < 1e-6);
        let lo = dual.solve_lower(&opts);
        assert!((lo.phi - 0.625).abs() < 1e-6 && (lo.value - 0.375).abs() < 1e-6);
    }

    #[test]
    fn collapse_gives_point_identification() {
        let f = uniform();
        let cell = ThetaCell { z: None, f_cond: f.clone(), e: 0.3, n_stated: None, n_revealed: None };
        let b = bounds_given_z(&cell, &f, &SolverOptions::default()).unwrap();
        assert!((b.lb - 0.7).abs() < 1e-9 && (b.ub - 0.7).abs() < 1e-9, "{b:?}");
    }

    #[test]
    fn two_point_bounds_match_closed_form() {
        let (c, m) = two_point();
        let cell = ThetaCell { z: None, f_cond: c, e: 0.4, n_stated: None, n_revealed: None };
        let b = bounds_given_z(&cell, &m, &SolverOptions::default()).unwrap();
        assert!((b.lb - 0.375).abs() < 1e-9 && (b.ub - 0.75).abs() < 1e-9);
        let (lo, hi) = two_point_closed_form(0.6, 0.8, 0.5).unwrap();
        assert!((lo - 0.375).abs() < 1e-15 && (hi - 0.75).abs() < 1e-15);
    }

    #[test]
    fn closed_form_degenerate_cases() {
        assert_eq!(two_point_closed_form(0.5, 0.5, 0.5).unwrap(), (0.5, 0.5));
        assert_eq!(two_point_closed_form(1.0, 0.3, 0.7).unwrap(), (1.0, 1.0));
        assert!(matches!(two_point_closed_form(0.5, 1.0, 0.5), Err(Error::DegenerateSupport(_))));
        assert!(two_point_closed_form(1.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn dual_equals_primal_on_random_atoms() {
        let mut rng = crate::rng::stream(21, &[]);
        let opts = SolverOptions::default();
        for _ in 0..50 {
            let j = rng.random_range(2..=3);
            let norm = |v: Vec<f64>| {
                let s: f64 = v.iter().sum();
                v.into_iter().map(|x| x / s).collect::<Vec<f64>>()
            };
            let c = norm((0..j).map(|_| rng.random_range(0.1..1.0)).collect());
            let m = norm((0..j).map(|_| rng.random_range(0.1..1.0)).collect());
            let mean_d: f64 = rng.random_range(0.05..0.95);
            let support: Vec<Point> = (0..j).map(|k| Point::scalar(k as f64 / 4.0)).collect();
            let cell = ThetaCell {
                z: None,
                f_cond: DensityFunction::from_atoms(support.clone(), c.clone()).unwrap(),
                e: 1.0 - mean_d,
                n_stated: None,
                n_revealed: None,
            };
            let marg = DensityFunction::from_atoms(support, m.clone()).unwrap();
            let b = bounds_given_z(&cell, &marg, &opts).unwrap();
            let (lo, hi) = lp_oracle(&c, &m, mean_d);
            assert!((b.lb - lo).abs() < 1e-6 && (b.ub - hi).abs() < 1e-6, "{b:?} vs {lo} {hi}");
        }
    }

    #[test]
    fn exclusion_takes_tightest_and_breaks_ties_low() {
        let f = uniform();
        let cell = |z, e| ThetaCell { z: Some(z), f_cond: f.clone(), e, n_stated: None, n_revealed: None };
        let theta = ThetaEstimate {
            x: 0,
            cells: vec![cell(1, 0.3), cell(0, 0.3)],
            f_marg: f.clone(),
            n_revealed: None,
            n_stated: None,
        };
        let b = bounds_with_exclusion(&theta, &SolverOptions::default()).unwrap();
        assert_eq!(b.z_lower, Some(0));
        assert_eq!(b.z_upper, Some(0));
        assert_eq!(b.per_z.len(), 2);
    }

    #[test]
    fn exclusion_single_cell_equals_given_z() {
        let (c, m) = two_point();
        let cell = ThetaCell { z: None, f_cond: c, e: 0.4, n_stated: None, n_revealed: None };
        let opts = SolverOptions::default();
        let one = bounds_given_z(&cell, &m, &opts).unwrap();
        let theta = ThetaEstimate { x: 1, cells: vec![cell], f_marg: m, n_revealed: None, n_stated: None };
        let all = bounds_with_exclusion(&theta, &opts).unwrap();
        assert_eq!((all.lower, all.upper), (one.lb, one.ub));
    }

    #[test]
    fn exclusion_errors_when_all_cells_invalid() {
        let f = uniform();
        let theta = ThetaEstimate {
            x: 3,
            cells: vec![ThetaCell { z: Some(0), f_cond: f.clone(), e: 1.5, n_stated: None, n_revealed: None }],
            f_marg: f,
            n_revealed: None,
            n_stated: None,
        };
        assert!(matches!(
            bounds_with_exclusion(&theta, &SolverOptions::default()),
            Err(Error::NoRetainedZ(3))
        ));
    }

    #[test]
    fn generic_h_trivial_weights() {
        let grid = Grid::new(1, 501).unwrap();
        let f = DensityFunction::tabulate(grid, |p| 2.0 * p[0]);
        let opts = SolverOptions::default();
        let (lo, hi) = moment_bounds_generic_h(|_| 1.0, &f, 0.37, &opts).unwrap();
        assert!((lo - 0.37).abs() < 1e-6 && (hi - 0.37).abs() < 1e-6);
        let (lo, hi) = moment_bounds_generic_h(|_| 0.0, &f, 0.37, &opts).unwrap();
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
    }
}
