//! One-dimensional search for convex (or concave) objectives on a box.
//!
//! The dual objectives are piecewise linear with kinks, so the search only
//! relies on unimodality: a coarse equispaced scan locates a bracket, and
//! golden-section search shrinks it.

use serde::{Deserialize, Serialize};

/// Number of equispaced points in the coarse scan.
pub const SCAN_POINTS: usize = 257;
const MAX_GOLDEN_ITERS: usize = 200;
const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarOptimum {
    pub phi: f64,
    pub value: f64,
    /// The optimizer sits on the edge of `[-K, K]`; a larger box may move it.
    pub binding: bool,
}

/// Optimizes `objective` over `[-half_width, half_width]`.
///
/// `objective` must be convex when minimizing and concave when maximizing.
/// The returned value is within `tolerance * (1 + |value|)` of the optimum
/// for objectives whose slopes are of order one.
pub fn optimize_scalar(
    objective: impl Fn(f64) -> f64,
    direction: Direction,
    half_width: f64,
    tolerance: f64,
) -> ScalarOptimum {
    let sign = match direction {
        Direction::Minimize => 1.0,
        Direction::Maximize => -1.0,
    };
    let f = |phi: f64| sign * objective(phi);

    let lo = -half_width;
    let step = 2.0 * half_width / (SCAN_POINTS - 1) as f64;
    let at = |i: usize| if i + 1 == SCAN_POINTS { half_width } else { lo + i as f64 * step };

    let mut best_i = 0;
    let mut best_v = f64::INFINITY;
    for i in 0..SCAN_POINTS {
        let v = f(at(i));
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut best_phi = at(best_i);

    let mut a = at(best_i.saturating_sub(1));
    let mut b = at((best_i + 1).min(SCAN_POINTS - 1));
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let stop = 1e-3 * tolerance;
    for _ in 0..MAX_GOLDEN_ITERS {
        if b - a <= stop * (1.0 + best_phi.abs()) {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        for (x, v) in [(x1, f1), (x2, f2)] {
            if v < best_v {
                best_v = v;
                best_phi = x;
            }
        }
    }

    let binding = half_width - best_phi.abs() <= 1e-6 * half_width;
    ScalarOptimum {
        phi: best_phi,
        value: sign * best_v,
        binding,
    }
}
