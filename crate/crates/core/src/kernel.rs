//! Epanechnikov kernel density and regression estimators, and count
//! densities for discretely reported probabilities.

use serde::{Deserialize, Serialize};

use crate::config::{BoundaryCorrection, PMode};
use crate::density::{DensityFunction, Grid};
use crate::error::{Error, Result};
use crate::model::{Dataset, Observation, Point};

/// Distinct-value count at or below which discrete mode is suggested.
pub const DISCRETE_SUGGESTION_LIMIT: usize = 20;

pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `s * n^(-1/5)` with `s` the unbiased sample standard deviation.
pub fn bandwidth_rule(sample: &[f64]) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: n });
    }
    let mean = sample.iter().sum::<f64>() / n as f64;
    let var = sample.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let s = var.sqrt();
    if s.is_nan() || s <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(s * (n as f64).powf(-0.2))
}

/// Per-axis bandwidths for a set of points.
pub fn bandwidths(points: &[Point]) -> Result<Vec<f64>> {
    let dim = points.first().map_or(1, Point::dim);
    (0..dim)
        .map(|a| bandwidth_rule(&points.iter().map(|p| p[a]).collect::<Vec<_>>()))
        .collect()
}

/// Suggests count densities when the reports take few distinct values.
pub fn suggest_p_mode(points: &[Point]) -> PMode {
    if distinct_points(points).len() <= DISCRETE_SUGGESTION_LIMIT {
        PMode::Discrete
    } else {
        PMode::Continuous
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFit {
    pub bandwidth: Vec<f64>,
    pub n: usize,
    pub density: DensityFunction,
}

/// Kernel weights of one coordinate on the nodes of one grid axis.
fn axis_weights(
    c: f64,
    h: f64,
    m: usize,
    correction: BoundaryCorrection,
    out: &mut Vec<(usize, f64)>,
) {
    out.clear();
    let step = 1.0 / (m - 1) as f64;
    let mut add = |center: f64| {
        let lo = ((center - h) / step).ceil().max(0.0);
        let hi = ((center + h) / step).floor().min((m - 1) as f64);
        if lo > hi {
            return;
        }
        for i in lo as usize..=hi as usize {
            let w = epanechnikov((i as f64 * step - center) / h) / h;
            if w > 0.0 {
                out.push((i, w));
            }
        }
    };
    add(c);
    if correction == BoundaryCorrection::Reflection {
        if c < h {
            add(-c);
        }
        if 1.0 - c < h {
            add(2.0 - c);
        }
    }
}

/// Product-kernel density estimate tabulated on `grid`:
/// `(1/n) sum_i prod_a K((g_a - p_ia) / h_a) / h_a`.
pub fn kde_fit(
    points: &[Point],
    bandwidth: &[f64],
    grid: Grid,
    correction: BoundaryCorrection,
) -> Result<KernelFit> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    if bandwidth.len() != grid.dim || points.iter().any(|p| p.dim() != grid.dim) {
        return Err(Error::RepresentationMismatch(
            "point, bandwidth and grid dimensions differ".into(),
        ));
    }
    if bandwidth.iter().any(|h| !(*h > 0.0 && h.is_finite())) {
        return Err(Error::InvalidConfig("bandwidth must be positive".into()));
    }

    let m = grid.m;
    let mut values = vec![0.0; grid.len()];
    let mut wa = Vec::new();
    let mut wb = Vec::new();
    for p in points {
        axis_weights(p[0], bandwidth[0], m, correction, &mut wa);
        if grid.dim == 1 {
            for &(i, w) in &wa {
                values[i] += w;
            }
        } else {
            axis_weights(p[1], bandwidth[1], m, correction, &mut wb);
            for &(i, u) in &wa {
                let row = &mut values[i * m..(i + 1) * m];
                for &(j, v) in &wb {
                    row[j] += u * v;
                }
            }
        }
    }
    let inv_n = 1.0 / points.len() as f64;
    values.iter_mut().for_each(|v| *v *= inv_n);

    Ok(KernelFit {
        bandwidth: bandwidth.to_vec(),
        n: points.len(),
        density: DensityFunction::from_grid(grid, values)?,
    })
}

fn distinct_points(points: &[Point]) -> Vec<Point> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    v.dedup();
    v
}

/// Empirical frequencies on the distinct observed values, sorted.
pub fn count_density(points: &[Point]) -> Result<DensityFunction> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    count_density_on(points, &distinct_points(points))
}

/// Empirical frequencies on a given support; every point must lie on it.
pub fn count_density_on(points: &[Point], support: &[Point]) -> Result<DensityFunction> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    let mut counts = vec![0usize; support.len()];
    for p in points {
        let k = support
            .binary_search_by(|s| s.total_cmp(p))
            .map_err(|_| Error::RepresentationMismatch(format!("{:?} is off the support", p.coords())))?;
        counts[k] += 1;
    }
    let n = points.len() as f64;
    DensityFunction::from_atoms(
        support.to_vec(),
        counts.into_iter().map(|c| c as f64 / n).collect(),
    )
}

/// Sorted union of the values taken by `points`.
pub fn support_of(points: &[Point]) -> Vec<Point> {
    distinct_points(points)
}

fn product_weight(p: &Point, q: &Point, h: &[f64]) -> f64 {
    p.coords()
        .iter()
        .zip(q.coords())
        .zip(h)
        .map(|((a, b), h)| epanechnikov((b - a) / h))
        .product()
}

/// Kernel regression of `d` on `p` evaluated at `query`.
pub fn nadaraya_watson(d: &[u8], p: &[Point], query: &Point, bandwidth: &[f64]) -> Result<f64> {
    if d.is_empty() || d.len() != p.len() {
        return Err(Error::TooFewPoints {
            needed: 1,
            got: d.len().min(p.len()),
        });
    }
    let (num, den) = d.iter().zip(p).fold((0.0, 0.0), |(num, den), (&di, pi)| {
        let w = product_weight(pi, query, bandwidth);
        (num + w * di as f64, den + w)
    });
    if den > 0.0 {
        Ok(num / den)
    } else {
        Err(Error::ZeroKernelWeight)
    }
}

/// Nadaraya-Watson fit indexed by the first coordinate for fast repeated queries.
#[derive(Clone, Debug)]
pub struct KernelRegression {
    sorted: Vec<(Point, f64)>,
    keys: Vec<f64>,
    bandwidth: Vec<f64>,
}

impl KernelRegression {
    pub fn fit(d: &[u8], p: &[Point], bandwidth: &[f64]) -> Result<Self> {
        if d.is_empty() || d.len() != p.len() {
            return Err(Error::TooFewPoints {
                needed: 1,
                got: d.len().min(p.len()),
            });
        }
        let mut sorted: Vec<(Point, f64)> =
            p.iter().zip(d).map(|(p, &d)| (*p, d as f64)).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let keys = sorted.iter().map(|(p, _)| p[0]).collect();
        Ok(KernelRegression {
            sorted,
            keys,
            bandwidth: bandwidth.to_vec(),
        })
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    /// `None` when no observation falls inside the kernel window.
    pub fn predict(&self, query: &Point) -> Option<f64> {
        let h0 = self.bandwidth[0];
        let lo = self.keys.partition_point(|&k| k < query[0] - h0);
        let hi = self.keys.partition_point(|&k| k <= query[0] + h0);
        let (num, den) = self.sorted[lo..hi]
            .iter()
            .fold((0.0, 0.0), |(num, den), (p, d)| {
                let w = product_weight(p, query, &self.bandwidth);
                (num + w * d, den + w)
            });
        (den > 0.0).then(|| num / den)
    }
}

/// Sample mean of `1 - d` over the records with `X = x` (and `Z = z`).
pub fn conditional_mean_complement<O: Observation>(
    dataset: &Dataset<O>,
    x: i64,
    z: Option<i64>,
) -> Result<f64> {
    let sub = dataset.subsample(x, z)?;
    let n = sub.len();
    if n == 0 {
        return Err(Error::EmptySubsample { x, z });
    }
    let ones: usize = sub
        .records()
        .iter()
        .filter_map(|r| r.decision())
        .map(usize::from)
        .sum();
    Ok((n - ones) as f64 / n as f64)
}
