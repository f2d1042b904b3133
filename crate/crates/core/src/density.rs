//! Densities on `[0,1]^d`: grid-tabulated (Lebesgue) or atom-backed (counts).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Point;

/// Uniform tensor grid with `m` nodes per axis, including both endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub m: usize,
}

impl Grid {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::UnsupportedDimension(dim));
        }
        if m < 2 {
            return Err(Error::InvalidConfig("grid needs at least 2 nodes per axis".into()));
        }
        Ok(Grid { dim, m })
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn step(&self) -> f64 {
        1.0 / (self.m - 1) as f64
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.step()
    }

    /// Node at flat index `k`; for `dim = 2` the first axis varies slowest.
    pub fn node(&self, k: usize) -> Point {
        match self.dim {
            1 => Point::scalar(self.coordinate(k)),
            _ => Point::new(&[self.coordinate(k / self.m), self.coordinate(k % self.m)])
                .expect("dim 2"),
        }
    }

    /// Tensor-product trapezoid weights, aligned with flat node indices.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.step();
        let axis: Vec<f64> = (0..self.m)
            .map(|i| if i == 0 || i + 1 == self.m { 0.5 * h } else { h })
            .collect();
        match self.dim {
            1 => axis,
            _ => axis
                .iter()
                .flat_map(|a| axis.iter().map(move |b| a * b))
                .collect(),
        }
    }
}

/// Trapezoid rule for values tabulated on a uniform grid over `[0,1]^dim`.
///
/// The number of nodes per axis is inferred from `values.len()`.
pub fn trapezoid_integrate(values: &[f64], dim: usize) -> f64 {
    let m = match dim {
        1 => values.len(),
        2 => (values.len() as f64).sqrt().round() as usize,
        _ => return f64::NAN,
    };
    if m < 2 || m.pow(dim as u32) != values.len() {
        return f64::NAN;
    }
    let grid = Grid { dim, m };
    grid.trapezoid_weights()
        .iter()
        .zip(values)
        .map(|(w, v)| w * v)
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: Grid,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomDensity {
    #[serde(with = "point_list")]
    pub support: Vec<Point>,
    pub masses: Vec<f64>,
}

/// `f_P` or `f_{P|X=x,Z=z}` in either representation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DensityFunction {
    Grid(GridDensity),
    Atoms(AtomDensity),
}

impl DensityFunction {
    pub fn from_grid(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::RepresentationMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        Ok(DensityFunction::Grid(GridDensity { grid, values }))
    }

    /// Tabulates `f` at every grid node.
    pub fn tabulate(grid: Grid, f: impl Fn(&Point) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(&grid.node(k))).collect();
        DensityFunction::Grid(GridDensity { grid, values })
    }

    pub fn from_atoms(support: Vec<Point>, masses: Vec<f64>) -> Result<Self> {
        if support.len() != masses.len() || support.is_empty() {
            return Err(Error::RepresentationMismatch(
                "atom support and masses must be non-empty and of equal length".into(),
            ));
        }
        Ok(DensityFunction::Atoms(AtomDensity { support, masses }))
    }

    /// Grid values or atom masses, in node order.
    pub fn values(&self) -> &[f64] {
        match self {
            DensityFunction::Grid(g) => &g.values,
            DensityFunction::Atoms(a) => &a.masses,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            DensityFunction::Grid(g) => g.grid.dim,
            DensityFunction::Atoms(a) => a.support[0].dim(),
        }
    }

    /// Weights turning node values into an integral: trapezoid weights for
    /// grids, ones for atoms.
    pub fn quadrature_weights(&self) -> Vec<f64> {
        match self {
            DensityFunction::Grid(g) => g.grid.trapezoid_weights(),
            DensityFunction::Atoms(a) => vec![1.0; a.masses.len()],
        }
    }

    pub fn integrate(&self) -> f64 {
        match self {
            DensityFunction::Grid(g) => trapezoid_integrate(&g.values, g.grid.dim),
            DensityFunction::Atoms(a) => a.masses.iter().sum(),
        }
    }

    /// Integral of `g(p) * f(p)` under the same quadrature as [`integrate`](Self::integrate).
    pub fn expectation(&self, g: impl Fn(&Point) -> f64) -> f64 {
        self.quadrature_weights()
            .iter()
            .zip(self.values())
            .enumerate()
            .map(|(k, (w, v))| w * v * g(&self.node(k)))
            .sum()
    }

    /// Location of node `k` (grid node or atom).
    pub fn node(&self, k: usize) -> Point {
        match self {
            DensityFunction::Grid(g) => g.grid.node(k),
            DensityFunction::Atoms(a) => a.support[k],
        }
    }

    /// Value at an arbitrary point: (bi)linear interpolation on grids, the
    /// mass of a matching atom (or 0) for atoms.
    pub fn eval(&self, p: &Point) -> f64 {
        match self {
            DensityFunction::Grid(g) => interpolate(g, p),
            DensityFunction::Atoms(a) => a
                .support
                .iter()
                .position(|s| s == p)
                .map_or(0.0, |k| a.masses[k]),
        }
    }

    /// Errors unless both densities live on the same grid or support.
    pub fn check_compatible(&self, other: &DensityFunction) -> Result<()> {
        match (self, other) {
            (DensityFunction::Grid(a), DensityFunction::Grid(b)) if a.grid == b.grid => Ok(()),
            (DensityFunction::Atoms(a), DensityFunction::Atoms(b)) if a.support == b.support => {
                Ok(())
            }
            (DensityFunction::Grid(_), DensityFunction::Grid(_)) => {
                Err(Error::RepresentationMismatch("different grids".into()))
            }
            (DensityFunction::Atoms(_), DensityFunction::Atoms(_)) => {
                Err(Error::RepresentationMismatch("different atom supports".into()))
            }
            _ => Err(Error::RepresentationMismatch(
                "grid-backed and atom-backed densities cannot be combined".into(),
            )),
        }
    }

    /// Checks nonnegativity and `|integral - 1| <= tolerance`.
    pub fn check_normalized(&self, tolerance: f64) -> Result<()> {
        if let Some(v) = self.values().iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(Error::Domain(format!("density value {v} is negative or NaN")));
        }
        let mass = self.integrate();
        if (mass - 1.0).abs() > tolerance {
            return Err(Error::Domain(format!("density integrates to {mass}")));
        }
        Ok(())
    }
}

fn interpolate(g: &GridDensity, p: &Point) -> f64 {
    let m = g.grid.m;
    let locate = |t: f64| {
        let s = t.clamp(0.0, 1.0) * (m - 1) as f64;
        let i = (s.floor() as usize).min(m - 2);
        (i, s - i as f64)
    };
    match g.grid.dim {
        1 => {
            let (i, t) = locate(p[0]);
            g.values[i] * (1.0 - t) + g.values[i + 1] * t
        }
        _ => {
            let (i, s) = locate(p[0]);
            let (j, t) = locate(p[1]);
            let v = |a: usize, b: usize| g.values[a * m + b];
            v(i, j) * (1.0 - s) * (1.0 - t)
                + v(i + 1, j) * s * (1.0 - t)
                + v(i, j + 1) * (1.0 - s) * t
                + v(i + 1, j + 1) * s * t
        }
    }
}

mod point_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::model::Point;

    pub fn serialize<S: Serializer>(points: &[Point], s: S) -> Result<S::Ok, S::Error> {
        let raw: Vec<&[f64]> = points.iter().map(|p| p.coords()).collect();
        raw.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let raw: Vec<Vec<f64>> = Vec::deserialize(d)?;
        raw.iter()
            .map(|c| Point::new(c).map_err(serde::de::Error::custom))
            .collect()
    }
}
