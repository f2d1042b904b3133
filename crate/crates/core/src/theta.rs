use serde::{Deserialize, Serialize};

use crate::density::DensityFunction;
use crate::error::{Error, Result};

/// Inputs of one exclusion cell: `f_{P|X=x,Z=z}` and `E[1-D | X=x, Z=z]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaCell {
    pub z: Option<i64>,
    pub f_cond: DensityFunction,
    /// `E[1 - D | X = x, Z = z]`.
    pub e: f64,
    /// Stated and revealed subsample sizes; `None` for population quantities.
    pub n_stated: Option<usize>,
    pub n_revealed: Option<usize>,
}

/// Everything the bounds at a fixed `x` depend on: one cell per retained
/// `z` plus the marginal density of the stated probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    pub x: i64,
    pub cells: Vec<ThetaCell>,
    pub f_marg: DensityFunction,
    pub n_revealed: Option<usize>,
    pub n_stated: Option<usize>,
}

impl ThetaCell {
    pub fn validate(&self, f_marg: &DensityFunction) -> Result<()> {
        if !(0.0..=1.0).contains(&self.e) {
            return Err(Error::Domain(format!("E[1-D|x,z]={} outside [0,1]", self.e)));
        }
        if self.n_stated == Some(0) || self.n_revealed == Some(0) {
            return Err(Error::Domain("retained cell with no observations".into()));
        }
        self.f_cond.check_compatible(f_marg)
    }
}

impl ThetaEstimate {
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::NoRetainedZ(self.x));
        }
        self.cells.iter().try_for_each(|c| c.validate(&self.f_marg))
    }

    pub fn zs(&self) -> Vec<Option<i64>> {
        self.cells.iter().map(|c| c.z).collect()
    }
}
