use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary handling for kernel density fits on `[0,1]^d`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryCorrection {
    #[default]
    None,
    Reflection,
}

/// How stated probabilities are turned into densities.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PMode {
    /// Epanechnikov kernel densities tabulated on a grid.
    #[default]
    Continuous,
    /// Count densities on the observed support.
    Discrete,
}

/// Tuning knobs shared by the estimators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    /// Half-width of the box `[-K, K]` searched for the dual variable.
    pub k: f64,
    /// Grid points per axis; odd and at least 3.
    pub grid_m: usize,
    pub phi_tolerance: f64,
    pub bootstrap_reps: usize,
    pub alpha: f64,
    /// `c` in `xi_n = c * n^(-3/10)`.
    pub xi_scale: f64,
    pub seed: u64,
    pub boundary_correction: BoundaryCorrection,
    pub p_mode: PMode,
    /// Cells `(x, z)` with fewer observations than this in either sample are dropped.
    pub z_drop_floor: usize,
    /// Resampling attempts per bootstrap replicate before giving up.
    pub max_redraws: usize,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            k: 50.0,
            grid_m: 1001,
            phi_tolerance: 1e-8,
            bootstrap_reps: 1000,
            alpha: 0.05,
            xi_scale: 1.0,
            seed: 0,
            boundary_correction: BoundaryCorrection::None,
            p_mode: PMode::Continuous,
            z_drop_floor: 20,
            max_redraws: 100,
            workers: None,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.k > 0.0 && self.k.is_finite()) {
            return bad("K must be positive and finite");
        }
        if self.grid_m < 3 || self.grid_m.is_multiple_of(2) {
            return bad("grid M must be odd and at least 3");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.bootstrap_reps < 1 {
            return bad("B must be at least 1");
        }
        if self.phi_tolerance.is_nan() || self.phi_tolerance <= 0.0 {
            return bad("phi tolerance must be positive");
        }
        if !(self.xi_scale > 0.0 && self.xi_scale.is_finite()) {
            return bad("xi scale must be positive");
        }
        if self.workers == Some(0) {
            return bad("worker count must be positive");
        }
        Ok(())
    }

    /// Runs `f` on a pool with the configured worker count.
    pub fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match self.workers {
            Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            },
            None => f(),
        }
    }
}
