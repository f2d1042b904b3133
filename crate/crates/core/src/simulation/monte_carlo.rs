//! Coverage and excess length of the bootstrap region over repeated samples.

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{analytic_bounds, simulate_sample, true_asf};
use crate::bounds::SolverOptions;
use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::inference::confidence_region;
use crate::model::{Dataset, MatchedDataset, RevealedDataset, StatedDataset};
use crate::rng;

const REPETITION_STREAM: u64 = 0x3c_a11e;

/// How one simulated population feeds the two unmatched samples.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Revealed and stated views of the same `n` draws.
    #[default]
    Shared,
    /// `2n` draws; revealed from the first half, stated from the second.
    DisjointHalves,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloPlan {
    pub ns: Vec<usize>,
    pub xi_scales: Vec<f64>,
    pub repetitions: usize,
    pub bootstrap_reps: usize,
    pub alpha: f64,
    pub seed: u64,
    pub x: i64,
    pub split: SplitMode,
}

impl MonteCarloPlan {
    /// Reduced grid: 200 repetitions of 200 replicates, `n` in {500, 1000}.
    pub fn desk(seed: u64) -> Self {
        MonteCarloPlan {
            ns: vec![500, 1000],
            xi_scales: vec![0.5, 0.75, 1.0, 1.5],
            repetitions: 200,
            bootstrap_reps: 200,
            alpha: 0.05,
            seed,
            x: 0,
            split: SplitMode::Shared,
        }
    }

    /// 1000 repetitions of 1000 replicates, `n` in {500, 1000, 2000}.
    pub fn full(seed: u64) -> Self {
        MonteCarloPlan {
            ns: vec![500, 1000, 2000],
            repetitions: 1000,
            bootstrap_reps: 1000,
            ..Self::desk(seed)
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.ns.is_empty() || self.xi_scales.is_empty() {
            return bad("plan needs at least one n and one xi scale");
        }
        if self.ns.contains(&0) {
            return bad("sample sizes must be positive");
        }
        if self.repetitions == 0 {
            return bad("repetition count must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub n: usize,
    pub xi_scale: f64,
    pub coverage: f64,
    pub excess_length: f64,
    pub mean_length: f64,
    pub identified_length: f64,
    pub repetitions: usize,
    pub failures: usize,
    pub bootstrap_reps: usize,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloReport {
    pub x: i64,
    pub true_value: f64,
    pub identified_set: (f64, f64),
    pub plan: MonteCarloPlan,
    pub cells: Vec<CellReport>,
}

impl MonteCarloReport {
    pub fn cell(&self, n: usize, xi_scale: f64) -> Option<&CellReport> {
        self.cells.iter().find(|c| c.n == n && c.xi_scale == xi_scale)
    }

    /// One row per cell: `n,xi_scale,coverage,excess_length,M,B,failures`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["n", "xi_scale", "coverage", "excess_length", "M", "B", "failures"])
            .map_err(err)?;
        for c in &self.cells {
            w.write_record([
                c.n.to_string(),
                c.xi_scale.to_string(),
                c.coverage.to_string(),
                c.excess_length.to_string(),
                c.repetitions.to_string(),
                c.bootstrap_reps.to_string(),
                c.failures.to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::Csv(e.to_string()))
    }

    /// JSON without runtimes, stable across runs and worker counts.
    pub fn deterministic_json(&self) -> Result<serde_json::Value> {
        let mut value = serde_json::to_value(self)?;
        if let Some(cells) = value.get_mut("cells").and_then(|c| c.as_array_mut()) {
            for c in cells {
                if let Some(obj) = c.as_object_mut() {
                    obj.remove("runtime_secs");
                }
            }
        }
        Ok(value)
    }
}

fn split_views(
    matched: &MatchedDataset,
    split: SplitMode,
) -> Result<(RevealedDataset, StatedDataset)> {
    match split {
        SplitMode::Shared => Ok((matched.revealed_view(), matched.stated_view())),
        SplitMode::DisjointHalves => {
            let half = matched.len() / 2;
            let first = Dataset::new(matched.records()[..half].to_vec())?;
            let second = Dataset::new(matched.records()[half..].to_vec())?;
            Ok((first.revealed_view(), second.stated_view()))
        }
    }
}

/// Runs every `(n, xi_scale)` cell of `plan`.
///
/// Repetition `r` at sample size `n` simulates the same population and uses
/// the same bootstrap streams for every `xi_scale`, so cells in a row differ
/// only through the tuning constant. Failed repetitions are counted and left
/// out of both averages.
pub fn run_monte_carlo(plan: &MonteCarloPlan, config: &AnalysisConfig) -> Result<MonteCarloReport> {
    plan.validate()?;
    config.validate()?;
    let truth = true_asf(plan.x)?;
    let identified = analytic_bounds(plan.x, config.grid_m, &SolverOptions::from(config))?;
    let identified_length = identified.upper - identified.lower;

    let mut cells = Vec::with_capacity(plan.ns.len() * plan.xi_scales.len());
    for &n in &plan.ns {
        for &xi_scale in &plan.xi_scales {
            let started = Instant::now();
            let cell_config = AnalysisConfig {
                xi_scale,
                bootstrap_reps: plan.bootstrap_reps,
                alpha: plan.alpha,
                ..config.clone()
            };
            let outcomes: Vec<Option<(bool, f64)>> = config.install(|| {
                (0..plan.repetitions)
                    .into_par_iter()
                    .map(|rep| {
                        let keys = [REPETITION_STREAM, n as u64, rep as u64];
                        let population_n = match plan.split {
                            SplitMode::Shared => n,
                            SplitMode::DisjointHalves => 2 * n,
                        };
                        let sample = simulate_sample(population_n, rng::derive_seed(plan.seed, &keys)).ok()?;
                        let (revealed, stated) = split_views(&sample.matched, plan.split).ok()?;
                        let rep_config = AnalysisConfig {
                            seed: rng::derive_seed(plan.seed, &[keys[0], keys[1], keys[2], 1]),
                            workers: None,
                            ..cell_config.clone()
                        };
                        let region = confidence_region(&revealed, &stated, plan.x, &rep_config).ok()?;
                        Some((region.contains(truth), region.length()))
                    })
                    .collect()
            });
            let ok: Vec<(bool, f64)> = outcomes.iter().flatten().copied().collect();
            let failures = plan.repetitions - ok.len();
            let (coverage, mean_length) = if ok.is_empty() {
                (f64::NAN, f64::NAN)
            } else {
                let m = ok.len() as f64;
                (
                    ok.iter().filter(|o| o.0).count() as f64 / m,
                    ok.iter().map(|o| o.1).sum::<f64>() / m,
                )
            };
            cells.push(CellReport {
                n,
                xi_scale,
                coverage,
                excess_length: mean_length - identified_length,
                mean_length,
                identified_length,
                repetitions: plan.repetitions,
                failures,
                bootstrap_reps: plan.bootstrap_reps,
                runtime_secs: started.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(MonteCarloReport {
        x: plan.x,
        true_value: truth,
        identified_set: (identified.lower, identified.upper),
        plan: plan.clone(),
        cells,
    })
}
