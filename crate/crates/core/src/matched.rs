//! Point estimation of `mu(x)` when decisions and stated probabilities are
//! observed for the same individuals:
//! `mu_hat(x) = (1/n) sum_i E_hat[D | X = x, P = p_i]`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::AnalysisConfig;
use crate::error::{Error, Result};
use crate::kernel::{bandwidths, KernelRegression};
use crate::model::MatchedDataset;
use crate::rng::{self, Resampler, WithReplacement};

const MATCHED_STREAM: u64 = 0x6d_a7c4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedEstimate {
    pub x: i64,
    pub mu_hat: f64,
    pub n: usize,
    pub n_x: usize,
    /// Query points with no `X = x` observation inside the kernel window.
    pub skipped: usize,
    pub bandwidth: Vec<f64>,
    pub se: Option<f64>,
    pub ci: Option<(f64, f64)>,
    pub alpha: Option<f64>,
    #[serde(rename = "B")]
    pub bootstrap_reps: Option<usize>,
}

/// Kernel regression of `D` on `P` within `X = x`, averaged over the `P`
/// values of the whole sample.
pub fn estimate_asf_matched(data: &MatchedDataset, x: i64, _config: &AnalysisConfig) -> Result<MatchedEstimate> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sub = data.subsample(x, None)?;
    if sub.is_empty() {
        return Err(Error::EmptySubsample { x, z: None });
    }
    let p_x = sub.points();
    let d_x: Vec<u8> = sub.records().iter().map(|r| r.d).collect();
    let bandwidth = bandwidths(&p_x)?;
    let fit = KernelRegression::fit(&d_x, &p_x, &bandwidth)?;

    let predictions: Vec<f64> = data.records().iter().filter_map(|r| fit.predict(&r.p)).collect();
    if predictions.is_empty() {
        return Err(Error::AllQueriesSkipped(data.len()));
    }
    let mu_hat = (predictions.iter().sum::<f64>() / predictions.len() as f64).clamp(0.0, 1.0);
    Ok(MatchedEstimate {
        x,
        mu_hat,
        n: data.len(),
        n_x: sub.len(),
        skipped: data.len() - predictions.len(),
        bandwidth,
        se: None,
        ci: None,
        alpha: None,
        bootstrap_reps: None,
    })
}

/// Type-7 sample quantile of sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Bootstrap with resamplers supplied per replicate. Replicates that cannot
/// be estimated (for instance no `X = x` rows) are redrawn.
pub fn bootstrap_matched_with<R, F>(
    data: &MatchedDataset,
    x: i64,
    config: &AnalysisConfig,
    make_resampler: F,
) -> Result<MatchedEstimate>
where
    R: Resampler,
    F: Fn(usize) -> R + Sync,
{
    config.validate()?;
    let b = config.bootstrap_reps;
    if b < 2 {
        return Err(Error::InvalidConfig(format!("bootstrap needs B >= 2, got {b}")));
    }
    let mut point = estimate_asf_matched(data, x, config)?;
    let attempts = config.max_redraws.max(1);
    let draws: Vec<f64> = config.install(|| {
        (0..b)
            .into_par_iter()
            .map(|rep| {
                let mut resampler = make_resampler(rep);
                for _ in 0..attempts {
                    let star = data.resample(&resampler.draw(data.len()));
                    match estimate_asf_matched(&star, x, config) {
                        Ok(e) => return Ok(e.mu_hat),
                        Err(e) if e.is_io() => return Err(e),
                        Err(_) => continue,
                    }
                }
                Err(Error::BootstrapExhausted { replicate: rep, attempts })
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mean = draws.iter().sum::<f64>() / b as f64;
    let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    let mut sorted = draws;
    sorted.sort_by(f64::total_cmp);
    let a = config.alpha;
    point.se = Some(var.sqrt());
    point.ci = Some((quantile(&sorted, a / 2.0), quantile(&sorted, 1.0 - a / 2.0)));
    point.alpha = Some(a);
    point.bootstrap_reps = Some(b);
    Ok(point)
}

/// Nonparametric bootstrap: `config.bootstrap_reps` resamples of all rows,
/// replicate `b` drawn from the stream keyed by `(config.seed, b)`.
pub fn bootstrap_matched(data: &MatchedDataset, x: i64, config: &AnalysisConfig) -> Result<MatchedEstimate> {
    let seed = config.seed;
    bootstrap_matched_with(data, x, config, |rep| {
        WithReplacement(rng::stream(seed, &[MATCHED_STREAM, rep as u64]))
    })
}
