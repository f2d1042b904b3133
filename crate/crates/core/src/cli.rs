//! Batch front end: argument parsing, command wiring and run manifests.
//!
//! Every command writes pretty JSON (or CSV tables) that depend only on the
//! inputs, flags and seed. Wall-clock time goes to the manifest alone.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bounds::{bounds_with_exclusion, SolverOptions};
use crate::config::{AnalysisConfig, BoundaryCorrection, PMode};
use crate::error::{Error, Result};
use crate::inference::{confidence_region, estimate_theta};
use crate::matched::bootstrap_matched;
use crate::model::{load_matched_csv, load_revealed_csv, load_stated_csv, save_csv, CsvSchema, ValidationReport};
use crate::simulation::{self, run_monte_carlo, MonteCarloPlan, SplitMode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ESTIMATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "asf-bounds", version, about = "Average structural functions from stated and revealed choice data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sample from the simulation design and write matched, revealed and stated CSVs.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Plug-in bounds on mu(x) from unmatched samples.
    Bounds {
        revealed: PathBuf,
        stated: PathBuf,
        #[command(flatten)]
        io: EstimationIo,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Bootstrap confidence region for mu(x) from unmatched samples.
    Infer {
        revealed: PathBuf,
        stated: PathBuf,
        #[command(flatten)]
        io: EstimationIo,
        #[command(flatten)]
        tuning: Tuning,
        /// Also write the per-replicate derivative draws as CSV.
        #[arg(long)]
        draws_out: Option<PathBuf>,
    },
    /// Point estimate and bootstrap interval for mu(x) from a matched sample.
    Matched {
        data: PathBuf,
        #[command(flatten)]
        io: EstimationIo,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Coverage and excess-length grid over repeated simulated samples. Repetitions
    /// and bootstrap replications come from `--scale`.
    Replicate {
        #[arg(long, value_enum, default_value_t = Scale::Desk)]
        scale: Scale,
        /// Output directory for coverage.csv, report.json and manifest.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        x: i64,
        #[arg(long, value_enum, default_value_t = SplitMode::Shared)]
        split: SplitMode,
        /// Override the repetition count of the chosen scale.
        #[arg(long)]
        repetitions: Option<usize>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Population values under the simulation design.
    Analytic {
        #[arg(long)]
        x: i64,
        #[arg(long = "grid-m", default_value_t = 1001)]
        grid_m: usize,
        #[arg(long = "K", default_value_t = 50.0)]
        k: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Desk,
    Full,
}

/// Column names, target `x` and output path for the estimation commands.
#[derive(Clone, Debug, Args)]
pub struct EstimationIo {
    #[arg(long, allow_hyphen_values = true)]
    pub x: i64,
    #[arg(long = "d-col", default_value = "d")]
    pub d_col: String,
    #[arg(long = "x-col", default_value = "x")]
    pub x_col: String,
    /// Excluded covariate column; required in the header when given.
    #[arg(long = "z-col")]
    pub z_col: Option<String>,
    /// Comma-separated stated probability columns (default p1[,p2]).
    #[arg(long = "p-cols", value_delimiter = ',')]
    pub p_cols: Option<Vec<String>>,
    /// Write the JSON result here (plus a sibling manifest) instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl EstimationIo {
    pub fn schema(&self) -> CsvSchema {
        CsvSchema {
            d: self.d_col.clone(),
            x: self.x_col.clone(),
            z: Some(self.z_col.clone().unwrap_or_else(|| "z".into())),
            require_z: self.z_col.is_some(),
            p: self.p_cols.clone(),
        }
    }
}

#[derive(Clone, Debug, Args)]
pub struct Tuning {
    /// Dual variable search box [-K, K].
    #[arg(long = "K", default_value_t = 50.0)]
    pub k: f64,
    /// Grid points per axis for kernel densities.
    #[arg(long = "grid-m", default_value_t = 1001)]
    pub grid_m: usize,
    #[arg(long = "phi-tolerance", default_value_t = 1e-8)]
    pub phi_tolerance: f64,
    /// Bootstrap replications.
    #[arg(long = "B", default_value_t = 1000)]
    pub b: usize,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// c in xi_n = c n^(-3/10).
    #[arg(long = "xi-scale", default_value_t = 1.0)]
    pub xi_scale: f64,
    #[arg(long = "boundary-correction", value_enum, default_value_t = BoundaryCorrection::None)]
    pub boundary_correction: BoundaryCorrection,
    #[arg(long = "p-mode", value_enum, default_value_t = PMode::Continuous)]
    pub p_mode: PMode,
    /// Minimum observations per (x, z) cell in each sample.
    #[arg(long = "z-drop-floor", default_value_t = 20)]
    pub z_drop_floor: usize,
    #[arg(long, env = "ASF_BOUNDS_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl Tuning {
    pub fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            k: self.k,
            grid_m: self.grid_m,
            phi_tolerance: self.phi_tolerance,
            bootstrap_reps: self.b,
            alpha: self.alpha,
            xi_scale: self.xi_scale,
            seed: self.seed,
            boundary_correction: self.boundary_correction,
            p_mode: self.p_mode,
            z_drop_floor: self.z_drop_floor,
            workers: self.workers,
            ..AnalysisConfig::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl InputDigest {
    pub fn of(path: &Path) -> Result<Self> {
        Ok(InputDigest {
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Provenance record written next to command outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub inputs: Vec<InputDigest>,
    pub validation: Vec<ValidationReport>,
    pub outputs: Vec<InputDigest>,
    pub seed: u64,
    pub tool_version: String,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Paths whose current digest differs from the recorded one.
    pub fn stale_files(&self) -> Result<Vec<PathBuf>> {
        let mut stale = Vec::new();
        for d in self.inputs.iter().chain(&self.outputs) {
            if sha256_file(&d.path)? != d.sha256 {
                stale.push(d.path.clone());
            }
        }
        Ok(stale)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_text(path, &to_pretty(&serde_json::to_value(self)?)?)
    }
}

fn to_pretty(value: &Value) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// `results.json` -> `results.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Result of one command: the JSON document plus what went into it.
#[derive(Clone, Debug)]
pub struct CommandOutput {
    pub value: Value,
    pub warnings: Vec<String>,
    pub inputs: Vec<InputDigest>,
    pub validation: Vec<ValidationReport>,
    pub config: Value,
    pub seed: u64,
}

impl CommandOutput {
    fn new(value: Value, config: Value, seed: u64) -> Self {
        CommandOutput {
            value,
            warnings: Vec::new(),
            inputs: Vec::new(),
            validation: Vec::new(),
            config,
            seed,
        }
    }
}

fn digests(paths: &[&Path]) -> Result<Vec<InputDigest>> {
    paths.iter().map(|p| InputDigest::of(p)).collect()
}

pub fn cmd_bounds(revealed: &Path, stated: &Path, x: i64, schema: &CsvSchema, config: &AnalysisConfig) -> Result<CommandOutput> {
    let rev = load_revealed_csv(revealed, schema)?;
    let st = load_stated_csv(stated, schema)?;
    let fit = estimate_theta(&rev, &st, x, config)?;
    let mut result = bounds_with_exclusion(&fit.theta, &SolverOptions::from(config))?;
    let mut warnings = fit.warnings;
    warnings.append(&mut result.warnings);
    result.warnings = warnings.clone();
    let mut value = serde_json::to_value(&result)?;
    if let Some(obj) = value.as_object_mut() {
        obj.insert("x".into(), json!(x));
    }
    let mut out = CommandOutput::new(value, serde_json::to_value(config)?, config.seed);
    out.warnings = warnings;
    out.inputs = digests(&[revealed, stated])?;
    out.validation = vec![rev.validation_report(), st.validation_report()];
    Ok(out)
}

pub fn cmd_infer(
    revealed: &Path,
    stated: &Path,
    x: i64,
    schema: &CsvSchema,
    config: &AnalysisConfig,
    draws_out: Option<&Path>,
) -> Result<CommandOutput> {
    let rev = load_revealed_csv(revealed, schema)?;
    let st = load_stated_csv(stated, schema)?;
    let region = confidence_region(&rev, &st, x, config)?;
    if let Some(path) = draws_out {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        region.write_draws_csv(file)?;
    }
    let mut out = CommandOutput::new(serde_json::to_value(&region)?, serde_json::to_value(config)?, config.seed);
    out.warnings = region.warnings.clone();
    out.inputs = digests(&[revealed, stated])?;
    out.validation = vec![rev.validation_report(), st.validation_report()];
    Ok(out)
}

pub fn cmd_matched(data: &Path, x: i64, schema: &CsvSchema, config: &AnalysisConfig) -> Result<CommandOutput> {
    let matched = load_matched_csv(data, schema)?;
    let estimate = bootstrap_matched(&matched, x, config)?;
    let mut out = CommandOutput::new(serde_json::to_value(&estimate)?, serde_json::to_value(config)?, config.seed);
    if estimate.skipped > 0 {
        out.warnings.push(format!("{} query points had zero kernel weight and were skipped", estimate.skipped));
    }
    out.inputs = digests(&[data])?;
    out.validation = vec![matched.validation_report()];
    Ok(out)
}

pub fn cmd_analytic(x: i64, grid_m: usize, k: f64) -> Result<CommandOutput> {
    let config = AnalysisConfig { k, grid_m, ..AnalysisConfig::default() };
    config.validate()?;
    let opts = SolverOptions::from(&config);
    let bounds = simulation::analytic_bounds(x, grid_m, &opts)?;
    let value = json!({
        "x": x,
        "true_asf": simulation::true_asf(x)?,
        "lower": bounds.lower,
        "upper": bounds.upper,
        "e": {
            "z0": simulation::analytic_e(x, 0)?,
            "z1": simulation::analytic_e(x, 1)?,
        },
        "grid_m": grid_m,
    });
    Ok(CommandOutput::new(value, json!({ "grid_m": grid_m, "k": k }), 0))
}

/// Writes `matched.csv`, `revealed.csv`, `stated.csv` and `manifest.json` under `out`.
pub fn cmd_simulate(n: usize, seed: u64, out: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    let sample = simulation::simulate_sample(n, seed)?;
    create_dir(out)?;
    let files = [out.join("matched.csv"), out.join("revealed.csv"), out.join("stated.csv")];
    save_csv(&sample.matched, &files[0])?;
    save_csv(&sample.revealed(), &files[1])?;
    save_csv(&sample.stated(), &files[2])?;
    let manifest = RunManifest {
        command: "simulate".into(),
        config: json!({ "n": n, "seed": seed }),
        inputs: Vec::new(),
        validation: vec![sample.matched.validation_report()],
        outputs: files.iter().map(|f| InputDigest::of(f)).collect::<Result<_>>()?,
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}

/// Writes `coverage.csv`, `report.json` and `manifest.json` under `out`.
pub fn cmd_replicate(plan: &MonteCarloPlan, config: &AnalysisConfig, out: &Path) -> Result<RunManifest> {
    let started = Instant::now();
    create_dir(out)?;
    let report = run_monte_carlo(plan, config)?;
    let table = out.join("coverage.csv");
    let json_path = out.join("report.json");
    let file = fs::File::create(&table).map_err(|e| Error::io(&table, e))?;
    report.write_csv(file)?;
    write_text(&json_path, &to_pretty(&report.deterministic_json()?)?)?;
    let manifest = RunManifest {
        command: "replicate".into(),
        config: json!({ "plan": plan, "analysis": config }),
        inputs: Vec::new(),
        validation: Vec::new(),
        outputs: vec![InputDigest::of(&table)?, InputDigest::of(&json_path)?],
        seed: plan.seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    };
    manifest.save(&out.join("manifest.json"))?;
    Ok(manifest)
}

fn emit(command: &str, output: CommandOutput, out: Option<&Path>, started: Instant) -> Result<()> {
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    let text = to_pretty(&output.value)?;
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))?;
        }
        Some(path) => {
            write_text(path, &text)?;
            RunManifest {
                command: command.into(),
                config: output.config,
                inputs: output.inputs,
                validation: output.validation,
                outputs: vec![InputDigest::of(path)?],
                seed: output.seed,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                wall_clock_secs: started.elapsed().as_secs_f64(),
            }
            .save(&manifest_path(path))?;
        }
    }
    Ok(())
}

/// Runs a parsed command.
pub fn execute(cli: Cli) -> Result<()> {
    let started = Instant::now();
    match cli.command {
        Command::Simulate { n, seed, out } => cmd_simulate(n, seed, &out).map(drop),
        Command::Bounds { revealed, stated, io, tuning } => {
            let output = cmd_bounds(&revealed, &stated, io.x, &io.schema(), &tuning.config())?;
            emit("bounds", output, io.out.as_deref(), started)
        }
        Command::Infer { revealed, stated, io, tuning, draws_out } => {
            let output = cmd_infer(&revealed, &stated, io.x, &io.schema(), &tuning.config(), draws_out.as_deref())?;
            emit("infer", output, io.out.as_deref(), started)
        }
        Command::Matched { data, io, tuning } => {
            let output = cmd_matched(&data, io.x, &io.schema(), &tuning.config())?;
            emit("matched", output, io.out.as_deref(), started)
        }
        Command::Replicate { scale, out, x, split, repetitions, tuning } => {
            let seed = tuning.seed;
            let mut plan = match scale {
                Scale::Desk => MonteCarloPlan::desk(seed),
                Scale::Full => MonteCarloPlan::full(seed),
            };
            plan.x = x;
            plan.split = split;
            if let Some(m) = repetitions {
                plan.repetitions = m;
            }
            plan.alpha = tuning.alpha;
            let config = tuning.config();
            let manifest = cmd_replicate(&plan, &config, &out)?;
            for o in &manifest.outputs {
                println!("{}", o.path.display());
            }
            Ok(())
        }
        Command::Analytic { x, grid_m, k, out } => {
            let output = cmd_analytic(x, grid_m, k)?;
            emit("analytic", output, out.as_deref(), started)
        }
    }
}

/// Exit code for a failed command.
pub fn exit_code(err: &Error) -> i32 {
    if err.is_input() || matches!(err, Error::InvalidConfig(_)) {
        EXIT_USAGE
    } else {
        EXIT_ESTIMATION
    }
}

/// Parses `args`, runs the command and returns the process exit code. Errors
/// are printed to stderr as a JSON object with `kind` and `message`.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            let report = json!({ "error": { "kind": err.kind(), "message": err.to_string() } });
            eprintln!("{report}");
            exit_code(&err)
        }
    }
}
