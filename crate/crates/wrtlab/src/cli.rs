//! Command-line entry point: configuration parsing, JSONL run records, and
//! orchestration of the simulate/verify/predict/table/oracle subcommands.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/config error.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::asymptotics::{self, Centering};
use crate::degdist;
use crate::oracle;
use crate::simulate::{self, Mode};
use crate::stats::{self, DegreeCensus};
use crate::weights::{BaseLaw, WeightLaw};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("record parse error at line {line}: {message}")]
    BadRecord { line: usize, message: String },
    #[error("unsupported record schema version {0} (expected {SCHEMA_VERSION})")]
    SchemaVersion(u32),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verification(_) => 1,
            _ => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wrtlab", about = "Weighted recursive tree laboratory", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Fixed,
    RandomOut,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Fixed => Mode::FixedOne,
            ModeArg::RandomOut => Mode::RandomOut,
        }
    }
}

#[derive(Debug, Args)]
pub struct LawArg {
    /// Weight law as JSON ({"kind":"beta","alpha":2.0,"beta":3.0}) or a
    /// preset: rrt, atom-half, beta23, gamma01
    #[arg(long)]
    pub law: String,
}

impl LawArg {
    pub fn parse(&self) -> Result<WeightLaw, CliError> {
        parse_law(&self.law)
    }
}

pub fn parse_law(text: &str) -> Result<WeightLaw, CliError> {
    let law = match text {
        "rrt" => WeightLaw::constant(1.0).expect("preset"),
        "atom-half" => {
            WeightLaw::atom_mix(0.5, Some(BaseLaw::Constant { value: 0.5 })).expect("preset")
        }
        "beta23" => WeightLaw::beta(2.0, 3.0).expect("preset"),
        "gamma01" => WeightLaw::gamma_fraction(0.0, 1.0).expect("preset"),
        other => serde_json::from_str::<WeightLaw>(other)
            .map_err(|e| CliError::Config(format!("cannot parse --law: {e}")))?,
    };
    law.validate()
        .map_err(|e| CliError::Config(format!("invalid law: {e}")))?;
    Ok(law)
}

/// "iLo:iHi" with either end possibly negative, e.g. "-5:5".
pub fn parse_window(text: &str) -> Result<(i64, i64), CliError> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| CliError::Config(format!("window must be iLo:iHi, got {text:?}")))?;
    let lo: i64 = lo
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("bad window lower bound: {e}")))?;
    let hi: i64 = hi
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("bad window upper bound: {e}")))?;
    if lo > hi {
        return Err(CliError::Config(format!("empty window {lo}:{hi}")));
    }
    Ok((lo, hi))
}

fn resolve_seed(flag: Option<u64>) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("WRTLAB_SEED") {
        Ok(v) => v
            .parse()
            .map_err(|e| CliError::Config(format!("WRTLAB_SEED: {e}"))),
        Err(_) => Ok(0),
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate trees and append one census record per replicate to a JSONL file
    Simulate {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "fixed")]
        mode: ModeArg,
        /// Base RNG seed (falls back to $WRTLAB_SEED, then 0)
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        replicates: u64,
        /// Census window iLo:iHi around the floored centering
        #[arg(long, default_value = "-5:5", allow_hyphen_values = true)]
        window: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker thread count (defaults to available cores)
        #[arg(long)]
        parallel: Option<usize>,
    },
    /// Check recorded censuses against the Poisson-limit predictions
    Verify {
        /// JSONL file produced by `simulate`
        #[arg(long)]
        records: PathBuf,
        /// TV-distance tolerance for the Poisson marginal fit
        #[arg(long, default_value_t = 0.05)]
        tv_tol: f64,
        /// Optional path for the JSON report (stdout table is always printed)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit centering constants and second-order predictions as JSON
    Predict {
        #[command(flatten)]
        law: LawArg,
        #[arg(long)]
        n: u64,
    },
    /// Emit a CSV degree-tail table: quadrature, closed form, asymptotics, bounds
    Table {
        #[command(flatten)]
        law: LawArg,
        #[arg(long, default_value_t = 50)]
        k_max: u32,
        /// Bound offset xi for the (theta+xi)^{-k} lower bound
        #[arg(long, default_value_t = 0.05)]
        xi: f64,
        /// Output path; stdout when omitted
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact small-n joint degree pmf for fixed weights, as JSON
    Oracle {
        /// Comma-separated weight vector, e.g. "1,0.5,0.5"
        #[arg(long)]
        weights: String,
        /// Comma-separated target vertices (0-indexed); all when omitted
        #[arg(long)]
        targets: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub law: WeightLaw,
    pub n: usize,
    pub mode: Mode,
    pub seed: u64,
    pub replicate_index: u64,
    pub eps_n: f64,
    pub census: DegreeCensus,
    /// Random out-degree mode only
    pub edge_count: Option<usize>,
    /// Unix seconds; excluded from the determinism contract
    pub timestamp: u64,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_path_buf(), source }
}

/// Parse a JSONL record file, enforcing the schema version gate.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        // peek at the version before full deserialization so that future
        // schemas fail with a version error, not a shape error
        let head: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| CliError::BadRecord { line: idx + 1, message: e.to_string() })?;
        let version = head
            .get("schema_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| CliError::BadRecord {
                line: idx + 1,
                message: "missing schema_version".into(),
            })?;
        if version != SCHEMA_VERSION as u64 {
            return Err(CliError::SchemaVersion(version as u32));
        }
        let record: RunRecord = serde_json::from_str(&line)
            .map_err(|e| CliError::BadRecord { line: idx + 1, message: e.to_string() })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CliError::Config(format!("{}: no records", path.display())));
    }
    Ok(records)
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Runs R replicates and appends records in replicate-index order. Resumable:
/// replicate indices already present in the output file are skipped.
pub fn run_simulate(
    law: &WeightLaw,
    n: usize,
    mode: Mode,
    seed: u64,
    replicates: u64,
    window: (i64, i64),
    out: &Path,
) -> Result<usize, CliError> {
    if n == 0 {
        return Err(CliError::Config("--n must be at least 1".into()));
    }
    if replicates == 0 {
        return Err(CliError::Config("--replicates must be at least 1".into()));
    }
    let centering = asymptotics::centering_for(law)
        .map_err(|e| CliError::Config(format!("law has no centering: {e}")))?;
    let done: u64 = if out.exists() {
        read_records(out)
            .map(|rs| rs.iter().map(|r| r.replicate_index + 1).max().unwrap_or(0))
            .unwrap_or(0)
    } else {
        0
    };
    if done >= replicates {
        return Ok(0);
    }
    let eps_n = centering.eps_n(n as u64);
    let results = simulate::run_replicates_from(law, n, mode, seed, done, replicates, |tree| {
        let census = stats::census(tree, &centering, window).expect("window validated");
        let edge_count = tree.edge_count().ok();
        (census, edge_count)
    })
    .map_err(|e| CliError::Config(e.to_string()))?;
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(out)
        .map_err(io_err(out))?;
    let mut writer = BufWriter::new(file);
    let mut written = 0;
    for (offset, (census, edge_count)) in results.into_iter().enumerate() {
        let record = RunRecord {
            schema_version: SCHEMA_VERSION,
            law: law.clone(),
            n,
            mode,
            seed,
            replicate_index: done + offset as u64,
            eps_n,
            census,
            edge_count,
            timestamp: unix_now(),
        };
        serde_json::to_writer(&mut writer, &record).map_err(|e| CliError::Config(e.to_string()))?;
        writer.write_all(b"\n").map_err(io_err(out))?;
        written += 1;
    }
    writer.flush().map_err(io_err(out))?;
    Ok(written)
}

#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub name: String,
    pub statistic: f64,
    pub prediction: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub records: usize,
    pub claims: Vec<Claim>,
    pub all_pass: bool,
}

/// Compares recorded censuses with the first-moment, max-tail, and Poisson
/// marginal predictions for the recorded law.
pub fn run_verify(records: &[RunRecord], tv_tol: f64) -> Result<VerifyReport, CliError> {
    let first = &records[0];
    let law = &first.law;
    let n = first.n;
    let r = records.len() as f64;
    let centering: Centering = asymptotics::centering_for(law)
        .map_err(|e| CliError::Config(format!("law has no centering: {e}")))?;
    let mut claims = Vec::new();

    let mean_and_se = |values: &mut dyn Iterator<Item = f64>| -> (f64, f64) {
        let (mut sum, mut sumsq, mut count) = (0.0, 0.0, 0.0);
        for v in values {
            sum += v;
            sumsq += v * v;
            count += 1.0;
        }
        let mean = sum / count;
        let var = (sumsq / count - mean * mean).max(0.0) * count / (count - 1.0);
        (mean, (var / count).sqrt())
    };

    for i in 0..=2i64 {
        if i < first.census.i_lo || i > first.census.i_hi {
            claims.push(Claim {
                name: format!("mean X_{i}: no data in window"),
                statistic: f64::NAN,
                prediction: f64::NAN,
                tolerance: 0.0,
                pass: false,
            });
            continue;
        }
        let (pred_xi, pred_geq) = asymptotics::bucket_means(&centering, n as u64, i);
        let (mean, se) = mean_and_se(&mut records.iter().map(|rec| {
            rec.census.xi(i).expect("window checked") as f64
        }));
        claims.push(Claim {
            name: format!("mean X_{i} vs Poisson intensity"),
            statistic: mean,
            prediction: pred_xi,
            tolerance: 3.0 * se,
            pass: (mean - pred_xi).abs() <= 3.0 * se,
        });
        let (mean_g, se_g) = mean_and_se(&mut records.iter().map(|rec| {
            rec.census.x_geq(i).expect("window checked") as f64
        }));
        claims.push(Claim {
            name: format!("mean X_>={i} vs Poisson intensity"),
            statistic: mean_g,
            prediction: pred_geq,
            tolerance: 3.0 * se_g,
            pass: (mean_g - pred_geq).abs() <= 3.0 * se_g,
        });
    }

    for i in 1..=3i64 {
        let pred = asymptotics::max_tail_prediction(&centering, n as u64, i, 0.0);
        let hits = records
            .iter()
            .filter(|rec| rec.census.max_degree as i64 >= rec.census.floor_center + i)
            .count() as f64;
        let emp = hits / r;
        let se = (pred * (1.0 - pred) / r).sqrt().max(1.0 / r);
        claims.push(Claim {
            name: format!("max-degree tail at offset {i}"),
            statistic: emp,
            prediction: pred,
            tolerance: 3.0 * se,
            pass: (emp - pred).abs() <= 3.0 * se,
        });
    }

    if first.census.i_lo <= 2 && first.census.i_hi >= 2 && records.len() >= 500 {
        let (mean_x2, _) = asymptotics::bucket_means(&centering, n as u64, 2);
        let samples: Vec<u64> = records
            .iter()
            .map(|rec| rec.census.xi(2).expect("window checked"))
            .collect();
        match stats::poisson_fit(&samples, mean_x2) {
            Ok(fit) => claims.push(Claim {
                name: "X_2 Poisson marginal TV distance".into(),
                statistic: fit.tv_distance,
                prediction: 0.0,
                tolerance: tv_tol,
                pass: fit.tv_distance <= tv_tol,
            }),
            Err(e) => claims.push(Claim {
                name: format!("X_2 Poisson fit unavailable: {e}"),
                statistic: f64::NAN,
                prediction: f64::NAN,
                tolerance: tv_tol,
                pass: false,
            }),
        }
    }

    let all_pass = claims.iter().all(|c| c.pass);
    Ok(VerifyReport { records: records.len(), claims, all_pass })
}

pub fn predict_json(law: &WeightLaw, n: u64) -> Result<serde_json::Value, CliError> {
    let centering = asymptotics::centering_for(law)
        .map_err(|e| CliError::Config(format!("law has no centering: {e}")))?;
    let second_order = asymptotics::second_order_prediction(law).ok();
    let mut constants = serde_json::Map::new();
    match law {
        WeightLaw::Beta { alpha, beta } => {
            constants.insert(
                "c_alpha_beta_theta".into(),
                json!(asymptotics::beta_intensity_const(*alpha, *beta, centering.theta)),
            );
        }
        WeightLaw::GammaFraction { b, c1 } => {
            constants.insert(
                "big_c_theta_1_c1".into(),
                json!(asymptotics::big_c(centering.theta, 1.0, *c1)),
            );
            constants.insert(
                "c_c1_b_theta".into(),
                json!(asymptotics::gamma_fraction_intensity_const(*b, *c1, centering.theta)),
            );
        }
        _ => {}
    }
    Ok(json!({
        "case": centering.case_tag,
        "theta": centering.theta,
        "centering_terms": { "n": n, "c_of_n": centering.c_of_n(n), "floor": centering.c_of_n(n).floor() },
        "eps_n": centering.eps_n(n),
        "intensity_const": centering.intensity_const,
        "second_order_limit": second_order,
        "constants": constants,
    }))
}

pub fn table_csv(law: &WeightLaw, k_max: u32, xi: f64) -> String {
    let mut out = String::from("k,pk_quadrature,pk_closed,pk_asymptotic,lower_bound,upper_bound\n");
    for k in 0..=k_max {
        let q = degdist::pk_quadrature(law, k);
        let closed = match law {
            WeightLaw::Beta { alpha, beta } => degdist::pk_beta_closed_form(*alpha, *beta, k)
                .map(|v| format!("{v:.12e}"))
                .unwrap_or_default(),
            _ => String::new(),
        };
        let asym = degdist::pk_asymptotic(law, k)
            .map(|v| format!("{v:.12e}"))
            .unwrap_or_default();
        let (lo, hi) = degdist::pk_bounds(law, k, xi);
        out.push_str(&format!("{k},{q:.12e},{closed},{asym},{lo:.12e},{hi:.12e}\n"));
    }
    out
}

pub fn oracle_json(weights: &[f64], targets: &[usize]) -> Result<serde_json::Value, CliError> {
    let pmf = oracle::enumerate_exact(weights, targets)
        .map_err(|e| CliError::Config(e.to_string()))?;
    // deterministic ordering for golden files
    let mut rows: Vec<(Vec<u32>, f64)> = pmf.table.iter().map(|(k, &v)| (k.clone(), v)).collect();
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let table: Vec<serde_json::Value> = rows
        .into_iter()
        .map(|(degs, p)| json!({ "degrees": degs, "probability": p }))
        .collect();
    Ok(json!({
        "targets": targets,
        "total_mass": pmf.total_mass(),
        "table": table,
    }))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(io_err(path)),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn parse_csv_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| CliError::Config(format!("bad {what} entry {s:?}: {e}")))
        })
        .collect()
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { law, n, mode, seed, replicates, window, out, parallel } => {
            if let Some(threads) = parallel {
                // ignore the error if a global pool already exists
                let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
            }
            let law = law.parse()?;
            let window = parse_window(&window)?;
            let seed = resolve_seed(seed)?;
            let written =
                run_simulate(&law, n, mode.into(), seed, replicates, window, &out)?;
            eprintln!("wrote {written} record(s) to {}", out.display());
            Ok(())
        }
        Command::Verify { records, tv_tol, out } => {
            let records = read_records(&records)?;
            let report = run_verify(&records, tv_tol)?;
            println!(
                "{:<42} {:>12} {:>12} {:>10}  result",
                "claim", "statistic", "prediction", "tol"
            );
            for c in &report.claims {
                println!(
                    "{:<42} {:>12.5} {:>12.5} {:>10.5}  {}",
                    c.name,
                    c.statistic,
                    c.prediction,
                    c.tolerance,
                    if c.pass { "pass" } else { "FAIL" }
                );
            }
            if let Some(path) = out {
                let text = serde_json::to_string_pretty(&report)
                    .map_err(|e| CliError::Config(e.to_string()))?;
                std::fs::write(&path, text).map_err(io_err(&path))?;
            }
            if report.all_pass {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "{} of {} claims failed",
                    report.claims.iter().filter(|c| !c.pass).count(),
                    report.claims.len()
                )))
            }
        }
        Command::Predict { law, n } => {
            let law = law.parse()?;
            let value = predict_json(&law, n)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&value).map_err(|e| CliError::Config(e.to_string()))?
            );
            Ok(())
        }
        Command::Table { law, k_max, xi, out } => {
            let law = law.parse()?;
            emit(&table_csv(&law, k_max, xi), out.as_deref())
        }
        Command::Oracle { weights, targets, out } => {
            let weights: Vec<f64> = parse_csv_list(&weights, "weight")?;
            let targets: Vec<usize> = match targets {
                Some(t) => parse_csv_list(&t, "target")?,
                None => (0..weights.len()).collect(),
            };
            let value = oracle_json(&weights, &targets)?;
            let text = serde_json::to_string_pretty(&value)
                .map_err(|e| CliError::Config(e.to_string()))?;
            emit(&text, out.as_deref())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_parsing() {
        assert_eq!(parse_window("-5:5").unwrap(), (-5, 5));
        assert_eq!(parse_window("0:0").unwrap(), (0, 0));
        assert!(parse_window("3:-3").is_err());
        assert!(parse_window("junk").is_err());
    }

    #[test]
    fn law_presets_and_json() {
        assert_eq!(parse_law("rrt").unwrap(), WeightLaw::constant(1.0).unwrap());
        let beta = parse_law(r#"{"kind":"beta","alpha":2.0,"beta":3.0}"#).unwrap();
        assert_eq!(beta, WeightLaw::beta(2.0, 3.0).unwrap());
        assert!(parse_law(r#"{"kind":"beta","alpha":-1.0,"beta":3.0}"#).is_err());
        assert!(parse_law("no-such-preset").is_err());
    }

    #[test]
    fn predict_beta_second_order() {
        let law = WeightLaw::beta(2.0, 3.0).unwrap();
        let v = predict_json(&law, 1_000_000).unwrap();
        assert_eq!(v["second_order_limit"], json!(-3.0));
        assert!(v["constants"]["c_alpha_beta_theta"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn predict_gamma_constants_present() {
        let law = WeightLaw::gamma_fraction(0.0, 1.0).unwrap();
        let v = predict_json(&law, 1000).unwrap();
        assert!(v["constants"]["big_c_theta_1_c1"].as_f64().unwrap() > 0.0);
        assert!(v["constants"]["c_c1_b_theta"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn table_constant_one() {
        let law = WeightLaw::constant(1.0).unwrap();
        let csv = table_csv(&law, 10, 0.05);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 12);
        for (k, line) in lines[1..].iter().enumerate() {
            let pk: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert!((pk - 0.5f64.powi(k as i32 + 1)).abs() < 1e-12);
        }
    }
}
