//! Command-line surface and config-file merging. Every parameter can come
//! from a JSON config file; flags win.

use std::path::PathBuf;

use blochscan_core::bloch::BasisFamily;
use blochscan_core::scanner::ScanMode;
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::output::Format;
use crate::CliError;

pub fn parse() -> Result<Cli, clap::Error> {
    Cli::try_parse()
}

#[derive(Parser, Debug)]
#[command(
    name = "blochscan",
    version,
    about = "Collective-measurement eigenstate scanner: exact layer probabilities, \
             dense-backend oracles, and the Bloch-sphere scanning protocol"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact inside/outside layer probabilities, tail bounds and fidelities
    /// over a grid of copy counts
    Prop1(Prop1Args),
    /// Run the scanning protocol over seeded trials and report axis errors
    Scan(ScanArgs),
    /// Analytic vs dense-backend equivalence suite (exit 2 on deviation)
    Oracle(OracleArgs),
    /// Window masses under shifted distributions plus the window nesting
    /// check
    Lemma1(Lemma1Args),
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// JSON config file; explicit flags override file values
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base seed for every stochastic choice in the run
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output format
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_bloch(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected x,y,z, got `{s}`"));
    }
    let mut v = [0.0; 3];
    for (slot, part) in v.iter_mut().zip(parts) {
        *slot = part
            .trim()
            .parse::<f64>()
            .map_err(|e| format!("bad component `{part}`: {e}"))?;
    }
    Ok(v)
}

fn parse_family(s: &str) -> Result<BasisFamily, String> {
    match s.to_ascii_lowercase().as_str() {
        "phi" => Ok(BasisFamily::Phi),
        "theta" => Ok(BasisFamily::Theta),
        other => Err(format!("unknown family `{other}` (phi|theta)")),
    }
}

fn parse_mode(s: &str) -> Result<ScanMode, String> {
    match s.to_ascii_lowercase().as_str() {
        "analytic" => Ok(ScanMode::AnalyticIid),
        "dense" => Ok(ScanMode::DenseExact),
        other => Err(format!("unknown mode `{other}` (analytic|dense)")),
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| e.to_string()))
        .collect()
}

#[derive(Args, Debug, Clone)]
pub struct Prop1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Layer thickness
    #[arg(long)]
    pub eps: Option<f64>,
    /// Failure budget for the required-n searches
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n_start: Option<u64>,
    #[arg(long)]
    pub n_stop: Option<u64>,
    #[arg(long)]
    pub n_step: Option<u64>,
    /// Inside-layer probe state, as x,y,z
    #[arg(long, value_parser = parse_bloch)]
    pub inside: Option<[f64; 3]>,
    /// Outside-layer probe state, as x,y,z
    #[arg(long, value_parser = parse_bloch)]
    pub outside: Option<[f64; 3]>,
    /// Basis family of the probed measurement (phi|theta)
    #[arg(long, value_parser = parse_family)]
    pub family: Option<BasisFamily>,
    /// Basis angle in radians
    #[arg(long)]
    pub angle: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct ScanArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Copies per measurement
    #[arg(long)]
    pub n: Option<u64>,
    /// analytic | dense
    #[arg(long, value_parser = parse_mode)]
    pub mode: Option<ScanMode>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Scan this fixed state (x,y,z); omit to draw a random state per trial
    #[arg(long, value_parser = parse_bloch)]
    pub bloch: Option<[f64; 3]>,
    /// Full-sweep refinement instead of first-yes stopping
    #[arg(long)]
    pub refine: Option<bool>,
    /// Dense-backend qubit cap
    #[arg(long)]
    pub dense_cap: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct OracleArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Check every copy count up to this
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Randomized (state, basis, eps) cases per copy count
    #[arg(long)]
    pub cases: Option<u64>,
    /// Maximum tolerated |analytic - dense|
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args, Debug, Clone)]
pub struct Lemma1Args {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Window center
    #[arg(long)]
    pub q: Option<f64>,
    /// Shifted distribution centers, comma separated
    #[arg(long, value_parser = parse_list)]
    pub q_primes: Option<Vec<f64>>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub n_start: Option<u64>,
    #[arg(long)]
    pub n_stop: Option<u64>,
    #[arg(long)]
    pub n_step: Option<u64>,
    /// Exhaustive nesting verification up to this n
    #[arg(long)]
    pub nesting_n_max: Option<u64>,
}

// ---------------------------------------------------------------------------
// Config file model: one JSON document with a section per subcommand.
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub format: Option<Format>,
    #[serde(default)]
    pub prop1: Prop1Section,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub lemma1: Lemma1Section,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct Prop1Section {
    pub eps: Option<f64>,
    pub delta: Option<f64>,
    pub n_start: Option<u64>,
    pub n_stop: Option<u64>,
    pub n_step: Option<u64>,
    pub inside: Option<[f64; 3]>,
    pub outside: Option<[f64; 3]>,
    pub family: Option<String>,
    pub angle: Option<f64>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub eps: Option<f64>,
    pub n: Option<u64>,
    pub mode: Option<String>,
    pub trials: Option<u64>,
    pub bloch: Option<[f64; 3]>,
    pub refine: Option<bool>,
    pub dense_cap: Option<usize>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub n_max: Option<usize>,
    pub cases: Option<u64>,
    pub tolerance: Option<f64>,
}

#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct Lemma1Section {
    pub eps: Option<f64>,
    pub q: Option<f64>,
    pub q_primes: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub n_start: Option<u64>,
    pub n_stop: Option<u64>,
    pub n_step: Option<u64>,
    pub nesting_n_max: Option<u64>,
}

pub fn load_file(common: &CommonArgs) -> Result<FileConfig, CliError> {
    match &common.config {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("bad config {}: {e}", path.display())))
        }
    }
}

// ---------------------------------------------------------------------------
// Resolved parameter sets (file values overridden by flags, then defaults).
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, serde::Serialize)]
pub struct Prop1Params {
    pub eps: f64,
    pub delta: f64,
    pub n_start: u64,
    pub n_stop: u64,
    pub n_step: u64,
    pub inside: [f64; 3],
    pub outside: [f64; 3],
    pub family: BasisFamily,
    pub angle: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ScanParams {
    pub eps: f64,
    pub n: u64,
    pub mode: ScanMode,
    pub trials: u64,
    pub bloch: Option<[f64; 3]>,
    pub refine: bool,
    pub dense_cap: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct OracleParams {
    pub n_max: usize,
    pub cases: u64,
    pub tolerance: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct Lemma1Params {
    pub eps: f64,
    pub q: f64,
    pub q_primes: Vec<f64>,
    pub delta: f64,
    pub n_start: u64,
    pub n_stop: u64,
    pub n_step: u64,
    pub nesting_n_max: u64,
}

pub struct Resolved<P> {
    pub params: P,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn require_seed(flag: Option<u64>, file: Option<u64>) -> Result<u64, CliError> {
    flag.or(file).ok_or_else(|| {
        CliError::Usage("a --seed (or config `seed`) is mandatory for stochastic runs".into())
    })
}

impl Prop1Args {
    pub fn resolve(self) -> Result<Resolved<Prop1Params>, CliError> {
        let file = load_file(&self.common)?;
        let family = match self.family {
            Some(f) => f,
            None => match &file.prop1.family {
                Some(s) => parse_family(s).map_err(CliError::Usage)?,
                None => BasisFamily::Phi,
            },
        };
        let params = Prop1Params {
            eps: pick(self.eps, file.prop1.eps, 0.2),
            delta: pick(self.delta, file.prop1.delta, 0.01),
            n_start: pick(self.n_start, file.prop1.n_start, 5),
            n_stop: pick(self.n_stop, file.prop1.n_stop, 100),
            n_step: pick(self.n_step, file.prop1.n_step, 5),
            inside: pick(self.inside, file.prop1.inside, [0.0, 0.0, 0.0]),
            outside: pick(self.outside, file.prop1.outside, [0.8, 0.0, 0.0]),
            family,
            angle: pick(self.angle, file.prop1.angle, 0.0),
        };
        Ok(Resolved {
            params,
            out: self.common.out,
            format: pick(self.common.format, file.format, Format::Csv),
        })
    }
}

impl ScanArgs {
    pub fn resolve(self) -> Result<Resolved<ScanParams>, CliError> {
        let file = load_file(&self.common)?;
        let mode = match self.mode {
            Some(m) => m,
            None => match &file.scan.mode {
                Some(s) => parse_mode(s).map_err(CliError::Usage)?,
                None => ScanMode::AnalyticIid,
            },
        };
        let params = ScanParams {
            eps: pick(self.eps, file.scan.eps, 0.3),
            n: pick(self.n, file.scan.n, 10),
            mode,
            trials: pick(self.trials, file.scan.trials, 20),
            bloch: self.bloch.or(file.scan.bloch),
            refine: pick(self.refine, file.scan.refine, true),
            dense_cap: pick(self.dense_cap, file.scan.dense_cap, 10),
            seed: require_seed(self.common.seed, file.seed)?,
        };
        Ok(Resolved {
            params,
            out: self.common.out,
            format: pick(self.common.format, file.format, Format::Csv),
        })
    }
}

impl OracleArgs {
    pub fn resolve(self) -> Result<Resolved<OracleParams>, CliError> {
        let file = load_file(&self.common)?;
        let params = OracleParams {
            n_max: pick(self.n_max, file.oracle.n_max, 8),
            cases: pick(self.cases, file.oracle.cases, 20),
            tolerance: pick(self.tolerance, file.oracle.tolerance, 1e-10),
            seed: require_seed(self.common.seed, file.seed)?,
        };
        Ok(Resolved {
            params,
            out: self.common.out,
            format: pick(self.common.format, file.format, Format::Csv),
        })
    }
}

impl Lemma1Args {
    pub fn resolve(self) -> Result<Resolved<Lemma1Params>, CliError> {
        let file = load_file(&self.common)?;
        let params = Lemma1Params {
            eps: pick(self.eps, file.lemma1.eps, 0.2),
            q: pick(self.q, file.lemma1.q, 0.5),
            q_primes: pick(
                self.q_primes,
                file.lemma1.q_primes,
                vec![0.40, 0.45, 0.50, 0.55, 0.60],
            ),
            delta: pick(self.delta, file.lemma1.delta, 0.01),
            n_start: pick(self.n_start, file.lemma1.n_start, 10),
            n_stop: pick(self.n_stop, file.lemma1.n_stop, 1000),
            n_step: pick(self.n_step, file.lemma1.n_step, 10),
            nesting_n_max: pick(self.nesting_n_max, file.lemma1.nesting_n_max, 100),
        };
        Ok(Resolved {
            params,
            out: self.common.out,
            format: pick(self.common.format, file.format, Format::Csv),
        })
    }
}
