use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use modspace::{parse_rational, ExtendedExponent, Rational};

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn exponent(s: &str) -> Result<ExtendedExponent, String> {
    s.parse().map_err(|e: modspace::Error| e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "modspace", version, about = "Norms, verdicts and experiments for weighted modulation spaces M^s_{p,q}")]
#[command(args_override_self = true)]
pub struct Cli {
    /// key=value file; any flag given on the command line wins
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Modulation space norm of a named family or a sample table
    Norm(NormArgs),
    /// Does M^{s0}_{p0,q0} embed into M^{s1}_{p1,q1}?
    Embed(EmbedArgs),
    /// Is M^s_{p,q} closed under pointwise multiplication?
    Algebra(AlgebraArgs),
    /// Does M^{s1}_{p1,q1} · M^{s2}_{p2,q2} map into M^{s0}_{p0,q0}?
    Product(ProductArgs),
    /// Run an experiment sweep
    Sweep(Box<SweepArgs>),
    /// Check the STFT product identity or the subset product identity
    Identity(IdentityArgs),
    /// Aggregate sweep reports into CSV or JSON
    Report(ReportArgs),
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Space {
    #[arg(long, value_parser = rational, default_value = "0", allow_hyphen_values = true)]
    pub s: Rational,
    #[arg(long, value_parser = exponent, default_value = "2")]
    pub p: ExtendedExponent,
    #[arg(long, value_parser = exponent, default_value = "2")]
    pub q: ExtendedExponent,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Decomp,
    Stft,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["family", "input"])))]
pub struct NormArgs {
    /// family spec, e.g. "power q=2 N=256"
    #[arg(long)]
    pub family: Option<String>,
    /// sample table with a JSON header line
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub space: Space,
    #[arg(long, value_enum, default_value_t = Method::Decomp)]
    pub method: Method,
    /// cutoff N when the family spec gives none
    #[arg(long, default_value_t = 16)]
    pub cutoff: usize,
    /// period multiplier M for family grids
    #[arg(long, default_value_t = 32)]
    pub m: usize,
    /// bandwidth of ψ for family grids
    #[arg(long, default_value_t = 0.2)]
    pub eps: f64,
    /// bank radius (default: family radius + 2, or the largest the grid allows)
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    pub window_width: f64,
    #[arg(long, default_value_t = modspace::norm::DEFAULT_TAIL_TOLERANCE)]
    pub tail_tolerance: f64,
    /// include per-piece contributions in the report
    #[arg(long)]
    pub contributions: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expect {
    Holds,
    Fails,
    Unknown,
}

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    pub s0: Rational,
    #[arg(long, value_parser = exponent)]
    pub p0: ExtendedExponent,
    #[arg(long, value_parser = exponent)]
    pub q0: ExtendedExponent,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    pub s1: Rational,
    #[arg(long, value_parser = exponent)]
    pub p1: ExtendedExponent,
    #[arg(long, value_parser = exponent)]
    pub q1: ExtendedExponent,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// exit 1 unless the verdict has this status
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
}

#[derive(Args, Debug)]
pub struct AlgebraArgs {
    #[command(flatten)]
    pub space: Space,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
}

#[derive(Args, Debug)]
pub struct ProductArgs {
    /// target smoothness
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    pub s0: Rational,
    #[arg(long, value_parser = exponent)]
    pub p0: ExtendedExponent,
    #[arg(long, value_parser = exponent)]
    pub q0: ExtendedExponent,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    pub s1: Rational,
    #[arg(long, value_parser = exponent)]
    pub p1: ExtendedExponent,
    #[arg(long, value_parser = exponent)]
    pub q1: ExtendedExponent,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    pub s2: Rational,
    #[arg(long, value_parser = exponent)]
    pub p2: ExtendedExponent,
    #[arg(long, value_parser = exponent)]
    pub q2: ExtendedExponent,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Oracle,
    Counterexample,
    NormEquivalence,
    Sobolev,
    Nikolskij,
    Delta,
    Sector,
    ExpGrowth,
    PowerGrowth,
    Bilinear,
    ProductLimit,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(value_enum)]
    pub experiment: Experiment,
    /// family spec (counterexample, product-limit first factor)
    #[arg(long)]
    pub family: Option<String>,
    /// second factor for product-limit
    #[arg(long)]
    pub family2: Option<String>,
    #[arg(long, value_parser = rational, allow_hyphen_values = true)]
    pub s: Option<Rational>,
    #[arg(long, value_parser = exponent)]
    pub p: Option<ExtendedExponent>,
    #[arg(long, value_parser = exponent)]
    pub q: Option<ExtendedExponent>,
    /// Hölder pair for product-limit
    #[arg(long, value_parser = exponent)]
    pub p1: Option<ExtendedExponent>,
    #[arg(long, value_parser = exponent)]
    pub p2: Option<ExtendedExponent>,
    #[arg(long, default_value_t = 1)]
    pub n: usize,
    /// comma list of cutoffs N
    #[arg(long)]
    pub cutoffs: Option<String>,
    /// comma list of radii (sector R, Nikol'skij r)
    #[arg(long)]
    pub radii: Option<String>,
    #[arg(long)]
    pub lambdas: Option<String>,
    #[arg(long)]
    pub powers: Option<String>,
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub widths: Option<String>,
    /// comma lists for the oracle sweep
    #[arg(long, allow_hyphen_values = true)]
    pub s_list: Option<String>,
    #[arg(long)]
    pub p_list: Option<String>,
    #[arg(long)]
    pub q_list: Option<String>,
    /// sign pattern of the sector (0 or 1)
    #[arg(long, default_value_t = 0)]
    pub sector: u8,
    /// amplitude of the test function in exp-growth and power-growth
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long)]
    pub window_width: Option<f64>,
    /// write the report JSON here instead of stdout
    #[arg(long, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// also write the records as CSV
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
    /// keep wall-clock durations in the records
    #[arg(long)]
    pub timings: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdentityKind {
    /// STFT of a product against the convolution of STFTs
    Toft,
    /// Π a_i - 1 against the sum over subsets of Π (a_j - 1)
    Subset,
}

#[derive(Args, Debug)]
pub struct IdentityArgs {
    #[arg(value_enum)]
    pub kind: IdentityKind,
    /// comma list of complex numbers, e.g. "1+2i,0.5,-1i"
    #[arg(long, allow_hyphen_values = true)]
    pub values: Option<String>,
    #[arg(long, value_name = "FILE")]
    pub f: Option<PathBuf>,
    #[arg(long, value_name = "FILE")]
    pub g: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub window_width: f64,
    #[arg(long, default_value_t = 8)]
    pub stride: usize,
    /// residual bound (default 1e-3 for toft, 1e-12 for subset)
    #[arg(long)]
    pub threshold: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// sweep report or record files (JSON)
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// exit 1 if any aggregated report failed
    #[arg(long)]
    pub strict: bool,
}
