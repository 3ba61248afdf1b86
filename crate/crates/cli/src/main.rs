//! `rlbesov`: spline wavelets, weighted Besov norms and Riemann–Liouville
//! boundedness criteria from the command line.

mod config;
mod funcs;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

const EXIT_USAGE: u8 = 1;
const EXIT_NUMERIC: u8 = 2;
const EXIT_FAIL: u8 = 3;

const EXIT_CODES: &str = "\
Exit codes: 0 success, 1 usage or precondition error, 2 numeric failure, 3 FAIL verdict.

Any long flag can also be set in a key = value file passed with --config;
flags on the command line take precedence.";

#[derive(Parser, Debug)]
#[command(name = "rlbesov", version, about = "Spline wavelets, weighted Besov norms and Riemann–Liouville criteria", after_help = EXIT_CODES)]
pub struct Cli {
    /// key = value file with default flag values
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for the data-parallel scans (0: one per core)
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of stdout
    #[arg(long, global = true, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// B-splines and their Gram sequence
    #[command(subcommand)]
    Spline(SplineCmd),
    /// Orthonormalization constants and localized wavelets
    #[command(subcommand)]
    Wavelet(WaveletCmd),
    /// Weight masses, Muckenhoupt and doubling constants
    #[command(subcommand)]
    Weights(WeightsCmd),
    /// Riemann–Liouville operators on splines
    #[command(subcommand)]
    Rl(RlCmd),
    /// Wavelet coefficients and Besov norms
    #[command(subcommand)]
    Besov(BesovCmd),
    /// Boundedness criteria
    #[command(subcommand)]
    Criteria(CriteriaCmd),
    /// Criteria against empirical constants
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    Left,
    Right,
}

impl From<SideArg> for rlbesov::rliouville::Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Left => rlbesov::rliouville::Side::Left,
            SideArg::Right => rlbesov::rliouville::Side::Right,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum SplineCmd {
    /// Evaluate B_n (or a derivative) at points
    #[command(after_help = "CSV columns: x, value")]
    Eval(SplineEval),
    /// Gram sequence <B_n, B_n(. - k)>
    #[command(after_help = "CSV columns: offset, value")]
    Gram(SplineGram),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SplineEval {
    #[arg(long)]
    pub n: usize,
    /// Evaluation point; repeat for several
    #[arg(long, required = true)]
    pub x: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub derivative: u32,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct SplineGram {
    #[arg(long)]
    pub n: usize,
    /// Single offset; all offsets |k| ≤ n when absent
    #[arg(long)]
    pub offset: Option<i64>,
}

#[derive(Subcommand, Debug)]
pub enum WaveletCmd {
    /// Euler–Frobenius roots and orthonormalization constants
    #[command(after_help = "CSV columns: j, root, rho")]
    Constants(WaveletConstants),
    /// Localized element Ψ_{n,a,s;m(k),α(ζ)}, optionally dilated
    #[command(after_help = "CSV columns: x, value (sampled over the support)")]
    Build(WaveletBuild),
    /// Both routes to the overlap constant Θ; FAIL when they disagree
    Theta(WaveletTheta),
}

#[derive(Args, Debug)]
pub struct WaveletConstants {
    #[arg(long)]
    pub n: usize,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct WaveletBuild {
    #[arg(long)]
    pub n: usize,
    /// Origin a ∈ {0, ±1/2}
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub s: i64,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub k_flag: u8,
    #[arg(long, default_value_t = 0)]
    pub zeta_flag: u8,
    #[arg(long, default_value_t = 0)]
    pub alpha: u32,
    /// Dilation level of 2^{d/2} F(2^d x − τ)
    #[arg(long, default_value_t = 0)]
    pub d: u32,
    #[arg(long, default_value_t = 0)]
    pub tau: i64,
    /// Sample count for CSV output
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

#[derive(Args, Debug)]
pub struct WaveletTheta {
    #[arg(long)]
    pub n_star: usize,
    #[arg(long)]
    pub m_star: usize,
    /// Relative tolerance for agreement
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Subcommand, Debug)]
pub enum WeightsCmd {
    /// ∫_lo^hi w^e
    Mass(WeightsMass),
    /// Scan estimate of the Muckenhoupt A_ρ constant
    Muckenhoupt(WeightsMuckenhoupt),
    /// Empirical doubling-type constants over nested dyadic pairs
    Doubling(WeightsDoubling),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct WeightsMass {
    /// Weight descriptor, e.g. "power t=3 delta=0"
    #[arg(long)]
    pub w: String,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    #[arg(long, default_value_t = 1.0)]
    pub exponent: f64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct WeightsMuckenhoupt {
    #[arg(long)]
    pub w: String,
    #[arg(long)]
    pub rho: f64,
    /// Only intervals of length at most 1
    #[arg(long)]
    pub local: bool,
    #[arg(long, default_value_t = 0)]
    pub d_min: i32,
    #[arg(long, default_value_t = 8)]
    pub d_max: i32,
    /// Intervals with |τ| ≤ 2^d · extent are scanned at level d
    #[arg(long, default_value_t = 20.0)]
    pub extent: f64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct WeightsDoubling {
    #[arg(long)]
    pub w: String,
    #[arg(long)]
    pub rho: f64,
    #[arg(long)]
    pub rho_star: f64,
    #[arg(long, default_value_t = 20.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 0)]
    pub d_lo: i32,
    #[arg(long, default_value_t = 4)]
    pub d_hi: i32,
    /// Levels between the inner and the outer interval
    #[arg(long, default_value_t = 3)]
    pub depth: i32,
}

#[derive(Subcommand, Debug)]
pub enum RlCmd {
    /// Exact image I^α f
    #[command(after_help = "CSV columns: x, value (sampled over the image support)")]
    Apply(RlApply),
    /// Residual of the integration-by-parts identity
    Duality(RlDuality),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct RlApply {
    /// Function descriptor, e.g. "bspline n=2 shift=1"
    #[arg(long)]
    pub f: String,
    #[arg(long)]
    pub alpha: u32,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    /// Origin c of I_{c±}; the whole line when absent
    #[arg(long)]
    pub origin: Option<f64>,
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct RlDuality {
    #[arg(long)]
    pub f: String,
    /// Compact g whose derivatives below order α vanish at its ends
    #[arg(long)]
    pub g: String,
    #[arg(long)]
    pub alpha: u32,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
}

#[derive(Subcommand, Debug)]
pub enum BesovCmd {
    /// Wavelet coefficients λ_{dτ}
    #[command(after_help = "CSV columns: d, tau, value")]
    Coeffs(BesovCoeffs),
    /// Weighted Besov norm estimate with its level profile
    #[command(after_help = "CSV columns: level, value")]
    Norm(BesovNorm),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct BesovCoeffs {
    #[arg(long)]
    pub f: String,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long, default_value_t = 0)]
    pub s: i64,
    #[arg(long, default_value_t = 6)]
    pub d_max: u32,
    /// Coefficient window LO:HI on the real line
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct BesovNorm {
    #[arg(long)]
    pub f: String,
    /// Wavelet order; the smallest admissible one when absent
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub w: String,
    #[arg(long, default_value_t = 6)]
    pub d_max: u32,
    /// Known r_w; estimated by a local Muckenhoupt scan when absent
    #[arg(long)]
    pub r_w: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    /// Sum over the origins 0, ±1/2
    #[arg(long)]
    pub all_origins: bool,
    #[arg(long, value_parser = parse_window)]
    pub window: Option<(f64, f64)>,
}

#[derive(Args, Debug, Clone)]
pub struct TruncArgs {
    /// Scan |τ| up to this window
    #[arg(long)]
    pub tau_window: Option<i64>,
    /// Series cut after this many terms
    #[arg(long)]
    pub series_window: Option<i64>,
    /// Highest level of the criteria scans
    #[arg(long)]
    pub d_max: Option<u32>,
    /// Skip the re-evaluation on doubled windows
    #[arg(long)]
    pub no_stability_check: bool,
}

#[derive(Subcommand, Debug)]
pub enum CriteriaCmd {
    /// Upper criterion for I_±^α on the whole line
    FullLine(CriteriaUpper),
    /// Upper criterion for I_{c±}^α
    HalfLine(CriteriaHalf),
    /// Lower criterion (reverse inequality)
    Lower(CriteriaLower),
    /// Integral form of the 𝐌 functional
    IntegralForm(CriteriaIntegral),
    /// Homogeneity reduction and the per-level profile of 𝔐
    #[command(after_help = "CSV columns: d, factor, frak (frak empty unless both weights are given)")]
    Reduce(CriteriaReduce),
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CriteriaUpper {
    #[arg(long)]
    pub alpha: u32,
    #[arg(long)]
    pub p: f64,
    /// Weight of the target space
    #[arg(long)]
    pub u: String,
    /// Weight of the source space
    #[arg(long)]
    pub v: String,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    /// Also evaluate the earlier sufficient-condition aggregate
    #[arg(long)]
    pub previous: bool,
    #[command(flatten)]
    pub trunc: TruncArgs,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CriteriaHalf {
    #[command(flatten)]
    pub upper: CriteriaUpper,
    /// Origin c
    #[arg(long, default_value_t = 0.0)]
    pub c: f64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CriteriaLower {
    #[arg(long)]
    pub alpha: u32,
    #[arg(long)]
    pub p: f64,
    /// Weight of the image space
    #[arg(long)]
    pub u: String,
    /// Weight of the space the preimage is measured in
    #[arg(long)]
    pub w: String,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    /// Origin c; the whole line when absent
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub previous: bool,
    #[command(flatten)]
    pub trunc: TruncArgs,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CriteriaIntegral {
    #[arg(long)]
    pub theta: u32,
    /// 0 or 1
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long)]
    pub u: String,
    #[arg(long)]
    pub v: String,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub trunc: TruncArgs,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct CriteriaReduce {
    /// Homogeneity degree of the first antiderivative
    #[arg(long)]
    pub s1: f64,
    #[arg(long)]
    pub s2: f64,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub p: f64,
    /// First weight σ₁ for the 𝔐 profile
    #[arg(long)]
    pub sigma1: Option<String>,
    #[arg(long)]
    pub sigma2: Option<String>,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    #[arg(long)]
    pub c: Option<f64>,
    #[command(flatten)]
    pub trunc: TruncArgs,
}

#[derive(Subcommand, Debug)]
pub enum VerifyCmd {
    /// Upper criterion against max ‖I^α f‖/‖f‖ over a test family
    #[command(after_help = "CSV columns: index, label, norm_in, norm_out, ratio")]
    Forward(VerifyArgs),
    /// Lower criterion against max ‖f‖/‖I^α f‖ over a test family
    #[command(after_help = "CSV columns: index, label, norm_in, norm_out, ratio")]
    Reverse(VerifyArgs),
    /// The worked power-weight example on the half-line
    #[command(after_help = "CSV columns: direction, index, label, norm_in, norm_out, ratio")]
    ExampleEx1(VerifyEx1),
}

#[derive(Args, Debug, Clone)]
pub struct TolArgs {
    /// Allowed factor criterion/empirical
    #[arg(long, default_value_t = 16.0)]
    pub k_lo: f64,
    /// Allowed factor empirical/criterion
    #[arg(long, default_value_t = 16.0)]
    pub k_hi: f64,
    #[arg(long, default_value_t = 0.0)]
    pub slack: f64,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct VerifyArgs {
    #[arg(long)]
    pub alpha: u32,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    /// Origin c of I_{c±}; the whole line when absent
    #[arg(long)]
    pub origin: Option<f64>,
    #[arg(long)]
    pub p: f64,
    /// Defaults to p
    #[arg(long)]
    pub q: Option<f64>,
    /// Smoothness of the image space
    #[arg(long)]
    pub s: f64,
    /// κ* (forward) or κ_* (reverse); fixes the smoothness of the source space
    #[arg(long, default_value_t = 0.0)]
    pub kappa: f64,
    /// Weight of the image space
    #[arg(long)]
    pub w_out: String,
    /// Weight of the source space
    #[arg(long)]
    pub w_in: String,
    #[arg(long)]
    pub n_in: Option<usize>,
    #[arg(long)]
    pub n_out: Option<usize>,
    /// Highest wavelet level of the norm estimates
    #[arg(long, default_value_t = 6)]
    pub norm_d_max: u32,
    #[arg(long)]
    pub r_w: Option<f64>,
    /// Random family size
    #[arg(long, default_value_t = 50)]
    pub members: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// B-spline order of the random members (default α+1 forward, α+2 reverse)
    #[arg(long)]
    pub order: Option<usize>,
    /// Integer shift window LO:HI of the random members
    #[arg(long, value_parser = parse_int_window)]
    pub window: Option<(i64, i64)>,
    /// Differentiate random members this often (default 0 forward, α reverse)
    #[arg(long)]
    pub derivative: Option<u32>,
    /// Add the extremal f*_R members (forward only)
    #[arg(long)]
    pub extremal: bool,
    #[command(flatten)]
    pub trunc: TruncArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
pub struct VerifyEx1 {
    #[arg(long, default_value_t = 2.0)]
    pub p: f64,
    /// Defaults to p
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, default_value_t = 1)]
    pub alpha: u32,
    #[arg(long, default_value_t = 2.0)]
    pub s: f64,
    #[arg(long, default_value_t = 3.0)]
    pub t: f64,
    #[arg(long, default_value_t = 50)]
    pub members: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub norm_d_max: u32,
    #[command(flatten)]
    pub trunc: TruncArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: f64 = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let hi: f64 = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    if !(lo <= hi) {
        return Err(format!("empty window {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn parse_int_window(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s.split_once(':').ok_or("expected LO:HI")?;
    let lo: i64 = a.trim().parse().map_err(|_| format!("bad bound `{a}`"))?;
    let hi: i64 = b.trim().parse().map_err(|_| format!("bad bound `{b}`"))?;
    if lo > hi {
        return Err(format!("empty window {lo}:{hi}"));
    }
    Ok((lo, hi))
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<rlbesov::Error>() {
        Some(rlbesov::Error::Numeric(_)) => EXIT_NUMERIC,
        _ => EXIT_USAGE,
    }
}

fn real_main() -> u8 {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match config::config_path(&argv) {
        Some(p) => match config::load(&p) {
            Ok(cfg) => config::merge(&argv, &cfg),
            Err(e) => {
                eprintln!("error: {e:#}");
                return EXIT_USAGE;
            }
        },
        None => argv,
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run::run(&cli) {
        Ok(run::Verdict::Ok) => 0,
        Ok(run::Verdict::Fail) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

fn main() -> ExitCode {
    ExitCode::from(real_main())
}
