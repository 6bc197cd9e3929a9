mod commands;
mod report;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "pitman-lab", version, about = "Exact verification and simulation of the generalized 2M-S representation")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    out: Format,

    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact and numerical checks of the identities.
    #[command(subcommand)]
    Verify(Verify),
    /// Preimage of a path under T.
    Preimage(PreimageArgs),
    /// Exact path laws and level laws.
    #[command(subcommand)]
    Law(Law),
    /// The rho = 1 - v/sqrt(N) regime.
    #[command(subcommand)]
    Scaling(Scaling),
    /// Monte Carlo samples.
    #[command(subcommand)]
    Sample(Sample),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WalkArgs {
    /// Drift parameter rho > 0, as "a/b" or "a".
    #[arg(long)]
    pub rho: String,
    /// Weight sigma >= 0 of the flat step.
    #[arg(long, default_value = "0")]
    pub sigma: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct McArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    /// Independent random streams; the output depends on this, not on --jobs.
    #[arg(long, default_value_t = 16)]
    pub streams: usize,
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Representation theorem: chain law against the pushforward.
    Thm1(Thm1Args),
    /// Conditioning on a random level.
    Thm2(Thm2Args),
    /// The pushforwards with (S, G) and (-S, G~) coincide.
    TwoSided(TwoSidedArgs),
    /// Tropical identities for the transforms.
    Tropical(TropicalArgs),
    /// Factorization of the damage model.
    Damage(DamageArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Thm1Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t: usize,
    /// Initial law, e.g. point:2, finite:0=1/3,2=2/3, geo:1/3, qnb:q=1/4,theta=1/2, nb:rho0=1/2, spoisson:1.
    #[arg(long)]
    pub initial: String,
    #[arg(long, default_value = "I")]
    pub part: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Thm2Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub base: Thm1Args,
    /// Extra steps of the finite-horizon oracle beyond t.
    #[arg(long, default_value_t = 200)]
    pub extra: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TwoSidedArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub initial: String,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TropicalArgs {
    /// Check a single path; otherwise every path up to --t is checked.
    #[arg(long)]
    pub path: Option<String>,
    #[arg(long, default_value_t = 0)]
    pub g1: i64,
    #[arg(long, default_value_t = 0)]
    pub g2: i64,
    /// Exhaustive horizon (all paths with flat steps, 0 <= g1, g2 <= t + 1).
    #[arg(long, default_value_t = 6)]
    pub t: usize,
    /// Additional random paths.
    #[arg(long, default_value_t = 0)]
    pub random: usize,
    #[arg(long, default_value_t = 50)]
    pub random_t: usize,
    #[arg(long, default_value_t = 10)]
    pub g_max: i64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DamageArgs {
    #[arg(long)]
    pub q: String,
    #[arg(long)]
    pub theta: String,
    #[arg(long, default_value_t = 60)]
    pub support: u64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PreimageArgs {
    /// Path values, e.g. 0,1,0,-1.
    #[arg(long, allow_hyphen_values = true)]
    pub path: String,
}

#[derive(Subcommand, Debug)]
enum Law {
    /// Law of the chain increments X_u - X_0, u <= t.
    Chain(ChainLawArgs),
    /// Law of the walk S.
    Walk(WalkLawArgs),
    /// Law of 2(M - G)+ - S.
    Rhs(RhsArgs),
    /// The level laws G, G~ and V.
    Level(LevelArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RouteArg {
    Formula,
    Product,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ChainLawArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub initial: String,
    #[arg(long, value_enum, default_value_t = RouteArg::Formula)]
    pub route: RouteArg,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WalkLawArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct RhsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t: usize,
    /// Level law: point:3, geo:1/4 or pmf:1/2,1/4,1/4.
    #[arg(long, conflicts_with = "initial")]
    pub level: Option<String>,
    /// Build the level from an initial law instead (G for part I, G~ with -S for part II).
    #[arg(long)]
    pub initial: Option<String>,
    #[arg(long, default_value = "I")]
    pub part: String,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WhichLevel {
    G,
    Gtilde,
    V,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LevelArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub initial: String,
    #[arg(long, value_enum, default_value_t = WhichLevel::G)]
    pub which: WhichLevel,
    /// Part used for V.
    #[arg(long, default_value = "I")]
    pub part: String,
    /// Largest n listed.
    #[arg(long, default_value_t = 20)]
    pub max: u64,
}

#[derive(Subcommand, Debug)]
enum Scaling {
    /// Distance between the level CDF at finite N and its limit.
    Continuity(ContinuityArgs),
    /// Local limit of the chain transition probabilities.
    Kernel(KernelArgs),
    /// Chain marginal against the Brownian limit.
    Donsker(DonskerArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScaledArgs {
    #[arg(long = "N")]
    pub n: u64,
    #[arg(long, allow_hyphen_values = true)]
    pub v: f64,
    /// Limit measure: point:1, point:inf, exp:0.7, hypoexp:1.3,0.7, mix:0.5*point:1+0.5*exp:2.
    #[arg(long)]
    pub mu: String,
    /// Exponent a of X0 = floor(N^a) when mu = point:inf.
    #[arg(long, default_value_t = 0.6)]
    pub exponent: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ContinuityArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scaled: ScaledArgs,
    #[arg(long, default_value = "0")]
    pub sigma: String,
    /// start:stop:step
    #[arg(long, default_value = "0.1:3.0:0.1")]
    pub grid: String,
    #[arg(long, default_value_t = 0.02)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct KernelArgs {
    /// Comma-separated list of N.
    #[arg(long = "N", value_delimiter = ',', default_value = "100,10000")]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long)]
    pub x: f64,
    #[arg(long)]
    pub y: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub v: f64,
    /// Relative error allowed at the largest N.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DonskerArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub scaled: ScaledArgs,
    #[arg(long, default_value = "1")]
    pub sigma: String,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Euler steps per unit time; several values form a refinement ladder.
    #[arg(long, value_delimiter = ',', default_value = "4096")]
    pub steps: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Compare raw lattice increments without the continuity correction.
    #[arg(long)]
    pub no_smooth: bool,
    /// Also compare the limit marginals for v and -v.
    #[arg(long)]
    pub invariance: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
}

#[derive(Subcommand, Debug)]
enum Sample {
    /// Paths of the walk S.
    Walk(SampleWalkArgs),
    /// Paths of the chain X.
    Chain(SampleChainArgs),
    /// Marginal of the limit process 2(sup B - gamma)+ - B at time t.
    LimitProcess(SampleLimitArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleWalkArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleChainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t: usize,
    #[arg(long)]
    pub initial: String,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SampleLimitArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub v: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long)]
    pub mu: String,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 4096)]
    pub steps: usize,
    #[command(flatten)]
    #[serde(flatten)]
    pub mc: McArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start {jobs} workers: {e}");
            return ExitCode::from(2);
        }
    }
    let outcome = match &cli.command {
        Command::Verify(v) => match v {
            Verify::Thm1(a) => commands::verify_thm1(a),
            Verify::Thm2(a) => commands::verify_thm2(a),
            Verify::TwoSided(a) => commands::verify_two_sided(a),
            Verify::Tropical(a) => commands::verify_tropical(a),
            Verify::Damage(a) => commands::verify_damage(a),
        },
        Command::Preimage(a) => commands::preimage(a),
        Command::Law(l) => match l {
            Law::Chain(a) => commands::law_chain(a),
            Law::Walk(a) => commands::law_walk(a),
            Law::Rhs(a) => commands::law_rhs(a),
            Law::Level(a) => commands::law_level(a),
        },
        Command::Scaling(s) => match s {
            Scaling::Continuity(a) => commands::scaling_continuity(a),
            Scaling::Kernel(a) => commands::scaling_kernel(a),
            Scaling::Donsker(a) => commands::scaling_donsker(a),
        },
        Command::Sample(s) => match s {
            Sample::Walk(a) => commands::sample_walk(a),
            Sample::Chain(a) => commands::sample_chain(a),
            Sample::LimitProcess(a) => commands::sample_limit(a),
        },
    };
    match outcome {
        Ok(report) => match report.emit(cli.out, &mut std::io::stdout().lock()) {
            Ok(()) if report.passed => ExitCode::SUCCESS,
            Ok(()) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: cannot write report: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
