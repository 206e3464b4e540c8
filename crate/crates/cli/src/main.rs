use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use sfv::design::{generate_dataset, load_design_csv, load_response_csv, Correlation, DesignSpec, SignalSpec};
use sfv::diagram::{double_ranking, least_squares_tstats};
use sfv::harness::{self, csvio, preset, svg, ExperimentConfig, Preset};
use sfv::nalgebra::{DMatrix, DVector};
use sfv::predict::predicted_rank;
use sfv::rankstat::first_spurious_rank;
use sfv::seqpath::{run_path, EventKind, Method};

#[derive(Parser)]
#[command(name = "sfv", version, about = "Rank of the first spurious variable along sparse regression paths")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a design, coefficients and response and write them as CSV
    Generate(GenerateArgs),
    /// Print the event trace of a path engine
    Path(PathArgs),
    /// Print the rank of the first noise variable for each method
    Rank(RankArgs),
    /// Print predicted first-spurious ranks
    Predict(PredictArgs),
    /// Print the double-ranking table
    Diagram(DiagramArgs),
    /// Run a Monte Carlo experiment
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Gaussian,
    Bernoulli,
    Equi,
    Decaying,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// Number of nonzero coefficients
    #[arg(long)]
    k: usize,
    /// Value of every nonzero coefficient
    #[arg(long = "magnitude", allow_negative_numbers = true)]
    magnitude: f64,
    /// Noise standard deviation
    #[arg(long)]
    sigma: f64,
    #[arg(long, value_enum, default_value = "gaussian")]
    family: FamilyArg,
    /// Correlation parameter for the equi and decaying families
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    /// Per-entry variance (default 1/n)
    #[arg(long)]
    scale: Option<f64>,
    /// Place the nonzero coefficients on random columns
    #[arg(long)]
    shuffle_support: bool,
    #[arg(long)]
    seed: u64,
    /// Output directory for X.csv, beta.csv and y.csv
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InputArgs {
    /// Design matrix CSV
    #[arg(long)]
    design: PathBuf,
    /// Response CSV (one column or one row)
    #[arg(long)]
    response: PathBuf,
    /// Center and scale design columns to unit norm
    #[arg(long)]
    standardize: bool,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SupportArgs {
    /// True coefficients CSV; the support is its nonzero entries
    #[arg(long)]
    beta: Option<PathBuf>,
    /// Comma-separated 0-based support indices
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    support: Option<Vec<usize>>,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    input: InputArgs,
    /// Step budget (default: the method's own)
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args)]
struct RankArgs {
    /// Comma-separated methods (default all)
    #[arg(long, value_delimiter = ',')]
    method: Vec<Method>,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    support: SupportArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: usize,
    /// Comma-separated sparsities
    #[arg(long, value_delimiter = ',', required = true)]
    k: Vec<usize>,
    /// Decimals for the cutoff and predicted rank
    #[arg(long, default_value_t = 1)]
    digits: usize,
}

#[derive(Args)]
struct DiagramArgs {
    #[arg(long)]
    method: Method,
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    support: SupportArgs,
    /// Also write the diagram as SVG
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// JSON experiment configuration
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fraction of the published problem size, in (0, 1]
    #[arg(long, conflicts_with = "config")]
    scale: Option<f64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long, required_unless_present = "config")]
    seed: Option<u64>,
    /// Comma-separated methods (default: the preset's or the file's)
    #[arg(long, value_delimiter = ',')]
    methods: Vec<Method>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

enum Failure {
    /// Invalid option values, exit status 2.
    Usage(String),
    /// Errors during computation or I/O, exit status 1.
    Runtime(String),
}

impl From<sfv::Error> for Failure {
    fn from(e: sfv::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn usage<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Path(a) => path(a),
        Command::Rank(a) => rank(a),
        Command::Predict(a) => predict(a),
        Command::Diagram(a) => diagram(a),
        Command::Simulate(a) => simulate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn generate(a: GenerateArgs) -> Outcome {
    let mut design = match (a.family, a.rho) {
        (FamilyArg::Gaussian, None) => DesignSpec::gaussian(a.n, a.p),
        (FamilyArg::Bernoulli, None) => DesignSpec::bernoulli(a.n, a.p),
        (FamilyArg::Equi, Some(rho)) => DesignSpec::correlated(a.n, a.p, Correlation::Equi(rho)),
        (FamilyArg::Decaying, Some(rho)) => DesignSpec::correlated(a.n, a.p, Correlation::Decaying(rho)),
        (FamilyArg::Equi | FamilyArg::Decaying, None) => {
            return Err(usage("--rho is required for the equi and decaying families"))
        }
        (_, Some(_)) => return Err(usage("--rho only applies to the equi and decaying families")),
    };
    design.scale = a.scale;
    design.validate().map_err(usage)?;
    let mut signal = SignalSpec::uniform(a.p, a.k, a.magnitude, a.sigma);
    signal.shuffle_support = a.shuffle_support;
    signal.validate().map_err(usage)?;

    let data = generate_dataset(&design, &signal, a.seed)?;
    std::fs::create_dir_all(&a.out)?;
    csvio::save_matrix_csv(data.x(), a.out.join("X.csv"))?;
    csvio::save_vector_csv(data.beta(), a.out.join("beta.csv"))?;
    csvio::save_vector_csv(data.y(), a.out.join("y.csv"))?;
    Ok(())
}

fn load_inputs(input: &InputArgs) -> Result<(DMatrix<f64>, DVector<f64>), Failure> {
    let x = load_design_csv(&input.design, input.standardize)?;
    let y = load_response_csv(&input.response)?;
    if x.nrows() != y.len() {
        return Err(usage(format!(
            "the design has {} rows but the response has {} entries",
            x.nrows(),
            y.len()
        )));
    }
    Ok((x, y))
}

fn load_support(s: &SupportArgs, p: usize) -> Result<Vec<usize>, Failure> {
    let support = match (&s.beta, &s.support) {
        (Some(path), _) => {
            let beta = load_response_csv(path)?;
            if beta.len() != p {
                return Err(usage(format!("beta has {} entries but the design has {p} columns", beta.len())));
            }
            (0..p).filter(|&j| beta[j] != 0.0).collect()
        }
        (None, Some(list)) => {
            let mut list = list.clone();
            list.sort_unstable();
            list.dedup();
            if let Some(&j) = list.iter().find(|&&j| j >= p) {
                return Err(usage(format!("support index {j} is out of range for p = {p}")));
            }
            list
        }
        (None, None) => Vec::new(),
    };
    Ok(support)
}

fn stdout_lock() -> std::io::BufWriter<std::io::StdoutLock<'static>> {
    std::io::BufWriter::new(std::io::stdout().lock())
}

fn path(a: PathArgs) -> Outcome {
    if a.max_steps == Some(0) {
        return Err(usage("--max-steps must be at least 1"));
    }
    let (x, y) = load_inputs(&a.input)?;
    if a.method == Method::ForwardStepwise {
        if let Some(m) = a.max_steps {
            let cap = x.nrows().min(x.ncols());
            if m > cap {
                return Err(usage(format!("forward stepwise takes at most min(n, p) = {cap} steps")));
            }
        }
    }
    let trace = run_path(a.method, &x, &y, a.max_steps, &|_| false)?;
    let mut out = stdout_lock();
    csvio::write_trace_csv(&trace, &mut out)?;
    out.flush()?;
    Ok(())
}

fn rank(a: RankArgs) -> Outcome {
    let (x, y) = load_inputs(&a.input)?;
    let support = load_support(&a.support, x.ncols())?;
    let methods = if a.method.is_empty() { Method::ALL.to_vec() } else { a.method };
    let mut signal = vec![false; x.ncols()];
    for &j in &support {
        signal[j] = true;
    }
    let stop = |e: &sfv::seqpath::PathEvent| e.kind == EventKind::Enter && !signal[e.variable];
    let mut out = stdout_lock();
    writeln!(out, "method,T,first_noise_variable,signals_before,drops_before_first_noise")?;
    for method in methods {
        let trace = run_path(method, &x, &y, None, &stop)?;
        let r = first_spurious_rank(&trace, &support);
        let opt = |v: Option<usize>| v.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            method.name(),
            opt(r.rank),
            opt(r.first_noise_variable),
            r.signals_before,
            r.drops_before_first_noise
        )?;
    }
    out.flush()?;
    Ok(())
}

fn predict(a: PredictArgs) -> Outcome {
    if a.n == 0 || a.p < 2 {
        return Err(usage(format!("prediction needs n >= 1 and p >= 2 (got n = {}, p = {})", a.n, a.p)));
    }
    if let Some(k) = a.k.iter().find(|&&k| k == 0) {
        return Err(usage(format!("every k must be at least 1 (got {k})")));
    }
    let d = a.digits;
    let mut out = stdout_lock();
    writeln!(out, "k,cutoff,regime,predicted_rank,predicted_log_rank")?;
    for &k in &a.k {
        let pred = predicted_rank(a.n, a.p, k)?;
        writeln!(
            out,
            "{},{:.d$},{},{:.d$},{}",
            k,
            pred.cutoff,
            pred.regime.name(),
            pred.rank,
            pred.log_rank
        )?;
    }
    out.flush()?;
    Ok(())
}

fn diagram(a: DiagramArgs) -> Outcome {
    let (x, y) = load_inputs(&a.input)?;
    if x.nrows() <= x.ncols() {
        return Err(usage(sfv::Error::NotOverdetermined { n: x.nrows(), p: x.ncols() }));
    }
    let support = load_support(&a.support, x.ncols())?;
    let trace = run_path(a.method, &x, &y, None, &|_| false)?;
    let tstats = least_squares_tstats(&x, &y)?;
    let table = double_ranking(&trace, &tstats, &support)?;
    if let Some(path) = &a.svg {
        std::fs::write(path, svg::diagram_svg(&table, a.method.name())?)?;
    }
    let mut out = stdout_lock();
    csvio::write_diagram_csv(&table, &mut out)?;
    out.flush()?;
    Ok(())
}

fn simulate(a: SimulateArgs) -> Outcome {
    let mut config = match (&a.preset, &a.config) {
        (Some(name), None) => {
            let which = Preset::from_name(name).ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                usage(format!("unknown preset {name:?}; expected one of {}", names.join(", ")))
            })?;
            let seed = a.seed.ok_or_else(|| usage("--seed is required"))?;
            preset(which, a.scale.unwrap_or(harness::config::DESK_SCALE), seed).map_err(usage)?
        }
        (None, Some(path)) => read_config(path)?,
        _ => return Err(usage("give exactly one of --preset and --config")),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    if let Some(r) = a.replicates {
        config.replicates = r;
    }
    if !a.methods.is_empty() {
        config.methods = a.methods;
    }
    config.validate().map_err(usage)?;
    let workers = harness::workers_from_env().map_err(usage)?;

    let result = harness::run_experiment_with_workers(&config, workers)?;
    harness::write_outputs(&config, &result, &a.out)?;
    let mut out = stdout_lock();
    csvio::write_summary_csv(&result.summary, &mut out)?;
    out.flush()?;
    Ok(())
}

fn read_config(path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    ExperimentConfig::parse_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}
