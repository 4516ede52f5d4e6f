use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use stochsep::bounds::{self, SeparationRegime};
use stochsep::corrector::{
    self, assemble_cascade, build_whitening_with_floor, ComponentRule, CorrectorModel, SvmConfig, WhiteningModel,
};
use stochsep::io::{self, MatrixFormat};
use stochsep::sampling::{sample, DistributionKind, DistributionSpec, FeatureMatrix, SeedSpec};
use stochsep::separability::{census, mc_experiment};
use stochsep::{Result, SepError};

#[derive(Parser)]
#[command(name = "sepctl", version, about = "Stochastic separation bounds, experiments and one-trial correctors")]
struct Cli {
    /// Master seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format for matrices.
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Csv,
    Bin,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form separation probabilities and capacities.
    Bounds(BoundsArgs),
    /// Draw a seeded sample from the ball, cube, Gaussian or an ellipsoid.
    Sample(SampleArgs),
    /// Monte Carlo census grid from a JSON config; the report is deterministic.
    ///
    /// Config keys: distributions, n_list, m, repeats, seed. Wall-clock timing is
    /// written next to the report as <out>.timing.json.
    Mc(McArgs),
    /// Fraction of points separated from all others by x -> <y, x> - |y|^2, as N/(M-1).
    Census(CensusArgs),
    /// Covariance spectrum with broken-stick and Kaiser component counts.
    Pca(PcaArgs),
    /// Build a corrector model from positives and mistakes.
    ///
    /// spherical-cap: flags x when <y'/|y'|, x - mean> >= |y'|, y' = y - mean.
    /// fisher-single: the same cap in whitened coordinates, centred on the mean of the
    /// other positives. fisher-multi: w = (S_tp + S_fp)^-1 (mean_fp - mean_tp),
    /// threshold at the smallest trash projection. two-neuron: cap functional plus
    /// one orthogonal functional. svm: hinge-loss baseline. Single-point kinds build
    /// one model per trash row and OR them.
    Train(TrainArgs),
    /// Removal counts and rates of a model on a labeled CSV.
    Eval(EvalArgs),
    /// Per-row flags (true = suppress) as one CSV column.
    Apply(ApplyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum BoundKind {
    /// Single point vs M others: (1-(1-eps)^n) (1-rho^n/2)^M.
    P1,
    /// P1 maximised over eps.
    P1max,
    /// Every point vs the rest: [(1-(1-eps)^n) (1-(M-1) rho^n/2)]^M.
    Pm,
    /// Union bound 1 - M (1 - P1), maximised over eps.
    PmUnion,
    /// Two orthogonal neurons; maximised over eps unless --eps is given.
    TwoNeuron,
    /// Largest M with P1 >= p, and its exponential asymptote.
    Capacity,
    /// Largest M with the all-points bound >= q.
    CapacityAll,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(value_enum)]
    kind: BoundKind,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<f64>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    dist: DistArg,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: f64,
    /// Comma-separated semi-axes for the ellipsoid.
    #[arg(long, value_delimiter = ',')]
    axes: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistArg {
    Ball,
    Cube,
    Gaussian,
    Ellipsoid,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct CensusArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Include the per-point flags.
    #[arg(long)]
    per_point: bool,
}

#[derive(Args)]
struct PcaArgs {
    #[arg(long = "in")]
    input: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum KindArg {
    SphericalCap,
    FisherSingle,
    FisherMulti,
    TwoNeuron,
    Svm,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    BrokenStick,
    Kaiser,
    Fixed,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long)]
    positives: PathBuf,
    #[arg(long)]
    trash: PathBuf,
    /// Principal component selection for the whitening.
    #[arg(long, value_enum, default_value = "kaiser")]
    rule: RuleArg,
    /// Component count for --rule fixed; defaults to the full dimension.
    #[arg(long)]
    k: Option<usize>,
    /// Rescale components to unit variance; otherwise project only.
    #[arg(long)]
    whiten: bool,
    /// Smallest admissible eigenvalue ratio lambda_k / lambda_1.
    #[arg(long, default_value_t = corrector::DEFAULT_COND_FLOOR)]
    cond_floor: f64,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 1e-4)]
    regularization: f64,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long = "in")]
    input: PathBuf,
}

fn input_format(path: &Path) -> MatrixFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("bin") => MatrixFormat::Bin,
        _ => MatrixFormat::Csv,
    }
}

fn read_input(path: &Path) -> Result<FeatureMatrix> {
    io::read_matrix(path, input_format(path))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, bytes)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(out, text.as_bytes())
}

fn need(v: Option<f64>, name: &str) -> Result<f64> {
    v.ok_or_else(|| SepError::domain(format!("--{name} is required for this bound")))
}

fn sample_size(m: f64) -> Result<usize> {
    if !(m >= 1.0 && m.fract() == 0.0 && m <= 1e12) {
        return Err(SepError::domain(format!("sample size must be a positive integer, got {m}")));
    }
    Ok(m as usize)
}

fn run_bounds(a: &BoundsArgs, out: Option<&Path>) -> Result<()> {
    let n = a.n;
    let regime = || -> Result<SeparationRegime> { SeparationRegime::new(n, need(a.m, "m")?, need(a.eps, "eps")?) };
    match a.kind {
        BoundKind::P1 => emit_json(out, &bounds::p1_lower_bound(&regime()?)),
        BoundKind::P1max => emit_json(out, &bounds::p1_lower_bound_max(n, need(a.m, "m")?)?),
        BoundKind::Pm => emit_json(out, &bounds::pm_lower_bound(&regime()?)?),
        BoundKind::PmUnion => emit_json(out, &bounds::pm_union_bound(n, need(a.m, "m")?)?),
        BoundKind::TwoNeuron => match a.eps {
            Some(_) => emit_json(out, &bounds::two_neuron_bound_given_eps(&regime()?)),
            None => emit_json(out, &bounds::two_neuron_bound_max(n, need(a.m, "m")?)?),
        },
        BoundKind::Capacity => emit_json(out, &bounds::capacity_single(n, need(a.eps, "eps")?, need(a.p, "p")?)?),
        BoundKind::CapacityAll => {
            emit_json(out, &bounds::capacity_all(n, need(a.eps, "eps")?, need(a.q, "q")?)?)
        }
    }
}

fn run_sample(a: &SampleArgs, seed: u64, out: Option<&Path>, format: Option<OutFormat>) -> Result<()> {
    let spec = match a.dist {
        DistArg::Ellipsoid => {
            let axes = a.axes.clone().ok_or_else(|| SepError::domain("--axes is required for the ellipsoid"))?;
            if a.n.is_some_and(|n| n != axes.len()) {
                return Err(SepError::DimensionMismatch { expected: axes.len(), got: a.n.unwrap_or(0) });
            }
            DistributionSpec::ellipsoid(axes)?
        }
        other => {
            let kind = match other {
                DistArg::Ball => DistributionKind::Ball,
                DistArg::Cube => DistributionKind::Cube,
                _ => DistributionKind::Gaussian,
            };
            let n = a.n.ok_or_else(|| SepError::domain("--n is required"))?;
            DistributionSpec::new(kind, n)?
        }
    };
    let x = sample(&spec, sample_size(a.m)?, SeedSpec::new(seed))?;
    let mut buf = Vec::new();
    match format {
        Some(OutFormat::Bin) => io::write_bin(&x, &mut buf)?,
        Some(OutFormat::Json) => return Err(SepError::domain("matrices are written as csv or bin")),
        _ => io::write_csv(&x, &mut buf)?,
    }
    emit(out, &buf)
}

fn run_mc(a: &McArgs, seed: Option<u64>, threads: usize, out: Option<&Path>) -> Result<()> {
    let mut config = io::read_config(&a.config)?;
    if let Some(s) = seed {
        config.seed = s;
    }
    let start = Instant::now();
    let report = mc_experiment(&config)?;
    let elapsed = start.elapsed().as_secs_f64();
    emit(out, report.to_json()?.as_bytes())?;
    if let Some(p) = out {
        let mut sidecar = p.as_os_str().to_owned();
        sidecar.push(".timing.json");
        let timing = json!({ "wall_clock_seconds": elapsed, "threads": rayon::current_num_threads(), "requested_threads": threads });
        std::fs::write(sidecar, serde_json::to_string_pretty(&timing)? + "\n")?;
    }
    Ok(())
}

fn run_census(a: &CensusArgs, out: Option<&Path>) -> Result<()> {
    let mut result = census(&read_input(&a.input)?)?;
    if !a.per_point {
        result.per_point = None;
    }
    emit_json(out, &result)
}

fn run_pca(a: &PcaArgs, out: Option<&Path>) -> Result<()> {
    let pca = corrector::fit_pca(&read_input(&a.input)?)?;
    let doc = json!({
        "eigenvalues": pca.eigenvalues,
        "broken_stick": corrector::broken_stick_count(&pca.eigenvalues).ok(),
        "kaiser": corrector::kaiser_count(&pca.eigenvalues).ok(),
    });
    emit_json(out, &doc)
}

fn run_train(a: &TrainArgs, seed: u64, out: Option<&Path>) -> Result<()> {
    let positives = read_input(&a.positives)?;
    let trash = read_input(&a.trash)?;
    if trash.cols() != positives.cols() {
        return Err(SepError::DimensionMismatch { expected: positives.cols(), got: trash.cols() });
    }
    let rule = match a.rule {
        RuleArg::BrokenStick => ComponentRule::BrokenStick,
        RuleArg::Kaiser => ComponentRule::Kaiser,
        RuleArg::Fixed => ComponentRule::Fixed(a.k.unwrap_or(positives.cols())),
    };
    let whitening = || -> Result<WhiteningModel> { build_whitening_with_floor(&positives, rule, a.whiten, a.cond_floor) };
    let per_row = |build: &dyn Fn(&[f64]) -> Result<CorrectorModel>| -> Result<CorrectorModel> {
        let models = trash.iter_rows().map(build).collect::<Result<Vec<_>>>()?;
        assemble_cascade(&models)
    };
    let model = match a.kind {
        KindArg::SphericalCap => per_row(&|y| corrector::spherical_cap_corrector(&positives, y))?,
        KindArg::FisherSingle => {
            let w = whitening()?;
            per_row(&|y| corrector::fisher_corrector_single(&positives, y, &w))?
        }
        KindArg::TwoNeuron => {
            let w = whitening()?;
            per_row(&|y| corrector::two_neuron_corrector(&positives, y, &w))?
        }
        KindArg::FisherMulti => corrector::fisher_corrector_multi(&positives, &trash, &whitening()?)?,
        KindArg::Svm => {
            let config = SvmConfig { epochs: a.epochs, step: a.step, regularization: a.regularization, seed };
            corrector::svm_baseline(&positives, &trash, &whitening()?, &config)?
        }
    };
    emit(out, (io::model_to_json(&model)? + "\n").as_bytes())
}

fn run_eval(a: &EvalArgs, out: Option<&Path>) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let data = io::read_labeled(&a.data)?;
    emit_json(out, &corrector::evaluate(&model, &data)?)
}

fn run_apply(a: &ApplyArgs, out: Option<&Path>) -> Result<()> {
    let model = io::read_model(&a.model)?;
    let flags = model.apply_matrix(&read_input(&a.input)?)?;
    let mut text = String::with_capacity(flags.len() * 6);
    for f in flags {
        text.push_str(if f { "true\n" } else { "false\n" });
    }
    emit(out, text.as_bytes())
}

fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| SepError::domain(format!("cannot start {} worker threads: {e}", cli.threads)))?;
    let out = cli.out.as_deref();
    let seed = cli.seed.unwrap_or(0);
    pool.install(|| match &cli.command {
        Command::Bounds(a) => run_bounds(a, out),
        Command::Sample(a) => run_sample(a, seed, out, cli.format),
        Command::Mc(a) => run_mc(a, cli.seed, cli.threads, out),
        Command::Census(a) => run_census(a, out),
        Command::Pca(a) => run_pca(a, out),
        Command::Train(a) => run_train(a, seed, out),
        Command::Eval(a) => run_eval(a, out),
        Command::Apply(a) => run_apply(a, out),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sepctl: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
