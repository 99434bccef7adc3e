//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a checked inequality failed, 2 usage or input
//! error, 3 a budget was exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use anacomp::codec::{CodecPair, LinearCodec, RouteCodec, SparseCodec};
use anacomp::config::{parse_family, parse_measure, parse_rational_list, Rational, RunConfig, FAMILY_SCHEMA};
use anacomp::dimension::{default_j_schedule, dimension_pair, mbdim_estimate, mmdim_estimate, DimensionEstimate};
use anacomp::harness::{
    ball_entropy_check, binary_shift_bound, bound_chain, lin_rank_check, lin_rank_survey, BoundChainConfig,
    InequalityRow,
};
use anacomp::model::{DyadicGrid, Norm, SubshiftFamily};
use anacomp::ratedist::rd_function;
use anacomp::spacefill::{cube_surjection, holder_estimate, Domain};
use anacomp::Error;

#[derive(Parser)]
#[command(name = "anacomp", version, about = "Analog compression rates, mean dimensions and rate-distortion bounds")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags given explicitly override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Grid resolution: values are multiples of 2^-b.
    #[arg(long, global = true)]
    b: Option<u32>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum number of enumerated words per stage.
    #[arg(long, global = true)]
    budget: Option<u64>,
    /// Maximum joint-table entries for the rate-distortion solver.
    #[arg(long, global = true)]
    table_budget: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Metric mean dimension and mean box dimension from exact covering
    /// counts of window projections.
    Dim(DimArgs),
    /// Build a codec and check it by roundtrip.
    Codec {
        #[command(subcommand)]
        scheme: CodecCommand,
    },
    /// Rate-distortion curve of a stationary measure by Blahut-Arimoto.
    Rd(RdArgs),
    /// Inequality checks; exit code 1 if any fails.
    Verify {
        #[command(subcommand)]
        check: VerifyCommand,
    },
    /// Hilbert-type cube surjection: right-inverse, surjectivity and
    /// Hölder checks.
    Spacefill(SpacefillArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Estimator {
    Mmdim,
    Mbdim,
    Both,
}

#[derive(Args)]
struct DimArgs {
    /// Family, e.g. sparse:N=4,K=1, full-grid, full-binary, vanishing-cubes:m=6.
    #[arg(long)]
    family: Option<String>,
    /// Window lengths; defaults depend on the family.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Scale exponents j (ε = 2^-j); default 2..=b.
    #[arg(long, value_delimiter = ',')]
    j: Option<Vec<u32>>,
    #[arg(long, value_enum, default_value = "both")]
    estimator: Estimator,
}

#[derive(Subcommand)]
enum CodecCommand {
    /// Support-and-signature codec for the sparse family.
    Sparse {
        #[arg(long = "N")]
        big_n: usize,
        #[arg(long = "K")]
        big_k: usize,
        #[arg(long = "l", default_value_t = 1)]
        ell: usize,
        /// Decoder exponent, as 1/q.
        #[arg(long, default_value = "1/2")]
        alpha: Rational,
        #[arg(long, default_value = "inf")]
        norm: Norm,
        #[arg(long, value_enum, default_value = "exhaustive")]
        roundtrip: Roundtrip,
    },
    /// Random linear encoder with nearest-word decoding.
    Linear {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "exhaustive")]
        roundtrip: Roundtrip,
    },
    /// Grid quantizer followed by a cube surjection's right inverse.
    Route {
        #[arg(long)]
        family: String,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "1/2")]
        alpha: Rational,
        #[arg(long, default_value = "inf")]
        norm: Norm,
        #[arg(long, value_enum, default_value = "exhaustive")]
        roundtrip: Roundtrip,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Roundtrip {
    Exhaustive,
    None,
}

#[derive(Args)]
struct RdArgs {
    /// Measure, e.g. sparse-shift-avg:N=4,K=1, iid-uniform, point-mass:1/2.
    #[arg(long)]
    measure: String,
    #[arg(long, value_delimiter = ',', default_value = "4")]
    n: Vec<usize>,
    /// Distortion levels as exact rationals, e.g. 2^-2,2^-3.
    #[arg(long)]
    eps: String,
    #[arg(long, default_value_t = 1.0)]
    p: f64,
}

#[derive(Subcommand)]
enum VerifyCommand {
    /// α·mmdim ≤ achieved rates ≤ min{1, 2·mbdim/(1-α)}.
    BoundChain {
        #[arg(long)]
        family: String,
        #[arg(long, default_value = "1/2")]
        alpha: Rational,
        #[arg(long, default_value = "inf")]
        norm: Norm,
        #[arg(long, default_value_t = 0.02)]
        tolerance: f64,
    },
    /// Exhaustive Hamming-ball count against 2^{nH(δ)}.
    Ball {
        #[arg(long, default_value_t = 14)]
        nmax: usize,
        #[arg(long, default_value = "1/8,1/4,3/8,1/2")]
        delta: String,
    },
    /// Positive lower bound on Hölder compression rates of the binary shift.
    ShiftBound {
        #[arg(long, default_value = "1")]
        alpha: Rational,
        #[arg(long = "L", default_value_t = 1.0)]
        l: f64,
        /// Measured rate of a codec meeting the error target, if any.
        #[arg(long)]
        measured: Option<f64>,
    },
    /// Rank of random linear maps on the sparse difference subspace.
    LinRank {
        #[arg(long = "N")]
        big_n: usize,
        #[arg(long = "K")]
        big_k: usize,
        #[arg(long = "l")]
        ell: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

#[derive(Args)]
struct SpacefillArgs {
    #[arg(long)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value = "inf")]
    norm: Norm,
    #[arg(long, default_value_t = 20_000)]
    pairs: usize,
    /// Also write the curve's image of the parameter grid.
    #[arg(long)]
    points: bool,
}

struct Failure(ExitCode, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Budget { .. }) { 3 } else { 2 };
        Failure(ExitCode::from(code), e.to_string())
    }
}

fn io_failure(e: impl std::fmt::Display) -> Failure {
    Failure(ExitCode::from(2), e.to_string())
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure(ExitCode::from(2), msg.into())
}

type Run = Result<bool, Failure>;

fn resolve(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::from_json(&fs::read_to_string(path).map_err(io_failure)?)?,
        None => RunConfig::default(),
    };
    if let Some(b) = common.b {
        cfg.grid = DyadicGrid::new(b)?;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(v) = common.budget {
        cfg.word_budget = v;
    }
    if let Some(v) = common.table_budget {
        cfg.table_budget = v;
    }
    if let Some(v) = &common.out {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = common.threads {
        cfg.threads = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(io_failure)?;
    let text = serde_json::to_string_pretty(value).map_err(io_failure)?;
    fs::write(dir.join(name), text + "\n").map_err(io_failure)
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(io_failure)?;
    let mut w = csv::Writer::from_path(dir.join(name)).map_err(io_failure)?;
    for r in rows {
        w.serialize(r).map_err(io_failure)?;
    }
    w.flush().map_err(io_failure)
}

fn alpha_q(alpha: Rational) -> Result<usize, Failure> {
    alpha
        .reciprocal_integer()
        .map(|q| q as usize)
        .ok_or_else(|| usage(format!("alpha must be 1/q for an integer q >= 1, got {alpha}")))
}

fn family(spec: &str, grid: DyadicGrid) -> Result<SubshiftFamily, Failure> {
    let f = parse_family(spec)?;
    f.validate(grid)?;
    Ok(f)
}

fn print_estimate(name: &str, e: &DimensionEstimate) {
    println!("{name}: value {:.4} (lsq slope {:.4})", e.value, e.lsq_slope);
    for (j, v) in &e.per_epsilon {
        println!("  j={j} per-eps {v:.4}");
    }
}

fn run_dim(cfg: &RunConfig, args: &DimArgs) -> Run {
    let spec = args.family.as_deref().ok_or_else(|| usage(format!("missing --family; {FAMILY_SCHEMA}")))?;
    let fam = family(spec, cfg.grid)?;
    let js = args.j.clone().unwrap_or_else(|| default_j_schedule(cfg.grid));
    let mm_ns = args.n.clone().unwrap_or_else(|| fam.default_mmdim_schedule());
    let mb_ns = args.n.clone().unwrap_or_else(|| fam.default_mbdim_schedule());
    let dir = &cfg.out_dir;
    let estimates: Vec<(&str, DimensionEstimate)> = match args.estimator {
        Estimator::Mmdim => vec![("mmdim", mmdim_estimate(&fam, &mm_ns, &js, cfg.grid, cfg.word_budget)?)],
        Estimator::Mbdim => vec![("mbdim", mbdim_estimate(&fam, &mb_ns, &js, cfg.grid, cfg.word_budget)?)],
        Estimator::Both if mm_ns == mb_ns => {
            let (mm, mb) = dimension_pair(&fam, &mm_ns, &js, cfg.grid, cfg.word_budget)?;
            vec![("mmdim", mm), ("mbdim", mb)]
        }
        Estimator::Both => vec![
            ("mmdim", mmdim_estimate(&fam, &mm_ns, &js, cfg.grid, cfg.word_budget)?),
            ("mbdim", mbdim_estimate(&fam, &mb_ns, &js, cfg.grid, cfg.word_budget)?),
        ],
    };
    println!("family: {}", fam.label());
    for (name, e) in &estimates {
        print_estimate(name, e);
        write_json(dir, &format!("{name}.json"), e)?;
        write_csv(dir, &format!("{name}_table.csv"), &e.table)?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct CodecSummary {
    scheme: String,
    n: usize,
    k: usize,
    rate: f64,
    windows: Option<u64>,
    errors: Option<u64>,
}

fn roundtrip_count(pair: &CodecPair, fam: &SubshiftFamily, grid: DyadicGrid, budget: u64) -> Result<(u64, u64), Failure> {
    let mut errors = 0u64;
    let mut failure = None;
    let windows = fam.for_each_word(pair.n(), grid, budget, |w| {
        let x: Vec<f64> = w.iter().map(|&i| grid.value(i)).collect();
        match pair.roundtrip(&x) {
            Ok(z) if z == x => {}
            Ok(_) => errors += 1,
            Err(e) => failure = Some(e),
        }
    })?;
    match failure {
        Some(e) => Err(e.into()),
        None => Ok((windows, errors)),
    }
}

fn run_codec(cfg: &RunConfig, scheme: &CodecCommand) -> Run {
    let grid = cfg.grid;
    let (pair, fam, rt) = match scheme {
        CodecCommand::Sparse { big_n, big_k, ell, alpha, norm, roundtrip } => {
            let codec = SparseCodec::new(*big_n, *big_k, *ell, alpha_q(*alpha)?, grid)?;
            (CodecPair::sparse(codec, *norm), SubshiftFamily::sparse(*big_n, *big_k), *roundtrip)
        }
        CodecCommand::Linear { family: f, n, k, roundtrip } => {
            let fam = family(f, grid)?;
            let codec = LinearCodec::new(&fam, *n, *k, cfg.seed, grid, cfg.word_budget)?;
            (CodecPair::linear(codec), fam, *roundtrip)
        }
        CodecCommand::Route { family: f, n, alpha, norm, roundtrip } => {
            let fam = family(f, grid)?;
            (CodecPair::route(RouteCodec::new(*n, alpha_q(*alpha)?, grid)?, *norm), fam, *roundtrip)
        }
    };
    let counted = if rt == Roundtrip::Exhaustive { Some(roundtrip_count(&pair, &fam, grid, cfg.word_budget)?) } else { None };
    let summary = CodecSummary {
        scheme: pair.scheme_name(),
        n: pair.n(),
        k: pair.k(),
        rate: pair.rate(),
        windows: counted.map(|c| c.0),
        errors: counted.map(|c| c.1),
    };
    match summary.errors {
        Some(e) => println!("errors: {e}, rate: {}", summary.rate),
        None => println!("rate: {}", summary.rate),
    }
    write_json(&cfg.out_dir, "codec.json", &pair.descriptor())?;
    write_json(&cfg.out_dir, "codec_summary.json", &summary)?;
    Ok(summary.errors.unwrap_or(0) == 0)
}

#[derive(Serialize)]
struct RdCsvRow {
    n: usize,
    p: f64,
    epsilon: f64,
    rate: f64,
    achieved_distortion: f64,
    iterations: usize,
    converged: bool,
}

fn run_rd(cfg: &RunConfig, args: &RdArgs) -> Run {
    let measure = parse_measure(&args.measure, cfg.grid)?;
    measure.validate(cfg.grid)?;
    let eps: Vec<f64> = parse_rational_list(&args.eps)?.into_iter().map(Rational::value).collect();
    if eps.is_empty() {
        return Err(usage("--eps needs at least one value"));
    }
    let curve = rd_function(&measure, &args.n, args.p, &eps, cfg.grid, cfg.word_budget, cfg.table_budget)?;
    let rows: Vec<RdCsvRow> = curve
        .table
        .iter()
        .map(|pt| RdCsvRow {
            n: pt.n,
            p: curve.p,
            epsilon: pt.epsilon,
            rate: pt.rate,
            achieved_distortion: pt.achieved_distortion,
            iterations: pt.iterations,
            converged: pt.converged,
        })
        .collect();
    println!("n,p,epsilon,rate,achieved_distortion,iterations,converged");
    for r in &rows {
        println!(
            "{},{},{},{:.6},{:.6},{},{}",
            r.n, r.p, r.epsilon, r.rate, r.achieved_distortion, r.iterations, r.converged
        );
    }
    write_csv(&cfg.out_dir, "rd_curve.csv", &rows)?;
    write_json(&cfg.out_dir, "rd_curve.json", &curve)?;
    Ok(true)
}

fn print_rows(rows: &[InequalityRow]) {
    println!("{:<48} {:>10} {:>10} {:>10}  holds", "inequality", "lhs", "rhs", "slack");
    for r in rows {
        println!("{:<48} {:>10.4} {:>10.4} {:>10.4}  {}", r.name, r.lhs, r.rhs, r.slack, r.holds);
    }
}

fn run_verify(cfg: &RunConfig, check: &VerifyCommand) -> Run {
    let dir = &cfg.out_dir;
    match check {
        VerifyCommand::BoundChain { family: f, alpha, norm, tolerance } => {
            let fam = family(f, cfg.grid)?;
            let config = BoundChainConfig {
                tolerance: *tolerance,
                budget: cfg.word_budget,
                seed: cfg.seed,
                ..BoundChainConfig::default()
            };
            let report = bound_chain(&fam, alpha_q(*alpha)?, *norm, cfg.grid, &config)?;
            println!("family {}: mmdim {:.4}, mbdim {:.4}", report.family, report.mmdim, report.mbdim);
            print_rows(&report.rows);
            write_json(dir, "bound_chain.json", &report)?;
            write_csv(dir, "bound_chain.csv", &report.rows)?;
            Ok(report.passed())
        }
        VerifyCommand::Ball { nmax, delta } => {
            let deltas: Vec<f64> = parse_rational_list(delta)?.into_iter().map(Rational::value).collect();
            let rows = ball_entropy_check(*nmax, &deltas)?;
            let bad = rows.iter().filter(|r| !r.holds).count();
            println!("{} cases, {bad} violations", rows.len());
            write_csv(dir, "ball.csv", &rows)?;
            Ok(bad == 0)
        }
        VerifyCommand::ShiftBound { alpha, l, measured } => {
            let bound = binary_shift_bound(alpha.value(), *l)?;
            println!("bound: {bound:.7}");
            let row = measured.map(|m| InequalityRow::new("binary shift bound <= measured rate", bound, m, 0.0, ""));
            if let Some(r) = &row {
                print_rows(std::slice::from_ref(r));
            }
            write_json(dir, "shift_bound.json", &(bound, &row))?;
            Ok(row.is_none_or(|r| r.holds))
        }
        VerifyCommand::LinRank { big_n, big_k, ell, k, trials } => {
            let threshold = (2 * ell * big_k).min(ell * big_n);
            let below = *k < threshold;
            let report = if below {
                lin_rank_check(*big_n, *big_k, *ell, *k, *trials, cfg.seed)?
            } else {
                lin_rank_survey(*big_n, *big_k, *ell, *k, *trials, cfg.seed)?
            };
            println!(
                "subspace dim {}, threshold {threshold}: {}/{} rank deficient, {}/{} full rank",
                report.subspace_dim, report.rank_deficient, report.trials, report.full_rank, report.trials
            );
            write_json(dir, "lin_rank.json", &report)?;
            Ok(if below { report.rank_deficient == report.trials } else { true })
        }
    }
}

#[derive(Serialize)]
struct SpacefillSummary {
    k: usize,
    n: usize,
    b: u32,
    exponent: f64,
    declared_constant: f64,
    right_inverse: bool,
    surjective: bool,
    alpha_hat: f64,
    l_hat: f64,
}

fn run_spacefill(cfg: &RunConfig, args: &SpacefillArgs) -> Run {
    let curve = cube_surjection(args.k, args.n, cfg.grid.bits())?;
    let right_inverse = curve.verify_right_inverse(cfg.word_budget)?;
    let surjective = curve.verify_surjective(cfg.word_budget)?;
    let l = curve.holder_constant(args.norm);
    let domain = Domain::Grid { dim: args.k, bits: curve.param_bits() };
    let est = holder_estimate(|x| curve.forward(x), &domain, args.norm, l, curve.exponent(), args.pairs, cfg.seed)?;
    let summary = SpacefillSummary {
        k: args.k,
        n: args.n,
        b: curve.b,
        exponent: curve.exponent(),
        declared_constant: l,
        right_inverse,
        surjective,
        alpha_hat: est.alpha_hat,
        l_hat: est.l_hat,
    };
    println!(
        "g∘f = id: {right_inverse}, onto grid: {surjective}, exponent {:.4}, L declared {l:.3}, measured {:.3}",
        summary.exponent, summary.l_hat
    );
    write_json(&cfg.out_dir, "spacefill.json", &summary)?;
    if args.points {
        if args.k != 1 {
            return Err(usage("--points is available for k = 1"));
        }
        let steps = 1u64 << curve.param_bits();
        let pts: Vec<Vec<f64>> = (0..=steps)
            .map(|i| curve.forward(&[i as f64 / steps as f64]))
            .collect::<anacomp::Result<_>>()?;
        write_csv(&cfg.out_dir, "curve_points.csv", &pts)?;
    }
    Ok(right_inverse && surjective && est.l_hat <= l * (1.0 + 1e-9))
}

fn run(cli: Cli) -> Run {
    let cfg = resolve(&cli.common)?;
    rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global().map_err(io_failure)?;
    let start = Instant::now();
    let result = match &cli.command {
        Command::Dim(a) => run_dim(&cfg, a),
        Command::Codec { scheme } => run_codec(&cfg, scheme),
        Command::Rd(a) => run_rd(&cfg, a),
        Command::Verify { check } => run_verify(&cfg, check),
        Command::Spacefill(a) => run_spacefill(&cfg, a),
    };
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > cfg.wall_clock_secs as f64 {
        eprintln!("warning: run took {elapsed:.0}s, over the {}s soft cap", cfg.wall_clock_secs);
    }
    result
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}
