//! Command-line front end: tensor sampling, contraction, regime
//! predictions, covariance assembly, total-variation bounds, and the
//! experiment runner.
//!
//! Exit codes: 0 success, 2 configuration or domain error, 3 capacity
//! error, 1 anything else.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gote::config::{DirectionSpec, ExperimentConfig, ExperimentKind, ModelMode, RegimeSpec};
use gote::emit::emit;
use gote::experiment::run;
use gote::seed::shared_key;
use gote_core::cov::{frob_diff, frob_diff_bound, tv_bound, CovModel, DEFAULT_SIGMA_CAP};
use gote_core::rng::{GaussianStream, SeedKey};
use gote_core::tensor::{
    contract_mixed, contract_pure, fmt_float, sample_gote, SymMatrix, SymTensor,
};
use gote_core::theory::{
    edge_fluctuation_cov, edge_limits, overlap_limits, varpi, EdgeLaw, PairLaw, Scale,
};
use gote_core::{Error, Result};

#[derive(Parser)]
#[command(name = "gote", version, about = "Spectra of Gaussian tensor contractions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a symmetric Gaussian tensor and write its text form.
    SampleTensor(SampleTensorArgs),
    /// Contract a stored tensor along direction vectors.
    Contract(ContractArgs),
    /// Print the regime predictions for a given order.
    Predict(PredictArgs),
    /// Assemble the exact vech covariance matrix.
    Cov(CovArgs),
    /// Two-sided total-variation bound between two contraction laws.
    TvBound(TvBoundArgs),
    /// Run a seeded experiment from a config file.
    Experiment(ExperimentArgs),
}

#[derive(Args)]
struct SampleTensorArgs {
    #[arg(long)]
    r: usize,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ContractArgs {
    /// Tensor file written by sample-tensor.
    #[arg(long)]
    tensor: PathBuf,
    /// CSV of directions, one comma-separated row per direction; a single
    /// row is used for all r-2 slots.
    #[arg(long)]
    dirs: PathBuf,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    r: usize,
    /// fixed_r | r_much_less_n | proportional | r_much_greater_n
    #[arg(long, default_value = "fixed_r")]
    regime: String,
    /// Ratio r/n for the proportional regime.
    #[arg(long)]
    c: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
}

#[derive(Args)]
struct CovArgs {
    /// pure | mixed4
    #[arg(long, default_value = "pure")]
    mode: String,
    #[arg(long, default_value_t = 4)]
    r: usize,
    #[arg(long)]
    n: usize,
    /// Direction for the pure model: e1 | e2 | random | path.
    #[arg(long, default_value = "e1")]
    w: String,
    /// First mixed direction.
    #[arg(long, default_value = "e1")]
    u: String,
    /// Second mixed direction.
    #[arg(long, default_value = "e2")]
    v: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Cap on the vech dimension of the assembled matrix.
    #[arg(long, default_value_t = DEFAULT_SIGMA_CAP)]
    cap: usize,
    /// Output CSV; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TvBoundArgs {
    /// e1 | e2 | random | path
    #[arg(long)]
    u: String,
    #[arg(long)]
    v: String,
    /// Required when no direction is a file.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ExperimentArgs {
    /// bulk | edge | fluctuation | overlap | directional | mixed_compare |
    /// cov_validate | concentration | tv_bound
    kind: String,
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides out_dir from the config file.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) | Error::Domain(_) | Error::Shape(_) => ExitCode::from(2),
                Error::Capacity { .. } => ExitCode::from(3),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SampleTensor(args) => sample_tensor(args),
        Command::Contract(args) => contract(args),
        Command::Predict(args) => predict(args),
        Command::Cov(args) => cov(args),
        Command::TvBound(args) => tv(args),
        Command::Experiment(args) => experiment(args),
    }
}

fn sample_tensor(args: SampleTensorArgs) -> Result<()> {
    let tensor = sample_gote(args.r, args.n, &SeedKey::from_u64(args.seed))?;
    let mut file = fs::File::create(&args.out)?;
    tensor.write_text(&mut file)?;
    println!(
        "wrote {} (r = {}, n = {}, {} canonical entries)",
        args.out.display(),
        args.r,
        args.n,
        tensor.len()
    );
    Ok(())
}

/// Reads one direction per non-empty CSV row, normalizing each.
fn read_direction_rows(path: &Path, n: usize) -> Result<Vec<Vec<f64>>> {
    let text = fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(n);
        for field in line.split(',') {
            let x: f64 = field.trim().parse().map_err(|_| {
                Error::Parse(format!("{}: bad float {:?}", path.display(), field.trim()))
            })?;
            row.push(x);
        }
        if row.len() != n {
            return Err(Error::Shape(format!(
                "{}: direction has {} entries, expected {n}",
                path.display(),
                row.len()
            )));
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-12 {
            return Err(Error::Degenerate(format!("{}: zero direction", path.display())));
        }
        for x in &mut row {
            *x /= norm;
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{}: no directions", path.display())));
    }
    Ok(rows)
}

fn write_matrix(m: &SymMatrix, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = fs::File::create(path)?;
            m.write_csv(&mut file)?;
            println!("wrote {} ({} x {})", path.display(), m.n(), m.n());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            m.write_csv(&mut stdout)?;
        }
    }
    Ok(())
}

fn contract(args: ContractArgs) -> Result<()> {
    let file = fs::File::open(&args.tensor)
        .map_err(|e| Error::Parse(format!("{}: {e}", args.tensor.display())))?;
    let tensor = SymTensor::read_text(&mut BufReader::new(file))?;
    let slots = tensor.order() - 2;
    let mut dirs = read_direction_rows(&args.dirs, tensor.dim())?;
    if dirs.len() == 1 && slots > 1 {
        dirs = vec![dirs[0].clone(); slots];
    }
    if dirs.len() != slots {
        return Err(Error::Shape(format!(
            "order {} contraction needs {slots} directions, got {}",
            tensor.order(),
            dirs.len()
        )));
    }
    let m = if dirs.windows(2).all(|p| p[0] == p[1]) {
        contract_pure(&tensor, &dirs[0])?
    } else {
        contract_mixed(&tensor, &dirs)?
    };
    write_matrix(&m, args.out.as_deref())
}

fn predict(args: PredictArgs) -> Result<()> {
    let name = args.regime.parse()?;
    let spec = RegimeSpec { name, c: args.c };
    let regime = spec.to_regime()?;
    let prediction = edge_limits(args.r, args.n, regime)?;

    let mut out = gote::json::Json::obj();
    out.push("r", args.r).push("regime", name.tag());
    if let Some(c) = args.c {
        out.push("c", c);
    }
    out.push("varpi", varpi(args.r)?);
    out.push(
        "scale",
        match prediction.scale {
            Scale::SqrtN => "sqrt_n",
            Scale::SqrtR => "sqrt_r",
            Scale::SqrtNOverR => "sqrt_n_over_r",
        },
    );
    match prediction.law {
        EdgeLaw::Point { top, bottom } => {
            out.push("top", top).push("bottom", bottom);
        }
        law @ EdgeLaw::XiPair { .. } => {
            out.push("top_median", law.top_quantile(0.5))
                .push("top_q10", law.top_quantile(0.1))
                .push("top_q90", law.top_quantile(0.9));
        }
        law @ EdgeLaw::HalfNormalPair => {
            out.push("top_mass_at_zero", 0.5).push("top_q90", law.top_quantile(0.9));
        }
    }
    if let Ok(fluct) = edge_fluctuation_cov(args.r, regime) {
        let mut block = gote::json::Json::obj();
        block
            .push("center_top", fluct.center.0)
            .push("center_bottom", fluct.center.1)
            .push("var", fluct.cov[0][0])
            .push("cov", fluct.cov[0][1]);
        out.push("fluctuation", block);
    }
    if let Ok(overlap) = overlap_limits(args.r, regime) {
        if let PairLaw::Fixed { delta, delta_tilde, dist } = overlap.law {
            let mut block = gote::json::Json::obj();
            block
                .push("delta_1", delta.0)
                .push("delta_n", delta.1)
                .push("dtilde_1", delta_tilde.0)
                .push("dtilde_n", delta_tilde.1)
                .push("dist", dist);
            out.push("overlap", block);
        }
    }
    print!("{}", out.render());
    Ok(())
}

/// Resolves a CLI direction spec: e1 | e2 | random | path.
fn cli_direction(spec: &str, n: usize, seed: u64, salt: &str) -> Result<Vec<f64>> {
    match spec {
        "e2" => {
            if n < 2 {
                return Err(Error::Shape("e2 needs n >= 2".into()));
            }
            let mut v = vec![0.0; n];
            v[1] = 1.0;
            Ok(v)
        }
        "random" => {
            let mut stream = GaussianStream::new(&shared_key(seed, salt));
            Ok(stream.next_unit_vec(n))
        }
        other => DirectionSpec::parse(other).resolve(n, seed),
    }
}

/// Dimension from the first file among the specs, else the --n flag.
fn direction_dim(specs: &[&str], n: Option<usize>) -> Result<usize> {
    if let Some(n) = n {
        return Ok(n);
    }
    for spec in specs {
        if !matches!(*spec, "e1" | "e2" | "random") {
            let text = fs::read_to_string(spec)
                .map_err(|e| Error::Parse(format!("{spec}: {e}")))?;
            if let Some(line) = text.lines().find(|l| !l.trim().is_empty()) {
                return Ok(line.split(',').count());
            }
        }
    }
    Err(Error::Parse("pass --n when no direction is a file".into()))
}

fn cov(args: CovArgs) -> Result<()> {
    let mode: ModelMode = args.mode.parse()?;
    let model = match mode {
        ModelMode::Pure => {
            let w = cli_direction(&args.w, args.n, args.seed, "cov-w")?;
            CovModel::pure(args.r, w)?
        }
        ModelMode::Mixed4 => {
            if args.r != 4 {
                return Err(Error::Parse("mode mixed4 requires r = 4".into()));
            }
            let u = cli_direction(&args.u, args.n, args.seed, "cov-u")?;
            let v = cli_direction(&args.v, args.n, args.seed, "cov-v")?;
            CovModel::mixed4(u, v)?
        }
    };
    let sigma = model.assemble_sigma_with_cap(args.cap)?;
    let side = sigma.nrows();
    match args.out {
        Some(path) => {
            let mut text = String::new();
            for a in 0..side {
                for b in 0..side {
                    if b > 0 {
                        text.push(',');
                    }
                    text.push_str(&fmt_float(sigma[[a, b]]));
                }
                text.push('\n');
            }
            fs::write(&path, text)?;
            println!("wrote {} ({side} x {side})", path.display());
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            for a in 0..side {
                let mut line = String::new();
                for b in 0..side {
                    if b > 0 {
                        line.push(',');
                    }
                    line.push_str(&fmt_float(sigma[[a, b]]));
                }
                writeln!(stdout, "{line}")?;
            }
        }
    }
    Ok(())
}

fn tv(args: TvBoundArgs) -> Result<()> {
    let n = direction_dim(&[&args.u, &args.v], args.n)?;
    let u = cli_direction(&args.u, n, args.seed, "tv-u")?;
    let v = cli_direction(&args.v, n, args.seed, "tv-v")?;
    let dist = u
        .iter()
        .zip(&v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let (lo, hi) = tv_bound(&u, &v)?;
    println!("distance = {}", fmt_float(dist));
    println!("tv_lower = {}", fmt_float(lo));
    println!("tv_upper = {}", fmt_float(hi));
    println!("frob_diff = {}", fmt_float(frob_diff(&u, &v)?));
    println!("frob_bound = {}", fmt_float(frob_diff_bound(&u, &v)?));
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<()> {
    let kind: ExperimentKind = args.kind.parse()?;
    let config = ExperimentConfig::load(&args.config, Some(kind))?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.out_dir.clone().map(PathBuf::from))
        .ok_or_else(|| Error::Parse("no output directory: pass --out or set out_dir".into()))?;
    let result = run(&config)?;
    emit(&result, &out_dir)?;
    println!(
        "wrote {} (kind = {}, replications = {}, wall = {:.2}s)",
        out_dir.display(),
        config.kind,
        config.replications,
        result.wall_seconds
    );
    Ok(())
}
