use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use oscopula::copula::Copula;
use oscopula::model::Model;
use oscopula::probit::{
    check_compatibility, injured_fraction, probit_value, sample_threshold_chain, ExposureProfile, ProbitContext,
    ProbitLevel,
};
use oscopula::sampling::{clamp_to_shift, sample_pairs, to_normal_pairs};
use oscopula::support::SupportSpec;
use oscopula::validation::{kendall_tau_report, validate_all, Check, Tolerances};
use oscopula::Error;

#[derive(Parser)]
#[command(name = "oscopula", version, about = "Copulas with opposite symmetric support")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model file from a JSON config.
    Build {
        config: PathBuf,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a model on an n x n grid.
    Grid {
        model: PathBuf,
        #[arg(value_enum)]
        what: GridField,
        #[arg(short, default_value_t = 100)]
        n: usize,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Draw pairs from a model.
    Sample {
        model: PathBuf,
        #[arg(short, default_value_t = 100_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Transform both margins to standard normal.
        #[arg(long)]
        normal: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Check a model and print a JSON report.
    Validate {
        model: PathBuf,
        #[arg(long, default_value_t = 200)]
        grid: usize,
        #[arg(long, default_value_t = 100_000)]
        tau_samples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Check or sample ordered probit levels.
    Probit(ProbitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum GridField {
    Cdf,
    Density,
    Conditional,
}

#[derive(Args)]
struct ProbitArgs {
    /// Levels as a JSON array of {label, alpha, beta, n}, or an object with
    /// "levels" and optional "t" and "c_max".
    levels: PathBuf,
    /// Exposure CSV with header t_start,t_end,concentration.
    exposure: Option<PathBuf>,
    #[arg(long, conflicts_with = "sample")]
    check: bool,
    /// Number of threshold rows to draw.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exposure duration bound.
    #[arg(long)]
    t: Option<f64>,
    /// Peak concentration bound.
    #[arg(long)]
    c_max: Option<f64>,
    /// Accept a zero shift and couple those levels deterministically.
    #[arg(long)]
    allow_singular: bool,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// Bad input: exit code 2.
    Input(String),
    /// A check did not pass: exit code 1.
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::IncompatibleLevels(_) => Failure::Check(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn output(path: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).map_err(|e| Failure::Input(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn load_model(path: &Path) -> CliResult<Model> {
    Ok(Model::from_json(&read(path)?)?)
}

fn build(config: &Path, out: &Option<PathBuf>) -> CliResult<()> {
    let model = Model::from_config_json(&read(config)?)?;
    let mut w = output(out)?;
    writeln!(w, "{}", model.to_json())?;
    w.flush()?;
    Ok(())
}

/// `n` points from `eps` to `1 - eps`.
fn axis(n: usize, eps: f64) -> Vec<f64> {
    (0..n)
        .map(|i| eps + (1.0 - 2.0 * eps) * i as f64 / (n - 1) as f64)
        .collect()
}

fn grid(model: &Path, what: GridField, n: usize, out: &Option<PathBuf>) -> CliResult<()> {
    if !(10..=2000).contains(&n) {
        return Err(Failure::Input(format!("grid size must be in [10, 2000], got {n}")));
    }
    let model = load_model(model)?;
    let c = model.copula();
    let pts = axis(n, c.epsilon());
    let mut w = output(out)?;
    writeln!(w, "u,v,value")?;
    for &u in &pts {
        for &v in &pts {
            let value = match what {
                GridField::Cdf => c.cdf(u, v),
                GridField::Density => c.density(u, v),
                GridField::Conditional => c.conditional_cdf(u, v),
            };
            writeln!(w, "{u:.16e},{v:.16e},{value:.16e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn sample(model: &Path, n: usize, seed: u64, normal: bool, out: &Option<PathBuf>) -> CliResult<()> {
    let model = load_model(model)?;
    let batch = sample_pairs(model.copula(), n, seed)?;
    let mut w = output(out)?;
    if normal {
        let mut xy = to_normal_pairs(&batch.pairs)?;
        if let Some(SupportSpec::GaussianShift { delta }) = model.profile().support().and_then(|h| h.spec()) {
            clamp_to_shift(&mut xy, delta);
        }
        writeln!(w, "x,y")?;
        for (x, y) in xy {
            writeln!(w, "{x:.16e},{y:.16e}")?;
        }
    } else {
        writeln!(w, "u,v")?;
        for (u, v) in batch.pairs {
            writeln!(w, "{u:.16e},{v:.16e}")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn validate(model: &Path, grid_n: usize, tau_samples: usize, seed: u64) -> CliResult<()> {
    if !(10..=2000).contains(&grid_n) {
        return Err(Failure::Input(format!("grid size must be in [10, 2000], got {grid_n}")));
    }
    let model = load_model(model)?;
    let c = model.copula();
    let tol = Tolerances::default();
    let mut report = validate_all(c, grid_n, &tol);
    // Recomputed from the stored tables, not taken from the file.
    let pos = model.profile().positivity();
    report.checks.push(Check {
        name: "positivity".into(),
        passed: pos.holds(),
        worst: pos.q_min.min(pos.min_scaled_f_prime),
        location: Some((pos.u_star, 0.0)),
        tolerance: 0.0,
    });
    let tau = kendall_tau_report(c, tau_samples, seed)?;
    report.checks.push(Check {
        name: "tau_direct_vs_sample".into(),
        passed: !tau.direct_flagged,
        worst: (tau.tau_direct - tau.tau_sample).abs(),
        location: None,
        tolerance: 3.0 * tau.std_error,
    });
    let passed = report.passed();
    let doc = json!({
        "passed": passed,
        "u0": model.u0(),
        "tag": model.to_file().tag,
        "report": report,
        "tau": tau,
    });
    println!("{}", serde_json::to_string_pretty(&doc).expect("report serializes"));
    if passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::Check(format!("failed checks: {}", failed.join(", "))))
    }
}

fn read_levels(path: &Path) -> CliResult<(Vec<ProbitLevel>, ProbitContext)> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| Failure::Input(format!("{}: {e}", path.display()));
    let (levels, ctx) = if value.is_array() {
        (serde_json::from_value::<Vec<ProbitLevel>>(value).map_err(bad)?, ProbitContext::default())
    } else {
        let ctx = serde_json::from_value::<ProbitContext>(value.clone()).map_err(bad)?;
        let levels = value
            .get("levels")
            .cloned()
            .ok_or_else(|| Failure::Input(format!("{}: missing 'levels'", path.display())))?;
        (serde_json::from_value(levels).map_err(bad)?, ctx)
    };
    for l in &levels {
        l.validate()?;
    }
    Ok((levels, ctx))
}

fn read_exposure(path: &Path) -> CliResult<ExposureProfile> {
    let bad = |e: csv::Error| Failure::Input(format!("{}: {e}", path.display()));
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(bad)?;
    let headers: Vec<String> = r.headers().map_err(bad)?.iter().map(str::to_string).collect();
    if headers != ["t_start", "t_end", "concentration"] {
        return Err(Failure::Input(format!(
            "{}: expected header t_start,t_end,concentration, got {}",
            path.display(),
            headers.join(",")
        )));
    }
    let rows: Vec<(f64, f64, f64)> = r.deserialize().collect::<Result<_, _>>().map_err(bad)?;
    Ok(ExposureProfile::from_segments(&rows)?)
}

fn probit(args: &ProbitArgs) -> CliResult<()> {
    let (levels, mut ctx) = read_levels(&args.levels)?;
    let exposure = args.exposure.as_deref().map(read_exposure).transpose()?;
    if let Some(e) = &exposure {
        let end = *e.breakpoints().last().expect("non-empty profile");
        ctx.t = ctx.t.or(Some(end));
        ctx.c_max = ctx.c_max.or(Some(e.max_concentration(end)));
    }
    ctx.t = args.t.or(ctx.t);
    ctx.c_max = args.c_max.or(ctx.c_max);

    if let Some(n) = args.sample {
        let chain = sample_threshold_chain(&levels, &ctx, n, args.seed, args.allow_singular, &Default::default())?;
        let mut w = output(&args.out)?;
        let header: Vec<String> = levels
            .iter()
            .enumerate()
            .map(|(i, l)| if l.label.is_empty() { format!("gamma_{}", i + 1) } else { format!("gamma_{}", l.label) })
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for row in &chain.gammas {
            let cells: Vec<String> = row.iter().map(|g| format!("{g:.16e}")).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        w.flush()?;
        return Ok(());
    }

    let mut transitions = Vec::new();
    let mut problems = Vec::new();
    for pair in levels.windows(2) {
        let r = check_compatibility(&pair[0], &pair[1], &ctx)?;
        if !r.compatible || (r.delta == 0.0 && !args.allow_singular) {
            let why = if r.compatible { "shift is zero; pass --allow-singular to couple deterministically" } else { &r.reason };
            problems.push(format!("'{}' -> '{}': {why}", pair[0].label, pair[1].label));
        }
        transitions.push(json!({
            "from": pair[0].label,
            "to": pair[1].label,
            "case": r.case,
            "delta": r.delta,
            "compatible": r.compatible,
            "reason": r.reason,
        }));
    }
    let mut doc = json!({
        "context": ctx,
        "deltas": transitions.iter().map(|t| t["delta"].clone()).collect::<Vec<_>>(),
        "transitions": transitions,
        "compatible": problems.is_empty(),
    });
    if let Some(e) = &exposure {
        let t = ctx.t.expect("set from the exposure");
        let mut per_level = Vec::new();
        for l in &levels {
            per_level.push(json!({
                "label": l.label,
                "probit": probit_value(l, e, t)?,
                "fraction": injured_fraction(l, e, t)?,
            }));
        }
        doc["levels"] = json!(per_level);
    }
    let mut w = output(&args.out)?;
    writeln!(w, "{}", serde_json::to_string_pretty(&doc).expect("report serializes"))?;
    w.flush()?;
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("incompatible levels: {}", problems.join("; "))))
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Build { config, out } => build(&config, &out),
        Command::Grid { model, what, n, out } => grid(&model, what, n, &out),
        Command::Sample { model, n, seed, normal, out } => {
            if n == 0 {
                return Err(Failure::Input("sample size must be at least 1".into()));
            }
            sample(&model, n, seed, normal, &out)
        }
        Command::Validate {
            model,
            grid,
            tau_samples,
            seed,
        } => validate(&model, grid, tau_samples, seed),
        Command::Probit(args) => {
            if !args.check && args.sample.is_none() {
                return Err(Failure::Input("probit needs --check or --sample N".into()));
            }
            probit(&args)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
