//! Command-line front end: dataset generation, auditing, certificate
//! evaluation, and sample-size estimation.
//!
//! Exit codes are the machine contract: 0 fair, 10 unfair, 2 bad flags,
//! 3 I/O failure, 4 unparseable dataset, 5 zero-mass group.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spsf_audit::auditor::{audit, AuditConfig, AuditMode, Verdict};
use spsf_audit::error::AuditError;
use spsf_audit::generators::{
    clwe_instance, planted_dataset, random_unit, table_example_dataset, ClweSpec, Hypothesis,
    PlantedSpec,
};
use spsf_audit::halfspace::gaussian_quantile;
use spsf_audit::io::{read_certificate, read_dataset, write_dataset, write_witnesses};
use spsf_audit::metrics::{hoeffding_sample_size, weighted_unfairness};
use spsf_audit::oracle::OracleKind;
use spsf_audit::report::{to_json_17, ReportFile};

const EXIT_FAIR: u8 = 0;
const EXIT_FLAGS: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_DATASET: u8 = 4;
const EXIT_ZERO_MASS: u8 = 5;
const EXIT_UNFAIR: u8 = 10;

#[derive(Parser)]
#[command(name = "spsf-audit", version, about = "Statistical parity subgroup fairness auditing over halfspace subgroups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset CSV.
    Generate(GenerateArgs),
    /// Audit a labeled dataset and write a report.
    Audit(AuditArgs),
    /// Evaluate a certificate halfspace on a dataset.
    EvalCert(EvalCertArgs),
    /// Print Hoeffding sample sizes and delta budgets.
    Estimate(EstimateArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    GaussianPlanted,
    ClweAlt,
    ClweNull,
    Table1,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Feature dimension (ignored for table1).
    #[arg(long)]
    d: Option<usize>,
    /// Sample count (ignored for table1).
    #[arg(long)]
    n: Option<usize>,
    /// Master seed; required for every random kind.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
    /// Label flip probability (gaussian-planted).
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Planted positive rate (gaussian-planted).
    #[arg(long = "mu-plant", default_value_t = 0.5)]
    mu_plant: f64,
    /// Modular period T (clwe kinds).
    #[arg(long = "T")]
    period: Option<f64>,
    /// Noise scale sigma (clwe-alt); defaults to 0.01 T.
    #[arg(long)]
    sigma: Option<f64>,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    a: f64,
    #[arg(long)]
    b: f64,
    #[arg(long = "grid")]
    grid: usize,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long)]
    oracle: String,
    #[arg(long, default_value = "constructive")]
    mode: String,
    #[arg(long = "gamma-prime", default_value_t = 0.05)]
    gamma_prime: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalCertArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    certificate: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    epsilon: f64,
    #[arg(long)]
    delta: f64,
    /// Grid count for the per-oracle-call delta budget.
    #[arg(long = "grid")]
    grid: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Audit(args) => cmd_audit(args),
        Command::EvalCert(args) => cmd_eval_cert(args),
        Command::Estimate(args) => cmd_estimate(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &AuditError) -> u8 {
    match err {
        AuditError::Io(_) => EXIT_IO,
        AuditError::Parse { .. } => EXIT_DATASET,
        AuditError::EmptyGroup => EXIT_ZERO_MASS,
        _ => EXIT_FLAGS,
    }
}

fn flag_error(msg: &str) -> AuditError {
    AuditError::InvalidInput(msg.to_string())
}

fn cmd_generate(args: GenerateArgs) -> Result<u8, AuditError> {
    match args.kind {
        Kind::Table1 => {
            let data = table_example_dataset();
            write_dataset(&args.out, &data)?;
            println!("wrote {} samples to {}", data.len(), args.out.display());
        }
        Kind::GaussianPlanted => {
            let (d, n, seed) = required_dns(&args)?;
            let normal = random_unit(d, seed ^ 0x6469_7265_6374_696F);
            let threshold = gaussian_quantile(1.0 - args.mu_plant)?;
            let spec = PlantedSpec::new(normal, threshold, args.noise)?;
            let (data, _) = planted_dataset(d, n, &spec, seed)?;
            write_dataset(&args.out, &data)?;
            println!("wrote {} samples to {}", data.len(), args.out.display());
        }
        Kind::ClweAlt | Kind::ClweNull => {
            let (d, n, seed) = required_dns(&args)?;
            let period = args
                .period
                .ok_or_else(|| flag_error("--T is required for clwe kinds"))?;
            let sigma = args.sigma.unwrap_or(0.01 * period);
            let secret = random_unit(d, seed ^ 0x7365_6372_6574);
            let spec = ClweSpec::new(secret, period, sigma, n, seed)?;
            let hypothesis = match args.kind {
                Kind::ClweAlt => Hypothesis::Alternative,
                _ => Hypothesis::Null,
            };
            let instance = clwe_instance(&spec, hypothesis)?;
            write_dataset(&args.out, &instance.dataset)?;
            println!("wrote {} samples to {}", instance.dataset.len(), args.out.display());
            if let Some(witnesses) = &instance.witnesses {
                let sidecar = args.out.with_extension("witnesses.json");
                write_witnesses(&sidecar, witnesses)?;
                println!("wrote witnesses to {}", sidecar.display());
            }
        }
    }
    Ok(EXIT_FAIR)
}

fn required_dns(args: &GenerateArgs) -> Result<(usize, usize, u64), AuditError> {
    let d = args.d.ok_or_else(|| flag_error("--d is required"))?;
    let n = args.n.ok_or_else(|| flag_error("--n is required"))?;
    let seed = args
        .seed
        .ok_or_else(|| flag_error("--seed is required; there is no silent nondeterminism"))?;
    Ok((d, n, seed))
}

fn cmd_audit(args: AuditArgs) -> Result<u8, AuditError> {
    let mode = match args.mode.as_str() {
        "constructive" => AuditMode::Constructive,
        "nonconstructive" => AuditMode::NonConstructive,
        other => return Err(flag_error(&format!("unknown mode {other:?}"))),
    };
    let oracle = OracleKind::parse(&args.oracle)?;
    let data = read_dataset(&args.data)?;
    let cfg = AuditConfig::new(
        args.a,
        args.b,
        args.grid,
        args.epsilon,
        args.delta,
        oracle,
        mode,
        args.gamma_prime,
        args.seed,
    );
    let started = std::time::Instant::now();
    let report = audit(&data, &cfg)?;
    let runtime_ms = started.elapsed().as_millis();
    ReportFile::from_report(&report).write(&args.out)?;

    println!(
        "audited {} samples ({} learn / {} estimate) in {} ms",
        data.len(),
        report.n_learn,
        report.n_estimate,
        runtime_ms
    );
    println!(
        "gamma_hat = {:.6} +- {:.6} at mu = {:.4}",
        report.gamma_hat.point, report.gamma_hat.half_width, report.certificate_mu
    );
    match report.verdict {
        Verdict::Unfair => {
            if mode == AuditMode::Constructive {
                println!(
                    "verdict: unfair (certificate normal {:?}, threshold {:.6})",
                    report.certificate.normal(),
                    report.certificate.threshold()
                );
            } else {
                println!("verdict: unfair (a discriminated halfspace subgroup exists)");
            }
            Ok(EXIT_UNFAIR)
        }
        Verdict::Fair => {
            println!("verdict: fair at gamma' = {}", args.gamma_prime);
            Ok(EXIT_FAIR)
        }
    }
}

fn cmd_eval_cert(args: EvalCertArgs) -> Result<u8, AuditError> {
    if !(args.confidence > 0.0 && args.confidence < 1.0) {
        return Err(flag_error("--confidence must be in (0,1)"));
    }
    let data = read_dataset(&args.data)?;
    let certificate = read_certificate(&args.certificate)?;
    let measurement = weighted_unfairness(&data, data.labels(), &certificate, args.confidence)?;
    let json = to_json_17(&measurement)?;
    print!("{}", String::from_utf8_lossy(&json));
    Ok(EXIT_FAIR)
}

fn cmd_estimate(args: EstimateArgs) -> Result<u8, AuditError> {
    let n = hoeffding_sample_size(args.epsilon, args.delta)?;
    println!(
        "samples for +-{} at confidence {}: {}",
        args.epsilon,
        1.0 - args.delta,
        n
    );
    if let Some(grid) = args.grid {
        if grid < 1 {
            return Err(flag_error("--grid must be >= 1"));
        }
        println!(
            "per-oracle-call delta budget for grid {}: {}",
            grid,
            args.delta / (2.0 * grid as f64)
        );
    }
    Ok(EXIT_FAIR)
}
