//! `tucker-bench`: generate synthetic instances, recover cores, sweep dimensions.
//!
//! Exit codes: 0 success, 1 I/O or other failure, 2 invalid arguments,
//! 3 Kronecker size-guard refusal, 4 numerical failure.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

use sparse_tucker::bench::{read_instance, recover_instance, run_bench, write_instance, BenchPlan, BenchSink};
use sparse_tucker::dtf::save_tensor;
use sparse_tucker::synthetic::{generate_instance, ExperimentSpec, SpreadConvention};
use sparse_tucker::{Error, Method, RecoveryConfig};

#[derive(Parser)]
#[command(name = "tucker-bench", version, about = "Sparse Tucker core recovery benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one synthetic instance (X, A1..AN, Y and a JSON sidecar).
    Generate(GenerateArgs),
    /// Recover the core of an instance directory and write a JSON report.
    Recover(RecoverArgs),
    /// Sweep core sizes and emit CSV tables.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SpecFlags {
    /// Number of nonzero core entries.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Read the second parameter of each normal draw as a variance or a standard deviation.
    #[arg(long, value_parser = parse_convention)]
    convention: Option<SpreadConvention>,
    #[arg(long)]
    value_mean: Option<f64>,
    #[arg(long)]
    value_spread: Option<f64>,
    #[arg(long)]
    noise_spread: Option<f64>,
}

impl SpecFlags {
    fn apply(&self, spec: &mut ExperimentSpec) {
        if let Some(k) = self.k {
            spec.support_size = k;
        }
        if let Some(s) = self.seed {
            spec.seed = s;
        }
        if let Some(c) = self.convention {
            spec.convention = c;
        }
        if let Some(v) = self.value_mean {
            spec.support_value_mean = v;
        }
        if let Some(v) = self.value_spread {
            spec.support_value_spread = v;
        }
        if let Some(v) = self.noise_spread {
            spec.noise_spread = v;
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Core dimensions, comma separated.
    #[arg(long = "J", value_delimiter = ',', required = true)]
    j: Vec<usize>,
    /// Observed dimensions, comma separated; one value per mode.
    #[arg(long = "I", value_delimiter = ',', required = true)]
    i: Vec<usize>,
    #[command(flatten)]
    spec: SpecFlags,
    /// Replicate index; selects the random stream for the seed.
    #[arg(long, default_value_t = 0)]
    replicate: u64,
    /// JSON file with experiment fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Args)]
struct ConfigFlags {
    /// JSON file with recovery fields (flat keys); flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long = "L")]
    step_constant: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    change_tol: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long = "R")]
    prune_window: Option<usize>,
    #[arg(long)]
    kron_guard: Option<u128>,
}

impl ConfigFlags {
    fn resolve(&self) -> Result<RecoveryConfig, Error> {
        let mut cfg: RecoveryConfig = match &self.config {
            Some(p) => read_json(p)?,
            None => RecoveryConfig::default(),
        };
        let f64s = [
            (self.lambda, &mut cfg.lambda),
            (self.step_constant, &mut cfg.step_constant),
            (self.tol, &mut cfg.tol),
            (self.change_tol, &mut cfg.change_tol),
            (self.a, &mut cfg.a),
            (self.b, &mut cfg.b),
            (self.gamma, &mut cfg.gamma),
            (self.r, &mut cfg.r),
        ];
        for (flag, field) in f64s {
            if let Some(v) = flag {
                *field = v;
            }
        }
        if let Some(v) = self.max_iters {
            cfg.max_iters = v;
        }
        if let Some(v) = self.prune_window {
            cfg.prune_window = v;
        }
        if let Some(v) = self.kron_guard {
            cfg.kron_guard = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct RecoverArgs {
    /// Instance directory written by `generate`.
    instance: PathBuf,
    #[arg(long, default_value = "four_stage")]
    method: String,
    #[command(flatten)]
    config: ConfigFlags,
    /// Report path; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Also write the recovered core as a DTF-1 file.
    #[arg(long)]
    estimate: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Core sizes J to sweep (every mode gets the same size).
    #[arg(long = "J-list", value_delimiter = ',', required = true)]
    j_list: Vec<usize>,
    /// Observed size is round(ratio * J) unless --I is given.
    #[arg(long, default_value_t = 0.68)]
    ratio: f64,
    /// Fixed observed size for every cell.
    #[arg(long = "I")]
    i: Option<usize>,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 20)]
    replicates: usize,
    #[arg(long, value_delimiter = ',', default_value = "fista,fista_mvpp,fista_pp,four_stage")]
    methods: Vec<String>,
    #[command(flatten)]
    spec: SpecFlags,
    #[command(flatten)]
    config: ConfigFlags,
    /// Keep timing out of the accuracy table so it is byte-stable; timing goes to `<out stem>.timing.csv`.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    deterministic: bool,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// CSV path; stdout when absent (timing then goes to stderr).
    #[arg(short, long)]
    out: Option<PathBuf>,
}

fn parse_convention(s: &str) -> Result<SpreadConvention, String> {
    match s {
        "variance" => Ok(SpreadConvention::Variance),
        "stddev" => Ok(SpreadConvention::Stddev),
        _ => Err(format!("expected `variance` or `stddev`, got `{s}`")),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidParameter(format!("config {}: {e}", path.display())))
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, Error> {
    names.iter().map(|n| n.trim().parse()).collect()
}

fn generate(args: GenerateArgs) -> Result<(), Error> {
    let mut spec: ExperimentSpec = match &args.config {
        Some(p) => read_json(p)?,
        None => ExperimentSpec::default(),
    };
    spec.core_shape = args.j;
    spec.observed_shape = args.i;
    spec.replicates = 1;
    args.spec.apply(&mut spec);
    spec.validate()?;
    let inst = generate_instance(&spec, args.replicate)?;
    for p in write_instance(&args.out, &spec, &inst)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn recover(args: RecoverArgs) -> Result<(), Error> {
    let method: Method = args.method.parse()?;
    let cfg = args.config.resolve()?;
    let inst = read_instance(&args.instance)?;
    let (report, estimate) = recover_instance(&inst, &cfg, method)?;
    let json = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(p) => fs::write(p, json)?,
        None => io::stdout().write_all(json.as_bytes())?,
    }
    if let Some(p) = &args.estimate {
        save_tensor(p, &estimate)?;
    }
    Ok(())
}

fn timing_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.timing.csv"))
}

fn bench(args: BenchArgs) -> Result<(), Error> {
    let methods = parse_methods(&args.methods)?;
    let cfg = args.config.resolve()?;
    let mut template = ExperimentSpec {
        replicates: args.replicates,
        ..ExperimentSpec::default()
    };
    args.spec.apply(&mut template);
    let plan = BenchPlan {
        j_list: args.j_list,
        ratio: args.ratio,
        observed: args.i,
        order: args.order,
        methods,
        template,
    };
    let threads = args.threads.max(1);
    let open = |p: &Path| -> Result<Box<dyn Write>, Error> { Ok(Box::new(BufWriter::new(File::create(p)?))) };
    let (mut main, mut timing): (Box<dyn Write>, Box<dyn Write>) = match &args.out {
        Some(p) => (open(p)?, if args.deterministic { open(&timing_path(p))? } else { Box::new(io::sink()) }),
        None => (Box::new(io::stdout()), Box::new(io::stderr())),
    };
    let mut sink = if args.deterministic {
        BenchSink::Split {
            accuracy: &mut main,
            timing: &mut timing,
        }
    } else {
        BenchSink::Combined(&mut main)
    };
    run_bench(&plan, &cfg, threads, &mut sink)?;
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidShape(_)
        | Error::ModeOutOfRange { .. }
        | Error::DimensionMismatch(_)
        | Error::InvalidParameter(_)
        | Error::UnknownMethod(_) => 2,
        Error::SizeGuard { .. } => 3,
        Error::NonFinite { .. } => 4,
        Error::Format(_) | Error::Io(_) | Error::Json(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Recover(a) => recover(a),
        Command::Bench(a) => bench(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tucker-bench: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
