//! Command-line front end: validate a scenario's timing, run the full
//! chain into an artifact directory, sweep one knob into an aggregate CSV,
//! or re-analyze an existing raw bit file.
//!
//! Exit codes: 0 success, 1 validation or randomness-test failure,
//! 2 usage or configuration error, 3 I/O error.

use clap::{Args, Parser, Subcommand};
use qrng_sim::analysis::autocorr::{autocorrelation, max_abs_autocorrelation};
use qrng_sim::analysis::battery::{run_battery, TestStatus};
use qrng_sim::analysis::entropy::bit_min_entropy;
use qrng_sim::extraction::{BitStream, Provenance};
use qrng_sim::pipeline::{run_scenario, sweep_scenario, write_outputs, SweepParameter};
use qrng_sim::{Error, Result, ScenarioConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "qrng-sim",
    version,
    about = "Desk-scale simulation of a phase-noise quantum random number generator"
)]
struct Cli {
    /// Scenario file (TOML). Omitted: the built-in reference operating point.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for frames and sweep points (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration and its sampling-timing requirements.
    Validate,
    /// Run the full chain and write every artifact into a directory.
    Run(RunArgs),
    /// Run the scenario once per value of one knob and aggregate a CSV.
    Sweep(SweepArgs),
    /// Re-analyze an existing packed raw bit file.
    Analyze(AnalyzeArgs),
}

#[derive(Args)]
struct ShapeArgs {
    /// Frames to acquire (overrides the config).
    #[arg(long)]
    frames: Option<usize>,

    /// Samples per frame (overrides the config).
    #[arg(long)]
    frame_length: Option<usize>,
}

impl ShapeArgs {
    fn apply(&self, config: &mut ScenarioConfig) {
        if let Some(frames) = self.frames {
            config.simulation.frame_count = frames;
        }
        if let Some(frame_length) = self.frame_length {
            config.simulation.frame_length = frame_length;
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Output directory for the artifact set.
    #[arg(long)]
    out_dir: PathBuf,

    #[command(flatten)]
    shape: ShapeArgs,
}

#[derive(Args)]
struct SweepArgs {
    /// Swept knob: delay, coherence-time, control-error-std,
    /// sampling-period, or white-noise-std.
    #[arg(long)]
    parameter: String,

    /// Comma-separated values in the knob's SI unit.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<f64>,

    /// Path of the aggregated CSV.
    #[arg(long)]
    out: PathBuf,

    #[command(flatten)]
    shape: ShapeArgs,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Packed raw bit file, as written by `run`.
    file: PathBuf,

    /// Bits to analyze; defaults to every byte of the file.
    #[arg(long)]
    bits: Option<usize>,

    /// Battery significance level.
    #[arg(long, default_value_t = 0.01)]
    alpha: f64,

    /// Autocorrelation lags to report.
    #[arg(long, default_value_t = 100)]
    max_lag: usize,

    /// Treat the stream as XOR-extracted rather than raw.
    #[arg(long)]
    extracted: bool,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    if e.is_usage() {
        2
    } else if matches!(e, Error::Io(_)) {
        3
    } else {
        1
    }
}

fn execute(cli: Cli) -> Result<ExitCode> {
    if let Some(threads) = cli.threads {
        rayon_pool(threads)?;
    }
    let mut config = match &cli.config {
        Some(path) => ScenarioConfig::load(path)?,
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.master_seed = seed;
    }

    match cli.command {
        Command::Validate => cmd_validate(&config),
        Command::Run(args) => cmd_run(config, args),
        Command::Sweep(args) => cmd_sweep(config, args),
        Command::Analyze(args) => cmd_analyze(&args),
    }
}

fn rayon_pool(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))
}

fn cmd_validate(config: &ScenarioConfig) -> Result<ExitCode> {
    config.validate()?;
    let resolved = config.resolved_laser()?;
    let verdict = config.timing_check()?.evaluate()?;
    println!(
        "coherence time {:.3} ns, delay {:.0} ps, sampling period {:.0} ps",
        resolved.coherence_time * 1e9,
        config.interferometer.delay_s * 1e12,
        config.sampling.period_s * 1e12,
    );
    print!("{}", verdict.summary());
    Ok(if verdict.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_run(mut config: ScenarioConfig, args: RunArgs) -> Result<ExitCode> {
    args.shape.apply(&mut config);
    let run = run_scenario(&config)?;
    let written = write_outputs(&run, &args.out_dir)?;
    println!(
        "wrote {} artifacts to {}",
        written.len(),
        args.out_dir.display()
    );
    println!(
        "raw bits: {} + {}; extracted bits: {}",
        run.bin1.len(),
        run.bin2.len(),
        run.bin3.as_ref().map_or(0, |b| b.len()),
    );
    println!(
        "headline bias {:+.6}, min-entropy {:.4} bits/bit, battery {}",
        run.headline().bias(),
        run.bit_min_entropy_bits,
        if run.battery.overall_pass {
            "pass"
        } else {
            "FAIL"
        },
    );
    println!(
        "timing: {}",
        if run.timing.pass {
            "pass"
        } else {
            "FAIL (see report.toml)"
        }
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_sweep(mut config: ScenarioConfig, args: SweepArgs) -> Result<ExitCode> {
    args.shape.apply(&mut config);
    let parameter = SweepParameter::parse(&args.parameter)?;
    let points = sweep_scenario(&config, parameter, &args.values)?;
    let mut writer = std::io::BufWriter::new(std::fs::File::create(&args.out)?);
    qrng_sim::pipeline::write_sweep_csv(parameter, &points, &mut writer)?;
    use std::io::Write;
    writer.flush()?;
    println!(
        "wrote {} sweep points to {}",
        points.len(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<ExitCode> {
    let mut bytes = std::fs::read(&args.file)?;
    let available = bytes.len() * 8;
    let bits = args.bits.unwrap_or(available);
    if bits > available {
        return Err(Error::Config(format!(
            "{} holds {available} bits, {bits} requested",
            args.file.display()
        )));
    }
    bytes.truncate(bits.div_ceil(8));
    // Zero any padding past the requested length so the packed format's
    // tail invariant holds (bits are MSB-first within a byte).
    if !bits.is_multiple_of(8) {
        let last = bytes.len() - 1;
        bytes[last] &= !(0xFFu8 >> (bits % 8));
    }
    let provenance = if args.extracted {
        Provenance::XorExtracted
    } else {
        Provenance::Raw
    };
    let stream = BitStream::from_bytes(bytes, bits, provenance)?;

    println!("bits: {}", stream.len());
    println!(
        "ones fraction: {:.6} (bias {:+.6})",
        stream.ones_fraction(),
        stream.bias()
    );
    println!("min-entropy: {:.6} bits/bit", bit_min_entropy(&stream)?);
    // A constant stream has no defined autocorrelation; report that and let
    // the battery deliver the verdict rather than aborting the analysis.
    match autocorrelation(&stream, args.max_lag.min(stream.len() - 1).max(1)) {
        Ok(coefficients) => {
            let (worst, lag) = max_abs_autocorrelation(&coefficients);
            println!("max |autocorrelation| {:.6} at lag {lag}", worst);
        }
        Err(_) => println!("max |autocorrelation|: undefined (constant stream)"),
    }

    let report = run_battery(&stream, args.alpha)?;
    println!("battery (alpha {}):", report.alpha);
    for record in &report.records {
        let status = match record.status {
            TestStatus::Pass => "pass",
            TestStatus::Fail => "FAIL",
            TestStatus::NotRun => "not run",
        };
        match (record.p_value, &record.note) {
            (Some(p), _) => println!("  {:24} {status:8} p = {p:.6}", record.name),
            (None, Some(note)) => println!("  {:24} {status:8} ({note})", record.name),
            (None, None) => println!("  {:24} {status}", record.name),
        }
    }
    println!(
        "battery: {}",
        if report.overall_pass { "pass" } else { "FAIL" }
    );
    Ok(if report.overall_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
