use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tagscope::aead::Registry;
use tagscope::harness::{
    render_report, run_experiment, write_report, ExperimentPlan, ExperimentReport, ReportFormat,
    Scale, Tool,
};
use tagscope::stream::{export_stream, generate_stream, PmnMode, StreamConfig};
use tagscope::Error;

/// Environment variable holding the worker thread count.
const WORKERS_ENV: &str = "TAGSCOPE_WORKERS";

const EXIT_PLAN: u8 = 1;
const EXIT_CALIBRATION: u8 = 2;

#[derive(Parser)]
#[command(
    name = "tagscope",
    version,
    about = "Randomness assessment of AEAD authentication tag streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cipher x PMN mode x tool grid and write report.{txt,csv,json}.
    Run {
        #[arg(long, value_delimiter = ',', default_value = "aes128gcm,aes256gcm")]
        ciphers: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "zero,counter,random")]
        modes: Vec<PmnMode>,
        #[arg(long, value_delimiter = ',', default_value = "battery,sac,eacirc")]
        tools: Vec<Tool>,
        #[arg(long, default_value = "desk")]
        scale: Scale,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = "tagscope-out")]
        out: PathBuf,
    },
    /// Write a raw tag stream plus a `.meta` sidecar for external batteries.
    Export {
        #[arg(long)]
        cipher: String,
        #[arg(long, default_value = "zero")]
        mode: PmnMode,
        #[arg(long)]
        tags: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-render a saved report.json.
    Report {
        #[arg(long, default_value = "tagscope-out/report.json")]
        input: PathBuf,
        #[arg(long, default_value = "text")]
        format: ReportFormat,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn configure_workers() -> Result<(), Error> {
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{WORKERS_ENV}={v} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    configure_workers()?;
    let registry = Registry::with_builtins();
    match cli.command {
        Command::Run {
            ciphers,
            modes,
            tools,
            scale,
            seed,
            out,
        } => {
            let plan = ExperimentPlan {
                ciphers,
                modes,
                tools,
                scale,
                master_seed: seed,
                out_dir: Some(out.clone()),
            };
            let report = run_experiment(&registry, &plan)?;
            write_report(
                &report,
                &out,
                &[ReportFormat::Text, ReportFormat::Csv, ReportFormat::Json],
            )?;
            print!("{}", render_report(&report, ReportFormat::Text)?);
            eprintln!("reports written to {}", out.display());
            if report.calibration_failed {
                return Ok(ExitCode::from(EXIT_CALIBRATION));
            }
        }
        Command::Export {
            cipher,
            mode,
            tags,
            seed,
            out,
        } => {
            let stream = generate_stream(&registry, &StreamConfig::new(cipher, mode, tags, seed))?;
            let meta = export_stream(&stream, &out)?;
            eprintln!(
                "{} bytes written to {} (metadata in {})",
                stream.bytes.len(),
                out.display(),
                meta.display()
            );
        }
        Command::Report { input, format, out } => {
            let report = ExperimentReport::from_json(&std::fs::read_to_string(&input)?)?;
            let rendered = render_report(&report, format)?;
            match out {
                Some(path) => std::fs::write(path, rendered)?,
                None => print!("{rendered}"),
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(EXIT_PLAN);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_PLAN)
        }
    }
}
