use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use wakearb::acoustics::Corpus;
use wakearb::harness::{self, RunOptions, Scenario, SuiteKind};
use wakearb::protocol::{describe_event, read_wire_log, TransportKind};

#[derive(Parser)]
#[command(name = "wakearb", version, about = "Competitive wake-word arbitration experiments")]
struct Cli {
    /// Base seed, overriding the scenario's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Network backend; defaults to $WAKEARB_TRANSPORT, then `sim`.
    #[arg(long, global = true, value_enum)]
    transport: Option<Transport>,
    /// Fixed loopback ports (base + node id) for the socket backend.
    #[arg(long, global = true)]
    base_port: Option<u16>,
    /// Override the trial count.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Where CSV, summaries, wire logs and calibration files go.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Transport {
    Sim,
    Socket,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Network,
    Orientation,
    Noise,
}

#[derive(Subcommand)]
enum Command {
    /// Run both calibration passes and save the calibration file.
    Calibrate { scenario: PathBuf },
    /// Run every trial of a scenario.
    Run { scenario: PathBuf },
    /// Run a built-in comparison.
    Suite {
        #[arg(value_enum)]
        kind: Suite,
    },
    /// Print a binary wire log one message per line.
    DecodeLog { file: PathBuf },
    /// Write the synthetic wake words as WAV files.
    ExportCorpus { dir: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn options(cli: &Cli) -> RunOptions {
    let transport = match cli.transport {
        Some(Transport::Sim) => TransportKind::Sim,
        Some(Transport::Socket) => TransportKind::Socket,
        None => TransportKind::from_env(),
    };
    RunOptions { transport, base_port: cli.base_port, seed: cli.seed, trials: cli.trials }
}

fn calibration_path(out_dir: &Path, s: &Scenario) -> PathBuf {
    s.calibration_file.clone().unwrap_or_else(|| out_dir.join(format!("{}.calibration.toml", s.name)))
}

fn run(cli: &Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let opts = options(cli);
    match &cli.command {
        Command::Calibrate { scenario } => {
            let s = Scenario::load(scenario)?;
            let artifact = harness::run_calibration(&s, &opts)?;
            let path = calibration_path(&cli.out_dir, &s);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            artifact.save(&path)?;
            for (id, row) in artifact.matrix.ids().iter().zip(artifact.matrix.rows()) {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
                println!("{id:>4}  {}", cells.join("  "));
            }
            for w in artifact.matrix.warnings() {
                println!("warning: {w}");
            }
            println!("saved {}", path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { scenario } => {
            let mut s = Scenario::load(scenario)?;
            if s.calibration_file.is_none() {
                let p = calibration_path(&cli.out_dir, &s);
                if p.exists() {
                    s.calibration_file = Some(p);
                }
            }
            let out = harness::run_scenario(&s, &opts)?;
            out.write_files(&cli.out_dir)?;
            print!("{}", out.summary());
            Ok(if out.failure_dominated() { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::Suite { kind } => {
            let kind = match kind {
                Suite::Network => SuiteKind::Network,
                Suite::Orientation => SuiteKind::Orientation,
                Suite::Noise => SuiteKind::Noise,
            };
            let report = harness::experiment_suite(kind, &opts)?;
            report.write_files(&cli.out_dir)?;
            print!("{}", report.to_table());
            let dominated = report.rows.iter().any(|r| r.run.failure_dominated());
            Ok(if dominated { ExitCode::from(2) } else { ExitCode::SUCCESS })
        }
        Command::DecodeLog { file } => {
            let events = read_wire_log(std::fs::File::open(file)?)?;
            for e in &events {
                println!("{}", describe_event(e));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportCorpus { dir } => {
            for p in harness::export_corpus(&Corpus::synthetic(), dir)? {
                println!("{}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
