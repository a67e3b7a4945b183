use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imr_cli::commands::{self, DiscoverArgs, ExtractArgs};
use imr_cli::service::{self, AppState};
use imr_cli::store::Store;
use imr_cli::{CliError, TransportConfig};
use imr_core::model::ExportFormat;

#[derive(Parser)]
#[command(name = "imr", version, about = "Rule-guided process discovery from event logs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 1]"))
    }
}

fn confidence_threshold(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("{v} is outside (0, 1]"))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Discover a process tree, optionally constrained by rules.
    Discover {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value_t = 0.2, value_parser = unit_interval)]
        sup: f64,
        /// Model file; the model goes to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// tree-text, tree-json, dot or pnml.
        #[arg(long, default_value = "tree-text")]
        format: ExportFormat,
        /// Worker threads; 1 runs sequentially.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Check or mine Declare rules.
    Rules {
        #[command(subcommand)]
        command: RulesCommand,
    },
    /// Extract rules from a process description through a chat model.
    Extract {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        description: PathBuf,
        /// Scripted replies; without it the endpoint comes from IMR_LLM_ENDPOINT.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Answers to the model's questions, used in order.
        #[arg(long)]
        answers: Vec<PathBuf>,
        /// Read answers from the console.
        #[arg(long)]
        interactive: bool,
        /// Rules file; the rules go to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Save the exchanges as a replayable transcript.
        #[arg(long)]
        record: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        data_dir: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum RulesCommand {
    /// Confidence of each rule on the log, plus validation.
    Check {
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        rules: PathBuf,
    },
    /// All rules over the log alphabet at or above a confidence threshold.
    Mine {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = 1.0, value_parser = confidence_threshold)]
        min_confidence: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Discover { log, rules, sup, out, format, workers } => commands::discover(&DiscoverArgs {
            log,
            rules,
            sup,
            out,
            format,
            workers,
        }),
        Command::Rules { command: RulesCommand::Check { log, rules } } => commands::rules_check(&log, &rules),
        Command::Rules { command: RulesCommand::Mine { log, min_confidence, out } } => {
            commands::rules_mine(&log, min_confidence, out.as_deref())
        }
        Command::Extract { log, description, transcript, answers, interactive, out, record } => {
            commands::extract(&ExtractArgs {
                log,
                description,
                transport: TransportConfig::from_flag(transcript),
                answers,
                interactive,
                out,
                record,
            })
        }
        Command::Serve { data_dir, bind, transcript } => {
            let store = Store::open(&data_dir).map_err(|e| CliError::Internal(format!("{}: {e}", data_dir.display())))?;
            let state = AppState::new(store, TransportConfig::from_flag(transcript));
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
            rt.block_on(service::serve(state, &bind))
                .map_err(|e| CliError::Internal(format!("{bind}: {e}")))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
