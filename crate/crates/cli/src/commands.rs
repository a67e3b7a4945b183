//! The batch subcommands: discover, rules check, rules mine, extract.

use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use imr_core::declare::{confidence, format_rules, mine_rules, validate_text, DeclareRule};
use imr_core::discovery::DiscoveryParams;
use imr_core::log::EventLog;
use imr_core::model::{export, ExportFormat};
use imr_core::report::run_discovery;
use imr_llm::{Proposal, RefinementSession};

use crate::{load_log, read_text, CliError, TransportConfig};

/// Parses and validates a rules file against the log alphabet. Any error
/// fails the whole file; warnings go to stderr.
pub fn load_rules(path: &Path, log: &EventLog) -> Result<Vec<DeclareRule>, CliError> {
    let (rules, report) = validate_text(&read_text(path)?, log.alphabet());
    if report.has_errors() {
        return Err(CliError::Validation(report));
    }
    if !report.items.is_empty() {
        eprint!("{report}");
    }
    Ok(rules)
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Internal(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub struct DiscoverArgs {
    pub log: PathBuf,
    pub rules: Option<PathBuf>,
    pub sup: f64,
    pub out: Option<PathBuf>,
    pub format: ExportFormat,
    pub workers: Option<usize>,
}

/// Writes the model; the summary goes to stdout when the model goes to a
/// file, to stderr otherwise.
pub fn discover(args: &DiscoverArgs) -> Result<(), CliError> {
    let log = load_log(&args.log)?;
    let rules = match &args.rules {
        Some(p) => load_rules(p, &log)?,
        None => Vec::new(),
    };
    let params = DiscoveryParams {
        sup: args.sup,
        workers: args.workers,
        ..DiscoveryParams::default()
    };
    let report = run_discovery(&log, &rules, &params).map_err(|e| CliError::Internal(e.to_string()))?;
    write_or_print(args.out.as_deref(), &export(&report.tree, args.format))?;
    if args.out.is_some() {
        print!("{}", report.summary());
    } else {
        eprint!("{}", report.summary());
    }
    Ok(())
}

/// Prints each rule with its confidence on the log, then the validation
/// report. Unknown labels fail the check.
pub fn rules_check(log_path: &Path, rules_path: &Path) -> Result<(), CliError> {
    let log = load_log(log_path)?;
    let (rules, report) = validate_text(&read_text(rules_path)?, log.alphabet());
    for r in &rules {
        match confidence(r, &log) {
            Ok(c) => println!("{r}\tconfidence {c:.3}"),
            Err(e) => println!("{r}\t{e}"),
        }
    }
    if report.has_errors() {
        return Err(CliError::Validation(report));
    }
    print!("{report}");
    Ok(())
}

pub fn rules_mine(log_path: &Path, min_confidence: f64, out: Option<&Path>) -> Result<(), CliError> {
    let log = load_log(log_path)?;
    let rules = mine_rules(&log, min_confidence).map_err(|e| CliError::Parse(e.to_string()))?;
    write_or_print(out, &format_rules(&rules))
}

pub struct ExtractArgs {
    pub log: PathBuf,
    pub description: PathBuf,
    pub transport: TransportConfig,
    pub answers: Vec<PathBuf>,
    pub interactive: bool,
    pub out: Option<PathBuf>,
    pub record: Option<PathBuf>,
}

/// Reads answer lines until an empty line or end of input.
fn read_answers(input: &mut dyn BufRead) -> Result<String, CliError> {
    let mut text = String::new();
    loop {
        let mut line = String::new();
        let n = input.read_line(&mut line).map_err(|e| CliError::Internal(e.to_string()))?;
        if n == 0 || line.trim().is_empty() {
            break;
        }
        text.push_str(&line);
    }
    Ok(text)
}

/// Runs the conversation until the model returns valid rules. Questions
/// are answered from the `--answers` files in order, or from stdin in
/// interactive mode.
pub fn extract(args: &ExtractArgs) -> Result<(), CliError> {
    let log = load_log(&args.log)?;
    let mut session = RefinementSession::new("cli", log.alphabet().clone());
    let transport = args.transport.open(0)?;
    let mut answers = args.answers.iter();
    let mut text = read_text(&args.description)?;
    let stdin = io::stdin();
    let result = loop {
        match session.propose_rules(&*transport, &text) {
            Ok(Proposal::Questions(qs)) => {
                eprintln!("The model asks:");
                for (i, q) in qs.iter().enumerate() {
                    eprintln!("  {}. {q}", i + 1);
                }
                text = if let Some(p) = answers.next() {
                    read_text(p)?
                } else if args.interactive {
                    eprint!("Your answers (end with an empty line):\n> ");
                    io::stderr().flush().ok();
                    read_answers(&mut stdin.lock())?
                } else {
                    break Err(CliError::Unanswered(
                        "the model asked questions; pass --answers or --interactive".into(),
                    ));
                };
            }
            Ok(Proposal::Rules { report, repairs, .. }) => {
                if !report.items.is_empty() {
                    eprint!("{report}");
                }
                eprintln!("{} rules after {repairs} repair round(s)", session.enabled_rules().len());
                break write_or_print(args.out.as_deref(), &format_rules(&session.enabled_rules()));
            }
            Err(e) => break Err(e.into()),
        }
    };
    if let Some(p) = &args.record {
        let json = serde_json::to_string_pretty(session.exchanges()).map_err(|e| CliError::Internal(e.to_string()))?;
        std::fs::write(p, json).map_err(|e| CliError::Internal(format!("{}: {e}", p.display())))?;
    }
    result
}
