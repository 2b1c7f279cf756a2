//! `odrl`: evaluate, compare, normalise and compile usage policies.
//!
//! Every subcommand prints one JSON document on stdout. Diagnostics go to
//! stderr. Exit codes: 0 success (valid / no conflict / well-formed),
//! 1 negative outcome (violation / conflict / ill-formed), 2 input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use odrl_core::comparator::{
    asymmetric_conflict_with, bounded_conflict, normalize, symmetric_conflict_with, CompareError, CompareOptions,
    ConflictKind, OracleOptions,
};
use odrl_core::io::{
    check_report_json, error_json, parse_policy, parse_policy_unchecked, parse_schema, parse_vocabulary, parse_world,
    verdict_json, violation_report_json, write_native_policy, ParseError,
};
use odrl_core::matcher::{check_normal_form_rule, check_well_formed, WellFormednessReport};
use odrl_core::query::{emit_full_queries, emit_violation_queries, emit_world_inserts, EmitError};
use odrl_core::{evaluate_full, evaluate_lite, EvalError, FeatureSchema, FullPolicy, Saturate};
use serde_json::json;

#[derive(Parser)]
#[command(name = "odrl", version, about = "Evaluate and compare event-based ODRL policies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Symmetric,
    Asymmetric,
}

#[derive(Subcommand)]
enum Command {
    /// Check a policy against a world log.
    Evaluate {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        /// Saturate permissions with this action vocabulary first.
        #[arg(long)]
        vocab: Option<PathBuf>,
        /// Also check duty, remedy and consequence clauses.
        #[arg(long)]
        full: bool,
    },
    /// Decide whether two policies conflict.
    Compare {
        #[arg(long)]
        requester: PathBuf,
        #[arg(long)]
        provider: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Normalise inconsistent inputs instead of rejecting them.
        #[arg(long)]
        normalize: bool,
    },
    /// Print an equivalent consistent policy.
    Normalize {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Print the policy with permissions expanded along the action vocabulary.
    Saturate {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
    /// Write one SQL query per violation clause.
    EmitQuery {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        schema: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write INSERT statements for this world log.
        #[arg(long)]
        world: Option<PathBuf>,
    },
    /// Run the well-formedness checks only.
    Check {
        #[arg(long)]
        policy: PathBuf,
        #[arg(long)]
        schema: PathBuf,
    },
}

struct Failure {
    kind: String,
    message: String,
}

impl Failure {
    fn new(kind: impl Into<String>, message: impl Into<String>) -> Self {
        Failure { kind: kind.into(), message: message.into() }
    }
}

macro_rules! failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Failure::new(e.kind(), e.to_string())
            }
        }
    )*};
}

failure_from!(ParseError, EvalError, CompareError, EmitError);

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))
}

fn with_file<T>(path: &Path, r: Result<T, ParseError>) -> Result<T, Failure> {
    r.map_err(|e| Failure::new(e.kind(), format!("{}: {e}", path.display())))
}

fn load_schema(path: &Path) -> Result<FeatureSchema, Failure> {
    with_file(path, parse_schema(&read(path)?))
}

fn load_policy(path: &Path, schema: &FeatureSchema) -> Result<FullPolicy, Failure> {
    with_file(path, parse_policy(&read(path)?, schema))
}

/// Report document and exit status.
type Outcome = (serde_json::Value, u8);

fn run(command: Command) -> Result<Outcome, Failure> {
    match command {
        Command::Evaluate { policy, world, schema, vocab, full } => {
            let schema = load_schema(&schema)?;
            let mut policy = load_policy(&policy, &schema)?;
            if let Some(vocab) = vocab {
                let vocab = with_file(&vocab, parse_vocabulary(&read(&vocab)?))?;
                policy = policy.saturate(&vocab);
            }
            let world = with_file(&world, parse_world(&read(&world)?, &schema))?;
            let report = if full {
                evaluate_full(&policy, &world, &schema)?
            } else {
                if !policy.is_lite() {
                    eprintln!("note: duty, remedy and consequence clauses are skipped; pass --full to check them");
                }
                evaluate_lite(policy.lite(), &world, &schema)?
            };
            let code = if report.is_valid() { 0 } else { 1 };
            Ok((violation_report_json(&report, &schema), code))
        }
        Command::Compare { requester, provider, schema, mode, normalize } => {
            let schema = load_schema(&schema)?;
            let first = load_policy(&requester, &schema)?;
            let second = load_policy(&provider, &schema)?;
            let verdict = if first.is_lite() && second.is_lite() {
                let options = CompareOptions { normalize, ..CompareOptions::default() };
                match mode {
                    Mode::Asymmetric => asymmetric_conflict_with(first.lite(), second.lite(), &schema, &options)?,
                    Mode::Symmetric => symmetric_conflict_with(first.lite(), second.lite(), &schema, &options)?,
                }
            } else {
                eprintln!("note: full policies are compared by bounded enumeration; a clean result is not a proof");
                if normalize {
                    eprintln!("note: --normalize applies to Lite policies only and was ignored");
                }
                let kind = match mode {
                    Mode::Asymmetric => ConflictKind::Asymmetric,
                    Mode::Symmetric => ConflictKind::Symmetric,
                };
                bounded_conflict(&first, &second, &schema, kind, &OracleOptions::default())?
            };
            let code = if verdict.conflict() { 1 } else { 0 };
            Ok((verdict_json(&verdict, &schema), code))
        }
        Command::Normalize { policy, schema } => {
            let schema = load_schema(&schema)?;
            let policy = load_policy(&policy, &schema)?;
            if !policy.is_lite() {
                return Err(Failure::new(
                    "unsupported-policy",
                    "normalisation applies to policies without duties, remedies or consequences",
                ));
            }
            let normal = FullPolicy::from_lite(normalize(policy.lite(), &schema)?);
            Ok((native_json(&normal, &schema), 0))
        }
        Command::Saturate { policy, vocab, schema } => {
            let schema = load_schema(&schema)?;
            let policy = load_policy(&policy, &schema)?;
            let vocab = with_file(&vocab, parse_vocabulary(&read(&vocab)?))?;
            Ok((native_json(&policy.saturate(&vocab), &schema), 0))
        }
        Command::EmitQuery { policy, schema, out_dir, world } => {
            let schema = load_schema(&schema)?;
            let policy = load_policy(&policy, &schema)?;
            let queries = if policy.is_lite() {
                emit_violation_queries(policy.lite(), &schema)?
            } else {
                emit_full_queries(&policy, &schema)?
            };
            let mut files: Vec<(String, String)> =
                queries.files().into_iter().map(|(n, q)| (n.to_string(), q.to_string())).collect();
            if let Some(world) = world {
                let world = with_file(&world, parse_world(&read(&world)?, &schema))?;
                files.push(("world.sql".into(), emit_world_inserts(&world, &schema)?));
            }
            fs::create_dir_all(&out_dir)
                .map_err(|e| Failure::new("io", format!("{}: {e}", out_dir.display())))?;
            let mut written = Vec::new();
            for (name, text) in files {
                let path = out_dir.join(name);
                fs::write(&path, text).map_err(|e| Failure::new("io", format!("{}: {e}", path.display())))?;
                written.push(path.display().to_string());
            }
            Ok((json!({"format": "odrl-emit/1", "dialect": queries.dialect, "files": written}), 0))
        }
        Command::Check { policy, schema } => {
            let schema = load_schema(&schema)?;
            let policy = with_file(&policy, parse_policy_unchecked(&read(&policy)?, &schema))?;
            let normal_form = policy.lite().is_normal_form();
            let report = WellFormednessReport::merge(policy.rules().map(|r| {
                if normal_form {
                    check_normal_form_rule(r, &schema)
                } else {
                    check_well_formed(r, &schema)
                }
            }));
            let code = if report.ok { 0 } else { 1 };
            Ok((check_report_json(&report, &schema), code))
        }
    }
}

fn native_json(policy: &FullPolicy, schema: &FeatureSchema) -> serde_json::Value {
    serde_json::from_str(&write_native_policy(policy, schema)).expect("native writer emits JSON")
}

fn print(doc: &serde_json::Value) {
    let text = serde_json::to_string_pretty(doc).expect("JSON values serialise");
    // a closed pipe on stdout is not worth a panic
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            eprint!("{message}");
            print(&error_json("usage", message.lines().next().unwrap_or("invalid arguments")));
            return ExitCode::from(2);
        }
    };
    match run(cli.command) {
        Ok((doc, code)) => {
            print(&doc);
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            print(&error_json(&f.kind, &f.message));
            ExitCode::from(2)
        }
    }
}
