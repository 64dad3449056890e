//! Command line front end. [`run`] takes its output streams as arguments so
//! tests can drive it in-process.
//!
//! Exit codes: 0 success, 1 invalid answers or a failed replication check,
//! 2 usage errors, unreadable files and bad weights.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};
use ehmi_core::answers::{validate, ProposalAnswerSet};
use ehmi_core::report::{compare, weight_sweep, SweepSpec};
use ehmi_core::schema::{Category, SchemaSet};
use ehmi_core::scoring::{Evaluation, WeightVector};

use crate::data::{bundled_answer, bundled_answers, ANSWER_FILES};
use crate::engine::{evaluate, EvaluateError, Schemas, Scored};
use crate::export::{export_category, export_comparison, export_sensitivity, fmt2, Format};
use crate::io::read_answers;
use crate::replicate::replicate;

#[derive(Debug, Parser)]
#[command(name = "ehmi", version, about = "Score and compare eHMI proposals")]
pub struct Cli {
    /// Load schemas from this directory instead of the bundled ones
    /// (default: $EHMI_SCHEMA_DIR, if set).
    #[arg(long, global = true, value_name = "DIR")]
    schema_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Scoring {
    /// Seven comma separated weights in S,CE,A,EU,CC,P,R order, summing to 7.
    #[arg(long, value_name = "W,W,W,W,W,W,W")]
    weights: Option<Weights>,
    /// Readability schema variant.
    #[arg(long, value_name = "NAME")]
    r_variant: Option<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check answer files against the schemas.
    Validate {
        #[arg(required = true)]
        files: Vec<String>,
        #[arg(long, value_name = "NAME")]
        r_variant: Option<String>,
    },
    /// Score one proposal.
    Evaluate {
        /// Answer file, or the stem of a bundled proposal (no_ehmi, fbl, krd, bsd, btd).
        file: String,
        #[command(flatten)]
        scoring: Scoring,
        #[arg(long)]
        json: bool,
    },
    /// Score and rank several proposals (default: the bundled five).
    Compare {
        files: Vec<String>,
        #[command(flatten)]
        scoring: Scoring,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Re-rank over a grid of weight vectors.
    Sweep {
        files: Vec<String>,
        /// Categories whose weights walk 0..max.
        #[arg(long, value_delimiter = ',', value_name = "CAT")]
        vary: Vec<Category>,
        #[arg(long, default_value_t = 0.5)]
        step: f64,
        #[arg(long, default_value_t = 7.0)]
        max: f64,
        /// Pin a weight, e.g. `--fix R=0`.
        #[arg(long, value_name = "CAT=W")]
        fix: Vec<Fixed>,
        /// Base weights the remainder is spread over (default: all 1).
        #[arg(long, value_name = "W,W,W,W,W,W,W")]
        base: Option<Weights>,
        #[arg(long, value_name = "NAME")]
        r_variant: Option<String>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Write a results table.
    Export {
        #[arg(long, value_enum)]
        format: Format,
        /// `final` or a category prefix (S, CE, A, EU, CC, P, R).
        #[arg(long, default_value = "final")]
        table: Table,
        files: Vec<String>,
        #[command(flatten)]
        scoring: Scoring,
        /// Write here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Serve the JSON API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Only allow this origin (default: any).
        #[arg(long)]
        cors_origin: Option<String>,
    },
    /// Re-score the bundled proposals and check them against the published tables.
    Replicate {
        /// Print every mismatch.
        #[arg(long, short)]
        verbose: bool,
    },
}

#[derive(Debug, Clone, Copy)]
struct Weights(WeightVector);

impl FromStr for Weights {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let values = s
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        let array: [f64; 7] =
            values.try_into().map_err(|v: Vec<f64>| format!("expected 7 weights, got {}", v.len()))?;
        Ok(Weights(WeightVector::from_array(array)))
    }
}

#[derive(Debug, Clone, Copy)]
struct Fixed(Category, f64);

impl FromStr for Fixed {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (c, v) = s.split_once('=').ok_or_else(|| format!("expected CAT=W, got {s:?}"))?;
        let v = v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"))?;
        Ok(Fixed(c.trim().parse()?, v))
    }
}

#[derive(Debug, Clone, Copy)]
enum Table {
    Final,
    Category(Category),
}

impl FromStr for Table {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("final") {
            Ok(Table::Final)
        } else {
            s.parse().map(Table::Category)
        }
    }
}

/// An error that carries its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl std::fmt::Display) -> Self {
        Self { code: 2, message: message.to_string() }
    }

    fn invalid(message: impl std::fmt::Display) -> Self {
        Self { code: 1, message: message.to_string() }
    }
}

impl From<EvaluateError> for Failure {
    fn from(e: EvaluateError) -> Self {
        Failure::invalid(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e)
    }
}

type Outcome = Result<i32, Failure>;

/// Parse `args` (program name first) and run the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn load_schemas(dir: Option<&Path>) -> Result<Schemas, Failure> {
    let loaded = match dir {
        Some(dir) => Schemas::from_dir(dir),
        None => Schemas::load(),
    };
    loaded.map_err(|e| Failure::usage(format!("{e:#}")))
}

fn schema_set<'a>(schemas: &'a Schemas, variant: Option<&str>) -> Result<&'a SchemaSet, Failure> {
    schemas.get(variant).map_err(Failure::usage)
}

/// A path, or failing that the stem of a bundled proposal.
fn load_answers(arg: &str) -> Result<ProposalAnswerSet, Failure> {
    let path = Path::new(arg);
    if path.exists() {
        return read_answers(path).map_err(|e| Failure::usage(format!("{e:#}")));
    }
    bundled_answer(arg).ok_or_else(|| {
        let stems: Vec<&str> = ANSWER_FILES.iter().map(|(s, _)| *s).collect();
        Failure::usage(format!("cannot read {arg:?}: no such file or bundled proposal ({})", stems.join(", ")))
    })
}

fn load_many(args: &[String]) -> Result<Vec<ProposalAnswerSet>, Failure> {
    if args.is_empty() {
        return Ok(bundled_answers());
    }
    args.iter().map(|a| load_answers(a)).collect()
}

fn checked_weights(w: Option<Weights>) -> Result<WeightVector, Failure> {
    let w = w.map_or(WeightVector::UNIT, |w| w.0);
    w.validate().map_err(Failure::usage)?;
    Ok(w)
}

fn score_all(
    sets: &[ProposalAnswerSet],
    schemas: &SchemaSet,
    weights: &WeightVector,
    err: &mut dyn Write,
) -> Result<Vec<Scored>, Failure> {
    let mut scored = Vec::with_capacity(sets.len());
    for set in sets {
        let s = evaluate(set, schemas, weights)?;
        for w in &s.warnings {
            writeln!(err, "warning: {}: {w}", set.proposal)?;
        }
        scored.push(s);
    }
    Ok(scored)
}

fn evaluations(scored: &[Scored]) -> Vec<Evaluation> {
    scored.iter().map(|s| s.evaluation.clone()).collect()
}

fn execute(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let schemas = load_schemas(cli.schema_dir.as_deref())?;
    match cli.command {
        Command::Validate { files, r_variant } => {
            let set = schema_set(&schemas, r_variant.as_deref())?;
            let mut code = 0;
            for file in &files {
                let answers = load_answers(file)?;
                match validate(&answers, set) {
                    Ok(v) => {
                        writeln!(out, "ok: {file} ({})", answers.proposal)?;
                        for w in &v.warnings {
                            writeln!(out, "  warning: {w}")?;
                        }
                    }
                    Err(report) => {
                        code = 1;
                        writeln!(out, "invalid: {file} ({})", answers.proposal)?;
                        for line in report.to_string().lines() {
                            writeln!(out, "  {line}")?;
                        }
                    }
                }
            }
            Ok(code)
        }
        Command::Evaluate { file, scoring, json } => {
            let weights = checked_weights(scoring.weights)?;
            let set = schema_set(&schemas, scoring.r_variant.as_deref())?;
            let answers = load_answers(&file)?;
            let scored = score_all(std::slice::from_ref(&answers), set, &weights, err)?.remove(0);
            if json {
                let mut text = serde_json::to_string_pretty(&scored).map_err(Failure::usage)?;
                text.push('\n');
                out.write_all(text.as_bytes())?;
            } else {
                let e = &scored.evaluation;
                writeln!(out, "{} (readability {})", e.proposal, e.variant.as_deref().unwrap_or("default"))?;
                for c in Category::ALL {
                    writeln!(out, "{:<24}{:>8}  x{}", c.title(), fmt2(e.scores.get(c)), weights.get(c))?;
                }
                writeln!(out, "{:<24}{:>8} / 70", "TOTAL", fmt2(e.total))?;
                writeln!(out, "{:<24}{:>7}%", "PERCENT", fmt2(e.percent))?;
            }
            Ok(0)
        }
        Command::Compare { files, scoring, format } => {
            let weights = checked_weights(scoring.weights)?;
            let set = schema_set(&schemas, scoring.r_variant.as_deref())?;
            let scored = score_all(&load_many(&files)?, set, &weights, err)?;
            let report = compare(&evaluations(&scored)).map_err(Failure::usage)?;
            out.write_all(export_comparison(&report, format).map_err(Failure::usage)?.as_bytes())?;
            Ok(0)
        }
        Command::Sweep { files, vary, step, max, fix, base, r_variant, format } => {
            let base = checked_weights(base)?;
            let set = schema_set(&schemas, r_variant.as_deref())?;
            let scored = score_all(&load_many(&files)?, set, &base, err)?;
            let spec = SweepSpec { base, fixed: fix.iter().map(|f| (f.0, f.1)).collect(), vary, step, max };
            let report = weight_sweep(&evaluations(&scored), &spec).map_err(Failure::usage)?;
            out.write_all(export_sensitivity(&report, format).map_err(Failure::usage)?.as_bytes())?;
            Ok(0)
        }
        Command::Export { format, table, files, scoring, output } => {
            let weights = checked_weights(scoring.weights)?;
            let set = schema_set(&schemas, scoring.r_variant.as_deref())?;
            let scored = score_all(&load_many(&files)?, set, &weights, err)?;
            let text = match table {
                Table::Final => {
                    let report = compare(&evaluations(&scored)).map_err(Failure::usage)?;
                    export_comparison(&report, format)
                }
                Table::Category(c) => {
                    let rows: Vec<_> = scored.iter().map(|s| (&s.normalized, &s.evaluation)).collect();
                    export_category(c, &rows, format)
                }
            }
            .map_err(Failure::usage)?;
            match output {
                Some(path) => std::fs::write(&path, text)
                    .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
                None => out.write_all(text.as_bytes())?,
            }
            Ok(0)
        }
        Command::Serve { addr, cors_origin } => {
            let origin = cors_origin
                .map(|o| o.parse().map_err(|_| Failure::usage(format!("invalid origin {o:?}"))))
                .transpose()?;
            let runtime = tokio::runtime::Runtime::new()?;
            runtime
                .block_on(crate::service::serve(addr, schemas, origin))
                .map_err(|e| Failure::usage(format!("{e:#}")))?;
            Ok(0)
        }
        Command::Replicate { verbose } => {
            let checks = replicate(&schemas).map_err(|e| Failure::invalid(format!("{e:#}")))?;
            let mut code = 0;
            for check in &checks {
                writeln!(out, "{} {}", if check.pass { "PASS" } else { "FAIL" }, check.table)?;
                if !check.pass {
                    code = 1;
                    let shown = if verbose { check.mismatches.len() } else { 5 };
                    for m in check.mismatches.iter().take(shown) {
                        writeln!(out, "  {m}")?;
                    }
                    if check.mismatches.len() > shown {
                        writeln!(out, "  ... {} more (use --verbose)", check.mismatches.len() - shown)?;
                    }
                }
            }
            Ok(code)
        }
    }
}
