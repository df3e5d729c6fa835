// SPDX-License-Identifier: Apache-2.0

//! The `schemeflow` command line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{self, AnalysisConfig, AnalysisError, Truthiness};
use crate::frontend::{extract_facts, parse_program, FrontendOptions, LabeledProgram};
use crate::oracle::{self, OracleError, RunOptions, WorklistOrder};
use crate::output::{self, Format};
use crate::result::{AnalysisResult, RelationName};
use crate::termgen::{gen_mcfa_worst, gen_vanhorn, GenSpec};
use crate::{DEFAULT_FACT_CEILING, FACT_CEILING_ENV};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CEILING: i32 = 2;
pub const EXIT_DIFF: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "schemeflow", version, about = "m-CFA for a small Scheme subset")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the input relations of a program as `<relation>.facts` files.
    Facts {
        input: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        frontend: FrontendArgs,
    },
    /// Run the rule-based analysis.
    Analyze(RunArgs),
    /// Run the abstract-machine worklist.
    Oracle {
        #[command(flatten)]
        run: RunArgs,
        /// Print one line per fired rule to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Run both paths and compare their state and store relations.
    Diff {
        input: Option<PathBuf>,
        #[command(flatten)]
        analysis: AnalysisArgs,
        #[command(flatten)]
        frontend: FrontendArgs,
        /// Compare the flow relations too.
        #[arg(long)]
        diff_flows: bool,
    },
    /// Print a generated program.
    GenTerm {
        #[command(flatten)]
        term: TermArgs,
    },
    /// Analyze a generated program and print a run report as JSON.
    Bench {
        #[command(flatten)]
        term: TermArgs,
        #[arg(long, default_value_t = 0)]
        m: usize,
        #[arg(long, value_enum, default_value_t = Path_::Analysis)]
        path: Path_,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Family {
    Mcfa,
    Vanhorn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Path_ {
    Analysis,
    Oracle,
}

#[derive(Args, Debug)]
struct TermArgs {
    #[arg(long, value_enum, default_value_t = Family::Mcfa)]
    family: Family,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    padding: usize,
}

#[derive(Args, Debug)]
struct FrontendArgs {
    /// Emit `quotation` facts instead of rejecting `quote`.
    #[arg(long)]
    allow_quote: bool,
    /// Primitive operator names, comma separated.
    #[arg(long, value_delimiter = ',')]
    prims: Option<Vec<String>>,
}

#[derive(Args, Debug)]
struct AnalysisArgs {
    #[arg(long, default_value_t = 0)]
    m: usize,
    #[arg(long, default_value_t = 2, conflicts_with_all = ["no_widen", "strict_appendix"])]
    widen_depth: usize,
    /// Disable PrimVal widening.
    #[arg(long)]
    no_widen: bool,
    /// Follow the published rules verbatim: no widening, literal truthiness.
    #[arg(long)]
    strict_appendix: bool,
    #[arg(long, value_enum, default_value_t = TruthinessArg::BothBranches)]
    truthiness: TruthinessArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TruthinessArg {
    BothBranches,
    AppendixExact,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Tsv,
    Json,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Source file; standard input when absent or `-`.
    input: Option<PathBuf>,
    #[command(flatten)]
    analysis: AnalysisArgs,
    #[command(flatten)]
    frontend: FrontendArgs,
    #[arg(long, value_enum, default_value_t = FormatArg::Tsv)]
    format: FormatArg,
    /// Output directory; all relations go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the run report as JSON here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Print the rule set to stderr before running.
    #[arg(long)]
    dump_rules: bool,
}

/// Counts and timing for one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub path: String,
    pub m: usize,
    pub counts: BTreeMap<String, usize>,
    /// Saturation rounds (analysis) or worklist steps (oracle).
    pub iterations: u64,
    /// Facts in the store at the end (analysis) or reached configurations
    /// (oracle).
    pub peak: u64,
    pub millis: u128,
}

impl RunReport {
    fn new(path: &str, m: usize, r: &AnalysisResult, iterations: u64, peak: u64, start: Instant) -> Self {
        RunReport {
            path: path.to_string(),
            m,
            counts: RelationName::ALL
                .into_iter()
                .map(|rel| (rel.as_str().to_string(), r.len(rel)))
                .collect(),
            iterations,
            peak,
            millis: start.elapsed().as_millis(),
        }
    }
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(message: impl ToString) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: message.to_string(),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        let code = match e {
            AnalysisError::Ceiling { .. } => EXIT_CEILING,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        let code = match e {
            OracleError::Ceiling { .. } => EXIT_CEILING,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e)
    }
}

impl From<output::OutputError> for Failure {
    fn from(e: output::OutputError) -> Self {
        Failure::input(e)
    }
}

fn fact_ceiling() -> Result<u64, Failure> {
    match std::env::var(FACT_CEILING_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("{FACT_CEILING_ENV}: not a number: {s}"))),
        Err(_) => Ok(DEFAULT_FACT_CEILING),
    }
}

impl AnalysisArgs {
    fn config(&self) -> Result<AnalysisConfig, Failure> {
        Ok(AnalysisConfig {
            m: self.m,
            widen_depth: if self.no_widen {
                None
            } else {
                Some(self.widen_depth.max(1))
            },
            strict_appendix: self.strict_appendix,
            truthiness: match self.truthiness {
                TruthinessArg::BothBranches => Truthiness::BothBranches,
                TruthinessArg::AppendixExact => Truthiness::AppendixExact,
            },
            fact_ceiling: Some(fact_ceiling()?),
        })
    }
}

impl FrontendArgs {
    fn options(&self) -> FrontendOptions {
        let mut opts = FrontendOptions {
            allow_quote: self.allow_quote,
            ..FrontendOptions::default()
        };
        if let Some(prims) = &self.prims {
            opts.prim_ops = prims.iter().cloned().collect();
        }
        opts
    }
}

fn read_source(input: Option<&Path>) -> Result<(String, String), Failure> {
    match input {
        None => read_stdin(),
        Some(p) if p == Path::new("-") => read_stdin(),
        Some(p) => fs::read_to_string(p)
            .map(|s| (p.display().to_string(), s))
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
    }
}

fn read_stdin() -> Result<(String, String), Failure> {
    let mut s = String::new();
    io::stdin().read_to_string(&mut s)?;
    Ok(("<stdin>".to_string(), s))
}

fn load(input: Option<&Path>, frontend: &FrontendArgs) -> Result<LabeledProgram, Failure> {
    let (name, text) = read_source(input)?;
    parse_program(&text, &frontend.options()).map_err(|e| Failure::input(format!("{name}:{e}")))
}

fn run_analysis(p: &LabeledProgram, cfg: &AnalysisConfig) -> Result<(AnalysisResult, RunReport), Failure> {
    let start = Instant::now();
    let (r, stats) = analysis::analyze_with_stats(p, cfg)?;
    let report = RunReport::new("analysis", cfg.m, &r, stats.rounds, stats.facts, start);
    Ok((r, report))
}

fn run_oracle(
    p: &LabeledProgram,
    cfg: &AnalysisConfig,
    trace: Option<&mut dyn FnMut(&str)>,
) -> Result<(AnalysisResult, RunReport), Failure> {
    let start = Instant::now();
    let opts = RunOptions {
        order: WorklistOrder::Fifo,
        trace,
    };
    let (r, stats) = oracle::run_fixpoint_with(p, cfg, opts)?;
    let report = RunReport::new("oracle", cfg.m, &r, stats.steps, stats.configs, start);
    Ok((r, report))
}

fn emit(
    args: &RunArgs,
    r: &AnalysisResult,
    report: &RunReport,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let format = match args.format {
        FormatArg::Tsv => Format::Tsv,
        FormatArg::Json => Format::Json,
    };
    match &args.out {
        Some(dir) => output::write_result(r, dir, format)?,
        None => match format {
            Format::Tsv => stdout.write_all(output::render_flat(r).as_bytes())?,
            Format::Json => stdout.write_all(output::render_json(r).as_bytes())?,
        },
    }
    let json = serde_json::to_string_pretty(report).expect("json") + "\n";
    match &args.report {
        Some(path) => fs::write(path, json)?,
        None => {
            let counts: Vec<String> = report
                .counts
                .iter()
                .filter(|(k, _)| RelationName::parse(k).is_some_and(RelationName::is_core))
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            writeln!(
                stderr,
                "{}: m={} {} iterations={} peak={} {}ms",
                report.path,
                report.m,
                counts.join(" "),
                report.iterations,
                report.peak,
                report.millis
            )?;
        }
    }
    Ok(())
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Facts {
            input,
            out,
            frontend,
        } => {
            let p = load(input.as_deref(), &frontend)?;
            extract_facts(&p)
                .write_dir(&out)
                .map_err(Failure::input)?;
        }
        Command::Analyze(args) => {
            let cfg = args.analysis.config()?;
            if args.dump_rules {
                stderr.write_all(analysis::rule_dump(&cfg).as_bytes())?;
            }
            let p = load(args.input.as_deref(), &args.frontend)?;
            let (r, report) = run_analysis(&p, &cfg)?;
            emit(&args, &r, &report, stdout, stderr)?;
        }
        Command::Oracle { run: args, trace } => {
            let cfg = args.analysis.config()?;
            let p = load(args.input.as_deref(), &args.frontend)?;
            let mut lines: Vec<String> = Vec::new();
            let mut sink = |l: &str| lines.push(l.to_string());
            let result = run_oracle(&p, &cfg, if trace { Some(&mut sink) } else { None });
            for l in &lines {
                writeln!(stderr, "{l}")?;
            }
            let (r, report) = result?;
            emit(&args, &r, &report, stdout, stderr)?;
        }
        Command::Diff {
            input,
            analysis,
            frontend,
            diff_flows,
        } => {
            let cfg = analysis.config()?;
            let p = load(input.as_deref(), &frontend)?;
            let (a, _) = run_analysis(&p, &cfg)?;
            let (o, _) = run_oracle(&p, &cfg, None)?;
            return Ok(match a.first_divergence(&o, diff_flows) {
                None => {
                    writeln!(stdout, "identical")?;
                    EXIT_OK
                }
                Some(d) => {
                    let side = if d.only_left { "analysis" } else { "oracle" };
                    writeln!(stdout, "{}: only in {side}: {}", d.relation, d.row)?;
                    EXIT_DIFF
                }
            });
        }
        Command::GenTerm { term } => {
            writeln!(stdout, "{}", generate(&term)?)?;
        }
        Command::Bench { term, m, path } => {
            let text = generate(&term)?;
            let p = parse_program(&text, &FrontendOptions::default()).map_err(Failure::input)?;
            let cfg = AnalysisConfig {
                fact_ceiling: Some(fact_ceiling()?),
                ..AnalysisConfig::with_m(m)
            };
            let (_, report) = match path {
                Path_::Analysis => run_analysis(&p, &cfg)?,
                Path_::Oracle => run_oracle(&p, &cfg, None)?,
            };
            writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("json"))?;
        }
    }
    Ok(EXIT_OK)
}

fn generate(term: &TermArgs) -> Result<String, Failure> {
    match term.family {
        Family::Vanhorn => Ok(gen_vanhorn()),
        Family::Mcfa => gen_mcfa_worst(&GenSpec::new(term.n, term.k, term.padding)).map_err(Failure::input),
    }
}

/// Runs one command line; returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
