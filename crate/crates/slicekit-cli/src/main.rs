//! Command line front end for the slicekit library.
//!
//! One MiniJ source file goes in; one analysis result comes out, as
//! projected source, a label list, Graphviz dot, or a JSON report.
//!
//! Exit codes: 0 success, 1 usage or I/O problem, 2 parse failure,
//! 3 analysis or runtime failure.

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use serde_json::{json, Value};
use slicekit::amorphous::amorphous_slice;
use slicekit::cohesion::{cohesion, Rational64};
use slicekit::conditioned::conditioned_slice;
use slicekit::dependence::{build_pdg, cfg_dot, pdg_dot, BranchTag, ControlSource};
use slicekit::dynamic::{
    dynamic_slice, run, simultaneous_dynamic_slice, DynCriterion, InputSource,
    DEFAULT_STEP_LIMIT,
};
use slicekit::lang::ast::{Label, Program};
use slicekit::lang::unparse::decl_text;
use slicekit::lang::{normalize, parse, stmt_text, unparse};
use slicekit::slicer::{backward_slice, forward_slice, Criterion};
use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Static backward slice
    Static,
    /// Static forward slice
    Forward,
    /// Dynamic slice over one execution
    Dynamic,
    /// Simultaneous dynamic slice over several executions
    Simultaneous,
    /// Conditioned slice under variable fixings
    Conditioned,
    /// Amorphous (syntax-rewriting) slice
    Amorphous,
    /// Slice-based cohesion metrics
    Cohesion,
    /// Program dependence graph
    Pdg,
    /// Control flow graph
    Cfg,
    /// Execute the program
    Run,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Static => "static",
            Method::Forward => "forward",
            Method::Dynamic => "dynamic",
            Method::Simultaneous => "simultaneous",
            Method::Conditioned => "conditioned",
            Method::Amorphous => "amorphous",
            Method::Cohesion => "cohesion",
            Method::Pdg => "pdg",
            Method::Cfg => "cfg",
            Method::Run => "run",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Projected or rewritten program text
    Source,
    /// Comma-separated label list
    Labels,
    /// Graphviz dot (pdg and cfg only)
    Dot,
    /// Structured JSON report
    Json,
}

#[derive(Parser)]
#[command(
    name = "slicekit",
    version,
    about = "Program slicing for MiniJ: static, dynamic, simultaneous, conditioned and amorphous slices, dependence graphs, and cohesion metrics"
)]
struct Args {
    /// MiniJ source file
    file: PathBuf,

    /// Analysis to run
    #[arg(long, value_enum, default_value_t = Method::Static)]
    method: Method,

    /// Criterion label (statement number after normalization)
    #[arg(long)]
    at: Option<u32>,

    /// Criterion variable; repeat or separate with commas
    #[arg(long = "var", value_delimiter = ',')]
    vars: Vec<String>,

    /// Which execution of --at the dynamic criterion means (1 = first)
    #[arg(long, default_value_t = 1)]
    occurrence: u32,

    /// Input values for read(), comma separated; repeat the flag to give
    /// one trace per flag for simultaneous slicing
    #[arg(long = "input", allow_hyphen_values = true)]
    inputs: Vec<String>,

    /// Fix a variable for conditioned slicing, as name=value; repeatable
    #[arg(long = "fix")]
    fixes: Vec<String>,

    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Source)]
    format: Format,

    /// Interpreter step budget (also settable via SLICEKIT_STEP_LIMIT)
    #[arg(long)]
    step_limit: Option<u64>,
}

enum CliError {
    Usage(String),
    Io(String),
    Parse(String),
    Analysis(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => 1,
            CliError::Parse(_) => 2,
            CliError::Analysis(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Io(m)
            | CliError::Parse(m)
            | CliError::Analysis(m) => m,
        }
    }
}

fn analysis<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Analysis(e.to_string())
}

/// Everything a method produces; the format flag picks a view of it.
struct Report {
    json: Value,
    source: Option<String>,
    labels: Option<BTreeSet<Label>>,
    dot: Option<String>,
    notes: Vec<String>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run_cli(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run_cli(args: &Args) -> Result<(), CliError> {
    let source = std::fs::read_to_string(&args.file)
        .map_err(|e| CliError::Io(format!("{}: {e}", args.file.display())))?;
    let program = parse(&source).map_err(|e| CliError::Parse(e.to_string()))?;
    let program = normalize(&program);
    let step_limit = step_limit(args)?;
    let mut report = dispatch(args, &program, step_limit)?;

    let stem = args
        .file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    report
        .notes
        .extend(discrepancy_notes(&stem, args.method, &program));
    report.json["file"] = json!(args.file.display().to_string());
    report.json["method"] = json!(args.method.name());
    report.json["discrepancy_notes"] = json!(report.notes);

    match args.format {
        Format::Json => {
            let mut text = serde_json::to_string_pretty(&report.json).unwrap();
            text.push('\n');
            print_out(&text);
        }
        Format::Source => {
            let text = report.source.ok_or_else(|| {
                CliError::Usage(format!(
                    "method `{}` has no source form; try --format json",
                    args.method.name()
                ))
            })?;
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            print_out(&text);
        }
        Format::Labels => {
            let labels = report.labels.ok_or_else(|| {
                CliError::Usage(format!(
                    "method `{}` has no label list; try --format json",
                    args.method.name()
                ))
            })?;
            for n in &report.notes {
                eprintln!("note: {n}");
            }
            let list: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
            print_out(&(list.join(",") + "\n"));
        }
        Format::Dot => {
            let dot = report.dot.ok_or_else(|| {
                CliError::Usage(format!(
                    "--format dot applies to pdg and cfg, not `{}`",
                    args.method.name()
                ))
            })?;
            print_out(&dot);
        }
    }
    Ok(())
}

/// Writes to stdout, exiting quietly if the reader has gone away (e.g.
/// when piped into `head`).
fn print_out(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout();
    if out
        .write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .is_err()
    {
        std::process::exit(0);
    }
}

fn step_limit(args: &Args) -> Result<u64, CliError> {
    if let Some(n) = args.step_limit {
        return Ok(n);
    }
    match std::env::var("SLICEKIT_STEP_LIMIT") {
        Ok(s) => s.parse().map_err(|_| {
            CliError::Usage(format!("SLICEKIT_STEP_LIMIT is not a number: `{s}`"))
        }),
        Err(_) => Ok(DEFAULT_STEP_LIMIT),
    }
}

fn need_at(args: &Args) -> Result<Label, CliError> {
    args.at
        .map(Label)
        .ok_or_else(|| CliError::Usage("--at <label> is required for this method".into()))
}

fn need_vars(args: &Args) -> Result<BTreeSet<String>, CliError> {
    if args.vars.is_empty() {
        return Err(CliError::Usage(
            "--var <name> is required for this method".into(),
        ));
    }
    Ok(args.vars.iter().cloned().collect())
}

fn parse_inputs(args: &Args) -> Result<Vec<Vec<i64>>, CliError> {
    let mut out = Vec::new();
    for raw in &args.inputs {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            out.push(Vec::new());
            continue;
        }
        let mut vals = Vec::new();
        for part in trimmed.split(',') {
            let v = part.trim().parse::<i64>().map_err(|_| {
                CliError::Usage(format!("--input value is not an integer: `{part}`"))
            })?;
            vals.push(v);
        }
        out.push(vals);
    }
    Ok(out)
}

fn parse_fixes(args: &Args) -> Result<BTreeMap<String, i64>, CliError> {
    let mut out = BTreeMap::new();
    for raw in &args.fixes {
        let (name, value) = raw.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--fix expects name=value, got `{raw}`"))
        })?;
        let v = value.trim().parse::<i64>().map_err(|_| {
            CliError::Usage(format!("--fix value is not an integer: `{value}`"))
        })?;
        out.insert(name.trim().to_string(), v);
    }
    Ok(out)
}

/// Source text of the statement or declaration behind a label.
fn label_text(p: &Program, l: Label) -> String {
    if let Some(d) = p.decls.iter().find(|d| d.label == l) {
        return decl_text(d);
    }
    stmt_text(p, l).unwrap_or_default()
}

fn statements_json(p: &Program, labels: &BTreeSet<Label>) -> Value {
    let map: BTreeMap<String, String> = labels
        .iter()
        .map(|l| (l.to_string(), label_text(p, *l)))
        .collect();
    json!(map)
}

fn criterion_json(at: Label, vars: &BTreeSet<String>) -> Value {
    json!({ "at": at.0, "vars": vars })
}

fn slice_report(
    p: &Program,
    at: Label,
    vars: &BTreeSet<String>,
    labels: BTreeSet<Label>,
    projected: &Program,
    extra: Value,
) -> Report {
    let mut j = json!({
        "criterion": criterion_json(at, vars),
        "labels": labels.iter().map(|l| l.0).collect::<Vec<_>>(),
        "slice_size": labels.len(),
        "program_size": p.labels().len(),
        "statements": statements_json(p, &labels),
        "program": unparse(projected),
    });
    if let Value::Object(pairs) = extra {
        j.as_object_mut().unwrap().extend(pairs);
    }
    Report {
        json: j,
        source: Some(unparse(projected)),
        labels: Some(labels),
        dot: None,
        notes: Vec::new(),
    }
}

fn dispatch(args: &Args, p: &Program, step_limit: u64) -> Result<Report, CliError> {
    match args.method {
        Method::Static => {
            let c = Criterion {
                at: need_at(args)?,
                vars: need_vars(args)?,
            };
            let s = backward_slice(p, &c).map_err(analysis)?;
            Ok(slice_report(p, c.at, &c.vars, s.labels, &s.program, json!({})))
        }
        Method::Forward => {
            let c = Criterion {
                at: need_at(args)?,
                vars: need_vars(args)?,
            };
            let s = forward_slice(p, &c).map_err(analysis)?;
            Ok(slice_report(p, c.at, &c.vars, s.labels, &s.program, json!({})))
        }
        Method::Dynamic => {
            let c = DynCriterion {
                at: need_at(args)?,
                occurrence: args.occurrence,
                vars: need_vars(args)?,
            };
            let inputs = parse_inputs(args)?;
            if inputs.len() > 1 {
                return Err(CliError::Usage(
                    "dynamic slicing takes a single --input; use --method simultaneous for several".into(),
                ));
            }
            let input = inputs.into_iter().next().unwrap_or_default();
            let s = dynamic_slice(p, &c, &input, step_limit).map_err(analysis)?;
            let mut r = slice_report(
                p,
                c.at,
                &c.vars,
                s.labels,
                &s.program,
                json!({
                    "occurrence": c.occurrence,
                    "input": input,
                    "outputs": s.outputs,
                    "exhausted_reads": s.exhausted_reads,
                }),
            );
            if s.exhausted_reads > 0 {
                r.notes.push(format!(
                    "{} read() execution(s) ran past the end of the input and returned 0",
                    s.exhausted_reads
                ));
            }
            Ok(r)
        }
        Method::Simultaneous => {
            let at = need_at(args)?;
            let vars = need_vars(args)?;
            let inputs = parse_inputs(args)?;
            if inputs.is_empty() {
                return Err(CliError::Usage(
                    "simultaneous slicing needs at least one --input".into(),
                ));
            }
            let s = simultaneous_dynamic_slice(p, at, &vars, &inputs, step_limit)
                .map_err(analysis)?;
            let mut r = slice_report(
                p,
                at,
                &vars,
                s.labels,
                &s.program,
                json!({
                    "inputs": inputs,
                    "fell_back": s.fell_back,
                }),
            );
            if s.fell_back {
                r.notes.push(
                    "slice verification failed on replay; reporting the static backward slice instead"
                        .to_string(),
                );
            }
            Ok(r)
        }
        Method::Conditioned => {
            let c = Criterion {
                at: need_at(args)?,
                vars: need_vars(args)?,
            };
            let fixed = parse_fixes(args)?;
            let s = conditioned_slice(p, &c, &fixed).map_err(analysis)?;
            Ok(slice_report(
                p,
                c.at,
                &c.vars,
                s.labels,
                &s.program,
                json!({
                    "fixed": fixed,
                    "pruned": s.pruned.iter().map(|l| l.0).collect::<Vec<_>>(),
                }),
            ))
        }
        Method::Amorphous => {
            let c = Criterion {
                at: need_at(args)?,
                vars: need_vars(args)?,
            };
            let a = amorphous_slice(p, &c).map_err(analysis)?;
            Ok(Report {
                json: json!({
                    "criterion": criterion_json(c.at, &c.vars),
                    "program": unparse(&a.program),
                    "rounds": a.rounds,
                    "program_size": p.labels().len(),
                    "result_size": a.program.labels().len(),
                }),
                source: Some(unparse(&a.program)),
                labels: None,
                dot: None,
                notes: Vec::new(),
            })
        }
        Method::Cohesion => {
            let vars = need_vars(args)?;
            let r = cohesion(p, &vars).map_err(analysis)?;
            let per_var: BTreeMap<String, Value> = r
                .slices
                .iter()
                .map(|(v, vs)| {
                    (
                        v.clone(),
                        json!({
                            "at": vs.at.0,
                            "labels": vs.labels.iter().map(|l| l.0).collect::<Vec<_>>(),
                            "size": vs.labels.len(),
                        }),
                    )
                })
                .collect();
            let ratio = |q: Rational64| {
                json!({
                    "numer": *q.numer(),
                    "denom": *q.denom(),
                    "text": q.to_string(),
                })
            };
            let text = format!(
                "tightness = {}\ncoverage = {}\noverlap = {}\n",
                r.tightness, r.coverage, r.overlap
            );
            Ok(Report {
                json: json!({
                    "vars": vars,
                    "slices": per_var,
                    "intersection": r.intersection.iter().map(|l| l.0).collect::<Vec<_>>(),
                    "program_size": r.program_size,
                    "tightness": ratio(r.tightness),
                    "coverage": ratio(r.coverage),
                    "overlap": ratio(r.overlap),
                }),
                source: Some(text),
                labels: Some(r.intersection),
                dot: None,
                notes: Vec::new(),
            })
        }
        Method::Pdg => {
            let g = build_pdg(p);
            let data: Vec<Value> = g
                .data
                .iter()
                .map(|(from, to, var)| json!({ "from": from.0, "to": to.0, "var": var }))
                .collect();
            let control: Vec<Value> = g
                .control
                .iter()
                .map(|(src, to, tag)| {
                    let from = match src {
                        ControlSource::Entry => json!("entry"),
                        ControlSource::Stmt(l) => json!(l.0),
                    };
                    json!({ "from": from, "to": to.0, "tag": tag_name(*tag) })
                })
                .collect();
            Ok(Report {
                json: json!({ "data": data, "control": control }),
                source: None,
                labels: None,
                dot: Some(pdg_dot(p)),
                notes: Vec::new(),
            })
        }
        Method::Cfg => Ok(Report {
            json: json!({ "dot": cfg_dot(p) }),
            source: None,
            labels: None,
            dot: Some(cfg_dot(p)),
            notes: Vec::new(),
        }),
        Method::Run => {
            let inputs = parse_inputs(args)?;
            if inputs.len() > 1 {
                return Err(CliError::Usage("run takes a single --input".into()));
            }
            let input = inputs.into_iter().next().unwrap_or_default();
            let t = run(p, InputSource::Stream(input.clone()), step_limit)
                .map_err(analysis)?;
            let mut text = String::new();
            for v in &t.outputs {
                text.push_str(&v.to_string());
                text.push('\n');
            }
            let mut r = Report {
                json: json!({
                    "input": input,
                    "outputs": t.outputs,
                    "exhausted_reads": t.exhausted_reads,
                    "final_scalars": t.final_scalars,
                    "final_arrays": t.final_arrays,
                }),
                source: Some(text),
                labels: None,
                dot: None,
                notes: Vec::new(),
            };
            if t.exhausted_reads > 0 {
                r.notes.push(format!(
                    "{} read() execution(s) ran past the end of the input and returned 0",
                    t.exhausted_reads
                ));
            }
            Ok(r)
        }
    }
}

fn tag_name(tag: BranchTag) -> &'static str {
    match tag {
        BranchTag::Seq => "seq",
        BranchTag::True => "true",
        BranchTag::False => "false",
    }
}

/// Known divergences between this toolkit's numbering or rules and other
/// renditions of the bundled example programs, keyed by file stem.
fn discrepancy_notes(stem: &str, method: Method, p: &Program) -> Vec<String> {
    let mut notes = Vec::new();
    match (stem, method) {
        ("fig1", Method::Static) => notes.push(
            "in this numbering label 8 is `print(sum);` and label 9 is `print(product);`; \
             a sum criterion quoted elsewhere as (9, {sum}) corresponds to (8, {sum}) here"
                .to_string(),
        ),
        ("fig11", Method::Conditioned) => notes.push(
            "when a fixing decides the branch at label 8 against its positive arm, the \
             update `a = a + 5;` (label 9) is pruned; renditions that keep that line use \
             a weaker pruning rule"
                .to_string(),
        ),
        ("fig9", Method::Simultaneous | Method::Dynamic) => notes.push(
            "criteria here anchor at label 35 (`print(sum);`); each outer iteration \
             consumes one extra read, so traces with fewer input values make later \
             reads return 0"
                .to_string(),
        ),
        _ => {}
    }
    let _ = p;
    notes
}
