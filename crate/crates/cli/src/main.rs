//! Command-line front end: build models from CSV catalogs, solve them with
//! a chosen backend, check explicit selections, and enumerate the one-hot
//! search space.
//!
//! Exit codes are a stable contract:
//!   0 success (a feasible solution exists where that matters)
//!   2 input error (files, flags, parsing)
//!   3 no feasible solution
//!   4 backend error
//!   5 search-space size limit

mod report;

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cqmkit::builder::{build_model, AttributeBound, ChoiceSpec};
use cqmkit::catalog::{format_minor, ChoiceCatalog};
use cqmkit::expr::Assignment;
use cqmkit::model::CqmModel;
use cqmkit::qubo::PenaltyPolicy;
use cqmkit::sample::{Sample, SolveParams, Violation};
use cqmkit::solvers::exact::CARTESIAN_MAX_CANDIDATES;
use cqmkit::solvers::{BackendConfig, SolverError, SolverRegistry};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_INFEASIBLE: u8 = 3;
pub const EXIT_BACKEND: u8 = 4;
pub const EXIT_SIZE_LIMIT: u8 = 5;

/// Most combinations --dump will materialize and sort.
const DUMP_CAP: u128 = 1_000_000;

#[derive(Parser)]
#[command(
    name = "cqmkit",
    version,
    about = "Grouped-selection optimization: build, solve, check, enumerate",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model from a CSV catalog and print it as JSON
    Build(BuildArgs),
    /// Solve a model and report the best samples
    Solve(SolveArgs),
    /// Check an explicit selection (labels or a bit vector) against a model
    Check(CheckArgs),
    /// Count (and optionally dump) all one-hot combinations of a catalog
    Enumerate(EnumerateArgs),
}

#[derive(Args, Default)]
struct SpecArgs {
    /// Attribute to minimize
    #[arg(long, value_name = "ATTR", group = "objective")]
    minimize: Option<String>,
    /// Attribute to maximize
    #[arg(long, value_name = "ATTR", group = "objective")]
    maximize: Option<String>,
    /// Attribute bound such as "calories<=700" (repeatable)
    #[arg(long = "bound", value_name = "ATTR<=LIMIT")]
    bounds: Vec<String>,
}

impl SpecArgs {
    fn is_empty(&self) -> bool {
        self.minimize.is_none() && self.maximize.is_none() && self.bounds.is_empty()
    }

    /// Builds the selection spec against a catalog. With no objective flag,
    /// falls back to minimizing the first attribute column when allowed.
    fn to_spec(&self, catalog: &ChoiceCatalog, allow_default: bool) -> Result<ChoiceSpec, CliError> {
        let mut spec = match (&self.minimize, &self.maximize) {
            (Some(attr), None) => ChoiceSpec::minimize(attr.clone()),
            (None, Some(attr)) => ChoiceSpec::maximize(attr.clone()),
            (None, None) if allow_default => {
                ChoiceSpec::minimize(catalog.attributes()[0].clone())
            }
            (None, None) => {
                return Err(CliError::input(
                    "an objective is required: pass --minimize ATTR or --maximize ATTR",
                ))
            }
            (Some(_), Some(_)) => unreachable!("clap group forbids both"),
        };
        for bound in &self.bounds {
            spec = spec.with_bound(
                AttributeBound::parse(bound, catalog).map_err(|e| CliError::input(e.to_string()))?,
            );
        }
        Ok(spec)
    }
}

#[derive(Args)]
struct BuildArgs {
    /// CSV catalog path
    input: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    /// Write the model JSON here instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    /// CSV catalog, model JSON file, or "-" for model JSON on stdin
    input: String,
    /// Solver backend (see `cqmkit solve --help` for the built-in set)
    #[arg(long, default_value = "exact")]
    backend: String,
    #[command(flatten)]
    spec: SpecArgs,
    /// Best samples the exact backend keeps
    #[arg(long, default_value_t = 10, value_name = "N")]
    top_k: usize,
    /// Annealing reads / maximum remote samples
    #[arg(long, default_value_t = 100, value_name = "N")]
    reads: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Sweeps per annealing read
    #[arg(long, default_value_t = 1000, value_name = "N")]
    sweeps: u32,
    /// Initial inverse temperature of the geometric schedule
    #[arg(long, default_value_t = 0.01)]
    beta_start: f64,
    /// Final inverse temperature of the geometric schedule
    #[arg(long, default_value_t = 10.0)]
    beta_end: f64,
    /// Remote solver time limit, seconds
    #[arg(long, default_value_t = 5.0, value_name = "SECONDS")]
    time_limit: f64,
    /// Remote endpoint base URL (required by --backend remote)
    #[arg(long, value_name = "URL")]
    endpoint: Option<String>,
    /// Bearer token for the remote endpoint
    #[arg(long, env = "CQMKIT_TOKEN", hide_env_values = true)]
    token: Option<String>,
    /// Fixed penalty weight for QUBO-based backends (default: auto)
    #[arg(long, value_name = "WEIGHT")]
    penalty_weight: Option<f64>,
    /// Auto penalty multiplier on the objective spread
    #[arg(long, default_value_t = 2.0, value_name = "X")]
    penalty_multiplier: f64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct CheckArgs {
    /// CSV catalog, model JSON file, or "-" for model JSON on stdin
    input: String,
    /// Selection file: item labels (one per line) or a JSON 0/1 array
    assignment: PathBuf,
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct EnumerateArgs {
    /// CSV catalog path
    input: PathBuf,
    /// Dump every combination as a ranked CSV
    #[arg(long)]
    dump: bool,
    /// Write the dump here instead of stdout
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

/// CLI-level error carrying its exit code.
#[derive(Debug)]
struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: EXIT_INPUT }
    }

    fn backend(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: EXIT_BACKEND }
    }

    fn size_limit(message: impl Into<String>) -> Self {
        Self { message: message.into(), code: EXIT_SIZE_LIMIT }
    }
}

fn solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::SizeLimit { .. } => CliError::size_limit(e.to_string()),
        SolverError::UnknownBackend { .. }
        | SolverError::MissingEndpoint
        | SolverError::InvalidParams { .. }
        | SolverError::Model(_) => CliError::input(e.to_string()),
        SolverError::Remote(_)
        | SolverError::Transform(_)
        | SolverError::ProvenanceMismatch { .. } => CliError::backend(e.to_string()),
    }
}

/// What `solve` and `check` operate on: a model, optionally with the
/// catalog it was built from (which enables the selection-style reports).
enum ModelInput {
    Catalog(Box<(ChoiceCatalog, CqmModel)>),
    Bare(CqmModel),
}

impl ModelInput {
    fn model(&self) -> &CqmModel {
        match self {
            ModelInput::Catalog(boxed) => &boxed.1,
            ModelInput::Bare(model) => model,
        }
    }

    fn catalog(&self) -> Option<&ChoiceCatalog> {
        match self {
            ModelInput::Catalog(boxed) => Some(&boxed.0),
            ModelInput::Bare(_) => None,
        }
    }
}

fn read_input_text(path: &str) -> Result<String, CliError> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| CliError::input(format!("cannot read stdin: {e}")))?;
        return Ok(text);
    }
    fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {path:?}: {e}")))
}

fn load_catalog(path: &PathBuf) -> Result<ChoiceCatalog, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {path:?}: {e}")))?;
    ChoiceCatalog::parse(&text).map_err(|e| CliError::input(e.to_string()))
}

fn load_model_input(path: &str, spec: &SpecArgs, allow_default: bool) -> Result<ModelInput, CliError> {
    let text = read_input_text(path)?;
    if text.trim_start().starts_with('{') {
        if !spec.is_empty() {
            return Err(CliError::input(
                "--minimize/--maximize/--bound apply to CSV catalogs; this input is a model document",
            ));
        }
        let model = CqmModel::from_json_str(&text).map_err(|e| CliError::input(e.to_string()))?;
        return Ok(ModelInput::Bare(model));
    }
    let catalog = ChoiceCatalog::parse(&text).map_err(|e| CliError::input(e.to_string()))?;
    let choice_spec = spec.to_spec(&catalog, allow_default)?;
    let model = build_model(&catalog, &choice_spec).map_err(|e| CliError::input(e.to_string()))?;
    Ok(ModelInput::Catalog(Box::new((catalog, model))))
}

fn write_or_print(output: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {path:?}: {e}"))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_build(args: &BuildArgs) -> Result<u8, CliError> {
    let catalog = load_catalog(&args.input)?;
    let spec = args.spec.to_spec(&catalog, false)?;
    let model = build_model(&catalog, &spec).map_err(|e| CliError::input(e.to_string()))?;
    eprintln!(
        "built model: {} variables, {} constraints",
        model.num_variables(),
        model.constraints().len()
    );
    write_or_print(&args.output, &model.to_json_pretty())?;
    Ok(0)
}

fn cmd_solve(args: &SolveArgs) -> Result<u8, CliError> {
    let input = load_model_input(&args.input, &args.spec, false)?;
    let params = SolveParams {
        num_reads: args.reads,
        seed: args.seed,
        sweeps: args.sweeps,
        beta_start: args.beta_start,
        beta_end: args.beta_end,
        time_limit: std::time::Duration::from_secs_f64(args.time_limit),
    };
    let penalty = match args.penalty_weight {
        Some(weight) => PenaltyPolicy::Fixed { weight },
        None => PenaltyPolicy::Auto { multiplier: args.penalty_multiplier },
    };
    let config = BackendConfig {
        top_k: args.top_k,
        penalty,
        endpoint: args.endpoint.clone(),
        token: args.token.clone(),
    };
    let registry = SolverRegistry::with_builtins();
    let solver = registry.create(&args.backend, &config).map_err(solver_error)?;
    let set = solver.solve(input.model(), &params).map_err(solver_error)?;
    eprintln!("backend {}: {} reads in {:?}", set.backend_name, set.total_reads, set.wall_time);

    let rendered = match args.format {
        Format::Json => {
            let value = report::solve_json(&set, input.model(), input.catalog())
                .map_err(CliError::input)?;
            serde_json::to_string_pretty(&value).expect("json output")
        }
        Format::Table => {
            report::solve_table(&set, input.model(), input.catalog()).map_err(CliError::input)?
        }
    };
    println!("{rendered}");
    Ok(if set.has_feasible() { 0 } else { EXIT_INFEASIBLE })
}

/// Resolves a selection file into an assignment: either a JSON 0/1 array or
/// item labels, one per line ("group/name" or an unambiguous plain name).
fn parse_assignment(text: &str, model: &CqmModel) -> Result<Assignment, CliError> {
    let trimmed = text.trim();
    if trimmed.starts_with('[') {
        let values: Vec<i64> = serde_json::from_str(trimmed)
            .map_err(|e| CliError::input(format!("bad bit vector: {e}")))?;
        if values.len() != model.num_variables() {
            return Err(CliError::input(format!(
                "bit vector has {} entries, model has {} variables",
                values.len(),
                model.num_variables()
            )));
        }
        return Assignment::from_ints(values).map_err(|e| CliError::input(e.to_string()));
    }

    let mut bits = vec![false; model.num_variables()];
    for line in trimmed.lines() {
        let label = line.trim();
        if label.is_empty() || label.starts_with('#') {
            continue;
        }
        let index = match model.variable_index(label) {
            Some(index) => index,
            None => {
                // Accept a bare item name when exactly one "group/name"
                // label ends in it.
                let suffix = format!("/{label}");
                let matches: Vec<usize> = model
                    .variables()
                    .iter()
                    .filter(|v| v.label.ends_with(&suffix))
                    .map(|v| v.index)
                    .collect();
                match matches.as_slice() {
                    [index] => *index,
                    [] => return Err(CliError::input(format!("unknown label {label:?}"))),
                    _ => {
                        return Err(CliError::input(format!(
                            "label {label:?} is ambiguous; qualify it as group/name"
                        )))
                    }
                }
            }
        };
        bits[index] = true;
    }
    Ok(Assignment::new(bits))
}

fn cmd_check(args: &CheckArgs) -> Result<u8, CliError> {
    let input = load_model_input(&args.input, &args.spec, true)?;
    let model = input.model();
    let text = fs::read_to_string(&args.assignment)
        .map_err(|e| CliError::input(format!("cannot read {:?}: {e}", args.assignment)))?;
    let assignment = parse_assignment(&text, model)?;

    let feasibility = model.is_feasible(&assignment).map_err(|e| CliError::input(e.to_string()))?;
    let energy = model
        .evaluate_objective(&assignment)
        .map_err(|e| CliError::input(e.to_string()))?;
    let violations: Vec<Violation> = model
        .constraints()
        .iter()
        .zip(&feasibility.verdicts)
        .filter(|(_, v)| !v.satisfied)
        .map(|(c, v)| Violation { constraint: c.name.clone(), amount: v.violation })
        .collect();
    let sample = Sample {
        assignment,
        energy,
        num_occurrences: 1,
        feasible: feasibility.feasible,
        violations,
    };

    let rendered = match args.format {
        Format::Json => {
            let value = report::check_json(&sample, &feasibility, model, input.catalog())
                .map_err(CliError::input)?;
            serde_json::to_string_pretty(&value).expect("json output")
        }
        Format::Table => report::check_table(&sample, &feasibility, model, input.catalog())
            .map_err(CliError::input)?,
    };
    println!("{rendered}");
    Ok(if feasibility.feasible { 0 } else { EXIT_INFEASIBLE })
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<u8, CliError> {
    let catalog = load_catalog(&args.input)?;
    let count = catalog.combination_count();
    if count > CARTESIAN_MAX_CANDIDATES {
        return Err(CliError::size_limit(format!(
            "{count} one-hot combinations exceed the enumeration cap of {CARTESIAN_MAX_CANDIDATES}"
        )));
    }

    if !args.dump {
        match args.format {
            Format::Json => println!("{}", serde_json::json!({ "combinations": count })),
            Format::Table => println!("combinations: {count}"),
        }
        return Ok(0);
    }

    if count > DUMP_CAP {
        return Err(CliError::size_limit(format!(
            "{count} combinations exceed the --dump cap of {DUMP_CAP}"
        )));
    }
    let dump = dump_combinations(&catalog)?;
    write_or_print(&args.output, &dump)?;
    eprintln!("dumped {count} combinations");
    Ok(0)
}

/// Ranks every one-item-per-group combination by its attribute totals (in
/// catalog column order, ascending), ties broken by item position.
fn dump_combinations(catalog: &ChoiceCatalog) -> Result<String, CliError> {
    let groups: Vec<Vec<usize>> = catalog
        .groups()
        .iter()
        .map(|g| catalog.group_members(g))
        .collect();
    let attributes = catalog.attributes();

    let mut rows: Vec<(Vec<i64>, Vec<usize>)> = Vec::new();
    let mut cursor = vec![0usize; groups.len()];
    loop {
        let choice: Vec<usize> = cursor.iter().zip(&groups).map(|(&c, g)| g[c]).collect();
        let totals: Vec<i64> = attributes
            .iter()
            .map(|attr| choice.iter().map(|&i| catalog.items()[i].attributes[attr]).sum())
            .collect();
        rows.push((totals, choice));

        let mut p = groups.len();
        loop {
            if p == 0 {
                p = usize::MAX;
                break;
            }
            p -= 1;
            cursor[p] += 1;
            if cursor[p] < groups[p].len() {
                break;
            }
            cursor[p] = 0;
        }
        if p == usize::MAX {
            break;
        }
    }
    rows.sort();

    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = catalog.groups().to_vec();
    header.extend(attributes.iter().cloned());
    writer.write_record(&header).expect("in-memory write");
    for (totals, choice) in rows {
        let mut record: Vec<String> = choice
            .iter()
            .map(|&i| catalog.items()[i].name.clone())
            .collect();
        for (pos, attr) in attributes.iter().enumerate() {
            record.push(format_minor(totals[pos], catalog.scale(attr).expect("attribute")));
        }
        writer.write_record(&record).expect("in-memory write");
    }
    Ok(String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Build(args) => cmd_build(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Check(args) => cmd_check(args),
        Command::Enumerate(args) => cmd_enumerate(args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
