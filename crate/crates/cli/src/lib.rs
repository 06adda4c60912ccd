//! The `pmm` command line: solve, verify, gen, bench and oracle.

pub mod bench;
pub mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pmm_core::filter::Mode;
use pmm_core::generate::{generate, GenParams, MatroidFamily};
use pmm_core::io::{instance_to_json, parse_instance, verify_solution, SolutionDoc};
use pmm_core::lp::{build_main_lp, with_explicit_matroid_rows};
use pmm_core::model::Instance;
use pmm_core::oracle::{oracle_report, DEFAULT_OPT_CAP};
use pmm_core::pipeline::{run_with_lp, run_with_tables, solve_relaxation, RunReport};
use pmm_core::{stage_three, stage_two, PmmError, Rat};

use report::ReportDoc;

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "pmm", version, about = "Exact LP rounding for priority matroid median")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve an instance and print the run report as JSON.
    Solve(SolveArgs),
    /// Recompute a solution file against its instance.
    Verify { instance: PathBuf, solution: PathBuf },
    /// Write a random instance.
    Gen(GenArgs),
    /// Solve every instance in a directory under several modes.
    Bench(bench::BenchArgs),
    /// Compare every mode with the brute-force optimum.
    Oracle {
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_OPT_CAP)]
        cap: usize,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    #[arg(long, default_value = "general21")]
    pub mode: Mode,
    /// JSON `{"phi": {client: value}, "lambda": {client: value}}`; replaces the mode's tables.
    #[arg(long)]
    pub tables: Option<PathBuf>,
    /// Print the main LP to stderr.
    #[arg(long)]
    pub dump_lp: bool,
    /// Print the per-center sets of both rounding stages to stderr.
    #[arg(long)]
    pub dump_stage2: bool,
    /// Write the solution JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Add approximate decimal values to the report.
    #[arg(long)]
    pub decimal: bool,
    /// Add wall-clock time to the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 8)]
    pub facilities: usize,
    #[arg(long, default_value_t = 8)]
    pub clients: usize,
    /// uniform, partition, laminar or graphic.
    #[arg(long, default_value = "uniform")]
    pub matroid: MatroidFamily,
    #[arg(long, default_value_t = 2)]
    pub q: usize,
    #[arg(long, default_value = "1")]
    pub slack: Rat,
    #[arg(long)]
    pub uniform_radius: bool,
    #[arg(long)]
    pub plant_infeasible: bool,
    #[arg(long, default_value_t = 20)]
    pub grid: i64,
    #[arg(long, default_value_t = 3)]
    pub max_demand: i64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error surfaced by a command.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<PmmError>() {
        Some(PmmError::Infeasible(_)) => EXIT_INFEASIBLE,
        Some(PmmError::Internal(_)) => EXIT_INTERNAL,
        _ => EXIT_INPUT,
    }
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).map_err(PmmError::from).with_context(|| format!("reading {}", path.display()))?;
    Ok(parse_instance(&text)?)
}

pub fn check_valid(inst: &Instance) -> Result<()> {
    let violations = pmm_core::model::validate_instance(inst);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(PmmError::InvalidInstance(violations.iter().map(|v| v.to_string()).collect()).into())
    }
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(PmmError::from).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_tables(inst: &Instance, path: &Path) -> Result<(Vec<Rat>, Vec<Rat>)> {
    #[derive(serde::Deserialize)]
    struct Tables {
        phi: BTreeMap<String, Rat>,
        lambda: BTreeMap<String, Rat>,
    }
    let text = fs::read_to_string(path).map_err(PmmError::from)?;
    let t: Tables = serde_json::from_str(&text).map_err(PmmError::from)?;
    let column = |m: &BTreeMap<String, Rat>, what: &str| -> Result<Vec<Rat>> {
        inst.clients
            .iter()
            .map(|c| {
                m.get(&c.id)
                    .cloned()
                    .ok_or_else(|| PmmError::Parse(format!("{what} has no value for client `{}`", c.id)).into())
            })
            .collect()
    };
    Ok((column(&t.phi, "phi")?, column(&t.lambda, "lambda")?))
}

/// Runs `solve` and returns the process exit code.
pub fn solve(args: &SolveArgs) -> Result<i32> {
    let start = Instant::now();
    let inst = read_instance(&args.instance)?;
    check_valid(&inst)?;
    if args.dump_lp {
        let main = build_main_lp(&inst);
        let program = with_explicit_matroid_rows(&main.program, std::slice::from_ref(&main.matroid));
        eprint!("{}", program.to_lp_text("main"));
    }
    let lp = solve_relaxation(&inst)?;
    let rep: RunReport = match &args.tables {
        None => run_with_lp(&inst, &lp, args.mode)?,
        Some(path) => {
            let (phi, lambda) = read_tables(&inst, path)?;
            run_with_tables(&inst, &lp, phi, lambda)?
        }
    };
    if args.dump_stage2 {
        eprint!("{}", stage_two::dump(&rep.reduced, &rep.clusters.center_lambda(), &rep.stage_two));
        eprint!("{}", stage_three::dump(&rep.reduced, &rep.stage_two.half, &rep.stage_three));
    }
    let mode_name = rep.mode.map_or("custom", |m| m.as_str());
    if let Some(out) = &args.out {
        let doc = SolutionDoc::from_solution(&inst, &rep.solution, Some(mode_name));
        write_or_print(Some(out), &doc.to_json())?;
    }
    let elapsed = args.timing.then(|| start.elapsed());
    let doc = ReportDoc::new(&rep, args.decimal, elapsed);
    write_or_print(args.report.as_deref(), &doc.to_json())?;
    match rep.ledger.first_failure() {
        Some(f) => {
            eprintln!("ledger row failed: {} ({} {:?} {})", f.name, f.lhs, f.relation, f.rhs);
            Ok(EXIT_INTERNAL)
        }
        None => Ok(EXIT_OK),
    }
}

pub fn verify(instance: &Path, solution: &Path) -> Result<i32> {
    let inst = read_instance(instance)?;
    let text = fs::read_to_string(solution).map_err(PmmError::from)?;
    let doc = SolutionDoc::parse(&text)?;
    let mismatches = verify_solution(&inst, &doc);
    for m in &mismatches {
        eprintln!("{m}");
    }
    if mismatches.is_empty() {
        println!("ok");
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_MISMATCH)
    }
}

pub fn gen(args: &GenArgs) -> Result<i32> {
    let p = GenParams {
        seed: args.seed,
        facilities: args.facilities,
        clients: args.clients,
        matroid: args.matroid,
        q: args.q,
        slack: args.slack.clone(),
        uniform_radius: args.uniform_radius,
        plant_infeasible: args.plant_infeasible,
        grid: args.grid,
        max_demand: args.max_demand,
        ..GenParams::default()
    };
    if args.slack.is_negative() {
        bail!(PmmError::Parse("slack must be nonnegative".into()));
    }
    let (inst, tag) = generate(&p)?;
    write_or_print(args.out.as_deref(), &instance_to_json(&inst, Some(tag)))?;
    Ok(EXIT_OK)
}

pub fn oracle(instance: &Path, cap: usize) -> Result<i32> {
    let inst = read_instance(instance)?;
    check_valid(&inst)?;
    let rep = oracle_report(&inst, cap)?;
    let mut text = serde_json::to_string_pretty(&rep).map_err(|e| anyhow!(e))?;
    text.push('\n');
    print!("{text}");
    Ok(if rep.modes.iter().all(|m| m.ledger_holds) { EXIT_OK } else { EXIT_INTERNAL })
}

/// Dispatches a parsed command line and returns the exit code.
pub fn dispatch(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Solve(a) => solve(a),
        Command::Verify { instance, solution } => verify(instance, solution),
        Command::Gen(a) => gen(a),
        Command::Bench(a) => bench::bench(a),
        Command::Oracle { instance, cap } => oracle(instance, *cap),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}
