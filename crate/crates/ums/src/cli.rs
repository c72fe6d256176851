//! Command-line front end: instance generation, the full solve pipeline,
//! the exact oracle, the verifier, and the benchmark harness.
//!
//! Exit codes: 0 success, 2 validation or input error, 3 infeasible,
//! 4 intractable scheme parameters.

use crate::generate::{generate_instance, GenProfile};
use crate::milp::LpMode;
use crate::model::{evaluate, verify_schedule, Instance, Schedule, SchemeParams};
use crate::oracle::{exact_optimum, OracleError, OracleLimits};
use crate::pipeline::{solve_instance, GuessStatus, Preset, SolveOptions};
use crate::rational::{parse_rat, pow_int, pow_phi, to_f64, Rat};
use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use num_traits::One;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_INTRACTABLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ums",
    about = "Scheduling of resource-consuming jobs on uniformly related machines"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random instance file.
    Generate(GenerateArgs),
    /// Run the approximation scheme on an instance.
    Solve(SolveArgs),
    /// Brute-force the exact optimum of a tiny instance.
    Exact(ExactArgs),
    /// Check a schedule against an instance.
    Verify(VerifyArgs),
    /// Solve every instance in a directory and emit a CSV summary.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 6)]
    pub jobs: usize,
    #[arg(long, default_value_t = 2)]
    pub machines: usize,
    #[arg(long, default_value_t = 2)]
    pub supplies: usize,
    /// easy (supply = 1.5x demand) or tight (supply = demand).
    #[arg(long, default_value = "easy")]
    pub profile: GenProfile,
    /// ε as "num/den"; 1/ε must be an integer.
    #[arg(long, default_value = "1/1")]
    pub epsilon: String,
    #[arg(long, default_value = "1/2")]
    pub psi: String,
    #[arg(long, default_value = "2/1")]
    pub phi: String,
    #[arg(long, default_value_t = 2)]
    pub rho: u32,
    /// Output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub instance: PathBuf,
    /// paper (ρ=10) or desk (ρ=2); omit to keep the instance's ρ.
    #[arg(long)]
    pub preset: Option<String>,
    /// exact (rational simplex) or float.
    #[arg(long, default_value = "exact")]
    pub lp_mode: String,
    /// Truncate the guess list (voids the approximation guarantee).
    #[arg(long)]
    pub max_guesses: Option<usize>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Branch-and-bound node budget per guess.
    #[arg(long, default_value_t = 200_000)]
    pub node_limit: usize,
    /// Cap on raw configuration vectors per (speed, load bound) pair.
    #[arg(long, default_value_t = 2_000_000)]
    pub max_configs: u128,
    /// Schedule output path.
    #[arg(long, default_value = "schedule.json")]
    pub out: PathBuf,
    /// Report output path.
    #[arg(long, default_value = "report.json")]
    pub report: PathBuf,
    /// Write the rounded instance (exponent form) here.
    #[arg(long)]
    pub dump_rounded: Option<PathBuf>,
    /// Write the feasible-configuration census CSV here.
    #[arg(long)]
    pub dump_configs: Option<PathBuf>,
    /// Write one LP-format file per guess into this directory.
    #[arg(long)]
    pub dump_lp: Option<PathBuf>,
    /// Write the per-guess trace JSON here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Compare against the exact oracle when the instance is small enough.
    #[arg(long)]
    pub compare_exact: bool,
    /// Include wall-clock timings in the report (not reproducible).
    #[arg(long)]
    pub timings: bool,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    pub instance: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 7)]
    pub max_jobs: usize,
    #[arg(long, default_value_t = 3)]
    pub max_machines: usize,
    #[arg(long, default_value_t = 3)]
    pub max_supplies: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub instance: PathBuf,
    pub schedule: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    pub dir: PathBuf,
    #[arg(long, default_value = "desk")]
    pub preset: String,
    #[arg(long, default_value = "float")]
    pub lp_mode: String,
    /// CSV output path (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
}

fn parse_preset(s: &str) -> anyhow::Result<Preset> {
    match s {
        "paper" => Ok(Preset::Paper),
        "desk" => Ok(Preset::Desk),
        other => anyhow::bail!("unknown preset {other:?} (paper|desk)"),
    }
}

fn parse_lp_mode(s: &str) -> anyhow::Result<LpMode> {
    match s {
        "exact" => Ok(LpMode::ExactRational),
        "float" => Ok(LpMode::Float),
        other => anyhow::bail!("unknown lp mode {other:?} (exact|float)"),
    }
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let raw = fs::read_to_string(path)
        .with_context(|| format!("reading instance {}", path.display()))?;
    Instance::from_json_str(&raw).with_context(|| format!("parsing {}", path.display()))
}

fn write_or_print(path: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, content).with_context(|| format!("writing {}", p.display()))?,
        None => println!("{content}"),
    }
    Ok(())
}

pub fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Generate(args) => generate_command(args),
        Command::Solve(args) => solve_command(args),
        Command::Exact(args) => exact_command(args),
        Command::Verify(args) => verify_command(args),
        Command::Bench(args) => bench_command(args),
    }
}

fn generate_command(args: GenerateArgs) -> anyhow::Result<i32> {
    let params = SchemeParams::new(
        parse_rat(&args.epsilon)?,
        parse_rat(&args.psi)?,
        parse_rat(&args.phi)?,
        args.rho,
    );
    if let Err(e) = params.validate() {
        eprintln!("invalid parameters: {e}");
        return Ok(EXIT_VALIDATION);
    }
    let instance = generate_instance(
        args.seed,
        args.jobs,
        args.machines,
        args.supplies,
        args.profile,
        params,
    );
    write_or_print(&args.out, &instance.to_json_string())?;
    Ok(EXIT_OK)
}

fn solve_command(args: SolveArgs) -> anyhow::Result<i32> {
    let instance = read_instance(&args.instance)?;
    if let Err(e) = instance.validate() {
        eprintln!("invalid instance: {e}");
        return Ok(EXIT_VALIDATION);
    }
    let preset = args.preset.as_deref().map(parse_preset).transpose()?;
    let options = SolveOptions {
        preset,
        lp_mode: parse_lp_mode(&args.lp_mode)?,
        max_guesses: args.max_guesses,
        threads: args.threads.max(1),
        enum_limits: crate::config::EnumLimits { max_raw_per_pair: args.max_configs },
        node_limit: args.node_limit,
        compare_exact: args.compare_exact,
        oracle_limits: OracleLimits::default(),
        timings: args.timings,
    };
    let output = solve_instance(&instance, &options)?;

    fs::write(&args.out, output.schedule.to_json_string())
        .with_context(|| format!("writing {}", args.out.display()))?;
    fs::write(&args.report, serde_json::to_string_pretty(&output.report)?)
        .with_context(|| format!("writing {}", args.report.display()))?;
    if let Some(path) = &args.dump_rounded {
        match &output.rounded {
            Some(rounded) => fs::write(path, serde_json::to_string_pretty(&rounded.dump())?)?,
            None => eprintln!("nothing to round (empty instance); skipping --dump-rounded"),
        }
    }
    if let Some(path) = &args.dump_configs {
        let mut csv = String::from("s_exp,w_exp,count\n");
        for (s, w, count) in &output.config_census {
            csv.push_str(&format!("{s},{w},{count}\n"));
        }
        fs::write(path, csv)?;
    }
    if let Some(dir) = &args.dump_lp {
        fs::create_dir_all(dir)?;
        for artifact in &output.artifacts {
            if let Some(text) = &artifact.lp_text {
                let name = format!(
                    "guess_c{}_s{}.lp",
                    artifact.guess.c_opt_exp, artifact.guess.s_opt_exp
                );
                fs::write(dir.join(name), text)?;
            }
        }
    }
    if let Some(path) = &args.trace {
        fs::write(path, serde_json::to_string_pretty(&output.report.guesses)?)?;
    }

    for warning in &output.report.warnings {
        eprintln!("warning: {warning}");
    }
    let objective = output.report.objective.as_ref().expect("solve sets objective");
    println!(
        "preset={} lp_mode={} guesses={} fallback={} combined={} makespan={}",
        output.report.preset,
        output.report.lp_mode,
        output.report.guesses.len(),
        output.report.fallback_greedy,
        to_f64(&objective.combined),
        to_f64(&objective.makespan),
    );
    if let Some(oracle) = &output.report.oracle {
        println!(
            "exact={} ratio={:.4}",
            to_f64(&oracle.objective.combined),
            oracle.ratio
        );
    }

    let any_solved = output
        .report
        .guesses
        .iter()
        .any(|g| matches!(g.status, GuessStatus::Solved));
    let any_intractable = output
        .report
        .guesses
        .iter()
        .any(|g| matches!(g.status, GuessStatus::Intractable { .. }));
    if !any_solved && any_intractable {
        eprintln!("scheme parameters intractable for every guess; schedule comes from the fallback");
        return Ok(EXIT_INTRACTABLE);
    }
    Ok(EXIT_OK)
}

fn exact_command(args: ExactArgs) -> anyhow::Result<i32> {
    let instance = read_instance(&args.instance)?;
    if let Err(e) = instance.validate() {
        eprintln!("invalid instance: {e}");
        return Ok(EXIT_VALIDATION);
    }
    let limits = OracleLimits {
        max_jobs: args.max_jobs,
        max_machines: args.max_machines,
        max_supplies: args.max_supplies,
    };
    match exact_optimum(&instance, &limits) {
        Ok((schedule, objective)) => {
            if let Some(out) = &args.out {
                fs::write(out, schedule.to_json_string())?;
            } else {
                println!("{}", schedule.to_json_string());
            }
            println!(
                "combined={} makespan={} norm={}",
                to_f64(&objective.combined),
                to_f64(&objective.makespan),
                to_f64(&objective.norm_cost),
            );
            Ok(EXIT_OK)
        }
        Err(e @ OracleError::TooLarge { .. }) => {
            eprintln!("{e}");
            Ok(EXIT_VALIDATION)
        }
        Err(e @ OracleError::Infeasible) => {
            eprintln!("{e}");
            Ok(EXIT_INFEASIBLE)
        }
    }
}

fn verify_command(args: VerifyArgs) -> anyhow::Result<i32> {
    let instance = read_instance(&args.instance)?;
    let raw = fs::read_to_string(&args.schedule)
        .with_context(|| format!("reading schedule {}", args.schedule.display()))?;
    let schedule = Schedule::from_json_str(&raw)
        .with_context(|| format!("parsing {}", args.schedule.display()))?;
    match verify_schedule(&instance, &schedule) {
        Err(e) => {
            eprintln!("structural error: {e}");
            Ok(EXIT_VALIDATION)
        }
        Ok(violations) if violations.is_empty() => {
            let objective = evaluate(&instance, &schedule).expect("feasible");
            println!(
                "feasible; combined={} makespan={}",
                to_f64(&objective.combined),
                to_f64(&objective.makespan)
            );
            Ok(EXIT_OK)
        }
        Ok(violations) => {
            for v in &violations {
                println!("violation: {v}");
            }
            Ok(EXIT_INFEASIBLE)
        }
    }
}

/// The end-to-end ratio bound (1+ε)^{6φ}·(1+6ε)^φ.
pub fn theoretical_bound(params: &SchemeParams) -> f64 {
    let base = params.base();
    let six_eps = Rat::one() + crate::rational::int(6) * &params.epsilon;
    let bound = pow_phi(&pow_int(&base, 6), &params.phi) * pow_phi(&six_eps, &params.phi);
    to_f64(&bound)
}

fn bench_command(args: BenchArgs) -> anyhow::Result<i32> {
    let preset = parse_preset(&args.preset)?;
    let lp_mode = parse_lp_mode(&args.lp_mode)?;
    let mut paths: Vec<PathBuf> = fs::read_dir(&args.dir)
        .with_context(|| format!("reading directory {}", args.dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map_or(false, |ext| ext == "json"))
        .collect();
    paths.sort();

    let mut csv = String::from(
        "instance,n,m,e,epsilon,alg_cost,exact_cost,ratio,theoretical_bound,wall_ms\n",
    );
    for path in &paths {
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        let instance = match read_instance(path) {
            Ok(i) => i,
            Err(e) => {
                eprintln!("skipping {name}: {e}");
                csv.push_str(&format!("{name},,,,,,,,,\n"));
                continue;
            }
        };
        if let Err(e) = instance.validate() {
            eprintln!("skipping {name}: {e}");
            csv.push_str(&format!("{name},,,,,,,,,\n"));
            continue;
        }
        let options = SolveOptions {
            preset: Some(preset),
            lp_mode,
            threads: args.threads.max(1),
            compare_exact: true,
            node_limit: 2_000,
            ..SolveOptions::default()
        };
        let started = Instant::now();
        let output = match solve_instance(&instance, &options) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("solve failed on {name}: {e}");
                csv.push_str(&format!("{name},,,,,,,,,\n"));
                continue;
            }
        };
        let wall_ms = started.elapsed().as_millis();
        let alg = output
            .report
            .objective
            .as_ref()
            .map(|o| to_f64(&o.combined))
            .unwrap_or(f64::NAN);
        let (exact_cost, ratio) = match &output.report.oracle {
            Some(oracle) => (
                format!("{}", to_f64(&oracle.objective.combined)),
                format!("{:.6}", oracle.ratio),
            ),
            None => (String::new(), String::new()),
        };
        let effective = instance.params.with_rho(preset.rho());
        csv.push_str(&format!(
            "{name},{},{},{},{},{alg},{exact_cost},{ratio},{},{wall_ms}\n",
            instance.jobs.len(),
            instance.machines.len(),
            instance.supplies.len(),
            crate::rational::format_rat(&instance.params.epsilon),
            theoretical_bound(&effective),
        ));
    }
    write_or_print(&args.out, csv.trim_end())?;
    Ok(EXIT_OK)
}
