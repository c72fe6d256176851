//! The full solve pipeline: round, guess, build and solve the MILP per
//! guess, extract a schedule, lift it back to the original instance, and
//! keep the cheapest feasible result. Falls back to the greedy baseline
//! when no guess yields a feasible model.

use crate::config::{candidate_pairs, enumerate_configurations, ConfigError, Configuration, EnumLimits};
use crate::extract::{assign_configurations, finalize, place_jobs, ExtractError};
use crate::guess::{enumerate_guesses, Guess};
use crate::milp::{build_model, solve as milp_solve, LpMode, MilpError, MilpOptions};
use crate::model::{
    evaluate, machine_loads, objective_from_loads, verify_schedule, Instance, ObjectiveValue,
    Schedule, ValidationError,
};
use crate::oracle::{exact_optimum, greedy_baseline, OracleError, OracleLimits};
use crate::rational::{format_rat, opt_rat_serde, to_f64, Rat};
use crate::rounding::{lift_schedule_to_original, round_instance, RoundedInstance};
use num_traits::Zero;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// ρ = 10, the analysed constants; configuration spaces are
    /// astronomical for small ε.
    Paper,
    /// ρ = 2; the pipeline stays exercisable at desk scale. Ratio
    /// guarantees are measured, not asserted.
    Desk,
}

impl Preset {
    pub fn rho(self) -> u32 {
        match self {
            Preset::Paper => 10,
            Preset::Desk => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Overrides the instance's ρ when set.
    pub preset: Option<Preset>,
    pub lp_mode: LpMode,
    /// Truncates the guess list (voids the approximation guarantee).
    pub max_guesses: Option<usize>,
    pub threads: usize,
    pub enum_limits: EnumLimits,
    pub node_limit: usize,
    /// Compare against the exact oracle when the instance is small enough.
    pub compare_exact: bool,
    pub oracle_limits: OracleLimits,
    /// Include wall-clock timings in the report (breaks byte-for-byte
    /// reproducibility across runs).
    pub timings: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            preset: None,
            lp_mode: LpMode::ExactRational,
            max_guesses: None,
            threads: 1,
            enum_limits: EnumLimits::default(),
            node_limit: 200_000,
            compare_exact: false,
            oracle_limits: OracleLimits::default(),
            timings: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GuessStatus {
    Solved,
    TriviallyInfeasible { reason: String },
    ModelInfeasible,
    ExtractionFailed { reason: String },
    Intractable { reason: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct GuessRecord {
    pub c_opt_exp: i64,
    pub s_opt_exp: i64,
    pub c_opt: String,
    pub s_opt: String,
    pub status: GuessStatus,
    pub columns: usize,
    pub rows: usize,
    pub integral_counters: usize,
    #[serde(with = "opt_rat_serde")]
    pub milp_objective: Option<Rat>,
    #[serde(with = "opt_rat_serde")]
    pub extracted_cost: Option<Rat>,
    /// Extracted rounded-instance cost divided by the MILP objective.
    #[serde(with = "opt_rat_serde")]
    pub extraction_ratio: Option<Rat>,
    pub leftover_count: Option<usize>,
    #[serde(with = "opt_rat_serde")]
    pub virtual_size: Option<Rat>,
    pub milp_nodes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleComparison {
    pub objective: ObjectiveValue,
    /// Algorithm cost / oracle cost (1 means optimal).
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub preset: String,
    pub lp_mode: String,
    pub n: usize,
    pub m: usize,
    pub e: usize,
    pub epsilon: String,
    pub rho: u32,
    pub guesses: Vec<GuessRecord>,
    /// Index into `guesses` of the chosen one, if any.
    pub chosen_guess: Option<usize>,
    pub fallback_greedy: bool,
    pub objective: Option<ObjectiveValue>,
    pub oracle: Option<OracleComparison>,
    pub warnings: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("MILP solver failure: {0}")]
    Milp(#[from] MilpError),
    #[error("oracle failure: {0}")]
    Oracle(#[from] OracleError),
    #[error("internal error: {0}")]
    Internal(String),
}

/// Per-guess artifacts the CLI can dump.
#[derive(Debug, Clone)]
pub struct GuessArtifacts {
    pub guess: Guess,
    pub lp_text: Option<String>,
}

#[derive(Debug)]
pub struct SolveOutput {
    pub schedule: Schedule,
    pub report: RunReport,
    pub rounded: Option<RoundedInstance>,
    pub artifacts: Vec<GuessArtifacts>,
    /// Feasible-configuration census per (s_exp, w_exp), for --dump-configs.
    pub config_census: Vec<(i64, i64, usize)>,
}

fn effective_instance(instance: &Instance, options: &SolveOptions) -> Instance {
    match options.preset {
        Some(preset) => Instance {
            params: instance.params.with_rho(preset.rho()),
            ..instance.clone()
        },
        None => instance.clone(),
    }
}

struct GuessOutcome {
    record: GuessRecord,
    schedule: Option<(Schedule, Rat)>,
    lp_text: Option<String>,
}

fn run_guess(
    rounded: &RoundedInstance,
    guess: &Guess,
    configs_by_pair: &BTreeMap<(i64, i64), Result<Vec<Configuration>, ConfigError>>,
    options: &SolveOptions,
    want_lp: bool,
) -> Result<GuessOutcome, PipelineError> {
    let params = &rounded.base.params;
    let started = Instant::now();
    let mut record = GuessRecord {
        c_opt_exp: guess.c_opt_exp,
        s_opt_exp: guess.s_opt_exp,
        c_opt: format_rat(&guess.c_opt(params)),
        s_opt: format_rat(&guess.s_opt(params)),
        status: GuessStatus::Solved,
        columns: 0,
        rows: 0,
        integral_counters: 0,
        milp_objective: None,
        extracted_cost: None,
        extraction_ratio: None,
        leftover_count: None,
        virtual_size: None,
        milp_nodes: None,
        wall_ms: None,
    };
    let finish = |mut record: GuessRecord,
                  schedule: Option<(Schedule, Rat)>,
                  lp_text: Option<String>|
     -> Result<GuessOutcome, PipelineError> {
        if options.timings {
            record.wall_ms = Some(started.elapsed().as_millis());
        }
        Ok(GuessOutcome { record, schedule, lp_text })
    };

    let mut configs: Vec<Configuration> = Vec::new();
    for pair in candidate_pairs(rounded, guess) {
        match configs_by_pair.get(&pair) {
            Some(Ok(list)) => configs.extend(list.iter().cloned()),
            Some(Err(e)) => {
                record.status = GuessStatus::Intractable { reason: e.to_string() };
                return finish(record, None, None);
            }
            None => {
                return Err(PipelineError::Internal(format!(
                    "missing configuration cache entry for pair {pair:?}"
                )))
            }
        }
    }

    let model = build_model(rounded, guess, &configs);
    record.columns = model.columns();
    record.rows = model.rows.len();
    record.integral_counters = model.integral_count();
    let lp_text = want_lp.then(|| model.to_lp_format());
    if let Some(reason) = &model.trivially_infeasible {
        record.status = GuessStatus::TriviallyInfeasible { reason: reason.clone() };
        return finish(record, None, lp_text);
    }

    let milp_options = MilpOptions { mode: options.lp_mode, node_limit: options.node_limit };
    let solution = match milp_solve(&model, &milp_options)? {
        Some(s) => s,
        None => {
            record.status = GuessStatus::ModelInfeasible;
            return finish(record, None, lp_text);
        }
    };
    record.milp_objective = Some(solution.objective.clone());
    record.milp_nodes = Some(solution.nodes);

    let extraction = assign_configurations(&model, &solution, rounded)
        .and_then(|assignment| {
            place_jobs(rounded, &model, &solution, &assignment)
                .map(|placement| (assignment, placement))
        })
        .and_then(|(assignment, placement)| finalize(rounded, &model, &assignment, &placement));
    let output = match extraction {
        Ok(output) => output,
        Err(e @ (ExtractError::ResourceOnAppend(_)
        | ExtractError::NoDesignatedMachine
        | ExtractError::Accounting(_))) => {
            record.status = GuessStatus::ExtractionFailed { reason: e.to_string() };
            return finish(record, None, lp_text);
        }
    };
    record.leftover_count = Some(output.leftover_count);
    record.virtual_size = Some(output.virtual_size.clone());

    let rounded_cost = {
        let inst = rounded.as_instance();
        let loads = machine_loads(&inst, &output.schedule)
            .map_err(|e| PipelineError::Internal(e.to_string()))?;
        objective_from_loads(params, &loads).combined
    };
    record.extracted_cost = Some(rounded_cost.clone());
    if let Some(obj) = &record.milp_objective {
        if !obj.is_zero() {
            record.extraction_ratio = Some(&rounded_cost / obj);
        }
    }
    finish(record, Some((output.schedule, rounded_cost)), lp_text)
}

/// Runs the whole scheme and returns the cheapest feasible schedule for the
/// original instance, together with the per-guess report.
pub fn solve_instance(
    instance: &Instance,
    options: &SolveOptions,
) -> Result<SolveOutput, PipelineError> {
    instance.validate()?;
    let effective = effective_instance(instance, options);
    let mut warnings = Vec::new();
    let mut report = RunReport {
        preset: match options.preset {
            Some(Preset::Paper) => "paper".to_string(),
            Some(Preset::Desk) => "desk".to_string(),
            None => "instance".to_string(),
        },
        lp_mode: match options.lp_mode {
            LpMode::ExactRational => "exact-rational".to_string(),
            LpMode::Float => "float".to_string(),
        },
        n: instance.jobs.len(),
        m: instance.machines.len(),
        e: instance.supplies.len(),
        epsilon: format_rat(&effective.params.epsilon),
        rho: effective.params.rho,
        guesses: Vec::new(),
        chosen_guess: None,
        fallback_greedy: false,
        objective: None,
        oracle: None,
        warnings: Vec::new(),
    };

    if instance.jobs.is_empty() {
        let schedule = Schedule::empty();
        report.objective = Some(objective_from_loads(
            &effective.params,
            &vec![Rat::zero(); instance.machines.len()],
        ));
        return Ok(SolveOutput {
            schedule,
            report,
            rounded: None,
            artifacts: Vec::new(),
            config_census: Vec::new(),
        });
    }

    let (reduced, kept) = effective.preprocessed();
    let rounded = round_instance(&reduced).map_err(|e| PipelineError::Internal(e.to_string()))?;

    let mut guesses = enumerate_guesses(&rounded);
    if let Some(max) = options.max_guesses {
        if guesses.len() > max {
            guesses.truncate(max);
            warnings.push(format!(
                "guess list truncated to {max}; the approximation guarantee is void"
            ));
        }
    }

    // Shared configuration cache over the union of all candidate pairs.
    let mut pairs: Vec<(i64, i64)> = guesses
        .iter()
        .flat_map(|g| candidate_pairs(&rounded, g))
        .collect();
    pairs.sort_unstable();
    pairs.dedup();
    let configs_by_pair: BTreeMap<(i64, i64), Result<Vec<Configuration>, ConfigError>> = pairs
        .iter()
        .map(|&(s, w)| ((s, w), enumerate_configurations(&rounded, s, w, &options.enum_limits)))
        .collect();
    let config_census: Vec<(i64, i64, usize)> = pairs
        .iter()
        .filter_map(|&(s, w)| {
            configs_by_pair
                .get(&(s, w))
                .and_then(|r| r.as_ref().ok())
                .map(|list| (s, w, list.len()))
        })
        .collect();

    let want_lp = true;
    let outcomes: Vec<Result<GuessOutcome, PipelineError>> = if options.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.threads)
            .build()
            .map_err(|e| PipelineError::Internal(e.to_string()))?;
        pool.install(|| {
            use rayon::prelude::*;
            guesses
                .par_iter()
                .map(|g| run_guess(&rounded, g, &configs_by_pair, options, want_lp))
                .collect()
        })
    } else {
        guesses
            .iter()
            .map(|g| run_guess(&rounded, g, &configs_by_pair, options, want_lp))
            .collect()
    };

    let mut best: Option<(usize, Schedule, Rat)> = None;
    let mut artifacts = Vec::new();
    for (idx, outcome) in outcomes.into_iter().enumerate() {
        let outcome = outcome?;
        artifacts.push(GuessArtifacts {
            guess: guesses[idx].clone(),
            lp_text: outcome.lp_text,
        });
        if let Some((schedule, cost)) = outcome.schedule {
            let replace = match &best {
                None => true,
                Some((_, _, best_cost)) => cost < *best_cost,
            };
            if replace {
                best = Some((idx, schedule, cost));
            }
        }
        report.guesses.push(outcome.record);
    }

    let final_schedule = match best {
        Some((idx, schedule, _)) => {
            report.chosen_guess = Some(idx);
            let lifted = lift_schedule_to_original(&rounded, &schedule)
                .map_err(|e| PipelineError::Internal(e.to_string()))?;
            // Map machine ids of the preprocessed instance back onto the
            // original ones (dropped machines stay empty).
            let lists = lifted
                .lists(reduced.machines.len())
                .map_err(|e| PipelineError::Internal(e.to_string()))?;
            let mut original_lists = vec![Vec::new(); instance.machines.len()];
            for (reduced_id, list) in lists.into_iter().enumerate() {
                original_lists[kept[reduced_id]] = list;
            }
            Schedule::from_lists(original_lists)
        }
        None => {
            report.fallback_greedy = true;
            warnings.push(
                "no guess produced a feasible model; falling back to the greedy baseline"
                    .to_string(),
            );
            greedy_baseline(instance)?
        }
    };

    let violations = verify_schedule(instance, &final_schedule)
        .map_err(|e| PipelineError::Internal(e.to_string()))?;
    if !violations.is_empty() {
        return Err(PipelineError::Internal(format!(
            "final schedule failed verification with {} violations",
            violations.len()
        )));
    }
    report.objective = Some(evaluate(instance, &final_schedule).expect("verified feasible"));

    if options.compare_exact {
        match exact_optimum(instance, &options.oracle_limits) {
            Ok((_, oracle_obj)) => {
                let alg = to_f64(&report.objective.as_ref().expect("set above").combined);
                let opt = to_f64(&oracle_obj.combined);
                report.oracle = Some(OracleComparison {
                    objective: oracle_obj,
                    ratio: if opt > 0.0 { alg / opt } else { 1.0 },
                });
            }
            Err(e @ OracleError::TooLarge { .. }) => {
                warnings.push(format!("oracle comparison skipped: {e}"));
            }
            Err(e) => return Err(e.into()),
        }
    }

    report.warnings = warnings;
    Ok(SolveOutput {
        schedule: final_schedule,
        report,
        rounded: Some(rounded),
        artifacts,
        config_census,
    })
}
