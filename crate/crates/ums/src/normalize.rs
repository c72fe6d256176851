//! Constructive schedule normalizations: moving a slow machine's makespan
//! onto a fast machine, and stretching loads so every machine is active in
//! a bounded number of consecutive periods.
//!
//! These transforms are used by tests and by the witness construction; the
//! solve pipeline itself relies only on the existence of schedules with
//! these properties.

use crate::model::{
    machine_loads, verify_schedule, Instance, JobStart, Schedule, StructuralError, Violation,
};
use crate::model::SchemeParams;
use crate::rational::{ceil_log, floor_log, Rat};
use num_traits::{Signed, Zero};

/// μ̃ = ⌈log_{1+ε}(1/ε) + 2⌉, the period budget per machine.
pub fn mu_tilde(params: &SchemeParams) -> i64 {
    ceil_log(&params.base(), &params.epsilon.recip()) + 2
}

/// The consecutive period exponents a machine is active in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActivityWindow {
    pub first_period_exp: i64,
    pub last_period_exp: i64,
}

impl ActivityWindow {
    pub fn period_count(&self) -> i64 {
        self.last_period_exp - self.first_period_exp + 1
    }
}

/// Window of periods touched by a machine's processing, treating each job
/// as the half-open interval [start, completion). `None` for an empty
/// machine. Requires the first start to be positive (time 0 lies below
/// every period of the geometric grid).
pub fn activity_window(
    params: &SchemeParams,
    speed: &Rat,
    jobs: &[JobStart],
    sizes: &[Rat],
) -> Option<ActivityWindow> {
    if jobs.is_empty() {
        return None;
    }
    let base = params.base();
    let first_start = jobs.iter().map(|js| js.start.clone()).min().unwrap();
    let last_completion = jobs
        .iter()
        .map(|js| &js.start + &sizes[js.job] / speed)
        .max()
        .unwrap();
    assert!(
        first_start.is_positive(),
        "activity window undefined for a start at time 0"
    );
    Some(ActivityWindow {
        first_period_exp: floor_log(&base, &first_start),
        last_period_exp: ceil_log(&base, &last_completion) - 1,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NormalizeError {
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error("input schedule is infeasible ({} violations)", .0.len())]
    Infeasible(Vec<Violation>),
    #[error("makespan is not attained on a machine of speed at least eps^2")]
    MakespanOnSlowMachine,
}

fn ensure_feasible(instance: &Instance, schedule: &Schedule) -> Result<(), NormalizeError> {
    let violations = verify_schedule(instance, schedule)?;
    if violations.is_empty() {
        Ok(())
    } else {
        Err(NormalizeError::Infeasible(violations))
    }
}

/// Repeatedly transfers the jobs of a slow makespan machine onto the
/// fastest machine (after its current load, never starting a job earlier
/// than before) until the makespan is attained on a machine of speed at
/// least ε². Ties among makespan machines break towards the lowest index.
pub fn pull_makespan_to_fast(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<Schedule, NormalizeError> {
    ensure_feasible(instance, schedule)?;
    let eps_sq = &instance.params.epsilon * &instance.params.epsilon;
    let mut lists = schedule.lists(instance.machines.len())?;
    let target = (0..instance.machines.len())
        .max_by(|&a, &b| {
            instance.machines[a]
                .speed
                .cmp(&instance.machines[b].speed)
                .then(b.cmp(&a))
        })
        .expect("validated instances have machines");
    let mut changed = false;
    loop {
        let current = Schedule::from_lists(lists.clone());
        let loads = machine_loads(instance, &current)?;
        let makespan = loads.iter().max().cloned().unwrap_or_else(Rat::zero);
        if makespan.is_zero() {
            break;
        }
        let fast_attainer = loads
            .iter()
            .enumerate()
            .any(|(i, l)| *l == makespan && instance.machines[i].speed >= eps_sq);
        if fast_attainer {
            break;
        }
        let source = loads
            .iter()
            .position(|l| *l == makespan)
            .expect("some machine attains the makespan");
        let mut frontier = loads[target].clone();
        let moved = std::mem::take(&mut lists[source]);
        for js in moved {
            let start = frontier.clone().max(js.start.clone());
            frontier = &start + &instance.jobs[js.job].size / &instance.machines[target].speed;
            lists[target].push(JobStart { job: js.job, start });
        }
        changed = true;
    }
    if !changed {
        return Ok(schedule.clone());
    }
    let result = Schedule::from_lists(lists);
    debug_assert!(verify_schedule(instance, &result).unwrap().is_empty());
    Ok(result)
}

/// Delays every machine's jobs by ε·Λ_i so its new load is exactly
/// (1+ε)·Λ_i and its activity fits in at most μ̃ consecutive periods.
pub fn stretch_to_window(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<Schedule, NormalizeError> {
    ensure_feasible(instance, schedule)?;
    let loads = machine_loads(instance, schedule)?;
    let makespan = loads.iter().max().cloned().unwrap_or_else(Rat::zero);
    if !makespan.is_zero() {
        let eps_sq = &instance.params.epsilon * &instance.params.epsilon;
        let ok = loads
            .iter()
            .enumerate()
            .any(|(i, l)| *l == makespan && instance.machines[i].speed >= eps_sq);
        if !ok {
            return Err(NormalizeError::MakespanOnSlowMachine);
        }
    }
    let mut lists = schedule.lists(instance.machines.len())?;
    for (machine, list) in lists.iter_mut().enumerate() {
        if list.is_empty() {
            continue;
        }
        let delay = &instance.params.epsilon * &loads[machine];
        for js in list.iter_mut() {
            js.start += &delay;
        }
    }
    let result = Schedule::from_lists(lists);
    debug_assert!(verify_schedule(instance, &result).unwrap().is_empty());
    Ok(result)
}
