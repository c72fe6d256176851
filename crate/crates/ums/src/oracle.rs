//! Exact brute-force optimum for tiny instances and a greedy baseline.
//!
//! The exact search places jobs in non-decreasing start order (ties by job
//! id), each at its earliest resource-feasible start on its machine. An
//! exchange argument shows some optimal schedule has this form: retiming
//! any feasible schedule job by job in start order never moves a start
//! later. Duplicate states reached through permutations of equal jobs are
//! pruned by a seen-state set.

use crate::model::{
    machine_loads, objective_from_loads, verify_schedule, Instance, JobStart, ObjectiveValue,
    Schedule,
};
use crate::rational::{pow_phi, Rat};
use num_traits::{One, Signed, Zero};
use std::collections::HashSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleLimits {
    pub max_jobs: usize,
    pub max_machines: usize,
    pub max_supplies: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits { max_jobs: 7, max_machines: 3, max_supplies: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error(
        "instance too large for the exact oracle: n={n} (max {max_n}), \
         m={m} (max {max_m}), e={e} (max {max_e})"
    )]
    TooLarge { n: usize, m: usize, e: usize, max_n: usize, max_m: usize, max_e: usize },
    #[error("total supply is smaller than total demand; no feasible schedule exists")]
    Infeasible,
}

struct Search<'a> {
    instance: &'a Instance,
    proc: Vec<Vec<Rat>>, // [machine][job]
    cum_supply: Vec<(Rat, Rat)>,
    total_supply: Rat,
    psi: Rat,
    one_minus_psi: Rat,
    incumbent: Option<(Rat, Vec<Vec<JobStart>>)>,
    seen: HashSet<(u32, Vec<(Rat, Rat)>, Rat, usize)>,
}

impl<'a> Search<'a> {
    /// Earliest time by which `needed` units have been replenished.
    fn ready_time(&self, needed: &Rat) -> Option<Rat> {
        if !needed.is_positive() {
            return Some(Rat::zero());
        }
        if *needed > self.total_supply {
            return None;
        }
        for (date, cum) in &self.cum_supply {
            if cum >= needed {
                return Some(date.clone());
            }
        }
        None
    }

    fn lower_bound(&self, frontiers: &[Rat]) -> Rat {
        let makespan = frontiers.iter().max().cloned().unwrap_or_else(Rat::zero);
        let norm: Rat = frontiers
            .iter()
            .map(|f| pow_phi(f, &self.instance.params.phi))
            .sum();
        &self.psi * makespan + &self.one_minus_psi * norm
    }

    fn dfs(
        &mut self,
        mask: u32,
        frontiers: &mut Vec<Rat>,
        lists: &mut Vec<Vec<JobStart>>,
        used: &Rat,
        last_start: &Rat,
        last_job: usize,
    ) {
        let n = self.instance.jobs.len();
        if mask == (1u32 << n) - 1 {
            let cost = self.lower_bound(frontiers);
            let better = match &self.incumbent {
                None => true,
                Some((best, _)) => cost < *best,
            };
            if better {
                self.incumbent = Some((cost, lists.clone()));
            }
            return;
        }
        if let Some((best, _)) = &self.incumbent {
            if self.lower_bound(frontiers) >= *best {
                return;
            }
        }
        let mut key_frontiers: Vec<(Rat, Rat)> = frontiers
            .iter()
            .enumerate()
            .map(|(i, f)| (self.instance.machines[i].speed.clone(), f.clone()))
            .collect();
        key_frontiers.sort();
        if !self
            .seen
            .insert((mask, key_frontiers, last_start.clone(), last_job))
        {
            return;
        }

        for j in 0..n {
            if mask & (1 << j) != 0 {
                continue;
            }
            let needed = used + &self.instance.jobs[j].demand;
            let Some(ready) = self.ready_time(&needed) else { continue };
            for i in 0..self.instance.machines.len() {
                let start = frontiers[i].clone().max(ready.clone());
                // Chronological canonical order: never place a job that
                // could only start before (or tied below) the previous one.
                if start < *last_start || (start == *last_start && j < last_job) {
                    continue;
                }
                let old_frontier = frontiers[i].clone();
                frontiers[i] = &start + &self.proc[i][j];
                lists[i].push(JobStart { job: j, start: start.clone() });
                let new_used = used + &self.instance.jobs[j].demand;
                self.dfs(mask | (1 << j), frontiers, lists, &new_used, &start, j);
                lists[i].pop();
                frontiers[i] = old_frontier;
            }
        }
    }
}

/// Globally optimal schedule and objective over all assignments, orders and
/// resource-feasible start times. Refuses instances beyond the limits.
pub fn exact_optimum(
    instance: &Instance,
    limits: &OracleLimits,
) -> Result<(Schedule, ObjectiveValue), OracleError> {
    let (n, m, e) = (
        instance.jobs.len(),
        instance.machines.len(),
        instance.supplies.len(),
    );
    if n > limits.max_jobs || m > limits.max_machines || e > limits.max_supplies {
        return Err(OracleError::TooLarge {
            n,
            m,
            e,
            max_n: limits.max_jobs,
            max_m: limits.max_machines,
            max_e: limits.max_supplies,
        });
    }
    let total_supply: Rat = instance.supplies.iter().map(|s| s.quantity.clone()).sum();
    let total_demand: Rat = instance.jobs.iter().map(|j| j.demand.clone()).sum();
    if total_supply < total_demand {
        return Err(OracleError::Infeasible);
    }
    if n == 0 {
        return Ok((
            Schedule::empty(),
            objective_from_loads(&instance.params, &vec![Rat::zero(); m]),
        ));
    }

    let proc: Vec<Vec<Rat>> = instance
        .machines
        .iter()
        .map(|machine| {
            instance
                .jobs
                .iter()
                .map(|job| &job.size / &machine.speed)
                .collect()
        })
        .collect();
    let mut cum_supply = Vec::with_capacity(e);
    let mut acc = Rat::zero();
    for s in &instance.supplies {
        acc += &s.quantity;
        cum_supply.push((s.date.clone(), acc.clone()));
    }
    let mut search = Search {
        instance,
        proc,
        cum_supply,
        total_supply,
        psi: instance.params.psi.clone(),
        one_minus_psi: Rat::one() - &instance.params.psi,
        incumbent: None,
        seen: HashSet::new(),
    };
    let mut frontiers = vec![Rat::zero(); m];
    let mut lists = vec![Vec::new(); m];
    // last_job starts at 0: `j < 0` never holds, so every first placement
    // is admissible.
    search.dfs(0, &mut frontiers, &mut lists, &Rat::zero(), &Rat::zero(), 0);
    let (_, lists) = search.incumbent.expect("some feasible schedule exists");
    let schedule = Schedule::from_lists(lists);
    debug_assert!(verify_schedule(instance, &schedule).unwrap().is_empty());
    let loads = machine_loads(instance, &schedule).expect("valid schedule");
    Ok((schedule, objective_from_loads(&instance.params, &loads)))
}

/// Greedy list-scheduling baseline: jobs by (demand asc, size desc), each
/// placed on the machine minimizing the resulting combined objective at its
/// earliest resource-feasible start. Always feasible when the total supply
/// covers the total demand.
pub fn greedy_baseline(instance: &Instance) -> Result<Schedule, OracleError> {
    let total_supply: Rat = instance.supplies.iter().map(|s| s.quantity.clone()).sum();
    let total_demand: Rat = instance.jobs.iter().map(|j| j.demand.clone()).sum();
    if total_supply < total_demand {
        return Err(OracleError::Infeasible);
    }
    let m = instance.machines.len();
    let mut order: Vec<usize> = (0..instance.jobs.len()).collect();
    order.sort_by(|&a, &b| {
        let ja = &instance.jobs[a];
        let jb = &instance.jobs[b];
        ja.demand
            .cmp(&jb.demand)
            .then(jb.size.cmp(&ja.size))
            .then(a.cmp(&b))
    });

    let mut lists: Vec<Vec<JobStart>> = vec![Vec::new(); m];
    let mut frontiers = vec![Rat::zero(); m];
    let mut placed_starts: Vec<(Rat, Rat)> = Vec::new(); // (start, demand)
    for j in order {
        let demand = &instance.jobs[j].demand;
        let mut best: Option<(Rat, usize, Rat)> = None; // (objective, machine, start)
        for i in 0..m {
            let start = earliest_feasible(
                instance,
                &placed_starts,
                &frontiers[i],
                demand,
            );
            let Some(start) = start else { continue };
            let mut loads = frontiers.clone();
            loads[i] = &start + &instance.jobs[j].size / &instance.machines[i].speed;
            let objective = objective_from_loads(&instance.params, &loads).combined;
            let better = match &best {
                None => true,
                Some((obj, _, _)) => objective < *obj,
            };
            if better {
                best = Some((objective, i, start));
            }
        }
        let (_, i, start) = best.expect("supply covers demand, so a start exists");
        frontiers[i] = &start + &instance.jobs[j].size / &instance.machines[i].speed;
        lists[i].push(JobStart { job: j, start: start.clone() });
        if demand.is_positive() {
            placed_starts.push((start, demand.clone()));
        }
    }
    let schedule = Schedule::from_lists(lists);
    debug_assert!(verify_schedule(instance, &schedule).unwrap().is_empty());
    Ok(schedule)
}

/// Earliest start >= `frontier` at which adding a job of the given demand
/// keeps the resource prefix inequality valid at every later time.
fn earliest_feasible(
    instance: &Instance,
    placed: &[(Rat, Rat)],
    frontier: &Rat,
    demand: &Rat,
) -> Option<Rat> {
    if !demand.is_positive() {
        return Some(frontier.clone());
    }
    // Breakpoints where the slack Q(t) - D(t) can change.
    let mut breakpoints: Vec<Rat> = instance.supplies.iter().map(|s| s.date.clone()).collect();
    breakpoints.extend(placed.iter().map(|(t, _)| t.clone()));
    breakpoints.push(frontier.clone());
    breakpoints.sort();
    breakpoints.dedup();
    let slack_at = |t: &Rat| -> Rat {
        let supplied: Rat = instance
            .supplies
            .iter()
            .filter(|s| s.date <= *t)
            .map(|s| s.quantity.clone())
            .sum();
        let consumed: Rat = placed
            .iter()
            .filter(|(start, _)| start <= t)
            .map(|(_, d)| d.clone())
            .sum();
        supplied - consumed
    };
    // Suffix minimum of slack over breakpoints >= candidate.
    for candidate in breakpoints.iter().filter(|b| **b >= *frontier) {
        let ok = breakpoints
            .iter()
            .filter(|b| *b >= candidate)
            .all(|b| slack_at(b) >= *demand);
        if ok {
            return Some(candidate.clone());
        }
    }
    None
}
