//! Instance and schedule data model, objective evaluation, and the
//! feasibility verifier every other module's output is checked against.
//!
//! A schedule is feasible when (a) jobs on a common machine do not overlap
//! and (b) for every time t, the total demand of jobs started strictly
//! before t is covered by the supplies replenished strictly before t. The
//! left side of that inequality changes only at job start times, so the
//! verifier checks it exactly at each distinct start. All checks run in
//! exact rational arithmetic; no verdict depends on a tolerance.

use crate::rational::{format_rat, pow_phi, rat_serde, Rat};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Job {
    #[serde(with = "rat_serde")]
    pub size: Rat,
    #[serde(with = "rat_serde")]
    pub demand: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Machine {
    #[serde(with = "rat_serde")]
    pub speed: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Supply {
    #[serde(with = "rat_serde")]
    pub date: Rat,
    #[serde(with = "rat_serde")]
    pub quantity: Rat,
}

/// Scheme parameters: ε with 1/ε a positive integer, the convex-combination
/// weight ψ ∈ [0,1], the load exponent φ > 1 and the job-classification
/// exponent ρ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeParams {
    #[serde(with = "rat_serde")]
    pub epsilon: Rat,
    #[serde(with = "rat_serde")]
    pub psi: Rat,
    #[serde(with = "rat_serde")]
    pub phi: Rat,
    pub rho: u32,
}

impl SchemeParams {
    pub fn new(epsilon: Rat, psi: Rat, phi: Rat, rho: u32) -> Self {
        Self { epsilon, psi, phi, rho }
    }

    /// 1 + ε, the geometric grid base.
    pub fn base(&self) -> Rat {
        Rat::one() + &self.epsilon
    }

    /// ε^ρ.
    pub fn eps_pow_rho(&self) -> Rat {
        crate::rational::pow_int(&self.epsilon, i64::from(self.rho))
    }

    pub fn with_rho(&self, rho: u32) -> Self {
        Self { rho, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), ValidationError> {
        if !self.epsilon.is_positive() || !self.epsilon.recip().is_integer() {
            return Err(ValidationError::BadEpsilon(format_rat(&self.epsilon)));
        }
        if self.psi.is_negative() || self.psi > Rat::one() {
            return Err(ValidationError::BadPsi(format_rat(&self.psi)));
        }
        if self.phi <= Rat::one() {
            return Err(ValidationError::BadPhi(format_rat(&self.phi)));
        }
        if self.rho == 0 {
            return Err(ValidationError::BadRho(self.rho));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub jobs: Vec<Job>,
    pub machines: Vec<Machine>,
    pub supplies: Vec<Supply>,
    pub params: SchemeParams,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("epsilon must be positive with integer reciprocal, got {0}")]
    BadEpsilon(String),
    #[error("psi must lie in [0, 1], got {0}")]
    BadPsi(String),
    #[error("phi must be greater than 1, got {0}")]
    BadPhi(String),
    #[error("rho must be a positive integer, got {0}")]
    BadRho(u32),
    #[error("instance needs at least one machine")]
    NoMachines,
    #[error("machine {0} speed must lie in (0, 1]")]
    BadSpeed(usize),
    #[error("the fastest machine must have speed exactly 1")]
    NoUnitSpeedMachine,
    #[error("job {0} size must be positive")]
    BadSize(usize),
    #[error("job {0} demand must be non-negative")]
    BadDemand(usize),
    #[error("supply {0} date must be non-negative")]
    BadDate(usize),
    #[error("supply dates must be strictly increasing (position {0})")]
    UnsortedDates(usize),
    #[error("supply {0} quantity must be positive in a raw instance")]
    BadQuantity(usize),
    #[error("total supply {supply} is less than total demand {demand}")]
    InsufficientSupply { supply: String, demand: String },
}

impl Instance {
    /// Full validation of a raw input instance (positive quantities).
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.validate_inner(false)
    }

    /// Validation for internally constructed instances, where zero-quantity
    /// replenishments are allowed (rounded instances carry them).
    pub fn validate_relaxed(&self) -> Result<(), ValidationError> {
        self.validate_inner(true)
    }

    fn validate_inner(&self, allow_zero_quantity: bool) -> Result<(), ValidationError> {
        self.params.validate()?;
        if self.machines.is_empty() {
            return Err(ValidationError::NoMachines);
        }
        let one = Rat::one();
        for (i, m) in self.machines.iter().enumerate() {
            if !m.speed.is_positive() || m.speed > one {
                return Err(ValidationError::BadSpeed(i));
            }
        }
        if !self.machines.iter().any(|m| m.speed == one) {
            return Err(ValidationError::NoUnitSpeedMachine);
        }
        for (j, job) in self.jobs.iter().enumerate() {
            if !job.size.is_positive() {
                return Err(ValidationError::BadSize(j));
            }
            if job.demand.is_negative() {
                return Err(ValidationError::BadDemand(j));
            }
        }
        for (k, s) in self.supplies.iter().enumerate() {
            if s.date.is_negative() {
                return Err(ValidationError::BadDate(k));
            }
            if k > 0 && self.supplies[k - 1].date >= s.date {
                return Err(ValidationError::UnsortedDates(k));
            }
            if !allow_zero_quantity && !s.quantity.is_positive() {
                return Err(ValidationError::BadQuantity(k));
            }
            if allow_zero_quantity && s.quantity.is_negative() {
                return Err(ValidationError::BadQuantity(k));
            }
        }
        let total_supply: Rat = self.supplies.iter().map(|s| s.quantity.clone()).sum();
        let total_demand: Rat = self.jobs.iter().map(|j| j.demand.clone()).sum();
        if total_supply < total_demand {
            return Err(ValidationError::InsufficientSupply {
                supply: format_rat(&total_supply),
                demand: format_rat(&total_demand),
            });
        }
        Ok(())
    }

    /// Drops the m − n slowest machines when m > n (keeping lower indices on
    /// speed ties). Returns the reduced instance and, for each kept machine,
    /// its index in the original instance.
    pub fn preprocessed(&self) -> (Instance, Vec<usize>) {
        let n = self.jobs.len();
        if self.machines.len() <= n || n == 0 {
            let kept = (0..self.machines.len()).collect();
            return (self.clone(), kept);
        }
        let mut order: Vec<usize> = (0..self.machines.len()).collect();
        // Fastest first; ties keep the earlier machine first.
        order.sort_by(|&a, &b| {
            self.machines[b]
                .speed
                .cmp(&self.machines[a].speed)
                .then(a.cmp(&b))
        });
        let mut kept: Vec<usize> = order.into_iter().take(n).collect();
        kept.sort_unstable();
        let machines = kept.iter().map(|&i| self.machines[i].clone()).collect();
        (
            Instance {
                jobs: self.jobs.clone(),
                machines,
                supplies: self.supplies.clone(),
                params: self.params.clone(),
            },
            kept,
        )
    }

    pub fn total_demand(&self) -> Rat {
        self.jobs.iter().map(|j| j.demand.clone()).sum()
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobStart {
    pub job: usize,
    #[serde(with = "rat_serde")]
    pub start: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MachineSchedule {
    pub machine: usize,
    pub jobs: Vec<JobStart>,
}

/// Per-machine ordered job starts; the single feasibility-checkable artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub assignments: Vec<MachineSchedule>,
}

impl Schedule {
    pub fn empty() -> Self {
        Schedule { assignments: Vec::new() }
    }

    /// Builds a schedule from one job list per machine index.
    pub fn from_lists(lists: Vec<Vec<JobStart>>) -> Self {
        let assignments = lists
            .into_iter()
            .enumerate()
            .filter(|(_, jobs)| !jobs.is_empty())
            .map(|(machine, jobs)| MachineSchedule { machine, jobs })
            .collect();
        Schedule { assignments }
    }

    /// Job lists indexed by machine, sorted by start time.
    pub fn lists(&self, machine_count: usize) -> Result<Vec<Vec<JobStart>>, StructuralError> {
        let mut lists = vec![Vec::new(); machine_count];
        let mut seen = vec![false; machine_count];
        for entry in &self.assignments {
            if entry.machine >= machine_count {
                return Err(StructuralError::UnknownMachine(entry.machine));
            }
            if seen[entry.machine] {
                return Err(StructuralError::DuplicateMachineEntry(entry.machine));
            }
            seen[entry.machine] = true;
            lists[entry.machine] = entry.jobs.clone();
        }
        for list in &mut lists {
            list.sort_by(|a, b| a.start.cmp(&b.start).then(a.job.cmp(&b.job)));
        }
        Ok(lists)
    }

    /// Canonical form: machines ascending, jobs by start time, empty
    /// machines omitted.
    pub fn canonicalized(&self, machine_count: usize) -> Result<Schedule, StructuralError> {
        Ok(Schedule::from_lists(self.lists(machine_count)?))
    }

    pub fn job_count(&self) -> usize {
        self.assignments.iter().map(|a| a.jobs.len()).sum()
    }

    pub fn from_json_str(s: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(s)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

/// Ill-formed input that is distinct from infeasibility.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StructuralError {
    #[error("schedule references unknown job {0}")]
    UnknownJob(usize),
    #[error("schedule references unknown machine {0}")]
    UnknownMachine(usize),
    #[error("schedule lists machine {0} more than once")]
    DuplicateMachineEntry(usize),
}

/// One violated feasibility constraint together with its witness.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    DuplicateJob { job: usize },
    MissingJob { job: usize },
    NegativeStart { machine: usize, job: usize },
    Overlap { machine: usize, first_job: usize, second_job: usize },
    Resource {
        #[serde(with = "rat_serde")]
        time: Rat,
        #[serde(with = "rat_serde")]
        required: Rat,
        #[serde(with = "rat_serde")]
        available: Rat,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateJob { job } => write!(f, "job {job} scheduled more than once"),
            Violation::MissingJob { job } => write!(f, "job {job} is not scheduled"),
            Violation::NegativeStart { machine, job } => {
                write!(f, "job {job} on machine {machine} starts before time 0")
            }
            Violation::Overlap { machine, first_job, second_job } => write!(
                f,
                "jobs {first_job} and {second_job} overlap on machine {machine}"
            ),
            Violation::Resource { time, required, available } => write!(
                f,
                "resource shortfall at time {}: {} required, {} supplied",
                format_rat(time),
                format_rat(required),
                format_rat(available)
            ),
        }
    }
}

/// Checks a schedule against an instance and returns every violated
/// constraint; an empty list means the schedule is feasible.
pub fn verify_schedule(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<Vec<Violation>, StructuralError> {
    let lists = schedule.lists(instance.machines.len())?;
    for entry in &schedule.assignments {
        for js in &entry.jobs {
            if js.job >= instance.jobs.len() {
                return Err(StructuralError::UnknownJob(js.job));
            }
        }
    }

    let mut violations = Vec::new();
    let mut occurrences = vec![0usize; instance.jobs.len()];
    for (machine, list) in lists.iter().enumerate() {
        let speed = &instance.machines[machine].speed;
        let mut prev_end: Option<(usize, Rat)> = None;
        for js in list {
            occurrences[js.job] += 1;
            if js.start.is_negative() {
                violations.push(Violation::NegativeStart { machine, job: js.job });
            }
            let end = &js.start + &instance.jobs[js.job].size / speed;
            if let Some((prev_job, prev_end)) = prev_end {
                if js.start < prev_end {
                    violations.push(Violation::Overlap {
                        machine,
                        first_job: prev_job,
                        second_job: js.job,
                    });
                }
            }
            prev_end = Some((js.job, end));
        }
    }
    for (job, &count) in occurrences.iter().enumerate() {
        if count == 0 {
            violations.push(Violation::MissingJob { job });
        } else if count > 1 {
            violations.push(Violation::DuplicateJob { job });
        }
    }

    // Resource prefix inequality, checked at each distinct start time t:
    // demand of jobs started at or before t must not exceed the supplies
    // replenished at or before t.
    let mut demand_at: BTreeMap<Rat, Rat> = BTreeMap::new();
    for list in &lists {
        for js in list {
            let d = instance.jobs[js.job].demand.clone();
            demand_at
                .entry(js.start.clone())
                .and_modify(|acc| *acc += &d)
                .or_insert(d);
        }
    }
    let mut supplied = Rat::zero();
    let mut supply_iter = instance.supplies.iter().peekable();
    let mut consumed = Rat::zero();
    for (time, demand) in demand_at {
        while let Some(s) = supply_iter.peek() {
            if s.date <= time {
                supplied += &s.quantity;
                supply_iter.next();
            } else {
                break;
            }
        }
        consumed += &demand;
        if consumed > supplied {
            violations.push(Violation::Resource {
                time,
                required: consumed.clone(),
                available: supplied.clone(),
            });
        }
    }

    Ok(violations)
}

/// Λ_i for every machine: the completion time of its last job (idle time
/// counts), 0 for empty machines.
pub fn machine_loads(
    instance: &Instance,
    schedule: &Schedule,
) -> Result<Vec<Rat>, StructuralError> {
    let lists = schedule.lists(instance.machines.len())?;
    let mut loads = Vec::with_capacity(lists.len());
    for (machine, list) in lists.iter().enumerate() {
        let speed = &instance.machines[machine].speed;
        let mut load = Rat::zero();
        for js in list {
            if js.job >= instance.jobs.len() {
                return Err(StructuralError::UnknownJob(js.job));
            }
            let end = &js.start + &instance.jobs[js.job].size / speed;
            if end > load {
                load = end;
            }
        }
        loads.push(load);
    }
    Ok(loads)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveValue {
    #[serde(with = "rat_serde")]
    pub makespan: Rat,
    #[serde(with = "rat_serde")]
    pub norm_cost: Rat,
    #[serde(with = "rat_serde")]
    pub combined: Rat,
}

/// ψ·makespan + (1−ψ)·Σ Λ_i^φ from a load vector.
pub fn objective_from_loads(params: &SchemeParams, loads: &[Rat]) -> ObjectiveValue {
    let makespan = loads.iter().max().cloned().unwrap_or_else(Rat::zero);
    let norm_cost: Rat = loads.iter().map(|l| pow_phi(l, &params.phi)).sum();
    let combined = &params.psi * &makespan + (Rat::one() - &params.psi) * &norm_cost;
    ObjectiveValue { makespan, norm_cost, combined }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvaluateError {
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error("schedule is infeasible ({} violations)", .0.len())]
    Infeasible(Vec<Violation>),
}

/// Objective of a feasible schedule; errors carry the violation list.
pub fn evaluate(instance: &Instance, schedule: &Schedule) -> Result<ObjectiveValue, EvaluateError> {
    let violations = verify_schedule(instance, schedule)?;
    if !violations.is_empty() {
        return Err(EvaluateError::Infeasible(violations));
    }
    let loads = machine_loads(instance, schedule)?;
    Ok(objective_from_loads(&instance.params, &loads))
}
