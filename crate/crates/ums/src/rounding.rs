//! Geometric rounding of sizes, speeds and replenishment dates, plus the
//! two schedule mappings between an instance and its rounded form.
//!
//! Sizes are rounded up to integer powers of 1+ε, speeds down, and
//! replenishment dates are shifted by ε·p_min and rounded up. Identical
//! rounded dates are merged by summing quantities; merging can move supply
//! quantity to an earlier rounded date whose value still covers the original
//! date, which may leave later periods with zero quantity.

use crate::model::{
    verify_schedule, Instance, JobStart, Schedule, StructuralError, Supply, ValidationError,
    Violation,
};
use crate::rational::{ceil_log, floor_log, pow_int, rat_serde, Rat};
use num_traits::Zero;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundedSupply {
    pub date_exp: i64,
    #[serde(with = "rat_serde")]
    pub quantity: Rat,
}

/// A rounded instance, with all rounded quantities kept as integer
/// exponents of the exact rational base 1+ε; rational values are
/// materialized on demand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoundedInstance {
    /// The (preprocessed) original instance the rounding was applied to.
    pub base: Instance,
    /// p'_j = (1+ε)^size_exps[j].
    pub size_exps: Vec<i64>,
    /// s'_i = (1+ε)^speed_exps[i]; never positive, 0 for the fastest machine.
    pub speed_exps: Vec<i64>,
    /// Merged supply list; date exponents strictly increasing.
    pub supplies: Vec<RoundedSupply>,
    /// Minimum original job size.
    pub p_min: Rat,
    /// Exponent of the first rounded replenishment date (0 if none).
    pub alpha_exp: i64,
    /// Exponent of the last rounded replenishment date (alpha_exp − 1 if none).
    pub beta_exp: i64,
    /// Number of period indices carrying replenishment dates,
    /// beta_exp − alpha_exp + 1.
    pub mu: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoundingError {
    #[error("rounding requires at least one job")]
    NoJobs,
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Structural(#[from] StructuralError),
    #[error("input schedule is infeasible ({} violations)", .0.len())]
    InfeasibleInput(Vec<Violation>),
}

impl RoundedInstance {
    /// The grid base 1+ε.
    pub fn grid_base(&self) -> Rat {
        self.base.params.base()
    }

    pub fn power(&self, exp: i64) -> Rat {
        pow_int(&self.grid_base(), exp)
    }

    /// Rounded size p'_j.
    pub fn size(&self, job: usize) -> Rat {
        self.power(self.size_exps[job])
    }

    /// Rounded speed s'_i.
    pub fn speed(&self, machine: usize) -> Rat {
        self.power(self.speed_exps[machine])
    }

    /// Exponent of the rounded processing time p'_j / s'_i.
    pub fn proc_exp(&self, job: usize, machine: usize) -> i64 {
        self.size_exps[job] - self.speed_exps[machine]
    }

    pub fn proc_time(&self, job: usize, machine: usize) -> Rat {
        self.power(self.proc_exp(job, machine))
    }

    /// Quantity replenished at period exponent `exp` (zero when none).
    pub fn supply_at(&self, exp: i64) -> Rat {
        self.supplies
            .iter()
            .find(|s| s.date_exp == exp)
            .map(|s| s.quantity.clone())
            .unwrap_or_else(Rat::zero)
    }

    /// Materializes the rounded instance as a plain instance (sizes, speeds
    /// and supply dates replaced by their rounded rational values).
    pub fn as_instance(&self) -> Instance {
        let jobs = self
            .base
            .jobs
            .iter()
            .enumerate()
            .map(|(j, job)| crate::model::Job {
                size: self.size(j),
                demand: job.demand.clone(),
            })
            .collect();
        let machines = (0..self.base.machines.len())
            .map(|i| crate::model::Machine { speed: self.speed(i) })
            .collect();
        let supplies = self
            .supplies
            .iter()
            .map(|s| Supply {
                date: self.power(s.date_exp),
                quantity: s.quantity.clone(),
            })
            .collect();
        Instance {
            jobs,
            machines,
            supplies,
            params: self.base.params.clone(),
        }
    }

    /// Exponent-form view for `--dump-rounded`.
    pub fn dump(&self) -> RoundedDump {
        RoundedDump {
            size_exps: self.size_exps.clone(),
            speed_exps: self.speed_exps.clone(),
            supplies: self.supplies.clone(),
            p_min: self.p_min.clone(),
            alpha_exp: self.alpha_exp,
            beta_exp: self.beta_exp,
            mu: self.mu,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundedDump {
    pub size_exps: Vec<i64>,
    pub speed_exps: Vec<i64>,
    pub supplies: Vec<RoundedSupply>,
    #[serde(with = "rat_serde")]
    pub p_min: Rat,
    pub alpha_exp: i64,
    pub beta_exp: i64,
    pub mu: i64,
}

/// Rounds a valid instance onto the geometric grid.
pub fn round_instance(instance: &Instance) -> Result<RoundedInstance, RoundingError> {
    if instance.jobs.is_empty() {
        return Err(RoundingError::NoJobs);
    }
    let base = instance.params.base();
    let p_min = instance
        .jobs
        .iter()
        .map(|j| j.size.clone())
        .min()
        .expect("non-empty jobs");

    let size_exps = instance
        .jobs
        .iter()
        .map(|j| ceil_log(&base, &j.size))
        .collect();
    let speed_exps = instance
        .machines
        .iter()
        .map(|m| floor_log(&base, &m.speed))
        .collect();

    // Round dates up after the ε·p_min shift, then merge equal dates. The
    // merged quantity at a rounded date is the total original quantity
    // supplied up to that date value, minus what earlier rounded dates
    // already carry.
    let shift = &instance.params.epsilon * &p_min;
    let mut date_exps: Vec<i64> = instance
        .supplies
        .iter()
        .map(|s| ceil_log(&base, &(&s.date + &shift)))
        .collect();
    date_exps.dedup();
    let mut supplies = Vec::with_capacity(date_exps.len());
    let mut released = Rat::zero();
    for &exp in &date_exps {
        let date_value = pow_int(&base, exp);
        let cum: Rat = instance
            .supplies
            .iter()
            .filter(|s| s.date <= date_value)
            .map(|s| s.quantity.clone())
            .sum();
        let quantity = &cum - &released;
        released = cum;
        supplies.push(RoundedSupply { date_exp: exp, quantity });
    }

    let (alpha_exp, beta_exp) = match (supplies.first(), supplies.last()) {
        (Some(first), Some(last)) => (first.date_exp, last.date_exp),
        _ => (0, -1),
    };
    let rounded = RoundedInstance {
        base: instance.clone(),
        size_exps,
        speed_exps,
        supplies,
        p_min,
        alpha_exp,
        beta_exp,
        mu: beta_exp - alpha_exp + 1,
    };
    debug_assert!(rounded.as_instance().validate_relaxed().is_ok());
    Ok(rounded)
}

/// A schedule feasible for the rounded instance is feasible for the
/// original one at the same starts; makespan and norm-cost do not grow.
pub fn lift_schedule_to_original(
    rounded: &RoundedInstance,
    schedule: &Schedule,
) -> Result<Schedule, RoundingError> {
    let violations = verify_schedule(&rounded.as_instance(), schedule)?;
    if !violations.is_empty() {
        return Err(RoundingError::InfeasibleInput(violations));
    }
    Ok(schedule.clone())
}

/// Maps a schedule feasible for the original instance onto the rounded one:
/// every completion time is scaled by (1+ε)³ and each job starts at its new
/// completion minus its rounded processing time. Slack that this opens
/// between consecutive jobs is left as idle.
pub fn push_schedule_to_rounded(
    rounded: &RoundedInstance,
    schedule: &Schedule,
) -> Result<Schedule, RoundingError> {
    let original = &rounded.base;
    let violations = verify_schedule(original, schedule)?;
    if !violations.is_empty() {
        return Err(RoundingError::InfeasibleInput(violations));
    }
    let scale = pow_int(&original.params.base(), 3);
    let lists = schedule.lists(original.machines.len())?;
    let mut new_lists = Vec::with_capacity(lists.len());
    for (machine, list) in lists.into_iter().enumerate() {
        let speed = &original.machines[machine].speed;
        let mut new_list = Vec::with_capacity(list.len());
        for js in list {
            let completion = &js.start + &original.jobs[js.job].size / speed;
            let new_completion = &scale * &completion;
            let start = &new_completion - rounded.proc_time(js.job, machine);
            new_list.push(JobStart { job: js.job, start });
        }
        new_lists.push(new_list);
    }
    Ok(Schedule::from_lists(new_lists))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{evaluate, Job, Machine, SchemeParams, Supply};
    use crate::rational::{int, pow_phi, rat};

    fn instance(eps: Rat, jobs: Vec<(i64, i64)>, speeds: Vec<Rat>, supplies: Vec<(i64, i64)>) -> Instance {
        Instance {
            jobs: jobs
                .into_iter()
                .map(|(s, d)| Job { size: int(s), demand: int(d) })
                .collect(),
            machines: speeds.into_iter().map(|speed| Machine { speed }).collect(),
            supplies: supplies
                .into_iter()
                .map(|(u, q)| Supply { date: int(u), quantity: int(q) })
                .collect(),
            params: SchemeParams::new(eps, rat(1, 2), int(2), 2),
        }
    }

    #[test]
    fn sizes_speeds_and_dates_round_to_grid() {
        let inst = instance(int(1), vec![(3, 1)], vec![int(1), rat(7, 10)], vec![(0, 1)]);
        let rounded = round_instance(&inst).unwrap();
        assert_eq!(rounded.size_exps, vec![2]); // 3 -> 4
        assert_eq!(rounded.size(0), int(4));
        assert_eq!(rounded.speed_exps, vec![0, -1]); // 7/10 -> 1/2
        assert_eq!(rounded.speed(1), rat(1, 2));
        // u_1 = 0, p_min = 3: date rounds to 2^ceil(log2 3) = 4.
        assert_eq!(rounded.supplies[0].date_exp, 2);
        assert_eq!(rounded.alpha_exp, 2);
        assert_eq!(rounded.mu, 1);
    }

    #[test]
    fn merging_pulls_quantity_to_covering_dates() {
        // Dates 0 and 3 with p_min 3 and eps 1 round to 4 and 8; date 3 is
        // already covered by the rounded date 4, so its quantity moves there
        // and the later period carries zero.
        let inst = instance(int(1), vec![(3, 2)], vec![int(1)], vec![(0, 1), (3, 1)]);
        let rounded = round_instance(&inst).unwrap();
        assert_eq!(rounded.supplies.len(), 2);
        assert_eq!(rounded.supplies[0].date_exp, 2);
        assert_eq!(rounded.supplies[0].quantity, int(2));
        assert_eq!(rounded.supplies[1].date_exp, 3);
        assert_eq!(rounded.supplies[1].quantity, int(0));
        let total: Rat = rounded.supplies.iter().map(|s| s.quantity.clone()).sum();
        assert_eq!(total, int(2));
    }

    #[test]
    fn processing_time_sandwich_holds() {
        let inst = instance(
            rat(1, 2),
            vec![(3, 0), (7, 0), (1, 0)],
            vec![int(1), rat(7, 10), rat(2, 5)],
            vec![(0, 1)],
        );
        let rounded = round_instance(&inst).unwrap();
        let base = rounded.grid_base();
        let window = &base * &base;
        for j in 0..inst.jobs.len() {
            for i in 0..inst.machines.len() {
                let original = &inst.jobs[j].size / &inst.machines[i].speed;
                let new = rounded.proc_time(j, i);
                assert!(new >= original, "p'_ij >= p_ij");
                assert!(new < &window * &original, "p'_ij < (1+eps)^2 p_ij");
            }
        }
    }

    #[test]
    fn mu_respects_log_bound_when_supplies_span() {
        let inst = instance(int(1), vec![(2, 3)], vec![int(1)], vec![(0, 1), (5, 1), (40, 1)]);
        let rounded = round_instance(&inst).unwrap();
        // u_e = 40 >= p_min = 2: mu <= log2(u_e / (eps p_min)) + 3.
        let bound = (40f64 / 2f64).log2() + 3.0;
        assert!((rounded.mu as f64) <= bound, "mu = {} > {}", rounded.mu, bound);
    }

    fn feasible_two_machine_fixture() -> (Instance, Schedule) {
        let inst = instance(
            int(1),
            vec![(2, 1), (2, 1), (3, 0)],
            vec![int(1), rat(1, 2)],
            vec![(0, 1), (5, 1)],
        );
        let schedule = Schedule {
            assignments: vec![
                crate::model::MachineSchedule {
                    machine: 0,
                    jobs: vec![
                        JobStart { job: 0, start: int(0) },
                        JobStart { job: 1, start: int(5) },
                    ],
                },
                crate::model::MachineSchedule {
                    machine: 1,
                    jobs: vec![JobStart { job: 2, start: int(0) }],
                },
            ],
        };
        assert!(verify_schedule(&inst, &schedule).unwrap().is_empty());
        (inst, schedule)
    }

    #[test]
    fn push_scales_completions_and_stays_feasible() {
        let (inst, schedule) = feasible_two_machine_fixture();
        let rounded = round_instance(&inst).unwrap();
        let pushed = push_schedule_to_rounded(&rounded, &schedule).unwrap();
        let rounded_inst = rounded.as_instance();
        assert!(verify_schedule(&rounded_inst, &pushed).unwrap().is_empty());

        // Job 1 completed at 7 originally; new completion is 8 * 7 = 56.
        let lists = pushed.lists(2).unwrap();
        let job1 = lists[0].iter().find(|js| js.job == 1).unwrap();
        assert_eq!(&job1.start + rounded.proc_time(1, 0), int(56));

        // Cost ratio bounded by (1+eps)^(3 phi), exactly.
        let before = evaluate(&inst, &schedule).unwrap();
        let after = evaluate(&rounded_inst, &pushed).unwrap();
        let factor = pow_phi(&pow_int(&inst.params.base(), 3), &inst.params.phi);
        assert!(after.combined <= &factor * &before.combined);
        assert!(after.makespan <= pow_int(&inst.params.base(), 3) * &before.makespan);
    }

    #[test]
    fn push_of_empty_schedule_is_empty() {
        let inst = instance(int(1), vec![], vec![int(1)], vec![(0, 1)]);
        // No jobs: rounding refuses, which the pipeline handles upstream.
        assert!(matches!(round_instance(&inst), Err(RoundingError::NoJobs)));
    }

    #[test]
    fn lift_preserves_starts_and_feasibility() {
        let (inst, schedule) = feasible_two_machine_fixture();
        let rounded = round_instance(&inst).unwrap();
        let pushed = push_schedule_to_rounded(&rounded, &schedule).unwrap();
        let lifted = lift_schedule_to_original(&rounded, &pushed).unwrap();
        assert_eq!(lifted, pushed.canonicalized(2).unwrap());
        assert!(verify_schedule(&inst, &lifted).unwrap().is_empty());

        // Objective on the original never exceeds the rounded objective.
        let on_original = evaluate(&inst, &lifted).unwrap();
        let on_rounded = evaluate(&rounded.as_instance(), &pushed).unwrap();
        assert!(on_original.combined <= on_rounded.combined);
        assert!(on_original.makespan <= on_rounded.makespan);
    }

    #[test]
    fn lift_rejects_infeasible_input() {
        let (inst, _) = feasible_two_machine_fixture();
        let rounded = round_instance(&inst).unwrap();
        let bad = Schedule {
            assignments: vec![crate::model::MachineSchedule {
                machine: 0,
                jobs: vec![
                    JobStart { job: 0, start: int(0) },
                    JobStart { job: 1, start: int(0) },
                    JobStart { job: 2, start: int(0) },
                ],
            }],
        };
        assert!(matches!(
            lift_schedule_to_original(&rounded, &bad),
            Err(RoundingError::InfeasibleInput(_))
        ));
    }
}
