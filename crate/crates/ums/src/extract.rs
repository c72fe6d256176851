//! Transforms a MILP solution into a feasible schedule: counters are
//! rounded up (spawning virtual machines), jobs are placed period by period
//! under the α and per-configuration caps, and what remains is appended to
//! the designated makespan machine, followed by everything that landed on
//! virtual machines.

use crate::config::{classify, JobClass};
use crate::milp::{MilpModel, MilpSolution};
use crate::model::{verify_schedule, JobStart, Schedule, Violation};
use crate::rational::{int, pow_int, Rat};
use crate::rounding::RoundedInstance;
use num_traits::{Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignedMachine {
    /// Configuration column in the model.
    pub config: usize,
    /// Instance machine index for real machines, `None` for virtual ones.
    pub real: Option<usize>,
}

/// Machines (real and virtual) with their assigned configurations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MachineAssignment {
    pub machines: Vec<AssignedMachine>,
    /// Index into `machines` of the designated makespan machine (real, of
    /// the guessed speed, carrying the largest qualifying load bound).
    pub designated: usize,
    /// ⌈z_c⌉ per configuration column.
    pub z_hat: Vec<u64>,
}

impl MachineAssignment {
    pub fn virtual_count(&self) -> usize {
        self.machines.iter().filter(|m| m.real.is_none()).count()
    }

    pub fn real_count_of_speed(&self, model: &MilpModel, s_exp: i64) -> usize {
        self.machines
            .iter()
            .filter(|m| m.real.is_some() && model.configs[m.config].s_exp == s_exp)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("no real machine of the guessed speed carries a qualifying configuration")]
    NoDesignatedMachine,
    #[error("placement accounting violated: {0}")]
    Accounting(String),
    #[error(
        "appended jobs violate the resource constraint (guess too small or \
         constants misconfigured): {} violations",
        .0.len()
    )]
    ResourceOnAppend(Vec<Violation>),
}

/// Rounds the counters up and hands machines their configurations: per
/// configuration at least ⌊z_c⌋ real machines and at most one virtual one.
pub fn assign_configurations(
    model: &MilpModel,
    solution: &MilpSolution,
    rounded: &RoundedInstance,
) -> Result<MachineAssignment, ExtractError> {
    let z_hat: Vec<u64> = solution
        .z
        .iter()
        .map(|z| z.ceil().to_integer().to_u64().expect("counter fits"))
        .collect();

    // The designated configuration: largest load bound among configurations
    // of the guessed speed with a positive counter. Constraint (7) puts its
    // load bound at C_opt/(1+ε) or above; anything less is a solver bug.
    let designated_config = (0..model.configs.len())
        .filter(|&ci| {
            z_hat[ci] > 0
                && model.configs[ci].s_exp == model.guess.s_opt_exp
                && model.configs[ci].w_exp().is_some()
        })
        .max_by_key(|&ci| model.configs[ci].w_exp().expect("loaded"))
        .ok_or(ExtractError::NoDesignatedMachine)?;
    if model.configs[designated_config].w_exp().expect("loaded") < model.guess.c_opt_exp - 1 {
        return Err(ExtractError::NoDesignatedMachine);
    }

    let speed_exps: std::collections::BTreeSet<i64> =
        rounded.speed_exps.iter().copied().collect();
    let mut machines: Vec<AssignedMachine> = Vec::new();
    let mut designated = None;
    for &s in &speed_exps {
        let mut reals: Vec<usize> = (0..rounded.speed_exps.len())
            .filter(|&i| rounded.speed_exps[i] == s)
            .collect();
        reals.reverse(); // pop() hands out the lowest index first
        let configs_of_speed: Vec<usize> = (0..model.configs.len())
            .filter(|&ci| model.configs[ci].s_exp == s && z_hat[ci] > 0)
            .collect();
        let mut real_of_config: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        let mut fractional: Vec<usize> = Vec::new();
        for &ci in &configs_of_speed {
            let floor = solution.z[ci].floor().to_integer().to_u64().expect("fits");
            for _ in 0..floor {
                let machine = reals.pop().ok_or_else(|| {
                    ExtractError::Accounting(format!(
                        "speed exponent {s}: counters exceed the machine count"
                    ))
                })?;
                real_of_config.entry(ci).or_default().push(machine);
            }
            if z_hat[ci] > floor {
                fractional.push(ci);
            }
        }
        // Remaining real machines go to fractional configurations, the
        // designated configuration first so it always gets a real machine.
        fractional.sort_by_key(|&ci| (ci != designated_config, ci));
        let mut virtuals: Vec<usize> = Vec::new();
        for &ci in &fractional {
            if let Some(machine) = reals.pop() {
                real_of_config.entry(ci).or_default().push(machine);
            } else {
                virtuals.push(ci);
            }
        }
        if !reals.is_empty() {
            return Err(ExtractError::Accounting(format!(
                "speed exponent {s}: {} machines left unassigned",
                reals.len()
            )));
        }
        for &ci in &configs_of_speed {
            if let Some(ids) = real_of_config.get(&ci) {
                for &id in ids {
                    if ci == designated_config && designated.is_none() {
                        designated = Some(machines.len());
                    }
                    machines.push(AssignedMachine { config: ci, real: Some(id) });
                }
            }
            if virtuals.contains(&ci) {
                machines.push(AssignedMachine { config: ci, real: None });
            }
        }
    }
    let designated = designated.ok_or(ExtractError::NoDesignatedMachine)?;
    Ok(MachineAssignment { machines, designated, z_hat })
}

/// Outcome of the placement (second rounding) step.
#[derive(Debug, Clone)]
pub struct Placement {
    /// Per assignment machine: (period exponent, job), in placement order.
    pub per_machine: Vec<Vec<(i64, usize)>>,
    /// Jobs that no period could accommodate.
    pub leftover: Vec<usize>,
    /// α_{r'k}: per (size exponent, period exponent), the floor of the
    /// fractional number of such jobs started in that period.
    pub alpha: BTreeMap<(i64, i64), u64>,
    /// For each leftover job, the last period in which it was considered.
    pub leftover_last_period: BTreeMap<usize, i64>,
}

/// Places jobs period by period: big jobs first (per machine, sizes
/// ascending, respecting the global α caps and the per-machine B_c(k,r)
/// cells), then small jobs across machines in non-decreasing s_c·w_c order
/// under the widened volume cap (S_c(k)+2)·ε^ρ·s_c·w_c.
pub fn place_jobs(
    rounded: &RoundedInstance,
    model: &MilpModel,
    solution: &MilpSolution,
    assignment: &MachineAssignment,
) -> Result<Placement, ExtractError> {
    let params = &model.params;
    let base = params.base();
    let n = rounded.base.jobs.len();

    let mut mass: BTreeMap<(usize, i64), Rat> = BTreeMap::new();
    for (i, (j, k, _)) in model.x_cols.iter().enumerate() {
        let v = &solution.x[i];
        if v.is_positive() {
            *mass.entry((*j, *k)).or_insert_with(Rat::zero) += v;
        }
    }
    let mut alpha_mass: BTreeMap<(i64, i64), Rat> = BTreeMap::new();
    for ((j, k), v) in &mass {
        *alpha_mass
            .entry((rounded.size_exps[*j], *k))
            .or_insert_with(Rat::zero) += v;
    }
    // Float solutions carry roundoff: a mass like 2.9999999996 must still
    // floor to 3 or a job the solution fully assigns would go missing. The
    // final verification gate catches any overshoot this slack lets in.
    let alpha_slack = match solution.mode {
        crate::milp::LpMode::ExactRational => Rat::zero(),
        crate::milp::LpMode::Float => Rat::from_float(1e-6).expect("finite"),
    };
    let alpha: BTreeMap<(i64, i64), u64> = alpha_mass
        .iter()
        .map(|(key, v)| {
            let v = v + &alpha_slack;
            (*key, v.floor().to_integer().to_u64().expect("alpha fits"))
        })
        .collect();

    let periods: Vec<i64> = {
        let mut ks: Vec<i64> = mass.keys().map(|(_, k)| *k).collect();
        ks.sort_unstable();
        ks.dedup();
        ks
    };

    // Small-pass machine order: non-decreasing s_c·w_c, ties by
    // configuration then machine index. Zero configurations receive nothing.
    let mut small_order: Vec<usize> = (0..assignment.machines.len())
        .filter(|&mi| model.configs[assignment.machines[mi].config].w_exp().is_some())
        .collect();
    small_order.sort_by_key(|&mi| {
        let config = assignment.machines[mi].config;
        let c = &model.configs[config];
        (c.s_exp + c.w_exp().expect("loaded"), config, mi)
    });

    let mut placed = vec![false; n];
    let mut placed_count: BTreeMap<(i64, i64), u64> = BTreeMap::new();
    let mut per_machine: Vec<Vec<(i64, usize)>> = vec![Vec::new(); assignment.machines.len()];
    let mut last_seen: BTreeMap<usize, i64> = BTreeMap::new();

    for &k in &periods {
        let mut pool: Vec<usize> = (0..n)
            .filter(|&j| {
                !placed[j] && mass.get(&(j, k)).map_or(false, |v| v.is_positive())
            })
            .collect();
        pool.sort_by(|&a, &b| {
            rounded.base.jobs[a]
                .demand
                .cmp(&rounded.base.jobs[b].demand)
                .then(a.cmp(&b))
        });
        for &j in &pool {
            last_seen.insert(j, k);
        }

        // Big pass.
        let mut big_used: BTreeMap<(usize, usize), u32> = BTreeMap::new();
        for (mi, am) in assignment.machines.iter().enumerate() {
            let Some(geom) = &model.geometries[am.config] else { continue };
            if k < geom.nu_l || k > geom.nu_u {
                continue;
            }
            let config = &model.configs[am.config];
            let counts = config.counts_at(geom, k).expect("window period");
            let speed = pow_int(&base, geom.s_exp);
            let w = pow_int(&base, geom.w_exp);
            for r0 in 0..counts.big.len() {
                if counts.big[r0] == 0 {
                    continue;
                }
                let size_exp = geom.big_proc_exp(r0 + 1) + geom.s_exp;
                let mut i = 0;
                while i < pool.len() {
                    let j = pool[i];
                    if rounded.size_exps[j] != size_exp
                        || classify(&rounded.size(j), &speed, &w, params) != JobClass::Big
                    {
                        i += 1;
                        continue;
                    }
                    let global = placed_count.get(&(size_exp, k)).copied().unwrap_or(0);
                    if global >= alpha.get(&(size_exp, k)).copied().unwrap_or(0) {
                        break;
                    }
                    let local = big_used.get(&(mi, r0)).copied().unwrap_or(0);
                    if local >= counts.big[r0] {
                        break;
                    }
                    placed_count.insert((size_exp, k), global + 1);
                    big_used.insert((mi, r0), local + 1);
                    per_machine[mi].push((k, j));
                    placed[j] = true;
                    pool.remove(i);
                }
            }
        }

        // Small pass.
        let mut volume: BTreeMap<usize, Rat> = BTreeMap::new();
        for &mi in &small_order {
            let am = &assignment.machines[mi];
            let Some(geom) = &model.geometries[am.config] else { continue };
            if k < geom.nu_l || k > geom.nu_u {
                continue;
            }
            let config = &model.configs[am.config];
            let counts = config.counts_at(geom, k).expect("window period");
            let speed = pow_int(&base, geom.s_exp);
            let w = pow_int(&base, geom.w_exp);
            let cap = int(i64::from(counts.small) + 2) * params.eps_pow_rho() * &speed * &w;
            let mut size_exps: Vec<i64> = pool
                .iter()
                .map(|&j| rounded.size_exps[j])
                .filter(|&e| classify(&pow_int(&base, e), &speed, &w, params) == JobClass::Small)
                .collect();
            size_exps.sort_unstable();
            size_exps.dedup();
            for size_exp in size_exps {
                let mut i = 0;
                while i < pool.len() {
                    let j = pool[i];
                    if rounded.size_exps[j] != size_exp {
                        i += 1;
                        continue;
                    }
                    let global = placed_count.get(&(size_exp, k)).copied().unwrap_or(0);
                    if global >= alpha.get(&(size_exp, k)).copied().unwrap_or(0) {
                        break;
                    }
                    let used = volume.entry(mi).or_insert_with(Rat::zero);
                    let new_volume = &*used + rounded.size(j);
                    if new_volume > cap {
                        break;
                    }
                    *used = new_volume;
                    placed_count.insert((size_exp, k), global + 1);
                    per_machine[mi].push((k, j));
                    placed[j] = true;
                    pool.remove(i);
                }
            }
        }
    }

    for ((size_exp, k), count) in &placed_count {
        let cap = alpha.get(&(*size_exp, *k)).copied().unwrap_or(0);
        if *count > cap {
            return Err(ExtractError::Accounting(format!(
                "placed {count} jobs of size exponent {size_exp} in period {k}, alpha is {cap}"
            )));
        }
    }

    let leftover: Vec<usize> = (0..n).filter(|&j| !placed[j]).collect();
    let leftover_last_period = leftover
        .iter()
        .filter_map(|&j| last_seen.get(&j).map(|&k| (j, k)))
        .collect();
    Ok(Placement { per_machine, leftover, alpha, leftover_last_period })
}

/// Final schedule plus the measurements tests and traces want.
#[derive(Debug, Clone)]
pub struct FinalizeOutput {
    pub schedule: Schedule,
    /// Load of the designated machine after all append steps.
    pub designated_load: Rat,
    /// Per assignment machine: load after the second rounding step.
    pub step2_loads: Vec<Rat>,
    /// Total size of jobs that were placed on virtual machines.
    pub virtual_size: Rat,
    pub leftover_count: usize,
}

/// Builds per-machine timelines from the placement, appends the leftover
/// jobs and then every virtual machine's jobs to the designated machine
/// (starting no earlier than C_opt), and verifies the result against the
/// rounded instance.
pub fn finalize(
    rounded: &RoundedInstance,
    model: &MilpModel,
    assignment: &MachineAssignment,
    placement: &Placement,
) -> Result<FinalizeOutput, ExtractError> {
    let params = &model.params;
    let base = params.base();

    // Timelines per assignment machine: periods ascending; inside a period
    // small jobs run before big ones, sizes ascending, ids breaking ties
    // (mirroring the one-machine generator's sand-then-bigs order).
    let mut timelines: Vec<Vec<JobStart>> = Vec::with_capacity(assignment.machines.len());
    let mut step2_loads: Vec<Rat> = Vec::with_capacity(assignment.machines.len());
    for (mi, am) in assignment.machines.iter().enumerate() {
        let mut jobs = placement.per_machine[mi].clone();
        let speed = pow_int(&base, model.configs[am.config].s_exp);
        let w = model.configs[am.config].w_exp().map(|e| pow_int(&base, e));
        jobs.sort_by_key(|&(k, j)| {
            let big = match &w {
                Some(w) => classify(&rounded.size(j), &speed, w, params) == JobClass::Big,
                None => true,
            };
            (k, big, rounded.size_exps[j], j)
        });
        let mut timeline = Vec::with_capacity(jobs.len());
        let mut cursor = Rat::zero();
        for (k, j) in jobs {
            cursor = cursor.max(pow_int(&base, k));
            timeline.push(JobStart { job: j, start: cursor.clone() });
            cursor += rounded.size(j) / &speed;
        }
        step2_loads.push(cursor);
        timelines.push(timeline);
    }

    // Third step: leftovers onto the designated machine; final step: every
    // virtual machine's jobs after them. All start at or after C_opt, back
    // to back, ordered by (demand, id) within each group.
    let di = assignment.designated;
    let d_speed = pow_int(&base, model.configs[assignment.machines[di].config].s_exp);
    let c_opt = model.guess.c_opt(params);
    let mut cursor = step2_loads[di].clone().max(c_opt);

    let by_demand = |a: &usize, b: &usize| {
        rounded.base.jobs[*a]
            .demand
            .cmp(&rounded.base.jobs[*b].demand)
            .then(a.cmp(b))
    };
    let mut leftover_sorted = placement.leftover.clone();
    leftover_sorted.sort_by(by_demand);
    let mut virtual_jobs: Vec<usize> = Vec::new();
    let mut virtual_size = Rat::zero();
    for (mi, am) in assignment.machines.iter().enumerate() {
        if am.real.is_none() {
            for js in &timelines[mi] {
                virtual_jobs.push(js.job);
                virtual_size += rounded.size(js.job);
            }
        }
    }
    virtual_jobs.sort_by(by_demand);

    let mut designated_timeline = timelines[di].clone();
    for j in leftover_sorted.into_iter().chain(virtual_jobs) {
        designated_timeline.push(JobStart { job: j, start: cursor.clone() });
        cursor += rounded.size(j) / &d_speed;
    }
    let designated_load = if designated_timeline.is_empty() {
        Rat::zero()
    } else {
        cursor
    };

    let mut lists: Vec<Vec<JobStart>> = vec![Vec::new(); rounded.base.machines.len()];
    for (mi, am) in assignment.machines.iter().enumerate() {
        if let Some(real) = am.real {
            lists[real] = if mi == di {
                designated_timeline.clone()
            } else {
                timelines[mi].clone()
            };
        }
    }
    let schedule = Schedule::from_lists(lists);
    let violations = verify_schedule(&rounded.as_instance(), &schedule)
        .map_err(|e| ExtractError::Accounting(e.to_string()))?;
    if !violations.is_empty() {
        return Err(ExtractError::ResourceOnAppend(violations));
    }
    Ok(FinalizeOutput {
        schedule,
        designated_load,
        step2_loads,
        virtual_size,
        leftover_count: placement.leftover.len(),
    })
}

/// Sizes that may legitimately remain unassigned in period k: non-huge for
/// some configuration active at k with a positive counter, and small for
/// the designated machine's configuration pair.
pub fn leftover_size_set(
    rounded: &RoundedInstance,
    model: &MilpModel,
    assignment: &MachineAssignment,
    k: i64,
) -> std::collections::BTreeSet<i64> {
    let params = &model.params;
    let base = params.base();
    let d_config = &model.configs[assignment.machines[assignment.designated].config];
    let d_geom = d_config.geometry(params).expect("designated is loaded");
    let d_speed = pow_int(&base, d_geom.s_exp);
    let d_w = pow_int(&base, d_geom.w_exp);
    let size_exps: std::collections::BTreeSet<i64> = rounded.size_exps.iter().copied().collect();
    size_exps
        .into_iter()
        .filter(|&e| {
            let size = pow_int(&base, e);
            let small_for_designated = classify(&size, &d_speed, &d_w, params) == JobClass::Small;
            let non_huge_somewhere = model.configs.iter().enumerate().any(|(ci, c)| {
                if assignment.z_hat[ci] == 0 {
                    return false;
                }
                match c.geometry(params) {
                    Some(geom) if k >= geom.nu_l && k <= geom.nu_u => {
                        let s = pow_int(&base, geom.s_exp);
                        let w = pow_int(&base, geom.w_exp);
                        classify(&size, &s, &w, params) != JobClass::Huge
                    }
                    _ => false,
                }
            });
            small_for_designated && non_huge_somewhere
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{candidate_pairs, enumerate_configurations, EnumLimits};
    use crate::guess::guess_for_schedule;
    use crate::milp::{build_model, construct_witness, solve, MilpOptions};
    use crate::model::{Instance, Job, Machine, SchemeParams, Supply};
    use crate::rational::{int, rat};
    use num_traits::One;
    use crate::rounding::round_instance;

    fn fixture(jobs: Vec<(i64, i64)>, speeds: Vec<Rat>, supplies: Vec<(i64, i64)>) -> Instance {
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
            params: SchemeParams::new(int(1), rat(1, 2), int(2), 2),
        }
    }

    /// Builds the model for the witness guess of a normalized schedule and
    /// returns (rounded, model, witness).
    fn witness_setup(
        instance: &Instance,
    ) -> (
        crate::rounding::RoundedInstance,
        crate::milp::MilpModel,
        crate::milp::Witness,
    ) {
        use crate::normalize::{pull_makespan_to_fast, stretch_to_window};
        use crate::oracle::{exact_optimum, OracleLimits};
        let rounded = round_instance(instance).unwrap();
        let rounded_inst = rounded.as_instance();
        let (opt, _) = exact_optimum(&rounded_inst, &OracleLimits::default()).unwrap();
        let pulled = pull_makespan_to_fast(&rounded_inst, &opt).unwrap();
        let normalized = stretch_to_window(&rounded_inst, &pulled).unwrap();
        let guess = guess_for_schedule(&rounded, &normalized).unwrap();
        let mut configs = Vec::new();
        for (s, w) in candidate_pairs(&rounded, &guess) {
            configs.extend(
                enumerate_configurations(&rounded, s, w, &EnumLimits::default()).unwrap(),
            );
        }
        let model = build_model(&rounded, &guess, &configs);
        let witness = construct_witness(&model, &rounded, &normalized).unwrap();
        (rounded, model, witness)
    }

    #[test]
    fn integral_solution_has_no_virtual_machines() {
        let instance = fixture(
            vec![(4, 1), (2, 0), (2, 1)],
            vec![int(1), int(1)],
            vec![(0, 2)],
        );
        let (rounded, model, witness) = witness_setup(&instance);
        let assignment = assign_configurations(&model, &witness.solution, &rounded).unwrap();
        assert_eq!(assignment.virtual_count(), 0);
        // Per speed, real machine counts match the instance.
        for &s in rounded.speed_exps.iter() {
            let expected = rounded.speed_exps.iter().filter(|&&e| e == s).count();
            assert_eq!(assignment.real_count_of_speed(&model, s), expected);
        }
    }

    #[test]
    fn fractional_counters_spawn_at_most_one_virtual_machine() {
        let instance = fixture(
            vec![(4, 1), (2, 0), (2, 1)],
            vec![int(1), int(1)],
            vec![(0, 2)],
        );
        let (rounded, model, witness) = witness_setup(&instance);
        // Perturb: split one unit of z mass across two configurations of the
        // same speed (2.0 -> 1.7 + 0.3 style splits are what ceilings see).
        let mut solution = witness.solution.clone();
        let donor = solution
            .z
            .iter()
            .position(|z| *z >= Rat::one())
            .expect("some counter is positive");
        let receiver = model
            .configs
            .iter()
            .position(|c| c.s_exp == model.configs[donor].s_exp && c.w_exp().is_none())
            .expect("zero config of that speed");
        solution.z[donor] -= rat(3, 10);
        solution.z[receiver] += rat(3, 10);
        let assignment = assign_configurations(&model, &solution, &rounded).unwrap();
        // Both fractional configurations got ceil'd; exactly one extra
        // machine exists and it is virtual.
        assert_eq!(
            assignment.machines.len(),
            rounded.base.machines.len() + 1
        );
        assert_eq!(assignment.virtual_count(), 1);
    }

    #[test]
    fn placement_reproduces_integral_witness() {
        let instance = fixture(
            vec![(4, 1), (2, 0), (2, 1), (1, 0)],
            vec![int(1), int(1)],
            vec![(0, 2)],
        );
        let (rounded, model, witness) = witness_setup(&instance);
        let assignment = assign_configurations(&model, &witness.solution, &rounded).unwrap();
        let placement = place_jobs(&rounded, &model, &witness.solution, &assignment).unwrap();
        assert!(placement.leftover.is_empty(), "integral witness leaves nothing behind");

        // Big jobs must match the witness per (configuration, period, size):
        // the B cells and the alpha caps pin them exactly. Small jobs may
        // migrate between machines (the volume caps carry slack), so they
        // are compared per (period, size) globally.
        let params = &model.params;
        let base = params.base();
        let is_big = |config: usize, j: usize| -> bool {
            let geom = model.geometries[config].as_ref().expect("loaded");
            classify(
                &rounded.size(j),
                &crate::rational::pow_int(&base, geom.s_exp),
                &crate::rational::pow_int(&base, geom.w_exp),
                params,
            ) == JobClass::Big
        };
        let mut placed_big: BTreeMap<(usize, i64, i64), u64> = BTreeMap::new();
        let mut placed_small: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        for (mi, jobs) in placement.per_machine.iter().enumerate() {
            let config = assignment.machines[mi].config;
            for (k, j) in jobs {
                if is_big(config, *j) {
                    *placed_big.entry((config, *k, rounded.size_exps[*j])).or_insert(0) += 1;
                } else {
                    *placed_small.entry((*k, rounded.size_exps[*j])).or_insert(0) += 1;
                }
            }
        }
        let mut expected_big: BTreeMap<(usize, i64, i64), u64> = BTreeMap::new();
        let mut expected_small: BTreeMap<(i64, i64), u64> = BTreeMap::new();
        for (i, (j, k, c)) in model.x_cols.iter().enumerate() {
            if witness.solution.x[i].is_zero() {
                continue;
            }
            if is_big(*c, *j) {
                *expected_big.entry((*c, *k, rounded.size_exps[*j])).or_insert(0) += 1;
            } else {
                *expected_small.entry((*k, rounded.size_exps[*j])).or_insert(0) += 1;
            }
        }
        assert_eq!(placed_big, expected_big);
        assert_eq!(placed_small, expected_small);
    }

    #[test]
    fn finalize_appends_leftovers_at_c_opt() {
        let instance = fixture(
            vec![(4, 1), (2, 0), (2, 1)],
            vec![int(1), int(1)],
            vec![(0, 2)],
        );
        let (rounded, model, witness) = witness_setup(&instance);
        let assignment = assign_configurations(&model, &witness.solution, &rounded).unwrap();
        let placement = place_jobs(&rounded, &model, &witness.solution, &assignment).unwrap();
        let output = finalize(&rounded, &model, &assignment, &placement).unwrap();
        assert_eq!(output.leftover_count, 0);
        assert!(output.virtual_size.is_zero());
        assert!(verify_schedule(&rounded.as_instance(), &output.schedule)
            .unwrap()
            .is_empty());

        // Now force a leftover: halve job 1's x mass in its first positive
        // column and drop the rest, so the alpha floor loses one job of its
        // size class. The doctored solution no longer satisfies row (2);
        // placement does not require it, and the leftover path must still
        // produce a feasible schedule.
        let mut solution = witness.solution;
        let job = 1usize; // zero-demand small job of size 2
        let mut kept_one = false;
        for (i, (j, _, _)) in model.x_cols.iter().enumerate() {
            if *j == job {
                solution.x[i] = if kept_one { Rat::zero() } else { rat(1, 2) };
                kept_one = kept_one || !solution.x[i].is_zero();
            }
        }
        let placement = place_jobs(&rounded, &model, &solution, &assignment).unwrap();
        assert_eq!(placement.leftover.len(), 1, "one size class loses one job");
        let leftover_job = placement.leftover[0];
        assert_eq!(rounded.size_exps[leftover_job], rounded.size_exps[job]);
        let output = finalize(&rounded, &model, &assignment, &placement).unwrap();
        assert!(verify_schedule(&rounded.as_instance(), &output.schedule)
            .unwrap()
            .is_empty());
        let c_opt = model.guess.c_opt(&model.params);
        let lists = output
            .schedule
            .lists(rounded.base.machines.len())
            .unwrap();
        let appended = lists
            .iter()
            .flatten()
            .find(|js| js.job == leftover_job)
            .expect("leftover job scheduled");
        assert!(appended.start >= c_opt);
    }

    #[test]
    fn empty_solution_extracts_empty_schedule() {
        let instance = fixture(vec![(4, 0)], vec![int(1)], vec![(0, 1)]);
        let (rounded, model, witness) = witness_setup(&instance);
        let assignment = assign_configurations(&model, &witness.solution, &rounded).unwrap();
        let mut solution = witness.solution;
        for v in solution.x.iter_mut() {
            *v = Rat::zero();
        }
        let placement = place_jobs(&rounded, &model, &solution, &assignment).unwrap();
        // All jobs become leftovers and end up on the designated machine.
        assert_eq!(placement.leftover.len(), 1);
        let output = finalize(&rounded, &model, &assignment, &placement).unwrap();
        assert!(verify_schedule(&rounded.as_instance(), &output.schedule)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn milp_solution_extracts_feasibly_end_to_end() {
        let instance = fixture(
            vec![(4, 1), (2, 0), (2, 1), (1, 1)],
            vec![int(1), rat(1, 2)],
            vec![(0, 2), (3, 1)],
        );
        let (rounded, model, _) = witness_setup(&instance);
        let solution = solve(&model, &MilpOptions::default()).unwrap().unwrap();
        let assignment = assign_configurations(&model, &solution, &rounded).unwrap();
        let placement = place_jobs(&rounded, &model, &solution, &assignment).unwrap();
        let output = finalize(&rounded, &model, &assignment, &placement).unwrap();
        assert!(verify_schedule(&rounded.as_instance(), &output.schedule)
            .unwrap()
            .is_empty());
    }
}
