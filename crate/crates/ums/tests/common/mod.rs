//! Shared helpers for the integration and acceptance tests.
#![allow(dead_code)] // not every test binary uses every helper

use rand::Rng;
use ums::model::{Instance, JobStart, Schedule};
use ums::rational::Rat;
use num_traits::{Signed, Zero};

pub fn fixture(name: &str) -> Instance {
    let raw = match name {
        "tiny-01" => include_str!("../fixtures/tiny-01.json"),
        "tiny-02" => include_str!("../fixtures/tiny-02.json"),
        "tiny-03" => include_str!("../fixtures/tiny-03.json"),
        other => panic!("unknown fixture {other}"),
    };
    let instance = Instance::from_json_str(raw).expect("fixture parses");
    instance.validate().expect("fixture is valid");
    instance
}

pub fn fixtures() -> Vec<(&'static str, Instance)> {
    ["tiny-01", "tiny-02", "tiny-03"]
        .into_iter()
        .map(|name| (name, fixture(name)))
        .collect()
}

/// Earliest start >= `frontier` keeping the resource prefix valid at every
/// later time, given already placed (start, demand) pairs.
fn earliest_feasible(
    instance: &Instance,
    placed: &[(Rat, Rat)],
    frontier: &Rat,
    demand: &Rat,
) -> Rat {
    if !demand.is_positive() {
        return frontier.clone();
    }
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
    for candidate in breakpoints.iter().filter(|b| **b >= *frontier) {
        let ok = breakpoints
            .iter()
            .filter(|b| *b >= candidate)
            .all(|b| slack_at(b) >= *demand);
        if ok {
            return candidate.clone();
        }
    }
    unreachable!("total supply covers total demand")
}

/// A random feasible schedule: random placement order and machine choice,
/// each job at its earliest feasible start.
pub fn random_feasible_schedule(instance: &Instance, rng: &mut impl Rng) -> Schedule {
    let n = instance.jobs.len();
    let m = instance.machines.len();
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut lists: Vec<Vec<JobStart>> = vec![Vec::new(); m];
    let mut frontiers = vec![Rat::zero(); m];
    let mut placed: Vec<(Rat, Rat)> = Vec::new();
    for j in order {
        let i = rng.gen_range(0..m);
        let start = earliest_feasible(instance, &placed, &frontiers[i], &instance.jobs[j].demand);
        frontiers[i] = &start + &instance.jobs[j].size / &instance.machines[i].speed;
        if instance.jobs[j].demand.is_positive() {
            placed.push((start.clone(), instance.jobs[j].demand.clone()));
        }
        lists[i].push(JobStart { job: j, start });
    }
    Schedule::from_lists(lists)
}
