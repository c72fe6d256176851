//! Deterministic random instance generation for tests and benchmarks.

use crate::model::{Instance, Job, Machine, SchemeParams, Supply};
use crate::rational::{int, rat, Rat};
use num_traits::Zero;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenProfile {
    /// Total supply is 1.5x the total demand.
    Easy,
    /// Total supply equals the total demand exactly.
    Tight,
}

impl std::str::FromStr for GenProfile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(GenProfile::Easy),
            "tight" => Ok(GenProfile::Tight),
            other => Err(format!("unknown profile {other:?} (easy|tight)")),
        }
    }
}

/// Deterministic instance from a seed. Sizes are uniform on 1..=8, demands
/// on 0..=4, one machine always has speed 1 and the rest draw from a small
/// set of unit fractions. Supply dates start at 0 and the quantities are a
/// random positive split of the demand total times the profile's slack.
pub fn generate_instance(
    seed: u64,
    n: usize,
    m: usize,
    e: usize,
    profile: GenProfile,
    params: SchemeParams,
) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speed_pool = [rat(1, 2), rat(1, 4), rat(3, 4), rat(2, 3), rat(1, 3), int(1)];
    let mut machines = vec![Machine { speed: int(1) }];
    for _ in 1..m {
        machines.push(Machine {
            speed: speed_pool.choose(&mut rng).expect("non-empty pool").clone(),
        });
    }

    let jobs: Vec<Job> = (0..n)
        .map(|_| Job {
            size: int(rng.gen_range(1..=8)),
            demand: int(rng.gen_range(0..=4)),
        })
        .collect();
    let total_demand: Rat = jobs.iter().map(|j| j.demand.clone()).sum();
    let demand_units = {
        use num_traits::ToPrimitive;
        total_demand.to_integer().to_i64().expect("small demand total")
    };

    let total_supply = match profile {
        GenProfile::Tight => demand_units,
        GenProfile::Easy => demand_units + (demand_units / 2).max(1),
    };
    // Each supply must be positive in a raw instance, so the number of
    // replenishments is capped by the units available to split.
    let e = e.min(total_supply.max(0) as usize);
    let mut supplies = Vec::with_capacity(e);
    if e > 0 {
        let mut dates = vec![0i64];
        while dates.len() < e {
            let candidate = rng.gen_range(1..=(3 * e as i64 + 4));
            if !dates.contains(&candidate) {
                dates.push(candidate);
            }
        }
        dates.sort_unstable();
        let mut remaining = total_supply - e as i64;
        let mut quantities = vec![1i64; e];
        while remaining > 0 {
            let k = rng.gen_range(0..e);
            let take = rng.gen_range(1..=remaining);
            quantities[k] += take;
            remaining -= take;
        }
        for (date, quantity) in dates.into_iter().zip(quantities) {
            supplies.push(Supply { date: int(date), quantity: int(quantity) });
        }
    }

    let instance = Instance { jobs, machines, supplies, params };
    debug_assert!(
        instance.validate().is_ok() || instance.total_demand().is_zero(),
        "generated instance must validate"
    );
    instance
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_params() -> SchemeParams {
        SchemeParams::new(int(1), rat(1, 2), int(2), 2)
    }

    #[test]
    fn same_seed_same_instance() {
        let a = generate_instance(42, 6, 2, 2, GenProfile::Tight, desk_params());
        let b = generate_instance(42, 6, 2, 2, GenProfile::Tight, desk_params());
        assert_eq!(a.to_json_string(), b.to_json_string());
        let c = generate_instance(43, 6, 2, 2, GenProfile::Tight, desk_params());
        assert_ne!(a.to_json_string(), c.to_json_string());
    }

    #[test]
    fn tight_profile_matches_supply_to_demand() {
        let inst = generate_instance(7, 5, 2, 2, GenProfile::Tight, desk_params());
        let supply: Rat = inst.supplies.iter().map(|s| s.quantity.clone()).sum();
        assert_eq!(supply, inst.total_demand());
    }

    #[test]
    fn generated_instances_validate() {
        for seed in 0..30 {
            let inst = generate_instance(seed, 6, 3, 3, GenProfile::Easy, desk_params());
            if inst.total_demand().is_zero() {
                assert!(inst.validate_relaxed().is_ok());
            } else {
                assert!(inst.validate().is_ok(), "seed {seed}: {:?}", inst.validate());
            }
        }
    }
}
