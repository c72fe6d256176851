//! Enumeration of the candidate pairs (C_opt, s_opt): the approximate
//! makespan of a near-optimal normalized schedule, rounded down to the
//! geometric grid, and the speed of the machine attaining it.

use crate::config::lambda_for;
use crate::model::SchemeParams;
use crate::normalize::mu_tilde;
use crate::rational::{ceil_log, floor_log, pow_int, Rat};
use crate::rounding::RoundedInstance;
use num_traits::{One, Zero};
use std::collections::BTreeSet;

/// One candidate (C_opt, s_opt) pair, both as exponents of 1+ε, together
/// with the threshold κ that separates fast/slow speeds and large/small
/// loads for this guess.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Guess {
    pub c_opt_exp: i64,
    pub s_opt_exp: i64,
    pub kappa: Rat,
}

impl Guess {
    pub fn new(params: &SchemeParams, c_opt_exp: i64, s_opt_exp: i64) -> Self {
        let kappa = kappa_for(params, c_opt_exp, s_opt_exp);
        Guess { c_opt_exp, s_opt_exp, kappa }
    }

    pub fn c_opt(&self, params: &SchemeParams) -> Rat {
        pow_int(&params.base(), self.c_opt_exp)
    }

    pub fn s_opt(&self, params: &SchemeParams) -> Rat {
        pow_int(&params.base(), self.s_opt_exp)
    }
}

/// κ = ε·s_opt / ((1+2ε) · ((1+ε)/ε^ρ + 1)^{μ̃(λ+1)} · (1+ε)³/ε²), with λ
/// instantiated for the pair (s_opt, (1+ε)·C_opt).
pub fn kappa_for(params: &SchemeParams, c_opt_exp: i64, s_opt_exp: i64) -> Rat {
    let base = params.base();
    let s_opt = pow_int(&base, s_opt_exp);
    let w = pow_int(&base, c_opt_exp + 1);
    let lambda = lambda_for(&s_opt, &w, params);
    kappa_with_lambda(params, &s_opt, lambda)
}

/// κ with an explicitly chosen λ (the pair instantiating λ is a knob).
pub fn kappa_with_lambda(params: &SchemeParams, s_opt: &Rat, lambda: i64) -> Rat {
    let base = params.base();
    let eps = &params.epsilon;
    let cell = &base / params.eps_pow_rho() + Rat::one();
    let exponent = mu_tilde(params) * (lambda + 1);
    let denom = (Rat::one() + eps + eps) * pow_int(&cell, exponent) * pow_int(&base, 3)
        / (eps * eps);
    eps * s_opt / denom
}

/// All candidate pairs: s_opt ranges over distinct rounded machine speeds in
/// [ε², 1]; for every distinct rounded job size p and such a speed s, C_opt
/// ranges over the grid powers in [p/s, n·p/s]. Sorted by C_opt ascending,
/// then s_opt descending; duplicates removed.
pub fn enumerate_guesses(rounded: &RoundedInstance) -> Vec<Guess> {
    let params = &rounded.base.params;
    let base = params.base();
    let n = rounded.base.jobs.len();
    if n == 0 {
        return Vec::new();
    }
    let eps_sq = &params.epsilon * &params.epsilon;
    let min_speed_exp = ceil_log(&base, &eps_sq);
    let speed_exps: BTreeSet<i64> = rounded
        .speed_exps
        .iter()
        .copied()
        .filter(|&b| b >= min_speed_exp)
        .collect();
    let size_exps: BTreeSet<i64> = rounded.size_exps.iter().copied().collect();
    let spread = floor_log(&base, &crate::rational::int(n as i64));

    let mut pairs = BTreeSet::new();
    for &b in &speed_exps {
        for &a in &size_exps {
            let lo = a - b;
            for c in lo..=lo + spread {
                pairs.insert((c, -b));
            }
        }
    }
    pairs
        .into_iter()
        .map(|(c, neg_b)| Guess::new(params, c, -neg_b))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuessError {
    #[error("schedule is empty; no makespan machine to guess from")]
    EmptySchedule,
    #[error("makespan is attained only on machines slower than eps^2")]
    MakespanOnSlowMachine,
}

/// The guess a given normalized schedule corresponds to: its makespan
/// rounded down to the grid, and the speed of the fastest machine attaining
/// it (which must be at least ε²).
pub fn guess_for_schedule(
    rounded: &RoundedInstance,
    schedule: &crate::model::Schedule,
) -> Result<Guess, GuessError> {
    let instance = rounded.as_instance();
    let loads = crate::model::machine_loads(&instance, schedule)
        .expect("schedule must be structurally valid");
    let params = &rounded.base.params;
    let base = params.base();
    let makespan = loads.iter().max().cloned().unwrap_or_else(Rat::zero);
    if makespan.is_zero() {
        return Err(GuessError::EmptySchedule);
    }
    let eps_sq = &params.epsilon * &params.epsilon;
    let s_opt_exp = loads
        .iter()
        .enumerate()
        .filter(|(i, l)| **l == makespan && instance.machines[*i].speed >= eps_sq)
        .map(|(i, _)| rounded.speed_exps[i])
        .max()
        .ok_or(GuessError::MakespanOnSlowMachine)?;
    let c_opt_exp = floor_log(&base, &makespan);
    Ok(Guess::new(params, c_opt_exp, s_opt_exp))
}
