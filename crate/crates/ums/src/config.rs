//! Job classification, configuration enumeration, and the one-machine
//! schedule generator that filters configurations for feasibility.
//!
//! A configuration compactly describes one machine's schedule: its speed
//! s_c, a load bound w_c (both grid powers), and for each period in a
//! window around [ε·w_c, (1+ε)·w_c] the number of big jobs started per
//! processing-time class plus a volume index for small jobs. Exponents
//! stored in big-job cells are processing-time exponents on the
//! configuration's speed.

use crate::guess::Guess;
use crate::model::SchemeParams;
use crate::rational::{ceil_log, floor_log, int, pow_int, Rat};
use crate::rounding::RoundedInstance;
use num_traits::{ToPrimitive, Zero};
use std::collections::BTreeSet;

/// Size class of a job relative to a (speed, load bound) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JobClass {
    Huge,
    Big,
    Small,
}

/// Huge iff p/s > (1+ε)w; big iff ε^ρ·w <= p/s <= (1+ε)w; small otherwise.
/// Boundaries are resolved by exact rational comparison.
pub fn classify(size: &Rat, speed: &Rat, load_bound: &Rat, params: &SchemeParams) -> JobClass {
    let proc = size / speed;
    let upper = params.base() * load_bound;
    if proc > upper {
        JobClass::Huge
    } else if proc >= params.eps_pow_rho() * load_bound {
        JobClass::Big
    } else {
        JobClass::Small
    }
}

/// λ = Δ − δ + 1 with Δ = ⌈log_{1+ε}(1+ε)w⌉ and δ = ⌈log_{1+ε}ε^ρ·w⌉, the
/// number of processing-time classes big jobs can take. Depends on the load
/// bound only; the speed argument is kept for symmetry with `classify`.
pub fn lambda_for(_speed: &Rat, load_bound: &Rat, params: &SchemeParams) -> i64 {
    let base = params.base();
    let big_delta = ceil_log(&base, &(&base * load_bound));
    let delta = ceil_log(&base, &(params.eps_pow_rho() * load_bound));
    big_delta - delta + 1
}

/// Derived quantities of a (s_exp, w_exp) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairGeometry {
    pub s_exp: i64,
    pub w_exp: i64,
    /// First window period: ⌊log_{1+ε} ε·w⌋.
    pub nu_l: i64,
    /// Last window period: ⌈log_{1+ε} (1+ε)·w⌉.
    pub nu_u: i64,
    /// Smallest big processing-time exponent: ⌈log_{1+ε} ε^ρ·w⌉.
    pub delta_exp: i64,
    /// Largest big processing-time exponent: ⌈log_{1+ε} (1+ε)·w⌉.
    pub big_delta_exp: i64,
    /// Number of big processing-time classes.
    pub lambda: i64,
}

impl PairGeometry {
    pub fn new(params: &SchemeParams, s_exp: i64, w_exp: i64) -> Self {
        let base = params.base();
        let w = pow_int(&base, w_exp);
        let nu_l = floor_log(&base, &(&params.epsilon * &w));
        let nu_u = ceil_log(&base, &(&base * &w));
        let delta_exp = ceil_log(&base, &(params.eps_pow_rho() * &w));
        let big_delta_exp = nu_u; // same expression as Δ
        PairGeometry {
            s_exp,
            w_exp,
            nu_l,
            nu_u,
            delta_exp,
            big_delta_exp,
            lambda: big_delta_exp - delta_exp + 1,
        }
    }

    pub fn window_len(&self) -> usize {
        (self.nu_u - self.nu_l + 1) as usize
    }

    /// Window period exponents, ascending.
    pub fn window_exps(&self) -> impl Iterator<Item = i64> {
        self.nu_l..=self.nu_u
    }

    /// Processing-time exponent of big class r (1-based).
    pub fn big_proc_exp(&self, r: usize) -> i64 {
        self.delta_exp + r as i64 - 1
    }
}

/// Big-job counts per processing-time class plus the small-job volume index
/// of one window period.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PeriodCounts {
    pub big: Vec<u32>,
    pub small: u32,
}

impl PeriodCounts {
    pub fn empty(lambda: usize) -> Self {
        PeriodCounts { big: vec![0; lambda], small: 0 }
    }

    pub fn is_zero(&self) -> bool {
        self.small == 0 && self.big.iter().all(|&b| b == 0)
    }
}

/// Load bound of a configuration. `Zero` marks the bookkeeping
/// configuration of an empty machine (load 0 is not a grid power, but the
/// model needs machines that carry nothing at zero objective cost).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoadBound {
    Zero,
    Exp(i64),
}

/// Compact one-machine schedule descriptor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Configuration {
    pub s_exp: i64,
    pub load: LoadBound,
    /// One entry per window period ν_l..ν_u; empty for the zero config.
    pub windows: Vec<PeriodCounts>,
}

impl Configuration {
    pub fn zero(s_exp: i64) -> Self {
        Configuration { s_exp, load: LoadBound::Zero, windows: Vec::new() }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.load, LoadBound::Zero)
    }

    pub fn w_exp(&self) -> Option<i64> {
        match self.load {
            LoadBound::Zero => None,
            LoadBound::Exp(e) => Some(e),
        }
    }

    pub fn geometry(&self, params: &SchemeParams) -> Option<PairGeometry> {
        self.w_exp().map(|w| PairGeometry::new(params, self.s_exp, w))
    }

    /// Counts for the window period with exponent `k` (zero outside).
    pub fn counts_at(&self, geom: &PairGeometry, k: i64) -> Option<&PeriodCounts> {
        if k < geom.nu_l || k > geom.nu_u {
            return None;
        }
        self.windows.get((k - geom.nu_l) as usize)
    }
}

/// Per-pair job statistics used to cap enumeration cells: how many jobs
/// fall in each big processing-time class, and the total small volume (in
/// processing-time units on this speed).
#[derive(Debug, Clone)]
pub struct PairStats {
    pub big_counts: Vec<usize>,
    pub small_volume: Rat,
}

pub fn pair_stats(rounded: &RoundedInstance, geom: &PairGeometry) -> PairStats {
    let params = &rounded.base.params;
    let base = params.base();
    let speed = pow_int(&base, geom.s_exp);
    let w = pow_int(&base, geom.w_exp);
    let mut big_counts = vec![0usize; geom.lambda as usize];
    let mut small_volume = Rat::zero();
    for j in 0..rounded.base.jobs.len() {
        let size = rounded.size(j);
        match classify(&size, &speed, &w, params) {
            JobClass::Big => {
                let proc_exp = rounded.size_exps[j] - geom.s_exp;
                let r = proc_exp - geom.delta_exp;
                debug_assert!((0..geom.lambda).contains(&r));
                big_counts[r as usize] += 1;
            }
            JobClass::Small => small_volume += pow_int(&base, rounded.size_exps[j] - geom.s_exp),
            JobClass::Huge => {}
        }
    }
    PairStats { big_counts, small_volume }
}

/// One item of a generated one-machine schedule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleItem {
    /// Aggregated small-job volume; does not count towards crossings.
    Sand { length: Rat },
    /// A big job of the given processing-time exponent.
    Big { proc_exp: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneMachineSchedule {
    /// (item, start time), in placement order.
    pub items: Vec<(ScheduleItem, Rat)>,
    /// Completion time of the last item (0 when empty).
    pub load: Rat,
}

/// Builds the partial schedule a configuration describes: per window period
/// in ascending order, items start at max(period start, previous finish) —
/// sand first, then big jobs by non-decreasing size. Returns `None` when
/// some period has more than one non-sand item whose processing crosses
/// into the successive period(s), or when an item fails to start inside
/// the window.
pub fn generate_one_machine_schedule(
    config: &Configuration,
    params: &SchemeParams,
) -> Option<OneMachineSchedule> {
    let geom = match config.geometry(params) {
        Some(g) => g,
        None => {
            return Some(OneMachineSchedule { items: Vec::new(), load: Rat::zero() });
        }
    };
    let base = params.base();
    let speed = pow_int(&base, geom.s_exp);
    let w = pow_int(&base, geom.w_exp);
    let sand_unit = params.eps_pow_rho() * &w; // time units on this machine
    let window_end = pow_int(&base, geom.nu_u + 1);

    let mut items: Vec<(ScheduleItem, Rat)> = Vec::new();
    let mut cursor = pow_int(&base, geom.nu_l);
    for (offset, counts) in config.windows.iter().enumerate() {
        let k = geom.nu_l + offset as i64;
        let period_start = pow_int(&base, k);
        let period_end = pow_int(&base, k + 1);
        cursor = cursor.max(period_start);
        let mut crossers = 0u32;
        if counts.small > 0 {
            let length = int(i64::from(counts.small)) * &sand_unit;
            if cursor >= window_end {
                return None;
            }
            items.push((ScheduleItem::Sand { length: &length * &speed }, cursor.clone()));
            cursor += &length;
        }
        for (idx, &count) in counts.big.iter().enumerate() {
            let proc_exp = geom.big_proc_exp(idx + 1);
            let proc = pow_int(&base, proc_exp);
            for _ in 0..count {
                if cursor >= window_end {
                    return None;
                }
                let end = &cursor + &proc;
                if end > period_end {
                    crossers += 1;
                    if crossers > 1 {
                        return None;
                    }
                }
                items.push((ScheduleItem::Big { proc_exp }, cursor.clone()));
                cursor = end;
            }
        }
    }
    Some(OneMachineSchedule {
        load: if items.is_empty() { Rat::zero() } else { cursor },
        items,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error(
        "scheme parameters intractable: raw configuration count {raw} for pair \
         (s_exp {s_exp}, w_exp {w_exp}) exceeds the cap {cap}"
    )]
    Intractable { s_exp: i64, w_exp: i64, raw: u128, cap: u128 },
}

/// Caps for the raw enumeration space.
#[derive(Debug, Clone, Copy)]
pub struct EnumLimits {
    pub max_raw_per_pair: u128,
}

impl Default for EnumLimits {
    fn default() -> Self {
        EnumLimits { max_raw_per_pair: 2_000_000 }
    }
}

/// All feasible configurations for one (speed, load bound) pair: raw
/// vectors are enumerated as mixed-radix counters over the bounded cells,
/// then filtered through the one-machine generator. Cells are additionally
/// capped by what the instance can realize (big-class job counts and total
/// small volume), which drops only columns no integral schedule can use.
pub fn enumerate_configurations(
    rounded: &RoundedInstance,
    s_exp: i64,
    w_exp: i64,
    limits: &EnumLimits,
) -> Result<Vec<Configuration>, ConfigError> {
    let params = &rounded.base.params;
    let geom = PairGeometry::new(params, s_exp, w_exp);
    let stats = pair_stats(rounded, &geom);
    let budget = mu_tilde_budget(params);
    debug_assert!(
        geom.window_len() as i64 <= budget + 1,
        "window of {} periods exceeds mu_tilde + 1 = {}",
        geom.window_len(),
        budget + 1
    );

    let formula_cap: u128 = {
        let cap = (params.base() / params.eps_pow_rho()).floor();
        cap.to_integer().to_u128().unwrap_or(u128::MAX)
    };
    let small_cap: u128 = {
        let unit = params.eps_pow_rho() * pow_int(&params.base(), w_exp);
        let need = (&stats.small_volume / &unit).floor();
        need.to_integer().to_u128().unwrap_or(u128::MAX)
    };

    let lambda = geom.lambda as usize;
    let window_len = geom.window_len();
    // Cell capacities, window-major: lambda big cells then the small cell.
    let mut caps: Vec<u32> = Vec::with_capacity(window_len * (lambda + 1));
    let mut raw: u128 = 1;
    for _ in 0..window_len {
        for r in 0..lambda {
            let cap = formula_cap.min(stats.big_counts[r] as u128);
            caps.push(cap.min(u32::MAX as u128) as u32);
            raw = raw.saturating_mul(cap + 1);
        }
        let cap = formula_cap.min(small_cap);
        caps.push(cap.min(u32::MAX as u128) as u32);
        raw = raw.saturating_mul(cap + 1);
    }
    if raw > limits.max_raw_per_pair {
        return Err(ConfigError::Intractable {
            s_exp,
            w_exp,
            raw,
            cap: limits.max_raw_per_pair,
        });
    }

    let mut result = Vec::new();
    let mut cells = vec![0u32; caps.len()];
    loop {
        let windows: Vec<PeriodCounts> = (0..window_len)
            .map(|t| {
                let base = t * (lambda + 1);
                PeriodCounts {
                    big: cells[base..base + lambda].to_vec(),
                    small: cells[base + lambda],
                }
            })
            .collect();
        let config = Configuration { s_exp, load: LoadBound::Exp(w_exp), windows };
        if generate_one_machine_schedule(&config, params).is_some() {
            result.push(config);
        }
        // Mixed-radix increment, last cell fastest.
        let mut pos = cells.len();
        loop {
            if pos == 0 {
                return Ok(result);
            }
            pos -= 1;
            if cells[pos] < caps[pos] {
                cells[pos] += 1;
                break;
            }
            cells[pos] = 0;
        }
    }
}

fn mu_tilde_budget(params: &SchemeParams) -> i64 {
    crate::normalize::mu_tilde(params)
}

/// Candidate (speed, load bound) exponent pairs for a guess: for each
/// distinct machine speed and each distinct job processing time P on it,
/// the grid powers in [P, n·P], intersected with (0, (1+ε)·C_opt].
pub fn candidate_pairs(rounded: &RoundedInstance, guess: &Guess) -> Vec<(i64, i64)> {
    let n = rounded.base.jobs.len();
    if n == 0 {
        return Vec::new();
    }
    let base = rounded.base.params.base();
    let spread = floor_log(&base, &int(n as i64));
    let speed_exps: BTreeSet<i64> = rounded.speed_exps.iter().copied().collect();
    let size_exps: BTreeSet<i64> = rounded.size_exps.iter().copied().collect();
    let mut pairs = BTreeSet::new();
    for &b in &speed_exps {
        for &a in &size_exps {
            let lo = a - b;
            for w in lo..=lo + spread {
                if w <= guess.c_opt_exp + 1 {
                    pairs.insert((b, w));
                }
            }
        }
    }
    pairs.into_iter().collect()
}
