//! The configuration MILP for one guess, and its solver: LP relaxation
//! plus depth-first branch-and-bound over the integral configuration
//! counters.
//!
//! Variables are one counter z_c per configuration (integral when the
//! configuration's speed is fast and its load bound large relative to κ)
//! and assignment variables x_{jkc} for every non-huge (job, period,
//! configuration) combination. Every solution leaving this module is
//! re-verified row by row; in exact mode that check is exact rational.

use crate::config::{classify, Configuration, JobClass, PairGeometry};
use crate::guess::Guess;
use crate::lp::{solve_exact, LinearProgram, LpOutcome, LpRow, Relation};
use crate::model::{machine_loads, verify_schedule, SchemeParams};
use crate::rational::{floor_log, from_f64_snapped, pow_int, pow_phi, to_f64, Rat};
use crate::rounding::RoundedInstance;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};

/// (job, period exponent, configuration column).
pub type XKey = (usize, i64, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RowKind {
    /// Each job is assigned exactly once, as a non-huge job.
    Assign { job: usize },
    /// Big-job assignments match z_c · B_c(k, r) per size class.
    BigMatch { config: usize, k: i64, r: usize },
    /// Small-job volume cap per (configuration, period).
    SmallVolume { config: usize, k: i64 },
    /// Configuration counters per speed match the machine counts.
    SpeedCount { s_exp: i64 },
    /// Prefix resource availability per period.
    Resource { k: i64 },
    /// Some configuration covers the guessed makespan.
    GuessCover,
}

impl RowKind {
    fn lp_name(&self) -> String {
        fn e(v: i64) -> String {
            if v < 0 { format!("n{}", -v) } else { v.to_string() }
        }
        match self {
            RowKind::Assign { job } => format!("assign_{job}"),
            RowKind::BigMatch { config, k, r } => format!("big_{config}_{}_{r}", e(*k)),
            RowKind::SmallVolume { config, k } => format!("small_{config}_{}", e(*k)),
            RowKind::SpeedCount { s_exp } => format!("speed_{}", e(*s_exp)),
            RowKind::Resource { k } => format!("resource_{}", e(*k)),
            RowKind::GuessCover => "cover".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MilpModel {
    pub guess: Guess,
    pub params: SchemeParams,
    /// z columns, in order: the enumerated configurations, then one zero
    /// configuration per machine speed.
    pub configs: Vec<Configuration>,
    pub geometries: Vec<Option<PairGeometry>>,
    pub z_integral: Vec<bool>,
    /// x columns in order; the absolute column index is z count + position.
    pub x_cols: Vec<XKey>,
    pub x_index: BTreeMap<XKey, usize>,
    pub config_index: BTreeMap<Configuration, usize>,
    pub rows: Vec<LpRow>,
    pub row_kinds: Vec<RowKind>,
    pub objective: Vec<Rat>,
    pub objective_const: Rat,
    pub bounds: Vec<(Rat, Option<Rat>)>,
    pub trivially_infeasible: Option<String>,
}

impl MilpModel {
    pub fn z_count(&self) -> usize {
        self.configs.len()
    }

    pub fn columns(&self) -> usize {
        self.configs.len() + self.x_cols.len()
    }

    pub fn integral_count(&self) -> usize {
        self.z_integral.iter().filter(|&&b| b).count()
    }

    /// Text LP rendering (coefficients as decimals) for external checks.
    pub fn to_lp_format(&self) -> String {
        let mut out = String::new();
        let name = |col: usize| -> String {
            if col < self.z_count() {
                format!("z{col}")
            } else {
                let (j, k, c) = self.x_cols[col - self.z_count()];
                let ke = if k < 0 { format!("n{}", -k) } else { k.to_string() };
                format!("x_{j}_{ke}_{c}")
            }
        };
        out.push_str(&format!(
            "\\ configuration milp for guess (c_opt_exp {}, s_opt_exp {})\n",
            self.guess.c_opt_exp, self.guess.s_opt_exp
        ));
        out.push_str(&format!(
            "\\ constant objective offset: {}\n",
            to_f64(&self.objective_const)
        ));
        out.push_str("Minimize\n obj:");
        let mut first = true;
        for (col, c) in self.objective.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let v = to_f64(c);
            if first && v >= 0.0 {
                out.push_str(&format!(" {} {}", v, name(col)));
            } else {
                out.push_str(&format!(" {} {} {}", if v < 0.0 { "-" } else { "+" }, v.abs(), name(col)));
            }
            first = false;
        }
        if first {
            out.push_str(" 0 z0");
        }
        out.push_str("\nSubject To\n");
        for (row, kind) in self.rows.iter().zip(&self.row_kinds) {
            out.push_str(&format!(" {}:", kind.lp_name()));
            for (col, c) in &row.coeffs {
                let v = to_f64(c);
                out.push_str(&format!(" {} {} {}", if v < 0.0 { "-" } else { "+" }, v.abs(), name(*col)));
            }
            let op = match row.relation {
                Relation::Le => "<=",
                Relation::Ge => ">=",
                Relation::Eq => "=",
            };
            out.push_str(&format!(" {} {}\n", op, to_f64(&row.rhs)));
        }
        out.push_str("Bounds\n");
        for (col, (l, u)) in self.bounds.iter().enumerate() {
            match u {
                Some(u) => out.push_str(&format!(" {} <= {} <= {}\n", to_f64(l), name(col), to_f64(u))),
                None => out.push_str(&format!(" {} <= {}\n", to_f64(l), name(col))),
            }
        }
        let integrals: Vec<String> = (0..self.z_count())
            .filter(|&c| self.z_integral[c])
            .map(|c| format!("z{c}"))
            .collect();
        if !integrals.is_empty() {
            out.push_str("General\n ");
            out.push_str(&integrals.join(" "));
            out.push('\n');
        }
        out.push_str("End\n");
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub z: Vec<Rat>,
    pub x: Vec<Rat>,
    /// Objective including the constant ψ·C_opt.
    pub objective: Rat,
    /// Objective without the constant.
    pub variable_objective: Rat,
    pub proven_optimal: bool,
    pub nodes: usize,
    /// Which arithmetic produced the values; float-mode consumers must
    /// tolerate roundoff when flooring fractional masses.
    pub mode: LpMode,
}

impl MilpSolution {
    pub fn x_value(&self, model: &MilpModel, key: &XKey) -> Rat {
        match model.x_index.get(key) {
            Some(&col) => self.x[col - model.z_count()].clone(),
            None => Rat::zero(),
        }
    }

    fn values(&self) -> Vec<Rat> {
        let mut v = self.z.clone();
        v.extend(self.x.iter().cloned());
        v
    }
}

/// Builds the MILP for one guess from the feasible configurations of its
/// candidate pairs. Appends one zero configuration per machine speed so
/// machines can be left empty at zero objective cost.
pub fn build_model(
    rounded: &RoundedInstance,
    guess: &Guess,
    configs: &[Configuration],
) -> MilpModel {
    let params = rounded.base.params.clone();
    let base = params.base();
    let n = rounded.base.jobs.len();

    let speed_exps: BTreeSet<i64> = rounded.speed_exps.iter().copied().collect();
    let mut all_configs: Vec<Configuration> = configs.to_vec();
    for &s in &speed_exps {
        all_configs.push(Configuration::zero(s));
    }
    let geometries: Vec<Option<PairGeometry>> =
        all_configs.iter().map(|c| c.geometry(&params)).collect();
    let config_index: BTreeMap<Configuration, usize> = all_configs
        .iter()
        .enumerate()
        .map(|(i, c)| (c.clone(), i))
        .collect();

    // Integrality: fast speed and large load relative to kappa.
    let c_opt = guess.c_opt(&params);
    let kappa_c_opt = &guess.kappa * &c_opt;
    let z_integral: Vec<bool> = all_configs
        .iter()
        .map(|c| match c.w_exp() {
            Some(w_exp) => {
                pow_int(&base, c.s_exp) >= guess.kappa
                    && pow_int(&base, w_exp) >= kappa_c_opt
            }
            None => false,
        })
        .collect();

    // Column space: x_{jkc} for non-huge (job, config) pairs, with big jobs
    // restricted to periods whose configuration cell is positive.
    let mut x_cols: Vec<XKey> = Vec::new();
    let mut job_classes: Vec<Vec<Option<JobClass>>> = vec![Vec::new(); all_configs.len()];
    for (ci, config) in all_configs.iter().enumerate() {
        let Some(geom) = &geometries[ci] else {
            job_classes[ci] = vec![None; n];
            continue;
        };
        let speed = pow_int(&base, geom.s_exp);
        let w = pow_int(&base, geom.w_exp);
        let classes: Vec<Option<JobClass>> = (0..n)
            .map(|j| Some(classify(&rounded.size(j), &speed, &w, &params)))
            .collect();
        for (j, class) in classes.iter().enumerate() {
            match class {
                Some(JobClass::Huge) | None => {}
                Some(JobClass::Big) => {
                    let r = (rounded.size_exps[j] - geom.s_exp) - geom.delta_exp;
                    for k in geom.window_exps() {
                        let counts = config.counts_at(geom, k).expect("window period");
                        if counts.big[r as usize] > 0 {
                            x_cols.push((j, k, ci));
                        }
                    }
                }
                Some(JobClass::Small) => {
                    for k in geom.window_exps() {
                        x_cols.push((j, k, ci));
                    }
                }
            }
        }
        job_classes[ci] = classes;
    }
    x_cols.sort_unstable();
    let z_count = all_configs.len();
    let x_index: BTreeMap<XKey, usize> = x_cols
        .iter()
        .enumerate()
        .map(|(i, key)| (*key, z_count + i))
        .collect();

    let mut rows = Vec::new();
    let mut row_kinds = Vec::new();
    let mut trivially_infeasible = None;

    // Assignment rows: each job exactly once.
    let mut per_job: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, (j, _, _)) in x_cols.iter().enumerate() {
        per_job[*j].push(z_count + i);
    }
    for (j, cols) in per_job.iter().enumerate() {
        if cols.is_empty() && trivially_infeasible.is_none() {
            trivially_infeasible = Some(format!(
                "job {j} is huge for every candidate configuration"
            ));
        }
        rows.push(LpRow {
            coeffs: cols.iter().map(|&c| (c, Rat::one())).collect(),
            relation: Relation::Eq,
            rhs: Rat::one(),
        });
        row_kinds.push(RowKind::Assign { job: j });
    }

    // Big-job count rows and small-volume rows.
    for (ci, config) in all_configs.iter().enumerate() {
        let Some(geom) = &geometries[ci] else { continue };
        let w = pow_int(&base, geom.w_exp);
        let speed = pow_int(&base, geom.s_exp);
        let small_unit = params.eps_pow_rho() * &w * &speed; // size units
        for k in geom.window_exps() {
            let counts = config.counts_at(geom, k).expect("window period");
            for (r0, &b) in counts.big.iter().enumerate() {
                if b == 0 {
                    continue;
                }
                let mut coeffs: Vec<(usize, Rat)> = Vec::new();
                let proc_exp = geom.big_proc_exp(r0 + 1);
                for j in 0..n {
                    if job_classes[ci][j] == Some(JobClass::Big)
                        && rounded.size_exps[j] - geom.s_exp == proc_exp
                    {
                        if let Some(&col) = x_index.get(&(j, k, ci)) {
                            coeffs.push((col, Rat::one()));
                        }
                    }
                }
                coeffs.push((ci, -crate::rational::int(i64::from(b))));
                rows.push(LpRow { coeffs, relation: Relation::Eq, rhs: Rat::zero() });
                row_kinds.push(RowKind::BigMatch { config: ci, k, r: r0 + 1 });
            }
            let mut coeffs: Vec<(usize, Rat)> = Vec::new();
            for j in 0..n {
                if job_classes[ci][j] == Some(JobClass::Small) {
                    if let Some(&col) = x_index.get(&(j, k, ci)) {
                        coeffs.push((col, rounded.size(j)));
                    }
                }
            }
            if !coeffs.is_empty() {
                let cap = crate::rational::int(i64::from(counts.small) + 1) * &small_unit;
                coeffs.push((ci, -cap));
                rows.push(LpRow { coeffs, relation: Relation::Le, rhs: Rat::zero() });
                row_kinds.push(RowKind::SmallVolume { config: ci, k });
            }
        }
    }

    // Counters per speed equal the machine counts.
    for &s in &speed_exps {
        let m_s = rounded.speed_exps.iter().filter(|&&e| e == s).count();
        let coeffs: Vec<(usize, Rat)> = all_configs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.s_exp == s)
            .map(|(ci, _)| (ci, Rat::one()))
            .collect();
        rows.push(LpRow {
            coeffs,
            relation: Relation::Eq,
            rhs: crate::rational::int(m_s as i64),
        });
        row_kinds.push(RowKind::SpeedCount { s_exp: s });
    }

    // Prefix resource rows over the universal period range.
    let mut k_lo = rounded.alpha_exp.min(guess.c_opt_exp + 1);
    let mut k_hi = rounded.beta_exp.max(guess.c_opt_exp + 1);
    for geom in geometries.iter().flatten() {
        k_lo = k_lo.min(geom.nu_l);
        k_hi = k_hi.max(geom.nu_u);
    }
    let mut demand_cols: Vec<(i64, usize, Rat)> = Vec::new(); // (k, col, d_j)
    for (i, (j, k, _)) in x_cols.iter().enumerate() {
        let d = &rounded.base.jobs[*j].demand;
        if d.is_positive() {
            demand_cols.push((*k, z_count + i, d.clone()));
        }
    }
    let mut cum_supply = Rat::zero();
    for k in k_lo..=k_hi {
        cum_supply += rounded.supply_at(k);
        let coeffs: Vec<(usize, Rat)> = demand_cols
            .iter()
            .filter(|(kk, _, _)| *kk <= k)
            .map(|(_, col, d)| (*col, d.clone()))
            .collect();
        if coeffs.is_empty() {
            continue;
        }
        rows.push(LpRow { coeffs, relation: Relation::Le, rhs: cum_supply.clone() });
        row_kinds.push(RowKind::Resource { k });
    }

    // Cover row: a configuration of the guessed speed with (1+ε)·w_c >= C_opt.
    let cover: Vec<(usize, Rat)> = all_configs
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.s_exp == guess.s_opt_exp
                && c.w_exp().map_or(false, |w| w >= guess.c_opt_exp - 1)
        })
        .map(|(ci, _)| (ci, Rat::one()))
        .collect();
    if cover.is_empty() && trivially_infeasible.is_none() {
        trivially_infeasible = Some(
            "no configuration has the guessed speed and a load bound covering C_opt".to_string(),
        );
    }
    rows.push(LpRow { coeffs: cover, relation: Relation::Ge, rhs: Rat::one() });
    row_kinds.push(RowKind::GuessCover);

    // Objective and bounds.
    let one_minus_psi = Rat::one() - &params.psi;
    let mut objective = Vec::with_capacity(z_count + x_cols.len());
    let mut bounds = Vec::with_capacity(z_count + x_cols.len());
    for config in &all_configs {
        let coef = match config.w_exp() {
            Some(w_exp) => &one_minus_psi * pow_phi(&pow_int(&base, w_exp), &params.phi),
            None => Rat::zero(),
        };
        objective.push(coef);
        let m_s = rounded
            .speed_exps
            .iter()
            .filter(|&&e| e == config.s_exp)
            .count();
        bounds.push((Rat::zero(), Some(crate::rational::int(m_s as i64))));
    }
    for _ in &x_cols {
        objective.push(Rat::zero());
        bounds.push((Rat::zero(), Some(Rat::one())));
    }
    let objective_const = &params.psi * &c_opt;

    MilpModel {
        guess: guess.clone(),
        params,
        configs: all_configs,
        geometries,
        z_integral,
        x_cols,
        x_index,
        config_index,
        rows,
        row_kinds,
        objective,
        objective_const,
        bounds,
        trivially_infeasible,
    }
}

/// Exact row-by-row verification of a solution (`tolerance` admits the
/// documented float-mode slack; pass `None` for the exact check).
pub fn check_solution(
    model: &MilpModel,
    solution: &MilpSolution,
    tolerance: Option<f64>,
) -> Result<(), String> {
    let values = solution.values();
    if values.len() != model.columns() {
        return Err("solution has the wrong number of columns".to_string());
    }
    let tol = tolerance.map(|t| Rat::from_float(t).expect("finite tolerance"));
    let within = |violation: &Rat, scale: &Rat| -> bool {
        match &tol {
            None => !violation.is_positive(),
            Some(t) => violation <= &(t * (Rat::one() + scale.abs())),
        }
    };
    for (col, (l, u)) in model.bounds.iter().enumerate() {
        let v = &values[col];
        if !within(&(l - v), l) {
            return Err(format!("column {col} below its lower bound"));
        }
        if let Some(u) = u {
            if !within(&(v - u), u) {
                return Err(format!("column {col} above its upper bound"));
            }
        }
    }
    for (row, kind) in model.rows.iter().zip(&model.row_kinds) {
        let lhs: Rat = row.coeffs.iter().map(|(c, coef)| coef * &values[*c]).sum();
        let ok = match row.relation {
            Relation::Le => within(&(&lhs - &row.rhs), &row.rhs),
            Relation::Ge => within(&(&row.rhs - &lhs), &row.rhs),
            Relation::Eq => {
                within(&(&lhs - &row.rhs), &row.rhs) && within(&(&row.rhs - &lhs), &row.rhs)
            }
        };
        if !ok {
            return Err(format!(
                "row {} violated: lhs {}, rhs {}",
                kind.lp_name(),
                to_f64(&lhs),
                to_f64(&row.rhs)
            ));
        }
    }
    for (ci, &integral) in model.z_integral.iter().enumerate() {
        if !integral {
            continue;
        }
        let v = &solution.z[ci];
        let ok = match &tol {
            None => v.is_integer(),
            Some(t) => (v - v.round()).abs() <= *t,
        };
        if !ok {
            return Err(format!("z{ci} must be integral, got {}", to_f64(v)));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpMode {
    ExactRational,
    Float,
}

#[derive(Debug, Clone, Copy)]
pub struct MilpOptions {
    pub mode: LpMode,
    pub node_limit: usize,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { mode: LpMode::ExactRational, node_limit: 200_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MilpError {
    #[error("LP relaxation reported unbounded, which the model forbids")]
    Unbounded,
    #[error("solution failed row verification: {0}")]
    BadSolution(String),
}

fn solve_lp(
    lp: &LinearProgram,
    bounds: &[(Rat, Option<Rat>)],
    mode: LpMode,
) -> Result<Option<(Vec<Rat>, Rat)>, MilpError> {
    match mode {
        LpMode::ExactRational => {
            let mut prog = lp.clone();
            prog.bounds = bounds.to_vec();
            match solve_exact(&prog) {
                LpOutcome::Optimal(sol) => Ok(Some((sol.values, sol.objective))),
                LpOutcome::Infeasible => Ok(None),
                LpOutcome::Unbounded => Err(MilpError::Unbounded),
            }
        }
        LpMode::Float => {
            let mut problem = microlp::Problem::new(microlp::OptimizationDirection::Minimize);
            let vars: Vec<microlp::Variable> = bounds
                .iter()
                .enumerate()
                .map(|(col, (l, u))| {
                    let lo = to_f64(l);
                    let hi = u.as_ref().map(to_f64).unwrap_or(f64::INFINITY);
                    problem.add_var(to_f64(&lp.objective[col]), (lo, hi))
                })
                .collect();
            for row in &lp.rows {
                let expr: Vec<(microlp::Variable, f64)> = row
                    .coeffs
                    .iter()
                    .map(|(c, coef)| (vars[*c], to_f64(coef)))
                    .collect();
                let op = match row.relation {
                    Relation::Le => microlp::ComparisonOp::Le,
                    Relation::Ge => microlp::ComparisonOp::Ge,
                    Relation::Eq => microlp::ComparisonOp::Eq,
                };
                problem.add_constraint(expr.as_slice(), op, to_f64(&row.rhs));
            }
            match problem.solve() {
                Ok(sol) => {
                    let values: Vec<Rat> = (0..bounds.len())
                        .map(|col| {
                            let mut v = from_f64_snapped(*sol.var_value(vars[col]), 1e-7);
                            let (l, u) = &bounds[col];
                            if v < *l {
                                v = l.clone();
                            }
                            if let Some(u) = u {
                                if v > *u {
                                    v = u.clone();
                                }
                            }
                            v
                        })
                        .collect();
                    let objective = lp
                        .objective
                        .iter()
                        .zip(&values)
                        .map(|(c, v)| c * v)
                        .sum();
                    Ok(Some((values, objective)))
                }
                Err(microlp::Error::Infeasible) => Ok(None),
                Err(microlp::Error::Unbounded) => Err(MilpError::Unbounded),
                Err(e) => Err(MilpError::BadSolution(format!("float LP error: {e:?}"))),
            }
        }
    }
}

/// Solves the MILP. `Ok(None)` means infeasible. Branching is restricted to
/// the flagged-integral configuration counters: most-fractional first,
/// depth-first, pruned by the incumbent objective.
pub fn solve(model: &MilpModel, options: &MilpOptions) -> Result<Option<MilpSolution>, MilpError> {
    if model.trivially_infeasible.is_some() {
        return Ok(None);
    }
    let lp = LinearProgram {
        objective: model.objective.clone(),
        bounds: model.bounds.clone(),
        rows: model.rows.clone(),
    };
    let float_slack = match options.mode {
        LpMode::ExactRational => Rat::zero(),
        LpMode::Float => Rat::from_float(1e-9).expect("finite"),
    };

    struct Node {
        bounds: Vec<(Rat, Option<Rat>)>,
    }
    let mut stack = vec![Node { bounds: model.bounds.clone() }];
    let mut incumbent: Option<(Rat, Vec<Rat>)> = None;
    let mut nodes = 0usize;
    let mut exhausted = true;

    while let Some(node) = stack.pop() {
        if nodes >= options.node_limit {
            exhausted = false;
            break;
        }
        nodes += 1;
        let Some((values, objective)) = solve_lp(&lp, &node.bounds, options.mode)? else {
            continue;
        };
        if let Some((best, _)) = &incumbent {
            let cutoff = best - &float_slack * (Rat::one() + best.abs());
            if objective >= cutoff {
                continue;
            }
        }
        // Most fractional flagged counter.
        let mut branch: Option<(usize, Rat)> = None;
        let mut branch_score = Rat::zero();
        for (ci, &integral) in model.z_integral.iter().enumerate() {
            if !integral {
                continue;
            }
            let v = &values[ci];
            let frac = v - v.floor();
            if frac.is_zero() {
                continue;
            }
            let score = frac.clone().min(Rat::one() - &frac);
            if branch.is_none() || score > branch_score {
                branch_score = score;
                branch = Some((ci, v.clone()));
            }
        }
        match branch {
            None => {
                let better = match &incumbent {
                    None => true,
                    Some((best, _)) => objective < *best,
                };
                if better {
                    incumbent = Some((objective, values));
                }
            }
            Some((col, v)) => {
                let floor = v.floor();
                let ceil = &floor + Rat::one();
                let mut down = node.bounds.clone();
                down[col].1 = Some(floor.clone());
                let mut up = node.bounds;
                up[col].0 = ceil;
                // Explore the nearer side first (it is pushed last).
                let frac = &v - &floor;
                if frac >= crate::rational::rat(1, 2) {
                    stack.push(Node { bounds: down });
                    stack.push(Node { bounds: up });
                } else {
                    stack.push(Node { bounds: up });
                    stack.push(Node { bounds: down });
                }
            }
        }
    }

    let Some((_, values)) = incumbent else {
        return Ok(None);
    };
    let z: Vec<Rat> = values[..model.z_count()].to_vec();
    let x: Vec<Rat> = values[model.z_count()..].to_vec();
    let variable_objective: Rat = model
        .objective
        .iter()
        .zip(&values)
        .map(|(c, v)| c * v)
        .sum();
    let solution = MilpSolution {
        objective: &variable_objective + &model.objective_const,
        variable_objective,
        z,
        x,
        proven_optimal: exhausted,
        nodes,
        mode: options.mode,
    };
    let tol = match options.mode {
        LpMode::ExactRational => None,
        LpMode::Float => Some(1e-6),
    };
    check_solution(model, &solution, tol).map_err(MilpError::BadSolution)?;
    Ok(Some(solution))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WitnessError {
    #[error("witness schedule is infeasible for the rounded instance")]
    InfeasibleSchedule,
    #[error("schedule inconsistent with guess: {0}")]
    GuessMismatch(String),
    #[error("machine {machine}: no candidate load bound represents its schedule")]
    NoRepresentableLoadBound { machine: usize },
    #[error("witness references a missing column for job {job} in period {k}")]
    MissingColumn { job: usize, k: i64 },
    #[error("witness violates a model row: {0}")]
    RowViolated(String),
}

#[derive(Debug, Clone)]
pub struct Witness {
    pub solution: MilpSolution,
    /// Per machine: the configuration column it realizes.
    pub machine_configs: Vec<Option<usize>>,
    /// Per machine: the delay applied to align it with its window.
    pub delays: Vec<Rat>,
}

/// Reads an integral MILP solution off a normalized schedule, per-machine:
/// the load bound is the smallest candidate the machine's (possibly
/// delayed) schedule fits under. Machines may be delayed further to land in
/// their configuration window; delays preserve feasibility and never raise
/// the witness objective above ψ·C_opt + (1−ψ)·Σ Λ_i^φ.
pub fn construct_witness(
    model: &MilpModel,
    rounded: &RoundedInstance,
    schedule: &crate::model::Schedule,
) -> Result<Witness, WitnessError> {
    let instance = rounded.as_instance();
    let violations =
        verify_schedule(&instance, schedule).map_err(|_| WitnessError::InfeasibleSchedule)?;
    if !violations.is_empty() {
        return Err(WitnessError::InfeasibleSchedule);
    }
    let params = &model.params;
    let base = params.base();
    let guess = &model.guess;
    let loads = machine_loads(&instance, schedule).expect("verified schedule");
    let makespan = loads.iter().max().cloned().unwrap_or_else(Rat::zero);
    if makespan.is_zero() {
        return Err(WitnessError::GuessMismatch("schedule is empty".to_string()));
    }
    if floor_log(&base, &makespan) != guess.c_opt_exp {
        return Err(WitnessError::GuessMismatch(format!(
            "makespan exponent {} does not match guessed C_opt exponent {}",
            floor_log(&base, &makespan),
            guess.c_opt_exp
        )));
    }
    let designated = (0..loads.len())
        .find(|&i| loads[i] == makespan && rounded.speed_exps[i] == guess.s_opt_exp)
        .ok_or_else(|| {
            WitnessError::GuessMismatch(format!(
                "no machine of speed exponent {} attains the makespan",
                guess.s_opt_exp
            ))
        })?;

    // Candidate load bounds present in the model, per speed.
    let mut pair_w: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for config in model.configs.iter() {
        if let Some(w) = config.w_exp() {
            pair_w.entry(config.s_exp).or_default().push(w);
        }
    }
    for list in pair_w.values_mut() {
        list.sort_unstable();
        list.dedup();
    }

    let lists = schedule.lists(instance.machines.len()).expect("verified");
    let mut machine_configs = vec![None; lists.len()];
    let mut delays = vec![Rat::zero(); lists.len()];
    let mut z = vec![Rat::zero(); model.z_count()];
    let mut x = vec![Rat::zero(); model.x_cols.len()];

    for (machine, list) in lists.iter().enumerate() {
        let s_exp = rounded.speed_exps[machine];
        if list.is_empty() {
            let zero_idx = *model
                .config_index
                .get(&Configuration::zero(s_exp))
                .expect("zero configuration exists per speed");
            machine_configs[machine] = Some(zero_idx);
            z[zero_idx] += Rat::one();
            continue;
        }
        let speed = pow_int(&base, s_exp);
        let load = &loads[machine];
        let first_start = list.iter().map(|js| js.start.clone()).min().expect("non-empty");
        let cost_cap = &base * load;
        let candidates = pair_w.get(&s_exp).cloned().unwrap_or_default();
        let mut chosen = None;
        'candidates: for w_exp in candidates {
            if machine == designated && w_exp < guess.c_opt_exp - 1 {
                continue;
            }
            let w = pow_int(&base, w_exp);
            if w > cost_cap {
                break; // candidates ascend; larger ones only get worse
            }
            let geom = PairGeometry::new(params, s_exp, w_exp);
            let window_start = pow_int(&base, geom.nu_l);
            let delay = if first_start < window_start {
                &window_start - &first_start
            } else {
                Rat::zero()
            };
            // Classify and bucket each job by its (delayed) start period.
            let mut windows: Vec<crate::config::PeriodCounts> =
                vec![crate::config::PeriodCounts::empty(geom.lambda as usize); geom.window_len()];
            let mut small_volume: Vec<Rat> = vec![Rat::zero(); geom.window_len()];
            let mut placements: Vec<(usize, i64)> = Vec::new();
            for js in list {
                let start = &js.start + &delay;
                let k = floor_log(&base, &start);
                if k < geom.nu_l || k > geom.nu_u {
                    continue 'candidates;
                }
                let offset = (k - geom.nu_l) as usize;
                let size = rounded.size(js.job);
                match classify(&size, &speed, &w, params) {
                    JobClass::Huge => continue 'candidates,
                    JobClass::Big => {
                        let r = (rounded.size_exps[js.job] - s_exp) - geom.delta_exp;
                        windows[offset].big[r as usize] += 1;
                    }
                    JobClass::Small => {
                        small_volume[offset] += pow_int(&base, rounded.size_exps[js.job] - s_exp);
                    }
                }
                placements.push((js.job, k));
            }
            let small_unit = params.eps_pow_rho() * &w;
            for (offset, vol) in small_volume.iter().enumerate() {
                if vol.is_zero() {
                    continue;
                }
                let s = (vol / &small_unit).floor();
                windows[offset].small = s.to_integer().to_u32().expect("small index fits");
            }
            let config = Configuration {
                s_exp,
                load: crate::config::LoadBound::Exp(w_exp),
                windows,
            };
            if let Some(&idx) = model.config_index.get(&config) {
                chosen = Some((idx, delay, placements));
                break;
            }
        }
        let Some((idx, delay, placements)) = chosen else {
            return Err(WitnessError::NoRepresentableLoadBound { machine });
        };
        machine_configs[machine] = Some(idx);
        delays[machine] = delay;
        z[idx] += Rat::one();
        for (job, k) in placements {
            let col = model
                .x_index
                .get(&(job, k, idx))
                .ok_or(WitnessError::MissingColumn { job, k })?;
            x[col - model.z_count()] += Rat::one();
        }
    }

    let mut values = z.clone();
    values.extend(x.iter().cloned());
    let variable_objective: Rat = model
        .objective
        .iter()
        .zip(&values)
        .map(|(c, v)| c * v)
        .sum();
    let solution = MilpSolution {
        objective: &variable_objective + &model.objective_const,
        variable_objective,
        z,
        x,
        proven_optimal: false,
        nodes: 0,
        mode: LpMode::ExactRational,
    };
    check_solution(model, &solution, None).map_err(WitnessError::RowViolated)?;
    Ok(Witness { solution, machine_configs, delays })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{candidate_pairs, enumerate_configurations, EnumLimits, LoadBound};
    use crate::guess::{guess_for_schedule, Guess};
    use crate::model::{evaluate, Instance, Job, Machine, Schedule, Supply};
    use crate::normalize::{pull_makespan_to_fast, stretch_to_window};
    use crate::oracle::{exact_optimum, OracleLimits};
    use crate::rational::{int, pow_phi, rat};
    use crate::rounding::round_instance;

    fn desk(eps: Rat) -> SchemeParams {
        SchemeParams::new(eps, rat(1, 2), int(2), 2)
    }

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
            params: desk(int(1)),
        }
    }

    /// A hand-built model with a single counter column and one speed row
    /// z = m(s) = 2.
    #[test]
    fn single_counter_model_solves_directly() {
        let params = desk(int(1));
        let guess = Guess::new(&params, 2, 0);
        let w = int(2); // w_exp 1
        let obj_coef = (Rat::one() - &params.psi) * pow_phi(&w, &params.phi);
        let config = Configuration {
            s_exp: 0,
            load: LoadBound::Exp(1),
            windows: Vec::new(),
        };
        let model = MilpModel {
            params: params.clone(),
            configs: vec![config.clone()],
            geometries: vec![None],
            z_integral: vec![true],
            x_cols: Vec::new(),
            x_index: BTreeMap::new(),
            config_index: [(config, 0)].into_iter().collect(),
            rows: vec![LpRow {
                coeffs: vec![(0, Rat::one())],
                relation: Relation::Eq,
                rhs: int(2),
            }],
            row_kinds: vec![RowKind::SpeedCount { s_exp: 0 }],
            objective: vec![obj_coef.clone()],
            objective_const: &params.psi * guess.c_opt(&params),
            bounds: vec![(Rat::zero(), Some(int(2)))],
            trivially_infeasible: None,
            guess,
        };
        let solution = solve(&model, &MilpOptions::default()).unwrap().unwrap();
        assert_eq!(solution.z, vec![int(2)]);
        // objective = 2 w^phi (1-psi) + psi C_opt = 2*4*(1/2) + (1/2)*4 = 6.
        assert_eq!(solution.objective, int(6));
        assert_eq!(solution.nodes, 1, "integral relaxation terminates at the root");
    }

    #[test]
    fn huge_everywhere_is_trivially_infeasible() {
        // One giant job, but the only candidate pair is capped by a tiny
        // C_opt, so the job is huge for every configuration.
        let instance = fixture(vec![(8, 0), (1, 0)], vec![int(1)], vec![(0, 1)]);
        let rounded = round_instance(&instance).unwrap();
        let guess = Guess::new(&rounded.base.params, 0, 0); // C_opt = 1
        let mut configs = Vec::new();
        for (s, w) in candidate_pairs(&rounded, &guess) {
            configs.extend(
                enumerate_configurations(&rounded, s, w, &EnumLimits::default()).unwrap(),
            );
        }
        let model = build_model(&rounded, &guess, &configs);
        assert!(model.trivially_infeasible.is_some());
        assert_eq!(solve(&model, &MilpOptions::default()).unwrap(), None);
    }

    #[test]
    fn branch_and_bound_matches_grid_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let params = desk(int(1));
        for case in 0..12 {
            let z_count = rng.gen_range(3..7);
            let integral: Vec<bool> = (0..z_count).map(|c| c < 3 && rng.gen_bool(0.8)).collect();
            let rows: Vec<LpRow> = (0..rng.gen_range(2..5))
                .map(|_| {
                    let coeffs: Vec<(usize, Rat)> = (0..z_count)
                        .filter_map(|c| {
                            let v = rng.gen_range(-2..4);
                            (v != 0).then(|| (c, int(v)))
                        })
                        .collect();
                    LpRow {
                        coeffs,
                        relation: if rng.gen_bool(0.7) { Relation::Le } else { Relation::Ge },
                        rhs: int(rng.gen_range(0..8)),
                    }
                })
                .collect();
            let objective: Vec<Rat> = (0..z_count).map(|_| int(rng.gen_range(0..6))).collect();
            let bounds: Vec<(Rat, Option<Rat>)> =
                (0..z_count).map(|_| (Rat::zero(), Some(int(3)))).collect();
            let configs: Vec<Configuration> =
                (0..z_count).map(|c| Configuration::zero(c as i64)).collect();
            let model = MilpModel {
                guess: Guess::new(&params, 0, 0),
                params: params.clone(),
                geometries: vec![None; z_count],
                config_index: configs
                    .iter()
                    .enumerate()
                    .map(|(i, c)| (c.clone(), i))
                    .collect(),
                configs,
                z_integral: integral.clone(),
                x_cols: Vec::new(),
                x_index: BTreeMap::new(),
                row_kinds: vec![RowKind::GuessCover; rows.len()],
                rows: rows.clone(),
                objective: objective.clone(),
                objective_const: Rat::zero(),
                bounds: bounds.clone(),
                trivially_infeasible: None,
            };
            let ours = solve(&model, &MilpOptions::default()).unwrap();

            // Enumeration oracle: fix every integral column on a grid point
            // and solve the remaining LP exactly.
            let int_cols: Vec<usize> =
                (0..z_count).filter(|&c| integral[c]).collect();
            let mut best: Option<Rat> = None;
            let mut grid = vec![0i64; int_cols.len()];
            loop {
                let mut b = bounds.clone();
                for (pos, &col) in int_cols.iter().enumerate() {
                    b[col] = (int(grid[pos]), Some(int(grid[pos])));
                }
                let lp = crate::lp::LinearProgram {
                    objective: objective.clone(),
                    bounds: b,
                    rows: rows.clone(),
                };
                if let crate::lp::LpOutcome::Optimal(sol) = crate::lp::solve_exact(&lp) {
                    if best.as_ref().map_or(true, |v| sol.objective < *v) {
                        best = Some(sol.objective);
                    }
                }
                let mut pos = grid.len();
                loop {
                    if pos == 0 {
                        break;
                    }
                    pos -= 1;
                    if grid[pos] < 3 {
                        grid[pos] += 1;
                        break;
                    }
                    grid[pos] = 0;
                }
                if grid.iter().all(|&g| g == 0) {
                    break;
                }
            }
            match (ours, best) {
                (Some(sol), Some(best)) => {
                    assert_eq!(sol.objective, best, "case {case}: optimum mismatch")
                }
                (None, None) => {}
                (a, b) => panic!("case {case}: {a:?} vs {b:?}"),
            }
        }
    }

    /// Witness admissibility on a tiny fixture: normalize the oracle's
    /// optimum, read off the witness, check every row, and confirm the MILP
    /// optimum is within (1+eps)^phi of the normalized schedule's cost.
    #[test]
    fn witness_from_normalized_oracle_schedule() {
        let instance = fixture(
            vec![(4, 1), (2, 0), (2, 1)],
            vec![int(1), int(1)],
            vec![(0, 2)],
        );
        let rounded = round_instance(&instance).unwrap();
        let rounded_inst = rounded.as_instance();
        let (opt_schedule, _) = exact_optimum(&rounded_inst, &OracleLimits::default()).unwrap();
        let pulled = pull_makespan_to_fast(&rounded_inst, &opt_schedule).unwrap();
        let normalized = stretch_to_window(&rounded_inst, &pulled).unwrap();
        let normalized_cost = evaluate(&rounded_inst, &normalized).unwrap().combined;

        let guess = guess_for_schedule(&rounded, &normalized).unwrap();
        let mut configs = Vec::new();
        for (s, w) in candidate_pairs(&rounded, &guess) {
            configs.extend(
                enumerate_configurations(&rounded, s, w, &EnumLimits::default()).unwrap(),
            );
        }
        let model = build_model(&rounded, &guess, &configs);
        let witness = construct_witness(&model, &rounded, &normalized).unwrap();
        // construct_witness row-checks internally; sanity-check again.
        check_solution(&model, &witness.solution, None).unwrap();
        assert!(
            witness.solution.z.iter().all(|z| z.is_integer()),
            "witness counters must be integral"
        );

        let bound = pow_phi(&rounded_inst.params.base(), &rounded_inst.params.phi)
            * &normalized_cost;
        assert!(witness.solution.objective <= bound);

        let solved = solve(&model, &MilpOptions::default()).unwrap().unwrap();
        assert!(solved.objective <= witness.solution.objective);
        assert!(solved.objective <= bound);
    }

    #[test]
    fn identical_machines_share_one_configuration() {
        // Two identical machines with identical per-machine schedules merge
        // into a single configuration with counter 2.
        let instance = fixture(
            vec![(2, 0), (2, 0)],
            vec![int(1), int(1)],
            vec![(0, 1)],
        );
        let rounded = round_instance(&instance).unwrap();
        let schedule = Schedule {
            assignments: vec![
                crate::model::MachineSchedule {
                    machine: 0,
                    jobs: vec![crate::model::JobStart { job: 0, start: int(2) }],
                },
                crate::model::MachineSchedule {
                    machine: 1,
                    jobs: vec![crate::model::JobStart { job: 1, start: int(2) }],
                },
            ],
        };
        let guess = guess_for_schedule(&rounded, &schedule).unwrap();
        let mut configs = Vec::new();
        for (s, w) in candidate_pairs(&rounded, &guess) {
            configs.extend(
                enumerate_configurations(&rounded, s, w, &EnumLimits::default()).unwrap(),
            );
        }
        let model = build_model(&rounded, &guess, &configs);
        let witness = construct_witness(&model, &rounded, &schedule).unwrap();
        let nonzero: Vec<(usize, &Rat)> = witness
            .solution
            .z
            .iter()
            .enumerate()
            .filter(|(_, z)| !z.is_zero())
            .collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(*nonzero[0].1, int(2));
    }

    #[test]
    fn lp_dump_mentions_every_section() {
        let instance = fixture(vec![(4, 1)], vec![int(1)], vec![(0, 1)]);
        let rounded = round_instance(&instance).unwrap();
        let guess = Guess::new(&rounded.base.params, 2, 0);
        let mut configs = Vec::new();
        for (s, w) in candidate_pairs(&rounded, &guess) {
            configs.extend(
                enumerate_configurations(&rounded, s, w, &EnumLimits::default()).unwrap(),
            );
        }
        let model = build_model(&rounded, &guess, &configs);
        let text = model.to_lp_format();
        for section in ["Minimize", "Subject To", "Bounds", "End"] {
            assert!(text.contains(section), "missing {section}");
        }
    }
}
