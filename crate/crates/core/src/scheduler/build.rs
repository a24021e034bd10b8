//! MILP assembly.
//!
//! Variable census per period `t` (names use 1-based unit and period indices):
//!
//! | family            | variables                                   | count                    |
//! |-------------------|---------------------------------------------|--------------------------|
//! | thermal unit `i`  | `th_p`, `th_r`, cost segments `th_s`        | `2 + K_i`                |
//! | CHP unit `i`      | `chp_pe`, `chp_ph`, `chp_r`, segments `chp_s` | `3 + K_i + 2·X_i`      |
//! | heat storage      | `hst_p` (release > 0), `hst_c`              | `2` per tank             |
//! | battery           | `bess_ch`, `bess_dc`, `bess_s`, `bess_r`, `bess_u` | `5`               |
//! | electric boiler   | `boiler`                                    | `1`                      |
//! | system            | `res_use`, `heat`, `tin`, `rsum`            | `4`                      |
//! | chance (binary)   | `cc_{t}_z_{m}`, `m = 0..=N_t`               | `N_t + 1`                |
//!
//! `K_i` is the number of cost segments (1 when the cost is linear) and
//! `X_i = ⌈c_v·P^c_max / Δ_i⌉` extra segments on each side of a CHP cost grid
//! whose unit carries a tank, `Δ_i` being the base segment width. The
//! extension keeps the base breakpoints, so removing the tank only removes
//! options. `N_t + 1` is the length of the period's joint renewable sequence.
//!
//! Each quadratic cost `f` over a cost argument `x ∈ [x_0, x_K]` is written as
//! `x = x_0 + Σ δ_j`, `δ_j ∈ [0, Δ]`, with objective `f(x_0) + Σ s_j·δ_j`
//! where `s_j` are the secant slopes. Convexity makes the cheaper segments fill
//! first, so the optimum equals the secant interpolation of `f`.
//!
//! The indoor temperature after the last period is left free.

use crate::building::DemandCoefficients;
use crate::devices::{ChpUnit, QuadCost};
use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarId};
use crate::probseq::{convolve, discretize_pv, discretize_wind, quantile_reserve, ProbSeq};

use super::chance::{chance_constraint_rows, safe_big_l, BigL};
use super::pwl::{extended_grid, secants, Segment};
use super::scenario::{BigLRule, ChanceFormulation, Scenario};

/// Renewable outlook for one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodRenewables {
    /// Joint wind + PV output sequence.
    pub seq: ProbSeq,
    /// Expected joint output `E_t`.
    pub expected: f64,
    /// Reserve the model must schedule: the tail quantile at the scenario's
    /// confidence level, or the deterministic share of net load.
    pub required_reserve: f64,
}

/// Discretizes and combines each period's wind and PV models.
pub fn renewables(s: &Scenario) -> Result<Vec<PeriodRenewables>> {
    let q = s.q_step;
    (0..s.horizon)
        .map(|t| {
            let wind = s.wind[t].as_ref().map(|w| discretize_wind(w, q)).transpose()?;
            let pv = s.pv[t].as_ref().map(|p| discretize_pv(p, q)).transpose()?;
            let seq = match (wind, pv) {
                (Some(w), Some(p)) => convolve(&w, &p)?,
                (Some(x), None) | (None, Some(x)) => x,
                (None, None) => ProbSeq::zero(q)?,
            };
            let expected = seq.expectation();
            let required_reserve = if s.uncertainty {
                quantile_reserve(&seq, s.alpha, expected)?
            } else {
                s.deterministic_reserve_fraction * (s.elec_load[t] - expected).max(0.0)
            };
            Ok(PeriodRenewables {
                seq,
                expected,
                required_reserve,
            })
        })
        .collect()
}

/// Breakpoints of a unit's cost argument.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    /// Cost at the first breakpoint.
    pub base: f64,
    pub breakpoints: Vec<f64>,
    pub segments: Vec<Segment>,
}

impl CostGrid {
    fn new(cost: &QuadCost, lo: f64, hi: f64, k: usize, extend_by: f64) -> Self {
        let breakpoints = if hi <= lo {
            vec![lo - extend_by, hi + extend_by]
        } else if cost.a == 0.0 {
            if extend_by > 0.0 {
                vec![lo - extend_by, hi + extend_by]
            } else {
                vec![lo, hi]
            }
        } else {
            let step = (hi - lo) / k as f64;
            let extra = if extend_by > 0.0 { (extend_by / step - 1e-9).ceil() as usize } else { 0 };
            extended_grid(lo, hi, k, extra)
        };
        let breakpoints = if breakpoints[0] == breakpoints[breakpoints.len() - 1] {
            vec![breakpoints[0]]
        } else {
            breakpoints
        };
        let segments = secants(cost.a, cost.b, cost.c, &breakpoints);
        CostGrid {
            base: cost.eval(breakpoints[0]),
            breakpoints,
            segments,
        }
    }

    pub fn lo(&self) -> f64 {
        self.breakpoints[0]
    }

    pub fn hi(&self) -> f64 {
        self.breakpoints[self.breakpoints.len() - 1]
    }

    /// Largest gap between the surrogate and the parabola.
    pub fn gap_bound(&self, a: f64) -> f64 {
        self.breakpoints.windows(2).map(|w| a * (w[1] - w[0]).powi(2) / 4.0).fold(0.0, f64::max)
    }
}

pub fn thermal_grid(s: &Scenario, i: usize) -> CostGrid {
    let u = &s.thermal_units[i];
    CostGrid::new(&u.cost, u.p_min, u.p_max, s.pwl_segments, 0.0)
}

/// Grid over `P_e + c_v·(P_h + P_c)`.
pub fn chp_grid(s: &Scenario, i: usize) -> CostGrid {
    let u: &ChpUnit = &s.chp_units[i];
    let extend = u.hst.map_or(0.0, |h| u.c_v * h.p_c_max);
    CostGrid::new(&u.cost, u.pe_min, u.pe_max + u.c_v * u.ph_max, s.pwl_segments, extend)
}

/// Number of model variables the census predicts for `s`.
pub fn variable_census(s: &Scenario, ren: &[PeriodRenewables]) -> usize {
    let mut per_period = 4;
    for i in 0..s.thermal_units.len() {
        per_period += 2 + thermal_grid(s, i).segments.len();
    }
    for (i, u) in s.chp_units.iter().enumerate() {
        per_period += 3 + chp_grid(s, i).segments.len();
        if u.hst.is_some() {
            per_period += 2;
        }
    }
    if s.bess.is_some() {
        per_period += 5;
    }
    if s.eb.is_some() {
        per_period += 1;
    }
    let binary_levels: usize = if s.uncertainty && s.chance_formulation == ChanceFormulation::Binary {
        ren.iter().map(|r| r.seq.probs().len()).sum()
    } else {
        0
    };
    per_period * s.horizon + binary_levels
}

fn name(prefix: &str, parts: &[usize]) -> String {
    let mut out = prefix.to_string();
    for p in parts {
        out.push('_');
        out.push_str(&(p + 1).to_string());
    }
    out
}

/// Adds `x = x_0 + Σ δ_j` segment variables and returns the δ ids.
fn add_segments(model: &mut MilpModel, prefix: &str, grid: &CostGrid, dt: f64) -> Vec<VarId> {
    model.obj_constant += grid.base * dt;
    grid.segments
        .iter()
        .zip(grid.breakpoints.windows(2))
        .enumerate()
        .map(|(j, (seg, w))| model.add_continuous(format!("{prefix}_{}", j + 1), 0.0, w[1] - w[0], seg.slope * dt))
        .collect()
}

/// Assembles the scheduling MILP for a validated scenario.
pub fn build_model(s: &Scenario) -> Result<MilpModel> {
    let ren = renewables(s)?;
    build_with(s, &ren)
}

pub fn build_with(s: &Scenario, ren: &[PeriodRenewables]) -> Result<MilpModel> {
    if ren.len() != s.horizon {
        return Err(Error::Dimension(format!("{} renewable periods for horizon {}", ren.len(), s.horizon)));
    }
    let mut model = MilpModel::new();
    let dt = s.dt;
    let t_count = s.horizon;
    let coef: DemandCoefficients = s.building.params.demand_coefficients(dt);
    let band = s.building.comfort;
    let setpoint = s.building.setpoint;
    let cap = s.reserve_capability();

    let th_grids: Vec<CostGrid> = (0..s.thermal_units.len()).map(|i| thermal_grid(s, i)).collect();
    let chp_grids: Vec<CostGrid> = (0..s.chp_units.len()).map(|i| chp_grid(s, i)).collect();

    let mut th_prev: Vec<Option<VarId>> = vec![None; s.thermal_units.len()];
    let mut chp_prev: Vec<Option<VarId>> = vec![None; s.chp_units.len()];
    let mut hst_prev: Vec<Option<VarId>> = vec![None; s.chp_units.len()];
    let mut soc_prev: Option<VarId> = None;
    let mut tin_prev: Option<VarId> = None;

    for t in 0..t_count {
        let last = t + 1 == t_count;
        let mut elec: Vec<(VarId, f64)> = Vec::new();
        let mut heat_terms: Vec<(VarId, f64)> = Vec::new();
        let mut reserve_terms: Vec<(VarId, f64)> = Vec::new();

        for (i, u) in s.thermal_units.iter().enumerate() {
            let p = model.add_continuous(name("th_p", &[i, t]), u.p_min, u.p_max, 0.0);
            let r = model.add_continuous(name("th_r", &[i, t]), 0.0, u.p_max - u.p_min, u.reserve_cost * dt);
            let deltas = add_segments(&mut model, &name("th_s", &[i, t]), &th_grids[i], dt);
            let mut def = vec![(p, 1.0)];
            def.extend(deltas.iter().map(|&d| (d, -1.0)));
            model.add_constraint(name("th_def", &[i, t]), def, Sense::Eq, th_grids[i].lo());
            model.add_constraint(name("th_cap", &[i, t]), vec![(p, 1.0), (r, 1.0)], Sense::Le, u.p_max);
            if let Some(prev) = th_prev[i] {
                model.add_constraint(name("th_up", &[i, t]), vec![(p, 1.0), (prev, -1.0)], Sense::Le, u.ramp_up);
                model.add_constraint(name("th_dn", &[i, t]), vec![(p, 1.0), (prev, -1.0)], Sense::Ge, -u.ramp_down);
            }
            th_prev[i] = Some(p);
            elec.push((p, 1.0));
            reserve_terms.push((r, 1.0));
        }

        for (i, u) in s.chp_units.iter().enumerate() {
            let pe = model.add_continuous(name("chp_pe", &[i, t]), u.pe_min, u.pe_max, 0.0);
            let ph = model.add_continuous(name("chp_ph", &[i, t]), 0.0, u.ph_max, 0.0);
            let r = model.add_continuous(name("chp_r", &[i, t]), 0.0, u.pe_max - u.pe_min, u.reserve_cost * dt);
            let deltas = add_segments(&mut model, &name("chp_s", &[i, t]), &chp_grids[i], dt);
            let mut def = vec![(pe, 1.0), (ph, u.c_v)];
            if let Some(h) = &u.hst {
                let pc = model.add_continuous(name("hst_p", &[i, t]), -h.p_c_max, h.p_c_max, 0.0);
                // C_0 = C_T = C_min
                let (clo, chi) = if last { (h.c_min, h.c_min) } else { (h.c_min, h.c_max) };
                let c = model.add_continuous(name("hst_c", &[i, t]), clo, chi, 0.0);
                match hst_prev[i] {
                    Some(prev) => model.add_constraint(name("hst_dyn", &[i, t]), vec![(c, 1.0), (prev, -1.0), (pc, dt)], Sense::Eq, 0.0),
                    None => model.add_constraint(name("hst_dyn", &[i, t]), vec![(c, 1.0), (pc, dt)], Sense::Eq, h.c_min),
                };
                hst_prev[i] = Some(c);
                def.push((pc, u.c_v));
                heat_terms.push((pc, 1.0));
            }
            def.extend(deltas.iter().map(|&d| (d, -1.0)));
            model.add_constraint(name("chp_def", &[i, t]), def, Sense::Eq, chp_grids[i].lo());
            model.add_constraint(name("chp_cap", &[i, t]), vec![(pe, 1.0), (r, 1.0)], Sense::Le, u.pe_max);
            if let Some(prev) = chp_prev[i] {
                model.add_constraint(name("chp_up", &[i, t]), vec![(pe, 1.0), (prev, -1.0)], Sense::Le, u.ramp_up);
                model.add_constraint(name("chp_dn", &[i, t]), vec![(pe, 1.0), (prev, -1.0)], Sense::Ge, -u.ramp_down);
            }
            if let Some(bp) = &u.back_pressure {
                model.add_constraint(name("chp_bp", &[i, t]), vec![(pe, 1.0), (ph, -u.c_m)], Sense::Ge, -bp.k);
            }
            chp_prev[i] = Some(pe);
            elec.push((pe, 1.0));
            heat_terms.push((ph, 1.0));
            reserve_terms.push((r, 1.0));
        }

        if let Some(b) = &s.bess {
            let ch = model.add_continuous(name("bess_ch", &[t]), 0.0, b.p_max, -b.cost_ch * dt);
            let dc = model.add_continuous(name("bess_dc", &[t]), 0.0, b.p_max, b.cost_dc * dt);
            let (slo, shi) = if last { (b.s_min, b.s_min) } else { (b.s_min, b.s_max) };
            let soc = model.add_continuous(name("bess_s", &[t]), slo, shi, 0.0);
            let r = model.add_continuous(name("bess_r", &[t]), 0.0, b.p_max, b.reserve_cost * dt);
            let u = model.add_binary(name("bess_u", &[t]), 0.0);
            let mut dyn_terms = vec![(soc, 1.0), (ch, -b.eff_ch * dt), (dc, dt / b.eff_dc)];
            let rhs = match soc_prev {
                Some(prev) => {
                    dyn_terms.push((prev, -1.0));
                    0.0
                }
                None => b.s_min,
            };
            model.add_constraint(name("bess_dyn", &[t]), dyn_terms, Sense::Eq, rhs);
            model.add_constraint(name("bess_rs", &[t]), vec![(r, 1.0), (soc, -b.eff_dc / dt)], Sense::Le, -b.eff_dc * b.s_min / dt);
            model.add_constraint(name("bess_rp", &[t]), vec![(r, 1.0), (dc, 1.0)], Sense::Le, b.p_max);
            model.add_constraint(name("bess_xc", &[t]), vec![(ch, 1.0), (u, -b.p_max)], Sense::Le, 0.0);
            model.add_constraint(name("bess_xd", &[t]), vec![(dc, 1.0), (u, b.p_max)], Sense::Le, b.p_max);
            soc_prev = Some(soc);
            elec.push((dc, 1.0));
            elec.push((ch, -1.0));
            reserve_terms.push((r, 1.0));
        }

        if let Some(e) = &s.eb {
            let p = model.add_continuous(name("boiler", &[t]), 0.0, e.p_eb_max, 0.0);
            elec.push((p, -1.0));
            heat_terms.push((p, e.eff));
        }

        let res_use = model.add_continuous(name("res_use", &[t]), 0.0, ren[t].expected, 0.0);
        elec.push((res_use, 1.0));
        model.add_constraint(name("bal_el", &[t]), elec, Sense::Eq, s.elec_load[t]);

        let heat = model.add_continuous(name("heat", &[t]), 0.0, f64::INFINITY, 0.0);
        heat_terms.push((heat, -1.0));
        model.add_constraint(name("bal_heat", &[t]), heat_terms, Sense::Eq, 0.0);

        let (tlo, thi) = if s.inertia { (band.t_b, band.t_c) } else { (setpoint, setpoint) };
        let tin = model.add_continuous(name("tin", &[t]), tlo, thi, 0.0);
        let mut bld = vec![(heat, 1.0), (tin, -coef.now)];
        let mut rhs = -coef.outdoor * s.t_outdoor[t];
        match tin_prev {
            Some(prev) => bld.push((prev, coef.prev)),
            None => rhs -= coef.prev * setpoint,
        }
        model.add_constraint(name("bld", &[t]), bld, Sense::Eq, rhs);
        tin_prev = Some(tin);

        let rsum = model.add_continuous(name("rsum", &[t]), 0.0, cap, 0.0);
        let mut def = vec![(rsum, 1.0)];
        def.extend(reserve_terms.iter().map(|&(v, _)| (v, -1.0)));
        model.add_constraint(name("rs_def", &[t]), def, Sense::Eq, 0.0);

        if s.uncertainty && s.chance_formulation == ChanceFormulation::Binary {
            let e = ren[t].expected;
            let big_l = match s.big_l {
                BigLRule::Uniform => BigL::Uniform(safe_big_l(&ren[t].seq, e, cap)),
                BigLRule::Tight => BigL::Tight { max_reserve: cap },
            };
            chance_constraint_rows(&mut model, &format!("cc_{}", t + 1), rsum, &ren[t].seq, e, s.alpha, big_l)?;
        } else {
            model.add_constraint(name("rs_min", &[t]), vec![(rsum, 1.0)], Sense::Ge, ren[t].required_reserve);
        }
    }
    Ok(model)
}
