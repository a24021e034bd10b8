use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::milp::{solve, MilpModel, MipSolution, SolveOptions};

use super::build::{build_with, chp_grid, renewables, thermal_grid, PeriodRenewables};
use super::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalSchedule {
    pub name: String,
    pub power: Vec<f64>,
    pub reserve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChpSchedule {
    pub name: String,
    pub power_e: Vec<f64>,
    /// Heat from the unit itself.
    pub power_h: Vec<f64>,
    /// Tank release (> 0) or storage (< 0); absent without a tank.
    pub hst_power: Option<Vec<f64>>,
    /// Tank content at the end of each period.
    pub hst_level: Option<Vec<f64>>,
    pub reserve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BessSchedule {
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    /// Stored energy at the end of each period.
    pub soc: Vec<f64>,
    pub reserve: Vec<f64>,
}

/// Cost decomposition in $ over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    /// Thermal fuel and reserve cost.
    pub c1: f64,
    /// CHP fuel and reserve cost.
    pub c2: f64,
    /// Battery discharge minus charge cost plus reserve cost.
    pub c3: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub horizon: usize,
    pub dt: f64,
    pub thermal: Vec<ThermalSchedule>,
    pub chp: Vec<ChpSchedule>,
    pub bess: Option<BessSchedule>,
    /// Electric input of the boiler.
    pub eb_power: Option<Vec<f64>>,
    /// Expected joint renewable output `E_t`.
    pub renewable_expected: Vec<f64>,
    /// Renewable power consumed `P_c`.
    pub renewable_used: Vec<f64>,
    /// `E_t − P_c`.
    pub curtailment: Vec<f64>,
    pub heat_load: Vec<f64>,
    pub indoor_temp: Vec<f64>,
    pub total_reserve: Vec<f64>,
    /// Reserve the chance constraint (or the deterministic rule) demands.
    pub required_reserve: Vec<f64>,
    /// Objective of the linearized model.
    pub objective: f64,
    /// Costs recomputed from the quadratic cost curves.
    pub costs: CostBreakdown,
    /// Upper bound on `objective − costs.total` from the cost linearization.
    pub pwl_gap_bound: f64,
}

impl Schedule {
    pub fn total_curtailment(&self) -> f64 {
        self.curtailment.iter().sum()
    }
}

/// Costs of a dispatch evaluated on the true quadratic curves.
pub fn true_costs(s: &Scenario, sched: &Schedule) -> CostBreakdown {
    let dt = s.dt;
    let mut c1 = 0.0;
    for (u, th) in s.thermal_units.iter().zip(&sched.thermal) {
        for t in 0..sched.horizon {
            c1 += (u.cost.eval(th.power[t]) + u.reserve_cost * th.reserve[t]) * dt;
        }
    }
    let mut c2 = 0.0;
    for (u, ch) in s.chp_units.iter().zip(&sched.chp) {
        for t in 0..sched.horizon {
            let pc = ch.hst_power.as_ref().map_or(0.0, |v| v[t]);
            let x = ch.power_e[t] + u.c_v * (ch.power_h[t] + pc);
            c2 += (u.cost.eval(x) + u.reserve_cost * ch.reserve[t]) * dt;
        }
    }
    let mut c3 = 0.0;
    if let (Some(b), Some(bs)) = (&s.bess, &sched.bess) {
        for t in 0..sched.horizon {
            c3 += (b.cost_dc * bs.discharge[t] - b.cost_ch * bs.charge[t] + b.reserve_cost * bs.reserve[t]) * dt;
        }
    }
    CostBreakdown {
        c1,
        c2,
        c3,
        total: c1 + c2 + c3,
    }
}

/// Largest amount by which the linearized objective can exceed the true cost.
pub fn pwl_gap_bound(s: &Scenario) -> f64 {
    let th: f64 = (0..s.thermal_units.len()).map(|i| thermal_grid(s, i).gap_bound(s.thermal_units[i].cost.a)).sum();
    let chp: f64 = (0..s.chp_units.len()).map(|i| chp_grid(s, i).gap_bound(s.chp_units[i].cost.a)).sum();
    (th + chp) * s.dt * s.horizon as f64
}

struct Lookup<'a> {
    model: &'a MilpModel,
    values: &'a [f64],
}

impl Lookup<'_> {
    fn get(&self, name: &str) -> Result<f64> {
        self.model
            .var_id(name)
            .map(|j| self.values[j])
            .ok_or_else(|| Error::InvalidModel(format!("variable {name} is missing from the model")))
    }

    fn series(&self, prefix: &str, unit: Option<usize>, horizon: usize) -> Result<Vec<f64>> {
        (1..=horizon)
            .map(|t| match unit {
                Some(i) => self.get(&format!("{prefix}_{}_{t}", i + 1)),
                None => self.get(&format!("{prefix}_{t}")),
            })
            .collect()
    }
}

/// Maps a solution of [`super::build_model`] back to named quantities.
pub fn extract_schedule(s: &Scenario, ren: &[PeriodRenewables], model: &MilpModel, values: &[f64]) -> Result<Schedule> {
    if values.len() != model.num_vars() {
        return Err(Error::Dimension(format!("{} values for {} variables", values.len(), model.num_vars())));
    }
    if ren.len() != s.horizon {
        return Err(Error::Dimension(format!("{} renewable periods for horizon {}", ren.len(), s.horizon)));
    }
    let h = s.horizon;
    let lk = Lookup { model, values };
    let thermal = s
        .thermal_units
        .iter()
        .enumerate()
        .map(|(i, u)| {
            Ok(ThermalSchedule {
                name: u.name.clone(),
                power: lk.series("th_p", Some(i), h)?,
                reserve: lk.series("th_r", Some(i), h)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let chp = s
        .chp_units
        .iter()
        .enumerate()
        .map(|(i, u)| {
            let (hst_power, hst_level) = if u.hst.is_some() {
                (Some(lk.series("hst_p", Some(i), h)?), Some(lk.series("hst_c", Some(i), h)?))
            } else {
                (None, None)
            };
            Ok(ChpSchedule {
                name: u.name.clone(),
                power_e: lk.series("chp_pe", Some(i), h)?,
                power_h: lk.series("chp_ph", Some(i), h)?,
                hst_power,
                hst_level,
                reserve: lk.series("chp_r", Some(i), h)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let bess = match s.bess {
        Some(_) => Some(BessSchedule {
            charge: lk.series("bess_ch", None, h)?,
            discharge: lk.series("bess_dc", None, h)?,
            soc: lk.series("bess_s", None, h)?,
            reserve: lk.series("bess_r", None, h)?,
        }),
        None => None,
    };
    let eb_power = match s.eb {
        Some(_) => Some(lk.series("boiler", None, h)?),
        None => None,
    };
    let renewable_expected: Vec<f64> = ren.iter().map(|r| r.expected).collect();
    let renewable_used = lk.series("res_use", None, h)?;
    let curtailment = renewable_expected.iter().zip(&renewable_used).map(|(e, u)| (e - u).max(0.0)).collect();
    let mut sched = Schedule {
        horizon: h,
        dt: s.dt,
        thermal,
        chp,
        bess,
        eb_power,
        renewable_expected,
        renewable_used,
        curtailment,
        heat_load: lk.series("heat", None, h)?,
        indoor_temp: lk.series("tin", None, h)?,
        total_reserve: lk.series("rsum", None, h)?,
        required_reserve: ren.iter().map(|r| r.required_reserve).collect(),
        objective: model.objective(values),
        costs: CostBreakdown {
            c1: 0.0,
            c2: 0.0,
            c3: 0.0,
            total: 0.0,
        },
        pwl_gap_bound: pwl_gap_bound(s),
    };
    sched.costs = true_costs(s, &sched);
    Ok(sched)
}

/// A solved scenario: the raw solver result and, when it holds a solution,
/// the extracted schedule.
#[derive(Debug, Clone)]
pub struct Solved {
    pub renewables: Vec<PeriodRenewables>,
    pub model: MilpModel,
    pub solution: MipSolution,
    pub schedule: Option<Schedule>,
}

/// Discretizes, builds, solves with the embedded solver and extracts.
pub fn solve_scenario(s: &Scenario, opts: &SolveOptions) -> Result<Solved> {
    let ren = renewables(s)?;
    let model = build_with(s, &ren)?;
    let solution = solve(&model, opts)?;
    let schedule = if solution.status.has_solution() {
        Some(extract_schedule(s, &ren, &model, &solution.values)?)
    } else {
        None
    };
    Ok(Solved {
        renewables: ren,
        model,
        solution,
        schedule,
    })
}
