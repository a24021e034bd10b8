//! Independent checks of a produced schedule.
//!
//! Nothing here reads the MILP. [`validate_schedule`] replays every constraint
//! family from the scenario and the schedule alone, and the sampling checks
//! draw from the continuous wind and PV laws rather than the discretized
//! sequences the model was built on.
//!
//! Sampling uses ChaCha8 (`rand_chacha`). Period `t` of a run with seed `s`
//! draws from the generator seeded with `s` on stream `t`, so results do not
//! depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::building::heating_demand;
use crate::devices::{bess_step, eb_heat_output, hst_step};
use crate::error::{invalid, Error, Result};
use crate::probseq::{bin_index, discretize_pv, discretize_wind, PvParams, WindParams};
use crate::scheduler::{renewables, Schedule, Scenario};

pub const MIN_SAMPLES: usize = 10_000;

/// Default slack granted to empirical coverage below `α`.
pub const COVERAGE_ALLOWANCE: f64 = 0.015;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResidual {
    pub family: String,
    pub max_residual: f64,
    /// 0-based period of the worst residual.
    pub worst_period: Option<usize>,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageCheck {
    pub alpha: f64,
    pub allowance: f64,
    pub samples: usize,
    /// Per-period fraction of samples whose shortfall the reserve covers.
    pub probability: Vec<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub families: Vec<FamilyResidual>,
    pub coverage: Option<CoverageCheck>,
    /// Seed of the sampling run, when one is attached.
    pub seed: Option<u64>,
    pub pass: bool,
}

impl ValidationReport {
    pub fn family(&self, name: &str) -> Option<&FamilyResidual> {
        self.families.iter().find(|f| f.family == name)
    }

    pub fn failures(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self.families.iter().filter(|f| !f.pass).map(|f| f.family.as_str()).collect();
        if self.coverage.as_ref().is_some_and(|c| !c.pass) {
            out.push("coverage");
        }
        out
    }

    /// Adds a sampling result and updates the overall verdict.
    pub fn attach_coverage(&mut self, probability: Vec<f64>, alpha: f64, allowance: f64, samples: usize, seed: u64) {
        let pass = coverage_pass(&probability, alpha, allowance);
        self.coverage = Some(CoverageCheck {
            alpha,
            allowance,
            samples,
            probability,
            pass,
        });
        self.seed = Some(seed);
        self.pass = self.families.iter().all(|f| f.pass) && pass;
    }

    /// True when every verdict follows from the recorded numbers.
    pub fn is_consistent(&self) -> bool {
        let fam_ok = self.families.iter().all(|f| f.pass == (f.max_residual <= f.tolerance));
        let cov_ok = self.coverage.as_ref().is_none_or(|c| c.pass == coverage_pass(&c.probability, c.alpha, c.allowance));
        let all = self.families.iter().all(|f| f.pass) && self.coverage.as_ref().is_none_or(|c| c.pass);
        fam_ok && cov_ok && self.pass == all
    }
}

fn coverage_pass(probability: &[f64], alpha: f64, allowance: f64) -> bool {
    probability.iter().all(|&p| p >= alpha - allowance)
}

/// Running maximum of one residual family.
struct Family {
    name: &'static str,
    worst: f64,
    at: Option<usize>,
}

impl Family {
    fn new(name: &'static str) -> Self {
        Family { name, worst: 0.0, at: None }
    }

    fn see(&mut self, t: usize, r: f64) {
        let r = if r.is_nan() { f64::INFINITY } else { r.abs() };
        if r > self.worst || self.at.is_none() {
            if r > self.worst {
                self.worst = r;
            }
            self.at = Some(t);
        }
    }

    /// Distance of `x` outside `[lo, hi]`.
    fn bound(&mut self, t: usize, x: f64, lo: f64, hi: f64) {
        self.see(t, (lo - x).max(x - hi).max(0.0));
    }

    fn finish(self, tol: f64) -> FamilyResidual {
        FamilyResidual {
            family: self.name.to_string(),
            max_residual: self.worst,
            worst_period: if self.worst > 0.0 { self.at } else { None },
            tolerance: tol,
            pass: self.worst <= tol,
        }
    }
}

fn check_len(what: &str, v: &[f64], h: usize) -> Result<()> {
    if v.len() != h {
        return Err(Error::Dimension(format!("{what} has {} periods, horizon is {h}", v.len())));
    }
    Ok(())
}

fn check_dims(s: &Scenario, sched: &Schedule) -> Result<()> {
    let h = s.horizon;
    if sched.horizon != h {
        return Err(Error::Dimension(format!("schedule horizon {} vs scenario {h}", sched.horizon)));
    }
    if sched.thermal.len() != s.thermal_units.len() || sched.chp.len() != s.chp_units.len() {
        return Err(Error::Dimension("unit counts differ between schedule and scenario".into()));
    }
    if sched.bess.is_some() != s.bess.is_some() || sched.eb_power.is_some() != s.eb.is_some() {
        return Err(Error::Dimension("storage devices differ between schedule and scenario".into()));
    }
    for th in &sched.thermal {
        check_len(&th.name, &th.power, h)?;
        check_len(&th.name, &th.reserve, h)?;
    }
    for (u, ch) in s.chp_units.iter().zip(&sched.chp) {
        check_len(&ch.name, &ch.power_e, h)?;
        check_len(&ch.name, &ch.power_h, h)?;
        check_len(&ch.name, &ch.reserve, h)?;
        match (&u.hst, &ch.hst_power, &ch.hst_level) {
            (Some(_), Some(p), Some(c)) => {
                check_len(&ch.name, p, h)?;
                check_len(&ch.name, c, h)?;
            }
            (None, None, None) => {}
            _ => return Err(Error::Dimension(format!("heat storage of {} does not match the scenario", ch.name))),
        }
    }
    if let Some(b) = &sched.bess {
        for v in [&b.charge, &b.discharge, &b.soc, &b.reserve] {
            check_len("battery", v, h)?;
        }
    }
    if let Some(e) = &sched.eb_power {
        check_len("boiler", e, h)?;
    }
    for (what, v) in [
        ("renewable_expected", &sched.renewable_expected),
        ("renewable_used", &sched.renewable_used),
        ("heat_load", &sched.heat_load),
        ("indoor_temp", &sched.indoor_temp),
        ("total_reserve", &sched.total_reserve),
    ] {
        check_len(what, v, h)?;
    }
    Ok(())
}

/// Replays every constraint family of the scheduling model on `sched`.
///
/// Residuals are absolute violations in the family's own unit (MW, MWh or °C).
pub fn validate_schedule(s: &Scenario, sched: &Schedule, tol: f64) -> Result<ValidationReport> {
    check_dims(s, sched)?;
    let h = s.horizon;
    let dt = s.dt;
    let ren = renewables(s)?;

    let mut elec = Family::new("electric_balance");
    let mut heat = Family::new("heat_balance");
    let mut bld = Family::new("building");
    let mut comfort = Family::new("comfort");
    let mut bounds = Family::new("unit_bounds");
    let mut ramps = Family::new("ramps");
    let mut chp_region = Family::new("chp_region");
    let mut caps = Family::new("reserve_caps");
    let mut req = Family::new("reserve_requirement");
    let mut storage = Family::new("storage_dynamics");
    let mut terminal = Family::new("terminal");
    let mut excl = Family::new("exclusivity");
    let mut forecast = Family::new("forecast");

    for t in 0..h {
        let mut supply = 0.0;
        let mut heat_supply = 0.0;
        let mut reserve = 0.0;

        for (u, th) in s.thermal_units.iter().zip(&sched.thermal) {
            let p = th.power[t];
            bounds.bound(t, p, u.p_min, u.p_max);
            caps.bound(t, th.reserve[t], 0.0, u.p_max - u.p_min);
            caps.bound(t, p + th.reserve[t], f64::NEG_INFINITY, u.p_max);
            if t > 0 {
                ramps.bound(t, p - th.power[t - 1], -u.ramp_down, u.ramp_up);
            }
            supply += p;
            reserve += th.reserve[t];
        }

        for (u, ch) in s.chp_units.iter().zip(&sched.chp) {
            let pe = ch.power_e[t];
            let ph = ch.power_h[t];
            bounds.bound(t, pe, u.pe_min, u.pe_max);
            bounds.bound(t, ph, 0.0, u.ph_max);
            caps.bound(t, ch.reserve[t], 0.0, u.pe_max - u.pe_min);
            caps.bound(t, pe + ch.reserve[t], f64::NEG_INFINITY, u.pe_max);
            if t > 0 {
                ramps.bound(t, pe - ch.power_e[t - 1], -u.ramp_down, u.ramp_up);
            }
            if let Some(bp) = &u.back_pressure {
                chp_region.bound(t, pe - u.c_m * ph, -bp.k, f64::INFINITY);
            }
            if let (Some(hst), Some(pc), Some(level)) = (&u.hst, &ch.hst_power, &ch.hst_level) {
                bounds.bound(t, pc[t], -hst.p_c_max, hst.p_c_max);
                bounds.bound(t, level[t], hst.c_min, hst.c_max);
                let prev = if t == 0 { hst.c_min } else { level[t - 1] };
                storage.see(t, hst_step(hst, prev, pc[t], dt) - level[t]);
                if t + 1 == h {
                    terminal.see(t, level[t] - hst.c_min);
                }
                heat_supply += pc[t];
            }
            supply += pe;
            heat_supply += ph;
            reserve += ch.reserve[t];
        }

        if let (Some(b), Some(bs)) = (&s.bess, &sched.bess) {
            let (ch, dc, soc, r) = (bs.charge[t], bs.discharge[t], bs.soc[t], bs.reserve[t]);
            bounds.bound(t, ch, 0.0, b.p_max);
            bounds.bound(t, dc, 0.0, b.p_max);
            bounds.bound(t, soc, b.s_min, b.s_max);
            excl.see(t, ch.min(dc).max(0.0));
            caps.bound(t, r, 0.0, b.p_max - dc);
            caps.bound(t, r, f64::NEG_INFINITY, b.eff_dc * (soc - b.s_min) / dt);
            let prev = if t == 0 { b.s_min } else { bs.soc[t - 1] };
            storage.see(t, bess_step(b, prev, ch, dc, dt) - soc);
            if t + 1 == h {
                terminal.see(t, soc - b.s_min);
            }
            supply += dc - ch;
            reserve += r;
        }

        if let (Some(e), Some(p)) = (&s.eb, &sched.eb_power) {
            bounds.bound(t, p[t], 0.0, e.p_eb_max);
            supply -= p[t];
            heat_supply += eb_heat_output(e, p[t].clamp(0.0, e.p_eb_max))?;
        }

        let expected = ren[t].expected;
        forecast.see(t, sched.renewable_expected[t] - expected);
        bounds.bound(t, sched.renewable_used[t], 0.0, expected);
        supply += sched.renewable_used[t];
        elec.see(t, supply - s.elec_load[t]);

        bounds.bound(t, sched.heat_load[t], 0.0, f64::INFINITY);
        heat.see(t, heat_supply - sched.heat_load[t]);

        let tin = sched.indoor_temp[t];
        let tin_prev = if t == 0 { s.building.setpoint } else { sched.indoor_temp[t - 1] };
        bld.see(t, heating_demand(&s.building.params, tin, tin_prev, s.t_outdoor[t], dt) - sched.heat_load[t]);
        if s.inertia {
            comfort.bound(t, tin, s.building.comfort.t_b, s.building.comfort.t_c);
        } else {
            comfort.see(t, tin - s.building.setpoint);
        }

        req.see(t, sched.total_reserve[t] - reserve);
        req.bound(t, sched.total_reserve[t], ren[t].required_reserve, f64::INFINITY);
    }

    let families: Vec<FamilyResidual> = [
        elec, heat, bld, comfort, bounds, ramps, chp_region, caps, req, storage, terminal, excl, forecast,
    ]
    .into_iter()
    .map(|f| f.finish(tol))
    .collect();
    let pass = families.iter().all(|f| f.pass);
    Ok(ValidationReport {
        families,
        coverage: None,
        seed: None,
        pass,
    })
}

fn period_rng(seed: u64, period: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(period as u64);
    rng
}

/// One draw of joint renewable output for period `t`.
fn sample_output(s: &Scenario, t: usize, rng: &mut ChaCha8Rng) -> f64 {
    let mut out = 0.0;
    if let Some(w) = &s.wind[t] {
        out += w.power_from_speed(w.speed_quantile(rng.random::<f64>()));
    }
    if let Some(p) = &s.pv[t] {
        out += p.quantile(rng.random::<f64>());
    }
    out
}

/// Fraction of samples per period in which `reserve[t]` covers `expected[t] − output`.
pub fn empirical_coverage(s: &Scenario, expected: &[f64], reserve: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    if n < MIN_SAMPLES {
        return Err(invalid(format!("at least {MIN_SAMPLES} samples are needed, got {n}")));
    }
    check_len("expected output", expected, s.horizon)?;
    check_len("reserve", reserve, s.horizon)?;
    Ok((0..s.horizon)
        .into_par_iter()
        .map(|t| {
            let mut rng = period_rng(seed, t);
            let covered = (0..n)
                .filter(|_| reserve[t] + 1e-9 >= expected[t] - sample_output(s, t, &mut rng))
                .count();
            covered as f64 / n as f64
        })
        .collect())
}

/// Empirical probability per period that the scheduled reserve covers the
/// renewable shortfall below the forecast.
pub fn monte_carlo_reserve_check(s: &Scenario, sched: &Schedule, n: usize, seed: u64) -> Result<Vec<f64>> {
    check_dims(s, sched)?;
    empirical_coverage(s, &sched.renewable_expected, &sched.total_reserve, n, seed)
}

/// Source model for [`audit_discretization`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    Wind(WindParams),
    Pv(PvParams),
}

impl Source {
    fn top(&self) -> f64 {
        match self {
            Source::Wind(w) => w.p_s,
            Source::Pv(p) => p.p_max_pv,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Source::Wind(w) => w.power_from_speed(w.speed_quantile(rng.random::<f64>())),
            Source::Pv(p) => p.quantile(rng.random::<f64>()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationAudit {
    /// Sup distance between the binned sample CDF and the sequence CDF, i.e.
    /// the continuous law compared at the bin upper edges.
    pub distance: f64,
    /// Sup distance between the raw sample CDF and the step CDF of the
    /// sequence over all real `x`. Includes up to the mass of half a bin.
    pub full_distance: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Kolmogorov distance between samples of `source` and its discretization on step `q`.
pub fn audit_discretization(source: &Source, q: f64, n: usize, seed: u64) -> Result<DiscretizationAudit> {
    if n < MIN_SAMPLES {
        return Err(invalid(format!("at least {MIN_SAMPLES} samples are needed, got {n}")));
    }
    let seq = match source {
        Source::Wind(w) => discretize_wind(w, q)?,
        Source::Pv(p) => discretize_pv(p, q)?,
    };
    let top = source.top();
    let mut rng = period_rng(seed, 0);
    let mut xs: Vec<f64> = (0..n).map(|_| source.sample(&mut rng)).collect();

    let cum = seq.cumulative();
    let mut counts = vec![0usize; cum.len()];
    for &x in &xs {
        counts[bin_index(x, q, top).min(cum.len() - 1)] += 1;
    }
    let mut running = 0usize;
    let mut distance: f64 = 0.0;
    for (m, &c) in counts.iter().enumerate() {
        running += c;
        distance = distance.max((running as f64 / n as f64 - cum[m]).abs());
    }

    // step CDF G(x) = Σ_{m·q ≤ x} p_m against the raw sample CDF; both are
    // right-continuous, so checking both one-sided limits at every jump
    // point of either function gives the supremum
    xs.sort_by(f64::total_cmp);
    let f_at = |x: f64| xs.partition_point(|&v| v <= x) as f64 / n as f64;
    let f_before = |x: f64| xs.partition_point(|&v| v < x) as f64 / n as f64;
    let g_at = |x: f64| {
        let k = ((x / q + 1e-12).floor() as i64).clamp(-1, cum.len() as i64 - 1);
        if k < 0 { 0.0 } else { cum[k as usize] }
    };
    let g_before = |x: f64| {
        let k = ((x / q - 1e-12).ceil() as i64 - 1).clamp(-1, cum.len() as i64 - 1);
        if k < 0 { 0.0 } else { cum[k as usize] }
    };
    let mut full_distance: f64 = 0.0;
    let grid = (0..cum.len()).map(|m| m as f64 * q);
    for x in xs.iter().copied().chain(grid) {
        full_distance = full_distance.max((f_at(x) - g_at(x)).abs()).max((f_before(x) - g_before(x)).abs());
    }
    Ok(DiscretizationAudit {
        distance,
        full_distance,
        samples: n,
        seed,
    })
}
