//! Generating units and storage devices.
//!
//! Sign conventions differ between the two stores: the battery uses separate
//! nonnegative charge and discharge powers, while a heat storage tank carries a
//! single signed power that is **positive when heat is released** and negative
//! when heat is stored.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

fn finite(name: &str, xs: &[f64]) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(invalid(format!("{name}: parameters must be finite")))
    }
}

/// Quadratic cost `a·P² + b·P + c` in $/h.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadCost {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadCost {
    pub fn eval(&self, p: f64) -> f64 {
        self.a * p * p + self.b * p + self.c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalUnit {
    #[serde(default)]
    pub name: String,
    pub p_min: f64,
    pub p_max: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub cost: QuadCost,
    /// $/MWh of scheduled reserve.
    pub reserve_cost: f64,
}

impl ThermalUnit {
    pub fn validate(&self) -> Result<()> {
        let n = &self.name;
        finite(n, &[self.p_min, self.p_max, self.ramp_up, self.ramp_down, self.cost.a, self.cost.b, self.cost.c, self.reserve_cost])?;
        if !(0.0 <= self.p_min && self.p_min <= self.p_max) {
            return Err(invalid(format!("thermal unit {n}: need 0 <= p_min <= p_max, got {} and {}", self.p_min, self.p_max)));
        }
        if self.ramp_up <= 0.0 || self.ramp_down <= 0.0 {
            return Err(invalid(format!("thermal unit {n}: ramp limits must be positive")));
        }
        if self.cost.a < 0.0 {
            return Err(invalid(format!("thermal unit {n}: quadratic cost coefficient must be nonnegative")));
        }
        Ok(())
    }
}

/// Optional lower boundary of the extraction-unit operating region,
/// `P_e ≥ c_m·P_h − k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BackPressureLimit {
    pub k: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChpUnit {
    #[serde(default)]
    pub name: String,
    pub pe_min: f64,
    pub pe_max: f64,
    pub ph_max: f64,
    pub c_v: f64,
    pub c_m: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    /// Cost of the condensing-equivalent power `P_e + c_v·P_h`.
    pub cost: QuadCost,
    pub reserve_cost: f64,
    #[serde(default)]
    pub hst: Option<Hst>,
    #[serde(default)]
    pub back_pressure: Option<BackPressureLimit>,
}

impl ChpUnit {
    pub fn validate(&self) -> Result<()> {
        let n = &self.name;
        finite(n, &[self.pe_min, self.pe_max, self.ph_max, self.c_v, self.c_m, self.ramp_up, self.ramp_down, self.cost.a, self.cost.b, self.cost.c, self.reserve_cost])?;
        if !(0.0 <= self.pe_min && self.pe_min <= self.pe_max) {
            return Err(invalid(format!("CHP unit {n}: need 0 <= pe_min <= pe_max, got {} and {}", self.pe_min, self.pe_max)));
        }
        if self.ph_max <= 0.0 || self.c_v <= 0.0 {
            return Err(invalid(format!("CHP unit {n}: ph_max and c_v must be positive")));
        }
        if self.ramp_up <= 0.0 || self.ramp_down <= 0.0 {
            return Err(invalid(format!("CHP unit {n}: ramp limits must be positive")));
        }
        if self.cost.a < 0.0 {
            return Err(invalid(format!("CHP unit {n}: quadratic cost coefficient must be nonnegative")));
        }
        if let Some(b) = &self.back_pressure {
            finite(n, &[b.k])?;
        }
        if let Some(h) = &self.hst {
            h.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bess {
    pub s_min: f64,
    pub s_max: f64,
    pub p_max: f64,
    pub eff_ch: f64,
    pub eff_dc: f64,
    pub cost_dc: f64,
    pub cost_ch: f64,
    pub reserve_cost: f64,
}

impl Bess {
    pub fn validate(&self) -> Result<()> {
        finite("BESS", &[self.s_min, self.s_max, self.p_max, self.eff_ch, self.eff_dc, self.cost_dc, self.cost_ch, self.reserve_cost])?;
        if !(0.0 <= self.s_min && self.s_min < self.s_max) {
            return Err(invalid("BESS: need 0 <= s_min < s_max"));
        }
        if !(self.eff_ch > 0.0 && self.eff_ch <= 1.0 && self.eff_dc > 0.0 && self.eff_dc <= 1.0) {
            return Err(invalid("BESS: efficiencies must lie in (0, 1]"));
        }
        if self.p_max <= 0.0 {
            return Err(invalid("BESS: p_max must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hst {
    pub c_min: f64,
    pub c_max: f64,
    pub p_c_max: f64,
}

impl Hst {
    pub fn validate(&self) -> Result<()> {
        finite("HST", &[self.c_min, self.c_max, self.p_c_max])?;
        if !(0.0 <= self.c_min && self.c_min < self.c_max) {
            return Err(invalid("HST: need 0 <= c_min < c_max"));
        }
        if self.p_c_max <= 0.0 {
            return Err(invalid("HST: p_c_max must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eb {
    pub p_eb_max: f64,
    pub eff: f64,
}

impl Eb {
    pub fn validate(&self) -> Result<()> {
        finite("electric boiler", &[self.p_eb_max, self.eff])?;
        if self.p_eb_max <= 0.0 || !(self.eff > 0.0 && self.eff <= 1.0) {
            return Err(invalid("electric boiler: need p_eb_max > 0 and efficiency in (0, 1]"));
        }
        Ok(())
    }
}

/// Condensing-equivalent electric output `P_e + c_v·P_h`.
pub fn chp_condensing_power(u: &ChpUnit, p_e: f64, p_h: f64) -> f64 {
    p_e + u.c_v * p_h
}

pub fn eb_heat_output(e: &Eb, p_elec: f64) -> Result<f64> {
    if !(0.0..=e.p_eb_max).contains(&p_elec) {
        return Err(invalid(format!("boiler input {p_elec} MW outside [0, {}]", e.p_eb_max)));
    }
    Ok(p_elec * e.eff)
}

pub fn bess_step(b: &Bess, s_prev: f64, p_ch: f64, p_dc: f64, dt: f64) -> f64 {
    s_prev + (b.eff_ch * p_ch - p_dc / b.eff_dc) * dt
}

/// Tank content after `dt` hours; `p_c > 0` releases heat.
pub fn hst_step(_h: &Hst, c_prev: f64, p_c: f64, dt: f64) -> f64 {
    c_prev - p_c * dt
}
