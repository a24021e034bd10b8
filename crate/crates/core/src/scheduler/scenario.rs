use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::building::{BuildingParams, ComfortBand};
use crate::devices::{Bess, ChpUnit, Eb, ThermalUnit};
use crate::error::{Error, Result};
use crate::probseq::{PvParams, WindParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ChanceFormulation {
    /// One binary per joint-output level with big-L linking rows.
    #[default]
    Binary,
    /// Closed-form tail quantile as a lower bound on total reserve.
    Quantile,
}

impl fmt::Display for ChanceFormulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChanceFormulation::Binary => "binary",
            ChanceFormulation::Quantile => "quantile",
        })
    }
}

/// Choice of the linking constant in the binary chance rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BigLRule {
    /// One constant per period, large enough for every level.
    Uniform,
    /// Smallest valid constant per row.
    #[default]
    Tight,
}

/// One of the six operating modes.
///
/// | mode | BESS | HST | EB | uncertain reserve | thermal inertia |
/// |------|------|-----|----|-------------------|-----------------|
/// | 1    |      |     |    | yes               | yes             |
/// | 2    | yes  |     |    | yes               | yes             |
/// | 3    | yes  | yes | yes| yes               | yes             |
/// | 4    | yes  | yes | yes|                   | yes             |
/// | 5    | yes  | yes | yes| yes               |                 |
/// | 6    | yes  | yes | yes|                   |                 |
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Mode(u8);

impl Mode {
    pub const ALL: [Mode; 6] = [Mode(1), Mode(2), Mode(3), Mode(4), Mode(5), Mode(6)];

    pub fn new(m: u8) -> Result<Self> {
        if (1..=6).contains(&m) {
            Ok(Mode(m))
        } else {
            Err(Error::InvalidParameter(format!("operating mode must be 1..6, got {m}")))
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    pub fn has_bess(self) -> bool {
        self.0 >= 2
    }

    pub fn has_hst_and_eb(self) -> bool {
        self.0 >= 3
    }

    pub fn uncertainty(self) -> bool {
        !matches!(self.0, 4 | 6)
    }

    pub fn inertia(self) -> bool {
        !matches!(self.0, 5 | 6)
    }
}

impl TryFrom<u8> for Mode {
    type Error = Error;
    fn try_from(m: u8) -> Result<Self> {
        Mode::new(m)
    }
}

impl From<Mode> for u8 {
    fn from(m: Mode) -> u8 {
        m.0
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn default_setpoint() -> f64 {
    20.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildingSpec {
    pub params: BuildingParams,
    #[serde(default)]
    pub comfort: ComfortBand,
    /// Indoor temperature held when inertia is ignored, and the initial temperature.
    #[serde(default = "default_setpoint")]
    pub setpoint: f64,
}

fn default_dt() -> f64 {
    1.0
}
fn default_alpha() -> f64 {
    0.95
}
fn default_segments() -> usize {
    8
}
fn default_fraction() -> f64 {
    0.2
}
fn yes() -> bool {
    true
}

/// A complete scheduling instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    /// Free-form notes on where the data came from.
    #[serde(default)]
    pub provenance: BTreeMap<String, String>,
    pub horizon: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub thermal_units: Vec<ThermalUnit>,
    pub chp_units: Vec<ChpUnit>,
    #[serde(default)]
    pub bess: Option<Bess>,
    #[serde(default)]
    pub eb: Option<Eb>,
    pub building: BuildingSpec,
    pub elec_load: Vec<f64>,
    pub t_outdoor: Vec<f64>,
    /// Per-period wind model; `null` means no wind in that period.
    pub wind: Vec<Option<WindParams>>,
    /// Per-period PV model; `null` means no PV output (night).
    pub pv: Vec<Option<PvParams>>,
    pub q_step: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Mode the scenario was reduced to, if any.
    #[serde(default)]
    pub mode: Option<Mode>,
    /// Chance-constrained reserve (`true`) or a fixed share of net load.
    #[serde(default = "yes")]
    pub uncertainty: bool,
    /// Indoor temperature free within the comfort plateau (`true`) or held at the setpoint.
    #[serde(default = "yes")]
    pub inertia: bool,
    #[serde(default)]
    pub chance_formulation: ChanceFormulation,
    #[serde(default)]
    pub big_l: BigLRule,
    #[serde(default = "default_segments")]
    pub pwl_segments: usize,
    #[serde(default = "default_fraction")]
    pub deterministic_reserve_fraction: f64,
}

fn field_err(field: impl Into<String>, msg: impl Into<String>) -> Error {
    Error::Scenario {
        field: field.into(),
        msg: msg.into(),
    }
}

/// Re-labels a device validation error with the scenario field it came from.
fn at(field: String, r: Result<()>) -> Result<()> {
    r.map_err(|e| match e {
        Error::InvalidParameter(msg) => field_err(field, msg),
        other => other,
    })
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let t = self.horizon;
        if t == 0 {
            return Err(field_err("horizon", "must be at least 1"));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(field_err("dt", "must be positive"));
        }
        for (name, len) in [
            ("elec_load", self.elec_load.len()),
            ("t_outdoor", self.t_outdoor.len()),
            ("wind", self.wind.len()),
            ("pv", self.pv.len()),
        ] {
            if len != t {
                return Err(field_err(name, format!("has {len} entries, horizon is {t}")));
            }
        }
        for (i, l) in self.elec_load.iter().enumerate() {
            if !(l.is_finite() && *l >= 0.0) {
                return Err(field_err(format!("elec_load[{i}]"), format!("must be a nonnegative number, got {l}")));
            }
        }
        for (i, x) in self.t_outdoor.iter().enumerate() {
            if !x.is_finite() {
                return Err(field_err(format!("t_outdoor[{i}]"), "must be finite"));
            }
        }
        if !(self.q_step.is_finite() && self.q_step > 0.0) {
            return Err(field_err("q_step", format!("must be positive, got {}", self.q_step)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(field_err("alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if self.pwl_segments == 0 {
            return Err(field_err("pwl_segments", "must be at least 1"));
        }
        if !(self.deterministic_reserve_fraction >= 0.0 && self.deterministic_reserve_fraction.is_finite()) {
            return Err(field_err("deterministic_reserve_fraction", "must be a nonnegative number"));
        }
        if self.thermal_units.is_empty() && self.chp_units.is_empty() {
            return Err(field_err("thermal_units", "the system needs at least one dispatchable unit"));
        }
        for (i, u) in self.thermal_units.iter().enumerate() {
            at(format!("thermal_units[{i}]"), u.validate())?;
        }
        for (i, u) in self.chp_units.iter().enumerate() {
            at(format!("chp_units[{i}]"), u.validate())?;
        }
        if let Some(b) = &self.bess {
            at("bess".into(), b.validate())?;
        }
        if let Some(e) = &self.eb {
            at("eb".into(), e.validate())?;
        }
        let c = &self.building.comfort;
        if !(c.t_b <= self.building.setpoint && self.building.setpoint <= c.t_c) {
            return Err(field_err(
                "building.setpoint",
                format!("{} lies outside the comfort plateau [{}, {}]", self.building.setpoint, c.t_b, c.t_c),
            ));
        }
        if let Some(m) = self.mode {
            self.check_mode(m)?;
        }
        Ok(())
    }

    /// Checks that the devices a mode relies on are present.
    pub fn check_mode(&self, mode: Mode) -> Result<()> {
        if mode.has_bess() && self.bess.is_none() {
            return Err(field_err("bess", format!("mode {mode} requires a battery")));
        }
        if mode.has_hst_and_eb() {
            if self.eb.is_none() {
                return Err(field_err("eb", format!("mode {mode} requires an electric boiler")));
            }
            if !self.chp_units.iter().any(|u| u.hst.is_some()) {
                return Err(field_err("chp_units", format!("mode {mode} requires heat storage on a CHP unit")));
            }
        }
        Ok(())
    }

    pub fn has_hst(&self) -> bool {
        self.chp_units.iter().any(|u| u.hst.is_some())
    }

    /// Total reserve the units and the battery could ever offer.
    pub fn reserve_capability(&self) -> f64 {
        let th: f64 = self.thermal_units.iter().map(|u| u.p_max - u.p_min).sum();
        let chp: f64 = self.chp_units.iter().map(|u| u.pe_max - u.pe_min).sum();
        th + chp + self.bess.map_or(0.0, |b| b.p_max)
    }
}

/// Reduces a scenario to one operating mode: drops devices the mode does
/// not use and sets the reserve and inertia switches.
pub fn apply_mode(s: &Scenario, mode: Mode) -> Scenario {
    let mut out = s.clone();
    if !mode.has_bess() {
        out.bess = None;
    }
    if !mode.has_hst_and_eb() {
        out.eb = None;
        for u in &mut out.chp_units {
            u.hst = None;
        }
    }
    out.uncertainty = mode.uncertainty();
    out.inertia = mode.inertia();
    out.mode = Some(mode);
    out
}

/// Reads and validates a scenario document without reducing it to its mode.
pub fn read_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    let s: Scenario = serde_json::from_str(&text).map_err(|source| Error::ScenarioParse {
        path: path.to_path_buf(),
        source,
    })?;
    s.validate()?;
    Ok(s)
}

/// Reads and validates a scenario document, applying its `mode` if set.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let s = read_scenario(path)?;
    Ok(match s.mode {
        Some(m) => apply_mode(&s, m),
        None => s,
    })
}
