//! Single-zone building thermal model.
//!
//! The room is a lumped capacitance `C = c_air·ρ·V` coupled to the outdoors by
//! the conductance `UA = K·F`. Over a step of length `dt` with constant heating
//! power `P` and outdoor temperature `T_od`, the indoor temperature relaxes
//! exponentially towards `T_od + P/UA` with time constant `τ = C/UA`.
//!
//! Units: `K` in W/(m²·°C), `c_air` in kJ/(kg·°C); internally conductance is
//! MW/°C, capacitance MWh/°C, heat powers MW and time hours.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BuildingRaw")]
pub struct BuildingParams {
    pub k_transfer: f64,
    pub surface_f: f64,
    pub volume_v: f64,
    pub c_air: f64,
    pub rho_air: f64,
    #[serde(skip)]
    ua: f64,
    #[serde(skip)]
    capacity: f64,
}

#[derive(Deserialize)]
struct BuildingRaw {
    k_transfer: f64,
    surface_f: f64,
    volume_v: f64,
    c_air: f64,
    rho_air: f64,
}

impl TryFrom<BuildingRaw> for BuildingParams {
    type Error = Error;
    fn try_from(r: BuildingRaw) -> Result<Self> {
        BuildingParams::new(r.k_transfer, r.surface_f, r.volume_v, r.c_air, r.rho_air)
    }
}

/// Coefficients of the heating demand as an affine function:
/// `P = now·T_now − prev·T_prev − outdoor·T_od`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandCoefficients {
    pub now: f64,
    pub prev: f64,
    pub outdoor: f64,
}

impl BuildingParams {
    pub fn new(k_transfer: f64, surface_f: f64, volume_v: f64, c_air: f64, rho_air: f64) -> Result<Self> {
        let all = [k_transfer, surface_f, volume_v, c_air, rho_air];
        if all.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(invalid("building parameters must be finite and positive"));
        }
        // W/°C -> MW/°C
        let ua = k_transfer * surface_f * 1e-6;
        // kJ/°C -> MWh/°C
        let capacity = c_air * rho_air * volume_v / 3.6e6;
        if !(ua.is_finite() && capacity.is_finite() && ua > 0.0 && capacity > 0.0) {
            return Err(invalid("building time constant is not finite"));
        }
        Ok(Self {
            k_transfer,
            surface_f,
            volume_v,
            c_air,
            rho_air,
            ua,
            capacity,
        })
    }

    /// Envelope conductance `K·F` in MW/°C.
    pub fn ua(&self) -> f64 {
        self.ua
    }

    /// Air heat capacity in MWh/°C.
    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    /// Time constant in hours.
    pub fn tau(&self) -> f64 {
        self.capacity / self.ua
    }

    fn decay(&self, dt: f64) -> f64 {
        (-dt / self.tau()).exp()
    }

    pub fn demand_coefficients(&self, dt: f64) -> DemandCoefficients {
        let e = self.decay(dt);
        let gain = self.ua / (1.0 - e);
        DemandCoefficients {
            now: gain,
            prev: gain * e,
            outdoor: self.ua,
        }
    }
}

fn check_dt(dt: f64) {
    assert!(dt.is_finite() && dt > 0.0, "time step must be positive, got {dt}");
}

/// Indoor temperature after `dt` hours of constant heating `p_heat`.
pub fn indoor_temp_step(p: &BuildingParams, t_id_prev: f64, t_od: f64, p_heat: f64, dt: f64) -> f64 {
    check_dt(dt);
    let target = t_od + p_heat / p.ua;
    target + (t_id_prev - target) * p.decay(dt)
}

/// Heating power that moves the room from `t_id_prev` to `t_id_now` in `dt`.
///
/// Negative values mean the room would have to be cooled.
pub fn heating_demand(p: &BuildingParams, t_id_now: f64, t_id_prev: f64, t_od: f64, dt: f64) -> f64 {
    check_dt(dt);
    let e = p.decay(dt);
    p.ua * ((t_id_now - t_od) - e * (t_id_prev - t_od)) / (1.0 - e)
}

/// Trapezoidal comfort membership: rises on `[t_a, t_b]`, flat on `[t_b, t_c]`,
/// falls on `[t_c, t_d]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComfortRaw")]
pub struct ComfortBand {
    pub t_a: f64,
    pub t_b: f64,
    pub t_c: f64,
    pub t_d: f64,
}

#[derive(Deserialize)]
struct ComfortRaw {
    t_a: f64,
    t_b: f64,
    t_c: f64,
    t_d: f64,
}

impl TryFrom<ComfortRaw> for ComfortBand {
    type Error = Error;
    fn try_from(r: ComfortRaw) -> Result<Self> {
        ComfortBand::new(r.t_a, r.t_b, r.t_c, r.t_d)
    }
}

impl Default for ComfortBand {
    fn default() -> Self {
        Self {
            t_a: 18.0,
            t_b: 20.0,
            t_c: 22.0,
            t_d: 24.0,
        }
    }
}

impl ComfortBand {
    pub fn new(t_a: f64, t_b: f64, t_c: f64, t_d: f64) -> Result<Self> {
        if ![t_a, t_b, t_c, t_d].iter().all(|x| x.is_finite()) {
            return Err(invalid("comfort breakpoints must be finite"));
        }
        if !(t_a <= t_b && t_b <= t_c && t_c <= t_d) {
            return Err(invalid(format!(
                "comfort breakpoints must be ordered, got {t_a}, {t_b}, {t_c}, {t_d}"
            )));
        }
        Ok(Self { t_a, t_b, t_c, t_d })
    }
}

pub fn comfort_membership(band: &ComfortBand, t: f64) -> f64 {
    if t < band.t_a || t > band.t_d {
        0.0
    } else if t < band.t_b {
        (t - band.t_a) / (band.t_b - band.t_a)
    } else if t <= band.t_c {
        1.0
    } else {
        (band.t_d - t) / (band.t_d - band.t_c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn paper_building() -> BuildingParams {
        BuildingParams::new(0.5, 2.3e7, 5e7, 1.007, 1.2).unwrap()
    }

    #[test]
    fn unit_conversion() {
        let b = paper_building();
        assert_abs_diff_eq!(b.ua(), 11.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.capacity(), 1.007 * 1.2 * 5e7 / 3.6e6, epsilon = 1e-9);
        assert!(BuildingParams::new(0.5, 0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn step_examples() {
        let b = paper_building();
        assert_eq!(indoor_temp_step(&b, -5.0, -5.0, 0.0, 1.0), -5.0);
        let hold = b.ua() * (20.0 - -10.0);
        assert_abs_diff_eq!(indoor_temp_step(&b, 20.0, -10.0, hold, 1.0), 20.0, epsilon = 1e-12);
        let one = indoor_temp_step(&b, 20.0, -10.0, 0.0, 1.0);
        let two = indoor_temp_step(&b, 20.0, -10.0, 0.0, 2.0);
        assert!(20.0 > one && one > two && two > -10.0);
        // closed form: T = T_od + ΔT·exp(−dt/τ)
        assert_abs_diff_eq!(one, -10.0 + 30.0 * (-1.0 / b.tau()).exp(), epsilon = 1e-12);
    }

    #[test]
    fn steady_state_demand() {
        let b = paper_building();
        assert_abs_diff_eq!(heating_demand(&b, 20.0, 20.0, -10.0, 1.0), 345.0, epsilon = 1e-9);
        assert_abs_diff_eq!(heating_demand(&b, 3.0, 3.0, 3.0, 1.0), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn fixed_point_over_a_day() {
        let b = paper_building();
        let hold = b.ua() * (20.0 - -7.5);
        let mut t = 20.0;
        for _ in 0..24 {
            t = indoor_temp_step(&b, t, -7.5, hold, 1.0);
        }
        assert!((t - 20.0).abs() < 1e-9);
    }

    #[test]
    fn coefficients_agree_with_demand() {
        let b = paper_building();
        let c = b.demand_coefficients(1.0);
        let direct = heating_demand(&b, 21.0, 19.5, -8.0, 1.0);
        assert_abs_diff_eq!(c.now * 21.0 - c.prev * 19.5 - c.outdoor * -8.0, direct, epsilon = 1e-9);
    }

    #[test]
    fn membership_examples() {
        let band = ComfortBand::default();
        assert_eq!(comfort_membership(&band, 21.0), 1.0);
        assert_eq!(comfort_membership(&band, 18.0), 0.0);
        assert_eq!(comfort_membership(&band, 19.0), 0.5);
        assert_eq!(comfort_membership(&band, 23.0), 0.5);
        assert_eq!(comfort_membership(&band, 30.0), 0.0);
        assert!(ComfortBand::new(20.0, 18.0, 22.0, 24.0).is_err());
    }

    proptest! {
        #[test]
        fn demand_inverts_step(now in 10.0f64..30.0, prev in 10.0f64..30.0, od in -30.0f64..10.0, dt in 0.25f64..3.0) {
            let b = paper_building();
            let p = heating_demand(&b, now, prev, od, dt);
            prop_assert!((indoor_temp_step(&b, prev, od, p, dt) - now).abs() < 1e-9);
        }

        #[test]
        fn demand_monotone(now in 10.0f64..30.0, prev in 10.0f64..30.0, od in -30.0f64..10.0, d in 0.01f64..5.0) {
            let b = paper_building();
            let base = heating_demand(&b, now, prev, od, 1.0);
            prop_assert!(heating_demand(&b, now + d, prev, od, 1.0) > base);
            prop_assert!(heating_demand(&b, now, prev, od + d, 1.0) < base);
        }

        #[test]
        fn demand_is_affine(
            x in prop::array::uniform3(-20.0f64..30.0),
            y in prop::array::uniform3(-20.0f64..30.0),
            w in 0.0f64..1.0,
        ) {
            let b = paper_building();
            let f = |v: [f64; 3]| heating_demand(&b, v[0], v[1], v[2], 1.0);
            let mix = [0, 1, 2].map(|i| w * x[i] + (1.0 - w) * y[i]);
            prop_assert!((f(mix) - (w * f(x) + (1.0 - w) * f(y))).abs() < 1e-8);
        }
    }
}
