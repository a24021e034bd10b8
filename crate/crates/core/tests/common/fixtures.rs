use std::path::PathBuf;

use ies_core::scheduler::{load_scenario, Scenario};
use serde_json::{json, Value};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

pub fn bundled(name: &str) -> Scenario {
    load_scenario(scenario_path(name)).unwrap()
}

pub fn bundled_json(name: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(scenario_path(name)).unwrap()).unwrap()
}

/// One thermal unit, no storage, no renewables, and an outdoor temperature
/// equal to the setpoint so the building needs no heat.
pub fn toy_json(load: f64) -> Value {
    json!({
        "horizon": 1,
        "thermal_units": [{
            "name": "G1", "p_min": 10.0, "p_max": 50.0, "ramp_up": 25.0, "ramp_down": 25.0,
            "cost": {"a": 0.012, "b": 17.82, "c": 10.15}, "reserve_cost": 13.7
        }],
        "chp_units": [],
        "building": {
            "params": {"k_transfer": 0.5, "surface_f": 2.3e7, "volume_v": 5e7, "c_air": 1.007, "rho_air": 1.2},
            "setpoint": 20.0
        },
        "elec_load": [load],
        "t_outdoor": [20.0],
        "wind": [null],
        "pv": [null],
        "q_step": 5.0,
        "inertia": false
    })
}

pub fn from_json(v: &Value) -> ies_core::Result<Scenario> {
    let s: Scenario = serde_json::from_value(v.clone())?;
    s.validate()?;
    Ok(s)
}
