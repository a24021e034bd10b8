"""Writes the bundled scenario documents.

Unit, storage, building and load data are the published case-study values.
Outdoor temperature and the per-period wind and PV shape parameters are only
available as plots, so smooth illustrative profiles stand in for them.
"""

import json
import math
from pathlib import Path

HERE = Path(__file__).resolve().parent

LOAD = [400, 390, 380, 410, 390, 400, 400, 430, 470, 540, 580, 592,
        600, 590, 580, 570, 560, 520, 440, 400, 390, 380, 390, 400]

THERMAL = [
    # p_max, p_min, ramp_up, ramp_down, a, b, c, reserve cost
    (50, 25, 25, 25, 0.012, 17.82, 10.150, 13.7),
    (35, 10, 18, 18, 0.069, 26.24, 31.670, 13.2),
    (30, 10, 15, 15, 0.028, 37.69, 17.940, 13.2),
    (40, 12, 20, 20, 0.010, 12.88, 6.778, 14.2),
]


def outdoor_temp(hour):
    # coldest around 04:00, mildest around 15:00
    return round(-10.0 - 6.0 * math.cos(2 * math.pi * (hour - 3.5) / 24), 3)


def wind(hour):
    scale = 9.0 + 2.5 * math.cos(2 * math.pi * (hour - 2) / 24)
    return {"v_in": 3.0, "v_s": 15.0, "v_out": 25.0, "p_s": 60.0,
            "shape_m": 2.0, "scale_eps": round(scale, 3)}


def pv(hour):
    # daylight 07:00-18:00, irradiance share peaking at noon
    if hour < 8 or hour > 18:
        return None
    x = math.sin(math.pi * (hour - 7) / 12)
    return {"lambda1": round(2.0 + 6.0 * x, 3), "lambda2": 2.0, "p_max_pv": 120.0}


def scenario(name, hours):
    return {
        "name": name,
        "provenance": {
            "units": "published case-study tables",
            "elec_load": "published case-study table",
            "storage_boiler_building": "published case-study parameter list",
            "t_outdoor": "illustrative",
            "wind": "illustrative",
            "pv": "illustrative",
            "back_pressure": "illustrative",
        },
        "horizon": len(hours),
        "dt": 1.0,
        "thermal_units": [
            {"name": f"G{i + 1}", "p_max": u[0], "p_min": u[1], "ramp_up": u[2], "ramp_down": u[3],
             "cost": {"a": u[4], "b": u[5], "c": u[6]}, "reserve_cost": u[7]}
            for i, u in enumerate(THERMAL)
        ],
        "chp_units": [
            {"name": f"CHP{i + 1}", "pe_min": 100.0, "pe_max": 200.0, "ph_max": 250.0,
             "c_v": 0.15, "c_m": 0.75, "ramp_up": 50.0, "ramp_down": 50.0,
             "cost": {"a": 0.0044, "b": 13.29, "c": 39.0}, "reserve_cost": 16.2,
             "hst": {"c_min": 40.0, "c_max": 240.0, "p_c_max": 50.0},
             "back_pressure": {"k": 0.0}}
            for i in range(2)
        ],
        "bess": {"s_min": 32.0, "s_max": 160.0, "p_max": 40.0, "eff_ch": 0.9, "eff_dc": 0.9,
                 "cost_dc": 150.0, "cost_ch": 100.0, "reserve_cost": 20.0},
        "eb": {"p_eb_max": 30.0, "eff": 0.95},
        "building": {
            "params": {"k_transfer": 0.5, "surface_f": 2.3e7, "volume_v": 5e7, "c_air": 1.007, "rho_air": 1.2},
            "setpoint": 20.0,
        },
        "elec_load": [LOAD[h - 1] for h in hours],
        "t_outdoor": [outdoor_temp(h) for h in hours],
        "wind": [wind(h) for h in hours],
        "pv": [pv(h) for h in hours],
        "q_step": 5.0,
        "alpha": 0.95,
        "mode": 3,
        "chance_formulation": "binary",
        "pwl_segments": 8,
    }


def main():
    docs = {
        "paper_case.json": scenario("paper_case", list(range(1, 25))),
        "reduced_case.json": scenario("reduced_case", list(range(9, 15))),
    }
    for fname, doc in docs.items():
        (HERE / fname).write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
