"""Smoke test for the ies_sched extension module.

Build and install first:

    cd crates/py && maturin build --release -o dist && pip install dist/*.whl

then run `python python/smoke_test.py` from the repository root.
"""

import math
import sys
import tempfile
from pathlib import Path

import ies_sched

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"


def check(cond, what):
    if not cond:
        print(f"FAIL {what}")
        sys.exit(1)
    print(f"ok   {what}")


def main():
    wind = ies_sched.discretize_wind(3.0, 15.0, 25.0, 60.0, 2.0, 10.0, 1.0)
    check(abs(sum(wind) - 1.0) < 1e-6 and len(wind) == 61, "wind sequence sums to one")
    pv = ies_sched.discretize_pv(3.0, 2.0, 120.0, 1.0)
    joint = ies_sched.convolve(wind, pv, 1.0)
    check(len(joint) == len(wind) + len(pv) - 1, "convolution length")
    mean = lambda p: sum(i * x for i, x in enumerate(p))
    check(abs(mean(joint) - mean(wind) - mean(pv)) < 1e-9, "expectation is additive")
    r = ies_sched.quantile_reserve(joint, 1.0, 0.95, mean(joint))
    check(0.0 <= r <= mean(joint), "quantile reserve within [0, E]")

    params = (0.5, 2.3e7, 5e7, 1.007, 1.2)
    check(abs(ies_sched.heating_demand(params, 20.0, 20.0, -10.0, 1.0) - 345.0) < 1e-9, "steady-state heat load")
    p = ies_sched.heating_demand(params, 21.0, 20.0, -8.0, 1.0)
    check(abs(ies_sched.indoor_temp_step(params, 20.0, -8.0, p, 1.0) - 21.0) < 1e-9, "building inverse pair")

    s = ies_sched.load_scenario(str(SCENARIOS / "reduced_case.json"))
    check(s.horizon == 6 and s.num_thermal == 4 and s.num_chp == 2, "reduced scenario loads")
    binary = ies_sched.solve(s)
    quant = ies_sched.solve(s.with_settings(chance="quantile"))
    check(binary.status == "Optimal", "binary formulation solves")
    check(math.isclose(binary.objective, quant.objective, rel_tol=1e-6), "binary and quantile objectives agree")

    report = ies_sched.validate_schedule(s, binary)
    check(report["pass"], "schedule passes constraint replay")
    cov = ies_sched.monte_carlo_reserve_check(s, binary, 20000, 7)
    check(min(cov) >= s.alpha - 0.015, "Monte Carlo coverage")

    sched = binary.to_dict()
    check(len(sched["thermal"]) == 4 and sched["horizon"] == 6, "schedule converts to dict")

    try:
        s.with_mode(7)
        check(False, "bad mode rejected")
    except ValueError:
        check(True, "bad mode rejected")

    with tempfile.TemporaryDirectory() as out:
        summary = ies_sched.run(str(SCENARIOS / "reduced_case.json"), out, mode="1", mc_samples=0)
        check(summary["schema_version"] == ies_sched.SCHEMA_VERSION, "run writes a versioned summary")
        check(all(r["ok"] for r in summary["runs"]), "run succeeds")
        check((Path(out) / "summary.json").exists(), "summary file written")
    print("all smoke checks passed")


if __name__ == "__main__":
    main()
