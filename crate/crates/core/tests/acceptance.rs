//! Acceptance suite. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; the process fails if any criterion does.

mod common;

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::rc::Rc;
use std::time::Instant;

use common::fixtures::scenario_path;
use common::oracles::{convolve_by_definition, enumerate_milp, naive_lp, simpson, Naive};
use common::random::{random_lp, random_milp, rng};
use ies_core::building::{heating_demand, indoor_temp_step, BuildingParams};
use ies_core::harness::{audit_discretization, monte_carlo_reserve_check, validate_schedule, Source};
use ies_core::milp::{solve, solve_lp, LpOptions, LpStatus, MipStatus, SolveOptions};
use ies_core::probseq::{discretize_pv, discretize_wind, grid_len, ProbSeq, PvParams, WindParams};
use ies_core::scheduler::{apply_mode, read_scenario, solve_scenario, ChanceFormulation, Mode, Scenario, Schedule};
use rand::Rng;

type Outcome = Result<String, String>;

const SEED: u64 = 2024;
const MC_SAMPLES: usize = 100_000;
const REPLAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Key {
    case: &'static str,
    mode: u8,
    alpha_pct: u32,
    quantile: bool,
}

struct Run {
    scenario: Scenario,
    schedule: Schedule,
    objective: f64,
    secs: f64,
}

/// Every schedule solved during the run, kept for the replay criterion.
#[derive(Default)]
struct Runs(RefCell<BTreeMap<Key, Rc<Run>>>);

impl Runs {
    fn get(&self, case: &'static str, mode: u8, alpha_pct: u32, quantile: bool) -> Result<Rc<Run>, String> {
        let key = Key { case, mode, alpha_pct, quantile };
        if let Some(r) = self.0.borrow().get(&key) {
            return Ok(r.clone());
        }
        let base = read_scenario(scenario_path(case)).map_err(|e| e.to_string())?;
        let mut s = apply_mode(&base, Mode::new(mode).map_err(|e| e.to_string())?);
        s.alpha = alpha_pct as f64 / 100.0;
        s.chance_formulation = if quantile { ChanceFormulation::Quantile } else { ChanceFormulation::Binary };
        let t = Instant::now();
        let out = solve_scenario(&s, &SolveOptions::default()).map_err(|e| e.to_string())?;
        let secs = t.elapsed().as_secs_f64();
        if out.solution.status != MipStatus::Optimal {
            return Err(format!("{key:?}: solver status {:?}", out.solution.status));
        }
        let run = Rc::new(Run {
            scenario: s,
            schedule: out.schedule.expect("optimal solve carries a schedule"),
            objective: out.solution.objective,
            secs,
        });
        self.0.borrow_mut().insert(key, run.clone());
        Ok(run)
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// closed-form Weibull speed law, written independently of the library
fn wind_mass_below(w: &WindParams, x: f64) -> f64 {
    let cdf = |v: f64| 1.0 - (-(v / w.scale_eps).powf(w.shape_m)).exp();
    let cut_out = 1.0 - cdf(w.v_out);
    if x <= 0.0 {
        0.0
    } else if x >= w.p_s {
        // everything except the rated atom [v_s, v_out)
        1.0 - (cdf(w.v_out) - cdf(w.v_s))
    } else {
        let v = w.v_in + x / w.p_s * (w.v_s - w.v_in);
        cdf(v) + cut_out
    }
}

fn pv_mass(p: &PvParams, a: f64, b: f64) -> f64 {
    let (a, b) = (a.max(0.0), b.min(p.p_max_pv));
    if b <= a {
        return 0.0;
    }
    simpson(&|x| p.density(x), a, b, 1e-12)
}

fn c1_sequences() -> Outcome {
    let t = Instant::now();
    let mut r = rng(101);
    let mut worst_sum: f64 = 0.0;
    let mut worst_bin: f64 = 0.0;
    let mut worst_ks: f64 = 0.0;
    for i in 0..50u64 {
        let q = if i % 2 == 0 { 1.0 } else { 0.5 };
        let w = WindParams::new(
            r.random_range(2.0..4.0),
            r.random_range(11.0..16.0),
            r.random_range(22.0..27.0),
            r.random_range(20.0..80.0),
            r.random_range(1.5..3.0),
            r.random_range(6.0..12.0),
        )
        .map_err(|e| e.to_string())?;
        let p = PvParams::new(r.random_range(1.2..8.0), r.random_range(1.2..8.0), r.random_range(20.0..150.0))
            .map_err(|e| e.to_string())?;

        let ws = discretize_wind(&w, q).map_err(|e| e.to_string())?;
        let n = grid_len(w.p_s, q);
        let mut raw = Vec::with_capacity(n + 1);
        for m in 0..n {
            let lo = if m == 0 { 0.0 } else { m as f64 * q - q / 2.0 };
            raw.push(wind_mass_below(&w, m as f64 * q + q / 2.0) - wind_mass_below(&w, lo));
        }
        raw.push(1.0 - wind_mass_below(&w, n as f64 * q - q / 2.0));
        worst_sum = worst_sum.max((raw.iter().sum::<f64>() - 1.0).abs());
        for (a, b) in raw.iter().zip(ws.probs()) {
            worst_bin = worst_bin.max((a - b).abs());
        }

        let ps = discretize_pv(&p, q).map_err(|e| e.to_string())?;
        let n = grid_len(p.p_max_pv, q);
        let raw: Vec<f64> = (0..=n)
            .map(|m| pv_mass(&p, m as f64 * q - q / 2.0, if m == n { p.p_max_pv } else { m as f64 * q + q / 2.0 }))
            .collect();
        worst_sum = worst_sum.max((raw.iter().sum::<f64>() - 1.0).abs());
        for (a, b) in raw.iter().zip(ps.probs()) {
            worst_bin = worst_bin.max((a - b).abs());
        }
        for s in [&ws, &ps] {
            worst_sum = worst_sum.max((s.probs().iter().sum::<f64>() - 1.0).abs());
        }

        for src in [Source::Wind(w), Source::Pv(p)] {
            let a = audit_discretization(&src, q, MC_SAMPLES, SEED + i).map_err(|e| e.to_string())?;
            worst_ks = worst_ks.max(a.distance);
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(worst_sum <= 1e-6, || format!("mass off by {worst_sum:e}"))?;
    ensure(worst_bin <= 1e-6, || format!("bin mass differs from oracle by {worst_bin:e}"))?;
    ensure(worst_ks < 0.01, || format!("Kolmogorov distance {worst_ks}"))?;
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("sum err {worst_sum:.1e}, bin err {worst_bin:.1e}, max KS {worst_ks:.4}, {secs:.1} s"))
}

fn c2_convolution() -> Outcome {
    let mut r = rng(202);
    let mut worst_e: f64 = 0.0;
    let q = 2.5;
    let random_seq = |r: &mut rand_chacha::ChaCha8Rng, dyadic: bool| -> ProbSeq {
        let len = r.random_range(1..=40);
        let probs = if dyadic {
            // 256 quanta of 1/256 scattered over the levels, so every product is exact
            let mut counts = vec![0u32; len];
            for _ in 0..256 {
                counts[r.random_range(0..len)] += 1;
            }
            counts.into_iter().map(|c| c as f64 / 256.0).collect()
        } else {
            let w: Vec<f64> = (0..len).map(|_| r.random::<f64>()).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        };
        ProbSeq::new(q, probs).unwrap()
    };
    for i in 0..100 {
        let a = random_seq(&mut r, i % 2 == 0);
        let b = random_seq(&mut r, i % 2 == 0);
        let c = a.convolve(&b).map_err(|e| e.to_string())?;
        let want = convolve_by_definition(a.probs(), b.probs());
        ensure(c.probs().len() == want.len(), || format!("pair {i}: length {} vs {}", c.probs().len(), want.len()))?;
        for (k, (x, y)) in c.probs().iter().zip(&want).enumerate() {
            ensure(x.to_bits() == y.to_bits(), || format!("pair {i} level {k}: {x:e} vs {y:e}"))?;
        }
        worst_e = worst_e.max((c.expectation() - a.expectation() - b.expectation()).abs());
    }
    ensure(worst_e <= 1e-9, || format!("expectation not additive: {worst_e:e}"))?;
    Ok(format!("100 pairs bit-identical, expectation err {worst_e:.1e}"))
}

fn c3_equivalence(runs: &Runs) -> Outcome {
    let mut notes = Vec::new();
    for (case, limit) in [("reduced_case", 10.0), ("paper_case", 120.0)] {
        let bin = runs.get(case, 3, 95, false)?;
        let qua = runs.get(case, 3, 95, true)?;
        let rel = (bin.objective - qua.objective).abs() / bin.objective.abs().max(1.0);
        ensure(rel <= 1e-6, || format!("{case}: objectives {} vs {} (rel {rel:e})", bin.objective, qua.objective))?;
        let q = bin.scenario.q_step;
        for t in 0..bin.schedule.horizon {
            let (a, b) = (bin.schedule.required_reserve[t], qua.schedule.required_reserve[t]);
            ensure((a - b).abs() <= q + 1e-9, || format!("{case} period {}: admitted reserve {a} vs {b}", t + 1))?;
        }
        for (name, run) in [("binary", &bin), ("quantile", &qua)] {
            ensure(run.secs < limit, || format!("{case} {name}: {:.1} s over {limit} s", run.secs))?;
        }
        notes.push(format!("{case} rel {rel:.1e} ({:.1}s/{:.1}s)", bin.secs, qua.secs));
    }
    Ok(notes.join(", "))
}

fn c4_coverage(runs: &Runs) -> Outcome {
    let run = runs.get("paper_case", 3, 95, false)?;
    let cov = monte_carlo_reserve_check(&run.scenario, &run.schedule, MC_SAMPLES, SEED).map_err(|e| e.to_string())?;
    let (t, min) = cov.iter().copied().enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    ensure(min >= 0.935, || format!("period {} covered with {min}", t + 1))?;
    Ok(format!("min coverage {min:.5} (period {})", t + 1))
}

fn c5_monotone(runs: &Runs) -> Outcome {
    let mut obj = Vec::new();
    for a in [80, 85, 90, 95, 99] {
        obj.push(runs.get("paper_case", 3, a, false)?.objective);
    }
    ensure(obj.windows(2).all(|w| w[0] <= w[1] + 1e-6 * w[1].abs()), || format!("objectives {obj:?}"))?;
    Ok(format!("{:.2} .. {:.2}", obj[0], obj[4]))
}

fn c6_mode_ordering(runs: &Runs) -> Outcome {
    let m: Vec<Rc<Run>> = [1, 2, 3].iter().map(|&k| runs.get("paper_case", k, 95, false)).collect::<Result<_, _>>()?;
    let obj: Vec<f64> = m.iter().map(|r| r.objective).collect();
    let cur: Vec<f64> = m.iter().map(|r| r.schedule.total_curtailment()).collect();
    let tol = 1e-6 * obj[0].abs();
    ensure(obj[0] >= obj[1] - tol && obj[1] >= obj[2] - tol, || format!("objectives {obj:?}"))?;
    ensure(cur[2] <= cur[1] + 1e-6 && cur[1] <= cur[0] + 1e-6, || format!("curtailment {cur:?}"))?;
    Ok(format!(
        "objective {:.3} >= {:.3} >= {:.3}, curtailment {:.2} <= {:.2} <= {:.2}",
        obj[0], obj[1], obj[2], cur[2], cur[1], cur[0]
    ))
}

fn c7_inertia(runs: &Runs) -> Outcome {
    let m3 = runs.get("paper_case", 3, 95, false)?;
    let m5 = runs.get("paper_case", 5, 95, false)?;
    let night = |r: &Run| r.schedule.curtailment[..7].iter().sum::<f64>();
    ensure(m3.objective <= m5.objective + 1e-6 * m5.objective.abs(), || {
        format!("objective {} > {}", m3.objective, m5.objective)
    })?;
    ensure(night(&m3) <= night(&m5) + 1e-6, || format!("night curtailment {} > {}", night(&m3), night(&m5)))?;
    Ok(format!(
        "objective {:.3} <= {:.3}, night curtailment {:.2} <= {:.2}",
        m3.objective,
        m5.objective,
        night(&m3),
        night(&m5)
    ))
}

fn c8_replay(runs: &Runs) -> Outcome {
    // make sure every mode contributes, then replay everything solved so far
    for m in 1..=6 {
        runs.get("paper_case", m, 95, false)?;
        runs.get("reduced_case", m, 95, false)?;
    }
    let all = runs.0.borrow();
    let mut worst: f64 = 0.0;
    for (key, run) in all.iter() {
        let rep = validate_schedule(&run.scenario, &run.schedule, REPLAY_TOL).map_err(|e| e.to_string())?;
        ensure(rep.pass, || format!("{key:?}: failing families {:?}", rep.failures()))?;
        let terminal = rep.family("terminal").ok_or("no terminal family")?;
        ensure(terminal.max_residual <= REPLAY_TOL, || format!("{key:?}: terminal residual {}", terminal.max_residual))?;
        worst = worst.max(rep.families.iter().map(|f| f.max_residual).fold(0.0, f64::max));
    }
    Ok(format!("{} schedules, worst residual {worst:.1e}", all.len()))
}

fn c9_solver() -> Outcome {
    let t = Instant::now();
    let close = |a: f64, b: f64, tol: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
    let mut optimal = 0;
    for seed in 0..200 {
        let model = random_milp(1000 + seed);
        let ours = solve(&model, &SolveOptions::default()).map_err(|e| e.to_string())?;
        match enumerate_milp(&model) {
            Naive::Optimal(obj, _) => {
                ensure(ours.status == MipStatus::Optimal && close(ours.objective, obj, 1e-9), || {
                    format!("milp {seed}: {:?} {} vs {obj}", ours.status, ours.objective)
                })?;
                optimal += 1;
            }
            Naive::Infeasible => ensure(ours.status == MipStatus::Infeasible, || format!("milp {seed}: {:?}", ours.status))?,
            Naive::Unbounded => return Err(format!("milp {seed}: oracle unbounded")),
        }
    }
    for seed in 0..200 {
        let model = random_lp(seed, 10, 10);
        let ours = solve_lp(&model, &LpOptions::default());
        match naive_lp(&model, &[]) {
            Naive::Optimal(obj, _) => ensure(ours.status == LpStatus::Optimal && close(ours.objective, obj, 1e-7), || {
                format!("lp {seed}: {:?} {} vs {obj}", ours.status, ours.objective)
            })?,
            Naive::Unbounded => ensure(ours.status == LpStatus::Unbounded, || format!("lp {seed}: {:?}", ours.status))?,
            Naive::Infeasible => ensure(ours.status == LpStatus::Infeasible, || format!("lp {seed}: {:?}", ours.status))?,
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1} s"))?;
    Ok(format!("200 MILPs ({optimal} feasible) and 200 LPs agree, {secs:.1} s"))
}

fn c10_building() -> Outcome {
    let base = read_scenario(scenario_path("paper_case")).map_err(|e| e.to_string())?;
    let b: BuildingParams = base.building.params;
    // K·F·ΔT = 0.5 W/m²K · 2.3e7 m² · 30 K
    let steady = heating_demand(&b, 20.0, 20.0, -10.0, 1.0);
    ensure((steady - 345.0).abs() < 1e-9, || format!("steady state {steady} MW"))?;

    let mut r = rng(1010);
    let mut round: f64 = 0.0;
    for _ in 0..1000 {
        let (now, prev, od, dt) = (r.random_range(10.0..30.0), r.random_range(10.0..30.0), r.random_range(-30.0..10.0), r.random_range(0.25..3.0));
        let p = heating_demand(&b, now, prev, od, dt);
        round = round.max((indoor_temp_step(&b, prev, od, p, dt) - now).abs());
        let heat = r.random_range(0.0..600.0);
        let next = indoor_temp_step(&b, prev, od, heat, dt);
        round = round.max((heating_demand(&b, next, prev, od, dt) - heat).abs() / heat.max(1.0));
    }
    ensure(round < 1e-9, || format!("round trip error {round:e}"))?;

    let mut t_in = 20.0;
    let mut drift: f64 = 0.0;
    for _ in 0..24 {
        t_in = indoor_temp_step(&b, t_in, -10.0, steady, 1.0);
        drift = drift.max((t_in - 20.0).abs());
    }
    ensure(drift < 1e-9, || format!("fixed point drift {drift:e}"))?;
    Ok(format!("steady {steady:.6} MW, round trip {round:.1e}, drift {drift:.1e}"))
}

fn main() {
    let runs = Runs::default();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("sequence correctness", Box::new(c1_sequences)),
        ("convolution oracle", Box::new(c2_convolution)),
        ("chance-constraint equivalence", Box::new(|| c3_equivalence(&runs))),
        ("statistical validity", Box::new(|| c4_coverage(&runs))),
        ("monotone cost in confidence", Box::new(|| c5_monotone(&runs))),
        ("mode ordering", Box::new(|| c6_mode_ordering(&runs))),
        ("thermal-inertia benefit", Box::new(|| c7_inertia(&runs))),
        ("constraint replay", Box::new(|| c8_replay(&runs))),
        ("embedded solver trust", Box::new(c9_solver)),
        ("building model", Box::new(c10_building)),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = match catch_unwind(AssertUnwindSafe(|| f())) {
            Ok(o) => o,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
