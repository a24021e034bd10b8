//! Run orchestration behind the `ies-sched` binary.
//!
//! A run covers every requested `(mode, α)` pair. Each pair is built, solved
//! (or only exported as an LP file), extracted, replayed by the harness and
//! written out. A pair that comes back infeasible is retried at `α − 0.01`
//! down to [`ALPHA_FLOOR`]. Pairs run in parallel; the plot tables and the
//! summary are written once all of them are done.
//!
//! Output layout under the output directory, with `<tag>` = `mode<m>_alpha<α>`:
//!
//! | file                       | content                                     |
//! |----------------------------|---------------------------------------------|
//! | `<tag>.schedule.json`      | run record and the full schedule            |
//! | `<tag>.validation.json`    | harness report                              |
//! | `<tag>.devices.csv`        | device outputs by period                    |
//! | `<tag>.lp`                 | model in LP format (export mode only)       |
//! | `reserve_vs_alpha.csv`     | required and scheduled reserve per period   |
//! | `cost_vs_alpha.csv`        | objective and true cost per run             |
//! | `curtailment_by_mode.csv`  | forecast, used and curtailed renewables     |
//! | `summary.json`, `summary.csv` | one row per run                          |
//!
//! Numbers are printed in shortest round-trip form, so rerunning a
//! configuration rewrites identical bytes.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::harness::{monte_carlo_reserve_check, validate_schedule, ValidationReport, COVERAGE_ALLOWANCE, MIN_SAMPLES};
use crate::milp::{write_lp, MipStatus, SolveOptions};
use crate::scheduler::{
    apply_mode, build_model, read_scenario, solve_scenario, ChanceFormulation, CostBreakdown, Mode, Scenario, Schedule,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Lowest confidence level the infeasibility retry steps down to.
pub const ALPHA_FLOOR: f64 = 0.80;

/// Residual tolerance for the constraint replay.
pub const REPLAY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Embedded,
    LpExport,
}

impl FromStr for SolverChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "embedded" => Ok(SolverChoice::Embedded),
            "lp-export" | "lp-export-only" => Ok(SolverChoice::LpExport),
            _ => Err(invalid(format!("solver must be `embedded` or `lp-export`, got `{s}`"))),
        }
    }
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverChoice::Embedded => "embedded",
            SolverChoice::LpExport => "lp-export",
        })
    }
}

/// `1`..`6` or `all`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeSelection {
    Single(Mode),
    All,
}

impl ModeSelection {
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeSelection::Single(m) => vec![m],
            ModeSelection::All => Mode::ALL.to_vec(),
        }
    }
}

impl FromStr for ModeSelection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("all") {
            return Ok(ModeSelection::All);
        }
        let m: u8 = s.parse().map_err(|_| invalid(format!("mode must be 1..6 or `all`, got `{s}`")))?;
        Ok(ModeSelection::Single(Mode::new(m)?))
    }
}

pub fn parse_chance(s: &str) -> Result<ChanceFormulation> {
    match s {
        "binary" => Ok(ChanceFormulation::Binary),
        "quantile" => Ok(ChanceFormulation::Quantile),
        _ => Err(invalid(format!("chance formulation must be `binary` or `quantile`, got `{s}`"))),
    }
}

/// Comma-separated confidence levels, each in (0, 1].
pub fn parse_alpha_list(s: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = s
        .split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<f64>().map_err(|_| invalid(format!("`{x}` is not a number"))))
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(invalid("alpha list is empty"));
    }
    if let Some(a) = out.iter().find(|a| !(**a > 0.0 && **a <= 1.0)) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {a}")));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: PathBuf,
    /// `None` uses the scenario's own mode, or mode 3 if it names none.
    pub modes: Option<ModeSelection>,
    /// `None` uses the scenario's `alpha`.
    pub alphas: Option<Vec<f64>>,
    pub chance: Option<ChanceFormulation>,
    pub solver: SolverChoice,
    pub q: Option<f64>,
    /// 0 skips the Monte Carlo check.
    pub mc_samples: usize,
    pub seed: u64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(scenario: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            scenario: scenario.into(),
            modes: None,
            alphas: None,
            chance: None,
            solver: SolverChoice::Embedded,
            q: None,
            mc_samples: 100_000,
            seed: 2024,
            out: out.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.scenario.is_file() {
            return Err(invalid(format!("scenario file {} does not exist", self.scenario.display())));
        }
        if let Some(a) = &self.alphas {
            if a.is_empty() || a.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
                return Err(invalid("alpha values must lie in (0, 1]"));
            }
        }
        if let Some(q) = self.q {
            if !(q.is_finite() && q > 0.0) {
                return Err(invalid(format!("q must be positive, got {q}")));
            }
        }
        if self.mc_samples != 0 && self.mc_samples < MIN_SAMPLES {
            return Err(invalid(format!("Monte Carlo needs 0 or at least {MIN_SAMPLES} samples, got {}", self.mc_samples)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Attempt {
    pub alpha: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub mode: u8,
    pub tag: String,
    pub alpha_requested: f64,
    /// Confidence level of the last attempt.
    pub alpha: f64,
    pub chance_formulation: ChanceFormulation,
    pub q_step: f64,
    pub attempts: Vec<Attempt>,
    pub status: String,
    pub objective: Option<f64>,
    pub best_bound: Option<f64>,
    pub nodes: usize,
    pub costs: Option<CostBreakdown>,
    pub total_curtailment: Option<f64>,
    pub validation_pass: Option<bool>,
    pub min_coverage: Option<f64>,
    /// Reached a solution that passed validation, or exported cleanly.
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub scenario: String,
    pub solver: SolverChoice,
    pub mc_samples: usize,
    pub seed: u64,
    pub runs: Vec<RunRecord>,
}

impl RunSummary {
    pub fn all_ok(&self) -> bool {
        self.runs.iter().all(|r| r.ok)
    }

    /// 0 when every run succeeded, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_ok() {
            0
        } else {
            1
        }
    }
}

#[derive(Serialize)]
struct ScheduleDoc<'a> {
    schema_version: u32,
    run: &'a RunRecord,
    schedule: &'a Schedule,
}

#[derive(Serialize)]
struct ReportDoc<'a> {
    schema_version: u32,
    tag: &'a str,
    report: &'a ValidationReport,
}

pub fn run_tag(mode: Mode, alpha: f64) -> String {
    format!("mode{}_alpha{}", mode.number(), alpha)
}

fn step_down(alpha: f64) -> f64 {
    ((alpha * 100.0).round() - 1.0) / 100.0
}

fn status_name(s: MipStatus) -> String {
    format!("{s:?}")
}

struct RunOutput {
    record: RunRecord,
    schedule: Option<Schedule>,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn run_one(cfg: &RunConfig, base: &Scenario, mode: Mode, alpha_req: f64) -> Result<RunOutput> {
    base.check_mode(mode)?;
    let mut s = apply_mode(base, mode);
    if let Some(q) = cfg.q {
        s.q_step = q;
    }
    if let Some(c) = cfg.chance {
        s.chance_formulation = c;
    }
    s.alpha = alpha_req;
    let tag = run_tag(mode, alpha_req);
    let mut record = RunRecord {
        mode: mode.number(),
        tag: tag.clone(),
        alpha_requested: alpha_req,
        alpha: alpha_req,
        chance_formulation: s.chance_formulation,
        q_step: s.q_step,
        attempts: Vec::new(),
        status: String::new(),
        objective: None,
        best_bound: None,
        nodes: 0,
        costs: None,
        total_curtailment: None,
        validation_pass: None,
        min_coverage: None,
        ok: false,
    };

    if cfg.solver == SolverChoice::LpExport {
        let model = build_model(&s)?;
        std::fs::write(cfg.out.join(format!("{tag}.lp")), write_lp(&model))?;
        record.status = "Exported".into();
        record.attempts.push(Attempt {
            alpha: alpha_req,
            status: record.status.clone(),
        });
        record.ok = true;
        return Ok(RunOutput { record, schedule: None });
    }

    let opts = SolveOptions::default();
    let mut alpha = alpha_req;
    let solved = loop {
        s.alpha = alpha;
        let out = solve_scenario(&s, &opts)?;
        record.attempts.push(Attempt {
            alpha,
            status: status_name(out.solution.status),
        });
        let retry = out.solution.status == MipStatus::Infeasible && s.uncertainty && step_down(alpha) >= ALPHA_FLOOR - 1e-12;
        if !retry {
            break out;
        }
        alpha = step_down(alpha);
    };
    record.alpha = alpha;
    record.status = status_name(solved.solution.status);
    record.nodes = solved.solution.nodes;
    let Some(sched) = solved.schedule else {
        return Ok(RunOutput { record, schedule: None });
    };
    record.objective = Some(solved.solution.objective);
    record.best_bound = Some(solved.solution.best_bound);
    record.costs = Some(sched.costs);
    record.total_curtailment = Some(sched.total_curtailment());

    let mut report = validate_schedule(&s, &sched, REPLAY_TOL)?;
    if cfg.mc_samples > 0 && s.uncertainty {
        let cov = monte_carlo_reserve_check(&s, &sched, cfg.mc_samples, cfg.seed)?;
        record.min_coverage = cov.iter().copied().reduce(f64::min);
        report.attach_coverage(cov, s.alpha, COVERAGE_ALLOWANCE, cfg.mc_samples, cfg.seed);
    }
    record.validation_pass = Some(report.pass);
    record.ok = report.pass;

    write_json(
        &cfg.out.join(format!("{tag}.validation.json")),
        &ReportDoc {
            schema_version: SCHEMA_VERSION,
            tag: &tag,
            report: &report,
        },
    )?;
    write_json(
        &cfg.out.join(format!("{tag}.schedule.json")),
        &ScheduleDoc {
            schema_version: SCHEMA_VERSION,
            run: &record,
            schedule: &sched,
        },
    )?;
    std::fs::write(cfg.out.join(format!("{tag}.devices.csv")), devices_csv(&s, &sched))?;
    Ok(RunOutput {
        record,
        schedule: Some(sched),
    })
}

/// Device outputs by period for one run.
pub fn devices_csv(s: &Scenario, sched: &Schedule) -> String {
    let mut cols: Vec<(String, &Vec<f64>)> = Vec::new();
    for th in &sched.thermal {
        cols.push((format!("{}_power", th.name), &th.power));
        cols.push((format!("{}_reserve", th.name), &th.reserve));
    }
    for ch in &sched.chp {
        cols.push((format!("{}_power_e", ch.name), &ch.power_e));
        cols.push((format!("{}_power_h", ch.name), &ch.power_h));
        cols.push((format!("{}_reserve", ch.name), &ch.reserve));
        if let (Some(p), Some(c)) = (&ch.hst_power, &ch.hst_level) {
            cols.push((format!("{}_hst_power", ch.name), p));
            cols.push((format!("{}_hst_level", ch.name), c));
        }
    }
    if let Some(b) = &sched.bess {
        cols.push(("bess_charge".into(), &b.charge));
        cols.push(("bess_discharge".into(), &b.discharge));
        cols.push(("bess_soc".into(), &b.soc));
        cols.push(("bess_reserve".into(), &b.reserve));
    }
    if let Some(e) = &sched.eb_power {
        cols.push(("eb_power".into(), e));
    }
    cols.push(("renewable_expected".into(), &sched.renewable_expected));
    cols.push(("renewable_used".into(), &sched.renewable_used));
    cols.push(("curtailment".into(), &sched.curtailment));
    cols.push(("heat_load".into(), &sched.heat_load));
    cols.push(("indoor_temp".into(), &sched.indoor_temp));
    cols.push(("total_reserve".into(), &sched.total_reserve));

    let mut out = String::from("period,elec_load,t_outdoor");
    for (name, _) in &cols {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for t in 0..sched.horizon {
        let _ = write!(out, "{},{},{}", t + 1, s.elec_load[t], s.t_outdoor[t]);
        for (_, v) in &cols {
            let _ = write!(out, ",{}", v[t]);
        }
        out.push('\n');
    }
    out
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn plot_tables(outputs: &[RunOutput]) -> [(&'static str, String); 4] {
    let mut reserve = String::from("mode,alpha,period,required_reserve,scheduled_reserve\n");
    let mut cost = String::from("mode,alpha,status,objective,true_cost,c1,c2,c3\n");
    let mut curt = String::from("mode,alpha,period,renewable_expected,renewable_used,curtailment\n");
    for o in outputs {
        let r = &o.record;
        let _ = writeln!(
            cost,
            "{},{},{},{},{},{},{},{}",
            r.mode,
            r.alpha,
            r.status,
            opt(r.objective),
            opt(r.costs.map(|c| c.total)),
            opt(r.costs.map(|c| c.c1)),
            opt(r.costs.map(|c| c.c2)),
            opt(r.costs.map(|c| c.c3))
        );
        if let Some(s) = &o.schedule {
            for t in 0..s.horizon {
                let _ = writeln!(reserve, "{},{},{},{},{}", r.mode, r.alpha, t + 1, s.required_reserve[t], s.total_reserve[t]);
                let _ = writeln!(
                    curt,
                    "{},{},{},{},{},{}",
                    r.mode,
                    r.alpha,
                    t + 1,
                    s.renewable_expected[t],
                    s.renewable_used[t],
                    s.curtailment[t]
                );
            }
        }
    }
    let mut summary = String::from("tag,mode,alpha_requested,alpha,status,attempts,objective,true_cost,total_curtailment,nodes,validation_pass,min_coverage,ok\n");
    for o in outputs {
        let r = &o.record;
        let _ = writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.tag,
            r.mode,
            r.alpha_requested,
            r.alpha,
            r.status,
            r.attempts.len(),
            opt(r.objective),
            opt(r.costs.map(|c| c.total)),
            opt(r.total_curtailment),
            r.nodes,
            r.validation_pass.map(|b| b.to_string()).unwrap_or_default(),
            opt(r.min_coverage),
            r.ok
        );
    }
    [
        ("reserve_vs_alpha.csv", reserve),
        ("cost_vs_alpha.csv", cost),
        ("curtailment_by_mode.csv", curt),
        ("summary.csv", summary),
    ]
}

/// Runs every requested `(mode, α)` pair and writes all artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    cfg.validate()?;
    let base = read_scenario(&cfg.scenario)?;
    let modes = match cfg.modes {
        Some(sel) => sel.modes(),
        None => vec![base.mode.unwrap_or(Mode::new(3)?)],
    };
    for &m in &modes {
        base.check_mode(m)?;
    }
    let alphas = cfg.alphas.clone().unwrap_or_else(|| vec![base.alpha]);
    std::fs::create_dir_all(&cfg.out)?;

    let pairs: Vec<(Mode, f64)> = modes.iter().flat_map(|&m| alphas.iter().map(move |&a| (m, a))).collect();
    let outputs: Vec<RunOutput> = pairs
        .par_iter()
        .map(|&(m, a)| run_one(cfg, &base, m, a))
        .collect::<Result<_>>()?;

    let [reserve, cost, curt, table] = plot_tables(&outputs);
    if cfg.solver == SolverChoice::Embedded {
        for (name, text) in [reserve, cost, curt] {
            std::fs::write(cfg.out.join(name), text)?;
        }
    }
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        scenario: base.name.clone(),
        solver: cfg.solver,
        mc_samples: cfg.mc_samples,
        seed: cfg.seed,
        runs: outputs.into_iter().map(|o| o.record).collect(),
    };
    std::fs::write(cfg.out.join(table.0), table.1)?;
    write_json(&cfg.out.join("summary.json"), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flags() {
        assert_eq!("all".parse::<ModeSelection>().unwrap(), ModeSelection::All);
        assert_eq!("4".parse::<ModeSelection>().unwrap().modes(), vec![Mode::new(4).unwrap()]);
        assert!("7".parse::<ModeSelection>().is_err());
        assert_eq!(parse_alpha_list("0.9, 0.95").unwrap(), vec![0.9, 0.95]);
        assert!(parse_alpha_list("0.9,1.2").is_err());
        assert!(parse_alpha_list("").is_err());
        assert_eq!("lp-export".parse::<SolverChoice>().unwrap(), SolverChoice::LpExport);
        assert!(parse_chance("exact").is_err());
    }

    #[test]
    fn alpha_steps_are_exact_hundredths() {
        let mut a = 0.95;
        let mut seen = vec![];
        while a >= ALPHA_FLOOR - 1e-12 {
            seen.push(a);
            a = step_down(a);
        }
        assert_eq!(seen.len(), 16);
        assert_eq!(*seen.last().unwrap(), 0.8);
        assert_eq!(run_tag(Mode::new(3).unwrap(), 0.9), "mode3_alpha0.9");
    }
}
