//! Bounded-variable simplex on a dense dictionary.
//!
//! Every row gets a logical variable `s_i = a_i·x` whose bounds encode the
//! row sense, so all rows are homogeneous and the dictionary reads
//! `x_B = T·x_N`. Nonbasic variables sit at one of their bounds (free ones at
//! zero). The primal method uses a composite phase 1 that minimizes the sum
//! of infeasibilities; the dual method is used whenever the starting basis is
//! dual feasible, which is always the case after branching on binaries.
//! Both use a two-pass Harris ratio test and fall back to Bland's rule when
//! the objective stalls.

use std::time::Instant;

use serde::Serialize;

use super::model::{MilpModel, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    TimeLimit,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Row duals: change in objective per unit increase of the right-hand side.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct LpOptions {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub max_iterations: usize,
    pub deadline: Option<Instant>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            max_iterations: 1_000_000,
            deadline: None,
        }
    }
}

/// Solves the continuous relaxation of `model` (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MilpModel, opts: &LpOptions) -> LpSolution {
    let mut dict = Dictionary::new(model, opts);
    let status = dict.optimize();
    dict.solution(status)
}

const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const STALL_LIMIT: usize = 60;
const REFRESH_EVERY: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pos {
    Basic(usize),
    Nonbasic(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Done,
    Infeasible,
    Unbounded,
    Limit(LpStatus),
    /// Dual feasibility was lost; the caller should continue with the primal method.
    Lost,
}

#[derive(Debug, Clone)]
pub(crate) struct Dictionary {
    n_struct: usize,
    m: usize,
    /// Row-major `m × n_struct` coefficients of `x_B = T·x_N`.
    t: Vec<f64>,
    /// Reduced costs of the nonbasic columns.
    d: Vec<f64>,
    cost: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    x: Vec<f64>,
    basic: Vec<usize>,
    nonbasic: Vec<usize>,
    pos: Vec<Pos>,
    rows: Vec<Vec<(usize, f64)>>,
    obj_constant: f64,
    feas_tol: f64,
    opt_tol: f64,
    max_iterations: usize,
    deadline: Option<Instant>,
    pub(crate) iterations: usize,
    since_refresh: usize,
    since_refactor: usize,
}

impl Dictionary {
    pub(crate) fn new(model: &MilpModel, opts: &LpOptions) -> Self {
        let n = model.vars.len();
        let m = model.constraints.len();
        let mut t = vec![0.0; m * n];
        let mut rows = Vec::with_capacity(m);
        let mut lb = Vec::with_capacity(n + m);
        let mut ub = Vec::with_capacity(n + m);
        let mut cost = vec![0.0; n + m];
        for (j, v) in model.vars.iter().enumerate() {
            lb.push(v.lb);
            ub.push(v.ub);
            cost[j] = v.obj;
        }
        for (i, c) in model.constraints.iter().enumerate() {
            for &(j, a) in &c.terms {
                t[i * n + j] += a;
            }
            rows.push(c.terms.clone());
            let (l, u) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lb.push(l);
            ub.push(u);
        }
        let mut pos = Vec::with_capacity(n + m);
        pos.extend((0..n).map(Pos::Nonbasic));
        pos.extend((0..m).map(Pos::Basic));
        let mut dict = Self {
            n_struct: n,
            m,
            t,
            d: cost[..n].to_vec(),
            cost,
            lb,
            ub,
            x: vec![0.0; n + m],
            basic: (n..n + m).collect(),
            nonbasic: (0..n).collect(),
            pos,
            rows,
            obj_constant: model.obj_constant,
            feas_tol: opts.feasibility_tol,
            opt_tol: opts.optimality_tol,
            max_iterations: opts.max_iterations,
            deadline: opts.deadline,
            iterations: 0,
            since_refresh: 0,
            since_refactor: 0,
        };
        for k in 0..n {
            let j = dict.nonbasic[k];
            dict.x[j] = dict.preferred_value(j, dict.d[k]);
        }
        dict.recompute_basics();
        dict
    }

    /// Changes the bounds of a structural variable, moving it if nonbasic.
    pub(crate) fn set_bounds(&mut self, j: usize, lb: f64, ub: f64) {
        if self.lb[j] == lb && self.ub[j] == ub {
            return;
        }
        self.lb[j] = lb;
        self.ub[j] = ub;
        if let Pos::Nonbasic(k) = self.pos[j] {
            let target = self.preferred_value(j, self.d[k]);
            self.move_nonbasic(k, target);
        }
    }

    pub(crate) fn values(&self) -> &[f64] {
        &self.x[..self.n_struct]
    }

    pub(crate) fn objective(&self) -> f64 {
        self.obj_constant + (0..self.n_struct).map(|j| self.cost[j] * self.x[j]).sum::<f64>()
    }

    pub(crate) fn solution(&self, status: LpStatus) -> LpSolution {
        let duals = (0..self.m)
            .map(|i| match self.pos[self.n_struct + i] {
                Pos::Nonbasic(k) => self.d[k],
                Pos::Basic(_) => 0.0,
            })
            .collect();
        LpSolution {
            status,
            objective: self.objective(),
            values: self.values().to_vec(),
            duals,
            iterations: self.iterations,
        }
    }

    /// Bound a nonbasic variable should rest at given its reduced cost.
    fn preferred_value(&self, j: usize, dj: f64) -> f64 {
        let (l, u) = (self.lb[j], self.ub[j]);
        let finite_l = l.is_finite();
        let finite_u = u.is_finite();
        if dj > 0.0 && finite_l {
            l
        } else if dj < 0.0 && finite_u {
            u
        } else if finite_l {
            l
        } else if finite_u {
            u
        } else {
            0.0
        }
    }

    fn move_nonbasic(&mut self, k: usize, target: f64) {
        let j = self.nonbasic[k];
        let delta = target - self.x[j];
        if delta == 0.0 {
            return;
        }
        self.x[j] = target;
        let n = self.n_struct;
        for i in 0..self.m {
            let a = self.t[i * n + k];
            if a != 0.0 {
                self.x[self.basic[i]] += a * delta;
            }
        }
    }

    fn recompute_basics(&mut self) {
        let n = self.n_struct;
        for i in 0..self.m {
            let row = &self.t[i * n..(i + 1) * n];
            let mut v = 0.0;
            for (k, &a) in row.iter().enumerate() {
                if a != 0.0 {
                    v += a * self.x[self.nonbasic[k]];
                }
            }
            self.x[self.basic[i]] = v;
        }
    }

    fn recompute_reduced_costs(&mut self) {
        let n = self.n_struct;
        for k in 0..n {
            self.d[k] = self.cost[self.nonbasic[k]];
        }
        for i in 0..self.m {
            let c = self.cost[self.basic[i]];
            if c == 0.0 {
                continue;
            }
            let row = &self.t[i * n..(i + 1) * n];
            for (dk, &a) in self.d.iter_mut().zip(row) {
                *dk += c * a;
            }
        }
    }

    fn refresh(&mut self) {
        self.recompute_basics();
        self.recompute_reduced_costs();
        self.since_refresh = 0;
    }

    /// Largest violation of the original rows by the current values.
    fn row_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.rows.iter().enumerate() {
            let act: f64 = row.iter().map(|&(j, a)| a * self.x[j]).sum();
            let scale = 1.0 + act.abs();
            worst = worst.max((act - self.x[self.n_struct + i]).abs() / scale);
        }
        worst
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let v = self.x[j];
        if v < self.lb[j] - self.feas_tol {
            self.lb[j] - v
        } else if v > self.ub[j] + self.feas_tol {
            v - self.ub[j]
        } else {
            0.0
        }
    }

    fn primal_feasible(&self) -> bool {
        self.basic.iter().all(|&j| self.infeasibility(j) == 0.0)
    }

    fn can_increase(&self, j: usize) -> bool {
        self.x[j] < self.ub[j]
    }

    fn can_decrease(&self, j: usize) -> bool {
        self.x[j] > self.lb[j]
    }

    /// Moves nonbasics to the bound matching their reduced-cost sign.
    /// Returns false when some column cannot be made dual feasible.
    fn make_dual_feasible(&mut self) -> bool {
        let mut ok = true;
        for k in 0..self.n_struct {
            let j = self.nonbasic[k];
            let dk = self.d[k];
            if (dk > self.opt_tol && self.can_decrease(j)) || (dk < -self.opt_tol && self.can_increase(j)) {
                let target = self.preferred_value(j, dk);
                self.move_nonbasic(k, target);
                if (dk > self.opt_tol && self.can_decrease(j)) || (dk < -self.opt_tol && self.can_increase(j)) {
                    ok = false;
                }
            }
        }
        ok
    }

    fn pivot(&mut self, r: usize, k: usize) {
        let n = self.n_struct;
        let p = self.t[r * n + k];
        let inv = 1.0 / p;
        let mut nz: Vec<(usize, f64)> = Vec::new();
        {
            let row = &mut self.t[r * n..(r + 1) * n];
            for (j, v) in row.iter_mut().enumerate() {
                if j == k {
                    *v = inv;
                } else if *v != 0.0 {
                    *v = -*v * inv;
                    nz.push((j, *v));
                }
            }
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i * n + k];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * n..(i + 1) * n];
            for &(j, v) in &nz {
                let nv = row[j] + f * v;
                row[j] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
            row[k] = f * inv;
        }
        let f = self.d[k];
        if f != 0.0 {
            for &(j, v) in &nz {
                self.d[j] += f * v;
            }
        }
        self.d[k] = f * inv;

        let entering = self.nonbasic[k];
        let leaving = self.basic[r];
        self.basic[r] = entering;
        self.nonbasic[k] = leaving;
        self.pos[entering] = Pos::Basic(r);
        self.pos[leaving] = Pos::Nonbasic(k);
        self.iterations += 1;
        self.since_refresh += 1;
        self.since_refactor += 1;
    }

    fn check_limits(&self, start_iterations: usize) -> Option<LpStatus> {
        if self.iterations - start_iterations >= self.max_iterations {
            return Some(LpStatus::IterationLimit);
        }
        if self.iterations % 16 == 0 {
            if let Some(deadline) = self.deadline {
                if Instant::now() >= deadline {
                    return Some(LpStatus::TimeLimit);
                }
            }
        }
        None
    }

    /// Runs to optimality from the current basis.
    pub(crate) fn optimize(&mut self) -> LpStatus {
        let mut status = self.optimize_once();
        // Verdicts reached on an updated dictionary are confirmed on one rebuilt
        // from the original rows: round-off can fake a tiny bound violation.
        for _ in 0..2 {
            let suspect = match status {
                LpStatus::Optimal => self.row_residual() > self.feas_tol,
                LpStatus::Infeasible => true,
                _ => false,
            };
            if !suspect || self.since_refactor == 0 {
                break;
            }
            self.refactor();
            status = self.optimize_once();
        }
        if status == LpStatus::Optimal && self.row_residual() > self.feas_tol {
            status = LpStatus::NumericalFailure;
        }
        status
    }

    fn optimize_once(&mut self) -> LpStatus {
        if self.since_refresh >= REFRESH_EVERY {
            self.refresh();
        }
        if self.make_dual_feasible() {
            match self.dual_simplex() {
                Outcome::Done => {}
                Outcome::Infeasible => return LpStatus::Infeasible,
                Outcome::Limit(s) => return s,
                Outcome::Lost | Outcome::Unbounded => {}
            }
        }
        for _ in 0..3 {
            match self.primal_simplex() {
                Outcome::Done => {
                    // a refresh can expose drift; confirm on fresh values
                    self.refresh();
                    if self.primal_feasible() && self.dual_infeasible_column(false).is_none() {
                        return LpStatus::Optimal;
                    }
                }
                Outcome::Infeasible => {
                    self.refresh();
                    if !self.primal_feasible() {
                        return LpStatus::Infeasible;
                    }
                }
                Outcome::Unbounded => return LpStatus::Unbounded,
                Outcome::Limit(s) => return s,
                Outcome::Lost => {}
            }
        }
        LpStatus::NumericalFailure
    }

    fn dual_simplex(&mut self) -> Outcome {
        let start = self.iterations;
        let n = self.n_struct;
        let mut stall = 0usize;
        let mut last_obj = f64::NEG_INFINITY;
        loop {
            if let Some(s) = self.check_limits(start) {
                return Outcome::Limit(s);
            }
            if self.since_refresh >= REFRESH_EVERY {
                self.refresh();
                if !self.make_dual_feasible() {
                    return Outcome::Lost;
                }
            }
            // leaving row: largest bound violation (lowest index under Bland)
            let bland = stall > STALL_LIMIT;
            let mut r = usize::MAX;
            let mut worst = 0.0;
            for i in 0..self.m {
                let inf = self.infeasibility(self.basic[i]);
                if inf > 0.0 && (r == usize::MAX || (!bland && inf > worst) || (bland && self.basic[i] < self.basic[r])) {
                    r = i;
                    worst = inf;
                }
            }
            if r == usize::MAX {
                return Outcome::Done;
            }
            let l = self.basic[r];
            let below = self.x[l] < self.lb[l];
            let target = if below { self.lb[l] } else { self.ub[l] };
            let row = &self.t[r * n..(r + 1) * n];
            // entering columns must move x_l towards its violated bound
            let eligible = |k: usize, a: f64| -> bool {
                let j = self.nonbasic[k];
                let up = if below { a > 0.0 } else { a < 0.0 };
                if up {
                    self.can_increase(j)
                } else {
                    self.can_decrease(j)
                }
            };
            let mut bound = f64::INFINITY;
            for (k, &a) in row.iter().enumerate() {
                if a.abs() > PIVOT_TOL && eligible(k, a) {
                    bound = bound.min((self.d[k].abs() + self.opt_tol) / a.abs());
                }
            }
            if bound == f64::INFINITY {
                return Outcome::Infeasible;
            }
            let mut enter = usize::MAX;
            let mut best = 0.0;
            for (k, &a) in row.iter().enumerate() {
                if a.abs() > PIVOT_TOL && eligible(k, a) && self.d[k].abs() / a.abs() <= bound {
                    let better = if bland {
                        enter == usize::MAX || self.nonbasic[k] < self.nonbasic[enter]
                    } else {
                        a.abs() > best
                    };
                    if better {
                        enter = k;
                        best = a.abs();
                    }
                }
            }
            let a = row[enter];
            let theta = (target - self.x[l]) / a;
            let e = self.nonbasic[enter];
            self.x[e] += theta;
            for i in 0..self.m {
                let c = self.t[i * n + enter];
                if c != 0.0 {
                    self.x[self.basic[i]] += c * theta;
                }
            }
            self.x[l] = target;
            self.pivot(r, enter);
            let obj = self.objective();
            if obj <= last_obj + 1e-12 * (1.0 + obj.abs()) {
                stall += 1;
            } else {
                stall = 0;
            }
            last_obj = obj;
            // the entering variable may have been pushed past its own bound
            // which the next iterations repair; reduced costs must stay sane
            if self.dual_infeasible_column(true).is_some() {
                return Outcome::Lost;
            }
        }
    }

    /// A column whose reduced cost has the wrong sign beyond tolerance.
    fn dual_infeasible_column(&self, loose: bool) -> Option<usize> {
        let tol = if loose { 1e-7 } else { self.opt_tol };
        (0..self.n_struct).find(|&k| {
            let j = self.nonbasic[k];
            let dk = self.d[k];
            (dk < -tol && self.can_increase(j)) || (dk > tol && self.can_decrease(j))
        })
    }

    fn primal_simplex(&mut self) -> Outcome {
        let start = self.iterations;
        let n = self.n_struct;
        let mut stall = 0usize;
        let mut last_merit = f64::INFINITY;
        let mut d1 = vec![0.0; n];
        loop {
            if let Some(s) = self.check_limits(start) {
                return Outcome::Limit(s);
            }
            if self.since_refresh >= REFRESH_EVERY {
                self.refresh();
            }
            // phase-1 weights
            let mut infeasible = false;
            d1.iter_mut().for_each(|v| *v = 0.0);
            let mut merit = 0.0;
            for i in 0..self.m {
                let j = self.basic[i];
                let w = if self.x[j] < self.lb[j] - self.feas_tol {
                    merit += self.lb[j] - self.x[j];
                    -1.0
                } else if self.x[j] > self.ub[j] + self.feas_tol {
                    merit += self.x[j] - self.ub[j];
                    1.0
                } else {
                    continue;
                };
                infeasible = true;
                let row = &self.t[i * n..(i + 1) * n];
                for (v, &a) in d1.iter_mut().zip(row) {
                    *v += w * a;
                }
            }
            if !infeasible {
                merit = self.objective();
            }
            if merit < last_merit - 1e-12 * (1.0 + merit.abs()) {
                stall = 0;
            } else {
                stall += 1;
            }
            last_merit = merit;
            let bland = stall > STALL_LIMIT;
            let price: &[f64] = if infeasible { &d1 } else { &self.d };

            let mut enter = usize::MAX;
            let mut best = 0.0;
            let mut dir = 0.0;
            for (k, &dk) in price.iter().enumerate() {
                let j = self.nonbasic[k];
                let cand = if dk < -self.opt_tol && self.can_increase(j) {
                    1.0
                } else if dk > self.opt_tol && self.can_decrease(j) {
                    -1.0
                } else {
                    continue;
                };
                let better = if bland {
                    enter == usize::MAX || j < self.nonbasic[enter]
                } else {
                    dk.abs() > best
                };
                if better {
                    enter = k;
                    best = dk.abs();
                    dir = cand;
                }
            }
            if enter == usize::MAX {
                return if infeasible { Outcome::Infeasible } else { Outcome::Done };
            }
            let e = self.nonbasic[enter];

            // ratio test
            let harris = if bland { 0.0 } else { self.feas_tol * 0.1 };
            let limit_of = |i: usize, relax: f64| -> Option<(f64, f64)> {
                let a = self.t[i * n + enter] * dir;
                if a.abs() <= PIVOT_TOL {
                    return None;
                }
                let j = self.basic[i];
                let v = self.x[j];
                let (l, u) = (self.lb[j], self.ub[j]);
                if a > 0.0 {
                    if v > u + self.feas_tol {
                        return None;
                    }
                    let cap = if v < l - self.feas_tol { l } else { u };
                    if cap == f64::INFINITY {
                        return None;
                    }
                    Some(((cap + relax - v) / a, cap))
                } else {
                    if v < l - self.feas_tol {
                        return None;
                    }
                    let cap = if v > u + self.feas_tol { u } else { l };
                    if cap == f64::NEG_INFINITY {
                        return None;
                    }
                    Some(((v - cap + relax) / -a, cap))
                }
            };
            let mut theta_max = f64::INFINITY;
            for i in 0..self.m {
                if let Some((ratio, _)) = limit_of(i, harris) {
                    theta_max = theta_max.min(ratio);
                }
            }
            let span = self.ub[e] - self.lb[e];
            if span <= theta_max {
                // bound flip, no basis change
                if span == f64::INFINITY {
                    return if infeasible { Outcome::Lost } else { Outcome::Unbounded };
                }
                let target = if dir > 0.0 { self.ub[e] } else { self.lb[e] };
                self.move_nonbasic(enter, target);
                self.iterations += 1;
                continue;
            }
            let mut leave = usize::MAX;
            let mut leave_cap = 0.0;
            let mut leave_ratio = 0.0;
            let mut best_a = 0.0;
            for i in 0..self.m {
                if let Some((ratio, cap)) = limit_of(i, 0.0) {
                    if ratio <= theta_max {
                        let a = self.t[i * n + enter].abs();
                        let better = if bland {
                            leave == usize::MAX
                                || ratio < leave_ratio
                                || (ratio == leave_ratio && self.basic[i] < self.basic[leave])
                        } else {
                            a > best_a
                        };
                        if better {
                            leave = i;
                            leave_cap = cap;
                            leave_ratio = ratio;
                            best_a = a;
                        }
                    }
                }
            }
            let theta = leave_ratio.max(0.0) * dir;
            self.x[e] += theta;
            for i in 0..self.m {
                let c = self.t[i * n + enter];
                if c != 0.0 {
                    self.x[self.basic[i]] += c * theta;
                }
            }
            let l = self.basic[leave];
            self.x[l] = leave_cap;
            self.pivot(leave, enter);
        }
    }

    /// Rebuilds the dictionary for the current basis from the original rows.
    fn refactor(&mut self) {
        let n = self.n_struct;
        let target: Vec<bool> = {
            let mut t = vec![false; n + self.m];
            for &j in &self.basic {
                t[j] = true;
            }
            t
        };
        let saved_x = self.x.clone();
        self.t.iter_mut().for_each(|v| *v = 0.0);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, a) in row {
                self.t[i * n + j] += a;
            }
        }
        self.basic = (n..n + self.m).collect();
        self.nonbasic = (0..n).collect();
        for j in 0..n {
            self.pos[j] = Pos::Nonbasic(j);
        }
        for i in 0..self.m {
            self.pos[n + i] = Pos::Basic(i);
        }
        for j in 0..n {
            if !target[j] {
                continue;
            }
            let Pos::Nonbasic(k) = self.pos[j] else { continue };
            let mut best = usize::MAX;
            let mut best_a = 0.0;
            for i in 0..self.m {
                let a = self.t[i * n + k].abs();
                if !target[self.basic[i]] && a > best_a {
                    best = i;
                    best_a = a;
                }
            }
            if best != usize::MAX && best_a > PIVOT_TOL {
                self.pivot(best, k);
            }
        }
        self.since_refactor = 0;
        // nonbasic values return to their bounds; a singular basis leaves
        // structurals nonbasic, which is harmless
        for k in 0..n {
            let j = self.nonbasic[k];
            let v = saved_x[j];
            let (l, u) = (self.lb[j], self.ub[j]);
            self.x[j] = match (l.is_finite(), u.is_finite()) {
                (true, true) => if (v - l).abs() <= (u - v).abs() { l } else { u },
                (true, false) => l,
                (false, true) => u,
                (false, false) => 0.0,
            };
        }
        self.refresh();
    }
}
