//! Best-first branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::model::{MilpModel, VarKind};
use super::simplex::{Dictionary, LpOptions, LpStatus};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Relative optimality gap at which the search stops.
    pub mip_gap: f64,
    pub time_limit: Option<Duration>,
    pub feasibility_tol: f64,
    pub integrality_tol: f64,
    pub node_limit: usize,
    /// Keep one record per processed node.
    pub record_nodes: bool,
    /// Try both values of each fractional binary at the root and fix the
    /// variable when one side is infeasible or cannot beat the incumbent.
    pub root_probing: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            mip_gap: 1e-6,
            time_limit: None,
            feasibility_tol: 1e-9,
            integrality_tol: 1e-6,
            node_limit: 1_000_000,
            record_nodes: false,
            root_probing: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MipStatus {
    Optimal,
    /// A limit was hit with an incumbent in hand.
    Feasible,
    Infeasible,
    Unbounded,
    NodeLimit,
    TimeLimit,
    NumericalFailure,
}

impl MipStatus {
    pub fn has_solution(self) -> bool {
        matches!(self, MipStatus::Optimal | MipStatus::Feasible)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeRecord {
    pub id: usize,
    pub depth: usize,
    /// Smallest bound among open nodes when this node was selected.
    pub global_bound: f64,
    pub lp_objective: Option<f64>,
    pub incumbent: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct MipSolution {
    pub status: MipStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    pub node_log: Vec<NodeRecord>,
}

struct Node {
    bound: f64,
    depth: usize,
    id: usize,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // BinaryHeap pops the maximum: lowest bound, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    opts: &'a SolveOptions,
    binaries: Vec<usize>,
    root_bounds: Vec<(f64, f64)>,
    work: Dictionary,
    incumbent: Option<(f64, Vec<f64>)>,
    deadline: Option<Instant>,
}

impl Search<'_> {
    fn gap_tol(&self, inc: f64) -> f64 {
        self.opts.mip_gap * inc.abs().max(1.0)
    }

    fn prunes(&self, bound: f64) -> bool {
        match &self.incumbent {
            Some((inc, _)) => inc - bound <= self.gap_tol(*inc),
            None => false,
        }
    }

    fn apply(&mut self, fixes: &[(usize, f64)]) {
        for (b, &j) in self.binaries.iter().enumerate() {
            let (l, u) = self.root_bounds[b];
            self.work.set_bounds(j, l, u);
        }
        for &(j, v) in fixes {
            self.work.set_bounds(j, v, v);
        }
    }

    fn solve_node(&mut self, fixes: &[(usize, f64)]) -> LpStatus {
        self.apply(fixes);
        let status = self.work.optimize();
        if status != LpStatus::NumericalFailure {
            return status;
        }
        // cold restart from the original rows
        let lp = LpOptions {
            feasibility_tol: self.opts.feasibility_tol,
            deadline: self.deadline,
            ..LpOptions::default()
        };
        let iterations = self.work.iterations;
        self.work = Dictionary::new(self.model, &lp);
        self.work.iterations = iterations;
        self.apply(fixes);
        self.work.optimize()
    }

    /// Most fractional binary, lowest index on ties.
    fn branching_var(&self) -> Option<usize> {
        let values = self.work.values();
        let mut best = None;
        let mut best_frac = self.opts.integrality_tol;
        for &j in &self.binaries {
            let v = values[j];
            let frac = (v - v.floor()).min(v.ceil() - v);
            if frac > best_frac {
                best_frac = frac;
                best = Some(j);
            }
        }
        best
    }

    /// Re-solves with every binary fixed at its rounded value and keeps the
    /// result when it improves the incumbent.
    fn polish(&mut self) {
        let fixes: Vec<(usize, f64)> = self
            .binaries
            .iter()
            .map(|&j| (j, self.work.values()[j].round()))
            .collect();
        if self.solve_node(&fixes) != LpStatus::Optimal {
            return;
        }
        let mut values = self.work.values().to_vec();
        for &(j, v) in &fixes {
            values[j] = v;
        }
        if self.model.max_violation(&values) > self.opts.feasibility_tol * 10.0 {
            return;
        }
        let obj = self.model.objective(&values);
        if self.incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc) {
            self.incumbent = Some((obj, values));
        }
    }

    /// Rounds and fixes the most fractional binary until the relaxation is
    /// integral or infeasible.
    fn dive(&mut self, fixes: &[(usize, f64)]) {
        let mut fixes = fixes.to_vec();
        let mut backtracked = false;
        loop {
            let Some(j) = self.branching_var() else {
                self.polish();
                return;
            };
            let v = self.work.values()[j];
            let guess = if v >= 0.5 { 1.0 } else { 0.0 };
            fixes.push((j, guess));
            let status = self.solve_node(&fixes);
            if status == LpStatus::Optimal && !self.prunes(self.work.objective()) {
                continue;
            }
            if backtracked || status != LpStatus::Infeasible {
                return;
            }
            backtracked = true;
            fixes.last_mut().unwrap().1 = 1.0 - guess;
            if self.solve_node(&fixes) != LpStatus::Optimal || self.prunes(self.work.objective()) {
                return;
            }
        }
    }

    /// Strong branching at the root with domain reduction. Fixings go into
    /// the root bounds so every later node inherits them. Returns false when
    /// both sides of some binary are ruled out.
    fn probe_root(&mut self) -> bool {
        for _ in 0..20 {
            if self.solve_node(&[]) != LpStatus::Optimal {
                return true;
            }
            let values = self.work.values().to_vec();
            let candidates: Vec<usize> = (0..self.binaries.len())
                .filter(|&b| {
                    let v = values[self.binaries[b]];
                    (v - v.round()).abs() > self.opts.integrality_tol
                })
                .collect();
            let mut fixed = 0;
            for b in candidates {
                let j = self.binaries[b];
                let (lo, hi) = self.root_bounds[b];
                if lo == hi {
                    continue;
                }
                let mut dead = [false; 2];
                for (k, v) in [0.0, 1.0].into_iter().enumerate() {
                    match self.solve_node(&[(j, v)]) {
                        LpStatus::Infeasible => dead[k] = true,
                        LpStatus::Optimal => dead[k] = self.prunes(self.work.objective()),
                        _ => return true,
                    }
                    if self.out_of_time() {
                        return true;
                    }
                }
                match dead {
                    [true, true] => return false,
                    [true, false] => self.root_bounds[b] = (1.0, 1.0),
                    [false, true] => self.root_bounds[b] = (0.0, 0.0),
                    [false, false] => continue,
                }
                fixed += 1;
            }
            if fixed == 0 {
                break;
            }
        }
        true
    }

    fn out_of_time(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

/// Solves `model` to within `opts.mip_gap`.
pub fn solve(model: &MilpModel, opts: &SolveOptions) -> Result<MipSolution> {
    model.validate()?;
    let deadline = opts.time_limit.map(|t| Instant::now() + t);
    let lp = LpOptions {
        feasibility_tol: opts.feasibility_tol,
        deadline,
        ..LpOptions::default()
    };
    let binaries: Vec<usize> = (0..model.num_vars()).filter(|&j| model.vars[j].kind == VarKind::Binary).collect();
    let root_bounds = binaries.iter().map(|&j| (model.vars[j].lb, model.vars[j].ub)).collect();
    let mut search = Search {
        model,
        opts,
        binaries,
        root_bounds,
        work: Dictionary::new(model, &lp),
        incumbent: None,
        deadline,
    };
    let mut log = Vec::new();
    let finish = |search: &Search, status: MipStatus, bound: f64, nodes: usize, log: Vec<NodeRecord>| {
        let (objective, values) = match &search.incumbent {
            Some((o, v)) => (*o, v.clone()),
            None => (f64::NAN, Vec::new()),
        };
        let best_bound = if status == MipStatus::Optimal { bound.min(objective) } else { bound };
        let gap = if objective.is_finite() {
            ((objective - best_bound) / objective.abs().max(1.0)).max(0.0)
        } else {
            f64::INFINITY
        };
        MipSolution {
            status,
            objective,
            values,
            best_bound,
            gap,
            nodes,
            lp_iterations: search.work.iterations,
            node_log: log,
        }
    };

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        id: 0,
        fixes: Vec::new(),
    });
    let mut next_id = 1;
    let mut nodes = 0;
    let mut dived = false;
    let mut probed = !opts.root_probing;
    while let Some(node) = heap.peek() {
        let global_bound = node.bound;
        if search.prunes(global_bound) {
            break;
        }
        if nodes >= opts.node_limit || search.out_of_time() {
            let status = match (&search.incumbent, nodes >= opts.node_limit) {
                (Some(_), _) => MipStatus::Feasible,
                (None, true) => MipStatus::NodeLimit,
                (None, false) => MipStatus::TimeLimit,
            };
            return Ok(finish(&search, status, global_bound, nodes, log));
        }
        let node = heap.pop().unwrap();
        nodes += 1;
        let status = search.solve_node(&node.fixes);
        let mut record = NodeRecord {
            id: node.id,
            depth: node.depth,
            global_bound,
            lp_objective: None,
            incumbent: search.incumbent.as_ref().map(|(o, _)| *o),
        };
        match status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                if opts.record_nodes {
                    log.push(record);
                }
                continue;
            }
            LpStatus::Unbounded => return Ok(finish(&search, MipStatus::Unbounded, f64::NEG_INFINITY, nodes, log)),
            LpStatus::TimeLimit => {
                let s = if search.incumbent.is_some() { MipStatus::Feasible } else { MipStatus::TimeLimit };
                return Ok(finish(&search, s, global_bound, nodes, log));
            }
            LpStatus::IterationLimit | LpStatus::NumericalFailure => {
                return Ok(finish(&search, MipStatus::NumericalFailure, global_bound, nodes, log));
            }
        }
        let obj = search.work.objective().max(node.bound);
        record.lp_objective = Some(obj);
        if opts.record_nodes {
            log.push(record);
        }
        if search.prunes(obj) {
            continue;
        }
        match search.branching_var() {
            None => search.polish(),
            Some(_) if !probed => {
                probed = true;
                search.dive(&node.fixes);
                dived = true;
                if !search.probe_root() {
                    heap.clear();
                    break;
                }
                heap.push(Node {
                    bound: obj,
                    depth: 0,
                    id: next_id,
                    fixes: Vec::new(),
                });
                next_id += 1;
            }
            Some(j) => {
                for v in [0.0, 1.0] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, v));
                    heap.push(Node {
                        bound: obj,
                        depth: node.depth + 1,
                        id: next_id,
                        fixes,
                    });
                    next_id += 1;
                }
                if !dived || (search.incumbent.is_none() && nodes % 64 == 0) {
                    dived = true;
                    search.dive(&node.fixes);
                }
            }
        }
    }
    let bound = heap.peek().map_or(f64::INFINITY, |n| n.bound);
    let status = if search.incumbent.is_some() {
        MipStatus::Optimal
    } else {
        MipStatus::Infeasible
    };
    Ok(finish(&search, status, bound, nodes, log))
}
