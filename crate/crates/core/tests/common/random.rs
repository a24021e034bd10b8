use ies_core::milp::{MilpModel, Sense};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn coef(rng: &mut ChaCha8Rng) -> f64 {
    // small integers keep the oracle comparison free of representation noise
    rng.random_range(-5i32..=5) as f64
}

fn add_rows(model: &mut MilpModel, rng: &mut ChaCha8Rng, rows: usize, anchor: Option<&[f64]>, density: f64) {
    let n = model.vars.len();
    for i in 0..rows {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.random::<f64>() < density {
                terms.push((j, coef(rng)));
            }
        }
        if terms.is_empty() {
            terms.push((rng.random_range(0..n), 1.0));
        }
        let sense = match rng.random_range(0..6) {
            0 => Sense::Eq,
            1 | 2 => Sense::Ge,
            _ => Sense::Le,
        };
        let rhs = match anchor {
            Some(x) => {
                let act: f64 = terms.iter().map(|&(j, a)| a * x[j]).sum();
                let slack = rng.random_range(0i32..4) as f64;
                match sense {
                    Sense::Le => act + slack,
                    Sense::Ge => act - slack,
                    Sense::Eq => act,
                }
            }
            None => rng.random_range(-10i32..=10) as f64,
        };
        model.add_constraint(format!("r{i}"), terms, sense, rhs);
    }
}

/// A feasible LP with `n` variables and `m` rows; a few variables lack an upper bound.
pub fn random_lp(seed: u64, n: usize, m: usize) -> MilpModel {
    let mut r = rng(seed);
    let mut model = MilpModel::new();
    let mut anchor = Vec::with_capacity(n);
    for j in 0..n {
        let ub = if r.random::<f64>() < 0.2 { f64::INFINITY } else { r.random_range(1i32..=10) as f64 };
        let obj = coef(&mut r);
        model.add_continuous(format!("x{j}"), 0.0, ub, obj);
        anchor.push(if ub.is_finite() { r.random_range(0.0..ub) } else { r.random_range(0.0..5.0) });
    }
    add_rows(&mut model, &mut r, m, Some(&anchor), 0.7);
    model
}

/// A small bounded MILP; roughly a quarter are generated without a feasible anchor.
pub fn random_milp(seed: u64) -> MilpModel {
    let mut r = rng(seed);
    let nb = r.random_range(1..=14);
    let nc = r.random_range(1..=8);
    let rows = r.random_range(2..=8);
    let mut model = MilpModel::new();
    let mut anchor = Vec::new();
    for j in 0..nb {
        model.add_binary(format!("b{j}"), coef(&mut r));
        anchor.push(r.random_range(0..=1) as f64);
    }
    for j in 0..nc {
        let lb = r.random_range(-3i32..=0) as f64;
        let ub = lb + r.random_range(1i32..=8) as f64;
        model.add_continuous(format!("x{j}"), lb, ub, coef(&mut r));
        anchor.push(r.random_range(lb..ub));
    }
    let anchored = r.random::<f64>() < 0.75;
    add_rows(&mut model, &mut r, rows, anchored.then_some(anchor.as_slice()), 0.5);
    model
}

/// 0/1 knapsack as a minimization of negated value.
pub fn knapsack(seed: u64, items: usize) -> MilpModel {
    let mut r = rng(seed);
    let mut model = MilpModel::new();
    let mut weights = Vec::new();
    for i in 0..items {
        let value = r.random_range(1i32..=40) as f64;
        weights.push(r.random_range(1i32..=25) as f64);
        model.add_binary(format!("item{i}"), -value);
    }
    let cap = (weights.iter().sum::<f64>() * 0.45).floor();
    model.add_constraint("capacity", weights.into_iter().enumerate().collect(), Sense::Le, cap);
    model
}
