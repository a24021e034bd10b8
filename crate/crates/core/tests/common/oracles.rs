use ies_core::milp::{MilpModel, Sense, VarKind};

#[derive(Debug, Clone, PartialEq)]
pub enum Naive {
    Optimal(f64, Vec<f64>),
    Infeasible,
    Unbounded,
}

/// Textbook two-phase tableau simplex with Bland's rule throughout.
///
/// Variables must have finite lower bounds. `fixed` overrides bounds of
/// individual variables (used to pin binaries during enumeration).
pub fn naive_lp(model: &MilpModel, fixed: &[(usize, f64)]) -> Naive {
    let n = model.vars.len();
    let mut lb: Vec<f64> = model.vars.iter().map(|v| v.lb).collect();
    let mut ub: Vec<f64> = model.vars.iter().map(|v| v.ub).collect();
    for &(j, v) in fixed {
        lb[j] = v;
        ub[j] = v;
    }
    assert!(lb.iter().all(|l| l.is_finite()), "oracle needs finite lower bounds");

    // rows over shifted variables y = x - lb, as (coeffs, sense, rhs)
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for c in &model.constraints {
        let mut a = vec![0.0; n];
        let mut rhs = c.rhs;
        for &(j, v) in &c.terms {
            a[j] += v;
            rhs -= v * lb[j];
        }
        rows.push((a, c.sense, rhs));
    }
    for j in 0..n {
        if ub[j].is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Sense::Le, ub[j] - lb[j]));
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    // columns: y (n), slacks, artificials (m), rhs
    let cols = n + n_slack + m;
    let mut tab = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut s = n;
    for (i, (a, sense, rhs)) in rows.iter().enumerate() {
        tab[i][..n].copy_from_slice(a);
        match sense {
            Sense::Le => {
                tab[i][s] = 1.0;
                s += 1;
            }
            Sense::Ge => {
                tab[i][s] = -1.0;
                s += 1;
            }
            Sense::Eq => {}
        }
        tab[i][cols] = *rhs;
        if *rhs < 0.0 {
            for v in tab[i].iter_mut() {
                *v = -*v;
            }
        }
        tab[i][n + n_slack + i] = 1.0;
        basis[i] = n + n_slack + i;
    }

    let art_start = n + n_slack;
    let mut phase1 = vec![0.0; cols];
    for c in phase1.iter_mut().skip(art_start) {
        *c = 1.0;
    }
    if run(&mut tab, &mut basis, &phase1, cols) == Some(false) {
        unreachable!("phase 1 is bounded below");
    }
    let infeas: f64 = basis.iter().enumerate().filter(|(_, &b)| b >= art_start).map(|(i, _)| tab[i][cols]).sum();
    if infeas > 1e-9 {
        return Naive::Infeasible;
    }
    // drive zero-level artificials out where possible
    for i in 0..m {
        if basis[i] >= art_start {
            if let Some(k) = (0..art_start).find(|&k| tab[i][k].abs() > 1e-9) {
                pivot(&mut tab, &mut basis, i, k);
            }
        }
    }
    // forbid artificials from re-entering by zeroing their columns in non-basic rows
    for row in tab.iter_mut() {
        for v in row[art_start..cols].iter_mut() {
            *v = 0.0;
        }
    }
    for i in 0..m {
        if basis[i] >= art_start {
            tab[i][basis[i]] = 1.0;
        }
    }
    let mut cost = vec![0.0; cols];
    for (j, v) in model.vars.iter().enumerate() {
        cost[j] = v.obj;
    }
    if run(&mut tab, &mut basis, &cost, art_start) == Some(false) {
        return Naive::Unbounded;
    }
    let mut x = lb.clone();
    for (i, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] += tab[i][cols];
        }
    }
    Naive::Optimal(model.objective(&x), x)
}

fn pivot(tab: &mut [Vec<f64>], basis: &mut [usize], r: usize, k: usize) {
    let p = tab[r][k];
    for v in tab[r].iter_mut() {
        *v /= p;
    }
    let prow = tab[r].clone();
    for (i, row) in tab.iter_mut().enumerate() {
        if i != r {
            let f = row[k];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = k;
}

/// Minimizes `cost` over the current tableau; entering columns are limited to
/// `0..allowed`. Returns `Some(false)` when unbounded.
fn run(tab: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) -> Option<bool> {
    let cols = cost.len();
    loop {
        let reduced = |k: usize, tab: &[Vec<f64>], basis: &[usize]| -> f64 {
            cost[k] - basis.iter().enumerate().map(|(i, &b)| cost[b] * tab[i][k]).sum::<f64>()
        };
        let enter = (0..allowed).find(|&k| !basis.contains(&k) && reduced(k, tab, basis) < -1e-11);
        let Some(k) = enter else { return Some(true) };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..tab.len() {
            if tab[i][k] > 1e-11 {
                let ratio = tab[i][cols] / tab[i][k];
                let better = match leave {
                    None => true,
                    Some((r, best)) => ratio < best - 1e-12 || (ratio <= best + 1e-12 && basis[i] < basis[r]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else { return Some(false) };
        pivot(tab, basis, r, k);
    }
}

/// Exhaustive enumeration over binary assignments, each completed by the naive LP.
pub fn enumerate_milp(model: &MilpModel) -> Naive {
    let bins: Vec<usize> = (0..model.vars.len()).filter(|&j| model.vars[j].kind == VarKind::Binary).collect();
    assert!(bins.len() <= 20);
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 0u32..(1 << bins.len()) {
        let fixed: Vec<(usize, f64)> = bins.iter().enumerate().map(|(b, &j)| (j, ((mask >> b) & 1) as f64)).collect();
        match naive_lp(model, &fixed) {
            Naive::Optimal(obj, x) => {
                if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                    best = Some((obj, x));
                }
            }
            Naive::Infeasible => {}
            Naive::Unbounded => return Naive::Unbounded,
        }
    }
    match best {
        Some((o, x)) => Naive::Optimal(o, x),
        None => Naive::Infeasible,
    }
}

/// Reference adaptive Simpson quadrature.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Convolution written as a sum over the output index, the literal form of the definition.
pub fn convolve_by_definition(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    (0..len)
        .map(|i| {
            let mut acc = 0.0;
            for (j, &aj) in a.iter().enumerate() {
                if i >= j && i - j < b.len() {
                    acc += aj * b[i - j];
                }
            }
            acc
        })
        .collect()
}
