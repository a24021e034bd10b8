//! Mixed-integer equivalent of the reserve chance constraint.
//!
//! For the joint renewable sequence `c` on step `q` with expected output `E`,
//! binary `z_m` flags that the total reserve `R` covers a drop to output
//! `m·q`, i.e. `R ≥ E − m·q`. Each level is linked to `R` by the pair
//!
//! ```text
//! L·z_m − R ≥ m·q − E          (z_m = 0  ⇒  R ≤ E − m·q)
//! L·z_m − R ≤ L + m·q − E      (z_m = 1  ⇒  R ≥ E − m·q)
//! ```
//!
//! and coverage is `Σ c(m)·z_m ≥ α`. Levels with `m·q ≥ E` are covered by
//! any nonnegative reserve; their binaries are fixed to 1 and get no linking
//! rows. Two families are redundant for integral `z` but tighten the
//! relaxation: `z_m ≤ z_{m+1}`, and the threshold row
//! `R ≥ Σ_m (need_m − max(need_{m+1}, 0))·z_m` with `need_m = E − m·q`,
//! which telescopes to `need_k` when `k` is the lowest level with `z_k = 1`.

use crate::error::{invalid, Result};
use crate::milp::{MilpModel, Sense, VarId};
use crate::probseq::ProbSeq;

/// How the linking constant `L` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BigL {
    /// The same constant in both rows of every level.
    Uniform(f64),
    /// Smallest valid constant per row, given an upper bound on total reserve.
    /// For the `z_m = 1` side this is `E − m·q`, which turns that row into
    /// `z_m·(E − m·q) ≤ R`.
    Tight { max_reserve: f64 },
}

/// Smallest uniform `L` that leaves every row slack at the unintended value of
/// its binary, given reserve in `[0, max_reserve]`.
pub fn safe_big_l(seq: &ProbSeq, e_t: f64, max_reserve: f64) -> f64 {
    let top = seq.power_at(seq.max_index());
    max_reserve + e_t.max(top - e_t) + seq.step()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChanceRows {
    /// `z_m` for every level `m = 0..=N`.
    pub z: Vec<VarId>,
    /// Levels fixed to 1 because `m·q ≥ E`.
    pub fixed: usize,
    pub rows: Vec<usize>,
}

/// Appends the chance-constraint rows for one period to `model`.
///
/// `reserve` is a variable holding the period's total scheduled reserve.
/// Names are prefixed with `prefix`.
pub fn chance_constraint_rows(
    model: &mut MilpModel,
    prefix: &str,
    reserve: VarId,
    seq: &ProbSeq,
    e_t: f64,
    alpha: f64,
    big_l: BigL,
) -> Result<ChanceRows> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("confidence level must lie in (0, 1], got {alpha}")));
    }
    if let BigL::Uniform(l) = big_l {
        if !(l > 0.0 && l.is_finite()) {
            return Err(invalid(format!("big-L must be positive, got {l}")));
        }
    }
    let q = seq.step();
    let probs = seq.probs();
    let mut z = Vec::with_capacity(probs.len());
    let mut fixed = 0;
    for m in 0..probs.len() {
        let need = e_t - m as f64 * q;
        if need <= 0.0 {
            z.push(model.add_var(format!("{prefix}_z_{m}"), 1.0, 1.0, crate::milp::VarKind::Binary, 0.0));
            fixed += 1;
        } else {
            z.push(model.add_binary(format!("{prefix}_z_{m}"), 0.0));
        }
    }
    let mut rows = Vec::new();
    for (m, &zm) in z.iter().enumerate() {
        let need = e_t - m as f64 * q;
        if need <= 0.0 {
            continue;
        }
        let (l_off, l_on) = match big_l {
            BigL::Uniform(l) => (l, l),
            BigL::Tight { max_reserve } => (max_reserve - need + q, need),
        };
        rows.push(model.add_constraint(format!("{prefix}_off_{m}"), vec![(zm, l_off), (reserve, -1.0)], Sense::Ge, -need));
        rows.push(model.add_constraint(format!("{prefix}_on_{m}"), vec![(zm, l_on), (reserve, -1.0)], Sense::Le, l_on - need));
        if m + 1 < z.len() {
            rows.push(model.add_constraint(format!("{prefix}_mono_{m}"), vec![(zm, 1.0), (z[m + 1], -1.0)], Sense::Le, 0.0));
        }
    }
    // threshold row: with monotone z the sum telescopes to the requirement of
    // the lowest covered level, so it is redundant for integral z
    let mut mix = vec![(reserve, 1.0)];
    for (m, &zm) in z.iter().enumerate() {
        let need = e_t - m as f64 * q;
        if need > 0.0 {
            let next = (need - q).max(0.0);
            mix.push((zm, -(need - next)));
        }
    }
    if mix.len() > 1 {
        rows.push(model.add_constraint(format!("{prefix}_mix"), mix, Sense::Ge, 0.0));
    }
    let cover: Vec<(VarId, f64)> = z.iter().zip(probs).filter(|(_, &p)| p > 0.0).map(|(&v, &p)| (v, p)).collect();
    rows.push(model.add_constraint(format!("{prefix}_cover"), cover, Sense::Ge, alpha));
    Ok(ChanceRows { z, fixed, rows })
}
