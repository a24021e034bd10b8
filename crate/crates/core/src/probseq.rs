//! Probabilistic sequences: discrete probability mass on a uniform power grid.
//!
//! A sequence with step `q` and probabilities `p[0..=N]` puts mass `p[i]` on
//! the power level `i·q`. Wind and PV outputs are discretized onto such grids
//! and combined by discrete convolution, which gives the distribution of the
//! joint renewable output used by the reserve chance constraint.

use serde::{Deserialize, Serialize};
use statrs::function::beta::{beta_reg, inv_beta_reg, ln_beta};

use crate::error::{invalid, Error, Result};

/// Raw discretizations must sum to one within this tolerance.
pub const RAW_SUM_TOL: f64 = 1e-6;
/// Deviations below this are left alone so convolution stays bit-exact.
const RENORM_SKIP: f64 = 1e-12;
/// Slack used when comparing tail sums against a confidence level.
const TAIL_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbSeq {
    step: f64,
    probs: Vec<f64>,
}

impl ProbSeq {
    /// Builds a sequence, renormalizing when the mass is off by at most 1e-6.
    pub fn new(step: f64, probs: Vec<f64>) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(invalid(format!("step must be positive, got {step}")));
        }
        if probs.is_empty() {
            return Err(invalid("a probabilistic sequence needs at least one entry"));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() {
                return Err(invalid("non-finite probability"));
            }
            // quadrature and CDF differences can leave -1e-17 style noise
            if *p < 0.0 {
                if *p < -1e-12 {
                    return Err(invalid(format!("negative probability {p}")));
                }
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > RAW_SUM_TOL {
            return Err(Error::Unnormalized { sum });
        }
        if (sum - 1.0).abs() > RENORM_SKIP {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(Self { step, probs })
    }

    /// The single-atom sequence `{1.0}`: output is zero with certainty.
    pub fn zero(step: f64) -> Result<Self> {
        Self::new(step, vec![1.0])
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Highest grid index `N`; the sequence has `N + 1` entries.
    pub fn max_index(&self) -> usize {
        self.probs.len() - 1
    }

    pub fn power_at(&self, index: usize) -> f64 {
        index as f64 * self.step
    }

    pub fn expectation(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| i as f64 * self.step * p)
            .sum()
    }

    /// Running sums `Σ_{j ≤ i} p[j]`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// Upper tails `Σ_{j ≥ i} p[j]`, accumulated from the top.
    pub fn tails(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.probs.len()];
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate().rev() {
            acc += p;
            out[i] = acc;
        }
        out
    }

    /// Drops trailing zero-probability levels.
    pub fn trimmed(&self) -> Self {
        let last = self.probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Self {
            step: self.step,
            probs: self.probs[..=last].to_vec(),
        }
    }

    pub fn convolve(&self, other: &ProbSeq) -> Result<ProbSeq> {
        convolve(self, other)
    }

    pub fn quantile_reserve(&self, alpha: f64, expected: f64) -> Result<f64> {
        quantile_reserve(self, alpha, expected)
    }

    /// Largest index whose upper tail still carries at least `alpha`.
    pub fn alpha_index(&self, alpha: f64) -> Result<usize> {
        check_alpha(alpha)?;
        let tails = self.tails();
        // tail(0) is the full mass, so index 0 always qualifies
        Ok((0..tails.len())
            .rev()
            .find(|&m| m == 0 || tails[m] >= alpha - TAIL_EPS)
            .unwrap_or(0))
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("confidence level must lie in (0, 1], got {alpha}")));
    }
    Ok(())
}

/// Discrete convolution `c(i) = Σ_{j+k=i} a(j)·b(k)` of two sequences on the same grid.
pub fn convolve(a: &ProbSeq, b: &ProbSeq) -> Result<ProbSeq> {
    if a.step != b.step {
        return Err(Error::StepMismatch {
            left: a.step,
            right: b.step,
        });
    }
    let mut c = vec![0.0; a.probs.len() + b.probs.len() - 1];
    for (j, &pa) in a.probs.iter().enumerate() {
        for (k, &pb) in b.probs.iter().enumerate() {
            c[j + k] += pa * pb;
        }
    }
    ProbSeq::new(a.step, c)
}

pub fn expectation(s: &ProbSeq) -> f64 {
    s.expectation()
}

/// Minimal reserve `R ≥ 0` whose coverage of the shortfall `e_t − Z` reaches `alpha`.
///
/// `R = max(0, e_t − m_α·q)` where `m_α` is the largest index whose tail mass is
/// at least `alpha`.
pub fn quantile_reserve(s: &ProbSeq, alpha: f64, e_t: f64) -> Result<f64> {
    let m = s.alpha_index(alpha)?;
    Ok((e_t - s.power_at(m)).max(0.0))
}

/// Number of grid steps needed to cover `[0, top]`: `⌈top / q⌉`.
pub fn grid_len(top: f64, q: f64) -> usize {
    let r = top / q;
    // absorb representation noise such as 120/40 = 3.0000000000000004
    let n = (r - r.abs() * 1e-12).ceil();
    n.max(0.0) as usize
}

/// Grid index a sampled power falls into under the centred binning used by
/// the discretizers: `[i·q − q/2, i·q + q/2)`, with everything at or above
/// `top` sent to the last bin.
pub fn bin_index(power: f64, q: f64, top: f64) -> usize {
    let n = grid_len(top, q);
    if power >= top {
        return n;
    }
    if power <= 0.0 {
        return 0;
    }
    ((power / q + 0.5).floor() as usize).min(n)
}

/// Wind turbine with a Weibull wind-speed law and a linear power curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WindParamsRaw")]
pub struct WindParams {
    pub v_in: f64,
    pub v_s: f64,
    pub v_out: f64,
    pub p_s: f64,
    pub shape_m: f64,
    pub scale_eps: f64,
}

#[derive(Deserialize)]
struct WindParamsRaw {
    v_in: f64,
    v_s: f64,
    v_out: f64,
    p_s: f64,
    shape_m: f64,
    scale_eps: f64,
}

impl TryFrom<WindParamsRaw> for WindParams {
    type Error = Error;
    fn try_from(r: WindParamsRaw) -> Result<Self> {
        WindParams::new(r.v_in, r.v_s, r.v_out, r.p_s, r.shape_m, r.scale_eps)
    }
}

impl WindParams {
    pub fn new(v_in: f64, v_s: f64, v_out: f64, p_s: f64, shape_m: f64, scale_eps: f64) -> Result<Self> {
        let all = [v_in, v_s, v_out, p_s, shape_m, scale_eps];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(invalid("wind parameters must be finite"));
        }
        if !(0.0 < v_in && v_in < v_s && v_s < v_out) {
            return Err(invalid(format!(
                "wind speeds must satisfy 0 < v_in < v_s < v_out, got {v_in}, {v_s}, {v_out}"
            )));
        }
        if p_s <= 0.0 || shape_m <= 0.0 || scale_eps <= 0.0 {
            return Err(invalid("rated power, shape and scale must be positive"));
        }
        Ok(Self {
            v_in,
            v_s,
            v_out,
            p_s,
            shape_m,
            scale_eps,
        })
    }

    /// `h = v_s / v_in − 1`
    pub fn h(&self) -> f64 {
        self.v_s / self.v_in - 1.0
    }

    fn speed_survival(&self, v: f64) -> f64 {
        (-(v / self.scale_eps).powf(self.shape_m)).exp()
    }

    /// Piecewise-linear power curve between cut-in and rated speed.
    pub fn power_from_speed(&self, v: f64) -> f64 {
        if v < self.v_in || v >= self.v_out {
            0.0
        } else if v < self.v_s {
            (v - self.v_in) / (self.v_s - self.v_in) * self.p_s
        } else {
            self.p_s
        }
    }

    /// Inverse CDF of the Weibull speed law.
    pub fn speed_quantile(&self, u: f64) -> f64 {
        self.scale_eps * (-(1.0 - u).ln()).powf(1.0 / self.shape_m)
    }

    /// Probability mass of the atom at zero output.
    pub fn zero_mass(&self) -> f64 {
        1.0 - self.speed_survival(self.v_in) + self.speed_survival(self.v_out)
    }

    /// Probability mass of the atom at rated output.
    pub fn rated_mass(&self) -> f64 {
        self.speed_survival(self.v_s) - self.speed_survival(self.v_out)
    }

    /// CDF restricted to `0 ≤ p < p_s` (continuous part plus the zero atom).
    fn cdf_inner(&self, p: f64) -> f64 {
        let v = (1.0 + self.h() * p / self.p_s) * self.v_in;
        1.0 - self.speed_survival(v) + self.speed_survival(self.v_out)
    }

    /// Mass of `[0, x)`.
    fn mass_below(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= self.p_s {
            1.0 - self.rated_mass()
        } else {
            self.cdf_inner(x)
        }
    }
}

/// `P(P^W ≤ p)` for the turbine output.
pub fn wind_power_cdf(params: &WindParams, p: f64) -> f64 {
    if p < 0.0 {
        0.0
    } else if p >= params.p_s {
        1.0
    } else {
        params.cdf_inner(p)
    }
}

/// Discretizes turbine output onto a grid of step `q`.
///
/// Bin `i` collects the mass of `[i·q − q/2, i·q + q/2)`; the zero atom lands
/// in bin 0 and the rated-power atom in the last bin.
pub fn discretize_wind(params: &WindParams, q: f64) -> Result<ProbSeq> {
    if !(q.is_finite() && q > 0.0) {
        return Err(invalid(format!("discretization step must be positive, got {q}")));
    }
    let n = grid_len(params.p_s, q);
    let probs = centred_bins(n, q, |x| params.mass_below(x));
    ProbSeq::new(q, probs)
}

/// Bins `0..n` from a "mass below x" function; the last bin takes the remainder.
fn centred_bins(n: usize, q: f64, mass_below: impl Fn(f64) -> f64) -> Vec<f64> {
    let mut probs = Vec::with_capacity(n + 1);
    let mut lower = 0.0;
    for i in 0..n {
        let upper = mass_below(i as f64 * q + q / 2.0);
        probs.push(upper - lower);
        lower = upper;
    }
    probs.push(1.0 - lower);
    probs
}

/// PV output with a Beta-distributed irradiance scaled to `p_max_pv`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PvParamsRaw")]
pub struct PvParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub p_max_pv: f64,
}

#[derive(Deserialize)]
struct PvParamsRaw {
    lambda1: f64,
    lambda2: f64,
    p_max_pv: f64,
}

impl TryFrom<PvParamsRaw> for PvParams {
    type Error = Error;
    fn try_from(r: PvParamsRaw) -> Result<Self> {
        PvParams::new(r.lambda1, r.lambda2, r.p_max_pv)
    }
}

impl PvParams {
    pub fn new(lambda1: f64, lambda2: f64, p_max_pv: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda2.is_finite() && p_max_pv.is_finite()) {
            return Err(invalid("PV parameters must be finite"));
        }
        if lambda1 <= 0.0 || lambda2 <= 0.0 || p_max_pv <= 0.0 {
            return Err(invalid("Beta shapes and PV capacity must be positive"));
        }
        Ok(Self {
            lambda1,
            lambda2,
            p_max_pv,
        })
    }

    /// Folds peak irradiance, panel area and conversion efficiency into capacity.
    pub fn from_irradiance(lambda1: f64, lambda2: f64, r_max: f64, area: f64, efficiency: f64) -> Result<Self> {
        Self::new(lambda1, lambda2, r_max * area * efficiency)
    }

    /// Standard Beta density of the PV output (per MW).
    pub fn density(&self, p: f64) -> f64 {
        let x = p / self.p_max_pv;
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let kernel = x.powf(self.lambda1 - 1.0) * (1.0 - x).powf(self.lambda2 - 1.0);
        kernel * (-ln_beta(self.lambda1, self.lambda2)).exp() / self.p_max_pv
    }

    pub fn cdf(&self, p: f64) -> f64 {
        let x = p / self.p_max_pv;
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            beta_reg(self.lambda1, self.lambda2, x)
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.p_max_pv * inv_beta_reg(self.lambda1, self.lambda2, u.clamp(0.0, 1.0))
    }
}

/// Discretizes PV output onto a grid of step `q`; the last bin runs up to `p_max_pv`.
pub fn discretize_pv(params: &PvParams, q: f64) -> Result<ProbSeq> {
    if !(q.is_finite() && q > 0.0) {
        return Err(invalid(format!("discretization step must be positive, got {q}")));
    }
    let n = grid_len(params.p_max_pv, q);
    let probs = centred_bins(n, q, |x| params.cdf(x));
    ProbSeq::new(q, probs)
}
