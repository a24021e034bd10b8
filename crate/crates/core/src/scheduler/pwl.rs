//! Secant linearization of convex quadratic costs.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    /// $/MWh
    pub slope: f64,
    /// $/h
    pub intercept: f64,
}

impl Segment {
    pub fn eval(&self, p: f64) -> f64 {
        self.slope * p + self.intercept
    }
}

/// `k` secants of `a·P² + b·P + c` through equally spaced breakpoints on
/// `[p_min, p_max]`. Their pointwise maximum over-approximates the parabola
/// by at most `a·Δ²/4` with `Δ = (p_max − p_min)/k`. A linear cost yields a
/// single segment.
pub fn pwl_segments(a: f64, b: f64, c: f64, p_min: f64, p_max: f64, k: usize) -> Result<Vec<Segment>> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && p_min.is_finite() && p_max.is_finite()) {
        return Err(invalid("cost coefficients and range must be finite"));
    }
    if a < 0.0 {
        return Err(invalid(format!("quadratic coefficient {a} makes the cost non-convex")));
    }
    if k == 0 {
        return Err(invalid("need at least one segment"));
    }
    if p_min >= p_max {
        return Err(invalid(format!("empty range [{p_min}, {p_max}]")));
    }
    if a == 0.0 {
        return Ok(vec![Segment { slope: b, intercept: c }]);
    }
    Ok(secants(a, b, c, &extended_grid(p_min, p_max, k, 0)))
}

/// Secant of the parabola over each consecutive pair of breakpoints.
pub(crate) fn secants(a: f64, b: f64, c: f64, grid: &[f64]) -> Vec<Segment> {
    let f = |p: f64| a * p * p + b * p + c;
    grid.windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            // secant slope of a parabola: a·(lo + hi) + b
            let slope = a * (lo + hi) + b;
            Segment {
                slope,
                intercept: f(lo) - slope * lo,
            }
        })
        .collect()
}

/// Value of the piecewise-linear surrogate: the largest segment at `p`.
pub fn pwl_eval(segments: &[Segment], p: f64) -> f64 {
    segments.iter().map(|s| s.eval(p)).fold(f64::NEG_INFINITY, f64::max)
}

/// Breakpoints of a grid of `k` equal cells on `[lo, hi]`, extended by
/// `extra` cells of the same width on both sides.
pub(crate) fn extended_grid(lo: f64, hi: f64, k: usize, extra: usize) -> Vec<f64> {
    let step = (hi - lo) / k as f64;
    let total = k + 2 * extra;
    (0..=total)
        .map(|i| {
            let off = i as f64 - extra as f64;
            if i == extra + k {
                hi
            } else {
                lo + off * step
            }
        })
        .collect()
}
