//! Calibration of the truncated gamma law for idiosyncratic volatilities.
//!
//! The untruncated start matches mean and standard deviation directly:
//! `αβ = m`, `α^{1/2}β = s`. With `q = P(G(α,β) < floor)`, the conditional
//! first and second moments above the floor are approximated by
//!
//! ```text
//! (αβ − floor/2 · q) / (1 − q)
//! (αβ² + α²β² − floor²/2 · q) / (1 − q)
//! ```
//!
//! Holding `q` at its current value, both equations are solved for `(α, β)`
//! in closed form and `q` is recomputed until the parameters settle.

use statrs::function::gamma::gamma_lr;

use crate::error::{Error, Result};
use crate::simulation::sampling::gamma_upper_tail;

pub const MAX_ITERATIONS: usize = 200;
pub const REL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CalibrationMode {
    /// Linearised conditional moments, the default for the shipped design.
    #[default]
    Approximate,
    /// Exact conditional moments through incomplete gamma functions.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCalibration {
    pub shape: f64,
    pub scale: f64,
    pub iterations: usize,
}

/// `(mean², sd²)` matched by `G(α, β)` without truncation.
pub fn untruncated_match(mean: f64, sd: f64) -> (f64, f64) {
    (mean * mean / (sd * sd), sd * sd / mean)
}

fn check_targets(mean: f64, sd: f64, floor: f64) -> Result<()> {
    if !(floor >= 0.0) || !floor.is_finite() {
        return Err(Error::InvalidTarget(format!("floor must be non-negative, got {floor}")));
    }
    if !(sd > 0.0) || !sd.is_finite() {
        return Err(Error::InvalidTarget(format!("standard deviation must be positive, got {sd}")));
    }
    if !(mean > floor) || !mean.is_finite() {
        return Err(Error::InvalidTarget(format!("mean {mean} must exceed the floor {floor}")));
    }
    Ok(())
}

pub fn calibrate_truncated_gamma(mean: f64, sd: f64, floor: f64) -> Result<GammaCalibration> {
    calibrate_truncated_gamma_with(mean, sd, floor, CalibrationMode::Approximate)
}

pub fn calibrate_truncated_gamma_with(mean: f64, sd: f64, floor: f64, mode: CalibrationMode) -> Result<GammaCalibration> {
    check_targets(mean, sd, floor)?;
    let approx = approximate(mean, sd, floor)?;
    match mode {
        CalibrationMode::Approximate => Ok(approx),
        CalibrationMode::Exact => exact(mean, sd, floor, approx),
    }
}

fn approximate(mean: f64, sd: f64, floor: f64) -> Result<GammaCalibration> {
    let second = mean * mean + sd * sd;
    let (mut shape, mut scale) = untruncated_match(mean, sd);
    if floor == 0.0 {
        // nothing is truncated, so the start is already the fixed point
        return Ok(GammaCalibration {
            shape,
            scale,
            iterations: 0,
        });
    }
    for iteration in 1..=MAX_ITERATIONS {
        let q = gamma_lr(shape, floor / scale);
        let first_raw = mean * (1.0 - q) + 0.5 * floor * q;
        let second_raw = second * (1.0 - q) + 0.5 * floor * floor * q;
        let var_raw = second_raw - first_raw * first_raw;
        if !(var_raw > 0.0 && first_raw > 0.0) {
            return Err(Error::NoConvergence { iterations: iteration });
        }
        let next_scale = var_raw / first_raw;
        let next_shape = first_raw / next_scale;
        let settled = ((next_shape - shape) / shape).abs() < REL_TOL && ((next_scale - scale) / scale).abs() < REL_TOL;
        shape = next_shape;
        scale = next_scale;
        if settled {
            return Ok(GammaCalibration {
                shape,
                scale,
                iterations: iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
    })
}

/// Exact `(E[X | X ≥ f], E[X² | X ≥ f])` for `X ~ G(shape, scale)`.
pub fn truncated_moments(shape: f64, scale: f64, floor: f64) -> (f64, f64) {
    let tail = gamma_upper_tail(shape, scale, floor);
    let m1 = shape * scale * gamma_upper_tail(shape + 1.0, scale, floor) / tail;
    let m2 = shape * (shape + 1.0) * scale * scale * gamma_upper_tail(shape + 2.0, scale, floor) / tail;
    (m1, m2)
}

/// Newton iteration in `(ln α, ln β)` on the exact conditional moments,
/// started from the approximate solution.
fn exact(mean: f64, sd: f64, floor: f64, start: GammaCalibration) -> Result<GammaCalibration> {
    let second = mean * mean + sd * sd;
    let residual = |la: f64, lb: f64| {
        let (m1, m2) = truncated_moments(la.exp(), lb.exp(), floor);
        (m1 / mean - 1.0, m2 / second - 1.0)
    };
    let (mut la, mut lb) = (start.shape.ln(), start.scale.ln());
    for iteration in 1..=MAX_ITERATIONS {
        let (r1, r2) = residual(la, lb);
        if !(r1.is_finite() && r2.is_finite()) {
            return Err(Error::NoConvergence { iterations: iteration });
        }
        let h = 1e-6;
        let (a1, a2) = residual(la + h, lb);
        let (b1, b2) = residual(la, lb + h);
        let j = [[(a1 - r1) / h, (b1 - r1) / h], [(a2 - r2) / h, (b2 - r2) / h]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err(Error::NoConvergence { iterations: iteration });
        }
        let da = (r1 * j[1][1] - r2 * j[0][1]) / det;
        let db = (j[0][0] * r2 - j[1][0] * r1) / det;
        // damp large steps in log space
        let step = 1.0_f64.min(0.5 / da.abs().max(db.abs()).max(1e-300));
        la -= step * da;
        lb -= step * db;
        if (step * da).abs() < REL_TOL && (step * db).abs() < REL_TOL {
            return Ok(GammaCalibration {
                shape: la.exp(),
                scale: lb.exp(),
                iterations: start.iterations + iteration,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
    })
}
