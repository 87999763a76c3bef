//! The mass functional `𝓜(a) = d |B(0,1)| ∫_0^{R(a)} u^p r^{d-1} dr`, grid
//! scans of it, the supremum `𝓜₂`, and the physical thresholds of the
//! existence window.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lane_emden::LaneEmdenResult;
use crate::params::ModelParams;
use crate::shooting;
use crate::ode::IntegratorControls;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassCurvePoint {
    pub a: f64,
    pub r: f64,
    /// `a^{(p-1)/2} R(a)`.
    pub scaled_r: f64,
    pub mcal: f64,
    /// Physical mass of the self-similar solution built from this height.
    pub mphys: f64,
    /// Relative residual of the divergence identity
    /// `𝓜 = |B| R^d - d |B| R^{d-1} u'(R)`.
    pub identity_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassCurve {
    pub d: u32,
    pub points: Vec<MassCurvePoint>,
    /// Grid maximum of `𝓜`, after a golden-section refinement pass around
    /// the argmax neighbourhood.
    pub mcal2: f64,
    pub a_at_max: f64,
    /// Is `𝓜` decreasing on the grid? Observed, not asserted.
    pub monotone_decreasing: bool,
}

/// Mass of one shot, with the relative residual of the divergence identity
/// as an independent cross-check (the accumulator is the reported value).
pub fn mass_of(a: f64, params: &ModelParams, ctl: &IntegratorControls) -> Result<(f64, f64)> {
    let p = point(a, params, ctl)?;
    Ok((p.mcal, p.identity_residual))
}

fn point(a: f64, params: &ModelParams, ctl: &IntegratorControls) -> Result<MassCurvePoint> {
    let traj = shooting::shoot_to_crossing(a, params, ctl)?;
    let d = f64::from(params.d);
    let ball = params.ball_vol;
    let r = traj.end.r;
    let mcal = d * ball * traj.end.mass_acc();
    let boundary = ball * r.powi(params.d as i32)
        - d * ball * r.powi(params.d as i32 - 1) * traj.end.du();
    Ok(MassCurvePoint {
        a,
        r,
        scaled_r: a.powf((params.p - 1.0) / 2.0) * r,
        mcal,
        mphys: params.phys_mass_factor() * mcal,
        identity_residual: (mcal - boundary).abs() / mcal,
    })
}

/// Logarithmic default grid on `[a_c (1+10⁻³), 10⁴ a_c]`.
pub fn default_grid(a_c: f64, n: usize) -> Vec<f64> {
    let lo = a_c * (1.0 + 1e-3);
    let hi = a_c * 1e4;
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Scan the mass functional over a strictly increasing grid. Points are
/// independent and computed in parallel; the curve is assembled in grid
/// order, so the result does not depend on the parallelism level.
pub fn scan(params: &ModelParams, a_grid: &[f64], ctl: &IntegratorControls) -> Result<MassCurve> {
    let points: Vec<MassCurvePoint> = a_grid
        .par_iter()
        .map(|&a| point(a, params, ctl))
        .collect::<Result<_>>()?;
    let (imax, pmax) = points
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.mcal.total_cmp(&y.1.mcal))
        .expect("non-empty grid");
    // golden-section refinement around the argmax neighbourhood; the sup may
    // sit at the a_c edge, where the grid cannot go further left
    let lo = if imax == 0 { points[0].a } else { points[imax - 1].a };
    let hi = if imax + 1 == points.len() {
        points[imax].a
    } else {
        points[imax + 1].a
    };
    let mut mcal2 = pmax.mcal;
    let mut a_at_max = pmax.a;
    if hi > lo {
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
        let (mut f1, mut f2) = (mass_of(x1, params, ctl)?.0, mass_of(x2, params, ctl)?.0);
        let (mut glo, mut ghi) = (lo, hi);
        for _ in 0..40 {
            if f1 < f2 {
                glo = x1;
                x1 = x2;
                f1 = f2;
                x2 = glo + phi * (ghi - glo);
                f2 = mass_of(x2, params, ctl)?.0;
            } else {
                ghi = x2;
                x2 = x1;
                f2 = f1;
                x1 = ghi - phi * (ghi - glo);
                f1 = mass_of(x1, params, ctl)?.0;
            }
            let best = if f1 > f2 { (x1, f1) } else { (x2, f2) };
            if best.1 > mcal2 {
                mcal2 = best.1;
                a_at_max = best.0;
            }
        }
    }
    let monotone_decreasing = points.windows(2).all(|w| w[1].mcal < w[0].mcal);
    Ok(MassCurve {
        d: params.d,
        points,
        mcal2,
        a_at_max,
        monotone_decreasing,
    })
}

/// Physical thresholds of the existence window. The conversion factor is
/// `(2(d-1)/(d-2))^{d/2}`, the exact ratio `‖Φ‖₁ / 𝓜(a)` of the profile
/// reconstruction.
pub fn thresholds(
    params: &ModelParams,
    curve: &MassCurve,
    le: &LaneEmdenResult,
) -> Result<(f64, f64)> {
    if curve.d != le.d || curve.d != params.d {
        return Err(Error::InconsistentDimension {
            left: curve.d,
            right: le.d,
        });
    }
    let factor = params.phys_mass_factor();
    let mc = factor * le.mcal_limit;
    let m2 = factor * curve.mcal2;
    if m2 <= mc {
        return Err(Error::ThresholdOrdering { mc, m2 });
    }
    Ok((mc, m2))
}
