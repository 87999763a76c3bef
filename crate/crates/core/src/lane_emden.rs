//! The unforced limit equation `w'' + (d-1)/r w' + w^p = 0`, `w(0)=1`,
//! `w'(0)=0`, governing the large-height rescaled limit of the shooting
//! problem. Its first zero `z1` sets the asymptotics of `R(a)` and the
//! limiting mass.

use serde::Serialize;

use crate::error::Result;
use crate::mass_curve;
use crate::ode::{integrate_forced, IntegratorControls, StopRule};
use crate::params::ModelParams;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LaneEmdenResult {
    pub d: u32,
    /// First zero of `w`.
    pub z1: f64,
    /// `w'(z1) < 0`.
    pub slope_at_z1: f64,
    /// `∫_0^{z1} w^p r^{d-1} dr`.
    pub integral_wp: f64,
    /// Limiting mass `𝓜_c = d |B(0,1)| ∫_0^{z1} w^p r^{d-1} dr`.
    pub mcal_limit: f64,
}

/// Solve the limit problem with the same engine as the shooting runs, with
/// the forcing switched off; `z1` is located with the same event machinery
/// as `R(a)`.
pub fn lane_emden(params: &ModelParams, ctl: &IntegratorControls) -> Result<LaneEmdenResult> {
    let traj = integrate_forced(1.0, params, 0.0, ctl, StopRule::FirstUZero)?;
    let z1 = traj.end.r;
    Ok(LaneEmdenResult {
        d: params.d,
        z1,
        slope_at_z1: traj.end.du(),
        integral_wp: traj.end.mass_acc(),
        mcal_limit: f64::from(params.d) * params.ball_vol * traj.end.mass_acc(),
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassLimitPoint {
    pub a: f64,
    pub mcal: f64,
    pub deviation: f64,
}

/// Convergence of the mass functional toward the limit `𝓜_c` along the
/// given heights; the deviations must decrease along an increasing list.
pub fn mcal_limit_check(
    a_list: &[f64],
    params: &ModelParams,
    ctl: &IntegratorControls,
) -> Result<Vec<MassLimitPoint>> {
    let le = lane_emden(params, ctl)?;
    a_list
        .iter()
        .map(|&a| {
            let (mcal, _) = mass_curve::mass_of(a, params, ctl)?;
            Ok(MassLimitPoint {
                a,
                mcal,
                deviation: (mcal - le.mcal_limit).abs(),
            })
        })
        .collect()
}
