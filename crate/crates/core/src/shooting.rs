//! Shot classification, bisection for the critical height `a_c`, the first
//! zero `R(a)`, the sensitivity zero `z(a)`, `dR/da`, and positivity
//! components of `u(.,a)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{
    integrate, Event, EventKind, IntegratorControls, ShootState, StopRule, Termination,
    Trajectory,
};
use crate::params::ModelParams;

/// Outcome of one shot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Classification {
    /// First interior minimum found before any zero: `a < a_c`.
    /// Witness: location and value of that minimum (a maximum for `a < 1`).
    PositiveForever { r1: f64, u1: f64 },
    /// `u` reached zero with negative slope: `a > a_c`.
    CrossesZero { r: f64, slope: f64 },
}

/// Final bisection bracket for the critical height.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalResult {
    pub a_lo: f64,
    pub a_hi: f64,
    pub a_c: f64,
    /// Touch radius estimate, `R` at the upper bracket end.
    pub r_touch: f64,
    pub iterations: usize,
}

/// First zero and slope there, for `a > a_c`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FirstZero {
    pub r: f64,
    pub slope: f64,
}

/// The unique sensitivity zero on `(0, R(a))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ThetaZero {
    pub z: f64,
    pub u_at_z: f64,
    /// θ(R(a), a), negative for a > a_c.
    pub theta_at_r: f64,
}

/// Classify a shot by its first classifying event. An interior minimum with
/// `u > 0` certifies `a < a_c` (for crossing heights `u' < 0` holds on all
/// of `(0, R(a))`, so no minimum can occur first); a downward zero crossing
/// certifies `a > a_c`.
pub fn classify(a: f64, params: &ModelParams, ctl: &IntegratorControls) -> Result<Classification> {
    let traj = integrate(a, params, ctl, StopRule::FirstClassifyingEvent)?;
    match traj.termination {
        Termination::Event(EventKind::UZeroDown) => Ok(Classification::CrossesZero {
            r: traj.end.r,
            slope: traj.end.du(),
        }),
        Termination::Event(EventKind::DuZero) => {
            let u1 = traj.end.u();
            // just above a_c the dip below zero is narrower than the event
            // scanner's stride; the sign of u at the (transversally located)
            // minimum still decides the shot
            if a > 1.0 && u1.abs() < 10.0 * ctl.event_tol * a.max(1.0) {
                return Err(Error::AmbiguousNearCritical { a, min_u: u1 });
            }
            if u1 < 0.0 {
                let s = zero_before_min(&traj);
                return Ok(Classification::CrossesZero {
                    r: s.r,
                    slope: s.du(),
                });
            }
            Ok(Classification::PositiveForever { r1: traj.end.r, u1 })
        }
        // no event up to r_max: never crossed, report positivity
        _ => Ok(Classification::PositiveForever {
            r1: traj.end.r,
            u1: traj.end.u(),
        }),
    }
}

/// Zero of `u` between the start and a located minimum with `u < 0` there;
/// `u` is monotone on that range, so plain bisection on the dense output.
fn zero_before_min(traj: &Trajectory) -> ShootState {
    let (mut lo, mut hi) = (traj.r_start, traj.end.r);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if traj.eval(mid).u() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    traj.eval(0.5 * (lo + hi))
}

/// Default bisection seed: `(p+1)^{1/p}` is provably on the positive side;
/// the upper end grows geometrically until it crosses.
pub fn default_bracket(params: &ModelParams, ctl: &IntegratorControls) -> Result<(f64, f64)> {
    let lo = (params.p + 1.0).powf(1.0 / params.p);
    let mut hi = 10.0 * lo;
    for _ in 0..20 {
        if matches!(classify(hi, params, ctl)?, Classification::CrossesZero { .. }) {
            return Ok((lo, hi));
        }
        hi *= 10.0;
    }
    Err(Error::InvalidBracket { lo, hi })
}

/// Bisection for the critical height on the classification predicate.
pub fn find_critical(
    params: &ModelParams,
    bracket: (f64, f64),
    tol: f64,
    ctl: &IntegratorControls,
) -> Result<CriticalResult> {
    let (mut lo, mut hi) = bracket;
    let lo_ok = matches!(
        classify(lo, params, ctl)?,
        Classification::PositiveForever { .. }
    );
    let mut r_touch = match classify(hi, params, ctl)? {
        Classification::CrossesZero { r, .. } => r,
        _ => return Err(Error::InvalidBracket { lo, hi }),
    };
    if !lo_ok || lo >= hi {
        return Err(Error::InvalidBracket { lo, hi });
    }
    let mut iterations = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // machine-precision bracket
        }
        iterations += 1;
        match classify(mid, params, ctl) {
            Ok(Classification::PositiveForever { .. }) => lo = mid,
            Ok(Classification::CrossesZero { r, .. }) => {
                hi = mid;
                r_touch = r;
            }
            // the midpoint sits inside the classifier's resolution band:
            // the bracket is as tight as the tolerances allow
            Err(Error::AmbiguousNearCritical { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(CriticalResult {
        a_lo: lo,
        a_hi: hi,
        a_c: 0.5 * (lo + hi),
        r_touch,
        iterations,
    })
}

/// Integrate a crossing shot up to its first zero, keeping the trajectory.
pub fn shoot_to_crossing(
    a: f64,
    params: &ModelParams,
    ctl: &IntegratorControls,
) -> Result<Trajectory> {
    let mut traj = integrate(a, params, ctl, StopRule::FirstClassifyingEvent)?;
    match traj.termination {
        Termination::Event(EventKind::UZeroDown) => Ok(traj),
        // dip below zero too narrow for the event scanner: recover the
        // crossing from the minimum and truncate there
        Termination::Event(EventKind::DuZero) if traj.end.u() < 0.0 => {
            let s = zero_before_min(&traj);
            traj.events.retain(|e| e.state.r <= s.r);
            traj.events.push(Event {
                kind: EventKind::UZeroDown,
                state: s,
            });
            traj.end = s;
            traj.termination = Termination::Event(EventKind::UZeroDown);
            Ok(traj)
        }
        _ => Err(Error::NotCrossing(a)),
    }
}

pub fn first_zero(a: f64, params: &ModelParams, ctl: &IntegratorControls) -> Result<FirstZero> {
    let traj = shoot_to_crossing(a, params, ctl)?;
    Ok(FirstZero {
        r: traj.end.r,
        slope: traj.end.du(),
    })
}

/// The unique zero of `θ` in `(0, R(a))` together with `θ(R(a))`. More than
/// one located zero indicates a tolerance failure, not a math failure, and
/// is reported as an error.
pub fn theta_zero(a: f64, params: &ModelParams, ctl: &IntegratorControls) -> Result<ThetaZero> {
    let traj = shoot_to_crossing(a, params, ctl)?;
    let zeros: Vec<_> = traj.events_of(EventKind::ThetaZero).collect();
    if zeros.len() != 1 {
        return Err(Error::ThetaZeroCount {
            a,
            count: zeros.len(),
        });
    }
    Ok(ThetaZero {
        z: zeros[0].state.r,
        u_at_z: zeros[0].state.u(),
        theta_at_r: traj.end.theta(),
    })
}

/// `dR/da = -θ(R(a),a) / u'(R(a),a)` from the implicit function theorem;
/// one trajectory instead of the two a finite difference would need.
pub fn dr_da(a: f64, params: &ModelParams, ctl: &IntegratorControls) -> Result<f64> {
    let traj = shoot_to_crossing(a, params, ctl)?;
    Ok(-traj.end.theta() / traj.end.du())
}

/// The diagnostic `ξ(r) = r^{d-1} (u' θ - u θ')`, positive on `(0, R(a))`
/// for crossing heights; encodes the monotonicity of `θ/u`.
pub fn xi_diagnostic(traj: &Trajectory, params: &ModelParams, r: f64) -> f64 {
    let s = traj.eval(r);
    r.powi(params.d as i32 - 1) * (s.du() * s.theta() - s.u() * s.dtheta())
}

/// Maximal intervals where `u(.,a) > 0`, up to `r_limit`. The integration
/// continues through sign changes (the nonlinearity is signed), so outer
/// humps are enumerated as well. Only completed humps count: an interval
/// still open at `r_limit`, where `u` has settled into its oscillation
/// around 1 instead of returning to zero, is not a hump and is dropped.
/// Intervals separated by gaps narrower than `10 event_tol` are merged
/// (tangential double roots would otherwise split spuriously).
pub fn positivity_components(
    a: f64,
    params: &ModelParams,
    ctl: &IntegratorControls,
    r_limit: f64,
    max_components: usize,
) -> Result<Vec<(f64, f64)>> {
    if !matches!(classify(a, params, ctl)?, Classification::CrossesZero { .. }) {
        return Err(Error::NotCrossing(a));
    }
    let traj = integrate(a, params, ctl, StopRule::UntilR(r_limit))?;
    let mut intervals: Vec<(f64, f64)> = Vec::new();
    let mut open_at = Some(0.0f64); // u(0) = a > 0
    for ev in &traj.events {
        match ev.kind {
            EventKind::UZeroDown => {
                if let Some(start) = open_at.take() {
                    intervals.push((start, ev.state.r));
                }
            }
            EventKind::UZeroUp => {
                if open_at.is_none() {
                    open_at = Some(ev.state.r);
                }
            }
            _ => {}
        }
    }
    // an interval still open at r_limit is not a completed hump; drop it
    let _ = open_at;
    // merge near-tangential splits
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for iv in intervals {
        match merged.last_mut() {
            Some(last) if iv.0 - last.1 < 10.0 * ctl.event_tol => last.1 = iv.1,
            _ => merged.push(iv),
        }
    }
    merged.truncate(max_components);
    Ok(merged)
}
