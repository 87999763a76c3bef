//! Cross-module verification suite: runs the structural invariants of the
//! solver end to end and reports one pass/fail line per check. Gates scale
//! with the requested tolerances so loosened runs stay meaningful.

use serde::Serialize;

use crate::error::Result;
use crate::lane_emden::lane_emden;
use crate::mass_curve;
use crate::ode::{energy, integrate, integrate_forced, EventKind, IntegratorControls, StopRule};
use crate::params::ModelParams;
use crate::profile::{build_profile, GridSpec};
use crate::shooting;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: &'static str,
    pub pass: bool,
    /// Empty on pass; the first counterexample otherwise.
    pub detail: String,
}

fn report(name: &'static str, outcome: std::result::Result<(), String>) -> CheckReport {
    match outcome {
        Ok(()) => CheckReport {
            name,
            pass: true,
            detail: String::new(),
        },
        Err(detail) => CheckReport {
            name,
            pass: false,
            detail,
        },
    }
}

fn energy_dissipation(q: &ModelParams, ctl: &IntegratorControls) -> std::result::Result<(), String> {
    for a in [0.2, 3.0, 7.0, 20.0] {
        let traj = integrate(a, q, ctl, StopRule::UntilR(30.0)).map_err(|e| e.to_string())?;
        let e0 = energy(&traj.eval(traj.r_start), q);
        let tol_e = 10.0 * ctl.rel_tol * (1.0 + e0.abs());
        let floor = -q.p / (q.p + 1.0) - tol_e;
        let mut prev = f64::INFINITY;
        for s in &traj.steps {
            let r = s.r_start + s.h;
            let e = energy(&traj.eval(r), q);
            if e > prev + tol_e {
                return Err(format!("a={a}, r={r}: E rose {prev} -> {e}"));
            }
            if e < floor {
                return Err(format!("a={a}, r={r}: E={e} below floor {floor}"));
            }
            prev = e;
        }
    }
    Ok(())
}

fn oscillation_envelope(q: &ModelParams, ctl: &IntegratorControls) -> std::result::Result<(), String> {
    for a in [0.2, 3.0] {
        let traj = integrate(a, q, ctl, StopRule::NthEvent(EventKind::DuZero, 6))
            .map_err(|e| e.to_string())?;
        let ext: Vec<f64> = traj
            .events_of(EventKind::DuZero)
            .map(|e| e.state.u())
            .collect();
        for w in ext.windows(2) {
            if (w[0] - 1.0) * (w[1] - 1.0) >= 0.0 || (w[1] - 1.0).abs() >= (w[0] - 1.0).abs() {
                return Err(format!("a={a}: extrema {w:?}"));
            }
        }
    }
    Ok(())
}

fn negativity_of_slope(
    q: &ModelParams,
    ctl: &IntegratorControls,
    a: f64,
) -> std::result::Result<(), String> {
    let traj = shooting::shoot_to_crossing(a, q, ctl).map_err(|e| e.to_string())?;
    let r0 = 10.0 * ctl.effective_r0(a, q);
    for i in 1..200 {
        let r = r0 + (traj.end.r - r0) * i as f64 / 200.0;
        let du = traj.eval(r).du();
        if du >= 0.0 {
            return Err(format!("a={a}, r={r}: u'={du}"));
        }
    }
    Ok(())
}

fn sensitivity_structure(
    q: &ModelParams,
    ctl: &IntegratorControls,
    a: f64,
) -> std::result::Result<(), String> {
    let tz = shooting::theta_zero(a, q, ctl).map_err(|e| e.to_string())?;
    let fz = shooting::first_zero(a, q, ctl).map_err(|e| e.to_string())?;
    if !(tz.z > 0.0 && tz.z < fz.r) {
        return Err(format!("z(a)={} outside (0, {})", tz.z, fz.r));
    }
    if tz.u_at_z <= 1.0 {
        return Err(format!("u(z(a)) = {} <= 1", tz.u_at_z));
    }
    if tz.theta_at_r >= 0.0 {
        return Err(format!("θ(R(a)) = {} >= 0", tz.theta_at_r));
    }
    let traj = shooting::shoot_to_crossing(a, q, ctl).map_err(|e| e.to_string())?;
    for i in 1..100 {
        let r = fz.r * i as f64 / 100.0;
        let xi = shooting::xi_diagnostic(&traj, q, r);
        if xi <= 0.0 {
            return Err(format!("ξ({r}) = {xi}"));
        }
    }
    Ok(())
}

fn scaling_identity(q: &ModelParams, ctl: &IntegratorControls) -> std::result::Result<(), String> {
    let a: f64 = 100.0;
    let scale = a.powf((q.p - 1.0) / 2.0);
    let le = lane_emden(q, ctl).map_err(|e| e.to_string())?;
    let u_traj =
        integrate(a, q, ctl, StopRule::UntilR(1.1 * le.z1 / scale)).map_err(|e| e.to_string())?;
    let v_traj = integrate_forced(1.0, q, q.signed_pow(a).recip(), ctl, StopRule::UntilR(le.z1))
        .map_err(|e| e.to_string())?;
    let mut sup = 0.0f64;
    for i in 1..=300 {
        let rv = le.z1 * i as f64 / 300.0;
        sup = sup.max((v_traj.eval(rv).u() - u_traj.eval(rv / scale).u() / a).abs());
    }
    if sup > 1e3 * ctl.rel_tol {
        return Err(format!("sup |v - u-rescaled| = {sup:e}"));
    }
    Ok(())
}

fn divergence_identity(
    q: &ModelParams,
    ctl: &IntegratorControls,
    heights: &[f64],
) -> std::result::Result<(), String> {
    for &a in heights {
        let (_, res) = mass_curve::mass_of(a, q, ctl).map_err(|e| e.to_string())?;
        if res > 1e3 * ctl.rel_tol {
            return Err(format!("a={a}: residual {res:e}"));
        }
    }
    Ok(())
}

fn lane_emden_identity(q: &ModelParams, ctl: &IntegratorControls) -> std::result::Result<(), String> {
    let le = lane_emden(q, ctl).map_err(|e| e.to_string())?;
    let boundary = le.z1.powi(q.d as i32 - 1) * le.slope_at_z1.abs();
    let res = (le.integral_wp - boundary).abs() / boundary;
    if res > 1e3 * ctl.rel_tol {
        return Err(format!("quadrature/boundary residual {res:e}"));
    }
    Ok(())
}

fn j_gate(q: &ModelParams, ctl: &IntegratorControls, a: f64) -> std::result::Result<(), String> {
    let table =
        build_profile(a, q, ctl, &GridSpec::default()).map_err(|e| e.to_string())?;
    // the gate at the default tolerance, loosened proportionally
    let gate = 1e-6 * (1.0 + table.mu.abs()) * (ctl.rel_tol / 1e-10).max(1.0);
    if table.max_j_deviation > gate {
        return Err(format!(
            "max |J + μ| = {:e} > {gate:e}",
            table.max_j_deviation
        ));
    }
    Ok(())
}

fn convergence_order(q: &ModelParams, ctl: &IntegratorControls) -> std::result::Result<(), String> {
    let checkpoint = 2.5;
    let mut tight = *ctl;
    tight.rel_tol = (ctl.rel_tol * 1e-3).max(1e-13);
    tight.abs_tol = tight.rel_tol * 1e-2;
    let reference = integrate(3.0, q, &tight, StopRule::UntilR(checkpoint))
        .map_err(|e| e.to_string())?
        .end
        .u();
    let mut errs = Vec::new();
    for factor in [1e2, 1.0] {
        let mut c = *ctl;
        c.rel_tol = ctl.rel_tol * factor;
        c.abs_tol = ctl.abs_tol * factor;
        let u = integrate(3.0, q, &c, StopRule::UntilR(checkpoint))
            .map_err(|e| e.to_string())?
            .end
            .u();
        errs.push((u - reference).abs());
    }
    if errs[1] >= errs[0] {
        return Err(format!("no gain from tightening: {errs:?}"));
    }
    Ok(())
}

/// Run every structural check at the given dimension and controls.
pub fn run_suite(params: &ModelParams, ctl: &IntegratorControls) -> Result<Vec<CheckReport>> {
    let crit = {
        let (lo, hi) = shooting::default_bracket(params, ctl)?;
        shooting::find_critical(params, (lo, hi), 1e-6, ctl)?
    };
    let a_probe = 2.0 * crit.a_c;
    Ok(vec![
        report("energy-dissipation", energy_dissipation(params, ctl)),
        report("oscillation-envelope", oscillation_envelope(params, ctl)),
        report(
            "slope-negativity",
            negativity_of_slope(params, ctl, a_probe),
        ),
        report(
            "sensitivity-structure",
            sensitivity_structure(params, ctl, a_probe),
        ),
        report("scaling-identity", scaling_identity(params, ctl)),
        report(
            "divergence-identity",
            divergence_identity(params, ctl, &[a_probe, 100.0]),
        ),
        report("lane-emden-identity", lane_emden_identity(params, ctl)),
        report("j-constancy", j_gate(params, ctl, a_probe)),
        report("convergence-order", convergence_order(params, ctl)),
    ])
}
