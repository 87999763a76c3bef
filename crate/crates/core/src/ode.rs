//! Adaptive integration of the augmented shooting system
//!
//! ```text
//!   u''  + (d-1)/r u'  + |u|^{p-1} u - f = 0        (f = 1, 0, or a^{-p})
//!   θ''  + (d-1)/r θ'  + p |u|^{p-1} θ  = 0
//!   mass' = max(u,0)^p r^{d-1}
//! ```
//!
//! with a Taylor series start at `r0` (the (d-1)/r term is a removable
//! singularity), a Dormand-Prince 5(4) pair with its order-4 continuous
//! extension, and event location for zero crossings of `u`, `u'`, and `θ`
//! by sign scanning plus a bisection/secant hybrid on the dense output.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Number of state components: `u, u', θ, θ', mass`.
pub const NC: usize = 5;
pub const I_U: usize = 0;
pub const I_DU: usize = 1;
pub const I_TH: usize = 2;
pub const I_DTH: usize = 3;
pub const I_MASS: usize = 4;

type Vec5 = [f64; NC];

/// Augmented state of one shooting run at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShootState {
    pub r: f64,
    pub y: Vec5,
}

impl ShootState {
    pub fn u(&self) -> f64 {
        self.y[I_U]
    }
    pub fn du(&self) -> f64 {
        self.y[I_DU]
    }
    pub fn theta(&self) -> f64 {
        self.y[I_TH]
    }
    pub fn dtheta(&self) -> f64 {
        self.y[I_DTH]
    }
    pub fn mass_acc(&self) -> f64 {
        self.y[I_MASS]
    }
}

/// Tolerances and budgets of one integration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IntegratorControls {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Radius of the series start.
    pub r0: f64,
    /// Safety cap on r (the solutions are global; this is artifact plumbing).
    pub r_max: f64,
    pub max_steps: usize,
    /// Residual tolerance for event location.
    pub event_tol: f64,
}

impl Default for IntegratorControls {
    fn default() -> Self {
        IntegratorControls {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            r0: 1e-4,
            r_max: 1e3,
            max_steps: 1_000_000,
            event_tol: 1e-12,
        }
    }
}

impl IntegratorControls {
    /// Series-start radius adapted to the shooting height: the expansion is
    /// valid for `r0² |1-a^p| << 1`, so large heights start closer to zero.
    pub fn effective_r0(&self, a: f64, params: &ModelParams) -> f64 {
        let ap = params.signed_pow(a).abs();
        self.r0.min(1e-2 / (1.0 - ap).abs().max(1.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EventKind {
    /// `u` crosses zero with `u' < 0`.
    UZeroDown,
    /// `u` crosses zero with `u' > 0`.
    UZeroUp,
    /// Interior zero of `u'` (zeros within `10 r0` of the start are skipped,
    /// `u'` vanishes identically at the origin).
    DuZero,
    /// Zero of the sensitivity `θ`.
    ThetaZero,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Event {
    pub kind: EventKind,
    pub state: ShootState,
}

/// When to halt the integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StopRule {
    /// Stop at the first downward zero crossing of `u`.
    FirstUZero,
    /// Stop at the first downward `u`-zero or the first interior `u'`-zero
    /// with `u > 0`, whichever comes first. This is the classification rule.
    FirstClassifyingEvent,
    /// Integrate up to the given radius (still capped by `r_max`).
    UntilR(f64),
    /// Stop at the n-th event of the given kind.
    NthEvent(EventKind, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Termination {
    /// The stop rule fired on this event (also present in `events`).
    Event(EventKind),
    /// The target radius (stop rule or `r_max`) was reached.
    ReachedR,
}

/// One accepted step together with the coefficients of the order-4
/// continuous extension of the Dormand-Prince pair.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep {
    pub r_start: f64,
    pub h: f64,
    cont: [[f64; NC]; 5],
}

impl DenseStep {
    /// Evaluate the dense output at `r ∈ [r_start, r_start+h]`.
    pub fn eval(&self, r: f64) -> Vec5 {
        let th = ((r - self.r_start) / self.h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let mut y = [0.0; NC];
        for i in 0..NC {
            let c = [
                self.cont[0][i],
                self.cont[1][i],
                self.cont[2][i],
                self.cont[3][i],
                self.cont[4][i],
            ];
            y[i] = c[0] + th * (c[1] + th1 * (c[2] + th * (c[3] + th1 * c[4])));
        }
        y
    }
}

/// Accepted steps with dense output plus the located events of one run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub a: f64,
    pub forcing: f64,
    pub r_start: f64,
    pub steps: Vec<DenseStep>,
    pub events: Vec<Event>,
    pub end: ShootState,
    pub termination: Termination,
}

impl Trajectory {
    /// State at any radius covered by the run. Radii before the series start
    /// evaluate on the first step; radii past the end clamp to the end state.
    pub fn eval(&self, r: f64) -> ShootState {
        if self.steps.is_empty() || r >= self.end.r {
            return self.end;
        }
        let idx = self
            .steps
            .partition_point(|s| s.r_start + s.h < r)
            .min(self.steps.len() - 1);
        ShootState {
            r,
            y: self.steps[idx].eval(r),
        }
    }

    pub fn events_of(&self, kind: EventKind) -> impl Iterator<Item = &Event> {
        self.events.iter().filter(move |e| e.kind == kind)
    }
}

/// Right-hand side of the augmented system.
pub fn rhs(state: &ShootState, params: &ModelParams, forcing: f64) -> Vec5 {
    let r = state.r;
    let [u, du, th, dth, _] = state.y;
    let c = (f64::from(params.d) - 1.0) / r;
    let up1 = params.signed_pow(u);
    // |u|^{p-1}, kept defined for u < 0 so θ continues past zero crossings
    let abs_up_m1 = if u == 0.0 {
        0.0
    } else {
        u.abs().powf(params.p - 1.0)
    };
    [
        du,
        -c * du - up1 + forcing,
        dth,
        -c * dth - params.p * abs_up_m1 * th,
        params.pos_pow(u) * r.powi(params.d as i32 - 1),
    ]
}

/// Series start at `r0`: `u = a + c2 r² + c4 r⁴`, `θ = 1 + t2 r²`, with
/// `c2 = (f - |a|^{p-1}a)/(2d)`, `c4 = -p |a|^{p-1} c2 / (4(d+2))`,
/// `t2 = -p |a|^{p-1} / (2d)`, and `mass = a^p r0^d / d` to leading order.
pub fn series_start(a: f64, params: &ModelParams, forcing: f64, r0: f64) -> ShootState {
    let d = f64::from(params.d);
    let ap = params.signed_pow(a);
    let apm1 = if a == 0.0 { 0.0 } else { ap / a };
    let c2 = (forcing - ap) / (2.0 * d);
    let c4 = -params.p * apm1 * c2 / (4.0 * (d + 2.0));
    let t2 = -params.p * apm1 / (2.0 * d);
    let r2 = r0 * r0;
    ShootState {
        r: r0,
        y: [
            a + c2 * r2 + c4 * r2 * r2,
            2.0 * c2 * r0 + 4.0 * c4 * r0 * r2,
            1.0 + t2 * r2,
            2.0 * t2 * r0,
            params.pos_pow(a) * r0.powi(params.d as i32) / d,
        ],
    }
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// b - b_hat, error estimator weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights (Hairer's contd5).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct StepResult {
    y_new: Vec5,
    k_last: Vec5,
    err: f64,
    dense: DenseStep,
}

fn try_step(
    params: &ModelParams,
    forcing: f64,
    r: f64,
    y: &Vec5,
    k1: &Vec5,
    h: f64,
    ctl: &IntegratorControls,
) -> StepResult {
    let mut k = [[0.0; NC]; 7];
    k[0] = *k1;
    for s in 0..6 {
        let mut ys = *y;
        for (i, yi) in ys.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                acc += A[s][j] * kj[i];
            }
            *yi += h * acc;
        }
        k[s + 1] = rhs(
            &ShootState {
                r: r + C[s] * h,
                y: ys,
            },
            params,
            forcing,
        );
    }
    // 5th-order solution is stage 7's argument (FSAL): y + h Σ a7j kj = ys of s=5.
    let mut y_new = *y;
    for (i, yi) in y_new.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (j, kj) in k.iter().enumerate().take(6) {
            acc += A[5][j] * kj[i];
        }
        *yi += h * acc;
    }
    let k7 = rhs(&ShootState { r: r + h, y: y_new }, params, forcing);
    k[6] = k7;

    let mut err = 0.0f64;
    for i in 0..NC {
        let mut e = 0.0;
        for (j, kj) in k.iter().enumerate() {
            e += E[j] * kj[i];
        }
        e *= h;
        let sc = ctl.abs_tol + ctl.rel_tol * y[i].abs().max(y_new[i].abs());
        err += (e / sc) * (e / sc);
    }
    err = (err / NC as f64).sqrt();

    // Continuous extension.
    let mut cont = [[0.0; NC]; 5];
    for i in 0..NC {
        let ydiff = y_new[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        let mut dsum = 0.0;
        for (j, kj) in k.iter().enumerate() {
            dsum += D[j] * kj[i];
        }
        cont[0][i] = y[i];
        cont[1][i] = ydiff;
        cont[2][i] = bspl;
        cont[3][i] = ydiff - h * k7[i] - bspl;
        cont[4][i] = h * dsum;
    }

    StepResult {
        y_new,
        k_last: k7,
        err,
        dense: DenseStep {
            r_start: r,
            h,
            cont,
        },
    }
}

/// Locate a root of `comp(dense.eval(r))` in `[ra, rb]` by a bisection/secant
/// hybrid; `fa` and `fb` must have opposite signs.
fn refine_root(
    dense: &DenseStep,
    comp: usize,
    mut ra: f64,
    mut fa: f64,
    mut rb: f64,
    mut fb: f64,
    tol_f: f64,
) -> f64 {
    debug_assert!(fa * fb <= 0.0);
    for _ in 0..200 {
        // secant candidate, safeguarded by the bracket midpoint
        let mut rm = rb - fb * (rb - ra) / (fb - fa);
        if !rm.is_finite() || rm <= ra || rm >= rb {
            rm = 0.5 * (ra + rb);
        }
        let fm = dense.eval(rm)[comp];
        if fm.abs() <= tol_f || (rb - ra) <= f64::EPSILON * rb.abs().max(ra.abs()) {
            return rm;
        }
        if fa * fm <= 0.0 {
            rb = rm;
            fb = fm;
        } else {
            ra = rm;
            fa = fm;
        }
    }
    0.5 * (ra + rb)
}

/// Scan one accepted step for zero crossings of `u`, `u'`, and `θ`,
/// returning located events sorted by radius. Steps are subdivided so that
/// multiple crossings in a tolerance-limited step are still caught.
fn locate_events(
    dense: &DenseStep,
    a: f64,
    du_skip_below: f64,
    ctl: &IntegratorControls,
) -> Vec<Event> {
    const SUBDIV: usize = 8;
    let scale_u = 1.0f64.max(a.abs());
    let mut found: Vec<Event> = Vec::new();
    for (comp, kind_of) in [
        (I_U, None),
        (I_DU, Some(EventKind::DuZero)),
        (I_TH, Some(EventKind::ThetaZero)),
    ] {
        let tol_f = ctl.event_tol * scale_u;
        let mut ra = dense.r_start;
        let mut fa = dense.eval(ra)[comp];
        for s in 1..=SUBDIV {
            let rb = dense.r_start + dense.h * s as f64 / SUBDIV as f64;
            let fb = dense.eval(rb)[comp];
            if fa != 0.0 && fa * fb < 0.0 {
                let r_ev = refine_root(dense, comp, ra, fa, rb, fb, tol_f);
                let y = dense.eval(r_ev);
                let kind = match kind_of {
                    Some(k) => k,
                    None => {
                        if y[I_DU] <= 0.0 {
                            EventKind::UZeroDown
                        } else {
                            EventKind::UZeroUp
                        }
                    }
                };
                if !(kind == EventKind::DuZero && r_ev < du_skip_below) {
                    found.push(Event {
                        kind,
                        state: ShootState { r: r_ev, y },
                    });
                }
            }
            ra = rb;
            fa = fb;
        }
    }
    found.sort_by(|x, y| x.state.r.total_cmp(&y.state.r));
    found
}

/// Integrate the augmented system for shooting height `a` with the given
/// forcing constant (1 for the profile equation, 0 for the unforced limit
/// equation, `a^{-p}` for the rescaled equation) until the stop rule fires.
pub fn integrate_forced(
    a: f64,
    params: &ModelParams,
    forcing: f64,
    ctl: &IntegratorControls,
    stop: StopRule,
) -> Result<Trajectory> {
    let r0 = ctl.effective_r0(a, params);
    let r_limit = match stop {
        StopRule::UntilR(r) => r.min(ctl.r_max),
        _ => ctl.r_max,
    };
    let du_skip_below = 10.0 * r0;
    let mut state = series_start(a, params, forcing, r0);
    let mut k1 = rhs(&state, params, forcing);
    let mut h = r0;
    let mut traj = Trajectory {
        a,
        forcing,
        r_start: r0,
        steps: Vec::new(),
        events: Vec::new(),
        end: state,
        termination: Termination::ReachedR,
    };
    let mut nth_seen = 0usize;

    for step_count in 0..=ctl.max_steps {
        if step_count == ctl.max_steps {
            return Err(Error::BudgetExceeded {
                a,
                r: state.r,
                steps: step_count,
            });
        }
        if state.r >= r_limit {
            break;
        }
        h = h.min(r_limit - state.r).max(f64::EPSILON * state.r);
        if h <= state.r * f64::EPSILON * 4.0 {
            return Err(Error::StepUnderflow { a, r: state.r });
        }
        let res = try_step(params, forcing, state.r, &state.y, &k1, h, ctl);
        if res.err > 1.0 {
            let fac = (0.9 * res.err.powf(-0.2)).max(0.2);
            h *= fac;
            continue;
        }

        // accepted
        let dense = res.dense;
        let new_state = ShootState {
            r: state.r + dense.h,
            y: res.y_new,
        };
        traj.steps.push(dense);
        let events = locate_events(&dense, a, du_skip_below, ctl);
        let mut stopped = false;
        for ev in events {
            traj.events.push(ev);
            let fire = match stop {
                StopRule::FirstUZero => ev.kind == EventKind::UZeroDown,
                StopRule::FirstClassifyingEvent => {
                    ev.kind == EventKind::UZeroDown || ev.kind == EventKind::DuZero
                }
                StopRule::UntilR(_) => false,
                StopRule::NthEvent(kind, n) => {
                    if ev.kind == kind {
                        nth_seen += 1;
                        nth_seen >= n
                    } else {
                        false
                    }
                }
            };
            if fire {
                traj.end = ev.state;
                traj.termination = Termination::Event(ev.kind);
                // drop events recorded past the stop point
                let r_stop = ev.state.r;
                traj.events.retain(|e| e.state.r <= r_stop);
                stopped = true;
                break;
            }
        }
        if stopped {
            return Ok(traj);
        }

        state = new_state;
        k1 = res.k_last;
        traj.end = state;
        let fac = (0.9 * res.err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        h *= fac;
    }

    traj.termination = Termination::ReachedR;
    Ok(traj)
}

/// [`integrate_forced`] with the profile equation's unit forcing.
pub fn integrate(
    a: f64,
    params: &ModelParams,
    ctl: &IntegratorControls,
    stop: StopRule,
) -> Result<Trajectory> {
    integrate_forced(a, params, 1.0, ctl, stop)
}

/// Energy `E = |u'|²/2 + |u|^{p+1}/(p+1) - u`, non-increasing along
/// trajectories and bounded below by `-p/(p+1)`.
pub fn energy(state: &ShootState, params: &ModelParams) -> f64 {
    let u = state.u();
    let du = state.du();
    du * du / 2.0 + u.abs().powf(params.p + 1.0) / (params.p + 1.0) - u
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d3() -> ModelParams {
        ModelParams::new(3).unwrap()
    }

    #[test]
    fn rhs_direct_values() {
        let q = d3();
        // stationary value u = 1 at r = 1: u'' = -1 + 1 = 0
        let s = ShootState {
            r: 1.0,
            y: [1.0, 0.0, 1.0, 0.0, 0.0],
        };
        let dy = rhs(&s, &q, 1.0);
        assert_eq!(dy[I_DU], 0.0);
        // r=2, u=0, u'=-1: u'' = -(2/2)(-1) - 0 + 1 = 2
        let s = ShootState {
            r: 2.0,
            y: [0.0, -1.0, 1.0, 0.0, 0.0],
        };
        let dy = rhs(&s, &q, 1.0);
        assert!((dy[I_DU] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn series_start_values() {
        let q = d3();
        // a = 1 is stationary: c2 = c4 = 0
        let s = series_start(1.0, &q, 1.0, 0.37);
        assert_eq!(s.u(), 1.0);
        assert_eq!(s.du(), 0.0);
        // a = 3, r0 = 1e-3: u'(r0) ≈ 2 (1-27)/6 · 1e-3
        let s = series_start(3.0, &q, 1.0, 1e-3);
        assert!((s.du() - (-8.6667e-3)).abs() < 1e-6, "du = {}", s.du());
        // a = 0.2: c2 = (1 - 0.008)/6 > 0, u initially increases
        let s = series_start(0.2, &q, 1.0, 1e-3);
        assert!(s.du() > 0.0);
    }

    /// The series must satisfy the ODE to O(r0³) in the residual of u''.
    #[test]
    fn series_residual_order() {
        let q = d3();
        let a = 3.0;
        let mut prev = f64::INFINITY;
        for r0 in [1e-2, 5e-3, 2.5e-3] {
            let s = series_start(a, &q, 1.0, r0);
            // second derivative of the series vs the ODE's value
            let d = f64::from(q.d);
            let ap = q.signed_pow(a);
            let c2 = (1.0 - ap) / (2.0 * d);
            let c4 = -q.p * q.signed_pow(a) / a * c2 / (4.0 * (d + 2.0));
            let upp_series = 2.0 * c2 + 12.0 * c4 * r0 * r0;
            let upp_ode = rhs(&s, &q, 1.0)[I_DU];
            let res = (upp_series - upp_ode).abs();
            assert!(res < prev, "residual not decreasing: {res} vs {prev}");
            assert!(res < 10.0 * r0.powi(3) * a.powi(3));
            prev = res;
        }
    }

    #[test]
    fn stationary_solution_stays_at_one() {
        let q = d3();
        let ctl = IntegratorControls::default();
        let traj = integrate(1.0, &q, &ctl, StopRule::UntilR(100.0)).unwrap();
        // θ still oscillates at a = 1; only u itself must be quiescent
        assert!(traj.events_of(EventKind::UZeroDown).next().is_none());
        assert!(traj.events_of(EventKind::UZeroUp).next().is_none());
        assert!(traj.events_of(EventKind::DuZero).next().is_none());
        for s in &traj.steps {
            let y = s.eval(s.r_start + 0.5 * s.h);
            assert!((y[I_U] - 1.0).abs() < 1e-12);
        }
        assert!((traj.end.u() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a7_crosses_zero() {
        let q = d3();
        let ctl = IntegratorControls::default();
        let traj = integrate(7.0, &q, &ctl, StopRule::FirstUZero).unwrap();
        assert_eq!(traj.termination, Termination::Event(EventKind::UZeroDown));
        assert!(traj.end.r > 0.0 && traj.end.r < 10.0);
        assert!(traj.end.u().abs() <= ctl.event_tol * 7.0);
        assert!(traj.end.du() < 0.0);
    }

    #[test]
    fn a3_first_classifying_event_is_minimum() {
        let q = d3();
        let ctl = IntegratorControls::default();
        let traj = integrate(3.0, &q, &ctl, StopRule::FirstClassifyingEvent).unwrap();
        assert_eq!(traj.termination, Termination::Event(EventKind::DuZero));
        assert!(traj.end.u() > 0.0 && traj.end.u() < 1.0);
        // no u-zero before it
        assert!(traj.events_of(EventKind::UZeroDown).count() == 0);
    }

    #[test]
    fn energy_values() {
        let q = d3();
        let s = ShootState {
            r: 0.0,
            y: [1.0, 0.0, 1.0, 0.0, 0.0],
        };
        assert!((energy(&s, &q) - (-0.75)).abs() < 1e-15);
        let s = ShootState {
            r: 0.0,
            y: [0.0, 0.0, 1.0, 0.0, 0.0],
        };
        assert_eq!(energy(&s, &q), 0.0);
        let s = ShootState {
            r: 0.0,
            y: [7.0, 0.0, 1.0, 0.0, 0.0],
        };
        assert!((energy(&s, &q) - 593.25).abs() < 1e-12);
    }

    #[test]
    fn energy_dissipates_along_trajectory() {
        let q = d3();
        let ctl = IntegratorControls::default();
        for a in [0.2, 3.0, 7.0] {
            let traj = integrate(a, &q, &ctl, StopRule::UntilR(30.0)).unwrap();
            let e0 = energy(&traj.eval(traj.r_start), &q);
            let tol_e = 10.0 * ctl.rel_tol * (1.0 + e0.abs());
            let mut prev = f64::INFINITY;
            for s in &traj.steps {
                let e = energy(
                    &ShootState {
                        r: s.r_start + s.h,
                        y: s.eval(s.r_start + s.h),
                    },
                    &q,
                );
                assert!(e <= prev + tol_e, "a={a}: E increased {prev} -> {e}");
                assert!(e >= -q.p / (q.p + 1.0) - tol_e);
                prev = e;
            }
        }
    }

    #[test]
    fn event_residual_consistency() {
        let q = d3();
        let ctl = IntegratorControls::default();
        let traj = integrate(7.0, &q, &ctl, StopRule::UntilR(20.0)).unwrap();
        assert!(!traj.events.is_empty());
        for ev in &traj.events {
            let y = traj.eval(ev.state.r).y;
            let comp = match ev.kind {
                EventKind::UZeroDown | EventKind::UZeroUp => I_U,
                EventKind::DuZero => I_DU,
                EventKind::ThetaZero => I_TH,
            };
            assert!(
                y[comp].abs() <= ctl.event_tol * 7.0,
                "{:?} residual {:e}",
                ev.kind,
                y[comp]
            );
        }
    }

    #[test]
    fn dense_output_matches_tight_run() {
        let q = d3();
        let mut ctl = IntegratorControls::default();
        let checkpoint = 2.5;
        let reference = {
            let mut c = ctl;
            c.rel_tol = 1e-13;
            c.abs_tol = 1e-14;
            integrate(3.0, &q, &c, StopRule::UntilR(checkpoint))
                .unwrap()
                .end
                .u()
        };
        let mut errs = Vec::new();
        for tol in [1e-6, 1e-8, 1e-10] {
            ctl.rel_tol = tol;
            ctl.abs_tol = tol * 1e-2;
            let u = integrate(3.0, &q, &ctl, StopRule::UntilR(checkpoint))
                .unwrap()
                .end
                .u();
            errs.push((u - reference).abs());
        }
        // error must track the tolerance: two decades of tol gain at least
        // one decade of accuracy (nominally it gains two)
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        assert!(errs[0] / errs[2].max(1e-16) > 1e2, "{errs:?}");
    }

    #[test]
    fn oscillation_envelope_contracts() {
        let q = d3();
        let ctl = IntegratorControls::default();
        for a in [0.2, 3.0] {
            let traj = integrate(a, &q, &ctl, StopRule::NthEvent(EventKind::DuZero, 6)).unwrap();
            let extrema: Vec<f64> = traj
                .events_of(EventKind::DuZero)
                .map(|e| e.state.u())
                .collect();
            assert!(extrema.len() >= 6, "a={a}: {} extrema", extrema.len());
            for w in extrema.windows(2) {
                // consecutive extrema alternate sides of 1 ...
                assert!(
                    (w[0] - 1.0) * (w[1] - 1.0) < 0.0,
                    "a={a}: extrema on the same side of 1: {w:?}"
                );
                // ... and contract toward it
                assert!(
                    (w[1] - 1.0).abs() < (w[0] - 1.0).abs(),
                    "a={a}: envelope not contracting: {w:?}"
                );
            }
        }
    }

    #[test]
    fn budget_error_is_reported() {
        let q = d3();
        let ctl = IntegratorControls {
            max_steps: 10,
            ..Default::default()
        };
        match integrate(3.0, &q, &ctl, StopRule::UntilR(100.0)) {
            Err(Error::BudgetExceeded { steps, .. }) => assert_eq!(steps, 10),
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
