//! End-to-end acceptance checks. Each test prints one pass/fail line; run
//! with `--nocapture` to see them all.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use blowup_core::{
    build_profile, classify, energy, find_critical, first_zero, integrate, lane_emden, mass_of,
    positivity_components, quad, scan, theta_zero, thresholds, Classification, GridSpec,
    IntegratorControls, ModelParams, SolutionEvaluator, StopRule,
};

fn verdict(name: &str, pass: bool, detail: &str) {
    let v = if pass { "PASS" } else { "FAIL" };
    if detail.is_empty() {
        println!("acceptance {name}: {v}");
    } else {
        println!("acceptance {name}: {v} ({detail})");
    }
    assert!(pass, "{name}: {detail}");
}

fn ctl() -> IntegratorControls {
    IntegratorControls::default()
}

fn critical_d3(ctl: &IntegratorControls) -> blowup_core::CriticalResult {
    let q = ModelParams::new(3).unwrap();
    find_critical(&q, (3.0, 7.0), 1e-8, ctl).unwrap()
}

#[test]
fn acceptance_01_stationary_height() {
    let ctl = ctl();
    let mut worst = 0.0f64;
    for d in [3u32, 4, 5] {
        let q = ModelParams::new(d).unwrap();
        let traj = integrate(1.0, &q, &ctl, StopRule::UntilR(100.0)).unwrap();
        for s in &traj.steps {
            for k in 0..=4 {
                let r = s.r_start + s.h * k as f64 / 4.0;
                worst = worst.max((traj.eval(r).u() - 1.0).abs());
            }
        }
    }
    verdict(
        "01 stationary height",
        worst < 1e-12,
        &format!("sup |u-1| = {worst:e}"),
    );
}

#[test]
fn acceptance_02_energy_laws() {
    let q = ModelParams::new(3).unwrap();
    let ctl = ctl();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let floor = -q.p / (q.p + 1.0);
    let mut bad = String::new();
    for _ in 0..20 {
        let a: f64 = rng.gen_range(0.1..50.0);
        let e0 = a.powf(q.p + 1.0) / (q.p + 1.0) - a;
        let tol_e = 10.0 * ctl.rel_tol * (1.0 + e0.abs());
        let traj = integrate(a, &q, &ctl, StopRule::UntilR(30.0)).unwrap();
        let mut prev = e0;
        for s in &traj.steps {
            let e = energy(&traj.eval(s.r_start + s.h), &q);
            if e > prev + tol_e {
                bad = format!("a={a}: E rose from {prev} to {e}");
            }
            if e < floor - tol_e {
                bad = format!("a={a}: E = {e} below floor {floor}");
            }
            prev = e;
        }
    }
    verdict("02 energy laws", bad.is_empty(), &bad);
}

#[test]
fn acceptance_03_bracket_and_stable_bisection() {
    let q = ModelParams::new(3).unwrap();
    let base = ctl();
    let lo_positive = matches!(
        classify(3.0, &q, &base).unwrap(),
        Classification::PositiveForever { .. }
    );
    let hi_crosses = matches!(
        classify(7.0, &q, &base).unwrap(),
        Classification::CrossesZero { .. }
    );
    let mut mids = Vec::new();
    for rel_tol in [1e-8, 1e-10, 1e-12] {
        let c = IntegratorControls {
            rel_tol,
            ..IntegratorControls::default()
        };
        let res = find_critical(&q, (3.0, 7.0), 1e-8, &c).unwrap();
        mids.push(res.a_c);
    }
    let spread = mids.iter().cloned().fold(f64::MIN, f64::max)
        - mids.iter().cloned().fold(f64::MAX, f64::min);
    verdict(
        "03 critical bracket",
        lo_positive && hi_crosses && spread <= 1e-7,
        &format!("midpoints {mids:?}, spread {spread:e}"),
    );
}

#[test]
fn acceptance_04_structure_above_critical() {
    let q = ModelParams::new(3).unwrap();
    let ctl = ctl();
    let ac = critical_d3(&ctl).a_c;
    let mut bad = String::new();
    for mult in [1.2, 2.0, 10.0] {
        let a = mult * ac;
        let traj = blowup_core::shooting::shoot_to_crossing(a, &q, &ctl).unwrap();
        let big_r = traj.end.r;
        for i in 1..100 {
            let r = big_r * i as f64 / 100.0;
            let s = traj.eval(r);
            if s.du() >= 0.0 {
                bad = format!("a={a}: u' = {} at r={r}", s.du());
            }
            if blowup_core::shooting::xi_diagnostic(&traj, &q, r) <= 0.0 {
                bad = format!("a={a}: xi <= 0 at r={r}");
            }
        }
        match theta_zero(a, &q, &ctl) {
            Ok(tz) => {
                if !(tz.z > 0.0 && tz.z < big_r && tz.u_at_z > 1.0 && tz.theta_at_r < 0.0) {
                    bad = format!("a={a}: theta-zero structure violated: {tz:?}");
                }
            }
            Err(e) => bad = format!("a={a}: {e}"),
        }
    }
    verdict("04 sensitivity structure", bad.is_empty(), &bad);
}

#[test]
fn acceptance_05_radius_monotonicity_and_limits() {
    let q = ModelParams::new(3).unwrap();
    let ctl = ctl();
    let ac = critical_d3(&ctl).a_c;
    let mut bad = String::new();

    let lo = (ac * 1.001).ln();
    let hi = (1e4 * ac).ln();
    let mut prev = f64::INFINITY;
    for i in 0..50 {
        let a = (lo + (hi - lo) * i as f64 / 49.0).exp();
        let r = first_zero(a, &q, &ctl).unwrap().r;
        if r >= prev {
            bad = format!("R not strictly decreasing at a={a}");
        }
        prev = r;
    }

    for mult in [2.0, 5.0, 20.0] {
        let a = mult * ac;
        let implicit = blowup_core::dr_da(a, &q, &ctl).unwrap();
        let h = 1e-4 * a;
        let fd = (first_zero(a + h, &q, &ctl).unwrap().r - first_zero(a - h, &q, &ctl).unwrap().r)
            / (2.0 * h);
        if (implicit - fd).abs() > 1e-4 * fd.abs() {
            bad = format!("a={a}: dR/da implicit {implicit} vs fd {fd}");
        }
    }

    let le = lane_emden(&q, &ctl).unwrap();
    let a = 1e6f64;
    let scaled = a.powf((q.p - 1.0) / 2.0) * first_zero(a, &q, &ctl).unwrap().r;
    if (scaled - le.z1).abs() > 1e-3 * le.z1 {
        bad = format!("scaled R at a=1e6 is {scaled}, z1 = {}", le.z1);
    }
    verdict("05 radius monotonicity and limits", bad.is_empty(), &bad);
}

/// Fixed-step RK4 on the unforced comparison equation, independent of the
/// adaptive integrator; locates the first zero by step-halving.
fn rk4_first_zero(d: u32, h: f64) -> f64 {
    let df = f64::from(d);
    let p = df / (df - 2.0);
    let rhs = |r: f64, y: [f64; 2]| -> [f64; 2] {
        [y[1], -(df - 1.0) / r * y[1] - y[0].abs().powf(p - 1.0) * y[0]]
    };
    let step = |r: f64, y: [f64; 2], h: f64| -> [f64; 2] {
        let k1 = rhs(r, y);
        let k2 = rhs(r + h / 2.0, [y[0] + h / 2.0 * k1[0], y[1] + h / 2.0 * k1[1]]);
        let k3 = rhs(r + h / 2.0, [y[0] + h / 2.0 * k2[0], y[1] + h / 2.0 * k2[1]]);
        let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        [
            y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    };
    let mut r = 1e-6;
    // series start: w = 1 - r^2/(2d) + p r^4 / (8d(d+2))
    let mut y = [
        1.0 - r * r / (2.0 * df) + p * r.powi(4) / (8.0 * df * (df + 2.0)),
        -r / df + p * r.powi(3) / (2.0 * df * (df + 2.0)),
    ];
    while y[0] > 0.0 {
        let y_new = step(r, y, h);
        if y_new[0] <= 0.0 {
            // bisect on the step fraction; each probe is one RK4 step
            let (mut lo, mut hi) = (0.0f64, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if step(r, y, mid)[0] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return r + 0.5 * (lo + hi);
        }
        y = y_new;
        r += h;
    }
    unreachable!()
}

#[test]
fn acceptance_06_lane_emden_cross_check() {
    let q = ModelParams::new(3).unwrap();
    let le = lane_emden(&q, &ctl()).unwrap();
    let oracle_z1 = rk4_first_zero(3, 5e-5);
    let identity = le.z1 * le.z1 * le.slope_at_z1.abs();
    let mut bad = String::new();
    if (le.z1 - oracle_z1).abs() > 1e-8 {
        bad = format!("z1 {} vs fixed-step oracle {oracle_z1}", le.z1);
    }
    if (le.integral_wp - identity).abs() > 1e-6 * identity {
        bad = format!("integral {} vs boundary value {identity}", le.integral_wp);
    }
    // frozen regression constants
    if (le.z1 - 6.896848619336).abs() > 1e-9 || (identity - 2.018235950977).abs() > 1e-9 {
        bad = format!("regression drift: z1 = {}, z1^2|w'| = {identity}", le.z1);
    }
    verdict("06 lane-emden cross-check", bad.is_empty(), &bad);
}

#[test]
fn acceptance_07_mass_limits_and_thresholds() {
    let q = ModelParams::new(3).unwrap();
    let ctl = ctl();
    let ac = critical_d3(&ctl).a_c;
    let le = lane_emden(&q, &ctl).unwrap();
    let mut bad = String::new();

    let mut prev_dev = f64::INFINITY;
    let mut last_dev = f64::NAN;
    for a in [1e2, 1e3, 1e4] {
        let (mcal, _) = mass_of(a, &q, &ctl).unwrap();
        let dev = (mcal - le.mcal_limit).abs();
        if dev >= prev_dev {
            bad = format!("deviation not decreasing at a={a}");
        }
        prev_dev = dev;
        last_dev = dev;
    }
    if last_dev >= 1e-2 * le.mcal_limit {
        bad = format!("limit deviation at a=1e4 is {last_dev:e}");
    }

    let grid = blowup_core::mass_curve::default_grid(ac, 60);
    let curve = scan(&q, &grid, &ctl).unwrap();
    for p in &curve.points {
        if p.identity_residual >= 1e-7 {
            bad = format!("divergence identity residual {:e} at a={}", p.identity_residual, p.a);
        }
    }
    let (m_c, m_2) = thresholds(&q, &curve, &le).unwrap();
    if !(m_2.is_finite() && m_2 > m_c) {
        bad = format!("thresholds M_c={m_c}, M2={m_2}");
    }
    verdict("07 mass limits and thresholds", bad.is_empty(), &bad);
}

#[test]
fn acceptance_08_multi_hump_counts() {
    let q = ModelParams::new(3).unwrap();
    let ctl = ctl();
    let crit = critical_d3(&ctl);
    let r_limit = 5.0 * crit.r_touch;
    let c50 = positivity_components(50.0, &q, &ctl, r_limit, 16).unwrap();
    let c90 = positivity_components(90.0, &q, &ctl, r_limit, 16).unwrap();
    verdict(
        "08 multi-hump counts",
        c50.len() == 2 && c90.len() == 3,
        &format!("a=50: {} humps, a=90: {} humps (r_limit {r_limit})", c50.len(), c90.len()),
    );
}

#[test]
fn acceptance_09_profile_gates() {
    let q = ModelParams::new(3).unwrap();
    let ctl = ctl();
    let crit = critical_d3(&ctl);
    let mut bad = String::new();
    for a in [crit.a_hi, 2.0 * crit.a_c] {
        let table = build_profile(a, &q, &ctl, &GridSpec::default()).unwrap();
        if !table.compact {
            bad = format!("a={a}: profile not compact");
            continue;
        }
        if table.max_j_deviation > 1e-6 * (1.0 + table.mu.abs()) {
            bad = format!("a={a}: J deviation {:e}", table.max_j_deviation);
        }

        // -Δψ = φ by centered second differences of quadrature values
        let interp = quad::MonotoneCubic::new(table.grid.clone(), table.phi.clone());
        let phi_at = |r: f64| {
            if r >= table.r_supp {
                0.0
            } else {
                interp.eval(r).max(0.0)
            }
        };
        let n = 4000usize;
        let h = table.r_supp / n as f64;
        let grid: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
        let psi = blowup_core::profile::psi_from_eval(&grid, &phi_at, &q);
        let max_phi = table.phi[0];
        for k in 40..n - 40 {
            let lap = (psi[k + 1] - 2.0 * psi[k] + psi[k - 1]) / (h * h)
                + 2.0 / grid[k] * (psi[k + 1] - psi[k - 1]) / (2.0 * h);
            let res = (lap + phi_at(grid[k])).abs();
            if res >= 1e-4 * max_phi {
                bad = format!("a={a}: Laplacian residual {res:e} at r={}", grid[k]);
                break;
            }
        }

        let mphys = q.phys_mass_factor() * mass_of(a, &q, &ctl).unwrap().0;
        if (table.mass - mphys).abs() > 1e-6 * mphys {
            bad = format!("a={a}: table mass {} vs Mphys {mphys}", table.mass);
        }

        // space-time solution: mass constant in t, sup-norm decay law exact
        let ev = SolutionEvaluator::new(&table);
        let t_blowup = 1.0;
        let mut masses = Vec::new();
        let mut sups = Vec::new();
        for t in [0.0f64, 0.5, 0.9] {
            let s = (3.0 * (t_blowup - t)).powf(1.0 / 3.0);
            let edge = s * table.r_supp;
            let grid_t: Vec<f64> = (0..=800).map(|k| edge * k as f64 / 800.0).collect();
            let m = q.sigma
                * quad::gl_composite(
                    &|r| ev.sample(t_blowup, t, r).unwrap().rho * r * r,
                    &grid_t,
                );
            masses.push(m);
            sups.push(ev.sample(t_blowup, t, 0.0).unwrap().rho * (t_blowup - t));
        }
        for w in masses.windows(2) {
            if (w[0] - w[1]).abs() > 1e-6 * masses[0] {
                bad = format!("a={a}: solution mass varies: {masses:?}");
            }
        }
        for w in sups.windows(2) {
            if (w[0] - w[1]).abs() > 1e-10 * sups[0] {
                bad = format!("a={a}: sup-norm law varies: {sups:?}");
            }
        }
    }
    verdict("09 profile gates", bad.is_empty(), &bad);
}

#[test]
fn acceptance_10_determinism() {
    let bin = env!("CARGO_BIN_EXE_blowup");
    let dir = std::env::temp_dir();
    let run = |threads: Option<usize>, tag: &str| -> Vec<u8> {
        let path = dir.join(format!("accept-scan-{tag}-{}.csv", std::process::id()));
        let mut cmd = std::process::Command::new(bin);
        cmd.args(["scan", "-d", "3", "--out"]).arg(&path);
        if let Some(n) = threads {
            cmd.args(["--threads", &n.to_string()]);
        }
        let st = cmd.status().unwrap();
        assert!(st.success());
        let bytes = std::fs::read(&path).unwrap();
        let _ = std::fs::remove_file(&path);
        bytes
    };
    let first = run(None, "a");
    let second = run(None, "b");
    let single = run(Some(1), "t1");
    let many = run(Some(8), "t8");
    verdict(
        "10 determinism",
        first == second && single == many && first == single,
        "scan outputs differ between runs or thread counts",
    );
}
