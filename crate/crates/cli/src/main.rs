mod config;
mod output;

use std::process::ExitCode;

use serde_json::json;

use blowup_core::{
    build_profile, default_bracket, find_critical, lane_emden, mass_of, positivity_components,
    scan as scan_curve, thresholds, Error, EventKind, GridSpec, IntegratorControls, ModelParams,
    SolutionEvaluator, StopRule,
};
use config::{Cli, Command, RunConfig};
use output::{write_out, Csv};

fn main() -> ExitCode {
    let mut cli = <Cli as clap::Parser>::parse();
    let cfg = match config::resolve(&mut cli.global) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cfg.threads {
        // a second build_global in-process is harmless; the pool is set once
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let params = match ModelParams::new(cfg.dimension) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let ctl = cfg.controls();
    let out = cli.global.out.as_deref();

    let run = || -> Result<(String, u8), Error> {
        match cli.command {
            Command::Critical {
                bracket_lo,
                bracket_hi,
            } => cmd_critical(&cfg, &params, &ctl, bracket_lo, bracket_hi).map(|s| (s, 0)),
            Command::Shoot {
                a,
                r_limit,
                components,
            } => cmd_shoot(&cfg, &params, &ctl, a, r_limit, components).map(|s| (s, 0)),
            Command::Scan { points } => cmd_scan(&cfg, &params, &ctl, points).map(|s| (s, 0)),
            Command::LaneEmden => cmd_lane_emden(&cfg, &params, &ctl).map(|s| (s, 0)),
            Command::Profile {
                a,
                t_blowup,
                ref at,
                resolution,
            } => cmd_profile(&cfg, &params, &ctl, a, t_blowup, at, resolution),
            Command::Verify => cmd_verify(&cfg, &params, &ctl),
        }
    };

    match run() {
        Ok((content, code)) => {
            if write_out(out, &content).is_err() {
                eprintln!("error: cannot write output");
                return ExitCode::from(2);
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } | Error::StepUnderflow { .. } => 3,
        Error::InvalidDimension(_)
        | Error::InvalidBracket { .. }
        | Error::NotCrossing(_)
        | Error::InconsistentDimension { .. }
        | Error::NegativeProfileValue(_)
        | Error::TimeOutOfRange { .. } => 2,
        _ => 1,
    }
}

fn event_name(kind: EventKind) -> &'static str {
    match kind {
        EventKind::UZeroDown => "U_ZERO_DOWN",
        EventKind::UZeroUp => "U_ZERO_UP",
        EventKind::DuZero => "DU_ZERO",
        EventKind::ThetaZero => "THETA_ZERO",
    }
}

fn critical_of(
    params: &ModelParams,
    ctl: &IntegratorControls,
    bisect_tol: f64,
    bracket: (Option<f64>, Option<f64>),
) -> Result<blowup_core::CriticalResult, Error> {
    let (lo, hi) = match bracket {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => default_bracket(params, ctl)?,
    };
    find_critical(params, (lo, hi), bisect_tol, ctl)
}

fn cmd_critical(
    cfg: &RunConfig,
    params: &ModelParams,
    ctl: &IntegratorControls,
    lo: Option<f64>,
    hi: Option<f64>,
) -> Result<String, Error> {
    let res = critical_of(params, ctl, cfg.bisect_tol, (lo, hi))?;
    if cfg.is_json() {
        let v = json!({
            "config": cfg,
            "a_lo": res.a_lo,
            "a_hi": res.a_hi,
            "a_c": res.a_c,
            "R_ac": res.r_touch,
            "iterations": res.iterations,
        });
        return Ok(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()));
    }
    let mut csv = Csv::new("key,value");
    csv.raw_line(&format!("a_lo,{}", res.a_lo));
    csv.raw_line(&format!("a_hi,{}", res.a_hi));
    csv.raw_line(&format!("a_c,{}", res.a_c));
    csv.raw_line(&format!("R_ac,{}", res.r_touch));
    csv.raw_line(&format!("iterations,{}", res.iterations));
    Ok(csv.finish())
}

fn cmd_shoot(
    cfg: &RunConfig,
    params: &ModelParams,
    ctl: &IntegratorControls,
    a: f64,
    r_limit: Option<f64>,
    components: bool,
) -> Result<String, Error> {
    if components {
        let r_limit = match r_limit {
            Some(r) => r,
            None => 5.0 * critical_of(params, ctl, cfg.bisect_tol, (None, None))?.r_touch,
        };
        let comps = positivity_components(a, params, ctl, r_limit, 16)?;
        if cfg.is_json() {
            let v = json!({
                "config": cfg,
                "a": a,
                "r_limit": r_limit,
                "components": comps,
            });
            return Ok(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()));
        }
        let mut csv = Csv::new("component,lo,hi");
        for (i, (lo, hi)) in comps.iter().enumerate() {
            csv.raw_line(&format!("{i},{lo},{hi}"));
        }
        csv.note(&format!("r_limit,{r_limit}"));
        csv.note(&format!("count,{}", comps.len()));
        return Ok(csv.finish());
    }

    let r_limit = r_limit.unwrap_or(20.0);
    let traj = blowup_core::integrate(a, params, ctl, StopRule::UntilR(r_limit))?;
    if cfg.is_json() {
        let rows: Vec<_> = std::iter::once(traj.eval(traj.r_start))
            .chain(traj.steps.iter().map(|s| traj.eval(s.r_start + s.h)))
            .map(|s| json!([s.r, s.u(), s.du(), s.theta(), s.dtheta()]))
            .collect();
        let events: Vec<_> = traj
            .events
            .iter()
            .map(|e| json!({"kind": event_name(e.kind), "r": e.state.r}))
            .collect();
        let v = json!({
            "config": cfg,
            "a": a,
            "columns": ["r", "u", "du", "theta", "dtheta"],
            "rows": rows,
            "events": events,
        });
        return Ok(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()));
    }
    let mut csv = Csv::new("r,u,du,theta,dtheta");
    let s0 = traj.eval(traj.r_start);
    csv.row(&[s0.r, s0.u(), s0.du(), s0.theta(), s0.dtheta()]);
    for st in &traj.steps {
        let s = traj.eval(st.r_start + st.h);
        csv.row(&[s.r, s.u(), s.du(), s.theta(), s.dtheta()]);
    }
    for e in &traj.events {
        csv.note(&format!(
            "event,{},{},{},{}",
            event_name(e.kind),
            e.state.r,
            e.state.u(),
            e.state.du()
        ));
    }
    Ok(csv.finish())
}

fn cmd_scan(
    cfg: &RunConfig,
    params: &ModelParams,
    ctl: &IntegratorControls,
    points: Option<usize>,
) -> Result<String, Error> {
    let crit = critical_of(params, ctl, cfg.bisect_tol, (None, None))?;
    let grid = blowup_core::mass_curve::default_grid(crit.a_c, points.unwrap_or(60));
    let curve = scan_curve(params, &grid, ctl)?;
    let le = lane_emden(params, ctl)?;
    let (m_c, m_2) = thresholds(params, &curve, &le)?;
    let r_monotone = curve.points.windows(2).all(|w| w[1].r < w[0].r);
    if cfg.is_json() {
        let v = json!({
            "config": cfg,
            "a_c": crit.a_c,
            "points": curve.points,
            "Mcal_c": le.mcal_limit,
            "Mcal2": curve.mcal2,
            "M_c": m_c,
            "M2": m_2,
            "a_at_max": curve.a_at_max,
            "R_monotone_decreasing": r_monotone,
            "Mcal_monotone_decreasing": curve.monotone_decreasing,
        });
        return Ok(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()));
    }
    let mut csv = Csv::new("a,R,scaledR,Mcal,Mphys");
    for p in &curve.points {
        csv.row(&[p.a, p.r, p.scaled_r, p.mcal, p.mphys]);
    }
    csv.note(&format!("a_c,{}", crit.a_c));
    csv.note(&format!("Mcal_c,{}", le.mcal_limit));
    csv.note(&format!("Mcal2,{}", curve.mcal2));
    csv.note(&format!("M_c,{m_c}"));
    csv.note(&format!("M2,{m_2}"));
    csv.note(&format!("a_at_max,{}", curve.a_at_max));
    csv.note(&format!("R_monotone_decreasing,{r_monotone}"));
    csv.note(&format!(
        "Mcal_monotone_decreasing,{}",
        curve.monotone_decreasing
    ));
    Ok(csv.finish())
}

fn cmd_lane_emden(
    cfg: &RunConfig,
    params: &ModelParams,
    ctl: &IntegratorControls,
) -> Result<String, Error> {
    let le = lane_emden(params, ctl)?;
    if cfg.is_json() {
        let v = json!({ "config": cfg, "result": le });
        return Ok(format!("{}\n", serde_json::to_string_pretty(&v).unwrap()));
    }
    let mut csv = Csv::new("key,value");
    csv.raw_line(&format!("z1,{}", le.z1));
    csv.raw_line(&format!("slope_at_z1,{}", le.slope_at_z1));
    csv.raw_line(&format!("integral_wp,{}", le.integral_wp));
    csv.raw_line(&format!("Mcal_c,{}", le.mcal_limit));
    Ok(csv.finish())
}

fn cmd_profile(
    cfg: &RunConfig,
    params: &ModelParams,
    ctl: &IntegratorControls,
    a: f64,
    t_blowup: f64,
    at: &[(f64, f64)],
    resolution: Option<usize>,
) -> Result<(String, u8), Error> {
    let mut spec = GridSpec::default();
    if let Some(res) = resolution {
        spec.resolution = res;
    }
    let table = build_profile(a, params, ctl, &spec)?;
    let gate = 1e-6 * (1.0 + table.mu.abs());
    let gate_failed = table.compact && table.max_j_deviation > gate;
    // physical mass of the full (untruncated) profile; infinite off the
    // compact branch
    let mphys = if table.compact {
        Some(params.phys_mass_factor() * mass_of(a, params, ctl)?.0)
    } else {
        None
    };
    let evaluator = SolutionEvaluator::new(&table);
    let mut samples = Vec::new();
    for &(t, radius) in at {
        samples.push(evaluator.sample(t_blowup, t, radius)?);
    }
    let code = if gate_failed { 4 } else { 0 };
    if gate_failed {
        eprintln!(
            "profile gate failure: max J deviation {} exceeds {gate}",
            table.max_j_deviation
        );
    }

    if cfg.is_json() {
        let v = json!({
            "config": cfg,
            "summary": {
                "a": table.a,
                "Rsupp": table.r_supp,
                "mu": table.mu,
                "maxJdev": table.max_j_deviation,
                "mass": table.mass,
                "Mphys": mphys,
                "compact": table.compact,
                "T": t_blowup,
            },
            "columns": ["r", "phi", "xi", "psi", "J"],
            "rows": (0..table.grid.len())
                .map(|i| json!([table.grid[i], table.phi[i], table.xi[i], table.psi[i], table.j[i]]))
                .collect::<Vec<_>>(),
            "samples": samples,
        });
        return Ok((format!("{}\n", serde_json::to_string_pretty(&v).unwrap()), code));
    }
    let mut csv = Csv::new("r,phi,xi,psi,J");
    for i in 0..table.grid.len() {
        csv.row(&[table.grid[i], table.phi[i], table.xi[i], table.psi[i], table.j[i]]);
    }
    csv.note(&format!("a,{}", table.a));
    csv.note(&format!("Rsupp,{}", table.r_supp));
    csv.note(&format!("mu,{}", table.mu));
    csv.note(&format!("maxJdev,{}", table.max_j_deviation));
    csv.note(&format!("mass,{}", table.mass));
    match mphys {
        Some(m) => csv.note(&format!("Mphys,{m}")),
        None => csv.note("Mphys,inf (non-compact profile, infinite mass)"),
    }
    csv.note(&format!("compact,{}", table.compact));
    for s in &samples {
        csv.note(&format!(
            "sample,{},{},{},{},{}",
            s.t, s.radius, s.rho, s.cpot, s.s
        ));
    }
    Ok((csv.finish(), code))
}

fn cmd_verify(
    cfg: &RunConfig,
    params: &ModelParams,
    ctl: &IntegratorControls,
) -> Result<(String, u8), Error> {
    let reports = blowup_core::run_suite(params, ctl)?;
    let all_pass = reports.iter().all(|r| r.pass);
    if cfg.is_json() {
        let v = json!({ "config": cfg, "checks": reports, "pass": all_pass });
        let code = if all_pass { 0 } else { 1 };
        return Ok((format!("{}\n", serde_json::to_string_pretty(&v).unwrap()), code));
    }
    let mut csv = Csv::new("check,result,detail");
    for r in &reports {
        let verdict = if r.pass { "pass" } else { "FAIL" };
        // keep the CSV shape: detail goes in one field
        let detail = r.detail.replace(',', ";");
        csv.raw_line(&format!("{},{verdict},{detail}", r.name));
    }
    csv.note(&format!("all_pass,{all_pass}"));
    Ok((csv.finish(), if all_pass { 0 } else { 1 }))
}
