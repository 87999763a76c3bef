//! Reconstruction of the physical self-similar objects: the compactly
//! supported profile `φ`, the potential `ψ` by the Newtonian convolution
//! formula, the first integral `J` and its constancy check, and samples of
//! the space-time solution `(ρ, c)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ode::{integrate, IntegratorControls, StopRule, Trajectory};
use crate::params::ModelParams;
use crate::quad::{gl_composite, gl_panel, MonotoneCubic};
use crate::shooting;

/// Radial grid construction for the profile table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GridSpec {
    /// Target number of panels across the support.
    pub resolution: usize,
    /// Relative margin appended beyond the support radius.
    pub margin: f64,
    /// Truncation radius (physical frame) for non-compact profiles.
    pub r_max_noncompact: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            resolution: 2000,
            margin: 0.05,
            r_max_noncompact: 20.0,
        }
    }
}

/// Radial table of the physical self-similar profile.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileTable {
    pub d: u32,
    pub a: f64,
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    /// `Ξ = φ^{(d-2)/d} = λ_d u(μ_d r)`, bounded slope up to the support edge.
    pub xi: Vec<f64>,
    pub psi: Vec<f64>,
    /// First integral `2(d-1)/(d-2) Ξ - ψ - r²/2`; NaN where `φ = 0`.
    pub j: Vec<f64>,
    /// Support radius `R(a)/μ_d`; for non-compact profiles the truncation
    /// radius of the table.
    pub r_supp: f64,
    /// `-J` averaged over the support; only meaningful when `compact`.
    pub mu: f64,
    pub max_j_deviation: f64,
    /// `σ_d ∫ φ r^{d-1} dr` over the table.
    pub mass: f64,
    /// Compact support (`a >= a_c` branch). When false the profile has
    /// infinite mass and the table is truncated at `r_supp`.
    pub compact: bool,
}

/// Sample of the space-time solution at time `t` and radius `|x|`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SolutionSample {
    pub t: f64,
    pub radius: f64,
    pub rho: f64,
    pub cpot: f64,
    pub s: f64,
}

fn j_factor(d: u32) -> f64 {
    2.0 * (f64::from(d) - 1.0) / (f64::from(d) - 2.0)
}

/// `ψ(r) = F(r)/((d-2) r^{d-2}) + G(r)/(d-2)` with `F(r) = ∫_0^r φ s^{d-1} ds`
/// and `G(r) = ∫_r^{r_end} φ s ds`, evaluated on `grid` by per-panel
/// Gauss-Legendre quadrature of the supplied evaluator. The `1/r^{d-2}`
/// prefactor is removable at the origin: the first term vanishes there.
pub fn psi_from_eval(grid: &[f64], phi: &dyn Fn(f64) -> f64, params: &ModelParams) -> Vec<f64> {
    let n = grid.len();
    let dm2 = f64::from(params.d) - 2.0;
    let de = params.d as i32 - 1;
    let mut f_cum = vec![0.0; n];
    let mut g_cum = vec![0.0; n];
    for i in 1..n {
        f_cum[i] = f_cum[i - 1] + gl_panel(&|s| phi(s) * s.powi(de), grid[i - 1], grid[i]);
    }
    for i in (0..n - 1).rev() {
        g_cum[i] = g_cum[i + 1] + gl_panel(&|s| phi(s) * s, grid[i], grid[i + 1]);
    }
    (0..n)
        .map(|i| {
            let near = if grid[i] > 0.0 {
                f_cum[i] / (dm2 * grid[i].powf(dm2))
            } else {
                0.0
            };
            near + g_cum[i] / dm2
        })
        .collect()
}

/// `ψ` from a tabulated profile, interpolated monotone-cubically between
/// nodes; the profile is treated as zero beyond `r_supp`.
pub fn psi_of(grid: &[f64], phi: &[f64], r_supp: f64, params: &ModelParams) -> Vec<f64> {
    let interp = MonotoneCubic::new(grid.to_vec(), phi.to_vec());
    psi_from_eval(
        grid,
        &|r| if r > r_supp { 0.0 } else { interp.eval(r).max(0.0) },
        params,
    )
}

fn build_grid(r_supp: f64, margin: f64, resolution: usize, traj: &Trajectory, mu: f64) -> Vec<f64> {
    // accepted-step radii (rescaled) keep solver resolution where the
    // curvature sits; refinement caps the spacing and resolves the edge
    let mut grid: Vec<f64> = vec![0.0];
    for s in &traj.steps {
        let r = (s.r_start + s.h) / mu;
        if r < r_supp {
            grid.push(r);
        }
    }
    grid.push(r_supp);
    let max_dr = r_supp / resolution as f64;
    let mut refined = vec![grid[0]];
    for w in grid.windows(2) {
        let gap = w[1] - w[0];
        let parts = (gap / max_dr).ceil().max(1.0) as usize;
        for k in 1..=parts {
            refined.push(w[0] + gap * k as f64 / parts as f64);
        }
    }
    // geometric refinement of the support edge, where φ ~ (R-r)^p
    for k in 1..=10 {
        let r = r_supp * (1.0 - 1e-3 * 0.5f64.powi(k));
        refined.push(r);
    }
    if margin > 0.0 {
        let beyond = r_supp * margin;
        for k in 1..=10 {
            refined.push(r_supp + beyond * k as f64 / 10.0);
        }
    }
    refined.sort_by(f64::total_cmp);
    refined.dedup_by(|x, y| (*x - *y).abs() < 1e-15 * r_supp);
    refined
}

/// Build the physical profile for shooting height `a`. Heights at or above
/// the critical one produce a compactly supported finite-mass table; lower
/// heights produce an infinite-mass profile truncated at the grid's cap and
/// flagged as non-compact.
pub fn build_profile(
    a: f64,
    params: &ModelParams,
    ctl: &IntegratorControls,
    spec: &GridSpec,
) -> Result<ProfileTable> {
    let mu_d = params.mu;
    let (traj, r_supp, compact) = match shooting::shoot_to_crossing(a, params, ctl) {
        Ok(t) => {
            let r = t.end.r / mu_d;
            (t, r, true)
        }
        Err(Error::NotCrossing(_)) => {
            let t = integrate(a, params, ctl, StopRule::UntilR(spec.r_max_noncompact * mu_d))?;
            (t, spec.r_max_noncompact, false)
        }
        Err(e) => return Err(e),
    };

    let u_at = |r_phys: f64| -> f64 {
        if compact && r_phys >= r_supp {
            0.0
        } else {
            traj.eval(mu_d * r_phys).u().max(0.0)
        }
    };
    let lam_p = params.lambda_pow_p();
    let phi_at = |r_phys: f64| lam_p * u_at(r_phys).powf(params.p);

    let grid = build_grid(
        r_supp,
        if compact { spec.margin } else { 0.0 },
        spec.resolution,
        &traj,
        mu_d,
    );
    let phi: Vec<f64> = grid.iter().map(|&r| phi_at(r)).collect();
    let xi: Vec<f64> = grid.iter().map(|&r| params.lambda * u_at(r)).collect();
    let psi = psi_from_eval(&grid, &phi_at, params);
    let k = j_factor(params.d);
    let j: Vec<f64> = grid
        .iter()
        .zip(phi.iter())
        .zip(xi.iter().zip(psi.iter()))
        .map(|((&r, &p), (&x, &ps))| {
            if p > 0.0 {
                k * x - ps - r * r / 2.0
            } else {
                f64::NAN
            }
        })
        .collect();
    let de = params.d as i32 - 1;
    let mass = params.sigma * gl_composite(&|r| phi_at(r) * r.powi(de), &grid);

    let mut table = ProfileTable {
        d: params.d,
        a,
        grid,
        phi,
        xi,
        psi,
        j,
        r_supp,
        mu: f64::NAN,
        max_j_deviation: f64::NAN,
        mass,
        compact,
    };
    let (mu, dev) = check_j(&table);
    table.mu = mu;
    table.max_j_deviation = dev;
    Ok(table)
}

/// Estimate the first-integral constant `μ` (as the mean of `-J` over the
/// positivity set, which averages out quadrature noise) and the worst
/// pointwise deviation from it.
pub fn check_j(table: &ProfileTable) -> (f64, f64) {
    let vals: Vec<f64> = table
        .j
        .iter()
        .zip(table.phi.iter())
        .filter(|(_, &p)| p > 0.0)
        .map(|(&j, _)| j)
        .collect();
    if vals.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mu = -vals.iter().sum::<f64>() / vals.len() as f64;
    let dev = vals.iter().map(|j| (j + mu).abs()).fold(0.0, f64::max);
    (mu, dev)
}

/// Read-only sampler of the space-time solution built on a profile table.
pub struct SolutionEvaluator<'a> {
    table: &'a ProfileTable,
    phi: MonotoneCubic,
    psi: MonotoneCubic,
}

impl<'a> SolutionEvaluator<'a> {
    pub fn new(table: &'a ProfileTable) -> Self {
        SolutionEvaluator {
            table,
            phi: MonotoneCubic::new(table.grid.clone(), table.phi.clone()),
            psi: MonotoneCubic::new(table.grid.clone(), table.psi.clone()),
        }
    }

    /// `s(t) = [d (T-t)]^{1/d}`.
    pub fn scale(&self, t_blowup: f64, t: f64) -> Result<f64> {
        if !(0.0..t_blowup).contains(&t) {
            return Err(Error::TimeOutOfRange { t, t_blowup });
        }
        Ok((f64::from(self.table.d) * (t_blowup - t)).powf(1.0 / f64::from(self.table.d)))
    }

    pub fn sample(&self, t_blowup: f64, t: f64, radius: f64) -> Result<SolutionSample> {
        let s = self.scale(t_blowup, t)?;
        let y = radius / s;
        let phi = if self.table.compact && y >= self.table.r_supp {
            0.0
        } else {
            self.phi.eval(y).max(0.0)
        };
        let d = self.table.d as i32;
        Ok(SolutionSample {
            t,
            radius,
            rho: s.powi(-d) * phi,
            cpot: s.powi(-(d - 2)) * self.psi.eval(y),
            s,
        })
    }
}

/// One-off sample; build a [`SolutionEvaluator`] for repeated sampling.
pub fn evaluate_solution(
    table: &ProfileTable,
    t_blowup: f64,
    t: f64,
    radius: f64,
) -> Result<SolutionSample> {
    SolutionEvaluator::new(table).sample(t_blowup, t, radius)
}
