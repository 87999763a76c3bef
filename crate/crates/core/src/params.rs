//! Dimension-dependent constants and the algebraic transforms between the
//! shooting frame `u`, the rescaled frame `Ξ/η`, and the physical profile `φ`.

use serde::Serialize;

use crate::error::{Error, Result};

/// All derived constants for a given space dimension `d >= 3`.
///
/// Everything is dimensionless and computed once at construction; the struct
/// is immutable and cheap to copy into inner loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    /// Space dimension.
    pub d: u32,
    /// Nonlinearity exponent `p = d/(d-2)`.
    pub p: f64,
    /// Critical diffusion exponent `m_d = 2(d-1)/d`.
    pub m: f64,
    /// Amplitude scale `λ_d = d^{(d-2)/d}`.
    pub lambda: f64,
    /// Radial scale `μ_d = d^{1/d} ((d-2)/(2(d-1)))^{1/2}`.
    pub mu: f64,
    /// Surface area of the unit sphere, `σ_d = 2 π^{d/2} / Γ(d/2)`.
    pub sigma: f64,
    /// Newtonian-kernel constant `c_d = 1/((d-2) σ_d)`.
    pub c_newton: f64,
    /// Volume of the unit ball, `σ_d / d`.
    pub ball_vol: f64,
}

/// `Γ(d/2)` for integer `d >= 1`, via the half-integer recurrence.
fn gamma_half_integer(d: u32) -> f64 {
    let (mut x, mut g) = if d % 2 == 0 {
        (1.0, 1.0)
    } else {
        (0.5, std::f64::consts::PI.sqrt())
    };
    while x < f64::from(d) / 2.0 - 0.25 {
        g *= x;
        x += 1.0;
    }
    g
}

impl ModelParams {
    pub fn new(d: u32) -> Result<Self> {
        if d < 3 {
            return Err(Error::InvalidDimension(d));
        }
        let df = f64::from(d);
        let p = df / (df - 2.0);
        let sigma = 2.0 * std::f64::consts::PI.powf(df / 2.0) / gamma_half_integer(d);
        Ok(ModelParams {
            d,
            p,
            m: 2.0 * (df - 1.0) / df,
            lambda: df.powf((df - 2.0) / df),
            mu: df.powf(1.0 / df) * ((df - 2.0) / (2.0 * (df - 1.0))).sqrt(),
            sigma,
            c_newton: 1.0 / ((df - 2.0) * sigma),
            ball_vol: sigma / df,
        })
    }

    /// `λ_d^p`, which equals `d` exactly; kept as a method for readability.
    pub fn lambda_pow_p(&self) -> f64 {
        f64::from(self.d)
    }

    /// Ratio between the physical mass `‖Φ‖₁` and the mass functional `𝓜(a)`,
    /// namely `(2(d-1)/(d-2))^{d/2} = d μ_d^{-d}`.
    pub fn phys_mass_factor(&self) -> f64 {
        let df = f64::from(self.d);
        (2.0 * (df - 1.0) / (df - 2.0)).powf(df / 2.0)
    }

    /// Physical profile value `φ = λ_d^p u^p` from a shooting-frame value `u >= 0`.
    pub fn u_to_phi(&self, u: f64) -> Result<f64> {
        if u < 0.0 {
            return Err(Error::NegativeProfileValue(u));
        }
        Ok(self.lambda_pow_p() * u.powf(self.p))
    }

    /// Inverse of [`u_to_phi`](Self::u_to_phi).
    pub fn phi_to_u(&self, phi: f64) -> Result<f64> {
        if phi < 0.0 {
            return Err(Error::NegativeProfileValue(phi));
        }
        Ok((phi / self.lambda_pow_p()).powf(1.0 / self.p))
    }

    /// `|u|^{p-1} u`, the signed nonlinearity of the shooting equation.
    pub fn signed_pow(&self, u: f64) -> f64 {
        if u == 0.0 {
            0.0
        } else {
            u.abs().powf(self.p - 1.0) * u
        }
    }

    /// `max(u,0)^p`, the integrand of the mass accumulator.
    pub fn pos_pow(&self, u: f64) -> f64 {
        if u <= 0.0 {
            0.0
        } else {
            u.powf(self.p)
        }
    }
}
