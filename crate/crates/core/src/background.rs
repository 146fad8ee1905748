//! The unperturbed radial flow and the coefficients of the linearized operator.
//!
//! The background is the purely radial solution of mass conservation
//! `r²ρ̂Û = ρ₀q₀` together with Bernoulli's law `½Û² + γ/(γ-1)ρ̂^(γ-1) = C₀`
//! on the supersonic branch. Along it the gas accelerates toward the limit
//! speed `√(2C₀)` while the density decays like `r⁻²`.

use std::io::Write;

use crate::error::{Error, Result};
use crate::profile::InitialData;
use crate::quadrature::GaussLegendre;

/// Bernoulli constant. Every state in the crate is normalized to it.
pub const C0: f64 = 1.0;

const CONSISTENCY_TOL: f64 = 1e-12;

/// Polytropic gas and nozzle parameters with the derived energy exponents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    gamma: f64,
    q0: f64,
    rho0: f64,
    phi0: f64,
    mu: f64,
    sigma: f64,
    delta: f64,
}

impl GasParams {
    /// Entrance density is fixed by Bernoulli's law with `C₀ = 1`.
    pub fn new(gamma: f64, q0: f64, phi0: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(q0 > 0.0 && q0 * q0 < 2.0 * C0) {
            return Err(Error::InvalidParams(format!(
                "entrance speed q0 = {q0} must lie in (0, sqrt(2 C0))"
            )));
        }
        let rho0 = ((gamma - 1.0) / gamma * (C0 - 0.5 * q0 * q0)).powf(1.0 / (gamma - 1.0));
        Self::with_entrance_density(gamma, q0, rho0, phi0)
    }

    /// Accepts an explicit entrance density, which must satisfy Bernoulli's law with `C₀ = 1`.
    pub fn with_entrance_density(gamma: f64, q0: f64, rho0: f64, phi0: f64) -> Result<Self> {
        check_gamma(gamma)?;
        if !(phi0 > 0.0 && phi0 < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidParams(format!(
                "half-opening angle phi0 = {phi0} must lie in (0, pi/2)"
            )));
        }
        if !(rho0 > 0.0) || !(q0 > 0.0) {
            return Err(Error::InvalidParams(format!(
                "entrance state must be positive (q0 = {q0}, rho0 = {rho0})"
            )));
        }
        let bernoulli = 0.5 * q0 * q0 + gamma / (gamma - 1.0) * rho0.powf(gamma - 1.0);
        if (bernoulli - C0).abs() > CONSISTENCY_TOL {
            return Err(Error::InvalidParams(format!(
                "entrance state violates Bernoulli's law: 0.5 q0^2 + gamma/(gamma-1) rho0^(gamma-1) = {bernoulli}, expected {C0}"
            )));
        }
        let c2 = gamma * rho0.powf(gamma - 1.0);
        if q0 * q0 <= c2 {
            return Err(Error::InvalidParams(format!(
                "entrance is not supersonic: q0^2 = {} <= c^2(rho0) = {c2}",
                q0 * q0
            )));
        }
        let sigma = (2.0 * (gamma - 1.0)).min(1.0);
        let delta = 0.5 * Self::delta_ceiling_for(gamma, sigma);
        Ok(Self {
            gamma,
            q0,
            rho0,
            phi0,
            mu: 4.0 * gamma - 6.0,
            sigma,
            delta,
        })
    }

    /// Overrides the multiplier decay exponent; it must stay in `(0, min{γ-1, σ-(γ-1)}]`.
    pub fn with_delta(mut self, delta: f64) -> Result<Self> {
        let ceiling = self.delta_ceiling();
        if !(delta > 0.0 && delta <= ceiling + 1e-15) {
            return Err(Error::InvalidParams(format!(
                "delta = {delta} must lie in (0, {ceiling}]"
            )));
        }
        self.delta = delta;
        Ok(self)
    }

    fn delta_ceiling_for(gamma: f64, sigma: f64) -> f64 {
        (gamma - 1.0).min(sigma - (gamma - 1.0))
    }

    pub fn delta_ceiling(&self) -> f64 {
        Self::delta_ceiling_for(self.gamma, self.sigma)
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn q0(&self) -> f64 {
        self.q0
    }
    pub fn rho0(&self) -> f64 {
        self.rho0
    }
    pub fn phi0(&self) -> f64 {
        self.phi0
    }
    pub fn c0(&self) -> f64 {
        C0
    }
    /// Energy weight exponent `4γ - 6`.
    pub fn mu(&self) -> f64 {
        self.mu
    }
    /// Angular decay exponent `min{1, 2(γ-1)}`.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Mass flux per unit solid angle, `ρ₀q₀`.
    pub fn mass_constant(&self) -> f64 {
        self.rho0 * self.q0
    }

    pub fn sound_speed_sq(&self, rho: f64) -> f64 {
        self.gamma * rho.powf(self.gamma - 1.0)
    }

    /// `c²` expressed through the speed: `(γ-1)(C₀ - ½|∇Φ|²)`.
    pub fn sound_speed_sq_from_speed_sq(&self, speed_sq: f64) -> f64 {
        (self.gamma - 1.0) * (C0 - 0.5 * speed_sq)
    }

    pub fn limit_speed(&self) -> f64 {
        (2.0 * C0).sqrt()
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 1.0 && gamma < 2.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "adiabatic exponent gamma = {gamma} must lie in (1, 2)"
        )))
    }
}

/// Density from Bernoulli's law given `|∇Φ|²`.
pub fn density_from_speed_sq(speed_sq: f64, params: &GasParams) -> Result<f64> {
    if speed_sq.is_nan() || speed_sq < 0.0 {
        return Err(Error::Domain(format!("squared speed {speed_sq} is negative")));
    }
    let head = C0 - 0.5 * speed_sq;
    if head < 0.0 {
        return Err(Error::Cavitation(format!(
            "squared speed {speed_sq} exceeds the limit 2 C0 = {}",
            2.0 * C0
        )));
    }
    let g = params.gamma();
    Ok(((g - 1.0) / g * head).powf(1.0 / (g - 1.0)))
}

/// Background flow and linearization coefficients at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BackgroundState {
    pub r: f64,
    pub rho_hat: f64,
    pub u_hat: f64,
    pub c2: f64,
    pub du_dr: f64,
    pub drho_dr: f64,
    pub p1: f64,
    pub p2: f64,
    pub dp1_dr: f64,
    pub dp2_dr: f64,
}

impl BackgroundState {
    fn assemble(r: f64, rho: f64, u: f64, params: &GasParams) -> Self {
        let c2 = params.sound_speed_sq(rho);
        let mut state = Self {
            r,
            rho_hat: rho,
            u_hat: u,
            c2,
            du_dr: 0.0,
            drho_dr: 0.0,
            p1: 0.0,
            p2: 0.0,
            dp1_dr: 0.0,
            dp2_dr: 0.0,
        };
        let (drho, du) = background_derivatives(&state, params);
        state.drho_dr = drho;
        state.du_dr = du;
        let coeffs = linearization_coefficients(&state, params);
        state.p1 = coeffs.p1;
        state.p2 = coeffs.p2;
        state.dp1_dr = coeffs.dp1_dr;
        state.dp2_dr = coeffs.dp2_dr;
        state
    }

    /// `Û² - c²(ρ̂)`, positive on the supersonic branch.
    pub fn supersonic_margin(&self) -> f64 {
        self.u_hat * self.u_hat - self.c2
    }

    /// Mass residual `r²ρ̂Û - ρ₀q₀`.
    pub fn mass_residual(&self, params: &GasParams) -> f64 {
        self.r * self.r * self.rho_hat * self.u_hat - params.mass_constant()
    }

    pub fn bernoulli_residual(&self, params: &GasParams) -> f64 {
        let g = params.gamma();
        0.5 * self.u_hat * self.u_hat + g / (g - 1.0) * self.rho_hat.powf(g - 1.0) - C0
    }
}

/// `(dρ̂/dr, dÛ/dr)` from the mass and Bernoulli relations.
pub fn background_derivatives(state: &BackgroundState, params: &GasParams) -> (f64, f64) {
    let r = state.r;
    let u = state.u_hat;
    let d = u * u - state.c2;
    let drho = -2.0 * params.mass_constant() * u / (r * r * r * d);
    let du = 2.0 * u * state.c2 / (r * d);
    (drho, du)
}

/// Coefficients `P1`, `P2` of the linearized operator and their radial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub p1: f64,
    pub p2: f64,
    pub dp1_dr: f64,
    pub dp2_dr: f64,
}

pub fn linearization_coefficients(state: &BackgroundState, params: &GasParams) -> Coefficients {
    let g = params.gamma();
    let r = state.r;
    let s = state.u_hat * state.u_hat;
    let k = state.c2;
    let d = s - k;
    let p1 = k / d;
    let numer = (g - 1.0) * s * s + k * k + s * k;
    let p2 = 2.0 * numer / (d * d);
    // Differentiated with U' and (c²)' from the background ODEs; each carries a 1/(r d) factor.
    let dp1_dr = -k * (2.0 * (g - 1.0) * s * s + 4.0 * s * k) / (r * d * d * d);
    let bracket = (12.0 * (g - 1.0) * s * s - 8.0 * (g - 2.0) * s * k) * d
        - 4.0 * (g + 1.0) * s * (2.0 * (g - 1.0) * s * s + 2.0 * s * k + 2.0 * k * k);
    let dp2_dr = k * bracket / (r * d * d * d * d);
    Coefficients {
        p1,
        p2,
        dp1_dr,
        dp2_dr,
    }
}

/// Root-finder settings for the background system.
#[derive(Debug, Clone, Copy)]
pub struct BackgroundSolver {
    params: GasParams,
    /// Bound on `|f₁|/(ρ₀q₀)` and `|f₂|`.
    pub tolerance: f64,
    pub max_newton_iterations: usize,
    /// Fall back to bisection on the eliminated scalar equation when Newton fails.
    pub bisection_fallback: bool,
}

impl BackgroundSolver {
    pub fn new(params: GasParams) -> Self {
        Self {
            params,
            tolerance: 1e-12,
            max_newton_iterations: 60,
            bisection_fallback: true,
        }
    }

    pub fn params(&self) -> &GasParams {
        &self.params
    }

    /// Solves at a single radius from an asymptotics-based first guess.
    pub fn solve(&self, r: f64) -> Result<BackgroundState> {
        check_radius(r)?;
        let p = &self.params;
        let g = p.gamma();
        let u_guess = p.limit_speed() - (p.limit_speed() - p.q0()) * r.powf(2.0 * (1.0 - g));
        let rho_guess = p.mass_constant() / (r * r * u_guess);
        self.solve_from(r, (rho_guess, u_guess))
    }

    /// Solves at `r` starting Newton from `guess = (ρ, U)`.
    pub fn solve_from(&self, r: f64, guess: (f64, f64)) -> Result<BackgroundState> {
        check_radius(r)?;
        let p = &self.params;
        if r == 1.0 {
            return Ok(BackgroundState::assemble(1.0, p.rho0(), p.q0(), p));
        }
        match self.newton(r, guess) {
            Ok((rho, u)) => {
                let c2 = p.sound_speed_sq(rho);
                if u * u > c2 && u >= p.q0() {
                    return Ok(BackgroundState::assemble(r, rho, u, p));
                }
                if !self.bisection_fallback {
                    return Err(Error::Branch { r, u, c2 });
                }
            }
            Err(e) => {
                if !self.bisection_fallback {
                    return Err(e);
                }
            }
        }
        let (rho, u) = self.bisect(r)?;
        Ok(BackgroundState::assemble(r, rho, u, p))
    }

    /// Continuation along increasing radii, each solve seeded with the previous one.
    pub fn table(&self, radii: &[f64]) -> Result<Vec<BackgroundState>> {
        let mut out = Vec::with_capacity(radii.len());
        let mut prev: Option<BackgroundState> = None;
        for &r in radii {
            let state = match prev {
                Some(s) if r >= s.r => {
                    // Scale the density guess by the mass law so the seed tracks r⁻².
                    let rho = s.rho_hat * (s.r / r).powi(2);
                    self.solve_from(r, (rho, s.u_hat))?
                }
                _ => self.solve(r)?,
            };
            out.push(state);
            prev = Some(state);
        }
        Ok(out)
    }

    fn residuals(&self, r: f64, rho: f64, u: f64) -> (f64, f64) {
        let p = &self.params;
        let g = p.gamma();
        let f1 = r * r * rho * u - p.mass_constant();
        let f2 = 0.5 * u * u + g / (g - 1.0) * rho.powf(g - 1.0) - C0;
        (f1, f2)
    }

    fn converged(&self, f1: f64, f2: f64) -> bool {
        (f1 / self.params.mass_constant()).abs() <= self.tolerance && f2.abs() <= self.tolerance
    }

    fn newton(&self, r: f64, guess: (f64, f64)) -> Result<(f64, f64)> {
        let p = &self.params;
        let g = p.gamma();
        let (mut rho, mut u) = guess;
        if !(rho > 0.0 && u > 0.0) {
            return Err(Error::NoConvergence { r });
        }
        let mut hit = 0;
        for _ in 0..self.max_newton_iterations {
            let (f1, f2) = self.residuals(r, rho, u);
            if self.converged(f1, f2) {
                // A couple of polishing steps past tolerance cost nothing at quadratic rate.
                hit += 1;
                if hit > 2 {
                    return Ok((rho, u));
                }
            }
            let j11 = r * r * u;
            let j12 = r * r * rho;
            let j21 = g * rho.powf(g - 2.0);
            let j22 = u;
            let det = j11 * j22 - j12 * j21;
            if det == 0.0 || !det.is_finite() {
                return Err(Error::NoConvergence { r });
            }
            let d_rho = (f1 * j22 - f2 * j12) / det;
            let d_u = (j11 * f2 - j21 * f1) / det;
            let mut lambda = 1.0;
            while rho - lambda * d_rho <= 0.0 {
                lambda *= 0.5;
                if lambda < 1e-12 {
                    return Err(Error::NoConvergence { r });
                }
            }
            rho -= lambda * d_rho;
            u -= lambda * d_u;
            if !(rho.is_finite() && u.is_finite()) {
                return Err(Error::NoConvergence { r });
            }
        }
        let (f1, f2) = self.residuals(r, rho, u);
        if self.converged(f1, f2) {
            Ok((rho, u))
        } else {
            Err(Error::NoConvergence { r })
        }
    }

    /// Bisection on `½U² + γ/(γ-1)(ρ₀q₀/(r²U))^(γ-1) = C₀` over `U ∈ [q₀, √(2C₀)]`,
    /// which is increasing in `U` on the supersonic branch.
    fn bisect(&self, r: f64) -> Result<(f64, f64)> {
        let p = &self.params;
        let g = p.gamma();
        let m = p.mass_constant();
        let h = |u: f64| 0.5 * u * u + g / (g - 1.0) * (m / (r * r * u)).powf(g - 1.0) - C0;
        let mut lo = p.q0();
        let mut hi = p.limit_speed();
        if h(lo) > 0.0 || h(hi) < 0.0 {
            return Err(Error::NoConvergence { r });
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let u = 0.5 * (lo + hi);
        let rho = m / (r * r * u);
        // Polish in the full system; the bisection root already sits on the right branch.
        match self.newton(r, (rho, u)) {
            Ok((rho2, u2)) if u2 * u2 > p.sound_speed_sq(rho2) => Ok((rho2, u2)),
            _ => Ok((rho, u)),
        }
    }

    /// `Φ̂(r) = ∫₁^r Û(s) ds` at increasing radii, by composite Gauss–Legendre on log panels.
    pub fn potentials(&self, radii: &[f64]) -> Result<Vec<f64>> {
        let gl = GaussLegendre::new(8);
        let mut out = Vec::with_capacity(radii.len());
        let mut acc = 0.0;
        let mut last = 1.0;
        let mut seed: Option<BackgroundState> = None;
        for &r in radii {
            check_radius(r)?;
            if r < last {
                return Err(Error::Domain(format!(
                    "radii must be non-decreasing (got {r} after {last})"
                )));
            }
            if r > last {
                let panels = (((r / last).ln() / 0.02).ceil() as usize).max(1);
                let lo_log = last.ln();
                let step = ((r.ln()) - lo_log) / panels as f64;
                for k in 0..panels {
                    let a = (lo_log + k as f64 * step).exp();
                    let b = if k + 1 == panels {
                        r
                    } else {
                        (lo_log + (k + 1) as f64 * step).exp()
                    };
                    for (x, w) in gl.mapped(a, b) {
                        let state = match seed {
                            Some(s) => self.solve_from(x, (s.rho_hat * (s.r / x).powi(2), s.u_hat))?,
                            None => self.solve(x)?,
                        };
                        acc += w * state.u_hat;
                        seed = Some(state);
                    }
                }
                last = r;
            }
            out.push(acc);
        }
        Ok(out)
    }
}

fn check_radius(r: f64) -> Result<()> {
    if r >= 1.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("radius {r} is outside [1, inf)")))
    }
}

/// Single-radius background solve with default tolerances.
pub fn solve_background(r: f64, params: &GasParams) -> Result<BackgroundState> {
    BackgroundSolver::new(*params).solve(r)
}

/// `n` radii spaced uniformly in `ln r` over `[a, b]`.
pub fn log_spaced(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && a > 0.0 && b > a);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Entrance density from Bernoulli's law under the perturbed initial data.
pub fn initial_density_profile(
    phi: f64,
    eps: f64,
    profiles: &InitialData,
    params: &GasParams,
) -> Result<f64> {
    if !(0.0..=params.phi0()).contains(&phi) {
        return Err(Error::Domain(format!(
            "angle {phi} is outside [0, phi0 = {}]",
            params.phi0()
        )));
    }
    let g = params.gamma();
    let q0 = params.q0();
    let phi1 = profiles.radial_velocity.value(phi);
    let dphi0 = profiles.potential.derivative(phi);
    let brace = g / (g - 1.0) * params.rho0().powf(g - 1.0)
        - 0.5 * (2.0 * q0 * eps * phi1 + eps * eps * phi1 * phi1 + eps * eps * dphi0 * dphi0);
    if brace <= 0.0 {
        return Err(Error::Cavitation(format!(
            "initial density brace {brace} is not positive at phi = {phi}"
        )));
    }
    Ok(((g - 1.0) / g).powf(1.0 / (g - 1.0)) * brace.powf(1.0 / (g - 1.0)))
}

/// Writes `r,rho,U,c2,P1,P2,dP1,dP2` rows with 17 significant digits.
pub fn write_background_csv<W: Write>(out: &mut W, table: &[BackgroundState]) -> std::io::Result<()> {
    writeln!(out, "r,rho,U,c2,P1,P2,dP1,dP2")?;
    for s in table {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            s.r, s.rho_hat, s.u_hat, s.c2, s.p1, s.p2, s.dp1_dr, s.dp2_dr
        )?;
    }
    Ok(())
}
