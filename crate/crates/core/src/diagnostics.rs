//! Functionals of computed flows: mass flux, weighted energies, multiplier
//! positivity and power-law fits.

use std::f64::consts::PI;
use std::io::Write;

use crate::background::{initial_density_profile, BackgroundSolver, BackgroundState, GasParams};
use crate::error::{Error, Result};
use crate::geometry::AngularGrid;
use crate::march::{rhs_second_radial, FlowSlice, MarchTrace};
use crate::profile::InitialData;
use crate::quadrature::GaussLegendre;

/// `∫₀^{φ₀} f(φ) sinφ dφ` for nodal samples of `f`.
///
/// Each grid interval uses a four-point Gauss rule; `f` is interpolated there
/// by the quartic through the five nearest nodes (mirrored evenly past the
/// axis and the wall) while `sinφ` is evaluated exactly.
pub fn sphere_integral(values: &[f64], grid: &AngularGrid) -> f64 {
    let gl = GaussLegendre::new(4);
    let h = grid.spacing();
    let n = grid.len();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        // Stencil centred on the interval: nodes i-2..=i+2, shifted inward near the ends.
        let centre = i as isize;
        let idx: Vec<usize> = (-2..=2).map(|k| grid.reflect(centre + k)).collect();
        let a = grid.node(i);
        for (phi, w) in gl.mapped(a, a + h) {
            let x = (phi - a) / h;
            let mut f = 0.0;
            for (m, &node) in idx.iter().enumerate() {
                let xm = m as f64 - 2.0;
                let mut l = 1.0;
                for q in 0..5 {
                    if q != m {
                        let xq = q as f64 - 2.0;
                        l *= (x - xq) / (xm - xq);
                    }
                }
                f += values[node] * l;
            }
            acc += w * f * phi.sin();
        }
    }
    acc
}

/// `2π r² ∫ ρ ∂_rΦ sinφ dφ` through the sphere of the slice.
pub fn mass_flux(slice: &FlowSlice, params: &GasParams) -> Result<f64> {
    let mut integrand = Vec::with_capacity(slice.grid.len());
    for i in 0..slice.grid.len() {
        let s = slice.node_state(i, params);
        if s.head <= 0.0 {
            return Err(Error::Cavitation(format!(
                "no positive density at r = {}, phi = {}",
                slice.r,
                slice.grid.node(i)
            )));
        }
        integrand.push(s.rho * slice.dphi_dr[i]);
    }
    Ok(2.0 * PI * slice.r * slice.r * sphere_integral(&integrand, &slice.grid))
}

/// `m_ε = 2π ∫₀^{φ₀} ρ₀^ε(φ)(q₀ + εΦ₁(φ)) sinφ dφ` from the closed-form entrance data.
pub fn entrance_mass(eps: f64, data: &InitialData, params: &GasParams) -> Result<f64> {
    let gl = GaussLegendre::new(16);
    let panels = 256;
    let h = params.phi0() / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let a = p as f64 * h;
        for (phi, w) in gl.mapped(a, a + h) {
            let rho = initial_density_profile(phi, eps, data, params)?;
            acc += w * rho * (params.q0() + eps * data.radial_velocity.value(phi)) * phi.sin();
        }
    }
    Ok(2.0 * PI * acc)
}

/// Relative drift tolerance on the mass flux for a given angular resolution.
pub fn flux_tolerance(n_phi: usize) -> f64 {
    match n_phi {
        n if n >= 257 => 1e-6,
        n if n >= 129 => 1e-4,
        n if n >= 65 => 1e-3,
        _ => 1e-2,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluxReport {
    pub radii: Vec<f64>,
    pub fluxes: Vec<f64>,
    pub max_relative_drift: f64,
}

/// Flux through every stored sphere and its largest relative deviation from the entrance value.
pub fn flux_history(trace: &MarchTrace) -> Result<FluxReport> {
    let fluxes = trace
        .slices
        .iter()
        .map(|s| mass_flux(s, &trace.params))
        .collect::<Result<Vec<_>>>()?;
    let f0 = fluxes[0];
    let max_relative_drift = fluxes
        .iter()
        .map(|f| ((f - f0) / f0).abs())
        .fold(0.0, f64::max);
    Ok(FluxReport {
        radii: trace.radii(),
        fluxes,
        max_relative_drift,
    })
}

/// Weighted energies of the perturbation at every stored radius `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyReport {
    pub k: u32,
    pub t_values: Vec<f64>,
    /// `T^{μ+2k} ∫_{S_T} |∇^k ∂_rΦ̇|² dS`.
    pub surface_dr: Vec<f64>,
    /// `T^{μ-2γ+2k} ∫_{S_T} |∇^k (ZΦ̇/r)|² dS`.
    pub surface_z: Vec<f64>,
    /// `∫_{D_T} r^{μ-1-δ+2k} |∇^k ∂_rΦ̇|² dx`.
    pub volume_dr: Vec<f64>,
    /// `∫_{D_T} r^{μ+1-2γ+2k} |∇^k (ZΦ̇/r)|² dx`.
    pub volume_z: Vec<f64>,
    pub eps: f64,
}

/// Largest value of each of the four terms over `T ∈ [lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyMaxima {
    pub surface_dr: f64,
    pub surface_z: f64,
    pub volume_dr: f64,
    pub volume_z: f64,
}

impl EnergyMaxima {
    pub fn terms(&self) -> [f64; 4] {
        [self.surface_dr, self.surface_z, self.volume_dr, self.volume_z]
    }
}

impl EnergyReport {
    pub fn max_over(&self, lo: f64, hi: f64) -> Result<EnergyMaxima> {
        let idx: Vec<usize> = (0..self.t_values.len())
            .filter(|&i| self.t_values[i] >= lo && self.t_values[i] <= hi)
            .collect();
        if idx.is_empty() {
            return Err(Error::InsufficientSlices(format!(
                "no stored radius inside [{lo}, {hi}]"
            )));
        }
        let mx = |v: &[f64]| idx.iter().map(|&i| v[i]).fold(0.0, f64::max);
        Ok(EnergyMaxima {
            surface_dr: mx(&self.surface_dr),
            surface_z: mx(&self.surface_z),
            volume_dr: mx(&self.volume_dr),
            volume_z: mx(&self.volume_z),
        })
    }
}

/// Pointwise squared norms `(|∇^k ∂_rΦ̇|², |∇^k(ZΦ̇/r)|²)` on one slice.
fn energy_densities(
    slice: &FlowSlice,
    bg: &BackgroundState,
    k: u32,
    params: &GasParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = slice.r;
    let dphi = slice.dphi_dphi();
    match k {
        0 => Ok((
            slice.dphi_dr.iter().map(|v| (v - bg.u_hat).powi(2)).collect(),
            dphi.iter().map(|p| (p / r).powi(2)).collect(),
        )),
        1 => {
            let vrr = rhs_second_radial(slice, params)?;
            let vphi = slice.d2phi_drdphi();
            let pphiphi = slice.d2phi_dphi2();
            let dr: Vec<f64> = (0..vrr.len())
                .map(|i| ((vrr[i] - bg.du_dr).abs() + vphi[i].abs() / r).powi(2))
                .collect();
            let z: Vec<f64> = (0..vrr.len())
                .map(|i| ((vphi[i] / r - dphi[i] / (r * r)).abs() + pphiphi[i].abs() / (r * r)).powi(2))
                .collect();
            Ok((dr, z))
        }
        _ => Err(Error::InvalidParams(format!(
            "energy order k = {k} needs derivatives beyond the stored slices; only k = 0, 1 are available"
        ))),
    }
}

/// Surface and cumulative volume energies of `Φ̇ = Φ - Φ̂` for derivative order `k`.
pub fn weighted_energy(trace: &MarchTrace, solver: &BackgroundSolver, k: u32) -> Result<EnergyReport> {
    if trace.slices.len() < 2 {
        return Err(Error::InsufficientSlices(format!(
            "volume integrals need at least two stored slices, found {}",
            trace.slices.len()
        )));
    }
    let p = &trace.params;
    let (mu, g, d) = (p.mu(), p.gamma(), p.delta());
    let kf = k as f64;
    let radii = trace.radii();
    let states = solver.table(&radii)?;

    let mut report = EnergyReport {
        k,
        t_values: radii.clone(),
        surface_dr: Vec::new(),
        surface_z: Vec::new(),
        volume_dr: Vec::new(),
        volume_z: Vec::new(),
        eps: trace.eps,
    };
    let mut prev: Option<(f64, f64, f64)> = None;
    let (mut vol_dr, mut vol_z) = (0.0, 0.0);
    for (slice, bg) in trace.slices.iter().zip(&states) {
        let r = slice.r;
        let (e_dr, e_z) = energy_densities(slice, bg, k, p)?;
        let s_dr = 2.0 * PI * r * r * sphere_integral(&e_dr, &slice.grid);
        let s_z = 2.0 * PI * r * r * sphere_integral(&e_z, &slice.grid);
        report.surface_dr.push(r.powf(mu + 2.0 * kf) * s_dr);
        report.surface_z.push(r.powf(mu - 2.0 * g + 2.0 * kf) * s_z);
        let f_dr = r.powf(mu - 1.0 - d + 2.0 * kf) * s_dr;
        let f_z = r.powf(mu + 1.0 - 2.0 * g + 2.0 * kf) * s_z;
        if let Some((r0, a_dr, a_z)) = prev {
            vol_dr += 0.5 * (r - r0) * (a_dr + f_dr);
            vol_z += 0.5 * (r - r0) * (a_z + f_z);
        }
        report.volume_dr.push(vol_dr);
        report.volume_z.push(vol_z);
        prev = Some((r, f_dr, f_z));
    }
    Ok(report)
}

/// The multiplier `r^μ a(r) ∂_r` with `a(r) = 1 + r^{-δ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Multiplier {
    pub mu: f64,
    pub delta: f64,
}

impl Multiplier {
    pub fn from_params(params: &GasParams) -> Self {
        Self {
            mu: params.mu(),
            delta: params.delta(),
        }
    }

    pub fn a(&self, r: f64) -> f64 {
        1.0 + r.powf(-self.delta)
    }

    pub fn a_prime(&self, r: f64) -> f64 {
        -self.delta * r.powf(-self.delta - 1.0)
    }

    /// `(r^μ a, a, a')`.
    pub fn weight(&self, r: f64) -> Result<(f64, f64, f64)> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(Error::Domain(format!("multiplier evaluated at r = {r} < 1")));
        }
        let a = self.a(r);
        Ok((r.powf(self.mu) * a, a, self.a_prime(r)))
    }
}

pub fn multiplier_weight(r: f64, params: &GasParams) -> Result<(f64, f64, f64)> {
    Multiplier::from_params(params).weight(r)
}

/// Minima of the two normalized positivity expressions over a background table.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub mu: f64,
    pub delta: f64,
    /// `min r^δ [(P₂ - (μ+2)/2) a - ½ r a']`; must exceed `δ/2`.
    pub energy_min: f64,
    pub energy_min_at: f64,
    /// `min r^δ {[(P₂ - (μ+2)/2) a - ½ r a'] - ½δ r^{-δ}}`.
    pub energy_margin: f64,
    /// `min r^{2(γ-1)} [-(μP₁ + rP₁') a - r a' P₁]`.
    pub flux_min: f64,
    pub flux_min_at: f64,
    pub failures: Vec<String>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates both positivity conditions of the multiplier identity at every table radius.
pub fn positivity_certificates(
    table: &[BackgroundState],
    params: &GasParams,
    multiplier: Multiplier,
) -> CertificateReport {
    let Multiplier { mu, delta } = multiplier;
    let g = params.gamma();
    let mut energy = (f64::INFINITY, f64::NAN);
    let mut margin = f64::INFINITY;
    let mut flux = (f64::INFINITY, f64::NAN);
    for s in table {
        let r = s.r;
        let a = multiplier.a(r);
        let ap = multiplier.a_prime(r);
        let lhs5 = (s.p2 - (mu + 2.0) / 2.0) * a - 0.5 * r * ap;
        let lhs6 = -(mu * s.p1 + r * s.dp1_dr) * a - r * ap * s.p1;
        let n5 = lhs5 * r.powf(delta);
        if n5 < energy.0 {
            energy = (n5, r);
        }
        margin = margin.min(n5 - 0.5 * delta);
        let n6 = lhs6 * r.powf(2.0 * (g - 1.0));
        if n6 < flux.0 {
            flux = (n6, r);
        }
    }
    let mut failures = Vec::new();
    if table.is_empty() {
        failures.push("empty background table".to_string());
    }
    if !(delta > 0.0) {
        failures.push(format!("delta = {delta} leaves no decay in a(r); the energy bound degenerates"));
    }
    if !(energy.0 > 0.0) {
        failures.push(format!(
            "energy positivity fails: normalized minimum {:e} at r = {}",
            energy.0, energy.1
        ));
    }
    if !(margin > 0.0) {
        failures.push(format!(
            "energy inequality not strict: margin {margin:e} against delta/2 = {}",
            0.5 * delta
        ));
    }
    if !(flux.0 > 0.0) {
        failures.push(format!(
            "flux positivity fails: normalized minimum {:e} at r = {}",
            flux.0, flux.1
        ));
    }
    CertificateReport {
        mu,
        delta,
        energy_min: energy.0,
        energy_min_at: energy.1,
        energy_margin: margin,
        flux_min: flux.0,
        flux_min_at: flux.1,
        failures,
    }
}

/// Least-squares line through `(ln r, ln y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    pub quantity: String,
    pub r_lo: f64,
    pub r_hi: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `ln y`.
    pub residual: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 8;

pub fn decay_fit(quantity: &str, r: &[f64], y: &[f64], window: (f64, f64)) -> Result<DecayFit> {
    if r.len() != y.len() {
        return Err(Error::InvalidParams("radii and values differ in length".into()));
    }
    let (lo, hi) = window;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (&ri, &yi) in r.iter().zip(y) {
        if ri >= lo && ri <= hi {
            if !(yi > 0.0) {
                return Err(Error::Domain(format!(
                    "{quantity} = {yi} at r = {ri} has no logarithm"
                )));
            }
            xs.push(ri.ln());
            ys.push(yi.ln());
        }
    }
    if xs.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientSlices(format!(
            "{} samples of {quantity} in [{lo}, {hi}], need {MIN_FIT_POINTS}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateInput("all fit radii coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        quantity: quantity.to_string(),
        r_lo: lo,
        r_hi: hi,
        slope,
        intercept,
        residual,
        points: xs.len(),
    })
}

pub fn write_energy_csv<W: Write>(out: &mut W, reports: &[EnergyReport]) -> std::io::Result<()> {
    writeln!(out, "k,T,surface_dr,surface_Z,volume_dr,volume_Z,eps")?;
    for rep in reports {
        for i in 0..rep.t_values.len() {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                rep.k,
                rep.t_values[i],
                rep.surface_dr[i],
                rep.surface_z[i],
                rep.volume_dr[i],
                rep.volume_z[i],
                rep.eps
            )?;
        }
    }
    Ok(())
}

pub fn write_decay_csv<W: Write>(out: &mut W, fits: &[DecayFit]) -> std::io::Result<()> {
    writeln!(out, "quantity,r_lo,r_hi,slope,residual")?;
    for f in fits {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e}",
            f.quantity, f.r_lo, f.r_hi, f.slope, f.residual
        )?;
    }
    Ok(())
}
