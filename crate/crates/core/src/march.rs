//! Outward march of the axisymmetric potential equation, with `r` as the evolution variable.
//!
//! The state on each sphere is `(Φ, V = ∂_rΦ)` sampled on a uniform angular
//! grid. Angular derivatives use fourth-order central differences with even
//! ghost values at the axis and the wall, so `∂_φΦ` vanishes there by
//! construction. Classical RK4 advances the pair; the step follows the angular
//! characteristic speed.

use std::io::Write;

use crate::background::{BackgroundSolver, GasParams};
use crate::error::{Error, Result};
use crate::geometry::AngularGrid;
use crate::profile::InitialData;

/// Smallest admissible `(∂_rΦ)² - c²`.
pub const HYPERBOLICITY_FLOOR: f64 = 1e-8;
/// Smallest admissible `C₀ - ½|∇Φ|²`.
pub const CAVITATION_FLOOR: f64 = 1e-10;

/// `(Φ, ∂_rΦ)` on the sphere of radius `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSlice {
    pub r: f64,
    pub grid: AngularGrid,
    pub phi: Vec<f64>,
    pub dphi_dr: Vec<f64>,
}

#[inline]
fn d1(f: &[f64], grid: &AngularGrid, i: usize) -> f64 {
    let i = i as isize;
    let at = |k: isize| f[grid.reflect(i + k)];
    (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * grid.spacing())
}

#[inline]
fn d2(f: &[f64], grid: &AngularGrid, i: usize) -> f64 {
    let i = i as isize;
    let at = |k: isize| f[grid.reflect(i + k)];
    let h = grid.spacing();
    (-at(-2) + 16.0 * at(-1) - 30.0 * at(0) + 16.0 * at(1) - at(2)) / (12.0 * h * h)
}

/// Pointwise flow quantities derived from a slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub dphi_dphi: f64,
    /// `C₀ - ½|∇Φ|²`.
    pub head: f64,
    pub c2: f64,
    pub rho: f64,
    /// `(∂_rΦ)² - c²`.
    pub hyperbolicity: f64,
}

impl FlowSlice {
    pub fn new(r: f64, grid: AngularGrid, phi: Vec<f64>, dphi_dr: Vec<f64>) -> Result<Self> {
        if phi.len() != grid.len() || dphi_dr.len() != grid.len() {
            return Err(Error::InvalidParams(format!(
                "slice arrays must have {} entries",
                grid.len()
            )));
        }
        Ok(Self {
            r,
            grid,
            phi,
            dphi_dr,
        })
    }

    /// The slice at `r = 1` given by the perturbed entrance data.
    pub fn initial(grid: AngularGrid, eps: f64, data: &InitialData, params: &GasParams) -> Self {
        let nodes = grid.nodes();
        let phi = nodes.iter().map(|&p| eps * data.potential.value(p)).collect();
        let dphi_dr = nodes
            .iter()
            .map(|&p| params.q0() + eps * data.radial_velocity.value(p))
            .collect();
        Self {
            r: 1.0,
            grid,
            phi,
            dphi_dr,
        }
    }

    pub fn dphi_dphi(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| d1(&self.phi, &self.grid, i)).collect()
    }

    /// `∂_φ∂_rΦ` from the stored radial velocity.
    pub fn d2phi_drdphi(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| d1(&self.dphi_dr, &self.grid, i)).collect()
    }

    pub fn d2phi_dphi2(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|i| d2(&self.phi, &self.grid, i)).collect()
    }

    pub fn node_state(&self, i: usize, params: &GasParams) -> NodeState {
        let pp = d1(&self.phi, &self.grid, i);
        let v = self.dphi_dr[i];
        let head = params.c0() - 0.5 * (v * v + pp * pp / (self.r * self.r));
        let c2 = (params.gamma() - 1.0) * head;
        let rho = if head > 0.0 {
            (c2 / params.gamma()).powf(1.0 / (params.gamma() - 1.0))
        } else {
            0.0
        };
        NodeState {
            dphi_dphi: pp,
            head,
            c2,
            rho,
            hyperbolicity: v * v - c2,
        }
    }

    /// Smallest hyperbolicity and cavitation margins over the slice.
    pub fn guard_margins(&self, params: &GasParams) -> (f64, f64) {
        (0..self.grid.len())
            .map(|i| self.node_state(i, params))
            .fold((f64::INFINITY, f64::INFINITY), |(h, c), s| {
                (h.min(s.hyperbolicity), c.min(s.head))
            })
    }

    fn check_guards(&self, params: &GasParams) -> Result<()> {
        for i in 0..self.grid.len() {
            let s = self.node_state(i, params);
            if s.head <= CAVITATION_FLOOR {
                return Err(Error::Cavitation(format!(
                    "C0 - |grad Phi|^2/2 = {:e} at r = {}, phi = {}",
                    s.head,
                    self.r,
                    self.grid.node(i)
                )));
            }
            if s.hyperbolicity <= HYPERBOLICITY_FLOOR {
                return Err(Error::HyperbolicityLoss {
                    r: self.r,
                    phi: self.grid.node(i),
                    margin: s.hyperbolicity,
                });
            }
        }
        Ok(())
    }

    /// Largest stable radial step: `κ·h_φ·r·min √((∂_rΦ)² - c²)/c`.
    pub fn stable_step(&self, kappa: f64, params: &GasParams) -> f64 {
        let ratio = (0..self.grid.len())
            .map(|i| {
                let s = self.node_state(i, params);
                (s.hyperbolicity.max(0.0) / s.c2.max(f64::MIN_POSITIVE)).sqrt()
            })
            .fold(f64::INFINITY, f64::min);
        kappa * self.grid.spacing() * self.r * ratio
    }
}

/// `∂_r²Φ` at every node, solved from the axisymmetric potential equation.
pub fn rhs_second_radial(slice: &FlowSlice, params: &GasParams) -> Result<Vec<f64>> {
    let FlowSlice {
        r, grid, phi, dphi_dr, ..
    } = slice;
    let r = *r;
    let (r2, r3) = (r * r, r * r * r);
    let mut out = Vec::with_capacity(grid.len());
    for i in 0..grid.len() {
        let s = slice.node_state(i, params);
        let ang = grid.node(i);
        if s.head <= CAVITATION_FLOOR {
            return Err(Error::Cavitation(format!(
                "C0 - |grad Phi|^2/2 = {:e} at r = {r}, phi = {ang}",
                s.head
            )));
        }
        if s.hyperbolicity <= HYPERBOLICITY_FLOOR {
            return Err(Error::HyperbolicityLoss {
                r,
                phi: ang,
                margin: s.hyperbolicity,
            });
        }
        let v = dphi_dr[i];
        let pp = s.dphi_dphi;
        let ppp = d2(phi, grid, i);
        let vp = d1(dphi_dr, grid, i);
        // cot φ ∂_φΦ tends to ∂_φ²Φ on the axis because ∂_φΦ vanishes there.
        let cot_term = if i == 0 { ppp } else { pp / ang.tan() };
        let num = -(pp * pp / r2 - s.c2) * ppp / r2 - 2.0 * v * pp * vp / r2
            + (2.0 * r2 * s.c2 + pp * pp) * v / r3
            + s.c2 * cot_term / r2;
        out.push(num / s.hyperbolicity);
    }
    Ok(out)
}

fn axpy(base: &[f64], k: &[f64], a: f64) -> Vec<f64> {
    base.iter().zip(k).map(|(b, x)| b + a * x).collect()
}

/// One classical RK4 step of size `dr`.
pub fn step(slice: &FlowSlice, dr: f64, params: &GasParams) -> Result<FlowSlice> {
    if !(dr > 0.0 && dr.is_finite()) {
        return Err(Error::StepRejected {
            r: slice.r,
            reason: format!("step size {dr} is not positive"),
        });
    }
    let at = |r: f64, phi: Vec<f64>, v: Vec<f64>| FlowSlice {
        r,
        grid: slice.grid,
        phi,
        dphi_dr: v,
    };
    let r = slice.r;
    let k1v = rhs_second_radial(slice, params)?;
    let k1p = &slice.dphi_dr;

    let s2 = at(
        r + 0.5 * dr,
        axpy(&slice.phi, k1p, 0.5 * dr),
        axpy(&slice.dphi_dr, &k1v, 0.5 * dr),
    );
    let k2v = rhs_second_radial(&s2, params)?;
    let k2p = s2.dphi_dr;

    let s3 = at(
        r + 0.5 * dr,
        axpy(&slice.phi, &k2p, 0.5 * dr),
        axpy(&slice.dphi_dr, &k2v, 0.5 * dr),
    );
    let k3v = rhs_second_radial(&s3, params)?;
    let k3p = s3.dphi_dr;

    let s4 = at(
        r + dr,
        axpy(&slice.phi, &k3p, dr),
        axpy(&slice.dphi_dr, &k3v, dr),
    );
    let k4v = rhs_second_radial(&s4, params)?;
    let k4p = s4.dphi_dr;

    let n = slice.grid.len();
    let mut phi = Vec::with_capacity(n);
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        phi.push(slice.phi[i] + dr / 6.0 * (k1p[i] + 2.0 * k2p[i] + 2.0 * k3p[i] + k4p[i]));
        v.push(slice.dphi_dr[i] + dr / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]));
    }
    let next = at(r + dr, phi, v);
    if let Err(e) = next.check_guards(params) {
        return Err(Error::StepRejected {
            r: next.r,
            reason: e.to_string(),
        });
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarchConfig {
    pub n_phi: usize,
    pub r_max: f64,
    /// Keep every `store_every`-th accepted step (checkpoints and the final slice are always kept).
    pub store_every: usize,
    pub kappa: f64,
    /// Radii the march lands on exactly.
    pub checkpoints: Vec<f64>,
    pub max_halvings: u32,
}

impl Default for MarchConfig {
    fn default() -> Self {
        Self {
            n_phi: 129,
            r_max: 100.0,
            store_every: 1,
            kappa: 0.5,
            checkpoints: Vec::new(),
            max_halvings: 10,
        }
    }
}

impl MarchConfig {
    fn validate(&self) -> Result<()> {
        if !(self.r_max > 1.0 && self.r_max.is_finite()) {
            return Err(Error::InvalidParams(format!("r_max = {} must exceed 1", self.r_max)));
        }
        if self.store_every == 0 {
            return Err(Error::InvalidParams("store_every must be at least 1".into()));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidParams(format!("kappa = {} must be positive", self.kappa)));
        }
        Ok(())
    }
}

/// Minimum guard margins after one accepted step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardRecord {
    pub r: f64,
    pub hyperbolicity: f64,
    pub cavitation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarchTrace {
    pub slices: Vec<FlowSlice>,
    pub steps_taken: usize,
    pub guard_log: Vec<GuardRecord>,
    pub params: GasParams,
    pub eps: f64,
    pub config: MarchConfig,
}

impl MarchTrace {
    pub fn radii(&self) -> Vec<f64> {
        self.slices.iter().map(|s| s.r).collect()
    }

    pub fn final_slice(&self) -> &FlowSlice {
        self.slices.last().expect("a trace holds at least the entrance slice")
    }

    /// Smallest hyperbolicity and cavitation margins over every accepted step.
    pub fn guard_minima(&self) -> (f64, f64) {
        self.guard_log
            .iter()
            .fold((f64::INFINITY, f64::INFINITY), |(h, c), g| {
                (h.min(g.hyperbolicity), c.min(g.cavitation))
            })
    }

    /// The stored slice whose radius equals `r` to rounding, if any.
    pub fn slice_at(&self, r: f64) -> Option<&FlowSlice> {
        self.slices
            .iter()
            .find(|s| (s.r - r).abs() <= 1e-12 * r.max(1.0))
    }
}

/// Marches the entrance data `(εΦ₀, q₀ + εΦ₁)` from `r = 1` to `config.r_max`.
pub fn march(
    data: &InitialData,
    eps: f64,
    config: &MarchConfig,
    params: &GasParams,
) -> Result<MarchTrace> {
    config.validate()?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::InvalidParams(format!("eps = {eps} must be nonnegative")));
    }
    let grid = AngularGrid::new(config.n_phi, params.phi0())?;
    let mut current = FlowSlice::initial(grid, eps, data, params);
    current.check_guards(params)?;

    let mut stops: Vec<f64> = config
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c > 1.0 && c < config.r_max)
        .collect();
    stops.push(config.r_max);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let (h0, c0) = current.guard_margins(params);
    let mut guard_log = vec![GuardRecord {
        r: 1.0,
        hyperbolicity: h0,
        cavitation: c0,
    }];
    let mut slices = vec![current.clone()];
    let mut steps = 0usize;
    let mut next_stop = 0usize;

    while next_stop < stops.len() {
        let target = stops[next_stop];
        let mut dr = current.stable_step(config.kappa, params);
        let mut landing = false;
        // Stretch the last step slightly rather than leave a sliver before a stop.
        if current.r + dr >= target - 1e-3 * dr {
            dr = target - current.r;
            landing = true;
        }
        let mut attempt = 0;
        let next = loop {
            match step(&current, dr, params) {
                Ok(s) => break s,
                Err(e) => {
                    if attempt >= config.max_halvings {
                        return Err(Error::AbortedAt {
                            r: current.r,
                            cause: Box::new(e),
                        });
                    }
                    attempt += 1;
                    dr *= 0.5;
                    landing = false;
                }
            }
        };
        current = next;
        if landing {
            current.r = target;
            next_stop += 1;
        }
        steps += 1;
        let (h, c) = current.guard_margins(params);
        guard_log.push(GuardRecord {
            r: current.r,
            hyperbolicity: h,
            cavitation: c,
        });
        if landing || steps % config.store_every == 0 {
            slices.push(current.clone());
        }
    }

    Ok(MarchTrace {
        slices,
        steps_taken: steps,
        guard_log,
        params: *params,
        eps,
        config: config.clone(),
    })
}

/// `Φ̇ = Φ - Φ̂` and its first derivatives on one stored sphere.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSlice {
    pub r: f64,
    pub dot_phi: Vec<f64>,
    pub d_dot_phi_dr: Vec<f64>,
    pub d_dot_phi_dphi: Vec<f64>,
}

/// Subtracts the radial background from every stored slice.
pub fn perturbation(trace: &MarchTrace, solver: &BackgroundSolver) -> Result<Vec<PerturbationSlice>> {
    let radii = trace.radii();
    let states = solver.table(&radii)?;
    let pots = solver.potentials(&radii)?;
    Ok(trace
        .slices
        .iter()
        .zip(states.iter().zip(&pots))
        .map(|(s, (b, p))| PerturbationSlice {
            r: s.r,
            dot_phi: s.phi.iter().map(|x| x - p).collect(),
            d_dot_phi_dr: s.dphi_dr.iter().map(|v| v - b.u_hat).collect(),
            d_dot_phi_dphi: s.dphi_dphi(),
        })
        .collect())
}

/// Largest `|Φ - Φ̂|` and `|∂_rΦ - Û|` over all stored slices.
pub fn background_deviation(trace: &MarchTrace, solver: &BackgroundSolver) -> Result<(f64, f64)> {
    let pert = perturbation(trace, solver)?;
    let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(pert.iter().fold((0.0f64, 0.0f64), |(a, b), p| {
        (a.max(sup(&p.dot_phi)), b.max(sup(&p.d_dot_phi_dr)))
    }))
}

/// Writes `r,phi,Phi,dPhi_dr,dPhi_dphi,rho,c2,mach_radial` rows for one slice.
pub fn write_slice_csv<W: Write>(out: &mut W, slice: &FlowSlice, params: &GasParams) -> std::io::Result<()> {
    writeln!(out, "r,phi,Phi,dPhi_dr,dPhi_dphi,rho,c2,mach_radial")?;
    for i in 0..slice.grid.len() {
        let s = slice.node_state(i, params);
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            slice.r,
            slice.grid.node(i),
            slice.phi[i],
            slice.dphi_dr[i],
            s.dphi_dphi,
            s.rho,
            s.c2,
            slice.dphi_dr[i] / s.c2.sqrt()
        )?;
    }
    Ok(())
}

/// Plain `key = value` run metadata.
pub fn write_metadata<W: Write>(out: &mut W, trace: &MarchTrace) -> std::io::Result<()> {
    let p = &trace.params;
    let (h, c) = trace.guard_minima();
    writeln!(out, "gamma = {:.16e}", p.gamma())?;
    writeln!(out, "q0 = {:.16e}", p.q0())?;
    writeln!(out, "rho0 = {:.16e}", p.rho0())?;
    writeln!(out, "phi0_rad = {:.16e}", p.phi0())?;
    writeln!(out, "eps = {:.16e}", trace.eps)?;
    writeln!(out, "n_phi = {}", trace.config.n_phi)?;
    writeln!(out, "r_max = {:.16e}", trace.config.r_max)?;
    writeln!(out, "kappa = {:.16e}", trace.config.kappa)?;
    writeln!(out, "store_every = {}", trace.config.store_every)?;
    writeln!(out, "steps_taken = {}", trace.steps_taken)?;
    writeln!(out, "stored_slices = {}", trace.slices.len())?;
    writeln!(out, "min_hyperbolicity_margin = {:.16e}", h)?;
    writeln!(out, "min_cavitation_margin = {:.16e}", c)?;
    Ok(())
}
