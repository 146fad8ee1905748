//! Experiment configuration read from TOML.
//!
//! Every key is optional; missing keys take the defaults below. Angles carry
//! an `_rad` suffix. Unknown keys are rejected so that a typo cannot silently
//! fall back to a default.

use std::f64::consts::FRAC_PI_6;
use std::path::Path;

use nozzle_core::background::GasParams;
use nozzle_core::march::MarchConfig;
use nozzle_core::profile::{BumpProfile, InitialData};
use serde::Deserialize;

use crate::outcome::Failure;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub gas: GasSection,
    pub grid: GridSection,
    pub background: BackgroundSection,
    pub perturbation: PerturbationSection,
    pub diagnostics: DiagnosticsSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GasSection {
    pub gamma: f64,
    pub q0: f64,
    pub phi0_rad: f64,
    /// Multiplier decay exponent; half its admissible ceiling when absent.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub n_phi: usize,
    pub r_max: f64,
    pub store_every: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BackgroundSection {
    pub r_max: f64,
    pub n_radii: usize,
    pub fit_window: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSection {
    /// Only `"bump"` (the `exp(-1/(1-t²))` profile) is available.
    pub profile: String,
    pub potential_amplitude: f64,
    /// Centers default to `φ₀/2` and widths to `φ₀/4`.
    pub potential_center_rad: Option<f64>,
    pub potential_width_rad: Option<f64>,
    pub velocity_amplitude: f64,
    pub velocity_center_rad: Option<f64>,
    pub velocity_width_rad: Option<f64>,
    pub amplitudes: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DiagnosticsSection {
    pub energy_k: Vec<u32>,
    pub energy_amplitudes: Vec<f64>,
    pub energy_window: [f64; 2],
    pub flux_eps: f64,
    pub decay_eps: f64,
    pub dr_decay_window: [f64; 2],
    pub z_decay_window: [f64; 2],
    pub z_probes: usize,
    pub inequality_family: usize,
    pub inequality_levels: u32,
    /// Replaces `μ = 4γ - 6` in the positivity certificates.
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            gas: GasSection::default(),
            grid: GridSection::default(),
            background: BackgroundSection::default(),
            perturbation: PerturbationSection::default(),
            diagnostics: DiagnosticsSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for GasSection {
    fn default() -> Self {
        Self {
            gamma: 1.4,
            q0: 1.2,
            phi0_rad: FRAC_PI_6,
            delta: None,
        }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        let m = MarchConfig::default();
        Self {
            n_phi: m.n_phi,
            r_max: m.r_max,
            store_every: m.store_every,
            kappa: m.kappa,
        }
    }
}

impl Default for BackgroundSection {
    fn default() -> Self {
        Self {
            r_max: 1e6,
            n_radii: 200,
            fit_window: [1e2, 1e4],
        }
    }
}

impl Default for PerturbationSection {
    fn default() -> Self {
        let d = InitialData::default_for(FRAC_PI_6);
        Self {
            profile: "bump".into(),
            potential_amplitude: d.potential.amplitude,
            potential_center_rad: None,
            potential_width_rad: None,
            velocity_amplitude: d.radial_velocity.amplitude,
            velocity_center_rad: None,
            velocity_width_rad: None,
            amplitudes: vec![0.0, 1e-3],
        }
    }
}

impl Default for DiagnosticsSection {
    fn default() -> Self {
        Self {
            energy_k: vec![0, 1],
            energy_amplitudes: vec![5e-4, 1e-3, 2e-3],
            energy_window: [10.0, 100.0],
            flux_eps: 1e-3,
            decay_eps: 1e-3,
            dr_decay_window: [10.0, 100.0],
            z_decay_window: [1e2, 1e4],
            z_probes: 100,
            inequality_family: 50,
            inequality_levels: 3,
            mu: None,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            seed: 2024,
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn window_ok(w: [f64; 2]) -> bool {
    w[0] >= 1.0 && w[1] > w[0] && w[1].is_finite()
}

impl ExperimentConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let cfg = match path {
            None => Self::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| usage(format!("cannot read config {}: {e}", p.display())))?;
                toml::from_str(&text)
                    .map_err(|e| usage(format!("invalid config {}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), Failure> {
        self.gas_params()?;
        let g = &self.grid;
        if g.n_phi < 18 {
            return Err(usage(format!("grid.n_phi = {} must be at least 18", g.n_phi)));
        }
        if !(g.r_max > 1.0 && g.r_max.is_finite()) {
            return Err(usage(format!("grid.r_max = {} must exceed 1", g.r_max)));
        }
        if g.store_every == 0 || !(g.kappa > 0.0 && g.kappa.is_finite()) {
            return Err(usage("grid.store_every must be >= 1 and grid.kappa positive"));
        }
        let b = &self.background;
        if !(b.r_max > 1.0 && b.r_max.is_finite()) || b.n_radii < 8 || !window_ok(b.fit_window) {
            return Err(usage(
                "background needs r_max > 1, n_radii >= 8 and an increasing fit_window inside [1, inf)",
            ));
        }
        let p = &self.perturbation;
        if p.profile != "bump" {
            return Err(usage(format!(
                "perturbation.profile = {:?}; only \"bump\" is available",
                p.profile
            )));
        }
        if p.amplitudes.is_empty() {
            return Err(usage("perturbation.amplitudes must list at least one amplitude"));
        }
        let eps_ok = |e: f64| e >= 0.0 && e.is_finite();
        if !p.amplitudes.iter().all(|&e| eps_ok(e)) {
            return Err(usage("perturbation amplitudes must be finite and nonnegative"));
        }
        let widths = [p.potential_width_rad, p.velocity_width_rad];
        if widths.iter().flatten().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(usage("perturbation widths must be positive"));
        }
        let data = self.initial_data();
        let phi0 = self.gas.phi0_rad;
        if !data.potential.is_interior(phi0) || !data.radial_velocity.is_interior(phi0) {
            return Err(usage(
                "perturbation profiles must be supported strictly inside (0, phi0_rad)",
            ));
        }
        let d = &self.diagnostics;
        if d.energy_k.iter().any(|&k| k > 1) {
            return Err(usage("diagnostics.energy_k may only contain 0 and 1"));
        }
        if d.energy_amplitudes.len() < 2 || !d.energy_amplitudes.iter().all(|&e| e > 0.0 && e.is_finite()) {
            return Err(usage("diagnostics.energy_amplitudes needs at least two positive amplitudes"));
        }
        if !(d.flux_eps > 0.0 && d.decay_eps > 0.0 && eps_ok(d.flux_eps) && eps_ok(d.decay_eps)) {
            return Err(usage("diagnostics.flux_eps and decay_eps must be positive"));
        }
        for w in [d.energy_window, d.dr_decay_window, d.z_decay_window] {
            if !window_ok(w) {
                return Err(usage(format!("window {w:?} must be increasing inside [1, inf)")));
            }
        }
        if d.inequality_family == 0 || d.inequality_levels < 2 || d.z_probes == 0 {
            return Err(usage(
                "diagnostics needs inequality_family >= 1, inequality_levels >= 2 and z_probes >= 1",
            ));
        }
        if let Some(mu) = d.mu {
            if !mu.is_finite() {
                return Err(usage("diagnostics.mu must be finite"));
            }
        }
        Ok(())
    }

    pub fn gas_params(&self) -> Result<GasParams, Failure> {
        let g = &self.gas;
        let p = GasParams::new(g.gamma, g.q0, g.phi0_rad).map_err(|e| usage(e.to_string()))?;
        match g.delta {
            Some(d) => p.with_delta(d).map_err(|e| usage(e.to_string())),
            None => Ok(p),
        }
    }

    pub fn initial_data(&self) -> InitialData {
        let p = &self.perturbation;
        let phi0 = self.gas.phi0_rad;
        let bump = |a: f64, c: Option<f64>, w: Option<f64>| {
            BumpProfile::new(a, c.unwrap_or(0.5 * phi0), w.unwrap_or(0.25 * phi0))
        };
        InitialData::new(
            bump(p.potential_amplitude, p.potential_center_rad, p.potential_width_rad),
            bump(p.velocity_amplitude, p.velocity_center_rad, p.velocity_width_rad),
        )
    }

    /// Angular resolution after `refine` doublings (negative halves it).
    pub fn n_phi(&self, refine: i32) -> usize {
        let cells = self.grid.n_phi - 1;
        if refine >= 0 {
            (cells << refine) + 1
        } else {
            (cells >> (-refine)).max(17) + 1
        }
    }

    pub fn march_config(&self, refine: i32, r_max: f64) -> MarchConfig {
        MarchConfig {
            n_phi: self.n_phi(refine),
            r_max,
            store_every: self.grid.store_every,
            kappa: self.grid.kappa,
            ..MarchConfig::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<ExperimentConfig, Failure> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| usage(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.gas.gamma, 1.4);
        assert_eq!(c.grid.n_phi, 129);
        assert_eq!(c.perturbation.amplitudes, vec![0.0, 1e-3]);
    }

    #[test]
    fn out_of_range_gamma_and_subsonic_entrance_are_rejected() {
        assert!(matches!(parse("[gas]\ngamma = 2.5\n"), Err(Failure::Usage(_))));
        assert!(matches!(parse("[gas]\nq0 = 0.3\n"), Err(Failure::Usage(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("[gas]\nphi0 = 0.5\n").is_err());
    }

    #[test]
    fn refinement_doubles_cells() {
        let c = parse("").unwrap();
        assert_eq!(c.n_phi(1), 257);
        assert_eq!(c.n_phi(-1), 65);
    }
}
