//! Threshold checks run by `background`, `ineq` and `verify`.
//!
//! Each group writes its tables into the given output directory and appends
//! one line per threshold, with the measured value, to the checklist.

use std::f64::consts::PI;

use nozzle_core::background::{
    log_spaced, write_background_csv, BackgroundSolver, BackgroundState, GasParams,
};
use nozzle_core::diagnostics::{
    decay_fit, flux_history, flux_tolerance, positivity_certificates, weighted_energy,
    write_decay_csv, write_energy_csv, DecayFit, EnergyReport, Multiplier,
};
use nozzle_core::geometry::autodiff::{Polynomial, Scalar};
use nozzle_core::geometry::extension::{
    derivative_jump, extension_coefficients, weighted_sup_ratio, RadialSamples, D3,
};
use nozzle_core::geometry::inequality::{
    bump_family, cnk_conditions_check, refinement_study, Composite, InequalityId, WeightParams,
};
use nozzle_core::geometry::zfields::{
    commutator_check, radial_commutator_check, z_annihilates_radius, z_bound_margin,
    z_field_identity_check, ZIndex,
};
use nozzle_core::march::{background_deviation, march, perturbation, MarchTrace};
use nozzle_core::Result as CoreResult;

use crate::config::ExperimentConfig;
use crate::outcome::{Checklist, Failure};
use crate::output::{metadata, num, OutDir};

/// Everything a check group needs besides the output directory.
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub params: GasParams,
    pub seed: u64,
    /// Angular grid doublings; `-1` for `--coarse`.
    pub refine: i32,
}

impl Ctx {
    fn run(&self, eps: f64, refine: i32, r_max: f64) -> CoreResult<MarchTrace> {
        let cfg = self.cfg.march_config(refine, r_max);
        march(&self.cfg.initial_data(), eps, &cfg, &self.params)
    }

    fn solver(&self) -> BackgroundSolver {
        BackgroundSolver::new(self.params)
    }
}

type Group = Result<(), Failure>;

fn sup_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Background table, its decay fits and the coefficient sign report.
pub fn background(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let p = &ctx.params;
    let b = &ctx.cfg.background;
    let radii = log_spaced(1.0, b.r_max, b.n_radii);
    let table = match ctx.solver().table(&radii) {
        Ok(t) => t,
        Err(e) => {
            list.record_err("background table", &e);
            return Ok(());
        }
    };
    out.write("background.csv", |mut w| write_background_csv(&mut w, &table))?;

    let m = p.mass_constant();
    let mass = table.iter().map(|s| s.mass_residual(p).abs() / m).fold(0.0, f64::max);
    list.record(mass < 1e-10, format!("mass residual |r²ρ̂Û - ρ₀q₀|/(ρ₀q₀): {mass:.3e} (threshold 1e-10)"));
    let bern = table.iter().map(|s| s.bernoulli_residual(p).abs()).fold(0.0, f64::max);
    list.record(bern < 1e-10, format!("Bernoulli residual: {bern:.3e} (threshold 1e-10)"));
    let mono = table.iter().filter(|s| !(s.du_dr > 0.0 && s.drho_dr < 0.0)).count();
    list.record(mono == 0, format!("radii violating Û' > 0, ρ̂' < 0: {mono} of {}", table.len()));
    let signs = table
        .iter()
        .filter(|s| !(s.p1 > 0.0 && s.dp1_dr < 0.0 && s.p2 > 0.0))
        .count();
    list.record(signs == 0, format!("radii violating P1 > 0, P1' < 0, P2 > 0: {signs} of {}", table.len()));

    let g = p.gamma();
    let window = (b.fit_window[0], b.fit_window[1]);
    let rho: Vec<f64> = table.iter().map(|s| s.rho_hat).collect();
    let c2: Vec<f64> = table.iter().map(|s| s.c2).collect();
    let gap: Vec<f64> = table
        .iter()
        .map(|s| (s.p2 - 2.0 * (g - 1.0)).abs())
        .collect();
    let mut fits: Vec<DecayFit> = Vec::new();
    for (name, ys, want) in [("rho_hat", &rho, -2.0), ("c2", &c2, 2.0 * (1.0 - g))] {
        match decay_fit(name, &radii, ys, window) {
            Ok(f) => {
                list.record(
                    (f.slope - want).abs() <= 0.05,
                    format!("slope of {name} on [{}, {}]: {:.4} (target {want:.3} ± 0.05)", window.0, window.1, f.slope),
                );
                fits.push(f);
            }
            Err(e) => list.record_err(&format!("fit of {name}"), &e),
        }
    }
    if let Ok(f) = decay_fit("abs_P2_minus_limit", &radii, &gap, window) {
        fits.push(f);
    }
    let scaled_sup = table
        .iter()
        .filter(|s| s.r >= window.0)
        .map(|s| (s.p2 - 2.0 * (g - 1.0)).abs() * s.r.powf(2.0 * (g - 1.0)))
        .fold(0.0, f64::max);
    list.record(
        scaled_sup.is_finite(),
        format!("sup |P2 - 2(γ-1)|·r^(2(γ-1)) over r >= {}: {scaled_sup:.4e} (finite)", window.0),
    );
    out.write("decay.csv", |mut w| write_decay_csv(&mut w, &fits))?;

    out.write_text(
        "metadata.txt",
        &metadata(&[
            ("gamma", num(g)),
            ("q0", num(p.q0())),
            ("rho0", num(p.rho0())),
            ("phi0_rad", num(p.phi0())),
            ("r_max", num(b.r_max)),
            ("n_radii", b.n_radii.to_string()),
        ]),
    )?;
    let col = |f: fn(&BackgroundState) -> f64| table.iter().map(f).collect::<Vec<_>>();
    out.plot("rho_hat", "r", "rho_hat", &radii, &rho)?;
    out.plot("c2", "r", "c2", &radii, &c2)?;
    out.plot("U_hat", "r", "U_hat", &radii, &col(|s| s.u_hat))?;
    out.plot("P1", "r", "P1", &radii, &col(|s| s.p1))?;
    out.plot("P2", "r", "P2", &radii, &col(|s| s.p2))?;
    Ok(())
}

/// Positivity certificates for the configured gas and a sweep over `γ`.
pub fn certificates(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let radii = log_spaced(1.0, 1e6, 400);
    let mut rows = Vec::new();
    let mut cases: Vec<(GasParams, Option<f64>)> = vec![(ctx.params, ctx.cfg.diagnostics.mu)];
    for g in [1.2, 1.4, 1.6, 1.8] {
        match GasParams::new(g, ctx.params.q0(), ctx.params.phi0()) {
            Ok(p) => cases.push((p, None)),
            Err(e) => list.record_err(&format!("certificate sweep at gamma = {g}"), &e),
        }
    }
    for (p, mu) in cases {
        let table = match BackgroundSolver::new(p).table(&radii) {
            Ok(t) => t,
            Err(e) => {
                list.record_err("certificate table", &e);
                continue;
            }
        };
        let mut m = Multiplier::from_params(&p);
        if let Some(mu) = mu {
            m.mu = mu;
        }
        let rep = positivity_certificates(&table, &p, m);
        let detail = if rep.passed() {
            String::new()
        } else {
            format!(": {}", rep.failures.join("; "))
        };
        list.record(
            rep.passed(),
            format!(
                "certificates at gamma = {}, mu = {:.4}, delta = {:.4}: energy min {:.4e}, flux min {:.4e} (both > 0){detail}",
                p.gamma(),
                m.mu,
                m.delta,
                rep.energy_min,
                rep.flux_min
            ),
        );
        rows.push((p.gamma(), rep));
    }
    out.write("certificates.csv", |w| {
        writeln!(w, "gamma,mu,delta,energy_min,energy_min_at,energy_margin,flux_min,flux_min_at,passed")?;
        for (g, r) in &rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                num(*g),
                num(r.mu),
                num(r.delta),
                num(r.energy_min),
                num(r.energy_min_at),
                num(r.energy_margin),
                num(r.flux_min),
                num(r.flux_min_at),
                r.passed()
            )?;
        }
        Ok(())
    })
}

/// Order of the unperturbed march against the background under refinement.
pub fn consistency(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let solver = ctx.solver();
    let mut rows = Vec::new();
    for k in [ctx.refine - 2, ctx.refine - 1, ctx.refine] {
        let n = ctx.cfg.n_phi(k);
        match ctx.run(0.0, k, ctx.cfg.grid.r_max).and_then(|t| background_deviation(&t, &solver)) {
            Ok((dphi, dv)) => rows.push((n, dphi, dv)),
            Err(e) => {
                list.record_err(&format!("unperturbed march at n_phi = {n}"), &e);
                return Ok(());
            }
        }
    }
    for w in rows.windows(2) {
        let (a, b) = (w[0], w[1]);
        let op = (a.1 / b.1).log2();
        let ov = (a.2 / b.2).log2();
        list.record(
            op >= 2.0 && ov >= 2.0,
            format!("unperturbed march order from n_phi {} to {}: Phi {op:.2}, dPhi/dr {ov:.2} (threshold 2)", a.0, b.0),
        );
    }
    out.write("consistency.csv", |w| {
        writeln!(w, "n_phi,sup_dev_Phi,sup_dev_dPhi_dr")?;
        for (n, a, b) in &rows {
            writeln!(w, "{n},{},{}", num(*a), num(*b))?;
        }
        Ok(())
    })
}

/// Mass-flux drift, guards and density positivity of one perturbed march.
pub fn flux(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let eps = ctx.cfg.diagnostics.flux_eps;
    let n = ctx.cfg.n_phi(ctx.refine);
    let trace = match ctx.run(eps, ctx.refine, ctx.cfg.grid.r_max) {
        Ok(t) => t,
        Err(e) => {
            list.record_err(&format!("perturbed march eps = {eps}"), &e);
            return Ok(());
        }
    };
    let (h, c) = trace.guard_minima();
    list.record(h > 0.0 && c > 0.0, format!("guard minima at eps = {eps}: hyperbolicity {h:.4e}, cavitation {c:.4e} (> 0)"));
    let p = ctx.params;
    let rho_min = trace
        .slices
        .iter()
        .flat_map(|s| (0..s.grid.len()).map(move |i| s.node_state(i, &p).rho))
        .fold(f64::INFINITY, f64::min);
    list.record(rho_min > 0.0, format!("min density over stored nodes: {rho_min:.4e} (> 0)"));
    match flux_history(&trace) {
        Ok(f) => {
            let tol = flux_tolerance(n);
            list.record(
                f.max_relative_drift < tol,
                format!("mass-flux drift at n_phi = {n}: {:.3e} (threshold {tol:e})", f.max_relative_drift),
            );
            out.write("flux.csv", |w| {
                writeln!(w, "r,flux")?;
                for (r, m) in f.radii.iter().zip(&f.fluxes) {
                    writeln!(w, "{},{}", num(*r), num(*m))?;
                }
                Ok(())
            })?;
            out.plot("flux", "r", "mass_flux", &f.radii, &f.fluxes)?;
        }
        Err(e) => list.record_err("mass flux", &e),
    }
    Ok(())
}

/// Pointwise decay fits and the sound-speed band along one long march.
pub fn decay(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let d = &ctx.cfg.diagnostics;
    let p = ctx.params;
    let eps = d.decay_eps;
    let r_max = d.dr_decay_window[1].max(d.z_decay_window[1]);
    let solver = ctx.solver();
    let trace = match ctx.run(eps, ctx.refine, r_max) {
        Ok(t) => t,
        Err(e) => {
            list.record_err(&format!("decay march eps = {eps} to r = {r_max}"), &e);
            return Ok(());
        }
    };
    let pert = match perturbation(&trace, &solver) {
        Ok(v) => v,
        Err(e) => {
            list.record_err("perturbation", &e);
            return Ok(());
        }
    };
    let radii: Vec<f64> = pert.iter().map(|s| s.r).collect();
    let dr: Vec<f64> = pert.iter().map(|s| sup_abs(&s.d_dot_phi_dr)).collect();
    let z: Vec<f64> = pert.iter().map(|s| sup_abs(&s.d_dot_phi_dphi) / s.r).collect();
    let (g, sigma) = (p.gamma(), p.sigma());
    let mut fits = Vec::new();
    let w = (d.dr_decay_window[0], d.dr_decay_window[1]);
    match decay_fit("sup_dr_dot_phi", &radii, &dr, w) {
        Ok(f) => {
            let want = -2.0 * (g - 1.0);
            list.record(
                (f.slope - want).abs() <= 0.15,
                format!("slope of sup|d_r Phidot| on [{}, {}]: {:.4} (target {want:.3} ± 0.15)", w.0, w.1, f.slope),
            );
            fits.push(f);
        }
        Err(e) => list.record_err("fit of sup|d_r Phidot|", &e),
    }
    let w = (d.z_decay_window[0], d.z_decay_window[1]);
    match decay_fit("sup_dphi_dot_phi_over_r", &radii, &z, w) {
        Ok(f) => {
            list.record(
                f.slope >= -sigma - 0.15 && f.slope <= -sigma + 0.15,
                format!(
                    "slope of sup|d_phi Phidot|/r on [{}, {}]: {:.4} (band [{:.3}, {:.3}])",
                    w.0,
                    w.1,
                    f.slope,
                    -sigma - 0.15,
                    -sigma + 0.15
                ),
            );
            fits.push(f);
        }
        Err(e) => list.record_err("fit of sup|d_phi Phidot|/r", &e),
    }
    let k = 2.0 * (g - 1.0);
    match solver.table(&radii) {
        Ok(bg) => {
            let scaled: Vec<f64> = bg.iter().map(|s| s.c2 * s.r.powf(k)).collect();
            let lo_band = 0.5 * scaled.iter().copied().fold(f64::INFINITY, f64::min);
            let hi_band = 2.0 * scaled.iter().copied().fold(0.0, f64::max);
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for s in &trace.slices {
                for i in 0..s.grid.len() {
                    let v = s.node_state(i, &p).c2 * s.r.powf(k);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            list.record(
                lo >= lo_band && hi <= hi_band,
                format!("c2·r^(2(γ-1)) range [{lo:.4}, {hi:.4}] (band [{lo_band:.4}, {hi_band:.4}])"),
            );
        }
        Err(e) => list.record_err("background along decay march", &e),
    }
    out.write("decay.csv", |mut w| write_decay_csv(&mut w, &fits))?;
    out.plot("sup_dr_dot_phi", "r", "sup_abs_dr_dot_phi", &radii, &dr)?;
    out.plot("sup_dphi_dot_phi_over_r", "r", "sup_abs_dphi_dot_phi_over_r", &radii, &z)?;
    Ok(())
}

fn energy_maxima(ctx: &Ctx, eps: f64, refine: i32, k: u32) -> CoreResult<(EnergyReport, [f64; 4])> {
    let d = &ctx.cfg.diagnostics;
    let r_max = ctx.cfg.grid.r_max.max(d.energy_window[1]);
    let trace = ctx.run(eps, refine, r_max)?;
    let rep = weighted_energy(&trace, &ctx.solver(), k)?;
    let m = rep.max_over(d.energy_window[0], d.energy_window[1])?.terms();
    Ok((rep, m))
}

/// Quadratic scaling of the weighted energies and their grid stability.
pub fn energy(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let d = &ctx.cfg.diagnostics;
    let names = ["surface_dr", "surface_Z", "volume_dr", "volume_Z"];
    let mut reports = Vec::new();
    for &k in &d.energy_k {
        let mut scaled = Vec::new();
        for &eps in &d.energy_amplitudes {
            match energy_maxima(ctx, eps, ctx.refine, k) {
                Ok((rep, m)) => {
                    scaled.push(m.map(|t| t / (eps * eps)));
                    reports.push(rep);
                }
                Err(e) => {
                    list.record_err(&format!("energy k = {k}, eps = {eps}"), &e);
                    return Ok(());
                }
            }
        }
        for (j, name) in names.iter().enumerate() {
            let v: Vec<f64> = scaled.iter().map(|t| t[j]).collect();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(0.0, f64::max);
            let spread = hi / lo - 1.0;
            list.record(
                spread < 0.25 && lo > 0.0 && hi.is_finite(),
                format!("energy k = {k}, {name}: max_T/eps^2 in [{lo:.4e}, {hi:.4e}], spread {:.2}% (threshold 25%)", 100.0 * spread),
            );
        }
        let mid = d.energy_amplitudes[d.energy_amplitudes.len() / 2];
        let pair = energy_maxima(ctx, mid, ctx.refine, k)
            .and_then(|a| energy_maxima(ctx, mid, ctx.refine + 1, k).map(|b| (a.1, b.1)));
        match pair {
            Ok((a, b)) => {
                let drift = (0..4).map(|j| (b[j] - a[j]).abs() / b[j]).fold(0.0, f64::max);
                list.record(
                    drift < 0.1,
                    format!(
                        "energy k = {k}: change of max_T terms under one grid refinement {:.2}% (threshold 10%)",
                        100.0 * drift
                    ),
                );
            }
            Err(e) => list.record_err("energy refinement", &e),
        }
    }
    out.write("energy.csv", |mut w| write_energy_csv(&mut w, &reports))?;
    for rep in &reports {
        if let Some(i) = d.energy_amplitudes.iter().position(|&e| e == rep.eps) {
            if i == d.energy_amplitudes.len() / 2 {
                let tag = format!("energy_k{}", rep.k);
                out.plot(&format!("{tag}_surface_dr"), "T", "surface_dr", &rep.t_values, &rep.surface_dr)?;
                out.plot(&format!("{tag}_surface_Z"), "T", "surface_Z", &rep.t_values, &rep.surface_z)?;
                out.plot(&format!("{tag}_volume_dr"), "T", "volume_dr", &rep.t_values, &rep.volume_dr)?;
                out.plot(&format!("{tag}_volume_Z"), "T", "volume_Z", &rep.t_values, &rep.volume_z)?;
            }
        }
    }
    Ok(())
}

/// Rotation-field identities on seeded random polynomials at random points of the cone.
pub fn zfields(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(ctx.seed);
    let phi0 = ctx.params.phi0();
    let mut worst = [0.0f64; 3];
    let mut min_margin = f64::INFINITY;
    let mut failed: Option<String> = None;
    for _ in 0..ctx.cfg.diagnostics.z_probes {
        let f = Polynomial::dense(3, || rng.gen_range(-1.0..1.0));
        let g = Polynomial::dense(3, || rng.gen_range(-1.0..1.0));
        let r = rng.gen_range(1.0..4.0);
        let phi = rng.gen_range(0.0..phi0);
        let theta = rng.gen_range(0.0..2.0 * PI);
        let x = [r * phi.sin() * theta.cos(), r * phi.sin() * theta.sin(), r * phi.cos()];
        let probe = || -> CoreResult<([f64; 3], f64)> {
            let mut w = [0.0f64; 3];
            for i in ZIndex::ALL {
                for j in ZIndex::ALL {
                    w[0] = w[0].max(commutator_check(i, j, &f, x)?);
                }
                w[1] = w[1].max(z_annihilates_radius(i, x)?).max(radial_commutator_check(i, &f, x)?);
            }
            w[2] = z_field_identity_check(&f, &g, x)?;
            Ok((w, z_bound_margin(&f, x)?))
        };
        match probe() {
            Ok((w, m)) => {
                for k in 0..3 {
                    worst[k] = worst[k].max(w[k]);
                }
                min_margin = min_margin.min(m);
            }
            Err(e) => failed = Some(e.to_string()),
        }
    }
    if let Some(e) = failed {
        list.record(false, format!("Z-field probe: {e}"));
    }
    let n = ctx.cfg.diagnostics.z_probes;
    list.record(worst[0] < 1e-10, format!("commutator closure residual over {n} probes: {:.3e} (threshold 1e-10)", worst[0]));
    list.record(worst[1] < 1e-10, format!("Z r and [Z, d_r] residual: {:.3e} (threshold 1e-10)", worst[1]));
    list.record(worst[2] < 1e-10, format!("gradient splitting residual: {:.3e} (threshold 1e-10)", worst[2]));
    list.record(min_margin >= -1e-12, format!("min of r|grad v| - |Zv|: {min_margin:.3e} (threshold -1e-12)"));
    out.write_text(
        "zfields.txt",
        &metadata(&[
            ("seed", ctx.seed.to_string()),
            ("probes", n.to_string()),
            ("commutator_residual", num(worst[0])),
            ("radial_residual", num(worst[1])),
            ("splitting_residual", num(worst[2])),
            ("min_bound_margin", num(min_margin)),
        ]),
    )
}

/// Extension weights, cubic reproduction and the weighted sup bound across `T`.
pub fn extension(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let c = extension_coefficients();
    let want = [10.0, -20.0, 15.0, -4.0];
    let dev = c.lambda.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    list.record(dev < 1e-12, format!("extension weights {:?}: deviation {dev:.1e} from (10, -20, 15, -4)", c.lambda));
    let radii = [2.0, 4.0, 8.0, 16.0];
    let mut jump: f64 = 0.0;
    for t in radii {
        jump = jump.max(derivative_jump(
            &c,
            |r: D3| {
                let x = r - Scalar::cst(t);
                x * x * x - (x * x).scale(0.5) + x.scale(2.0) + Scalar::cst(1.0)
            },
            t,
        ));
    }
    list.record(jump < 1e-9, format!("cubic reproduction jump across r = T: {jump:.3e} (threshold 1e-9)"));
    let w = WeightParams::from_gas(&ctx.params);
    let mut rows = Vec::new();
    let mut betas: Vec<f64> = InequalityId::ALL.iter().map(|id| id.weights(&w).2).collect();
    betas.sort_by(f64::total_cmp);
    betas.dedup();
    for beta in betas {
        let cap = c.abs_sum() * (9.0f64 / 4.0).powf(beta);
        for t in radii {
            let ratio = RadialSamples::from_fn(1.0, t, 4001, |r| (1.3 * r).sin() + 0.2 * r)
                .and_then(|s| weighted_sup_ratio(&c, &s, t, beta, 4000));
            match ratio {
                Ok(v) => {
                    list.record(
                        v.is_finite() && v <= cap,
                        format!("extension sup ratio beta = {beta:.3}, T = {t}: {v:.4} (cap {cap:.2})"),
                    );
                    rows.push((beta, t, v));
                }
                Err(e) => list.record_err(&format!("extension sup ratio at T = {t}"), &e),
            }
        }
    }
    out.write("extension.csv", |w| {
        writeln!(w, "beta,T,sup_ratio")?;
        for (b, t, v) in &rows {
            writeln!(w, "{},{},{}", num(*b), num(*t), num(*v))?;
        }
        Ok(())
    })
}

/// Seeded family study of the four inequalities and the parameter-set check.
pub fn inequalities(ctx: &Ctx, out: &OutDir, list: &mut Checklist) -> Group {
    let d = &ctx.cfg.diagnostics;
    let phi0 = ctx.params.phi0();
    let w = WeightParams::from_gas(&ctx.params);
    let family = bump_family(ctx.seed, d.inequality_family, phi0);
    let levels = d.inequality_levels + ctx.refine.max(0) as u32;
    let mut caps = Vec::new();
    for composite in Composite::ALL {
        let study = match refinement_study(composite, &family, &w, phi0, levels) {
            Ok(s) => s,
            Err(e) => {
                list.record_err(&format!("inequality study for {}", composite.label()), &e);
                continue;
            }
        };
        for (k, id) in InequalityId::ALL.iter().enumerate() {
            let drift = study.drift(*id);
            let finite = study.caps.iter().all(|c| c[k].is_finite() && c[k] > 0.0);
            list.record(
                finite && drift < 0.1,
                format!(
                    "inequality {} on {}: caps {}, drift {:.3e} (threshold 0.1)",
                    id.label(),
                    composite.label(),
                    study.caps.iter().map(|c| format!("{:.5}", c[k])).collect::<Vec<_>>().join(" "),
                    drift
                ),
            );
            for (l, c) in study.caps.iter().enumerate() {
                caps.push((composite.label(), id.label(), l, c[k]));
            }
        }
        out.write(&format!("inequality_{}.csv", composite.label()), |wr| {
            writeln!(wr, "ineq_id,family_member,grid_level,ratio")?;
            for (l, members) in study.ratios.iter().enumerate() {
                for (m, r) in members.iter().enumerate() {
                    for (k, id) in InequalityId::ALL.iter().enumerate() {
                        writeln!(wr, "{},{m},{l},{}", id.label(), num(r[k]))?;
                    }
                }
            }
            Ok(())
        })?;
    }
    out.write("inequality_caps.csv", |wr| {
        writeln!(wr, "composite,ineq_id,grid_level,cap")?;
        for (c, i, l, v) in &caps {
            writeln!(wr, "{c},{i},{l},{}", num(*v))?;
        }
        Ok(())
    })?;
    for id in InequalityId::ALL {
        let base = id.cnk_params(&w);
        let accepted = cnk_conditions_check(&base).admissible();
        let mut rejected = true;
        for shift in [(0.1, 0.0, 0.0), (0.0, -0.2, 0.0), (0.0, 0.0, 0.3)] {
            let mut q = base;
            q.tau += shift.0;
            q.alpha += shift.1;
            q.beta += shift.2;
            rejected &= !cnk_conditions_check(&q).admissible();
        }
        list.record(
            accepted && rejected,
            format!("parameter conditions for {}: accepted {accepted}, perturbations rejected {rejected}", id.label()),
        );
    }
    out.write_text(
        "inequality_metadata.txt",
        &metadata(&[
            ("seed", ctx.seed.to_string()),
            ("family_size", d.inequality_family.to_string()),
            ("grid_levels", levels.to_string()),
            ("gamma", num(w.gamma)),
            ("sigma", num(w.sigma)),
            ("delta", num(w.delta)),
        ]),
    )
}
