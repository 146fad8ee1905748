//! One function per subcommand.

use nozzle_core::background::BackgroundSolver;
use nozzle_core::diagnostics::flux_history;
use nozzle_core::march::{march, perturbation, write_metadata, write_slice_csv, MarchTrace};
use nozzle_core::Error;

use crate::checks::{self, Ctx};
use crate::outcome::{Checklist, Failure};
use crate::output::{metadata, num, OutDir};

type Group = fn(&Ctx, &OutDir, &mut Checklist) -> Result<(), Failure>;

fn run_groups(ctx: &Ctx, out: &OutDir, groups: &[(&str, Group)]) -> Result<(), Failure> {
    let mut list = Checklist::default();
    for (name, group) in groups {
        eprintln!("running {name} checks");
        group(ctx, out, &mut list)?;
    }
    let report = list.report();
    print!("{report}");
    out.write_text("report.txt", &report)?;
    list.into_result()
}

pub fn background(ctx: &Ctx, out: &OutDir) -> Result<(), Failure> {
    run_groups(ctx, out, &[("background", checks::background)])
}

pub fn ineq(ctx: &Ctx, out: &OutDir) -> Result<(), Failure> {
    run_groups(ctx, out, &[("inequality", checks::inequalities)])
}

pub fn verify(ctx: &Ctx, out: &OutDir) -> Result<(), Failure> {
    run_groups(
        ctx,
        out,
        &[
            ("background", checks::background),
            ("certificate", checks::certificates),
            ("consistency", checks::consistency),
            ("flux", checks::flux),
            ("decay", checks::decay),
            ("energy", checks::energy),
            ("rotation field", checks::zfields),
            ("extension", checks::extension),
            ("inequality", checks::inequalities),
        ],
    )
}

/// Marches every configured amplitude and writes its trace.
pub fn run_march(ctx: &Ctx, out: &OutDir) -> Result<(), Failure> {
    let cfg = ctx.cfg.march_config(ctx.refine, ctx.cfg.grid.r_max);
    let data = ctx.cfg.initial_data();
    let mut aborted = Vec::new();
    for (i, &eps) in ctx.cfg.perturbation.amplitudes.iter().enumerate() {
        let dir = out.subdir(&format!("eps_{i:02}_{eps:e}"))?;
        match march(&data, eps, &cfg, &ctx.params) {
            Ok(trace) => {
                write_trace(ctx, &dir, &trace)?;
                println!(
                    "eps = {eps:e}: reached r = {} in {} steps, {} slices stored",
                    trace.final_slice().r,
                    trace.steps_taken,
                    trace.slices.len()
                );
            }
            Err(e) => {
                let (r, cause) = match &e {
                    Error::AbortedAt { r, cause } => (*r, cause.to_string()),
                    other => (1.0, other.to_string()),
                };
                let line = format!("eps = {eps:e}: aborted at r = {r} by guard: {cause}");
                dir.write_text(
                    "abort.txt",
                    &metadata(&[
                        ("eps", num(eps)),
                        ("abort_radius", num(r)),
                        ("cause", cause.clone()),
                        ("n_phi", cfg.n_phi.to_string()),
                        ("seed", ctx.seed.to_string()),
                    ]),
                )?;
                println!("{line}");
                aborted.push(line);
            }
        }
    }
    if aborted.is_empty() {
        Ok(())
    } else {
        Err(Failure::Aborted(aborted))
    }
}

fn write_trace(ctx: &Ctx, dir: &OutDir, trace: &MarchTrace) -> Result<(), Failure> {
    let p = &ctx.params;
    for (k, s) in trace.slices.iter().enumerate() {
        dir.write(&format!("slices/slice_{k:05}.csv"), |mut w| write_slice_csv(&mut w, s, p))?;
    }
    dir.write("slices/index.csv", |w| {
        writeln!(w, "slice,r")?;
        for (k, s) in trace.slices.iter().enumerate() {
            writeln!(w, "{k},{}", num(s.r))?;
        }
        Ok(())
    })?;
    dir.write("guards.csv", |w| {
        writeln!(w, "r,hyperbolicity,cavitation")?;
        for g in &trace.guard_log {
            writeln!(w, "{},{},{}", num(g.r), num(g.hyperbolicity), num(g.cavitation))?;
        }
        Ok(())
    })?;
    dir.write("metadata.txt", |mut w| {
        write_metadata(&mut w, trace)?;
        writeln!(w, "seed = {}", ctx.seed)
    })?;
    let gr: Vec<f64> = trace.guard_log.iter().map(|g| g.r).collect();
    let gh: Vec<f64> = trace.guard_log.iter().map(|g| g.hyperbolicity).collect();
    let gc: Vec<f64> = trace.guard_log.iter().map(|g| g.cavitation).collect();
    dir.plot("guard_hyperbolicity", "r", "hyperbolicity_margin", &gr, &gh)?;
    dir.plot("guard_cavitation", "r", "cavitation_margin", &gr, &gc)?;

    if let Ok(f) = flux_history(trace) {
        dir.write("flux.csv", |w| {
            writeln!(w, "r,flux")?;
            for (r, m) in f.radii.iter().zip(&f.fluxes) {
                writeln!(w, "{},{}", num(*r), num(*m))?;
            }
            writeln!(w, "# max_relative_drift = {}", num(f.max_relative_drift))
        })?;
        dir.plot("flux", "r", "mass_flux", &f.radii, &f.fluxes)?;
    }
    if let Ok(pert) = perturbation(trace, &BackgroundSolver::new(*p)) {
        let sup = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let r: Vec<f64> = pert.iter().map(|s| s.r).collect();
        let dr: Vec<f64> = pert.iter().map(|s| sup(&s.d_dot_phi_dr)).collect();
        let z: Vec<f64> = pert.iter().map(|s| sup(&s.d_dot_phi_dphi) / s.r).collect();
        dir.write("perturbation_sup.csv", |w| {
            writeln!(w, "r,sup_abs_dr_dot_phi,sup_abs_dphi_dot_phi_over_r")?;
            for k in 0..r.len() {
                writeln!(w, "{},{},{}", num(r[k]), num(dr[k]), num(z[k]))?;
            }
            Ok(())
        })?;
        dir.plot("sup_dr_dot_phi", "r", "sup_abs_dr_dot_phi", &r, &dr)?;
        dir.plot("sup_dphi_dot_phi_over_r", "r", "sup_abs_dphi_dot_phi_over_r", &r, &z)?;
    }
    Ok(())
}
