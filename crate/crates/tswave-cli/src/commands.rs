//! The subcommands. Each writes its tables through `Output` and reports
//! whether the run was clean, flagged, or failed validation.

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{Cell, Output};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use tswave::airy::{airy_eval, airy_scaled, AiryMethod};
use tswave::approx_mode::{error_terms_auto, f_app_parts_with, FAppParts};
use tswave::dispersion::{c0, choose_k_with, f_ref, solve_point_with, sweep_scaling, sweep_with, winding, DiskD0, SweepRecord, MIN_SAMPLES};
use tswave::fast_mode::{build_fast_mode, SublayerScales};
use tswave::fit::{loglog_fit, LineFit};
use tswave::grid::HalfLineGrid;
use tswave::params::{resolvent_mach_limit, FlowParams};
use tswave::profile::{positivity_check, structural, validate, validation_grid, PositivityReport, ShearProfile, ValidationReport};
use tswave::resolvent::{assemble_exact_mode, lambda_inverse, Branch, Conditioning, IterationLog, ResolventContext};
use tswave::slow_mode::SlowContext;

type C = Complex64;

pub enum Outcome {
    Clean,
    Flagged(String),
    Invalid(String),
}

fn cx(z: C) -> [Cell; 2] {
    [Cell::F(z.re), Cell::F(z.im)]
}

fn row(parts: Vec<Vec<Cell>>) -> Vec<Cell> {
    parts.into_iter().flatten().collect()
}

fn fit(pts: &[(f64, f64)]) -> Option<LineFit> {
    let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|&(x, y)| x > 0.0 && y > 0.0 && y.is_finite()).collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(loglog_fit(&x, &y))
}

fn params_at(cfg: &RunConfig, eps: f64, k: f64) -> Result<FlowParams, CliError> {
    let mut p = cfg.params()?;
    p.eps = eps;
    p.k = k;
    p.validate()?;
    Ok(p)
}

fn require_resolvent_mach(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.flow.mach >= resolvent_mach_limit() {
        return Err(CliError::Validation(format!(
            "mach = {} violates the hypothesis M < 1/sqrt(3) = {:.6} under which the resolvent bounds and the exact mode are constructed",
            cfg.flow.mach,
            resolvent_mach_limit()
        )));
    }
    Ok(())
}

/// Dispersion records for every ε of the run, K picked from the scan list.
fn locate(cfg: &RunConfig, profile: &ShearProfile) -> Result<Vec<SweepRecord>, CliError> {
    let eps = cfg.eps_list()?;
    Ok(sweep_with(profile, &cfg.params()?, &eps, cfg.k_scan(), cfg.solve_options()))
}

/// The phase speed used for studies at a record: its root when unflagged,
/// otherwise the reference zero c₀.
fn study_point(cfg: &RunConfig, r: &SweepRecord) -> Result<(FlowParams, C, &'static str), CliError> {
    let p = params_at(cfg, r.eps, r.k)?;
    match r.c_found().filter(|_| !r.flagged) {
        Some(c) => Ok((p, c, "root")),
        None => Ok((p, c0(&p), "c0")),
    }
}

pub fn validate_profile(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    let profile = cfg.profile()?;
    let mach = cfg.flow.mach;
    let grid = validation_grid(cfg.grid.ymax, cfg.grid.n);
    let report = out.timed("validate", || validate(&profile, mach, &grid, None))?;
    let s = structural(&profile, mach, C::new(0.0, 0.0), &grid)?;
    let pos = positivity_check(&s, mach);
    let rows: Vec<Vec<Cell>> = (0..grid.len())
        .map(|i| vec![grid[i].into(), s.u[i].into(), s.h[i].into(), s.w0[i].into(), s.w1[i].into(), s.abs_u2[i].into()])
        .collect();
    out.csv("structural.csv", &["y", "u", "h", "w0", "w1", "abs_u2"], &rows)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        report: &'a ValidationReport,
        positivity: &'a PositivityReport,
    }
    out.json("validate_profile.json", &Summary { report: &report, positivity: &pos })?;
    for w in &report.warnings {
        out.warn(w.clone());
    }
    if report.pass_flags.all() {
        Ok(Outcome::Clean)
    } else {
        Ok(Outcome::Invalid(format!("profile {} fails assumptions: {:?}", report.profile, report.pass_flags)))
    }
}

/// Points for the Airy table: explicit `re,im` pairs, or a ray
/// `arg/π,r_min,r_max,count`.
pub fn airy(cfg: &RunConfig, out: &mut Output, points: &[String], ray: Option<&str>) -> Result<Outcome, CliError> {
    let _ = cfg;
    let bad = |s: &str| CliError::Config(format!("cannot parse {s:?}"));
    let mut zs: Vec<C> = Vec::new();
    for p in points {
        let v: Vec<f64> = p.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad(p))?;
        if v.len() != 2 {
            return Err(bad(p));
        }
        zs.push(C::new(v[0], v[1]));
    }
    if let Some(r) = ray {
        let v: Vec<f64> = r.split(',').map(|t| t.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad(r))?;
        if v.len() != 4 || v[3] < 1.0 {
            return Err(bad(r));
        }
        let n = v[3] as usize;
        for j in 0..n {
            let rad = if n == 1 { v[1] } else { v[1] * (v[2] / v[1].max(1e-300)).powf(j as f64 / (n - 1) as f64) };
            zs.push(C::from_polar(rad, v[0] * std::f64::consts::PI));
        }
    }
    if zs.is_empty() {
        let arg = -5.0 * std::f64::consts::PI / 6.0;
        zs = [0.0, 1.0, 3.0, 9.0, 12.0, 16.0, 30.0, 100.0, 300.0].iter().map(|&r| C::from_polar(r, arg)).collect();
    }
    let nan = C::new(f64::NAN, f64::NAN);
    let mut rows = Vec::new();
    let mut flagged = Vec::new();
    for z in zs {
        match airy_scaled(z) {
            Ok(s) => {
                let plain = airy_eval(z).ok();
                let ratio = s.ai1.div(s.ai2).to_c64().unwrap_or(nan);
                let method = match s.method {
                    AiryMethod::Series => "series",
                    AiryMethod::Asymptotic => "asymptotic",
                    AiryMethod::Quadrature => "quadrature",
                };
                let v = |f: fn(&tswave::airy::AiryBundle) -> C| plain.as_ref().map(f).unwrap_or(nan);
                rows.push(row(vec![
                    cx(z).to_vec(),
                    vec![method.into(), s.est_error.into()],
                    cx(v(|b| b.ai)).to_vec(),
                    cx(v(|b| b.ai_prime)).to_vec(),
                    cx(v(|b| b.ai1)).to_vec(),
                    cx(v(|b| b.ai2)).to_vec(),
                    vec![s.ai.log_abs().into(), s.ai2.log_abs().into()],
                    cx(ratio).to_vec(),
                ]));
            }
            Err(e) => flagged.push(format!("z = {z}: {e}")),
        }
    }
    out.csv(
        "airy.csv",
        &[
            "z_re", "z_im", "method", "est_error", "ai_re", "ai_im", "dai_re", "dai_im", "ai1_re", "ai1_im", "ai2_re", "ai2_im", "log_abs_ai",
            "log_abs_ai2", "ratio_re", "ratio_im",
        ],
        &rows,
    )?;
    Ok(if flagged.is_empty() { Outcome::Clean } else { Outcome::Flagged(flagged.join("; ")) })
}

fn single_point(cfg: &RunConfig) -> Result<(FlowParams, C), CliError> {
    let p = cfg.params()?;
    let c = match cfg.flow.c {
        Some([a, b]) => C::new(a, b),
        None => c0(&p),
    };
    Ok((p, c))
}

pub fn slow_mode(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    let profile = cfg.profile()?;
    let (p, c) = single_point(cfg)?;
    let grid = HalfLineGrid::for_params(&p, cfg.grid.ymax, cfg.grid.n)?;
    let sm = out.timed("slow mode", || SlowContext::with_tol(&profile, &p, c, cfg.quad()).and_then(|ctx| ctx.build(&grid.y)))?;
    let rows: Vec<Vec<Cell>> = sm
        .points
        .iter()
        .map(|q| {
            row(vec![
                vec![q.y.into()],
                cx(q.phi.value()).to_vec(),
                cx(q.phi.d(1)).to_vec(),
                cx(q.rho.value()).to_vec(),
                cx(q.u.value()).to_vec(),
                cx(q.v.value()).to_vec(),
                cx(q.ray.value()).to_vec(),
            ])
        })
        .collect();
    out.csv(
        "slow_mode.csv",
        &["y", "phi_re", "phi_im", "dphi_re", "dphi_im", "rho_re", "rho_im", "u_re", "u_im", "v_re", "v_im", "ray_re", "ray_im"],
        &rows,
    )?;
    #[derive(Serialize)]
    struct Summary {
        c: [f64; 2],
        alpha: f64,
        beta: [f64; 2],
        ymax: f64,
        nodes: usize,
        wall: tswave::slow_mode::WallValues,
    }
    out.json(
        "slow_mode.json",
        &Summary { c: [c.re, c.im], alpha: p.alpha(), beta: [sm.beta.re, sm.beta.im], ymax: grid.ymax(), nodes: grid.len(), wall: sm.wall },
    )?;
    Ok(Outcome::Clean)
}

pub fn fast_mode(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    let profile = cfg.profile()?;
    let (p, c) = single_point(cfg)?;
    let grid = HalfLineGrid::for_params(&p, cfg.grid.ymax, cfg.grid.n)?;
    let wall = SlowContext::with_tol(&profile, &p, c, cfg.quad())?.wall_values()?;
    let scales = SublayerScales::new(&p, c, wall.phi);
    let fm = out.timed("fast mode", || build_fast_mode(&p, scales, &grid.y))?;
    let res = fm.sublayer_residual();
    let rows: Vec<Vec<Cell>> = fm
        .points
        .iter()
        .zip(&grid.y)
        .zip(&res)
        .map(|((q, &y), &r)| row(vec![vec![y.into()], cx(q.u[0]).to_vec(), cx(q.v[0]).to_vec(), vec![r.into()]]))
        .collect();
    out.csv("fast_mode.csv", &["y", "u_re", "u_im", "v_re", "v_im", "sublayer_residual"], &rows)?;
    #[derive(Serialize)]
    struct Summary {
        c: [f64; 2],
        scales: SublayerScales,
        closure_error: f64,
        decay_rates: [f64; 3],
        max_sublayer_residual: f64,
    }
    out.json(
        "fast_mode.json",
        &Summary {
            c: [c.re, c.im],
            scales,
            closure_error: scales.closure_error(),
            decay_rates: [fm.decay_rate(0), fm.decay_rate(1), fm.decay_rate(2)],
            max_sublayer_residual: res.iter().cloned().fold(0.0, f64::max),
        },
    )?;
    Ok(Outcome::Clean)
}

pub fn dispersion(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    let profile = cfg.profile()?;
    let recs = out.timed("dispersion sweep", || locate(cfg, &profile))?;
    let rows: Vec<Vec<Cell>> = recs
        .iter()
        .map(|r| {
            vec![
                r.eps.into(),
                r.k.into(),
                r.mach.into(),
                r.re_c.into(),
                r.im_c.into(),
                r.winding.into(),
                r.min_boundary_modulus.into(),
                r.rouche_gap_ratio.into(),
                r.newton_iters.into(),
                r.residual_at_root.into(),
                r.flagged.into(),
                r.note.clone().into(),
            ]
        })
        .collect();
    out.csv(
        "dispersion.csv",
        &["eps", "K", "M", "re_c", "im_c", "winding", "min_boundary_modulus", "rouche_gap_ratio", "newton_iters", "residual_at_root", "flagged", "note"],
        &rows,
    )?;
    let scaling = sweep_scaling(&recs, &cfg.params()?);
    out.json("dispersion_scaling.json", &scaling)?;
    let flagged: Vec<String> = recs.iter().filter(|r| r.flagged).map(|r| format!("eps {:e}: {}", r.eps, r.note)).collect();
    for f in &flagged {
        out.warn(f.clone());
    }
    Ok(if flagged.is_empty() { Outcome::Clean } else { Outcome::Flagged(format!("{} of {} sweep points flagged", flagged.len(), recs.len())) })
}

pub fn errors(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    let profile = cfg.profile()?;
    let recs = out.timed("dispersion sweep", || locate(cfg, &profile))?;
    let results: Vec<Result<Vec<Cell>, String>> = out.timed("error terms", || {
        recs.par_iter()
            .map(|r| {
                let (p, c, src) = study_point(cfg, r).map_err(|e| e.to_string())?;
                let (_, et) = error_terms_auto(&profile, &p, c, cfg.grid.ymax, cfg.grid.n, cfg.quad()).map_err(|e| e.to_string())?;
                Ok(vec![
                    r.eps.into(),
                    r.k.into(),
                    c.re.into(),
                    c.im.into(),
                    src.into(),
                    et.ev_re_h1w.value.into(),
                    et.ev_re_h1w.tail_fraction.into(),
                    et.sm_l2.into(),
                ])
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (r, res) in recs.iter().zip(results) {
        match res {
            Ok(v) => rows.push(v),
            Err(e) => failures.push(format!("eps {:e}: {e}", r.eps)),
        }
    }
    out.csv("errors.csv", &["eps", "K", "re_c", "im_c", "c_source", "ev_re_h1w", "ev_re_tail_fraction", "sm_l2"], &rows)?;
    let get = |k: usize| -> Vec<(f64, f64)> {
        rows.iter()
            .filter_map(|r| match (&r[0], &r[k]) {
                (Cell::F(a), Cell::F(b)) => Some((*a, *b)),
                _ => None,
            })
            .collect()
    };
    #[derive(Serialize)]
    struct Fits {
        ev_re_h1w: Option<LineFit>,
        sm_l2: Option<LineFit>,
        points_at_c0: usize,
    }
    let at_c0 = recs.iter().filter(|r| r.flagged).count();
    out.json("errors_scaling.json", &Fits { ev_re_h1w: fit(&get(5)), sm_l2: fit(&get(7)), points_at_c0: at_c0 })?;
    if at_c0 > 0 {
        out.warn(format!("{at_c0} points evaluated at c0 because no root was found in D0"));
    }
    for f in &failures {
        out.warn(f.clone());
    }
    Ok(if failures.is_empty() && at_c0 == 0 { Outcome::Clean } else { Outcome::Flagged(format!("{} failures, {at_c0} points at c0", failures.len())) })
}

/// Smooth decaying complex source built from a few random modes.
pub fn random_source(y: &[f64], rng: &mut ChaCha8Rng) -> Vec<C> {
    let modes: Vec<(C, f64, f64)> = (0..3)
        .map(|_| (C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rng.gen_range(0.3..2.0), rng.gen_range(0.0..3.0)))
        .collect();
    y.iter().map(|&t| modes.iter().map(|&(a, d, k)| a * (-d * t).exp() * C::from_polar(1.0, k * t) * t).sum()).collect()
}

fn bundle_rel(a: &tswave::mode::ModeBundle, b: &tswave::mode::ModeBundle, g: &HalfLineGrid) -> f64 {
    let d = a.axpy(C::new(-1.0, 0.0), b);
    let n = |m: &tswave::mode::ModeBundle| g.l2_sq(&m.rho) + g.l2_sq(&m.u) + g.l2_sq(&m.v);
    (n(&d) / n(b)).sqrt()
}

fn geo_mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    (v.iter().map(|x| x.ln()).sum::<f64>() / v.len() as f64).exp()
}

pub fn resolvent(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    require_resolvent_mach(cfg)?;
    let profile = cfg.profile()?;
    let recs = out.timed("dispersion sweep", || locate(cfg, &profile))?;
    let ctl = cfg.iteration();
    let nsrc = cfg.sweep.sources;
    type PointRows = (Vec<Vec<Cell>>, Vec<String>, f64);
    let per_point: Vec<Result<PointRows, String>> = out.timed("resolvent", || {
        recs.par_iter()
            .enumerate()
            .map(|(idx, r)| {
                let (p, c, src) = study_point(cfg, r).map_err(|e| e.to_string())?;
                let grid = HalfLineGrid::for_params(&p, cfg.grid.ymax, cfg.grid.n).map_err(|e| e.to_string())?;
                let ctx = ResolventContext::new(&grid, &profile, &p, c).map_err(|e| e.to_string())?;
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(idx as u64));
                let mut rows = Vec::new();
                let mut notes = Vec::new();
                let mut all_ratios = Vec::new();
                for s in 0..nsrc {
                    let (fu, fv) = (random_source(&grid.y, &mut rng), random_source(&grid.y, &mut rng));
                    for branch in [Branch::L2, Branch::H1] {
                        let (log, residual, diff) = match ctx.iterate(&fu, &fv, branch, ctl) {
                            Ok(sol) => {
                                let diff = ctx.monolithic(&fu, &fv, branch).map(|m| bundle_rel(&sol.mode, &m, &grid)).unwrap_or(f64::NAN);
                                (sol.log, sol.residual, diff)
                            }
                            Err(e) => {
                                notes.push(format!("eps {:e} source {s} {branch:?}: {e}", r.eps));
                                (IterationLog::default(), f64::NAN, f64::NAN)
                            }
                        };
                        if !(diff <= 1e-6) {
                            notes.push(format!("eps {:e} source {s} {branch:?}: oracle difference {diff:.3e}", r.eps));
                        }
                        if branch == Branch::L2 {
                            all_ratios.extend(log.ratios.iter().copied());
                        }
                        let max_ratio = log.ratios.iter().cloned().fold(0.0, f64::max);
                        rows.push(vec![
                            r.eps.into(),
                            r.k.into(),
                            c.re.into(),
                            c.im.into(),
                            src.into(),
                            s.into(),
                            format!("{branch:?}").to_lowercase().into(),
                            log.steps.into(),
                            log.converged.into(),
                            max_ratio.into(),
                            geo_mean(&log.ratios).into(),
                            residual.into(),
                            diff.into(),
                            ctx.conditioning.stokes.into(),
                            ctx.conditioning.orr_sommerfeld.into(),
                        ]);
                    }
                }
                Ok((rows, notes, geo_mean(&all_ratios)))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    let mut means = Vec::new();
    for (r, res) in recs.iter().zip(per_point) {
        match res {
            Ok((rw, nt, gm)) => {
                rows.extend(rw);
                notes.extend(nt);
                means.push((r.eps, gm));
            }
            Err(e) => notes.push(format!("eps {:e}: {e}", r.eps)),
        }
    }
    out.csv(
        "resolvent.csv",
        &[
            "eps", "K", "re_c", "im_c", "c_source", "source", "branch", "steps", "converged", "max_ratio", "mean_ratio", "residual", "oracle_rel_diff",
            "cond_stokes", "cond_os",
        ],
        &rows,
    )?;
    #[derive(Serialize)]
    struct Contraction {
        mean_ratio_by_eps: Vec<(f64, f64)>,
        fit: Option<LineFit>,
    }
    out.json("resolvent_contraction.json", &Contraction { fit: fit(&means), mean_ratio_by_eps: means })?;
    for n in &notes {
        out.warn(n.clone());
    }
    Ok(if notes.is_empty() { Outcome::Clean } else { Outcome::Flagged(format!("{} resolvent problems", notes.len())) })
}

#[derive(Serialize)]
struct EigenSummary {
    eps: f64,
    k: f64,
    mach: f64,
    c: [f64; 2],
    c_source: &'static str,
    dispersion: SweepRecord,
    f_app_parts: FAppParts,
    f_value: [f64; 2],
    f_app: [f64; 2],
    u_sm0: [f64; 2],
    u_re0: [f64; 2],
    v0: [f64; 2],
    closure_residual: f64,
    decomposition_defect: f64,
    sm_log: IterationLog,
    re_log: IterationLog,
    conditioning: Conditioning,
}

pub fn eigenmode(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    require_resolvent_mach(cfg)?;
    let profile = cfg.profile()?;
    let base = cfg.params()?;
    let rec = out.timed("dispersion", || match cfg.k_scan() {
        Some(ks) => choose_k_with(&profile, &base, ks, cfg.solve_options()),
        None => solve_point_with(&profile, &base, cfg.solve_options()),
    });
    let (p, c, src) = study_point(cfg, &rec)?;
    let grid = HalfLineGrid::for_params(&p, cfg.grid.ymax, cfg.grid.n)?;
    let em = out.timed("exact mode", || assemble_exact_mode(&profile, &p, c, &grid, cfg.iteration()))?;
    let parts = f_app_parts_with(&profile, &p, c, cfg.quad())?;
    let m = &em.mode;
    let rows: Vec<Vec<Cell>> = (0..grid.len()).map(|i| row(vec![vec![grid.y[i].into()], cx(m.rho[i]).to_vec(), cx(m.u[i]).to_vec(), cx(m.v[i]).to_vec()])).collect();
    out.csv("eigenmode.csv", &["y", "rho_re", "rho_im", "u_re", "u_im", "v_re", "v_im"], &rows)?;
    let pair = |z: C| [z.re, z.im];
    out.json(
        "eigenmode.json",
        &EigenSummary {
            eps: p.eps,
            k: p.k,
            mach: p.mach,
            c: pair(c),
            c_source: src,
            dispersion: rec.clone(),
            f_app_parts: parts,
            f_value: pair(em.f_value),
            f_app: pair(em.f_app),
            u_sm0: pair(em.u_sm0),
            u_re0: pair(em.u_re0),
            v0: pair(m.v[0]),
            closure_residual: em.closure_residual,
            decomposition_defect: em.decomposition_defect,
            sm_log: em.sm_log.clone(),
            re_log: em.re_log.clone(),
            conditioning: em.conditioning,
        },
    )?;
    if rec.flagged {
        out.warn(format!("no root of F_app in D0 ({}); mode assembled at c0", rec.note));
        return Ok(Outcome::Flagged(format!("eps {:e}: no dispersion root in D0", p.eps)));
    }
    if em.f_value.norm() > 1e-10 {
        return Ok(Outcome::Flagged(format!("|F(c)| = {:.3e} at the F_app root", em.f_value.norm())));
    }
    Ok(Outcome::Clean)
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    limit: f64,
    pass: bool,
}

pub fn selftest(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, CliError> {
    let mut checks = Vec::new();
    let mut push = |name: &'static str, value: f64, limit: f64, pass: bool| checks.push(Check { name, value, limit, pass });

    let a0 = airy_eval(C::new(0.0, 0.0))?;
    let e = (a0.ai1 - C::new(-1.0 / 3.0, 0.0)).norm();
    push("airy Ai(1,0) = -1/3", e, 1e-12, e <= 1e-12);

    let p = FlowParams::new(cfg.flow.mach.min(0.5), 1e-8, 4.0)?;
    let g = HalfLineGrid::for_params(&p, 40.0, 1024)?;
    let st = g.self_test(p.delta().norm());
    push("grid stencils and quadrature", st.d2_quartic_error, 1e-6, st.pass);

    let disk = DiskD0::new(&p);
    let w = winding(&|c: C| Ok(f_ref(c, &p)), &disk, MIN_SAMPLES, 0.0)?;
    push("reference winding", w.winding as f64, 1.0, w.winding == 1);

    let prof = ShearProfile::exponential();
    let mut errs = Vec::new();
    for n in [128, 256, 512] {
        let gg = HalfLineGrid::with_stretch(40.0, n, 0.0)?;
        let h: Vec<C> = gg.y.iter().map(|&y| C::new(-2.0 * (-y).exp(), 0.0)).collect();
        let psi = lambda_inverse(&gg, &prof, 0.0, 1.0, C::new(0.5, 0.1), &h)?;
        errs.push(gg.y.iter().zip(&psi).map(|(&y, q)| (q - y * (-y).exp()).norm()).fold(0.0, f64::max));
    }
    let order = (errs[1] / errs[2]).log2();
    push("closed-form inverse order", order, 3.5, order >= 3.5);

    if p.mach < resolvent_mach_limit() {
        let ctx = ResolventContext::new(&g, &prof, &p, c0(&p))?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (fu, fv) = (random_source(&g.y, &mut rng), random_source(&g.y, &mut rng));
        let it = ctx.iterate(&fu, &fv, Branch::L2, cfg.iteration())?;
        let direct = ctx.monolithic(&fu, &fv, Branch::L2)?;
        let d = bundle_rel(&it.mode, &direct, &g);
        push("iteration vs monolithic", d, 1e-6, d <= 1e-6);
    }

    let s = structural(&prof, cfg.flow.mach, C::new(0.0, 0.0), &validation_grid(40.0, 2000))?;
    let bound = 0.5 * (1.0 - cfg.flow.mach * cfg.flow.mach);
    let min_h = s.h.iter().cloned().fold(f64::INFINITY, f64::min);
    push("H >= (1-M^2)/2", min_h - bound, -1e-10, min_h >= bound - 1e-10);

    let rows: Vec<Vec<Cell>> = checks.iter().map(|c| vec![c.name.into(), c.value.into(), c.limit.into(), c.pass.into()]).collect();
    out.csv("selftest.csv", &["check", "value", "limit", "pass"], &rows)?;
    out.json("selftest.json", &checks)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    Ok(if failed.is_empty() { Outcome::Clean } else { Outcome::Flagged(format!("failed: {}", failed.join(", "))) })
}
