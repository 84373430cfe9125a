//! Acceptance criteria 1-9, one line each. Runs as a plain binary so the
//! lines are printed whether or not a criterion passes; exits non-zero if
//! any criterion fails.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use tswave::airy::{airy_eval, airy_far, airy_ratio, airy_series};
use tswave::approx_mode::error_terms_auto;
use tswave::dispersion::{c0, eps_grid, sweep, sweep_scaling, SweepRecord};
use tswave::fast_mode::{build_fast_mode, SublayerScales};
use tswave::fit::loglog_fit;
use tswave::grid::HalfLineGrid;
use tswave::mode::ModeBundle;
use tswave::params::FlowParams;
use tswave::quad::QuadTol;
use tswave::profile::{multiplier, positivity_check, structural, validation_grid, w0_minus_u_w1_factored, w0_w1, ShearProfile};
use tswave::resolvent::{assemble_exact_mode, lambda_inverse, Branch, IterationControl, ResolventContext};

type C = Complex64;

const MACH: f64 = 0.3;
const NODES: usize = 2048;
const SWEEP_BUDGET_S: f64 = 600.0;

struct Verdict {
    pass: bool,
    detail: String,
}

fn slope(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = pts.iter().copied().filter(|&(_, y)| y > 0.0 && y.is_finite()).collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let f = loglog_fit(&x, &y);
    Some((f.slope, f.r2))
}

fn fmt_slope(s: Option<(f64, f64)>) -> String {
    match s {
        Some((m, r2)) => format!("{m:.4} (R2 {r2:.3})"),
        None => "n/a".into(),
    }
}

/// Phase speed for the studies at a record: its root, or c₀ when flagged.
fn study_point(r: &SweepRecord) -> (FlowParams, C, bool) {
    let p = FlowParams::new(MACH, r.eps, r.k).unwrap();
    match r.c_found().filter(|_| !r.flagged) {
        Some(c) => (p, c, true),
        None => (p, c0(&p), false),
    }
}

fn source(y: &[f64], rng: &mut ChaCha8Rng) -> Vec<C> {
    let modes: Vec<(C, f64, f64)> = (0..3)
        .map(|_| (C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rng.gen_range(0.3..2.0), rng.gen_range(0.0..3.0)))
        .collect();
    y.iter().map(|&t| modes.iter().map(|&(a, d, k)| a * (-d * t).exp() * C::from_polar(1.0, k * t) * t).sum()).collect()
}

fn bundle_rel(a: &ModeBundle, b: &ModeBundle, g: &HalfLineGrid) -> f64 {
    let d = a.axpy(C::new(-1.0, 0.0), b);
    let n = |m: &ModeBundle| g.l2_sq(&m.rho) + g.l2_sq(&m.u) + g.l2_sq(&m.v);
    (n(&d) / n(b)).sqrt()
}

fn at_c0_note(recs: &[SweepRecord]) -> String {
    let k = recs.iter().filter(|r| r.flagged).count();
    if k == 0 {
        String::new()
    } else {
        format!("; {k}/{} points evaluated at c0 (no root in D0)", recs.len())
    }
}

fn criterion_1(recs: &[SweepRecord], base: &FlowParams, secs: f64) -> Verdict {
    let rep = sweep_scaling(recs, base);
    let a = rep.alpha_im_c.map(|f| (f.slope, f.r2));
    let b = rep.im_c.map(|f| (f.slope, f.r2));
    let ok_a = a.is_some_and(|(s, r2)| (s - 0.25).abs() <= 0.03 && r2 >= 0.99);
    let ok_b = b.is_some_and(|(s, _)| (s - 0.125).abs() <= 0.02);
    let ok_t = secs < SWEEP_BUDGET_S;
    Verdict {
        pass: ok_a && ok_b && ok_t,
        detail: format!(
            "slope(alpha Im c) {} target 0.25+-0.03; slope(Im c) {} target 0.125+-0.02; {} of {} points usable; sweep {secs:.1}s",
            fmt_slope(a),
            fmt_slope(b),
            rep.used.len(),
            recs.len()
        ),
    }
}

fn criterion_2(recs: &[SweepRecord]) -> Verdict {
    let mut bad_winding = 0;
    let mut bad_modulus = 0;
    for r in recs {
        let p = FlowParams::new(MACH, r.eps, r.k).unwrap();
        if r.winding != 1 {
            bad_winding += 1;
        }
        if !(r.min_boundary_modulus >= 0.5 * r.k.powf(-p.theta)) {
            bad_modulus += 1;
        }
    }
    let mut by_eps: Vec<&SweepRecord> = recs.iter().collect();
    by_eps.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let n = by_eps.len();
    let gaps: Vec<f64> = by_eps.iter().map(|r| r.rouche_gap_ratio).collect();
    let ok_large = gaps[n - 1] < 1.0 && gaps[n - 2] < 1.0;
    let ok_small = gaps[0] <= 0.6;
    let (gmin, gmax) = gaps.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
    Verdict {
        pass: bad_winding == 0 && bad_modulus == 0 && ok_large && ok_small,
        detail: format!(
            "winding != 1 at {bad_winding}/{n}; min|F_app| below K^-theta/2 at {bad_modulus}/{n}; gap at smallest eps {:.3} (<= 0.6), at two largest {:.3}, {:.3} (< 1); range [{gmin:.3}, {gmax:.3}]",
            gaps[0],
            gaps[n - 2],
            gaps[n - 1]
        ),
    }
}

fn criterion_3(recs: &[SweepRecord], profile: &ShearProfile) -> Verdict {
    let mut re = Vec::new();
    let mut sm = Vec::new();
    let mut failures = Vec::new();
    for r in recs {
        let (p, c, _) = study_point(r);
        match error_terms_auto(profile, &p, c, 40.0, NODES, QuadTol::default()) {
            Ok((_, et)) => {
                re.push((r.eps, et.ev_re_h1w.value));
                sm.push((r.eps, et.sm_l2));
            }
            Err(e) => failures.push(format!("eps {:e}: {e}", r.eps)),
        }
    }
    let (a, b) = (slope(&re), slope(&sm));
    let ok = failures.is_empty() && a.is_some_and(|(s, _)| (s - 3.0 / 16.0).abs() <= 0.03) && b.is_some_and(|(s, _)| (s - 7.0 / 16.0).abs() <= 0.05);
    Verdict {
        pass: ok,
        detail: format!(
            "slope ||E_v,re||_H1w {} target 0.1875+-0.03; slope ||E_sm||_L2 {} target 0.4375+-0.05{}{}",
            fmt_slope(a),
            fmt_slope(b),
            at_c0_note(recs),
            if failures.is_empty() { String::new() } else { format!("; errors: {}", failures.join(", ")) }
        ),
    }
}

fn criterion_4(recs: &[SweepRecord], profile: &ShearProfile) -> Verdict {
    let mut means = Vec::new();
    let mut worst_small = 0.0f64;
    let mut failures = Vec::new();
    for (i, r) in recs.iter().enumerate() {
        let (p, c, _) = study_point(r);
        let g = HalfLineGrid::for_params(&p, 40.0, NODES).unwrap();
        let ctx = match ResolventContext::new(&g, profile, &p, c) {
            Ok(x) => x,
            Err(e) => {
                failures.push(format!("eps {:e}: {e}", r.eps));
                continue;
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(400 + i as u64);
        let (fu, fv) = (source(&g.y, &mut rng), source(&g.y, &mut rng));
        match ctx.iterate(&fu, &fv, Branch::L2, IterationControl::default()) {
            Ok(sol) if !sol.log.ratios.is_empty() => {
                let gm = (sol.log.ratios.iter().map(|x| x.ln()).sum::<f64>() / sol.log.ratios.len() as f64).exp();
                means.push((r.eps, gm));
                if r.eps <= 1e-8 * (1.0 + 1e-12) {
                    worst_small = worst_small.max(sol.log.ratios.iter().cloned().fold(0.0, f64::max));
                }
            }
            Ok(_) => failures.push(format!("eps {:e}: no iteration steps", r.eps)),
            Err(e) => failures.push(format!("eps {:e}: {e}", r.eps)),
        }
    }
    let s = slope(&means);
    let ok = failures.is_empty() && worst_small < 0.5 && s.is_some_and(|(m, _)| (m - 0.125).abs() <= 0.05);
    Verdict {
        pass: ok,
        detail: format!(
            "max ratio for eps <= 1e-8: {worst_small:.3e} (< 0.5); slope of mean ratio {} target 0.125+-0.05{}{}",
            fmt_slope(s),
            at_c0_note(recs),
            if failures.is_empty() { String::new() } else { format!("; errors: {}", failures.join(", ")) }
        ),
    }
}

fn criterion_5(recs: &[SweepRecord], profile: &ShearProfile) -> Verdict {
    let n = recs.len();
    let picks = [0, n / 2, n - 1];
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut failures = Vec::new();
    for &i in &picks {
        let (p, c, _) = study_point(&recs[i]);
        let g = HalfLineGrid::for_params(&p, 40.0, NODES).unwrap();
        let ctx = ResolventContext::new(&g, profile, &p, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(500 + i as u64);
        for _ in 0..5 {
            let (fu, fv) = (source(&g.y, &mut rng), source(&g.y, &mut rng));
            for branch in [Branch::L2, Branch::H1] {
                match (ctx.iterate(&fu, &fv, branch, IterationControl::default()), ctx.monolithic(&fu, &fv, branch)) {
                    (Ok(it), Ok(m)) => {
                        worst = worst.max(bundle_rel(&it.mode, &m, &g));
                        count += 1;
                    }
                    (a, b) => failures.push(format!("eps {:e}: {:?} {:?}", recs[i].eps, a.err(), b.err())),
                }
            }
        }
    }
    Verdict {
        pass: failures.is_empty() && worst <= 1e-6,
        detail: format!("max relative L2 difference {worst:.3e} (<= 1e-6) over {count} solves at 3 sweep points{}", if failures.is_empty() { String::new() } else { format!("; errors: {}", failures.join(", ")) }),
    }
}

fn criterion_6(recs: &[SweepRecord], profile: &ShearProfile) -> Verdict {
    let mut worst_f = 0.0f64;
    let mut worst_v = 0.0f64;
    let mut worst_res = 0.0f64;
    let mut no_root = 0;
    let mut sm = Vec::new();
    let mut re = Vec::new();
    let mut failures = Vec::new();
    for r in recs {
        let (p, c, found) = study_point(r);
        if !found {
            no_root += 1;
        }
        let g = HalfLineGrid::for_params(&p, 40.0, NODES).unwrap();
        match assemble_exact_mode(profile, &p, c, &g, IterationControl::default()) {
            Ok(em) => {
                if found {
                    worst_f = worst_f.max(em.f_value.norm());
                }
                worst_v = worst_v.max(em.mode.v[0].norm());
                worst_res = worst_res.max(em.closure_residual);
                sm.push((r.eps, em.u_sm0.norm()));
                re.push((r.eps, em.u_re0.norm()));
            }
            Err(e) => failures.push(format!("eps {:e}: {e}", r.eps)),
        }
    }
    let (a, b) = (slope(&sm), slope(&re));
    let floor = 1.0 / 16.0 - 0.02;
    let ok = failures.is_empty()
        && no_root == 0
        && worst_f <= 1e-10
        && worst_v <= 1e-14
        && worst_res <= 1e-6
        && a.is_some_and(|(s, _)| s >= floor)
        && b.is_some_and(|(s, _)| s >= floor);
    let f_part = if no_root == recs.len() { "|F(c*)| not attainable: no root in D0 at any point".to_string() } else { format!("max |F(c*)| {worst_f:.3e} (<= 1e-10), {no_root} points without root") };
    Verdict {
        pass: ok,
        detail: format!(
            "{f_part}; max |v(0)| {worst_v:.1e} (<= 1e-14); max closure residual {worst_res:.3e} (<= 1e-6); slopes |u_sm(0)| {} |u_re(0)| {} (>= {floor:.4}){}",
            fmt_slope(a),
            fmt_slope(b),
            if failures.is_empty() { String::new() } else { format!("; errors: {}", failures.join(", ")) }
        ),
    }
}

fn criterion_7(profile: &ShearProfile) -> Verdict {
    let grid = validation_grid(40.0, 4000);
    let mut h_gap = f64::INFINITY;
    let mut min_margin = f64::INFINITY;
    let mut w_err = 0.0f64;
    let mut id_err = 0.0f64;
    for m in [0.1, 0.3, 0.5] {
        let s = structural(profile, m, C::new(0.0, 0.0), &grid).unwrap();
        let bound = 0.5 * (1.0 - m * m);
        h_gap = h_gap.min(s.h.iter().map(|h| h - bound).fold(f64::INFINITY, f64::min));
        min_margin = min_margin.min(positivity_check(&s, m).margin);
        for &y in &grid {
            let d = profile.derivs(y);
            let (w0, w1) = w0_w1(d, m);
            let w = multiplier(d, m, C::new(0.0, 0.0));
            w_err = w_err.max((w - w0).norm() / w0.abs());
            let direct = w0 - d[0] * w1;
            id_err = id_err.max((direct - w0_minus_u_w1_factored(d, m)).abs() / direct.abs());
        }
    }
    Verdict {
        pass: h_gap >= -1e-10 && min_margin > 0.0 && w_err <= 1e-10 && id_err <= 1e-9,
        detail: format!(
            "min(H - (1-M^2)/2) {h_gap:.3e} (>= -1e-10); min positivity margin {min_margin:.3e} (> 0); w(c=0) vs w0 {w_err:.1e} (<= 1e-10); factored identity {id_err:.1e} (<= 1e-9); M in {{0.1, 0.3, 0.5}}"
        ),
    }
}

fn criterion_8(base: &FlowParams) -> Verdict {
    let mut overlap = 0.0f64;
    for k in 0..48 {
        let th = -std::f64::consts::PI + (k as f64 + 0.5) * std::f64::consts::PI / 24.0;
        for &rad in &[9.5, 10.0] {
            let z = C::from_polar(rad, th);
            let a = airy_series(z);
            let b = airy_far(z);
            let bv = [b.ai, b.ai_prime, b.ai1, b.ai2].map(|v| v.to_c64().unwrap());
            for j in 0..4 {
                overlap = overlap.max((a[j] - bv[j]).norm() / bv[j].norm());
            }
        }
    }
    let mut ratio_ok = true;
    let mut ratio_txt = Vec::new();
    for r in [30.0, 100.0, 300.0] {
        let z0 = C::from_polar(r, -5.0 * std::f64::consts::PI / 6.0);
        let got = airy_ratio(z0).unwrap();
        let e = (got / (-z0.sqrt()) - 1.0).norm();
        ratio_ok &= e <= 2.0 / r;
        ratio_txt.push(format!("{e:.2e}<={:.2e}", 2.0 / r));
    }
    let anchor = (airy_eval(C::new(0.0, 0.0)).unwrap().ai1 - C::new(-1.0 / 3.0, 0.0)).norm();
    let c = c0(base);
    let s = SublayerScales::new(base, c, C::new(0.3, -0.1));
    let f = build_fast_mode(base, s, &[0.0]).unwrap();
    let want = C::new(0.0, base.alpha()) * s.delta;
    let vf = (f.points[0].v[0] - want).norm() / want.norm();
    Verdict {
        pass: overlap <= 1e-10 && ratio_ok && anchor <= 1e-12 && vf <= 1e-12,
        detail: format!(
            "series/expansion overlap {overlap:.1e} (<= 1e-10); ratio vs -z0^(1/2) [{}]; Ai(1,0)+1/3 {anchor:.1e}; v^f(0) vs i alpha delta {vf:.1e} (<= 1e-12)",
            ratio_txt.join(", ")
        ),
    }
}

fn criterion_9(profile: &ShearProfile) -> Verdict {
    let alpha = 1.0;
    let mut errs = Vec::new();
    for n in [128, 256, 512, 1024] {
        let g = HalfLineGrid::with_stretch(40.0, n, 0.0).unwrap();
        let h: Vec<C> = g.y.iter().map(|&y| C::new(-2.0 * alpha * (-alpha * y).exp(), 0.0)).collect();
        let psi = lambda_inverse(&g, profile, 0.0, alpha, C::new(0.5, 0.1), &h).unwrap();
        errs.push(g.y.iter().zip(&psi).map(|(&y, p)| (p - y * (-alpha * y).exp()).norm()).fold(0.0, f64::max));
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    Verdict {
        pass: min_order >= 3.5,
        detail: format!(
            "max errors {} at N = 128..1024; observed orders {} (>= 3.5)",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", "),
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn main() {
    let profile = ShearProfile::exponential();
    let base = FlowParams::new(MACH, 1e-8, 4.0).unwrap();
    let eps = eps_grid(1e-10, 1e-7, 4);
    let t = Instant::now();
    let recs = sweep(&profile, &base, &eps, true);
    let secs = t.elapsed().as_secs_f64();

    let verdicts = [
        criterion_1(&recs, &base, secs),
        criterion_2(&recs),
        criterion_3(&recs, &profile),
        criterion_4(&recs, &profile),
        criterion_5(&recs, &profile),
        criterion_6(&recs, &profile),
        criterion_7(&profile),
        criterion_8(&base),
        criterion_9(&profile),
    ];
    let mut failed = 0;
    for (i, v) in verdicts.iter().enumerate() {
        println!("criterion {}: {} | {}", i + 1, if v.pass { "PASS" } else { "FAIL" }, v.detail);
        if !v.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", verdicts.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
