//! Reference dispersion function, the disk D₀ around its zero, winding
//! counts by the argument principle, and root refinement.

use crate::approx_mode::f_app_parts_with;
use crate::error::{Result, TsError};
use crate::fit::{loglog_fit, LineFit};
use crate::params::FlowParams;
use crate::profile::ShearProfile;
use crate::quad::QuadTol;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::time::Instant;

type C = Complex64;

pub const MIN_SAMPLES: usize = 64;
pub const MAX_SAMPLES: usize = 4096;
/// Wavenumber prefactors tried when K is not fixed.
pub const K_SCAN: [f64; 5] = [4.0, 6.0, 8.0, 12.0, 16.0];

fn mach_factor(p: &FlowParams) -> f64 {
    (1.0 - p.mach * p.mach).powf(0.25)
}

/// Zero of the reference function:
/// (K/√(1-M²) + K⁻¹(1-M²)^{1/4} e^{iπ/4}) ε^{1/8}.
pub fn c0(p: &FlowParams) -> C {
    let e8 = p.eps.powf(0.125);
    let s = (1.0 - p.mach * p.mach).sqrt();
    (p.k / s + C::from_polar(mach_factor(p) / p.k, PI / 4.0)) * e8
}

/// 1 + e^{-iπ/4} K (1-M²)^{-1/4} ε^{-1/8} (-c + α/√(1-M²)).
pub fn f_ref(c: C, p: &FlowParams) -> C {
    let s = (1.0 - p.mach * p.mach).sqrt();
    let alpha = p.k * p.eps.powf(0.125);
    1.0 + C::from_polar(p.k / mach_factor(p) * p.eps.powf(-0.125), -PI / 4.0) * (alpha / s - c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskD0 {
    pub center: C,
    pub radius: f64,
}

impl DiskD0 {
    /// Radius K^{-1-θ}(1-M²)^{1/4}ε^{1/8} around c₀.
    pub fn new(p: &FlowParams) -> Self {
        DiskD0 { center: c0(p), radius: p.k.powf(-1.0 - p.theta) * mach_factor(p) * p.eps.powf(0.125) }
    }

    pub fn contains(&self, c: C) -> bool {
        (c - self.center).norm() <= self.radius
    }

    pub fn point(&self, t: f64) -> C {
        self.center + C::from_polar(self.radius, t)
    }

    /// `n` equally spaced boundary points, the first at angle `phase`.
    pub fn boundary(&self, n: usize, phase: f64) -> Vec<C> {
        (0..n).map(|j| self.point(phase + TAU * j as f64 / n as f64)).collect()
    }

    /// min Im c over the boundary divided by K⁻¹ε^{1/8}.
    pub fn tau0(&self, p: &FlowParams) -> f64 {
        (self.center.im - self.radius) * p.k / p.eps.powf(0.125)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WindingReport {
    pub winding: i64,
    pub samples: usize,
    pub min_modulus: f64,
    pub max_phase_step: f64,
    /// Boundary points and values at the final resolution.
    #[serde(skip)]
    pub points: Vec<C>,
    #[serde(skip)]
    pub values: Vec<C>,
}

/// Absolute floor below which F counts as vanishing on the contour.
pub const CONTOUR_FLOOR: f64 = 1e-13;

fn eval_all<F>(f: &F, pts: &[C]) -> Result<Vec<C>>
where
    F: Fn(C) -> Result<C> + Sync,
{
    pts.par_iter().map(|&c| f(c)).collect()
}

fn count(values: &[C]) -> (i64, f64) {
    let n = values.len();
    let mut total = 0.0;
    let mut max_step = 0.0f64;
    for j in 0..n {
        let step = (values[(j + 1) % n] / values[j]).arg();
        total += step;
        max_step = max_step.max(step.abs());
    }
    ((total / TAU).round() as i64, max_step)
}

/// Winding number of F around the boundary of `disk`, starting from
/// `samples` points and doubling until two consecutive counts agree and no
/// phase step exceeds π/2.
pub fn winding<F>(f: &F, disk: &DiskD0, samples: usize, phase: f64) -> Result<WindingReport>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let mut n = samples.max(8);
    let mut pts = disk.boundary(n, phase);
    let mut vals = eval_all(f, &pts)?;
    let mut prev: Option<i64> = None;
    loop {
        let min = vals.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if !(min > CONTOUR_FLOOR) {
            return Err(TsError::ZeroOnContour(min));
        }
        let (w, step) = count(&vals);
        if prev == Some(w) && step < PI / 2.0 {
            return Ok(WindingReport { winding: w, samples: n, min_modulus: min, max_phase_step: step, points: pts, values: vals });
        }
        if 2 * n > MAX_SAMPLES.max(samples) {
            return Err(TsError::WindingNotConverged(n));
        }
        prev = Some(w);
        // Keep the old samples; only the midpoints are new.
        let mids: Vec<C> = (0..n).map(|j| disk.point(phase + TAU * (j as f64 + 0.5) / n as f64)).collect();
        let mid_vals = eval_all(f, &mids)?;
        let mut np = Vec::with_capacity(2 * n);
        let mut nv = Vec::with_capacity(2 * n);
        for j in 0..n {
            np.push(pts[j]);
            np.push(mids[j]);
            nv.push(vals[j]);
            nv.push(mid_vals[j]);
        }
        pts = np;
        vals = nv;
        n *= 2;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootReport {
    pub root: C,
    pub iterations: usize,
    pub residual: f64,
    pub used_subdivision: bool,
    pub inside_disk: bool,
}

const NEWTON_MAX: usize = 60;
/// A Newton step this small relative to the disk radius counts as
/// converged when |F| can no longer be reduced.
const STAGNATION: f64 = 1e-9;

fn newton<F>(f: &F, start: C, h: f64, tol: f64, leash: &DiskD0) -> Result<(C, usize, f64)>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let mut c = start;
    let mut fc = f(c)?;
    for it in 0..NEWTON_MAX {
        if fc.norm() <= tol {
            return Ok((c, it, fc.norm()));
        }
        let d = (f(c + h)? - f(c - h)?) / (2.0 * h);
        if d.norm() == 0.0 || !d.is_finite() {
            return Err(TsError::RootNotFound(format!("zero derivative at {c}")));
        }
        let mut step = fc / d;
        // Damp until the residual decreases.
        let mut accepted = false;
        for _ in 0..30 {
            let trial = c - step;
            if (trial - leash.center).norm() <= leash.radius {
                if let Ok(ft) = f(trial) {
                    if ft.norm() < fc.norm() {
                        c = trial;
                        fc = ft;
                        accepted = true;
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // At the evaluation noise floor no step decreases |F| further.
            if (fc / d).norm() <= STAGNATION * leash.radius {
                return Ok((c, it + 1, fc.norm()));
            }
            return Err(TsError::RootNotFound(format!("Newton stalled at {c}, |F| = {:.3e}", fc.norm())));
        }
    }
    if fc.norm() <= tol {
        Ok((c, NEWTON_MAX, fc.norm()))
    } else {
        Err(TsError::RootNotFound(format!("no convergence after {NEWTON_MAX} steps, |F| = {:.3e}", fc.norm())))
    }
}

/// Newton from `start` with central differences of step 1e-6·radius. On
/// failure the disk is split into four overlapping subdisks and the one
/// with winding 1 is searched recursively.
pub fn find_zero<F>(f: &F, start: C, disk: &DiskD0, tol: f64) -> Result<RootReport>
where
    F: Fn(C) -> Result<C> + Sync,
{
    let h = 1e-6 * disk.radius;
    let leash = DiskD0 { center: disk.center, radius: 2.0 * disk.radius };
    let direct = newton(f, start, h, tol, &leash);
    if let Ok((root, it, res)) = direct {
        return Ok(RootReport { root, iterations: it, residual: res, used_subdivision: false, inside_disk: disk.contains(root) });
    }
    let mut trace = vec![format!("{}", direct.unwrap_err())];
    let mut current = *disk;
    for depth in 0..8 {
        let subs = [C::new(1.0, 0.0), C::new(-1.0, 0.0), C::i(), -C::i()].map(|u: C| DiskD0 { center: current.center + u * current.radius * 0.5, radius: 0.75 * current.radius });
        let mut next = None;
        for s in subs {
            match winding(f, &s, MIN_SAMPLES, 0.0) {
                Ok(w) if w.winding == 1 => {
                    next = Some(s);
                    break;
                }
                Ok(_) => {}
                Err(e) => trace.push(format!("depth {depth}: {e}")),
            }
        }
        let Some(s) = next else {
            trace.push(format!("depth {depth}: no subdisk with winding 1"));
            break;
        };
        current = s;
        let leash = DiskD0 { center: s.center, radius: 2.0 * s.radius };
        match newton(f, s.center, 1e-6 * s.radius, tol, &leash) {
            Ok((root, it, res)) => {
                return Ok(RootReport { root, iterations: it, residual: res, used_subdivision: true, inside_disk: disk.contains(root) })
            }
            Err(e) => trace.push(format!("depth {depth}: {e}")),
        }
    }
    Err(TsError::RootNotFound(trace.join("; ")))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord {
    pub eps: f64,
    pub k: f64,
    pub mach: f64,
    pub re_c: f64,
    pub im_c: f64,
    pub winding: i64,
    pub min_boundary_modulus: f64,
    pub rouche_gap_ratio: f64,
    pub newton_iters: usize,
    pub residual_at_root: f64,
    /// Not serialised, so that records are reproducible byte for byte.
    #[serde(skip)]
    pub wall_time: f64,
    pub flagged: bool,
    pub note: String,
}

impl SweepRecord {
    pub fn c_found(&self) -> Option<C> {
        if self.re_c.is_finite() && self.im_c.is_finite() {
            Some(C::new(self.re_c, self.im_c))
        } else {
            None
        }
    }
}

pub const ROOT_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub quad: QuadTol,
    pub root_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { quad: QuadTol::default(), root_tol: ROOT_TOL }
    }
}

/// One dispersion solve for F_app at fixed parameters.
pub fn solve_point(profile: &ShearProfile, params: &FlowParams) -> SweepRecord {
    solve_point_with(profile, params, SolveOptions::default())
}

pub fn solve_point_with(profile: &ShearProfile, params: &FlowParams, opts: SolveOptions) -> SweepRecord {
    let t = Instant::now();
    let disk = DiskD0::new(params);
    let f = |c: C| f_app_parts_with(profile, params, c, opts.quad).map(|p| p.value);
    let mut rec = SweepRecord {
        eps: params.eps,
        k: params.k,
        mach: params.mach,
        re_c: f64::NAN,
        im_c: f64::NAN,
        winding: -1,
        min_boundary_modulus: f64::NAN,
        rouche_gap_ratio: f64::NAN,
        newton_iters: 0,
        residual_at_root: f64::NAN,
        wall_time: 0.0,
        flagged: true,
        note: String::new(),
    };
    let mut notes = Vec::new();
    match winding(&f, &disk, MIN_SAMPLES, 0.0) {
        Ok(w) => {
            rec.winding = w.winding;
            rec.min_boundary_modulus = w.min_modulus;
            rec.rouche_gap_ratio = w
                .points
                .iter()
                .zip(&w.values)
                .map(|(&c, v)| {
                    let r = f_ref(c, params);
                    (v - r).norm() / r.norm()
                })
                .fold(0.0, f64::max);
            if w.winding != 1 {
                notes.push(format!("winding {} in D0", w.winding));
            }
        }
        Err(e) => notes.push(format!("winding: {e}")),
    }
    match find_zero(&f, disk.center, &disk, opts.root_tol) {
        Ok(r) => {
            rec.re_c = r.root.re;
            rec.im_c = r.root.im;
            rec.newton_iters = r.iterations;
            rec.residual_at_root = r.residual;
            if !r.inside_disk {
                notes.push("root outside D0".into());
            }
        }
        Err(e) => notes.push(format!("root: {e}")),
    }
    rec.flagged = rec.winding != 1 || !rec.c_found().is_some_and(|c| disk.contains(c));
    rec.note = notes.join("; ");
    rec.wall_time = t.elapsed().as_secs_f64();
    rec
}

/// Smallest K in `ks` with winding 1 and Rouché gap below 1/2. When none
/// qualifies, the record with the smallest gap is returned flagged.
pub fn choose_k(profile: &ShearProfile, base: &FlowParams, ks: &[f64]) -> SweepRecord {
    choose_k_with(profile, base, ks, SolveOptions::default())
}

pub fn choose_k_with(profile: &ShearProfile, base: &FlowParams, ks: &[f64], opts: SolveOptions) -> SweepRecord {
    let mut best: Option<SweepRecord> = None;
    for &k in ks {
        let mut p = *base;
        p.k = k;
        let r = solve_point_with(profile, &p, opts);
        if r.winding == 1 && r.rouche_gap_ratio < 0.5 {
            return r;
        }
        let better = match &best {
            None => true,
            Some(b) => r.rouche_gap_ratio < b.rouche_gap_ratio || b.rouche_gap_ratio.is_nan(),
        };
        if better {
            best = Some(r);
        }
    }
    let mut r = best.expect("empty K list");
    r.flagged = true;
    if !r.note.is_empty() {
        r.note.push_str("; ");
    }
    r.note.push_str("no K in scan gives winding 1 with gap < 1/2");
    r
}

/// Log-spaced ε values from `lo` to `hi` inclusive.
pub fn eps_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let (a, b) = (lo.log10(), hi.log10());
    let n = ((b - a) * per_decade as f64).round() as usize;
    if n == 0 {
        return vec![lo];
    }
    (0..=n).map(|j| 10f64.powf(a + (b - a) * j as f64 / n as f64)).collect()
}

pub fn sweep(profile: &ShearProfile, base: &FlowParams, eps: &[f64], scan_k: bool) -> Vec<SweepRecord> {
    sweep_with(profile, base, eps, scan_k.then_some(&K_SCAN[..]), SolveOptions::default())
}

/// Sweep over `eps`; with `scan` each point picks K from the list,
/// otherwise `base.k` is used throughout. Output order follows `eps`.
pub fn sweep_with(profile: &ShearProfile, base: &FlowParams, eps: &[f64], scan: Option<&[f64]>, opts: SolveOptions) -> Vec<SweepRecord> {
    eps.par_iter()
        .map(|&e| {
            let mut p = *base;
            p.eps = e;
            match scan {
                Some(ks) => choose_k_with(profile, &p, ks, opts),
                None => solve_point_with(profile, &p, opts),
            }
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingReport {
    pub alpha_im_c: Option<LineFit>,
    pub im_c: Option<LineFit>,
    pub delta: Option<LineFit>,
    /// α Im c/√ε divided by K^{-2/3} n^{2/3} at each used point.
    pub growth_ratio: Vec<f64>,
    pub used: Vec<f64>,
    pub excluded: Vec<f64>,
}

/// Log-log fits over the unflagged records.
pub fn sweep_scaling(records: &[SweepRecord], base: &FlowParams) -> ScalingReport {
    let mut a_im = Vec::new();
    let mut im = Vec::new();
    let mut del = Vec::new();
    let mut growth = Vec::new();
    let mut used = Vec::new();
    let mut excluded = Vec::new();
    for r in records {
        let Some(c) = r.c_found().filter(|_| !r.flagged) else {
            excluded.push(r.eps);
            continue;
        };
        let mut p = *base;
        p.eps = r.eps;
        p.k = r.k;
        let a = p.alpha();
        a_im.push((r.eps, a * c.im));
        im.push((r.eps, c.im));
        del.push((r.eps, p.delta().norm()));
        growth.push(a * c.im / r.eps.sqrt() / (r.k.powf(-2.0 / 3.0) * p.n().powf(2.0 / 3.0)));
        used.push(r.eps);
    }
    let fit = |v: &[(f64, f64)]| {
        if v.len() < 2 {
            return None;
        }
        let (x, y): (Vec<f64>, Vec<f64>) = v.iter().cloned().unzip();
        Some(loglog_fit(&x, &y))
    };
    ScalingReport { alpha_im_c: fit(&a_im), im_c: fit(&im), delta: fit(&del), growth_ratio: growth, used, excluded }
}
