//! Discrete resolvent solves: the operator Λ, the compressible
//! Orr-Sommerfeld problem with its reconstruction (quasi-compressible
//! system), the Stokes system, the full linearised operator ℒ, and the
//! iteration between the two approximations.
//!
//! The Orr-Sommerfeld matrix is assembled in flux form
//!   (i/n)[D₁A⁻¹Δ_hD₁ - α²Δ_h] + D₁A⁻¹(U-c)D₁ - α²(U-c) - D₁A⁻¹U',
//! which makes the reconstructed (ρ, u, v) satisfy the discrete
//! quasi-compressible equations exactly away from the closure rows.
//! Λ itself is assembled as A⁻¹D₂ + (A⁻¹)'D₁ - α², which equals Δ_h when M = 0.

use crate::banded::BandLu;
use crate::error::{Result, TsError};
use crate::grid::HalfLineGrid;
use crate::mode::ModeBundle;
use crate::params::FlowParams;
use crate::profile::ShearProfile;
use crate::sparse::SparseRows;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type C = Complex64;

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

/// Condition estimates above this are reported as failures.
pub const MAX_CONDITION: f64 = 1e13;

/// Pointwise coefficients on the grid.
#[derive(Clone, Debug)]
pub struct Coefficients {
    /// U - c
    pub w: Vec<C>,
    pub up: Vec<f64>,
    pub upp: Vec<f64>,
    pub ainv: Vec<C>,
    /// ∂_Y(A⁻¹)
    pub dainv: Vec<C>,
}

impl Coefficients {
    pub fn new(grid: &HalfLineGrid, profile: &ShearProfile, mach: f64, c: C) -> Result<Self> {
        let m2 = mach * mach;
        let n = grid.len();
        let mut co = Coefficients {
            w: Vec::with_capacity(n),
            up: Vec::with_capacity(n),
            upp: Vec::with_capacity(n),
            ainv: Vec::with_capacity(n),
            dainv: Vec::with_capacity(n),
        };
        for &y in &grid.y {
            let d = profile.derivs(y);
            let w = d[0] - c;
            let a = 1.0 - m2 * w * w;
            if a.norm() < 1e-8 {
                return Err(TsError::ADegenerate { y, modulus: a.norm() });
            }
            let ai = 1.0 / a;
            co.w.push(w);
            co.up.push(d[1]);
            co.upp.push(d[2]);
            co.ainv.push(ai);
            co.dainv.push(2.0 * m2 * w * d[1] * ai * ai);
        }
        Ok(co)
    }
}

fn to_c(v: &[f64]) -> Vec<C> {
    v.iter().map(|&x| re(x)).collect()
}

/// Λ_h = A⁻¹D₂ + (A⁻¹)'D₁ - α², all rows, no closures.
pub fn lambda_matrix(grid: &HalfLineGrid, co: &Coefficients, alpha: f64) -> SparseRows {
    let n = grid.len();
    let d1 = grid.d1.to_sparse();
    let d2 = grid.d2.to_sparse();
    d2.left_scale(&co.ainv).add(&d1.left_scale(&co.dainv)).sub(&SparseRows::identity(n).scale(re(alpha * alpha)))
}

/// Δ_h = D₂ - α².
pub fn delta_alpha_matrix(grid: &HalfLineGrid, alpha: f64) -> SparseRows {
    grid.d2.to_sparse().sub(&SparseRows::identity(grid.len()).scale(re(alpha * alpha)))
}

/// Solve Λψ = h on interior nodes with ψ(0) = 0 and ψ(Y_max) = 0.
/// `mach` may be zero here.
pub fn lambda_inverse(grid: &HalfLineGrid, profile: &ShearProfile, mach: f64, alpha: f64, c: C, h: &[C]) -> Result<Vec<C>> {
    if h.len() != grid.len() {
        return Err(TsError::GridMismatch(format!("source has {} values, grid {}", h.len(), grid.len())));
    }
    let co = Coefficients::new(grid, profile, mach, c)?;
    let mut m = lambda_matrix(grid, &co, alpha);
    let n = grid.len();
    m.set_row(0, vec![(0, re(1.0))]);
    m.set_row(n - 1, vec![(n - 1, re(1.0))]);
    m.decouple_dirichlet(0);
    m.decouple_dirichlet(n - 1);
    let lu = BandLu::factor(&m)?;
    let mut rhs = h.to_vec();
    rhs[0] = re(0.0);
    rhs[n - 1] = re(0.0);
    Ok(lu.solve(&rhs))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    L2,
    H1,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct IterationLog {
    pub e: Vec<f64>,
    pub ratios: Vec<f64>,
    pub steps: usize,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Conditioning {
    pub stokes: f64,
    pub orr_sommerfeld: f64,
}

#[derive(Clone, Debug)]
pub struct ResolventSolution {
    pub mode: ModeBundle,
    pub log: IterationLog,
    /// ‖ℒΞ - F‖/‖F‖ over nodes away from the closures.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct IterationControl {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for IterationControl {
    fn default() -> Self {
        IterationControl { tol: 1e-10, max_iter: 60 }
    }
}

/// All discrete operators at fixed (profile, params, c, grid), with the two
/// approximate systems factored once.
pub struct ResolventContext<'g> {
    pub grid: &'g HalfLineGrid,
    pub params: FlowParams,
    pub c: C,
    pub co: Coefficients,
    alpha: f64,
    se: f64,
    m2: f64,
    d1: SparseRows,
    dl: SparseRows,
    pub lambda: SparseRows,
    pub delta_alpha: SparseRows,
    /// Flux-form Orr-Sommerfeld rows without closures.
    pub os: SparseRows,
    /// ℒ, L_S and E_Q in the interleaved (ρ, u, v) layout, without closures.
    pub l_full: SparseRows,
    pub l_s: SparseRows,
    pub e_q: SparseRows,
    rec_rho: SparseRows,
    stokes_lu: BandLu,
    os_lu: BandLu,
    pub conditioning: Conditioning,
}

fn blocks3(b: [[&SparseRows; 3]; 3], n: usize) -> SparseRows {
    let mut m = SparseRows::zeros(3 * n, 3 * n);
    for (r, row) in b.iter().enumerate() {
        for (k, blk) in row.iter().enumerate() {
            m.add_block(blk, 3, r, k);
        }
    }
    m
}

impl<'g> ResolventContext<'g> {
    pub fn new(grid: &'g HalfLineGrid, profile: &ShearProfile, params: &FlowParams, c: C) -> Result<Self> {
        params.require_resolvent_mach()?;
        let n = grid.len();
        let co = Coefficients::new(grid, profile, params.mach, c)?;
        let alpha = params.alpha();
        let ia = C::new(0.0, alpha);
        let se = params.eps.sqrt();
        let lam = params.lambda;
        let m2 = params.mach * params.mach;
        let m2inv = 1.0 / m2;
        let nn = params.n();
        let i_n = C::new(0.0, 1.0 / nn);
        let a2 = re(alpha * alpha);

        let id = SparseRows::identity(n);
        let zero = SparseRows::zeros(n, n);
        let d1 = grid.d1.to_sparse();
        let d2 = grid.d2.to_sparse();
        let dl = d2.sub(&id.scale(a2));
        let w = SparseRows::diag(&co.w);
        let up = SparseRows::diag(&to_c(&co.up));
        let upp = SparseRows::diag(&to_c(&co.upp));
        let ainv = SparseRows::diag(&co.ainv);
        let lambda = lambda_matrix(grid, &co, alpha);

        let os = d1
            .compose(&ainv)
            .compose(&dl)
            .compose(&d1)
            .sub(&dl.scale(a2))
            .scale(i_n)
            .add(&d1.compose(&ainv).compose(&w).compose(&d1))
            .sub(&w.scale(a2))
            .sub(&d1.compose(&ainv).compose(&up));

        // Stokes blocks.
        let s11 = w.scale(ia);
        let s12 = id.scale(ia);
        let s13 = d1.clone();
        let s21 = id.scale(ia * m2inv).add(&upp.scale(re(se))).scale(re(-1.0));
        let s22 = dl.scale(re(se)).add(&id.scale(ia * ia * lam * se)).sub(&w.scale(ia));
        let s23 = d1.scale(ia * lam * se);
        let s31 = d1.scale(re(-m2inv));
        let s32 = d1.scale(ia * lam * se);
        let s33 = dl.scale(re(se)).add(&d1.compose(&d1).scale(re(lam * se))).sub(&w.scale(ia));
        let l_s = blocks3([[&s11, &s12, &s13], [&s21, &s22, &s23], [&s31, &s32, &s33]], n);
        let neg_up = up.scale(re(-1.0));
        let l_full = l_s.add(&blocks3([[&zero, &zero, &zero], [&zero, &zero, &neg_up], [&zero, &zero, &zero]], n));

        // E_Q = ℒ - L_Q.
        let q21 = upp.add(&dl.compose(&w)).scale(re(-se));
        let e_q = blocks3([[&zero, &zero, &zero], [&q21, &id.scale(ia * ia * lam * se), &s23], [&zero, &s32, &d1.compose(&d1).scale(re(lam * se))]], n);

        let rec_rho = dl
            .compose(&d1)
            .scale(i_n)
            .add(&w.compose(&d1))
            .sub(&up)
            .left_scale(&co.ainv)
            .scale(re(-m2));

        let mut stokes = l_s.clone();
        Self::stokes_closures(&mut stokes, &d1, n, 3, 0);
        let stokes_lu = BandLu::factor(&stokes)?;
        let mut osm = os.clone();
        Self::os_closures(&mut osm, &lambda, &d1, n, 1, 0);
        let os_lu = BandLu::factor(&osm)?;
        let conditioning = Conditioning { stokes: stokes_lu.condition_estimate(), orr_sommerfeld: os_lu.condition_estimate() };
        if conditioning.stokes > MAX_CONDITION {
            return Err(TsError::IllConditioned(conditioning.stokes));
        }
        if conditioning.orr_sommerfeld > MAX_CONDITION {
            return Err(TsError::IllConditioned(conditioning.orr_sommerfeld));
        }
        Ok(ResolventContext {
            grid,
            params: *params,
            c,
            co,
            alpha,
            se,
            m2,
            d1,
            dl,
            lambda,
            delta_alpha: delta_alpha_matrix(grid, alpha),
            os,
            l_full,
            l_s,
            e_q,
            rec_rho,
            stokes_lu,
            os_lu,
            conditioning,
        })
    }

    /// ∂_Yφ(0) = 0, ψ(0) = 0, φ(Y_max) = ψ(Y_max) = 0 on the momentum rows.
    /// `nf` fields per node, (ξ, φ, ψ) starting at field `off`.
    fn stokes_closures(m: &mut SparseRows, d1: &SparseRows, n: usize, nf: usize, off: usize) {
        let last = n - 1;
        m.set_row(off + 1, d1.row(0).iter().map(|&(j, a)| (j * nf + off + 1, a)).collect());
        m.set_row(off + 2, vec![(off + 2, re(1.0))]);
        m.set_row(last * nf + off + 1, vec![(last * nf + off + 1, re(1.0))]);
        m.set_row(last * nf + off + 2, vec![(last * nf + off + 2, re(1.0))]);
        for k in [off + 2, last * nf + off + 1, last * nf + off + 2] {
            m.decouple_dirichlet(k);
        }
    }

    /// Ψ(0) = Λ(Ψ)(0) = 0, ∂_YΨ(Y_max) = Ψ(Y_max) = 0 on the rows of
    /// nodes 0, 1, N-1, N.
    fn os_closures(m: &mut SparseRows, lambda: &SparseRows, d1: &SparseRows, n: usize, nf: usize, f: usize) {
        let last = n - 1;
        let map = |r: &[(usize, C)]| r.iter().map(|&(j, a)| (j * nf + f, a)).collect::<Vec<_>>();
        m.set_row(f, vec![(f, re(1.0))]);
        m.set_row(nf + f, map(lambda.row(0)));
        m.set_row((last - 1) * nf + f, map(d1.row(last)));
        m.set_row(last * nf + f, vec![(last * nf + f, re(1.0))]);
        m.decouple_dirichlet(f);
        m.decouple_dirichlet(last * nf + f);
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn ia(&self) -> C {
        C::new(0.0, self.alpha)
    }

    fn check_len(&self, v: &[C]) -> Result<()> {
        if v.len() != self.len() {
            return Err(TsError::GridMismatch(format!("grid function has {} values, grid {}", v.len(), self.len())));
        }
        Ok(())
    }

    fn apply3(&self, m: &SparseRows, x: &ModeBundle) -> [Vec<C>; 3] {
        let r = ModeBundle::deinterleave(&m.apply(&x.interleave()));
        [r.rho, r.u, r.v]
    }

    /// ℒ applied to a bundle on the grid.
    pub fn apply_l(&self, x: &ModeBundle) -> [Vec<C>; 3] {
        self.apply3(&self.l_full, x)
    }

    pub fn apply_l_s(&self, x: &ModeBundle) -> [Vec<C>; 3] {
        self.apply3(&self.l_s, x)
    }

    pub fn apply_e_q(&self, x: &ModeBundle) -> [Vec<C>; 3] {
        self.apply3(&self.e_q, x)
    }

    /// L_Q = ℒ - E_Q.
    pub fn apply_l_q(&self, x: &ModeBundle) -> [Vec<C>; 3] {
        let a = self.apply_l(x);
        let b = self.apply_e_q(x);
        [sub(&a[0], &b[0]), sub(&a[1], &b[1]), sub(&a[2], &b[2])]
    }

    /// E_S = ℒ - L_S = (0, -ψU', 0).
    pub fn apply_e_s(&self, x: &ModeBundle) -> [Vec<C>; 3] {
        let n = self.len();
        [vec![re(0.0); n], x.v.iter().zip(&self.co.up).map(|(v, u)| -v * u).collect(), vec![re(0.0); n]]
    }

    /// Ω(f_u, f_v) = f_v - (iα)⁻¹∂_Y(A⁻¹f_u).
    pub fn omega(&self, f_u: &[C], f_v: &[C]) -> Vec<C> {
        let g: Vec<C> = f_u.iter().zip(&self.co.ainv).map(|(f, a)| f * a).collect();
        let dg = self.d1.apply(&g);
        let ia = self.ia();
        f_v.iter().zip(&dg).map(|(v, d)| v - d / ia).collect()
    }

    /// Flux-form Orr-Sommerfeld solve with the four closures.
    pub fn solve_os(&self, h: &[C]) -> Result<Vec<C>> {
        self.check_len(h)?;
        let n = self.len();
        let mut rhs = h.to_vec();
        for k in [0, 1, n - 2, n - 1] {
            rhs[k] = re(0.0);
        }
        Ok(self.os_lu.solve(&rhs))
    }

    /// (ρ, u, v) from Ψ and the momentum source s₁.
    pub fn reconstruct(&self, psi: &[C], s1: &[C]) -> ModeBundle {
        let ia = self.ia();
        let mut rho = self.rec_rho.apply(psi);
        for k in 0..rho.len() {
            rho[k] -= self.m2 * self.co.ainv[k] * s1[k] / ia;
        }
        let dpsi = self.d1.apply(psi);
        let u = dpsi.iter().zip(&self.co.w).zip(&rho).map(|((d, w), r)| d - w * r).collect();
        let v = psi.iter().map(|p| -ia * p).collect();
        ModeBundle { rho, u, v }
    }

    /// L_Q(ϱ, u, v) = (0, s₁, s₂).
    pub fn solve_quasi(&self, s1: &[C], s2: &[C]) -> Result<ModeBundle> {
        self.check_len(s1)?;
        self.check_len(s2)?;
        let psi = self.solve_os(&self.omega(s1, s2))?;
        Ok(self.reconstruct(&psi, s1))
    }

    /// L_S(ξ, φ, ψ) = (q₀, q₁, q₂) with the Stokes closures.
    pub fn solve_stokes(&self, q0: &[C], q1: &[C], q2: &[C]) -> Result<ModeBundle> {
        self.check_len(q0)?;
        self.check_len(q1)?;
        self.check_len(q2)?;
        let n = self.len();
        let mut rhs = ModeBundle { rho: q0.to_vec(), u: q1.to_vec(), v: q2.to_vec() };
        for k in [0, n - 1] {
            rhs.u[k] = re(0.0);
            rhs.v[k] = re(0.0);
        }
        Ok(ModeBundle::deinterleave(&self.stokes_lu.solve(&rhs.interleave())))
    }

    /// ‖(M⁻¹ξ, φ, ψ)‖ + α⁻¹‖div(φ, ψ)‖_{H¹} + α⁻¹‖M⁻²∂_Yξ‖.
    pub fn stokes_diagnostic(&self, s: &ModeBundle) -> f64 {
        let g = self.grid;
        let m = self.m2.sqrt();
        let scaled: Vec<C> = s.rho.iter().map(|x| x / m).collect();
        let base = (g.l2_sq(&scaled) + g.l2_sq(&s.u) + g.l2_sq(&s.v)).max(0.0).sqrt();
        let ia = self.ia();
        let dpsi = self.d1.apply(&s.v);
        let div: Vec<C> = s.u.iter().zip(&dpsi).map(|(p, d)| ia * p + d).collect();
        let dxi: Vec<C> = self.d1.apply(&s.rho).iter().map(|d| d / self.m2).collect();
        base + (g.h1(&div) + g.l2(&dxi)) / self.alpha
    }

    /// Relative residual of ℒΞ = F over nodes 2..N-2.
    pub fn interior_residual(&self, x: &ModeBundle, f: &[Vec<C>; 3]) -> f64 {
        let r = self.apply_l(x);
        let n = self.len();
        let mask = |v: &[C], k: usize| if k < 2 || k + 2 >= n { re(0.0) } else { v[k] };
        let mut num = 0.0;
        let mut den = 0.0;
        for comp in 0..3 {
            let d: Vec<C> = (0..n).map(|k| mask(&r[comp], k) - mask(&f[comp], k)).collect();
            let ff: Vec<C> = (0..n).map(|k| mask(&f[comp], k)).collect();
            num += self.grid.l2_sq(&d);
            den += self.grid.l2_sq(&ff);
        }
        if den == 0.0 {
            num.max(0.0).sqrt()
        } else {
            (num / den).max(0.0).sqrt()
        }
    }

    /// Stokes-started iteration for ℒΞ = (q₀, f_u, f_v).
    fn iterate_l2(&self, src: &[Vec<C>; 3], ctl: IterationControl) -> Result<(ModeBundle, IterationLog)> {
        let mut s = self.solve_stokes(&src[0], &src[1], &src[2])?;
        let mut total = s.clone();
        let mut log = IterationLog::default();
        let e0 = self.stokes_diagnostic(&s);
        log.e.push(e0);
        if e0 == 0.0 {
            log.converged = true;
            return Ok((total, log));
        }
        let mut bad = 0;
        for _ in 0..ctl.max_iter {
            let s1: Vec<C> = s.v.iter().zip(&self.co.up).map(|(p, u)| p * u).collect();
            let q = self.solve_quasi(&s1, &vec![re(0.0); self.len()])?;
            let eq = self.apply_e_q(&q);
            let neg = |v: &[C]| v.iter().map(|x| -x).collect::<Vec<_>>();
            s = self.solve_stokes(&neg(&eq[0]), &neg(&eq[1]), &neg(&eq[2]))?;
            total = total.axpy(re(1.0), &q).axpy(re(1.0), &s);
            let e = self.stokes_diagnostic(&s);
            let prev = *log.e.last().unwrap();
            let ratio = e / prev;
            log.e.push(e);
            log.ratios.push(ratio);
            log.steps += 1;
            if e <= ctl.tol * e0 {
                log.converged = true;
                return Ok((total, log));
            }
            bad = if ratio >= 1.0 { bad + 1 } else { 0 };
            if bad >= 3 {
                return Err(TsError::NonContraction(log.e));
            }
        }
        Ok((total, log))
    }

    /// Solve ℒΞ = (0, f_u, f_v) by the quasi-compressible/Stokes iteration.
    pub fn iterate(&self, f_u: &[C], f_v: &[C], branch: Branch, ctl: IterationControl) -> Result<ResolventSolution> {
        let zero = vec![re(0.0); self.len()];
        self.iterate_with_density(&zero, f_u, f_v, branch, ctl)
    }

    /// As `iterate`, also allowing a continuity source q₀ (L2 branch only).
    pub fn iterate_with_density(&self, q0: &[C], f_u: &[C], f_v: &[C], branch: Branch, ctl: IterationControl) -> Result<ResolventSolution> {
        self.check_len(q0)?;
        self.check_len(f_u)?;
        self.check_len(f_v)?;
        let f = [q0.to_vec(), f_u.to_vec(), f_v.to_vec()];
        let (mode, log) = match branch {
            Branch::L2 => self.iterate_l2(&f, ctl)?,
            Branch::H1 => {
                if q0.iter().any(|x| x.norm() != 0.0) {
                    return Err(TsError::InvalidParameter("the H1 branch takes no continuity source".into()));
                }
                let q = self.solve_quasi(f_u, f_v)?;
                let eq = self.apply_e_q(&q);
                let neg = |v: &[C]| v.iter().map(|x| -x).collect::<Vec<_>>();
                let (y, log) = self.iterate_l2(&[neg(&eq[0]), neg(&eq[1]), neg(&eq[2])], ctl)?;
                (q.axpy(re(1.0), &y), log)
            }
        };
        let residual = self.interior_residual(&mode, &f);
        Ok(ResolventSolution { mode, log, residual })
    }

    /// Direct solve of the coupled fixed-point system
    ///   L_S S + E_Q Q = F,  Q = L_Q⁻¹(0, ψ_S U', 0),
    /// whose solution S + Q is the limit of the iteration.
    pub fn monolithic(&self, f_u: &[C], f_v: &[C], branch: Branch) -> Result<ModeBundle> {
        self.check_len(f_u)?;
        self.check_len(f_v)?;
        let n = self.len();
        match branch {
            Branch::L2 => self.monolithic_l2(&[vec![re(0.0); n], f_u.to_vec(), f_v.to_vec()]),
            Branch::H1 => {
                let q = self.solve_quasi(f_u, f_v)?;
                let eq = self.apply_e_q(&q);
                let neg = |v: &[C]| v.iter().map(|x| -x).collect::<Vec<_>>();
                let y = self.monolithic_l2(&[neg(&eq[0]), neg(&eq[1]), neg(&eq[2])])?;
                Ok(q.axpy(re(1.0), &y))
            }
        }
    }

    fn monolithic_l2(&self, src: &[Vec<C>; 3]) -> Result<ModeBundle> {
        let n = self.len();
        let ia = self.ia();
        let id = SparseRows::identity(n);
        let w = SparseRows::diag(&self.co.w);
        // Q as linear maps of Ψ and of ψ_S.
        let q_from_psi = [self.rec_rho.clone(), self.d1.sub(&w.compose(&self.rec_rho)), id.scale(-ia)];
        let rs: Vec<C> = self.co.ainv.iter().zip(&self.co.up).map(|(a, u)| -self.m2 * a * u / ia).collect();
        let rho_s = SparseRows::diag(&rs);
        let q_from_s = [rho_s.clone(), w.compose(&rho_s).scale(re(-1.0)), SparseRows::zeros(n, n)];
        // E_Q blocks (rows 0..3, cols ρ,u,v) extracted from the interleaved matrix.
        let eq = split3(&self.e_q, n);
        let ls = split3(&self.l_s, n);
        let nf = 4;
        let mut m = SparseRows::zeros(nf * n, nf * n);
        for r in 0..3 {
            for k in 0..3 {
                m.add_block(&ls[r][k], nf, r, k);
            }
            let mut to_psi = SparseRows::zeros(n, n);
            let mut to_s = SparseRows::zeros(n, n);
            for k in 0..3 {
                to_psi = to_psi.add(&eq[r][k].compose(&q_from_psi[k]));
                to_s = to_s.add(&eq[r][k].compose(&q_from_s[k]));
            }
            m.add_block(&to_psi, nf, r, 3);
            m.add_block(&to_s, nf, r, 2);
        }
        m.add_block(&self.os, nf, 3, 3);
        // -Ω(ψ_S U', 0) = (iα)⁻¹ D₁ A⁻¹ U' ψ_S
        let au: Vec<C> = self.co.ainv.iter().zip(&self.co.up).map(|(a, u)| a * u).collect();
        m.add_block(&self.d1.compose(&SparseRows::diag(&au)).scale(1.0 / ia), nf, 3, 2);
        Self::stokes_closures(&mut m, &self.d1, n, nf, 0);
        Self::os_closures(&mut m, &self.lambda, &self.d1, n, nf, 3);
        let mut rhs = vec![re(0.0); nf * n];
        for k in 0..n {
            for r in 0..3 {
                rhs[k * nf + r] = src[r][k];
            }
        }
        for k in [0, n - 1] {
            rhs[k * nf + 1] = re(0.0);
            rhs[k * nf + 2] = re(0.0);
        }
        let lu = BandLu::factor(&m)?;
        let x = lu.solve(&rhs);
        let s = ModeBundle {
            rho: (0..n).map(|k| x[k * nf]).collect(),
            u: (0..n).map(|k| x[k * nf + 1]).collect(),
            v: (0..n).map(|k| x[k * nf + 2]).collect(),
        };
        let psi: Vec<C> = (0..n).map(|k| x[k * nf + 3]).collect();
        let s1: Vec<C> = s.v.iter().zip(&self.co.up).map(|(p, u)| p * u).collect();
        Ok(s.axpy(re(1.0), &self.reconstruct(&psi, &s1)))
    }

    pub fn dl(&self) -> &SparseRows {
        &self.dl
    }

    pub fn d1(&self) -> &SparseRows {
        &self.d1
    }

    pub fn sqrt_eps(&self) -> f64 {
        self.se
    }
}

fn sub(a: &[C], b: &[C]) -> Vec<C> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Split an interleaved 3-field matrix into its n×n blocks.
fn split3(m: &SparseRows, n: usize) -> [[SparseRows; 3]; 3] {
    let mut rows: [[Vec<Vec<(usize, C)>>; 3]; 3] = Default::default();
    for r in 0..3 {
        for k in 0..3 {
            rows[r][k] = vec![Vec::new(); n];
        }
    }
    for i in 0..n {
        for r in 0..3 {
            for &(j, a) in m.row(3 * i + r) {
                rows[r][j % 3][i].push((j / 3, a));
            }
        }
    }
    rows.map(|row| row.map(|b| SparseRows::from_rows(b, n)))
}

/// Exact eigenmode candidate at c: Ξ = Ξ_app - Ξ_sm - Ξ_re, F(c) = u(0).
#[derive(Clone, Debug)]
pub struct ExactMode {
    pub c: C,
    pub mode: ModeBundle,
    pub f_value: C,
    pub f_app: C,
    pub u_sm0: C,
    pub u_re0: C,
    pub sm_log: IterationLog,
    pub re_log: IterationLog,
    /// ‖ℒΞ‖/‖Ξ‖ over nodes away from the closures.
    pub closure_residual: f64,
    /// ‖ℒ_h Ξ_app - (0, E_u,sm, E_v,sm + E_v,re)‖/‖ℒ_h Ξ_app‖, the
    /// discretisation error of the analytic decomposition.
    pub decomposition_defect: f64,
    pub conditioning: Conditioning,
}

/// Build Ξ_app on the grid and remove its residual with the two iteration
/// branches. The smallness branch takes the discrete residual of Ξ_app minus
/// the regular part, so ℒ_hΞ vanishes on the grid up to solver tolerance.
pub fn assemble_exact_mode(profile: &ShearProfile, params: &FlowParams, c: C, grid: &HalfLineGrid, ctl: IterationControl) -> Result<ExactMode> {
    use crate::approx_mode::{build_approx, error_terms};
    let ctx = ResolventContext::new(grid, profile, params, c)?;
    let am = build_approx(profile, params, c, &grid.y)?;
    let et = error_terms(&am, profile, params, grid)?;
    let r = ctx.apply_l(&am.bundle);
    let n = grid.len();
    let analytic = [vec![re(0.0); n], et.eu_sm.clone(), et.ev_sm.iter().zip(&et.ev_re).map(|(a, b)| a + b).collect::<Vec<_>>()];
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..3 {
        let inner = |v: &[C]| v.iter().enumerate().map(|(j, x)| if j < 2 || j + 2 >= n { re(0.0) } else { *x }).collect::<Vec<_>>();
        num += grid.l2_sq(&inner(&sub(&r[k], &analytic[k])));
        den += grid.l2_sq(&inner(&r[k]));
    }
    let decomposition_defect = (num / den).sqrt();
    let sm_src_v: Vec<C> = sub(&r[2], &et.ev_re);
    let sm = ctx.iterate_with_density(&r[0], &r[1], &sm_src_v, Branch::L2, ctl)?;
    let rr = ctx.iterate(&vec![re(0.0); n], &et.ev_re, Branch::H1, ctl)?;
    let mode = am.bundle.axpy(re(-1.0), &sm.mode).axpy(re(-1.0), &rr.mode);
    let lx = ctx.apply_l(&mode);
    let mut rn = 0.0;
    for comp in &lx {
        let inner: Vec<C> = comp.iter().enumerate().map(|(j, x)| if j < 2 || j + 2 >= n { re(0.0) } else { *x }).collect();
        rn += grid.l2_sq(&inner);
    }
    let xn = grid.l2_sq(&mode.rho) + grid.l2_sq(&mode.u) + grid.l2_sq(&mode.v);
    Ok(ExactMode {
        c,
        f_value: mode.u[0],
        f_app: am.bundle.u[0],
        u_sm0: sm.mode.u[0],
        u_re0: rr.mode.u[0],
        mode,
        sm_log: sm.log,
        re_log: rr.log,
        closure_residual: (rn / xn).sqrt(),
        decomposition_defect,
        conditioning: ctx.conditioning,
    })
}
