use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tswave::approx_mode::{apply_l_point, FieldDerivs};
use tswave::dispersion::c0;
use tswave::grid::HalfLineGrid;
use tswave::mode::ModeBundle;
use tswave::params::FlowParams;
use tswave::profile::ShearProfile;
use tswave::resolvent::{delta_alpha_matrix, lambda_inverse, lambda_matrix, Branch, Coefficients, IterationControl, ResolventContext};

type C = Complex64;

fn setup(eps: f64, n: usize) -> (ShearProfile, FlowParams, HalfLineGrid, C) {
    let p = FlowParams::new(0.3, eps, 4.0).unwrap();
    let g = HalfLineGrid::build(p.default_ymax(), n, p.delta().norm()).unwrap();
    (ShearProfile::exponential(), p, g, c0(&p))
}

/// Smooth decaying random source with a few modes.
fn source(g: &HalfLineGrid, rng: &mut ChaCha8Rng) -> Vec<C> {
    let a: Vec<(C, f64, f64)> = (0..3)
        .map(|_| (C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), rng.gen_range(0.3..2.0), rng.gen_range(0.0..3.0)))
        .collect();
    g.y.iter().map(|&y| a.iter().map(|&(c, d, k)| c * (-d * y).exp() * C::from_polar(1.0, k * y) * y).sum()).collect()
}

fn rel(a: &ModeBundle, b: &ModeBundle, g: &HalfLineGrid) -> f64 {
    let d = a.axpy(C::new(-1.0, 0.0), b);
    let n = |m: &ModeBundle| g.l2_sq(&m.rho) + g.l2_sq(&m.u) + g.l2_sq(&m.v);
    (n(&d) / n(b)).sqrt()
}

fn max_interior(v: &[C], lo: usize, hi: usize) -> f64 {
    v[lo..hi].iter().map(|x| x.norm()).fold(0.0, f64::max)
}

#[test]
fn lambda_inverse_recovers_closed_form_at_fourth_order() {
    let prof = ShearProfile::exponential();
    let alpha = 1.0;
    let mut errs = Vec::new();
    for n in [128, 256, 512, 1024] {
        let g = HalfLineGrid::with_stretch(40.0, n, 0.0).unwrap();
        let h: Vec<C> = g.y.iter().map(|&y| C::new(-2.0 * alpha * (-alpha * y).exp(), 0.0)).collect();
        let psi = lambda_inverse(&g, &prof, 0.0, alpha, C::new(0.5, 0.1), &h).unwrap();
        let err = g.y.iter().zip(&psi).map(|(&y, p)| (p - y * (-alpha * y).exp()).norm()).fold(0.0, f64::max);
        errs.push(err);
    }
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.5, "errors {errs:?}");
    }
}

#[test]
fn lambda_is_delta_alpha_without_compressibility() {
    let g = HalfLineGrid::with_stretch(40.0, 400, 3.0).unwrap();
    let prof = ShearProfile::exponential();
    let co = Coefficients::new(&g, &prof, 0.0, C::new(0.3, 0.02)).unwrap();
    let l = lambda_matrix(&g, &co, 0.7);
    let d = delta_alpha_matrix(&g, 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x: Vec<C> = (0..g.len()).map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    let (a, b) = (l.apply(&x), d.apply(&x));
    let scale = b.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let gap = a.iter().zip(&b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
    assert!(gap <= 1e-13 * scale, "{gap:.3e} vs {scale:.3e}");
}

#[test]
fn operator_splittings_agree() {
    let (prof, p, g, c) = setup(1e-8, 1024);
    let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..4 {
        let x = ModeBundle { rho: source(&g, &mut rng), u: source(&g, &mut rng), v: source(&g, &mut rng) };
        let l = ctx.apply_l(&x);
        let (lq, eq) = (ctx.apply_l_q(&x), ctx.apply_e_q(&x));
        let (ls, es) = (ctx.apply_l_s(&x), ctx.apply_e_s(&x));
        for k in 0..3 {
            let scale = max_interior(&l[k], 0, g.len()).max(1.0);
            for j in 0..g.len() {
                assert!((lq[k][j] + eq[k][j] - l[k][j]).norm() <= 1e-12 * scale);
                assert!((ls[k][j] + es[k][j] - l[k][j]).norm() <= 1e-12 * scale);
            }
        }
    }
}

#[test]
fn discrete_operator_is_consistent_with_exact_derivatives() {
    let prof = ShearProfile::exponential();
    let p = FlowParams::new(0.3, 1e-6, 2.0).unwrap();
    let c = C::new(0.4, 0.05);
    let mut errs = Vec::new();
    for n in [512, 1024, 2048] {
        let g = HalfLineGrid::with_stretch(40.0, n, 2.0).unwrap();
        let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
        let k = C::new(-0.8, 0.6);
        let e = |y: f64| (k * y).exp();
        let x = ModeBundle {
            rho: g.y.iter().map(|&y| e(y)).collect(),
            u: g.y.iter().map(|&y| y * e(y)).collect(),
            v: g.y.iter().map(|&y| y * y * e(y)).collect(),
        };
        let l = ctx.apply_l(&x);
        let mut worst = 0.0f64;
        for (j, &y) in g.y.iter().enumerate().take(n - 2).skip(2) {
            let f = FieldDerivs {
                rho: [e(y), k * e(y)],
                u: [y * e(y), (1.0 + k * y) * e(y), (2.0 * k + k * k * y) * e(y)],
                v: [y * y * e(y), (2.0 * y + k * y * y) * e(y), (2.0 + 4.0 * k * y + k * k * y * y) * e(y)],
            };
            let want = apply_l_point(prof.derivs(y), &p, c, &f);
            for r in 0..3 {
                worst = worst.max((l[r][j] - want[r]).norm());
            }
        }
        errs.push(worst);
    }
    for w in errs.windows(2) {
        assert!((w[0] / w[1]).log2() >= 3.5, "errors {errs:?}");
    }
}

#[test]
fn quasi_compressible_solve_satisfies_its_equations() {
    let (prof, p, g, c) = setup(1e-8, 2048);
    let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (s1, s2) = (source(&g, &mut rng), source(&g, &mut rng));
    let q = ctx.solve_quasi(&s1, &s2).unwrap();
    let r = ctx.apply_l_q(&q);
    let n = g.len();
    let scale = max_interior(&s1, 0, n).max(max_interior(&s2, 0, n));
    // Continuity holds exactly; the momentum rows away from the closures.
    assert!(max_interior(&r[0], 2, n - 2) <= 1e-9 * scale, "continuity {:.3e}", max_interior(&r[0], 2, n - 2));
    let du: Vec<C> = r[1].iter().zip(&s1).map(|(a, b)| a - b).collect();
    let dv: Vec<C> = r[2].iter().zip(&s2).map(|(a, b)| a - b).collect();
    assert!(max_interior(&du, 2, n - 2) <= 1e-7 * scale);
    assert!(max_interior(&dv, 2, n - 2) <= 1e-7 * scale);
    assert!(q.v[0].norm() <= 1e-12 * scale, "v(0) = {:.3e}, scale {scale:.3e}, max v {:.3e}", q.v[0].norm(), max_interior(&q.v, 0, n));
}

#[test]
fn stokes_solve_satisfies_its_equations_and_closures() {
    let (prof, p, g, c) = setup(1e-8, 2048);
    let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let src = [source(&g, &mut rng), source(&g, &mut rng), source(&g, &mut rng)];
    let s = ctx.solve_stokes(&src[0], &src[1], &src[2]).unwrap();
    let r = ctx.apply_l_s(&s);
    let n = g.len();
    let scale = src.iter().map(|v| max_interior(v, 0, n)).fold(0.0, f64::max);
    for k in 0..3 {
        let d: Vec<C> = r[k].iter().zip(&src[k]).map(|(a, b)| a - b).collect();
        let lo = if k == 0 { 0 } else { 1 };
        assert!(max_interior(&d, lo, n - 1) <= 1e-7 * scale, "row {k}: {:.3e}", max_interior(&d, lo, n - 1));
    }
    assert!(s.v[0].norm() <= 1e-12 * scale);
    assert!(s.u[n - 1].norm() <= 1e-12 * scale && s.v[n - 1].norm() <= 1e-12 * scale);
    let du0 = ctx.d1().apply(&s.u)[0];
    assert!(du0.norm() <= 1e-9 * scale * g.ymax());
}

#[test]
fn zero_source_gives_zero() {
    let (prof, p, g, c) = setup(1e-8, 1024);
    let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
    let z = vec![C::new(0.0, 0.0); g.len()];
    for branch in [Branch::L2, Branch::H1] {
        let s = ctx.iterate(&z, &z, branch, IterationControl::default()).unwrap();
        assert!(s.mode.rho.iter().chain(&s.mode.u).chain(&s.mode.v).all(|x| x.norm() == 0.0));
    }
}

#[test]
fn omega_trivial_cases() {
    let (prof, p, g, c) = setup(1e-8, 1024);
    let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = source(&g, &mut rng);
    let z = vec![C::new(0.0, 0.0); g.len()];
    assert_eq!(ctx.omega(&z, &f), f);
    // f_u = A·g gives -(iα)⁻¹ D₁g.
    let a_times: Vec<C> = f.iter().zip(&ctx.co.ainv).map(|(x, ai)| x / ai).collect();
    let om = ctx.omega(&a_times, &z);
    let want: Vec<C> = ctx.d1().apply(&f).iter().map(|d| -d / C::new(0.0, p.alpha())).collect();
    for (a, b) in om.iter().zip(&want) {
        assert!((a - b).norm() <= 1e-10 * (1.0 + b.norm()));
    }
}

#[test]
fn iteration_contracts_fast_at_small_eps() {
    for eps in [1e-8, 1e-10] {
        let (prof, p, g, c) = setup(eps, 2048);
        let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (fu, fv) = (source(&g, &mut rng), source(&g, &mut rng));
        for branch in [Branch::L2, Branch::H1] {
            let s = ctx.iterate(&fu, &fv, branch, IterationControl::default()).unwrap();
            assert!(s.log.converged, "{:?}", s.log);
            assert!(s.log.ratios.iter().all(|&r| r < 0.5), "{:?}", s.log);
            assert!(s.residual < 1e-6, "residual {:.3e}", s.residual);
        }
    }
}

#[test]
fn iteration_matches_monolithic_solve() {
    let (prof, p, g, c) = setup(1e-9, 2048);
    let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..3 {
        let (fu, fv) = (source(&g, &mut rng), source(&g, &mut rng));
        for branch in [Branch::L2, Branch::H1] {
            let it = ctx.iterate(&fu, &fv, branch, IterationControl::default()).unwrap();
            let direct = ctx.monolithic(&fu, &fv, branch).unwrap();
            let d = rel(&it.mode, &direct, &g);
            assert!(d <= 1e-6, "{branch:?}: {d:.3e}");
        }
    }
}

#[test]
fn resolvent_rejects_mach_at_limit() {
    let prof = ShearProfile::exponential();
    let p = FlowParams::new(0.6, 1e-8, 4.0).unwrap();
    let g = HalfLineGrid::build(p.default_ymax(), 1024, p.delta().norm()).unwrap();
    assert!(ResolventContext::new(&g, &prof, &p, c0(&p)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn solution_is_linear_in_source(seed in 0u64..1000, a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let (prof, p, g, c) = setup(1e-8, 512);
        let ctx = ResolventContext::new(&g, &prof, &p, c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (f1, f2) = (source(&g, &mut rng), source(&g, &mut rng));
        let s = C::new(a, b);
        let scaled: Vec<C> = f1.iter().map(|x| s * x).collect();
        let x1 = ctx.monolithic(&f1, &f2, Branch::L2).unwrap();
        let f2s: Vec<C> = f2.iter().map(|x| s * x).collect();
        let xs = ctx.monolithic(&scaled, &f2s, Branch::L2).unwrap();
        if s.norm() > 1e-3 {
            prop_assert!(rel(&xs, &x1.scale(s), &g) < 1e-9);
        }
    }
}
