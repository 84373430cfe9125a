use num_complex::Complex64;
use proptest::prelude::*;
use tswave::approx_mode::f_app;
use tswave::dispersion::{c0, eps_grid, f_ref, find_zero, solve_point, winding, DiskD0, MIN_SAMPLES, ROOT_TOL};
use tswave::params::FlowParams;
use tswave::profile::ShearProfile;
use tswave::{Result, TsError};

type C = Complex64;

fn params(eps: f64, k: f64) -> FlowParams {
    FlowParams::new(0.3, eps, k).unwrap()
}

#[test]
fn reference_modulus_on_boundary_is_k_power() {
    for &(eps, k, m) in &[(1e-8, 4.0, 0.3), (1e-10, 8.0, 0.1), (1e-7, 16.0, 0.5)] {
        let p = FlowParams::new(m, eps, k).unwrap();
        let d = DiskD0::new(&p);
        let want = k.powf(-p.theta);
        for c in d.boundary(37, 0.3) {
            let got = f_ref(c, &p).norm();
            assert!((got - want).abs() < 1e-12 * want, "{got} vs {want}");
        }
    }
}

#[test]
fn reference_is_affine() {
    let p = params(1e-9, 6.0);
    let (a, h) = (C::new(0.11, 0.02), C::new(0.003, -0.001));
    let second = f_ref(a + h, &p) - 2.0 * f_ref(a, &p) + f_ref(a - h, &p);
    assert!(second.norm() < 1e-12 * f_ref(a, &p).norm().max(1.0));
}

#[test]
fn reference_winds_once_and_shifted_disk_not_at_all() {
    let p = params(1e-8, 4.0);
    let d = DiskD0::new(&p);
    let f = |c: C| -> Result<C> { Ok(f_ref(c, &p)) };
    assert_eq!(winding(&f, &d, MIN_SAMPLES, 0.0).unwrap().winding, 1);
    let away = DiskD0 { center: d.center + 3.0 * d.radius, radius: d.radius };
    assert_eq!(winding(&f, &away, MIN_SAMPLES, 0.0).unwrap().winding, 0);
}

#[test]
fn double_zero_winds_twice() {
    let p = params(1e-8, 4.0);
    let d = DiskD0::new(&p);
    let z = d.center + 0.2 * d.radius;
    let f = |c: C| -> Result<C> { Ok((c - z) * (c - z)) };
    assert_eq!(winding(&f, &d, MIN_SAMPLES, 0.0).unwrap().winding, 2);
}

#[test]
fn zero_on_contour_is_reported() {
    let p = params(1e-8, 4.0);
    let d = DiskD0::new(&p);
    let z = d.point(0.0);
    let f = |c: C| -> Result<C> { Ok(c - z) };
    assert!(matches!(winding(&f, &d, MIN_SAMPLES, 0.0), Err(TsError::ZeroOnContour(_))));
}

#[test]
fn newton_on_reference_is_immediate() {
    let p = params(1e-8, 8.0);
    let d = DiskD0::new(&p);
    let f = |c: C| -> Result<C> { Ok(f_ref(c, &p)) };
    let r = find_zero(&f, d.point(1.0) * 0.99 + d.center * 0.01, &d, 1e-13).unwrap();
    assert!(r.iterations <= 2, "{r:?}");
    assert!((r.root - c0(&p)).norm() < 1e-10 * d.radius);
}

#[test]
fn dispersion_function_is_analytic() {
    let prof = ShearProfile::exponential();
    let p = params(1e-8, 4.0);
    let c = c0(&p);
    let h = 1e-5 * DiskD0::new(&p).radius;
    let fx = (f_app(&prof, &p, c + h).unwrap() - f_app(&prof, &p, c - h).unwrap()) / (2.0 * h);
    let ih = C::new(0.0, h);
    let fy = (f_app(&prof, &p, c + ih).unwrap() - f_app(&prof, &p, c - ih).unwrap()) / (2.0 * h);
    // Cauchy-Riemann: ∂_y F = i ∂_x F
    let gap = (fy - C::i() * fx).norm();
    assert!(gap < 1e-5 * fx.norm(), "CR defect {gap:.3e} vs |F'| {:.3e}", fx.norm());
}

#[test]
fn small_eps_grid_has_thirteen_points() {
    let g = eps_grid(1e-10, 1e-7, 4);
    assert_eq!(g.len(), 13);
    assert!((g[0] - 1e-10).abs() < 1e-24 && (g[12] - 1e-7).abs() < 1e-21);
}

#[test]
fn asymptotic_regime_has_unique_root_in_disk() {
    // Far below the practical range the approximate dispersion function does
    // approach the reference one and Rouché applies.
    let prof = ShearProfile::exponential();
    let p = params(1e-28, 4.0);
    let rec = solve_point(&prof, &p);
    assert_eq!(rec.winding, 1, "{rec:?}");
    assert!(rec.rouche_gap_ratio < 1.0, "{rec:?}");
    let c = rec.c_found().expect("root");
    assert!(DiskD0::new(&p).contains(c));
    assert!(rec.residual_at_root <= ROOT_TOL);
    assert!(c.im > 0.0);
    assert!(!rec.flagged);
}

#[test]
fn flag_means_no_root_in_disk_or_wrong_winding() {
    let prof = ShearProfile::exponential();
    for &(eps, k) in &[(1e-8, 4.0), (1e-28, 4.0)] {
        let p = params(eps, k);
        let rec = solve_point(&prof, &p);
        let inside = rec.c_found().is_some_and(|c| DiskD0::new(&p).contains(c));
        assert_eq!(rec.flagged, rec.winding != 1 || !inside, "{rec:?}");
        if rec.flagged {
            assert!(!rec.note.is_empty());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn winding_ignores_start_phase(phase in 0.0..6.28f64, le in -10.0..-7.0f64) {
        let prof = ShearProfile::exponential();
        let p = params(10f64.powf(le), 4.0);
        let d = DiskD0::new(&p);
        let f = |c: C| f_app(&prof, &p, c);
        let a = winding(&f, &d, MIN_SAMPLES, 0.0).unwrap();
        let b = winding(&f, &d, MIN_SAMPLES, phase).unwrap();
        prop_assert_eq!(a.winding, b.winding);
    }

    #[test]
    fn reference_root_found_from_anywhere_in_disk(r in 0.0..0.95f64, t in 0.0..6.28f64) {
        let p = params(1e-9, 6.0);
        let d = DiskD0::new(&p);
        let f = |c: C| -> Result<C> { Ok(f_ref(c, &p)) };
        let start = d.center + C::from_polar(r * d.radius, t);
        let rep = find_zero(&f, start, &d, 1e-13).unwrap();
        prop_assert!(rep.inside_disk);
        prop_assert!((rep.root - d.center).norm() < 1e-9 * d.radius);
    }
}
