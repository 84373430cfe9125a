use num_complex::Complex64;
use tswave::airy::{airy_ratio, airy_scaled, primitives_by_ray_quadrature, AiryMethod, Scaled};

fn rows(name: &str) -> Vec<Vec<f64>> {
    let path = format!("{}/tests/data/{}", env!("CARGO_MANIFEST_DIR"), name);
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|t| t.trim().parse::<f64>().unwrap()).collect())
        .collect()
}

fn rel(a: Scaled, b: Complex64) -> f64 {
    let a = a.to_c64().unwrap();
    (a - b).norm() / b.norm().max(1e-300)
}

#[test]
fn fan_against_reference_table() {
    let mut worst = [0.0f64; 3];
    for r in rows("airy_fan.csv") {
        let z = Complex64::new(r[0], r[1]);
        let s = airy_scaled(z).unwrap();
        let refs = [
            Complex64::new(r[2], r[3]),
            Complex64::new(r[4], r[5]),
            Complex64::new(r[6], r[7]),
            Complex64::new(r[8], r[9]),
        ];
        let errs: [f64; 4] = [rel(s.ai, refs[0]), rel(s.ai_prime, refs[1]), rel(s.ai1, refs[2]), rel(s.ai2, refs[3])];
        let e = errs.iter().cloned().fold(0.0, f64::max);
        let k = match s.method {
            AiryMethod::Series => 0,
            AiryMethod::Asymptotic => 1,
            AiryMethod::Quadrature => 2,
        };
        if e > 1e-12 {
            eprintln!("z = {z:.4} method {:?} errs {errs:?}", s.method);
        }
        worst[k] = worst[k].max(e);
    }
    eprintln!("worst relative error series/asymptotic/quadrature: {worst:?}");
    assert!(worst.iter().all(|&w| w < 1e-12));
}

#[test]
fn ratio_against_reference_table() {
    for r in rows("airy_ratio.csv") {
        let z = Complex64::new(r[0], r[1]);
        let want = Complex64::new(r[2], r[3]);
        let got = airy_ratio(z).unwrap();
        assert!((got - want).norm() / want.norm() < 1e-11, "z = {z}: {got} vs {want}");
    }
}

#[test]
fn ray_quadrature_agrees_with_evaluator() {
    for &(rad, th) in &[(0.8, 0.3), (3.0, -2.0), (8.0, 1.9), (10.0, -2.5), (12.0, 2.9), (20.0, -2.6)] {
        let z = Complex64::from_polar(rad, th);
        let s = airy_scaled(z).unwrap();
        let (i1, i2) = primitives_by_ray_quadrature(z).unwrap();
        let d1 = i1.div(s.ai1).m * i1.div(s.ai1).e.exp() - 1.0;
        let d2 = i2.div(s.ai2).m * i2.div(s.ai2).e.exp() - 1.0;
        assert!(d1.norm() < 1e-10 && d2.norm() < 1e-10, "z = {z}: {d1} {d2}");
    }
}

#[test]
fn series_and_expansion_overlap() {
    for k in 0..48 {
        let th = -std::f64::consts::PI + (k as f64 + 0.5) * std::f64::consts::PI / 24.0;
        for &rad in &[9.5, 10.0] {
            let z = Complex64::from_polar(rad, th);
            let a = tswave::airy::airy_series(z);
            let b = tswave::airy::airy_far(z);
            let bv = [b.ai, b.ai_prime, b.ai1, b.ai2].map(|v| v.to_c64().unwrap());
            for j in 0..4 {
                let e = (a[j] - bv[j]).norm() / bv[j].norm();
                assert!(e < 1e-10, "z = {z}, component {j}: {e:e}");
            }
        }
    }
}
