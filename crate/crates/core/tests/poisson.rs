mod common;

use std::f64::consts::PI;

use common::{field, max_diff, rel};
use nlperi::grid::{forward_transform, freq, GridVectorField};
use nlperi::marcinkiewicz::TailPolicy;
use nlperi::poisson::{
    block_a, dt_symbol, dtt_symbol, fractional_time_identity_check, g1, g1_l2_identity_check, g1_mode_coefficients, kernel_mass_check,
    omega, pbar, poisson_extend, poisson_kernel_spatial, poisson_symbol, pointwise_domination_check, Mat, RGrid, TimeGrid, DT_ENERGY_POLY,
    EXT,
};
use nlperi::random::{BandLimited, Polarization};
use num_complex::Complex;
use rand::Rng;

fn mat_dist(a: &Mat, b: &Mat) -> f64 {
    let mut m: f64 = 0.0;
    for i in 0..EXT {
        for j in 0..EXT {
            m = m.max((a[i][j] - b[i][j]).norm());
        }
    }
    m
}

fn apply(m: &Mat, v: &[Complex<f64>; EXT]) -> [Complex<f64>; EXT] {
    let mut out = [Complex::new(0.0, 0.0); EXT];
    for i in 0..EXT {
        for j in 0..EXT {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

#[test]
fn symbol_trivial_values() {
    let eye = poisson_symbol([0.0, 0.0], 0.7).unwrap();
    for xi in [[0.0, 0.0], [1.0, 0.0], [-3.0, 5.0]] {
        assert_eq!(poisson_symbol(xi, 0.0).unwrap(), eye);
    }
    let t = 0.3;
    let m = poisson_symbol([1.0, 0.0], t).unwrap();
    let (a, e) = (2.0 * PI * t, (-2.0 * PI * t).exp());
    assert!((m[0][0].re - e * (1.0 - a)).abs() < 1e-15);
    assert!((m[1][1].re - e).abs() < 1e-15);
    assert!((m[2][2].re - e * (1.0 + a)).abs() < 1e-15);
    assert!((m[0][2].im + e * a).abs() < 1e-15 && (m[2][0].im + e * a).abs() < 1e-15);
    assert!(poisson_symbol([1.0, 1.0], 40.0).unwrap().iter().flatten().all(|z| z.norm() < 1e-100));
    assert!(poisson_symbol([1.0, 0.0], -1.0).is_err());
}

#[test]
fn symbol_entries_bounded() {
    let mut rng = nlperi::random::rng(3);
    for _ in 0..1000 {
        let xi = [rng.gen_range(-20.0..20.0f64).round(), rng.gen_range(-20.0..20.0f64).round()];
        let t = rng.gen_range(0.0..2.0);
        let a = 2.0 * PI * xi[0].hypot(xi[1]) * t;
        let bound = 2.0 * (1.0 + a) * (-a).exp();
        for z in poisson_symbol(xi, t).unwrap().iter().flatten() {
            assert!(z.norm() <= bound + 1e-15);
        }
    }
}

#[test]
fn transverse_modes_see_the_scalar_kernel() {
    let mut rng = nlperi::random::rng(4);
    for _ in 0..200 {
        let xi = [rng.gen_range(-9..=9) as f64, rng.gen_range(-9..=9) as f64];
        if xi == [0.0, 0.0] {
            continue;
        }
        let t = rng.gen_range(0.0..1.0);
        let c = Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let v = [c * -xi[1], c * xi[0], Complex::new(0.0, 0.0)];
        let out = apply(&poisson_symbol(xi, t).unwrap(), &v);
        let e = (-2.0 * PI * xi[0].hypot(xi[1]) * t).exp();
        for k in 0..2 {
            assert!((out[k] - v[k] * e).norm() < 1e-12);
        }
        assert!(out[2].norm() < 1e-12);
    }
}

#[test]
fn spatial_kernel_basics() {
    let t = 0.4;
    let m = poisson_kernel_spatial([0.0, 0.0], t).unwrap();
    let c = 6.0 / omega(2);
    assert!((omega(2) - 4.0 * PI).abs() < 1e-13);
    for i in 0..EXT {
        for j in 0..EXT {
            let want = if i == 2 && j == 2 { c / (t * t) } else { 0.0 };
            assert!((m[i][j] - want).abs() < 1e-14 * c / (t * t));
        }
    }
    let mut rng = nlperi::random::rng(5);
    for _ in 0..200 {
        let x = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let m = poisson_kernel_spatial(x, rng.gen_range(0.01..2.0)).unwrap();
        let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let mut q = 0.0;
        for i in 0..EXT {
            for j in 0..EXT {
                assert_eq!(m[i][j], m[j][i]);
                q += z[i] * m[i][j] * z[j];
            }
        }
        assert!(q >= -1e-12);
    }
    assert!(poisson_kernel_spatial([1.0, 0.0], 0.0).is_err());
}

/// ∫ ℙ_t(x) e^{−2πiξ·x} dx by the midpoint rule on a box.
fn box_transform(xi: [f64; 2], t: f64, radius: f64, h: f64) -> [[Complex<f64>; EXT]; EXT] {
    let m = (2.0 * radius / h).round() as usize;
    let mut acc = [[Complex::new(0.0, 0.0); EXT]; EXT];
    for i in 0..m {
        let x0 = -radius + (i as f64 + 0.5) * h;
        for j in 0..m {
            let x1 = -radius + (j as f64 + 0.5) * h;
            let k = poisson_kernel_spatial([x0, x1], t).unwrap();
            let ph = Complex::from_polar(h * h, -2.0 * PI * (xi[0] * x0 + xi[1] * x1));
            for r in 0..EXT {
                for c in 0..EXT {
                    acc[r][c] += ph * k[r][c];
                }
            }
        }
    }
    acc
}

#[test]
fn spatial_kernel_transforms_to_the_symbol() {
    for (xi, t) in [([1.0, 0.0], 0.2), ([1.0, 1.0], 0.15), ([0.0, 2.0], 0.1)] {
        let num = box_transform(xi, t, 16.0, 0.01);
        let sym = poisson_symbol(xi, t).unwrap();
        assert!(mat_dist(&num, &sym) < 1e-3, "ξ = {xi:?}: {}", mat_dist(&num, &sym));
    }
}

#[test]
fn kernel_has_unit_mass() {
    let r = kernel_mass_check(0.1, 5.0).unwrap();
    assert!(r.deviation < 1e-3, "{}", r.deviation);
    assert!(r.offdiag < 1e-12);
    let r2 = kernel_mass_check(0.37, 50.0 * 0.37).unwrap();
    assert!((r.deviation - r2.deviation).abs() < 1e-9);
    assert!(kernel_mass_check(0.0, 1.0).is_err());
}

#[test]
fn pbar_identity() {
    let mut rng = nlperi::random::rng(6);
    for _ in 0..1000 {
        let x = [rng.gen_range(-3.0..3.0f64), rng.gen_range(-3.0..3.0f64)];
        let t = rng.gen_range(0.01..3.0);
        let z = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let m = poisson_kernel_spatial(x, t).unwrap();
        let p = pbar(x, t).unwrap();
        let r = x[0].hypot(x[1]);
        let zx = (z[0] * x[0] + z[1] * x[1]) / r;
        for i in 0..EXT {
            let lhs = m[i][0] * z[0] + m[i][1] * z[1];
            assert!((lhs - p[i] * zx).abs() < 1e-12 * (1.0 + lhs.abs()));
        }
        let perp = [-x[1], x[0]];
        let lhs: Vec<f64> = (0..EXT).map(|i| m[i][0] * perp[0] + m[i][1] * perp[1]).collect();
        assert!(lhs.iter().all(|v| v.abs() < 1e-12 * (1.0 + m[2][2].abs())));
    }
    // |P̄| ~ |x|^{−3}
    let (a, b) = (pbar([100.0, 0.0], 1.0).unwrap(), pbar([200.0, 0.0], 1.0).unwrap());
    assert!((a[0] / b[0] - 8.0).abs() < 1e-2);
}

#[test]
fn extension_limits() {
    let f = field(16, 4, 7).add(&GridVectorField::from_fn(16, 2, |c, _, _| 0.5 - c as f64));
    let u0 = poisson_extend(&f, 0.0).unwrap();
    for i in 0..16 * 16 {
        for c in 0..2 {
            assert!((u0.component(c)[i] - f.component(c)[i]).abs() < 1e-14);
        }
        assert!(u0.component(2)[i].abs() < 1e-14);
    }
    let u = poisson_extend(&f, 30.0).unwrap();
    for i in 0..16 * 16 {
        assert!((u.component(0)[i] - 0.5).abs() < 1e-12 && (u.component(1)[i] + 0.5).abs() < 1e-12);
        assert!(u.component(2)[i].abs() < 1e-12);
    }
}

#[test]
fn extension_last_component_of_cosine() {
    // f̂(±e₁) = ½e₁; the off-diagonal −iξ̂ block sends it to −i(±1)·½·2πt e^{−2πt}, i.e. 2πt e^{−2πt} sin(2πx₁)
    let t = 0.25;
    let f = GridVectorField::<f64>::from_point_fn(16, 2, |c, x| if c == 0 { (2.0 * PI * x[0]).cos() } else { 0.0 });
    let u = poisson_extend(&f, t).unwrap();
    let a = 2.0 * PI * t;
    let want = GridVectorField::<f64>::from_point_fn(16, 3, |c, x| match c {
        0 => (1.0 - a) * (-a).exp() * (2.0 * PI * x[0]).cos(),
        1 => 0.0,
        _ => a * (-a).exp() * (2.0 * PI * x[0]).sin(),
    });
    assert!(max_diff(&u, &want) < 1e-14);
}

fn fd1(xi: [f64; 2], t: f64, h: f64) -> Mat {
    let p = |dt: f64| poisson_symbol(xi, t + dt).unwrap();
    let (a, b, c, d) = (p(-2.0 * h), p(-h), p(h), p(2.0 * h));
    let mut m = [[Complex::new(0.0, 0.0); EXT]; EXT];
    for i in 0..EXT {
        for j in 0..EXT {
            m[i][j] = (a[i][j] - b[i][j] * 8.0 + c[i][j] * 8.0 - d[i][j]) / (12.0 * h);
        }
    }
    m
}

fn fd2(xi: [f64; 2], t: f64, h: f64) -> Mat {
    let p = |dt: f64| poisson_symbol(xi, t + dt).unwrap();
    let (a, b, o, c, d) = (p(-2.0 * h), p(-h), p(0.0), p(h), p(2.0 * h));
    let mut m = [[Complex::new(0.0, 0.0); EXT]; EXT];
    for i in 0..EXT {
        for j in 0..EXT {
            m[i][j] = (-a[i][j] + b[i][j] * 16.0 - o[i][j] * 30.0 + c[i][j] * 16.0 - d[i][j]) / (12.0 * h * h);
        }
    }
    m
}

#[test]
fn derivatives_match_finite_differences() {
    let mut rng = nlperi::random::rng(8);
    for _ in 0..200 {
        let xi = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
        let t = rng.gen_range(0.05..1.5);
        let a = 2.0 * PI * f64::hypot(xi[0], xi[1]);
        let d1 = dt_symbol(xi, t).unwrap();
        let d2 = dtt_symbol(xi, t).unwrap();
        assert!(mat_dist(&d1, &fd1(xi, t, 1e-4)) < 1e-8 * (1.0 + a), "{}", mat_dist(&d1, &fd1(xi, t, 1e-4)));
        assert!(mat_dist(&d2, &fd2(xi, t, 1e-3)) < 1e-8 * (1.0 + a * a), "{}", mat_dist(&d2, &fd2(xi, t, 1e-3)));
    }
    let zero = [[Complex::new(0.0, 0.0); EXT]; EXT];
    assert_eq!(dt_symbol([0.0, 0.0], 0.3).unwrap(), zero);
    assert_eq!(dtt_symbol([0.0, 0.0], 0.3).unwrap(), zero);
}

#[test]
fn dt_energy_expansion() {
    let mut rng = nlperi::random::rng(9);
    let mut printed_gap: f64 = 0.0;
    for _ in 0..300 {
        let xi = [rng.gen_range(-5..=5) as f64, rng.gen_range(-5..=5) as f64];
        let r = xi[0].hypot(xi[1]);
        if r == 0.0 {
            continue;
        }
        let t = rng.gen_range(0.0..0.5);
        let v = [
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Complex::new(0.0, 0.0),
        ];
        let du = apply(&dt_symbol(xi, t).unwrap(), &v);
        let lhs: f64 = du.iter().map(|z| z.norm_sqr()).sum();
        let a = 2.0 * PI * r;
        let e2 = v[0].norm_sqr() + v[1].norm_sqr();
        let w2 = ((v[0] * xi[0] + v[1] * xi[1]) / r).norm_sqr();
        let pre = a * a * (-2.0 * a * t).exp();
        let [p0, p1, p2] = DT_ENERGY_POLY;
        let poly = p0 + p1 * a * t + p2 * (a * t).powi(2);
        assert!((lhs - pre * (e2 + poly * w2)).abs() < 1e-10 * (1.0 + lhs));
        let printed = 4.0 - 4.0 * PI * r * t + 8.0 * PI * PI * r * r * t * t;
        printed_gap = printed_gap.max((lhs - pre * (e2 + printed * w2)).abs() / (1.0 + lhs));
    }
    // the printed polynomial 4 − 4π|ξ|t + 8π²|ξ|²t² does not reproduce |∂_tÛ|²
    assert!(printed_gap > 1e-2);
}

#[test]
fn mode_coefficients_from_moments() {
    // ∫₀^∞ t·a²e^{−2at}(1 + p(at)) dt per closed-form Gamma integrals
    let moment = |k: i32| -> f64 { (1..=k).map(|j| j as f64).product::<f64>() / 2f64.powi(k + 1) };
    let cf = moment(1);
    let [p0, p1, p2] = DT_ENERGY_POLY;
    let cw = p0 * moment(1) + p1 * moment(2) + p2 * moment(3);
    let (c_f, c_w) = g1_mode_coefficients();
    assert!((c_f - cf).abs() < 1e-15 && (c_w - cw).abs() < 1e-15);
    assert!((c_f - 0.25).abs() < 1e-15 && (c_w - 0.25).abs() < 1e-15);
}

#[test]
fn g1_trivial_values() {
    let tg = TimeGrid::default();
    assert!(g1(&GridVectorField::<f64>::zeros(16, 2), &tg).unwrap().max() == 0.0);
    let f = field(16, 4, 10);
    let g = g1(&f, &tg).unwrap();
    let g2 = g1(&f.scale(-3.0), &tg).unwrap();
    for (a, b) in g.values().iter().zip(g2.values()) {
        assert!((3.0 * a - b).abs() < 1e-12 * (1.0 + b));
    }
    let nodes = &tg.nodes;
    assert!(nodes.windows(2).all(|w| w[0] < w[1]) && tg.weights.iter().all(|w| *w > 0.0) && tg.tail_bound.is_finite());
}

#[test]
fn g1_quadrature_matches_per_mode_value() {
    let tg = TimeGrid::default();
    for seed in 0..5 {
        let f = field(32, 6, 20 + seed).remove_mean();
        let r = g1_l2_identity_check(&f, &tg).unwrap();
        assert!(rel(r.lhs, r.analytic_per_mode) < 1e-3, "{r:?}");
        assert!((r.analytic_per_mode - r.quadratic_form).abs() < 1e-12 * r.quadratic_form);
        assert!(r.tail_budget < 1e-3 * r.lhs);
    }
}

#[test]
fn longitudinal_mode_rhs() {
    let f = BandLimited::new(3).polarization(Polarization::CurlFree).sample::<f64>(16, 2).unwrap();
    let spec = forward_transform(&f);
    let energy: f64 = (0..16)
        .flat_map(|k1| (0..16).map(move |k2| (k1, k2)))
        .filter(|&(k1, k2)| freq(16, k1) != 0 || freq(16, k2) != 0)
        .map(|(k1, k2)| (0..2).map(|c| spec.coeffs()[spec.flat_index(c, k1, k2)].norm_sqr()).sum::<f64>())
        .sum();
    let r = g1_l2_identity_check(&f, &TimeGrid::default()).unwrap();
    assert!(rel(r.rhs, energy) < 1e-12);
}

#[test]
fn fractional_time_identity() {
    let grid = RGrid::default();
    for s in [0.25, 0.5, 0.75] {
        let f = field(16, 3, 30).remove_mean();
        let r = fractional_time_identity_check(&f, s, 0.3, &grid).unwrap();
        assert!(r.modes > 0);
        assert!(r.max_deviation_transverse < 1e-6, "s = {s}: {r:?}");
        // what is left over is the longitudinal defect a·s·e^{−at}𝔸f̂
        assert!(rel(r.max_deviation, r.predicted_defect) < 1e-4, "s = {s}: {r:?}");
    }
    let div_free = BandLimited::new(3).polarization(Polarization::DivFree).sample::<f64>(16, 31).unwrap();
    let r = fractional_time_identity_check(&div_free, 0.5, 0.3, &grid).unwrap();
    assert!(r.max_deviation < 1e-6);
}

#[test]
fn fractional_quadrature_refines() {
    let f = BandLimited::new(2).polarization(Polarization::DivFree).sample::<f64>(8, 32).unwrap();
    let coarse = fractional_time_identity_check(&f, 0.5, 0.3, &RGrid::with_nodes(24)).unwrap().max_deviation;
    let fine = fractional_time_identity_check(&f, 0.5, 0.3, &RGrid::with_nodes(48)).unwrap().max_deviation;
    assert!(fine <= 0.5 * coarse || fine < 1e-12, "{coarse} → {fine}");
}

#[test]
fn domination_ratio() {
    let tail = TailPolicy::default();
    let tg = TimeGrid::default();
    for seed in 0..3 {
        let f = field(16, 4, 40 + seed).remove_mean();
        let r = pointwise_domination_check(&f, 0.5, &tg, &tail).unwrap();
        assert!(r.max_ratio.is_finite() && r.max_ratio > 0.0);
        assert!(r.ratios.values().iter().all(|v| v.is_finite()));
    }
    let z = pointwise_domination_check(&GridVectorField::<f64>::zeros(8, 2), 0.5, &tg, &tail).unwrap();
    assert_eq!(z.max_ratio, 0.0);
    assert_eq!(z.excluded, 64);
}

#[test]
fn approximation_to_identity() {
    // monotone once 2π|ξ|t < 1 on the support of f̂; at larger t the at·𝔸 term overshoots
    let f = field(16, 5, 50);
    let ext = GridVectorField::from_components(&[f.component_field(0), f.component_field(1), nlperi::grid::ScalarGridField::from_fn(16, |_, _| 0.0)]).unwrap();
    let mut prev = f64::INFINITY;
    for t in [0.02, 0.01, 0.005, 0.001, 1e-4] {
        let d = poisson_extend(&f, t).unwrap().sub(&ext).l2_norm();
        assert!(d < prev, "t = {t}: {d} vs {prev}");
        prev = d;
    }
    assert!(prev < 0.1 * f.l2_norm());
    let _ = block_a([1.0, 0.0]);
}
