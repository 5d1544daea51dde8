mod common;

use std::f64::consts::PI;

use common::{field, rel, rough};
use nlperi::grid::{lp_norm, GridVectorField};
use nlperi::kernels::{centered_gradient, near_diagonal_correction_q};
use nlperi::marcinkiewicz::{
    d_s, korn_constant_q2, marcinkiewicz_pair, sobolev_seminorm, upsilon_s, w_seminorm_spectral, x_seminorm, x_seminorm_spectral, TailPolicy,
};
use nlperi::random::helmholtz_mix;
use nlperi::special::{image_window, LatticeConstants};

// ∫_0^∞ (1 − window) r^{−1−β} dr by a composite midpoint rule on [R/2, R].
fn tail_moment(beta: f64, r_max: f64) -> f64 {
    let m = 200_000;
    let h = r_max / 2.0 / m as f64;
    let inner: f64 = (0..m)
        .map(|k| {
            let r = r_max / 2.0 + (k as f64 + 0.5) * h;
            (1.0 - image_window(r, r_max)) * r.powf(-1.0 - beta) * h
        })
        .sum();
    inner + r_max.powf(-beta) / beta
}

// Σ_y Σ_images of the windowed integrand plus the far-field mean, for one point.
fn point_oracle(u: &GridVectorField<f64>, s: f64, i: usize, j: usize, r_max: f64, q: f64, projected: bool) -> f64 {
    let n = u.n();
    let beta = s * q;
    let far_t = tail_moment(beta, r_max);
    // ∫_{S¹} |ω₁|^q dω
    let ang: f64 = (0..4096).map(|k| (2.0 * PI * (k as f64 + 0.5) / 4096.0).cos().abs().powf(q)).sum::<f64>() * 2.0 * PI / 4096.0;
    let reach = r_max as i64 + 1;
    let mut acc = 0.0;
    for k in 0..n {
        for l in 0..n {
            if (k, l) == (i, j) {
                continue;
            }
            let d = [u.at(0, i, j) - u.at(0, k, l), u.at(1, i, j) - u.at(1, k, l)];
            let z = [(i as f64 - k as f64) / n as f64, (j as f64 - l as f64) / n as f64];
            for m1 in -reach..=reach {
                for m2 in -reach..=reach {
                    let w = [z[0] + m1 as f64, z[1] + m2 as f64];
                    let r = w[0].hypot(w[1]);
                    if r >= r_max {
                        continue;
                    }
                    let v = if projected { ((d[0] * w[0] + d[1] * w[1]) / r).abs() } else { d[0].hypot(d[1]) };
                    acc += image_window(r, r_max) * v.powf(q) * r.powf(-2.0 - beta);
                }
            }
            acc += d[0].hypot(d[1]).powf(q) * if projected { ang * far_t } else { 2.0 * PI * far_t };
        }
    }
    acc / (n * n) as f64
}

// −Z[(ωᵀGω)²] from Z[ω₁⁴] = Z[ω₂⁴] = Z4 and Z[ω₁²ω₂²] = (Z0 − 2Z4)/2; odd moments vanish.
fn lattice_projected(lat: &LatticeConstants, g: &[[f64; 2]; 2]) -> f64 {
    let (a, b, c) = (g[0][0], g[0][1] + g[1][0], g[1][1]);
    let mixed = (lat.z0 - 2.0 * lat.z4) / 2.0;
    -(lat.z4 * (a * a + c * c) + mixed * (b * b + 2.0 * a * c))
}

#[test]
fn pointwise_values_match_brute_force() {
    let s = 0.4;
    let u = rough(16, 2, 21);
    let (d, up) = marcinkiewicz_pair(&u, s, &TailPolicy::default()).unwrap();
    let lat = LatticeConstants::new(s);
    let kappa = (1.0f64 / 16.0).powf(2.0 - 2.0 * s);
    for (i, j) in [(0, 0), (3, 11), (15, 7)] {
        let g = centered_gradient(&u, i, j);
        let frob: f64 = g.iter().flatten().map(|v| v * v).sum();
        // −Z[|Gω|²] = −(Z0/2)‖G‖²
        let want_u = point_oracle(&u, s, i, j, 4.0, 2.0, false) - kappa * 0.5 * lat.z0 * frob;
        let want_d = point_oracle(&u, s, i, j, 4.0, 2.0, true) + kappa * lattice_projected(&lat, &g);
        assert!(rel(up.at(i, j).powi(2), want_u) < 1e-10, "{} vs {want_u}", up.at(i, j).powi(2));
        assert!(rel(d.at(i, j).powi(2), want_d) < 1e-10, "{} vs {want_d}", d.at(i, j).powi(2));
    }
}

fn seminorm_oracle(u: &GridVectorField<f64>, s: f64, q: f64, projected: bool) -> f64 {
    let n = u.n();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += point_oracle(u, s, i, j, 4.0, q, projected);
            total += near_diagonal_correction_q(&centered_gradient(u, i, j), 1.0 / n as f64, s, q, projected).unwrap();
        }
    }
    (total / (n * n) as f64).powf(1.0 / q)
}

#[test]
fn q3_seminorms_match_brute_force() {
    let u = rough(8, 2, 4);
    let tail = TailPolicy::default();
    for projected in [false, true] {
        let want = seminorm_oracle(&u, 0.3, 3.0, projected);
        let got = if projected { x_seminorm(&u, 0.3, 3.0, &tail) } else { sobolev_seminorm(&u, 0.3, 3.0, &tail) }.unwrap();
        assert!(rel(got, want) < 1e-10, "{got} vs {want}");
    }
}

#[test]
fn q2_seminorms_regroup_the_pointwise_fields() {
    let u = field(16, 5, 3);
    let tail = TailPolicy::default();
    let s = 0.6;
    assert!(rel(x_seminorm(&u, s, 2.0, &tail).unwrap(), lp_norm(&d_s(&u, s, &tail).unwrap(), 2.0).unwrap()) < 1e-12);
    assert!(rel(sobolev_seminorm(&u, s, 2.0, &tail).unwrap(), lp_norm(&upsilon_s(&u, s, &tail).unwrap(), 2.0).unwrap()) < 1e-12);
}

#[test]
fn single_mode_seminorm_matches_spectral() {
    let s = 0.5;
    let u = GridVectorField::from_point_fn(64, 2, |c, x| if c == 0 { (2.0 * PI * x[0]).cos() } else { 0.5 * (2.0 * PI * x[1]).sin() });
    let tail = TailPolicy::default();
    let quad = sobolev_seminorm(&u, s, 2.0, &tail).unwrap();
    assert!(rel(quad, w_seminorm_spectral(&u, s).unwrap()) < 1e-2);
    let xq = x_seminorm(&u, s, 2.0, &tail).unwrap();
    assert!(rel(xq, x_seminorm_spectral(&u, s).unwrap()) < 1e-2);
}

#[test]
fn constants_vanish_and_symmetry_is_kept() {
    let tail = TailPolicy::default();
    let c = GridVectorField::from_fn(8, 2, |k, _, _| 2.0f64 - k as f64);
    let (d, up) = marcinkiewicz_pair(&c, 0.5, &tail).unwrap();
    assert_eq!(d.max(), 0.0);
    assert_eq!(up.max(), 0.0);
    assert_eq!(sobolev_seminorm(&c, 0.5, 3.0, &tail).unwrap(), 0.0);
    let mode = GridVectorField::<f64>::from_point_fn(16, 2, |c, x| if c == 0 { (2.0 * PI * x[0]).cos() } else { 0.0 });
    let up = upsilon_s(&mode, 0.5, &tail).unwrap();
    for i in 0..16 {
        for j in 1..16 {
            assert!((up.at(i, j) - up.at(i, 0)).abs() < 1e-12);
        }
    }
}

#[test]
fn domination_scaling_and_translation_are_exact() {
    let tail = TailPolicy::default();
    for seed in 0..5 {
        let u = rough(16, 2, 50 + seed);
        let (d, up) = marcinkiewicz_pair(&u, 0.3, &tail).unwrap();
        for (a, b) in d.values().iter().zip(up.values()) {
            assert!(a <= b);
        }
        let scaled = d_s(&u.scale(-2.0), 0.3, &tail).unwrap();
        for (a, b) in scaled.values().iter().zip(d.values()) {
            assert_eq!(*a, 2.0 * b);
        }
        let shifted = d_s(&u.shifted(1, 0), 0.3, &tail).unwrap();
        assert_eq!(shifted, d.shifted(1, 0));
        let shifted = upsilon_s(&u.shifted(0, 5), 0.3, &tail).unwrap();
        assert_eq!(shifted, up.shifted(0, 5));
    }
}

#[test]
fn rigid_rotation_has_small_projected_differences() {
    // u = (−y₂, y₁) on |y| < 0.3 around the centre, smoothly cut off before the seam
    let n = 32;
    let u = GridVectorField::<f64>::from_point_fn(n, 2, |c, x| {
        let y = [x[0] - 0.5, x[1] - 0.5];
        let cut = image_window(y[0].hypot(y[1]), 0.5);
        if c == 0 { -y[1] * cut } else { y[0] * cut }
    });
    // at larger s the periodic images weigh less against the near field
    let (d, up) = marcinkiewicz_pair(&u, 0.8, &TailPolicy::default()).unwrap();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let y = [i as f64 / n as f64 - 0.5, j as f64 / n as f64 - 0.5];
            if y[0].hypot(y[1]) < 0.05 {
                worst = worst.max(d.at(i, j) / up.at(i, j));
            }
        }
    }
    assert!(worst < 0.2, "{worst}");
}

#[test]
fn korn_q2_bounds_on_random_fields() {
    let s = 0.5;
    let kappa = korn_constant_q2(s, 2).unwrap();
    let tail = TailPolicy::default();
    for seed in 0..500u64 {
        let u = helmholtz_mix::<f64>(16, 3, seed).unwrap();
        let (d, up) = marcinkiewicz_pair(&u, s, &tail).unwrap();
        let (x, w) = (lp_norm(&d, 2.0).unwrap(), lp_norm(&up, 2.0).unwrap());
        assert!(x <= w);
        assert!(w * w <= 1.01 * kappa * x * x, "seed {seed}: {} > {kappa}", w * w / (x * x));
    }
}

#[test]
fn korn_constant_is_approached_by_random_maximization() {
    let s = 0.5;
    let kappa = korn_constant_q2(s, 2).unwrap();
    assert!(kappa > 1.0);
    let mut best: f64 = 0.0;
    for seed in 0..500u64 {
        let u = helmholtz_mix::<f64>(16, 4, seed).unwrap();
        let r = (w_seminorm_spectral(&u, s).unwrap() / x_seminorm_spectral(&u, s).unwrap()).powi(2);
        assert!(r <= kappa * (1.0 + 1e-12));
        best = best.max(r);
    }
    assert!(kappa <= best * 1.05, "{best} vs {kappa}");
}
