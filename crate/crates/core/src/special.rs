//! Special functions and closed-form constants. Everything here is `f64`;
//! callers cast into the field scalar.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

pub use statrs::function::gamma::{gamma, ln_gamma};

/// Surface area of the unit sphere S^k ⊂ ℝ^{k+1}.
pub fn sphere_area(k: usize) -> f64 {
    let m = (k + 1) as f64;
    2.0 * PI.powf(m / 2.0) / gamma(m / 2.0)
}

/// ∫_{S^{d-1}} |ω₁|^β dω.
pub fn sphere_moment(d: usize, beta: f64) -> f64 {
    let d = d as f64;
    2.0 * PI.powf((d - 1.0) / 2.0) * (ln_gamma((beta + 1.0) / 2.0) - ln_gamma((beta + d) / 2.0)).exp()
}

/// ∫_0^∞ (1 − cos r) r^{−1−α} dr for α ∈ (0, 2).
pub fn one_minus_cos_moment(alpha: f64) -> f64 {
    PI / (2.0 * gamma(1.0 + alpha) * (PI * alpha / 2.0).sin())
}

/// Gauss–Legendre nodes and weights on [−1, 1].
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre_on(m: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(m);
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    x.iter().zip(&w).map(|(&xi, &wi)| (c + h * xi, h * wi)).collect()
}

/// Adaptive Gauss–Legendre integration by bisection.
pub fn integrate_adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn gl<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        gauss_legendre_on(10, a, b).into_iter().map(|(x, w)| w * f(x)).sum()
    }
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (gl(f, a, m), gl(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= tol {
            return l + r;
        }
        rec(f, a, m, l, tol / 2.0, depth - 1) + rec(f, m, b, r, tol / 2.0, depth - 1)
    }
    rec(f, a, b, gl(f, a, b), tol, 40)
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t).exp()
    }
}

/// Smooth cutoff: 1 on [0, r_max/2], 0 beyond r_max, C^∞ in between.
pub fn image_window(r: f64, r_max: f64) -> f64 {
    let t = (2.0 * r / r_max - 1.0).clamp(0.0, 1.0);
    let (p, q) = (bump(t), bump(1.0 - t));
    1.0 - p / (p + q)
}

/// ∫_0^∞ (1 − window(r)) r^{−1−β} dr: the radial far-field mass beyond the image window.
pub fn window_tail_moment(beta: f64, r_max: f64) -> f64 {
    let inner: f64 = gauss_legendre_on(96, r_max / 2.0, r_max)
        .into_iter()
        .map(|(r, w)| w * (1.0 - image_window(r, r_max)) * r.powf(-1.0 - beta))
        .sum();
    inner + r_max.powf(-beta) / beta
}

/// Regularized lattice sums of the square lattice ℤ²: the constant terms
/// Z[P] = "Σ_{m≠0} P(m̂)|m|^{−2s}" (analytically continued) for angular
/// weights P = 1 and P = ω₁⁴. They give the exact leading correction of a
/// trapezoidal sum over a punctured lattice for integrands P(ẑ)|z|^{−2s}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConstants {
    pub s: f64,
    pub z0: f64,
    pub z4: f64,
}

impl LatticeConstants {
    pub fn new(s: f64) -> Self {
        static CACHE: OnceLock<Mutex<HashMap<u64, LatticeConstants>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(c) = cache.lock().unwrap().get(&s.to_bits()) {
            return *c;
        }
        let c = Self::compute(s);
        cache.lock().unwrap().insert(s.to_bits(), c);
        c
    }

    fn compute(s: f64) -> Self {
        // the regularization error is a power series in ε²
        let levels = [0.08, 0.04, 0.02, 0.01];
        let mut v0 = [0.0; 4];
        let mut v4 = [0.0; 4];
        for (k, &eps) in levels.iter().enumerate() {
            let (a, b) = regularized_sums(s, eps);
            v0[k] = a;
            v4[k] = b;
        }
        let rich = |mut v: [f64; 4]| {
            let mut f = 4.0;
            for level in 1..4 {
                for k in (level..4).rev() {
                    v[k] = (f * v[k] - v[k - 1]) / (f - 1.0);
                }
                f *= 4.0;
            }
            v[3]
        };
        LatticeConstants { s, z0: rich(v0), z4: rich(v4) }
    }

    /// Z[ω₁²ω₂²].
    pub fn z22(&self) -> f64 {
        0.5 * self.z0 - self.z4
    }

    /// −Z[(ωᵀGω)²] ≥ 0.
    pub fn projected(&self, g: &[[f64; 2]; 2]) -> f64 {
        let (al, be, ga) = (g[0][0], g[0][1] + g[1][0], g[1][1]);
        -(self.z4 * (al * al + ga * ga) + self.z22() * (be * be + 2.0 * al * ga))
    }

    /// Polarized form of [`projected`](Self::projected).
    pub fn projected_bilinear(&self, g: &[[f64; 2]; 2], h: &[[f64; 2]; 2]) -> f64 {
        let (a1, b1, c1) = (g[0][0], g[0][1] + g[1][0], g[1][1]);
        let (a2, b2, c2) = (h[0][0], h[0][1] + h[1][0], h[1][1]);
        -(self.z4 * (a1 * a2 + c1 * c2) + self.z22() * (b1 * b2 + a1 * c2 + c1 * a2))
    }

    /// −Z[|Gω|²] − (−Z[(ωᵀGω)²]) = −Z[(ω⊥ᵀGω)²]. With p = −Z4 and q = −Z22 this is
    /// q(G00 − G11)² + (p − q)(G01² + G10²) + q(G01 − G10)²; q > 0 for all s but
    /// p − q < 0 below s ≈ 0.25, so the value can be negative there.
    pub fn full_minus_projected(&self, g: &[[f64; 2]; 2]) -> f64 {
        let p = -self.z4;
        let q = -self.z22();
        let (al, ga) = (g[0][0], g[1][1]);
        let (b, c) = (g[0][1], g[1][0]);
        q * (al - ga) * (al - ga) + (p - q) * (b * b + c * c) + q * (b - c) * (b - c)
    }
}

// Gaussian-damped lattice sums minus their continuum counterparts.
fn regularized_sums(s: f64, eps: f64) -> (f64, f64) {
    let m = (7.0 / eps) as i64 + 2;
    let e2 = eps * eps;
    let mut s0 = 0.0;
    let mut s4 = 0.0;
    for i in -m..=m {
        let mut row0 = 0.0;
        let mut row4 = 0.0;
        for j in -m..=m {
            if i == 0 && j == 0 {
                continue;
            }
            let r2 = (i * i + j * j) as f64;
            let w = r2.powf(-s) * (-e2 * r2).exp();
            let c2 = (i * i) as f64 / r2;
            row0 += w;
            row4 += w * c2 * c2;
        }
        s0 += row0;
        s4 += row4;
    }
    let base = gamma(1.0 - s) / (2.0 * eps.powf(2.0 - 2.0 * s));
    (s0 - 2.0 * PI * base, s4 - 0.75 * PI * base)
}
