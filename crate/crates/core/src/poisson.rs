//! Matrix Poisson-type kernel ℙ_t, the extension U(x, t), its t-derivatives,
//! the square function g̊₁ and per-mode identity checks.
//!
//! Here ω_d = |S^d|, the constant that makes ∫ℙ_t = I_{d+1}.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{apply_multiplier, forward_transform, freq, inverse_transform, GridVectorField, ScalarGridField, DIM};
use crate::kernels::require_s;
use crate::marcinkiewicz::{d_s, TailPolicy};
use crate::potentials::riesz_potential;
use crate::scalar::{f64_of, lit, Real};
use crate::special::{gamma, gauss_legendre_on, integrate_adaptive, sphere_area};
use crate::{Error, Result};

/// Size of the extended system.
pub const EXT: usize = DIM + 1;

pub type Mat = [[Complex<f64>; EXT]; EXT];

const ZERO: Complex<f64> = Complex { re: 0.0, im: 0.0 };

fn eye() -> Mat {
    let mut m = [[ZERO; EXT]; EXT];
    for (k, row) in m.iter_mut().enumerate() {
        row[k] = Complex::new(1.0, 0.0);
    }
    m
}

/// 𝔸(ξ) = [[−ξ̂⊗ξ̂, −iξ̂], [−iξ̂ᵀ, 1]].
pub fn block_a(xi: [f64; 2]) -> Mat {
    let r = xi[0].hypot(xi[1]);
    let mut m = [[ZERO; EXT]; EXT];
    if r == 0.0 {
        return m;
    }
    let e = [xi[0] / r, xi[1] / r];
    for i in 0..DIM {
        for j in 0..DIM {
            m[i][j] = Complex::new(-e[i] * e[j], 0.0);
        }
        m[i][DIM] = Complex::new(0.0, -e[i]);
        m[DIM][i] = Complex::new(0.0, -e[i]);
    }
    m[DIM][DIM] = Complex::new(1.0, 0.0);
    m
}

// e^{−at}(p·I + q·𝔸) with a = 2π|ξ|.
fn combine(xi: [f64; 2], p: f64, q: f64, scale: f64) -> Mat {
    let a = block_a(xi);
    let mut m = [[ZERO; EXT]; EXT];
    for i in 0..EXT {
        for j in 0..EXT {
            m[i][j] = (a[i][j] * q + if i == j { p } else { 0.0 }) * scale;
        }
    }
    m
}

fn check_t(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be ≥ 0, got {t}")));
    }
    Ok(())
}

/// ℙ̂_t(ξ) = e^{−2π|ξ|t}(I_{d+1} + 2π|ξ|t 𝔸(ξ)); I_{d+1} at ξ = 0.
pub fn poisson_symbol(xi: [f64; 2], t: f64) -> Result<Mat> {
    check_t(t)?;
    let a = 2.0 * PI * xi[0].hypot(xi[1]);
    if a == 0.0 {
        return Ok(eye());
    }
    Ok(combine(xi, 1.0, a * t, (-a * t).exp()))
}

/// ∂_t ℙ̂_t(ξ) = −a e^{−at}(I − 𝔸 + at𝔸).
pub fn dt_symbol(xi: [f64; 2], t: f64) -> Result<Mat> {
    check_t(t)?;
    let a = 2.0 * PI * xi[0].hypot(xi[1]);
    if a == 0.0 {
        return Ok([[ZERO; EXT]; EXT]);
    }
    Ok(combine(xi, 1.0, a * t - 1.0, -a * (-a * t).exp()))
}

/// ∂_tt ℙ̂_t(ξ) = a² e^{−at}(I − 2𝔸 + at𝔸).
pub fn dtt_symbol(xi: [f64; 2], t: f64) -> Result<Mat> {
    check_t(t)?;
    let a = 2.0 * PI * xi[0].hypot(xi[1]);
    if a == 0.0 {
        return Ok([[ZERO; EXT]; EXT]);
    }
    Ok(combine(xi, 1.0, a * t - 2.0, a * a * (-a * t).exp()))
}

/// Polynomial p(at) = p₀ + p₁ at + p₂ (at)² with
/// |∂_tÛ|² = a²e^{−2at}(|f̂|² + p(at)|ξ̂·f̂|²) for f̂ = (v, 0).
pub const DT_ENERGY_POLY: [f64; 3] = [4.0, -6.0, 2.0];

/// The four t-moments used to integrate t|∂_tÛ|² against the expansion:
/// ∫8π²|ξ|²t e^{−4π|ξ|t}, ∫16π²|ξ|²t e^{…}, −∫32π³|ξ|³t² e^{…}, ∫64π⁴|ξ|⁴t³ e^{…}.
pub const TIME_MOMENTS: [f64; 4] = [0.5, 1.0, -1.0, 1.5];

/// Coefficients (c_f, c_w) with ∫₀^∞ t|∂_tÛ|² dt = c_f|f̂|² + c_w|ξ̂·f̂|².
pub fn g1_mode_coefficients() -> (f64, f64) {
    let [p0, p1, p2] = DT_ENERGY_POLY;
    // In π|ξ|t units the polynomial reads p0 + 2p1 (π|ξ|t) + 4p2 (π|ξ|t)².
    let (q0, q1, q2) = (p0, 2.0 * p1, 4.0 * p2);
    let c_f = TIME_MOMENTS[0] / 2.0;
    let c_w = q0 * TIME_MOMENTS[1] / 4.0 + q1 * TIME_MOMENTS[2] / -8.0 + q2 * TIME_MOMENTS[3] / 16.0;
    (c_f, c_w)
}

/// ω_d = |S^d|.
pub fn omega(d: usize) -> f64 {
    sphere_area(d)
}

fn check_pos_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("t must be positive, got {t}")));
    }
    Ok(())
}

/// ℙ_t(x) = (2(d+1)/ω_d) t/(|x|²+t²)^{(d+3)/2} · (x, t)⊗(x, t).
pub fn poisson_kernel_spatial(x: [f64; 2], t: f64) -> Result<[[f64; EXT]; EXT]> {
    check_pos_t(t)?;
    let d = DIM as f64;
    let r2 = x[0] * x[0] + x[1] * x[1];
    let c = 2.0 * (d + 1.0) / omega(DIM) * t / (r2 + t * t).powf((d + 3.0) / 2.0);
    let v = [x[0], x[1], t];
    let mut m = [[0.0; EXT]; EXT];
    for i in 0..EXT {
        for j in i..EXT {
            m[i][j] = c * v[i] * v[j];
            m[j][i] = m[i][j];
        }
    }
    Ok(m)
}

/// P̄(x, t) = (2(d+1)/ω_d) t|x|/(|x|²+t²)^{(d+3)/2} · (x, t).
pub fn pbar(x: [f64; 2], t: f64) -> Result<[f64; EXT]> {
    check_pos_t(t)?;
    let d = DIM as f64;
    let r2 = x[0] * x[0] + x[1] * x[1];
    let c = 2.0 * (d + 1.0) / omega(DIM) * t * r2.sqrt() / (r2 + t * t).powf((d + 3.0) / 2.0);
    Ok([c * x[0], c * x[1], c * t])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassCheck {
    pub t: f64,
    pub radius: f64,
    /// ∫_{|x|≤R} ℙ_t by quadrature.
    pub inner: [[f64; EXT]; EXT],
    /// ∫_{|x|>R} ℙ_t, evaluated after the substitution r = t tan φ.
    pub tail: [[f64; EXT]; EXT],
    /// max |inner + tail − I|.
    pub deviation: f64,
    /// max modulus over the mixed (x, t) entries of `inner`.
    pub offdiag: f64,
}

/// ∫ℙ_t over ℝ^d as a ball quadrature plus its exterior.
pub fn kernel_mass_check(t: f64, radius: f64) -> Result<MassCheck> {
    check_pos_t(t)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter("radius must be positive".into()));
    }
    let d = DIM as f64;
    let c = 2.0 * (d + 1.0) / omega(DIM);
    let e = (d + 3.0) / 2.0;
    // radial integrals of t³⁻ᵏ r^{d−1+k}/(r²+t²)^e for k = 2 (xx), 1 (xt), 0 (tt)
    let radial = |k: i32| {
        let f = |r: f64| t.powi(3 - k) * r.powi(DIM as i32 - 1 + k) / (r * r + t * t).powf(e);
        integrate_adaptive(&f, 0.0, radius, 1e-14 * t.powi(-(DIM as i32)))
    };
    let exterior = |k: i32| {
        let kk = DIM as i32 - 1 + k;
        let phi0 = (radius / t).atan();
        let scale = t.powi(3 - k) * t.powf(kk as f64 - 2.0 * e + 1.0);
        gauss_legendre_on(64, phi0, PI / 2.0)
            .into_iter()
            .map(|(p, w)| w * p.sin().powi(kk) * p.cos().powf(2.0 * e - 2.0 - kk as f64))
            .sum::<f64>()
            * scale
    };
    const NODES: usize = 64;
    let mut ang = [[0.0; DIM]; DIM];
    let mut ang1 = [0.0; DIM];
    let dth = 2.0 * PI / NODES as f64;
    for k in 0..NODES {
        let th = k as f64 * dth;
        let w = [th.cos(), th.sin()];
        for i in 0..DIM {
            ang1[i] += w[i] * dth;
            for j in 0..DIM {
                ang[i][j] += w[i] * w[j] * dth;
            }
        }
    }
    let total = 2.0 * PI;
    let (rxx, rxt, rtt) = (radial(2), radial(1), radial(0));
    let (exx, ett) = (exterior(2), exterior(0));
    let mut inner = [[0.0; EXT]; EXT];
    let mut tail = [[0.0; EXT]; EXT];
    for i in 0..DIM {
        for j in 0..DIM {
            inner[i][j] = c * ang[i][j] * rxx;
            tail[i][j] = c * ang[i][j] * exx;
        }
        inner[i][DIM] = c * ang1[i] * rxt;
        inner[DIM][i] = inner[i][DIM];
    }
    inner[DIM][DIM] = c * total * rtt;
    tail[DIM][DIM] = c * total * ett;
    let mut deviation: f64 = 0.0;
    for i in 0..EXT {
        for j in 0..EXT {
            let target = if i == j { 1.0 } else { 0.0 };
            deviation = deviation.max((inner[i][j] + tail[i][j] - target).abs());
        }
    }
    let offdiag = (0..DIM).map(|i| inner[i][DIM].abs()).fold(0.0, f64::max);
    Ok(MassCheck { t, radius, inner, tail, deviation, offdiag })
}

fn check_displacement<T: Real>(f: &GridVectorField<T>) -> Result<()> {
    if f.components() != DIM {
        return Err(Error::Shape(format!("expected a {DIM}-component field, got {}", f.components())));
    }
    Ok(())
}

fn apply_ext<T: Real>(f: &GridVectorField<T>, sym: impl Fn([f64; 2]) -> Mat) -> Result<GridVectorField<T>> {
    check_displacement(f)?;
    let out = apply_multiplier(&forward_transform(f), EXT, |xi, blk| {
        let m = sym(xi);
        for r in 0..EXT {
            for c in 0..DIM {
                blk[r * DIM + c] = m[r][c];
            }
        }
    });
    inverse_transform(&out)
}

/// U(·, t) with Û = ℙ̂_t (f̂, 0).
pub fn poisson_extend<T: Real>(f: &GridVectorField<T>, t: f64) -> Result<GridVectorField<T>> {
    check_t(t)?;
    apply_ext(f, |xi| poisson_symbol(xi, t).expect("t checked"))
}

/// ∂_t U(·, t).
pub fn poisson_extend_dt<T: Real>(f: &GridVectorField<T>, t: f64) -> Result<GridVectorField<T>> {
    check_t(t)?;
    apply_ext(f, |xi| dt_symbol(xi, t).expect("t checked"))
}

/// Log-spaced nodes for ∫₀^∞ (·) dt, trapezoidal in log t.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub nodes: Vec<f64>,
    /// Weights for ∫ g(t) dt (the Jacobian t is folded in).
    pub weights: Vec<f64>,
    /// Bound on ∫_{t_max}^∞ t|∂_tÛ|² dt per unit |f̂|², at the lowest frequency |ξ| = 1.
    pub tail_bound: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        Self::log_spaced(96, 1e-4, 8.0).expect("valid defaults")
    }
}

// ∫_T^∞ t^k e^{−2at} dt.
fn upper_moment(k: i32, a: f64, tt: f64) -> f64 {
    let b = 2.0 * a;
    let mut sum = 0.0;
    let mut fact_ratio = 1.0; // k!/j!
    for j in (0..=k).rev() {
        sum += fact_ratio * tt.powi(j) / b.powi(k - j + 1);
        fact_ratio *= j as f64;
    }
    (-b * tt).exp() * sum
}

fn mode_upper_tail(a: f64, tt: f64) -> f64 {
    // t a² e^{−2at}(5 + 6at + 2a²t²)
    a * a * (5.0 * upper_moment(1, a, tt) + 6.0 * a * upper_moment(2, a, tt) + 2.0 * a * a * upper_moment(3, a, tt))
}

fn mode_lower_tail(a: f64, t0: f64) -> f64 {
    a * a * (2.5 * t0 * t0 + 2.0 * a * t0.powi(3) + 0.5 * a * a * t0.powi(4))
}

impl TimeGrid {
    pub fn log_spaced(count: usize, t_min: f64, t_max: f64) -> Result<Self> {
        if count < 2 || !(t_min > 0.0 && t_max > t_min) {
            return Err(Error::InvalidParameter("time grid needs ≥ 2 nodes on 0 < t_min < t_max".into()));
        }
        let (l0, l1) = (t_min.ln(), t_max.ln());
        let ds = (l1 - l0) / (count - 1) as f64;
        let nodes: Vec<f64> = (0..count).map(|k| (l0 + ds * k as f64).exp()).collect();
        let weights = nodes
            .iter()
            .enumerate()
            .map(|(k, &t)| if k == 0 || k == count - 1 { 0.5 * ds * t } else { ds * t })
            .collect();
        Ok(Self { nodes, weights, tail_bound: mode_upper_tail(2.0 * PI, t_max) })
    }

    pub fn t_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.nodes.last().expect("nonempty")
    }
}

/// g̊₁(f)(x) = (∫₀^∞ t |∂_tU(x, t)|² dt)^{1/2}.
pub fn g1<T: Real>(f: &GridVectorField<T>, tg: &TimeGrid) -> Result<ScalarGridField<T>> {
    check_displacement(f)?;
    let n = f.n();
    let spec = forward_transform(f);
    let slices: Vec<Vec<f64>> = tg
        .nodes
        .par_iter()
        .zip(&tg.weights)
        .map(|(&t, &w)| {
            let out = apply_multiplier(&spec, EXT, |xi, blk| {
                let m = dt_symbol(xi, t).expect("t positive");
                for r in 0..EXT {
                    for c in 0..DIM {
                        blk[r * DIM + c] = m[r][c];
                    }
                }
            });
            let du = inverse_transform(&out)?;
            Ok(du.pointwise_norm().values().iter().map(|&v| w * t * f64_of(v).powi(2)).collect())
        })
        .collect::<Result<_>>()?;
    let mut acc = vec![0.0; n * n];
    for sl in &slices {
        acc.iter_mut().zip(sl).for_each(|(a, b)| *a += b);
    }
    ScalarGridField::new(n, acc.into_iter().map(|v| lit(v.sqrt())).collect())
}

/// Per-mode quadrature budget for ‖g̊₁ f‖₂² outside [t_min, t_max].
pub fn g1_tail_budget<T: Real>(f: &GridVectorField<T>, tg: &TimeGrid) -> f64 {
    let n = f.n();
    let spec = forward_transform(f);
    let mut total = 0.0;
    for k1 in 0..n {
        for k2 in 0..n {
            let a = 2.0 * PI * (freq(n, k1) as f64).hypot(freq(n, k2) as f64);
            if a == 0.0 {
                continue;
            }
            let e: f64 = (0..DIM).map(|c| f64_of(spec.coeffs()[spec.flat_index(c, k1, k2)].norm_sqr())).sum();
            total += e * (mode_upper_tail(a, tg.t_max()) + mode_lower_tail(a, tg.t_min()));
        }
    }
    total
}

/// Outcome of the L² identity for g̊₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct G1Identity {
    /// ‖g̊₁ f‖₂² from the t-quadrature.
    pub lhs: f64,
    /// ¼ Σ_ξ |(I + ξ̂⊗ξ̂) f̂|².
    pub rhs: f64,
    /// Σ_ξ (c_f|f̂|² + c_w|ξ̂·f̂|²) with the coefficients of [`g1_mode_coefficients`].
    pub analytic_per_mode: f64,
    /// ¼ Σ_ξ ⟨(I + ξ̂⊗ξ̂) f̂, f̂⟩, the quadratic form the t-integral produces.
    pub quadratic_form: f64,
    pub tail_budget: f64,
}

pub fn g1_l2_identity_check<T: Real>(f: &GridVectorField<T>, tg: &TimeGrid) -> Result<G1Identity> {
    check_displacement(f)?;
    let g = g1(f, tg)?;
    let lhs = f64_of(g.values().iter().map(|v| *v * *v).sum::<T>()) / (f.n() * f.n()) as f64;
    let n = f.n();
    let spec = forward_transform(f);
    let (c_f, c_w) = g1_mode_coefficients();
    let (mut rhs, mut analytic, mut form) = (0.0, 0.0, 0.0);
    for k1 in 0..n {
        for k2 in 0..n {
            let xi = [freq(n, k1) as f64, freq(n, k2) as f64];
            let r = xi[0].hypot(xi[1]);
            if r == 0.0 {
                continue;
            }
            let c: Vec<Complex<f64>> = (0..DIM)
                .map(|c| {
                    let z = spec.coeffs()[spec.flat_index(c, k1, k2)];
                    Complex::new(f64_of(z.re), f64_of(z.im))
                })
                .collect();
            let e2: f64 = c.iter().map(|z| z.norm_sqr()).sum();
            let w = (c[0] * xi[0] + c[1] * xi[1]) / r;
            let w2 = w.norm_sqr();
            // |(I + ξ̂⊗ξ̂)f̂|² = |f̂|² + 3|ξ̂·f̂|²
            rhs += 0.25 * (e2 + 3.0 * w2);
            analytic += c_f * e2 + c_w * w2;
            form += 0.25 * (e2 + w2);
        }
    }
    Ok(G1Identity { lhs, rhs, analytic_per_mode: analytic, quadratic_form: form, tail_budget: g1_tail_budget(f, tg) })
}

/// Quadrature in r for ∫₀^∞ g(r) r^{−s} dr: trapezoid in log r on
/// [lo/a, hi/a] with a = 2π|ξ|, a small-r term g(0) r₀^{1−s}/(1−s), the
/// Euler-Maclaurin endpoint term at r₀ and the leading exponential tail beyond the last node.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RGrid {
    pub nodes: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for RGrid {
    fn default() -> Self {
        Self { nodes: 128, lo: 1e-10, hi: 60.0 }
    }
}

impl RGrid {
    pub fn with_nodes(nodes: usize) -> Self {
        Self { nodes, ..Self::default() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionalTimeReport {
    pub s: f64,
    pub t: f64,
    /// max over modes of |∂_tÛ − (−1/Γ(1−s)) ∫ ∂_ttÛ_s(t + r) r^{−s} dr|.
    pub max_deviation: f64,
    /// Same with f̂ replaced by its transverse part (ξ̂·f̂ = 0).
    pub max_deviation_transverse: f64,
    /// max over modes of |a s e^{−at} 𝔸 (f̂, 0)|, the exact size of the mismatch.
    pub predicted_defect: f64,
    pub modes: usize,
}

fn mat_vec(m: &Mat, v: &[Complex<f64>; EXT]) -> [Complex<f64>; EXT] {
    let mut out = [ZERO; EXT];
    for i in 0..EXT {
        for j in 0..EXT {
            out[i] += m[i][j] * v[j];
        }
    }
    out
}

fn vec_dist(a: &[Complex<f64>; EXT], b: &[Complex<f64>; EXT]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

/// −1/Γ(1−s) ∫₀^∞ ∂_tt[(2π|ξ|)^{−s} ℙ̂(ξ, t + r)] v r^{−s} dr.
pub fn fractional_time_rhs(xi: [f64; 2], s: f64, t: f64, v: &[Complex<f64>; EXT], grid: &RGrid) -> [Complex<f64>; EXT] {
    let a = 2.0 * PI * xi[0].hypot(xi[1]);
    let (r0, r1) = (grid.lo / a, grid.hi / a);
    let (l0, l1) = (r0.ln(), r1.ln());
    let m = grid.nodes.max(2);
    let ds = (l1 - l0) / (m - 1) as f64;
    let pref = a.powf(-s);
    let integrand = |r: f64| mat_vec(&dtt_symbol(xi, t + r).expect("t + r ≥ 0"), v);
    let mut acc = [ZERO; EXT];
    for k in 0..m {
        let r = (l0 + ds * k as f64).exp();
        let w = if k == 0 || k == m - 1 { 0.5 * ds } else { ds } * r.powf(1.0 - s);
        let g = integrand(r);
        for i in 0..EXT {
            acc[i] += g[i] * w;
        }
    }
    let (g0, g1v) = (integrand(0.0), integrand(r1));
    // Euler-Maclaurin h²/12 term at the lower end, where g(r)r^{1−s} decays only like r^{1−s}
    let em = ds * ds / 12.0 * (1.0 - s) * r0.powf(1.0 - s);
    for i in 0..EXT {
        acc[i] += g0[i] * (r0.powf(1.0 - s) / (1.0 - s) + em) + g1v[i] * (r1.powf(-s) / a);
    }
    let c = -pref / gamma(1.0 - s);
    let mut out = [ZERO; EXT];
    for i in 0..EXT {
        out[i] = acc[i] * c;
    }
    out
}

/// Compare ∂_tÛ with the fractional-time integral at every mode of f.
pub fn fractional_time_identity_check<T: Real>(f: &GridVectorField<T>, s: f64, t: f64, grid: &RGrid) -> Result<FractionalTimeReport> {
    require_s(s)?;
    check_pos_t(t)?;
    check_displacement(f)?;
    let n = f.n();
    let spec = forward_transform(f);
    let scale = f64_of(spec.coeffs().iter().map(|z| z.norm()).fold(T::zero(), T::max));
    let (mut dev, mut dev_t, mut defect, mut modes) = (0.0f64, 0.0f64, 0.0f64, 0usize);
    for k1 in 0..n {
        for k2 in 0..n {
            let xi = [freq(n, k1) as f64, freq(n, k2) as f64];
            let r = xi[0].hypot(xi[1]);
            let mut v = [ZERO; EXT];
            for (c, slot) in v.iter_mut().enumerate().take(DIM) {
                let z = spec.coeffs()[spec.flat_index(c, k1, k2)];
                *slot = Complex::new(f64_of(z.re), f64_of(z.im));
            }
            let mag: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if r == 0.0 || mag <= 1e-14 * scale {
                continue;
            }
            modes += 1;
            let lhs = mat_vec(&dt_symbol(xi, t)?, &v);
            let rhs = fractional_time_rhs(xi, s, t, &v, grid);
            dev = dev.max(vec_dist(&lhs, &rhs));
            let e = [xi[0] / r, xi[1] / r];
            let w = v[0] * e[0] + v[1] * e[1];
            let mut vt = v;
            vt[0] -= w * e[0];
            vt[1] -= w * e[1];
            let lt = mat_vec(&dt_symbol(xi, t)?, &vt);
            let rt = fractional_time_rhs(xi, s, t, &vt, grid);
            dev_t = dev_t.max(vec_dist(&lt, &rt));
            let a = 2.0 * PI * r;
            let av = mat_vec(&block_a(xi), &v);
            let mag_av: f64 = av.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            defect = defect.max(a * s * (-a * t).exp() * mag_av);
        }
    }
    Ok(FractionalTimeReport { s, t, max_deviation: dev, max_deviation_transverse: dev_t, predicted_defect: defect, modes })
}

/// Lower cutoff on D^s(𝓘_s f) below which a point is excluded from the ratio.
pub const DOMINATION_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug)]
pub struct DominationReport<T> {
    pub max_ratio: f64,
    /// g̊₁(f)/D^s(𝓘_s f), 0 at excluded points.
    pub ratios: ScalarGridField<T>,
    pub excluded: usize,
}

/// g̊₁(f)(x) against D^s(𝓘_s f)(x).
pub fn pointwise_domination_check<T: Real>(f: &GridVectorField<T>, s: f64, tg: &TimeGrid, tail: &TailPolicy) -> Result<DominationReport<T>> {
    require_s(s)?;
    let fs = riesz_potential(s, f)?;
    let d = d_s(&fs, s, tail)?;
    let g = g1(f, tg)?;
    let mut excluded = 0;
    let mut max_ratio: f64 = 0.0;
    let vals: Vec<T> = g
        .values()
        .iter()
        .zip(d.values())
        .map(|(&gv, &dv)| {
            if f64_of(dv) < DOMINATION_FLOOR {
                excluded += 1;
                T::zero()
            } else {
                let r = gv / dv;
                max_ratio = max_ratio.max(f64_of(r));
                r
            }
        })
        .collect();
    Ok(DominationReport { max_ratio, ratios: ScalarGridField::new(f.n(), vals)?, excluded })
}
