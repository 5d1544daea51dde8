//! Marcinkiewicz-type integrals D^s and Υ^s, the fractional seminorms and the
//! q = 2 Korn constant.
//!
//! ℝ^d integrals over periodic fields become sums over the images of every grid
//! offset, smoothly windowed at `r_max`; the mass beyond the window enters as a
//! mean-field constant.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{forward_transform, freq, lp_norm, GridVectorField, ScalarGridField, DIM};
use crate::kernels::{centered_gradient, near_diagonal_correction_q, require_s, KernelTable, DEFAULT_R_MAX};
use crate::operator::multiplier_constants;
use crate::scalar::{f64_of, lit, Real};
use crate::special::{image_window, sphere_area, sphere_moment, window_tail_moment, LatticeConstants};
use crate::{Error, Result};

/// Image truncation for ℝ^d integrals of periodic fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailPolicy {
    /// Outer radius of the image window, in torus periods.
    pub r_max: f64,
    pub report_tail: bool,
}

impl Default for TailPolicy {
    fn default() -> Self {
        Self { r_max: DEFAULT_R_MAX, report_tail: true }
    }
}

impl TailPolicy {
    pub fn new(r_max: f64, report_tail: bool) -> Result<Self> {
        if !(r_max >= 1.0 && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("r_max must be ≥ 1, got {r_max}")));
        }
        Ok(Self { r_max, report_tail })
    }
}

fn check_field<T: Real>(u: &GridVectorField<T>) -> Result<()> {
    if u.components() != DIM {
        return Err(Error::Shape(format!("expected a {DIM}-component field, got {}", u.components())));
    }
    Ok(())
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("seminorm exponent must lie in (1, ∞), got {q}")));
    }
    Ok(())
}

/// D^s(u) and Υ^s(u) on identical quadrature nodes; Υ^s is assembled as D^s plus a
/// nonnegative transverse part, so D^s ≤ Υ^s holds exactly.
pub fn marcinkiewicz_pair<T: Real>(u: &GridVectorField<T>, s: f64, tail: &TailPolicy) -> Result<(ScalarGridField<T>, ScalarGridField<T>)> {
    require_s(s)?;
    check_field(u)?;
    let n = u.n();
    let table = KernelTable::<T>::images(n, DIM as f64 + 2.0 * s, tail.r_max);
    let lattice = LatticeConstants::new(s);
    let kappa = (1.0 / n as f64).powf(2.0 - 2.0 * s);
    let (u0, u1) = (u.component(0), u.component(1));
    let rows: Vec<Vec<(T, T)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let x = i * n + j;
                    let (mut dsum, mut tsum) = (T::zero(), T::zero());
                    for p in 0..n {
                        let yi = if p <= i { i - p } else { i + n - p };
                        for q in 0..n {
                            if p == 0 && q == 0 {
                                continue;
                            }
                            let yj = if q <= j { j - q } else { j + n - q };
                            let y = yi * n + yj;
                            let k = table.at(p, q);
                            let (d0, d1) = (u0[x] - u0[y], u1[x] - u1[y]);
                            dsum = dsum + k.projected_energy(d0, d1);
                            tsum = tsum + k.transverse_energy(d0, d1);
                        }
                    }
                    let g = centered_gradient(u, i, j);
                    let d2 = (dsum + lit::<T>(kappa * lattice.projected(&g))).max(T::zero());
                    // Υ² = D² + transverse part; the transverse integral is nonnegative, its
                    // corrected quadrature is clamped at zero
                    let trans = (tsum + lit::<T>(kappa * lattice.full_minus_projected(&g))).max(T::zero());
                    (d2.sqrt(), (d2 + trans).sqrt())
                })
                .collect()
        })
        .collect();
    let flat: Vec<(T, T)> = rows.into_iter().flatten().collect();
    Ok((
        ScalarGridField::new(n, flat.iter().map(|p| p.0).collect())?,
        ScalarGridField::new(n, flat.iter().map(|p| p.1).collect())?,
    ))
}

/// Υ^s(u)(x) = (∫ |u(x) − u(y)|²/|x − y|^{d+2s} dy)^{1/2}.
pub fn upsilon_s<T: Real>(u: &GridVectorField<T>, s: f64, tail: &TailPolicy) -> Result<ScalarGridField<T>> {
    Ok(marcinkiewicz_pair(u, s, tail)?.1)
}

/// D^s(u)(x) = (∫ |(u(x) − u(y))·ẑ|²/|x − y|^{d+2s} dy)^{1/2}.
pub fn d_s<T: Real>(u: &GridVectorField<T>, s: f64, tail: &TailPolicy) -> Result<ScalarGridField<T>> {
    Ok(marcinkiewicz_pair(u, s, tail)?.0)
}

// Windowed images of every offset for explicit per-image loops: (ŵ₀, ŵ₁, weight).
fn image_lists(n: usize, exponent: f64, r_max: f64) -> Vec<Vec<(f64, f64, f64)>> {
    let cellw = 1.0 / (n * n) as f64;
    let reach = r_max.ceil() as i64 + 1;
    (0..n * n)
        .map(|pq| {
            let z = [(pq / n) as f64 / n as f64, (pq % n) as f64 / n as f64];
            let mut v = Vec::new();
            for m1 in -reach..=reach {
                for m2 in -reach..=reach {
                    let w = [z[0] + m1 as f64, z[1] + m2 as f64];
                    let r = w[0].hypot(w[1]);
                    if r == 0.0 || r >= r_max {
                        continue;
                    }
                    v.push((w[0] / r, w[1] / r, image_window(r, r_max) * r.powf(-exponent) * cellw));
                }
            }
            v
        })
        .collect()
}

fn pair_seminorm<T: Real>(u: &GridVectorField<T>, s: f64, q: f64, tail: &TailPolicy, projected: bool) -> Result<T> {
    let n = u.n();
    let d = DIM as f64;
    let exponent = d + s * q;
    let cellw = 1.0 / (n * n) as f64;
    let moment = window_tail_moment(s * q, tail.r_max);
    let (u0, u1) = (u.component(0), u.component(1));
    let h = 1.0 / n as f64;
    let qt = lit::<T>(q);
    let rows: Vec<f64> = if projected {
        let lists = image_lists(n, exponent, tail.r_max);
        let tail_coef = sphere_moment(DIM, q) * moment * cellw;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = 0.0;
                for j in 0..n {
                    let x = i * n + j;
                    let mut acc = 0.0;
                    for p in 0..n {
                        let yi = if p <= i { i - p } else { i + n - p };
                        for qq in 0..n {
                            if p == 0 && qq == 0 {
                                continue;
                            }
                            let y = yi * n + if qq <= j { j - qq } else { j + n - qq };
                            let (d0, d1) = (f64_of(u0[x] - u0[y]), f64_of(u1[x] - u1[y]));
                            for &(w0, w1, wt) in &lists[p * n + qq] {
                                acc += wt * (d0 * w0 + d1 * w1).abs().powf(q);
                            }
                            acc += tail_coef * d0.hypot(d1).powf(q);
                        }
                    }
                    row += acc + near_diagonal_correction_q(&centered_gradient(u, i, j), h, s, q, true).unwrap_or(0.0);
                }
                row
            })
            .collect()
    } else {
        let table = KernelTable::<T>::images(n, exponent, tail.r_max);
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = 0.0;
                for j in 0..n {
                    let x = i * n + j;
                    let mut acc = T::zero();
                    for p in 0..n {
                        let yi = if p <= i { i - p } else { i + n - p };
                        for qq in 0..n {
                            if p == 0 && qq == 0 {
                                continue;
                            }
                            let y = yi * n + if qq <= j { j - qq } else { j + n - qq };
                            let (d0, d1) = (u0[x] - u0[y], u1[x] - u1[y]);
                            acc = acc + table.at(p, qq).scalar * (d0 * d0 + d1 * d1).sqrt().powf(qt);
                        }
                    }
                    row += f64_of(acc) + near_diagonal_correction_q(&centered_gradient(u, i, j), h, s, q, false).unwrap_or(0.0);
                }
                row
            })
            .collect()
    };
    let total: f64 = rows.iter().sum::<f64>() * cellw;
    Ok(lit(total.max(0.0).powf(1.0 / q)))
}

/// [u]_{W^{s,q}} = (∫∫ |u(x) − u(y)|^q/|x − y|^{d+sq})^{1/q}.
pub fn sobolev_seminorm<T: Real>(u: &GridVectorField<T>, s: f64, q: f64, tail: &TailPolicy) -> Result<T> {
    require_s(s)?;
    check_field(u)?;
    check_q(q)?;
    if q == 2.0 {
        return lp_norm(&upsilon_s(u, s, tail)?, 2.0);
    }
    pair_seminorm(u, s, q, tail, false)
}

/// [u]_{𝒳^s_q} = (∫∫ |(u(x) − u(y))·ẑ|^q/|x − y|^{d+sq})^{1/q}.
pub fn x_seminorm<T: Real>(u: &GridVectorField<T>, s: f64, q: f64, tail: &TailPolicy) -> Result<T> {
    require_s(s)?;
    check_field(u)?;
    check_q(q)?;
    if q == 2.0 {
        return lp_norm(&d_s(u, s, tail)?, 2.0);
    }
    pair_seminorm(u, s, q, tail, true)
}

/// Size of the far field dropped by the image window, before the mean-field
/// constant is added: (2 sup|u|)^q |S^{d−1}| r_max^{−sq}/(sq).
pub fn tail_error_estimate<T: Real>(u: &GridVectorField<T>, s: f64, q: f64, tail: &TailPolicy) -> f64 {
    let sup = f64_of(u.pointwise_norm().max());
    (2.0 * sup).powf(q) * sphere_area(DIM - 1) * tail.r_max.powf(-s * q) / (s * q)
}

/// (2c Σ_ξ |2πξ|^{2s} |û|²)^{1/2}.
pub fn w_seminorm_spectral<T: Real>(u: &GridVectorField<T>, s: f64) -> Result<f64> {
    let mc = multiplier_constants(DIM, s)?;
    Ok(spectral_quadratic(u, s, |a2, _| mc.c * a2).sqrt())
}

/// (2 Σ_ξ |2πξ|^{2s}(a|û|² + b|ξ̂·û|²))^{1/2}.
pub fn x_seminorm_spectral<T: Real>(u: &GridVectorField<T>, s: f64) -> Result<f64> {
    let mc = multiplier_constants(DIM, s)?;
    Ok(spectral_quadratic(u, s, |a2, l2| mc.a * a2 + mc.b * l2).sqrt())
}

fn spectral_quadratic<T: Real>(u: &GridVectorField<T>, s: f64, form: impl Fn(f64, f64) -> f64) -> f64 {
    let n = u.n();
    let f = forward_transform(u);
    let mut total = 0.0;
    for k1 in 0..n {
        for k2 in 0..n {
            let xi = [freq(n, k1) as f64, freq(n, k2) as f64];
            let r = xi[0].hypot(xi[1]);
            if r == 0.0 {
                continue;
            }
            let c0 = f.coeffs()[f.flat_index(0, k1, k2)];
            let c1 = f.coeffs()[f.flat_index(1, k1, k2)];
            let (c0, c1) = (num_complex::Complex::new(f64_of(c0.re), f64_of(c0.im)), num_complex::Complex::new(f64_of(c1.re), f64_of(c1.im)));
            let a2 = c0.norm_sqr() + c1.norm_sqr();
            let l2 = ((c0 * xi[0] + c1 * xi[1]) / r).norm_sqr();
            total += 2.0 * (2.0 * std::f64::consts::PI * r).powf(2.0 * s) * form(a2, l2);
        }
    }
    total
}

/// κ₂ = c/a: the sharp constant in [u]²_W ≤ κ₂ [u]²_X.
pub fn korn_constant_q2(s: f64, d: usize) -> Result<f64> {
    let mc = multiplier_constants(d, s)?;
    Ok(mc.c / mc.a)
}
