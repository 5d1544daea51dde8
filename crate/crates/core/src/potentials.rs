//! Riesz transforms, Riesz and Bessel potentials, the Bessel potential norm
//! and the operator (Lf)_k = f_k − 3R_k Σ_j R_j f_j, all as Fourier multipliers.

use std::f64::consts::PI;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::grid::{apply_multiplier, apply_scalar_multiplier, forward_transform, freq, inverse_transform, lp_norm, lp_norm_vector, GridVectorField, ScalarGridField, DIM};
use crate::kernels::require_s;
use crate::marcinkiewicz::{marcinkiewicz_pair, TailPolicy};
use crate::scalar::{f64_of, lit, Real};
use crate::{Error, Result};

fn check_axis(j: usize) -> Result<()> {
    if j >= DIM {
        return Err(Error::InvalidParameter(format!("axis {j} out of range")));
    }
    Ok(())
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!("exponent p must lie in (1, ∞), got {p}")));
    }
    Ok(())
}

/// Symbol −iξ_j/|ξ| of R_j (0 at ξ = 0).
pub fn riesz_symbol(j: usize, xi: [f64; 2]) -> Complex<f64> {
    let r = xi[0].hypot(xi[1]);
    if r == 0.0 {
        Complex::new(0.0, 0.0)
    } else {
        Complex::new(0.0, -xi[j] / r)
    }
}

/// R_j applied to every component.
pub fn riesz_transform<T: Real>(j: usize, f: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    check_axis(j)?;
    inverse_transform(&apply_scalar_multiplier(&forward_transform(f), |xi| riesz_symbol(j, xi)))
}

pub fn riesz_transform_scalar<T: Real>(j: usize, f: &ScalarGridField<T>) -> Result<ScalarGridField<T>> {
    Ok(riesz_transform(j, &f.as_vector())?.component_field(0))
}

/// Mean tolerance of [`riesz_potential`], relative to 1 + ‖f‖₂.
pub const MEAN_TOL: f64 = 1e-12;

/// 𝓘_s f with symbol (2π|ξ|)^{−s}.
pub fn riesz_potential<T: Real>(s: f64, f: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    let mean = f64_of(f.max_abs_mean());
    if mean > MEAN_TOL * (1.0 + f64_of(f.l2_norm())) {
        return Err(Error::NonzeroMean(mean));
    }
    riesz_power(-s, f)
}

/// Multiplier (2π|ξ|)^σ with ξ = 0 ↦ 0.
pub fn riesz_power<T: Real>(sigma: f64, f: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    inverse_transform(&apply_scalar_multiplier(&forward_transform(f), |xi| {
        let r = xi[0].hypot(xi[1]);
        Complex::new(if r == 0.0 { 0.0 } else { (2.0 * PI * r).powf(sigma) }, 0.0)
    }))
}

/// 𝓙_s f with symbol (1 + 4π²|ξ|²)^{−s/2}; any real s.
pub fn bessel_potential<T: Real>(s: f64, f: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    inverse_transform(&apply_scalar_multiplier(&forward_transform(f), |xi| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        Complex::new((1.0 + 4.0 * PI * PI * r2).powf(-s / 2.0), 0.0)
    }))
}

/// ‖f‖_{ℒ^p_s} = ‖𝓙_{−s} f‖_p.
pub fn bessel_norm<T: Real>(f: &GridVectorField<T>, s: f64, p: f64) -> Result<T> {
    check_p(p)?;
    if s == 0.0 {
        return lp_norm_vector(f, p);
    }
    lp_norm_vector(&bessel_potential(-s, f)?, p)
}

/// (Lf)_k = f_k − 3 R_k Σ_j R_j f_j, through Riesz transforms.
pub fn stein_operator_l<T: Real>(f: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    if f.components() != DIM {
        return Err(Error::Shape(format!("expected a {DIM}-component field")));
    }
    let mut sum = riesz_transform(0, &f.component_field(0).as_vector())?;
    for j in 1..DIM {
        sum = sum.add(&riesz_transform(j, &f.component_field(j).as_vector())?);
    }
    let parts: Vec<ScalarGridField<T>> = (0..DIM)
        .map(|k| {
            let rk = riesz_transform(k, &sum)?;
            Ok(f.component_field(k).as_vector().lincomb(T::one(), &rk, lit(-3.0)).component_field(0))
        })
        .collect::<Result<_>>()?;
    GridVectorField::from_components(&parts)
}

/// Per-mode block λ·I + μ·ξ̂⊗ξ̂ (identity at ξ = 0).
fn projector_multiplier<T: Real>(f: &GridVectorField<T>, mu: f64) -> Result<GridVectorField<T>> {
    if f.components() != DIM {
        return Err(Error::Shape(format!("expected a {DIM}-component field")));
    }
    let out = apply_multiplier(&forward_transform(f), DIM, |xi, blk| {
        let r2 = xi[0] * xi[0] + xi[1] * xi[1];
        for r in 0..DIM {
            for c in 0..DIM {
                let proj = if r2 == 0.0 { 0.0 } else { xi[r] * xi[c] / r2 };
                blk[r * DIM + c] = Complex::new(if r == c { 1.0 } else { 0.0 } + mu * proj, 0.0);
            }
        }
    });
    inverse_transform(&out)
}

/// L by its symbol I + 3ξ̂⊗ξ̂.
pub fn stein_symbol_apply<T: Real>(f: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    projector_multiplier(f, 3.0)
}

/// L⁻¹ by its symbol I − (3/4)ξ̂⊗ξ̂.
pub fn stein_operator_inverse<T: Real>(f: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    projector_multiplier(f, -0.75)
}

/// Σ_k R_k g_k as a scalar field.
pub fn riesz_divergence<T: Real>(g: &GridVectorField<T>) -> Result<ScalarGridField<T>> {
    let mut acc = riesz_transform(0, &g.component_field(0).as_vector())?;
    for k in 1..DIM {
        acc = acc.add(&riesz_transform(k, &g.component_field(k).as_vector())?);
    }
    Ok(acc.component_field(0))
}

/// Both sides of the summed identity Σ_k R_k (Lf)_k = λ Σ_k R_k f_k.
#[derive(Clone, Debug)]
pub struct SteinSummation<T> {
    pub lhs: ScalarGridField<T>,
    pub riesz_sum: ScalarGridField<T>,
}

impl<T: Real> SteinSummation<T> {
    /// max |lhs − λ·Σ R_k f_k|.
    pub fn deviation(&self, lambda: f64) -> f64 {
        self.lhs
            .values()
            .iter()
            .zip(self.riesz_sum.values())
            .map(|(&a, &b)| (f64_of(a) - lambda * f64_of(b)).abs())
            .fold(0.0, f64::max)
    }
}

pub fn stein_summation<T: Real>(f: &GridVectorField<T>) -> Result<SteinSummation<T>> {
    Ok(SteinSummation { lhs: riesz_divergence(&stein_operator_l(f)?)?, riesz_sum: riesz_divergence(f)? })
}

/// sup over the grid's frequencies of |(1+4π²|ξ|²)^{s/2} − (2π|ξ|)^s|.
pub fn bessel_riesz_gap_sup(s: f64, n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for k1 in 0..n {
        for k2 in 0..n {
            let r = (freq(n, k1) as f64).hypot(freq(n, k2) as f64);
            let g = (1.0 + 4.0 * PI * PI * r * r).powf(s / 2.0) - (2.0 * PI * r).powf(s);
            worst = worst.max(g.abs());
        }
    }
    worst
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesselNormReport {
    pub p: f64,
    pub s: f64,
    pub bessel_norm: f64,
    pub plain_norm: f64,
    pub ds_norm: f64,
    /// ‖Υ^s f‖_p, which dominates `ds_norm`.
    pub upsilon_norm: f64,
    pub ratio_lower: f64,
    pub ratio_upper: f64,
}

/// ‖f‖_{ℒ^p_s} against ‖f‖_p + ‖D^s f‖_p.
pub fn characterization_report<T: Real>(f: &GridVectorField<T>, s: f64, p: f64, tail: &TailPolicy) -> Result<BesselNormReport> {
    Ok(characterization_reports(f, s, &[p], tail)?.remove(0))
}

/// [`characterization_report`] for several exponents, sharing one evaluation of D^s and Υ^s.
pub fn characterization_reports<T: Real>(f: &GridVectorField<T>, s: f64, p_list: &[f64], tail: &TailPolicy) -> Result<Vec<BesselNormReport>> {
    require_s(s)?;
    for &p in p_list {
        check_p(p)?;
    }
    let (d, u) = marcinkiewicz_pair(f, s, tail)?;
    let lifted = bessel_potential(-s, f)?;
    p_list
        .iter()
        .map(|&p| {
            let bessel = f64_of(lp_norm_vector(&lifted, p)?);
            let plain = f64_of(lp_norm_vector(f, p)?);
            let ds = f64_of(lp_norm(&d, p)?);
            let up = f64_of(lp_norm(&u, p)?);
            Ok(BesselNormReport {
                p,
                s,
                bessel_norm: bessel,
                plain_norm: plain,
                ds_norm: ds,
                upsilon_norm: up,
                ratio_lower: bessel / (plain + ds),
                ratio_upper: (plain + ds) / bessel,
            })
        })
        .collect()
}
