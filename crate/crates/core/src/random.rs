//! Seeded band-limited random fields (ChaCha8, platform independent).

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::grid::{GridVectorField, DIM};
use crate::scalar::{lit, Real};
use crate::{Error, Result};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarization {
    Any,
    /// ξ·û(ξ) = 0.
    DivFree,
    /// û(ξ) ∥ ξ.
    CurlFree,
}

/// Random trigonometric polynomial with modes 0 < |ξ|∞ ≤ kmax and Gaussian
/// amplitudes scaled by (1 + |ξ|²)^{−decay/2}. Mean zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandLimited {
    pub kmax: usize,
    pub decay: f64,
    pub polarization: Polarization,
}

impl BandLimited {
    pub fn new(kmax: usize) -> Self {
        Self { kmax, decay: 0.0, polarization: Polarization::Any }
    }

    pub fn decay(mut self, decay: f64) -> Self {
        self.decay = decay;
        self
    }

    pub fn polarization(mut self, p: Polarization) -> Self {
        self.polarization = p;
        self
    }

    /// Draw a 2-component field on the n×n grid.
    pub fn sample<T: Real>(&self, n: usize, seed: u64) -> Result<GridVectorField<T>> {
        if self.kmax == 0 || 2 * self.kmax >= n {
            return Err(Error::InvalidParameter(format!("kmax must lie in 1..{} for n = {n}", n / 2)));
        }
        let mut rng = rng(seed);
        let k = self.kmax as i64;
        // half-plane representatives: ξ₁ > 0, or ξ₁ = 0 and ξ₂ > 0
        let mut modes = Vec::new();
        for x1 in 0..=k {
            for x2 in -k..=k {
                if x1 > 0 || x2 > 0 {
                    let xi = [x1 as f64, x2 as f64];
                    let r = xi[0].hypot(xi[1]);
                    let amp = (1.0 + r * r).powf(-self.decay / 2.0);
                    let mut draw = || -> [f64; DIM] {
                        let g: [f64; DIM] = [StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)];
                        match self.polarization {
                            Polarization::Any => g,
                            Polarization::DivFree => {
                                let e = [-xi[1] / r, xi[0] / r];
                                [g[0] * e[0], g[0] * e[1]]
                            }
                            Polarization::CurlFree => {
                                let e = [xi[0] / r, xi[1] / r];
                                [g[0] * e[0], g[0] * e[1]]
                            }
                        }
                    };
                    let (ca, sa) = (draw(), draw());
                    modes.push((xi, [ca[0] * amp, ca[1] * amp], [sa[0] * amp, sa[1] * amp]));
                }
            }
        }
        Ok(GridVectorField::from_point_fn(n, DIM, |c, x| {
            modes
                .iter()
                .map(|(xi, ca, sa)| {
                    let ph = 2.0 * PI * (xi[0] * x[0] + xi[1] * x[1]);
                    ca[c] * ph.cos() + sa[c] * ph.sin()
                })
                .sum()
        }))
    }
}

/// Unit-L² band-limited field.
pub fn unit_field<T: Real>(n: usize, kmax: usize, seed: u64) -> Result<GridVectorField<T>> {
    normalized(BandLimited::new(kmax).sample(n, seed)?)
}

fn normalized<T: Real>(u: GridVectorField<T>) -> Result<GridVectorField<T>> {
    let norm = u.l2_norm();
    if norm == T::zero() {
        return Ok(u);
    }
    Ok(u.scale(T::one() / norm))
}

/// cos θ·(unit div-free) + sin θ·(unit curl-free), θ drawn uniformly from the seed.
pub fn helmholtz_mix<T: Real>(n: usize, kmax: usize, seed: u64) -> Result<GridVectorField<T>> {
    use rand::Rng;
    let theta = rng(seed ^ 0x9e37_79b9_7f4a_7c15).gen_range(0.0..PI);
    let base = BandLimited::new(kmax);
    let div = normalized(base.polarization(Polarization::DivFree).sample::<T>(n, seed)?)?;
    let curl = normalized(base.polarization(Polarization::CurlFree).sample::<T>(n, seed.wrapping_add(1))?)?;
    Ok(div.lincomb(lit(theta.cos()), &curl, lit(theta.sin())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::forward_transform;

    #[test]
    fn seeded_and_mean_zero() {
        let a: GridVectorField<f64> = BandLimited::new(3).sample(16, 7).unwrap();
        let b: GridVectorField<f64> = BandLimited::new(3).sample(16, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.max_abs_mean() < 1e-12);
    }

    #[test]
    fn polarizations() {
        let u: GridVectorField<f64> = BandLimited::new(3).polarization(Polarization::DivFree).sample(16, 1).unwrap();
        let f = forward_transform(&u);
        for k1 in -3i64..=3 {
            for k2 in -3i64..=3 {
                let d = f.coeff(0, [k1, k2]) * k1 as f64 + f.coeff(1, [k1, k2]) * k2 as f64;
                assert!(d.norm() < 1e-12);
            }
        }
        let v: GridVectorField<f64> = BandLimited::new(3).polarization(Polarization::CurlFree).sample(16, 1).unwrap();
        let g = forward_transform(&v);
        for k1 in -3i64..=3 {
            for k2 in -3i64..=3 {
                let d = g.coeff(0, [k1, k2]) * k2 as f64 - g.coeff(1, [k1, k2]) * k1 as f64;
                assert!(d.norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_aliasing_band() {
        assert!(BandLimited::new(8).sample::<f64>(16, 0).is_err());
    }
}
