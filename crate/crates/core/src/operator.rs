//! The coupled nonlocal operator 𝕃_𝔥, its energy ℰ_𝔥, the constant-coefficient
//! symbol, the finite/infinite horizon split and the local limit.

use std::f64::consts::PI;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::grid::{apply_multiplier, forward_transform, inverse_transform, Fft2, GridVectorField, DIM};
use crate::kernels::{centered_gradient, require_s, CoefficientField, Horizon, KernelSpec, KernelTable};
use crate::scalar::{f64_of, lit, Real};
use crate::special::{one_minus_cos_moment, sphere_area, sphere_moment, LatticeConstants};
use crate::{Error, Result};

/// Constants of the symbol |2πξ|^{2s}(a·I + b·ξ̂⊗ξ̂) of 𝕃 (A ≡ 1, 𝔥 = ∞) and
/// c·|2πξ|^{2s} of the scalar kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultiplierConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// Radial part ∫(1−cos r) r^{−1−2s} dr times the angular moments ∫|ω₁|^{2s}ω⊗ω dω.
pub fn multiplier_constants(d: usize, s: f64) -> Result<MultiplierConstants> {
    require_s(s)?;
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be ≥ 2, got {d}")));
    }
    let k = one_minus_cos_moment(2.0 * s);
    let c = k * sphere_moment(d, 2.0 * s);
    let longitudinal = k * sphere_moment(d, 2.0 * s + 2.0);
    let a = (c - longitudinal) / (d as f64 - 1.0);
    Ok(MultiplierConstants { a, b: longitudinal - a, c })
}

fn check_displacement<T: Real>(u: &GridVectorField<T>) -> Result<()> {
    if u.components() != DIM {
        return Err(Error::Shape(format!("expected a {DIM}-component field, got {}", u.components())));
    }
    Ok(())
}

/// Per-mode symbol α·|2πξ|^{2s}(a·I + b·ξ̂⊗ξ̂) with ξ = 0 ↦ 0.
pub fn symbol_matrix(mc: &MultiplierConstants, s: f64, alpha: f64, xi: [f64; 2]) -> [[f64; 2]; 2] {
    let r2 = xi[0] * xi[0] + xi[1] * xi[1];
    if r2 == 0.0 {
        return [[0.0; 2]; 2];
    }
    let amp = alpha * (2.0 * PI * r2.sqrt()).powf(2.0 * s);
    let mut m = [[0.0; 2]; 2];
    for (r, row) in m.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = amp * (if r == c { mc.a } else { 0.0 } + mc.b * xi[r] * xi[c] / r2);
        }
    }
    m
}

/// Apply `shift·I + α·symbol` to u spectrally (the inverse when `invert`).
pub(crate) fn spectral_apply<T: Real>(u: &GridVectorField<T>, s: f64, alpha: f64, shift: f64, invert: bool) -> Result<GridVectorField<T>> {
    check_displacement(u)?;
    let mc = multiplier_constants(DIM, s)?;
    let out = apply_multiplier(&forward_transform(u), DIM, |xi, blk| {
        let mut m = symbol_matrix(&mc, s, alpha, xi);
        m[0][0] += shift;
        m[1][1] += shift;
        if invert {
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det == 0.0 {
                m = [[0.0; 2]; 2];
            } else {
                m = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                blk[r * 2 + c] = Complex::new(m[r][c], 0.0);
            }
        }
    });
    inverse_transform(&out)
}

/// 𝕃u for A ≡ 1, 𝔥 = ∞ as a Fourier multiplier.
pub fn apply_spectral<T: Real>(s: f64, u: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    spectral_apply(u, s, 1.0, 0.0, false)
}

/// Quadrature of 𝕃_𝔥 on an n×n grid: the singular cell is skipped and replaced by
/// the lattice-calibrated near-diagonal energy ½ a(x) c_𝔥 n^{2s−2} B(Du, Dv),
/// Du the centered-difference gradient.
pub struct DirectOperator<T: Real> {
    spec: KernelSpec,
    n: usize,
    table: KernelTable<T>,
    sites: Vec<T>,
    constant: Option<T>,
    lattice: LatticeConstants,
    fast: FastPath<T>,
}

struct FastPath<T: Real> {
    fft: Fft2<T>,
    khat: [Vec<Complex<T>>; 3],
    kbar: [T; 3],
    ka: [Vec<T>; 3],
}

impl<T: Real> DirectOperator<T> {
    pub fn new(spec: &KernelSpec, a: &CoefficientField, n: usize) -> Result<Self> {
        a.validate()?;
        let table = KernelTable::for_spec(n, spec);
        let sites: Vec<T> = a.sample(n).into_iter().map(lit).collect();
        let constant = match a {
            CoefficientField::Constant { alpha } => Some(lit(*alpha)),
            _ => None,
        };
        let fft = Fft2::new(n);
        let nn = n * n;
        let entries = table.entries();
        let mut khat: [Vec<Complex<T>>; 3] = Default::default();
        let mut kbar = [T::zero(); 3];
        for (slot, pick) in [0usize, 1, 2].into_iter().enumerate() {
            let vals: Vec<T> = entries.iter().map(|e| [e.k11, e.k12, e.k22][pick]).collect();
            kbar[slot] = vals.iter().copied().sum();
            let mut buf: Vec<Complex<T>> = vals.iter().map(|&v| Complex::new(v, T::zero())).collect();
            fft.forward(&mut buf);
            khat[slot] = buf;
        }
        let mut ka: [Vec<T>; 3] = Default::default();
        let mut abuf: Vec<Complex<T>> = sites.iter().map(|&v| Complex::new(v, T::zero())).collect();
        fft.forward(&mut abuf);
        let inv_nn = T::one() / lit(nn as f64);
        for slot in 0..3 {
            let mut buf: Vec<Complex<T>> = abuf.iter().zip(&khat[slot]).map(|(x, k)| x * k).collect();
            fft.inverse(&mut buf);
            ka[slot] = buf.into_iter().map(|z| z.re * inv_nn).collect();
        }
        Ok(Self {
            spec: *spec,
            n,
            table,
            sites,
            constant,
            lattice: LatticeConstants::new(spec.s()),
            fast: FastPath { fft, khat, kbar, ka },
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn table(&self) -> &KernelTable<T> {
        &self.table
    }

    fn check(&self, u: &GridVectorField<T>) -> Result<()> {
        check_displacement(u)?;
        if u.n() != self.n {
            return Err(Error::Shape(format!("operator built for n = {}, field has n = {}", self.n, u.n())));
        }
        Ok(())
    }

    fn corr_weight(&self) -> f64 {
        self.spec.c_h() * (1.0 / self.n as f64).powf(2.0 - 2.0 * self.spec.s())
    }

    /// Near-diagonal part: −½ Σ_m D_m W_{·m}, W the polarized correction weights.
    fn correction(&self, u: &GridVectorField<T>) -> GridVectorField<T> {
        let n = self.n;
        let nn = n * n;
        let kappa = self.corr_weight();
        let (z4, z22) = (self.lattice.z4, self.lattice.z22());
        let mut w = vec![[0.0f64; 4]; nn];
        for i in 0..n {
            for j in 0..n {
                let g = centered_gradient(u, i, j);
                let a = f64_of(self.sites[i * n + j]) * kappa;
                let (al, be, ga) = (g[0][0], g[0][1] + g[1][0], g[1][1]);
                w[i * n + j] = [-(z4 * al + z22 * ga) * a, -z22 * be * a, -z22 * be * a, -(z4 * ga + z22 * al) * a];
            }
        }
        let quarter = 0.25 * n as f64;
        GridVectorField::from_fn(n, DIM, |l, i, j| {
            let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
            let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
            let d0 = w[im * n + j][l * 2] - w[ip * n + j][l * 2];
            let d1 = w[i * n + jm][l * 2 + 1] - w[i * n + jp][l * 2 + 1];
            lit(quarter * (d0 + d1))
        })
    }

    /// Reference pair sum, O(n⁴).
    pub fn apply_pairsum(&self, u: &GridVectorField<T>) -> Result<GridVectorField<T>> {
        self.check(u)?;
        let raw = self.pairsum_with(u, &self.table, None);
        Ok(raw.scale(lit(self.spec.c_h())).add(&self.correction(u)))
    }

    /// Σ_z A(x, x−z) K(z) (u(x) − u(x−z)) with K = `table` (minus `minus` if given).
    fn pairsum_with(&self, u: &GridVectorField<T>, table: &KernelTable<T>, minus: Option<&KernelTable<T>>) -> GridVectorField<T> {
        let n = self.n;
        let (u0, u1) = (u.component(0), u.component(1));
        let half = lit::<T>(0.5);
        let rows: Vec<(Vec<T>, Vec<T>)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut r0 = vec![T::zero(); n];
                let mut r1 = vec![T::zero(); n];
                for j in 0..n {
                    let x = i * n + j;
                    let (ux0, ux1, ax) = (u0[x], u1[x], self.sites[x]);
                    let (mut acc0, mut acc1) = (T::zero(), T::zero());
                    for p in 0..n {
                        let yi = if p <= i { i - p } else { i + n - p };
                        for q in 0..n {
                            if p == 0 && q == 0 {
                                continue;
                            }
                            let yj = if q <= j { j - q } else { j + n - q };
                            let y = yi * n + yj;
                            let k = table.at(p, q);
                            let (mut k11, mut k12, mut k22) = (k.k11, k.k12, k.k22);
                            if let Some(m) = minus {
                                let km = m.at(p, q);
                                k11 = k11 - km.k11;
                                k12 = k12 - km.k12;
                                k22 = k22 - km.k22;
                            }
                            let wgt = match self.constant {
                                Some(c) => c,
                                None => (ax + self.sites[y]) * half,
                            };
                            let d0 = ux0 - u0[y];
                            let d1 = ux1 - u1[y];
                            acc0 = acc0 + wgt * (k11 * d0 + k12 * d1);
                            acc1 = acc1 + wgt * (k12 * d0 + k22 * d1);
                        }
                    }
                    r0[j] = acc0;
                    r1[j] = acc1;
                }
                (r0, r1)
            })
            .collect();
        let mut data = Vec::with_capacity(2 * n * n);
        data.extend(rows.iter().flat_map(|r| r.0.iter().copied()));
        data.extend(rows.iter().flat_map(|r| r.1.iter().copied()));
        GridVectorField::new(n, DIM, data).expect("finite pair sum")
    }

    // Spectra of two real fields packed as one complex FFT.
    fn forward_pair(&self, a: &[T], b: &[T]) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
        let n = self.n;
        let mut z: Vec<Complex<T>> = a.iter().zip(b).map(|(&x, &y)| Complex::new(x, y)).collect();
        self.fast.fft.forward(&mut z);
        let half = lit::<T>(0.5);
        let mut fa = vec![Complex::new(T::zero(), T::zero()); n * n];
        let mut fb = fa.clone();
        for k1 in 0..n {
            for k2 in 0..n {
                let p = k1 * n + k2;
                let m = ((n - k1) % n) * n + (n - k2) % n;
                let zc = z[m].conj();
                fa[p] = (z[p] + zc) * half;
                fb[p] = (z[p] - zc) * Complex::new(T::zero(), -half);
            }
        }
        (fa, fb)
    }

    // (K * v) for a 2-vector field given its spectrum.
    fn convolve(&self, f0: &[Complex<T>], f1: &[Complex<T>]) -> (Vec<T>, Vec<T>) {
        let [k11, k12, k22] = &self.fast.khat;
        let i = Complex::new(T::zero(), T::one());
        let mut z: Vec<Complex<T>> = (0..f0.len())
            .map(|p| (k11[p] * f0[p] + k12[p] * f1[p]) + i * (k12[p] * f0[p] + k22[p] * f1[p]))
            .collect();
        self.fast.fft.inverse(&mut z);
        let inv = T::one() / lit((self.n * self.n) as f64);
        (z.iter().map(|c| c.re * inv).collect(), z.iter().map(|c| c.im * inv).collect())
    }

    /// Same discrete operator as [`apply_pairsum`](Self::apply_pairsum), evaluated
    /// through FFT convolutions: with A = (a(x)+a(y))/2,
    /// Σ_z A K (u(x)−u(y)) = ½a(K̄u − K*u) + ½((K*a)u − K*(au)).
    pub fn apply(&self, u: &GridVectorField<T>) -> Result<GridVectorField<T>> {
        self.check(u)?;
        let n = self.n;
        let nn = n * n;
        let (u0, u1) = (u.component(0), u.component(1));
        let [b11, b12, b22] = self.fast.kbar;
        let (fu0, fu1) = self.forward_pair(u0, u1);
        let (ku0, ku1) = self.convolve(&fu0, &fu1);
        let mut data = vec![T::zero(); 2 * nn];
        match self.constant {
            Some(c) => {
                for p in 0..nn {
                    data[p] = c * (b11 * u0[p] + b12 * u1[p] - ku0[p]);
                    data[nn + p] = c * (b12 * u0[p] + b22 * u1[p] - ku1[p]);
                }
            }
            None => {
                let au0: Vec<T> = u0.iter().zip(&self.sites).map(|(&x, &a)| x * a).collect();
                let au1: Vec<T> = u1.iter().zip(&self.sites).map(|(&x, &a)| x * a).collect();
                let (fa0, fa1) = self.forward_pair(&au0, &au1);
                let (kau0, kau1) = self.convolve(&fa0, &fa1);
                let [ka11, ka12, ka22] = &self.fast.ka;
                let half = lit::<T>(0.5);
                for p in 0..nn {
                    let a = self.sites[p];
                    let first0 = a * (b11 * u0[p] + b12 * u1[p] - ku0[p]);
                    let first1 = a * (b12 * u0[p] + b22 * u1[p] - ku1[p]);
                    let second0 = ka11[p] * u0[p] + ka12[p] * u1[p] - kau0[p];
                    let second1 = ka12[p] * u0[p] + ka22[p] * u1[p] - kau1[p];
                    data[p] = half * (first0 + second0);
                    data[nn + p] = half * (first1 + second1);
                }
            }
        }
        let raw = GridVectorField::new(n, DIM, data)?;
        Ok(raw.scale(lit(self.spec.c_h())).add(&self.correction(u)))
    }

    /// ℰ_𝔥(u, v) by the pair sum, ½ prefactor included.
    pub fn energy(&self, u: &GridVectorField<T>, v: &GridVectorField<T>) -> Result<T> {
        self.check(u)?;
        self.check(v)?;
        let n = self.n;
        let (u0, u1, v0, v1) = (u.component(0), u.component(1), v.component(0), v.component(1));
        let half = lit::<T>(0.5);
        let rows: Vec<T> = (0..n)
            .into_par_iter()
            .map(|i| {
                let mut row = T::zero();
                for j in 0..n {
                    let x = i * n + j;
                    let ax = self.sites[x];
                    let mut acc = T::zero();
                    for p in 0..n {
                        let yi = if p <= i { i - p } else { i + n - p };
                        for q in 0..n {
                            if p == 0 && q == 0 {
                                continue;
                            }
                            let yj = if q <= j { j - q } else { j + n - q };
                            let y = yi * n + yj;
                            let k = self.table.at(p, q);
                            let wgt = match self.constant {
                                Some(c) => c,
                                None => (ax + self.sites[y]) * half,
                            };
                            let (du0, du1) = (u0[x] - u0[y], u1[x] - u1[y]);
                            let (dv0, dv1) = (v0[x] - v0[y], v1[x] - v1[y]);
                            acc = acc + wgt * (du0 * (k.k11 * dv0 + k.k12 * dv1) + du1 * (k.k12 * dv0 + k.k22 * dv1));
                        }
                    }
                    row = row + acc;
                }
                row
            })
            .collect();
        let nn = lit::<T>((n * n) as f64);
        let pair = rows.into_iter().fold(T::zero(), |a, b| a + b) / nn * half * lit(self.spec.c_h());
        let kappa = self.corr_weight();
        let mut corr = 0.0;
        for i in 0..n {
            for j in 0..n {
                let a = f64_of(self.sites[i * n + j]);
                corr += a * self.lattice.projected_bilinear(&centered_gradient(u, i, j), &centered_gradient(v, i, j));
            }
        }
        corr *= 0.5 * kappa / (n * n) as f64;
        Ok(pair + lit(corr))
    }
}

/// (𝕃_𝔥 u)(x) by the direct pair sum.
pub fn apply_direct<T: Real>(spec: &KernelSpec, a: &CoefficientField, u: &GridVectorField<T>) -> Result<GridVectorField<T>> {
    check_displacement(u)?;
    DirectOperator::new(spec, a, u.n())?.apply_pairsum(u)
}

/// ℰ_𝔥(u, v) by quadrature.
pub fn bilinear_form<T: Real>(spec: &KernelSpec, a: &CoefficientField, u: &GridVectorField<T>, v: &GridVectorField<T>) -> Result<T> {
    check_displacement(u)?;
    DirectOperator::new(spec, a, u.n())?.energy(u, v)
}

/// 𝕃_𝔥 = c_𝔥 𝕃 + 𝒫_𝔥, with the kernel norm used in the Young bound.
#[derive(Clone, Debug)]
pub struct HorizonSplit<T> {
    /// c_𝔥 𝕃u (𝔥 = ∞, same normalization and near-diagonal treatment).
    pub infinite_part: GridVectorField<T>,
    /// 𝒫_𝔥 u = −c_𝔥 Σ_{|z|>𝔥} A K (u(x) − u(y)).
    pub bounded_part: GridVectorField<T>,
    /// Discrete ‖γ‖₁ of the truncated kernel c_𝔥 (1 − χ_{B_𝔥}) |z|^{−d−2s}.
    pub gamma_l1: f64,
    /// Continuum value c_𝔥 |S^{d−1}| 𝔥^{−2s}/(2s).
    pub gamma_l1_continuum: f64,
}

impl<T: Real> HorizonSplit<T> {
    /// α₂ ‖γ‖₁ · 2‖u‖₂.
    pub fn young_bound(&self, alpha2: f64, u: &GridVectorField<T>) -> f64 {
        alpha2 * self.gamma_l1 * 2.0 * f64_of(u.l2_norm())
    }
}

pub fn split_horizon<T: Real>(spec: &KernelSpec, a: &CoefficientField, u: &GridVectorField<T>) -> Result<HorizonSplit<T>> {
    check_displacement(u)?;
    let h = match spec.horizon() {
        Horizon::Finite(h) => h,
        Horizon::Infinite => return Err(Error::InvalidParameter("horizon split needs a finite horizon".into())),
    };
    let n = u.n();
    let infinite = DirectOperator::new(&spec.to_infinite(), a, n)?;
    let finite_table = KernelTable::<T>::for_spec(n, spec);
    let infinite_part = infinite.apply_pairsum(u)?;
    let bounded = infinite.pairsum_with(u, &finite_table, Some(infinite.table()));
    let bounded_part = bounded.scale(lit(spec.c_h()));
    let gamma_l1 = spec.c_h()
        * infinite
            .table()
            .entries()
            .iter()
            .zip(finite_table.entries())
            .map(|(a, b)| (f64_of(a.scalar) - f64_of(b.scalar)).abs())
            .sum::<f64>();
    let s = spec.s();
    Ok(HorizonSplit {
        infinite_part,
        bounded_part,
        gamma_l1,
        gamma_l1_continuum: spec.c_h() * sphere_area(DIM - 1) * h.powf(-2.0 * s) / (2.0 * s),
    })
}

/// Longitudinal and transverse entries of c_𝔥 ∫_{|w|<𝔥} (1 − cos(2πξ·w)) ŵ⊗ŵ |w|^{−d−2s} dw
/// for |ξ| = `xi_norm`, by termwise integration of the cosine series.
pub fn finite_horizon_symbol(d: usize, s: f64, h: f64, c_h: f64, xi_norm: f64) -> (f64, f64) {
    let rho = 2.0 * PI * xi_norm;
    let x = rho * h;
    let (mut long, mut trans) = (0.0, 0.0);
    let mut coef = 1.0; // x^{2m}/(2m)! with sign
    for m in 1..200 {
        let mf = m as f64;
        coef *= x * x / ((2.0 * mf - 1.0) * (2.0 * mf));
        let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
        let radial = h.powf(-2.0 * s) / (2.0 * mf - 2.0 * s);
        let ml = sphere_moment(d, 2.0 * mf + 2.0);
        let mt = (sphere_moment(d, 2.0 * mf) - ml) / (d as f64 - 1.0);
        let dl = sign * coef * radial * ml;
        let dt = sign * coef * radial * mt;
        long += dl;
        trans += dt;
        if mf > x && dl.abs() < 1e-18 * long.abs() && dt.abs() < 1e-18 * trans.abs() {
            break;
        }
    }
    (c_h * long, c_h * trans)
}

/// One row of the local-limit table at reference mode ξ = e₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalLimitRow {
    pub horizon: f64,
    pub c_h: f64,
    pub longitudinal: f64,
    pub transverse: f64,
    pub target_longitudinal: f64,
    pub target_transverse: f64,
    /// Relative Frobenius deviation from |2πξ|²(I + 2ξ̂⊗ξ̂).
    pub deviation: f64,
    pub ratio: f64,
}

pub fn local_limit_check(s: f64, h_list: &[f64]) -> Result<Vec<LocalLimitRow>> {
    require_s(s)?;
    let target_t = (2.0 * PI).powi(2);
    let target_l = 3.0 * target_t;
    h_list
        .iter()
        .map(|&h| {
            let spec = KernelSpec::finite(s, h)?;
            let (l, t) = finite_horizon_symbol(DIM, s, h, spec.c_h(), 1.0);
            let dev = ((l - target_l).powi(2) + (t - target_t).powi(2)).sqrt() / (target_l.powi(2) + target_t.powi(2)).sqrt();
            Ok(LocalLimitRow {
                horizon: h,
                c_h: spec.c_h(),
                longitudinal: l,
                transverse: t,
                target_longitudinal: target_l,
                target_transverse: target_t,
                deviation: dev,
                ratio: l / t,
            })
        })
        .collect()
}
