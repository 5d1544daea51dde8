//! The fractional bond kernel, coefficient models and singular quadrature helpers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::grid::{GridVectorField, DIM};
use crate::scalar::{f64_of, lit, Real};
use crate::special::{image_window, sphere_area, window_tail_moment};
use crate::{Error, Result};

/// Interaction radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Horizon {
    Infinite,
    Finite(f64),
}

/// Default image truncation radius in torus periods.
pub const DEFAULT_R_MAX: f64 = 4.0;

/// Fractional order, horizon and normalization of the bond kernel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    s: f64,
    horizon: Horizon,
    c_h: f64,
    r_max: f64,
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!("fractional order s must lie in (0, 1), got {s}")));
    }
    Ok(())
}

pub(crate) fn require_s(s: f64) -> Result<()> {
    check_s(s)
}

impl KernelSpec {
    pub fn new(s: f64, horizon: Horizon, c_h: f64) -> Result<Self> {
        check_s(s)?;
        if let Horizon::Finite(h) = horizon {
            if !(h > 0.0 && h <= 0.5) {
                return Err(Error::InvalidParameter(format!("finite horizon must lie in (0, 0.5], got {h}")));
            }
        }
        if !(c_h > 0.0 && c_h.is_finite()) {
            return Err(Error::InvalidParameter(format!("normalization must be positive, got {c_h}")));
        }
        Ok(Self { s, horizon, c_h, r_max: DEFAULT_R_MAX })
    }

    /// 𝔥 = ∞ with c_∞ = 1.
    pub fn infinite(s: f64) -> Result<Self> {
        Self::new(s, Horizon::Infinite, 1.0)
    }

    /// Finite horizon with c_𝔥 fixed by the local-limit matching condition.
    pub fn finite(s: f64, h: f64) -> Result<Self> {
        check_s(s)?;
        Self::new(s, Horizon::Finite(h), local_limit_normalization(DIM, s, h))
    }

    /// Image truncation radius for infinite-horizon sums.
    pub fn with_r_max(mut self, r_max: f64) -> Result<Self> {
        if !(r_max >= 1.0 && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("r_max must be ≥ 1, got {r_max}")));
        }
        self.r_max = r_max;
        Ok(self)
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn c_h(&self) -> f64 {
        self.c_h
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Same kernel with 𝔥 = ∞ (normalization unchanged).
    pub fn to_infinite(&self) -> Self {
        Self { horizon: Horizon::Infinite, ..*self }
    }
}

/// c_𝔥 such that c_𝔥 · 𝔥^{2−2s}/(2−2s) · |S^{d−1}|/(d(d+2)) · ½ = 1.
pub fn local_limit_normalization(d: usize, s: f64, h: f64) -> f64 {
    let df = d as f64;
    2.0 * (2.0 - 2.0 * s) * df * (df + 2.0) / (sphere_area(d - 1) * h.powf(2.0 - 2.0 * s))
}

/// Cells per axis of the random coefficient lattice.
pub const RANDOM_CELLS: usize = 16;

/// Symmetric elliptic coefficient A(x, y) = (a(x) + a(y))/2.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientField {
    Constant { alpha: f64 },
    /// a piecewise constant on the cells of an `n`×`n` grid.
    Separable { n: usize, values: Vec<f64> },
    /// a = α₁ on even tiles, α₂ on odd tiles of a k×k checkerboard.
    Checkerboard { alpha1: f64, alpha2: f64, tiles: usize },
    /// a i.i.d. uniform in [α₁, α₂] on a fixed lattice of cells.
    RandomSymmetric { alpha1: f64, alpha2: f64, seed: u64 },
}

fn cell(x: f64, k: usize) -> usize {
    ((x.rem_euclid(1.0) * k as f64).floor() as usize).min(k - 1)
}

fn random_cells(alpha1: f64, alpha2: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..RANDOM_CELLS * RANDOM_CELLS).map(|_| rng.gen_range(alpha1..=alpha2)).collect()
}

impl CoefficientField {
    pub fn constant(alpha: f64) -> Self {
        CoefficientField::Constant { alpha }
    }

    pub fn checkerboard(alpha1: f64, alpha2: f64, tiles: usize) -> Self {
        CoefficientField::Checkerboard { alpha1, alpha2, tiles }
    }

    pub fn random_symmetric(alpha1: f64, alpha2: f64, seed: u64) -> Self {
        CoefficientField::RandomSymmetric { alpha1, alpha2, seed }
    }

    pub fn separable(n: usize, values: Vec<f64>) -> Result<Self> {
        let c = CoefficientField::Separable { n, values };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match self {
            CoefficientField::Constant { alpha } if !(*alpha > 0.0 && alpha.is_finite()) => bad(format!("constant coefficient must be positive, got {alpha}")),
            CoefficientField::Separable { n, values } if *n == 0 || values.len() != n * n => bad("separable coefficient needs n² values".into()),
            CoefficientField::Separable { values, .. } if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) => bad("separable coefficient must be positive".into()),
            CoefficientField::Checkerboard { tiles: 0, .. } => bad("checkerboard needs at least one tile".into()),
            CoefficientField::Checkerboard { alpha1, alpha2, .. } | CoefficientField::RandomSymmetric { alpha1, alpha2, .. }
                if !(*alpha1 > 0.0 && alpha1 <= alpha2 && alpha2.is_finite()) =>
            {
                bad(format!("need 0 < α₁ ≤ α₂, got [{alpha1}, {alpha2}]"))
            }
            _ => Ok(()),
        }
    }

    /// Ellipticity bounds [α₁, α₂].
    pub fn bounds(&self) -> (f64, f64) {
        match self {
            CoefficientField::Constant { alpha } => (*alpha, *alpha),
            CoefficientField::Separable { values, .. } => {
                (values.iter().copied().fold(f64::INFINITY, f64::min), values.iter().copied().fold(0.0, f64::max))
            }
            CoefficientField::Checkerboard { alpha1, alpha2, .. } | CoefficientField::RandomSymmetric { alpha1, alpha2, .. } => {
                (*alpha1, *alpha2)
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, CoefficientField::Constant { .. })
    }

    /// Site function a(x).
    pub fn site_value(&self, x: [f64; 2]) -> f64 {
        match self {
            CoefficientField::Constant { alpha } => *alpha,
            CoefficientField::Separable { n, values } => values[cell(x[0], *n) * n + cell(x[1], *n)],
            CoefficientField::Checkerboard { alpha1, alpha2, tiles } => {
                if (cell(x[0], *tiles) + cell(x[1], *tiles)) % 2 == 0 {
                    *alpha1
                } else {
                    *alpha2
                }
            }
            CoefficientField::RandomSymmetric { alpha1, alpha2, seed } => {
                random_cells(*alpha1, *alpha2, *seed)[cell(x[0], RANDOM_CELLS) * RANDOM_CELLS + cell(x[1], RANDOM_CELLS)]
            }
        }
    }

    /// a at the grid points (i/n, j/n), row-major.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        let table = match self {
            CoefficientField::RandomSymmetric { alpha1, alpha2, seed } => Some(random_cells(*alpha1, *alpha2, *seed)),
            _ => None,
        };
        (0..n * n)
            .map(|p| {
                let x = [(p / n) as f64 / n as f64, (p % n) as f64 / n as f64];
                match &table {
                    Some(t) => t[cell(x[0], RANDOM_CELLS) * RANDOM_CELLS + cell(x[1], RANDOM_CELLS)],
                    None => self.site_value(x),
                }
            })
            .collect()
    }
}

/// A(x, y).
pub fn eval_coefficient(a: &CoefficientField, x: [f64; 2], y: [f64; 2]) -> f64 {
    match a {
        CoefficientField::Constant { alpha } => *alpha,
        _ => 0.5 * (a.site_value(x) + a.site_value(y)),
    }
}

/// Minimum-image representative of x − y in [−½, ½)².
pub fn minimum_image(x: [f64; 2], y: [f64; 2]) -> [f64; 2] {
    let w = |t: f64| t - (t + 0.5).floor();
    [w(x[0] - y[0]), w(x[1] - y[1])]
}

/// A(x,y) |z|^{−d−2s} ẑ⊗ẑ with z the minimum image of x − y.
pub fn bond_matrix(x: [f64; 2], y: [f64; 2], spec: &KernelSpec, a: &CoefficientField) -> Result<[[f64; 2]; 2]> {
    let z = minimum_image(x, y);
    let r = z[0].hypot(z[1]);
    if r == 0.0 {
        return Err(Error::Diagonal);
    }
    if let Horizon::Finite(h) = spec.horizon() {
        if r > h {
            return Ok([[0.0; 2]; 2]);
        }
    }
    let k = eval_coefficient(a, x, y) * r.powf(-(DIM as f64) - 2.0 * spec.s()) / (r * r);
    let off = k * z[0] * z[1];
    Ok([[k * z[0] * z[0], off], [off, k * z[1] * z[1]]])
}

fn check_correction_args(delta: f64, s: f64) -> Result<()> {
    if s >= 1.0 {
        return Err(Error::InvalidParameter("near-diagonal integral diverges for s ≥ 1".into()));
    }
    check_s(s)?;
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    Ok(())
}

/// ∫_{|z|<δ} |Gz·ẑ|²/|z|^{d+2s} dz in closed form:
/// δ^{2−2s}/(2−2s) · |S^{d−1}|/(d(d+2)) · (tr(G)² + tr(GᵀG) + tr(G²)).
pub fn near_diagonal_correction(grad: &[[f64; 2]; 2], delta: f64, s: f64) -> Result<f64> {
    check_correction_args(delta, s)?;
    let d = DIM as f64;
    let tr = grad[0][0] + grad[1][1];
    let frob: f64 = grad.iter().flatten().map(|v| v * v).sum();
    let tr_sq = grad[0][0] * grad[0][0] + 2.0 * grad[0][1] * grad[1][0] + grad[1][1] * grad[1][1];
    let angular = sphere_area(DIM - 1) / (d * (d + 2.0)) * (tr * tr + frob + tr_sq);
    Ok(delta.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s) * angular)
}

/// ∫_{|z|<δ} |Gz|²/|z|^{d+2s} dz = δ^{2−2s}/(2−2s) · |S^{d−1}|/d · ‖G‖²_F.
pub fn near_diagonal_correction_full(grad: &[[f64; 2]; 2], delta: f64, s: f64) -> Result<f64> {
    check_correction_args(delta, s)?;
    let frob: f64 = grad.iter().flatten().map(|v| v * v).sum();
    Ok(delta.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s) * sphere_area(DIM - 1) / DIM as f64 * frob)
}

/// ∫_{|z|<δ} |Gz·ẑ|^q/|z|^{d+sq} (projected) or |Gz|^q/|z|^{d+sq} (full),
/// angular part by the periodic trapezoid rule.
pub fn near_diagonal_correction_q(grad: &[[f64; 2]; 2], delta: f64, s: f64, q: f64, projected: bool) -> Result<f64> {
    check_correction_args(delta, s)?;
    const NODES: usize = 720;
    let mut ang = 0.0;
    for k in 0..NODES {
        let th = 2.0 * std::f64::consts::PI * k as f64 / NODES as f64;
        let w = [th.cos(), th.sin()];
        let gw = [grad[0][0] * w[0] + grad[0][1] * w[1], grad[1][0] * w[0] + grad[1][1] * w[1]];
        let v = if projected { (gw[0] * w[0] + gw[1] * w[1]).abs() } else { gw[0].hypot(gw[1]) };
        ang += v.powf(q);
    }
    ang *= 2.0 * std::f64::consts::PI / NODES as f64;
    let e = q * (1.0 - s);
    Ok(delta.powf(e) / e * ang)
}

/// Centered-difference gradient G[r][k] ≈ ∂_k u_r at grid point (i, j).
pub fn centered_gradient<T: Real>(u: &GridVectorField<T>, i: usize, j: usize) -> [[f64; 2]; 2] {
    let n = u.n();
    let h2 = 0.5 * n as f64;
    let (ip, im) = ((i + 1) % n, (i + n - 1) % n);
    let (jp, jm) = ((j + 1) % n, (j + n - 1) % n);
    let mut g = [[0.0; 2]; 2];
    for (r, row) in g.iter_mut().enumerate() {
        row[0] = f64_of(u.at(r, ip, j) - u.at(r, im, j)) * h2;
        row[1] = f64_of(u.at(r, i, jp) - u.at(r, i, jm)) * h2;
    }
    g
}

/// Periodized kernel at one grid offset, with the cell weight n^{−d} folded in.
/// The matrix part is stored as k11, k12, k22 and as its eigen decomposition
/// l1 v v^T + l2 v⊥ v⊥^T with v = (cos, sin).
#[derive(Clone, Copy, Debug, Default)]
pub struct OffsetKernel<T> {
    pub k11: T,
    pub k12: T,
    pub k22: T,
    pub l1: T,
    pub l2: T,
    pub cos: T,
    pub sin: T,
    pub scalar: T,
}

impl<T: Real> OffsetKernel<T> {
    fn from_matrix(k11: f64, k12: f64, k22: f64, scalar: f64) -> Self {
        let mid = 0.5 * (k11 + k22);
        let rad = (0.25 * (k11 - k22).powi(2) + k12 * k12).sqrt();
        let phi = 0.5 * (2.0 * k12).atan2(k11 - k22);
        OffsetKernel {
            k11: lit(k11),
            k12: lit(k12),
            k22: lit(k22),
            l1: lit((mid + rad).max(0.0)),
            l2: lit((mid - rad).max(0.0)),
            cos: lit(phi.cos()),
            sin: lit(phi.sin()),
            scalar: lit(scalar),
        }
    }

    /// Δᵀ K Δ via the eigen decomposition.
    #[inline]
    pub fn projected_energy(&self, d0: T, d1: T) -> T {
        let p = self.cos * d0 + self.sin * d1;
        let q = self.cos * d1 - self.sin * d0;
        self.l1 * p * p + self.l2 * q * q
    }

    /// Δᵀ (tr K · I − K) Δ ≥ 0: the gap between full and projected energies.
    #[inline]
    pub fn transverse_energy(&self, d0: T, d1: T) -> T {
        let p = self.cos * d0 + self.sin * d1;
        let q = self.cos * d1 - self.sin * d0;
        self.l2 * p * p + self.l1 * q * q
    }
}

/// Periodized bond kernel on every grid offset z = (p/n, q/n).
#[derive(Clone, Debug)]
pub struct KernelTable<T> {
    n: usize,
    entries: Vec<OffsetKernel<T>>,
}

impl<T: Real> KernelTable<T> {
    /// Σ over images w = z + m, 0 < |w| < r_max, of window(|w|) ŵ⊗ŵ |w|^{−exponent},
    /// plus the far-field mass beyond the window as a constant (|S^{d−1}|/d)·I.
    pub fn images(n: usize, exponent: f64, r_max: f64) -> Self {
        let d = DIM as f64;
        let beta = exponent - d;
        let tail_scalar = sphere_area(DIM - 1) * window_tail_moment(beta, r_max);
        let tail_matrix = tail_scalar / d;
        let cellw = 1.0 / (n * n) as f64;
        let reach = r_max.ceil() as i64 + 1;
        let entries = (0..n * n)
            .map(|pq| {
                let z = [(pq / n) as f64 / n as f64, (pq % n) as f64 / n as f64];
                let (mut a, mut b, mut c, mut sc) = (0.0, 0.0, 0.0, 0.0);
                for m1 in -reach..=reach {
                    let mut ra = 0.0;
                    let mut rb = 0.0;
                    let mut rc = 0.0;
                    let mut rs = 0.0;
                    for m2 in -reach..=reach {
                        let w = [z[0] + m1 as f64, z[1] + m2 as f64];
                        let r2 = w[0] * w[0] + w[1] * w[1];
                        if r2 == 0.0 || r2 >= r_max * r_max {
                            continue;
                        }
                        let r = r2.sqrt();
                        let k = image_window(r, r_max) * r.powf(-exponent);
                        ra += k * w[0] * w[0] / r2;
                        rb += k * w[0] * w[1] / r2;
                        rc += k * w[1] * w[1] / r2;
                        rs += k;
                    }
                    a += ra;
                    b += rb;
                    c += rc;
                    sc += rs;
                }
                OffsetKernel::from_matrix(
                    (a + tail_matrix) * cellw,
                    b * cellw,
                    (c + tail_matrix) * cellw,
                    (sc + tail_scalar) * cellw,
                )
            })
            .collect();
        Self { n, entries }
    }

    /// Minimum-image kernel truncated to 0 < |z| ≤ h.
    pub fn horizon(n: usize, exponent: f64, h: f64) -> Self {
        let cellw = 1.0 / (n * n) as f64;
        let entries = (0..n * n)
            .map(|pq| {
                let z = minimum_image([(pq / n) as f64 / n as f64, (pq % n) as f64 / n as f64], [0.0, 0.0]);
                let r2 = z[0] * z[0] + z[1] * z[1];
                if r2 == 0.0 || r2 > h * h {
                    return OffsetKernel::from_matrix(0.0, 0.0, 0.0, 0.0);
                }
                let k = r2.sqrt().powf(-exponent) * cellw;
                OffsetKernel::from_matrix(k * z[0] * z[0] / r2, k * z[0] * z[1] / r2, k * z[1] * z[1] / r2, k)
            })
            .collect();
        Self { n, entries }
    }

    /// Operator kernel of `spec` (exponent d + 2s).
    pub fn for_spec(n: usize, spec: &KernelSpec) -> Self {
        let e = DIM as f64 + 2.0 * spec.s();
        match spec.horizon() {
            Horizon::Infinite => Self::images(n, e, spec.r_max()),
            Horizon::Finite(h) => Self::horizon(n, e, h),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Kernel at offset (p, q).
    #[inline]
    pub fn at(&self, p: usize, q: usize) -> &OffsetKernel<T> {
        &self.entries[p * self.n + q]
    }

    pub fn entries(&self) -> &[OffsetKernel<T>] {
        &self.entries
    }

    /// Σ over offsets of the scalar kernel: a discrete ‖k‖₁.
    pub fn scalar_mass(&self) -> f64 {
        self.entries.iter().map(|e| f64_of(e.scalar)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_checkerboard_values() {
        assert_eq!(eval_coefficient(&CoefficientField::constant(1.0), [0.1, 0.2], [0.7, 0.3]), 1.0);
        let cb = CoefficientField::checkerboard(1.0, 10.0, 4);
        assert_eq!(eval_coefficient(&cb, [0.01, 0.02], [0.2, 0.1]), 1.0);
        assert_eq!(eval_coefficient(&cb, [0.3, 0.02], [0.4, 0.1]), 10.0);
        assert_eq!(eval_coefficient(&cb, [0.01, 0.02], [0.3, 0.1]), 5.5);
    }

    #[test]
    fn axis_bond() {
        let spec = KernelSpec::infinite(0.3).unwrap();
        let one = CoefficientField::constant(1.0);
        let r: f64 = 0.125;
        let m = bond_matrix([0.5 + r, 0.25], [0.5, 0.25], &spec, &one).unwrap();
        let expect = r.powf(-2.6);
        assert!((m[0][0] - expect).abs() < 1e-12 * expect);
        assert!(m[0][1].abs() < 1e-12 && m[1][1].abs() < 1e-12);
        assert!(matches!(bond_matrix([0.3, 0.3], [0.3, 0.3], &spec, &one), Err(Error::Diagonal)));
    }

    #[test]
    fn finite_horizon_cuts_off() {
        let spec = KernelSpec::finite(0.5, 0.1).unwrap();
        let one = CoefficientField::constant(1.0);
        let m = bond_matrix([0.0, 0.0], [0.2, 0.0], &spec, &one).unwrap();
        assert_eq!(m, [[0.0; 2]; 2]);
        // wraps across the seam
        let m = bond_matrix([0.02, 0.0], [0.97, 0.0], &spec, &one).unwrap();
        assert!(m[0][0] > 0.0);
    }

    #[test]
    fn identity_gradient_correction() {
        let g = [[1.0, 0.0], [0.0, 1.0]];
        let v = near_diagonal_correction(&g, 0.1, 0.4).unwrap();
        let expect = 0.1f64.powf(1.2) / 1.2 * 2.0 * std::f64::consts::PI;
        assert!((v - expect).abs() < 1e-14);
        assert_eq!(near_diagonal_correction(&[[0.0; 2]; 2], 0.1, 0.4).unwrap(), 0.0);
        assert!(near_diagonal_correction(&g, 0.1, 1.0).is_err());
    }

    #[test]
    fn q_correction_reduces_to_closed_forms() {
        let g = [[0.3, -1.2], [0.7, 2.1]];
        let a = near_diagonal_correction_q(&g, 0.05, 0.35, 2.0, true).unwrap();
        let b = near_diagonal_correction(&g, 0.05, 0.35).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
        let a = near_diagonal_correction_q(&g, 0.05, 0.35, 2.0, false).unwrap();
        let b = near_diagonal_correction_full(&g, 0.05, 0.35).unwrap();
        assert!((a - b).abs() < 1e-12 * b);
    }

    #[test]
    fn random_symmetric_is_resolution_independent() {
        let a = CoefficientField::random_symmetric(1.0, 4.0, 9);
        let s32 = a.sample(32);
        let s64 = a.sample(64);
        assert_eq!(s32[3 * 32 + 5], s64[6 * 64 + 10]);
        let (lo, hi) = a.bounds();
        assert!(s64.iter().all(|v| *v >= lo && *v <= hi));
    }

    #[test]
    fn kernel_table_trace_matches_scalar() {
        let t = KernelTable::<f64>::images(8, 2.8, 3.0);
        for e in t.entries() {
            assert!(((e.k11 + e.k22) - e.scalar).abs() <= 1e-12 * e.scalar);
            assert!(((e.l1 + e.l2) - e.scalar).abs() <= 1e-12 * e.scalar);
        }
    }

    #[test]
    fn normalization_matches_condition() {
        let (s, h) = (0.3, 0.2);
        let c = local_limit_normalization(2, s, h);
        let lhs = c * h.powf(2.0 - 2.0 * s) / (2.0 - 2.0 * s) * 2.0 * std::f64::consts::PI / 8.0 * 0.5;
        assert!((lhs - 1.0).abs() < 1e-14);
    }
}
