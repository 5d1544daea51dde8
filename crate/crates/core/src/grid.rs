//! Periodic grid fields on the unit torus, the discrete Fourier contract and L^p norms.
//!
//! Values sit at x = (i/n, j/n). Vector fields store component-major data,
//! `data[c·n² + i·n + j]`. Fourier coefficients use
//! `coeff(ξ) = n⁻² Σ f(x) e^{−2πiξ·x}` with ξ ∈ {−n/2, …, n/2−1}²
//! stored in FFT order.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{f64_of, lit, Real};
use crate::{Error, Result};

/// Spatial dimension.
pub const DIM: usize = 2;

/// Signed frequency of FFT index `k` on an `n`-point axis.
#[inline]
pub fn freq(n: usize, k: usize) -> i64 {
    if k < n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// FFT index of signed frequency `xi`.
#[inline]
pub fn index_of(n: usize, xi: i64) -> usize {
    xi.rem_euclid(n as i64) as usize
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!("grid resolution must be even and ≥ 2, got {n}")));
    }
    Ok(())
}

/// Real field with `m` components on an n×n periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridVectorField<T> {
    n: usize,
    m: usize,
    data: Vec<T>,
}

impl<T: Real> GridVectorField<T> {
    pub fn new(n: usize, m: usize, data: Vec<T>) -> Result<Self> {
        check_n(n)?;
        if m == 0 || data.len() != m * n * n {
            return Err(Error::Shape(format!("expected {} values for n = {n}, m = {m}, got {}", m * n * n, data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid field"));
        }
        Ok(Self { n, m, data })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self { n, m, data: vec![T::zero(); m * n * n] }
    }

    /// Build from `f(c, i, j)`.
    pub fn from_fn(n: usize, m: usize, f: impl Fn(usize, usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(m * n * n);
        for c in 0..m {
            for i in 0..n {
                for j in 0..n {
                    data.push(f(c, i, j));
                }
            }
        }
        Self { n, m, data }
    }

    /// Build from a function of the point x ∈ [0,1)².
    pub fn from_point_fn(n: usize, m: usize, f: impl Fn(usize, [f64; 2]) -> f64) -> Self {
        Self::from_fn(n, m, |c, i, j| lit(f(c, point(n, i, j))))
    }

    pub fn from_components(parts: &[ScalarGridField<T>]) -> Result<Self> {
        let n = parts.first().map(|p| p.n).ok_or_else(|| Error::Shape("no components".into()))?;
        if parts.iter().any(|p| p.n != n) {
            return Err(Error::Shape("components differ in resolution".into()));
        }
        let data = parts.iter().flat_map(|p| p.values.iter().copied()).collect();
        Self::new(n, parts.len(), data)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of components (d for displacement fields, d+1 for Poisson extensions).
    pub fn components(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn into_values(self) -> Vec<T> {
        self.data
    }

    pub fn component(&self, c: usize) -> &[T] {
        let nn = self.n * self.n;
        &self.data[c * nn..(c + 1) * nn]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [T] {
        let nn = self.n * self.n;
        &mut self.data[c * nn..(c + 1) * nn]
    }

    pub fn component_field(&self, c: usize) -> ScalarGridField<T> {
        ScalarGridField { n: self.n, values: self.component(c).to_vec() }
    }

    #[inline]
    pub fn at(&self, c: usize, i: usize, j: usize) -> T {
        self.data[(c * self.n + i) * self.n + j]
    }

    /// n⁻² Σ_x over component `c`.
    pub fn mean(&self, c: usize) -> T {
        let nn = lit::<T>((self.n * self.n) as f64);
        self.component(c).iter().copied().sum::<T>() / nn
    }

    pub fn max_abs_mean(&self) -> T {
        (0..self.m).map(|c| self.mean(c).abs()).fold(T::zero(), T::max)
    }

    pub fn remove_mean(&self) -> Self {
        let mut out = self.clone();
        for c in 0..self.m {
            let mu = self.mean(c);
            out.component_mut(c).iter_mut().for_each(|v| *v = *v - mu);
        }
        out
    }

    /// Mean inner product n⁻² Σ_x ⟨u(x), v(x)⟩.
    pub fn dot(&self, other: &Self) -> T {
        assert_eq!((self.n, self.m), (other.n, other.m), "field shapes differ");
        let s: T = self.data.iter().zip(&other.data).map(|(&a, &b)| a * b).sum();
        s / lit((self.n * self.n) as f64)
    }

    /// (n⁻² Σ |u|²)^{1/2}.
    pub fn l2_norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Pointwise Euclidean norm |u(x)|.
    pub fn pointwise_norm(&self) -> ScalarGridField<T> {
        let nn = self.n * self.n;
        let values = (0..nn)
            .map(|p| (0..self.m).map(|c| self.data[c * nn + p].powi(2)).sum::<T>().sqrt())
            .collect();
        ScalarGridField { n: self.n, values }
    }

    pub fn scale(&self, a: T) -> Self {
        Self { n: self.n, m: self.m, data: self.data.iter().map(|&v| a * v).collect() }
    }

    /// a·self + b·other.
    pub fn lincomb(&self, a: T, other: &Self, b: T) -> Self {
        assert_eq!((self.n, self.m), (other.n, other.m), "field shapes differ");
        let data = self.data.iter().zip(&other.data).map(|(&x, &y)| a * x + b * y).collect();
        Self { n: self.n, m: self.m, data }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.lincomb(T::one(), other, T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.lincomb(T::one(), other, -T::one())
    }

    /// Translate by whole cells: out(i, j) = self(i − di, j − dj).
    pub fn shifted(&self, di: usize, dj: usize) -> Self {
        let n = self.n;
        Self::from_fn(n, self.m, |c, i, j| self.at(c, (i + n - di % n) % n, (j + n - dj % n) % n))
    }

    /// Lossless cast to another scalar type through f64.
    pub fn cast<U: Real>(&self) -> GridVectorField<U> {
        GridVectorField { n: self.n, m: self.m, data: self.data.iter().map(|&v| lit(f64_of(v))).collect() }
    }
}

/// Real scalar field on an n×n periodic grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGridField<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Real> ScalarGridField<T> {
    pub fn new(n: usize, values: Vec<T>) -> Result<Self> {
        check_n(n)?;
        if values.len() != n * n {
            return Err(Error::Shape(format!("expected {} values, got {}", n * n, values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("scalar field"));
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let values = (0..n * n).map(|p| f(p / n, p % n)).collect();
        Self { n, values }
    }

    pub fn from_point_fn(n: usize, f: impl Fn([f64; 2]) -> f64) -> Self {
        Self::from_fn(n, |i, j| lit(f(point(n, i, j))))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn max(&self) -> T {
        self.values.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn min(&self) -> T {
        self.values.iter().fold(T::infinity(), |m, &v| m.min(v))
    }

    pub fn mean(&self) -> T {
        self.values.iter().copied().sum::<T>() / lit((self.n * self.n) as f64)
    }

    pub fn shifted(&self, di: usize, dj: usize) -> Self {
        let n = self.n;
        Self::from_fn(n, |i, j| self.at((i + n - di % n) % n, (j + n - dj % n) % n))
    }

    pub fn as_vector(&self) -> GridVectorField<T> {
        GridVectorField { n: self.n, m: 1, data: self.values.clone() }
    }
}

/// Grid point (i/n, j/n).
#[inline]
pub fn point(n: usize, i: usize, j: usize) -> [f64; 2] {
    [i as f64 / n as f64, j as f64 / n as f64]
}

/// Fourier coefficients of an `m`-component field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVectorField<T> {
    n: usize,
    m: usize,
    coeffs: Vec<Complex<T>>,
}

impl<T: Real> SpectralVectorField<T> {
    pub fn new(n: usize, m: usize, coeffs: Vec<Complex<T>>) -> Result<Self> {
        check_n(n)?;
        if m == 0 || coeffs.len() != m * n * n {
            return Err(Error::Shape(format!("expected {} coefficients, got {}", m * n * n, coeffs.len())));
        }
        Ok(Self { n, m, coeffs })
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self { n, m, coeffs: vec![Complex::new(T::zero(), T::zero()); m * n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn components(&self) -> usize {
        self.m
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coeffs
    }

    #[inline]
    pub fn flat_index(&self, c: usize, k1: usize, k2: usize) -> usize {
        (c * self.n + k1) * self.n + k2
    }

    /// Coefficient of component `c` at signed frequency ξ.
    pub fn coeff(&self, c: usize, xi: [i64; 2]) -> Complex<T> {
        self.coeffs[self.flat_index(c, index_of(self.n, xi[0]), index_of(self.n, xi[1]))]
    }

    pub fn set_coeff(&mut self, c: usize, xi: [i64; 2], v: Complex<T>) {
        let k = self.flat_index(c, index_of(self.n, xi[0]), index_of(self.n, xi[1]));
        self.coeffs[k] = v;
    }

    /// Largest |coeff(−ξ) − conj(coeff(ξ))|.
    pub fn symmetry_defect(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for c in 0..self.m {
            for k1 in 0..n {
                for k2 in 0..n {
                    let a = self.coeffs[self.flat_index(c, k1, k2)];
                    let b = self.coeffs[self.flat_index(c, (n - k1) % n, (n - k2) % n)];
                    worst = worst.max((a - b.conj()).norm());
                }
            }
        }
        worst
    }

    /// Σ_ξ |coeff(ξ)|² over all components.
    pub fn energy(&self) -> T {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Two-dimensional complex FFT on n×n row-major buffers.
pub struct Fft2<T: Real> {
    n: usize,
    fwd: Arc<dyn Fft<T>>,
    inv: Arc<dyn Fft<T>>,
}

impl<T: Real> Fft2<T> {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { n, fwd: planner.plan_fft_forward(n), inv: planner.plan_fft_inverse(n) }
    }

    fn transpose(&self, buf: &mut [Complex<T>]) {
        let n = self.n;
        for i in 0..n {
            for j in i + 1..n {
                buf.swap(i * n + j, j * n + i);
            }
        }
    }

    fn run(&self, fft: &Arc<dyn Fft<T>>, buf: &mut [Complex<T>]) {
        fft.process(buf);
        self.transpose(buf);
        fft.process(buf);
        self.transpose(buf);
    }

    /// Σ_x f(x) e^{−2πiξ·x}, unnormalized.
    pub fn forward(&self, buf: &mut [Complex<T>]) {
        self.run(&self.fwd, buf)
    }

    /// Σ_ξ F(ξ) e^{+2πiξ·x}, unnormalized.
    pub fn inverse(&self, buf: &mut [Complex<T>]) {
        self.run(&self.inv, buf)
    }
}

/// Fourier coefficients of `f` (exact for band-limited fields).
pub fn forward_transform<T: Real>(f: &GridVectorField<T>) -> SpectralVectorField<T> {
    let n = f.n;
    let fft = Fft2::new(n);
    let scale = T::one() / lit((n * n) as f64);
    let mut coeffs = Vec::with_capacity(f.data.len());
    for c in 0..f.m {
        let mut buf: Vec<Complex<T>> = f.component(c).iter().map(|&v| Complex::new(v, T::zero())).collect();
        fft.forward(&mut buf);
        coeffs.extend(buf.into_iter().map(|z| z * scale));
    }
    SpectralVectorField { n, m: f.m, coeffs }
}

/// Imaginary residue tolerated by [`inverse_transform`], relative to the real part.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;

/// [`IMAG_RESIDUE_TOL`], widened to the rounding level of low-precision scalars.
pub fn imag_residue_tol<T: Real>() -> f64 {
    IMAG_RESIDUE_TOL.max(64.0 * f64_of(T::epsilon()))
}

/// Real field with the given coefficients; fails if the spectrum is not conjugate symmetric.
pub fn inverse_transform<T: Real>(spec: &SpectralVectorField<T>) -> Result<GridVectorField<T>> {
    let n = spec.n;
    let fft = Fft2::new(n);
    let mut data = Vec::with_capacity(spec.coeffs.len());
    let mut max_re = 0.0f64;
    let mut max_im = 0.0f64;
    for c in 0..spec.m {
        let nn = n * n;
        let mut buf = spec.coeffs[c * nn..(c + 1) * nn].to_vec();
        fft.inverse(&mut buf);
        for z in buf {
            max_re = max_re.max(f64_of(z.re).abs());
            max_im = max_im.max(f64_of(z.im).abs());
            data.push(z.re);
        }
    }
    let tol = imag_residue_tol::<T>();
    if max_im > tol * max_re.max(f64::MIN_POSITIVE) {
        return Err(Error::SymmetryViolation { residue: max_im / max_re.max(f64::MIN_POSITIVE), tolerance: tol });
    }
    GridVectorField::new(n, spec.m, data)
}

/// All signed representatives of FFT index (k1, k2): a Nyquist index stands for both ∓n/2.
pub fn representatives(n: usize, k1: usize, k2: usize) -> Vec<[f64; 2]> {
    let opts = |k: usize| {
        let f = freq(n, k) as f64;
        if k == n / 2 {
            vec![f, -f]
        } else {
            vec![f]
        }
    };
    let mut out = Vec::with_capacity(4);
    for a in opts(k1) {
        for b in opts(k2) {
            out.push([a, b]);
        }
    }
    out
}

/// Apply a per-mode matrix symbol. `symbol(ξ, out)` writes the `m_out × m_in`
/// block (row-major) at frequency ξ. On Nyquist indices the symbol is averaged
/// over the representatives so real fields stay real.
pub fn apply_multiplier<T, F>(f: &SpectralVectorField<T>, m_out: usize, symbol: F) -> SpectralVectorField<T>
where
    T: Real,
    F: Fn([f64; 2], &mut [Complex<f64>]),
{
    let (n, m_in) = (f.n, f.m);
    let nn = n * n;
    let mut out = SpectralVectorField::zeros(n, m_out);
    let mut block = vec![Complex::new(0.0, 0.0); m_out * m_in];
    let mut acc = vec![Complex::new(0.0, 0.0); m_out * m_in];
    for k1 in 0..n {
        for k2 in 0..n {
            let reps = representatives(n, k1, k2);
            acc.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
            for xi in &reps {
                symbol(*xi, &mut block);
                acc.iter_mut().zip(&block).for_each(|(a, b)| *a += b);
            }
            let w = 1.0 / reps.len() as f64;
            let p = k1 * n + k2;
            for r in 0..m_out {
                let mut z = Complex::new(T::zero(), T::zero());
                for c in 0..m_in {
                    let s = acc[r * m_in + c] * w;
                    z = z + Complex::new(lit::<T>(s.re), lit::<T>(s.im)) * f.coeffs[c * nn + p];
                }
                out.coeffs[r * nn + p] = z;
            }
        }
    }
    out
}

/// Apply a scalar symbol to every component.
pub fn apply_scalar_multiplier<T, F>(f: &SpectralVectorField<T>, symbol: F) -> SpectralVectorField<T>
where
    T: Real,
    F: Fn([f64; 2]) -> Complex<f64>,
{
    let m = f.m;
    apply_multiplier(f, m, |xi, out| {
        let v = symbol(xi);
        out.iter_mut().for_each(|z| *z = Complex::new(0.0, 0.0));
        for c in 0..m {
            out[c * m + c] = v;
        }
    })
}

/// (n⁻² Σ |g|^p)^{1/p}.
pub fn lp_norm<T: Real>(g: &ScalarGridField<T>, p: f64) -> Result<T> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidParameter(format!("L^p exponent must lie in [1, ∞), got {p}")));
    }
    let nn = (g.n * g.n) as f64;
    let pt = lit::<T>(p);
    let s: T = g.values.iter().map(|v| v.abs().powf(pt)).sum();
    Ok((s / lit(nn)).powf(T::one() / pt))
}

/// L^p norm of the pointwise Euclidean norm of a vector field.
pub fn lp_norm_vector<T: Real>(f: &GridVectorField<T>, p: f64) -> Result<T> {
    lp_norm(&f.pointwise_norm(), p)
}

pub mod io {
    //! Field files: one JSON header line, then CSV rows `i,j,v1,…,vm`.

    use std::fs;
    use std::io::{BufRead, BufReader, Write};
    use std::path::Path;

    use serde::{Deserialize, Serialize};

    use super::{GridVectorField, DIM};
    use crate::scalar::Real;
    use crate::{Error, Result};

    #[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
    pub struct FieldHeader {
        pub n: usize,
        pub d: usize,
        pub role: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub s: Option<f64>,
    }

    impl FieldHeader {
        pub fn new(n: usize, role: &str, s: Option<f64>) -> Self {
            Self { n, d: DIM, role: role.to_string(), s }
        }
    }

    /// Serialize to the field file text. Values use shortest round-trip formatting.
    pub fn to_text<T: Real>(field: &GridVectorField<T>, header: &FieldHeader) -> Result<String> {
        let n = field.n();
        let m = field.components();
        let mut out = serde_json::to_string(header).map_err(|e| Error::Format(e.to_string()))?;
        out.push('\n');
        out.push_str("i,j");
        for c in 1..=m {
            out.push_str(&format!(",v{c}"));
        }
        out.push('\n');
        for i in 0..n {
            for j in 0..n {
                out.push_str(&format!("{i},{j}"));
                for c in 0..m {
                    out.push_str(&format!(",{}", field.at(c, i, j)));
                }
                out.push('\n');
            }
        }
        Ok(out)
    }

    /// Parse field file text.
    pub fn from_text<T: Real>(text: &str) -> Result<(FieldHeader, GridVectorField<T>)> {
        let mut lines = text.lines();
        let header: FieldHeader = serde_json::from_str(lines.next().ok_or_else(|| Error::Format("empty file".into()))?)
            .map_err(|e| Error::Format(format!("header: {e}")))?;
        let cols = lines.next().ok_or_else(|| Error::Format("missing column header".into()))?;
        let names: Vec<&str> = cols.split(',').collect();
        if names.len() < 3 || names[0] != "i" || names[1] != "j" {
            return Err(Error::Format(format!("bad column header `{cols}`")));
        }
        let m = names.len() - 2;
        let n = header.n;
        let mut data = vec![T::zero(); m * n * n];
        let mut seen = vec![false; n * n];
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != m + 2 {
                return Err(Error::Format(format!("row {}: expected {} columns", lineno + 3, m + 2)));
            }
            let bad = |what: &str| Error::Format(format!("row {}: bad {what}", lineno + 3));
            let i: usize = parts[0].parse().map_err(|_| bad("i"))?;
            let j: usize = parts[1].parse().map_err(|_| bad("j"))?;
            if i >= n || j >= n {
                return Err(bad("index"));
            }
            seen[i * n + j] = true;
            for c in 0..m {
                data[(c * n + i) * n + j] = parts[c + 2].parse().map_err(|_| bad("value"))?;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Format("missing grid points".into()));
        }
        Ok((header, GridVectorField::new(n, m, data)?))
    }

    pub fn write_field<T: Real>(path: &Path, field: &GridVectorField<T>, header: &FieldHeader) -> Result<()> {
        let text = to_text(field, header)?;
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(text.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn read_field<T: Real>(path: &Path) -> Result<(FieldHeader, GridVectorField<T>)> {
        let mut text = String::new();
        for line in BufReader::new(fs::File::open(path)?).lines() {
            text.push_str(&line?);
            text.push('\n');
        }
        from_text(&text)
    }
}
