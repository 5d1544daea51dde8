//! Conjugate gradients for (ϖI + 𝕃_𝔥)u = G and the weak-form residual.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::grid::{GridVectorField, DIM};
use crate::kernels::{CoefficientField, Horizon, KernelSpec};
use crate::marcinkiewicz::w_seminorm_spectral;
use crate::operator::{spectral_apply, DirectOperator};
use crate::random::BandLimited;
use crate::scalar::{f64_of, lit, Real};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorPath {
    /// Matrix-free quadrature operator.
    Direct,
    /// Fourier multiplier; A constant and 𝔥 = ∞ only.
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub varpi: f64,
    pub cg_tol: f64,
    pub max_iter: usize,
    pub operator_path: OperatorPath,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { varpi: 1.0, cg_tol: 1e-10, max_iter: 1000, operator_path: OperatorPath::Direct }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.varpi >= 0.0 && self.varpi.is_finite()) {
            return Err(Error::InvalidParameter(format!("varpi must be ≥ 0, got {}", self.varpi)));
        }
        if !(self.cg_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("cg_tol must be positive, got {}", self.cg_tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("max_iter must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SolveOutcome<T> {
    pub u: GridVectorField<T>,
    pub iterations: usize,
    /// Final ‖(ϖI + 𝕃_𝔥)u − G‖₂/‖G‖₂.
    pub residual: f64,
    /// Relative residual after each iteration, starting from the initial guess.
    pub history: Vec<f64>,
}

impl<T> SolveOutcome<T> {
    pub fn history_csv(&self) -> String {
        let mut out = String::from("iteration,residual\n");
        for (k, r) in self.history.iter().enumerate() {
            let _ = writeln!(out, "{k},{r:e}");
        }
        out
    }
}

/// Plain CG from x₀ = 0. `visit(k, x_k, r_k)` is called after every update.
pub fn conjugate_gradient<T: Real>(
    apply: impl Fn(&GridVectorField<T>) -> Result<GridVectorField<T>>,
    b: &GridVectorField<T>,
    tol: f64,
    max_iter: usize,
    project: bool,
    mut visit: impl FnMut(usize, &GridVectorField<T>, f64),
) -> Result<SolveOutcome<T>> {
    let n = b.n();
    let m = b.components();
    let bnorm = f64_of(b.l2_norm());
    let mut x = GridVectorField::<T>::zeros(n, m);
    let mut history = vec![if bnorm == 0.0 { 0.0 } else { 1.0 }];
    if bnorm == 0.0 {
        return Ok(SolveOutcome { u: x, iterations: 0, residual: 0.0, history });
    }
    let fix = |v: GridVectorField<T>| if project { v.remove_mean() } else { v };
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    for k in 1..=max_iter {
        let ap = fix(apply(&p)?);
        let pap = p.dot(&ap);
        if !(f64_of(pap) > 0.0) {
            return Err(Error::InvalidParameter(format!("operator not positive definite: ⟨p, Ap⟩ = {:e}", f64_of(pap))));
        }
        let alpha = rr / pap;
        x = x.lincomb(T::one(), &p, alpha);
        r = fix(r.lincomb(T::one(), &ap, -alpha));
        let rr_new = r.dot(&r);
        let rel = f64_of(rr_new.sqrt()) / bnorm;
        history.push(rel);
        visit(k, &x, rel);
        if rel <= tol {
            return Ok(SolveOutcome { u: x, iterations: k, residual: rel, history });
        }
        let beta = rr_new / rr;
        p = r.lincomb(T::one(), &p, beta);
        rr = rr_new;
    }
    Err(Error::NotConverged { iterations: max_iter, residual: *history.last().expect("nonempty") })
}

fn check_rhs<T: Real>(g: &GridVectorField<T>, opts: &SolveOptions) -> Result<bool> {
    if g.components() != DIM {
        return Err(Error::Shape(format!("expected a {DIM}-component field, got {}", g.components())));
    }
    let mean = f64_of(g.max_abs_mean());
    if opts.varpi == 0.0 {
        let scale = 1.0 + f64_of(g.max_abs());
        if mean > 1e-12 * scale {
            return Err(Error::NonzeroMean(mean));
        }
        return Ok(true);
    }
    Ok(false)
}

/// Solve (ϖI + 𝕃_𝔥)u = G. With ϖ = 0 the solve runs on mean-zero fields.
pub fn solve_regularized<T: Real>(spec: &KernelSpec, a: &CoefficientField, g: &GridVectorField<T>, opts: &SolveOptions) -> Result<SolveOutcome<T>> {
    opts.validate()?;
    a.validate()?;
    let project = check_rhs(g, opts)?;
    let g = if project { g.remove_mean() } else { g.clone() };
    match opts.operator_path {
        OperatorPath::Spectral => {
            let alpha = match (spec.horizon(), a) {
                (Horizon::Infinite, CoefficientField::Constant { alpha }) => *alpha,
                _ => return Err(Error::InvalidParameter("spectral path needs 𝔥 = ∞ and a constant coefficient".into())),
            };
            let u = spectral_apply(&g, spec.s(), alpha * spec.c_h(), opts.varpi, true)?;
            let lu = spectral_apply(&u, spec.s(), alpha * spec.c_h(), opts.varpi, false)?;
            let gn = f64_of(g.l2_norm());
            let residual = if gn == 0.0 { 0.0 } else { f64_of(lu.sub(&g).l2_norm()) / gn };
            Ok(SolveOutcome { u, iterations: 0, residual, history: vec![residual] })
        }
        OperatorPath::Direct => {
            let op = DirectOperator::<T>::new(spec, a, g.n())?;
            let w = lit::<T>(opts.varpi);
            conjugate_gradient(|v| Ok(op.apply(v)?.lincomb(T::one(), v, w)), &g, opts.cg_tol, opts.max_iter, project, |_, _, _| {})
        }
    }
}

/// max over seeded test fields φ, ‖φ‖₂² + [φ]²_W = 1, of |ℰ_𝔥(u, φ) − ⟨F, φ⟩|.
pub fn weak_residual<T: Real>(u: &GridVectorField<T>, f: &GridVectorField<T>, spec: &KernelSpec, a: &CoefficientField, trial_count: usize, seed: u64) -> Result<f64> {
    if u.n() != f.n() || u.components() != f.components() {
        return Err(Error::Shape("u and F differ in shape".into()));
    }
    let n = u.n();
    let op = DirectOperator::<T>::new(spec, a, n)?;
    let lu = op.apply(u)?;
    let kmax = (n / 4).clamp(1, 6);
    let mut worst: f64 = 0.0;
    for k in 0..trial_count {
        let phi: GridVectorField<T> = BandLimited::new(kmax).sample(n, seed.wrapping_add(k as u64))?;
        let w = w_seminorm_spectral(&phi, spec.s())?;
        let l2 = f64_of(phi.l2_norm());
        let norm = (l2 * l2 + w * w).sqrt();
        let phi = phi.scale(lit(1.0 / norm));
        let r = f64_of(lu.dot(&phi)) - f64_of(f.dot(&phi));
        worst = worst.max(r.abs());
    }
    Ok(worst)
}
