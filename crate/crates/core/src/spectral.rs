//! Spectra of `D+B`, `iG` and `T*T`, eigenvector maps between the first-order
//! and generator formulations, and spectral property checks.

use std::f64::consts::PI;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::coefficients::{integrate_any, CoefficientSpec};
use crate::discretization::{tol_zero, BoundaryCondition, DiscreteOperatorSet, TOL_ZERO_REL};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SpectrumSource {
    Dirac,
    Generator,
    SelfAdjoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
    /// Purely imaginary (overdamped) eigenvalue.
    Imaginary,
    Zero,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
            Branch::Imaginary => "imaginary",
            Branch::Zero => "zero",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SpaceTag {
    NodeCell,
    NodeNode,
    Node,
}

/// Eigenvalues sorted by modulus, then argument.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub eigenvalues: Vec<C64>,
    /// Weighted-norm residual `‖(A-λ)v‖ / ‖v‖`; empty when vectors were not requested.
    pub residuals: Vec<f64>,
    pub zero_flags: Vec<bool>,
    pub branches: Vec<Branch>,
    pub zero_modes: usize,
    pub source: SpectrumSource,
    pub tol_zero: f64,
    /// 2-norm of the operator, or an upper bound for large matrices.
    pub op_norm: f64,
    /// Eigenvectors in the weighted-similarity frame, one column per eigenvalue.
    pub vectors: Option<CMat>,
}

/// One eigenpair with a unit weighted-norm vector in the original frame.
#[derive(Clone, Debug)]
pub struct EigenPair {
    pub lambda: C64,
    pub vector: Vec<C64>,
    pub space: SpaceTag,
    pub residual: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn nonzero(&self) -> Vec<C64> {
        self.eigenvalues.iter().zip(&self.zero_flags).filter(|(_, z)| !**z).map(|(l, _)| *l).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Eigenvalues of one branch, sorted by `|Re λ|`.
    pub fn branch(&self, b: Branch) -> Vec<C64> {
        let mut v: Vec<C64> =
            self.eigenvalues.iter().zip(&self.branches).filter(|(_, x)| **x == b).map(|(l, _)| *l).collect();
        v.sort_by(|a, b| a.re.abs().total_cmp(&b.re.abs()).then(a.im.total_cmp(&b.im)));
        v
    }

    /// CSV with columns `index,re_lambda,im_lambda,residual,zero_mode_flag,branch`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("index,re_lambda,im_lambda,residual,zero_mode_flag,branch\n");
        for k in 0..self.len() {
            let res = self.residuals.get(k).map(|r| crate::report::num(*r)).unwrap_or_else(|| "nan".into());
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                k,
                crate::report::num(self.eigenvalues[k].re),
                crate::report::num(self.eigenvalues[k].im),
                res,
                u8::from(self.zero_flags[k]),
                self.branches[k].label()
            ));
        }
        s
    }
}

fn sort_key(a: &C64, b: &C64) -> std::cmp::Ordering {
    a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg()))
}

/// 2-norm for moderate sizes, `√(‖A‖₁‖A‖∞)` beyond.
fn operator_norm(a: &CMat) -> Result<f64> {
    if a.nrows() <= 1500 {
        return linalg::norm2(a);
    }
    let n1 = (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let ni = (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    Ok((n1 * ni).sqrt())
}

fn operator_norm_real(a: &Mat<f64>) -> f64 {
    let n1 = (0..a.ncols()).map(|j| (0..a.nrows()).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    let ni = (0..a.nrows()).map(|i| (0..a.ncols()).map(|j| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    (n1 * ni).sqrt()
}

/// Tolerance below which `|Re λ|` counts as purely imaginary.
fn branch_tol(op_norm: f64) -> f64 {
    1e-9 * op_norm.max(1.0)
}

fn classify(l: C64, zero_tol: f64, op_norm: f64) -> (bool, Branch) {
    if l.norm() < zero_tol {
        (true, Branch::Zero)
    } else if l.re.abs() <= branch_tol(op_norm) {
        (false, Branch::Imaginary)
    } else if l.re > 0.0 {
        (false, Branch::Plus)
    } else {
        (false, Branch::Minus)
    }
}

fn assemble_spectrum(
    mut vals: Vec<C64>,
    vecs: Option<CMat>,
    op: Option<&CMat>,
    source: SpectrumSource,
    zero_tol: f64,
    op_norm: f64,
) -> Spectrum {
    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| sort_key(&vals[i], &vals[j]));
    vals = order.iter().map(|&k| vals[k]).collect();
    let vectors = vecs.map(|v| Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, order[j])]));
    let residuals = match (&vectors, op) {
        (Some(v), Some(a)) => {
            let av = a * v;
            (0..vals.len())
                .map(|j| {
                    let r: f64 = (0..v.nrows()).map(|i| (av[(i, j)] - vals[j] * v[(i, j)]).norm_sqr()).sum();
                    r.sqrt() / linalg::col_norm(v, j)
                })
                .collect()
        }
        _ => Vec::new(),
    };
    let (zero_flags, branches): (Vec<bool>, Vec<Branch>) = vals.iter().map(|&l| classify(l, zero_tol, op_norm)).unzip();
    let zero_modes = zero_flags.iter().filter(|z| **z).count();
    Spectrum { eigenvalues: vals, residuals, zero_flags, branches, zero_modes, source, tol_zero: zero_tol, op_norm, vectors }
}

/// Spectrum of `D+B` through the Hermitian-frame similarity, with eigenvectors and residuals.
pub fn eigen_dirac(ops: &DiscreteOperatorSet) -> Result<Spectrum> {
    eigen_dirac_with(ops, true)
}

/// As [`eigen_dirac`]; eigenvectors and residuals only when `vectors` is set.
pub fn eigen_dirac_with(ops: &DiscreteOperatorSet, vectors: bool) -> Result<Spectrum> {
    let sigma = linalg::norm2(&ops.t_tilde)?;
    let tol = TOL_ZERO_REL * sigma;
    if let Some(m) = ops.i_dirac_tilde_real() {
        // (D̃+B) = -i M with M real.
        let op_norm = operator_norm_real(&m).min(sigma + ops.b_norm());
        let minus_i = c(0.0, -1.0);
        if vectors {
            let e = m.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let vals: Vec<C64> = e.S().column_vector().iter().map(|&mu| minus_i * mu).collect();
            let mut v = e.U().to_owned();
            normalize_columns(&mut v);
            drop(m);
            let a = ops.dirac_tilde();
            return Ok(assemble_spectrum(vals, Some(v), Some(&a), SpectrumSource::Dirac, tol, op_norm));
        }
        let vals = m.eigenvalues().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let vals = vals.into_iter().map(|mu| minus_i * mu).collect();
        return Ok(assemble_spectrum(vals, None, None, SpectrumSource::Dirac, tol, op_norm));
    }
    let a = ops.dirac_tilde();
    let op_norm = operator_norm(&a)?;
    if vectors {
        let (vals, v) = linalg::eigen(&a)?;
        Ok(assemble_spectrum(vals, Some(v), Some(&a), SpectrumSource::Dirac, tol, op_norm))
    } else {
        let vals = linalg::eigenvalues(&a)?;
        Ok(assemble_spectrum(vals, None, None, SpectrumSource::Dirac, tol, op_norm))
    }
}

/// Spectrum of `iG` with eigenvectors on node ⊕ node space.
pub fn eigen_generator(ops: &DiscreteOperatorSet) -> Result<Spectrum> {
    let tol = tol_zero(ops)?;
    let a = linalg::scale(&ops.generator_tilde(), I);
    let op_norm = operator_norm(&a)?;
    let (vals, v) = if let Some(g) = ops.generator_tilde_real() {
        let e = g.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let mut v = e.U().to_owned();
        normalize_columns(&mut v);
        (e.S().column_vector().iter().map(|&nu| I * nu).collect(), v)
    } else {
        linalg::eigen(&a)?
    };
    Ok(assemble_spectrum(vals, Some(v), Some(&a), SpectrumSource::Generator, tol, op_norm))
}

/// Spectrum of `T*T` (real, ascending in modulus).
pub fn eigen_laplacian(ops: &DiscreteOperatorSet) -> Result<Spectrum> {
    let tol = tol_zero(ops)?;
    let h1 = ops.h1_tilde();
    let (vals, v) = linalg::hermitian_eigen(&h1)?;
    let op_norm = vals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let vals = vals.into_iter().map(|x| c(x, 0.0)).collect();
    Ok(assemble_spectrum(vals, Some(v), Some(&h1), SpectrumSource::SelfAdjoint, tol * tol.max(1.0), op_norm))
}

fn normalize_columns(v: &mut CMat) {
    for j in 0..v.ncols() {
        let nrm = linalg::col_norm(v, j);
        if nrm > 0.0 {
            for i in 0..v.nrows() {
                v[(i, j)] /= nrm;
            }
        }
    }
}

fn weighted_norm(x: &[C64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
}

fn normalize_weighted(x: &mut [C64], w: &[f64]) -> Result<()> {
    let n = weighted_norm(x, w);
    if !(n > 0.0) {
        return Err(Error::ZeroVector);
    }
    x.iter_mut().for_each(|v| *v /= n);
    Ok(())
}

impl Spectrum {
    /// Eigenpair `k` in the original frame, unit weighted norm.
    pub fn pair(&self, k: usize, ops: &DiscreteOperatorSet) -> Result<EigenPair> {
        let v = self.vectors.as_ref().ok_or(Error::ZeroVector)?;
        let (w, space) = match self.source {
            SpectrumSource::Dirac => (ops.wd(), SpaceTag::NodeCell),
            SpectrumSource::Generator => ([ops.wu.clone(), ops.wu.clone()].concat(), SpaceTag::NodeNode),
            SpectrumSource::SelfAdjoint => (ops.wu.clone(), SpaceTag::Node),
        };
        let mut x: Vec<C64> = (0..v.nrows()).map(|i| v[(i, k)] / w[i].sqrt()).collect();
        normalize_weighted(&mut x, &w)?;
        Ok(EigenPair { lambda: self.eigenvalues[k], vector: x, space, residual: self.residuals.get(k).copied().unwrap_or(f64::NAN) })
    }
}

/// `‖(D+B-λ)ψ‖_W / ‖ψ‖_W` for a node ⊕ cell vector.
pub fn dirac_residual(lambda: C64, psi: &[C64], ops: &DiscreteOperatorSet) -> Result<f64> {
    let (m, n) = (ops.nodes(), ops.cells());
    if psi.len() != m + n {
        return Err(Error::Boundary(format!("vector length {} != {}", psi.len(), m + n)));
    }
    let (p1, p2) = psi.split_at(m);
    let ts = linalg::matvec(&ops.tstar, p2);
    let t1 = linalg::matvec(&ops.t, p1);
    let top: Vec<C64> = (0..m).map(|k| ts[k] + c(0.0, -ops.r[k]) * p1[k] - lambda * p1[k]).collect();
    let bot: Vec<C64> = (0..n).map(|j| t1[j] - lambda * p2[j]).collect();
    let w = ops.wd();
    let nrm = weighted_norm(psi, &w);
    if !(nrm > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(weighted_norm(&[top, bot].concat(), &w) / nrm)
}

/// `‖(iG-λ)(u,v)‖_W / ‖(u,v)‖_W` for a node ⊕ node vector.
pub fn generator_residual(lambda: C64, x: &[C64], ops: &DiscreteOperatorSet) -> Result<f64> {
    let m = ops.nodes();
    if x.len() != 2 * m {
        return Err(Error::Boundary(format!("vector length {} != {}", x.len(), 2 * m)));
    }
    let (u, v) = x.split_at(m);
    let ttu = linalg::matvec(&ops.tstar, &linalg::matvec(&ops.t, u));
    let top: Vec<C64> = (0..m).map(|k| I * v[k] - lambda * u[k]).collect();
    let bot: Vec<C64> = (0..m).map(|k| I * (-ttu[k] - ops.r[k] * v[k]) - lambda * v[k]).collect();
    let w = [ops.wu.clone(), ops.wu.clone()].concat();
    let nrm = weighted_norm(x, &w);
    if !(nrm > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(weighted_norm(&[top, bot].concat(), &w) / nrm)
}

/// `‖(T*T - λ i R - λ²) u‖_Wu / ‖u‖_Wu`.
pub fn pencil_residual(lambda: C64, u: &[C64], ops: &DiscreteOperatorSet) -> Result<f64> {
    if u.len() != ops.nodes() {
        return Err(Error::Boundary(format!("vector length {} != {}", u.len(), ops.nodes())));
    }
    let nrm = weighted_norm(u, &ops.wu);
    if !(nrm > 0.0) {
        return Err(Error::ZeroVector);
    }
    let ttu = linalg::matvec(&ops.tstar, &linalg::matvec(&ops.t, u));
    let r: Vec<C64> = (0..u.len()).map(|k| ttu[k] - lambda * I * ops.r[k] * u[k] - lambda * lambda * u[k]).collect();
    Ok(weighted_norm(&r, &ops.wu) / nrm)
}

/// `(u, v) ↦ (v, -iTu)`, renormalized.
pub fn map_generator_to_dirac(pair: &EigenPair, ops: &DiscreteOperatorSet) -> Result<EigenPair> {
    let tol = tol_zero(ops)?;
    if pair.lambda.norm() < tol {
        return Err(Error::ZeroEigenvalue(pair.lambda.norm()));
    }
    let m = ops.nodes();
    let (u, v) = pair.vector.split_at(m);
    let tu = linalg::matvec(&ops.t, u);
    let mut psi: Vec<C64> = v.iter().copied().chain(tu.iter().map(|x| -I * x)).collect();
    normalize_weighted(&mut psi, &ops.wd())?;
    let residual = dirac_residual(pair.lambda, &psi, ops)?;
    Ok(EigenPair { lambda: pair.lambda, vector: psi, space: SpaceTag::NodeCell, residual })
}

/// Relative least-squares residual above which `ψ₂ ∉ ran T`.
pub const RANGE_TOL: f64 = 1e-8;

/// `(ψ₁, ψ₂) ↦ (i T⁻¹ψ₂, ψ₁)` with `T⁻¹` a weighted least-squares solve on `ran T`.
pub fn map_dirac_to_generator(pair: &EigenPair, ops: &DiscreteOperatorSet) -> Result<EigenPair> {
    let tol = tol_zero(ops)?;
    if pair.lambda.norm() < tol {
        return Err(Error::ZeroEigenvalue(pair.lambda.norm()));
    }
    let m = ops.nodes();
    let (p1, p2) = pair.vector.split_at(m);
    let sv: Vec<f64> = ops.wv.iter().map(|w| w.sqrt()).collect();
    let rhs: Vec<C64> = p2.iter().zip(&sv).map(|(x, s)| x * s).collect();
    let wt = linalg::lstsq(&ops.t_tilde, &linalg::to_col(&rhs), 1e-12)?;
    let wt = linalg::col(&wt, 0);
    let back = linalg::matvec(&ops.t_tilde, &wt);
    let miss = linalg::vnorm(&back.iter().zip(&rhs).map(|(a, b)| a - b).collect::<Vec<_>>());
    let rel = miss / linalg::vnorm(&rhs).max(f64::MIN_POSITIVE);
    if rel > RANGE_TOL {
        return Err(Error::OutsideRange(rel));
    }
    let w: Vec<C64> = wt.iter().zip(&ops.wu).map(|(x, wu)| x / wu.sqrt()).collect();
    let mut x: Vec<C64> = w.iter().map(|v| I * v).chain(p1.iter().copied()).collect();
    let weights = [ops.wu.clone(), ops.wu.clone()].concat();
    normalize_weighted(&mut x, &weights)?;
    let residual = generator_residual(pair.lambda, &x, ops)?;
    Ok(EigenPair { lambda: pair.lambda, vector: x, space: SpaceTag::NodeNode, residual })
}

/// Sine of the weighted angle between the rays through `a` and `b`.
pub fn ray_distance(a: &[C64], b: &[C64], w: &[f64]) -> f64 {
    let ip: C64 = a.iter().zip(b).zip(w).map(|((x, y), w)| x.conj() * y * w).sum();
    let na = weighted_norm(a, w);
    let nb = weighted_norm(b, w);
    let cos = (ip.norm() / (na * nb)).min(1.0);
    (1.0 - cos * cos).max(0.0).sqrt()
}

/// Multiset distance between the nonzero parts of two spectra.
pub fn match_nonzero(a: &Spectrum, b: &Spectrum) -> f64 {
    linalg::multiset_distance(&a.nonzero(), &b.nonzero())
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    /// Multiset distance between `{λ}` and `{-λ̄}` (or the conjugate-ω spectrum).
    pub distance: f64,
    pub size: usize,
}

/// Reflection symmetry `λ ↦ -λ̄`; complex `ω` pairs with the `ω̄` spectrum.
pub fn check_symmetry(spec: &Spectrum, bc: BoundaryCondition, companion: Option<&Spectrum>) -> Result<SymmetryReport> {
    let other = match bc {
        BoundaryCondition::Quasi(w) if w.im != 0.0 => companion.ok_or(Error::MissingCompanion)?,
        _ => spec,
    };
    let reflected: Vec<C64> = other.eigenvalues.iter().map(|l| -l.conj()).collect();
    Ok(SymmetryReport { distance: linalg::multiset_distance(&spec.eigenvalues, &reflected), size: spec.len() })
}

#[derive(Clone, Debug, Serialize)]
pub struct StripReport {
    pub max_abs_im: f64,
    pub bound: f64,
    pub holds: bool,
    /// `max Im λ` for nonnegative damping; `None` when `α` changes sign.
    pub max_im_dissipative: Option<f64>,
}

pub const STRIP_SLACK: f64 = 1e-10;

pub fn check_strip(spec: &Spectrum, ops: &DiscreteOperatorSet) -> StripReport {
    let max_abs_im = spec.eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.im.abs()));
    let bound = ops.b_norm();
    let dissipative = ops.r.iter().all(|&x| x >= 0.0);
    StripReport {
        max_abs_im,
        bound,
        holds: max_abs_im <= bound + STRIP_SLACK,
        max_im_dissipative: dissipative.then(|| spec.eigenvalues.iter().fold(f64::NEG_INFINITY, |a, l| a.max(l.im))),
    }
}

/// Least-squares line `Re λ_{+,j} ≈ a + s j` over a mid-range window.
#[derive(Clone, Debug, Serialize)]
pub struct AsymptoticFit {
    pub slope: f64,
    pub intercept: f64,
    pub target: f64,
    pub relative_deviation: f64,
    pub window: (usize, usize),
    pub branch_size: usize,
    /// `(j, Re λ_j, fitted value)` over the window.
    pub table: Vec<(usize, f64, f64)>,
}

/// Default window as fractions of the branch size.
pub const DEFAULT_WINDOW: (f64, f64) = (1.0 / 64.0, 1.0 / 16.0);
pub const MIN_BRANCH: usize = 40;

pub fn fit_asymptotics(spec: &Spectrum, rho: &CoefficientSpec, window: (f64, f64)) -> Result<AsymptoticFit> {
    let branch = spec.branch(Branch::Plus);
    let big_j = branch.len();
    if big_j < MIN_BRANCH {
        return Err(Error::Insufficient { needed: MIN_BRANCH, found: big_j });
    }
    if !(0.0 < window.0 && window.0 < window.1 && window.1 <= 1.0) {
        return Err(Error::Config { path: "fit_window".into(), msg: format!("invalid window {window:?}") });
    }
    let lo = ((window.0 * big_j as f64).ceil() as usize).max(1);
    let hi = ((window.1 * big_j as f64).ceil() as usize).min(big_j);
    if hi <= lo {
        return Err(Error::Insufficient { needed: 2, found: hi.saturating_sub(lo) + 1 });
    }
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|j| (j as f64, branch[j - 1].re)).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let target = PI / integrate_any(rho, 0.0, 1.0)?;
    Ok(AsymptoticFit {
        slope,
        intercept,
        target,
        relative_deviation: (slope - target).abs() / target,
        window: (lo, hi),
        branch_size: big_j,
        table: (lo..=hi).map(|j| (j, branch[j - 1].re, intercept + slope * j as f64)).collect(),
    })
}

/// `λ±,j = -ia/2 ± √(j²π² - a²/4)` for `j = 1..=j_max`, ordered `[λ₊,₁, λ₋,₁, λ₊,₂, …]`.
pub fn closed_form_constant_damping(a: f64, j_max: usize) -> Result<Vec<C64>> {
    if !(a >= 0.0) {
        return Err(Error::Config { path: "a".into(), msg: format!("damping must be nonnegative, got {a}") });
    }
    let mut out = Vec::with_capacity(2 * j_max);
    for j in 1..=j_max {
        let disc = c((j as f64 * PI).powi(2) - a * a / 4.0, 0.0).sqrt();
        let center = c(0.0, -a / 2.0);
        out.push(center + disc);
        out.push(center - disc);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct FactorizationReport {
    /// `‖(L⊕I)F - E(iG-z)‖_F / (‖(L⊕I)F‖_F + ‖E(iG-z)‖_F)`.
    pub residual: f64,
    pub e_inverse_defect: f64,
    pub f_inverse_defect: f64,
}

/// Residual of `(L(z) ⊕ I) F(z) = E(z)(iG - z)` with `L(z) = z² + z iR - T*T`.
pub fn verify_factorization_identity(z: C64, ops: &DiscreteOperatorSet) -> Result<FactorizationReport> {
    let m = ops.nodes();
    let id = linalg::identity(m);
    let zero = linalg::zeros(m, m);
    let tt = ops.tstar_t();
    let r = linalg::diag_real(&ops.r);
    let l = &(&linalg::scale(&id, z * z) + &linalg::scale(&r, z * I)) - &tt;
    let e11 = &linalg::scale(&id, -z) - &linalg::scale(&r, I);
    let e = linalg::block2(&e11, &linalg::scale(&id, -I), &id, &zero);
    let e_inv = linalg::block2(&zero, &id, &linalg::scale(&id, I), &linalg::scale(&e11, -I));
    let f = linalg::block2(&id, &zero, &linalg::scale(&id, -z), &linalg::scale(&id, I));
    let f_inv = linalg::block2(&id, &zero, &linalg::scale(&id, -I * z), &linalg::scale(&id, -I));
    let lhs = &linalg::block2(&l, &zero, &zero, &id) * &f;
    let ig = linalg::shift(&linalg::scale(&ops.g(), I), z);
    let rhs = &e * &ig;
    let scale = linalg::frob(&lhs) + linalg::frob(&rhs);
    let id2 = linalg::identity(2 * m);
    Ok(FactorizationReport {
        residual: linalg::frob(&(&lhs - &rhs)) / scale.max(f64::MIN_POSITIVE),
        e_inverse_defect: linalg::frob(&(&(&e * &e_inv) - &id2)),
        f_inverse_defect: linalg::frob(&(&(&f * &f_inv) - &id2)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{parse_coefficient_spec, CoefficientKind::*};

    fn ops(n: usize, rho: &str, alpha: &str, bc: BoundaryCondition) -> DiscreteOperatorSet {
        let r = parse_coefficient_spec(rho, Density).unwrap();
        let a = parse_coefficient_spec(alpha, Damping).unwrap();
        DiscreteOperatorSet::build(n, &r, &a, bc).unwrap()
    }

    #[test]
    fn undamped_min_matches_discrete_laplacian() {
        let o = ops(64, "const 1", "const 0", BoundaryCondition::Min);
        let s = eigen_dirac(&o).unwrap();
        assert_eq!(s.zero_modes, 1);
        let mut pos = s.branch(Branch::Plus);
        pos.sort_by(|a, b| a.re.total_cmp(&b.re));
        for (j, l) in pos.iter().enumerate() {
            let mu = (2.0 * 64.0 * ((j + 1) as f64 * PI / 128.0).sin()).powi(2);
            assert!((l.re - mu.sqrt()).abs() < 1e-10 && l.im.abs() < 1e-10);
        }
        assert!((pos[0].re - PI).abs() < 1e-3);
        assert!(s.max_residual() < 1e-8 * s.op_norm);
    }

    #[test]
    fn constant_damping_in_strip() {
        let o = ops(32, "const 1", "const 1", BoundaryCondition::Min);
        let s = eigen_dirac(&o).unwrap();
        for l in &s.eigenvalues {
            assert!(l.im <= 1e-12 && l.im >= -1.0 - 1e-12);
        }
        let rep = check_strip(&s, &o);
        assert!(rep.holds && rep.max_im_dissipative.unwrap() <= 1e-10);
    }

    #[test]
    fn generator_and_dirac_share_nonzero_spectrum() {
        for bc in [BoundaryCondition::Min, BoundaryCondition::Zero0, BoundaryCondition::Quasi(c(0.0, 1.0))] {
            let o = ops(24, "poly 1 0.5", "poly 0.3 -0.8", bc);
            let sd = eigen_dirac(&o).unwrap();
            let sg = eigen_generator(&o).unwrap();
            assert_eq!(sg.zero_modes, 0);
            assert!(match_nonzero(&sd, &sg) < 1e-8 * sd.op_norm, "{bc}");
        }
    }

    #[test]
    fn pencil_residuals() {
        let o = ops(24, "piece 0 0.5: const 1; piece 0.5 1: const 1.5", "poly 0.5 0.5", BoundaryCondition::Zero1);
        let sg = eigen_generator(&o).unwrap();
        for k in 0..sg.len() {
            let p = sg.pair(k, &o).unwrap();
            let u = &p.vector[..o.nodes()];
            assert!(pencil_residual(p.lambda, u, &o).unwrap() <= 1e-7 * sg.op_norm * weighted_norm(&p.vector, &[o.wu.clone(), o.wu.clone()].concat()) / weighted_norm(u, &o.wu));
        }
        let random: Vec<C64> = (0..o.nodes()).map(|k| c((k as f64).sin(), (k as f64 * 0.7).cos())).collect();
        assert!(pencil_residual(c(1.3, -0.2), &random, &o).unwrap() > 1.0);
        assert!(matches!(pencil_residual(c(1.0, 0.0), &vec![c(0.0, 0.0); o.nodes()], &o), Err(Error::ZeroVector)));
    }

    #[test]
    fn undamped_exact_pencil_vectors() {
        let o = ops(32, "const 1", "const 0", BoundaryCondition::Min);
        let sl = eigen_laplacian(&o).unwrap();
        for k in 0..5 {
            let p = sl.pair(k, &o).unwrap();
            let lam = c(p.lambda.re.sqrt(), 0.0);
            assert!(pencil_residual(lam, &p.vector, &o).unwrap() < 1e-12 * sl.op_norm);
        }
    }

    #[test]
    fn eigenvector_maps_round_trip() {
        let o = ops(32, "const 1", "const 0", BoundaryCondition::Min);
        let sg = eigen_generator(&o).unwrap();
        for k in 0..sg.len() {
            let p = sg.pair(k, &o).unwrap();
            let d = map_generator_to_dirac(&p, &o).unwrap();
            assert!(d.residual < 1e-7 * sg.op_norm);
            let back = map_dirac_to_generator(&d, &o).unwrap();
            assert!(back.residual < 1e-7 * sg.op_norm);
            let w = [o.wu.clone(), o.wu.clone()].concat();
            assert!(ray_distance(&p.vector, &back.vector, &w) < 1e-7);
        }
    }

    #[test]
    fn zero_mode_rejected_by_maps() {
        let o = ops(16, "const 1", "const 1", BoundaryCondition::Min);
        let sd = eigen_dirac(&o).unwrap();
        let k = sd.zero_flags.iter().position(|z| *z).unwrap();
        let p = sd.pair(k, &o).unwrap();
        assert!(matches!(map_dirac_to_generator(&p, &o), Err(Error::ZeroEigenvalue(_))));
    }

    #[test]
    fn symmetry_real_and_conjugate_omega() {
        let o = ops(24, "poly 1 0.3", "poly 0.2 -0.9 0.4", BoundaryCondition::Zero0);
        let s = eigen_dirac(&o).unwrap();
        assert!(check_symmetry(&s, o.bc, None).unwrap().distance < 1e-8);
        let bc = BoundaryCondition::Quasi(c(0.0, 1.0));
        let a = ops(24, "poly 1 0.3", "poly 0.2 -0.9 0.4", bc);
        let b = ops(24, "poly 1 0.3", "poly 0.2 -0.9 0.4", bc.conj());
        let sa = eigen_dirac(&a).unwrap();
        let sb = eigen_dirac(&b).unwrap();
        assert!(matches!(check_symmetry(&sa, bc, None), Err(Error::MissingCompanion)));
        assert!(check_symmetry(&sa, bc, Some(&sb)).unwrap().distance < 1e-8);
    }

    #[test]
    fn closed_form_examples() {
        let v = closed_form_constant_damping(0.0, 1).unwrap();
        assert!((v[0] - c(PI, 0.0)).norm() < 1e-15 && (v[1] + c(PI, 0.0)).norm() < 1e-15);
        let v = closed_form_constant_damping(1.0, 1).unwrap();
        let s = (PI * PI - 0.25).sqrt();
        assert!((v[0] - c(s, -0.5)).norm() < 1e-15);
        let v = closed_form_constant_damping(2.0 * PI, 1).unwrap();
        assert!((v[0] - c(0.0, -PI)).norm() < 1e-12 && (v[1] - c(0.0, -PI)).norm() < 1e-12);
        assert!(closed_form_constant_damping(-1.0, 1).is_err());
    }

    #[test]
    fn factorization_identity_holds() {
        let o = ops(32, "piece 0 0.3: poly 1 1; piece 0.3 1: const 0.8", "poly -0.4 1.1", BoundaryCondition::Quasi(c(0.4, 0.7)));
        for z in [c(0.0, 0.0), c(0.37, -1.2), c(-2.5, 0.4)] {
            let r = verify_factorization_identity(z, &o).unwrap();
            assert!(r.residual < 1e-12 && r.e_inverse_defect < 1e-12 && r.f_inverse_defect < 1e-12, "{z}: {r:?}");
        }
    }

    #[test]
    fn asymptotic_fit_requires_enough_eigenvalues() {
        let o = ops(16, "const 1", "const 0", BoundaryCondition::Min);
        let s = eigen_dirac_with(&o, false).unwrap();
        let rho = CoefficientSpec::constant(1.0, Density).unwrap();
        assert!(matches!(fit_asymptotics(&s, &rho, DEFAULT_WINDOW), Err(Error::Insufficient { .. })));
    }

    #[test]
    fn asymptotic_slope_moderate_grid() {
        let o = ops(512, "const 2", "const 1", BoundaryCondition::Min);
        let s = eigen_dirac_with(&o, false).unwrap();
        let rho = CoefficientSpec::constant(2.0, Density).unwrap();
        let fit = fit_asymptotics(&s, &rho, DEFAULT_WINDOW).unwrap();
        assert!(fit.relative_deviation < 0.02, "{fit:?}");
    }

    #[test]
    fn csv_has_one_row_per_eigenvalue() {
        let o = ops(8, "const 1", "const 1", BoundaryCondition::Min);
        let s = eigen_dirac(&o).unwrap();
        let csv = s.to_csv();
        assert_eq!(csv.lines().count(), 1 + o.dim_dirac());
        assert_eq!(csv.lines().filter(|l| l.ends_with(",1,zero")).count(), 1);
    }
}
