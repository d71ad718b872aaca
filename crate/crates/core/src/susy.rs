//! Supersymmetric structure of `D`: polar decomposition of `T`, partner
//! eigenvectors, the diagonalizing unitary, and block resolvent formulas.
//!
//! All matrix identities are evaluated in the weighted-similarity frame, where
//! weighted norms become Euclidean.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::discretization::{tol_zero, BoundaryCondition, DiscreteOperatorSet};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::spectral;

/// Condition-number ceiling for `I + ζB(T*T-ζ²)⁻¹`.
pub const COND_GATE: f64 = 1e12;
/// Minimum distance of `ζ²` from `σ(T*T) ∪ σ(TT*)`.
pub const SPECTRUM_GAP: f64 = 1e-8;

/// `T̃ = Ṽ|T̃|` in the weighted-similarity frame.
#[derive(Clone, Debug)]
pub struct PolarParts {
    /// Partial isometry, cells × nodes.
    pub v: CMat,
    /// `|T̃| = (T̃ᴴT̃)^{1/2}`, nodes × nodes.
    pub abs_t: CMat,
    /// `|T̃*| = (T̃T̃ᴴ)^{1/2}`, cells × cells.
    pub abs_tstar: CMat,
    pub tol_zero: f64,
}

pub fn polar_decompose(ops: &DiscreteOperatorSet) -> Result<PolarParts> {
    let tol = tol_zero(ops)?;
    // T̃ = U Σ Wᴴ gives |T̃| = WΣWᴴ, |T̃*| = UΣUᴴ and Ṽ = U_r W_rᴴ without squaring σ.
    let (u, s, w) = linalg::svd(&ops.t_tilde)?;
    let (n, m) = (u.nrows(), w.nrows());
    let sn: Vec<f64> = (0..n).map(|k| s.get(k).copied().unwrap_or(0.0)).collect();
    let sm: Vec<f64> = (0..m).map(|k| s.get(k).copied().unwrap_or(0.0)).collect();
    let keep: Vec<f64> = s.iter().map(|&x| if x > tol { 1.0 } else { 0.0 }).collect();
    let k = s.len();
    let abs_t = &linalg::scale_cols(&w, &sm) * &linalg::adjoint(&w);
    let abs_tstar = &linalg::scale_cols(&u, &sn) * &linalg::adjoint(&u);
    let ur = linalg::scale_cols(&linalg::sub_block(&u, 0, n, 0, k), &keep);
    let v = &ur * &linalg::adjoint(&linalg::sub_block(&w, 0, m, 0, k));
    Ok(PolarParts { v, abs_t, abs_tstar, tol_zero: tol })
}

impl PolarParts {
    /// `‖T̃ - Ṽ|T̃|‖_F / ‖T̃‖_F`.
    pub fn reconstruction_defect(&self, ops: &DiscreteOperatorSet) -> f64 {
        linalg::frob(&(&ops.t_tilde - &(&self.v * &self.abs_t))) / linalg::frob(&ops.t_tilde)
    }

    /// Initial projection `ṼᴴṼ`.
    pub fn initial_projection(&self) -> CMat {
        &linalg::adjoint(&self.v) * &self.v
    }

    /// Final projection `ṼṼᴴ`.
    pub fn final_projection(&self) -> CMat {
        &self.v * &linalg::adjoint(&self.v)
    }

    /// `‖ṼᴴṼ - P_{(ker T)^⊥}‖_F` with the projection built from `|T̃|`.
    pub fn partial_isometry_defect(&self) -> Result<f64> {
        let p = linalg::hermitian_fn(&self.abs_t, |x| if x > self.tol_zero { 1.0 } else { 0.0 })?;
        Ok(linalg::frob(&(&self.initial_projection() - &p)))
    }

    /// Defect of `Ṽ f(H̃₁) = f(H̃₂) Ṽ`, relative to `‖Ṽ‖_F max|f|`.
    pub fn intertwining_defect(&self, ops: &DiscreteOperatorSet, f: impl Fn(f64) -> f64 + Copy) -> Result<f64> {
        let f1 = linalg::hermitian_fn(&ops.h1_tilde(), f)?;
        let f2 = linalg::hermitian_fn(&ops.h2_tilde(), f)?;
        let lhs = &self.v * &f1;
        let rhs = &f2 * &self.v;
        Ok(linalg::frob(&(&lhs - &rhs)) / (linalg::frob(&self.v) * sup_on_spectrum(ops, f)?))
    }
}

/// `max |f|` over `σ(T*T) ∪ σ(TT*)`, the scale of `f(Hⱼ)` in operator norm.
fn sup_on_spectrum(ops: &DiscreteOperatorSet, f: impl Fn(f64) -> f64) -> Result<f64> {
    let s = linalg::singular_values(&ops.t_tilde)?;
    let mut m = s.iter().map(|x| f(x * x).abs()).fold(0.0, f64::max);
    if ops.nodes() != ops.cells() || s.contains(&0.0) {
        m = m.max(f(0.0).abs());
    }
    Ok(m.max(f64::MIN_POSITIVE))
}

/// Defect of `T̃ f(H̃₁) = f(H̃₂) T̃`, relative to `‖T̃‖_F max|f|`.
pub fn t_intertwining_defect(ops: &DiscreteOperatorSet, f: impl Fn(f64) -> f64 + Copy) -> Result<f64> {
    let f1 = linalg::hermitian_fn(&ops.h1_tilde(), f)?;
    let f2 = linalg::hermitian_fn(&ops.h2_tilde(), f)?;
    let lhs = &ops.t_tilde * &f1;
    let rhs = &f2 * &ops.t_tilde;
    Ok(linalg::frob(&(&lhs - &rhs)) / (linalg::frob(&ops.t_tilde) * sup_on_spectrum(ops, f)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct IsospectralReport {
    pub distance: f64,
    pub scale: f64,
    pub zeros_h1: usize,
    pub zeros_h2: usize,
}

/// Nonzero spectra of `T*T` and `TT*` coincide; zero counts are the kernel dimensions.
pub fn check_isospectral(ops: &DiscreteOperatorSet) -> Result<IsospectralReport> {
    let tol = tol_zero(ops)?;
    let e1 = linalg::hermitian_eigenvalues(&ops.h1_tilde())?;
    let e2 = linalg::hermitian_eigenvalues(&ops.h2_tilde())?;
    let scale = e1.iter().chain(&e2).fold(0.0f64, |a, x| a.max(x.abs()));
    // Eigenvalues of T*T are squared singular values of T.
    let ztol = tol * tol.max(1.0);
    let split = |e: &[f64]| -> (usize, Vec<C64>) {
        let zeros = e.iter().filter(|x| x.abs() < ztol).count();
        (zeros, e.iter().filter(|x| x.abs() >= ztol).map(|&x| c(x, 0.0)).collect())
    };
    let (zeros_h1, n1) = split(&e1);
    let (zeros_h2, n2) = split(&e2);
    let distance = if n1.len() == n2.len() { linalg::multiset_distance(&n1, &n2) } else { f64::INFINITY };
    Ok(IsospectralReport { distance, scale, zeros_h1, zeros_h2 })
}

fn wnorm(x: &[C64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(a, w)| a.norm_sqr() * w).sum::<f64>().sqrt()
}

/// Partner vector with its relative eigen-residual.
#[derive(Clone, Debug)]
pub struct Partner {
    pub vector: Vec<C64>,
    pub residual: f64,
}

/// `f ↦ Tf`, an eigenvector of `TT*` for the same `λ²`.
pub fn susy_partner_eigvec(f: &[C64], lambda2: f64, ops: &DiscreteOperatorSet) -> Result<Partner> {
    let tol = tol_zero(ops)?;
    if lambda2.abs() < tol * tol.max(1.0) {
        return Err(Error::ZeroEigenvalue(lambda2));
    }
    let g = linalg::matvec(&ops.t, f);
    let h = linalg::matvec(&ops.t, &linalg::matvec(&ops.tstar, &g));
    let r: Vec<C64> = h.iter().zip(&g).map(|(a, b)| a - lambda2 * b).collect();
    let ng = wnorm(&g, &ops.wv);
    if !(ng > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(Partner { residual: wnorm(&r, &ops.wv) / (ng * lambda2.abs()), vector: g })
}

/// `g ↦ T*g`, an eigenvector of `T*T` for the same `μ²`.
pub fn susy_partner_reverse(g: &[C64], mu2: f64, ops: &DiscreteOperatorSet) -> Result<Partner> {
    let tol = tol_zero(ops)?;
    if mu2.abs() < tol * tol.max(1.0) {
        return Err(Error::ZeroEigenvalue(mu2));
    }
    let f = linalg::matvec(&ops.tstar, g);
    let h = linalg::matvec(&ops.tstar, &linalg::matvec(&ops.t, &f));
    let r: Vec<C64> = h.iter().zip(&f).map(|(a, b)| a - mu2 * b).collect();
    let nf = wnorm(&f, &ops.wu);
    if !(nf > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(Partner { residual: wnorm(&r, &ops.wu) / (nf * mu2.abs()), vector: f })
}

/// `‖(D-λ)ψ‖_W / (|λ|‖ψ‖_W)` for the undamped Dirac operator.
pub fn free_dirac_residual(lambda: f64, psi: &[C64], ops: &DiscreteOperatorSet) -> Result<f64> {
    let m = ops.nodes();
    let (p1, p2) = psi.split_at(m);
    let top: Vec<C64> = linalg::matvec(&ops.tstar, p2).iter().zip(p1).map(|(a, b)| a - lambda * b).collect();
    let bot: Vec<C64> = linalg::matvec(&ops.t, p1).iter().zip(p2).map(|(a, b)| a - lambda * b).collect();
    let w = ops.wd();
    let n = wnorm(psi, &w);
    if !(n > 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(wnorm(&[top, bot].concat(), &w) / (n * lambda.abs().max(1.0)))
}

/// `(f, λ⁻¹Tf)`, a `D`-eigenvector for `λ` when `T*T f = λ² f`.
pub fn dirac_from_h1(f: &[C64], lambda: f64, ops: &DiscreteOperatorSet) -> Result<Partner> {
    let tol = tol_zero(ops)?;
    if lambda.abs() < tol {
        return Err(Error::ZeroEigenvalue(lambda));
    }
    let tf = linalg::matvec(&ops.t, f);
    let psi: Vec<C64> = f.iter().copied().chain(tf.iter().map(|x| x / lambda)).collect();
    Ok(Partner { residual: free_dirac_residual(lambda, &psi, ops)?, vector: psi })
}

/// `(μ⁻¹T*g, g)`, a `D`-eigenvector for `μ` when `TT* g = μ² g`.
pub fn dirac_from_h2(g: &[C64], mu: f64, ops: &DiscreteOperatorSet) -> Result<Partner> {
    let tol = tol_zero(ops)?;
    if mu.abs() < tol {
        return Err(Error::ZeroEigenvalue(mu));
    }
    let tg = linalg::matvec(&ops.tstar, g);
    let psi: Vec<C64> = tg.iter().map(|x| x / mu).chain(g.iter().copied()).collect();
    Ok(Partner { residual: free_dirac_residual(mu, &psi, ops)?, vector: psi })
}

/// `σ₃ψ = (ψ₁, -ψ₂)`.
pub fn sigma3(psi: &[C64], nodes: usize) -> Vec<C64> {
    psi.iter().enumerate().map(|(k, x)| if k < nodes { *x } else { -x }).collect()
}

/// `U = 2^{-1/2}[[I, Ṽᴴ], [-Ṽ, I]]` in the weighted-similarity frame.
pub fn diagonalizing_unitary(parts: &PolarParts) -> CMat {
    let (n, m) = (parts.v.nrows(), parts.v.ncols());
    let s = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let u = linalg::block2(
        &linalg::identity(m),
        &linalg::adjoint(&parts.v),
        &linalg::scale(&parts.v, c(-1.0, 0.0)),
        &linalg::identity(n),
    );
    linalg::scale(&u, s)
}

#[derive(Clone, Debug, Serialize)]
pub struct DiagonalizationReport {
    /// `‖U D̃ Uᴴ - diag(|T̃|, -|T̃*|)‖_F / ‖D̃‖_F`.
    pub block_defect: f64,
    /// Frobenius norm of the off-diagonal blocks of `U D̃ Uᴴ`, relative to `‖D̃‖_F`.
    pub off_block: f64,
    /// `‖P(UᴴU - I)P‖_F` with `P` the projection onto `(ker D̃)^⊥`.
    pub unitarity_defect: f64,
    /// Multiset distance of block spectra from `±√σ(T*T)∖{0}`.
    pub spectrum_defect: f64,
}

pub fn verify_diagonalization(parts: &PolarParts, ops: &DiscreteOperatorSet) -> Result<DiagonalizationReport> {
    let m = ops.nodes();
    let n = ops.cells();
    let u = diagonalizing_unitary(parts);
    let d = ops.d_tilde();
    let x = &(&u * &d) * &linalg::adjoint(&u);
    let target = linalg::block2(
        &parts.abs_t,
        &linalg::zeros(m, n),
        &linalg::zeros(n, m),
        &linalg::scale(&parts.abs_tstar, c(-1.0, 0.0)),
    );
    let dn = linalg::frob(&d);
    let off = (linalg::frob(&linalg::sub_block(&x, 0, m, m, n)).powi(2)
        + linalg::frob(&linalg::sub_block(&x, m, n, 0, m)).powi(2))
    .sqrt();
    let p1 = parts.initial_projection();
    let p2 = parts.final_projection();
    let p = linalg::block2(&p1, &linalg::zeros(m, n), &linalg::zeros(n, m), &p2);
    let uu = &linalg::adjoint(&u) * &u;
    let defect = &(&p * &(&uu - &linalg::identity(m + n))) * &p;
    let tol = parts.tol_zero;
    let nz = |v: Vec<f64>| -> Vec<C64> { v.into_iter().filter(|x| x.abs() > tol).map(|x| c(x, 0.0)).collect() };
    let top = nz(linalg::hermitian_eigenvalues(&linalg::sub_block(&x, 0, m, 0, m))?);
    let bot = nz(linalg::hermitian_eigenvalues(&linalg::sub_block(&x, m, n, m, n))?);
    let sq = nz(linalg::singular_values(&ops.t_tilde)?);
    let neg: Vec<C64> = sq.iter().map(|x| -x).collect();
    let spectrum_defect = if top.len() == sq.len() && bot.len() == sq.len() {
        linalg::multiset_distance(&top, &sq).max(linalg::multiset_distance(&bot, &neg))
    } else {
        f64::INFINITY
    };
    Ok(DiagonalizationReport {
        block_defect: linalg::frob(&(&x - &target)) / dn,
        off_block: off / dn,
        unitarity_defect: linalg::frob(&defect),
        spectrum_defect,
    })
}

/// 2×2 block resolvent on node ⊕ cell space, original frame.
#[derive(Clone, Debug)]
pub struct BlockResolvent {
    pub zeta: C64,
    /// Row-major `[R₁₁, R₁₂, R₂₁, R₂₂]`.
    pub blocks: [CMat; 4],
}

impl BlockResolvent {
    pub fn assemble(&self) -> CMat {
        let [a, b, cc, d] = &self.blocks;
        linalg::block2(a, b, cc, d)
    }

    /// `‖(A-ζ)R - I‖_F` for `A = D` or `D+B`.
    pub fn identity_defect(&self, ops: &DiscreteOperatorSet, perturbed: bool) -> f64 {
        let a = if perturbed { ops.d_plus_b() } else { ops.d() };
        let r = self.assemble();
        let prod = &linalg::shift(&a, self.zeta) * &r;
        linalg::frob(&(&prod - &linalg::identity(a.nrows())))
    }

    /// `‖R - (A-ζ)⁻¹‖_F / ‖(A-ζ)⁻¹‖_F` against a dense LU inverse.
    pub fn relative_error_vs_direct(&self, ops: &DiscreteOperatorSet, perturbed: bool) -> Result<f64> {
        let a = if perturbed { ops.d_plus_b() } else { ops.d() };
        let direct = linalg::inverse(&linalg::shift(&a, self.zeta))?;
        Ok(linalg::frob(&(&self.assemble() - &direct)) / linalg::frob(&direct))
    }
}

fn check_zeta(zeta: C64, ops: &DiscreteOperatorSet) -> Result<()> {
    let z2 = zeta * zeta;
    let e1 = linalg::hermitian_eigenvalues(&ops.h1_tilde())?;
    let e2 = linalg::hermitian_eigenvalues(&ops.h2_tilde())?;
    let dist = e1.iter().chain(&e2).map(|&x| (c(x, 0.0) - z2).norm()).fold(f64::INFINITY, f64::min);
    if dist <= SPECTRUM_GAP {
        return Err(Error::NearSpectrum(dist));
    }
    Ok(())
}

/// `(H₁-ζ²)⁻¹` and `(H₂-ζ²)⁻¹` in the original frame.
fn squared_resolvents(zeta: C64, ops: &DiscreteOperatorSet) -> Result<(CMat, CMat)> {
    let z2 = zeta * zeta;
    let k1 = linalg::inverse(&linalg::shift(&ops.tstar_t(), z2))?;
    let k2 = linalg::inverse(&linalg::shift(&ops.t_tstar(), z2))?;
    Ok((k1, k2))
}

/// `(D-ζ)⁻¹ = [[ζK₁, T*K₂], [TK₁, ζK₂]]` with `Kⱼ = (Hⱼ-ζ²)⁻¹`.
pub fn resolvent_dirac(zeta: C64, ops: &DiscreteOperatorSet) -> Result<BlockResolvent> {
    check_zeta(zeta, ops)?;
    let (k1, k2) = squared_resolvents(zeta, ops)?;
    Ok(BlockResolvent {
        zeta,
        blocks: [linalg::scale(&k1, zeta), &ops.tstar * &k2, &ops.t * &k1, linalg::scale(&k2, zeta)],
    })
}

/// `(D+B-ζ)⁻¹` through `F = I + ζB₁K₁`, with `B₁ = -iR` the node block of `B`.
pub fn resolvent_perturbed(zeta: C64, ops: &DiscreteOperatorSet) -> Result<BlockResolvent> {
    check_zeta(zeta, ops)?;
    let (k1, k2) = squared_resolvents(zeta, ops)?;
    let b1: Vec<C64> = ops.r.iter().map(|&r| c(0.0, -r)).collect();
    let b1k1 = linalg::scale_rows_c(&b1, &k1);
    let f = &linalg::identity(ops.nodes()) + &linalg::scale(&b1k1, zeta);
    let cond = linalg::cond(&f)?;
    if !(cond <= COND_GATE) {
        return Err(Error::IllConditioned(cond));
    }
    let f_inv = linalg::inverse(&f)?;
    let k1f = &k1 * &f_inv;
    let tail = linalg::scale_rows_c(&b1, &(&ops.tstar * &k2));
    let k1f_tail = &k1f * &tail;
    let r11 = linalg::scale(&k1f, zeta);
    let r12 = &(&ops.tstar * &k2) - &linalg::scale(&k1f_tail, zeta);
    let r21 = &ops.t * &k1f;
    let r22 = &linalg::scale(&k2, zeta) - &(&ops.t * &k1f_tail);
    Ok(BlockResolvent { zeta, blocks: [r11, r12, r21, r22] })
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventIdentityReport {
    /// `‖I + z(H₂-z)⁻¹ - T(H₁-z)⁻¹T*‖_F` relative to the left side.
    pub cells: f64,
    /// `‖I + z(H₁-z)⁻¹ - T*(H₂-z)⁻¹T‖_F` relative to the left side.
    pub nodes: f64,
}

pub fn verify_resolvent_identities(z: C64, ops: &DiscreteOperatorSet) -> Result<ResolventIdentityReport> {
    let h1 = ops.tstar_t();
    let h2 = ops.t_tstar();
    let k1 = linalg::inverse(&linalg::shift(&h1, z))?;
    let k2 = linalg::inverse(&linalg::shift(&h2, z))?;
    let lhs2 = &linalg::identity(ops.cells()) + &linalg::scale(&k2, z);
    let rhs2 = &(&ops.t * &k1) * &ops.tstar;
    let lhs1 = &linalg::identity(ops.nodes()) + &linalg::scale(&k1, z);
    let rhs1 = &(&ops.tstar * &k2) * &ops.t;
    Ok(ResolventIdentityReport {
        cells: linalg::frob(&(&lhs2 - &rhs2)) / linalg::frob(&lhs2),
        nodes: linalg::frob(&(&lhs1 - &rhs1)) / linalg::frob(&lhs1),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyEquivalenceReport {
    /// Multiset distance between nonzero spectra of `iG` and `(D+B)(I ⊕ P_{ran T})`.
    pub distance: f64,
    pub scale: f64,
    /// False when `T*T` is singular; the comparison is then informational.
    pub in_hypothesis: bool,
}

/// Generator spectrum against the Dirac operator restricted to `L² ⊕ ran T`.
pub fn verify_energy_equivalence(ops: &DiscreteOperatorSet) -> Result<EnergyEquivalenceReport> {
    let m = ops.nodes();
    let n = ops.cells();
    let tol = tol_zero(ops)?;
    let p = &ops.t_tilde * &linalg::pinv(&ops.t_tilde, 1e-10)?;
    let proj = linalg::block2(&linalg::identity(m), &linalg::zeros(m, n), &linalg::zeros(n, m), &p);
    let a = &ops.dirac_tilde() * &proj;
    let ea = linalg::eigenvalues(&a)?;
    let sg = spectral::eigen_generator(ops)?;
    let nz: Vec<C64> = ea.into_iter().filter(|l| l.norm() >= tol).collect();
    let ng = sg.nonzero();
    let distance = if nz.len() == ng.len() { linalg::multiset_distance(&nz, &ng) } else { f64::INFINITY };
    Ok(EnergyEquivalenceReport { distance, scale: sg.op_norm, in_hypothesis: ops.bc.has_invertible_laplacian() })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayFit {
    /// Fitted exponent `p` in `e_j ~ j^p` for eigenvalues of `(T*T+I)⁻¹`.
    pub exponent: f64,
    pub window: (usize, usize),
}

/// Log-log fit of the descending eigenvalues of `(T*T+I)⁻¹` over `j ∈ [2, m/8]`.
pub fn trace_ideal_decay(ops: &DiscreteOperatorSet) -> Result<DecayFit> {
    let mut e = linalg::hermitian_eigenvalues(&ops.h1_tilde())?;
    e.sort_by(|a, b| a.total_cmp(b));
    let inv: Vec<f64> = e.iter().map(|x| 1.0 / (1.0 + x)).collect();
    let hi = (inv.len() / 8).max(4);
    let lo = 2;
    if hi > inv.len() {
        return Err(Error::Insufficient { needed: 4, found: inv.len() });
    }
    let pts: Vec<(f64, f64)> = (lo..=hi).map(|j| ((j as f64).ln(), inv[j - 1].ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(DecayFit { exponent: sxy / sxx, window: (lo, hi) })
}

/// Whether `bc` satisfies the invertibility hypothesis on `T*T` used by the energy-space equivalence.
pub fn in_hypothesis(bc: BoundaryCondition) -> bool {
    bc.has_invertible_laplacian()
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

    fn all_bcs() -> Vec<BoundaryCondition> {
        vec![
            BoundaryCondition::Max,
            BoundaryCondition::Min,
            BoundaryCondition::Zero0,
            BoundaryCondition::Zero1,
            BoundaryCondition::Quasi(c(1.0, 0.0)),
            BoundaryCondition::Quasi(c(0.3, -0.8)),
        ]
    }

    #[test]
    fn polar_parts_reconstruct_and_intertwine() {
        for bc in all_bcs() {
            let o = ops(20, "poly 1 0.4 -0.2", "const 0", bc);
            let p = polar_decompose(&o).unwrap();
            assert!(p.reconstruction_defect(&o) < 1e-12, "{bc}");
            assert!(p.partial_isometry_defect().unwrap() < 1e-10, "{bc}");
            assert!(p.intertwining_defect(&o, |x| (-0.1 * x).exp()).unwrap() < 1e-10, "{bc}");
        }
    }

    #[test]
    fn min_polar_part_is_isometry() {
        let o = ops(16, "const 1", "const 0", BoundaryCondition::Min);
        let p = polar_decompose(&o).unwrap();
        let vv = p.initial_projection();
        assert!(linalg::frob(&(&vv - &linalg::identity(o.nodes()))) < 1e-10);
    }

    #[test]
    fn isospectral_zero_counts() {
        let cases = [
            (BoundaryCondition::Min, (0, 1)),
            (BoundaryCondition::Max, (1, 0)),
            (BoundaryCondition::Quasi(c(1.0, 0.0)), (1, 1)),
            (BoundaryCondition::Zero0, (0, 0)),
        ];
        for (bc, zeros) in cases {
            let o = ops(24, "piece 0 0.5: poly 1 1; piece 0.5 1: const 0.7", "const 0", bc);
            let r = check_isospectral(&o).unwrap();
            assert_eq!((r.zeros_h1, r.zeros_h2), zeros, "{bc}");
            assert!(r.distance <= 1e-10 * r.scale, "{bc}: {r:?}");
        }
    }

    #[test]
    fn partner_vectors() {
        let o = ops(32, "const 1", "const 0", BoundaryCondition::Min);
        let (vals, u) = linalg::hermitian_eigen(&o.h1_tilde()).unwrap();
        let sq: Vec<f64> = o.wu.iter().map(|w| w.sqrt()).collect();
        for j in 0..5 {
            let f: Vec<C64> = (0..o.nodes()).map(|i| u[(i, j)] / sq[i]).collect();
            let g = susy_partner_eigvec(&f, vals[j], &o).unwrap();
            assert!(g.residual < 1e-10);
            let nf = wnorm(&f, &o.wu);
            let ng = wnorm(&g.vector, &o.wv);
            assert!((ng * ng - vals[j] * nf * nf).abs() < 1e-10 * vals[j] * nf * nf);
            let back = susy_partner_reverse(&g.vector, vals[j], &o).unwrap();
            assert!(back.residual < 1e-10);
            let lam = vals[j].sqrt();
            let psi = dirac_from_h1(&f, lam, &o).unwrap();
            assert!(psi.residual < 1e-10);
            let minus = sigma3(&psi.vector, o.nodes());
            assert!(free_dirac_residual(-lam, &minus, &o).unwrap() < 1e-10);
            let alt = dirac_from_h2(&g.vector, lam, &o).unwrap();
            assert!(alt.residual < 1e-10);
        }
        let f = vec![c(1.0, 0.0); o.nodes()];
        assert!(matches!(susy_partner_eigvec(&f, 0.0, &o), Err(Error::ZeroEigenvalue(_))));
    }

    #[test]
    fn diagonalization_all_bcs() {
        for bc in all_bcs() {
            let o = ops(16, "poly 1.2 -0.5", "const 0", bc);
            let p = polar_decompose(&o).unwrap();
            let r = verify_diagonalization(&p, &o).unwrap();
            assert!(r.off_block < 1e-9 && r.block_defect < 1e-9, "{bc}: {r:?}");
            assert!(r.unitarity_defect < 1e-10 && r.spectrum_defect < 1e-8, "{bc}: {r:?}");
        }
    }

    #[test]
    fn free_resolvent_matches_direct() {
        let o = ops(16, "poly 1 0.5", "const 0", BoundaryCondition::Min);
        let r = resolvent_dirac(c(0.3, 0.1), &o).unwrap();
        assert!(r.relative_error_vs_direct(&o, false).unwrap() < 1e-11);
        assert!(r.identity_defect(&o, false) < 1e-10);
        // Leading Neumann term needs |ζ| well above ‖D‖, so use the coarsest grid.
        let o = ops(4, "poly 1 0.5", "const 0", BoundaryCondition::Min);
        let big = c(0.0, 1e3);
        let r = resolvent_dirac(big, &o).unwrap();
        let target = linalg::scale(&linalg::identity(o.dim_dirac()), -1.0 / big);
        let rel = linalg::frob(&(&r.assemble() - &target)) / linalg::frob(&target);
        assert!(rel < 0.01, "{rel}");
    }

    #[test]
    fn resolvent_rejects_kernel() {
        let o = ops(16, "const 1", "const 0", BoundaryCondition::Min);
        assert!(matches!(resolvent_dirac(c(1e-12, 0.0), &o), Err(Error::NearSpectrum(_))));
        assert!(resolvent_dirac(c(0.1, 0.0), &o).is_ok());
    }

    #[test]
    fn perturbed_resolvent() {
        let o = ops(16, "const 1", "const 1", BoundaryCondition::Zero0);
        let r = resolvent_perturbed(c(0.2, 0.0), &o).unwrap();
        assert!(r.relative_error_vs_direct(&o, true).unwrap() < 1e-11);
        assert!(r.identity_defect(&o, true) < 1e-10);
        let o0 = ops(16, "poly 1 0.3", "const 0", BoundaryCondition::Zero1);
        let a = resolvent_perturbed(c(0.5, 0.2), &o0).unwrap();
        let b = resolvent_dirac(c(0.5, 0.2), &o0).unwrap();
        for k in 0..4 {
            assert!(linalg::frob(&(&a.blocks[k] - &b.blocks[k])) <= 1e-14 * linalg::frob(&b.blocks[k]).max(1.0));
        }
    }

    #[test]
    fn resolvent_identities_and_intertwining() {
        for bc in all_bcs() {
            let o = ops(16, "poly 1 -0.3", "const 0", bc);
            let r = verify_resolvent_identities(c(0.7, 0.4), &o).unwrap();
            assert!(r.cells < 1e-10 && r.nodes < 1e-10, "{bc}: {r:?}");
            assert!(t_intertwining_defect(&o, |x| x).unwrap() < 1e-10);
            assert!(t_intertwining_defect(&o, |x| x * x).unwrap() < 1e-10);
            assert!(t_intertwining_defect(&o, |x| (-x).exp()).unwrap() < 1e-10);
        }
    }

    #[test]
    fn energy_equivalence() {
        for bc in [BoundaryCondition::Min, BoundaryCondition::Zero0, BoundaryCondition::Quasi(c(-1.0, 0.0))] {
            let o = ops(16, "poly 1 0.5", "poly 0.5 -1", bc);
            let r = verify_energy_equivalence(&o).unwrap();
            assert!(r.in_hypothesis && r.distance < 1e-8 * r.scale.max(1.0), "{bc}: {r:?}");
        }
        assert!(!in_hypothesis(BoundaryCondition::Quasi(c(1.0, 0.0))));
    }

    #[test]
    fn trace_ideal_exponent() {
        let o = ops(256, "const 1", "const 0", BoundaryCondition::Min);
        let fit = trace_ideal_decay(&o).unwrap();
        assert!(fit.exponent <= -1.8, "{fit:?}");
    }
}
