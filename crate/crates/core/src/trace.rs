//! Trace coefficients of the damped problem and the eigenvalue-sum identities
//! they satisfy.
//!
//! With `K = (T*T)⁻¹` and `C = α/ρ²`, the imaginary part of the resolvent trace
//! reduces to `Im tr[(2ζ + iC)(T*T - ζ² - iζC)⁻¹]`. Its Taylor coefficients are
//! `t_p`, and `t_p = -S_p` with `S_m = Σ' Im(λ^{m+1}) / |λ|^{2(m+1)}` summed
//! over nonzero eigenvalues of `D+B`.

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::coefficients::CoefficientSpec;
use crate::discretization::{BoundaryCondition, DiscreteOperatorSet};
use crate::error::{Error, Result};
use crate::greens::t0_analytic;
use crate::linalg::{self, c, CMat, I};
use crate::spectral::{self, Branch, Spectrum};

/// Default highest even order `2n_max` is `2 * DEFAULT_N_MAX`.
pub const DEFAULT_N_MAX: usize = 4;

fn require_invertible(ops: &DiscreteOperatorSet) -> Result<()> {
    if ops.bc.has_invertible_laplacian() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{}: T*T has a kernel", ops.bc)))
    }
}

/// `K̃ = H̃₁⁻¹` in the weighted-similarity frame, with a conditioning gate.
fn k_tilde(ops: &DiscreteOperatorSet) -> Result<CMat> {
    require_invertible(ops)?;
    let h = ops.h1_tilde();
    let (vals, u) = linalg::hermitian_eigen(&h)?;
    let top = vals.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let bottom = vals.iter().fold(f64::INFINITY, |a, x| a.min(x.abs()));
    if !(bottom > 1e-13 * top) {
        return Err(Error::Singular(format!("T*T: smallest eigenvalue {bottom:e}")));
    }
    let inv: Vec<f64> = vals.iter().map(|x| 1.0 / x).collect();
    Ok(&linalg::scale_cols(&u, &inv) * &linalg::adjoint(&u))
}

/// `Im tr` of the `ζ^p` coefficients of `(2ζ + iC)(T*T - ζ² - iζC)⁻¹`, `p = 0..=p_max`.
///
/// `M(ζ) = Σ R_p ζ^p` with `R₀ = K`, `R₁ = iKCK`, `R_p = K(R_{p-2} + iC R_{p-1})`.
pub fn neumann_coefficients(ops: &DiscreteOperatorSet, p_max: usize) -> Result<Vec<f64>> {
    let k = k_tilde(ops)?;
    let ic: Vec<C64> = ops.r.iter().map(|&r| I * r).collect();
    let mut rs: Vec<CMat> = Vec::with_capacity(p_max + 1);
    rs.push(k.clone());
    let mut out = Vec::with_capacity(p_max + 1);
    for p in 0..=p_max {
        if p >= 1 {
            let mut inner = linalg::scale_rows_c(&ic, &rs[p - 1]);
            if p >= 2 {
                inner = &inner + &rs[p - 2];
            }
            rs.push(&k * &inner);
        }
        let mut t = linalg::trace(&linalg::scale_rows_c(&ic, &rs[p]));
        if p >= 1 {
            t += 2.0 * linalg::trace(&rs[p - 1]);
        }
        out.push(t.im);
    }
    Ok(out)
}

/// `t_{2n}` from the Neumann expansion.
pub fn trace_coefficient(n: usize, ops: &DiscreteOperatorSet) -> Result<f64> {
    Ok(neumann_coefficients(ops, 2 * n)?[2 * n])
}

/// Closed forms `t₀ = tr(CK)` and `t₂ = 3 tr(CK²) - tr((CK)³)`.
pub fn trace_coefficient_closed(n: usize, ops: &DiscreteOperatorSet) -> Result<f64> {
    let k = k_tilde(ops)?;
    let ck = linalg::scale_rows(&ops.r, &k);
    match n {
        0 => Ok(linalg::trace(&ck).re),
        1 => {
            let ck2 = &ck * &k;
            let ck3 = &(&ck * &ck) * &ck;
            Ok(3.0 * linalg::trace(&ck2).re - linalg::trace(&ck3).re)
        }
        _ => Err(Error::Unsupported(format!("closed form for t_{} not available", 2 * n))),
    }
}

/// `S_m = Σ' Im(λ^{m+1}) / |λ|^{2(m+1)}` over nonzero eigenvalues.
pub fn eigen_sum(m: usize, spec: &Spectrum) -> Result<f64> {
    let nz = spec.nonzero();
    if nz.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let e = (m + 1) as i32;
    Ok(nz.iter().map(|l| l.powi(e).im / l.norm().powi(2 * e)).sum())
}

/// `Σ' |λ|^{-(m+1)}`, the natural magnitude of `S_m`.
pub fn eigen_sum_scale(m: usize, spec: &Spectrum) -> f64 {
    spec.nonzero().iter().map(|l| l.norm().powi(-((m + 1) as i32))).sum()
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TraceDiscrepancy {
    /// `|S_{2n} + t_{2n}|`.
    pub even: f64,
    /// `|S_{2n+1}|`.
    pub odd: f64,
    pub scale_even: f64,
    pub scale_odd: f64,
}

pub fn verify_trace_identity(n: usize, ops: &DiscreteOperatorSet, spec: &Spectrum) -> Result<TraceDiscrepancy> {
    let t = trace_coefficient(n, ops)?;
    Ok(TraceDiscrepancy {
        even: (eigen_sum(2 * n, spec)? + t).abs(),
        odd: eigen_sum(2 * n + 1, spec)?.abs(),
        scale_even: eigen_sum_scale(2 * n, spec),
        scale_odd: eigen_sum_scale(2 * n + 1, spec),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceLedger {
    pub bc: BoundaryCondition,
    pub n_grid: usize,
    pub n_max: usize,
    /// `t_{2k}` for `k = 0..=n_max`.
    pub t: Vec<f64>,
    /// `S_m` for `m = 0..=2 n_max + 1`.
    pub lhs: Vec<f64>,
    pub discrepancies: Vec<TraceDiscrepancy>,
    pub zero_modes: usize,
    pub continuum: Continuum,
}

#[derive(Clone, Debug, Serialize)]
pub struct Continuum {
    pub t0_analytic: Option<f64>,
}

pub fn build_trace_ledger(
    ops: &DiscreteOperatorSet,
    spec: &Spectrum,
    n_max: usize,
    alpha: Option<&CoefficientSpec>,
) -> Result<TraceLedger> {
    let coeffs = neumann_coefficients(ops, 2 * n_max)?;
    let lhs = (0..=2 * n_max + 1).map(|m| eigen_sum(m, spec)).collect::<Result<Vec<_>>>()?;
    let t: Vec<f64> = (0..=n_max).map(|k| coeffs[2 * k]).collect();
    let discrepancies = (0..=n_max)
        .map(|k| TraceDiscrepancy {
            even: (lhs[2 * k] + t[k]).abs(),
            odd: lhs[2 * k + 1].abs(),
            scale_even: eigen_sum_scale(2 * k, spec),
            scale_odd: eigen_sum_scale(2 * k + 1, spec),
        })
        .collect();
    let t0 = match alpha {
        Some(a) => Some(t0_analytic(ops.bc, a)?),
        None => None,
    };
    Ok(TraceLedger {
        bc: ops.bc,
        n_grid: ops.grid.n,
        n_max,
        t,
        lhs,
        discrepancies,
        zero_modes: spec.zero_modes,
        continuum: Continuum { t0_analytic: t0 },
    })
}

impl TraceLedger {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("ledger fields are plain numbers")
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolventTraceReport {
    /// `tr Im (D+B-ζ)⁻¹` from a dense inverse.
    pub lhs: f64,
    /// `Im tr[(2ζ + iC)(T*T - ζ² - iζC)⁻¹]`.
    pub rhs: f64,
    /// `|lhs(ζ) - lhs(-ζ)|`.
    pub parity_defect: f64,
}

/// Minimum distance of `ζ` from `σ(D+B)`.
pub const RESOLVENT_GAP: f64 = 1e-8;

fn im_trace_direct(zeta: f64, ops: &DiscreteOperatorSet, eig: &[C64]) -> Result<f64> {
    let dist = eig.iter().map(|l| (l - c(zeta, 0.0)).norm()).fold(f64::INFINITY, f64::min);
    if dist <= RESOLVENT_GAP {
        return Err(Error::NearSpectrum(dist));
    }
    let r = linalg::inverse(&linalg::shift(&ops.dirac_tilde(), c(zeta, 0.0)))?;
    let anti = linalg::scale(&(&r - &linalg::adjoint(&r)), c(0.0, -0.5));
    Ok(linalg::trace(&anti).re)
}

/// `Im tr[(2ζ + iC)(H̃₁ - ζ² - iζC)⁻¹]`.
pub fn reduced_trace(zeta: f64, ops: &DiscreteOperatorSet) -> Result<f64> {
    require_invertible(ops)?;
    let shift: Vec<C64> = ops.r.iter().map(|&r| c(zeta * zeta, zeta * r)).collect();
    let a = &ops.h1_tilde() - &linalg::diag(&shift);
    let inv = linalg::inverse(&a)?;
    let front: Vec<C64> = ops.r.iter().map(|&r| c(2.0 * zeta, r)).collect();
    Ok(linalg::trace(&linalg::scale_rows_c(&front, &inv)).im)
}

pub fn resolvent_trace_expansion(zeta: f64, ops: &DiscreteOperatorSet) -> Result<ResolventTraceReport> {
    let eig = spectral::eigen_dirac_with(ops, false)?.eigenvalues;
    let lhs = im_trace_direct(zeta, ops, &eig)?;
    let mirror = im_trace_direct(-zeta, ops, &eig)?;
    Ok(ResolventTraceReport { lhs, rhs: reduced_trace(zeta, ops)?, parity_defect: (lhs - mirror).abs() })
}

/// `Σ' Im((λ - ζ)⁻¹)` over nonzero eigenvalues.
pub fn spectral_resolvent_trace(zeta: f64, spec: &Spectrum) -> f64 {
    spec.nonzero().iter().map(|l| (1.0 / (l - c(zeta, 0.0))).im).sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct LivsicReport {
    /// `Σ Im μ` over eigenvalues `μ` of the shifted resolvent.
    pub eigen_side: f64,
    /// `tr Im R`.
    pub trace_side: f64,
    /// Smallest eigenvalue of `Im R`; nonnegative when the shift is large enough.
    pub min_im_eigenvalue: f64,
}

/// Shifted resolvent `R = (D̃+B - (z₁+ζ))⁻¹` with `Im z₁ = ‖B‖ + margin`.
pub fn livsic_check(zeta: f64, margin: f64, ops: &DiscreteOperatorSet) -> Result<LivsicReport> {
    let z = c(zeta, ops.b_norm() + margin);
    let r = linalg::inverse(&linalg::shift(&ops.dirac_tilde(), z))?;
    let mu = linalg::eigenvalues(&r)?;
    let im_r = linalg::scale(&(&r - &linalg::adjoint(&r)), c(0.0, -0.5));
    let h = linalg::hermitian_eigenvalues(&im_r)?;
    Ok(LivsicReport {
        eigen_side: mu.iter().map(|m| m.im).sum(),
        trace_side: linalg::trace(&im_r).re,
        min_im_eigenvalue: h.iter().cloned().fold(f64::INFINITY, f64::min),
    })
}

/// Taylor coefficients of `ζ ↦ Σ' Im((λ-ζ)⁻¹)` by least squares on Chebyshev points of `[-h, h]`.
pub fn series_fit(spec: &Spectrum, half_width: f64, degree: usize, samples: usize) -> Result<Vec<f64>> {
    if samples <= degree {
        return Err(Error::Insufficient { needed: degree + 1, found: samples });
    }
    let pts: Vec<f64> = (0..samples)
        .map(|k| (std::f64::consts::PI * (k as f64 + 0.5) / samples as f64).cos())
        .collect();
    let a = faer::Mat::from_fn(samples, degree + 1, |i, j| c(pts[i].powi(j as i32), 0.0));
    let b = faer::Mat::from_fn(samples, 1, |i, _| c(spectral_resolvent_trace(pts[i] * half_width, spec), 0.0));
    let x = linalg::lstsq(&a, &b, 1e-14)?;
    Ok((0..=degree).map(|j| x[(j, 0)].re / half_width.powi(j as i32)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularizedSums {
    /// `(J, Σ_{j≤J} [λ₋,j + λ₊,j - 2c₀])` at the requested cut-offs.
    pub partial_sums: Vec<(usize, C64)>,
    pub target: C64,
    pub pairs: usize,
}

/// Pairs branch eigenvalues by rank: real branches by `|Re λ|`, imaginary ones nested by `Im λ`.
pub fn pair_eigenvalues(spec: &Spectrum) -> Result<Vec<(C64, C64)>> {
    let plus = spec.branch(Branch::Plus);
    let minus = spec.branch(Branch::Minus);
    if plus.len() != minus.len() {
        return Err(Error::Pairing(format!("{} plus vs {} minus eigenvalues", plus.len(), minus.len())));
    }
    let mut imag = spec.branch(Branch::Imaginary);
    if imag.len() % 2 != 0 {
        return Err(Error::Pairing(format!("{} purely imaginary eigenvalues", imag.len())));
    }
    imag.sort_by(|a, b| a.im.total_cmp(&b.im));
    let h = imag.len() / 2;
    let mut pairs: Vec<(C64, C64)> = (0..h).map(|k| (imag[h - 1 - k], imag[h + k])).collect();
    pairs.extend(minus.into_iter().zip(plus));
    Ok(pairs)
}

/// Partial sums of `λ₋,j + λ₊,j - 2c₀`, `c₀ = -(i/2)∫α`, against `(i/4)[α(0)+α(1)] + c₀`.
pub fn regularized_sum_check(spec: &Spectrum, alpha: &CoefficientSpec, cuts: &[usize]) -> Result<RegularizedSums> {
    let c0 = c(0.0, -0.5 * crate::coefficients::integrate(alpha, 0.0, 1.0)?);
    let target = c(0.0, 0.25 * (alpha.sample(0.0)? + alpha.value(1.0))) + c0;
    let pairs = pair_eigenvalues(spec)?;
    let mut acc = c(0.0, 0.0);
    let mut partial = Vec::with_capacity(pairs.len());
    for (a, b) in &pairs {
        acc += a + b - 2.0 * c0;
        partial.push(acc);
    }
    let partial_sums = cuts.iter().filter(|&&j| j >= 1 && j <= pairs.len()).map(|&j| (j, partial[j - 1])).collect();
    Ok(RegularizedSums { partial_sums, target, pairs: pairs.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{parse_coefficient_spec, CoefficientKind::*};
    use crate::spectral::eigen_dirac_with;

    fn ops(n: usize, rho: &str, alpha: &str, bc: BoundaryCondition) -> DiscreteOperatorSet {
        let r = parse_coefficient_spec(rho, Density).unwrap();
        let a = parse_coefficient_spec(alpha, Damping).unwrap();
        DiscreteOperatorSet::build(n, &r, &a, bc).unwrap()
    }

    #[test]
    fn closed_and_neumann_agree() {
        for bc in [BoundaryCondition::Min, BoundaryCondition::Zero1, BoundaryCondition::Quasi(c(0.2, 0.9))] {
            let o = ops(32, "poly 1 0.3", "poly 0.4 -1 0.5", bc);
            for n in 0..2 {
                let a = trace_coefficient(n, &o).unwrap();
                let b = trace_coefficient_closed(n, &o).unwrap();
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{bc} n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn discrete_t0_for_unit_coefficients() {
        for n in [8usize, 16, 40] {
            let o = ops(n, "const 1", "const 1", BoundaryCondition::Min);
            let t0 = trace_coefficient(0, &o).unwrap();
            let exact = 1.0 / 6.0 - 1.0 / (6.0 * (n * n) as f64);
            assert!((t0 - exact).abs() < 1e-13, "{n}: {t0}");
        }
    }

    #[test]
    fn odd_coefficients_vanish() {
        for bc in [BoundaryCondition::Zero0, BoundaryCondition::Quasi(c(0.5, -0.4))] {
            let o = ops(24, "poly 1.1 -0.4", "poly -0.3 1.2", bc);
            let t = neumann_coefficients(&o, 7).unwrap();
            for p in [1, 3, 5, 7] {
                assert!(t[p].abs() <= 1e-12 * t[p - 1].abs().max(1.0), "{bc} p={p}: {t:?}");
            }
        }
    }

    #[test]
    fn trace_identity_and_ledger() {
        let o = ops(48, "piece 0 0.5: poly 1 0.4; piece 0.5 1: const 1.3", "poly 0.6 -0.8", BoundaryCondition::Zero1);
        let s = eigen_dirac_with(&o, false).unwrap();
        let d0 = verify_trace_identity(0, &o, &s).unwrap();
        assert!(d0.even <= 1e-8 * d0.scale_even && d0.odd <= 1e-8 * d0.scale_odd, "{d0:?}");
        let d1 = verify_trace_identity(1, &o, &s).unwrap();
        assert!(d1.even <= 1e-6 * d1.scale_even && d1.odd <= 1e-6 * d1.scale_odd, "{d1:?}");
        let alpha = parse_coefficient_spec("poly 0.6 -0.8", Damping).unwrap();
        let ledger = build_trace_ledger(&o, &s, 2, Some(&alpha)).unwrap();
        assert_eq!(ledger.lhs.len(), 6);
        assert!(ledger.discrepancies.iter().all(|d| d.even.is_finite() && d.odd.is_finite()));
        let v: serde_json::Value = serde_json::from_str(&ledger.to_json()).unwrap();
        assert_eq!(v["bc"], "zero1");
        assert!(v["continuum"]["t0_analytic"].as_f64().unwrap() > 0.0);
    }

    #[test]
    fn undamped_sums_vanish() {
        let o = ops(32, "poly 1 0.5", "const 0", BoundaryCondition::Min);
        let s = eigen_dirac_with(&o, false).unwrap();
        for m in 0..4 {
            assert!(eigen_sum(m, &s).unwrap().abs() < 1e-10);
        }
        assert!(trace_coefficient(1, &o).unwrap().abs() < 1e-10);
    }

    #[test]
    fn empty_spectrum_rejected() {
        let o = ops(8, "const 1", "const 0", BoundaryCondition::Min);
        let mut s = eigen_dirac_with(&o, false).unwrap();
        s.zero_flags.iter_mut().for_each(|z| *z = true);
        assert!(matches!(eigen_sum(0, &s), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn resolvent_trace_matches_reduced_form() {
        let o = ops(32, "const 1", "const 1", BoundaryCondition::Min);
        let r = resolvent_trace_expansion(0.1, &o).unwrap();
        assert!((r.lhs - r.rhs).abs() <= 1e-10 && r.parity_defect <= 1e-10, "{r:?}");
        let s = eigen_dirac_with(&o, false).unwrap();
        let at0 = reduced_trace(0.0, &o).unwrap();
        assert!((at0 - spectral_resolvent_trace(0.0, &s)).abs() < 1e-9);
        assert!((at0 - trace_coefficient(0, &o).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn livsic_equality() {
        let o = ops(24, "poly 1 0.5", "poly 1 -2", BoundaryCondition::Zero0);
        let r = livsic_check(0.3, 1.0, &o).unwrap();
        assert!(r.eigen_side <= r.trace_side + 1e-9 && (r.eigen_side - r.trace_side).abs() <= 1e-9, "{r:?}");
        assert!(r.min_im_eigenvalue >= -1e-12);
    }

    #[test]
    fn series_coefficients_match_sums() {
        let o = ops(32, "poly 1 0.2", "poly 0.8 0.4", BoundaryCondition::Min);
        let s = eigen_dirac_with(&o, false).unwrap();
        let coeffs = series_fit(&s, 0.05, 8, 41).unwrap();
        for (m, cm) in coeffs.iter().enumerate().take(4) {
            let sm = eigen_sum(m, &s).unwrap();
            assert!((cm + sm).abs() < 1e-6, "m={m}: {cm} vs {}", -sm);
        }
    }

    #[test]
    fn constant_damping_pairs_cancel() {
        for a in [0.0, 1.0, 9.0] {
            let o = ops(32, "const 1", &format!("const {a}"), BoundaryCondition::Min);
            let s = eigen_dirac_with(&o, false).unwrap();
            let alpha = CoefficientSpec::constant(a, Damping).unwrap();
            let r = regularized_sum_check(&s, &alpha, &[1, 8, 31]).unwrap();
            assert_eq!(r.pairs, 31);
            assert!(r.target.norm() < 1e-15);
            for (_, v) in &r.partial_sums {
                assert!(v.norm() < 1e-9, "a={a}: {r:?}");
            }
        }
    }

    #[test]
    fn laplacian_kernel_rejected() {
        let o = ops(8, "const 1", "const 1", BoundaryCondition::Quasi(c(1.0, 0.0)));
        assert!(matches!(trace_coefficient(0, &o), Err(Error::Unsupported(_))));
    }
}
