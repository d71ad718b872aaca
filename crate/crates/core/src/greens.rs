//! Closed-form kernels of `(T*T)⁻¹` at spectral parameter zero, and the
//! resulting continuum values of the first trace coefficient.
//!
//! The kernels do not depend on `ρ`: `T*T = -ρ⁻² d²/dx²` composes with the
//! `ρ² dx` measure and the density cancels.

use num_complex::Complex64 as C64;

use crate::coefficients::{integrate_product, CoefficientSpec, Factor};
use crate::discretization::{BoundaryCondition, DiscreteOperatorSet};
use crate::error::{Error, Result};
use crate::linalg::c;

fn reject(bc: BoundaryCondition) -> Result<()> {
    if bc.has_invertible_laplacian() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{bc}: T*T has a kernel")))
    }
}

/// `c₊, c₋` of the quasi-periodic kernel.
pub fn quasi_constants(omega: C64) -> (C64, C64) {
    let w2 = omega.norm_sqr();
    let d = 2.0 * (c(1.0, 0.0) - omega).norm_sqr();
    let plus = (c(1.0 - w2, 0.0) + omega - omega.conj()) / d;
    let minus = (c(1.0 - w2, 0.0) - omega + omega.conj()) / d;
    (plus, minus)
}

/// `G(0, x, x')` with `((T*T)⁻¹ f)(x) = ∫ ρ(x')² G(0,x,x') f(x') dx'`.
///
/// For `Quasi(ω)` the kernel satisfies `G(1,·) = ω G(0,·)` and
/// `∂ₓG(1,·) = ∂ₓG(0,·)/ω̄` in its first argument, which puts `c₋` on `x` and
/// `c₊` on `x'`.
pub fn greens_kernel(bc: BoundaryCondition, x: f64, xp: f64) -> Result<C64> {
    for p in [x, xp] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::OutOfDomain(p));
        }
    }
    reject(bc)?;
    let (lo, hi) = (x.min(xp), x.max(xp));
    Ok(match bc {
        BoundaryCondition::Min => c(lo * (1.0 - hi), 0.0),
        BoundaryCondition::Zero0 => c(lo, 0.0),
        BoundaryCondition::Zero1 => c(1.0 - hi, 0.0),
        BoundaryCondition::Quasi(w) => {
            let (plus, minus) = quasi_constants(w);
            c(-0.5 * (x - xp).abs() + 1.0 / (c(1.0, 0.0) - w).norm_sqr(), 0.0) - minus * x - plus * xp
        }
        BoundaryCondition::Max => unreachable!(),
    })
}

/// Polynomial `G(0, x, x)` in ascending coefficients.
pub fn kernel_diagonal(bc: BoundaryCondition) -> Result<Vec<f64>> {
    reject(bc)?;
    Ok(match bc {
        BoundaryCondition::Min => vec![0.0, 1.0, -1.0],
        BoundaryCondition::Zero0 => vec![0.0, 1.0],
        BoundaryCondition::Zero1 => vec![1.0, -1.0],
        BoundaryCondition::Quasi(w) => {
            let s = 1.0 / (c(1.0, 0.0) - w).norm_sqr();
            vec![s, (w.norm_sqr() - 1.0) * s]
        }
        BoundaryCondition::Max => unreachable!(),
    })
}

/// Continuum `t₀ = ∫ α(x) G(0,x,x) dx`, integrated exactly.
pub fn t0_analytic(bc: BoundaryCondition, alpha: &CoefficientSpec) -> Result<f64> {
    let diag = kernel_diagonal(bc)?;
    integrate_product(&[Factor::Poly(diag), Factor::Spec(alpha)], 0.0, 1.0)
}

/// `((T*T)⁻¹ f)` at retained nodes by the cell-midpoint rule with `ρ²` weights.
///
/// `f` is sampled at cell midpoints.
pub fn apply_inverse_via_kernel(bc: BoundaryCondition, f: &[C64], ops: &DiscreteOperatorSet) -> Result<Vec<C64>> {
    reject(bc)?;
    let grid = &ops.grid;
    if f.len() != grid.cell_count() || grid.bc != bc {
        return Err(Error::Boundary(format!(
            "expected {} cell samples on a {bc} grid, got {} on {}",
            grid.cell_count(),
            f.len(),
            grid.bc
        )));
    }
    grid.nodes
        .iter()
        .map(|&x| {
            let mut acc = c(0.0, 0.0);
            for ((&xp, &w), &fj) in grid.cells.iter().zip(&grid.cell_weights).zip(f) {
                acc += greens_kernel(bc, x, xp)? * fj * w;
            }
            Ok(acc)
        })
        .collect()
}
