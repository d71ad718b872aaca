//! Staggered-grid discretization of `T = (i/ρ) d/dx` on `L²([0,1]; ρ² dx)`.
//!
//! `u`-type functions live on nodes `x_k = k/n`, `v`-type functions on cell
//! midpoints. The adjoint is *defined* as `T* = Wu⁻¹ Tᴴ Wv`, so every
//! supersymmetric identity holds exactly at matrix level.
//!
//! Most spectral work happens in the weighted-similarity ("tilde") frame
//! `T̃ = Wv^{1/2} T Wu^{-1/2}`, where weighted norms become Euclidean and `D̃`
//! is Hermitian.

use std::fmt;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::coefficients::CoefficientSpec;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, I};

pub const MIN_CELLS: usize = 4;

/// Boundary condition selecting the realization of `T`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// No boundary condition. Kernel and supersymmetry checks only.
    Max,
    /// `f(0) = f(1) = 0`.
    Min,
    /// `f(0) = 0`.
    Zero0,
    /// `f(1) = 0`.
    Zero1,
    /// `f(1) = ω f(0)`, `ω ≠ 0`.
    Quasi(C64),
}

impl BoundaryCondition {
    pub fn quasi(omega: C64) -> Result<Self> {
        if omega == c(0.0, 0.0) || !omega.re.is_finite() || !omega.im.is_finite() {
            return Err(Error::Boundary(format!("omega must be finite and nonzero, got {omega}")));
        }
        Ok(BoundaryCondition::Quasi(omega))
    }

    /// Boundary condition with `ω` replaced by `ω̄`; identity for the others.
    pub fn conj(self) -> Self {
        match self {
            BoundaryCondition::Quasi(w) => BoundaryCondition::Quasi(w.conj()),
            other => other,
        }
    }

    /// Whether `T/i` is a real matrix.
    pub fn is_real(self) -> bool {
        match self {
            BoundaryCondition::Quasi(w) => w.im == 0.0,
            _ => true,
        }
    }

    /// Whether continuum `T*T` has trivial kernel.
    pub fn has_invertible_laplacian(self) -> bool {
        match self {
            BoundaryCondition::Max => false,
            BoundaryCondition::Quasi(w) => w != c(1.0, 0.0),
            _ => true,
        }
    }

    /// Retained node indices for `n` cells.
    pub fn retained_nodes(self, n: usize) -> Vec<usize> {
        match self {
            BoundaryCondition::Max => (0..=n).collect(),
            BoundaryCondition::Min => (1..n).collect(),
            BoundaryCondition::Zero0 => (1..=n).collect(),
            BoundaryCondition::Zero1 | BoundaryCondition::Quasi(_) => (0..n).collect(),
        }
    }

    /// Expected `(dim ker T, dim ker T*, dim ker D)`.
    pub fn expected_kernels(self) -> (usize, usize, usize) {
        match self {
            BoundaryCondition::Max => (1, 0, 1),
            BoundaryCondition::Min => (0, 1, 1),
            BoundaryCondition::Zero0 | BoundaryCondition::Zero1 => (0, 0, 0),
            BoundaryCondition::Quasi(w) if w == c(1.0, 0.0) => (1, 1, 2),
            BoundaryCondition::Quasi(_) => (0, 0, 0),
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryCondition::Max => write!(f, "max"),
            BoundaryCondition::Min => write!(f, "min"),
            BoundaryCondition::Zero0 => write!(f, "zero0"),
            BoundaryCondition::Zero1 => write!(f, "zero1"),
            BoundaryCondition::Quasi(w) => write!(f, "omega:{},{}", w.re, w.im),
        }
    }
}

impl FromStr for BoundaryCondition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "max" => Ok(BoundaryCondition::Max),
            "min" => Ok(BoundaryCondition::Min),
            "zero0" => Ok(BoundaryCondition::Zero0),
            "zero1" => Ok(BoundaryCondition::Zero1),
            _ => {
                let rest = s
                    .strip_prefix("omega:")
                    .ok_or_else(|| Error::Boundary(format!("expected min|max|zero0|zero1|omega:RE,IM, got `{s}`")))?;
                let (re, im) = rest
                    .split_once(',')
                    .ok_or_else(|| Error::Boundary(format!("omega needs RE,IM, got `{rest}`")))?;
                let parse = |t: &str| {
                    t.trim().parse::<f64>().map_err(|_| Error::Boundary(format!("bad number `{t}` in omega")))
                };
                BoundaryCondition::quasi(c(parse(re)?, parse(im)?))
            }
        }
    }
}

impl Serialize for BoundaryCondition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BoundaryCondition {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Uniform staggered grid with trapezoid node weights and midpoint cell weights.
#[derive(Clone, Debug)]
pub struct WeightedGrid {
    pub n: usize,
    pub h: f64,
    pub bc: BoundaryCondition,
    /// Global indices `k` of retained nodes `x_k = k h`.
    pub node_index: Vec<usize>,
    pub nodes: Vec<f64>,
    pub cells: Vec<f64>,
    pub node_weights: Vec<f64>,
    pub cell_weights: Vec<f64>,
}

impl WeightedGrid {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }
}

pub fn build_grid(n: usize, rho: &CoefficientSpec, bc: BoundaryCondition) -> Result<WeightedGrid> {
    if n < MIN_CELLS {
        return Err(Error::GridTooSmall(n, MIN_CELLS));
    }
    let h = 1.0 / n as f64;
    let node_index = bc.retained_nodes(n);
    let nodes: Vec<f64> = node_index.iter().map(|&k| k as f64 * h).collect();
    let cells: Vec<f64> = (0..n).map(|j| (j as f64 + 0.5) * h).collect();
    let node_weights = node_index
        .iter()
        .map(|&k| {
            let x = k as f64 * h;
            match (bc, k) {
                // Node n is ω·node 0; both trapezoid halves fold into node 0.
                (BoundaryCondition::Quasi(w), 0) => 0.5 * h * (rho.value(0.0).powi(2) + w.norm_sqr() * rho.value(1.0).powi(2)),
                (_, k) if k == 0 || k == n => 0.5 * h * rho.value(x).powi(2),
                _ => h * rho.value(x).powi(2),
            }
        })
        .collect();
    let cell_weights = cells.iter().map(|&x| h * rho.value(x).powi(2)).collect();
    Ok(WeightedGrid { n, h, bc, node_index, nodes, cells, node_weights, cell_weights })
}

/// `(T f)_j = i (f_{j+1} - f_j) / (h ρ(mid_j))` with the boundary rule of `bc`.
pub fn assemble_t(grid: &WeightedGrid, rho: &CoefficientSpec, bc: BoundaryCondition) -> Result<CMat> {
    if grid.bc != bc {
        return Err(Error::Boundary(format!("grid built for {}, operator requested for {bc}", grid.bc)));
    }
    let n = grid.n;
    let m = grid.node_count();
    let mut col_of = vec![None; n + 1];
    for (pos, &k) in grid.node_index.iter().enumerate() {
        col_of[k] = Some(pos);
    }
    let mut t: CMat = Mat::zeros(n, m);
    for j in 0..n {
        let s = I / (grid.h * rho.value(grid.cells[j]));
        for (k, sign) in [(j + 1, 1.0), (j, -1.0)] {
            match (col_of[k], bc) {
                (Some(col), _) => t[(j, col)] += s * sign,
                (None, BoundaryCondition::Quasi(w)) if k == n => t[(j, 0)] += s * sign * w,
                _ => {}
            }
        }
    }
    Ok(t)
}

/// `Wu⁻¹ Tᴴ Wv`.
pub fn assemble_adjoint(t: &CMat, wu: &[f64], wv: &[f64]) -> Result<CMat> {
    if t.nrows() != wv.len() || t.ncols() != wu.len() {
        return Err(Error::Boundary(format!(
            "T is {}x{}, weights are {} and {}",
            t.nrows(),
            t.ncols(),
            wv.len(),
            wu.len()
        )));
    }
    if wu.iter().chain(wv).any(|&w| !(w > 0.0)) {
        return Err(Error::Singular("non-positive weight".into()));
    }
    let inv_wu: Vec<f64> = wu.iter().map(|w| 1.0 / w).collect();
    Ok(linalg::scale_cols(&linalg::scale_rows(&inv_wu, &linalg::adjoint(t)), wv))
}

/// `[[0, T*], [T, 0]]` on node ⊕ cell space.
pub fn assemble_dirac(t: &CMat, tstar: &CMat) -> CMat {
    let (n, m) = (t.nrows(), t.ncols());
    linalg::block2(&linalg::zeros(m, m), tstar, t, &linalg::zeros(n, n))
}

/// `diag(-i R, 0)` with `R = α/ρ²` at retained nodes.
pub fn assemble_damping(r: &[f64], cells: usize) -> CMat {
    let mut d: Vec<C64> = r.iter().map(|&x| c(0.0, -x)).collect();
    d.extend(std::iter::repeat(c(0.0, 0.0)).take(cells));
    linalg::diag(&d)
}

/// `[[0, I], [-T*T, -R]]` on node ⊕ node space.
pub fn assemble_generator(tstar_t: &CMat, r: &[f64]) -> CMat {
    let m = r.len();
    let minus_r: Vec<f64> = r.iter().map(|x| -x).collect();
    linalg::block2(
        &linalg::zeros(m, m),
        &linalg::identity(m),
        &linalg::scale(tstar_t, c(-1.0, 0.0)),
        &linalg::diag_real(&minus_r),
    )
}

/// Immutable discrete operator family for one grid, coefficient pair and boundary condition.
#[derive(Clone, Debug)]
pub struct DiscreteOperatorSet {
    pub grid: WeightedGrid,
    pub bc: BoundaryCondition,
    /// Cells × retained nodes.
    pub t: CMat,
    /// Retained nodes × cells.
    pub tstar: CMat,
    /// `T̃ = Wv^{1/2} T Wu^{-1/2}`.
    pub t_tilde: CMat,
    pub wu: Vec<f64>,
    pub wv: Vec<f64>,
    /// `α/ρ²` at retained nodes.
    pub r: Vec<f64>,
}

impl DiscreteOperatorSet {
    pub fn build(n: usize, rho: &CoefficientSpec, alpha: &CoefficientSpec, bc: BoundaryCondition) -> Result<Self> {
        let grid = build_grid(n, rho, bc)?;
        let t = assemble_t(&grid, rho, bc)?;
        let wu = grid.node_weights.clone();
        let wv = grid.cell_weights.clone();
        let tstar = assemble_adjoint(&t, &wu, &wv)?;
        let su: Vec<f64> = wu.iter().map(|w| 1.0 / w.sqrt()).collect();
        let sv: Vec<f64> = wv.iter().map(|w| w.sqrt()).collect();
        let t_tilde = linalg::scale_cols(&linalg::scale_rows(&sv, &t), &su);
        let r = grid
            .node_index
            .iter()
            .zip(&grid.nodes)
            .map(|(&k, &x)| match (bc, k) {
                (BoundaryCondition::Quasi(w), 0) => {
                    let w2 = w.norm_sqr();
                    (alpha.value(0.0) + w2 * alpha.value(1.0)) / (rho.value(0.0).powi(2) + w2 * rho.value(1.0).powi(2))
                }
                _ => alpha.value(x) / rho.value(x).powi(2),
            })
            .collect();
        Ok(DiscreteOperatorSet { grid, bc, t, tstar, t_tilde, wu, wv, r })
    }

    /// Retained node count `m`.
    pub fn nodes(&self) -> usize {
        self.t.ncols()
    }

    pub fn cells(&self) -> usize {
        self.t.nrows()
    }

    pub fn dim_dirac(&self) -> usize {
        self.nodes() + self.cells()
    }

    pub fn tstar_t(&self) -> CMat {
        &self.tstar * &self.t
    }

    pub fn t_tstar(&self) -> CMat {
        &self.t * &self.tstar
    }

    pub fn d(&self) -> CMat {
        assemble_dirac(&self.t, &self.tstar)
    }

    pub fn b(&self) -> CMat {
        assemble_damping(&self.r, self.cells())
    }

    pub fn d_plus_b(&self) -> CMat {
        &self.d() + &self.b()
    }

    pub fn g(&self) -> CMat {
        assemble_generator(&self.tstar_t(), &self.r)
    }

    /// `diag(Wu, Wv)`.
    pub fn wd(&self) -> Vec<f64> {
        self.wu.iter().chain(&self.wv).copied().collect()
    }

    /// `T̃ᴴ T̃`, Hermitian and similar to `T*T`.
    pub fn h1_tilde(&self) -> CMat {
        self.t_tilde.adjoint() * &self.t_tilde
    }

    /// `T̃ T̃ᴴ`, Hermitian and similar to `TT*`.
    pub fn h2_tilde(&self) -> CMat {
        &self.t_tilde * self.t_tilde.adjoint()
    }

    pub fn d_tilde(&self) -> CMat {
        let tt = &self.t_tilde;
        assemble_dirac(tt, &linalg::adjoint(tt))
    }

    /// `D̃ + B`, similar to `D + B`.
    pub fn dirac_tilde(&self) -> CMat {
        &self.d_tilde() + &self.b()
    }

    /// `[[0, I], [-T̃ᴴT̃, -R]]`, similar to `G`.
    pub fn generator_tilde(&self) -> CMat {
        assemble_generator(&self.h1_tilde(), &self.r)
    }

    /// `i(D̃ + B)` as a real matrix when `T/i` is real.
    ///
    /// With `T̃ = i S`, `i(D̃+B) = [[R, Sᵀ], [-S, 0]]`.
    pub fn i_dirac_tilde_real(&self) -> Option<Mat<f64>> {
        if !self.bc.is_real() {
            return None;
        }
        let (n, m) = (self.cells(), self.nodes());
        let s = &self.t_tilde;
        Some(Mat::from_fn(m + n, m + n, |i, j| match (i < m, j < m) {
            (true, true) => if i == j { self.r[i] } else { 0.0 },
            (true, false) => s[(j - m, i)].im,
            (false, true) => -s[(i - m, j)].im,
            (false, false) => 0.0,
        }))
    }

    /// `G̃` as a real matrix when `T/i` is real.
    pub fn generator_tilde_real(&self) -> Option<Mat<f64>> {
        if !self.bc.is_real() {
            return None;
        }
        let m = self.nodes();
        let s = Mat::<f64>::from_fn(self.cells(), m, |i, j| self.t_tilde[(i, j)].im);
        let h1 = s.transpose() * &s;
        Some(Mat::from_fn(2 * m, 2 * m, |i, j| match (i < m, j < m) {
            (true, true) => 0.0,
            (true, false) => if j - m == i { 1.0 } else { 0.0 },
            (false, true) => -h1[(i - m, j)],
            (false, false) => if i == j { -self.r[i - m] } else { 0.0 },
        }))
    }

    /// Weighted operator norm of `B`, i.e. `max |α/ρ²|` over retained nodes.
    pub fn b_norm(&self) -> f64 {
        self.r.iter().fold(0.0, |a, x| a.max(x.abs()))
    }

    /// `|⟨T* g, f⟩_Wu - ⟨g, T f⟩_Wv|` for one pair.
    pub fn adjoint_defect(&self, f: &[C64], g: &[C64]) -> f64 {
        let tsg = linalg::matvec(&self.tstar, g);
        let tf = linalg::matvec(&self.t, f);
        let lhs: C64 = tsg.iter().zip(f).zip(&self.wu).map(|((a, b), w)| a.conj() * b * w).sum();
        let rhs: C64 = g.iter().zip(&tf).zip(&self.wv).map(|((a, b), w)| a.conj() * b * w).sum();
        (lhs - rhs).norm()
    }

    /// `‖Wd D - Dᴴ Wd‖_F / ‖Wd D‖_F`.
    pub fn weighted_selfadjoint_defect(&self) -> f64 {
        let wd = self.wd();
        let d = self.d();
        let left = linalg::scale_rows(&wd, &d);
        let right = linalg::scale_cols(&linalg::adjoint(&d), &wd);
        linalg::frob(&(&left - &right)) / linalg::frob(&left).max(f64::MIN_POSITIVE)
    }

    /// `‖D̃ - D̃ᴴ‖_F / ‖D̃‖_F`.
    pub fn tilde_hermitian_defect(&self) -> f64 {
        let d = self.d_tilde();
        linalg::frob(&(&d - d.adjoint())) / linalg::frob(&d).max(f64::MIN_POSITIVE)
    }

    /// `‖σ₃ D σ₃ + D‖_F` with `σ₃ = diag(I, -I)`.
    pub fn sigma3_defect(&self) -> f64 {
        let d = self.d();
        let m = self.nodes();
        let sign = |k: usize| if k < m { 1.0 } else { -1.0 };
        let conj = Mat::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] * (sign(i) * sign(j)) + d[(i, j)]);
        linalg::frob(&conj)
    }
}

/// Numerical kernel dimensions of `T`, `T*` and `D`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelCensus {
    pub ker_t: usize,
    pub ker_tstar: usize,
    pub ker_d: usize,
    pub tol_zero: f64,
    /// Smallest ratio `max(σ/tol, tol/σ)` over all singular values; ≥ 10 when unambiguous.
    pub separation: f64,
}

/// `tol_zero = 1e-10 · σ_max(D)`.
pub const TOL_ZERO_REL: f64 = 1e-10;

pub fn kernel_dimensions(ops: &DiscreteOperatorSet) -> Result<KernelCensus> {
    let s = linalg::singular_values(&ops.t_tilde)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let tol = TOL_ZERO_REL * smax;
    let mut separation = f64::INFINITY;
    let mut check = |sig: f64| -> Result<()> {
        let ratio = if sig == 0.0 { f64::INFINITY } else { (sig / tol).max(tol / sig) };
        separation = separation.min(ratio);
        if ratio < 10.0 {
            return Err(Error::AmbiguousKernel { sigma: sig, tol });
        }
        Ok(())
    };
    for &sig in &s {
        check(sig)?;
    }
    let rank = s.iter().filter(|&&x| x > tol).count();
    let ev = linalg::hermitian_eigenvalues(&ops.d_tilde())?;
    for &e in &ev {
        check(e.abs())?;
    }
    let ker_d = ev.iter().filter(|e| e.abs() <= tol).count();
    Ok(KernelCensus {
        ker_t: ops.nodes() - rank,
        ker_tstar: ops.cells() - rank,
        ker_d,
        tol_zero: tol,
        separation,
    })
}

/// `tol_zero` for this operator set.
pub fn tol_zero(ops: &DiscreteOperatorSet) -> Result<f64> {
    Ok(TOL_ZERO_REL * linalg::norm2(&ops.t_tilde)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{parse_coefficient_spec, CoefficientKind::*};

    fn konst(v: f64) -> CoefficientSpec {
        CoefficientSpec::constant(v, Density).unwrap()
    }

    fn damp(v: f64) -> CoefficientSpec {
        CoefficientSpec::constant(v, Damping).unwrap()
    }

    #[test]
    fn min_grid_n4() {
        let g = build_grid(4, &konst(1.0), BoundaryCondition::Min).unwrap();
        assert_eq!(g.nodes, vec![0.25, 0.5, 0.75]);
        assert_eq!(g.node_weights, vec![0.25; 3]);
        assert_eq!(g.cell_weights, vec![0.25; 4]);
    }

    #[test]
    fn zero0_grid_half_weight_at_one() {
        let g = build_grid(4, &konst(1.0), BoundaryCondition::Zero0).unwrap();
        assert_eq!(g.nodes, vec![0.25, 0.5, 0.75, 1.0]);
        assert_eq!(g.node_weights[3], 0.125);
    }

    #[test]
    fn density_two_scales_weights_by_four() {
        let g = build_grid(4, &konst(2.0), BoundaryCondition::Min).unwrap();
        assert!(g.node_weights.iter().chain(&g.cell_weights).all(|&w| w == 1.0));
    }

    #[test]
    fn grid_too_small() {
        assert!(matches!(build_grid(3, &konst(1.0), BoundaryCondition::Min), Err(Error::GridTooSmall(3, 4))));
    }

    #[test]
    fn min_stencil_entries() {
        for (rho, mag) in [(1.0, 4.0), (2.0, 2.0)] {
            let r = konst(rho);
            let g = build_grid(4, &r, BoundaryCondition::Min).unwrap();
            let t = assemble_t(&g, &r, BoundaryCondition::Min).unwrap();
            assert_eq!((t.nrows(), t.ncols()), (4, 3));
            for j in 0..4 {
                for k in 0..3 {
                    let expect = if j < 3 && k == j { mag } else if j >= 1 && k == j - 1 { -mag } else { 0.0 };
                    assert_eq!(t[(j, k)], c(0.0, expect), "({j},{k})");
                }
            }
        }
    }

    #[test]
    fn periodic_constant_in_kernel() {
        let r = konst(1.0);
        let bc = BoundaryCondition::Quasi(c(1.0, 0.0));
        let g = build_grid(4, &r, bc).unwrap();
        let t = assemble_t(&g, &r, bc).unwrap();
        assert_eq!((t.nrows(), t.ncols()), (4, 4));
        let tf = linalg::matvec(&t, &[c(1.0, 0.0); 4]);
        assert!(linalg::vnorm(&tf) < 1e-15);
    }

    #[test]
    fn mismatched_grid_rejected() {
        let r = konst(1.0);
        let g = build_grid(4, &r, BoundaryCondition::Min).unwrap();
        assert!(assemble_t(&g, &r, BoundaryCondition::Zero0).is_err());
    }

    #[test]
    fn damping_blocks() {
        let ops = DiscreteOperatorSet::build(8, &konst(1.0), &damp(1.0), BoundaryCondition::Min).unwrap();
        let b = ops.b();
        for k in 0..ops.nodes() {
            assert_eq!(b[(k, k)], c(0.0, -1.0));
        }
        assert_eq!(ops.b_norm(), 1.0);
        let ops0 = DiscreteOperatorSet::build(8, &konst(1.0), &damp(0.0), BoundaryCondition::Min).unwrap();
        assert_eq!(linalg::frob(&ops0.b()), 0.0);
    }

    #[test]
    fn damping_norm_is_weighted_operator_norm() {
        let rho = parse_coefficient_spec("poly 1 0.5", Density).unwrap();
        let alpha = parse_coefficient_spec("poly -0.3 1.2", Damping).unwrap();
        let ops = DiscreteOperatorSet::build(16, &rho, &alpha, BoundaryCondition::Zero1).unwrap();
        // B commutes with the diagonal weights, so its weighted norm is its Euclidean norm.
        let nb = linalg::norm2(&ops.b()).unwrap();
        assert!((nb - ops.b_norm()).abs() < 1e-14);
    }

    #[test]
    fn structural_identities() {
        let rho = parse_coefficient_spec("piece 0 0.5: poly 1 1; piece 0.5 1: const 0.7", Density).unwrap();
        let alpha = damp(0.5);
        for bc in [
            BoundaryCondition::Max,
            BoundaryCondition::Min,
            BoundaryCondition::Zero0,
            BoundaryCondition::Zero1,
            BoundaryCondition::Quasi(c(0.3, -1.2)),
        ] {
            let ops = DiscreteOperatorSet::build(12, &rho, &alpha, bc).unwrap();
            assert!(ops.weighted_selfadjoint_defect() < 1e-14, "{bc}");
            assert!(ops.tilde_hermitian_defect() < 1e-14, "{bc}");
            assert_eq!(ops.sigma3_defect(), 0.0, "{bc}");
        }
    }

    #[test]
    fn generator_real_fast_path_matches() {
        let ops = DiscreteOperatorSet::build(8, &konst(1.3), &damp(0.4), BoundaryCondition::Zero0).unwrap();
        let g = ops.generator_tilde();
        let gr = ops.generator_tilde_real().unwrap();
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                assert!((g[(i, j)] - c(gr[(i, j)], 0.0)).norm() < 1e-12);
            }
        }
        let d = ops.dirac_tilde();
        let dr = ops.i_dirac_tilde_real().unwrap();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                assert!((d[(i, j)] * I - c(dr[(i, j)], 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kernel_census_small() {
        let rho = konst(1.0);
        let alpha = damp(0.0);
        for bc in [
            BoundaryCondition::Max,
            BoundaryCondition::Min,
            BoundaryCondition::Zero0,
            BoundaryCondition::Zero1,
            BoundaryCondition::Quasi(c(1.0, 0.0)),
            BoundaryCondition::Quasi(c(0.0, 1.0)),
        ] {
            let ops = DiscreteOperatorSet::build(8, &rho, &alpha, bc).unwrap();
            let k = kernel_dimensions(&ops).unwrap();
            assert_eq!((k.ker_t, k.ker_tstar, k.ker_d), bc.expected_kernels(), "{bc}");
        }
    }

    #[test]
    fn bc_parse_and_display() {
        for s in ["max", "min", "zero0", "zero1", "omega:0,1", "omega:-1,0"] {
            let bc: BoundaryCondition = s.parse().unwrap();
            assert_eq!(bc.to_string(), s);
        }
        assert!("omega:0,0".parse::<BoundaryCondition>().is_err());
        assert!("dirichlet".parse::<BoundaryCondition>().is_err());
    }
}
