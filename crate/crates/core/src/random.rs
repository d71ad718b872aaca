//! Seeded random coefficient draws for randomized checks.
//!
//! Each piece is built in its local variable `t = (x-a)/(b-a) ∈ [0,1]` as
//! `m + Σ c_k t^k` with `Σ|c_k|` at most half the range half-width, so values
//! stay inside the range by construction.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coefficients::{CoefficientKind, CoefficientSpec, Piece};
use crate::error::Result;

#[derive(Clone, Copy, Debug)]
pub struct DrawConfig {
    pub density: (f64, f64),
    pub damping: (f64, f64),
    pub max_degree: usize,
    /// Interior breakpoints are drawn from `k/grid`, `k = 1..grid`.
    pub breakpoint_grid: usize,
    pub max_breakpoints: usize,
}

impl Default for DrawConfig {
    fn default() -> Self {
        DrawConfig { density: (0.5, 2.0), damping: (-1.0, 1.0), max_degree: 3, breakpoint_grid: 8, max_breakpoints: 2 }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Global monomial coefficients of `Σ c_k ((x-a)/len)^k`.
fn to_global(local: &[f64], a: f64, len: f64) -> Vec<f64> {
    let mut out = vec![0.0; local.len()];
    for (k, &ck) in local.iter().enumerate() {
        let s = ck / len.powi(k as i32);
        for (j, o) in out.iter_mut().enumerate().take(k + 1) {
            *o += s * binomial(k, j) * (-a).powi((k - j) as i32);
        }
    }
    out
}

fn draw_piece(rng: &mut ChaCha8Rng, a: f64, b: f64, range: (f64, f64), max_degree: usize) -> Piece {
    let mid = 0.5 * (range.0 + range.1);
    let w = 0.5 * (range.1 - range.0);
    let degree = rng.random_range(0..=max_degree);
    let mut local = vec![mid + rng.random_range(-0.5..=0.5) * w];
    let raw: Vec<f64> = (0..degree).map(|_| rng.random_range(-1.0..=1.0)).collect();
    let total: f64 = raw.iter().map(|x: &f64| x.abs()).sum();
    let budget = rng.random_range(0.0..=1.0) * 0.5 * w;
    local.extend(raw.iter().map(|x| if total > 0.0 { x / total * budget } else { 0.0 }));
    Piece::polynomial(a, b, to_global(&local, a, b - a))
}

fn draw_spec(rng: &mut ChaCha8Rng, cfg: &DrawConfig, kind: CoefficientKind) -> Result<CoefficientSpec> {
    let range = match kind {
        CoefficientKind::Density => cfg.density,
        CoefficientKind::Damping => cfg.damping,
    };
    let grid = cfg.breakpoint_grid.max(2);
    let k = rng.random_range(0..=cfg.max_breakpoints.min(grid - 1));
    let mut cuts: Vec<usize> = sample(rng, grid - 1, k).into_iter().map(|i| i + 1).collect();
    cuts.sort_unstable();
    let mut edges = vec![0.0];
    edges.extend(cuts.iter().map(|&c| c as f64 / grid as f64));
    edges.push(1.0);
    let pieces = edges.windows(2).map(|e| draw_piece(rng, e[0], e[1], range, cfg.max_degree)).collect();
    CoefficientSpec::new(pieces, kind)
}

/// `(ρ, α)` for `seed`; identical seeds give identical coefficients.
pub fn draw_coefficients(seed: u64, cfg: &DrawConfig) -> Result<(CoefficientSpec, CoefficientSpec)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rho = draw_spec(&mut rng, cfg, CoefficientKind::Density)?;
    let alpha = draw_spec(&mut rng, cfg, CoefficientKind::Damping)?;
    Ok((rho, alpha))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_deterministic_and_in_range() {
        let cfg = DrawConfig::default();
        for seed in 0..40 {
            let (r1, a1) = draw_coefficients(seed, &cfg).unwrap();
            let (r2, a2) = draw_coefficients(seed, &cfg).unwrap();
            assert_eq!(r1, r2);
            assert_eq!(a1, a2);
            for k in 0..=400 {
                let x = k as f64 / 400.0;
                let r = r1.value(x);
                let a = a1.value(x);
                assert!((0.5 - 1e-12..=2.0 + 1e-12).contains(&r), "seed {seed}: rho({x})={r}");
                assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a), "seed {seed}: alpha({x})={a}");
            }
            for p in r1.pieces().iter().chain(a1.pieces()) {
                assert!(p.num.len() <= 4);
                assert!((p.a * 8.0).fract() == 0.0 && (p.b * 8.0).fract() == 0.0);
            }
        }
    }

    #[test]
    fn local_to_global_expansion() {
        let g = to_global(&[1.0, 2.0, -3.0], 0.25, 0.5);
        for x in [0.25, 0.4, 0.75] {
            let t = (x - 0.25) / 0.5;
            let local = 1.0 + 2.0 * t - 3.0 * t * t;
            assert!((crate::coefficients::horner(&g, x) - local).abs() < 1e-13);
        }
    }
}
