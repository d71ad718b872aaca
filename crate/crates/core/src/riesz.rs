//! Riesz projections `P = -(2πi)⁻¹ ∮ (A-ζ)⁻¹ dζ` by contour quadrature,
//! multiplicities, eigenvalue clustering and resolution of the identity.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::coefficients::gauss_legendre;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::spectral::{Branch, Spectrum};

/// Stop doubling once successive projections differ by at most this (Frobenius).
pub const QUAD_TOL: f64 = 1e-10;
pub const MAX_DOUBLINGS: usize = 7;
/// Default cluster threshold as a fraction of the asymptotic spacing.
pub const DEFAULT_GAP_FRACTION: f64 = 0.5;
const TRAPEZOID_START: usize = 16;
const GL_ORDER: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Contour {
    Circle { center: C64, radius: f64 },
    /// Axis-aligned rectangle with lower-left `lo` and upper-right `hi`.
    Rect { lo: C64, hi: C64 },
}

impl Contour {
    pub fn center(&self) -> C64 {
        match *self {
            Contour::Circle { center, .. } => center,
            Contour::Rect { lo, hi } => (lo + hi) * 0.5,
        }
    }

    pub fn encloses(&self, z: C64) -> bool {
        match *self {
            Contour::Circle { center, radius } => (z - center).norm() < radius,
            Contour::Rect { lo, hi } => lo.re < z.re && z.re < hi.re && lo.im < z.im && z.im < hi.im,
        }
    }

    /// Distance from `z` to the contour curve.
    pub fn distance_to(&self, z: C64) -> f64 {
        match *self {
            Contour::Circle { center, radius } => ((z - center).norm() - radius).abs(),
            Contour::Rect { lo, hi } => {
                if self.encloses(z) {
                    (z.re - lo.re).min(hi.re - z.re).min(z.im - lo.im).min(hi.im - z.im)
                } else {
                    let dx = (lo.re - z.re).max(0.0).max(z.re - hi.re);
                    let dy = (lo.im - z.im).max(0.0).max(z.im - hi.im);
                    dx.hypot(dy)
                }
            }
        }
    }
}

/// Quadrature nodes `ζ_k` with weights `dζ_k` for the given refinement level.
fn quadrature(contour: &Contour, level: usize) -> Vec<(C64, C64)> {
    match *contour {
        Contour::Circle { center, radius } => {
            let n = TRAPEZOID_START << level;
            (0..n)
                .map(|k| {
                    let e = C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64);
                    (center + radius * e, c(0.0, 1.0) * radius * e * (2.0 * PI / n as f64))
                })
                .collect()
        }
        Contour::Rect { lo, hi } => {
            let (gx, gw) = gauss_legendre(GL_ORDER);
            let corners = [lo, c(hi.re, lo.im), hi, c(lo.re, hi.im), lo];
            let panels = 1usize << level;
            let mut out = Vec::new();
            for s in 0..4 {
                let (a, b) = (corners[s], corners[s + 1]);
                let step = (b - a) / panels as f64;
                for p in 0..panels {
                    let mid = a + step * (p as f64 + 0.5);
                    for (x, w) in gx.iter().zip(&gw) {
                        out.push((mid + step * (0.5 * x), step * (0.5 * w)));
                    }
                }
            }
            out
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct QuadratureInfo {
    pub nodes: usize,
    /// Frobenius norm of the last refinement change.
    pub delta: f64,
}

/// Riesz projection of `op` for `contour`, refined until `‖ΔP‖_F ≤ QUAD_TOL`.
///
/// Errors when any eigenvalue in `spectrum` lies within `gap_min` of the contour.
pub fn riesz_projection(op: &CMat, contour: &Contour, spectrum: &[C64], gap_min: f64) -> Result<(CMat, QuadratureInfo)> {
    for &l in spectrum {
        let d = contour.distance_to(l);
        if d < gap_min {
            return Err(Error::ContourTooClose { dist: d, gap: gap_min });
        }
    }
    let integrate = |level: usize| -> Result<(CMat, usize)> {
        let nodes = quadrature(contour, level);
        let mut acc = linalg::zeros(op.nrows(), op.ncols());
        for (z, dz) in &nodes {
            let r = linalg::inverse(&linalg::shift(op, *z))?;
            acc = &acc + &linalg::scale(&r, *dz);
        }
        // -(2πi)⁻¹ = i/(2π)
        Ok((linalg::scale(&acc, c(0.0, 1.0 / (2.0 * PI))), nodes.len()))
    };
    let (mut p, mut used) = integrate(0)?;
    for level in 1..=MAX_DOUBLINGS {
        let (q, n) = integrate(level)?;
        let delta = linalg::frob(&(&q - &p));
        used += n;
        p = q;
        if delta <= QUAD_TOL {
            return Ok((p, QuadratureInfo { nodes: used, delta }));
        }
    }
    Err(Error::Quadrature(QUAD_TOL))
}

/// Numerical rank of a projection: nearest integer to its trace, checked against singular values.
pub fn projection_rank(p: &CMat) -> Result<(usize, C64)> {
    let tr = linalg::trace(p);
    let s = linalg::singular_values(p)?;
    let by_sv = s.iter().filter(|&&x| x > 0.5).count();
    let rounded = tr.re.round().max(0.0) as usize;
    if rounded != by_sv {
        return Err(Error::Quadrature((tr.re - tr.re.round()).abs()));
    }
    Ok((rounded, tr))
}

#[derive(Clone, Debug, Serialize)]
pub struct Multiplicity {
    pub geometric: usize,
    pub algebraic: usize,
    /// Smallest singular values of `op - λ₀`, ascending.
    pub singular_profile: Vec<f64>,
}

/// Relative singular-value threshold for the geometric multiplicity.
pub const GEOMETRIC_TOL: f64 = 1e-8;

/// `(m_g, m_a)` of the eigenvalue nearest `lambda0`.
pub fn multiplicity(lambda0: C64, op: &CMat, spectrum: &[C64]) -> Result<Multiplicity> {
    let mut d: Vec<f64> = spectrum.iter().map(|l| (l - lambda0).norm()).collect();
    d.sort_by(|a, b| a.total_cmp(b));
    // Members within 1e-6 relative of λ₀ count as the same (possibly split) eigenvalue.
    let near_tol = 1e-6 * lambda0.norm().max(1.0);
    let members = d.iter().take_while(|&&x| x <= near_tol).count().max(1);
    let far = d.get(members).copied().unwrap_or(f64::INFINITY);
    let radius = if far.is_finite() { far / 3.0 } else { 1.0 };
    if !(far > 2.0 * radius) || radius <= near_tol {
        return Err(Error::NotIsolated(far));
    }
    let contour = Contour::Circle { center: lambda0, radius };
    let (p, _) = riesz_projection(op, &contour, spectrum, radius / 2.0)?;
    let (algebraic, _) = projection_rank(&p)?;
    let mut s = linalg::singular_values(&linalg::shift(op, lambda0))?;
    s.reverse();
    let scale = s.last().copied().unwrap_or(1.0).max(1.0);
    let geometric = s.iter().filter(|&&x| x <= GEOMETRIC_TOL * scale).count();
    Ok(Multiplicity { geometric, algebraic, singular_profile: s.into_iter().take(4).collect() })
}

/// Cluster membership with its contour, before projection.
#[derive(Clone, Debug)]
pub struct ClusterPlan {
    pub members: Vec<usize>,
    pub branch: String,
    pub contour: Contour,
    pub gap_min: f64,
}

fn cluster_label(spec: &Spectrum, members: &[usize]) -> String {
    let b = spec.branches[members[0]];
    if members.iter().all(|&k| spec.branches[k] == b) {
        b.label().to_string()
    } else {
        "mixed".to_string()
    }
}

fn plan_contour(spec: &Spectrum, members: &[usize]) -> (Contour, f64) {
    let ev = &spec.eigenvalues;
    let inside = |k: usize| members.contains(&k);
    if members.len() == 1 {
        let z = ev[members[0]];
        let d = (0..ev.len()).filter(|&k| !inside(k)).map(|k| (ev[k] - z).norm()).fold(f64::INFINITY, f64::min);
        let d = if d.is_finite() { d } else { 3.0 };
        // Separation d/3 from the member and 2d/3 from the rest, both above d/4.
        return (Contour::Circle { center: z, radius: d / 3.0 }, d / 4.0);
    }
    let lo = c(
        members.iter().map(|&k| ev[k].re).fold(f64::INFINITY, f64::min),
        members.iter().map(|&k| ev[k].im).fold(f64::INFINITY, f64::min),
    );
    let hi = c(
        members.iter().map(|&k| ev[k].re).fold(f64::NEG_INFINITY, f64::max),
        members.iter().map(|&k| ev[k].im).fold(f64::NEG_INFINITY, f64::max),
    );
    let bbox = Contour::Rect { lo, hi };
    let d = (0..ev.len()).filter(|&k| !inside(k)).map(|k| bbox.distance_to(ev[k])).fold(f64::INFINITY, f64::min);
    let d = if d.is_finite() { d } else { 3.0 };
    let m = d / 2.0;
    (Contour::Rect { lo: lo - c(m, m), hi: hi + c(m, m) }, d / 4.0)
}

/// Single-linkage clusters with threshold `fraction · spacing`; zero modes form their own cluster.
///
/// Clusters whose bounding boxes hold foreign eigenvalues are merged.
pub fn cluster_eigenvalues(spec: &Spectrum, spacing: f64, fraction: f64) -> Result<Vec<ClusterPlan>> {
    let ev = &spec.eigenvalues;
    let n = ev.len();
    if n == 0 {
        return Err(Error::EmptySpectrum);
    }
    let thr = fraction * spacing;
    let mut label: Vec<usize> = (0..n).collect();
    fn find(l: &mut [usize], k: usize) -> usize {
        let mut r = k;
        while l[r] != r {
            r = l[r];
        }
        let mut x = k;
        while l[x] != r {
            let nx = l[x];
            l[x] = r;
            x = nx;
        }
        r
    }
    let zero: Vec<usize> = (0..n).filter(|&k| spec.zero_flags[k]).collect();
    for i in 0..n {
        for j in i + 1..n {
            let zi = spec.zero_flags[i];
            let zj = spec.zero_flags[j];
            if zi != zj {
                continue;
            }
            if zi || (ev[i] - ev[j]).norm() < thr {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a] = b;
            }
        }
    }
    loop {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for k in 0..n {
            let r = find(&mut label, k);
            groups.entry(r).or_default().push(k);
        }
        let mut merged = false;
        for members in groups.values() {
            if members.len() < 2 || members.iter().any(|k| zero.contains(k)) {
                continue;
            }
            let (contour, _) = plan_contour(spec, members);
            if let Some(k) = (0..n).find(|k| !members.contains(k) && contour.encloses(ev[*k])) {
                if spec.zero_flags[k] {
                    return Err(Error::Coverage(k));
                }
                let (a, b) = (find(&mut label, k), find(&mut label, members[0]));
                label[a] = b;
                merged = true;
                break;
            }
        }
        if !merged {
            let mut plans: Vec<ClusterPlan> = groups
                .into_values()
                .map(|members| {
                    let (contour, gap_min) = plan_contour(spec, &members);
                    ClusterPlan { branch: cluster_label(spec, &members), members, contour, gap_min }
                })
                .collect();
            plans.sort_by(|a, b| {
                let (x, y) = (a.contour.center(), b.contour.center());
                x.norm().total_cmp(&y.norm()).then(x.arg().total_cmp(&y.arg()))
            });
            return Ok(plans);
        }
    }
}

#[derive(Clone, Debug)]
pub struct RieszCluster {
    pub members: Vec<usize>,
    pub branch: String,
    pub contour: Contour,
    pub projection: CMat,
    pub rank: usize,
    pub trace: C64,
    pub idempotency_defect: f64,
    pub quadrature: QuadratureInfo,
}

impl RieszCluster {
    /// Distance of `tr P` from the nearest nonnegative integer.
    pub fn trace_integrality(&self) -> f64 {
        (self.trace - c(self.trace.re.round().max(0.0), 0.0)).norm()
    }
}

pub fn project_clusters(op: &CMat, spec: &Spectrum, plans: &[ClusterPlan]) -> Result<Vec<RieszCluster>> {
    plans
        .iter()
        .map(|plan| {
            let (p, quadrature) = riesz_projection(op, &plan.contour, &spec.eigenvalues, plan.gap_min)?;
            let (rank, trace) = projection_rank(&p)?;
            let idempotency_defect = linalg::frob(&(&(&p * &p) - &p));
            Ok(RieszCluster {
                members: plan.members.clone(),
                branch: plan.branch.clone(),
                contour: plan.contour,
                projection: p,
                rank,
                trace,
                idempotency_defect,
                quadrature,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolutionReport {
    /// `‖ΣP - I‖₂` in the frame of `op`.
    pub identity_defect: f64,
    /// `max_{i≠j} ‖P_i P_j‖_F`.
    pub max_cross: f64,
    pub max_idempotency: f64,
    /// Largest singular value discarded when factoring each projection.
    pub truncation: f64,
    pub clusters: usize,
}

/// Completeness and mutual orthogonality of the cluster projections.
pub fn verify_resolution_of_identity(clusters: &[RieszCluster], dim: usize) -> Result<ResolutionReport> {
    let mut seen = vec![false; dim];
    for cl in clusters {
        for &k in &cl.members {
            if k >= dim || seen[k] {
                return Err(Error::Coverage(k));
            }
            seen[k] = true;
        }
    }
    if let Some(k) = seen.iter().position(|s| !s) {
        return Err(Error::Coverage(k));
    }
    let mut sum = linalg::zeros(dim, dim);
    for cl in clusters {
        sum = &sum + &cl.projection;
    }
    let identity_defect = linalg::norm2(&(&sum - &linalg::identity(dim)))?;
    // P_i = U_i Σ_i V_iᴴ, so ‖P_i P_j‖_F = ‖Σ_i (V_iᴴ U_j) Σ_j‖_F.
    let mut us = Vec::new();
    let mut vs = Vec::new();
    let mut ss = Vec::new();
    let mut truncation = 0.0f64;
    for cl in clusters {
        let (u, s, v) = linalg::svd(&cl.projection)?;
        let r = cl.rank;
        truncation = truncation.max(s.get(r).copied().unwrap_or(0.0));
        us.push(linalg::sub_block(&u, 0, dim, 0, r));
        vs.push(linalg::sub_block(&v, 0, dim, 0, r));
        ss.push(s[..r].to_vec());
    }
    let mut max_cross = 0.0f64;
    for i in 0..clusters.len() {
        let vi = linalg::adjoint(&vs[i]);
        for j in 0..clusters.len() {
            if i == j {
                continue;
            }
            let g = &vi * &us[j];
            let g = linalg::scale_cols(&linalg::scale_rows(&ss[i], &g), &ss[j]);
            max_cross = max_cross.max(linalg::frob(&g));
        }
    }
    Ok(ResolutionReport {
        identity_defect,
        max_cross,
        max_idempotency: clusters.iter().map(|c| c.idempotency_defect).fold(0.0, f64::max),
        truncation,
        clusters: clusters.len(),
    })
}

/// `max ‖(I-P)v‖ / ‖v‖` over eigenvectors `v` of enclosed eigenvalues.
pub fn invariant_subspace_defect(cluster: &RieszCluster, vectors: &CMat) -> f64 {
    cluster
        .members
        .iter()
        .map(|&k| {
            let v = linalg::col(vectors, k);
            let pv = linalg::matvec(&cluster.projection, &v);
            let r: Vec<C64> = v.iter().zip(&pv).map(|(a, b)| a - b).collect();
            linalg::vnorm(&r) / linalg::vnorm(&v)
        })
        .fold(0.0, f64::max)
}

/// CSV with columns `cluster_id,branch,member_count,center_re,center_im,rank,idempotency_defect`.
pub fn clusters_csv(clusters: &[RieszCluster]) -> String {
    use crate::report::num;
    let mut s = String::from("cluster_id,branch,member_count,center_re,center_im,rank,idempotency_defect\n");
    for (k, cl) in clusters.iter().enumerate() {
        let z = cl.contour.center();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            k,
            cl.branch,
            cl.members.len(),
            num(z.re),
            num(z.im),
            cl.rank,
            num(cl.idempotency_defect)
        ));
    }
    s
}

/// Whether every eigenvalue of `branch` with `|Re λ| ≤ re_max` sits in a singleton cluster.
pub fn low_modes_are_singletons(spec: &Spectrum, plans: &[ClusterPlan], branch: Branch, re_max: f64) -> bool {
    plans.iter().all(|p| {
        p.members.len() == 1
            || !p.members.iter().any(|&k| spec.branches[k] == branch && spec.eigenvalues[k].re.abs() <= re_max)
    })
}
