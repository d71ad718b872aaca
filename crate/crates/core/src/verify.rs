//! Check suites behind the CLI commands. Each suite appends records to a
//! report and writes its data files into the output directory.

use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::coefficients::{integrate_any, CoefficientSpec};
use crate::discretization::{kernel_dimensions, BoundaryCondition, DiscreteOperatorSet};
use crate::error::{Error, Result};
use crate::greens::{greens_kernel, t0_analytic};
use crate::linalg::{self, c};
use crate::random::{draw_coefficients, DrawConfig};
use crate::report::{num, CheckRecord, RunConfig, VerificationReport};
use crate::{riesz, spectral, susy, trace};

/// Grid for the dense-inverse resolvent comparisons.
pub const RESOLVENT_GRID: usize = 16;
/// Relative error of the discrete `t₀` that is indistinguishable from rounding.
pub const T0_ROUNDING_FLOOR: f64 = 1e-12;
/// Randomized trace checks run on these families.
pub const RANDOM_BCS: [&str; 4] = ["min", "zero0", "zero1", "omega:0,1"];

struct Ctx<'a> {
    cfg: &'a RunConfig,
    rho: CoefficientSpec,
    alpha: CoefficientSpec,
    out: &'a Path,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig, out: &'a Path) -> Result<Self> {
        let (rho, alpha) = cfg.coefficients()?;
        fs::create_dir_all(out)?;
        Ok(Ctx { cfg, rho, alpha, out })
    }

    fn ops(&self, n: usize, bc: BoundaryCondition) -> Result<DiscreteOperatorSet> {
        DiscreteOperatorSet::build(n, &self.rho, &self.alpha, bc)
    }

    fn write(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.out.join(name), text)?;
        Ok(())
    }
}

fn scatter_csv(spec: &spectral::Spectrum) -> String {
    let mut s = String::from("re,im,branch\n");
    for (l, b) in spec.eigenvalues.iter().zip(&spec.branches) {
        s.push_str(&format!("{},{},{}\n", num(l.re), num(l.im), b.label()));
    }
    s
}

fn spectrum_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let bc = ctx.cfg.bc;
    let ops = ctx.ops(ctx.cfg.n_grid, bc)?;
    let census = kernel_dimensions(&ops)?;
    let (et, ets, ed) = bc.expected_kernels();
    rep.push(CheckRecord::count("kernel.dim_ker_t", "kernel census", census.ker_t, et));
    rep.push(CheckRecord::count("kernel.dim_ker_tstar", "kernel census", census.ker_tstar, ets));
    rep.push(CheckRecord::count("kernel.dim_ker_d", "kernel census", census.ker_d, ed));
    rep.push(CheckRecord::at_most("operators.weighted_adjoint", "discrete adjoint", ops.weighted_selfadjoint_defect(), 1e-12));
    let vectors = ops.dim_dirac() <= 1200;
    let spec = spectral::eigen_dirac_with(&ops, vectors)?;
    if vectors {
        rep.push(CheckRecord::at_most(
            "spectrum.max_residual",
            "backward error",
            spec.max_residual() / spec.op_norm,
            1e-8,
        ));
    }
    rep.push(CheckRecord::count("spectrum.zero_modes", "zero modes", spec.zero_modes, ed));
    let strip = spectral::check_strip(&spec, &ops);
    rep.push(CheckRecord::at_most("spectrum.strip", "spectral strip", strip.max_abs_im - strip.bound, 1e-10));
    if let Some(m) = strip.max_im_dissipative {
        rep.push(CheckRecord::at_most("spectrum.dissipative_half_plane", "spectral strip", m, 1e-10));
    }
    let companion = match bc {
        BoundaryCondition::Quasi(w) if w.im != 0.0 => Some(spectral::eigen_dirac_with(&ctx.ops(ctx.cfg.n_grid, bc.conj())?, false)?),
        _ => None,
    };
    let sym = spectral::check_symmetry(&spec, bc, companion.as_ref())?;
    rep.push(CheckRecord::at_most("spectrum.reflection_symmetry", "reflection symmetry", sym.distance, 1e-8));
    ctx.write("spectrum.csv", &spec.to_csv())?;
    ctx.write("eigen_scatter.csv", &scatter_csv(&spec))
}

fn equivalence_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let ops = ctx.ops(ctx.cfg.n_grid, ctx.cfg.bc)?;
    let sd = spectral::eigen_dirac(&ops)?;
    let sg = spectral::eigen_generator(&ops)?;
    let scale = sd.op_norm.max(1.0);
    rep.push(CheckRecord::at_most(
        "generator.nonzero_spectra_match",
        "generator equivalence",
        spectral::match_nonzero(&sd, &sg) / scale,
        1e-8,
    ));
    let mut worst = 0.0f64;
    for k in 0..sg.len().min(12) {
        let p = sg.pair(k, &ops)?;
        if p.lambda.norm() < sg.tol_zero {
            continue;
        }
        let d = spectral::map_generator_to_dirac(&p, &ops)?;
        worst = worst.max(d.residual / scale);
        if ops.bc.expected_kernels().0 == 0 {
            let back = spectral::map_dirac_to_generator(&d, &ops)?;
            worst = worst.max(back.residual / scale);
        }
    }
    rep.push(CheckRecord::at_most("generator.eigenvector_maps", "eigenvector maps", worst, 1e-7));
    let z = c(0.37, -0.21);
    let f = spectral::verify_factorization_identity(z, &ops)?;
    rep.push(CheckRecord::at_most("generator.factorization", "operator factorization", f.residual, 1e-12));
    Ok(())
}

fn greens_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let bc = ctx.cfg.bc;
    if !bc.has_invertible_laplacian() {
        rep.push(CheckRecord::report("greens.skipped_kernel", "Green's function", 0.0));
        return Ok(());
    }
    let ops = ctx.ops(ctx.cfg.n_grid, bc)?;
    // Nodal values of the discrete inverse reproduce the kernel: the scheme is exact for piecewise-linear solutions.
    let k = linalg::inverse(&ops.tstar_t())?;
    let mut err = 0.0f64;
    let mut size = 0.0f64;
    for (i, &x) in ops.grid.nodes.iter().enumerate() {
        for (j, &xp) in ops.grid.nodes.iter().enumerate() {
            let g = greens_kernel(bc, x, xp)?;
            err = err.max((k[(i, j)] / ops.wu[j] - g).norm());
            size = size.max(g.norm());
        }
    }
    rep.push(CheckRecord::at_most("greens.discrete_inverse_vs_kernel", "Green's function", err / size, 1e-10));
    let t0 = t0_analytic(bc, &ctx.alpha)?;
    let mut rows = String::from("n_grid,err_t0,err_eig1\n");
    let mut errs = Vec::new();
    let mut prev_eig: Option<C64> = None;
    let grids: Vec<usize> = (0..4).map(|k| ctx.cfg.n_grid << k).collect();
    let mut eig_err = Vec::new();
    for &n in &grids {
        let o = ctx.ops(n, bc)?;
        let e = (trace::trace_coefficient(0, &o)? - t0).abs();
        errs.push(e);
        let s = spectral::eigen_dirac_with(&o, false)?;
        let first = s.nonzero().first().copied().unwrap_or(c(0.0, 0.0));
        eig_err.push(prev_eig.map(|p| (p - first).norm()).unwrap_or(f64::NAN));
        prev_eig = Some(first);
    }
    for (k, &n) in grids.iter().enumerate() {
        rows.push_str(&format!("{},{},{}\n", n, num(errs[k]), num(eig_err[k])));
    }
    ctx.write("convergence.csv", &rows)?;
    rep.push(CheckRecord::report("greens.t0_analytic", "continuum trace coefficient", t0));
    // Pairs already at the rounding floor count as converged.
    let floor = T0_ROUNDING_FLOOR * t0.abs();
    let ratio = errs.windows(2).filter(|w| w[0] > floor || w[1] > floor).map(|w| w[0] / w[1]).fold(f64::INFINITY, f64::min);
    rep.push(CheckRecord::at_least("greens.t0_error_ratio", "continuum trace coefficient", ratio, 3.0));
    Ok(())
}

fn trace_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let bc = ctx.cfg.bc;
    if !bc.has_invertible_laplacian() {
        rep.push(CheckRecord::report("trace.skipped_kernel", "trace formulas", 0.0));
        return Ok(());
    }
    let ops = ctx.ops(ctx.cfg.n_grid, bc)?;
    let spec = spectral::eigen_dirac_with(&ops, false)?;
    // Closed forms exist for t₀ and t₂ only.
    for n in 0..=1usize {
        let a = trace::trace_coefficient(n, &ops)?;
        let b = trace::trace_coefficient_closed(n, &ops)?;
        let tol = if n == 0 { 1e-12 } else { 1e-10 };
        rep.push(CheckRecord::at_most(&format!("trace.t{}_paths_agree", 2 * n), "trace coefficients", (a - b).abs() / a.abs().max(1.0), tol));
    }
    let ledger = trace::build_trace_ledger(&ops, &spec, ctx.cfg.n_max, Some(&ctx.alpha))?;
    for (k, d) in ledger.discrepancies.iter().enumerate() {
        let tol = if k == 0 { 1e-8 } else { 1e-6 };
        rep.push(CheckRecord::at_most(&format!("trace.identity_m{}", 2 * k), "trace identity", d.even / d.scale_even, tol));
        let status_tol = if bc.is_real() || k == 0 { tol } else { f64::INFINITY };
        let rec = CheckRecord::at_most(&format!("trace.odd_m{}", 2 * k + 1), "odd trace identity", d.odd / d.scale_odd, status_tol);
        rep.push(if status_tol.is_finite() { rec } else { CheckRecord::report(&rec.name, &rec.anchor, rec.measured) });
    }
    rep.push(CheckRecord::report("trace.zero_modes_excluded", "zero modes", ledger.zero_modes as f64));
    rep.push(CheckRecord::report(
        "trace.t0_discrete_minus_continuum",
        "continuum trace coefficient",
        ledger.t[0] - ledger.continuum.t0_analytic.unwrap_or(f64::NAN),
    ));
    ctx.write("trace_ledger.json", &(ledger.to_json() + "\n"))?;
    let coeffs = trace::series_fit(&spec, 0.05, 8, 41)?;
    let worst = (0..4).map(|m| (coeffs[m] + ledger.lhs[m]).abs()).fold(0.0, f64::max);
    rep.push(CheckRecord::at_most("trace.series_interchange", "resolvent trace series", worst, 1e-6));
    Ok(())
}

fn resolvent_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let bc = ctx.cfg.bc;
    if bc.has_invertible_laplacian() {
        let ops = ctx.ops(32.max(ctx.cfg.n_grid.min(64)), bc)?;
        for z in [ctx.cfg.zeta, -ctx.cfg.zeta] {
            let r = trace::resolvent_trace_expansion(z, &ops)?;
            rep.push(CheckRecord::at_most(&format!("resolvent.trace_reduction(zeta={z})"), "resolvent trace", (r.lhs - r.rhs).abs(), 1e-10));
            rep.push(CheckRecord::at_most(&format!("resolvent.parity(zeta={z})"), "resolvent trace parity", r.parity_defect, 1e-10));
        }
    }
    let ops = ctx.ops(ctx.cfg.n_grid, bc)?;
    let l = trace::livsic_check(0.3, 1.0, &ops)?;
    rep.push(CheckRecord::at_most("resolvent.livsic_equality", "Livsic relation", (l.eigen_side - l.trace_side).abs(), 1e-9));
    rep.push(CheckRecord::at_least("resolvent.livsic_im_nonnegative", "Livsic relation", l.min_im_eigenvalue, -1e-12));
    let small = ctx.ops(RESOLVENT_GRID, bc)?;
    let z = c(0.3, 0.1);
    match susy::resolvent_dirac(z, &small) {
        Ok(r) => rep.push(CheckRecord::at_most("resolvent.free_block_formula", "block resolvent", r.relative_error_vs_direct(&small, false)?, 1e-11)),
        Err(Error::NearSpectrum(d)) => rep.push(CheckRecord::report("resolvent.free_block_formula_skipped", "block resolvent", d)),
        Err(e) => return Err(e),
    }
    match susy::resolvent_perturbed(c(0.2, 0.0), &small) {
        Ok(r) => rep.push(CheckRecord::at_most("resolvent.perturbed_block_formula", "perturbed block resolvent", r.relative_error_vs_direct(&small, true)?, 1e-11)),
        Err(Error::NearSpectrum(d)) | Err(Error::IllConditioned(d)) => {
            rep.push(CheckRecord::report("resolvent.perturbed_block_formula_skipped", "perturbed block resolvent", d))
        }
        Err(e) => return Err(e),
    }
    Ok(())
}

fn susy_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let ops = ctx.ops(RESOLVENT_GRID.max(ctx.cfg.n_grid.min(64)), ctx.cfg.bc)?;
    let polar = susy::polar_decompose(&ops)?;
    rep.push(CheckRecord::at_most("susy.polar_reconstruction", "polar decomposition", polar.reconstruction_defect(&ops), 1e-12));
    rep.push(CheckRecord::at_most("susy.partial_isometry", "polar decomposition", polar.partial_isometry_defect()?, 1e-10));
    rep.push(CheckRecord::at_most(
        "susy.intertwining_exp",
        "intertwining",
        polar.intertwining_defect(&ops, |x| (-0.1 * x).exp())?,
        1e-10,
    ));
    let iso = susy::check_isospectral(&ops)?;
    rep.push(CheckRecord::at_most("susy.isospectral", "isospectrality", iso.distance / iso.scale, 1e-10));
    let (et, ets, _) = ops.bc.expected_kernels();
    rep.push(CheckRecord::count("susy.zero_count_tstar_t", "isospectrality", iso.zeros_h1, et));
    rep.push(CheckRecord::count("susy.zero_count_t_tstar", "isospectrality", iso.zeros_h2, ets));
    let diag = susy::verify_diagonalization(&polar, &ops)?;
    rep.push(CheckRecord::at_most("susy.diagonalization_off_block", "diagonalizing unitary", diag.off_block, 1e-9));
    rep.push(CheckRecord::at_most("susy.unitarity", "diagonalizing unitary", diag.unitarity_defect, 1e-10));
    let ri = susy::verify_resolvent_identities(c(0.7, 0.4), &ops)?;
    rep.push(CheckRecord::at_most("susy.resolvent_identities", "resolvent identities", ri.cells.max(ri.nodes), 1e-10));
    if ops.bc.has_invertible_laplacian() {
        let e = susy::verify_energy_equivalence(&ops)?;
        rep.push(CheckRecord::at_most("susy.energy_space_equivalence", "energy space equivalence", e.distance / e.scale.max(1.0), 1e-8));
    }
    let (vals, u) = linalg::hermitian_eigen(&ops.h1_tilde())?;
    let tol = crate::discretization::tol_zero(&ops)?;
    let mut worst = 0.0f64;
    for (j, &l2) in vals.iter().enumerate().filter(|(_, &v)| v > tol).take(5) {
        let f: Vec<C64> = (0..ops.nodes()).map(|i| u[(i, j)] / ops.wu[i].sqrt()).collect();
        worst = worst.max(susy::susy_partner_eigvec(&f, l2, &ops)?.residual);
        worst = worst.max(susy::dirac_from_h1(&f, l2.sqrt(), &ops)?.residual);
    }
    rep.push(CheckRecord::at_most("susy.partner_residuals", "partner eigenvectors", worst, 1e-8));
    Ok(())
}

fn asymptotics_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let ops = ctx.ops(ctx.cfg.asymptotics_n, ctx.cfg.bc)?;
    let spec = spectral::eigen_dirac_with(&ops, false)?;
    let w = ctx.cfg.fit_window;
    let fit = spectral::fit_asymptotics(&spec, &ctx.rho, (w[0], w[1]))?;
    rep.push(CheckRecord::at_most("asymptotics.slope", "branch asymptotics", fit.relative_deviation, 0.02));
    let wide = spectral::fit_asymptotics(&spec, &ctx.rho, (0.125, 0.25))?;
    rep.push(CheckRecord::report("asymptotics.slope_eighth_to_quarter", "branch asymptotics", wide.relative_deviation));
    let mut s = String::from("j,re_lambda,fit_value\n");
    for (j, re, f) in &fit.table {
        s.push_str(&format!("{},{},{}\n", j, num(*re), num(*f)));
    }
    ctx.write("slope.csv", &s)
}

fn riesz_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let ops = ctx.ops(ctx.cfg.n_grid, ctx.cfg.bc)?;
    let spec = spectral::eigen_dirac(&ops)?;
    let spacing = PI / integrate_any(&ctx.rho, 0.0, 1.0)?;
    let plans = riesz::cluster_eigenvalues(&spec, spacing, ctx.cfg.cluster_fraction)?;
    let clusters = riesz::project_clusters(&ops.dirac_tilde(), &spec, &plans)?;
    let res = riesz::verify_resolution_of_identity(&clusters, spec.len())?;
    rep.push(CheckRecord::at_most("riesz.idempotency", "Riesz projections", res.max_idempotency, 1e-8));
    rep.push(CheckRecord::at_most("riesz.resolution_of_identity", "Riesz basis", res.identity_defect, 1e-6));
    rep.push(CheckRecord::at_most("riesz.cross_products", "Riesz projections", res.max_cross, 1e-7));
    let ranks_ok = clusters.iter().filter(|c| c.rank != c.members.len()).count();
    rep.push(CheckRecord::count("riesz.rank_mismatches", "algebraic multiplicity", ranks_ok, 0));
    let integrality = clusters.iter().map(|c| c.trace_integrality()).fold(0.0, f64::max);
    rep.push(CheckRecord::at_most("riesz.trace_integrality", "algebraic multiplicity", integrality, 1e-6));
    if let Some(v) = spec.vectors.as_ref() {
        let inv = clusters.iter().map(|c| riesz::invariant_subspace_defect(c, v)).fold(0.0, f64::max);
        rep.push(CheckRecord::at_most("riesz.invariant_subspaces", "Riesz projections", inv, 1e-6));
    }
    rep.push(CheckRecord::report("riesz.cluster_count", "Riesz basis", clusters.len() as f64));
    ctx.write("clusters.csv", &riesz::clusters_csv(&clusters))
}

fn random_suite(ctx: &Ctx, rep: &mut VerificationReport) -> Result<()> {
    let draw = DrawConfig::default();
    for &seed in &ctx.cfg.seeds {
        let (rho, alpha) = draw_coefficients(seed, &draw)?;
        let mut worst_even = 0.0f64;
        let mut worst_odd = 0.0f64;
        for bc in RANDOM_BCS {
            let bc: BoundaryCondition = bc.parse()?;
            let ops = DiscreteOperatorSet::build(ctx.cfg.n_grid, &rho, &alpha, bc)?;
            let spec = spectral::eigen_dirac_with(&ops, false)?;
            let d = trace::verify_trace_identity(0, &ops, &spec)?;
            let t0 = trace::trace_coefficient(0, &ops)?;
            worst_even = worst_even.max(d.even / t0.abs().max(f64::MIN_POSITIVE));
            worst_odd = worst_odd.max(d.odd / d.scale_odd);
        }
        rep.push(CheckRecord::at_most(&format!("random.trace_identity(seed={seed})"), "trace identity", worst_even, 1e-8));
        rep.push(CheckRecord::at_most(&format!("random.odd_identity(seed={seed})"), "odd trace identity", worst_odd, 1e-8));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Greens,
    Trace,
    ResolventCheck,
    SusyCheck,
    Asymptotics,
    Riesz,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Greens => "greens",
            Command::Trace => "trace",
            Command::ResolventCheck => "resolvent-check",
            Command::SusyCheck => "susy-check",
            Command::Asymptotics => "asymptotics",
            Command::Riesz => "riesz",
            Command::VerifyAll => "verify-all",
        }
    }
}

/// Runs `cmd`, writes data files and `report.json` under `cfg.out_dir`.
pub fn run_command(cmd: Command, cfg: &RunConfig) -> Result<VerificationReport> {
    cfg.validate()?;
    let ctx = Ctx::new(cfg, &cfg.out_dir)?;
    let mut rep = VerificationReport::new(cmd.name(), cfg)?;
    match cmd {
        Command::Spectrum => spectrum_suite(&ctx, &mut rep)?,
        Command::Greens => greens_suite(&ctx, &mut rep)?,
        Command::Trace => trace_suite(&ctx, &mut rep)?,
        Command::ResolventCheck => resolvent_suite(&ctx, &mut rep)?,
        Command::SusyCheck => susy_suite(&ctx, &mut rep)?,
        Command::Asymptotics => asymptotics_suite(&ctx, &mut rep)?,
        Command::Riesz => riesz_suite(&ctx, &mut rep)?,
        Command::VerifyAll => {
            spectrum_suite(&ctx, &mut rep)?;
            equivalence_suite(&ctx, &mut rep)?;
            greens_suite(&ctx, &mut rep)?;
            trace_suite(&ctx, &mut rep)?;
            resolvent_suite(&ctx, &mut rep)?;
            susy_suite(&ctx, &mut rep)?;
            asymptotics_suite(&ctx, &mut rep)?;
            riesz_suite(&ctx, &mut rep)?;
            random_suite(&ctx, &mut rep)?;
        }
    }
    ctx.write("report.json", &rep.to_json())?;
    Ok(rep)
}
