//! Run configuration, verification records and deterministic output formatting.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coefficients::{parse_coefficient_spec, reduce_variable_speed, CoefficientKind, CoefficientSpec};
use crate::discretization::BoundaryCondition;
use crate::error::{Error, Result};
use crate::spectral::DEFAULT_WINDOW;

/// 17 significant digits, round-trip exact.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// FNV-1a, stable across platforms and toolchains.
pub fn stable_hash(text: &str) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

fn default_n_grid() -> usize {
    64
}
fn default_bc() -> BoundaryCondition {
    BoundaryCondition::Min
}
fn default_rho() -> String {
    "const 1".into()
}
fn default_alpha() -> String {
    "const 1".into()
}
fn default_zeta() -> f64 {
    0.1
}
fn default_n_max() -> usize {
    1
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3, 4, 5]
}
fn default_fit_window() -> [f64; 2] {
    [DEFAULT_WINDOW.0, DEFAULT_WINDOW.1]
}
fn default_asymptotics_n() -> usize {
    512
}
fn default_cluster_fraction() -> f64 {
    crate::riesz::DEFAULT_GAP_FRACTION
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// JSON configuration; every key is optional.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    #[serde(default = "default_bc")]
    pub bc: BoundaryCondition,
    #[serde(default = "default_rho")]
    pub rho: String,
    #[serde(default = "default_alpha")]
    pub alpha: String,
    /// Wave speed `c`; when present the variable-speed equation is reduced first.
    #[serde(default)]
    pub speed: Option<String>,
    #[serde(default = "default_zeta")]
    pub zeta: f64,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Fit window as fractions of the branch size.
    #[serde(default = "default_fit_window")]
    pub fit_window: [f64; 2],
    /// Grid for the asymptotic slope fit.
    #[serde(default = "default_asymptotics_n")]
    pub asymptotics_n: usize,
    #[serde(default = "default_cluster_fraction")]
    pub cluster_fraction: f64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Smallest grid accepted by spectrum-producing commands.
pub const MIN_SPECTRUM_GRID: usize = 8;

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            msg: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::Config { path: path.into(), msg });
        if self.n_grid < MIN_SPECTRUM_GRID {
            return bad("n_grid", format!("must be at least {MIN_SPECTRUM_GRID}, got {}", self.n_grid));
        }
        if self.asymptotics_n < MIN_SPECTRUM_GRID {
            return bad("asymptotics_n", format!("must be at least {MIN_SPECTRUM_GRID}"));
        }
        let [a, b] = self.fit_window;
        if !(0.0 < a && a < b && b <= 1.0) {
            return bad("fit_window", format!("need 0 < lo < hi <= 1, got [{a}, {b}]"));
        }
        if !(self.zeta.is_finite()) {
            return bad("zeta", "must be finite".into());
        }
        if !(self.cluster_fraction > 0.0) {
            return bad("cluster_fraction", "must be positive".into());
        }
        self.coefficients().map(|_| ())
    }

    /// `(ρ, α)` after the optional variable-speed reduction.
    pub fn coefficients(&self) -> Result<(CoefficientSpec, CoefficientSpec)> {
        let field = |path: &str, text: &str, kind| {
            parse_coefficient_spec(text, kind).map_err(|e| Error::Config { path: path.into(), msg: e.to_string() })
        };
        let rho = field("rho", &self.rho, CoefficientKind::Density)?;
        let alpha = field("alpha", &self.alpha, CoefficientKind::Damping)?;
        match &self.speed {
            None => Ok((rho, alpha)),
            Some(c) => {
                let c = field("speed", c, CoefficientKind::Density)?;
                reduce_variable_speed(&rho, &alpha, &c)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    ReportOnly,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::ReportOnly => "report-only",
        }
    }
}

/// One verification outcome. `anchor` names the mathematical property checked.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub status: Status,
    pub measured: f64,
    pub tolerance: f64,
}

impl CheckRecord {
    /// Passes when `measured ≤ tolerance`.
    pub fn at_most(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        let status = if measured <= tolerance { Status::Pass } else { Status::Fail };
        CheckRecord { name: name.into(), anchor: anchor.into(), status, measured, tolerance }
    }

    /// Passes when `measured ≥ tolerance`.
    pub fn at_least(name: &str, anchor: &str, measured: f64, tolerance: f64) -> Self {
        let status = if measured >= tolerance { Status::Pass } else { Status::Fail };
        CheckRecord { name: name.into(), anchor: anchor.into(), status, measured, tolerance }
    }

    /// Passes when two counts agree; `measured` is the absolute difference.
    pub fn count(name: &str, anchor: &str, found: usize, expected: usize) -> Self {
        Self::at_most(name, anchor, (found as f64 - expected as f64).abs(), 0.0)
    }

    pub fn report(name: &str, anchor: &str, measured: f64) -> Self {
        CheckRecord { name: name.into(), anchor: anchor.into(), status: Status::ReportOnly, measured, tolerance: f64::NAN }
    }

    pub fn line(&self) -> String {
        format!("{:<12} {:<44} measured={} tolerance={}", self.status.label(), self.name, num(self.measured), num(self.tolerance))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Environment {
    pub n_grid: usize,
    pub bc: BoundaryCondition,
    pub rho_hash: String,
    pub alpha_hash: String,
    pub seeds: Vec<u64>,
    pub version: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerificationReport {
    pub command: String,
    pub environment: Environment,
    pub records: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn new(command: &str, cfg: &RunConfig) -> Result<Self> {
        let (rho, alpha) = cfg.coefficients()?;
        Ok(VerificationReport {
            command: command.into(),
            environment: Environment {
                n_grid: cfg.n_grid,
                bc: cfg.bc,
                rho_hash: stable_hash(&rho.to_string()),
                alpha_hash: stable_hash(&alpha.to_string()),
                seeds: cfg.seeds.clone(),
                version: env!("CARGO_PKG_VERSION").into(),
            },
            records: Vec::new(),
        })
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }

    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.status == Status::Fail).count()
    }

    /// JSON with non-finite numbers written as strings.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report is serializable");
        if let Some(recs) = v.get_mut("records").and_then(|r| r.as_array_mut()) {
            for (rec, src) in recs.iter_mut().zip(&self.records) {
                for (key, x) in [("measured", src.measured), ("tolerance", src.tolerance)] {
                    if !x.is_finite() {
                        rec[key] = serde_json::Value::String(num(x));
                    }
                }
            }
        }
        serde_json::to_string_pretty(&v).expect("report is serializable") + "\n"
    }
}
