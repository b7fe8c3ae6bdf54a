//! Experiment configuration: defaults, then a TOML file (or a built-in
//! benchmark), then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use rand::Rng;
use rand_distr::StandardNormal;
use refsde_core::path::read_path_csv;
use refsde_core::sde::stream;
use refsde_core::stats::marginal::check_admissible_times;
use refsde_core::stats::ReferenceCdf;
use refsde_core::{Cadlag, Coefficient, ConvexDomain, DriverSpec, Grid, HSpec, Matrix, Shape, StepPath, ZComponent};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Skorokhod,
    Penalize,
    Simulate,
    Converge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    /// Reflected Brownian motion on the half-line.
    ReflectedBm,
    /// Half-line driver `0 → -1 (t=0.5) → 1 (t=0.8)`.
    ThreeJump,
}

/// How `sweep.n` and `sweep.mesh` combine into scheme cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Every `(n, mesh)` combination, `n` outermost.
    Product,
    /// `(n[i], mesh[i])`.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub shape: Shape,
    pub anchor: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_distance: Option<f64>,
}

impl DomainSpec {
    pub fn build(&self) -> refsde_core::Result<ConvexDomain> {
        let d = ConvexDomain::new(self.shape.clone(), self.anchor.clone())?;
        match self.anchor_distance {
            Some(v) => d.with_anchor_distance(v),
            None => Ok(d),
        }
    }
}

/// Random step driver: `jumps` equally spaced Gaussian steps from the anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Generator {
    pub jumps: usize,
    pub scale: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub n: Option<Vec<f64>>,
    pub mesh: Option<Vec<f64>>,
    pub pairing: Option<Pairing>,
    pub times: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub fine_mesh: Option<f64>,
}

/// Contents of a config file. Every field is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub kind: Option<Kind>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub max_failure_rate: Option<f64>,
    pub domain: Option<DomainSpec>,
    pub driver: Option<DriverSpec>,
    pub driver_file: Option<PathBuf>,
    pub generator: Option<Generator>,
    pub coefficient: Option<Coefficient>,
    pub sweep: Option<SweepFile>,
    pub reference: Option<Vec<ReferenceCdf>>,
}

/// Flag values; `None` leaves the lower layers in charge.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub builtin: Option<Builtin>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub out: Option<PathBuf>,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub n: Vec<f64>,
    pub mesh: Vec<f64>,
    pub pairing: Pairing,
    pub times: Vec<f64>,
    pub delta: f64,
    pub fine_mesh: Option<f64>,
}

/// A deterministic step driver, inlined so the config hash covers it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriverTable {
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl DriverTable {
    fn from_path(p: &StepPath) -> Self {
        Self {
            times: p.times().to_vec(),
            values: p.values().map(|v| v.to_vec()).collect(),
        }
    }

    pub fn to_path(&self, horizon: f64) -> refsde_core::Result<StepPath> {
        StepPath::from_points(self.times.clone(), &self.values, horizon)
    }
}

/// Fully resolved and validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub kind: Kind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub builtin: Option<Builtin>,
    pub horizon: f64,
    pub seed: u64,
    pub paths: usize,
    /// Not part of the hash: replaying into another directory must give
    /// identical files.
    #[serde(skip)]
    pub out: PathBuf,
    pub formats: Vec<Format>,
    pub max_failure_rate: f64,
    pub domain: DomainSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub driver: Option<DriverSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_driver: Option<DriverTable>,
    pub coefficient: Option<Coefficient>,
    pub sweep: Sweep,
    pub reference: Option<Vec<ReferenceCdf>>,
}

impl ExperimentConfig {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    pub fn domain(&self) -> ConvexDomain {
        self.domain.build().expect("validated")
    }

    /// Scheme cells in deterministic order.
    pub fn cells(&self) -> Vec<(f64, f64)> {
        match self.sweep.pairing {
            Pairing::Product => self
                .sweep
                .n
                .iter()
                .flat_map(|&n| self.sweep.mesh.iter().map(move |&m| (n, m)))
                .collect(),
            Pairing::Diagonal => self
                .sweep
                .n
                .iter()
                .copied()
                .zip(self.sweep.mesh.iter().copied())
                .collect(),
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

const DEFAULT_OUT: &str = "refsde-out";

fn half_line_spec() -> DomainSpec {
    DomainSpec {
        shape: Shape::HalfSpace {
            normal: vec![1.0],
            offset: 0.0,
        },
        anchor: vec![1.0],
        anchor_distance: None,
    }
}

pub fn builtin(b: Builtin) -> FileConfig {
    match b {
        Builtin::ReflectedBm => FileConfig {
            kind: Some(Kind::Converge),
            horizon: Some(1.0),
            seed: Some(606),
            paths: Some(10_000),
            domain: Some(half_line_spec()),
            driver: Some(DriverSpec::new(
                HSpec::Constant { x0: vec![0.0] },
                vec![ZComponent::Brownian {
                    sigma: Matrix::identity(1),
                }],
            )),
            coefficient: Some(Coefficient::scalar(1.0)),
            sweep: Some(SweepFile {
                n: Some(vec![256.0, 1024.0, 4096.0]),
                mesh: Some(vec![2f64.powi(-6), 2f64.powi(-8), 2f64.powi(-10)]),
                pairing: Some(Pairing::Diagonal),
                times: Some(vec![1.0]),
                ..Default::default()
            }),
            reference: Some(vec![ReferenceCdf::reflected_bm(1.0, 1.0)]),
            ..Default::default()
        },
        Builtin::ThreeJump => FileConfig {
            kind: Some(Kind::Skorokhod),
            horizon: Some(1.0),
            seed: Some(0),
            paths: Some(1),
            domain: Some(half_line_spec()),
            driver: Some(DriverSpec::new(
                HSpec::Table {
                    times: vec![0.0, 0.5, 0.8],
                    values: vec![vec![0.0], vec![-1.0], vec![1.0]],
                },
                vec![],
            )),
            sweep: Some(SweepFile {
                n: Some(vec![1.0, 10.0, 100.0, 1000.0, 10_000.0]),
                delta: Some(0.25),
                ..Default::default()
            }),
            ..Default::default()
        },
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.into(),
        message: message.into(),
    }
}

fn core(field: &str) -> impl Fn(refsde_core::Error) -> CliError + '_ {
    move |e| invalid(field, e.to_string())
}

pub fn load_file(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| invalid("config", format!("{}: {e}", path.display())))?;
    let mut cfg: FileConfig = toml::from_str(&text).map_err(|e| invalid("config", e.to_string()))?;
    if let Some(p) = &cfg.driver_file {
        if p.is_relative() {
            let base = path.parent().unwrap_or(Path::new("."));
            cfg.driver_file = Some(base.join(p));
        }
    }
    Ok(cfg)
}

fn deterministic_driver(
    file: &FileConfig,
    domain: &ConvexDomain,
    horizon: f64,
    seed: u64,
) -> Result<StepPath, CliError> {
    let sources = [
        file.driver_file.is_some(),
        file.generator.is_some(),
        file.driver.is_some(),
    ];
    if sources.iter().filter(|s| **s).count() > 1 {
        return Err(invalid("driver", "give only one of driver, driver_file and generator"));
    }
    if let Some(p) = &file.driver_file {
        let f = fs::File::open(p).map_err(|e| invalid("driver_file", format!("{}: {e}", p.display())))?;
        let y = read_path_csv(f).map_err(core("driver_file"))?;
        if y.horizon() < horizon {
            return Err(invalid(
                "driver_file",
                format!("driver ends at {} before the horizon {horizon}", y.horizon()),
            ));
        }
        return StepPath::new(
            y.dim(),
            y.times().to_vec(),
            y.values().flatten().copied().collect(),
            horizon,
        )
        .map_err(core("driver_file"));
    }
    if let Some(g) = file.generator {
        if g.jumps == 0 || !(g.scale > 0.0) || !g.scale.is_finite() {
            return Err(invalid("generator", "need jumps >= 1 and a finite positive scale"));
        }
        let mut rng = stream(seed, 0, 0, 0);
        let mut times = vec![0.0];
        let mut pts = vec![domain.anchor().to_vec()];
        for k in 1..=g.jumps {
            times.push(horizon * k as f64 / (g.jumps + 1) as f64);
            let next: Vec<f64> = pts[k - 1]
                .iter()
                .map(|v| v + g.scale * rng.sample::<f64, _>(StandardNormal))
                .collect();
            pts.push(next);
        }
        return StepPath::from_points(times, &pts, horizon).map_err(core("generator"));
    }
    match &file.driver {
        Some(DriverSpec {
            h: HSpec::Table { times, values },
            z,
            ..
        }) if z.is_empty() => StepPath::from_points(times.clone(), values, horizon).map_err(core("driver")),
        Some(_) => Err(invalid(
            "driver",
            "this experiment needs a deterministic table driver without noise",
        )),
        None => Err(invalid("driver", "missing: give driver, driver_file or generator")),
    }
}

fn finite_positive(field: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and positive, got {v}")))
    }
}

/// Merges defaults, the file (or built-in) layer and flags, then validates.
pub fn resolve(kind: Kind, flags: &Overrides) -> Result<ExperimentConfig, CliError> {
    let file = match (&flags.config, flags.builtin) {
        (Some(_), Some(_)) => return Err(invalid("config", "--config and --builtin are exclusive")),
        (Some(p), None) => load_file(p)?,
        (None, Some(b)) => {
            let f = builtin(b);
            let allowed = match b {
                Builtin::ReflectedBm => [Kind::Simulate, Kind::Converge],
                Builtin::ThreeJump => [Kind::Skorokhod, Kind::Penalize],
            };
            if !allowed.contains(&kind) {
                return Err(invalid("builtin", format!("{b:?} does not support {kind:?}")));
            }
            f
        }
        (None, None) => FileConfig::default(),
    };
    if let Some(k) = file.kind {
        if k != kind && flags.builtin.is_none() {
            return Err(invalid(
                "kind",
                format!("config is for {k:?} but {kind:?} was requested"),
            ));
        }
    }

    let horizon = file.horizon.unwrap_or(1.0);
    finite_positive("horizon", horizon)?;
    let seed = flags.seed.or(file.seed).unwrap_or(0);
    let paths = flags.paths.or(file.paths).unwrap_or(1000);
    if paths == 0 {
        return Err(invalid("paths", "must be at least 1"));
    }
    let out = flags
        .out
        .clone()
        .or_else(|| file.out.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    let mut formats = if !flags.formats.is_empty() {
        flags.formats.clone()
    } else {
        file.formats.clone().unwrap_or_else(|| vec![Format::Csv, Format::Json])
    };
    formats.sort();
    formats.dedup();
    if formats.is_empty() {
        return Err(invalid("formats", "no output format selected"));
    }
    let max_failure_rate = file.max_failure_rate.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&max_failure_rate) {
        return Err(invalid("max_failure_rate", "must lie in [0, 1]"));
    }

    let domain_spec = file.domain.clone().unwrap_or_else(half_line_spec);
    let domain = domain_spec.build().map_err(core("domain"))?;
    let d = domain.dim();

    let sf = file.sweep.clone().unwrap_or_default();
    let sweep = Sweep {
        n: sf.n.unwrap_or_else(|| vec![100.0]),
        mesh: sf.mesh.unwrap_or_else(|| vec![0.01]),
        pairing: sf.pairing.unwrap_or(Pairing::Product),
        times: sf.times.unwrap_or_else(|| vec![horizon]),
        delta: sf.delta.unwrap_or(horizon / 10.0),
        fine_mesh: sf.fine_mesh,
    };
    if sweep.n.is_empty() {
        return Err(invalid("sweep.n", "empty sweep"));
    }
    for &n in &sweep.n {
        finite_positive("sweep.n", n)?;
    }
    finite_positive("sweep.delta", sweep.delta)?;

    let mut cfg = ExperimentConfig {
        kind,
        builtin: flags.builtin,
        horizon,
        seed,
        paths,
        out,
        formats,
        max_failure_rate,
        domain: domain_spec,
        driver: None,
        path_driver: None,
        coefficient: None,
        sweep,
        reference: None,
    };

    match kind {
        Kind::Skorokhod | Kind::Penalize => {
            let y = deterministic_driver(&file, &domain, horizon, seed)?;
            if y.dim() != d {
                return Err(invalid(
                    "driver",
                    format!("driver has dimension {}, domain {d}", y.dim()),
                ));
            }
            if domain.interior_depth(y.value(0)) < -refsde_core::BOUNDARY_TOL {
                return Err(invalid("driver", "initial value lies outside the closed domain"));
            }
            cfg.path_driver = Some(DriverTable::from_path(&y));
        }
        Kind::Simulate | Kind::Converge => {
            if cfg.sweep.mesh.is_empty() {
                return Err(invalid("sweep.mesh", "empty sweep"));
            }
            for &m in &cfg.sweep.mesh {
                finite_positive("sweep.mesh", m)?;
                Grid::with_mesh(horizon, m).map_err(core("sweep.mesh"))?;
            }
            if cfg.sweep.pairing == Pairing::Diagonal && cfg.sweep.n.len() != cfg.sweep.mesh.len() {
                return Err(invalid("sweep", "diagonal pairing needs as many n values as meshes"));
            }
            if cfg.sweep.times.is_empty() {
                return Err(invalid("sweep.times", "empty sweep"));
            }
            if cfg.sweep.times.iter().any(|t| !(0.0..=horizon).contains(t)) {
                return Err(invalid("sweep.times", format!("times must lie in [0, {horizon}]")));
            }
            let spec = file
                .driver
                .clone()
                .ok_or_else(|| invalid("driver", "missing driver specification"))?;
            spec.validate(&domain).map_err(core("driver"))?;
            check_admissible_times(&cfg.sweep.times, &spec.fixed_jump_times()).map_err(core("sweep.times"))?;
            let m = spec.noise_dim();
            let f = match file.coefficient.clone() {
                Some(f) => f,
                None if d == m => Coefficient::Identity { dim: d },
                None => return Err(invalid("coefficient", "missing and the driver is not square")),
            };
            f.validate().map_err(core("coefficient"))?;
            if f.shape() != (d, m) {
                return Err(invalid(
                    "coefficient",
                    format!("shape {:?} does not match (state, noise) = ({d}, {m})", f.shape()),
                ));
            }
            if !f.growth_constant().is_finite() {
                return Err(invalid("coefficient", "growth constant is not finite"));
            }
            if let Some(r) = &file.reference {
                if r.len() != cfg.sweep.times.len() {
                    return Err(invalid("reference", "need one reference law per marginal time"));
                }
                if d != 1 {
                    return Err(invalid("reference", "reference laws are one-dimensional"));
                }
            }
            if kind == Kind::Converge && cfg.paths < refsde_core::stats::ks::KS_MIN_SAMPLES {
                return Err(invalid(
                    "paths",
                    format!(
                        "converge needs at least {} paths",
                        refsde_core::stats::ks::KS_MIN_SAMPLES
                    ),
                ));
            }
            if let Some(fm) = cfg.sweep.fine_mesh {
                finite_positive("sweep.fine_mesh", fm)?;
            }
            cfg.driver = Some(spec);
            cfg.coefficient = Some(f);
            cfg.reference = file.reference.clone();
        }
    }
    Ok(cfg)
}
