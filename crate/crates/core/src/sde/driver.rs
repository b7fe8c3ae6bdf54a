//! Stochastic models of the driver pair `(H, Z)` and their discretization on
//! a grid by the summation rule, `Hρ_t = H_{t_k}` on `[t_k, t_{k+1})`.

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use super::grid::Grid;
use super::rng::stream;
use crate::domain::{ConvexDomain, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::path::StepPath;

/// Model of the adapted part `H`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HSpec {
    Constant {
        x0: Vec<f64>,
    },
    /// Deterministic step function given by its breakpoints.
    Table {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
    /// `x0 + drift t + σ W_t`
    BrownianDrift {
        x0: Vec<f64>,
        drift: Vec<f64>,
        sigma: Matrix,
    },
}

impl HSpec {
    pub fn dim(&self) -> usize {
        match self {
            HSpec::Constant { x0 } | HSpec::BrownianDrift { x0, .. } => x0.len(),
            HSpec::Table { values, .. } => values.first().map_or(0, |v| v.len()),
        }
    }

    pub fn initial(&self) -> &[f64] {
        match self {
            HSpec::Constant { x0 } | HSpec::BrownianDrift { x0, .. } => x0,
            HSpec::Table { values, .. } => values.first().map_or(&[], |v| v.as_slice()),
        }
    }

    fn table_path(&self, horizon: f64) -> Result<Option<StepPath>> {
        match self {
            HSpec::Table { times, values } => {
                let h = horizon.max(times.last().copied().unwrap_or(0.0));
                Ok(Some(StepPath::from_points(times.clone(), values, h)?))
            }
            _ => Ok(None),
        }
    }
}

/// Law of compound-Poisson jump sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum JumpLaw {
    /// Independent normal coordinates.
    Normal { mean: Vec<f64>, std: Vec<f64> },
    /// Independent uniform coordinates on `[lo, hi]`.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
    /// Every jump has the same size.
    Point { size: Vec<f64> },
}

impl JumpLaw {
    fn dim(&self) -> usize {
        match self {
            JumpLaw::Normal { mean, .. } => mean.len(),
            JumpLaw::Uniform { lo, .. } => lo.len(),
            JumpLaw::Point { size } => size.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidDriver(m.into()));
        match self {
            JumpLaw::Normal { mean, std } => {
                if mean.len() != std.len() {
                    return bad("normal jump law: mean and std lengths differ");
                }
                if std.iter().any(|s| !(*s >= 0.0) || !s.is_finite()) || mean.iter().any(|m| !m.is_finite()) {
                    return bad("normal jump law: std must be finite and >= 0");
                }
            }
            JumpLaw::Uniform { lo, hi } => {
                if lo.len() != hi.len()
                    || lo
                        .iter()
                        .zip(hi)
                        .any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite())
                {
                    return bad("uniform jump law needs finite lo <= hi");
                }
            }
            JumpLaw::Point { size } => {
                if size.iter().any(|s| !s.is_finite()) {
                    return bad("point jump size must be finite");
                }
            }
        }
        Ok(())
    }

    fn is_centered(&self) -> bool {
        match self {
            JumpLaw::Normal { mean, .. } => mean.iter().all(|m| *m == 0.0),
            JumpLaw::Uniform { lo, hi } => lo.iter().zip(hi).all(|(l, h)| l + h == 0.0),
            JumpLaw::Point { size } => size.iter().all(|s| *s == 0.0),
        }
    }

    fn sample_into<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match self {
            JumpLaw::Normal { mean, std } => {
                for i in 0..out.len() {
                    let z: f64 = rng.sample(StandardNormal);
                    out[i] += mean[i] + std[i] * z;
                }
            }
            JumpLaw::Uniform { lo, hi } => {
                for i in 0..out.len() {
                    let u: f64 = rng.random();
                    out[i] += lo[i] + (hi[i] - lo[i]) * u;
                }
            }
            JumpLaw::Point { size } => {
                for (o, s) in out.iter_mut().zip(size) {
                    *o += s;
                }
            }
        }
    }
}

/// One additive component of the semimartingale `Z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ZComponent {
    /// `σ W`, increments `N(0, σσᵀ Δt)`.
    Brownian { sigma: Matrix },
    /// Jumps at rate `intensity` per unit time.
    CompoundPoisson { intensity: f64, jumps: JumpLaw },
    /// `rate · t`
    Drift { rate: Vec<f64> },
}

impl ZComponent {
    fn dim(&self) -> usize {
        match self {
            ZComponent::Brownian { sigma } => sigma.rows(),
            ZComponent::CompoundPoisson { jumps, .. } => jumps.dim(),
            ZComponent::Drift { rate } => rate.len(),
        }
    }

    fn is_martingale(&self) -> bool {
        match self {
            ZComponent::Brownian { .. } => true,
            ZComponent::CompoundPoisson { intensity, jumps } => *intensity == 0.0 || jumps.is_centered(),
            ZComponent::Drift { rate } => rate.iter().all(|r| *r == 0.0),
        }
    }
}

/// Stochastic model of the driver pair `(H, Z)` with `Z_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriverSpec {
    pub h: HSpec,
    #[serde(default)]
    pub z: Vec<ZComponent>,
    /// Dimension of `Z` when it has no components.
    #[serde(default)]
    pub noise_dim: Option<usize>,
}

impl DriverSpec {
    pub fn new(h: HSpec, z: Vec<ZComponent>) -> Self {
        Self { h, z, noise_dim: None }
    }

    pub fn state_dim(&self) -> usize {
        self.h.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.z.first().map(|c| c.dim()).or(self.noise_dim).unwrap_or(1)
    }

    /// Whether `Z` is a martingale (no drift, centered jumps).
    pub fn is_martingale(&self) -> bool {
        self.z.iter().all(|c| c.is_martingale())
    }

    /// Validates parameters and `H_0 ∈ D̄`.
    pub fn validate(&self, domain: &ConvexDomain) -> Result<()> {
        let d = self.state_dim();
        if d != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: d,
            });
        }
        match &self.h {
            HSpec::Constant { x0 } => check_finite(x0)?,
            HSpec::Table { times, values } => {
                if times.len() != values.len() {
                    return Err(Error::InvalidDriver("table times and values lengths differ".into()));
                }
                for v in values {
                    check_finite(v)?;
                }
                StepPath::from_points(times.clone(), values, times.last().copied().unwrap_or(0.0))?;
            }
            HSpec::BrownianDrift { x0, drift, sigma } => {
                check_finite(x0)?;
                check_finite(drift)?;
                if drift.len() != d || sigma.rows() != d {
                    return Err(Error::InvalidDriver(
                        "H drift/sigma must match the state dimension".into(),
                    ));
                }
            }
        }
        let depth = domain.interior_depth(self.h.initial());
        if depth < -BOUNDARY_TOL {
            return Err(Error::InitialOutsideDomain { distance: -depth });
        }
        let m = self.noise_dim();
        for c in &self.z {
            if c.dim() != m {
                return Err(Error::InvalidDriver(format!(
                    "Z components disagree on dimension: {} vs {m}",
                    c.dim()
                )));
            }
            match c {
                ZComponent::Brownian { .. } => {}
                ZComponent::CompoundPoisson { intensity, jumps } => {
                    if !(*intensity >= 0.0) || !intensity.is_finite() {
                        return Err(Error::InvalidDriver(format!("intensity must be >= 0, got {intensity}")));
                    }
                    jumps.validate()?;
                }
                ZComponent::Drift { rate } => check_finite(rate)?,
            }
        }
        Ok(())
    }

    /// Breakpoints of a deterministic `H` carrying a nonzero jump. Every other
    /// time is almost surely a continuity point of the built-in models.
    pub fn fixed_jump_times(&self) -> Vec<f64> {
        match &self.h {
            HSpec::Table { times, values } => (1..times.len())
                .filter(|&k| values[k] != values[k - 1])
                .map(|k| times[k])
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Samples `(Hρ, Zρ)` on `grid` for path `path_index`.
    ///
    /// Stream components: 0 for the Brownian part of `H`, `1 + c` for the
    /// `c`-th component of `Z`. Compound-Poisson jumps are aggregated at the
    /// right endpoint of the cell they fall in.
    pub fn sample(&self, grid: &Grid, seed: u64, path_index: u64) -> Result<(StepPath, StepPath)> {
        let pts = grid.points();
        let d = self.state_dim();
        let m = self.noise_dim();
        let q = grid.horizon();

        let h = match &self.h {
            HSpec::Constant { x0 } => StepPath::constant(x0.clone(), q)?,
            HSpec::Table { .. } => {
                let table = self.h.table_path(q)?.expect("table");
                let mut values = Vec::with_capacity(pts.len() * d);
                for &t in pts {
                    values.extend_from_slice(table.value_at(t));
                }
                StepPath::new(d, pts.to_vec(), values, q)?
            }
            HSpec::BrownianDrift { x0, drift, sigma } => {
                let mut values = Vec::with_capacity(pts.len() * d);
                values.extend_from_slice(x0);
                let mut cur = x0.clone();
                let mut w = vec![0.0; sigma.cols()];
                for (cell, win) in pts.windows(2).enumerate() {
                    let dt = win[1] - win[0];
                    let mut rng = stream(seed, path_index, 0, cell as u64);
                    for wi in w.iter_mut() {
                        let z: f64 = rng.sample(StandardNormal);
                        *wi = z * dt.sqrt();
                    }
                    for (c, b) in cur.iter_mut().zip(drift) {
                        *c += b * dt;
                    }
                    sigma.mul_vec_acc(1.0, &w, &mut cur);
                    values.extend_from_slice(&cur);
                }
                StepPath::new(d, pts.to_vec(), values, q)?
            }
        };

        let mut values = vec![0.0; pts.len() * m];
        let mut inc = vec![0.0; m];
        for (cell, win) in pts.windows(2).enumerate() {
            let dt = win[1] - win[0];
            inc.iter_mut().for_each(|v| *v = 0.0);
            for (ci, comp) in self.z.iter().enumerate() {
                let mut rng = stream(seed, path_index, 1 + ci as u64, cell as u64);
                match comp {
                    ZComponent::Brownian { sigma } => {
                        let w: Vec<f64> = (0..sigma.cols())
                            .map(|_| rng.sample::<f64, _>(StandardNormal) * dt.sqrt())
                            .collect();
                        sigma.mul_vec_acc(1.0, &w, &mut inc);
                    }
                    ZComponent::CompoundPoisson { intensity, jumps } => {
                        let mean = intensity * dt;
                        if mean > 0.0 {
                            let count = Poisson::new(mean)
                                .map_err(|e| Error::InvalidDriver(e.to_string()))?
                                .sample(&mut rng) as u64;
                            for _ in 0..count {
                                jumps.sample_into(&mut rng, &mut inc);
                            }
                        }
                    }
                    ZComponent::Drift { rate } => {
                        for (v, r) in inc.iter_mut().zip(rate) {
                            *v += r * dt;
                        }
                    }
                }
            }
            for i in 0..m {
                values[(cell + 1) * m + i] = values[cell * m + i] + inc[i];
            }
        }
        let z = StepPath::new(m, pts.to_vec(), values, q)?;
        Ok((h, z))
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidDriver("parameters must be finite".into()));
    }
    Ok(())
}
