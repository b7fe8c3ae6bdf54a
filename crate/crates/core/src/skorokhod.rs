//! The deterministic Skorokhod problem on a convex domain for step drivers.
//!
//! Between breakpoints a step driver is constant, so the reflected path only
//! moves at jumps, where `x_t = Π(x_{t-} + Δy_t)`.

use crate::domain::{ConvexDomain, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{dist, l1, norm};
use crate::path::{Cadlag, StepPath};

/// Reflected path `x = y + k` with regulator `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkorokhodSolution {
    pub x: StepPath,
    pub k: StepPath,
    pub driver: StepPath,
}

impl SkorokhodSolution {
    /// `|k|_q` under the coordinatewise convention.
    pub fn regulator_variation(&self, q: f64) -> f64 {
        self.k.total_variation(q)
    }
}

fn check_initial(domain: &ConvexDomain, y: &StepPath) -> Result<()> {
    if y.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: y.dim(),
        });
    }
    let depth = domain.interior_depth(y.value(0));
    if depth < -BOUNDARY_TOL {
        return Err(Error::InitialOutsideDomain { distance: -depth });
    }
    Ok(())
}

/// Solves the Skorokhod problem for a step driver by projecting at each jump.
pub fn solve_skorokhod(domain: &ConvexDomain, y: &StepPath) -> Result<SkorokhodSolution> {
    check_initial(domain, y)?;
    let d = y.dim();
    let mut xs = Vec::with_capacity(y.len() * d);
    let mut ks = Vec::with_capacity(y.len() * d);
    xs.extend_from_slice(y.value(0));
    ks.extend(std::iter::repeat_n(0.0, d));
    let mut z = vec![0.0; d];
    let mut proj = vec![0.0; d];
    for j in 1..y.len() {
        let prev_x = &xs[(j - 1) * d..j * d];
        for i in 0..d {
            z[i] = prev_x[i] + (y.value(j)[i] - y.value(j - 1)[i]);
        }
        domain.project_into(&z, &mut proj)?;
        for i in 0..d {
            let dk = proj[i] - z[i];
            let prev_k = ks[(j - 1) * d + i];
            ks.push(prev_k + dk);
        }
        xs.extend_from_slice(&proj);
    }
    let times = y.times().to_vec();
    Ok(SkorokhodSolution {
        x: StepPath::new(d, times.clone(), xs, y.horizon())?,
        k: StepPath::new(d, times, ks, y.horizon())?,
        driver: y.clone(),
    })
}

/// Closed-form solution on the half-line `[0, ∞)`:
/// `k_t = max(0, -inf_{s<=t} y_s)`, `x_t = y_t + k_t`.
pub fn oracle_halfline(y: &StepPath) -> Result<SkorokhodSolution> {
    if y.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: y.dim(),
        });
    }
    if y.value(0)[0] < 0.0 {
        return Err(Error::InitialOutsideDomain {
            distance: -y.value(0)[0],
        });
    }
    let mut running_min = f64::INFINITY;
    let mut xs = Vec::with_capacity(y.len());
    let mut ks = Vec::with_capacity(y.len());
    for v in y.values() {
        running_min = running_min.min(v[0]);
        let k = (-running_min).max(0.0);
        ks.push(k);
        xs.push(v[0] + k);
    }
    Ok(SkorokhodSolution {
        x: StepPath::scalar(y.times().to_vec(), xs, y.horizon())?,
        k: StepPath::scalar(y.times().to_vec(), ks, y.horizon())?,
        driver: y.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyCheck {
    pub pass: bool,
    pub worst_residual: f64,
}

impl PropertyCheck {
    fn from_worst(worst: f64, tol: f64) -> Self {
        Self {
            pass: worst <= tol,
            worst_residual: worst,
        }
    }
}

/// Per-property outcome of [`verify_solution`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationReport {
    /// `x = y + k` everywhere and `k_0 = 0`.
    pub decomposition: PropertyCheck,
    /// `x` stays in the closed domain.
    pub membership: PropertyCheck,
    /// `k` only moves while `x` sits on the boundary.
    pub support: PropertyCheck,
    /// Each increment of `k` lies in the inward normal cone at the post-jump point.
    pub normal: PropertyCheck,
}

impl VerificationReport {
    pub fn all_pass(&self) -> bool {
        self.decomposition.pass && self.membership.pass && self.support.pass && self.normal.pass
    }
}

/// Checks the defining properties of a Skorokhod solution on the merged
/// breakpoints of `x`, `k` and the driver.
pub fn verify_solution(domain: &ConvexDomain, sol: &SkorokhodSolution, tol: f64) -> VerificationReport {
    let q = sol.x.horizon().min(sol.k.horizon()).min(sol.driver.horizon());
    let mut grid: Vec<f64> = sol
        .x
        .times()
        .iter()
        .chain(sol.k.times())
        .chain(sol.driver.times())
        .copied()
        .filter(|&t| t <= q)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut dec = norm(sol.k.value(0));
    let mut mem = 0.0f64;
    let mut sup = 0.0f64;
    let mut nrm = 0.0f64;
    for &t in &grid {
        let x = sol.x.value_at(t);
        let y = sol.driver.value_at(t);
        let k = sol.k.value_at(t);
        let yk: Vec<f64> = y.iter().zip(k).map(|(a, b)| a + b).collect();
        dec = dec.max(dist(x, &yk));
        mem = mem.max((-domain.interior_depth(x)).max(0.0));

        let dk: Vec<f64> = k.iter().zip(sol.k.left_value_at(t)).map(|(a, b)| a - b).collect();
        if t > 0.0 && l1(&dk) > tol {
            sup = sup.max(domain.interior_depth(x).abs());
            let r = domain.normal_cone_residual(x, &dk, tol) / norm(&dk).max(1.0);
            nrm = nrm.max(r);
        }
    }
    VerificationReport {
        decomposition: PropertyCheck::from_worst(dec, tol),
        membership: PropertyCheck::from_worst(mem, tol),
        support: PropertyCheck::from_worst(sup, tol),
        normal: PropertyCheck::from_worst(nrm, tol),
    }
}
