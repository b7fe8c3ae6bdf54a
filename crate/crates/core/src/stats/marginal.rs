//! Fixed-time marginals of the penalized scheme across an `(n, mesh)` sweep.

use serde::{Deserialize, Serialize};

use super::ks::{energy_distance, ks_statistic, ks_two_sample, ReferenceCdf};
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::path::Cadlag;
use crate::sde::{euler_penalized, monte_carlo, Coefficient, DriverSpec, Grid};

/// One `(n, mesh)` cell of a scheme sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeCell {
    pub n: f64,
    pub mesh: f64,
}

/// What the marginals are compared against.
#[derive(Debug, Clone, PartialEq)]
pub enum MarginalReference {
    /// Known law of a scalar marginal, same for every time.
    Cdf(ReferenceCdf),
    /// Reference samples per time in `t_list` order.
    Samples(Vec<Vec<Vec<f64>>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub n: f64,
    pub mesh: f64,
    pub t: f64,
    pub paths: usize,
    /// `"ks"` or `"energy"`
    pub statistic: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTable {
    pub seed: u64,
    pub rows: Vec<MarginalRow>,
    /// Per time: the statistic is nonincreasing along the sweep within `2/√M`.
    pub trend: Vec<(f64, bool)>,
}

/// Rejects times at fixed discontinuities of deterministic drivers.
pub fn check_admissible_times(t_list: &[f64], fixed_jumps: &[f64]) -> Result<()> {
    for &t in t_list {
        if fixed_jumps.iter().any(|&s| (s - t).abs() <= 1e-12 * s.abs().max(1.0)) {
            return Err(Error::FixedDiscontinuity(t));
        }
    }
    Ok(())
}

/// Values `X̄^n_t` for `t` in `t_list`, indexed `[t][path]`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_marginals(
    domain: &ConvexDomain,
    f: &Coefficient,
    spec: &DriverSpec,
    cell: SchemeCell,
    q: f64,
    t_list: &[f64],
    paths: usize,
    seed: u64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    spec.validate(domain)?;
    let grid = Grid::with_mesh(q, cell.mesh)?;
    let per_path = monte_carlo(paths, |i| -> Result<Vec<Vec<f64>>> {
        let (h, z) = spec.sample(&grid, seed, i)?;
        let x = euler_penalized(domain, f, &h, &z, cell.n, &grid)?;
        t_list.iter().map(|&t| x.eval(t)).collect()
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((0..t_list.len())
        .map(|j| per_path.iter().map(|v| v[j].clone()).collect())
        .collect())
}

fn distance(samples: &[Vec<f64>], reference: &MarginalReference, j: usize) -> Result<(&'static str, f64)> {
    let dim = samples.first().map_or(1, |v| v.len());
    match reference {
        MarginalReference::Cdf(cdf) => {
            if dim != 1 {
                return Err(Error::InvalidArgument("a CDF reference needs scalar marginals".into()));
            }
            let s: Vec<f64> = samples.iter().map(|v| v[0]).collect();
            Ok(("ks", ks_statistic(&s, cdf)?))
        }
        MarginalReference::Samples(per_t) => {
            let r = per_t
                .get(j)
                .ok_or_else(|| Error::InvalidArgument("reference samples missing a time".into()))?;
            if dim == 1 {
                let a: Vec<f64> = samples.iter().map(|v| v[0]).collect();
                let b: Vec<f64> = r.iter().map(|v| v[0]).collect();
                Ok(("ks", ks_two_sample(&a, &b)?))
            } else {
                Ok(("energy", energy_distance(samples, r)?))
            }
        }
    }
}

/// Compares scheme marginals at each `t` against `reference` for every cell.
#[allow(clippy::too_many_arguments)]
pub fn marginal_convergence(
    domain: &ConvexDomain,
    f: &Coefficient,
    spec: &DriverSpec,
    cells: &[SchemeCell],
    q: f64,
    t_list: &[f64],
    paths: usize,
    seed: u64,
    reference: &MarginalReference,
) -> Result<MarginalTable> {
    check_admissible_times(t_list, &spec.fixed_jump_times())?;
    if cells.is_empty() || t_list.is_empty() {
        return Err(Error::InvalidArgument("empty sweep".into()));
    }
    let mut rows = Vec::with_capacity(cells.len() * t_list.len());
    for &cell in cells {
        let marg = simulate_marginals(domain, f, spec, cell, q, t_list, paths, seed)?;
        for (j, &t) in t_list.iter().enumerate() {
            let (statistic, value) = distance(&marg[j], reference, j)?;
            rows.push(MarginalRow {
                n: cell.n,
                mesh: cell.mesh,
                t,
                paths,
                statistic: statistic.into(),
                value,
            });
        }
    }
    let band = 2.0 / (paths as f64).sqrt();
    let trend = t_list
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let vals: Vec<f64> = rows.iter().skip(j).step_by(t_list.len()).map(|r| r.value).collect();
            (t, vals.windows(2).all(|w| w[1] <= w[0] + band))
        })
        .collect();
    Ok(MarginalTable { seed, rows, trend })
}
