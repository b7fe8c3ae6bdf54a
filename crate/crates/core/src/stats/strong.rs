//! Pathwise distance between the penalized scheme and a fine projected-Euler
//! reference driven by the same increments.

use serde::{Deserialize, Serialize};

use super::marginal::SchemeCell;
use crate::domain::ConvexDomain;
use crate::error::{Error, Result};
use crate::linalg::dist;
use crate::path::Cadlag;
use crate::sde::{euler_penalized, euler_projected, monte_carlo, Coefficient, DriverSpec, Grid, HSpec, ZComponent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongRow {
    pub n: f64,
    pub mesh: f64,
    pub paths: usize,
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongStudy {
    pub seed: u64,
    pub reference_mesh: f64,
    pub rows: Vec<StrongRow>,
}

impl StrongStudy {
    pub fn strictly_decreasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].median < w[0].median)
    }
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        s[m / 2]
    } else {
        0.5 * (s[m / 2 - 1] + s[m / 2])
    }
}

fn check_continuous(spec: &DriverSpec) -> Result<()> {
    if matches!(spec.h, HSpec::Table { .. }) || spec.z.iter().any(|c| matches!(c, ZComponent::CompoundPoisson { .. })) {
        return Err(Error::InvalidDriver(
            "strong convergence study needs continuous H and Z".into(),
        ));
    }
    Ok(())
}

/// For every cell, `sup_{t ∈ fine grid} |X̄^n_t - Π(X_t)|` with `X` the
/// projected-Euler solution on the fine grid. Coarse drivers are the
/// summation-rule restrictions of the fine ones, so both schemes see the same
/// Brownian increments. The fine mesh must be at most a quarter of every
/// cell mesh and the grids must nest.
#[allow(clippy::too_many_arguments)]
pub fn strong_convergence_study(
    domain: &ConvexDomain,
    f: &Coefficient,
    spec: &DriverSpec,
    q: f64,
    cells: &[SchemeCell],
    fine_mesh: f64,
    paths: usize,
    seed: u64,
) -> Result<StrongStudy> {
    spec.validate(domain)?;
    check_continuous(spec)?;
    let fine = Grid::with_mesh(q, fine_mesh)?;
    let coarse: Vec<Grid> = cells
        .iter()
        .map(|c| Grid::with_mesh(q, c.mesh))
        .collect::<Result<_>>()?;
    for g in &coarse {
        if fine.mesh() > g.mesh() / 4.0 * (1.0 + 1e-12) || !g.is_nested_in(&fine) {
            return Err(Error::InvalidGrid(format!(
                "reference mesh {} must nest in and be 4x finer than {}",
                fine.mesh(),
                g.mesh()
            )));
        }
    }
    let per_path = monte_carlo(paths, |i| -> Result<Vec<f64>> {
        let (h, z) = spec.sample(&fine, seed, i)?;
        let reference = euler_projected(domain, f, &h, &z, &fine)?;
        let projected: Vec<Vec<f64>> = reference
            .values()
            .map(|v| domain.project_point(v))
            .collect::<Result<_>>()?;
        cells
            .iter()
            .zip(&coarse)
            .map(|(cell, g)| {
                let hc = h.resample(g.points())?;
                let zc = z.resample(g.points())?;
                let x = euler_penalized(domain, f, &hc, &zc, cell.n, g)?;
                let mut worst = 0.0f64;
                for (&t, r) in fine.points().iter().zip(&projected) {
                    worst = worst.max(dist(&x.eval(t)?, r));
                }
                Ok(worst)
            })
            .collect()
    });
    let per_path = per_path.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = cells
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let d: Vec<f64> = per_path.iter().map(|v| v[j]).collect();
            StrongRow {
                n: c.n,
                mesh: c.mesh,
                paths,
                median: median(&d),
                mean: d.iter().sum::<f64>() / d.len().max(1) as f64,
            }
        })
        .collect();
    Ok(StrongStudy {
        seed,
        reference_mesh: fine.mesh(),
        rows,
    })
}
