//! Grid schemes for `X = H + ∫ f(X_-) dZ + K` on a convex domain.

use super::coefficient::Coefficient;
use super::grid::Grid;
use crate::domain::{ConvexDomain, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::path::{Cadlag, StepPath};
use crate::penalty::PenalizedPath;

struct Sampled {
    h: Vec<f64>,
    z: Vec<f64>,
    d: usize,
    m: usize,
}

impl Sampled {
    fn h(&self, k: usize) -> &[f64] {
        &self.h[k * self.d..(k + 1) * self.d]
    }

    fn dz(&self, k: usize, out: &mut [f64]) {
        for i in 0..self.m {
            out[i] = self.z[(k + 1) * self.m + i] - self.z[k * self.m + i];
        }
    }
}

fn check_breakpoints(p: &StepPath, grid: &Grid, what: &str) -> Result<()> {
    let q = grid.horizon();
    if p.horizon() < q {
        return Err(Error::InvalidDriver(format!(
            "{what} ends at {} before the grid horizon {q}",
            p.horizon()
        )));
    }
    if let Some(&t) = p.times().iter().find(|&&t| t <= q && !grid.contains(t)) {
        return Err(Error::InvalidDriver(format!(
            "{what} has a breakpoint at {t} off the grid"
        )));
    }
    Ok(())
}

fn sample_drivers(domain: &ConvexDomain, f: &Coefficient, h: &StepPath, z: &StepPath, grid: &Grid) -> Result<Sampled> {
    let d = domain.dim();
    let (fd, fm) = f.shape();
    if h.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: h.dim(),
        });
    }
    if fd != d {
        return Err(Error::DimensionMismatch { expected: d, got: fd });
    }
    if z.dim() != fm {
        return Err(Error::DimensionMismatch {
            expected: fm,
            got: z.dim(),
        });
    }
    check_breakpoints(h, grid, "H")?;
    check_breakpoints(z, grid, "Z")?;
    let depth = domain.interior_depth(h.value(0));
    if depth < -BOUNDARY_TOL {
        return Err(Error::InitialOutsideDomain { distance: -depth });
    }
    let pts = grid.points();
    let mut hv = Vec::with_capacity(pts.len() * d);
    let mut zv = Vec::with_capacity(pts.len() * fm);
    for &t in pts {
        hv.extend_from_slice(h.value_at(t));
        zv.extend_from_slice(z.value_at(t));
    }
    Ok(Sampled { h: hv, z: zv, d, m: fm })
}

/// Penalized Euler scheme. Between grid points the state relaxes exactly
/// toward the projection; at `t_{k+1}` it takes the update
/// `X_{t_{k+1}} = X_{t_{k+1}-} + ΔH + f(X_{t_{k+1}-}) ΔZ`.
pub fn euler_penalized(
    domain: &ConvexDomain,
    f: &Coefficient,
    h: &StepPath,
    z: &StepPath,
    n: f64,
    grid: &Grid,
) -> Result<PenalizedPath> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("penalty must be positive, got {n}")));
    }
    let s = sample_drivers(domain, f, h, z, grid)?;
    let d = s.d;
    let pts = grid.points();
    let mut path = PenalizedPath::with_capacity(d, n, grid.horizon(), pts.len());
    let mut x = s.h(0).to_vec();
    let mut p = vec![0.0; d];
    let mut pre = vec![0.0; d];
    let mut dz = vec![0.0; s.m];
    domain.project_into(&x, &mut p)?;
    path.push(0.0, &x, &p);
    // The state is assembled as `H + ∫ f dZ + penalty` from running sums.
    let mut integral = vec![0.0; d];
    let mut pen = vec![0.0; d];
    for k in 0..grid.cells() {
        path.segment_value_into(k, pts[k + 1], &mut pre);
        s.dz(k, &mut dz);
        f.apply_acc(&pre, &dz, &mut integral);
        for i in 0..d {
            pen[i] += pre[i] - x[i];
            x[i] = s.h(k + 1)[i] + integral[i] + pen[i];
        }
        domain.project_into(&x, &mut p)?;
        path.push(pts[k + 1], &x, &p);
    }
    Ok(path)
}

/// Projected Euler scheme `X_{k+1} = Π(X_k) + ΔH + f(Π(X_k)) ΔZ`, reported as
/// the step path of post-update (unprojected) values.
pub fn euler_projected(
    domain: &ConvexDomain,
    f: &Coefficient,
    h: &StepPath,
    z: &StepPath,
    grid: &Grid,
) -> Result<StepPath> {
    let s = sample_drivers(domain, f, h, z, grid)?;
    let d = s.d;
    let pts = grid.points();
    let mut values = Vec::with_capacity(pts.len() * d);
    let mut x = s.h(0).to_vec();
    let mut p = vec![0.0; d];
    let mut dz = vec![0.0; s.m];
    values.extend_from_slice(&x);
    for k in 0..grid.cells() {
        domain.project_into(&x, &mut p)?;
        s.dz(k, &mut dz);
        x.copy_from_slice(&p);
        for i in 0..d {
            x[i] += s.h(k + 1)[i] - s.h(k)[i];
        }
        f.apply_acc(&p, &dz, &mut x);
        values.extend_from_slice(&x);
    }
    StepPath::new(d, pts.to_vec(), values, grid.horizon())
}

/// Path of the left-endpoint sums `Σ_{t_{k+1} <= t} g(X_{t_{k+1}-}) ΔZ_{k+1}`
/// at the grid points.
pub fn integral_path<P: Cadlag>(g: &Coefficient, x: &P, z: &StepPath, grid: &Grid) -> Result<StepPath> {
    let (d, m) = g.shape();
    if x.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: x.dim(),
        });
    }
    if z.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: z.dim(),
        });
    }
    let pts = grid.points();
    let mut values = Vec::with_capacity(pts.len() * d);
    let mut acc = vec![0.0; d];
    let mut dz = vec![0.0; m];
    values.extend_from_slice(&acc);
    for w in pts.windows(2) {
        let left = x.left_limit(w[1])?;
        let (z0, z1) = (z.value_at(w[0]), z.value_at(w[1]));
        for i in 0..m {
            dz[i] = z1[i] - z0[i];
        }
        g.apply_acc(&left, &dz, &mut acc);
        values.extend_from_slice(&acc);
    }
    StepPath::new(d, pts.to_vec(), values, grid.horizon())
}

/// Left-endpoint stochastic integral up to the grid point `t`.
pub fn stochastic_integral<P: Cadlag>(g: &Coefficient, x: &P, z: &StepPath, grid: &Grid, t: f64) -> Result<Vec<f64>> {
    if !grid.contains(t) {
        return Err(Error::NotAGridPoint(t));
    }
    let k = grid.points().partition_point(|&s| s < t);
    let cut = Grid::new(grid.points()[..=k.max(1)].to_vec())?;
    let path = integral_path(g, x, z, &cut)?;
    Ok(path.value(k).to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::solve_penalized;
    use crate::skorokhod::solve_skorokhod;

    fn grid() -> Grid {
        Grid::uniform(1.0, 10).unwrap()
    }

    fn step(times: &[f64], vals: &[f64]) -> StepPath {
        StepPath::scalar(times.to_vec(), vals.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn zero_coefficient_reduces_to_deterministic_solvers() {
        let dom = ConvexDomain::half_line();
        let g = grid();
        let h = step(&[0.0, 0.2, 0.5], &[0.0, -1.0, 0.5]);
        let z = StepPath::constant(vec![0.0], 1.0).unwrap();
        let f = Coefficient::zero(1, 1);
        for n in [1.0, 10.0, 1e4] {
            let a = euler_penalized(&dom, &f, &h, &z, n, &g).unwrap();
            let b = solve_penalized(&dom, &h.resample(g.points()).unwrap(), n).unwrap();
            for &t in g.points() {
                assert_eq!(a.eval(t).unwrap(), b.eval(t).unwrap());
            }
        }
        let proj = euler_projected(&dom, &f, &h, &z, &g).unwrap();
        let sk = solve_skorokhod(&dom, &h.resample(g.points()).unwrap()).unwrap();
        for &t in g.points() {
            // Post-update values project to the Skorokhod solution.
            assert_eq!(dom.project_point(proj.value_at(t)).unwrap(), sk.x.value_at(t));
        }
    }

    #[test]
    fn constant_h_with_zero_coefficient_stays_put() {
        let dom = ConvexDomain::half_line();
        let h = StepPath::constant(vec![0.7], 1.0).unwrap();
        let z = step(&[0.0, 0.3], &[0.0, 5.0]);
        let x = euler_penalized(&dom, &Coefficient::zero(1, 1), &h, &z, 100.0, &grid()).unwrap();
        for &t in grid().points() {
            assert_eq!(x.eval(t).unwrap(), vec![0.7]);
        }
    }

    #[test]
    fn rejects_off_grid_breakpoints_and_shapes() {
        let dom = ConvexDomain::half_line();
        let h = step(&[0.0, 0.25], &[1.0, 2.0]);
        let z = StepPath::constant(vec![0.0], 1.0).unwrap();
        let f = Coefficient::scalar(1.0);
        assert!(euler_projected(&dom, &f, &h, &z, &grid()).is_err());
        let z2 = StepPath::constant(vec![0.0, 0.0], 1.0).unwrap();
        let h = StepPath::constant(vec![1.0], 1.0).unwrap();
        assert!(matches!(
            euler_penalized(&dom, &f, &h, &z2, 1.0, &grid()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn integral_examples() {
        let g = grid();
        let ramp = step(g.points(), g.points());
        let x = StepPath::constant(vec![2.0], 1.0).unwrap();
        let id = Coefficient::Identity { dim: 1 };
        assert_eq!(stochastic_integral(&id, &x, &ramp, &g, 0.5).unwrap(), vec![0.5]);
        let lin = Coefficient::Affine {
            matrix: crate::linalg::Matrix::from_rows(&[vec![1.0]]).unwrap(),
            intercept: 0.0,
            slope: 1.0,
        };
        let v = stochastic_integral(&lin, &x, &ramp, &g, 1.0).unwrap();
        assert!((v[0] - 2.0).abs() < 1e-15);
        let zero = Coefficient::zero(1, 1);
        assert_eq!(stochastic_integral(&zero, &x, &ramp, &g, 1.0).unwrap(), vec![0.0]);
        assert!(matches!(
            stochastic_integral(&id, &x, &ramp, &g, 0.55),
            Err(Error::NotAGridPoint(_))
        ));
    }

    #[test]
    fn integral_uses_left_limits() {
        let g = grid();
        // X jumps at 0.5; the increment over (0.4, 0.5] must see the old value.
        let x = step(&[0.0, 0.5], &[1.0, 3.0]);
        let z = step(g.points(), g.points());
        let lin = Coefficient::Affine {
            matrix: crate::linalg::Matrix::from_rows(&[vec![1.0]]).unwrap(),
            intercept: 0.0,
            slope: 1.0,
        };
        let v = stochastic_integral(&lin, &x, &z, &g, 0.6).unwrap();
        assert!((v[0] - (0.5 * 1.0 + 0.1 * 3.0)).abs() < 1e-14);
    }
}
