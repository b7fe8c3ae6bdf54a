use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time partition `0 = t_0 < t_1 < … < t_N = q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid {
    points: Vec<f64>,
    mesh: f64,
}

impl Grid {
    pub fn new(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 || points[0] != 0.0 {
            return Err(Error::InvalidGrid("need at least two points starting at 0".into()));
        }
        if points.iter().any(|t| !t.is_finite()) || points.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidGrid(
                "points must be finite and strictly increasing".into(),
            ));
        }
        let mesh = points.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        Ok(Self { points, mesh })
    }

    /// `cells` equal cells on `[0, q]`. With `q` and `cells` powers of two the
    /// points are exact binary fractions, so uniform grids nest exactly.
    pub fn uniform(q: f64, cells: usize) -> Result<Self> {
        if cells == 0 || !(q > 0.0) {
            return Err(Error::InvalidGrid(format!("bad uniform grid: q={q}, cells={cells}")));
        }
        let mut points: Vec<f64> = (0..=cells).map(|k| q * (k as f64 / cells as f64)).collect();
        points[cells] = q;
        Self::new(points)
    }

    /// Uniform grid with the smallest cell count whose spacing is `<= mesh`.
    pub fn with_mesh(q: f64, mesh: f64) -> Result<Self> {
        if !(mesh > 0.0) {
            return Err(Error::InvalidGrid(format!("mesh must be positive, got {mesh}")));
        }
        let cells = (q / mesh * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        Self::uniform(q, cells)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn horizon(&self) -> f64 {
        *self.points.last().unwrap()
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn cells(&self) -> usize {
        self.points.len() - 1
    }

    pub fn contains(&self, t: f64) -> bool {
        self.points.binary_search_by(|p| p.total_cmp(&t)).is_ok()
    }

    /// Splits every cell into `factor` equal parts.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidGrid("refinement factor must be positive".into()));
        }
        let mut pts = Vec::with_capacity(self.cells() * factor + 1);
        for w in self.points.windows(2) {
            for j in 0..factor {
                pts.push(w[0] + (w[1] - w[0]) * (j as f64 / factor as f64));
            }
        }
        pts.push(self.horizon());
        Self::new(pts)
    }

    /// Every point of `self` is a point of `other`.
    pub fn is_nested_in(&self, other: &Grid) -> bool {
        self.points.iter().all(|&t| other.contains(t))
    }
}

impl TryFrom<Vec<f64>> for Grid {
    type Error = Error;

    fn try_from(points: Vec<f64>) -> Result<Self> {
        Grid::new(points)
    }
}

impl From<Grid> for Vec<f64> {
    fn from(g: Grid) -> Self {
        g.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grids_nest() {
        let coarse = Grid::uniform(1.0, 16).unwrap();
        let fine = Grid::with_mesh(1.0, 2f64.powi(-10)).unwrap();
        assert_eq!(fine.cells(), 1024);
        assert!(coarse.is_nested_in(&fine));
        assert_eq!(coarse.refine(64).unwrap(), fine);
        assert_eq!(coarse.mesh(), 1.0 / 16.0);
    }

    #[test]
    fn with_mesh_rounds_up() {
        assert_eq!(Grid::with_mesh(1.0, 0.01).unwrap().cells(), 100);
        assert_eq!(Grid::with_mesh(1.0, 0.3).unwrap().cells(), 4);
    }

    #[test]
    fn invalid_grids() {
        assert!(Grid::new(vec![0.0]).is_err());
        assert!(Grid::new(vec![0.1, 0.2]).is_err());
        assert!(Grid::new(vec![0.0, 0.2, 0.2]).is_err());
        assert!(Grid::uniform(1.0, 0).is_err());
    }
}
