//! Uniform sup-norm and up-crossing bounds over a family of paths, the two
//! quantities characterizing relatively compact sets in the S topology.

use serde::{Deserialize, Serialize};

use crate::path::Cadlag;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelCount {
    pub coord: usize,
    pub a: f64,
    pub b: f64,
    /// Largest up-crossing count over the family.
    pub max_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub paths: usize,
    pub horizon: f64,
    /// `sup_x sup_{t<=q} |x_t|`
    pub sup_norm: f64,
    pub counts: Vec<LevelCount>,
}

impl WitnessReport {
    pub fn max_count(&self) -> usize {
        self.counts.iter().map(|c| c.max_count).max().unwrap_or(0)
    }

    /// Both witnesses are bounded by the given ceilings.
    pub fn within(&self, sup_ceiling: f64, count_ceiling: usize) -> bool {
        self.sup_norm <= sup_ceiling && self.max_count() <= count_ceiling
    }
}

/// Computes the witnesses over `paths` on `[0, q]` for every coordinate and
/// every level pair `a < b`.
pub fn s_tightness_witness<P: Cadlag>(paths: &[P], q: f64, levels: &[(f64, f64)]) -> WitnessReport {
    let dim = paths.first().map_or(0, |p| p.dim());
    let origin = vec![0.0; dim];
    let sup_norm = paths.iter().map(|p| p.sup_deviation(&origin, q)).fold(0.0, f64::max);
    let mut counts = Vec::with_capacity(dim * levels.len());
    for coord in 0..dim {
        for &(a, b) in levels {
            let max_count = paths.iter().map(|p| p.upcrossings(coord, a, b, q)).max().unwrap_or(0);
            counts.push(LevelCount { coord, a, b, max_count });
        }
    }
    WitnessReport {
        paths: paths.len(),
        horizon: q,
        sup_norm,
        counts,
    }
}
