//! Empirical tail probabilities of the joint oscillation modulus `ω̄''`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::path::{modulus_bar, StepPath};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationTable {
    pub horizon: f64,
    pub paths: usize,
    /// Sweep order as configured.
    pub deltas: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// `prob[e][j] = P(ω̄''(deltas[j]) > epsilons[e])`
    pub prob: Vec<Vec<f64>>,
}

impl OscillationTable {
    /// `2/√M`
    pub fn noise_band(&self) -> f64 {
        2.0 / (self.paths as f64).sqrt()
    }

    /// Every `ε` row is nonincreasing as `δ` decreases along the sweep, up to
    /// the noise band.
    pub fn monotone(&self) -> bool {
        let band = self.noise_band();
        let mut order: Vec<usize> = (0..self.deltas.len()).collect();
        order.sort_by(|&i, &j| self.deltas[j].total_cmp(&self.deltas[i]));
        self.prob
            .iter()
            .all(|row| order.windows(2).all(|w| row[w[1]] <= row[w[0]] + band))
    }
}

/// Evaluates `ω̄''_{(X, Z)}(δ, q)` for each pair and tabulates the empirical
/// exceedance frequencies.
pub fn oscillation_diagnostic(
    x_paths: &[StepPath],
    z_paths: &[StepPath],
    deltas: &[f64],
    epsilons: &[f64],
    q: f64,
) -> Result<OscillationTable> {
    if x_paths.len() != z_paths.len() {
        return Err(Error::InvalidArgument(format!(
            "{} X paths but {} Z paths",
            x_paths.len(),
            z_paths.len()
        )));
    }
    if x_paths.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::InvalidArgument("deltas must be positive".into()));
    }
    let moduli: Vec<Vec<f64>> = x_paths
        .iter()
        .zip(z_paths)
        .map(|(x, z)| deltas.iter().map(|&d| modulus_bar(x, z, d, q)).collect())
        .collect();
    let m = x_paths.len() as f64;
    let prob = epsilons
        .iter()
        .map(|&e| {
            (0..deltas.len())
                .map(|j| moduli.iter().filter(|w| w[j] > e).count() as f64 / m)
                .collect()
        })
        .collect();
    Ok(OscillationTable {
        horizon: q,
        paths: x_paths.len(),
        deltas: deltas.to_vec(),
        epsilons: epsilons.to_vec(),
        prob,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn continuous_like_second_factor_gives_zero() {
        let x = StepPath::scalar(vec![0.0, 0.5], vec![0.0, 1.0], 1.0).unwrap();
        let z = StepPath::constant(vec![0.0], 1.0).unwrap();
        let t = oscillation_diagnostic(&[x], &[z], &[0.5, 0.1], &[0.0], 1.0).unwrap();
        assert_eq!(t.prob, vec![vec![0.0, 0.0]]);
    }

    #[test]
    fn large_epsilon_gives_zero() {
        let x = StepPath::scalar(vec![0.0, 0.4, 0.5], vec![0.0, 1.0, 0.0], 1.0).unwrap();
        let t = oscillation_diagnostic(&[x.clone()], &[x], &[0.5], &[2.0], 1.0).unwrap();
        assert_eq!(t.prob, vec![vec![0.0]]);
    }

    #[test]
    fn separated_jumps_need_wide_window() {
        // X jumps at 0.25, Z at 0.5: a triple needs t - s > 0.25.
        let x = StepPath::scalar(vec![0.0, 0.25], vec![0.0, 1.0], 1.0).unwrap();
        let z = StepPath::scalar(vec![0.0, 0.5], vec![0.0, 1.0], 1.0).unwrap();
        let t = oscillation_diagnostic(&[x], &[z], &[0.5, 0.26, 0.25, 0.1], &[0.5], 1.0).unwrap();
        assert_eq!(t.prob, vec![vec![1.0, 1.0, 0.0, 0.0]]);
        assert!(t.monotone());
    }
}
