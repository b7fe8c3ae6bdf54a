//! Distance statistics between samples and reference laws.

use libm::{erf, erfc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dist;

/// Minimum sample size accepted by [`ks_statistic`].
pub const KS_MIN_SAMPLES: usize = 100;

/// Built-in continuous reference laws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReferenceCdf {
    /// Law of `|N(0, scale²)|`.
    HalfNormal {
        scale: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    Normal {
        mean: f64,
        std: f64,
    },
}

impl ReferenceCdf {
    /// Time-`t` marginal of Brownian motion with volatility `sigma` reflected at 0.
    pub fn reflected_bm(sigma: f64, t: f64) -> Self {
        ReferenceCdf::HalfNormal {
            scale: sigma * t.sqrt(),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            ReferenceCdf::HalfNormal { scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    erf(x / (scale * std::f64::consts::SQRT_2))
                }
            }
            ReferenceCdf::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ReferenceCdf::Normal { mean, std } => 0.5 * erfc(-(x - mean) / (std * std::f64::consts::SQRT_2)),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            ReferenceCdf::HalfNormal { scale } => scale * (2.0 / std::f64::consts::PI).sqrt(),
            ReferenceCdf::Uniform { lo, hi } => 0.5 * (lo + hi),
            ReferenceCdf::Normal { mean, .. } => mean,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ReferenceCdf::HalfNormal { scale } => scale > 0.0 && scale.is_finite(),
            ReferenceCdf::Uniform { lo, hi } => lo < hi && lo.is_finite() && hi.is_finite(),
            ReferenceCdf::Normal { mean, std } => std > 0.0 && std.is_finite() && mean.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("bad reference law {self:?}")))
        }
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("samples contain NaN".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

/// `sup_x |F_M(x) - F(x)|` for the empirical CDF `F_M`, evaluated exactly at
/// the jumps of `F_M`. Ties are handled since only the first and last index of
/// a tied block can attain the supremum.
pub fn ks_statistic(samples: &[f64], cdf: &ReferenceCdf) -> Result<f64> {
    if samples.len() < KS_MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: KS_MIN_SAMPLES,
            got: samples.len(),
        });
    }
    cdf.validate()?;
    let s = sorted(samples)?;
    let m = s.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in s.iter().enumerate() {
        let f = cdf.cdf(x);
        d = d.max((i + 1) as f64 / m - f).max(f - i as f64 / m);
    }
    Ok(d)
}

/// Two-sample Kolmogorov–Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    let (a, b) = (sorted(a)?, sorted(b)?);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Energy distance `2E|X-Y| - E|X-X'| - E|Y-Y'|` between two empirical laws
/// (V-statistic form, so it is zero iff the empirical laws coincide).
pub fn energy_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::TooFewSamples {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    let dim = a[0].len();
    if a.iter().chain(b).any(|x| x.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: a.iter().chain(b).find(|x| x.len() != dim).unwrap().len(),
        });
    }
    let mean_pair = |u: &[Vec<f64>], v: &[Vec<f64>]| {
        let mut s = 0.0;
        for x in u {
            for y in v {
                s += dist(x, y);
            }
        }
        s / (u.len() as f64 * v.len() as f64)
    };
    let e = 2.0 * mean_pair(a, b) - mean_pair(a, a) - mean_pair(b, b);
    Ok(e.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_at_median() {
        let s = vec![0.0; 200];
        let d = ks_statistic(&s, &ReferenceCdf::Normal { mean: 0.0, std: 1.0 }).unwrap();
        assert!((d - 0.5).abs() < 1e-15);
    }

    #[test]
    fn atom_at_zero_against_half_normal() {
        let s = vec![0.0; 100];
        let r = ReferenceCdf::HalfNormal { scale: 1.0 };
        assert_eq!(ks_statistic(&s, &r).unwrap(), 1.0 - r.cdf(0.0));
    }

    #[test]
    fn too_few_samples() {
        assert!(matches!(
            ks_statistic(&[0.5; 99], &ReferenceCdf::Uniform { lo: 0.0, hi: 1.0 }),
            Err(Error::TooFewSamples { needed: 100, got: 99 })
        ));
    }

    #[test]
    fn uniform_grid_is_close() {
        let s: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let d = ks_statistic(&s, &ReferenceCdf::Uniform { lo: 0.0, hi: 1.0 }).unwrap();
        assert!((d - 0.0005).abs() < 1e-12);
    }

    #[test]
    fn cdf_values() {
        let n = ReferenceCdf::Normal { mean: 0.0, std: 1.0 };
        assert!((n.cdf(1.0) - 0.8413447460685429).abs() < 1e-14, "{}", n.cdf(1.0));
        let h = ReferenceCdf::HalfNormal { scale: 1.0 };
        assert!((h.cdf(1.0) - 0.6826894921370859).abs() < 1e-14);
        assert!((h.mean() - 0.7978845608028654).abs() < 1e-15);
    }

    #[test]
    fn two_sample_examples() {
        let a = [1.0, 2.0, 3.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 0.0], &[1.0]).unwrap(), 1.0);
        assert!((ks_two_sample(&[1.0, 2.0], &[2.0, 3.0]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn energy_distance_identity_and_shift() {
        let a: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 0.0]).collect();
        assert_eq!(energy_distance(&a, &a).unwrap(), 0.0);
        let b: Vec<Vec<f64>> = a.iter().map(|x| vec![x[0], 5.0]).collect();
        assert!(energy_distance(&a, &b).unwrap() > 0.0);
        // One point each: 2|x - y|.
        assert_eq!(energy_distance(&[vec![0.0]], &[vec![3.0]]).unwrap(), 6.0);
    }
}
