//! Coefficient functions `f: ℝ^d → ℝ^{d×m}` with linear growth.
//!
//! Apart from `Identity`, every kind is a scalar profile times a fixed matrix,
//! `f(x) = φ(x) A`, which keeps evaluation allocation-free.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::rng::stream;
use crate::error::{Error, Result};
use crate::linalg::{dist, norm, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Coefficient {
    Identity {
        dim: usize,
    },
    Constant {
        matrix: Matrix,
    },
    /// `φ(x) = intercept + slope |x|`
    Affine {
        matrix: Matrix,
        intercept: f64,
        slope: f64,
    },
    /// `φ(x) = level + amplitude sin(frequency Σ x_i)`
    Sine {
        matrix: Matrix,
        level: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// `φ(x) = min(|x|, cap)^α`, Hölder of order `α` but not Lipschitz at 0.
    YamadaWatanabe {
        matrix: Matrix,
        alpha: f64,
        cap: f64,
    },
}

/// Outcome of a sampled inequality check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampledCheck {
    pub pass: bool,
    /// Largest observed left/right ratio.
    pub max_ratio: f64,
    pub samples: usize,
}

impl Coefficient {
    pub fn zero(d: usize, m: usize) -> Self {
        Coefficient::Constant {
            matrix: Matrix::zeros(d, m),
        }
    }

    pub fn scalar(c: f64) -> Self {
        Coefficient::Constant {
            matrix: Matrix::from_rows(&[vec![c]]).expect("1x1"),
        }
    }

    fn matrix(&self) -> Option<&Matrix> {
        match self {
            Coefficient::Identity { .. } => None,
            Coefficient::Constant { matrix }
            | Coefficient::Affine { matrix, .. }
            | Coefficient::Sine { matrix, .. }
            | Coefficient::YamadaWatanabe { matrix, .. } => Some(matrix),
        }
    }

    /// `(d, m)`: state and noise dimensions.
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Coefficient::Identity { dim } => (*dim, *dim),
            _ => {
                let a = self.matrix().unwrap();
                (a.rows(), a.cols())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (d, m) = self.shape();
        if d == 0 || m == 0 {
            return Err(Error::InvalidCoefficient("empty coefficient".into()));
        }
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        if let Some(a) = self.matrix() {
            if !finite(&a.to_rows().concat()) {
                return Err(Error::InvalidCoefficient("matrix entries must be finite".into()));
            }
        }
        match *self {
            Coefficient::Affine { intercept, slope, .. } if !finite(&[intercept, slope]) => {
                Err(Error::InvalidCoefficient("affine profile must be finite".into()))
            }
            Coefficient::Sine {
                level,
                amplitude,
                frequency,
                ..
            } if !finite(&[level, amplitude, frequency]) => {
                Err(Error::InvalidCoefficient("sine profile must be finite".into()))
            }
            Coefficient::YamadaWatanabe { alpha, cap, .. }
                if !(0.5..1.0).contains(&alpha) || !(cap > 0.0) || !cap.is_finite() =>
            {
                Err(Error::InvalidCoefficient(format!(
                    "need alpha in [1/2, 1) and a finite positive cap, got alpha={alpha}, cap={cap}"
                )))
            }
            _ => Ok(()),
        }
    }

    fn profile(&self, x: &[f64]) -> f64 {
        match *self {
            Coefficient::Identity { .. } | Coefficient::Constant { .. } => 1.0,
            Coefficient::Affine { intercept, slope, .. } => intercept + slope * norm(x),
            Coefficient::Sine {
                level,
                amplitude,
                frequency,
                ..
            } => level + amplitude * (frequency * x.iter().sum::<f64>()).sin(),
            Coefficient::YamadaWatanabe { alpha, cap, .. } => norm(x).min(cap).powf(alpha),
        }
    }

    /// `out += f(x) dz`
    #[inline]
    pub fn apply_acc(&self, x: &[f64], dz: &[f64], out: &mut [f64]) {
        match self {
            Coefficient::Identity { .. } => {
                for (o, v) in out.iter_mut().zip(dz) {
                    *o += v;
                }
            }
            _ => {
                let phi = self.profile(x);
                if phi != 0.0 {
                    self.matrix().unwrap().mul_vec_acc(phi, dz, out);
                }
            }
        }
    }

    pub fn matrix_at(&self, x: &[f64]) -> Matrix {
        match self {
            Coefficient::Identity { dim } => Matrix::identity(*dim),
            _ => {
                let phi = self.profile(x);
                let rows: Vec<Vec<f64>> = self
                    .matrix()
                    .unwrap()
                    .to_rows()
                    .into_iter()
                    .map(|r| r.into_iter().map(|v| v * phi).collect())
                    .collect();
                Matrix::from_rows(&rows).expect("same shape")
            }
        }
    }

    /// `L` with `‖f(x)‖ <= L (1 + |x|)` in the Frobenius norm.
    pub fn growth_constant(&self) -> f64 {
        match *self {
            Coefficient::Identity { dim } => (dim as f64).sqrt(),
            Coefficient::Constant { ref matrix } => matrix.frobenius(),
            Coefficient::Affine {
                ref matrix,
                intercept,
                slope,
            } => matrix.frobenius() * intercept.abs().max(slope.abs()),
            Coefficient::Sine {
                ref matrix,
                level,
                amplitude,
                ..
            } => matrix.frobenius() * (level.abs() + amplitude.abs()),
            Coefficient::YamadaWatanabe {
                ref matrix, alpha, cap, ..
            } => matrix.frobenius() * cap.powf(alpha),
        }
    }

    /// Lipschitz constant in the Frobenius norm, `None` for the Hölder kind.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match *self {
            Coefficient::Identity { .. } | Coefficient::Constant { .. } => Some(0.0),
            Coefficient::Affine { ref matrix, slope, .. } => Some(matrix.frobenius() * slope.abs()),
            Coefficient::Sine {
                ref matrix,
                amplitude,
                frequency,
                ..
            } => {
                let d = matrix.rows() as f64;
                Some(matrix.frobenius() * (amplitude * frequency).abs() * d.sqrt())
            }
            Coefficient::YamadaWatanabe { .. } => None,
        }
    }

    /// Checks `‖f(x)‖ <= L(1+|x|)` on `samples` random points spread over
    /// several orders of magnitude.
    pub fn check_growth(&self, seed: u64, samples: usize) -> SampledCheck {
        let (d, _) = self.shape();
        let l = self.growth_constant();
        let mut rng = stream(seed, 0, 0, 0);
        let mut worst = 0.0f64;
        for _ in 0..samples {
            let x = random_point(&mut rng, d);
            let lhs = self.matrix_at(&x).frobenius();
            let rhs = l * (1.0 + norm(&x));
            if lhs > 0.0 {
                worst = worst.max(if rhs > 0.0 { lhs / rhs } else { f64::INFINITY });
            }
        }
        SampledCheck {
            pass: worst <= 1.0 + 1e-12,
            max_ratio: worst,
            samples,
        }
    }

    /// Checks `‖f(x) - f(y)‖² <= C |x - y|^{2α}` with `C = ‖A‖²` on random
    /// pairs. Only defined for the Yamada–Watanabe kind.
    pub fn check_holder(&self, seed: u64, samples: usize) -> Option<SampledCheck> {
        let Coefficient::YamadaWatanabe { ref matrix, alpha, .. } = *self else {
            return None;
        };
        let (d, _) = self.shape();
        let c = matrix.frobenius().powi(2);
        let mut rng = stream(seed, 0, 1, 0);
        let mut worst = 0.0f64;
        for k in 0..samples {
            let x = random_point(&mut rng, d);
            let y = if k % 2 == 0 {
                // Close pairs probe the non-Lipschitz regime.
                let h = random_point(&mut rng, d);
                x.iter().zip(&h).map(|(a, b)| a + 1e-3 * b).collect()
            } else {
                random_point(&mut rng, d)
            };
            let fx = self.matrix_at(&x).to_rows().concat();
            let fy = self.matrix_at(&y).to_rows().concat();
            let lhs = dist(&fx, &fy).powi(2);
            let u = dist(&x, &y).powi(2);
            if lhs > 0.0 {
                worst = worst.max(lhs / (c * u.powf(alpha)));
            }
        }
        Some(SampledCheck {
            pass: worst <= 1.0 + 1e-9,
            max_ratio: worst,
            samples,
        })
    }
}

fn random_point<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let scale = 10f64.powf(rng.random_range(-3.0..3.0));
    (0..d).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}
