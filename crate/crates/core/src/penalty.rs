//! Exact solutions of the penalized equation
//! `x_t = y_t - n ∫_0^t (x_s - Π(x_s)) ds` for step drivers.
//!
//! Between jumps the penalty drift is `-n(x - Π(x))`. Projection is constant
//! along the ray from `Π(x)` through `x`, so the solution slides along that
//! ray: `x_t = p + (x_k - p) e^{-n (t - t_k)}` with `p = Π(x_k)`. The
//! representation below stores `(t_k, x_k, p_k)` per segment and evaluates
//! this formula, so there is no time-stepping error anywhere.

use serde::{Deserialize, Serialize};

use crate::domain::{ConvexDomain, BOUNDARY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{dist, norm};
use crate::path::{count_upcrossings, Cadlag, StepPath};

/// Piecewise-exponential path.
#[derive(Debug, Clone, PartialEq)]
pub struct PenalizedPath {
    n: f64,
    dim: usize,
    times: Vec<f64>,
    starts: Vec<f64>,
    targets: Vec<f64>,
    horizon: f64,
}

/// One serialized segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub t: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenalizedPathRecords {
    pub horizon: f64,
    pub segments: Vec<SegmentRecord>,
}

impl PenalizedPath {
    pub(crate) fn with_capacity(dim: usize, n: f64, horizon: f64, cap: usize) -> Self {
        Self {
            n,
            dim,
            times: Vec::with_capacity(cap),
            starts: Vec::with_capacity(cap * dim),
            targets: Vec::with_capacity(cap * dim),
            horizon,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64], p: &[f64]) {
        self.times.push(t);
        self.starts.extend_from_slice(x);
        self.targets.extend_from_slice(p);
    }

    pub fn penalty(&self) -> f64 {
        self.n
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Post-jump value `x_k` at the start of segment `k`.
    pub fn start(&self, k: usize) -> &[f64] {
        &self.starts[k * self.dim..(k + 1) * self.dim]
    }

    /// Projection `p_k = Π(x_k)` the segment relaxes toward.
    pub fn target(&self, k: usize) -> &[f64] {
        &self.targets[k * self.dim..(k + 1) * self.dim]
    }

    fn segment_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Value of segment `k` extended to time `t >= t_k`.
    #[inline]
    pub fn segment_value_into(&self, k: usize, t: f64, out: &mut [f64]) {
        let f = (-self.n * (t - self.times[k])).exp();
        let x = self.start(k);
        let p = self.target(k);
        for i in 0..self.dim {
            out[i] = p[i] + (x[i] - p[i]) * f;
        }
    }

    fn segment_value(&self, k: usize, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.segment_value_into(k, t, &mut out);
        out
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::TimeOutOfRange {
                t,
                horizon: self.horizon,
            });
        }
        Ok(())
    }

    /// End time of segment `k` truncated at `q`.
    fn segment_end(&self, k: usize, q: f64) -> f64 {
        self.times.get(k + 1).copied().unwrap_or(self.horizon).min(q)
    }

    /// `|k^n|_q = n ∫_0^q |x_s - Π(x_s)| ds`, integrated exactly per segment.
    pub fn penalty_variation(&self, q: f64) -> f64 {
        (0..self.len())
            .take_while(|&k| self.times[k] < q)
            .map(|k| {
                let dt = self.segment_end(k, q) - self.times[k];
                dist(self.start(k), self.target(k)) * -(-self.n * dt).exp_m1()
            })
            .sum()
    }

    /// Samples the path at the given times into a step path.
    pub fn to_step_path(&self, times: &[f64]) -> Result<StepPath> {
        let mut values = Vec::with_capacity(times.len() * self.dim);
        for &t in times {
            values.extend(self.eval(t)?);
        }
        StepPath::new(self.dim, times.to_vec(), values, self.horizon)
    }

    /// Post-jump values at the segment starts as a step path.
    pub fn breakpoint_values(&self) -> Result<StepPath> {
        StepPath::new(self.dim, self.times.clone(), self.starts.clone(), self.horizon)
    }

    pub fn to_records(&self) -> PenalizedPathRecords {
        PenalizedPathRecords {
            horizon: self.horizon,
            segments: (0..self.len())
                .map(|k| SegmentRecord {
                    t: self.times[k],
                    x: self.start(k).to_vec(),
                    p: self.target(k).to_vec(),
                    n: self.n,
                })
                .collect(),
        }
    }

    pub fn from_records(rec: &PenalizedPathRecords) -> Result<Self> {
        let first = rec
            .segments
            .first()
            .ok_or_else(|| Error::InvalidPath("no segments".into()))?;
        let dim = first.x.len();
        let n = first.n;
        let mut path = Self::with_capacity(dim, n, rec.horizon, rec.segments.len());
        for s in &rec.segments {
            if s.x.len() != dim || s.p.len() != dim || s.n != n {
                return Err(Error::InvalidPath("inconsistent segment records".into()));
            }
            path.push(s.t, &s.x, &s.p);
        }
        // Reuse the step-path validation of the time axis.
        StepPath::new(dim, path.times.clone(), path.starts.clone(), rec.horizon)?;
        Ok(path)
    }
}

impl Cadlag for PenalizedPath {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn eval(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok(self.segment_value(self.segment_index(t), t))
    }

    fn left_limit(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        let k = self.segment_index(t);
        if k > 0 && self.times[k] == t {
            Ok(self.segment_value(k - 1, t))
        } else {
            Ok(self.segment_value(k, t))
        }
    }

    /// Exact: along a segment the path runs on a straight line, and the
    /// distance to a fixed point is convex there, so the supremum sits at a
    /// segment endpoint.
    fn sup_deviation(&self, a: &[f64], q: f64) -> f64 {
        let mut best = 0.0f64;
        let mut buf = vec![0.0; self.dim];
        for k in (0..self.len()).take_while(|&k| self.times[k] <= q) {
            best = best.max(dist(self.start(k), a));
            self.segment_value_into(k, self.segment_end(k, q), &mut buf);
            best = best.max(dist(&buf, a));
        }
        best
    }

    /// Every coordinate is monotone on a segment, so the attained values are
    /// captured by the start value and the (approached) end value.
    fn upcrossings(&self, coord: usize, a: f64, b: f64, q: f64) -> usize {
        assert!(a < b, "levels must satisfy a < b");
        let mut seq = Vec::with_capacity(2 * self.len());
        let mut buf = vec![0.0; self.dim];
        for k in (0..self.len()).take_while(|&k| self.times[k] <= q) {
            seq.push(self.start(k)[coord]);
            self.segment_value_into(k, self.segment_end(k, q), &mut buf);
            seq.push(buf[coord]);
        }
        count_upcrossings(seq, a, b)
    }
}

/// Solves the penalized equation for a step driver `y` with penalty `n`.
///
/// At a driver jump the state jumps by the same amount; in between it relaxes
/// exponentially toward the projection of the post-jump state.
pub fn solve_penalized(domain: &ConvexDomain, y: &StepPath, n: f64) -> Result<PenalizedPath> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!("penalty must be positive, got {n}")));
    }
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
    let d = y.dim();
    let mut path = PenalizedPath::with_capacity(d, n, y.horizon(), y.len());
    let mut x = y.value(0).to_vec();
    let mut p = vec![0.0; d];
    domain.project_into(&x, &mut p)?;
    path.push(0.0, &x, &p);
    // Accumulated penalty displacement, so that `x = y + pen` is exact
    // wherever the penalty has not acted.
    let mut pen = vec![0.0; d];
    let mut pre = vec![0.0; d];
    for j in 1..y.len() {
        let t = y.time(j);
        path.segment_value_into(j - 1, t, &mut pre);
        for i in 0..d {
            pen[i] += pre[i] - x[i];
            x[i] = y.value(j)[i] + pen[i];
        }
        domain.project_into(&x, &mut p)?;
        path.push(t, &x, &p);
    }
    Ok(path)
}

/// A-priori bounds for penalized solutions driven by `y`, uniform in `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LemmaBounds {
    /// `ω'_y(δ, q) < d_a / 2`
    pub precondition_ok: bool,
    pub modulus: f64,
    /// `r = ⌊q/δ⌋ + 1`
    pub cells: u64,
    /// `2√7 r sup_{t<=q} |y_t - a|`
    pub bound_sup: f64,
    /// `55 r³ d_a^{-1} sup_{t<=q} |y_t - a|²`
    pub bound_var: f64,
}

/// `(2√7 r, 55 r³)` with `r = ⌊q/δ⌋ + 1`.
pub fn lemma_multipliers(q: f64, delta: f64) -> (f64, f64) {
    let r = (q / delta).floor() + 1.0;
    (2.0 * 7f64.sqrt() * r, 55.0 * r.powi(3))
}

/// Evaluates the sup and variation bounds with anchor `a` and `d_a` taken
/// from the domain.
pub fn lemma_bounds(domain: &ConvexDomain, y: &StepPath, q: f64, delta: f64) -> Result<LemmaBounds> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
    }
    if y.dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: domain.dim(),
            got: y.dim(),
        });
    }
    let modulus = y.modulus_prime(delta, q);
    let sup = y.sup_deviation(domain.anchor(), q);
    let (m_sup, m_var) = lemma_multipliers(q, delta);
    Ok(LemmaBounds {
        precondition_ok: modulus < domain.anchor_distance() / 2.0,
        modulus,
        cells: (q / delta).floor() as u64 + 1,
        bound_sup: m_sup * sup,
        bound_var: m_var * sup * sup / domain.anchor_distance(),
    })
}

/// Largest `|x^n_t - x_t|` over the given evaluation times.
pub fn max_error_at<P: Cadlag, Q: Cadlag>(a: &P, b: &Q, times: &[f64]) -> Result<f64> {
    let mut worst = 0.0f64;
    for &t in times {
        worst = worst.max(dist(&a.eval(t)?, &b.eval(t)?));
    }
    Ok(worst)
}

/// Penetration `|x - Π(x)|` at the start of each segment.
pub fn penetrations(path: &PenalizedPath) -> Vec<f64> {
    (0..path.len())
        .map(|k| {
            let d: Vec<f64> = path.start(k).iter().zip(path.target(k)).map(|(a, b)| a - b).collect();
            norm(&d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn halfline_jump() -> StepPath {
        StepPath::scalar(vec![0.0, 0.5], vec![0.0, -1.0], 5.0).unwrap()
    }

    #[test]
    fn relaxation_after_overshoot() {
        let dom = ConvexDomain::half_line();
        for n in [1.0, 10.0, 100.0] {
            let x = solve_penalized(&dom, &halfline_jump(), n).unwrap();
            for t in [0.5, 0.6, 1.0, 3.0] {
                let expect = -(-n * (t - 0.5)).exp();
                assert!((x.eval(t).unwrap()[0] - expect).abs() < 1e-15);
            }
            assert_eq!(x.eval(0.3).unwrap(), vec![0.0]);
        }
    }

    #[test]
    fn interior_driver_reproduced_exactly() {
        let dom = ConvexDomain::ball(vec![0.0, 0.0], 1.0, vec![0.0, 0.0]).unwrap();
        let y = StepPath::from_points(
            vec![0.0, 0.2, 0.7],
            &[vec![0.0, 0.5], vec![0.3, -0.1], vec![-0.9, 0.0]],
            1.0,
        )
        .unwrap();
        let x = solve_penalized(&dom, &y, 50.0).unwrap();
        for t in [0.0, 0.1, 0.2, 0.5, 0.7, 1.0] {
            assert_eq!(x.eval(t).unwrap(), y.eval(t).unwrap());
        }
        assert_eq!(x.penalty_variation(1.0), 0.0);
    }

    #[test]
    fn large_penalty_collapses_onto_projection() {
        let dom = ConvexDomain::half_line();
        let x = solve_penalized(&dom, &halfline_jump(), 1e6).unwrap();
        assert!(x.eval(0.6).unwrap()[0].abs() < 1e-300);
    }

    #[test]
    fn penalty_variation_closed_form() {
        let dom = ConvexDomain::half_line();
        let x = solve_penalized(&dom, &halfline_jump(), 100.0).unwrap();
        let expect = 1.0 - (-450.0f64).exp();
        assert!((x.penalty_variation(5.0) - expect).abs() < 1e-15);
        let partial = x.penalty_variation(0.51);
        assert!((partial - (1.0 - (-1.0f64).exp())).abs() < 1e-12);

        let two = StepPath::scalar(vec![0.0, 1.0, 3.0], vec![0.0, -1.0, -2.0], 5.0).unwrap();
        let x = solve_penalized(&dom, &two, 100.0).unwrap();
        assert!((x.penalty_variation(5.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn jump_time_values() {
        let dom = ConvexDomain::half_line();
        let y = StepPath::scalar(vec![0.0, 0.5, 0.6], vec![0.0, -1.0, 0.0], 1.0).unwrap();
        let x = solve_penalized(&dom, &y, 10.0).unwrap();
        let pre = -(-1.0f64).exp();
        assert!((x.left_limit(0.6).unwrap()[0] - pre).abs() < 1e-15);
        assert!((x.eval(0.6).unwrap()[0] - (pre + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn lemma_constants() {
        let (s, v) = lemma_multipliers(1.0, 0.5);
        assert!((s - 6.0 * 7f64.sqrt()).abs() < 1e-12);
        assert!((s - 15.874507866387544).abs() < 1e-12);
        assert_eq!(v, 55.0 * 27.0);
    }

    #[test]
    fn lemma_bounds_trivial_and_gated() {
        let dom = ConvexDomain::half_line();
        let a = StepPath::constant(vec![1.0], 1.0).unwrap();
        let b = lemma_bounds(&dom, &a, 1.0, 0.5).unwrap();
        assert!(b.precondition_ok);
        assert_eq!((b.bound_sup, b.bound_var), (0.0, 0.0));

        let wild = StepPath::scalar(vec![0.0, 0.1], vec![1.0, 0.2], 1.0).unwrap();
        let b = lemma_bounds(&dom, &wild, 1.0, 0.5).unwrap();
        assert!(!b.precondition_ok);
        assert_eq!(b.cells, 3);
    }

    #[test]
    fn records_round_trip() {
        let dom = ConvexDomain::half_line();
        let x = solve_penalized(&dom, &halfline_jump(), 7.0).unwrap();
        let json = serde_json::to_string(&x.to_records()).unwrap();
        let back: PenalizedPathRecords = serde_json::from_str(&json).unwrap();
        assert_eq!(PenalizedPath::from_records(&back).unwrap(), x);
    }

    #[test]
    fn sup_and_upcrossings_see_relaxation() {
        let dom = ConvexDomain::half_line();
        let x = solve_penalized(&dom, &halfline_jump(), 100.0).unwrap();
        assert_eq!(x.sup_deviation(&[0.0], 5.0), 1.0);
        // dips to -1 then climbs back toward 0: crosses (-0.5, -0.2) once
        assert_eq!(x.upcrossings(0, -0.5, -0.2, 5.0), 1);
        assert_eq!(x.upcrossings(0, -0.5, 0.0, 5.0), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let dom = ConvexDomain::half_line();
        assert!(solve_penalized(&dom, &halfline_jump(), 0.0).is_err());
        let bad = StepPath::constant(vec![-1.0], 1.0).unwrap();
        assert!(matches!(
            solve_penalized(&dom, &bad, 1.0),
            Err(Error::InitialOutsideDomain { .. })
        ));
    }
}
