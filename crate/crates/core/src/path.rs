//! Càdlàg piecewise-constant paths and the path functionals used to measure
//! regularity: the moduli `ω'`, `ω''`, `ω̄''`, up-crossing counts and total
//! variation.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::linalg::{dist, l1};

/// Common read access to càdlàg paths, exact or piecewise-exponential.
pub trait Cadlag {
    fn dim(&self) -> usize;
    fn horizon(&self) -> f64;
    fn eval(&self, t: f64) -> Result<Vec<f64>>;
    /// `x_{t-}`, with the convention `x_{0-} = x_0`.
    fn left_limit(&self, t: f64) -> Result<Vec<f64>>;

    fn jump(&self, t: f64) -> Result<Vec<f64>> {
        let v = self.eval(t)?;
        let l = self.left_limit(t)?;
        Ok(v.iter().zip(&l).map(|(a, b)| a - b).collect())
    }

    /// `sup_{t <= q} |x_t - a|`
    fn sup_deviation(&self, a: &[f64], q: f64) -> f64;

    /// Up-crossings of coordinate `coord` from below `a` to above `b` on `[0, q]`.
    fn upcrossings(&self, coord: usize, a: f64, b: f64, q: f64) -> usize;

    fn upcrossings_all(&self, a: f64, b: f64, q: f64) -> Vec<usize> {
        (0..self.dim()).map(|c| self.upcrossings(c, a, b, q)).collect()
    }
}

/// Counts completed up-crossings of an ordered sequence of attained values:
/// a visit strictly below `a` followed later by a visit strictly above `b`.
pub fn count_upcrossings(values: impl IntoIterator<Item = f64>, a: f64, b: f64) -> usize {
    let mut below = false;
    let mut count = 0;
    for v in values {
        if !below {
            if v < a {
                below = true;
            }
        } else if v > b {
            count += 1;
            below = false;
        }
    }
    count
}

/// Right-continuous step path: `x_t = values[k]` on `[times[k], times[k+1])`.
///
/// Values are stored flat, `dim` coordinates per breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct StepPath {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    horizon: f64,
}

impl StepPath {
    pub fn new(dim: usize, times: Vec<f64>, values: Vec<f64>, horizon: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidPath("dimension must be positive".into()));
        }
        if times.is_empty() || times[0] != 0.0 {
            return Err(Error::InvalidPath("times must start at 0".into()));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidPath("times must be strictly increasing".into()));
        }
        if !horizon.is_finite() || *times.last().unwrap() > horizon {
            return Err(Error::InvalidPath(format!(
                "last breakpoint {} exceeds horizon {horizon}",
                times.last().unwrap()
            )));
        }
        if values.len() != times.len() * dim {
            return Err(Error::InvalidPath(format!(
                "expected {} values, got {}",
                times.len() * dim,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidPath("values must be finite".into()));
        }
        Ok(Self {
            dim,
            times,
            values,
            horizon,
        })
    }

    pub fn from_points(times: Vec<f64>, points: &[Vec<f64>], horizon: f64) -> Result<Self> {
        let dim = points.first().map_or(0, |p| p.len());
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidPath("points have differing dimensions".into()));
        }
        Self::new(dim, times, points.iter().flatten().copied().collect(), horizon)
    }

    /// One-dimensional path from scalar values.
    pub fn scalar(times: Vec<f64>, values: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::new(1, times, values, horizon)
    }

    pub fn constant(x: Vec<f64>, horizon: f64) -> Result<Self> {
        Self::new(x.len(), vec![0.0], x, horizon)
    }

    /// Number of breakpoints.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn values(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim)
    }

    /// Index of the segment containing `t` (last breakpoint `<= t`).
    pub fn segment_index(&self, t: f64) -> usize {
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
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

    pub fn value_at(&self, t: f64) -> &[f64] {
        self.value(self.segment_index(t))
    }

    /// Value just before `t` without range checks.
    pub fn left_value_at(&self, t: f64) -> &[f64] {
        let k = self.segment_index(t);
        if k > 0 && self.times[k] == t {
            self.value(k - 1)
        } else {
            self.value(k)
        }
    }

    /// `Σ_i |x^i|_q`: coordinatewise total variation of the jumps up to `q`.
    pub fn total_variation(&self, q: f64) -> f64 {
        (1..self.len())
            .take_while(|&k| self.times[k] <= q)
            .map(|k| {
                self.value(k)
                    .iter()
                    .zip(self.value(k - 1))
                    .map(|(a, b)| (a - b).abs())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Total variation accumulated on `(s, t]`.
    pub fn total_variation_between(&self, s: f64, t: f64) -> f64 {
        (1..self.len())
            .filter(|&k| self.times[k] > s && self.times[k] <= t)
            .map(|k| {
                let d: Vec<f64> = self
                    .value(k)
                    .iter()
                    .zip(self.value(k - 1))
                    .map(|(a, b)| a - b)
                    .collect();
                l1(&d)
            })
            .sum()
    }

    /// Summation-rule resampling: the value on `[g_k, g_{k+1})` is `x_{g_k}`.
    pub fn resample(&self, grid: &[f64]) -> Result<StepPath> {
        let mut values = Vec::with_capacity(grid.len() * self.dim);
        for &g in grid {
            self.check_time(g)?;
            values.extend_from_slice(self.value_at(g));
        }
        StepPath::new(self.dim, grid.to_vec(), values, self.horizon)
    }

    /// Drops breakpoints that carry no jump.
    pub fn compress(&self) -> StepPath {
        let mut times = vec![self.times[0]];
        let mut values = self.value(0).to_vec();
        for k in 1..self.len() {
            let last = &values[values.len() - self.dim..];
            if last != self.value(k) {
                times.push(self.times[k]);
                values.extend_from_slice(self.value(k));
            }
        }
        StepPath {
            dim: self.dim,
            times,
            values,
            horizon: self.horizon,
        }
    }

    /// Applies `f` to every value.
    pub fn map_values(&self, mut f: impl FnMut(&[f64]) -> Result<Vec<f64>>) -> Result<StepPath> {
        let mut values = Vec::with_capacity(self.values.len());
        let mut dim = None;
        for v in self.values() {
            let w = f(v)?;
            if *dim.get_or_insert(w.len()) != w.len() {
                return Err(Error::InvalidPath("map changed dimension".into()));
            }
            values.extend(w);
        }
        StepPath::new(dim.unwrap_or(self.dim), self.times.clone(), values, self.horizon)
    }

    /// Oscillation `sup_{s,t ∈ [0, q]} |x_s - x_t|` over the closed interval.
    pub fn oscillation(&self, q: f64) -> f64 {
        let m = self.times.partition_point(|&s| s <= q);
        let mut best = 0.0f64;
        for i in 0..m {
            for j in i + 1..m {
                best = best.max(dist(self.value(i), self.value(j)));
            }
        }
        best
    }

    /// `ω'_x(δ, q)`: the infimum over partitions `0 = t_0 < … < t_r = q` with
    /// `t_i - t_{i-1} >= δ` for `i < r` of the largest oscillation over the
    /// half-open cells `[t_{i-1}, t_i)`.
    ///
    /// For a step path the cell oscillation only depends on which segments a
    /// cell meets, so the optimum is one of the pairwise value distances. We
    /// binary-search that finite set with an exact feasibility test.
    pub fn modulus_prime(&self, delta: f64, q: f64) -> f64 {
        assert!(delta > 0.0, "delta must be positive");
        let m = self.times.partition_point(|&s| s < q);
        if m <= 1 {
            return 0.0;
        }
        let mut cands = vec![0.0];
        for i in 0..m {
            for j in i + 1..m {
                cands.push(dist(self.value(i), self.value(j)));
            }
        }
        cands.sort_by(f64::total_cmp);
        cands.dedup();
        // The largest candidate is always feasible: a single cell needs no spacing.
        let (mut lo, mut hi) = (0, cands.len() - 1);
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.prime_feasible(m, delta, cands[mid]) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        cands[lo]
    }

    /// Is there an admissible partition whose cells all have oscillation `<= theta`?
    ///
    /// Only the earliest reachable cell start within each segment matters: a
    /// start inside segment `s` sees values `s..=reach[s]`, and the earliest
    /// one opens the widest window `[start + δ, τ_{reach+1}]` for the next cut.
    fn prime_feasible(&self, m: usize, delta: f64, theta: f64) -> bool {
        let mut reach = vec![0usize; m];
        let mut l = 0usize;
        for s in 0..m {
            l = l.max(s);
            while l + 1 < m && (s..=l).all(|i| dist(self.value(i), self.value(l + 1)) <= theta) {
                l += 1;
            }
            reach[s] = l;
        }
        let times = &self.times[..m];
        let mut earliest = vec![f64::INFINITY; m];
        earliest[0] = 0.0;
        for s in 0..m {
            let e = earliest[s];
            if !e.is_finite() {
                continue;
            }
            if reach[s] == m - 1 {
                return true;
            }
            let lo = e + delta;
            let hi = times[reach[s] + 1];
            if lo > hi {
                continue;
            }
            let first = times.partition_point(|&t| t <= lo).saturating_sub(1).max(s + 1);
            for j in first..=reach[s] + 1 {
                earliest[j] = earliest[j].min(lo.max(times[j]));
            }
        }
        false
    }

    /// `ω''_x(δ, q)`
    pub fn modulus_second(&self, delta: f64, q: f64) -> f64 {
        modulus_bar(self, self, delta, q)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        write_path_csv(self, w, &[])
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        read_path_csv(r)
    }
}

impl Cadlag for StepPath {
    fn dim(&self) -> usize {
        self.dim
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn eval(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok(self.value_at(t).to_vec())
    }

    fn left_limit(&self, t: f64) -> Result<Vec<f64>> {
        self.check_time(t)?;
        Ok(self.left_value_at(t).to_vec())
    }

    fn sup_deviation(&self, a: &[f64], q: f64) -> f64 {
        (0..self.len())
            .take_while(|&k| self.times[k] <= q)
            .map(|k| dist(self.value(k), a))
            .fold(0.0, f64::max)
    }

    fn upcrossings(&self, coord: usize, a: f64, b: f64, q: f64) -> usize {
        assert!(a < b, "levels must satisfy a < b");
        count_upcrossings(
            (0..self.len())
                .take_while(|&k| self.times[k] <= q)
                .map(|k| self.value(k)[coord]),
            a,
            b,
        )
    }
}

/// `ω̄''_{(x,y)}(δ, q) = sup{min(|x_u - x_s|, |y_t - y_u|) : s < u < t <= q, t - s < δ}`.
///
/// Exact for step paths: on the merged breakpoint grid, segments `i < j < k`
/// host an admissible triple iff `τ_k - τ_{i+1} < δ`.
pub fn modulus_bar(x: &StepPath, y: &StepPath, delta: f64, q: f64) -> f64 {
    assert!(delta > 0.0, "delta must be positive");
    let mut grid: Vec<f64> = x.times.iter().chain(&y.times).copied().filter(|&t| t <= q).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let xs: Vec<&[f64]> = grid.iter().map(|&t| x.value_at(t)).collect();
    let ys: Vec<&[f64]> = grid.iter().map(|&t| y.value_at(t)).collect();
    let m = grid.len();
    let mut best = 0.0f64;
    for i in 0..m.saturating_sub(2) {
        let limit = grid[i + 1] + delta;
        let kmax = grid.partition_point(|&t| t < limit) - 1;
        for j in i + 1..kmax {
            let left = dist(xs[j], xs[i]);
            if left <= best {
                continue;
            }
            for k in j + 1..=kmax {
                best = best.max(left.min(dist(ys[k], ys[j])));
                if best >= left {
                    break;
                }
            }
        }
    }
    best
}

fn fmt_f64(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}

/// Writes `# key=value` comment lines, `# horizon=q`, then a `t,x_1..x_d` table.
pub fn write_path_csv<W: Write>(path: &StepPath, mut w: W, meta: &[(&str, String)]) -> Result<()> {
    let io = |e: std::io::Error| Error::Csv(e.to_string());
    for (k, v) in meta {
        writeln!(w, "# {k}={v}").map_err(io)?;
    }
    writeln!(w, "# horizon={}", fmt_f64(path.horizon)).map_err(io)?;
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim).map(|i| format!("x_{i}")));
    wr.write_record(&header).map_err(|e| Error::Csv(e.to_string()))?;
    for k in 0..path.len() {
        let mut rec = vec![fmt_f64(path.times[k])];
        rec.extend(path.value(k).iter().map(|v| fmt_f64(*v)));
        wr.write_record(&rec).map_err(|e| Error::Csv(e.to_string()))?;
    }
    wr.flush().map_err(io)?;
    Ok(())
}

pub fn read_path_csv<R: Read>(mut r: R) -> Result<StepPath> {
    let mut text = String::new();
    r.read_to_string(&mut text).map_err(|e| Error::Csv(e.to_string()))?;
    let mut horizon = None;
    let mut body = String::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix('#') {
            if let Some(h) = c.trim().strip_prefix("horizon=") {
                horizon = Some(
                    h.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Csv(format!("bad horizon: {e}")))?,
                );
            }
        } else {
            body.push_str(line);
            body.push('\n');
        }
    }
    let mut rd = csv::Reader::from_reader(body.as_bytes());
    let dim = rd
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .len()
        .checked_sub(1)
        .filter(|d| *d > 0)
        .ok_or_else(|| Error::Csv("need columns t, x_1..x_d".into()))?;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
        let mut it = rec.iter().map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::Csv(format!("bad number {f:?}: {e}")))
        });
        times.push(it.next().ok_or_else(|| Error::Csv("empty row".into()))??);
        for v in it {
            values.push(v?);
        }
    }
    let horizon = match horizon {
        Some(h) => h,
        None => *times.last().ok_or_else(|| Error::Csv("no rows".into()))?,
    };
    StepPath::new(dim, times, values, horizon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(times: &[f64], vals: &[f64], q: f64) -> StepPath {
        StepPath::scalar(times.to_vec(), vals.to_vec(), q).unwrap()
    }

    #[test]
    fn eval_left_limit_jump() {
        let x = p(&[0.0, 1.0], &[1.0, 3.0], 2.0);
        assert_eq!(x.eval(1.0).unwrap(), vec![3.0]);
        assert_eq!(x.left_limit(1.0).unwrap(), vec![1.0]);
        assert_eq!(x.jump(1.0).unwrap(), vec![2.0]);
        assert_eq!(x.jump(0.5).unwrap(), vec![0.0]);
        assert_eq!(x.jump(0.0).unwrap(), vec![0.0]);
        assert!(x.eval(2.5).is_err());
        assert!(x.eval(-0.1).is_err());
    }

    #[test]
    fn construction_validates() {
        assert!(StepPath::scalar(vec![0.1], vec![1.0], 1.0).is_err());
        assert!(StepPath::scalar(vec![0.0, 0.5, 0.5], vec![1.0; 3], 1.0).is_err());
        assert!(StepPath::scalar(vec![0.0, 2.0], vec![1.0; 2], 1.0).is_err());
        assert!(StepPath::new(2, vec![0.0], vec![1.0], 1.0).is_err());
    }

    #[test]
    fn modulus_prime_examples() {
        assert_eq!(p(&[0.0, 1.0], &[0.0, 2.0], 2.0).modulus_prime(0.5, 2.0), 0.0);
        let two = p(&[0.0, 0.3, 0.4], &[0.0, 1.0, 2.0], 1.0);
        assert!(two.modulus_prime(0.5, 1.0) >= 1.0);
        assert_eq!(p(&[0.0], &[4.0], 1.0).modulus_prime(0.1, 1.0), 0.0);
    }

    #[test]
    fn modulus_prime_ignores_value_at_horizon() {
        let x = p(&[0.0, 1.0], &[0.0, 5.0], 1.0);
        assert_eq!(x.modulus_prime(0.3, 1.0), 0.0);
    }

    #[test]
    fn modulus_prime_last_cell_may_be_short() {
        // A jump near q is separated by a short final cell.
        let x = p(&[0.0, 0.95], &[0.0, 1.0], 1.0);
        assert_eq!(x.modulus_prime(0.5, 1.0), 0.0);
        // A jump before δ cannot be cut off: the first cell must be long.
        let y = p(&[0.0, 0.2], &[0.0, 1.0], 1.0);
        assert_eq!(y.modulus_prime(0.5, 1.0), 1.0);
    }

    #[test]
    fn modulus_second_examples() {
        let x = p(&[0.0, 0.4, 0.45], &[0.0, 1.0, 2.0], 1.0);
        assert_eq!(x.modulus_second(0.1, 1.0), 1.0);
        assert_eq!(p(&[0.0, 0.4], &[0.0, 1.0], 1.0).modulus_second(0.5, 1.0), 0.0);
        let c = p(&[0.0], &[1.0], 1.0);
        assert_eq!(modulus_bar(&x, &c, 0.5, 1.0), 0.0);
    }

    #[test]
    fn upcrossing_examples() {
        let saw = p(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.0, 1.0], 4.0);
        assert_eq!(saw.upcrossings(0, 0.25, 0.75, 4.0), 2);
        let mono = p(&[0.0, 1.0, 2.0], &[0.0, 0.5, 1.0], 4.0);
        assert_eq!(mono.upcrossings(0, 0.25, 0.75, 4.0), 1);
        let inside = p(&[0.0, 1.0], &[0.3, 0.7], 4.0);
        assert_eq!(inside.upcrossings(0, 0.25, 0.75, 4.0), 0);
    }

    #[test]
    fn total_variation_examples() {
        assert_eq!(p(&[0.0, 1.0, 2.0], &[0.0, 2.0, 1.0], 3.0).total_variation(3.0), 3.0);
        assert_eq!(p(&[0.0], &[1.0], 3.0).total_variation(3.0), 0.0);
        let v = StepPath::from_points(
            vec![0.0, 1.0, 2.0],
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, -2.0]],
            3.0,
        )
        .unwrap();
        assert_eq!(v.total_variation(3.0), 3.0);
        assert_eq!(v.total_variation(1.5), 1.0);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let x = StepPath::from_points(
            vec![0.0, 0.1, 1.0 / 3.0],
            &[vec![0.1, -2.5e-17], vec![1e300, 0.2], vec![-0.3, 7.0]],
            1.25,
        )
        .unwrap();
        let mut buf = Vec::new();
        x.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("t,x_1,x_2"));
        assert_eq!(StepPath::read_csv(buf.as_slice()).unwrap(), x);
    }

    #[test]
    fn resample_is_summation_rule() {
        let x = p(&[0.0, 0.35], &[1.0, 2.0], 1.0);
        let r = x.resample(&[0.0, 0.25, 0.5, 0.75]).unwrap();
        assert_eq!(r.values().map(|v| v[0]).collect::<Vec<_>>(), vec![1.0, 1.0, 2.0, 2.0]);
    }
}
