//! Closed convex domains and Euclidean projection onto their closure.
//!
//! Every domain carries an interior anchor point `a` together with the
//! distance `d_a` from `a` to the boundary. The anchor enters the a-priori
//! bounds for penalized paths and the inequality
//! `|x - Π(x)| <= d_a^{-1} <x - a, x - Π(x)>` checked by [`ConvexDomain::anchor_gap`].
//!
//! Half-spaces are written `{x : <n, x> >= c}` with `n` the unit inward normal.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{axpy, dist, dot, norm};

/// Absolute Euclidean tolerance for boundary membership and constraint activity.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Successive-iterate tolerance of the cyclic polyhedral projection.
pub const PROJECTION_TOL: f64 = 1e-12;
/// Cycle budget of the cyclic polyhedral projection.
pub const PROJECTION_MAX_ITERS: usize = 100_000;

const UNIT_NORMAL_TOL: f64 = 1e-12;
const MAX_ENUMERATED_FACES: usize = 16;

/// `{x : <normal, x> >= offset}` with a unit inward normal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        let h = Self { normal, offset };
        h.validate()?;
        Ok(h)
    }

    fn validate(&self) -> Result<()> {
        if self.normal.is_empty() {
            return Err(Error::InvalidDomain("half-space normal is empty".into()));
        }
        let len = norm(&self.normal);
        if (len - 1.0).abs() > UNIT_NORMAL_TOL {
            return Err(Error::InvalidDomain(format!(
                "half-space normal must have unit length, got {len}"
            )));
        }
        if !self.offset.is_finite() {
            return Err(Error::InvalidDomain("half-space offset is not finite".into()));
        }
        Ok(())
    }

    #[inline]
    pub fn slack(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    #[inline]
    fn project_in_place(&self, x: &mut [f64]) {
        let s = self.slack(x);
        if s < 0.0 {
            axpy(-s, &self.normal, x);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    HalfSpace { normal: Vec<f64>, offset: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    Polyhedron { faces: Vec<HalfSpace> },
}

impl Shape {
    fn dim(&self) -> usize {
        match self {
            Shape::HalfSpace { normal, .. } => normal.len(),
            Shape::Box { lo, .. } => lo.len(),
            Shape::Ball { center, .. } => center.len(),
            Shape::Polyhedron { faces } => faces.first().map_or(0, |f| f.normal.len()),
        }
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        if d == 0 {
            return Err(Error::InvalidDomain("dimension must be positive".into()));
        }
        match self {
            Shape::HalfSpace { normal, offset } => HalfSpace {
                normal: normal.clone(),
                offset: *offset,
            }
            .validate(),
            Shape::Box { lo, hi } => {
                if hi.len() != d {
                    return Err(Error::DimensionMismatch {
                        expected: d,
                        got: hi.len(),
                    });
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::InvalidDomain("box needs lo < hi componentwise".into()));
                }
                Ok(())
            }
            Shape::Ball { radius, .. } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(Error::InvalidDomain(format!("ball radius must be > 0, got {radius}")));
                }
                Ok(())
            }
            Shape::Polyhedron { faces } => {
                if faces.is_empty() {
                    return Err(Error::InvalidDomain("polyhedron needs at least one face".into()));
                }
                for f in faces {
                    if f.normal.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            got: f.normal.len(),
                        });
                    }
                    f.validate()?;
                }
                Ok(())
            }
        }
    }
}

/// Result of projecting a point onto the closed domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionResult {
    pub point: Vec<f64>,
    /// `|x - Π(x)|`
    pub penetration: f64,
    pub on_boundary: bool,
}

/// A closed convex domain with a designated interior anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    shape: Shape,
    anchor: Vec<f64>,
    anchor_distance: f64,
}

impl ConvexDomain {
    /// Builds a domain; `d_a` is computed exactly from the anchor.
    pub fn new(shape: Shape, anchor: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        let d = shape.dim();
        if anchor.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: anchor.len(),
            });
        }
        let mut dom = Self {
            shape,
            anchor,
            anchor_distance: 0.0,
        };
        let depth = dom.interior_depth(&dom.anchor);
        if !(depth > 0.0) {
            return Err(Error::InvalidDomain(format!(
                "anchor {:?} is not strictly interior (depth {depth})",
                dom.anchor
            )));
        }
        dom.anchor_distance = depth;
        Ok(dom)
    }

    /// Overrides `d_a` with a supplied value. Any `0 < d <= dist(a, ∂D)` keeps
    /// every anchor-based bound valid; larger values are rejected.
    pub fn with_anchor_distance(mut self, d: f64) -> Result<Self> {
        let exact = self.interior_depth(&self.anchor);
        if !(d > 0.0) || d > exact + BOUNDARY_TOL {
            return Err(Error::InvalidDomain(format!("anchor distance {d} not in (0, {exact}]")));
        }
        self.anchor_distance = d;
        Ok(self)
    }

    /// The half-line `(0, ∞)` with anchor 1.
    pub fn half_line() -> Self {
        Self::half_space(vec![1.0], 0.0, vec![1.0]).expect("valid half-line")
    }

    pub fn half_space(normal: Vec<f64>, offset: f64, anchor: Vec<f64>) -> Result<Self> {
        Self::new(Shape::HalfSpace { normal, offset }, anchor)
    }

    pub fn cuboid(lo: Vec<f64>, hi: Vec<f64>, anchor: Vec<f64>) -> Result<Self> {
        Self::new(Shape::Box { lo, hi }, anchor)
    }

    pub fn ball(center: Vec<f64>, radius: f64, anchor: Vec<f64>) -> Result<Self> {
        Self::new(Shape::Ball { center, radius }, anchor)
    }

    pub fn polyhedron(faces: Vec<HalfSpace>, anchor: Vec<f64>) -> Result<Self> {
        Self::new(Shape::Polyhedron { faces }, anchor)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn anchor_distance(&self) -> f64 {
        self.anchor_distance
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Distance to the boundary for points of the closure; nonpositive outside.
    ///
    /// The polyhedral formula `min_i slack_i` is exact inside: the nearest
    /// hyperplane foot point cannot be cut off by another face without that
    /// face being nearer.
    pub fn interior_depth(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => dot(normal, x) - offset,
            Shape::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(xi, (l, h))| (xi - l).min(h - xi))
                .fold(f64::INFINITY, f64::min),
            Shape::Ball { center, radius } => radius - dist(x, center),
            Shape::Polyhedron { faces } => faces.iter().map(|f| f.slack(x)).fold(f64::INFINITY, f64::min),
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.interior_depth(x) >= -tol
    }

    pub fn on_boundary(&self, x: &[f64], tol: f64) -> bool {
        self.interior_depth(x).abs() <= tol
    }

    /// Writes `Π(x)` into `out`. Points of the closure are returned unchanged,
    /// bit for bit.
    pub fn project_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(x);
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                let s = dot(normal, x) - offset;
                if s < 0.0 {
                    axpy(-s, normal, out);
                }
            }
            Shape::Box { lo, hi } => {
                for ((o, l), h) in out.iter_mut().zip(lo).zip(hi) {
                    *o = o.clamp(*l, *h);
                }
            }
            Shape::Ball { center, radius } => {
                let r = dist(x, center);
                if r > *radius {
                    let s = radius / r;
                    for (o, c) in out.iter_mut().zip(center) {
                        *o = c + (*o - c) * s;
                    }
                }
            }
            Shape::Polyhedron { faces } => {
                if faces.iter().any(|f| f.slack(x) < 0.0) {
                    dykstra(faces, x, out)?;
                }
            }
        }
        Ok(())
    }

    pub fn project_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let mut out = vec![0.0; x.len()];
        self.project_into(x, &mut out)?;
        Ok(out)
    }

    pub fn project(&self, x: &[f64]) -> Result<ProjectionResult> {
        let point = self.project_point(x)?;
        let penetration = dist(x, &point);
        let on_boundary = self.on_boundary(&point, BOUNDARY_TOL);
        Ok(ProjectionResult {
            point,
            penetration,
            on_boundary,
        })
    }

    /// `d_a^{-1} <x - a, x - Π(x)> - |x - Π(x)|`, nonnegative for every `x`.
    pub fn anchor_gap(&self, x: &[f64]) -> Result<f64> {
        let p = self.project_point(x)?;
        let mut inner = 0.0;
        let mut pen = 0.0;
        for ((xi, pi), ai) in x.iter().zip(&p).zip(&self.anchor) {
            let r = xi - pi;
            inner += (xi - ai) * r;
            pen += r * r;
        }
        Ok(inner / self.anchor_distance - pen.sqrt())
    }

    /// Sampled inward-normal test: `true` iff `<y - b, dir> >= -tol` for every
    /// sample `y`. `b` must lie on the boundary.
    pub fn normal_cone_check(&self, b: &[f64], dir: &[f64], samples: &[Vec<f64>]) -> Result<bool> {
        self.check_dim(b)?;
        self.check_dim(dir)?;
        let depth = self.interior_depth(b);
        if depth.abs() > BOUNDARY_TOL {
            return Err(Error::NotOnBoundary { distance: depth });
        }
        for y in samples {
            self.check_dim(y)?;
        }
        Ok(samples.iter().all(|y| {
            y.iter()
                .zip(b)
                .zip(dir)
                .map(|((yi, bi), di)| (yi - bi) * di)
                .sum::<f64>()
                >= -BOUNDARY_TOL
        }))
    }

    /// Whether `v` belongs to the inward normal cone at `x`, i.e. the cone
    /// spanned by the inward normals of the constraints active at `x`
    /// (activity tolerance `tol`). The zero vector is always a member.
    pub fn in_normal_cone(&self, x: &[f64], v: &[f64], tol: f64) -> bool {
        self.normal_cone_residual(x, v, tol) <= tol * norm(v).max(1.0)
    }

    /// Euclidean distance from `v` to the inward normal cone at `x`, the cone
    /// being generated by the constraints active within `tol`. At interior
    /// points the cone is `{0}` and the residual is `|v|`.
    pub fn normal_cone_residual(&self, x: &[f64], v: &[f64], tol: f64) -> f64 {
        match &self.shape {
            Shape::HalfSpace { normal, offset } => {
                if (dot(normal, x) - offset).abs() > tol {
                    return norm(v);
                }
                ray_residual(normal, v)
            }
            Shape::Box { lo, hi } => x
                .iter()
                .zip(v)
                .zip(lo.iter().zip(hi))
                .map(|((xi, vi), (l, h))| {
                    let at_lo = (xi - l).abs() <= tol;
                    let at_hi = (h - xi).abs() <= tol;
                    let r = match (at_lo, at_hi) {
                        (true, false) => (-vi).max(0.0),
                        (false, true) => vi.max(0.0),
                        (true, true) => 0.0,
                        (false, false) => vi.abs(),
                    };
                    r * r
                })
                .sum::<f64>()
                .sqrt(),
            Shape::Ball { center, radius } => {
                let r = dist(x, center);
                if (r - radius).abs() > tol || r == 0.0 {
                    return norm(v);
                }
                let inward: Vec<f64> = center.iter().zip(x).map(|(c, xi)| (c - xi) / r).collect();
                ray_residual(&inward, v)
            }
            Shape::Polyhedron { faces } => {
                let active: Vec<&[f64]> = faces
                    .iter()
                    .filter(|f| f.slack(x).abs() <= tol)
                    .map(|f| f.normal.as_slice())
                    .collect();
                cone_residual(&active, v)
            }
        }
    }
}

/// Distance from `v` to the ray spanned by the unit vector `u`.
fn ray_residual(u: &[f64], v: &[f64]) -> f64 {
    let c = dot(u, v).max(0.0);
    v.iter()
        .zip(u)
        .map(|(vi, ui)| (vi - c * ui).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Distance from `v` to the convex cone spanned by `gens`, by enumerating
/// supports of the nonnegative least-squares solution.
fn cone_residual(gens: &[&[f64]], v: &[f64]) -> f64 {
    let m = gens.len();
    if m == 0 {
        return norm(v);
    }
    if m > MAX_ENUMERATED_FACES {
        return f64::INFINITY;
    }
    let mut best = norm(v);
    for mask in 1u32..(1u32 << m) {
        let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let k = idx.len();
        let mut gram = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        for (a, &i) in idx.iter().enumerate() {
            rhs[a] = dot(gens[i], v);
            for (b, &j) in idx.iter().enumerate() {
                gram[a * k + b] = dot(gens[i], gens[j]);
            }
        }
        let Some(coef) = solve_dense(&mut gram, &mut rhs, k) else {
            continue;
        };
        if coef.iter().any(|c| *c < -1e-12) {
            continue;
        }
        let mut r = v.to_vec();
        for (c, &i) in coef.iter().zip(&idx) {
            axpy(-c, gens[i], &mut r);
        }
        best = best.min(norm(&r));
    }
    best
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Option<Vec<f64>> {
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[piv * n + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            for j in col..n {
                a[row * n + j] -= f * a[col * n + j];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|j| a[row * n + j] * x[j]).sum();
        x[row] = (b[row] - s) / a[row * n + row];
    }
    Some(x)
}

/// Dykstra's cyclic-correction projection onto an intersection of half-spaces.
///
/// Stops once a full cycle moves the iterate by at most `PROJECTION_TOL`
/// (relative to unit scale) and all faces are satisfied within `BOUNDARY_TOL`.
/// A cycle that leaves the iterate fixed certifies optimality, because the
/// accumulated corrections then lie in the normal cone of the intersection.
fn dykstra(faces: &[HalfSpace], x: &[f64], out: &mut [f64]) -> Result<()> {
    let d = x.len();
    let m = faces.len();
    let mut corr = vec![0.0; m * d];
    let mut y = x.to_vec();
    let mut prev = vec![0.0; d];
    let mut z = vec![0.0; d];
    let mut change = f64::INFINITY;
    for _ in 0..PROJECTION_MAX_ITERS {
        prev.copy_from_slice(&y);
        for (i, face) in faces.iter().enumerate() {
            let e = &mut corr[i * d..(i + 1) * d];
            for k in 0..d {
                z[k] = y[k] + e[k];
            }
            y.copy_from_slice(&z);
            face.project_in_place(&mut y);
            for k in 0..d {
                e[k] = z[k] - y[k];
            }
        }
        change = dist(&y, &prev);
        let feasible = faces.iter().all(|f| f.slack(&y) >= -BOUNDARY_TOL);
        if change <= PROJECTION_TOL * norm(&y).max(1.0) && feasible {
            out.copy_from_slice(&y);
            return Ok(());
        }
    }
    Err(Error::ProjectionNotConverged {
        iterations: PROJECTION_MAX_ITERS,
        residual: change,
    })
}
