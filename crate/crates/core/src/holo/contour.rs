//! Circle contours for the Cauchy integral and their automatic construction.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::function::{BranchCut, HoloFunction};
use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, largest_singular_value, Matrix};

pub const DEFAULT_NODES: usize = 256;
pub const MIN_NODES: usize = 16;

/// Required clearance between a disk of radius `r` and any obstruction.
const MARGIN: f64 = 1.1;

/// Smallest radius of a single enclosing circle.
const MIN_RADIUS: f64 = 0.2;

/// A positively oriented circle sampled at `nodes` equispaced points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    pub nodes: usize,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64, nodes: usize) -> Self {
        Self { center, radius, nodes }
    }

    /// `center + r e^{2 pi i k / M}` for `k = 0..M`.
    pub fn points(&self) -> Vec<Complex64> {
        (0..self.nodes)
            .map(|k| self.center + Complex64::from_polar(self.radius, 2.0 * PI * k as f64 / self.nodes as f64))
            .collect()
    }

    /// Winding number of the node polygon about `z`.
    pub fn winding(&self, z: Complex64) -> i64 {
        let pts = self.points();
        let mut total = 0.0;
        for k in 0..pts.len() {
            let a = pts[k] - z;
            let b = pts[(k + 1) % pts.len()] - z;
            if a.norm() == 0.0 || b.norm() == 0.0 {
                return i64::MIN;
            }
            total += (b / a).arg();
        }
        (total / (2.0 * PI)).round() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub circles: Vec<Circle>,
}

impl Contour {
    pub fn single(center: Complex64, radius: f64, nodes: usize) -> Self {
        Self {
            circles: vec![Circle::new(center, radius, nodes)],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("contour serializes")
    }

    /// Same circles with a different node count.
    pub fn with_nodes(&self, nodes: usize) -> Self {
        Self {
            circles: self.circles.iter().map(|c| Circle { nodes, ..*c }).collect(),
        }
    }

    pub fn winding(&self, z: Complex64) -> i64 {
        self.circles.iter().map(|c| c.winding(z)).sum()
    }

    /// Checks the shape, winding one about every point of `spectrum`, winding
    /// zero about every singularity of `h`, and that no disk meets a branch cut.
    pub fn validate(&self, spectrum: &[Complex64], h: &HoloFunction) -> Result<()> {
        let invalid = |reason: String| Err(Error::InvalidContour { reason });
        if self.circles.is_empty() {
            return invalid("no circles".into());
        }
        for c in &self.circles {
            if !(c.radius.is_finite() && c.radius > 0.0) || !(c.center.re.is_finite() && c.center.im.is_finite()) {
                return invalid(format!("circle at {} has radius {}", c.center, c.radius));
            }
            if c.nodes < MIN_NODES {
                return invalid(format!("{} nodes is below the minimum of {MIN_NODES}", c.nodes));
            }
        }
        for (i, a) in self.circles.iter().enumerate() {
            for b in &self.circles[i + 1..] {
                if (a.center - b.center).norm() <= a.radius + b.radius {
                    return invalid(format!("circles at {} and {} overlap", a.center, b.center));
                }
            }
        }
        for &z in spectrum {
            let w = self.winding(z);
            if w != 1 {
                return invalid(format!("winding number {w} about spectral point {z}"));
            }
        }
        for &s in h.singularities() {
            let w = self.winding(s);
            if w != 0 {
                return invalid(format!("winding number {w} about singularity {s}"));
            }
        }
        for c in &self.circles {
            if !disk_avoids_cuts(c.center, c.radius, h.branch_cuts(), 1.0) {
                return invalid(format!("disk at {} radius {} meets a branch cut", c.center, c.radius));
            }
        }
        Ok(())
    }
}

fn crosses_negative_axis(a: Complex64, b: Complex64) -> bool {
    if a.im == 0.0 && a.re <= 0.0 || b.im == 0.0 && b.re <= 0.0 {
        return true;
    }
    if (a.im > 0.0) == (b.im > 0.0) {
        return false;
    }
    let t = a.im / (a.im - b.im);
    a.re + t * (b.re - a.re) <= 0.0
}

/// Samples the preimage cut on a polar grid covering the disk of radius
/// `scale * r`.
fn disk_avoids_cuts(center: Complex64, r: f64, cuts: &[BranchCut], scale: f64) -> bool {
    const RINGS: usize = 12;
    const SPOKES: usize = 128;
    cuts.iter().all(|cut| match cut {
        BranchCut::Ray { .. } => cut.distance(center).is_some_and(|d| d > scale * r),
        BranchCut::Preimage { argument } => {
            let value = |ring: usize, spoke: usize| {
                let rho = scale * r * ring as f64 / RINGS as f64;
                argument.eval(center + Complex64::from_polar(rho, 2.0 * PI * spoke as f64 / SPOKES as f64))
            };
            let Some(c0) = value(0, 0) else { return false };
            let mut prev_ring = vec![c0; SPOKES];
            for ring in 1..=RINGS {
                let mut cur = Vec::with_capacity(SPOKES);
                for spoke in 0..SPOKES {
                    match value(ring, spoke) {
                        Some(v) => cur.push(v),
                        None => return false,
                    }
                }
                for k in 0..SPOKES {
                    if crosses_negative_axis(cur[k], cur[(k + 1) % SPOKES])
                        || crosses_negative_axis(prev_ring[k], cur[k])
                    {
                        return false;
                    }
                }
                prev_ring = cur;
            }
            true
        }
    })
}

/// Distance from `c` to the nearest singularity or ray cut of `h`.
fn obstruction_distance(c: Complex64, h: &HoloFunction) -> f64 {
    let poles = h.singularities().iter().map(|s| (s - c).norm());
    let rays = h.branch_cuts().iter().filter_map(|cut| cut.distance(c));
    poles.chain(rays).fold(f64::INFINITY, f64::min)
}

fn centroid(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

fn spread(points: &[Complex64], c: Complex64) -> f64 {
    points.iter().map(|p| (p - c).norm()).fold(0.0, f64::max)
}

/// Radius for one circle about `c` enclosing points within `inner` and
/// staying `MARGIN` away from everything at distance `outer`.
fn pick_radius(inner: f64, outer: f64) -> Option<f64> {
    let generous = 1.25 * inner;
    if MARGIN * generous <= outer {
        Some(generous)
    } else if outer >= MARGIN * MARGIN * inner {
        Some((inner * outer).sqrt())
    } else {
        None
    }
}

/// Single-linkage partition of `points` into `k` clusters.
fn clusters(points: &[Complex64], k: usize) -> Vec<Vec<usize>> {
    let m = points.len();
    let mut edges = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            edges.push(((points[i] - points[j]).norm(), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut parent: Vec<usize> = (0..m).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    let mut groups = m;
    for (_, i, j) in edges {
        if groups == k {
            break;
        }
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
            groups -= 1;
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut label = vec![usize::MAX; m];
    for i in 0..m {
        let root = find(&mut parent, i);
        if label[root] == usize::MAX {
            label[root] = out.len();
            out.push(Vec::new());
        }
        out[label[root]].push(i);
    }
    out
}

fn split_contour(points: &[Complex64], h: &HoloFunction, nodes: usize, k: usize) -> Option<Contour> {
    let groups = clusters(points, k);
    let mut circles = Vec::with_capacity(groups.len());
    for (g, members) in groups.iter().enumerate() {
        let pts: Vec<Complex64> = members.iter().map(|&i| points[i]).collect();
        let c = centroid(&pts);
        let others = groups
            .iter()
            .enumerate()
            .filter(|&(o, _)| o != g)
            .flat_map(|(_, m)| m.iter().map(|&i| (points[i] - c).norm()))
            .fold(f64::INFINITY, f64::min);
        let outer = obstruction_distance(c, h).min(others);
        let inner = spread(&pts, c);
        let r = if inner == 0.0 {
            (outer / 2.5).min(0.5 * c.norm().max(1.0))
        } else {
            pick_radius(inner, outer)?
        };
        if !(r > 0.0 && r.is_finite()) || !disk_avoids_cuts(c, r, h.branch_cuts(), MARGIN) {
            return None;
        }
        circles.push(Circle::new(c, r, nodes));
    }
    let contour = Contour { circles };
    contour.validate(points, h).ok()?;
    Some(contour)
}

/// Builds a contour around `points` on which `h` is analytic.
pub fn auto_contour(points: &[Complex64], h: &HoloFunction, nodes: usize) -> Result<Contour> {
    auto_contour_with(points, h, nodes, 0.0)
}

/// Like [`auto_contour`], but a single enclosing circle is given radius at
/// least `1.25 * floor`.
///
/// Passing `floor = ||T - cI||_2` for the centroid `c` keeps the contour
/// outside the numerical range of `T`, where the resolvent is bounded by the
/// reciprocal distance.
pub fn auto_contour_with(points: &[Complex64], h: &HoloFunction, nodes: usize, floor: f64) -> Result<Contour> {
    let fail = |reason: String| Err(Error::NoValidContour { reason });
    if points.is_empty() {
        return fail("no spectral points".into());
    }
    if nodes < MIN_NODES {
        return Err(Error::InvalidContour {
            reason: format!("{nodes} nodes is below the minimum of {MIN_NODES}"),
        });
    }
    for &p in points {
        if let Some(s) = h.singularities().iter().find(|s| (*s - p).norm() < 1e-6) {
            return fail(format!("singularity {s} lies within 1e-6 of spectral point {p}"));
        }
        if h.check_defined(p, 1e-6).is_err() {
            return fail(format!("spectral point {p} lies on a branch cut"));
        }
    }

    let c = centroid(points);
    let inner = spread(points, c).max(floor).max(MIN_RADIUS);
    if let Some(r) = pick_radius(inner, obstruction_distance(c, h)) {
        if disk_avoids_cuts(c, r, h.branch_cuts(), MARGIN) {
            let contour = Contour::single(c, r, nodes);
            if contour.validate(points, h).is_ok() {
                return Ok(contour);
            }
        }
    }
    let unique = dedup(points);
    for k in 2..=unique.len() {
        if let Some(contour) = split_contour(&unique, h, nodes, k) {
            contour.validate(points, h)?;
            return Ok(contour);
        }
    }
    fail(format!(
        "singularities or branch cuts of `{}` cannot be separated from the spectrum by circles",
        h.source()
    ))
}

fn dedup(points: &[Complex64]) -> Vec<Complex64> {
    let scale = points.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let mut out: Vec<Complex64> = Vec::new();
    for &p in points {
        if !out.iter().any(|q| (q - p).norm() <= 1e-12 * scale) {
            out.push(p);
        }
    }
    out
}

/// A contour winding once about the union of the spectra of `mats`.
///
/// Tries an enclosing circle outside every numerical range first, then falls
/// back to spectrum-hugging circles.
pub fn contour_for(mats: &[&Matrix], h: &HoloFunction, nodes: usize) -> Result<Contour> {
    let mut points = Vec::new();
    for m in mats {
        points.extend(eigenvalues(m)?);
    }
    if points.is_empty() {
        return Err(Error::NoValidContour {
            reason: "empty matrix".into(),
        });
    }
    let c = centroid(&points);
    let floor = mats
        .iter()
        .map(|m| largest_singular_value(&m.shift(c)))
        .fold(0.0, f64::max);
    auto_contour_with(&points, h, nodes, floor).or_else(|_| auto_contour(&points, h, nodes))
}
