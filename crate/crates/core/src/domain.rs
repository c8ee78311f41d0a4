//! Domains, targets and mesh policy, plus the JSON domain-file format.
//!
//! A domain is the upper half-plane minus finitely many rectilinear holes,
//! truncated far away by a half-disk (or, optionally, a box) so that grids
//! stay finite. All coordinates are physical; lattices are anchored at the
//! start point `start_x` on the real axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{c, cross, first_contact, point_segment_distance, segment_distance, Rect, C64};

const EPS: f64 = 1e-9;

/// A rectilinear simple polygon listed counterclockwise.
#[derive(Clone, Debug, PartialEq)]
pub struct Hole {
    vertices: Vec<C64>,
}

impl Hole {
    pub fn new(vertices: Vec<C64>) -> Result<Self> {
        Self::validated(vertices, "hole")
    }

    fn validated(mut vertices: Vec<C64>, path: &str) -> Result<Self> {
        if vertices.len() > 1 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 4 {
            return Err(Error::invariant(path, "hole needs at least 4 vertices"));
        }
        if vertices.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::invariant(path, "non-finite coordinate"));
        }
        let n = vertices.len();
        for k in 0..n {
            let (a, b) = (vertices[k], vertices[(k + 1) % n]);
            let d = b - a;
            if d.norm() <= EPS {
                return Err(Error::invariant(format!("{path}[{k}]"), "degenerate edge"));
            }
            if d.re.abs() > EPS && d.im.abs() > EPS {
                return Err(Error::invariant(format!("{path}[{k}]"), "edge is not axis-parallel"));
            }
        }
        let hole = Hole { vertices };
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                let (a, b) = hole.edge(i);
                let (p, q) = hole.edge(j);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    let shared = if j == i + 1 { b } else { a };
                    let other_i = if j == i + 1 { a } else { b };
                    let other_j = if j == i + 1 { q } else { p };
                    if point_segment_distance(other_i, p, q) <= EPS
                        || point_segment_distance(other_j, a, b) <= EPS
                        || (shared - other_i).norm() <= EPS
                    {
                        return Err(Error::invariant(path, "hole polygon is not simple"));
                    }
                } else if segment_distance(a, b, p, q) <= EPS {
                    return Err(Error::invariant(path, "hole polygon is not simple"));
                }
            }
        }
        if hole.signed_area() <= 0.0 {
            return Err(Error::invariant(
                path,
                "hole must be listed counterclockwise with positive area",
            ));
        }
        Ok(hole)
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Hole::new(vec![c(x0, y0), c(x1, y0), c(x1, y1), c(x0, y1)])
    }

    pub fn vertices(&self) -> &[C64] {
        &self.vertices
    }

    pub fn edge(&self, k: usize) -> (C64, C64) {
        let n = self.vertices.len();
        (self.vertices[k % n], self.vertices[(k + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (C64, C64)> + '_ {
        (0..self.vertices.len()).map(move |k| self.edge(k))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| cross(a, b)).sum::<f64>() / 2.0
    }

    pub fn bbox(&self) -> Rect {
        Rect::from_points(self.vertices.iter().copied()).expect("hole has vertices")
    }

    pub fn min_edge(&self) -> f64 {
        self.edges().map(|(a, b)| (b - a).norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn boundary_distance(&self, z: C64) -> f64 {
        self.edges()
            .map(|(a, b)| point_segment_distance(z, a, b))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn on_boundary(&self, z: C64) -> bool {
        self.boundary_distance(z) <= EPS * (1.0 + z.norm())
    }

    /// Closed polygon membership (boundary included).
    pub fn contains_closed(&self, z: C64) -> bool {
        let b = self.bbox();
        if z.re < b.x0 - EPS || z.re > b.x1 + EPS || z.im < b.y0 - EPS || z.im > b.y1 + EPS {
            return false;
        }
        if self.on_boundary(z) {
            return true;
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.im > z.im) != (b.im > z.im) {
                let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
                if x > z.re {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| (b - a).norm()).sum()
    }

    /// Counterclockwise arclength position of the boundary point nearest `z`,
    /// measured from the first vertex.
    pub fn boundary_param(&self, z: C64) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        let mut acc = 0.0;
        for (a, b) in self.edges() {
            let len = (b - a).norm();
            let t = (crate::geom::dot(z - a, b - a) / (len * len)).clamp(0.0, 1.0);
            let d = (z - (a + (b - a) * t)).norm();
            if d < best.0 {
                best = (d, acc + t * len);
            }
            acc += len;
        }
        best.1
    }

    pub fn nearest_boundary_point(&self, z: C64) -> C64 {
        let mut best = (f64::INFINITY, z);
        for (a, b) in self.edges() {
            let d = b - a;
            let t = (crate::geom::dot(z - a, d) / d.norm_sqr()).clamp(0.0, 1.0);
            let p = a + d * t;
            let dist = (z - p).norm();
            if dist < best.0 {
                best = (dist, p);
            }
        }
        best.1
    }

    pub fn distance_to(&self, other: &Hole) -> f64 {
        let mut d = f64::INFINITY;
        for (a, b) in self.edges() {
            for (p, q) in other.edges() {
                d = d.min(segment_distance(a, b, p, q));
            }
        }
        d
    }
}

/// Far-field truncation of the unbounded domain, centred on the physical
/// origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Truncation {
    /// Keep `|z| < radius`.
    Disk { radius: f64 },
    /// Keep `(-half_width, half_width) × (0, height)`.
    Box { half_width: f64, height: f64 },
}

impl Truncation {
    pub fn contains_open(&self, z: C64) -> bool {
        match *self {
            Truncation::Disk { radius } => z.norm() < radius * (1.0 - 1e-12),
            Truncation::Box { half_width, height } => {
                z.re.abs() < half_width - EPS && z.im < height - EPS
            }
        }
    }

    pub fn bbox(&self) -> Rect {
        match *self {
            Truncation::Disk { radius } => Rect {
                x0: -radius,
                y0: 0.0,
                x1: radius,
                y1: radius,
            },
            Truncation::Box { half_width, height } => Rect {
                x0: -half_width,
                y0: 0.0,
                x1: half_width,
                y1: height,
            },
        }
    }

    /// First parameter along `a→b` (with `a` inside) where the truncation
    /// boundary is met.
    fn first_exit(&self, a: C64, b: C64) -> Option<f64> {
        match *self {
            Truncation::Disk { radius } => {
                if b.norm() < radius {
                    return None;
                }
                let d = b - a;
                let qa = d.norm_sqr();
                let qb = 2.0 * crate::geom::dot(a, d);
                let qc = a.norm_sqr() - radius * radius;
                let disc = (qb * qb - 4.0 * qa * qc).max(0.0);
                let s = (-qb + disc.sqrt()) / (2.0 * qa);
                Some(s.clamp(0.0, 1.0))
            }
            Truncation::Box { half_width, height } => {
                let walls = [
                    (c(-half_width, 0.0), c(-half_width, height)),
                    (c(half_width, 0.0), c(half_width, height)),
                    (c(-half_width, height), c(half_width, height)),
                ];
                walls
                    .iter()
                    .filter_map(|&(p, q)| first_contact(a, b, p, q))
                    .fold(None, |m: Option<f64>, s| Some(m.map_or(s, |m| m.min(s))))
            }
        }
    }

    fn extent(&self) -> f64 {
        match *self {
            Truncation::Disk { radius } => radius,
            Truncation::Box { half_width, height } => half_width.max(height),
        }
    }
}

/// Which part of the boundary a segment ran into.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryPart {
    Axis,
    Hole(usize),
    Far,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Domain {
    pub holes: Vec<Hole>,
    pub start_x: f64,
    pub truncation: Truncation,
}

impl Domain {
    pub fn half_plane(far_radius: f64) -> Self {
        Domain {
            holes: Vec::new(),
            start_x: 0.0,
            truncation: Truncation::Disk { radius: far_radius },
        }
    }

    pub fn start(&self) -> C64 {
        c(self.start_x, 0.0)
    }

    pub fn is_hole_free(&self) -> bool {
        self.holes.is_empty()
    }

    /// Open-domain membership.
    pub fn contains(&self, z: C64) -> bool {
        z.im > EPS && self.truncation.contains_open(z) && !self.holes.iter().any(|h| h.contains_closed(z))
    }

    /// First boundary point met when moving along `a→b` from `a ∈ D`.
    pub fn first_boundary_hit(&self, a: C64, b: C64) -> Option<(f64, BoundaryPart)> {
        let mut best: Option<(f64, BoundaryPart)> = None;
        let mut offer = |s: f64, part: BoundaryPart| {
            if best.map_or(true, |(bs, _)| s < bs) {
                best = Some((s, part));
            }
        };
        if b.im <= EPS {
            let s = if a.im - b.im > 0.0 { a.im / (a.im - b.im) } else { 0.0 };
            offer(s.clamp(0.0, 1.0), BoundaryPart::Axis);
        }
        let seg = Rect::point(a).include(b);
        for (k, hole) in self.holes.iter().enumerate() {
            let hb = hole.bbox();
            if hb.x0 > seg.x1 + EPS || hb.x1 < seg.x0 - EPS || hb.y0 > seg.y1 + EPS || hb.y1 < seg.y0 - EPS {
                continue;
            }
            for (p, q) in hole.edges() {
                if let Some(s) = first_contact(a, b, p, q) {
                    offer(s, BoundaryPart::Hole(k));
                }
            }
        }
        if let Some(s) = self.truncation.first_exit(a, b) {
            offer(s, BoundaryPart::Far);
        }
        best
    }

    /// Smallest geometric feature: hole edges, hole gaps, hole-to-axis gaps.
    pub fn feature_size(&self) -> f64 {
        let mut f = f64::INFINITY;
        for (i, h) in self.holes.iter().enumerate() {
            f = f.min(h.min_edge()).min(h.bbox().y0);
            for g in &self.holes[i + 1..] {
                f = f.min(h.distance_to(g));
            }
        }
        f
    }

    pub fn bbox(&self) -> Rect {
        self.truncation.bbox()
    }
}

/// Target arcs on the boundary.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ArcSpec {
    /// `[a, b]` on the real axis.
    Interval { a: f64, b: f64 },
    /// Whole boundary of a hole.
    Hole { index: usize },
    /// Counterclockwise sub-arc of a hole boundary between two boundary points.
    HoleArc { index: usize, from: C64, to: C64 },
}

impl ArcSpec {
    /// Whether the boundary point `z` on boundary part `part` lies on the arc.
    pub fn contains(&self, domain: &Domain, part: BoundaryPart, z: C64) -> bool {
        match (*self, part) {
            (ArcSpec::Interval { a, b }, BoundaryPart::Axis) => {
                let tol = EPS * (1.0 + a.abs().max(b.abs()));
                z.re >= a - tol && z.re <= b + tol
            }
            (ArcSpec::Hole { index }, BoundaryPart::Hole(k)) => index == k,
            (ArcSpec::HoleArc { index, from, to }, BoundaryPart::Hole(k)) if index == k => {
                let hole = &domain.holes[k];
                let per = hole.perimeter();
                let s0 = hole.boundary_param(from);
                let s1 = hole.boundary_param(to);
                let span = (s1 - s0).rem_euclid(per);
                let pos = (hole.boundary_param(z) - s0).rem_euclid(per);
                let tol = EPS * (1.0 + per);
                pos <= span + tol || pos >= per - tol
            }
            _ => false,
        }
    }

    fn extent(&self, domain: &Domain) -> f64 {
        match *self {
            ArcSpec::Interval { a, b } => a.abs().max(b.abs()),
            ArcSpec::Hole { index } | ArcSpec::HoleArc { index, .. } => domain
                .holes
                .get(index)
                .map(|h| h.vertices().iter().map(|z| z.norm()).fold(0.0, f64::max))
                .unwrap_or(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    InteriorPoint(C64),
    /// A prime end on the real axis.
    PrimeEnd(f64),
    SideArc(ArcSpec),
}

impl Target {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Target::InteriorPoint(_) => "InteriorPoint",
            Target::PrimeEnd(_) => "PrimeEnd",
            Target::SideArc(_) => "SideArc",
        }
    }

    /// Coordinates (relative to the start point) that an admissible mesh must divide.
    pub fn constrained_coordinates(&self, start_x: f64) -> Vec<f64> {
        match self {
            Target::InteriorPoint(_) => vec![],
            Target::PrimeEnd(x) => vec![x - start_x],
            Target::SideArc(ArcSpec::Interval { a, b }) => vec![a - start_x, b - start_x],
            Target::SideArc(ArcSpec::Hole { .. }) => vec![],
            Target::SideArc(ArcSpec::HoleArc { from, to, .. }) => {
                vec![from.re - start_x, from.im, to.re - start_x, to.im]
            }
        }
    }

    /// A representative point used for distances and bounding boxes.
    pub fn anchor_points(&self, domain: &Domain) -> Vec<C64> {
        match self {
            Target::InteriorPoint(p) => vec![*p],
            Target::PrimeEnd(x) => vec![c(*x, 0.0)],
            Target::SideArc(ArcSpec::Interval { a, b }) => vec![c(*a, 0.0), c(*b, 0.0)],
            Target::SideArc(ArcSpec::Hole { index }) => domain.holes[*index].vertices().to_vec(),
            Target::SideArc(ArcSpec::HoleArc { from, to, .. }) => vec![*from, *to],
        }
    }

    fn extent(&self, domain: &Domain) -> f64 {
        match self {
            Target::InteriorPoint(p) => p.norm(),
            Target::PrimeEnd(x) => x.abs(),
            Target::SideArc(arc) => arc.extent(domain),
        }
    }
}

/// Mesh choice for lattice approximations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshPolicy {
    pub mesh: f64,
}

/// A validated domain + target + mesh triple.
#[derive(Clone, Debug, PartialEq)]
pub struct Setup {
    pub domain: Domain,
    pub target: Target,
    pub mesh: MeshPolicy,
}

impl Setup {
    pub fn new(domain: Domain, target: Target, mesh: f64) -> Result<Self> {
        validate_domain(&domain)?;
        validate_target(&domain, &target)?;
        validate_mesh(&domain, &target, mesh)?;
        Ok(Setup {
            domain,
            target,
            mesh: MeshPolicy { mesh },
        })
    }

    /// Same configuration at another mesh, re-validated.
    pub fn with_mesh(&self, mesh: f64) -> Result<Self> {
        validate_mesh(&self.domain, &self.target, mesh)?;
        Ok(Setup {
            mesh: MeshPolicy { mesh },
            ..self.clone()
        })
    }

    pub fn to_json(&self) -> String {
        let raw = RawFile::from_setup(self);
        serde_json::to_string_pretty(&raw).expect("domain serialises")
    }
}

fn validate_domain(domain: &Domain) -> Result<()> {
    if !domain.start_x.is_finite() {
        return Err(Error::invariant("start_x", "must be finite"));
    }
    match domain.truncation {
        Truncation::Disk { radius } => {
            if !(radius > 0.0) {
                return Err(Error::invariant("far_radius", "must be positive"));
            }
        }
        Truncation::Box { half_width, height } => {
            if !(half_width > 0.0 && height > 0.0) {
                return Err(Error::invariant("far_box", "dimensions must be positive"));
            }
            if domain.start_x.abs() >= half_width {
                return Err(Error::invariant("start_x", "start lies outside the box"));
            }
        }
    }
    for (i, h) in domain.holes.iter().enumerate() {
        let path = format!("holes[{i}]");
        if h.bbox().y0 <= EPS {
            return Err(Error::invariant(path, "hole intersects boundary axis"));
        }
        if h.vertices().iter().any(|&z| !domain.truncation.contains_open(z)) {
            return Err(Error::invariant(path, "hole crosses the far truncation"));
        }
        for (j, g) in domain.holes.iter().enumerate().skip(i + 1) {
            if h.distance_to(g) <= EPS || g.contains_closed(h.vertices()[0]) || h.contains_closed(g.vertices()[0]) {
                return Err(Error::invariant(
                    format!("holes[{j}]"),
                    format!("hole closure intersects holes[{i}]"),
                ));
            }
        }
    }
    Ok(())
}

fn validate_target(domain: &Domain, target: &Target) -> Result<()> {
    let start = domain.start();
    match target {
        Target::InteriorPoint(p) => {
            if !(p.im > 0.0) {
                return Err(Error::invariant("target.p", "interior point must have positive height"));
            }
            if !domain.contains(*p) {
                return Err(Error::invariant("target.p", "interior point lies outside the domain"));
            }
        }
        Target::PrimeEnd(x) => {
            if !x.is_finite() || (x - domain.start_x).abs() <= EPS {
                return Err(Error::invariant("target.x_e", "prime end must differ from start_x"));
            }
            if !domain.truncation.contains_open(c(*x, 1e-9)) {
                return Err(Error::invariant("target.x_e", "prime end lies outside the truncation"));
            }
        }
        Target::SideArc(arc) => match *arc {
            ArcSpec::Interval { a, b } => {
                if !(a < b) {
                    return Err(Error::invariant("target.interval", "interval must satisfy a < b"));
                }
                if domain.start_x >= a - EPS && domain.start_x <= b + EPS {
                    return Err(Error::invariant("target.interval", "start_x lies on the target interval"));
                }
                if !domain.truncation.contains_open(c(a, 1e-9)) || !domain.truncation.contains_open(c(b, 1e-9)) {
                    return Err(Error::invariant("target.interval", "interval leaves the truncation"));
                }
            }
            ArcSpec::Hole { index } => {
                if index >= domain.holes.len() {
                    return Err(Error::invariant("target.hole_index", "no such hole"));
                }
            }
            ArcSpec::HoleArc { index, from, to } => {
                let hole = domain
                    .holes
                    .get(index)
                    .ok_or_else(|| Error::invariant("target.hole_index", "no such hole"))?;
                for (k, z) in [from, to].iter().enumerate() {
                    if !hole.on_boundary(*z) {
                        return Err(Error::invariant(
                            format!("target.arc_endpoints[{k}]"),
                            "endpoint is not on the hole boundary",
                        ));
                    }
                }
                if (from - to).norm() <= EPS {
                    return Err(Error::invariant("target.arc_endpoints", "endpoints coincide"));
                }
            }
        },
    }
    for (k, v) in target.constrained_coordinates(domain.start_x).iter().enumerate() {
        if rational_approx(*v).is_none() {
            return Err(Error::invariant(
                format!("target[{k}]"),
                "target coordinates must be rational so that an admissible mesh exists",
            ));
        }
    }
    let anchors = target.anchor_points(domain);
    if anchors.iter().any(|z| (z - start).norm() <= EPS) {
        return Err(Error::invariant("target", "target touches the start point"));
    }
    if let Truncation::Disk { radius } = domain.truncation {
        let hole_extent = domain
            .holes
            .iter()
            .flat_map(|h| h.vertices().iter().map(|z| z.norm()))
            .fold(0.0, f64::max);
        let need = 5.0 * domain.start_x.abs().max(hole_extent).max(target.extent(domain));
        if radius <= need {
            return Err(Error::invariant(
                "far_radius",
                format!("far_radius must exceed {need} (5x the largest feature extent)"),
            ));
        }
    } else {
        let _ = domain.truncation.extent();
    }
    Ok(())
}

fn validate_mesh(domain: &Domain, target: &Target, mesh: f64) -> Result<()> {
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::invariant("mesh", "mesh must be positive"));
    }
    let fs = domain.feature_size();
    if !(mesh < fs / 2.0) {
        return Err(Error::invariant(
            "mesh",
            format!("mesh must be below half the minimum feature size ({fs})"),
        ));
    }
    if !is_admissible(target, domain.start_x, mesh) {
        return Err(Error::Unsupported(format!(
            "mesh {mesh} does not divide the {} target coordinates",
            target.kind_name()
        )));
    }
    Ok(())
}

pub fn is_admissible(target: &Target, start_x: f64, mesh: f64) -> bool {
    target.constrained_coordinates(start_x).iter().all(|v| {
        let q = v / mesh;
        (q - q.round()).abs() <= 1e-7 * (1.0 + q.abs())
    })
}

/// Continued-fraction approximation `num/den` of `x` (denominator ≤ 10⁶).
pub fn rational_approx(x: f64) -> Option<(i64, i64)> {
    if !x.is_finite() {
        return None;
    }
    let tol = 1e-9 * (1.0 + x.abs());
    let (mut h0, mut h1) = (0i64, 1i64);
    let (mut k0, mut k1) = (1i64, 0i64);
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        if a.abs() > 1e12 {
            break;
        }
        let ai = a as i64;
        let h2 = ai.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai.checked_mul(k1)?.checked_add(k0)?;
        if k2 > 1_000_000 {
            break;
        }
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
        if (x - h1 as f64 / k1 as f64).abs() <= tol {
            return Some((h1, k1));
        }
        let frac = r - a;
        if frac.abs() < 1e-15 {
            break;
        }
        r = 1.0 / frac;
    }
    None
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Meshes in `[lo, hi]` that divide every constrained target coordinate,
/// largest first. Interior and whole-hole targets are unconstrained, so the
/// requested endpoints are returned.
pub fn admissible_meshes(target: &Target, start_x: f64, lo: f64, hi: f64) -> Vec<f64> {
    assert!(lo > 0.0 && hi >= lo, "mesh range must be positive");
    let coords: Vec<f64> = target
        .constrained_coordinates(start_x)
        .into_iter()
        .filter(|v| v.abs() > 1e-12)
        .collect();
    if coords.is_empty() {
        return if lo == hi { vec![hi] } else { vec![hi, lo] };
    }
    let Some(fracs) = coords.iter().map(|&v| rational_approx(v)).collect::<Option<Vec<_>>>() else {
        return vec![];
    };
    let lcm = fracs.iter().fold(1i64, |l, &(_, d)| l / gcd(l, d) * d);
    let g_num = fracs.iter().fold(0i64, |g, &(n, d)| gcd(g, n * (lcm / d)));
    let g = g_num as f64 / lcm as f64;
    let mut out = Vec::new();
    let mut k = 1u64;
    loop {
        let m = g / k as f64;
        if m < lo * (1.0 - 1e-12) {
            break;
        }
        if m <= hi * (1.0 + 1e-12) {
            out.push(m);
        }
        k += 1;
    }
    out
}

// ---------------------------------------------------------------------------
// JSON file format

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBox {
    half_width: f64,
    height: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTarget {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x_e: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    interval: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hole_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arc_endpoints: Option<[[f64; 2]; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    holes: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    start_x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    far_radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    far_box: Option<RawBox>,
    target: RawTarget,
    mesh: f64,
}

impl RawFile {
    fn from_setup(s: &Setup) -> Self {
        let holes = s
            .domain
            .holes
            .iter()
            .map(|h| h.vertices().iter().map(|z| [z.re, z.im]).collect())
            .collect();
        let (far_radius, far_box) = match s.domain.truncation {
            Truncation::Disk { radius } => (Some(radius), None),
            Truncation::Box { half_width, height } => (None, Some(RawBox { half_width, height })),
        };
        let mut t = RawTarget {
            kind: s.target.kind_name().to_string(),
            p: None,
            x_e: None,
            interval: None,
            hole_index: None,
            arc_endpoints: None,
        };
        match &s.target {
            Target::InteriorPoint(p) => t.p = Some([p.re, p.im]),
            Target::PrimeEnd(x) => t.x_e = Some(*x),
            Target::SideArc(ArcSpec::Interval { a, b }) => t.interval = Some([*a, *b]),
            Target::SideArc(ArcSpec::Hole { index }) => t.hole_index = Some(*index),
            Target::SideArc(ArcSpec::HoleArc { index, from, to }) => {
                t.hole_index = Some(*index);
                t.arc_endpoints = Some([[from.re, from.im], [to.re, to.im]]);
            }
        }
        RawFile {
            holes,
            start_x: s.domain.start_x,
            far_radius,
            far_box,
            target: t,
            mesh: s.mesh.mesh,
        }
    }

    fn into_setup(self) -> Result<Setup> {
        let holes = self
            .holes
            .into_iter()
            .enumerate()
            .map(|(i, vs)| Hole::validated(vs.into_iter().map(|[x, y]| c(x, y)).collect(), &format!("holes[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        let truncation = match (self.far_radius, self.far_box) {
            (Some(r), None) => Truncation::Disk { radius: r },
            (None, Some(b)) => Truncation::Box {
                half_width: b.half_width,
                height: b.height,
            },
            (Some(_), Some(_)) => {
                return Err(Error::invariant("far_box", "give either far_radius or far_box, not both"))
            }
            (None, None) => return Err(Error::invariant("far_radius", "missing field")),
        };
        let t = self.target;
        let missing = |f: &str| Error::invariant(format!("target.{f}"), format!("missing field for kind {}", t.kind));
        let target = match t.kind.as_str() {
            "InteriorPoint" => {
                let [x, y] = t.p.ok_or_else(|| missing("p"))?;
                Target::InteriorPoint(c(x, y))
            }
            "PrimeEnd" => Target::PrimeEnd(t.x_e.ok_or_else(|| missing("x_e"))?),
            "SideArc" => match (t.interval, t.hole_index, t.arc_endpoints) {
                (Some([a, b]), None, None) => Target::SideArc(ArcSpec::Interval { a, b }),
                (None, Some(index), None) => Target::SideArc(ArcSpec::Hole { index }),
                (None, Some(index), Some([f, g])) => Target::SideArc(ArcSpec::HoleArc {
                    index,
                    from: c(f[0], f[1]),
                    to: c(g[0], g[1]),
                }),
                _ => {
                    return Err(Error::invariant(
                        "target",
                        "SideArc needs either `interval`, or `hole_index` with optional `arc_endpoints`",
                    ))
                }
            },
            other => {
                return Err(Error::invariant(
                    "target.kind",
                    format!("unknown target kind `{other}` (expected InteriorPoint, PrimeEnd or SideArc)"),
                ))
            }
        };
        let domain = Domain {
            holes,
            start_x: self.start_x,
            truncation,
        };
        Setup::new(domain, target, self.mesh)
    }
}

/// Parse and validate a domain file.
pub fn parse_domain(text: &str) -> Result<Setup> {
    let raw: RawFile = serde_json::from_str(text).map_err(|e| Error::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    raw.into_setup()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const SQUARE_HOLE: &str = r#"{
        "holes": [[[-0.5,0.5],[0.5,0.5],[0.5,1.0],[-0.5,1.0]]],
        "far_radius": 10,
        "target": {"kind": "SideArc", "hole_index": 0},
        "mesh": 0.05
    }"#;

    #[test]
    fn minimal_half_plane_config() {
        let s = parse_domain(
            r#"{"holes": [], "far_radius": 10, "target": {"kind": "InteriorPoint", "p": [0, 1]}, "mesh": 0.05}"#,
        )
        .unwrap();
        assert!(s.domain.is_hole_free());
        assert_eq!(s.target, Target::InteriorPoint(c(0.0, 1.0)));
    }

    #[test]
    fn one_hole_side_arc_config() {
        let s = parse_domain(SQUARE_HOLE).unwrap();
        assert_eq!(s.domain.holes.len(), 1);
        assert_eq!(s.target, Target::SideArc(ArcSpec::Hole { index: 0 }));
    }

    #[test]
    fn hole_touching_axis_is_rejected() {
        let err = parse_domain(
            r#"{"holes": [[[-0.5,0],[0.5,0],[0.5,1.0],[-0.5,1.0]]], "far_radius": 10,
                "target": {"kind": "InteriorPoint", "p": [0, 2]}, "mesh": 0.05}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("hole intersects boundary axis"), "{err}");
        assert!(err.is_validation());
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_domain("{\"holes\": [,]}") {
            Err(Error::Syntax { line, column, .. }) => {
                assert_eq!(line, 1);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn clockwise_and_slanted_holes_are_rejected() {
        assert!(Hole::new(vec![c(0.0, 1.0), c(0.0, 2.0), c(1.0, 2.0), c(1.0, 1.0)]).is_err());
        assert!(Hole::new(vec![c(0.0, 1.0), c(1.0, 1.5), c(1.0, 2.0), c(0.0, 2.0)]).is_err());
    }

    #[test]
    fn overlapping_holes_are_rejected() {
        let d = Domain {
            holes: vec![
                Hole::rectangle(0.0, 1.0, 1.0, 2.0).unwrap(),
                Hole::rectangle(0.5, 1.5, 1.5, 2.5).unwrap(),
            ],
            start_x: 0.0,
            truncation: Truncation::Disk { radius: 50.0 },
        };
        assert!(Setup::new(d, Target::InteriorPoint(c(3.0, 1.0)), 0.05).is_err());
    }

    #[test]
    fn far_radius_rule() {
        let d = Domain::half_plane(4.0);
        assert!(Setup::new(d, Target::InteriorPoint(c(0.0, 1.0)), 0.05).is_err());
    }

    #[test]
    fn mesh_must_divide_prime_end() {
        let d = Domain::half_plane(10.0);
        let err = Setup::new(d, Target::PrimeEnd(1.0), 0.3).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn admissible_meshes_prime_end() {
        let m = admissible_meshes(&Target::PrimeEnd(1.0), 0.0, 0.1, 0.5);
        let expect: Vec<f64> = (2..=10).map(|n| 1.0 / n as f64).collect();
        assert_eq!(m.len(), expect.len());
        for (a, b) in m.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn admissible_meshes_unconstrained() {
        let m = admissible_meshes(&Target::InteriorPoint(c(0.0, 1.0)), 0.0, 0.1, 0.2);
        assert_eq!(m, vec![0.2, 0.1]);
    }

    #[test]
    fn admissible_meshes_third() {
        let t = Target::SideArc(ArcSpec::Interval { a: 1.0 / 3.0, b: 1.0 });
        let m = admissible_meshes(&t, 0.0, 0.2, 0.4);
        assert_eq!(m.len(), 1);
        assert!((m[0] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn hole_arc_membership_wraps() {
        let d = Domain {
            holes: vec![Hole::rectangle(-1.0, 1.0, 1.0, 2.0).unwrap()],
            start_x: 0.0,
            truncation: Truncation::Disk { radius: 20.0 },
        };
        // from the middle of the top edge counterclockwise to the middle of the bottom edge
        let arc = ArcSpec::HoleArc {
            index: 0,
            from: c(0.0, 2.0),
            to: c(0.0, 1.0),
        };
        assert!(arc.contains(&d, BoundaryPart::Hole(0), c(-1.0, 1.5)));
        assert!(!arc.contains(&d, BoundaryPart::Hole(0), c(1.0, 1.5)));
    }

    fn arb_setup() -> impl Strategy<Value = Setup> {
        let holes = prop::collection::vec((1u32..4, 1u32..4, 1u32..4), 0..3);
        (holes, -2i32..=2, 0u32..3, 1u32..4).prop_map(|(hs, sx, tk, tsel)| {
            let holes: Vec<Hole> = hs
                .iter()
                .enumerate()
                .map(|(i, &(w, y, h))| {
                    let x0 = -6.0 + 4.0 * i as f64;
                    Hole::rectangle(x0, 0.5 * y as f64, x0 + 0.5 * w as f64, 0.5 * (y + h) as f64).unwrap()
                })
                .collect();
            let start_x = 0.25 * sx as f64;
            let target = match (tk, holes.is_empty()) {
                (0, _) => Target::InteriorPoint(c(5.0, 0.5 * tsel as f64)),
                (1, _) => Target::PrimeEnd(start_x + 0.5 * tsel as f64 + 1.0),
                (_, true) => Target::SideArc(ArcSpec::Interval { a: 1.0, b: 1.0 + 0.25 * tsel as f64 }),
                (_, false) => Target::SideArc(ArcSpec::Hole { index: 0 }),
            };
            let domain = Domain {
                holes,
                start_x,
                truncation: Truncation::Disk { radius: 60.0 },
            };
            Setup::new(domain, target, 0.125).unwrap()
        })
    }

    proptest! {
        #[test]
        fn json_round_trip(s in arb_setup()) {
            let back = parse_domain(&s.to_json()).unwrap();
            prop_assert_eq!(back, s);
        }

        #[test]
        fn admissible_meshes_divide_and_decrease(num in 1i64..40, den in 1i64..12, lo in 0.01f64..0.2) {
            let x = num as f64 / den as f64;
            let t = Target::PrimeEnd(x);
            let m = admissible_meshes(&t, 0.0, lo, 1.0);
            for w in m.windows(2) {
                prop_assert!(w[0] > w[1]);
            }
            for &d in &m {
                prop_assert!(is_admissible(&t, 0.0, d));
            }
        }
    }
}
