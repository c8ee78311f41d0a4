//! Continuum harmonic fields (Green function, boundary Poisson kernel,
//! harmonic measure) on a physical domain minus a slit, approximated on
//! nested lattices: a fine lattice around the features of interest, and
//! successively coarser, larger lattices out to the far truncation. Each
//! level takes its outer-ring values from the level above it.
//!
//! A field is stored as `S + u` with an explicit singular part `S` and a
//! lattice-harmonic correction `u`.

use std::f64::consts::PI;

use crate::domain::{ArcSpec, BoundaryPart, Domain, Truncation};
use crate::error::{Error, Result};
use crate::geom::{c, point_segment_distance, Rect, C64};
use crate::linalg::{conjugate_gradient, Csr};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldKind {
    /// `G(·, p)`, singular part `−ln|z − p|/(2π)`.
    Green { pole: C64 },
    /// Poisson kernel with pole `x_e` on the axis, principal part `Im(−1/(z − x_e))`.
    Poisson { x_e: f64 },
    /// Harmonic measure of a boundary arc.
    HarmonicMeasure { arc: ArcSpec },
}

impl FieldKind {
    pub fn singular(&self, z: C64) -> f64 {
        match *self {
            FieldKind::Green { pole } => -(z - pole).norm().ln() / (2.0 * PI),
            FieldKind::Poisson { x_e } => {
                if z.im <= 0.0 {
                    0.0
                } else {
                    z.im / ((z.re - x_e).powi(2) + z.im * z.im)
                }
            }
            FieldKind::HarmonicMeasure { .. } => 0.0,
        }
    }

    /// Boundary value of the full field at boundary point `z` (`part = None` for the slit).
    fn boundary_value(&self, domain: &Domain, part: Option<BoundaryPart>, z: C64) -> f64 {
        match (*self, part) {
            (FieldKind::HarmonicMeasure { arc }, Some(part)) => match (arc, part) {
                (ArcSpec::Interval { a, b }, BoundaryPart::Axis) => {
                    let tol = 1e-9 * (1.0 + a.abs().max(b.abs()));
                    if (z.re - a).abs() <= tol || (z.re - b).abs() <= tol {
                        0.5
                    } else if z.re > a && z.re < b {
                        1.0
                    } else {
                        0.0
                    }
                }
                _ => {
                    if arc.contains(domain, part, z) {
                        1.0
                    } else {
                        0.0
                    }
                }
            },
            _ => 0.0,
        }
    }

    /// Dirichlet data for `u` at a boundary point.
    fn u_data(&self, domain: &Domain, part: Option<BoundaryPart>, z: C64) -> f64 {
        match (*self, part) {
            (FieldKind::Poisson { .. }, Some(BoundaryPart::Axis)) => 0.0,
            _ => self.boundary_value(domain, part, z) - self.singular(z),
        }
    }

    fn anchor_points(&self) -> Vec<C64> {
        match *self {
            FieldKind::Green { pole } => vec![pole],
            FieldKind::Poisson { x_e } => vec![c(x_e, 0.0)],
            FieldKind::HarmonicMeasure { arc } => match arc {
                ArcSpec::Interval { a, b } => vec![c(a, 0.0), c(b, 0.0)],
                ArcSpec::HoleArc { from, to, .. } => vec![from, to],
                ArcSpec::Hole { .. } => vec![],
            },
        }
    }
}

/// The current curve, removed from the domain as a zero-data slit.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SlitMask {
    pub polyline: Vec<C64>,
}

impl SlitMask {
    pub fn new(polyline: Vec<C64>) -> Self {
        SlitMask { polyline }
    }

    pub fn is_empty(&self) -> bool {
        self.polyline.len() < 2
    }

    pub fn distance(&self, z: C64) -> f64 {
        match self.polyline.len() {
            0 => f64::INFINITY,
            1 => (z - self.polyline[0]).norm(),
            _ => self
                .polyline
                .windows(2)
                .map(|w| point_segment_distance(z, w[0], w[1]))
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn bbox(&self) -> Option<Rect> {
        Rect::from_points(self.polyline.iter().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldParams {
    /// Finest lattice spacing.
    pub mesh: f64,
    pub tol: f64,
    /// Fine-box margin as a fraction of the feature size.
    pub margin: f64,
    pub max_iter: usize,
}

impl FieldParams {
    pub fn new(mesh: f64) -> Self {
        FieldParams {
            mesh,
            tol: 1e-10,
            margin: 0.5,
            max_iter: 500_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Free,
    Frozen,
    Ring,
    Outside,
}

#[derive(Clone, Debug)]
struct Level {
    h: f64,
    i_lo: i64,
    i_hi: i64,
    j_hi: i64,
    u: Vec<f64>,
}

impl Level {
    fn nx(&self) -> usize {
        (self.i_hi - self.i_lo + 1) as usize
    }

    fn idx(&self, i: i64, j: i64) -> usize {
        (i - self.i_lo) as usize + self.nx() * j as usize
    }

    fn covers(&self, origin: C64, z: C64, ring: f64) -> bool {
        let x = (z.re - origin.re) / self.h;
        let y = z.im / self.h;
        x >= self.i_lo as f64 + ring && x <= self.i_hi as f64 - ring && y >= 0.0 && y <= self.j_hi as f64 - ring
    }

    fn interp(&self, origin: C64, z: C64) -> f64 {
        let x = ((z.re - origin.re) / self.h).clamp(self.i_lo as f64, self.i_hi as f64);
        let y = (z.im / self.h).clamp(0.0, self.j_hi as f64);
        let i = (x.floor() as i64).min(self.i_hi - 1).max(self.i_lo);
        let j = (y.floor() as i64).min(self.j_hi - 1).max(0);
        let (fx, fy) = (x - i as f64, y - j as f64);
        let u00 = self.u[self.idx(i, j)];
        let u10 = self.u[self.idx(i + 1, j)];
        let u01 = self.u[self.idx(i, j + 1)];
        let u11 = self.u[self.idx(i + 1, j + 1)];
        u00 * (1.0 - fx) * (1.0 - fy) + u10 * fx * (1.0 - fy) + u01 * (1.0 - fx) * fy + u11 * fx * fy
    }
}

/// A solved continuum field.
#[derive(Clone, Debug)]
pub struct ContinuumField {
    pub kind: FieldKind,
    pub origin: C64,
    /// Finest level first.
    levels: Vec<Level>,
    domain: Domain,
    pub residual: f64,
    pub iterations: usize,
    pub tolerance: f64,
    pub nodes: usize,
    /// Multiplier applied on evaluation.
    pub scale: f64,
}

impl ContinuumField {
    /// Field value `S(z) + u(z)` (times `scale`); `None` outside the domain.
    pub fn eval(&self, z: C64) -> Option<f64> {
        if !self.domain.contains(z) {
            return None;
        }
        Some(self.scale * (self.kind.singular(z) + self.eval_u(z)))
    }

    pub fn eval_u(&self, z: C64) -> f64 {
        let lvl = self
            .levels
            .iter()
            .find(|l| l.covers(self.origin, z, 1.0))
            .unwrap_or_else(|| self.levels.last().unwrap());
        lvl.interp(self.origin, z)
    }

    pub fn finest_mesh(&self) -> f64 {
        self.levels[0].h
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// The same field multiplied by `c`.
    pub fn scaled(mut self, c: f64) -> Self {
        self.scale *= c;
        self
    }

    /// `(x, y, value)` rows at the nodes of the finest level inside the domain.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,value\n");
        let l = &self.levels[0];
        for j in 1..=l.j_hi {
            for i in l.i_lo..=l.i_hi {
                let z = self.origin + c(i as f64 * l.h, j as f64 * l.h);
                if let Some(v) = self.eval(z) {
                    s.push_str(&format!("{},{},{}\n", z.re, z.im, v));
                }
            }
        }
        s
    }
}

/// Solve `kind` on `domain` minus `mask`; `focus` lists extra points that
/// must lie in the finest lattice.
pub fn solve_field(
    domain: &Domain,
    mask: &SlitMask,
    kind: FieldKind,
    params: &FieldParams,
    focus: &[C64],
) -> Result<ContinuumField> {
    let h0 = params.mesh;
    if !(h0 > 0.0) || !(params.tol > 0.0) {
        return Err(Error::invariant("field", "mesh and tolerance must be positive"));
    }
    if let FieldKind::Green { pole } = kind {
        if !domain.contains(pole) || mask.distance(pole) < h0 {
            return Err(Error::invariant("pole", "pole lies in a hole, outside the domain or on the slit"));
        }
    }
    if let FieldKind::Poisson { x_e } = kind {
        if mask.distance(c(x_e, 0.0)) < h0 {
            return Err(Error::invariant("x_e", "Poisson pole lies under the slit"));
        }
    }
    let origin = domain.start();

    // feature box
    let mut pts: Vec<C64> = vec![origin];
    pts.extend(kind.anchor_points());
    pts.extend_from_slice(focus);
    pts.extend(mask.polyline.iter().copied());
    let mut feat = Rect::from_points(pts).unwrap();
    for hole in &domain.holes {
        feat = feat.union(hole.bbox());
    }
    let size = feat.width().max(feat.height()).max(8.0 * h0);
    let fine = feat.expand(params.margin * size);
    let dom = domain.bbox();

    // index boxes per level
    let to_idx = |x: f64, h: f64| (x - origin.re) / h;
    let mut boxes: Vec<(i64, i64, i64)> = Vec::new();
    let even_down = |v: i64| v - v.rem_euclid(2);
    let even_up = |v: i64| v + (2 - v.rem_euclid(2)) % 2;
    let mut h = h0;
    let mut lo = even_down(to_idx(fine.x0, h).floor() as i64);
    let mut hi = even_up(to_idx(fine.x1, h).ceil() as i64);
    let mut top = even_up((fine.y1 / h).ceil() as i64);
    loop {
        let d_lo = to_idx(dom.x0, h).floor() as i64 - 1;
        let d_hi = to_idx(dom.x1, h).ceil() as i64 + 1;
        let d_top = (dom.y1 / h).ceil() as i64 + 1;
        if lo <= d_lo && hi >= d_hi && top >= d_top {
            boxes.push((d_lo, d_hi, d_top));
            break;
        }
        boxes.push((lo, hi, top));
        // next level in its own index units: double the physical size
        h *= 2.0;
        let (l2, h2, t2) = (lo / 2, hi / 2, top / 2);
        let w = (h2 - l2) / 2 + 1;
        lo = even_down(l2 - w);
        hi = even_up(h2 + w);
        top = even_up(2 * t2 + 1);
        if boxes.len() > 40 {
            return Err(Error::Grid("nested lattice did not reach the truncation".into()));
        }
    }

    let mut levels: Vec<Level> = Vec::with_capacity(boxes.len());
    let mut residual: f64 = 0.0;
    let mut iterations = 0;
    let mut nodes = 0;
    let n_levels = boxes.len();
    // coarsest first
    for (li, &(i_lo, i_hi, j_hi)) in boxes.iter().enumerate().rev() {
        let h = h0 * f64::powi(2.0, li as i32);
        let coarsest = li + 1 == n_levels;
        let coarser = levels.last();
        let mut lvl = Level {
            h,
            i_lo,
            i_hi,
            j_hi,
            u: Vec::new(),
        };
        let nx = lvl.nx();
        let n = nx * (j_hi as usize + 1);
        let mut status = vec![Status::Free; n];
        let mut u = vec![0.0; n];
        let pos = |i: i64, j: i64| origin + c(i as f64 * h, j as f64 * h);

        // slit freezing
        let mut frozen = vec![false; n];
        for w in mask.polyline.windows(2) {
            let r = Rect::point(w[0]).include(w[1]).expand(h / 2.0);
            let (a0, a1) = ((to_idx(r.x0, h)).floor() as i64, (to_idx(r.x1, h)).ceil() as i64);
            let (b0, b1) = ((r.y0 / h).floor() as i64, (r.y1 / h).ceil() as i64);
            for i in a0.max(i_lo)..=a1.min(i_hi) {
                for j in b0.max(1)..=b1.min(j_hi) {
                    if point_segment_distance(pos(i, j), w[0], w[1]) < h / 2.0 {
                        frozen[lvl.idx(i, j)] = true;
                    }
                }
            }
        }

        for j in 0..=j_hi {
            for i in i_lo..=i_hi {
                let k = lvl.idx(i, j);
                let z = pos(i, j);
                let on_ring = i == i_lo || i == i_hi || j == j_hi;
                status[k] = if j == 0 {
                    u[k] = kind.u_data(domain, Some(BoundaryPart::Axis), c(z.re, 0.0));
                    Status::Outside
                } else if !domain.contains(z) {
                    let (part, zb) = nearest_boundary(domain, z);
                    u[k] = kind.boundary_value(domain, Some(part), zb) - kind.singular(z);
                    Status::Outside
                } else if frozen[k] {
                    u[k] = kind.boundary_value(domain, None, z) - kind.singular(z);
                    Status::Frozen
                } else if on_ring && !coarsest {
                    u[k] = coarser.map(|l| l.interp(origin, z)).unwrap_or(0.0);
                    Status::Ring
                } else {
                    u[k] = coarser.map(|l| l.interp(origin, z)).unwrap_or(0.0);
                    Status::Free
                };
            }
        }

        // assemble
        let mut index = vec![usize::MAX; n];
        let mut free = Vec::new();
        for k in 0..n {
            if status[k] == Status::Free {
                index[k] = free.len();
                free.push(k);
            }
        }
        let mut a = Csr::with_capacity(free.len(), 5 * free.len());
        let mut b = vec![0.0; free.len()];
        for (row, &k) in free.iter().enumerate() {
            let i = i_lo + (k % nx) as i64;
            let j = (k / nx) as i64;
            let z = pos(i, j);
            let mut entries = Vec::with_capacity(5);
            entries.push((row, 4.0));
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (ni, nj) = (i + di, j + dj);
                let zn = pos(ni, nj);
                if let Some((s, part)) = domain.first_boundary_hit(z, zn) {
                    let zc = z + (zn - z) * s;
                    let zc = if part == BoundaryPart::Axis { c(zc.re, 0.0) } else { zc };
                    b[row] += kind.u_data(domain, Some(part), zc);
                    continue;
                }
                if ni < i_lo || ni > i_hi || nj > j_hi || nj < 0 {
                    return Err(Error::Grid("free lattice node next to the level edge".into()));
                }
                let kn = lvl.idx(ni, nj);
                if status[kn] == Status::Free {
                    entries.push((index[kn], -1.0));
                } else {
                    b[row] += u[kn];
                }
            }
            a.push_row(entries);
        }
        let mut x: Vec<f64> = free.iter().map(|&k| u[k]).collect();
        let rep = conjugate_gradient(&a, &b, &mut x, params.tol, params.max_iter)?;
        for (row, &k) in free.iter().enumerate() {
            u[k] = x[row];
        }
        residual = residual.max(rep.residual);
        iterations += rep.iterations;
        nodes += n;
        lvl.u = u;
        levels.push(lvl);
    }
    levels.reverse();
    Ok(ContinuumField {
        kind,
        origin,
        levels,
        domain: domain.clone(),
        residual,
        iterations,
        tolerance: params.tol,
        nodes,
        scale: 1.0,
    })
}

/// Nearest boundary point (and its part) for a point outside the open domain.
fn nearest_boundary(domain: &Domain, z: C64) -> (BoundaryPart, C64) {
    let mut best = (BoundaryPart::Axis, c(z.re, 0.0), z.im.abs());
    for (k, hole) in domain.holes.iter().enumerate() {
        let p = hole.nearest_boundary_point(z);
        let d = (p - z).norm();
        if d < best.2 {
            best = (BoundaryPart::Hole(k), p, d);
        }
    }
    let far = match domain.truncation {
        Truncation::Disk { radius } => {
            if z.norm() > 0.0 {
                z * (radius / z.norm())
            } else {
                c(radius, 0.0)
            }
        }
        Truncation::Box { half_width, height } => {
            let cands = [
                c(-half_width, z.im.clamp(0.0, height)),
                c(half_width, z.im.clamp(0.0, height)),
                c(z.re.clamp(-half_width, half_width), height),
            ];
            *cands
                .iter()
                .min_by(|a, b| (*a - z).norm().total_cmp(&(*b - z).norm()))
                .unwrap()
        }
    };
    let d = (far - z).norm();
    if d < best.2 {
        best = (BoundaryPart::Far, far, d);
    }
    (best.0, best.1)
}

pub fn green_function(
    domain: &Domain,
    mask: &SlitMask,
    pole: C64,
    params: &FieldParams,
    focus: &[C64],
) -> Result<ContinuumField> {
    solve_field(domain, mask, FieldKind::Green { pole }, params, focus)
}

pub fn harmonic_measure(
    domain: &Domain,
    mask: &SlitMask,
    arc: ArcSpec,
    params: &FieldParams,
    focus: &[C64],
) -> Result<ContinuumField> {
    solve_field(domain, mask, FieldKind::HarmonicMeasure { arc }, params, focus)
}

pub fn boundary_poisson_field(
    domain: &Domain,
    mask: &SlitMask,
    x_e: f64,
    params: &FieldParams,
    focus: &[C64],
) -> Result<ContinuumField> {
    solve_field(domain, mask, FieldKind::Poisson { x_e }, params, focus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Hole;

    fn green_closed(p: C64, z: C64) -> f64 {
        -((z - p) / (z - p.conj())).norm().ln() / (2.0 * PI)
    }

    #[test]
    fn half_plane_green_matches_closed_form() {
        let d = Domain::half_plane(20.0);
        let g = green_function(&d, &SlitMask::default(), c(0.0, 1.0), &FieldParams::new(1.0 / 32.0), &[]).unwrap();
        assert!(g.residual <= 1e-10);
        let z = c(0.0, 2.0);
        let exact = green_closed(c(0.0, 1.0), z);
        let v = g.eval(z).unwrap();
        assert!((v - exact).abs() < 0.03 * exact, "{v} vs {exact}");
        // mirror symmetry
        let a = g.eval(c(0.7, 1.3)).unwrap();
        let b = g.eval(c(-0.7, 1.3)).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn harmonic_measure_of_centred_interval() {
        let d = Domain::half_plane(20.0);
        let hm = harmonic_measure(
            &d,
            &SlitMask::default(),
            ArcSpec::Interval { a: -1.0, b: 1.0 },
            &FieldParams::new(1.0 / 32.0),
            &[],
        )
        .unwrap();
        let v = hm.eval(c(0.0, 1.0)).unwrap();
        assert!((v - 0.5).abs() < 0.01, "{v}");
    }

    #[test]
    fn poisson_kernel_half_plane() {
        let d = Domain::half_plane(20.0);
        let p = boundary_poisson_field(&d, &SlitMask::default(), 1.0, &FieldParams::new(1.0 / 32.0), &[]).unwrap();
        for z in [c(0.0, 1.0), c(1.0, 0.5), c(2.0, 2.0)] {
            let exact = z.im / ((z.re - 1.0).powi(2) + z.im * z.im);
            // zero data on the far circle costs about y/R²
            let bias = z.im / 400.0;
            assert!((p.eval(z).unwrap() - exact).abs() < 0.005 + 2.0 * bias);
        }
    }

    #[test]
    fn hole_boundary_values() {
        let d = Domain {
            holes: vec![Hole::rectangle(-0.5, 0.5, 0.5, 1.0).unwrap()],
            start_x: 0.0,
            truncation: Truncation::Disk { radius: 10.0 },
        };
        let hm = harmonic_measure(
            &d,
            &SlitMask::default(),
            ArcSpec::Hole { index: 0 },
            &FieldParams::new(1.0 / 16.0),
            &[],
        )
        .unwrap();
        let near = hm.eval(c(0.0, 1.0 + 1.0 / 64.0)).unwrap();
        assert!(near > 0.9, "{near}");
        let far = hm.eval(c(5.0, 5.0)).unwrap();
        assert!(far > 0.0 && far < 0.2);
    }

    #[test]
    fn slit_kills_field() {
        let d = Domain::half_plane(20.0);
        let mask = SlitMask::new(vec![c(0.0, 0.0), c(0.0, 0.5)]);
        let g = green_function(&d, &mask, c(0.0, 1.5), &FieldParams::new(1.0 / 32.0), &[]).unwrap();
        let v = g.eval(c(1.0 / 64.0, 0.25)).unwrap();
        assert!(v.abs() < 0.02, "{v}");
        // G for the slit domain is smaller than in the plain half-plane
        let z = c(0.5, 0.5);
        assert!(g.eval(z).unwrap() < green_closed(c(0.0, 1.5), z));
    }
}
