//! Small planar geometry kit shared by the grid builder and the field solver.

use num_complex::Complex64;

pub type C64 = Complex64;

pub fn c(x: f64, y: f64) -> C64 {
    C64::new(x, y)
}

#[inline]
pub fn cross(a: C64, b: C64) -> f64 {
    a.re * b.im - a.im * b.re
}

#[inline]
pub fn dot(a: C64, b: C64) -> f64 {
    a.re * b.re + a.im * b.im
}

pub fn point_segment_distance(z: C64, p: C64, q: C64) -> f64 {
    let d = q - p;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - p).norm();
    }
    let t = (dot(z - p, d) / len2).clamp(0.0, 1.0);
    (z - (p + d * t)).norm()
}

/// Parameter `s ∈ [0, 1]` of the first point of segment `a→b` that touches
/// segment `p–q`, if any.
pub fn first_contact(a: C64, b: C64, p: C64, q: C64) -> Option<f64> {
    let d = b - a;
    let e = q - p;
    let dl = d.norm();
    let el = e.norm();
    if dl == 0.0 {
        return None;
    }
    let eps = 1e-10;
    let ap = p - a;
    if el == 0.0 {
        // degenerate obstacle: a single point
        return if point_segment_distance(p, a, b) <= eps * dl {
            Some((dot(ap, d) / (dl * dl)).clamp(0.0, 1.0))
        } else {
            None
        };
    }
    let denom = cross(d, e);
    if denom.abs() > eps * dl * el {
        let s = cross(ap, e) / denom;
        let u = cross(ap, d) / denom;
        let tol = 1e-10;
        if s >= -tol && s <= 1.0 + tol && u >= -tol && u <= 1.0 + tol {
            return Some(s.clamp(0.0, 1.0));
        }
        return None;
    }
    if cross(ap, d).abs() > eps * dl * dl.max(el) {
        return None;
    }
    let sp = dot(ap, d) / (dl * dl);
    let sq = dot(q - a, d) / (dl * dl);
    let (lo, hi) = if sp < sq { (sp, sq) } else { (sq, sp) };
    if hi < -1e-12 || lo > 1.0 + 1e-12 {
        None
    } else {
        Some(lo.max(0.0))
    }
}

/// Minimum distance between two closed segments.
pub fn segment_distance(a: C64, b: C64, p: C64, q: C64) -> f64 {
    if first_contact(a, b, p, q).is_some() {
        return 0.0;
    }
    point_segment_distance(a, p, q)
        .min(point_segment_distance(b, p, q))
        .min(point_segment_distance(p, a, b))
        .min(point_segment_distance(q, a, b))
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn point(z: C64) -> Self {
        Rect {
            x0: z.re,
            y0: z.im,
            x1: z.re,
            y1: z.im,
        }
    }

    pub fn from_points<I: IntoIterator<Item = C64>>(pts: I) -> Option<Self> {
        let mut it = pts.into_iter();
        let first = it.next()?;
        Some(it.fold(Rect::point(first), |r, z| r.include(z)))
    }

    pub fn include(self, z: C64) -> Self {
        Rect {
            x0: self.x0.min(z.re),
            y0: self.y0.min(z.im),
            x1: self.x1.max(z.re),
            y1: self.y1.max(z.im),
        }
    }

    pub fn union(self, o: Rect) -> Self {
        Rect {
            x0: self.x0.min(o.x0),
            y0: self.y0.min(o.y0),
            x1: self.x1.max(o.x1),
            y1: self.y1.max(o.y1),
        }
    }

    pub fn expand(self, m: f64) -> Self {
        Rect {
            x0: self.x0 - m,
            y0: self.y0 - m,
            x1: self.x1 + m,
            y1: self.y1 + m,
        }
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }
}
