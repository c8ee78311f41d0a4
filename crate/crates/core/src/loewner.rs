//! Chordal Loewner chains built from vertical slit maps.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{c, C64};

/// Square root with the branch fixed for the upper half-plane: the root
/// with nonnegative imaginary part, or for real roots the sign of `side`
/// (zero counts as the right side).
#[inline]
fn half_plane_sqrt(a: C64, side: f64) -> C64 {
    let s = a.sqrt();
    if s.im < 0.0 || (s.im == 0.0 && side < 0.0) {
        -s
    } else {
        s
    }
}

/// `g(z) = ξ + √((z − ξ)² + 4Δt)`: removes the vertical slit of height
/// `2√Δt` at `ξ`; half-plane capacity of the slit is `2Δt`.
#[inline]
pub fn elementary_map(xi: f64, dt: f64, z: C64) -> C64 {
    let d = z - xi;
    xi + half_plane_sqrt(d * d + 4.0 * dt, d.re)
}

#[inline]
pub fn elementary_inverse(xi: f64, dt: f64, w: C64) -> C64 {
    let d = w - xi;
    xi + half_plane_sqrt(d * d - 4.0 * dt, d.re)
}

/// `g'(z) = (z − ξ)/(g(z) − ξ)`.
#[inline]
pub fn elementary_derivative(xi: f64, z: C64, gz: C64) -> C64 {
    (z - xi) / (gz - xi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlitRecord {
    pub xi: f64,
    pub dt: f64,
}

/// Composition `φ_t = g_n ∘ … ∘ g_1` of elementary slit maps, earliest first.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoewnerState {
    records: Vec<SlitRecord>,
    time: f64,
}

impl LoewnerState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, xi: f64, dt: f64) {
        assert!(dt > 0.0 && dt.is_finite(), "slit time increment must be positive");
        self.records.push(SlitRecord { xi, dt });
        self.time += dt;
    }

    pub fn records(&self) -> &[SlitRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Capacity time `t`, so that `hcap(K_t) = 2t`.
    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn hcap(&self) -> f64 {
        2.0 * self.time
    }

    /// Concatenation: `other` acts after `self`.
    pub fn extend(&mut self, other: &LoewnerState) {
        for r in &other.records {
            self.push(r.xi, r.dt);
        }
    }

    /// `φ_t(z)` without hull checks.
    pub fn map_unchecked(&self, z: C64) -> C64 {
        self.records.iter().fold(z, |z, r| elementary_map(r.xi, r.dt, z))
    }

    /// `φ_t(z)`; points swallowed by the hull are reported.
    pub fn map_point(&self, z: C64) -> Result<C64> {
        let w = self.map_unchecked(z);
        if !(w.im >= 0.0) || !w.re.is_finite() || (z.im > 0.0 && w.im <= 0.0 && !self.is_empty()) {
            return Err(Error::Swallowed { re: z.re, im: z.im });
        }
        Ok(w)
    }

    /// `φ_t(z)` and `φ_t'(z)`.
    pub fn map_with_derivative(&self, z: C64) -> (C64, C64) {
        let mut w = z;
        let mut dw = c(1.0, 0.0);
        for r in &self.records {
            let g = elementary_map(r.xi, r.dt, w);
            dw *= elementary_derivative(r.xi, w, g);
            w = g;
        }
        (w, dw)
    }

    /// `φ_t⁻¹(w)`.
    pub fn unmap_point(&self, w: C64) -> C64 {
        self.records.iter().rev().fold(w, |w, r| elementary_inverse(r.xi, r.dt, w))
    }

    /// The quotient map `φ_t ∘ φ_b⁻¹` as its own chain (records after index `b`).
    pub fn tail(&self, b: usize) -> LoewnerState {
        let mut s = LoewnerState::new();
        for r in &self.records[b..] {
            s.push(r.xi, r.dt);
        }
        s
    }
}

/// Samples `ξ(t_k)` on a strictly increasing time grid starting at 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DrivingFunction {
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
}

impl DrivingFunction {
    pub fn new(t: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if t.is_empty() || t.len() != xi.len() {
            return Err(Error::invariant("driving", "time and value grids must be nonempty and equal length"));
        }
        if t[0] != 0.0 {
            return Err(Error::invariant("driving.t", "time grid must start at 0"));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invariant("driving.t", "time grid must be strictly increasing"));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::invariant("driving.xi", "values must be finite"));
        }
        Ok(DrivingFunction { t, xi })
    }

    /// Uniform grid `t_k = k·step` on `[0, t_max]`.
    pub fn sample(f: impl Fn(f64) -> f64, t_max: f64, step: f64) -> Result<Self> {
        let n = (t_max / step).round() as usize;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * step).collect();
        let xi = t.iter().map(|&s| f(s)).collect();
        DrivingFunction::new(t, xi)
    }

    pub fn end_time(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn value_at(&self, s: f64) -> Option<f64> {
        if s < 0.0 || s > self.end_time() {
            return None;
        }
        let k = self.t.partition_point(|&x| x <= s);
        if k >= self.t.len() {
            return self.xi.last().copied();
        }
        let k = k.max(1);
        let (t0, t1) = (self.t[k - 1], self.t[k]);
        let a = (s - t0) / (t1 - t0);
        Some(self.xi[k - 1] * (1.0 - a) + self.xi[k] * a)
    }

    pub fn resample(&self, grid: &[f64]) -> Vec<Option<f64>> {
        grid.iter().map(|&s| self.value_at(s)).collect()
    }

    pub fn range(&self) -> f64 {
        let (lo, hi) = self
            .xi
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        hi - lo
    }
}

/// Trace of the chain driven by `ξ`, constant on each grid step. The trace
/// point at `t_{k+1}` is the tip of the `k`-th slit pulled back to the plane.
pub fn trace_from_driving(driving: &DrivingFunction) -> (Vec<C64>, LoewnerState) {
    let mut state = LoewnerState::new();
    let mut trace = Vec::with_capacity(driving.t.len());
    trace.push(c(driving.xi[0], 0.0));
    for k in 0..driving.t.len() - 1 {
        let dt = driving.t[k + 1] - driving.t[k];
        let xi = driving.xi[k];
        trace.push(state.unmap_point(c(xi, 2.0 * dt.sqrt())));
        state.push(xi, dt);
    }
    (trace, state)
}

const MAX_BISECT: usize = 24;

/// Zipper extraction: each successive curve point is mapped through the
/// current chain and removed with a vertical slit.
pub fn extract_driving(curve: &[C64]) -> Result<(DrivingFunction, LoewnerState)> {
    extract_driving_until(curve, f64::INFINITY)
}

/// As [`extract_driving`], stopping once capacity time reaches `t_max`.
pub fn extract_driving_until(curve: &[C64], t_max: f64) -> Result<(DrivingFunction, LoewnerState)> {
    let first = *curve
        .first()
        .ok_or_else(|| Error::invariant("curve", "curve must be nonempty"))?;
    if first.im.abs() > 1e-12 {
        return Err(Error::invariant("curve[0]", "curve must start on the real axis"));
    }
    let mut state = LoewnerState::new();
    let mut t = vec![0.0];
    let mut xi = vec![first.re];
    let mut prev = first;
    let last = curve.len() - 1;
    for (idx, &z) in curve.iter().enumerate().skip(1) {
        if state.time() >= t_max {
            break;
        }
        // points to consume before `z`: bisection refinements of [prev, z]
        let mut targets = vec![z];
        let mut depth = 0;
        while let Some(&target) = targets.last() {
            let w = state.map_unchecked(target);
            let scale = 1.0 + w.re.abs();
            if w.im > 1e-13 * scale && w.im.is_finite() {
                let dt = w.im * w.im / 4.0;
                state.push(w.re, dt);
                t.push(state.time());
                xi.push(w.re);
                prev = target;
                targets.pop();
                continue;
            }
            if idx == last && target == z && z.im.abs() <= 1e-12 {
                // the curve ends on the real axis
                targets.pop();
                continue;
            }
            depth += 1;
            if depth > MAX_BISECT || (target - prev).norm() < 1e-15 {
                return Err(Error::Collision { index: idx });
            }
            targets.push((prev + target) / 2.0);
        }
    }
    Ok((DrivingFunction::new(t, xi)?, state))
}

/// Piecewise-linear densification with `per_edge` points per segment.
pub fn densify(points: &[C64], per_edge: usize) -> Vec<C64> {
    let mut out = Vec::with_capacity(points.len() * per_edge);
    if let Some(&p) = points.first() {
        out.push(p);
    }
    for w in points.windows(2) {
        for k in 1..=per_edge {
            out.push(w[0] + (w[1] - w[0]) * (k as f64 / per_edge as f64));
        }
    }
    out
}

/// Capacity time estimated from the far field: `t ≈ Re((φ(z) − z)·z)/2` at large `z`.
pub fn far_field_time(state: &LoewnerState, z: C64) -> f64 {
    ((state.map_unchecked(z) - z) * z).re / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn elementary_far_field() {
        for dt in [1e-3, 0.1, 0.5] {
            let z = c(0.0, 100.0);
            let g = elementary_map(0.0, dt, z);
            assert!((g - z - 2.0 * dt / z).norm() < 1e-6);
        }
    }

    #[test]
    fn slit_tip_maps_to_base() {
        for (xi, dt) in [(0.0, 0.25), (1.3, 0.01), (-2.0, 3.0)] {
            let tip = c(xi, 2.0 * f64::sqrt(dt));
            assert!((elementary_map(xi, dt, tip) - c(xi, 0.0)).norm() < 1e-7);
        }
    }

    #[test]
    fn slit_sides_and_tie_break() {
        // both sides of the slit land on opposite sides of ξ; the slit itself goes right
        let (xi, dt) = (0.0, 1.0);
        let left = elementary_map(xi, dt, c(-1e-12, 1.0));
        let right = elementary_map(xi, dt, c(1e-12, 1.0));
        assert!(left.re < 0.0 && right.re > 0.0);
        let on = elementary_map(xi, dt, c(0.0, 1.0));
        assert!((on - right).norm() < 1e-9);
    }

    #[test]
    fn inverse_round_trip() {
        for i in -10..=10 {
            for j in 0..=10 {
                let z = c(i as f64 * 0.3, j as f64 * 0.3 + 0.05);
                let w = elementary_map(0.2, 0.3, z);
                assert!(w.im >= 0.0);
                assert!((elementary_inverse(0.2, 0.3, w) - z).norm() < 1e-12, "{z}");
            }
        }
        // real points map back into the closed half-plane
        let z = elementary_inverse(0.0, 1.0, c(-1.0, 0.0));
        assert!(z.im > 0.0 && z.re.abs() < 1e-15);
    }

    #[test]
    fn empty_state_is_identity_and_single_record_is_elementary() {
        let s = LoewnerState::new();
        let z = c(0.3, 0.7);
        assert_eq!(s.map_point(z).unwrap(), z);
        let mut s = LoewnerState::new();
        s.push(0.1, 0.2);
        assert_eq!(s.map_point(z).unwrap(), elementary_map(0.1, 0.2, z));
    }

    #[test]
    fn composed_far_field() {
        let d = DrivingFunction::sample(|t| (5.0 * t).sin(), 0.5, 1e-3).unwrap();
        let (_, state) = trace_from_driving(&d);
        let z = c(0.0, 100.0);
        let w = state.map_point(z).unwrap();
        assert!((w - z - 2.0 * state.time() / z).norm() <= 1e-3);
        assert!((far_field_time(&state, c(0.0, 1e4)) - state.time()).abs() < 1e-3 * state.time());
    }

    #[test]
    fn constant_driving_gives_vertical_segment() {
        let d = DrivingFunction::sample(|_| 0.0, 0.25, 1e-4).unwrap();
        let (trace, _) = trace_from_driving(&d);
        assert!((trace.last().unwrap() - c(0.0, 1.0)).norm() < 1e-2);
        let d = DrivingFunction::sample(|_| 0.7, 0.25, 1e-3).unwrap();
        let (trace, _) = trace_from_driving(&d);
        assert!(trace.iter().all(|z| (z.re - 0.7).abs() < 1e-12));
    }

    #[test]
    fn mirror_driving_mirrors_trace() {
        let d = DrivingFunction::sample(|t| (3.0 * t).sin(), 0.3, 1e-3).unwrap();
        let m = DrivingFunction::new(d.t.clone(), d.xi.iter().map(|x| -x).collect()).unwrap();
        let (a, _) = trace_from_driving(&d);
        let (b, _) = trace_from_driving(&m);
        for (p, q) in a.iter().zip(&b) {
            assert!((p.conj() * -1.0 - q).norm() < 1e-10);
        }
    }

    #[test]
    fn vertical_segment_extraction() {
        let curve: Vec<C64> = (0..=1000).map(|k| c(0.0, k as f64 / 1000.0)).collect();
        let (d, state) = extract_driving(&curve).unwrap();
        assert!(d.xi.iter().all(|x| x.abs() < 1e-3));
        assert!((state.time() - 0.25).abs() < 0.0025);
    }

    #[test]
    fn semicircle_capacity() {
        for r in [0.5, 1.0] {
            let n = 2000;
            let curve: Vec<C64> = (0..n)
                .map(|k| {
                    let th = std::f64::consts::PI * k as f64 / (n - 1) as f64;
                    c(r * th.cos(), r * th.sin())
                })
                .collect();
            let (_, state) = extract_driving(&curve).unwrap();
            assert!((state.hcap() - r * r).abs() <= 0.01 * r * r, "{}", state.hcap());
        }
    }

    #[test]
    fn driving_interpolation() {
        let d = DrivingFunction::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0, -1.0]).unwrap();
        assert_eq!(d.value_at(0.5), Some(0.5));
        assert_eq!(d.value_at(2.0), Some(0.0));
        assert_eq!(d.value_at(3.0), Some(-1.0));
        assert_eq!(d.value_at(3.5), None);
        assert!(DrivingFunction::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }

    proptest! {
        #[test]
        fn map_unmap_round_trip(xs in prop::collection::vec(-1.0f64..1.0, 1..20), x in -3.0f64..3.0, y in 0.5f64..3.0) {
            let mut s = LoewnerState::new();
            for &xi in &xs {
                s.push(xi * 0.1, 1e-3);
            }
            let z = c(x, y);
            let w = s.map_point(z).unwrap();
            prop_assert!((s.unmap_point(w) - z).norm() < 1e-9);
        }

        #[test]
        fn hcap_is_additive(a in prop::collection::vec(0.001f64..0.01, 1..10), b in prop::collection::vec(0.001f64..0.01, 1..10)) {
            let mut s1 = LoewnerState::new();
            for &dt in &a { s1.push(0.0, dt); }
            let mut s2 = LoewnerState::new();
            for &dt in &b { s2.push(0.1, dt); }
            let mut s = s1.clone();
            s.extend(&s2);
            prop_assert!((s.time() - s1.time() - s2.time()).abs() < 1e-15);
            let ff = far_field_time(&s, c(0.0, 1e4));
            prop_assert!((ff - s.time()).abs() < 1e-3);
        }
    }
}
