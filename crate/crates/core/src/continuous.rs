//! Continuous LERW: the driving SDE `dξ = √2 dB + λ X_t dt` with the drift
//! `X_t = ∂_x∂_y J_t(ξ)/∂_y J_t(ξ)`, where `J_t` is the target's harmonic
//! function (Green function, boundary Poisson kernel or harmonic measure)
//! pulled back through the inverse Loewner map.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::domain::{ArcSpec, Domain, Target};
use crate::error::{Error, Result};
use crate::field::{solve_field, ContinuumField, FieldKind, FieldParams, SlitMask};
use crate::geom::{c, point_segment_distance, C64};
use crate::loewner::{elementary_derivative, elementary_map, DrivingFunction, LoewnerState};

/// `X` for the half-plane Green function with pole `a + ib`.
pub fn drift_closed_form_halfplane(p_image: C64, x: f64) -> Result<f64> {
    let (a, b) = (p_image.re, p_image.im);
    if !(b > 0.0) {
        return Err(Error::invariant("p_image", "pole image must lie above the axis"));
    }
    Ok(-2.0 * (x - a) / ((x - a).powi(2) + b * b))
}

/// Fitted tip expansion `J(ξ + re^{iθ}) ≈ a₁ r sin θ + a₂ r² sin 2θ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TipFit {
    pub r_fit: f64,
    pub m: usize,
    pub a1: f64,
    pub a2: f64,
    /// RMS misfit after removing the first `FIT_MODES` sine modes. The
    /// modes are orthogonal on the samples, so this measures lattice error
    /// rather than truncation of the series.
    pub residual: f64,
}

impl TipFit {
    pub fn drift(&self) -> f64 {
        2.0 * self.a2 / self.a1
    }
}

/// Sine modes used by [`tip_fit`] for its residual.
pub const FIT_MODES: usize = 6;

/// Sine-Fourier projection of `J` on the semicircle of radius `r` about `ξ`,
/// sampled at `m` midpoints and pulled back through `state`.
pub fn tip_fit(
    state: &LoewnerState,
    xi: f64,
    r: f64,
    m: usize,
    j: impl Fn(C64) -> Option<f64>,
) -> Result<TipFit> {
    let mut samples = Vec::with_capacity(m);
    for k in 0..m {
        let th = PI * (k as f64 + 0.5) / m as f64;
        let z = state.unmap_point(c(xi + r * th.cos(), r * th.sin()));
        let v = j(z).ok_or_else(|| Error::Drift(format!("tip sample {z} fell outside the domain")))?;
        samples.push((th, v));
    }
    let w = PI / m as f64;
    let coef: Vec<f64> = (1..=FIT_MODES)
        .map(|n| {
            let n = n as f64;
            2.0 / (PI * r.powf(n)) * samples.iter().map(|(th, v)| v * (n * th).sin()).sum::<f64>() * w
        })
        .collect();
    let (a1, a2) = (coef[0], coef[1]);
    let residual = (samples
        .iter()
        .map(|(th, v)| {
            let model: f64 = coef
                .iter()
                .enumerate()
                .map(|(k, a)| a * r.powi(k as i32 + 1) * ((k + 1) as f64 * th).sin())
                .sum();
            (v - model).powi(2)
        })
        .sum::<f64>()
        / m as f64)
        .sqrt();
    Ok(TipFit {
        r_fit: r,
        m,
        a1,
        a2,
        residual,
    })
}

/// Settings for the lattice-based drift.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericDrift {
    pub mesh: f64,
    /// Semicircle samples.
    pub m: usize,
    /// Steps between field solves.
    pub reuse: usize,
    pub tol: f64,
}

impl NumericDrift {
    pub fn new(mesh: f64) -> Self {
        NumericDrift {
            mesh,
            m: 64,
            reuse: 5,
            tol: 1e-10,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DriftProvider {
    /// Exact half-plane formulas (hole-free domains only; the truncation is ignored).
    ClosedForm,
    Numeric(NumericDrift),
    /// Drift forced to zero; `dyJ` still comes from the closed form.
    Zero,
}

/// Field kind whose pull-back is `J_t` for this target.
pub fn target_field_kind(target: &Target) -> FieldKind {
    match target {
        Target::InteriorPoint(p) => FieldKind::Green { pole: *p },
        Target::PrimeEnd(x) => FieldKind::Poisson { x_e: *x },
        Target::SideArc(arc) => FieldKind::HarmonicMeasure { arc: *arc },
    }
}

/// Images of the target under `φ_t`, updated one slit at a time.
#[derive(Clone, Debug, PartialEq)]
pub enum TargetImage {
    Interior { image: C64 },
    /// Image `y_t` of `x_e` and the derivative `φ_t'(x_e)`.
    PrimeEnd { image: f64, derivative: f64 },
    /// Images of the arc endpoints (axis intervals only; whole holes have none).
    Arc { a: f64, b: f64 },
    HoleArc,
}

impl TargetImage {
    pub fn new(target: &Target) -> Self {
        match target {
            Target::InteriorPoint(p) => TargetImage::Interior { image: *p },
            Target::PrimeEnd(x) => TargetImage::PrimeEnd {
                image: *x,
                derivative: 1.0,
            },
            Target::SideArc(ArcSpec::Interval { a, b }) => TargetImage::Arc { a: *a, b: *b },
            Target::SideArc(_) => TargetImage::HoleArc,
        }
    }

    pub fn advance(&mut self, xi: f64, dt: f64) {
        match self {
            TargetImage::Interior { image } => *image = elementary_map(xi, dt, *image),
            TargetImage::PrimeEnd { image, derivative } => {
                let z = c(*image, 0.0);
                let g = elementary_map(xi, dt, z);
                *derivative *= elementary_derivative(xi, z, g).re;
                *image = g.re;
            }
            TargetImage::Arc { a, b } => {
                *a = elementary_map(xi, dt, c(*a, 0.0)).re;
                *b = elementary_map(xi, dt, c(*b, 0.0)).re;
            }
            TargetImage::HoleArc => {}
        }
    }

    /// `(X, ∂_y J)` at `x` in the hole-free half-plane.
    pub fn closed_form(&self, x: f64) -> Result<(f64, f64)> {
        match *self {
            TargetImage::Interior { image } => {
                let (a, b) = (image.re, image.im);
                let d2 = (x - a).powi(2) + b * b;
                Ok((drift_closed_form_halfplane(image, x)?, b / (PI * d2)))
            }
            TargetImage::PrimeEnd { image, derivative } => {
                let d = x - image;
                if d == 0.0 {
                    return Err(Error::Drift("driving value reached the target prime end".into()));
                }
                Ok((-2.0 / d, derivative / (d * d)))
            }
            TargetImage::Arc { a, b } => {
                if x >= a && x <= b {
                    return Err(Error::Drift("driving value reached the target arc".into()));
                }
                let dy = (1.0 / (x - b) - 1.0 / (x - a)) / PI;
                let dxy = (1.0 / (x - a).powi(2) - 1.0 / (x - b).powi(2)) / PI;
                Ok((dxy / dy, dy))
            }
            TargetImage::HoleArc => Err(Error::Unsupported("closed-form drift needs an axis target".into())),
        }
    }

    /// Generalized Poisson kernel at `w` (mapped coordinates) with pole `ξ`,
    /// normalized as the target kind prescribes.
    pub fn normalized_poisson(&self, xi: f64, w: C64) -> Result<f64> {
        let k = |w: C64| (-1.0 / (w - xi)).im;
        match *self {
            TargetImage::Interior { image } => Ok(k(w) / k(image)),
            TargetImage::PrimeEnd { image, derivative } => Ok(k(w) * (image - xi).powi(2) / derivative),
            TargetImage::Arc { a, b } => Ok(k(w) / (1.0 / (a - xi) - 1.0 / (b - xi))),
            TargetImage::HoleArc => Err(Error::Unsupported("no closed-form kernel for hole targets".into())),
        }
    }
}

/// Distance from `ξ` to the nearest mapped obstacle (holes, target features).
pub fn obstacle_distance(state: &LoewnerState, xi: f64, domain: &Domain, target: &TargetImage, far: f64) -> f64 {
    let x = c(xi, 0.0);
    let mut d = far;
    for hole in &domain.holes {
        for &v in hole.vertices() {
            d = d.min((state.map_unchecked(v) - x).norm());
        }
        // edge midpoints tighten the estimate for long edges
        for (a, b) in hole.edges() {
            d = d.min((state.map_unchecked((a + b) / 2.0) - x).norm());
        }
    }
    match *target {
        TargetImage::Interior { image } => d = d.min((image - x).norm()),
        TargetImage::PrimeEnd { image, .. } => d = d.min((image - xi).abs()),
        TargetImage::Arc { a, b } => d = d.min((a - xi).abs()).min((b - xi).abs()),
        TargetImage::HoleArc => {}
    }
    d
}

/// Fit radius: at least 8 solver cells and 5% of the obstacle distance,
/// widened until the pulled-back apex clears the tip by 8 cells, and
/// capped at 40% of the obstacle distance.
pub fn fit_radius(state: &LoewnerState, xi: f64, tip: C64, mesh: f64, d_obs: f64) -> Result<f64> {
    let cap = 0.4 * d_obs;
    let mut r = (8.0 * mesh).max(0.05 * d_obs);
    if r > cap {
        return Err(Error::Drift(format!(
            "fit radius {r:.3e} exceeds 40% of the obstacle distance {d_obs:.3e}; refine the mesh"
        )));
    }
    if !state.is_empty() {
        while (state.unmap_point(c(xi, r)) - tip).norm() < 8.0 * mesh && r * 1.25 <= cap {
            r *= 1.25;
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DriftEval {
    pub x: f64,
    pub dyj: f64,
    pub fit: Option<TipFit>,
}

/// Drift from a solved field: tip fit, with one refit at half radius when
/// the residual exceeds 10% of `a₁ r`.
pub fn drift_from_field(field: &ContinuumField, state: &LoewnerState, xi: f64, r: f64, m: usize) -> Result<DriftEval> {
    let floor = 8.0 * field.finest_mesh();
    let mut r = r;
    loop {
        let fit = tip_fit(state, xi, r, m, |z| field.eval(z))?;
        if !(fit.a1 > 0.0) {
            return Err(Error::Drift(format!("tip fit gave a1 = {:.3e}", fit.a1)));
        }
        if fit.residual <= 0.1 * fit.a1 * r {
            return Ok(DriftEval {
                x: fit.drift(),
                dyj: fit.a1,
                fit: Some(fit),
            });
        }
        if r / 2.0 < floor {
            return Err(Error::Drift(format!(
                "tip fit misfit {:.3e} exceeds 10% of a1·r = {:.3e}",
                fit.residual,
                0.1 * fit.a1 * r
            )));
        }
        r /= 2.0;
    }
}

/// Solve the target's field on the domain minus the trace.
pub fn solve_target_field(
    domain: &Domain,
    target: &Target,
    trace: &[C64],
    mesh: f64,
    tol: f64,
    focus: &[C64],
) -> Result<ContinuumField> {
    let mut params = FieldParams::new(mesh);
    params.tol = tol;
    let mask = SlitMask::new(if trace.len() >= 2 { trace.to_vec() } else { vec![] });
    solve_field(domain, &mask, target_field_kind(target), &params, focus)
}

/// `(X, ∂_y J)` by the lattice pipeline for a given hull.
pub fn drift_numeric(
    domain: &Domain,
    target: &Target,
    state: &LoewnerState,
    trace: &[C64],
    xi: f64,
    params: &NumericDrift,
) -> Result<DriftEval> {
    let image = image_of(state, target);
    let tip = *trace.last().unwrap_or(&c(xi, 0.0));
    let d_obs = obstacle_distance(state, xi, domain, &image, domain.bbox().width());
    let r = fit_radius(state, xi, tip, params.mesh, d_obs)?;
    let focus = fit_focus(state, xi, r);
    let field = solve_target_field(domain, target, trace, params.mesh, params.tol, &focus)?;
    drift_from_field(&field, state, xi, r, params.m)
}

fn fit_focus(state: &LoewnerState, xi: f64, r: f64) -> Vec<C64> {
    (0..=8)
        .map(|k| {
            let th = PI * k as f64 / 8.0;
            state.unmap_point(c(xi + 2.0 * r * th.cos(), 2.0 * r * th.sin()))
        })
        .collect()
}

/// Target images under a whole chain.
pub fn image_of(state: &LoewnerState, target: &Target) -> TargetImage {
    let mut img = TargetImage::new(target);
    for r in state.records() {
        img.advance(r.xi, r.dt);
    }
    img
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum StopReason {
    /// Tip came within the stop margin of the target.
    ReachedTarget,
    TimeLimit,
}

/// Per-step record of a continuous run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub xi: f64,
    pub u: f64,
    pub x: f64,
    pub dyj: f64,
}

/// One continuous LERW replica.
#[derive(Clone, Debug)]
pub struct ContinuousLerw {
    pub domain: Domain,
    pub target: Target,
    pub provider: DriftProvider,
    pub lambda: f64,
    pub state: LoewnerState,
    pub xi: f64,
    pub t: f64,
    pub u: f64,
    pub image: TargetImage,
    /// `β(t_k)`; starts at `ξ(0)` on the axis.
    pub trace: Vec<C64>,
    pub records: Vec<StepRecord>,
    field: Option<ContinuumField>,
    steps_since_solve: usize,
}

/// Output of [`ContinuousLerw::run`].
#[derive(Clone, Debug)]
pub struct ContinuousRun {
    pub driving: DrivingFunction,
    pub trace: Vec<C64>,
    pub records: Vec<StepRecord>,
    pub stop: StopReason,
    pub state: LoewnerState,
}

impl ContinuousRun {
    /// Trace point at time-change value `u`, by monotone interpolation.
    pub fn trace_at_u(&self, u: f64) -> Option<C64> {
        let us: Vec<f64> = std::iter::once(0.0).chain(self.records.iter().map(|r| r.u)).collect();
        if u < 0.0 || u > *us.last()? {
            return None;
        }
        let k = us.partition_point(|&x| x <= u).clamp(1, us.len() - 1);
        let a = (u - us[k - 1]) / (us[k] - us[k - 1]);
        Some(self.trace[k - 1] * (1.0 - a) + self.trace[k] * a)
    }
}

impl ContinuousLerw {
    pub fn new(domain: &Domain, target: &Target, provider: DriftProvider) -> Result<Self> {
        if !matches!(provider, DriftProvider::Numeric(_)) {
            if !domain.is_hole_free() {
                return Err(Error::Unsupported("closed-form drift requires a hole-free domain".into()));
            }
            if matches!(TargetImage::new(target), TargetImage::HoleArc) {
                return Err(Error::Unsupported("closed-form drift needs an axis or interior target".into()));
            }
        }
        Ok(ContinuousLerw {
            domain: domain.clone(),
            target: target.clone(),
            provider,
            lambda: 2.0,
            state: LoewnerState::new(),
            xi: domain.start_x,
            t: 0.0,
            u: 0.0,
            image: TargetImage::new(target),
            trace: vec![domain.start()],
            records: Vec::new(),
            field: None,
            steps_since_solve: 0,
        })
    }

    pub fn tip(&self) -> C64 {
        *self.trace.last().unwrap()
    }

    /// `(X, ∂_y J)` at the current state.
    pub fn drift(&mut self) -> Result<(f64, f64)> {
        match self.provider {
            DriftProvider::ClosedForm => self.image.closed_form(self.xi),
            DriftProvider::Zero => Ok((0.0, self.image.closed_form(self.xi)?.1)),
            DriftProvider::Numeric(p) => {
                let d_obs = obstacle_distance(&self.state, self.xi, &self.domain, &self.image, self.domain.bbox().width());
                let r = fit_radius(&self.state, self.xi, self.tip(), p.mesh, d_obs)?;
                if self.field.is_none() || self.steps_since_solve >= p.reuse.max(1) {
                    let focus = fit_focus(&self.state, self.xi, r);
                    self.field = Some(solve_target_field(&self.domain, &self.target, &self.trace, p.mesh, p.tol, &focus)?);
                    self.steps_since_solve = 0;
                }
                let field = self.field.as_ref().unwrap();
                let e = drift_from_field(field, &self.state, self.xi, r, p.m)?;
                Ok((e.x, e.dyj))
            }
        }
    }

    /// One Euler–Maruyama step with driving-noise increment `d_a`
    /// (`d_a = √2·dW` for the LERW driver).
    pub fn step_with_increment(&mut self, d_a: f64, dt: f64) -> Result<StepRecord> {
        let (x, dyj) = self.drift()?;
        if !(dyj > 0.0) {
            return Err(Error::Drift(format!("∂_y J = {dyj:.3e} is not positive")));
        }
        let xi_old = self.xi;
        let tip = self.state.unmap_point(c(xi_old, 2.0 * dt.sqrt()));
        self.state.push(xi_old, dt);
        self.image.advance(xi_old, dt);
        self.xi = xi_old + d_a + self.lambda * x * dt;
        self.t += dt;
        self.u += dyj * dyj * dt;
        self.trace.push(tip);
        self.steps_since_solve += 1;
        let rec = StepRecord {
            t: self.t - dt,
            xi: xi_old,
            u: self.u,
            x,
            dyj,
        };
        self.records.push(rec);
        Ok(rec)
    }

    /// Step with a Gaussian increment `dW ~ N(0, dt)`.
    pub fn step(&mut self, dw: f64, dt: f64) -> Result<StepRecord> {
        self.step_with_increment(std::f64::consts::SQRT_2 * dw, dt)
    }

    pub fn distance_to_target(&self, z: C64) -> f64 {
        match &self.target {
            Target::InteriorPoint(p) => (z - p).norm(),
            Target::PrimeEnd(x) => (z - c(*x, 0.0)).norm(),
            Target::SideArc(ArcSpec::Interval { a, b }) => point_segment_distance(z, c(*a, 0.0), c(*b, 0.0)),
            Target::SideArc(ArcSpec::Hole { index }) | Target::SideArc(ArcSpec::HoleArc { index, .. }) => {
                self.domain.holes[*index].boundary_distance(z)
            }
        }
    }

    /// Integrate with fresh Gaussian noise until `t_max` or the stop margin.
    pub fn run<R: Rng + ?Sized>(self, dt: f64, t_max: f64, stop_margin: f64, rng: &mut R) -> Result<ContinuousRun> {
        let n = (t_max / dt).round() as usize;
        let noise: Vec<f64> = (0..n)
            .map(|_| std::f64::consts::SQRT_2 * dt.sqrt() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        self.run_with_noise(dt, &noise, stop_margin)
    }

    /// Integrate against a supplied path of driving-noise increments `dA`.
    pub fn run_with_noise(mut self, dt: f64, increments: &[f64], stop_margin: f64) -> Result<ContinuousRun> {
        if !(dt > 0.0) || !(stop_margin > 0.0) {
            return Err(Error::invariant("dt", "time step and stop margin must be positive"));
        }
        let mut stop = StopReason::TimeLimit;
        for &d_a in increments {
            self.step_with_increment(d_a, dt)?;
            if self.distance_to_target(self.tip()) < stop_margin {
                stop = StopReason::ReachedTarget;
                break;
            }
        }
        let mut t = vec![0.0];
        let mut xi = vec![self.records.first().map_or(self.xi, |r| r.xi)];
        for r in self.records.iter().skip(1) {
            t.push(r.t);
            xi.push(r.xi);
        }
        if !self.records.is_empty() {
            t.push(self.t);
            xi.push(self.xi);
        }
        Ok(ContinuousRun {
            driving: DrivingFunction::new(t, xi)?,
            trace: self.trace,
            records: self.records,
            stop,
            state: self.state,
        })
    }
}

/// `P_X(z)` for a hull by two Green solves: the ratio of tip coefficients
/// of `G(·, z)` and `G(·, p)` (interior targets).
pub fn poisson_ratio_numeric(
    domain: &Domain,
    trace: &[C64],
    state: &LoewnerState,
    xi: f64,
    z: C64,
    p: C64,
    mesh: f64,
) -> Result<f64> {
    let tip = *trace.last().unwrap();
    let img = TargetImage::Interior { image: state.map_unchecked(p) };
    let d_obs = obstacle_distance(state, xi, domain, &img, domain.bbox().width())
        .min((state.map_unchecked(z) - xi).norm());
    let r = fit_radius(state, xi, tip, mesh, d_obs)?;
    let focus = fit_focus(state, xi, r);
    let a1 = |pole: C64| -> Result<f64> {
        let f = solve_target_field(domain, &Target::InteriorPoint(pole), trace, mesh, 1e-10, &focus)?;
        Ok(tip_fit(state, xi, r, 64, |w| f.eval(w))?.a1)
    };
    Ok(a1(z)? / a1(p)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;

    #[test]
    fn closed_form_examples() {
        assert_eq!(drift_closed_form_halfplane(c(0.0, 1.0), 0.0).unwrap(), 0.0);
        assert!((drift_closed_form_halfplane(c(1.0, 1.0), 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((drift_closed_form_halfplane(c(0.0, 1.0), 1.0).unwrap() + 1.0).abs() < 1e-15);
        assert!(drift_closed_form_halfplane(c(0.0, 0.0), 1.0).is_err());
    }

    #[test]
    fn single_step_from_drift() {
        let d = Domain::half_plane(20.0);
        let mut s = ContinuousLerw::new(&d, &Target::InteriorPoint(c(1.0, 1.0)), DriftProvider::ClosedForm).unwrap();
        s.step(0.0, 1e-3).unwrap();
        assert!((s.xi - 0.002).abs() < 1e-15);
        assert!(s.u > 0.0);
    }

    #[test]
    fn symmetric_zero_noise_stays_on_axis() {
        let d = Domain::half_plane(20.0);
        let mut s = ContinuousLerw::new(&d, &Target::InteriorPoint(c(0.0, 1.0)), DriftProvider::ClosedForm).unwrap();
        let mut last_u = 0.0;
        for _ in 0..100 {
            s.step(0.0, 1e-3).unwrap();
            assert_eq!(s.xi, 0.0);
            assert!(s.u > last_u);
            last_u = s.u;
        }
    }

    #[test]
    fn seeded_runs_are_identical() {
        let d = Domain::half_plane(20.0);
        let t = Target::InteriorPoint(c(0.0, 1.0));
        let run = |seed| {
            ContinuousLerw::new(&d, &t, DriftProvider::ClosedForm)
                .unwrap()
                .run(1e-3, 0.1, 0.05, &mut rng_stream(seed, 0))
                .unwrap()
        };
        let (a, b) = (run(7), run(7));
        assert_eq!(a.driving, b.driving);
        assert_eq!(a.trace, b.trace);
        assert_ne!(run(8).driving, a.driving);
    }

    #[test]
    fn tip_fit_recovers_closed_form() {
        // J = Green function of H with pole 1 + i, so dyJ and X are explicit
        let p = c(1.0, 1.0);
        let j = |z: C64| Some(-((z - p) / (z - p.conj())).norm().ln() / (2.0 * PI));
        let fit = tip_fit(&LoewnerState::new(), 0.0, 0.1, 64, j).unwrap();
        let (x, dyj) = TargetImage::Interior { image: p }.closed_form(0.0).unwrap();
        assert!((fit.a1 - dyj).abs() < 1e-3 * dyj);
        assert!((fit.drift() - x).abs() < 1e-2);
        let scaled = tip_fit(&LoewnerState::new(), 0.0, 0.1, 64, |z| j(z).map(|v| 7.0 * v)).unwrap();
        assert!((scaled.drift() - fit.drift()).abs() < 1e-12);
    }

    #[test]
    fn prime_end_and_arc_closed_forms() {
        // prime end: X = 2/(y − x) and P normalised by its normal derivative at x_e
        let img = TargetImage::PrimeEnd {
            image: 1.0,
            derivative: 1.0,
        };
        let (x, dy) = img.closed_form(0.0).unwrap();
        assert!((x - 2.0).abs() < 1e-15 && (dy - 1.0).abs() < 1e-15);
        // arc: matches a finite-difference derivative of the harmonic measure
        let (a, b) = (1.0, 2.0);
        let hm = |z: C64| ((z - b).arg() - (z - a).arg()) / PI;
        let img = TargetImage::Arc { a, b };
        let (x, dy) = img.closed_form(0.0).unwrap();
        let eps = 1e-5;
        let fd_dy = hm(c(0.0, eps)) / eps;
        let fd_dxy = (hm(c(eps, eps)) - hm(c(-eps, eps))) / (2.0 * eps * eps);
        assert!((dy - fd_dy).abs() < 1e-4);
        assert!((x - fd_dxy / fd_dy).abs() < 1e-3);
    }

    #[test]
    fn image_tracking_matches_chain() {
        let mut s = LoewnerState::new();
        let mut img = TargetImage::new(&Target::PrimeEnd(1.0));
        for k in 0..50 {
            let xi = 0.1 * (k as f64 * 0.3).sin();
            s.push(xi, 1e-3);
            img.advance(xi, 1e-3);
        }
        let (w, dw) = s.map_with_derivative(c(1.0, 0.0));
        match img {
            TargetImage::PrimeEnd { image, derivative } => {
                assert!((image - w.re).abs() < 1e-12);
                assert!((derivative - dw.re).abs() < 1e-12);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn trace_reparametrisation_is_monotone() {
        let d = Domain::half_plane(20.0);
        let run = ContinuousLerw::new(&d, &Target::PrimeEnd(1.0), DriftProvider::ClosedForm)
            .unwrap()
            .run(1e-3, 0.05, 0.05, &mut rng_stream(1, 0))
            .unwrap();
        assert!(run.records.windows(2).all(|w| w[1].u > w[0].u));
        let u_end = run.records.last().unwrap().u;
        assert_eq!(run.trace_at_u(0.0), Some(run.trace[0]));
        assert!(run.trace_at_u(u_end).is_some());
        assert!(run.trace_at_u(u_end * 1.01).is_none());
    }
}
