//! Verification harness: driving extraction of discrete paths, drift
//! subtraction, martingale and moment checks, quasi-loops, curve distances
//! and Kolmogorov–Smirnov comparisons.
//!
//! Every Monte Carlo estimate carries a standard error, and every threshold
//! is an engineering choice (the underlying theorems give no rates).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::continuous::{drift_numeric, ContinuousLerw, DriftProvider, TargetImage};
use crate::domain::{Domain, Target};
use crate::error::{Error, Result};
use crate::geom::{c, C64};
use crate::grid::GridGraph;
use crate::harmonic::{GreenCache, ObservableKind, SolveOptions};
use crate::linalg::{conjugate_gradient, Csr};
use crate::loewner::{densify, extract_driving_until, DrivingFunction, LoewnerState};
use crate::rng::rng_stream;
use crate::walk::{LerwSample, LerwSampler};

/// Lattice points per edge when a discrete path is turned into a polyline.
pub const DENSIFY: usize = 4;

/// Mean and standard error of the mean.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::INFINITY);
    }
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

pub fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

// ---------------------------------------------------------------- driving

/// Driving function of a lattice path `q(−1), q(0), …` (first point on the axis).
pub fn discrete_driving(points: &[C64]) -> Result<(DrivingFunction, LoewnerState)> {
    discrete_driving_until(points, f64::INFINITY)
}

pub fn discrete_driving_until(points: &[C64], t_max: f64) -> Result<(DrivingFunction, LoewnerState)> {
    extract_driving_until(&densify(points, DENSIFY), t_max)
}

/// Physical tips of the successive slits of a chain: the curve it encodes.
pub fn hull_tips(state: &LoewnerState, start: f64) -> Vec<C64> {
    let mut partial = LoewnerState::new();
    let mut out = vec![c(start, 0.0)];
    for r in state.records() {
        out.push(partial.unmap_point(c(r.xi, 2.0 * r.dt.sqrt())));
        partial.push(r.xi, r.dt);
    }
    out
}

/// `η = ξ − 2∫X ds` on the driving grid, with the drift evaluated at the
/// left end of every step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftSubtracted {
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta: Vec<f64>,
    pub drift: Vec<f64>,
}

/// Subtract the drift along an extracted chain. With a numeric provider the
/// field is re-solved every `reuse` records.
pub fn subtract_drift(
    driving: &DrivingFunction,
    state: &LoewnerState,
    domain: &Domain,
    target: &Target,
    provider: DriftProvider,
) -> Result<DriftSubtracted> {
    let recs = state.records();
    let n = recs.len().min(driving.t.len() - 1);
    let mut eta = vec![driving.xi[0]];
    let mut drift = Vec::with_capacity(n);
    let mut image = TargetImage::new(target);
    let mut partial = LoewnerState::new();
    let mut trace = vec![c(driving.xi[0], 0.0)];
    let mut integral = 0.0;
    let mut cached = 0.0;
    for k in 0..n {
        let x_k = driving.xi[k];
        let dt = driving.t[k + 1] - driving.t[k];
        let x = match provider {
            DriftProvider::ClosedForm => image.closed_form(x_k)?.0,
            DriftProvider::Zero => 0.0,
            DriftProvider::Numeric(p) => {
                if k % p.reuse.max(1) == 0 {
                    cached = drift_numeric(domain, target, &partial, &trace, x_k, &p)?.x;
                }
                cached
            }
        };
        drift.push(x);
        integral += 2.0 * x * dt;
        eta.push(driving.xi[k + 1] - integral);
        let r = recs[k];
        image.advance(r.xi, r.dt);
        if matches!(provider, DriftProvider::Numeric(_)) {
            trace.push(partial.unmap_point(c(r.xi, 2.0 * r.dt.sqrt())));
        }
        partial.push(r.xi, r.dt);
    }
    Ok(DriftSubtracted {
        t: driving.t[..=n].to_vec(),
        xi: driving.xi[..=n].to_vec(),
        eta,
        drift,
    })
}

/// Block stopping indices: cut at the first index where the elapsed time
/// reaches `d²` or the driving excursion reaches `d`. The first entry is 0;
/// the last entry closes the last complete block.
pub fn block_indices(t: &[f64], xi: &[f64], d: f64) -> Vec<usize> {
    let mut cuts = vec![0];
    let mut j = 0;
    for n in 1..t.len() {
        if t[n] - t[j] >= d * d || (xi[n] - xi[j]).abs() >= d {
            cuts.push(n);
            j = n;
        }
    }
    cuts
}

// ---------------------------------------------------------------- moments

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentReport {
    pub d: f64,
    pub mesh: f64,
    pub samples: usize,
    pub blocks: usize,
    /// `E[Δη]` over blocks.
    pub mean_deta: f64,
    pub se_deta: f64,
    /// `E[(Δξ)² − 2Δv]` over blocks.
    pub mean_quad: f64,
    pub se_quad: f64,
    /// `E[2Δv]`, the normalizer of the relative quadratic criterion.
    pub mean_2dv: f64,
    pub k_se: f64,
    pub first_moment_pass: bool,
    pub second_moment_pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentConfig {
    pub d: f64,
    pub n: usize,
    pub seed: u64,
    /// Blocks must start before this capacity time.
    pub t_cut: f64,
    /// Blocks must start with the target image at least this far from `ξ`.
    pub clearance: f64,
    /// Allowed relative bias of the quadratic moment.
    pub quad_bias: f64,
}

impl MomentConfig {
    pub fn new(d: f64, n: usize, seed: u64) -> Self {
        MomentConfig {
            d,
            n,
            seed,
            t_cut: 0.1,
            clearance: 2.0 * d,
            quad_bias: 0.1,
        }
    }
}

/// Block increments of `η` and of `(Δξ)² − 2Δv` for LERW samples (hole-free
/// domains, closed-form drift).
pub fn moment_check(sampler: &LerwSampler, domain: &Domain, target: &Target, cfg: &MomentConfig) -> Result<MomentReport> {
    if cfg.n == 0 {
        return Err(Error::NoSamples);
    }
    let d = cfg.d;
    let mut deta = Vec::new();
    let mut quad = Vec::new();
    let mut two_dv = Vec::new();
    for rep in 0..cfg.n {
        let mut rng = rng_stream(cfg.seed, rep as u64);
        let s = sampler.sample(&mut rng)?;
        let (drv, state) = discrete_driving_until(&s.points, cfg.t_cut + 2.0 * d * d)?;
        let sub = subtract_drift(&drv, &state, domain, target, DriftProvider::ClosedForm)?;
        let cuts = block_indices(&sub.t, &sub.xi, d);
        let mut image = TargetImage::new(target);
        let mut advanced = 0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if sub.t[a] >= cfg.t_cut {
                break;
            }
            for r in &state.records()[advanced..a] {
                image.advance(r.xi, r.dt);
            }
            advanced = a;
            if target_gap(&image, sub.xi[a]) < cfg.clearance {
                break;
            }
            let dxi = sub.xi[b] - sub.xi[a];
            let dv = sub.t[b] - sub.t[a];
            deta.push(sub.eta[b] - sub.eta[a]);
            quad.push(dxi * dxi - 2.0 * dv);
            two_dv.push(2.0 * dv);
        }
    }
    if deta.is_empty() {
        return Err(Error::NoSamples);
    }
    let (mean_deta, se_deta) = mean_se(&deta);
    let (mean_quad, se_quad) = mean_se(&quad);
    let (mean_2dv, _) = mean_se(&two_dv);
    let k = 3.0;
    Ok(MomentReport {
        d,
        mesh: sampler.grid.mesh,
        samples: cfg.n,
        blocks: deta.len(),
        mean_deta,
        se_deta,
        mean_quad,
        se_quad,
        mean_2dv,
        k_se: k,
        first_moment_pass: mean_deta.abs() <= k * se_deta,
        second_moment_pass: mean_quad.abs() / mean_2dv <= cfg.quad_bias + k * se_quad / mean_2dv,
    })
}

fn target_gap(image: &TargetImage, xi: f64) -> f64 {
    match *image {
        TargetImage::Interior { image } => (image - xi).norm(),
        TargetImage::PrimeEnd { image, .. } => (image - xi).abs(),
        TargetImage::Arc { a, b } => (a - xi).abs().min((b - xi).abs()),
        TargetImage::HoleArc => f64::INFINITY,
    }
}

// ---------------------------------------------------------------- martingales

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeStat {
    pub probe: [f64; 2],
    /// Starting value of the observable at the probe.
    pub initial: f64,
    /// Mean block increment (discrete) or `Ê[P_t] − P_0` (continuous).
    pub mean_increment: f64,
    pub se: f64,
    pub z: f64,
    pub count: usize,
    /// Blocks skipped because the path had already stopped.
    pub stopped: usize,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MartingaleReport {
    pub samples: usize,
    pub probes: Vec<ProbeStat>,
    pub rule: String,
    pub pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscreteMartingaleConfig {
    pub n: usize,
    pub seed: u64,
    /// Steps per block.
    pub block: usize,
    pub blocks: usize,
    pub z_max: f64,
}

/// Block increments of `g_k(v)` at probe vertices for an interior target.
/// Each probe's sequence is stopped the first time the tip is adjacent to
/// the target or `E_k` separates the probe from the target.
pub fn martingale_check_discrete(
    sampler: &LerwSampler,
    cache: &GreenCache,
    probes: &[usize],
    cfg: &DiscreteMartingaleConfig,
) -> Result<MartingaleReport> {
    if cfg.n == 0 {
        return Err(Error::NoSamples);
    }
    let grid = &sampler.grid;
    let w_e = match grid.target.as_slice() {
        [w] if grid.is_interior(*w) => *w,
        _ => return Err(Error::Unsupported("discrete martingale check needs an interior target".into())),
    };
    if probes.iter().any(|&v| !grid.is_interior(v) || v == w_e || v == grid.start) {
        return Err(Error::invariant("probes", "probes must be interior and away from start and target"));
    }
    let g_at = |path: &[usize], k: usize, v: usize| -> Result<f64> {
        let u = cache.pole_values(&path[..k], path[k], &[v, w_e])?;
        if !(u[1] > 0.0) {
            return Err(Error::Disconnected("tip cannot reach the target".into()));
        }
        Ok(u[0] / u[1])
    };
    let initial: Vec<f64> = probes.iter().map(|&v| g_at(&[grid.start], 0, v)).collect::<Result<_>>()?;
    let horizon = cfg.block * cfg.blocks;
    let mut incs = vec![Vec::new(); probes.len()];
    let mut stopped = vec![0usize; probes.len()];
    let mut blocked = vec![false; grid.len()];
    let mut seen = vec![false; grid.len()];
    for rep in 0..cfg.n {
        let mut rng = rng_stream(cfg.seed, rep as u64);
        let path = sampler.sample(&mut rng)?.vertices;
        let last = path.len() - 2;
        // per probe: first k at which the sequence stops
        let mut stop = vec![usize::MAX; probes.len()];
        for k in 0..=horizon.min(last) {
            blocked[path[k]] = true;
            let adjacent = grid.neighbors(path[k]).contains(&w_e);
            let reach = reachable_from(grid, w_e, &blocked, &mut seen);
            for (i, &v) in probes.iter().enumerate() {
                if stop[i] == usize::MAX && (adjacent || !reach.contains(&v)) {
                    stop[i] = k;
                }
            }
            for &v in &reach {
                seen[v] = false;
            }
        }
        for &v in &path[..=horizon.min(last)] {
            blocked[v] = false;
        }
        for (i, &v) in probes.iter().enumerate() {
            let cap = stop[i].min(last);
            let mut prev = initial[i];
            let mut k_prev = 0;
            for j in 1..=cfg.blocks {
                let k = (j * cfg.block).min(cap);
                if k == k_prev {
                    stopped[i] += 1;
                    continue;
                }
                let cur = g_at(&path, k, v)?;
                incs[i].push(cur - prev);
                prev = cur;
                k_prev = k;
            }
        }
    }
    let stats: Vec<ProbeStat> = probes
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let (m, se) = mean_se(&incs[i]);
            let z = if se > 0.0 { m / se } else { 0.0 };
            let p = grid.pos(v);
            ProbeStat {
                probe: [p.re, p.im],
                initial: initial[i],
                mean_increment: m,
                se,
                z,
                count: incs[i].len(),
                stopped: stopped[i],
                threshold: cfg.z_max,
                pass: z.abs() <= cfg.z_max,
            }
        })
        .collect();
    Ok(MartingaleReport {
        samples: cfg.n,
        pass: stats.iter().all(|s| s.pass),
        probes: stats,
        rule: format!("|z| <= {}", cfg.z_max),
    })
}

/// Interior vertices reachable from `from` without entering `blocked`;
/// marks them in `seen`, which the caller resets.
fn reachable_from(grid: &GridGraph, from: usize, blocked: &[bool], seen: &mut [bool]) -> Vec<usize> {
    let mut out = vec![from];
    seen[from] = true;
    let mut head = 0;
    while head < out.len() {
        let v = out[head];
        head += 1;
        for &w in grid.neighbors(v) {
            if grid.is_interior(w) && !blocked[w] && !seen[w] {
                seen[w] = true;
                out.push(w);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContinuousMartingaleConfig {
    pub t_end: f64,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
    pub k_se: f64,
    /// Relative bias allowance.
    pub bias: f64,
}

/// `Ê[P_t(z)]` against `P_0(z)` for continuous LERW in a hole-free domain,
/// `P_t` being the normalized Poisson kernel with pole at `ξ(t)`.
pub fn martingale_check_continuous(
    domain: &Domain,
    target: &Target,
    probes: &[C64],
    provider: DriftProvider,
    cfg: &ContinuousMartingaleConfig,
) -> Result<MartingaleReport> {
    if cfg.n == 0 {
        return Err(Error::NoSamples);
    }
    let init = ContinuousLerw::new(domain, target, provider)?;
    let p0: Vec<f64> = probes
        .iter()
        .map(|&z| init.image.normalized_poisson(init.xi, z))
        .collect::<Result<_>>()?;
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let mut values = vec![Vec::with_capacity(cfg.n); probes.len()];
    for rep in 0..cfg.n {
        let mut rng = rng_stream(cfg.seed, rep as u64);
        let mut s = init.clone();
        for _ in 0..steps {
            let dw: f64 = cfg.dt.sqrt() * rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal);
            s.step(dw, cfg.dt)?;
        }
        for (i, &z) in probes.iter().enumerate() {
            let w = s.state.map_point(z)?;
            values[i].push(s.image.normalized_poisson(s.xi, w)?);
        }
    }
    let stats: Vec<ProbeStat> = probes
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let (m, se) = mean_se(&values[i]);
            let dev = m - p0[i];
            let threshold = cfg.k_se * se + cfg.bias * p0[i].abs();
            ProbeStat {
                probe: [z.re, z.im],
                initial: p0[i],
                mean_increment: dev,
                se,
                z: if se > 0.0 { dev / se } else { 0.0 },
                count: cfg.n,
                stopped: 0,
                threshold,
                pass: dev.abs() <= threshold,
            }
        })
        .collect();
    Ok(MartingaleReport {
        samples: cfg.n,
        pass: stats.iter().all(|s| s.pass),
        probes: stats,
        rule: format!("|E[P_t] - P_0| <= {}*SE + {}*P_0", cfg.k_se, cfg.bias),
    })
}

// ---------------------------------------------------------------- quasi-loops

/// All index pairs `i < j` with both points in `B(z; r)`, `|a − b| ≤ ε`, and
/// the subpath between them leaving `B(z; 2r)`.
pub fn quasi_loops(path: &[C64], z: C64, r: f64, eps: f64) -> Vec<(usize, usize)> {
    let n = path.len();
    // first index ≥ i outside B(z; 2r)
    let mut next_out = vec![n; n + 1];
    for i in (0..n).rev() {
        next_out[i] = if (path[i] - z).norm() > 2.0 * r { i } else { next_out[i + 1] };
    }
    let mut out = Vec::new();
    for i in 0..n {
        if (path[i] - z).norm() > r {
            continue;
        }
        for j in next_out[i] + 1..n {
            if (path[j] - z).norm() <= r && (path[j] - path[i]).norm() <= eps {
                out.push((i, j));
            }
        }
    }
    out
}

pub fn has_quasi_loop(path: &[C64], z: C64, r: f64, eps: f64) -> bool {
    !quasi_loops(path, z, r, eps).is_empty()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QuasiLoopReport {
    pub center: [f64; 2],
    pub r: f64,
    pub samples: usize,
    /// `(ε, probability, SE)`, in the order given.
    pub rows: Vec<(f64, f64, f64)>,
    pub nonincreasing: bool,
}

/// Empirical quasi-loop probabilities over LERW samples; the trend check
/// allows increases up to 2 SE between successive ε (listed decreasing).
pub fn quasi_loop_trend(samples: &[LerwSample], z: C64, r: f64, eps: &[f64]) -> QuasiLoopReport {
    let n = samples.len() as f64;
    let rows: Vec<(f64, f64, f64)> = eps
        .iter()
        .map(|&e| {
            let hits = samples.iter().filter(|s| has_quasi_loop(&s.points, z, r, e)).count() as f64;
            let p = hits / n;
            (e, p, (p * (1.0 - p) / n).sqrt())
        })
        .collect();
    let nonincreasing = rows
        .windows(2)
        .all(|w| w[1].1 <= w[0].1 + 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt());
    QuasiLoopReport {
        center: [z.re, z.im],
        r,
        samples: samples.len(),
        rows,
        nonincreasing,
    }
}

// ---------------------------------------------------------------- distances

/// Discrete Fréchet distance between two polylines (vertex couplings).
pub fn frechet_distance(p: &[C64], q: &[C64]) -> f64 {
    if p.is_empty() || q.is_empty() {
        return f64::NAN;
    }
    let m = q.len();
    let mut prev = vec![0.0f64; m];
    let mut cur = vec![0.0f64; m];
    for (i, &a) in p.iter().enumerate() {
        for j in 0..m {
            let d = (a - q[j]).norm();
            cur[j] = match (i, j) {
                (0, 0) => d,
                (0, _) => cur[j - 1].max(d),
                (_, 0) => prev[0].max(d),
                _ => prev[j].min(prev[j - 1]).min(cur[j - 1]).max(d),
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[m - 1]
}

/// Insert points so that no segment is longer than `spacing`.
pub fn resample_polyline(points: &[C64], spacing: f64) -> Vec<C64> {
    let mut out = Vec::with_capacity(points.len());
    if let Some(&p) = points.first() {
        out.push(p);
    }
    for w in points.windows(2) {
        let k = ((w[1] - w[0]).norm() / spacing).ceil().max(1.0) as usize;
        for i in 1..=k {
            out.push(w[0] + (w[1] - w[0]) * (i as f64 / k as f64));
        }
    }
    out
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Asymptotic p-value of the two-sample KS statistic.
pub fn ks_pvalue(d: f64, n: usize, m: usize) -> f64 {
    let ne = (n * m) as f64 / (n + m) as f64;
    let s = ne.sqrt();
    let lambda = (s + 0.12 + 0.11 / s) * d;
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k as f64 * lambda).powi(2)).exp();
        sum += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Half-width of the 95% band for the two-sample KS statistic.
pub fn ks_band(n: usize, m: usize) -> f64 {
    1.358 * ((n + m) as f64 / (n * m) as f64).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KsReport {
    pub n: usize,
    pub m: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub band: f64,
}

impl KsReport {
    pub fn new(a: &[f64], b: &[f64]) -> Self {
        let statistic = ks_statistic(a, b);
        KsReport {
            n: a.len(),
            m: b.len(),
            statistic,
            p_value: ks_pvalue(statistic, a.len(), b.len()),
            band: ks_band(a.len(), b.len()),
        }
    }
}

// ---------------------------------------------------------------- convergence

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub mesh: f64,
    pub samples: usize,
    /// Paths that ended before the probe time.
    pub short: usize,
    pub ks: KsReport,
    /// Median Fréchet distance between each discrete trace and the
    /// continuous trace driven by its own martingale part.
    pub median_frechet: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub t_probe: f64,
    pub dt: f64,
    pub rows: Vec<ConvergenceRow>,
    pub ks_inversions: usize,
    pub ks_trend_pass: bool,
    pub frechet_trend_pass: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceConfig {
    pub t_probe: f64,
    pub dt: f64,
    pub n: usize,
    pub seed: u64,
}

/// Samples of `ξ₀(t)` from continuous LERW with closed-form drift.
pub fn continuous_samples(domain: &Domain, target: &Target, t: f64, dt: f64, n: usize, seed: u64) -> Result<Vec<f64>> {
    let init = ContinuousLerw::new(domain, target, DriftProvider::ClosedForm)?;
    let steps = (t / dt).round() as usize;
    (0..n)
        .map(|rep| {
            let mut rng = rng_stream(seed, rep as u64);
            let mut s = init.clone();
            for _ in 0..steps {
                let dw: f64 = dt.sqrt() * rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal);
                s.step(dw, dt)?;
            }
            Ok(s.xi)
        })
        .collect()
}

/// Continuous trace driven by the martingale part `η` of a discrete driving
/// function, resampled to a uniform grid of step `dt` on `[0, t]`.
pub fn coupled_trace(domain: &Domain, target: &Target, sub: &DriftSubtracted, t: f64, dt: f64) -> Result<Vec<C64>> {
    let eta = DrivingFunction::new(sub.t.clone(), sub.eta.clone())?;
    let steps = (t / dt).round() as usize;
    let vals: Vec<f64> = (0..=steps)
        .map(|k| eta.value_at(k as f64 * dt).ok_or(Error::NoSamples))
        .collect::<Result<_>>()?;
    let incs: Vec<f64> = vals.windows(2).map(|w| w[1] - w[0]).collect();
    let run = ContinuousLerw::new(domain, target, DriftProvider::ClosedForm)?.run_with_noise(dt, &incs, 1e-9)?;
    Ok(run.trace)
}

/// Distributional comparison of discrete and continuous driving functions
/// across meshes (hole-free domains).
pub fn convergence_report(
    setups: &[(f64, LerwSampler)],
    domain: &Domain,
    target: &Target,
    cfg: &ConvergenceConfig,
) -> Result<ConvergenceReport> {
    let cont = continuous_samples(domain, target, cfg.t_probe, cfg.dt, cfg.n, cfg.seed ^ 0x9e37_79b9)?;
    let mut rows = Vec::new();
    for (mesh, sampler) in setups {
        let mut xs = Vec::with_capacity(cfg.n);
        let mut fr = Vec::with_capacity(cfg.n);
        let mut short = 0;
        for rep in 0..cfg.n {
            let mut rng = rng_stream(cfg.seed, rep as u64);
            let s = sampler.sample(&mut rng)?;
            let (drv, state) = discrete_driving_until(&s.points, cfg.t_probe)?;
            let Some(x) = drv.value_at(cfg.t_probe) else {
                short += 1;
                continue;
            };
            xs.push(x);
            let sub = subtract_drift(&drv, &state, domain, target, DriftProvider::ClosedForm)?;
            // the coupled run must resolve the lattice scale
            let beta = coupled_trace(domain, target, &sub, cfg.t_probe, cfg.dt.min(mesh * mesh))?;
            let tips = hull_tips(&state, drv.xi[0]);
            let spacing = mesh / 4.0;
            fr.push(frechet_distance(&resample_polyline(&tips, spacing), &resample_polyline(&beta, spacing)));
        }
        if xs.is_empty() {
            return Err(Error::NoSamples);
        }
        rows.push(ConvergenceRow {
            mesh: *mesh,
            samples: xs.len(),
            short,
            ks: KsReport::new(&xs, &cont),
            median_frechet: median(&fr),
        });
    }
    let mut inversions = 0;
    let mut within_band = true;
    for w in rows.windows(2) {
        if w[1].ks.statistic > w[0].ks.statistic {
            inversions += 1;
            within_band &= w[1].ks.statistic - w[0].ks.statistic <= w[1].ks.band;
        }
    }
    let frechet_trend_pass = rows.windows(2).all(|w| w[1].median_frechet < w[0].median_frechet);
    Ok(ConvergenceReport {
        t_probe: cfg.t_probe,
        dt: cfg.dt,
        ks_inversions: inversions,
        ks_trend_pass: inversions <= 1 && within_band,
        frechet_trend_pass,
        rows,
    })
}

// ---------------------------------------------------------------- reversibility

/// Height of the first point of the path at or beyond the vertical line `x = x_mid`.
pub fn first_crossing_height(points: &[C64], x_mid: f64) -> Option<f64> {
    let start_left = points.first()?.re < x_mid;
    points
        .iter()
        .find(|p| if start_left { p.re >= x_mid } else { p.re <= x_mid })
        .map(|p| p.im)
}

/// Forward LERW `a → b` versus reversed LERW `b → a`, compared by the
/// height of the first crossing of the mid-line in the `a → b` direction.
pub fn reversibility_check(forward: &LerwSampler, backward: &LerwSampler, x_mid: f64, n: usize, seed: u64) -> Result<KsReport> {
    if n == 0 {
        return Err(Error::NoSamples);
    }
    let mut fw = Vec::with_capacity(n);
    let mut bw = Vec::with_capacity(n);
    for rep in 0..n {
        let mut rng = rng_stream(seed, 2 * rep as u64);
        let s = forward.sample(&mut rng)?;
        fw.push(first_crossing_height(&s.points, x_mid).ok_or(Error::NoSamples)?);
        let mut rng = rng_stream(seed, 2 * rep as u64 + 1);
        let mut pts = backward.sample(&mut rng)?.points;
        pts.reverse();
        bw.push(first_crossing_height(&pts, x_mid).ok_or(Error::NoSamples)?);
    }
    Ok(KsReport::new(&fw, &bw))
}

// ---------------------------------------------------------------- endpoints

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EndpointReport {
    pub samples: usize,
    /// Target vertex positions with empirical and predicted frequencies.
    pub rows: Vec<([f64; 2], f64, f64)>,
    pub total_variation: f64,
}

/// Exit law of the walk from the start restricted to the target set:
/// `G(start, w_b)` over the interior neighbour `w_b` of each target vertex,
/// normalized.
pub fn endpoint_law(grid: &GridGraph) -> Result<Vec<f64>> {
    let n = grid.n_interior();
    let mut a = Csr::with_capacity(n, 5 * n);
    for v in 0..n {
        let mut row = vec![(v, 4.0)];
        row.extend(grid.neighbors(v).iter().filter(|&&w| grid.is_interior(w)).map(|&w| (w, -1.0)));
        a.push_row(row);
    }
    let mut b = vec![0.0; n];
    b[grid.start] = 4.0;
    let mut x = vec![0.0; n];
    conjugate_gradient(&a, &b, &mut x, 1e-12, 50 * n + 1000)?;
    let w: Vec<f64> = grid
        .target
        .iter()
        .map(|&t| grid.neighbors(t).iter().filter(|&&u| grid.is_interior(u)).map(|&u| x[u]).sum())
        .collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|v| v / total).collect())
}

pub fn endpoint_check(sampler: &LerwSampler, n: usize, seed: u64) -> Result<EndpointReport> {
    if n == 0 {
        return Err(Error::NoSamples);
    }
    let grid = &sampler.grid;
    let expected = endpoint_law(grid)?;
    let index: BTreeMap<usize, usize> = grid.target.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut counts = vec![0usize; grid.target.len()];
    for rep in 0..n {
        let mut rng = rng_stream(seed, rep as u64);
        let end = sampler.sample(&mut rng)?.end();
        let i = index
            .get(&end)
            .ok_or_else(|| Error::Walk("path ended off the target".into()))?;
        counts[*i] += 1;
    }
    let rows: Vec<([f64; 2], f64, f64)> = grid
        .target
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let p = grid.pos(v);
            ([p.re, p.im], counts[i] as f64 / n as f64, expected[i])
        })
        .collect();
    let total_variation = rows.iter().map(|(_, e, p)| (e - p).abs()).sum::<f64>() / 2.0;
    Ok(EndpointReport {
        samples: n,
        rows,
        total_variation,
    })
}

/// Discrete observable `g` of a prefix at the given vertices, normalized
/// to 1 at the interior target.
pub fn prefix_observable(grid: &GridGraph, prefix: &[usize], at: &[usize]) -> Result<Vec<f64>> {
    let f = crate::harmonic::observable(grid, prefix, ObservableKind::G, &SolveOptions::default())?;
    Ok(at.iter().map(|&v| f.values[v]).collect())
}

/// Continuous counterpart of [`prefix_observable`] in the hull of the
/// polyline `prefix` (first point on the axis): `P(z) = a₁(G_z)/a₁(G_p)`.
pub fn prefix_poisson(domain: &Domain, prefix: &[C64], p: C64, probes: &[C64], mesh: f64) -> Result<Vec<f64>> {
    let (drv, state) = extract_driving_until(&densify(prefix, 8), f64::INFINITY)?;
    let xi = *drv.xi.last().unwrap();
    probes
        .iter()
        .map(|&z| crate::continuous::poisson_ratio_numeric(domain, prefix, &state, xi, z, p, mesh))
        .collect()
}
