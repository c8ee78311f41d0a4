//! Command-line front end. Exit codes: 0 success, 1 validation error,
//! 2 numeric failure, 3 failed acceptance check.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::continuous::{ContinuousLerw, DriftProvider, NumericDrift};
use crate::domain::{parse_domain, Setup};
use crate::error::{Error, Result};
use crate::field::{solve_field, FieldParams, SlitMask};
use crate::geom::{c, C64};
use crate::grid::GridGraph;
use crate::harmonic::{GreenCache, SolveOptions};
use crate::io::{domain_hash, driving_csv, path_csv, steps_csv, trace_csv, RunDir};
use crate::rng::rng_stream;
use crate::verify::{self, hull_tips, DENSIFY};
use crate::walk::LerwSampler;

#[derive(Parser, Debug)]
#[command(name = "lerw", version, about = "Loop-erased random walk and continuous LERW toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DriftArg {
    Closed,
    Numeric,
    Zero,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum MartingaleKind {
    Discrete,
    Continuous,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample discrete LERW paths.
    SampleLerw {
        #[arg(long)]
        domain: PathBuf,
        /// Overrides the mesh in the domain file.
        #[arg(long)]
        mesh: Option<f64>,
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Driving function of a path CSV (`k,x,y`, first point on the axis).
    ExtractDriving {
        #[arg(long)]
        path: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate continuous LERW.
    RunContinuous {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 0.5)]
        tmax: f64,
        #[arg(long, default_value_t = 0.05)]
        stop_margin: f64,
        #[arg(long, value_enum, default_value = "closed")]
        drift: DriftArg,
        /// Solver mesh for the numeric drift (defaults to the domain mesh).
        #[arg(long)]
        drift_mesh: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the target's continuum field (no slit) and dump it.
    SolveField {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        mesh: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Martingale check (discrete g-observable or continuous Poisson kernel).
    CheckMartingale {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, value_enum, default_value = "continuous")]
        kind: MartingaleKind,
        /// Probe points `x,y;x,y;…`.
        #[arg(long)]
        probes: String,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 4)]
        block: usize,
        #[arg(long, default_value_t = 5)]
        blocks: usize,
        #[arg(long, value_enum, default_value = "closed")]
        drift: DriftArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Block moments of the discrete driving function.
    CheckMoments {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        d: f64,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// KS and Fréchet comparison of discrete and continuous LERW across meshes.
    CheckConvergence {
        #[arg(long)]
        domain: PathBuf,
        /// Comma-separated meshes, fractions allowed (`1/20,1/40`).
        #[arg(long)]
        meshes: String,
        #[arg(long, default_value_t = 0.05)]
        t_probe: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quasi-loop probabilities of sampled LERW paths.
    QuasiLoops {
        #[arg(long)]
        domain: PathBuf,
        /// Ball centre `x,y`.
        #[arg(long)]
        center: String,
        #[arg(long)]
        r: f64,
        /// Comma-separated ε values.
        #[arg(long, default_value = "0.02,0.01,0.005")]
        eps: String,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize run directories from their manifests.
    Report {
        /// Run directories.
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(cli.command) {
        Ok(true) => 0,
        Ok(false) => 3,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::invariant("input", format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(Setup, String)> {
    let text = read_input(path)?;
    let setup = parse_domain(&text)?;
    Ok((setup, text))
}

pub fn parse_fraction(s: &str) -> Result<f64> {
    let s = s.trim();
    let bad = || Error::invariant("mesh", format!("cannot parse `{s}`"));
    match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| bad())?;
            let b: f64 = b.trim().parse().map_err(|_| bad())?;
            Ok(a / b)
        }
        None => s.parse().map_err(|_| bad()),
    }
}

fn parse_point(s: &str) -> Result<C64> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| Error::invariant("point", format!("expected `x,y`, got `{s}`")))?;
    Ok(c(parse_fraction(x)?, parse_fraction(y)?))
}

fn parse_points(s: &str) -> Result<Vec<C64>> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_point).collect()
}

fn read_path_csv(path: &Path) -> Result<Vec<C64>> {
    let text = read_input(path)?;
    let mut pts = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::Syntax {
                line: i + 1,
                column: 1,
                message: "expected `k,x,y`".into(),
            });
        }
        let num = |s: &str, col| {
            s.trim().parse::<f64>().map_err(|_| Error::Syntax {
                line: i + 1,
                column: col,
                message: format!("bad number `{s}`"),
            })
        };
        pts.push(c(num(f[1], 2)?, num(f[2], 3)?));
    }
    Ok(pts)
}

fn provider(arg: DriftArg, mesh: f64) -> DriftProvider {
    match arg {
        DriftArg::Closed => DriftProvider::ClosedForm,
        DriftArg::Numeric => DriftProvider::Numeric(NumericDrift::new(mesh)),
        DriftArg::Zero => DriftProvider::Zero,
    }
}

fn setup_run(out: &Path, command: &str, config: Value, seed: Option<u64>, domain_text: Option<&str>) -> Result<RunDir> {
    let mut run = RunDir::create(out, command, config, seed)?;
    run.manifest.domain_sha256 = domain_text.map(domain_hash);
    Ok(run)
}

/// Returns whether the run passed its checks (always true for non-checks).
fn execute(cmd: Command) -> Result<bool> {
    match cmd {
        Command::SampleLerw {
            domain,
            mesh,
            n,
            seed,
            out,
        } => {
            let (mut setup, text) = load(&domain)?;
            if let Some(m) = mesh {
                setup = setup.with_mesh(m)?;
            }
            let cfg = json!({"domain": serde_json::from_str::<Value>(&setup.to_json())?, "n": n});
            let mut run = setup_run(&out, "sample-lerw", cfg, Some(seed), Some(&text))?;
            let sampler = LerwSampler::from_setup(&setup)?;
            let mut lengths = Vec::with_capacity(n);
            for rep in 0..n {
                let s = sampler.sample(&mut rng_stream(seed, rep as u64))?;
                lengths.push(s.len());
                run.write(&format!("path_{rep:05}.csv"), &path_csv(&s.points))?;
            }
            run.manifest.replicas = n;
            run.manifest.summary = json!({"grid": serde_json::to_value(sampler.grid.stats())?, "path_lengths": lengths});
            run.finish()?;
            Ok(true)
        }
        Command::ExtractDriving { path, out } => {
            let pts = read_path_csv(&path)?;
            let mut run = setup_run(&out, "extract-driving", json!({"path": path, "densify": DENSIFY}), None, None)?;
            let (drv, state) = verify::discrete_driving(&pts)?;
            let tips = hull_tips(&state, drv.xi[0]);
            run.write("driving.csv", &driving_csv(&drv))?;
            run.write("trace.csv", &trace_csv(&drv.t, &tips))?;
            run.manifest.summary = json!({"time": state.time(), "hcap": state.hcap(), "records": state.len()});
            run.finish()?;
            Ok(true)
        }
        Command::RunContinuous {
            domain,
            dt,
            tmax,
            stop_margin,
            drift,
            drift_mesh,
            seed,
            out,
        } => {
            let (setup, text) = load(&domain)?;
            let prov = provider(drift, drift_mesh.unwrap_or(setup.mesh.mesh));
            let cfg = json!({"dt": dt, "tmax": tmax, "stop_margin": stop_margin, "drift": format!("{prov:?}")});
            let mut run = setup_run(&out, "run-continuous", cfg, Some(seed), Some(&text))?;
            let res = ContinuousLerw::new(&setup.domain, &setup.target, prov)?.run(dt, tmax, stop_margin, &mut rng_stream(seed, 0))?;
            run.write("driving.csv", &driving_csv(&res.driving))?;
            run.write("trace.csv", &trace_csv(&res.driving.t, &res.trace))?;
            run.write("steps.csv", &steps_csv(&res.records))?;
            run.manifest.replicas = 1;
            let monotone = res.records.windows(2).all(|w| w[1].u > w[0].u);
            let min_dyj = res.records.iter().map(|r| r.dyj).fold(f64::INFINITY, f64::min);
            run.manifest.summary = json!({
                "stop": res.stop, "steps": res.records.len(), "u_monotone": monotone, "min_dyj": min_dyj,
            });
            run.finish()?;
            Ok(true)
        }
        Command::SolveField { domain, mesh, out } => {
            let (setup, text) = load(&domain)?;
            let mesh = mesh.unwrap_or(setup.mesh.mesh);
            let kind = crate::continuous::target_field_kind(&setup.target);
            let mut run = setup_run(&out, "solve-field", json!({"mesh": mesh, "kind": format!("{kind:?}")}), None, Some(&text))?;
            let field = solve_field(&setup.domain, &SlitMask::new(vec![]), kind, &FieldParams::new(mesh), &[])?;
            run.write("field.csv", &field.to_csv())?;
            run.manifest.summary = json!({
                "residual": field.residual, "iterations": field.iterations,
                "tolerance": field.tolerance, "levels": field.level_count(), "nodes": field.nodes,
            });
            run.finish()?;
            Ok(true)
        }
        Command::CheckMartingale {
            domain,
            kind,
            probes,
            n,
            seed,
            t_end,
            dt,
            block,
            blocks,
            drift,
            out,
        } => {
            let (setup, text) = load(&domain)?;
            let pts = parse_points(&probes)?;
            let cfg = json!({"kind": format!("{kind:?}"), "probes": probes, "n": n, "t_end": t_end, "dt": dt, "block": block, "blocks": blocks});
            let run = setup_run(&out, "check-martingale", cfg, Some(seed), Some(&text))?;
            let report = match kind {
                MartingaleKind::Discrete => {
                    let grid = GridGraph::build(&setup.domain, &setup.target, setup.mesh.mesh)?;
                    let cache = GreenCache::new(&grid)?;
                    let vs = pts
                        .iter()
                        .map(|&z| grid.vertex_near(z).ok_or_else(|| Error::invariant("probes", "probe outside the grid")))
                        .collect::<Result<Vec<_>>>()?;
                    let sampler = LerwSampler::new(grid, &SolveOptions::default())?;
                    verify::martingale_check_discrete(
                        &sampler,
                        &cache,
                        &vs,
                        &verify::DiscreteMartingaleConfig {
                            n,
                            seed,
                            block,
                            blocks,
                            z_max: 4.0,
                        },
                    )?
                }
                MartingaleKind::Continuous => verify::martingale_check_continuous(
                    &setup.domain,
                    &setup.target,
                    &pts,
                    provider(drift, setup.mesh.mesh),
                    &verify::ContinuousMartingaleConfig {
                        t_end,
                        dt,
                        n,
                        seed,
                        k_se: 3.0,
                        bias: 0.05,
                    },
                )?,
            };
            finish_check(run, n, &report, report.pass)
        }
        Command::CheckMoments { domain, d, n, seed, out } => {
            let (setup, text) = load(&domain)?;
            let run = setup_run(&out, "check-moments", json!({"d": d, "n": n}), Some(seed), Some(&text))?;
            let sampler = LerwSampler::from_setup(&setup)?;
            let report = verify::moment_check(&sampler, &setup.domain, &setup.target, &verify::MomentConfig::new(d, n, seed))?;
            let pass = report.first_moment_pass && report.second_moment_pass;
            finish_check(run, n, &report, pass)
        }
        Command::CheckConvergence {
            domain,
            meshes,
            t_probe,
            dt,
            n,
            seed,
            out,
        } => {
            let (setup, text) = load(&domain)?;
            let ms = meshes.split(',').map(parse_fraction).collect::<Result<Vec<_>>>()?;
            let cfg = json!({"meshes": ms, "t_probe": t_probe, "dt": dt, "n": n});
            let run = setup_run(&out, "check-convergence", cfg, Some(seed), Some(&text))?;
            let samplers = ms
                .iter()
                .map(|&m| Ok((m, LerwSampler::from_setup(&setup.with_mesh(m)?)?)))
                .collect::<Result<Vec<_>>>()?;
            let report = verify::convergence_report(
                &samplers,
                &setup.domain,
                &setup.target,
                &verify::ConvergenceConfig { t_probe, dt, n, seed },
            )?;
            let pass = report.ks_trend_pass && report.frechet_trend_pass;
            finish_check(run, n, &report, pass)
        }
        Command::QuasiLoops {
            domain,
            center,
            r,
            eps,
            n,
            seed,
            out,
        } => {
            let (setup, text) = load(&domain)?;
            let z = parse_point(&center)?;
            let eps = eps.split(',').map(parse_fraction).collect::<Result<Vec<_>>>()?;
            let run = setup_run(&out, "quasi-loops", json!({"center": center, "r": r, "eps": eps, "n": n}), Some(seed), Some(&text))?;
            let sampler = LerwSampler::from_setup(&setup)?;
            let samples = (0..n)
                .map(|rep| sampler.sample(&mut rng_stream(seed, rep as u64)))
                .collect::<Result<Vec<_>>>()?;
            let report = verify::quasi_loop_trend(&samples, z, r, &eps);
            let pass = report.nonincreasing;
            finish_check(run, n, &report, pass)
        }
        Command::Report { runs, out } => {
            let mut rows = Vec::new();
            let mut all = true;
            for dir in &runs {
                let text = read_input(&dir.join("manifest.json"))?;
                let m: Value = serde_json::from_str(&text)?;
                let pass = m.get("pass").and_then(Value::as_bool);
                all &= pass != Some(false);
                rows.push(json!({"run": dir, "command": m["command"], "pass": pass, "wall_time_s": m["wall_time_s"]}));
                println!(
                    "{:<40} {:<18} {}",
                    dir.display(),
                    m["command"].as_str().unwrap_or("?"),
                    match pass {
                        Some(true) => "PASS",
                        Some(false) => "FAIL",
                        None => "-",
                    }
                );
            }
            let summary = json!({"runs": rows, "pass": all});
            if let Some(out) = out {
                if let Some(parent) = out.parent() {
                    fs::create_dir_all(parent)?;
                }
                fs::write(out, serde_json::to_string_pretty(&summary)?)?;
            }
            Ok(all)
        }
    }
}

fn finish_check<T: serde::Serialize>(mut run: RunDir, n: usize, report: &T, pass: bool) -> Result<bool> {
    run.write_json("report.json", report)?;
    run.manifest.replicas = n;
    run.manifest.pass = Some(pass);
    run.manifest.summary = serde_json::to_value(report)?;
    run.finish()?;
    Ok(pass)
}
