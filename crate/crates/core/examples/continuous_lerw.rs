// Integrate continuous LERW aimed at `i` and report the time change.

use lerw::continuous::{ContinuousLerw, DriftProvider};
use lerw::domain::{Domain, Target};
use lerw::geom::c;
use lerw::rng::rng_stream;

pub struct Summary {
    pub steps: usize,
    pub final_xi: f64,
    pub final_u: f64,
    pub u_monotone: bool,
    pub tip: (f64, f64),
}

pub fn run_example() -> lerw::Result<Summary> {
    let d = Domain::half_plane(20.0);
    let run = ContinuousLerw::new(&d, &Target::InteriorPoint(c(0.0, 1.0)), DriftProvider::ClosedForm)?
        .run(1e-3, 0.2, 0.05, &mut rng_stream(3, 0))?;
    let tip = *run.trace.last().unwrap();
    Ok(Summary {
        steps: run.records.len(),
        final_xi: *run.driving.xi.last().unwrap(),
        final_u: run.records.last().map_or(0.0, |r| r.u),
        u_monotone: run.records.windows(2).all(|w| w[1].u > w[0].u),
        tip: (tip.re, tip.im),
    })
}

fn main() -> lerw::Result<()> {
    let s = run_example()?;
    println!("steps {}  ξ(T) = {:.4}  u(T) = {:.5}  monotone u: {}", s.steps, s.final_xi, s.final_u, s.u_monotone);
    println!("tip at ({:.3}, {:.3})", s.tip.0, s.tip.1);
    Ok(())
}
