// Sample loop-erased random walks on a square domain and print basic path
// statistics.

use lerw::domain::{Domain, Target, Truncation};
use lerw::geom::c;
use lerw::grid::GridGraph;
use lerw::harmonic::SolveOptions;
use lerw::rng::rng_stream;
use lerw::walk::LerwSampler;

pub struct Summary {
    pub mean_length: f64,
    pub mean_walk: f64,
    pub all_simple: bool,
    pub interior: usize,
}

pub fn run_example() -> lerw::Result<Summary> {
    let domain = Domain {
        holes: vec![],
        start_x: 0.0,
        truncation: Truncation::Box {
            half_width: 0.5,
            height: 1.0,
        },
    };
    let grid = GridGraph::build(&domain, &Target::InteriorPoint(c(0.0, 0.5)), 1.0 / 32.0)?;
    let interior = grid.n_interior();
    let sampler = LerwSampler::new(grid, &SolveOptions::default())?;
    let n = 200;
    let (mut len, mut walk, mut simple) = (0.0, 0.0, true);
    for rep in 0..n {
        let s = sampler.sample(&mut rng_stream(42, rep))?;
        let mut v = s.vertices.clone();
        v.sort_unstable();
        v.dedup();
        simple &= v.len() == s.vertices.len();
        len += s.len() as f64;
        walk += s.walk_length as f64;
    }
    Ok(Summary {
        mean_length: len / n as f64,
        mean_walk: walk / n as f64,
        all_simple: simple,
        interior,
    })
}

fn main() -> lerw::Result<()> {
    let s = run_example()?;
    println!("interior vertices     {}", s.interior);
    println!("mean LERW length      {:.1}", s.mean_length);
    println!("mean walk length      {:.1}", s.mean_walk);
    println!("all paths simple      {}", s.all_simple);
    Ok(())
}
