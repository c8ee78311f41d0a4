// Martingale checks: the discrete observable `g_k` along LERW paths and the
// normalized Poisson kernel along continuous LERW, with a zero-drift control.

use lerw::continuous::DriftProvider;
use lerw::domain::{Domain, Target, Truncation};
use lerw::geom::c;
use lerw::grid::GridGraph;
use lerw::harmonic::{GreenCache, SolveOptions};
use lerw::verify::{
    martingale_check_continuous, martingale_check_discrete, ContinuousMartingaleConfig, DiscreteMartingaleConfig,
    MartingaleReport,
};
use lerw::walk::LerwSampler;

pub struct Summary {
    pub discrete: MartingaleReport,
    pub continuous: MartingaleReport,
    pub control: MartingaleReport,
}

pub fn run_example() -> lerw::Result<Summary> {
    let boxed = Domain {
        holes: vec![],
        start_x: 0.0,
        truncation: Truncation::Box {
            half_width: 0.5,
            height: 1.0,
        },
    };
    let grid = GridGraph::build(&boxed, &Target::InteriorPoint(c(0.0, 0.5)), 1.0 / 16.0)?;
    let cache = GreenCache::new(&grid)?;
    let probes: Vec<usize> = [c(-0.25, 0.25), c(0.25, 0.5)]
        .iter()
        .filter_map(|&z| grid.vertex_near(z))
        .collect();
    let sampler = LerwSampler::new(grid, &SolveOptions::default())?;
    let discrete = martingale_check_discrete(
        &sampler,
        &cache,
        &probes,
        &DiscreteMartingaleConfig {
            n: 1000,
            seed: 5,
            block: 2,
            blocks: 4,
            z_max: 4.0,
        },
    )?;

    let h = Domain::half_plane(20.0);
    let target = Target::InteriorPoint(c(1.0, 1.0));
    let cfg = ContinuousMartingaleConfig {
        t_end: 0.05,
        dt: 1e-3,
        n: 400,
        seed: 6,
        k_se: 3.0,
        bias: 0.05,
    };
    let z = [c(-1.0, 1.0)];
    let continuous = martingale_check_continuous(&h, &target, &z, DriftProvider::ClosedForm, &cfg)?;
    let control = martingale_check_continuous(&h, &target, &z, DriftProvider::Zero, &cfg)?;
    Ok(Summary {
        discrete,
        continuous,
        control,
    })
}

fn main() -> lerw::Result<()> {
    let s = run_example()?;
    for p in &s.discrete.probes {
        println!("discrete   probe {:?}  z = {:6.2}", p.probe, p.z);
    }
    for (name, r) in [("LERW drift", &s.continuous), ("zero drift", &s.control)] {
        let p = &r.probes[0];
        println!(
            "{name}: E[P_t] - P_0 = {:+.4} (threshold {:.4}) -> {}",
            p.mean_increment,
            p.threshold,
            if p.pass { "pass" } else { "fail" }
        );
    }
    Ok(())
}
