// Compare `ξ_δ(t)` of discrete LERW with `ξ₀(t)` of continuous LERW by a
// two-sample KS test at two meshes.

use lerw::domain::{Domain, Target};
use lerw::geom::c;
use lerw::grid::GridGraph;
use lerw::harmonic::SolveOptions;
use lerw::verify::{convergence_report, ConvergenceConfig, ConvergenceReport};
use lerw::walk::LerwSampler;

pub fn run_example() -> lerw::Result<ConvergenceReport> {
    let d = Domain::half_plane(4.0);
    let t = Target::InteriorPoint(c(0.0, 1.0));
    let setups = [1.0 / 10.0, 1.0 / 20.0]
        .iter()
        .map(|&m| Ok((m, LerwSampler::new(GridGraph::build(&d, &t, m)?, &SolveOptions::default())?)))
        .collect::<lerw::Result<Vec<_>>>()?;
    convergence_report(
        &setups,
        &d,
        &t,
        &ConvergenceConfig {
            t_probe: 0.05,
            dt: 1e-3,
            n: 300,
            seed: 8,
        },
    )
}

fn main() -> lerw::Result<()> {
    let r = run_example()?;
    for row in &r.rows {
        println!(
            "mesh {:.4}  KS {:.3} (p = {:.3})  median Fréchet {:.4}",
            row.mesh, row.ks.statistic, row.ks.p_value, row.median_frechet
        );
    }
    Ok(())
}
