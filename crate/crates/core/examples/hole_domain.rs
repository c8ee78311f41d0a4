// Continuous LERW in a domain with one rectangular hole, with the drift
// computed from lattice solves, for each kind of target.

use lerw::continuous::{ContinuousLerw, DriftProvider, NumericDrift};
use lerw::domain::{ArcSpec, Domain, Hole, Target, Truncation};
use lerw::geom::c;
use lerw::rng::rng_stream;

/// `(target kind, steps, u monotone, min ∂_y J)` per target.
pub fn run_example() -> lerw::Result<Vec<(&'static str, usize, bool, f64)>> {
    let domain = Domain {
        holes: vec![Hole::rectangle(-0.5, 0.5, 0.5, 1.0)?],
        start_x: 0.0,
        truncation: Truncation::Disk { radius: 10.0 },
    };
    let targets = [
        Target::InteriorPoint(c(0.0, 1.5)),
        Target::PrimeEnd(1.0),
        Target::SideArc(ArcSpec::Hole { index: 0 }),
    ];
    let params = NumericDrift::new(1.0 / 64.0);
    targets
        .iter()
        .map(|t| {
            let run = ContinuousLerw::new(&domain, t, DriftProvider::Numeric(params))?.run(
                1e-3,
                0.01,
                0.05,
                &mut rng_stream(17, 0),
            )?;
            let min_dyj = run.records.iter().map(|r| r.dyj).fold(f64::INFINITY, f64::min);
            let mono = run.records.windows(2).all(|w| w[1].u > w[0].u);
            Ok((t.kind_name(), run.records.len(), mono, min_dyj))
        })
        .collect()
}

fn main() -> lerw::Result<()> {
    for (kind, steps, mono, dyj) in run_example()? {
        println!("{kind:<14} steps {steps:3}  u monotone {mono}  min dyJ {dyj:.4}");
    }
    Ok(())
}
