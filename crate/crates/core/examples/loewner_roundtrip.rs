// Generate a trace from `ξ(t) = 0.8 sin 3t`, recover the driving function
// from the trace, and measure the capacity of a semicircle.

use lerw::geom::{c, C64};
use lerw::loewner::{extract_driving, trace_from_driving, DrivingFunction};

pub struct Summary {
    pub sup_error: f64,
    pub range: f64,
    pub semicircle_hcap: f64,
}

pub fn run_example() -> lerw::Result<Summary> {
    let drv = DrivingFunction::sample(|t| 0.8 * (3.0 * t).sin(), 0.5, 1e-3)?;
    let (trace, _) = trace_from_driving(&drv);
    let (back, _) = extract_driving(&trace)?;
    let sup_error = back
        .t
        .iter()
        .zip(&back.xi)
        .filter_map(|(&t, &x)| drv.value_at(t).map(|y| (x - y).abs()))
        .fold(0.0, f64::max);

    let arc: Vec<C64> = (0..=2000)
        .map(|k| {
            let th = std::f64::consts::PI * k as f64 / 2000.0;
            c(th.cos(), th.sin())
        })
        .collect();
    let (_, state) = extract_driving(&arc)?;
    Ok(Summary {
        sup_error,
        range: drv.range(),
        semicircle_hcap: state.hcap(),
    })
}

fn main() -> lerw::Result<()> {
    let s = run_example()?;
    println!("round-trip sup error  {:.2e} (range {:.3})", s.sup_error, s.range);
    println!("unit semicircle hcap  {:.4}", s.semicircle_hcap);
    Ok(())
}
