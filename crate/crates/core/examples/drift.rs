// Lattice drift from a tip Fourier fit against the half-plane closed form.

use lerw::continuous::{drift_closed_form_halfplane, drift_numeric, NumericDrift};
use lerw::domain::{Domain, Target};
use lerw::geom::c;
use lerw::loewner::LoewnerState;

/// `(x, numeric X, closed-form X)` for the pole `p = i`.
pub fn run_example() -> lerw::Result<Vec<(f64, f64, f64)>> {
    let target = Target::InteriorPoint(c(0.0, 1.0));
    let params = NumericDrift::new(1.0 / 32.0);
    [-1.0, 0.0, 0.5]
        .iter()
        .map(|&x| {
            let mut d = Domain::half_plane(50.0);
            d.start_x = x;
            let e = drift_numeric(&d, &target, &LoewnerState::new(), &[c(x, 0.0)], x, &params)?;
            Ok((x, e.x, drift_closed_form_halfplane(c(0.0, 1.0), x)?))
        })
        .collect()
}

fn main() -> lerw::Result<()> {
    for (x, num, exact) in run_example()? {
        println!("x = {x:5.2}   X = {num:8.5}   closed form {exact:8.5}");
    }
    Ok(())
}
