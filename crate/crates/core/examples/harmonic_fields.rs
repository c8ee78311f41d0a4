// Continuum Green function and harmonic measure on the truncated
// half-plane, compared with their closed forms.

use lerw::domain::{ArcSpec, Domain};
use lerw::field::{green_function, harmonic_measure, FieldParams, SlitMask};
use lerw::geom::c;

pub struct Summary {
    pub green: f64,
    pub green_exact: f64,
    pub measure: f64,
}

pub fn run_example() -> lerw::Result<Summary> {
    let d = Domain::half_plane(50.0);
    let params = FieldParams::new(1.0 / 32.0);
    let none = SlitMask::new(vec![]);
    let g = green_function(&d, &none, c(0.0, 1.0), &params, &[c(0.0, 2.0)])?;
    let hm = harmonic_measure(&d, &none, ArcSpec::Interval { a: -1.0, b: 1.0 }, &params, &[c(0.0, 1.0)])?;
    Ok(Summary {
        green: g.eval(c(0.0, 2.0)).unwrap_or(f64::NAN),
        green_exact: 3f64.ln() / (2.0 * std::f64::consts::PI),
        measure: hm.eval(c(0.0, 1.0)).unwrap_or(f64::NAN),
    })
}

fn main() -> lerw::Result<()> {
    let s = run_example()?;
    println!("G(i; 2i)         {:.5}  exact {:.5}", s.green, s.green_exact);
    println!("H([-1,1]; i)     {:.5}  exact 0.5", s.measure);
    Ok(())
}
