#[allow(dead_code)]
mod sample_lerw {
    include!("../examples/sample_lerw.rs");
}
#[allow(dead_code)]
mod loewner_roundtrip {
    include!("../examples/loewner_roundtrip.rs");
}
#[allow(dead_code)]
mod harmonic_fields {
    include!("../examples/harmonic_fields.rs");
}
#[allow(dead_code)]
mod drift {
    include!("../examples/drift.rs");
}
#[allow(dead_code)]
mod continuous_lerw {
    include!("../examples/continuous_lerw.rs");
}
#[allow(dead_code)]
mod martingales {
    include!("../examples/martingales.rs");
}
#[allow(dead_code)]
mod convergence {
    include!("../examples/convergence.rs");
}
#[allow(dead_code)]
mod hole_domain {
    include!("../examples/hole_domain.rs");
}

#[test]
fn sampled_paths_are_simple() {
    let s = sample_lerw::run_example().unwrap();
    assert!(s.all_simple);
    assert!(s.mean_walk >= s.mean_length && s.mean_length > 16.0);
}

#[test]
fn roundtrip_and_semicircle() {
    let s = loewner_roundtrip::run_example().unwrap();
    assert!(s.sup_error <= 0.02 * s.range);
    assert!((s.semicircle_hcap - 1.0).abs() < 0.01);
}

#[test]
fn green_and_harmonic_measure() {
    let s = harmonic_fields::run_example().unwrap();
    assert!((s.green - s.green_exact).abs() < 0.02 * s.green_exact);
    assert!((s.measure - 0.5).abs() < 0.01);
}

#[test]
fn lattice_drift_matches_closed_form() {
    for (_, num, exact) in drift::run_example().unwrap() {
        assert!((num - exact).abs() < 1e-2, "{num} vs {exact}");
    }
}

#[test]
fn continuous_run_time_change() {
    let s = continuous_lerw::run_example().unwrap();
    assert!(s.steps > 0 && s.u_monotone && s.final_u > 0.0);
    assert!(s.tip.1 > 0.0);
}

#[test]
fn martingale_checks_and_control() {
    let s = martingales::run_example().unwrap();
    assert!(s.discrete.probes.iter().all(|p| p.z.abs() <= 4.0));
    assert!(s.continuous.pass);
    assert!(!s.control.pass);
}

#[test]
fn convergence_report_rows() {
    let r = convergence::run_example().unwrap();
    assert_eq!(r.rows.len(), 2);
    for row in &r.rows {
        assert!(row.ks.statistic > 0.0 && row.ks.statistic < 0.3);
        assert!(row.median_frechet.is_finite());
    }
}

#[test]
fn hole_domain_runs_for_each_target() {
    let rows = hole_domain::run_example().unwrap();
    assert_eq!(rows.len(), 3);
    for (kind, steps, mono, dyj) in rows {
        assert!(steps > 0 && mono && dyj > 0.0, "{kind}");
    }
}
