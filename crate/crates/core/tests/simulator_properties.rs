use evcs::network::solve_t2;
use evcs::search::TABLE1;
use evcs::simulator::*;

fn solved(mut spec: ScenarioSpec) -> ScenarioSpec {
    let t2 = solve_t2(spec.beta.amplitude(), spec.gamma.amplitude(), &spec.bs1, 0.0, 0.0).unwrap();
    spec = spec.with_t2(t2).unwrap();
    spec
}

#[test]
fn table1_tensors_are_normalized() {
    for p in TABLE1 {
        let t = joint_amplitudes(&p.spec().unwrap()).unwrap();
        let mass = t.total_mass();
        assert!((0.999..=1.0 + 1e-9).contains(&mass), "{}: {mass}", p.name);
    }
}

#[test]
fn solved_t2_suppresses_double_vacuum() {
    for p in TABLE1 {
        let spec = solved(p.spec().unwrap());
        let grid = heralded_amplitudes(&spec).unwrap().grid;
        let ratio = grid.c(0, 0).norm_sqr() / grid.pr();
        assert!(ratio < 1e-10, "{}: {ratio:e}", p.name);
    }
}

#[test]
fn table1_psi1_metrics() {
    let grid = heralded_amplitudes(&TABLE1[0].spec().unwrap()).unwrap().grid;
    assert!((grid.pr() - 0.050).abs() < 0.003);
    assert!((grid.pu() - 0.998).abs() < 0.005);
}

#[test]
fn squeezing_phase_breaks_the_block_structure() {
    let at_pi = heralded_amplitudes(&TABLE1[0].spec().unwrap()).unwrap().grid;
    let at_zero = heralded_amplitudes(&TABLE1[0].spec().unwrap().with_phi(0.0).unwrap())
        .unwrap()
        .grid;
    assert!(at_zero.off_axis_fraction() > at_pi.off_axis_fraction());
}

#[test]
fn heralded_grid_literal_purity() {
    use ndarray::Array2;
    use num_complex::Complex64;
    let h = 0.5f64.sqrt();
    let mut c = Array2::zeros((3, 3));
    c[[1, 0]] = Complex64::new(h, 0.0);
    c[[0, 1]] = Complex64::new(h, 0.0);
    let g = HeraldedGrid::from_amplitudes(c);
    assert!((g.pu() - 1.0).abs() < 1e-15);
    let mut c = Array2::zeros((3, 3));
    c[[1, 1]] = Complex64::new(1.0, 0.0);
    assert_eq!(HeraldedGrid::from_amplitudes(c).pu(), 0.0);
}

#[test]
fn heralded_grid_round_trips_through_json() {
    let grid = heralded_amplitudes(&TABLE1[2].spec().unwrap()).unwrap().grid;
    let json = serde_json::to_string(&grid).unwrap();
    let back: HeraldedGrid = serde_json::from_str(&json).unwrap();
    assert_eq!(back, grid);
}

#[test]
fn psi_w_vacuum_entry_is_zero() {
    let spec = solved(ScenarioSpec::standard(0.5, 0.5, 0.5, 0.999, 1.0).unwrap());
    let psi = approx_psi_w(&spec, 9).unwrap();
    assert_eq!(psi.full.get(0).norm(), 0.0);
    assert_eq!(psi.k1.get(0).norm(), 0.0);
}
