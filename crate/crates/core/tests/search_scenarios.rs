use std::f64::consts::PI;

use evcs::error::Error;
use evcs::search::*;
use evcs::simulator::ScenarioSpec;

fn space(beta0: Range, t1: Range, objective: Objective) -> SearchSpace {
    SearchSpace {
        s: 0.5,
        gamma0: 0.5,
        phi: PI,
        theta: PI,
        beta0,
        t1,
        t2: None,
        objective,
        top_k: 5,
        trunc_in: 16,
        trunc_out: 9,
    }
}

fn range(start: f64, stop: f64, step: f64) -> Range {
    Range { start, stop, step }
}

fn assert_zero_sum(rows: &[ScenarioRow]) {
    for r in rows {
        let spec = ScenarioSpec::standard(r.s, r.beta0, r.gamma0, r.t1, r.t2).unwrap();
        assert!(spec.zero_sum_residual() < 1e-12, "{r:?}");
    }
}

#[test]
fn singleton_grid_returns_psi1() {
    let p = TABLE1[0];
    let rows = search(&space(Range::single(p.beta0), Range::single(p.t1), Objective::MaxPu)).unwrap();
    assert_eq!(rows.len(), 1);
    let spec = ScenarioSpec::standard(p.s, p.beta0, p.gamma0, p.t1, rows[0].t2).unwrap();
    assert_eq!(rows[0], evaluate_scenario(&spec).unwrap());
    assert!((rows[0].t2 - p.t2).abs() < 5e-4);
    assert!((rows[0].alpha - p.alpha).abs() < 0.02);
}

#[test]
fn max_purity_box() {
    // Frozen from an independent exhaustive scan: the box maximum sits on
    // the β0 = 0.75 edge.
    let rows = search(&space(range(0.75, 0.90, 0.001), range(0.80, 0.86, 0.001), Objective::MaxPu)).unwrap();
    let best = rows[0];
    assert!((best.beta0 - 0.750).abs() <= 0.002, "{best:?}");
    assert!((best.t1 - 0.851).abs() <= 0.002, "{best:?}");
    assert!((best.pu - 0.998828).abs() < 1e-5);
    assert!(rows.windows(2).all(|w| w[0].pu >= w[1].pu));
    assert_zero_sum(&rows);
}

#[test]
fn match_alpha_recovers_psi2() {
    let objective = Objective::MatchAlpha {
        target: 1.591,
        tol: 0.002,
    };
    let rows = search(&space(range(0.98, 1.10, 0.002), range(0.72, 0.84, 0.002), objective)).unwrap();
    let best = rows[0];
    assert!((best.beta0 - 1.040).abs() <= 0.005, "{best:?}");
    assert!((best.t1 - 0.780).abs() <= 0.005, "{best:?}");
    assert!(rows.iter().all(|r| (r.alpha - 1.591).abs() <= 0.002));
    assert_zero_sum(&rows);
}

#[test]
fn max_pr_respects_floor() {
    let objective = Objective::MaxPr { pu_floor: 0.99 };
    let rows = search(&space(range(0.8, 1.2, 0.05), range(0.7, 0.9, 0.05), objective)).unwrap();
    assert!(rows.iter().all(|r| r.pu >= 0.99));
    assert!(rows.windows(2).all(|w| w[0].pr >= w[1].pr));
}

#[test]
fn repeated_runs_are_identical() {
    let s = space(range(0.8, 0.9, 0.01), range(0.80, 0.85, 0.01), Objective::MaxPu);
    assert_eq!(search(&s).unwrap(), search(&s).unwrap());
}

#[test]
fn free_t2_grid() {
    let mut s = space(Range::single(0.813), Range::single(0.829), Objective::MaxPu);
    s.t2 = Some(range(0.70, 0.78, 0.02));
    let rows = search(&s).unwrap();
    assert_eq!(rows.len(), 5);
    let mut t2s: Vec<f64> = rows.iter().map(|r| r.t2).collect();
    t2s.sort_by(f64::total_cmp);
    assert!((t2s[0] - 0.70).abs() < 1e-12 && (t2s[4] - 0.78).abs() < 1e-12);
}

#[test]
fn unreachable_target_is_empty() {
    let objective = Objective::MatchAlpha { target: 3.9, tol: 0.001 };
    let err = search(&space(range(0.8, 0.9, 0.05), range(0.8, 0.85, 0.05), objective)).unwrap_err();
    assert!(matches!(err, Error::EmptyResult { evaluated: 6 }));
}

#[test]
fn alpha_grows_with_beta0() {
    let alpha: Vec<f64> = TABLE1
        .iter()
        .map(|p| evaluate_scenario(&p.spec().unwrap()).unwrap().alpha)
        .collect();
    assert!(alpha[0] < alpha[1] && alpha[1] < alpha[2]);
    assert!(alpha[3] < alpha[4]);
}

#[test]
fn psi1_row() {
    let row = evaluate_scenario(&TABLE1[0].spec().unwrap()).unwrap();
    assert!((row.pr - 0.050).abs() < 0.003);
    assert!((row.pu - 0.998).abs() < 0.005);
    assert!((row.alpha - 1.350).abs() < 0.02);
    assert!((row.f - 0.174).abs() < 0.005);
}
