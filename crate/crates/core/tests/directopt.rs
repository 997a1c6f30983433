use accelctl::costs::CostSpec;
use accelctl::directopt::*;
use accelctl::geometry::Domain;
use accelctl::oracle::{comparison_error, run_case, OracleCase};
use accelctl::valuefn1d::{optimal_trajectory_tilde, tilde_phi, State1D};
use accelctl::{ControlParams, Error};

fn interval(q: f64, x: f64, v: f64, steps: usize) -> DirectProblem {
    DirectProblem::new(
        Domain::Interval,
        ControlParams::new(q, 1.0).unwrap(),
        CostSpec::zero(),
        0.0,
        vec![x],
        vec![v],
        SolverSettings::default().with_steps(steps),
    )
}

#[test]
fn richardson_pair_shrinks_error() {
    let case = OracleCase::Aux { q: 2.0, x: -1.0, v: 1.0, w: 0.0, theta: 2.5 };
    let u: Vec<f64> = [250, 500, 1000]
        .iter()
        .map(|&n| run_case(&case, &SolverSettings::default().with_steps(n)).unwrap().oracle)
        .collect();
    let (d1, d2) = ((u[1] - u[0]).abs(), (u[2] - u[1]).abs());
    assert!(d1 >= 1.5 * d2, "differences {d1:e}, {d2:e}");
}

#[test]
fn singular_study_converges_to_closed_form() {
    let prob = DirectProblem::new(
        Domain::HalfLine,
        ControlParams::new(2.0, 4.0).unwrap(),
        CostSpec::zero(),
        0.0,
        vec![-1.0],
        vec![1.0],
        SolverSettings::default(),
    );
    let rows = convergence_study(&prob, &[250, 500, 1000, 2000]).unwrap();
    let errs: Vec<f64> = rows.iter().map(|r| (r.cost - 2.0 / 9.0).abs()).collect();
    assert!(errs.windows(2).all(|e| e[1] <= e[0]), "{errs:?}");
    assert!(errs[3] <= 2.0 / 9.0 * 1e-3);
    assert!(rows.iter().all(|r| r.violation <= prob.settings.constraint_tol));
    let table = accelctl::io::study_table(&rows);
    assert_eq!(table.header, ["N", "cost", "violation", "grad_norm"]);
    assert_eq!(table.rows[2][0], "1000");
}

#[test]
fn zero_branch_study_is_free() {
    let prob = DirectProblem::new(
        Domain::HalfLine,
        ControlParams::new(2.0, 1.0).unwrap(),
        CostSpec::zero(),
        0.0,
        vec![-2.0],
        vec![1.0],
        SolverSettings::default(),
    );
    for r in convergence_study(&prob, &[250, 500, 1000, 2000]).unwrap() {
        assert!(r.cost <= 1e-8, "{r:?}");
    }
}

#[test]
fn smoothing_continuation_converges_for_q_below_two() {
    let case = OracleCase::Tilde { q: 1.5, x: 0.5, v: 0.8, tau: 1.0 };
    let exact = case.closed_form().unwrap();
    let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let settings = SolverSettings { smoothing_end: eps, smoothing_start: 1e-2, ..SolverSettings::default() };
            (run_case(&case, &settings).unwrap().oracle - exact).abs() / exact
        })
        .collect();
    // Past ε = 1e-3 the time discretization dominates.
    assert!(errs[1] < errs[0] && errs[2] < errs[0], "{errs:?}");
    assert!(errs.iter().all(|&e| e <= 1e-3), "{errs:?}");
}

#[test]
fn interval_fifth_branch_example() {
    let sol = solve_direct(&interval(2.0, 0.0, 4.0, 2000)).unwrap();
    let exact = 128.0 / 9.0;
    assert!((sol.trajectory.cost - exact).abs() <= 1e-3 * exact, "{}", sol.trajectory.cost);
}

#[test]
fn value_grid_matches_tilde_phi() {
    let params = ControlParams::new(2.0, 1.0).unwrap();
    let mut probs = Vec::new();
    let mut exact = Vec::new();
    for i in 0..10 {
        for j in 0..5 {
            let x = -0.9 + 1.8 * i as f64 / 9.0;
            let v = -3.0 + 6.0 * j as f64 / 4.0;
            let value = tilde_phi(&State1D::new(0.0, x, v), &params).unwrap();
            if let Some(value) = value.finite() {
                probs.push(interval(2.0, x, v, 2000));
                exact.push(value);
            }
        }
    }
    assert_eq!(probs.len(), 50);
    for (res, e) in solve_batch(&probs).into_iter().zip(exact) {
        let cost = res.unwrap().trajectory.cost;
        assert!(comparison_error(e, cost) <= 1e-3, "{cost} vs {e}");
    }
}

#[test]
fn analytic_competitor_is_not_cheaper() {
    // The sampled closed-form profile is feasible, so it cannot beat the
    // discrete optimum by more than the solver gap.
    for (q, x, v) in [(2.0, 0.0, 4.0), (3.0, 0.5, 1.2), (1.5, -0.3, -2.5)] {
        let params = ControlParams::new(q, 1.0).unwrap();
        let competitor = optimal_trajectory_tilde(&State1D::new(0.0, x, v), &params, 1000).unwrap().control_cost(q);
        let sol = solve_direct(&interval(q, x, v, 1000)).unwrap();
        let gap = 1e-6 * (1.0 + sol.trajectory.cost);
        assert!(competitor >= sol.trajectory.cost - gap, "q={q}: {competitor} < {}", sol.trajectory.cost);
    }
}

#[test]
fn constant_costs_on_free_state() {
    let mut prob = interval(2.0, 0.0, 0.1, 2000);
    prob.costs = CostSpec::constant(1.0, 2.0);
    let cost = solve_direct(&prob).unwrap().trajectory.cost;
    assert!((cost - 3.0).abs() <= 1e-6, "{cost}");
}

#[test]
fn convergence_study_rows_follow_request() {
    let rows = convergence_study(&interval(2.0, 0.0, 2.0, 100), &[100, 200, 400]).unwrap();
    assert_eq!(rows.iter().map(|r| r.steps).collect::<Vec<_>>(), vec![100, 200, 400]);
    let exact = OracleCase::Tilde { q: 2.0, x: 0.0, v: 2.0, tau: 1.0 }.closed_form().unwrap();
    let e: Vec<f64> = rows.iter().map(|r| (r.cost - exact).abs()).collect();
    assert!(e[2] < e[0], "{e:?}");
    assert!(rows.iter().all(|r| r.violation <= 1e-7 && r.grad_norm <= 1e-6));
}

#[test]
fn solutions_stay_admissible() {
    for (q, x, v) in [(2.0, 0.5, 2.0), (3.0, -0.9, -1.0), (1.5, 0.0, 3.0)] {
        let sol = solve_direct(&interval(q, x, v, 400)).unwrap();
        let tr = &sol.trajectory;
        assert_eq!(tr.dynamics_residual(), 0.0);
        let worst = tr.positions().iter().fold(0.0f64, |a, z| a.max(z.abs() - 1.0));
        assert!(worst <= 1e-7, "q={q}: overshoot {worst}");
        assert!(sol.report.max_violation <= 1e-7);
    }
}

#[test]
fn constant_costs_shift_value() {
    let base = solve_direct(&interval(2.0, 0.3, 1.5, 300)).unwrap().trajectory.cost;
    let mut prob = interval(2.0, 0.3, 1.5, 300);
    prob.costs = CostSpec::constant(0.7, 0.25);
    let shifted = solve_direct(&prob).unwrap().trajectory.cost;
    assert!((shifted - (base + 0.7 + 0.25)).abs() <= 1e-8, "{shifted} vs {base}");
}

#[test]
fn ball_solution_is_rotation_invariant() {
    let solve = |x: [f64; 2], v: [f64; 2]| {
        let prob = DirectProblem::new(
            Domain::Ball { radius: 1.0 },
            ControlParams::new(2.0, 1.0).unwrap(),
            CostSpec::zero(),
            0.0,
            x.to_vec(),
            v.to_vec(),
            SolverSettings::default().with_steps(300),
        );
        solve_direct(&prob).unwrap().trajectory.cost
    };
    let a = solve([0.5, 0.0], [1.0, 0.3]);
    let b = solve([0.0, 0.5], [-0.3, 1.0]);
    assert!(a > 0.0);
    assert!((a - b).abs() <= 1e-6 * a, "{a} vs {b}");
}

#[test]
fn batch_matches_sequential() {
    let probs: Vec<DirectProblem> = [0.1, 0.5, 1.5, 2.5].iter().map(|&v| interval(2.0, 0.0, v, 200)).collect();
    let batch = solve_batch(&probs);
    for (p, b) in probs.iter().zip(batch) {
        assert_eq!(solve_direct(p).unwrap().trajectory, b.unwrap().trajectory);
    }
}

#[test]
fn exhausted_continuation_reports_best_iterate() {
    let mut prob = interval(2.0, 0.5, 3.0, 200);
    prob.settings.max_rounds = 1;
    prob.settings.rho0 = 1.0;
    match solve_direct(&prob) {
        Err(Error::NotConverged { violation, best, .. }) => {
            assert!(violation > 1e-7);
            assert_eq!(best.steps(), 200);
            assert!(best.cost.is_finite());
        }
        other => panic!("expected NotConverged, got {other:?}"),
    }
}

#[test]
fn rejects_bad_inputs() {
    assert!(matches!(solve_direct(&interval(2.0, 1.0, 0.5, 100)), Err(Error::Domain(_))));
    assert!(matches!(solve_direct(&interval(2.0, 0.0, 0.5, 1)), Err(Error::Config(_))));
    let mut p = interval(2.0, 0.0, 0.5, 100);
    p.warm_start = Some(vec![0.0; 3]);
    assert!(matches!(solve_direct(&p), Err(Error::Domain(_))));
}
