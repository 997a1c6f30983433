use accelctl::costs::CostSpec;
use accelctl::directopt::SolverSettings;
use accelctl::geometry::Domain;
use accelctl::mfg::*;
use accelctl::trajectory::Trajectory;
use accelctl::valuefn1d::{tilde_phi, State1D};
use accelctl::ControlParams;

fn config(particles: Vec<Vec<f64>>, kernel: Option<KernelSpec>, fp_iters: usize, target: f64) -> MfgConfig {
    MfgConfig {
        domain: Domain::Interval,
        q: 2.0,
        horizon: 1.0,
        steps: 200,
        particles,
        kernel,
        terminal_kernel: None,
        fp_iters,
        target_exploitability: target,
        r_cap: None,
        solver: None,
    }
}

fn spread(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| vec![-0.6 + 1.2 * i as f64 / (n - 1) as f64, 0.5 - (i % 5) as f64 * 0.25, 1.0 / n as f64])
        .collect()
}

fn congestion() -> Option<KernelSpec> {
    Some(KernelSpec::Gaussian { bandwidth: 0.2, strength: 1.0 })
}

fn setup(kernel: Option<KernelSpec>) -> GameSetup {
    config(spread(2), kernel, 1, 0.0).setup().unwrap()
}

#[test]
fn decoupled_best_response_matches_closed_form() {
    let setup = setup(None);
    for (x, v) in [(0.0, 2.0), (0.5, 1.0), (-0.4, -1.5), (0.9, -0.2)] {
        let br = best_response(&setup, &CostSpec::zero(), &[x], &[v], None).unwrap();
        let exact = tilde_phi(&State1D::new(0.0, x, v), &setup.params).unwrap().as_f64();
        assert!((br.cost - exact).abs() <= 1e-3 * exact.max(1e-3), "({x},{v}): {} vs {exact}", br.cost);
    }
}

#[test]
fn slow_particle_drifts_freely() {
    let br = best_response(&setup(None), &CostSpec::zero(), &[0.0], &[0.1], None).unwrap();
    assert!(br.cost <= 1e-10);
    assert!(br.trajectory.accelerations().iter().all(|a| a.abs() <= 1e-6));
}

#[test]
fn self_congestion_costs_more() {
    let cfg = config(vec![vec![0.2, 0.5, 1.0]], congestion(), 3, 0.0);
    let coupled = fictitious_play(&cfg).unwrap();
    let free = tilde_phi(&State1D::new(0.0, 0.2, 0.5), &ControlParams::new(2.0, 1.0).unwrap()).unwrap().as_f64();
    assert!(coupled.particle_costs[0] >= free, "{} < {free}", coupled.particle_costs[0]);
}

#[test]
fn push_flow_of_mirrored_pair_is_symmetric() {
    let acc: Vec<f64> = (0..50).map(|k| -(k as f64) / 50.0).collect();
    let a = Trajectory::from_accelerations(0.0, 0.02, &[0.3], &[1.0], acc.clone());
    let b = a.reflect_shift(-1.0, 0.0);
    let flow = push_flow(&[&a, &b], &[0.5, 0.5]).unwrap();
    for k in 0..=50 {
        assert_eq!(flow.position(k, 0)[0], -flow.position(k, 1)[0]);
        assert_eq!(flow.velocity(k, 0)[0], -flow.velocity(k, 1)[0]);
        assert_eq!(flow.cloud(k).mass(), 1.0);
    }
}

#[test]
fn decoupled_run_stops_after_one_check() {
    let res = fictitious_play(&config(spread(6), None, 2, 1e-9)).unwrap();
    assert!(res.converged);
    assert_eq!(res.history.len(), 1);
    assert!(res.history[0].abs() <= 1e-9);
    assert_eq!(res.bundle.len(), 6);
}

#[test]
fn congestion_run_is_deterministic_and_well_formed() {
    let cfg = config(spread(10), congestion(), 6, 0.0);
    let a = fictitious_play(&cfg).unwrap();
    let b = fictitious_play(&cfg).unwrap();
    assert_eq!(a.history, b.history);
    assert_eq!(a.flow, b.flow);
    assert_eq!(a.history.len(), 6);
    assert!(!a.converged);
    assert!(a.history.last().unwrap() < &a.history[0], "{:?}", a.history);
    assert!(a.history.iter().all(|&e| e >= -1e-5), "{:?}", a.history);
    assert_eq!(a.bundle.iter().map(|m| m.weight).sum::<f64>(), 1.0);
    for m in &a.bundle {
        assert!(m.trajectory.positions().iter().all(|x| x.abs() <= 1.0 + 1e-7));
    }
    for k in [0, 100, 200] {
        assert_eq!(a.flow.cloud(k).mass(), 1.0);
    }
}

#[test]
fn far_particles_feel_no_coupling() {
    // Two clusters far apart relative to the bandwidth: each particle's cost is
    // at most its decoupled cost plus the self-interaction bound.
    let narrow = Some(KernelSpec::Gaussian { bandwidth: 0.01, strength: 1.0 });
    let cfg = config(vec![vec![-0.8, 0.0, 0.5], vec![0.8, 0.0, 0.5]], narrow, 3, 0.0);
    let res = fictitious_play(&cfg).unwrap();
    let bound = narrow.unwrap().bound();
    for c in res.particle_costs {
        assert!(c <= 0.5 * bound + 1e-9, "{c}");
    }
}

#[test]
fn r_cap_flags_fast_particles() {
    let mut cfg = config(vec![vec![0.0, 0.1, 0.5], vec![0.9, 1.0, 0.5]], None, 1, 1.0);
    cfg.r_cap = Some(1.0);
    let res = fictitious_play(&cfg).unwrap();
    assert_eq!(res.flagged, vec![1]);
}

#[test]
fn config_errors() {
    let mut cfg = config(spread(3), None, 1, 0.0);
    cfg.particles[1][2] = -0.1;
    assert!(fictitious_play(&cfg).is_err());
    let mut cfg = config(spread(3), None, 1, 0.0);
    cfg.particles[0] = vec![1.0, 0.5, 0.4];
    assert!(fictitious_play(&cfg).is_err());
    let cfg = config(spread(3), Some(KernelSpec::Gaussian { bandwidth: 0.0, strength: 1.0 }), 1, 0.0);
    assert!(fictitious_play(&cfg).is_err());
    let mut cfg = config(spread(3), None, 0, 0.0);
    cfg.solver = Some(SolverSettings::default());
    assert!(fictitious_play(&cfg).is_err());
}
