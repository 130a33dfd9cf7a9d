//! Independent references for the relaxation dynamics: a tiny-step Euler
//! integration, a brute-force energy grid search for fixed points, and the
//! energy-descent property along accepted trajectories.

use kuramoto_ep::dynamics::{
    enumerate_equilibria, relax, relax_observed, IntegratorConfig,
};
use kuramoto_ep::energy::{internal_energy, phase_gradient, total_energy};
use kuramoto_ep::model::{circular_distance, ModelParameters, PhaseConfiguration};
use kuramoto_ep::topology::NetworkTopology;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn random_network(seed: u64) -> (NetworkTopology, ModelParameters, PhaseConfiguration, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topo = NetworkTopology::all_to_all(1, 3, 1).unwrap();
    let mut params = ModelParameters::zeros(&topo);
    for w in params.weights.iter_mut() {
        *w = rng.random_range(-1.0..1.0);
    }
    for h in params.bias_strengths.iter_mut() {
        *h = rng.random_range(0.0..0.8);
    }
    for psi in params.bias_angles.iter_mut() {
        *psi = rng.random_range(-PI..PI);
    }
    let inputs = vec![rng.random_range(-PI..PI)];
    let mut init = PhaseConfiguration::zeros(topo.n_units());
    init.phases[0] = inputs[0];
    for p in init.phases[1..].iter_mut() {
        *p = rng.random_range(-PI..PI);
    }
    (topo, params, init, inputs)
}

/// Forward-Euler reference with a tiny fixed step, run to the same residual
/// tolerance as the adaptive integrator.
fn euler_reference(
    init: &PhaseConfiguration,
    params: &ModelParameters,
    topo: &NetworkTopology,
    inputs: &[f64],
    dt: f64,
    grad_tol: f64,
    t_max: f64,
) -> Vec<f64> {
    let mut y = init.phases.clone();
    y[..topo.n_inputs()].copy_from_slice(inputs);
    let mut t = 0.0;
    loop {
        let grad = phase_gradient(&y, params, topo, 0.0, None);
        let residual = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if residual < grad_tol || t >= t_max {
            return y;
        }
        for (yi, gi) in y.iter_mut().zip(&grad) {
            *yi -= dt * gi;
        }
        y[..topo.n_inputs()].copy_from_slice(inputs);
        t += dt;
    }
}

#[test]
fn adaptive_rk4_agrees_with_euler_reference() {
    for seed in [5u64, 23, 91] {
        let (topo, params, init, inputs) = random_network(seed);
        let cfg = IntegratorConfig::default();
        let result = relax(&init, &params, &topo, 0.0, None, &cfg, &inputs).unwrap();
        assert!(result.converged, "seed {seed} did not converge");
        assert!(result.residual_norm < 1e-6);

        let e_init = internal_energy(init.as_slice(), &params, &topo);
        let e_final = internal_energy(result.phases.as_slice(), &params, &topo);
        assert!(e_final <= e_init, "energy rose: {e_init} -> {e_final}");

        let reference = euler_reference(&init, &params, &topo, &inputs, 1e-4, 1e-6, 200.0);
        for (i, (&a, &b)) in result.phases.phases.iter().zip(&reference).enumerate() {
            assert!(
                circular_distance(a, b) < 1e-3,
                "seed {seed} unit {i}: rk4 {a:.6} vs euler {b:.6}"
            );
        }
    }
}

#[test]
fn energy_descends_along_accepted_trajectories() {
    for seed in 0..10u64 {
        let (topo, params, init, inputs) = random_network(seed + 1000);
        let beta = if seed % 2 == 0 { 0.0 } else { 0.1 };
        let targets = vec![0.4];
        let targets_opt = (beta != 0.0).then_some(targets.as_slice());
        let cfg = IntegratorConfig::default();
        let mut previous: Option<f64> = None;
        relax_observed(
            &init,
            &params,
            &topo,
            beta,
            targets_opt,
            &cfg,
            &inputs,
            |_, y| {
                let f = total_energy(y, &params, &topo, beta, targets_opt).total;
                if let Some(prev) = previous {
                    let slack = 10.0 * (cfg.abs_tol + cfg.rel_tol * prev.abs());
                    assert!(
                        f <= prev + slack,
                        "seed {seed}: energy rose {prev:.12} -> {f:.12}"
                    );
                }
                previous = Some(f);
            },
        )
        .unwrap();
    }
}

/// Brute-force search for local minima of the energy on a 2D phase grid.
fn grid_local_minima(
    params: &ModelParameters,
    topo: &NetworkTopology,
    clamp: f64,
    resolution: usize,
) -> Vec<(f64, f64)> {
    let step = 2.0 * PI / resolution as f64;
    let energy_at = |a: f64, b: f64| internal_energy(&[clamp, a, b], params, topo);
    let mut minima = Vec::new();
    for ia in 0..resolution {
        for ib in 0..resolution {
            let a = -PI + ia as f64 * step;
            let b = -PI + ib as f64 * step;
            let e = energy_at(a, b);
            let mut is_min = true;
            'neigh: for da in -1i64..=1 {
                for db in -1i64..=1 {
                    if da == 0 && db == 0 {
                        continue;
                    }
                    let na = -PI + ((ia as i64 + da).rem_euclid(resolution as i64)) as f64 * step;
                    let nb = -PI + ((ib as i64 + db).rem_euclid(resolution as i64)) as f64 * step;
                    if energy_at(na, nb) < e {
                        is_min = false;
                        break 'neigh;
                    }
                }
            }
            if is_min {
                minima.push((a, b));
            }
        }
    }
    minima
}

#[test]
fn frustrated_ring_has_two_chiral_equilibria() {
    // antiferromagnetic triangle with one clamped unit: the two chiral states
    // (±2π/3, ∓2π/3) relative to the clamp are the only stable fixed points
    let topo = NetworkTopology::all_to_all(1, 1, 1).unwrap();
    let mut params = ModelParameters::zeros(&topo);
    params.weights.fill(-1.0);

    let minima = grid_local_minima(&params, &topo, 0.0, 241);
    assert_eq!(minima.len(), 2, "grid oracle found {minima:?}");
    for (a, b) in &minima {
        let expected_mag = 2.0 * PI / 3.0;
        assert!(
            (a.abs() - expected_mag).abs() < 0.05 && (b.abs() - expected_mag).abs() < 0.05,
            "unexpected minimum ({a}, {b})"
        );
        assert!(a * b < 0.0, "chiral states have opposite signs: ({a}, {b})");
    }

    let census = enumerate_equilibria(
        &params,
        &topo,
        &[0.0],
        50,
        1e-2,
        7,
        &IntegratorConfig::default(),
    )
    .unwrap();
    assert_eq!(census.clusters.len(), 2, "expected the two chiral states");
    assert_eq!(census.failed_trials, 0);
    let total: usize = census.clusters.iter().map(|c| c.count).sum();
    assert_eq!(total + census.non_converged, 50);

    // every relaxed equilibrium matches one of the grid minima
    for cluster in &census.clusters {
        let eq = &cluster.representative.phases;
        let matched = minima.iter().any(|&(a, b)| {
            circular_distance(eq[1], a) < 0.05 && circular_distance(eq[2], b) < 0.05
        });
        assert!(matched, "equilibrium {eq:?} not found by grid oracle");
    }
}

#[test]
fn stationarity_of_converged_states() {
    // relaxing a converged state again must not move it
    for seed in [3u64, 14, 159] {
        let (topo, params, init, inputs) = random_network(seed);
        let cfg = IntegratorConfig::default();
        let first = relax(&init, &params, &topo, 0.0, None, &cfg, &inputs).unwrap();
        assert!(first.converged);
        let second = relax(&first.phases, &params, &topo, 0.0, None, &cfg, &inputs).unwrap();
        let moved = first.phases.max_circular_distance(&second.phases);
        assert!(
            moved < cfg.equilibrium_grad_tol,
            "seed {seed}: moved {moved:.3e}"
        );
    }
}
