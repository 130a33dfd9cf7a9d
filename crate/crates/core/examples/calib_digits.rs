// Scratch calibration harness for the digits task (not part of the deliverable).
use kuramoto_ep::dynamics::IntegratorConfig;
use kuramoto_ep::metrics::evaluate_accuracy;
use kuramoto_ep::seeds;
use kuramoto_ep::tasks::{load_digits, DigitsBatches};
use kuramoto_ep::topology::NetworkTopology;
use kuramoto_ep::trainer::{init_parameters, train, InitScheme, TrainConfig, TrainHooks};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let iters: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let grad_tol: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1e-6);
    let rel_tol: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(1e-6);
    let layered: bool = args.get(4).map(|s| s == "layered").unwrap_or(true);
    let eval_subset: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(200);

    let ds = load_digits("data/optdigits.tes").unwrap();
    println!(
        "dataset: {} train, {} test",
        ds.train_len(),
        ds.test_len()
    );
    let topo = if layered {
        NetworkTopology::layered(&[64, 20, 10]).unwrap()
    } else {
        NetworkTopology::all_to_all(64, 11, 10).unwrap()
    };
    println!("params: {}", topo.parameter_count());

    let integrator = IntegratorConfig {
        rel_tol,
        abs_tol: rel_tol * 1e-2,
        equilibrium_grad_tol: grad_tol,
        ..IntegratorConfig::default()
    };
    let seed = 1u64;
    let config = TrainConfig {
        beta: 0.1,
        eta: 0.1,
        m_init: 1,
        m_data: 300,
        n_iterations: iters,
        rng_seed: seed,
        eval_every: 0,
        integrator,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, seeds::stream::PARAMS));
    let params = init_parameters(&topo, InitScheme::Digits, &mut rng);
    let source = DigitsBatches::new(&ds);

    let test = ds.test_samples();
    let test = &test[..eval_subset.min(test.len())];

    let t0 = Instant::now();
    let mut last = Instant::now();
    let mut hooks = TrainHooks {
        on_record: Some(Box::new(move |r| {
            println!(
                "iter {:4}  D {:>10.4}  nc {:3}  ({:.2}s)",
                r.iteration,
                r.mean_distance.unwrap_or(f64::NAN),
                r.non_converged,
                last.elapsed().as_secs_f64()
            );
            last = Instant::now();
        })),
        ..TrainHooks::default()
    };
    let out = train(&source, &topo, params, &config, &mut hooks).unwrap();
    println!("training: {:.1}s", t0.elapsed().as_secs_f64());

    let te = Instant::now();
    let mut eval_rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, seeds::stream::EVAL));
    let outcome = evaluate_accuracy(&out.params, &topo, test, &integrator, &mut eval_rng, 1);
    println!(
        "accuracy on {} test samples: {:.3} ({} failed, {} nc) in {:.1}s",
        test.len(),
        outcome.accuracy,
        outcome.failed_relaxations,
        outcome.non_converged,
        te.elapsed().as_secs_f64()
    );
}
