// Scratch calibration harness (not part of the deliverable).
use kuramoto_ep::seeds;
use kuramoto_ep::tasks::XorTask;
use kuramoto_ep::topology::NetworkTopology;
use kuramoto_ep::trainer::{init_parameters, train, InitScheme, TrainConfig, TrainHooks};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n_units: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let iters: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1000);
    let n_seeds: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(20);
    let beta: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.1);

    let topo = NetworkTopology::all_to_all(2, n_units - 3, 1).unwrap();
    let task = XorTask::new();
    let start = Instant::now();
    let mut ok = 0;
    for seed in 0..n_seeds {
        let t0 = Instant::now();
        let config = TrainConfig {
            beta,
            eta: 0.1,
            m_init: 1,
            m_data: 4,
            n_iterations: iters,
            rng_seed: seed,
            eval_every: 0,
            ..TrainConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seeds::derive(seed, seeds::stream::PARAMS));
        let params = init_parameters(&topo, InitScheme::Xor, &mut rng);
        let out = train(&task, &topo, params, &config, &mut TrainHooks::default()).unwrap();
        let final_d = out.records.last().unwrap().mean_distance.unwrap();
        let mid_d = out.records[iters.min(300)].mean_distance.unwrap();
        if final_d < 0.05 {
            ok += 1;
        }
        println!(
            "seed {seed}: D@300 {mid_d:.4e}  final D {final_d:.4e}  ({:.2}s)",
            t0.elapsed().as_secs_f64()
        );
    }
    println!(
        "converged {ok}/{n_seeds} in {:.1}s total",
        start.elapsed().as_secs_f64()
    );
}
