use steerqaa::ensemble::{run_ensemble_with_threads, EnsembleSpec};
use steerqaa::evolution::IntegratorConfig;
use steerqaa::steering::SteeringMode;

fn spec(l: usize, j: f64, t_a: f64, mode: SteeringMode, n: usize) -> EnsembleSpec {
    EnsembleSpec {
        n_realizations: n,
        master_seed: 2024,
        ..EnsembleSpec::new(l, j, t_a, mode)
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let s = EnsembleSpec {
        compute_levels: true,
        ..spec(6, 0.3, 1.0, SteeringMode::SingleSpin, 40)
    };
    let cfg = IntegratorConfig::default();
    let one = run_ensemble_with_threads(&s, &cfg, 1).unwrap();
    for threads in [2, 3, 8] {
        let other = run_ensemble_with_threads(&s, &cfg, threads).unwrap();
        assert_eq!(one, other, "{threads} threads");
    }
}

#[test]
fn stderr_halves_when_quadrupling_realizations() {
    let cfg = IntegratorConfig::default();
    let small = run_ensemble_with_threads(&spec(5, 0.3, 1.0, SteeringMode::None, 100), &cfg, 2).unwrap();
    let large = run_ensemble_with_threads(&spec(5, 0.3, 1.0, SteeringMode::None, 400), &cfg, 2).unwrap();
    let ratio = large.stderr_p1 / small.stderr_p1;
    assert!((ratio - 0.5).abs() <= 0.15, "ratio {ratio}");
}

#[test]
fn flipping_every_field_leaves_the_mean_unchanged() {
    let cfg = IntegratorConfig::default();
    for mode in [SteeringMode::None, SteeringMode::SingleSpin] {
        let base = spec(5, 0.2, 1.0, mode, 30);
        let flipped = EnsembleSpec { flip_fields: true, ..base.clone() };
        let a = run_ensemble_with_threads(&base, &cfg, 2).unwrap();
        let b = run_ensemble_with_threads(&flipped, &cfg, 2).unwrap();
        assert_eq!(a.mean_p1.to_bits(), b.mean_p1.to_bits(), "{mode}");
        assert_eq!(a.mean_naive_success, b.mean_naive_success);
    }
}

#[test]
fn uncoupled_chain_without_steering_is_diabatic() {
    let cfg = IntegratorConfig::default();
    let r = run_ensemble_with_threads(&spec(6, 0.0, 1.0, SteeringMode::None, 40), &cfg, 2).unwrap();
    assert!(r.mean_p1 < 0.5, "{}", r.mean_p1);
    assert_eq!(r.mean_naive_success, 1.0);
    let steered = run_ensemble_with_threads(&spec(6, 0.0, 1.0, SteeringMode::SingleSpin, 40), &cfg, 2).unwrap();
    assert!(steered.mean_p1 >= 1.0 - 1e-6);
}
