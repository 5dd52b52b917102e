//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.
//!
//! `STEERQAA_FULL=1` runs criteria 6 and 7 at L = 12 instead of L = 8.
//! `STEERQAA_CRITERIA=1,2,8` restricts the run to the listed criteria.

use std::cell::Cell;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use steerqaa::ensemble::{run_ensemble, run_ensemble_with_threads, EnsembleResult, EnsembleSpec};
use steerqaa::evolution::{evolve, evolve_hamiltonian, IntegratorConfig};
use steerqaa::model::{AnnealingHamiltonian, Boundary, DisorderInstance};
use steerqaa::schedule::Schedule;
use steerqaa::spin::C64;
use steerqaa::steering::{
    exact_counterdiabatic, single_spin_steering_coefficient, single_spin_steering_from_field,
    EffectiveField, SteeringMode,
};

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

thread_local! {
    static MAX_DRIFT: Cell<f64> = const { Cell::new(0.0) };
    static RUNS: Cell<usize> = const { Cell::new(0) };
}

fn record(drift: f64, runs: usize) {
    MAX_DRIFT.with(|d| d.set(d.get().max(drift)));
    RUNS.with(|r| r.set(r.get() + runs));
}

fn ensemble(spec: EnsembleSpec) -> Result<EnsembleResult, String> {
    let r = run_ensemble(&spec, &IntegratorConfig::default()).map_err(|e| e.to_string())?;
    record(r.max_norm_drift, r.n_realizations);
    Ok(r)
}

fn spec(l: usize, j: f64, t_a: f64, mode: SteeringMode, n: usize) -> EnsembleSpec {
    EnsembleSpec {
        n_realizations: n,
        master_seed: SEED,
        ..EnsembleSpec::new(l, j, t_a, mode)
    }
}

fn full_size() -> bool {
    std::env::var("STEERQAA_FULL").is_ok_and(|v| !v.is_empty() && v != "0")
}

fn combined(a: f64, b: f64) -> f64 {
    (a * a + b * b).sqrt()
}

fn criterion_1() -> Outcome {
    let mut worst = f64::INFINITY;
    for t_a in [0.1, 1.0, 10.0, 100.0] {
        let s = EnsembleSpec {
            boundary: Boundary::OpenChain,
            ..spec(1, 0.0, t_a, SteeringMode::SingleSpin, 100)
        };
        let r = ensemble(s)?;
        let min = r.records.iter().map(|x| x.p1).fold(f64::INFINITY, f64::min);
        if min < 1.0 - 1e-9 {
            return Err(format!("t_a={t_a}: min P1 = {min:.12}"));
        }
        worst = worst.min(min);
    }
    Ok(format!("min P1 over 400 runs = {worst:.12}"))
}

fn criterion_2() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut count = 0;
    for l in [2, 3, 4] {
        for j in [0.0, 0.1, 1.0] {
            for boundary in [Boundary::OpenChain, Boundary::Ring] {
                if boundary == Boundary::Ring && l < 3 {
                    continue;
                }
                for t_a in [0.1, 1.0, 10.0] {
                    let s = EnsembleSpec {
                        boundary,
                        ..spec(l, j, t_a, SteeringMode::EXACT, 5)
                    };
                    let r = ensemble(s)?;
                    let min = r.records.iter().map(|x| x.p1).fold(f64::INFINITY, f64::min);
                    if min < 1.0 - 1e-6 {
                        return Err(format!("L={l} J={j} {boundary:?} t_a={t_a}: min P1 = {min:.9}"));
                    }
                    worst = worst.min(min);
                    count += r.n_realizations;
                }
            }
        }
    }
    Ok(format!("min P1 over {count} runs = {worst:.9}"))
}

fn criterion_3() -> Outcome {
    let mut worst = f64::INFINITY;
    for t_a in [0.1, 1.0] {
        let r = ensemble(spec(10, 0.0, t_a, SteeringMode::SingleSpin, 100))?;
        let min = r.records.iter().map(|x| x.p1).fold(f64::INFINITY, f64::min);
        if min < 1.0 - 1e-6 {
            return Err(format!("t_a={t_a}: min P1 = {min:.9}"));
        }
        worst = worst.min(min);
    }
    Ok(format!("min P1 over 200 runs = {worst:.9}"))
}

fn criterion_4() -> Outcome {
    // (J, mode, target N99, target S41)
    let targets = [
        (0.1, SteeringMode::SingleSpin, 21.0, 0.997),
        (0.3, SteeringMode::SingleSpin, 398.0, 0.81),
        (0.1, SteeringMode::None, 3949.0, 0.03),
        (0.3, SteeringMode::None, 3929.0, 0.04),
    ];
    let mut lines = Vec::new();
    let mut ok = true;
    for (j, mode, n_target, s_target) in targets {
        let s = EnsembleSpec {
            compute_levels: true,
            ..spec(12, j, 1.0, mode, 500)
        };
        let r = ensemble(s)?;
        let n99 = r.states_for_mass(0.99).ok_or("S_N never reaches 0.99")?;
        let s41 = r.mass_within(41).ok_or("missing level statistics")?;
        let n_ok = (n99 as f64 - n_target).abs() <= 0.5 * n_target;
        let s_ok = (s41 - s_target).abs() <= 0.03;
        ok &= n_ok && s_ok;
        lines.push(format!(
            "{mode} J={j}: N99={n99} (target {n_target}{}) S41={:.1}% (target {:.1}%{})",
            if n_ok { "" } else { ", out of range" },
            100.0 * s41,
            100.0 * s_target,
            if s_ok { "" } else { ", out of range" },
        ));
    }
    let text = lines.join("; ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn criterion_5() -> Outcome {
    let mut lines = Vec::new();
    let mut low = None;
    let mut high = None;
    for j in [0.1, 0.3, 1.0, 2.0, 5.0] {
        let steered = ensemble(spec(8, j, 1.0, SteeringMode::SingleSpin, 200))?;
        let plain = ensemble(spec(8, j, 1.0, SteeringMode::None, 200))?;
        lines.push(format!("J={j}: {:.4} vs {:.4}", steered.mean_p1, plain.mean_p1));
        if j == 0.1 {
            low = Some((steered.mean_p1, plain.mean_p1));
        }
        if j == 5.0 {
            high = Some((steered, plain));
        }
    }
    let (s, p) = low.expect("J=0.1 in sweep");
    let (hs, hp) = high.expect("J=5 in sweep");
    let ratio_ok = s >= 5.0 * p;
    let band = 2.0 * combined(hs.stderr_p1, hp.stderr_p1);
    let agree = (hs.mean_p1 - hp.mean_p1).abs() <= band;
    let text = format!(
        "{}; ratio at J=0.1 = {:.2}; |diff| at J=5 = {:.4} (2 stderr = {:.4})",
        lines.join(", "),
        s / p,
        (hs.mean_p1 - hp.mean_p1).abs(),
        band
    );
    if ratio_ok && agree {
        Ok(text)
    } else {
        Err(text)
    }
}

fn criterion_6() -> Outcome {
    let l = if full_size() { 12 } else { 8 };
    let mut lines = Vec::new();
    let mut ok = true;
    for j in [0.1, 0.3] {
        let single = ensemble(spec(l, j, 10.0, SteeringMode::SingleSpin, 200))?;
        let none = ensemble(spec(l, j, 10.0, SteeringMode::None, 200))?;
        let (fs, fn_, fv) = (1.0 - single.mean_p1, 1.0 - none.mean_p1, 1.0 - single.mean_naive_success);
        let vs_none = fn_ - fs > 2.0 * combined(single.stderr_p1, none.stderr_p1);
        let vs_naive = fv - fs > 2.0 * combined(single.stderr_p1, single.stderr_naive_success);
        ok &= vs_none && vs_naive;
        lines.push(format!(
            "L={l} J={j} t_a=10: 1-P1 single {fs:.4}, none {fn_:.4}, naive {fv:.4}"
        ));
    }
    let text = lines.join("; ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn criterion_7() -> Outcome {
    let l = if full_size() { 12 } else { 8 };
    let mut lines = Vec::new();
    let mut ok = true;
    for j in [0.1, 0.2] {
        let cluster = ensemble(spec(l, j, 128.0, SteeringMode::Cluster, 200))?;
        let single = ensemble(spec(l, j, 128.0, SteeringMode::SingleSpin, 200))?;
        let none = ensemble(spec(l, j, 128.0, SteeringMode::None, 200))?;
        let holds = cluster.mean_p1 >= single.mean_p1 - 2.0 * combined(cluster.stderr_p1, single.stderr_p1)
            && cluster.mean_p1 > none.mean_p1
            && single.mean_p1 > none.mean_p1;
        ok &= holds;
        lines.push(format!(
            "L={l} J={j}: cluster {:.4}±{:.4}, single {:.4}±{:.4}, none {:.4}±{:.4}",
            cluster.mean_p1, cluster.stderr_p1, single.mean_p1, single.stderr_p1, none.mean_p1, none.stderr_p1
        ));
    }
    let text = lines.join("; ");
    if ok {
        Ok(text)
    } else {
        Err(text)
    }
}

fn random_instance(rng: &mut ChaCha8Rng, l: usize, j: f64, boundary: Boundary) -> DisorderInstance {
    let h = (0..l).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DisorderInstance::new(h, j, boundary).unwrap()
}

fn dense_propagate(ham: &AnnealingHamiltonian, dt: f64) -> Vec<C64> {
    let t_a = ham.anneal_time();
    let steps = (t_a / dt).round() as usize;
    let dt = t_a / steps as f64;
    let mut psi = DVector::from_vec(ham.instance().initial_ground_state().into_amplitudes());
    for s in 0..steps {
        let tau = ((s as f64 + 0.5) * dt / t_a).min(1.0);
        let h: DMatrix<C64> = ham.to_dense(tau).unwrap();
        psi = (h * C64::new(0.0, -dt)).exp() * psi;
    }
    psi.as_slice().to_vec()
}

fn check_closed_form(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..100 {
        let tau: f64 = rng.random_range(0.0..=1.0);
        let h0: f64 = rng.random_range(0.1..20.0);
        let hk: f64 = rng.random_range(-1.0..=1.0);
        let t_a: f64 = 10f64.powf(rng.random_range(-2.0..3.0));
        let v = Schedule::COS_SIN.evaluate(tau).map_err(|e| e.to_string())?;
        let field = EffectiveField {
            b: [2.0 * h0 * v.f_i, 0.0, 2.0 * hk * v.f_f],
            db_dt: [2.0 * h0 * v.df_i / t_a, 0.0, 2.0 * hk * v.df_f / t_a],
        };
        let c = single_spin_steering_from_field(&field).map_err(|e| e.to_string())?;
        let closed = single_spin_steering_coefficient(tau, h0, hk, t_a);
        if (c[1] - closed).abs() > 1e-12 * (1.0 + closed.abs()) || c[0] != 0.0 || c[2] != 0.0 {
            return Err(format!("closed form {closed} vs field formula {c:?} at tau={tau}"));
        }
    }
    Ok(())
}

fn check_exact_single_spin(rng: &mut ChaCha8Rng) -> Result<(), String> {
    for _ in 0..50 {
        let inst = random_instance(rng, 1, 0.0, Boundary::OpenChain);
        let tau: f64 = rng.random_range(0.01..0.99);
        let t_a: f64 = 10f64.powf(rng.random_range(-1.0..2.0));
        let op = exact_counterdiabatic(&inst, &Schedule::COS_SIN, tau, t_a).map_err(|e| e.to_string())?;
        let c = single_spin_steering_coefficient(tau, inst.h0(), inst.fields()[0], t_a);
        let k = op.generator();
        // c σ_y = i K with K = [[0, -c], [c, 0]]
        let err = (k[(0, 1)] + c).abs().max((k[(1, 0)] - c).abs()).max(k[(0, 0)].abs()).max(k[(1, 1)].abs());
        if err > 1e-10 {
            return Err(format!("exact vs single-spin at L=1 differ by {err:e}"));
        }
    }
    Ok(())
}

fn check_dense(rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let cases = [
        (1, Boundary::OpenChain, SteeringMode::SingleSpin),
        (2, Boundary::OpenChain, SteeringMode::None),
        (2, Boundary::OpenChain, SteeringMode::EXACT),
        (3, Boundary::Ring, SteeringMode::SingleSpin),
        (3, Boundary::Ring, SteeringMode::Cluster),
        (3, Boundary::OpenChain, SteeringMode::EXACT),
    ];
    let mut worst = 1.0f64;
    for (l, boundary, mode) in cases {
        let inst = random_instance(rng, l, 0.3, boundary);
        let ham = AnnealingHamiltonian::new(&inst, Schedule::COS_SIN, mode, 1.0).map_err(|e| e.to_string())?;
        let oracle = dense_propagate(&ham, 1e-4);
        let run = evolve_hamiltonian(&ham, &IntegratorConfig::default(), false).map_err(|e| e.to_string())?;
        record(run.norm_drift, 1);
        let overlap: C64 = run.final_state.amplitudes().iter().zip(&oracle).map(|(a, b)| a.conj() * b).sum();
        let f = overlap.norm_sqr();
        if f < 1.0 - 1e-6 {
            return Err(format!("dense propagator fidelity {f} at L={l} {mode}"));
        }
        worst = worst.min(f);
    }
    Ok(worst)
}

fn check_flip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let cfg = IntegratorConfig::default();
    for l in [4, 7] {
        let inst = random_instance(rng, l, 0.3, Boundary::Ring);
        for mode in [SteeringMode::None, SteeringMode::SingleSpin] {
            let a = evolve(&inst, &Schedule::COS_SIN, mode, 2.0, &cfg).map_err(|e| e.to_string())?;
            let b = evolve(&inst.negated(), &Schedule::COS_SIN, mode, 2.0, &cfg).map_err(|e| e.to_string())?;
            record(a.norm_drift.max(b.norm_drift), 2);
            if a.p1.to_bits() != b.p1.to_bits() {
                return Err(format!("flip symmetry broken at L={l} {mode}: {} vs {}", a.p1, b.p1));
            }
        }
    }
    Ok(())
}

fn check_threads() -> Result<(), String> {
    let s = EnsembleSpec {
        compute_levels: true,
        ..spec(6, 0.3, 1.0, SteeringMode::SingleSpin, 64)
    };
    let cfg = IntegratorConfig::default();
    let one = run_ensemble_with_threads(&s, &cfg, 1).map_err(|e| e.to_string())?;
    record(one.max_norm_drift, one.n_realizations);
    for threads in [2, 4] {
        let other = run_ensemble_with_threads(&s, &cfg, threads).map_err(|e| e.to_string())?;
        if other != one {
            return Err(format!("ensemble differs between 1 and {threads} threads"));
        }
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    check_closed_form(&mut rng)?;
    check_exact_single_spin(&mut rng)?;
    let fidelity = check_dense(&mut rng)?;
    check_flip(&mut rng)?;
    check_threads()?;
    let drift = MAX_DRIFT.with(Cell::get);
    let runs = RUNS.with(Cell::get);
    if drift > 1e-9 {
        return Err(format!("max norm drift {drift:e} over {runs} runs"));
    }
    Ok(format!(
        "max norm drift {drift:.2e} over {runs} runs; worst dense fidelity {fidelity:.9}"
    ))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "single spin exactness", criterion_1),
        (2, "exact steering oracle", criterion_2),
        (3, "uncoupled chain exactness", criterion_3),
        (4, "level statistics at L=12", criterion_4),
        (5, "crossover in J", criterion_5),
        (6, "superiority spot checks", criterion_6),
        (7, "cluster improvement", criterion_7),
        (8, "numerical integrity", criterion_8),
    ];
    let selected: Option<Vec<u32>> = std::env::var("STEERQAA_CRITERIA")
        .ok()
        .map(|v| v.split(',').filter_map(|x| x.trim().parse().ok()).collect());
    let mut failed = 0;
    for (n, name, run) in criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(&n)) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n} PASS ({name}, {secs:.0}s): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n} FAIL ({name}, {secs:.0}s): {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
