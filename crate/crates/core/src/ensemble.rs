//! Seeded disorder ensembles: instance generation, parallel evolution and
//! order-stable aggregation.
//!
//! Realization `i` of an ensemble draws its fields from a ChaCha8 stream
//! selected by `(master_seed, i)`; site `k` takes the `k`-th uniform draw of
//! that stream. Results are gathered by index and reduced in ascending order
//! with compensated summation, so the output does not depend on the number
//! of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{evolve_hamiltonian, IntegratorConfig};
use crate::hamiltonian::AnnealingHamiltonian;
use crate::model::{Boundary, DisorderInstance, DEFAULT_GROUND_TOL, DEFAULT_H0, DEFAULT_W};
use crate::schedule::Schedule;
use crate::steering::SteeringMode;

/// Realizations evolved per parallel batch before the ordered reduction.
const BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    #[serde(rename = "L")]
    pub n_spins: usize,
    #[serde(rename = "J")]
    pub coupling: f64,
    #[serde(rename = "W")]
    pub disorder_width: f64,
    pub h0: f64,
    pub boundary: Boundary,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub t_a: f64,
    pub mode: SteeringMode,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub compute_levels: bool,
    /// Clamp on single-spin steering coefficients, if any.
    #[serde(default)]
    pub steering_cap: Option<f64>,
    /// Negate every drawn field (symmetry checks).
    #[serde(default)]
    pub flip_fields: bool,
}

impl EnsembleSpec {
    /// Defaults: `W = 1`, `h0 = 10`, ring boundary, 10⁴ realizations.
    pub fn new(n_spins: usize, coupling: f64, t_a: f64, mode: SteeringMode) -> Self {
        Self {
            n_spins,
            coupling,
            disorder_width: DEFAULT_W,
            h0: DEFAULT_H0,
            boundary: Boundary::Ring,
            n_realizations: 10_000,
            master_seed: 0,
            t_a,
            mode,
            schedule: Schedule::COS_SIN,
            compute_levels: false,
            steering_cap: None,
            flip_fields: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::InvalidParameter("n_realizations must be at least 1".into()));
        }
        if !(self.t_a > 0.0 && self.t_a.is_finite()) {
            return Err(Error::InvalidParameter(format!("t_a must be positive, got {}", self.t_a)));
        }
        // a zero-field probe catches every structural problem up front
        DisorderInstance::with_params(
            vec![0.0; self.n_spins],
            self.coupling,
            self.boundary,
            self.h0,
            self.disorder_width,
        )?;
        self.mode.check_size(self.n_spins, self.boundary)
    }
}

/// Instance `index` of the ensemble; fields are i.i.d. uniform on `[-W, W]`.
pub fn draw_instance(spec: &EnsembleSpec, index: usize) -> Result<DisorderInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.master_seed);
    rng.set_stream(index as u64);
    let w = spec.disorder_width;
    let sign = if spec.flip_fields { -1.0 } else { 1.0 };
    let fields = (0..spec.n_spins)
        .map(|_| sign * rng.random_range(-w..=w))
        .collect();
    DisorderInstance::with_params(fields, spec.coupling, spec.boundary, spec.h0, w)
}

/// Audit line for one realization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub seed: u64,
    #[serde(rename = "P1")]
    pub p1: f64,
    pub naive: f64,
    pub norm_drift: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub n_realizations: usize,
    pub mean_p1: f64,
    pub stderr_p1: f64,
    pub mean_naive_success: f64,
    pub stderr_naive_success: f64,
    /// Level-resolved mean `P̄_n`, 1-based level `n` at entry `n-1`.
    pub mean_pn: Option<Vec<f64>>,
    /// Cumulative `S_N = Σ_{n≤N} P̄_n`.
    pub s_n: Option<Vec<f64>>,
    /// Level distribution of the naive configuration.
    pub naive_pn: Option<Vec<f64>>,
    pub max_norm_drift: f64,
    pub records: Vec<RealizationRecord>,
}

impl EnsembleResult {
    /// Smallest `N` with `S_N ≥ mass`.
    pub fn states_for_mass(&self, mass: f64) -> Option<usize> {
        self.s_n.as_deref().and_then(|s| states_for_mass(s, mass))
    }

    /// `S_N` for the given `N` (1-based, clamped to the level count).
    pub fn mass_within(&self, n: usize) -> Option<f64> {
        self.s_n.as_deref().and_then(|s| mass_within(s, n))
    }
}

/// Neumaier's compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

struct Outcome {
    p1: f64,
    naive: f64,
    norm_drift: f64,
    pn: Option<Vec<f64>>,
    naive_rank: Option<usize>,
}

fn run_one(spec: &EnsembleSpec, cfg: &IntegratorConfig, index: usize) -> Result<Outcome> {
    let inst = draw_instance(spec, index)?;
    let ham = AnnealingHamiltonian::new(&inst, spec.schedule, spec.mode, spec.t_a)?
        .with_steering_cap(spec.steering_cap)?;
    let run = evolve_hamiltonian(&ham, cfg, spec.compute_levels)?;
    let naive_rank = if spec.compute_levels {
        let spectrum = inst.sorted_spectrum();
        let naive = inst.naive_solution();
        // a degenerate naive level counts at its lowest rank
        let rank = spectrum.rank_of(naive).expect("every configuration is ranked");
        let energy = spectrum.energies[rank];
        spectrum.energies.iter().position(|&e| e >= energy - DEFAULT_GROUND_TOL)
    } else {
        None
    };
    Ok(Outcome {
        p1: run.p1,
        naive: inst.naive_success(),
        norm_drift: run.norm_drift,
        pn: run.pn,
        naive_rank,
    })
}

/// Runs the ensemble on the current rayon pool.
pub fn run_ensemble(spec: &EnsembleSpec, cfg: &IntegratorConfig) -> Result<EnsembleResult> {
    spec.validate()?;
    cfg.validate()?;
    let n = spec.n_realizations;
    let levels = 1usize << spec.n_spins;

    let mut p1_sum = CompensatedSum::default();
    let mut p1_sq = CompensatedSum::default();
    let mut naive_sum = CompensatedSum::default();
    let mut naive_sq = CompensatedSum::default();
    let mut pn_sum = spec.compute_levels.then(|| vec![CompensatedSum::default(); levels]);
    let mut naive_counts = spec.compute_levels.then(|| vec![0usize; levels]);
    let mut max_norm_drift = 0.0f64;
    let mut records = Vec::with_capacity(n);

    for start in (0..n).step_by(BATCH) {
        let end = (start + BATCH).min(n);
        let batch: Vec<Result<Outcome>> = (start..end)
            .into_par_iter()
            .map(|i| run_one(spec, cfg, i))
            .collect();
        for (offset, outcome) in batch.into_iter().enumerate() {
            let index = start + offset;
            let o = outcome.map_err(|e| Error::Realization {
                seed: spec.master_seed,
                index,
                source: Box::new(e),
            })?;
            p1_sum.add(o.p1);
            p1_sq.add(o.p1 * o.p1);
            naive_sum.add(o.naive);
            naive_sq.add(o.naive * o.naive);
            max_norm_drift = max_norm_drift.max(o.norm_drift);
            if let (Some(acc), Some(pn)) = (pn_sum.as_mut(), o.pn.as_ref()) {
                acc.iter_mut().zip(pn).for_each(|(a, &p)| a.add(p));
            }
            if let (Some(counts), Some(rank)) = (naive_counts.as_mut(), o.naive_rank) {
                counts[rank] += 1;
            }
            records.push(RealizationRecord {
                index,
                seed: spec.master_seed,
                p1: o.p1,
                naive: o.naive,
                norm_drift: o.norm_drift,
            });
        }
    }

    let nf = n as f64;
    let (mean_p1, stderr_p1) = mean_and_stderr(p1_sum.value(), p1_sq.value(), n);
    let (mean_naive, stderr_naive) = mean_and_stderr(naive_sum.value(), naive_sq.value(), n);
    let mean_pn: Option<Vec<f64>> = pn_sum.map(|acc| acc.iter().map(|a| a.value() / nf).collect());
    let s_n = mean_pn.as_deref().map(cumulative);
    let naive_pn = naive_counts.map(|c| c.iter().map(|&k| k as f64 / nf).collect());
    Ok(EnsembleResult {
        n_realizations: n,
        mean_p1,
        stderr_p1,
        mean_naive_success: mean_naive,
        stderr_naive_success: stderr_naive,
        mean_pn,
        s_n,
        naive_pn,
        max_norm_drift,
        records,
    })
}

/// Runs the ensemble on a dedicated pool of `threads` workers.
pub fn run_ensemble_with_threads(
    spec: &EnsembleSpec,
    cfg: &IntegratorConfig,
    threads: usize,
) -> Result<EnsembleResult> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_ensemble(spec, cfg))
}

/// Mean and `s / √n` with the `n-1` sample standard deviation.
fn mean_and_stderr(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

fn cumulative(values: &[f64]) -> Vec<f64> {
    let mut acc = CompensatedSum::default();
    values
        .iter()
        .map(|&v| {
            acc.add(v);
            acc.value()
        })
        .collect()
}

/// Element-wise mean of per-realization level distributions (each already
/// sorted by that instance's energies) and its prefix sums.
pub fn level_statistics(rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    let Some(first) = rows.first() else {
        return Err(Error::InvalidParameter("no realizations to aggregate".into()));
    };
    let len = first.len();
    let mut acc = vec![CompensatedSum::default(); len];
    for row in rows {
        if row.len() != len {
            return Err(Error::LengthMismatch {
                left: row.len(),
                right: len,
            });
        }
        acc.iter_mut().zip(row).for_each(|(a, &p)| a.add(p));
    }
    let n = rows.len() as f64;
    let mean: Vec<f64> = acc.iter().map(|a| a.value() / n).collect();
    let s = cumulative(&mean);
    Ok((mean, s))
}

/// Smallest 1-based `N` with `S_N ≥ mass`.
pub fn states_for_mass(s_n: &[f64], mass: f64) -> Option<usize> {
    s_n.iter().position(|&s| s >= mass).map(|i| i + 1)
}

pub fn mass_within(s_n: &[f64], n: usize) -> Option<f64> {
    let idx = n.min(s_n.len()).checked_sub(1)?;
    Some(s_n[idx])
}

/// Writes one JSON object per realization.
pub fn write_audit<W: std::io::Write>(records: &[RealizationRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
