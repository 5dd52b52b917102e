//! The full annealing Hamiltonian `f_i(τ) H_i + f_f(τ) H_f + H_s(τ)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::DisorderInstance;
use crate::schedule::Schedule;
use crate::spin::{StateVector, C64};
use crate::steering::{self, Cluster, SteeringMode, DEFAULT_GAP_TOL};

/// Matrix-free `H_qaa(τ)` for one instance, schedule, steering mode and
/// annealing time. `H_f` is held as its diagonal table.
#[derive(Debug, Clone)]
pub struct AnnealingHamiltonian {
    inst: DisorderInstance,
    table: Arc<[f64]>,
    table_range: (f64, f64),
    schedule: Schedule,
    mode: SteeringMode,
    t_a: f64,
    cluster: Option<(Cluster, Vec<f64>)>,
    steering_cap: Option<f64>,
    gap_tol: f64,
}

impl AnnealingHamiltonian {
    pub fn new(
        inst: &DisorderInstance,
        schedule: Schedule,
        mode: SteeringMode,
        t_a: f64,
    ) -> Result<Self> {
        steering::check_anneal_time(t_a)?;
        inst.validate()?;
        mode.check_size(inst.n_spins(), inst.boundary())?;
        let cluster = match mode {
            SteeringMode::Cluster => {
                let c = steering::select_cluster(inst)?;
                Some((c, steering::trio_table(inst, &c)))
            }
            _ => None,
        };
        let table: Arc<[f64]> = inst.problem_energy_table().into();
        let table_range = table
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
        Ok(Self {
            table,
            table_range,
            inst: inst.clone(),
            schedule,
            mode,
            t_a,
            cluster,
            steering_cap: None,
            gap_tol: DEFAULT_GAP_TOL,
        })
    }

    /// Clamp every single-spin `σ_y` coefficient to `[-cap, cap]`.
    pub fn with_steering_cap(mut self, cap: Option<f64>) -> Result<Self> {
        if let Some(c) = cap {
            if !(c > 0.0) {
                return Err(Error::InvalidParameter(format!("steering cap must be positive, got {c}")));
            }
        }
        self.steering_cap = cap;
        Ok(self)
    }

    pub fn with_gap_tol(mut self, gap_tol: f64) -> Self {
        self.gap_tol = gap_tol;
        self
    }

    pub fn instance(&self) -> &DisorderInstance {
        &self.inst
    }

    pub fn energy_table(&self) -> &[f64] {
        &self.table
    }

    pub fn mode(&self) -> SteeringMode {
        self.mode
    }

    pub fn anneal_time(&self) -> f64 {
        self.t_a
    }

    pub fn cluster(&self) -> Option<Cluster> {
        self.cluster.as_ref().map(|(c, _)| *c)
    }

    pub fn dim(&self) -> usize {
        self.table.len()
    }

    fn capped(&self, c: f64) -> f64 {
        match self.steering_cap {
            Some(cap) => c.clamp(-cap, cap),
            None => c,
        }
    }

    pub fn apply(&self, tau: f64, input: &StateVector) -> Result<StateVector> {
        self.schedule.evaluate(tau)?;
        self.inst.check_state(input)?;
        let mut out = StateVector::zeros(self.inst.n_spins());
        self.apply_into(tau, input.amplitudes(), out.amplitudes_mut())?;
        Ok(out)
    }

    /// Writes `H_qaa(τ) psi` into `out`. `tau` must lie in `[0, 1]`.
    pub fn apply_into(&self, tau: f64, psi: &[C64], out: &mut [C64]) -> Result<()> {
        self.frozen(tau)?.apply(psi, out);
        Ok(())
    }

    /// `H_qaa` at one τ as a standalone operator.
    pub fn frozen(&self, tau: f64) -> Result<FrozenHamiltonian> {
        let v = self.schedule.evaluate_unchecked(tau);
        let n = self.inst.n_spins();
        let mut sigma_y = vec![0.0; n];
        if matches!(self.mode, SteeringMode::SingleSpin | SteeringMode::Cluster) {
            for (c, &h) in sigma_y.iter_mut().zip(self.inst.fields()) {
                *c = self.capped(steering::single_spin_steering_coefficient(
                    tau,
                    self.inst.h0(),
                    h,
                    self.t_a,
                ));
            }
        }
        let mut frozen = FrozenHamiltonian {
            table: Arc::clone(&self.table),
            table_range: self.table_range,
            transverse: v.f_i * self.inst.h0(),
            diag_scale: v.f_f,
            sigma_y,
            dense: None,
            trio: None,
        };
        match self.mode {
            SteeringMode::Exact { .. } => {
                let op = steering::exact_from_table(
                    &self.inst,
                    &self.table,
                    &self.schedule,
                    tau,
                    self.t_a,
                    self.gap_tol,
                )?;
                frozen.dense = Some(op.generator().clone());
            }
            SteeringMode::Cluster => {
                let (cluster, trio_table) = self.cluster.as_ref().expect("cluster selected");
                let cs = steering::cluster_from_parts(
                    &self.inst,
                    *cluster,
                    trio_table,
                    &self.schedule,
                    tau,
                    self.t_a,
                    self.gap_tol,
                )?;
                frozen.sigma_y = cs.single;
                frozen.trio = Some((*cluster, cs.trio));
            }
            SteeringMode::None | SteeringMode::SingleSpin => {}
        }
        Ok(frozen)
    }

    /// Dense matrix of `H_qaa(τ)`, built column by column.
    pub fn to_dense(&self, tau: f64) -> Result<DMatrix<C64>> {
        let dim = self.dim();
        let n = self.inst.n_spins();
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let out = self.apply(tau, &StateVector::basis(n, col)?)?;
            for (row, v) in out.amplitudes().iter().enumerate() {
                m[(row, col)] = *v;
            }
        }
        Ok(m)
    }
}

/// `H_qaa` (or a linear combination of `H_qaa` at several times) frozen into
/// a static operator: transverse field, scaled diagonal, per-site `σ_y`
/// coefficients and an optional dense steering generator.
#[derive(Debug, Clone)]
pub struct FrozenHamiltonian {
    table: Arc<[f64]>,
    table_range: (f64, f64),
    transverse: f64,
    diag_scale: f64,
    sigma_y: Vec<f64>,
    /// `i·dense` acting on the whole space.
    dense: Option<DMatrix<f64>>,
    /// `i·trio` acting on the cluster sites.
    trio: Option<(Cluster, DMatrix<f64>)>,
}

impl FrozenHamiltonian {
    pub fn dim(&self) -> usize {
        self.table.len()
    }

    /// `Σ w_j H_j` over operators sharing one instance and steering mode.
    pub fn combine(terms: &[(f64, &FrozenHamiltonian)]) -> FrozenHamiltonian {
        let (w0, first) = terms[0];
        let scale = |m: &DMatrix<f64>, w: f64| m * w;
        let mut out = FrozenHamiltonian {
            table: Arc::clone(&first.table),
            table_range: first.table_range,
            transverse: w0 * first.transverse,
            diag_scale: w0 * first.diag_scale,
            sigma_y: first.sigma_y.iter().map(|c| w0 * c).collect(),
            dense: first.dense.as_ref().map(|m| scale(m, w0)),
            trio: first.trio.as_ref().map(|(c, m)| (*c, scale(m, w0))),
        };
        for &(w, op) in &terms[1..] {
            out.transverse += w * op.transverse;
            out.diag_scale += w * op.diag_scale;
            for (a, b) in out.sigma_y.iter_mut().zip(&op.sigma_y) {
                *a += w * b;
            }
            if let (Some(a), Some(b)) = (out.dense.as_mut(), op.dense.as_ref()) {
                *a += b * w;
            }
            if let (Some((_, a)), Some((_, b))) = (out.trio.as_mut(), op.trio.as_ref()) {
                *a += b * w;
            }
        }
        out
    }

    /// Writes the operator applied to `psi` into `out`.
    pub fn apply(&self, psi: &[C64], out: &mut [C64]) {
        self.local_terms(psi, out);
        if let Some(k) = &self.dense {
            add_dense_generator(k, psi, out);
        }
        if let Some((cluster, trio)) = &self.trio {
            steering::add_trio_term(cluster, trio, psi, out);
        }
    }

    /// Transverse field, diagonal problem term and per-site `σ_y`
    /// coefficients. One butterfly pass per site; every amplitude sums its
    /// terms in ascending site order.
    fn local_terms(&self, psi: &[C64], out: &mut [C64]) {
        let diag_scale = self.diag_scale;
        for ((o, e), p) in out.iter_mut().zip(self.table.iter()).zip(psi) {
            *o = (diag_scale * e) * p;
        }
        for (k, &c) in self.sigma_y.iter().enumerate() {
            // amplitude with the bit clear couples to its partner by T - ic
            let clear = C64::new(self.transverse, -c);
            let set = C64::new(self.transverse, c);
            let half = 1usize << k;
            for (o, p) in out.chunks_exact_mut(2 * half).zip(psi.chunks_exact(2 * half)) {
                let (o_lo, o_hi) = o.split_at_mut(half);
                let (p_lo, p_hi) = p.split_at(half);
                for i in 0..half {
                    o_lo[i] += clear * p_hi[i];
                    o_hi[i] += set * p_lo[i];
                }
            }
        }
    }

    /// Interval containing the spectrum: the diagonal range widened by a
    /// bound on the norm of the off-diagonal part.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.table_range;
        let (d_lo, d_hi) = if self.diag_scale >= 0.0 {
            (self.diag_scale * lo, self.diag_scale * hi)
        } else {
            (self.diag_scale * hi, self.diag_scale * lo)
        };
        let mut radius: f64 = self
            .sigma_y
            .iter()
            .map(|c| self.transverse.hypot(*c))
            .sum();
        if let Some(k) = &self.dense {
            radius += max_row_sum(k);
        }
        if let Some((_, trio)) = &self.trio {
            radius += max_row_sum(trio);
        }
        (d_lo - radius, d_hi + radius)
    }
}

fn max_row_sum(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `out += i K psi` for a dense real `K`.
fn add_dense_generator(k: &DMatrix<f64>, psi: &[C64], out: &mut [C64]) {
    let n = k.nrows();
    for (row, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = C64::new(0.0, 0.0);
        for (col, p) in psi.iter().enumerate().take(n) {
            acc += k[(row, col)] * p;
        }
        *o += C64::new(-acc.im, acc.re);
    }
}

/// `[f_i(τ) H_i + f_f(τ) H_f + H_s(τ)] |input⟩`.
pub fn apply_total_hamiltonian(
    inst: &DisorderInstance,
    schedule: &Schedule,
    mode: SteeringMode,
    tau: f64,
    t_a: f64,
    input: &StateVector,
) -> Result<StateVector> {
    AnnealingHamiltonian::new(inst, *schedule, mode, t_a)?.apply(tau, input)
}
