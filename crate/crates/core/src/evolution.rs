//! Time integration of `i dψ/dt = H(t) ψ` (ħ = 1).
//!
//! Two adaptive integrators share one step controller:
//!
//! * [`Method::MagnusChebyshev`] (default): the fourth-order commutator-free
//!   Magnus scheme with two exponentials per step, each evaluated by a
//!   Chebyshev expansion. The local error is estimated by step doubling. The
//!   propagator is unitary to round-off, so long anneals keep their norm.
//! * [`Method::DormandPrince`]: the Dormand–Prince 5(4) embedded Runge–Kutta
//!   pair with first-same-as-last reuse. It slowly loses norm at the top of
//!   the spectrum, roughly `(‖H‖ dt)^6 / 1800` per step.
//!
//! The local error is measured in the max norm over amplitude components with
//! a mixed `atol + rtol·|ψ_i|` scale. The max norm does not depend on the
//! order of the components, so permuted problems take identical steps. The
//! state is never renormalized; the final norm drift is checked against
//! `norm_drift_tol` and reported.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::AnnealingHamiltonian;
use crate::model::{self, DisorderInstance, FrozenHamiltonian, DEFAULT_GROUND_TOL};
use crate::chebyshev::{self, ChebyshevWorkspace};
use crate::schedule::Schedule;
use crate::spin::{self, StateVector, C64};
use crate::steering::SteeringMode;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step in units of ħ/W. `None` picks `min(t_a/1000, 0.1/h0)`
    /// for Dormand–Prince and `t_a/50` for Magnus.
    pub max_step: Option<f64>,
    pub min_step: f64,
    pub norm_drift_tol: f64,
    pub method: Method,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    #[default]
    #[serde(alias = "magnus")]
    MagnusChebyshev,
    #[serde(alias = "dp5")]
    DormandPrince,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "magnus" | "magnus-chebyshev" => Ok(Self::MagnusChebyshev),
            "dp5" | "dormand-prince" => Ok(Self::DormandPrince),
            other => Err(Error::InvalidParameter(format!("unknown integrator '{other}'"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::MagnusChebyshev => "magnus-chebyshev",
            Self::DormandPrince => "dormand-prince",
        })
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            max_step: None,
            min_step: 1e-12,
            norm_drift_tol: 1e-9,
            method: Method::default(),
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return bad(format!("tolerances must be positive (rtol {}, atol {})", self.rtol, self.atol));
        }
        if !(self.min_step > 0.0) {
            return bad(format!("min_step must be positive, got {}", self.min_step));
        }
        if let Some(m) = self.max_step {
            if !(m > self.min_step) {
                return bad(format!("max_step {m} must exceed min_step {}", self.min_step));
            }
        }
        if !(self.norm_drift_tol > 0.0) {
            return bad(format!("norm_drift_tol must be positive, got {}", self.norm_drift_tol));
        }
        Ok(())
    }

    pub fn resolved_max_step(&self, t_a: f64, h0: f64) -> f64 {
        self.max_step.unwrap_or(match self.method {
            Method::DormandPrince => (t_a / 1000.0).min(0.1 / h0),
            Method::MagnusChebyshev => t_a / 50.0,
        })
    }
}

/// A Hamiltonian frozen at one time, or a linear combination of those.
pub trait LinearOperator {
    /// Writes `A psi` into `out`.
    fn apply(&self, psi: &[C64], out: &mut [C64]);

    /// An interval containing the spectrum of the (Hermitian) operator.
    fn spectral_bounds(&self) -> (f64, f64);
}

impl LinearOperator for FrozenHamiltonian {
    fn apply(&self, psi: &[C64], out: &mut [C64]) {
        FrozenHamiltonian::apply(self, psi, out)
    }

    fn spectral_bounds(&self) -> (f64, f64) {
        FrozenHamiltonian::spectral_bounds(self)
    }
}

/// Time-dependent Hamiltonian `H(t)` driving `dψ/dt = -i H(t) ψ`.
pub trait Generator {
    type Op: LinearOperator;

    fn dim(&self) -> usize;

    /// `H(t)`.
    fn at(&self, t: f64) -> Result<Self::Op>;

    /// `Σ w_j A_j`.
    fn combine(&self, terms: &[(f64, &Self::Op)]) -> Self::Op;

    /// Schedule parameter reported in failures.
    fn tau(&self, t: f64) -> f64 {
        t
    }
}

/// `H_qaa` in physical time, `τ = t / t_a`.
pub struct AnnealingFlow<'a>(pub &'a AnnealingHamiltonian);

impl Generator for AnnealingFlow<'_> {
    type Op = FrozenHamiltonian;

    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn at(&self, t: f64) -> Result<FrozenHamiltonian> {
        self.0.frozen(self.tau(t))
    }

    fn combine(&self, terms: &[(f64, &FrozenHamiltonian)]) -> FrozenHamiltonian {
        FrozenHamiltonian::combine(terms)
    }

    fn tau(&self, t: f64) -> f64 {
        (t / self.0.anneal_time()).clamp(0.0, 1.0)
    }
}

/// `H_qaa` held at a fixed τ; a static Hamiltonian for sanity checks.
pub struct FrozenFlow<'a> {
    pub hamiltonian: &'a AnnealingHamiltonian,
    pub tau: f64,
}

impl Generator for FrozenFlow<'_> {
    type Op = FrozenHamiltonian;

    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    fn at(&self, _t: f64) -> Result<FrozenHamiltonian> {
        self.hamiltonian.frozen(self.tau)
    }

    fn combine(&self, terms: &[(f64, &FrozenHamiltonian)]) -> FrozenHamiltonian {
        FrozenHamiltonian::combine(terms)
    }

    fn tau(&self, _t: f64) -> f64 {
        self.tau
    }
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

fn rk_derivative<G: Generator + ?Sized>(g: &G, t: f64, psi: &[C64], out: &mut [C64]) -> Result<()> {
    g.at(t)?.apply(psi, out);
    for o in out.iter_mut() {
        // -i (a + ib) = b - ia
        *o = C64::new(o.im, -o.re);
    }
    Ok(())
}

/// One adaptive integrator: proposes a step, reports its scaled error, and
/// commits the proposal on acceptance.
trait Stepper<G: Generator + ?Sized> {
    fn start(&mut self, g: &G, t: f64, psi: &[C64]) -> Result<()>;
    fn try_step(&mut self, g: &G, t: f64, h: f64, psi: &[C64], cfg: &IntegratorConfig) -> Result<f64>;
    fn commit(&mut self, psi: &mut [C64]);
}

struct DormandPrince {
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    next: Vec<C64>,
}

impl DormandPrince {
    fn new(dim: usize) -> Self {
        let zero = vec![C64::new(0.0, 0.0); dim];
        Self {
            k: std::array::from_fn(|_| zero.clone()),
            stage: zero.clone(),
            next: zero,
        }
    }
}

impl<G: Generator + ?Sized> Stepper<G> for DormandPrince {
    fn start(&mut self, g: &G, t: f64, psi: &[C64]) -> Result<()> {
        rk_derivative(g, t, psi, &mut self.k[0])
    }

    fn try_step(&mut self, g: &G, t: f64, h: f64, y: &[C64], cfg: &IntegratorConfig) -> Result<f64> {
        let Self { k, stage, next } = self;
        let [k1, k2, k3, k4, k5, k6, k7] = k;

        for i in 0..y.len() {
            stage[i] = y[i] + h * (A21 * k1[i]);
        }
        rk_derivative(g, t + C2 * h, stage, k2)?;
        for i in 0..y.len() {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        rk_derivative(g, t + C3 * h, stage, k3)?;
        for i in 0..y.len() {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rk_derivative(g, t + C4 * h, stage, k4)?;
        for i in 0..y.len() {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rk_derivative(g, t + C5 * h, stage, k5)?;
        for i in 0..y.len() {
            stage[i] =
                y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rk_derivative(g, t + h, stage, k6)?;
        for i in 0..y.len() {
            next[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        rk_derivative(g, t + h, next, k7)?;

        let mut err = 0.0f64;
        for i in 0..y.len() {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = cfg.atol + cfg.rtol * y[i].norm().max(next[i].norm());
            err = err.max(e.norm() / scale);
        }
        Ok(if err.is_finite() { err } else { f64::INFINITY })
    }

    fn commit(&mut self, psi: &mut [C64]) {
        psi.copy_from_slice(&self.next);
        self.k.swap(0, 6);
    }
}

/// Gauss–Legendre nodes of the fourth-order commutator-free Magnus scheme.
const MAGNUS_OFFSET: f64 = 0.288_675_134_594_812_9; // √3 / 6
const MAGNUS_HEAVY: f64 = 0.25 + MAGNUS_OFFSET;
const MAGNUS_LIGHT: f64 = 0.25 - MAGNUS_OFFSET;

struct MagnusChebyshev {
    coarse: Vec<C64>,
    mid: Vec<C64>,
    fine: Vec<C64>,
    scratch: Vec<C64>,
    cheb: ChebyshevWorkspace,
    applications: usize,
}

impl MagnusChebyshev {
    fn new(dim: usize) -> Self {
        let zero = vec![C64::new(0.0, 0.0); dim];
        Self {
            coarse: zero.clone(),
            mid: zero.clone(),
            fine: zero.clone(),
            scratch: zero,
            cheb: ChebyshevWorkspace::new(dim),
            applications: 0,
        }
    }
}

/// `out = exp(-i h (α₁H₁ + α₂H₂)) exp(-i h (α₂H₁ + α₁H₂)) psi`, with `H₁`, `H₂`
/// sampled at the two Gauss nodes and the earlier node weighted more in the
/// factor applied first.
fn magnus_step<G: Generator + ?Sized>(
    g: &G,
    t: f64,
    h: f64,
    psi: &[C64],
    out: &mut [C64],
    scratch: &mut [C64],
    cheb: &mut ChebyshevWorkspace,
) -> Result<usize> {
    let early = g.at(t + (0.5 - MAGNUS_OFFSET) * h)?;
    let late = g.at(t + (0.5 + MAGNUS_OFFSET) * h)?;
    let first = g.combine(&[(MAGNUS_HEAVY, &early), (MAGNUS_LIGHT, &late)]);
    let second = g.combine(&[(MAGNUS_LIGHT, &early), (MAGNUS_HEAVY, &late)]);
    let mut n = chebyshev::expmv(|v, w| first.apply(v, w), first.spectral_bounds(), h, psi, scratch, cheb);
    n += chebyshev::expmv(|v, w| second.apply(v, w), second.spectral_bounds(), h, scratch, out, cheb);
    Ok(n)
}

impl<G: Generator + ?Sized> Stepper<G> for MagnusChebyshev {
    fn start(&mut self, _g: &G, _t: f64, _psi: &[C64]) -> Result<()> {
        Ok(())
    }

    /// Step doubling: one step of `h` against two of `h/2`; the finer result
    /// is kept and the difference, divided by `2^4 - 1`, estimates its error.
    fn try_step(&mut self, g: &G, t: f64, h: f64, y: &[C64], cfg: &IntegratorConfig) -> Result<f64> {
        let Self { coarse, mid, fine, scratch, cheb, applications } = self;
        *applications += magnus_step(g, t, h, y, coarse, scratch, cheb)?;
        *applications += magnus_step(g, t, 0.5 * h, y, mid, scratch, cheb)?;
        *applications += magnus_step(g, t + 0.5 * h, 0.5 * h, mid, fine, scratch, cheb)?;
        let mut err = 0.0f64;
        for i in 0..y.len() {
            let e = (fine[i] - coarse[i]).norm() / 15.0;
            let scale = cfg.atol + cfg.rtol * y[i].norm().max(fine[i].norm());
            err = err.max(e / scale);
        }
        Ok(if err.is_finite() { err } else { f64::INFINITY })
    }

    fn commit(&mut self, psi: &mut [C64]) {
        psi.copy_from_slice(&self.fine);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Operator applications inside Chebyshev expansions (Magnus only).
    pub applications: usize,
}

/// Integrates `psi` in place from `t0` to `t1` (either direction).
pub fn integrate<G: Generator + ?Sized>(
    g: &G,
    psi: &mut [C64],
    t0: f64,
    t1: f64,
    max_step: f64,
    cfg: &IntegratorConfig,
) -> Result<StepStats> {
    cfg.validate()?;
    if psi.len() != g.dim() {
        return Err(Error::LengthMismatch {
            left: psi.len(),
            right: g.dim(),
        });
    }
    match cfg.method {
        Method::DormandPrince => {
            let mut stepper = DormandPrince::new(psi.len());
            drive(g, &mut stepper, psi, t0, t1, max_step, cfg)
        }
        Method::MagnusChebyshev => {
            let mut stepper = MagnusChebyshev::new(psi.len());
            let mut stats = drive(g, &mut stepper, psi, t0, t1, max_step, cfg)?;
            stats.applications = stepper.applications;
            Ok(stats)
        }
    }
}

fn drive<G: Generator + ?Sized, S: Stepper<G>>(
    g: &G,
    stepper: &mut S,
    psi: &mut [C64],
    t0: f64,
    t1: f64,
    max_step: f64,
    cfg: &IntegratorConfig,
) -> Result<StepStats> {
    let mut stats = StepStats::default();
    let span = (t1 - t0).abs();
    if span == 0.0 {
        return Ok(stats);
    }
    let dir = (t1 - t0).signum();
    let max_step = max_step.min(span);
    let mut t = t0;
    let mut h = max_step;
    stepper.start(g, t, psi)?;

    loop {
        let remaining = (t1 - t).abs();
        let last = h >= remaining;
        if last {
            h = remaining;
        }
        let hs = dir * h;
        let err = stepper.try_step(g, t, hs, psi, cfg)?;
        if err <= 1.0 {
            stats.accepted += 1;
            t = if last { t1 } else { t + hs };
            stepper.commit(psi);
            if last {
                return Ok(stats);
            }
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h = (h * factor).min(max_step);
        } else {
            stats.rejected += 1;
            let factor = (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            h *= factor;
        }
        if h < cfg.min_step {
            return Err(Error::StepUnderflow {
                t,
                tau: g.tau(t),
                step: h,
            });
        }
    }
}

/// Final-state observables of one anneal.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub final_state: StateVector,
    /// Probability summed over the ground manifold of `H_f`.
    pub p1: f64,
    /// `pn[n-1] = |⟨n|ψ(t_a)⟩|²` over levels sorted by energy.
    pub pn: Option<Vec<f64>>,
    pub norm_drift: f64,
    pub steps_taken: usize,
    pub rejected_steps: usize,
    pub applications: usize,
}

/// Anneals `inst` from the ground state of `H_i` over `[0, t_a]`.
pub fn evolve(
    inst: &DisorderInstance,
    schedule: &Schedule,
    mode: SteeringMode,
    t_a: f64,
    cfg: &IntegratorConfig,
) -> Result<RunResult> {
    let ham = AnnealingHamiltonian::new(inst, *schedule, mode, t_a)?;
    evolve_hamiltonian(&ham, cfg, false)
}

pub fn evolve_hamiltonian(
    ham: &AnnealingHamiltonian,
    cfg: &IntegratorConfig,
    levels: bool,
) -> Result<RunResult> {
    let inst = ham.instance();
    let t_a = ham.anneal_time();
    let mut state = inst.initial_ground_state();
    let max_step = cfg.resolved_max_step(t_a, inst.h0());
    let stats = integrate(&AnnealingFlow(ham), state.amplitudes_mut(), 0.0, t_a, max_step, cfg)?;

    let norm_drift = (spin::norm_sqr(state.amplitudes()) - 1.0).abs();
    if norm_drift > cfg.norm_drift_tol {
        return Err(Error::NormDrift {
            drift: norm_drift,
            tol: cfg.norm_drift_tol,
        });
    }
    let spectrum = model::Spectrum::from_table(ham.energy_table());
    let ground = model::ground_manifold(&spectrum, DEFAULT_GROUND_TOL);
    let p1 = model::ground_probability(&state, &ground);
    let pn = levels.then(|| spectrum.level_probabilities(&state));
    Ok(RunResult {
        final_state: state,
        p1,
        pn,
        norm_drift,
        steps_taken: stats.accepted,
        rejected_steps: stats.rejected,
        applications: stats.applications,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Boundary;

    fn inst(h: Vec<f64>, j: f64, b: Boundary) -> DisorderInstance {
        DisorderInstance::new(h, j, b).unwrap()
    }

    #[test]
    fn single_spin_steering_is_transitionless_for_one_spin() {
        let cfg = IntegratorConfig::default();
        for h in [0.8, -0.35, 0.02] {
            for t_a in [0.1, 1.0, 10.0] {
                let i = inst(vec![h], 0.0, Boundary::OpenChain);
                let r = evolve(&i, &Schedule::COS_SIN, SteeringMode::SingleSpin, t_a, &cfg).unwrap();
                assert!(r.p1 >= 1.0 - 1e-9, "h {h} t_a {t_a}: {}", r.p1);
                assert!(r.norm_drift <= 1e-9);
            }
        }
    }

    #[test]
    fn static_hamiltonian_gives_analytic_phases() {
        // At τ = 0 the Hamiltonian is h0 Σ σ_x; each σ_x eigenstate product picks
        // up exp(-i h0 (n_+ - n_-) t).
        let i = inst(vec![0.3, -0.6, 0.9], 0.4, Boundary::Ring);
        let ham = AnnealingHamiltonian::new(&i, Schedule::COS_SIN, SteeringMode::SingleSpin, 1.0).unwrap();
        let cfg = IntegratorConfig::default();
        let duration = 0.37;
        // |+⟩ on site 0, |−⟩ on sites 1 and 2: eigenvalue h0 (1 - 2) = -h0
        let plus = [1.0, 1.0];
        let minus = [1.0, -1.0];
        let factors = [plus, minus, minus];
        let amp = |idx: usize| -> f64 {
            (0..3).map(|k| factors[k][(idx >> k) & 1]).product::<f64>() / 8f64.sqrt()
        };
        let mut psi: Vec<C64> = (0..8).map(|idx| C64::new(amp(idx), 0.0)).collect();
        integrate(&FrozenFlow { hamiltonian: &ham, tau: 0.0 }, &mut psi, 0.0, duration, 0.01, &cfg)
            .unwrap();
        let phase = C64::from_polar(1.0, 10.0 * duration);
        for (idx, a) in psi.iter().enumerate() {
            let expect = phase * amp(idx);
            assert!((a - expect).norm() < 1e-7, "{idx}: {a} vs {expect}");
        }
    }

    #[test]
    fn slow_unsteered_anneal_is_adiabatic() {
        let i = inst(vec![0.7, -0.4], 0.2, Boundary::OpenChain);
        let r = evolve(&i, &Schedule::COS_SIN, SteeringMode::None, 1e4, &IntegratorConfig::default())
            .unwrap();
        assert!(r.p1 > 1.0 - 1e-4, "{}", r.p1);
    }

    #[test]
    fn level_probabilities_are_consistent() {
        let i = inst(vec![0.3, -0.5, 0.8, -0.1], 0.3, Boundary::Ring);
        let ham = AnnealingHamiltonian::new(&i, Schedule::COS_SIN, SteeringMode::None, 1.0).unwrap();
        let r = evolve_hamiltonian(&ham, &IntegratorConfig::default(), true).unwrap();
        let pn = r.pn.unwrap();
        assert_eq!(pn.len(), 16);
        assert!((pn.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(pn[0], r.p1);
    }

    #[test]
    fn underflow_and_drift_are_reported() {
        let i = inst(vec![0.3, -0.5, 0.8], 0.3, Boundary::Ring);
        let tight = IntegratorConfig {
            rtol: 1e-13,
            atol: 1e-15,
            min_step: 1e-3,
            max_step: Some(0.01),
            method: Method::DormandPrince,
            ..Default::default()
        };
        let err = evolve(&i, &Schedule::COS_SIN, SteeringMode::None, 1.0, &tight).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }), "{err:?}");
        let tight = IntegratorConfig {
            rtol: 1e-12,
            atol: 1e-14,
            min_step: 0.05,
            max_step: Some(0.1),
            ..Default::default()
        };
        let err = evolve(&i, &Schedule::COS_SIN, SteeringMode::None, 1.0, &tight).unwrap_err();
        assert!(matches!(err, Error::StepUnderflow { .. }), "{err:?}");

        let loose = IntegratorConfig {
            rtol: 1e-2,
            atol: 1e-2,
            norm_drift_tol: 1e-12,
            method: Method::DormandPrince,
            ..Default::default()
        };
        let err = evolve(&i, &Schedule::COS_SIN, SteeringMode::None, 1.0, &loose).unwrap_err();
        assert!(matches!(err, Error::NormDrift { .. }), "{err:?}");
    }

    #[test]
    fn config_validation() {
        assert!(IntegratorConfig { rtol: 0.0, ..Default::default() }.validate().is_err());
        assert!(IntegratorConfig { max_step: Some(1e-13), ..Default::default() }.validate().is_err());
        let dp = IntegratorConfig { method: Method::DormandPrince, ..Default::default() };
        assert_eq!(dp.resolved_max_step(1.0, 10.0), 0.001);
        assert_eq!(dp.resolved_max_step(1000.0, 10.0), 0.01);
        let magnus = IntegratorConfig::default();
        assert_eq!(magnus.method, Method::MagnusChebyshev);
        assert_eq!(magnus.resolved_max_step(100.0, 10.0), 2.0);
        let fixed = IntegratorConfig { max_step: Some(0.3), ..Default::default() };
        assert_eq!(fixed.resolved_max_step(100.0, 10.0), 0.3);
        assert_eq!("dp5".parse::<Method>().unwrap(), Method::DormandPrince);
        assert_eq!("magnus".parse::<Method>().unwrap(), Method::MagnusChebyshev);
        assert!("euler".parse::<Method>().is_err());
    }

    const METHODS: [Method; 2] = [Method::MagnusChebyshev, Method::DormandPrince];

    #[test]
    fn frozen_evolution_matches_dense_exponential() {
        let i = inst(vec![0.3, -0.6, 0.9], 0.4, Boundary::Ring);
        for mode in [SteeringMode::None, SteeringMode::SingleSpin, SteeringMode::Cluster, SteeringMode::EXACT] {
            let ham = AnnealingHamiltonian::new(&i, Schedule::COS_SIN, mode, 0.8).unwrap();
            let tau = 0.43;
            let duration = 0.9;
            let dense = ham.to_dense(tau).unwrap();
            let u = (dense * C64::new(0.0, -duration)).exp();
            let psi0: Vec<C64> = (0..8).map(|k| C64::new((k as f64 * 0.9).cos(), (k as f64 * 0.4).sin())).collect();
            let n: f64 = spin::norm_sqr(&psi0).sqrt();
            let psi0: Vec<C64> = psi0.iter().map(|a| a / n).collect();
            let expect = &u * nalgebra::DVector::from_column_slice(&psi0);
            for method in METHODS {
                let cfg = IntegratorConfig { rtol: 1e-10, atol: 1e-12, method, ..Default::default() };
                let mut psi = psi0.clone();
                integrate(&FrozenFlow { hamiltonian: &ham, tau }, &mut psi, 0.0, duration, 0.1, &cfg).unwrap();
                for k in 0..8 {
                    assert!((psi[k] - expect[k]).norm() < 1e-8, "{mode} {method} {k}");
                }
            }
        }
    }

    #[test]
    fn methods_agree_on_time_dependent_anneals() {
        let i = inst(vec![0.55, -0.2, 0.35, -0.9], 0.3, Boundary::OpenChain);
        for mode in [SteeringMode::None, SteeringMode::SingleSpin, SteeringMode::Cluster] {
            let runs: Vec<RunResult> = METHODS
                .iter()
                .map(|&method| {
                    let cfg = IntegratorConfig { rtol: 1e-10, atol: 1e-12, norm_drift_tol: 1e-6, method, ..Default::default() };
                    evolve(&i, &Schedule::COS_SIN, mode, 2.0, &cfg).unwrap()
                })
                .collect();
            let (a, b) = (runs[0].final_state.amplitudes(), runs[1].final_state.amplitudes());
            for k in 0..a.len() {
                assert!((a[k] - b[k]).norm() < 1e-7, "{mode} {k}: {} vs {}", a[k], b[k]);
            }
        }
    }

    #[test]
    fn backward_integration_undoes_forward() {
        let i = inst(vec![0.25, -0.75, 0.5], 0.2, Boundary::Ring);
        let ham = AnnealingHamiltonian::new(&i, Schedule::COS_SIN, SteeringMode::SingleSpin, 3.0).unwrap();
        let flow = AnnealingFlow(&ham);
        for method in METHODS {
            let cfg = IntegratorConfig { rtol: 1e-11, atol: 1e-13, method, ..Default::default() };
            let start = i.initial_ground_state().into_amplitudes();
            let mut psi = start.clone();
            integrate(&flow, &mut psi, 0.0, 3.0, 0.1, &cfg).unwrap();
            integrate(&flow, &mut psi, 3.0, 0.0, 0.1, &cfg).unwrap();
            for k in 0..psi.len() {
                assert!((psi[k] - start[k]).norm() < 1e-8, "{method} {k}");
            }
        }
    }

    #[test]
    fn magnus_keeps_the_norm_where_runge_kutta_drifts() {
        let h: Vec<f64> = (0..8).map(|k| (k as f64 * 0.7361).sin()).collect();
        let i = inst(h, 0.1, Boundary::Ring);
        let r = evolve(&i, &Schedule::COS_SIN, SteeringMode::None, 1.0, &IntegratorConfig::default()).unwrap();
        assert!(r.norm_drift < 1e-12, "{}", r.norm_drift);
        assert!(r.applications > 0);
    }

    #[test]
    fn tighter_tolerance_converges() {
        let i = inst(vec![0.4, -0.8, 0.15], 0.25, Boundary::Ring);
        for method in METHODS {
            let run = |rtol: f64| {
                let cfg = IntegratorConfig { rtol, atol: rtol * 1e-2, norm_drift_tol: 1e-3, method, ..Default::default() };
                evolve(&i, &Schedule::COS_SIN, SteeringMode::None, 5.0, &cfg).unwrap().p1
            };
            let (coarse, fine, finest) = (run(1e-6), run(1e-9), run(1e-12));
            assert!((fine - finest).abs() <= (coarse - finest).abs() + 1e-12, "{method}");
            assert!((fine - finest).abs() < 1e-7, "{method}");
        }
    }
}
