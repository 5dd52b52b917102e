//! Steering (counterdiabatic) terms.
//!
//! Three constructions are provided:
//!
//! * the single-spin term built from an effective field and its time
//!   derivative, `c = (B × ∂tB) / (2|B|²)`, together with its closed form for
//!   the cos/sin schedule, a pure `σ_y` coefficient per site;
//! * the exact ground-state counterdiabatic operator
//!   `H₁ = i Σ_{m≥2} |m⟩⟨m|∂tH₀|1⟩⟨1| / (E₁ − E_m) + h.c.` built from a dense
//!   eigendecomposition of `H₀(τ) = f_i H_i + f_f H_f`;
//! * cluster steering: the exact operator on the three-spin cluster around the
//!   weakest random field, with single-spin terms everywhere else.
//!
//! Every Hamiltonian involved is real symmetric, so every steering operator is
//! `i` times a real antisymmetric matrix. The dense operators are stored as
//! that real matrix.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{ComplexField, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Boundary, DisorderInstance};
use crate::schedule::Schedule;
use crate::spin::{StateVector, C64, I};

pub const DEFAULT_EXACT_MAX_SPINS: usize = 6;
pub const DEFAULT_GAP_TOL: f64 = 1e-10;
pub const SINGULAR_FIELD_EPS: f64 = 1e-300;

/// Serialized by name (`"none"`, `"single"`, `"cluster"`, `"exact"`); the
/// exact mode reads back with the default size limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SteeringMode {
    None,
    SingleSpin,
    Cluster,
    Exact { max_spins: usize },
}

impl SteeringMode {
    pub const EXACT: SteeringMode = SteeringMode::Exact {
        max_spins: DEFAULT_EXACT_MAX_SPINS,
    };

    pub fn name(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::SingleSpin => "single",
            Self::Cluster => "cluster",
            Self::Exact { .. } => "exact",
        }
    }

    pub fn check_size(&self, n_spins: usize, boundary: Boundary) -> Result<()> {
        match *self {
            Self::Exact { max_spins } if n_spins > max_spins => Err(Error::ExactTooLarge {
                n_spins,
                max_spins,
            }),
            Self::Cluster if n_spins < 3 => Err(Error::InvalidParameter(format!(
                "cluster steering needs L >= 3, got {n_spins} ({boundary:?})"
            ))),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for SteeringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl From<SteeringMode> for String {
    fn from(mode: SteeringMode) -> String {
        mode.name().to_string()
    }
}

impl TryFrom<String> for SteeringMode {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for SteeringMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "single" | "single-spin" => Ok(Self::SingleSpin),
            "cluster" => Ok(Self::Cluster),
            "exact" => Ok(Self::EXACT),
            other => Err(Error::InvalidParameter(format!(
                "unknown steering mode '{other}' (expected none, single, cluster or exact)"
            ))),
        }
    }
}

/// Field `B` of a spin Hamiltonian `B·σ/2` and its time derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveField {
    pub b: [f64; 3],
    pub db_dt: [f64; 3],
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Coefficients `c` of the steering term `c·σ` for a single spin.
pub fn single_spin_steering_from_field(field: &EffectiveField) -> Result<[f64; 3]> {
    let b2: f64 = field.b.iter().map(|x| x * x).sum();
    if b2.sqrt() <= SINGULAR_FIELD_EPS {
        return Err(Error::SingularField {
            magnitude: b2.sqrt(),
        });
    }
    Ok(cross(field.b, field.db_dt).map(|x| x / (2.0 * b2)))
}

/// Closed-form `σ_y^(k)` coefficient of the single-spin steering term for the
/// cos/sin schedule:
///
/// `-h0 hk π sin(πτ) / (4 t_a [h0² cos⁴(πτ/2) + hk² sin⁴(πτ/2)])`.
///
/// The only zero denominator is at `τ = 1, hk = 0`, a removable singularity
/// where the coefficient is 0.
pub fn single_spin_steering_coefficient(tau: f64, h0: f64, hk: f64, t_a: f64) -> f64 {
    if tau == 0.0 || tau == 1.0 {
        return 0.0;
    }
    let (s, c) = (0.5 * PI * tau).sin_cos();
    let (c2, s2) = (c * c, s * s);
    let denom = 4.0 * t_a * (h0 * h0 * c2 * c2 + hk * hk * s2 * s2);
    if denom == 0.0 {
        return 0.0;
    }
    -h0 * hk * PI * (PI * tau).sin() / denom
}

/// Per-site `σ_y` coefficients for all spins.
pub fn single_spin_coefficients(inst: &DisorderInstance, tau: f64, t_a: f64) -> Vec<f64> {
    inst.fields()
        .iter()
        .map(|&hk| single_spin_steering_coefficient(tau, inst.h0(), hk, t_a))
        .collect()
}

/// `Σ_k c_k(τ) σ_y^(k) |input⟩`.
pub fn apply_single_spin_steering(
    inst: &DisorderInstance,
    sched: &Schedule,
    tau: f64,
    t_a: f64,
    input: &StateVector,
) -> Result<StateVector> {
    sched.evaluate(tau)?;
    inst.check_state(input)?;
    check_anneal_time(t_a)?;
    let coeffs = single_spin_coefficients(inst, tau, t_a);
    let mut out = StateVector::zeros(inst.n_spins());
    add_sigma_y_terms(&coeffs, input.amplitudes(), out.amplitudes_mut());
    Ok(out)
}

/// `out += Σ_k coeffs[k] σ_y^(k) psi`.
pub(crate) fn add_sigma_y_terms(coeffs: &[f64], psi: &[C64], out: &mut [C64]) {
    for (k, &c) in coeffs.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let mask = 1usize << k;
        for (i, o) in out.iter_mut().enumerate() {
            let partner = psi[i ^ mask];
            // σ_y: +i on the set bit, -i on the clear bit
            *o += if i & mask != 0 { I * c * partner } else { -I * c * partner };
        }
    }
}

pub(crate) fn check_anneal_time(t_a: f64) -> Result<()> {
    if t_a > 0.0 && t_a.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("annealing time must be positive, got {t_a}")))
    }
}

/// Dense steering operator `H₁ = i·K` with `K` real antisymmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct CounterdiabaticOperator {
    generator: DMatrix<f64>,
}

impl CounterdiabaticOperator {
    pub fn zero(dim: usize) -> Self {
        Self {
            generator: DMatrix::zeros(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.generator.nrows()
    }

    /// The real antisymmetric `K` in `H₁ = i·K`.
    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.generator.map(|x| C64::new(0.0, x))
    }

    pub fn apply(&self, input: &StateVector) -> Result<StateVector> {
        if input.dim() != self.dim() {
            return Err(Error::LengthMismatch {
                left: input.dim(),
                right: self.dim(),
            });
        }
        let mut out = StateVector::zeros(input.n_spins());
        self.add_to(input.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    /// `out += i K psi`.
    pub(crate) fn add_to(&self, psi: &[C64], out: &mut [C64]) {
        let k = &self.generator;
        let n = k.nrows();
        for (row, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = C64::new(0.0, 0.0);
            for col in 0..n {
                let v = k[(row, col)];
                if v != 0.0 {
                    acc += v * psi[col];
                }
            }
            *o += I * acc;
        }
    }
}

/// Assembles `M` with `H₁ = i·M` from an eigendecomposition of `H₀`.
///
/// `energies` must be ascending with `vectors` column-aligned. With `w` the
/// reduced resolvent applied to `∂tH₀|1⟩`, `M = w⟨1| − |1⟩w†`, which depends on
/// the eigenvectors only through projectors.
pub fn assemble_ground_coupling<T>(
    energies: &[f64],
    vectors: &DMatrix<T>,
    dh_dt: &DMatrix<T>,
    tau: f64,
    gap_tol: f64,
) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
{
    let dim = energies.len();
    if dim < 2 {
        return Ok(DMatrix::zeros(dim, dim));
    }
    let gap = energies[1] - energies[0];
    if !(gap > gap_tol) {
        return Err(Error::DegenerateGap { tau, gap });
    }
    let ground = vectors.column(0).into_owned();
    let driven = dh_dt * &ground;
    let mut w = DVector::<T>::zeros(dim);
    for m in 1..dim {
        let vm = vectors.column(m);
        let amp = vm.dotc(&driven);
        let weight = T::from_real(1.0 / (energies[0] - energies[m]));
        w.axpy(amp * weight, &vm, T::one());
    }
    Ok(&w * ground.adjoint() - &ground * w.adjoint())
}

fn is_zero_drive(df_i: f64, df_f: f64) -> bool {
    df_i == 0.0 && df_f == 0.0
}

/// Dense real symmetric `f_i h0 Σ σ_x + f_f diag(energies)` over `n_spins`.
fn dense_interpolated(n_spins: usize, h0: f64, diag: &[f64], f_i: f64, f_f: f64) -> DMatrix<f64> {
    let dim = 1usize << n_spins;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    for i in 0..dim {
        m[(i, i)] = f_f * diag[i];
        for k in 0..n_spins {
            m[(i, i ^ (1 << k))] = f_i * h0;
        }
    }
    m
}

fn counterdiabatic_for(
    n_spins: usize,
    h0: f64,
    diag: &[f64],
    sched: &Schedule,
    tau: f64,
    t_a: f64,
    gap_tol: f64,
) -> Result<DMatrix<f64>> {
    let v = sched.evaluate(tau)?;
    let dim = 1usize << n_spins;
    if is_zero_drive(v.df_i, v.df_f) {
        return Ok(DMatrix::zeros(dim, dim));
    }
    let h = dense_interpolated(n_spins, h0, diag, v.f_i, v.f_f);
    let dh = dense_interpolated(n_spins, h0, diag, v.df_i / t_a, v.df_f / t_a);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let energies: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    assemble_ground_coupling(&energies, &vectors, &dh, tau, gap_tol)
}

/// Exact ground-state counterdiabatic operator for the whole system.
pub fn exact_counterdiabatic(
    inst: &DisorderInstance,
    sched: &Schedule,
    tau: f64,
    t_a: f64,
) -> Result<CounterdiabaticOperator> {
    exact_counterdiabatic_with(inst, sched, tau, t_a, DEFAULT_EXACT_MAX_SPINS, DEFAULT_GAP_TOL)
}

pub fn exact_counterdiabatic_with(
    inst: &DisorderInstance,
    sched: &Schedule,
    tau: f64,
    t_a: f64,
    max_spins: usize,
    gap_tol: f64,
) -> Result<CounterdiabaticOperator> {
    check_anneal_time(t_a)?;
    SteeringMode::Exact { max_spins }.check_size(inst.n_spins(), inst.boundary())?;
    let table = inst.problem_energy_table();
    exact_from_table(inst, &table, sched, tau, t_a, gap_tol)
}

pub(crate) fn exact_from_table(
    inst: &DisorderInstance,
    table: &[f64],
    sched: &Schedule,
    tau: f64,
    t_a: f64,
    gap_tol: f64,
) -> Result<CounterdiabaticOperator> {
    counterdiabatic_for(inst.n_spins(), inst.h0(), table, sched, tau, t_a, gap_tol)
        .map(|generator| CounterdiabaticOperator { generator })
}

pub fn apply_exact_counterdiabatic(
    inst: &DisorderInstance,
    sched: &Schedule,
    tau: f64,
    t_a: f64,
    input: &StateVector,
) -> Result<StateVector> {
    exact_counterdiabatic(inst, sched, tau, t_a)?.apply(input)
}

/// Three sites steered together: `center` has the weakest field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub left: usize,
    pub center: usize,
    pub right: usize,
}

impl Cluster {
    pub fn sites(&self) -> [usize; 3] {
        [self.left, self.center, self.right]
    }

    pub fn contains(&self, site: usize) -> bool {
        self.sites().contains(&site)
    }
}

/// The weakest-field spin (lowest index on ties) and its two neighbours.
///
/// On an open chain a weakest spin at either end has only one neighbour; the
/// cluster is then the three sites at that end, with the middle one as
/// `center`.
pub fn select_cluster(inst: &DisorderInstance) -> Result<Cluster> {
    let l = inst.n_spins();
    if l < 3 {
        return Err(Error::InvalidParameter(format!("cluster needs L >= 3, got {l}")));
    }
    let weakest = inst
        .fields()
        .iter()
        .enumerate()
        .fold(0, |best, (k, h)| if h.abs() < inst.fields()[best].abs() { k } else { best });
    let center = match inst.boundary() {
        Boundary::Ring => weakest,
        Boundary::OpenChain => weakest.clamp(1, l - 2),
    };
    Ok(Cluster {
        left: (center + l - 1) % l,
        center,
        right: (center + 1) % l,
    })
}

/// Cluster steering at one τ: a dense 8×8 generator on the trio plus
/// single-spin coefficients on every other site (zero on the trio).
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSteering {
    pub cluster: Cluster,
    /// `H_trio = i·trio`, local bit `j` is `cluster.sites()[j]`.
    pub trio: DMatrix<f64>,
    pub single: Vec<f64>,
    n_spins: usize,
}

/// Energy table of the isolated trio in its local basis.
pub(crate) fn trio_table(inst: &DisorderInstance, cluster: &Cluster) -> Vec<f64> {
    let sites = cluster.sites();
    let local = |s: usize| sites.iter().position(|&x| x == s);
    let bonds: Vec<(usize, usize)> = inst
        .bonds()
        .into_iter()
        .filter_map(|(a, b)| Some((local(a)?, local(b)?)))
        .collect();
    let spin = |i: usize, j: usize| 1.0 - 2.0 * ((i >> j) & 1) as f64;
    (0..8)
        .map(|i| {
            let field: f64 = sites
                .iter()
                .enumerate()
                .map(|(j, &s)| inst.fields()[s] * spin(i, j))
                .sum();
            let bond: f64 = bonds.iter().map(|&(a, b)| spin(i, a) * spin(i, b)).sum();
            field + inst.coupling() * bond
        })
        .collect()
}

pub fn cluster_steering_operator(
    inst: &DisorderInstance,
    sched: &Schedule,
    tau: f64,
    t_a: f64,
) -> Result<ClusterSteering> {
    check_anneal_time(t_a)?;
    let cluster = select_cluster(inst)?;
    let table = trio_table(inst, &cluster);
    cluster_from_parts(inst, cluster, &table, sched, tau, t_a, DEFAULT_GAP_TOL)
}

pub(crate) fn cluster_from_parts(
    inst: &DisorderInstance,
    cluster: Cluster,
    trio_table: &[f64],
    sched: &Schedule,
    tau: f64,
    t_a: f64,
    gap_tol: f64,
) -> Result<ClusterSteering> {
    let trio = counterdiabatic_for(3, inst.h0(), trio_table, sched, tau, t_a, gap_tol)?;
    let mut single = single_spin_coefficients(inst, tau, t_a);
    for s in cluster.sites() {
        single[s] = 0.0;
    }
    Ok(ClusterSteering {
        cluster,
        trio,
        single,
        n_spins: inst.n_spins(),
    })
}

impl ClusterSteering {
    pub fn apply(&self, input: &StateVector) -> Result<StateVector> {
        if input.n_spins() != self.n_spins {
            return Err(Error::LengthMismatch {
                left: input.dim(),
                right: 1 << self.n_spins,
            });
        }
        let mut out = StateVector::zeros(self.n_spins);
        add_sigma_y_terms(&self.single, input.amplitudes(), out.amplitudes_mut());
        add_trio_term(&self.cluster, &self.trio, input.amplitudes(), out.amplitudes_mut());
        Ok(out)
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        let dim = 1usize << self.n_spins;
        let mut m = DMatrix::zeros(dim, dim);
        for col in 0..dim {
            let e = StateVector::basis(self.n_spins, col).expect("in range");
            let out = self.apply(&e).expect("dimension matches");
            for (row, v) in out.amplitudes().iter().enumerate() {
                m[(row, col)] = *v;
            }
        }
        m
    }
}

/// `out += i (K_trio ⊗ 1) psi` with the trio embedded at `cluster`'s sites.
pub(crate) fn add_trio_term(cluster: &Cluster, trio: &DMatrix<f64>, psi: &[C64], out: &mut [C64]) {
    let sites = cluster.sites();
    let mask = sites.iter().fold(0usize, |m, &s| m | (1 << s));
    let offsets: [usize; 8] = std::array::from_fn(|local| {
        sites
            .iter()
            .enumerate()
            .filter(|(j, _)| local >> j & 1 == 1)
            .fold(0, |acc, (_, &s)| acc | (1 << s))
    });
    let mut gathered = [C64::new(0.0, 0.0); 8];
    for base in (0..psi.len()).filter(|b| b & mask == 0) {
        for (g, off) in gathered.iter_mut().zip(offsets) {
            *g = psi[base | off];
        }
        for (row, off) in offsets.iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (col, g) in gathered.iter().enumerate() {
                acc += trio[(row, col)] * g;
            }
            out[base | off] += I * acc;
        }
    }
}
