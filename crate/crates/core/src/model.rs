//! Random-field Ising chain, the transverse-field driver, the exact final
//! spectrum and the naive sign-rule baseline.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{self, BasisConfiguration, PauliAxis, StateVector, C64};

pub use crate::hamiltonian::{apply_total_hamiltonian, AnnealingHamiltonian, FrozenHamiltonian};

pub const DEFAULT_H0: f64 = 10.0;
pub const DEFAULT_W: f64 = 1.0;
pub const DEFAULT_GROUND_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    #[default]
    Ring,
    OpenChain,
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ring" => Ok(Self::Ring),
            "open-chain" | "open" => Ok(Self::OpenChain),
            other => Err(Error::InvalidParameter(format!("unknown boundary '{other}'"))),
        }
    }
}

/// One disorder realization of the problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisorderInstance {
    #[serde(rename = "L")]
    n_spins: usize,
    #[serde(rename = "J")]
    coupling: f64,
    #[serde(rename = "W")]
    disorder_width: f64,
    h0: f64,
    boundary: Boundary,
    #[serde(rename = "h")]
    fields: Vec<f64>,
}

impl DisorderInstance {
    /// Instance with the default transverse field `h0 = 10` and width `W = 1`.
    pub fn new(fields: Vec<f64>, coupling: f64, boundary: Boundary) -> Result<Self> {
        Self::with_params(fields, coupling, boundary, DEFAULT_H0, DEFAULT_W)
    }

    pub fn with_params(
        fields: Vec<f64>,
        coupling: f64,
        boundary: Boundary,
        h0: f64,
        disorder_width: f64,
    ) -> Result<Self> {
        let inst = Self {
            n_spins: fields.len(),
            coupling,
            disorder_width,
            h0,
            boundary,
            fields,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Self = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInstance(format!("malformed instance JSON: {e}")))?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("instance serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidInstance(msg));
        if self.n_spins == 0 || self.n_spins != self.fields.len() {
            return bad(format!(
                "L = {} does not match {} fields",
                self.n_spins,
                self.fields.len()
            ));
        }
        if self.n_spins > 26 {
            return bad(format!("L = {} exceeds the state-vector limit of 26", self.n_spins));
        }
        if self.boundary == Boundary::Ring && self.n_spins < 3 {
            return bad(format!("ring boundary needs L >= 3, got {}", self.n_spins));
        }
        if !(self.h0 > 0.0 && self.h0.is_finite()) {
            return bad(format!("h0 must be positive, got {}", self.h0));
        }
        if !(self.disorder_width > 0.0 && self.disorder_width.is_finite()) {
            return bad(format!("W must be positive, got {}", self.disorder_width));
        }
        if !self.coupling.is_finite() {
            return bad(format!("J must be finite, got {}", self.coupling));
        }
        if let Some((k, h)) = self
            .fields
            .iter()
            .enumerate()
            .find(|(_, h)| !(h.abs() <= self.disorder_width))
        {
            return bad(format!("|h_{k}| = {} exceeds W = {}", h.abs(), self.disorder_width));
        }
        Ok(())
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        1 << self.n_spins
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn fields(&self) -> &[f64] {
        &self.fields
    }

    pub fn h0(&self) -> f64 {
        self.h0
    }

    pub fn disorder_width(&self) -> f64 {
        self.disorder_width
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Same instance with every field negated.
    pub fn negated(&self) -> Self {
        Self {
            fields: self.fields.iter().map(|h| -h).collect(),
            ..self.clone()
        }
    }

    /// Nearest-neighbour bonds `(k, k+1)`, plus `(L-1, 0)` on a ring.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.n_spins;
        let mut bonds: Vec<_> = (0..l.saturating_sub(1)).map(|k| (k, k + 1)).collect();
        if self.boundary == Boundary::Ring {
            bonds.push((l - 1, 0));
        }
        bonds
    }

    /// Diagonal of `H_f` in the computational basis.
    pub fn problem_energy_table(&self) -> Vec<f64> {
        let bonds = self.bonds();
        (0..self.dim())
            .map(|i| {
                let field: f64 = self
                    .fields
                    .iter()
                    .enumerate()
                    .map(|(k, h)| h * spin::sigma_z(i, k))
                    .sum();
                let bond: f64 = bonds
                    .iter()
                    .map(|&(a, b)| spin::sigma_z(i, a) * spin::sigma_z(i, b))
                    .sum();
                field + self.coupling * bond
            })
            .collect()
    }

    pub fn sorted_spectrum(&self) -> Spectrum {
        Spectrum::from_table(&self.problem_energy_table())
    }

    /// `σ_z^(k) = -sign(h_k)`, with `σ_z = +1` where `h_k == 0`.
    pub fn naive_solution(&self) -> BasisConfiguration {
        let bits = self
            .fields
            .iter()
            .enumerate()
            .filter(|(_, &h)| h > 0.0)
            .fold(0usize, |acc, (k, _)| acc | (1 << k));
        BasisConfiguration(bits)
    }

    /// Overlap of the naive configuration with the ground manifold of `H_f`.
    pub fn naive_success(&self) -> f64 {
        let naive = self.naive_solution();
        let ground = ground_manifold(&self.sorted_spectrum(), DEFAULT_GROUND_TOL);
        if ground.contains(&naive) {
            1.0
        } else {
            0.0
        }
    }

    /// Ground state of `H_i`: every spin in the `σ_x = -1` eigenstate.
    pub fn initial_ground_state(&self) -> StateVector {
        let scale = (self.dim() as f64).sqrt().recip();
        let amps = (0..self.dim())
            .map(|i| {
                let sign = if i.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(sign * scale, 0.0)
            })
            .collect();
        StateVector::new(self.n_spins, amps).expect("dimension matches")
    }

    /// `H_i |input⟩ = h0 Σ_k σ_x^(k) |input⟩`.
    pub fn apply_initial_hamiltonian(&self, input: &StateVector) -> Result<StateVector> {
        self.check_state(input)?;
        let mut out = StateVector::zeros(self.n_spins);
        let mut scratch = input.clone();
        for k in 0..self.n_spins {
            scratch.amplitudes_mut().copy_from_slice(input.amplitudes());
            spin::pauli_in_place(PauliAxis::X, k, scratch.amplitudes_mut());
            for (o, s) in out.amplitudes_mut().iter_mut().zip(scratch.amplitudes()) {
                *o += self.h0 * s;
            }
        }
        Ok(out)
    }

    pub(crate) fn check_state(&self, state: &StateVector) -> Result<()> {
        if state.dim() != self.dim() {
            Err(Error::LengthMismatch {
                left: state.dim(),
                right: self.dim(),
            })
        } else {
            Ok(())
        }
    }
}

/// Eigenvalues of `H_f` sorted ascending, with the aligned configurations.
///
/// Ties are broken by ascending configuration index. Level `n` is 1-based:
/// `level(1)` is the ground state.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: Vec<f64>,
    pub configs: Vec<BasisConfiguration>,
}

impl Spectrum {
    pub fn from_table(table: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..table.len()).collect();
        order.sort_by(|&a, &b| table[a].total_cmp(&table[b]).then(a.cmp(&b)));
        Self {
            energies: order.iter().map(|&i| table[i]).collect(),
            configs: order.into_iter().map(BasisConfiguration).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies[0]
    }

    /// `(E_n, |n⟩)` for the 1-based level index `n`.
    pub fn level(&self, n: usize) -> Option<(f64, BasisConfiguration)> {
        let idx = n.checked_sub(1)?;
        Some((*self.energies.get(idx)?, self.configs[idx]))
    }

    /// Probability over sorted levels: entry `n-1` is `|⟨n|ψ⟩|²`.
    pub fn level_probabilities(&self, state: &StateVector) -> Vec<f64> {
        let amps = state.amplitudes();
        self.configs.iter().map(|c| amps[c.0].norm_sqr()).collect()
    }

    /// 0-based rank of `config` in the sorted order.
    pub fn rank_of(&self, config: BasisConfiguration) -> Option<usize> {
        self.configs.iter().position(|&c| c == config)
    }
}

/// Configurations whose energy lies within `tol` of the minimum.
pub fn ground_manifold(spectrum: &Spectrum, tol: f64) -> Vec<BasisConfiguration> {
    let e0 = spectrum.ground_energy();
    spectrum
        .energies
        .iter()
        .zip(&spectrum.configs)
        .take_while(|(e, _)| **e - e0 <= tol)
        .map(|(_, c)| *c)
        .collect()
}

/// Summed probability of `state` over the ground manifold.
pub fn ground_probability(state: &StateVector, manifold: &[BasisConfiguration]) -> f64 {
    let amps = state.amplitudes();
    manifold.iter().map(|c| amps[c.0].norm_sqr()).sum()
}
