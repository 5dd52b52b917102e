//! Matrix-free Pauli kernels over the `2^L` computational basis.
//!
//! Basis index `i` encodes a spin configuration: bit `k` of `i` is the state of
//! site `k`, with bit value 0 meaning `σ_z = +1` and bit value 1 meaning
//! `σ_z = -1`. Every other module uses this convention.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliAxis {
    X,
    Y,
    Z,
}

/// A computational basis state, stored as its integer index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BasisConfiguration(pub usize);

impl BasisConfiguration {
    pub fn from_spins(spins: &[i8]) -> Self {
        let bits = spins
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0usize, |acc, (k, _)| acc | (1 << k));
        Self(bits)
    }

    pub fn index(self) -> usize {
        self.0
    }

    /// `σ_z` eigenvalue of `site`: +1 for a clear bit, -1 for a set bit.
    #[inline]
    pub fn spin(self, site: usize) -> i8 {
        1 - 2 * ((self.0 >> site) & 1) as i8
    }

    pub fn spins(self, n_spins: usize) -> Vec<i8> {
        (0..n_spins).map(|k| self.spin(k)).collect()
    }
}

/// `σ_z` eigenvalue of bit `site` of basis index `index`, as a float.
#[inline]
pub fn sigma_z(index: usize, site: usize) -> f64 {
    1.0 - 2.0 * ((index >> site) & 1) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_spins: usize,
    amplitudes: Vec<C64>,
}

impl StateVector {
    pub fn new(n_spins: usize, amplitudes: Vec<C64>) -> Result<Self> {
        if n_spins == 0 || n_spins >= usize::BITS as usize {
            return Err(Error::InvalidParameter(format!("n_spins = {n_spins}")));
        }
        let dim = 1usize << n_spins;
        if amplitudes.len() != dim {
            return Err(Error::LengthMismatch {
                left: amplitudes.len(),
                right: dim,
            });
        }
        Ok(Self {
            n_spins,
            amplitudes,
        })
    }

    pub fn zeros(n_spins: usize) -> Self {
        Self {
            n_spins,
            amplitudes: vec![C64::new(0.0, 0.0); 1 << n_spins],
        }
    }

    /// The unit vector on basis state `index`.
    pub fn basis(n_spins: usize, index: usize) -> Result<Self> {
        let mut state = Self::zeros(n_spins);
        let dim = state.dim();
        *state
            .amplitudes
            .get_mut(index)
            .ok_or(Error::ConfigOutOfRange { config: index, dim })? = C64::new(1.0, 0.0);
        Ok(state)
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amplitudes)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    fn check_site(&self, site: usize) -> Result<()> {
        if site >= self.n_spins {
            Err(Error::SiteOutOfRange {
                site,
                n_spins: self.n_spins,
            })
        } else {
            Ok(())
        }
    }
}

pub fn norm_sqr(amplitudes: &[C64]) -> f64 {
    amplitudes.iter().map(|a| a.norm_sqr()).sum()
}

/// Returns `σ_axis^(site) |input⟩`.
pub fn apply_pauli(axis: PauliAxis, site: usize, input: &StateVector) -> Result<StateVector> {
    input.check_site(site)?;
    let mut out = input.clone();
    pauli_in_place(axis, site, &mut out.amplitudes);
    Ok(out)
}

/// In-place Pauli kernel on a raw amplitude slice of length `2^L`.
///
/// `σ_y |↑⟩ = i|↓⟩` and `σ_y |↓⟩ = -i|↑⟩`, with `|↑⟩` the clear bit.
pub fn pauli_in_place(axis: PauliAxis, site: usize, amps: &mut [C64]) {
    let mask = 1usize << site;
    match axis {
        PauliAxis::Z => {
            for (i, a) in amps.iter_mut().enumerate() {
                if i & mask != 0 {
                    *a = -*a;
                }
            }
        }
        PauliAxis::X | PauliAxis::Y => {
            for i in 0..amps.len() {
                if i & mask != 0 {
                    continue;
                }
                let j = i | mask;
                let (up, down) = (amps[i], amps[j]);
                if axis == PauliAxis::X {
                    amps[i] = down;
                    amps[j] = up;
                } else {
                    amps[i] = -I * down;
                    amps[j] = I * up;
                }
            }
        }
    }
}

/// `⟨a|b⟩`, conjugating `a`.
pub fn inner_product(a: &StateVector, b: &StateVector) -> Result<C64> {
    if a.dim() != b.dim() {
        return Err(Error::LengthMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(inner(&a.amplitudes, &b.amplitudes))
}

pub(crate) fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn probability_of_configuration(state: &StateVector, config: BasisConfiguration) -> Result<f64> {
    state
        .amplitudes
        .get(config.0)
        .map(|a| a.norm_sqr())
        .ok_or(Error::ConfigOutOfRange {
            config: config.0,
            dim: state.dim(),
        })
}
