//! Thermalisation superoperators: the reset channel and the Ohmic-bath
//! Lindbladian.

use thiserror::Error;

use crate::linalg::{ComplexMatrix, C64};
use crate::model::{thermal_qubit, SystemParams, SEPARATION_FACTOR};
use crate::quantum::{bit, partial_trace_slots, DensityMatrix, Qubit};

/// Frequencies closer to zero than this hit the Bose-Einstein pole.
pub const DEGENERATE_FREQUENCY_TOL: f64 = 1e-12;

/// Default spectral cutoff.
pub const DEFAULT_CUTOFF: f64 = 1e3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DissipatorError {
    #[error("rate for qubit {qubit} must be finite and positive, got {value}")]
    InvalidRate { qubit: Qubit, value: f64 },
    #[error("cutoff frequency must be finite and positive, got {0}")]
    InvalidCutoff(f64),
    #[error("transition frequency {frequency:e} of bath {bath} is degenerate (Bose occupation diverges at zero frequency; g equals an energy splitting)")]
    DegenerateFrequency { bath: Qubit, frequency: f64 },
    #[error("bath temperature must be positive, got {0}")]
    InvalidTemperature(f64),
}

fn check_rates(rates: &[f64; 3]) -> Result<(), DissipatorError> {
    for (slot, &value) in rates.iter().enumerate() {
        if !value.is_finite() || value <= 0.0 {
            return Err(DissipatorError::InvalidRate { qubit: Qubit::from_slot(slot), value });
        }
    }
    Ok(())
}

/// Probabilistic reset of each qubit to its initial thermal state.
#[derive(Debug, Clone, PartialEq)]
pub struct ResetChannel {
    rates: [f64; 3],
    targets: [DensityMatrix; 3],
}

impl ResetChannel {
    /// Reset targets are the thermal states at the bath temperatures.
    pub fn new(params: &SystemParams, rates: [f64; 3]) -> Result<Self, DissipatorError> {
        check_rates(&rates)?;
        Ok(Self::with_rates(params, rates))
    }

    /// No positivity check on the rates, so zero-rate limits can be built.
    pub(crate) fn with_rates(params: &SystemParams, rates: [f64; 3]) -> Self {
        let e = params.energies();
        let t = params.temperatures();
        let targets = [0, 1, 2].map(|i| thermal_qubit(e[i], t[i]));
        Self { rates, targets }
    }

    pub fn rates(&self) -> [f64; 3] {
        self.rates
    }

    pub fn target(&self, q: Qubit) -> &DensityMatrix {
        &self.targets[q.slot()]
    }

    /// `g, p_i ≪ E1, E3` at the crate's separation factor.
    pub fn is_perturbative(&self, params: &SystemParams) -> bool {
        let e = params.energies();
        let scale = e[0].min(e[2]);
        let fastest = self.rates.iter().copied().fold(params.coupling(), f64::max);
        fastest * SEPARATION_FACTOR <= scale
    }

    /// `p_i (τ_i ⊗_i Tr_i ρ − ρ)` for one qubit, on an arbitrary 8×8 matrix.
    pub fn reset_term(&self, q: Qubit, rho: &ComplexMatrix) -> ComplexMatrix {
        let slot = q.slot();
        let rest: Vec<usize> = (0..3).filter(|&s| s != slot).collect();
        let reduced = partial_trace_slots(rho, 3, &rest);
        let tau = self.targets[slot].matrix();
        let p = self.rates[slot];
        let squeeze = |idx: usize| rest.iter().fold(0, |acc, &s| (acc << 1) | bit(idx, s, 3));
        ComplexMatrix::from_fn(8, 8, |a, b| {
            let reinserted = tau[(bit(a, slot, 3), bit(b, slot, 3))] * reduced[(squeeze(a), squeeze(b))];
            (reinserted - rho[(a, b)]) * p
        })
    }

    /// Full reset generator applied to an arbitrary 8×8 matrix.
    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(8, 8);
        for q in Qubit::ALL {
            out += &self.reset_term(q, rho);
        }
        out
    }
}

/// `Σ_i p_i (τ_i ⊗_i Tr_i ρ − ρ)`.
pub fn reset_apply(ch: &ResetChannel, rho: &DensityMatrix) -> ComplexMatrix {
    ch.apply(rho.matrix())
}

/// Three independent Ohmic baths `J_i(ω) = α_i ω e^{−ω/Ω}`.
#[derive(Debug, Clone, PartialEq)]
pub struct OhmicBath {
    couplings: [f64; 3],
    cutoff: f64,
    temperatures: [f64; 3],
}

impl OhmicBath {
    pub fn new(couplings: [f64; 3], cutoff: f64, temperatures: [f64; 3]) -> Result<Self, DissipatorError> {
        check_rates(&couplings)?;
        Self::with_couplings(couplings, cutoff, temperatures)
    }

    pub(crate) fn with_couplings(
        couplings: [f64; 3],
        cutoff: f64,
        temperatures: [f64; 3],
    ) -> Result<Self, DissipatorError> {
        if !cutoff.is_finite() || cutoff <= 0.0 {
            return Err(DissipatorError::InvalidCutoff(cutoff));
        }
        if let Some(&t) = temperatures.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
            return Err(DissipatorError::InvalidTemperature(t));
        }
        Ok(Self { couplings, cutoff, temperatures })
    }

    pub fn for_params(params: &SystemParams, couplings: [f64; 3], cutoff: f64) -> Result<Self, DissipatorError> {
        Self::new(couplings, cutoff, params.temperatures())
    }

    pub fn couplings(&self) -> [f64; 3] {
        self.couplings
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn rate(&self, bath: Qubit, frequency: f64) -> Result<f64, DissipatorError> {
        let s = bath.slot();
        ohmic_rate(frequency, self.couplings[s], self.cutoff, self.temperatures[s])
            .map_err(|_| DissipatorError::DegenerateFrequency { bath, frequency })
    }

    /// Markov/secular validity: `min{E_i, g} ≫ max γ` and `Ω ≫ max{E_i, g}`.
    pub fn is_markovian(&self, params: &SystemParams, terms: &[LindbladTerm]) -> bool {
        let e = params.energies();
        let g = params.coupling();
        let slowest_system = e.iter().copied().fold(if g > 0.0 { g } else { f64::INFINITY }, f64::min);
        let fastest_system = e.iter().copied().fold(g, f64::max);
        let fastest_rate = terms
            .iter()
            .filter_map(|t| self.rate(t.bath, t.frequency).ok())
            .fold(0.0, f64::max);
        fastest_rate * SEPARATION_FACTOR <= slowest_system && fastest_system * SEPARATION_FACTOR <= self.cutoff
    }
}

/// Transition rate `γ(ω)`: `J(ω)(1 + n(ω))` for emission, `J(|ω|) n(|ω|)`
/// for absorption, with Bose occupation `n(ω) = 1/(e^{ω/T} − 1)`.
pub fn ohmic_rate(frequency: f64, coupling: f64, cutoff: f64, temperature: f64) -> Result<f64, DissipatorError> {
    if frequency.abs() < DEGENERATE_FREQUENCY_TOL {
        return Err(DissipatorError::DegenerateFrequency { bath: Qubit::Q1, frequency });
    }
    let w = frequency.abs();
    let spectral = coupling * w * (-w / cutoff).exp();
    let occupation = 1.0 / (w / temperature).exp_m1();
    Ok(if frequency > 0.0 { spectral * (1.0 + occupation) } else { spectral * occupation })
}

/// One jump operator of the Ohmic Lindbladian.
///
/// `operator` lowers the energy of `H = h_loc + h_int` by `frequency`:
/// `[H, L] = −ω L`.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladTerm {
    pub frequency: f64,
    pub operator: ComplexMatrix,
    pub bath: Qubit,
}

fn basis(idx: usize) -> Vec<C64> {
    let mut v = vec![C64::new(0.0, 0.0); 8];
    v[idx] = C64::new(1.0, 0.0);
    v
}

/// `|±⟩ = (|010⟩ ± |101⟩)/√2`.
fn dressed(sign: f64) -> Vec<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut v = vec![C64::new(0.0, 0.0); 8];
    v[0b010] = C64::new(s, 0.0);
    v[0b101] = C64::new(sign * s, 0.0);
    v
}

/// The nine emission operators, as `(bath, frequency, operator)`.
///
/// Each bath has one operator at its bare splitting and two that connect
/// the dressed doublet `|±⟩` to the rest of the spectrum. The second operator
/// of each bath (`|+⟩⟨·|`, `|·⟩⟨−|`) removes `E_i − g`; the third removes
/// `E_i + g`.
fn emission_operators(p: &SystemParams) -> Vec<(Qubit, f64, ComplexMatrix)> {
    let [e1, e2, e3] = p.energies();
    let g = p.coupling();
    let plus = dressed(1.0);
    let minus = dressed(-1.0);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let o = |a: &[C64], b: &[C64]| ComplexMatrix::outer(a, b);
    let k = |bits: usize| basis(bits);
    let pair = |a: ComplexMatrix, b: ComplexMatrix, sign: f64| (&a + &b.scale_real(sign)).scale_real(r);
    vec![
        (Qubit::Q1, e1, &o(&k(0b111), &k(0b011)) + &o(&k(0b100), &k(0b000))),
        (Qubit::Q1, e1 - g, pair(o(&plus, &k(0b001)), o(&k(0b110), &minus), -1.0)),
        (Qubit::Q1, e1 + g, pair(o(&k(0b110), &plus), o(&minus, &k(0b001)), 1.0)),
        (Qubit::Q2, e2, &o(&k(0b110), &k(0b100)) + &o(&k(0b011), &k(0b001))),
        (Qubit::Q2, e2 - g, pair(o(&plus, &k(0b000)), o(&k(0b111), &minus), 1.0)),
        (Qubit::Q2, e2 + g, pair(o(&k(0b111), &plus), o(&minus, &k(0b000)), -1.0)),
        (Qubit::Q3, e3, &o(&k(0b111), &k(0b110)) + &o(&k(0b001), &k(0b000))),
        (Qubit::Q3, e3 - g, pair(o(&plus, &k(0b100)), o(&k(0b011), &minus), -1.0)),
        (Qubit::Q3, e3 + g, pair(o(&k(0b011), &plus), o(&minus, &k(0b100)), 1.0)),
    ]
}

/// All eighteen jump operators: the nine emission operators and their
/// adjoints at negated frequency.
pub fn lindblad_terms(p: &SystemParams) -> Result<Vec<LindbladTerm>, DissipatorError> {
    let mut terms = Vec::with_capacity(18);
    for (bath, frequency, operator) in emission_operators(p) {
        if frequency.abs() < DEGENERATE_FREQUENCY_TOL {
            return Err(DissipatorError::DegenerateFrequency { bath, frequency });
        }
        let adjoint = operator.adjoint();
        terms.push(LindbladTerm { frequency, operator, bath });
        terms.push(LindbladTerm { frequency: -frequency, operator: adjoint, bath });
    }
    Ok(terms)
}

/// Ohmic Lindbladian with rates and `L†L` cached per term.
#[derive(Debug, Clone)]
pub struct OhmicDissipator {
    bath: OhmicBath,
    terms: Vec<LindbladTerm>,
    rates: Vec<f64>,
    decay: Vec<ComplexMatrix>,
}

impl OhmicDissipator {
    pub fn new(bath: OhmicBath, terms: Vec<LindbladTerm>) -> Result<Self, DissipatorError> {
        let rates = terms.iter().map(|t| bath.rate(t.bath, t.frequency)).collect::<Result<Vec<_>, _>>()?;
        let decay = terms.iter().map(|t| t.operator.adjoint().matmul(&t.operator)).collect();
        Ok(Self { bath, terms, rates, decay })
    }

    pub fn bath(&self) -> &OhmicBath {
        &self.bath
    }

    pub fn terms(&self) -> &[LindbladTerm] {
        &self.terms
    }

    /// Rates aligned with [`OhmicDissipator::terms`].
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    fn accumulate(&self, rho: &ComplexMatrix, only: Option<Qubit>) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(8, 8);
        for ((term, &gamma), ldl) in self.terms.iter().zip(&self.rates).zip(&self.decay) {
            if only.is_some_and(|q| q != term.bath) || gamma == 0.0 {
                continue;
            }
            let l = &term.operator;
            let jump = l.matmul(rho).matmul(&l.adjoint());
            let damp = ldl.anticommutator(rho).scale_real(0.5);
            out += &(&jump - &damp).scale_real(gamma);
        }
        out
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.accumulate(rho, None)
    }

    /// Contribution of a single bath.
    pub fn apply_bath(&self, bath: Qubit, rho: &ComplexMatrix) -> ComplexMatrix {
        self.accumulate(rho, Some(bath))
    }
}

/// `Σ_{i,ω} γ_i(ω) (L ρ L† − ½{L†L, ρ})`.
pub fn ohmic_apply(
    bath: &OhmicBath,
    terms: &[LindbladTerm],
    rho: &DensityMatrix,
) -> Result<ComplexMatrix, DissipatorError> {
    Ok(OhmicDissipator::new(bath.clone(), terms.to_vec())?.apply(rho.matrix()))
}
