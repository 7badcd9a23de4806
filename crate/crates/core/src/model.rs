//! System parameters, Hamiltonians, thermal states, canonical rate
//! generation and local temperatures.
//!
//! All quantities are dimensionless: energies and temperatures are in units
//! of the reference energy scale, time in units of ħ over that scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{ComplexMatrix, C64};
use crate::quantum::{DensityMatrix, Qubit};

/// Basis indices of the two resonant states coupled by the three-body term.
pub const RESONANT_PAIR: (usize, usize) = (0b010, 0b101);

/// Maximum single-qubit coherence tolerated by [`qubit_temperature`].
pub const DIAGONAL_TOL: f64 = 1e-9;

/// Ratio used to decide "much smaller than" in validity flags.
pub const SEPARATION_FACTOR: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid system parameters: {0}")]
    InvalidParams(String),
    #[error("invalid canonical rate exponents: {0}")]
    InvalidCip(String),
    #[error("single-qubit state has coherence {0:e}; local temperature undefined")]
    NotDiagonal(f64),
    #[error("expected a single-qubit state, got dimension {0}")]
    NotAQubit(usize),
}

/// Energies, temperatures and three-body coupling of the refrigerator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    energies: [f64; 3],
    temperatures: [f64; 3],
    coupling: f64,
}

impl SystemParams {
    /// `E2` is fixed to `E1 + E3`.
    pub fn new(e1: f64, e3: f64, temperatures: [f64; 3], coupling: f64) -> Result<Self, ModelError> {
        let energies = [e1, e1 + e3, e3];
        if energies.iter().chain(&temperatures).any(|v| !v.is_finite()) || !coupling.is_finite() {
            return Err(ModelError::InvalidParams("all parameters must be finite".into()));
        }
        if e1 <= 0.0 || e3 <= 0.0 {
            return Err(ModelError::InvalidParams(format!("energies must be positive, got E1={e1}, E3={e3}")));
        }
        if temperatures.iter().any(|&t| t <= 0.0) {
            return Err(ModelError::InvalidParams("temperatures must be positive".into()));
        }
        let [t1, t2, t3] = temperatures;
        if !(t1 <= t2 && t2 < t3) {
            return Err(ModelError::InvalidParams(format!(
                "temperatures must satisfy T1 <= T2 < T3, got ({t1}, {t2}, {t3})"
            )));
        }
        if coupling < 0.0 {
            return Err(ModelError::InvalidParams(format!("coupling must be non-negative, got {coupling}")));
        }
        Ok(Self { energies, temperatures, coupling })
    }

    /// E = (1, 101, 100), T = (1, 1, 100).
    pub fn reset_canonical(coupling: f64) -> Result<Self, ModelError> {
        Self::new(1.0, 100.0, [1.0, 1.0, 100.0], coupling)
    }

    /// E = (1, 2, 1), T = (1, 1, 2).
    pub fn ohmic_canonical(coupling: f64) -> Result<Self, ModelError> {
        Self::new(1.0, 1.0, [1.0, 1.0, 2.0], coupling)
    }

    pub fn with_coupling(self, coupling: f64) -> Result<Self, ModelError> {
        Self::new(self.energies[0], self.energies[2], self.temperatures, coupling)
    }

    pub fn with_hot_temperature(self, t3: f64) -> Result<Self, ModelError> {
        let [t1, t2, _] = self.temperatures;
        Self::new(self.energies[0], self.energies[2], [t1, t2, t3], self.coupling)
    }

    pub fn energies(&self) -> [f64; 3] {
        self.energies
    }

    pub fn energy(&self, q: Qubit) -> f64 {
        self.energies[q.slot()]
    }

    pub fn temperatures(&self) -> [f64; 3] {
        self.temperatures
    }

    pub fn temperature(&self, q: Qubit) -> f64 {
        self.temperatures[q.slot()]
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }
}

/// Exponents `(x, y)` of the canonical rate triple
/// `(10^-x, 10^-(x+y), 10^-(x-y))`, with optional swap and additive overlay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CipParams {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub swap_first_two: bool,
    #[serde(default)]
    pub perturbation: Option<[f64; 3]>,
}

impl CipParams {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y, swap_first_two: false, perturbation: None }
    }

    pub fn swapped(mut self) -> Self {
        self.swap_first_two = true;
        self
    }

    pub fn perturbed(mut self, eps: [f64; 3]) -> Self {
        self.perturbation = Some(eps);
        self
    }
}

/// The three qubit–bath rates generated from [`CipParams`].
pub fn cip_rates(c: &CipParams) -> Result<[f64; 3], ModelError> {
    if !(c.x.is_finite() && c.y.is_finite()) || c.x < 0.0 || c.y < 0.0 {
        return Err(ModelError::InvalidCip(format!("x and y must be finite and >= 0, got x={}, y={}", c.x, c.y)));
    }
    if c.x < c.y {
        return Err(ModelError::InvalidCip(format!(
            "x={} < y={} gives kappa3 = 10^{} > 1",
            c.x,
            c.y,
            c.y - c.x
        )));
    }
    let mut k = [10f64.powf(-c.x), 10f64.powf(-(c.x + c.y)), 10f64.powf(-(c.x - c.y))];
    if c.swap_first_two {
        k.swap(0, 1);
    }
    if let Some(eps) = c.perturbation {
        if eps.iter().any(|e| !e.is_finite() || *e < 0.0) {
            return Err(ModelError::InvalidCip("perturbations must be finite and >= 0".into()));
        }
        for (ki, e) in k.iter_mut().zip(eps) {
            *ki += e;
        }
    }
    Ok(k)
}

/// Thermalisation model and its rate parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelChoice {
    Reset { rates: [f64; 3] },
    Ohmic { couplings: [f64; 3], cutoff: f64 },
}

impl ModelChoice {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelChoice::Reset { .. } => ModelKind::Reset,
            ModelChoice::Ohmic { .. } => ModelKind::Ohmic,
        }
    }

    pub fn rates(&self) -> [f64; 3] {
        match *self {
            ModelChoice::Reset { rates } => rates,
            ModelChoice::Ohmic { couplings, .. } => couplings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Reset,
    Ohmic,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Reset => "reset",
            ModelKind::Ohmic => "ohmic",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "reset" => Ok(ModelKind::Reset),
            "ohmic" => Ok(ModelKind::Ohmic),
            other => Err(format!("unknown model '{other}' (expected reset or ohmic)")),
        }
    }
}

/// Local Hamiltonian `Σ (E_i/2) σ_i^z`, diagonal in the computational basis.
pub fn h_loc(p: &SystemParams) -> ComplexMatrix {
    let diag: Vec<f64> = (0..8)
        .map(|idx| {
            (0..3)
                .map(|slot| {
                    let excited = crate::quantum::bit(idx, slot, 3) == 0;
                    if excited { 0.5 * p.energies[slot] } else { -0.5 * p.energies[slot] }
                })
                .sum()
        })
        .collect();
    ComplexMatrix::from_real_diagonal(&diag)
}

/// Three-body coupling `g(|010⟩⟨101| + h.c.)`.
pub fn h_int(p: &SystemParams) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(8, 8);
    let (a, b) = RESONANT_PAIR;
    m[(a, b)] = C64::new(p.coupling, 0.0);
    m[(b, a)] = C64::new(p.coupling, 0.0);
    m
}

/// `h_loc + h_int`.
pub fn hamiltonian(p: &SystemParams) -> ComplexMatrix {
    &h_loc(p) + &h_int(p)
}

/// Gibbs state of one qubit: `diag(p_excited, p_ground)`.
pub fn thermal_qubit(energy: f64, temperature: f64) -> DensityMatrix {
    let r = energy / temperature;
    let p_excited = 1.0 / (1.0 + r.exp());
    let p_ground = 1.0 / (1.0 + (-r).exp());
    DensityMatrix::from_matrix_unchecked(ComplexMatrix::from_real_diagonal(&[p_excited, p_ground]))
}

/// Product of the three single-qubit thermal states.
pub fn initial_state(p: &SystemParams) -> DensityMatrix {
    let [a, b, c] = [0, 1, 2].map(|i| thermal_qubit(p.energies[i], p.temperatures[i]));
    let m = a.matrix().kron(b.matrix()).kron(c.matrix());
    DensityMatrix::from_matrix_unchecked(m)
}

/// Temperature read off a diagonal qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalTemperature {
    Finite(f64),
    /// Equal populations.
    Infinite,
    /// Excited population exceeds ground; carries the (negative) Gibbs value.
    PopulationInversion(f64),
}

impl LocalTemperature {
    /// Numeric value, `+inf` for [`LocalTemperature::Infinite`].
    pub fn value(self) -> f64 {
        match self {
            LocalTemperature::Finite(t) | LocalTemperature::PopulationInversion(t) => t,
            LocalTemperature::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite_positive(self) -> bool {
        matches!(self, LocalTemperature::Finite(_))
    }
}

/// `E / ln(p_g / p_e)`; the inverse temperature for a qubit of splitting
/// `energy`, well defined across population inversion.
pub fn inverse_temperature(p_excited: f64, p_ground: f64, energy: f64) -> f64 {
    (p_ground.ln() - p_excited.ln()) / energy
}

/// Local temperature of a (diagonal) single-qubit state.
pub fn qubit_temperature(rho1: &DensityMatrix, energy: f64) -> Result<LocalTemperature, ModelError> {
    if rho1.dim() != 2 {
        return Err(ModelError::NotAQubit(rho1.dim()));
    }
    let m = rho1.matrix();
    let coherence = m[(0, 1)].norm();
    if coherence > DIAGONAL_TOL {
        return Err(ModelError::NotDiagonal(coherence));
    }
    Ok(temperature_from_populations(m[(0, 0)].re, m[(1, 1)].re, energy))
}

pub(crate) fn temperature_from_populations(p_excited: f64, p_ground: f64, energy: f64) -> LocalTemperature {
    let beta = inverse_temperature(p_excited, p_ground, energy);
    if beta == 0.0 {
        LocalTemperature::Infinite
    } else if beta > 0.0 {
        LocalTemperature::Finite(1.0 / beta)
    } else {
        LocalTemperature::PopulationInversion(1.0 / beta)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rates_from_exponents() {
        let k = cip_rates(&CipParams::new(3.5, 2.5)).unwrap();
        for (a, b) in k.iter().zip([10f64.powf(-3.5), 1e-6, 1e-1]) {
            assert!(close(*a, b, 1e-15 * b.max(1e-300)));
        }
        assert_eq!(cip_rates(&CipParams::new(0.0, 0.0)).unwrap(), [1.0, 1.0, 1.0]);
        let k = cip_rates(&CipParams::new(4.0, 1.0)).unwrap();
        for (a, b) in k.iter().zip([1e-4, 1e-5, 1e-3]) {
            assert!(close(*a, b, 1e-18));
        }
    }

    #[test]
    fn rate_swap_and_overlay() {
        let k = cip_rates(&CipParams::new(3.5, 2.5).swapped()).unwrap();
        assert!(close(k[0], 1e-6, 1e-20) && close(k[1], 10f64.powf(-3.5), 1e-18));
        let k = cip_rates(&CipParams::new(3.5, 2.5).perturbed([1e-5, 1e-7, 1e-3])).unwrap();
        assert!(close(k[2], 0.101, 1e-15));
    }

    #[test]
    fn hot_rate_above_one_rejected() {
        let err = cip_rates(&CipParams::new(1.0, 2.0)).unwrap_err();
        assert!(err.to_string().contains("kappa3"));
        assert!(cip_rates(&CipParams::new(-1.0, 0.0)).is_err());
    }

    #[test]
    fn cip_ordering_holds_on_grid() {
        for i in 0..=20 {
            for j in 0..=i {
                let (x, y) = (0.25 * i as f64, 0.25 * j as f64);
                let [k1, k2, k3] = cip_rates(&CipParams::new(x, y)).unwrap();
                assert!(k2 <= k1 && k1 <= k3 && k3 <= 1.0);
            }
        }
    }

    #[test]
    fn params_enforce_constraints() {
        let p = SystemParams::new(1.0, 100.0, [1.0, 1.0, 100.0], 0.01).unwrap();
        assert_eq!(p.energies(), [1.0, 101.0, 100.0]);
        assert!(SystemParams::new(1.0, 1.0, [1.0, 2.0, 2.0], 0.1).is_err());
        assert!(SystemParams::new(1.0, 1.0, [2.0, 1.0, 3.0], 0.1).is_err());
        assert!(SystemParams::new(0.0, 1.0, [1.0, 1.0, 3.0], 0.1).is_err());
        assert!(SystemParams::new(1.0, 1.0, [1.0, 1.0, 3.0], -0.1).is_err());
    }

    #[test]
    fn local_hamiltonian_entries() {
        let p = SystemParams::ohmic_canonical(0.5).unwrap();
        let h = h_loc(&p);
        assert!(close(h[(0, 0)].re, 2.0, 1e-15));
        assert_eq!(h[(0b010, 0b010)].re, 0.0);
        assert_eq!(h[(0b101, 0b101)].re, 0.0);
        assert!(h.trace().norm() < 1e-15);
    }

    #[test]
    fn interaction_entries_and_commutation() {
        let p = SystemParams::reset_canonical(1e-2).unwrap();
        let h = h_int(&p);
        assert_eq!(h[(2, 5)].re, 1e-2);
        let nonzero = h.as_slice().iter().filter(|z| z.norm() > 0.0).count();
        assert_eq!(nonzero, 2);
        assert_eq!(h_loc(&p).commutator(&h).max_abs(), 0.0);
        let zero = SystemParams::reset_canonical(0.0).unwrap();
        assert_eq!(h_int(&zero).max_abs(), 0.0);
    }

    #[test]
    fn resonant_block_spectrum() {
        let g = 0.37;
        let p = SystemParams::ohmic_canonical(g).unwrap();
        let h = hamiltonian(&p);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for sign in [1.0, -1.0] {
            let mut v = vec![C64::new(0.0, 0.0); 8];
            v[2] = C64::new(s, 0.0);
            v[5] = C64::new(sign * s, 0.0);
            let hv = h.apply(&v);
            for k in 0..8 {
                assert!((hv[k] - v[k] * (sign * g)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn thermal_qubit_populations() {
        let r = thermal_qubit(1.0, 1.0);
        assert!(close(r.matrix()[(1, 1)].re, 0.731058578630, 1e-9));
        assert!(close(r.matrix()[(0, 0)].re, 0.268941421370, 1e-9));
        let hot = thermal_qubit(1.0, 1e9);
        assert!(close(hot.matrix()[(0, 0)].re, 0.5, 1e-9));
        let scaled = thermal_qubit(100.0, 100.0);
        assert!(scaled.matrix().approx_eq(r.matrix(), 1e-15));
    }

    #[test]
    fn initial_state_structure() {
        let p = SystemParams::new(1.0, 1.0, [1e9, 1e9 + 1.0, 1e9 + 2.0], 0.0).unwrap();
        let rho = initial_state(&p);
        assert!(rho.matrix().approx_eq(&ComplexMatrix::identity(8).scale_real(0.125), 1e-9));

        let p = SystemParams::ohmic_canonical(0.5).unwrap();
        let rho = initial_state(&p);
        let m = rho.matrix();
        assert!(m[(0b010, 0b010)].re > m[(0b101, 0b101)].re);
        assert!(close(m.trace().re, 1.0, 1e-14));
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_eq!(m[(i, j)].norm(), 0.0);
                }
            }
        }
        assert_eq!(m.commutator(&h_loc(&p)).max_abs(), 0.0);
    }

    #[test]
    fn temperature_extraction() {
        let rho = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.268941, 0.731059])).unwrap();
        let t = qubit_temperature(&rho, 1.0).unwrap().value();
        assert!(close(t, 1.0, 1e-5));
        let flat = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.5, 0.5])).unwrap();
        assert_eq!(qubit_temperature(&flat, 1.0).unwrap(), LocalTemperature::Infinite);
        let inv = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.7, 0.3])).unwrap();
        match qubit_temperature(&inv, 1.0).unwrap() {
            LocalTemperature::PopulationInversion(t) => assert!(t < 0.0),
            other => panic!("expected inversion, got {other:?}"),
        }
    }

    #[test]
    fn temperature_rejects_coherent_qubit() {
        let mut m = ComplexMatrix::from_real_diagonal(&[0.4, 0.6]);
        m[(0, 1)] = C64::new(1e-6, 0.0);
        m[(1, 0)] = C64::new(1e-6, 0.0);
        let rho = DensityMatrix::new(m).unwrap();
        assert!(matches!(qubit_temperature(&rho, 1.0), Err(ModelError::NotDiagonal(_))));
    }

    #[test]
    fn temperature_round_trip() {
        for e in [0.1, 1.0, 100.0] {
            for t in [0.5, 1.0, 100.0] {
                let back = qubit_temperature(&thermal_qubit(e, t), e).unwrap().value();
                assert!(close(back, t, 1e-9 * t.max(1.0)), "E={e} T={t}: {back}");
            }
        }
    }
}
