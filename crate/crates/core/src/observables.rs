//! Cold-qubit thermometry, heat currents, COP and regime labels.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dissipators::{DissipatorError, LindbladTerm, OhmicBath, OhmicDissipator, ResetChannel};
use crate::dynamics::{DynamicsError, Liouvillian, Trajectory};
use crate::linalg::ComplexMatrix;
use crate::model::{
    h_loc, hamiltonian, inverse_temperature, temperature_from_populations, LocalTemperature, ModelKind,
    SystemParams,
};
use crate::quantum::{embed, partial_trace, pauli_z, DensityMatrix, Qubit};

/// Default regime threshold as a fraction of `T1`.
pub const DEFAULT_THRESHOLD_FRACTION: f64 = 0.01;
/// Coarse-scan density for oscillating series.
pub const SAMPLES_PER_PERIOD: usize = 20;
/// Denominators below this make the COP undefined.
pub const COP_DENOMINATOR_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("temperature level {level} is never reached on [0, {t_max}]")]
    NotReached { level: f64, t_max: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Dissipator(#[from] DissipatorError),
}

/// Anything that can report the cold qubit's inverse temperature over `[0, t_max]`.
///
/// Working in `β` keeps the series smooth through `T → ∞` and population
/// inversion; larger `β` is colder.
pub trait ColdSeries {
    fn t_max(&self) -> f64;
    /// Natural sample points (integrator knots), ascending, starting at 0.
    fn knots(&self) -> &[f64];
    fn beta(&self, t: f64) -> f64;

    fn temperature(&self, t: f64) -> LocalTemperature {
        let b = self.beta(t);
        if b == 0.0 {
            LocalTemperature::Infinite
        } else if b > 0.0 {
            LocalTemperature::Finite(1.0 / b)
        } else {
            LocalTemperature::PopulationInversion(1.0 / b)
        }
    }
}

/// Qubit 1 of a trajectory.
#[derive(Debug, Clone, Copy)]
pub struct ColdQubit<'a> {
    traj: &'a Trajectory,
    e1: f64,
}

impl<'a> ColdQubit<'a> {
    pub fn new(traj: &'a Trajectory, e1: f64) -> Self {
        Self { traj, e1 }
    }
}

/// `(p_excited, p_ground)` of qubit 1 from the eight populations: the
/// leading bit of the basis index is qubit 1, and `|0⟩` is excited.
fn qubit1_populations(p: &[f64; 8]) -> (f64, f64) {
    (p[..4].iter().sum(), p[4..].iter().sum())
}

impl ColdSeries for ColdQubit<'_> {
    fn t_max(&self) -> f64 {
        self.traj.t_max()
    }

    fn knots(&self) -> &[f64] {
        self.traj.times()
    }

    fn beta(&self, t: f64) -> f64 {
        let p = self.traj.populations(t.clamp(0.0, self.traj.t_max())).expect("clamped into range");
        let (pe, pg) = qubit1_populations(&p);
        inverse_temperature(pe, pg, self.e1)
    }
}

/// Piecewise-linear temperature samples; handy for synthetic checks.
#[derive(Debug, Clone)]
pub struct SampledSeries {
    times: Vec<f64>,
    temperatures: Vec<f64>,
}

impl SampledSeries {
    pub fn new(times: Vec<f64>, temperatures: Vec<f64>) -> Result<Self, ObservableError> {
        let ok = times.len() >= 2
            && times.len() == temperatures.len()
            && times[0] == 0.0
            && times.windows(2).all(|w| w[1] > w[0])
            && temperatures.iter().all(|t| t.is_finite() && *t > 0.0);
        if !ok {
            return Err(ObservableError::NotApplicable("series needs ≥ 2 ascending samples from t=0 with T > 0".into()));
        }
        Ok(Self { times, temperatures })
    }
}

impl ColdSeries for SampledSeries {
    fn t_max(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn knots(&self) -> &[f64] {
        &self.times
    }

    fn beta(&self, t: f64) -> f64 {
        let k = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let (a, b) = (self.temperatures[k - 1], self.temperatures[k]);
        let s = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        1.0 / (a + s * (b - a))
    }
}

/// `T_c` at every stored knot.
pub fn cold_temperature_series(traj: &Trajectory, e1: f64) -> Vec<(f64, LocalTemperature)> {
    (0..traj.len())
        .map(|k| {
            let rho1 = partial_trace(&traj.state(k), &[Qubit::Q1]).expect("qubit 1 is a valid selection");
            let m = rho1.matrix();
            (traj.times()[k], temperature_from_populations(m[(0, 0)].re, m[(1, 1)].re, e1))
        })
        .collect()
}

/// Coarse-scan density and refinement resolution for [`find_min`].
#[derive(Debug, Clone, Copy)]
pub struct MinSearch {
    /// Expected oscillation period (π/g), if any.
    pub period: Option<f64>,
    pub samples_per_period: usize,
    /// Target time resolution as a fraction of `t_max`.
    pub resolution: f64,
}

impl MinSearch {
    pub fn for_coupling(g: f64) -> Self {
        Self {
            period: (g > 0.0).then(|| PI / g),
            samples_per_period: SAMPLES_PER_PERIOD,
            resolution: 1e-9,
        }
    }
}

impl Default for MinSearch {
    fn default() -> Self {
        Self { period: None, samples_per_period: SAMPLES_PER_PERIOD, resolution: 1e-9 }
    }
}

/// Knots merged with a uniform grid fine enough for the period.
fn scan_grid<S: ColdSeries + ?Sized>(series: &S, search: &MinSearch) -> Vec<f64> {
    let t_max = series.t_max();
    let mut grid: Vec<f64> = series.knots().to_vec();
    if let Some(period) = search.period {
        let dt = period / search.samples_per_period.max(1) as f64;
        let n = (t_max / dt).ceil() as usize;
        grid.extend((0..=n).map(|k| (k as f64 * dt).min(t_max)));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximises `β` on `[a, b]`.
fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimum cold-qubit temperature and the time it is reached.
///
/// Local maxima of `β` on the coarse grid are each refined by golden-section
/// search; near-degenerate candidates (frozen minima in successive
/// oscillations) are all refined so the coarse sampling phase cannot pick
/// the wrong one.
pub fn find_min<S: ColdSeries + ?Sized>(series: &S, search: &MinSearch) -> (f64, f64) {
    let grid = scan_grid(series, search);
    let betas: Vec<f64> = grid.iter().map(|&t| series.beta(t)).collect();
    let n = grid.len();
    let best_sample = betas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 5e-3 * best_sample.abs().max(1e-300);
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let left = k == 0 || betas[k] >= betas[k - 1];
            let right = k + 1 == n || betas[k] >= betas[k + 1];
            left && right && betas[k] >= best_sample - slack
        })
        .collect();
    candidates.sort_by(|&a, &b| betas[b].total_cmp(&betas[a]));
    candidates.truncate(64);

    let tol = search.resolution * series.t_max();
    let (mut t_best, mut b_best) = (grid[0], betas[0]);
    for k in candidates {
        let (t, b) = if k == 0 || k + 1 == n {
            (grid[k], betas[k])
        } else {
            let (t, b) = golden_max(|t| series.beta(t), grid[k - 1], grid[k + 1], tol);
            if b >= betas[k] {
                (t, b)
            } else {
                (grid[k], betas[k])
            }
        };
        if b > b_best {
            t_best = t;
            b_best = b;
        }
    }
    (1.0 / b_best, t_best)
}

/// First time `T_c` reaches `T1 − δ_c/2`, with `δ_c = T1 − T1s`.
pub fn half_time<S: ColdSeries + ?Sized>(
    series: &S,
    t1: f64,
    t1s: f64,
    search: &MinSearch,
) -> Result<f64, ObservableError> {
    let delta = t1 - t1s;
    if !(delta > 0.0) {
        return Err(ObservableError::NotApplicable(format!("δ_c = {delta} is not positive")));
    }
    let level = t1 - delta / 2.0;
    let target = 1.0 / level;
    let grid = scan_grid(series, search);
    let hit = grid.iter().position(|&t| series.beta(t) >= target);
    let k = hit.ok_or(ObservableError::NotReached { level, t_max: series.t_max() })?;
    if k == 0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (grid[k - 1], grid[k]);
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if series.beta(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `H_i = (E_i/2) σ^z_i` on the full register.
fn local_hamiltonian(p: &SystemParams, q: Qubit) -> ComplexMatrix {
    embed(&pauli_z().scale_real(p.energy(q) / 2.0), q.slot(), 3)
}

/// `Tr[H_i p_i(τ_i ⊗ Tr_i ρ − ρ)]`; positive `Q_1` cools qubit 1.
pub fn heat_current_reset(ch: &ResetChannel, p: &SystemParams, rho: &DensityMatrix, q: Qubit) -> f64 {
    local_hamiltonian(p, q).matmul(&ch.reset_term(q, rho.matrix())).trace().re
}

/// `Tr[(H_loc + H_int) Σ_ω γ_i(ω) φ_i^ω(ρ)]` for bath `q`.
pub fn heat_current_ohmic(
    bath: &OhmicBath,
    terms: &[LindbladTerm],
    p: &SystemParams,
    rho: &DensityMatrix,
    q: Qubit,
) -> Result<f64, ObservableError> {
    let d = OhmicDissipator::new(bath.clone(), terms.to_vec())?;
    Ok(hamiltonian(p).matmul(&d.apply_bath(q, rho.matrix())).trace().re)
}

/// Heat current into qubit `q` from its bath, for either model.
pub fn heat_current(l: &Liouvillian, rho: &DensityMatrix, q: Qubit) -> f64 {
    use crate::dynamics::Dissipator;
    let p = l.params();
    match l.dissipator() {
        Dissipator::Reset(ch) => heat_current_reset(ch, p, rho, q),
        Dissipator::Ohmic(d) => l.hamiltonian().matmul(&d.apply_bath(q, rho.matrix())).trace().re,
    }
}

/// `Tr[H_loc Φ(ρ)]`; for the reset model this is `Σ_i Q_i`.
pub fn local_energy_flow(l: &Liouvillian, rho: &DensityMatrix) -> f64 {
    h_loc(l.params()).matmul(&l.dissipate(rho.matrix())).trace().re
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Cop {
    Value(f64),
    Undefined,
}

impl Cop {
    pub fn value(self) -> Option<f64> {
        match self {
            Cop::Value(v) => Some(v),
            Cop::Undefined => None,
        }
    }
}

/// Which current sits in the COP denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CopDenominator {
    Q2,
    Q3,
}

impl CopDenominator {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Reset => CopDenominator::Q2,
            ModelKind::Ohmic => CopDenominator::Q3,
        }
    }

    pub fn qubit(self) -> Qubit {
        match self {
            CopDenominator::Q2 => Qubit::Q2,
            CopDenominator::Q3 => Qubit::Q3,
        }
    }
}

/// `Q1 / |Q_denom|`.
///
/// The denominator enters by magnitude: the room-bath current `Q2` is
/// negative while the machine runs, and the sign would otherwise flip the
/// ordering between configurations.
pub fn cop(q1: f64, q_denom: f64) -> Cop {
    if q_denom.abs() < COP_DENOMINATOR_TOL {
        Cop::Undefined
    } else {
        Cop::Value(q1 / q_denom.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegimeLabel {
    TcWithoutSsc,
    TcAndSsc,
    SscOnly,
    SteadyHeating,
    NoCooling,
}

impl RegimeLabel {
    pub const ALL: [RegimeLabel; 5] = [
        RegimeLabel::TcWithoutSsc,
        RegimeLabel::TcAndSsc,
        RegimeLabel::SscOnly,
        RegimeLabel::SteadyHeating,
        RegimeLabel::NoCooling,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeLabel::TcWithoutSsc => "TcWithoutSsc",
            RegimeLabel::TcAndSsc => "TcAndSsc",
            RegimeLabel::SscOnly => "SscOnly",
            RegimeLabel::SteadyHeating => "SteadyHeating",
            RegimeLabel::NoCooling => "NoCooling",
        }
    }
}

impl fmt::Display for RegimeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegimeLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RegimeLabel::ALL.into_iter().find(|l| l.as_str() == s).ok_or_else(|| format!("unknown regime '{s}'"))
    }
}

/// Regime from the cold-qubit figures of merit.
///
/// Under steady cooling the transient minimum can never exceed `T1s`, so
/// "transient cooling" there means dipping below the steady value by more
/// than `θ`; otherwise it means dipping below `T1`.
pub fn classify_regime(t1: f64, t1s: f64, tmin: f64, theta: f64) -> RegimeLabel {
    if t1s > t1 + theta {
        RegimeLabel::SteadyHeating
    } else if t1s < t1 - theta {
        if tmin < t1s - theta {
            RegimeLabel::TcAndSsc
        } else {
            RegimeLabel::SscOnly
        }
    } else if tmin < t1 - theta {
        RegimeLabel::TcWithoutSsc
    } else {
        RegimeLabel::NoCooling
    }
}

/// One run's cooling figures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoolingSummary {
    #[serde(rename = "T1s")]
    pub t1s: f64,
    #[serde(rename = "Tmin")]
    pub tmin: f64,
    #[serde(rename = "tmin")]
    pub t_at_min: f64,
    #[serde(rename = "tHalf")]
    pub t_half: Option<f64>,
    #[serde(rename = "deltaC")]
    pub delta_c: f64,
    pub regime: RegimeLabel,
    /// `T1` and `θ` used for labelling.
    #[serde(skip)]
    pub t1: f64,
    #[serde(skip)]
    pub threshold: f64,
}

impl CoolingSummary {
    /// Assembles the summary; `t_half` is searched only when `δ_c > θ`.
    pub fn from_series<S: ColdSeries + ?Sized>(
        series: &S,
        t1: f64,
        t1s: f64,
        search: &MinSearch,
        threshold: f64,
    ) -> Self {
        let (tmin, t_at_min) = find_min(series, search);
        let delta_c = t1 - t1s;
        let t_half = if delta_c > threshold { half_time(series, t1, t1s, search).ok() } else { None };
        Self {
            t1s,
            tmin,
            t_at_min,
            t_half,
            delta_c,
            regime: classify_regime(t1, t1s, tmin, threshold),
            t1,
            threshold,
        }
    }

    /// `T_c` dips below `T1` by more than the threshold at some time.
    pub fn has_transient_cooling(&self) -> bool {
        self.tmin < self.t1 - self.threshold
    }

    pub fn has_steady_cooling(&self) -> bool {
        self.delta_c > self.threshold
    }
}

/// Qubit-1 temperature of a full state.
pub fn cold_temperature(rho: &DensityMatrix, e1: f64) -> LocalTemperature {
    let r = partial_trace(rho, &[Qubit::Q1]).expect("qubit 1 is a valid selection");
    temperature_from_populations(r.matrix()[(0, 0)].re, r.matrix()[(1, 1)].re, e1)
}
