//! Master-equation generator, time evolution and steady states.

mod integrator;
mod steady;

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::dissipators::{
    lindblad_terms, DissipatorError, OhmicBath, OhmicDissipator, ResetChannel,
};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, LinalgError, C64};
use crate::model::{hamiltonian, ModelChoice, ModelKind, SystemParams, RESONANT_PAIR};
use crate::quantum::{DensityMatrix, Qubit, StateError, HERMITICITY_TOL, POSITIVITY_TOL};

pub use integrator::Tolerances;
pub(crate) use integrator::{integrate, Limits};
pub use steady::{
    cross_validate, long_time_steady_state, null_space_steady_state, steady_state, LongTimeOptions,
    SteadyComparison, SteadyMethod, SteadyState, LONG_TIME_RESIDUAL_TOL, NULL_SINGULAR_TOL,
    STEADY_RESIDUAL_TOL,
};

/// Default horizon for the reset model.
pub const RESET_HORIZON: f64 = 1e5;
/// Default horizon for the Ohmic model.
pub const OHMIC_HORIZON: f64 = 5e4;

/// Generator entries below this fraction of the largest are structural zeros.
const SPARSITY_TOL: f64 = 1e-15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("tolerances must be finite and positive (rel={rel}, abs={abs})")]
    InvalidTolerance { rel: f64, abs: f64 },
    #[error("horizon must be finite and positive, got {0}")]
    InvalidHorizon(f64),
    #[error("step size underflow at t={t} (h={h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("step budget exhausted at t={t} after {steps} steps")]
    StepBudgetExhausted { t: f64, steps: usize },
    #[error("non-finite state encountered at t={t}")]
    NonFinite { t: f64 },
    #[error("state lost Hermiticity at t={t} (defect {defect:e})")]
    NotHermitian { t: f64, defect: f64 },
    #[error("state lost positivity at t={t} (eigenvalue {min_eigenvalue:e}); check stiffness settings")]
    NotPositive { t: f64, min_eigenvalue: f64 },
    #[error("time {t} outside trajectory range [0, {t_max}]")]
    OutOfRange { t: f64, t_max: f64 },
    #[error("steady state is not unique: null space has dimension {dimension}")]
    DegenerateSteadyState { dimension: usize, candidates: Vec<ComplexMatrix> },
    #[error("no steady state found (best residual {residual:e})")]
    SteadyStateNotFound { residual: f64 },
    #[error(transparent)]
    Dissipator(#[from] DissipatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    State(#[from] StateError),
}

#[derive(Debug, Clone)]
pub enum Dissipator {
    Reset(ResetChannel),
    Ohmic(OhmicDissipator),
}

/// `∂ρ/∂t = −i[H, ρ] + Φ(ρ)` with the 64×64 matrix form cached.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    params: SystemParams,
    hamiltonian: ComplexMatrix,
    dissipator: Dissipator,
    matrix: ComplexMatrix,
}

impl Liouvillian {
    pub fn reset(params: &SystemParams, channel: ResetChannel) -> Self {
        Self::build(params, Dissipator::Reset(channel))
    }

    pub fn ohmic(params: &SystemParams, dissipator: OhmicDissipator) -> Self {
        Self::build(params, Dissipator::Ohmic(dissipator))
    }

    pub fn from_model(params: &SystemParams, model: &ModelChoice) -> Result<Self, DynamicsError> {
        Ok(match *model {
            ModelChoice::Reset { rates } => Self::reset(params, ResetChannel::new(params, rates)?),
            ModelChoice::Ohmic { couplings, cutoff } => {
                let bath = OhmicBath::for_params(params, couplings, cutoff)?;
                Self::ohmic(params, OhmicDissipator::new(bath, lindblad_terms(params)?)?)
            }
        })
    }

    fn build(params: &SystemParams, dissipator: Dissipator) -> Self {
        let mut l = Self {
            params: *params,
            hamiltonian: hamiltonian(params),
            dissipator,
            matrix: ComplexMatrix::zeros(1, 1),
        };
        l.matrix = l.assemble();
        l
    }

    /// Column `8a + b` is `rhs(|a⟩⟨b|)` in row-major vectorisation.
    fn assemble(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(64, 64);
        for a in 0..8 {
            for b in 0..8 {
                let out = self.rhs(&ComplexMatrix::basis_outer(8, a, b));
                for (r, v) in out.as_slice().iter().enumerate() {
                    m[(r, 8 * a + b)] = *v;
                }
            }
        }
        m
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn hamiltonian(&self) -> &ComplexMatrix {
        &self.hamiltonian
    }

    pub fn dissipator(&self) -> &Dissipator {
        &self.dissipator
    }

    pub fn kind(&self) -> ModelKind {
        match self.dissipator {
            Dissipator::Reset(_) => ModelKind::Reset,
            Dissipator::Ohmic(_) => ModelKind::Ohmic,
        }
    }

    /// Row-major vectorised generator.
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Φ alone.
    pub fn dissipate(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match &self.dissipator {
            Dissipator::Reset(ch) => ch.apply(rho),
            Dissipator::Ohmic(d) => d.apply(rho),
        }
    }

    /// Contribution of the bath attached to `q`.
    pub fn dissipate_bath(&self, q: Qubit, rho: &ComplexMatrix) -> ComplexMatrix {
        match &self.dissipator {
            Dissipator::Reset(ch) => ch.reset_term(q, rho),
            Dissipator::Ohmic(d) => d.apply_bath(q, rho),
        }
    }

    /// Works on any 8×8 matrix, not only states.
    pub fn rhs(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        let unitary = self.hamiltonian.commutator(rho).scale(C64::new(0.0, -1.0));
        &unitary + &self.dissipate(rho)
    }

    /// Support closure of `seed` (vectorised indices) under the generator.
    pub(crate) fn reachable(&self, seed: &[usize]) -> Vec<usize> {
        let m = &self.matrix;
        let cut = SPARSITY_TOL * m.max_abs();
        let mut seen = [false; 64];
        let mut queue: Vec<usize> = Vec::new();
        for &s in seed {
            if !seen[s] {
                seen[s] = true;
                queue.push(s);
            }
        }
        let mut head = 0;
        while head < queue.len() {
            let c = queue[head];
            head += 1;
            for r in 0..64 {
                if !seen[r] && m[(r, c)].norm() > cut {
                    seen[r] = true;
                    queue.push(r);
                }
            }
        }
        queue.sort_unstable();
        queue
    }

    pub(crate) fn reduced(&self, rho0: &ComplexMatrix) -> ReducedGenerator {
        let seed: Vec<usize> = (0..64).filter(|&k| rho0.as_slice()[k] != C64::new(0.0, 0.0)).collect();
        ReducedGenerator::new(&self.matrix, self.reachable(&seed))
    }
}

/// `−i[H, ρ] + Φ(ρ)`.
pub fn rhs(l: &Liouvillian, rho: &DensityMatrix) -> ComplexMatrix {
    l.rhs(rho.matrix())
}

pub fn liouvillian_matrix(l: &Liouvillian) -> ComplexMatrix {
    l.matrix.clone()
}

/// Generator restricted to an invariant set of vectorised entries, in CSR form.
#[derive(Debug, Clone)]
pub(crate) struct ReducedGenerator {
    support: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
}

impl ReducedGenerator {
    fn new(m: &ComplexMatrix, support: Vec<usize>) -> Self {
        let cut = SPARSITY_TOL * m.max_abs();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for &r in &support {
            for (local, &c) in support.iter().enumerate() {
                let v = m[(r, c)];
                if v.norm() > cut {
                    cols.push(local);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { support, row_ptr, cols, vals }
    }

    pub(crate) fn support(&self) -> &[usize] {
        &self.support
    }

    pub(crate) fn apply(&self, y: &[C64], dy: &mut [C64]) {
        for (i, out) in dy.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.vals[k] * y[self.cols[k]];
            }
            *out = acc;
        }
    }

    pub(crate) fn gather(&self, rho: &ComplexMatrix) -> Vec<C64> {
        self.support.iter().map(|&k| rho.as_slice()[k]).collect()
    }

    pub(crate) fn scatter(support: &[usize], y: &[C64]) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(8, 8);
        for (&k, v) in support.iter().zip(y) {
            m.as_mut_slice()[k] = *v;
        }
        m
    }
}

fn reduced_trace(support: &[usize], y: &[C64]) -> f64 {
    support.iter().zip(y).filter(|(&k, _)| k % 9 == 0).map(|(_, v)| v.re).sum()
}

/// Controls for [`evolve_with`].
#[derive(Debug, Clone, Copy)]
pub struct EvolveOptions {
    pub t_max: f64,
    pub tolerances: Tolerances,
    /// Upper bound on accepted plus rejected steps.
    pub max_steps: usize,
    pub max_step: f64,
}

impl EvolveOptions {
    pub fn new(t_max: f64) -> Self {
        let d = Limits::default();
        Self { t_max, tolerances: Tolerances::default(), max_steps: d.max_steps, max_step: d.max_step }
    }

    pub fn with_tolerances(mut self, tolerances: Tolerances) -> Self {
        self.tolerances = tolerances;
        self
    }
}

/// Integration diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub accepted_steps: usize,
    /// Entries actually integrated (closure of the initial support).
    pub reachable_entries: usize,
    /// Largest single-step trace error before renormalisation.
    pub max_step_drift: f64,
    /// Sum of per-step trace errors over the run.
    pub cumulative_drift: f64,
    pub min_eigenvalue: f64,
    pub max_hermiticity_defect: f64,
}

/// Dense solution of the master equation on `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    support: Vec<usize>,
    times: Vec<f64>,
    knots: Vec<C64>,
    dense: Vec<C64>,
    stats: IntegrationStats,
}

impl Trajectory {
    fn width(&self) -> usize {
        self.support.len()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("trajectory has a start knot")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn stats(&self) -> &IntegrationStats {
        &self.stats
    }

    fn knot(&self, k: usize) -> &[C64] {
        let n = self.width();
        &self.knots[k * n..(k + 1) * n]
    }

    /// Stored state at knot `k`.
    pub fn state(&self, k: usize) -> DensityMatrix {
        let m = ReducedGenerator::scatter(&self.support, self.knot(k)).hermitian_part();
        DensityMatrix::from_matrix_unchecked(m)
    }

    pub(crate) fn eval_reduced(&self, t: f64, out: &mut [C64]) -> Result<(), DynamicsError> {
        let t_max = self.t_max();
        if !(0.0..=t_max).contains(&t) {
            return Err(DynamicsError::OutOfRange { t, t_max });
        }
        let n = self.width();
        let seg = self.times.partition_point(|&x| x <= t).saturating_sub(1);
        if seg + 1 >= self.times.len() {
            out.copy_from_slice(self.knot(self.times.len() - 1));
            return Ok(());
        }
        let (t0, t1) = (self.times[seg], self.times[seg + 1]);
        let theta = (t - t0) / (t1 - t0);
        integrator::dense_eval(&self.dense[seg * 5 * n..(seg + 1) * 5 * n], theta, out);
        let tr = reduced_trace(&self.support, out);
        out.iter_mut().for_each(|v| *v /= tr);
        Ok(())
    }

    /// Interpolated state, renormalised to unit trace.
    pub fn eval(&self, t: f64) -> Result<DensityMatrix, DynamicsError> {
        let mut y = vec![C64::new(0.0, 0.0); self.width()];
        self.eval_reduced(t, &mut y)?;
        let m = ReducedGenerator::scatter(&self.support, &y).hermitian_part();
        Ok(DensityMatrix::from_matrix_unchecked(m))
    }

    /// Computational-basis populations at `t`.
    pub fn populations(&self, t: f64) -> Result<[f64; 8], DynamicsError> {
        let mut y = vec![C64::new(0.0, 0.0); self.width()];
        self.eval_reduced(t, &mut y)?;
        let mut p = [0.0; 8];
        for (&k, v) in self.support.iter().zip(&y) {
            if k % 9 == 0 {
                p[k / 9] = v.re;
            }
        }
        Ok(p)
    }

    /// Knot-by-knot dump: time, the eight populations and the resonant coherence.
    pub fn write_csv<W: Write>(&self, writer: W, stride: usize) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        header.extend((0..8).map(|i| format!("p{i:03b}")));
        header.extend(["coh_re".to_string(), "coh_im".to_string()]);
        w.write_record(&header)?;
        let coh = 8 * RESONANT_PAIR.0 + RESONANT_PAIR.1;
        let mut k = 0;
        while k < self.len() {
            let y = self.knot(k);
            let mut row = vec![self.times[k].to_string()];
            let mut p = [0.0; 8];
            let mut c = C64::new(0.0, 0.0);
            for (&idx, v) in self.support.iter().zip(y) {
                if idx % 9 == 0 {
                    p[idx / 9] = v.re;
                } else if idx == coh {
                    c = *v;
                }
            }
            row.extend(p.iter().map(|x| x.to_string()));
            row.push(c.re.to_string());
            row.push(c.im.to_string());
            w.write_record(&row)?;
            k += stride.max(1);
        }
        w.flush()?;
        Ok(())
    }

    /// Verbose dump: time and all 64 entries as `re_ab,im_ab` pairs (row-major).
    pub fn write_csv_full<W: Write>(&self, writer: W, stride: usize) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["t".to_string()];
        for k in 0..64 {
            header.push(format!("re_{}{}", k / 8, k % 8));
            header.push(format!("im_{}{}", k / 8, k % 8));
        }
        w.write_record(&header)?;
        let mut k = 0;
        while k < self.len() {
            let mut full = [C64::new(0.0, 0.0); 64];
            for (&idx, v) in self.support.iter().zip(self.knot(k)) {
                full[idx] = *v;
            }
            let mut row = vec![self.times[k].to_string()];
            for z in full {
                row.push(z.re.to_string());
                row.push(z.im.to_string());
            }
            w.write_record(&row)?;
            k += stride.max(1);
        }
        w.flush()?;
        Ok(())
    }
}

/// Adaptive integration with default tolerances overridden by `rel_tol`, `abs_tol`.
pub fn evolve(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    t_max: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Trajectory, DynamicsError> {
    evolve_with(l, rho0, &EvolveOptions::new(t_max).with_tolerances(Tolerances::new(rel_tol, abs_tol)?))
}

pub fn evolve_with(l: &Liouvillian, rho0: &DensityMatrix, opts: &EvolveOptions) -> Result<Trajectory, DynamicsError> {
    if !(opts.t_max.is_finite() && opts.t_max > 0.0) {
        return Err(DynamicsError::InvalidHorizon(opts.t_max));
    }
    let tol = Tolerances::new(opts.tolerances.rel, opts.tolerances.abs)?;
    let gen = l.reduced(rho0.matrix());
    let support = gen.support().to_vec();
    let n = support.len();
    let y0 = gen.gather(rho0.matrix());

    let mut times = vec![0.0];
    let mut knots = y0.clone();
    let mut dense = Vec::new();
    let mut stats = IntegrationStats {
        reachable_entries: n,
        min_eigenvalue: rho0.min_eigenvalue(),
        ..Default::default()
    };
    let limits = Limits { max_steps: opts.max_steps, max_step: opts.max_step };

    integrate(|y, dy| gen.apply(y, dy), y0, opts.t_max, tol, limits, |acc| {
        let t = (acc.t_start + acc.h).min(opts.t_max);
        let tr = reduced_trace(&support, acc.y);
        let drift = (tr - 1.0).abs();
        stats.max_step_drift = stats.max_step_drift.max(drift);
        stats.cumulative_drift += drift;
        let scale = 1.0 / tr;
        let m = ReducedGenerator::scatter(&support, acc.y);
        let defect = m.hermiticity_defect();
        stats.max_hermiticity_defect = stats.max_hermiticity_defect.max(defect);
        if defect > HERMITICITY_TOL {
            return Err(DynamicsError::NotHermitian { t, defect });
        }
        let min = hermitian_eigenvalues(&m.hermitian_part())?[0] * scale;
        stats.min_eigenvalue = stats.min_eigenvalue.min(min);
        if min < -POSITIVITY_TOL {
            return Err(DynamicsError::NotPositive { t, min_eigenvalue: min });
        }
        stats.accepted_steps += 1;
        times.push(t);
        knots.extend(acc.y.iter().map(|v| v * scale));
        dense.extend_from_slice(acc.dense);
        Ok(scale)
    })?;

    log::debug!(
        "evolve: {} steps over {} entries, max step drift {:e}, cumulative {:e}",
        stats.accepted_steps,
        n,
        stats.max_step_drift,
        stats.cumulative_drift
    );
    Ok(Trajectory { support, times, knots, dense, stats })
}
