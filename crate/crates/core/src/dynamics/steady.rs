//! Steady states: null space of the generator, with long-time integration
//! as fallback and as an independent cross-check.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::linalg::{connected_components, ComplexMatrix, C64};
use crate::model::initial_state;
use crate::quantum::DensityMatrix;

use super::{integrate, DynamicsError, Limits, Liouvillian, ReducedGenerator, Tolerances};

/// Accepted residual `max |∂ρ/∂t|` for a steady state.
pub const STEADY_RESIDUAL_TOL: f64 = 1e-10;
/// Singular values at or below this count as null directions.
pub const NULL_SINGULAR_TOL: f64 = 1e-10;
/// Stopping residual for long-time integration. The slowest relaxation
/// rates in the shipped parameter ranges are ~1e-5, so residual 1e-10 can
/// leave entrywise errors near 1e-5; 1e-13 keeps them below 1e-8.
pub const LONG_TIME_RESIDUAL_TOL: f64 = 1e-13;
/// Integration error puts a floor under the reachable residual (about 5e-11
/// for the Ohmic presets at rel 1e-12). Once the residual stops improving,
/// anything at or below this is accepted.
pub const LONG_TIME_STALL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SteadyMethod {
    NullSpace,
    LongTimeIntegration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub state: DensityMatrix,
    pub residual: f64,
    pub method: SteadyMethod,
}

fn residual(l: &Liouvillian, rho: &ComplexMatrix) -> f64 {
    l.rhs(rho).max_abs()
}

fn unvec(v: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_row_major(8, 8, v.to_vec())
}

/// Hermitise and normalise a null vector; `None` if it carries no trace.
fn to_candidate(v: &[C64]) -> Option<ComplexMatrix> {
    let m = unvec(v);
    let tr = m.trace();
    if tr.norm() < 1e-12 {
        return None;
    }
    let h = m.scale(tr.inv()).hermitian_part();
    let t = h.trace().re;
    Some(h.scale_real(1.0 / t))
}

/// Smallest singular directions per connected block of the generator.
fn null_directions(m: &ComplexMatrix) -> Vec<(f64, Vec<C64>)> {
    let cut = 1e-15 * m.max_abs();
    let blocks = connected_components(64, |i, j| m[(i, j)].norm() > cut || m[(j, i)].norm() > cut);
    let mut out = Vec::new();
    for block in blocks {
        let k = block.len();
        let sub = DMatrix::from_fn(k, k, |i, j| m[(block[i], block[j])]);
        let svd = sub.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        for (s_idx, &sigma) in svd.singular_values.iter().enumerate() {
            let mut full = vec![C64::new(0.0, 0.0); 64];
            for (local, &global) in block.iter().enumerate() {
                full[global] = v_t[(s_idx, local)].conj();
            }
            out.push((sigma, full));
        }
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

/// Steady state from the null space of the 64×64 generator.
pub fn null_space_steady_state(l: &Liouvillian) -> Result<SteadyState, DynamicsError> {
    let dirs = null_directions(l.matrix());
    let null: Vec<&(f64, Vec<C64>)> = dirs.iter().filter(|(s, _)| *s <= NULL_SINGULAR_TOL).collect();
    if null.len() > 1 {
        let candidates = null
            .iter()
            .map(|(_, v)| to_candidate(v).unwrap_or_else(|| unvec(v)))
            .collect();
        return Err(DynamicsError::DegenerateSteadyState { dimension: null.len(), candidates });
    }
    // smallest direction that carries trace, even if above the null threshold
    let (sigma, m) = dirs
        .iter()
        .find_map(|(s, v)| to_candidate(v).map(|m| (*s, m)))
        .ok_or(DynamicsError::SteadyStateNotFound { residual: f64::INFINITY })?;
    let res = residual(l, &m);
    log::debug!("null space: sigma={sigma:e}, residual={res:e}");
    if res > STEADY_RESIDUAL_TOL {
        return Err(DynamicsError::SteadyStateNotFound { residual: res });
    }
    let state = DensityMatrix::new(m)?;
    Ok(SteadyState { state, residual: res, method: SteadyMethod::NullSpace })
}

#[derive(Debug, Clone, Copy)]
pub struct LongTimeOptions {
    pub residual_tol: f64,
    pub stall_tol: f64,
    /// Length of the first integration chunk; later chunks double up to `max_chunk`.
    pub chunk: f64,
    pub max_chunk: f64,
    /// Give up past this total time.
    pub t_limit: f64,
    pub tolerances: Tolerances,
}

impl Default for LongTimeOptions {
    fn default() -> Self {
        Self {
            residual_tol: LONG_TIME_RESIDUAL_TOL,
            stall_tol: LONG_TIME_STALL_TOL,
            chunk: 1e3,
            max_chunk: 1e5,
            t_limit: 1e8,
            tolerances: Tolerances { rel: 1e-12, abs: 1e-15 },
        }
    }
}

/// Integrates from `rho0` until the residual drops below the target.
pub fn long_time_steady_state(
    l: &Liouvillian,
    rho0: &DensityMatrix,
    opts: &LongTimeOptions,
) -> Result<SteadyState, DynamicsError> {
    let gen = l.reduced(rho0.matrix());
    let support = gen.support().to_vec();
    let mut y = gen.gather(rho0.matrix());
    let mut t = 0.0;
    let mut chunk = opts.chunk;
    let mut dy = vec![C64::new(0.0, 0.0); y.len()];
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    while t < opts.t_limit {
        y = integrate(|a, b| gen.apply(a, b), y, chunk, opts.tolerances, Limits::default(), |_| Ok(1.0))?;
        t += chunk;
        let tr: f64 = support.iter().zip(&y).filter(|(&k, _)| k % 9 == 0).map(|(_, v)| v.re).sum();
        y.iter_mut().for_each(|v| *v /= tr);
        gen.apply(&y, &mut dy);
        let res = dy.iter().map(|v| v.norm()).fold(0.0, f64::max);
        // full-length chunks that fail to halve the best residual
        if chunk >= opts.max_chunk && res > 0.5 * best {
            stalled += 1;
        } else {
            stalled = 0;
        }
        best = best.min(res);
        if res <= opts.residual_tol || (stalled >= 3 && res <= opts.stall_tol) {
            let m = ReducedGenerator::scatter(&support, &y).hermitian_part();
            let state = DensityMatrix::new(m.clone())?;
            let residual = residual(l, &m);
            log::debug!("long-time steady state at t={t:e}, residual {residual:e}");
            return Ok(SteadyState { state, residual, method: SteadyMethod::LongTimeIntegration });
        }
        chunk = (chunk * 2.0).min(opts.max_chunk);
    }
    Err(DynamicsError::SteadyStateNotFound { residual: best })
}

/// Null space first; long-time integration from the initial product state
/// if that fails for any reason other than degeneracy.
pub fn steady_state(l: &Liouvillian) -> Result<SteadyState, DynamicsError> {
    match null_space_steady_state(l) {
        Ok(s) => Ok(s),
        Err(e @ DynamicsError::DegenerateSteadyState { .. }) => Err(e),
        Err(e) => {
            log::warn!("null-space steady state failed ({e}); falling back to long-time integration");
            long_time_steady_state(l, &initial_state(l.params()), &LongTimeOptions::default())
        }
    }
}

#[derive(Debug, Clone)]
pub struct SteadyComparison {
    pub null_space: SteadyState,
    pub long_time: SteadyState,
    pub max_entry_difference: f64,
}

/// Both routes, independently, and their entrywise disagreement.
pub fn cross_validate(l: &Liouvillian) -> Result<SteadyComparison, DynamicsError> {
    let null_space = null_space_steady_state(l)?;
    let long_time = long_time_steady_state(l, &initial_state(l.params()), &LongTimeOptions::default())?;
    let diff = (null_space.state.matrix() - long_time.state.matrix()).max_abs();
    Ok(SteadyComparison { null_space, long_time, max_entry_difference: diff })
}
