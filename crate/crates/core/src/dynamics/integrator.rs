//! Dormand–Prince 5(4) with the standard 4th-order continuous extension.

use crate::linalg::C64;

use super::DynamicsError;


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
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
// PI step control (Hairer's beta)
const BETA: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rel: 1e-8, abs: 1e-10 }
    }
}

impl Tolerances {
    pub fn new(rel: f64, abs: f64) -> Result<Self, DynamicsError> {
        if !(rel.is_finite() && rel > 0.0 && abs.is_finite() && abs > 0.0) {
            return Err(DynamicsError::InvalidTolerance { rel, abs });
        }
        Ok(Self { rel, abs })
    }
}

/// Step budget and size limits.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Limits {
    pub max_steps: usize,
    pub max_step: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self { max_steps: 20_000_000, max_step: f64::INFINITY }
    }
}

/// Dense-output coefficients for `n` unknowns, five blocks of length `n`.
pub(crate) fn dense_eval(coeffs: &[C64], theta: f64, out: &mut [C64]) {
    let n = out.len();
    let t1 = 1.0 - theta;
    for i in 0..n {
        let r = |k: usize| coeffs[k * n + i];
        out[i] = r(0) + (r(1) + (r(2) + (r(3) + r(4) * t1) * theta) * t1) * theta;
    }
}

/// One accepted step, handed to the observer.
pub(crate) struct Accepted<'a> {
    pub t_start: f64,
    pub h: f64,
    pub y: &'a [C64],
    pub dense: &'a [C64],
}

fn axpy(out: &mut [C64], y: &[C64], terms: &[(f64, &[C64])], h: f64) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            if *c != 0.0 {
                acc += k[i] * *c;
            }
        }
        out[i] = y[i] + acc * h;
    }
}

fn error_norm(err: &[C64], y0: &[C64], y1: &[C64], tol: Tolerances) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = tol.abs + tol.rel * a.norm().max(b.norm());
            (e.norm() / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Initial step heuristic from Hairer, Nørsett & Wanner.
fn initial_step<F>(f: &F, y0: &[C64], f0: &[C64], tol: Tolerances, span: f64) -> f64
where
    F: Fn(&[C64], &mut [C64]),
{
    let n = y0.len();
    let sc: Vec<f64> = y0.iter().map(|y| tol.abs + tol.rel * y.norm()).collect();
    let rms = |v: &[C64]| (v.iter().zip(&sc).map(|(x, s)| (x.norm() / s).powi(2)).sum::<f64>() / n as f64).sqrt();
    let d0 = rms(y0);
    let d1 = rms(f0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span);
    let y1: Vec<C64> = y0.iter().zip(f0).map(|(y, k)| y + k * h0).collect();
    let mut f1 = vec![C64::new(0.0, 0.0); n];
    f(&y1, &mut f1);
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates the autonomous system `y' = f(y)` from 0 to `t_end`.
///
/// `observe` sees every accepted step and may return a scale factor that is
/// applied to the new state before continuing (used for trace
/// renormalisation; valid because `f` is linear).
pub(crate) fn integrate<F, O>(
    f: F,
    y0: Vec<C64>,
    t_end: f64,
    tol: Tolerances,
    limits: Limits,
    mut observe: O,
) -> Result<Vec<C64>, DynamicsError>
where
    F: Fn(&[C64], &mut [C64]),
    O: FnMut(Accepted<'_>) -> Result<f64, DynamicsError>,
{
    let n = y0.len();
    let zero = C64::new(0.0, 0.0);
    let mut y = y0;
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut ys = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut err = vec![zero; n];
    let mut dense = vec![zero; 5 * n];

    f(&y, &mut k1);
    let mut t = 0.0;
    let mut h = initial_step(&f, &y, &k1, tol, t_end).min(limits.max_step);
    let mut err_old: f64 = 1e-4;
    let mut rejected_last = false;
    let mut steps = 0usize;

    while t < t_end {
        if steps >= limits.max_steps {
            return Err(DynamicsError::StepBudgetExhausted { t, steps });
        }
        steps += 1;
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(DynamicsError::StepUnderflow { t, h });
        }

        axpy(&mut ys, &y, &[(A21, &k1)], h);
        f(&ys, &mut k2);
        axpy(&mut ys, &y, &[(A31, &k1), (A32, &k2)], h);
        f(&ys, &mut k3);
        axpy(&mut ys, &y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h);
        f(&ys, &mut k4);
        axpy(&mut ys, &y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h);
        f(&ys, &mut k5);
        axpy(&mut ys, &y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h);
        f(&ys, &mut k6);
        axpy(&mut y_new, &y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
        f(&y_new, &mut k7);
        for i in 0..n {
            err[i] = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * h;
        }
        let e = error_norm(&err, &y, &y_new, tol);
        if !e.is_finite() {
            return Err(DynamicsError::NonFinite { t });
        }

        if e <= 1.0 {
            for i in 0..n {
                let r2 = y_new[i] - y[i];
                let r3 = k1[i] * h - r2;
                dense[i] = y[i];
                dense[n + i] = r2;
                dense[2 * n + i] = r3;
                dense[3 * n + i] = r2 - k7[i] * h - r3;
                dense[4 * n + i] = (k1[i] * D1 + k3[i] * D3 + k4[i] * D4 + k5[i] * D5 + k6[i] * D6 + k7[i] * D7) * h;
            }
            let scale = observe(Accepted { t_start: t, h, y: &y_new, dense: &dense })?;
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            if scale != 1.0 {
                y.iter_mut().for_each(|v| *v *= scale);
                k1.iter_mut().for_each(|v| *v *= scale);
            }
            let e = e.max(1e-10);
            let mut fac = SAFETY * e.powf(-(0.2 - 0.75 * BETA)) * err_old.powf(BETA);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected_last {
                fac = fac.min(1.0);
            }
            err_old = e;
            rejected_last = false;
            h = (h * fac).min(limits.max_step);
        } else {
            let fac = (SAFETY * e.powf(-0.2)).max(FAC_MIN);
            h *= fac;
            rejected_last = true;
        }
    }
    Ok(y)
}
