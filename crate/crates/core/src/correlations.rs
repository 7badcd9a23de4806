//! Bipartite and tripartite correlation measures.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{DynamicsError, Trajectory};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, C64};
use crate::parallel::{self, Execution};
use crate::quantum::{
    partial_trace, partial_trace_slots, partial_transpose_matrix, shannon_bits, DensityMatrix, Qubit,
};

/// Off-diagonal entries outside the anti-diagonal above this break X structure.
pub const X_STRUCTURE_TOL: f64 = 1e-9;

const PHI_GRID: usize = 64;
const THETA_GRID: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("state is not X-structured (off-anti-diagonal coherence {0:e})")]
    NotXState(f64),
    #[error("witness needs a three-qubit state, got dimension {0}")]
    NotThreeQubit(usize),
    #[error("party {party} is not part of a {qubits}-qubit state")]
    InvalidParty { party: Qubit, qubits: usize },
    #[error("invalid sampling window [{start}, {end}]")]
    InvalidWindow { start: f64, end: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
}

/// `solo : rest` split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bipartition {
    pub solo: Qubit,
}

impl Bipartition {
    pub const ONE_REST: Bipartition = Bipartition { solo: Qubit::Q1 };

    pub fn new(solo: Qubit) -> Self {
        Self { solo }
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rest: String = Qubit::ALL.iter().filter(|&&q| q != self.solo).map(|q| q.to_string()).collect();
        write!(f, "{}:{}", self.solo, rest)
    }
}

fn check_party(rho: &DensityMatrix, party: Qubit) -> Result<usize, CorrelationError> {
    let n = rho.num_qubits();
    if party.slot() >= n || n < 2 {
        return Err(CorrelationError::InvalidParty { party, qubits: n });
    }
    Ok(n)
}

/// `log₂ ‖ρ^{T_solo}‖₁`.
pub fn log_negativity(rho: &DensityMatrix, b: Bipartition) -> Result<f64, CorrelationError> {
    let n = check_party(rho, b.solo)?;
    let pt = partial_transpose_matrix(rho.matrix(), n, b.solo.slot());
    let spectrum = hermitian_eigenvalues(&pt).expect("partial transpose of a Hermitian matrix is Hermitian");
    let norm: f64 = spectrum.iter().map(|l| l.abs()).sum();
    Ok(norm.log2().max(0.0))
}

fn entropy_of(m: &ComplexMatrix) -> f64 {
    shannon_bits(hermitian_eigenvalues(m).expect("reduced states are Hermitian"))
}

/// Blocks `R_ab = ⟨a|_solo ρ |b⟩_solo` acting on the rest.
struct SoloBlocks {
    r: [[ComplexMatrix; 2]; 2],
}

impl SoloBlocks {
    fn new(m: &ComplexMatrix, n: usize, slot: usize) -> Self {
        let rest_dim = 1usize << (n - 1);
        let split = |idx: usize| -> (usize, usize) {
            let high = idx >> (n - slot);
            let low = idx & ((1 << (n - 1 - slot)) - 1);
            let a = (idx >> (n - 1 - slot)) & 1;
            (a, (high << (n - 1 - slot)) | low)
        };
        let mut r = [
            [ComplexMatrix::zeros(rest_dim, rest_dim), ComplexMatrix::zeros(rest_dim, rest_dim)],
            [ComplexMatrix::zeros(rest_dim, rest_dim), ComplexMatrix::zeros(rest_dim, rest_dim)],
        ];
        let dim = 1usize << n;
        for i in 0..dim {
            let (a, ri) = split(i);
            for j in 0..dim {
                let (b, rj) = split(j);
                r[a][b][(ri, rj)] = m[(i, j)];
            }
        }
        Self { r }
    }

    /// `Σ_k p_k S(ρ_rest|k)` for the projective measurement along `(θ, φ)`.
    fn conditional_entropy(&self, theta: f64, phi: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        let e = C64::from_polar(st, phi);
        let mut total = 0.0;
        for sign in [1.0, -1.0] {
            // Π = (I + s n·σ)/2; ⟨b|Π|a⟩ weights R_ab
            let p00 = 0.5 * (1.0 + sign * ct);
            let p11 = 0.5 * (1.0 - sign * ct);
            let p10 = e * (0.5 * sign); // ⟨1|Π|0⟩
            let p01 = e.conj() * (0.5 * sign); // ⟨0|Π|1⟩
            let r = &self.r;
            let k = r[0][0].rows();
            let post = ComplexMatrix::from_fn(k, k, |i, j| {
                r[0][0][(i, j)] * p00 + r[1][1][(i, j)] * p11 + r[0][1][(i, j)] * p10 + r[1][0][(i, j)] * p01
            });
            let prob = post.trace().re;
            if prob > 1e-15 {
                total += prob * entropy_of(&post.scale_real(1.0 / prob).hermitian_part());
            }
        }
        total
    }
}

/// Minimal 2-D Nelder–Mead on the measurement angles.
fn nelder_mead(f: &impl Fn(f64, f64) -> f64, start: (f64, f64), step: (f64, f64), tol: f64) -> (f64, f64, f64) {
    let mut s = [
        (start.0, start.1),
        (start.0 + step.0, start.1),
        (start.0, start.1 + step.1),
    ];
    let mut v = s.map(|p| f(p.0, p.1));
    for _ in 0..400 {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        s = order.map(|i| s[i]);
        v = order.map(|i| v[i]);
        let size = ((s[1].0 - s[0].0).abs() + (s[1].1 - s[0].1).abs())
            .max((s[2].0 - s[0].0).abs() + (s[2].1 - s[0].1).abs());
        if v[2] - v[0] <= tol && size < 1e-7 {
            break;
        }
        let c = ((s[0].0 + s[1].0) / 2.0, (s[0].1 + s[1].1) / 2.0);
        let at = |t: f64| (c.0 + t * (s[2].0 - c.0), c.1 + t * (s[2].1 - c.1));
        let r = at(-1.0);
        let fr = f(r.0, r.1);
        if fr < v[0] {
            let e = at(-2.0);
            let fe = f(e.0, e.1);
            if fe < fr {
                s[2] = e;
                v[2] = fe;
            } else {
                s[2] = r;
                v[2] = fr;
            }
        } else if fr < v[1] {
            s[2] = r;
            v[2] = fr;
        } else {
            let k = if fr < v[2] { at(-0.5) } else { at(0.5) };
            let fk = f(k.0, k.1);
            if fk < v[2].min(fr) {
                s[2] = k;
                v[2] = fk;
            } else {
                for i in 1..3 {
                    s[i] = ((s[0].0 + s[i].0) / 2.0, (s[0].1 + s[i].1) / 2.0);
                    v[i] = f(s[i].0, s[i].1);
                }
            }
        }
    }
    let best = (0..3).min_by(|&a, &b| v[a].total_cmp(&v[b])).unwrap();
    (s[best].0, s[best].1, v[best])
}

/// Discord with the grid stage reported separately (for regression checks).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscordDetail {
    pub value: f64,
    pub coarse: f64,
    pub theta: f64,
    pub phi: f64,
}

/// Quantum discord with projective measurement on the solo qubit.
pub fn quantum_discord_detail(rho: &DensityMatrix, b: Bipartition) -> Result<DiscordDetail, CorrelationError> {
    let n = check_party(rho, b.solo)?;
    let slot = b.solo.slot();
    let m = rho.matrix();
    let s_solo = entropy_of(&partial_trace_slots(m, n, &[slot]));
    let s_all = entropy_of(m);
    let blocks = SoloBlocks::new(m, n, slot);
    let objective = |theta: f64, phi: f64| blocks.conditional_entropy(theta, phi);

    // ±n give the same measurement, so the upper hemisphere suffices
    let mut grid: Vec<(f64, f64, f64)> = Vec::with_capacity(PHI_GRID * THETA_GRID);
    for it in 0..THETA_GRID {
        let theta = FRAC_PI_2 * it as f64 / (THETA_GRID - 1) as f64;
        for ip in 0..PHI_GRID {
            let phi = 2.0 * PI * ip as f64 / PHI_GRID as f64;
            grid.push((theta, phi, objective(theta, phi)));
        }
    }
    grid.sort_by(|a, b| a.2.total_cmp(&b.2));
    let coarse_min = grid[0].2;
    let step = (FRAC_PI_2 / (THETA_GRID - 1) as f64, 2.0 * PI / PHI_GRID as f64);
    let (mut theta, mut phi, mut best) = (grid[0].0, grid[0].1, coarse_min);
    for &(t0, p0, _) in grid.iter().take(3) {
        let (t, p, v) = nelder_mead(&objective, (t0, p0), step, 1e-12);
        if v < best {
            theta = t;
            phi = p;
            best = v;
        }
    }
    let finish = |cond: f64| (s_solo - s_all + cond).max(0.0);
    Ok(DiscordDetail { value: finish(best), coarse: finish(coarse_min), theta, phi })
}

pub fn quantum_discord(rho: &DensityMatrix, b: Bipartition) -> Result<f64, CorrelationError> {
    Ok(quantum_discord_detail(rho, b)?.value)
}

/// `Σ_i S(ρ_i) − S(ρ₁₂₃)`.
pub fn tripartite_total_mutual_info(rho: &DensityMatrix) -> f64 {
    let n = rho.num_qubits();
    let m = rho.matrix();
    let marginals: f64 = (0..n).map(|s| entropy_of(&partial_trace_slots(m, n, &[s]))).sum();
    (marginals - entropy_of(m)).max(0.0)
}

/// X-state lower bound on genuine tripartite concurrence:
/// `2 max_j (|ρ_{j,7−j}| − Σ_{k<4, k≠j} √(ρ_kk ρ_{7−k,7−k}))`.
pub fn gme_witness(rho: &DensityMatrix) -> Result<f64, CorrelationError> {
    if rho.dim() != 8 {
        return Err(CorrelationError::NotThreeQubit(rho.dim()));
    }
    let m = rho.matrix();
    let mut stray: f64 = 0.0;
    for i in 0..8 {
        for j in 0..8 {
            if i != j && j != 7 - i {
                stray = stray.max(m[(i, j)].norm());
            }
        }
    }
    if stray > X_STRUCTURE_TOL {
        return Err(CorrelationError::NotXState(stray));
    }
    let pair = |k: usize| (m[(k, k)].re.max(0.0) * m[(7 - k, 7 - k)].re.max(0.0)).sqrt();
    let best = (0..4)
        .map(|j| m[(j, 7 - j)].norm() - (0..4).filter(|&k| k != j).map(pair).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(2.0 * best)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "LN")]
    LogNegativity,
    #[serde(rename = "QD")]
    Discord,
    #[serde(rename = "Itot")]
    TotalMutualInfo,
    #[serde(rename = "W")]
    Witness,
}

impl Measure {
    pub const ALL: [Measure; 4] = [Measure::LogNegativity, Measure::Discord, Measure::TotalMutualInfo, Measure::Witness];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::LogNegativity => "LN",
            Measure::Discord => "QD",
            Measure::TotalMutualInfo => "Itot",
            Measure::Witness => "W",
        }
    }

    /// `b` is ignored by the whole-system measures.
    pub fn evaluate(self, rho: &DensityMatrix, b: Bipartition) -> Result<f64, CorrelationError> {
        match self {
            Measure::LogNegativity => log_negativity(rho, b),
            Measure::Discord => quantum_discord(rho, b),
            Measure::TotalMutualInfo => Ok(tripartite_total_mutual_info(rho)),
            Measure::Witness => gme_witness(rho),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown measure '{s}' (expected LN, QD, Itot or W)"))
    }
}

/// Only LN and QD have monogamy scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairMeasure {
    LogNegativity,
    Discord,
}

/// `δ_Q = Q(node : rest) − Σ_{j≠node} Q(ρ_{node j})`, measuring on `node` throughout.
pub fn monogamy_score(rho: &DensityMatrix, measure: PairMeasure, node: Qubit) -> Result<f64, CorrelationError> {
    let n = check_party(rho, node)?;
    if n != 3 {
        return Err(CorrelationError::NotThreeQubit(rho.dim()));
    }
    let eval = |state: &DensityMatrix, solo: Qubit| match measure {
        PairMeasure::LogNegativity => log_negativity(state, Bipartition::new(solo)),
        PairMeasure::Discord => quantum_discord(state, Bipartition::new(solo)),
    };
    let whole = eval(rho, node)?;
    let mut pairs = 0.0;
    for other in Qubit::ALL.into_iter().filter(|&q| q != node) {
        let keep = if node.slot() < other.slot() { [node, other] } else { [other, node] };
        let reduced = partial_trace(rho, &keep).expect("two distinct qubits of three");
        let local = Qubit::new(if keep[0] == node { 1 } else { 2 }).unwrap();
        pairs += eval(&reduced, local)?;
    }
    Ok(whole - pairs)
}

/// Sampling controls for [`CorrelationSeries::compute`].
#[derive(Debug, Clone, Copy)]
pub struct SeriesOptions {
    pub start: f64,
    /// `None` runs to the end of the trajectory.
    pub end: Option<f64>,
    /// Upper bound on evaluated samples; knots are decimated to fit.
    pub max_samples: usize,
    /// Golden-section refinement of the maximum.
    pub refine: bool,
    pub execution: Execution,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self { start: 0.0, end: None, max_samples: 400, refine: true, execution: Execution::Parallel }
    }
}

/// A correlation measure sampled along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationSeries {
    pub measure: Measure,
    pub bipartition: Bipartition,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub max_value: f64,
    pub t_at_max: f64,
}

/// Knots inside the window, thinned to at most `max` points plus a uniform
/// grid so sparse stretches are still covered.
fn sample_times(knots: &[f64], start: f64, end: f64, max: usize) -> Vec<f64> {
    let max = max.max(2);
    let inside: Vec<f64> = knots.iter().copied().filter(|&t| t >= start && t <= end).collect();
    let half = max / 2;
    let stride = inside.len().div_ceil(half.max(1)).max(1);
    let mut out: Vec<f64> = inside.into_iter().step_by(stride).collect();
    let uniform = max - out.len().min(max - 1);
    out.extend((0..uniform).map(|k| start + (end - start) * k as f64 / (uniform - 1).max(1) as f64));
    out.push(end);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

impl CorrelationSeries {
    pub fn compute(
        traj: &Trajectory,
        measure: Measure,
        bipartition: Bipartition,
        opts: &SeriesOptions,
    ) -> Result<Self, CorrelationError> {
        let end = opts.end.unwrap_or(traj.t_max()).min(traj.t_max());
        if !(opts.start >= 0.0 && opts.start < end) {
            return Err(CorrelationError::InvalidWindow { start: opts.start, end });
        }
        let times = sample_times(traj.times(), opts.start, end, opts.max_samples);
        let at = |t: f64| -> Result<f64, CorrelationError> { measure.evaluate(&traj.eval(t)?, bipartition) };
        let values = parallel::map(&times, opts.execution, |&t| at(t)).into_iter().collect::<Result<Vec<_>, _>>()?;
        let (k, &v) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("at least two samples");
        let (mut t_best, mut v_best) = (times[k], v);
        if opts.refine && k > 0 && k + 1 < times.len() {
            let (lo, hi) = (times[k - 1], times[k + 1]);
            let tol = 1e-9 * end.max(1.0);
            let (mut a, mut b) = (lo, hi);
            let g = 0.618_033_988_749_894_8;
            let mut c = b - g * (b - a);
            let mut d = a + g * (b - a);
            let (mut fc, mut fd) = (at(c)?, at(d)?);
            while b - a > tol {
                if fc > fd {
                    b = d;
                    d = c;
                    fd = fc;
                    c = b - g * (b - a);
                    fc = at(c)?;
                } else {
                    a = c;
                    c = d;
                    fc = fd;
                    d = a + g * (b - a);
                    fd = at(d)?;
                }
            }
            let (t, val) = if fc > fd { (c, fc) } else { (d, fd) };
            if val > v_best {
                t_best = t;
                v_best = val;
            }
        }
        Ok(Self { measure, bipartition, times, values, max_value: v_best, t_at_max: t_best })
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", self.measure.as_str()])?;
        for (t, v) in self.times.iter().zip(&self.values) {
            w.write_record([t.to_string(), v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::quantum::von_neumann_entropy;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn bell_12_mixed_3() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![c(0.0); 4];
        psi[0] = c(s);
        psi[3] = c(s);
        let bell = DensityMatrix::pure(&psi).unwrap();
        bell.kron(&DensityMatrix::maximally_mixed(2).unwrap()).unwrap()
    }

    fn ghz() -> DensityMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut psi = vec![c(0.0); 8];
        psi[0] = c(s);
        psi[7] = c(s);
        DensityMatrix::pure(&psi).unwrap()
    }

    fn product(rng: &mut ChaCha8Rng) -> DensityMatrix {
        let q = |rng: &mut ChaCha8Rng| {
            let p: f64 = rng.random_range(0.05..0.95);
            let z = C64::from_polar(rng.random_range(0.0..(p * (1.0 - p)).sqrt()), rng.random_range(0.0..std::f64::consts::TAU));
            DensityMatrix::new(ComplexMatrix::from_row_major(2, 2, vec![c(p), z, z.conj(), c(1.0 - p)])).unwrap()
        };
        q(rng).kron(&q(rng)).unwrap().kron(&q(rng)).unwrap()
    }

    /// Random three-qubit X state: positive diagonal, `|c_j|² ≤ a_j a_{7−j}`.
    pub(crate) fn random_x_state(rng: &mut impl Rng) -> DensityMatrix {
        let mut a: Vec<f64> = (0..8).map(|_| rng.random_range(0.01..1.0)).collect();
        let s: f64 = a.iter().sum();
        a.iter_mut().for_each(|x| *x /= s);
        let mut m = ComplexMatrix::from_real_diagonal(&a);
        for j in 0..4 {
            let bound = (a[j] * a[7 - j]).sqrt();
            let z = C64::from_polar(bound * rng.random_range(0.0..1.0f64).sqrt(), rng.random_range(0.0..2.0 * PI));
            m[(j, 7 - j)] = z;
            m[(7 - j, j)] = z.conj();
        }
        DensityMatrix::new(m).unwrap()
    }

    #[test]
    fn ln_of_product_and_bell() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let rho = product(&mut rng);
            for q in Qubit::ALL {
                assert!(log_negativity(&rho, Bipartition::new(q)).unwrap() < 1e-12);
            }
        }
        let b = bell_12_mixed_3();
        assert!((log_negativity(&b, Bipartition::ONE_REST).unwrap() - 1.0).abs() < 1e-12);
        assert!(log_negativity(&b, Bipartition::new(Qubit::Q3)).unwrap() < 1e-12);
    }

    #[test]
    fn discord_reference_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        // classical-classical
        for _ in 0..5 {
            let mut p: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|x| *x /= s);
            let rho = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&p)).unwrap();
            assert!(quantum_discord(&rho, Bipartition::ONE_REST).unwrap() < 1e-9);
        }
        let b = bell_12_mixed_3();
        assert!((quantum_discord(&b, Bipartition::ONE_REST).unwrap() - 1.0).abs() < 1e-9);
        // two-qubit Bell pair directly
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let pair = DensityMatrix::pure(&[c(s), c(0.0), c(0.0), c(s)]).unwrap();
        assert!((quantum_discord(&pair, Bipartition::new(Qubit::Q2)).unwrap() - 1.0).abs() < 1e-9);
        assert!(quantum_discord(&pair, Bipartition::new(Qubit::Q3)).is_err());
    }

    #[test]
    fn discord_is_zero_on_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..5 {
            assert!(quantum_discord(&product(&mut rng), Bipartition::ONE_REST).unwrap() < 1e-7);
        }
    }

    fn entropy2(m: [[C64; 2]; 2]) -> f64 {
        let a = m[0][0].re;
        let d = m[1][1].re;
        let off = m[0][1].norm();
        let mean = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + off * off).sqrt();
        shannon_bits([mean + r, mean - r])
    }

    /// Brute-force `min Σ p S(B|k)` for three-qubit X states, measuring qubit 1.
    /// Written against the raw entries: conditional states split into the
    /// rest-index pairs {0,3} and {1,2}.
    pub(crate) fn brute_force_discord(rho: &DensityMatrix, n_theta: usize, n_phi: usize) -> f64 {
        let m = rho.matrix();
        let s1 = {
            let p0: f64 = (0..4).map(|i| m[(i, i)].re).sum();
            shannon_bits([p0, 1.0 - p0])
        };
        let s_all = von_neumann_entropy(rho);
        let mut best = f64::INFINITY;
        for it in 0..=n_theta {
            let theta = FRAC_PI_2 * it as f64 / n_theta as f64;
            let (st, ct) = theta.sin_cos();
            for ip in 0..n_phi {
                let phi = 2.0 * PI * ip as f64 / n_phi as f64;
                let e = C64::from_polar(st, phi);
                let mut total = 0.0;
                for sign in [1.0, -1.0] {
                    let w0 = 0.5 * (1.0 + sign * ct);
                    let w1 = 0.5 * (1.0 - sign * ct);
                    let x = e * (0.5 * sign);
                    // post[r][r'] = w0 ρ(r,r') + w1 ρ(4+r,4+r') + x ρ(r,4+r') + x̄ ρ(4+r,r')
                    let entry = |r: usize, rp: usize| {
                        c(w0) * m[(r, rp)] + c(w1) * m[(4 + r, 4 + rp)] + x * m[(r, 4 + rp)] + x.conj() * m[(4 + r, rp)]
                    };
                    let mut prob = 0.0;
                    let mut blocks = Vec::new();
                    for (u, v) in [(0, 3), (1, 2)] {
                        let blk = [[entry(u, u), entry(u, v)], [entry(v, u), entry(v, v)]];
                        prob += blk[0][0].re + blk[1][1].re;
                        blocks.push(blk);
                    }
                    if prob <= 1e-15 {
                        continue;
                    }
                    let scaled = |b: [[C64; 2]; 2]| b.map(|row| row.map(|z| z / prob));
                    let s: f64 = blocks.into_iter().map(|b| entropy2(scaled(b))).sum();
                    // both blocks together form the conditional spectrum
                    total += prob * s;
                }
                best = best.min(total);
            }
        }
        (s1 - s_all + best).max(0.0)
    }

    #[test]
    fn discord_matches_brute_force_on_few_x_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        for _ in 0..5 {
            let rho = random_x_state(&mut rng);
            let fast = quantum_discord(&rho, Bipartition::ONE_REST).unwrap();
            let brute = brute_force_discord(&rho, 200, 200);
            assert!((fast - brute).abs() < 1e-3, "{fast} vs {brute}");
            assert!(fast <= brute + 1e-9);
        }
    }

    #[test]
    fn refinement_never_worsens() {
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..10 {
            let d = quantum_discord_detail(&random_x_state(&mut rng), Bipartition::ONE_REST).unwrap();
            assert!(d.value <= d.coarse + 1e-9);
        }
    }

    #[test]
    fn total_mutual_info_references() {
        assert!((tripartite_total_mutual_info(&ghz()) - 3.0).abs() < 1e-12);
        let mut zero = vec![c(0.0); 8];
        zero[0] = c(1.0);
        assert!(tripartite_total_mutual_info(&DensityMatrix::pure(&zero).unwrap()).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for _ in 0..5 {
            assert!(tripartite_total_mutual_info(&product(&mut rng)) < 1e-10);
        }
    }

    #[test]
    fn witness_references() {
        assert!((gme_witness(&ghz()).unwrap() - 1.0).abs() < 1e-12);
        let d = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1])).unwrap();
        assert!(gme_witness(&d).unwrap() <= 0.0);
        assert!(matches!(gme_witness(&bell_12_mixed_3()), Err(CorrelationError::NotXState(_))));
    }

    #[test]
    fn monogamy_references() {
        let mut rng = ChaCha8Rng::seed_from_u64(27);
        let rho = DensityMatrix::new(ComplexMatrix::from_real_diagonal(&[0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1])).unwrap();
        assert!(monogamy_score(&rho, PairMeasure::LogNegativity, Qubit::Q1).unwrap().abs() < 1e-12);
        let p = product(&mut rng);
        assert!(monogamy_score(&p, PairMeasure::LogNegativity, Qubit::Q2).unwrap().abs() < 1e-10);
        assert!(monogamy_score(&p, PairMeasure::Discord, Qubit::Q1).unwrap().abs() < 1e-6);
        assert!((monogamy_score(&ghz(), PairMeasure::LogNegativity, Qubit::Q1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_coherence_pair_has_diagonal_pair_marginals() {
        // the dynamics only builds |010⟩⟨101|; every pairwise marginal is diagonal,
        // so the monogamy score reduces to the 1:23 value
        let mut m = ComplexMatrix::from_real_diagonal(&[0.1, 0.1, 0.2, 0.1, 0.1, 0.2, 0.1, 0.1]);
        m[(2, 5)] = C64::new(0.15, 0.05);
        m[(5, 2)] = C64::new(0.15, -0.05);
        let rho = DensityMatrix::new(m).unwrap();
        for pm in [PairMeasure::LogNegativity, PairMeasure::Discord] {
            let whole = match pm {
                PairMeasure::LogNegativity => log_negativity(&rho, Bipartition::ONE_REST).unwrap(),
                PairMeasure::Discord => quantum_discord(&rho, Bipartition::ONE_REST).unwrap(),
            };
            assert!((monogamy_score(&rho, pm, Qubit::Q1).unwrap() - whole).abs() < 1e-7);
        }
        assert!(log_negativity(&rho, Bipartition::ONE_REST).unwrap() > 0.0);
    }

    #[test]
    fn measure_names_round_trip() {
        for m in Measure::ALL {
            assert_eq!(m.as_str().parse::<Measure>().unwrap(), m);
        }
        assert_eq!(Bipartition::ONE_REST.to_string(), "1:23");
    }

    #[test]
    fn sample_grid_respects_window() {
        let knots: Vec<f64> = (0..10_000).map(|k| k as f64 * 0.1).collect();
        let s = sample_times(&knots, 10.0, 500.0, 100);
        assert!(s.len() <= 160);
        assert_eq!(s[0], 10.0);
        assert_eq!(*s.last().unwrap(), 500.0);
        assert!(s.windows(2).all(|w| w[1] > w[0]));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn measures_are_nonnegative(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_x_state(&mut rng);
            proptest::prop_assert!(log_negativity(&rho, Bipartition::ONE_REST).unwrap() >= 0.0);
            proptest::prop_assert!(quantum_discord(&rho, Bipartition::ONE_REST).unwrap() >= 0.0);
            proptest::prop_assert!(tripartite_total_mutual_info(&rho) >= 0.0);
            // witness never exceeds twice the largest coherence
            let w = gme_witness(&rho).unwrap();
            let cmax = (0..4).map(|j| rho.matrix()[(j, 7 - j)].norm()).fold(0.0, f64::max);
            proptest::prop_assert!(w <= 2.0 * cmax + 1e-12);
        }
    }
}
