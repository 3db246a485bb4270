//! Time evolution of the companion system: exact modal solutions (with
//! polynomial-in-t secular terms at repeated frequencies), a fixed-step RK4
//! reference integrator, and conservation-drift reporting.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::classical::{LinearVectorField, QuadraticObservable};
use crate::error::Error;
use crate::symfun::{FrequencyCluster, FrequencySet};
use crate::Result;

/// A sampled solution: strictly increasing times and one phase vector per
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, states: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() != states.len() {
            return Err(Error::DimensionMismatch {
                left: times.len(),
                right: states.len(),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "trajectory times must be strictly increasing".into(),
            ));
        }
        Ok(Self { times, states })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[DVector<f64>] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &DVector<f64> {
        &self.states[index]
    }

    /// CSV export: header `t,x1,...,x2n`, shortest round-trip float
    /// formatting, one row per sample.
    pub fn to_csv(&self) -> String {
        let dim = self.states.first().map_or(0, |s| s.len());
        let mut out = String::from("t");
        for i in 1..=dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, state) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t}"));
            for value in state.iter() {
                out.push_str(&format!(",{value}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Exact solution in the modal basis `t^r e^{+/- i w t}`, solved against the
/// initial state at `t = 0`.
///
/// Repeated frequencies contribute secular powers `r = 0..multiplicity-1`
/// with the same row-differentiation structure as the simple case, so the
/// decomposition covers the equal-frequency oscillator as well.
#[derive(Debug, Clone)]
pub struct ModalDecomposition {
    clusters: Vec<FrequencyCluster>,
    /// One complex amplitude per basis column; the first `n` columns carry
    /// the `e^{-i w t}` branch, the last `n` their conjugates.
    amplitudes: DVector<Complex64>,
    dim: usize,
}

impl ModalDecomposition {
    pub fn from_initial_state(freqs: &FrequencySet, x0: &DVector<f64>) -> Result<Self> {
        let dim = freqs.phase_dim();
        if x0.len() != dim {
            return Err(Error::DimensionMismatch {
                left: x0.len(),
                right: dim,
            });
        }
        let clusters = freqs.clusters();
        let basis = basis_matrix(&clusters, dim, 0.0);
        let rhs = x0.map(|v| Complex64::new(v, 0.0));
        let amplitudes = basis
            .lu()
            .solve(&rhs)
            .ok_or(Error::SingularModalBasis)?;
        Ok(Self {
            clusters,
            amplitudes,
            dim,
        })
    }

    pub fn multiplicities(&self) -> Vec<usize> {
        self.clusters.iter().map(|c| c.multiplicity()).collect()
    }

    /// Complex amplitude attached to the basis column `(cluster, secular
    /// power)` of the `e^{-i w t}` branch.
    pub fn amplitude(&self, cluster: usize, power: usize) -> Complex64 {
        let mut col = 0;
        for c in &self.clusters[..cluster] {
            col += c.multiplicity();
        }
        self.amplitudes[col + power]
    }

    /// Evaluates the state at time `t`.
    pub fn evaluate(&self, t: f64) -> DVector<f64> {
        let basis = basis_matrix(&self.clusters, self.dim, t);
        let complex_state = basis * &self.amplitudes;
        complex_state.map(|z| z.re)
    }

    /// Samples `steps + 1` states at `t = 0, dt, ..., steps * dt`.
    pub fn sample(&self, dt: f64, steps: usize) -> Result<Trajectory> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "step size must be positive, got {dt}"
            )));
        }
        let mut times = Vec::with_capacity(steps + 1);
        let mut states = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = k as f64 * dt;
            times.push(t);
            states.push(self.evaluate(t));
        }
        Trajectory::new(times, states)
    }
}

/// Convenience wrapper: solve the modal decomposition for `x0` and evaluate
/// at a single time.
pub fn exact_solution(freqs: &FrequencySet, x0: &DVector<f64>, t: f64) -> Result<DVector<f64>> {
    Ok(ModalDecomposition::from_initial_state(freqs, x0)?.evaluate(t))
}

/// Basis matrix `B(t)`: column `(cluster c, power r)` holds the derivative
/// ladder of `t^r e^{-i w_c t}` down the rows, followed by the conjugate
/// columns.
fn basis_matrix(clusters: &[FrequencyCluster], dim: usize, t: f64) -> DMatrix<Complex64> {
    let n = dim / 2;
    let mut basis = DMatrix::zeros(dim, dim);
    let mut col = 0;
    for cluster in clusters {
        let s = Complex64::new(0.0, -cluster.omega);
        for power in 0..cluster.multiplicity() {
            for row in 0..dim {
                let value = monomial_exp_derivative(s, power, row, t);
                basis[(row, col)] = value;
                basis[(row, col + n)] = value.conj();
            }
            col += 1;
        }
    }
    basis
}

/// k-th derivative of `t^r e^{st}`:
/// `e^{st} * sum_{m=0..min(k,r)} C(k,m) r!/(r-m)! t^{r-m} s^{k-m}`.
fn monomial_exp_derivative(s: Complex64, r: usize, k: usize, t: f64) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    for m in 0..=k.min(r) {
        let coeff = binomial(k, m) * falling_factorial(r, m);
        sum += coeff * t.powi((r - m) as i32) * s.powi((k - m) as i32);
    }
    sum * (s * t).exp()
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut result = 1.0;
    for i in 0..k {
        result = result * (n - i) as f64 / (i + 1) as f64;
    }
    result
}

fn falling_factorial(r: usize, m: usize) -> f64 {
    (0..m).map(|i| (r - i) as f64).product()
}

/// Classical fixed-step RK4 for `dx/dt = A x`, `steps + 1` samples including
/// `t = 0`. Fails with the step index if the state stops being finite.
pub fn integrate_rk4(
    field: &LinearVectorField,
    x0: &DVector<f64>,
    dt: f64,
    steps: usize,
) -> Result<Trajectory> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if x0.len() != field.dim() {
        return Err(Error::DimensionMismatch {
            left: x0.len(),
            right: field.dim(),
        });
    }
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut x = x0.clone();
    times.push(0.0);
    states.push(x.clone());
    for step in 1..=steps {
        let k1 = field.apply(&x);
        let k2 = field.apply(&(&x + 0.5 * dt * &k1));
        let k3 = field.apply(&(&x + 0.5 * dt * &k2));
        let k4 = field.apply(&(&x + dt * &k3));
        x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step });
        }
        times.push(step as f64 * dt);
        states.push(x.clone());
    }
    Trajectory::new(times, states)
}

/// Per-observable `max_t |F(x(t)) - F(x(0))| / max(1, |F(x(0))|)`.
pub fn conservation_drift(traj: &Trajectory, observables: &[QuadraticObservable]) -> Vec<f64> {
    observables
        .iter()
        .map(|obs| {
            let initial = obs.value(traj.state(0));
            let scale = initial.abs().max(1.0);
            traj.states()
                .iter()
                .map(|x| (obs.value(x) - initial).abs() / scale)
                .fold(0.0, f64::max)
        })
        .collect()
}
