//! Companion dynamics, quadratic integrals, constant Poisson tensors and
//! Hamiltonian weight solving.
//!
//! The `2n`-th order oscillator is handled as the first-order companion system
//! `dx/dt = A x` on coordinates `x_1..x_{2n}` (position and its derivatives).
//! Everything here is built from the symmetric-function kernels in
//! [`crate::symfun`] so that algebraically identical coefficients are
//! bit-identical, which keeps the structural residuals at exactly zero
//! wherever the cancellation is an arithmetic identity.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::Error;
use crate::symfun::{
    elementary_symmetric, power_sum_tau, reduced_elementary_symmetric, FrequencySet,
};
use crate::Result;

/// Relative singular-value cutoff for rank decisions in least-squares solves.
const RANK_EPS_REL: f64 = 1e-10;

/// Linear dynamics `dx/dt = A x` in companion form: a shift pattern on the
/// first `2n - 1` rows and the negated elementary symmetric polynomials on
/// the odd columns of the last row.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearVectorField {
    a: DMatrix<f64>,
}

impl LinearVectorField {
    /// Wraps an arbitrary square generator `A`; used for caller-supplied
    /// dynamics, the oscillator fields come from [`build_vector_field`].
    pub fn from_matrix(a: DMatrix<f64>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::DimensionMismatch {
                left: a.nrows(),
                right: a.ncols(),
            });
        }
        Ok(Self { a })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Right-hand side `A x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x
    }
}

/// A real quadratic observable `F(x) = x^T S x / 2` with `S` symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticObservable {
    s: DMatrix<f64>,
}

impl QuadraticObservable {
    /// Symmetrizes the given coefficient matrix exactly.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        let s = 0.5 * (&m + m.transpose());
        Self { s }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            s: DMatrix::zeros(dim, dim),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.s * x))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            s: factor * &self.s,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            s: &self.s + &other.s,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            s: &self.s - &other.s,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.s.amax()
    }
}

/// Where a Poisson tensor came from; carried along for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TensorKind {
    /// The two-parameter constant family on the fourth-order phase space.
    TwoParameter { f: f64, g: f64 },
    /// The any-order constant tensor with odd power sums on its diagonals.
    PowerSum,
    /// Caller-supplied constant tensor.
    Custom,
}

/// A constant antisymmetric tensor of coordinate brackets `{x_i, x_j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonTensor {
    pi: DMatrix<f64>,
    kind: TensorKind,
}

impl PoissonTensor {
    /// Wraps a caller-supplied matrix, antisymmetrizing it exactly.
    pub fn from_matrix(m: DMatrix<f64>) -> Self {
        let pi = 0.5 * (&m - m.transpose());
        Self {
            pi,
            kind: TensorKind::Custom,
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn dim(&self) -> usize {
        self.pi.nrows()
    }

    pub fn kind(&self) -> TensorKind {
        self.kind
    }

    /// Bracket `{x_i, x_j}` of two coordinate functions (zero-based indices).
    pub fn bracket(&self, i: usize, j: usize) -> f64 {
        self.pi[(i, j)]
    }

    /// Numerical rank. The two-parameter family degenerates on the lines
    /// where a mode pairing vanishes, so rank is reported rather than
    /// nondegeneracy being assumed.
    pub fn rank(&self) -> usize {
        let svd = SVD::new(self.pi.clone(), false, false);
        let max_sv = svd.singular_values.max();
        if max_sv == 0.0 {
            return 0;
        }
        svd.rank(RANK_EPS_REL * max_sv)
    }
}

/// The per-mode oscillator variables as linear forms in the phase
/// coordinates: row `i` of `q` holds the coefficients of `q_i`, row `i` of
/// `p` the coefficients of its momentum (the time derivative of `q_i` along
/// the companion field).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFormSet {
    q_rows: DMatrix<f64>,
    p_rows: DMatrix<f64>,
}

impl LinearFormSet {
    pub fn mode_count(&self) -> usize {
        self.q_rows.nrows()
    }

    pub fn q_rows(&self) -> &DMatrix<f64> {
        &self.q_rows
    }

    pub fn p_rows(&self) -> &DMatrix<f64> {
        &self.p_rows
    }

    pub fn q_row(&self, mode: usize) -> DVector<f64> {
        self.q_rows.row(mode).transpose()
    }

    pub fn p_row(&self, mode: usize) -> DVector<f64> {
        self.p_rows.row(mode).transpose()
    }
}

/// The four distinguished fourth-order observables.
///
/// `h_c` is the positive canonical energy (sum of the mode energies), `h_pu`
/// their indefinite difference; `c1` and `c2` are the combinations that stay
/// independent when the two frequencies collide, stored via their explicit
/// polynomial coefficients so the equal-frequency limit is taken by
/// substitution instead of a 0/0 quotient.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedCombinations {
    pub h_c: QuadraticObservable,
    pub h_pu: QuadraticObservable,
    pub c1: QuadraticObservable,
    pub c2: QuadraticObservable,
}

/// Result of the least-squares Hamiltonian weight solve.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution {
    /// Weight of each per-mode integral in the generating Hamiltonian.
    pub coeffs: Vec<f64>,
    /// Max-abs of `Pi * S(sum_i c_i H_i) - A` at the solution.
    pub residual: f64,
}

/// Builds the companion matrix of the oscillator: `A[i][i+1] = 1` on the
/// shift rows and `A[2n-1][2(n-j)] = -sigma_j` for `j = 1..n` on the last row
/// (zero-based columns; only odd 1-based columns are populated).
pub fn build_vector_field(freqs: &FrequencySet) -> LinearVectorField {
    let n = freqs.len();
    let dim = 2 * n;
    let mut a = DMatrix::zeros(dim, dim);
    for i in 0..dim - 1 {
        a[(i, i + 1)] = 1.0;
    }
    for j in 1..=n {
        let sigma = elementary_symmetric(freqs, j).expect("degree j <= n");
        // 1-based column 2(n - j) + 1.
        a[(dim - 1, 2 * (n - j))] = -sigma;
    }
    LinearVectorField { a }
}

/// Oscillator variables for a simple spectrum: `q_i` places the reduced
/// polynomial `sigma_j(i-hat)` on the odd coordinate `x_{2(n-j)-1}` and `p_i`
/// the same weights one column to the right.
pub fn build_oscillator_variables(freqs: &FrequencySet) -> Result<LinearFormSet> {
    freqs.require_simple()?;
    let n = freqs.len();
    let dim = 2 * n;
    let mut q_rows = DMatrix::zeros(n, dim);
    let mut p_rows = DMatrix::zeros(n, dim);
    for i in 0..n {
        for j in 0..n {
            let sigma = reduced_elementary_symmetric(freqs, i, j)?;
            // 1-based columns 2(n - j) - 1 and 2(n - j).
            q_rows[(i, 2 * (n - j) - 2)] = sigma;
            p_rows[(i, 2 * (n - j) - 1)] = sigma;
        }
    }
    Ok(LinearFormSet { q_rows, p_rows })
}

/// The per-mode harmonic energy `H_i = (p_i^2 + w_i^2 q_i^2) / 2` as a
/// quadratic observable in the phase coordinates.
pub fn build_integral(freqs: &FrequencySet, mode: usize) -> Result<QuadraticObservable> {
    let n = freqs.len();
    if mode >= n {
        return Err(Error::IndexOutOfRange {
            index: mode,
            count: n,
        });
    }
    let forms = build_oscillator_variables(freqs)?;
    Ok(integral_from_rows(
        &forms.q_row(mode),
        &forms.p_row(mode),
        freqs.omega(mode),
    ))
}

fn integral_from_rows(q: &DVector<f64>, p: &DVector<f64>, omega: f64) -> QuadraticObservable {
    let s = p * p.transpose() + (omega * omega) * (q * q.transpose());
    QuadraticObservable::from_matrix(s)
}

/// Builds the fourth-order combinations from their explicit polynomial
/// coefficients, valid for equal frequencies as well.
pub fn build_named_combinations(freqs: &FrequencySet) -> Result<NamedCombinations> {
    if freqs.len() != 2 {
        return Err(Error::UnsupportedOrder {
            expected: 2,
            got: freqs.len(),
        });
    }
    let sigma1 = elementary_symmetric(freqs, 1)?;
    let sigma2 = elementary_symmetric(freqs, 2)?;
    let w1sq = freqs.omega(0) * freqs.omega(0);
    let w2sq = freqs.omega(1) * freqs.omega(1);

    // Mode energies written out for n = 2: q_i = x3 + w_other^2 x1 and
    // p_i = x4 + w_other^2 x2. Valid (though coincident) at w1 = w2.
    let energy = |own_sq: f64, other_sq: f64| {
        let q = DVector::from_vec(vec![other_sq, 0.0, 1.0, 0.0]);
        let p = DVector::from_vec(vec![0.0, other_sq, 0.0, 1.0]);
        integral_from_rows(&q, &p, own_sq.sqrt())
    };
    let h1 = energy(w1sq, w2sq);
    let h2 = energy(w2sq, w1sq);

    // c1 = -sigma2/2 x2^2 + sigma1/2 x3^2 + x4^2/2 + sigma2 x1 x3
    let mut c1 = DMatrix::zeros(4, 4);
    c1[(1, 1)] = -sigma2;
    c1[(2, 2)] = sigma1;
    c1[(3, 3)] = 1.0;
    c1[(0, 2)] = sigma2;
    c1[(2, 0)] = sigma2;

    // c2 = sigma2/2 x1^2 + sigma1/2 x2^2 - x3^2/2 + x2 x4
    let mut c2 = DMatrix::zeros(4, 4);
    c2[(0, 0)] = sigma2;
    c2[(1, 1)] = sigma1;
    c2[(2, 2)] = -1.0;
    c2[(1, 3)] = 1.0;
    c2[(3, 1)] = 1.0;

    Ok(NamedCombinations {
        h_c: h1.add(&h2),
        h_pu: h1.sub(&h2),
        c1: QuadraticObservable::from_matrix(c1),
        c2: QuadraticObservable::from_matrix(c2),
    })
}

/// The two-parameter constant tensor on the fourth-order phase space.
///
/// Nonzero brackets: `{x1,x2} = f`, `{x1,x4} = g`, `{x2,x3} = -g` and
/// `{x3,x4} = -sigma2 f - sigma1 g`. Degenerate `(f, g)` lines are allowed;
/// use [`PoissonTensor::rank`] to observe them.
pub fn poisson_tensor_two_param(freqs: &FrequencySet, f: f64, g: f64) -> Result<PoissonTensor> {
    if freqs.len() != 2 {
        return Err(Error::UnsupportedOrder {
            expected: 2,
            got: freqs.len(),
        });
    }
    let sigma1 = elementary_symmetric(freqs, 1)?;
    let sigma2 = elementary_symmetric(freqs, 2)?;
    let mut pi = DMatrix::zeros(4, 4);
    let mut set = |i: usize, j: usize, v: f64| {
        pi[(i, j)] = v;
        pi[(j, i)] = -v;
    };
    set(0, 1, f);
    set(0, 3, g);
    set(1, 2, -g);
    set(2, 3, -sigma2 * f - sigma1 * g);
    Ok(PoissonTensor {
        pi,
        kind: TensorKind::TwoParameter { f, g },
    })
}

/// The any-order constant tensor whose odd diagonals carry alternating odd
/// power sums: `Pi[i][i+1+2j] = (-1)^j tau_{2i-1+2j}` in 1-based indexing,
/// completed antisymmetrically.
pub fn poisson_tensor_general(freqs: &FrequencySet) -> PoissonTensor {
    let n = freqs.len();
    let dim = 2 * n;
    let mut pi = DMatrix::zeros(dim, dim);
    for i in 1..=dim - 1 {
        let mut sign = 1.0;
        for j in 0..=(dim - i - 1) / 2 {
            let col = i + 1 + 2 * j;
            let value = sign * power_sum_tau(freqs, (2 * i - 1 + 2 * j) as u32);
            pi[(i - 1, col - 1)] = value;
            pi[(col - 1, i - 1)] = -value;
            sign = -sign;
        }
    }
    PoissonTensor {
        pi,
        kind: TensorKind::PowerSum,
    }
}

/// Poisson bracket of two quadratic observables: with `F = x^T S_F x / 2`,
/// the bracket `Pi^{ij} d_i F d_j G` is again quadratic with coefficient
/// matrix `S_F Pi S_G + (S_F Pi S_G)^T`.
pub fn poisson_bracket(
    f: &QuadraticObservable,
    g: &QuadraticObservable,
    pt: &PoissonTensor,
) -> Result<QuadraticObservable> {
    check_dims(f.dim(), pt.dim())?;
    check_dims(g.dim(), pt.dim())?;
    let m = f.matrix() * pt.matrix() * g.matrix();
    let s = &m + m.transpose();
    Ok(QuadraticObservable { s })
}

/// Max-abs of `A Pi + Pi A^T`: the Lie derivative of a constant tensor along
/// the linear field `A x`. Zero means the field preserves the tensor.
pub fn lie_derivative_residual(field: &LinearVectorField, pt: &PoissonTensor) -> Result<f64> {
    check_dims(field.dim(), pt.dim())?;
    let a = field.matrix();
    let lie = a * pt.matrix() + pt.matrix() * a.transpose();
    Ok(lie.amax())
}

/// Jacobi residual `[[Pi, Pi]]` evaluated literally. The components of a
/// constant tensor have vanishing partials, so every term is zero; the triple
/// sum is still executed so the identity is asserted rather than assumed.
pub fn schouten_residual(pt: &PoissonTensor) -> f64 {
    let dim = pt.dim();
    // d Pi^{jk} / d x_m: constant components.
    let partial = |_m: usize, _j: usize, _k: usize| 0.0f64;
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in (i + 1)..dim {
            for k in (j + 1)..dim {
                let mut term = 0.0;
                for m in 0..dim {
                    term += pt.bracket(m, i) * partial(m, j, k)
                        + pt.bracket(m, j) * partial(m, k, i)
                        + pt.bracket(m, k) * partial(m, i, j);
                }
                worst = worst.max(term.abs());
            }
        }
    }
    worst
}

/// Closed-form weights of the fourth-order generating Hamiltonian
/// `H = a1 H1 + a2 H2` for the two-parameter tensor:
/// `a1 = 1 / ((w2^2 - w1^2)(w2^2 f + g))` and
/// `a2 = -1 / ((w2^2 - w1^2)(w1^2 f + g))`.
pub fn hamiltonian_coefficients_two_param(
    freqs: &FrequencySet,
    f: f64,
    g: f64,
) -> Result<(f64, f64)> {
    if freqs.len() != 2 {
        return Err(Error::UnsupportedOrder {
            expected: 2,
            got: freqs.len(),
        });
    }
    freqs.require_simple()?;
    let w1sq = freqs.omega(0) * freqs.omega(0);
    let w2sq = freqs.omega(1) * freqs.omega(1);
    let spread = w2sq - w1sq;
    let pair1 = w2sq * f + g;
    let pair2 = w1sq * f + g;
    if pair1 == 0.0 || pair2 == 0.0 {
        return Err(Error::DegeneratePairing {
            reason: format!(
                "tensor parameters f = {f}, g = {g} make a mode pairing vanish \
                 (w2^2 f + g = {pair1}, w1^2 f + g = {pair2})"
            ),
        });
    }
    Ok((1.0 / (spread * pair1), -1.0 / (spread * pair2)))
}

/// Least-squares solve of `Pi * S(sum_i c_i H_i) = A` for the weights `c`.
///
/// Self-certifying: the returned residual bounds how well the tensor and
/// the weighted integrals reproduce the companion dynamics. The printed
/// closed-form candidate (see [`closed_form_weight_candidate`]) is reported
/// as a diagnostic next to this solve, never used in its place.
pub fn solve_hamiltonian_coefficients(
    freqs: &FrequencySet,
    pt: &PoissonTensor,
) -> Result<WeightSolution> {
    let n = freqs.len();
    let dim = 2 * n;
    check_dims(dim, pt.dim())?;
    freqs.require_simple()?;

    let field = build_vector_field(freqs);
    let integrals: Vec<QuadraticObservable> = (0..n)
        .map(|i| build_integral(freqs, i))
        .collect::<Result<_>>()?;

    // Columns: vec(Pi * S_i); rhs: vec(A).
    let mut system = DMatrix::zeros(dim * dim, n);
    for (col, h) in integrals.iter().enumerate() {
        let m = pt.matrix() * h.matrix();
        for r in 0..dim {
            for c in 0..dim {
                system[(r * dim + c, col)] = m[(r, c)];
            }
        }
    }
    let mut rhs = DVector::zeros(dim * dim);
    for r in 0..dim {
        for c in 0..dim {
            rhs[r * dim + c] = field.matrix()[(r, c)];
        }
    }

    let svd = SVD::new(system, true, true);
    let max_sv = svd.singular_values.max();
    let eps = RANK_EPS_REL * max_sv.max(f64::MIN_POSITIVE);
    let rank = svd.rank(eps);
    if rank < n {
        return Err(Error::RankDeficientWeights { nullity: n - rank });
    }
    let coeffs = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut weighted = QuadraticObservable::zeros(dim);
    for (i, h) in integrals.iter().enumerate() {
        weighted = weighted.add(&h.scaled(coeffs[i]));
    }
    let residual = verify_generates_dynamics(&weighted, pt, &field)?;

    Ok(WeightSolution {
        coeffs: coeffs.iter().copied().collect(),
        residual,
    })
}

/// The closed-form weight formula `b_i = 1 / (w_i * prod_{j != i} (w_i^2 - w_j^2))`.
///
/// Kept as a diagnostic only: it disagrees with the solved weights (already
/// at fourth order, where the bracket-pairing route fixes
/// `a_i = 1 / (2 w_i (w_j^2 - w_i^2)^2)` up to sign), so reports show both
/// and flag the mismatch.
pub fn closed_form_weight_candidate(freqs: &FrequencySet) -> Result<Vec<f64>> {
    freqs.require_simple()?;
    let n = freqs.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let wi = freqs.omega(i);
        let mut denom = wi;
        for j in 0..n {
            if j != i {
                let wj = freqs.omega(j);
                denom *= wi * wi - wj * wj;
            }
        }
        out.push(1.0 / denom);
    }
    Ok(out)
}

/// Max-abs of `Pi * S_H - A`; zero certifies that `(Pi, H)` generates the
/// companion dynamics.
pub fn verify_generates_dynamics(
    hamiltonian: &QuadraticObservable,
    pt: &PoissonTensor,
    field: &LinearVectorField,
) -> Result<f64> {
    check_dims(hamiltonian.dim(), pt.dim())?;
    check_dims(field.dim(), pt.dim())?;
    let generated = pt.matrix() * hamiltonian.matrix();
    Ok((generated - field.matrix()).amax())
}

/// Time derivative of a quadratic observable along a linear field, as a
/// quadratic observable: `d/dt (x^T S x / 2) = x^T (S A + A^T S) x / 2`.
/// Identically zero exactly when the observable is an integral of motion.
pub fn directional_derivative(
    obs: &QuadraticObservable,
    field: &LinearVectorField,
) -> Result<QuadraticObservable> {
    check_dims(obs.dim(), field.dim())?;
    let a = field.matrix();
    let s = obs.matrix() * a + a.transpose() * obs.matrix();
    Ok(QuadraticObservable { s })
}

fn check_dims(left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch { left, right });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn freqs(omegas: &[f64]) -> FrequencySet {
        FrequencySet::new(omegas.to_vec()).unwrap()
    }

    fn fourth_order() -> FrequencySet {
        freqs(&[1.0, 2.0])
    }

    #[test]
    fn vector_field_simple_oscillator() {
        let field = build_vector_field(&freqs(&[1.0]));
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert_eq!(field.matrix(), &expected);
    }

    #[test]
    fn vector_field_fourth_order_last_row() {
        let field = build_vector_field(&fourth_order());
        let last = field.matrix().row(3);
        assert_eq!(last.iter().copied().collect::<Vec<_>>(), vec![-4.0, 0.0, -5.0, 0.0]);
        for i in 0..3 {
            for j in 0..4 {
                let expected = if j == i + 1 { 1.0 } else { 0.0 };
                assert_eq!(field.matrix()[(i, j)], expected);
            }
        }
    }

    #[test]
    fn vector_field_sixth_order_last_row() {
        let field = build_vector_field(&freqs(&[1.0, 2.0, 3.0]));
        let last = field.matrix().row(5);
        assert_eq!(
            last.iter().copied().collect::<Vec<_>>(),
            vec![-36.0, 0.0, -49.0, 0.0, -14.0, 0.0]
        );
    }

    #[test]
    fn oscillator_variable_rows_fourth_order() {
        let forms = build_oscillator_variables(&fourth_order()).unwrap();
        assert_eq!(
            forms.q_row(0).iter().copied().collect::<Vec<_>>(),
            vec![4.0, 0.0, 1.0, 0.0]
        );
        assert_eq!(
            forms.p_row(1).iter().copied().collect::<Vec<_>>(),
            vec![0.0, 1.0, 0.0, 1.0]
        );
    }

    #[test]
    fn oscillator_variable_rows_sixth_order() {
        let forms = build_oscillator_variables(&freqs(&[1.0, 2.0, 3.0])).unwrap();
        assert_eq!(
            forms.q_row(1).iter().copied().collect::<Vec<_>>(),
            vec![9.0, 0.0, 10.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn momenta_are_shifted_coordinates() {
        let f = freqs(&[0.6, 1.7, 2.9, 4.1]);
        let forms = build_oscillator_variables(&f).unwrap();
        for i in 0..f.len() {
            let q = forms.q_row(i);
            let p = forms.p_row(i);
            for col in 0..f.phase_dim() - 1 {
                assert_eq!(p[col + 1], q[col]);
            }
            assert_eq!(p[0], 0.0);
        }
    }

    #[test]
    fn oscillator_variables_reject_repeats() {
        assert!(matches!(
            build_oscillator_variables(&freqs(&[1.0, 1.0])),
            Err(Error::DegenerateFrequencies { i: 0, j: 1, .. })
        ));
    }

    #[test]
    fn integral_matches_explicit_expansion() {
        // H1 = (x4 + 4 x2)^2 / 2 + (x3 + 4 x1)^2 / 2 for frequencies (1, 2).
        let h1 = build_integral(&fourth_order(), 0).unwrap();
        let q = DVector::from_vec(vec![4.0, 0.0, 1.0, 0.0]);
        let p = DVector::from_vec(vec![0.0, 4.0, 0.0, 1.0]);
        let expected = &p * p.transpose() + &q * q.transpose();
        assert_relative_eq!(h1.matrix(), &expected, max_relative = 1e-15);
    }

    #[test]
    fn integral_second_order_energy() {
        let h = build_integral(&freqs(&[1.0]), 0).unwrap();
        assert_eq!(h.matrix(), &DMatrix::identity(2, 2));
    }

    #[test]
    fn integral_value_at_unit_position() {
        let h2 = build_integral(&fourth_order(), 1).unwrap();
        let x = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert_relative_eq!(h2.value(&x), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn combination_coefficients() {
        let combos = build_named_combinations(&fourth_order()).unwrap();
        // c2 = 2 x1^2 + 5/2 x2^2 - x3^2/2 + x2 x4
        let c2 = combos.c2.matrix();
        assert_eq!(c2[(0, 0)], 4.0);
        assert_eq!(c2[(1, 1)], 5.0);
        assert_eq!(c2[(2, 2)], -1.0);
        assert_eq!(c2[(1, 3)], 1.0);
        // x1 x3 coefficient of c1 is sigma2 = 4.
        assert_eq!(combos.c1.matrix()[(0, 2)], 4.0);
    }

    #[test]
    fn sum_and_difference_identities() {
        let f = fourth_order();
        let combos = build_named_combinations(&f).unwrap();
        let h1 = build_integral(&f, 0).unwrap();
        let h2 = build_integral(&f, 1).unwrap();
        assert!(combos.h_c.sub(&h1.add(&h2)).max_abs() < 1e-12);
        assert!(combos.h_pu.sub(&h1.sub(&h2)).max_abs() < 1e-12);
    }

    #[test]
    fn combination_quotient_identities() {
        let f = freqs(&[1.3, 0.7]);
        let combos = build_named_combinations(&f).unwrap();
        let h1 = build_integral(&f, 0).unwrap();
        let h2 = build_integral(&f, 1).unwrap();
        let w1sq = 1.3 * 1.3;
        let w2sq = 0.7 * 0.7;
        let spread = w1sq - w2sq;
        let c1_quotient = h1.scaled(w1sq / spread).sub(&h2.scaled(w2sq / spread));
        let c2_quotient = h1.sub(&h2).scaled(-1.0 / spread);
        assert!(combos.c1.sub(&c1_quotient).max_abs() < 1e-12);
        assert!(combos.c2.sub(&c2_quotient).max_abs() < 1e-12);
    }

    #[test]
    fn equal_frequency_combinations_match_secular_forms() {
        let w = 1.4f64;
        let combos = build_named_combinations(&freqs(&[w, w])).unwrap();
        let w2 = w * w;
        let w4 = w2 * w2;
        let mut cs1 = DMatrix::zeros(4, 4);
        cs1[(3, 3)] = 1.0;
        cs1[(2, 2)] = 2.0 * w2;
        cs1[(0, 2)] = w4;
        cs1[(2, 0)] = w4;
        cs1[(1, 1)] = -w4;
        let mut cs2 = DMatrix::zeros(4, 4);
        cs2[(2, 2)] = -1.0;
        cs2[(1, 1)] = 2.0 * w2;
        cs2[(0, 0)] = w4;
        cs2[(1, 3)] = 1.0;
        cs2[(3, 1)] = 1.0;
        assert!((combos.c1.matrix() - cs1).amax() < 1e-12);
        assert!((combos.c2.matrix() - cs2).amax() < 1e-12);
    }

    #[test]
    fn two_param_tensor_first_fixing() {
        let pt = poisson_tensor_two_param(&fourth_order(), -0.25, 0.0).unwrap();
        assert_eq!(pt.bracket(0, 1), -0.25);
        assert_eq!(pt.bracket(2, 3), 1.0);
        assert_eq!(pt.bracket(0, 3), 0.0);
        assert_eq!(pt.bracket(1, 2), 0.0);
    }

    #[test]
    fn two_param_tensor_second_fixing() {
        let pt = poisson_tensor_two_param(&fourth_order(), 0.0, 1.0).unwrap();
        assert_eq!(pt.bracket(0, 3), 1.0);
        assert_eq!(pt.bracket(1, 2), -1.0);
        assert_eq!(pt.bracket(2, 3), -5.0);
        assert_eq!(pt.bracket(0, 1), 0.0);
    }

    #[test]
    fn two_param_tensor_is_linear_in_parameters() {
        let f = fourth_order();
        let base_f = poisson_tensor_two_param(&f, 1.0, 0.0).unwrap();
        let base_g = poisson_tensor_two_param(&f, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let (fv, gv): (f64, f64) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
            let combined = poisson_tensor_two_param(&f, fv, gv).unwrap();
            let rebuilt = fv * base_f.matrix() + gv * base_g.matrix();
            assert_eq!(combined.matrix(), &rebuilt);
        }
    }

    #[test]
    fn zero_parameters_give_zero_tensor() {
        let pt = poisson_tensor_two_param(&fourth_order(), 0.0, 0.0).unwrap();
        assert_eq!(pt.matrix().amax(), 0.0);
        assert_eq!(pt.rank(), 0);
    }

    #[test]
    fn general_tensor_fourth_order_entries() {
        let pt = poisson_tensor_general(&fourth_order());
        assert_eq!(pt.bracket(0, 1), 6.0);
        assert_eq!(pt.bracket(0, 3), -18.0);
        assert_eq!(pt.bracket(1, 2), 18.0);
        assert_eq!(pt.bracket(2, 3), 66.0);
        assert_eq!(pt.bracket(0, 2), 0.0);
        assert_eq!(pt.bracket(1, 3), 0.0);
    }

    #[test]
    fn general_tensor_matches_two_param_fixing() {
        let f = fourth_order();
        let general = poisson_tensor_general(&f);
        let tau1 = power_sum_tau(&f, 1);
        let tau3 = power_sum_tau(&f, 3);
        let two_param = poisson_tensor_two_param(&f, tau1, -tau3).unwrap();
        assert!((general.matrix() - two_param.matrix()).amax() < 1e-12);
    }

    #[test]
    fn general_tensor_second_order() {
        let pt = poisson_tensor_general(&freqs(&[1.0]));
        assert_eq!(pt.bracket(0, 1), 2.0);
    }

    #[test]
    fn bracket_with_itself_vanishes_exactly() {
        let f = fourth_order();
        let h1 = build_integral(&f, 0).unwrap();
        let pt = poisson_tensor_two_param(&f, 0.3, -1.7).unwrap();
        let bracket = poisson_bracket(&h1, &h1, &pt).unwrap();
        assert_eq!(bracket.max_abs(), 0.0);
    }

    #[test]
    fn combination_brackets_are_in_involution() {
        let f = fourth_order();
        let combos = build_named_combinations(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let fv: f64 = rng.random_range(-10.0..10.0);
            let gv: f64 = rng.random_range(-10.0..10.0);
            let pt = poisson_tensor_two_param(&f, fv, gv).unwrap();
            let bracket = poisson_bracket(&combos.c1, &combos.c2, &pt).unwrap();
            assert!(
                bracket.max_abs() < 1e-10,
                "involution failed for f = {fv}, g = {gv}: {}",
                bracket.max_abs()
            );
        }
    }

    #[test]
    fn coordinate_bracket_from_first_fixing() {
        let pt = poisson_tensor_two_param(&fourth_order(), -0.25, 0.0).unwrap();
        assert_eq!(pt.bracket(2, 3), 1.0);
    }

    #[test]
    fn companion_field_preserves_two_param_family() {
        let f = fourth_order();
        let field = build_vector_field(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let pt = poisson_tensor_two_param(
                &f,
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            )
            .unwrap();
            assert!(lie_derivative_residual(&field, &pt).unwrap() < 1e-12);
        }
    }

    #[test]
    fn companion_field_preserves_general_tensor() {
        let f = freqs(&[1.0, 2.0, 3.0]);
        let field = build_vector_field(&f);
        let pt = poisson_tensor_general(&f);
        assert!(lie_derivative_residual(&field, &pt).unwrap() < 1e-12);
    }

    #[test]
    fn canonical_symplectic_is_not_preserved() {
        let f = fourth_order();
        let field = build_vector_field(&f);
        let mut j = DMatrix::zeros(4, 4);
        j[(0, 2)] = 1.0;
        j[(1, 3)] = 1.0;
        j[(2, 0)] = -1.0;
        j[(3, 1)] = -1.0;
        let pt = PoissonTensor::from_matrix(j);
        assert!(lie_derivative_residual(&field, &pt).unwrap() > 0.1);
    }

    #[test]
    fn schouten_vanishes_for_constant_tensors() {
        let f = freqs(&[1.0, 2.0, 3.0]);
        assert_eq!(schouten_residual(&poisson_tensor_general(&f)), 0.0);
        let zero = poisson_tensor_two_param(&fourth_order(), 0.0, 0.0).unwrap();
        assert_eq!(schouten_residual(&zero), 0.0);
    }

    #[test]
    fn closed_form_two_param_weights() {
        let f = fourth_order();
        let (a1, a2) = hamiltonian_coefficients_two_param(&f, 6.0, -18.0).unwrap();
        assert_relative_eq!(a1, 1.0 / 18.0, max_relative = 1e-14);
        assert_relative_eq!(a2, 1.0 / 36.0, max_relative = 1e-14);

        let (a1, a2) = hamiltonian_coefficients_two_param(&f, 0.0, 1.0).unwrap();
        assert_relative_eq!(a1, 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(a2, -1.0 / 3.0, max_relative = 1e-14);

        let (a1, a2) = hamiltonian_coefficients_two_param(&f, -0.25, 0.0).unwrap();
        assert_relative_eq!(a1, -1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(a2, 4.0 / 3.0, max_relative = 1e-14);
    }

    #[test]
    fn vanishing_pairing_is_rejected() {
        let f = fourth_order();
        // w2^2 f + g = 0 at f = 1, g = -4.
        assert!(matches!(
            hamiltonian_coefficients_two_param(&f, 1.0, -4.0),
            Err(Error::DegeneratePairing { .. })
        ));
    }

    #[test]
    fn degenerate_pairing_line_drops_rank() {
        let f = fourth_order();
        let pt = poisson_tensor_two_param(&f, 1.0, -4.0).unwrap();
        assert!(pt.rank() < 4);
        let pt_full = poisson_tensor_two_param(&f, 1.0, 0.0).unwrap();
        assert_eq!(pt_full.rank(), 4);
    }

    #[test]
    fn solved_weights_match_closed_form() {
        let f = fourth_order();
        let pt = poisson_tensor_two_param(&f, 0.0, 1.0).unwrap();
        let solution = solve_hamiltonian_coefficients(&f, &pt).unwrap();
        assert!(solution.residual < 1e-12);
        assert_relative_eq!(solution.coeffs[0], 1.0 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(solution.coeffs[1], -1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn solved_weights_for_power_sum_tensor() {
        let f = fourth_order();
        let pt = poisson_tensor_general(&f);
        let solution = solve_hamiltonian_coefficients(&f, &pt).unwrap();
        assert!(solution.residual < 1e-12);
        assert_relative_eq!(solution.coeffs[0], 1.0 / 18.0, max_relative = 1e-12);
        assert_relative_eq!(solution.coeffs[1], 1.0 / 36.0, max_relative = 1e-12);
    }

    #[test]
    fn solved_weight_second_order() {
        let f = freqs(&[1.0]);
        let pt = poisson_tensor_general(&f);
        let solution = solve_hamiltonian_coefficients(&f, &pt).unwrap();
        assert!(solution.residual < 1e-12);
        assert_relative_eq!(solution.coeffs[0], 0.5, max_relative = 1e-14);
    }

    #[test]
    fn random_two_param_solves_agree_with_closed_form() {
        let f = fourth_order();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 50 {
            let fv: f64 = rng.random_range(-5.0..5.0);
            let gv: f64 = rng.random_range(-5.0..5.0);
            let closed = match hamiltonian_coefficients_two_param(&f, fv, gv) {
                Ok(pair) => pair,
                Err(_) => continue,
            };
            // Near-degenerate pairings make the closed form ill-conditioned;
            // keep the sweep on the well-posed region.
            if (4.0 * fv + gv).abs() < 1e-2 || (fv + gv).abs() < 1e-2 {
                continue;
            }
            let pt = poisson_tensor_two_param(&f, fv, gv).unwrap();
            let solution = solve_hamiltonian_coefficients(&f, &pt).unwrap();
            assert!(solution.residual < 1e-10);
            assert_relative_eq!(solution.coeffs[0], closed.0, max_relative = 1e-8);
            assert_relative_eq!(solution.coeffs[1], closed.1, max_relative = 1e-8);
            checked += 1;
        }
    }

    #[test]
    fn solved_weights_generate_dynamics_for_random_orders() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..12 {
            let n = rng.random_range(1..=4usize);
            // Desk-scale draws: the tensor entries grow like w^(4n-3), so an
            // absolute 1e-10 bound presumes frequencies of order one.
            let omegas: Vec<f64> = (0..n)
                .map(|i| rng.random_range(0.3..0.8) + 0.7 * i as f64)
                .collect();
            let f = FrequencySet::new(omegas).unwrap();
            let pt = poisson_tensor_general(&f);
            let solution = solve_hamiltonian_coefficients(&f, &pt).unwrap();
            assert!(
                solution.residual < 1e-10,
                "n = {n}, freqs {:?}: residual {}",
                f.omegas(),
                solution.residual
            );
        }
    }

    #[test]
    fn rank_deficient_weight_system_is_reported() {
        let f = fourth_order();
        let pt = poisson_tensor_two_param(&f, 0.0, 0.0).unwrap();
        assert!(matches!(
            solve_hamiltonian_coefficients(&f, &pt),
            Err(Error::RankDeficientWeights { nullity: 2 })
        ));
    }

    #[test]
    fn bi_hamiltonian_pairings_generate_dynamics() {
        let f = fourth_order();
        let field = build_vector_field(&f);
        let combos = build_named_combinations(&f).unwrap();
        let pi1 = poisson_tensor_two_param(&f, -0.25, 0.0).unwrap();
        let pi2 = poisson_tensor_two_param(&f, 0.0, 1.0).unwrap();
        assert!(verify_generates_dynamics(&combos.c1, &pi1, &field).unwrap() < 1e-12);
        assert!(verify_generates_dynamics(&combos.c2, &pi2, &field).unwrap() < 1e-12);
    }

    #[test]
    fn single_integral_needs_nonconstant_structure() {
        // No tensor in the constant two-parameter family turns one mode
        // energy alone into the generating Hamiltonian.
        let f = fourth_order();
        let field = build_vector_field(&f);
        let h1 = build_integral(&f, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..25 {
            let pt = poisson_tensor_two_param(
                &f,
                rng.random_range(-10.0..10.0),
                rng.random_range(-10.0..10.0),
            )
            .unwrap();
            assert!(verify_generates_dynamics(&h1, &pt, &field).unwrap() > 1e-3);
        }
    }

    #[test]
    fn closed_form_candidate_disagrees_with_solved_weights() {
        let f = fourth_order();
        let candidate = closed_form_weight_candidate(&f).unwrap();
        assert_relative_eq!(candidate[0], -1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(candidate[1], 1.0 / 6.0, max_relative = 1e-14);
        let solved = solve_hamiltonian_coefficients(&f, &poisson_tensor_general(&f))
            .unwrap()
            .coeffs;
        assert!((candidate[0] - solved[0]).abs() > 1e-3);
        assert!((candidate[1] - solved[1]).abs() > 1e-3);
    }

    proptest! {
        /// Every mode energy is conserved along the companion field.
        #[test]
        fn integrals_are_conserved_along_field(
            omegas in proptest::collection::vec(0.2f64..3.0, 1..=4)
        ) {
            let f = FrequencySet::new(omegas).unwrap();
            prop_assume!(f.is_simple());
            let field = build_vector_field(&f);
            for i in 0..f.len() {
                let h = build_integral(&f, i).unwrap();
                let rate = directional_derivative(&h, &field).unwrap();
                let scale = h.max_abs().max(1.0);
                prop_assert!(rate.max_abs() <= 1e-12 * scale * field.matrix().amax().max(1.0));
            }
        }

        /// Constructed tensors are exactly antisymmetric.
        #[test]
        fn tensors_are_exactly_antisymmetric(
            omegas in proptest::collection::vec(0.2f64..3.0, 1..=4),
            fv in -10.0f64..10.0,
            gv in -10.0f64..10.0,
        ) {
            let f = FrequencySet::new(omegas).unwrap();
            let general = poisson_tensor_general(&f);
            prop_assert_eq!((general.matrix() + general.matrix().transpose()).amax(), 0.0);
            if f.len() == 2 {
                let two = poisson_tensor_two_param(&f, fv, gv).unwrap();
                prop_assert_eq!((two.matrix() + two.matrix().transpose()).amax(), 0.0);
            }
        }
    }
}
