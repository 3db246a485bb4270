//! Quantization bookkeeping: mode bases, commutator solving from a Poisson
//! tensor, normalization of the creation/annihilation pairs, quadratic
//! normal forms, anisotropic spectra and the repeated-frequency analysis.
//!
//! Operators never materialize as Hilbert-space vectors. Every statement
//! handled here is about quadratic forms in the mode operators, so the
//! algebra is carried entirely by coefficient arrays of normally-ordered
//! monomials of degree at most two.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::classical::{build_named_combinations, PoissonTensor, QuadraticObservable};
use crate::error::Error;
use crate::symfun::FrequencySet;
use crate::Result;

/// Quantization scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumConfig {
    hbar: f64,
}

impl QuantumConfig {
    pub fn new(hbar: f64) -> Result<Self> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidInput(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        Ok(Self { hbar })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self { hbar: 1.0 }
    }
}

/// Labels one mode-basis column: its frequency and secular power (zero for
/// a simple mode, `1..multiplicity-1` for the polynomial-in-t partners of a
/// repeated frequency).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeLabel {
    pub omega: f64,
    pub secular_power: usize,
}

/// Complex `2n x n` array expressing the phase operators at `t = 0` in terms
/// of the mode amplitudes: `x_k = sum_i M[k][i] a_i + conjugate terms`.
///
/// For a simple spectrum `M[k][i] = (-i w_i)^k` (each row is the time
/// derivative of the previous one, evaluated at `t = 0`); repeated
/// frequencies get the secular derivative ladder instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeBasis {
    m: DMatrix<Complex64>,
    labels: Vec<ModeLabel>,
}

impl ModeBasis {
    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn mode_count(&self) -> usize {
        self.m.ncols()
    }

    pub fn phase_dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn is_degenerate(&self) -> bool {
        self.labels.iter().any(|l| l.secular_power > 0)
    }
}

/// Builds the mode basis at `t = 0` from the frequency clusters.
pub fn build_mode_basis(freqs: &FrequencySet) -> ModeBasis {
    let n = freqs.len();
    let dim = 2 * n;
    let mut m = DMatrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    let mut col = 0;
    for cluster in freqs.clusters() {
        let s = Complex64::new(0.0, -cluster.omega);
        for power in 0..cluster.multiplicity() {
            for row in 0..dim {
                // k-th derivative of t^r e^{st} at t = 0:
                // zero below the secular power, k!/(k-r)! s^{k-r} above.
                m[(row, col)] = if row < power {
                    Complex64::new(0.0, 0.0)
                } else {
                    let mut coeff = 1.0;
                    for i in 0..power {
                        coeff *= (row - i) as f64;
                    }
                    coeff * s.powi((row - power) as i32)
                };
            }
            labels.push(ModeLabel {
                omega: cluster.omega,
                secular_power: power,
            });
            col += 1;
        }
    }
    ModeBasis { m, labels }
}

/// Commutator tables of the mode operators: `C[i][j] = [a_i, a_j^+]`
/// (Hermitian as an array of values) and `D[i][j] = [a_i, a_j]`
/// (antisymmetric).
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCommutators {
    c: DMatrix<Complex64>,
    d: DMatrix<Complex64>,
}

impl ModeCommutators {
    /// The canonical table: `[a_i, a_j^+] = delta_ij`, `[a_i, a_j] = 0`.
    pub fn unit(n: usize) -> Self {
        Self {
            c: DMatrix::identity(n, n),
            d: DMatrix::zeros(n, n),
        }
    }

    pub fn c(&self) -> &DMatrix<Complex64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<Complex64> {
        &self.d
    }

    pub fn mode_count(&self) -> usize {
        self.c.nrows()
    }

    /// Max deviation from the canonical table.
    pub fn deviation_from_unit(&self) -> f64 {
        let n = self.c.nrows();
        let id = DMatrix::<Complex64>::identity(n, n);
        (&self.c - id)
            .iter()
            .chain(self.d.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_pair_commutator(&self) -> f64 {
        self.d.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Result of the commutator solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorSolution {
    pub comms: ModeCommutators,
    /// Max-abs of the reconstruction `2 Im(M C M^+ + M D M^T) - hbar Pi`.
    pub residual: f64,
}

/// Solves `[x_k, x_l] = i hbar Pi^{kl}` for the mode commutator tables.
///
/// Substituting `x = M a + conj(M) a^+` reduces the operator equation to the
/// real linear system `2 Im(M C M^+ + M D M^T) = hbar Pi` over the Hermitian
/// unknown `C` and antisymmetric unknown `D`; both are solved jointly by
/// least squares rather than assuming the diagonal answer, so the solved
/// table is a certified output. Errors when the reconstruction residual
/// exceeds `tolerance` (the tensor admits no mode-commutator realization in
/// this basis at that accuracy).
pub fn solve_mode_commutators(
    basis: &ModeBasis,
    pt: &PoissonTensor,
    qc: &QuantumConfig,
    tolerance: f64,
) -> Result<CommutatorSolution> {
    let n = basis.mode_count();
    let dim = basis.phase_dim();
    if pt.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: pt.dim(),
            right: dim,
        });
    }

    // Real unknowns: diag(C), then (Re, Im) of upper C, then (Re, Im) of
    // upper D; one real equation per coordinate pair k < l.
    let unknowns = n + 2 * n * (n - 1);
    let pairs = dim * (dim - 1) / 2;
    let mut system = DMatrix::zeros(pairs, unknowns);
    let mut rhs = DVector::zeros(pairs);

    let m = basis.matrix();
    let contribution = |b: &DMatrix<Complex64>, conjugated: bool| -> DMatrix<f64> {
        let product = if conjugated {
            m * b * m.adjoint()
        } else {
            m * b * m.transpose()
        };
        product.map(|z| 2.0 * z.im)
    };

    let fill_column = |col: usize, weights: &DMatrix<f64>, system: &mut DMatrix<f64>| {
        let mut row = 0;
        for k in 0..dim {
            for l in (k + 1)..dim {
                system[(row, col)] = weights[(k, l)];
                row += 1;
            }
        }
    };

    let mut col = 0;
    let mut basis_c: Vec<DMatrix<Complex64>> = Vec::with_capacity(unknowns);
    let mut basis_d: Vec<DMatrix<Complex64>> = Vec::with_capacity(unknowns);
    let zero = DMatrix::<Complex64>::zeros(n, n);
    let unit = |i: usize, j: usize, v: Complex64| {
        let mut e = DMatrix::<Complex64>::zeros(n, n);
        e[(i, j)] = v;
        e
    };
    let one = Complex64::new(1.0, 0.0);
    let i_unit = Complex64::new(0.0, 1.0);

    for i in 0..n {
        let b = unit(i, i, one);
        fill_column(col, &contribution(&b, true), &mut system);
        basis_c.push(b);
        basis_d.push(zero.clone());
        col += 1;
    }
    for i in 0..n {
        for j in (i + 1)..n {
            // Hermitian: real part is symmetric, imaginary antisymmetric.
            let b_re = unit(i, j, one) + unit(j, i, one);
            let b_im = unit(i, j, i_unit) - unit(j, i, i_unit);
            for b in [b_re, b_im] {
                fill_column(col, &contribution(&b, true), &mut system);
                basis_c.push(b);
                basis_d.push(zero.clone());
                col += 1;
            }
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let b_re = unit(i, j, one) - unit(j, i, one);
            let b_im = unit(i, j, i_unit) - unit(j, i, i_unit);
            for b in [b_re, b_im] {
                fill_column(col, &contribution(&b, false), &mut system);
                basis_c.push(zero.clone());
                basis_d.push(b);
                col += 1;
            }
        }
    }

    let mut row = 0;
    for k in 0..dim {
        for l in (k + 1)..dim {
            rhs[row] = qc.hbar() * pt.bracket(k, l);
            row += 1;
        }
    }

    let svd = SVD::new(system, true, true);
    let max_sv = svd.singular_values.max();
    let eps = 1e-12 * max_sv.max(f64::MIN_POSITIVE);
    let solution = svd
        .solve(&rhs, eps)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;

    let mut c = DMatrix::<Complex64>::zeros(n, n);
    let mut d = DMatrix::<Complex64>::zeros(n, n);
    for (idx, weight) in solution.iter().enumerate() {
        c += &basis_c[idx] * Complex64::new(*weight, 0.0);
        d += &basis_d[idx] * Complex64::new(*weight, 0.0);
    }

    let reconstructed = (m * &c * m.adjoint() + m * &d * m.transpose()).map(|z| 2.0 * z.im);
    let target = qc.hbar() * pt.matrix();
    let residual = (reconstructed - target).amax();
    if residual > tolerance {
        return Err(Error::InconsistentQuantization {
            residual,
            tolerance,
        });
    }

    Ok(CommutatorSolution {
        comms: ModeCommutators { c, d },
        residual,
    })
}

/// Tensor parameters `(f, g)` that normalize both fourth-order mode pairs to
/// `[a_i, a_i^+] = 1`: `f = 2 (w1 + w2) / hbar`, `g = -2 (w1^3 + w2^3) / hbar`.
pub fn fix_normalizing_parameters(freqs: &FrequencySet, qc: &QuantumConfig) -> Result<(f64, f64)> {
    if freqs.len() != 2 {
        return Err(Error::UnsupportedOrder {
            expected: 2,
            got: freqs.len(),
        });
    }
    freqs.require_simple()?;
    let (w1, w2) = (freqs.omega(0), freqs.omega(1));
    let f = 2.0 / qc.hbar() * (w1 + w2);
    let g = -2.0 / qc.hbar() * (w1.powi(3) + w2.powi(3));
    Ok((f, g))
}

/// Equal-frequency counterpart: the cross pair `[a_1, a_2^+]` vanishes only
/// on the line `g = -w^2 f`, and `[a_1, a_1^+] = 1` then forces
/// `f = 2 w / hbar`, so the returned pair is `(2 w / hbar, -2 w^3 / hbar)`.
pub fn fix_degenerate_parameters(omega: f64, qc: &QuantumConfig) -> Result<(f64, f64)> {
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::NonPositiveFrequency {
            index: 0,
            value: omega,
        });
    }
    let f = 2.0 * omega / qc.hbar();
    let g = -(omega * omega) * f;
    Ok((f, g))
}

/// A quadratic operator rewritten over normally-ordered mode monomials:
/// number terms `lambda_i a_i^+ a_i`, a real constant, off-diagonal number
/// terms `a_i^+ a_j` and squeeze terms `a_i a_j` (plus conjugates).
#[derive(Debug, Clone, PartialEq)]
pub struct NormalForm {
    number_coeffs: Vec<f64>,
    zero_point: f64,
    offdiag_number: DMatrix<Complex64>,
    squeeze: DMatrix<Complex64>,
}

impl NormalForm {
    /// Coefficient of `a_i^+ a_i`.
    pub fn number_coeffs(&self) -> &[f64] {
        &self.number_coeffs
    }

    /// Constant term produced by reordering, `sum_i lambda_i C_ii / 2` plus
    /// the off-diagonal reordering contributions.
    pub fn zero_point(&self) -> f64 {
        self.zero_point
    }

    /// Coefficients of `a_i^+ a_j` for `i != j` (zero diagonal).
    pub fn offdiag_number(&self) -> &DMatrix<Complex64> {
        &self.offdiag_number
    }

    /// Coefficients of `a_i a_j` (the conjugate array rides along with
    /// `a_i^+ a_j^+`).
    pub fn squeeze(&self) -> &DMatrix<Complex64> {
        &self.squeeze
    }

    pub fn max_offdiag(&self) -> f64 {
        self.offdiag_number.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_squeeze(&self) -> f64 {
        self.squeeze.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Eigenvalue on the occupation-number state `|k1..kn>`, with the number
    /// operator `a_i^+ a_i` contributing `C_ii k_i` under the given
    /// commutator table. Meaningful when the off-diagonal and squeeze parts
    /// vanish and the table is diagonal.
    pub fn eigenvalue(&self, occupations: &[u64], comms: &ModeCommutators) -> Result<f64> {
        if occupations.len() != self.number_coeffs.len() {
            return Err(Error::DimensionMismatch {
                left: occupations.len(),
                right: self.number_coeffs.len(),
            });
        }
        let mut energy = self.zero_point;
        for (i, (&lambda, &k)) in self.number_coeffs.iter().zip(occupations).enumerate() {
            energy += lambda * comms.c()[(i, i)].re * k as f64;
        }
        Ok(energy)
    }

}

/// Substitutes `x = M a + conj(M) a^+` into `x^T S x / 2`, reorders the
/// mixed pairs with the commutator table and collects the normally-ordered
/// coefficients.
///
/// With `G = M^+ S M` and `K = M^T S M`, the operator reads
/// `sum_ij G_ij a_i^+ a_j + (K_ij a_i a_j + conj(K)_ij a_i^+ a_j^+) / 2`
/// plus the reordering constant `Re tr(G^+ C) / 2`.
pub fn normal_form(
    obs: &QuadraticObservable,
    basis: &ModeBasis,
    comms: &ModeCommutators,
) -> Result<NormalForm> {
    let dim = basis.phase_dim();
    if obs.dim() != dim {
        return Err(Error::DimensionMismatch {
            left: obs.dim(),
            right: dim,
        });
    }
    if comms.mode_count() != basis.mode_count() {
        return Err(Error::DimensionMismatch {
            left: comms.mode_count(),
            right: basis.mode_count(),
        });
    }
    let s_complex = obs.matrix().map(|v| Complex64::new(v, 0.0));
    let m = basis.matrix();

    let g_raw = m.adjoint() * &s_complex * m;
    let g = (&g_raw + g_raw.adjoint()) * Complex64::new(0.5, 0.0);
    let k_raw = m.transpose() * &s_complex * m;
    let k = (&k_raw + k_raw.transpose()) * Complex64::new(0.5, 0.0);

    let n = basis.mode_count();
    let number_coeffs: Vec<f64> = (0..n).map(|i| g[(i, i)].re).collect();
    let mut offdiag = g.clone();
    for i in 0..n {
        offdiag[(i, i)] = Complex64::new(0.0, 0.0);
    }
    let zero_point = 0.5
        * g.iter()
            .zip(comms.c().iter())
            .map(|(gv, cv)| (gv.conj() * cv).re)
            .sum::<f64>();

    Ok(NormalForm {
        number_coeffs,
        zero_point,
        offdiag_number: offdiag,
        squeeze: k,
    })
}

/// Simple-spectrum energy `hbar * sum_i w_i (k_i + 1/2)`.
pub fn spectrum(freqs: &FrequencySet, occupations: &[u64], qc: &QuantumConfig) -> Result<f64> {
    if freqs.require_simple().is_err() {
        return Err(Error::DegenerateSpectrum);
    }
    if occupations.len() != freqs.len() {
        return Err(Error::DimensionMismatch {
            left: occupations.len(),
            right: freqs.len(),
        });
    }
    Ok(qc.hbar()
        * freqs
            .omegas()
            .iter()
            .zip(occupations)
            .map(|(w, &k)| w * (k as f64 + 0.5))
            .sum::<f64>())
}

/// Everything the equal-frequency fourth-order analysis produces.
#[derive(Debug, Clone)]
pub struct DegenerateReport {
    pub omega: f64,
    pub hbar: f64,
    /// The normalizing tensor parameters.
    pub f: f64,
    pub g: f64,
    pub comms: ModeCommutators,
    pub commutator_residual: f64,
    /// Normal forms of the two surviving combinations.
    pub cs1: NormalForm,
    pub cs2: NormalForm,
    /// Modes whose pair commutator vanishes: they stay classical, and state
    /// construction has to treat them as such.
    pub classical_modes: Vec<usize>,
}

/// Runs the equal-frequency analysis: fixes `(f, g)`, solves the commutator
/// table (the secular pair commutes for any parameters), and rewrites the
/// surviving combinations over the mode operators.
pub fn degenerate_analysis(
    omega: f64,
    qc: &QuantumConfig,
    tolerance: f64,
) -> Result<DegenerateReport> {
    let freqs = FrequencySet::new(vec![omega, omega])?;
    let (f, g) = fix_degenerate_parameters(omega, qc)?;
    let basis = build_mode_basis(&freqs);
    let pt = crate::classical::poisson_tensor_two_param(&freqs, f, g)?;
    let solution = solve_mode_commutators(&basis, &pt, qc, tolerance)?;

    let combos = build_named_combinations(&freqs)?;
    let cs1 = normal_form(&combos.c1, &basis, &solution.comms)?;
    let cs2 = normal_form(&combos.c2, &basis, &solution.comms)?;

    // Classification threshold is fixed: a pair is classical when its
    // commutator is numerically zero, independent of how tight the solver
    // tolerance was.
    let classical_modes = (0..basis.mode_count())
        .filter(|&i| solution.comms.c()[(i, i)].norm() < 1e-10)
        .collect();

    Ok(DegenerateReport {
        omega,
        hbar: qc.hbar(),
        f,
        g,
        comms: solution.comms,
        commutator_residual: solution.residual,
        cs1,
        cs2,
        classical_modes,
    })
}
