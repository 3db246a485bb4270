//! The residual check suite: every structural identity the crate constructs,
//! re-verified numerically for a given frequency set.
//!
//! Checks are deterministic in `(seed, tolerance, hbar)`. Distinct-spectrum
//! checks are reported as skipped when frequencies repeat, and the other way
//! round, so the suite always documents the full list.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classical::{
    build_integral, build_named_combinations, build_vector_field, directional_derivative,
    lie_derivative_residual, poisson_bracket, poisson_tensor_general, poisson_tensor_two_param,
    schouten_residual, solve_hamiltonian_coefficients, verify_generates_dynamics,
    QuadraticObservable,
};
use crate::dynamics::{conservation_drift, integrate_rk4, exact_solution, ModalDecomposition};
use crate::quantum::{
    build_mode_basis, degenerate_analysis, fix_normalizing_parameters, normal_form,
    solve_mode_commutators, spectrum, ModeCommutators, QuantumConfig,
};
use crate::symfun::FrequencySet;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    Skipped,
}

/// One verified identity: its residual against the tolerance, or the reason
/// it was skipped.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckResult {
    fn residual(name: &str, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            status: if residual <= threshold {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            residual: Some(residual),
            threshold: Some(threshold),
            detail: None,
        }
    }

    fn skipped(name: &str, reason: &str) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            residual: None,
            threshold: None,
            detail: Some(reason.into()),
        }
    }

    fn with_detail(mut self, detail: String) -> Self {
        self.detail = Some(detail);
        self
    }
}

/// Settings for one suite run.
#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    pub tolerance: f64,
    pub hbar: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            tolerance: 1e-10,
            hbar: 1.0,
        }
    }
}

pub fn suite_passed(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.status != CheckStatus::Fail)
}

/// Runs every check that applies to the given frequency set.
pub fn run_suite(freqs: &FrequencySet, cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let tol = cfg.tolerance;
    let qc = QuantumConfig::new(cfg.hbar)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut results = Vec::new();

    let n = freqs.len();
    let simple = freqs.is_simple();
    let degenerate_pair = n == 2 && !simple;
    let field = build_vector_field(freqs);
    let general = poisson_tensor_general(freqs);

    // Structure-level identities, valid for any spectrum.
    results.push(CheckResult::residual(
        "tensor_antisymmetry",
        (general.matrix() + general.matrix().transpose()).amax(),
        tol,
    ));
    results.push(CheckResult::residual(
        "power_sum_tensor_invariance",
        lie_derivative_residual(&field, &general)?,
        tol,
    ));
    results.push(CheckResult::residual(
        "constant_tensor_jacobi",
        schouten_residual(&general),
        tol,
    ));

    if simple {
        let integrals: Vec<QuadraticObservable> = (0..n)
            .map(|i| build_integral(freqs, i))
            .collect::<Result<_>>()?;

        let scale = integrals
            .iter()
            .map(|h| h.max_abs())
            .fold(1.0, f64::max)
            * field.matrix().amax().max(1.0);
        let conservation = integrals
            .iter()
            .map(|h| Ok(directional_derivative(h, &field)?.max_abs()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        results.push(CheckResult::residual(
            "integral_conservation",
            conservation / scale,
            tol,
        ));

        let weights = solve_hamiltonian_coefficients(freqs, &general)?;
        results.push(
            CheckResult::residual("hamiltonian_weight_solve", weights.residual, tol).with_detail(
                format!("weights {:?}", weights.coeffs),
            ),
        );

        // Exact modal flow against the RK4 reference, plus conservation along
        // both.
        let x0 = DVector::from_fn(2 * n, |_, _| rng.random_range(-1.0..1.0));
        let modal = ModalDecomposition::from_initial_state(freqs, &x0)?;
        let rk = integrate_rk4(&field, &x0, 1e-4, 2000)?;
        let agreement = rk
            .times()
            .iter()
            .zip(rk.states())
            .map(|(&t, state)| (modal.evaluate(t) - state).amax())
            .fold(0.0, f64::max);
        results.push(CheckResult::residual("exact_vs_rk4_agreement", agreement, tol));

        let exact_traj = modal.sample(0.02, 500)?;
        let drift_exact = conservation_drift(&exact_traj, &integrals)
            .into_iter()
            .fold(0.0, f64::max);
        results.push(CheckResult::residual(
            "integral_drift_exact_flow",
            drift_exact,
            tol,
        ));
        let drift_rk = conservation_drift(&rk, &integrals)
            .into_iter()
            .fold(0.0, f64::max);
        results.push(CheckResult::residual("integral_drift_rk4", drift_rk, tol));

        let t = rng.random_range(1.0..5.0);
        let there = exact_solution(freqs, &x0, t)?;
        let back = exact_solution(freqs, &there, -t)?;
        results.push(CheckResult::residual(
            "time_reversal",
            (back - &x0).amax(),
            tol,
        ));

        // Quantum side: the power-sum tensor must admit a mode-commutator
        // realization with commuting pairs, and the solved Hamiltonian must
        // reproduce the anisotropic spectrum.
        let basis = build_mode_basis(freqs);
        let sol = solve_mode_commutators(&basis, &general, &qc, f64::INFINITY)?;
        results.push(CheckResult::residual(
            "commutator_reconstruction",
            sol.residual,
            tol,
        ));
        results.push(CheckResult::residual(
            "pair_commutators_vanish",
            sol.comms.max_pair_commutator(),
            tol,
        ));

        let mut solved_h = QuadraticObservable::zeros(2 * n);
        for (i, &w) in weights.coeffs.iter().enumerate() {
            solved_h = solved_h.add(&integrals[i].scaled(w));
        }
        let nf = normal_form(&solved_h, &basis, &sol.comms)?;
        results.push(CheckResult::residual(
            "solved_hamiltonian_diagonality",
            nf.max_offdiag().max(nf.max_squeeze()),
            tol,
        ));
        let mut spectrum_dev: f64 = 0.0;
        for sample in 0..4u64 {
            let occupations: Vec<u64> = (0..n as u64).map(|i| (i + sample) % 4).collect();
            let direct = spectrum(freqs, &occupations, &qc)?;
            let from_form = nf.eigenvalue(&occupations, &sol.comms)?;
            spectrum_dev = spectrum_dev.max((direct - from_form).abs());
        }
        results.push(CheckResult::residual(
            "spectrum_consistency",
            spectrum_dev,
            tol,
        ));
    } else {
        for name in [
            "integral_conservation",
            "hamiltonian_weight_solve",
            "exact_vs_rk4_agreement",
            "integral_drift_exact_flow",
            "integral_drift_rk4",
            "time_reversal",
            "commutator_reconstruction",
            "pair_commutators_vanish",
            "solved_hamiltonian_diagonality",
            "spectrum_consistency",
        ] {
            results.push(CheckResult::skipped(name, "requires pairwise distinct frequencies"));
        }
    }

    if n == 2 {
        run_fourth_order_checks(freqs, cfg, &qc, &mut rng, simple, &mut results)?;
    }
    if degenerate_pair {
        run_degenerate_checks(freqs, cfg, &qc, &mut rng, &mut results)?;
    }

    Ok(results)
}

fn run_fourth_order_checks(
    freqs: &FrequencySet,
    cfg: &VerifyConfig,
    qc: &QuantumConfig,
    rng: &mut ChaCha8Rng,
    simple: bool,
    results: &mut Vec<CheckResult>,
) -> Result<()> {
    let tol = cfg.tolerance;
    let field = build_vector_field(freqs);
    let combos = build_named_combinations(freqs)?;

    let mut lie_worst: f64 = 0.0;
    let mut involution_worst: f64 = 0.0;
    for _ in 0..100 {
        let f: f64 = rng.random_range(-10.0..10.0);
        let g: f64 = rng.random_range(-10.0..10.0);
        let pt = poisson_tensor_two_param(freqs, f, g)?;
        lie_worst = lie_worst.max(lie_derivative_residual(&field, &pt)?);
        involution_worst =
            involution_worst.max(poisson_bracket(&combos.c1, &combos.c2, &pt)?.max_abs());
    }
    results.push(CheckResult::residual(
        "two_param_invariance",
        lie_worst,
        tol,
    ));
    results.push(CheckResult::residual(
        "combination_involution",
        involution_worst,
        tol,
    ));

    let base_f = poisson_tensor_two_param(freqs, 1.0, 0.0)?;
    let base_g = poisson_tensor_two_param(freqs, 0.0, 1.0)?;
    let mut bilinearity: f64 = 0.0;
    for _ in 0..20 {
        let f: f64 = rng.random_range(-10.0..10.0);
        let g: f64 = rng.random_range(-10.0..10.0);
        let combined = poisson_tensor_two_param(freqs, f, g)?;
        let rebuilt = f * base_f.matrix() + g * base_g.matrix();
        bilinearity = bilinearity.max((combined.matrix() - rebuilt).amax());
    }
    results.push(CheckResult::residual(
        "two_param_bilinearity",
        bilinearity,
        tol,
    ));

    let tau1 = crate::symfun::power_sum_tau(freqs, 1);
    let tau3 = crate::symfun::power_sum_tau(freqs, 3);
    let general = poisson_tensor_general(freqs);
    let fixed = poisson_tensor_two_param(freqs, tau1, -tau3)?;
    results.push(CheckResult::residual(
        "power_sum_matches_two_param_fixing",
        (general.matrix() - fixed.matrix()).amax(),
        tol * general.matrix().amax().max(1.0),
    ));

    // The bi-Hamiltonian certificate: both distinguished fixings generate
    // the dynamics with their paired combination.
    let pi1 = poisson_tensor_two_param(freqs, -1.0 / (freqs.omega(0).powi(2) * freqs.omega(1).powi(2)), 0.0)?;
    let pi2 = poisson_tensor_two_param(freqs, 0.0, 1.0)?;
    let cert = verify_generates_dynamics(&combos.c1, &pi1, &field)?
        .max(verify_generates_dynamics(&combos.c2, &pi2, &field)?);
    results.push(CheckResult::residual("bi_hamiltonian_certificate", cert, tol));

    if simple {
        let h1 = build_integral(freqs, 0)?;
        let h2 = build_integral(freqs, 1)?;
        let sum_gap = combos.h_c.sub(&h1.add(&h2)).max_abs();
        let diff_gap = combos.h_pu.sub(&h1.sub(&h2)).max_abs();
        results.push(CheckResult::residual(
            "canonical_sum_difference",
            sum_gap.max(diff_gap),
            tol * combos.h_c.max_abs().max(1.0),
        ));

        // No constant tensor of the family pairs with a single mode energy.
        let mut floor = f64::INFINITY;
        for _ in 0..25 {
            let f: f64 = rng.random_range(-10.0..10.0);
            let g: f64 = rng.random_range(-10.0..10.0);
            let pt = poisson_tensor_two_param(freqs, f, g)?;
            floor = floor.min(verify_generates_dynamics(&h1, &pt, &field)?);
        }
        let positive = floor > 1e-3;
        results.push(CheckResult {
            name: "single_integral_obstruction".into(),
            status: if positive {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            },
            residual: Some(floor),
            threshold: None,
            detail: Some("closest constant-family residual; expected bounded away from zero".into()),
        });

        let basis = build_mode_basis(freqs);
        let (fv, gv) = fix_normalizing_parameters(freqs, qc)?;
        let pt = poisson_tensor_two_param(freqs, fv, gv)?;
        let sol = solve_mode_commutators(&basis, &pt, qc, f64::INFINITY)?;
        results.push(CheckResult::residual(
            "unit_normalization",
            sol.comms.deviation_from_unit(),
            tol,
        ));

        let (w1, w2) = (freqs.omega(0), freqs.omega(1));
        let spread = w2 * w2 - w1 * w1;
        let mut oracle_gap: f64 = 0.0;
        for _ in 0..50 {
            let f: f64 = rng.random_range(-10.0..10.0);
            let g: f64 = rng.random_range(-10.0..10.0);
            let pt = poisson_tensor_two_param(freqs, f, g)?;
            let sol = solve_mode_commutators(&basis, &pt, qc, f64::INFINITY)?;
            let expected_c11 = qc.hbar() * (w2 * w2 * f + g) / (2.0 * w1 * spread);
            let expected_c22 = -qc.hbar() * (w1 * w1 * f + g) / (2.0 * w2 * spread);
            oracle_gap = oracle_gap
                .max((sol.comms.c()[(0, 0)].re - expected_c11).abs())
                .max((sol.comms.c()[(1, 1)].re - expected_c22).abs())
                .max(sol.comms.c()[(0, 1)].norm());
        }
        results.push(CheckResult::residual(
            "commutator_direct_substitution",
            oracle_gap,
            tol,
        ));

        // Conserved quadratics stay diagonal in the mode operators.
        let unit = ModeCommutators::unit(2);
        let mut diag_worst: f64 = 0.0;
        for obs in [&h1, &h2, &combos.c1, &combos.c2] {
            let nf = normal_form(obs, &basis, &unit)?;
            diag_worst = diag_worst.max(nf.max_offdiag()).max(nf.max_squeeze());
        }
        results.push(CheckResult::residual(
            "conserved_quadratic_diagonality",
            diag_worst,
            tol,
        ));
    } else {
        for name in [
            "canonical_sum_difference",
            "single_integral_obstruction",
            "unit_normalization",
            "commutator_direct_substitution",
            "conserved_quadratic_diagonality",
        ] {
            results.push(CheckResult::skipped(name, "requires pairwise distinct frequencies"));
        }
    }
    Ok(())
}

fn run_degenerate_checks(
    freqs: &FrequencySet,
    cfg: &VerifyConfig,
    qc: &QuantumConfig,
    rng: &mut ChaCha8Rng,
    results: &mut Vec<CheckResult>,
) -> Result<()> {
    let tol = cfg.tolerance;
    let omega = freqs.omegas().iter().sum::<f64>() / 2.0;
    let combos = build_named_combinations(freqs)?;
    let field = build_vector_field(freqs);

    let x0 = DVector::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
    let modal = ModalDecomposition::from_initial_state(freqs, &x0)?;
    let exact_traj = modal.sample(0.01, 1000)?;
    let observables = [combos.c1.clone(), combos.c2.clone()];
    let drift_exact = conservation_drift(&exact_traj, &observables)
        .into_iter()
        .fold(0.0, f64::max);
    results.push(CheckResult::residual(
        "secular_combination_drift_exact",
        drift_exact,
        tol,
    ));
    let rk = integrate_rk4(&field, &x0, 1e-3, 5000)?;
    let drift_rk = conservation_drift(&rk, &observables)
        .into_iter()
        .fold(0.0, f64::max);
    results.push(CheckResult::residual(
        "secular_combination_drift_rk4",
        drift_rk,
        tol.max(1e-8),
    ));

    let basis = build_mode_basis(freqs);
    let mut secular_pair: f64 = 0.0;
    for _ in 0..25 {
        let f: f64 = rng.random_range(-5.0..5.0);
        let g: f64 = rng.random_range(-5.0..5.0);
        let pt = poisson_tensor_two_param(freqs, f, g)?;
        let sol = solve_mode_commutators(&basis, &pt, qc, f64::INFINITY)?;
        secular_pair = secular_pair.max(sol.comms.c()[(1, 1)].norm());
    }
    results.push(CheckResult::residual(
        "secular_pair_commutes",
        secular_pair,
        tol,
    ));

    let report = degenerate_analysis(omega, qc, f64::INFINITY)?;
    let mut fix_dev = (report.comms.c()[(0, 0)].re - 1.0).abs();
    fix_dev = fix_dev
        .max(report.comms.c()[(1, 1)].norm())
        .max(report.comms.c()[(0, 1)].norm())
        .max(report.comms.max_pair_commutator());
    results.push(CheckResult::residual(
        "degenerate_normalization",
        fix_dev,
        tol,
    ));

    // Secular normal forms at general frequency: the surviving combinations
    // reduce to 16 w^4 n_2 + 4i w^5 (pair) and -8 w^2 n_2 - 4i w^3 (pair),
    // with no zero point (exponents follow from substituting the secular
    // operator solution; the second number term grows two powers slower
    // than the first because the secular column sits one derivative lower).
    let w = omega;
    let w2 = w.powi(2);
    let w3 = w.powi(3);
    let w4 = w.powi(4);
    let w5 = w.powi(5);
    let scale = 16.0 * w5.max(w4).max(1.0);
    let mut display_gap = (report.cs1.number_coeffs()[1] - 16.0 * w4).abs();
    display_gap = display_gap
        .max((report.cs1.offdiag_number()[(0, 1)] - num_complex::Complex64::new(0.0, 4.0 * w5)).norm())
        .max((report.cs2.number_coeffs()[1] + 8.0 * w2).abs())
        .max((report.cs2.offdiag_number()[(0, 1)] - num_complex::Complex64::new(0.0, -4.0 * w3)).norm())
        .max(report.cs1.max_squeeze())
        .max(report.cs2.max_squeeze());
    results.push(CheckResult::residual(
        "secular_normal_forms",
        display_gap / scale,
        tol,
    ));

    Ok(())
}
