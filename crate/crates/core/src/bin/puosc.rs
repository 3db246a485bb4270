//! Command-line front end: structure construction, the verification suite,
//! trajectory simulation, spectra and the equal-frequency analysis, all with
//! machine-readable JSON output (CSV for trajectories).
//!
//! Exit codes: 0 success, 1 verification/runtime failure, 2 invalid input,
//! 3 degeneracy misuse.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

use puosc::classical::{
    build_integral, build_named_combinations, build_oscillator_variables, build_vector_field,
    closed_form_weight_candidate, hamiltonian_coefficients_two_param, poisson_tensor_general,
    poisson_tensor_two_param, solve_hamiltonian_coefficients, PoissonTensor, QuadraticObservable,
    TensorKind,
};
use puosc::dynamics::{conservation_drift, integrate_rk4, ModalDecomposition, Trajectory};
use puosc::error::Error;
use puosc::quantum::{
    build_mode_basis, degenerate_analysis, normal_form, solve_mode_commutators, spectrum,
    NormalForm, QuantumConfig,
};
use puosc::symfun::FrequencySet;
use puosc::verify::{run_suite, CheckResult, CheckStatus, VerifyConfig};

#[derive(Parser)]
#[command(
    name = "puosc",
    about = "Multi-Hamiltonian structure toolkit for even-order linear oscillators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the companion field, oscillator variables, integrals, Poisson
    /// tensor and solved Hamiltonian weights as JSON.
    Structure(StructureArgs),
    /// Run the full residual check suite; exit 1 when any check fails.
    Verify(VerifyArgs),
    /// Integrate the companion system and report conservation drift.
    Simulate(SimulateArgs),
    /// Anisotropic-oscillator energies for occupation tuples.
    Spectrum(SpectrumArgs),
    /// Equal-frequency fourth-order analysis.
    Degenerate(DegenerateArgs),
}

#[derive(Args)]
struct StructureArgs {
    /// Comma-separated positive frequencies, e.g. 1,2
    #[arg(long)]
    freqs: String,
    /// First tensor parameter; together with --g selects the two-parameter
    /// tensor instead of the power-sum one (fourth order only).
    #[arg(long)]
    f: Option<f64>,
    /// Second tensor parameter.
    #[arg(long)]
    g: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    freqs: String,
    /// Seed for the randomized sweeps (PU_SEED is the fallback).
    #[arg(long, env = "PU_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    freqs: String,
    /// Comma-separated initial phase vector of length 2n.
    #[arg(long)]
    x0: String,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    #[arg(long, default_value_t = 1000)]
    steps: usize,
    #[arg(long, value_enum, default_value_t = Integrator::Rk4)]
    integrator: Integrator,
    /// CSV destination; with it the drift summary goes to standard output,
    /// without it the CSV does and the summary moves to standard error.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpectrumArgs {
    #[arg(long)]
    freqs: String,
    /// Occupation tuple such as 0,0; repeat the flag for several levels.
    #[arg(long, required = true)]
    levels: Vec<String>,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DegenerateArgs {
    /// The doubled frequency.
    #[arg(long)]
    omega: f64,
    #[arg(long, default_value_t = 1.0)]
    hbar: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Integrator {
    Rk4,
    Exact,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Structure(args) => cmd_structure(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Spectrum(args) => cmd_spectrum(&args),
        Command::Degenerate(args) => cmd_degenerate(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code_for(&err)
        }
    }
}

/// 2 for malformed input, 3 for degeneracy misuse, 1 for runtime or
/// verification failures.
fn exit_code_for(err: &Error) -> ExitCode {
    match err {
        Error::EmptyFrequencySet
        | Error::NonPositiveFrequency { .. }
        | Error::DegreeOutOfRange { .. }
        | Error::IndexOutOfRange { .. }
        | Error::UnsupportedOrder { .. }
        | Error::DimensionMismatch { .. }
        | Error::InvalidInput(_) => ExitCode::from(2),
        Error::DegenerateFrequencies { .. } | Error::DegenerateSpectrum => ExitCode::from(3),
        _ => ExitCode::from(1),
    }
}

fn parse_number_list(text: &str, what: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidInput(format!("cannot parse {what} entry {part:?}")))
        })
        .collect()
}

fn parse_freqs(text: &str) -> Result<FrequencySet, Error> {
    FrequencySet::new(parse_number_list(text, "frequency")?)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

fn complex_matrix_rows(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

fn emit<T: Serialize>(report: &T, out: Option<&PathBuf>) -> Result<(), Error> {
    let body =
        serde_json::to_string_pretty(report).map_err(|e| Error::InvalidInput(e.to_string()))?;
    write_text(&body, out)
}

fn write_text(body: &str, out: Option<&PathBuf>) -> Result<(), Error> {
    match out {
        Some(path) => std::fs::write(path, format!("{body}\n"))
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{body}").map_err(|e| Error::InvalidInput(e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct StructureReport {
    frequencies: Vec<f64>,
    phase_dim: usize,
    vector_field: Vec<Vec<f64>>,
    oscillator_variables: OscillatorVariables,
    integrals: Vec<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    combinations: Option<Combinations>,
    poisson_tensor: TensorReport,
    weights: WeightReport,
}

#[derive(Serialize)]
struct OscillatorVariables {
    q: Vec<Vec<f64>>,
    p: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct Combinations {
    h_c: Vec<Vec<f64>>,
    h_pu: Vec<Vec<f64>>,
    c1: Vec<Vec<f64>>,
    c2: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct TensorReport {
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    f: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    g: Option<f64>,
    rank: usize,
    matrix: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct WeightReport {
    solved: Vec<f64>,
    residual: f64,
    /// The closed-form candidate 1/(w_i prod_{j!=i}(w_i^2 - w_j^2)); kept as
    /// a diagnostic because it does not reproduce the solved weights.
    closed_form_candidate: Vec<f64>,
    closed_form_matches: bool,
    closed_form_max_gap: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    two_param_pair: Option<(f64, f64)>,
}

fn tensor_report(pt: &PoissonTensor) -> TensorReport {
    let (kind, f, g) = match pt.kind() {
        TensorKind::TwoParameter { f, g } => ("two_parameter".to_string(), Some(f), Some(g)),
        TensorKind::PowerSum => ("power_sum".to_string(), None, None),
        TensorKind::Custom => ("custom".to_string(), None, None),
    };
    TensorReport {
        kind,
        f,
        g,
        rank: pt.rank(),
        matrix: matrix_rows(pt.matrix()),
    }
}

fn cmd_structure(args: &StructureArgs) -> Result<ExitCode, Error> {
    let freqs = parse_freqs(&args.freqs)?;
    let n = freqs.len();

    let tensor = match (args.f, args.g) {
        (Some(f), Some(g)) => poisson_tensor_two_param(&freqs, f, g)?,
        (None, None) => poisson_tensor_general(&freqs),
        _ => {
            return Err(Error::InvalidInput(
                "--f and --g must be given together".into(),
            ))
        }
    };

    let field = build_vector_field(&freqs);
    let forms = build_oscillator_variables(&freqs)?;
    let integrals: Vec<QuadraticObservable> = (0..n)
        .map(|i| build_integral(&freqs, i))
        .collect::<Result<_, _>>()?;

    let combinations = if n == 2 {
        let combos = build_named_combinations(&freqs)?;
        Some(Combinations {
            h_c: matrix_rows(combos.h_c.matrix()),
            h_pu: matrix_rows(combos.h_pu.matrix()),
            c1: matrix_rows(combos.c1.matrix()),
            c2: matrix_rows(combos.c2.matrix()),
        })
    } else {
        None
    };

    let solution = solve_hamiltonian_coefficients(&freqs, &tensor)?;
    let candidate = closed_form_weight_candidate(&freqs)?;
    let max_gap = solution
        .coeffs
        .iter()
        .zip(&candidate)
        .map(|(s, c)| (s - c).abs())
        .fold(0.0, f64::max);
    let two_param_pair = match tensor.kind() {
        TensorKind::TwoParameter { f, g } => hamiltonian_coefficients_two_param(&freqs, f, g).ok(),
        _ => None,
    };

    let report = StructureReport {
        frequencies: freqs.omegas().to_vec(),
        phase_dim: freqs.phase_dim(),
        vector_field: matrix_rows(field.matrix()),
        oscillator_variables: OscillatorVariables {
            q: matrix_rows(forms.q_rows()),
            p: matrix_rows(forms.p_rows()),
        },
        integrals: integrals.iter().map(|h| matrix_rows(h.matrix())).collect(),
        combinations,
        poisson_tensor: tensor_report(&tensor),
        weights: WeightReport {
            solved: solution.coeffs.clone(),
            residual: solution.residual,
            closed_form_candidate: candidate,
            closed_form_matches: max_gap <= args.tol,
            closed_form_max_gap: max_gap,
            two_param_pair,
        },
    };
    emit(&report, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct VerifyReport {
    frequencies: Vec<f64>,
    seed: u64,
    tolerance: f64,
    hbar: f64,
    passed: usize,
    failed: usize,
    skipped: usize,
    checks: Vec<CheckResult>,
}

fn cmd_verify(args: &VerifyArgs) -> Result<ExitCode, Error> {
    let freqs = parse_freqs(&args.freqs)?;
    let cfg = VerifyConfig {
        seed: args.seed,
        tolerance: args.tol,
        hbar: args.hbar,
    };
    let checks = run_suite(&freqs, &cfg)?;
    let count = |status: CheckStatus| checks.iter().filter(|c| c.status == status).count();
    let report = VerifyReport {
        frequencies: freqs.omegas().to_vec(),
        seed: cfg.seed,
        tolerance: cfg.tolerance,
        hbar: cfg.hbar,
        passed: count(CheckStatus::Pass),
        failed: count(CheckStatus::Fail),
        skipped: count(CheckStatus::Skipped),
        checks,
    };
    emit(&report, args.out.as_ref())?;
    Ok(if report.failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[derive(Serialize)]
struct SimulateReport {
    frequencies: Vec<f64>,
    integrator: String,
    dt: f64,
    steps: usize,
    integrals: Vec<DriftEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv_path: Option<String>,
}

#[derive(Serialize)]
struct DriftEntry {
    name: String,
    initial: f64,
    drift: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<ExitCode, Error> {
    let freqs = parse_freqs(&args.freqs)?;
    let x0 = DVector::from_vec(parse_number_list(&args.x0, "state")?);
    if x0.len() != freqs.phase_dim() {
        return Err(Error::DimensionMismatch {
            left: x0.len(),
            right: freqs.phase_dim(),
        });
    }

    let trajectory = match args.integrator {
        Integrator::Rk4 => {
            let field = build_vector_field(&freqs);
            integrate_rk4(&field, &x0, args.dt, args.steps)?
        }
        Integrator::Exact => {
            ModalDecomposition::from_initial_state(&freqs, &x0)?.sample(args.dt, args.steps)?
        }
    };

    let observables = conserved_observables(&freqs)?;
    let drifts = conservation_drift(
        &trajectory,
        &observables
            .iter()
            .map(|(_, o)| o.clone())
            .collect::<Vec<_>>(),
    );
    let integrals = observables
        .iter()
        .zip(&drifts)
        .map(|((name, obs), &drift)| DriftEntry {
            name: name.clone(),
            initial: obs.value(&x0),
            drift,
        })
        .collect();

    let report = SimulateReport {
        frequencies: freqs.omegas().to_vec(),
        integrator: match args.integrator {
            Integrator::Rk4 => "rk4".into(),
            Integrator::Exact => "exact".into(),
        },
        dt: args.dt,
        steps: args.steps,
        integrals,
        csv_path: args.out.as_ref().map(|p| p.display().to_string()),
    };

    let csv = csv_body(&trajectory);
    let summary = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, &csv).map_err(|e| {
                Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
            })?;
            write_text(&summary, None)?;
        }
        None => {
            write_text(csv.trim_end(), None)?;
            eprintln!("{summary}");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn csv_body(traj: &Trajectory) -> String {
    traj.to_csv()
}

/// The conserved quadratics worth reporting for a frequency set: per-mode
/// energies for a simple spectrum plus the fourth-order combinations, the
/// surviving combinations alone when the pair degenerates.
fn conserved_observables(
    freqs: &FrequencySet,
) -> Result<Vec<(String, QuadraticObservable)>, Error> {
    let mut out = Vec::new();
    if freqs.is_simple() {
        for i in 0..freqs.len() {
            out.push((format!("H{}", i + 1), build_integral(freqs, i)?));
        }
    }
    if freqs.len() == 2 {
        let combos = build_named_combinations(freqs)?;
        out.push(("C1".to_string(), combos.c1));
        out.push(("C2".to_string(), combos.c2));
    }
    Ok(out)
}

#[derive(Serialize)]
struct SpectrumReport {
    frequencies: Vec<f64>,
    hbar: f64,
    levels: Vec<LevelEntry>,
    cross_check: CrossCheck,
}

#[derive(Serialize)]
struct LevelEntry {
    occupations: Vec<u64>,
    energy: f64,
}

#[derive(Serialize)]
struct CrossCheck {
    /// Max gap between the direct energies and the normal form of the solved
    /// Hamiltonian under the power-sum tensor's commutator table.
    max_deviation: f64,
    consistent: bool,
    /// Solved pair scale `[a_i, a_i^+]` under the hbar-free power-sum tensor
    /// (proportional to hbar) next to the unit-normalized convention; both
    /// are reported, neither is rescaled silently.
    power_sum_commutator_diag: Vec<f64>,
    unit_normalized_diag: Vec<f64>,
    solved_weights: Vec<f64>,
    weight_residual: f64,
}

fn cmd_spectrum(args: &SpectrumArgs) -> Result<ExitCode, Error> {
    let freqs = parse_freqs(&args.freqs)?;
    let qc = QuantumConfig::new(args.hbar)?;
    if !freqs.is_simple() {
        eprintln!("hint: repeated frequencies have no simple spectrum; run `puosc degenerate`");
        return Err(Error::DegenerateSpectrum);
    }

    let mut levels = Vec::new();
    for text in &args.levels {
        let occupations: Vec<u64> = text
            .split(',')
            .map(|part| {
                part.trim().parse::<u64>().map_err(|_| {
                    Error::InvalidInput(format!("cannot parse occupation entry {part:?}"))
                })
            })
            .collect::<Result<_, _>>()?;
        let energy = spectrum(&freqs, &occupations, &qc)?;
        levels.push(LevelEntry {
            occupations,
            energy,
        });
    }

    let cross_check = spectrum_cross_check(&freqs, &qc, &levels, args.tol)?;
    let report = SpectrumReport {
        frequencies: freqs.omegas().to_vec(),
        hbar: args.hbar,
        levels,
        cross_check,
    };
    emit(&report, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}

fn spectrum_cross_check(
    freqs: &FrequencySet,
    qc: &QuantumConfig,
    levels: &[LevelEntry],
    tol: f64,
) -> Result<CrossCheck, Error> {
    let n = freqs.len();
    let tensor = poisson_tensor_general(freqs);
    let weights = solve_hamiltonian_coefficients(freqs, &tensor)?;
    let mut hamiltonian = QuadraticObservable::zeros(freqs.phase_dim());
    for (i, &w) in weights.coeffs.iter().enumerate() {
        hamiltonian = hamiltonian.add(&build_integral(freqs, i)?.scaled(w));
    }
    let basis = build_mode_basis(freqs);
    let sol = solve_mode_commutators(&basis, &tensor, qc, f64::INFINITY)?;
    let nf: NormalForm = normal_form(&hamiltonian, &basis, &sol.comms)?;

    let mut max_deviation: f64 = 0.0;
    for level in levels {
        let from_form = nf.eigenvalue(&level.occupations, &sol.comms)?;
        max_deviation = max_deviation.max((from_form - level.energy).abs());
    }

    let unit_diag = fix_unit_commutators(freqs, qc)?;
    Ok(CrossCheck {
        max_deviation,
        consistent: max_deviation <= tol,
        power_sum_commutator_diag: (0..n).map(|i| sol.comms.c()[(i, i)].re).collect(),
        unit_normalized_diag: unit_diag,
        solved_weights: weights.coeffs,
        weight_residual: weights.residual,
    })
}

/// Diagonal commutators after explicit unit normalization. Fourth order has
/// the closed-form parameter fixing; other orders scale the power-sum table
/// by 1/hbar, which is exactly what the unit convention demands there.
fn fix_unit_commutators(freqs: &FrequencySet, qc: &QuantumConfig) -> Result<Vec<f64>, Error> {
    let n = freqs.len();
    let basis = build_mode_basis(freqs);
    let pt = if n == 2 {
        let (f, g) = puosc::quantum::fix_normalizing_parameters(freqs, qc)?;
        poisson_tensor_two_param(freqs, f, g)?
    } else {
        let tensor = poisson_tensor_general(freqs);
        PoissonTensor::from_matrix(tensor.matrix() / qc.hbar())
    };
    let sol = solve_mode_commutators(&basis, &pt, qc, f64::INFINITY)?;
    Ok((0..n).map(|i| sol.comms.c()[(i, i)].re).collect())
}

#[derive(Serialize)]
struct DegenerateCliReport {
    omega: f64,
    hbar: f64,
    f: f64,
    g: f64,
    commutators: CommutatorTable,
    normal_forms: SecularForms,
    /// One-based indices of the modes whose pair commutator vanishes; their
    /// amplitudes stay classical.
    classical_modes: Vec<usize>,
}

#[derive(Serialize)]
struct CommutatorTable {
    /// `[a_i, a_j^+]` as [re, im] entries.
    c: Vec<Vec<[f64; 2]>>,
    /// `[a_i, a_j]` as [re, im] entries.
    d: Vec<Vec<[f64; 2]>>,
    residual: f64,
}

#[derive(Serialize)]
struct SecularForms {
    c_s1: SecularFormEntry,
    c_s2: SecularFormEntry,
}

#[derive(Serialize)]
struct SecularFormEntry {
    number_coeffs: Vec<f64>,
    /// Coefficient of the antisymmetric pair term `a_1^+ a_2 - a_2^+ a_1`
    /// as [re, im].
    pair_coeff: [f64; 2],
    zero_point: f64,
    max_squeeze: f64,
}

fn secular_entry(nf: &NormalForm) -> SecularFormEntry {
    let pair = nf.offdiag_number()[(0, 1)];
    SecularFormEntry {
        number_coeffs: nf.number_coeffs().to_vec(),
        pair_coeff: [pair.re, pair.im],
        zero_point: nf.zero_point(),
        max_squeeze: nf.max_squeeze(),
    }
}

fn cmd_degenerate(args: &DegenerateArgs) -> Result<ExitCode, Error> {
    let qc = QuantumConfig::new(args.hbar)?;
    let report = degenerate_analysis(args.omega, &qc, args.tol)?;
    let cli_report = DegenerateCliReport {
        omega: report.omega,
        hbar: report.hbar,
        f: report.f,
        g: report.g,
        commutators: CommutatorTable {
            c: complex_matrix_rows(report.comms.c()),
            d: complex_matrix_rows(report.comms.d()),
            residual: report.commutator_residual,
        },
        normal_forms: SecularForms {
            c_s1: secular_entry(&report.cs1),
            c_s2: secular_entry(&report.cs2),
        },
        classical_modes: report.classical_modes.iter().map(|i| i + 1).collect(),
    };
    emit(&cli_report, args.out.as_ref())?;
    Ok(ExitCode::SUCCESS)
}
