//! Batch front end for the dissynth library.
//!
//! Five subcommands: `gen` simulates a noisy experiment, `synth` runs
//! controller synthesis, `verify` re-checks a stored result against freshly
//! sampled consistent systems, `analyze` decides dissipativity of a known
//! model, and `slemma` answers a standalone containment query. All I/O is
//! JSON (row-major matrices, the `dims` block authoritative over array
//! shapes) plus a human-readable summary on stderr.
//!
//! Exit codes: 0 feasible/success, 2 infeasible, 3 hypothesis failure,
//! 4 solver undecided, 1 I/O or validation error. The `DISSYNTH_SOLVER`
//! environment variable selects the backend (`clarabel`, default, or
//! `clarabel-hiprec`).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use dissynth::datamodel::{ExperimentData, InputSignal, NoiseModel, PlantModel};
use dissynth::dissipativity::SupplyRate;
use dissynth::matcore::SymMatrix;
use dissynth::par::Exec;
use dissynth::qmi::{slemma, PartitionedForm, SlemmaOptions, SlemmaOutcome};
use dissynth::sdpsolve::{backend_from_env, SolveStatus};
use dissynth::synthesis::{
    check_hypotheses, synthesize, verify_closed_loop, Branch, OutputKnowledge, SupplySpec,
    SynthesisOutcome, SynthesisProblem, SynthesisResult,
};
use dissynth::Error;

const EXIT_OK: u8 = 0;
const EXIT_IO: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_HYPOTHESIS: u8 = 3;
const EXIT_UNDECIDED: u8 = 4;

#[derive(Parser)]
#[command(name = "dissynth", about = "Data-driven dissipative controller synthesis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a noisy experiment from a generator config.
    Gen {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Overrides the seed in the config file.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Synthesize a controller from a problem file.
    Synth {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Verification sample count.
        #[arg(long, default_value_t = 100)]
        samples: usize,
        /// Overrides the seed in the problem file.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the `mode` field of the problem file.
        #[arg(long, value_parser = ["known", "unknown"])]
        mode: Option<String>,
    },
    /// Re-verify a stored result with a fresh seed.
    Verify {
        #[arg(long)]
        input: PathBuf,
        /// Result file produced by `synth`.
        #[arg(long)]
        result: PathBuf,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Decide dissipativity of a fully known model.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Standalone containment query Z(N) ⊆ Z(M).
    Slemma {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// PSD tolerance for the certificate.
        #[arg(long)]
        tol: Option<f64>,
    },
}

// ---------------------------------------------------------------------------
// JSON schema types
// ---------------------------------------------------------------------------

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Dims {
    n: usize,
    m: usize,
    p: usize,
    d: usize,
    #[serde(rename = "T")]
    t: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
enum SupplyFile {
    Passive,
    #[serde(rename = "l2gain")]
    L2Gain { gamma: f64 },
    StateStrictPassive {
        #[serde(rename = "epsMin")]
        eps_min: f64,
    },
    Custom {
        #[serde(rename = "S")]
        s: Rows,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
enum NoiseFile {
    NormBound { radius: f64 },
    EnergyBound { total: f64 },
    Custom {
        #[serde(rename = "Phi")]
        phi: Rows,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ProblemFile {
    dims: Dims,
    mode: String,
    #[serde(rename = "E")]
    e: Rows,
    #[serde(rename = "F")]
    f: Rows,
    #[serde(rename = "C_s", default, skip_serializing_if = "Option::is_none")]
    c_s: Option<Rows>,
    #[serde(rename = "D_s", default, skip_serializing_if = "Option::is_none")]
    d_s: Option<Rows>,
    #[serde(rename = "U_minus")]
    u_minus: Rows,
    #[serde(rename = "X")]
    x: Rows,
    #[serde(rename = "Y_minus", default, skip_serializing_if = "Option::is_none")]
    y_minus: Option<Rows>,
    supply: SupplyFile,
    noise: NoiseFile,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VerificationOut {
    samples: usize,
    #[serde(rename = "minEig")]
    min_eig: f64,
    pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DiagnosticsOut {
    rank: bool,
    #[serde(rename = "positiveEigenvalue")]
    positive_eigenvalue: bool,
    #[serde(rename = "piClass")]
    pi_class: bool,
    #[serde(rename = "interiorSufficient")]
    interior_sufficient: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ResultFile {
    status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    branch: Option<String>,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<Rows>,
    #[serde(rename = "P", default, skip_serializing_if = "Option::is_none")]
    p: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
    #[serde(rename = "feasibilityMargin", default, skip_serializing_if = "Option::is_none")]
    feasibility_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verification: Option<VerificationOut>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    diagnostics: Option<DiagnosticsOut>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GenPlant {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
    #[serde(rename = "E")]
    e: Rows,
    #[serde(rename = "F")]
    f: Rows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
enum SignalFile {
    /// i.i.d. standard normal entries times `scale`.
    Gaussian { scale: f64 },
    /// i.i.d. uniform entries on (0, 1) times `scale`.
    Uniform { scale: f64 },
    Zero,
    Explicit { values: Rows },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GenConfig {
    dims: Dims,
    plant: GenPlant,
    input: SignalFile,
    noise: SignalFile,
    #[serde(rename = "noiseModel")]
    noise_model: NoiseFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Rows>,
    #[serde(default)]
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DataFile {
    dims: Dims,
    #[serde(rename = "U_minus")]
    u_minus: Rows,
    #[serde(rename = "X")]
    x: Rows,
    #[serde(rename = "Y_minus", default, skip_serializing_if = "Option::is_none")]
    y_minus: Option<Rows>,
    #[serde(rename = "W_minus")]
    w_minus: Rows,
    seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct AnalyzeFile {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D")]
    d: Rows,
    supply: SupplyFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SlemmaFile {
    #[serde(rename = "M")]
    m: Rows,
    #[serde(rename = "N")]
    n: Rows,
    #[serde(rename = "splitQ")]
    split_q: usize,
    #[serde(rename = "splitR")]
    split_r: usize,
}

// ---------------------------------------------------------------------------
// Matrix helpers
// ---------------------------------------------------------------------------

fn to_matrix(field: &str, rows: &Rows, nrows: usize, ncols: usize) -> Result<DMatrix<f64>, Error> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidInput(format!(
            "field '{field}' must be a {nrows}x{ncols} row-major matrix"
        )));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn from_matrix(m: &DMatrix<f64>) -> Rows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// File -> library conversions
// ---------------------------------------------------------------------------

fn noise_from_file(file: &NoiseFile, d: usize, t: usize) -> Result<NoiseModel, Error> {
    match file {
        NoiseFile::NormBound { radius } => NoiseModel::norm_bound(*radius, d, t),
        NoiseFile::EnergyBound { total } => NoiseModel::energy_bound(*total, d, t),
        NoiseFile::Custom { phi } => {
            let dim = d + t;
            let m = to_matrix("noise.Phi", phi, dim, dim)?;
            NoiseModel::new(PartitionedForm::new(SymMatrix::new(m)?, d, t)?)
        }
    }
}

fn supply_from_file(file: &SupplyFile, d: usize, p: usize) -> Result<SupplySpec, Error> {
    match file {
        SupplyFile::Passive => {
            if p != d {
                return Err(Error::InvalidInput(format!(
                    "field 'supply': passive supply needs p = d, got p={p}, d={d}"
                )));
            }
            Ok(SupplySpec::Fixed(SupplyRate::passive(d)))
        }
        SupplyFile::L2Gain { gamma } => {
            if !(*gamma > 0.0) {
                return Err(Error::InvalidInput(
                    "field 'supply.gamma' must be positive".into(),
                ));
            }
            Ok(SupplySpec::Fixed(SupplyRate::l2_gain(*gamma, d, p)))
        }
        SupplyFile::StateStrictPassive { eps_min } => {
            Ok(SupplySpec::StateStrictPassive { eps_min: *eps_min })
        }
        SupplyFile::Custom { s } => {
            let dim = d + p;
            let m = to_matrix("supply.S", s, dim, dim)?;
            Ok(SupplySpec::Fixed(SupplyRate::new(SymMatrix::new(m)?, d, p)?))
        }
    }
}

fn problem_from_file(file: &ProblemFile, mode_override: Option<&str>) -> Result<(SynthesisProblem, String), Error> {
    let Dims { n, m, p, d, t } = file.dims;
    let mode = mode_override.unwrap_or(&file.mode).to_string();
    let e = to_matrix("E", &file.e, n, d)?;
    let f = to_matrix("F", &file.f, p, d)?;
    let u_minus = to_matrix("U_minus", &file.u_minus, m, t)?;
    let x = to_matrix("X", &file.x, n, t + 1)?;
    let y_minus = match &file.y_minus {
        Some(rows) => Some(to_matrix("Y_minus", rows, p, t)?),
        None => None,
    };
    let outputs = match mode.as_str() {
        "known" => {
            let c_s = file
                .c_s
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("field 'C_s' is required in known mode".into()))?;
            let d_s = file
                .d_s
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("field 'D_s' is required in known mode".into()))?;
            OutputKnowledge::Known {
                c_s: to_matrix("C_s", c_s, p, n)?,
                d_s: to_matrix("D_s", d_s, p, m)?,
            }
        }
        "unknown" => {
            if y_minus.is_none() {
                return Err(Error::InvalidInput(
                    "field 'Y_minus' is required in unknown mode".into(),
                ));
            }
            OutputKnowledge::Unknown
        }
        other => {
            return Err(Error::InvalidInput(format!(
                "field 'mode' must be 'known' or 'unknown', got '{other}'"
            )))
        }
    };
    let data = ExperimentData::new(u_minus, x, y_minus)?;
    let noise = noise_from_file(&file.noise, d, t)?;
    let supply = supply_from_file(&file.supply, d, p)?;
    let prob = SynthesisProblem::new(data, noise, e, f, supply, outputs)?;
    Ok((prob, mode))
}

fn branch_name(branch: Branch) -> &'static str {
    match branch {
        Branch::UnknownOutput => "unknownOutput",
        Branch::KnownOutputStrict => "knownOutputStrict",
        Branch::KnownOutputDegenerate => "knownOutputDegenerate",
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn read_json<T: for<'a> Deserialize<'a>>(path: &PathBuf) -> Result<T, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("cannot parse {}: {e}", path.display()))
}

fn write_json<T: Serialize>(value: &T, output: Option<&PathBuf>) -> Result<(), String> {
    let text = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    match output {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn draw_signal(
    sig: &SignalFile,
    field: &str,
    rows: usize,
    cols: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<DMatrix<f64>, Error> {
    use rand_distr::{Distribution, StandardNormal, Uniform};
    Ok(match sig {
        SignalFile::Gaussian { scale } => {
            DMatrix::from_fn(rows, cols, |_, _| {
                let v: f64 = StandardNormal.sample(rng);
                v * scale
            })
        }
        SignalFile::Uniform { scale } => {
            let u = Uniform::new(0.0, 1.0).unwrap();
            DMatrix::from_fn(rows, cols, |_, _| u.sample(rng) * scale)
        }
        SignalFile::Zero => DMatrix::zeros(rows, cols),
        SignalFile::Explicit { values } => to_matrix(field, values, rows, cols)?,
    })
}

fn cmd_gen(input: &PathBuf, output: Option<&PathBuf>, seed: Option<u64>) -> u8 {
    let cfg: GenConfig = match read_json(input) {
        Ok(v) => v,
        Err(e) => return fail_io(&e),
    };
    match run_gen(&cfg, seed, output) {
        Ok(()) => EXIT_OK,
        Err(e) => fail_error(&e),
    }
}

fn run_gen(cfg: &GenConfig, seed: Option<u64>, output: Option<&PathBuf>) -> Result<(), Error> {
    use rand::SeedableRng;
    let Dims { n, m, p, d, t } = cfg.dims;
    let plant = PlantModel::new(
        to_matrix("plant.A", &cfg.plant.a, n, n)?,
        to_matrix("plant.B", &cfg.plant.b, n, m)?,
        to_matrix("plant.C", &cfg.plant.c, p, n)?,
        to_matrix("plant.D", &cfg.plant.d, p, m)?,
        to_matrix("plant.E", &cfg.plant.e, n, d)?,
        to_matrix("plant.F", &cfg.plant.f, p, d)?,
    )?;
    let seed = seed.unwrap_or(cfg.seed);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let x0 = match &cfg.x0 {
        Some(rows) => to_matrix("x0", rows, n, 1)?,
        None => draw_signal(&SignalFile::Gaussian { scale: 1.0 }, "x0", n, 1, &mut rng)?,
    };
    let u = draw_signal(&cfg.input, "input.values", m, t, &mut rng)?;
    let w = draw_signal(&cfg.noise, "noise.values", d, t, &mut rng)?;
    let noise = noise_from_file(&cfg.noise_model, d, t)?;
    if !noise.admits(&w, 1e-9)? {
        return Err(Error::InvalidInput(
            "drawn noise violates the declared noise model".into(),
        ));
    }
    let data = dissynth::datamodel::simulate(&plant, InputSignal::Sequence(&u), &x0, &w)?;
    let out = DataFile {
        dims: cfg.dims.clone(),
        u_minus: from_matrix(data.u_minus()),
        x: from_matrix(data.state_record()),
        y_minus: data.y_minus().map(from_matrix),
        w_minus: from_matrix(&w),
        seed,
    };
    write_json(&out, output).map_err(Error::InvalidInput)
}

fn cmd_synth(
    input: &PathBuf,
    output: Option<&PathBuf>,
    samples: usize,
    seed: Option<u64>,
    mode: Option<&str>,
) -> u8 {
    let file: ProblemFile = match read_json(input) {
        Ok(v) => v,
        Err(e) => return fail_io(&e),
    };
    let (prob, _) = match problem_from_file(&file, mode) {
        Ok(v) => v,
        Err(e) => return fail_error(&e),
    };
    let backend = match backend_from_env() {
        Ok(b) => b,
        Err(e) => return fail_error(&e),
    };
    let diagnostics = match check_hypotheses(&prob) {
        Ok(rep) => DiagnosticsOut {
            rank: rep.rank_ok,
            positive_eigenvalue: rep.positive_eigenvalue_ok,
            pi_class: rep.pi_class_ok,
            interior_sufficient: rep.interior_sufficient,
            message: None,
        },
        Err(e) => return fail_error(&e),
    };
    let seed = seed.unwrap_or(file.seed);
    let outcome = synthesize(&prob, backend.as_ref());
    let (result_file, code) = match outcome {
        Ok(SynthesisOutcome::Feasible(result)) => {
            let verification = match verify_closed_loop(&result, &prob, samples, seed, Exec::Auto) {
                Ok(rep) => Some(VerificationOut {
                    samples: rep.samples,
                    min_eig: rep.min_eig,
                    pass: rep.pass,
                }),
                Err(e) => {
                    eprintln!("verification skipped: {e}");
                    None
                }
            };
            print_summary(&result, verification.as_ref(), &diagnostics);
            (result_to_file(&result, verification, diagnostics), EXIT_OK)
        }
        Ok(SynthesisOutcome::Infeasible { dual_certificate }) => {
            eprintln!("status: infeasible (dual certificate: {dual_certificate})");
            print_diagnostics(&diagnostics);
            (
                ResultFile {
                    status: "infeasible".into(),
                    branch: None,
                    k: None,
                    p: None,
                    alpha: None,
                    epsilon: None,
                    feasibility_margin: None,
                    verification: None,
                    diagnostics: Some(DiagnosticsOut {
                        message: Some(format!("dual certificate: {dual_certificate}")),
                        ..diagnostics
                    }),
                },
                EXIT_INFEASIBLE,
            )
        }
        Err(e) => {
            let code = error_exit(&e);
            let status = match code {
                EXIT_HYPOTHESIS => "hypothesisFailure",
                EXIT_UNDECIDED => "undecided",
                _ => "error",
            };
            eprintln!("status: {status}: {e}");
            print_diagnostics(&diagnostics);
            (
                ResultFile {
                    status: status.into(),
                    branch: None,
                    k: None,
                    p: None,
                    alpha: None,
                    epsilon: None,
                    feasibility_margin: None,
                    verification: None,
                    diagnostics: Some(DiagnosticsOut {
                        message: Some(e.to_string()),
                        ..diagnostics
                    }),
                },
                code,
            )
        }
    };
    if let Err(e) = write_json(&result_file, output) {
        return fail_io(&e);
    }
    code
}

fn result_to_file(
    result: &SynthesisResult,
    verification: Option<VerificationOut>,
    diagnostics: DiagnosticsOut,
) -> ResultFile {
    ResultFile {
        status: "feasible".into(),
        branch: Some(branch_name(result.branch).into()),
        k: Some(from_matrix(&result.k)),
        p: Some(from_matrix(result.p.matrix())),
        alpha: Some(result.alpha),
        epsilon: result.epsilon,
        feasibility_margin: Some(result.feasibility_margin),
        verification,
        diagnostics: Some(diagnostics),
    }
}

fn print_summary(
    result: &SynthesisResult,
    verification: Option<&VerificationOut>,
    diagnostics: &DiagnosticsOut,
) {
    eprintln!("status: feasible");
    eprintln!("branch: {}", branch_name(result.branch));
    eprintln!("feasibility margin: {:.6e}", result.feasibility_margin);
    eprintln!("|K|: {:.6e}", result.k.norm());
    eprintln!("lambda_min(P): {:.6e}", result.p.min_eig());
    if let Some(eps) = result.epsilon {
        eprintln!("epsilon: {eps:.6e}");
    }
    match verification {
        Some(v) => eprintln!(
            "verification: {} samples, min eig {:.6e}, pass = {}",
            v.samples, v.min_eig, v.pass
        ),
        None => eprintln!("verification: skipped"),
    }
    print_diagnostics(diagnostics);
}

fn print_diagnostics(d: &DiagnosticsOut) {
    eprintln!(
        "hypotheses: rank = {}, positive eigenvalue = {}, Pi-class = {}, interior sufficient = {}",
        d.rank, d.positive_eigenvalue, d.pi_class, d.interior_sufficient
    );
}

fn cmd_verify(input: &PathBuf, result_path: &PathBuf, samples: usize, seed: Option<u64>) -> u8 {
    let file: ProblemFile = match read_json(input) {
        Ok(v) => v,
        Err(e) => return fail_io(&e),
    };
    let stored: ResultFile = match read_json(result_path) {
        Ok(v) => v,
        Err(e) => return fail_io(&e),
    };
    if stored.status != "feasible" {
        return fail_io("result file does not contain a feasible synthesis");
    }
    let (prob, _) = match problem_from_file(&file, None) {
        Ok(v) => v,
        Err(e) => return fail_error(&e),
    };
    let build = || -> Result<SynthesisResult, Error> {
        let Dims { n, m, .. } = file.dims;
        let k = to_matrix(
            "K",
            stored
                .k
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("result file is missing 'K'".into()))?,
            m,
            n,
        )?;
        let p = SymMatrix::new(to_matrix(
            "P",
            stored
                .p
                .as_ref()
                .ok_or_else(|| Error::InvalidInput("result file is missing 'P'".into()))?,
            n,
            n,
        )?)?;
        let branch = match stored.branch.as_deref() {
            Some("unknownOutput") => Branch::UnknownOutput,
            Some("knownOutputStrict") => Branch::KnownOutputStrict,
            Some("knownOutputDegenerate") => Branch::KnownOutputDegenerate,
            other => {
                return Err(Error::InvalidInput(format!(
                    "result file has unrecognised branch {other:?}"
                )))
            }
        };
        Ok(SynthesisResult {
            k,
            p,
            alpha: stored.alpha.unwrap_or(0.0),
            epsilon: stored.epsilon,
            branch,
            feasibility_margin: stored.feasibility_margin.unwrap_or(0.0),
            degenerate_also_holds: false,
        })
    };
    let result = match build() {
        Ok(r) => r,
        Err(e) => return fail_error(&e),
    };
    // A fresh seed decorrelated from the synthesis-time verification.
    let seed = seed.unwrap_or(file.seed.wrapping_add(0x9e3779b97f4a7c15));
    match verify_closed_loop(&result, &prob, samples, seed, Exec::Auto) {
        Ok(rep) => {
            eprintln!(
                "verification: {} samples, min eig {:.6e}, pass = {}",
                rep.samples, rep.min_eig, rep.pass
            );
            if rep.pass {
                EXIT_OK
            } else {
                EXIT_INFEASIBLE
            }
        }
        Err(e) => fail_error(&e),
    }
}

fn cmd_analyze(input: &PathBuf, output: Option<&PathBuf>) -> u8 {
    let file: AnalyzeFile = match read_json(input) {
        Ok(v) => v,
        Err(e) => return fail_io(&e),
    };
    let run = || -> Result<(dissynth::dissipativity::DissipativityAnalysis, usize), Error> {
        let n = file.a.len();
        let a = to_matrix("A", &file.a, n, n)?;
        let m = file.b.first().map(|r| r.len()).unwrap_or(0);
        let b = to_matrix("B", &file.b, n, m)?;
        let p = file.c.len();
        let c = to_matrix("C", &file.c, p, n)?;
        let d = to_matrix("D", &file.d, p, m)?;
        let supply = match supply_from_file(&file.supply, m, p)? {
            SupplySpec::Fixed(s) => s,
            SupplySpec::StateStrictPassive { .. } => {
                return Err(Error::InvalidInput(
                    "analyze requires a fixed supply rate".into(),
                ))
            }
        };
        let backend = backend_from_env()?;
        let analysis =
            dissynth::dissipativity::analyze_dissipativity(&a, &b, &c, &d, &supply, backend.as_ref())?;
        Ok((analysis, n))
    };
    match run() {
        Ok((analysis, _)) => {
            let status = match analysis.status {
                SolveStatus::Feasible => "feasible",
                SolveStatus::Infeasible => "infeasible",
                SolveStatus::Undecided => "undecided",
            };
            eprintln!("status: {status}");
            if let Some(margin) = analysis.margin {
                eprintln!("margin: {margin:.6e}");
            }
            if let Some(r) = analysis.recheck_margin {
                eprintln!("recheck margin: {r:.6e}");
            }
            #[derive(Serialize)]
            struct AnalyzeOut {
                status: String,
                #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
                p: Option<Rows>,
                #[serde(skip_serializing_if = "Option::is_none")]
                margin: Option<f64>,
                #[serde(rename = "recheckMargin", skip_serializing_if = "Option::is_none")]
                recheck_margin: Option<f64>,
            }
            let out = AnalyzeOut {
                status: status.into(),
                p: analysis.storage.as_ref().map(|s| from_matrix(s.matrix())),
                margin: analysis.margin,
                recheck_margin: analysis.recheck_margin,
            };
            if let Err(e) = write_json(&out, output) {
                return fail_io(&e);
            }
            match analysis.status {
                SolveStatus::Feasible => EXIT_OK,
                SolveStatus::Infeasible => EXIT_INFEASIBLE,
                SolveStatus::Undecided => EXIT_UNDECIDED,
            }
        }
        Err(e) => fail_error(&e),
    }
}

fn cmd_slemma(input: &PathBuf, output: Option<&PathBuf>, tol: Option<f64>) -> u8 {
    let file: SlemmaFile = match read_json(input) {
        Ok(v) => v,
        Err(e) => return fail_io(&e),
    };
    let run = || -> Result<SlemmaOutcome, Error> {
        let dim = file.split_q + file.split_r;
        let m = PartitionedForm::new(
            SymMatrix::new(to_matrix("M", &file.m, dim, dim)?)?,
            file.split_q,
            file.split_r,
        )?;
        let n = PartitionedForm::new(
            SymMatrix::new(to_matrix("N", &file.n, dim, dim)?)?,
            file.split_q,
            file.split_r,
        )?;
        let mut opts = SlemmaOptions::default();
        if let Some(t) = tol {
            opts.psd_tol = t;
        }
        slemma(&m, &n, &opts)
    };
    match run() {
        Ok(outcome) => {
            #[derive(Serialize)]
            struct SlemmaOut {
                status: String,
                #[serde(skip_serializing_if = "Option::is_none")]
                alpha: Option<f64>,
                #[serde(rename = "minEig", skip_serializing_if = "Option::is_none")]
                min_eig: Option<f64>,
            }
            let (out, code) = match &outcome {
                SlemmaOutcome::Feasible(cert) => {
                    eprintln!(
                        "containment holds: alpha = {:.6e}, min eig = {:.6e}",
                        cert.alpha, cert.residual_min_eig
                    );
                    (
                        SlemmaOut {
                            status: "feasible".into(),
                            alpha: Some(cert.alpha),
                            min_eig: Some(cert.residual_min_eig),
                        },
                        EXIT_OK,
                    )
                }
                SlemmaOutcome::Infeasible {
                    best_alpha,
                    best_residual,
                } => {
                    eprintln!(
                        "containment fails for every alpha >= 0 (best alpha {best_alpha:.6e}, residual {best_residual:.6e})"
                    );
                    (
                        SlemmaOut {
                            status: "infeasible".into(),
                            alpha: None,
                            min_eig: Some(*best_residual),
                        },
                        EXIT_INFEASIBLE,
                    )
                }
            };
            if let Err(e) = write_json(&out, output) {
                return fail_io(&e);
            }
            code
        }
        Err(e) => fail_error(&e),
    }
}

// ---------------------------------------------------------------------------
// Exit-code plumbing
// ---------------------------------------------------------------------------

fn error_exit(e: &Error) -> u8 {
    match e {
        Error::Hypothesis(_) => EXIT_HYPOTHESIS,
        Error::Undecided(_) => EXIT_UNDECIDED,
        _ => EXIT_IO,
    }
}

fn fail_error(e: &Error) -> u8 {
    eprintln!("error: {e}");
    error_exit(e)
}

fn fail_io(msg: &str) -> u8 {
    eprintln!("error: {msg}");
    EXIT_IO
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Gen { input, output, seed } => cmd_gen(input, output.as_ref(), *seed),
        Command::Synth {
            input,
            output,
            samples,
            seed,
            mode,
        } => cmd_synth(input, output.as_ref(), *samples, *seed, mode.as_deref()),
        Command::Verify {
            input,
            result,
            samples,
            seed,
        } => cmd_verify(input, result, *samples, *seed),
        Command::Analyze { input, output } => cmd_analyze(input, output.as_ref()),
        Command::Slemma { input, output, tol } => cmd_slemma(input, output.as_ref(), *tol),
    };
    ExitCode::from(code)
}
