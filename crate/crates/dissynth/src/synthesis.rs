//! Controller synthesis from noisy data.
//!
//! Takes an experiment record plus a noise model and produces a single static
//! state-feedback gain `K` such that *every* system consistent with the data
//! is closed-loop dissipative for the requested supply rate. The feasibility
//! question is reduced to one LMI over `(Q, L, alpha)` — linear because the
//! dualised dissipation inequality is linear in `Q = P^{-1}` and `L = K Q` —
//! and solved as margin maximisation so that every verdict carries a
//! quantitative certificate.
//!
//! Two data scenarios are covered: outputs measured during the experiment
//! (`unknown` output matrices, consistency set over `(A, B, C, D)`) and output
//! matrices known a priori (consistency set over `(A, B)` only). The known
//! case has a degenerate fallback branch where `C_s + D_s K = 0` makes the
//! closed loop dissipative with the zero storage function.

use nalgebra::DMatrix;

use crate::datamodel::{
    self, build_hat_mk, build_hat_mu, build_hat_nk, build_hat_nu, check_positive_eigenvalue,
    check_rank, sample_consistent, ExperimentData, NoiseModel,
};
use crate::dissipativity::{
    dissipation_matrix, state_strict_dual_parts, state_strict_supply, SupplyRate,
};
use crate::matcore::{self, SymMatrix};
use crate::par::{self, Exec};
use crate::sdpsolve::{self, LmiProblem, SdpBackend, SolveStatus};
use crate::{Error, Result};

/// Strictness floor for the decision variable `Q`: the LMI requires
/// `Q >= (DELTA + t) I`, realising "positive definite Q" machine-checkably.
pub const DELTA: f64 = 1e-6;
/// Relative PSD tolerance of the independent post-solve recheck.
pub const RECHECK_TOL: f64 = 1e-7;
/// Dead band around zero for the optimal margin `t*`.
pub const MARGIN_BAND: f64 = 1e-9;
/// Upper bound for the S-procedure multiplier after normalising the data
/// matrix to unit max entry.
pub const ALPHA_MAX: f64 = 1e6;
/// Cap on `Q` keeping the margin program bounded.
pub const Q_CAP: f64 = 1e6;
/// Relative tolerance of the degenerate-branch output annihilation check.
pub const DEGENERATE_TOL: f64 = 1e-9;

/// Supply-rate requirement for synthesis.
#[derive(Debug, Clone)]
pub enum SupplySpec {
    /// A fixed quadratic supply on `(w, y)`; must satisfy the inertia
    /// assumption `inertia(S) = (p, 0, d)`.
    Fixed(SupplyRate),
    /// State-strict passivity `2 w^T y - eps |x|^2` with `eps` free above the
    /// given floor. Requires `p = d`. The dual supply is affine in
    /// `eta = 1/eps`, so `eta` joins the LMI as a decision scalar.
    StateStrictPassive { eps_min: f64 },
}

/// Whether the output matrices were measured or are known a priori.
#[derive(Debug, Clone)]
pub enum OutputKnowledge {
    /// `C_s`, `D_s` given; the consistency set ranges over `(A, B)`.
    Known { c_s: DMatrix<f64>, d_s: DMatrix<f64> },
    /// Output samples `Y_-` recorded; the set ranges over `(A, B, C, D)`.
    Unknown,
}

/// A complete synthesis instance.
#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub data: ExperimentData,
    pub noise: NoiseModel,
    /// Process-noise channel, `n x d`.
    pub e: DMatrix<f64>,
    /// Measurement-noise channel, `p x d`.
    pub f: DMatrix<f64>,
    pub supply: SupplySpec,
    pub outputs: OutputKnowledge,
}

/// Which clause of the informativity characterisation produced the result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    UnknownOutput,
    KnownOutputStrict,
    KnownOutputDegenerate,
}

/// A successful synthesis: gain, storage certificate, and multipliers.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    /// Feedback gain, `m x n`.
    pub k: DMatrix<f64>,
    /// Storage matrix (`P > 0` on the strict branches, `P = 0` on the
    /// degenerate branch).
    pub p: SymMatrix,
    /// S-procedure multiplier.
    pub alpha: f64,
    /// Realised strictness for the state-strict supply.
    pub epsilon: Option<f64>,
    pub branch: Branch,
    /// Optimal margin `t*` of the max-margin LMI (0 on the degenerate
    /// branch).
    pub feasibility_margin: f64,
    /// Set when the strict branch succeeded but the degenerate branch's
    /// conditions hold as well; the strict result is returned regardless.
    pub degenerate_also_holds: bool,
}

/// Outcome of a synthesis call whose hypotheses all held.
pub enum SynthesisOutcome {
    Feasible(SynthesisResult),
    /// No controller exists (equivalently, the data are not informative for
    /// closed-loop dissipativity at this supply).
    Infeasible {
        /// True when the backend produced a dual infeasibility certificate
        /// for the nonstrict feasibility program.
        dual_certificate: bool,
    },
}

impl SynthesisProblem {
    /// Validates all cross-dimensions once; downstream code relies on them.
    pub fn new(
        data: ExperimentData,
        noise: NoiseModel,
        e: DMatrix<f64>,
        f: DMatrix<f64>,
        supply: SupplySpec,
        outputs: OutputKnowledge,
    ) -> Result<Self> {
        let n = data.state_dim();
        let d = noise.noise_dim();
        if e.nrows() != n || e.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "noise channel E must be {n}x{d}, got {}x{}",
                e.nrows(),
                e.ncols()
            )));
        }
        let p = match &outputs {
            OutputKnowledge::Known { c_s, d_s } => {
                if c_s.ncols() != n || d_s.nrows() != c_s.nrows() || d_s.ncols() != data.input_dim()
                {
                    return Err(Error::DimensionMismatch(format!(
                        "output matrices must be C_s px{n} and D_s px{}, got {}x{} and {}x{}",
                        data.input_dim(),
                        c_s.nrows(),
                        c_s.ncols(),
                        d_s.nrows(),
                        d_s.ncols()
                    )));
                }
                c_s.nrows()
            }
            OutputKnowledge::Unknown => data
                .y_minus()
                .ok_or_else(|| {
                    Error::InvalidInput(
                        "unknown-output synthesis requires the output record Y_-".into(),
                    )
                })?
                .nrows(),
        };
        if f.nrows() != p || f.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "measurement channel F must be {p}x{d}, got {}x{}",
                f.nrows(),
                f.ncols()
            )));
        }
        match &supply {
            SupplySpec::Fixed(s) => {
                if s.input_dim() != d || s.output_dim() != p {
                    return Err(Error::DimensionMismatch(format!(
                        "supply acts on ({}, {}), data require ({d}, {p})",
                        s.input_dim(),
                        s.output_dim()
                    )));
                }
            }
            SupplySpec::StateStrictPassive { eps_min } => {
                if p != d {
                    return Err(Error::InvalidInput(format!(
                        "state-strict passivity pairs disturbance and output, needs p = d, got p={p}, d={d}"
                    )));
                }
                if !(*eps_min > 0.0) {
                    return Err(Error::InvalidInput(
                        "state-strict epsilon floor must be positive".into(),
                    ));
                }
            }
        }
        Ok(Self {
            data,
            noise,
            e,
            f,
            supply,
            outputs,
        })
    }

    fn state_dim(&self) -> usize {
        self.data.state_dim()
    }

    fn input_dim(&self) -> usize {
        self.data.input_dim()
    }

    fn output_dim(&self) -> usize {
        match &self.outputs {
            OutputKnowledge::Known { c_s, .. } => c_s.nrows(),
            OutputKnowledge::Unknown => self.f.nrows(),
        }
    }
}

/// Dual supply pieces entering the synthesis LMI: either a constant matrix or
/// an affine pencil `Shat0 + eta Shat1` with `eta = 1/eps` a decision scalar
/// bounded by `[ETA_MIN, 1/eps_min]`.
enum DualSupply {
    Constant(SymMatrix),
    Pencil {
        s0: SymMatrix,
        s1: SymMatrix,
        eta_max: f64,
    },
}

const ETA_MIN: f64 = 1e-9;

impl DualSupply {
    fn at(&self, eta: f64) -> SymMatrix {
        match self {
            DualSupply::Constant(s) => s.clone(),
            DualSupply::Pencil { s0, s1, .. } => SymMatrix::symmetrize(
                s0.matrix() + s1.matrix() * eta,
            ),
        }
    }
}

/// The augmented problem data actually entering the LMI. For a fixed supply
/// these are the problem's own matrices; for state-strict passivity the
/// output is augmented with the full state (`C -> [I; C]`, `D -> [0; D]`,
/// `F -> [0; F]`, recorded outputs `Y -> [X_-; Y_-]`).
struct LmiData {
    c_s: Option<DMatrix<f64>>,
    d_s: Option<DMatrix<f64>>,
    f: DMatrix<f64>,
    data: ExperimentData,
    /// Output dimension seen by the LMI (original `p`, or `n + p`).
    p_eff: usize,
    dual: DualSupply,
}

fn stack_rows(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.view_mut((0, 0), (top.nrows(), top.ncols())).copy_from(top);
    out.view_mut((top.nrows(), 0), (bottom.nrows(), bottom.ncols()))
        .copy_from(bottom);
    out
}

fn lmi_data(prob: &SynthesisProblem) -> Result<LmiData> {
    let n = prob.state_dim();
    let p = prob.output_dim();
    let d = prob.noise.noise_dim();
    match &prob.supply {
        SupplySpec::Fixed(s) => {
            // The inertia assumption is exactly what makes dualisation valid;
            // `dualize` rejects violations as hypothesis failures.
            let s_hat = s.dualize()?;
            let (c_s, d_s) = match &prob.outputs {
                OutputKnowledge::Known { c_s, d_s } => (Some(c_s.clone()), Some(d_s.clone())),
                OutputKnowledge::Unknown => (None, None),
            };
            Ok(LmiData {
                c_s,
                d_s,
                f: prob.f.clone(),
                data: prob.data.clone(),
                p_eff: p,
                dual: DualSupply::Constant(s_hat),
            })
        }
        SupplySpec::StateStrictPassive { eps_min } => {
            let (s0, s1) = state_strict_dual_parts(d, n);
            let f_aug = stack_rows(&DMatrix::zeros(n, d), &prob.f);
            let (c_s, d_s, data) = match &prob.outputs {
                OutputKnowledge::Known { c_s, d_s } => (
                    Some(stack_rows(&DMatrix::identity(n, n), c_s)),
                    Some(stack_rows(&DMatrix::zeros(n, prob.input_dim()), d_s)),
                    prob.data.clone(),
                ),
                OutputKnowledge::Unknown => {
                    let y = prob.data.y_minus().expect("validated at construction");
                    let y_aug = stack_rows(&prob.data.x_minus(), y);
                    let data = ExperimentData::new(
                        prob.data.u_minus().clone(),
                        prob.data.state_record().clone(),
                        Some(y_aug),
                    )?;
                    (None, None, data)
                }
            };
            Ok(LmiData {
                c_s,
                d_s,
                f: f_aug,
                data,
                p_eff: n + p,
                dual: DualSupply::Pencil {
                    s0,
                    s1,
                    eta_max: 1.0 / eps_min,
                },
            })
        }
    }
}

struct MarginSolution {
    q: SymMatrix,
    l: DMatrix<f64>,
    alpha: f64,
    eta: Option<f64>,
    margin: f64,
}

enum MarginOutcome {
    Feasible(MarginSolution),
    Infeasible { dual_certificate: bool },
}

/// Solves `max t` s.t. `Mhat(Q, L[, eta]) - alpha Nhat >= t I`,
/// `Q >= (DELTA + t) I`, `Q <= Q_CAP I`, `alpha in [0, ALPHA_MAX]`, `t <= 1`.
///
/// `Nhat` is normalised to unit max entry inside the program; the returned
/// multiplier is rescaled back to the original data matrix. A solution is
/// accepted only after an independent recheck of the nonstrict constraints.
fn solve_margin(
    n: usize,
    m: usize,
    n_hat: &SymMatrix,
    build_m_hat: impl Fn(&DMatrix<f64>, &DMatrix<f64>, f64) -> DMatrix<f64> + Send + Sync + 'static,
    eta_max: Option<f64>,
    backend: &dyn SdpBackend,
) -> Result<MarginOutcome> {
    let dim = n_hat.dim();
    let n_scale = n_hat
        .matrix()
        .iter()
        .fold(0.0f64, |a, x| a.max(x.abs()))
        .max(1e-300);
    let n_scaled = n_hat.matrix() / n_scale;

    let mut lmi = LmiProblem::new();
    let q_var = lmi.add_symmetric("Q", n);
    let l_var = lmi.add_rectangular("L", m, n);
    let alpha_var = lmi.add_scalar("alpha", Some(0.0), Some(ALPHA_MAX));
    let t_var = lmi.add_scalar("t", Some(-1e3), Some(1.0));
    let eta_var = eta_max.map(|hi| lmi.add_scalar("eta", Some(ETA_MIN), Some(hi)));

    let build = std::sync::Arc::new(build_m_hat);
    {
        let build = build.clone();
        let n_scaled = n_scaled.clone();
        lmi.require_psd(
            "synthesis",
            Box::new(move |asg| {
                let eta = eta_var.map(|v| asg.scalar(v)).unwrap_or(0.0);
                build(asg.matrix(q_var), asg.matrix(l_var), eta)
                    - &n_scaled * asg.scalar(alpha_var)
                    - DMatrix::identity(dim, dim) * asg.scalar(t_var)
            }),
        );
    }
    lmi.require_psd(
        "Q strict",
        Box::new(move |asg| {
            asg.matrix(q_var) - DMatrix::identity(n, n) * (DELTA + asg.scalar(t_var))
        }),
    );
    lmi.require_psd(
        "Q cap",
        Box::new(move |asg| DMatrix::identity(n, n) * Q_CAP - asg.matrix(q_var)),
    );
    lmi.maximize(vec![(t_var, 1.0)]);

    let out = sdpsolve::solve(&lmi, backend)?;
    let asg = match (&out.status, out.assignment) {
        (SolveStatus::Infeasible, _) | (_, None) => {
            // The margin program is feasible for sufficiently negative t, so
            // a hard failure here means numerical trouble, not infeasibility
            // of the synthesis; fall through to the certificate stage.
            return infeasibility_certificate(n, m, &n_scaled, dim, build, eta_max, backend);
        }
        (_, Some(asg)) => asg,
    };
    let t = asg.scalar(t_var);
    let q = asg.sym(q_var);
    let l = asg.matrix(l_var).clone();
    let alpha_scaled = asg.scalar(alpha_var);
    let eta = eta_var.map(|v| asg.scalar(v));

    if t >= -MARGIN_BAND {
        // Independent recheck of the nonstrict constraints at the solution.
        let mm = build(q.matrix(), &l, eta.unwrap_or(0.0)) - &n_scaled * alpha_scaled;
        let mm = SymMatrix::symmetrize(mm);
        let rel = mm.min_eig() / mm.spectral_radius().max(1.0);
        if rel >= -RECHECK_TOL && q.min_eig() >= 0.5 * DELTA {
            return Ok(MarginOutcome::Feasible(MarginSolution {
                q,
                l,
                alpha: alpha_scaled / n_scale,
                eta,
                margin: t,
            }));
        }
        return Err(Error::Undecided(format!(
            "margin {t:.3e} reported but the recheck found relative margin {rel:.3e}"
        )));
    }
    if out.status == SolveStatus::Undecided {
        return Err(Error::Undecided(format!(
            "backend did not certify the margin program (status: {})",
            out.backend_status
        )));
    }
    infeasibility_certificate(n, m, &n_scaled, dim, build, eta_max, backend)
}

/// Re-solves the plain (nonstrict, margin-free) feasibility program so an
/// infeasible verdict can carry the backend's dual certificate.
fn infeasibility_certificate(
    n: usize,
    m: usize,
    n_scaled: &DMatrix<f64>,
    dim: usize,
    build: std::sync::Arc<
        impl Fn(&DMatrix<f64>, &DMatrix<f64>, f64) -> DMatrix<f64> + Send + Sync + 'static,
    >,
    eta_max: Option<f64>,
    backend: &dyn SdpBackend,
) -> Result<MarginOutcome> {
    let mut lmi = LmiProblem::new();
    let q_var = lmi.add_symmetric("Q", n);
    let l_var = lmi.add_rectangular("L", m, n);
    let alpha_var = lmi.add_scalar("alpha", Some(0.0), Some(ALPHA_MAX));
    let eta_var = eta_max.map(|hi| lmi.add_scalar("eta", Some(ETA_MIN), Some(hi)));
    {
        let build = build.clone();
        let n_scaled = n_scaled.clone();
        let _ = dim;
        lmi.require_psd(
            "synthesis",
            Box::new(move |asg| {
                let eta = eta_var.map(|v| asg.scalar(v)).unwrap_or(0.0);
                build(asg.matrix(q_var), asg.matrix(l_var), eta)
                    - &n_scaled * asg.scalar(alpha_var)
            }),
        );
    }
    lmi.require_psd(
        "Q strict",
        Box::new(move |asg| asg.matrix(q_var) - DMatrix::identity(n, n) * DELTA),
    );
    lmi.require_psd(
        "Q cap",
        Box::new(move |asg| DMatrix::identity(n, n) * Q_CAP - asg.matrix(q_var)),
    );
    let out = sdpsolve::solve(&lmi, backend)?;
    match out.status {
        SolveStatus::Infeasible => Ok(MarginOutcome::Infeasible {
            dual_certificate: out.dual_certificate,
        }),
        // The margin stage already ruled the instance out; without a clean
        // certificate we still report infeasible, just unbacked.
        _ => Ok(MarginOutcome::Infeasible {
            dual_certificate: false,
        }),
    }
}

fn finish_strict(
    sol: MarginSolution,
    branch: Branch,
    degenerate_also_holds: bool,
) -> Result<SynthesisResult> {
    let q_inv = sol.q.matrix().clone().try_inverse().ok_or_else(|| {
        Error::Undecided("solved Q is numerically singular despite the strictness floor".into())
    })?;
    let k = &sol.l * &q_inv;
    let p = SymMatrix::symmetrize(q_inv);
    Ok(SynthesisResult {
        k,
        p,
        alpha: sol.alpha,
        epsilon: sol.eta.map(|eta| 1.0 / eta),
        branch,
        feasibility_margin: sol.margin,
        degenerate_also_holds,
    })
}

/// Whether the degenerate branch applies: `im C_s ⊆ im D_s` together with
/// `[I; F]^T S [I; F] >= 0` for the primal supply `S`.
fn degenerate_conditions(
    c_s: &DMatrix<f64>,
    d_s: &DMatrix<f64>,
    f: &DMatrix<f64>,
    supply: &SupplyRate,
) -> bool {
    let stacked = {
        let mut s = DMatrix::zeros(d_s.nrows(), d_s.ncols() + c_s.ncols());
        s.view_mut((0, 0), (d_s.nrows(), d_s.ncols())).copy_from(d_s);
        s.view_mut((0, d_s.ncols()), (c_s.nrows(), c_s.ncols()))
            .copy_from(c_s);
        s
    };
    if matcore::rank(&stacked) != matcore::rank(d_s) {
        return false;
    }
    let d = supply.input_dim();
    let port = stack_rows(&DMatrix::identity(d, d), f);
    let form = SymMatrix::symmetrize(port.transpose() * supply.matrix().matrix() * port);
    form.min_eig() >= -1e-8 * form.spectral_radius().max(1.0)
}

/// Primal supply used for degenerate-branch checks and verification.
fn primal_supply(prob: &SynthesisProblem, epsilon: Option<f64>) -> SupplyRate {
    match &prob.supply {
        SupplySpec::Fixed(s) => s.clone(),
        SupplySpec::StateStrictPassive { eps_min } => {
            state_strict_supply(prob.noise.noise_dim(), prob.state_dim(), epsilon.unwrap_or(*eps_min))
        }
    }
}

/// Synthesis with known output matrices: consistency over `(A, B)` only.
///
/// Tries the strict branch (LMI over `Q > 0`, `L`, `alpha >= 0`) first; when
/// that is infeasible, falls back to the degenerate branch which annihilates
/// the output (`K = -D_s^† C_s`, `P = 0`).
pub fn synthesize_known_output(
    prob: &SynthesisProblem,
    backend: &dyn SdpBackend,
) -> Result<SynthesisOutcome> {
    let OutputKnowledge::Known { .. } = &prob.outputs else {
        return Err(Error::InvalidInput(
            "known-output synthesis requires outputKnowledge = known".into(),
        ));
    };
    if !check_rank(&prob.data) {
        return Err(Error::Hypothesis(
            "rank [X_-; U_-] = n + m is required for known-output synthesis".into(),
        ));
    }
    let ld = lmi_data(prob)?;
    let n_hat = build_hat_nk(&ld.data, &prob.e, &prob.noise, ld.p_eff)?;
    if !check_positive_eigenvalue(&n_hat) {
        return Err(Error::Hypothesis(
            "the data matrix Nhat_k has no positive eigenvalue (noise bound leaves no slack)"
                .into(),
        ));
    }
    let n = prob.state_dim();
    let m = prob.input_dim();
    let c_eff = ld.c_s.clone().expect("known outputs");
    let d_eff = ld.d_s.clone().expect("known outputs");
    let (c_b, d_b, e_b, f_b) = (c_eff.clone(), d_eff.clone(), prob.e.clone(), ld.f.clone());
    let dual = ld.dual;
    let eta_max = match &dual {
        DualSupply::Pencil { eta_max, .. } => Some(*eta_max),
        DualSupply::Constant(_) => None,
    };
    let outcome = solve_margin(
        n,
        m,
        &n_hat,
        move |q, l, eta| {
            build_hat_mk(q, l, &c_b, &d_b, &e_b, &f_b, &dual.at(eta))
                .expect("validated dimensions")
                .into_inner()
        },
        eta_max,
        backend,
    )?;
    let deg = degenerate_conditions(&c_eff, &d_eff, &ld.f, &primal_supply(prob, None));
    match outcome {
        MarginOutcome::Feasible(sol) => {
            Ok(SynthesisOutcome::Feasible(finish_strict(
                sol,
                Branch::KnownOutputStrict,
                deg,
            )?))
        }
        MarginOutcome::Infeasible { dual_certificate } => {
            if !deg {
                return Ok(SynthesisOutcome::Infeasible { dual_certificate });
            }
            let k = -(matcore::pseudo_inverse(&d_eff) * &c_eff);
            let residual = (&c_eff + &d_eff * &k).norm();
            if residual > DEGENERATE_TOL * (1.0 + c_eff.norm()) {
                return Ok(SynthesisOutcome::Infeasible { dual_certificate });
            }
            Ok(SynthesisOutcome::Feasible(SynthesisResult {
                k,
                p: SymMatrix::zeros(n),
                alpha: 0.0,
                epsilon: None,
                branch: Branch::KnownOutputDegenerate,
                feasibility_margin: 0.0,
                degenerate_also_holds: false,
            }))
        }
    }
}

/// Synthesis with measured outputs: consistency over `(A, B, C, D)`.
pub fn synthesize_unknown_output(
    prob: &SynthesisProblem,
    backend: &dyn SdpBackend,
) -> Result<SynthesisOutcome> {
    let OutputKnowledge::Unknown = &prob.outputs else {
        return Err(Error::InvalidInput(
            "unknown-output synthesis requires outputKnowledge = unknown".into(),
        ));
    };
    let ld = lmi_data(prob)?;
    let n_hat = build_hat_nu(&ld.data, &prob.e, &ld.f, &prob.noise)?;
    if !check_positive_eigenvalue(&n_hat) {
        return Err(Error::Hypothesis(
            "the data matrix Nhat_u has no positive eigenvalue (noise bound leaves no slack)"
                .into(),
        ));
    }
    let n = prob.state_dim();
    let m = prob.input_dim();
    let (e_b, f_b) = (prob.e.clone(), ld.f.clone());
    let dual = ld.dual;
    let eta_max = match &dual {
        DualSupply::Pencil { eta_max, .. } => Some(*eta_max),
        DualSupply::Constant(_) => None,
    };
    let outcome = solve_margin(
        n,
        m,
        &n_hat,
        move |q, l, eta| {
            build_hat_mu(q, l, &e_b, &f_b, &dual.at(eta))
                .expect("validated dimensions")
                .into_inner()
        },
        eta_max,
        backend,
    )?;
    match outcome {
        MarginOutcome::Feasible(sol) => Ok(SynthesisOutcome::Feasible(finish_strict(
            sol,
            Branch::UnknownOutput,
            false,
        )?)),
        MarginOutcome::Infeasible { dual_certificate } => {
            Ok(SynthesisOutcome::Infeasible { dual_certificate })
        }
    }
}

/// Dispatches on the declared output knowledge.
pub fn synthesize(prob: &SynthesisProblem, backend: &dyn SdpBackend) -> Result<SynthesisOutcome> {
    match &prob.outputs {
        OutputKnowledge::Known { .. } => synthesize_known_output(prob, backend),
        OutputKnowledge::Unknown => synthesize_unknown_output(prob, backend),
    }
}

/// Spot-check of a synthesis result against sampled consistent systems.
#[derive(Debug, Clone)]
pub struct VerificationReport {
    pub samples: usize,
    /// Worst relative dissipation margin `lambda_min / max(1, rho)` over all
    /// sampled closed loops.
    pub min_eig: f64,
    /// True when `min_eig >= -RECHECK_TOL`.
    pub pass: bool,
}

/// Samples `sample_count` consistent systems (the center of the consistency
/// ellipsoid plus interior and boundary draws), closes the loop with the
/// synthesised gain, and evaluates the primal dissipation inequality with the
/// returned storage matrix on every sample.
pub fn verify_closed_loop(
    result: &SynthesisResult,
    prob: &SynthesisProblem,
    sample_count: usize,
    seed: u64,
    exec: Exec,
) -> Result<VerificationReport> {
    let f_opt = match &prob.outputs {
        OutputKnowledge::Known { .. } => None,
        OutputKnowledge::Unknown => Some(&prob.f),
    };
    let models = sample_consistent(&prob.data, &prob.e, f_opt, &prob.noise, sample_count, seed)?;
    let supply = primal_supply(prob, result.epsilon);
    let n = prob.state_dim();
    let margins: Vec<Result<f64>> = par::map_indexed(models.len(), exec, |i| {
        let model = &models[i];
        let a_cl = &model.a + &model.b * &result.k;
        let (c_cl, f_cl) = match &prob.outputs {
            OutputKnowledge::Known { c_s, d_s } => (c_s + d_s * &result.k, prob.f.clone()),
            OutputKnowledge::Unknown => (&model.c + &model.d * &result.k, model.f.clone()),
        };
        let (c_eval, f_eval) = match &prob.supply {
            SupplySpec::Fixed(_) => (c_cl, f_cl),
            SupplySpec::StateStrictPassive { .. } => (
                stack_rows(&DMatrix::identity(n, n), &c_cl),
                stack_rows(&DMatrix::zeros(n, prob.e.ncols()), &f_cl),
            ),
        };
        let fm = dissipation_matrix(&a_cl, &prob.e, &c_eval, &f_eval, &result.p, &supply)?;
        Ok(fm.min_eig() / fm.spectral_radius().max(1.0))
    });
    let mut min_eig = f64::INFINITY;
    for r in margins {
        min_eig = min_eig.min(r?);
    }
    Ok(VerificationReport {
        samples: models.len(),
        min_eig,
        pass: min_eig >= -RECHECK_TOL,
    })
}

/// Aggregated hypothesis-check verdicts, surfaced as diagnostics by callers.
#[derive(Debug, Clone)]
pub struct HypothesisReport {
    pub rank_ok: bool,
    pub positive_eigenvalue_ok: bool,
    pub pi_class_ok: bool,
    pub interior_sufficient: bool,
}

/// Runs all hypothesis checks without solving anything.
pub fn check_hypotheses(prob: &SynthesisProblem) -> Result<HypothesisReport> {
    let rank_ok = check_rank(&prob.data);
    let ld = lmi_data(prob)?;
    let (pos, interior) = match &prob.outputs {
        OutputKnowledge::Known { .. } => {
            let n_hat = build_hat_nk(&ld.data, &prob.e, &prob.noise, ld.p_eff)?;
            let form = datamodel::build_nk(&prob.data, &prob.e, &prob.noise)?;
            (
                check_positive_eigenvalue(&n_hat),
                datamodel::check_interior_sufficient(&form),
            )
        }
        OutputKnowledge::Unknown => {
            let n_hat = build_hat_nu(&ld.data, &prob.e, &ld.f, &prob.noise)?;
            let form = datamodel::build_nu(&prob.data, &prob.e, &prob.f, &prob.noise)?;
            (
                check_positive_eigenvalue(&n_hat),
                datamodel::check_interior_sufficient(&form),
            )
        }
    };
    let pi_class_ok = prob.noise.phi().validate_pi_class(1e-9).in_pi_class;
    Ok(HypothesisReport {
        rank_ok,
        positive_eigenvalue_ok: pos,
        pi_class_ok,
        interior_sufficient: interior,
    })
}
