//! Linear-matrix-inequality feasibility on top of a conic interior-point
//! backend.
//!
//! An [`LmiProblem`] declares symmetric, rectangular and scalar decision
//! variables plus constraints given as affine symmetric-matrix expressions
//! (arbitrary closures over an [`Assignment`]; affinity is validated at
//! compile time by probing). Compilation targets a standard-form conic
//! program with PSD-triangle and nonnegative cones; symmetric slack blocks
//! use the scaled upper-triangle vectorisation (off-diagonals times sqrt 2)
//! so inner products are preserved.
//!
//! Every feasible outcome passes a solver-independent recheck with
//! [`matcore::SymMatrix::is_psd`] before being reported; numerical failures
//! surface as `Undecided`, never as `Infeasible`.

use nalgebra::DMatrix;

use crate::matcore::SymMatrix;
use crate::{Error, Result};

/// Solver-independent recheck tolerance (relative).
pub const RECHECK_TOL: f64 = 1e-7;
/// Verdicts inside this band are reported as undecided.
pub const UNDECIDED_BAND: f64 = 1e-9;

/// Handle to a declared decision variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarId(usize);

#[derive(Debug, Clone, Copy)]
enum VarShape {
    Symmetric(usize),
    Rectangular(usize, usize),
    Scalar { lo: Option<f64>, hi: Option<f64> },
}

impl VarShape {
    fn scalar_len(&self) -> usize {
        match *self {
            VarShape::Symmetric(n) => n * (n + 1) / 2,
            VarShape::Rectangular(m, n) => m * n,
            VarShape::Scalar { .. } => 1,
        }
    }
}

/// Values for every declared variable; symmetric variables are stored as full
/// matrices, scalars as 1x1.
#[derive(Debug, Clone)]
pub struct Assignment {
    values: Vec<DMatrix<f64>>,
}

impl Assignment {
    pub fn matrix(&self, id: VarId) -> &DMatrix<f64> {
        &self.values[id.0]
    }

    pub fn sym(&self, id: VarId) -> SymMatrix {
        SymMatrix::symmetrize(self.values[id.0].clone())
    }

    pub fn scalar(&self, id: VarId) -> f64 {
        self.values[id.0][(0, 0)]
    }
}

/// Affine symmetric-matrix expression over an assignment.
pub type MatrixExpr = Box<dyn Fn(&Assignment) -> DMatrix<f64> + Send + Sync>;

/// An LMI feasibility problem with an optional linear objective (maximised).
#[derive(Default)]
pub struct LmiProblem {
    vars: Vec<(String, VarShape)>,
    constraints: Vec<(String, MatrixExpr)>,
    objective: Vec<(VarId, f64)>,
}

impl LmiProblem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_symmetric(&mut self, name: &str, n: usize) -> VarId {
        self.vars.push((name.to_string(), VarShape::Symmetric(n)));
        VarId(self.vars.len() - 1)
    }

    pub fn add_rectangular(&mut self, name: &str, rows: usize, cols: usize) -> VarId {
        self.vars
            .push((name.to_string(), VarShape::Rectangular(rows, cols)));
        VarId(self.vars.len() - 1)
    }

    pub fn add_scalar(&mut self, name: &str, lo: Option<f64>, hi: Option<f64>) -> VarId {
        self.vars
            .push((name.to_string(), VarShape::Scalar { lo, hi }));
        VarId(self.vars.len() - 1)
    }

    /// Requires `expr(assignment)` to be PSD. The expression must be affine in
    /// the declared variables and produce a symmetric matrix.
    pub fn require_psd(&mut self, name: &str, expr: MatrixExpr) {
        self.constraints.push((name.to_string(), expr));
    }

    /// Maximise a linear functional of scalar variables.
    pub fn maximize(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms;
    }

    pub fn num_scalar_params(&self) -> usize {
        self.vars.iter().map(|(_, s)| s.scalar_len()).sum()
    }

    /// Assignment with all variables zero.
    pub fn zero_assignment(&self) -> Assignment {
        self.assignment_from_vec(&vec![0.0; self.num_scalar_params()])
    }

    /// Unpacks a flat parameter vector (symmetric variables: upper triangle,
    /// column-major; rectangular: column-major).
    pub fn assignment_from_vec(&self, x: &[f64]) -> Assignment {
        let mut values = Vec::with_capacity(self.vars.len());
        let mut k = 0;
        for (_, shape) in &self.vars {
            match *shape {
                VarShape::Symmetric(n) => {
                    let mut m = DMatrix::zeros(n, n);
                    for j in 0..n {
                        for i in 0..=j {
                            m[(i, j)] = x[k];
                            m[(j, i)] = x[k];
                            k += 1;
                        }
                    }
                    values.push(m);
                }
                VarShape::Rectangular(rows, cols) => {
                    let mut m = DMatrix::zeros(rows, cols);
                    for j in 0..cols {
                        for i in 0..rows {
                            m[(i, j)] = x[k];
                            k += 1;
                        }
                    }
                    values.push(m);
                }
                VarShape::Scalar { .. } => {
                    values.push(DMatrix::from_element(1, 1, x[k]));
                    k += 1;
                }
            }
        }
        Assignment { values }
    }

    fn constraint_matrices(&self, assignment: &Assignment) -> Result<Vec<SymMatrix>> {
        self.constraints
            .iter()
            .map(|(name, expr)| {
                let m = expr(assignment);
                SymMatrix::new_with_tol(m, 1e-8).map_err(|_| {
                    Error::InvalidInput(format!("constraint '{name}' is not symmetric"))
                })
            })
            .collect()
    }
}

/// Solver verdict after the independent recheck.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Feasible,
    Infeasible,
    Undecided,
}

/// Result of [`solve`].
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub assignment: Option<Assignment>,
    /// Value of the declared objective at the assignment.
    pub objective: Option<f64>,
    /// Minimum relative PSD margin over all constraints at the assignment.
    pub recheck_margin: Option<f64>,
    /// True when infeasibility is backed by a solver certificate.
    pub dual_certificate: bool,
    pub backend_status: String,
}

/// Standard-form conic program: minimise `q^T x` subject to `A x + s = b`,
/// `s` in the product of the listed cones.
pub struct ConicProgram {
    pub num_vars: usize,
    pub q: Vec<f64>,
    /// Dense column-major constraint matrix, `rows x num_vars`.
    pub a: DMatrix<f64>,
    pub b: Vec<f64>,
    pub cones: Vec<ConeSpec>,
}

#[derive(Debug, Clone, Copy)]
pub enum ConeSpec {
    Nonnegative(usize),
    PsdTriangle(usize),
}

/// Raw backend verdict before the recheck.
#[derive(Debug, Clone)]
pub enum BackendStatus {
    Solved,
    AlmostSolved,
    PrimalInfeasible,
    DualInfeasible,
    Inconclusive(String),
}

pub struct BackendResult {
    pub status: BackendStatus,
    pub x: Vec<f64>,
}

/// Interior-point adapter contract. Implementations own their tolerance
/// profile; the surrounding recheck logic is backend-agnostic.
pub trait SdpBackend: Send + Sync {
    fn name(&self) -> &'static str;
    fn solve_conic(&self, prog: &ConicProgram) -> BackendResult;
}

/// Clarabel interior-point backend.
pub struct ClarabelBackend {
    name: &'static str,
    tol_gap: f64,
    tol_feas: f64,
    max_iter: u32,
}

impl ClarabelBackend {
    pub fn standard() -> Self {
        Self {
            name: "clarabel",
            tol_gap: 1e-9,
            tol_feas: 1e-9,
            max_iter: 200,
        }
    }

    pub fn high_accuracy() -> Self {
        Self {
            name: "clarabel-hiprec",
            tol_gap: 1e-12,
            tol_feas: 1e-11,
            max_iter: 500,
        }
    }
}

impl SdpBackend for ClarabelBackend {
    fn name(&self) -> &'static str {
        self.name
    }

    fn solve_conic(&self, prog: &ConicProgram) -> BackendResult {
        use clarabel::algebra::CscMatrix;
        use clarabel::solver::{
            DefaultSettings, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
        };

        let n = prog.num_vars;
        let p = CscMatrix::<f64>::zeros((n, n));
        let a = dense_to_csc(&prog.a);
        let cones: Vec<SupportedConeT<f64>> = prog
            .cones
            .iter()
            .map(|c| match *c {
                ConeSpec::Nonnegative(k) => SupportedConeT::NonnegativeConeT(k),
                ConeSpec::PsdTriangle(k) => SupportedConeT::PSDTriangleConeT(k),
            })
            .collect();
        let mut settings = DefaultSettings::default();
        settings.verbose = false;
        settings.tol_gap_abs = self.tol_gap;
        settings.tol_gap_rel = self.tol_gap;
        settings.tol_feas = self.tol_feas;
        settings.max_iter = self.max_iter;

        let mut solver = match DefaultSolver::new(&p, &prog.q, &a, &prog.b, &cones, settings) {
            Ok(s) => s,
            Err(e) => {
                return BackendResult {
                    status: BackendStatus::Inconclusive(format!("setup failed: {e:?}")),
                    x: vec![0.0; n],
                }
            }
        };
        solver.solve();
        let status = match solver.solution.status {
            SolverStatus::Solved => BackendStatus::Solved,
            SolverStatus::AlmostSolved => BackendStatus::AlmostSolved,
            SolverStatus::PrimalInfeasible => BackendStatus::PrimalInfeasible,
            SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => {
                BackendStatus::DualInfeasible
            }
            other => BackendStatus::Inconclusive(format!("{other:?}")),
        };
        BackendResult {
            status,
            x: solver.solution.x.clone(),
        }
    }
}

fn dense_to_csc(a: &DMatrix<f64>) -> clarabel::algebra::CscMatrix<f64> {
    let (rows, cols) = (a.nrows(), a.ncols());
    let mut colptr = Vec::with_capacity(cols + 1);
    let mut rowval = Vec::new();
    let mut nzval = Vec::new();
    colptr.push(0);
    for j in 0..cols {
        for i in 0..rows {
            let v = a[(i, j)];
            if v != 0.0 {
                rowval.push(i);
                nzval.push(v);
            }
        }
        colptr.push(rowval.len());
    }
    clarabel::algebra::CscMatrix::new(rows, cols, colptr, rowval, nzval)
}

/// Selects the backend named by the `DISSYNTH_SOLVER` environment variable
/// (`clarabel`, the default, or `clarabel-hiprec`).
pub fn backend_from_env() -> Result<Box<dyn SdpBackend>> {
    match std::env::var("DISSYNTH_SOLVER").as_deref() {
        Err(_) | Ok("") | Ok("clarabel") => Ok(Box::new(ClarabelBackend::standard())),
        Ok("clarabel-hiprec") => Ok(Box::new(ClarabelBackend::high_accuracy())),
        Ok(other) => Err(Error::InvalidInput(format!(
            "unknown solver backend '{other}' (expected clarabel or clarabel-hiprec)"
        ))),
    }
}

/// Scaled upper-triangle vectorisation (column-major, off-diagonals times
/// sqrt 2) of a symmetric matrix.
fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let s2 = std::f64::consts::SQRT_2;
    for j in 0..n {
        for i in 0..=j {
            out.push(if i == j { m[(i, j)] } else { m[(i, j)] * s2 });
        }
    }
    out
}

/// Compiles the problem to standard conic form by probing each constraint at
/// the zero assignment and the parameter basis vectors; validates affinity at
/// a fixed interior probe point.
pub fn compile(problem: &LmiProblem) -> Result<ConicProgram> {
    let nparams = problem.num_scalar_params();
    let zero = problem.zero_assignment();
    let f0: Vec<SymMatrix> = problem.constraint_matrices(&zero)?;

    // per-parameter coefficient matrices
    let mut coeffs: Vec<Vec<DMatrix<f64>>> = Vec::with_capacity(nparams);
    for j in 0..nparams {
        let mut x = vec![0.0; nparams];
        x[j] = 1.0;
        let a = problem.assignment_from_vec(&x);
        let fj = problem.constraint_matrices(&a)?;
        coeffs.push(
            fj.into_iter()
                .zip(&f0)
                .map(|(f, f0)| f.into_inner() - f0.matrix())
                .collect(),
        );
    }

    // affinity validation at a deterministic interior point
    let probe: Vec<f64> = (0..nparams)
        .map(|j| 0.37 + 0.21 * ((j as f64) * 1.618).sin())
        .collect();
    let probe_eval = problem.constraint_matrices(&problem.assignment_from_vec(&probe))?;
    for (c, actual) in probe_eval.iter().enumerate() {
        let mut predicted = f0[c].matrix().clone();
        for (j, xj) in probe.iter().enumerate() {
            predicted += &coeffs[j][c] * *xj;
        }
        let scale = predicted.norm().max(1.0);
        if (actual.matrix() - &predicted).norm() > 1e-6 * scale {
            return Err(Error::NonAffine(problem.constraints[c].0.clone()));
        }
    }

    // rows: scalar bounds first (nonnegative cone), then PSD blocks
    let mut bound_rows: Vec<(usize, f64, f64)> = Vec::new(); // (param index, sign, bound)
    let mut k = 0;
    for (_, shape) in &problem.vars {
        if let VarShape::Scalar { lo, hi } = shape {
            if let Some(lo) = lo {
                bound_rows.push((k, -1.0, -lo));
            }
            if let Some(hi) = hi {
                bound_rows.push((k, 1.0, *hi));
            }
        }
        k += shape.scalar_len();
    }

    let psd_rows: usize = f0.iter().map(|f| f.dim() * (f.dim() + 1) / 2).sum();
    let rows = bound_rows.len() + psd_rows;
    let mut a = DMatrix::zeros(rows, nparams);
    let mut b = vec![0.0; rows];
    let mut cones = Vec::new();

    for (r, &(j, sign, bound)) in bound_rows.iter().enumerate() {
        a[(r, j)] = sign;
        b[r] = bound;
    }
    if !bound_rows.is_empty() {
        cones.push(ConeSpec::Nonnegative(bound_rows.len()));
    }

    let mut row = bound_rows.len();
    for (c, f) in f0.iter().enumerate() {
        let dim = f.dim();
        let len = dim * (dim + 1) / 2;
        let v0 = svec(f.matrix());
        for (i, v) in v0.iter().enumerate() {
            b[row + i] = *v;
        }
        for (j, coeff) in coeffs.iter().enumerate() {
            let vj = svec(&coeff[c]);
            for (i, v) in vj.iter().enumerate() {
                a[(row + i, j)] = -v;
            }
        }
        cones.push(ConeSpec::PsdTriangle(dim));
        row += len;
    }

    // minimise -objective
    let mut q = vec![0.0; nparams];
    for &(id, c) in &problem.objective {
        let mut offset = 0;
        for (idx, (_, shape)) in problem.vars.iter().enumerate() {
            if idx == id.0 {
                break;
            }
            offset += shape.scalar_len();
        }
        match problem.vars[id.0].1 {
            VarShape::Scalar { .. } => q[offset] -= c,
            _ => {
                return Err(Error::InvalidInput(
                    "objective terms must reference scalar variables".into(),
                ))
            }
        }
    }

    Ok(ConicProgram {
        num_vars: nparams,
        q,
        a,
        b,
        cones,
    })
}

/// Minimum relative PSD margin over all constraints and scalar bounds.
pub fn recheck_margin(problem: &LmiProblem, assignment: &Assignment) -> Result<f64> {
    let mut margin = f64::INFINITY;
    for f in problem.constraint_matrices(assignment)? {
        if f.dim() == 0 {
            continue;
        }
        let scale = f.spectral_radius().max(1.0);
        margin = margin.min(f.min_eig() / scale);
    }
    for (idx, (_, shape)) in problem.vars.iter().enumerate() {
        if let VarShape::Scalar { lo, hi } = shape {
            let v = assignment.scalar(VarId(idx));
            if let Some(lo) = lo {
                margin = margin.min((v - lo) / lo.abs().max(1.0));
            }
            if let Some(hi) = hi {
                margin = margin.min((hi - v) / hi.abs().max(1.0));
            }
        }
    }
    Ok(margin)
}

/// Evaluates every constraint at the assignment and tests PSD-ness with
/// matcore, independent of solver internals.
pub fn recheck(problem: &LmiProblem, assignment: &Assignment, tol: f64) -> Result<bool> {
    Ok(recheck_margin(problem, assignment)? >= -tol)
}

/// Solves the problem with the given backend. Feasible outcomes always pass
/// the independent recheck; anything numerically murky maps to `Undecided`.
pub fn solve(problem: &LmiProblem, backend: &dyn SdpBackend) -> Result<SolveOutcome> {
    let prog = compile(problem)?;
    if prog.a.nrows() == 0 {
        let assignment = problem.zero_assignment();
        return Ok(SolveOutcome {
            status: SolveStatus::Feasible,
            objective: Some(0.0),
            recheck_margin: Some(f64::INFINITY),
            assignment: Some(assignment),
            dual_certificate: false,
            backend_status: "trivial".into(),
        });
    }
    let res = backend.solve_conic(&prog);
    let backend_status = format!("{:?}", res.status);
    match res.status {
        BackendStatus::Solved | BackendStatus::AlmostSolved => {
            let assignment = problem.assignment_from_vec(&res.x);
            let margin = recheck_margin(problem, &assignment)?;
            let objective = Some(
                problem
                    .objective
                    .iter()
                    .map(|&(id, c)| c * assignment.scalar(id))
                    .sum(),
            );
            let status = if margin >= -RECHECK_TOL {
                SolveStatus::Feasible
            } else {
                SolveStatus::Undecided
            };
            Ok(SolveOutcome {
                status,
                assignment: Some(assignment),
                objective,
                recheck_margin: Some(margin),
                dual_certificate: false,
                backend_status,
            })
        }
        BackendStatus::PrimalInfeasible => Ok(SolveOutcome {
            status: SolveStatus::Infeasible,
            assignment: None,
            objective: None,
            recheck_margin: None,
            dual_certificate: true,
            backend_status,
        }),
        BackendStatus::DualInfeasible | BackendStatus::Inconclusive(_) => Ok(SolveOutcome {
            status: SolveStatus::Undecided,
            assignment: None,
            objective: None,
            recheck_margin: None,
            dual_certificate: false,
            backend_status,
        }),
    }
}
