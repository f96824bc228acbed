//! Quadratic supply rates and dissipativity of discrete-time linear systems.
//!
//! A supply rate is a quadratic form `s(u, y) = [u; y]^T S [u; y]` on the
//! stacked input/output vector. A system `x+ = A x + B u`, `y = C x + D u`
//! is dissipative with storage `P >= 0` when the dissipation inequality
//! `s(u, y) >= x+^T P x+ - x^T P x` holds along all trajectories, which is
//! equivalent to PSD-ness of the matrix produced by [`dissipation_matrix`].
//!
//! For synthesis the inequality is used in a dualised form: with `S`
//! nonsingular of inertia `(p, 0, m)` the dual supply `Shat` acts on the
//! stacked `(y, u)` direction vector and PSD-ness of
//! [`dual_dissipation_matrix`] with `Q = P^{-1}` is equivalent to the primal
//! inequality.

use nalgebra::DMatrix;

use crate::matcore::SymMatrix;
use crate::sdpsolve::{self, LmiProblem, SdpBackend, SolveStatus};
use crate::{Error, Result};

/// Dissipativity margin below which an analysis verdict is left undecided.
pub const MARGIN_BAND: f64 = 1e-9;
/// Cap on the storage function in the analysis program, `P <= STORAGE_CAP I`.
pub const STORAGE_CAP: f64 = 1e6;

/// Quadratic supply rate on `(u, y)` with `u` of dimension `m` and `y` of
/// dimension `p`.
#[derive(Debug, Clone)]
pub struct SupplyRate {
    s: SymMatrix,
    m: usize,
    p: usize,
}

impl SupplyRate {
    pub fn new(s: SymMatrix, m: usize, p: usize) -> Result<Self> {
        if s.dim() != m + p {
            return Err(Error::DimensionMismatch(format!(
                "supply rate is {}x{} but input dim {m} + output dim {p} = {}",
                s.dim(),
                s.dim(),
                m + p
            )));
        }
        Ok(Self { s, m, p })
    }

    /// Passivity supply `s(u, y) = 2 u^T y`; requires `p = m`.
    pub fn passive(m: usize) -> Self {
        let mut s = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            s[(i, m + i)] = 1.0;
            s[(m + i, i)] = 1.0;
        }
        Self {
            s: SymMatrix::new(s).unwrap(),
            m,
            p: m,
        }
    }

    /// L2-gain supply `s(u, y) = gamma^2 |u|^2 - |y|^2`.
    pub fn l2_gain(gamma: f64, m: usize, p: usize) -> Self {
        let mut s = DMatrix::zeros(m + p, m + p);
        for i in 0..m {
            s[(i, i)] = gamma * gamma;
        }
        for i in 0..p {
            s[(m + i, m + i)] = -1.0;
        }
        Self {
            s: SymMatrix::new(s).unwrap(),
            m,
            p,
        }
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.s
    }

    pub fn input_dim(&self) -> usize {
        self.m
    }

    pub fn output_dim(&self) -> usize {
        self.p
    }

    /// Value of the supply rate at an input/output pair.
    pub fn evaluate(&self, u: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        let mut z = DMatrix::zeros(self.m + self.p, 1);
        z.view_mut((0, 0), (self.m, 1)).copy_from(u);
        z.view_mut((self.m, 0), (self.p, 1)).copy_from(y);
        (z.transpose() * self.s.matrix() * z)[(0, 0)]
    }

    /// Dual supply `Shat = -J S^{-1} J^T` with `J = [[0, -I_p], [I_m, 0]]`,
    /// acting on stacked `(y, u)` blocks of dimensions `(p, m)`.
    ///
    /// Requires `S` nonsingular with inertia `(p, 0, m)`; inertia of the dual
    /// is then `(m, 0, p)`.
    pub fn dualize(&self) -> Result<SymMatrix> {
        let inertia = self.s.inertia(1e-9);
        if inertia.zero > 0 || inertia.neg != self.p || inertia.pos != self.m {
            return Err(Error::Hypothesis(format!(
                "supply rate must be nonsingular with {} negative and {} positive \
                 eigenvalues, got inertia {:?}",
                self.p, self.m, inertia
            )));
        }
        let s_inv = self
            .s
            .matrix()
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Hypothesis("supply rate is numerically singular".into()))?;
        let j = dual_coupling(self.m, self.p);
        Ok(SymMatrix::symmetrize(-(&j * s_inv * j.transpose())))
    }
}

/// `J = [[0, -I_p], [I_m, 0]]`, mapping `(u, y)` coordinates to `(-y, u)`.
fn dual_coupling(m: usize, p: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(p + m, m + p);
    for i in 0..p {
        j[(i, m + i)] = -1.0;
    }
    for i in 0..m {
        j[(p + i, i)] = 1.0;
    }
    j
}

/// State-strict passivity supply on `(u, x, y)` with `y` of dimension `m`:
/// `s = 2 u^T y - eps |x|^2`. As a supply rate the output is the augmented
/// vector `(x, y)` of dimension `n + m`.
pub fn state_strict_supply(m: usize, n: usize, eps: f64) -> SupplyRate {
    let dim = 2 * m + n;
    let mut s = DMatrix::zeros(dim, dim);
    for i in 0..m {
        s[(i, m + n + i)] = 1.0;
        s[(m + n + i, i)] = 1.0;
    }
    for i in 0..n {
        s[(m + i, m + i)] = -eps;
    }
    SupplyRate {
        s: SymMatrix::new(s).unwrap(),
        m,
        p: n + m,
    }
}

/// Dual of the state-strict passivity supply as an affine function of
/// `eta = 1/eps`: returns `(Shat0, Shat1)` with `Shat(eta) = Shat0 + eta Shat1`.
///
/// The inverse of the supply is `[[0, 0, I], [0, -eta I, 0], [I, 0, 0]]`,
/// affine in `eta`, which keeps the dualised synthesis program linear when
/// `eta` is a decision variable.
pub fn state_strict_dual_parts(m: usize, n: usize) -> (SymMatrix, SymMatrix) {
    let p = n + m;
    let j = dual_coupling(m, p);
    let s_inv = |eta: f64| {
        let dim = 2 * m + n;
        let mut inv = DMatrix::zeros(dim, dim);
        for i in 0..m {
            inv[(i, m + n + i)] = 1.0;
            inv[(m + n + i, i)] = 1.0;
        }
        for i in 0..n {
            inv[(m + i, m + i)] = -eta;
        }
        SymMatrix::symmetrize(-(&j * inv * j.transpose())).into_inner()
    };
    let s0 = s_inv(0.0);
    let s1 = s_inv(1.0) - &s0;
    (SymMatrix::symmetrize(s0), SymMatrix::symmetrize(s1))
}

fn check_system_dims(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    m: usize,
    p: usize,
) -> Result<usize> {
    let n = a.nrows();
    if a.ncols() != n
        || b.nrows() != n
        || b.ncols() != m
        || c.nrows() != p
        || c.ncols() != n
        || d.nrows() != p
        || d.ncols() != m
    {
        return Err(Error::DimensionMismatch(format!(
            "system matrices inconsistent with n={n}, m={m}, p={p}: A {}x{}, B {}x{}, C {}x{}, D {}x{}",
            a.nrows(), a.ncols(), b.nrows(), b.ncols(), c.nrows(), c.ncols(), d.nrows(), d.ncols()
        )));
    }
    Ok(n)
}

/// Primal dissipation matrix on the `(x, u)` direction space:
/// `[[P, 0], [0, 0]] - [A B]^T P [A B] + [0 I; C D]^T S [0 I; C D]`.
///
/// PSD-ness for some `P >= 0` is exactly dissipativity of the system with
/// respect to the supply rate.
pub fn dissipation_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    storage: &SymMatrix,
    supply: &SupplyRate,
) -> Result<SymMatrix> {
    let (m, p) = (supply.m, supply.p);
    let n = check_system_dims(a, b, c, d, m, p)?;
    if storage.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "storage is {}x{}, expected {n}x{n}",
            storage.dim(),
            storage.dim()
        )));
    }
    let mut lyap = DMatrix::zeros(n + m, n + m);
    lyap.view_mut((0, 0), (n, n)).copy_from(storage.matrix());
    let mut ab = DMatrix::zeros(n, n + m);
    ab.view_mut((0, 0), (n, n)).copy_from(a);
    ab.view_mut((0, n), (n, m)).copy_from(b);
    let mut out = DMatrix::zeros(m + p, n + m);
    for i in 0..m {
        out[(i, n + i)] = 1.0;
    }
    out.view_mut((m, 0), (p, n)).copy_from(c);
    out.view_mut((m, n), (p, m)).copy_from(d);
    let f = lyap - ab.transpose() * storage.matrix() * ab
        + out.transpose() * supply.s.matrix() * out;
    Ok(SymMatrix::symmetrize(f))
}

/// Dual dissipation matrix on the `(x, y)` direction space:
/// `[[Q, 0], [0, 0]] + [0 I; B^T D^T]^T Shat [0 I; B^T D^T] - [A; C] Q [A; C]^T`
/// with `Shat` from [`SupplyRate::dualize`].
///
/// For `Q = P^{-1} > 0` this matrix is PSD exactly when the primal
/// [`dissipation_matrix`] with storage `P` is PSD.
pub fn dual_dissipation_matrix(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    q: &SymMatrix,
    s_hat: &SymMatrix,
) -> Result<SymMatrix> {
    let n = a.nrows();
    let p = c.nrows();
    let m = b.ncols();
    check_system_dims(a, b, c, d, m, p)?;
    if q.dim() != n || s_hat.dim() != p + m {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{} (expected {n}) and dual supply is {}x{} (expected {})",
            q.dim(),
            q.dim(),
            s_hat.dim(),
            s_hat.dim(),
            p + m
        )));
    }
    let mut lyap = DMatrix::zeros(n + p, n + p);
    lyap.view_mut((0, 0), (n, n)).copy_from(q.matrix());
    let mut port = DMatrix::zeros(p + m, n + p);
    for i in 0..p {
        port[(i, n + i)] = 1.0;
    }
    port.view_mut((p, 0), (m, n)).copy_from(&b.transpose());
    port.view_mut((p, n), (m, p)).copy_from(&d.transpose());
    let mut ac = DMatrix::zeros(n + p, n);
    ac.view_mut((0, 0), (n, n)).copy_from(a);
    ac.view_mut((n, 0), (p, n)).copy_from(c);
    let f = lyap + port.transpose() * s_hat.matrix() * port - &ac * q.matrix() * ac.transpose();
    Ok(SymMatrix::symmetrize(f))
}

/// Result of [`analyze_dissipativity`].
pub struct DissipativityAnalysis {
    pub status: SolveStatus,
    /// Storage function, present on a feasible verdict.
    pub storage: Option<SymMatrix>,
    /// Optimal feasibility margin of the tightened program.
    pub margin: Option<f64>,
    /// Relative PSD margin of the nonstrict constraints at the solution.
    pub recheck_margin: Option<f64>,
}

/// Decides dissipativity of a known model by margin maximisation:
/// `max t` subject to `F(P) >= t I`, `P >= t I`, `P <= cap I`, `t <= 1`.
///
/// Feasible when the nonstrict constraints hold at the optimum up to a
/// relative margin of `-1e-9` (this accepts boundary instances that admit no
/// strictly feasible point); infeasible on a solver certificate or a clearly
/// negative optimal margin; undecided otherwise.
pub fn analyze_dissipativity(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    d: &DMatrix<f64>,
    supply: &SupplyRate,
    backend: &dyn SdpBackend,
) -> Result<DissipativityAnalysis> {
    let n = check_system_dims(a, b, c, d, supply.m, supply.p)?;
    let mut prob = LmiProblem::new();
    let p_var = prob.add_symmetric("P", n);
    let t_var = prob.add_scalar("t", None, Some(1.0));
    let (a_c, b_c, c_c, d_c) = (a.clone(), b.clone(), c.clone(), d.clone());
    let supply_c = supply.clone();
    let dim = n + supply.m;
    prob.require_psd(
        "dissipation",
        Box::new(move |asg| {
            let p = asg.sym(p_var);
            let f = dissipation_matrix(&a_c, &b_c, &c_c, &d_c, &p, &supply_c).unwrap();
            f.into_inner() - DMatrix::identity(dim, dim) * asg.scalar(t_var)
        }),
    );
    prob.require_psd(
        "storage psd",
        Box::new(move |asg| asg.matrix(p_var) - DMatrix::identity(n, n) * asg.scalar(t_var)),
    );
    prob.require_psd(
        "storage cap",
        Box::new(move |asg| DMatrix::identity(n, n) * STORAGE_CAP - asg.matrix(p_var)),
    );
    prob.maximize(vec![(t_var, 1.0)]);

    let out = sdpsolve::solve(&prob, backend)?;
    match out.status {
        SolveStatus::Infeasible => Ok(DissipativityAnalysis {
            status: SolveStatus::Infeasible,
            storage: None,
            margin: None,
            recheck_margin: None,
        }),
        _ => {
            let Some(asg) = out.assignment else {
                return Ok(DissipativityAnalysis {
                    status: SolveStatus::Undecided,
                    storage: None,
                    margin: None,
                    recheck_margin: None,
                });
            };
            let p = asg.sym(p_var);
            let t = asg.scalar(t_var);
            let f = dissipation_matrix(a, b, c, d, &p, supply)?;
            let recheck = (f.min_eig() / f.spectral_radius().max(1.0))
                .min(p.min_eig() / p.spectral_radius().max(1.0));
            let status = if recheck >= -MARGIN_BAND {
                SolveStatus::Feasible
            } else if t <= -MARGIN_BAND {
                SolveStatus::Infeasible
            } else {
                SolveStatus::Undecided
            };
            Ok(DissipativityAnalysis {
                status,
                storage: if status == SolveStatus::Feasible {
                    Some(p)
                } else {
                    None
                },
                margin: Some(t),
                recheck_margin: Some(recheck),
            })
        }
    }
}
