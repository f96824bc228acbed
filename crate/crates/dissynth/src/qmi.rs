//! Sets induced by quadratic matrix inequalities.
//!
//! For a symmetric `(q+r) x (q+r)` matrix `Pi` with declared block split, the
//! set of interest is `Z_r(Pi) = { Z : [I; Z]^T Pi [I; Z] >= 0 }`. The module
//! provides Π-class validation (nonemptiness/convexity conditions), membership
//! and boundedness tests, the `Pi_W` projection transform, ellipsoid sampling
//! of bounded sets and the matrix S-lemma containment certificate.

use nalgebra::DMatrix;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::matcore::{self, SymMatrix, ZERO_TOL};
use crate::par::mix_seed;
use crate::{Error, Result};

/// Absolute PSD tolerance for S-lemma certificates after max-entry
/// normalisation of both forms.
pub const PSD_TOL: f64 = 1e-8;

/// A symmetric matrix with a declared `(q, r)` block split.
#[derive(Debug, Clone)]
pub struct PartitionedForm {
    mat: SymMatrix,
    q: usize,
    r: usize,
}

/// Outcome of the Π-class conditions, evaluated separately.
#[derive(Debug, Clone, Copy)]
pub struct PiClassReport {
    /// `Pi_22 <= 0`
    pub pi22_nsd: bool,
    /// `Pi | Pi_22 >= 0`
    pub schur_psd: bool,
    /// `ker Pi_22 ⊆ ker Pi_12`
    pub kernel_ok: bool,
    /// strict `Pi_22 < 0`
    pub pi22_nd: bool,
    /// conjunction of the three nonstrict conditions
    pub in_pi_class: bool,
}

/// A certified S-lemma multiplier.
#[derive(Debug, Clone, Copy)]
pub struct SlemmaCertificate {
    pub alpha: f64,
    /// `lambda_min(M - alpha N)` at the certified multiplier.
    pub residual_min_eig: f64,
}

/// Verdict of the S-lemma search.
#[derive(Debug, Clone, Copy)]
pub enum SlemmaOutcome {
    Feasible(SlemmaCertificate),
    Infeasible {
        /// best multiplier found by the scalar search
        best_alpha: f64,
        /// `lambda_min(M - alpha N)` at that multiplier (normalised scale)
        best_residual: f64,
    },
}

/// Options for the S-lemma scalar search.
#[derive(Debug, Clone, Copy)]
pub struct SlemmaOptions {
    /// Initial right bracket for the multiplier (on the normalised scale).
    pub alpha_max: f64,
    pub psd_tol: f64,
}

impl Default for SlemmaOptions {
    fn default() -> Self {
        Self {
            alpha_max: 1e6,
            psd_tol: PSD_TOL,
        }
    }
}

impl PartitionedForm {
    pub fn new(mat: SymMatrix, q: usize, r: usize) -> Result<Self> {
        if mat.dim() != q + r {
            return Err(Error::DimensionMismatch(format!(
                "partitioned form: matrix is {}x{} but split is ({q}, {r})",
                mat.dim(),
                mat.dim()
            )));
        }
        if q == 0 || r == 0 {
            return Err(Error::InvalidInput(
                "partitioned form requires positive block sizes".into(),
            ));
        }
        Ok(Self { mat, q, r })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn matrix(&self) -> &SymMatrix {
        &self.mat
    }

    pub fn pi11(&self) -> SymMatrix {
        SymMatrix::symmetrize(self.mat.matrix().view((0, 0), (self.q, self.q)).into_owned())
    }

    pub fn pi12(&self) -> DMatrix<f64> {
        self.mat.matrix().view((0, self.q), (self.q, self.r)).into_owned()
    }

    pub fn pi21(&self) -> DMatrix<f64> {
        self.pi12().transpose()
    }

    pub fn pi22(&self) -> SymMatrix {
        SymMatrix::symmetrize(
            self.mat
                .matrix()
                .view((self.q, self.q), (self.r, self.r))
                .into_owned(),
        )
    }

    /// Generalised Schur complement `Pi | Pi_22`.
    pub fn schur_complement(&self) -> SymMatrix {
        matcore::schur_complement(&self.pi11(), &self.pi12(), &self.pi22())
            .expect("block dimensions are consistent by construction")
    }

    /// Evaluates the Π-class conditions (3) separately.
    pub fn validate_pi_class(&self, tol: f64) -> PiClassReport {
        let pi22 = self.pi22();
        let pi22_nsd = pi22.is_nsd(tol);
        let pi22_nd = pi22.is_nd(tol);
        let schur_psd = self.schur_complement().is_psd(tol);
        let kernel_ok = matcore::kernel_contained(&pi22, &self.pi12(), tol.max(1e-12));
        PiClassReport {
            pi22_nsd,
            schur_psd,
            kernel_ok,
            pi22_nd,
            in_pi_class: pi22_nsd && schur_psd && kernel_ok,
        }
    }

    /// Value matrix `[I; Z]^T Pi [I; Z]` for an `r x q` candidate.
    pub fn membership_value(&self, z: &DMatrix<f64>) -> Result<SymMatrix> {
        if z.nrows() != self.r || z.ncols() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "membership candidate must be {}x{}, got {}x{}",
                self.r,
                self.q,
                z.nrows(),
                z.ncols()
            )));
        }
        let mut stacked = DMatrix::zeros(self.q + self.r, self.q);
        stacked
            .view_mut((0, 0), (self.q, self.q))
            .copy_from(&DMatrix::identity(self.q, self.q));
        stacked.view_mut((self.q, 0), (self.r, self.q)).copy_from(z);
        Ok(SymMatrix::symmetrize(
            stacked.transpose() * self.mat.matrix() * stacked,
        ))
    }

    /// `Z ∈ Z_r(Pi)` at tolerance.
    pub fn z_membership(&self, z: &DMatrix<f64>, tol: f64) -> Result<bool> {
        Ok(self.membership_value(z)?.is_psd(tol))
    }

    /// `Z_r(Pi)` is bounded iff `Pi_22 < 0`; requires Π-class membership.
    pub fn is_bounded(&self) -> Result<bool> {
        let report = self.validate_pi_class(ZERO_TOL);
        if !report.in_pi_class {
            return Err(Error::Precondition(
                "boundedness test requires the form to be in the Π-class".into(),
            ));
        }
        Ok(report.pi22_nd)
    }

    /// Projection transform `Pi_W = diag(W^T, I_r) Pi diag(W, I_r)` with split
    /// `(p, r)`. Requires `W` of full column rank or nonsingular `Pi_22`.
    pub fn transform_w(&self, w: &DMatrix<f64>) -> Result<PartitionedForm> {
        if w.nrows() != self.q {
            return Err(Error::DimensionMismatch(format!(
                "projection factor must have {} rows, got {}",
                self.q,
                w.nrows()
            )));
        }
        let full_col_rank = matcore::rank(w) == w.ncols();
        let pi22 = self.pi22();
        let pi22_nonsingular = pi22.inertia(ZERO_TOL).zero == 0;
        if !full_col_rank && !pi22_nonsingular {
            return Err(Error::Precondition(
                "projection requires W of full column rank or nonsingular Pi_22; \
                 both hypotheses fail"
                    .into(),
            ));
        }
        let p = w.ncols();
        let mut outer = DMatrix::zeros(self.q + self.r, p + self.r);
        outer.view_mut((0, 0), (self.q, p)).copy_from(w);
        outer
            .view_mut((self.q, p), (self.r, self.r))
            .copy_from(&DMatrix::identity(self.r, self.r));
        let mat = SymMatrix::symmetrize(outer.transpose() * self.mat.matrix() * outer);
        PartitionedForm::new(mat, p, self.r)
    }

    /// Center `Z_c = -Pi_22^{-1} Pi_21` of a bounded set.
    pub fn center(&self) -> Result<DMatrix<f64>> {
        let pi22 = self.pi22();
        if !pi22.is_nd(ZERO_TOL) {
            return Err(Error::Precondition(
                "center requires Pi_22 < 0 (bounded set)".into(),
            ));
        }
        let neg_inv = SymMatrix::symmetrize(-pi22.matrix()).inv_pd()?;
        Ok(neg_inv.matrix() * self.pi21())
    }

    /// Draws `count` members of a bounded `Z_r(Pi)` via the ellipsoid
    /// parametrisation `Z = Z_c + (-Pi_22)^{-1/2} V (Pi|Pi_22)^{1/2}` with
    /// `||V||_2 <= 1`. Deterministic per seed. The first draw is the center
    /// and every tenth draw afterwards sits on the boundary.
    pub fn sample_z(&self, count: usize, seed: u64) -> Result<Vec<DMatrix<f64>>> {
        let report = self.validate_pi_class(ZERO_TOL);
        if !report.in_pi_class || !report.pi22_nd {
            return Err(Error::Precondition(
                "sampling requires a Π-class form with Pi_22 < 0".into(),
            ));
        }
        let z_c = self.center()?;
        let left = SymMatrix::symmetrize(-self.pi22().matrix()).inv_sqrt_pd()?;
        let right = self.schur_complement().sqrt_psd()?;
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            if i == 0 {
                out.push(z_c.clone());
                continue;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
            let v = random_contraction(self.r, self.q, i % 10 == 1, &mut rng);
            out.push(&z_c + &left * v * &right);
        }
        Ok(out)
    }
}

/// Random `rows x cols` matrix with spectral norm exactly 1 (boundary) or
/// uniform in `[0, 1)`.
fn random_contraction(
    rows: usize,
    cols: usize,
    boundary: bool,
    rng: &mut impl Rng,
) -> DMatrix<f64> {
    let g: DMatrix<f64> = DMatrix::from_fn(rows, cols, |_, _| {
        Distribution::<f64>::sample(&rand_distr::StandardNormal, rng)
    });
    let sigma_max: f64 = g.clone().svd(false, false).singular_values.max();
    if sigma_max == 0.0 {
        return DMatrix::zeros(rows, cols);
    }
    let target: f64 = if boundary { 1.0 } else { rng.random_range(0.0..1.0) };
    g * (target / sigma_max)
}

/// Matrix S-lemma search: finds `alpha >= 0` with `M - alpha N >= 0` by
/// maximising the concave function `g(alpha) = lambda_min(M - alpha N)` with
/// golden-section search over an adaptively expanded bracket.
///
/// Requires `N` in the Π-class with at least one positive eigenvalue; under
/// those hypotheses feasibility is equivalent to `Z_r(N) ⊆ Z_r(M)`.
pub fn slemma(
    m: &PartitionedForm,
    n: &PartitionedForm,
    opts: &SlemmaOptions,
) -> Result<SlemmaOutcome> {
    if m.q() != n.q() || m.r() != n.r() {
        return Err(Error::DimensionMismatch(format!(
            "S-lemma forms must share the split: ({}, {}) vs ({}, {})",
            m.q(),
            m.r(),
            n.q(),
            n.r()
        )));
    }
    let report = n.validate_pi_class(ZERO_TOL);
    if !report.in_pi_class {
        return Err(Error::Hypothesis(format!(
            "S-lemma requires N in the Π-class (N22 nsd: {}, Schur psd: {}, kernel: {})",
            report.pi22_nsd, report.schur_psd, report.kernel_ok
        )));
    }
    if n.matrix().max_eig() <= ZERO_TOL * n.matrix().spectral_radius().max(1.0) {
        return Err(Error::Hypothesis(
            "S-lemma requires N to have at least one positive eigenvalue".into(),
        ));
    }

    let m_scale = max_abs(m.matrix().matrix()).max(f64::MIN_POSITIVE);
    let n_scale = max_abs(n.matrix().matrix()).max(f64::MIN_POSITIVE);
    let mn = m.matrix().matrix() / m_scale;
    let nn = n.matrix().matrix() / n_scale;
    let g = |alpha: f64| SymMatrix::symmetrize(&mn - &nn * alpha).min_eig();

    // expand the bracket while g is still increasing at the right endpoint;
    // safe because g is concave
    let mut hi = opts.alpha_max;
    while g(hi) > g(hi * 0.999) && hi < 1e12 {
        hi *= 2.0;
    }
    let (alpha_norm, g_star) = golden_section_max(g, 0.0, hi);
    let alpha = alpha_norm * m_scale / n_scale;
    let residual =
        SymMatrix::symmetrize(m.matrix().matrix() - n.matrix().matrix() * alpha).min_eig();
    if g_star >= -opts.psd_tol {
        Ok(SlemmaOutcome::Feasible(SlemmaCertificate {
            alpha,
            residual_min_eig: residual,
        }))
    } else {
        Ok(SlemmaOutcome::Infeasible {
            best_alpha: alpha,
            best_residual: g_star,
        })
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Golden-section maximisation of a concave scalar function on `[lo, hi]`.
fn golden_section_max(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut ga = g(a);
    let mut gb = g(b);
    for _ in 0..200 {
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
        if ga >= gb {
            hi = b;
            b = a;
            gb = ga;
            a = hi - INV_PHI * (hi - lo);
            ga = g(a);
        } else {
            lo = a;
            a = b;
            ga = gb;
            b = lo + INV_PHI * (hi - lo);
            gb = g(b);
        }
    }
    let x = 0.5 * (lo + hi);
    // the endpoints matter when the maximiser sits at the bracket edge
    let candidates = [(x, g(x)), (lo, g(lo)), (hi, g(hi))];
    candidates
        .into_iter()
        .max_by(|p, q| p.1.partial_cmp(&q.1).unwrap())
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn diag_form(entries: &[f64], q: usize, r: usize) -> PartitionedForm {
        let m = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_row_slice(entries))).unwrap();
        PartitionedForm::new(m, q, r).unwrap()
    }

    fn random_pi_class_bounded(q: usize, r: usize, rng: &mut impl Rng) -> PartitionedForm {
        // Pi = [[ S + C' W C, C' W],[W C, -W]] with W > 0, S >= 0 gives
        // pi22 = -W < 0, schur = S >= 0, center C.
        let gw = DMatrix::from_fn(r, r, |_, _| rng.random_range(-1.0..1.0));
        let w = &gw * gw.transpose() + DMatrix::identity(r, r) * 0.1;
        let gs = DMatrix::from_fn(q, q, |_, _| rng.random_range(-1.0..1.0));
        let s = &gs * gs.transpose();
        let c = DMatrix::from_fn(r, q, |_, _| rng.random_range(-1.0..1.0));
        let mut pi = DMatrix::zeros(q + r, q + r);
        pi.view_mut((0, 0), (q, q))
            .copy_from(&(&s + c.transpose() * &w * &c));
        pi.view_mut((0, q), (q, r)).copy_from(&(c.transpose() * &w));
        pi.view_mut((q, 0), (r, q)).copy_from(&(&w * &c));
        pi.view_mut((q, q), (r, r)).copy_from(&(-&w));
        PartitionedForm::new(SymMatrix::symmetrize(pi), q, r).unwrap()
    }

    #[test]
    fn pi_class_examples() {
        let ok = diag_form(&[1.0, 1.0, -1.0], 2, 1);
        let rep = ok.validate_pi_class(ZERO_TOL);
        assert!(rep.in_pi_class && rep.pi22_nd);

        let bad = diag_form(&[-1.0, -1.0, -1.0], 2, 1);
        assert!(!bad.validate_pi_class(ZERO_TOL).in_pi_class);

        // noise-model form diag(T I_d, -I_T) with T = 30, d = 1
        let t = 30;
        let mut entries = vec![30.0];
        entries.extend(std::iter::repeat(-1.0).take(t));
        let phi = diag_form(&entries, 1, t);
        let rep = phi.validate_pi_class(ZERO_TOL);
        assert!(rep.in_pi_class && rep.pi22_nd);
        assert!(phi.is_bounded().unwrap());
    }

    #[test]
    fn membership_examples() {
        let pi = diag_form(&[1.0, -1.0], 1, 1);
        assert!(pi.z_membership(&DMatrix::from_element(1, 1, 0.0), 1e-9).unwrap());
        assert!(!pi.z_membership(&DMatrix::from_element(1, 1, 2.0), 1e-9).unwrap());
        // boundary point z = 1: value exactly zero
        assert!(pi.z_membership(&DMatrix::from_element(1, 1, 1.0), 1e-9).unwrap());
    }

    #[test]
    fn boundedness_examples() {
        assert!(diag_form(&[1.0, -1.0], 1, 1).is_bounded().unwrap());
        assert!(!diag_form(&[1.0, 0.0], 1, 1).is_bounded().unwrap());
    }

    #[test]
    fn transform_identity_is_noop() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pi = random_pi_class_bounded(3, 2, &mut rng);
        let w = DMatrix::identity(3, 3);
        let t = pi.transform_w(&w).unwrap();
        assert!((t.matrix().matrix() - pi.matrix().matrix()).norm() < 1e-12);
    }

    #[test]
    fn transform_selects_block() {
        // Pi = diag(I_2, -1), W = [1; 0] -> Pi_W = diag(1, -1)
        let pi = diag_form(&[1.0, 1.0, -1.0], 2, 1);
        let w = DMatrix::from_column_slice(2, 1, &[1.0, 0.0]);
        let t = pi.transform_w(&w).unwrap();
        assert_eq!((t.q(), t.r()), (1, 1));
        let expect = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!((t.matrix().matrix() - expect).norm() < 1e-12);
    }

    #[test]
    fn transform_rejects_when_both_hypotheses_fail() {
        // Pi_22 singular and W rank deficient
        let pi = diag_form(&[1.0, 0.0], 1, 1);
        let w = DMatrix::zeros(1, 1);
        assert!(matches!(pi.transform_w(&w), Err(Error::Precondition(_))));
    }

    #[test]
    fn sampler_in_one_dimension() {
        let pi = diag_form(&[1.0, -1.0], 1, 1);
        let samples = pi.sample_z(50, 9).unwrap();
        assert_eq!(samples[0][(0, 0)], 0.0); // center
        for z in &samples {
            let v = z[(0, 0)];
            assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&v));
        }
        // boundary draws present
        assert!(samples.iter().any(|z| (z[(0, 0)].abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn sampler_degenerate_ellipsoid_returns_center() {
        // schur complement zero: Z(Pi) = {0}
        let pi = diag_form(&[0.0, -1.0], 1, 1);
        let samples = pi.sample_z(5, 1).unwrap();
        for z in &samples {
            assert!(z.norm() < 1e-12);
        }
    }

    #[test]
    fn sampler_rejects_unbounded() {
        let pi = diag_form(&[1.0, 0.0], 1, 1);
        assert!(pi.sample_z(3, 0).is_err());
    }

    #[test]
    fn sampler_soundness_on_random_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for trial in 0..20 {
            let q = rng.random_range(1..4);
            let r = rng.random_range(1..4);
            let pi = random_pi_class_bounded(q, r, &mut rng);
            for z in pi.sample_z(25, trial).unwrap() {
                assert!(pi.z_membership(&z, 1e-8).unwrap());
            }
        }
    }

    #[test]
    fn sampler_is_deterministic_per_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pi = random_pi_class_bounded(2, 2, &mut rng);
        let a = pi.sample_z(10, 77).unwrap();
        let b = pi.sample_z(10, 77).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
        }
    }

    #[test]
    fn projection_soundness_by_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for trial in 0..15 {
            let q = rng.random_range(2..4);
            let r = rng.random_range(1..4);
            let p = rng.random_range(1..=q);
            let pi = random_pi_class_bounded(q, r, &mut rng);
            let w = DMatrix::from_fn(q, p, |_, _| rng.random_range(-1.0..1.0));
            let pw = pi.transform_w(&w).unwrap();
            for z in pi.sample_z(20, 100 + trial).unwrap() {
                assert!(pw.z_membership(&(&z * &w), 1e-7).unwrap());
            }
        }
    }

    #[test]
    fn slemma_scalar_examples() {
        let n = diag_form(&[1.0, -1.0], 1, 1);
        match slemma(&n, &n, &SlemmaOptions::default()).unwrap() {
            SlemmaOutcome::Feasible(cert) => {
                assert!((cert.alpha - 1.0).abs() < 1e-6);
                assert!(cert.residual_min_eig.abs() < 1e-7);
            }
            _ => panic!("expected feasible"),
        }

        let m = diag_form(&[4.0, -1.0], 1, 1);
        match slemma(&m, &n, &SlemmaOptions::default()).unwrap() {
            SlemmaOutcome::Feasible(cert) => {
                assert!(cert.alpha >= 1.0 - 1e-6 && cert.alpha <= 4.0 + 1e-6);
                assert!(cert.residual_min_eig >= -PSD_TOL);
            }
            _ => panic!("expected feasible"),
        }

        let m = diag_form(&[0.25, -1.0], 1, 1);
        assert!(matches!(
            slemma(&m, &n, &SlemmaOptions::default()).unwrap(),
            SlemmaOutcome::Infeasible { .. }
        ));
    }

    #[test]
    fn slemma_rejects_bad_hypotheses() {
        // N not in Π-class
        let m = diag_form(&[1.0, -1.0], 1, 1);
        let bad = diag_form(&[-1.0, -1.0], 1, 1);
        assert!(matches!(slemma(&m, &bad, &SlemmaOptions::default()), Err(Error::Hypothesis(_))));
        // N without a positive eigenvalue
        let flat = diag_form(&[0.0, -1.0], 1, 1);
        assert!(matches!(slemma(&m, &flat, &SlemmaOptions::default()), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn slemma_certificate_implies_sampled_containment() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..10 {
            let n = random_pi_class_bounded(2, 2, &mut rng);
            // guarantee containment: M = alpha0 N + PSD
            let alpha0: f64 = rng.random_range(0.1..3.0);
            let gp = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-0.5..0.5));
            let psd = &gp * gp.transpose();
            let m_mat = SymMatrix::symmetrize(n.matrix().matrix() * alpha0 + psd);
            let m = PartitionedForm::new(m_mat, 2, 2).unwrap();
            let cert = match slemma(&m, &n, &SlemmaOptions::default()).unwrap() {
                SlemmaOutcome::Feasible(c) => c,
                _ => panic!("constructed instance must be feasible"),
            };
            assert!(cert.alpha >= 0.0);
            for z in n.sample_z(20, 500 + trial).unwrap() {
                assert!(m.z_membership(&z, 1e-7).unwrap());
            }
        }
    }

    #[test]
    fn golden_section_matches_grid_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for _ in 0..10 {
            let n = random_pi_class_bounded(4, 4, &mut rng);
            let gm = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
            let m = SymMatrix::symmetrize(&gm + gm.transpose());
            let g = |alpha: f64| SymMatrix::symmetrize(m.matrix() - n.matrix().matrix() * alpha).min_eig();
            let (alpha_star, g_star) = golden_section_max(&g, 0.0, 50.0);
            let grid_best = (0..=5_000)
                .map(|i| g(i as f64 * 1e-2))
                .fold(f64::NEG_INFINITY, f64::max);
            // The search must do at least as well as any grid point.
            assert!(g_star >= grid_best - 1e-7 * (1.0 + grid_best.abs()));
            // And a fine local scan around the reported maximiser must not
            // find a meaningfully better value.
            let local_best = (-1000..=1000)
                .map(|i| g((alpha_star + i as f64 * 1e-6).clamp(0.0, 50.0)))
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(local_best - g_star <= 1e-7 * (1.0 + g_star.abs()));
        }
    }
}
