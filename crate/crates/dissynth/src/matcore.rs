//! Dense symmetric-matrix utilities.
//!
//! Everything downstream (QMI sets, LMI assembly, verification) leans on the
//! tolerance conventions fixed here: eigenvalue zero decisions are relative to
//! `max(1, spectral radius)` and rank decisions cut singular values below
//! `RANK_TOL * sigma_max`.

use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Relative symmetry tolerance accepted by [`SymMatrix`] constructors.
pub const SYM_TOL: f64 = 1e-9;
/// Relative eigenvalue zero-threshold, scaled by `max(1, spectral radius)`.
pub const ZERO_TOL: f64 = 1e-9;
/// Singular values below `RANK_TOL * sigma_max` are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

/// A real symmetric matrix. Constructors symmetrise via `(A + A^T)/2` when the
/// asymmetry is within tolerance and reject otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

/// Eigenvalue sign counts `(neg, zero, pos)` of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub neg: usize,
    pub zero: usize,
    pub pos: usize,
}

impl Inertia {
    pub fn total(&self) -> usize {
        self.neg + self.zero + self.pos
    }
}

impl SymMatrix {
    /// Builds a symmetric matrix, checking symmetry at the default tolerance.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::new_with_tol(m, SYM_TOL)
    }

    /// Builds a symmetric matrix with an explicit relative symmetry tolerance.
    pub fn new_with_tol(m: DMatrix<f64>, sym_tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "symmetric matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let max_abs = m.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        let max_asym = (&m - m.transpose())
            .iter()
            .fold(0.0f64, |a, x| a.max(x.abs()));
        let tol = sym_tol * (1.0 + max_abs);
        if max_asym > tol {
            return Err(Error::NotSymmetric { max_asym, tol });
        }
        Ok(Self::symmetrize(m))
    }

    /// Symmetrises `(A + A^T)/2` unconditionally. For results of symmetric
    /// arithmetic where drift is round-off only.
    pub fn symmetrize(m: DMatrix<f64>) -> Self {
        let s = (&m + m.transpose()) * 0.5;
        Self { m: s }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.m
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> DVector<f64> {
        let mut ev: Vec<f64> = self
            .m
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        DVector::from_vec(ev)
    }

    /// Smallest eigenvalue; `+inf` for the 0x0 matrix.
    pub fn min_eig(&self) -> f64 {
        if self.dim() == 0 {
            return f64::INFINITY;
        }
        self.eigenvalues()[0]
    }

    /// Largest eigenvalue; `-inf` for the 0x0 matrix.
    pub fn max_eig(&self) -> f64 {
        if self.dim() == 0 {
            return f64::NEG_INFINITY;
        }
        let ev = self.eigenvalues();
        ev[ev.len() - 1]
    }

    /// Spectral radius.
    pub fn spectral_radius(&self) -> f64 {
        if self.dim() == 0 {
            return 0.0;
        }
        self.eigenvalues().iter().fold(0.0f64, |a, x| a.max(x.abs()))
    }

    /// Counts eigenvalues below `-zero_tol*s`, within `±zero_tol*s` and above
    /// `zero_tol*s`, where `s = max(1, spectral radius)`.
    pub fn inertia(&self, zero_tol: f64) -> Inertia {
        let s = self.spectral_radius().max(1.0);
        let thr = zero_tol * s;
        let mut inertia = Inertia {
            neg: 0,
            zero: 0,
            pos: 0,
        };
        for &lambda in self.eigenvalues().iter() {
            if lambda < -thr {
                inertia.neg += 1;
            } else if lambda > thr {
                inertia.pos += 1;
            } else {
                inertia.zero += 1;
            }
        }
        inertia
    }

    /// `lambda_min >= -tol * max(1, ||A||)` with the spectral norm.
    pub fn is_psd(&self, tol: f64) -> bool {
        if self.dim() == 0 {
            return true;
        }
        self.min_eig() >= -tol * self.spectral_radius().max(1.0)
    }

    pub fn is_nsd(&self, tol: f64) -> bool {
        if self.dim() == 0 {
            return true;
        }
        self.max_eig() <= tol * self.spectral_radius().max(1.0)
    }

    /// Strict positive definiteness at tolerance.
    pub fn is_pd(&self, tol: f64) -> bool {
        if self.dim() == 0 {
            return true;
        }
        self.min_eig() > tol * self.spectral_radius().max(1.0)
    }

    pub fn is_nd(&self, tol: f64) -> bool {
        if self.dim() == 0 {
            return true;
        }
        self.max_eig() < -tol * self.spectral_radius().max(1.0)
    }

    /// Symmetric PSD square root. Eigenvalues in `[-clamp_tol*s, 0)` are
    /// clamped to zero; more negative ones are an error.
    pub fn sqrt_psd(&self) -> Result<DMatrix<f64>> {
        let s = self.spectral_radius().max(1.0);
        let clamp = ZERO_TOL * s;
        let eig = self.m.clone().symmetric_eigen();
        let mut d = DVector::zeros(self.dim());
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda < -clamp {
                return Err(Error::Precondition(format!(
                    "matrix is not PSD: eigenvalue {lambda:.3e}"
                )));
            }
            d[i] = lambda.max(0.0).sqrt();
        }
        let q = &eig.eigenvectors;
        Ok(SymMatrix::symmetrize(q * DMatrix::from_diagonal(&d) * q.transpose()).into_inner())
    }

    /// Inverse of a positive definite matrix via eigendecomposition.
    pub fn inv_pd(&self) -> Result<SymMatrix> {
        let s = self.spectral_radius().max(1.0);
        let eig = self.m.clone().symmetric_eigen();
        let mut d = DVector::zeros(self.dim());
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= ZERO_TOL * s {
                return Err(Error::Precondition(format!(
                    "matrix is not positive definite: eigenvalue {lambda:.3e}"
                )));
            }
            d[i] = 1.0 / lambda;
        }
        let q = &eig.eigenvectors;
        Ok(SymMatrix::symmetrize(
            q * DMatrix::from_diagonal(&d) * q.transpose(),
        ))
    }

    /// `(-A)^{-1/2}`-style helper: inverse square root of a PD matrix.
    pub fn inv_sqrt_pd(&self) -> Result<DMatrix<f64>> {
        let s = self.spectral_radius().max(1.0);
        let eig = self.m.clone().symmetric_eigen();
        let mut d = DVector::zeros(self.dim());
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda <= ZERO_TOL * s {
                return Err(Error::Precondition(format!(
                    "matrix is not positive definite: eigenvalue {lambda:.3e}"
                )));
            }
            d[i] = 1.0 / lambda.sqrt();
        }
        let q = &eig.eigenvectors;
        Ok(SymMatrix::symmetrize(q * DMatrix::from_diagonal(&d) * q.transpose()).into_inner())
    }

    /// Orthonormal basis of the numerical kernel (eigenvalues within
    /// `tol * max(1, spectral radius)` of zero).
    pub fn kernel_basis(&self, tol: f64) -> Vec<DVector<f64>> {
        let s = self.spectral_radius().max(1.0);
        let eig = self.m.clone().symmetric_eigen();
        let mut basis = Vec::new();
        for (i, &lambda) in eig.eigenvalues.iter().enumerate() {
            if lambda.abs() <= tol * s {
                basis.push(eig.eigenvectors.column(i).into_owned());
            }
        }
        basis
    }
}

/// Moore-Penrose pseudo-inverse with singular-value cutoff `RANK_TOL * sigma_max`.
pub fn pseudo_inverse(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let svd = a.clone().svd(true, true);
    let sigma_max = svd.singular_values.iter().fold(0.0f64, |m, s| m.max(*s));
    if sigma_max == 0.0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    let p = svd
        .pseudo_inverse(RANK_TOL * sigma_max)
        .expect("pseudo_inverse with positive cutoff cannot fail");
    // The SVD iteration occasionally mis-converges on exactly rank-deficient
    // inputs, producing orthogonal factors that do not reproduce the matrix.
    // Detect that through the first Penrose identity and fall back to a
    // Gram-matrix eigendecomposition, which is robust for such inputs.
    let scale = a.norm().max(1.0);
    if (a * &p * a - a).norm() <= 1e-8 * scale {
        return p;
    }
    pseudo_inverse_via_gram(a, sigma_max)
}

/// Pseudo-inverse through the eigendecomposition of the thin Gram matrix.
/// Squares the condition number, so the rank cutoff is widened accordingly;
/// used only as a fallback when the direct SVD route fails validation.
fn pseudo_inverse_via_gram(a: &DMatrix<f64>, sigma_max: f64) -> DMatrix<f64> {
    let wide = a.nrows() <= a.ncols();
    let gram = if wide {
        a * a.transpose()
    } else {
        a.transpose() * a
    };
    let eig = SymMatrix::symmetrize(gram).matrix().clone().symmetric_eigen();
    let cutoff = (RANK_TOL * sigma_max * sigma_max).max(1e-13 * sigma_max * sigma_max);
    let k = eig.eigenvalues.len();
    let mut core = DMatrix::zeros(k, k);
    for i in 0..k {
        let lambda = eig.eigenvalues[i];
        if lambda > cutoff {
            core[(i, i)] = 1.0 / lambda;
        }
    }
    let u = &eig.eigenvectors;
    let ginv = u * core * u.transpose();
    if wide {
        a.transpose() * ginv
    } else {
        ginv * a.transpose()
    }
}

/// Numerical rank by singular-value cutoff.
pub fn rank(a: &DMatrix<f64>) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().fold(0.0f64, |m, s| m.max(*s));
    if sigma_max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > RANK_TOL * sigma_max).count()
}

/// Kernel dimension of a general rectangular matrix.
pub fn kernel_dim(a: &DMatrix<f64>) -> usize {
    a.ncols() - rank(a)
}

/// Generalised Schur complement `A11 - A12 A22^† A21` with `A21 = A12^T`.
pub fn schur_complement(
    a11: &SymMatrix,
    a12: &DMatrix<f64>,
    a22: &SymMatrix,
) -> Result<SymMatrix> {
    if a12.nrows() != a11.dim() || a12.ncols() != a22.dim() {
        return Err(Error::DimensionMismatch(format!(
            "Schur complement blocks: A11 {0}x{0}, A12 {1}x{2}, A22 {3}x{3}",
            a11.dim(),
            a12.nrows(),
            a12.ncols(),
            a22.dim()
        )));
    }
    let pinv = pseudo_inverse(a22.matrix());
    Ok(SymMatrix::symmetrize(
        a11.matrix() - a12 * pinv * a12.transpose(),
    ))
}

/// `ker A22 ⊆ ker A12`: `||A12 v|| <= tol` for every unit kernel basis vector
/// `v` of `A22`, with the kernel cut at the singular-value threshold.
pub fn kernel_contained(a22: &SymMatrix, a12: &DMatrix<f64>, tol: f64) -> bool {
    let scale = a12.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a22.kernel_basis(RANK_TOL)
        .iter()
        .all(|v| (a12 * v).norm() <= tol * scale)
}

/// Inertia additivity bound: with `nu` and `nu_hat` the negative-eigenvalue
/// counts of `H` and `M^T H M`, verifies `nu + (m - n) - dim(ker M) <= nu_hat`.
/// Used as a test oracle; a `false` return indicates a tolerance bug.
pub fn inertia_lower_bound(h: &SymMatrix, m: &DMatrix<f64>, zero_tol: f64) -> Result<bool> {
    let n = h.dim();
    if m.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "H is {n}x{n} but M has {} rows",
            m.nrows()
        )));
    }
    let cols = m.ncols();
    let nu = h.inertia(zero_tol).neg as i64;
    let mhm = SymMatrix::symmetrize(m.transpose() * h.matrix() * m);
    let nu_hat = mhm.inertia(zero_tol).neg as i64;
    let kdim = kernel_dim(m) as i64;
    Ok(nu + (cols as i64 - n as i64) - kdim <= nu_hat)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn dm(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(rows, cols, data)
    }

    fn random_sym(n: usize, rng: &mut impl Rng) -> SymMatrix {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        SymMatrix::symmetrize(a)
    }

    fn random_orthogonal(n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        a.qr().q()
    }

    #[test]
    fn constructor_rejects_asymmetric() {
        let a = dm(2, 2, &[1.0, 2.0, 0.0, 1.0]);
        assert!(matches!(
            SymMatrix::new(a),
            Err(Error::NotSymmetric { .. })
        ));
    }

    #[test]
    fn constructor_symmetrizes_within_tolerance() {
        let a = dm(2, 2, &[1.0, 1.0 + 1e-12, 1.0, 1.0]);
        let s = SymMatrix::new(a).unwrap();
        assert_eq!(s.matrix()[(0, 1)], s.matrix()[(1, 0)]);
    }

    #[test]
    fn inertia_examples() {
        let swap = SymMatrix::new(dm(2, 2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        assert_eq!(
            swap.inertia(ZERO_TOL),
            Inertia { neg: 1, zero: 0, pos: 1 }
        );
        // diag(gamma^2 I_2, -I_1) with gamma = 1
        let d = SymMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![
            1.0, 1.0, -1.0,
        ])))
        .unwrap();
        assert_eq!(d.inertia(ZERO_TOL), Inertia { neg: 1, zero: 0, pos: 2 });
        let z = SymMatrix::zeros(2);
        assert_eq!(z.inertia(ZERO_TOL), Inertia { neg: 0, zero: 2, pos: 0 });
    }

    #[test]
    fn psd_examples() {
        assert!(SymMatrix::identity(3).is_psd(1e-9));
        let ind = SymMatrix::new(dm(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(!ind.is_psd(1e-9));
        let semi = SymMatrix::new(dm(2, 2, &[0.0, 0.0, 0.0, 2.0])).unwrap();
        assert!(semi.is_psd(1e-9)); // eigenvalues {0, 2}
    }

    #[test]
    fn pseudo_inverse_examples() {
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((pseudo_inverse(&id) - &id).norm() < 1e-12);
        let z = DMatrix::<f64>::zeros(2, 3);
        let zp = pseudo_inverse(&z);
        assert_eq!((zp.nrows(), zp.ncols()), (3, 2));
        assert_eq!(zp.norm(), 0.0);
        let a = dm(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let expect = dm(2, 2, &[0.5, 0.0, 0.0, 0.0]);
        assert!((pseudo_inverse(&a) - expect).norm() < 1e-12);
    }

    #[test]
    fn pseudo_inverse_penrose_identities_on_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            // rank-2 5x4 matrix
            let b = DMatrix::from_fn(5, 2, |_, _| rng.random_range(-1.0..1.0));
            let c = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0));
            let a = b * c;
            let p = pseudo_inverse(&a);
            let scale = a.norm().max(1.0);
            assert!((&a * &p * &a - &a).norm() <= 1e-10 * scale);
            assert!((&p * &a * &p - &p).norm() <= 1e-10 * p.norm().max(1.0));
        }
    }

    #[test]
    fn schur_complement_examples() {
        let i2 = SymMatrix::identity(2);
        let sc = schur_complement(&i2, &DMatrix::zeros(2, 2), &i2).unwrap();
        assert!((sc.matrix() - DMatrix::identity(2, 2)).norm() < 1e-14);

        let a11 = SymMatrix::new(dm(1, 1, &[2.0])).unwrap();
        let a22 = SymMatrix::new(dm(1, 1, &[1.0])).unwrap();
        let sc = schur_complement(&a11, &dm(1, 1, &[1.0]), &a22).unwrap();
        assert!((sc.matrix()[(0, 0)] - 1.0).abs() < 1e-14);

        // zero A22 with zero coupling: pseudo-inverse of zero is zero
        let a22 = SymMatrix::zeros(2);
        let sc = schur_complement(&i2, &DMatrix::zeros(2, 2), &a22).unwrap();
        assert!((sc.matrix() - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn schur_complement_matches_brute_force_on_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let full = random_sym(6, &mut rng);
            let m = full.matrix();
            let a11 = SymMatrix::symmetrize(m.view((0, 0), (3, 3)).into_owned());
            let a12 = m.view((0, 3), (3, 3)).into_owned();
            let a22 = SymMatrix::symmetrize(m.view((3, 3), (3, 3)).into_owned());
            let sc = schur_complement(&a11, &a12, &a22).unwrap();
            // independent route: explicit SVD-based inverse
            let svd = a22.matrix().clone().svd(true, true);
            let smax = svd.singular_values.max();
            let pinv = svd.pseudo_inverse(RANK_TOL * smax).unwrap();
            let brute = a11.matrix() - &a12 * pinv * a12.transpose();
            let scale = brute.norm().max(1.0);
            // Both routes apply a small-singular-value cutoff, so agreement is
            // limited by the conditioning of A22 rather than machine epsilon.
            assert!((sc.matrix() - brute).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn kernel_containment_examples() {
        let neg = SymMatrix::new(dm(1, 1, &[-1.0])).unwrap();
        assert!(kernel_contained(&neg, &dm(1, 1, &[3.0]), 1e-9));
        let z = SymMatrix::zeros(1);
        assert!(kernel_contained(&z, &dm(1, 1, &[0.0]), 1e-9));
        let a22 = SymMatrix::new(dm(2, 2, &[-1.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(!kernel_contained(&a22, &dm(1, 2, &[0.0, 1.0]), 1e-9));
    }

    #[test]
    fn inertia_lower_bound_examples() {
        let h = SymMatrix::new(dm(2, 2, &[-1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(inertia_lower_bound(&h, &DMatrix::identity(2, 2), ZERO_TOL).unwrap());
        let h = SymMatrix::new(dm(2, 2, &[1.0, 0.0, 0.0, -1.0])).unwrap();
        assert!(inertia_lower_bound(&h, &dm(2, 1, &[1.0, 0.0]), ZERO_TOL).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = random_sym(3, &mut rng);
        assert!(inertia_lower_bound(&h, &DMatrix::zeros(3, 2), ZERO_TOL).unwrap());
    }

    #[test]
    fn inertia_lower_bound_holds_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.random_range(1..6);
            let m = rng.random_range(1..6);
            let h = random_sym(n, &mut rng);
            let mm = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
            assert!(inertia_lower_bound(&h, &mm, ZERO_TOL).unwrap());
        }
    }

    #[test]
    fn inertia_invariant_under_congruence_by_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.random_range(2..7);
            let a = random_sym(n, &mut rng);
            let q = random_orthogonal(n, &mut rng);
            let b = SymMatrix::symmetrize(q.transpose() * a.matrix() * &q);
            let ia = a.inertia(ZERO_TOL);
            assert_eq!(ia.total(), n);
            assert_eq!(ia, b.inertia(ZERO_TOL));
        }
    }
}
