//! Dense complex linear algebra shared by every module: operator norms,
//! hermitian eigendecompositions, rank-revealing orthonormalization, least
//! squares, and subspace arithmetic.
//!
//! Everything is built on hermitian eigendecompositions (`symmetric_eigen`)
//! rather than bidiagonal SVD: singular values of `m` are recovered as square
//! roots of eigenvalues of `m* m`, which is deterministic and robust for the
//! modest dimensions used here (at most ~1000).

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

pub type C = Complex64;
pub type CMat = DMatrix<C>;
pub type CVec = DVector<C>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const ONE: C = C::new(1.0, 0.0);
pub const ZERO: C = C::new(0.0, 0.0);
pub const I: C = C::new(0.0, 1.0);

/// Relative singular-value cutoff used when deciding numerical rank.
pub const RANK_CUTOFF: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn cr(re: f64) -> C {
    C::new(re, 0.0)
}

/// Operator (spectral) norm: largest singular value of `m`.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    // Largest eigenvalue of m* m, computed on the smaller Gram side.
    let g = if m.nrows() >= m.ncols() {
        m.adjoint() * m
    } else {
        m * m.adjoint()
    };
    let eig = g.symmetric_eigen();
    eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l)).max(0.0).sqrt()
}

/// Frobenius norm.
pub fn fro_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Operator norm of the difference `a - b`.
pub fn diff_norm(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "diff_norm shape mismatch");
    op_norm(&(a - b))
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// How far `m` is from being hermitian, in operator norm.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    op_norm(&(m - m.adjoint()))
}

/// Eigenvalues (ascending) and matching eigenvector columns of a hermitian
/// matrix. The input is symmetrized first so tiny hermiticity defects do not
/// poison the decomposition.
pub fn herm_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let h = (m + m.adjoint()).scale(0.5);
    let rows = h.nrows();
    let eig = h.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(rows, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Smallest eigenvalue of the hermitian part of `m`.
pub fn min_eig_hermitian(m: &CMat) -> f64 {
    let (vals, _) = herm_eigen(m);
    vals.first().copied().unwrap_or(0.0)
}

/// Positive-semidefinite square root of a hermitian PSD matrix; eigenvalues
/// below zero (numerical noise) are clamped.
pub fn psd_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = herm_eigen(m);
    let n = vals.len();
    let mut d = CMat::zeros(n, n);
    for i in 0..n {
        d[(i, i)] = cr(vals[i].max(0.0).sqrt());
    }
    &vecs * d * vecs.adjoint()
}

/// Inner product conjugate-linear in the first argument.
pub fn vdot(a: &CVec, b: &CVec) -> C {
    a.dotc(b)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Orthonormal basis for the column space of `m`, with singular-value cutoff
/// `RANK_CUTOFF * (largest singular value)`.
pub fn column_space(m: &CMat) -> Vec<CVec> {
    let cols: Vec<CVec> = (0..m.ncols()).map(|j| m.column(j).into_owned()).collect();
    orthonormalize(&cols, RANK_CUTOFF)
}

/// Rank-revealing orthonormalization of a list of vectors by modified
/// Gram-Schmidt with reorthogonalization. A vector is kept when its component
/// orthogonal to the earlier ones exceeds `rel_cutoff` times its own norm.
/// Vector-side elimination resolves dependence down to machine precision,
/// unlike Gram-matrix eigenvalues which bottom out near sqrt(epsilon).
pub fn orthonormalize(vecs: &[CVec], rel_cutoff: f64) -> Vec<CVec> {
    if vecs.is_empty() {
        return Vec::new();
    }
    let dim = vecs[0].len();
    let mut span = Span::with_cutoff(dim, rel_cutoff);
    for v in vecs {
        assert_eq!(v.len(), dim, "orthonormalize dimension mismatch");
        span.add(v);
    }
    span.into_basis()
}

/// Incrementally grown orthonormal span: vectors are admitted when their
/// component orthogonal to the current span exceeds `rel_cutoff` times their
/// own norm.
pub struct Span {
    dim: usize,
    basis: Vec<CVec>,
    rel_cutoff: f64,
}

impl Span {
    pub fn new(dim: usize) -> Self {
        Span {
            dim,
            basis: Vec::new(),
            rel_cutoff: RANK_CUTOFF,
        }
    }

    pub fn with_cutoff(dim: usize, rel_cutoff: f64) -> Self {
        Span {
            dim,
            basis: Vec::new(),
            rel_cutoff,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[CVec] {
        &self.basis
    }

    pub fn into_basis(self) -> Vec<CVec> {
        self.basis
    }

    /// Add a vector; returns true when it enlarged the span.
    pub fn add(&mut self, v: &CVec) -> bool {
        assert_eq!(v.len(), self.dim, "span dimension mismatch");
        let scale = v.norm();
        if scale <= 0.0 {
            return false;
        }
        let mut r = v.clone();
        // Two projection passes for numerical stability.
        for _ in 0..2 {
            for u in &self.basis {
                let coeff = vdot(u, &r);
                r -= u * coeff;
            }
        }
        let n = r.norm();
        if n > self.rel_cutoff * scale {
            self.basis.push(r / cr(n));
            true
        } else {
            false
        }
    }

    pub fn add_all(&mut self, vecs: &[CVec]) -> bool {
        let mut grew = false;
        for v in vecs {
            grew |= self.add(v);
        }
        grew
    }

    /// Distance from `v` to the span, relative to `|v|`.
    pub fn residual(&self, v: &CVec) -> f64 {
        let scale = v.norm();
        if scale == 0.0 {
            return 0.0;
        }
        let mut r = v.clone();
        for u in &self.basis {
            let coeff = vdot(u, &r);
            r -= u * coeff;
        }
        r.norm() / scale
    }

    /// Orthogonal projector onto the span, as a dense matrix.
    pub fn projector(&self) -> CMat {
        let mut p = CMat::zeros(self.dim, self.dim);
        for u in &self.basis {
            p += u * u.adjoint();
        }
        p
    }
}

/// Orthogonal projector onto the span of an orthonormal basis.
pub fn projector(dim: usize, basis: &[CVec]) -> CMat {
    let mut p = CMat::zeros(dim, dim);
    for u in basis {
        p += u * u.adjoint();
    }
    p
}

/// Largest distance from a basis vector of `a` to the span of `b`; zero when
/// span(a) is contained in span(b). Both bases must be orthonormal.
pub fn subspace_leq_residual(a: &[CVec], b: &[CVec], dim: usize) -> f64 {
    let pb = projector(dim, b);
    let mut worst = 0.0f64;
    for v in a {
        let r = v - &pb * v;
        worst = worst.max(r.norm());
    }
    worst
}

/// Operator-norm distance between the projectors of two subspaces. Zero iff
/// the subspaces coincide.
pub fn subspace_distance(a: &[CVec], b: &[CVec], dim: usize) -> f64 {
    op_norm(&(projector(dim, a) - projector(dim, b)))
}

/// Orthonormal basis of the intersection of two subspaces, via eigenvectors of
/// `P_a P_b P_a` with eigenvalue within `angle_tol` of 1.
pub fn subspace_intersection(a: &[CVec], b: &[CVec], dim: usize, angle_tol: f64) -> Vec<CVec> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let pa = projector(dim, a);
    let pb = projector(dim, b);
    let m = &pa * pb * &pa;
    let (vals, vecs) = herm_eigen(&m);
    let mut basis = Vec::new();
    for (i, &l) in vals.iter().enumerate() {
        if l > 1.0 - angle_tol {
            basis.push(vecs.column(i).into_owned());
        }
    }
    // Eigenvectors arrive orthonormal; one MGS pass guards cluster mixing.
    orthonormalize(&basis, 1e-6)
}

/// Minimum-norm least-squares solution of `a x = b` for every column of `b`,
/// together with the worst residual `|a x_j - b_j|` over columns.
pub fn lstsq(a: &CMat, b: &CMat) -> (CMat, f64) {
    let g = a.adjoint() * a;
    let (vals, vecs) = herm_eigen(&g);
    let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let cutoff = lmax * 1e-24; // relative sigma cutoff 1e-12, squared
    let rhs = a.adjoint() * b;
    // pinv(G) * rhs through the eigenbasis.
    let proj = vecs.adjoint() * rhs;
    let mut scaled = proj.clone();
    for i in 0..vals.len() {
        let l = vals[i];
        let f = if l > cutoff && l > 0.0 { 1.0 / l } else { 0.0 };
        for j in 0..scaled.ncols() {
            scaled[(i, j)] = proj[(i, j)] * cr(f);
        }
    }
    let x = vecs * scaled;
    let mut worst = 0.0f64;
    let resid = a * &x - b;
    for j in 0..resid.ncols() {
        worst = worst.max(resid.column(j).norm());
    }
    (x, worst)
}

/// Inverse via LU; `None` when numerically singular.
pub fn inverse(m: &CMat) -> Option<CMat> {
    m.clone().try_inverse()
}

/// Null-space basis of a real matrix (right null vectors), with relative
/// singular-value cutoff.
pub fn real_null_space(m: &RMat, rel_cutoff: f64) -> Vec<RVec> {
    let g = m.transpose() * m;
    let eig = g.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().fold(0.0f64, |a, &l| a.max(l));
    // Gram eigenvalues of exact nulls land anywhere within the rounding
    // noise of the large eigenvalues, so the cutoff must sit above that
    // floor (about 1e-14 relative) regardless of the requested resolution.
    let rel = rel_cutoff.max(1e-7);
    let thresh = if lmax > 0.0 { lmax * rel * rel } else { 0.0 };
    let mut out = Vec::new();
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] <= thresh {
            out.push(eig.eigenvectors.column(i).into_owned());
        }
    }
    out
}

/// Standard complex Gaussian matrix (entries (N(0,1)+iN(0,1))/sqrt(2)).
pub fn gaussian_cmat<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C::new(re, im) / cr(2.0f64.sqrt())
    })
}

pub fn gaussian_cvec<R: Rng>(rng: &mut R, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C::new(re, im) / cr(2.0f64.sqrt())
    })
}

/// Haar-ish random unitary: orthonormalized Gaussian matrix.
pub fn random_unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let g = gaussian_cmat(rng, n, n);
    let basis = column_space(&g);
    assert_eq!(basis.len(), n, "random Gaussian matrix was singular");
    let mut u = CMat::zeros(n, n);
    for (j, v) in basis.iter().enumerate() {
        u.set_column(j, v);
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn op_norm_of_known_matrix() {
        // [[3,0],[0,-4]] has operator norm 4 regardless of sign.
        let m = CMat::from_diagonal(&CVec::from_vec(vec![cr(3.0), cr(-4.0)]));
        assert!((op_norm(&m) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn op_norm_of_rectangular() {
        let m = CMat::from_row_slice(1, 2, &[cr(3.0), cr(4.0)]);
        assert!((op_norm(&m) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn herm_eigen_sorted_and_correct() {
        let m = CMat::from_row_slice(2, 2, &[cr(2.0), I, -I, cr(2.0)]);
        let (vals, vecs) = herm_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        // Reconstruction
        let d = CMat::from_diagonal(&CVec::from_vec(vals.iter().map(|&l| cr(l)).collect()));
        let rec = &vecs * d * vecs.adjoint();
        assert!(diff_norm(&rec, &m) < 1e-12);
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = gaussian_cmat(&mut rng, 4, 4);
        let m = g.adjoint() * &g;
        let s = psd_sqrt(&m);
        assert!(diff_norm(&(&s * &s), &m) < 1e-10);
        assert!(hermiticity_defect(&s) < 1e-12);
    }

    #[test]
    fn column_space_detects_rank() {
        // Two independent columns plus their sum: rank 2.
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                cr(1.0), cr(0.0), cr(1.0),
                cr(0.0), cr(1.0), cr(1.0),
                cr(0.0), cr(0.0), cr(0.0),
            ],
        );
        let basis = column_space(&m);
        assert_eq!(basis.len(), 2);
        for u in &basis {
            assert!((u.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn span_grows_and_rejects_dependent() {
        let mut sp = Span::new(3);
        let e1 = CVec::from_vec(vec![ONE, ZERO, ZERO]);
        let e2 = CVec::from_vec(vec![ZERO, ONE, ZERO]);
        assert!(sp.add(&e1));
        assert!(sp.add(&e2));
        let dep = &e1 * cr(2.0) + &e2 * I;
        assert!(!sp.add(&dep));
        assert_eq!(sp.dim(), 2);
        assert!(sp.residual(&dep) < 1e-12);
    }

    #[test]
    fn intersection_of_planes() {
        // span{e1,e2} intersect span{e2,e3} = span{e2} in C^3.
        let e = |i: usize| CVec::from_fn(3, |j, _| if i == j { ONE } else { ZERO });
        let a = vec![e(0), e(1)];
        let b = vec![e(1), e(2)];
        let cap = subspace_intersection(&a, &b, 3, 1e-8);
        assert_eq!(cap.len(), 1);
        assert!(cap[0][1].norm() > 0.999);
    }

    #[test]
    fn lstsq_consistent_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = gaussian_cmat(&mut rng, 6, 3);
        let x_true = gaussian_cmat(&mut rng, 3, 2);
        let b = &a * &x_true;
        let (x, res) = lstsq(&a, &b);
        assert!(res < 1e-10);
        assert!(diff_norm(&x, &x_true) < 1e-9);
    }

    #[test]
    fn real_null_space_of_projection() {
        // [[1,0],[0,0]] has null space span{e2}.
        let m = RMat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ns = real_null_space(&m, 1e-9);
        assert_eq!(ns.len(), 1);
        assert!(ns[0][1].abs() > 0.999);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_unitary(&mut rng, 5);
        assert!(diff_norm(&(u.adjoint() * &u), &identity(5)) < 1e-12);
    }

    #[test]
    fn subspace_ops_sanity() {
        let e = |i: usize| CVec::from_fn(3, |j, _| if i == j { ONE } else { ZERO });
        let a = vec![e(0)];
        let b = vec![e(0), e(1)];
        assert!(subspace_leq_residual(&a, &b, 3) < 1e-12);
        assert!(subspace_leq_residual(&b, &a, 3) > 0.9);
        assert!(subspace_distance(&a, &b, 3) > 0.9);
        assert!(subspace_distance(&b, &b, 3) < 1e-12);
    }
}
