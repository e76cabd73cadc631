//! Covariant representations of an interaction group on a concrete Hilbert
//! space: verification of the covariance identities, GNS construction from
//! an invariant state, amplification by the group translation action, the
//! graded concrete crossed product with its degree-zero expectation, word
//! subspaces with redundancy scanning, and the representation-free norm
//! recipe for one-word monomials.

use crate::algebra::{AlgElement, FdAlgebra, State};
use crate::group::{Elem, Group, Word};
use crate::interaction::InteractionGroup;
use crate::linalg::{self, cr, CMat, CVec, Span, ONE, ZERO};
use crate::report::Report;
use rand::Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, thiserror::Error)]
pub enum CovariantError {
    #[error("state is not faithful (min eigenvalue {0:.3e})")]
    StateNotFaithful(f64),
    #[error("state is not invariant under V_{g} (residual {residual:.3e})", g = .0, residual = .1)]
    StateNotInvariant(String, f64),
    #[error("matrix norm recipe needs equally many left and right coefficients")]
    CoefficientMismatch,
    #[error("coefficient matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    RecipeNotPsd(f64),
    #[error("this operation requires a finite group")]
    InfiniteGroup,
}

/// A concrete covariant representation: a unital *-representation `pi` of
/// the algebra together with one operator per group element, on C^dim.
#[derive(Debug)]
pub struct CovariantRep {
    dim: usize,
    algebra: Arc<FdAlgebra>,
    /// Images of the matrix-unit basis under pi.
    pi_basis: Vec<CMat>,
    v: BTreeMap<Elem, CMat>,
}

impl CovariantRep {
    pub fn new(
        dim: usize,
        algebra: Arc<FdAlgebra>,
        pi_basis: Vec<CMat>,
        v: BTreeMap<Elem, CMat>,
    ) -> CovariantRep {
        assert_eq!(pi_basis.len(), algebra.dim());
        CovariantRep {
            dim,
            algebra,
            pi_basis,
            v,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn algebra(&self) -> &Arc<FdAlgebra> {
        &self.algebra
    }

    pub fn pi(&self, a: &AlgElement) -> CMat {
        let coords = a.vectorized();
        let mut out = CMat::zeros(self.dim, self.dim);
        for (k, img) in self.pi_basis.iter().enumerate() {
            if coords[k] != ZERO {
                out += img.map(|z| z * coords[k]);
            }
        }
        out
    }

    pub fn pi_basis(&self) -> &[CMat] {
        &self.pi_basis
    }

    pub fn v(&self, g: &Elem) -> &CMat {
        self.v
            .get(g)
            .unwrap_or_else(|| panic!("representation has no operator for {g}"))
    }

    pub fn v_elems(&self) -> impl Iterator<Item = (&Elem, &CMat)> {
        self.v.iter()
    }

    pub fn v_word(&self, alpha: &Word) -> CMat {
        let mut acc = linalg::identity(self.dim);
        for g in alpha.letters() {
            acc = acc * self.v(g);
        }
        acc
    }

    /// The range projection candidate e_g = v_g v_{g^-1}.
    pub fn e_proj(&self, group: &Group, g: &Elem) -> CMat {
        let gi = group.inv(g).unwrap();
        self.v(g) * self.v(&gi)
    }

    /// Rank of a -> pi(a); equals dim(A) iff pi is injective.
    pub fn pi_rank(&self) -> usize {
        let d = self.algebra.dim();
        let mut m = CMat::zeros(self.dim * self.dim, d);
        for (k, img) in self.pi_basis.iter().enumerate() {
            m.set_column(k, &flatten(img));
        }
        linalg::column_space(&m).len()
    }
}

pub(crate) fn flatten(m: &CMat) -> CVec {
    let (r, c) = m.shape();
    CVec::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

/// One factor of an operator word: an algebra element through pi, or a
/// group element through v. Evaluating the same factor list in different
/// representations is how cross-model comparisons are phrased.
#[derive(Clone, Debug)]
pub enum Factor {
    Alg(AlgElement),
    Gen(Elem),
}

pub fn eval_factors(rep: &CovariantRep, factors: &[Factor]) -> CMat {
    let mut acc = linalg::identity(rep.dim());
    for f in factors {
        acc = match f {
            Factor::Alg(a) => acc * rep.pi(a),
            Factor::Gen(g) => acc * rep.v(g),
        };
    }
    acc
}

/// Group-degree of a factor list: the product of the group letters.
pub fn factors_degree(group: &Group, factors: &[Factor]) -> Elem {
    let mut acc = group.identity();
    for f in factors {
        if let Factor::Gen(g) = f {
            acc = group.op(&acc, g).unwrap();
        }
    }
    acc
}

/// Verify that (pi, v) is a covariant representation of the interaction
/// group: pi a unital *-homomorphism, v a *-partial representation, the
/// covariance identity at every window element, its word version up to
/// `word_len`, and commutation of pi(a) with e_alpha for a in the word
/// range.
pub fn verify_covariant(
    rep: &CovariantRep,
    ig: &InteractionGroup,
    tol: f64,
    word_len: usize,
) -> Report {
    let mut out = Report::new("covariant representation");
    let alg = ig.algebra();
    let group = ig.group();
    let d = alg.dim();
    let idm = linalg::identity(rep.dim());

    // pi is a unital *-homomorphism.
    out.check(
        "pi-unital",
        "pi(1) = 1",
        linalg::diff_norm(&rep.pi(&AlgElement::one(alg)), &idm),
        tol,
    );
    let mut worst_hom = 0.0f64;
    let mut worst_star = 0.0f64;
    for i in 0..d {
        let bi = AlgElement::basis(alg, i);
        let pbi = rep.pi(&bi);
        worst_star = worst_star.max(linalg::diff_norm(&rep.pi(&bi.adjoint()), &pbi.adjoint()));
        for j in 0..d {
            let bj = AlgElement::basis(alg, j);
            let lhs = rep.pi(&bi.mul(&bj));
            let rhs = &pbi * rep.pi(&bj);
            worst_hom = worst_hom.max(linalg::diff_norm(&lhs, &rhs));
        }
    }
    out.check("pi-multiplicative", "pi(ab) = pi(a) pi(b)", worst_hom, tol);
    out.check("pi-star", "pi(a*) = pi(a)*", worst_star, tol);

    // v is a *-partial representation.
    out.check(
        "v-identity",
        "v_1 = 1",
        linalg::diff_norm(rep.v(&group.identity()), &idm),
        tol,
    );
    let win = ig.window();
    let mut worst_vstar = (0.0f64, String::new());
    let mut worst_prep = (0.0f64, String::new());
    for g in win {
        let gi = group.inv(g).unwrap();
        let r = linalg::diff_norm(&rep.v(g).adjoint(), rep.v(&gi));
        if r > worst_vstar.0 {
            worst_vstar = (r, format!("g={g}"));
        }
        for h in win {
            let hi = group.inv(h).unwrap();
            let gh = group.op(g, h).unwrap();
            if !rep.v.contains_key(&gh) {
                continue;
            }
            let lhs = rep.v(g) * rep.v(h) * rep.v(&hi);
            let rhs = rep.v(&gh) * rep.v(&hi);
            let r = linalg::diff_norm(&lhs, &rhs);
            if r > worst_prep.0 {
                worst_prep = (r, format!("g={g}, h={h}"));
            }
        }
    }
    out.check_with(
        "v-star",
        "v_g* = v_{g^-1}",
        worst_vstar.0,
        tol,
        Some(worst_vstar.1),
    );
    out.check_with(
        "v-partial-rep",
        "v_g v_h v_{h^-1} = v_{gh} v_{h^-1}",
        worst_prep.0,
        tol,
        Some(worst_prep.1),
    );

    // Covariance identity, elementwise.
    let mut worst_cov = (0.0f64, String::new());
    for g in win {
        let gi = group.inv(g).unwrap();
        let vg = rep.v(g);
        let vgi = rep.v(&gi);
        let eg = vg * vgi;
        let vmap = ig.v(g);
        for k in 0..d {
            let b = AlgElement::basis(alg, k);
            let lhs = vg * rep.pi(&b) * vgi;
            let rhs = rep.pi(&vmap.apply(&b)) * &eg;
            let r = linalg::diff_norm(&lhs, &rhs);
            if r > worst_cov.0 {
                worst_cov = (r, format!("g={g}, basis {k}"));
            }
        }
    }
    out.check_with(
        "covariance",
        "v_g pi(a) v_{g^-1} = pi(V_g(a)) v_g v_{g^-1}",
        worst_cov.0,
        tol,
        Some(worst_cov.1),
    );

    // Word covariance and commutation with word projections.
    let words = crate::group::words_over(win, word_len);
    let mut worst_wcov = (0.0f64, String::new());
    let mut worst_comm = (0.0f64, String::new());
    for alpha in &words {
        if alpha.is_empty() {
            continue;
        }
        let alpha_inv = alpha.inverse(group).unwrap();
        let va = rep.v_word(alpha);
        let vai = rep.v_word(&alpha_inv);
        let ea = &va * &vai;
        let vmap = ig.word_map(alpha);
        for k in 0..d {
            let b = AlgElement::basis(alg, k);
            let lhs = &va * rep.pi(&b) * &vai;
            let rhs = rep.pi(&vmap.apply(&b)) * &ea;
            let r = linalg::diff_norm(&lhs, &rhs);
            if r > worst_wcov.0 {
                worst_wcov = (r, format!("alpha={alpha}, basis {k}"));
            }
        }
        // pi(a) commutes with e_alpha for a in the range of V_alpha.
        for vvec in vmap.range() {
            let a = AlgElement::from_vec(alg, &vvec);
            let pa = rep.pi(&a);
            let r = linalg::op_norm(&(&pa * &ea - &ea * &pa));
            if r > worst_comm.0 {
                worst_comm = (r, format!("alpha={alpha}"));
            }
        }
    }
    out.check_with(
        "word-covariance",
        "v_alpha pi(a) v_{alpha^-1} = pi(V_alpha(a)) v_alpha v_{alpha^-1}",
        worst_wcov.0,
        tol,
        Some(worst_wcov.1),
    );
    out.check_with(
        "range-commutation",
        "pi(a) commutes with e_alpha for a in range(V_alpha)",
        worst_comm.0,
        tol,
        Some(worst_comm.1),
    );
    out
}

/// GNS representation from a faithful invariant state. The Hilbert space is
/// the algebra with inner product phi(a* b); pi acts by left multiplication
/// and v_g by the matrix of V_g, both written in an orthonormal basis
/// obtained from the Cholesky factor of the Gram matrix. The vector given by
/// the unit of the algebra is cyclic, fixed by every v_g, and implements phi.
pub fn gns_representation(
    ig: &InteractionGroup,
    phi: &State,
    tol: f64,
) -> Result<(CovariantRep, Report), CovariantError> {
    let alg = ig.algebra();
    let d = alg.dim();

    let min_eig = phi.min_eig();
    if min_eig <= 0.0 {
        return Err(CovariantError::StateNotFaithful(min_eig));
    }
    for g in ig.window() {
        let vmap = ig.v(g);
        let mut worst = 0.0f64;
        for k in 0..d {
            let b = AlgElement::basis(alg, k);
            worst = worst.max((phi.eval(&vmap.apply(&b)) - phi.eval(&b)).norm());
        }
        if worst > tol {
            return Err(CovariantError::StateNotInvariant(g.to_string(), worst));
        }
    }

    let gram = phi.gram();
    let chol = gram
        .clone()
        .cholesky()
        .ok_or(CovariantError::StateNotFaithful(linalg::min_eig_hermitian(
            &gram,
        )))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .expect("Cholesky factor of a positive definite Gram is invertible");
    // Operator M on algebra coordinates becomes lh M lh_inv on the
    // orthonormal basis, where lh = L*.
    let lh = l.adjoint();
    let lh_inv = l_inv.adjoint();
    let localize = |m: &CMat| &lh * m * &lh_inv;

    let mut pi_basis = Vec::with_capacity(d);
    for k in 0..d {
        let b = AlgElement::basis(alg, k);
        // Left multiplication by b on algebra coordinates.
        let mut lm = CMat::zeros(d, d);
        for j in 0..d {
            let bj = AlgElement::basis(alg, j);
            lm.set_column(j, &b.mul(&bj).vectorized());
        }
        pi_basis.push(localize(&lm));
    }
    let mut v = BTreeMap::new();
    for g in ig.window() {
        v.insert(g.clone(), localize(ig.v(g).matrix()));
    }
    let rep = CovariantRep::new(d, alg.clone(), pi_basis, v);

    let mut out = Report::new("GNS representation");
    let one_coords = AlgElement::one(alg).vectorized();
    let xi = &lh * &one_coords;
    out.check(
        "cyclic-norm",
        "|xi| = phi(1) = 1",
        (xi.norm() - 1.0).abs(),
        tol,
    );
    // v_g xi = xi, computed in the factored form L* (M_g - I) vec(1) so
    // that an exact fixed point stays exactly fixed.
    let mut worst_fix = (0.0f64, String::new());
    for g in ig.window() {
        let r = ig.v(g).matrix() * &one_coords - &one_coords;
        let rloc = (&lh * r).norm();
        if rloc > worst_fix.0 {
            worst_fix = (rloc, format!("g={g}"));
        }
    }
    out.check_with(
        "v-fixes-cyclic",
        "v_g xi = xi",
        worst_fix.0,
        0.0,
        Some(worst_fix.1),
    );
    // The state is implemented: <xi, pi(a) xi> = phi(a).
    let mut worst_impl = 0.0f64;
    for k in 0..d {
        let b = AlgElement::basis(alg, k);
        let lhs = linalg::vdot(&xi, &(rep.pi(&b) * &xi));
        worst_impl = worst_impl.max((lhs - phi.eval(&b)).norm());
    }
    out.check(
        "state-implemented",
        "<xi, pi(a) xi> = phi(a)",
        worst_impl,
        tol,
    );
    out.absorb("covariant", verify_covariant(&rep, ig, tol, 2));
    out.absorb("nondegenerate", nondegeneracy_scan(&rep, ig, 3));
    Ok((rep, out))
}

/// Injectivity of a -> pi(a) v_alpha for every word alpha up to the given
/// length over the window: the smallest singular value of each map is
/// reported through the worst case.
pub fn nondegeneracy_scan(rep: &CovariantRep, ig: &InteractionGroup, word_len: usize) -> Report {
    let mut out = Report::new("non-degeneracy");
    let alg = ig.algebra();
    let d = alg.dim();
    let mut worst = (f64::INFINITY, String::new());
    for alpha in crate::group::words_over(ig.window(), word_len) {
        let va = rep.v_word(&alpha);
        let mut m = CMat::zeros(rep.dim() * rep.dim(), d);
        for k in 0..d {
            m.set_column(k, &flatten(&(&rep.pi_basis()[k] * &va)));
        }
        // Smallest singular value of the stacked map.
        let g = m.adjoint() * &m;
        let (vals, _) = linalg::herm_eigen(&g);
        let sigma_min = vals.first().copied().unwrap_or(0.0).max(0.0).sqrt();
        if sigma_min < worst.0 {
            worst = (sigma_min, format!("alpha={alpha}"));
        }
    }
    out.check_with(
        "injectivity-gap",
        "a -> pi(a) v_alpha is injective for every word alpha (gap = smallest singular value)",
        0.0,
        0.0,
        None::<String>,
    );
    // Encode the gap itself: pass iff strictly positive beyond 1e-9.
    out.check_with(
        "injectivity-positive",
        "smallest singular value of a -> pi(a) v_alpha exceeds 1e-9",
        if worst.0 > 1e-9 { 0.0 } else { 1.0 },
        0.0,
        Some(format!("gap {:.3e} at {}", worst.0, worst.1)),
    );
    out
}

/// Amplify a representation of a finite group by the translation action:
/// pi'(a) = pi(a) tensor 1, v'_g = v_g tensor lambda_g on H tensor l^2(G).
pub fn amplify(
    rep: &CovariantRep,
    group: &Group,
) -> Result<CovariantRep, CovariantError> {
    let n = group.order().ok_or(CovariantError::InfiniteGroup)?;
    let elements = group.elements().unwrap();
    let index_of = |e: &Elem| elements.iter().position(|x| x == e).unwrap();
    let idg = linalg::identity(n);
    let pi_basis = rep
        .pi_basis()
        .iter()
        .map(|m| linalg::kron(m, &idg))
        .collect();
    let mut v = BTreeMap::new();
    for (g, vg) in rep.v_elems() {
        let mut lam = CMat::zeros(n, n);
        for (hi, h) in elements.iter().enumerate() {
            let gh = group.op(g, h).unwrap();
            lam[(index_of(&gh), hi)] = ONE;
        }
        v.insert(g.clone(), linalg::kron(vg, &lam));
    }
    Ok(CovariantRep::new(
        rep.dim() * n,
        rep.algebra().clone(),
        pi_basis,
        v,
    ))
}

/// The word subspaces attached to alpha inside a covariant representation:
///
/// * `z_alpha`: the span of interleaved monomials pi(a_0) v_{g_1} pi(a_1)
///   ... v_{g_n} pi(a_n) over the letters of alpha;
/// * `m_alpha`: the two-sided slice pi(A) v_alpha pi(A);
/// * `k_alpha`: the sum of z_beta over words beta with trivial total product
///   whose prefix products stay inside those of alpha, grown length by
///   length until the dimension stabilizes.
pub struct WordSubspaces {
    pub z_alpha: Vec<CVec>,
    pub m_alpha: Vec<CVec>,
    pub k_alpha: Vec<CVec>,
    /// Cumulative dimension of k_alpha per word length.
    pub k_dims: Vec<usize>,
    pub stabilized: bool,
}

pub fn word_subspaces(
    rep: &CovariantRep,
    ig: &InteractionGroup,
    alpha: &Word,
    max_len: Option<usize>,
) -> WordSubspaces {
    let group = ig.group();
    let dim2 = rep.dim() * rep.dim();

    // z_alpha by right-to-left accumulation of spans of matrices.
    let pi_units: Vec<CMat> = rep.pi_basis().to_vec();
    let mut layer: Vec<CMat> = pi_units.clone();
    for g in alpha.letters().iter().rev() {
        let vg = rep.v(g).clone();
        let mut span = Span::new(dim2);
        let mut mats = Vec::new();
        for b in &pi_units {
            for w in &layer {
                let m = b * &vg * w;
                if span.add(&flatten(&m)) {
                    mats.push(m);
                }
            }
        }
        layer = mats;
    }
    let mut zspan = Span::new(dim2);
    for m in &layer {
        zspan.add(&flatten(m));
    }
    let z_alpha = zspan.basis().to_vec();

    // m_alpha = pi(A) v_alpha pi(A).
    let va = rep.v_word(alpha);
    let mut mspan = Span::new(dim2);
    for a in &pi_units {
        for b in &pi_units {
            mspan.add(&flatten(&(a * &va * b)));
        }
    }
    let m_alpha = mspan.basis().to_vec();

    // k_alpha: paths through the prefix products of alpha that return to the
    // identity, one z_beta per path, accumulated by length.
    let nodes: Vec<Elem> = alpha.prefix_products(group).unwrap().into_iter().collect();
    let max_len = max_len.unwrap_or(nodes.len() + 2);
    // tails[(node index, length)] = span (as matrices) of all products
    // v_{h_1} pi(a_1) ... v_{h_r} pi(a_r) over paths node -> ... -> 1.
    let id_pos = nodes
        .iter()
        .position(|e| *e == group.identity())
        .expect("prefix products contain the identity");
    let mut tails: BTreeMap<(usize, usize), Vec<CMat>> = BTreeMap::new();
    for (qi, _) in nodes.iter().enumerate() {
        let init = if qi == id_pos {
            vec![linalg::identity(rep.dim())]
        } else {
            Vec::new()
        };
        tails.insert((qi, 0), init);
    }
    for r in 1..=max_len {
        for (qi, q) in nodes.iter().enumerate() {
            let mut span = Span::new(dim2);
            let mut mats = Vec::new();
            for (pi_idx, p) in nodes.iter().enumerate() {
                let step = group.op(&group.inv(q).unwrap(), p).unwrap();
                let vstep = rep.v(&step).clone();
                for b in &pi_units {
                    for w in &tails[&(pi_idx, r - 1)] {
                        let m = &vstep * b * w;
                        if span.add(&flatten(&m)) {
                            mats.push(m);
                        }
                    }
                }
            }
            tails.insert((qi, r), mats);
        }
    }
    let mut kspan = Span::new(dim2);
    let mut k_dims = Vec::new();
    let mut stabilized = false;
    let mut unchanged = 0;
    for r in 0..=max_len {
        let before = kspan.dim();
        for w in &tails[&(id_pos, r)] {
            for b in &pi_units {
                kspan.add(&flatten(&(b * w)));
            }
        }
        k_dims.push(kspan.dim());
        if r > 0 && kspan.dim() == before {
            unchanged += 1;
            if unchanged >= 2 {
                stabilized = true;
                break;
            }
        } else if r > 0 {
            unchanged = 0;
        }
    }
    WordSubspaces {
        z_alpha,
        m_alpha,
        k_alpha: kspan.basis().to_vec(),
        k_dims,
        stabilized,
    }
}

/// Result of a redundancy scan at a word alpha.
pub struct RedundancyScan {
    /// Coefficient vectors (over the k_alpha basis) spanning the space of
    /// redundancies k with k M_alpha = 0.
    pub kernel: Vec<CVec>,
    /// Smallest singular value of the multiplication map; a strictly
    /// positive gap certifies that no redundancy exists.
    pub sigma_min: f64,
    pub k_dim: usize,
    pub m_dim: usize,
}

/// Scan for redundancies: elements k of k_alpha annihilating pi(A) v_alpha
/// from the left. For strongly covariant representations the kernel is
/// trivial.
pub fn find_redundancies(
    rep: &CovariantRep,
    ig: &InteractionGroup,
    alpha: &Word,
    gap: f64,
) -> RedundancyScan {
    let subs = word_subspaces(rep, ig, alpha, None);
    let kdim = subs.k_alpha.len();
    let va = rep.v_word(alpha);
    let d = rep.algebra().dim();
    let dim = rep.dim();
    let mut rows = CMat::zeros(d * dim * dim, kdim);
    for (c, kvec) in subs.k_alpha.iter().enumerate() {
        let kmat = unflatten(kvec, dim);
        for (j, b) in rep.pi_basis().iter().enumerate() {
            let prod = &kmat * b * &va;
            let f = flatten(&prod);
            for (i, z) in f.iter().enumerate() {
                rows[(j * dim * dim + i, c)] = *z;
            }
        }
    }
    let g = rows.adjoint() * &rows;
    let (vals, vecs) = linalg::herm_eigen(&g);
    let mut kernel = Vec::new();
    let mut sigma_min = f64::INFINITY;
    for (i, &l) in vals.iter().enumerate() {
        let sigma = l.max(0.0).sqrt();
        sigma_min = sigma_min.min(sigma);
        if sigma <= gap {
            kernel.push(vecs.column(i).into_owned());
        }
    }
    if kdim == 0 {
        sigma_min = f64::INFINITY;
    }
    RedundancyScan {
        kernel,
        sigma_min,
        k_dim: kdim,
        m_dim: subs.m_alpha.len(),
    }
}

pub(crate) fn unflatten(v: &CVec, dim: usize) -> CMat {
    CMat::from_fn(dim, dim, |i, j| v[i * dim + j])
}

/// The graded concrete crossed product generated by an amplified covariant
/// representation of a finite group: fibers C_g spanned by words of total
/// degree g, plus the expectation onto the degree-zero fiber.
pub struct GradedAlgebra {
    pub dim_h: usize,
    pub group_order: usize,
    /// Orthonormal (flattened) operator bases per degree.
    pub fibers: BTreeMap<Elem, Vec<CVec>>,
    pub total_dim: usize,
}

impl GradedAlgebra {
    pub fn fiber_dim(&self, g: &Elem) -> usize {
        self.fibers.get(g).map(|b| b.len()).unwrap_or(0)
    }

    /// The expectation onto the degree-zero fiber: keep the group-diagonal
    /// blocks, averaged along the diagonal and re-broadcast.
    pub fn degree_zero_expectation(&self, group: &Group, t: &CMat) -> CMat {
        let n = self.group_order;
        let h = self.dim_h / n;
        let mut avg = CMat::zeros(h, h);
        for b in 0..n {
            for i in 0..h {
                for j in 0..h {
                    avg[(i, j)] += t[(i * n + b, j * n + b)];
                }
            }
        }
        avg /= cr(n as f64);
        let _ = group;
        linalg::kron(&avg, &linalg::identity(n))
    }
}

/// Generate the graded algebra from pi'(A) and the v'_g and verify the
/// grading laws and the degree-zero expectation.
pub fn concrete_crossed_product<R: Rng>(
    rep: &CovariantRep,
    ig: &InteractionGroup,
    tol: f64,
    rng: &mut R,
) -> Result<(GradedAlgebra, Report), CovariantError> {
    let group = ig.group();
    let n = group.order().ok_or(CovariantError::InfiniteGroup)?;
    let dim = rep.dim();
    let dim2 = dim * dim;
    assert!(dim % n == 0, "amplified dimension must be divisible by |G|");

    // Seed fibers: degree 1 holds pi'(A); each degree g holds v'_g.
    let mut spans: BTreeMap<Elem, Span> = BTreeMap::new();
    let e = group.identity();
    let mut s1 = Span::new(dim2);
    s1.add(&flatten(&linalg::identity(dim)));
    for b in rep.pi_basis() {
        s1.add(&flatten(b));
    }
    spans.insert(e.clone(), s1);
    for g in group.elements().unwrap() {
        let sp = spans.entry(g.clone()).or_insert_with(|| Span::new(dim2));
        sp.add(&flatten(rep.v(&g)));
    }

    // Close under products and adjoints, tracking degrees.
    loop {
        let snapshot: BTreeMap<Elem, Vec<CMat>> = spans
            .iter()
            .map(|(g, sp)| {
                (
                    g.clone(),
                    sp.basis().iter().map(|v| unflatten(v, dim)).collect(),
                )
            })
            .collect();
        let mut grew = false;
        for (g, mats) in &snapshot {
            let gi = group.inv(g).unwrap();
            for m in mats {
                grew |= spans.get_mut(&gi).unwrap().add(&flatten(&m.adjoint()));
            }
            for (h, mats2) in &snapshot {
                let gh = group.op(g, h).unwrap();
                for m in mats {
                    for m2 in mats2 {
                        grew |= spans.get_mut(&gh).unwrap().add(&flatten(&(m * m2)));
                    }
                }
            }
        }
        if !grew {
            break;
        }
    }

    let fibers: BTreeMap<Elem, Vec<CVec>> = spans
        .iter()
        .map(|(g, sp)| (g.clone(), sp.basis().to_vec()))
        .collect();
    let total_dim = fibers.values().map(|b| b.len()).sum();
    let graded = GradedAlgebra {
        dim_h: dim,
        group_order: n,
        fibers,
        total_dim,
    };

    let mut out = Report::new("graded crossed product");

    // C_g C_h inside C_{gh}.
    let mut worst_grade = (0.0f64, String::new());
    for (g, bg) in &graded.fibers {
        for (h, bh) in &graded.fibers {
            let gh = group.op(g, h).unwrap();
            let target = &graded.fibers[&gh];
            for x in bg {
                let xm = unflatten(x, dim);
                for y in bh {
                    let ym = unflatten(y, dim);
                    let p = flatten(&(&xm * &ym));
                    let pn = p.norm();
                    if pn < 1e-14 {
                        continue;
                    }
                    let r = linalg::subspace_leq_residual(
                        &[p.clone() / cr(pn)],
                        target,
                        dim2,
                    );
                    if r > worst_grade.0 {
                        worst_grade = (r, format!("g={g}, h={h}"));
                    }
                }
            }
        }
    }
    out.check_with(
        "grading-product",
        "C_g C_h lies inside C_{gh}",
        worst_grade.0,
        tol,
        Some(worst_grade.1),
    );

    // C_g* = C_{g^-1}.
    let mut worst_star = (0.0f64, String::new());
    for (g, bg) in &graded.fibers {
        let gi = group.inv(g).unwrap();
        let target = &graded.fibers[&gi];
        for x in bg {
            let xs = flatten(&unflatten(x, dim).adjoint());
            let r = linalg::subspace_leq_residual(&[xs], target, dim2);
            if r > worst_star.0 {
                worst_star = (r, format!("g={g}"));
            }
        }
    }
    out.check_with(
        "grading-star",
        "C_g* = C_{g^-1}",
        worst_star.0,
        tol,
        Some(worst_star.1),
    );

    // Fibers are linearly independent: total dimension equals the dimension
    // of the joint span.
    let mut joint = Span::new(dim2);
    for b in graded.fibers.values() {
        for v in b {
            joint.add(v);
        }
    }
    out.flag(
        "fibers-independent",
        "the fibers C_g are linearly independent",
        joint.dim() == graded.total_dim,
        Some(format!(
            "joint dim {} vs fiber sum {}",
            joint.dim(),
            graded.total_dim
        )),
    );

    // Degree-zero expectation: identity on C_1, zero on other fibers,
    // idempotent, positive and contractive on samples.
    let mut worst_id = 0.0f64;
    for x in &graded.fibers[&e] {
        let xm = unflatten(x, dim);
        let fx = graded.degree_zero_expectation(group, &xm);
        worst_id = worst_id.max(linalg::diff_norm(&fx, &xm));
    }
    out.check(
        "expectation-fixes-c1",
        "F = id on the degree-zero fiber",
        worst_id,
        tol,
    );
    let mut worst_zero = (0.0f64, String::new());
    for (g, bg) in &graded.fibers {
        if *g == e {
            continue;
        }
        for x in bg {
            let fx = graded.degree_zero_expectation(group, &unflatten(x, dim));
            let r = linalg::op_norm(&fx);
            if r > worst_zero.0 {
                worst_zero = (r, format!("g={g}"));
            }
        }
    }
    out.check_with(
        "expectation-kills-cg",
        "F = 0 on fibers of nontrivial degree",
        worst_zero.0,
        tol,
        Some(worst_zero.1),
    );
    let mut worst_pos = 0.0f64;
    let mut worst_contr = 0.0f64;
    for _ in 0..10 {
        let w = random_in_fibers(&graded, rng);
        let x = w.adjoint() * &w;
        let fx = graded.degree_zero_expectation(group, &x);
        let scale = linalg::op_norm(&x).max(1.0);
        worst_pos = worst_pos.max((-linalg::min_eig_hermitian(&fx) / scale).max(0.0));
        worst_contr = worst_contr
            .max((linalg::op_norm(&fx) - linalg::op_norm(&x)).max(0.0) / scale);
    }
    out.check(
        "expectation-positive",
        "F(x* x) >= 0 on samples",
        worst_pos,
        tol,
    );
    out.check(
        "expectation-contractive",
        "|F(x)| <= |x| on samples",
        worst_contr,
        tol,
    );
    Ok((graded, out))
}

fn random_in_fibers<R: Rng>(graded: &GradedAlgebra, rng: &mut R) -> CMat {
    let dim = graded.dim_h;
    let mut acc = CMat::zeros(dim, dim);
    for basis in graded.fibers.values() {
        for v in basis {
            let z = linalg::gaussian_cvec(rng, 1)[0];
            acc += unflatten(v, dim).map(|x| x * z);
        }
    }
    acc
}

/// Representation-free norm of m = sum_i a_i* s_alpha b_i, computed by the
/// square-root recipe, cross-checked against the operator norm in the given
/// faithful non-degenerate representation.
///
/// Recipe: form the coefficient matrix M = [V_{alpha^-1}(a_i a_j*)], take
/// its positive square root c over the matrix amplification of the algebra,
/// set d_k = sum_j c_kj b_j, and return the square root of the norm of
/// [V_alpha(d_i d_j*)].
pub fn monomial_norm_recipe(
    ig: &InteractionGroup,
    rep: &CovariantRep,
    alpha: &Word,
    left: &[AlgElement],
    right: &[AlgElement],
    tol: f64,
) -> Result<(f64, Report), CovariantError> {
    if left.len() != right.len() || left.is_empty() {
        return Err(CovariantError::CoefficientMismatch);
    }
    let group = ig.group();
    let alg = ig.algebra();
    let n = left.len();
    let na = alg.matrix_dim();
    let alpha_inv = alpha.inverse(group).unwrap();
    let v_inv = ig.word_map(&alpha_inv);
    let v_fwd = ig.word_map(alpha);

    // M = [V_{alpha^-1}(a_i a_j*)] as an (n na) x (n na) matrix.
    let mut big = CMat::zeros(n * na, n * na);
    for i in 0..n {
        for j in 0..n {
            let block = v_inv.apply(&left[i].mul(&left[j].adjoint()));
            paste_block(&mut big, block.matrix(), i, j, na);
        }
    }
    let scale = linalg::op_norm(&big).max(1.0);
    let min_eig = linalg::min_eig_hermitian(&big);
    if min_eig < -tol * scale {
        return Err(CovariantError::RecipeNotPsd(min_eig));
    }
    let c = linalg::psd_sqrt(&big);

    let mut out = Report::new(format!("norm recipe for a word of length {}", alpha.len()));
    out.check(
        "sqrt-factorization",
        "c* c reproduces [V_{alpha^-1}(a_i a_j*)]",
        linalg::diff_norm(&(c.adjoint() * &c), &big) / scale,
        1e-10,
    );

    // d_k = sum_j c_kj b_j; the sqrt keeps its blocks inside the algebra up
    // to roundoff, which the vectorize/unvectorize pass clamps away.
    let mut dvec = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = AlgElement::zero(alg);
        for j in 0..n {
            let ckj = extract_block(&c, k, j, na);
            let ckj = AlgElement::from_vec(alg, &alg.vectorize(&ckj));
            acc = acc.add(&ckj.mul(&right[j]));
        }
        dvec.push(acc);
    }
    let mut big2 = CMat::zeros(n * na, n * na);
    for i in 0..n {
        for j in 0..n {
            let block = v_fwd.apply(&dvec[i].mul(&dvec[j].adjoint()));
            paste_block(&mut big2, block.matrix(), i, j, na);
        }
    }
    let recipe = linalg::op_norm(&big2).max(0.0).sqrt();

    // Direct operator norm in the representation.
    let va = rep.v_word(alpha);
    let mut m_op = CMat::zeros(rep.dim(), rep.dim());
    for i in 0..n {
        m_op += rep.pi(&left[i].adjoint()) * &va * rep.pi(&right[i]);
    }
    let direct = linalg::op_norm(&m_op);
    out.check_with(
        "recipe-vs-representation",
        "recipe norm matches the operator norm in a faithful non-degenerate representation",
        (recipe - direct).abs() / direct.max(1.0),
        tol,
        Some(format!("recipe {recipe:.12e}, direct {direct:.12e}")),
    );
    Ok((recipe, out))
}

/// Special case: for a in the range of V_alpha, |pi(a) v_alpha| = |a| and
/// |pi(a) e_alpha| = |a|.
pub fn range_monomial_norms(
    ig: &InteractionGroup,
    rep: &CovariantRep,
    alpha: &Word,
    a: &AlgElement,
    tol: f64,
) -> Report {
    let group = ig.group();
    let mut out = Report::new("norms of range monomials");
    let va = rep.v_word(alpha);
    let vai = rep.v_word(&alpha.inverse(group).unwrap());
    let ea = &va * &vai;
    let pa = rep.pi(a);
    let norm_a = a.norm();
    out.check(
        "norm-av",
        "|pi(a) v_alpha| = |a| for a in range(V_alpha)",
        (linalg::op_norm(&(&pa * &va)) - norm_a).abs() / norm_a.max(1.0),
        tol,
    );
    out.check(
        "norm-ae",
        "|pi(a) e_alpha| = |a| for a in range(V_alpha)",
        (linalg::op_norm(&(&pa * &ea)) - norm_a).abs() / norm_a.max(1.0),
        tol,
    );
    out
}

fn paste_block(big: &mut CMat, block: &CMat, i: usize, j: usize, na: usize) {
    for r in 0..na {
        for s in 0..na {
            big[(i * na + r, j * na + s)] = block[(r, s)];
        }
    }
}

fn extract_block(big: &CMat, i: usize, j: usize, na: usize) -> CMat {
    CMat::from_fn(na, na, |r, s| big[(i * na + r, j * na + s)])
}

/// Negative control for redundancy scans: compress pi to a proper corner,
/// breaking unitality and strong covariance while keeping shapes intact.
pub fn corrupt_compress_pi(rep: &CovariantRep, keep: usize) -> CovariantRep {
    assert!(keep < rep.dim());
    let mut p = CMat::zeros(rep.dim(), rep.dim());
    for i in 0..keep {
        p[(i, i)] = ONE;
    }
    let pi_basis = rep.pi_basis().iter().map(|m| &p * m * &p).collect();
    let v = rep
        .v_elems()
        .map(|(g, m)| (g.clone(), m.clone()))
        .collect();
    CovariantRep::new(rep.dim(), rep.algebra().clone(), pi_basis, v)
}
