//! Interaction groups: partial representations of a group by unital positive
//! maps on a finite-dimensional C*-algebra, together with the verification
//! suites for the defining axioms and their word-level consequences.
//!
//! The defining data is one linear map V_g per group element, subject to
//!
//! * V_1 = id and V_g V_h V_{h^-1} = V_{gh} V_{h^-1} (and its mirror image),
//! * each V_g unital, positive, and multiplicative on the range of V_{g^-1}.
//!
//! The compositions E_g = V_g V_{g^-1} are then commuting conditional
//! expectations onto the ranges R_g, and words alpha of group letters carry
//! ranges R_alpha cut out by the prefix products of alpha.

use crate::algebra::{
    cond_exp_check, map_certify, AlgElement, AlgebraMap, FdAlgebra,
};
use crate::group::{Elem, Group, GroupError, Word};
use crate::linalg::{self, CVec};
use crate::report::Report;
use rand::Rng;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::{Arc, Mutex};

#[derive(Debug, thiserror::Error)]
pub enum InteractionError {
    #[error("no map assigned to group element {0}")]
    MissingElement(String),
    #[error("the identity element must carry the identity map (residual {0:.3e})")]
    IdentityMap(f64),
    #[error("map for {0} has wrong algebra")]
    WrongAlgebra(String),
    #[error("window must contain the identity and be closed under inverses")]
    BadWindow,
    #[error(transparent)]
    Group(#[from] GroupError),
}

enum Assignment {
    /// Explicit table, total on the group (finite groups).
    Table(BTreeMap<Elem, Arc<AlgebraMap>>),
    /// Rule evaluated on demand with a memoizing cache (infinite groups);
    /// the mutex guarantees each element is computed once.
    Lazy {
        rule: Box<dyn Fn(&Elem) -> AlgebraMap + Send + Sync>,
        cache: Mutex<BTreeMap<Elem, Arc<AlgebraMap>>>,
    },
}

/// A group acting on a finite-dimensional C*-algebra by a partial
/// representation of positive unital maps.
pub struct InteractionGroup {
    group: Group,
    algebra: Arc<FdAlgebra>,
    assign: Assignment,
    window: Vec<Elem>,
}

impl std::fmt::Debug for InteractionGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InteractionGroup")
            .field("group", &self.group)
            .field("algebra", &self.algebra)
            .field("window", &self.window)
            .finish_non_exhaustive()
    }
}

impl InteractionGroup {
    /// Build from an explicit table covering every element of a finite
    /// group. The identity must carry the identity map to within `id_tol`.
    pub fn from_table(
        group: Group,
        algebra: Arc<FdAlgebra>,
        table: BTreeMap<Elem, AlgebraMap>,
        id_tol: f64,
    ) -> Result<InteractionGroup, InteractionError> {
        let elements = group
            .elements()
            .expect("from_table requires a finite group");
        for k in table.keys() {
            group.check(k)?;
        }
        for e in &elements {
            let m = table
                .get(e)
                .ok_or_else(|| InteractionError::MissingElement(e.to_string()))?;
            if *m.algebra() != algebra {
                return Err(InteractionError::WrongAlgebra(e.to_string()));
            }
        }
        let idm = &table[&group.identity()];
        let res = idm.distance(&AlgebraMap::identity(&algebra));
        if res > id_tol {
            return Err(InteractionError::IdentityMap(res));
        }
        let window = elements.clone();
        Ok(InteractionGroup {
            group,
            algebra,
            assign: Assignment::Table(
                table.into_iter().map(|(k, v)| (k, Arc::new(v))).collect(),
            ),
            window,
        })
    }

    /// Build from an on-demand rule (used for Z^k); `window` is the element
    /// set over which verification suites quantify.
    pub fn lazy(
        group: Group,
        algebra: Arc<FdAlgebra>,
        window: Vec<Elem>,
        rule: Box<dyn Fn(&Elem) -> AlgebraMap + Send + Sync>,
    ) -> Result<InteractionGroup, InteractionError> {
        if !window.contains(&group.identity()) {
            return Err(InteractionError::BadWindow);
        }
        for g in &window {
            let gi = group.inv(g)?;
            if !window.contains(&gi) {
                return Err(InteractionError::BadWindow);
            }
        }
        let ig = InteractionGroup {
            group,
            algebra,
            assign: Assignment::Lazy {
                rule,
                cache: Mutex::new(BTreeMap::new()),
            },
            window,
        };
        let res = ig
            .v(&ig.group.identity())
            .distance(&AlgebraMap::identity(&ig.algebra));
        if res > 0.0 {
            return Err(InteractionError::IdentityMap(res));
        }
        Ok(ig)
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn algebra(&self) -> &Arc<FdAlgebra> {
        &self.algebra
    }

    pub fn window(&self) -> &[Elem] {
        &self.window
    }

    /// The map V_g.
    pub fn v(&self, g: &Elem) -> Arc<AlgebraMap> {
        match &self.assign {
            Assignment::Table(t) => t
                .get(g)
                .unwrap_or_else(|| panic!("no map assigned to {g}"))
                .clone(),
            Assignment::Lazy { rule, cache } => {
                let mut guard = cache.lock().unwrap();
                guard
                    .entry(g.clone())
                    .or_insert_with(|| Arc::new(rule(g)))
                    .clone()
            }
        }
    }

    /// The conditional expectation E_g = V_g V_{g^-1}.
    pub fn e_map(&self, g: &Elem) -> AlgebraMap {
        let gi = self.group.inv(g).expect("element outside group");
        self.v(g).compose(&self.v(&gi))
    }

    /// Orthonormal basis (vectorized) of the range R_g = V_g(A).
    pub fn range(&self, g: &Elem) -> Vec<CVec> {
        self.v(g).range()
    }

    /// V_alpha as a composition over the letters of the word.
    pub fn word_map(&self, alpha: &Word) -> AlgebraMap {
        let mut acc = AlgebraMap::identity(&self.algebra);
        for g in alpha.letters() {
            acc = acc.compose(&self.v(g));
        }
        acc
    }
}

/// Verify the partial-representation laws and the induced idempotent
/// calculus over the declared window.
pub fn verify_partial_representation(ig: &InteractionGroup, tol: f64) -> Report {
    let mut rep = Report::new("partial representation");
    let id = AlgebraMap::identity(ig.algebra());
    rep.check(
        "identity",
        "V_1 = id",
        ig.v(&ig.group().identity()).distance(&id),
        tol,
    );

    let g = ig.group();
    let win = ig.window();
    let mut worst2 = (0.0f64, String::new());
    let mut worst3 = (0.0f64, String::new());
    for x in win {
        let xi = g.inv(x).unwrap();
        let vx = ig.v(x);
        let vxi = ig.v(&xi);
        for h in win {
            let hi = g.inv(h).unwrap();
            let vh = ig.v(h);
            let vhi = ig.v(&hi);
            let xh = g.op(x, h).unwrap();
            let vxh = ig.v(&xh);
            // V_x V_h V_{h^-1} = V_{xh} V_{h^-1}
            let r2 = vx
                .compose(&vh)
                .compose(&vhi)
                .distance(&vxh.compose(&vhi));
            if r2 > worst2.0 {
                worst2 = (r2, format!("g={x}, h={h}"));
            }
            // V_{x^-1} V_x V_h = V_{x^-1} V_{xh}
            let r3 = vxi
                .compose(&vx)
                .compose(&vh)
                .distance(&vxi.compose(&vxh));
            if r3 > worst3.0 {
                worst3 = (r3, format!("g={x}, h={h}"));
            }
        }
    }
    rep.check_with(
        "composition-right",
        "V_g V_h V_{h^-1} = V_{gh} V_{h^-1}",
        worst2.0,
        tol,
        Some(worst2.1),
    );
    rep.check_with(
        "composition-left",
        "V_{g^-1} V_g V_h = V_{g^-1} V_{gh}",
        worst3.0,
        tol,
        Some(worst3.1),
    );

    // Induced idempotents: E_g = V_g V_{g^-1} are commuting idempotents and
    // V_g E_h = E_{gh} V_g.
    let mut worst_idem = (0.0f64, String::new());
    let mut worst_comm = (0.0f64, String::new());
    let mut worst_shift = (0.0f64, String::new());
    for x in win {
        let ex = ig.e_map(x);
        let r = ex.compose(&ex).distance(&ex);
        if r > worst_idem.0 {
            worst_idem = (r, format!("g={x}"));
        }
        for h in win {
            let eh = ig.e_map(h);
            let r = ex.compose(&eh).distance(&eh.compose(&ex));
            if r > worst_comm.0 {
                worst_comm = (r, format!("g={x}, h={h}"));
            }
            let xh = g.op(x, h).unwrap();
            let exh = ig.e_map(&xh);
            let vx = ig.v(x);
            let r = vx.compose(&eh).distance(&exh.compose(&vx));
            if r > worst_shift.0 {
                worst_shift = (r, format!("g={x}, h={h}"));
            }
        }
    }
    rep.check_with(
        "idempotent",
        "E_g^2 = E_g for E_g = V_g V_{g^-1}",
        worst_idem.0,
        tol,
        Some(worst_idem.1),
    );
    rep.check_with(
        "idempotents-commute",
        "E_g E_h = E_h E_g",
        worst_comm.0,
        tol,
        Some(worst_comm.1),
    );
    rep.check_with(
        "idempotent-shift",
        "V_g E_h = E_{gh} V_g",
        worst_shift.0,
        tol,
        Some(worst_shift.1),
    );
    rep
}

/// Verify the interaction axioms for a single element g: V_g unital and
/// completely positive, multiplicative and *-compatible on the range of
/// V_{g^-1}, and inverted there by V_{g^-1}.
pub fn verify_interaction<R: Rng>(
    ig: &InteractionGroup,
    g: &Elem,
    tol: f64,
    samples: usize,
    rng: &mut R,
) -> Report {
    let mut rep = Report::new(format!("interaction axioms at g={g}"));
    let vg = ig.v(g);
    let gi = ig.group().inv(g).unwrap();
    let vgi = ig.v(&gi);
    let alg = ig.algebra();

    let cert = map_certify(&vg, tol, samples, rng);
    rep.check("unital", "V_g(1) = 1", cert.unital_residual, tol);
    rep.check_with(
        "completely-positive",
        "Choi matrix of V_g is positive semidefinite",
        (-cert.choi_min_eig).max(0.0),
        tol,
        Some("negative Choi eigenvalue"),
    );
    rep.check(
        "sampled-positive",
        "V_g(a* a) >= 0 on random samples",
        cert.sampled_violation,
        tol,
    );

    // Multiplicativity on the range of V_{g^-1}, both slots, and
    // *-compatibility there.
    let range_inv: Vec<AlgElement> = ig
        .range(&gi)
        .iter()
        .map(|v| AlgElement::from_vec(alg, v))
        .collect();
    let d = alg.dim();
    let mut worst_mult = 0.0f64;
    let mut worst_star = 0.0f64;
    for r in &range_inv {
        let vr = vg.apply(r);
        worst_star = worst_star.max(vg.apply(&r.adjoint()).sub(&vr.adjoint()).norm());
        for k in 0..d {
            let b = AlgElement::basis(alg, k);
            let vb = vg.apply(&b);
            worst_mult = worst_mult.max(vg.apply(&r.mul(&b)).sub(&vr.mul(&vb)).norm());
            worst_mult = worst_mult.max(vg.apply(&b.mul(r)).sub(&vb.mul(&vr)).norm());
        }
    }
    rep.check(
        "multiplicative-on-range",
        "V_g(x b) = V_g(x) V_g(b) and V_g(b x) = V_g(b) V_g(x) for x in range(V_{g^-1})",
        worst_mult,
        tol,
    );
    rep.check(
        "star-on-range",
        "V_g(x*) = V_g(x)* for x in range(V_{g^-1})",
        worst_star,
        tol,
    );

    let mut worst_inv = 0.0f64;
    for r in &range_inv {
        worst_inv = worst_inv.max(vgi.apply(&vg.apply(r)).sub(r).norm());
    }
    rep.check(
        "inverse-on-range",
        "V_{g^-1} V_g = id on range(V_{g^-1})",
        worst_inv,
        tol,
    );
    rep
}

/// Run [`verify_interaction`] for every window element, merged into one
/// report.
pub fn verify_interaction_all<R: Rng>(
    ig: &InteractionGroup,
    tol: f64,
    samples: usize,
    rng: &mut R,
) -> Report {
    let mut rep = Report::new("interaction axioms over window");
    for g in ig.window() {
        rep.absorb(&format!("g={g}"), verify_interaction(ig, g, tol, samples, rng));
    }
    rep
}

/// Non-degeneracy of E_g: the form (a, b) -> tau(E_g(a* b)) must be positive
/// definite. Returns the minimal Gram eigenvalue.
pub fn check_nondegenerate<R: Rng>(
    ig: &InteractionGroup,
    g: &Elem,
    gap: f64,
    rng: &mut R,
) -> (bool, f64) {
    let e = ig.e_map(g);
    let report = cond_exp_check(&e, gap, Some(12), rng);
    (report.gram_min_eig > gap, report.gram_min_eig)
}

/// The range of a word map, verified against the intersection of the ranges
/// over the word's prefix products, and the word expectation identity
/// V_alpha V_{alpha^-1} = product of E_h over prefix products h.
pub fn word_range(ig: &InteractionGroup, alpha: &Word, tol: f64) -> (Vec<CVec>, Report) {
    let mut rep = Report::new(format!("word range of {alpha}"));
    let g = ig.group();
    let dim = ig.algebra().dim();
    let valpha = ig.word_map(alpha);
    let basis = valpha.range();

    let mu = alpha.prefix_products(g).unwrap();
    // Intersection of ranges over prefix products; the identity contributes
    // the whole algebra.
    let mut cap: Option<Vec<CVec>> = None;
    for h in &mu {
        if *h == g.identity() {
            continue;
        }
        let rh = ig.range(h);
        cap = Some(match cap {
            None => rh,
            Some(prev) => linalg::subspace_intersection(&prev, &rh, dim, 1e-8),
        });
    }
    let cap = cap.unwrap_or_else(|| {
        (0..dim)
            .map(|k| CVec::from_fn(dim, |i, _| if i == k { linalg::ONE } else { linalg::ZERO }))
            .collect()
    });
    rep.check(
        "range-intersection",
        "range(V_alpha) = intersection of range(V_h) over prefix products h",
        linalg::subspace_distance(&basis, &cap, dim),
        tol,
    );

    // V_alpha V_{alpha^-1} = product of E_h over prefix products.
    let alpha_inv = alpha.inverse(g).unwrap();
    let lhs = valpha.compose(&ig.word_map(&alpha_inv));
    let mut prod = AlgebraMap::identity(ig.algebra());
    for h in &mu {
        prod = prod.compose(&ig.e_map(h));
    }
    rep.check(
        "word-expectation",
        "V_alpha V_{alpha^-1} = product of E_h, h in prefix products",
        lhs.distance(&prod),
        tol,
    );
    (basis, rep)
}

/// Word-level interaction laws: V_alpha is a partial isometry of maps and is
/// multiplicative on the range of V_{alpha^-1}.
pub fn check_word_interaction(ig: &InteractionGroup, alpha: &Word, tol: f64) -> Report {
    let mut rep = Report::new(format!("word interaction for {alpha}"));
    let g = ig.group();
    let alg = ig.algebra();
    let valpha = ig.word_map(alpha);
    let alpha_inv = alpha.inverse(g).unwrap();
    let vinv = ig.word_map(&alpha_inv);

    rep.check(
        "word-partial-isometry",
        "V_alpha V_{alpha^-1} V_alpha = V_alpha",
        valpha.compose(&vinv).compose(&valpha).distance(&valpha),
        tol,
    );

    let range_inv: Vec<AlgElement> = vinv
        .range()
        .iter()
        .map(|v| AlgElement::from_vec(alg, v))
        .collect();
    let mut worst = 0.0f64;
    for r in &range_inv {
        let vr = valpha.apply(r);
        for k in 0..alg.dim() {
            let b = AlgElement::basis(alg, k);
            let vb = valpha.apply(&b);
            worst = worst.max(valpha.apply(&r.mul(&b)).sub(&vr.mul(&vb)).norm());
            worst = worst.max(valpha.apply(&b.mul(r)).sub(&vb.mul(&vr)).norm());
        }
    }
    rep.check(
        "word-multiplicative",
        "V_alpha multiplicative against range(V_{alpha^-1})",
        worst,
        tol,
    );
    rep
}

/// Schwarz-type inequality V_g(a)* V_g(a) <= V_g(a* a) on random samples.
pub fn schwarz_check<R: Rng>(
    ig: &InteractionGroup,
    g: &Elem,
    tol: f64,
    samples: usize,
    rng: &mut R,
) -> Report {
    let mut rep = Report::new(format!("Schwarz inequality at g={g}"));
    let vg = ig.v(g);
    let alg = ig.algebra();
    let mut worst = 0.0f64;
    let mut witness = String::new();
    for s in 0..samples {
        let a = AlgElement::random(alg, rng);
        let gap = vg
            .apply(&a.adjoint().mul(&a))
            .sub(&vg.apply(&a.adjoint()).mul(&vg.apply(&a)));
        let scale = a.norm().powi(2).max(1.0);
        let viol = (-linalg::min_eig_hermitian(gap.matrix()) / scale).max(0.0);
        if viol > worst {
            worst = viol;
            witness = format!("sample {s}");
        }
    }
    rep.check_with(
        "schwarz",
        "V_g(a*) V_g(a) <= V_g(a* a)",
        worst,
        tol,
        Some(witness),
    );
    rep
}

/// Build the joint expectation E_X = product of E_g over g in X, verify that
/// the product is order-independent, that its range is the intersection of
/// the individual ranges, and that V_g carries R_X into R_{gX} (onto it when
/// the identity lies in gX).
pub fn set_expectation(
    ig: &InteractionGroup,
    x_set: &BTreeSet<Elem>,
    tol: f64,
) -> (AlgebraMap, Report) {
    let mut rep = Report::new(format!("joint expectation over X = {}", fmt_set(x_set)));
    let g = ig.group();
    let dim = ig.algebra().dim();

    let ordered: Vec<&Elem> = x_set.iter().collect();
    let compose_in = |order: &[&Elem]| {
        let mut acc = AlgebraMap::identity(ig.algebra());
        for h in order {
            acc = acc.compose(&ig.e_map(h));
        }
        acc
    };
    let ex = compose_in(&ordered);
    // Order independence: compare against the reversed order and every
    // rotation of the sorted order.
    let mut worst_order = 0.0f64;
    let reversed: Vec<&Elem> = ordered.iter().rev().cloned().collect();
    worst_order = worst_order.max(ex.distance(&compose_in(&reversed)));
    for r in 1..ordered.len() {
        let mut rot = ordered.clone();
        rot.rotate_left(r);
        worst_order = worst_order.max(ex.distance(&compose_in(&rot)));
    }
    rep.check(
        "order-independent",
        "product of commuting E_g does not depend on the order",
        worst_order,
        tol,
    );

    // Range = intersection of individual ranges.
    let mut cap: Option<Vec<CVec>> = None;
    for h in x_set {
        if *h == g.identity() {
            continue;
        }
        let rh = ig.range(h);
        cap = Some(match cap {
            None => rh,
            Some(prev) => linalg::subspace_intersection(&prev, &rh, dim, 1e-8),
        });
    }
    if let Some(cap) = cap {
        rep.check(
            "range-intersection",
            "range(E_X) = intersection of range(V_g), g in X",
            linalg::subspace_distance(&ex.range(), &cap, dim),
            tol,
        );
    }

    // Translation: V_g(R_X) inside R_{gX}, with equality when 1 in gX.
    let mut worst_in = (0.0f64, String::new());
    let mut worst_eq = (0.0f64, String::new());
    for t in ig.window() {
        let translated: BTreeSet<Elem> = x_set
            .iter()
            .map(|h| g.op(t, h).unwrap())
            .collect();
        let e_translated = {
            let ord: Vec<&Elem> = translated.iter().collect();
            compose_in(&ord)
        };
        let vt = ig.v(t);
        let image: Vec<CVec> = ex
            .range()
            .iter()
            .map(|v| vt.matrix() * v)
            .collect();
        let image = linalg::orthonormalize(&image, linalg::RANK_CUTOFF);
        let target = e_translated.range();
        let r_in = linalg::subspace_leq_residual(&image, &target, dim);
        if r_in > worst_in.0 {
            worst_in = (r_in, format!("g={t}"));
        }
        if translated.contains(&g.identity()) {
            let r_eq = linalg::subspace_distance(&image, &target, dim);
            if r_eq > worst_eq.0 {
                worst_eq = (r_eq, format!("g={t}"));
            }
        }
    }
    rep.check_with(
        "translate-into",
        "V_g(R_X) lies inside R_{gX}",
        worst_in.0,
        tol,
        Some(worst_in.1),
    );
    rep.check_with(
        "translate-onto",
        "V_g(R_X) = R_{gX} when the identity lies in gX",
        worst_eq.0,
        tol,
        Some(worst_eq.1),
    );
    (ex, rep)
}

fn fmt_set(s: &BTreeSet<Elem>) -> String {
    let items: Vec<String> = s.iter().map(|e| e.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::element;
    use crate::group::words_over;
    use crate::linalg::{CMat, ONE, ZERO};
    use crate::models;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flip_model_is_partial_representation() {
        let ig = models::flip_expectation_model();
        let rep = verify_partial_representation(&ig, 1e-12);
        assert!(rep.passed(), "{}", rep.summary());
    }

    #[test]
    fn flip_model_satisfies_interaction_axioms() {
        let ig = models::flip_expectation_model();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let rep = verify_interaction_all(&ig, 1e-10, 10, &mut rng);
        assert!(rep.passed(), "{}", rep.summary());
    }

    #[test]
    fn flip_model_expectation_is_nondegenerate() {
        let ig = models::flip_expectation_model();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let (ok, gram_min) = check_nondegenerate(&ig, &Elem::Finite(1), 1e-6, &mut rng);
        assert!(ok);
        assert!((gram_min - 0.5).abs() < 1e-12, "gram min eig {gram_min}");
    }

    #[test]
    fn flip_model_word_ranges() {
        let ig = models::flip_expectation_model();
        let alphabet = vec![Elem::Finite(0), Elem::Finite(1)];
        for w in words_over(&alphabet, 3) {
            let (_, rep) = word_range(&ig, &w, 1e-10);
            assert!(rep.passed(), "word {w}: {}", rep.summary());
            let rep = check_word_interaction(&ig, &w, 1e-10);
            assert!(rep.passed(), "word {w}: {}", rep.summary());
        }
    }

    #[test]
    fn flip_model_word_range_is_diagonal() {
        let ig = models::flip_expectation_model();
        let w = Word::new(vec![Elem::Finite(1), Elem::Finite(1)]);
        let (basis, _) = word_range(&ig, &w, 1e-10);
        assert_eq!(basis.len(), 2, "range of the squared map is the diagonal");
    }

    #[test]
    fn flip_model_schwarz() {
        let ig = models::flip_expectation_model();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let rep = schwarz_check(&ig, &Elem::Finite(1), 1e-10, 25, &mut rng);
        assert!(rep.passed(), "{}", rep.summary());
    }

    #[test]
    fn flip_model_set_expectation() {
        let ig = models::flip_expectation_model();
        let x: BTreeSet<Elem> = [Elem::Finite(0), Elem::Finite(1)].into_iter().collect();
        let (ex, rep) = set_expectation(&ig, &x, 1e-10);
        assert!(rep.passed(), "{}", rep.summary());
        // E_X is the diagonal expectation here.
        assert_eq!(ex.range().len(), 2);
    }

    #[test]
    fn transpose_fails_interaction_but_not_partial_rep() {
        // The transpose map has order two, so the power table over Z_2 is a
        // perfectly good partial representation; the interaction axioms
        // (complete positivity, multiplicativity on the range) fail.
        let alg = crate::algebra::FdAlgebra::full(2);
        let t = AlgebraMap::from_action(&alg, |a| {
            element(&alg, a.matrix().transpose()).unwrap()
        });
        let mut table = BTreeMap::new();
        table.insert(Elem::Finite(0), AlgebraMap::identity(&alg));
        table.insert(Elem::Finite(1), t);
        let ig = InteractionGroup::from_table(Group::cyclic(2), alg, table, 0.0).unwrap();
        assert!(verify_partial_representation(&ig, 1e-12).passed());
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let rep = verify_interaction(&ig, &Elem::Finite(1), 1e-10, 10, &mut rng);
        assert!(!rep.get("completely-positive").unwrap().passed);
        assert!(!rep.get("multiplicative-on-range").unwrap().passed);
    }

    #[test]
    fn commuting_unitaries_are_an_interaction_group() {
        let ig = models::commuting_unitaries_z2(31, 1);
        let rep = verify_partial_representation(&ig, 1e-12);
        assert!(rep.passed(), "{}", rep.summary());
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let rep = verify_interaction_all(&ig, 1e-10, 4, &mut rng);
        assert!(rep.passed(), "{}", rep.summary());
        // Automorphisms have full ranges everywhere.
        for g in ig.window() {
            assert_eq!(ig.range(g).len(), 4);
        }
    }

    #[test]
    fn z4_power_model_verifies() {
        let ig = models::flip_expectation_z4();
        assert!(verify_partial_representation(&ig, 1e-12).passed());
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        assert!(verify_interaction_all(&ig, 1e-10, 6, &mut rng).passed());
    }

    #[test]
    fn lazy_cache_returns_same_instance() {
        let ig = models::ad_unitary_z(40, 2, 3);
        let g = Elem::vector(&[2]);
        let a = ig.v(&g);
        let b = ig.v(&g);
        assert!(Arc::ptr_eq(&a, &b), "cache must return the memoized map");
    }

    #[test]
    fn table_constructor_validates() {
        let alg = crate::algebra::FdAlgebra::full(2);
        // Missing element 1.
        let mut table = BTreeMap::new();
        table.insert(Elem::Finite(0), AlgebraMap::identity(&alg));
        let err =
            InteractionGroup::from_table(Group::cyclic(2), alg.clone(), table, 0.0).unwrap_err();
        assert!(matches!(err, InteractionError::MissingElement(_)));

        // Identity slot not the identity map.
        let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
        let mut table = BTreeMap::new();
        table.insert(Elem::Finite(0), AlgebraMap::conjugation(&alg, &x));
        table.insert(Elem::Finite(1), AlgebraMap::identity(&alg));
        let err =
            InteractionGroup::from_table(Group::cyclic(2), alg.clone(), table, 1e-12).unwrap_err();
        assert!(matches!(err, InteractionError::IdentityMap(_)));
    }
}
