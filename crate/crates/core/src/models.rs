//! Ready-made interaction groups used throughout the test suites and the
//! command-line scenarios.

use crate::algebra::{element, AlgElement, AlgebraMap, FdAlgebra};
use crate::group::{Elem, Group};
use crate::interaction::InteractionGroup;
use crate::linalg::{self, cr, CMat, ONE, ZERO};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::sync::Arc;

/// The pinch onto the diagonal of a full matrix algebra.
pub fn diagonal_expectation(alg: &Arc<FdAlgebra>) -> AlgebraMap {
    AlgebraMap::from_action(alg, |a| {
        let n = a.matrix().nrows();
        let mut out = CMat::zeros(n, n);
        for i in 0..n {
            out[(i, i)] = a.matrix()[(i, i)];
        }
        element(alg, out).unwrap()
    })
}

/// The standard example on M_2 over Z_2: the nontrivial element acts by
/// first swapping the two diagonal entries (conjugation by the symmetry
/// exchanging the basis vectors) and then pinching to the diagonal. The
/// square of that map is the diagonal expectation, so the pair (id, map) is
/// a genuine interaction group which is not a group of automorphisms.
pub fn flip_expectation_model() -> InteractionGroup {
    let alg = FdAlgebra::full(2);
    let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let flip = AlgebraMap::conjugation(&alg, &x);
    let v1 = diagonal_expectation(&alg).compose(&flip);
    let mut table = BTreeMap::new();
    table.insert(Elem::Finite(0), AlgebraMap::identity(&alg));
    table.insert(Elem::Finite(1), v1);
    InteractionGroup::from_table(Group::cyclic(2), alg, table, 0.0)
        .expect("flip model is well formed")
}

/// Every element acts as the identity map: the trivial interaction group of
/// a finite group on an algebra.
pub fn identity_model(group: Group, alg: Arc<FdAlgebra>) -> InteractionGroup {
    let table: BTreeMap<Elem, AlgebraMap> = group
        .elements()
        .expect("identity_model requires a finite group")
        .into_iter()
        .map(|e| (e, AlgebraMap::identity(&alg)))
        .collect();
    InteractionGroup::from_table(group, alg, table, 0.0).expect("identity model is well formed")
}

/// Two commuting random unitaries on M_2: they share a random eigenbasis
/// drawn from the seed, with fixed distinct phase pairs.
pub fn commuting_unitaries_pair(seed: u64) -> (Arc<FdAlgebra>, CMat, CMat) {
    let alg = FdAlgebra::full(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = linalg::random_unitary(&mut rng, 2);
    let phase = |t: f64| linalg::c(t.cos(), t.sin());
    let d1 = CMat::from_diagonal(&linalg::CVec::from_vec(vec![phase(0.9), phase(2.3)]));
    let d2 = CMat::from_diagonal(&linalg::CVec::from_vec(vec![phase(-1.1), phase(0.4)]));
    let u1 = &u * d1 * u.adjoint();
    let u2 = &u * d2 * u.adjoint();
    (alg, u1, u2)
}

/// Two commuting random unitaries on M_2 (they share a random eigenbasis),
/// acting as a Z^2 group of automorphisms with the given verification
/// window radius.
pub fn commuting_unitaries_z2(seed: u64, radius: i64) -> InteractionGroup {
    let (alg, u1, u2) = commuting_unitaries_pair(seed);
    let a1 = AlgebraMap::conjugation(&alg, &u1);
    let a1_inv = AlgebraMap::conjugation(&alg, &u1.adjoint());
    let a2 = AlgebraMap::conjugation(&alg, &u2);
    let a2_inv = AlgebraMap::conjugation(&alg, &u2.adjoint());

    let group = Group::free_abelian(2);
    let window = group.window(radius);
    let rule = move |g: &Elem| -> AlgebraMap {
        let Elem::Vector(v) = g else {
            panic!("Z^2 model got a non-vector element")
        };
        let (m, n) = (v[0], v[1]);
        let part1 = if m >= 0 {
            a1.pow(m as usize)
        } else {
            a1_inv.pow((-m) as usize)
        };
        let part2 = if n >= 0 {
            a2.pow(n as usize)
        } else {
            a2_inv.pow((-n) as usize)
        };
        part1.compose(&part2)
    };
    InteractionGroup::lazy(group, alg, window, Box::new(rule))
        .expect("commuting unitaries form an interaction group")
}

/// A single random automorphism Ad(u) of M_n acting as Z, with window
/// [-radius, radius].
pub fn ad_unitary_z(seed: u64, n: usize, radius: i64) -> InteractionGroup {
    let alg = FdAlgebra::full(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = linalg::random_unitary(&mut rng, n);
    let fwd = AlgebraMap::conjugation(&alg, &u);
    let bwd = AlgebraMap::conjugation(&alg, &u.adjoint());
    let group = Group::free_abelian(1);
    let window = group.window(radius);
    let rule = move |g: &Elem| -> AlgebraMap {
        let Elem::Vector(v) = g else {
            panic!("Z model got a non-vector element")
        };
        let k = v[0];
        if k >= 0 {
            fwd.pow(k as usize)
        } else {
            bwd.pow((-k) as usize)
        }
    };
    InteractionGroup::lazy(group, alg, window, Box::new(rule))
        .expect("Ad(u) powers form an interaction group")
}

/// Powers of the flip-expectation map assigned along Z_4. Writing m for the
/// generator's map, m^2 is the diagonal expectation and m^3 = m, so the
/// power table k -> m^k closes up and satisfies the partial-representation
/// laws without being a group representation.
pub fn flip_expectation_z4() -> InteractionGroup {
    let alg = FdAlgebra::full(2);
    let x = CMat::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]);
    let flip = AlgebraMap::conjugation(&alg, &x);
    let v1 = diagonal_expectation(&alg).compose(&flip);
    let mut table = BTreeMap::new();
    table.insert(Elem::Finite(0), AlgebraMap::identity(&alg));
    table.insert(Elem::Finite(1), v1.clone());
    table.insert(Elem::Finite(2), v1.pow(2));
    table.insert(Elem::Finite(3), v1.pow(3));
    InteractionGroup::from_table(Group::cyclic(4), alg, table, 0.0)
        .expect("powers of the flip map over Z_4")
}

/// Random positive-definite density matrix, normalized to trace one.
pub fn random_density(seed: u64, n: usize) -> CMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = linalg::gaussian_cmat(&mut rng, n, n);
    let p = g.adjoint() * &g + linalg::identity(n).map(|z| z * cr(0.1));
    let tr = p.trace();
    p.map(|z| z / tr)
}

/// Random element helper bound to a fresh seeded generator.
pub fn seeded_elements(alg: &Arc<FdAlgebra>, seed: u64, count: usize) -> Vec<AlgElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| AlgElement::random(alg, &mut rng)).collect()
}
