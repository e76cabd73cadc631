//! Groups, words over group letters, and the exact combinatorial calculus of
//! partial-representation monomials.
//!
//! A word alpha = (g_1, ..., g_n) stands for the product v_{g_1} ... v_{g_n}
//! of partial-representation generators. Two exact invariants drive all the
//! algebra downstream:
//!
//! * `total`: the plain group product g_1 g_2 ... g_n;
//! * `prefix_products`: the set of all prefix products, including the empty
//!   prefix (the identity) and the full product.
//!
//! Every such monomial has the normal form (commuting idempotent for each
//! prefix product) x (single generator for the total product), captured by
//! [`NormalForm`], whose multiplication, star, and order are pure set
//! arithmetic with no floating point anywhere.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GroupError {
    #[error("element {0} does not belong to this group")]
    ForeignElement(String),
    #[error("multiplication table is not square ({rows} rows, row {bad} has {len} entries)")]
    RaggedTable { rows: usize, bad: usize, len: usize },
    #[error("table entry {0} out of range")]
    EntryOutOfRange(usize),
    #[error("no two-sided identity element in table")]
    NoIdentity,
    #[error("element {0} has no inverse")]
    NoInverse(usize),
    #[error("associativity fails at indices ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
}

/// A group element: an index into a finite group's table, or an integer
/// vector in a free abelian group.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Elem {
    Finite(usize),
    Vector(Vec<i64>),
}

impl Elem {
    pub fn vector(coords: &[i64]) -> Elem {
        Elem::Vector(coords.to_vec())
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Elem::Finite(i) => write!(f, "{i}"),
            Elem::Vector(v) => {
                write!(f, "(")?;
                for (k, x) in v.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug)]
enum GroupKind {
    Finite {
        table: Vec<Vec<usize>>,
        inverse: Vec<usize>,
        identity: usize,
    },
    FreeAbelian {
        rank: usize,
    },
}

/// A group given either by a verified Cayley table or as Z^k.
#[derive(Clone, Debug)]
pub struct Group {
    kind: GroupKind,
}

impl Group {
    /// Build a finite group from its multiplication table; identity,
    /// inverses, and associativity are verified exhaustively.
    pub fn from_table(table: Vec<Vec<usize>>) -> Result<Group, GroupError> {
        let n = table.len();
        for (i, row) in table.iter().enumerate() {
            if row.len() != n {
                return Err(GroupError::RaggedTable {
                    rows: n,
                    bad: i,
                    len: row.len(),
                });
            }
            for &e in row {
                if e >= n {
                    return Err(GroupError::EntryOutOfRange(e));
                }
            }
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| table[e][x] == x && table[x][e] == x))
            .ok_or(GroupError::NoIdentity)?;
        let mut inverse = vec![usize::MAX; n];
        for x in 0..n {
            inverse[x] = (0..n)
                .find(|&y| table[x][y] == identity && table[y][x] == identity)
                .ok_or(GroupError::NoInverse(x))?;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(GroupError::NotAssociative(a, b, c));
                    }
                }
            }
        }
        Ok(Group {
            kind: GroupKind::Finite {
                table,
                inverse,
                identity,
            },
        })
    }

    /// Cyclic group of order n, identity at index 0.
    pub fn cyclic(n: usize) -> Group {
        assert!(n > 0);
        let table = (0..n)
            .map(|i| (0..n).map(|j| (i + j) % n).collect())
            .collect();
        Group::from_table(table).expect("cyclic table is a group")
    }

    /// Symmetric group on `degree` points, elements indexed by the
    /// lexicographic order of one-line permutation notation.
    pub fn symmetric(degree: usize) -> Group {
        assert!((1..=5).contains(&degree), "symmetric(): degree 1..=5");
        let perms = permutations(degree);
        let index_of = |p: &Vec<usize>| perms.iter().position(|q| q == p).unwrap();
        let n = perms.len();
        let mut table = vec![vec![0usize; n]; n];
        for (i, p) in perms.iter().enumerate() {
            for (j, q) in perms.iter().enumerate() {
                // (p q)(x) = p(q(x))
                let comp: Vec<usize> = (0..degree).map(|x| p[q[x]]).collect();
                table[i][j] = index_of(&comp);
            }
        }
        Group::from_table(table).expect("composition of permutations is a group")
    }

    /// Free abelian group Z^rank with vector elements.
    pub fn free_abelian(rank: usize) -> Group {
        Group {
            kind: GroupKind::FreeAbelian { rank },
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, GroupKind::Finite { .. })
    }

    /// Number of elements for finite groups.
    pub fn order(&self) -> Option<usize> {
        match &self.kind {
            GroupKind::Finite { table, .. } => Some(table.len()),
            GroupKind::FreeAbelian { .. } => None,
        }
    }

    pub fn identity(&self) -> Elem {
        match &self.kind {
            GroupKind::Finite { identity, .. } => Elem::Finite(*identity),
            GroupKind::FreeAbelian { rank } => Elem::Vector(vec![0; *rank]),
        }
    }

    /// Reject elements of the wrong kind, out-of-range indices, and vectors
    /// of the wrong length.
    pub fn check(&self, e: &Elem) -> Result<(), GroupError> {
        let ok = match (&self.kind, e) {
            (GroupKind::Finite { table, .. }, Elem::Finite(i)) => *i < table.len(),
            (GroupKind::FreeAbelian { rank }, Elem::Vector(v)) => v.len() == *rank,
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(GroupError::ForeignElement(e.to_string()))
        }
    }

    pub fn op(&self, a: &Elem, b: &Elem) -> Result<Elem, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(match (&self.kind, a, b) {
            (GroupKind::Finite { table, .. }, Elem::Finite(i), Elem::Finite(j)) => {
                Elem::Finite(table[*i][*j])
            }
            (GroupKind::FreeAbelian { .. }, Elem::Vector(v), Elem::Vector(w)) => {
                Elem::Vector(v.iter().zip(w).map(|(x, y)| x + y).collect())
            }
            _ => unreachable!("check() above rules out mixed kinds"),
        })
    }

    pub fn inv(&self, a: &Elem) -> Result<Elem, GroupError> {
        self.check(a)?;
        Ok(match (&self.kind, a) {
            (GroupKind::Finite { inverse, .. }, Elem::Finite(i)) => Elem::Finite(inverse[*i]),
            (GroupKind::FreeAbelian { .. }, Elem::Vector(v)) => {
                Elem::Vector(v.iter().map(|x| -x).collect())
            }
            _ => unreachable!(),
        })
    }

    /// All elements of a finite group.
    pub fn elements(&self) -> Option<Vec<Elem>> {
        match &self.kind {
            GroupKind::Finite { table, .. } => {
                Some((0..table.len()).map(Elem::Finite).collect())
            }
            GroupKind::FreeAbelian { .. } => None,
        }
    }

    /// All vectors with coordinates in [-radius, radius] (free abelian), or
    /// every element (finite). This is the standard verification window.
    pub fn window(&self, radius: i64) -> Vec<Elem> {
        match &self.kind {
            GroupKind::Finite { .. } => self.elements().unwrap(),
            GroupKind::FreeAbelian { rank } => {
                let mut out = vec![Vec::new()];
                for _ in 0..*rank {
                    let mut next = Vec::new();
                    for v in &out {
                        for x in -radius..=radius {
                            let mut w = v.clone();
                            w.push(x);
                            next.push(w);
                        }
                    }
                    out = next;
                }
                out.into_iter().map(Elem::Vector).collect()
            }
        }
    }

    /// Left-translate a set: g S.
    pub fn translate(&self, g: &Elem, set: &BTreeSet<Elem>) -> Result<BTreeSet<Elem>, GroupError> {
        set.iter().map(|s| self.op(g, s)).collect()
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for x in 0..n {
                if !p.contains(&x) {
                    let mut q = p.clone();
                    q.push(x);
                    next.push(q);
                }
            }
        }
        out = next;
    }
    out.sort();
    out
}

/// A finite word of group letters, standing for v_{g_1} ... v_{g_n}.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Word {
    letters: Vec<Elem>,
}

impl Word {
    pub fn new(letters: Vec<Elem>) -> Word {
        Word { letters }
    }

    pub fn empty() -> Word {
        Word {
            letters: Vec::new(),
        }
    }

    pub fn letters(&self) -> &[Elem] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Word { letters }
    }

    /// Product of all letters; identity for the empty word.
    pub fn total(&self, g: &Group) -> Result<Elem, GroupError> {
        let mut acc = g.identity();
        for x in &self.letters {
            acc = g.op(&acc, x)?;
        }
        Ok(acc)
    }

    /// Set of all prefix products, including the identity (empty prefix) and
    /// the total product.
    pub fn prefix_products(&self, g: &Group) -> Result<BTreeSet<Elem>, GroupError> {
        let mut set = BTreeSet::new();
        let mut acc = g.identity();
        set.insert(acc.clone());
        for x in &self.letters {
            acc = g.op(&acc, x)?;
            set.insert(acc.clone());
        }
        Ok(set)
    }

    /// The word (g_n^-1, ..., g_1^-1), so that the represented monomial is
    /// the adjoint of the original one.
    pub fn inverse(&self, g: &Group) -> Result<Word, GroupError> {
        let letters: Result<Vec<Elem>, GroupError> =
            self.letters.iter().rev().map(|x| g.inv(x)).collect();
        Ok(Word { letters: letters? })
    }

    pub fn normal_form(&self, g: &Group) -> Result<NormalForm, GroupError> {
        NormalForm::new(self.prefix_products(g)?, self.total(g)?)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (k, x) in self.letters.iter().enumerate() {
            if k > 0 {
                write!(f, " ")?;
            }
            write!(f, "{x}")?;
        }
        write!(f, "]")
    }
}

/// Normal form of a partial-representation monomial: a commuting family of
/// idempotents indexed by `constraints`, followed by the generator of
/// `total`. Invariants: the identity and `total` both lie in `constraints`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct NormalForm {
    constraints: BTreeSet<Elem>,
    total: Elem,
}

impl NormalForm {
    pub fn new(constraints: BTreeSet<Elem>, total: Elem) -> Result<NormalForm, GroupError> {
        if !constraints.contains(&total) {
            return Err(GroupError::ForeignElement(format!(
                "total {total} missing from constraint set"
            )));
        }
        Ok(NormalForm { constraints, total })
    }

    pub fn constraints(&self) -> &BTreeSet<Elem> {
        &self.constraints
    }

    pub fn total(&self) -> &Elem {
        &self.total
    }

    /// (S, g)(T, h) = (S union gT, gh): concatenation of the underlying
    /// monomials.
    pub fn mul(&self, other: &NormalForm, g: &Group) -> Result<NormalForm, GroupError> {
        let mut set = self.constraints.clone();
        set.extend(g.translate(&self.total, &other.constraints)?);
        let total = g.op(&self.total, &other.total)?;
        NormalForm::new(set, total)
    }

    /// (S, g)* = (g^-1 S, g^-1): the adjoint monomial.
    pub fn star(&self, g: &Group) -> Result<NormalForm, GroupError> {
        let gi = g.inv(&self.total)?;
        let set = g.translate(&gi, &self.constraints)?;
        NormalForm::new(set, gi)
    }

    /// Partial-isometry order: self <= other iff the group parts agree and
    /// self carries at least the constraints of other (more idempotent
    /// factors means a smaller partial isometry).
    pub fn leq(&self, other: &NormalForm) -> bool {
        self.total == other.total && self.constraints.is_superset(&other.constraints)
    }
}

/// Exhaustively verify the monomial calculus over all words of length at
/// most `maxlen` in the given alphabet: the normal form is multiplicative
/// and star-compatible, prefix-product sets compose as mu(ab) = mu(a)
/// union a_total mu(b), every monomial is a partial isometry in the order
/// of [`NormalForm::leq`], and idempotents absorb across a monomial. All
/// of it is integer and set arithmetic, so the pass threshold is zero.
pub fn verify_word_calculus(
    g: &Group,
    alphabet: &[Elem],
    maxlen: usize,
) -> Result<crate::report::Report, GroupError> {
    let mut out = crate::report::Report::new("word calculus");
    let words = words_over(alphabet, maxlen);
    let forms: Vec<NormalForm> = words
        .iter()
        .map(|w| w.normal_form(g))
        .collect::<Result<_, _>>()?;

    let prefixes: Vec<BTreeSet<Elem>> = words
        .iter()
        .map(|w| w.prefix_products(g))
        .collect::<Result<_, _>>()?;

    let mut bad_mul = 0usize;
    let mut bad_prefix = 0usize;
    let mut first_mul = None;
    for (ia, (wa, fa)) in words.iter().zip(&forms).enumerate() {
        for (ib, (wb, fb)) in words.iter().zip(&forms).enumerate() {
            let concat = wa.concat(wb);
            if fa.mul(fb, g)? != concat.normal_form(g)? {
                bad_mul += 1;
                first_mul.get_or_insert_with(|| format!("{wa} * {wb}"));
            }
            let mut glued = prefixes[ia].clone();
            glued.extend(g.translate(fa.total(), &prefixes[ib])?);
            if glued != concat.prefix_products(g)? {
                bad_prefix += 1;
            }
        }
    }
    out.check_with(
        "normal-form-multiplicative",
        "nf(ab) = nf(a) nf(b) for all word pairs",
        bad_mul as f64,
        0.0,
        first_mul,
    );
    out.check(
        "prefix-products-compose",
        "mu(ab) = mu(a) union a mu(b)",
        bad_prefix as f64,
        0.0,
    );

    let mut bad_star = 0usize;
    let mut bad_isometry = 0usize;
    let mut bad_absorb = 0usize;
    let one = g.identity();
    for (w, f) in words.iter().zip(&forms) {
        let star = f.star(g)?;
        if star != w.inverse(g)?.normal_form(g)? {
            bad_star += 1;
        }
        // nf nf* nf = nf, and nf nf* is the idempotent with the same
        // constraint set.
        let projector = f.mul(&star, g)?;
        if projector.total() != &one
            || projector.constraints() != f.constraints()
            || f.mul(&star, g)?.mul(f, g)? != *f
        {
            bad_isometry += 1;
        }
        // e_h nf = nf e_(g^-1 h) for every constraint h of the monomial.
        for h in f.constraints() {
            let left_idem = NormalForm::new(
                [one.clone(), h.clone()].into_iter().collect(),
                one.clone(),
            )?;
            let gi = g.inv(f.total())?;
            let shifted = g.op(&gi, h)?;
            let right_idem = NormalForm::new(
                [one.clone(), shifted].into_iter().collect(),
                one.clone(),
            )?;
            if left_idem.mul(f, g)? != f.mul(&right_idem, g)? {
                bad_absorb += 1;
            }
        }
    }
    out.check(
        "star-inverts-words",
        "nf(a)* = nf(reversed inverses of a)",
        bad_star as f64,
        0.0,
    );
    out.check(
        "partial-isometry",
        "nf nf* nf = nf with idempotent nf nf*",
        bad_isometry as f64,
        0.0,
    );
    out.check(
        "idempotent-absorption",
        "e_h nf = nf e_(total^-1 h) for constraints h",
        bad_absorb as f64,
        0.0,
    );
    out.flag(
        "word-count",
        "number of words surveyed",
        !words.is_empty(),
        Some(format!("{} words, alphabet {}", words.len(), alphabet.len())),
    );
    Ok(out)
}

/// All words of length <= maxlen over the given alphabet (including the empty
/// word).
pub fn words_over(alphabet: &[Elem], maxlen: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..maxlen {
        let mut next = Vec::new();
        for w in &layer {
            for a in alphabet {
                let mut letters = w.letters.clone();
                letters.push(a.clone());
                next.push(Word { letters });
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}
