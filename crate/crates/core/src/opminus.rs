//! Finite unions of finite intersections of open half-spaces.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::TermError;
use crate::polyhedral::{entails_basic, is_empty_meet, Certificate, WitnessPoint};
use crate::rational::RationalVector;

/// Upper bound on the number of basic entailments a single [`Term::leq`] may issue.
pub const MAX_SELECTIONS: u128 = 100_000;

/// `⋂_{a∈C}⟦a⟧` for a nonempty literal set `C`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Clause {
    literals: BTreeSet<RationalVector>,
}

impl Clause {
    /// Returns `None` for an empty literal set, which has no finite denotation.
    pub fn new<I: IntoIterator<Item = RationalVector>>(literals: I) -> Option<Clause> {
        let literals: BTreeSet<_> = literals.into_iter().collect();
        (!literals.is_empty()).then_some(Clause { literals })
    }

    pub fn single(v: RationalVector) -> Clause {
        Clause { literals: BTreeSet::from([v]) }
    }

    pub fn literals(&self) -> impl Iterator<Item = &RationalVector> {
        self.literals.iter()
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    pub fn to_vec(&self) -> Vec<RationalVector> {
        self.literals.iter().cloned().collect()
    }

    fn union(&self, other: &Clause) -> Clause {
        Clause { literals: self.literals.union(&other.literals).cloned().collect() }
    }

    /// Membership of a point in the denoted set.
    pub fn contains_point(&self, x: &RationalVector) -> bool {
        self.literals.iter().all(|a| a.pairing(x) > num_traits::Zero::zero())
    }
}

/// A DNF element of `Op⁻(D)`. The empty clause set is `⊥`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Term {
    clauses: BTreeSet<Clause>,
}

/// Outcome of [`Term::leq`].
///
/// When `holds`, `certificates` lists one Farkas certificate per pair of a
/// clause of the left side and a selection from the right side. Otherwise it
/// holds the single separating witness, which is also exposed as `witness`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Containment {
    pub holds: bool,
    pub certificates: Vec<Certificate>,
    pub witness: Option<RationalVector>,
}

impl Term {
    pub fn bottom() -> Term {
        Term::default()
    }

    /// The half-space `⟦v⟧`.
    pub fn literal(v: RationalVector) -> Term {
        Term::from_clauses([Clause::single(v)])
    }

    pub fn from_clauses<I: IntoIterator<Item = Clause>>(clauses: I) -> Term {
        Term { clauses: clauses.into_iter().collect() }
    }

    pub fn clause(literals: &[RationalVector]) -> Term {
        match Clause::new(literals.iter().cloned()) {
            Some(c) => Term::from_clauses([c]),
            None => Term::bottom(),
        }
    }

    pub fn clauses(&self) -> impl Iterator<Item = &Clause> {
        self.clauses.iter()
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_bottom(&self) -> bool {
        self.clauses.is_empty()
    }

    /// Every literal appearing anywhere in the term.
    pub fn literals(&self) -> BTreeSet<&RationalVector> {
        self.clauses.iter().flat_map(|c| c.literals()).collect()
    }

    pub fn join(&self, other: &Term) -> Term {
        Term { clauses: self.clauses.union(&other.clauses).cloned().collect() }
    }

    pub fn meet(&self, other: &Term) -> Term {
        let mut clauses = BTreeSet::new();
        for c in &self.clauses {
            for d in &other.clauses {
                clauses.insert(c.union(d));
            }
        }
        Term { clauses }
    }

    pub fn contains_point(&self, x: &RationalVector) -> bool {
        self.clauses.iter().any(|c| c.contains_point(x))
    }

    fn selection_count(&self, other: &Term) -> u128 {
        let per = other
            .clauses
            .iter()
            .try_fold(1u128, |acc, c| acc.checked_mul(c.len() as u128))
            .unwrap_or(u128::MAX);
        per.saturating_mul(self.clauses.len() as u128)
    }

    /// Decides containment of denotations. A clause `C` lies in `⋃_j C_j`
    /// iff for every choice of one literal `b_j ∈ C_j`, `C` entails `{b_j}`.
    pub fn leq(&self, other: &Term) -> Result<Containment, TermError> {
        let selections = self.selection_count(other);
        if selections > MAX_SELECTIONS {
            return Err(TermError::TooLarge { selections, limit: MAX_SELECTIONS });
        }
        let rhs: Vec<Vec<RationalVector>> = other.clauses.iter().map(Clause::to_vec).collect();
        let mut certificates = Vec::new();
        for c in &self.clauses {
            let a = c.to_vec();
            let mut index = vec![0usize; rhs.len()];
            loop {
                let sel: Vec<RationalVector> = index.iter().zip(&rhs).map(|(&i, cl)| cl[i].clone()).collect();
                let e = entails_basic(&a, &sel);
                match e.certificate {
                    Certificate::Witness(WitnessPoint { x }) if !e.holds => {
                        return Ok(Containment {
                            holds: false,
                            certificates: vec![Certificate::Witness(WitnessPoint { x: x.clone() })],
                            witness: Some(x),
                        });
                    }
                    cert => certificates.push(cert),
                }
                if !advance(&mut index, &rhs) {
                    break;
                }
            }
        }
        Ok(Containment { holds: true, certificates, witness: None })
    }

    pub fn leq_bool(&self, other: &Term) -> Result<bool, TermError> {
        Ok(self.leq(other)?.holds)
    }

    /// Mutual containment.
    pub fn sem_eq(&self, other: &Term) -> Result<bool, TermError> {
        Ok(self.leq_bool(other)? && other.leq_bool(self)?)
    }

    /// A semantically equal term with literals replaced by ray
    /// representatives, empty clauses dropped, redundant literals removed
    /// within clauses and absorbed clauses removed.
    pub fn canonicalize(&self) -> Result<Term, TermError> {
        let mut clauses: Vec<Clause> = Vec::new();
        let rays: BTreeSet<Clause> = self
            .clauses
            .iter()
            .map(|c| Clause { literals: c.literals.iter().map(RationalVector::ray).collect() })
            .collect();
        for c in rays {
            if is_empty_meet(&c.to_vec()).map(|e| e.holds).unwrap_or(false) {
                continue;
            }
            clauses.push(prune_literals(c));
        }
        let mut kept: BTreeSet<Clause> = clauses.into_iter().collect();
        let order: Vec<Clause> = kept.iter().rev().cloned().collect();
        for c in order {
            let rest = Term { clauses: kept.iter().filter(|d| **d != c).cloned().collect() };
            if Term::from_clauses([c.clone()]).leq_bool(&rest)? {
                kept.remove(&c);
            }
        }
        Ok(Term { clauses: kept })
    }
}

/// Drops literals implied by the others, largest first.
fn prune_literals(c: Clause) -> Clause {
    let mut lits = c.literals;
    let order: Vec<RationalVector> = lits.iter().rev().cloned().collect();
    for a in order {
        if lits.len() < 2 {
            break;
        }
        let rest: Vec<RationalVector> = lits.iter().filter(|x| **x != a).cloned().collect();
        if entails_basic(&rest, std::slice::from_ref(&a)).holds {
            lits.remove(&a);
        }
    }
    Clause { literals: lits }
}

/// Odometer step over selection indices; false once every selection was visited.
fn advance(index: &mut [usize], clauses: &[Vec<RationalVector>]) -> bool {
    for (i, cl) in index.iter_mut().zip(clauses) {
        *i += 1;
        if *i < cl.len() {
            return true;
        }
        *i = 0;
    }
    false
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.clauses.is_empty() {
            return write!(f, "⊥");
        }
        for (i, c) in self.clauses.iter().enumerate() {
            if i > 0 {
                write!(f, " ∨ ")?;
            }
            for (j, a) in c.literals.iter().enumerate() {
                if j > 0 {
                    write!(f, "∧")?;
                }
                write!(f, "⟦{a}⟧")?;
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct ClauseDoc {
    and: Vec<RationalVector>,
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    or: Vec<ClauseDoc>,
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        TermDoc { or: self.clauses.iter().map(|c| ClauseDoc { and: c.to_vec() }).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Term, D::Error> {
        let doc = TermDoc::deserialize(d)?;
        let mut clauses = BTreeSet::new();
        for c in doc.or {
            match Clause::new(c.and) {
                Some(c) => clauses.insert(c),
                None => return Err(serde::de::Error::custom("a clause needs at least one literal")),
            };
        }
        Ok(Term { clauses })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(vals: &[i64]) -> RationalVector {
        RationalVector::ground_ints(vals)
    }

    fn lit(vals: &[i64]) -> Term {
        Term::literal(g(vals))
    }

    #[test]
    fn lattice_ops() {
        let t = lit(&[1, 0]);
        assert_eq!(Term::bottom().join(&t), t);
        let m = lit(&[1, 0]).meet(&lit(&[0, 1]));
        assert_eq!(m, Term::clause(&[g(&[1, 0]), g(&[0, 1])]));
        let d = lit(&[1, 0]).join(&lit(&[0, 1])).meet(&lit(&[1, 1]));
        let expect = Term::clause(&[g(&[1, 0]), g(&[1, 1])]).join(&Term::clause(&[g(&[0, 1]), g(&[1, 1])]));
        assert_eq!(d, expect);
    }

    #[test]
    fn leq_examples() {
        let (x, y) = (g(&[1, 0]), g(&[0, 1]));
        let xy = Term::clause(&[x.clone(), y.clone()]);
        let sum = Term::literal(x.add(&y));
        assert!(xy.leq(&sum).unwrap().holds);
        let either = Term::literal(x.clone()).join(&Term::literal(y.clone()));
        let r = sum.leq(&either).unwrap();
        assert!(r.holds);
        assert_eq!(r.certificates.len(), 1);

        let r = lit(&[1, 0]).leq(&lit(&[1, 1])).unwrap();
        assert!(!r.holds);
        let w = r.witness.unwrap();
        assert!(lit(&[1, 0]).contains_point(&w) && !lit(&[1, 1]).contains_point(&w));
        let spec_w = g(&[1, -2]);
        assert!(lit(&[1, 0]).contains_point(&spec_w) && !lit(&[1, 1]).contains_point(&spec_w));

        assert!(Term::bottom().leq(&lit(&[3, 1])).unwrap().holds);
        assert!(Term::bottom().leq(&Term::bottom()).unwrap().holds);
        assert!(!lit(&[1]).leq(&Term::bottom()).unwrap().holds);
    }

    #[test]
    fn canonicalize_examples() {
        let x = lit(&[1, 0]);
        let absorbed = x.join(&x.meet(&lit(&[0, 1])));
        assert_eq!(absorbed.canonicalize().unwrap(), x);

        let doubled = Term::clause(&[g(&[1, 0]), g(&[2, 0])]);
        assert_eq!(doubled.canonicalize().unwrap(), x);

        let contradiction = Term::clause(&[g(&[1, 0]), g(&[-1, 0])]);
        assert!(contradiction.canonicalize().unwrap().is_bottom());
        let mixed = contradiction.join(&lit(&[0, 3]));
        assert_eq!(mixed.canonicalize().unwrap(), lit(&[0, 1]));
    }

    #[test]
    fn canonicalize_removes_implied_literal() {
        // ⟦x⟧ ∧ ⟦y⟧ already forces ⟦x+y⟧.
        let t = Term::clause(&[g(&[1, 0]), g(&[0, 1]), g(&[1, 1])]);
        let c = t.canonicalize().unwrap();
        assert_eq!(c.clauses().next().unwrap().len(), 2);
        assert!(c.sem_eq(&t).unwrap());
    }

    #[test]
    fn selection_guard() {
        let wide = Term::clause(&(1..=10).map(|i| g(&[i, 1])).collect::<Vec<_>>());
        let mut t = Term::bottom();
        for k in 0..6 {
            t = t.join(&Term::clause(&(1..=10).map(|i| g(&[i, k + 2])).collect::<Vec<_>>()));
        }
        assert!(matches!(wide.leq(&t), Err(TermError::TooLarge { .. })));
    }

    #[test]
    fn json_shape() {
        let t = lit(&[1, 0]).join(&Term::clause(&[g(&[0, 1]), g(&[0, 0, 2])]));
        let s = serde_json::to_string(&t).unwrap();
        assert_eq!(s, r#"{"or":[{"and":[{"x2":"2"},{"x1":"1"}]},{"and":[{"x0":"1"}]}]}"#);
        let back: Term = serde_json::from_str(&s).unwrap();
        assert_eq!(back, t);
        assert!(serde_json::from_str::<Term>(r#"{"or":[{"and":[]}]}"#).is_err());
    }
}
