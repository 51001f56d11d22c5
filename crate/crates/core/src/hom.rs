//! Partial homomorphisms from half-space lattices into finite lattices.
//!
//! A [`PartialHom`] assigns lattice values to finitely many half-spaces
//! `⟦g⟧` with a non-ground top coordinate, and takes the values of ground
//! half-spaces from a [`BaseHom`]. Such an assignment extends to a
//! 0-lattice homomorphism on everything it generates iff for every
//! join-irreducible `j` some point lies in every `⟦g⟧` with `j ≤ φ(g)` and
//! outside every other one (ground half-spaces included). Those points are
//! computed exactly and double as the coherence certificate.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::HomError;
use crate::lattice::{generated_sublattice, Elem, FiniteLattice, LatticeDoc};
use crate::opminus::Term;
use crate::polyhedral::{entails_basic, feasible_mixed, feasible_mixed_int, Certificate, FarkasCertificate};
use crate::rational::{int, Coordinate, IntRay, RationalVector, Scalar};

/// Values on ground half-spaces.
///
/// Either trivial (no ground coordinates, so the only ground half-space is
/// `⟦0⟧ = ∅`) or a family of points `s_i` with pairwise disjoint values
/// `d_i`, sending `⟦v⟧` to `⋁{d_i : (v|s_i) > 0}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BaseHom {
    coords: Vec<Coordinate>,
    points: Vec<(RationalVector, Elem)>,
}

impl BaseHom {
    pub fn trivial() -> Self {
        BaseHom { coords: Vec::new(), points: Vec::new() }
    }

    pub fn points(
        target: &FiniteLattice,
        coords: Vec<Coordinate>,
        points: Vec<(RationalVector, Elem)>,
    ) -> Result<Self, HomError> {
        let mut seen = BTreeSet::new();
        for c in &coords {
            if !matches!(c, Coordinate::Ground(_)) {
                return Err(HomError::InvalidInput(format!("base coordinate {c} is not ground")));
            }
            if !seen.insert(c.clone()) {
                return Err(HomError::InvalidInput(format!("base coordinate {c} repeated")));
            }
        }
        for (i, (s, d)) in points.iter().enumerate() {
            if s.is_zero() {
                return Err(HomError::InvalidInput("base points must be nonzero".into()));
            }
            if !s.support().all(|c| seen.contains(c)) {
                return Err(HomError::InvalidInput(format!("base point {s} leaves the base coordinates")));
            }
            if *d >= target.len() {
                return Err(HomError::InvalidInput(format!("base value {d} outside the target")));
            }
            for (_, d2) in &points[..i] {
                if target.meet(*d, *d2) != target.zero() {
                    return Err(HomError::InvalidInput("base values must be pairwise disjoint".into()));
                }
            }
        }
        Ok(BaseHom { coords, points })
    }

    pub fn coords(&self) -> &[Coordinate] {
        &self.coords
    }

    pub fn point_list(&self) -> &[(RationalVector, Elem)] {
        &self.points
    }

    pub fn is_trivial(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn value(&self, target: &FiniteLattice, v: &RationalVector) -> Result<Elem, HomError> {
        if !v.support().all(|c| self.coords.contains(c)) {
            return Err(HomError::InvalidInput(format!("{v} uses coordinates outside the base")));
        }
        Ok(target.join_all(
            self.points.iter().filter(|(s, _)| v.pairing(s).is_positive()).map(|(_, d)| *d),
        ))
    }

    /// The point responsible for `j`, if any: `j ≤ d_i` holds for at most one `i`.
    fn owner(&self, target: &FiniteLattice, j: Elem) -> Option<&RationalVector> {
        self.points.iter().find(|(_, d)| target.leq(j, *d)).map(|(s, _)| s)
    }

    /// Ground vectors spanning the hyperplane orthogonal to `s`, both signs.
    fn orthogonal(&self, s: &RationalVector) -> Vec<RationalVector> {
        let k = s.top().expect("base points are nonzero").clone();
        let sk = s.get(&k);
        let mut out = Vec::new();
        for c in self.coords.iter().filter(|c| **c != k) {
            let w = RationalVector::basis(c.clone())
                .scale(&sk)
                .sub(&RationalVector::basis(k.clone()).scale(&s.get(c)));
            out.push(w.neg());
            out.push(w);
        }
        out
    }

    fn all_axes(&self) -> Vec<RationalVector> {
        self.coords
            .iter()
            .flat_map(|c| {
                let e = RationalVector::basis(c.clone());
                [e.neg(), e]
            })
            .collect()
    }

    /// Finite ground constraints pinning the ground part of a `j`-point:
    /// to the open ray through the owner of `j`, or to zero without owner.
    fn coherence_proxies(&self, target: &FiniteLattice, j: Elem) -> (Vec<RationalVector>, Vec<RationalVector>) {
        match self.owner(target, j) {
            Some(s) => (vec![s.clone()], self.orthogonal(s)),
            None => (Vec::new(), self.all_axes()),
        }
    }

    /// Ground vectors whose values avoid `j` and whose nonstrict
    /// constraints pin the ground part to the closed ray through the owner.
    fn avoiding_proxies(&self, target: &FiniteLattice, j: Elem) -> Vec<RationalVector> {
        match self.owner(target, j) {
            Some(s) => {
                let mut v = self.orthogonal(s);
                v.push(s.neg());
                v
            }
            None => self.all_axes(),
        }
    }

    /// A few ground vectors covering the base's behaviour, for bounded checks.
    pub fn sample(&self) -> Vec<RationalVector> {
        let mut out: BTreeSet<RationalVector> = self.all_axes().into_iter().collect();
        for (s, _) in &self.points {
            out.insert(s.ray());
            out.insert(s.neg().ray());
        }
        out.into_iter().collect()
    }
}

/// How to treat ground values the homomorphism cannot supply.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Availability {
    /// Missing values are an [`HomError::IncompleteDomain`] error.
    Strict,
    /// Inequalities mentioning missing values are skipped and counted.
    Lenient,
}

/// Outcome of [`PartialHom::check_ext_conditions`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ExtCheck {
    pub violations: Vec<String>,
    pub skipped: usize,
}

impl ExtCheck {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Outcome of [`PartialHom::candidate_pairs`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateScan {
    pub pairs: Vec<(Elem, Elem)>,
    pub range_consonant: bool,
}

/// Per join-irreducible evidence of coherence: `point` lies in every
/// half-space whose value is above `j` and in no other one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JiPoint {
    pub j: Elem,
    pub point: RationalVector,
}

/// Either the separating points for every relevant join-irreducible, or the
/// first join-irreducible `j` whose half-spaces admit none.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coherence {
    Coherent(Vec<JiPoint>),
    Incoherent { j: Elem, farkas: FarkasCertificate, strict: Vec<RationalVector>, nonstrict: Vec<RationalVector> },
}

impl Coherence {
    pub fn is_coherent(&self) -> bool {
        matches!(self, Coherence::Coherent(_))
    }
}

/// An inequality `φ⟦a⟧ ≤ φ⟦b⟧ ∨ e` whose closedness still has to be witnessed.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Obligation {
    pub a: RationalVector,
    pub b: RationalVector,
    pub e: Elem,
}

/// Evidence that `⟦a⟧ ⊆ ⟦b⟧ ∪ u` for some `u` valued at most `e`.
///
/// For each join-irreducible `j ≤ φ(a)` with `j ≰ e`, `farkas` certifies
/// `⟦a⟧ ⊆ ⟦b⟧ ∪ ⋃_{w ∈ avoid} ⟦w⟧` where every `w` has `j ≰ φ(w)`; then
/// `u = ⟦a⟧ ∧ ⋀_j ⋁_{w ∈ avoid_j} ⟦w⟧` works.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosednessPart {
    pub j: Elem,
    pub avoid: Vec<RationalVector>,
    pub farkas: FarkasCertificate,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FiniteClosedness {
    pub parts: Vec<ClosednessPart>,
}

/// Progress of a closedness search. Parts stay valid as the map grows, and
/// the last separating point is reused until a new generator cuts it off.
#[derive(Clone, Debug, Default)]
pub struct ClosednessSearch {
    parts: Vec<ClosednessPart>,
    hint: Option<(Elem, RationalVector)>,
}

/// A half-space adjoined together with its opposite.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Adjoined {
    pub c: RationalVector,
    pub plus: Elem,
    pub minus: Elem,
}

/// Outcome of a successful [`PartialHom::closure_step`]: the extended map
/// satisfies `ψ⟦a−λb⟧ ≤ φ⟦−b⟧ ∨ e`.
#[derive(Clone, Debug)]
pub struct ClosureResult {
    pub hom: PartialHom,
    pub lambda: Scalar,
    pub adjoined: Option<Adjoined>,
}

/// Default upper bound `2⁶⁴` on the λ schedule.
pub fn default_lambda_cap() -> Scalar {
    Scalar::from_integer(num_bigint::BigInt::one() << 64u32)
}

#[derive(Clone, Debug)]
pub struct PartialHom {
    target: Arc<FiniteLattice>,
    base: Arc<BaseHom>,
    gens: BTreeMap<RationalVector, Elem>,
    /// Last known separating point per join-irreducible; only a hint.
    hints: BTreeMap<Elem, RationalVector>,
    /// Integer form of every generator.
    ints: BTreeMap<RationalVector, IntRay>,
}

impl PartialEq for PartialHom {
    fn eq(&self, other: &Self) -> bool {
        self.target == other.target && self.base == other.base && self.gens == other.gens
    }
}

impl PartialHom {
    pub fn new(target: Arc<FiniteLattice>, base: Arc<BaseHom>) -> Self {
        PartialHom { target, base, gens: BTreeMap::new(), hints: BTreeMap::new(), ints: BTreeMap::new() }
    }

    /// Stores the given values without checking coherence.
    pub fn from_generators<I>(target: Arc<FiniteLattice>, base: Arc<BaseHom>, gens: I) -> Result<Self, HomError>
    where
        I: IntoIterator<Item = (RationalVector, Elem)>,
    {
        let mut h = PartialHom::new(target, base);
        for (v, x) in gens {
            if v.is_zero() || v.is_ground() {
                return Err(HomError::InvalidInput(format!("generator {v} must have a non-ground coordinate")));
            }
            if x >= h.target.len() {
                return Err(HomError::InvalidInput(format!("value {x} outside the target")));
            }
            let r = v.ray();
            if let Some(&old) = h.gens.get(&r) {
                if old != x {
                    return Err(HomError::InvalidInput(format!("generator {v} given two values")));
                }
            }
            h.ints.insert(r.clone(), r.int_ray());
            h.gens.insert(r, x);
        }
        Ok(h)
    }

    pub fn target(&self) -> &Arc<FiniteLattice> {
        &self.target
    }

    pub fn base(&self) -> &Arc<BaseHom> {
        &self.base
    }

    /// Generators keyed by ray representative.
    pub fn generators(&self) -> &BTreeMap<RationalVector, Elem> {
        &self.gens
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    /// Coordinates used by generators or the base.
    pub fn coordinates(&self) -> BTreeSet<Coordinate> {
        let mut out: BTreeSet<Coordinate> = self.base.coords.iter().cloned().collect();
        for g in self.gens.keys() {
            out.extend(g.support().cloned());
        }
        out
    }

    /// `φ⟦v⟧` when it is determined: zero, ground, or a generator ray.
    pub fn value_of(&self, v: &RationalVector) -> Option<Elem> {
        if v.is_zero() {
            return Some(self.target.zero());
        }
        if v.is_ground() {
            return self.base.value(&self.target, v).ok();
        }
        self.gens.get(&v.ray()).copied()
    }

    pub fn eval_literal(&self, v: &RationalVector) -> Result<Elem, HomError> {
        if v.is_zero() {
            return Ok(self.target.zero());
        }
        if v.is_ground() {
            return self.base.value(&self.target, v);
        }
        self.gens.get(&v.ray()).copied().ok_or_else(|| HomError::DomainMiss(v.to_string()))
    }

    /// `⋁_{clauses} ⋀_{literals} φ⟦literal⟧`.
    pub fn eval(&self, t: &Term) -> Result<Elem, HomError> {
        let l = &*self.target;
        let mut acc = l.zero();
        for c in t.clauses() {
            let mut m: Option<Elem> = None;
            for a in c.literals() {
                let x = self.eval_literal(a)?;
                m = Some(m.map_or(x, |y| l.meet(x, y)));
            }
            acc = l.join(acc, m.unwrap_or(l.zero()));
        }
        Ok(acc)
    }

    /// Image of the whole source: the 0-sublattice generated by generator
    /// and base values.
    pub fn range(&self) -> BTreeSet<Elem> {
        let vals: Vec<Elem> = self.gens.values().copied().chain(self.base.points.iter().map(|(_, d)| *d)).collect();
        generated_sublattice(&self.target, &vals)
    }

    pub fn range_consonant(&self) -> bool {
        self.target.is_consonant_set(&self.range())
    }

    /// Half-spaces valued above `j` (strict side) and the rest (nonstrict).
    fn split_at(&self, j: Elem) -> (Vec<RationalVector>, Vec<RationalVector>) {
        let (mut strict, mut nonstrict) = self.base.coherence_proxies(&self.target, j);
        for (g, &x) in &self.gens {
            if self.target.leq(j, x) {
                strict.push(g.clone());
            } else {
                nonstrict.push(g.clone());
            }
        }
        (strict, nonstrict)
    }

    fn separates(&self, j: Elem, x: &RationalVector) -> bool {
        let (strict, nonstrict) = self.split_at(j);
        strict.iter().all(|a| a.pairing(x).is_positive()) && nonstrict.iter().all(|b| !b.pairing(x).is_positive())
    }

    /// Exact coherence check with certificates.
    pub fn coherence(&self) -> Coherence {
        let mut points = Vec::new();
        for &j in self.target.join_irreducibles() {
            let (strict, nonstrict) = self.split_at(j);
            if strict.is_empty() {
                continue;
            }
            match feasible_mixed(&strict, &nonstrict) {
                Certificate::Witness(w) => points.push(JiPoint { j, point: w.x }),
                Certificate::Farkas(farkas) => return Coherence::Incoherent { j, farkas, strict, nonstrict },
            }
        }
        Coherence::Coherent(points)
    }

    pub fn is_coherent(&self) -> bool {
        self.refresh_hints().is_some()
    }

    /// Recomputes separating points, reusing hints that still separate.
    fn refresh_hints(&self) -> Option<BTreeMap<Elem, RationalVector>> {
        let mut out = BTreeMap::new();
        for &j in self.target.join_irreducibles() {
            if let Some(x) = self.hints.get(&j) {
                if self.separates(j, x) {
                    out.insert(j, x.clone());
                    continue;
                }
            }
            let (strict, nonstrict) = self.split_at(j);
            if strict.is_empty() {
                continue;
            }
            let (sr, nr): (Vec<&RationalVector>, Vec<&RationalVector>) = (strict.iter().collect(), nonstrict.iter().collect());
            match self.solve(&sr, &nr) {
                Certificate::Witness(w) => {
                    out.insert(j, w.x);
                }
                Certificate::Farkas(_) => return None,
            }
        }
        Some(out)
    }

    /// Re-checks a coherence certificate against this map by arithmetic.
    pub fn verify_coherence_points(&self, points: &[JiPoint]) -> bool {
        let by_j: BTreeMap<Elem, &RationalVector> = points.iter().map(|p| (p.j, &p.point)).collect();
        self.target.join_irreducibles().iter().all(|&j| {
            let (strict, _) = self.split_at(j);
            match by_j.get(&j) {
                Some(x) => self.separates(j, x),
                None => strict.is_empty(),
            }
        })
    }

    /// Checks `∧φ(A) ≤ ∨φ(B)` for all entailments among at most `k`
    /// generators (and a sample of ground half-spaces) on each side. Returns
    /// the first violating `(A, B)`.
    pub fn coherence_bounded(&self, k: usize) -> Option<(Vec<RationalVector>, Vec<RationalVector>)> {
        let l = &*self.target;
        let mut pool: Vec<(RationalVector, Elem)> = self.gens.iter().map(|(g, &x)| (g.clone(), x)).collect();
        for g in self.base.sample() {
            let x = self.base.value(l, &g).expect("sample uses base coordinates");
            pool.push((g, x));
        }
        let subsets = bounded_subsets(pool.len(), k);
        for a in subsets.iter().filter(|s| !s.is_empty()) {
            let meet = l.meet_all(a.iter().map(|&i| pool[i].1)).expect("nonempty");
            for b in &subsets {
                let join = l.join_all(b.iter().map(|&i| pool[i].1));
                if l.leq(meet, join) {
                    continue;
                }
                let av: Vec<RationalVector> = a.iter().map(|&i| pool[i].0.clone()).collect();
                let bv: Vec<RationalVector> = b.iter().map(|&i| pool[i].0.clone()).collect();
                if entails_basic(&av, &bv).holds {
                    return Some((av, bv));
                }
            }
        }
        None
    }

    /// Adds `±c` with values `(plus, minus)` if the result is coherent.
    pub fn adjoin(&self, c: &RationalVector, plus: Elem, minus: Elem) -> Result<PartialHom, HomError> {
        if c.is_zero() || c.is_ground() {
            return Err(HomError::InvalidInput(format!("{c} must have a non-ground coordinate")));
        }
        if plus >= self.target.len() || minus >= self.target.len() {
            return Err(HomError::InvalidInput("value outside the target".into()));
        }
        let (rp, rm) = (c.ray(), c.neg().ray());
        for (r, x) in [(&rp, plus), (&rm, minus)] {
            if let Some(&old) = self.gens.get(r) {
                if old != x {
                    return Err(HomError::Incoherent(format!("{r} already has value {}", self.target.label(old))));
                }
            }
        }
        let mut next = self.clone();
        next.ints.insert(rp.clone(), rp.int_ray());
        next.ints.insert(rm.clone(), rm.int_ray());
        next.gens.insert(rp, plus);
        next.gens.insert(rm, minus);
        match next.refresh_hints() {
            Some(h) => {
                next.hints = h;
                Ok(next)
            }
            None => Err(HomError::Incoherent(format!(
                "no homomorphism sends ⟦{c}⟧ to {} and ⟦−c⟧ to {}",
                self.target.label(plus),
                self.target.label(minus)
            ))),
        }
    }

    fn need(&self, v: &RationalVector, mode: Availability, missing: &mut Vec<String>) -> Option<Elem> {
        let x = self.value_of(v);
        if x.is_none() && mode == Availability::Strict {
            missing.push(v.to_string());
        }
        x
    }

    /// Evaluates the extension inequalities for adjoining `⟦c⟧ ↦ c⁺`,
    /// `⟦−c⟧ ↦ c⁻`, where `c` is normalized at its top coordinate `o` and
    /// `u` ranges over generators with top `o` and `u_o = c_o`.
    pub fn check_ext_conditions(&self, c: &RationalVector, cp: Elem, cm: Elem, mode: Availability) -> Result<ExtCheck, HomError> {
        let l = &*self.target;
        let o = match c.top() {
            Some(o) if !matches!(o, Coordinate::Ground(_)) => o.clone(),
            _ => return Err(HomError::InvalidInput(format!("{c} must have a non-ground top coordinate"))),
        };
        if !c.is_normalized(&o) {
            return Err(HomError::InvalidInput(format!("{c} is not normalized at {o}")));
        }
        if cp >= l.len() || cm >= l.len() {
            return Err(HomError::InvalidInput("value outside the target".into()));
        }
        let mut out = ExtCheck::default();
        if l.meet(cp, cm) != l.zero() {
            out.violations.push("c⁺ ∧ c⁻ = 0".into());
        }
        let co = c.get(&o);
        let mut missing = Vec::new();
        for u in self.gens.keys().filter(|u| u.top() == Some(&o) && u.get(&o) == co) {
            let (cu, uc, nu) = (c.sub(u), u.sub(c), u.neg());
            let vals = (
                self.need(u, mode, &mut missing),
                self.need(&nu, mode, &mut missing),
                self.need(&cu, mode, &mut missing),
                self.need(&uc, mode, &mut missing),
            );
            let (pu, pnu, pcu, puc) = match vals {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => {
                    out.skipped += 1;
                    continue;
                }
            };
            let checks = [
                (cp, l.join(pcu, pu), "c⁺ ≤ φ⟦c−u⟧ ∨ φ⟦u⟧"),
                (pu, l.join(puc, cp), "φ⟦u⟧ ≤ φ⟦u−c⟧ ∨ c⁺"),
                (pcu, l.join(pnu, cp), "φ⟦c−u⟧ ≤ φ⟦−u⟧ ∨ c⁺"),
                (cm, l.join(puc, pnu), "c⁻ ≤ φ⟦u−c⟧ ∨ φ⟦−u⟧"),
                (pnu, l.join(pcu, cm), "φ⟦−u⟧ ≤ φ⟦c−u⟧ ∨ c⁻"),
                (puc, l.join(pu, cm), "φ⟦u−c⟧ ≤ φ⟦u⟧ ∨ c⁻"),
            ];
            for (lhs, rhs, name) in checks {
                if !l.leq(lhs, rhs) {
                    out.violations.push(format!("{name} at u = {u}"));
                }
            }
        }
        if !missing.is_empty() {
            return Err(HomError::IncompleteDomain(missing));
        }
        Ok(out)
    }

    /// Adjoins `±c` after the extension inequalities pass in strict mode,
    /// then re-verifies coherence of the enlarged map.
    pub fn extend(&self, c: &RationalVector, cp: Elem, cm: Elem) -> Result<PartialHom, HomError> {
        let check = self.check_ext_conditions(c, cp, cm, Availability::Strict)?;
        if !check.passed() {
            return Err(HomError::ExtensionImpossible(check.violations));
        }
        self.adjoin(c, cp, cm)
    }

    /// All `(c⁺, c⁻)` passing the extension inequalities, in element order.
    pub fn candidate_pairs(&self, c: &RationalVector, mode: Availability) -> Result<CandidateScan, HomError> {
        self.candidate_pairs_ordered(c, mode, &self.target.elements().collect::<Vec<_>>())
    }

    /// Same as [`candidate_pairs`](Self::candidate_pairs), scanning values in `order`.
    pub fn candidate_pairs_ordered(&self, c: &RationalVector, mode: Availability, order: &[Elem]) -> Result<CandidateScan, HomError> {
        let mut pairs = Vec::new();
        for &cp in order {
            for &cm in order {
                if self.check_ext_conditions(c, cp, cm, mode)?.passed() {
                    pairs.push((cp, cm));
                }
            }
        }
        Ok(CandidateScan { pairs, range_consonant: self.range_consonant() })
    }

    fn require_obligation(&self, a: &RationalVector, b: &RationalVector, e: Elem) -> Result<(Elem, Elem), HomError> {
        let l = &*self.target;
        if e >= l.len() {
            return Err(HomError::InvalidInput("residual outside the target".into()));
        }
        let (pa, pb) = (self.eval_literal(a)?, self.eval_literal(b)?);
        if !l.leq(pa, l.join(pb, e)) {
            return Err(HomError::InvalidInput(format!("φ⟦{a}⟧ ≰ φ⟦{b}⟧ ∨ {}", l.label(e))));
        }
        Ok((pa, pb))
    }

    /// First `λ = 1, 2, 4, … ≤ cap` with `φ⟦a−λb⟧ ≤ φ⟦−b⟧ ∨ e`. Success at
    /// `λ` must persist at `2λ`; a violation is reported as an error.
    pub fn closedness_criterion(&self, a: &RationalVector, b: &RationalVector, e: Elem, cap: &Scalar) -> Result<Option<Scalar>, HomError> {
        let l = &*self.target;
        self.require_obligation(a, b, e)?;
        let bound = l.join(self.eval_literal(&b.neg())?, e);
        let holds = |lam: &Scalar| -> Result<bool, HomError> {
            Ok(l.leq(self.eval_literal(&a.sub(&b.scale(lam)))?, bound))
        };
        let mut lam = Scalar::one();
        while &lam <= cap {
            if holds(&lam)? {
                let twice = &lam * int(2);
                if !holds(&twice)? {
                    return Err(HomError::ClosureStepFailed(format!("criterion holds at λ = {lam} but not at {twice}")));
                }
                return Ok(Some(lam));
            }
            lam *= int(2);
        }
        Ok(None)
    }

    /// Finite certificate that `φ` is closed at `(⟦a⟧, ⟦b⟧)` with residual
    /// `e`, or `None` when the current generators do not provide one.
    pub fn finite_closedness(&self, a: &RationalVector, b: &RationalVector, e: Elem) -> Result<Option<FiniteClosedness>, HomError> {
        self.advance_closedness(a, b, e, &mut ClosednessSearch::default(), None)
    }

    /// Resumes a closedness search for the same obligation on a map that
    /// has grown since the last call. `fresh`, when given, must list every
    /// generator adjoined since then.
    pub fn advance_closedness(
        &self,
        a: &RationalVector,
        b: &RationalVector,
        e: Elem,
        search: &mut ClosednessSearch,
        fresh: Option<&[RationalVector]>,
    ) -> Result<Option<FiniteClosedness>, HomError> {
        let l = &*self.target;
        let (pa, _) = self.require_obligation(a, b, e)?;
        if let Some((j, x)) = search.hint.as_ref() {
            let still = match fresh {
                Some(fresh) => fresh.iter().all(|g| match self.value_of(g) {
                    Some(v) if !l.leq(*j, v) => !g.pairing(x).is_positive(),
                    _ => true,
                }),
                None => {
                    let proxies = self.base.avoiding_proxies(l, *j);
                    let avoid = proxies.iter().chain(self.gens.iter().filter(|(_, &v)| !l.leq(*j, v)).map(|(g, _)| g));
                    std::iter::once(b).chain(avoid).all(|w| !w.pairing(x).is_positive()) && a.pairing(x).is_positive()
                }
            };
            if still {
                return Ok(None);
            }
            search.hint = None;
        }
        for &j in l.join_irreducibles() {
            if !l.leq(j, pa) || l.leq(j, e) || search.parts.iter().any(|p| p.j == j) {
                continue;
            }
            let proxies = self.base.avoiding_proxies(l, j);
            let mut nonstrict: Vec<&RationalVector> = vec![b];
            nonstrict.extend(proxies.iter());
            nonstrict.extend(self.gens.iter().filter(|(_, &v)| !l.leq(j, v)).map(|(g, _)| g));
            // Both maps share their keys, so they zip in step.
            let head: Vec<IntRay> = std::iter::once(b).chain(&proxies).map(RationalVector::int_ray).collect();
            let mut n: Vec<&IntRay> = head.iter().collect();
            n.extend(self.gens.values().zip(self.ints.values()).filter(|(&v, _)| !l.leq(j, v)).map(|(_, i)| i));
            let ai = a.int_ray();
            match feasible_mixed_int(&[&ai], &n) {
                Certificate::Witness(w) => {
                    search.hint = Some((j, w.x));
                    return Ok(None);
                }
                Certificate::Farkas(f) => {
                    // Keep only the half-spaces the certificate actually uses.
                    let keep: Vec<usize> = (1..nonstrict.len()).filter(|&i| !f.eta[i].is_zero()).collect();
                    search.parts.push(ClosednessPart {
                        j,
                        avoid: keep.iter().map(|&i| nonstrict[i].clone()).collect(),
                        farkas: FarkasCertificate {
                            xi: f.xi,
                            eta: std::iter::once(f.eta[0].clone()).chain(keep.iter().map(|&i| f.eta[i].clone())).collect(),
                        },
                    });
                }
            }
        }
        let mut parts = search.parts.clone();
        parts.sort_by_key(|p| p.j);
        Ok(Some(FiniteClosedness { parts }))
    }

    /// [`feasible_mixed`] through the integer route, reusing cached rays.
    fn solve(&self, strict: &[&RationalVector], nonstrict: &[&RationalVector]) -> Certificate {
        let get = |v: &RationalVector| match self.ints.get(v) {
            Some(i) => Cow::Borrowed(i),
            None => Cow::Owned(v.int_ray()),
        };
        let s: Vec<Cow<IntRay>> = strict.iter().map(|v| get(v)).collect();
        let n: Vec<Cow<IntRay>> = nonstrict.iter().map(|v| get(v)).collect();
        let s: Vec<&IntRay> = s.iter().map(|x| x.as_ref()).collect();
        let n: Vec<&IntRay> = n.iter().map(|x| x.as_ref()).collect();
        feasible_mixed_int(&s, &n)
    }

    /// Re-checks a [`FiniteClosedness`] against this map.
    pub fn verify_finite_closedness(&self, a: &RationalVector, b: &RationalVector, e: Elem, cert: &FiniteClosedness) -> bool {
        let l = &*self.target;
        let Ok((pa, _)) = self.require_obligation(a, b, e) else { return false };
        let covered: BTreeSet<Elem> = cert.parts.iter().map(|p| p.j).collect();
        let needed = l.join_irreducibles().iter().filter(|&&j| l.leq(j, pa) && !l.leq(j, e));
        if !needed.clone().all(|j| covered.contains(j)) {
            return false;
        }
        cert.parts.iter().all(|p| {
            let avoids = p.avoid.iter().all(|w| matches!(self.value_of(w), Some(x) if !l.leq(p.j, x)));
            let mut nonstrict = vec![b.clone()];
            nonstrict.extend(p.avoid.iter().cloned());
            avoids && p.farkas.verify(std::slice::from_ref(a), &nonstrict)
        })
    }

    /// Extends the map so that `ψ⟦a−λb⟧ ≤ φ⟦−b⟧ ∨ e` for some `λ` on the
    /// doubling schedule, adjoining `±normalize(a−λb)` when needed.
    ///
    /// `order` fixes the preference among candidate values.
    pub fn closure_step(&self, ob: &Obligation, cap: &Scalar, order: &[Elem]) -> Result<ClosureResult, HomError> {
        let l = &*self.target;
        let (a, b, e) = (&ob.a, &ob.b, ob.e);
        self.require_obligation(a, b, e)?;
        if a.is_ground() && b.is_ground() {
            return match self.closedness_criterion(a, b, e, cap)? {
                Some(lambda) => Ok(ClosureResult { hom: self.clone(), lambda, adjoined: None }),
                None => Err(HomError::ClosureStepFailed(format!("no λ ≤ {cap} for ground pair"))),
            };
        }
        let o = a.top().into_iter().chain(b.top()).max().expect("a or b is non-ground").clone();
        let (ao, bo) = (a.get(&o), b.get(&o));
        let bound = l.join(self.eval_literal(&b.neg())?, e);
        let mut lam = Scalar::one();
        let mut last = String::from("λ schedule exhausted");
        while &lam <= cap {
            let co = &ao - &lam * &bo;
            let settled = bo.is_zero() || (!co.is_zero() && co.signum() == -bo.signum());
            if !settled {
                lam *= int(2);
                continue;
            }
            let v = a.sub(&b.scale(&lam));
            if let Some(x) = self.value_of(&v) {
                if l.leq(x, bound) {
                    return Ok(ClosureResult { hom: self.clone(), lambda: lam, adjoined: None });
                }
                last = format!("⟦a−λb⟧ already valued above the bound at λ = {lam}");
                lam *= int(2);
                continue;
            }
            let c = v.normalize(&o);
            if let Some(msg) = self.closure_assertions(&c, &o, bound) {
                last = format!("{msg} at λ = {lam}");
                lam *= int(2);
                continue;
            }
            let scan = self.candidate_pairs_ordered(&c, Availability::Lenient, order)?;
            for (cp, cm) in scan.pairs {
                let star = l.meet(cp, bound);
                if let Ok(hom) = self.adjoin(&c, star, cm) {
                    return Ok(ClosureResult { hom, lambda: lam, adjoined: Some(Adjoined { c, plus: star, minus: cm }) });
                }
            }
            last = format!("no coherent candidate at λ = {lam}");
            lam *= int(2);
        }
        Err(HomError::ClosureStepFailed(last))
    }

    /// The inequalities `φ⟦u+c⟧ ≤ φ⟦u⟧ ∨ bound` for `u_o = −c_o` and
    /// `φ⟦u⟧ ≤ φ⟦u−c⟧ ∨ bound` for `u_o = c_o`, over generators `u` with
    /// top `o` whose values are available. Returns the first failure.
    fn closure_assertions(&self, c: &RationalVector, o: &Coordinate, bound: Elem) -> Option<String> {
        let l = &*self.target;
        let co = c.get(o);
        for (u, &pu) in self.gens.iter().filter(|(u, _)| u.top() == Some(o)) {
            let uo = u.get(o);
            if uo == -&co {
                if let Some(x) = self.value_of(&u.add(c)) {
                    if !l.leq(x, l.join(pu, bound)) {
                        return Some(format!("φ⟦u+c⟧ ≤ φ⟦u⟧ ∨ φ⟦−b⟧ ∨ e fails at u = {u}"));
                    }
                }
            } else if uo == co {
                if let Some(x) = self.value_of(&u.sub(c)) {
                    if !l.leq(pu, l.join(x, bound)) {
                        return Some(format!("φ⟦u⟧ ≤ φ⟦u−c⟧ ∨ φ⟦−b⟧ ∨ e fails at u = {u}"));
                    }
                }
            }
        }
        None
    }
}

/// Index subsets of `0..n` with at most `k` elements, the empty set first.
fn bounded_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::new();
        for s in &frontier {
            let start = s.last().map_or(0, |&x: &usize| x + 1);
            for i in start..n {
                let mut t = s.clone();
                t.push(i);
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Where a hom document finds its target lattice.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetRef {
    Id(String),
    Inline(LatticeDoc),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasePointDoc {
    pub point: RationalVector,
    pub value: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseDoc {
    #[serde(default)]
    pub coords: Vec<String>,
    #[serde(default)]
    pub points: Vec<BasePointDoc>,
}

impl BaseDoc {
    pub fn to_base(&self, target: &FiniteLattice) -> Result<BaseHom, HomError> {
        let coords = self
            .coords
            .iter()
            .map(|s| s.parse::<Coordinate>().map_err(|e| HomError::InvalidInput(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let points = self
            .points
            .iter()
            .map(|p| Ok((p.point.clone(), target.index_of(&p.value).map_err(|e| HomError::InvalidInput(e.to_string()))?)))
            .collect::<Result<Vec<_>, HomError>>()?;
        if coords.is_empty() && points.is_empty() {
            Ok(BaseHom::trivial())
        } else {
            BaseHom::points(target, coords, points)
        }
    }

    pub fn from_base(base: &BaseHom, target: &FiniteLattice) -> BaseDoc {
        BaseDoc {
            coords: base.coords.iter().map(|c| c.to_string()).collect(),
            points: base.points.iter().map(|(s, d)| BasePointDoc { point: s.clone(), value: target.label(*d).to_string() }).collect(),
        }
    }
}

/// JSON form of a [`PartialHom`]: `values` maps generator positions to labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    pub target: TargetRef,
    #[serde(default)]
    pub base: BaseDoc,
    pub generators: Vec<RationalVector>,
    pub values: BTreeMap<String, String>,
}

impl HomDoc {
    /// Builds the map; `lattice` supplies the target when it is referenced by id.
    pub fn to_hom(&self, lattice: Option<Arc<FiniteLattice>>) -> Result<PartialHom, HomError> {
        let target = match (&self.target, lattice) {
            (TargetRef::Inline(doc), _) => Arc::new(doc.to_lattice().map_err(|e| HomError::InvalidInput(e.to_string()))?),
            (TargetRef::Id(_), Some(l)) => l,
            (TargetRef::Id(id), None) => return Err(HomError::InvalidInput(format!("target {id:?} needs a lattice file"))),
        };
        let look = |s: &str| target.index_of(s).map_err(|e| HomError::InvalidInput(e.to_string()));
        let base = self.base.to_base(&target)?;
        let mut gens = Vec::new();
        for (i, g) in self.generators.iter().enumerate() {
            let label = self.values.get(&i.to_string()).ok_or_else(|| HomError::InvalidInput(format!("no value for generator {i}")))?;
            gens.push((g.clone(), look(label)?));
        }
        if let Some(k) = self.values.keys().find(|k| k.parse::<usize>().map_or(true, |i| i >= self.generators.len())) {
            return Err(HomError::InvalidInput(format!("value key {k:?} names no generator")));
        }
        PartialHom::from_generators(target, Arc::new(base), gens)
    }

    pub fn from_hom(h: &PartialHom) -> HomDoc {
        let l = &h.target;
        HomDoc {
            format: Some(crate::FORMAT.to_string()),
            target: TargetRef::Inline(l.to_doc()),
            base: BaseDoc::from_base(&h.base, l),
            generators: h.gens.keys().cloned().collect(),
            values: h.gens.values().enumerate().map(|(i, &x)| (i.to_string(), l.label(x).to_string())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn o() -> RationalVector {
        RationalVector::basis(Coordinate::Distinguished)
    }

    fn gx() -> RationalVector {
        RationalVector::basis(Coordinate::ground("x0"))
    }

    fn chain2() -> Arc<FiniteLattice> {
        Arc::new(FiniteLattice::chain(2))
    }

    fn point_hom(s: i64) -> PartialHom {
        let l = chain2();
        let base = BaseHom::points(&l, vec![Coordinate::ground("x0")], vec![(gx().scale(&int(s)), 1)]).unwrap();
        PartialHom::new(l, Arc::new(base))
    }

    #[test]
    fn eval_basics() {
        let h = point_hom(1);
        assert_eq!(h.eval(&Term::bottom()).unwrap(), 0);
        let t = Term::literal(gx()).meet(&Term::literal(gx().neg()));
        assert_eq!(h.eval(&t).unwrap(), 0);
        assert_eq!(h.eval(&Term::literal(gx())).unwrap(), 1);
        assert!(matches!(h.eval(&Term::literal(o())), Err(HomError::DomainMiss(_))));
    }

    #[test]
    fn base_values_must_be_disjoint() {
        let l = Arc::new(FiniteLattice::chain(3));
        let err = BaseHom::points(&l, vec![Coordinate::ground("x0")], vec![(gx(), 1), (gx().neg(), 2)]).unwrap_err();
        assert!(matches!(err, HomError::InvalidInput(_)));
    }

    #[test]
    fn ext_conditions_with_empty_domain() {
        let l = Arc::new(FiniteLattice::chain(3));
        let h = PartialHom::new(l.clone(), Arc::new(BaseHom::trivial()));
        assert!(h.check_ext_conditions(&o(), 1, 0, Availability::Strict).unwrap().passed());
        let bad = h.check_ext_conditions(&o(), 1, 1, Availability::Strict).unwrap();
        assert_eq!(bad.violations, vec!["c⁺ ∧ c⁻ = 0".to_string()]);
        assert!(matches!(h.extend(&o(), 1, 1), Err(HomError::ExtensionImpossible(_))));
    }

    #[test]
    fn first_extension_sets_both_half_spaces() {
        let l = FiniteLattice::boolean(2).unwrap();
        let (d0, d1) = (l.index_of("{p0}").unwrap(), l.index_of("{p1}").unwrap());
        let h = PartialHom::new(Arc::new(l), Arc::new(BaseHom::trivial()));
        let h = h.extend(&o(), d0, d1).unwrap();
        assert_eq!(h.eval_literal(&o()).unwrap(), d0);
        assert_eq!(h.eval_literal(&o().neg()).unwrap(), d1);
        assert_eq!(h.eval_literal(&o().scale(&int(3))).unwrap(), d0);
        assert!(h.is_coherent());
        let z = PartialHom::new(chain2(), Arc::new(BaseHom::trivial())).extend(&o(), 0, 0).unwrap();
        assert_eq!(z.eval(&Term::literal(o()).join(&Term::literal(o().neg()))).unwrap(), 0);
    }

    #[test]
    fn candidate_pairs_on_two_chain() {
        let h = PartialHom::new(chain2(), Arc::new(BaseHom::trivial()));
        let scan = h.candidate_pairs(&o(), Availability::Strict).unwrap();
        assert_eq!(scan.pairs, vec![(0, 0), (0, 1), (1, 0)]);
        assert!(scan.range_consonant);
    }

    #[test]
    fn violated_inequality_is_reported() {
        // φ⟦x⟧ = 1, φ⟦x+o⟧ = 0. With c = o and u = x + o, φ⟦c−u⟧ = φ⟦−x⟧ = 0,
        // so c⁺ = 1 exceeds φ⟦c−u⟧ ∨ φ⟦u⟧.
        let h = point_hom(1);
        let u = gx().add(&o());
        let h = h.adjoin(&u, 0, 1).unwrap();
        let check = h.check_ext_conditions(&o(), 1, 0, Availability::Strict).unwrap();
        assert!(check.violations.iter().any(|v| v.starts_with("c⁺ ≤ φ⟦c−u⟧ ∨ φ⟦u⟧")));
        assert!(matches!(h.extend(&o(), 1, 0), Err(HomError::ExtensionImpossible(_))));
        // The brute-force view agrees: no coherent map sends ⟦o⟧ to 1 here.
        assert!(h.adjoin(&o(), 1, 0).is_err());
    }

    #[test]
    fn incomplete_domain_in_strict_mode() {
        let l = chain2();
        let h = PartialHom::new(l, Arc::new(BaseHom::trivial()));
        let u = RationalVector::basis(Coordinate::Ext(0)).add(&RationalVector::basis(Coordinate::Ext(1)));
        let h = h.adjoin(&u, 0, 0).unwrap();
        let c = RationalVector::basis(Coordinate::Ext(1));
        assert!(matches!(h.check_ext_conditions(&c, 0, 0, Availability::Strict), Err(HomError::IncompleteDomain(_))));
        let lenient = h.check_ext_conditions(&c, 0, 0, Availability::Lenient).unwrap();
        assert_eq!(lenient.skipped, 1);
    }

    #[test]
    fn criterion_examples() {
        let h = point_hom(1);
        let cap = default_lambda_cap();
        assert_eq!(h.closedness_criterion(&gx(), &gx(), 0, &cap).unwrap(), Some(int(1)));
        // e = φ⟦a⟧ makes λ = 1 immediate.
        let a = gx();
        let b = gx().neg();
        assert_eq!(h.closedness_criterion(&a, &b, 1, &cap).unwrap(), Some(int(1)));
        assert!(h.closedness_criterion(&a, &b, 0, &cap).is_err());
    }

    #[test]
    fn closure_step_ground_and_extension() {
        let h = point_hom(1);
        let cap = default_lambda_cap();
        let ob = Obligation { a: gx(), b: gx(), e: 0 };
        let r = h.closure_step(&ob, &cap, &[0, 1]).unwrap();
        assert!(r.adjoined.is_none());

        let l = chain2();
        let h = PartialHom::new(l.clone(), Arc::new(BaseHom::trivial()));
        let e0 = RationalVector::basis(Coordinate::Ext(0));
        let e1 = RationalVector::basis(Coordinate::Ext(1));
        let h = h.adjoin(&e0, 1, 0).unwrap().adjoin(&e1, 1, 0).unwrap();
        let ob = Obligation { a: e0.clone(), b: e1.clone(), e: 0 };
        let r = h.closure_step(&ob, &cap, &[0, 1]).unwrap();
        let v = e0.sub(&e1.scale(&r.lambda));
        let bound = l.join(h.eval_literal(&e1.neg()).unwrap(), 0);
        assert!(l.leq(r.hom.eval_literal(&v).unwrap(), bound));
        assert!(r.hom.is_coherent());
        for (g, x) in h.generators() {
            assert_eq!(r.hom.eval_literal(g).unwrap(), *x);
        }
    }

    #[test]
    fn finite_closedness_certificates_verify() {
        let l = chain2();
        let h = PartialHom::new(l, Arc::new(BaseHom::trivial()));
        let e0 = RationalVector::basis(Coordinate::Ext(0));
        let e1 = RationalVector::basis(Coordinate::Ext(1));
        let h = h.adjoin(&e0, 1, 0).unwrap().adjoin(&e0.add(&e1), 1, 0).unwrap();
        // ⟦e0⟧ ⊆ ⟦e0+e1⟧ ∪ ⟦−e1⟧ and φ⟦−e1⟧ is unknown, so nothing yet.
        assert!(h.finite_closedness(&e0, &e0.add(&e1), 0).unwrap().is_none());
        let h = h.adjoin(&e1, 0, 0).unwrap();
        let cert = h.finite_closedness(&e0, &e0.add(&e1), 0).unwrap().unwrap();
        assert!(h.verify_finite_closedness(&e0, &e0.add(&e1), 0, &cert));
        assert!(!h.verify_finite_closedness(&e0, &e0.add(&e1), 0, &FiniteClosedness { parts: vec![] }));
    }

    #[test]
    fn bounded_coherence_catches_conflict() {
        let l = chain2();
        let e0 = RationalVector::basis(Coordinate::Ext(0));
        let e1 = RationalVector::basis(Coordinate::Ext(1));
        // ⟦e0⟧ ∩ ⟦e1⟧ ⊆ ⟦e0+e1⟧ but values say 1 ∧ 1 ≰ 0.
        let h = PartialHom::from_generators(
            l,
            Arc::new(BaseHom::trivial()),
            [(e0.clone(), 1), (e0.neg(), 0), (e1.clone(), 1), (e1.neg(), 0), (e0.add(&e1), 0), (e0.add(&e1).neg(), 0)],
        )
        .unwrap();
        assert!(h.coherence_bounded(3).is_some());
        assert!(!h.coherence().is_coherent());
        assert!(!h.is_coherent());
    }

    #[test]
    fn coherence_points_verify() {
        let l = Arc::new(FiniteLattice::chain(3));
        let h = PartialHom::new(l, Arc::new(BaseHom::trivial()));
        let h = h.adjoin(&o(), 2, 0).unwrap().adjoin(&o().add(&RationalVector::basis(Coordinate::Ext(0))), 1, 0).unwrap();
        match h.coherence() {
            Coherence::Coherent(pts) => assert!(h.verify_coherence_points(&pts)),
            other => panic!("{other:?}"),
        }
        assert!(h.coherence_bounded(2).is_none());
    }

    #[test]
    fn hom_doc_round_trip() {
        let h = point_hom(1).adjoin(&o().add(&gx().scale(&ratio(1, 2))), 1, 0).unwrap();
        let doc = HomDoc::from_hom(&h);
        let s = serde_json::to_string(&doc).unwrap();
        let back: HomDoc = serde_json::from_str(&s).unwrap();
        assert_eq!(back.to_hom(None).unwrap(), h);
    }
}
