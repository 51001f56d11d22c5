//! Finite bounded-below lattices given by explicit tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::LatticeError;

pub const MAX_LATTICE_SIZE: usize = 64;
pub const MAX_POSET_SIZE: usize = 12;

pub type Elem = usize;

/// A finite lattice with a least element. Order, join and meet are full
/// tables indexed by element position.
///
/// Construction through [`FiniteLattice::new`] also enforces
/// distributivity; [`FiniteLattice::from_order`] stops after the lattice
/// axioms so that non-distributive examples can be inspected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteLattice {
    labels: Vec<String>,
    index: HashMap<String, Elem>,
    leq: Vec<Vec<bool>>,
    join: Vec<Vec<Elem>>,
    meet: Vec<Vec<Elem>>,
    zero: Elem,
    top: Elem,
    ji: Vec<Elem>,
    mi: Vec<Elem>,
}

fn reflexive_transitive_closure(n: usize, pairs: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut r = vec![vec![false; n]; n];
    for (i, row) in r.iter_mut().enumerate() {
        row[i] = true;
    }
    for &(x, y) in pairs {
        r[x][y] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    r
}

fn index_labels(labels: &[String]) -> Result<HashMap<String, Elem>, LatticeError> {
    let mut index = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(LatticeError::DuplicateLabel(l.clone()));
        }
    }
    Ok(index)
}

impl FiniteLattice {
    /// Builds a lattice from the reflexive-transitive closure of `pairs`,
    /// checking antisymmetry, binary joins and meets, and that `zero` is least.
    pub fn from_order(labels: Vec<String>, pairs: &[(Elem, Elem)], zero: Elem) -> Result<Self, LatticeError> {
        let n = labels.len();
        if n > MAX_LATTICE_SIZE {
            return Err(LatticeError::SizeGuard { what: "lattice", size: n, limit: MAX_LATTICE_SIZE });
        }
        if n == 0 {
            return Err(LatticeError::Precondition("a lattice needs at least one element".into()));
        }
        let index = index_labels(&labels)?;
        for &(x, y) in pairs.iter().chain(std::iter::once(&(zero, zero))) {
            for z in [x, y] {
                if z >= n {
                    return Err(LatticeError::UnknownElement(z.to_string()));
                }
            }
        }
        let leq = reflexive_transitive_closure(n, pairs);
        for x in 0..n {
            for y in x + 1..n {
                if leq[x][y] && leq[y][x] {
                    return Err(LatticeError::NotAntisymmetric(labels[x].clone(), labels[y].clone()));
                }
            }
        }
        let bound = |x: Elem, y: Elem, upper: bool| -> Option<Elem> {
            let ok = |z: Elem| if upper { leq[x][z] && leq[y][z] } else { leq[z][x] && leq[z][y] };
            let cands: Vec<Elem> = (0..n).filter(|&z| ok(z)).collect();
            cands
                .iter()
                .copied()
                .find(|&z| cands.iter().all(|&w| if upper { leq[z][w] } else { leq[w][z] }))
        };
        let mut join = vec![vec![0; n]; n];
        let mut meet = vec![vec![0; n]; n];
        for x in 0..n {
            for y in x..n {
                let j = bound(x, y, true).ok_or_else(|| LatticeError::NoJoin(labels[x].clone(), labels[y].clone()))?;
                let m = bound(x, y, false).ok_or_else(|| LatticeError::NoMeet(labels[x].clone(), labels[y].clone()))?;
                join[x][y] = j;
                join[y][x] = j;
                meet[x][y] = m;
                meet[y][x] = m;
            }
        }
        if !(0..n).all(|x| leq[zero][x]) {
            return Err(LatticeError::BadZero(labels[zero].clone()));
        }
        let top = (0..n).find(|&t| (0..n).all(|x| leq[x][t])).expect("finite lattices have a top");
        // An element is irreducible iff it has exactly one lower (upper) cover.
        let cover = |x: Elem, y: Elem| x != y && leq[x][y] && !(0..n).any(|z| z != x && z != y && leq[x][z] && leq[z][y]);
        let ji = (0..n).filter(|&j| (0..n).filter(|&x| cover(x, j)).count() == 1).collect();
        let mi = (0..n).filter(|&m| (0..n).filter(|&y| cover(m, y)).count() == 1).collect();
        Ok(FiniteLattice { labels, index, leq, join, meet, zero, top, ji, mi })
    }

    /// [`from_order`](Self::from_order) followed by a distributivity check.
    pub fn new(labels: Vec<String>, pairs: &[(Elem, Elem)], zero: Elem) -> Result<Self, LatticeError> {
        let l = Self::from_order(labels, pairs, zero)?;
        l.require_distributive()?;
        Ok(l)
    }

    /// Same as [`new`](Self::new) with elements named by label.
    pub fn from_labels(elements: &[&str], leq: &[(&str, &str)], zero: &str) -> Result<Self, LatticeError> {
        let l = Self::order_from_labels(elements, leq, zero)?;
        l.require_distributive()?;
        Ok(l)
    }

    /// Same as [`from_order`](Self::from_order) with elements named by label.
    pub fn order_from_labels(elements: &[&str], leq: &[(&str, &str)], zero: &str) -> Result<Self, LatticeError> {
        let labels: Vec<String> = elements.iter().map(|s| s.to_string()).collect();
        let index = index_labels(&labels)?;
        let look = |s: &str| index.get(s).copied().ok_or_else(|| LatticeError::UnknownElement(s.to_string()));
        let pairs = leq.iter().map(|(x, y)| Ok((look(x)?, look(y)?))).collect::<Result<Vec<_>, LatticeError>>()?;
        Self::from_order(labels, &pairs, look(zero)?)
    }

    /// The chain `0 < 1 < … < k−1`.
    pub fn chain(k: usize) -> Self {
        let labels = (0..k).map(|i| i.to_string()).collect();
        let pairs: Vec<_> = (1..k).map(|i| (i - 1, i)).collect();
        Self::new(labels, &pairs, 0).expect("chains are distributive lattices")
    }

    /// The Boolean lattice of subsets of an `n`-element set.
    pub fn boolean(n: usize) -> Result<Self, LatticeError> {
        from_downsets(&Poset::antichain(n))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.labels.len()
    }

    pub fn zero(&self) -> Elem {
        self.zero
    }

    pub fn label(&self, x: Elem) -> &str {
        &self.labels[x]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<Elem, LatticeError> {
        self.index.get(label).copied().ok_or_else(|| LatticeError::UnknownElement(label.to_string()))
    }

    pub fn leq(&self, x: Elem, y: Elem) -> bool {
        self.leq[x][y]
    }

    pub fn join(&self, x: Elem, y: Elem) -> Elem {
        self.join[x][y]
    }

    pub fn meet(&self, x: Elem, y: Elem) -> Elem {
        self.meet[x][y]
    }

    pub fn join_all<I: IntoIterator<Item = Elem>>(&self, xs: I) -> Elem {
        xs.into_iter().fold(self.zero, |acc, x| self.join(acc, x))
    }

    /// Meet of a nonempty family; `None` for the empty family.
    pub fn meet_all<I: IntoIterator<Item = Elem>>(&self, xs: I) -> Option<Elem> {
        xs.into_iter().reduce(|acc, x| self.meet(acc, x))
    }

    /// The greatest element (finite lattices always have one).
    pub fn top(&self) -> Elem {
        self.top
    }

    /// First violating triple of `x∧(y∨z) = (x∧y)∨(x∧z)`, if any.
    pub fn distributivity_violation(&self) -> Option<(Elem, Elem, Elem)> {
        for x in self.elements() {
            for y in self.elements() {
                for z in self.elements() {
                    if self.meet(x, self.join(y, z)) != self.join(self.meet(x, y), self.meet(x, z)) {
                        return Some((x, y, z));
                    }
                }
            }
        }
        None
    }

    pub fn check_distributive(&self) -> bool {
        self.distributivity_violation().is_none()
    }

    fn require_distributive(&self) -> Result<(), LatticeError> {
        match self.distributivity_violation() {
            None => Ok(()),
            Some((x, y, z)) => Err(LatticeError::NotDistributive(
                self.labels[x].clone(),
                self.labels[y].clone(),
                self.labels[z].clone(),
            )),
        }
    }

    /// All `(u, v)` with `a∨b = a∨v = u∨b` and `u∧v = 0`.
    pub fn splitting_pairs(&self, a: Elem, b: Elem) -> Vec<(Elem, Elem)> {
        let ab = self.join(a, b);
        let mut out = Vec::new();
        for u in self.elements() {
            if self.join(u, b) != ab {
                continue;
            }
            for v in self.elements() {
                if self.join(a, v) == ab && self.meet(u, v) == self.zero {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn is_consonant_pair(&self, a: Elem, b: Elem) -> bool {
        !self.splitting_pairs(a, b).is_empty()
    }

    /// First pair in `set × set` without a splitting pair.
    pub fn consonance_violation(&self, set: &BTreeSet<Elem>) -> Option<(Elem, Elem)> {
        for &a in set {
            for &b in set {
                if b >= a && !self.is_consonant_pair(a, b) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn is_consonant_set(&self, set: &BTreeSet<Elem>) -> bool {
        self.consonance_violation(set).is_none()
    }

    /// `None` when completely normal, otherwise a pair with no splitting pair.
    pub fn cn_counterexample(&self) -> Option<(Elem, Elem)> {
        self.consonance_violation(&self.elements().collect())
    }

    pub fn is_completely_normal(&self) -> bool {
        self.cn_counterexample().is_none()
    }

    pub fn require_completely_normal(&self) -> Result<(), LatticeError> {
        match self.cn_counterexample() {
            None => Ok(()),
            Some((a, b)) => Err(LatticeError::NotCompletelyNormal(self.labels[a].clone(), self.labels[b].clone())),
        }
    }

    /// Nonzero elements that are not the join of two strictly smaller ones.
    pub fn join_irreducibles(&self) -> &[Elem] {
        &self.ji
    }

    /// Non-top elements that are not the meet of two strictly larger ones.
    pub fn meet_irreducibles(&self) -> &[Elem] {
        &self.mi
    }

    /// Least `e` with `a ≤ b∨e`, which exists in a finite distributive lattice.
    pub fn residual(&self, a: Elem, b: Elem) -> Elem {
        let sols = self.elements().filter(|&e| self.leq(a, self.join(b, e)));
        self.meet_all(sols).expect("a itself always solves a ≤ b∨a")
    }

    /// Pairs `(x, y)` with `y` covering `x`.
    pub fn covers(&self) -> Vec<(Elem, Elem)> {
        let mut out = Vec::new();
        for x in self.elements() {
            for y in self.elements() {
                if x != y
                    && self.leq(x, y)
                    && !self.elements().any(|z| z != x && z != y && self.leq(x, z) && self.leq(z, y))
                {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Hasse diagram in Graphviz syntax, least element at the bottom.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph lattice {\n  rankdir=BT;\n");
        for x in self.elements() {
            let _ = writeln!(s, "  n{x} [label={:?}];", self.labels[x]);
        }
        for (x, y) in self.covers() {
            let _ = writeln!(s, "  n{x} -> n{y};");
        }
        s.push_str("}\n");
        s
    }

    pub fn to_doc(&self) -> LatticeDoc {
        LatticeDoc {
            format: Some(crate::FORMAT.to_string()),
            elements: self.labels.clone(),
            leq: self.covers().into_iter().map(|(x, y)| (self.labels[x].clone(), self.labels[y].clone())).collect(),
            zero: self.labels[self.zero].clone(),
        }
    }

    /// The poset of join-irreducibles, ordered as in the lattice.
    pub fn ji_poset(&self) -> Poset {
        let ji = self.join_irreducibles();
        let pairs: Vec<(usize, usize)> = (0..ji.len())
            .flat_map(|i| (0..ji.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| self.leq(ji[i], ji[j]))
            .collect();
        let labels = ji.iter().map(|&j| self.labels[j].clone()).collect();
        Poset::new(labels, &pairs).expect("restriction of a partial order")
    }
}

/// JSON form of a lattice. `leq` may list any generating set of pairs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
    pub elements: Vec<String>,
    pub leq: Vec<(String, String)>,
    pub zero: String,
}

impl LatticeDoc {
    pub fn to_lattice(&self) -> Result<FiniteLattice, LatticeError> {
        let els: Vec<&str> = self.elements.iter().map(String::as_str).collect();
        let pairs: Vec<(&str, &str)> = self.leq.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect();
        FiniteLattice::from_labels(&els, &pairs, &self.zero)
    }

    /// Checks the order axioms only, so non-distributive lattices load too.
    pub fn to_order(&self) -> Result<FiniteLattice, LatticeError> {
        let els: Vec<&str> = self.elements.iter().map(String::as_str).collect();
        let pairs: Vec<(&str, &str)> = self.leq.iter().map(|(x, y)| (x.as_str(), y.as_str())).collect();
        FiniteLattice::order_from_labels(&els, &pairs, &self.zero)
    }
}

impl Serialize for FiniteLattice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for FiniteLattice {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        LatticeDoc::deserialize(d)?.to_lattice().map_err(serde::de::Error::custom)
    }
}

/// A finite partial order given as a full relation table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poset {
    labels: Vec<String>,
    leq: Vec<Vec<bool>>,
}

impl Poset {
    /// Takes the reflexive-transitive closure of `pairs` and checks antisymmetry.
    pub fn new(labels: Vec<String>, pairs: &[(usize, usize)]) -> Result<Self, LatticeError> {
        let n = labels.len();
        index_labels(&labels)?;
        if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| x >= n || y >= n) {
            return Err(LatticeError::UnknownElement(x.max(y).to_string()));
        }
        let leq = reflexive_transitive_closure(n, pairs);
        for x in 0..n {
            for y in x + 1..n {
                if leq[x][y] && leq[y][x] {
                    return Err(LatticeError::NotAntisymmetric(labels[x].clone(), labels[y].clone()));
                }
            }
        }
        Ok(Poset { labels, leq })
    }

    pub fn from_labels(elements: &[&str], lt: &[(&str, &str)]) -> Result<Self, LatticeError> {
        let labels: Vec<String> = elements.iter().map(|s| s.to_string()).collect();
        let index = index_labels(&labels)?;
        let look = |s: &str| index.get(s).copied().ok_or_else(|| LatticeError::UnknownElement(s.to_string()));
        let pairs = lt.iter().map(|(x, y)| Ok((look(x)?, look(y)?))).collect::<Result<Vec<_>, LatticeError>>()?;
        Poset::new(labels, &pairs)
    }

    fn default_labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("p{i}")).collect()
    }

    pub fn antichain(n: usize) -> Self {
        Poset::new(Self::default_labels(n), &[]).expect("antichain")
    }

    pub fn chain(n: usize) -> Self {
        let pairs: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Poset::new(Self::default_labels(n), &pairs).expect("chain")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.leq[x][y]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Relation bits under the relabeling `perm`, row-major.
    fn key_under(&self, perm: &[usize]) -> Vec<bool> {
        let n = self.len();
        let mut k = vec![false; n * n];
        for i in 0..n {
            for j in 0..n {
                k[perm[i] * n + perm[j]] = self.leq[i][j];
            }
        }
        k
    }

    /// Isomorphism invariant: the least relation table over all relabelings.
    pub fn canonical_key(&self) -> Vec<bool> {
        let n = self.len();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = self.key_under(&perm);
        while next_permutation(&mut perm) {
            let k = self.key_under(&perm);
            if k < best {
                best = k;
            }
        }
        best
    }

    pub fn is_isomorphic(&self, other: &Poset) -> bool {
        self.len() == other.len() && self.canonical_key() == other.canonical_key()
    }

    /// All posets on `n` points up to isomorphism. Every poset has a linear
    /// extension, so it suffices to scan orders compatible with `0 < 1 < …`.
    pub fn enumerate(n: usize) -> Vec<Poset> {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << pairs.len()) {
            let chosen: Vec<(usize, usize)> =
                pairs.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p).collect();
            let p = Poset::new(Self::default_labels(n), &chosen).expect("upper-triangular relation");
            // Only transitively closed masks, so each relation is visited once.
            let closed_count = pairs.iter().filter(|&&(i, j)| p.leq[i][j]).count();
            if closed_count != chosen.len() {
                continue;
            }
            if seen.insert(p.canonical_key()) {
                out.push(p);
            }
        }
        out
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// The lattice of downsets of `p` under inclusion, labeled `{p,q,…}`.
pub fn from_downsets(p: &Poset) -> Result<FiniteLattice, LatticeError> {
    let n = p.len();
    if n > MAX_POSET_SIZE {
        return Err(LatticeError::SizeGuard { what: "poset", size: n, limit: MAX_POSET_SIZE });
    }
    let below: Vec<u32> = (0..n)
        .map(|y| (0..n).filter(|&x| p.leq(x, y)).fold(0u32, |m, x| m | 1 << x))
        .collect();
    let sets: Vec<u32> = (0u32..(1u32 << n))
        .filter(|&s| (0..n).all(|y| s >> y & 1 == 0 || below[y] & s == below[y]))
        .collect();
    if sets.len() > MAX_LATTICE_SIZE {
        return Err(LatticeError::SizeGuard { what: "downset lattice", size: sets.len(), limit: MAX_LATTICE_SIZE });
    }
    let labels: Vec<String> = sets
        .iter()
        .map(|&s| {
            let names: Vec<&str> = (0..n).filter(|&x| s >> x & 1 == 1).map(|x| p.labels[x].as_str()).collect();
            format!("{{{}}}", names.join(","))
        })
        .collect();
    let mut pairs = Vec::new();
    for (i, &s) in sets.iter().enumerate() {
        for (j, &t) in sets.iter().enumerate() {
            if i != j && s & t == s {
                pairs.push((i, j));
            }
        }
    }
    FiniteLattice::new(labels, &pairs, 0)
}

/// One representative of every distributive lattice with at most
/// `max_size` elements, via posets of join-irreducibles. Sizes are
/// ascending; the one-element lattice is included.
pub fn small_distributive_lattices(max_size: usize) -> Vec<FiniteLattice> {
    let mut out = Vec::new();
    for n in 0..max_size {
        for p in Poset::enumerate(n) {
            let l = from_downsets(&p).expect("small poset");
            if l.len() <= max_size {
                out.push(l);
            }
        }
    }
    out.sort_by_key(|l| l.len());
    out
}

/// A 0-lattice homomorphism between finite lattices.
#[derive(Clone, Debug)]
pub struct LatticeHom {
    pub source: Arc<FiniteLattice>,
    pub target: Arc<FiniteLattice>,
    map: Vec<Elem>,
}

/// Result of [`LatticeHom::closed_at`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClosedAt {
    /// For each `x` with `f(a) ≤ f(b)∨x`, some `u` with `a ≤ b∨u` and `f(u) ≤ x`.
    Closed(BTreeMap<Elem, Elem>),
    /// A target element `x` admitting no such `u`.
    NotClosed(Elem),
}

impl ClosedAt {
    pub fn is_closed(&self) -> bool {
        matches!(self, ClosedAt::Closed(_))
    }
}

impl LatticeHom {
    pub fn new(source: Arc<FiniteLattice>, target: Arc<FiniteLattice>, map: Vec<Elem>) -> Result<Self, LatticeError> {
        if map.len() != source.len() {
            return Err(LatticeError::Precondition("map must be total on the source".into()));
        }
        if let Some(&y) = map.iter().find(|&&y| y >= target.len()) {
            return Err(LatticeError::UnknownElement(y.to_string()));
        }
        if map[source.zero()] != target.zero() {
            return Err(LatticeError::NotHomomorphism("zero".into()));
        }
        for x in source.elements() {
            for y in source.elements() {
                if map[source.join(x, y)] != target.join(map[x], map[y]) {
                    return Err(LatticeError::NotHomomorphism(format!("join of {:?} and {:?}", source.label(x), source.label(y))));
                }
                if map[source.meet(x, y)] != target.meet(map[x], map[y]) {
                    return Err(LatticeError::NotHomomorphism(format!("meet of {:?} and {:?}", source.label(x), source.label(y))));
                }
            }
        }
        Ok(LatticeHom { source, target, map })
    }

    pub fn identity(l: Arc<FiniteLattice>) -> Self {
        let map = l.elements().collect();
        LatticeHom { source: l.clone(), target: l, map }
    }

    pub fn apply(&self, x: Elem) -> Elem {
        self.map[x]
    }

    pub fn map(&self) -> &[Elem] {
        &self.map
    }

    pub fn range(&self) -> BTreeSet<Elem> {
        self.map.iter().copied().collect()
    }

    pub fn closed_at(&self, a: Elem, b: Elem) -> ClosedAt {
        let (s, t) = (&*self.source, &*self.target);
        let (fa, fb) = (self.map[a], self.map[b]);
        let sols: Vec<Elem> = s.elements().filter(|&u| s.leq(a, s.join(b, u))).collect();
        let mut witness = BTreeMap::new();
        for x in t.elements() {
            if !t.leq(fa, t.join(fb, x)) {
                continue;
            }
            match sols.iter().find(|&&u| t.leq(self.map[u], x)) {
                Some(&u) => {
                    witness.insert(x, u);
                }
                None => return ClosedAt::NotClosed(x),
            }
        }
        ClosedAt::Closed(witness)
    }

    /// Closedness at every pair, or only at generator pairs when `generators`
    /// is given. The shortcut needs the generators to generate the source and
    /// the range to be consonant in the target; both are checked here.
    pub fn is_closed_hom(&self, generators: Option<&[Elem]>) -> Result<bool, LatticeError> {
        let pairs: Vec<Elem> = match generators {
            None => self.source.elements().collect(),
            Some(gens) => {
                if generated_sublattice(&self.source, gens).len() != self.source.len() {
                    return Err(LatticeError::Precondition("generators do not generate the source".into()));
                }
                if let Some((a, b)) = self.target.consonance_violation(&self.range()) {
                    return Err(LatticeError::Precondition(format!(
                        "range is not consonant: ({:?}, {:?})",
                        self.target.label(a),
                        self.target.label(b)
                    )));
                }
                gens.to_vec()
            }
        };
        for &a in &pairs {
            for &b in &pairs {
                if !self.closed_at(a, b).is_closed() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// The 0-sublattice generated by `gens`.
pub fn generated_sublattice(l: &FiniteLattice, gens: &[Elem]) -> BTreeSet<Elem> {
    let mut set: BTreeSet<Elem> = gens.iter().copied().collect();
    set.insert(l.zero());
    loop {
        let cur: Vec<Elem> = set.iter().copied().collect();
        let before = set.len();
        for &x in &cur {
            for &y in &cur {
                set.insert(l.join(x, y));
                set.insert(l.meet(x, y));
            }
        }
        if set.len() == before {
            return set;
        }
    }
}
