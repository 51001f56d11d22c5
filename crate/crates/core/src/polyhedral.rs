//! Exact decision of half-space entailments.
//!
//! The question `⋂_{a∈A}⟦a⟧ ⊆ ⋃_{b∈B}⟦b⟧` has two mutually exclusive
//! certificates: nonnegative multipliers `ξ, η` with `Σ ξ_a a = Σ η_b b` and
//! some `ξ_a > 0`, or a point `x` with `(a|x) > 0` on `A` and `(b|x) ≤ 0` on
//! `B`. [`feasible_mixed`] finds one of them with a phase-one simplex over
//! the multipliers; [`fm_oracle`] answers the same question by
//! Fourier–Motzkin elimination on the point side and is kept only as an
//! independent cross-check.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::PolyError;
use crate::rational::{serde_scalar_vec, Coordinate, IntRay, RationalVector, Scalar};

/// Multipliers proving that no point separates `A` from `B`.
///
/// `xi[i]` pairs with the i-th strict vector and `eta[j]` with the j-th
/// nonstrict vector of the instance that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FarkasCertificate {
    #[serde(with = "serde_scalar_vec")]
    pub xi: Vec<Scalar>,
    #[serde(with = "serde_scalar_vec")]
    pub eta: Vec<Scalar>,
}

impl FarkasCertificate {
    /// Re-checks `Σ ξ_a a = Σ η_b b`, nonnegativity, and that some `ξ_a > 0`.
    pub fn verify(&self, a: &[RationalVector], b: &[RationalVector]) -> bool {
        if self.xi.len() != a.len() || self.eta.len() != b.len() {
            return false;
        }
        if self.xi.iter().chain(&self.eta).any(|x| x.is_negative()) {
            return false;
        }
        if !self.xi.iter().any(|x| x.is_positive()) {
            return false;
        }
        let lhs = a
            .iter()
            .zip(&self.xi)
            .fold(RationalVector::zero(), |acc, (v, k)| acc.add_scaled(k, v));
        let rhs = b
            .iter()
            .zip(&self.eta)
            .fold(RationalVector::zero(), |acc, (v, k)| acc.add_scaled(k, v));
        lhs == rhs
    }
}

/// A point lying in every `⟦a⟧` and outside every `⟦b⟧`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessPoint {
    pub x: RationalVector,
}

impl WitnessPoint {
    /// `(a|x) > 0` for all strict `a`, `(b|x) ≤ 0` for all nonstrict `b`.
    pub fn separates(&self, strict: &[RationalVector], nonstrict: &[RationalVector]) -> bool {
        strict.iter().all(|a| a.pairing(&self.x).is_positive())
            && nonstrict.iter().all(|b| !b.pairing(&self.x).is_positive())
    }

    /// The `≥ 1` form returned by [`feasible_mixed`].
    pub fn separates_by_one(&self, strict: &[RationalVector], nonstrict: &[RationalVector]) -> bool {
        strict.iter().all(|a| a.pairing(&self.x) >= Scalar::one())
            && nonstrict.iter().all(|b| !b.pairing(&self.x).is_positive())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certificate {
    Farkas(FarkasCertificate),
    Witness(WitnessPoint),
}

impl Certificate {
    pub fn is_farkas(&self) -> bool {
        matches!(self, Certificate::Farkas(_))
    }

    /// Re-verifies the certificate against the instance by direct arithmetic.
    pub fn verify(&self, a: &[RationalVector], b: &[RationalVector]) -> bool {
        match self {
            Certificate::Farkas(f) => f.verify(a, b),
            Certificate::Witness(w) => w.separates(a, b),
        }
    }
}

/// Verdict of a basic entailment together with its certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entailment {
    pub holds: bool,
    pub certificate: Certificate,
}

impl Entailment {
    pub fn verify(&self, a: &[RationalVector], b: &[RationalVector]) -> bool {
        if a.is_empty() {
            return !self.holds && self.certificate.verify(a, b);
        }
        self.holds == self.certificate.is_farkas() && self.certificate.verify(a, b)
    }
}

/// Finds `x` with `(a|x) ≥ 1` on `strict` and `(b|x) ≤ 0` on `nonstrict`,
/// or a Farkas certificate that no such point exists.
///
/// By homogeneity the `≥ 1` system is feasible iff the strict system
/// `(a|x) > 0` is, so the returned branch also decides the strict question.
pub fn feasible_mixed(strict: &[RationalVector], nonstrict: &[RationalVector]) -> Certificate {
    let s: Vec<&RationalVector> = strict.iter().collect();
    let n: Vec<&RationalVector> = nonstrict.iter().collect();
    let cert = feasible_mixed_by_ref(&s, &n);
    debug_assert!(match &cert {
        Certificate::Farkas(f) => f.verify(strict, nonstrict),
        Certificate::Witness(w) => w.separates_by_one(strict, nonstrict),
    });
    cert
}

/// [`feasible_mixed`] over borrowed vectors.
pub fn feasible_mixed_by_ref(strict: &[&RationalVector], nonstrict: &[&RationalVector]) -> Certificate {
    if strict.is_empty() {
        return Certificate::Witness(WitnessPoint { x: RationalVector::zero() });
    }
    if nonstrict.len() > LAZY_THRESHOLD {
        solve_lazily(strict, nonstrict)
    } else {
        solve_multipliers(strict, nonstrict)
    }
}

/// Decides `⋂_{a∈A}⟦a⟧ ⊆ ⋃_{b∈B}⟦b⟧`. An empty `A` never entails.
pub fn entails_basic(a: &[RationalVector], b: &[RationalVector]) -> Entailment {
    if a.is_empty() {
        return Entailment {
            holds: false,
            certificate: Certificate::Witness(WitnessPoint { x: RationalVector::zero() }),
        };
    }
    let certificate = feasible_mixed(a, b);
    Entailment { holds: certificate.is_farkas(), certificate }
}

/// Decides whether `⋂_{a∈A}⟦a⟧` is empty, i.e. whether `0 ∈ conv A`.
pub fn is_empty_meet(a: &[RationalVector]) -> Result<Entailment, PolyError> {
    if a.is_empty() {
        return Err(PolyError::InvalidInput("empty meet has no finite description"));
    }
    Ok(entails_basic(a, &[]))
}

/// Above this many nonstrict vectors the simplex sees only a working subset.
const LAZY_THRESHOLD: usize = 24;

/// Rows added to the working subset per round.
const LAZY_BATCH: usize = 8;

/// Constraint generation: solve on a subset of `nonstrict`, and while the
/// witness violates a left-out vector, add the worst offenders. A Farkas
/// certificate on a subset is one on the whole set with zeros elsewhere.
fn solve_lazily(strict: &[&RationalVector], nonstrict: &[&RationalVector]) -> Certificate {
    let mut active: Vec<usize> = (0..nonstrict.len().min(LAZY_BATCH)).collect();
    let mut in_active = vec![false; nonstrict.len()];
    for &i in &active {
        in_active[i] = true;
    }
    loop {
        let sub: Vec<&RationalVector> = active.iter().map(|&i| nonstrict[i]).collect();
        match solve_multipliers(strict, &sub) {
            Certificate::Farkas(f) => {
                let mut eta = vec![Scalar::zero(); nonstrict.len()];
                for (k, &i) in active.iter().enumerate() {
                    eta[i] = f.eta[k].clone();
                }
                return Certificate::Farkas(FarkasCertificate { xi: f.xi, eta });
            }
            Certificate::Witness(w) => {
                let mut violated: Vec<(Scalar, usize)> = (0..nonstrict.len())
                    .filter(|&i| !in_active[i])
                    .map(|i| (nonstrict[i].pairing(&w.x), i))
                    .filter(|(p, _)| p.is_positive())
                    .collect();
                if violated.is_empty() {
                    return Certificate::Witness(w);
                }
                violated.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
                for (_, i) in violated.into_iter().take(LAZY_BATCH) {
                    in_active[i] = true;
                    active.push(i);
                }
            }
        }
    }
}

/// [`feasible_mixed`] on integer rays, with a fraction-free tableau that
/// runs on `i128` and falls back to big integers on overflow. Certificates
/// refer to the original vectors the rays were scaled from.
pub fn feasible_mixed_int(strict: &[&IntRay], nonstrict: &[&IntRay]) -> Certificate {
    if strict.is_empty() {
        return Certificate::Witness(WitnessPoint { x: RationalVector::zero() });
    }
    let mut coords: Vec<&Coordinate> = strict.iter().chain(nonstrict).flat_map(|v| v.entries.iter().map(|(c, _)| c)).collect();
    coords.sort();
    coords.dedup();
    let coords: Vec<Coordinate> = coords.into_iter().cloned().collect();
    let dense = |v: &IntRay| -> Vec<BigInt> {
        let mut col = vec![BigInt::zero(); coords.len()];
        for (c, x) in &v.entries {
            let i = coords.binary_search(c).expect("coordinate collected above");
            col[i] = x.clone();
        }
        col
    };
    let small = |col: &Vec<BigInt>| -> Option<Vec<i128>> { col.iter().map(i128::from_big).collect() };
    let strict_big: Vec<Vec<BigInt>> = strict.iter().map(|v| dense(v)).collect();
    let nonstrict_big: Vec<Vec<BigInt>> = nonstrict.iter().map(|v| dense(v)).collect();
    let strict_small: Option<Vec<Vec<i128>>> = strict_big.iter().map(small).collect();
    let nonstrict_small: Vec<Option<Vec<i128>>> = nonstrict_big.iter().map(small).collect();

    let lazy = nonstrict.len() > LAZY_THRESHOLD;
    let mut active: Vec<usize> = if lazy { (0..LAZY_BATCH).collect() } else { (0..nonstrict.len()).collect() };
    let mut in_active = vec![false; nonstrict.len()];
    for &i in &active {
        in_active[i] = true;
    }
    loop {
        // Each round tries i128 first; an overflow only costs this round.
        let on_i128 = || -> Option<Certificate> {
            let sub: Vec<&Vec<i128>> = active.iter().map(|&i| nonstrict_small[i].as_ref()).collect::<Option<_>>()?;
            MultiplierLp::<i128>::from_columns(coords.clone(), strict_small.as_ref()?, &sub)?.solve()
        };
        let cert = on_i128().unwrap_or_else(|| {
            let sub: Vec<&Vec<BigInt>> = active.iter().map(|&i| &nonstrict_big[i]).collect();
            MultiplierLp::<BigInt>::from_columns(coords.clone(), &strict_big, &sub)
                .and_then(MultiplierLp::solve)
                .expect("big integers do not overflow")
        });
        match cert {
            Certificate::Farkas(f) => {
                let mut eta = vec![Scalar::zero(); nonstrict.len()];
                for (k, &i) in active.iter().enumerate() {
                    eta[i] = &f.eta[k] * &nonstrict[i].scale;
                }
                let xi: Vec<Scalar> = f.xi.iter().zip(strict).map(|(x, v)| x * &v.scale).collect();
                let n = xi.len();
                let z = primitive_integer(xi.into_iter().chain(eta).collect());
                let eta = z[n..].to_vec();
                let mut xi = z;
                xi.truncate(n);
                return Certificate::Farkas(FarkasCertificate { xi, eta });
            }
            Certificate::Witness(w) => {
                let x_big: Vec<BigInt> = coords.iter().map(|c| w.x.get(c).to_integer()).collect();
                let x_small: Option<Vec<i128>> = small(&x_big);
                let mut violated = Vec::new();
                for i in (0..nonstrict.len()).filter(|&i| !in_active[i]) {
                    let p = pairing_i128(nonstrict_small[i].as_deref(), x_small.as_deref())
                        .unwrap_or_else(|| nonstrict_big[i].iter().zip(&x_big).map(|(a, b)| a * b).sum());
                    if p.is_positive() {
                        violated.push((p, i));
                    }
                }
                if violated.is_empty() {
                    return Certificate::Witness(w);
                }
                violated.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
                for (_, i) in violated.into_iter().take(LAZY_BATCH) {
                    in_active[i] = true;
                    active.push(i);
                }
            }
        }
    }
}

/// `(v|x)` in checked `i128` arithmetic, `None` when either side is missing
/// or the sum overflows.
fn pairing_i128(v: Option<&[i128]>, x: Option<&[i128]>) -> Option<BigInt> {
    let (v, x) = (v?, x?);
    let mut p: i128 = 0;
    for (a, b) in v.iter().zip(x) {
        if *a != 0 {
            p = p.checked_add(a.checked_mul(*b)?)?;
        }
    }
    Some(BigInt::from(p))
}

/// Integer arithmetic the simplex needs. Operations return `None` on overflow.
trait LpInt: Clone + Ord + Sized {
    fn nil() -> Self;
    fn from_big(x: &BigInt) -> Option<Self>;
    fn from_small(x: i128) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn minus(&self, o: &Self) -> Option<Self>;
    fn times(&self, o: &Self) -> Option<Self>;
    /// Exact division by a positive divisor of `self`.
    fn quot(&self, d: &Self) -> Self;
    fn gcd_with(&self, o: &Self) -> Self;
    fn is_unit(&self) -> bool;
    fn sign(&self) -> Ordering {
        self.cmp(&Self::nil())
    }
}

impl LpInt for i128 {
    fn nil() -> Self {
        0
    }
    fn from_big(x: &BigInt) -> Option<Self> {
        // Keep headroom so products of two entries are checked, not wrapped.
        x.to_i128().and_then(Self::from_small)
    }
    fn from_small(x: i128) -> Option<Self> {
        Some(x).filter(|v| v.unsigned_abs() < (1u128 << 126))
    }
    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }
    fn minus(&self, o: &Self) -> Option<Self> {
        self.checked_sub(*o)
    }
    fn times(&self, o: &Self) -> Option<Self> {
        self.checked_mul(*o)
    }
    fn quot(&self, d: &Self) -> Self {
        self / d
    }
    fn gcd_with(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn is_unit(&self) -> bool {
        *self == 1
    }
}

impl LpInt for BigInt {
    fn nil() -> Self {
        Zero::zero()
    }
    fn from_big(x: &BigInt) -> Option<Self> {
        Some(x.clone())
    }
    fn from_small(x: i128) -> Option<Self> {
        Some(BigInt::from(x))
    }
    fn to_big(&self) -> BigInt {
        self.clone()
    }
    fn minus(&self, o: &Self) -> Option<Self> {
        Some(self - o)
    }
    fn times(&self, o: &Self) -> Option<Self> {
        Some(self * o)
    }
    fn quot(&self, d: &Self) -> Self {
        let (q, r) = self.div_rem(d);
        debug_assert!(r.is_zero(), "inexact division");
        q
    }
    fn gcd_with(&self, o: &Self) -> Self {
        Integer::gcd(self, o)
    }
    fn is_unit(&self) -> bool {
        One::is_one(self)
    }
}

/// Divides `row` and `extra` by the positive gcd of all their entries.
fn normalize_row<T: LpInt>(row: &mut [T], extra: &mut T) {
    let mut g = extra.clone();
    for x in row.iter() {
        if g.is_unit() {
            return;
        }
        if x.sign() != Ordering::Equal {
            g = g.gcd_with(x);
        }
    }
    if g.sign() == Ordering::Equal || g.is_unit() {
        return;
    }
    for x in row.iter_mut() {
        if x.sign() != Ordering::Equal {
            *x = x.quot(&g);
        }
    }
    *extra = extra.quot(&g);
}

/// Phase-one simplex over the multiplier polytope
/// `{ (ξ, η) ≥ 0 : Σ ξ_a a − Σ η_b b = 0, Σ ξ_a = 1 }`.
///
/// Rows are the coordinates touched by the instance plus the normalizing
/// row, so the tableau stays small even with many vectors. Entering and
/// leaving variables follow Bland's rule.
///
/// The tableau is fraction-free: every row is an integer multiple of the
/// true row by a positive factor, which changes neither ratio tests nor
/// signs, and the reduced-cost row carries an explicit positive
/// denominator. Tableaus built from rational rows keep rows small by their
/// gcds; tableaus built from integer columns pivot Bareiss-style, dividing
/// exactly by the previous pivot. Integer tableaus first run on `i128` and
/// are rebuilt on big integers if an entry overflows; both runs take the
/// same pivots.
struct MultiplierLp<T> {
    n_strict: usize,
    n_struct: usize,
    coords: Vec<Coordinate>,
    rows: Vec<Vec<T>>,
    rhs: Vec<T>,
    basis: Vec<usize>,
    reduced: Vec<T>,
    /// Positive denominator of `reduced`.
    denom: T,
    /// In Bareiss mode, the last pivot: every row of the true tableau is
    /// the stored row divided by it.
    det: Option<T>,
}

fn solve_multipliers(strict: &[&RationalVector], nonstrict: &[&RationalVector]) -> Certificate {
    if let Some(c) = MultiplierLp::<i128>::new(strict, nonstrict).and_then(MultiplierLp::solve) {
        return c;
    }
    MultiplierLp::<BigInt>::new(strict, nonstrict)
        .and_then(MultiplierLp::solve)
        .expect("big integers do not overflow")
}

/// Scales a rational row to integers by the lcm of its denominators.
fn integer_row<T: LpInt>(row: &[Scalar]) -> Option<(Vec<T>, BigInt)> {
    let l = row.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let out = row
        .iter()
        .map(|x| T::from_big(&(x.numer() * (&l / x.denom()))))
        .collect::<Option<Vec<T>>>()?;
    Some((out, l))
}

impl<T: LpInt> MultiplierLp<T> {
    /// Builds the tableau from integer vectors given densely over `coords`.
    fn from_columns(coords: Vec<Coordinate>, strict: &[Vec<T>], nonstrict: &[&Vec<T>]) -> Option<Self> {
        let d = coords.len();
        let m = d + 1;
        let n_struct = strict.len() + nonstrict.len();
        let width = n_struct + m;
        let mut rows = vec![vec![T::nil(); width]; m];
        let mut reduced = vec![T::nil(); width];
        let unit = T::from_small(1)?;
        for (j, col) in strict.iter().map(|c| (c, false)).chain(nonstrict.iter().map(|c| (*c, true))).enumerate() {
            let (col, negate) = col;
            // reduced_j = −(column sum), with the normalizing 1 on strict columns.
            let mut neg_sum = if negate { T::nil() } else { T::nil().minus(&unit)? };
            for (i, x) in col.iter().enumerate() {
                if x.sign() == Ordering::Equal {
                    continue;
                }
                let x = if negate { T::nil().minus(x)? } else { x.clone() };
                neg_sum = neg_sum.minus(&x)?;
                rows[i][j] = x;
            }
            if !negate {
                rows[d][j] = unit.clone();
            }
            reduced[j] = neg_sum;
        }
        for (i, row) in rows.iter_mut().enumerate() {
            row[n_struct + i] = unit.clone();
        }
        let mut rhs = vec![T::nil(); m];
        rhs[d] = unit.clone();
        let basis = (0..m).map(|i| n_struct + i).collect();
        // Integer columns start from an identity basis, so Bareiss pivoting applies.
        let det = Some(unit.clone());
        Some(MultiplierLp { n_strict: strict.len(), n_struct, coords, rows, rhs, basis, reduced, denom: unit, det })
    }

    fn new(strict: &[&RationalVector], nonstrict: &[&RationalVector]) -> Option<Self> {
        let coords: Vec<Coordinate> = strict
            .iter()
            .chain(nonstrict)
            .flat_map(|v| v.support().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let m = coords.len() + 1;
        let n_struct = strict.len() + nonstrict.len();
        let width = n_struct + m;
        let mut exact = vec![vec![Scalar::zero(); width]; m];
        for (j, a) in strict.iter().enumerate() {
            for (i, c) in coords.iter().enumerate() {
                exact[i][j] = a.get(c);
            }
            exact[m - 1][j] = Scalar::one();
        }
        for (k, b) in nonstrict.iter().enumerate() {
            let j = strict.len() + k;
            for (i, c) in coords.iter().enumerate() {
                exact[i][j] = -b.get(c);
            }
        }
        for (i, row) in exact.iter_mut().enumerate() {
            row[n_struct + i] = Scalar::one();
        }
        let mut reduced_exact = vec![Scalar::zero(); width];
        for (j, r) in reduced_exact.iter_mut().enumerate().take(n_struct) {
            *r = -exact.iter().map(|row| &row[j]).fold(Scalar::zero(), |acc, x| acc + x);
        }
        let mut rows = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in exact.iter().enumerate() {
            let (r, l) = integer_row::<T>(row)?;
            rows.push(r);
            rhs.push(if i == m - 1 { T::from_big(&l)? } else { T::nil() });
        }
        let (reduced, dl) = integer_row::<T>(&reduced_exact)?;
        let denom = T::from_big(&dl)?;
        let basis = (0..m).map(|i| n_struct + i).collect();
        Some(MultiplierLp { n_strict: strict.len(), n_struct, coords, rows, rhs, basis, reduced, denom, det: None })
    }

    fn pivot(&mut self, r: usize, col: usize) -> Option<()> {
        if self.det.is_some() {
            return self.pivot_bareiss(r, col);
        }
        let p = self.rows[r][col].clone();
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col].clone();
            if f.sign() == Ordering::Equal {
                continue;
            }
            for (x, y) in self.rows[i].iter_mut().zip(&prow) {
                *x = x.times(&p)?.minus(&f.times(y)?)?;
            }
            self.rhs[i] = self.rhs[i].times(&p)?.minus(&f.times(&prhs)?)?;
            let (row, rhs) = (&mut self.rows[i], &mut self.rhs[i]);
            normalize_row(row, rhs);
        }
        let f = self.reduced[col].clone();
        if f.sign() != Ordering::Equal {
            for (x, y) in self.reduced.iter_mut().zip(&prow) {
                *x = x.times(&p)?.minus(&f.times(y)?)?;
            }
            self.denom = self.denom.times(&p)?;
            normalize_row(&mut self.reduced, &mut self.denom);
        }
        self.basis[r] = col;
        Some(())
    }

    /// Pivot with the stored tableau equal to the last pivot times the true
    /// one. Then every entry is a minor of the initial tableau, so dividing
    /// by the previous pivot is exact and no gcds are needed.
    fn pivot_bareiss(&mut self, r: usize, col: usize) -> Option<()> {
        let d = self.det.take().expect("Bareiss mode");
        let p = self.rows[r][col].clone();
        let prow = self.rows[r].clone();
        let prhs = self.rhs[r].clone();
        let update = |x: &T, f: &T, y: &T| -> Option<T> {
            let t = if f.sign() == Ordering::Equal { x.times(&p)? } else { x.times(&p)?.minus(&f.times(y)?)? };
            Some(t.quot(&d))
        };
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let f = self.rows[i][col].clone();
            for (x, y) in self.rows[i].iter_mut().zip(&prow) {
                *x = update(x, &f, y)?;
            }
            self.rhs[i] = update(&self.rhs[i], &f, &prhs)?;
        }
        let f = self.reduced[col].clone();
        for (x, y) in self.reduced.iter_mut().zip(&prow) {
            *x = update(x, &f, y)?;
        }
        self.denom = p.clone();
        self.det = Some(p);
        self.basis[r] = col;
        Some(())
    }

    fn solve(mut self) -> Option<Certificate> {
        loop {
            let entering = match self.reduced.iter().position(|d| d.sign() == Ordering::Less) {
                Some(j) => j,
                None => break,
            };
            // Smallest rhs_i / a_i over a_i > 0, ties to the smallest basic index.
            let mut best: Option<usize> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][entering];
                if a.sign() != Ordering::Greater {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some(k) => {
                        let lhs = self.rhs[i].times(&self.rows[k][entering])?;
                        let rhs = self.rhs[k].times(a)?;
                        lhs < rhs || (lhs == rhs && self.basis[i] < self.basis[k])
                    }
                };
                if better {
                    best = Some(i);
                }
            }
            // Phase one is bounded below by zero, so some row always qualifies.
            let r = best.expect("phase-one simplex cannot be unbounded");
            self.pivot(r, entering)?;
        }

        let m = self.rows.len();
        let feasible = (0..m).filter(|&i| self.basis[i] >= self.n_struct).all(|i| self.rhs[i].sign() == Ordering::Equal);

        Some(if feasible {
            let mut z = vec![Scalar::zero(); self.n_struct];
            for i in 0..m {
                let col = self.basis[i];
                if col < self.n_struct {
                    z[col] = Scalar::new(self.rhs[i].to_big(), self.rows[i][col].to_big());
                }
            }
            let z = primitive_integer(z);
            let eta = z[self.n_strict..].to_vec();
            let mut xi = z;
            xi.truncate(self.n_strict);
            Certificate::Farkas(FarkasCertificate { xi, eta })
        } else {
            // Duals y_i = 1 − d_{art_i}; y = (x, t) gives (a|x) ≤ −t, (b|x) ≥ 0, t > 0.
            let d = self.denom.to_big();
            let y: Vec<Scalar> = (0..m)
                .map(|i| Scalar::one() - Scalar::new(self.reduced[self.n_struct + i].to_big(), d.clone()))
                .collect();
            let t = y[m - 1].clone();
            debug_assert!(t.is_positive());
            let x = RationalVector::from_entries(
                self.coords.iter().cloned().zip(y.iter().map(|yi| -yi / &t)),
            );
            Certificate::Witness(WitnessPoint { x: x.clear_denominators() })
        })
    }
}

/// Rescales a nonnegative, nonzero rational vector to the primitive integer
/// vector on the same ray.
fn primitive_integer(v: Vec<Scalar>) -> Vec<Scalar> {
    let l = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v;
    }
    ints.into_iter().map(|x| BigRational::from_integer(x / &g)).collect()
}

/// Verdict of [`fm_oracle`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FmVerdict {
    Feasible(WitnessPoint),
    Infeasible,
}

impl FmVerdict {
    pub fn is_feasible(&self) -> bool {
        matches!(self, FmVerdict::Feasible(_))
    }
}

pub const FM_MAX_DIMENSION: usize = 6;
pub const FM_MAX_CONSTRAINTS: usize = 12;
const FM_MAX_ROWS: usize = 50_000;

/// Homogeneous constraint `row · x > 0` (strict) or `row · x ≥ 0`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct FmRow {
    coeffs: Vec<Scalar>,
    strict: bool,
}

/// Decides whether some `x` has `(a|x) > 0` on `strict` and `(b|x) ≤ 0` on
/// `nonstrict`, by Fourier–Motzkin elimination with strictness tracking.
/// Works on the strict system directly, independently of [`feasible_mixed`].
pub fn fm_oracle(strict: &[RationalVector], nonstrict: &[RationalVector]) -> Result<FmVerdict, PolyError> {
    let coords: Vec<Coordinate> = strict
        .iter()
        .chain(nonstrict)
        .flat_map(|v| v.support().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if coords.len() > FM_MAX_DIMENSION {
        return Err(PolyError::OracleUnavailable(format!("dimension {} exceeds {}", coords.len(), FM_MAX_DIMENSION)));
    }
    let total = strict.len() + nonstrict.len();
    if total > FM_MAX_CONSTRAINTS {
        return Err(PolyError::OracleUnavailable(format!("{total} constraints exceed {FM_MAX_CONSTRAINTS}")));
    }
    let dense = |v: &RationalVector, sign: i64| -> Vec<Scalar> {
        coords.iter().map(|c| v.get(c) * Scalar::from_integer(sign.into())).collect()
    };
    let mut system: Vec<FmRow> = strict
        .iter()
        .map(|a| FmRow { coeffs: dense(a, 1), strict: true })
        .chain(nonstrict.iter().map(|b| FmRow { coeffs: dense(b, -1), strict: false }))
        .collect();
    system = tidy(system);

    // history[k] is the system in which variable k is eliminated next.
    let mut history: Vec<Vec<FmRow>> = Vec::with_capacity(coords.len());
    for k in 0..coords.len() {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let mut next = Vec::new();
        for row in &system {
            let c = &row.coeffs[k];
            if c.is_positive() {
                pos.push(row);
            } else if c.is_negative() {
                neg.push(row);
            } else {
                next.push(row.clone());
            }
        }
        for p in &pos {
            for n in &neg {
                let cp = &p.coeffs[k];
                let cn = -&n.coeffs[k];
                let coeffs = p
                    .coeffs
                    .iter()
                    .zip(&n.coeffs)
                    .map(|(x, y)| x * &cn + y * cp)
                    .collect();
                next.push(FmRow { coeffs, strict: p.strict || n.strict });
            }
        }
        history.push(std::mem::take(&mut system));
        system = tidy(next);
        if system.len() > FM_MAX_ROWS {
            return Err(PolyError::OracleUnavailable("elimination blow-up".into()));
        }
    }
    // All variables eliminated: rows read `0 > 0` or `0 ≥ 0`.
    if system.iter().any(|r| r.strict) {
        return Ok(FmVerdict::Infeasible);
    }

    let n = coords.len();
    let mut values = vec![Scalar::zero(); n];
    for k in (0..n).rev() {
        let mut lo: Option<(Scalar, bool)> = None;
        let mut hi: Option<(Scalar, bool)> = None;
        for row in &history[k] {
            let ck = &row.coeffs[k];
            if ck.is_zero() {
                continue;
            }
            let rest: Scalar = (k + 1..n)
                .map(|j| &row.coeffs[j] * &values[j])
                .fold(Scalar::zero(), |a, b| a + b);
            let bound = -rest / ck;
            if ck.is_positive() {
                lo = Some(match lo {
                    None => (bound, row.strict),
                    Some((l, _)) if bound > l => (bound, row.strict),
                    Some((l, s)) if bound == l => (l, s || row.strict),
                    Some(other) => other,
                });
            } else {
                hi = Some(match hi {
                    None => (bound, row.strict),
                    Some((h, _)) if bound < h => (bound, row.strict),
                    Some((h, s)) if bound == h => (h, s || row.strict),
                    Some(other) => other,
                });
            }
        }
        values[k] = match (lo, hi) {
            (None, None) => Scalar::zero(),
            (Some((l, _)), None) => l + Scalar::one(),
            (None, Some((h, _))) => h - Scalar::one(),
            (Some((l, _)), Some((h, _))) if l < h => (l + h) / Scalar::from_integer(2.into()),
            (Some((l, _)), Some(_)) => l,
        };
    }
    let x = RationalVector::from_entries(coords.into_iter().zip(values));
    Ok(FmVerdict::Feasible(WitnessPoint { x }))
}

/// Scales rows so the first nonzero coefficient has absolute value one,
/// drops trivial `0 ≥ 0` rows, and removes duplicates (a strict row
/// subsumes an identical nonstrict one).
fn tidy(rows: Vec<FmRow>) -> Vec<FmRow> {
    let mut seen: BTreeSet<FmRow> = BTreeSet::new();
    for mut r in rows {
        match r.coeffs.iter().find(|x| !x.is_zero()).cloned() {
            None => {
                if r.strict {
                    seen.insert(r);
                }
            }
            Some(lead) => {
                let inv = lead.abs().recip();
                for x in r.coeffs.iter_mut() {
                    *x *= &inv;
                }
                seen.insert(r);
            }
        }
    }
    let mut out: Vec<FmRow> = Vec::with_capacity(seen.len());
    for r in seen {
        if !r.strict {
            let twin = FmRow { coeffs: r.coeffs.clone(), strict: true };
            if out.contains(&twin) {
                continue;
            }
        }
        if r.strict {
            out.retain(|o: &FmRow| o.coeffs != r.coeffs);
        }
        out.push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn g(vals: &[i64]) -> RationalVector {
        RationalVector::ground_ints(vals)
    }

    fn farkas(c: &Certificate) -> &FarkasCertificate {
        match c {
            Certificate::Farkas(f) => f,
            Certificate::Witness(w) => panic!("expected Farkas certificate, got witness {}", w.x),
        }
    }

    fn ints(v: &[i64]) -> Vec<Scalar> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn mixed_with_no_strict_rows_is_zero() {
        let c = feasible_mixed(&[], &[g(&[1, 2]), g(&[-3])]);
        assert_eq!(c, Certificate::Witness(WitnessPoint { x: RationalVector::zero() }));
    }

    #[test]
    fn opposite_vectors_have_unit_certificate() {
        let a = [g(&[1, 0]), g(&[-1, 0])];
        let c = feasible_mixed(&a, &[]);
        assert_eq!(farkas(&c).xi, ints(&[1, 1]));
        assert!(c.verify(&a, &[]));
    }

    #[test]
    fn mixed_feasible_example() {
        let (s, n) = ([g(&[1, 0])], [g(&[0, 1])]);
        let c = feasible_mixed(&s, &n);
        match &c {
            Certificate::Witness(w) => assert!(w.separates_by_one(&s, &n)),
            _ => panic!("expected witness"),
        }
        assert!(WitnessPoint { x: g(&[1, 0]) }.separates_by_one(&s, &n));
    }

    #[test]
    fn entailment_examples() {
        let e = entails_basic(&[g(&[1, 0]), g(&[-1, 0])], &[]);
        assert!(e.holds);
        assert_eq!(farkas(&e.certificate).xi, ints(&[1, 1]));

        let (a, b) = ([g(&[2, 0])], [g(&[1, 0])]);
        let e = entails_basic(&a, &b);
        assert!(e.holds && e.verify(&a, &b));
        assert_eq!(farkas(&e.certificate).xi, ints(&[1]));
        assert_eq!(farkas(&e.certificate).eta, ints(&[2]));

        let (a, b) = ([g(&[1, 1]), g(&[1, -1])], [g(&[1, 0])]);
        let e = entails_basic(&a, &b);
        assert!(e.holds && e.verify(&a, &b));
        assert_eq!(farkas(&e.certificate).xi, ints(&[1, 1]));
        assert_eq!(farkas(&e.certificate).eta, ints(&[2]));

        let (a, b) = ([g(&[1, 0])], [g(&[0, 1])]);
        let e = entails_basic(&a, &b);
        assert!(!e.holds && e.verify(&a, &b));
        assert!(WitnessPoint { x: g(&[1, -1]) }.separates(&a, &b));
    }

    #[test]
    fn empty_antecedent_never_entails() {
        let e = entails_basic(&[], &[]);
        assert!(!e.holds);
        assert!(e.verify(&[], &[]));
    }

    #[test]
    fn empty_meet_examples() {
        let a = [g(&[1, 0]), g(&[-1, 0])];
        let e = is_empty_meet(&a).unwrap();
        assert!(e.holds);
        assert_eq!(farkas(&e.certificate).xi, ints(&[1, 1]));

        let a = [g(&[1, 0])];
        let e = is_empty_meet(&a).unwrap();
        assert!(!e.holds && e.verify(&a, &[]));

        let a = [g(&[1, 0]), g(&[0, 1]), g(&[-1, -1])];
        let e = is_empty_meet(&a).unwrap();
        assert!(e.holds);
        assert_eq!(farkas(&e.certificate).xi, ints(&[1, 1, 1]));

        assert!(is_empty_meet(&[]).is_err());
    }

    #[test]
    fn zero_vector_in_strict_set_is_infeasible() {
        let e = entails_basic(&[RationalVector::zero()], &[]);
        assert!(e.holds);
    }

    #[test]
    fn fm_mirrors_examples() {
        assert!(fm_oracle(&[], &[g(&[1])]).unwrap().is_feasible());
        assert!(!fm_oracle(&[g(&[1, 0]), g(&[-1, 0])], &[]).unwrap().is_feasible());
        match fm_oracle(&[g(&[1, 0])], &[g(&[0, 1])]).unwrap() {
            FmVerdict::Feasible(w) => assert!(w.separates(&[g(&[1, 0])], &[g(&[0, 1])])),
            FmVerdict::Infeasible => panic!(),
        }
        assert_eq!(fm_oracle(&[g(&[1, 1])], &[g(&[1, 0]), g(&[0, 1])]).unwrap(), FmVerdict::Infeasible);
    }

    #[test]
    fn fm_size_guard() {
        let big: Vec<RationalVector> = (0..7).map(|i| RationalVector::basis(Coordinate::Ext(i))).collect();
        assert!(matches!(fm_oracle(&big, &[]), Err(PolyError::OracleUnavailable(_))));
        let many: Vec<RationalVector> = (0..13).map(|i| g(&[i, 1])).collect();
        assert!(matches!(fm_oracle(&many, &[]), Err(PolyError::OracleUnavailable(_))));
    }

    #[test]
    fn fm_strictness_matters() {
        // x ≥ 0 and −x ≥ 0 force x = 0, which is fine for nonstrict rows
        // and fatal once either is strict.
        let x = g(&[1]);
        assert!(fm_oracle(&[], &[x.clone(), x.neg()]).unwrap().is_feasible());
        assert!(!fm_oracle(&[x.clone()], &[x.clone()]).unwrap().is_feasible());
    }

    #[test]
    fn integer_route_survives_overflow() {
        use rand::{Rng, SeedableRng};
        // Entries near 10^24 overflow i128 within a pivot or two, so the
        // big-integer tableau and its exact divisions carry the work.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let huge = BigInt::from(10u8).pow(24);
        let vector = |rng: &mut rand_chacha::ChaCha8Rng| {
            RationalVector::from_entries((0..4).map(|i| {
                let x = BigInt::from(rng.gen_range(-3i64..=3)) * &huge + rng.gen_range(-9i64..=9);
                (Coordinate::Ext(i), Scalar::from_integer(x))
            }))
        };
        let mut farkas_seen = 0;
        for round in 0..40 {
            let strict: Vec<RationalVector> = (0..1 + round % 2).map(|_| vector(&mut rng)).collect();
            let nonstrict: Vec<RationalVector> = (0..if round % 3 == 0 { 30 } else { 6 }).map(|_| vector(&mut rng)).collect();
            let si: Vec<IntRay> = strict.iter().map(RationalVector::int_ray).collect();
            let ni: Vec<IntRay> = nonstrict.iter().map(RationalVector::int_ray).collect();
            let int = feasible_mixed_int(&si.iter().collect::<Vec<_>>(), &ni.iter().collect::<Vec<_>>());
            let rat = feasible_mixed(&strict, &nonstrict);
            assert_eq!(int.is_farkas(), rat.is_farkas());
            assert!(int.verify(&strict, &nonstrict));
            farkas_seen += usize::from(int.is_farkas());
        }
        assert!(farkas_seen > 0 && farkas_seen < 40);
    }
}
