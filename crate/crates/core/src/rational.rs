//! Exact rational scalars and sparse vectors over named coordinates.
//!
//! A [`RationalVector`] is a finitely supported map from [`Coordinate`] to
//! [`Scalar`]. Zero entries are never stored, so structural equality is
//! vector equality. The same type is used for linear functionals and for
//! points; [`RationalVector::pairing`] is the standard bilinear form.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};

use crate::error::ParseError;

/// Exact rational number in canonical reduced form.
pub type Scalar = BigRational;

/// Builds the scalar `num/den`. Panics if `den == 0`.
pub fn ratio(num: i64, den: i64) -> Scalar {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// Builds the integer scalar `n`.
pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

/// Renders a scalar as `"p/q"`, or `"p"` when the denominator is one.
pub fn format_scalar(s: &Scalar) -> String {
    if s.denom().is_one() {
        s.numer().to_string()
    } else {
        format!("{}/{}", s.numer(), s.denom())
    }
}

/// Parses `"p/q"` or `"p"` into a reduced scalar.
pub fn parse_scalar(s: &str) -> Result<Scalar, ParseError> {
    let t = s.trim();
    let bad = || ParseError::Scalar(s.to_string());
    match t.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if d.is_zero() {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(t).map_err(|_| bad())?)),
    }
}

/// Height of a rational: `max(|p|, q)` for `p/q` in lowest terms.
pub fn scalar_height(s: &Scalar) -> BigInt {
    let n = s.numer().abs();
    let d = s.denom().clone();
    if n > d {
        n
    } else {
        d
    }
}

/// Index of a basis vector.
///
/// The derived order is the global coordinate order: every `Ground`
/// coordinate precedes the distinguished coordinate `o`, which precedes
/// every `Ext` coordinate. Ground names compare lexicographically and
/// extension coordinates by index.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coordinate {
    Ground(String),
    Distinguished,
    Ext(u32),
}

impl Coordinate {
    pub fn ground(name: &str) -> Self {
        Coordinate::Ground(name.to_string())
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coordinate::Ground(name) => f.write_str(name),
            Coordinate::Distinguished => f.write_str("o"),
            Coordinate::Ext(i) => write!(f, "#{i}"),
        }
    }
}

impl FromStr for Coordinate {
    type Err = ParseError;

    /// `"o"` is the distinguished coordinate, `"#n"` is extension
    /// coordinate `n`, anything else non-empty is a ground coordinate.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "o" {
            return Ok(Coordinate::Distinguished);
        }
        if let Some(idx) = s.strip_prefix('#') {
            return idx
                .parse::<u32>()
                .map(Coordinate::Ext)
                .map_err(|_| ParseError::Coordinate(s.to_string()));
        }
        if s.is_empty() {
            return Err(ParseError::Coordinate(s.to_string()));
        }
        Ok(Coordinate::Ground(s.to_string()))
    }
}

/// Finitely supported rational vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RationalVector {
    entries: BTreeMap<Coordinate, Scalar>,
}

impl PartialOrd for RationalVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RationalVector {
    /// Lexicographic over the union of supports in coordinate order,
    /// reading missing entries as zero.
    fn cmp(&self, other: &Self) -> Ordering {
        let mut a = self.entries.iter().peekable();
        let mut b = other.entries.iter().peekable();
        let zero = Scalar::zero();
        loop {
            match (a.peek(), b.peek()) {
                (None, None) => return Ordering::Equal,
                (Some((_, va)), None) => return (*va).cmp(&zero),
                (None, Some((_, vb))) => return zero.cmp(vb),
                (Some((ka, va)), Some((kb, vb))) => {
                    let ord = match ka.cmp(kb) {
                        Ordering::Less => {
                            let o = (*va).cmp(&zero);
                            a.next();
                            o
                        }
                        Ordering::Greater => {
                            let o = zero.cmp(vb);
                            b.next();
                            o
                        }
                        Ordering::Equal => {
                            let o = (*va).cmp(vb);
                            a.next();
                            b.next();
                            o
                        }
                    };
                    if ord != Ordering::Equal {
                        return ord;
                    }
                }
            }
        }
    }
}

impl RationalVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Builds a vector from `(coordinate, value)` pairs; repeated coordinates
    /// are summed and zero results dropped.
    pub fn from_entries<I>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (Coordinate, Scalar)>,
    {
        let mut v = Self::zero();
        for (c, x) in pairs {
            v.add_at(c, x);
        }
        v
    }

    /// Integer vector over ground coordinates `x0, x1, …`.
    pub fn ground_ints(values: &[i64]) -> Self {
        Self::from_entries(
            values
                .iter()
                .enumerate()
                .map(|(i, &x)| (Coordinate::Ground(format!("x{i}")), int(x))),
        )
    }

    /// The basis vector at `c`.
    pub fn basis(c: Coordinate) -> Self {
        Self::from_entries([(c, Scalar::one())])
    }

    fn add_at(&mut self, c: Coordinate, x: Scalar) {
        if x.is_zero() {
            return;
        }
        let remove = match self.entries.get_mut(&c) {
            Some(cur) => {
                *cur += x;
                cur.is_zero()
            }
            None => {
                self.entries.insert(c.clone(), x);
                false
            }
        };
        if remove {
            self.entries.remove(&c);
        }
    }

    pub fn get(&self, c: &Coordinate) -> Scalar {
        self.entries.get(c).cloned().unwrap_or_else(Scalar::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Coordinate, &Scalar)> {
        self.entries.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &Coordinate> {
        self.entries.keys()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Greatest coordinate in the support.
    pub fn top(&self) -> Option<&Coordinate> {
        self.entries.keys().next_back()
    }

    /// True when every supported coordinate is strictly below `o`.
    pub fn is_below(&self, o: &Coordinate) -> bool {
        self.top().map_or(true, |t| t < o)
    }

    /// True when the support only uses ground coordinates.
    pub fn is_ground(&self) -> bool {
        self.entries.keys().all(|c| matches!(c, Coordinate::Ground(_)))
    }

    /// `(a | x) = Σ a_i x_i` over the shared support.
    pub fn pairing(&self, x: &RationalVector) -> Scalar {
        let (small, large) = if self.len() <= x.len() { (self, x) } else { (x, self) };
        let mut acc = Scalar::zero();
        for (c, v) in &small.entries {
            if let Some(w) = large.entries.get(c) {
                acc += v * w;
            }
        }
        acc
    }

    pub fn add(&self, other: &RationalVector) -> RationalVector {
        let mut out = self.clone();
        for (c, x) in &other.entries {
            out.add_at(c.clone(), x.clone());
        }
        out
    }

    pub fn sub(&self, other: &RationalVector) -> RationalVector {
        let mut out = self.clone();
        for (c, x) in &other.entries {
            out.add_at(c.clone(), -x);
        }
        out
    }

    pub fn scale(&self, k: &Scalar) -> RationalVector {
        if k.is_zero() {
            return Self::zero();
        }
        RationalVector {
            entries: self.entries.iter().map(|(c, x)| (c.clone(), x * k)).collect(),
        }
    }

    pub fn neg(&self) -> RationalVector {
        RationalVector {
            entries: self.entries.iter().map(|(c, x)| (c.clone(), -x)).collect(),
        }
    }

    /// `self + k·other`.
    pub fn add_scaled(&self, k: &Scalar, other: &RationalVector) -> RationalVector {
        let mut out = self.clone();
        for (c, x) in &other.entries {
            out.add_at(c.clone(), k * x);
        }
        out
    }

    /// Scales by `|a_o|⁻¹` so the `o`-entry becomes ±1; identity when `a_o = 0`.
    pub fn normalize(&self, o: &Coordinate) -> RationalVector {
        let ao = self.get(o);
        if ao.is_zero() {
            return self.clone();
        }
        self.scale(&ao.abs().recip())
    }

    /// True when the `o`-entry lies in {−1, 0, 1}.
    pub fn is_normalized(&self, o: &Coordinate) -> bool {
        let ao = self.get(o);
        ao.is_zero() || ao.abs().is_one()
    }

    /// `x − x_o·u_o⁻¹·u`: the representative of `x + ℚu` with zero `o`-entry.
    pub fn reduce_by(&self, u: &RationalVector, o: &Coordinate) -> Result<RationalVector, ReduceError> {
        let uo = u.get(o);
        if uo.is_zero() {
            return Err(ReduceError);
        }
        let xo = self.get(o);
        if xo.is_zero() {
            return Ok(self.clone());
        }
        Ok(self.add_scaled(&-(xo / uo), u))
    }

    /// Canonical representative of the open ray through `self`: scaled so
    /// the top entry is ±1. Positive multiples share a representative, and
    /// since `⟦λx⟧ = ⟦x⟧` for `λ > 0` this keys half-spaces.
    pub fn ray(&self) -> RationalVector {
        match self.top() {
            Some(t) => {
                let t = t.clone();
                self.normalize(&t)
            }
            None => Self::zero(),
        }
    }

    /// Largest height of any entry (0 for the zero vector).
    pub fn height(&self) -> BigInt {
        self.entries.values().map(scalar_height).max().unwrap_or_else(BigInt::zero)
    }

    /// Smallest positive integer multiple with integer entries.
    pub fn clear_denominators(&self) -> RationalVector {
        let l = self
            .entries
            .values()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        self.scale(&BigRational::from_integer(l))
    }
}

/// A vector rescaled by a positive factor to coprime integers.
///
/// `entries = scale · v` for the vector `v` it came from, so both define
/// the same open half-space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntRay {
    pub entries: Vec<(Coordinate, BigInt)>,
    pub scale: Scalar,
}

impl RationalVector {
    pub fn int_ray(&self) -> IntRay {
        let l = self.entries.values().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<BigInt> = self.entries.values().map(|x| x.numer() * (&l / x.denom())).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
        let g = if g.is_zero() { BigInt::one() } else { g };
        let entries = self.entries.keys().cloned().zip(ints.into_iter().map(|x| x / &g)).collect();
        IntRay { entries, scale: Scalar::new(l, g) }
    }
}

/// `reduce_by` was asked to reduce along a vector with zero `o`-entry.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid reduction: reducing vector has zero o-component")]
pub struct ReduceError;

impl fmt::Display for RationalVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, (c, x)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}: {}", format_scalar(x))?;
        }
        f.write_str(")")
    }
}

impl Serialize for RationalVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.entries.len()))?;
        for (c, x) in &self.entries {
            map.serialize_entry(&c.to_string(), &format_scalar(x))?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for RationalVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct VecVisitor;
        impl<'de> Visitor<'de> for VecVisitor {
            type Value = RationalVector;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object mapping coordinate names to rational strings")
            }
            fn visit_map<M: MapAccess<'de>>(self, mut access: M) -> Result<Self::Value, M::Error> {
                let mut v = RationalVector::zero();
                while let Some((k, x)) = access.next_entry::<String, serde_json::Value>()? {
                    let c = Coordinate::from_str(&k).map_err(de::Error::custom)?;
                    let s = match x {
                        serde_json::Value::String(s) => s,
                        serde_json::Value::Number(n) if n.is_i64() => n.to_string(),
                        other => {
                            return Err(de::Error::custom(format!(
                                "coordinate {k}: expected rational string, got {other}"
                            )))
                        }
                    };
                    let x = parse_scalar(&s).map_err(de::Error::custom)?;
                    v.add_at(c, x);
                }
                Ok(v)
            }
        }
        deserializer.deserialize_map(VecVisitor)
    }
}

/// Serde adapter for a single scalar written as `"p/q"`.
pub mod serde_scalar {
    use super::{format_scalar, parse_scalar, Scalar};
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Scalar, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_scalar(x))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Scalar, D::Error> {
        let s = String::deserialize(d)?;
        parse_scalar(&s).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter for a list of scalars written as strings.
pub mod serde_scalar_vec {
    use super::{format_scalar, parse_scalar, Scalar};
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(xs: &[Scalar], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(xs.len()))?;
        for x in xs {
            seq.serialize_element(&format_scalar(x))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Scalar>, D::Error> {
        let v = Vec::<String>::deserialize(d)?;
        v.iter()
            .map(|s| parse_scalar(s).map_err(serde::de::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(vals: &[i64]) -> RationalVector {
        RationalVector::ground_ints(vals)
    }

    fn with_o(ground: &[i64], o: Scalar) -> RationalVector {
        g(ground).add(&RationalVector::basis(Coordinate::Distinguished).scale(&o))
    }

    #[test]
    fn pairing_examples() {
        assert_eq!(g(&[1, 0]).pairing(&g(&[1, 0])), int(1));
        assert_eq!(g(&[0]).pairing(&g(&[7, -3])), int(0));
        assert_eq!(g(&[2, -3]).pairing(&g(&[1, 1])), int(-1));
    }

    #[test]
    fn zero_entries_are_not_stored() {
        let v = g(&[0, 2, 0]);
        assert_eq!(v.len(), 1);
        assert_eq!(v.sub(&v), RationalVector::zero());
        assert_eq!(g(&[1, 0]), g(&[1]));
    }

    #[test]
    fn normalize_examples() {
        let o = Coordinate::Distinguished;
        let a = g(&[4, 5]);
        assert_eq!(a.normalize(&o), a);
        let a = with_o(&[2], int(-3));
        let n = a.normalize(&o);
        assert_eq!(n, with_o(&[0], int(-1)).add(&RationalVector::from_entries([(Coordinate::ground("x0"), ratio(2, 3))])));
        assert_eq!(n.get(&o), int(-1));
        let a = with_o(&[5], int(1));
        assert_eq!(a.normalize(&o), a);
    }

    #[test]
    fn reduce_by_examples() {
        let o = Coordinate::Distinguished;
        let x = g(&[1, 2]);
        let u = with_o(&[0, 1], int(1));
        assert_eq!(x.reduce_by(&u, &o).unwrap(), x);
        let x = with_o(&[1, 2], int(2));
        assert_eq!(x.reduce_by(&u, &o).unwrap(), g(&[1, 0]));
        assert_eq!(x.reduce_by(&g(&[1]), &o), Err(ReduceError));
    }

    #[test]
    fn coordinate_order() {
        let mut cs = vec![Coordinate::Ext(0), Coordinate::Distinguished, Coordinate::ground("b"), Coordinate::ground("a")];
        cs.sort();
        assert_eq!(cs, vec![Coordinate::ground("a"), Coordinate::ground("b"), Coordinate::Distinguished, Coordinate::Ext(0)]);
        for c in cs {
            assert_eq!(c.to_string().parse::<Coordinate>().unwrap(), c);
        }
    }

    #[test]
    fn scalar_strings() {
        assert_eq!(format_scalar(&ratio(6, -4)), "-3/2");
        assert_eq!(format_scalar(&int(7)), "7");
        assert_eq!(parse_scalar(" -3/2 ").unwrap(), ratio(-3, 2));
        assert!(parse_scalar("1/0").is_err());
        assert!(parse_scalar("x").is_err());
    }

    #[test]
    fn json_shape() {
        let v = with_o(&[2], ratio(-1, 3)).add(&RationalVector::basis(Coordinate::Ext(4)));
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, r##"{"x0":"2","o":"-1/3","#4":"1"}"##);
        let back: RationalVector = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
        let z: RationalVector = serde_json::from_str(r#"{"x0":"0","x1":3}"#).unwrap();
        assert_eq!(z, g(&[0, 3]));
    }

    #[test]
    fn ray_is_shared_by_positive_multiples() {
        let v = g(&[3, -6]);
        assert_eq!(v.ray(), v.scale(&int(5)).ray());
        assert_ne!(v.ray(), v.neg().ray());
        assert_eq!(v.ray().get(&Coordinate::ground("x1")), int(-1));
    }
}
