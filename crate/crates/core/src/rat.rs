//! Exact rational numbers.
//!
//! `Rat` keeps values that fit in a pair of `i64`s inline and only falls back
//! to a heap-allocated [`BigRational`] when an intermediate result overflows.
//! The representation is canonical (lowest terms, positive denominator, and
//! demoted to the inline form whenever possible), so structural equality is
//! value equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Clone)]
enum Repr {
    /// numerator, denominator (> 0), coprime
    Small(i64, i64),
    Big(Box<BigRational>),
}

/// An exact rational number.
#[derive(Clone)]
pub struct Rat(Repr);

fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Rat {
    pub fn zero() -> Rat {
        Rat(Repr::Small(0, 1))
    }

    pub fn one() -> Rat {
        Rat(Repr::Small(1, 1))
    }

    pub fn from_int(n: i64) -> Rat {
        Rat(Repr::Small(n, 1))
    }

    /// `num / den`; panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Rat {
        assert!(den != 0, "zero denominator");
        Rat::from_i128(num as i128, den as i128)
    }

    pub fn half() -> Rat {
        Rat(Repr::Small(1, 2))
    }

    fn from_i128(num: i128, den: i128) -> Rat {
        debug_assert!(den != 0);
        let (mut n, mut d) = (num, den);
        if d < 0 {
            // i128::MIN cannot occur: inputs come from i64 products.
            n = -n;
            d = -d;
        }
        if n == 0 {
            return Rat::zero();
        }
        let g = gcd_u128(n.unsigned_abs(), d as u128) as i128;
        n /= g;
        d /= g;
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Rat(Repr::Small(n, d)),
            _ => Rat(Repr::Big(Box::new(BigRational::new_raw(
                BigInt::from(n),
                BigInt::from(d),
            )))),
        }
    }

    fn from_big(r: BigRational) -> Rat {
        // BigRational arithmetic already reduces.
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            Rat(Repr::Small(n, d))
        } else {
            Rat(Repr::Big(Box::new(r)))
        }
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small(n, d) => BigRational::new_raw(BigInt::from(*n), BigInt::from(*d)),
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small(n, _) => BigInt::from(*n),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small(_, d) => BigInt::from(*d),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small(0, _))
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small(1, 1))
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small(_, d) => *d == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn signum(&self) -> Ordering {
        match &self.0 {
            Repr::Small(n, _) => n.cmp(&0),
            Repr::Big(b) => {
                if b.is_positive() {
                    Ordering::Greater
                } else if b.is_negative() {
                    Ordering::Less
                } else {
                    Ordering::Equal
                }
            }
        }
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn is_negative(&self) -> bool {
        self.signum() == Ordering::Less
    }

    pub fn abs(&self) -> Rat {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    /// Multiplicative inverse; panics on zero.
    pub fn recip(&self) -> Rat {
        match &self.0 {
            Repr::Small(n, d) => {
                assert!(*n != 0, "reciprocal of zero");
                Rat::from_i128(*d as i128, *n as i128)
            }
            Repr::Big(b) => Rat::from_big(b.recip()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small(n, d) => *n as f64 / *d as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    pub fn min(self, other: Rat) -> Rat {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rat) -> Rat {
        if other > self {
            other
        } else {
            self
        }
    }

    fn add_ref(&self, rhs: &Rat) -> Rat {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            if b == d {
                return Rat::from_i128(a + c, b);
            }
            return Rat::from_i128(a * d + c * b, b * d);
        }
        Rat::from_big(self.to_big() + rhs.to_big())
    }

    fn sub_ref(&self, rhs: &Rat) -> Rat {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            if b == d {
                return Rat::from_i128(a - c, b);
            }
            return Rat::from_i128(a * d - c * b, b * d);
        }
        Rat::from_big(self.to_big() - rhs.to_big())
    }

    fn mul_ref(&self, rhs: &Rat) -> Rat {
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            return Rat::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128);
        }
        if self.is_zero() || rhs.is_zero() {
            return Rat::zero();
        }
        Rat::from_big(self.to_big() * rhs.to_big())
    }

    fn div_ref(&self, rhs: &Rat) -> Rat {
        assert!(!rhs.is_zero(), "division by zero");
        if let (Repr::Small(a, b), Repr::Small(c, d)) = (&self.0, &rhs.0) {
            return Rat::from_i128(*a as i128 * *d as i128, *b as i128 * *c as i128);
        }
        Rat::from_big(self.to_big() / rhs.to_big())
    }

    /// Parses `"p/q"`, an integer, or a finite decimal such as `"-1.25"`.
    pub fn parse(s: &str) -> Result<Rat, ParseRatError> {
        let t = s.trim();
        let err = || ParseRatError(s.to_string());
        if t.is_empty() {
            return Err(err());
        }
        if let Some((p, q)) = t.split_once('/') {
            let p: BigInt = p.trim().parse().map_err(|_| err())?;
            let q: BigInt = q.trim().parse().map_err(|_| err())?;
            if q.is_zero() {
                return Err(err());
            }
            return Ok(Rat::from_big(BigRational::new(p, q)));
        }
        if let Some((int, frac)) = t.split_once('.') {
            let neg = int.starts_with('-');
            let digits_ok = |x: &str| x.chars().all(|c| c.is_ascii_digit());
            let int_body = int.trim_start_matches(['-', '+']);
            if !digits_ok(int_body) || !digits_ok(frac) || (int_body.is_empty() && frac.is_empty())
            {
                return Err(err());
            }
            let joined = format!("{}{}", int_body, frac);
            let mut n: BigInt = if joined.is_empty() {
                BigInt::zero()
            } else {
                joined.parse().map_err(|_| err())?
            };
            if neg {
                n = -n;
            }
            let d = num_traits::pow(BigInt::from(10), frac.len());
            return Ok(Rat::from_big(BigRational::new(n, d)));
        }
        let n: BigInt = t.parse().map_err(|_| err())?;
        Ok(Rat::from_big(BigRational::from_integer(n)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRatError(pub String);

impl FromStr for Rat {
    type Err = ParseRatError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rat::parse(s)
    }
}

impl Default for Rat {
    fn default() -> Self {
        Rat::zero()
    }
}

impl From<i64> for Rat {
    fn from(n: i64) -> Self {
        Rat::from_int(n)
    }
}

impl From<BigRational> for Rat {
    fn from(r: BigRational) -> Self {
        Rat::from_big(r)
    }
}

impl PartialEq for Rat {
    fn eq(&self, other: &Rat) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rat {}

impl Hash for Rat {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small(n, d) => {
                0u8.hash(state);
                n.hash(state);
                d.hash(state);
            }
            Repr::Big(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl Ord for Rat {
    fn cmp(&self, other: &Rat) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small(a, b), Repr::Small(c, d)) => {
                (*a as i128 * *d as i128).cmp(&(*c as i128 * *b as i128))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rat {
    fn partial_cmp(&self, other: &Rat) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small(n, 1) => write!(f, "{}", n),
            Repr::Small(n, d) => write!(f, "{}/{}", n, d),
            Repr::Big(b) => {
                if b.denom().is_one() {
                    write!(f, "{}", b.numer())
                } else {
                    write!(f, "{}/{}", b.numer(), b.denom())
                }
            }
        }
    }
}

impl fmt::Debug for Rat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $imp:ident) => {
        impl $tr<&Rat> for &Rat {
            type Output = Rat;
            fn $m(self, rhs: &Rat) -> Rat {
                self.$imp(rhs)
            }
        }
        impl $tr<Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                self.$imp(&rhs)
            }
        }
        impl $tr<&Rat> for Rat {
            type Output = Rat;
            fn $m(self, rhs: &Rat) -> Rat {
                self.$imp(rhs)
            }
        }
        impl $tr<Rat> for &Rat {
            type Output = Rat;
            fn $m(self, rhs: Rat) -> Rat {
                self.$imp(&rhs)
            }
        }
    };
}

binop!(Add, add, add_ref);
binop!(Sub, sub, sub_ref);
binop!(Mul, mul, mul_ref);
binop!(Div, div, div_ref);

impl AddAssign<&Rat> for Rat {
    fn add_assign(&mut self, rhs: &Rat) {
        *self = self.add_ref(rhs);
    }
}

impl AddAssign<Rat> for Rat {
    fn add_assign(&mut self, rhs: Rat) {
        *self = self.add_ref(&rhs);
    }
}

impl SubAssign<&Rat> for Rat {
    fn sub_assign(&mut self, rhs: &Rat) {
        *self = self.sub_ref(rhs);
    }
}

impl SubAssign<Rat> for Rat {
    fn sub_assign(&mut self, rhs: Rat) {
        *self = self.sub_ref(&rhs);
    }
}

impl MulAssign<&Rat> for Rat {
    fn mul_assign(&mut self, rhs: &Rat) {
        *self = self.mul_ref(rhs);
    }
}

impl Neg for &Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        match &self.0 {
            Repr::Small(n, d) => Rat::from_i128(-(*n as i128), *d as i128),
            Repr::Big(b) => Rat::from_big(-(**b).clone()),
        }
    }
}

impl Neg for Rat {
    type Output = Rat;
    fn neg(self) -> Rat {
        -&self
    }
}

impl Sum for Rat {
    fn sum<I: Iterator<Item = Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rat> for Rat {
    fn sum<I: Iterator<Item = &'a Rat>>(iter: I) -> Rat {
        iter.fold(Rat::zero(), |acc, x| acc + x)
    }
}

impl Serialize for Rat {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Rat {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        struct RatVisitor;
        impl Visitor<'_> for RatVisitor {
            type Value = Rat;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a rational as \"p/q\", a decimal string, or an integer")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Rat, E> {
                Rat::parse(v).map_err(E::custom)
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Rat, E> {
                Ok(Rat::from_int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Rat, E> {
                Ok(Rat::from_big(BigRational::from_integer(BigInt::from(v))))
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Rat, E> {
                Err(E::custom(format!(
                    "non-integer number {} is not exact; write it as a string",
                    v
                )))
            }
        }
        d.deserialize_any(RatVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn parses_all_literal_forms() {
        assert_eq!(Rat::parse("3/6").unwrap(), Rat::new(1, 2));
        assert_eq!(Rat::parse("-1.25").unwrap(), Rat::new(-5, 4));
        assert_eq!(Rat::parse(".5").unwrap(), Rat::new(1, 2));
        assert_eq!(Rat::parse("7").unwrap(), Rat::from_int(7));
        assert_eq!(Rat::parse("2/-4").unwrap(), Rat::new(-1, 2));
        assert!(Rat::parse("1/0").is_err());
        assert!(Rat::parse("abc").is_err());
        assert!(Rat::parse("1.2.3").is_err());
        assert!(Rat::parse("").is_err());
    }

    #[test]
    fn overflow_promotes_and_demotes() {
        let m = Rat::from_int(i64::MAX);
        let p = &m * &m;
        assert!(matches!(p.0, Repr::Big(_)));
        let back = &p / &m;
        assert_eq!(back, m);
        assert!(matches!(back.0, Repr::Small(..)));
        let tiny = Rat::new(1, i64::MAX);
        let s = &tiny + &Rat::new(1, i64::MAX - 1);
        assert_eq!(s.to_big(), big(1, i64::MAX) + big(1, i64::MAX - 1));
    }

    #[test]
    fn display_is_lowest_terms() {
        assert_eq!(Rat::new(4, -6).to_string(), "-2/3");
        assert_eq!(Rat::new(4, 2).to_string(), "2");
        assert_eq!(Rat::zero().to_string(), "0");
    }

    #[test]
    fn serde_accepts_strings_and_integers() {
        let v: Vec<Rat> = serde_json::from_str(r#"["1/3", 4, "0.75"]"#).unwrap();
        assert_eq!(v, vec![Rat::new(1, 3), Rat::from_int(4), Rat::new(3, 4)]);
        assert!(serde_json::from_str::<Rat>("0.5").is_err());
        assert_eq!(serde_json::to_string(&Rat::new(-7, 2)).unwrap(), "\"-7/2\"");
    }

    fn arb_rat() -> impl Strategy<Value = (i64, i64)> {
        (any::<i64>(), any::<i64>().prop_filter("nonzero", |d| *d != 0 && *d != i64::MIN))
    }

    proptest! {
        #[test]
        fn arithmetic_matches_bigrational((a, b) in arb_rat(), (c, d) in arb_rat()) {
            let x = Rat::new(a, b);
            let y = Rat::new(c, d);
            let (bx, by) = (big(a, b), big(c, d));
            prop_assert_eq!((&x + &y).to_big(), &bx + &by);
            prop_assert_eq!((&x - &y).to_big(), &bx - &by);
            prop_assert_eq!((&x * &y).to_big(), &bx * &by);
            if !y.is_zero() {
                prop_assert_eq!((&x / &y).to_big(), &bx / &by);
            }
            prop_assert_eq!(x.cmp(&y), bx.cmp(&by));
            prop_assert_eq!(x == y, bx == by);
        }

        #[test]
        fn text_round_trip((a, b) in arb_rat(), (c, d) in arb_rat()) {
            let x = Rat::new(a, b) * Rat::new(c, d);
            prop_assert_eq!(Rat::parse(&x.to_string()).unwrap(), x);
        }
    }
}
