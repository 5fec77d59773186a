//! Scalars: exact rationals or outward-rounded `f64` intervals.
//!
//! Every real quantity in the engine is a [`Scalar`]. A run picks a
//! [`ScalarMode`]; exact mode never rounds, interval mode keeps a certified
//! enclosure of the true value. Mixed arithmetic promotes to interval.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SummaError};

pub type Rational = BigRational;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalarMode {
    #[default]
    Exact,
    Interval,
}

impl fmt::Display for ScalarMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarMode::Exact => f.write_str("exact"),
            ScalarMode::Interval => f.write_str("interval"),
        }
    }
}

impl FromStr for ScalarMode {
    type Err = SummaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(ScalarMode::Exact),
            "interval" => Ok(ScalarMode::Interval),
            other => Err(SummaError::Schema(format!("unknown scalar mode `{other}`"))),
        }
    }
}

pub fn rat(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

pub fn int(p: i64) -> Rational {
    Rational::from_integer(BigInt::from(p))
}

/// Parses `p`, `-p`, `p/q`. Whitespace around the parts is ignored.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || SummaError::Schema(format!("malformed rational `{s}`"));
    match s.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(SummaError::Schema(format!("zero denominator in `{s}`")));
            }
            Ok(Rational::new(p, q))
        }
        None => {
            let p: BigInt = s.parse().map_err(|_| bad())?;
            Ok(Rational::from_integer(p))
        }
    }
}

/// Canonical `p/q` string, or `p` for integers.
pub fn format_rational(q: &Rational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Simplest rational (smallest denominator, then smallest magnitude) in `[lo, hi]`.
pub fn simplest_rational(lo: &Rational, hi: &Rational) -> Rational {
    debug_assert!(lo <= hi);
    if !lo.is_positive() && !hi.is_negative() {
        return Rational::zero();
    }
    if hi.is_negative() {
        return -simplest_rational(&-hi, &-lo);
    }
    let ceil = lo.ceil();
    if &ceil <= hi {
        return ceil;
    }
    let fl = lo.floor();
    let inner = simplest_rational(&(hi - &fl).recip(), &(lo - &fl).recip());
    fl + inner.recip()
}

fn next_up(x: f64) -> f64 {
    x.next_up()
}

fn next_down(x: f64) -> f64 {
    x.next_down()
}

/// Closed interval with `f64` endpoints. Every operation rounds outward by
/// one ulp on each side, which dominates round-to-nearest error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn from_rational(q: &Rational) -> Self {
        let x = q.to_f64().expect("rational out of f64 range");
        match Rational::from_float(x) {
            Some(back) if &back == q => Interval::point(x),
            _ => Interval { lo: next_down(x), hi: next_up(x) },
        }
    }

    /// Enclosure of `sqrt(q)` for `q >= 0`.
    pub fn sqrt_of(q: &Rational) -> Self {
        let inner = Interval::from_rational(q);
        inner.sqrt()
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, q: &Rational) -> bool {
        let lo = Rational::from_float(self.lo).unwrap();
        let hi = Rational::from_float(self.hi).unwrap();
        &lo <= q && q <= &hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    fn widen(lo: f64, hi: f64) -> Self {
        Interval { lo: next_down(lo), hi: next_up(hi) }
    }

    pub fn sqrt(&self) -> Self {
        assert!(self.hi >= 0.0, "sqrt of a negative interval");
        let lo = if self.lo <= 0.0 { 0.0 } else { next_down(self.lo.sqrt()).max(0.0) };
        Interval { lo, hi: next_up(self.hi.sqrt()) }
    }

    pub fn abs(&self) -> Self {
        if self.lo >= 0.0 {
            *self
        } else if self.hi <= 0.0 {
            Interval { lo: -self.hi, hi: -self.lo }
        } else {
            Interval { lo: 0.0, hi: self.hi.max(-self.lo) }
        }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::widen(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::widen(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::widen(lo, hi)
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        assert!(rhs.lo > 0.0 || rhs.hi < 0.0, "interval division by a range containing zero");
        let p = [self.lo / rhs.lo, self.lo / rhs.hi, self.hi / rhs.lo, self.hi / rhs.hi];
        let lo = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = p.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        Interval::widen(lo, hi)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Interval(Interval),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(Rational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(Rational::one())
    }

    pub fn from_rational(q: Rational, mode: ScalarMode) -> Self {
        match mode {
            ScalarMode::Exact => Scalar::Exact(q),
            ScalarMode::Interval => Scalar::Interval(Interval::from_rational(&q)),
        }
    }

    pub fn ratio(p: i64, q: i64) -> Self {
        Scalar::Exact(rat(p, q))
    }

    pub fn integer(p: i64) -> Self {
        Scalar::Exact(int(p))
    }

    pub fn mode(&self) -> ScalarMode {
        match self {
            Scalar::Exact(_) => ScalarMode::Exact,
            Scalar::Interval(_) => ScalarMode::Interval,
        }
    }

    /// Re-expresses the scalar in `mode`. Interval to exact is not allowed.
    pub fn to_mode(&self, mode: ScalarMode) -> Scalar {
        match (self, mode) {
            (Scalar::Exact(q), ScalarMode::Interval) => Scalar::Interval(Interval::from_rational(q)),
            (Scalar::Interval(_), ScalarMode::Exact) => {
                panic!("cannot demote an interval scalar to exact mode")
            }
            _ => self.clone(),
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(q) => Some(q),
            Scalar::Interval(_) => None,
        }
    }

    fn as_interval(&self) -> Interval {
        match self {
            Scalar::Exact(q) => Interval::from_rational(q),
            Scalar::Interval(i) => *i,
        }
    }

    /// Certified lower endpoint as a rational.
    pub fn lower(&self) -> Rational {
        match self {
            Scalar::Exact(q) => q.clone(),
            Scalar::Interval(i) => Rational::from_float(i.lo).unwrap(),
        }
    }

    /// Certified upper endpoint as a rational.
    pub fn upper(&self) -> Rational {
        match self {
            Scalar::Exact(q) => q.clone(),
            Scalar::Interval(i) => Rational::from_float(i.hi).unwrap(),
        }
    }

    pub fn midpoint(&self) -> Rational {
        match self {
            Scalar::Exact(q) => q.clone(),
            Scalar::Interval(_) => (self.lower() + self.upper()) / int(2),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(q) => q.to_f64().unwrap_or(f64::NAN),
            Scalar::Interval(i) => 0.5 * (i.lo + i.hi),
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(q.abs()),
            Scalar::Interval(i) => Scalar::Interval(i.abs()),
        }
    }

    pub fn is_certified_zero(&self) -> bool {
        match self {
            Scalar::Exact(q) => q.is_zero(),
            Scalar::Interval(i) => i.lo == 0.0 && i.hi == 0.0,
        }
    }

    /// `Some(ordering)` when the order is certified, `None` when the
    /// enclosures overlap and the order cannot be decided.
    pub fn certified_cmp(&self, other: &Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a.cmp(b)),
            _ => {
                let (a, b) = (self.as_interval(), other.as_interval());
                if a.hi < b.lo {
                    Some(Ordering::Less)
                } else if a.lo > b.hi {
                    Some(Ordering::Greater)
                } else if a.lo == a.hi && b.lo == b.hi && a.lo == b.lo {
                    Some(Ordering::Equal)
                } else {
                    None
                }
            }
        }
    }

    /// Certified `self <= bound`; `None` when undecided.
    pub fn certified_le(&self, bound: &Rational) -> Option<bool> {
        if &self.upper() <= bound {
            Some(true)
        } else if &self.lower() > bound {
            Some(false)
        } else {
            None
        }
    }

    /// Enclosure of `max(self, other)`.
    pub fn max(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.max(b).clone()),
            _ => {
                let (a, b) = (self.as_interval(), other.as_interval());
                Scalar::Interval(Interval { lo: a.lo.max(b.lo), hi: a.hi.max(b.hi) })
            }
        }
    }

    /// Enclosure of `min(self, other)`.
    pub fn min(&self, other: &Scalar) -> Scalar {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.min(b).clone()),
            _ => {
                let (a, b) = (self.as_interval(), other.as_interval());
                Scalar::Interval(Interval { lo: a.lo.min(b.lo), hi: a.hi.min(b.hi) })
            }
        }
    }

    pub fn div_usize(&self, n: usize) -> Scalar {
        self / &Scalar::Exact(Rational::from_integer(BigInt::from(n)))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(q) => f.write_str(&format_rational(q)),
            Scalar::Interval(i) => write!(f, "[{:e}, {:e}]", i.lo, i.hi),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl From<Rational> for Scalar {
    fn from(q: Rational) -> Self {
        Scalar::Exact(q)
    }
}

impl From<i64> for Scalar {
    fn from(p: i64) -> Self {
        Scalar::integer(p)
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident, $exact:expr) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact($exact(a, b)),
                    _ => Scalar::Interval($trait::$method(self.as_interval(), rhs.as_interval())),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                $trait::$method(&self, &rhs)
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                $trait::$method(&self, rhs)
            }
        }
    };
}

scalar_binop!(Add, add, |a: &Rational, b: &Rational| a + b);
scalar_binop!(Sub, sub, |a: &Rational, b: &Rational| a - b);
scalar_binop!(Mul, mul, |a: &Rational, b: &Rational| a * b);
scalar_binop!(Div, div, |a: &Rational, b: &Rational| {
    assert!(!b.is_zero(), "division by zero");
    a / b
});

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(q) => Scalar::Exact(-q),
            Scalar::Interval(i) => Scalar::Interval(-*i),
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

/// Certified rational enclosure `[lo, hi]` of a real value; used for
/// horizon samples that carry truncation error or interval width.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Enclosure {
    pub lo: Rational,
    pub hi: Rational,
}

impl Enclosure {
    pub fn point(q: Rational) -> Self {
        Enclosure { lo: q.clone(), hi: q }
    }

    pub fn of(s: &Scalar) -> Self {
        Enclosure { lo: s.lower(), hi: s.upper() }
    }

    /// Enclosure of `s ± err`.
    pub fn with_error(s: &Scalar, err: &Rational) -> Self {
        Enclosure { lo: s.lower() - err, hi: s.upper() + err }
    }

    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / int(2)
    }

    /// Enclosure of `|self - eta|`.
    pub fn distance_to(&self, eta: &Rational) -> Enclosure {
        let a = &self.lo - eta;
        let b = &self.hi - eta;
        let hi = a.abs().max(b.abs());
        let lo = if !a.is_positive() && !b.is_negative() {
            Rational::zero()
        } else {
            a.abs().min(b.abs())
        };
        Enclosure { lo, hi }
    }

    pub fn add(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: &self.lo + &other.lo, hi: &self.hi + &other.hi }
    }

    pub fn max(&self, other: &Enclosure) -> Enclosure {
        Enclosure { lo: self.lo.clone().max(other.lo.clone()), hi: self.hi.clone().max(other.hi.clone()) }
    }

    pub fn zero() -> Enclosure {
        Enclosure::point(Rational::zero())
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }
}

/// Serde helpers writing rationals as `"p/q"` strings.
pub mod ser {
    use super::{format_rational, Enclosure, Rational};
    use serde::Serializer;

    pub fn rational<S: Serializer>(q: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn opt_rational<S: Serializer>(q: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match q {
            Some(q) => s.serialize_str(&format_rational(q)),
            None => s.serialize_none(),
        }
    }

    pub fn rationals<S: Serializer>(v: &[Rational], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(format_rational))
    }

    pub fn enclosure<S: Serializer>(e: &Enclosure, s: S) -> std::result::Result<S::Ok, S::Error> {
        if e.is_point() {
            s.serialize_str(&format_rational(&e.lo))
        } else {
            s.serialize_str(&format!("[{}, {}]", format_rational(&e.lo), format_rational(&e.hi)))
        }
    }
}

/// Exact `base^exp` for rationals.
pub fn pow(base: &Rational, exp: usize) -> Rational {
    let mut acc = Rational::one();
    for _ in 0..exp {
        acc *= base;
    }
    acc
}

pub fn lcm(a: usize, b: usize) -> usize {
    a.lcm(&b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_and_formats() {
        assert_eq!(parse_rational("3/6").unwrap(), rat(1, 2));
        assert_eq!(parse_rational(" -4 ").unwrap(), int(-4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("x").is_err());
        assert_eq!(format_rational(&rat(-2, 4)), "-1/2");
        assert_eq!(format_rational(&int(7)), "7");
    }

    #[test]
    fn simplest_rational_cases() {
        assert_eq!(simplest_rational(&rat(-1, 3), &rat(1, 5)), int(0));
        assert_eq!(simplest_rational(&rat(2, 5), &rat(3, 5)), rat(1, 2));
        assert_eq!(simplest_rational(&rat(3, 10), &rat(7, 20)), rat(1, 3));
        assert_eq!(simplest_rational(&rat(5, 12), &rat(5, 12)), rat(5, 12));
        assert_eq!(simplest_rational(&rat(-3, 5), &rat(-2, 5)), rat(-1, 2));
        assert_eq!(simplest_rational(&rat(29, 10), &rat(31, 10)), int(3));
    }

    #[test]
    fn interval_encloses_thirds() {
        let third = Interval::from_rational(&rat(1, 3));
        assert!(third.contains(&rat(1, 3)));
        assert!(third.width() > 0.0);
        let half = Interval::from_rational(&rat(1, 2));
        assert_eq!(half.width(), 0.0);
        let s = Interval::sqrt_of(&int(2));
        assert!(s.lo() * s.lo() <= 2.0 && s.hi() * s.hi() >= 2.0);
    }

    #[test]
    fn mixed_promotes_to_interval() {
        let a = Scalar::ratio(1, 3);
        let b = Scalar::from_rational(rat(1, 3), ScalarMode::Interval);
        let c = &a + &b;
        assert_eq!(c.mode(), ScalarMode::Interval);
        assert!(c.certified_cmp(&Scalar::ratio(2, 3)).is_none());
        assert_eq!(c.certified_le(&rat(1, 1)), Some(true));
    }

    fn small_rat() -> impl Strategy<Value = Rational> {
        (-50i64..50, 1i64..20).prop_map(|(p, q)| rat(p, q))
    }

    proptest! {
        #[test]
        fn interval_ops_enclose_exact(a in small_rat(), b in small_rat()) {
            let (ia, ib) = (Interval::from_rational(&a), Interval::from_rational(&b));
            prop_assert!((ia + ib).contains(&(&a + &b)));
            prop_assert!((ia - ib).contains(&(&a - &b)));
            prop_assert!((ia * ib).contains(&(&a * &b)));
            prop_assert!(ia.abs().contains(&a.abs()));
            if !b.is_zero() {
                prop_assert!((ia / ib).contains(&(&a / &b)));
            }
        }

        #[test]
        fn narrowing_never_flips_certified_order(a in small_rat(), b in small_rat(), w in 1u32..40) {
            // a wide enclosure of `a` against the tight one
            let tight = Interval::from_rational(&a);
            let slack = 2f64.powi(-(w as i32));
            let wide = Interval::new(tight.lo() - slack, tight.hi() + slack);
            let other = Scalar::from_rational(b.clone(), ScalarMode::Interval);
            let wide_cmp = Scalar::Interval(wide).certified_cmp(&other);
            let tight_cmp = Scalar::Interval(tight).certified_cmp(&other);
            if let Some(ord) = wide_cmp {
                prop_assert_eq!(tight_cmp, Some(ord));
            }
        }

        #[test]
        fn simplest_lies_in_range(a in small_rat(), b in small_rat()) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let s = simplest_rational(&lo, &hi);
            prop_assert!(lo <= s && s <= hi);
            // no rational with smaller denominator in range (brute force)
            for q in 1..s.denom().to_i64().unwrap() {
                let qq = int(q);
                let first = (&lo * &qq).ceil();
                prop_assert!(first > &hi * &qq, "denominator {} also fits", q);
            }
        }
    }
}
