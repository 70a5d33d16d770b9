//! Exact ground fields: arbitrary-precision rationals and the two-element
//! field. No floating point anywhere.

use alloc::string::String;
use alloc::string::ToString;
use core::fmt;
use core::hash::Hash;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// An exact field of scalars.
///
/// A document (algebra file, graph file, input file) fixes one field for the
/// whole computation; the two implementors are never mixed inside a single
/// value. Operations take receivers by reference since rational arithmetic
/// allocates.
pub trait Field: Clone + Eq + Ord + Hash + fmt::Debug + fmt::Display {
    const NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_integer(n: i64) -> Self;

    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    /// Multiplicative inverse; `None` for zero.
    fn inv(&self) -> Option<Self>;
    fn neg(&self) -> Self;

    fn is_zero(&self) -> bool;
    fn is_one(&self) -> bool;

    /// Canonical text form, re-parsed by [`Field::parse`].
    fn render(&self) -> String;
    fn parse(text: &str) -> Option<Self>;
}

/// Arbitrary-precision rational scalar, the field `Q`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Self {
        Rational(BigRational::new(BigInt::from(numer), BigInt::from(denom)))
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational(r)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.render())
    }
}

impl Field for Rational {
    const NAME: &'static str = "Q";

    fn zero() -> Self {
        Rational(BigRational::zero())
    }

    fn one() -> Self {
        Rational(BigRational::one())
    }

    fn from_integer(n: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(n)))
    }

    fn add(&self, other: &Self) -> Self {
        Rational(&self.0 + &other.0)
    }

    fn sub(&self, other: &Self) -> Self {
        Rational(&self.0 - &other.0)
    }

    fn mul(&self, other: &Self) -> Self {
        Rational(&self.0 * &other.0)
    }

    fn inv(&self) -> Option<Self> {
        if self.0.is_zero() {
            None
        } else {
            Some(Rational(self.0.recip()))
        }
    }

    fn neg(&self) -> Self {
        Rational(-&self.0)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn is_one(&self) -> bool {
        self.0.is_one()
    }

    fn render(&self) -> String {
        if self.0.denom().is_one() {
            self.0.numer().to_string()
        } else {
            let mut s = self.0.numer().to_string();
            s.push('/');
            s.push_str(&self.0.denom().to_string());
            s
        }
    }

    fn parse(text: &str) -> Option<Self> {
        let (numer, denom) = match text.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (text.trim(), "1"),
        };
        let n: BigInt = numer.parse().ok()?;
        let d: BigInt = denom.parse().ok()?;
        if d.is_zero() {
            return None;
        }
        Some(Rational(BigRational::new(n, d)))
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

/// Residue mod 2, the field `F2`. Used for the sign-free dg checks.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Mod2(pub bool);

impl fmt::Display for Mod2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", if self.0 { 1 } else { 0 })
    }
}

impl Field for Mod2 {
    const NAME: &'static str = "F2";

    fn zero() -> Self {
        Mod2(false)
    }

    fn one() -> Self {
        Mod2(true)
    }

    fn from_integer(n: i64) -> Self {
        Mod2(n.rem_euclid(2) == 1)
    }

    fn add(&self, other: &Self) -> Self {
        Mod2(self.0 ^ other.0)
    }

    fn sub(&self, other: &Self) -> Self {
        self.add(other)
    }

    fn mul(&self, other: &Self) -> Self {
        Mod2(self.0 && other.0)
    }

    fn inv(&self) -> Option<Self> {
        if self.0 {
            Some(*self)
        } else {
            None
        }
    }

    fn neg(&self) -> Self {
        *self
    }

    fn is_zero(&self) -> bool {
        !self.0
    }

    fn is_one(&self) -> bool {
        self.0
    }

    fn render(&self) -> String {
        if self.0 { "1".into() } else { "0".into() }
    }

    fn parse(text: &str) -> Option<Self> {
        match text.trim() {
            "0" => Some(Mod2(false)),
            "1" => Some(Mod2(true)),
            _ => None,
        }
    }
}
