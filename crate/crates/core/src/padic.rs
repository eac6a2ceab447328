//! Exact p-adic arithmetic at a fixed digit budget, plus the value group of
//! the p-adic norm.
//!
//! A [`PAdic`] is stored as its leading `precision` digits. Every operation
//! works on the exact finite representative `sum d_i p^(v+i)` and truncates
//! the result back to the digit budget, dropping high-order digits. Norms
//! only depend on the leading digit, so truncation never changes a norm or a
//! distance computed here.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Integer, One, Signed, ToPrimitive, Zero};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

/// Digit budget used when nothing else is configured.
pub const DEFAULT_PRECISION: usize = 32;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PadicError {
    #[error("{0} is not a prime")]
    NotPrime(u64),
    #[error("prime mismatch: {0} vs {1}")]
    PrimeMismatch(u32, u32),
    #[error("precision must be at least 1")]
    ZeroPrecision,
    #[error("digit {digit} out of range for p = {prime}")]
    DigitOutOfRange { digit: u32, prime: u32 },
    #[error("negative value {0} cannot be rounded into the value group")]
    Negative(String),
    #[error("cannot parse rational {input:?}: {reason}")]
    ParseRational { input: String, reason: String },
    #[error("cannot parse p-adic text {input:?}: {reason}")]
    ParsePadic { input: String, reason: String },
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// Accepts primes that fit the `u32` digit base used throughout the crate.
pub fn check_prime(p: u64) -> Result<u32, PadicError> {
    if !is_prime(p) {
        return Err(PadicError::NotPrime(p));
    }
    u32::try_from(p).map_err(|_| PadicError::NotPrime(p))
}

/// `p^k` as an exact rational, for any integer `k`.
pub fn prime_power(p: u32, k: i64) -> BigRational {
    let base = BigInt::from(p);
    let magnitude = num::pow(base, k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(magnitude)
    } else {
        BigRational::new(BigInt::one(), magnitude)
    }
}

/// An element of the closed value group `{p^-e : e in Z} ∪ {0}`.
///
/// `Finite(e)` encodes the real number `p^-e`; `Infinity` encodes `0`. The
/// ordering is the real ordering of the encoded values, so `Infinity` is the
/// minimum and a larger exponent is a smaller value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GammaValue {
    Finite(i64),
    Infinity,
}

impl GammaValue {
    pub const ONE: GammaValue = GammaValue::Finite(0);

    pub fn exponent(self) -> Option<i64> {
        match self {
            GammaValue::Finite(e) => Some(e),
            GammaValue::Infinity => None,
        }
    }

    pub fn is_zero(self) -> bool {
        self == GammaValue::Infinity
    }

    /// Multiplies the encoded value by `p^k`.
    pub fn scaled(self, k: i64) -> GammaValue {
        match self {
            GammaValue::Finite(e) => GammaValue::Finite(e - k),
            GammaValue::Infinity => GammaValue::Infinity,
        }
    }

    pub fn to_rational(self, p: u32) -> BigRational {
        match self {
            GammaValue::Finite(e) => prime_power(p, -e),
            GammaValue::Infinity => BigRational::zero(),
        }
    }
}

impl Ord for GammaValue {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (GammaValue::Infinity, GammaValue::Infinity) => Ordering::Equal,
            (GammaValue::Infinity, GammaValue::Finite(_)) => Ordering::Less,
            (GammaValue::Finite(_), GammaValue::Infinity) => Ordering::Greater,
            (GammaValue::Finite(a), GammaValue::Finite(b)) => b.cmp(a),
        }
    }
}

impl PartialOrd for GammaValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for GammaValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GammaValue::Finite(e) => write!(f, "{e}"),
            GammaValue::Infinity => f.write_str("INF"),
        }
    }
}

impl FromStr for GammaValue {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "INF" {
            return Ok(GammaValue::Infinity);
        }
        s.parse::<i64>()
            .map(GammaValue::Finite)
            .map_err(|e| format!("expected an integer exponent or \"INF\", got {s:?}: {e}"))
    }
}

impl Serialize for GammaValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            GammaValue::Finite(e) => serializer.serialize_i64(*e),
            GammaValue::Infinity => serializer.serialize_str("INF"),
        }
    }
}

impl<'de> Deserialize<'de> for GammaValue {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct GammaVisitor;

        impl Visitor<'_> for GammaVisitor {
            type Value = GammaValue;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer exponent or the string \"INF\"")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<GammaValue, E> {
                Ok(GammaValue::Finite(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<GammaValue, E> {
                i64::try_from(v)
                    .map(GammaValue::Finite)
                    .map_err(|_| E::custom("exponent out of range"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<GammaValue, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(GammaVisitor)
    }
}

/// Rounds a nonnegative rational down into the value group: the largest
/// `p^-e` not exceeding `r`, or `Infinity` for `r = 0`.
///
/// The result `g` always satisfies `g <= r <= p * g`.
pub fn round_to_gamma(r: &BigRational, p: u32) -> Result<GammaValue, PadicError> {
    if r.is_negative() {
        return Err(PadicError::Negative(r.to_string()));
    }
    if r.is_zero() {
        return Ok(GammaValue::Infinity);
    }
    // Start from a bit-length estimate of log_p(r), then settle exactly.
    let bits = r.numer().bits() as f64 - r.denom().bits() as f64;
    let mut k = (bits / f64::from(p).log2()).floor() as i64;
    while &prime_power(p, k) > r {
        k -= 1;
    }
    while &prime_power(p, k + 1) <= r {
        k += 1;
    }
    Ok(GammaValue::Finite(-k))
}

/// Parses `"a/b"`, integers, and decimals such as `"0.7"` or `"1.5e-3"` into
/// an exact rational.
pub fn parse_rational(input: &str) -> Result<BigRational, PadicError> {
    let err = |reason: &str| PadicError::ParseRational {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let s = input.trim();
    if s.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err("bad numerator"))?;
        let den: BigInt = den.trim().parse().map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(BigRational::new(num, den));
    }

    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| err("bad exponent"))?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err("no digits"));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err("unexpected character"));
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().map_err(|_| err("bad digits"))?);
    let shift = exponent - frac_part.len() as i64;
    let ten = BigRational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num::pow(ten, shift as usize);
    } else {
        value /= num::pow(ten, shift.unsigned_abs() as usize);
    }
    Ok(if negative { -value } else { value })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct Unit {
    valuation: i64,
    // digits[0] != 0, len == precision
    digits: Vec<u32>,
}

/// An element of `Q_p` held to `precision` significant digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PAdic {
    prime: u32,
    precision: usize,
    unit: Option<Unit>,
}

#[allow(clippy::should_implement_trait)]
impl PAdic {
    pub fn zero(prime: u32, precision: usize) -> Result<PAdic, PadicError> {
        check_prime(u64::from(prime))?;
        if precision == 0 {
            return Err(PadicError::ZeroPrecision);
        }
        Ok(PAdic { prime, precision, unit: None })
    }

    /// Builds `sum digits[i] * p^(valuation + i)`. Leading zero digits are
    /// absorbed into the valuation; anything past the budget is dropped.
    pub fn from_digits(
        prime: u32,
        valuation: i64,
        digits: &[u32],
        precision: usize,
    ) -> Result<PAdic, PadicError> {
        let zero = PAdic::zero(prime, precision)?;
        if let Some(&digit) = digits.iter().find(|&&d| d >= prime) {
            return Err(PadicError::DigitOutOfRange { digit, prime });
        }
        let Some(lead) = digits.iter().position(|&d| d != 0) else {
            return Ok(zero);
        };
        let mut kept: Vec<u32> = digits[lead..].iter().copied().take(precision).collect();
        kept.resize(precision, 0);
        Ok(PAdic {
            unit: Some(Unit { valuation: valuation + lead as i64, digits: kept }),
            ..zero
        })
    }

    pub fn from_integer(prime: u32, n: &BigInt, precision: usize) -> Result<PAdic, PadicError> {
        let zero = PAdic::zero(prime, precision)?;
        Ok(Self::from_scaled(prime, precision, 0, n.clone()).unwrap_or(zero))
    }

    pub fn from_i64(prime: u32, n: i64, precision: usize) -> Result<PAdic, PadicError> {
        Self::from_integer(prime, &BigInt::from(n), precision)
    }

    /// `p^e` exactly.
    pub fn prime_power(prime: u32, e: i64, precision: usize) -> Result<PAdic, PadicError> {
        Self::from_digits(prime, e, &[1], precision)
    }

    // Normalises `value * p^shift`; None when the value is exactly zero.
    fn from_scaled(prime: u32, precision: usize, shift: i64, value: BigInt) -> Option<PAdic> {
        if value.is_zero() {
            return None;
        }
        let p = BigInt::from(prime);
        let mut value = value;
        let mut valuation = shift;
        loop {
            let (q, r) = value.div_rem(&p);
            if !r.is_zero() {
                break;
            }
            value = q;
            valuation += 1;
        }
        let modulus = num::pow(p.clone(), precision);
        let mut rest = value.mod_floor(&modulus);
        let mut digits = Vec::with_capacity(precision);
        for _ in 0..precision {
            let (q, r) = rest.div_rem(&p);
            digits.push(r.to_u32().expect("digit below p"));
            rest = q;
        }
        Some(PAdic {
            prime,
            precision,
            unit: Some(Unit { valuation, digits }),
        })
    }

    pub fn prime(&self) -> u32 {
        self.prime
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn is_zero(&self) -> bool {
        self.unit.is_none()
    }

    pub fn valuation(&self) -> Option<i64> {
        self.unit.as_ref().map(|u| u.valuation)
    }

    /// Significant digits, least significant first. Empty for zero.
    pub fn digits(&self) -> &[u32] {
        self.unit.as_ref().map_or(&[], |u| u.digits.as_slice())
    }

    /// Coefficient of `p^position` in the finite representative.
    pub fn digit_at(&self, position: i64) -> u32 {
        match &self.unit {
            None => 0,
            Some(u) => {
                let offset = position - u.valuation;
                if offset < 0 {
                    0
                } else {
                    u.digits.get(offset as usize).copied().unwrap_or(0)
                }
            }
        }
    }

    /// `|x|_p` as a value-group element: `p^-v`, or `Infinity` for zero.
    pub fn norm(&self) -> GammaValue {
        match &self.unit {
            None => GammaValue::Infinity,
            Some(u) => GammaValue::Finite(u.valuation),
        }
    }

    fn mantissa(&self) -> BigInt {
        let p = BigInt::from(self.prime);
        self.digits()
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, &d| acc * &p + BigInt::from(d))
    }

    pub fn to_rational(&self) -> BigRational {
        match &self.unit {
            None => BigRational::zero(),
            Some(u) => BigRational::from_integer(self.mantissa()) * prime_power(self.prime, u.valuation),
        }
    }

    fn same_prime(&self, other: &PAdic) -> Result<(), PadicError> {
        if self.prime != other.prime {
            return Err(PadicError::PrimeMismatch(self.prime, other.prime));
        }
        Ok(())
    }

    fn combine(&self, other: &PAdic, subtract: bool) -> Result<PAdic, PadicError> {
        self.same_prime(other)?;
        let precision = self.precision.min(other.precision);
        let (a, b) = match (&self.unit, &other.unit) {
            (None, None) => return PAdic::zero(self.prime, precision),
            (Some(_), None) => return Ok(self.truncated(precision)),
            (None, Some(_)) => {
                let b = other.truncated(precision);
                return Ok(if subtract { b.neg() } else { b });
            }
            (Some(a), Some(b)) => (a, b),
        };
        let base = a.valuation.min(b.valuation);
        let p = BigInt::from(self.prime);
        let lhs = self.mantissa() * num::pow(p.clone(), (a.valuation - base) as usize);
        let rhs = other.mantissa() * num::pow(p, (b.valuation - base) as usize);
        let value = if subtract { lhs - rhs } else { lhs + rhs };
        Ok(Self::from_scaled(self.prime, precision, base, value)
            .unwrap_or(PAdic { prime: self.prime, precision, unit: None }))
    }

    /// `a + b`, truncated to the smaller of the two digit budgets.
    pub fn add(&self, other: &PAdic) -> Result<PAdic, PadicError> {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &PAdic) -> Result<PAdic, PadicError> {
        self.combine(other, true)
    }

    pub fn mul(&self, other: &PAdic) -> Result<PAdic, PadicError> {
        self.same_prime(other)?;
        let precision = self.precision.min(other.precision);
        match (&self.unit, &other.unit) {
            (Some(a), Some(b)) => Ok(Self::from_scaled(
                self.prime,
                precision,
                a.valuation + b.valuation,
                self.mantissa() * other.mantissa(),
            )
            .expect("product of units is nonzero")),
            _ => PAdic::zero(self.prime, precision),
        }
    }

    /// Additive inverse within the digit budget.
    pub fn neg(&self) -> PAdic {
        match &self.unit {
            None => self.clone(),
            Some(u) => Self::from_scaled(self.prime, self.precision, u.valuation, -self.mantissa())
                .expect("negation of a unit is nonzero"),
        }
    }

    fn truncated(&self, precision: usize) -> PAdic {
        match &self.unit {
            None => PAdic { precision, ..self.clone() },
            Some(u) => PAdic {
                prime: self.prime,
                precision,
                unit: Some(Unit {
                    valuation: u.valuation,
                    digits: u.digits[..precision].to_vec(),
                }),
            },
        }
    }
}

impl fmt::Display for PAdic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.unit {
            None => write!(f, "p:{} v:INF d:", self.prime),
            Some(u) => {
                let digits: Vec<String> = u.digits.iter().map(u32::to_string).collect();
                write!(f, "p:{} v:{} d:{}", self.prime, u.valuation, digits.join(","))
            }
        }
    }
}

impl FromStr for PAdic {
    type Err = PadicError;

    /// Parses the `p:<prime> v:<valuation> d:<digits>` dump form. The digit
    /// count becomes the precision; zero (`v:INF`) gets precision 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |reason: &str| PadicError::ParsePadic {
            input: s.to_string(),
            reason: reason.to_string(),
        };
        let mut prime = None;
        let mut valuation = None;
        let mut digits = None;
        for field in s.split_whitespace() {
            match field.split_once(':') {
                Some(("p", v)) => prime = Some(v.parse::<u64>().map_err(|_| err("bad prime"))?),
                Some(("v", v)) => valuation = Some(v.to_string()),
                Some(("d", v)) => {
                    let parsed: Result<Vec<u32>, _> =
                        v.split(',').filter(|t| !t.is_empty()).map(str::parse).collect();
                    digits = Some(parsed.map_err(|_| err("bad digit"))?);
                }
                _ => return Err(err("unknown field")),
            }
        }
        let prime = check_prime(prime.ok_or_else(|| err("missing p"))?)?;
        let valuation = valuation.ok_or_else(|| err("missing v"))?;
        let digits = digits.ok_or_else(|| err("missing d"))?;
        if valuation == "INF" {
            if !digits.is_empty() {
                return Err(err("zero carries no digits"));
            }
            return PAdic::zero(prime, 1);
        }
        let valuation: i64 = valuation.parse().map_err(|_| err("bad valuation"))?;
        if digits.first().is_none_or(|&d| d == 0) {
            return Err(err("leading digit must be nonzero"));
        }
        PAdic::from_digits(prime, valuation, &digits, digits.len())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Schoolbook addition on little-endian digit vectors, independent of the
    // BigInt path.
    fn schoolbook_add(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
        let len = a.len().max(b.len());
        let mut out = Vec::with_capacity(len + 1);
        let mut carry = 0;
        for i in 0..len {
            let s = a.get(i).copied().unwrap_or(0) + b.get(i).copied().unwrap_or(0) + carry;
            out.push(s % p);
            carry = s / p;
        }
        out.push(carry);
        out
    }

    fn trial_valuation(mut n: i64, p: i64) -> i64 {
        let mut v = 0;
        while n % p == 0 {
            n /= p;
            v += 1;
        }
        v
    }

    #[test]
    fn carry_into_next_digit() {
        let a = PAdic::from_i64(3, 1, 6).unwrap();
        let b = PAdic::from_i64(3, 2, 6).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.valuation(), Some(1));
        assert_eq!(s.digits()[0], 1);
        assert!(s.digits()[1..].iter().all(|&d| d == 0));
    }

    #[test]
    fn zero_is_additive_identity() {
        let a = PAdic::from_digits(5, -2, &[3, 1, 4], 6).unwrap();
        let z = PAdic::zero(5, 6).unwrap();
        assert_eq!(a.add(&z).unwrap(), a);
        assert_eq!(z.add(&a).unwrap(), a);
    }

    #[test]
    fn all_ones_plus_one_carries_out_of_budget() {
        let precision = 6;
        let ones = vec![1u32; precision];
        let a = PAdic::from_digits(2, 0, &ones, precision).unwrap();
        let one = PAdic::from_i64(2, 1, precision).unwrap();
        let sum = a.add(&one).unwrap();

        let oracle = schoolbook_add(&ones, &[1], 2);
        let lead = oracle.iter().position(|&d| d != 0).unwrap();
        assert_eq!(lead, precision);
        assert_eq!(sum.valuation(), Some(lead as i64));
        assert!(sum.valuation().unwrap() >= precision as i64);
    }

    #[test]
    fn addition_matches_schoolbook_oracle() {
        for p in [2u32, 3, 5, 7] {
            for x in 0..60i64 {
                for y in 0..60i64 {
                    let a = PAdic::from_i64(p, x, 8).unwrap();
                    let b = PAdic::from_i64(p, y, 8).unwrap();
                    let s = a.add(&b).unwrap();
                    let digits = |mut n: i64| {
                        let mut d = Vec::new();
                        while n > 0 {
                            d.push((n % p as i64) as u32);
                            n /= p as i64;
                        }
                        d
                    };
                    let expect = schoolbook_add(&digits(x), &digits(y), p);
                    for (i, &d) in expect.iter().enumerate() {
                        assert_eq!(s.digit_at(i as i64), d, "p={p} {x}+{y} digit {i}");
                    }
                }
            }
        }
    }

    #[test]
    fn norm_counts_factors_of_p() {
        assert_eq!(PAdic::zero(7, 4).unwrap().norm(), GammaValue::Infinity);
        let v = PAdic::from_i64(5, 25, 8).unwrap();
        assert_eq!(v.norm(), GammaValue::Finite(trial_valuation(25, 5)));
        assert_eq!(v.norm(), GammaValue::Finite(2));
        let third = PAdic::from_digits(3, -1, &[1], 8).unwrap();
        assert_eq!(third.norm(), GammaValue::Finite(-1));
        assert_eq!(third.norm().to_rational(3), BigRational::from_integer(3.into()));
        for n in 1..500i64 {
            let x = PAdic::from_i64(3, n, 10).unwrap();
            assert_eq!(x.norm(), GammaValue::Finite(trial_valuation(n, 3)));
        }
    }

    #[test]
    fn subtraction_and_negation_are_exact() {
        let p = 3;
        for x in -40i64..40 {
            for y in -40i64..40 {
                let a = PAdic::from_i64(p, x, 12).unwrap();
                let b = PAdic::from_i64(p, y, 12).unwrap();
                let d = a.sub(&b).unwrap();
                let expect = PAdic::from_i64(p, x - y, 12).unwrap();
                assert_eq!(d.norm(), expect.norm());
                // Digits are only determined below the point where either
                // operand's budget runs out.
                let known = [&a, &b].iter().filter_map(|v| v.valuation()).map(|v| v + 12).min().unwrap_or(64);
                for i in -2..known {
                    assert_eq!(d.digit_at(i), expect.digit_at(i), "{x} - {y} at {i}");
                }
            }
            let a = PAdic::from_i64(p, x, 12).unwrap();
            assert_eq!(a.neg().neg(), a);
            assert!(a.add(&a.neg()).unwrap().valuation().is_none_or(|v| v >= 12));
        }
    }

    #[test]
    fn multiplication_adds_valuations() {
        let a = PAdic::from_digits(5, 2, &[3, 1], 8).unwrap();
        let b = PAdic::from_digits(5, -3, &[2], 8).unwrap();
        let c = a.mul(&b).unwrap();
        assert_eq!(c.valuation(), Some(-1));
        assert_eq!(c.to_rational(), a.to_rational() * b.to_rational());
    }

    #[test]
    fn prime_mismatch_is_rejected() {
        let a = PAdic::from_i64(3, 1, 4).unwrap();
        let b = PAdic::from_i64(5, 1, 4).unwrap();
        assert_eq!(a.add(&b), Err(PadicError::PrimeMismatch(3, 5)));
    }

    #[test]
    fn construction_checks() {
        assert_eq!(PAdic::zero(4, 3), Err(PadicError::NotPrime(4)));
        assert_eq!(PAdic::zero(3, 0), Err(PadicError::ZeroPrecision));
        assert_eq!(
            PAdic::from_digits(3, 0, &[1, 3], 4),
            Err(PadicError::DigitOutOfRange { digit: 3, prime: 3 })
        );
        let x = PAdic::from_digits(3, 0, &[0, 0, 2, 1], 2).unwrap();
        assert_eq!(x.valuation(), Some(2));
        assert_eq!(x.digits(), &[2, 1]);
    }

    #[test]
    fn gamma_order_is_real_order() {
        let mut values = vec![
            GammaValue::Finite(3),
            GammaValue::Infinity,
            GammaValue::Finite(-2),
            GammaValue::Finite(0),
        ];
        values.sort();
        assert_eq!(
            values,
            vec![
                GammaValue::Infinity,
                GammaValue::Finite(3),
                GammaValue::Finite(0),
                GammaValue::Finite(-2)
            ]
        );
        for a in -4..4 {
            for b in -4..4 {
                let ga = GammaValue::Finite(a);
                let gb = GammaValue::Finite(b);
                assert_eq!(ga.cmp(&gb), ga.to_rational(2).cmp(&gb.to_rational(2)));
            }
        }
    }

    #[test]
    fn rounding_examples() {
        let seven_tenths = parse_rational("0.7").unwrap();
        assert_eq!(round_to_gamma(&seven_tenths, 2).unwrap(), GammaValue::Finite(1));
        assert_eq!(round_to_gamma(&BigRational::zero(), 5).unwrap(), GammaValue::Infinity);
        let r = prime_power(3, -3);
        assert_eq!(round_to_gamma(&r, 3).unwrap(), GammaValue::Finite(3));
        assert!(matches!(
            round_to_gamma(&parse_rational("-1/2").unwrap(), 2),
            Err(PadicError::Negative(_))
        ));
    }

    #[test]
    fn rounding_against_enumeration() {
        // Enumerate powers p^k for k in a window and pick the largest <= r.
        for p in [2u32, 3, 5] {
            for num in 1..40i64 {
                for den in 1..40i64 {
                    let r = BigRational::new(num.into(), den.into());
                    let best = (-10i64..10)
                        .filter(|&k| prime_power(p, k) <= r)
                        .max()
                        .unwrap();
                    assert_eq!(round_to_gamma(&r, p).unwrap(), GammaValue::Finite(-best));
                }
            }
        }
    }

    #[test]
    fn parses_rationals() {
        let q = |s: &str| parse_rational(s).unwrap();
        assert_eq!(q("3/4"), BigRational::new(3.into(), 4.into()));
        assert_eq!(q("0.25"), BigRational::new(1.into(), 4.into()));
        assert_eq!(q("2"), BigRational::from_integer(2.into()));
        assert_eq!(q("1.5e-2"), BigRational::new(3.into(), 200.into()));
        assert_eq!(q(".5"), BigRational::new(1.into(), 2.into()));
        assert_eq!(q("-0.5"), BigRational::new((-1).into(), 2.into()));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn text_form_round_trips() {
        let x = PAdic::from_digits(7, -2, &[3, 0, 6], 3).unwrap();
        let text = x.to_string();
        assert_eq!(text, "p:7 v:-2 d:3,0,6");
        assert_eq!(text.parse::<PAdic>().unwrap(), x);
        let z = PAdic::zero(2, 1).unwrap();
        assert_eq!(z.to_string(), "p:2 v:INF d:");
        assert_eq!("p:2 v:INF d:".parse::<PAdic>().unwrap(), z);
        assert!("p:4 v:0 d:1".parse::<PAdic>().is_err());
        assert!("p:3 v:0 d:0,1".parse::<PAdic>().is_err());
    }

    #[test]
    fn gamma_serde() {
        let v = vec![GammaValue::Finite(-2), GammaValue::Infinity, GammaValue::Finite(5)];
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, r#"[-2,"INF",5]"#);
        let back: Vec<GammaValue> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, v);
        assert!(serde_json::from_str::<GammaValue>(r#""inf""#).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn padic(p: u32) -> impl Strategy<Value = PAdic> {
            (-3i64..=3, proptest::collection::vec(0..p, 6)).prop_map(move |(v, digits)| {
                PAdic::from_digits(p, v, &digits, 6).unwrap()
            })
        }

        proptest! {
            #[test]
            fn strong_triangle((a, b) in prop::sample::select(vec![2u32, 3, 5])
                .prop_flat_map(|p| (padic(p), padic(p))))
            {
                let s = a.add(&b).unwrap();
                prop_assert!(s.norm() <= a.norm().max(b.norm()));
            }

            #[test]
            fn sandwich(num in 1u64..1_000_000, den in 1u64..1_000_000, p in prop::sample::select(vec![2u32, 3, 5])) {
                let r = BigRational::new(num.into(), den.into());
                let g = round_to_gamma(&r, p).unwrap().to_rational(p);
                prop_assert!(g <= r);
                prop_assert!(r <= g * BigRational::from_integer(p.into()));
            }

            #[test]
            fn rounding_is_idempotent_on_gamma(e in -20i64..20, p in prop::sample::select(vec![2u32, 3, 5, 7])) {
                let g = GammaValue::Finite(e);
                prop_assert_eq!(round_to_gamma(&g.to_rational(p), p).unwrap(), g);
            }
        }
    }

    #[test]
    fn strong_triangle_exhaustive_small() {
        // Valuations in [-3, 3], two-digit patterns at precision 6.
        for p in [2u32, 3, 5] {
            let mut values = vec![PAdic::zero(p, 6).unwrap()];
            for v in -3..=3 {
                for d0 in 1..p {
                    for d1 in 0..p {
                        values.push(PAdic::from_digits(p, v, &[d0, d1, 0, 0, 0, 1], 6).unwrap());
                    }
                }
            }
            for a in &values {
                for b in &values {
                    let s = a.add(b).unwrap();
                    assert!(s.norm() <= a.norm().max(b.norm()));
                }
            }
        }
    }
}
