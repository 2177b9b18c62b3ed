//! Coefficient field with two interchangeable backends.
//!
//! [`Scalar`] is a complex number whose parts are either exact rationals or
//! MPFR floats of a configurable binary precision. Arithmetic between an
//! exact and a bigfloat value promotes the exact operand to the float's
//! precision, so small exact literals (`Scalar::from(2)`) can be mixed freely
//! into bigfloat computations. Comparison with [`approx_eq`] is the one place
//! where the backends must agree.
//!
//! Division never produces an infinity: [`Scalar::checked_div`] and
//! [`Scalar::recip`] return [`Error::DivisionByZero`] for an exact zero divisor.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use rug::{Float, Integer, Rational};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default bigfloat precision in bits.
pub const DEFAULT_PRECISION: u32 = 128;
/// Smallest bigfloat precision accepted anywhere in the crate.
pub const MIN_PRECISION: u32 = 64;
/// Default verification tolerance for the bigfloat backend.
pub const DEFAULT_EPS: f64 = 1e-25;

/// Backend tag of a [`Scalar`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    Exact,
    BigFloat { precision: u32 },
}

impl Backend {
    pub fn is_exact(self) -> bool {
        matches!(self, Backend::Exact)
    }

    pub fn precision(self) -> Option<u32> {
        match self {
            Backend::Exact => None,
            Backend::BigFloat { precision } => Some(precision),
        }
    }

    /// Tolerance to use for "is this zero" questions: 0 for exact, otherwise
    /// the larger of `DEFAULT_EPS` scaled to the precision and `2^(16-bits)`.
    pub fn zero_tolerance(self) -> f64 {
        match self {
            Backend::Exact => 0.0,
            Backend::BigFloat { precision } => {
                let p = precision_eps(precision);
                if precision <= DEFAULT_PRECISION {
                    DEFAULT_EPS.max(p)
                } else {
                    p
                }
            }
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Backend::Exact => write!(f, "exact"),
            Backend::BigFloat { precision } => write!(f, "bigfloat({precision})"),
        }
    }
}

/// `2^(16 - bits)`: roughly the accuracy left after a few dozen roundings.
pub fn precision_eps(bits: u32) -> f64 {
    2f64.powi(16 - bits as i32)
}

#[derive(Clone, Debug, PartialEq)]
struct ExactComplex {
    re: Rational,
    im: Rational,
}

#[derive(Clone, Debug)]
struct FloatComplex {
    re: Float,
    im: Float,
}

/// An element of the coefficient field.
#[derive(Clone)]
pub struct Scalar(Repr);

#[derive(Clone)]
enum Repr {
    Exact(ExactComplex),
    Float(FloatComplex),
}

fn rat_is_zero(r: &Rational) -> bool {
    r.cmp0() == Ordering::Equal
}

impl ExactComplex {
    fn is_real(&self) -> bool {
        rat_is_zero(&self.im)
    }

    fn to_float(&self, prec: u32) -> FloatComplex {
        FloatComplex {
            re: Float::with_val(prec, &self.re),
            im: Float::with_val(prec, &self.im),
        }
    }

    fn add(&self, o: &Self) -> Self {
        ExactComplex {
            re: Rational::from(&self.re + &o.re),
            im: if self.is_real() && o.is_real() {
                Rational::new()
            } else {
                Rational::from(&self.im + &o.im)
            },
        }
    }

    fn sub(&self, o: &Self) -> Self {
        ExactComplex {
            re: Rational::from(&self.re - &o.re),
            im: if self.is_real() && o.is_real() {
                Rational::new()
            } else {
                Rational::from(&self.im - &o.im)
            },
        }
    }

    fn mul(&self, o: &Self) -> Self {
        if self.is_real() && o.is_real() {
            return ExactComplex {
                re: Rational::from(&self.re * &o.re),
                im: Rational::new(),
            };
        }
        let rr = Rational::from(&self.re * &o.re);
        let ii = Rational::from(&self.im * &o.im);
        let ri = Rational::from(&self.re * &o.im);
        let ir = Rational::from(&self.im * &o.re);
        ExactComplex {
            re: rr - ii,
            im: ri + ir,
        }
    }

    fn recip(&self) -> Option<Self> {
        if self.is_real() {
            if rat_is_zero(&self.re) {
                return None;
            }
            return Some(ExactComplex {
                re: Rational::from(self.re.recip_ref()),
                im: Rational::new(),
            });
        }
        let norm = Rational::from(self.re.square_ref()) + Rational::from(self.im.square_ref());
        Some(ExactComplex {
            re: Rational::from(&self.re / &norm),
            im: -Rational::from(&self.im / &norm),
        })
    }
}

fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if r.cmp0() == Ordering::Less {
        return None;
    }
    let (n, d) = (r.numer(), r.denom());
    if n.is_perfect_square() && d.is_perfect_square() {
        Some(Rational::from((Integer::from(n.sqrt_ref()), Integer::from(d.sqrt_ref()))))
    } else {
        None
    }
}

impl FloatComplex {
    fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    fn with_prec(&self, prec: u32) -> Self {
        FloatComplex {
            re: Float::with_val(prec, &self.re),
            im: Float::with_val(prec, &self.im),
        }
    }

    fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn add(&self, o: &Self, p: u32) -> Self {
        FloatComplex {
            re: Float::with_val(p, &self.re + &o.re),
            im: Float::with_val(p, &self.im + &o.im),
        }
    }

    fn sub(&self, o: &Self, p: u32) -> Self {
        FloatComplex {
            re: Float::with_val(p, &self.re - &o.re),
            im: Float::with_val(p, &self.im - &o.im),
        }
    }

    fn mul(&self, o: &Self, p: u32) -> Self {
        if self.is_real() && o.is_real() {
            return FloatComplex {
                re: Float::with_val(p, &self.re * &o.re),
                im: Float::new(p),
            };
        }
        let rr = Float::with_val(p, &self.re * &o.re);
        let ii = Float::with_val(p, &self.im * &o.im);
        let ri = Float::with_val(p, &self.re * &o.im);
        let ir = Float::with_val(p, &self.im * &o.re);
        FloatComplex {
            re: rr - ii,
            im: ri + ir,
        }
    }

    fn recip(&self) -> Option<Self> {
        let p = self.prec();
        if self.re.is_zero() && self.im.is_zero() {
            return None;
        }
        if self.is_real() {
            return Some(FloatComplex {
                re: Float::with_val(p, 1) / &self.re,
                im: Float::new(p),
            });
        }
        let norm = Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref());
        Some(FloatComplex {
            re: Float::with_val(p, &self.re / &norm),
            im: -Float::with_val(p, &self.im / &norm),
        })
    }

    fn abs(&self) -> Float {
        Float::with_val(self.prec(), self.re.hypot_ref(&self.im))
    }

    /// Principal square root.
    fn sqrt(&self) -> Self {
        let p = self.prec();
        if self.is_real() {
            if self.re.cmp0() != Some(Ordering::Less) {
                return FloatComplex {
                    re: Float::with_val(p, self.re.sqrt_ref()),
                    im: Float::new(p),
                };
            }
            let neg = Float::with_val(p, -&self.re);
            return FloatComplex {
                re: Float::new(p),
                im: neg.sqrt(),
            };
        }
        let r = self.abs();
        let re = (Float::with_val(p, &r + &self.re) / 2u32).sqrt();
        let mut im = (Float::with_val(p, &r - &self.re) / 2u32).sqrt();
        if self.im.cmp0() == Some(Ordering::Less) {
            im = -im;
        }
        FloatComplex { re, im }
    }
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::from(0)
    }

    pub fn one() -> Self {
        Scalar::from(1)
    }

    /// The imaginary unit (exact).
    pub fn i() -> Self {
        Scalar::exact_complex(Rational::new(), Rational::from(1))
    }

    /// `num/den` on the exact backend.
    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::DivisionByZero);
        }
        Ok(Scalar::from_rational(Rational::from((num, den))))
    }

    pub fn from_rational(r: Rational) -> Self {
        Scalar(Repr::Exact(ExactComplex { re: r, im: Rational::new() }))
    }

    pub fn exact_complex(re: Rational, im: Rational) -> Self {
        Scalar(Repr::Exact(ExactComplex { re, im }))
    }

    pub fn from_float(re: Float) -> Self {
        let p = re.prec();
        Scalar(Repr::Float(FloatComplex { re, im: Float::new(p) }))
    }

    pub fn float_complex(re: Float, im: Float) -> Self {
        let p = re.prec().max(im.prec());
        Scalar(Repr::Float(FloatComplex {
            re: Float::with_val(p, re),
            im: Float::with_val(p, im),
        }))
    }

    /// An `f64` value on the bigfloat backend (exactly, then rounded to `prec`).
    pub fn from_f64(x: f64, prec: u32) -> Self {
        Scalar::from_float(Float::with_val(prec, x))
    }

    pub fn backend(&self) -> Backend {
        match &self.0 {
            Repr::Exact(_) => Backend::Exact,
            Repr::Float(f) => Backend::BigFloat { precision: f.prec() },
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.0, Repr::Exact(_))
    }

    /// Convert to the bigfloat backend at `prec` bits (rounding exact values,
    /// re-rounding floats).
    pub fn to_precision(&self, prec: u32) -> Scalar {
        match &self.0 {
            Repr::Exact(e) => Scalar(Repr::Float(e.to_float(prec))),
            Repr::Float(f) => Scalar(Repr::Float(f.with_prec(prec))),
        }
    }

    /// Convert to `backend`. Converting a float to exact is not supported.
    pub fn to_backend(&self, backend: Backend) -> Result<Scalar> {
        match (backend, &self.0) {
            (Backend::Exact, Repr::Exact(_)) => Ok(self.clone()),
            (Backend::Exact, Repr::Float(_)) => Err(Error::NotRepresentable(format!(
                "bigfloat value {self} cannot be made exact"
            ))),
            (Backend::BigFloat { precision }, _) => Ok(self.to_precision(precision)),
        }
    }

    /// Exact zero test (both parts identically zero).
    pub fn is_zero(&self) -> bool {
        match &self.0 {
            Repr::Exact(e) => rat_is_zero(&e.re) && rat_is_zero(&e.im),
            Repr::Float(f) => f.re.is_zero() && f.im.is_zero(),
        }
    }

    pub fn is_real(&self) -> bool {
        match &self.0 {
            Repr::Exact(e) => e.is_real(),
            Repr::Float(f) => f.is_real(),
        }
    }

    pub fn re(&self) -> Scalar {
        match &self.0 {
            Repr::Exact(e) => Scalar::from_rational(e.re.clone()),
            Repr::Float(f) => Scalar::from_float(f.re.clone()),
        }
    }

    pub fn im(&self) -> Scalar {
        match &self.0 {
            Repr::Exact(e) => Scalar::from_rational(e.im.clone()),
            Repr::Float(f) => Scalar::from_float(f.im.clone()),
        }
    }

    pub fn conj(&self) -> Scalar {
        match &self.0 {
            Repr::Exact(e) => Scalar::exact_complex(e.re.clone(), Rational::from(-&e.im)),
            Repr::Float(f) => Scalar(Repr::Float(FloatComplex {
                re: f.re.clone(),
                im: Float::with_val(f.prec(), -&f.im),
            })),
        }
    }

    /// The exact rational value, if this is an exact real scalar.
    pub fn as_rational(&self) -> Option<&Rational> {
        match &self.0 {
            Repr::Exact(e) if e.is_real() => Some(&e.re),
            _ => None,
        }
    }

    /// Sign of a real scalar; `None` for non-real values.
    pub fn real_sign(&self) -> Option<Ordering> {
        if !self.is_real() {
            return None;
        }
        match &self.0 {
            Repr::Exact(e) => Some(e.re.cmp0()),
            Repr::Float(f) => f.re.cmp0(),
        }
    }

    /// Compare two real scalars.
    pub fn real_cmp(&self, other: &Scalar) -> Option<Ordering> {
        (self - other).real_sign()
    }

    /// `|self|` as an MPFR float (128 bits for exact values).
    pub fn magnitude(&self) -> Float {
        match &self.0 {
            Repr::Exact(e) => e.to_float(DEFAULT_PRECISION).abs(),
            Repr::Float(f) => f.abs(),
        }
    }

    /// `|self|` as `f64` (may overflow to infinity or underflow to 0).
    pub fn abs_f64(&self) -> f64 {
        self.magnitude().to_f64()
    }

    /// Real part as `f64`.
    pub fn re_f64(&self) -> f64 {
        match &self.0 {
            Repr::Exact(e) => e.re.to_f64(),
            Repr::Float(f) => f.re.to_f64(),
        }
    }

    pub fn recip(&self) -> Result<Scalar> {
        let r = match &self.0 {
            Repr::Exact(e) => e.recip().map(Repr::Exact),
            Repr::Float(f) => f.recip().map(Repr::Float),
        };
        r.map(Scalar).ok_or(Error::DivisionByZero)
    }

    pub fn checked_div(&self, rhs: &Scalar) -> Result<Scalar> {
        if let (Repr::Exact(a), Repr::Exact(b)) = (&self.0, &rhs.0) {
            if a.is_real() && b.is_real() {
                if rat_is_zero(&b.re) {
                    return Err(Error::DivisionByZero);
                }
                return Ok(Scalar::from_rational(Rational::from(&a.re / &b.re)));
            }
        }
        Ok(self * &rhs.recip()?)
    }

    /// Principal square root. On the exact backend this succeeds only when the
    /// root is again a (Gaussian) rational.
    pub fn sqrt(&self) -> Result<Scalar> {
        match &self.0 {
            Repr::Float(f) => Ok(Scalar(Repr::Float(f.sqrt()))),
            Repr::Exact(e) => {
                let fail = || Error::NotRepresentable(format!("sqrt({self}) is irrational"));
                if e.is_real() {
                    if e.re.cmp0() != Ordering::Less {
                        return rational_sqrt(&e.re).map(Scalar::from_rational).ok_or_else(fail);
                    }
                    let r = rational_sqrt(&Rational::from(-&e.re)).ok_or_else(fail)?;
                    return Ok(Scalar::exact_complex(Rational::new(), r));
                }
                // sqrt(z) = sqrt((|z|+x)/2) + i sgn(y) sqrt((|z|-x)/2)
                let norm2 = Rational::from(e.re.square_ref()) + Rational::from(e.im.square_ref());
                let modulus = rational_sqrt(&norm2).ok_or_else(fail)?;
                let re = rational_sqrt(&(Rational::from(&modulus + &e.re) / 2u32)).ok_or_else(fail)?;
                let mut im = rational_sqrt(&(Rational::from(&modulus - &e.re) / 2u32)).ok_or_else(fail)?;
                if e.im.cmp0() == Ordering::Less {
                    im = -im;
                }
                Ok(Scalar::exact_complex(re, im))
            }
        }
    }

    /// Integer power; negative exponents divide.
    pub fn powi(&self, n: i64) -> Result<Scalar> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = Scalar::one();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    pub fn square(&self) -> Scalar {
        self * self
    }

    /// `self` is negligible relative to `scale`: exact zero on the exact
    /// backend, `|self| <= eps * max(1, scale)` otherwise.
    pub fn is_negligible(&self, scale: f64, eps: f64) -> bool {
        if self.is_exact() {
            return self.is_zero();
        }
        let m = self.magnitude();
        let bound = eps * scale.max(1.0);
        m <= bound
    }

    /// Decimal rendering used in reports: `p/q` for exact reals, decimal
    /// strings for floats, `[re, im]` for non-real values.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).unwrap_or(serde_json::Value::Null)
    }
}

/// `a ≈ b`: exact equality on the exact backend, otherwise
/// `|a − b| ≤ eps · max(1, |a|, |b|)`.
pub fn approx_eq(a: &Scalar, b: &Scalar, eps: f64) -> Result<bool> {
    match (&a.0, &b.0) {
        (Repr::Exact(x), Repr::Exact(y)) => Ok(x == y),
        (Repr::Float(_), Repr::Float(_)) => {
            let diff = (a - b).magnitude();
            let mut scale = a.magnitude().max(&b.magnitude());
            if scale < 1 {
                scale = Float::with_val(scale.prec(), 1);
            }
            Ok(diff <= scale * eps)
        }
        _ => Err(Error::BackendMismatch(a.backend(), b.backend())),
    }
}

impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Exact(a), Repr::Exact(b)) => a == b,
            (Repr::Float(a), Repr::Float(b)) => a.re == b.re && a.im == b.im,
            _ => false,
        }
    }
}

impl Default for Scalar {
    fn default() -> Self {
        Scalar::zero()
    }
}

macro_rules! from_int {
    ($($t:ty),*) => {$(
        impl From<$t> for Scalar {
            fn from(v: $t) -> Self {
                Scalar::from_rational(Rational::from(v))
            }
        }
    )*};
}
from_int!(i32, i64, u32, u64, usize);

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::from_rational(r)
    }
}

fn binop(
    a: &Scalar,
    b: &Scalar,
    fe: impl Fn(&ExactComplex, &ExactComplex) -> ExactComplex,
    ff: impl Fn(&FloatComplex, &FloatComplex, u32) -> FloatComplex,
) -> Scalar {
    match (&a.0, &b.0) {
        (Repr::Exact(x), Repr::Exact(y)) => Scalar(Repr::Exact(fe(x, y))),
        (Repr::Float(x), Repr::Float(y)) => {
            let p = x.prec().max(y.prec());
            Scalar(Repr::Float(ff(x, y, p)))
        }
        (Repr::Exact(x), Repr::Float(y)) => {
            let p = y.prec();
            Scalar(Repr::Float(ff(&x.to_float(p), y, p)))
        }
        (Repr::Float(x), Repr::Exact(y)) => {
            let p = x.prec();
            Scalar(Repr::Float(ff(x, &y.to_float(p), p)))
        }
    }
}

macro_rules! impl_binop {
    ($tr:ident, $m:ident, $ex:ident, $fl:ident, $atr:ident, $am:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                binop(self, rhs, ExactComplex::$ex, FloatComplex::$fl)
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                (&self).$m(rhs)
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                self.$m(&rhs)
            }
        }
        impl $atr<&Scalar> for Scalar {
            fn $am(&mut self, rhs: &Scalar) {
                *self = (&*self).$m(rhs);
            }
        }
        impl $atr<Scalar> for Scalar {
            fn $am(&mut self, rhs: Scalar) {
                *self = (&*self).$m(&rhs);
            }
        }
    };
}

impl_binop!(Add, add, add, add, AddAssign, add_assign);
impl_binop!(Sub, sub, sub, sub, SubAssign, sub_assign);
impl_binop!(Mul, mul, mul, mul, MulAssign, mul_assign);

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match &self.0 {
            Repr::Exact(e) => Scalar::exact_complex(Rational::from(-&e.re), Rational::from(-&e.im)),
            Repr::Float(f) => {
                let p = f.prec();
                Scalar(Repr::Float(FloatComplex {
                    re: Float::with_val(p, -&f.re),
                    im: Float::with_val(p, -&f.im),
                }))
            }
        }
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl Product for Scalar {
    fn product<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::one(), |acc, x| acc * x)
    }
}

fn fmt_float(f: &Float) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    f.to_string_radix(10, None)
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Exact(e) if e.is_real() => write!(f, "{}", e.re),
            Repr::Exact(e) => write!(f, "[{}, {}]", e.re, e.im),
            Repr::Float(x) if x.is_real() => write!(f, "{}", fmt_float(&x.re)),
            Repr::Float(x) => write!(f, "[{}, {}]", fmt_float(&x.re), fmt_float(&x.im)),
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.backend() {
            Backend::Exact => write!(f, "{self}"),
            Backend::BigFloat { precision } => write!(f, "{self}@{precision}"),
        }
    }
}

/// Parse an exact real: `"p/q"`, an integer, or a decimal such as `"-1.25e-3"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(Error::Parse(s.to_string()));
    }
    if let Ok(r) = Rational::from_str(t) {
        return Ok(r);
    }
    let (mant, exp) = match t.find(['e', 'E']) {
        Some(i) => {
            let e: i64 = t[i + 1..].parse().map_err(|_| Error::Parse(s.to_string()))?;
            (&t[..i], e)
        }
        None => (t, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(s.to_string()));
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(s.to_string()));
    }
    let digits = format!("{int_part}{frac_part}");
    let num = Integer::from_str(if digits.is_empty() { "0" } else { &digits })
        .map_err(|_| Error::Parse(s.to_string()))?;
    let scale = exp - frac_part.len() as i64;
    let mut r = Rational::from(num);
    if scale >= 0 {
        r *= Integer::from(Integer::u_pow_u(10, scale as u32));
    } else {
        r /= Integer::from(Integer::u_pow_u(10, (-scale) as u32));
    }
    if neg {
        r = -r;
    }
    Ok(r)
}

impl FromStr for Scalar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Scalar> {
        parse_rational(s).map(Scalar::from_rational)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RealRepr {
    Int(i64),
    Num(f64),
    Str(String),
}

impl RealRepr {
    fn to_rational(&self) -> Result<Rational> {
        match self {
            RealRepr::Int(i) => Ok(Rational::from(*i)),
            // Shortest round-trip decimal, read exactly: 0.1 means 1/10.
            RealRepr::Num(x) => parse_rational(&format!("{x:e}")),
            RealRepr::Str(s) => parse_rational(s),
        }
    }

    fn to_float(&self, prec: u32) -> Result<Float> {
        match self {
            RealRepr::Int(i) => Ok(Float::with_val(prec, *i)),
            RealRepr::Num(x) => Ok(Float::with_val(prec, *x)),
            RealRepr::Str(s) => Float::parse(s)
                .map(|p| Float::with_val(prec, p))
                .map_err(|_| Error::Parse(s.clone())),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ValueRepr {
    Real(RealRepr),
    Complex(RealRepr, RealRepr),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Float { value: ValueRepr, precision: u32 },
    Exact(ValueRepr),
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match &self.0 {
            Repr::Exact(e) if e.is_real() => ScalarRepr::Exact(ValueRepr::Real(RealRepr::Str(e.re.to_string()))),
            Repr::Exact(e) => ScalarRepr::Exact(ValueRepr::Complex(
                RealRepr::Str(e.re.to_string()),
                RealRepr::Str(e.im.to_string()),
            )),
            Repr::Float(f) => {
                let value = if f.is_real() {
                    ValueRepr::Real(RealRepr::Str(fmt_float(&f.re)))
                } else {
                    ValueRepr::Complex(RealRepr::Str(fmt_float(&f.re)), RealRepr::Str(fmt_float(&f.im)))
                };
                ScalarRepr::Float { value, precision: f.prec() }
            }
        };
        repr.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let repr = ScalarRepr::deserialize(de)?;
        let out = match repr {
            ScalarRepr::Exact(ValueRepr::Real(r)) => r.to_rational().map(Scalar::from_rational),
            ScalarRepr::Exact(ValueRepr::Complex(re, im)) => {
                re.to_rational().and_then(|re| im.to_rational().map(|im| Scalar::exact_complex(re, im)))
            }
            ScalarRepr::Float { value, precision } => {
                if precision < MIN_PRECISION {
                    return Err(D::Error::custom(format!(
                        "precision {precision} below minimum {MIN_PRECISION}"
                    )));
                }
                match value {
                    ValueRepr::Real(r) => r.to_float(precision).map(Scalar::from_float),
                    ValueRepr::Complex(re, im) => re
                        .to_float(precision)
                        .and_then(|re| im.to_float(precision).map(|im| Scalar::float_complex(re, im))),
                }
            }
        };
        out.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    #[test]
    fn approx_eq_identity_and_thresholds() {
        assert!(approx_eq(&q(1, 2), &q(1, 2), 0.3).unwrap());
        assert!(!approx_eq(&q(1, 2), &q(1, 3), 0.3).unwrap());

        let zero = Scalar::zero().to_precision(128);
        let tiny = Scalar::from_float(Float::with_val(128, Float::parse("1e-40").unwrap()));
        assert!(approx_eq(&zero, &tiny, 1e-30).unwrap());

        let one = Scalar::one().to_precision(128);
        let near = (Scalar::one() + q(1, 100_000)).to_precision(128);
        assert!(!approx_eq(&one, &near, 1e-30).unwrap());
    }

    #[test]
    fn approx_eq_rejects_mixed_backends() {
        let err = approx_eq(&Scalar::one(), &Scalar::one().to_precision(128), 1e-30).unwrap_err();
        assert!(matches!(err, Error::BackendMismatch(..)));
    }

    #[test]
    fn division_by_zero_is_an_error() {
        assert_eq!(Scalar::zero().recip().unwrap_err(), Error::DivisionByZero);
        assert_eq!(q(1, 2).checked_div(&Scalar::zero()).unwrap_err(), Error::DivisionByZero);
        let fz = Scalar::zero().to_precision(128);
        assert_eq!(Scalar::one().checked_div(&fz).unwrap_err(), Error::DivisionByZero);
        assert_eq!(Scalar::ratio(1, 0).unwrap_err(), Error::DivisionByZero);
    }

    #[test]
    fn exact_sqrt() {
        assert_eq!(q(9, 4).sqrt().unwrap(), q(3, 2));
        assert_eq!(q(-1, 4).sqrt().unwrap(), Scalar::i() * q(1, 2));
        // (1 + 2i)^2 = -3 + 4i
        let z = Scalar::exact_complex(Rational::from(-3), Rational::from(4));
        assert_eq!(z.sqrt().unwrap(), Scalar::exact_complex(Rational::from(1), Rational::from(2)));
        assert!(matches!(q(2, 1).sqrt(), Err(Error::NotRepresentable(_))));
    }

    #[test]
    fn float_sqrt_is_principal() {
        let z = Scalar::exact_complex(Rational::from(-3), Rational::from(-4)).to_precision(128);
        let r = z.sqrt().unwrap();
        let expected = Scalar::exact_complex(Rational::from(1), Rational::from(-2)).to_precision(128);
        assert!(approx_eq(&r, &expected, 1e-35).unwrap());
        let m = q(-4, 1).to_precision(128).sqrt().unwrap();
        assert!(approx_eq(&m, &(Scalar::i() * Scalar::from(2)).to_precision(128), 1e-35).unwrap());
    }

    #[test]
    fn mixed_arithmetic_promotes() {
        let x = Scalar::from_f64(0.5, 192) + q(1, 4);
        assert_eq!(x.backend(), Backend::BigFloat { precision: 192 });
        assert!(approx_eq(&x, &q(3, 4).to_precision(192), 1e-50).unwrap());
    }

    #[test]
    fn powi_negative() {
        assert_eq!(q(2, 3).powi(-3).unwrap(), q(27, 8));
        assert_eq!(q(2, 3).powi(0).unwrap(), Scalar::one());
        assert!(Scalar::zero().powi(-1).is_err());
    }

    #[test]
    fn parse_forms() {
        assert_eq!("3/4".parse::<Scalar>().unwrap(), q(3, 4));
        assert_eq!("-0.25".parse::<Scalar>().unwrap(), q(-1, 4));
        assert_eq!("1.5e-2".parse::<Scalar>().unwrap(), q(3, 200));
        assert_eq!("7".parse::<Scalar>().unwrap(), q(7, 1));
        assert!("abc".parse::<Scalar>().is_err());
    }

    #[test]
    fn json_encoding() {
        assert_eq!(serde_json::to_string(&q(3, 4)).unwrap(), "\"3/4\"");
        let z = Scalar::exact_complex(Rational::from((1, 2)), Rational::from(-1));
        assert_eq!(serde_json::to_string(&z).unwrap(), "[\"1/2\",\"-1\"]");
        let f = q(1, 4).to_precision(128);
        let s = serde_json::to_string(&f).unwrap();
        assert!(s.contains("\"precision\":128"), "{s}");
        let back: Scalar = serde_json::from_str(&s).unwrap();
        assert_eq!(back, f);
        let from_num: Scalar = serde_json::from_str("0.1").unwrap();
        assert_eq!(from_num, q(1, 10));
        let pair: Scalar = serde_json::from_str("[1, \"2/3\"]").unwrap();
        assert_eq!(pair, Scalar::exact_complex(Rational::from(1), Rational::from((2, 3))));
    }

    fn arb_exact() -> impl Strategy<Value = Scalar> {
        (-50i64..50, 1i64..20, -50i64..50, 1i64..20).prop_map(|(a, b, c, d)| {
            Scalar::exact_complex(Rational::from((a, b)), Rational::from((c, d)))
        })
    }

    proptest! {
        #[test]
        fn exact_field_axioms(a in arb_exact(), b in arb_exact(), c in arb_exact()) {
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            if !b.is_zero() {
                prop_assert_eq!(&a.checked_div(&b).unwrap() * &b, a.clone());
            }
        }

        #[test]
        fn exact_to_float_round_trip(a in arb_exact(), bits in 64u32..256) {
            let rounded = a.to_precision(bits).to_precision(bits + 64);
            let reference = a.to_precision(bits + 64);
            prop_assert!(approx_eq(&rounded, &reference, 2f64.powi(8 - bits as i32)).unwrap());
        }
    }
}
