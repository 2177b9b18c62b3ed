//! Dense univariate polynomials in `z` over [`Scalar`].
//!
//! Coefficients are stored lowest degree first and trailing exact zeros are
//! always trimmed, so the zero polynomial is the empty vector.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scalar::{Backend, Scalar};

#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<Scalar>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Polynomial::constant(Scalar::one())
    }

    pub fn constant(c: Scalar) -> Self {
        Polynomial::from_coeffs(vec![c])
    }

    /// The identity polynomial `z`.
    pub fn z() -> Self {
        Polynomial::monomial(1, Scalar::one())
    }

    /// `c · z^n`.
    pub fn monomial(n: usize, c: Scalar) -> Self {
        let mut v = vec![Scalar::zero(); n];
        v.push(c);
        Polynomial::from_coeffs(v)
    }

    /// `z − r`.
    pub fn linear_factor(r: &Scalar) -> Self {
        Polynomial::from_coeffs(vec![-r, Scalar::one()])
    }

    pub fn from_coeffs(mut coeffs: Vec<Scalar>) -> Self {
        while coeffs.last().is_some_and(Scalar::is_zero) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    /// Build from small integers, lowest degree first.
    pub fn from_ints(c: &[i64]) -> Self {
        Polynomial::from_coeffs(c.iter().map(|&v| Scalar::from(v)).collect())
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Scalar> {
        self.coeffs
    }

    /// Coefficient of `z^k` (zero beyond the degree).
    pub fn coeff(&self, k: usize) -> Scalar {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Degree with the `−1` sentinel for the zero polynomial.
    pub fn degree_i64(&self) -> i64 {
        self.coeffs.len() as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn leading(&self) -> Scalar {
        self.coeffs.last().cloned().unwrap_or_default()
    }

    /// Backend of the highest-precision coefficient (exact if all are exact).
    pub fn backend(&self) -> Backend {
        let mut out = Backend::Exact;
        for c in &self.coeffs {
            if let Backend::BigFloat { precision } = c.backend() {
                if out.precision().is_none_or(|p| p < precision) {
                    out = Backend::BigFloat { precision };
                }
            }
        }
        out
    }

    pub fn to_precision(&self, prec: u32) -> Polynomial {
        Polynomial::from_coeffs(self.coeffs.iter().map(|c| c.to_precision(prec)).collect())
    }

    pub fn to_backend(&self, backend: Backend) -> Result<Polynomial> {
        Ok(Polynomial::from_coeffs(
            self.coeffs.iter().map(|c| c.to_backend(backend)).collect::<Result<_>>()?,
        ))
    }

    /// Horner evaluation.
    pub fn eval(&self, z: &Scalar) -> Scalar {
        let mut acc = Scalar::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * z) + c;
        }
        acc
    }

    pub fn scale(&self, c: &Scalar) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero();
        }
        Polynomial::from_coeffs(self.coeffs.iter().map(|x| x * c).collect())
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::from_coeffs(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * &Scalar::from(k))
                .collect(),
        )
    }

    /// `p(λ z + τ)`.
    pub fn compose_affine(&self, lambda: &Scalar, tau: &Scalar) -> Polynomial {
        let inner = Polynomial::from_coeffs(vec![tau.clone(), lambda.clone()]);
        let mut acc = Polynomial::zero();
        for c in self.coeffs.iter().rev() {
            acc = &(&acc * &inner) + &Polynomial::constant(c.clone());
        }
        acc
    }

    /// Quotient and remainder of division by `z − r` (synthetic division).
    pub fn div_rem_linear(&self, r: &Scalar) -> (Polynomial, Scalar) {
        let n = self.coeffs.len();
        if n == 0 {
            return (Polynomial::zero(), Scalar::zero());
        }
        let mut q = vec![Scalar::zero(); n - 1];
        let mut carry = Scalar::zero();
        for k in (0..n).rev() {
            let v = &self.coeffs[k] + &(&carry * r);
            if k == 0 {
                carry = v;
            } else {
                q[k - 1] = v.clone();
                carry = v;
            }
        }
        (Polynomial::from_coeffs(q), carry)
    }

    /// Exact division by `z − r`. On the bigfloat backend a remainder that is
    /// negligible relative to the coefficients is accepted.
    pub fn div_linear(&self, r: &Scalar) -> Result<Polynomial> {
        let (q, rem) = self.div_rem_linear(r);
        let tol = self.backend().zero_tolerance();
        if rem.is_negligible(self.max_abs_coeff(), tol) {
            Ok(q)
        } else {
            Err(Error::NonzeroRemainder)
        }
    }

    /// `max_k |c_k|` as `f64` (0 for the zero polynomial).
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(Scalar::abs_f64).fold(0.0, f64::max)
    }

    /// Unique polynomial of degree `< points.len()` through all points, by
    /// Newton divided differences.
    pub fn interpolate(points: &[(Scalar, Scalar)]) -> Result<Polynomial> {
        if points.is_empty() {
            return Err(Error::EmptyInterpolation);
        }
        let zs: Vec<&Scalar> = points.iter().map(|(z, _)| z).collect();
        let mut dd: Vec<Scalar> = points.iter().map(|(_, w)| w.clone()).collect();
        let n = dd.len();
        for j in 1..n {
            for i in (j..n).rev() {
                let den = zs[i] - zs[i - j];
                if den.is_zero() {
                    return Err(Error::DuplicateNode);
                }
                dd[i] = (&dd[i] - &dd[i - 1]).checked_div(&den)?;
            }
        }
        let mut coeffs = vec![Scalar::zero(); n];
        coeffs[0] = dd[n - 1].clone();
        // acc := acc · (z − z_k) + dd[k], for k = n−2 down to 0
        for k in (0..n - 1).rev() {
            let zk = zs[k];
            let len = n - 1 - k;
            let mut next = vec![Scalar::zero(); len + 1];
            for (i, c) in coeffs[..len].iter().enumerate() {
                next[i + 1] = &next[i + 1] + c;
                next[i] = &next[i] - &(c * zk);
            }
            next[0] = &next[0] + &dd[k];
            coeffs[..=len].clone_from_slice(&next);
        }
        Ok(Polynomial::from_coeffs(coeffs))
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut acc = Polynomial::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl Add<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| &self.coeff(k) + &rhs.coeff(k)).collect())
    }
}

impl Sub<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        Polynomial::from_coeffs((0..n).map(|k| &self.coeff(k) - &rhs.coeff(k)).collect())
    }
}

impl Mul<&Polynomial> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![Scalar::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::from_coeffs(out)
    }
}

impl Mul<&Scalar> for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Scalar) -> Polynomial {
        self.scale(rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }
}

macro_rules! owned_ops {
    ($tr:ident, $m:ident) => {
        impl $tr<Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Polynomial> for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: &Polynomial) -> Polynomial {
                (&self).$m(rhs)
            }
        }
        impl $tr<Polynomial> for &Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                self.$m(&rhs)
            }
        }
    };
}
owned_ops!(Add, add);
owned_ops!(Sub, sub);
owned_ops!(Mul, mul);

impl Neg for Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        -&self
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "({c})·z")?,
                _ => write!(f, "({c})·z^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl Serialize for Polynomial {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.coeffs.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Vec::<Scalar>::deserialize(de).map(Polynomial::from_coeffs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    #[test]
    fn interpolate_line_and_square() {
        let p = Polynomial::interpolate(&[(s(0, 1), s(1, 1)), (s(1, 1), s(2, 1))]).unwrap();
        assert_eq!(p, Polynomial::from_ints(&[1, 1]));
        let pts: Vec<_> = [-1i64, 2, 5].iter().map(|&t| (s(t, 1), s(t * t, 1))).collect();
        assert_eq!(Polynomial::interpolate(&pts).unwrap(), Polynomial::from_ints(&[0, 0, 1]));
    }

    #[test]
    fn interpolate_errors() {
        assert_eq!(Polynomial::interpolate(&[]).unwrap_err(), Error::EmptyInterpolation);
        let dup = [(s(1, 2), s(1, 1)), (s(1, 2), s(3, 1))];
        assert_eq!(Polynomial::interpolate(&dup).unwrap_err(), Error::DuplicateNode);
    }

    #[test]
    fn zero_polynomial_has_sentinel_degree() {
        assert_eq!(Polynomial::zero().degree_i64(), -1);
        assert_eq!(Polynomial::from_ints(&[0, 0, 0]).degree(), None);
        assert_eq!(Polynomial::from_ints(&[1, 2, 0]).degree(), Some(1));
    }

    #[test]
    fn linear_division() {
        let p = Polynomial::linear_factor(&s(2, 3)) * Polynomial::from_ints(&[1, -4, 7]);
        assert_eq!(p.div_linear(&s(2, 3)).unwrap(), Polynomial::from_ints(&[1, -4, 7]));
        assert_eq!(p.div_linear(&s(1, 3)).unwrap_err(), Error::NonzeroRemainder);
    }

    #[test]
    fn affine_composition() {
        // (2z + 1)^2 = 4z^2 + 4z + 1
        let sq = Polynomial::from_ints(&[0, 0, 1]);
        assert_eq!(sq.compose_affine(&s(2, 1), &s(1, 1)), Polynomial::from_ints(&[1, 4, 4]));
    }

    #[test]
    fn json_is_coefficient_array() {
        let p = Polynomial::from_coeffs(vec![s(1, 2), s(0, 1), s(-3, 1)]);
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"["1/2","0","-3"]"#);
        let back: Polynomial = serde_json::from_str(r#"["1/2", 0, -3, 0]"#).unwrap();
        assert_eq!(back, p);
    }

    fn arb_poly(max_deg: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec((-20i64..20, 1i64..9), 0..=max_deg + 1).prop_map(|v| {
            Polynomial::from_coeffs(v.into_iter().map(|(n, d)| s(n, d)).collect())
        })
    }

    proptest! {
        #[test]
        fn interpolation_round_trip(p in arb_poly(5)) {
            let pts: Vec<_> = (0..6i64).map(|t| { let z = s(2 * t - 3, 3); (z.clone(), p.eval(&z)) }).collect();
            prop_assert_eq!(Polynomial::interpolate(&pts).unwrap(), p);
        }

        #[test]
        fn ring_axioms(a in arb_poly(8), b in arb_poly(8), c in arb_poly(8)) {
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a + &b) - &b, a.clone());
            prop_assert_eq!(&a * &b, &b * &a);
        }

        #[test]
        fn linear_factor_division(a in arb_poly(8), r in (-9i64..9, 1i64..5)) {
            let r = s(r.0, r.1);
            let p = &a * &Polynomial::linear_factor(&r);
            prop_assert_eq!(p.div_linear(&r).unwrap(), a);
        }
    }
}
