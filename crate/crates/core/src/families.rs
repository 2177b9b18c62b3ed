//! Named orthogonal polynomial families, given by their recurrence
//! coefficients.
//!
//! The basic-hypergeometric families are normalized on `x(s) = (q^{-s} + q^s)/2`
//! and carried to a general q-quadratic lattice by `z → λ z + τ` with
//! `λ = 2√(c1c2)`, `τ = c3`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::scalar::{Backend, Scalar};
use crate::ttrr::Ttrr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    AskeyWilson,
    Meixner2,
    AlSalam,
    CdqHahn,
    QHermite,
    ChebyshevU,
}

impl FamilyName {
    pub const ALL: [FamilyName; 6] = [
        FamilyName::AskeyWilson,
        FamilyName::Meixner2,
        FamilyName::AlSalam,
        FamilyName::CdqHahn,
        FamilyName::QHermite,
        FamilyName::ChebyshevU,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyName::AskeyWilson => "askey_wilson",
            FamilyName::Meixner2 => "meixner2",
            FamilyName::AlSalam => "al_salam",
            FamilyName::CdqHahn => "cdq_hahn",
            FamilyName::QHermite => "q_hermite",
            FamilyName::ChebyshevU => "chebyshev_u",
        }
    }

    /// Number of family parameters.
    pub fn arity(self) -> usize {
        match self {
            FamilyName::AskeyWilson => 4,
            FamilyName::Meixner2 | FamilyName::AlSalam => 2,
            FamilyName::CdqHahn => 3,
            FamilyName::QHermite | FamilyName::ChebyshevU => 0,
        }
    }
}

impl fmt::Display for FamilyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FamilyName {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FamilyName::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown family {s:?}")))
    }
}

/// A family with its parameters. `base` overrides the basic-hypergeometric
/// base, which otherwise is the lattice's `q`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilySpec {
    pub name: FamilyName,
    #[serde(default)]
    pub params: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<Scalar>,
}

impl FamilySpec {
    pub fn new(name: FamilyName, params: Vec<Scalar>) -> Result<FamilySpec> {
        if params.len() != name.arity() {
            return Err(Error::InvalidInput(format!(
                "{name} takes {} parameters, got {}",
                name.arity(),
                params.len()
            )));
        }
        Ok(FamilySpec { name, params, base: None })
    }

    pub fn with_base(mut self, base: Scalar) -> FamilySpec {
        self.base = Some(base);
        self
    }

    pub fn askey_wilson(a: [Scalar; 4]) -> FamilySpec {
        FamilySpec { name: FamilyName::AskeyWilson, params: a.to_vec(), base: None }
    }

    pub fn meixner2(b1: Scalar, b2: Scalar) -> FamilySpec {
        FamilySpec { name: FamilyName::Meixner2, params: vec![b1, b2], base: None }
    }

    pub fn al_salam(a: Scalar, b: Scalar) -> FamilySpec {
        FamilySpec { name: FamilyName::AlSalam, params: vec![a, b], base: None }
    }

    pub fn cdq_hahn(a: Scalar, b: Scalar, c: Scalar) -> FamilySpec {
        FamilySpec { name: FamilyName::CdqHahn, params: vec![a, b, c], base: None }
    }

    pub fn q_hermite() -> FamilySpec {
        FamilySpec { name: FamilyName::QHermite, params: vec![], base: None }
    }

    pub fn chebyshev_u() -> FamilySpec {
        FamilySpec { name: FamilyName::ChebyshevU, params: vec![], base: None }
    }
}

fn restriction(spec: &FamilySpec, n: usize) -> Error {
    Error::Restriction { family: spec.name.to_string(), n }
}

/// `(B_n, C_n)` for `n ≤ N`. Meixner-2 ignores the lattice; the other
/// families need `c1c2 ≠ 0` and are mapped onto the lattice.
pub fn family_ttrr(spec: &FamilySpec, lat: &Lattice, n_max: usize) -> Result<Ttrr> {
    if spec.params.len() != spec.name.arity() {
        return Err(Error::InvalidInput(format!(
            "{} takes {} parameters, got {}",
            spec.name,
            spec.name.arity(),
            spec.params.len()
        )));
    }
    let backend = lat.backend();
    let p = spec.params.iter().map(|x| x.to_backend(backend)).collect::<Result<Vec<_>>>()?;
    if spec.name == FamilyName::Meixner2 {
        return meixner2(spec, &p[0], &p[1], n_max);
    }
    if !lat.is_q() || lat.c1c2().is_zero() {
        return Err(Error::InvalidInput(format!("{} lives on a q-quadratic lattice", spec.name)));
    }
    let raw = {
        let q = match &spec.base {
            Some(b) => b.to_backend(backend)?,
            None => lat.q().clone(),
        };
        let zero = Scalar::zero();
        match spec.name {
            FamilyName::AskeyWilson => askey_wilson(spec, &q, [&p[0], &p[1], &p[2], &p[3]], n_max)?,
            FamilyName::AlSalam => al_salam(spec, &q, &p[0], &p[1], n_max)?,
            FamilyName::QHermite => al_salam(spec, &q, &zero, &zero, n_max)?,
            FamilyName::CdqHahn => cdq_hahn(spec, &q, &p[0], &p[1], &p[2], n_max)?,
            FamilyName::ChebyshevU => {
                let quarter = Scalar::ratio(1, 4)?.to_backend(backend)?;
                Ttrr::from_fn(n_max, |_| Ok(Scalar::zero()), |_| Ok(quarter.clone()))?
            }
            FamilyName::Meixner2 => unreachable!(),
        }
    };
    affine_to_lattice(&raw, lat)
}

/// `B → λB + c3`, `C → λ²C` with `λ² = 4c1c2`. `λ` itself is only needed
/// when some `B_n ≠ 0`, so symmetric families stay exact even when `√(c1c2)`
/// is irrational.
fn affine_to_lattice(raw: &Ttrr, lat: &Lattice) -> Result<Ttrr> {
    let lambda2 = &Scalar::from(4) * &lat.c1c2();
    let c3 = lat.c3();
    let b = if raw.b.iter().all(Scalar::is_zero) {
        vec![c3; raw.b.len()]
    } else {
        let lambda = lambda2.sqrt()?;
        raw.b.iter().map(|b| &(&lambda * b) + &c3).collect()
    };
    Ttrr::new(b, raw.c.iter().map(|c| &lambda2 * c).collect())
}

fn check_c(spec: &FamilySpec, t: Ttrr) -> Result<Ttrr> {
    match t.first_vanishing_c() {
        Some(n) => Err(restriction(spec, n)),
        None => Ok(t),
    }
}

fn meixner2(spec: &FamilySpec, b1: &Scalar, b2: &Scalar, n_max: usize) -> Result<Ttrr> {
    if (&(b1 * b1) + &Scalar::one()).is_zero() {
        return Err(restriction(spec, 0));
    }
    if let Some(r) = b2.as_rational() {
        if r.is_integer() && *r <= 0 {
            return Err(restriction(spec, 0));
        }
    }
    let k = &(b1 * b1) + &Scalar::one();
    let t = Ttrr::from_fn(
        n_max,
        |n| Ok(-(b1 * &(&Scalar::from(2 * n as i64) + b2))),
        |n| {
            let nn = Scalar::from(n as i64);
            Ok(&(&k * &nn) * &(&(&nn + b2) - &Scalar::one()))
        },
    )?;
    check_c(spec, t)
}

fn al_salam(spec: &FamilySpec, q: &Scalar, a: &Scalar, b: &Scalar, n_max: usize) -> Result<Ttrr> {
    let half = Scalar::ratio(1, 2)?;
    let quarter = Scalar::ratio(1, 4)?;
    let ab = a * b;
    let one = Scalar::one();
    let t = Ttrr::from_fn(
        n_max,
        |n| Ok(&(&(a + b) * &q.powi(n as i64)?) * &half),
        |n| {
            let m = n as i64 - 1;
            Ok(&(&(&one - &(&ab * &q.powi(m)?)) * &(&one - &q.powi(m + 1)?)) * &quarter)
        },
    )?;
    check_c(spec, t)
}

/// Continuous dual q-Hahn: `B_n = a_n`, `C_{n+1} = b_n` with
/// `a_n = (a + 1/a − a(1−qⁿ)(1−bcq^{n−1}) − (1−abqⁿ)(1−acqⁿ)/a)/2` and
/// `b_n = (1−abqⁿ)(1−acqⁿ)(1−bcqⁿ)(1−q^{n+1})/4`.
fn cdq_hahn(spec: &FamilySpec, q: &Scalar, a: &Scalar, b: &Scalar, c: &Scalar, n_max: usize) -> Result<Ttrr> {
    let one = Scalar::one();
    let a_inv = a.recip()?;
    let (ab, ac, bc) = (a * b, a * c, b * c);
    let om = |x: &Scalar, k: i64| -> Result<Scalar> { Ok(&one - &(x * &q.powi(k)?)) };
    let t = Ttrr::from_fn(
        n_max,
        |n| {
            let n = n as i64;
            let t1 = &(a * &om(&one, n)?) * &om(&bc, n - 1)?;
            let t2 = &(&om(&ab, n)? * &om(&ac, n)?) * &a_inv;
            (&(&(a + &a_inv) - &t1) - &t2).checked_div(&Scalar::from(2))
        },
        |n| {
            let m = n as i64 - 1;
            let p = &(&(&om(&ab, m)? * &om(&ac, m)?) * &om(&bc, m)?) * &om(&one, m + 1)?;
            p.checked_div(&Scalar::from(4))
        },
    )?;
    check_c(spec, t)
}

/// Monic Askey–Wilson coefficients with `A = a1a2a3a4`:
/// `B_n = ½[a1 + 1/a1 − (1−a1a2qⁿ)(1−a1a3qⁿ)(1−a1a4qⁿ)(1−Aq^{n−1}) / (a1(1−Aq^{2n−1})(1−Aq^{2n}))
///          − a1(1−qⁿ)(1−a2a3q^{n−1})(1−a2a4q^{n−1})(1−a3a4q^{n−1}) / ((1−Aq^{2n−1})(1−Aq^{2n−2}))]`,
/// `C_{n+1} = (1−q^{n+1})(1−Aq^{n−1}) ∏_{i<j}(1−a_ia_jqⁿ) / (4(1−Aq^{2n−1})(1−Aq^{2n})²(1−Aq^{2n+1}))`.
/// At `n = 0` the factor `(1−Aq^{−1})` cancels and the `(1−qⁿ)` term
/// vanishes; both are dropped rather than evaluated.
fn askey_wilson(spec: &FamilySpec, q: &Scalar, a: [&Scalar; 4], n_max: usize) -> Result<Ttrr> {
    let one = Scalar::one();
    let big_a = &(&(a[0] * a[1]) * a[2]) * a[3];
    let pairs = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
    let om = |x: &Scalar, k: i64| -> Result<Scalar> { Ok(&one - &(x * &q.powi(k)?)) };
    let zero_at = |x: &Scalar, n: usize| -> Result<Scalar> {
        if x.is_zero() || x.is_negligible(1.0, x.backend().zero_tolerance()) {
            Err(restriction(spec, n))
        } else {
            Ok(x.clone())
        }
    };
    // Printed restrictions: (1 − A qⁿ) and every (1 − a_i a_j qⁿ) nonzero.
    for n in 0..=n_max {
        let k = n as i64;
        zero_at(&om(&big_a, k)?, n)?;
        for (i, j) in pairs {
            zero_at(&om(&(a[i] * a[j]), k)?, n)?;
        }
    }
    let mut b = Vec::with_capacity(n_max + 1);
    let mut c = vec![Scalar::zero()];
    for n in 0..=n_max {
        let k = n as i64;
        let first_num = &(&om(&(a[0] * a[1]), k)? * &om(&(a[0] * a[2]), k)?) * &om(&(a[0] * a[3]), k)?;
        let first = if n == 0 {
            first_num.checked_div(&(a[0] * &zero_at(&om(&big_a, 0)?, n)?))?
        } else {
            let den = &(a[0] * &zero_at(&om(&big_a, 2 * k - 1)?, n)?) * &zero_at(&om(&big_a, 2 * k)?, n)?;
            (&first_num * &om(&big_a, k - 1)?).checked_div(&den)?
        };
        let second = if n == 0 {
            Scalar::zero()
        } else {
            let num = &(&(&(a[0] * &om(&one, k)?) * &om(&(a[1] * a[2]), k - 1)?) * &om(&(a[1] * a[3]), k - 1)?)
                * &om(&(a[2] * a[3]), k - 1)?;
            let den = &zero_at(&om(&big_a, 2 * k - 1)?, n)? * &zero_at(&om(&big_a, 2 * k - 2)?, n)?;
            num.checked_div(&den)?
        };
        let bn = &(&(&(a[0] + &a[0].recip()?) - &first) - &second) * &Scalar::ratio(1, 2)?;
        b.push(bn);
        if n < n_max {
            let mut num = om(&one, k + 1)?;
            for (i, j) in pairs {
                num = &num * &om(&(a[i] * a[j]), k)?;
            }
            let mid = zero_at(&om(&big_a, 2 * k)?, n)?;
            let mut den = &(&Scalar::from(4) * &mid) * &mid;
            den = &den * &zero_at(&om(&big_a, 2 * k + 1)?, n)?;
            if n > 0 {
                num = &num * &om(&big_a, k - 1)?;
                den = &den * &zero_at(&om(&big_a, 2 * k - 1)?, n)?;
            }
            c.push(num.checked_div(&den)?);
        }
    }
    check_c(spec, Ttrr::new(b, c)?)
}

/// Bigfloat precision that holds the family's parameters: the largest
/// parameter precision, or the lattice's.
pub fn spec_backend(spec: &FamilySpec, lat: &Lattice) -> Backend {
    spec.params
        .iter()
        .chain(spec.base.iter())
        .map(Scalar::backend)
        .chain(std::iter::once(lat.backend()))
        .max_by_key(|b| b.precision().unwrap_or(0))
        .unwrap_or(Backend::Exact)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{pearson_moments, ttrr_oracle};
    use crate::operators::dx;
    use crate::polynomial::Polynomial;
    use crate::ttrr::build_ops;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    fn aw_lattice(q: Scalar) -> Lattice {
        Lattice::askey_wilson(q).unwrap()
    }

    #[test]
    fn printed_examples() {
        let lat = aw_lattice(s(4, 1));
        let t = family_ttrr(&FamilySpec::al_salam(s(1, 3), s(2, 5)), &lat, 6).unwrap();
        for n in 0..=6 {
            let expected = &(&s(11, 15) * &s(4, 1).powi(n as i64).unwrap()) * &s(1, 2);
            assert_eq!(t.b[n], expected);
        }
        let m = family_ttrr(&FamilySpec::meixner2(s(1, 2), s(3, 1)), &lat, 6).unwrap();
        for n in 0..6usize {
            let nn = n as i64;
            assert_eq!(m.c[n + 1], &s(5, 4) * &Scalar::from((nn + 1) * (nn + 3)));
        }
        let h = family_ttrr(&FamilySpec::q_hermite(), &lat, 2).unwrap();
        assert_eq!(h.c[1], s(-3, 4));
    }

    #[test]
    fn restrictions() {
        let lat = aw_lattice(s(4, 1));
        assert!(matches!(
            family_ttrr(&FamilySpec::meixner2(s(1, 1), s(-2, 1)), &lat, 4),
            Err(Error::Restriction { .. })
        ));
        // a1 a2 = 1 zeroes (1 − a1a2 q⁰).
        let aw = FamilySpec::askey_wilson([s(2, 1), s(1, 2), s(1, 3), s(1, 5)]);
        assert_eq!(family_ttrr(&aw, &lat, 4).unwrap_err(), Error::Restriction { family: "askey_wilson".into(), n: 0 });
        // Al-Salam with ab = q^{-2} has C_3 = 0.
        let al = FamilySpec::al_salam(s(1, 4), s(1, 4));
        assert!(matches!(family_ttrr(&al, &lat, 6), Err(Error::Restriction { n: 3, .. })));
    }

    #[test]
    fn askey_wilson_lowering() {
        // D_q Q_n(·; a) = γ_n Q_{n−1}(·; a q^{1/2}) on x = (q^{-s}+q^s)/2.
        let lat = aw_lattice(s(4, 1));
        let a = [s(1, 3), s(2, 5), s(-1, 2), s(3, 7)];
        let up = a.clone().map(|x| &x * &s(2, 1));
        let p = build_ops(&lat, &family_ttrr(&FamilySpec::askey_wilson(a), &lat, 6).unwrap(), 6).unwrap();
        let p2 = build_ops(&lat, &family_ttrr(&FamilySpec::askey_wilson(up), &lat, 6).unwrap(), 6).unwrap();
        for n in 1..=6 {
            assert_eq!(dx(&lat, p.p(n)), p2.p(n - 1).scale(&lat.gamma_at(n)), "n = {n}");
        }
    }

    #[test]
    fn q_hermite_is_orthogonal_for_its_pearson_moments() {
        let lat = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap();
        let t = family_ttrr(&FamilySpec::q_hermite(), &lat, 7).unwrap();
        let w = lat.sqrt_q();
        let u = (w - &w.recip().unwrap()).recip().unwrap();
        let aa = -(&Scalar::from(2) * &u).recip().unwrap();
        let phi = &Polynomial::linear_factor(&lat.c3()).pow(2).scale(&aa)
            - &Polynomial::constant(&(&aa + lat.alpha()) * &t.c[1]);
        let mu = pearson_moments(&lat, &phi, &Polynomial::linear_factor(&lat.c3()), s(1, 1), 15).unwrap();
        assert!(ttrr_oracle(&mu, 7).unwrap().same_as(&t));
        let ops = build_ops(&lat, &t, 6).unwrap();
        for i in 0..=6 {
            for j in 0..i {
                assert!(mu.apply(&(ops.p(i) * ops.p(j))).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn cdq_hahn_is_an_askey_wilson_limit() {
        // a4 = 0 turns Askey–Wilson into the continuous dual q-Hahn family.
        let lat = aw_lattice(s(1, 4));
        let (a, b, c) = (s(1, 3), s(-2, 5), s(3, 7));
        let h = family_ttrr(&FamilySpec::cdq_hahn(a.clone(), b.clone(), c.clone()), &lat, 6).unwrap();
        let aw = family_ttrr(&FamilySpec::askey_wilson([a, b, c, s(0, 1)]), &lat, 6).unwrap();
        assert!(h.same_as(&aw));
    }
}
