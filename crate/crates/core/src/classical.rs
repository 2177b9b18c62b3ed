//! Classical functionals: `D_x(φ u) = S_x(ψ u)` with `deg φ ≤ 2`, `deg ψ ≤ 1`.
//!
//! Admissibility, the iterated pairs `(φ^[k], ψ^[k])`, the regularity
//! criterion, closed-form recurrence coefficients, the tower `u^[k]`, the
//! functional Rodrigues formula and the large-`n` behaviour of `B_n`, `C_n`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{pearson_moments, MomentFunctional};
use crate::lattice::Lattice;
use crate::operators::{dx, sx, Residual};
use crate::polynomial::Polynomial;
use crate::scalar::{Backend, Scalar};
use crate::ttrr::{build_ops, Ttrr};

/// `φ = a z² + b z + c`, `ψ = d z + e`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PearsonPair {
    pub a: Scalar,
    pub b: Scalar,
    pub c: Scalar,
    pub d: Scalar,
    pub e: Scalar,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PairRepr {
    a: Option<Scalar>,
    b: Option<Scalar>,
    c: Option<Scalar>,
    d: Option<Scalar>,
    e: Option<Scalar>,
    phi: Option<Polynomial>,
    psi: Option<Polynomial>,
}

impl<'de> Deserialize<'de> for PearsonPair {
    /// Either `{"a", "b", "c", "d", "e"}` (missing entries are 0) or
    /// `{"phi": [c, b, a], "psi": [e, d]}` with ascending coefficients.
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = PairRepr::deserialize(de)?;
        let pair = if r.phi.is_some() || r.psi.is_some() {
            if [&r.a, &r.b, &r.c, &r.d, &r.e].iter().any(|x| x.is_some()) {
                return Err(D::Error::custom("give either a..e or phi/psi, not both"));
            }
            PearsonPair::from_polys(&r.phi.unwrap_or_default(), &r.psi.unwrap_or_default())
        } else {
            let z = || Scalar::zero();
            PearsonPair::new(
                r.a.unwrap_or_else(z),
                r.b.unwrap_or_else(z),
                r.c.unwrap_or_else(z),
                r.d.unwrap_or_else(z),
                r.e.unwrap_or_else(z),
            )
        };
        pair.map_err(D::Error::custom)
    }
}

impl PearsonPair {
    pub fn new(a: Scalar, b: Scalar, c: Scalar, d: Scalar, e: Scalar) -> Result<PearsonPair> {
        if [&a, &b, &c, &d, &e].iter().all(|x| x.is_zero()) {
            return Err(Error::InvalidInput("(φ, ψ) = (0, 0)".into()));
        }
        Ok(PearsonPair { a, b, c, d, e })
    }

    pub fn from_polys(phi: &Polynomial, psi: &Polynomial) -> Result<PearsonPair> {
        if phi.degree_i64() > 2 || psi.degree_i64() > 1 {
            return Err(Error::InvalidInput("need deg φ ≤ 2 and deg ψ ≤ 1".into()));
        }
        PearsonPair::new(phi.coeff(2), phi.coeff(1), phi.coeff(0), psi.coeff(1), psi.coeff(0))
    }

    pub fn phi(&self) -> Polynomial {
        Polynomial::from_coeffs(vec![self.c.clone(), self.b.clone(), self.a.clone()])
    }

    pub fn psi(&self) -> Polynomial {
        Polynomial::from_coeffs(vec![self.e.clone(), self.d.clone()])
    }

    pub fn to_backend(&self, backend: Backend) -> Result<PearsonPair> {
        Ok(PearsonPair {
            a: self.a.to_backend(backend)?,
            b: self.b.to_backend(backend)?,
            c: self.c.to_backend(backend)?,
            d: self.d.to_backend(backend)?,
            e: self.e.to_backend(backend)?,
        })
    }
}

/// `d_n = a γ_n + d α_n` (`q ≠ 1`) or `a n + d` (`q = 1`). Index −1 uses
/// `γ_{−1} = −1`, `α_{−1} = α`.
pub fn d_n(lat: &Lattice, pair: &PearsonPair, n: i64) -> Result<Scalar> {
    if lat.is_q() {
        Ok(&(&pair.a * &lat.gamma_n(n)?) + &(&pair.d * &lat.alpha_n(n)?))
    } else {
        Ok(&(&pair.a * &Scalar::from(n)) + &pair.d)
    }
}

/// `e_n = φ'(c3) γ_n + ψ(c3) α_n` (`q ≠ 1`) or `b n + e + 2β d n²` (`q = 1`).
pub fn e_n(lat: &Lattice, pair: &PearsonPair, n: i64) -> Result<Scalar> {
    if lat.is_q() {
        let c3 = lat.c3();
        let fp = pair.phi().derivative().eval(&c3);
        let pv = pair.psi().eval(&c3);
        Ok(&(&fp * &lat.gamma_n(n)?) + &(&pv * &lat.alpha_n(n)?))
    } else {
        let nn = Scalar::from(n);
        let two_beta_d = &(&Scalar::from(2) * lat.beta()) * &pair.d;
        Ok(&(&(&pair.b * &nn) + &pair.e) + &(&two_beta_d * &(&nn * &nn)))
    }
}

fn is_zero_on(x: &Scalar, scale: f64, backend: Backend) -> bool {
    x.is_zero() || x.is_negligible(scale, backend.zero_tolerance())
}

/// The values `d_0..d_N` and the first `n` with `d_n = 0`.
#[derive(Debug, Clone, Serialize)]
pub struct Admissibility {
    pub d: Vec<Scalar>,
    pub first_failure: Option<usize>,
}

impl Admissibility {
    pub fn passes(&self) -> bool {
        self.first_failure.is_none()
    }
}

/// `d_0..d_N`, cross-checked against `γ_n φ''/2 + α_n ψ'`.
pub fn admissibility(lat: &Lattice, pair: &PearsonPair, n_max: usize) -> Result<Admissibility> {
    let backend = lat.backend();
    let half_phi2 = pair.phi().derivative().derivative().coeff(0).checked_div(&Scalar::from(2))?;
    let psi1 = pair.psi().derivative().coeff(0);
    let scale = pair.a.abs_f64().max(pair.d.abs_f64());
    let mut d = Vec::with_capacity(n_max + 1);
    let mut first_failure = None;
    for n in 0..=n_max {
        let dn = d_n(lat, pair, n as i64)?;
        let other = &(&half_phi2 * &lat.gamma_at(n)) + &(&psi1 * &lat.alpha_at(n));
        let gap = &dn - &other;
        if !is_zero_on(&gap, scale * lat.alpha_at(n).abs_f64().max(1.0), backend) {
            return Err(Error::Inconsistent { what: "d_n".into(), k: n, residual: gap.abs_f64() });
        }
        if first_failure.is_none() && is_zero_on(&dn, scale, backend) {
            first_failure = Some(n);
        }
        d.push(dn);
    }
    Ok(Admissibility { d, first_failure })
}

/// `(φ^[k], ψ^[k])` from the recursion
/// `φ^[k+1] = Sφ^[k] + U1 Sψ^[k] + α U2 Dψ^[k]`,
/// `ψ^[k+1] = Dφ^[k] + α Sψ^[k] + U1 Dψ^[k]`.
pub fn iterated_pair_recursive(lat: &Lattice, pair: &PearsonPair, k: usize) -> (Polynomial, Polynomial) {
    let (u1, u2) = lat.u_polys();
    let alpha = lat.alpha();
    let mut phi = pair.phi().to_backend(lat.backend()).unwrap_or_else(|_| pair.phi());
    let mut psi = pair.psi().to_backend(lat.backend()).unwrap_or_else(|_| pair.psi());
    for _ in 0..k {
        let (sphi, dphi) = (sx(lat, &phi), dx(lat, &phi));
        let (spsi, dpsi) = (sx(lat, &psi), dx(lat, &psi));
        let next_phi = &(&sphi + &(u1 * &spsi)) + &(u2 * &dpsi).scale(alpha);
        let next_psi = &(&dphi + &spsi.scale(alpha)) + &(u1 * &dpsi);
        phi = next_phi;
        psi = next_psi;
    }
    (phi, psi)
}

/// Closed forms of `(φ^[k], ψ^[k])`.
///
/// `q ≠ 1`: `ψ^[k] = d_{2k}(z − c3) + e_k` and
/// `φ^[k] = (d(α²−1)γ_{2k} + a α_{2k})((z−c3)² − 2c1c2)
///          + (φ'(c3)α_k + ψ(c3)(α²−1)γ_k)(z − c3) + φ(c3) + 2a c1c2`.
///
/// `q = 1`: `φ^[k] = a z² + (b + 6βk d_k) z + φ(βk²) + 2βk ψ(βk²) − (k/4)(16βc6 − c5²) d_k`
/// and `ψ^[k] = d_{2k}(z + βk²) + e_k`.
pub fn iterated_pair_closed(lat: &Lattice, pair: &PearsonPair, k: usize) -> Result<(Polynomial, Polynomial)> {
    let ki = k as i64;
    let phi = pair.phi();
    let psi = pair.psi();
    if lat.is_q() {
        let c3 = lat.c3();
        let shift = Polynomial::linear_factor(&c3);
        let alpha = lat.alpha();
        let a2m1 = &(alpha * alpha) - &Scalar::one();
        let fp = phi.derivative().eval(&c3);
        let pv = psi.eval(&c3);
        let two_c1c2 = &Scalar::from(2) * &lat.c1c2();
        let psi_k = &shift.scale(&d_n(lat, pair, 2 * ki)?) + &Polynomial::constant(e_n(lat, pair, ki)?);
        let quad = &(&(&pair.d * &a2m1) * &lat.gamma_at(2 * k)) + &(&pair.a * &lat.alpha_at(2 * k));
        let lin = &(&fp * &lat.alpha_at(k)) + &(&(&pv * &a2m1) * &lat.gamma_at(k));
        let cst = &phi.eval(&c3) + &(&pair.a * &two_c1c2);
        let sq = &(&shift * &shift) - &Polynomial::constant(two_c1c2);
        let phi_k = &(&sq.scale(&quad) + &shift.scale(&lin)) + &Polynomial::constant(cst);
        Ok((phi_k, psi_k))
    } else {
        let beta = lat.beta();
        let c = lat.c();
        let (c5, c6) = (&c[1], &c[2]);
        let kk = Scalar::from(ki);
        let dk = d_n(lat, pair, ki)?;
        let bk2 = &(beta * &kk) * &kk;
        let six_beta_k = &(&Scalar::from(6) * beta) * &kk;
        let two_beta_k = &(&Scalar::from(2) * beta) * &kk;
        let lin = &pair.b + &(&six_beta_k * &dk);
        let disc = &(&(&Scalar::from(16) * beta) * c6) - &(c5 * c5);
        let cst = &(&phi.eval(&bk2) + &(&two_beta_k * &psi.eval(&bk2)))
            - &(&(&kk * &disc) * &dk).checked_div(&Scalar::from(4))?;
        let phi_k = Polynomial::from_coeffs(vec![cst, lin, pair.a.clone()]);
        let d2k = d_n(lat, pair, 2 * ki)?;
        let psi_k = Polynomial::from_coeffs(vec![&(&d2k * &bk2) + &e_n(lat, pair, ki)?, d2k]);
        Ok((phi_k, psi_k))
    }
}

/// Closed form, checked against the recursion. A disagreement is an
/// [`Error::Inconsistent`].
pub fn iterated_pair(lat: &Lattice, pair: &PearsonPair, k: usize) -> Result<(Polynomial, Polynomial)> {
    let (phi_c, psi_c) = iterated_pair_closed(lat, pair, k)?;
    let (phi_r, psi_r) = iterated_pair_recursive(lat, pair, k);
    let eps = lat.backend().zero_tolerance();
    for (what, c, r) in [("phi^[k]", &phi_c, &phi_r), ("psi^[k]", &psi_c, &psi_r)] {
        let res = Residual::of_polys(c, r);
        if !res.passes(eps) {
            return Err(Error::Inconsistent { what: what.into(), k, residual: res.max_abs });
        }
    }
    Ok((phi_c, psi_c))
}

/// Where the regularity witness is evaluated: `c3 − e_n/d_{2n}` (`q ≠ 1`)
/// or `−βn² − e_n/d_{2n}` (`q = 1`); the root of `ψ^[n]`.
pub fn witness_point(lat: &Lattice, pair: &PearsonPair, n: usize) -> Result<Scalar> {
    let ni = n as i64;
    let ratio = e_n(lat, pair, ni)?.checked_div(&d_n(lat, pair, 2 * ni)?)?;
    let base = if lat.is_q() {
        lat.c3()
    } else {
        -(&(lat.beta() * &Scalar::from(ni)) * &Scalar::from(ni))
    };
    Ok(&base - &ratio)
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityRecord {
    pub n: usize,
    pub d_n: Scalar,
    pub e_n: Scalar,
    /// `φ^[n]` at the root of `ψ^[n]`; absent when `d_{2n} = 0`.
    pub witness: Option<Scalar>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", content = "n", rename_all = "kebab-case")]
pub enum Verdict {
    RegularUpTo(usize),
    FailsAdmissibility(usize),
    FailsWitness(usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct RegularityReport {
    pub records: Vec<RegularityRecord>,
    pub verdict: Verdict,
}

impl RegularityReport {
    pub fn is_regular(&self) -> bool {
        matches!(self.verdict, Verdict::RegularUpTo(_))
    }
}

/// The regularity criterion for `n ≤ N`: `d_m ≠ 0` for `m ≤ 2N + 1`, since
/// the closed forms and the moment recursion through level `N` divide by
/// them, and `φ^[n]` nonzero at the root of `ψ^[n]`. Stops at the first failure;
/// level `n` owns `d_n`, `d_{2n}` and `d_{2n+1}`.
pub fn regularity(lat: &Lattice, pair: &PearsonPair, n_max: usize) -> Result<RegularityReport> {
    let backend = lat.backend();
    let bad_d = admissibility(lat, pair, 2 * n_max + 1)?.first_failure;
    let mut records = Vec::new();
    for n in 0..=n_max {
        let ni = n as i64;
        let dn = d_n(lat, pair, ni)?;
        let en = e_n(lat, pair, ni)?;
        if let Some(m) = bad_d.filter(|&m| m <= 2 * n + 1) {
            records.push(RegularityRecord { n, d_n: dn, e_n: en, witness: None });
            return Ok(RegularityReport { records, verdict: Verdict::FailsAdmissibility(m) });
        }
        let (phi_n, _) = iterated_pair_closed(lat, pair, n)?;
        let point = witness_point(lat, pair, n)?;
        let w = phi_n.eval(&point);
        // Scale: the terms of φ^[n](z0) before cancellation.
        let zabs = point.abs_f64();
        let scale = phi_n
            .coeffs()
            .iter()
            .enumerate()
            .map(|(j, c)| c.abs_f64() * zabs.powi(j as i32))
            .fold(phi_n.max_abs_coeff(), f64::max);
        let fails = is_zero_on(&w, scale, backend);
        records.push(RegularityRecord { n, d_n: dn, e_n: en, witness: Some(w) });
        if fails {
            return Ok(RegularityReport { records, verdict: Verdict::FailsWitness(n) });
        }
    }
    Ok(RegularityReport { records, verdict: Verdict::RegularUpTo(n_max) })
}

/// `d_m`, failing with [`Error::NotAdmissible`] when it vanishes.
fn nonzero_d(lat: &Lattice, pair: &PearsonPair, m: i64) -> Result<Scalar> {
    let d = d_n(lat, pair, m)?;
    if d.is_zero() || d.is_negligible(pair.a.abs_f64().max(pair.d.abs_f64()), lat.backend().zero_tolerance()) {
        return Err(Error::NotAdmissible { n: m.max(0) as usize });
    }
    Ok(d)
}

/// `B_n` by the closed form. `q ≠ 1`: `c3 + γ_n e_{n−1}/d_{2n−2} − γ_{n+1} e_n/d_{2n}`;
/// `q = 1`: `n e_{n−1}/d_{2n−2} − (n+1) e_n/d_{2n} − 2βn(n−1)`. The first
/// term is 0 at `n = 0`.
pub fn b_closed(lat: &Lattice, pair: &PearsonPair, n: usize) -> Result<Scalar> {
    Ok(&b_offset(lat, pair, n)? + &if lat.is_q() { lat.c3() } else { Scalar::zero() })
}

/// `B_n − c3` (`q ≠ 1`) or `B_n` (`q = 1`), without adding `c3` back.
fn b_offset(lat: &Lattice, pair: &PearsonPair, n: usize) -> Result<Scalar> {
    let ni = n as i64;
    let (g_n, g_n1) = if lat.is_q() {
        (lat.gamma_at(n), lat.gamma_at(n + 1))
    } else {
        (Scalar::from(ni), Scalar::from(ni + 1))
    };
    let first = if n == 0 {
        Scalar::zero()
    } else {
        (&g_n * &e_n(lat, pair, ni - 1)?).checked_div(&nonzero_d(lat, pair, 2 * ni - 2)?)?
    };
    let second = (&g_n1 * &e_n(lat, pair, ni)?).checked_div(&nonzero_d(lat, pair, 2 * ni)?)?;
    let mut out = &first - &second;
    if !lat.is_q() {
        let t = &(&(&Scalar::from(2) * lat.beta()) * &Scalar::from(ni)) * &Scalar::from(ni - 1);
        out -= t;
    }
    Ok(out)
}

/// `C_{n+1} = −(γ_{n+1} d_{n−1} / (d_{2n−1} d_{2n+1})) φ^[n](z_n)` with `z_n`
/// the root of `ψ^[n]` (`γ_{n+1} → n+1` for `q = 1`).
pub fn c_next_closed(lat: &Lattice, pair: &PearsonPair, n: usize) -> Result<Scalar> {
    let ni = n as i64;
    let g = if lat.is_q() { lat.gamma_at(n + 1) } else { Scalar::from(ni + 1) };
    // At n = 0 the factor d_{n−1}/d_{2n−1} is d_{−1}/d_{−1} and cancels.
    let num = if n == 0 { g } else { &g * &d_n(lat, pair, ni - 1)? };
    let mut den = nonzero_d(lat, pair, 2 * ni + 1)?;
    if n > 0 {
        den = &den * &nonzero_d(lat, pair, 2 * ni - 1)?;
    }
    nonzero_d(lat, pair, 2 * ni)?;
    let (phi_n, _) = iterated_pair_closed(lat, pair, n)?;
    Ok(-(&num.checked_div(&den)? * &phi_n.eval(&witness_point(lat, pair, n)?)))
}

/// `B_0..B_N`, `C_1..C_N` from the closed forms. A vanishing `C_n` is
/// [`Error::NotRegular`] at `n`, the level where the moment norm vanishes.
pub fn ttrr_from_pearson(lat: &Lattice, pair: &PearsonPair, n_max: usize) -> Result<Ttrr> {
    let pair = pair.to_backend(lat.backend())?;
    let backend = lat.backend();
    let mut b = Vec::with_capacity(n_max + 1);
    let mut c = vec![Scalar::zero()];
    for n in 0..=n_max {
        if n >= 1 {
            let cn = c_next_closed(lat, &pair, n - 1)?;
            let scale = b.iter().chain(&c).map(Scalar::abs_f64).fold(1.0, f64::max);
            if is_zero_on(&cn, scale, backend) {
                return Err(Error::NotRegular { n });
            }
            c.push(cn);
        }
        b.push(b_closed(lat, &pair, n)?);
    }
    Ttrr::new(b, c)
}

/// `u^[k]`: `u^[j+1] = D_x(U2 ψ^[j] u^[j]) − S_x(φ^[j] u^[j])`. Each level
/// consumes `deg(U2 ψ^[j])` moments.
pub fn uk_functional(lat: &Lattice, pair: &PearsonPair, u: &MomentFunctional, k: usize) -> Result<MomentFunctional> {
    let u2 = lat.u2();
    let mut cur = u.clone();
    for j in 0..k {
        let (phi_j, psi_j) = iterated_pair_closed(lat, pair, j)?;
        let a = cur.left_mul(&(u2 * &psi_j))?.dual_dx(lat);
        let b = cur.left_mul(&phi_j)?.dual_sx(lat);
        cur = a.sub(&b);
    }
    Ok(cur)
}

/// `k_n = (−α)^{−n} ∏_{j=1}^{n} d_{n+j−2}^{−1}` (`α = 1` when `q = 1`).
pub fn rodrigues_constant(lat: &Lattice, pair: &PearsonPair, n: usize) -> Result<Scalar> {
    let mut den = (-lat.alpha().clone()).powi(n as i64)?;
    for j in 1..=n {
        den = &den * &d_n(lat, pair, (n + j) as i64 - 2)?;
    }
    den.recip()
}

/// Residual of `P_n u = k_n D_x^n u^[n]` on moments `0..=M`, with `u` the
/// Pearson functional (`μ_0 = 1`) and `P_n` from the closed-form recurrence.
pub fn rodrigues_verify(lat: &Lattice, pair: &PearsonPair, n: usize, m: usize) -> Result<Residual> {
    let pair = pair.to_backend(lat.backend())?;
    let loss = lat.u2().degree().unwrap_or(0) + 1;
    let horizon = m + n * loss + n + 1;
    let u = pearson_moments(lat, &pair.phi(), &pair.psi(), Scalar::one(), horizon)?;
    let t = ttrr_from_pearson(lat, &pair, n.max(1))?;
    let ops = build_ops(lat, &t, n)?;
    let lhs = u.left_mul(ops.p(n))?;
    let rhs = uk_functional(lat, &pair, &u, n)?
        .dual_dx_pow(lat, n)
        .scale(&rodrigues_constant(lat, &pair, n)?);
    lhs.residual(&rhs, m)
}

/// One finite-`n` estimate of a limit.
#[derive(Debug, Clone, Serialize)]
pub struct LimitCheck {
    pub name: String,
    pub n: usize,
    pub estimate: f64,
    pub limit: f64,
    pub error: f64,
}

impl LimitCheck {
    fn new(name: &str, n: usize, estimate: &Scalar, limit: &Scalar) -> LimitCheck {
        LimitCheck {
            name: name.into(),
            n,
            estimate: estimate.re_f64(),
            limit: limit.re_f64(),
            error: (estimate - limit).abs_f64(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticsReport {
    /// `q<1`, `q>1` or `q=1`.
    pub regime: String,
    /// Largest `|S_n − (−γ_n e_{n−1}/d_{2n−2})|` for `n ≤ min(n_max, 64)`
    /// (`q ≠ 1` only), with `S_n` the direct partial sum of `B_j − c3`.
    pub partial_sum_identity: Option<Residual>,
    pub checks: Vec<LimitCheck>,
}

const IDENTITY_SPAN: usize = 64;

/// Finite-`n` estimates of the limits of `B_n` and `C_n` at `n = n_max`.
///
/// `q ≠ 1` runs at a precision raised by about `2 n_max |log₂ q|` bits, since
/// `B_n − c3 ~ q^{±n}` arises from cancelling `O(1)` terms.
pub fn asymptotics(lat: &Lattice, pair: &PearsonPair, n_max: usize) -> Result<AsymptoticsReport> {
    if lat.is_q() {
        asymptotics_q(lat, pair, n_max)
    } else {
        asymptotics_quadratic(lat, pair, n_max)
    }
}

fn asymptotics_q(lat: &Lattice, pair: &PearsonPair, n_max: usize) -> Result<AsymptoticsReport> {
    let q = lat.q();
    let side = q
        .real_cmp(&Scalar::one())
        .filter(|_| q.is_real() && q.real_sign() == Some(Ordering::Greater))
        .ok_or_else(|| Error::Unsupported("asymptotics need real q > 0".into()))?;
    let lat = match lat.backend() {
        Backend::Exact => lat.clone(),
        Backend::BigFloat { precision } => {
            let extra = 64.0 + 2.0 * n_max as f64 * q.re_f64().log2().abs();
            let p = precision + (extra.ceil() as u32).next_multiple_of(64);
            lat.to_precision(p)?
        }
    };
    let lat = &lat;
    let pair = &pair.to_backend(lat.backend())?;

    let mut identity = Residual::zero();
    let mut partial = Scalar::zero();
    for n in 0..=n_max.min(IDENTITY_SPAN) {
        let closed = if n == 0 {
            Scalar::zero()
        } else {
            -(&lat.gamma_at(n) * &e_n(lat, pair, n as i64 - 1)?).checked_div(&nonzero_d(lat, pair, 2 * n as i64 - 2)?)?
        };
        let r = Residual::from_parts(&[&partial - &closed], &[partial.clone()], &[closed], lat.backend());
        identity = identity.max(r);
        partial += b_offset(lat, pair, n)?;
    }

    let c3 = lat.c3();
    let w = lat.sqrt_q();
    let u = (w - &w.recip()?).recip()?;
    let fp = pair.phi().derivative().eval(&c3);
    let pv = pair.psi().eval(&c3);
    let two_au = &(&Scalar::from(2) * &pair.a) * &u;
    let four_alpha_u2 = &(&(&Scalar::from(4) * lat.alpha()) * &u) * &u;
    let num_b = &pv - &(&four_alpha_u2 * &fp);
    let two_u_fp = &(&Scalar::from(2) * &u) * &fp;

    let n = n_max;
    let off = b_offset(lat, pair, n)?;
    let sum_n = -(&lat.gamma_at(n + 1) * &e_n(lat, pair, n as i64)?).checked_div(&nonzero_d(lat, pair, 2 * n as i64)?)?;
    let (regime, scaled, lim_b, lim_s) = match side {
        Ordering::Less => {
            let den = &pair.d - &two_au;
            if den.is_zero() {
                return Err(Error::InvalidInput("d − 2au = 0".into()));
            }
            let scaled = &off * &lat.w_pow(-2 * n as i64);
            let lim_b = -(&(&w.recip()? * &num_b).checked_div(&(&u * &den))?);
            let lim_s = (&pv - &two_u_fp).checked_div(&(&(q - &Scalar::one()) * &den))?;
            ("q<1", scaled, lim_b, lim_s)
        }
        Ordering::Greater => {
            let den = &pair.d + &two_au;
            if den.is_zero() {
                return Err(Error::InvalidInput("d + 2au = 0".into()));
            }
            let scaled = &off * &lat.w_pow(2 * n as i64);
            let lim_b = (w * &num_b).checked_div(&(&u * &den))?;
            let lim_s = (&pv + &two_u_fp).checked_div(&(&(&q.recip()? - &Scalar::one()) * &den))?;
            ("q>1", scaled, lim_b, lim_s)
        }
        Ordering::Equal => unreachable!("q = 1 lattices take the quadratic branch"),
    };
    Ok(AsymptoticsReport {
        regime: regime.into(),
        partial_sum_identity: Some(identity),
        checks: vec![
            LimitCheck::new("scaled_b", n, &scaled, &lim_b),
            LimitCheck::new("partial_sum", n + 1, &sum_n, &lim_s),
        ],
    })
}

fn asymptotics_quadratic(lat: &Lattice, pair: &PearsonPair, n_max: usize) -> Result<AsymptoticsReport> {
    let beta = lat.beta();
    if beta.is_zero() {
        return Err(Error::InvalidInput("the quadratic limits need β ≠ 0".into()));
    }
    let pair = &pair.to_backend(lat.backend())?;
    let n = n_max.max(1);
    let nn = Scalar::from(n as i64);
    let n2 = &nn * &nn;
    let n4 = &n2 * &n2;
    let b = b_closed(lat, pair, n)?.checked_div(&n2)?;
    let c = c_next_closed(lat, pair, n)?.checked_div(&n4)?;
    let (kb, kc) = if pair.a.is_zero() { (-8, 16) } else { (-2, 1) };
    let lim_b = &Scalar::from(kb) * beta;
    let lim_c = &Scalar::from(kc) * &(beta * beta);
    Ok(AsymptoticsReport {
        regime: "q=1".into(),
        partial_sum_identity: None,
        checks: vec![
            LimitCheck::new("b_over_n2", n, &b, &lim_b),
            LimitCheck::new("c_over_n4", n, &c, &lim_c),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::ttrr_oracle;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    fn pair(a: Scalar, b: Scalar, c: Scalar, d: Scalar, e: Scalar) -> PearsonPair {
        PearsonPair::new(a, b, c, d, e).unwrap()
    }

    fn sample_pair() -> PearsonPair {
        pair(s(1, 3), s(-1, 2), s(2, 7), s(3, 2), s(1, 5))
    }

    fn lattices() -> Vec<Lattice> {
        vec![
            Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap(),
            Lattice::q_lattice(s(1, 4), s(0, 1), s(2, 3), s(1, 7)).unwrap(),
            Lattice::quadratic(s(3, 2), s(1, 3), s(2, 5)).unwrap(),
            Lattice::quadratic(s(0, 1), s(3, 2), s(1, 5)).unwrap(),
        ]
    }

    /// q-Hermite data on a q-quadratic lattice: φ = 𝔞(z−c3)² − (𝔞+α)C_1,
    /// ψ = z − c3 with 𝔞 = −1/(2u), C_1 = (1−q)c1c2.
    fn q_hermite(lat: &Lattice) -> PearsonPair {
        let w = lat.sqrt_q();
        let u = (w - &w.recip().unwrap()).recip().unwrap();
        let aa = -(&Scalar::from(2) * &u).recip().unwrap();
        let c1 = &(&Scalar::one() - lat.q()) * &lat.c1c2();
        let phi = &Polynomial::linear_factor(&lat.c3()).pow(2).scale(&aa)
            - &Polynomial::constant(&(&aa + lat.alpha()) * &c1);
        PearsonPair::from_polys(&phi, &Polynomial::linear_factor(&lat.c3())).unwrap()
    }

    #[test]
    fn admissibility_examples() {
        let lat = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap();
        let p = pair(s(1, 1), s(0, 1), s(0, 1), s(1, 1), s(0, 1));
        assert!(admissibility(&lat, &p, 20).unwrap().passes());
        let p0 = pair(s(0, 1), s(1, 1), s(0, 1), s(0, 1), s(1, 1));
        assert_eq!(admissibility(&lat, &p0, 5).unwrap().first_failure, Some(0));
        let quad = Lattice::quadratic(s(1, 1), s(0, 1), s(0, 1)).unwrap();
        let p3 = pair(s(1, 1), s(0, 1), s(0, 1), s(-3, 1), s(0, 1));
        assert_eq!(admissibility(&quad, &p3, 5).unwrap().first_failure, Some(3));
    }

    #[test]
    fn iterated_pairs_closed_equals_recursion() {
        for lat in lattices() {
            for k in 0..=6 {
                let (phi, psi) = iterated_pair(&lat, &sample_pair(), k).unwrap();
                if k == 0 {
                    assert_eq!(phi, sample_pair().phi());
                    assert_eq!(psi, sample_pair().psi());
                }
                assert_eq!(psi.coeff(1), d_n(&lat, &sample_pair(), 2 * k as i64).unwrap());
            }
        }
    }

    #[test]
    fn closed_coefficients_match_the_moment_oracle() {
        for lat in lattices() {
            let p = sample_pair();
            let u = pearson_moments(&lat, &p.phi(), &p.psi(), s(1, 1), 15).unwrap();
            let oracle = ttrr_oracle(&u, 7).unwrap();
            let closed = ttrr_from_pearson(&lat, &p, 7).unwrap();
            assert!(oracle.same_as(&closed), "{lat:?}");
            assert_eq!(closed.b[0], u.moment(1).unwrap().clone());
        }
    }

    #[test]
    fn q_hermite_coefficients() {
        let lat = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap();
        let p = q_hermite(&lat);
        assert!(regularity(&lat, &p, 32).unwrap().is_regular());
        let t = ttrr_from_pearson(&lat, &p, 10).unwrap();
        for n in 0..10 {
            assert_eq!(t.b[n], lat.c3());
            let expected = &(&Scalar::one() - &lat.q().powi(n as i64 + 1).unwrap()) * &lat.c1c2();
            assert_eq!(t.c[n + 1], expected);
        }
    }

    #[test]
    fn c1_when_d_minus_one_vanishes() {
        // q = 1 with a = d gives d_{−1} = 0, which cancels in C_1.
        let lat = Lattice::quadratic(s(3, 2), s(1, 3), s(2, 5)).unwrap();
        let p = pair(s(2, 1), s(1, 3), s(-1, 2), s(2, 1), s(1, 5));
        assert!(d_n(&lat, &p, -1).unwrap().is_zero());
        let u = pearson_moments(&lat, &p.phi(), &p.psi(), s(1, 1), 9).unwrap();
        assert!(ttrr_from_pearson(&lat, &p, 4).unwrap().same_as(&ttrr_oracle(&u, 4).unwrap()));
    }

    #[test]
    fn engineered_witness_failure() {
        // Solve for c so that φ^[1] vanishes at the root of ψ^[1]; the
        // witness is affine in c.
        let lat = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap();
        let w = |c: Scalar| {
            let p = pair(s(1, 3), s(-1, 2), c, s(3, 2), s(1, 5));
            let (phi, _) = iterated_pair_closed(&lat, &p, 1).unwrap();
            phi.eval(&witness_point(&lat, &p, 1).unwrap())
        };
        let (w0, w1) = (w(s(0, 1)), w(s(1, 1)));
        let c = -(&w0.checked_div(&(&w1 - &w0)).unwrap());
        let p = pair(s(1, 3), s(-1, 2), c, s(3, 2), s(1, 5));
        assert_eq!(regularity(&lat, &p, 5).unwrap().verdict, Verdict::FailsWitness(1));
        let u = pearson_moments(&lat, &p.phi(), &p.psi(), s(1, 1), 9).unwrap();
        assert_eq!(ttrr_oracle(&u, 4).unwrap_err(), Error::NotRegular { n: 2 });
        assert_eq!(ttrr_from_pearson(&lat, &p, 4).unwrap_err(), Error::NotRegular { n: 2 });
    }

    #[test]
    fn uk_levels() {
        let lat = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap();
        let p = sample_pair();
        let u = pearson_moments(&lat, &p.phi(), &p.psi(), s(1, 1), 16).unwrap();
        assert_eq!(uk_functional(&lat, &p, &u, 0).unwrap().moments(), u.moments());
        // P^[1]_n is orthogonal with respect to u^[1].
        let u1 = uk_functional(&lat, &p, &u, 1).unwrap();
        let ops = build_ops(&lat, &ttrr_from_pearson(&lat, &p, 5).unwrap(), 5).unwrap();
        for i in 0..3 {
            for j in 0..i {
                let f = &ops.derived(1, i).unwrap() * &ops.derived(1, j).unwrap();
                assert!(u1.apply(&f).unwrap().is_zero(), "({i}, {j})");
            }
        }
    }

    #[test]
    fn rodrigues_exact() {
        for lat in lattices() {
            for n in 0..=3 {
                let r = rodrigues_verify(&lat, &sample_pair(), n, 8).unwrap();
                assert!(r.exact_zero, "n={n} on {lat:?}: {r:?}");
            }
        }
    }

    #[test]
    fn asymptotic_limits() {
        let lat = Lattice::q_lattice(s(1, 4), s(1, 2), s(1, 3), s(1, 5)).unwrap();
        let rep = asymptotics(&lat, &sample_pair(), 60).unwrap();
        assert!(rep.partial_sum_identity.unwrap().exact_zero);
        for c in &rep.checks {
            assert!(c.error < 1e-12, "{c:?}");
        }
        let big = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap();
        for c in &asymptotics(&big, &sample_pair(), 60).unwrap().checks {
            assert!(c.error < 1e-12, "{c:?}");
        }
        let quad = Lattice::quadratic(s(3, 2), s(1, 3), s(2, 5)).unwrap();
        for p in [sample_pair(), pair(s(0, 1), s(-1, 2), s(2, 7), s(3, 2), s(1, 5))] {
            for c in &asymptotics(&quad, &p, 10_000).unwrap().checks {
                assert!(c.error < 1e-2, "{c:?}");
            }
        }
    }

    #[test]
    fn pair_json_forms() {
        let p: PearsonPair = serde_json::from_str(r#"{"a": "1/3", "d": 2}"#).unwrap();
        assert_eq!(p.b, Scalar::zero());
        let q: PearsonPair = serde_json::from_str(r#"{"phi": [0, 0, "1/3"], "psi": [0, 2]}"#).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<PearsonPair>("{}").is_err());
    }
}
