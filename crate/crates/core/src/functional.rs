//! Linear functionals on polynomials, represented by their moments.
//!
//! `u` is stored as `μ_k = ⟨u, z^k⟩` for `k = 0..=M`. Left multiplication by
//! `f` lowers the horizon by `deg f`; the dual operators
//! `⟨D_x u, f⟩ = −⟨u, D_x f⟩` and `⟨S_x u, f⟩ = ⟨u, S_x f⟩` keep it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operators::{dx, dx_monomial, sx, sx_monomial, tnk_row, Residual};
use crate::polynomial::Polynomial;
use crate::scalar::{Backend, Scalar};
use crate::ttrr::Ttrr;

#[derive(Debug, Clone)]
struct PearsonSource {
    lat: Lattice,
    phi: Polynomial,
    psi: Polynomial,
}

#[derive(Debug, Clone)]
pub struct MomentFunctional {
    moments: Vec<Scalar>,
    source: Option<PearsonSource>,
}

impl MomentFunctional {
    pub fn new(moments: Vec<Scalar>) -> Result<MomentFunctional> {
        if moments.is_empty() {
            return Err(Error::InvalidInput("a functional needs at least μ_0".into()));
        }
        Ok(MomentFunctional { moments, source: None })
    }

    pub fn moments(&self) -> &[Scalar] {
        &self.moments
    }

    pub fn moment(&self, k: usize) -> Option<&Scalar> {
        self.moments.get(k)
    }

    /// Highest available moment index `M`.
    pub fn horizon(&self) -> usize {
        self.moments.len() - 1
    }

    /// Whether the functional can extend itself (it came from a Pearson pair).
    pub fn extensible(&self) -> bool {
        self.source.is_some()
    }

    pub fn backend(&self) -> Backend {
        self.moments
            .iter()
            .find(|m| !m.is_exact())
            .map_or(Backend::Exact, Scalar::backend)
    }

    /// Make at least `m` the horizon, extending through the Pearson source if
    /// there is one. Existing moments never change.
    pub fn ensure(&mut self, m: usize) -> Result<()> {
        if m <= self.horizon() {
            return Ok(());
        }
        let Some(src) = self.source.clone() else {
            return Err(Error::HorizonExceeded { needed: m, available: self.horizon() });
        };
        for n in self.horizon()..m {
            let next = pearson_step(&src.lat, &src.phi, &src.psi, &self.moments, n)?;
            self.moments.push(next);
        }
        Ok(())
    }

    fn need(&self, m: usize) -> Result<()> {
        if m > self.horizon() {
            Err(Error::HorizonExceeded { needed: m, available: self.horizon() })
        } else {
            Ok(())
        }
    }

    /// `⟨u, f⟩ = Σ_k f_k μ_k`.
    pub fn apply(&self, f: &Polynomial) -> Result<Scalar> {
        Ok(self.apply_scaled(f)?.0)
    }

    /// `⟨u, f⟩` together with `max_k |f_k μ_k|`, the scale against which a
    /// cancelling sum is judged.
    pub fn apply_scaled(&self, f: &Polynomial) -> Result<(Scalar, f64)> {
        let Some(d) = f.degree() else {
            return Ok((Scalar::zero(), 0.0));
        };
        self.need(d)?;
        let mut acc = Scalar::zero();
        let mut scale = 0f64;
        for (c, m) in f.coeffs().iter().zip(&self.moments) {
            let t = c * m;
            scale = scale.max(t.abs_f64());
            acc += t;
        }
        Ok((acc, scale))
    }

    /// `⟨u, f⟩`, extending a Pearson functional when needed.
    pub fn apply_mut(&mut self, f: &Polynomial) -> Result<Scalar> {
        if let Some(d) = f.degree() {
            self.ensure(d)?;
        }
        self.apply(f)
    }

    /// `f u`, with horizon `M − deg f`.
    pub fn left_mul(&self, f: &Polynomial) -> Result<MomentFunctional> {
        let d = f.degree().unwrap_or(0);
        if d > self.horizon() {
            return Err(Error::HorizonExceeded { needed: d, available: self.horizon() });
        }
        let moments = (0..=self.horizon() - d)
            .map(|k| {
                f.coeffs()
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * &self.moments[j + k])
                    .sum::<Scalar>()
            })
            .collect();
        Ok(MomentFunctional { moments, source: None })
    }

    /// `D_x u`: `⟨D_x u, z^k⟩ = −⟨u, D_x z^k⟩`.
    pub fn dual_dx(&self, lat: &Lattice) -> MomentFunctional {
        let moments = (0..=self.horizon())
            .map(|k| -self.apply(&dx_monomial(lat, k)).expect("deg D z^k < k"))
            .collect();
        MomentFunctional { moments, source: None }
    }

    /// `S_x u`: `⟨S_x u, z^k⟩ = ⟨u, S_x z^k⟩`.
    pub fn dual_sx(&self, lat: &Lattice) -> MomentFunctional {
        let moments = (0..=self.horizon())
            .map(|k| self.apply(&sx_monomial(lat, k)).expect("deg S z^k = k"))
            .collect();
        MomentFunctional { moments, source: None }
    }

    pub fn dual_dx_pow(&self, lat: &Lattice, n: usize) -> MomentFunctional {
        (0..n).fold(self.clone(), |u, _| u.dual_dx(lat))
    }

    pub fn dual_sx_pow(&self, lat: &Lattice, n: usize) -> MomentFunctional {
        (0..n).fold(self.clone(), |u, _| u.dual_sx(lat))
    }

    /// `self + other` on the common horizon.
    pub fn add(&self, other: &MomentFunctional) -> MomentFunctional {
        let moments = self.moments.iter().zip(&other.moments).map(|(a, b)| a + b).collect();
        MomentFunctional { moments, source: None }
    }

    /// `self − other` on the common horizon.
    pub fn sub(&self, other: &MomentFunctional) -> MomentFunctional {
        let moments = self.moments.iter().zip(&other.moments).map(|(a, b)| a - b).collect();
        MomentFunctional { moments, source: None }
    }

    pub fn scale(&self, c: &Scalar) -> MomentFunctional {
        MomentFunctional { moments: self.moments.iter().map(|m| m * c).collect(), source: None }
    }

    pub fn to_precision(&self, prec: u32) -> MomentFunctional {
        MomentFunctional {
            moments: self.moments.iter().map(|m| m.to_precision(prec)).collect(),
            source: None,
        }
    }

    pub fn truncate(&self, m: usize) -> MomentFunctional {
        let mut out = self.clone();
        out.moments.truncate(m + 1);
        out
    }

    /// Residual of `self − other` over moments `0..=m`.
    pub fn residual(&self, other: &MomentFunctional, m: usize) -> Result<Residual> {
        self.need(m)?;
        other.need(m)?;
        let a = &self.moments[..=m];
        let b = &other.moments[..=m];
        let diff: Vec<Scalar> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let backend = if self.backend().is_exact() { other.backend() } else { self.backend() };
        Ok(Residual::from_parts(&diff, a, b, backend))
    }
}

impl Serialize for MomentFunctional {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.moments.serialize(ser)
    }
}

/// The functional transforms available on moment vectors.
#[derive(Debug, Clone)]
pub enum Transform {
    LeftMul(Polynomial),
    DualDx,
    DualSx,
}

pub fn transform(u: &MomentFunctional, which: &Transform, lat: &Lattice) -> Result<MomentFunctional> {
    match which {
        Transform::LeftMul(f) => u.left_mul(f),
        Transform::DualDx => Ok(u.dual_dx(lat)),
        Transform::DualSx => Ok(u.dual_sx(lat)),
    }
}

fn pearson_step(lat: &Lattice, phi: &Polynomial, psi: &Polynomial, mu: &[Scalar], n: usize) -> Result<Scalar> {
    // ⟨u, φ D z^n + ψ S z^n⟩ = 0, whose z^{n+1} coefficient is d_n.
    let p = &(phi * &dx_monomial(lat, n)) + &(psi * &sx_monomial(lat, n));
    let lead = p.coeff(n + 1);
    let tol = lat.backend().zero_tolerance();
    if lead.is_zero() || lead.is_negligible(p.max_abs_coeff(), tol) {
        return Err(Error::NotAdmissible { n });
    }
    let s: Scalar = (0..=n).map(|k| &p.coeff(k) * &mu[k]).sum();
    Ok(-s.checked_div(&lead)?)
}

/// Moments `μ_0..μ_N` of the solution of `D_x(φ u) = S_x(ψ u)` with the given
/// `μ_0`. The result remembers the pair and can extend itself.
pub fn pearson_moments(
    lat: &Lattice,
    phi: &Polynomial,
    psi: &Polynomial,
    mu0: Scalar,
    n: usize,
) -> Result<MomentFunctional> {
    if phi.degree_i64() > 2 || psi.degree_i64() > 1 {
        return Err(Error::InvalidInput("need deg φ ≤ 2 and deg ψ ≤ 1".into()));
    }
    if phi.is_zero() && psi.is_zero() {
        return Err(Error::InvalidInput("(φ, ψ) = (0, 0)".into()));
    }
    let mu0 = mu0.to_backend(lat.backend())?;
    let mut u = MomentFunctional {
        moments: vec![mu0],
        source: Some(PearsonSource { lat: lat.clone(), phi: phi.clone(), psi: psi.clone() }),
    };
    u.ensure(n)?;
    Ok(u)
}

/// Is a norm `⟨u, P_n²⟩` zero? Exact zero, or negligible against the terms
/// of its own sum on the bigfloat backend.
fn vanishes(value: &Scalar, scale: f64, backend: Backend) -> bool {
    value.is_zero() || value.is_negligible(scale, backend.zero_tolerance())
}

/// Recurrence coefficients `B_0..B_N`, `C_1..C_N` from moments via
/// `B_n = ⟨u, z P_n²⟩ / ⟨u, P_n²⟩` and `C_n = ⟨u, P_n²⟩ / ⟨u, P_{n−1}²⟩`.
/// Needs horizon `2N + 1`.
pub fn ttrr_oracle(u: &MomentFunctional, n: usize) -> Result<Ttrr> {
    u.need(2 * n + 1)?;
    let backend = u.backend();
    let mut b = Vec::with_capacity(n + 1);
    let mut c = vec![Scalar::zero()];
    let mut prev = Polynomial::zero();
    let mut cur = Polynomial::one();
    let mut h_prev: Option<Scalar> = None;
    for k in 0..=n {
        let sq = &cur * &cur;
        let (h, scale) = u.apply_scaled(&sq)?;
        if vanishes(&h, scale, backend) {
            return Err(Error::NotRegular { n: k });
        }
        if let Some(hp) = &h_prev {
            c.push(h.checked_div(hp)?);
        }
        let bk = u.apply(&(&sq * &Polynomial::z()))?.checked_div(&h)?;
        let mut next = &cur * &Polynomial::linear_factor(&bk);
        if k >= 1 {
            next = &next - &prev.scale(&c[k]);
        }
        b.push(bk);
        prev = std::mem::replace(&mut cur, next);
        h_prev = Some(h);
    }
    Ttrr::new(b, c)
}

/// Hankel determinants `Δ_k = det[μ_{i+j}]_{i,j=0..k}` for `k = 0..=N`.
/// Needs horizon `2N`. Independent of [`ttrr_oracle`]: `Δ_k = 0` exactly when
/// the oracle stops at level `k`.
pub fn hankel_determinants(u: &MomentFunctional, n: usize) -> Result<Vec<Scalar>> {
    u.need(2 * n)?;
    (0..=n)
        .map(|k| {
            let m: Vec<Vec<Scalar>> = (0..=k)
                .map(|i| (0..=k).map(|j| u.moments[i + j].clone()).collect())
                .collect();
            determinant(m)
        })
        .collect()
}

/// Determinant by Gaussian elimination with partial pivoting.
fn determinant(mut m: Vec<Vec<Scalar>>) -> Result<Scalar> {
    let n = m.len();
    let mut det = Scalar::one();
    for col in 0..n {
        let pivot = (col..n)
            .filter(|&r| !m[r][col].is_zero())
            .max_by(|&a, &b| m[a][col].abs_f64().total_cmp(&m[b][col].abs_f64()));
        let Some(p) = pivot else {
            return Ok(Scalar::zero());
        };
        if p != col {
            m.swap(p, col);
            det = -det;
        }
        det = &det * &m[col][col];
        let inv = m[col][col].recip()?;
        let (top, bottom) = m.split_at_mut(col + 1);
        let pivot = &top[col];
        for row in bottom.iter_mut() {
            let factor = &row[col] * &inv;
            if factor.is_zero() {
                continue;
            }
            for (x, p) in row[col..].iter_mut().zip(&pivot[col..]) {
                *x -= &factor * p;
            }
        }
    }
    Ok(det)
}

/// Functional identities checked moment by moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionalIdentity {
    /// `D(f u) = (Sf − α⁻¹U1 Df) D u + α⁻¹ (Df) S u`.
    DualProductDx,
    /// `S(f u) = (α U2 − α⁻¹U1²)(Df) D u + (Sf + α⁻¹U1 Df) S u`.
    DualProductSx,
    /// `α D^n S u = α_{n+1} S D^n u + γ_n U1 D^{n+1} u`.
    DualDxnSx,
    /// `D^n(f u) = Σ_k T_{n,k} f · D^{n−k} S^k u`.
    Leibniz,
    /// The closed three-term form of the Leibniz rule for `deg f ≤ 2`, `q ≠ 1`.
    LeibnizDeg2,
}

impl FunctionalIdentity {
    pub const ALL: [FunctionalIdentity; 5] = [
        FunctionalIdentity::DualProductDx,
        FunctionalIdentity::DualProductSx,
        FunctionalIdentity::DualDxnSx,
        FunctionalIdentity::Leibniz,
        FunctionalIdentity::LeibnizDeg2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FunctionalIdentity::DualProductDx => "dual_product_dx",
            FunctionalIdentity::DualProductSx => "dual_product_sx",
            FunctionalIdentity::DualDxnSx => "dual_dxn_sx",
            FunctionalIdentity::Leibniz => "leibniz",
            FunctionalIdentity::LeibnizDeg2 => "leibniz_deg2",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            FunctionalIdentity::DualProductDx => "D(fu) = (Sf - U1 Df/alpha) Du + (Df/alpha) Su",
            FunctionalIdentity::DualProductSx => {
                "S(fu) = (alpha U2 - U1^2/alpha)(Df) Du + (Sf + U1 Df/alpha) Su"
            }
            FunctionalIdentity::DualDxnSx => "alpha D^n S u = alpha_(n+1) S D^n u + gamma_n U1 D^(n+1) u",
            FunctionalIdentity::Leibniz => "D^n(fu) = sum_k T_(n,k)f D^(n-k) S^k u",
            FunctionalIdentity::LeibnizDeg2 => "D^n(fu) for deg f <= 2 in closed three-term form",
        }
    }
}

impl fmt::Display for FunctionalIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FunctionalIdentity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FunctionalIdentity::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown identity tag {s:?}")))
    }
}

/// `Σ_k T_{n,k} f · D^{n−k} S^k u` (apply `S` k times, then `D` n−k times).
pub fn leibniz_rhs(lat: &Lattice, f: &Polynomial, u: &MomentFunctional, n: usize) -> Result<MomentFunctional> {
    let row = tnk_row(lat, f, n);
    let mut acc: Option<MomentFunctional> = None;
    let mut sk = u.clone();
    for (k, t) in row.iter().enumerate() {
        if k > 0 {
            sk = sk.dual_sx(lat);
        }
        let term = sk.dual_dx_pow(lat, n - k).left_mul(t)?;
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term),
        });
    }
    Ok(acc.expect("row has at least one entry"))
}

/// Closed form of `D^n(f u)` for `f = a z² + b z + c` on a `q ≠ 1` lattice:
/// three terms in `D^n u`, `D^{n−1} S u` and `D^{n−2} S² u`; terms with a
/// vanishing coefficient are skipped.
pub fn leibniz_deg2_rhs(lat: &Lattice, f: &Polynomial, u: &MomentFunctional, n: usize) -> Result<MomentFunctional> {
    if !lat.is_q() {
        return Err(Error::Unsupported("the degree-two Leibniz form needs q ≠ 1".into()));
    }
    if f.degree_i64() > 2 {
        return Err(Error::InvalidInput("the degree-two Leibniz form needs deg f ≤ 2".into()));
    }
    let a = f.coeff(2);
    let c3 = lat.c3();
    let alpha = lat.alpha().clone();
    let ni = n as i64;
    let an = lat.alpha_n(ni)?;
    let an1 = lat.alpha_n(ni - 1)?;
    let gn = lat.gamma_n(ni)?;
    let fp = f.derivative().eval(&c3);
    let fc = f.eval(&c3);
    let shift = Polynomial::linear_factor(&c3);
    let shift2 = &shift * &shift;
    let one = Scalar::one();

    // (aα/(α_n α_{n−1}))(z−c3)² + (f'(c3)/α_n)(z−c3) + f(c3) + 4a(1−α²)γ_n c1c2/α_{n−1}
    let k0 = &(&a * &alpha).checked_div(&(&an * &an1))?;
    let const0 = &fc
        + &(&(&(&a * &Scalar::from(4)) * &(&one - &(&alpha * &alpha))) * &(&gn * &lat.c1c2())).checked_div(&an1)?;
    let p0 = &(&shift2.scale(k0) + &shift.scale(&fp.checked_div(&an)?)) + &Polynomial::constant(const0);
    let mut acc = u.dual_dx_pow(lat, n).left_mul(&p0)?;

    // (γ_n/α_n)( a(α_n + α α_{n−1})/α_{n−1}² (z−c3) + f'(c3) )
    if n >= 1 && !gn.is_zero() {
        let lin = (&a * &(&an + &(&alpha * &an1))).checked_div(&(&an1 * &an1))?;
        let p1 = (&shift.scale(&lin) + &Polynomial::constant(fp.clone())).scale(&gn.checked_div(&an)?);
        let term = u.dual_sx(lat).dual_dx_pow(lat, n - 1).left_mul(&p1)?;
        acc = acc.add(&term);
    }

    // a γ_n γ_{n−1} / α_{n−1}²
    if n >= 2 && !a.is_zero() {
        let coef = (&(&a * &gn) * &lat.gamma_n(ni - 1)?).checked_div(&(&an1 * &an1))?;
        let term = u.dual_sx_pow(lat, 2).dual_dx_pow(lat, n - 2).scale(&coef);
        acc = acc.add(&term);
    }
    Ok(acc)
}

/// Evaluate both sides of `id` on moments `0..=m` and return the residual.
/// `u` needs horizon `m + deg f + 1`; Pearson functionals extend themselves.
pub fn verify_functional_identity(
    lat: &Lattice,
    id: FunctionalIdentity,
    f: &Polynomial,
    u: &MomentFunctional,
    n: usize,
    m: usize,
) -> Result<Residual> {
    let mut u = u.clone();
    let need = m + f.degree().unwrap_or(0) + 1;
    if u.extensible() {
        u.ensure(need)?;
    }
    let alpha_inv = lat.alpha().recip()?;
    let (u1, u2) = lat.u_polys();
    let (lhs, rhs) = match id {
        FunctionalIdentity::DualProductDx => {
            let df = dx(lat, f);
            let h = &sx(lat, f) - &(u1 * &df).scale(&alpha_inv);
            let lhs = u.left_mul(f)?.dual_dx(lat);
            let rhs = u.dual_dx(lat).left_mul(&h)?.add(&u.dual_sx(lat).left_mul(&df.scale(&alpha_inv))?);
            (lhs, rhs)
        }
        FunctionalIdentity::DualProductSx => {
            let df = dx(lat, f);
            let w = &u2.scale(lat.alpha()) - &(u1 * u1).scale(&alpha_inv);
            let h = &sx(lat, f) + &(u1 * &df).scale(&alpha_inv);
            let lhs = u.left_mul(f)?.dual_sx(lat);
            let rhs = u.dual_dx(lat).left_mul(&(&w * &df))?.add(&u.dual_sx(lat).left_mul(&h)?);
            (lhs, rhs)
        }
        FunctionalIdentity::DualDxnSx => {
            let dn = u.dual_dx_pow(lat, n);
            let lhs = u.dual_sx(lat).dual_dx_pow(lat, n).scale(lat.alpha());
            let rhs = dn
                .dual_sx(lat)
                .scale(&lat.alpha_at(n + 1))
                .add(&dn.dual_dx(lat).left_mul(&u1.scale(&lat.gamma_at(n)))?);
            (lhs, rhs)
        }
        FunctionalIdentity::Leibniz => {
            let lhs = u.left_mul(f)?.dual_dx_pow(lat, n);
            (lhs, leibniz_rhs(lat, f, &u, n)?)
        }
        FunctionalIdentity::LeibnizDeg2 => {
            let lhs = u.left_mul(f)?.dual_dx_pow(lat, n);
            (lhs, leibniz_deg2_rhs(lat, f, &u, n)?)
        }
    };
    lhs.residual(&rhs, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    fn random_functional(rng: &mut ChaCha8Rng, m: usize) -> MomentFunctional {
        MomentFunctional::new((0..=m).map(|_| s(rng.gen_range(-9..10), rng.gen_range(1..6))).collect()).unwrap()
    }

    fn q_lat() -> Lattice {
        Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap()
    }

    #[test]
    fn pairing_examples() {
        let u = MomentFunctional::new(vec![s(1, 1), s(0, 1), s(1, 4)]).unwrap();
        assert_eq!(u.apply(&Polynomial::from_ints(&[0, 0, 1])).unwrap(), s(1, 4));
        assert_eq!(u.apply(&Polynomial::one()).unwrap(), s(1, 1));
        assert!(matches!(
            u.apply(&Polynomial::monomial(3, Scalar::one())),
            Err(Error::HorizonExceeded { needed: 3, available: 2 })
        ));
    }

    #[test]
    fn transform_examples() {
        let lat = q_lat();
        let u = MomentFunctional::new(vec![s(2, 1), s(3, 1), s(5, 1), s(7, 1)]).unwrap();
        let zu = transform(&u, &Transform::LeftMul(Polynomial::z()), &lat).unwrap();
        assert_eq!(zu.moments(), &u.moments()[1..]);
        let du = transform(&u, &Transform::DualDx, &lat).unwrap();
        assert_eq!(du.moment(1).unwrap(), &s(-2, 1));
        let su = transform(&u, &Transform::DualSx, &lat).unwrap();
        assert_eq!(su.moment(0).unwrap(), &s(2, 1));
    }

    #[test]
    fn oracle_on_symmetric_and_degenerate_moments() {
        // Moments of the q-Hermite type symmetric functional: odd moments vanish.
        let lat = Lattice::askey_wilson(s(1, 4)).unwrap();
        let u = pearson_moments(&lat, &Polynomial::from_coeffs(vec![s(3, 16), s(0, 1), s(-3, 4)]), &Polynomial::z(), s(1, 1), 11)
            .unwrap();
        for k in (1..=11).step_by(2) {
            assert!(u.moment(k).unwrap().is_zero());
        }
        let t = ttrr_oracle(&u, 5).unwrap();
        assert!(t.b.iter().all(Scalar::is_zero));

        let deg = MomentFunctional::new(vec![s(1, 1), s(0, 1), s(0, 1), s(0, 1)]).unwrap();
        assert_eq!(ttrr_oracle(&deg, 1).unwrap_err(), Error::NotRegular { n: 1 });
        let h = hankel_determinants(&deg, 1).unwrap();
        assert!(h[1].is_zero());
    }

    #[test]
    fn pearson_first_step_and_admissibility() {
        let lat = q_lat();
        let phi = Polynomial::from_coeffs(vec![s(2, 7), s(-1, 2), s(1, 3)]);
        let psi = Polynomial::from_coeffs(vec![s(1, 5), s(3, 2)]);
        let u = pearson_moments(&lat, &phi, &psi, s(1, 1), 4).unwrap();
        // ⟨u, ψ⟩ = 0
        assert_eq!(u.moment(1).unwrap(), &(-&s(1, 5).checked_div(&s(3, 2)).unwrap()));
        let bad = pearson_moments(&lat, &Polynomial::from_ints(&[1, 1]), &Polynomial::one(), s(1, 1), 3);
        assert_eq!(bad.unwrap_err(), Error::NotAdmissible { n: 0 });
    }

    #[test]
    fn pearson_functional_satisfies_its_equation() {
        let lat = q_lat();
        let phi = Polynomial::from_coeffs(vec![s(2, 7), s(-1, 2), s(1, 3)]);
        let psi = Polynomial::from_coeffs(vec![s(1, 5), s(3, 2)]);
        let u = pearson_moments(&lat, &phi, &psi, s(1, 1), 12).unwrap();
        let lhs = u.left_mul(&phi).unwrap().dual_dx(&lat);
        let rhs = u.left_mul(&psi).unwrap().dual_sx(&lat);
        assert!(lhs.residual(&rhs, 9).unwrap().exact_zero);
    }

    #[test]
    fn extension_preserves_prefix() {
        let lat = q_lat();
        let phi = Polynomial::from_coeffs(vec![s(2, 7), s(-1, 2), s(1, 3)]);
        let psi = Polynomial::from_coeffs(vec![s(1, 5), s(3, 2)]);
        let mut u = pearson_moments(&lat, &phi, &psi, s(1, 1), 4).unwrap();
        let before = u.moments().to_vec();
        u.ensure(9).unwrap();
        assert_eq!(&u.moments()[..5], &before[..]);
        let direct = pearson_moments(&lat, &phi, &psi, s(1, 1), 9).unwrap();
        assert_eq!(u.moments(), direct.moments());
    }

    #[test]
    fn oracle_is_scale_invariant_and_orthogonal() {
        let lat = q_lat();
        let phi = Polynomial::from_coeffs(vec![s(2, 7), s(-1, 2), s(1, 3)]);
        let psi = Polynomial::from_coeffs(vec![s(1, 5), s(3, 2)]);
        let u = pearson_moments(&lat, &phi, &psi, s(1, 1), 13).unwrap();
        let t = ttrr_oracle(&u, 6).unwrap();
        assert!(t.same_as(&ttrr_oracle(&u.scale(&s(-7, 3)), 6).unwrap()));
        let ops = crate::ttrr::build_ops(&lat, &t, 6).unwrap();
        for i in 0..=6 {
            for j in 0..i {
                assert!(u.apply(&(ops.p(i) * ops.p(j))).unwrap().is_zero());
            }
        }
        // ⟨u, P_2²⟩ = μ_0 C_1 C_2
        assert_eq!(u.apply(&(ops.p(2) * ops.p(2))).unwrap(), &t.c[1] * &t.c[2]);
    }

    #[test]
    fn hankel_matches_norm_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_functional(&mut rng, 12);
        let t = ttrr_oracle(&u, 5).unwrap();
        let h = hankel_determinants(&u, 5).unwrap();
        // Δ_k = μ_0^{k+1} ∏_{j ≤ k} C_j^{k+1−j}
        for (k, hk) in h.iter().enumerate() {
            let mut expected = u.moment(0).unwrap().powi(k as i64 + 1).unwrap();
            for j in 1..=k {
                expected = &expected * &t.c[j].powi((k + 1 - j) as i64).unwrap();
            }
            assert_eq!(*hk, expected);
        }
    }

    #[test]
    fn functional_identities_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let lats = [
            q_lat(),
            Lattice::q_lattice(s(1, 4), s(0, 1), s(2, 3), s(1, 7)).unwrap(),
            Lattice::quadratic(s(3, 2), s(1, 3), s(2, 5)).unwrap(),
            Lattice::quadratic(s(0, 1), s(3, 2), s(1, 5)).unwrap(),
        ];
        for lat in &lats {
            for n in 0..=4 {
                let u = random_functional(&mut rng, 16);
                let f = Polynomial::from_coeffs((0..4).map(|_| s(rng.gen_range(-5..6), rng.gen_range(1..4))).collect());
                for id in [
                    FunctionalIdentity::DualProductDx,
                    FunctionalIdentity::DualProductSx,
                    FunctionalIdentity::DualDxnSx,
                    FunctionalIdentity::Leibniz,
                ] {
                    let r = verify_functional_identity(lat, id, &f, &u, n, 10).unwrap();
                    assert!(r.exact_zero, "{id} n={n} on {lat:?}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn degree_two_leibniz_agrees_with_general_rule() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lat = q_lat();
        let f = Polynomial::from_coeffs(vec![s(1, 3), s(-2, 1), s(3, 4)]);
        for n in 0..=6 {
            let u = random_functional(&mut rng, 16);
            let general = leibniz_rhs(&lat, &f, &u, n).unwrap();
            let closed = leibniz_deg2_rhs(&lat, &f, &u, n).unwrap();
            assert!(general.residual(&closed, 10).unwrap().exact_zero, "n = {n}");
        }
        let u = random_functional(&mut rng, 10);
        let r = verify_functional_identity(&lat, FunctionalIdentity::LeibnizDeg2, &Polynomial::from_ints(&[0, 0, 1]), &u, 3, 6)
            .unwrap();
        assert!(r.exact_zero);
    }
}
