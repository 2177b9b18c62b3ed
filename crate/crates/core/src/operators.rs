//! The divided-difference operator `D_x`, the average operator `S_x`, the
//! `T_{n,k}` family and a checker for the operator identities.
//!
//! Both operators are computed by evaluating `f` at `x(s ± 1/2)` over lattice
//! nodes and interpolating in `z = x(s)`. The closed-form coefficients of
//! [`MonomialAction`] are never used to compute `D_x` or `S_x`; they serve as
//! an independent check.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::polynomial::Polynomial;
use crate::scalar::{Backend, Scalar};

/// `[f(a) − f(b)] / (a − b)` written as `Σ_k c_k h_{k−1}(a, b)` with the
/// complete homogeneous sums `h_m = a·h_{m−1} + b^m`. No division, so `a = b`
/// gives `f'(a)`.
fn divided_difference(f: &Polynomial, a: &Scalar, b: &Scalar) -> Scalar {
    let c = f.coeffs();
    let mut acc = Scalar::zero();
    let mut h = Scalar::one();
    let mut bm = Scalar::one();
    for (k, ck) in c.iter().enumerate().skip(1) {
        if k > 1 {
            bm = &bm * b;
            h = &(&h * a) + &bm;
        }
        acc += ck * &h;
    }
    acc
}

fn nodes_for(lat: &Lattice, m: usize) -> Vec<crate::lattice::Node> {
    // Every non-constant lattice has at least m distinct values among 4m
    // consecutive integer s (x(s) = x(t) forces s + t to a fixed value).
    lat.nodes(m).expect("non-constant lattice has enough distinct nodes")
}

/// Run `op` on a copy of the lattice with enough guard bits for `m`-node
/// interpolation and round the result back (bigfloat only).
fn guarded(lat: &Lattice, f: &Polynomial, m: usize, op: fn(&Lattice, &Polynomial) -> Polynomial) -> Polynomial {
    match (lat.backend().precision(), lat.working_precision(m)) {
        (Some(p), Some(wp)) if wp > p => {
            let wl = lat.working_lattice(wp);
            op(&wl, &f.to_precision(wp)).to_precision(p)
        }
        _ => op(lat, f),
    }
}

/// `D_x f`: the polynomial `g` with
/// `g(x(s)) = [f(x(s+½)) − f(x(s−½))] / [x(s+½) − x(s−½)]`.
/// On a constant lattice this is `f'`.
pub fn dx(lat: &Lattice, f: &Polynomial) -> Polynomial {
    match f.degree() {
        None | Some(0) => Polynomial::zero(),
        Some(d) => guarded(lat, f, d, dx_direct),
    }
}

fn dx_direct(lat: &Lattice, f: &Polynomial) -> Polynomial {
    let deg = match f.degree() {
        None | Some(0) => return Polynomial::zero(),
        Some(d) => d,
    };
    if lat.is_constant() {
        return f.derivative();
    }
    let pts: Vec<_> = nodes_for(lat, deg)
        .into_iter()
        .map(|n| {
            let v = divided_difference(f, &n.plus, &n.minus);
            (n.z, v)
        })
        .collect();
    Polynomial::interpolate(&pts).expect("nodes are distinct")
}

/// `S_x f`: the polynomial `g` with `g(x(s)) = [f(x(s+½)) + f(x(s−½))] / 2`.
pub fn sx(lat: &Lattice, f: &Polynomial) -> Polynomial {
    match f.degree() {
        None => Polynomial::zero(),
        Some(0) => f.clone(),
        Some(d) => guarded(lat, f, d + 1, sx_direct),
    }
}

fn sx_direct(lat: &Lattice, f: &Polynomial) -> Polynomial {
    let deg = match f.degree() {
        None => return Polynomial::zero(),
        Some(0) => return f.clone(),
        Some(d) => d,
    };
    if lat.is_constant() {
        return f.clone();
    }
    let half = Scalar::ratio(1, 2).expect("nonzero");
    let pts: Vec<_> = nodes_for(lat, deg + 1)
        .into_iter()
        .map(|n| {
            let v = &(&f.eval(&n.plus) + &f.eval(&n.minus)) * &half;
            (n.z, v)
        })
        .collect();
    Polynomial::interpolate(&pts).expect("nodes are distinct")
}

/// `D_x^n f`.
pub fn dx_pow(lat: &Lattice, f: &Polynomial, n: usize) -> Polynomial {
    (0..n).fold(f.clone(), |acc, _| dx(lat, &acc))
}

/// `S_x^n f`.
pub fn sx_pow(lat: &Lattice, f: &Polynomial, n: usize) -> Polynomial {
    (0..n).fold(f.clone(), |acc, _| sx(lat, &acc))
}

fn cached(
    lat: &Lattice,
    cache: &std::sync::Mutex<Vec<Polynomial>>,
    n: usize,
    op: fn(&Lattice, &Polynomial) -> Polynomial,
) -> Polynomial {
    {
        let c = cache.lock().expect("monomial cache");
        if let Some(p) = c.get(n) {
            return p.clone();
        }
    }
    let start = cache.lock().expect("monomial cache").len();
    let fresh: Vec<_> = (start..=n)
        .map(|k| op(lat, &Polynomial::monomial(k, Scalar::one())))
        .collect();
    let mut c = cache.lock().expect("monomial cache");
    for (k, p) in (start..=n).zip(fresh) {
        if c.len() == k {
            c.push(p);
        }
    }
    c[n].clone()
}

/// `D_x z^n`, memoized on the lattice.
pub fn dx_monomial(lat: &Lattice, n: usize) -> Polynomial {
    cached(lat, lat.dx_cache(), n, dx)
}

/// `S_x z^n`, memoized on the lattice.
pub fn sx_monomial(lat: &Lattice, n: usize) -> Polynomial {
    cached(lat, lat.sx_cache(), n, sx)
}

/// Top three coefficients of `D_x z^n` and `S_x z^n` on a `q ≠ 1` lattice:
/// `D_x z^n = γ_n z^{n−1} + u_n z^{n−2} + v_n z^{n−3} + ⋯` and
/// `S_x z^n = α_n z^n + û_n z^{n−1} + v̂_n z^{n−2} + ⋯`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonomialAction {
    pub n: usize,
    pub gamma: Scalar,
    pub u: Scalar,
    pub v: Scalar,
    pub alpha: Scalar,
    pub u_hat: Scalar,
    pub v_hat: Scalar,
}

pub fn monomial_action(lat: &Lattice, n: usize) -> Result<MonomialAction> {
    if !lat.is_q() {
        return Err(Error::Unsupported("monomial action closed forms need q ≠ 1".into()));
    }
    let ni = n as i64;
    let num = |k: i64| Scalar::from(k);
    let g = |k: i64| lat.gamma_n(k);
    let a = |k: i64| lat.alpha_n(k);
    let c3 = lat.c3();
    let c3sq = &c3 * &c3;
    let c1c2 = lat.c1c2();
    let half = Scalar::ratio(1, 2)?;

    // Terms whose integer multiplier vanishes are skipped, so that indices
    // below −1 are never requested.
    let term = |m: i64, idx: i64, f: &dyn Fn(i64) -> Result<Scalar>| -> Result<Scalar> {
        if m == 0 {
            Ok(Scalar::zero())
        } else {
            Ok(&num(m) * &f(idx)?)
        }
    };

    let (gamma, u, v, alpha, u_hat, v_hat) = if n == 0 {
        let z = Scalar::zero();
        (z.clone(), z.clone(), z.clone(), Scalar::one(), z.clone(), z)
    } else {
        let gamma = g(ni)?;
        let u = &(&term(ni, ni - 1, &g)? - &term(ni - 1, ni, &g)?) * &c3;
        let v1 = &(&term(ni, ni - 2, &g)? - &term(ni - 2, ni, &g)?) * &c1c2;
        let v2 = &(&(&term(ni * (ni - 1), ni - 2, &g)? - &term(2 * ni * (ni - 2), ni - 1, &g)?)
            + &term((ni - 1) * (ni - 2), ni, &g)?)
            * &(&half * &c3sq);
        let alpha = a(ni)?;
        let u_hat = &(&num(ni) * &(&a(ni - 1)? - &a(ni)?)) * &c3;
        // n = 1 reads α_{−1} − α_1 = 0.
        let vh1 = &(&num(ni) * &(&a(ni - 2)? - &a(ni)?)) * &c1c2;
        let vh2 = &(&(&num(ni * (ni - 1)) * &(lat.alpha() - &Scalar::one())) * &a(ni - 1)?) * &c3sq;
        (gamma, u, &v1 + &v2, alpha, u_hat, &vh1 + &vh2)
    };
    Ok(MonomialAction { n, gamma, u, v, alpha, u_hat, v_hat })
}

/// Row `T_{n,0} f, …, T_{n,n} f` of the family defined by `T_{0,0} f = f` and
/// `T_{n,k} = S T_{n−1,k} − (γ_{n−k}/α_{n−k}) U1 D T_{n−1,k} + α_{n+1−k}^{-1} D T_{n−1,k−1}`.
pub fn tnk_row(lat: &Lattice, f: &Polynomial, n: usize) -> Vec<Polynomial> {
    let mut row = vec![f.clone()];
    for m in 1..=n {
        let mut next = Vec::with_capacity(m + 1);
        for k in 0..=m {
            let mut t = Polynomial::zero();
            if k < m {
                let prev = &row[k];
                let ratio = lat
                    .gamma_at(m - k)
                    .checked_div(&lat.alpha_at(m - k))
                    .expect("α_n ≠ 0 for q > 0");
                t = &sx(lat, prev) - &(lat.u1() * &dx(lat, prev)).scale(&ratio);
            }
            if k >= 1 {
                let inv = lat.alpha_at(m + 1 - k).recip().expect("α_n ≠ 0 for q > 0");
                t = &t + &dx(lat, &row[k - 1]).scale(&inv);
            }
            next.push(t);
        }
        row = next;
    }
    row
}

/// `T_{n,k} f`, zero for `k > n`.
pub fn tnk(lat: &Lattice, f: &Polynomial, n: usize, k: usize) -> Polynomial {
    if k > n {
        return Polynomial::zero();
    }
    tnk_row(lat, f, n).swap_remove(k)
}

/// Operator identities that hold as polynomial identities on every lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorIdentity {
    /// `D(fg) = Df·Sg + Sf·Dg`.
    ProductDx,
    /// `S(fg) = Df·Dg·U2 + Sf·Sg`.
    ProductSx,
    /// `f·Sg = S((Sf − α⁻¹U1 Df) g) − α⁻¹ U2 D(g Df)`.
    SwapSx,
    /// `f·Dg = D((Sf − α⁻¹U1 Df) g) − α⁻¹ S(g Df)`.
    SwapDx,
    /// `D^n S f = α_n S D^n f + γ_n U1 D^{n+1} f`.
    DxnSx,
}

impl OperatorIdentity {
    pub const ALL: [OperatorIdentity; 5] = [
        OperatorIdentity::ProductDx,
        OperatorIdentity::ProductSx,
        OperatorIdentity::SwapSx,
        OperatorIdentity::SwapDx,
        OperatorIdentity::DxnSx,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorIdentity::ProductDx => "product_dx",
            OperatorIdentity::ProductSx => "product_sx",
            OperatorIdentity::SwapSx => "swap_sx",
            OperatorIdentity::SwapDx => "swap_dx",
            OperatorIdentity::DxnSx => "dxn_sx",
        }
    }

    /// Human-readable statement embedded in reports.
    pub fn statement(self) -> &'static str {
        match self {
            OperatorIdentity::ProductDx => "D(fg) = Df Sg + Sf Dg",
            OperatorIdentity::ProductSx => "S(fg) = Df Dg U2 + Sf Sg",
            OperatorIdentity::SwapSx => "f Sg = S((Sf - U1 Df/alpha) g) - U2 D(g Df)/alpha",
            OperatorIdentity::SwapDx => "f Dg = D((Sf - U1 Df/alpha) g) - S(g Df)/alpha",
            OperatorIdentity::DxnSx => "D^n S f = alpha_n S D^n f + gamma_n U1 D^(n+1) f",
        }
    }

    pub fn needs_g(self) -> bool {
        !matches!(self, OperatorIdentity::DxnSx)
    }
}

impl fmt::Display for OperatorIdentity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OperatorIdentity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        OperatorIdentity::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown identity tag {s:?}")))
    }
}

/// Size of `LHS − RHS` for a polynomial or moment identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residual {
    /// Largest absolute coefficient of the difference.
    pub max_abs: f64,
    /// Largest absolute coefficient of either side.
    pub scale: f64,
    /// The difference is identically zero.
    pub exact_zero: bool,
    #[serde(skip)]
    pub exact: bool,
}

impl Residual {
    pub fn from_parts(diff: &[Scalar], lhs: &[Scalar], rhs: &[Scalar], backend: Backend) -> Residual {
        let m = |v: &[Scalar]| v.iter().map(Scalar::abs_f64).fold(0.0, f64::max);
        Residual {
            max_abs: m(diff),
            scale: m(lhs).max(m(rhs)),
            exact_zero: diff.iter().all(Scalar::is_zero),
            exact: backend.is_exact(),
        }
    }

    pub fn of_polys(lhs: &Polynomial, rhs: &Polynomial) -> Residual {
        let diff = lhs - rhs;
        let backend = if lhs.backend().is_exact() { rhs.backend() } else { lhs.backend() };
        Residual::from_parts(diff.coeffs(), lhs.coeffs(), rhs.coeffs(), backend)
    }

    /// `max_abs / max(1, scale)`.
    pub fn relative(&self) -> f64 {
        self.max_abs / self.scale.max(1.0)
    }

    /// Exact backend: the difference vanishes. Bigfloat: the relative
    /// residual is at most `eps`.
    pub fn passes(&self, eps: f64) -> bool {
        if self.exact {
            self.exact_zero
        } else {
            self.exact_zero || self.relative() <= eps
        }
    }

    pub fn zero() -> Residual {
        Residual { max_abs: 0.0, scale: 0.0, exact_zero: true, exact: true }
    }

    /// Worst of two residuals.
    pub fn max(self, other: Residual) -> Residual {
        let worse = if other.relative() > self.relative() || (!other.exact_zero && self.exact_zero) {
            other
        } else {
            self
        };
        Residual {
            exact_zero: self.exact_zero && other.exact_zero,
            exact: self.exact && other.exact,
            ..worse
        }
    }
}

/// Evaluate both sides of `id` and return the residual. `g` is required by
/// every identity except `dxn_sx`, which uses `n`.
pub fn verify_operator_identity(
    lat: &Lattice,
    id: OperatorIdentity,
    f: &Polynomial,
    g: Option<&Polynomial>,
    n: usize,
) -> Result<Residual> {
    let g = if id.needs_g() {
        g.ok_or_else(|| Error::InvalidInput(format!("identity {id} needs a second polynomial")))?
    } else {
        &Polynomial::zero()
    };
    let alpha_inv = lat.alpha().recip()?;
    let (u1, u2) = lat.u_polys();
    let (lhs, rhs) = match id {
        OperatorIdentity::ProductDx => {
            let lhs = dx(lat, &(f * g));
            let rhs = &(&dx(lat, f) * &sx(lat, g)) + &(&sx(lat, f) * &dx(lat, g));
            (lhs, rhs)
        }
        OperatorIdentity::ProductSx => {
            let lhs = sx(lat, &(f * g));
            let rhs = &(&(&dx(lat, f) * &dx(lat, g)) * u2) + &(&sx(lat, f) * &sx(lat, g));
            (lhs, rhs)
        }
        OperatorIdentity::SwapSx => {
            let df = dx(lat, f);
            let h = &sx(lat, f) - &(u1 * &df).scale(&alpha_inv);
            let lhs = f * &sx(lat, g);
            let rhs = &sx(lat, &(&h * g)) - &(u2 * &dx(lat, &(g * &df))).scale(&alpha_inv);
            (lhs, rhs)
        }
        OperatorIdentity::SwapDx => {
            let df = dx(lat, f);
            let h = &sx(lat, f) - &(u1 * &df).scale(&alpha_inv);
            let lhs = f * &dx(lat, g);
            let rhs = &dx(lat, &(&h * g)) - &sx(lat, &(g * &df)).scale(&alpha_inv);
            (lhs, rhs)
        }
        OperatorIdentity::DxnSx => {
            let lhs = dx_pow(lat, &sx(lat, f), n);
            let dn = dx_pow(lat, f, n);
            let rhs = &sx(lat, &dn).scale(&lat.alpha_at(n)) + &(u1 * &dx(lat, &dn)).scale(&lat.gamma_at(n));
            (lhs, rhs)
        }
    };
    Ok(Residual::of_polys(&lhs, &rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    fn q4(c3: i64) -> Lattice {
        Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 2), s(c3, 1)).unwrap()
    }

    fn lattices() -> Vec<Lattice> {
        vec![
            q4(0),
            Lattice::q_lattice(s(1, 4), s(1, 3), s(2, 5), s(-1, 2)).unwrap(),
            Lattice::q_lattice(s(9, 4), s(0, 1), s(3, 2), s(1, 7)).unwrap(),
            Lattice::quadratic(s(1, 1), s(0, 1), s(0, 1)).unwrap(),
            Lattice::quadratic(s(3, 2), s(1, 3), s(2, 5)).unwrap(),
            Lattice::quadratic(s(0, 1), s(1, 1), s(0, 1)).unwrap(),
        ]
    }

    #[test]
    fn small_examples() {
        let l = q4(0);
        assert_eq!(dx(&l, &Polynomial::one()), Polynomial::zero());
        assert_eq!(dx(&l, &Polynomial::z()), Polynomial::one());
        assert_eq!(dx(&l, &Polynomial::from_ints(&[0, 0, 1])), Polynomial::from_coeffs(vec![s(0, 1), s(5, 2)]));
        assert_eq!(sx(&l, &Polynomial::one()), Polynomial::one());
        assert_eq!(
            sx(&l, &Polynomial::from_ints(&[0, 0, 1])),
            Polynomial::from_coeffs(vec![s(-9, 16), s(0, 1), s(17, 8)])
        );
        let l3 = q4(3);
        // S z = α z + (1 − α) c3
        assert_eq!(sx(&l3, &Polynomial::z()), Polynomial::from_coeffs(vec![s(-3, 4), s(5, 4)]));
    }

    #[test]
    fn constant_lattice_gives_derivative() {
        let c = Lattice::quadratic(s(0, 1), s(0, 1), s(2, 1)).unwrap();
        let f = Polynomial::from_ints(&[1, 2, 3, 4]);
        assert_eq!(dx(&c, &f), f.derivative());
        assert_eq!(sx(&c, &f), f);
    }

    #[test]
    fn degree_and_leading_coefficients() {
        for l in lattices() {
            for n in 0..=16usize {
                let m = Polynomial::monomial(n, Scalar::one());
                let d = dx(&l, &m);
                let a = sx(&l, &m);
                assert_eq!(a.degree(), Some(n));
                assert_eq!(a.leading(), l.alpha_at(n));
                if n == 0 {
                    assert!(d.is_zero());
                } else {
                    assert_eq!(d.degree(), Some(n - 1));
                    assert_eq!(d.leading(), l.gamma_at(n));
                }
            }
        }
    }

    fn top(p: &Polynomial, deg: usize, k: usize) -> Scalar {
        if k > deg {
            Scalar::zero()
        } else {
            p.coeff(deg - k)
        }
    }

    #[test]
    fn monomial_action_matches_interpolation() {
        for l in lattices().into_iter().filter(Lattice::is_q) {
            for n in 0..=10usize {
                let ma = monomial_action(&l, n).unwrap();
                let d = dx_monomial(&l, n);
                let a = sx_monomial(&l, n);
                if n >= 1 {
                    assert_eq!(top(&d, n - 1, 0), ma.gamma, "gamma n={n}");
                    assert_eq!(top(&d, n - 1, 1), ma.u, "u n={n}");
                    assert_eq!(top(&d, n - 1, 2), ma.v, "v n={n}");
                }
                assert_eq!(top(&a, n, 0), ma.alpha, "alpha n={n}");
                assert_eq!(top(&a, n, 1), ma.u_hat, "u_hat n={n}");
                assert_eq!(top(&a, n, 2), ma.v_hat, "v_hat n={n}");
            }
        }
        let quad = Lattice::quadratic(s(1, 1), s(0, 1), s(0, 1)).unwrap();
        assert!(monomial_action(&quad, 2).is_err());
    }

    #[test]
    fn monomial_action_small_n() {
        let l = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(2, 1)).unwrap();
        let m0 = monomial_action(&l, 0).unwrap();
        assert_eq!(m0.alpha, Scalar::one());
        assert!(m0.gamma.is_zero() && m0.u.is_zero() && m0.v.is_zero() && m0.u_hat.is_zero() && m0.v_hat.is_zero());
        let m1 = monomial_action(&l, 1).unwrap();
        assert_eq!((m1.gamma, m1.u), (Scalar::one(), Scalar::zero()));
        // u_2 = (2γ_1 − γ_2) c3 = −c3/2 at q = 4
        assert_eq!(monomial_action(&l, 2).unwrap().u, s(-1, 1));
    }

    #[test]
    fn tnk_conventions() {
        let l = q4(1);
        let f = Polynomial::from_ints(&[2, -1, 3]);
        assert_eq!(tnk(&l, &f, 0, 0), f);
        assert!(tnk(&l, &f, 2, 5).is_zero());
        assert_eq!(tnk(&l, &Polynomial::z(), 1, 1), Polynomial::constant(s(4, 5)));
        for n in 0..5 {
            for (k, t) in tnk_row(&l, &Polynomial::from_ints(&[1, 2, 3, 4, 5]), n).iter().enumerate() {
                assert!(t.degree_i64() <= 4 - k as i64);
            }
        }
    }

    #[test]
    fn identity_examples() {
        let l = q4(0);
        let z = Polynomial::z();
        let r = verify_operator_identity(&l, OperatorIdentity::ProductDx, &z, Some(&z), 0).unwrap();
        assert!(r.exact_zero);
        let r = verify_operator_identity(&l, OperatorIdentity::DxnSx, &Polynomial::monomial(3, Scalar::one()), None, 2)
            .unwrap();
        assert!(r.exact_zero);
        assert!(verify_operator_identity(&l, OperatorIdentity::SwapSx, &z, None, 0).is_err());
        assert!("bogus".parse::<OperatorIdentity>().is_err());
    }

    fn arb_poly(max_deg: usize) -> impl Strategy<Value = Polynomial> {
        prop::collection::vec((-9i64..9, 1i64..5), 1..=max_deg + 1)
            .prop_map(|v| Polynomial::from_coeffs(v.into_iter().map(|(n, d)| s(n, d)).collect()))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn identities_hold_exactly(f in arb_poly(6), g in arb_poly(6), which in 0usize..6) {
            let l = &lattices()[which];
            for id in OperatorIdentity::ALL {
                let r = verify_operator_identity(l, id, &f, Some(&g), 3).unwrap();
                prop_assert!(r.exact_zero, "{id} on {l:?}: {r:?}");
            }
        }

        #[test]
        fn operators_are_linear(f in arb_poly(8), g in arb_poly(8), c in (-5i64..5, 1i64..4)) {
            let l = q4(2);
            let c = s(c.0, c.1);
            let comb = &f.scale(&c) + &g;
            prop_assert_eq!(dx(&l, &comb), &dx(&l, &f).scale(&c) + &dx(&l, &g));
            prop_assert_eq!(sx(&l, &comb), &sx(&l, &f).scale(&c) + &sx(&l, &g));
        }
    }
}
