//! Structure relations and what they force on the recurrence coefficients.
//!
//! * `sx_raise`: `D_x P_{n+1} = (γ_{n+1}/α_n) S_x P_n`;
//! * `lower`: `D_x P_n = γ_n P_{n−1}`;
//! * `counterexample4term`: a four-term relation for the continuous dual
//!   q-Hahn polynomials `R_n(·; 1, −1, q^{1/4} | q^{1/2})` on `x(s) = (q^{-s}+q^s)/2`.
//!
//! Constants `k_n = γ_{n+1}/α_n` and `c_n = γ_n` are fixed by matching leading
//! coefficients; nothing is fitted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::classical::{ttrr_from_pearson, PearsonPair};
use crate::error::{Error, Result};
use crate::families::{family_ttrr, FamilySpec};
use crate::lattice::Lattice;
use crate::operators::{dx, sx, Residual};
use crate::polynomial::Polynomial;
use crate::scalar::{Backend, Scalar};
use crate::ttrr::{build_ops, OpSequence, Ttrr};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureRelation {
    SxRaise,
    Lower,
    Counterexample4term,
}

impl StructureRelation {
    pub const ALL: [StructureRelation; 3] =
        [StructureRelation::SxRaise, StructureRelation::Lower, StructureRelation::Counterexample4term];

    pub fn name(self) -> &'static str {
        match self {
            StructureRelation::SxRaise => "sx_raise",
            StructureRelation::Lower => "lower",
            StructureRelation::Counterexample4term => "counterexample4term",
        }
    }

    pub fn statement(self) -> &'static str {
        match self {
            StructureRelation::SxRaise => "D P_(n+1) = (gamma_(n+1)/alpha_n) S P_n",
            StructureRelation::Lower => "D P_n = gamma_n P_(n-1)",
            StructureRelation::Counterexample4term => {
                "(alpha^2-1)(z^2-1) D R_n = four-term combination of R_(n+1), R_n, R_(n-1), R_(n-2)"
            }
        }
    }

    /// Index of the largest `P_m` the relation touches at level `n`.
    fn reach(self, n: usize) -> usize {
        match self {
            StructureRelation::SxRaise | StructureRelation::Counterexample4term => n + 1,
            StructureRelation::Lower => n,
        }
    }
}

impl fmt::Display for StructureRelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StructureRelation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s == "counterexample" {
            return Ok(StructureRelation::Counterexample4term);
        }
        StructureRelation::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown relation {s:?}")))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResidual {
    pub n: usize,
    #[serde(flatten)]
    pub residual: Residual,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub relation: StructureRelation,
    pub levels: Vec<LevelResidual>,
    pub first_failure: Option<usize>,
}

impl StructureReport {
    pub fn passes(&self) -> bool {
        self.first_failure.is_none()
    }

    fn from_levels(relation: StructureRelation, levels: Vec<LevelResidual>, eps: f64) -> StructureReport {
        let first_failure = levels.iter().find(|l| !l.residual.passes(eps)).map(|l| l.n);
        StructureReport { relation, levels, first_failure }
    }
}

/// Evaluate `relation` at each level `n ≤ N` (`1 ≤ n` for `lower`). `ops`
/// must reach `P_{N+1}` where the relation needs it. Bigfloat residuals pass
/// when relative to the larger side they are at most `eps`.
pub fn check_structure(ops: &OpSequence, relation: StructureRelation, n_max: usize, eps: f64) -> Result<StructureReport> {
    let lat = ops.lattice();
    if relation.reach(n_max) > ops.n_max() {
        return Err(Error::InvalidInput(format!(
            "{relation} up to n = {n_max} needs P_{}, only P_{} is built",
            relation.reach(n_max),
            ops.n_max()
        )));
    }
    let levels = match relation {
        StructureRelation::SxRaise => (0..=n_max)
            .map(|n| {
                let k = lat.gamma_at(n + 1).checked_div(&lat.alpha_at(n))?;
                let lhs = dx(lat, ops.p(n + 1));
                let rhs = sx(lat, ops.p(n)).scale(&k);
                Ok(LevelResidual { n, residual: Residual::of_polys(&lhs, &rhs) })
            })
            .collect::<Result<Vec<_>>>()?,
        StructureRelation::Lower => (1..=n_max)
            .map(|n| {
                let lhs = dx(lat, ops.p(n));
                let rhs = ops.p(n - 1).scale(&lat.gamma_at(n));
                LevelResidual { n, residual: Residual::of_polys(&lhs, &rhs) }
            })
            .collect(),
        StructureRelation::Counterexample4term => counterexample_levels(ops, n_max)?,
    };
    Ok(StructureReport::from_levels(relation, levels, eps))
}

/// The lattice the counterexample lives on: `c1 = c2 = 1/2`, `c3 = 0`.
fn require_counterexample_lattice(lat: &Lattice) -> Result<()> {
    let half = Scalar::ratio(1, 2)?;
    let c = lat.c();
    let ok = lat.is_q()
        && (&c[0] - &half).abs_f64() < 1e-30
        && (&c[1] - &half).abs_f64() < 1e-30
        && c[2].abs_f64() < 1e-30;
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidLattice("the four-term relation needs x(s) = (q^-s + q^s)/2".into()))
    }
}

/// `q^{k/4}` for the lattice base `q`.
fn quarter_pow(lat: &Lattice, k: i64) -> Result<Scalar> {
    let q14 = lat.sqrt_q().sqrt()?;
    q14.powi(k)
}

/// The printed coefficients of the four-term relation:
/// `B_n = ½((1+q^{−1/2})q^{n/2} + 1 − q^{−1/2}) q^{(2n+1)/4}`,
/// `C_n = ¼(1+q^{(n−1)/2})(1−q^{n/2})(1−q^{n−1/2})` and `c_n = C_n q^{−(2n−1)/4}`.
pub fn counterexample_coefficients(lat: &Lattice, n_max: usize) -> Result<(Ttrr, Vec<Scalar>)> {
    require_counterexample_lattice(lat)?;
    let one = Scalar::one();
    let half = Scalar::ratio(1, 2)?;
    let quarter = Scalar::ratio(1, 4)?;
    let w_inv = lat.w_pow(-1);
    let b = |n: i64| -> Result<Scalar> {
        let inner = &(&(&(&one + &w_inv) * &lat.w_pow(n)) + &one) - &w_inv;
        Ok(&(&inner * &quarter_pow(lat, 2 * n + 1)?) * &half)
    };
    let c = |n: i64| -> Scalar {
        let f = &(&(&one + &lat.w_pow(n - 1)) * &(&one - &lat.w_pow(n))) * &(&one - &lat.w_pow(2 * n - 1));
        &f * &quarter
    };
    let t = Ttrr::from_fn(n_max, |n| b(n as i64), |n| Ok(c(n as i64)))?;
    let small_c = (0..=n_max)
        .map(|n| if n == 0 { Ok(Scalar::zero()) } else { Ok(&t.c[n] * &quarter_pow(lat, 1 - 2 * n as i64)?) })
        .collect::<Result<Vec<_>>>()?;
    Ok((t, small_c))
}

/// `R_n(·; 1, −1, q^{1/4} | q^{1/2})` on `x(s) = (q^{-s}+q^s)/2`.
pub fn counterexample_family(lat: &Lattice, n_max: usize) -> Result<Ttrr> {
    require_counterexample_lattice(lat)?;
    let spec = FamilySpec::cdq_hahn(Scalar::one(), -Scalar::one(), quarter_pow(lat, 1)?).with_base(lat.sqrt_q().clone());
    family_ttrr(&spec, lat, n_max)
}

fn counterexample_levels(ops: &OpSequence, n_max: usize) -> Result<Vec<LevelResidual>> {
    let lat = ops.lattice();
    let (t, c) = counterexample_coefficients(lat, n_max + 1)?;
    let (bb, cc) = (&t.b, &t.c);
    let alpha = lat.alpha();
    let a2m1 = &(alpha * alpha) - &Scalar::one();
    let one = Scalar::one();
    let z2m1 = &Polynomial::monomial(2, Scalar::one()) - &Polynomial::one();
    let mut out = Vec::new();
    for n in 0..=n_max {
        let lhs = (&z2m1 * &dx(lat, ops.p(n))).scale(&a2m1);
        let mut rhs = ops.p(n + 1).scale(&(&a2m1 * &lat.gamma_at(n)));
        let k0 = &(&c[n + 1] - &(alpha * &c[n])) + &(&(&(&one - alpha) * &lat.alpha_at(n)) * &bb[n]);
        rhs = &rhs + &ops.p(n).scale(&k0);
        if n >= 1 {
            let k1 = &(&(&bb[n] - &(alpha * &bb[n - 1])) * &c[n]) + &(&(&one - &(alpha * alpha)) * &(&lat.gamma_at(n) * &cc[n]));
            rhs = &rhs + &ops.p(n - 1).scale(&k1);
        }
        if n >= 2 {
            let k2 = &(&c[n - 1] * &cc[n]) - &(&(alpha * &c[n]) * &cc[n - 1]);
            rhs = &rhs + &ops.p(n - 2).scale(&k2);
        }
        out.push(LevelResidual { n, residual: Residual::of_polys(&lhs, &rhs) });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PearsonCase {
    SxRaise,
    Lower,
}

/// The Pearson pair that a structure relation forces, read off `B0, B1, C1, C2`.
///
/// `sx_raise`: `ψ = B0 − z`, `φ = (α − α⁻¹)(z − c3)(z − B0) + α⁻¹C1`
/// (`q ≠ 1`) or `2β(z − B0) + C1` (`q = 1`).
/// `lower`: `ψ = z − B0`, `φ = (𝔞z − 𝔟)(z − B0) − (𝔞 + α)C1` with
/// `𝔞 = α(2C1 − C2)/C2`, `𝔟 = β − B0 + 2αB1C1/C2`.
pub fn pearson_from_ttrr(
    lat: &Lattice,
    b0: &Scalar,
    b1: &Scalar,
    c1: &Scalar,
    c2: &Scalar,
    case: PearsonCase,
) -> Result<PearsonPair> {
    if c1.is_zero() || c2.is_zero() {
        return Err(Error::VanishingC { n: if c1.is_zero() { 1 } else { 2 } });
    }
    let alpha = lat.alpha();
    let beta = lat.beta();
    let zb0 = Polynomial::linear_factor(b0);
    match case {
        PearsonCase::SxRaise => {
            let phi = if lat.is_q() {
                let k = alpha - &alpha.recip()?;
                &(&Polynomial::linear_factor(&lat.c3()) * &zb0).scale(&k)
                    + &Polynomial::constant(c1.checked_div(alpha)?)
            } else {
                &zb0.scale(&(&Scalar::from(2) * beta)) + &Polynomial::constant(c1.clone())
            };
            PearsonPair::from_polys(&phi, &-zb0)
        }
        PearsonCase::Lower => {
            let aa = (alpha * &(&(&Scalar::from(2) * c1) - c2)).checked_div(c2)?;
            let bb = &(beta - b0) + &(&(&Scalar::from(2) * alpha) * &(b1 * c1)).checked_div(c2)?;
            let lin = Polynomial::from_coeffs(vec![-bb, aa.clone()]);
            let phi = &(&lin * &zb0) - &Polynomial::constant(&(&aa + alpha) * c1);
            PearsonPair::from_polys(&phi, &zb0)
        }
    }
}

/// Residuals of one equation of the difference system, per level.
#[derive(Debug, Clone, Serialize)]
pub struct EquationReport {
    pub name: &'static str,
    pub levels: Vec<LevelResidual>,
    pub first_failure: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemReport {
    pub k1: Scalar,
    pub k2: Scalar,
    pub equations: Vec<EquationReport>,
}

impl SystemReport {
    pub fn passes(&self) -> bool {
        self.equations.iter().all(|e| e.first_failure.is_none())
    }
}

fn sum_residual(terms: &[Scalar], backend: Backend) -> Residual {
    let total: Scalar = terms.iter().cloned().sum();
    Residual::from_parts(std::slice::from_ref(&total), terms, &[], backend)
}

/// The five difference equations that `lower` forces on a q-quadratic
/// lattice, with `c_n = γ_n`, `t_n = γ_n / C_n`, `t_0 = k1 + k2` where
/// `t_n = k1 q^{n/2} + k2 q^{−n/2}` is fitted to `t_1, t_2`, and `c_0 = C_0 = 0`.
/// Each equation is evaluated at every `n ≤ N` whose indices it can reach in
/// the table (`eq4S` from `n = 2`, `eq5S` from `n = 1`).
pub fn check_system(lat: &Lattice, ttrr: &Ttrr, n_max: usize, eps: f64) -> Result<SystemReport> {
    if !lat.is_q() || lat.c1c2().is_zero() {
        return Err(Error::InvalidLattice("the difference system needs a q-quadratic lattice".into()));
    }
    let top = ttrr.n_max();
    if let Some(n) = ttrr.first_vanishing_c() {
        return Err(Error::VanishingC { n });
    }
    if top < 2 {
        return Err(Error::InvalidInput("the difference system needs C_1 and C_2".into()));
    }
    let backend = lat.backend();
    let alpha = lat.alpha();
    let (c3, c12) = (lat.c3(), lat.c1c2());
    let w = lat.sqrt_q().clone();
    let w_inv = w.recip()?;
    let t_raw = |n: usize| -> Result<Scalar> { lat.gamma_at(n).checked_div(&ttrr.c[n]) };
    let (t1, t2) = (t_raw(1)?, t_raw(2)?);
    let det = &w_inv - &w;
    let k1 = (&(&t1 * &(&w_inv * &w_inv)) - &(&t2 * &w_inv)).checked_div(&det)?;
    let k2 = (&(&w * &t2) - &(&(&w * &w) * &t1)).checked_div(&det)?;
    let t = |n: usize| -> Result<Scalar> { if n == 0 { Ok(&k1 + &k2) } else { t_raw(n) } };
    let c = |n: usize| lat.gamma_at(n);
    let bc = |n: usize| &ttrr.b[n] - &c3;
    let cc = |n: usize| &ttrr.c[n] - &c12;
    let two_alpha = &Scalar::from(2) * alpha;
    let one = Scalar::one();

    let mut eqs: Vec<(&'static str, Vec<LevelResidual>)> = Vec::new();
    let range = |lo: usize, reach: usize| lo..=n_max.min(top.saturating_sub(reach));
    let lv = |n: usize, terms: Vec<Scalar>| LevelResidual { n, residual: sum_residual(&terms, backend) };

    eqs.push((
        "eq1S",
        range(0, 2).map(|n| lv(n, vec![c(n + 2), -(&two_alpha * &c(n + 1)), c(n)])).collect(),
    ));
    eqs.push((
        "eq2S",
        range(0, 2)
            .map(|n| Ok(lv(n, vec![t(n + 2)?, -(&two_alpha * &t(n + 1)?), t(n)?])))
            .collect::<Result<_>>()?,
    ));
    eqs.push((
        "eq3S",
        range(0, 3)
            .map(|n| {
                Ok(lv(
                    n,
                    vec![
                        &t(n + 3)? * &bc(n + 2),
                        -(&(&t(n + 2)? + &t(n + 1)?) * &bc(n + 1)),
                        &t(n)? * &bc(n),
                    ],
                ))
            })
            .collect::<Result<_>>()?,
    ));
    eqs.push((
        "eq4S",
        range(2, 2)
            .map(|n| {
                let tn = t(n)?;
                let (b0, b1) = (bc(n), bc(n - 1));
                let quad = &(&(&b0 * &b0) - &(&(&two_alpha * &b0) * &b1)) + &(&b1 * &b1);
                Ok(lv(
                    n,
                    vec![
                        &(&t(n + 1)? + &t(n + 2)?) * &cc(n + 1),
                        -(&(&(&Scalar::from(2) * &(&one + alpha)) * &tn) * &cc(n)),
                        &(&t(n - 1)? + &t(n - 2)?) * &cc(n - 1),
                        -(&tn * &quad),
                    ],
                ))
            })
            .collect::<Result<_>>()?,
    ));
    eqs.push((
        "eq5S",
        range(1, 1)
            .map(|n| {
                lv(
                    n,
                    vec![
                        &c(n + 1) * &bc(n + 1),
                        &(&(&one - &two_alpha) * &(&c(n) + &c(n + 1))) * &bc(n),
                        &c(n) * &bc(n - 1),
                    ],
                )
            })
            .collect(),
    ));
    let equations = eqs
        .into_iter()
        .map(|(name, levels)| {
            let first_failure = levels.iter().find(|l| !l.residual.passes(eps)).map(|l| l.n);
            EquationReport { name, levels, first_failure }
        })
        .collect();
    Ok(SystemReport { k1, k2, equations })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Serialize)]
pub struct FirstCharacterization {
    pub r: Scalar,
    /// `C1` recomputed from `r`.
    pub c1_round_trip: Scalar,
    pub pair: PearsonPair,
    pub ttrr: Ttrr,
}

/// Solve the `sx_raise` characterization on a q-quadratic lattice for a
/// given `C1`: `r = A ± √(q⁻¹ + A²)` with `A = (C1 + 2(α²−1)c1c2)/((1−q)c1c2)`,
/// `φ = −(α − α⁻¹)(z − c3)² − α⁻¹C1`, `ψ = z − c3`, and the recurrence from
/// the classical closed forms. Fails if `r ∈ {q^{n−1}, −q^{−n}}` for some
/// `n ≤ N + 1`.
pub fn solve_first_characterization(lat: &Lattice, c1: &Scalar, branch: Branch, n_max: usize) -> Result<FirstCharacterization> {
    if !lat.is_q() || lat.c1c2().is_zero() {
        return Err(Error::InvalidLattice("the first characterization needs a q-quadratic lattice".into()));
    }
    let q = lat.q();
    let alpha = lat.alpha();
    let one = Scalar::one();
    let c12 = lat.c1c2();
    let a2m1 = &(alpha * alpha) - &one;
    let c1 = c1.to_backend(lat.backend())?;
    let big_a = (&c1 + &(&(&Scalar::from(2) * &a2m1) * &c12)).checked_div(&(&(&one - q) * &c12))?;
    let root = (&q.recip()? + &(&big_a * &big_a)).sqrt()?;
    let r = match branch {
        Branch::Plus => &big_a + &root,
        Branch::Minus => &big_a - &root,
    };
    let tol = lat.backend().zero_tolerance();
    for n in 0..=(n_max as i64 + 1) {
        for bad in [q.powi(n - 1)?, -q.powi(-n)?] {
            let gap = &r - &bad;
            if gap.is_zero() || gap.is_negligible(bad.abs_f64(), tol) {
                return Err(Error::Restriction { family: "first characterization".into(), n: n as usize });
            }
        }
    }
    let c1_round_trip = &(&(&(&(&one - &q.recip()?) * &(&one + &r.recip()?)) * &(&one - &(&r * q))) * &c12)
        * &Scalar::ratio(1, 2)?;
    let shift = Polynomial::linear_factor(&lat.c3());
    let phi = &(&shift * &shift).scale(&-(alpha - &alpha.recip()?)) - &Polynomial::constant(c1.checked_div(alpha)?);
    let pair = PearsonPair::from_polys(&phi, &shift)?;
    let ttrr = ttrr_from_pearson(lat, &pair, n_max)?;
    Ok(FirstCharacterization { r, c1_round_trip, pair, ttrr })
}

/// The printed closed form
/// `C_{n+1} = c1c2 (1+q^{n−2})(1−q^{n+1})(1+rqⁿ)(1−r⁻¹q^{n−1}) / ((1+q^{2n−2})(1+q^{2n}))`.
pub fn first_characterization_c(lat: &Lattice, r: &Scalar, n: usize) -> Result<Scalar> {
    let q = lat.q();
    let one = Scalar::one();
    let k = n as i64;
    let num = &(&(&(&one + &q.powi(k - 2)?) * &(&one - &q.powi(k + 1)?)) * &(&one + &(r * &q.powi(k)?)))
        * &(&one - &(&r.recip()? * &q.powi(k - 1)?));
    let den = &(&one + &q.powi(2 * k - 2)?) * &(&one + &q.powi(2 * k)?);
    Ok(&lat.c1c2() * &num.checked_div(&den)?)
}

/// `askey_wilson(√r, −√r, i/√(rq), −i/√(rq))` mapped onto the lattice.
pub fn first_characterization_family(lat: &Lattice, r: &Scalar, n_max: usize) -> Result<Ttrr> {
    let sr = r.sqrt()?;
    let t = Scalar::i().checked_div(&(r * lat.q()).sqrt()?)?;
    family_ttrr(&FamilySpec::askey_wilson([sr.clone(), -sr, t.clone(), -t]), lat, n_max)
}

/// Meixner-2 image on a linear lattice `x(s) = c5 s + c6`:
/// `P_n(z) = (i c5/2)ⁿ M_n(2i(B0 − z)/c5; 0, −4C1/c5²)`, checked against
/// `D_x P_{n+1} = (n+1) S_x P_n` for `n ≤ N`. Rejects `4C1/c5² ∈ ℕ₀`.
pub fn check_meixner_linear(lat: &Lattice, b0: &Scalar, c1: &Scalar, n_max: usize, eps: f64) -> Result<StructureReport> {
    check_structure(&meixner_linear_ops(lat, b0, c1, n_max + 1)?, StructureRelation::SxRaise, n_max, eps)
}

/// `P_0..P_N` of the Meixner-2 image used by [`check_meixner_linear`].
pub fn meixner_linear_ops(lat: &Lattice, b0: &Scalar, c1: &Scalar, n_max: usize) -> Result<OpSequence> {
    if lat.is_q() || !lat.beta().is_zero() || lat.c()[1].is_zero() {
        return Err(Error::InvalidLattice("need a linear lattice (β = 0, c5 ≠ 0)".into()));
    }
    let c5 = &lat.c()[1];
    let eta = -(&Scalar::from(4) * c1).checked_div(&(c5 * c5))?;
    let raw = family_ttrr(&FamilySpec::meixner2(Scalar::zero(), eta), lat, n_max)?;
    let lambda = (&Scalar::i() * c5).checked_div(&Scalar::from(2))?;
    let t = raw.affine(&lambda, &b0.to_backend(lat.backend())?);
    build_ops(lat, &t, n_max)
}

/// The same relation on a quadratic lattice, for the recurrence that the
/// closed forms produce from the `sx_raise` pair
/// (`φ = 2β(z − B0) + C1`, `ψ = B0 − z`).
pub fn check_meixner_quadratic(lat: &Lattice, b0: &Scalar, c1: &Scalar, n_max: usize, eps: f64) -> Result<StructureReport> {
    if lat.is_q() || lat.beta().is_zero() {
        return Err(Error::InvalidLattice("need a quadratic lattice (β ≠ 0)".into()));
    }
    let pair = pearson_from_ttrr(lat, b0, b0, c1, c1, PearsonCase::SxRaise)?;
    let t = ttrr_from_pearson(lat, &pair, n_max + 1)?;
    let ops = build_ops(lat, &t, n_max + 1)?;
    check_structure(&ops, StructureRelation::SxRaise, n_max, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::{pearson_moments, ttrr_oracle};

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    fn qquad() -> Lattice {
        Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).unwrap()
    }

    #[test]
    fn q_hermite_lower_and_system() {
        let lat = qquad();
        let t = family_ttrr(&FamilySpec::q_hermite(), &lat, 16).unwrap();
        let ops = build_ops(&lat, &t, 13).unwrap();
        assert!(check_structure(&ops, StructureRelation::Lower, 12, 0.0).unwrap().passes());
        let sys = check_system(&lat, &t, 12, 0.0).unwrap();
        assert!(sys.passes(), "{sys:?}");

        let mut bad = t.clone();
        bad.c[3] = &bad.c[3] + &s(1, 1000);
        let sys = check_system(&lat, &bad, 12, 0.0).unwrap();
        let eq4 = sys.equations.iter().find(|e| e.name == "eq4S").unwrap();
        assert!(eq4.first_failure.is_some());
    }

    #[test]
    fn chebyshev_u_solves_the_system_but_not_lower() {
        let lat = qquad();
        let t = family_ttrr(&FamilySpec::chebyshev_u(), &lat, 16).unwrap();
        assert!(check_system(&lat, &t, 12, 0.0).unwrap().passes());
        let ops = build_ops(&lat, &t, 9).unwrap();
        let rep = check_structure(&ops, StructureRelation::Lower, 8, 0.0).unwrap();
        // D P_2 = γ_2 P_1 holds whenever B_n = c3; the first failure is at 3.
        assert_eq!(rep.first_failure, Some(3));
    }

    #[test]
    fn lower_pair_reproduces_q_hermite() {
        let lat = qquad();
        let t = family_ttrr(&FamilySpec::q_hermite(), &lat, 8).unwrap();
        let pair = pearson_from_ttrr(&lat, &t.b[0], &t.b[1], &t.c[1], &t.c[2], PearsonCase::Lower).unwrap();
        let u = pearson_moments(&lat, &pair.phi(), &pair.psi(), s(1, 1), 13).unwrap();
        assert!(ttrr_oracle(&u, 6).unwrap().same_as(&t));
        // 𝔞 = −1/(2u)
        let w = lat.sqrt_q();
        let uu = (w - &w.recip().unwrap()).recip().unwrap();
        assert_eq!(pair.a, -(&Scalar::from(2) * &uu).recip().unwrap());
    }

    #[test]
    fn sx_raise_pair_on_quadratic_lattice() {
        let lat = Lattice::quadratic(s(1, 1), s(1, 1), s(0, 1)).unwrap();
        let p = pearson_from_ttrr(&lat, &s(1, 3), &s(0, 1), &s(1, 2), &s(1, 1), PearsonCase::SxRaise).unwrap();
        let two_beta = &Scalar::from(2) * lat.beta();
        assert_eq!(p.phi(), &Polynomial::linear_factor(&s(1, 3)).scale(&two_beta) + &Polynomial::constant(s(1, 2)));
        assert_eq!(p.psi(), -Polynomial::linear_factor(&s(1, 3)));
    }

    #[test]
    fn first_characterization() {
        // r = 3 at q = 4; the other root of the quadratic is −1/(qr).
        let lat = qquad();
        let r = s(3, 1);
        let c1 = &(&(&(s(3, 4) * s(4, 3)) * &s(-11, 1)) * &lat.c1c2()) * &s(1, 2);
        let mut roots = Vec::new();
        for branch in [Branch::Plus, Branch::Minus] {
            let sol = solve_first_characterization(&lat, &c1, branch, 8).unwrap();
            assert_eq!(sol.c1_round_trip, c1);
            for n in 0..8 {
                assert_eq!(sol.ttrr.b[n], lat.c3());
                assert_eq!(sol.ttrr.c[n + 1], first_characterization_c(&lat, &sol.r, n).unwrap());
            }
            roots.push(sol.r);
        }
        assert!(roots.contains(&r) && roots.contains(&s(-1, 12)));

        let big = lat.to_precision(128).unwrap();
        let sol = solve_first_characterization(&big, &c1, Branch::Plus, 8).unwrap();
        let aw = first_characterization_family(&big, &sol.r, 8).unwrap();
        assert!(aw.max_relative_diff(&sol.ttrr) < 1e-25);
    }

    #[test]
    fn first_characterization_excluded_r() {
        // r = q^2 is excluded.
        let lat = qquad();
        let r = s(16, 1);
        let c1 = &(&(&(s(3, 4) * s(17, 16)) * &s(-63, 1)) * &lat.c1c2()) * &s(1, 2);
        let err = [Branch::Plus, Branch::Minus]
            .into_iter()
            .filter_map(|b| solve_first_characterization(&lat, &c1, b, 8).err())
            .next();
        assert!(matches!(err, Some(Error::Restriction { n: 3, .. })), "{err:?} {r}");
    }

    #[test]
    fn meixner_linear_and_quadratic() {
        let lin = Lattice::quadratic(s(0, 1), s(1, 1), s(0, 1)).unwrap();
        // C_n = n C1 − n(n−1) c5²/4 with B_n = B0
        let ops = meixner_linear_ops(&lin, &s(1, 5), &s(1, 3), 6).unwrap();
        for n in 1..=6i64 {
            let nn = s(n, 1);
            let want = &(&nn * &s(1, 3)) - &(&(&nn * &s(n - 1, 1)) * &s(1, 4));
            assert_eq!(ops.ttrr().c[n as usize], want);
            assert_eq!(ops.ttrr().b[n as usize], s(1, 5));
        }
        assert!(check_meixner_linear(&lin, &s(1, 5), &s(1, 3), 10, 0.0).unwrap().passes());
        // 4 C1 / c5² = 2 makes C_3 vanish.
        assert!(matches!(
            check_meixner_linear(&lin, &s(0, 1), &s(1, 2), 10, 0.0),
            Err(Error::Restriction { .. })
        ));
        let quad = Lattice::quadratic(s(1, 1), s(1, 1), s(0, 1)).unwrap();
        let rep = check_meixner_quadratic(&quad, &s(1, 3), &s(1, 2), 6, 0.0).unwrap();
        assert!(rep.first_failure.is_some_and(|n| n <= 3), "{rep:?}");
    }

    #[test]
    fn counterexample_at_rational_quarter_root() {
        // q = 1/16: q^{1/4} = 1/2 is rational, so everything stays exact.
        let lat = Lattice::askey_wilson(s(1, 16)).unwrap();
        let fam = counterexample_family(&lat, 9).unwrap();
        let (printed, _) = counterexample_coefficients(&lat, 9).unwrap();
        assert!(fam.same_as(&printed));
        assert_eq!(printed.b[0], s(1, 2));
        let ops = build_ops(&lat, &fam, 9).unwrap();
        let rep = check_structure(&ops, StructureRelation::Counterexample4term, 8, 0.0).unwrap();
        assert!(rep.passes(), "{rep:?}");
    }
}
