//! The acceptance battery: ten numbered criteria, each a list of named checks.
//! Random inputs come from a seeded ChaCha stream, so a run is reproducible.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::characterize::{
    check_meixner_quadratic, check_structure, check_system, counterexample_coefficients, counterexample_family,
    first_characterization_c, first_characterization_family, meixner_linear_ops, pearson_from_ttrr,
    solve_first_characterization, Branch, PearsonCase, StructureRelation,
};
use crate::classical::{
    asymptotics, iterated_pair_closed, regularity, rodrigues_verify, ttrr_from_pearson, witness_point, PearsonPair,
    Verdict,
};
use crate::error::{Error, Result};
use crate::families::{family_ttrr, FamilySpec};
use crate::functional::{
    hankel_determinants, leibniz_deg2_rhs, leibniz_rhs, pearson_moments, ttrr_oracle, verify_functional_identity,
    FunctionalIdentity, MomentFunctional,
};
use crate::lattice::Lattice;
use crate::operators::{verify_operator_identity, OperatorIdentity, Residual};
use crate::polynomial::Polynomial;
use crate::scalar::{Scalar, DEFAULT_EPS};
use crate::ttrr::{build_ops, Ttrr};

pub const CRITERIA: usize = 10;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
        Check { name: name.into(), passed, detail: detail.into() }
    }

    fn residual(name: impl Into<String>, r: &Residual, eps: f64) -> Check {
        Check::new(name, r.passes(eps), describe(r))
    }

    fn error(name: impl Into<String>, e: &Error) -> Check {
        Check::new(name, false, format!("error: {e}"))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Wall time; kept out of JSON so reports are byte-stable.
    #[serde(skip)]
    pub elapsed: Duration,
}

impl CriterionReport {
    pub fn failing(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One-line verdict, `PASS` or `FAIL` plus the first failing check.
    pub fn summary(&self) -> String {
        let status = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!(
            "criterion {:>2} {status}  {} ({}/{} checks, {:.1} s)",
            self.id,
            self.title,
            self.checks.iter().filter(|c| c.passed).count(),
            self.checks.len(),
            self.elapsed.as_secs_f64()
        );
        if let Some(c) = self.failing().next() {
            line.push_str(&format!(" first failure: {}: {}", c.name, c.detail));
        }
        line
    }
}

pub fn title(id: usize) -> &'static str {
    match id {
        1 => "operator identities",
        2 => "Leibniz rule",
        3 => "closed-form recurrence vs moment oracle",
        4 => "regularity criterion vs vanishing norms",
        5 => "Rodrigues formula",
        6 => "structure relation D P_(n+1) = k_n S P_n",
        7 => "lowering relation and q-Hermite",
        8 => "four-term relation for continuous dual q-Hahn",
        9 => "Meixner-2 on linear vs quadratic lattices",
        10 => "asymptotics of the recurrence coefficients",
        _ => "unknown",
    }
}

/// Run criterion `id` (1-based).
pub fn run_criterion(id: usize, seed: u64) -> Result<CriterionReport> {
    let start = Instant::now();
    let checks = match id {
        1 => criterion_operators(seed),
        2 => criterion_leibniz(seed),
        3 => criterion_oracle(seed),
        4 => criterion_regularity(seed),
        5 => criterion_rodrigues(),
        6 => criterion_first_characterization(),
        7 => criterion_lowering(),
        8 => criterion_counterexample(),
        9 => criterion_meixner(),
        10 => criterion_asymptotics(),
        _ => return Err(Error::InvalidInput(format!("criteria are numbered 1..={CRITERIA}, got {id}"))),
    };
    let elapsed = start.elapsed();
    let mut checks = checks;
    if let Some(limit) = time_limit(id) {
        checks.push(Check::new(
            "runtime",
            elapsed <= limit,
            format!("limit {} s", limit.as_secs()),
        ));
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(CriterionReport { id, title: title(id), passed, checks, elapsed })
}

pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    (1..=CRITERIA).map(|id| run_criterion(id, seed).expect("ids are in range")).collect()
}

fn time_limit(id: usize) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(30)),
        10 => Some(Duration::from_secs(60)),
        _ => None,
    }
}

fn describe(r: &Residual) -> String {
    if r.exact_zero {
        "residual exactly 0".into()
    } else {
        format!("residual {:.3e} (relative {:.3e})", r.max_abs, r.relative())
    }
}

fn s(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d).expect("nonzero denominator")
}

/// A small nonzero-denominator rational `p/q` with `|p| ≤ 9`, `1 ≤ q ≤ 9`.
pub(crate) fn random_rational(rng: &mut ChaCha8Rng) -> Scalar {
    s(rng.gen_range(-9..=9), rng.gen_range(1..=9))
}

pub(crate) fn random_nonzero(rng: &mut ChaCha8Rng) -> Scalar {
    loop {
        let x = random_rational(rng);
        if !x.is_zero() {
            return x;
        }
    }
}

/// A polynomial of exact degree `deg`.
pub(crate) fn random_poly(rng: &mut ChaCha8Rng, deg: usize) -> Polynomial {
    let mut c: Vec<Scalar> = (0..deg).map(|_| random_rational(rng)).collect();
    c.push(random_nonzero(rng));
    Polynomial::from_coeffs(c)
}

pub(crate) fn random_functional(rng: &mut ChaCha8Rng, horizon: usize) -> MomentFunctional {
    MomentFunctional::new((0..=horizon).map(|_| random_rational(rng)).collect()).expect("nonempty")
}

/// A pair regular through `n_max`, rejection-sampled.
fn random_regular_pair(rng: &mut ChaCha8Rng, lat: &Lattice, n_max: usize) -> PearsonPair {
    loop {
        let p = PearsonPair::new(
            random_rational(rng),
            random_rational(rng),
            random_rational(rng),
            random_nonzero(rng),
            random_rational(rng),
        );
        if let Ok(p) = p {
            if regularity(lat, &p, n_max).is_ok_and(|r| r.is_regular()) {
                return p;
            }
        }
    }
}

fn sample_pair() -> PearsonPair {
    PearsonPair::new(s(1, 3), s(-1, 2), s(2, 7), s(3, 2), s(1, 5)).expect("nonzero pair")
}

/// The four lattices of the operator and Leibniz checks.
fn operator_lattices() -> Vec<(&'static str, Lattice)> {
    vec![
        ("q=1/4", Lattice::q_lattice(s(1, 4), s(1, 2), s(1, 3), s(1, 5)).expect("valid")),
        ("q=4", Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).expect("valid")),
        ("x=s^2", Lattice::quadratic(s(1, 1), s(0, 1), s(0, 1)).expect("valid")),
        ("x=s", Lattice::quadratic(s(0, 1), s(1, 1), s(0, 1)).expect("valid")),
    ]
}

/// One lattice of each kind.
fn kind_lattices() -> Vec<(&'static str, Lattice)> {
    vec![
        ("q-quadratic", Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5)).expect("valid")),
        ("q-linear", Lattice::q_lattice(s(1, 4), s(0, 1), s(2, 3), s(1, 7)).expect("valid")),
        ("quadratic", Lattice::quadratic(s(3, 2), s(1, 3), s(2, 5)).expect("valid")),
        ("linear", Lattice::quadratic(s(0, 1), s(3, 2), s(1, 5)).expect("valid")),
    ]
}

const BIGFLOAT_BITS: u32 = 128;
const TRIALS: usize = 100;

fn criterion_operators(seed: u64) -> Vec<Check> {
    let lattices = operator_lattices();
    let per_lattice: Vec<Vec<Check>> = std::thread::scope(|scope| {
        let handles: Vec<_> = lattices
            .iter()
            .enumerate()
            .map(|(i, (name, lat))| scope.spawn(move || operator_trials(name, lat, seed.wrapping_add(i as u64))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    per_lattice.into_iter().flatten().collect()
}

fn operator_trials(name: &str, lat: &Lattice, seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let big = match lat.to_precision(BIGFLOAT_BITS) {
        Ok(b) => b,
        Err(e) => return vec![Check::error(format!("{name} bigfloat"), &e)],
    };
    let mut worst = [[Residual::zero(); 2]; OperatorIdentity::ALL.len()];
    for _ in 0..TRIALS {
        let (df, dg) = (rng.gen_range(0..=8), rng.gen_range(0..=8));
        let f = random_poly(&mut rng, df);
        let g = random_poly(&mut rng, dg);
        let n = rng.gen_range(0..=8);
        let (fb, gb) = (f.to_precision(BIGFLOAT_BITS), g.to_precision(BIGFLOAT_BITS));
        for (k, id) in OperatorIdentity::ALL.into_iter().enumerate() {
            for (b, (l, f, g)) in [(lat, &f, &g), (&big, &fb, &gb)].into_iter().enumerate() {
                match verify_operator_identity(l, id, f, Some(g), n) {
                    Ok(r) => worst[k][b] = worst[k][b].max(r),
                    Err(e) => return vec![Check::error(format!("{name} {id}"), &e)],
                }
            }
        }
    }
    let mut out = Vec::new();
    for (k, id) in OperatorIdentity::ALL.into_iter().enumerate() {
        out.push(Check::residual(format!("{name} {id} exact"), &worst[k][0], 0.0));
        out.push(Check::residual(format!("{name} {id} bigfloat"), &worst[k][1], DEFAULT_EPS));
    }
    out
}

fn criterion_leibniz(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x2);
    let mut out = Vec::new();
    const M: usize = 10;
    for (name, lat) in operator_lattices() {
        let mut worst = Residual::zero();
        let mut err = None;
        'outer: for n in 0..=5 {
            for deg in 0..=4 {
                for _ in 0..2 {
                    let f = random_poly(&mut rng, deg);
                    let u = random_functional(&mut rng, M + deg + 1);
                    match verify_functional_identity(&lat, FunctionalIdentity::Leibniz, &f, &u, n, M) {
                        Ok(r) => worst = worst.max(r),
                        Err(e) => {
                            err = Some(e);
                            break 'outer;
                        }
                    }
                }
            }
        }
        out.push(match err {
            Some(e) => Check::error(format!("{name} leibniz"), &e),
            None => Check::residual(format!("{name} leibniz n<=5 deg f<=4"), &worst, 0.0),
        });
        if !lat.is_q() {
            continue;
        }
        let mut worst = Residual::zero();
        let mut err = None;
        for n in 0..=6 {
            let f = random_poly(&mut rng, 2);
            let u = random_functional(&mut rng, M + 3);
            let r = leibniz_rhs(&lat, &f, &u, n)
                .and_then(|general| leibniz_deg2_rhs(&lat, &f, &u, n)?.residual(&general, M));
            match r {
                Ok(r) => worst = worst.max(r),
                Err(e) => {
                    err = Some(e);
                    break;
                }
            }
        }
        out.push(match err {
            Some(e) => Check::error(format!("{name} degree-two form"), &e),
            None => Check::residual(format!("{name} degree-two form = general rule, n<=6"), &worst, 0.0),
        });
    }
    out
}

fn criterion_oracle(seed: u64) -> Vec<Check> {
    const N: usize = 10;
    const PAIRS: usize = 20;
    let lattices = kind_lattices();
    std::thread::scope(|scope| {
        let handles: Vec<_> = lattices
            .iter()
            .enumerate()
            .map(|(i, (name, lat))| {
                scope.spawn(move || {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x300 + i as u64));
                    let mut agree = 0;
                    let mut first_bad = None;
                    for k in 0..PAIRS {
                        let p = random_regular_pair(&mut rng, lat, N);
                        let closed = ttrr_from_pearson(lat, &p, N);
                        let oracle = pearson_moments(lat, &p.phi(), &p.psi(), Scalar::one(), 2 * N + 1)
                            .and_then(|u| ttrr_oracle(&u, N));
                        match (closed, oracle) {
                            (Ok(a), Ok(b)) if a.same_as(&b) => agree += 1,
                            (Ok(a), Ok(b)) => {
                                first_bad.get_or_insert(format!("pair {k}: relative gap {:.3e}", a.max_relative_diff(&b)));
                            }
                            (a, b) => {
                                first_bad.get_or_insert(format!("pair {k}: {:?} / {:?}", a.err(), b.err()));
                            }
                        }
                    }
                    let detail = first_bad.unwrap_or_else(|| format!("{agree}/{PAIRS} pairs agree exactly"));
                    Check::new(format!("{name} n<=10"), agree == PAIRS, detail)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    })
}

/// `c` such that `φ^[n]` vanishes at the root of `ψ^[n]`; the witness is
/// affine in `c` since only `φ(c3)` (resp. `φ(βn²)`) involves it.
fn engineer_witness_zero(lat: &Lattice, base: &PearsonPair, n: usize) -> Result<PearsonPair> {
    let with_c = |c: Scalar| PearsonPair::new(base.a.clone(), base.b.clone(), c, base.d.clone(), base.e.clone());
    let w = |c: Scalar| -> Result<Scalar> {
        let p = with_c(c)?;
        let (phi, _) = iterated_pair_closed(lat, &p, n)?;
        Ok(phi.eval(&witness_point(lat, &p, n)?))
    };
    let (w0, w1) = (w(Scalar::zero())?, w(Scalar::one())?);
    with_c(-(w0.checked_div(&(&w1 - &w0))?))
}

fn criterion_regularity(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, lat) in kind_lattices().into_iter().filter(|(n, _)| *n == "q-quadratic" || *n == "quadratic") {
        let check = (|| -> Result<Check> {
            let p = engineer_witness_zero(&lat, &sample_pair(), 2)?;
            let verdict = regularity(&lat, &p, 10)?.verdict;
            let u = pearson_moments(&lat, &p.phi(), &p.psi(), Scalar::one(), 9)?;
            let oracle = ttrr_oracle(&u, 4);
            let hankel = hankel_determinants(&u, 4)?;
            let first_zero = hankel.iter().position(Scalar::is_zero);
            let hit = matches!(oracle, Err(Error::NotRegular { n }) if n <= 3);
            Ok(Check::new(
                format!("{name} engineered witness at level 2"),
                verdict == Verdict::FailsWitness(2) && hit && first_zero.is_some_and(|k| k <= 3),
                format!("verdict {verdict:?}; oracle {:?}; first zero Hankel determinant {first_zero:?}", oracle.err()),
            ))
        })();
        out.push(check.unwrap_or_else(|e| Check::error(format!("{name} engineered witness"), &e)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x4);
    let mut bad = Vec::new();
    let mut total = 0;
    for (name, lat) in kind_lattices() {
        for k in 0..5 {
            total += 1;
            let p = random_regular_pair(&mut rng, &lat, 10);
            let ok = pearson_moments(&lat, &p.phi(), &p.psi(), Scalar::one(), 21)
                .and_then(|u| Ok(ttrr_oracle(&u, 10).is_ok() && hankel_determinants(&u, 10)?.iter().all(|d| !d.is_zero())))
                .unwrap_or(false);
            if !ok {
                bad.push(format!("{name}#{k}"));
            }
        }
    }
    out.push(Check::new(
        "regular pairs have nonvanishing norms through n=10",
        bad.is_empty(),
        if bad.is_empty() { format!("{total} pairs") } else { format!("zero norm for {}", bad.join(", ")) },
    ));
    out
}

fn criterion_rodrigues() -> Vec<Check> {
    let mut out = Vec::new();
    let mut pairs = vec![("sample", sample_pair())];
    pairs.push(("a=0", PearsonPair::new(s(0, 1), s(1, 2), s(-1, 3), s(-2, 1), s(1, 7)).expect("nonzero")));
    for (name, lat) in kind_lattices() {
        for (pname, p) in &pairs {
            let mut worst = Residual::zero();
            let mut err = None;
            for n in 0..=4 {
                match rodrigues_verify(&lat, p, n, 10) {
                    Ok(r) => worst = worst.max(r),
                    Err(e) => {
                        err = Some(e);
                        break;
                    }
                }
            }
            out.push(match err {
                Some(e) => Check::error(format!("{name} {pname}"), &e),
                None => Check::residual(format!("{name} {pname} n<=4 M=10"), &worst, 0.0),
            });
        }
    }
    out
}

fn criterion_first_characterization() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let lat = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5))?;
        let mut out = Vec::new();
        // C1 chosen so that r = 3 is rational; the round trip is then exact.
        let r0 = s(3, 1);
        let q = lat.q();
        let one = Scalar::one();
        let c1 = &(&(&(&(&one - &q.recip()?) * &(&one + &r0.recip()?)) * &(&one - &(&r0 * q))) * &lat.c1c2()) * &s(1, 2);
        let sol = solve_first_characterization(&lat, &c1, Branch::Plus, 12)?;
        out.push(Check::new(
            "round trip C1 -> r -> C1",
            sol.c1_round_trip == c1 && sol.r == r0,
            format!("r = {}", sol.r),
        ));
        out.push(Check::new(
            "B_n = c3",
            sol.ttrr.b.iter().all(|b| *b == lat.c3()),
            format!("n <= {}", sol.ttrr.n_max()),
        ));
        let printed = (0..12).all(|n| first_characterization_c(&lat, &sol.r, n).is_ok_and(|c| c == sol.ttrr.c[n + 1]));
        out.push(Check::new("C_(n+1) matches the closed product", printed, "n <= 11"));

        let big = lat.to_precision(BIGFLOAT_BITS)?;
        let sol_big = solve_first_characterization(&big, &c1, Branch::Plus, 12)?;
        let aw = first_characterization_family(&big, &sol_big.r, 12)?;
        let gap = aw.max_relative_diff(&sol_big.ttrr);
        out.push(Check::new(
            "coincides with askey_wilson(sqrt r, -sqrt r, i/sqrt(rq), -i/sqrt(rq))",
            gap < DEFAULT_EPS,
            format!("max relative gap {gap:.3e}"),
        ));

        let ops = build_ops(&lat, &sol.ttrr, 11)?;
        let rep = check_structure(&ops, StructureRelation::SxRaise, 10, 0.0)?;
        out.push(Check::new(
            "D P_(n+1) = (gamma_(n+1)/alpha_n) S P_n, n<=10",
            rep.passes(),
            match rep.first_failure {
                None => "holds".into(),
                Some(n) => format!("fails at n={n}: {}", describe(&rep.levels.iter().find(|l| l.n == n).expect("listed").residual)),
            },
        ));
        Ok(out)
    };
    run().unwrap_or_else(|e| vec![Check::error("first characterization", &e)])
}

fn q_hermite_ttrr(lat: &Lattice, n_max: usize) -> Result<Ttrr> {
    let q = lat.q().clone();
    let c12 = lat.c1c2();
    Ttrr::from_fn(n_max, |_| Ok(lat.c3()), |n| Ok(&(&Scalar::one() - &q.powi(n as i64)?) * &c12))
}

fn criterion_lowering() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let lat = Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 3), s(1, 5))?;
        let mut out = Vec::new();
        let qh = q_hermite_ttrr(&lat, 15)?;
        out.push(Check::new(
            "q_hermite family = (B_n = c3, C_(n+1) = (1-q^(n+1)) c1c2)",
            family_ttrr(&FamilySpec::q_hermite(), &lat, 15)?.same_as(&qh),
            "n <= 15",
        ));
        let pair = pearson_from_ttrr(&lat, &qh.b[0], &qh.b[1], &qh.c[1], &qh.c[2], PearsonCase::Lower)?;
        out.push(Check::new(
            "lowering pair reproduces q-Hermite",
            ttrr_from_pearson(&lat, &pair, 12)?.same_as(&qh.truncate(12)),
            "n <= 12",
        ));
        let rep = check_structure(&build_ops(&lat, &qh, 12)?, StructureRelation::Lower, 12, 0.0)?;
        out.push(Check::new(
            "q-Hermite: D P_n = gamma_n P_(n-1), n<=12",
            rep.passes(),
            format!("first failure {:?}", rep.first_failure),
        ));
        let sys = check_system(&lat, &qh, 12, 0.0)?;
        out.push(system_check("q-Hermite", &sys));

        let cheb = family_ttrr(&FamilySpec::chebyshev_u(), &lat, 15)?;
        let rep = check_structure(&build_ops(&lat, &cheb, 12)?, StructureRelation::Lower, 12, 0.0)?;
        out.push(Check::new(
            "chebyshev_u fails the lowering relation at n=2",
            rep.first_failure == Some(2),
            match rep.first_failure {
                Some(n) => format!("first failure at n={n}"),
                None => "no failure".into(),
            },
        ));
        out.push(system_check("chebyshev_u", &check_system(&lat, &cheb, 12, 0.0)?));
        Ok(out)
    };
    run().unwrap_or_else(|e| vec![Check::error("lowering", &e)])
}

fn system_check(name: &str, sys: &crate::characterize::SystemReport) -> Check {
    let failing: Vec<String> = sys
        .equations
        .iter()
        .filter_map(|e| e.first_failure.map(|n| format!("{} at n={n}", e.name)))
        .collect();
    Check::new(
        format!("{name} satisfies eq1S-eq5S"),
        failing.is_empty(),
        if failing.is_empty() { "all five hold".into() } else { failing.join(", ") },
    )
}

fn criterion_counterexample() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, q) in [("q=1/4", s(1, 4)), ("q=1/9", s(1, 9))] {
        let run = || -> Result<Vec<Check>> {
            let lat = Lattice::askey_wilson(q.clone())?.to_precision(192)?;
            let fam = counterexample_family(&lat, 11)?;
            let (printed, _) = counterexample_coefficients(&lat, 11)?;
            let gap = fam.max_relative_diff(&printed);
            let q14 = lat.sqrt_q().sqrt()?;
            let b0_gap = (&printed.b[0] - &q14).abs_f64();
            let ops = build_ops(&lat, &fam, 11)?;
            let rep = check_structure(&ops, StructureRelation::Counterexample4term, 10, DEFAULT_EPS)?;
            let worst = rep.levels.iter().map(|l| l.residual).fold(Residual::zero(), Residual::max);
            Ok(vec![
                Check::new(
                    format!("{name} displayed B_n, C_n = cdq_hahn(1, -1, q^(1/4) | q^(1/2))"),
                    gap < DEFAULT_EPS && b0_gap < DEFAULT_EPS,
                    format!("max relative gap {gap:.3e}; |B_0 - q^(1/4)| = {b0_gap:.3e}"),
                ),
                Check::new(format!("{name} four-term relation n<=10"), rep.passes(), describe(&worst)),
            ])
        };
        out.extend(run().unwrap_or_else(|e| vec![Check::error(name, &e)]));
    }
    out
}

fn criterion_meixner() -> Vec<Check> {
    let run = || -> Result<Vec<Check>> {
        let lin = Lattice::quadratic(s(0, 1), s(1, 1), s(0, 1))?;
        let mut out = Vec::new();
        let ops = meixner_linear_ops(&lin, &s(0, 1), &s(1, 3), 11)?;
        let rep = check_structure(&ops, StructureRelation::SxRaise, 10, 0.0)?;
        out.push(Check::new(
            "linear lattice: D P_(n+1) = (n+1) S P_n, n<=10",
            rep.passes(),
            format!("first failure {:?}", rep.first_failure),
        ));
        let rejected = meixner_linear_ops(&lin, &s(0, 1), &s(1, 2), 11);
        out.push(Check::new(
            "4 C1/c5^2 = 2 is rejected",
            matches!(rejected, Err(Error::Restriction { .. })),
            format!("{:?}", rejected.err()),
        ));
        let quad = Lattice::quadratic(s(1, 1), s(0, 1), s(0, 1))?;
        let rep = check_meixner_quadratic(&quad, &s(0, 1), &s(1, 3), 6, 0.0)?;
        out.push(Check::new(
            "quadratic lattice: the same relation fails by n=3",
            rep.first_failure.is_some_and(|n| n <= 3),
            format!("first failure {:?}", rep.first_failure),
        ));
        Ok(out)
    };
    run().unwrap_or_else(|e| vec![Check::error("meixner", &e)])
}

fn criterion_asymptotics() -> Vec<Check> {
    let mut out = Vec::new();
    let pair = sample_pair();
    for (name, q) in [("q=1/4", s(1, 4)), ("q=4", s(4, 1))] {
        let r = Lattice::q_lattice(q, s(1, 2), s(1, 3), s(1, 5)).and_then(|lat| asymptotics(&lat, &pair, 64));
        out.push(match r {
            Ok(rep) => {
                let id = rep.partial_sum_identity.unwrap_or_else(Residual::zero);
                Check::residual(format!("{name} partial-sum identity n<=64"), &id, 0.0)
            }
            Err(e) => Check::error(format!("{name} partial-sum identity"), &e),
        });
    }
    let half = Lattice::q_lattice(s(1, 2), s(1, 2), s(1, 3), s(1, 5))
        .and_then(|lat| lat.to_precision(BIGFLOAT_BITS))
        .and_then(|lat| asymptotics(&lat, &pair, 300));
    match half {
        Ok(rep) => out.extend(limit_checks("q=1/2", &rep.checks, 1e-6)),
        Err(e) => out.push(Check::error("q=1/2", &e)),
    }
    let quad = Lattice::quadratic(s(1, 1), s(1, 2), s(1, 3)).expect("valid");
    let a0 = PearsonPair::new(s(0, 1), s(1, 2), s(-1, 3), s(-2, 1), s(1, 7)).expect("nonzero");
    for (name, p) in [("quadratic a!=0", &pair), ("quadratic a=0", &a0)] {
        match asymptotics(&quad, p, 10_000) {
            Ok(rep) => out.extend(limit_checks(name, &rep.checks, 1e-2)),
            Err(e) => out.push(Check::error(name, &e)),
        }
    }
    out
}

fn limit_checks(prefix: &str, checks: &[crate::classical::LimitCheck], tol: f64) -> Vec<Check> {
    checks
        .iter()
        .map(|c| {
            Check::new(
                format!("{prefix} {} at n={}", c.name, c.n),
                c.error < tol,
                format!("estimate {:.10} limit {:.10} error {:.3e}", c.estimate, c.limit, c.error),
            )
        })
        .collect()
}
