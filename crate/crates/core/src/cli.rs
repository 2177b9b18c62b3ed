//! Command-line front end. Every command writes one JSON document (or a CSV
//! table for recurrence and moment data) and exits 0 when all requested
//! checks pass, 1 when a check fails and 2 on invalid input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::battery::{random_functional, random_poly, run_all};
use crate::characterize::{check_structure, counterexample_family, StructureRelation};
use crate::classical::{
    admissibility, asymptotics, regularity, rodrigues_verify, ttrr_from_pearson, PearsonPair, Verdict,
};
use crate::error::{Error, Result};
use crate::families::{family_ttrr, FamilyName, FamilySpec};
use crate::functional::{pearson_moments, ttrr_oracle, verify_functional_identity, FunctionalIdentity, MomentFunctional};
use crate::lattice::{Lattice, LatticeSpec};
use crate::operators::{verify_operator_identity, OperatorIdentity, Residual};
use crate::scalar::{Backend, Scalar, DEFAULT_EPS, DEFAULT_PRECISION};
use crate::ttrr::{build_ops, Ttrr};

#[derive(Debug, Parser)]
#[command(name = "latticeops", version, about = "Orthogonal polynomials on quadratic and q-quadratic lattices")]
pub struct Cli {
    #[command(flatten)]
    pub run: RunOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BackendArg {
    Exact,
    Bigfloat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct RunOpts {
    #[arg(long, value_enum, default_value_t = BackendArg::Exact, global = true)]
    pub backend: BackendArg,
    /// Bigfloat precision in bits (at least 64).
    #[arg(long, env = "LATTICEOPS_PRECISION", default_value_t = DEFAULT_PRECISION, global = true)]
    pub precision: u32,
    /// Relative tolerance for bigfloat residuals.
    #[arg(long, default_value_t = DEFAULT_EPS, global = true)]
    pub eps: f64,
    #[arg(long, default_value_t = 7, global = true)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Randomized identity suites.
    Verify {
        #[command(subcommand)]
        suite: Suite,
    },
    /// Moments of the Pearson functional `D(φu) = S(ψu)`.
    Moments {
        #[command(flatten)]
        lp: LatticePair,
        #[arg(short = 'N', default_value_t = 20)]
        n: usize,
        #[arg(long, default_value = "1")]
        mu0: String,
    },
    /// Admissibility, regularity, recurrence coefficients and Rodrigues data of a pair.
    Classify {
        #[command(flatten)]
        lp: LatticePair,
        #[arg(short = 'N', default_value_t = 20)]
        n: usize,
        /// Check the Rodrigues formula for every n up to this.
        #[arg(long)]
        rodrigues: Option<usize>,
        /// Estimate the limits of the coefficients at this n.
        #[arg(long)]
        asymptotics: Option<usize>,
    },
    /// Recurrence coefficients or polynomials of a named family.
    Family {
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(short = 'N', default_value_t = 12)]
        n: usize,
        #[arg(long, value_enum, default_value_t = Emit::Ttrr)]
        emit: Emit,
    },
    /// Check a structure relation on a family or on the polynomials of a pair.
    Characterize {
        #[arg(long)]
        relation: String,
        #[command(flatten)]
        fam: FamilyArgs,
        #[arg(long)]
        pair: Option<String>,
        #[arg(short = 'N', default_value_t = 12)]
        n: usize,
    },
    /// Run the full acceptance battery.
    All,
}

#[derive(Debug, Subcommand)]
pub enum Suite {
    /// Product, swap and `D^n S` identities on random polynomials.
    Ops {
        #[arg(long)]
        lattice: String,
        #[arg(long, default_value_t = 8)]
        max_degree: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// The Leibniz rule for `D^n(f u)` (and its degree-two form when q ≠ 1).
    Leibniz(FunctionalSuite),
    /// Product rules for the dual operators and the `D^n S` identity on functionals.
    Duals(FunctionalSuite),
}

#[derive(Debug, Args)]
pub struct FunctionalSuite {
    #[arg(long)]
    pub lattice: String,
    /// Use this pair's Pearson functional instead of random moments.
    #[arg(long)]
    pub pair: Option<String>,
    #[arg(long, default_value_t = 4)]
    pub max_degree: usize,
    #[arg(short = 'N', default_value_t = 5)]
    pub n: usize,
    /// Number of moments compared.
    #[arg(long, default_value_t = 10)]
    pub horizon: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
}

#[derive(Debug, Args)]
pub struct LatticePair {
    /// Lattice JSON file, or inline JSON.
    #[arg(long)]
    pub lattice: String,
    /// Pearson pair JSON file, or inline JSON.
    #[arg(long)]
    pub pair: String,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    /// Family name, or a family JSON file.
    #[arg(long)]
    pub family: Option<String>,
    /// JSON array of parameters.
    #[arg(long)]
    pub params: Option<String>,
    /// Base of the family when it differs from the lattice's q.
    #[arg(long)]
    pub base: Option<String>,
    /// Defaults to `(q^-s + q^s)/2` with q = 1/4, or `x(s) = s` for meixner2.
    #[arg(long)]
    pub lattice: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Ttrr,
    Polys,
}

/// What a command produced.
pub struct Outcome {
    pub json: Value,
    pub csv: Option<String>,
    /// First failing check, if any.
    pub failure: Option<String>,
}

impl Outcome {
    fn pass(json: Value) -> Outcome {
        Outcome { json, csv: None, failure: None }
    }
}

/// Parse `args`, run, write the report and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli).and_then(|o| emit(&cli.run, &o).map(|_| o)) {
        Ok(o) => match o.failure {
            None => 0,
            Some(f) => {
                eprintln!("check failed: {f}");
                1
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn emit(run: &RunOpts, o: &Outcome) -> Result<()> {
    let text = match run.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&o.json).map_err(|e| Error::InvalidInput(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => o
            .csv
            .clone()
            .ok_or_else(|| Error::InvalidInput("CSV output is only available for B/C and moment tables".into()))?,
    };
    match &run.out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<Outcome> {
    let run = &cli.run;
    if run.backend == BackendArg::Bigfloat && run.precision < 64 {
        return Err(Error::InvalidInput(format!("precision must be at least 64 bits, got {}", run.precision)));
    }
    match &cli.command {
        Command::Verify { suite } => match suite {
            Suite::Ops { lattice, max_degree, trials } => verify_ops(run, lattice, *max_degree, *trials),
            Suite::Leibniz(a) => verify_functionals(run, a, true),
            Suite::Duals(a) => verify_functionals(run, a, false),
        },
        Command::Moments { lp, n, mu0 } => moments(run, lp, *n, mu0),
        Command::Classify { lp, n, rodrigues, asymptotics } => classify(run, lp, *n, *rodrigues, *asymptotics),
        Command::Family { fam, n, emit } => family(run, fam, *n, *emit),
        Command::Characterize { relation, fam, pair, n } => characterize(run, relation, fam, pair.as_deref(), *n),
        Command::All => all(run),
    }
}

fn backend(run: &RunOpts) -> Backend {
    match run.backend {
        BackendArg::Exact => Backend::Exact,
        BackendArg::Bigfloat => Backend::BigFloat { precision: run.precision },
    }
}

/// Inline JSON if the argument looks like JSON, otherwise a file path.
fn read_json<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg)).map_err(|e| Error::InvalidInput(format!("{what} {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("{what}: {e}")))
}

fn load_lattice(run: &RunOpts, arg: &str) -> Result<Lattice> {
    read_json::<LatticeSpec>(arg, "lattice")?.build(backend(run))
}

fn load_pair(lat: &Lattice, arg: &str) -> Result<PearsonPair> {
    read_json::<PearsonPair>(arg, "pair")?.to_backend(lat.backend())
}

fn parse_scalar(s: &str) -> Result<Scalar> {
    let t = s.trim();
    if t.starts_with('[') || t.starts_with('{') || t.starts_with('"') {
        serde_json::from_str(t).map_err(|e| Error::InvalidInput(format!("scalar {s:?}: {e}")))
    } else {
        t.parse()
    }
}

fn residual_json(r: &Residual, eps: f64) -> Value {
    json!({
        "max_abs": r.max_abs,
        "relative": r.relative(),
        "exact_zero": r.exact_zero,
        "passed": r.passes(eps),
    })
}

fn spec_json(lat: &Lattice) -> Value {
    json!({ "lattice": lat.spec(), "kind": lat.kind().to_string(), "backend": lat.backend().to_string() })
}

fn verify_ops(run: &RunOpts, lattice: &str, max_degree: usize, trials: usize) -> Result<Outcome> {
    let lat = load_lattice(run, lattice)?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let mut worst = [Residual::zero(); OperatorIdentity::ALL.len()];
    let prec = lat.backend().precision();
    for _ in 0..trials {
        let (df, dg) = (rng.gen_range(0..=max_degree), rng.gen_range(0..=max_degree));
        let n = rng.gen_range(0..=max_degree);
        let mut f = random_poly(&mut rng, df);
        let mut g = random_poly(&mut rng, dg);
        if let Some(p) = prec {
            f = f.to_precision(p);
            g = g.to_precision(p);
        }
        for (k, id) in OperatorIdentity::ALL.into_iter().enumerate() {
            worst[k] = worst[k].max(verify_operator_identity(&lat, id, &f, Some(&g), n)?);
        }
    }
    let mut rows: Vec<(&str, Value, bool)> = OperatorIdentity::ALL
        .into_iter()
        .zip(worst)
        .map(|(id, r)| {
            let mut v = residual_json(&r, run.eps);
            v["identity"] = json!(id.name());
            v["statement"] = json!(id.statement());
            (id.name(), v, r.passes(run.eps))
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    let failure = rows.iter().find(|r| !r.2).map(|r| format!("{} has a nonzero residual", r.0));
    Ok(Outcome {
        json: json!({
            "suite": "ops",
            "lattice": spec_json(&lat),
            "seed": run.seed,
            "trials": trials,
            "max_degree": max_degree,
            "identities": rows.into_iter().map(|r| r.1).collect::<Vec<_>>(),
        }),
        csv: None,
        failure,
    })
}

fn verify_functionals(run: &RunOpts, a: &FunctionalSuite, leibniz: bool) -> Result<Outcome> {
    let lat = load_lattice(run, &a.lattice)?;
    let pair = a.pair.as_deref().map(|p| load_pair(&lat, p)).transpose()?;
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let prec = lat.backend().precision();
    let ids: Vec<FunctionalIdentity> = if leibniz {
        let mut v = vec![FunctionalIdentity::Leibniz];
        if lat.is_q() {
            v.push(FunctionalIdentity::LeibnizDeg2);
        }
        v
    } else {
        vec![FunctionalIdentity::DualProductDx, FunctionalIdentity::DualProductSx, FunctionalIdentity::DualDxnSx]
    };
    let mut worst = vec![Residual::zero(); ids.len()];
    for _ in 0..a.trials {
        for n in 0..=a.n {
            for deg in 0..=a.max_degree {
                let mut f = random_poly(&mut rng, deg);
                let mut u: MomentFunctional = match &pair {
                    Some(p) => pearson_moments(&lat, &p.phi(), &p.psi(), Scalar::one(), a.horizon + deg + 1)?,
                    None => random_functional(&mut rng, a.horizon + deg + 1),
                };
                if let Some(p) = prec {
                    f = f.to_precision(p);
                    u = u.to_precision(p);
                }
                for (k, id) in ids.iter().enumerate() {
                    if *id == FunctionalIdentity::LeibnizDeg2 && deg > 2 {
                        continue;
                    }
                    worst[k] = worst[k].max(verify_functional_identity(&lat, *id, &f, &u, n, a.horizon)?);
                }
            }
        }
    }
    let mut rows: Vec<(&str, Value, bool)> = ids
        .iter()
        .zip(&worst)
        .map(|(id, r)| {
            let mut v = residual_json(r, run.eps);
            v["identity"] = json!(id.name());
            v["statement"] = json!(id.statement());
            (id.name(), v, r.passes(run.eps))
        })
        .collect();
    rows.sort_by_key(|r| r.0);
    let failure = rows.iter().find(|r| !r.2).map(|r| format!("{} has a nonzero residual", r.0));
    Ok(Outcome {
        json: json!({
            "suite": if leibniz { "leibniz" } else { "duals" },
            "lattice": spec_json(&lat),
            "functional": if pair.is_some() { "pearson" } else { "random" },
            "seed": run.seed,
            "trials": a.trials,
            "max_degree": a.max_degree,
            "n_max": a.n,
            "horizon": a.horizon,
            "identities": rows.into_iter().map(|r| r.1).collect::<Vec<_>>(),
        }),
        csv: None,
        failure,
    })
}

fn moments(run: &RunOpts, lp: &LatticePair, n: usize, mu0: &str) -> Result<Outcome> {
    let lat = load_lattice(run, &lp.lattice)?;
    let pair = load_pair(&lat, &lp.pair)?;
    let u = pearson_moments(&lat, &pair.phi(), &pair.psi(), parse_scalar(mu0)?, n)?;
    let mut csv = String::from("k,moment\n");
    for (k, m) in u.moments().iter().enumerate() {
        let _ = writeln!(csv, "{k},{m}");
    }
    Ok(Outcome {
        json: json!({ "lattice": spec_json(&lat), "pair": pair, "moments": u.moments() }),
        csv: Some(csv),
        failure: None,
    })
}

fn ttrr_csv(t: &Ttrr) -> String {
    let mut csv = String::from("n,B,C\n");
    for n in 0..=t.n_max() {
        let _ = writeln!(csv, "{n},{},{}", t.b[n], t.c[n]);
    }
    csv
}

/// Comparing against the moment oracle costs moments up to `2N + 1`; past
/// this level only the closed forms are reported.
const ORACLE_LEVELS: usize = 12;

fn classify(
    run: &RunOpts,
    lp: &LatticePair,
    n: usize,
    rodrigues: Option<usize>,
    asym: Option<usize>,
) -> Result<Outcome> {
    let lat = load_lattice(run, &lp.lattice)?;
    let pair = load_pair(&lat, &lp.pair)?;
    let adm = admissibility(&lat, &pair, 2 * n + 1)?;
    let reg = regularity(&lat, &pair, n)?;
    let mut out = json!({
        "lattice": spec_json(&lat),
        "pair": pair,
        "admissibility": { "first_failure": adm.first_failure },
        "regularity": reg,
    });
    let mut failure = match reg.verdict {
        Verdict::RegularUpTo(_) => None,
        Verdict::FailsAdmissibility(m) => Some(format!("not admissible: d_{m} = 0")),
        Verdict::FailsWitness(k) => Some(format!("not regular: the witness vanishes at n={k}")),
    };
    let mut csv = None;
    if failure.is_none() {
        let t = ttrr_from_pearson(&lat, &pair, n)?;
        let m = n.min(ORACLE_LEVELS);
        let u = pearson_moments(&lat, &pair.phi(), &pair.psi(), Scalar::one(), 2 * m + 1)?;
        let oracle = ttrr_oracle(&u, m)?;
        let agrees = oracle.max_relative_diff(&t.truncate(m)) <= run.eps || oracle.same_as(&t.truncate(m));
        if !agrees {
            failure = Some(format!("closed forms disagree with the moment oracle through n={m}"));
        }
        out["B"] = json!(t.b);
        out["C"] = json!(t.c);
        out["oracle"] = json!({ "checked_through": m, "agrees": agrees });
        csv = Some(ttrr_csv(&t));
    }
    if let Some(k) = rodrigues {
        let mut rows = Vec::new();
        for j in 0..=k {
            let r = rodrigues_verify(&lat, &pair, j, 10)?;
            if !r.passes(run.eps) && failure.is_none() {
                failure = Some(format!("Rodrigues formula fails at n={j}"));
            }
            let mut v = residual_json(&r, run.eps);
            v["n"] = json!(j);
            rows.push(v);
        }
        out["rodrigues_residuals"] = json!(rows);
    }
    if let Some(k) = asym {
        let rep = asymptotics(&lat, &pair, k)?;
        if let Some(r) = &rep.partial_sum_identity {
            if !r.passes(run.eps) && failure.is_none() {
                failure = Some("partial-sum identity fails".into());
            }
        }
        out["asymptotics"] = serde_json::to_value(&rep).map_err(|e| Error::InvalidInput(e.to_string()))?;
    }
    Ok(Outcome { json: out, csv, failure })
}

fn resolve_family(run: &RunOpts, fam: &FamilyArgs) -> Result<(FamilySpec, Lattice)> {
    let name = fam.family.as_deref().ok_or_else(|| Error::InvalidInput("--family is required".into()))?;
    let mut spec = match name.parse::<FamilyName>() {
        Ok(n) => {
            let params: Vec<Scalar> = match &fam.params {
                Some(p) => read_json(p, "params")?,
                None => Vec::new(),
            };
            FamilySpec::new(n, params)?
        }
        Err(_) => read_json::<FamilySpec>(name, "family")?,
    };
    if let Some(b) = &fam.base {
        spec = spec.with_base(parse_scalar(b)?);
    }
    let lat = match &fam.lattice {
        Some(l) => load_lattice(run, l)?,
        None => default_lattice(run, spec.name == FamilyName::Meixner2)?,
    };
    Ok((spec, lat))
}

fn default_lattice(run: &RunOpts, linear: bool) -> Result<Lattice> {
    let spec = if linear {
        LatticeSpec { kind: None, q: Scalar::one(), c: vec![Scalar::zero(), Scalar::one(), Scalar::zero()] }
    } else {
        let h = Scalar::ratio(1, 2)?;
        LatticeSpec { kind: None, q: Scalar::ratio(1, 4)?, c: vec![h.clone(), h, Scalar::zero()] }
    };
    spec.build(backend(run))
}

fn family(run: &RunOpts, fam: &FamilyArgs, n: usize, emit: Emit) -> Result<Outcome> {
    let (spec, lat) = resolve_family(run, fam)?;
    let t = family_ttrr(&spec, &lat, n)?;
    match emit {
        Emit::Ttrr => Ok(Outcome {
            json: json!({ "family": spec, "lattice": spec_json(&lat), "B": t.b, "C": t.c }),
            csv: Some(ttrr_csv(&t)),
            failure: None,
        }),
        Emit::Polys => {
            let ops = build_ops(&lat, &t, n)?;
            Ok(Outcome::pass(json!({ "family": spec, "lattice": spec_json(&lat), "polys": ops.polys() })))
        }
    }
}

fn characterize(run: &RunOpts, relation: &str, fam: &FamilyArgs, pair: Option<&str>, n: usize) -> Result<Outcome> {
    let relation: StructureRelation = relation.parse()?;
    let (source, lat, t) = if relation == StructureRelation::Counterexample4term {
        let mut lat = match &fam.lattice {
            Some(l) => load_lattice(run, l)?,
            None => default_lattice(run, false)?,
        };
        // The family parameter q^{1/4} forces bigfloat unless it is rational.
        if lat.backend().is_exact() && lat.sqrt_q().sqrt().is_err() {
            lat = lat.to_precision(run.precision)?;
        }
        let t = counterexample_family(&lat, n + 1)?;
        (json!("cdq_hahn(1, -1, q^(1/4) | q^(1/2))"), lat, t)
    } else if let Some(p) = pair {
        let lat = match &fam.lattice {
            Some(l) => load_lattice(run, l)?,
            None => return Err(Error::InvalidInput("--pair needs --lattice".into())),
        };
        let pair = load_pair(&lat, p)?;
        let t = ttrr_from_pearson(&lat, &pair, n + 1)?;
        (json!({ "pair": pair }), lat, t)
    } else {
        let (spec, lat) = resolve_family(run, fam)?;
        let t = family_ttrr(&spec, &lat, n + 1)?;
        (json!({ "family": spec }), lat, t)
    };
    let ops = build_ops(&lat, &t, n + 1)?;
    let rep = check_structure(&ops, relation, n, run.eps)?;
    let failure = rep.first_failure.map(|k| format!("{relation} fails at n={k}"));
    Ok(Outcome {
        json: json!({
            "source": source,
            "lattice": spec_json(&lat),
            "statement": relation.statement(),
            "report": rep,
        }),
        csv: None,
        failure,
    })
}

fn all(run: &RunOpts) -> Result<Outcome> {
    let reports = run_all(run.seed);
    for r in &reports {
        eprintln!("{}", r.summary());
    }
    let failure = reports
        .iter()
        .filter(|r| !r.passed)
        .map(|r| format!("criterion {}", r.id))
        .collect::<Vec<_>>();
    Ok(Outcome {
        json: serde_json::to_value(&reports).map_err(|e| Error::InvalidInput(e.to_string()))?,
        csv: None,
        failure: (!failure.is_empty()).then(|| failure.join(", ")),
    })
}
