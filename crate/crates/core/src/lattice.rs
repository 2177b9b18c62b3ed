//! Lattices `x(s)` and their constant sequences.
//!
//! For `q ≠ 1` the lattice is `x(s) = c1 q^{-s} + c2 q^s + c3`; for `q = 1`
//! it is `x(s) = c4 s² + c5 s + c6`. The three constants are stored as
//! `c[0..3]` in both cases, so `c[0]` is `c1` or `c4` depending on `q`.
//!
//! Operators evaluate the lattice at half-integer `s`, which needs `√q`. On
//! the exact backend `√q` must be rational; otherwise the lattice is built on
//! the bigfloat backend at [`DEFAULT_PRECISION`].

use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polynomial::Polynomial;
use crate::scalar::{approx_eq, Backend, Scalar, DEFAULT_PRECISION, MIN_PRECISION};

/// Sequence tables are memoized up to this index and evaluated in closed
/// form beyond it.
pub const TABLE_HORIZON: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeKind {
    QQuadratic,
    QLinear,
    Quadratic,
    Linear,
}

impl LatticeKind {
    pub fn is_q(self) -> bool {
        matches!(self, LatticeKind::QQuadratic | LatticeKind::QLinear)
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LatticeKind::QQuadratic => "q-quadratic",
            LatticeKind::QLinear => "q-linear",
            LatticeKind::Quadratic => "quadratic",
            LatticeKind::Linear => "linear",
        };
        f.write_str(s)
    }
}

/// A lattice point with its two half-step neighbours.
#[derive(Debug, Clone)]
pub struct Node {
    pub s: i64,
    pub z: Scalar,
    pub plus: Scalar,
    pub minus: Scalar,
}

#[derive(Default)]
struct Tables {
    alpha: Vec<Scalar>,
    gamma: Vec<Scalar>,
    beta: Vec<Scalar>,
}

struct Inner {
    kind: LatticeKind,
    q: Scalar,
    /// `√q` (1 when `q = 1`).
    w: Scalar,
    w_inv: Scalar,
    c: [Scalar; 3],
    alpha: Scalar,
    beta: Scalar,
    u1: Polynomial,
    u2: Polynomial,
    tables: Mutex<Tables>,
    nodes: Mutex<Vec<Node>>,
    next_s: Mutex<i64>,
    dx_mono: Mutex<Vec<Polynomial>>,
    sx_mono: Mutex<Vec<Polynomial>>,
    /// Higher-precision copies used for interpolation, keyed by precision.
    working: Mutex<Vec<(u32, Lattice)>>,
}

/// An immutable, cheaply clonable lattice handle. Memo tables are guarded by
/// mutexes and the handle is `Send + Sync`.
#[derive(Clone)]
pub struct Lattice(Arc<Inner>);

/// JSON lattice description: `{ "kind": "q-quadratic", "q": "1/4", "c": [..] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LatticeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<LatticeKind>,
    pub q: Scalar,
    pub c: Vec<Scalar>,
}

impl LatticeSpec {
    pub fn build(&self, backend: Backend) -> Result<Lattice> {
        if self.c.len() != 3 {
            return Err(Error::InvalidLattice(format!("expected 3 constants, got {}", self.c.len())));
        }
        let c = [self.c[0].clone(), self.c[1].clone(), self.c[2].clone()];
        let lat = Lattice::with_backend(self.q.clone(), c, backend)?;
        if let Some(k) = self.kind {
            if k != lat.kind() {
                return Err(Error::InvalidLattice(format!(
                    "declared kind {k} but the constants describe a {} lattice",
                    lat.kind()
                )));
            }
        }
        Ok(lat)
    }
}

fn convert(x: &Scalar, backend: Backend) -> Result<Scalar> {
    x.to_backend(backend)
}

impl Lattice {
    /// `c1 q^{-s} + c2 q^s + c3`.
    pub fn q_lattice(q: Scalar, c1: Scalar, c2: Scalar, c3: Scalar) -> Result<Lattice> {
        if q == Scalar::one() {
            return Err(Error::InvalidLattice("q = 1 needs the quadratic form".into()));
        }
        Lattice::new(q, [c1, c2, c3])
    }

    /// `c4 s² + c5 s + c6`.
    pub fn quadratic(c4: Scalar, c5: Scalar, c6: Scalar) -> Result<Lattice> {
        Lattice::new(Scalar::one(), [c4, c5, c6])
    }

    /// The symmetric lattice `(q^{-s} + q^s)/2`.
    pub fn askey_wilson(q: Scalar) -> Result<Lattice> {
        let h = Scalar::ratio(1, 2)?;
        Lattice::q_lattice(q, h.clone(), h, Scalar::zero())
    }

    /// Build on the backend of the inputs: exact if every input is exact and
    /// `√q` is rational, bigfloat otherwise.
    pub fn new(q: Scalar, c: [Scalar; 3]) -> Result<Lattice> {
        let all_exact = q.is_exact() && c.iter().all(Scalar::is_exact);
        let backend = if all_exact && q.sqrt().is_ok_and(|w| w.is_exact()) {
            Backend::Exact
        } else {
            let p = std::iter::once(&q)
                .chain(c.iter())
                .filter_map(|x| x.backend().precision())
                .max()
                .unwrap_or(DEFAULT_PRECISION);
            Backend::BigFloat { precision: p }
        };
        Lattice::with_backend(q, c, backend)
    }

    /// Build on an explicit backend. Requesting the exact backend for a `q`
    /// whose square root is irrational falls back to bigfloat at
    /// [`DEFAULT_PRECISION`].
    pub fn with_backend(q: Scalar, c: [Scalar; 3], backend: Backend) -> Result<Lattice> {
        let backend = match backend {
            Backend::Exact if q.is_exact() && q.sqrt().is_err() => Backend::BigFloat {
                precision: DEFAULT_PRECISION,
            },
            Backend::BigFloat { precision } if precision < MIN_PRECISION => {
                return Err(Error::InvalidInput(format!(
                    "precision {precision} below minimum {MIN_PRECISION}"
                )))
            }
            b => b,
        };
        let q = convert(&q, backend)?;
        let c = [convert(&c[0], backend)?, convert(&c[1], backend)?, convert(&c[2], backend)?];
        if !q.is_real() || q.real_sign() != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidLattice(format!("q must be real and positive, got {q}")));
        }
        let is_one = match backend {
            Backend::Exact => q == Scalar::one(),
            Backend::BigFloat { .. } => approx_eq(&q, &Scalar::one().to_backend(backend)?, 0.0)?,
        };
        let kind = if is_one {
            if c.iter().all(Scalar::is_zero) {
                return Err(Error::InvalidLattice("q = 1 requires (c4, c5, c6) ≠ 0".into()));
            }
            if c[0].is_zero() {
                LatticeKind::Linear
            } else {
                LatticeKind::Quadratic
            }
        } else {
            if c[0].is_zero() && c[1].is_zero() {
                return Err(Error::InvalidLattice("q ≠ 1 requires (c1, c2) ≠ (0, 0)".into()));
            }
            if (&c[0] * &c[1]).is_zero() {
                LatticeKind::QLinear
            } else {
                LatticeKind::QQuadratic
            }
        };
        let one = Scalar::one().to_backend(backend)?;
        let (w, alpha, beta) = if kind.is_q() {
            let w = q.sqrt()?;
            let alpha = &(&w + &w.recip()?) * &Scalar::ratio(1, 2)?;
            let beta = &(&one - &alpha) * &c[2];
            (w, alpha, beta)
        } else {
            (one.clone(), one.clone(), &c[0] * &Scalar::ratio(1, 4)?)
        };
        let w_inv = w.recip()?;
        let (u1, u2) = if kind.is_q() {
            let a21 = &(&alpha * &alpha) - &one;
            let shift = Polynomial::linear_factor(&c[2]);
            let u1 = shift.scale(&a21);
            let four_c1c2 = &(&c[0] * &c[1]) * &Scalar::from(4);
            let u2 = (&(&shift * &shift) - &Polynomial::constant(four_c1c2)).scale(&a21);
            (u1, u2)
        } else {
            let u1 = Polynomial::constant(&c[0] * &Scalar::ratio(1, 2)?);
            let u2 = &Polynomial::linear_factor(&c[2]).scale(&c[0])
                + &Polynomial::constant(&(&c[1] * &c[1]) * &Scalar::ratio(1, 4)?);
            (u1, u2)
        };
        Ok(Lattice(Arc::new(Inner {
            kind,
            q,
            w,
            w_inv,
            c,
            alpha,
            beta,
            u1,
            u2,
            tables: Mutex::new(Tables::default()),
            nodes: Mutex::new(Vec::new()),
            next_s: Mutex::new(0),
            dx_mono: Mutex::new(Vec::new()),
            sx_mono: Mutex::new(Vec::new()),
            working: Mutex::new(Vec::new()),
        })))
    }

    /// Same lattice on the bigfloat backend at `prec` bits.
    pub fn to_precision(&self, prec: u32) -> Result<Lattice> {
        Lattice::with_backend(self.0.q.clone(), self.0.c.clone(), Backend::BigFloat { precision: prec })
    }

    pub fn to_backend(&self, backend: Backend) -> Result<Lattice> {
        if backend == self.backend() {
            return Ok(self.clone());
        }
        Lattice::with_backend(self.0.q.clone(), self.0.c.clone(), backend)
    }

    pub fn spec(&self) -> LatticeSpec {
        LatticeSpec {
            kind: Some(self.0.kind),
            q: self.0.q.clone(),
            c: self.0.c.to_vec(),
        }
    }

    pub fn backend(&self) -> Backend {
        self.0.q.backend()
    }

    pub fn kind(&self) -> LatticeKind {
        self.0.kind
    }

    /// `q ≠ 1`.
    pub fn is_q(&self) -> bool {
        self.0.kind.is_q()
    }

    /// `x(s)` does not depend on `s` (only possible for `q = 1`, `c4 = c5 = 0`).
    pub fn is_constant(&self) -> bool {
        !self.is_q() && self.0.c[0].is_zero() && self.0.c[1].is_zero()
    }

    pub fn q(&self) -> &Scalar {
        &self.0.q
    }

    /// `√q`.
    pub fn sqrt_q(&self) -> &Scalar {
        &self.0.w
    }

    /// The three lattice constants (`c1, c2, c3` or `c4, c5, c6`).
    pub fn c(&self) -> &[Scalar; 3] {
        &self.0.c
    }

    /// `c1 c2` (q ≠ 1); zero for `q = 1` lattices.
    pub fn c1c2(&self) -> Scalar {
        if self.is_q() {
            &self.0.c[0] * &self.0.c[1]
        } else {
            Scalar::zero()
        }
    }

    /// `c3` (q ≠ 1); zero for `q = 1` lattices.
    pub fn c3(&self) -> Scalar {
        if self.is_q() {
            self.0.c[2].clone()
        } else {
            Scalar::zero()
        }
    }

    pub fn alpha(&self) -> &Scalar {
        &self.0.alpha
    }

    pub fn beta(&self) -> &Scalar {
        &self.0.beta
    }

    /// `(U1, U2)`.
    pub fn u_polys(&self) -> (&Polynomial, &Polynomial) {
        (&self.0.u1, &self.0.u2)
    }

    pub fn u1(&self) -> &Polynomial {
        &self.0.u1
    }

    pub fn u2(&self) -> &Polynomial {
        &self.0.u2
    }

    /// `√q^k`, i.e. `q^{k/2}`.
    pub fn w_pow(&self, k: i64) -> Scalar {
        let (base, e) = if k >= 0 { (&self.0.w, k) } else { (&self.0.w_inv, -k) };
        base.powi(e).expect("nonnegative exponent")
    }

    /// `x(s)` at `s = twice_s / 2`.
    pub fn x_half(&self, twice_s: i64) -> Scalar {
        let c = &self.0.c;
        if self.is_q() {
            let qs = self.w_pow(twice_s);
            let qms = self.w_pow(-twice_s);
            &(&(&c[0] * &qms) + &(&c[1] * &qs)) + &c[2]
        } else {
            let s = Scalar::ratio(twice_s, 2).expect("nonzero denominator");
            &(&(&c[0] * &(&s * &s)) + &(&c[1] * &s)) + &c[2]
        }
    }

    /// `x(s)` at integer `s`.
    pub fn x_at(&self, s: i64) -> Scalar {
        self.x_half(2 * s)
    }

    /// `x(s)` for a half-integer `s` given as a scalar; anything else is an error.
    pub fn x_eval(&self, s: &Scalar) -> Result<Scalar> {
        let twice = s * &Scalar::from(2);
        let r = twice
            .as_rational()
            .filter(|r| *r.denom() == 1)
            .and_then(|r| r.numer().to_i64())
            .ok_or_else(|| Error::InvalidInput(format!("s = {s} is not a half-integer")))?;
        Ok(self.x_half(r))
    }

    fn closed_alpha(&self, n: usize) -> Scalar {
        if !self.is_q() {
            return Scalar::one();
        }
        let n = n as i64;
        &(&self.w_pow(n) + &self.w_pow(-n)) * &Scalar::ratio(1, 2).expect("nonzero")
    }

    fn closed_gamma(&self, n: usize) -> Scalar {
        if !self.is_q() {
            return Scalar::from(n);
        }
        let n = n as i64;
        let den = &self.0.w - &self.0.w_inv;
        (&self.w_pow(n) - &self.w_pow(-n)).checked_div(&den).expect("q ≠ 1")
    }

    fn closed_beta(&self, n: usize, alpha_n: &Scalar) -> Scalar {
        if !self.is_q() {
            return &self.0.beta * &Scalar::from(n * n);
        }
        let num = &self.0.beta * &(alpha_n - &Scalar::one());
        num.checked_div(&(&self.0.alpha - &Scalar::one())).expect("q ≠ 1")
    }

    fn with_tables<T>(&self, n: usize, f: impl FnOnce(&Tables) -> T) -> T {
        let mut t = self.0.tables.lock().expect("table lock");
        while t.alpha.len() <= n {
            let k = t.alpha.len();
            let a = self.closed_alpha(k);
            let g = self.closed_gamma(k);
            let b = self.closed_beta(k, &a);
            t.alpha.push(a);
            t.gamma.push(g);
            t.beta.push(b);
        }
        f(&t)
    }

    /// `α_n` for `n ≥ 0`.
    pub fn alpha_at(&self, n: usize) -> Scalar {
        if n > TABLE_HORIZON {
            return self.closed_alpha(n);
        }
        self.with_tables(n, |t| t.alpha[n].clone())
    }

    /// `γ_n` for `n ≥ 0`.
    pub fn gamma_at(&self, n: usize) -> Scalar {
        if n > TABLE_HORIZON {
            return self.closed_gamma(n);
        }
        self.with_tables(n, |t| t.gamma[n].clone())
    }

    /// `β_n` for `n ≥ 0`.
    pub fn beta_at(&self, n: usize) -> Scalar {
        if n > TABLE_HORIZON {
            let a = self.closed_alpha(n);
            return self.closed_beta(n, &a);
        }
        self.with_tables(n, |t| t.beta[n].clone())
    }

    /// `α_n` with the convention `α_{−1} = α`.
    pub fn alpha_n(&self, n: i64) -> Result<Scalar> {
        match n {
            -1 => Ok(self.0.alpha.clone()),
            n if n < -1 => Err(Error::NegativeIndex(n)),
            n => Ok(self.alpha_at(n as usize)),
        }
    }

    /// `γ_n` with the convention `γ_{−1} = −1`.
    pub fn gamma_n(&self, n: i64) -> Result<Scalar> {
        match n {
            -1 => Ok(-Scalar::one()),
            n if n < -1 => Err(Error::NegativeIndex(n)),
            n => Ok(self.gamma_at(n as usize)),
        }
    }

    /// `β_n`, defined for `n ≥ 0` only.
    pub fn beta_n(&self, n: i64) -> Result<Scalar> {
        if n < 0 {
            return Err(Error::NegativeIndex(n));
        }
        Ok(self.beta_at(n as usize))
    }

    /// `[n]_γ! = γ_1 γ_2 ⋯ γ_n`.
    pub fn gamma_factorial(&self, n: usize) -> Scalar {
        (1..=n).map(|k| self.gamma_at(k)).product()
    }

    fn same_point(&self, a: &Scalar, b: &Scalar) -> bool {
        match self.backend() {
            Backend::Exact => a == b,
            b2 => approx_eq(a, b, b2.zero_tolerance()).unwrap_or(false),
        }
    }

    /// `m` nodes with pairwise distinct `z = x(s)`, `s = 0, 1, 2, …`, skipping
    /// collisions. Fails if fewer than `m` distinct values appear among the
    /// first `4m` candidates.
    pub fn nodes(&self, m: usize) -> Result<Vec<Node>> {
        if m == 0 {
            return Err(Error::InvalidInput("node count must be at least 1".into()));
        }
        let mut nodes = self.0.nodes.lock().expect("node lock");
        let mut next = self.0.next_s.lock().expect("node lock");
        let limit = 4 * m as i64;
        while nodes.len() < m {
            let s = *next;
            if s >= limit {
                return Err(Error::DegenerateLattice { wanted: m, tried: limit as usize });
            }
            *next += 1;
            let z = self.x_at(s);
            if nodes.iter().any(|n| self.same_point(&n.z, &z)) {
                continue;
            }
            nodes.push(Node {
                s,
                z,
                plus: self.x_half(2 * s + 1),
                minus: self.x_half(2 * s - 1),
            });
        }
        Ok(nodes[..m].to_vec())
    }

    /// Precision needed to interpolate a degree `< m` polynomial from `m`
    /// nodes without losing the lattice's own precision: the Newton form
    /// loses about `log2(max|z| / min gap)` bits per node.
    pub fn working_precision(&self, m: usize) -> Option<u32> {
        let p = self.backend().precision()?;
        if m <= 1 || self.is_constant() {
            return Some(p);
        }
        let nodes = self.nodes(m).ok()?;
        let mut max_mag = 1f64;
        for n in &nodes {
            for v in [&n.z, &n.plus, &n.minus] {
                max_mag = max_mag.max(v.abs_f64());
            }
        }
        let mut min_gap = f64::INFINITY;
        for (i, a) in nodes.iter().enumerate() {
            for b in &nodes[i + 1..] {
                min_gap = min_gap.min((&a.z - &b.z).abs_f64());
            }
        }
        let per_node = (max_mag.log2() - min_gap.log2().min(0.0)).max(0.0) + 2.0;
        let guard = 64 + (m as f64 * per_node).ceil() as u32;
        Some((p + guard).div_ceil(64) * 64)
    }

    /// This lattice rebuilt at `prec` bits, memoized.
    pub(crate) fn working_lattice(&self, prec: u32) -> Lattice {
        if self.backend().precision() == Some(prec) {
            return self.clone();
        }
        let mut w = self.0.working.lock().expect("working lock");
        if let Some((_, l)) = w.iter().find(|(p, _)| *p == prec) {
            return l.clone();
        }
        let l = self.to_precision(prec).expect("valid lattice at higher precision");
        w.push((prec, l.clone()));
        l
    }

    pub(crate) fn dx_cache(&self) -> &Mutex<Vec<Polynomial>> {
        &self.0.dx_mono
    }

    pub(crate) fn sx_cache(&self) -> &Mutex<Vec<Polynomial>> {
        &self.0.sx_mono
    }
}

impl fmt::Debug for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Lattice({}, q = {:?}, c = {:?})", self.0.kind, self.0.q, self.0.c)
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.0.c;
        if self.is_q() {
            write!(f, "x(s) = {} q^-s + {} q^s + {} (q = {})", c[0], c[1], c[2], self.0.q)
        } else {
            write!(f, "x(s) = {} s^2 + {} s + {}", c[0], c[1], c[2])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(n: i64, d: i64) -> Scalar {
        Scalar::ratio(n, d).unwrap()
    }

    fn q4() -> Lattice {
        Lattice::q_lattice(s(4, 1), s(1, 2), s(1, 2), s(0, 1)).unwrap()
    }

    #[test]
    fn constants_at_q4() {
        let l = q4();
        assert_eq!(l.alpha(), &s(5, 4));
        assert_eq!(l.gamma_at(2), s(5, 2));
        assert_eq!(l.alpha_at(2), s(17, 8));
        assert_eq!(l.alpha_at(0), s(1, 1));
        assert_eq!(l.gamma_at(0), s(0, 1));
        assert_eq!(l.beta_at(0), s(0, 1));
    }

    #[test]
    fn q_equal_one_sequences() {
        let l = Lattice::quadratic(s(1, 1), s(0, 1), s(0, 1)).unwrap();
        assert_eq!(l.alpha(), &s(1, 1));
        assert_eq!(l.beta(), &s(1, 4));
        for n in 0..10usize {
            assert_eq!(l.alpha_at(n), s(1, 1));
            assert_eq!(l.gamma_at(n), Scalar::from(n));
            assert_eq!(l.beta_at(n), &s(1, 4) * &Scalar::from(n * n));
        }
    }

    #[test]
    fn negative_indices() {
        let l = q4();
        assert_eq!(l.alpha_n(-1).unwrap(), s(5, 4));
        assert_eq!(l.gamma_n(-1).unwrap(), s(-1, 1));
        assert_eq!(l.alpha_n(-2).unwrap_err(), Error::NegativeIndex(-2));
        assert_eq!(l.beta_n(-1).unwrap_err(), Error::NegativeIndex(-1));
    }

    #[test]
    fn fundamental_polynomials() {
        let quad = Lattice::quadratic(s(3, 1), s(1, 1), s(2, 1)).unwrap();
        assert_eq!(quad.u1(), &Polynomial::constant(s(3, 2)));
        let l = q4();
        assert_eq!(l.u1(), &Polynomial::from_coeffs(vec![s(0, 1), s(9, 16)]));
        let lin = Lattice::quadratic(s(0, 1), s(3, 1), s(1, 1)).unwrap();
        assert_eq!(lin.u2(), &Polynomial::constant(s(9, 4)));
        assert_eq!(lin.kind(), LatticeKind::Linear);
    }

    #[test]
    fn evaluation_examples() {
        let lin = Lattice::quadratic(s(0, 1), s(1, 1), s(0, 1)).unwrap();
        assert_eq!(lin.x_eval(&s(3, 2)).unwrap(), s(3, 2));
        assert_eq!(q4().x_at(1), s(17, 8));
        let l = Lattice::q_lattice(s(1, 4), s(1, 3), s(2, 7), s(5, 1)).unwrap();
        assert_eq!(l.x_at(0), &(&s(1, 3) + &s(2, 7)) + &s(5, 1));
        assert!(l.x_eval(&s(1, 3)).is_err());
    }

    #[test]
    fn node_selection() {
        let n = q4().nodes(2).unwrap();
        assert_eq!((n[0].s, n[0].z.clone()), (0, s(1, 1)));
        assert_eq!((n[1].s, n[1].z.clone()), (1, s(17, 8)));
        let lin = Lattice::quadratic(s(0, 1), s(1, 1), s(0, 1)).unwrap();
        let zs: Vec<_> = lin.nodes(3).unwrap().into_iter().map(|n| n.z).collect();
        assert_eq!(zs, vec![s(0, 1), s(1, 1), s(2, 1)]);
        let sq = Lattice::quadratic(s(1, 1), s(0, 1), s(0, 1)).unwrap();
        let zs: Vec<_> = sq.nodes(3).unwrap().into_iter().map(|n| n.z).collect();
        assert_eq!(zs, vec![s(0, 1), s(1, 1), s(4, 1)]);
    }

    #[test]
    fn degenerate_lattice_runs_out_of_nodes() {
        let c = Lattice::quadratic(s(0, 1), s(0, 1), s(3, 1)).unwrap();
        assert!(c.is_constant());
        assert!(matches!(c.nodes(2), Err(Error::DegenerateLattice { wanted: 2, tried: 8 })));
    }

    #[test]
    fn invalid_lattices() {
        assert!(Lattice::q_lattice(s(-1, 1), s(1, 1), s(1, 1), s(0, 1)).is_err());
        assert!(Lattice::q_lattice(s(4, 1), s(0, 1), s(0, 1), s(1, 1)).is_err());
        assert!(Lattice::quadratic(s(0, 1), s(0, 1), s(0, 1)).is_err());
    }

    #[test]
    fn irrational_root_forces_bigfloat() {
        let l = Lattice::q_lattice(s(2, 1), s(1, 2), s(1, 2), s(0, 1)).unwrap();
        assert_eq!(l.backend(), Backend::BigFloat { precision: DEFAULT_PRECISION });
        let exact = Lattice::q_lattice(s(9, 4), s(1, 2), s(1, 2), s(0, 1)).unwrap();
        assert_eq!(exact.backend(), Backend::Exact);
    }

    #[test]
    fn spec_round_trip() {
        let json = r#"{"kind": "q-quadratic", "q": "1/4", "c": ["1/2", 0.5, 0]}"#;
        let spec: LatticeSpec = serde_json::from_str(json).unwrap();
        let l = spec.build(Backend::Exact).unwrap();
        assert_eq!(l.kind(), LatticeKind::QQuadratic);
        assert_eq!(l.c()[1], s(1, 2));
        let bad = r#"{"kind": "linear", "q": "1/4", "c": [1, 1, 0]}"#;
        let spec: LatticeSpec = serde_json::from_str(bad).unwrap();
        assert!(spec.build(Backend::Exact).is_err());
    }
}
