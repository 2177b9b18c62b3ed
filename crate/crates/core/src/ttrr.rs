//! Three-term recurrence data and the monic sequences it generates.
//!
//! `P_{-1} = 0`, `P_0 = 1`, `P_{n+1} = (z − B_n) P_n − C_n P_{n−1}`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::operators::dx_pow;
use crate::polynomial::Polynomial;
use crate::scalar::{Backend, Scalar};

/// Recurrence coefficients `B_0..B_N` and `C_0..C_N` with `C_0 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ttrr {
    #[serde(rename = "B")]
    pub b: Vec<Scalar>,
    #[serde(rename = "C")]
    pub c: Vec<Scalar>,
}

impl Ttrr {
    /// `b` and `c` must have the same length; `c[0]` is forced to zero.
    pub fn new(b: Vec<Scalar>, mut c: Vec<Scalar>) -> Result<Ttrr> {
        if b.len() != c.len() || b.is_empty() {
            return Err(Error::InvalidInput(format!(
                "recurrence tables need equal nonzero lengths, got {} and {}",
                b.len(),
                c.len()
            )));
        }
        c[0] = Scalar::zero();
        Ok(Ttrr { b, c })
    }

    /// Build from generators `B(n)` and `C(n)` for `n = 0..=n_max` (`C(0)` is
    /// not called).
    pub fn from_fn(
        n_max: usize,
        mut b: impl FnMut(usize) -> Result<Scalar>,
        mut c: impl FnMut(usize) -> Result<Scalar>,
    ) -> Result<Ttrr> {
        let bs = (0..=n_max).map(&mut b).collect::<Result<Vec<_>>>()?;
        let mut cs = vec![Scalar::zero()];
        for n in 1..=n_max {
            cs.push(c(n)?);
        }
        Ttrr::new(bs, cs)
    }

    /// Largest index `N` with both `B_N` and `C_N` available.
    pub fn n_max(&self) -> usize {
        self.b.len() - 1
    }

    pub fn truncate(&self, n_max: usize) -> Ttrr {
        let n = (n_max + 1).min(self.b.len());
        Ttrr { b: self.b[..n].to_vec(), c: self.c[..n].to_vec() }
    }

    /// Coefficients after `z → λ z + τ`: `B → λB + τ`, `C → λ²C`.
    pub fn affine(&self, lambda: &Scalar, tau: &Scalar) -> Ttrr {
        let l2 = lambda * lambda;
        Ttrr {
            b: self.b.iter().map(|b| &(lambda * b) + tau).collect(),
            c: self.c.iter().map(|c| &l2 * c).collect(),
        }
    }

    pub fn to_precision(&self, prec: u32) -> Ttrr {
        Ttrr {
            b: self.b.iter().map(|x| x.to_precision(prec)).collect(),
            c: self.c.iter().map(|x| x.to_precision(prec)).collect(),
        }
    }

    pub fn backend(&self) -> Backend {
        let mut out = Backend::Exact;
        for x in self.b.iter().chain(&self.c) {
            if !x.is_exact() {
                out = x.backend();
            }
        }
        out
    }

    /// First index `1 ≤ n ≤ N` with `C_n = 0`.
    pub fn first_vanishing_c(&self) -> Option<usize> {
        (1..self.c.len()).find(|&n| self.c[n].is_zero())
    }

    /// Largest relative deviation `|x − y| / max(1, |x|, |y|)` over the
    /// common range (`C_0` excluded).
    pub fn max_relative_diff(&self, other: &Ttrr) -> f64 {
        let rel = |x: &Scalar, y: &Scalar| {
            let d = (x - y).abs_f64();
            d / x.abs_f64().max(y.abs_f64()).max(1.0)
        };
        let n = self.b.len().min(other.b.len());
        let mut worst = 0f64;
        for k in 0..n {
            worst = worst.max(rel(&self.b[k], &other.b[k]));
            if k > 0 {
                worst = worst.max(rel(&self.c[k], &other.c[k]));
            }
        }
        worst
    }

    /// Exact equality over the common range.
    pub fn same_as(&self, other: &Ttrr) -> bool {
        let n = self.b.len().min(other.b.len());
        (0..n).all(|k| self.b[k] == other.b[k] && (k == 0 || self.c[k] == other.c[k]))
    }
}

/// Monic polynomials `P_0..P_N` generated by a recurrence on a lattice.
#[derive(Debug, Clone)]
pub struct OpSequence {
    lattice: Lattice,
    ttrr: Ttrr,
    polys: Vec<Polynomial>,
}

/// `P_0..P_N` by the recurrence. Uses `B_0..B_{N−1}` and `C_1..C_{N−1}`.
pub fn build_ops(lat: &Lattice, ttrr: &Ttrr, n: usize) -> Result<OpSequence> {
    if n > ttrr.n_max() + 1 {
        return Err(Error::InvalidInput(format!(
            "need B_0..B_{} but only {} coefficients are available",
            n - 1,
            ttrr.b.len()
        )));
    }
    let mut polys = vec![Polynomial::one()];
    for k in 0..n {
        if k >= 1 && ttrr.c[k].is_zero() {
            return Err(Error::VanishingC { n: k });
        }
        let mut next = &polys[k] * &Polynomial::linear_factor(&ttrr.b[k]);
        if k >= 1 {
            next = &next - &polys[k - 1].scale(&ttrr.c[k]);
        }
        polys.push(next);
    }
    Ok(OpSequence { lattice: lat.clone(), ttrr: ttrr.clone(), polys })
}

impl OpSequence {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn ttrr(&self) -> &Ttrr {
        &self.ttrr
    }

    pub fn polys(&self) -> &[Polynomial] {
        &self.polys
    }

    /// `P_n`.
    pub fn p(&self, n: usize) -> &Polynomial {
        &self.polys[n]
    }

    /// Largest available index.
    pub fn n_max(&self) -> usize {
        self.polys.len() - 1
    }

    /// `P_n^{[k]} = D_x^k P_{n+k} / (γ_{n+1} ⋯ γ_{n+k})`, monic of degree `n`.
    pub fn derived(&self, k: usize, n: usize) -> Result<Polynomial> {
        if n + k > self.n_max() {
            return Err(Error::InvalidInput(format!("P_{} not built", n + k)));
        }
        let den: Scalar = (1..=k).map(|j| self.lattice.gamma_at(n + j)).product();
        Ok(dx_pow(&self.lattice, &self.polys[n + k], k).scale(&den.recip()?))
    }
}
