//! Multivariate polynomials truncated at a total degree.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolyError {
    #[error("polynomials live in different spaces: (ν={0}, N={1}) vs (ν={2}, N={3})")]
    SpaceMismatch(usize, u32, usize, u32),
    #[error("axis {axis} out of range for ν={dim}")]
    Axis { axis: usize, dim: usize },
    #[error("cannot parse polynomial term `{0}`")]
    Parse(String),
}

/// Exponent vector `m` of `x^m`. Ordered by total degree, then with
/// earlier variables first (`1 < x < y < x² < xy < y²`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial(exps)
    }

    pub fn one(dim: usize) -> Self {
        Monomial(vec![0; dim])
    }

    pub fn var(dim: usize, i: usize) -> Self {
        let mut v = vec![0; dim];
        v[i] = 1;
        Monomial(v)
    }

    pub fn exps(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `x^{m+n}` when every exponent stays nonnegative.
    pub fn shift(&self, n: &[i64]) -> Option<Monomial> {
        let mut v = Vec::with_capacity(self.0.len());
        for (&a, &b) in self.0.iter().zip(n) {
            let e = a as i64 + b;
            if e < 0 {
                return None;
            }
            v.push(e as u32);
        }
        Some(Monomial(v))
    }

    /// Componentwise difference `self − other`.
    pub fn diff(&self, other: &Monomial) -> Vec<i64> {
        self.0.iter().zip(&other.0).map(|(&a, &b)| a as i64 - b as i64).collect()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials in `dim` variables with `min_deg ≤ degree ≤ cutoff`, in
/// canonical order.
pub fn basis(dim: usize, cutoff: u32, min_deg: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    for d in min_deg..=cutoff {
        let mut layer = Vec::new();
        let mut cur = vec![0; dim];
        compositions(d, 0, &mut cur, &mut layer);
        layer.sort();
        out.extend(layer);
    }
    out
}

fn compositions(rest: u32, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
    if i + 1 >= cur.len() {
        if let Some(last) = cur.last_mut() {
            *last = rest;
            out.push(Monomial(cur.clone()));
        } else if rest == 0 {
            out.push(Monomial(Vec::new()));
        }
        return;
    }
    for e in 0..=rest {
        cur[i] = e;
        compositions(rest - e, i + 1, cur, out);
    }
    cur[i] = 0;
}

/// A polynomial in `dim` variables keeping only terms of degree ≤ `cutoff`.
/// Zero coefficients are never stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TruncatedPolynomial {
    dim: usize,
    cutoff: u32,
    terms: BTreeMap<Monomial, Scalar>,
}

impl TruncatedPolynomial {
    pub fn zero(dim: usize, cutoff: u32) -> Self {
        TruncatedPolynomial { dim, cutoff, terms: BTreeMap::new() }
    }

    pub fn constant(dim: usize, cutoff: u32, c: Scalar) -> Self {
        Self::term(dim, cutoff, Monomial::one(dim), c)
    }

    pub fn var(dim: usize, cutoff: u32, i: usize) -> Self {
        Self::term(dim, cutoff, Monomial::var(dim, i), Scalar::one())
    }

    pub fn term(dim: usize, cutoff: u32, m: Monomial, c: Scalar) -> Self {
        let mut p = Self::zero(dim, cutoff);
        p.add_term(m, c);
        p
    }

    pub fn from_terms(dim: usize, cutoff: u32, terms: impl IntoIterator<Item = (Monomial, Scalar)>) -> Self {
        let mut p = Self::zero(dim, cutoff);
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Scalar)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Monomial) -> Scalar {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    /// Highest degree present, `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    /// Adds `c·x^m`, dropping it if its degree exceeds the cutoff.
    pub fn add_term(&mut self, m: Monomial, c: Scalar) {
        debug_assert_eq!(m.dim(), self.dim);
        if c.is_zero() || m.degree() > self.cutoff {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Adds `c·q` in place.
    pub fn add_scaled(&mut self, q: &TruncatedPolynomial, c: &Scalar) {
        if c.is_zero() {
            return;
        }
        for (m, v) in &q.terms {
            self.add_term(m.clone(), c * v);
        }
    }

    fn check(&self, other: &Self) -> Result<(), PolyError> {
        if self.dim != other.dim || self.cutoff != other.cutoff {
            return Err(PolyError::SpaceMismatch(self.dim, self.cutoff, other.dim, other.cutoff));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut p = self.clone();
        p.add_scaled(other, &Scalar::one());
        Ok(p)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut p = self.clone();
        p.add_scaled(other, &Scalar::from(-1));
        Ok(p)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut p = Self::zero(self.dim, self.cutoff);
        p.add_scaled(self, c);
        p
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check(other)?;
        let mut p = Self::zero(self.dim, self.cutoff);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if ma.degree() + mb.degree() <= self.cutoff {
                    p.add_term(ma.mul(mb), ca * cb);
                }
            }
        }
        Ok(p)
    }

    pub fn partial(&self, axis: usize) -> Result<Self, PolyError> {
        if axis >= self.dim {
            return Err(PolyError::Axis { axis, dim: self.dim });
        }
        let mut p = Self::zero(self.dim, self.cutoff);
        for (m, c) in &self.terms {
            let e = m.0[axis];
            if e == 0 {
                continue;
            }
            let mut v = m.0.clone();
            v[axis] -= 1;
            p.add_term(Monomial(v), c * &Scalar::from(e as i64));
        }
        Ok(p)
    }

    /// Same terms in a space with another cutoff (terms above it dropped).
    pub fn with_cutoff(&self, cutoff: u32) -> Self {
        Self::from_terms(self.dim, cutoff, self.terms.iter().map(|(m, c)| (m.clone(), c.clone())))
    }

    /// Keeps only the terms of degree at most `d`.
    pub fn truncate(&self, d: u32) -> Self {
        let mut p = self.clone();
        p.terms.retain(|m, _| m.degree() <= d);
        p
    }

    /// Parses the format printed by `Display`, in the space `(dim, cutoff)`.
    pub fn parse(text: &str, dim: usize, cutoff: u32) -> Result<Self, PolyError> {
        let mut p = Self::zero(dim, cutoff);
        let text = text.trim();
        if text == "0" {
            return Ok(p);
        }
        for term in text.split(" + ") {
            let err = || PolyError::Parse(term.to_string());
            let (coeff, mono) = match term.split_once(" * ") {
                Some((c, m)) => (c, Some(m)),
                None => (term, None),
            };
            let c: Scalar = coeff.trim().parse().map_err(|_| err())?;
            let mut exps = vec![0u32; dim];
            for factor in mono.into_iter().flat_map(|m| m.split('*')) {
                let (var, e) = match factor.split_once('^') {
                    Some((v, e)) => (v, e.parse::<u32>().map_err(|_| err())?),
                    None => (factor, 1),
                };
                let k: usize = var.trim().strip_prefix('x').and_then(|s| s.parse().ok()).ok_or_else(err)?;
                if k == 0 || k > dim || e == 0 {
                    return Err(err());
                }
                exps[k - 1] += e;
            }
            p.add_term(Monomial(exps), c);
        }
        Ok(p)
    }
}

impl fmt::Display for TruncatedPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}")?;
            let factors: Vec<String> = m
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(k, &e)| if e == 1 { format!("x{}", k + 1) } else { format!("x{}^{}", k + 1, e) })
                .collect();
            if !factors.is_empty() {
                write!(f, " * {}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(text: &str, dim: usize, n: u32) -> TruncatedPolynomial {
        TruncatedPolynomial::parse(text, dim, n).unwrap()
    }

    #[test]
    fn products_truncate() {
        assert_eq!(p("1 * x1", 1, 3).mul(&p("1 * x1", 1, 3)).unwrap(), p("1 * x1^2", 1, 3));
        assert!(p("1 * x1^3", 1, 3).mul(&p("1 * x1", 1, 3)).unwrap().is_zero());
        let a = p("1 + 1 * x1", 1, 2);
        let b = p("1 + -1 * x1", 1, 2);
        assert_eq!(a.mul(&b).unwrap(), p("1 + -1 * x1^2", 1, 2));
        assert!(a.mul(&p("1", 1, 3)).is_err());
    }

    #[test]
    fn partials() {
        assert_eq!(p("1 * x1^2", 2, 4).partial(0).unwrap(), p("2 * x1", 2, 4));
        assert!(p("1 * x1^2", 2, 4).partial(1).unwrap().is_zero());
        assert_eq!(p("1 * x1*x2", 2, 4).partial(0).unwrap(), p("1 * x2", 2, 4));
        assert!(p("1", 2, 4).partial(2).is_err());
    }

    #[test]
    fn basis_counts_and_order() {
        let b = basis(2, 2, 0);
        let want: Vec<Monomial> = [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]
            .iter()
            .map(|e| Monomial(e.to_vec()))
            .collect();
        assert_eq!(b, want);
        assert_eq!(basis(1, 3, 1), vec![Monomial(vec![1]), Monomial(vec![2]), Monomial(vec![3])]);
        assert_eq!(basis(2, 1, 0).len(), 3);
        assert_eq!(basis(4, 6, 0).len(), 210);
        assert_eq!(basis(3, 5, 2).len(), 56 - 4);
    }

    #[test]
    fn text_round_trip() {
        for text in ["0", "3/2", "1 + -1/2 * x1 + 0+1i * x2^3", "-1-1i * x1^2*x3 + 2 * x1*x2^2"] {
            assert_eq!(p(text, 3, 4).to_string(), text);
        }
        assert!(TruncatedPolynomial::parse("1 * y", 2, 2).is_err());
        assert!(TruncatedPolynomial::parse("1 * x3", 2, 2).is_err());
    }
}
