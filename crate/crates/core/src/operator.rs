//! Linear operators on the truncated polynomial space, prepared fields, and
//! evaluation of mould expansions `Σ M^𝐧 B_𝐧`.
//!
//! An operator is stored as its matrix on the monomial basis of degree at
//! most `N`. All operators built here never lower the degree, so the ideal
//! of terms of degree `> N` is invariant and every result is exact modulo
//! that ideal.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::mould::{Mould, MouldError, Violation};
use crate::poly::{basis, Monomial, PolyError, TruncatedPolynomial};
use crate::scalar::Scalar;
use crate::word::{shuffle, Alphabet, Grade, GradeKind, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OperatorError {
    #[error("operators act on different spaces")]
    SpaceMismatch,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Mould(#[from] MouldError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("component {axis} has a nonzero constant term: the field must vanish at 0")]
    ConstantTerm { axis: usize },
    #[error("linear part is not diagonal: x{from} appears in component {axis}")]
    NonDiagonal { axis: usize, from: usize },
    #[error("letter {0} raises the degree by less than 1")]
    LowGrade(Grade),
    #[error("operator for letter {0} is not a derivation")]
    NotDerivation(Grade),
    #[error("operator for letter {letter} is not an eigenvector of ad(X_lin) with eigenvalue {omega}")]
    NotEigen { letter: Grade, omega: Scalar },
    #[error("operator is not nilpotent (it does not raise the degree)")]
    NotNilpotent,
    #[error("mould is not alternal: {0}")]
    NotAlternal(Violation),
}

#[derive(Debug, Clone)]
pub struct GradedOperator {
    dim: usize,
    cutoff: u32,
    cols: BTreeMap<Monomial, TruncatedPolynomial>,
    grade: Option<Vec<i64>>,
}

/// Equality of the actions; grade tags are bookkeeping.
impl PartialEq for GradedOperator {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cutoff == other.cutoff && self.cols == other.cols
    }
}

impl Eq for GradedOperator {}

impl GradedOperator {
    pub fn zero(dim: usize, cutoff: u32) -> Self {
        GradedOperator { dim, cutoff, cols: BTreeMap::new(), grade: None }
    }

    pub fn identity(dim: usize, cutoff: u32) -> Self {
        let cols = basis(dim, cutoff, 0)
            .into_iter()
            .map(|m| (m.clone(), TruncatedPolynomial::term(dim, cutoff, m, Scalar::one())))
            .collect();
        GradedOperator { dim, cutoff, cols, grade: Some(vec![0; dim]) }
    }

    /// The operator sending each listed basis monomial to its polynomial.
    pub fn from_columns(dim: usize, cutoff: u32, cols: impl IntoIterator<Item = (Monomial, TruncatedPolynomial)>) -> Self {
        let cols = cols
            .into_iter()
            .filter(|(m, p)| !p.is_zero() && m.degree() <= cutoff)
            .collect();
        GradedOperator { dim, cutoff, cols, grade: None }
    }

    /// The derivation `Σ fᵢ ∂_{xᵢ}`.
    pub fn derivation(components: &[TruncatedPolynomial]) -> Result<Self, OperatorError> {
        let first = components.first().ok_or(OperatorError::SpaceMismatch)?;
        let (dim, cutoff) = (first.dim(), first.cutoff());
        if components.len() != dim || components.iter().any(|c| c.dim() != dim || c.cutoff() != cutoff) {
            return Err(OperatorError::SpaceMismatch);
        }
        let mut cols = BTreeMap::new();
        for m in basis(dim, cutoff, 1) {
            let xm = TruncatedPolynomial::term(dim, cutoff, m.clone(), Scalar::one());
            let mut img = TruncatedPolynomial::zero(dim, cutoff);
            for (i, f) in components.iter().enumerate() {
                if m.exps()[i] == 0 || f.is_zero() {
                    continue;
                }
                img.add_scaled(&f.mul(&xm.partial(i)?)?, &Scalar::one());
            }
            if !img.is_zero() {
                cols.insert(m, img);
            }
        }
        Ok(GradedOperator { dim, cutoff, cols, grade: None })
    }

    /// `x^m ↦ (w·m) x^m`.
    pub fn diagonal(dim: usize, cutoff: u32, weights: &[Scalar]) -> Self {
        let cols = basis(dim, cutoff, 0)
            .into_iter()
            .filter_map(|m| {
                let w: Scalar = m.exps().iter().zip(weights).map(|(&e, l)| l * &Scalar::from(e as i64)).sum();
                (!w.is_zero()).then(|| (m.clone(), TruncatedPolynomial::term(dim, cutoff, m, w)))
            })
            .collect();
        GradedOperator { dim, cutoff, cols, grade: Some(vec![0; dim]) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn grade(&self) -> Option<&[i64]> {
        self.grade.as_deref()
    }

    pub fn with_grade(mut self, grade: Option<Vec<i64>>) -> Self {
        self.grade = grade;
        self
    }

    pub fn columns(&self) -> impl Iterator<Item = (&Monomial, &TruncatedPolynomial)> {
        self.cols.iter()
    }

    pub fn column(&self, m: &Monomial) -> Option<&TruncatedPolynomial> {
        self.cols.get(m)
    }

    pub fn is_zero(&self) -> bool {
        self.cols.is_empty()
    }

    /// Number of nonzero matrix entries.
    pub fn nnz(&self) -> usize {
        self.cols.values().map(TruncatedPolynomial::num_terms).sum()
    }

    fn check(&self, other: &Self) -> Result<(), OperatorError> {
        if self.dim != other.dim || self.cutoff != other.cutoff {
            return Err(OperatorError::SpaceMismatch);
        }
        Ok(())
    }

    pub fn apply(&self, p: &TruncatedPolynomial) -> Result<TruncatedPolynomial, OperatorError> {
        if p.dim() != self.dim || p.cutoff() != self.cutoff {
            return Err(OperatorError::SpaceMismatch);
        }
        let mut out = TruncatedPolynomial::zero(self.dim, self.cutoff);
        for (m, c) in p.terms() {
            if let Some(col) = self.cols.get(m) {
                out.add_scaled(col, c);
            }
        }
        Ok(out)
    }

    /// Images of the coordinate functions, `P(xᵢ)`.
    pub fn components(&self) -> Vec<TruncatedPolynomial> {
        (0..self.dim)
            .map(|i| {
                self.cols
                    .get(&Monomial::var(self.dim, i))
                    .cloned()
                    .unwrap_or_else(|| TruncatedPolynomial::zero(self.dim, self.cutoff))
            })
            .collect()
    }

    /// `self ∘ other`: `other` is applied first.
    pub fn compose(&self, other: &Self) -> Result<Self, OperatorError> {
        self.check(other)?;
        let mut cols = BTreeMap::new();
        for (m, q) in &other.cols {
            let img = self.apply(q)?;
            if !img.is_zero() {
                cols.insert(m.clone(), img);
            }
        }
        let grade = match (&self.grade, &other.grade) {
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| x + y).collect()),
            _ => None,
        };
        Ok(GradedOperator { dim: self.dim, cutoff: self.cutoff, cols, grade })
    }

    /// `self + c·other` in place.
    pub fn add_scaled(&mut self, other: &Self, c: &Scalar) -> Result<(), OperatorError> {
        self.check(other)?;
        if c.is_zero() {
            return Ok(());
        }
        if self.grade != other.grade {
            self.grade = if self.cols.is_empty() { other.grade.clone() } else { None };
        }
        for (m, q) in &other.cols {
            let entry = self
                .cols
                .entry(m.clone())
                .or_insert_with(|| TruncatedPolynomial::zero(self.dim, self.cutoff));
            entry.add_scaled(q, c);
            if entry.is_zero() {
                self.cols.remove(m);
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, OperatorError> {
        let mut r = self.clone();
        r.add_scaled(other, &Scalar::one())?;
        Ok(r)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, OperatorError> {
        let mut r = self.clone();
        r.add_scaled(other, &Scalar::from(-1))?;
        Ok(r)
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut r = GradedOperator::zero(self.dim, self.cutoff);
        r.grade = self.grade.clone();
        r.add_scaled(self, c).expect("same space");
        r
    }

    /// `[P, Q] = PQ − QP`.
    pub fn bracket(&self, other: &Self) -> Result<Self, OperatorError> {
        let mut r = self.compose(other)?;
        r.add_scaled(&other.compose(self)?, &Scalar::from(-1))?;
        Ok(r)
    }

    /// Smallest `deg(target) − deg(source)` over the nonzero entries.
    pub fn min_degree_raise(&self) -> Option<i64> {
        self.cols
            .iter()
            .flat_map(|(m, q)| q.terms().map(move |(t, _)| t.degree() as i64 - m.degree() as i64))
            .min()
    }

    /// The common shift `n` with every entry sending `x^m` to `x^{m+n}`,
    /// if there is one.
    pub fn infer_grade(&self) -> Option<Vec<i64>> {
        let mut found: Option<Vec<i64>> = None;
        for (m, q) in &self.cols {
            for (t, _) in q.terms() {
                let d = t.diff(m);
                match &found {
                    None => found = Some(d),
                    Some(f) if *f != d => return None,
                    _ => {}
                }
            }
        }
        found
    }

    pub fn is_homogeneous(&self, n: &[i64]) -> bool {
        self.cols.iter().all(|(m, q)| q.terms().all(|(t, _)| t.diff(m) == n))
    }

    /// Leibniz rule on every pair of basis monomials whose product stays
    /// within the cutoff.
    pub fn is_derivation(&self) -> bool {
        let mons = basis(self.dim, self.cutoff, 0);
        let polys: Vec<TruncatedPolynomial> = mons
            .iter()
            .map(|m| TruncatedPolynomial::term(self.dim, self.cutoff, m.clone(), Scalar::one()))
            .collect();
        let images: Vec<TruncatedPolynomial> = polys.iter().map(|p| self.apply(p).expect("same space")).collect();
        for i in 0..mons.len() {
            for j in i..mons.len() {
                if mons[i].degree() + mons[j].degree() > self.cutoff {
                    continue;
                }
                let lhs = self.apply(&polys[i].mul(&polys[j]).expect("same space")).expect("same space");
                let mut rhs = images[i].mul(&polys[j]).expect("same space");
                rhs.add_scaled(&polys[i].mul(&images[j]).expect("same space"), &Scalar::one());
                if lhs != rhs {
                    return false;
                }
            }
        }
        true
    }

    /// `P(pq) = P(p)P(q)` on every pair of basis monomials whose product
    /// stays within the cutoff.
    pub fn is_automorphism(&self) -> bool {
        let mons = basis(self.dim, self.cutoff, 0);
        let polys: Vec<TruncatedPolynomial> = mons
            .iter()
            .map(|m| TruncatedPolynomial::term(self.dim, self.cutoff, m.clone(), Scalar::one()))
            .collect();
        let images: Vec<TruncatedPolynomial> = polys.iter().map(|p| self.apply(p).expect("same space")).collect();
        for i in 0..mons.len() {
            for j in i..mons.len() {
                if mons[i].degree() + mons[j].degree() > self.cutoff {
                    continue;
                }
                let lhs = self.apply(&polys[i].mul(&polys[j]).expect("same space")).expect("same space");
                if lhs != images[i].mul(&images[j]).expect("same space") {
                    return false;
                }
            }
        }
        true
    }

    /// `exp(P) = Σ P^k/k!`, a finite sum when `P` raises every degree.
    pub fn exp(&self) -> Result<Self, OperatorError> {
        let mut out = GradedOperator::identity(self.dim, self.cutoff);
        out.grade = None;
        if self.is_zero() {
            return Ok(out);
        }
        if self.min_degree_raise().unwrap_or(1) < 1 {
            return Err(OperatorError::NotNilpotent);
        }
        let mut power = self.clone();
        let mut k = 1;
        while !power.is_zero() {
            out.add_scaled(&power, &Scalar::inv_factorial(k))?;
            power = self.compose(&power)?;
            k += 1;
        }
        Ok(out)
    }

    /// `e^{ad P} Q = Σ ad_P^k Q / k!` (equal to `e^P Q e^{−P}`), for `P`
    /// raising every degree.
    pub fn exp_ad(&self, q: &Self) -> Result<Self, OperatorError> {
        if self.min_degree_raise().unwrap_or(1) < 1 {
            return Err(OperatorError::NotNilpotent);
        }
        let mut out = q.clone();
        let mut term = q.clone();
        let mut k = 1;
        loop {
            term = self.bracket(&term)?;
            if term.is_zero() {
                break;
            }
            out.add_scaled(&term, &Scalar::inv_factorial(k))?;
            k += 1;
        }
        Ok(out)
    }
}

impl fmt::Display for GradedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.cols.is_empty() {
            return write!(f, "0");
        }
        for (m, q) in &self.cols {
            let src = TruncatedPolynomial::term(self.dim, self.cutoff, m.clone(), Scalar::one());
            writeln!(f, "{src} -> {q}")?;
        }
        Ok(())
    }
}

/// `X = X_lin + Σ_{letters} B_letter` with `X_lin` diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreparedField {
    dim: usize,
    cutoff: u32,
    weights: Vec<Scalar>,
    lin: GradedOperator,
    alphabet: Alphabet,
    parts: BTreeMap<Grade, GradedOperator>,
}

impl PreparedField {
    /// Assembles a field from its linear weights and letter operators,
    /// checking that each part raises the degree, is a derivation, and
    /// satisfies `[X_lin, B] = ω(letter)·B`. Zero parts are dropped.
    /// Multi-index letters use `weights` as their spectrum.
    pub fn new(
        dim: usize,
        cutoff: u32,
        weights: Vec<Scalar>,
        kind: GradeKind,
        parts: BTreeMap<Grade, GradedOperator>,
    ) -> Result<Self, OperatorError> {
        let parts: BTreeMap<Grade, GradedOperator> = parts.into_iter().filter(|(_, b)| !b.is_zero()).collect();
        let spectrum = match kind {
            GradeKind::Multi(_) => Some(weights.clone()),
            GradeKind::Scalar => None,
        };
        let alphabet = Alphabet::new(kind, parts.keys().cloned().collect(), spectrum)?;
        let lin = GradedOperator::diagonal(dim, cutoff, &weights);
        for (g, b) in &parts {
            if b.dim() != dim || b.cutoff() != cutoff {
                return Err(OperatorError::SpaceMismatch);
            }
            if g.degree().is_some_and(|d| d < 1) || b.min_degree_raise().is_some_and(|d| d < 1) {
                return Err(OperatorError::LowGrade(g.clone()));
            }
            let omega = alphabet.omega(g)?;
            if !eigen_entries(&weights, b, &omega) {
                return Err(OperatorError::NotEigen { letter: g.clone(), omega });
            }
            if !b.is_derivation() {
                return Err(OperatorError::NotDerivation(g.clone()));
            }
        }
        Ok(PreparedField { dim, cutoff, weights, lin, alphabet, parts })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    /// Diagonal weights `λ` of `X_lin`.
    pub fn weights(&self) -> &[Scalar] {
        &self.weights
    }

    pub fn lin(&self) -> &GradedOperator {
        &self.lin
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn parts(&self) -> &BTreeMap<Grade, GradedOperator> {
        &self.parts
    }

    pub fn part(&self, g: &Grade) -> Option<&GradedOperator> {
        self.parts.get(g)
    }

    pub fn omega(&self, g: &Grade) -> Result<Scalar, OperatorError> {
        Ok(self.alphabet.omega(g)?)
    }

    /// `Σ B_letter`.
    pub fn nonlinear(&self) -> GradedOperator {
        let mut acc = GradedOperator::zero(self.dim, self.cutoff);
        for b in self.parts.values() {
            acc.add_scaled(b, &Scalar::one()).expect("same space");
        }
        acc
    }

    /// `X_lin + Σ B_letter`.
    pub fn total(&self) -> GradedOperator {
        self.lin.add(&self.nonlinear()).expect("same space")
    }

    /// The same linear part with new letter operators.
    pub fn with_parts(&self, kind: GradeKind, parts: BTreeMap<Grade, GradedOperator>) -> Result<Self, OperatorError> {
        PreparedField::new(self.dim, self.cutoff, self.weights.clone(), kind, parts)
    }
}

fn eigen_entries(weights: &[Scalar], b: &GradedOperator, omega: &Scalar) -> bool {
    b.columns().all(|(m, q)| {
        q.terms().all(|(t, _)| {
            let shift: Scalar = t.diff(m).iter().zip(weights).map(|(&d, w)| w * &Scalar::from(d)).sum();
            shift == *omega
        })
    })
}

/// Splits a polynomial vector field vanishing at the origin into its
/// diagonal linear part and homogeneous parts `B_n`, where the term
/// `a·x^m ∂_{xᵢ}` has degree `n = m − eᵢ`.
pub fn prepare(components: &[TruncatedPolynomial]) -> Result<PreparedField, OperatorError> {
    let first = components.first().ok_or(OperatorError::SpaceMismatch)?;
    let (dim, cutoff) = (first.dim(), first.cutoff());
    if components.len() != dim || components.iter().any(|c| c.dim() != dim || c.cutoff() != cutoff) {
        return Err(OperatorError::SpaceMismatch);
    }
    let mut weights = vec![Scalar::zero(); dim];
    let mut grouped: BTreeMap<Vec<i64>, Vec<TruncatedPolynomial>> = BTreeMap::new();
    for (i, f) in components.iter().enumerate() {
        for (m, c) in f.terms() {
            match m.degree() {
                0 => return Err(OperatorError::ConstantTerm { axis: i + 1 }),
                1 => {
                    let j = m.exps().iter().position(|&e| e == 1).expect("degree one");
                    if j != i {
                        return Err(OperatorError::NonDiagonal { axis: i + 1, from: j + 1 });
                    }
                    weights[i] = c.clone();
                }
                _ => {
                    let mut n: Vec<i64> = m.exps().iter().map(|&e| e as i64).collect();
                    n[i] -= 1;
                    let comps = grouped
                        .entry(n)
                        .or_insert_with(|| vec![TruncatedPolynomial::zero(dim, cutoff); dim]);
                    comps[i].add_term(m.clone(), c.clone());
                }
            }
        }
    }
    let mut parts = BTreeMap::new();
    for (n, comps) in grouped {
        let b = GradedOperator::derivation(&comps)?.with_grade(Some(n.clone()));
        parts.insert(Grade::Multi(n), b);
    }
    PreparedField::new(dim, cutoff, weights, GradeKind::Multi(dim), parts)
}

struct Expansion<'a> {
    mould: &'a Mould,
    field: &'a PreparedField,
    letters: Vec<(&'a Grade, &'a GradedOperator)>,
    groups: BTreeMap<Grade, GradedOperator>,
    word: Vec<Grade>,
    depth: usize,
}

impl Expansion<'_> {
    fn deposit(&mut self, op: &GradedOperator, c: &Scalar) -> Result<(), OperatorError> {
        let key = self.field.alphabet().grade_sum(&self.word)?;
        let (dim, cutoff) = (self.field.dim(), self.field.cutoff());
        self.groups
            .entry(key)
            .or_insert_with(|| GradedOperator::zero(dim, cutoff))
            .add_scaled(op, c)
    }

    /// Words extending the current one: `prefix` is `B_𝐧` (or the nested
    /// bracket for the projected form).
    fn walk(&mut self, prefix: &GradedOperator, bracketed: bool) -> Result<(), OperatorError> {
        let cap = self.field.cutoff() as usize;
        if self.word.len() >= cap {
            return Ok(());
        }
        for k in 0..self.letters.len() {
            let (g, b) = self.letters[k];
            let next = if bracketed { prefix.bracket(b)? } else { prefix.compose(b)? };
            if next.is_zero() {
                continue;
            }
            self.word.push(g.clone());
            self.depth = self.depth.max(self.word.len());
            let mut v = self.mould.eval_letters(&self.word)?;
            if bracketed {
                v = &v * &Scalar::ratio(1, self.word.len() as i64);
            }
            if !v.is_zero() {
                self.deposit(&next, &v)?;
            }
            self.walk(&next, bracketed)?;
            self.word.pop();
        }
        Ok(())
    }
}

fn expansion<'a>(mould: &'a Mould, field: &'a PreparedField) -> Expansion<'a> {
    Expansion {
        mould,
        field,
        letters: field.parts().iter().collect(),
        groups: BTreeMap::new(),
        word: Vec::new(),
        depth: 0,
    }
}

fn sum_groups(field: &PreparedField, groups: &BTreeMap<Grade, GradedOperator>) -> GradedOperator {
    let mut acc = GradedOperator::zero(field.dim(), field.cutoff());
    for op in groups.values() {
        acc.add_scaled(op, &Scalar::one()).expect("same space");
    }
    acc
}

/// `Σ_𝐧 M^𝐧 B_𝐧` grouped by the grade sum `‖𝐧‖` (the empty word sits in the
/// zero grade).
pub fn eval_mould_expansion_grouped(mould: &Mould, field: &PreparedField) -> Result<BTreeMap<Grade, GradedOperator>, OperatorError> {
    let mut ex = expansion(mould, field);
    let id = GradedOperator::identity(field.dim(), field.cutoff());
    let e = mould.eval_letters(&[])?;
    if !e.is_zero() {
        ex.deposit(&id, &e)?;
    }
    ex.walk(&id, false)?;
    Ok(ex.groups.into_iter().filter(|(_, op)| !op.is_zero()).collect())
}

/// `Σ_𝐧 M^𝐧 B_𝐧` with `B_𝐧 = B_{n¹}∘⋯∘B_{nʳ}` and `B_∅ = Id`, over all words
/// that act nontrivially modulo degree `N`.
pub fn eval_mould_expansion(mould: &Mould, field: &PreparedField) -> Result<GradedOperator, OperatorError> {
    Ok(sum_groups(field, &eval_mould_expansion_grouped(mould, field)?))
}

/// The projected form `Σ_𝐧 (M^𝐧/r) [[…[B_{n¹},B_{n²}],…],B_{nʳ}]` grouped by
/// `‖𝐧‖`. The mould must be alternal on every word length that
/// contributes; this is certified before returning.
pub fn eval_bracket_expansion_grouped(mould: &Mould, field: &PreparedField) -> Result<BTreeMap<Grade, GradedOperator>, OperatorError> {
    let mut ex = expansion(mould, field);
    for k in 0..ex.letters.len() {
        let (g, b) = ex.letters[k];
        ex.word.push(g.clone());
        ex.depth = ex.depth.max(1);
        let v = mould.eval_letters(&ex.word)?;
        if !v.is_zero() {
            ex.deposit(b, &v)?;
        }
        ex.walk(b, true)?;
        ex.word.pop();
    }
    if let Some(v) = certify_alternal(mould, field, ex.depth)? {
        return Err(OperatorError::NotAlternal(v));
    }
    Ok(ex.groups.into_iter().filter(|(_, op)| !op.is_zero()).collect())
}

pub fn eval_bracket_expansion(mould: &Mould, field: &PreparedField) -> Result<GradedOperator, OperatorError> {
    Ok(sum_groups(field, &eval_bracket_expansion_grouped(mould, field)?))
}

/// Alternality of `mould` on the words that can act nontrivially: a letter
/// weighs the least degree its operator raises, and pairs whose total
/// weight exceeds `N − 1` only feed words that vanish modulo the cutoff.
fn certify_alternal(mould: &Mould, field: &PreparedField, len: usize) -> Result<Option<Violation>, OperatorError> {
    let e = mould.eval_letters(&[])?;
    if !e.is_zero() {
        return Ok(Some(Violation { a: Word::empty(), b: Word::empty(), defect: e }));
    }
    let cap = field.cutoff() as i64 - 1;
    let weighted: Vec<(Grade, i64)> = field
        .parts()
        .iter()
        .map(|(g, b)| (g.clone(), b.min_degree_raise().unwrap_or(1)))
        .collect();
    let mut words: Vec<(Word, i64)> = Vec::new();
    let mut frontier = vec![(Vec::<Grade>::new(), 0i64)];
    while let Some((w, wt)) = frontier.pop() {
        if w.len() >= len {
            continue;
        }
        for (g, d) in &weighted {
            if wt + d > cap {
                continue;
            }
            let mut next = w.clone();
            next.push(g.clone());
            words.push((Word::new(next.clone())?, wt + d));
            frontier.push((next, wt + d));
        }
    }
    words.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
    for (x, wx) in &words {
        for (y, wy) in &words {
            if wx + wy > cap || x.len() + y.len() > len {
                continue;
            }
            let mut sum = Scalar::zero();
            for c in shuffle(x, y)? {
                sum += &mould.eval(&c)?;
            }
            if !sum.is_zero() {
                return Ok(Some(Violation { a: x.clone(), b: y.clone(), defect: sum }));
            }
        }
    }
    Ok(None)
}
