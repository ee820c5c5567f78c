//! Moulds: scalar valuations of words over a graded alphabet.
//!
//! A [`Mould`] is a lazily evaluated expression tree. Leaves are closed
//! forms (functions of the ω-sequence of a word) or finite tables; inner
//! nodes are the algebra operations. Every node memoizes its values behind a
//! mutex, so evaluation is pure and a mould can be shared across threads.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use thiserror::Error;

use crate::scalar::Scalar;
use crate::word::{blocks, for_each_composition, shuffle, Alphabet, Grade, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MouldError {
    #[error("moulds are defined over different alphabets")]
    AlphabetMismatch,
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("mould `{name}` hits a resonance on {word}")]
    Resonance { name: String, word: Word },
    #[error("table has no letter {letter} (needed for {word})")]
    MissingLetter { letter: Grade, word: Word },
    #[error("table covers words up to length {max_len}; {word} is longer")]
    BeyondTable { word: Word, max_len: usize },
    #[error("mould is not invertible: its value on the empty word is 0")]
    NotInvertible,
    #[error("Exp needs a mould vanishing on the empty word, got {0}")]
    ExpDomain(Scalar),
    #[error("Log needs the value 0 or 1 on the empty word, got {0}")]
    LogDomain(Scalar),
    #[error("ψ is undefined on the empty word")]
    EmptyWord,
    #[error("cannot parse mould table line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Closed-form valuation on nonempty words, given their ω-sequence.
/// `None` marks a word where the formula is undefined (a resonance).
pub type ClosedFn = dyn Fn(&[Scalar]) -> Option<Scalar> + Send + Sync;

#[derive(Clone)]
pub struct Mould {
    alphabet: Arc<Alphabet>,
    node: Arc<Node>,
}

struct Node {
    op: Op,
    memo: Mutex<HashMap<Vec<Grade>, Scalar>>,
}

enum Op {
    Closed { name: String, empty: Scalar, f: Arc<ClosedFn> },
    Table { entries: HashMap<Vec<Grade>, Scalar>, max_len: usize },
    Sum(Mould, Mould),
    Scale(Scalar, Mould),
    Product(Mould, Mould),
    Inverse { m: Mould, inv_empty: Scalar },
    Compose(Mould, Mould),
    Exp(Mould),
    Log(Mould),
    Nabla(Mould),
    Diagonal { name: String, iterates: Vec<Mould> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryKind {
    Alternal,
    Symmetral,
    Neither,
}

/// A pair `(a, b)` whose shuffle identity fails, with the defect
/// `Σ_{c∈a⧢b} M^c − target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub a: Word,
    pub b: Word,
    pub defect: Scalar,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a={} b={} defect={}", self.a, self.b, self.defect)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymmetryReport {
    pub kind: SymmetryKind,
    pub checked_length: usize,
    pub first_violation: Option<Violation>,
}

impl Mould {
    fn with(alphabet: Arc<Alphabet>, op: Op) -> Mould {
        Mould { alphabet, node: Arc::new(Node { op, memo: Mutex::new(HashMap::new()) }) }
    }

    fn derived(&self, op: Op) -> Mould {
        Mould::with(self.alphabet.clone(), op)
    }

    fn same_alphabet(&self, other: &Mould) -> Result<(), MouldError> {
        if Arc::ptr_eq(&self.alphabet, &other.alphabet) || self.alphabet == other.alphabet {
            Ok(())
        } else {
            Err(MouldError::AlphabetMismatch)
        }
    }

    pub fn closed(
        alphabet: &Alphabet,
        name: &str,
        empty: Scalar,
        f: impl Fn(&[Scalar]) -> Option<Scalar> + Send + Sync + 'static,
    ) -> Mould {
        let op = Op::Closed { name: name.to_string(), empty, f: Arc::new(f) };
        Mould::with(Arc::new(alphabet.clone()), op)
    }

    /// Finite table over the alphabet's letters; absent words of length at
    /// most `max_len` are zero.
    pub fn table(alphabet: &Alphabet, entries: impl IntoIterator<Item = (Word, Scalar)>, max_len: usize) -> Mould {
        let entries = entries
            .into_iter()
            .filter(|(_, v)| !v.is_zero())
            .map(|(w, v)| (w.letters().to_vec(), v))
            .collect();
        Mould::with(Arc::new(alphabet.clone()), Op::Table { entries, max_len })
    }

    /// `1•`.
    pub fn one(alphabet: &Alphabet) -> Mould {
        Mould::closed(alphabet, "1", Scalar::one(), |_| Some(Scalar::zero()))
    }

    /// `0•`.
    pub fn zero(alphabet: &Alphabet) -> Mould {
        Mould::closed(alphabet, "0", Scalar::zero(), |_| Some(Scalar::zero()))
    }

    /// `I•`: one on letters, zero elsewhere.
    pub fn identity(alphabet: &Alphabet) -> Mould {
        Mould::closed(alphabet, "I", Scalar::zero(), |w| {
            Some(if w.len() == 1 { Scalar::one() } else { Scalar::zero() })
        })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn add(&self, other: &Mould) -> Result<Mould, MouldError> {
        self.same_alphabet(other)?;
        Ok(self.derived(Op::Sum(self.clone(), other.clone())))
    }

    pub fn scale(&self, c: &Scalar) -> Mould {
        self.derived(Op::Scale(c.clone(), self.clone()))
    }

    pub fn neg(&self) -> Mould {
        self.scale(&Scalar::from(-1))
    }

    pub fn sub(&self, other: &Mould) -> Result<Mould, MouldError> {
        self.add(&other.neg())
    }

    /// `(M × N)^a = Σ_{a¹a²=a} M^{a¹} N^{a²}`.
    pub fn mul(&self, other: &Mould) -> Result<Mould, MouldError> {
        self.same_alphabet(other)?;
        Ok(self.derived(Op::Product(self.clone(), other.clone())))
    }

    pub fn inverse(&self) -> Result<Mould, MouldError> {
        let e = self.eval_letters(&[])?;
        let inv_empty = e.inv().map_err(|_| MouldError::NotInvertible)?;
        Ok(self.derived(Op::Inverse { m: self.clone(), inv_empty }))
    }

    /// `M ∘ N`: on a nonempty word, the sum over factorizations into
    /// nonempty blocks `a¹…aᵏ` of `M^{‖a¹‖…‖aᵏ‖} N^{a¹}⋯N^{aᵏ}`.
    pub fn compose(&self, inner: &Mould) -> Result<Mould, MouldError> {
        self.same_alphabet(inner)?;
        Ok(self.derived(Op::Compose(self.clone(), inner.clone())))
    }

    pub fn exp(&self) -> Result<Mould, MouldError> {
        let e = self.eval_letters(&[])?;
        if !e.is_zero() {
            return Err(MouldError::ExpDomain(e));
        }
        Ok(self.derived(Op::Exp(self.clone())))
    }

    /// Logarithm with the series `Σ (−1)^{n+1} M^{×n}/n`. A mould with
    /// `M^∅ = 0` stands for `1• + M`; one with `M^∅ = 1` is taken as is.
    /// On nonempty words both readings agree.
    pub fn log(&self) -> Result<Mould, MouldError> {
        let e = self.eval_letters(&[])?;
        if !(e.is_zero() || e.is_one()) {
            return Err(MouldError::LogDomain(e));
        }
        Ok(self.derived(Op::Log(self.clone())))
    }

    /// `∇M^a = ω(‖a‖) M^a`.
    pub fn nabla(&self) -> Mould {
        self.derived(Op::Nabla(self.clone()))
    }

    /// The mould equal to `iterates[r-1]` on words of length `r`, with the
    /// given value on the empty word. Words longer than the list are out of
    /// range.
    pub fn diagonal(name: &str, empty: Scalar, iterates: Vec<Mould>) -> Result<Mould, MouldError> {
        let first = iterates.first().ok_or(MouldError::AlphabetMismatch)?.clone();
        for m in &iterates {
            first.same_alphabet(m)?;
        }
        let constant = Mould::closed(first.alphabet(), name, empty, |_| Some(Scalar::zero()));
        let mut all = vec![constant];
        all.extend(iterates);
        Ok(first.derived(Op::Diagonal { name: name.to_string(), iterates: all }))
    }

    /// Evaluates the mould on a word.
    pub fn eval(&self, w: &Word) -> Result<Scalar, MouldError> {
        self.eval_letters(w.letters())
    }

    pub fn eval_letters(&self, w: &[Grade]) -> Result<Scalar, MouldError> {
        if let Op::Table { entries, max_len } = &self.node.op {
            return self.eval_table(entries, *max_len, w);
        }
        if let Some(v) = self.node.memo.lock().expect("memo lock").get(w) {
            return Ok(v.clone());
        }
        let v = self.compute(w)?;
        self.node.memo.lock().expect("memo lock").insert(w.to_vec(), v.clone());
        Ok(v)
    }

    fn eval_table(&self, entries: &HashMap<Vec<Grade>, Scalar>, max_len: usize, w: &[Grade]) -> Result<Scalar, MouldError> {
        let word = || Word::new(w.to_vec()).unwrap_or_default();
        if w.len() > max_len {
            return Err(MouldError::BeyondTable { word: word(), max_len });
        }
        if let Some(g) = w.iter().find(|g| !self.alphabet.contains(g)) {
            return Err(MouldError::MissingLetter { letter: g.clone(), word: word() });
        }
        Ok(entries.get(w).cloned().unwrap_or_default())
    }

    fn compute(&self, w: &[Grade]) -> Result<Scalar, MouldError> {
        match &self.node.op {
            Op::Closed { name, empty, f } => {
                if w.is_empty() {
                    return Ok(empty.clone());
                }
                let omegas = w.iter().map(|g| self.alphabet.omega(g)).collect::<Result<Vec<_>, _>>()?;
                f(&omegas).ok_or_else(|| MouldError::Resonance {
                    name: name.clone(),
                    word: Word::new(w.to_vec()).unwrap_or_default(),
                })
            }
            Op::Table { .. } => unreachable!("tables are not memoized"),
            Op::Sum(a, b) => Ok(a.eval_letters(w)? + b.eval_letters(w)?),
            Op::Scale(c, m) => Ok(c * &m.eval_letters(w)?),
            Op::Product(a, b) => {
                let mut acc = Scalar::zero();
                for k in 0..=w.len() {
                    let left = a.eval_letters(&w[..k])?;
                    if left.is_zero() {
                        continue;
                    }
                    acc += &(left * b.eval_letters(&w[k..])?);
                }
                Ok(acc)
            }
            Op::Inverse { m, inv_empty } => {
                if w.is_empty() {
                    return Ok(inv_empty.clone());
                }
                // M × Inv = 1•, solved for the longest factor of Inv.
                let mut acc = Scalar::zero();
                for k in 1..=w.len() {
                    let left = m.eval_letters(&w[..k])?;
                    if left.is_zero() {
                        continue;
                    }
                    acc += &(left * self.eval_letters(&w[k..])?);
                }
                Ok(-(inv_empty * &acc))
            }
            Op::Compose(outer, inner) => {
                if w.is_empty() {
                    return outer.eval_letters(&[]);
                }
                let mut acc = Scalar::zero();
                let mut err = None;
                for_each_composition(w.len(), |cuts| {
                    if err.is_some() {
                        return;
                    }
                    match compose_term(&self.alphabet, outer, inner, w, cuts) {
                        Ok(v) => acc += &v,
                        Err(e) => err = Some(e),
                    }
                });
                match err {
                    Some(e) => Err(e),
                    None => Ok(acc),
                }
            }
            Op::Exp(m) => {
                if w.is_empty() {
                    return Ok(Scalar::one());
                }
                block_series(m, w, Scalar::inv_factorial)
            }
            Op::Log(m) => {
                if w.is_empty() {
                    return Ok(Scalar::zero());
                }
                block_series(m, w, |k| {
                    let c = Scalar::ratio(1, k as i64);
                    if k % 2 == 1 { c } else { -c }
                })
            }
            Op::Nabla(m) => {
                let om = self.alphabet.omega_word(w)?;
                if om.is_zero() {
                    return Ok(Scalar::zero());
                }
                Ok(om * m.eval_letters(w)?)
            }
            Op::Diagonal { iterates, .. } => match iterates.get(w.len()) {
                Some(m) => m.eval_letters(w),
                None => Err(MouldError::BeyondTable {
                    word: Word::new(w.to_vec()).unwrap_or_default(),
                    max_len: iterates.len() - 1,
                }),
            },
        }
    }

    /// Tabulates the nonzero values on all words of length at most `max_len`.
    pub fn tabulate(&self, max_len: usize) -> Result<Vec<(Word, Scalar)>, MouldError> {
        let mut out = Vec::new();
        for w in self.alphabet.words(max_len) {
            let v = self.eval(&w)?;
            if !v.is_zero() {
                out.push((w, v));
            }
        }
        Ok(out)
    }

    /// Textual table: a `max_len` header, then `word = value` for every
    /// nonzero value, words in canonical order.
    pub fn to_table_text(&self, max_len: usize) -> Result<String, MouldError> {
        let mut s = format!("max_len {max_len}\n");
        for (w, v) in self.tabulate(max_len)? {
            s.push_str(&format!("{w} = {v}\n"));
        }
        Ok(s)
    }

    pub fn from_table_text(alphabet: &Alphabet, text: &str) -> Result<Mould, MouldError> {
        let mut max_len = None;
        let mut entries = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let perr = |reason: String| MouldError::Parse { line: k + 1, reason };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("max_len ") {
                max_len = Some(rest.trim().parse().map_err(|_| perr(format!("bad length `{rest}`")))?);
                continue;
            }
            let (w, v) = line.split_once(" = ").ok_or_else(|| perr("expected `word = value`".into()))?;
            let w: Word = w.parse().map_err(|e: WordError| perr(e.to_string()))?;
            let v: Scalar = v.parse().map_err(|e: crate::scalar::ScalarError| perr(e.to_string()))?;
            entries.push((w, v));
        }
        let max_len = max_len.ok_or(MouldError::Parse { line: 1, reason: "missing max_len".into() })?;
        Ok(Mould::table(alphabet, entries, max_len))
    }

    /// Bounded check of alternality: `M^∅ = 0` and `Σ_{c∈a⧢b} M^c = 0` for
    /// nonempty `a, b` with `ℓ(a)+ℓ(b) ≤ max_len`.
    pub fn check_alternal(&self, max_len: usize) -> Result<Option<Violation>, MouldError> {
        let e = self.eval_letters(&[])?;
        if !e.is_zero() {
            return Ok(Some(Violation { a: Word::empty(), b: Word::empty(), defect: e }));
        }
        self.scan_pairs(max_len, false)
    }

    /// Bounded check of symmetrality: `Σ_{c∈a⧢b} M^c = M^a M^b` for all
    /// `a, b` with `ℓ(a)+ℓ(b) ≤ max_len`, empty words included.
    pub fn check_symmetral(&self, max_len: usize) -> Result<Option<Violation>, MouldError> {
        self.scan_pairs(max_len, true)
    }

    fn scan_pairs(&self, max_len: usize, symmetral: bool) -> Result<Option<Violation>, MouldError> {
        let words = self.alphabet.words(max_len);
        let min = if symmetral { 0 } else { 1 };
        for total in 0..=max_len {
            for a in words.iter().filter(|a| a.len() >= min && a.len() <= total) {
                for b in words.iter().filter(|b| b.len() >= min && a.len() + b.len() == total) {
                    let mut sum = Scalar::zero();
                    for c in shuffle(a, b)? {
                        sum += &self.eval(&c)?;
                    }
                    if symmetral {
                        sum -= &(self.eval(a)? * self.eval(b)?);
                    }
                    if !sum.is_zero() {
                        return Ok(Some(Violation { a: a.clone(), b: b.clone(), defect: sum }));
                    }
                }
            }
        }
        Ok(None)
    }

    /// Classifies the mould by its shuffle symmetry on pairs of total
    /// length at most `max_len`. When neither holds, the reported violation
    /// is the symmetral one if `M^∅ ≠ 0` and the alternal one otherwise.
    pub fn check_symmetry(&self, max_len: usize) -> Result<SymmetryReport, MouldError> {
        let alt = self.check_alternal(max_len)?;
        if alt.is_none() {
            return Ok(SymmetryReport { kind: SymmetryKind::Alternal, checked_length: max_len, first_violation: None });
        }
        let sym = self.check_symmetral(max_len)?;
        if sym.is_none() {
            return Ok(SymmetryReport { kind: SymmetryKind::Symmetral, checked_length: max_len, first_violation: None });
        }
        let first = if self.eval_letters(&[])?.is_zero() { alt } else { sym };
        Ok(SymmetryReport { kind: SymmetryKind::Neither, checked_length: max_len, first_violation: first })
    }
}

impl fmt::Debug for Mould {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.node.op {
            Op::Closed { name, .. } => write!(f, "{name}"),
            Op::Table { max_len, entries } => write!(f, "Table(len≤{max_len}, {} entries)", entries.len()),
            Op::Sum(a, b) => write!(f, "({a:?} + {b:?})"),
            Op::Scale(c, m) => write!(f, "{c}·{m:?}"),
            Op::Product(a, b) => write!(f, "({a:?} × {b:?})"),
            Op::Inverse { m, .. } => write!(f, "{m:?}⁻¹"),
            Op::Compose(a, b) => write!(f, "({a:?} ∘ {b:?})"),
            Op::Exp(m) => write!(f, "Exp {m:?}"),
            Op::Log(m) => write!(f, "Log {m:?}"),
            Op::Nabla(m) => write!(f, "∇{m:?}"),
            Op::Diagonal { name, .. } => write!(f, "{name}"),
        }
    }
}

fn compose_term(alphabet: &Alphabet, outer: &Mould, inner: &Mould, w: &[Grade], cuts: &[usize]) -> Result<Scalar, MouldError> {
    let mut prod = Scalar::one();
    let mut sums = Vec::with_capacity(cuts.len() + 1);
    for b in blocks(w, cuts) {
        let v = inner.eval_letters(b)?;
        if v.is_zero() {
            return Ok(Scalar::zero());
        }
        prod *= &v;
        sums.push(alphabet.grade_sum(b)?);
    }
    Ok(prod * outer.eval_letters(&sums)?)
}

/// `Σ_k coeff(k) Σ_{a¹…aᵏ = w} Π M^{aⁱ}` over factorizations into nonempty
/// blocks: the nonempty-word part of a power series in `M` with `M^∅ = 0`.
fn block_series(m: &Mould, w: &[Grade], coeff: impl Fn(usize) -> Scalar) -> Result<Scalar, MouldError> {
    let mut by_k = vec![Scalar::zero(); w.len() + 1];
    let mut err = None;
    for_each_composition(w.len(), |cuts| {
        if err.is_some() {
            return;
        }
        let mut prod = Scalar::one();
        for b in blocks(w, cuts) {
            match m.eval_letters(b) {
                Ok(v) if v.is_zero() => return,
                Ok(v) => prod *= &v,
                Err(e) => {
                    err = Some(e);
                    return;
                }
            }
        }
        by_k[cuts.len() + 1] += &prod;
    });
    if let Some(e) = err {
        return Err(e);
    }
    Ok(by_k
        .into_iter()
        .enumerate()
        .skip(1)
        .filter(|(_, v)| !v.is_zero())
        .map(|(k, v)| coeff(k) * v)
        .sum())
}

/// Expansion of `(1/r)[[…[a₁,a₂],…],a_r]` into signed words.
pub fn psi_coefficients(a: &Word) -> Result<Vec<(Word, Scalar)>, MouldError> {
    let letters = a.letters();
    let Some((first, rest)) = letters.split_first() else {
        return Err(MouldError::EmptyWord);
    };
    let mut terms: Vec<(Vec<Grade>, Scalar)> = vec![(vec![first.clone()], Scalar::one())];
    for x in rest {
        let mut next = Vec::with_capacity(terms.len() * 2);
        for (w, c) in terms {
            let mut right = w.clone();
            right.push(x.clone());
            let mut left = vec![x.clone()];
            left.extend(w);
            next.push((right, c.clone()));
            next.push((left, -c));
        }
        terms = next;
    }
    let r = Scalar::ratio(1, letters.len() as i64);
    terms
        .into_iter()
        .map(|(w, c)| Ok((Word::new(w)?, &c * &r)))
        .collect()
}
