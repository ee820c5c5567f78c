//! Graded alphabets and the combinatorics of words.
//!
//! A letter is identified with its grade: a multi-index in `ℤ^ν` or a
//! scalar. All alphabets the engine builds (homogeneity degrees, resonance
//! values, Fourier frequencies) have this property, and it lets composition
//! look letters up by grade sum.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("letters of different grade kinds: {} and {}", .0.0, .0.1)]
    MixedGrades(Box<(Grade, Grade)>),
    #[error("spectrum of length {spectrum} for grades of dimension {dim}")]
    DimensionMismatch { spectrum: usize, dim: usize },
    #[error("ω is undefined: multi-index grades need a spectrum")]
    NoSpectrum,
    #[error("cannot parse `{0}`")]
    Parse(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Grade {
    Multi(Vec<i64>),
    Scalar(Scalar),
}

/// Grade kind shared by every letter of an alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GradeKind {
    Multi(usize),
    Scalar,
}

impl Grade {
    pub fn kind(&self) -> GradeKind {
        match self {
            Grade::Multi(v) => GradeKind::Multi(v.len()),
            Grade::Scalar(_) => GradeKind::Scalar,
        }
    }

    pub fn zero(kind: GradeKind) -> Grade {
        match kind {
            GradeKind::Multi(d) => Grade::Multi(vec![0; d]),
            GradeKind::Scalar => Grade::Scalar(Scalar::zero()),
        }
    }

    pub fn add(&self, other: &Grade) -> Result<Grade, WordError> {
        match (self, other) {
            (Grade::Multi(a), Grade::Multi(b)) if a.len() == b.len() => {
                Ok(Grade::Multi(a.iter().zip(b).map(|(x, y)| x + y).collect()))
            }
            (Grade::Scalar(a), Grade::Scalar(b)) => Ok(Grade::Scalar(a + b)),
            _ => Err(WordError::MixedGrades(Box::new((self.clone(), other.clone())))),
        }
    }

    /// Total degree `Σ nᵢ` of a multi-index (the degree raised by a
    /// homogeneous operator of this grade).
    pub fn degree(&self) -> Option<i64> {
        match self {
            Grade::Multi(v) => Some(v.iter().sum()),
            Grade::Scalar(_) => None,
        }
    }
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grade::Multi(v) => {
                let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                write!(f, "({})", parts.join(","))
            }
            Grade::Scalar(s) => write!(f, "{s}"),
        }
    }
}

impl FromStr for Grade {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(inner) = t.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
            let comps: Result<Vec<i64>, _> = inner.split(',').map(|c| c.trim().parse()).collect();
            return comps.map(Grade::Multi).map_err(|_| WordError::Parse(s.to_string()));
        }
        t.parse::<Scalar>()
            .map(Grade::Scalar)
            .map_err(|_| WordError::Parse(s.to_string()))
    }
}

/// A finite sequence of letters.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Word(Vec<Grade>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn new(letters: Vec<Grade>) -> Result<Word, WordError> {
        if let Some(first) = letters.first() {
            if let Some(bad) = letters.iter().find(|g| g.kind() != first.kind()) {
                return Err(WordError::MixedGrades(Box::new((first.clone(), bad.clone()))));
            }
        }
        Ok(Word(letters))
    }

    pub fn letter(g: Grade) -> Word {
        Word(vec![g])
    }

    pub fn letters(&self) -> &[Grade] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn kind(&self) -> Option<GradeKind> {
        self.0.first().map(Grade::kind)
    }

    /// `‖a‖`, or `None` for the empty word (whose grade is the zero of the
    /// ambient alphabet, see [`Alphabet::grade_sum`]).
    pub fn grade_sum(&self) -> Option<Grade> {
        grade_sum(&self.0).ok().flatten()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|g| g.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || WordError::Parse(s.to_string());
        let inner = s
            .trim()
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(err)?;
        if inner.trim().is_empty() {
            return Ok(Word::empty());
        }
        let mut letters = Vec::new();
        let mut depth = 0;
        let mut start = 0;
        for (k, c) in inner.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    letters.push(inner[start..k].parse()?);
                    start = k + 1;
                }
                _ => {}
            }
        }
        letters.push(inner[start..].parse()?);
        Word::new(letters)
    }
}

pub(crate) fn grade_sum(letters: &[Grade]) -> Result<Option<Grade>, WordError> {
    let mut it = letters.iter();
    let Some(first) = it.next() else {
        return Ok(None);
    };
    let mut acc = first.clone();
    for g in it {
        acc = acc.add(g)?;
    }
    Ok(Some(acc))
}

fn check_same(a: &Word, b: &Word) -> Result<(), WordError> {
    match (a.0.first(), b.0.first()) {
        (Some(x), Some(y)) if x.kind() != y.kind() => Err(WordError::MixedGrades(Box::new((x.clone(), y.clone())))),
        _ => Ok(()),
    }
}

pub fn concat(a: &Word, b: &Word) -> Result<Word, WordError> {
    check_same(a, b)?;
    let mut v = a.0.clone();
    v.extend_from_slice(&b.0);
    Ok(Word(v))
}

/// All interleavings of `a` and `b`, with multiplicity.
pub fn shuffle(a: &Word, b: &Word) -> Result<Vec<Word>, WordError> {
    check_same(a, b)?;
    let mut out = Vec::new();
    let mut buf = Vec::with_capacity(a.len() + b.len());
    shuffle_into(&a.0, &b.0, &mut buf, &mut out);
    Ok(out)
}

fn shuffle_into(a: &[Grade], b: &[Grade], buf: &mut Vec<Grade>, out: &mut Vec<Word>) {
    if a.is_empty() || b.is_empty() {
        let mut w = buf.clone();
        w.extend_from_slice(a);
        w.extend_from_slice(b);
        out.push(Word(w));
        return;
    }
    buf.push(a[0].clone());
    shuffle_into(&a[1..], b, buf, out);
    buf.pop();
    buf.push(b[0].clone());
    shuffle_into(a, &b[1..], buf, out);
    buf.pop();
}

/// The `ℓ(a)+1` factorizations `a = a¹a²`.
pub fn splits2(a: &Word) -> Vec<(Word, Word)> {
    (0..=a.len())
        .map(|k| (Word(a.0[..k].to_vec()), Word(a.0[k..].to_vec())))
        .collect()
}

/// Factorizations of `a` into `k` nonempty consecutive blocks.
pub fn splits_k(a: &Word, k: usize) -> Vec<Vec<Word>> {
    let mut out = Vec::new();
    if k == 0 || k > a.len() {
        return out;
    }
    for_each_composition(a.len(), |cuts| {
        if cuts.len() + 1 == k {
            out.push(blocks(&a.0, cuts).map(|b| Word(b.to_vec())).collect());
        }
    });
    out
}

/// Calls `f` with the interior cut positions of every composition of a
/// word of length `len ≥ 1` (`2^(len-1)` calls).
pub(crate) fn for_each_composition(len: usize, mut f: impl FnMut(&[usize])) {
    if len == 0 {
        return;
    }
    let mut cuts = Vec::with_capacity(len);
    for mask in 0u64..(1u64 << (len - 1)) {
        cuts.clear();
        for j in 0..len - 1 {
            if mask & (1 << j) != 0 {
                cuts.push(j + 1);
            }
        }
        f(&cuts);
    }
}

pub(crate) fn blocks<'a, T>(w: &'a [T], cuts: &'a [usize]) -> impl Iterator<Item = &'a [T]> + 'a {
    let n = cuts.len();
    (0..=n).map(move |j| {
        let lo = if j == 0 { 0 } else { cuts[j - 1] };
        let hi = if j == n { w.len() } else { cuts[j] };
        &w[lo..hi]
    })
}

/// A finite alphabet with an optional spectrum `λ` turning multi-index
/// grades into resonance values `ω(n) = λ·n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alphabet {
    kind: GradeKind,
    letters: Vec<Grade>,
    spectrum: Option<Vec<Scalar>>,
}

impl Alphabet {
    pub fn new(kind: GradeKind, letters: Vec<Grade>, spectrum: Option<Vec<Scalar>>) -> Result<Self, WordError> {
        if let (GradeKind::Multi(d), Some(l)) = (kind, &spectrum) {
            if l.len() != d {
                return Err(WordError::DimensionMismatch { spectrum: l.len(), dim: d });
            }
        }
        let zero = Grade::zero(kind);
        if let Some(bad) = letters.iter().find(|g| g.kind() != kind) {
            return Err(WordError::MixedGrades(Box::new((zero, bad.clone()))));
        }
        let mut letters = letters;
        letters.sort();
        letters.dedup();
        Ok(Alphabet { kind, letters, spectrum })
    }

    /// Multi-index alphabet with spectrum `λ`.
    pub fn multi(letters: Vec<Vec<i64>>, spectrum: Vec<Scalar>) -> Result<Self, WordError> {
        let kind = GradeKind::Multi(spectrum.len());
        Alphabet::new(kind, letters.into_iter().map(Grade::Multi).collect(), Some(spectrum))
    }

    /// Alphabet whose letters are their own ω-values.
    pub fn scalar(letters: Vec<Scalar>) -> Self {
        let letters = letters.into_iter().map(Grade::Scalar).collect();
        Alphabet::new(GradeKind::Scalar, letters, None).expect("scalar letters are uniform")
    }

    pub fn kind(&self) -> GradeKind {
        self.kind
    }

    pub fn letters(&self) -> &[Grade] {
        &self.letters
    }

    pub fn spectrum(&self) -> Option<&[Scalar]> {
        self.spectrum.as_deref()
    }

    pub fn contains(&self, g: &Grade) -> bool {
        self.letters.binary_search(g).is_ok()
    }

    pub fn grade_sum(&self, w: &[Grade]) -> Result<Grade, WordError> {
        Ok(grade_sum(w)?.unwrap_or_else(|| Grade::zero(self.kind)))
    }

    pub fn omega(&self, g: &Grade) -> Result<Scalar, WordError> {
        match g {
            Grade::Scalar(s) => Ok(s.clone()),
            Grade::Multi(n) => {
                let l = self.spectrum.as_ref().ok_or(WordError::NoSpectrum)?;
                if l.len() != n.len() {
                    return Err(WordError::DimensionMismatch { spectrum: l.len(), dim: n.len() });
                }
                Ok(l.iter().zip(n).map(|(li, &ni)| li * &Scalar::from(ni)).sum())
            }
        }
    }

    /// `ω(‖a‖)`, zero on the empty word.
    pub fn omega_word(&self, w: &[Grade]) -> Result<Scalar, WordError> {
        match grade_sum(w)? {
            Some(g) => self.omega(&g),
            None => Ok(Scalar::zero()),
        }
    }

    /// Every word over the alphabet of length at most `max_len`, shortest
    /// first.
    pub fn words(&self, max_len: usize) -> Vec<Word> {
        let mut out = vec![Word::empty()];
        let mut layer = vec![Word::empty()];
        for _ in 0..max_len {
            let mut next = Vec::with_capacity(layer.len() * self.letters.len());
            for w in &layer {
                for g in &self.letters {
                    let mut v = w.0.clone();
                    v.push(g.clone());
                    next.push(Word(v));
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }
}
