//! Normal forms of prepared fields: linearization by the mould `Θ`, one-step
//! simplification by `Sam`, its iterates, and the trimmed form `Tram`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::mould::{Mould, MouldError};
use crate::operator::{
    eval_bracket_expansion, eval_bracket_expansion_grouped, eval_mould_expansion, eval_mould_expansion_grouped,
    GradedOperator, OperatorError, PreparedField,
};
use crate::scalar::Scalar;
use crate::word::{Alphabet, Grade, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalFormError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Mould(#[from] MouldError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("resonance: ω(‖{0}‖) = 0")]
    Resonance(Word),
    #[error("result does not commute with the linear part")]
    NotPrenormal,
}

impl From<crate::poly::PolyError> for NormalFormError {
    fn from(e: crate::poly::PolyError) -> Self {
        NormalFormError::Operator(e.into())
    }
}

/// Words with `ω(‖𝐧‖) = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResonanceReport {
    pub checked_length: usize,
    pub resonant_letters: Vec<Grade>,
    pub resonant_words: Vec<Word>,
    pub is_non_resonant: bool,
}

/// Scans the words of length at most `max_len`. With `max_degree`, words
/// whose grade sum has a larger component sum are skipped (they act as zero
/// modulo the cutoff).
pub fn resonance_report(alphabet: &Alphabet, max_len: usize, max_degree: Option<i64>) -> Result<ResonanceReport, NormalFormError> {
    let mut words = Vec::new();
    for w in alphabet.words(max_len) {
        if w.is_empty() {
            continue;
        }
        let sum = alphabet.grade_sum(w.letters())?;
        if let (Some(cap), Some(d)) = (max_degree, sum.degree()) {
            if d > cap {
                continue;
            }
        }
        if alphabet.omega(&sum)?.is_zero() {
            words.push(w);
        }
    }
    let letters = words.iter().filter(|w| w.len() == 1).map(|w| w.letters()[0].clone()).collect();
    Ok(ResonanceReport {
        checked_length: max_len,
        resonant_letters: letters,
        is_non_resonant: words.is_empty(),
        resonant_words: words,
    })
}

/// `Θ^𝐧 = 1/(ω₁(ω₁+ω₂)⋯(ω₁+⋯+ω_r))`, `Θ^∅ = 1`.
pub fn theta_mould(alphabet: &Alphabet) -> Mould {
    Mould::closed(alphabet, "Theta", Scalar::one(), |w| {
        let mut partial = Scalar::zero();
        let mut denom = Scalar::one();
        for om in w {
            partial += om;
            if partial.is_zero() {
                return None;
            }
            denom *= &partial;
        }
        denom.inv().ok()
    })
}

/// `V^n = 1/ω(n)` on nonresonant letters, zero elsewhere.
pub fn v_mould(alphabet: &Alphabet) -> Mould {
    Mould::closed(alphabet, "V", Scalar::zero(), |w| match w {
        [om] if !om.is_zero() => om.inv().ok(),
        _ => Some(Scalar::zero()),
    })
}

fn factorial(n: usize) -> Scalar {
    Scalar::inv_factorial(n).inv().expect("nonzero")
}

/// Closed form of the one-step simplification mould on the ω-sequence of a
/// nonempty word.
pub fn sam_value(w: &[Scalar]) -> Scalar {
    let r = w.len();
    let zeros: Vec<usize> = (0..r).filter(|&k| w[k].is_zero()).collect();
    if r == 1 {
        return if zeros.is_empty() { Scalar::zero() } else { Scalar::one() };
    }
    match zeros.as_slice() {
        [] => {
            let prod: Scalar = w.iter().cloned().product();
            let mut acc = Scalar::zero();
            for k in 1..=r {
                let tail: Scalar = w[k..].iter().cloned().sum();
                let num = &w[k - 1] * &Scalar::from((r - k) as i64) - tail;
                let mut term = num * Scalar::inv_factorial(k - 1) * Scalar::inv_factorial(r - k + 1);
                if (r - k) % 2 == 1 {
                    term = -term;
                }
                acc += &term;
            }
            acc * prod.inv().expect("nonzero")
        }
        [z] => {
            let i = z + 1;
            let others: Scalar = (0..r).filter(|k| k != z).map(|k| w[k].clone()).product();
            let denom = factorial(i - 1) * factorial(r - i) * others;
            let v = denom.inv().expect("nonzero");
            if (r - i) % 2 == 1 { -v } else { v }
        }
        _ => Scalar::zero(),
    }
}

/// The simplification mould `Sam`, with `Sam^∅ = 0`.
pub fn sam_mould(alphabet: &Alphabet) -> Mould {
    Mould::closed(alphabet, "Sam", Scalar::zero(), |w| Some(sam_value(w)))
}

/// `Sam_r = Sam ∘ ⋯ ∘ Sam` (r factors).
pub fn sam_iterated(r: usize, alphabet: &Alphabet) -> Result<Mould, NormalFormError> {
    assert!(r >= 1, "Sam_r needs r ≥ 1");
    let sam = sam_mould(alphabet);
    let mut m = sam.clone();
    for _ in 1..r {
        m = sam.compose(&m)?;
    }
    Ok(m)
}

/// `Tram^𝐧 = Sam_{ℓ(𝐧)}^𝐧` on words of length at most `max_len`, `Tram^∅ = 0`.
pub fn tram_mould(alphabet: &Alphabet, max_len: usize) -> Result<Mould, NormalFormError> {
    let iterates = (1..=max_len.max(1)).map(|r| sam_iterated(r, alphabet)).collect::<Result<Vec<_>, _>>()?;
    Ok(Mould::diagonal("Tram", Scalar::zero(), iterates)?)
}

/// Mould of the composite normalizer `e^{V_k}⋯e^{V_1}` of `k` successive
/// simplifications, pulled back to the original alphabet: the product of
/// `Exp(V) ∘ Sam_{j−1}` for `j = k, …, 1` with `Sam_0 = I`.
pub fn stage_normalizer_mould(alphabet: &Alphabet, stages: usize) -> Result<Mould, NormalFormError> {
    let exp_v = v_mould(alphabet).exp()?;
    let mut factors = vec![exp_v.clone()];
    for j in 2..=stages {
        factors.push(exp_v.compose(&sam_iterated(j - 1, alphabet)?)?);
    }
    let mut m = Mould::one(alphabet);
    for f in factors.iter().rev() {
        m = m.mul(f)?;
    }
    Ok(m)
}

/// `Θ×I − ∇Θ − Pran×Θ`.
pub fn conjugation_residual(theta: &Mould, pran: &Mould) -> Result<Mould, NormalFormError> {
    let a = theta.alphabet();
    Ok(theta.mul(&Mould::identity(a))?.sub(&theta.nabla())?.sub(&pran.mul(theta)?)?)
}

/// `P⁻¹` for `P = Id + (degree-raising part)`, by the Neumann series.
pub fn unipotent_inverse(p: &GradedOperator) -> Result<GradedOperator, NormalFormError> {
    let id = GradedOperator::identity(p.dim(), p.cutoff());
    let nil = id.sub(p)?;
    if nil.min_degree_raise().unwrap_or(1) < 1 {
        return Err(OperatorError::NotNilpotent.into());
    }
    let mut out = id.clone();
    let mut power = id;
    loop {
        power = power.compose(&nil)?;
        if power.is_zero() {
            break;
        }
        out.add_scaled(&power, &Scalar::one())?;
    }
    Ok(out)
}

/// The prepared field of a derivation operator with diagonal linear part.
pub fn field_of(op: &GradedOperator) -> Result<PreparedField, NormalFormError> {
    Ok(crate::operator::prepare(&op.components())?)
}

#[derive(Debug, Clone)]
pub struct NormalFormResult {
    pub field: PreparedField,
    pub normalizer: GradedOperator,
    pub mould: Mould,
    pub stage: usize,
}

/// Conjugates a nonresonant field to its linear part with `Θ = Σ Θ^𝐧 B_𝐧`.
pub fn linearize(field: &PreparedField) -> Result<NormalFormResult, NormalFormError> {
    let n = field.cutoff() as usize;
    let report = resonance_report(field.alphabet(), n, Some(n as i64 - 1))?;
    if let Some(w) = report.resonant_words.first() {
        return Err(NormalFormError::Resonance(w.clone()));
    }
    let theta = theta_mould(field.alphabet());
    let normalizer = eval_mould_expansion(&theta, field)?;
    let inverse = unipotent_inverse(&normalizer)?;
    let conj = normalizer.compose(&field.total())?.compose(&inverse)?;
    if conj.bracket(field.lin())? != GradedOperator::zero(field.dim(), field.cutoff()) {
        return Err(NormalFormError::NotPrenormal);
    }
    Ok(NormalFormResult { field: field_of(&conj)?, normalizer, mould: theta, stage: 1 })
}

/// `V = Σ_{ω(n)≠0} B_n/ω(n)`.
pub fn generator(field: &PreparedField) -> Result<GradedOperator, NormalFormError> {
    let mut v = GradedOperator::zero(field.dim(), field.cutoff());
    for (g, b) in field.parts() {
        let om = field.omega(g)?;
        if !om.is_zero() {
            v.add_scaled(b, &om.inv().expect("nonzero"))?;
        }
    }
    Ok(v)
}

#[derive(Debug, Clone)]
pub struct Simplified {
    /// `X_sam` over the alphabet of grade sums.
    pub field: PreparedField,
    pub generator: GradedOperator,
    /// `e^V`.
    pub normalizer: GradedOperator,
}

/// Groups `Σ M^𝐧 B_𝐧` by `‖𝐧‖` into new letters `D_m`.
pub fn re_alphabetize(field: &PreparedField, mould: &Mould) -> Result<PreparedField, NormalFormError> {
    let groups = eval_mould_expansion_grouped(mould, field)?;
    let parts: BTreeMap<Grade, GradedOperator> = groups
        .into_iter()
        .map(|(g, op)| {
            let tag = match &g {
                Grade::Multi(n) => Some(n.clone()),
                Grade::Scalar(_) => None,
            };
            (g, op.with_grade(tag))
        })
        .collect();
    Ok(field.with_parts(field.alphabet().kind(), parts)?)
}

/// `X_sam = X_lin + Σ Sam^𝐧 B_𝐧`, which equals `e^V X e^{−V}`.
pub fn simplify_once(field: &PreparedField) -> Result<Simplified, NormalFormError> {
    let sam = sam_mould(field.alphabet());
    let new = re_alphabetize(field, &sam)?;
    let v = generator(field)?;
    let normalizer = v.exp()?;
    Ok(Simplified { field: new, generator: v, normalizer })
}

/// `e^V X e^{−V}` computed directly on matrices.
pub fn simplify_once_direct(field: &PreparedField) -> Result<GradedOperator, NormalFormError> {
    let v = generator(field)?;
    Ok(v.exp_ad(&field.total())?)
}

fn has_nonresonant_letters(field: &PreparedField) -> Result<bool, NormalFormError> {
    for g in field.parts().keys() {
        if !field.omega(g)?.is_zero() {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub field: PreparedField,
    pub generator: GradedOperator,
}

#[derive(Debug, Clone)]
pub struct TrimmedResult {
    /// `X_tram` decomposed by grade sums.
    pub field: PreparedField,
    /// `e^{V_k}⋯e^{V_1}`.
    pub normalizer: GradedOperator,
    pub mould: Mould,
    pub stages: Vec<Stage>,
}

/// Iterated simplification until no nonresonant letter is left; at most
/// `N` stages are needed since each one raises the lowest nonresonant
/// degree.
pub fn simplify_stages(field: &PreparedField) -> Result<Vec<Stage>, NormalFormError> {
    let mut stages = Vec::new();
    let mut cur = field.clone();
    while has_nonresonant_letters(&cur)? && stages.len() <= cur.cutoff() as usize {
        let s = simplify_once(&cur)?;
        stages.push(Stage { field: s.field.clone(), generator: s.generator });
        cur = s.field;
    }
    Ok(stages)
}

/// `X_tram = X_lin + Σ Tram^𝐧 B_𝐧`, certified to commute with `X_lin`,
/// together with the stage normalizers.
pub fn trimmed_form(field: &PreparedField) -> Result<TrimmedResult, NormalFormError> {
    let n = field.cutoff() as usize;
    let tram = tram_mould(field.alphabet(), n)?;
    let groups = eval_bracket_expansion_grouped(&tram, field)?;
    let parts = groups
        .into_iter()
        .map(|(g, op)| {
            let tag = match &g {
                Grade::Multi(n) => Some(n.clone()),
                Grade::Scalar(_) => None,
            };
            (g, op.with_grade(tag))
        })
        .collect();
    let trimmed = field.with_parts(field.alphabet().kind(), parts)?;
    if !trimmed.nonlinear().bracket(field.lin())?.is_zero() {
        return Err(NormalFormError::NotPrenormal);
    }
    let stages = simplify_stages(field)?;
    let mut normalizer = GradedOperator::identity(field.dim(), field.cutoff());
    for s in &stages {
        normalizer = s.generator.exp()?.compose(&normalizer)?;
    }
    Ok(TrimmedResult { field: trimmed, normalizer, mould: tram, stages })
}

/// `X_lin + Σ M^𝐧 B_𝐧` in the projected (bracket) form.
pub fn expand_field(field: &PreparedField, mould: &Mould) -> Result<GradedOperator, NormalFormError> {
    Ok(field.lin().add(&eval_bracket_expansion(mould, field)?)?)
}
