//! Hamiltonian fields in cartesian coordinates `(x₁…x_ν, y₁…y_ν)` with
//! `H = Σ λᵢxᵢyᵢ + Σ a_{nm} xⁿ yᵐ`.
//!
//! Hamilton's equations are taken as `ẋ = −∂H/∂y`, `ẏ = ∂H/∂x`, so that the
//! quadratic part gives `X_lin = −Σλᵢxᵢ∂xᵢ + Σλᵢyᵢ∂yᵢ`. With this convention
//! `X_{H₁,H₂} = [X_{H₁}, X_{H₂}]` for the bracket `{H₁,H₂} = Σ ∂xH₁∂yH₂ − ∂yH₁∂xH₂`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::normal_form::{self, NormalFormError};
use crate::operator::{eval_bracket_expansion_grouped, GradedOperator, OperatorError, PreparedField};
use crate::poly::{Monomial, PolyError, TruncatedPolynomial};
use crate::scalar::Scalar;
use crate::word::{Grade, GradeKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HamiltonianError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    NormalForm(#[from] NormalFormError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("Hamiltonians have different sizes")]
    SpaceMismatch,
    #[error("exponent vectors must have length {0}")]
    Exponents(usize),
    #[error("no term {0} in the Hamiltonian")]
    LetterAbsent(String),
    #[error("term {0} has degree below 3")]
    LowDegree(String),
    #[error("operator is not a derivation")]
    NotDerivation,
    #[error("stage {0} field is not Hamiltonian")]
    NotHamiltonian(usize),
    #[error("trimmed form from the mould differs from the iterated stages")]
    StageMismatch,
}

/// Exponent pair `(n, m)` of `xⁿ yᵐ`.
pub type Exponents = (Vec<u32>, Vec<u32>);

pub fn exponents_text((n, m): &Exponents) -> String {
    let join = |v: &[u32]| v.iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
    format!("({} | {})", join(n), join(m))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CartesianHamiltonian {
    dof: usize,
    cutoff: u32,
    lambda: Vec<Scalar>,
    higher: BTreeMap<Exponents, Scalar>,
}

impl CartesianHamiltonian {
    /// `cutoff` is the truncation degree `N` of the field; the Hamiltonian
    /// keeps terms up to degree `N + 1`. Terms `xᵢyᵢ` are merged into `λ`
    /// and constants are dropped.
    pub fn new(
        dof: usize,
        cutoff: u32,
        lambda: Vec<Scalar>,
        terms: impl IntoIterator<Item = (Exponents, Scalar)>,
    ) -> Result<Self, HamiltonianError> {
        if lambda.len() != dof {
            return Err(HamiltonianError::Exponents(dof));
        }
        let mut h = CartesianHamiltonian { dof, cutoff, lambda, higher: BTreeMap::new() };
        for ((n, m), c) in terms {
            if n.len() != dof || m.len() != dof {
                return Err(HamiltonianError::Exponents(dof));
            }
            h.add_term(n, m, c);
        }
        Ok(h)
    }

    fn add_term(&mut self, n: Vec<u32>, m: Vec<u32>, c: Scalar) {
        let deg: u32 = n.iter().chain(&m).sum();
        if deg == 0 || deg > self.cutoff + 1 || c.is_zero() {
            return;
        }
        if deg == 2 && n == m {
            if let Some(i) = n.iter().position(|&e| e == 1) {
                self.lambda[i] += &c;
                return;
            }
        }
        let key = (n, m);
        let entry = self.higher.entry(key.clone()).or_default();
        *entry += &c;
        if entry.is_zero() {
            self.higher.remove(&key);
        }
    }

    pub fn dof(&self) -> usize {
        self.dof
    }

    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn lambda(&self) -> &[Scalar] {
        &self.lambda
    }

    pub fn terms(&self) -> &BTreeMap<Exponents, Scalar> {
        &self.higher
    }

    /// `ω(n,m) = Σ λⱼ(mⱼ − nⱼ)`.
    pub fn omega(&self, (n, m): &Exponents) -> Scalar {
        self.lambda
            .iter()
            .zip(n.iter().zip(m))
            .map(|(l, (&a, &b))| l * &Scalar::from(b as i64 - a as i64))
            .sum()
    }

    /// `H` as a polynomial in `2ν` variables, truncated at degree `N + 1`.
    pub fn to_polynomial(&self) -> TruncatedPolynomial {
        let dim = 2 * self.dof;
        let mut p = TruncatedPolynomial::zero(dim, self.cutoff + 1);
        for (i, l) in self.lambda.iter().enumerate() {
            let mut e = vec![0; dim];
            e[i] = 1;
            e[self.dof + i] = 1;
            p.add_term(Monomial::new(e), l.clone());
        }
        for ((n, m), c) in &self.higher {
            p.add_term(Monomial::new(n.iter().chain(m).copied().collect()), c.clone());
        }
        p
    }

    /// Inverse of [`to_polynomial`](Self::to_polynomial).
    pub fn from_polynomial(dof: usize, cutoff: u32, p: &TruncatedPolynomial) -> Result<Self, HamiltonianError> {
        if p.dim() != 2 * dof {
            return Err(HamiltonianError::SpaceMismatch);
        }
        let terms = p.terms().map(|(mon, c)| {
            let e = mon.exps();
            ((e[..dof].to_vec(), e[dof..].to_vec()), c.clone())
        });
        CartesianHamiltonian::new(dof, cutoff, vec![Scalar::zero(); dof], terms)
    }

    /// The part of degree at least 3 grouped by `ω(n,m)`.
    pub fn omega_components(&self) -> BTreeMap<Scalar, CartesianHamiltonian> {
        let mut out: BTreeMap<Scalar, CartesianHamiltonian> = BTreeMap::new();
        for (k, c) in &self.higher {
            out.entry(self.omega(k))
                .or_insert_with(|| CartesianHamiltonian {
                    dof: self.dof,
                    cutoff: self.cutoff,
                    lambda: vec![Scalar::zero(); self.dof],
                    higher: BTreeMap::new(),
                })
                .higher
                .insert(k.clone(), c.clone());
        }
        out
    }

    /// The same Hamiltonian with `λ = 0`.
    pub fn without_quadratic(&self) -> Self {
        CartesianHamiltonian { lambda: vec![Scalar::zero(); self.dof], ..self.clone() }
    }
}

/// Weights `(−λ, λ)` of `X_lin` on `(x, y)`.
pub fn lin_weights(lambda: &[Scalar]) -> Vec<Scalar> {
    lambda.iter().map(|l| -l).chain(lambda.iter().cloned()).collect()
}

/// `X_H` for a polynomial `H` in `2ν` variables: the components are
/// `ẋᵢ = −∂H/∂yᵢ`, `ẏᵢ = ∂H/∂xᵢ`, truncated at `cutoff`.
pub fn field_of_polynomial(h: &TruncatedPolynomial, cutoff: u32) -> Result<GradedOperator, HamiltonianError> {
    let nu = h.dim() / 2;
    let mut comps = Vec::with_capacity(2 * nu);
    for i in 0..nu {
        comps.push(h.partial(nu + i)?.scale(&Scalar::from(-1)).with_cutoff(cutoff));
    }
    for i in 0..nu {
        comps.push(h.partial(i)?.with_cutoff(cutoff));
    }
    Ok(GradedOperator::derivation(&comps)?)
}

pub fn hamiltonian_field(h: &CartesianHamiltonian) -> Result<GradedOperator, HamiltonianError> {
    field_of_polynomial(&h.to_polynomial(), h.cutoff())
}

fn monomial_h(h: &CartesianHamiltonian, key: &Exponents) -> Result<CartesianHamiltonian, HamiltonianError> {
    let c = h.terms().get(key).ok_or_else(|| HamiltonianError::LetterAbsent(exponents_text(key)))?;
    CartesianHamiltonian::new(h.dof(), h.cutoff(), vec![Scalar::zero(); h.dof()], [(key.clone(), c.clone())])
}

/// `D_{nm}`: the field of the single term `a_{nm}xⁿyᵐ`.
pub fn dnm_operator(h: &CartesianHamiltonian, key: &Exponents) -> Result<GradedOperator, HamiltonianError> {
    hamiltonian_field(&monomial_h(h, key)?)
}

/// `D_{nmi} = a xⁿ⁻ᵉⁱ yᵐ⁻ᵉⁱ (nᵢyᵢ∂yᵢ − mᵢxᵢ∂xᵢ)`, homogeneous of grade
/// `(n − eᵢ, m − eᵢ)`.
pub fn dnmi_operator(h: &CartesianHamiltonian, key: &Exponents, i: usize) -> Result<GradedOperator, HamiltonianError> {
    let full = dnm_operator(h, key)?;
    let nu = h.dof();
    let mut comps = full.components();
    for (j, c) in comps.iter_mut().enumerate() {
        if j % nu != i {
            *c = TruncatedPolynomial::zero(2 * nu, h.cutoff());
        }
    }
    let mut grade: Vec<i64> = key.0.iter().chain(&key.1).map(|&e| e as i64).collect();
    grade[i] -= 1;
    grade[nu + i] -= 1;
    Ok(GradedOperator::derivation(&comps)?.with_grade(Some(grade)))
}

/// `𝔇_ω = X_{H_ω}` for every Ω-homogeneous component of the higher part.
pub fn omega_decomposition(h: &CartesianHamiltonian) -> Result<BTreeMap<Scalar, GradedOperator>, HamiltonianError> {
    h.omega_components()
        .into_iter()
        .map(|(om, hw)| Ok((om, hamiltonian_field(&hw)?)))
        .collect()
}

/// `X_H` prepared over the Ω-alphabet.
pub fn omega_field(h: &CartesianHamiltonian) -> Result<PreparedField, HamiltonianError> {
    if let Some(k) = h.terms().keys().find(|(n, m)| n.iter().chain(m).sum::<u32>() < 3) {
        return Err(HamiltonianError::LowDegree(exponents_text(k)));
    }
    let parts = omega_decomposition(h)?
        .into_iter()
        .map(|(om, op)| (Grade::Scalar(om), op))
        .collect();
    Ok(PreparedField::new(2 * h.dof(), h.cutoff(), lin_weights(h.lambda()), GradeKind::Scalar, parts)?)
}

/// A polynomial `H` with `X_H = P`, normalized to have no constant term,
/// or `None` if `P` is not Hamiltonian.
pub fn hamiltonian_generator(p: &GradedOperator) -> Result<Option<TruncatedPolynomial>, HamiltonianError> {
    if !p.is_derivation() {
        return Err(HamiltonianError::NotDerivation);
    }
    let dim = p.dim();
    if dim % 2 == 1 {
        return Ok(None);
    }
    let nu = dim / 2;
    let comps = p.components();
    let mut h = TruncatedPolynomial::zero(dim, p.cutoff() + 1);
    let mut seen = std::collections::BTreeSet::new();
    // ∂H/∂xᵢ = P(yᵢ) and ∂H/∂yᵢ = −P(xᵢ); each monomial of H is fixed by the
    // first source that produces it and the result is verified below.
    for i in 0..dim {
        let (src, var, sign) = if i < nu { (&comps[nu + i], i, 1) } else { (&comps[i - nu], i, -1) };
        for (mon, c) in src.terms() {
            let mut e = mon.exps().to_vec();
            e[var] += 1;
            let target = Monomial::new(e);
            if seen.insert(target.clone()) {
                let coeff = c * &Scalar::ratio(sign, target.exps()[var] as i64);
                h.add_term(target, coeff);
            }
        }
    }
    let back = field_of_polynomial(&h, p.cutoff())?;
    Ok((back == *p).then_some(h))
}

/// Certifies `P = X_H` and returns the generating Hamiltonian.
pub fn is_hamiltonian(p: &GradedOperator) -> Result<Option<CartesianHamiltonian>, HamiltonianError> {
    match hamiltonian_generator(p)? {
        Some(h) => Ok(Some(CartesianHamiltonian::from_polynomial(p.dim() / 2, p.cutoff(), &h)?)),
        None => Ok(None),
    }
}

/// `{f, g} = Σᵢ ∂xᵢf ∂yᵢg − ∂yᵢf ∂xᵢg`, truncated at the common cutoff.
pub fn poisson(f: &TruncatedPolynomial, g: &TruncatedPolynomial) -> Result<TruncatedPolynomial, HamiltonianError> {
    if f.dim() != g.dim() || f.cutoff() != g.cutoff() || f.dim() % 2 == 1 {
        return Err(HamiltonianError::SpaceMismatch);
    }
    let nu = f.dim() / 2;
    let mut out = TruncatedPolynomial::zero(f.dim(), f.cutoff());
    for i in 0..nu {
        out.add_scaled(&f.partial(i)?.mul(&g.partial(nu + i)?)?, &Scalar::one());
        out.add_scaled(&f.partial(nu + i)?.mul(&g.partial(i)?)?, &Scalar::from(-1));
    }
    Ok(out)
}

pub fn poisson_bracket(h1: &CartesianHamiltonian, h2: &CartesianHamiltonian) -> Result<CartesianHamiltonian, HamiltonianError> {
    if h1.dof() != h2.dof() || h1.cutoff() != h2.cutoff() {
        return Err(HamiltonianError::SpaceMismatch);
    }
    let p = poisson(&h1.to_polynomial(), &h2.to_polynomial())?;
    CartesianHamiltonian::from_polynomial(h1.dof(), h1.cutoff(), &p)
}

#[derive(Debug, Clone)]
pub struct HamiltonianStage {
    pub field: PreparedField,
    /// `H⁽ⁱ⁾` with `X_{H⁽ⁱ⁾}` the stage field.
    pub hamiltonian: CartesianHamiltonian,
    pub generator: GradedOperator,
    /// `χ` with `X_χ = V`.
    pub generator_hamiltonian: CartesianHamiltonian,
}

#[derive(Debug, Clone)]
pub struct CanonicalTrimmed {
    pub initial: PreparedField,
    pub stages: Vec<HamiltonianStage>,
    /// `X_lin + Σ Tram^𝛚 𝔇_𝛚`, regrouped by `‖𝛚‖`.
    pub trimmed: PreparedField,
    pub hamiltonian: CartesianHamiltonian,
    pub normalizer: GradedOperator,
}

/// Simplifies over the Ω-alphabet until only resonant letters are left,
/// certifying every stage field and generator as Hamiltonian, and checks
/// the result against the mould `Tram`.
pub fn canonical_trimmed_form(h: &CartesianHamiltonian) -> Result<CanonicalTrimmed, HamiltonianError> {
    let initial = omega_field(h)?;
    let mut stages = Vec::new();
    let mut cur = initial.clone();
    let mut normalizer = GradedOperator::identity(initial.dim(), initial.cutoff());
    while cur.parts().keys().any(|g| !matches!(g, Grade::Scalar(om) if om.is_zero())) {
        if stages.len() > initial.cutoff() as usize {
            break;
        }
        let s = normal_form::simplify_once(&cur)?;
        let k = stages.len() + 1;
        let hamiltonian = is_hamiltonian(&s.field.total())?.ok_or(HamiltonianError::NotHamiltonian(k))?;
        let chi = is_hamiltonian(&s.generator)?.ok_or(HamiltonianError::NotHamiltonian(k))?;
        normalizer = s.normalizer.compose(&normalizer)?;
        cur = s.field.clone();
        stages.push(HamiltonianStage { field: s.field, hamiltonian, generator: s.generator, generator_hamiltonian: chi });
    }
    let tram = normal_form::tram_mould(initial.alphabet(), initial.cutoff() as usize)?;
    let parts = eval_bracket_expansion_grouped(&tram, &initial)?;
    let trimmed = initial.with_parts(GradeKind::Scalar, parts)?;
    if trimmed.total() != cur.total() {
        return Err(HamiltonianError::StageMismatch);
    }
    if !trimmed.nonlinear().bracket(trimmed.lin())?.is_zero() {
        return Err(NormalFormError::NotPrenormal.into());
    }
    let hamiltonian = is_hamiltonian(&trimmed.total())?.ok_or(HamiltonianError::NotHamiltonian(stages.len()))?;
    Ok(CanonicalTrimmed { initial, stages, trimmed, hamiltonian, normalizer })
}
