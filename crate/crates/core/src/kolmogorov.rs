//! The formal Kolmogorov step: ε-graded derivations `A ∂_p + B ∂_q` whose
//! coefficients are trigonometric polynomials in the angles `q` with
//! polynomial dependence on the actions `p`.
//!
//! A coefficient is a finite sum of `c ε^s pᵉ e^{ik·q}`. The step removes
//! the `q`-dependence at order `r + 1` by conjugating with `exp(ad_V)`,
//! `V = Σ_{k≠0} B_k / (i k·ω)`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::mould::{Mould, MouldError};
use crate::normal_form::sam_mould;
use crate::scalar::Scalar;
use crate::word::{Alphabet, Grade, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KolmogorovError {
    #[error("frequency vectors and ω must have length {0}")]
    Dimension(usize),
    #[error("resonant frequency {k:?}: k·ω = 0 at ε-order {order}")]
    Resonant { k: Vec<i64>, order: u32 },
    #[error("coefficient of ε^{order} depends on q through frequency {k:?}")]
    NotInClass { order: u32, k: Vec<i64> },
    #[error("coefficient has p-degree {0}; only degree ≤ 1 is accepted")]
    PDegree(u32),
    #[error("ε⁰ part differs from ω·∂_q")]
    ZerothOrder,
    #[error("discarded terms have ε-order {found}, expected at least {expected}")]
    StarStar { found: u32, expected: u32 },
    #[error("mould expansion disagrees with the conjugated field")]
    MouldCheck,
    #[error("stage {0} generator is not Hamiltonian")]
    NotHamiltonian(usize),
    #[error("target order {target} exceeds the ε truncation {max}")]
    Target { target: u32, max: u32 },
    #[error(transparent)]
    Mould(#[from] MouldError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// `(s, k, e)` indexes `ε^s e^{ik·q} pᵉ`.
pub type Key = (u32, Vec<i64>, Vec<u32>);

/// `Σ c ε^s pᵉ e^{ik·q}`, truncated above `ε^{max_order}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpsFunction {
    nu: usize,
    max_order: u32,
    terms: BTreeMap<Key, Scalar>,
}

impl EpsFunction {
    pub fn zero(nu: usize, max_order: u32) -> Self {
        EpsFunction { nu, max_order, terms: BTreeMap::new() }
    }

    pub fn term(nu: usize, max_order: u32, s: u32, k: Vec<i64>, e: Vec<u32>, c: Scalar) -> Self {
        let mut f = EpsFunction::zero(nu, max_order);
        f.add_term((s, k, e), c);
        f
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn terms(&self) -> &BTreeMap<Key, Scalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, key: Key, c: Scalar) {
        if key.0 > self.max_order || c.is_zero() {
            return;
        }
        let entry = self.terms.entry(key.clone()).or_default();
        *entry += &c;
        if entry.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn add_scaled(&mut self, other: &Self, c: &Scalar) {
        for (k, v) in &other.terms {
            self.add_term(k.clone(), v * c);
        }
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        let mut out = EpsFunction::zero(self.nu, self.max_order);
        out.add_scaled(self, c);
        out
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = EpsFunction::zero(self.nu, self.max_order);
        for ((s1, k1, e1), c1) in &self.terms {
            for ((s2, k2, e2), c2) in &other.terms {
                if s1 + s2 > self.max_order {
                    continue;
                }
                let k = k1.iter().zip(k2).map(|(a, b)| a + b).collect();
                let e = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.add_term((s1 + s2, k, e), c1 * c2);
            }
        }
        out
    }

    pub fn d_p(&self, j: usize) -> Self {
        let mut out = EpsFunction::zero(self.nu, self.max_order);
        for ((s, k, e), c) in &self.terms {
            if e[j] == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2[j] -= 1;
            out.add_term((*s, k.clone(), e2), c * &Scalar::from(e[j] as i64));
        }
        out
    }

    pub fn d_q(&self, j: usize) -> Self {
        let mut out = EpsFunction::zero(self.nu, self.max_order);
        for ((s, k, e), c) in &self.terms {
            out.add_term((*s, k.clone(), e.clone()), c * &(Scalar::i() * Scalar::from(k[j])));
        }
        out
    }

    /// Terms with frequency `k`.
    pub fn frequency(&self, k: &[i64]) -> Self {
        self.filter(|(_, kk, _)| kk == k)
    }

    pub fn filter(&self, keep: impl Fn(&Key) -> bool) -> Self {
        EpsFunction {
            nu: self.nu,
            max_order: self.max_order,
            terms: self.terms.iter().filter(|(k, _)| keep(k)).map(|(k, v)| (k.clone(), v.clone())).collect(),
        }
    }

    pub fn min_order(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.0).min()
    }

    pub fn p_degree(&self) -> Option<u32> {
        self.terms.keys().map(|(_, _, e)| e.iter().sum()).max()
    }
}

impl fmt::Display for EpsFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|((s, k, e), c)| format!("{c} eps^{s} p^{e:?} e^(i{k:?}.q)"))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `Σ_j a_j ∂_{p_j} + b_j ∂_{q_j}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpsDerivation {
    pub a: Vec<EpsFunction>,
    pub b: Vec<EpsFunction>,
}

impl EpsDerivation {
    pub fn zero(nu: usize, max_order: u32) -> Self {
        EpsDerivation { a: vec![EpsFunction::zero(nu, max_order); nu], b: vec![EpsFunction::zero(nu, max_order); nu] }
    }

    /// `X_c = ω·∂_q`.
    pub fn constant_flow(omega: &[Scalar], max_order: u32) -> Self {
        let nu = omega.len();
        let mut x = EpsDerivation::zero(nu, max_order);
        for (j, w) in omega.iter().enumerate() {
            x.b[j] = EpsFunction::term(nu, max_order, 0, vec![0; nu], vec![0; nu], w.clone());
        }
        x
    }

    pub fn nu(&self) -> usize {
        self.a.len()
    }

    pub fn max_order(&self) -> u32 {
        self.a.first().map_or(0, |f| f.max_order())
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(EpsFunction::is_zero)
    }

    pub fn apply(&self, f: &EpsFunction) -> EpsFunction {
        let mut out = EpsFunction::zero(f.nu(), f.max_order());
        for j in 0..self.nu() {
            out.add_scaled(&self.a[j].mul(&f.d_p(j)), &Scalar::one());
            out.add_scaled(&self.b[j].mul(&f.d_q(j)), &Scalar::one());
        }
        out
    }

    fn map(&self, f: impl Fn(&EpsFunction) -> EpsFunction) -> Self {
        EpsDerivation { a: self.a.iter().map(&f).collect(), b: self.b.iter().map(&f).collect() }
    }

    pub fn add_scaled(&mut self, other: &Self, c: &Scalar) {
        for (x, y) in self.a.iter_mut().zip(&other.a).chain(self.b.iter_mut().zip(&other.b)) {
            x.add_scaled(y, c);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut r = self.clone();
        r.add_scaled(other, &Scalar::one());
        r
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut r = self.clone();
        r.add_scaled(other, &Scalar::from(-1));
        r
    }

    pub fn scale(&self, c: &Scalar) -> Self {
        self.map(|f| f.scale(c))
    }

    /// `[D₁, D₂]`, whose components are `D₁(D₂ z) − D₂(D₁ z)` on the
    /// coordinates `z`.
    pub fn bracket(&self, other: &Self) -> Self {
        let comp = |x: &EpsFunction, y: &EpsFunction| {
            let mut r = self.apply(y);
            r.add_scaled(&other.apply(x), &Scalar::from(-1));
            r
        };
        EpsDerivation {
            a: self.a.iter().zip(&other.a).map(|(x, y)| comp(x, y)).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| comp(x, y)).collect(),
        }
    }

    /// `exp(ad_V) X`; finite since `V` has positive ε-order.
    pub fn exp_ad(v: &Self, x: &Self) -> Self {
        let mut out = x.clone();
        let mut term = x.clone();
        let mut n = 1;
        loop {
            term = v.bracket(&term).scale(&Scalar::ratio(1, n));
            if term.is_zero() || n > v.max_order() as i64 + 1 {
                break;
            }
            out.add_scaled(&term, &Scalar::one());
            n += 1;
        }
        out
    }

    pub fn filter(&self, keep: impl Fn(&Key) -> bool) -> Self {
        self.map(|f| f.filter(&keep))
    }

    pub fn frequencies(&self) -> BTreeSet<Vec<i64>> {
        self.a.iter().chain(&self.b).flat_map(|f| f.terms().keys().map(|k| k.1.clone())).collect()
    }

    pub fn min_order(&self) -> Option<u32> {
        self.a.iter().chain(&self.b).filter_map(EpsFunction::min_order).min()
    }

    pub fn p_degree(&self) -> Option<u32> {
        self.a.iter().chain(&self.b).filter_map(EpsFunction::p_degree).max()
    }

    /// Membership of `X − X_c` in `𝒟¹_r`: the coefficients of `ε^s`,
    /// `s ≤ r`, do not depend on `q`. Returns the first violation.
    pub fn check_class(&self, r: u32) -> Result<(), KolmogorovError> {
        let mut first: Option<(u32, Vec<i64>)> = None;
        for f in self.a.iter().chain(&self.b) {
            for (s, k, _) in f.terms().keys() {
                if *s <= r && k.iter().any(|&x| x != 0) && first.as_ref().is_none_or(|(fs, fk)| (*s, k) < (*fs, fk)) {
                    first = Some((*s, k.clone()));
                }
            }
        }
        match first {
            Some((order, k)) => Err(KolmogorovError::NotInClass { order, k }),
            None => Ok(()),
        }
    }
}

fn dot_i(k: &[i64], omega: &[Scalar]) -> Scalar {
    let kw: Scalar = k.iter().zip(omega).map(|(&a, w)| w * &Scalar::from(a)).sum();
    Scalar::i() * kw
}

/// `X_H` for `H = ω·p + ε^κ ½|p|² + ε f(q)`: `ṗ = −ε ∂f/∂q`,
/// `q̇ = ω + ε^κ p`. `f` is `Σ f_k e^{ik·q}`.
pub fn field_from_hamiltonian(
    omega: &[Scalar],
    f: &BTreeMap<Vec<i64>, Scalar>,
    max_order: u32,
    kinetic_order: u32,
) -> Result<EpsDerivation, KolmogorovError> {
    let nu = omega.len();
    let mut x = EpsDerivation::constant_flow(omega, max_order);
    for (j, bj) in x.b.iter_mut().enumerate() {
        let mut e = vec![0; nu];
        e[j] = 1;
        bj.add_term((kinetic_order, vec![0; nu], e), Scalar::one());
    }
    for (k, c) in f {
        if k.len() != nu {
            return Err(KolmogorovError::Dimension(nu));
        }
        if k.iter().any(|&x| x != 0) && dot_i(k, omega).is_zero() {
            return Err(KolmogorovError::Resonant { k: k.clone(), order: 1 });
        }
        for j in 0..nu {
            let coeff = -(c * &(Scalar::i() * Scalar::from(k[j])));
            x.a[j].add_term((1, k.clone(), vec![0; nu]), coeff);
        }
    }
    Ok(x)
}

/// `B_k` for `k ≠ 0` (orders `≥ r+1`) and `B_0` (orders `≥ 1`).
pub fn frequency_split(x: &EpsDerivation, r: u32) -> Result<BTreeMap<Vec<i64>, EpsDerivation>, KolmogorovError> {
    x.check_class(r)?;
    let mut out = BTreeMap::new();
    for k in x.frequencies() {
        let zero = k.iter().all(|&c| c == 0);
        let kk = k.clone();
        let b = x.filter(move |key| key.1 == kk && key.0 >= if zero { 1 } else { r + 1 });
        if !b.is_zero() {
            out.insert(k, b);
        }
    }
    Ok(out)
}

/// The alphabet `ℤ^ν` restricted to the given frequencies, with
/// `ω(k) = i k·ω`.
pub fn frequency_alphabet(omega: &[Scalar], letters: impl IntoIterator<Item = Vec<i64>>) -> Result<Alphabet, KolmogorovError> {
    let spectrum = omega.iter().map(|w| Scalar::i() * w).collect();
    Ok(Alphabet::multi(letters.into_iter().collect(), spectrum)?)
}

#[derive(Debug, Clone)]
pub struct KolmogorovStage {
    pub order: u32,
    pub generator: EpsDerivation,
    /// `χ` with `V = X_χ`.
    pub generator_hamiltonian: EpsFunction,
    pub field: EpsDerivation,
    /// Lowest ε-order of `X' − X_c − B_0`.
    pub discarded_order: Option<u32>,
}

/// One step at order `r`: returns `X' = exp(ad_V) X` and `V`.
pub fn kolmogorov_step(x: &EpsDerivation, omega: &[Scalar], r: u32) -> Result<(EpsDerivation, EpsDerivation), KolmogorovError> {
    let nu = omega.len();
    let xc = EpsDerivation::constant_flow(omega, x.max_order());
    if x.filter(|k| k.0 == 0) != xc {
        return Err(KolmogorovError::ZerothOrder);
    }
    let split = frequency_split(x, r)?;
    let mut v = EpsDerivation::zero(nu, x.max_order());
    for (k, b) in &split {
        if k.iter().all(|&c| c == 0) {
            continue;
        }
        let w = dot_i(k, omega);
        if w.is_zero() {
            if b.min_order() == Some(r + 1) {
                return Err(KolmogorovError::Resonant { k: k.clone(), order: r + 1 });
            }
            continue;
        }
        v.add_scaled(b, &w.inv().expect("nonzero"));
    }
    Ok((EpsDerivation::exp_ad(&v, x), v))
}

/// `X_sam = X_c + Σ_𝐤 (Sam^𝐤 / r) [[B_{k¹}, B_{k²}], …]` over the frequency
/// alphabet.
pub fn sam_expansion(x: &EpsDerivation, omega: &[Scalar], r: u32) -> Result<EpsDerivation, KolmogorovError> {
    let split = frequency_split(x, r)?;
    let alphabet = frequency_alphabet(omega, split.keys().cloned())?;
    let sam = sam_mould(&alphabet);
    let letters: Vec<(Grade, &EpsDerivation)> = split.iter().map(|(k, b)| (Grade::Multi(k.clone()), b)).collect();
    let mut out = EpsDerivation::constant_flow(omega, x.max_order());
    let mut word = Vec::new();
    fn walk(
        sam: &Mould,
        letters: &[(Grade, &EpsDerivation)],
        word: &mut Vec<Grade>,
        prefix: &EpsDerivation,
        out: &mut EpsDerivation,
    ) -> Result<(), KolmogorovError> {
        let v = sam.eval_letters(word)?;
        if !v.is_zero() {
            out.add_scaled(prefix, &(v * Scalar::ratio(1, word.len() as i64)));
        }
        for (g, b) in letters {
            let next = prefix.bracket(b);
            if next.is_zero() {
                continue;
            }
            word.push(g.clone());
            walk(sam, letters, word, &next, out)?;
            word.pop();
        }
        Ok(())
    }
    for (g, b) in &letters {
        word.push(g.clone());
        walk(&sam, &letters, &mut word, b, &mut out)?;
        word.pop();
    }
    Ok(out)
}

/// Generator `χ(p, q, ε)` with `ṗ = −∂χ/∂q = a`, `q̇ = ∂χ/∂p = b`,
/// normalized to have no constant term, or `None`.
pub fn action_angle_generator(d: &EpsDerivation) -> Option<EpsFunction> {
    let nu = d.nu();
    let mut chi = EpsFunction::zero(nu, d.max_order());
    let mut seen = BTreeSet::new();
    for j in 0..nu {
        for ((s, k, e), c) in d.b[j].terms() {
            let mut e2 = e.clone();
            e2[j] += 1;
            let key = (*s, k.clone(), e2);
            if seen.insert(key.clone()) {
                chi.add_term(key, c * &Scalar::ratio(1, e[j] as i64 + 1));
            }
        }
        for ((s, k, e), c) in d.a[j].terms() {
            if k[j] == 0 {
                continue;
            }
            let key = (*s, k.clone(), e.clone());
            if seen.insert(key.clone()) {
                // −i k_j χ_key = c
                let coeff = -(c * &(Scalar::i() * Scalar::from(k[j])).inv().expect("nonzero"));
                chi.add_term(key, coeff);
            }
        }
    }
    (hamiltonian_field_aa(&chi) == *d).then_some(chi)
}

/// `X_χ = −∂χ/∂q ∂_p + ∂χ/∂p ∂_q`.
pub fn hamiltonian_field_aa(chi: &EpsFunction) -> EpsDerivation {
    let nu = chi.nu();
    EpsDerivation {
        a: (0..nu).map(|j| chi.d_q(j).scale(&Scalar::from(-1))).collect(),
        b: (0..nu).map(|j| chi.d_p(j)).collect(),
    }
}

/// `{f, g} = Σ ∂_q f ∂_p g − ∂_p f ∂_q g`.
pub fn poisson_aa(f: &EpsFunction, g: &EpsFunction) -> EpsFunction {
    let mut out = EpsFunction::zero(f.nu(), f.max_order());
    for j in 0..f.nu() {
        out.add_scaled(&f.d_q(j).mul(&g.d_p(j)), &Scalar::one());
        out.add_scaled(&f.d_p(j).mul(&g.d_q(j)), &Scalar::from(-1));
    }
    out
}

/// Images of the coordinates under `exp(V)`: `p_j` as functions and `q_j`
/// as `q_j + periodic part`. Returns `(P_j, Q_j − q_j)`.
pub fn transformed_coordinates(v: &EpsDerivation) -> (Vec<EpsFunction>, Vec<EpsFunction>) {
    let nu = v.nu();
    let series = |first: EpsFunction, start: EpsFunction| {
        // start + Σ_{n≥1} V^{n−1}(first)/n!
        let mut out = start;
        let mut term = first;
        let mut n = 1;
        while !term.is_zero() && n <= v.max_order() as usize + 1 {
            out.add_scaled(&term, &Scalar::inv_factorial(n));
            term = v.apply(&term);
            n += 1;
        }
        out
    };
    let ps = (0..nu)
        .map(|j| {
            let mut e = vec![0; nu];
            e[j] = 1;
            let pj = EpsFunction::term(nu, v.max_order(), 0, vec![0; nu], e, Scalar::one());
            series(v.a[j].clone(), pj)
        })
        .collect();
    let qs = (0..nu).map(|j| series(v.b[j].clone(), EpsFunction::zero(nu, v.max_order()))).collect();
    (ps, qs)
}

/// `{Q_i, P_j} = δ_ij`, `{P_i, P_j} = 0`, `{Q_i, Q_j} = 0` for the images of
/// the coordinates under `exp(V)`, up to the ε truncation.
pub fn is_canonical(v: &EpsDerivation) -> bool {
    let nu = v.nu();
    let max = v.max_order();
    let (ps, gs) = transformed_coordinates(v);
    let one = EpsFunction::term(nu, max, 0, vec![0; nu], vec![0; nu], Scalar::one());
    let zero = EpsFunction::zero(nu, max);
    // {q_i + G_i, g} = ∂_{p_i} g + {G_i, g}, {f, q_j + G_j} = −∂_{p_j} f + {f, G_j}.
    let qi_with = |i: usize, g: &EpsFunction| {
        let mut r = g.d_p(i);
        r.add_scaled(&poisson_aa(&gs[i], g), &Scalar::one());
        r
    };
    for i in 0..nu {
        for j in 0..nu {
            if poisson_aa(&ps[i], &ps[j]) != zero {
                return false;
            }
            if qi_with(i, &ps[j]) != if i == j { one.clone() } else { zero.clone() } {
                return false;
            }
            let mut qq = qi_with(i, &gs[j]);
            qq.add_scaled(&gs[i].d_p(j), &Scalar::from(-1));
            if qq != zero {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Clone)]
pub struct KolmogorovResult {
    pub initial: EpsDerivation,
    pub stages: Vec<KolmogorovStage>,
    pub field: EpsDerivation,
    pub hamiltonian: Option<EpsFunction>,
}

/// `target` steps from `𝒟¹_0` to `𝒟¹_target`, checking after each step the
/// class, the order of the discarded terms, the mould expansion, and that
/// the generator is Hamiltonian.
pub fn kolmogorov_normal_form(x: &EpsDerivation, omega: &[Scalar], target: u32) -> Result<KolmogorovResult, KolmogorovError> {
    if target > x.max_order() {
        return Err(KolmogorovError::Target { target, max: x.max_order() });
    }
    if let Some(d) = x.p_degree().filter(|&d| d > 1) {
        return Err(KolmogorovError::PDegree(d));
    }
    let xc = EpsDerivation::constant_flow(omega, x.max_order());
    let mut cur = x.clone();
    let mut stages = Vec::new();
    for r in 0..target {
        let (next, v) = kolmogorov_step(&cur, omega, r)?;
        next.check_class(r + 1)?;
        let b0 = cur.filter(|k| k.0 >= 1 && k.1.iter().all(|&c| c == 0));
        let discarded = next.sub(&xc).sub(&b0);
        let discarded_order = discarded.min_order();
        if let Some(found) = discarded_order.filter(|&o| o < r + 2) {
            return Err(KolmogorovError::StarStar { found, expected: r + 2 });
        }
        if sam_expansion(&cur, omega, r)? != next {
            return Err(KolmogorovError::MouldCheck);
        }
        let chi = action_angle_generator(&v).ok_or(KolmogorovError::NotHamiltonian(r as usize + 1))?;
        stages.push(KolmogorovStage { order: r, generator: v, generator_hamiltonian: chi, field: next.clone(), discarded_order });
        cur = next;
    }
    let hamiltonian = action_angle_generator(&cur);
    Ok(KolmogorovResult { initial: x.clone(), stages, field: cur, hamiltonian })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_q() -> BTreeMap<Vec<i64>, Scalar> {
        BTreeMap::from([(vec![1], Scalar::ratio(1, 2)), (vec![-1], Scalar::ratio(1, 2))])
    }

    #[test]
    fn field_shape() {
        let one = [Scalar::one()];
        let x = field_from_hamiltonian(&one, &BTreeMap::from([(vec![1], Scalar::one())]), 3, 1).unwrap();
        let a1 = x.a[0].filter(|k| k.0 == 1);
        assert_eq!(a1, EpsFunction::term(1, 3, 1, vec![1], vec![0], -Scalar::i()));
        assert!(x.check_class(0).is_ok());
        assert_eq!(x.check_class(1).unwrap_err(), KolmogorovError::NotInClass { order: 1, k: vec![1] });
        let free = field_from_hamiltonian(&one, &BTreeMap::new(), 3, 1).unwrap();
        assert!(free.check_class(3).is_ok());
    }

    #[test]
    fn eigenrelation_of_letters() {
        let omega = [Scalar::from(1), Scalar::ratio(3, 7)];
        let f = BTreeMap::from([(vec![1, 0], Scalar::one()), (vec![1, -2], Scalar::ratio(2, 3)), (vec![0, 1], Scalar::i())]);
        let x = field_from_hamiltonian(&omega, &f, 3, 1).unwrap();
        let xc = EpsDerivation::constant_flow(&omega, 3);
        for (k, b) in frequency_split(&x, 0).unwrap() {
            assert_eq!(xc.bracket(&b), b.scale(&dot_i(&k, &omega)), "{k:?}");
        }
    }

    #[test]
    fn star_cancellation() {
        let omega = [Scalar::one()];
        let x = field_from_hamiltonian(&omega, &cos_q(), 3, 1).unwrap();
        let split = frequency_split(&x, 0).unwrap();
        let mut acc = EpsDerivation::zero(1, 3);
        for (k, b) in &split {
            acc.add_scaled(b, &Scalar::one());
            let w = dot_i(k, &omega);
            if !w.is_zero() {
                acc.add_scaled(b, &Scalar::from(-1));
            }
        }
        assert_eq!(acc, split[&vec![0]]);
    }

    #[test]
    fn two_steps_on_pendulum() {
        let omega = [Scalar::one()];
        let x = field_from_hamiltonian(&omega, &cos_q(), 3, 1).unwrap();
        let r = kolmogorov_normal_form(&x, &omega, 2).unwrap();
        assert_eq!(r.stages.len(), 2);
        assert!(r.stages[0].field.check_class(1).is_ok());
        assert!(r.stages[1].field.check_class(2).is_ok());
        for s in &r.stages {
            assert!(is_canonical(&s.generator));
        }
        assert!(r.hamiltonian.is_some());
    }

    #[test]
    fn kinetic_at_order_zero_breaks_the_step() {
        let omega = [Scalar::one()];
        let x = field_from_hamiltonian(&omega, &cos_q(), 3, 0).unwrap();
        assert_eq!(kolmogorov_normal_form(&x, &omega, 1).unwrap_err(), KolmogorovError::ZerothOrder);
    }

    #[test]
    fn bracket_can_raise_p_degree() {
        let mut d1 = EpsDerivation::zero(1, 2);
        d1.b[0] = EpsFunction::term(1, 2, 0, vec![1], vec![1], Scalar::one());
        let mut d2 = EpsDerivation::zero(1, 2);
        d2.b[0] = EpsFunction::term(1, 2, 0, vec![0], vec![1], Scalar::one());
        assert_eq!(d1.p_degree(), Some(1));
        assert_eq!(d1.bracket(&d2).p_degree(), Some(2));
    }
}
