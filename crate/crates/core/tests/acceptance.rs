//! Acceptance suite. Prints one line per criterion; every comparison is
//! exact. The oracles here are written against the definitions directly and
//! share nothing with the library beyond scalars and polynomials.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::rc::Rc;
use std::time::Instant;

use moulds::hamiltonian::{self, CartesianHamiltonian};
use moulds::io::{self, MouldTable, Report};
use moulds::job::{run_job, Command, ExitStatus, JobSpec};
use moulds::kolmogorov::{self, EpsDerivation, EpsFunction};
use moulds::normal_form::{
    linearize, sam_iterated, sam_mould, sam_value, stage_normalizer_mould, theta_mould, tram_mould, trimmed_form, v_mould,
};
use moulds::poly::{basis, Monomial, TruncatedPolynomial};
use moulds::{prepare, Alphabet, Grade, Mould, Scalar};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn s(t: &str) -> Scalar {
    t.parse().unwrap()
}

fn q(n: i64, d: i64) -> Scalar {
    Scalar::ratio(n, d)
}

fn inv(x: &Scalar) -> Scalar {
    x.inv().expect("nonzero")
}

fn fact(n: usize) -> Scalar {
    (1..=n as i64).map(Scalar::from).product()
}

fn sign(k: usize) -> Scalar {
    if k.is_multiple_of(2) {
        Scalar::one()
    } else {
        Scalar::from(-1)
    }
}

fn random_scalar(rng: &mut ChaCha8Rng, complex: bool) -> Scalar {
    loop {
        let re = q(rng.gen_range(-9..=9), rng.gen_range(1..=5));
        let im = if complex { q(rng.gen_range(-9..=9), rng.gen_range(1..=5)) } else { Scalar::zero() };
        let z = re + Scalar::i() * im;
        if !z.is_zero() {
            return z;
        }
    }
}

// ---------------------------------------------------------------------------
// Moulds as plain functions of the ω-sequence of a word.

type M = Rc<dyn Fn(&[Scalar]) -> Scalar>;

fn words(letters: &[Scalar], max_len: usize) -> Vec<Vec<Scalar>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for l in letters {
                let mut v: Vec<Scalar> = w.clone();
                v.push(l.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn shuffles(a: &[Scalar], b: &[Scalar]) -> Vec<Vec<Scalar>> {
    if a.is_empty() || b.is_empty() {
        return vec![a.iter().chain(b).cloned().collect()];
    }
    let mut out = Vec::new();
    for mut w in shuffles(&a[1..], b) {
        w.insert(0, a[0].clone());
        out.push(w);
    }
    for mut w in shuffles(a, &b[1..]) {
        w.insert(0, b[0].clone());
        out.push(w);
    }
    out
}

fn lib(m: Mould) -> M {
    Rc::new(move |w| m.eval_letters(&w.iter().cloned().map(Grade::Scalar).collect::<Vec<_>>()).unwrap())
}

fn memo(m: M) -> M {
    let cache: RefCell<BTreeMap<Vec<Scalar>, Scalar>> = RefCell::default();
    Rc::new(move |w| {
        if let Some(v) = cache.borrow().get(w) {
            return v.clone();
        }
        let v = m(w);
        cache.borrow_mut().insert(w.to_vec(), v.clone());
        v
    })
}

fn product(a: &M, b: &M) -> M {
    let (a, b) = (a.clone(), b.clone());
    memo(Rc::new(move |w| (0..=w.len()).map(|i| a(&w[..i]) * b(&w[i..])).sum()))
}

fn combo(terms: Vec<(M, Scalar)>) -> M {
    Rc::new(move |w| terms.iter().map(|(m, c)| m(w) * c).sum())
}

fn nabla(a: &M) -> M {
    let a = a.clone();
    Rc::new(move |w| w.iter().cloned().sum::<Scalar>() * a(w))
}

fn ident() -> M {
    Rc::new(|w| if w.len() == 1 { Scalar::one() } else { Scalar::zero() })
}

fn unit() -> M {
    Rc::new(|w| if w.is_empty() { Scalar::one() } else { Scalar::zero() })
}

/// `Σ_k A^{×k}/k!` for `A^∅ = 0`; exact on words of length ≤ `len`.
fn exp_series(a: &M, len: usize) -> M {
    let mut power = unit();
    let mut terms = vec![(power.clone(), Scalar::one())];
    for k in 1..=len {
        power = product(&power, a);
        terms.push((power.clone(), inv(&fact(k))));
    }
    combo(terms)
}

/// `(A∘B)^𝐰 = Σ A^{‖𝐰¹‖,…,‖𝐰ˢ‖} B^{𝐰¹}⋯B^{𝐰ˢ}` over cuts into nonempty blocks.
fn compose(a: &M, b: &M) -> M {
    let (a, b) = (a.clone(), b.clone());
    Rc::new(move |w| {
        if w.is_empty() {
            return a(&[]);
        }
        let r = w.len();
        let mut total = Scalar::zero();
        for cuts in 0..(1u32 << (r - 1)) {
            let mut outer = Vec::new();
            let mut coeff = Scalar::one();
            let mut start = 0;
            for end in 1..=r {
                if end == r || cuts & (1 << (end - 1)) != 0 {
                    let block = &w[start..end];
                    outer.push(block.iter().cloned().sum::<Scalar>());
                    coeff = coeff * b(block);
                    start = end;
                }
            }
            if !coeff.is_zero() {
                total += &(coeff * a(&outer));
            }
        }
        total
    })
}

fn theta_closed(w: &[Scalar]) -> Option<Scalar> {
    let mut partial = Scalar::zero();
    let mut d = Scalar::one();
    for om in w {
        partial += om;
        if partial.is_zero() {
            return None;
        }
        d *= &partial;
    }
    Some(inv(&d))
}

/// Closed form of the simplification mould derived from `F + D`; the sign of
/// the single-zero case is `(−1)^{r−i}`.
fn sam_closed(w: &[Scalar]) -> Scalar {
    let r = w.len();
    if r == 0 {
        return Scalar::zero();
    }
    let zeros: Vec<usize> = (0..r).filter(|&k| w[k].is_zero()).collect();
    match zeros.len() {
        0 if r == 1 => Scalar::zero(),
        0 => {
            let mut acc = Scalar::zero();
            for k in 1..=r {
                let tail: Scalar = w[k..].iter().cloned().sum();
                let num = &w[k - 1] * &Scalar::from((r - k) as i64) - tail;
                acc += &(sign(r - k) * num * inv(&(fact(k - 1) * fact(r - k + 1))));
            }
            acc * inv(&w.iter().cloned().product())
        }
        1 => {
            let i = zeros[0] + 1;
            let others: Scalar = (0..r).filter(|&k| k != i - 1).map(|k| w[k].clone()).product();
            sign(r - i) * inv(&(fact(i - 1) * fact(r - i) * others))
        }
        _ => Scalar::zero(),
    }
}

fn own_v() -> M {
    Rc::new(|w| match w {
        [om] if !om.is_zero() => inv(om),
        _ => Scalar::zero(),
    })
}

// ---------------------------------------------------------------------------
// Fields as lists of component polynomials.

type Field = Vec<TruncatedPolynomial>;

fn apply(x: &Field, f: &TruncatedPolynomial) -> TruncatedPolynomial {
    let mut out = TruncatedPolynomial::zero(f.dim(), f.cutoff());
    for (i, c) in x.iter().enumerate() {
        out.add_scaled(&c.mul(&f.partial(i).unwrap()).unwrap(), &Scalar::one());
    }
    out
}

fn bracket(a: &Field, b: &Field) -> Field {
    a.iter().zip(b).map(|(ai, bi)| apply(a, bi).sub(&apply(b, ai)).unwrap()).collect()
}

fn scale(a: &Field, c: &Scalar) -> Field {
    a.iter().map(|p| p.scale(c)).collect()
}

fn add(a: &Field, b: &Field) -> Field {
    a.iter().zip(b).map(|(x, y)| x.add(y).unwrap()).collect()
}

fn is_zero(a: &Field) -> bool {
    a.iter().all(TruncatedPolynomial::is_zero)
}

/// `exp(ad_V) X`.
fn exp_ad(v: &Field, x: &Field) -> Field {
    let mut acc = x.clone();
    let mut term = x.clone();
    for k in 1.. {
        term = scale(&bracket(v, &term), &q(1, k));
        if is_zero(&term) {
            break;
        }
        acc = add(&acc, &term);
    }
    acc
}

fn lin_field(lambda: &[Scalar], cutoff: u32) -> Field {
    let d = lambda.len();
    (0..d).map(|i| TruncatedPolynomial::var(d, cutoff, i).scale(&lambda[i])).collect()
}

/// Letters `n = m − eᵢ` of the nonlinear part.
fn split(x: &Field) -> BTreeMap<Vec<i64>, Field> {
    let d = x.len();
    let cutoff = x[0].cutoff();
    let mut out: BTreeMap<Vec<i64>, Field> = BTreeMap::new();
    for (i, c) in x.iter().enumerate() {
        for (m, v) in c.terms() {
            let mut n: Vec<i64> = m.exps().iter().map(|&e| e as i64).collect();
            n[i] -= 1;
            if n.iter().all(|&e| e == 0) {
                continue;
            }
            let comps = out.entry(n).or_insert_with(|| vec![TruncatedPolynomial::zero(d, cutoff); d]);
            comps[i].add_term(m.clone(), v.clone());
        }
    }
    out
}

fn dot(lambda: &[Scalar], n: &[i64]) -> Scalar {
    lambda.iter().zip(n).map(|(l, &e)| l * &Scalar::from(e)).sum()
}

fn quadratic_field(lambda: [Scalar; 2], a: [Scalar; 3], b: [Scalar; 3]) -> Field {
    let cutoff = 5;
    let mono = |i: u32, j: u32| Monomial::new(vec![i, j]);
    let lin = lin_field(&lambda, cutoff);
    let x = TruncatedPolynomial::from_terms(
        2,
        cutoff,
        [(mono(2, 0), a[0].clone()), (mono(1, 1), a[1].clone()), (mono(0, 2), a[2].clone())],
    );
    let y = TruncatedPolynomial::from_terms(
        2,
        cutoff,
        [(mono(2, 0), b[0].clone()), (mono(1, 1), b[1].clone()), (mono(0, 2), b[2].clone())],
    );
    vec![lin[0].add(&x).unwrap(), lin[1].add(&y).unwrap()]
}

// ---------------------------------------------------------------------------

fn criterion_1() -> Outcome {
    let letters = vec![s("1+1/2i"), s("-2/3+2i"), s("5/4-1/3i")];
    let a = Alphabet::scalar(letters.clone());
    let sam = lib(sam_mould(&a));
    let exp_v = lib(v_mould(&a).exp().unwrap());
    let theta = lib(theta_mould(&a));
    let all = words(&letters, 4);
    for w in &all {
        ensure!(Some(theta(w)) == theta_closed(w), "Theta differs from its closed form on {w:?}");
    }
    let mut pairs = 0;
    for u in &all {
        for v in all.iter().filter(|v| u.len() + v.len() <= 4) {
            let sh = shuffles(u, v);
            let sum = |m: &M| sh.iter().map(|w| m(w)).sum::<Scalar>();
            if !u.is_empty() && !v.is_empty() {
                ensure!(sum(&sam).is_zero(), "Sam not alternal on {u:?} ш {v:?}");
            }
            ensure!(sum(&exp_v) == exp_v(u) * exp_v(v), "Exp(V) not symmetral on {u:?} ш {v:?}");
            ensure!(sum(&theta) == theta(u) * theta(v), "Theta not symmetral on {u:?} ш {v:?}");
            pairs += 1;
        }
    }
    Ok(format!("{pairs} word pairs"))
}

fn criterion_2() -> Outcome {
    let lambda = [Scalar::one(), q(5, 7)];
    let x = quadratic_field(lambda.clone(), [q(1, 1), q(2, 1), q(3, 1)], [q(-1, 1), q(1, 2), q(0, 1)]);
    let field = prepare(&x).map_err(|e| e.to_string())?;
    let r = linearize(&field).map_err(|e| e.to_string())?;
    let lin = lin_field(&lambda, 5);
    ensure!(r.field.parts().is_empty(), "linearized field keeps nonlinear letters");
    ensure!(r.field.total().components() == lin, "linearized field is not X_lin");

    // Θ = Σ Θ^𝐧 B_{n¹}∘⋯∘B_{nʳ}, built innermost letter first.
    let letters: Vec<(Scalar, Field)> = split(&x).into_iter().map(|(n, b)| (dot(&lambda, &n), b)).collect();
    fn walk(letters: &[(Scalar, Field)], rev: &mut Vec<Scalar>, g: &TruncatedPolynomial, acc: &mut TruncatedPolynomial) {
        let word: Vec<Scalar> = rev.iter().rev().cloned().collect();
        acc.add_scaled(g, &theta_closed(&word).expect("nonresonant"));
        for (om, b) in letters {
            let next = apply(b, g);
            if next.is_zero() {
                continue;
            }
            rev.push(om.clone());
            walk(letters, rev, &next, acc);
            rev.pop();
        }
    }
    let theta = |f: &TruncatedPolynomial| {
        let mut acc = TruncatedPolynomial::zero(2, 5);
        walk(&letters, &mut Vec::new(), f, &mut acc);
        acc
    };
    let monomials = basis(2, 5, 0);
    for m in &monomials {
        let f = TruncatedPolynomial::term(2, 5, m.clone(), Scalar::one());
        let direct = theta(&f);
        ensure!(r.normalizer.apply(&f).unwrap() == direct, "normalizer column {m:?} differs from the Theta oracle");
        ensure!(theta(&apply(&x, &f)) == apply(&lin, &direct), "Theta X != X_lin Theta on {m:?}");
    }
    Ok(format!("{} columns, {} nonzero entries", monomials.len(), r.normalizer.nnz()))
}

fn criterion_3() -> Outcome {
    let generic = vec![s("1+1/2i"), s("-2/3+2i"), s("5/4-1/3i")];
    let theta: M = Rc::new(|w| theta_closed(w).expect("generic"));
    let residual = combo(vec![(product(&theta, &ident()), Scalar::one()), (nabla(&theta), Scalar::from(-1))]);
    let mut checked = 0;
    for w in words(&generic, 4) {
        ensure!(residual(&w).is_zero(), "nonresonant residual nonzero on {w:?}");
        checked += 1;
    }

    let letters = vec![Scalar::zero(), Scalar::one(), Scalar::from(-1), Scalar::from(2), s("1/2+1i")];
    let a = Alphabet::scalar(letters.clone());
    let theta = lib(stage_normalizer_mould(&a, 4).map_err(|e| e.to_string())?);
    let tram = lib(tram_mould(&a, 4).map_err(|e| e.to_string())?);
    let residual = combo(vec![
        (product(&theta, &ident()), Scalar::one()),
        (nabla(&theta), Scalar::from(-1)),
        (product(&tram, &theta), Scalar::from(-1)),
    ]);
    let mut resonant = 0;
    for w in words(&letters, 4) {
        ensure!(residual(&w).is_zero(), "trimmed residual nonzero on {w:?}");
        if w.iter().cloned().sum::<Scalar>().is_zero() && !w.is_empty() {
            resonant += 1;
        }
        checked += 1;
    }
    Ok(format!("{checked} words, {resonant} resonant"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut counts = [0usize; 3];
    for _ in 0..4 {
        let letters = vec![Scalar::zero(), random_scalar(&mut rng, true), random_scalar(&mut rng, true), random_scalar(&mut rng, false)];
        let v = own_v();
        let minus_v = combo(vec![(v.clone(), Scalar::from(-1))]);
        let exp_v = exp_series(&v, 4);
        let exp_mv = exp_series(&minus_v, 4);
        let c = product(&exp_v, &ident());
        let d = product(&c, &exp_mv);
        let e = nabla(&exp_mv);
        let f = product(&exp_v, &e);
        let a = Alphabet::scalar(letters.clone());
        let library = lib(sam_mould(&a));
        for w in words(&letters, 4).into_iter().filter(|w| !w.is_empty()) {
            let r = w.len();
            let zeros: Vec<usize> = (0..r).filter(|&k| w[k].is_zero()).collect();
            counts[zeros.len().min(2)] += 1;
            let prod_to = |j: usize| w[..j].iter().cloned().product::<Scalar>();
            // C: nonzero only when ω₁…ω_{r−1} are all nonzero.
            let c_closed = if w[..r - 1].iter().any(Scalar::is_zero) {
                Scalar::zero()
            } else {
                inv(&(fact(r - 1) * prod_to(r - 1)))
            };
            ensure!(c(&w) == c_closed, "C on {w:?}");
            // E, F: zero as soon as one ω vanishes.
            let all_nonzero = zeros.is_empty();
            let e_closed = if all_nonzero {
                sign(r) * w.iter().cloned().sum::<Scalar>() * inv(&(fact(r) * prod_to(r)))
            } else {
                Scalar::zero()
            };
            ensure!(e(&w) == e_closed, "E on {w:?}");
            let f_closed = if all_nonzero {
                let mut acc = Scalar::zero();
                for k in 1..=r {
                    let tail: Scalar = w[k - 1..].iter().cloned().sum();
                    acc += &(sign(r - k + 1) * tail * inv(&(fact(r - k + 1) * fact(k - 1))));
                }
                acc * inv(&prod_to(r))
            } else {
                Scalar::zero()
            };
            ensure!(f(&w) == f_closed, "F on {w:?}");
            let d_closed = match zeros.as_slice() {
                [] => {
                    let mut acc = Scalar::zero();
                    for k in 1..=r {
                        acc += &(sign(r - k) * w[k - 1].clone() * inv(&(fact(k - 1) * fact(r - k))));
                    }
                    acc * inv(&prod_to(r))
                }
                [z] => {
                    let i = z + 1;
                    let head = prod_to(i - 1);
                    let tail: Scalar = w[i..].iter().cloned().product();
                    sign(r - i) * inv(&(fact(i - 1) * head * fact(r - i) * tail))
                }
                _ => Scalar::zero(),
            };
            ensure!(d(&w) == d_closed, "D on {w:?}");
            let sam = f(&w) + d(&w);
            ensure!(sam == sam_closed(&w), "F + D differs from the closed form on {w:?}");
            ensure!(sam == sam_value(&w) && sam == library(&w), "library Sam differs on {w:?}");
        }
    }
    ensure!(counts[1] > 0 && counts[2] > 0, "zero patterns not exercised");
    Ok(format!("nonzero {} / one zero {} / several zeros {}", counts[0], counts[1], counts[2]))
}

fn criterion_5() -> Outcome {
    let letters = vec![Scalar::zero(), Scalar::one(), Scalar::from(-1), Scalar::from(2)];
    let a = Alphabet::scalar(letters.clone());
    let sam: M = Rc::new(sam_closed);
    let mut iterates = vec![sam.clone()];
    for _ in 1..4 {
        let next = compose(&sam, iterates.last().unwrap());
        iterates.push(next);
    }
    let library: Vec<M> = (1..=4).map(|r| lib(sam_iterated(r, &a).unwrap())).collect();
    let all = words(&letters, 4);
    for w in all.iter().filter(|w| !w.is_empty()) {
        let l = w.len();
        for qq in 1..=4 {
            ensure!(iterates[qq - 1](w) == library[qq - 1](w), "library Sam_{qq} differs on {w:?}");
        }
        for r in l..=4 {
            for qq in r..=4 {
                ensure!(iterates[qq - 1](w) == iterates[r - 1](w), "Sam_{qq} != Sam_{r} on {w:?}");
            }
        }
    }
    let its = iterates.clone();
    let tram: M = Rc::new(move |w| if w.is_empty() { Scalar::zero() } else { its[w.len() - 1](w) });
    let library_tram = lib(tram_mould(&a, 4).unwrap());
    let mut support = 0;
    for w in &all {
        ensure!(tram(w) == library_tram(w), "library Tram differs on {w:?}");
        if !w.iter().cloned().sum::<Scalar>().is_zero() {
            ensure!(tram(w).is_zero(), "Tram nonzero on nonresonant {w:?}");
        } else if !tram(w).is_zero() {
            support += 1;
        }
    }
    let left = compose(&tram, &sam);
    let right = compose(&sam, &tram);
    for w in words(&letters, 3) {
        ensure!(left(&w) == tram(&w), "Tram∘Sam != Tram on {w:?}");
        ensure!(right(&w) == tram(&w), "Sam∘Tram != Tram on {w:?}");
    }
    Ok(format!("{} words, Tram supported on {support}", all.len()))
}

fn criterion_6() -> Outcome {
    let lambda = [Scalar::one(), Scalar::from(2)];
    let x = quadratic_field(lambda.clone(), [q(1, 1), q(2, 1), q(3, 1)], [q(-1, 1), q(1, 2), q(0, 1)]);
    let field = prepare(&x).map_err(|e| e.to_string())?;
    let t = trimmed_form(&field).map_err(|e| e.to_string())?;

    let mut cur = x.clone();
    let mut stages = Vec::new();
    loop {
        let mut v = vec![TruncatedPolynomial::zero(2, 5); 2];
        for (n, b) in split(&cur) {
            let om = dot(&lambda, &n);
            if !om.is_zero() {
                v = add(&v, &scale(&b, &inv(&om)));
            }
        }
        if is_zero(&v) {
            break;
        }
        cur = exp_ad(&v, &cur);
        stages.push(cur.clone());
        ensure!(stages.len() <= 6, "direct stages do not terminate");
    }
    ensure!(t.stages.len() == stages.len(), "{} mould stages vs {} direct", t.stages.len(), stages.len());
    for (k, (a, b)) in t.stages.iter().zip(&stages).enumerate() {
        ensure!(a.field.total().components() == *b, "stage {} differs", k + 1);
    }
    ensure!(t.field.total().components() == cur, "X_tram differs from the direct stages");
    let lin = lin_field(&lambda, 5);
    ensure!(is_zero(&bracket(&cur, &lin)), "[X_tram, X_lin] != 0");
    ensure!(t.field.total().bracket(field.lin()).unwrap().is_zero(), "library bracket nonzero");
    let letters: Vec<String> = t.field.alphabet().letters().iter().map(Grade::to_string).collect();
    Ok(format!("{} stages, trimmed letters {}", stages.len(), letters.join(" ")))
}

// Hamiltonians in (x₁…x_ν, y₁…y_ν) with ẋ = −H_y, ẏ = H_x.

fn poisson(f: &TruncatedPolynomial, g: &TruncatedPolynomial) -> TruncatedPolynomial {
    let nu = f.dim() / 2;
    let mut out = TruncatedPolynomial::zero(f.dim(), f.cutoff());
    for i in 0..nu {
        out.add_scaled(&f.partial(i).unwrap().mul(&g.partial(nu + i).unwrap()).unwrap(), &Scalar::one());
        out.add_scaled(&f.partial(nu + i).unwrap().mul(&g.partial(i).unwrap()).unwrap(), &Scalar::from(-1));
    }
    out
}

fn ham_field(h: &TruncatedPolynomial, cutoff: u32) -> Field {
    let nu = h.dim() / 2;
    let mut out = Vec::new();
    for i in 0..nu {
        out.push(h.partial(nu + i).unwrap().scale(&Scalar::from(-1)).with_cutoff(cutoff));
    }
    for i in 0..nu {
        out.push(h.partial(i).unwrap().with_cutoff(cutoff));
    }
    out
}

fn h_omega(lambda: &[Scalar], m: &Monomial) -> Scalar {
    let nu = lambda.len();
    let e = m.exps();
    (0..nu).map(|j| &lambda[j] * &Scalar::from(e[nu + j] as i64 - e[j] as i64)).sum()
}

fn random_hamiltonian(rng: &mut ChaCha8Rng, lambda: &[Scalar], cutoff: u32, terms: usize) -> TruncatedPolynomial {
    let nu = lambda.len();
    let mut h = TruncatedPolynomial::zero(2 * nu, cutoff + 1);
    for (i, l) in lambda.iter().enumerate() {
        let mut e = vec![0; 2 * nu];
        e[i] = 1;
        e[nu + i] = 1;
        h.add_term(Monomial::new(e), l.clone());
    }
    let pool: Vec<Monomial> = basis(2 * nu, 4, 3);
    for _ in 0..terms {
        let m = pool[rng.gen_range(0..pool.len())].clone();
        h.add_term(m, q(rng.gen_range(-4..=4), rng.gen_range(1..=3)));
    }
    h
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lambda = [Scalar::one(), Scalar::from(-1)];
    let (nu, cutoff) = (2, 6);
    let h0 = random_hamiltonian(&mut rng, &lambda, cutoff, 10);
    let ch = CartesianHamiltonian::from_polynomial(nu, cutoff, &h0).map_err(|e| e.to_string())?;
    let r = hamiltonian::canonical_trimmed_form(&ch).map_err(|e| e.to_string())?;

    let mut h = h0.clone();
    let mut k = 0;
    loop {
        let mut chi = TruncatedPolynomial::zero(2 * nu, cutoff + 1);
        for (m, c) in h.terms().filter(|(m, _)| m.degree() >= 3) {
            let om = h_omega(&lambda, m);
            if !om.is_zero() {
                chi.add_term(m.clone(), c * &inv(&om));
            }
        }
        if chi.is_zero() {
            break;
        }
        let mut next = h.clone();
        let mut term = h.clone();
        for j in 1.. {
            term = poisson(&chi, &term).scale(&q(1, j));
            if term.is_zero() {
                break;
            }
            next = next.add(&term).unwrap();
        }
        h = next;
        ensure!(k < r.stages.len(), "library stopped after {} stages", r.stages.len());
        let stage = &r.stages[k];
        let expected = CartesianHamiltonian::from_polynomial(nu, cutoff, &h).unwrap();
        ensure!(stage.hamiltonian == expected, "stage {} Hamiltonian differs", k + 1);
        ensure!(stage.field.total().components() == ham_field(&h, cutoff), "stage {} field is not X_H", k + 1);
        let recovered = hamiltonian::is_hamiltonian(&stage.field.total()).unwrap();
        ensure!(recovered.as_ref() == Some(&expected), "stage {} field not recovered as Hamiltonian", k + 1);
        ensure!(stage.generator.components() == ham_field(&chi, cutoff), "stage {} generator is not X_chi", k + 1);
        let chi_h = CartesianHamiltonian::from_polynomial(nu, cutoff, &chi).unwrap();
        ensure!(stage.generator_hamiltonian == chi_h, "stage {} chi differs", k + 1);
        ensure!(
            hamiltonian::is_hamiltonian(&stage.generator).unwrap() == Some(chi_h),
            "stage {} generator not recovered",
            k + 1
        );
        k += 1;
    }
    ensure!(k == r.stages.len(), "{} direct stages vs {} library stages", k, r.stages.len());
    let final_h = CartesianHamiltonian::from_polynomial(nu, cutoff, &h).unwrap();
    ensure!(r.hamiltonian == final_h, "trimmed Hamiltonian differs");
    let lin = ham_field(&TruncatedPolynomial::from_terms(4, cutoff + 1, h0.terms().filter(|(m, _)| m.degree() == 2).map(|(m, c)| (m.clone(), c.clone()))), cutoff);
    ensure!(is_zero(&bracket(&ham_field(&h, cutoff), &lin)), "final field does not commute with X_lin");
    ensure!(r.trimmed.total().bracket(r.trimmed.lin()).unwrap().is_zero(), "library trimmed field does not commute");
    Ok(format!("{} terms, {k} stages, {} resonant terms left", ch.terms().len(), r.hamiltonian.terms().len()))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cutoff = 6;
    for pair in 0..20 {
        let lambda = [random_scalar(&mut rng, false), random_scalar(&mut rng, false)];
        let p1 = random_hamiltonian(&mut rng, &lambda, cutoff, 5);
        let p2 = random_hamiltonian(&mut rng, &lambda, cutoff, 5);
        let bracket_h = poisson(&p1, &p2);
        ensure!(
            ham_field(&bracket_h, cutoff) == bracket(&ham_field(&p1, cutoff), &ham_field(&p2, cutoff)),
            "pair {pair}: X_{{H1,H2}} != [X_H1, X_H2]"
        );
        let h1 = CartesianHamiltonian::from_polynomial(2, cutoff, &p1).unwrap();
        let h2 = CartesianHamiltonian::from_polynomial(2, cutoff, &p2).unwrap();
        let lib_bracket = hamiltonian::poisson_bracket(&h1, &h2).unwrap();
        ensure!(lib_bracket.to_polynomial() == bracket_h, "pair {pair}: library bracket differs");
        let lhs = hamiltonian::hamiltonian_field(&lib_bracket).unwrap();
        let rhs = hamiltonian::hamiltonian_field(&h1).unwrap().bracket(&hamiltonian::hamiltonian_field(&h2).unwrap()).unwrap();
        ensure!(lhs == rhs, "pair {pair}: library fields disagree");
        let lin = ham_field(&p1.truncate(2), cutoff);
        for (a, ha) in h1.omega_components() {
            let pa = ha.to_polynomial();
            let xa = ham_field(&pa, cutoff);
            ensure!(bracket(&lin, &xa) == scale(&xa, &a), "pair {pair}: eigenrelation fails for {a}");
            for (b, hb) in h2.omega_components() {
                let c = poisson(&pa, &hb.to_polynomial());
                for (m, _) in c.terms() {
                    ensure!(h_omega(&lambda, m) == &a + &b, "pair {pair}: bracket of {a} and {b} has a term of weight {}", h_omega(&lambda, m));
                }
            }
        }
    }
    Ok("20 pairs".into())
}

// Action-angle functions for ν = 1: keys (ε-order, frequency, p-degree).

type Aa = BTreeMap<(u32, i64, u32), Scalar>;

const MAX_ORDER: u32 = 3;

fn aa_add(f: &mut Aa, key: (u32, i64, u32), c: Scalar) {
    if key.0 > MAX_ORDER || c.is_zero() {
        return;
    }
    let e = f.entry(key).or_default();
    *e += &c;
    if e.is_zero() {
        f.remove(&key);
    }
}

fn aa_dq(f: &Aa) -> Aa {
    let mut out = Aa::new();
    for (&(s, k, e), c) in f {
        aa_add(&mut out, (s, k, e), c * &(Scalar::i() * Scalar::from(k)));
    }
    out
}

fn aa_dp(f: &Aa) -> Aa {
    let mut out = Aa::new();
    for (&(s, k, e), c) in f {
        if e > 0 {
            aa_add(&mut out, (s, k, e - 1), c * &Scalar::from(e as i64));
        }
    }
    out
}

fn aa_mul(f: &Aa, g: &Aa) -> Aa {
    let mut out = Aa::new();
    for (&(s1, k1, e1), c1) in f {
        for (&(s2, k2, e2), c2) in g {
            aa_add(&mut out, (s1 + s2, k1 + k2, e1 + e2), c1 * c2);
        }
    }
    out
}

/// `{f, g} = f_q g_p − f_p g_q`, so that `X_H g = {g, H}`.
fn aa_poisson(f: &Aa, g: &Aa) -> Aa {
    let mut out = aa_mul(&aa_dq(f), &aa_dp(g));
    for (key, c) in aa_mul(&aa_dp(f), &aa_dq(g)) {
        aa_add(&mut out, key, -c);
    }
    out
}

fn to_eps(f: &Aa) -> EpsFunction {
    let mut out = EpsFunction::zero(1, MAX_ORDER);
    for (&(s, k, e), c) in f {
        out.add_term((s, vec![k], vec![e]), c.clone());
    }
    out
}

/// `ṗ = −H_q`, `q̇ = H_p`.
fn aa_field(h: &Aa) -> EpsDerivation {
    let mut d = EpsDerivation::zero(1, MAX_ORDER);
    d.a[0] = to_eps(&aa_dq(h)).scale(&Scalar::from(-1));
    d.b[0] = to_eps(&aa_dp(h));
    d
}

fn criterion_9() -> Outcome {
    let omega = [Scalar::one()];
    let mut h = Aa::new();
    aa_add(&mut h, (0, 0, 1), Scalar::one());
    aa_add(&mut h, (1, 0, 2), q(1, 2));
    aa_add(&mut h, (1, 1, 0), q(1, 2));
    aa_add(&mut h, (1, -1, 0), q(1, 2));
    let f = BTreeMap::from([(vec![1], q(1, 2)), (vec![-1], q(1, 2))]);
    let x = kolmogorov::field_from_hamiltonian(&omega, &f, MAX_ORDER, 1).map_err(|e| e.to_string())?;
    ensure!(x == aa_field(&h), "initial field is not X_H");
    let result = kolmogorov::kolmogorov_normal_form(&x, &omega, 2).map_err(|e| e.to_string())?;
    ensure!(result.stages.len() == 2, "expected two stages");
    let xc = EpsDerivation::constant_flow(&omega, MAX_ORDER);
    let mut cur = x.clone();
    for r in 0..2u32 {
        // [X_c, B_k] = i k·ω B_k on the letters of this step.
        for (k, b) in kolmogorov::frequency_split(&cur, r).map_err(|e| e.to_string())? {
            let w = Scalar::i() * Scalar::from(k[0]);
            ensure!(xc.bracket(&b) == b.scale(&w), "eigenrelation fails for k={k:?} at r={r}");
        }
        let mut chi = Aa::new();
        for (&(s, k, e), c) in &h {
            if k != 0 && s > r {
                aa_add(&mut chi, (s, k, e), c * &inv(&(Scalar::i() * Scalar::from(k))));
            }
        }
        let mut next = h.clone();
        let mut term = h.clone();
        for j in 1.. {
            let mut t = Aa::new();
            for (key, c) in aa_poisson(&term, &chi) {
                aa_add(&mut t, key, c * q(1, j));
            }
            if t.is_empty() {
                break;
            }
            term = t;
            for (key, c) in &term {
                aa_add(&mut next, *key, c.clone());
            }
        }
        let stage = &result.stages[r as usize];
        ensure!(stage.field == aa_field(&next), "stage {} field differs from the Lie series", r + 1);
        ensure!(stage.generator == aa_field(&chi), "stage {} generator is not X_chi", r + 1);
        ensure!(stage.generator_hamiltonian == to_eps(&chi), "stage {} chi differs", r + 1);
        ensure!(kolmogorov::hamiltonian_field_aa(&stage.generator_hamiltonian) == stage.generator, "stage {} generator not Hamiltonian", r + 1);
        // Class: no q-dependence up to order r + 1.
        ensure!(next.keys().all(|&(s, k, _)| k == 0 || s >= r + 2), "stage {} output has q-dependence at order ≤ {}", r + 1, r + 1);
        ensure!(stage.field.check_class(r + 1).is_ok(), "library class check fails at stage {}", r + 1);
        // Discarded terms: H' − ω·p − (k = 0 part of H at orders ≥ 1).
        let mut discarded = next.clone();
        for (&(s, k, e), c) in &h {
            if k == 0 && (s >= 1 || e == 1) {
                aa_add(&mut discarded, (s, k, e), -c.clone());
            }
        }
        let low = discarded.keys().map(|key| key.0).min();
        ensure!(low.is_none_or(|o| o >= r + 2), "discarded terms at order {low:?} < {}", r + 2);
        ensure!(stage.discarded_order.is_none_or(|o| o >= r + 2), "library discarded order too low");
        h = next;
        cur = stage.field.clone();
    }
    Ok("classes D1_1, D1_2".into())
}

fn fixture(name: &str) -> &'static str {
    match name {
        "resonant" => include_str!("../../cli/tests/data/quadratic_resonant.field"),
        "quadratic" => include_str!("../../cli/tests/data/quadratic.field"),
        "ham" => include_str!("../../cli/tests/data/two_dof.ham"),
        "pendulum" => include_str!("../../cli/tests/data/pendulum.kol"),
        "generic" => include_str!("../../cli/tests/data/generic.alphabet"),
        "resonant-alphabet" => include_str!("../../cli/tests/data/resonant.alphabet"),
        _ => unreachable!(),
    }
}

fn rewrite(kind: &str, body: &str) -> Result<String, String> {
    let e = |x: &dyn std::fmt::Display| x.to_string();
    Ok(match kind {
        "field" => io::write_field(&io::parse_field(body, None).map_err(|x| e(&x))?),
        "hamiltonian" => io::write_hamiltonian(&io::parse_hamiltonian(body, None).map_err(|x| e(&x))?),
        "kolmogorov" => io::write_kolmogorov(&io::parse_kolmogorov(body, None).map_err(|x| e(&x))?),
        "eps-function" => io::write_eps_function(&io::parse_eps_function(body).map_err(|x| e(&x))?),
        "eps-derivation" => io::write_eps_derivation(&io::parse_eps_derivation(body).map_err(|x| e(&x))?),
        "alphabet" => io::write_alphabet(&io::parse_alphabet(body).map_err(|x| e(&x))?),
        "mould-table" => MouldTable::parse(body).map_err(|x| e(&x))?.to_text(),
        other => return Err(format!("unknown object kind {other}")),
    })
}

fn criterion_10() -> Outcome {
    let jobs: Vec<(Command, &str, Option<usize>, ExitStatus)> = vec![
        (Command::Prepare, "resonant", None, ExitStatus::Ok),
        (Command::Linearize, "quadratic", None, ExitStatus::Ok),
        (Command::Linearize, "resonant", None, ExitStatus::Resonance),
        (Command::Trim, "resonant", None, ExitStatus::Ok),
        (Command::HamTrim, "ham", None, ExitStatus::Ok),
        (Command::Kolmogorov, "pendulum", None, ExitStatus::Ok),
        (Command::MouldTable("sam".into()), "generic", Some(3), ExitStatus::Ok),
        (Command::MouldTable("tram".into()), "resonant-alphabet", Some(4), ExitStatus::Ok),
        (Command::Certify("residual".into()), "resonant-alphabet", Some(4), ExitStatus::Ok),
        (Command::Certify("prenormal".into()), "resonant", None, ExitStatus::Ok),
    ];
    let mut objects = 0;
    for (command, input, length, status) in jobs {
        let spec = JobSpec { command: command.clone(), input: fixture(input).to_string(), cutoff: None, length, eps_order: None };
        let first = run_job(&spec);
        let second = run_job(&spec);
        ensure!(first.status == status, "`{command}` on {input}: status {:?}", first.status);
        let text = first.report.to_text();
        ensure!(text == second.report.to_text(), "`{command}` on {input} is not deterministic");
        let back = Report::parse(&text).map_err(|e| e.to_string())?;
        ensure!(back == first.report, "`{command}` report does not re-parse to itself");
        ensure!(back.to_text() == text, "`{command}` report does not re-print identically");
        for (kind, name, body) in &first.report.objects {
            ensure!(rewrite(kind, body)? == *body, "`{command}` object {kind} {name} does not round-trip");
            objects += 1;
        }
    }
    // Re-parsed objects equal the ones computed in memory.
    let field = io::parse_field(fixture("resonant"), None).unwrap();
    let t = trimmed_form(&field).unwrap();
    let out = run_job(&JobSpec {
        command: Command::Trim,
        input: fixture("resonant").into(),
        cutoff: None,
        length: None,
        eps_order: None,
    });
    let body = out.report.find_object("field", "trimmed").ok_or("no trimmed field")?;
    ensure!(io::parse_field(body, None).unwrap() == t.field, "trimmed field re-parses to a different object");
    Ok(format!("{objects} embedded objects"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("shuffle and symmetry suite", criterion_1),
        ("linearization oracle", criterion_2),
        ("conjugation residual", criterion_3),
        ("Sam from C, D, E, F", criterion_4),
        ("stationarity and trimming", criterion_5),
        ("trimmed form equals direct stages", criterion_6),
        ("Hamiltonian preservation", criterion_7),
        ("Poisson consistency", criterion_8),
        ("Kolmogorov steps", criterion_9),
        ("report determinism and round trip", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2}: pass  {name} ({detail}; {secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2}: FAIL  {name}: {why} ({secs:.2}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
