//! Text formats for fields, Hamiltonians, Kolmogorov inputs, ε-graded
//! derivations, alphabets, and reports.
//!
//! Every format is line based: a keyword, then whitespace-separated fields.
//! Parenthesized groups such as `(2 0 | 1 0)` count as one field. `#` starts
//! a comment. Writers emit canonical orderings, so text produced here
//! re-parses to an equal object and prints back identically.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::hamiltonian::{CartesianHamiltonian, Exponents, HamiltonianError};
use crate::kolmogorov::{EpsDerivation, EpsFunction};
use crate::mould::MouldError;
use crate::operator::{prepare, OperatorError, PreparedField};
use crate::poly::{Monomial, TruncatedPolynomial};
use crate::scalar::Scalar;
use crate::word::{Alphabet, Grade, GradeKind, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {reason}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IoError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Mould(#[from] MouldError),
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    column: usize,
}

#[derive(Debug, Clone)]
struct Line {
    number: usize,
    tokens: Vec<Token>,
}

impl Line {
    fn err(&self, col: usize, reason: impl Into<String>) -> ParseError {
        ParseError { line: self.number, column: col, reason: reason.into() }
    }

    fn keyword(&self) -> &str {
        &self.tokens[0].text
    }

    fn args(&self) -> &[Token] {
        &self.tokens[1..]
    }

    fn expect_args(&self, n: usize) -> Result<&[Token], ParseError> {
        if self.args().len() != n {
            let col = self.tokens.last().map_or(1, |t| t.column + t.text.len());
            return Err(self.err(col, format!("`{}` takes {n} value(s), found {}", self.keyword(), self.args().len())));
        }
        Ok(self.args())
    }

    fn parse<T: std::str::FromStr>(&self, t: &Token, what: &str) -> Result<T, ParseError> {
        t.text.parse().map_err(|_| self.err(t.column, format!("expected {what}, found `{}`", t.text)))
    }
}

fn tokenize(text: &str) -> Result<Vec<Line>, ParseError> {
    let mut lines = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let chars: Vec<(usize, char)> = body.char_indices().collect();
        let mut tokens = Vec::new();
        let mut pos = 0;
        while pos < chars.len() {
            let (byte, c) = chars[pos];
            if c.is_whitespace() {
                pos += 1;
                continue;
            }
            let column = body[..byte].chars().count() + 1;
            if c == '(' {
                while pos < chars.len() && chars[pos].1 != ')' {
                    pos += 1;
                }
                if pos == chars.len() {
                    return Err(ParseError { line: k + 1, column, reason: "unclosed `(`".into() });
                }
                pos += 1;
            } else {
                while pos < chars.len() && !chars[pos].1.is_whitespace() {
                    pos += 1;
                }
            }
            let end = chars.get(pos).map_or(body.len(), |&(b, _)| b);
            tokens.push(Token { text: body[byte..end].to_string(), column });
        }
        if !tokens.is_empty() {
            lines.push(Line { number: k + 1, tokens });
        }
    }
    Ok(lines)
}

/// Contents of `( … )` split on whitespace, commas and `|`.
fn group(line: &Line, t: &Token) -> Result<Vec<Vec<String>>, ParseError> {
    let inner = t
        .text
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| line.err(t.column, format!("expected a parenthesized group, found `{}`", t.text)))?;
    Ok(inner
        .split('|')
        .map(|part| part.split(|c: char| c.is_whitespace() || c == ',').filter(|s| !s.is_empty()).map(String::from).collect())
        .collect())
}

fn numbers<T: std::str::FromStr>(line: &Line, t: &Token, parts: &[String], len: usize) -> Result<Vec<T>, ParseError> {
    if parts.len() != len {
        return Err(line.err(t.column, format!("expected {len} entries in `{}`", t.text)));
    }
    parts
        .iter()
        .map(|p| p.parse().map_err(|_| line.err(t.column, format!("bad entry `{p}` in `{}`", t.text))))
        .collect()
}

fn header<T: std::str::FromStr>(lines: &[Line], key: &str, what: &str) -> Result<T, ParseError> {
    let line = lines
        .iter()
        .find(|l| l.keyword() == key)
        .ok_or(ParseError { line: 1, column: 1, reason: format!("missing `{key}` line") })?;
    let args = line.expect_args(1)?;
    line.parse(&args[0], what)
}

fn scalars(line: &Line, n: usize) -> Result<Vec<Scalar>, ParseError> {
    line.expect_args(n)?.iter().map(|t| line.parse(t, "a scalar")).collect()
}

fn find<'a>(lines: &'a [Line], key: &str) -> Result<&'a Line, ParseError> {
    lines
        .iter()
        .find(|l| l.keyword() == key)
        .ok_or(ParseError { line: 1, column: 1, reason: format!("missing `{key}` line") })
}

fn check_keywords(lines: &[Line], allowed: &[&str]) -> Result<(), ParseError> {
    for l in lines {
        if !allowed.contains(&l.keyword()) {
            return Err(l.err(l.tokens[0].column, format!("unknown keyword `{}`", l.keyword())));
        }
    }
    Ok(())
}

fn join<T: fmt::Display>(v: &[T], sep: &str) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(sep)
}

/// Field file:
///
/// ```text
/// dim 2
/// cutoff 5
/// lambda 1 5/7
/// term <coeff> <e1> … <e_dim> <axis>
/// ```
///
/// `term c e… i` adds `c·x^e` to the `i`-th component (1-based).
pub fn parse_field_components(text: &str, cutoff_override: Option<u32>) -> Result<Vec<TruncatedPolynomial>, ParseError> {
    let lines = tokenize(text)?;
    check_keywords(&lines, &["dim", "cutoff", "lambda", "term"])?;
    let dim: usize = header(&lines, "dim", "a dimension")?;
    let cutoff: u32 = match cutoff_override {
        Some(c) => c,
        None => header(&lines, "cutoff", "a cutoff")?,
    };
    let lambda = scalars(find(&lines, "lambda")?, dim)?;
    let mut comps: Vec<TruncatedPolynomial> = (0..dim)
        .map(|i| TruncatedPolynomial::term(dim, cutoff, Monomial::var(dim, i), lambda[i].clone()))
        .collect();
    for line in lines.iter().filter(|l| l.keyword() == "term") {
        let args = line.expect_args(dim + 2)?;
        let c: Scalar = line.parse(&args[0], "a scalar")?;
        let exps = args[1..=dim].iter().map(|t| line.parse(t, "an exponent")).collect::<Result<Vec<u32>, _>>()?;
        let axis: usize = line.parse(&args[dim + 1], "an axis")?;
        if axis == 0 || axis > dim {
            return Err(line.err(args[dim + 1].column, format!("axis must be between 1 and {dim}")));
        }
        comps[axis - 1].add_term(Monomial::new(exps), c);
    }
    Ok(comps)
}

pub fn parse_field(text: &str, cutoff_override: Option<u32>) -> Result<PreparedField, IoError> {
    Ok(prepare(&parse_field_components(text, cutoff_override)?)?)
}

/// Writes a field with a diagonal linear part in the field file format.
pub fn write_field(f: &PreparedField) -> String {
    let mut s = format!("dim {}\ncutoff {}\nlambda {}\n", f.dim(), f.cutoff(), join(f.weights(), " "));
    for (i, comp) in f.nonlinear().components().iter().enumerate() {
        for (m, c) in comp.terms() {
            s.push_str(&format!("term {c} {} {}\n", join(m.exps(), " "), i + 1));
        }
    }
    s
}

/// Hamiltonian file:
///
/// ```text
/// dof 2
/// cutoff 6
/// lambda 1 -1
/// term (n1 n2 | m1 m2) <coeff>
/// ```
pub fn parse_hamiltonian(text: &str, cutoff_override: Option<u32>) -> Result<CartesianHamiltonian, IoError> {
    let lines = tokenize(text)?;
    check_keywords(&lines, &["dof", "cutoff", "lambda", "term"])?;
    let dof: usize = header(&lines, "dof", "a number of degrees of freedom")?;
    let cutoff: u32 = match cutoff_override {
        Some(c) => c,
        None => header(&lines, "cutoff", "a cutoff")?,
    };
    let lambda = scalars(find(&lines, "lambda")?, dof)?;
    let mut terms: Vec<(Exponents, Scalar)> = Vec::new();
    for line in lines.iter().filter(|l| l.keyword() == "term") {
        let args = line.expect_args(2)?;
        let g = group(line, &args[0])?;
        if g.len() != 2 {
            return Err(line.err(args[0].column, "expected `(n… | m…)`").into());
        }
        let n = numbers(line, &args[0], &g[0], dof)?;
        let m = numbers(line, &args[0], &g[1], dof)?;
        terms.push(((n, m), line.parse(&args[1], "a scalar")?));
    }
    Ok(CartesianHamiltonian::new(dof, cutoff, lambda, terms)?)
}

pub fn write_hamiltonian(h: &CartesianHamiltonian) -> String {
    let mut s = format!("dof {}\ncutoff {}\nlambda {}\n", h.dof(), h.cutoff(), join(h.lambda(), " "));
    for ((n, m), c) in h.terms() {
        s.push_str(&format!("term ({} | {}) {c}\n", join(n, " "), join(m, " ")));
    }
    s
}

/// Input of the Kolmogorov pipeline:
/// `H = ω·p + ε^κ ½|p|² + ε Σ f_k e^{ik·q}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KolmogorovInput {
    pub omega: Vec<Scalar>,
    pub f: BTreeMap<Vec<i64>, Scalar>,
    pub max_order: u32,
    pub target_order: u32,
    pub kinetic_order: u32,
}

/// ```text
/// nu 1
/// omega 1
/// max_order 3
/// target_order 2
/// kinetic_order 1     # optional, default 1
/// f (1) 1/2
/// ```
pub fn parse_kolmogorov(text: &str, eps_override: Option<u32>) -> Result<KolmogorovInput, ParseError> {
    let lines = tokenize(text)?;
    check_keywords(&lines, &["nu", "omega", "max_order", "target_order", "kinetic_order", "f"])?;
    let nu: usize = header(&lines, "nu", "a number of angles")?;
    let omega = scalars(find(&lines, "omega")?, nu)?;
    let max_order: u32 = match eps_override {
        Some(e) => e,
        None => header(&lines, "max_order", "an ε-order")?,
    };
    let target_order: u32 = header(&lines, "target_order", "an ε-order")?;
    let kinetic_order = if lines.iter().any(|l| l.keyword() == "kinetic_order") {
        header(&lines, "kinetic_order", "an ε-order")?
    } else {
        1
    };
    let mut f = BTreeMap::new();
    for line in lines.iter().filter(|l| l.keyword() == "f") {
        let args = line.expect_args(2)?;
        let g = group(line, &args[0])?;
        if g.len() != 1 {
            return Err(line.err(args[0].column, "expected `(k…)`"));
        }
        let k: Vec<i64> = numbers(line, &args[0], &g[0], nu)?;
        let c: Scalar = line.parse(&args[1], "a scalar")?;
        let e: &mut Scalar = f.entry(k.clone()).or_default();
        *e += &c;
        if e.is_zero() {
            f.remove(&k);
        }
    }
    Ok(KolmogorovInput { omega, f, max_order, target_order, kinetic_order })
}

pub fn write_kolmogorov(k: &KolmogorovInput) -> String {
    let mut s = format!(
        "nu {}\nomega {}\nmax_order {}\ntarget_order {}\nkinetic_order {}\n",
        k.omega.len(),
        join(&k.omega, " "),
        k.max_order,
        k.target_order,
        k.kinetic_order
    );
    for (freq, c) in &k.f {
        s.push_str(&format!("f ({}) {c}\n", join(freq, " ")));
    }
    s
}

fn eps_term_text((s, k, e): &crate::kolmogorov::Key, c: &Scalar) -> String {
    format!("{s} ({}) ({}) {c}", join(k, " "), join(e, " "))
}

fn parse_eps_term(line: &Line, args: &[Token], nu: usize) -> Result<(crate::kolmogorov::Key, Scalar), ParseError> {
    let s: u32 = line.parse(&args[0], "an ε-order")?;
    let gk = group(line, &args[1])?;
    let ge = group(line, &args[2])?;
    let k = numbers(line, &args[1], &gk[0], nu)?;
    let e = numbers(line, &args[2], &ge[0], nu)?;
    Ok(((s, k, e), line.parse(&args[3], "a scalar")?))
}

/// ```text
/// nu 1
/// max_order 3
/// term <s> (k…) (e…) <coeff>      # c ε^s pᵉ e^{ik·q}
/// ```
pub fn write_eps_function(f: &EpsFunction) -> String {
    let mut s = format!("nu {}\nmax_order {}\n", f.nu(), f.max_order());
    for (key, c) in f.terms() {
        s.push_str(&format!("term {}\n", eps_term_text(key, c)));
    }
    s
}

pub fn parse_eps_function(text: &str) -> Result<EpsFunction, ParseError> {
    let lines = tokenize(text)?;
    check_keywords(&lines, &["nu", "max_order", "term"])?;
    let nu: usize = header(&lines, "nu", "a number of angles")?;
    let max: u32 = header(&lines, "max_order", "an ε-order")?;
    let mut f = EpsFunction::zero(nu, max);
    for line in lines.iter().filter(|l| l.keyword() == "term") {
        let (key, c) = parse_eps_term(line, line.expect_args(4)?, nu)?;
        f.add_term(key, c);
    }
    Ok(f)
}

/// ```text
/// nu 1
/// max_order 3
/// dp <j> <s> (k…) (e…) <coeff>    # term of the ∂_{p_j} coefficient
/// dq <j> <s> (k…) (e…) <coeff>
/// ```
pub fn write_eps_derivation(d: &EpsDerivation) -> String {
    let mut s = format!("nu {}\nmax_order {}\n", d.nu(), d.max_order());
    for (tag, comps) in [("dp", &d.a), ("dq", &d.b)] {
        for (j, f) in comps.iter().enumerate() {
            for (key, c) in f.terms() {
                s.push_str(&format!("{tag} {} {}\n", j + 1, eps_term_text(key, c)));
            }
        }
    }
    s
}

pub fn parse_eps_derivation(text: &str) -> Result<EpsDerivation, ParseError> {
    let lines = tokenize(text)?;
    check_keywords(&lines, &["nu", "max_order", "dp", "dq"])?;
    let nu: usize = header(&lines, "nu", "a number of angles")?;
    let max: u32 = header(&lines, "max_order", "an ε-order")?;
    let mut d = EpsDerivation::zero(nu, max);
    for line in lines.iter().filter(|l| l.keyword() == "dp" || l.keyword() == "dq") {
        let args = line.expect_args(5)?;
        let j: usize = line.parse(&args[0], "an index")?;
        if j == 0 || j > nu {
            return Err(line.err(args[0].column, format!("index must be between 1 and {nu}")));
        }
        let (key, c) = parse_eps_term(line, &args[1..], nu)?;
        let target = if line.keyword() == "dp" { &mut d.a[j - 1] } else { &mut d.b[j - 1] };
        target.add_term(key, c);
    }
    Ok(d)
}

/// ```text
/// kind multi 2          # or: kind scalar
/// spectrum 1 2          # multi only
/// letter (1,0)
/// ```
pub fn write_alphabet(a: &Alphabet) -> String {
    let mut s = match a.kind() {
        GradeKind::Multi(n) => format!("kind multi {n}\n"),
        GradeKind::Scalar => "kind scalar\n".to_string(),
    };
    if let Some(sp) = a.spectrum() {
        s.push_str(&format!("spectrum {}\n", join(sp, " ")));
    }
    for g in a.letters() {
        s.push_str(&format!("letter {g}\n"));
    }
    s
}

pub fn parse_alphabet(text: &str) -> Result<Alphabet, IoError> {
    let lines = tokenize(text)?;
    check_keywords(&lines, &["kind", "spectrum", "letter"])?;
    let kind_line = find(&lines, "kind")?;
    let kind = match kind_line.args() {
        [t] if t.text == "scalar" => GradeKind::Scalar,
        [t, n] if t.text == "multi" => GradeKind::Multi(kind_line.parse(n, "a dimension")?),
        _ => return Err(kind_line.err(kind_line.tokens[0].column, "expected `kind scalar` or `kind multi <n>`").into()),
    };
    let spectrum = match kind {
        GradeKind::Multi(n) => Some(scalars(find(&lines, "spectrum")?, n)?),
        GradeKind::Scalar => None,
    };
    let mut letters = Vec::new();
    for line in lines.iter().filter(|l| l.keyword() == "letter") {
        let args = line.expect_args(1)?;
        let g: Grade = line.parse(&args[0], "a letter")?;
        if g.kind() != kind {
            return Err(line.err(args[0].column, "letter does not match the alphabet kind").into());
        }
        letters.push(g);
    }
    Ok(Alphabet::new(kind, letters, spectrum)?)
}

/// Nonzero values of a mould on words up to `max_len`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MouldTable {
    pub max_len: usize,
    pub entries: Vec<(Word, Scalar)>,
}

impl MouldTable {
    pub fn to_text(&self) -> String {
        let mut s = format!("max_len {}\n", self.max_len);
        for (w, v) in &self.entries {
            s.push_str(&format!("{w} = {v}\n"));
        }
        s
    }

    pub fn parse(text: &str) -> Result<MouldTable, MouldError> {
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
        Ok(MouldTable { max_len, entries })
    }
}

/// A report: `key=value` lines, embedded objects in their input formats,
/// and free text.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    pub machine: Vec<(String, String)>,
    /// `(kind, name, body)`.
    pub objects: Vec<(String, String, String)>,
    pub human: String,
}

impl Report {
    pub fn set(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.machine.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.machine.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn object(&mut self, kind: &str, name: &str, body: String) {
        self.objects.push((kind.to_string(), name.to_string(), body));
    }

    pub fn find_object(&self, kind: &str, name: &str) -> Option<&str> {
        self.objects.iter().find(|(k, n, _)| k == kind && n == name).map(|(_, _, b)| b.as_str())
    }

    pub fn line(&mut self, text: impl AsRef<str>) {
        self.human.push_str(text.as_ref());
        self.human.push('\n');
    }

    pub fn to_text(&self) -> String {
        let mut s = String::from("## machine\n");
        for (k, v) in &self.machine {
            s.push_str(&format!("{k}={v}\n"));
        }
        for (kind, name, body) in &self.objects {
            s.push_str(&format!("## {kind} {name}\n{body}"));
            if !body.ends_with('\n') && !body.is_empty() {
                s.push('\n');
            }
        }
        s.push_str("## human\n");
        s.push_str(&self.human);
        s
    }

    pub fn parse(text: &str) -> Result<Report, ParseError> {
        let mut report = Report::default();
        let mut section: Option<(String, String)> = None;
        let mut body = String::new();
        let flush = |report: &mut Report, section: &Option<(String, String)>, body: &mut String| {
            match section {
                Some((k, n)) if k == "human" && n.is_empty() => report.human = std::mem::take(body),
                Some((k, n)) if k != "machine" => report.objects.push((k.clone(), n.clone(), std::mem::take(body))),
                _ => body.clear(),
            }
        };
        for (i, line) in text.lines().enumerate() {
            let in_human = matches!(&section, Some((k, _)) if k == "human");
            if let Some(h) = line.strip_prefix("## ").filter(|_| !in_human) {
                flush(&mut report, &section, &mut body);
                let (k, n) = h.split_once(' ').unwrap_or((h, ""));
                section = Some((k.to_string(), n.to_string()));
                continue;
            }
            match &section {
                Some((k, _)) if k == "machine" => {
                    let (key, value) = line
                        .split_once('=')
                        .ok_or(ParseError { line: i + 1, column: 1, reason: "expected key=value".into() })?;
                    report.machine.push((key.to_string(), value.to_string()));
                }
                Some(_) => {
                    body.push_str(line);
                    body.push('\n');
                }
                None => return Err(ParseError { line: i + 1, column: 1, reason: "text before the first section".into() }),
            }
        }
        flush(&mut report, &section, &mut body);
        Ok(report)
    }
}
