//! Jobs: one command on one input text, producing a deterministic report and
//! an exit status.

use std::fmt;
use std::str::FromStr;

use crate::hamiltonian::{self, canonical_trimmed_form, CartesianHamiltonian};
use crate::io::{self, KolmogorovInput, MouldTable, Report};
use crate::kolmogorov::{self, field_from_hamiltonian, kolmogorov_normal_form};
use crate::mould::{Mould, MouldError, SymmetryKind};
use crate::normal_form::{
    conjugation_residual, linearize, resonance_report, sam_iterated, sam_mould, stage_normalizer_mould,
    theta_mould, tram_mould, trimmed_form, unipotent_inverse, v_mould, NormalFormError,
};
use crate::operator::{GradedOperator, PreparedField};
use crate::word::{Alphabet, Grade};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Prepare,
    Linearize,
    Trim,
    HamTrim,
    Kolmogorov,
    MouldTable(String),
    Certify(String),
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Prepare => write!(f, "prepare"),
            Command::Linearize => write!(f, "linearize"),
            Command::Trim => write!(f, "trim"),
            Command::HamTrim => write!(f, "ham-trim"),
            Command::Kolmogorov => write!(f, "kolmogorov"),
            Command::MouldTable(n) => write!(f, "mould-table {n}"),
            Command::Certify(p) => write!(f, "certify {p}"),
        }
    }
}

/// Moulds available to `mould-table`: `theta`, `v`, `exp-v`, `sam`,
/// `sam-<r>` (the r-fold iterate) and `tram`.
pub const MOULD_NAMES: &[&str] = &["theta", "v", "exp-v", "sam", "sam-<r>", "tram"];

/// Properties available to `certify`.
pub const PROPERTIES: &[&str] = &[
    "sam-alternal",
    "theta-symmetral",
    "expv-symmetral",
    "residual",
    "stationarity",
    "tram-resonant",
    "tram-fixed-point",
    "linearization",
    "prenormal",
    "hamiltonian",
    "kolmogorov",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobSpec {
    pub command: Command,
    pub input: String,
    pub cutoff: Option<u32>,
    pub length: Option<usize>,
    pub eps_order: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Ok = 0,
    /// A pipeline step failed for a reason other than those below.
    Failure = 1,
    /// Malformed input or arguments.
    Usage = 2,
    Resonance = 3,
    /// A certification check came out false.
    Certification = 4,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }
}

#[derive(Debug, Clone)]
pub struct JobOutcome {
    pub report: Report,
    pub status: ExitStatus,
}

#[derive(Debug)]
struct JobError {
    status: ExitStatus,
    message: String,
    word: Option<String>,
}

impl JobError {
    fn usage(m: impl fmt::Display) -> Self {
        JobError { status: ExitStatus::Usage, message: m.to_string(), word: None }
    }

    fn cert(m: impl fmt::Display) -> Self {
        JobError { status: ExitStatus::Certification, message: m.to_string(), word: None }
    }
}

impl From<NormalFormError> for JobError {
    fn from(e: NormalFormError) -> Self {
        match &e {
            NormalFormError::Resonance(w) => {
                JobError { status: ExitStatus::Resonance, message: e.to_string(), word: Some(w.to_string()) }
            }
            NormalFormError::Mould(m) => m.clone().into(),
            NormalFormError::NotPrenormal => JobError::cert(&e),
            _ => JobError { status: ExitStatus::Failure, message: e.to_string(), word: None },
        }
    }
}

impl From<MouldError> for JobError {
    fn from(e: MouldError) -> Self {
        match &e {
            MouldError::Resonance { word, .. } => {
                JobError { status: ExitStatus::Resonance, message: e.to_string(), word: Some(word.to_string()) }
            }
            _ => JobError { status: ExitStatus::Failure, message: e.to_string(), word: None },
        }
    }
}

macro_rules! failure_from {
    ($($t:ty),*) => {$(
        impl From<$t> for JobError {
            fn from(e: $t) -> Self {
                JobError { status: ExitStatus::Failure, message: e.to_string(), word: None }
            }
        }
    )*};
}

failure_from!(crate::operator::OperatorError, crate::word::WordError);

impl From<hamiltonian::HamiltonianError> for JobError {
    fn from(e: hamiltonian::HamiltonianError) -> Self {
        match e {
            hamiltonian::HamiltonianError::NormalForm(n) => n.into(),
            hamiltonian::HamiltonianError::NotHamiltonian(_) | hamiltonian::HamiltonianError::StageMismatch => {
                JobError::cert(e)
            }
            hamiltonian::HamiltonianError::LowDegree(_) | hamiltonian::HamiltonianError::Exponents(_) => JobError::usage(e),
            _ => JobError { status: ExitStatus::Failure, message: e.to_string(), word: None },
        }
    }
}

impl From<kolmogorov::KolmogorovError> for JobError {
    fn from(e: kolmogorov::KolmogorovError) -> Self {
        use kolmogorov::KolmogorovError as K;
        match &e {
            K::Resonant { k, .. } => JobError {
                status: ExitStatus::Resonance,
                message: e.to_string(),
                word: Some(format!("({})", k.iter().map(i64::to_string).collect::<Vec<_>>().join(","))),
            },
            K::StarStar { .. } | K::MouldCheck | K::NotHamiltonian(_) | K::NotInClass { .. } => JobError::cert(&e),
            K::Dimension(_) | K::PDegree(_) | K::Target { .. } | K::ZerothOrder => JobError::usage(&e),
            _ => JobError { status: ExitStatus::Failure, message: e.to_string(), word: None },
        }
    }
}

impl From<io::IoError> for JobError {
    fn from(e: io::IoError) -> Self {
        JobError::usage(e)
    }
}

impl From<io::ParseError> for JobError {
    fn from(e: io::ParseError) -> Self {
        JobError::usage(e)
    }
}

fn pass(b: bool) -> &'static str {
    if b {
        "pass"
    } else {
        "fail"
    }
}

fn list<T: fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    let v: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(";")
    }
}

enum Input {
    Field(PreparedField),
    Hamiltonian(CartesianHamiltonian),
    Kolmogorov(KolmogorovInput),
    Alphabet(Alphabet),
}

fn first_keyword(text: &str) -> Option<&str> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .and_then(|l| l.split_whitespace().next())
}

fn read_input(spec: &JobSpec) -> Result<Input, JobError> {
    match first_keyword(&spec.input) {
        Some("dim") => Ok(Input::Field(io::parse_field(&spec.input, spec.cutoff)?)),
        Some("dof") => Ok(Input::Hamiltonian(io::parse_hamiltonian(&spec.input, spec.cutoff)?)),
        Some("nu") => Ok(Input::Kolmogorov(io::parse_kolmogorov(&spec.input, spec.eps_order)?)),
        Some("kind") => Ok(Input::Alphabet(io::parse_alphabet(&spec.input)?)),
        Some(k) => Err(JobError::usage(format!("line 1: unknown input kind `{k}`"))),
        None => Err(JobError::usage("empty input")),
    }
}

fn length_bound(spec: &JobSpec, cutoff: Option<u32>) -> Result<usize, JobError> {
    if let Some(n) = cutoff {
        if n < 2 {
            return Err(JobError::usage(format!("cutoff must be at least 2, got {n}")));
        }
    }
    let l = spec.length.unwrap_or_else(|| cutoff.map_or(4, |n| (n as usize).min(4)));
    if let Some(n) = cutoff {
        if l > n as usize {
            return Err(JobError::usage(format!("length {l} exceeds the cutoff {n}")));
        }
    }
    if l == 0 {
        return Err(JobError::usage("length must be at least 1"));
    }
    Ok(l)
}

fn expect_field(input: Input, cmd: &Command) -> Result<PreparedField, JobError> {
    match input {
        Input::Field(f) => Ok(f),
        _ => Err(JobError::usage(format!("`{cmd}` needs a field file"))),
    }
}

fn alphabet_of(input: &Input, cmd: &Command) -> Result<Alphabet, JobError> {
    match input {
        Input::Field(f) => Ok(f.alphabet().clone()),
        Input::Alphabet(a) => Ok(a.clone()),
        Input::Hamiltonian(h) => Ok(hamiltonian::omega_field(h)?.alphabet().clone()),
        Input::Kolmogorov(_) => Err(JobError::usage(format!("`{cmd}` needs an alphabet, field or Hamiltonian file"))),
    }
}

fn cutoff_of(input: &Input) -> Option<u32> {
    match input {
        Input::Field(f) => Some(f.cutoff()),
        Input::Hamiltonian(h) => Some(h.cutoff()),
        _ => None,
    }
}

/// Runs a job. Never panics on bad input; failures are reported in the
/// machine section with a nonzero status.
pub fn run_job(spec: &JobSpec) -> JobOutcome {
    let mut report = Report::default();
    report.set("command", &spec.command);
    let result = read_input(spec).and_then(|input| {
        let len = length_bound(spec, cutoff_of(&input))?;
        match &spec.command {
            Command::Prepare => prepare_job(expect_field(input, &spec.command)?, len, &mut report),
            Command::Linearize => linearize_job(expect_field(input, &spec.command)?, len, &mut report),
            Command::Trim => trim_job(expect_field(input, &spec.command)?, len, &mut report),
            Command::HamTrim => match input {
                Input::Hamiltonian(h) => ham_trim_job(&h, &mut report),
                _ => Err(JobError::usage("`ham-trim` needs a Hamiltonian file")),
            },
            Command::Kolmogorov => match input {
                Input::Kolmogorov(k) => kolmogorov_job(&k, &mut report),
                _ => Err(JobError::usage("`kolmogorov` needs a Kolmogorov file")),
            },
            Command::MouldTable(name) => {
                let a = alphabet_of(&input, &spec.command)?;
                mould_table_job(&a, name, len, &mut report)
            }
            Command::Certify(p) => certify_job(input, p, len, &mut report),
        }
    });
    let status = match result {
        Ok(s) => s,
        Err(e) => {
            report.set("error", &e.message);
            if let Some(w) = &e.word {
                report.set("word", w);
            }
            report.line(format!("error: {}", e.message));
            e.status
        }
    };
    report.set(
        "status",
        match status {
            ExitStatus::Ok => "ok",
            ExitStatus::Failure => "failure",
            ExitStatus::Usage => "usage",
            ExitStatus::Resonance => "resonance",
            ExitStatus::Certification => "certification-failed",
        },
    );
    report.set("exit", status.code());
    JobOutcome { report, status }
}

fn describe_field(f: &PreparedField, report: &mut Report) -> Result<(), JobError> {
    for (g, b) in f.parts() {
        report.line(format!("B_{g}  omega={}", f.omega(g)?));
        for (i, c) in b.components().iter().enumerate() {
            if !c.is_zero() {
                report.line(format!("  x{} <- {c}", i + 1));
            }
        }
    }
    Ok(())
}

fn prepare_job(f: PreparedField, len: usize, report: &mut Report) -> Result<ExitStatus, JobError> {
    report.set("dim", f.dim());
    report.set("cutoff", f.cutoff());
    report.set("lambda", list(f.weights()));
    report.set("letters", list(f.alphabet().letters()));
    for g in f.alphabet().letters() {
        report.set(format!("omega.{g}"), f.omega(g)?);
    }
    let res = resonance_report(f.alphabet(), len, Some(f.cutoff() as i64 - 1))?;
    report.set("length", len);
    report.set("resonant_letters", list(&res.resonant_letters));
    report.set("resonant_words", res.resonant_words.len());
    report.set("non_resonant", res.is_non_resonant);
    let lemma = f.parts().iter().all(|(g, b)| {
        f.omega(g).map(|om| f.lin().bracket(b).map(|l| l == b.scale(&om)).unwrap_or(false)).unwrap_or(false)
    });
    report.set("eigenrelation", pass(lemma));
    report.set("derivations", pass(f.parts().values().all(GradedOperator::is_derivation)));
    report.object("field", "input", io::write_field(&f));
    report.object("alphabet", "letters", io::write_alphabet(f.alphabet()));
    report.line(format!("prepared field: {} letters, cutoff {}", f.parts().len(), f.cutoff()));
    describe_field(&f, report)?;
    Ok(if lemma { ExitStatus::Ok } else { ExitStatus::Certification })
}

fn table(m: &Mould, len: usize) -> Result<MouldTable, JobError> {
    Ok(MouldTable { max_len: len, entries: m.tabulate(len)? })
}

fn linearize_job(f: PreparedField, len: usize, report: &mut Report) -> Result<ExitStatus, JobError> {
    report.set("dim", f.dim());
    report.set("cutoff", f.cutoff());
    report.object("field", "input", io::write_field(&f));
    let r = linearize(&f)?;
    let residual = r.field.total().sub(f.lin())?;
    report.set("conjugation_residual", residual.nnz());
    let auto = r.normalizer.is_automorphism();
    report.set("normalizer_automorphism", pass(auto));
    let sym = r.mould.check_symmetral(len)?;
    report.set("theta_symmetral", pass(sym.is_none()));
    report.set("normalizer_nnz", r.normalizer.nnz());
    report.object("field", "linearized", io::write_field(&r.field));
    report.object("mould-table", "theta", table(&r.mould, len)?.to_text());
    report.line("linearized: Theta X Theta^-1 = X_lin modulo the cutoff");
    report.line(format!("normalizer:\n{}", r.normalizer));
    let ok = residual.is_zero() && auto && sym.is_none();
    Ok(if ok { ExitStatus::Ok } else { ExitStatus::Certification })
}

fn trim_job(f: PreparedField, len: usize, report: &mut Report) -> Result<ExitStatus, JobError> {
    report.set("dim", f.dim());
    report.set("cutoff", f.cutoff());
    report.object("field", "input", io::write_field(&f));
    let res = resonance_report(f.alphabet(), len, Some(f.cutoff() as i64 - 1))?;
    report.set("resonant_letters", list(&res.resonant_letters));
    let t = trimmed_form(&f)?;
    report.set("stages", t.stages.len());
    for (i, s) in t.stages.iter().enumerate() {
        report.set(format!("stage.{}.letters", i + 1), list(s.field.alphabet().letters()));
        report.object("field", &format!("stage-{}", i + 1), io::write_field(&s.field));
    }
    let bracket = t.field.total().bracket(f.lin())?;
    report.set("bracket_residual", bracket.nnz());
    let last = t.stages.last().map_or(f.total(), |s| s.field.total());
    let agree = last == t.field.total();
    report.set("stages_agree", pass(agree));
    let conj = t.normalizer.compose(&f.total())?.compose(&unipotent_inverse(&t.normalizer)?)?;
    let conj_ok = conj == t.field.total();
    report.set("normalizer_conjugates", pass(conj_ok));
    let resonant_only = t.field.parts().keys().all(|g| f.omega(g).map(|o| o.is_zero()).unwrap_or(false));
    report.set("resonant_support", pass(resonant_only));
    report.set("trimmed_letters", list(t.field.alphabet().letters()));
    report.object("field", "trimmed", io::write_field(&t.field));
    report.object("mould-table", "tram", table(&t.mould, len)?.to_text());
    report.line(format!("trimmed form after {} simplification stage(s)", t.stages.len()));
    describe_field(&t.field, report)?;
    let ok = bracket.is_zero() && agree && conj_ok && resonant_only;
    Ok(if ok { ExitStatus::Ok } else { ExitStatus::Certification })
}

fn ham_trim_job(h: &CartesianHamiltonian, report: &mut Report) -> Result<ExitStatus, JobError> {
    report.set("dof", h.dof());
    report.set("cutoff", h.cutoff());
    report.object("hamiltonian", "input", io::write_hamiltonian(h));
    let r = canonical_trimmed_form(h)?;
    report.set("omega_letters", list(r.initial.alphabet().letters()));
    report.set("stages", r.stages.len());
    for (i, s) in r.stages.iter().enumerate() {
        let k = i + 1;
        report.set(format!("stage.{k}.letters"), list(s.field.alphabet().letters()));
        report.set(format!("stage.{k}.hamiltonian"), "pass");
        report.set(format!("stage.{k}.generator"), "pass");
        report.object("hamiltonian", &format!("stage-{k}"), io::write_hamiltonian(&s.hamiltonian));
        report.object("hamiltonian", &format!("chi-{k}"), io::write_hamiltonian(&s.generator_hamiltonian));
    }
    let bracket = r.trimmed.total().bracket(r.trimmed.lin())?;
    report.set("bracket_residual", bracket.nnz());
    let resonant_only = r.trimmed.parts().keys().all(|g| matches!(g, Grade::Scalar(o) if o.is_zero()));
    report.set("resonant_support", pass(resonant_only));
    report.object("hamiltonian", "trimmed", io::write_hamiltonian(&r.hamiltonian));
    report.line(format!("canonical trimmed form after {} stage(s)", r.stages.len()));
    for ((n, m), c) in r.hamiltonian.terms() {
        report.line(format!("  {c} {}", hamiltonian::exponents_text(&(n.clone(), m.clone()))));
    }
    let ok = bracket.is_zero() && resonant_only;
    Ok(if ok { ExitStatus::Ok } else { ExitStatus::Certification })
}

fn kolmogorov_job(k: &KolmogorovInput, report: &mut Report) -> Result<ExitStatus, JobError> {
    report.object("kolmogorov", "input", io::write_kolmogorov(k));
    let x = field_from_hamiltonian(&k.omega, &k.f, k.max_order, k.kinetic_order)?;
    report.object("eps-derivation", "initial", io::write_eps_derivation(&x));
    let r = kolmogorov_normal_form(&x, &k.omega, k.target_order)?;
    report.set("stages", r.stages.len());
    let mut ok = true;
    for (i, s) in r.stages.iter().enumerate() {
        let n = i + 1;
        report.set(format!("stage.{n}.class"), format!("D1_{}", s.order + 1));
        report.set(
            format!("stage.{n}.discarded_min_order"),
            s.discarded_order.map_or("none".to_string(), |o| o.to_string()),
        );
        let canonical = kolmogorov::is_canonical(&s.generator);
        ok &= canonical;
        report.set(format!("stage.{n}.canonical"), pass(canonical));
        report.set(format!("stage.{n}.mould_check"), "pass");
        report.object("eps-derivation", &format!("stage-{n}"), io::write_eps_derivation(&s.field));
        report.object("eps-function", &format!("chi-{n}"), io::write_eps_function(&s.generator_hamiltonian));
    }
    let q_dep = r.field.filter(|key| key.1.iter().any(|&c| c != 0)).min_order();
    report.set("q_dependent_min_order", q_dep.map_or("none".to_string(), |o| o.to_string()));
    match &r.hamiltonian {
        Some(hf) => {
            report.set("final_hamiltonian", "pass");
            report.object("eps-function", "hamiltonian", io::write_eps_function(hf));
        }
        None => {
            ok = false;
            report.set("final_hamiltonian", "fail");
        }
    }
    report.line(format!("{} Kolmogorov step(s); q-dependence pushed to order {}", r.stages.len(), k.target_order + 1));
    Ok(if ok { ExitStatus::Ok } else { ExitStatus::Certification })
}

fn named_mould(a: &Alphabet, name: &str, len: usize) -> Result<Mould, JobError> {
    Ok(match name {
        "theta" => theta_mould(a),
        "v" => v_mould(a),
        "exp-v" => v_mould(a).exp()?,
        "sam" => sam_mould(a),
        "tram" => tram_mould(a, len)?,
        other => match other.strip_prefix("sam-").map(usize::from_str) {
            Some(Ok(r)) if r >= 1 => sam_iterated(r, a)?,
            _ => {
                return Err(JobError::usage(format!("unknown mould `{other}`; expected one of {}", MOULD_NAMES.join(", "))))
            }
        },
    })
}

fn mould_table_job(a: &Alphabet, name: &str, len: usize, report: &mut Report) -> Result<ExitStatus, JobError> {
    let m = named_mould(a, name, len)?;
    report.set("mould", name);
    report.set("length", len);
    report.object("alphabet", "letters", io::write_alphabet(a));
    let t = table(&m, len)?;
    report.set("entries", t.entries.len());
    let sym = m.check_symmetry(len)?;
    report.set(
        "symmetry",
        match sym.kind {
            SymmetryKind::Alternal => "alternal",
            SymmetryKind::Symmetral => "symmetral",
            SymmetryKind::Neither => "neither",
        },
    );
    report.object("mould-table", name, t.to_text());
    report.line(format!("{name} on words of length <= {len}"));
    for (w, v) in &t.entries {
        report.line(format!("  {w}  {v}"));
    }
    Ok(ExitStatus::Ok)
}

fn certify_job(input: Input, property: &str, len: usize, report: &mut Report) -> Result<ExitStatus, JobError> {
    report.set("property", property);
    report.set("length", len);
    let cmd = Command::Certify(property.to_string());
    let detail: Option<String> = match property {
        "sam-alternal" => sam_mould(&alphabet_of(&input, &cmd)?).check_alternal(len)?.map(|v| v.to_string()),
        "theta-symmetral" => theta_mould(&alphabet_of(&input, &cmd)?).check_symmetral(len)?.map(|v| v.to_string()),
        "expv-symmetral" => v_mould(&alphabet_of(&input, &cmd)?).exp()?.check_symmetral(len)?.map(|v| v.to_string()),
        "residual" => {
            let a = alphabet_of(&input, &cmd)?;
            let resonant = !resonance_report(&a, len, None)?.is_non_resonant;
            let (theta, pran) = if resonant {
                (stage_normalizer_mould(&a, len)?, tram_mould(&a, len)?)
            } else {
                (theta_mould(&a), Mould::zero(&a))
            };
            report.set("pran", if resonant { "tram" } else { "zero" });
            let res = conjugation_residual(&theta, &pran)?;
            first_nonzero(&a, &res, len)?
        }
        "stationarity" => {
            let a = alphabet_of(&input, &cmd)?;
            let iters = (1..=len).map(|r| sam_iterated(r, &a)).collect::<Result<Vec<_>, _>>()?;
            let mut bad = None;
            'outer: for w in a.words(len).into_iter().filter(|w| !w.is_empty()) {
                for q in w.len()..=len {
                    if iters[q - 1].eval(&w)? != iters[w.len() - 1].eval(&w)? {
                        bad = Some(format!("{w} at r={} q={q}", w.len()));
                        break 'outer;
                    }
                }
            }
            bad
        }
        "tram-resonant" => {
            let a = alphabet_of(&input, &cmd)?;
            let tram = tram_mould(&a, len)?;
            let mut bad = None;
            for w in a.words(len) {
                if !a.omega_word(w.letters())?.is_zero() && !tram.eval(&w)?.is_zero() {
                    bad = Some(w.to_string());
                    break;
                }
            }
            bad
        }
        "tram-fixed-point" => {
            let a = alphabet_of(&input, &cmd)?;
            let tram = tram_mould(&a, len)?;
            let sam = sam_mould(&a);
            let left = tram.compose(&sam)?;
            let right = sam.compose(&tram)?;
            let mut bad = None;
            for w in a.words(len) {
                let t = tram.eval(&w)?;
                if left.eval(&w)? != t || right.eval(&w)? != t {
                    bad = Some(w.to_string());
                    break;
                }
            }
            bad
        }
        "linearization" => {
            let f = expect_field(input, &cmd)?;
            let r = linearize(&f)?;
            let residual = r.field.total().sub(f.lin())?;
            (!residual.is_zero()).then(|| format!("{} nonzero entries", residual.nnz()))
        }
        "prenormal" => {
            let f = expect_field(input, &cmd)?;
            let t = trimmed_form(&f)?;
            let b = t.field.total().bracket(f.lin())?;
            (!b.is_zero()).then(|| format!("{} nonzero entries", b.nnz()))
        }
        "hamiltonian" => match input {
            Input::Hamiltonian(h) => {
                let r = canonical_trimmed_form(&h)?;
                report.set("stages", r.stages.len());
                None
            }
            _ => return Err(JobError::usage("`certify hamiltonian` needs a Hamiltonian file")),
        },
        "kolmogorov" => match input {
            Input::Kolmogorov(k) => {
                let x = field_from_hamiltonian(&k.omega, &k.f, k.max_order, k.kinetic_order)?;
                let r = kolmogorov_normal_form(&x, &k.omega, k.target_order)?;
                report.set("stages", r.stages.len());
                r.stages.iter().find(|s| !kolmogorov::is_canonical(&s.generator)).map(|s| format!("stage at order {}", s.order))
            }
            _ => return Err(JobError::usage("`certify kolmogorov` needs a Kolmogorov file")),
        },
        other => {
            return Err(JobError::usage(format!("unknown property `{other}`; expected one of {}", PROPERTIES.join(", "))))
        }
    };
    report.set("result", pass(detail.is_none()));
    if let Some(d) = &detail {
        report.set("violation", d);
        report.line(format!("{property}: fail ({d})"));
        return Ok(ExitStatus::Certification);
    }
    report.line(format!("{property}: pass"));
    Ok(ExitStatus::Ok)
}

fn first_nonzero(a: &Alphabet, m: &Mould, len: usize) -> Result<Option<String>, JobError> {
    for w in a.words(len) {
        let v = m.eval(&w)?;
        if !v.is_zero() {
            return Ok(Some(format!("{w} = {v}")));
        }
    }
    Ok(None)
}
