//! Ground-fact reader and writer.
//!
//! The accepted syntax is the ground subset of a logic program: facts of the
//! form `name(arg, ...).` where each argument is an integer, a bare symbol or
//! a double-quoted string. `%` starts a line comment and `%* ... *%` a block
//! comment. Quoted and bare symbols are interchangeable.
//!
//! [`ParseMode::Lenient`] additionally accepts the short forms found in
//! hand-written listings: 3-ary `availability` (expanded to one slot per
//! declared doctor), 4-ary `visit_type` (missing flags default to 0), stray
//! `...` elisions and unknown predicates, each reported as a [`Warning`].

use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

use crate::domain::{
    Appointment, AvailabilitySlot, Clinic, ClinicId, Doctor, DoctorId, DoctorPreference, EnvCondition, Experience,
    Instance, Modality, Need, Patient, PatientId, SessionInterval, TimeWindowPreference, Urgency, VisitId, VisitType,
};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum ParseMode {
    Strict,
    #[default]
    Lenient,
}

impl FromStr for ParseMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(ParseMode::Strict),
            "lenient" => Ok(ParseMode::Lenient),
            other => Err(format!("unknown parse mode {other:?} (expected strict or lenient)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactError {
    #[error("{at}: syntax error: {message}")]
    Syntax { at: Position, message: String },
    #[error("{at}: unknown predicate {name}/{arity}")]
    UnknownPredicate { at: Position, name: String, arity: usize },
    #[error("{at}: arity mismatch: {name}/{arity} is not accepted{hint}")]
    Arity {
        at: Position,
        name: String,
        arity: usize,
        hint: String,
    },
    #[error("{at}: argument {index} of {name}: {message}")]
    Argument {
        at: Position,
        name: String,
        index: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Warning {
    pub at: Position,
    pub message: String,
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Parsed {
    pub instance: Instance,
    pub warnings: Vec<Warning>,
}

/// A ground argument.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Sym(String),
    /// `_`, only meaningful where an argument is optional.
    Wildcard,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fact {
    pub name: String,
    pub args: Vec<Term>,
    pub at: Position,
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Open,
    Close,
    Comma,
    Dot,
    Ellipsis,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn pos(&self) -> Position {
        Position {
            line: self.line,
            column: self.column,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn syntax(&self, message: impl Into<String>) -> FactError {
        FactError::Syntax {
            at: self.pos(),
            message: message.into(),
        }
    }

    fn skip_trivia(&mut self) -> Result<(), FactError> {
        loop {
            match self.chars.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('%') => {
                    self.bump();
                    if self.chars.peek() == Some(&'*') {
                        self.bump();
                        let start = self.pos();
                        let mut prev = '\0';
                        loop {
                            match self.bump() {
                                Some('%') if prev == '*' => break,
                                Some(c) => prev = c,
                                None => {
                                    return Err(FactError::Syntax {
                                        at: start,
                                        message: "unterminated block comment".into(),
                                    })
                                }
                            }
                        }
                    } else {
                        while let Some(c) = self.bump() {
                            if c == '\n' {
                                break;
                            }
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<(Tok, Position)>, FactError> {
        self.skip_trivia()?;
        let at = self.pos();
        let Some(&c) = self.chars.peek() else {
            return Ok(None);
        };
        let tok = match c {
            '(' => {
                self.bump();
                Tok::Open
            }
            ')' => {
                self.bump();
                Tok::Close
            }
            ',' => {
                self.bump();
                Tok::Comma
            }
            '.' => {
                self.bump();
                let mut rest = self.chars.clone();
                if rest.next() == Some('.') && rest.next() == Some('.') {
                    self.bump();
                    self.bump();
                    Tok::Ellipsis
                } else {
                    Tok::Dot
                }
            }
            '"' => {
                self.bump();
                let mut s = String::new();
                loop {
                    match self.bump() {
                        Some('"') => break,
                        Some('\\') => match self.bump() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(e) => s.push(e),
                            None => break,
                        },
                        Some('\n') | None => {
                            return Err(FactError::Syntax {
                                at,
                                message: "unterminated string".into(),
                            })
                        }
                        Some(ch) => s.push(ch),
                    }
                }
                Tok::Str(s)
            }
            '-' | '0'..='9' => {
                let mut s = String::new();
                if c == '-' {
                    s.push('-');
                    self.bump();
                }
                while let Some(&d) = self.chars.peek() {
                    if d.is_ascii_digit() {
                        s.push(d);
                        self.bump();
                    } else {
                        break;
                    }
                }
                // an identifier that happens to start with digits, e.g. `3a`
                if matches!(self.chars.peek(), Some(ch) if ch.is_alphabetic() || *ch == '_') {
                    while let Some(&d) = self.chars.peek() {
                        if d.is_alphanumeric() || d == '_' {
                            s.push(d);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if s.starts_with('-') {
                        return Err(FactError::Syntax {
                            at,
                            message: format!("invalid token {s:?}"),
                        });
                    }
                    Tok::Ident(s)
                } else {
                    let n = s.parse::<i64>().map_err(|_| FactError::Syntax {
                        at,
                        message: format!("invalid integer {s:?}"),
                    })?;
                    Tok::Int(n)
                }
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&d) = self.chars.peek() {
                    if d.is_alphanumeric() || d == '_' {
                        s.push(d);
                        self.bump();
                    } else {
                        break;
                    }
                }
                Tok::Ident(s)
            }
            other => return Err(self.syntax(format!("unexpected character {other:?}"))),
        };
        Ok(Some((tok, at)))
    }
}

/// Splits text into ground facts. Elisions (`...`) are returned as warnings
/// in lenient mode and rejected in strict mode.
pub fn read_facts(text: &str, mode: ParseMode) -> Result<(Vec<Fact>, Vec<Warning>), FactError> {
    let mut lex = Lexer::new(text);
    let mut facts = Vec::new();
    let mut warnings = Vec::new();
    while let Some((tok, at)) = lex.next_token()? {
        let name = match tok {
            Tok::Ident(name) => name,
            Tok::Ellipsis if mode == ParseMode::Lenient => {
                warnings.push(Warning {
                    at,
                    message: "skipped elision `...`".into(),
                });
                continue;
            }
            other => {
                return Err(FactError::Syntax {
                    at,
                    message: format!("expected a predicate name, found {}", describe(&other)),
                })
            }
        };
        let mut args = Vec::new();
        match lex.next_token()? {
            Some((Tok::Dot, _)) => {}
            Some((Tok::Open, _)) => {
                loop {
                    let (tok, at) = lex
                        .next_token()?
                        .ok_or_else(|| lex.syntax("unexpected end of input inside argument list"))?;
                    let term = match tok {
                        Tok::Int(n) => Term::Int(n),
                        Tok::Str(s) => Term::Sym(s),
                        Tok::Ident(s) if s == "_" => Term::Wildcard,
                        Tok::Ident(s) => Term::Sym(s),
                        other => {
                            return Err(FactError::Syntax {
                                at,
                                message: format!("expected an argument, found {}", describe(&other)),
                            })
                        }
                    };
                    args.push(term);
                    match lex.next_token()? {
                        Some((Tok::Comma, _)) => continue,
                        Some((Tok::Close, _)) => break,
                        Some((other, at)) => {
                            return Err(FactError::Syntax {
                                at,
                                message: format!("expected `,` or `)`, found {}", describe(&other)),
                            })
                        }
                        None => return Err(lex.syntax("unexpected end of input inside argument list")),
                    }
                }
                match lex.next_token()? {
                    Some((Tok::Dot, _)) => {}
                    Some((other, at)) => {
                        return Err(FactError::Syntax {
                            at,
                            message: format!("expected `.` after fact, found {}", describe(&other)),
                        })
                    }
                    None => return Err(lex.syntax("missing `.` at end of fact")),
                }
            }
            Some((other, at)) => {
                return Err(FactError::Syntax {
                    at,
                    message: format!("expected `(` or `.`, found {}", describe(&other)),
                })
            }
            None => return Err(lex.syntax("missing `.` at end of fact")),
        }
        facts.push(Fact { name, args, at });
    }
    Ok((facts, warnings))
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("symbol `{s}`"),
        Tok::Int(n) => format!("integer {n}"),
        Tok::Str(s) => format!("string {s:?}"),
        Tok::Open => "`(`".into(),
        Tok::Close => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Dot => "`.`".into(),
        Tok::Ellipsis => "`...`".into(),
    }
}

// ---------------------------------------------------------------- assembly

struct Builder {
    mode: ParseMode,
    inst: Instance,
    short_availability: Vec<(ClinicId, VisitId, i64, Position)>,
    warnings: Vec<Warning>,
}

struct Args<'a> {
    fact: &'a Fact,
}

impl<'a> Args<'a> {
    fn err(&self, index: usize, message: impl Into<String>) -> FactError {
        FactError::Argument {
            at: self.fact.at,
            name: self.fact.name.clone(),
            index: index + 1,
            message: message.into(),
        }
    }

    fn sym(&self, i: usize) -> Result<String, FactError> {
        match &self.fact.args[i] {
            Term::Sym(s) => Ok(s.clone()),
            Term::Int(n) => Ok(n.to_string()),
            Term::Wildcard => Err(self.err(i, "`_` is not allowed here")),
        }
    }

    fn int(&self, i: usize) -> Result<i64, FactError> {
        match &self.fact.args[i] {
            Term::Int(n) => Ok(*n),
            _ => Err(self.err(i, "expected an integer")),
        }
    }

    fn uint<T: TryFrom<i64>>(&self, i: usize) -> Result<T, FactError> {
        let n = self.int(i)?;
        T::try_from(n).map_err(|_| self.err(i, format!("expected a non-negative integer, got {n}")))
    }

    fn flag(&self, i: usize) -> Result<bool, FactError> {
        match self.int(i)? {
            0 => Ok(false),
            1 => Ok(true),
            n => Err(self.err(i, format!("expected flag 0 or 1, got {n}"))),
        }
    }
}

impl Builder {
    fn patient(&mut self, id: String) -> &mut Patient {
        let id = PatientId::new(id);
        self.inst
            .patients
            .entry(id.clone())
            .or_insert_with(|| Patient::placeholder(id))
    }

    fn doctor(&mut self, id: String) -> &mut Doctor {
        let id = DoctorId::new(id);
        self.inst
            .doctors
            .entry(id.clone())
            .or_insert_with(|| Doctor::placeholder(id))
    }

    fn clinic(&mut self, id: String) -> &mut Clinic {
        let id = ClinicId::new(id);
        self.inst
            .clinics
            .entry(id.clone())
            .or_insert_with(|| Clinic::placeholder(id))
    }

    fn visit(&mut self, id: String) -> &mut VisitType {
        let id = VisitId::new(id);
        self.inst
            .visit_types
            .entry(id.clone())
            .or_insert_with(|| VisitType::placeholder(id))
    }

    fn arity_error(&self, fact: &Fact, hint: &str) -> FactError {
        FactError::Arity {
            at: fact.at,
            name: fact.name.clone(),
            arity: fact.args.len(),
            hint: hint.to_owned(),
        }
    }

    fn apply(&mut self, fact: &Fact) -> Result<(), FactError> {
        let a = Args { fact };
        let n = fact.args.len();
        let lenient = self.mode == ParseMode::Lenient;
        match (fact.name.as_str(), n) {
            ("patient", 3 | 4) => {
                let city = if n == 4 { Some(a.sym(3)?) } else { None };
                let (given, family) = (a.sym(1)?, a.sym(2)?);
                let p = self.patient(a.sym(0)?);
                p.declared = true;
                p.given_name = given;
                p.family_name = family;
                p.city = city;
            }
            ("disabled", 1) => self.patient(a.sym(0)?).disabled = true,
            ("preference", 2) => {
                let c = ClinicId::new(a.sym(1)?);
                self.patient(a.sym(0)?).clinic_prefs.insert(c);
            }
            ("sensory_preference", 2) => {
                let s = a.sym(1)?;
                self.patient(a.sym(0)?).sensory_prefs.insert(s);
            }
            ("doctor_preference", 4) => {
                let pref = DoctorPreference {
                    doctor_type: a.sym(1)?,
                    specialization: a.sym(2)?,
                    required_years: a.uint(3)?,
                };
                let p = self.patient(a.sym(0)?);
                if !p.doctor_prefs.contains(&pref) {
                    p.doctor_prefs.push(pref);
                }
            }
            ("appointment_preference", 4) => {
                let clinic = match &fact.args[1] {
                    Term::Wildcard => None,
                    _ => Some(ClinicId::new(a.sym(1)?)),
                };
                let pref = TimeWindowPreference {
                    clinic,
                    start: a.int(2)?,
                    end: a.int(3)?,
                };
                let p = self.patient(a.sym(0)?);
                if !p.time_window_prefs.contains(&pref) {
                    p.time_window_prefs.push(pref);
                }
            }
            ("distance", 3) => {
                let (c, km) = (ClinicId::new(a.sym(1)?), a.uint(2)?);
                self.patient(a.sym(0)?).distances.insert(c, km);
            }
            ("need" | "needs", 3) => {
                let urgency = Urgency::new(a.int(2)?).map_err(|e| a.err(2, e.to_string()))?;
                let need = Need {
                    visit: VisitId::new(a.sym(1)?),
                    urgency,
                };
                let p = self.patient(a.sym(0)?);
                if !p.needs.contains(&need) {
                    p.needs.push(need);
                }
            }
            ("patient_interval", 4) => {
                let v = VisitId::new(a.sym(1)?);
                let interval = SessionInterval {
                    min_days: a.uint(2)?,
                    max_days: a.uint(3)?,
                };
                self.patient(a.sym(0)?).session_overrides.insert(v, interval);
            }
            ("doctor", 6) => {
                let (given, family, age, city, kind) = (a.sym(1)?, a.sym(2)?, a.uint(3)?, a.sym(4)?, a.sym(5)?);
                let d = self.doctor(a.sym(0)?);
                d.declared = true;
                d.given_name = given;
                d.family_name = family;
                d.age = age;
                d.city = city;
                d.doctor_type = kind;
            }
            ("doctor_experience", 3) => {
                let e = Experience {
                    specialization: a.sym(1)?,
                    years: a.uint(2)?,
                };
                let d = self.doctor(a.sym(0)?);
                if !d.experience.contains(&e) {
                    d.experience.push(e);
                }
            }
            ("clinic", 2) => {
                let modality = Modality::from_label(&a.sym(1)?);
                let c = self.clinic(a.sym(0)?);
                c.declared = true;
                c.modality = modality;
            }
            ("accessible", 1) => self.clinic(a.sym(0)?).accessible = true,
            ("budget", 2) => {
                let b = a.uint(1)?;
                self.clinic(a.sym(0)?).budget = Some(b);
            }
            ("environmental_condition" | "environment_condition", 5) => {
                let e = EnvCondition {
                    condition_type: a.sym(1)?,
                    level: a.uint(2)?,
                    start: a.int(3)?,
                    end: a.int(4)?,
                };
                let c = self.clinic(a.sym(0)?);
                if !c.env_conditions.contains(&e) {
                    c.env_conditions.push(e);
                }
            }
            ("visit_type", 6) | ("visit_type", 4) => {
                if n == 4 && !lenient {
                    return Err(self.arity_error(fact, " in strict mode (use visit_type/6)"));
                }
                let (specialty, label, chronic) = (a.sym(1)?, a.sym(2)?, a.flag(3)?);
                let (onsite_only, in_person) = if n == 6 {
                    (a.flag(4)?, a.flag(5)?)
                } else {
                    (false, false)
                };
                if n == 4 {
                    self.warnings.push(Warning {
                        at: fact.at,
                        message: "visit_type/4: modality flags default to 0".into(),
                    });
                }
                let v = self.visit(a.sym(0)?);
                v.declared = true;
                v.specialty = specialty;
                v.condition_label = label;
                v.chronic = chronic;
                v.onsite_only = onsite_only;
                v.in_person = in_person;
            }
            ("visit_cost", 2) => {
                let cost = a.uint(1)?;
                self.visit(a.sym(0)?).cost = cost;
            }
            ("required_sessions", 2) => {
                let s: u32 = a.uint(1)?;
                if s == 0 {
                    return Err(a.err(1, "required sessions must be at least 1"));
                }
                self.visit(a.sym(0)?).required_sessions = s;
            }
            ("session_interval", 3) => {
                let interval = SessionInterval {
                    min_days: a.uint(1)?,
                    max_days: a.uint(2)?,
                };
                self.visit(a.sym(0)?).session_interval = Some(interval);
            }
            ("availability", 4) => {
                let slot = AvailabilitySlot {
                    clinic: ClinicId::new(a.sym(0)?),
                    doctor: DoctorId::new(a.sym(1)?),
                    visit: VisitId::new(a.sym(2)?),
                    time: a.int(3)?,
                };
                if !self.inst.slots.contains(&slot) {
                    self.inst.slots.push(slot);
                }
            }
            ("availability", 3) => {
                if !lenient {
                    return Err(self.arity_error(fact, " in strict mode (use availability/4)"));
                }
                self.short_availability
                    .push((ClinicId::new(a.sym(0)?), VisitId::new(a.sym(1)?), a.int(2)?, fact.at));
            }
            ("current_time", 1) => self.inst.current_time = Some(a.int(0)?),
            (name, _) if KNOWN.contains(&name) => {
                return Err(self.arity_error(fact, ""));
            }
            (name, arity) => {
                if lenient {
                    self.warnings.push(Warning {
                        at: fact.at,
                        message: format!("skipped unknown predicate {name}/{arity}"),
                    });
                } else {
                    return Err(FactError::UnknownPredicate {
                        at: fact.at,
                        name: name.to_owned(),
                        arity,
                    });
                }
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Parsed {
        let doctors: Vec<DoctorId> = self
            .inst
            .doctors
            .values()
            .filter(|d| d.declared)
            .map(|d| d.id.clone())
            .collect();
        for (clinic, visit, time, at) in std::mem::take(&mut self.short_availability) {
            if doctors.is_empty() {
                self.warnings.push(Warning {
                    at,
                    message: format!("availability({clinic}, {visit}, {time}) dropped: no declared doctors"),
                });
            }
            for d in &doctors {
                let slot = AvailabilitySlot {
                    clinic: clinic.clone(),
                    doctor: d.clone(),
                    visit: visit.clone(),
                    time,
                };
                if !self.inst.slots.contains(&slot) {
                    self.inst.slots.push(slot);
                }
            }
        }
        Parsed {
            instance: self.inst,
            warnings: self.warnings,
        }
    }
}

const KNOWN: &[&str] = &[
    "patient",
    "disabled",
    "preference",
    "sensory_preference",
    "doctor_preference",
    "appointment_preference",
    "distance",
    "need",
    "needs",
    "patient_interval",
    "doctor",
    "doctor_experience",
    "clinic",
    "accessible",
    "budget",
    "environmental_condition",
    "environment_condition",
    "visit_type",
    "visit_cost",
    "required_sessions",
    "session_interval",
    "availability",
    "current_time",
];

/// Parses fact text into an instance. Referential integrity is not checked
/// here; see [`crate::validate::validate_instance`].
pub fn parse_facts(text: &str, mode: ParseMode) -> Result<Parsed, FactError> {
    let (facts, warnings) = read_facts(text, mode)?;
    let mut b = Builder {
        mode,
        inst: Instance::new(),
        short_availability: Vec::new(),
        warnings,
    };
    for f in &facts {
        b.apply(f)?;
    }
    Ok(b.finish())
}

// ---------------------------------------------------------------- emission

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Out {
    Int(i64),
    /// Written bare when it is a plain lowercase symbol.
    Id(String),
    /// Always quoted.
    Text(String),
    Wild,
}

impl Out {
    fn key(&self) -> Term {
        match self {
            Out::Int(n) => Term::Int(*n),
            Out::Id(s) | Out::Text(s) => Term::Sym(s.clone()),
            Out::Wild => Term::Wildcard,
        }
    }
}

fn is_bare_symbol(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase()) && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn write_quoted(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn id(s: impl fmt::Display) -> Out {
    Out::Id(s.to_string())
}

fn text(s: &str) -> Out {
    Out::Text(s.to_owned())
}

fn int(n: impl Into<i64>) -> Out {
    Out::Int(n.into())
}

/// Canonical fact text: richest arities, one fact per line, sorted by
/// predicate name and then by arguments.
pub fn emit_facts(inst: &Instance) -> String {
    let mut lines: Vec<(&'static str, Vec<Out>)> = Vec::new();
    for p in inst.patients.values() {
        let pid = || id(&p.id);
        if p.declared {
            let mut args = vec![pid(), text(&p.given_name), text(&p.family_name)];
            if let Some(city) = &p.city {
                args.push(text(city));
            }
            lines.push(("patient", args));
        }
        if p.disabled {
            lines.push(("disabled", vec![pid()]));
        }
        for c in &p.clinic_prefs {
            lines.push(("preference", vec![pid(), id(c)]));
        }
        for s in &p.sensory_prefs {
            lines.push(("sensory_preference", vec![pid(), text(s)]));
        }
        for d in &p.doctor_prefs {
            lines.push((
                "doctor_preference",
                vec![
                    pid(),
                    text(&d.doctor_type),
                    text(&d.specialization),
                    int(d.required_years),
                ],
            ));
        }
        for w in &p.time_window_prefs {
            let clinic = w.clinic.as_ref().map_or(Out::Wild, id);
            lines.push(("appointment_preference", vec![pid(), clinic, int(w.start), int(w.end)]));
        }
        for (c, km) in &p.distances {
            lines.push(("distance", vec![pid(), id(c), int(*km)]));
        }
        for n in &p.needs {
            lines.push(("need", vec![pid(), id(&n.visit), int(n.urgency.level())]));
        }
        for (v, i) in &p.session_overrides {
            lines.push(("patient_interval", vec![pid(), id(v), int(i.min_days), int(i.max_days)]));
        }
    }
    for d in inst.doctors.values() {
        if d.declared {
            lines.push((
                "doctor",
                vec![
                    id(&d.id),
                    text(&d.given_name),
                    text(&d.family_name),
                    int(d.age),
                    text(&d.city),
                    text(&d.doctor_type),
                ],
            ));
        }
        for e in &d.experience {
            lines.push((
                "doctor_experience",
                vec![id(&d.id), text(&e.specialization), int(e.years)],
            ));
        }
    }
    for c in inst.clinics.values() {
        if c.declared {
            lines.push(("clinic", vec![id(&c.id), text(c.modality.label())]));
        }
        if c.accessible {
            lines.push(("accessible", vec![id(&c.id)]));
        }
        if let Some(b) = c.budget {
            lines.push(("budget", vec![id(&c.id), Out::Int(b as i64)]));
        }
        for e in &c.env_conditions {
            lines.push((
                "environmental_condition",
                vec![
                    id(&c.id),
                    text(&e.condition_type),
                    int(e.level),
                    int(e.start),
                    int(e.end),
                ],
            ));
        }
    }
    for v in inst.visit_types.values() {
        if v.declared {
            lines.push((
                "visit_type",
                vec![
                    id(&v.id),
                    text(&v.specialty),
                    text(&v.condition_label),
                    int(i64::from(v.chronic)),
                    int(i64::from(v.onsite_only)),
                    int(i64::from(v.in_person)),
                ],
            ));
        }
        if v.cost != 0 {
            lines.push(("visit_cost", vec![id(&v.id), Out::Int(v.cost as i64)]));
        }
        if v.required_sessions != 1 {
            lines.push(("required_sessions", vec![id(&v.id), int(v.required_sessions)]));
        }
        if let Some(i) = v.session_interval {
            lines.push(("session_interval", vec![id(&v.id), int(i.min_days), int(i.max_days)]));
        }
    }
    for s in &inst.slots {
        lines.push((
            "availability",
            vec![id(&s.clinic), id(&s.doctor), id(&s.visit), int(s.time)],
        ));
    }
    if let Some(t) = inst.current_time {
        lines.push(("current_time", vec![int(t)]));
    }

    let mut keyed: Vec<(&str, Vec<Term>, Vec<Out>)> = lines
        .into_iter()
        .map(|(name, args)| (name, args.iter().map(Out::key).collect(), args))
        .collect();
    keyed.sort();
    keyed.dedup_by(|a, b| a.0 == b.0 && a.1 == b.1);

    let mut out = String::new();
    for (name, _, args) in keyed {
        out.push_str(name);
        out.push('(');
        for (i, arg) in args.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            match arg {
                Out::Int(n) => write!(out, "{n}").unwrap(),
                Out::Id(s) if is_bare_symbol(s) => out.push_str(s),
                Out::Id(s) | Out::Text(s) => write_quoted(&mut out, s),
                Out::Wild => out.push('_'),
            }
        }
        out.push_str(").\n");
    }
    out
}

/// Reads a schedule written as `appointment(Patient, Clinic, Doctor, Visit, Time).` facts.
pub fn parse_schedule(text: &str) -> Result<Vec<Appointment>, FactError> {
    let (facts, _) = read_facts(text, ParseMode::Strict)?;
    let mut out = Vec::with_capacity(facts.len());
    for f in &facts {
        if f.name != "appointment" {
            return Err(FactError::UnknownPredicate {
                at: f.at,
                name: f.name.clone(),
                arity: f.args.len(),
            });
        }
        if f.args.len() != 5 {
            return Err(FactError::Arity {
                at: f.at,
                name: f.name.clone(),
                arity: f.args.len(),
                hint: " (expected appointment/5)".into(),
            });
        }
        let a = Args { fact: f };
        out.push(Appointment {
            patient: a.sym(0)?.into(),
            clinic: a.sym(1)?.into(),
            doctor: a.sym(2)?.into(),
            visit: a.sym(3)?.into(),
            time: a.int(4)?,
        });
    }
    out.sort();
    Ok(out)
}

pub fn emit_schedule(appts: &[Appointment]) -> String {
    let mut sorted = appts.to_vec();
    sorted.sort();
    sorted.dedup();
    let mut out = String::new();
    for a in &sorted {
        out.push_str("appointment(");
        for s in [
            a.patient.as_str(),
            a.clinic.as_str(),
            a.doctor.as_str(),
            a.visit.as_str(),
        ] {
            if is_bare_symbol(s) {
                out.push_str(s);
            } else {
                write_quoted(&mut out, s);
            }
            out.push_str(", ");
        }
        let _ = writeln!(out, "{}).", a.time);
    }
    out
}
