//! Concepts, axioms, TBoxes and their line-oriented text format.
//!
//! The text format is one statement per line:
//!
//! ```text
//! # comment
//! concepts: A, B, C
//! roles: r
//! ax1: A SubClassOf (B and exists r. C)
//! r SubRoleOf s
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

const KEYWORDS: &[&str] = &[
    "top",
    "bottom",
    "not",
    "and",
    "or",
    "exists",
    "forall",
    "SubClassOf",
    "SubRoleOf",
];

/// Prefix reserved for names introduced by the reasoner.
pub const RESERVED_PREFIX: &str = "__n";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Concept {
    Top,
    Bottom,
    Atomic(String),
    Not(Box<Concept>),
    And(Box<Concept>, Box<Concept>),
    Or(Box<Concept>, Box<Concept>),
    Exists(String, Box<Concept>),
    Forall(String, Box<Concept>),
}

impl Concept {
    pub fn atomic(name: impl Into<String>) -> Self {
        Concept::Atomic(name.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(c: Concept) -> Self {
        Concept::Not(Box::new(c))
    }

    pub fn and(a: Concept, b: Concept) -> Self {
        Concept::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Concept, b: Concept) -> Self {
        Concept::Or(Box::new(a), Box::new(b))
    }

    pub fn exists(role: impl Into<String>, c: Concept) -> Self {
        Concept::Exists(role.into(), Box::new(c))
    }

    pub fn forall(role: impl Into<String>, c: Concept) -> Self {
        Concept::Forall(role.into(), Box::new(c))
    }

    pub fn as_atomic(&self) -> Option<&str> {
        match self {
            Concept::Atomic(n) => Some(n),
            _ => None,
        }
    }

    /// True for concepts built from names, top, conjunction and existentials.
    pub fn is_el(&self) -> bool {
        match self {
            Concept::Top | Concept::Atomic(_) => true,
            Concept::And(a, b) => a.is_el() && b.is_el(),
            Concept::Exists(_, c) => c.is_el(),
            _ => false,
        }
    }

    fn is_compound(&self) -> bool {
        !matches!(self, Concept::Top | Concept::Bottom | Concept::Atomic(_))
    }

    pub fn collect_names(&self, concepts: &mut BTreeSet<String>, roles: &mut BTreeSet<String>) {
        match self {
            Concept::Top | Concept::Bottom => {}
            Concept::Atomic(n) => {
                concepts.insert(n.clone());
            }
            Concept::Not(c) => c.collect_names(concepts, roles),
            Concept::And(a, b) | Concept::Or(a, b) => {
                a.collect_names(concepts, roles);
                b.collect_names(concepts, roles);
            }
            Concept::Exists(r, c) | Concept::Forall(r, c) => {
                roles.insert(r.clone());
                c.collect_names(concepts, roles);
            }
        }
    }

    fn write(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        if nested && matches!(self, Concept::Not(_) | Concept::Exists(..) | Concept::Forall(..)) {
            f.write_str("(")?;
            self.write(f, false)?;
            return f.write_str(")");
        }
        match self {
            Concept::Top => f.write_str("top"),
            Concept::Bottom => f.write_str("bottom"),
            Concept::Atomic(n) => f.write_str(n),
            Concept::Not(c) => {
                f.write_str("not ")?;
                c.write(f, true)
            }
            Concept::And(a, b) | Concept::Or(a, b) => {
                let op = if matches!(self, Concept::And(..)) { "and" } else { "or" };
                f.write_str("(")?;
                a.write(f, true)?;
                write!(f, " {op} ")?;
                b.write(f, true)?;
                f.write_str(")")
            }
            Concept::Exists(r, c) | Concept::Forall(r, c) => {
                let q = if matches!(self, Concept::Exists(..)) { "exists" } else { "forall" };
                write!(f, "{q} {r}. ")?;
                c.write(f, c.is_compound())
            }
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write(f, false)
    }
}

/// A logical statement: a concept inclusion or a role inclusion.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Axiom {
    Gci { lhs: Concept, rhs: Concept },
    RoleInclusion { sub: String, sup: String },
}

impl Axiom {
    pub fn gci(lhs: Concept, rhs: Concept) -> Self {
        Axiom::Gci { lhs, rhs }
    }

    /// `A ⊑ B` between two names.
    pub fn named(lhs: &str, rhs: &str) -> Self {
        Axiom::gci(Concept::atomic(lhs), Concept::atomic(rhs))
    }

    /// `A ⊑ ⊥`.
    pub fn unsat(name: &str) -> Self {
        Axiom::gci(Concept::atomic(name), Concept::Bottom)
    }

    pub fn sides(&self) -> Option<(&Concept, &Concept)> {
        match self {
            Axiom::Gci { lhs, rhs } => Some((lhs, rhs)),
            Axiom::RoleInclusion { .. } => None,
        }
    }

    pub fn is_el(&self) -> bool {
        match self {
            Axiom::Gci { lhs, rhs } => lhs.is_el() && rhs.is_el(),
            Axiom::RoleInclusion { .. } => true,
        }
    }

    /// Name of `P` when the axiom reads `P ⊑ ⊥`.
    pub fn unsat_target(&self) -> Option<&str> {
        match self {
            Axiom::Gci { lhs: Concept::Atomic(n), rhs: Concept::Bottom } => Some(n),
            _ => None,
        }
    }

    /// Syntactic tautologies such as `A ⊑ A`, `⊥ ⊑ C` or `C ⊑ ⊤`.
    pub fn is_trivial(&self) -> bool {
        match self {
            Axiom::Gci { lhs, rhs } => lhs == rhs || *lhs == Concept::Bottom || *rhs == Concept::Top,
            Axiom::RoleInclusion { sub, sup } => sub == sup,
        }
    }

    pub fn collect_names(&self, concepts: &mut BTreeSet<String>, roles: &mut BTreeSet<String>) {
        match self {
            Axiom::Gci { lhs, rhs } => {
                lhs.collect_names(concepts, roles);
                rhs.collect_names(concepts, roles);
            }
            Axiom::RoleInclusion { sub, sup } => {
                roles.insert(sub.clone());
                roles.insert(sup.clone());
            }
        }
    }

    pub fn signature(&self) -> Signature {
        let mut sig = Signature::default();
        self.collect_names(&mut sig.concepts, &mut sig.roles);
        sig
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axiom::Gci { lhs, rhs } => write!(f, "{lhs} SubClassOf {rhs}"),
            Axiom::RoleInclusion { sub, sup } => write!(f, "{sub} SubRoleOf {sup}"),
        }
    }
}

impl Serialize for Axiom {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Axiom {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_axiom(&text).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AxiomId(pub u32);

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ax{}", self.0)
    }
}

/// Where a stated axiom came from.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Provenance {
    Ontology(String),
    Alignment(String),
    Added(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StatedAxiom {
    pub id: AxiomId,
    pub axiom: Axiom,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Signature {
    pub concepts: BTreeSet<String>,
    pub roles: BTreeSet<String>,
}

impl Signature {
    pub fn contains_all(&self, other: &Signature) -> bool {
        other.concepts.is_subset(&self.concepts) && other.roles.is_subset(&self.roles)
    }

    pub fn intersects(&self, other: &Signature) -> bool {
        !self.concepts.is_disjoint(&other.concepts) || !self.roles.is_disjoint(&other.roles)
    }

    pub fn extend(&mut self, other: &Signature) {
        self.concepts.extend(other.concepts.iter().cloned());
        self.roles.extend(other.roles.iter().cloned());
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TBoxError {
    #[error("duplicate axiom id {0}")]
    DuplicateId(AxiomId),
}

/// An ordered, immutable collection of stated axioms with a signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TBox {
    axioms: Vec<StatedAxiom>,
    signature: Signature,
}

impl TBox {
    /// Builds a TBox; the signature is the declared one plus every name used.
    pub fn new(axioms: Vec<StatedAxiom>, declared: Signature) -> Result<Self, TBoxError> {
        let mut seen = BTreeSet::new();
        let mut signature = declared;
        for st in &axioms {
            if !seen.insert(st.id) {
                return Err(TBoxError::DuplicateId(st.id));
            }
            st.axiom.collect_names(&mut signature.concepts, &mut signature.roles);
        }
        Ok(TBox { axioms, signature })
    }

    /// Numbers axioms from 1 and marks them as coming from `ontology`.
    pub fn from_axioms(axioms: impl IntoIterator<Item = Axiom>, ontology: &str) -> Self {
        let stated = axioms
            .into_iter()
            .enumerate()
            .map(|(i, axiom)| StatedAxiom {
                id: AxiomId(i as u32 + 1),
                axiom,
                provenance: Provenance::Ontology(ontology.to_string()),
            })
            .collect();
        TBox::new(stated, Signature::default()).expect("sequential ids are unique")
    }

    pub fn empty() -> Self {
        TBox { axioms: Vec::new(), signature: Signature::default() }
    }

    pub fn axioms(&self) -> &[StatedAxiom] {
        &self.axioms
    }

    pub fn len(&self) -> usize {
        self.axioms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.axioms.is_empty()
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn concept_names(&self) -> &BTreeSet<String> {
        &self.signature.concepts
    }

    pub fn role_names(&self) -> &BTreeSet<String> {
        &self.signature.roles
    }

    pub fn ids(&self) -> impl Iterator<Item = AxiomId> + '_ {
        self.axioms.iter().map(|s| s.id)
    }

    pub fn get(&self, id: AxiomId) -> Option<&StatedAxiom> {
        self.axioms.iter().find(|s| s.id == id)
    }

    pub fn find(&self, axiom: &Axiom) -> Option<&StatedAxiom> {
        self.axioms.iter().find(|s| &s.axiom == axiom)
    }

    pub fn contains(&self, axiom: &Axiom) -> bool {
        self.find(axiom).is_some()
    }

    pub fn next_id(&self) -> AxiomId {
        AxiomId(self.axioms.iter().map(|s| s.id.0).max().unwrap_or(0) + 1)
    }

    /// The axioms whose ids are in `keep`, with the signature unchanged.
    pub fn restrict(&self, keep: &BTreeSet<AxiomId>) -> TBox {
        TBox {
            axioms: self.axioms.iter().filter(|s| keep.contains(&s.id)).cloned().collect(),
            signature: self.signature.clone(),
        }
    }

    /// The axioms whose ids are not in `drop`, with the signature unchanged.
    pub fn without(&self, drop: &BTreeSet<AxiomId>) -> TBox {
        TBox {
            axioms: self.axioms.iter().filter(|s| !drop.contains(&s.id)).cloned().collect(),
            signature: self.signature.clone(),
        }
    }

    /// Appends axioms not already stated, with fresh ids.
    pub fn with_added<'a>(&self, extra: impl IntoIterator<Item = &'a Axiom>, provenance: &Provenance) -> TBox {
        let mut out = self.clone();
        let mut next = self.next_id().0;
        for axiom in extra {
            if out.contains(axiom) {
                continue;
            }
            axiom.collect_names(&mut out.signature.concepts, &mut out.signature.roles);
            out.axioms.push(StatedAxiom { id: AxiomId(next), axiom: axiom.clone(), provenance: provenance.clone() });
            next += 1;
        }
        out
    }

    /// Same axioms with additional declared names.
    pub fn with_signature(&self, extra: &Signature) -> TBox {
        let mut out = self.clone();
        out.signature.extend(extra);
        out
    }

    pub fn logical_axioms(&self) -> impl Iterator<Item = &Axiom> + '_ {
        self.axioms.iter().map(|s| &s.axiom)
    }

    /// True when every axiom is in the EL fragment.
    pub fn is_el(&self) -> bool {
        self.axioms.iter().all(|s| s.axiom.is_el())
    }

    /// Canonical text: sorted headers, then one axiom per line without labels.
    pub fn to_canonical_string(&self) -> String {
        let mut out = String::new();
        let join = |names: &BTreeSet<String>| names.iter().cloned().collect::<Vec<_>>().join(", ");
        if !self.signature.concepts.is_empty() {
            out.push_str(&format!("concepts: {}\n", join(&self.signature.concepts)));
        }
        if !self.signature.roles.is_empty() {
            out.push_str(&format!("roles: {}\n", join(&self.signature.roles)));
        }
        for st in &self.axioms {
            out.push_str(&st.axiom.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: duplicate declaration of {label}")]
    DuplicateDeclaration { line: usize, label: String },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    LParen,
    RParen,
    Dot,
    Comma,
    Colon,
}

struct Lexed {
    toks: Vec<(Tok, usize)>,
    end_col: usize,
}

fn lex(line_no: usize, text: &str) -> Result<Lexed, ParseError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            ' ' | '\t' | '\r' => i += 1,
            '#' => break,
            '(' | ')' | '.' | ',' | ':' => {
                toks.push((
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '.' => Tok::Dot,
                        ',' => Tok::Comma,
                        _ => Tok::Colon,
                    },
                    col,
                ));
                i += 1;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '-') {
                    i += 1;
                }
                toks.push((Tok::Name(chars[start..i].iter().collect()), col));
            }
            other => {
                return Err(ParseError::Syntax {
                    line: line_no,
                    column: col,
                    message: format!("unexpected character {other:?}"),
                })
            }
        }
    }
    Ok(Lexed { toks, end_col: chars.len() + 1 })
}

struct Cursor<'a> {
    line: usize,
    lexed: &'a Lexed,
    pos: usize,
}

impl Cursor<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.lexed.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.lexed.toks.get(self.pos).map(|(_, c)| *c).unwrap_or(self.lexed.end_col)
    }

    fn err(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax { line: self.line, column: self.col(), message: message.into() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.lexed.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Name(n)) if n == kw)
    }

    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Name(n)) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            Some(Tok::Name(n)) => Err(self.err(format!("reserved word {n:?} cannot be used as {what}"))),
            _ => Err(self.err(format!("expected {what}"))),
        }
    }

    fn concept(&mut self) -> Result<Concept, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Name(n)) => match n.as_str() {
                "top" => {
                    self.pos += 1;
                    Ok(Concept::Top)
                }
                "bottom" => {
                    self.pos += 1;
                    Ok(Concept::Bottom)
                }
                "not" => {
                    self.pos += 1;
                    Ok(Concept::not(self.concept()?))
                }
                "exists" | "forall" => {
                    self.pos += 1;
                    let role = self.name("a role name")?;
                    self.expect(Tok::Dot, "'.' after role name")?;
                    let filler = self.concept()?;
                    Ok(if n == "exists" { Concept::exists(role, filler) } else { Concept::forall(role, filler) })
                }
                _ => Ok(Concept::Atomic(self.name("a concept name")?)),
            },
            Some(Tok::LParen) => {
                self.pos += 1;
                let mut acc = self.concept()?;
                let mut op: Option<&'static str> = None;
                loop {
                    let this = if self.at_keyword("and") {
                        "and"
                    } else if self.at_keyword("or") {
                        "or"
                    } else {
                        break;
                    };
                    if op.is_some_and(|o| o != this) {
                        return Err(self.err("mixed 'and'/'or' need explicit parentheses"));
                    }
                    op = Some(this);
                    self.pos += 1;
                    let rhs = self.concept()?;
                    acc = if this == "and" { Concept::and(acc, rhs) } else { Concept::or(acc, rhs) };
                }
                self.expect(Tok::RParen, "')'")?;
                Ok(acc)
            }
            _ => Err(self.err("expected a concept")),
        }
    }

    fn axiom(&mut self) -> Result<Axiom, ParseError> {
        let is_ri = matches!(self.lexed.toks.get(self.pos + 1), Some((Tok::Name(n), _)) if n == "SubRoleOf");
        let ax = if is_ri {
            let sub = self.name("a role name")?;
            self.pos += 1;
            let sup = self.name("a role name")?;
            Axiom::RoleInclusion { sub, sup }
        } else {
            let lhs = self.concept()?;
            if !self.at_keyword("SubClassOf") {
                return Err(self.err("expected 'SubClassOf'"));
            }
            self.pos += 1;
            let rhs = self.concept()?;
            Axiom::Gci { lhs, rhs }
        };
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(ax)
    }
}

/// Parses a single axiom such as `A SubClassOf exists r. B`.
pub fn parse_axiom(text: &str) -> Result<Axiom, ParseError> {
    let lexed = lex(1, text)?;
    if lexed.toks.is_empty() {
        return Err(ParseError::Syntax { line: 1, column: 1, message: "empty axiom".into() });
    }
    Cursor { line: 1, lexed: &lexed, pos: 0 }.axiom()
}

/// Parses a single concept expression.
pub fn parse_concept(text: &str) -> Result<Concept, ParseError> {
    let lexed = lex(1, text)?;
    let mut cur = Cursor { line: 1, lexed: &lexed, pos: 0 };
    let c = cur.concept()?;
    if cur.peek().is_some() {
        return Err(cur.err("unexpected trailing input"));
    }
    Ok(c)
}

/// Parses a TBox; axioms are numbered from 1 in file order.
pub fn parse_tbox(text: &str) -> Result<TBox, ParseError> {
    parse_tbox_as(text, "main")
}

/// Like [`parse_tbox`], recording `ontology` as provenance.
pub fn parse_tbox_as(text: &str, ontology: &str) -> Result<TBox, ParseError> {
    let mut declared = Signature::default();
    let mut axioms = Vec::new();
    let mut labels: BTreeMap<String, usize> = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let lexed = lex(line, raw)?;
        if lexed.toks.is_empty() {
            continue;
        }
        let mut cur = Cursor { line, lexed: &lexed, pos: 0 };
        let header = match (lexed.toks.first(), lexed.toks.get(1)) {
            (Some((Tok::Name(n), _)), Some((Tok::Colon, _))) => Some(n.clone()),
            _ => None,
        };
        if let Some(word) = header {
            cur.pos = 2;
            if word == "concepts" || word == "roles" {
                let target = if word == "concepts" { &mut declared.concepts } else { &mut declared.roles };
                while cur.peek().is_some() {
                    target.insert(cur.name("a name")?);
                    match cur.next() {
                        None => break,
                        Some(Tok::Comma) => {}
                        Some(_) => {
                            cur.pos -= 1;
                            return Err(cur.err("expected ','"));
                        }
                    }
                }
                continue;
            }
            if labels.insert(word.clone(), line).is_some() {
                return Err(ParseError::DuplicateDeclaration { line, label: word });
            }
            let position = axioms.len() + 1;
            if word != format!("ax{position}") {
                return Err(ParseError::Syntax {
                    line,
                    column: 1,
                    message: format!("label {word:?} does not match axiom position ax{position}"),
                });
            }
        }
        let axiom = cur.axiom()?;
        for name in axiom.signature().concepts.iter().chain(axiom.signature().roles.iter()) {
            if name.starts_with(RESERVED_PREFIX) {
                return Err(ParseError::Syntax { line, column: 1, message: format!("name {name:?} uses a reserved prefix") });
            }
        }
        axioms.push(StatedAxiom {
            id: AxiomId(axioms.len() as u32 + 1),
            axiom,
            provenance: Provenance::Ontology(ontology.to_string()),
        });
    }
    Ok(TBox::new(axioms, declared).expect("sequential ids are unique"))
}

/// Parses a list of axioms, one per line, ignoring blanks and comments.
pub fn parse_axiom_list(text: &str) -> Result<Vec<Axiom>, ParseError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lexed = lex(idx + 1, raw)?;
        if lexed.toks.is_empty() {
            continue;
        }
        out.push(Cursor { line: idx + 1, lexed: &lexed, pos: 0 }.axiom()?);
    }
    Ok(out)
}

pub fn serialize_tbox(t: &TBox) -> String {
    t.to_canonical_string()
}

pub fn signature(t: &TBox) -> &Signature {
    t.signature()
}
