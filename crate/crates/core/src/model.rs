//! Values, predicates, events, subscriptions and advertisements, together with
//! the text grammar used to read and print them.
//!
//! ```text
//! event      := "{" pair ("," pair)* "}"
//! pair       := "(" attr "," value ")"
//! sub / adv  := predicate ("AND" predicate)*
//! predicate  := "(" attr op value ")"
//! attr       := bareword | quoted-string
//! value      := quoted-string | integer | "true" | "false"
//! op         := "=" | "!=" | "<" | "<=" | ">" | ">="
//! ```
//!
//! Attribute names and string values are lowercased while parsing, so every
//! entity that leaves this module is already in canonical form.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Errors raised while reading or constructing model entities.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("duplicate attribute `{attribute}` in event")]
    DuplicateAttribute { attribute: String },
    #[error("event has no attribute-value pairs")]
    EmptyEvent,
    #[error("subscription has no predicates")]
    EmptySubscription,
    #[error("advertisement has no predicates")]
    EmptyAdvertisement,
    #[error("operator `{op}` only applies to integers, got {value}")]
    OrderingOnNonInteger { op: RelOp, value: Value },
    #[error("empty string is not a valid {what}")]
    EmptyString { what: &'static str },
}

/// A value carried by an attribute-value pair or compared against by a predicate.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Str(String),
    Int(i64),
    Bool(bool),
}

impl Value {
    /// Builds a string value, lowercasing it.
    pub fn string(s: impl AsRef<str>) -> Value {
        Value::Str(s.as_ref().to_lowercase())
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Str(_) => ValueKind::Str,
            Value::Int(_) => ValueKind::Int,
            Value::Bool(_) => ValueKind::Bool,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Str(s) => write_quoted(f, s),
            Value::Int(i) => write!(f, "{i}"),
            Value::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Str,
    Int,
    Bool,
}

/// Lowercase attribute name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AttributeName(String);

impl AttributeName {
    pub fn new(name: impl AsRef<str>) -> Result<Self, ParseError> {
        let name = name.as_ref().to_lowercase();
        if name.is_empty() {
            return Err(ParseError::EmptyString {
                what: "attribute name",
            });
        }
        Ok(AttributeName(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Builds a name that is already known to be lowercase and non-empty.
    pub(crate) fn from_canonical(name: String) -> Self {
        debug_assert!(!name.is_empty());
        AttributeName(name)
    }
}

impl fmt::Display for AttributeName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if is_bareword(&self.0) {
            f.write_str(&self.0)
        } else {
            write_quoted(f, &self.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pair {
    pub attribute: AttributeName,
    pub value: Value,
}

impl Pair {
    pub fn new(attribute: AttributeName, value: Value) -> Self {
        Pair { attribute, value }
    }
}

impl fmt::Display for Pair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.attribute, self.value)
    }
}

/// A publication: a non-empty list of pairs with distinct attribute names.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Event {
    pairs: Vec<Pair>,
}

impl Event {
    pub fn new(pairs: Vec<Pair>) -> Result<Self, ParseError> {
        if pairs.is_empty() {
            return Err(ParseError::EmptyEvent);
        }
        let mut seen = HashSet::new();
        for pair in &pairs {
            if !seen.insert(pair.attribute.as_str()) {
                return Err(ParseError::DuplicateAttribute {
                    attribute: pair.attribute.as_str().to_owned(),
                });
            }
        }
        Ok(Event { pairs })
    }

    /// Skips the distinct-attribute check. Synonym normalization can map two
    /// raw attribute names onto the same root term.
    pub(crate) fn from_pairs_unchecked(pairs: Vec<Pair>) -> Self {
        Event { pairs }
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn get(&self, attribute: &str) -> Option<&Value> {
        self.pairs
            .iter()
            .find(|p| p.attribute.as_str() == attribute)
            .map(|p| &p.value)
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, pair) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{pair}")?;
        }
        f.write_str("}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl RelOp {
    pub fn is_ordering(self) -> bool {
        matches!(self, RelOp::Lt | RelOp::Le | RelOp::Gt | RelOp::Ge)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            RelOp::Eq => "=",
            RelOp::Ne => "!=",
            RelOp::Lt => "<",
            RelOp::Le => "<=",
            RelOp::Gt => ">",
            RelOp::Ge => ">=",
        }
    }

    /// Evaluates `lhs op rhs`. Values of different kinds never satisfy any
    /// operator, `!=` included, and ordering operators are false on
    /// non-integers.
    pub fn eval(self, lhs: &Value, rhs: &Value) -> bool {
        match (lhs, rhs) {
            (Value::Int(a), Value::Int(b)) => self.holds(a.cmp(b)),
            (Value::Str(a), Value::Str(b)) => self.eq_only(a == b),
            (Value::Bool(a), Value::Bool(b)) => self.eq_only(a == b),
            _ => false,
        }
    }

    fn holds(self, ord: Ordering) -> bool {
        match self {
            RelOp::Eq => ord == Ordering::Equal,
            RelOp::Ne => ord != Ordering::Equal,
            RelOp::Lt => ord == Ordering::Less,
            RelOp::Le => ord != Ordering::Greater,
            RelOp::Gt => ord == Ordering::Greater,
            RelOp::Ge => ord != Ordering::Less,
        }
    }

    fn eq_only(self, equal: bool) -> bool {
        match self {
            RelOp::Eq => equal,
            RelOp::Ne => !equal,
            _ => false,
        }
    }
}

impl fmt::Display for RelOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `(attribute op value)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate {
    pub attribute: AttributeName,
    pub op: RelOp,
    pub value: Value,
}

impl Predicate {
    pub fn new(attribute: AttributeName, op: RelOp, value: Value) -> Result<Self, ParseError> {
        if op.is_ordering() && value.as_int().is_none() {
            return Err(ParseError::OrderingOnNonInteger { op, value });
        }
        Ok(Predicate {
            attribute,
            op,
            value,
        })
    }

    /// Syntactic match of a single pair.
    pub fn matches(&self, pair: &Pair) -> bool {
        pair.attribute == self.attribute && self.op.eval(&pair.value, &self.value)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {} {})", self.attribute, self.op, self.value)
    }
}

/// A conjunction of predicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Subscription {
    pub id: String,
    predicates: Vec<Predicate>,
}

impl Subscription {
    pub fn new(id: impl Into<String>, predicates: Vec<Predicate>) -> Result<Self, ParseError> {
        if predicates.is_empty() {
            return Err(ParseError::EmptySubscription);
        }
        Ok(Subscription {
            id: id.into(),
            predicates,
        })
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub(crate) fn map_predicates(&self, f: impl FnMut(&Predicate) -> Predicate) -> Self {
        Subscription {
            id: self.id.clone(),
            predicates: self.predicates.iter().map(f).collect(),
        }
    }
}

impl fmt::Display for Subscription {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_conjunction(f, &self.predicates)
    }
}

/// Announces future publications. The predicates describe the pair space
/// disjunctively: every pair of an announced event satisfies at least one.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Advertisement {
    pub id: String,
    predicates: Vec<Predicate>,
}

impl Advertisement {
    pub fn new(id: impl Into<String>, predicates: Vec<Predicate>) -> Result<Self, ParseError> {
        if predicates.is_empty() {
            return Err(ParseError::EmptyAdvertisement);
        }
        Ok(Advertisement {
            id: id.into(),
            predicates,
        })
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub(crate) fn map_predicates(&self, f: impl FnMut(&Predicate) -> Predicate) -> Self {
        Advertisement {
            id: self.id.clone(),
            predicates: self.predicates.iter().map(f).collect(),
        }
    }
}

impl fmt::Display for Advertisement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_conjunction(f, &self.predicates)
    }
}

fn write_conjunction(f: &mut fmt::Formatter<'_>, predicates: &[Predicate]) -> fmt::Result {
    for (i, p) in predicates.iter().enumerate() {
        if i > 0 {
            f.write_str(" AND ")?;
        }
        write!(f, "{p}")?;
    }
    Ok(())
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        if c == '"' || c == '\\' {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("\"")
}

fn is_word_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || matches!(c, '_' | '-' | '.')
}

fn is_bareword(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_word_start(c))
        && chars.all(is_word_char)
        // Lowercasing must be a fixed point or the name would not survive a round trip.
        && s.to_lowercase() == s
}

pub fn parse_event(text: &str) -> Result<Event, ParseError> {
    let mut p = Parser::new(text);
    p.expect('{')?;
    let mut pairs = Vec::new();
    if p.eat('}') {
        p.end()?;
        return Err(ParseError::EmptyEvent);
    }
    loop {
        p.expect('(')?;
        let attribute = p.attribute()?;
        p.expect(',')?;
        let value = p.value()?;
        p.expect(')')?;
        pairs.push(Pair { attribute, value });
        if p.eat(',') {
            continue;
        }
        p.expect('}')?;
        break;
    }
    p.end()?;
    Event::new(pairs)
}

pub fn parse_subscription(text: &str) -> Result<Subscription, ParseError> {
    match parse_conjunction(text)? {
        Some(preds) => Subscription::new("", preds),
        None => Err(ParseError::EmptySubscription),
    }
}

pub fn parse_advertisement(text: &str) -> Result<Advertisement, ParseError> {
    match parse_conjunction(text)? {
        Some(preds) => Advertisement::new("", preds),
        None => Err(ParseError::EmptyAdvertisement),
    }
}

pub fn parse_predicate(text: &str) -> Result<Predicate, ParseError> {
    let mut p = Parser::new(text);
    let pred = p.predicate()?;
    p.end()?;
    Ok(pred)
}

fn parse_conjunction(text: &str) -> Result<Option<Vec<Predicate>>, ParseError> {
    let mut p = Parser::new(text);
    p.skip_ws();
    if p.at_end() {
        return Ok(None);
    }
    let mut preds = vec![p.predicate()?];
    while !p.at_end_after_ws() {
        p.keyword("and")?;
        preds.push(p.predicate()?);
    }
    Ok(Some(preds))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser { src, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.bump();
        }
    }

    fn at_end(&self) -> bool {
        self.pos == self.src.len()
    }

    fn at_end_after_ws(&mut self) -> bool {
        self.skip_ws();
        self.at_end()
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos,
            message: message.into(),
        })
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(c) => format!("`{c}`"),
            None => "end of input".to_owned(),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.error(format!("expected `{c}`, found {}", self.found()))
        }
    }

    fn end(&mut self) -> Result<(), ParseError> {
        if self.at_end_after_ws() {
            Ok(())
        } else {
            self.error(format!("unexpected trailing input {}", self.found()))
        }
    }

    fn word(&mut self) -> Option<&'a str> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if is_word_start(c) => {
                self.bump();
            }
            _ => return None,
        }
        while matches!(self.peek(), Some(c) if is_word_char(c)) {
            self.bump();
        }
        Some(&self.src[start..self.pos])
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let start = self.pos;
        match self.word() {
            Some(w) if w.eq_ignore_ascii_case(kw) => Ok(()),
            _ => {
                self.pos = start;
                self.skip_ws();
                self.error(format!(
                    "expected `{}`, found {}",
                    kw.to_uppercase(),
                    self.found()
                ))
            }
        }
    }

    fn quoted(&mut self) -> Result<String, ParseError> {
        // Opening quote already consumed.
        let mut out = String::new();
        loop {
            match self.bump() {
                None => return self.error("unterminated string"),
                Some('"') => return Ok(out),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => out.push(c),
                    _ => return self.error("invalid escape in string"),
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn attribute(&mut self) -> Result<AttributeName, ParseError> {
        self.skip_ws();
        let start = self.pos;
        let raw = if self.eat('"') {
            self.quoted()?
        } else if let Some(w) = self.word() {
            w.to_owned()
        } else {
            return self.error(format!("expected attribute name, found {}", self.found()));
        };
        if raw.is_empty() {
            self.pos = start;
            return self.error("empty attribute name");
        }
        Ok(AttributeName(raw.to_lowercase()))
    }

    fn value(&mut self) -> Result<Value, ParseError> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some('"') => {
                self.bump();
                let s = self.quoted()?;
                if s.is_empty() {
                    self.pos = start;
                    return self.error("empty string value");
                }
                Ok(Value::Str(s.to_lowercase()))
            }
            Some(c) if c == '-' || c.is_ascii_digit() => {
                self.bump();
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.bump();
                }
                let digits = &self.src[start..self.pos];
                match digits.parse::<i64>() {
                    Ok(i) => Ok(Value::Int(i)),
                    Err(_) => {
                        self.pos = start;
                        self.error(format!("invalid integer `{digits}`"))
                    }
                }
            }
            _ => match self.word() {
                Some(w) if w.eq_ignore_ascii_case("true") => Ok(Value::Bool(true)),
                Some(w) if w.eq_ignore_ascii_case("false") => Ok(Value::Bool(false)),
                Some(w) => {
                    self.pos = start;
                    self.error(format!(
                        "expected value, found bare word `{w}` (quote strings)"
                    ))
                }
                None => self.error(format!("expected value, found {}", self.found())),
            },
        }
    }

    fn op(&mut self) -> Result<RelOp, ParseError> {
        self.skip_ws();
        let rest = self.rest();
        let (op, len) = if rest.starts_with("!=") {
            (RelOp::Ne, 2)
        } else if rest.starts_with("<=") {
            (RelOp::Le, 2)
        } else if rest.starts_with(">=") {
            (RelOp::Ge, 2)
        } else if rest.starts_with('=') {
            (RelOp::Eq, 1)
        } else if rest.starts_with('<') {
            (RelOp::Lt, 1)
        } else if rest.starts_with('>') {
            (RelOp::Gt, 1)
        } else {
            return self.error(format!(
                "expected relational operator, found {}",
                self.found()
            ));
        };
        self.pos += len;
        Ok(op)
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        self.expect('(')?;
        let attribute = self.attribute()?;
        let op = self.op()?;
        let value = self.value()?;
        self.expect(')')?;
        Predicate::new(attribute, op, value)
    }
}
