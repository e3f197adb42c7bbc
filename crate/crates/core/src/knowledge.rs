//! Semantic knowledge: synonym groups, a concept hierarchy (a forest shared by
//! attribute and value terms) and mapping functions.
//!
//! A [`KnowledgeBase`] is validated once at load time and is immutable
//! afterwards. The JSON document format is:
//!
//! ```json
//! {
//!   "synonyms":  [{"root": "vehicle", "members": ["car", "automobile"]}],
//!   "hierarchy": [{"child": "book", "parent": "printed material"}],
//!   "mappings":  [{"name": "f1",
//!                  "inputs": ["work experience", "graduation date"],
//!                  "guard": "(\"work experience\" = true)",
//!                  "output": "professional experience",
//!                  "body": {"kind": "years_since", "input": "graduation date"}}],
//!   "reference_year": 2003
//! }
//! ```
//!
//! Mapping bodies are `rename {input}`, `const {value}`,
//! `linear {input, scale, offset}` and `years_since {input}`.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{parse_predicate, AttributeName, Event, Pair, ParseError, Predicate, Value};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KnowledgeError {
    #[error("malformed knowledge document: {0}")]
    Document(String),
    #[error("term `{0}` must be non-empty and lowercase")]
    BadTerm(String),
    #[error("term `{0}` appears in more than one synonym group")]
    DuplicateTerm(String),
    #[error("synonym root `{0}` is also listed among its members")]
    RootInMembers(String),
    #[error("`{term}` is a synonym of `{root}`; use the root term")]
    NonRootTerm { term: String, root: String },
    #[error("`{child}` has two parents: `{first}` and `{second}`")]
    MultipleParents {
        child: String,
        first: String,
        second: String,
    },
    #[error("concept hierarchy has a cycle through `{0}`")]
    Cycle(String),
    #[error("mapping `{name}`: unknown body kind `{kind}`")]
    UnknownBodyKind { name: String, kind: String },
    #[error("mapping `{name}`: {reason}")]
    InvalidMapping { name: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MappingError {
    #[error("arithmetic overflow evaluating mapping `{0}`")]
    Overflow(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymGroup {
    pub root: String,
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappingBody {
    Rename {
        input: AttributeName,
    },
    Const {
        value: Value,
    },
    Linear {
        input: AttributeName,
        scale: i64,
        offset: i64,
    },
    YearsSince {
        input: AttributeName,
    },
}

/// An expert-specified rule deriving one new pair from existing ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MappingFunction {
    pub name: String,
    pub inputs: Vec<AttributeName>,
    pub guard: Option<Predicate>,
    pub output: AttributeName,
    pub body: MappingBody,
}

impl MappingFunction {
    /// Evaluates the function against a pair list. The first pair carrying an
    /// attribute supplies its value. Returns `None` when an input is missing,
    /// the guard fails, or an arithmetic body meets a non-integer input.
    pub fn apply(&self, pairs: &[Pair], reference_year: i64) -> Result<Option<Pair>, MappingError> {
        let lookup = |attr: &AttributeName| {
            pairs
                .iter()
                .find(|p| p.attribute == *attr)
                .map(|p| &p.value)
        };
        if self.inputs.iter().any(|i| lookup(i).is_none()) {
            return Ok(None);
        }
        if let Some(guard) = &self.guard {
            match lookup(&guard.attribute) {
                Some(v) if guard.op.eval(v, &guard.value) => {}
                _ => return Ok(None),
            }
        }
        let overflow = || MappingError::Overflow(self.name.clone());
        let value = match &self.body {
            MappingBody::Rename { input } => lookup(input).cloned(),
            MappingBody::Const { value } => Some(value.clone()),
            MappingBody::Linear {
                input,
                scale,
                offset,
            } => match lookup(input) {
                Some(Value::Int(x)) => Some(Value::Int(
                    x.checked_mul(*scale)
                        .and_then(|v| v.checked_add(*offset))
                        .ok_or_else(overflow)?,
                )),
                _ => None,
            },
            MappingBody::YearsSince { input } => match lookup(input) {
                Some(Value::Int(x)) => Some(Value::Int(
                    reference_year.checked_sub(*x).ok_or_else(overflow)?,
                )),
                _ => None,
            },
        };
        Ok(value.map(|v| Pair::new(self.output.clone(), v)))
    }
}

pub fn apply_mapping(
    f: &MappingFunction,
    event: &Event,
    reference_year: i64,
) -> Result<Option<Pair>, MappingError> {
    f.apply(event.pairs(), reference_year)
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    synonyms: Vec<SynonymGroup>,
    edges: Vec<(String, String)>,
    mappings: Vec<MappingFunction>,
    reference_year: i64,
    root_of: HashMap<String, String>,
    parent: HashMap<String, String>,
    children: HashMap<String, Vec<String>>,
}

impl KnowledgeBase {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(
        synonyms: Vec<SynonymGroup>,
        edges: Vec<(String, String)>,
        mappings: Vec<MappingFunction>,
        reference_year: i64,
    ) -> Result<Self, KnowledgeError> {
        let mut root_of = HashMap::new();
        let mut seen = HashSet::new();
        for group in &synonyms {
            check_term(&group.root)?;
            if !seen.insert(group.root.as_str()) {
                return Err(KnowledgeError::DuplicateTerm(group.root.clone()));
            }
            for m in &group.members {
                check_term(m)?;
                if *m == group.root {
                    return Err(KnowledgeError::RootInMembers(m.clone()));
                }
                if !seen.insert(m.as_str()) {
                    return Err(KnowledgeError::DuplicateTerm(m.clone()));
                }
                root_of.insert(m.clone(), group.root.clone());
            }
        }
        let require_root = |term: &str| -> Result<(), KnowledgeError> {
            check_term(term)?;
            match root_of.get(term) {
                Some(root) => Err(KnowledgeError::NonRootTerm {
                    term: term.to_owned(),
                    root: root.clone(),
                }),
                None => Ok(()),
            }
        };

        let mut parent: HashMap<String, String> = HashMap::new();
        let mut unique_edges = Vec::new();
        for (child, par) in &edges {
            require_root(child)?;
            require_root(par)?;
            if child == par {
                return Err(KnowledgeError::Cycle(child.clone()));
            }
            match parent.get(child) {
                Some(existing) if existing == par => continue,
                Some(existing) => {
                    return Err(KnowledgeError::MultipleParents {
                        child: child.clone(),
                        first: existing.clone(),
                        second: par.clone(),
                    })
                }
                None => {
                    parent.insert(child.clone(), par.clone());
                    unique_edges.push((child.clone(), par.clone()));
                }
            }
        }
        // With single parents, a cycle shows up as a walk that revisits a term.
        for start in parent.keys() {
            let mut visited = HashSet::new();
            let mut cur = start.as_str();
            while let Some(p) = parent.get(cur) {
                if !visited.insert(cur) {
                    return Err(KnowledgeError::Cycle(cur.to_owned()));
                }
                cur = p;
            }
        }
        let mut children: HashMap<String, Vec<String>> = HashMap::new();
        for (c, p) in &unique_edges {
            children.entry(p.clone()).or_default().push(c.clone());
        }
        for list in children.values_mut() {
            list.sort();
        }

        let mut names = HashSet::new();
        for f in &mappings {
            let invalid = |reason: String| KnowledgeError::InvalidMapping {
                name: f.name.clone(),
                reason,
            };
            if f.name.is_empty() {
                return Err(invalid("empty name".into()));
            }
            if !names.insert(f.name.as_str()) {
                return Err(invalid("duplicate mapping name".into()));
            }
            if f.inputs.is_empty() {
                return Err(invalid("inputs must be non-empty".into()));
            }
            let mut distinct = HashSet::new();
            for i in &f.inputs {
                require_root(i.as_str())?;
                if !distinct.insert(i) {
                    return Err(invalid(format!("input `{i}` listed twice")));
                }
            }
            require_root(f.output.as_str())?;
            if f.inputs.contains(&f.output) {
                return Err(invalid("output must not be one of the inputs".into()));
            }
            if let Some(g) = &f.guard {
                if !f.inputs.contains(&g.attribute) {
                    return Err(invalid(format!(
                        "guard attribute `{}` is not an input",
                        g.attribute
                    )));
                }
                if let Value::Str(s) = &g.value {
                    require_root(s)?;
                }
            }
            match &f.body {
                MappingBody::Rename { input }
                | MappingBody::Linear { input, .. }
                | MappingBody::YearsSince { input } => {
                    if !f.inputs.contains(input) {
                        return Err(invalid(format!("body input `{input}` is not an input")));
                    }
                }
                MappingBody::Const { value } => {
                    if let Value::Str(s) = value {
                        require_root(s)?;
                    }
                }
            }
        }

        Ok(KnowledgeBase {
            synonyms,
            edges: unique_edges,
            mappings,
            reference_year,
            root_of,
            parent,
            children,
        })
    }

    /// Canonical representative of `term`'s synonym group, or `term` itself.
    pub fn root_term<'a>(&'a self, term: &'a str) -> &'a str {
        self.root_of.get(term).map(String::as_str).unwrap_or(term)
    }

    pub fn parent(&self, term: &str) -> Option<&str> {
        self.parent.get(term).map(String::as_str)
    }

    pub fn has_parent(&self, term: &str) -> bool {
        self.parent.contains_key(term)
    }

    /// Strict ancestors of `term`, nearest first.
    pub fn ancestors<'a>(&'a self, term: &str) -> Vec<&'a str> {
        let mut out = Vec::new();
        let mut cur = self.parent(term);
        while let Some(p) = cur {
            out.push(p);
            cur = self.parent(p);
        }
        out
    }

    pub fn depth(&self, term: &str) -> usize {
        self.ancestors(term).len()
    }

    pub fn is_descendant_or_equal(&self, t1: &str, t2: &str) -> bool {
        if t1 == t2 {
            return true;
        }
        let mut cur = self.parent(t1);
        while let Some(p) = cur {
            if p == t2 {
                return true;
            }
            cur = self.parent(p);
        }
        false
    }

    /// Either term is a descendant-or-equal of the other.
    pub fn comparable(&self, t1: &str, t2: &str) -> bool {
        self.is_descendant_or_equal(t1, t2) || self.is_descendant_or_equal(t2, t1)
    }

    pub fn children(&self, term: &str) -> &[String] {
        self.children.get(term).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has_children(&self, term: &str) -> bool {
        self.children.contains_key(term)
    }

    /// `term` followed by all its descendants, depth first in name order.
    pub fn subtree<'a>(&'a self, term: &'a str) -> Vec<&'a str> {
        let mut out = vec![term];
        let mut i = 0;
        while i < out.len() {
            let t = out[i];
            out.extend(self.children(t).iter().map(String::as_str));
            i += 1;
        }
        out
    }

    /// Number of distinct surface names normalizing to `root`.
    pub fn name_count(&self, root: &str) -> usize {
        1 + self
            .synonyms
            .iter()
            .find(|g| g.root == root)
            .map_or(0, |g| g.members.len())
    }

    pub fn synonym_groups(&self) -> &[SynonymGroup] {
        &self.synonyms
    }

    /// Hierarchy edges as `(child, parent)`, duplicates removed.
    pub fn hierarchy_edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn mappings(&self) -> &[MappingFunction] {
        &self.mappings
    }

    pub fn reference_year(&self) -> i64 {
        self.reference_year
    }

    /// A copy with every mapping function removed.
    pub fn without_mappings(&self) -> KnowledgeBase {
        KnowledgeBase {
            mappings: Vec::new(),
            ..self.clone()
        }
    }

    pub fn to_document(&self) -> KnowledgeDocument {
        KnowledgeDocument {
            synonyms: self
                .synonyms
                .iter()
                .map(|g| SynonymDoc {
                    root: g.root.clone(),
                    members: g.members.clone(),
                })
                .collect(),
            hierarchy: self
                .edges
                .iter()
                .map(|(c, p)| EdgeDoc {
                    child: c.clone(),
                    parent: p.clone(),
                })
                .collect(),
            mappings: self.mappings.iter().map(mapping_to_doc).collect(),
            reference_year: Some(self.reference_year),
        }
    }
}

fn check_term(term: &str) -> Result<(), KnowledgeError> {
    if term.is_empty() || term.to_lowercase() != term {
        return Err(KnowledgeError::BadTerm(term.to_owned()));
    }
    Ok(())
}

/// Serialized form of a knowledge base.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeDocument {
    #[serde(default)]
    pub synonyms: Vec<SynonymDoc>,
    #[serde(default)]
    pub hierarchy: Vec<EdgeDoc>,
    #[serde(default)]
    pub mappings: Vec<MappingDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_year: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynonymDoc {
    pub root: String,
    #[serde(default)]
    pub members: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeDoc {
    pub child: String,
    pub parent: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingDoc {
    pub name: String,
    #[serde(default)]
    pub inputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guard: Option<String>,
    pub output: String,
    /// `{"kind": ..., ...}`; decoded by hand so an unknown kind gets its own error.
    pub body: serde_json::Value,
}

impl KnowledgeDocument {
    pub fn into_knowledge(self) -> Result<KnowledgeBase, KnowledgeError> {
        let synonyms = self
            .synonyms
            .into_iter()
            .map(|g| SynonymGroup {
                root: g.root,
                members: g.members,
            })
            .collect();
        let edges = self
            .hierarchy
            .into_iter()
            .map(|e| (e.child, e.parent))
            .collect();
        let mappings = self
            .mappings
            .into_iter()
            .map(mapping_from_doc)
            .collect::<Result<Vec<_>, _>>()?;
        let needs_year = mappings
            .iter()
            .any(|m| matches!(m.body, MappingBody::YearsSince { .. }));
        let reference_year = match self.reference_year {
            Some(y) => y,
            None if needs_year => {
                return Err(KnowledgeError::Document(
                    "reference_year is required by years_since mappings".into(),
                ))
            }
            None => 0,
        };
        KnowledgeBase::new(synonyms, edges, mappings, reference_year)
    }
}

pub fn load_knowledge(document: &[u8]) -> Result<KnowledgeBase, KnowledgeError> {
    let doc: KnowledgeDocument =
        serde_json::from_slice(document).map_err(|e| KnowledgeError::Document(e.to_string()))?;
    doc.into_knowledge()
}

fn mapping_from_doc(doc: MappingDoc) -> Result<MappingFunction, KnowledgeError> {
    let name = doc.name;
    let invalid = |reason: String| KnowledgeError::InvalidMapping {
        name: name.clone(),
        reason,
    };
    let attr = |s: &str| {
        check_term(s)?;
        AttributeName::new(s).map_err(|e| invalid(e.to_string()))
    };
    let inputs = doc
        .inputs
        .iter()
        .map(|s| attr(s))
        .collect::<Result<Vec<_>, _>>()?;
    let output = attr(&doc.output)?;
    let guard = doc
        .guard
        .as_deref()
        .map(parse_predicate)
        .transpose()
        .map_err(|e: ParseError| invalid(format!("guard: {e}")))?;

    let body = doc
        .body
        .as_object()
        .ok_or_else(|| invalid("body must be an object".into()))?;
    let kind = body
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| invalid("body.kind must be a string".into()))?
        .to_lowercase();
    let field = |key: &str| {
        body.get(key)
            .ok_or_else(|| invalid(format!("body.{key} is missing")))
    };
    let input = || -> Result<AttributeName, KnowledgeError> {
        let v = field("input")?;
        attr(
            v.as_str()
                .ok_or_else(|| invalid("body.input must be a string".into()))?,
        )
    };
    let int = |key: &str| -> Result<i64, KnowledgeError> {
        field(key)?
            .as_i64()
            .ok_or_else(|| invalid(format!("body.{key} must be an integer")))
    };
    let body = match kind.as_str() {
        "rename" => MappingBody::Rename { input: input()? },
        "const" => MappingBody::Const {
            value: match field("value")? {
                serde_json::Value::String(s) if !s.is_empty() => Value::string(s),
                serde_json::Value::Bool(b) => Value::Bool(*b),
                v => Value::Int(v.as_i64().ok_or_else(|| {
                    invalid("body.value must be a string, integer or boolean".into())
                })?),
            },
        },
        "linear" => MappingBody::Linear {
            input: input()?,
            scale: int("scale")?,
            offset: int("offset")?,
        },
        "years_since" => MappingBody::YearsSince { input: input()? },
        other => {
            return Err(KnowledgeError::UnknownBodyKind {
                name,
                kind: other.to_owned(),
            })
        }
    };
    Ok(MappingFunction {
        name,
        inputs,
        guard,
        output,
        body,
    })
}

fn mapping_to_doc(f: &MappingFunction) -> MappingDoc {
    use serde_json::json;
    let body = match &f.body {
        MappingBody::Rename { input } => json!({"kind": "rename", "input": input.as_str()}),
        MappingBody::Const { value } => {
            let v = match value {
                Value::Str(s) => json!(s),
                Value::Int(i) => json!(i),
                Value::Bool(b) => json!(b),
            };
            json!({"kind": "const", "value": v})
        }
        MappingBody::Linear {
            input,
            scale,
            offset,
        } => {
            json!({"kind": "linear", "input": input.as_str(), "scale": scale, "offset": offset})
        }
        MappingBody::YearsSince { input } => {
            json!({"kind": "years_since", "input": input.as_str()})
        }
    };
    MappingDoc {
        name: f.name.clone(),
        inputs: f.inputs.iter().map(|i| i.as_str().to_owned()).collect(),
        guard: f.guard.as_ref().map(|g| g.to_string()),
        output: f.output.as_str().to_owned(),
        body,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_event;
    use proptest::prelude::*;

    fn kb(json: &str) -> Result<KnowledgeBase, KnowledgeError> {
        load_knowledge(json.as_bytes())
    }

    const BOOKS: &str = r#"{
        "synonyms": [{"root": "vehicle", "members": ["car", "automobile"]}],
        "hierarchy": [
            {"child": "book", "parent": "printed material"},
            {"child": "encyclopedia", "parent": "book"},
            {"child": "dictionary", "parent": "book"},
            {"child": "crocodiles", "parent": "reptiles"}
        ]
    }"#;

    const PROFESSOR: &str = r#"{
        "synonyms": [{"root": "university", "members": ["school"]}],
        "mappings": [{
            "name": "f1",
            "inputs": ["work experience", "graduation date"],
            "guard": "(\"work experience\" = true)",
            "output": "professional experience",
            "body": {"kind": "years_since", "input": "graduation date"}
        }],
        "reference_year": 2003
    }"#;

    #[test]
    fn synonyms_resolve_to_root() {
        let kb = kb(BOOKS).unwrap();
        assert_eq!(kb.root_term("car"), "vehicle");
        assert_eq!(kb.root_term("automobile"), "vehicle");
        assert_eq!(kb.root_term("vehicle"), "vehicle");
        assert_eq!(kb.root_term("price"), "price");
        assert_eq!(kb.name_count("vehicle"), 3);
        assert_eq!(kb.name_count("price"), 1);
    }

    #[test]
    fn hierarchy_queries() {
        let kb = kb(BOOKS).unwrap();
        assert_eq!(
            kb.ancestors("encyclopedia"),
            vec!["book", "printed material"]
        );
        assert_eq!(kb.ancestors("crocodiles"), vec!["reptiles"]);
        assert!(kb.ancestors("price").is_empty());
        assert!(kb.ancestors("printed material").is_empty());
        assert!(kb.is_descendant_or_equal("encyclopedia", "book"));
        assert!(!kb.is_descendant_or_equal("book", "encyclopedia"));
        assert!(kb.is_descendant_or_equal("book", "book"));
        assert_eq!(
            kb.subtree("book"),
            vec!["book", "dictionary", "encyclopedia"]
        );
        assert_eq!(kb.depth("encyclopedia"), 2);
    }

    #[test]
    fn load_errors() {
        let cycle =
            r#"{"hierarchy": [{"child": "a", "parent": "b"}, {"child": "b", "parent": "a"}]}"#;
        assert!(matches!(kb(cycle), Err(KnowledgeError::Cycle(_))));
        let self_loop = r#"{"hierarchy": [{"child": "a", "parent": "a"}]}"#;
        assert!(matches!(kb(self_loop), Err(KnowledgeError::Cycle(_))));
        let long_cycle = r#"{"hierarchy": [{"child": "a", "parent": "b"}, {"child": "b", "parent": "c"},
            {"child": "c", "parent": "a"}]}"#;
        assert!(matches!(kb(long_cycle), Err(KnowledgeError::Cycle(_))));
        let two_parents =
            r#"{"hierarchy": [{"child": "a", "parent": "b"}, {"child": "a", "parent": "c"}]}"#;
        assert!(matches!(
            kb(two_parents),
            Err(KnowledgeError::MultipleParents { .. })
        ));
        let twice =
            r#"{"synonyms": [{"root": "x", "members": ["y"]}, {"root": "z", "members": ["y"]}]}"#;
        assert!(matches!(kb(twice), Err(KnowledgeError::DuplicateTerm(_))));
        let root_member = r#"{"synonyms": [{"root": "x", "members": ["x"]}]}"#;
        assert!(matches!(
            kb(root_member),
            Err(KnowledgeError::RootInMembers(_))
        ));
        let non_root = r#"{"synonyms": [{"root": "vehicle", "members": ["car"]}],
            "hierarchy": [{"child": "car", "parent": "thing"}]}"#;
        assert!(matches!(
            kb(non_root),
            Err(KnowledgeError::NonRootTerm { .. })
        ));
        let upper = r#"{"hierarchy": [{"child": "Book", "parent": "thing"}]}"#;
        assert!(matches!(kb(upper), Err(KnowledgeError::BadTerm(_))));
        let unknown_kind = r#"{"mappings": [{"name": "m", "inputs": ["a"], "output": "b",
            "body": {"kind": "sqrt", "input": "a"}}]}"#;
        assert!(matches!(
            kb(unknown_kind),
            Err(KnowledgeError::UnknownBodyKind { .. })
        ));
        let no_inputs = r#"{"mappings": [{"name": "m", "inputs": [], "output": "currency",
            "body": {"kind": "const", "value": "cad"}}]}"#;
        assert!(matches!(
            kb(no_inputs),
            Err(KnowledgeError::InvalidMapping { .. })
        ));
        let output_is_input = r#"{"mappings": [{"name": "m", "inputs": ["a"], "output": "a",
            "body": {"kind": "rename", "input": "a"}}]}"#;
        assert!(matches!(
            kb(output_is_input),
            Err(KnowledgeError::InvalidMapping { .. })
        ));
        let no_year = r#"{"mappings": [{"name": "m", "inputs": ["a"], "output": "b",
            "body": {"kind": "years_since", "input": "a"}}]}"#;
        assert!(matches!(kb(no_year), Err(KnowledgeError::Document(_))));
        assert!(matches!(kb("{"), Err(KnowledgeError::Document(_))));
        assert!(matches!(
            kb(r#"{"extra": 1}"#),
            Err(KnowledgeError::Document(_))
        ));
    }

    #[test]
    fn years_since_with_guard() {
        let kb = kb(PROFESSOR).unwrap();
        let f = &kb.mappings()[0];
        let e = parse_event(
            r#"{(school, "Y"), (degree, "PhD"), ("work experience", true), ("graduation date", 1990)}"#,
        )
        .unwrap();
        let out = apply_mapping(f, &e, kb.reference_year()).unwrap().unwrap();
        assert_eq!(out.attribute.as_str(), "professional experience");
        // 2003 - 1990
        assert_eq!(out.value, Value::Int(13));

        let no_work =
            parse_event(r#"{("work experience", false), ("graduation date", 1990)}"#).unwrap();
        assert_eq!(apply_mapping(f, &no_work, 2003).unwrap(), None);
        let missing = parse_event(r#"{("graduation date", 1990)}"#).unwrap();
        assert_eq!(apply_mapping(f, &missing, 2003).unwrap(), None);
    }

    #[test]
    fn other_bodies() {
        let kb = kb(r#"{"mappings": [
            {"name": "r", "inputs": ["value"], "output": "price", "body": {"kind": "rename", "input": "value"}},
            {"name": "c", "inputs": ["country"], "guard": "(country = \"canada\")", "output": "currency",
             "body": {"kind": "CONST", "value": "CAD"}},
            {"name": "l", "inputs": ["celsius"], "output": "scaled", "body": {"kind": "linear", "input": "celsius", "scale": 9, "offset": 32}}
        ]}"#)
        .unwrap();
        let [r, c, l] = kb.mappings() else { panic!() };
        let e = parse_event(r#"{(value, 8999), (country, "Canada"), (celsius, 100)}"#).unwrap();
        assert_eq!(
            apply_mapping(r, &e, 0).unwrap().unwrap().value,
            Value::Int(8999)
        );
        assert_eq!(
            apply_mapping(c, &e, 0).unwrap().unwrap().value,
            Value::string("cad")
        );
        assert_eq!(
            apply_mapping(l, &e, 0).unwrap().unwrap().value,
            Value::Int(932)
        );
        let absent = parse_event(r#"{(price, 1)}"#).unwrap();
        assert_eq!(apply_mapping(r, &absent, 0).unwrap(), None);
        let huge = parse_event("{(celsius, 9223372036854775807)}").unwrap();
        assert!(matches!(
            apply_mapping(l, &huge, 0),
            Err(MappingError::Overflow(_))
        ));
        let text = parse_event(r#"{(celsius, "hot")}"#).unwrap();
        assert_eq!(apply_mapping(l, &text, 0).unwrap(), None);
    }

    #[test]
    fn document_round_trip() {
        let kb1 = kb(PROFESSOR).unwrap();
        let doc = serde_json::to_string(&kb1.to_document()).unwrap();
        let kb2 = load_knowledge(doc.as_bytes()).unwrap();
        assert_eq!(kb1.mappings(), kb2.mappings());
        assert_eq!(kb1.synonym_groups(), kb2.synonym_groups());
        assert_eq!(kb1.reference_year(), kb2.reference_year());
    }

    /// Random forest over `n` terms: term i gets a parent among 0..i or none.
    fn forest(max: usize) -> impl Strategy<Value = Vec<Option<usize>>> {
        (1..max).prop_flat_map(|n| {
            (0..n)
                .map(|i| {
                    if i == 0 {
                        Just(None).boxed()
                    } else {
                        proptest::option::of(0..i).boxed()
                    }
                })
                .collect::<Vec<_>>()
        })
    }

    fn build(parents: &[Option<usize>]) -> KnowledgeBase {
        let edges = parents
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.map(|p| (format!("t{i}"), format!("t{p}"))))
            .collect();
        KnowledgeBase::new(vec![], edges, vec![], 0).unwrap()
    }

    proptest! {
        #[test]
        fn descendant_relation_is_a_partial_order(parents in forest(24)) {
            let kb = build(&parents);
            let terms: Vec<String> = (0..parents.len()).map(|i| format!("t{i}")).collect();
            for a in &terms {
                prop_assert!(kb.is_descendant_or_equal(a, a));
                prop_assert!(kb.ancestors(a).len() < terms.len());
                for b in &terms {
                    if a != b && kb.is_descendant_or_equal(a, b) {
                        prop_assert!(!kb.is_descendant_or_equal(b, a));
                    }
                    for c in &terms {
                        if kb.is_descendant_or_equal(a, b) && kb.is_descendant_or_equal(b, c) {
                            prop_assert!(kb.is_descendant_or_equal(a, c));
                        }
                    }
                }
                let depths: Vec<usize> = kb.ancestors(a).iter().map(|t| kb.depth(t)).collect();
                prop_assert!(depths.windows(2).all(|w| w[0] > w[1]));
            }
        }

        #[test]
        fn subtree_agrees_with_descendant_relation(parents in forest(24)) {
            let kb = build(&parents);
            for i in 0..parents.len() {
                let t = format!("t{i}");
                let sub: HashSet<&str> = kb.subtree(&t).into_iter().collect();
                for j in 0..parents.len() {
                    let u = format!("t{j}");
                    prop_assert_eq!(sub.contains(u.as_str()), kb.is_descendant_or_equal(&u, &t));
                }
            }
        }

        #[test]
        fn root_term_is_idempotent(term in "[a-z]{1,3}") {
            let kb = load_knowledge(BOOKS.as_bytes()).unwrap();
            let r = kb.root_term(&term).to_owned();
            prop_assert_eq!(kb.root_term(&r), r.as_str());
        }
    }
}
