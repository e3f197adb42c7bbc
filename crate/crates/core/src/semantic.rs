//! Semantic matching: synonym normalization, hierarchy and mapping
//! augmentation, and the semantic counterparts of covering, determination and
//! intersection.
//!
//! A normalized pair `(a, v)` is *lifted* to every `(a', v')` with `a'` an
//! ancestor-or-self of `a` and, for string values, `v'` an ancestor-or-self of
//! `v`. An event semantically matches a subscription when every predicate is
//! matched syntactically by a base pair, a lifted pair, or a mapping output.
//! Events only generalize upward, so an event carrying a more general term
//! than a subscription predicate never satisfies it through that pair.

use std::collections::HashSet;

use thiserror::Error;

use crate::knowledge::{KnowledgeBase, MappingError};
use crate::model::{
    Advertisement, AttributeName, Event, Pair, Predicate, RelOp, Subscription, Value,
};
use crate::syntactic::ValueSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SemanticError {
    #[error("mapping `{function}` failed: {source}")]
    Mapping {
        function: String,
        source: MappingError,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Provenance {
    Hierarchy,
    Mapping(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AddedPair {
    pub pair: Pair,
    pub provenance: Provenance,
}

/// A normalized event together with the pairs added by the hierarchy and
/// mapping stages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedEvent {
    base: Event,
    added: Vec<AddedPair>,
}

impl AugmentedEvent {
    pub fn base(&self) -> &Event {
        &self.base
    }

    pub fn added(&self) -> &[AddedPair] {
        &self.added
    }

    /// Base pairs followed by added pairs.
    pub fn pairs(&self) -> impl Iterator<Item = &Pair> {
        self.base
            .pairs()
            .iter()
            .chain(self.added.iter().map(|a| &a.pair))
    }

    /// The first pair matching `pred`, if any.
    pub fn witness(&self, pred: &Predicate) -> Option<&Pair> {
        self.pairs().find(|p| pred.matches(p))
    }

    /// Syntactic match of the augmented pair set against an already
    /// normalized subscription.
    pub fn matches(&self, normalized_sub: &Subscription) -> bool {
        normalized_sub
            .predicates()
            .iter()
            .all(|p| self.witness(p).is_some())
    }
}

fn normalize_value(value: &Value, kb: &KnowledgeBase) -> Value {
    match value {
        Value::Str(s) => Value::Str(kb.root_term(s).to_owned()),
        other => other.clone(),
    }
}

fn normalize_attribute(attr: &AttributeName, kb: &KnowledgeBase) -> AttributeName {
    AttributeName::from_canonical(kb.root_term(attr.as_str()).to_owned())
}

fn normalize_predicate(p: &Predicate, kb: &KnowledgeBase) -> Predicate {
    Predicate {
        attribute: normalize_attribute(&p.attribute, kb),
        op: p.op,
        value: normalize_value(&p.value, kb),
    }
}

/// Replaces attribute names and string values by their root terms. Two raw
/// attributes that are synonyms end up sharing one name.
pub fn normalize_event(event: &Event, kb: &KnowledgeBase) -> Event {
    Event::from_pairs_unchecked(
        event
            .pairs()
            .iter()
            .map(|p| {
                Pair::new(
                    normalize_attribute(&p.attribute, kb),
                    normalize_value(&p.value, kb),
                )
            })
            .collect(),
    )
}

pub fn normalize_subscription(sub: &Subscription, kb: &KnowledgeBase) -> Subscription {
    sub.map_predicates(|p| normalize_predicate(p, kb))
}

pub fn normalize_advertisement(adv: &Advertisement, kb: &KnowledgeBase) -> Advertisement {
    adv.map_predicates(|p| normalize_predicate(p, kb))
}

/// Runs the hierarchy stage, then one pass of mapping functions in document
/// order. `event` must already be normalized.
pub fn augment(event: &Event, kb: &KnowledgeBase) -> Result<AugmentedEvent, SemanticError> {
    let mut seen: HashSet<Pair> = event.pairs().iter().cloned().collect();
    let mut added = Vec::new();

    for pair in event.pairs() {
        let attrs = chain(pair.attribute.as_str(), kb);
        let values: Vec<Value> = match &pair.value {
            Value::Str(s) => chain(s, kb)
                .into_iter()
                .map(|t| Value::Str(t.to_owned()))
                .collect(),
            other => vec![other.clone()],
        };
        for a in &attrs {
            for v in &values {
                let lifted = Pair::new(AttributeName::from_canonical((*a).to_owned()), v.clone());
                if seen.insert(lifted.clone()) {
                    added.push(AddedPair {
                        pair: lifted,
                        provenance: Provenance::Hierarchy,
                    });
                }
            }
        }
    }

    if !kb.mappings().is_empty() {
        // Mappings see base and hierarchy pairs, never each other's outputs.
        let visible: Vec<Pair> = event
            .pairs()
            .iter()
            .cloned()
            .chain(added.iter().map(|a| a.pair.clone()))
            .collect();
        for f in kb.mappings() {
            let out = f.apply(&visible, kb.reference_year()).map_err(|source| {
                SemanticError::Mapping {
                    function: f.name.clone(),
                    source,
                }
            })?;
            if let Some(pair) = out {
                if seen.insert(pair.clone()) {
                    added.push(AddedPair {
                        pair,
                        provenance: Provenance::Mapping(f.name.clone()),
                    });
                }
            }
        }
    }

    Ok(AugmentedEvent {
        base: event.clone(),
        added,
    })
}

fn chain<'a>(term: &'a str, kb: &'a KnowledgeBase) -> Vec<&'a str> {
    let mut out = vec![term];
    out.extend(kb.ancestors(term));
    out
}

pub fn sem_match(
    event: &Event,
    sub: &Subscription,
    kb: &KnowledgeBase,
) -> Result<bool, SemanticError> {
    let augmented = augment(&normalize_event(event, kb), kb)?;
    Ok(augmented.matches(&normalize_subscription(sub, kb)))
}

/// Hierarchy-aware covering; mapping functions are not considered.
pub fn sem_covers(s1: &Subscription, s2: &Subscription, kb: &KnowledgeBase) -> bool {
    covers_normalized(
        &normalize_subscription(s1, kb),
        &normalize_subscription(s2, kb),
        kb,
    )
}

/// Every pair of the event semantically satisfies some advertisement predicate.
pub fn sem_determines(adv: &Advertisement, event: &Event, kb: &KnowledgeBase) -> bool {
    determines_normalized(
        &normalize_advertisement(adv, kb),
        &normalize_event(event, kb),
        kb,
    )
}

/// Some event that `adv` semantically determines also semantically matches
/// `sub`, ignoring mapping functions.
pub fn sem_intersects(adv: &Advertisement, sub: &Subscription, kb: &KnowledgeBase) -> bool {
    intersects_normalized(
        &normalize_advertisement(adv, kb),
        &normalize_subscription(sub, kb),
        kb,
    )
}

/// Whether some lifted form of the normalized `pair` matches `pred`.
pub fn pair_satisfies(pair: &Pair, pred: &Predicate, kb: &KnowledgeBase) -> bool {
    kb.is_descendant_or_equal(pair.attribute.as_str(), pred.attribute.as_str())
        && value_satisfies(&pair.value, pred.op, &pred.value, kb)
}

fn value_satisfies(value: &Value, op: RelOp, target: &Value, kb: &KnowledgeBase) -> bool {
    match (value, target) {
        (Value::Str(v), Value::Str(u)) => match op {
            RelOp::Eq => kb.is_descendant_or_equal(v, u),
            // The chain of `v` has an element other than `u` unless it is `u` alone.
            RelOp::Ne => !(v == u && !kb.has_parent(u)),
            _ => false,
        },
        _ => op.eval(value, target),
    }
}

/// A string `u` that no lifted value can avoid when it must differ from it.
fn ne_blocks(u: &str, kb: &KnowledgeBase) -> bool {
    !kb.has_parent(u)
}

/// Every normalized value satisfying `p2` also satisfies `p1`, under lifting.
fn value_implies(p2: &Predicate, p1: &Predicate, kb: &KnowledgeBase) -> bool {
    match (&p2.value, &p1.value) {
        (Value::Str(u2), Value::Str(u1)) => match (p2.op, p1.op) {
            (RelOp::Eq, RelOp::Eq) => kb.is_descendant_or_equal(u2, u1),
            (RelOp::Eq, RelOp::Ne) => !(u1 == u2 && ne_blocks(u1, kb)),
            // `!=` admits fresh strings outside the hierarchy.
            (RelOp::Ne, RelOp::Eq) => false,
            (RelOp::Ne, RelOp::Ne) => u1 == u2 || !ne_blocks(u1, kb),
            _ => false,
        },
        // String predicates are always satisfiable, so they imply nothing of
        // another kind; non-string sets are compared exactly.
        (Value::Str(_), _) => false,
        _ => ValueSet::of(p2).is_subset(&ValueSet::of(p1)),
    }
}

pub(crate) fn covers_normalized(s1: &Subscription, s2: &Subscription, kb: &KnowledgeBase) -> bool {
    s1.predicates().iter().all(|p1| {
        s2.predicates().iter().any(|p2| {
            kb.is_descendant_or_equal(p2.attribute.as_str(), p1.attribute.as_str())
                && value_implies(p2, p1, kb)
        })
    })
}

pub(crate) fn determines_normalized(
    adv: &Advertisement,
    event: &Event,
    kb: &KnowledgeBase,
) -> bool {
    event
        .pairs()
        .iter()
        .all(|pair| adv.predicates().iter().any(|q| pair_satisfies(pair, q, kb)))
}

/// Decides whether a witness event exists: the subscription predicates are
/// split into groups, each group satisfied by one base pair that the
/// advertisement also determines, and the groups' pairs need distinct raw
/// attribute names (a root term offers one name per synonym).
pub(crate) fn intersects_normalized(
    adv: &Advertisement,
    sub: &Subscription,
    kb: &KnowledgeBase,
) -> bool {
    let preds: Vec<&Predicate> = sub.predicates().iter().collect();
    let advs: Vec<&Predicate> = adv.predicates().iter().collect();
    // Cheap necessary condition first: each predicate alone has a witness pair.
    if preds
        .iter()
        .any(|p| group_candidates(&[p], &advs, kb).is_empty())
    {
        return false;
    }
    let mut groups: Vec<Vec<&Predicate>> = Vec::new();
    partition_search(&preds, 0, &mut groups, &advs, kb)
}

fn partition_search<'p>(
    preds: &[&'p Predicate],
    next: usize,
    groups: &mut Vec<Vec<&'p Predicate>>,
    advs: &[&Predicate],
    kb: &KnowledgeBase,
) -> bool {
    if next == preds.len() {
        let candidates: Vec<Vec<&str>> = groups
            .iter()
            .map(|g| group_candidates(g, advs, kb))
            .collect();
        return distinct_attributes(&candidates, kb);
    }
    let p = preds[next];
    for i in 0..groups.len() {
        groups[i].push(p);
        let ok = !group_candidates(&groups[i], advs, kb).is_empty()
            && partition_search(preds, next + 1, groups, advs, kb);
        groups[i].pop();
        if ok {
            return true;
        }
    }
    groups.push(vec![p]);
    let ok = partition_search(preds, next + 1, groups, advs, kb);
    groups.pop();
    ok
}

/// Attributes a single base pair could carry to satisfy every predicate of
/// `group` plus some advertisement predicate. Empty when no such pair exists.
fn group_candidates<'a>(
    group: &[&'a Predicate],
    advs: &[&'a Predicate],
    kb: &'a KnowledgeBase,
) -> Vec<&'a str> {
    let Some(deepest) = deepest_of(group.iter().map(|p| p.attribute.as_str()), kb) else {
        return Vec::new();
    };
    let mut out: Vec<&str> = Vec::new();
    for q in advs {
        let Some(attr) = deepest_of([deepest, q.attribute.as_str()], kb) else {
            continue;
        };
        let mut all: Vec<&Predicate> = group.to_vec();
        all.push(q);
        if value_feasible(&all, kb) {
            for t in kb.subtree(attr) {
                if !out.contains(&t) {
                    out.push(t);
                }
            }
        }
    }
    out
}

/// The deepest term when `terms` form a chain in the hierarchy.
fn deepest_of<'a>(terms: impl IntoIterator<Item = &'a str>, kb: &KnowledgeBase) -> Option<&'a str> {
    let mut deepest: Option<&str> = None;
    for t in terms {
        deepest = match deepest {
            None => Some(t),
            Some(d) if kb.is_descendant_or_equal(t, d) => Some(t),
            Some(d) if kb.is_descendant_or_equal(d, t) => Some(d),
            Some(_) => return None,
        };
    }
    deepest
}

/// Some single value satisfies every predicate under lifting.
fn value_feasible(preds: &[&Predicate], kb: &KnowledgeBase) -> bool {
    match &preds[0].value {
        Value::Str(_) => {
            let mut eqs = Vec::new();
            let mut nes = Vec::new();
            for p in preds {
                match (&p.value, p.op) {
                    (Value::Str(u), RelOp::Eq) => eqs.push(u.as_str()),
                    (Value::Str(u), RelOp::Ne) => nes.push(u.as_str()),
                    _ => return false,
                }
            }
            if eqs.is_empty() {
                // A fresh string outside the hierarchy avoids every exclusion.
                return true;
            }
            let Some(deepest) = deepest_of(eqs, kb) else {
                return false;
            };
            // Strict descendants always lift to a second term, so only a bare
            // root with no children can be blocked by its own exclusion.
            kb.has_children(deepest) || !(ne_blocks(deepest, kb) && nes.contains(&deepest))
        }
        _ => {
            let mut set = ValueSet::of(preds[0]);
            for p in &preds[1..] {
                if matches!(p.value, Value::Str(_)) {
                    return false;
                }
                set = set.intersect(&ValueSet::of(p));
            }
            !set.is_empty()
        }
    }
}

/// Assigns each group a distinct attribute slot (bipartite matching with
/// per-attribute capacity equal to its number of surface names).
fn distinct_attributes(candidates: &[Vec<&str>], kb: &KnowledgeBase) -> bool {
    let mut assigned: Vec<(&str, Vec<usize>)> = Vec::new();
    for g in 0..candidates.len() {
        let mut visited = HashSet::new();
        if !augment_path(g, candidates, kb, &mut assigned, &mut visited) {
            return false;
        }
    }
    true
}

fn augment_path<'a>(
    g: usize,
    candidates: &[Vec<&'a str>],
    kb: &KnowledgeBase,
    assigned: &mut Vec<(&'a str, Vec<usize>)>,
    visited: &mut HashSet<&'a str>,
) -> bool {
    for &attr in &candidates[g] {
        if !visited.insert(attr) {
            continue;
        }
        let idx = match assigned.iter().position(|(a, _)| *a == attr) {
            Some(i) => i,
            None => {
                assigned.push((attr, Vec::new()));
                assigned.len() - 1
            }
        };
        if assigned[idx].1.len() < kb.name_count(attr) {
            assigned[idx].1.push(g);
            return true;
        }
        for k in 0..assigned[idx].1.len() {
            let other = assigned[idx].1[k];
            if augment_path(other, candidates, kb, assigned, visited) {
                // `other` moved to a new slot but is still listed here.
                assigned[idx].1[k] = g;
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::load_knowledge;
    use crate::model::{parse_advertisement, parse_event, parse_subscription};
    use crate::syntactic;

    fn kb(json: &str) -> KnowledgeBase {
        load_knowledge(json.as_bytes()).unwrap()
    }
    fn sub(t: &str) -> Subscription {
        parse_subscription(t).unwrap()
    }
    fn adv(t: &str) -> Advertisement {
        parse_advertisement(t).unwrap()
    }
    fn ev(t: &str) -> Event {
        parse_event(t).unwrap()
    }

    const LIBRARY: &str = r#"{
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

    const STUDENT: &str =
        r#"{(school, "Y"), (degree, "PhD"), ("work experience", true), ("graduation date", 1990)}"#;
    const PROFESSOR_X: &str =
        r#"(university = "Y") AND (degree = "PhD") AND ("professional experience" > 4)"#;

    #[test]
    fn normalization() {
        let kb = kb(LIBRARY);
        assert_eq!(
            normalize_event(&ev(r#"{(automobile, "red")}"#), &kb).to_string(),
            r#"{(vehicle, "red")}"#
        );
        let plain = ev(r#"{(price, 5), (color, "red")}"#);
        assert_eq!(normalize_event(&plain, &kb), plain);
        assert_eq!(
            normalize_event(&ev(r#"{(car, "automobile")}"#), &kb).to_string(),
            r#"{(vehicle, "vehicle")}"#
        );
        assert_eq!(
            normalize_subscription(&sub(r#"(car = "something")"#), &kb).to_string(),
            r#"(vehicle = "something")"#
        );
        let price = sub("(price <= 1600)");
        assert_eq!(normalize_subscription(&price, &kb), price);
        assert_eq!(
            normalize_subscription(&sub(r#"(automobile = "car")"#), &kb).to_string(),
            r#"(vehicle = "vehicle")"#
        );
    }

    #[test]
    fn hierarchy_augmentation() {
        let kb = kb(LIBRARY);
        let e = ev(r#"{(encyclopedia, "Stone Age"), (subject, "crocodiles")}"#);
        let aug = augment(&normalize_event(&e, &kb), &kb).unwrap();
        let added: Vec<String> = aug.added().iter().map(|a| a.pair.to_string()).collect();
        assert_eq!(
            added,
            vec![
                r#"(book, "stone age")"#,
                r#"("printed material", "stone age")"#,
                r#"(subject, "reptiles")"#,
            ]
        );
        assert!(aug
            .added()
            .iter()
            .all(|a| a.provenance == Provenance::Hierarchy));

        let plain = ev(r#"{(price, 5), (color, "red")}"#);
        assert!(augment(&plain, &kb).unwrap().added().is_empty());
    }

    #[test]
    fn value_and_attribute_lifts_cross() {
        let kb = kb(
            r#"{"hierarchy": [{"child": "a1", "parent": "a0"}, {"child": "v1", "parent": "v0"}]}"#,
        );
        let aug = augment(&ev(r#"{(a1, "v1")}"#), &kb).unwrap();
        let added: Vec<String> = aug.added().iter().map(|a| a.pair.to_string()).collect();
        assert_eq!(
            added,
            vec![r#"(a1, "v0")"#, r#"(a0, "v1")"#, r#"(a0, "v0")"#]
        );
    }

    #[test]
    fn mapping_augmentation() {
        let kb = kb(PROFESSOR);
        let aug = augment(&normalize_event(&ev(STUDENT), &kb), &kb).unwrap();
        let mapped: Vec<&AddedPair> = aug
            .added()
            .iter()
            .filter(|a| matches!(a.provenance, Provenance::Mapping(_)))
            .collect();
        assert_eq!(mapped.len(), 1);
        assert_eq!(
            mapped[0].pair.to_string(),
            r#"("professional experience", 13)"#
        );
        assert_eq!(mapped[0].provenance, Provenance::Mapping("f1".into()));
    }

    #[test]
    fn mapping_overflow_is_reported() {
        let kb = kb(
            r#"{"mappings": [{"name": "m", "inputs": ["x"], "output": "y",
            "body": {"kind": "years_since", "input": "x"}}], "reference_year": -10}"#,
        );
        let err = augment(&ev("{(x, 9223372036854775807)}"), &kb).unwrap_err();
        assert!(matches!(err, SemanticError::Mapping { ref function, .. } if function == "m"));
    }

    #[test]
    fn hierarchy_matching_rules() {
        let kb = kb(LIBRARY);
        let e = ev(r#"{(encyclopedia, "Stone Age"), (subject, "crocodiles")}"#);
        let s = sub(r#"(book = "Stone Age") AND (subject = "reptiles")"#);
        assert!(sem_match(&e, &s, &kb).unwrap());
        assert!(!syntactic::match_event(&e, &s));

        let e = ev(r#"{(book, "Stone Age"), (subject, "crocodiles")}"#);
        let s = sub(r#"(encyclopedia = "Stone Age") AND (subject = "reptiles")"#);
        assert!(!sem_match(&e, &s, &kb).unwrap());
    }

    #[test]
    fn professor_match_needs_the_mapping() {
        let kb = kb(PROFESSOR);
        let e = ev(STUDENT);
        let s = sub(PROFESSOR_X);
        assert!(sem_match(&e, &s, &kb).unwrap());
        assert!(!sem_match(&e, &s, &kb.without_mappings()).unwrap());
    }

    #[test]
    fn semantic_covering() {
        let kb = kb(LIBRARY);
        let s1 = sub(r#"(product = "printed material") AND (topic = "semantic web")"#);
        let s2 = sub(r#"(product = "book") AND (topic = "semantic web")"#);
        assert!(sem_covers(&s1, &s2, &kb));
        assert!(!syntactic::covers(&s1, &s2));
        assert!(!sem_covers(&s2, &s1, &kb));
        assert!(!sem_covers(
            &sub(r#"(product = "book")"#),
            &sub(r#"(product = "printed material")"#),
            &kb
        ));
        // Attribute specialization as well.
        assert!(sem_covers(
            &sub(r#"(book = "x")"#),
            &sub(r#"(encyclopedia = "x")"#),
            &kb
        ));
    }

    #[test]
    fn covering_with_exclusions() {
        let kb = kb(LIBRARY);
        // (product, "book") lifts to "printed material", which differs from "book".
        assert!(sem_covers(
            &sub(r#"(product != "book")"#),
            &sub(r#"(product = "book")"#),
            &kb
        ));
        assert!(!sem_covers(
            &sub(r#"(product != "printed material")"#),
            &sub(r#"(product = "printed material")"#),
            &kb
        ));
        assert!(sem_covers(
            &sub(r#"(product != "book")"#),
            &sub(r#"(product != "reptiles")"#),
            &kb
        ));
        assert!(!sem_covers(
            &sub(r#"(product != "reptiles")"#),
            &sub(r#"(product != "book")"#),
            &kb
        ));
        assert!(!sem_covers(
            &sub(r#"(product = "book")"#),
            &sub(r#"(product != "book")"#),
            &kb
        ));
    }

    #[test]
    fn semantic_determines() {
        let kb = kb(LIBRARY);
        let a = adv(r#"(product = "printed material") AND (price >= 10)"#);
        assert!(sem_determines(
            &a,
            &ev(r#"{(product, "book"), (price, 15)}"#),
            &kb
        ));
        assert!(!sem_determines(
            &a,
            &ev(r#"{(product, "book"), (price, 5)}"#),
            &kb
        ));
        assert!(!sem_determines(
            &adv(r#"(product = "book")"#),
            &ev(r#"{(product, "printed material")}"#),
            &kb
        ));
    }

    #[test]
    fn semantic_intersection() {
        let kb = kb(LIBRARY);
        let a = adv(r#"(product = "printed material") AND (price >= 10)"#);
        let s = sub(r#"(product = "book") AND (price <= 20)"#);
        assert!(sem_intersects(&a, &s, &kb));
        assert!(!syntactic::intersects(&a, &s));
        assert!(!sem_intersects(
            &adv(r#"(product = "computer")"#),
            &sub(r#"(product = "book")"#),
            &kb
        ));
        assert!(!sem_intersects(
            &a,
            &sub(r#"(product = "book") AND (price < 10)"#),
            &kb
        ));
    }

    #[test]
    fn intersection_accounts_for_shared_attributes() {
        let kb = kb(LIBRARY);
        let a = adv("(x >= 0)");
        // One pair cannot carry two values of a leaf attribute.
        assert!(!sem_intersects(&a, &sub("(x = 1) AND (x = 2)"), &kb));
        assert!(sem_intersects(&a, &sub("(x >= 1) AND (x <= 2)"), &kb));
        // `book` has children, so a second pair can carry the other value.
        let a = adv("(book >= 0)");
        assert!(sem_intersects(&a, &sub("(book = 1) AND (book = 2)"), &kb));
        // ... but only two children plus the term itself.
        assert!(sem_intersects(
            &a,
            &sub("(book = 1) AND (book = 2) AND (book = 3)"),
            &kb
        ));
        assert!(!sem_intersects(
            &a,
            &sub("(book = 1) AND (book = 2) AND (book = 3) AND (book = 4)"),
            &kb
        ));
        // Synonyms provide extra surface names.
        let a = adv("(vehicle >= 0)");
        assert!(sem_intersects(
            &a,
            &sub("(car = 1) AND (automobile = 2) AND (vehicle = 3)"),
            &kb
        ));
        // One string pair satisfies a chain of equality predicates.
        let a = adv(r#"(product = "printed material")"#);
        assert!(sem_intersects(
            &a,
            &sub(r#"(product = "book") AND (product = "printed material")"#),
            &kb
        ));
        assert!(!sem_intersects(
            &a,
            &sub(r#"(product = "book") AND (product = "reptiles")"#),
            &kb
        ));
    }

    #[test]
    fn table_two_rows_intersect_semantically() {
        let kb = KnowledgeBase::empty();
        let s = sub(r#"(product = "computer") AND (brand = "IBM") AND (price <= 1600)"#);
        assert!(sem_intersects(
            &adv(r#"(product = "computer") AND (brand = "IBM") AND (price <= 1500)"#),
            &s,
            &kb
        ));
        assert!(sem_intersects(
            &adv(r#"(product = "computer") AND (brand = "IBM") AND (price <= 1600)"#),
            &sub(r#"(product = "computer") AND (price <= 1600)"#),
            &kb
        ));
        assert!(!sem_intersects(
            &adv(r#"(product = "computer") AND (brand = "Dell") AND (price <= 1500)"#),
            &s,
            &kb
        ));
    }

    #[test]
    fn exclusion_feasibility() {
        let kb = kb(LIBRARY);
        // "printed material" is a root but has children, so a book satisfies both.
        assert!(sem_intersects(
            &adv(r#"(product != "printed material")"#),
            &sub(r#"(product = "printed material")"#),
            &kb
        ));
        // "reptiles" is a root whose only child is crocodiles: still satisfiable.
        assert!(sem_intersects(
            &adv(r#"(p != "reptiles")"#),
            &sub(r#"(p = "reptiles")"#),
            &kb
        ));
        // "vehicle" has no hierarchy at all.
        assert!(!sem_intersects(
            &adv(r#"(p != "vehicle")"#),
            &sub(r#"(p = "car")"#),
            &kb
        ));
        // "encyclopedia" lifts to "book", which differs from it.
        assert!(sem_intersects(
            &adv(r#"(p != "encyclopedia")"#),
            &sub(r#"(p = "encyclopedia")"#),
            &kb
        ));
    }
}
