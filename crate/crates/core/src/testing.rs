//! Brute-force reference implementations used by the test suites.
//!
//! Everything here re-derives matching from first principles (raw synonym
//! lists and hierarchy edges, direct integer comparison) and decides the
//! relations by enumerating events over a finite pair universe. Nothing in
//! this module calls the relation code it is used to check.
//!
//! Enumeration is bounded by the number of predicates of the subscription
//! being matched: a minimal witness (or counterexample) needs at most one pair
//! per predicate, because every other pair can be dropped without changing
//! the outcome.

use std::collections::{BTreeSet, HashMap};

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::knowledge::{KnowledgeBase, SynonymGroup};
use crate::model::{Advertisement, AttributeName, Predicate, RelOp, Subscription, Value};

/// Upper bound on event size used by the oracles.
pub const MAX_EVENT_PAIRS: usize = 4;

/// A string that no generated knowledge base or entity ever uses.
pub const FRESH: &str = "zz-fresh";

pub type RawPair = (String, Value);

/// Finite set of attribute names and values events are built from.
#[derive(Debug, Clone)]
pub struct Universe {
    pub attributes: Vec<String>,
    pub values: Vec<Value>,
}

impl Universe {
    /// Attributes and values mentioned by the predicates, integer boundaries
    /// one either side of every constant, both booleans and a fresh string.
    pub fn from_predicates<'a>(preds: impl IntoIterator<Item = &'a Predicate>) -> Universe {
        let mut attrs = BTreeSet::new();
        let mut values = BTreeSet::new();
        for p in preds {
            attrs.insert(p.attribute.as_str().to_owned());
            match &p.value {
                Value::Int(c) => {
                    values.insert(Value::Int(c.saturating_sub(1)));
                    values.insert(Value::Int(*c));
                    values.insert(Value::Int(c.saturating_add(1)));
                }
                v => {
                    values.insert(v.clone());
                }
            }
        }
        values.insert(Value::Bool(false));
        values.insert(Value::Bool(true));
        values.insert(Value::Str(FRESH.to_owned()));
        Universe {
            attributes: attrs.into_iter().collect(),
            values: values.into_iter().collect(),
        }
    }

    /// Adds every term the knowledge base knows, as attribute and as value.
    pub fn with_knowledge(mut self, kb: &KnowledgeBase) -> Universe {
        let mut terms: BTreeSet<String> = BTreeSet::new();
        for g in kb.synonym_groups() {
            terms.insert(g.root.clone());
            terms.extend(g.members.iter().cloned());
        }
        for (c, p) in kb.hierarchy_edges() {
            terms.insert(c.clone());
            terms.insert(p.clone());
        }
        let mut attrs: BTreeSet<String> = self.attributes.into_iter().collect();
        attrs.extend(terms.iter().cloned());
        let mut values: BTreeSet<Value> = self.values.into_iter().collect();
        values.extend(terms.into_iter().map(Value::Str));
        self.attributes = attrs.into_iter().collect();
        self.values = values.into_iter().collect();
        self
    }

    pub fn pairs(&self) -> Vec<RawPair> {
        let mut out = Vec::new();
        for a in &self.attributes {
            for v in &self.values {
                out.push((a.clone(), v.clone()));
            }
        }
        out
    }
}

fn compare(op: RelOp, lhs: &Value, rhs: &Value) -> bool {
    match (lhs, rhs) {
        (Value::Int(a), Value::Int(b)) => match op {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            RelOp::Lt => a < b,
            RelOp::Le => a <= b,
            RelOp::Gt => a > b,
            RelOp::Ge => a >= b,
        },
        (Value::Str(a), Value::Str(b)) => match op {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            _ => false,
        },
        (Value::Bool(a), Value::Bool(b)) => match op {
            RelOp::Eq => a == b,
            RelOp::Ne => a != b,
            _ => false,
        },
        _ => false,
    }
}

/// Matching semantics rebuilt from the raw synonym and edge lists. With no
/// knowledge it is plain syntactic matching.
#[derive(Debug, Clone, Default)]
pub struct Reference {
    root: HashMap<String, String>,
    parent: HashMap<String, String>,
}

impl Reference {
    pub fn syntactic() -> Self {
        Reference::default()
    }

    pub fn semantic(kb: &KnowledgeBase) -> Self {
        Reference::from_parts(kb.synonym_groups(), kb.hierarchy_edges())
    }

    pub fn from_parts(groups: &[SynonymGroup], edges: &[(String, String)]) -> Self {
        let mut root = HashMap::new();
        for g in groups {
            for m in &g.members {
                root.insert(m.clone(), g.root.clone());
            }
        }
        let parent = edges.iter().cloned().collect();
        Reference { root, parent }
    }

    fn norm(&self, term: &str) -> String {
        self.root
            .get(term)
            .cloned()
            .unwrap_or_else(|| term.to_owned())
    }

    fn norm_value(&self, v: &Value) -> Value {
        match v {
            Value::Str(s) => Value::Str(self.norm(s)),
            other => other.clone(),
        }
    }

    fn up(&self, term: &str) -> Vec<String> {
        let mut out = vec![term.to_owned()];
        while let Some(p) = self.parent.get(out.last().unwrap()) {
            out.push(p.clone());
        }
        out
    }

    /// All pairs a raw pair stands for after normalization and lifting.
    pub fn lift(&self, pair: &RawPair) -> Vec<RawPair> {
        let attrs = self.up(&self.norm(&pair.0));
        let values: Vec<Value> = match self.norm_value(&pair.1) {
            Value::Str(s) => self.up(&s).into_iter().map(Value::Str).collect(),
            v => vec![v],
        };
        let mut out = Vec::new();
        for a in &attrs {
            for v in &values {
                out.push((a.clone(), v.clone()));
            }
        }
        out
    }

    pub fn satisfies(&self, pair: &RawPair, pred: &Predicate) -> bool {
        let attr = self.norm(pred.attribute.as_str());
        let target = self.norm_value(&pred.value);
        self.lift(pair)
            .iter()
            .any(|(a, v)| *a == attr && compare(pred.op, v, &target))
    }

    pub fn matches(&self, event: &[RawPair], sub: &Subscription) -> bool {
        sub.predicates()
            .iter()
            .all(|p| event.iter().any(|pair| self.satisfies(pair, p)))
    }

    pub fn determines(&self, adv: &Advertisement, event: &[RawPair]) -> bool {
        event
            .iter()
            .all(|pair| adv.predicates().iter().any(|q| self.satisfies(pair, q)))
    }

    /// Bit `i` is set when the pair satisfies `preds[i]`.
    fn mask(&self, lifted: &[RawPair], preds: &[Predicate]) -> u64 {
        let mut m = 0;
        for (i, p) in preds.iter().enumerate() {
            let attr = self.norm(p.attribute.as_str());
            let target = self.norm_value(&p.value);
            if lifted
                .iter()
                .any(|(a, v)| *a == attr && compare(p.op, v, &target))
            {
                m |= 1 << i;
            }
        }
        m
    }

    /// An event matching `s2` but not `s1`, if the universe has one.
    pub fn covers_counterexample(
        &self,
        s1: &Subscription,
        s2: &Subscription,
        universe: &Universe,
    ) -> Option<Vec<RawPair>> {
        let mut candidates = Vec::new();
        for pair in universe.pairs() {
            let lifted = self.lift(&pair);
            let need = self.mask(&lifted, s2.predicates());
            if need != 0 {
                let other = self.mask(&lifted, s1.predicates());
                candidates.push(Candidate { pair, need, other });
            }
        }
        let full_s1 = full(s1.predicates().len());
        // Matching s1 only gets easier as pairs are added, so a minimal
        // s2-matching event is a counterexample whenever any one is.
        search(&candidates, full(s2.predicates().len()), |other| {
            other != full_s1
        })
    }

    /// An event `adv` determines that also matches `sub`, if the universe has one.
    pub fn intersection_witness(
        &self,
        adv: &Advertisement,
        sub: &Subscription,
        universe: &Universe,
    ) -> Option<Vec<RawPair>> {
        let mut candidates = Vec::new();
        for pair in universe.pairs() {
            let lifted = self.lift(&pair);
            if self.mask(&lifted, adv.predicates()) == 0 {
                continue;
            }
            let need = self.mask(&lifted, sub.predicates());
            if need != 0 {
                candidates.push(Candidate {
                    pair,
                    need,
                    other: 0,
                });
            }
        }
        search(&candidates, full(sub.predicates().len()), |_| true)
    }
}

fn full(n: usize) -> u64 {
    (1u64 << n) - 1
}

struct Candidate {
    pair: RawPair,
    /// Predicates of the subscription that must be matched.
    need: u64,
    /// Predicates of a second subscription, fed to the acceptance test.
    other: u64,
}

/// Depth-first search over minimal events (distinct attribute names) whose
/// pairs together satisfy every `need` bit. Each pair of a minimal event
/// satisfies a predicate no other pair does, so a pair that adds no new bit
/// over the pairs chosen before it can be skipped. Size is bounded by the
/// number of predicates, at most [`MAX_EVENT_PAIRS`].
fn search(
    candidates: &[Candidate],
    target: u64,
    accept: impl Fn(u64) -> bool,
) -> Option<Vec<RawPair>> {
    fn go(
        candidates: &[Candidate],
        start: usize,
        target: u64,
        have: u64,
        other: u64,
        chosen: &mut Vec<usize>,
        accept: &dyn Fn(u64) -> bool,
    ) -> bool {
        if have == target {
            return accept(other);
        }
        if chosen.len() == MAX_EVENT_PAIRS {
            return false;
        }
        for i in start..candidates.len() {
            let c = &candidates[i];
            if c.need & !have == 0 || chosen.iter().any(|&j| candidates[j].pair.0 == c.pair.0) {
                continue;
            }
            chosen.push(i);
            if go(
                candidates,
                i + 1,
                target,
                have | c.need,
                other | c.other,
                chosen,
                accept,
            ) {
                return true;
            }
            chosen.pop();
        }
        false
    }
    let mut chosen = Vec::new();
    go(candidates, 0, target, 0, 0, &mut chosen, &accept)
        .then(|| chosen.iter().map(|&i| candidates[i].pair.clone()).collect())
}

/// One randomly generated set of relation inputs over a small term universe.
#[derive(Debug, Clone)]
pub struct RelationCase {
    pub kb: KnowledgeBase,
    pub s1: Subscription,
    pub s2: Subscription,
    pub adv: Advertisement,
    pub sub: Subscription,
}

/// Builds a mapping-free case over at most 20 distinct terms: a random forest
/// of eight concepts with a few synonyms, string attributes drawn from the
/// concepts, one integer and one boolean attribute.
pub fn random_relation_case(rng: &mut impl Rng) -> RelationCase {
    let concepts: Vec<String> = (0..8).map(|i| format!("t{i}")).collect();
    let mut edges = Vec::new();
    for i in 1..concepts.len() {
        if rng.random_bool(0.75) {
            let p = rng.random_range(0..i);
            edges.push((concepts[i].clone(), concepts[p].clone()));
        }
    }
    let mut groups = Vec::new();
    for (i, c) in concepts.iter().enumerate().take(4) {
        if rng.random_bool(0.35) {
            groups.push(SynonymGroup {
                root: c.clone(),
                members: vec![format!("t{i}-syn")],
            });
        }
    }
    let kb = KnowledgeBase::new(groups, edges, vec![], 0).expect("generated forest is valid");
    let mut surface: Vec<String> = concepts.clone();
    for g in kb.synonym_groups() {
        surface.extend(g.members.iter().cloned());
    }
    let gen = Gen {
        surface: &surface,
        kb: &kb,
    };

    let s1 = gen.conjunction(rng);
    let s2 = if rng.random_bool(0.5) {
        gen.specialize(&s1, rng)
    } else {
        gen.conjunction(rng)
    };
    let sub = gen.conjunction(rng);
    let adv_preds = if rng.random_bool(0.5) {
        // Advertisements that overlap the subscription exercise the positive side.
        let mut preds = gen.specialize(&sub, rng).predicates().to_vec();
        preds.extend(
            gen.conjunction(rng)
                .predicates()
                .iter()
                .take(rng.random_range(0..2))
                .cloned(),
        );
        preds
    } else {
        gen.conjunction(rng).predicates().to_vec()
    };
    RelationCase {
        s1: s1.with_id("s1"),
        s2: s2.with_id("s2"),
        adv: Advertisement::new("a", adv_preds).expect("non-empty"),
        sub: sub.with_id("s"),
        kb,
    }
}

struct Gen<'a> {
    surface: &'a [String],
    kb: &'a KnowledgeBase,
}

const OPS: [RelOp; 6] = [
    RelOp::Eq,
    RelOp::Ne,
    RelOp::Lt,
    RelOp::Le,
    RelOp::Gt,
    RelOp::Ge,
];

impl Gen<'_> {
    fn term(&self, rng: &mut impl Rng) -> String {
        self.surface.choose(rng).unwrap().clone()
    }

    fn predicate(&self, rng: &mut impl Rng) -> Predicate {
        let roll = rng.random_range(0..10);
        let (attr, op, value) = match roll {
            0..=1 => (
                "n".to_owned(),
                *OPS.choose(rng).unwrap(),
                Value::Int(rng.random_range(0..6)),
            ),
            2 => (
                "f".to_owned(),
                *[RelOp::Eq, RelOp::Ne].choose(rng).unwrap(),
                Value::Bool(rng.random()),
            ),
            // Kind clash: a string attribute compared with an integer.
            3 if rng.random_bool(0.3) => (
                self.term(rng),
                RelOp::Le,
                Value::Int(rng.random_range(0..6)),
            ),
            _ => {
                let op = if rng.random_bool(0.8) {
                    RelOp::Eq
                } else {
                    RelOp::Ne
                };
                (self.term(rng), op, Value::Str(self.term(rng)))
            }
        };
        Predicate::new(AttributeName::new(attr).unwrap(), op, value).unwrap()
    }

    fn conjunction(&self, rng: &mut impl Rng) -> Subscription {
        let n = rng.random_range(1..=4);
        Subscription::new("", (0..n).map(|_| self.predicate(rng)).collect()).unwrap()
    }

    fn descend(&self, term: &str, rng: &mut impl Rng) -> String {
        let root = self.kb.root_term(term).to_owned();
        let sub: Vec<&str> = self.kb.subtree(&root);
        sub.choose(rng).unwrap().to_string()
    }

    /// A conjunction likely to be covered by `s` (narrower attributes, values
    /// and ranges, possibly extra predicates).
    fn specialize(&self, s: &Subscription, rng: &mut impl Rng) -> Subscription {
        let mut preds: Vec<Predicate> = s
            .predicates()
            .iter()
            .map(|p| {
                let attr = if rng.random_bool(0.5) {
                    AttributeName::new(self.descend(p.attribute.as_str(), rng)).unwrap()
                } else {
                    p.attribute.clone()
                };
                let (op, value) = match (&p.value, p.op) {
                    (Value::Str(v), RelOp::Eq) if rng.random_bool(0.5) => {
                        (RelOp::Eq, Value::Str(self.descend(v, rng)))
                    }
                    (Value::Int(c), RelOp::Le | RelOp::Lt) => {
                        (p.op, Value::Int(c - rng.random_range(0..2)))
                    }
                    (Value::Int(c), RelOp::Ge | RelOp::Gt) => {
                        (p.op, Value::Int(c + rng.random_range(0..2)))
                    }
                    _ => (p.op, p.value.clone()),
                };
                Predicate::new(attr, op, value).unwrap()
            })
            .collect();
        if preds.len() < 4 && rng.random_bool(0.3) {
            preds.push(self.predicate(rng));
        }
        Subscription::new("", preds).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_advertisement, parse_subscription};

    #[test]
    fn reference_semantics_follow_hierarchy() {
        let kb = crate::knowledge::load_knowledge(
            br#"{"hierarchy": [{"child": "book", "parent": "printed material"}]}"#,
        )
        .unwrap();
        let r = Reference::semantic(&kb);
        let s = parse_subscription(r#"(product = "printed material")"#).unwrap();
        assert!(r.matches(&[("product".into(), Value::string("book"))], &s));
        assert!(!Reference::syntactic().matches(&[("product".into(), Value::string("book"))], &s));
    }

    #[test]
    fn finds_gap_witness() {
        let kb = crate::knowledge::load_knowledge(
            br#"{"hierarchy": [{"child": "book", "parent": "printed material"}]}"#,
        )
        .unwrap();
        let a = parse_advertisement(r#"(product = "printed material") AND (price >= 10)"#).unwrap();
        let s = parse_subscription(r#"(product = "book") AND (price <= 20)"#).unwrap();
        let u = Universe::from_predicates(a.predicates().iter().chain(s.predicates()))
            .with_knowledge(&kb);
        assert!(Reference::semantic(&kb)
            .intersection_witness(&a, &s, &u)
            .is_some());
        assert!(Reference::syntactic()
            .intersection_witness(&a, &s, &u)
            .is_none());
    }
}
