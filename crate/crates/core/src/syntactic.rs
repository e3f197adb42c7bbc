//! Syntax-level relations: pair and event matching, subscription covering,
//! advertisement determination and advertisement/subscription intersection.
//!
//! Covering and intersection are decided per predicate by comparing the exact
//! sets of values each predicate admits (integer intervals, a single string or
//! its complement, a subset of the booleans).

use crate::model::{Advertisement, Event, Pair, Predicate, RelOp, Subscription, Value};

pub fn match_pair(pair: &Pair, pred: &Predicate) -> bool {
    pred.matches(pair)
}

/// Every predicate of `sub` is matched by some pair of `event`.
pub fn match_event(event: &Event, sub: &Subscription) -> bool {
    sub.predicates()
        .iter()
        .all(|p| event.pairs().iter().any(|pair| p.matches(pair)))
}

/// `s1` covers `s2`: every predicate of `s1` is implied by a predicate of `s2`
/// on the same attribute, so every event matching `s2` also matches `s1`.
pub fn covers(s1: &Subscription, s2: &Subscription) -> bool {
    s1.predicates().iter().all(|p1| {
        s2.predicates()
            .iter()
            .any(|p2| p2.attribute == p1.attribute && implies(p2, p1))
    })
}

/// Every pair of `event` matches at least one predicate of `adv`.
pub fn determines(adv: &Advertisement, event: &Event) -> bool {
    event
        .pairs()
        .iter()
        .all(|pair| adv.predicates().iter().any(|p| p.matches(pair)))
}

/// For every predicate of `sub` some advertisement predicate on the same
/// attribute admits a common value.
pub fn intersects(adv: &Advertisement, sub: &Subscription) -> bool {
    sub.predicates().iter().all(|s| {
        adv.predicates()
            .iter()
            .any(|a| a.attribute == s.attribute && jointly_satisfiable(a, s))
    })
}

/// Every value matching `antecedent` also matches `consequent`. Attribute
/// names are not compared.
pub fn implies(antecedent: &Predicate, consequent: &Predicate) -> bool {
    ValueSet::of(antecedent).is_subset(&ValueSet::of(consequent))
}

/// Some value matches both predicates. Attribute names are not compared.
pub fn jointly_satisfiable(a: &Predicate, b: &Predicate) -> bool {
    !ValueSet::of(a).intersect(&ValueSet::of(b)).is_empty()
}

/// The set of values satisfying a predicate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum ValueSet {
    /// Disjoint, non-adjacent, sorted closed intervals.
    Ints(Vec<(i64, i64)>),
    Str(StrSet),
    /// Bit 0: false, bit 1: true.
    Bools(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum StrSet {
    Only(String),
    AllBut(String),
    Empty,
}

impl ValueSet {
    pub(crate) fn of(pred: &Predicate) -> ValueSet {
        match &pred.value {
            Value::Int(v) => ValueSet::Ints(int_set(pred.op, *v)),
            Value::Str(s) => ValueSet::Str(match pred.op {
                RelOp::Eq => StrSet::Only(s.clone()),
                RelOp::Ne => StrSet::AllBut(s.clone()),
                // Rejected by the predicate constructor; nothing satisfies them.
                _ => StrSet::Empty,
            }),
            Value::Bool(b) => {
                let bit = 1u8 << (*b as u8);
                ValueSet::Bools(match pred.op {
                    RelOp::Eq => bit,
                    RelOp::Ne => 0b11 & !bit,
                    _ => 0,
                })
            }
        }
    }

    pub(crate) fn is_empty(&self) -> bool {
        match self {
            ValueSet::Ints(iv) => iv.is_empty(),
            ValueSet::Str(s) => *s == StrSet::Empty,
            ValueSet::Bools(m) => *m == 0,
        }
    }

    pub(crate) fn is_subset(&self, other: &ValueSet) -> bool {
        if self.is_empty() {
            return true;
        }
        match (self, other) {
            (ValueSet::Ints(a), ValueSet::Ints(b)) => a
                .iter()
                .all(|&(lo, hi)| b.iter().any(|&(blo, bhi)| blo <= lo && hi <= bhi)),
            (ValueSet::Bools(a), ValueSet::Bools(b)) => a & !b == 0,
            (ValueSet::Str(a), ValueSet::Str(b)) => match (a, b) {
                (StrSet::Only(x), StrSet::Only(y)) => x == y,
                (StrSet::Only(x), StrSet::AllBut(y)) => x != y,
                (StrSet::AllBut(x), StrSet::AllBut(y)) => x == y,
                _ => false,
            },
            _ => false,
        }
    }

    pub(crate) fn intersect(&self, other: &ValueSet) -> ValueSet {
        match (self, other) {
            (ValueSet::Ints(a), ValueSet::Ints(b)) => {
                let mut out = Vec::new();
                for &(alo, ahi) in a {
                    for &(blo, bhi) in b {
                        let (lo, hi) = (alo.max(blo), ahi.min(bhi));
                        if lo <= hi {
                            out.push((lo, hi));
                        }
                    }
                }
                out.sort_unstable();
                ValueSet::Ints(out)
            }
            (ValueSet::Bools(a), ValueSet::Bools(b)) => ValueSet::Bools(a & b),
            (ValueSet::Str(a), ValueSet::Str(b)) => ValueSet::Str(match (a, b) {
                (StrSet::Only(x), StrSet::Only(y)) if x == y => StrSet::Only(x.clone()),
                (StrSet::Only(x), StrSet::AllBut(y)) | (StrSet::AllBut(y), StrSet::Only(x))
                    if x != y =>
                {
                    StrSet::Only(x.clone())
                }
                (StrSet::AllBut(x), StrSet::AllBut(y)) if x == y => StrSet::AllBut(x.clone()),
                // Two distinct exclusions: the string domain is unbounded, so
                // plenty of values remain. Only emptiness is ever queried here.
                (StrSet::AllBut(x), StrSet::AllBut(_)) => StrSet::AllBut(x.clone()),
                _ => StrSet::Empty,
            }),
            // Different kinds share no value.
            _ => ValueSet::Bools(0),
        }
    }
}

fn int_set(op: RelOp, v: i64) -> Vec<(i64, i64)> {
    const MIN: i64 = i64::MIN;
    const MAX: i64 = i64::MAX;
    let mut out = Vec::with_capacity(2);
    match op {
        RelOp::Eq => out.push((v, v)),
        RelOp::Ne => {
            if v > MIN {
                out.push((MIN, v - 1));
            }
            if v < MAX {
                out.push((v + 1, MAX));
            }
        }
        RelOp::Lt => {
            if v > MIN {
                out.push((MIN, v - 1));
            }
        }
        RelOp::Le => out.push((MIN, v)),
        RelOp::Gt => {
            if v < MAX {
                out.push((v + 1, MAX));
            }
        }
        RelOp::Ge => out.push((v, MAX)),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_advertisement, parse_event, parse_predicate, parse_subscription};

    fn sub(t: &str) -> Subscription {
        parse_subscription(t).unwrap()
    }
    fn adv(t: &str) -> Advertisement {
        parse_advertisement(t).unwrap()
    }
    fn ev(t: &str) -> Event {
        parse_event(t).unwrap()
    }
    fn pred(t: &str) -> Predicate {
        parse_predicate(t).unwrap()
    }

    const S1: &str = r#"(product = "computer") AND (brand = "IBM") AND (price <= 1600)"#;

    #[test]
    fn pair_matching() {
        let e = ev("{(price, 1500)}");
        let pair = &e.pairs()[0];
        assert!(match_pair(pair, &pred("(price <= 1600)")));
        assert!(!match_pair(pair, &pred("(value <= 1600)")));
        let e = ev(r#"{(brand, "IBM")}"#);
        let ibm = &e.pairs()[0];
        assert!(!match_pair(ibm, &pred(r#"(brand = "Dell")"#)));
    }

    #[test]
    fn event_matching() {
        let e = ev(r#"{(product, "computer"), (brand, "IBM"), (price, 1500)}"#);
        assert!(match_event(&e, &sub(S1)));
        let e = ev(r#"{(book, "Stone Age"), (subject, "crocodiles")}"#);
        assert!(!match_event(
            &e,
            &sub(r#"(encyclopedia = "Stone Age") AND (subject = "reptiles")"#)
        ));
        assert!(match_event(
            &e,
            &sub(r#"(book = "Stone Age") AND (subject = "crocodiles")"#)
        ));
    }

    #[test]
    fn covering_table() {
        let s1 = sub(S1);
        let row1 = sub(r#"(product = "computer") AND (brand = "IBM") AND (price <= 1500)"#);
        assert!(covers(&s1, &row1));
        assert!(!covers(&row1, &s1));

        let row2 = sub(r#"(product = "computer") AND (price <= 1600)"#);
        assert!(covers(&row2, &s1));
        assert!(!covers(&s1, &row2));

        let row3 = sub(r#"(product = "computer") AND (brand = "Dell") AND (price <= 1500)"#);
        assert!(!covers(&s1, &row3));
        assert!(!covers(&row3, &s1));
    }

    #[test]
    fn implication_rules() {
        assert!(implies(&pred("(x = 3)"), &pred("(x <= 5)")));
        assert!(implies(&pred("(x = 3)"), &pred("(x != 4)")));
        assert!(!implies(&pred("(x = 4)"), &pred("(x != 4)")));
        assert!(implies(&pred("(x < 5)"), &pred("(x <= 4)")));
        assert!(!implies(&pred("(x < 5)"), &pred("(x <= 3)")));
        assert!(implies(&pred("(x > 5)"), &pred("(x >= 6)")));
        assert!(implies(&pred("(x != 4)"), &pred("(x != 4)")));
        assert!(!implies(&pred("(x != 4)"), &pred("(x != 5)")));
        assert!(!implies(&pred("(x != 4)"), &pred("(x < 100)")));
        assert!(implies(
            &pred("(x < -9223372036854775808)"),
            &pred(r#"(x = "a")"#)
        ));
        assert!(implies(&pred("(f != true)"), &pred("(f = false)")));
        assert!(implies(&pred(r#"(s = "a")"#), &pred(r#"(s != "b")"#)));
        assert!(!implies(&pred(r#"(s != "a")"#), &pred(r#"(s = "b")"#)));
        assert!(!implies(&pred("(x = 1)"), &pred(r#"(x = "1")"#)));
    }

    #[test]
    fn determines_examples() {
        let a = adv(r#"(product = "computer") AND (price <= 1500)"#);
        assert!(determines(
            &a,
            &ev(r#"{(product, "computer"), (price, 1200)}"#)
        ));
        assert!(!determines(
            &a,
            &ev(r#"{(product, "computer"), (brand, "IBM")}"#)
        ));
        let row3 = adv(r#"(product = "computer") AND (brand = "Dell") AND (price <= 1500)"#);
        assert!(!determines(
            &row3,
            &ev(r#"{(product, "computer"), (brand, "IBM"), (price, 1400)}"#)
        ));
    }

    #[test]
    fn intersection_table() {
        let s = sub(S1);
        assert!(intersects(
            &adv(r#"(product = "computer") AND (brand = "IBM") AND (price <= 1500)"#),
            &s
        ));
        assert!(intersects(
            &adv(r#"(product = "computer") AND (brand = "IBM") AND (price <= 1600)"#),
            &sub(r#"(product = "computer") AND (price <= 1600)"#)
        ));
        assert!(!intersects(
            &adv(r#"(product = "computer") AND (brand = "Dell") AND (price <= 1500)"#),
            &s
        ));
    }

    #[test]
    fn gap_pair_does_not_intersect_syntactically() {
        assert!(!intersects(
            &adv(r#"(product = "printed material") AND (price >= 10)"#),
            &sub(r#"(product = "book") AND (price <= 20)"#)
        ));
    }

    #[test]
    fn joint_satisfiability_edges() {
        assert!(jointly_satisfiable(&pred("(x >= 10)"), &pred("(x <= 10)")));
        assert!(!jointly_satisfiable(&pred("(x > 10)"), &pred("(x <= 10)")));
        assert!(!jointly_satisfiable(&pred("(x = 10)"), &pred("(x != 10)")));
        assert!(jointly_satisfiable(&pred("(x != 10)"), &pred("(x != 11)")));
        assert!(jointly_satisfiable(
            &pred(r#"(x != "a")"#),
            &pred(r#"(x != "b")"#)
        ));
        assert!(!jointly_satisfiable(
            &pred(r#"(x = "a")"#),
            &pred(r#"(x != "a")"#)
        ));
        assert!(!jointly_satisfiable(
            &pred("(x = 1)"),
            &pred(r#"(x = "1")"#)
        ));
        assert!(!jointly_satisfiable(
            &pred("(f = true)"),
            &pred("(f != true)")
        ));
        assert!(!jointly_satisfiable(
            &pred("(x > 9223372036854775807)"),
            &pred("(x != 0)")
        ));
    }

    #[test]
    fn identity_subscription_matches() {
        let e = ev(r#"{(a, "x"), (b, 2), (c, true)}"#);
        let s = sub(r#"(a = "x") AND (b = 2) AND (c = true)"#);
        assert!(match_event(&e, &s));
        assert!(covers(&s, &s));
        assert!(intersects(&adv(&s.to_string()), &s));
    }
}
