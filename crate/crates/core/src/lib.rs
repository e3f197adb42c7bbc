//! Semantic content-based publish/subscribe.
//!
//! - [`model`]: values, predicates, events, subscriptions, advertisements and their text form.
//! - [`syntactic`]: matching, covering, determination and intersection at syntax level.
//! - [`knowledge`]: synonyms, concept hierarchy and mapping functions.
//! - [`semantic`]: normalization, augmentation and the semantic relations.
//! - [`routing`]: the broker state machine.
//! - [`sim`]: scenario loading, deterministic overlay simulation and oracle verification.

pub mod knowledge;
pub mod model;
pub mod routing;
pub mod semantic;
pub mod sim;
pub mod syntactic;

#[cfg(any(test, feature = "testing"))]
pub mod testing;

pub use knowledge::{load_knowledge, KnowledgeBase};
pub use model::{
    parse_advertisement, parse_event, parse_subscription, Advertisement, Event, Pair, Predicate,
    Subscription, Value,
};
pub use routing::RoutingMode;
