//! Broker state machine for an acyclic overlay.
//!
//! Advertisements flood the tree. A subscription travels toward a neighbor
//! only when an advertisement received from that neighbor intersects it and
//! no subscription already sent there covers it. Events follow the reverse
//! subscription paths. Relations are syntactic or semantic depending on the
//! [`RoutingMode`]; every broker holds the same knowledge base.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::KnowledgeBase;
use crate::model::{Advertisement, Event, Subscription};
use crate::semantic::{self, AugmentedEvent, SemanticError};
use crate::syntactic;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RoutingError {
    #[error("broker `{broker}` has no link `{link}`")]
    UnknownLink { broker: String, link: LinkId },
    #[error(transparent)]
    Semantic(#[from] SemanticError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoutingMode {
    Syntactic,
    Semantic,
}

impl fmt::Display for RoutingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoutingMode::Syntactic => "syntactic",
            RoutingMode::Semantic => "semantic",
        })
    }
}

/// Routing behaviour shared by every broker of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoutingConfig {
    pub mode: RoutingMode,
    /// Suppress subscriptions covered by one already sent to the same neighbor.
    pub covering: bool,
    /// Only send subscriptions toward neighbors with an intersecting advertisement.
    pub gating: bool,
}

impl RoutingConfig {
    pub fn new(mode: RoutingMode) -> Self {
        RoutingConfig {
            mode,
            covering: true,
            gating: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkId {
    Broker(String),
    Client(String),
}

impl fmt::Display for LinkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkId::Broker(b) => write!(f, "broker:{b}"),
            LinkId::Client(c) => write!(f, "client:{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageKind {
    Advertise,
    Subscribe,
    Publish,
    Notify,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Advertise(Advertisement),
    Subscribe(Subscription),
    Publish(Event),
    Notify(Event),
}

impl Payload {
    pub fn kind(&self) -> MessageKind {
        match self {
            Payload::Advertise(_) => MessageKind::Advertise,
            Payload::Subscribe(_) => MessageKind::Subscribe,
            Payload::Publish(_) => MessageKind::Publish,
            Payload::Notify(_) => MessageKind::Notify,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub from: LinkId,
    pub to: LinkId,
    pub payload: Payload,
}

impl Message {
    pub fn kind(&self) -> MessageKind {
        self.payload.kind()
    }
}

#[derive(Debug, Clone)]
struct SubscriptionEntry {
    sub: Subscription,
    /// Form used by the relations: normalized in semantic mode.
    key: Subscription,
    origin: LinkId,
    forwarded_to: BTreeSet<String>,
}

#[derive(Debug, Clone)]
struct AdvertisementEntry {
    key: Advertisement,
    origin: LinkId,
}

/// Counters a broker keeps about its forwarding decisions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BrokerStats {
    /// Subscriptions withheld from a neighbor because a covering one was sent there.
    pub suppressed: u64,
    /// Subscriptions withheld from a neighbor for lack of an intersecting advertisement.
    pub gated: u64,
}

#[derive(Debug, Clone)]
pub struct BrokerState {
    id: String,
    neighbors: BTreeSet<String>,
    clients: BTreeSet<String>,
    subscriptions: Vec<SubscriptionEntry>,
    advertisements: Vec<AdvertisementEntry>,
    kb: Arc<KnowledgeBase>,
    config: RoutingConfig,
    stats: BrokerStats,
}

impl BrokerState {
    pub fn new(
        id: impl Into<String>,
        neighbors: impl IntoIterator<Item = String>,
        clients: impl IntoIterator<Item = String>,
        kb: Arc<KnowledgeBase>,
        config: RoutingConfig,
    ) -> Self {
        BrokerState {
            id: id.into(),
            neighbors: neighbors.into_iter().collect(),
            clients: clients.into_iter().collect(),
            subscriptions: Vec::new(),
            advertisements: Vec::new(),
            kb,
            config,
            stats: BrokerStats::default(),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn stats(&self) -> BrokerStats {
        self.stats
    }

    pub fn subscription_count(&self) -> usize {
        self.subscriptions.len()
    }

    pub fn advertisement_count(&self) -> usize {
        self.advertisements.len()
    }

    /// Origins of stored advertisements, in arrival order.
    pub fn advertisement_origins(&self) -> impl Iterator<Item = (&str, &LinkId)> {
        self.advertisements
            .iter()
            .map(|a| (a.key.id.as_str(), &a.origin))
    }

    /// Neighbors a stored subscription has been sent to.
    pub fn forwarded_to(&self, sub_id: &str) -> Option<&BTreeSet<String>> {
        self.subscriptions
            .iter()
            .find(|s| s.sub.id == sub_id)
            .map(|s| &s.forwarded_to)
    }

    pub fn handle(&mut self, message: Message) -> Result<Vec<Message>, RoutingError> {
        let from = message.from;
        match message.payload {
            Payload::Advertise(a) => self.handle_advertise(a, from),
            Payload::Subscribe(s) => self.handle_subscribe(s, from),
            Payload::Publish(e) => self.handle_publish(&e, from),
            // Notifications terminate at clients.
            Payload::Notify(_) => Ok(Vec::new()),
        }
    }

    pub fn handle_advertise(
        &mut self,
        adv: Advertisement,
        from: LinkId,
    ) -> Result<Vec<Message>, RoutingError> {
        self.check_link(&from)?;
        if self
            .advertisements
            .iter()
            .any(|a| a.key.id == adv.id && a.origin == from)
        {
            return Ok(Vec::new());
        }
        let key = match self.config.mode {
            RoutingMode::Syntactic => adv.clone(),
            RoutingMode::Semantic => semantic::normalize_advertisement(&adv, &self.kb),
        };
        let mut out: Vec<Message> = self
            .neighbors
            .iter()
            .filter(|n| !is_broker(&from, n))
            .map(|n| self.message_to(n, Payload::Advertise(adv.clone())))
            .collect();

        // Subscriptions stored before this advertisement reached us may now
        // have a publisher behind `from`.
        if let (LinkId::Broker(n), true) = (&from, self.config.gating) {
            for i in 0..self.subscriptions.len() {
                let entry = &self.subscriptions[i];
                if entry.origin == from || entry.forwarded_to.contains(n) {
                    continue;
                }
                if !self.intersects(&key, &entry.key) {
                    continue;
                }
                if self.covered_at(n, i) {
                    self.stats.suppressed += 1;
                    continue;
                }
                self.subscriptions[i].forwarded_to.insert(n.clone());
                let sub = self.subscriptions[i].sub.clone();
                out.push(self.message_to(n, Payload::Subscribe(sub)));
            }
        }
        self.advertisements
            .push(AdvertisementEntry { key, origin: from });
        Ok(out)
    }

    pub fn handle_subscribe(
        &mut self,
        sub: Subscription,
        from: LinkId,
    ) -> Result<Vec<Message>, RoutingError> {
        self.check_link(&from)?;
        if self
            .subscriptions
            .iter()
            .any(|s| s.sub.id == sub.id && s.origin == from)
        {
            return Ok(Vec::new());
        }
        let key = match self.config.mode {
            RoutingMode::Syntactic => sub.clone(),
            RoutingMode::Semantic => semantic::normalize_subscription(&sub, &self.kb),
        };
        self.subscriptions.push(SubscriptionEntry {
            sub,
            key,
            origin: from.clone(),
            forwarded_to: BTreeSet::new(),
        });
        let idx = self.subscriptions.len() - 1;

        let mut out = Vec::new();
        let neighbors: Vec<String> = self
            .neighbors
            .iter()
            .filter(|n| !is_broker(&from, n))
            .cloned()
            .collect();
        for n in neighbors {
            if self.config.gating {
                let origin = LinkId::Broker(n.clone());
                let key = &self.subscriptions[idx].key;
                let reachable = self
                    .advertisements
                    .iter()
                    .any(|a| a.origin == origin && self.intersects(&a.key, key));
                if !reachable {
                    self.stats.gated += 1;
                    continue;
                }
            }
            if self.covered_at(&n, idx) {
                self.stats.suppressed += 1;
                continue;
            }
            self.subscriptions[idx].forwarded_to.insert(n.clone());
            let sub = self.subscriptions[idx].sub.clone();
            out.push(self.message_to(&n, Payload::Subscribe(sub)));
        }
        Ok(out)
    }

    pub fn handle_publish(
        &mut self,
        event: &Event,
        from: LinkId,
    ) -> Result<Vec<Message>, RoutingError> {
        self.check_link(&from)?;
        let matcher = Matcher::new(event, &self.kb, self.config.mode)?;
        let mut targets: BTreeSet<&LinkId> = BTreeSet::new();
        for entry in &self.subscriptions {
            if targets.contains(&entry.origin) {
                continue;
            }
            if let LinkId::Broker(_) = entry.origin {
                if entry.origin == from {
                    continue;
                }
            }
            if matcher.matches(&entry.key) {
                targets.insert(&entry.origin);
            }
        }
        let me = LinkId::Broker(self.id.clone());
        Ok(targets
            .into_iter()
            .map(|t| Message {
                from: me.clone(),
                to: t.clone(),
                payload: match t {
                    LinkId::Client(_) => Payload::Notify(event.clone()),
                    LinkId::Broker(_) => Payload::Publish(event.clone()),
                },
            })
            .collect())
    }

    fn check_link(&self, link: &LinkId) -> Result<(), RoutingError> {
        let known = match link {
            LinkId::Broker(b) => self.neighbors.contains(b),
            LinkId::Client(c) => self.clients.contains(c),
        };
        if known {
            Ok(())
        } else {
            Err(RoutingError::UnknownLink {
                broker: self.id.clone(),
                link: link.clone(),
            })
        }
    }

    fn message_to(&self, neighbor: &str, payload: Payload) -> Message {
        Message {
            from: LinkId::Broker(self.id.clone()),
            to: LinkId::Broker(neighbor.to_owned()),
            payload,
        }
    }

    /// A subscription other than `idx` already sent to `neighbor` covers `idx`.
    fn covered_at(&self, neighbor: &str, idx: usize) -> bool {
        if !self.config.covering {
            return false;
        }
        let key = &self.subscriptions[idx].key;
        self.subscriptions
            .iter()
            .enumerate()
            .any(|(j, s)| j != idx && s.forwarded_to.contains(neighbor) && self.covers(&s.key, key))
    }

    fn covers(&self, s1: &Subscription, s2: &Subscription) -> bool {
        match self.config.mode {
            RoutingMode::Syntactic => syntactic::covers(s1, s2),
            RoutingMode::Semantic => semantic::covers_normalized(s1, s2, &self.kb),
        }
    }

    fn intersects(&self, adv: &Advertisement, sub: &Subscription) -> bool {
        match self.config.mode {
            RoutingMode::Syntactic => syntactic::intersects(adv, sub),
            RoutingMode::Semantic => semantic::intersects_normalized(adv, sub, &self.kb),
        }
    }
}

fn is_broker(link: &LinkId, name: &str) -> bool {
    matches!(link, LinkId::Broker(b) if b == name)
}

/// Evaluates one event against many stored subscriptions, augmenting it once.
pub(crate) enum Matcher<'e> {
    Syntactic(&'e Event),
    Semantic(AugmentedEvent),
}

impl<'e> Matcher<'e> {
    pub(crate) fn new(
        event: &'e Event,
        kb: &KnowledgeBase,
        mode: RoutingMode,
    ) -> Result<Self, SemanticError> {
        Ok(match mode {
            RoutingMode::Syntactic => Matcher::Syntactic(event),
            RoutingMode::Semantic => Matcher::Semantic(semantic::augment(
                &semantic::normalize_event(event, kb),
                kb,
            )?),
        })
    }

    /// `sub` must be in the form the mode expects (normalized when semantic).
    pub(crate) fn matches(&self, sub: &Subscription) -> bool {
        match self {
            Matcher::Syntactic(e) => syntactic::match_event(e, sub),
            Matcher::Semantic(aug) => aug.matches(sub),
        }
    }
}
