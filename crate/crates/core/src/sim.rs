//! Scenario-driven simulation of a broker overlay.
//!
//! A scenario is a tree of brokers, clients attached to brokers, a knowledge
//! base and a script of client actions. [`run`] executes the script one
//! action at a time; every action's message cascade is carried to quiescence
//! before the next one starts. Within a cascade messages are delivered
//! breadth-first by hop, and messages of the same hop are ordered by
//! destination broker id (stable, so each link stays FIFO). There is no clock.
//!
//! [`oracle_deliveries`] recomputes the expected deliveries with a single
//! matcher that sees every subscription, and [`verify`] compares the two.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::knowledge::{EdgeDoc, KnowledgeBase, KnowledgeDocument, KnowledgeError, SynonymDoc};
use crate::model::{
    parse_advertisement, parse_event, parse_subscription, Advertisement, AttributeName, Event,
    Pair, ParseError, Predicate, RelOp, Subscription, Value,
};
use crate::routing::{
    BrokerState, LinkId, Message, MessageKind, Payload, RoutingConfig, RoutingError, RoutingMode,
};
use crate::semantic::{self, SemanticError};
use crate::syntactic;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("knowledge base: {0}")]
    Knowledge(#[from] KnowledgeError),
    #[error("scenario declares no brokers")]
    NoBrokers,
    #[error("broker `{0}` declared twice")]
    DuplicateBroker(String),
    #[error("edge references unknown broker `{0}`")]
    UnknownBroker(String),
    #[error("edge {0} -- {0} is a self-loop")]
    SelfLoop(String),
    #[error("edge {0} -- {1} listed twice")]
    DuplicateEdge(String, String),
    #[error("edge {0} -- {1} closes a cycle")]
    Cycle(String, String),
    #[error("broker `{0}` is not connected to the rest of the overlay")]
    Disconnected(String),
    #[error("client `{0}` declared twice")]
    DuplicateClient(String),
    #[error("client `{client}` is attached to unknown broker `{broker}`")]
    ClientBroker { client: String, broker: String },
    #[error("script[{index}]: unknown client `{client}`")]
    UnknownClient { index: usize, client: String },
    #[error("script[{index}]: {source}")]
    Payload {
        index: usize,
        #[source]
        source: ParseError,
    },
    #[error("script[{index}]: id `{id}` already used")]
    DuplicateId { index: usize, id: String },
    #[error("script[{index}]: no earlier advertisement of `{client}` determines the event")]
    Undetermined { index: usize, client: String },
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("script[{index}]: {source}")]
    Routing {
        index: usize,
        #[source]
        source: RoutingError,
    },
    #[error("script[{index}]: {source}")]
    Semantic {
        index: usize,
        #[source]
        source: SemanticError,
    },
}

/// JSON form of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    pub brokers: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
    #[serde(default)]
    pub clients: Vec<ClientDoc>,
    /// Path relative to the scenario file, or the knowledge document itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub knowledge: Option<KnowledgeRef>,
    pub mode: RoutingMode,
    #[serde(default)]
    pub script: Vec<ActionDoc>,
    /// Generator seed, carried into reports for replay.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KnowledgeRef {
    Path(String),
    Inline(KnowledgeDocument),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientDoc {
    pub id: String,
    pub broker: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActionKind {
    Advertise,
    Subscribe,
    Publish,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDoc {
    pub action: ActionKind,
    pub client: String,
    pub payload: String,
    /// Advertisement or subscription id; defaults to `<client>#<script index>`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Advertise { client: String, adv: Advertisement },
    Subscribe { client: String, sub: Subscription },
    Publish { client: String, event: Event },
}

impl Action {
    pub fn client(&self) -> &str {
        match self {
            Action::Advertise { client, .. }
            | Action::Subscribe { client, .. }
            | Action::Publish { client, .. } => client,
        }
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub brokers: Vec<String>,
    pub edges: Vec<(String, String)>,
    /// Client id to home broker.
    pub clients: BTreeMap<String, String>,
    pub kb: Arc<KnowledgeBase>,
    pub mode: RoutingMode,
    pub script: Vec<Action>,
    pub seed: Option<u64>,
}

/// Parses and validates a scenario. Knowledge paths resolve against `base_dir`.
pub fn load_scenario(document: &[u8], base_dir: &Path) -> Result<Scenario, ScenarioError> {
    let doc: ScenarioDocument = serde_json::from_slice(document)?;
    Scenario::from_document(doc, base_dir)
}

pub fn load_scenario_file(path: &Path) -> Result<Scenario, ScenarioError> {
    let bytes = fs::read(path).map_err(|source| ScenarioError::Io {
        path: path.to_owned(),
        source,
    })?;
    load_scenario(&bytes, path.parent().unwrap_or(Path::new(".")))
}

/// Whether each publish must be determined by an earlier advertisement of
/// the same client. Routing completeness is only promised for checked
/// scenarios; `Unchecked` exists to exhibit what goes wrong otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PublishCheck {
    #[default]
    Determined,
    Unchecked,
}

impl Scenario {
    pub fn from_document(
        doc: ScenarioDocument,
        base_dir: &Path,
    ) -> Result<Scenario, ScenarioError> {
        Scenario::from_document_with(doc, base_dir, PublishCheck::Determined)
    }

    pub fn from_document_with(
        doc: ScenarioDocument,
        base_dir: &Path,
        check: PublishCheck,
    ) -> Result<Scenario, ScenarioError> {
        check_tree(&doc.brokers, &doc.edges)?;

        let declared: HashSet<&str> = doc.brokers.iter().map(String::as_str).collect();
        let mut clients = BTreeMap::new();
        for c in &doc.clients {
            if !declared.contains(c.broker.as_str()) {
                return Err(ScenarioError::ClientBroker {
                    client: c.id.clone(),
                    broker: c.broker.clone(),
                });
            }
            if clients.insert(c.id.clone(), c.broker.clone()).is_some() {
                return Err(ScenarioError::DuplicateClient(c.id.clone()));
            }
        }

        let kb = match doc.knowledge {
            None => KnowledgeBase::empty(),
            Some(KnowledgeRef::Inline(k)) => k.into_knowledge()?,
            Some(KnowledgeRef::Path(p)) => {
                let path = base_dir.join(p);
                let bytes = fs::read(&path).map_err(|source| ScenarioError::Io { path, source })?;
                crate::knowledge::load_knowledge(&bytes)?
            }
        };

        let mut script = Vec::with_capacity(doc.script.len());
        let mut adv_ids = HashSet::new();
        let mut sub_ids = HashSet::new();
        let mut advertised: HashMap<&str, Vec<Advertisement>> = HashMap::new();
        for (index, a) in doc.script.iter().enumerate() {
            if !clients.contains_key(&a.client) {
                return Err(ScenarioError::UnknownClient {
                    index,
                    client: a.client.clone(),
                });
            }
            let payload_err = |source| ScenarioError::Payload { index, source };
            let id =
                a.id.clone()
                    .unwrap_or_else(|| format!("{}#{index}", a.client));
            let client = a.client.clone();
            let action = match a.action {
                ActionKind::Advertise => {
                    if !adv_ids.insert(id.clone()) {
                        return Err(ScenarioError::DuplicateId { index, id });
                    }
                    let adv = parse_advertisement(&a.payload)
                        .map_err(payload_err)?
                        .with_id(id);
                    advertised
                        .entry(a.client.as_str())
                        .or_default()
                        .push(adv.clone());
                    Action::Advertise { client, adv }
                }
                ActionKind::Subscribe => {
                    if !sub_ids.insert(id.clone()) {
                        return Err(ScenarioError::DuplicateId { index, id });
                    }
                    let sub = parse_subscription(&a.payload)
                        .map_err(payload_err)?
                        .with_id(id);
                    Action::Subscribe { client, sub }
                }
                ActionKind::Publish => {
                    let event = parse_event(&a.payload).map_err(payload_err)?;
                    let determined = advertised.get(a.client.as_str()).is_some_and(|advs| {
                        advs.iter()
                            .any(|adv| determines(doc.mode, adv, &event, &kb))
                    });
                    if !determined && check == PublishCheck::Determined {
                        return Err(ScenarioError::Undetermined { index, client });
                    }
                    Action::Publish { client, event }
                }
            };
            script.push(action);
        }

        Ok(Scenario {
            brokers: doc.brokers,
            edges: doc.edges,
            clients,
            kb: Arc::new(kb),
            mode: doc.mode,
            script,
            seed: doc.seed,
        })
    }

    /// Number of publish actions; event indices run from 0 to this value.
    pub fn event_count(&self) -> usize {
        self.script
            .iter()
            .filter(|a| matches!(a, Action::Publish { .. }))
            .count()
    }
}

fn determines(mode: RoutingMode, adv: &Advertisement, event: &Event, kb: &KnowledgeBase) -> bool {
    match mode {
        RoutingMode::Syntactic => syntactic::determines(adv, event),
        RoutingMode::Semantic => semantic::sem_determines(adv, event, kb),
    }
}

fn check_tree(brokers: &[String], edges: &[(String, String)]) -> Result<(), ScenarioError> {
    if brokers.is_empty() {
        return Err(ScenarioError::NoBrokers);
    }
    let mut index = HashMap::new();
    for (i, b) in brokers.iter().enumerate() {
        if index.insert(b.as_str(), i).is_some() {
            return Err(ScenarioError::DuplicateBroker(b.clone()));
        }
    }
    // Union-find: an edge joining two already connected brokers closes a cycle.
    let mut parent: Vec<usize> = (0..brokers.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut seen = HashSet::new();
    for (a, b) in edges {
        let ia = *index
            .get(a.as_str())
            .ok_or_else(|| ScenarioError::UnknownBroker(a.clone()))?;
        let ib = *index
            .get(b.as_str())
            .ok_or_else(|| ScenarioError::UnknownBroker(b.clone()))?;
        if ia == ib {
            return Err(ScenarioError::SelfLoop(a.clone()));
        }
        if !seen.insert((ia.min(ib), ia.max(ib))) {
            return Err(ScenarioError::DuplicateEdge(a.clone(), b.clone()));
        }
        let (ra, rb) = (find(&mut parent, ia), find(&mut parent, ib));
        if ra == rb {
            return Err(ScenarioError::Cycle(a.clone(), b.clone()));
        }
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    for (i, b) in brokers.iter().enumerate() {
        if find(&mut parent, i) != root {
            return Err(ScenarioError::Disconnected(b.clone()));
        }
    }
    Ok(())
}

/// Knobs for ablation runs. Both optimizations are on by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub covering: bool,
    pub gating: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            covering: true,
            gating: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Delivery {
    pub client: String,
    pub event: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub advertise: u64,
    pub subscribe: u64,
    pub publish: u64,
    pub notify: u64,
}

impl KindCounts {
    fn bump(&mut self, kind: MessageKind) {
        match kind {
            MessageKind::Advertise => self.advertise += 1,
            MessageKind::Subscribe => self.subscribe += 1,
            MessageKind::Publish => self.publish += 1,
            MessageKind::Notify => self.notify += 1,
        }
    }

    fn add(&mut self, other: &KindCounts) {
        self.advertise += other.advertise;
        self.subscribe += other.subscribe;
        self.publish += other.publish;
        self.notify += other.notify;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkCounts {
    pub from: String,
    pub to: String,
    #[serde(flatten)]
    pub counts: KindCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Fail {
        missing: Vec<Delivery>,
        spurious: Vec<Delivery>,
    },
    MappingGap {
        missing: Vec<Delivery>,
        spurious: Vec<Delivery>,
    },
}

impl Verdict {
    pub fn token(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail { .. } => "FAIL",
            Verdict::MappingGap { .. } => "MAPPING_GAP",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimReport {
    pub mode: RoutingMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub covering: bool,
    pub gating: bool,
    pub events: usize,
    pub deliveries: Vec<Delivery>,
    /// Notifications that reached a client for an event it already had.
    pub duplicate_notifications: u64,
    /// Per link, client injections included, ordered by (from, to).
    pub links: Vec<LinkCounts>,
    pub totals: KindCounts,
    pub suppressed: u64,
    pub gated: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl SimReport {
    pub fn delivery_set(&self) -> BTreeSet<Delivery> {
        self.deliveries.iter().cloned().collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One `key value` line per metric, in a fixed order.
    pub fn metrics_table(&self) -> String {
        let mut rows: Vec<(String, String)> = vec![
            ("mode".into(), self.mode.to_string()),
            (
                "seed".into(),
                self.seed.map_or_else(|| "-".into(), |s| s.to_string()),
            ),
            ("covering".into(), self.covering.to_string()),
            ("gating".into(), self.gating.to_string()),
            ("events".into(), self.events.to_string()),
            ("deliveries".into(), self.deliveries.len().to_string()),
            (
                "duplicate_notifications".into(),
                self.duplicate_notifications.to_string(),
            ),
            ("suppressed".into(), self.suppressed.to_string()),
            ("gated".into(), self.gated.to_string()),
        ];
        let mut push_counts = |prefix: &str, c: &KindCounts| {
            rows.push((format!("{prefix}.advertise"), c.advertise.to_string()));
            rows.push((format!("{prefix}.subscribe"), c.subscribe.to_string()));
            rows.push((format!("{prefix}.publish"), c.publish.to_string()));
            rows.push((format!("{prefix}.notify"), c.notify.to_string()));
        };
        push_counts("total", &self.totals);
        for l in &self.links {
            push_counts(&format!("link.{}>{}", l.from, l.to), &l.counts);
        }
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut out = String::new();
        for (k, v) in rows {
            let _ = writeln!(out, "{k:<width$}  {v}");
        }
        out
    }
}

/// Executes the script and collects deliveries and traffic counts.
pub fn run(scenario: &Scenario, options: RunOptions) -> Result<SimReport, SimError> {
    let mut neighbors: BTreeMap<&str, Vec<String>> = scenario
        .brokers
        .iter()
        .map(|b| (b.as_str(), Vec::new()))
        .collect();
    for (a, b) in &scenario.edges {
        neighbors
            .get_mut(a.as_str())
            .expect("validated")
            .push(b.clone());
        neighbors
            .get_mut(b.as_str())
            .expect("validated")
            .push(a.clone());
    }
    let config = RoutingConfig {
        mode: scenario.mode,
        covering: options.covering,
        gating: options.gating,
    };
    let mut brokers: BTreeMap<String, BrokerState> = scenario
        .brokers
        .iter()
        .map(|b| {
            let clients = scenario
                .clients
                .iter()
                .filter(|(_, home)| *home == b)
                .map(|(c, _)| c.clone());
            let state = BrokerState::new(
                b.clone(),
                neighbors[b.as_str()].clone(),
                clients,
                Arc::clone(&scenario.kb),
                config,
            );
            (b.clone(), state)
        })
        .collect();

    let mut links: BTreeMap<(String, String), KindCounts> = BTreeMap::new();
    let mut deliveries = BTreeSet::new();
    let mut duplicates = 0;
    let mut event_index = 0;

    for (index, action) in scenario.script.iter().enumerate() {
        let client = action.client().to_owned();
        let home = scenario.clients[&client].clone();
        let payload = match action {
            Action::Advertise { adv, .. } => Payload::Advertise(adv.clone()),
            Action::Subscribe { sub, .. } => Payload::Subscribe(sub.clone()),
            Action::Publish { event, .. } => Payload::Publish(event.clone()),
        };
        let mut hop = vec![Message {
            from: LinkId::Client(client),
            to: LinkId::Broker(home),
            payload,
        }];
        while !hop.is_empty() {
            hop.sort_by(|a, b| dest_key(&a.to).cmp(&dest_key(&b.to)));
            let mut next = Vec::new();
            for msg in hop {
                links
                    .entry((msg.from.to_string(), msg.to.to_string()))
                    .or_default()
                    .bump(msg.kind());
                match &msg.to {
                    LinkId::Client(c) => {
                        if !deliveries.insert(Delivery {
                            client: c.clone(),
                            event: event_index,
                        }) {
                            duplicates += 1;
                        }
                    }
                    LinkId::Broker(b) => {
                        let state = brokers
                            .get_mut(b)
                            .expect("messages only address known brokers");
                        let out = state
                            .handle(msg)
                            .map_err(|source| SimError::Routing { index, source })?;
                        next.extend(out);
                    }
                }
            }
            hop = next;
        }
        if matches!(action, Action::Publish { .. }) {
            event_index += 1;
        }
    }

    let mut totals = KindCounts::default();
    for c in links.values() {
        totals.add(c);
    }
    let (suppressed, gated) = brokers
        .values()
        .map(|b| b.stats())
        .fold((0, 0), |(s, g), st| (s + st.suppressed, g + st.gated));
    Ok(SimReport {
        mode: scenario.mode,
        seed: scenario.seed,
        covering: options.covering,
        gating: options.gating,
        events: event_index,
        deliveries: deliveries.into_iter().collect(),
        duplicate_notifications: duplicates,
        links: links
            .into_iter()
            .map(|((from, to), counts)| LinkCounts { from, to, counts })
            .collect(),
        totals,
        suppressed,
        gated,
        verdict: None,
    })
}

fn dest_key(link: &LinkId) -> (u8, &str) {
    match link {
        LinkId::Broker(b) => (0, b),
        LinkId::Client(c) => (1, c),
    }
}

/// Deliveries a single broker holding every earlier subscription would make.
pub fn oracle_deliveries(scenario: &Scenario) -> Result<BTreeSet<Delivery>, SimError> {
    oracle_with(scenario, &scenario.kb)
}

fn oracle_with(scenario: &Scenario, kb: &KnowledgeBase) -> Result<BTreeSet<Delivery>, SimError> {
    let mut active: Vec<(&str, Subscription)> = Vec::new();
    let mut out = BTreeSet::new();
    let mut event_index = 0;
    for (index, action) in scenario.script.iter().enumerate() {
        match action {
            Action::Advertise { .. } => {}
            Action::Subscribe { client, sub } => {
                let key = match scenario.mode {
                    RoutingMode::Syntactic => sub.clone(),
                    RoutingMode::Semantic => semantic::normalize_subscription(sub, kb),
                };
                active.push((client, key));
            }
            Action::Publish { event, .. } => {
                let augmented = match scenario.mode {
                    RoutingMode::Syntactic => None,
                    RoutingMode::Semantic => Some(
                        semantic::augment(&semantic::normalize_event(event, kb), kb)
                            .map_err(|source| SimError::Semantic { index, source })?,
                    ),
                };
                for (client, key) in &active {
                    let hit = match &augmented {
                        None => syntactic::match_event(event, key),
                        Some(aug) => aug.matches(key),
                    };
                    if hit {
                        out.insert(Delivery {
                            client: client.to_string(),
                            event: event_index,
                        });
                    }
                }
                event_index += 1;
            }
        }
    }
    Ok(out)
}

/// Compares a run against the oracle. Missing deliveries that only exist
/// because of mapping functions are reported as a mapping gap: the routing
/// relations ignore mappings, so such subscriptions may be gated or covered
/// away before reaching the publisher's side.
pub fn verify(scenario: &Scenario, report: &SimReport) -> Result<Verdict, SimError> {
    let expected = oracle_deliveries(scenario)?;
    let actual = report.delivery_set();
    let missing: Vec<Delivery> = expected.difference(&actual).cloned().collect();
    let spurious: Vec<Delivery> = actual.difference(&expected).cloned().collect();
    if missing.is_empty() && spurious.is_empty() {
        return Ok(Verdict::Pass);
    }
    let explained = spurious.is_empty() && !scenario.kb.mappings().is_empty() && {
        let without = oracle_with(scenario, &scenario.kb.without_mappings())?;
        missing.iter().all(|d| !without.contains(d))
    };
    Ok(if explained {
        Verdict::MappingGap { missing, spurious }
    } else {
        Verdict::Fail { missing, spurious }
    })
}

/// Runs the scenario and attaches the oracle verdict.
pub fn simulate(scenario: &Scenario, options: RunOptions) -> Result<SimReport, SimError> {
    let mut report = run(scenario, options)?;
    report.verdict = Some(verify(scenario, &report)?);
    Ok(report)
}

/// Size limits for [`generate_scenario`]. Actual sizes are drawn below them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorConfig {
    pub mode: RoutingMode,
    pub max_brokers: usize,
    pub max_subscriptions: usize,
    pub max_events: usize,
    pub max_concepts: usize,
}

impl GeneratorConfig {
    pub fn new(mode: RoutingMode) -> Self {
        GeneratorConfig {
            mode,
            max_brokers: 10,
            max_subscriptions: 200,
            max_events: 1000,
            max_concepts: 100,
        }
    }
}

const STRING_ATTRIBUTES: [&str; 4] = ["topic", "genre", "region", "city"];
const INT_ATTRIBUTES: [&str; 2] = ["price", "year"];

/// A random mapping-free scenario: a broker tree, a concept forest over
/// values and string attributes, a few synonyms, and an interleaved script in
/// which every publish is determined by an earlier advertisement of its client.
pub fn generate_scenario(seed: u64, config: GeneratorConfig) -> ScenarioDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let n_brokers = rng.random_range(2..=config.max_brokers.max(2));
    let brokers: Vec<String> = (0..n_brokers).map(|i| format!("b{i:02}")).collect();
    let edges = (1..n_brokers)
        .map(|i| (brokers[rng.random_range(0..i)].clone(), brokers[i].clone()))
        .collect();
    let mut clients = Vec::new();
    for b in &brokers {
        for j in 0..rng.random_range(1..=3) {
            clients.push(ClientDoc {
                id: format!("{b}-c{j}"),
                broker: b.clone(),
            });
        }
    }

    let knowledge = random_knowledge(&mut rng, config.max_concepts);
    let kb = knowledge
        .clone()
        .into_knowledge()
        .expect("generated knowledge is valid");
    let vocab = Vocabulary::new(&kb);

    let mut publishers: Vec<&ClientDoc> = clients.iter().filter(|_| rng.random_bool(0.4)).collect();
    if publishers.is_empty() {
        publishers.push(clients.choose(&mut rng).unwrap());
    }
    let mut pending_ads: Vec<(String, Advertisement)> = Vec::new();
    for p in &publishers {
        for _ in 0..rng.random_range(1..=2) {
            pending_ads.push((p.id.clone(), vocab.advertisement(&mut rng)));
        }
    }
    pending_ads.shuffle(&mut rng);

    let n_subs = rng.random_range(0..=config.max_subscriptions);
    let n_events = rng.random_range(0..=config.max_events);
    let (mut ads_left, mut subs_left, mut events_left) = (pending_ads.len(), n_subs, n_events);
    let mut issued_ads: Vec<(String, Advertisement)> = Vec::new();
    let mut issued_subs: Vec<Subscription> = Vec::new();
    let mut script = Vec::new();
    while ads_left + subs_left + events_left > 0 {
        let publishable = if issued_ads.is_empty() {
            0
        } else {
            events_left
        };
        let roll = rng.random_range(0..ads_left * 20 + subs_left + publishable);
        if roll < ads_left * 20 {
            // Advertisements are weighted up so most land early, but some still
            // arrive after subscriptions that depend on them.
            let (client, adv) = pending_ads.pop().unwrap();
            ads_left -= 1;
            script.push(ActionDoc {
                action: ActionKind::Advertise,
                client: client.clone(),
                payload: adv.to_string(),
                id: None,
            });
            issued_ads.push((client, adv));
        } else if roll < ads_left * 20 + subs_left {
            subs_left -= 1;
            let sub = vocab.subscription(&mut rng, &pending_ads, &issued_ads, &issued_subs, &kb);
            let client = clients.choose(&mut rng).unwrap();
            script.push(ActionDoc {
                action: ActionKind::Subscribe,
                client: client.id.clone(),
                payload: sub.to_string(),
                id: None,
            });
            issued_subs.push(sub);
        } else {
            events_left -= 1;
            let (client, adv) = issued_ads.choose(&mut rng).unwrap();
            let event = vocab.event(&mut rng, adv, config.mode, &kb);
            script.push(ActionDoc {
                action: ActionKind::Publish,
                client: client.clone(),
                payload: event.to_string(),
                id: None,
            });
        }
    }

    ScenarioDocument {
        brokers,
        edges,
        clients,
        knowledge: Some(KnowledgeRef::Inline(knowledge)),
        mode: config.mode,
        script,
        seed: Some(seed),
    }
}

fn random_knowledge(rng: &mut ChaCha8Rng, max_concepts: usize) -> KnowledgeDocument {
    let n_values = rng.random_range(8..=max_concepts.saturating_sub(12).max(8));
    let mut hierarchy = Vec::new();
    for i in 1..n_values {
        if rng.random_bool(0.8) {
            let p = rng.random_range(0..i);
            hierarchy.push(EdgeDoc {
                child: format!("k{i:02}"),
                parent: format!("k{p:02}"),
            });
        }
    }
    // Attribute hierarchy: genre under topic, city under region, sometimes.
    for (child, parent) in [("genre", "topic"), ("city", "region")] {
        if rng.random_bool(0.6) {
            hierarchy.push(EdgeDoc {
                child: child.into(),
                parent: parent.into(),
            });
        }
    }
    let mut synonyms = Vec::new();
    for i in 0..n_values {
        if rng.random_bool(0.1) {
            synonyms.push(SynonymDoc {
                root: format!("k{i:02}"),
                members: vec![format!("k{i:02}-alt")],
            });
        }
    }
    if rng.random_bool(0.5) {
        synonyms.push(SynonymDoc {
            root: "topic".into(),
            members: vec!["subject".into()],
        });
    }
    KnowledgeDocument {
        synonyms,
        hierarchy,
        mappings: Vec::new(),
        reference_year: None,
    }
}

/// Terms available to the generator, raw spellings included.
struct Vocabulary {
    values: Vec<String>,
    surfaces: HashMap<String, Vec<String>>,
    subtrees: HashMap<String, Vec<String>>,
}

impl Vocabulary {
    fn new(kb: &KnowledgeBase) -> Self {
        let mut values: Vec<String> = Vec::new();
        for e in kb.hierarchy_edges() {
            for t in [&e.0, &e.1] {
                if t.starts_with('k') && !values.contains(t) {
                    values.push(t.clone());
                }
            }
        }
        for g in kb.synonym_groups() {
            if g.root.starts_with('k') && !values.contains(&g.root) {
                values.push(g.root.clone());
            }
        }
        if values.is_empty() {
            values.push("k00".into());
        }
        values.sort();
        let mut surfaces: HashMap<String, Vec<String>> = HashMap::new();
        let mut subtrees = HashMap::new();
        let all = values
            .iter()
            .cloned()
            .chain(STRING_ATTRIBUTES.iter().map(|s| s.to_string()));
        for t in all {
            let mut names = vec![t.clone()];
            if let Some(g) = kb.synonym_groups().iter().find(|g| g.root == t) {
                names.extend(g.members.iter().cloned());
            }
            surfaces.insert(t.clone(), names);
            subtrees.insert(
                t.clone(),
                kb.subtree(&t).into_iter().map(str::to_owned).collect(),
            );
        }
        Vocabulary {
            values,
            surfaces,
            subtrees,
        }
    }

    fn spell(&self, rng: &mut ChaCha8Rng, term: &str) -> String {
        self.surfaces
            .get(term)
            .and_then(|s| s.choose(rng))
            .cloned()
            .unwrap_or_else(|| term.to_owned())
    }

    fn below(&self, rng: &mut ChaCha8Rng, term: &str) -> String {
        self.subtrees
            .get(term)
            .and_then(|s| s.choose(rng))
            .cloned()
            .unwrap_or_else(|| term.to_owned())
    }

    fn value(&self, rng: &mut ChaCha8Rng) -> String {
        self.values.choose(rng).unwrap().clone()
    }

    fn predicate(&self, rng: &mut ChaCha8Rng) -> Predicate {
        if rng.random_bool(0.3) {
            let attr = *INT_ATTRIBUTES.choose(rng).unwrap();
            let op = *[
                RelOp::Eq,
                RelOp::Ne,
                RelOp::Lt,
                RelOp::Le,
                RelOp::Gt,
                RelOp::Ge,
            ]
            .choose(rng)
            .unwrap();
            return pred(attr.into(), op, Value::Int(rng.random_range(0..20)));
        }
        let attr = STRING_ATTRIBUTES.choose(rng).unwrap();
        let op = if rng.random_bool(0.85) {
            RelOp::Eq
        } else {
            RelOp::Ne
        };
        let value = self.value(rng);
        pred(
            self.spell(rng, attr),
            op,
            Value::Str(self.spell(rng, &value)),
        )
    }

    fn advertisement(&self, rng: &mut ChaCha8Rng) -> Advertisement {
        let n = rng.random_range(1..=4);
        Advertisement::new("", (0..n).map(|_| self.predicate(rng)).collect()).unwrap()
    }

    /// Narrows a predicate toward the leaves: descendant attribute and value,
    /// tighter integer bound.
    fn narrow(&self, rng: &mut ChaCha8Rng, p: &Predicate) -> Predicate {
        let attr = self.below(rng, p.attribute.as_str());
        let attr = self.spell(rng, &attr);
        match (&p.value, p.op) {
            (Value::Str(v), RelOp::Eq) => {
                let v = self.below(rng, v);
                pred(attr, RelOp::Eq, Value::Str(self.spell(rng, &v)))
            }
            (Value::Int(c), RelOp::Lt | RelOp::Le) => {
                pred(attr, p.op, Value::Int(c - rng.random_range(0..3)))
            }
            (Value::Int(c), RelOp::Gt | RelOp::Ge) => {
                pred(attr, p.op, Value::Int(c + rng.random_range(0..3)))
            }
            _ => pred(attr, p.op, p.value.clone()),
        }
    }

    /// Widens a predicate: parent value or looser integer bound.
    fn widen(&self, rng: &mut ChaCha8Rng, kb: &KnowledgeBase, p: &Predicate) -> Predicate {
        match (&p.value, p.op) {
            (Value::Str(v), RelOp::Eq) => {
                let v = kb.parent(kb.root_term(v)).unwrap_or(v).to_owned();
                pred(p.attribute.as_str().into(), RelOp::Eq, Value::Str(v))
            }
            (Value::Int(c), RelOp::Lt | RelOp::Le) => pred(
                p.attribute.as_str().into(),
                p.op,
                Value::Int(c + rng.random_range(0..3)),
            ),
            (Value::Int(c), RelOp::Gt | RelOp::Ge) => pred(
                p.attribute.as_str().into(),
                p.op,
                Value::Int(c - rng.random_range(0..3)),
            ),
            _ => p.clone(),
        }
    }

    fn subscription(
        &self,
        rng: &mut ChaCha8Rng,
        pending_ads: &[(String, Advertisement)],
        issued_ads: &[(String, Advertisement)],
        issued_subs: &[Subscription],
        kb: &KnowledgeBase,
    ) -> Subscription {
        let roll = rng.random_range(0..100);
        let ads: Vec<&Advertisement> = issued_ads
            .iter()
            .chain(pending_ads)
            .map(|(_, a)| a)
            .collect();
        let mut preds: Vec<Predicate> = if roll < 55 && !ads.is_empty() {
            let adv = ads.choose(rng).unwrap();
            let k = rng.random_range(1..=adv.predicates().len());
            let mut picked: Vec<Predicate> = adv
                .predicates()
                .choose_multiple(rng, k)
                .map(|p| self.narrow(rng, p))
                .collect();
            if picked.len() < 4 && rng.random_bool(0.25) {
                picked.push(self.predicate(rng));
            }
            picked
        } else if roll < 80 && !issued_subs.is_empty() {
            // Variants of earlier subscriptions give covering something to find.
            let base = issued_subs.choose(rng).unwrap();
            let mut ps: Vec<Predicate> = base.predicates().to_vec();
            if rng.random_bool(0.5) {
                ps = ps.iter().map(|p| self.widen(rng, kb, p)).collect();
                if ps.len() > 1 && rng.random_bool(0.5) {
                    ps.remove(rng.random_range(0..ps.len()));
                }
            } else {
                ps = ps.iter().map(|p| self.narrow(rng, p)).collect();
                if ps.len() < 4 && rng.random_bool(0.4) {
                    ps.push(self.predicate(rng));
                }
            }
            ps
        } else {
            (0..rng.random_range(1..=3))
                .map(|_| self.predicate(rng))
                .collect()
        };
        preds.truncate(4);
        Subscription::new("", preds).unwrap()
    }

    /// An event the advertisement determines under `mode`.
    fn event(
        &self,
        rng: &mut ChaCha8Rng,
        adv: &Advertisement,
        mode: RoutingMode,
        kb: &KnowledgeBase,
    ) -> Event {
        for _ in 0..20 {
            let mut pairs: Vec<Pair> = Vec::new();
            let k = rng.random_range(1..=adv.predicates().len());
            let chosen: Vec<&Predicate> = adv.predicates().choose_multiple(rng, k).collect();
            for p in chosen {
                let pair = match mode {
                    RoutingMode::Semantic => {
                        let narrowed = self.narrow(rng, p);
                        self.satisfying_pair(rng, &narrowed)
                    }
                    RoutingMode::Syntactic => self.satisfying_pair(rng, p),
                };
                if pairs.iter().all(|q| q.attribute != pair.attribute) {
                    pairs.push(pair);
                }
            }
            let event = Event::new(pairs).expect("distinct attributes");
            if determines(mode, adv, &event, kb) {
                return event;
            }
        }
        // Literal fallback: holds in both modes.
        let p = adv.predicates().choose(rng).unwrap();
        let value = match (&p.value, p.op) {
            (v, RelOp::Eq) => v.clone(),
            _ => self.satisfying_pair(rng, p).value,
        };
        Event::new(vec![Pair::new(p.attribute.clone(), value)]).unwrap()
    }

    fn satisfying_pair(&self, rng: &mut ChaCha8Rng, p: &Predicate) -> Pair {
        let value = match (&p.value, p.op) {
            (Value::Int(c), op) => Value::Int(match op {
                RelOp::Eq => *c,
                RelOp::Ne => c + 1 + rng.random_range(0..3),
                RelOp::Lt => c - 1 - rng.random_range(0..3),
                RelOp::Le => c - rng.random_range(0..3),
                RelOp::Gt => c + 1 + rng.random_range(0..3),
                RelOp::Ge => c + rng.random_range(0..3),
            }),
            (Value::Str(v), RelOp::Ne) => {
                let mut other = self.value(rng);
                if other == *v {
                    other = format!("{v}-x");
                }
                Value::Str(other)
            }
            (v, _) => v.clone(),
        };
        Pair::new(p.attribute.clone(), value)
    }
}

fn pred(attr: String, op: RelOp, value: Value) -> Predicate {
    Predicate::new(
        AttributeName::new(attr).expect("generated names are valid"),
        op,
        value,
    )
    .expect("generated predicates are valid")
}
