use std::path::Path;

use semsub_core::routing::RoutingMode;
use semsub_core::sim::{
    generate_scenario, load_scenario, oracle_deliveries, run, simulate, GeneratorConfig,
    PublishCheck, RunOptions, Scenario, ScenarioDocument, ScenarioError, Verdict,
};

const GAP_KNOWLEDGE: &str = r#"{"hierarchy": [{"child": "book", "parent": "printed material"}]}"#;

fn gap_document(mode: &str) -> ScenarioDocument {
    let doc = format!(
        r#"{{
            "brokers": ["b1", "b2"],
            "edges": [["b1", "b2"]],
            "clients": [{{"id": "publisher", "broker": "b1"}}, {{"id": "subscriber", "broker": "b2"}}],
            "knowledge": {GAP_KNOWLEDGE},
            "mode": "{mode}",
            "script": [
                {{"action": "advertise", "client": "publisher", "payload": "(product = \"printed material\") AND (price >= 10)"}},
                {{"action": "subscribe", "client": "subscriber", "payload": "(product = \"book\") AND (price <= 20)"}},
                {{"action": "publish", "client": "publisher", "payload": "{{(product, \"book\"), (price, 15)}}"}}
            ]
        }}"#
    );
    serde_json::from_str(&doc).unwrap()
}

#[test]
fn gap_scenario_depends_on_mode() {
    // A book is not literally a printed-material event, so the strict loader
    // refuses the publish in syntactic mode.
    let strict = Scenario::from_document(gap_document("syntactic"), Path::new("."));
    assert!(matches!(
        strict,
        Err(ScenarioError::Undetermined { index: 2, .. })
    ));

    let lenient = Scenario::from_document_with(
        gap_document("syntactic"),
        Path::new("."),
        PublishCheck::Unchecked,
    );
    let syn = simulate(&lenient.unwrap(), RunOptions::default()).unwrap();
    assert!(syn.deliveries.is_empty());
    assert_eq!(
        syn.totals.subscribe, 1,
        "subscription stays at its home broker"
    );
    // The centralized matcher would have delivered it.
    assert!(matches!(syn.verdict, Some(Verdict::Fail { ref missing, .. }) if missing.len() == 1));

    let sem = Scenario::from_document(gap_document("semantic"), Path::new(".")).unwrap();
    let sem = simulate(&sem, RunOptions::default()).unwrap();
    assert_eq!(sem.deliveries.len(), 1);
    assert_eq!(sem.deliveries[0].client, "subscriber");
    assert_eq!(sem.verdict, Some(Verdict::Pass));
    let toward_publisher = sem
        .links
        .iter()
        .find(|l| l.from == "broker:b2" && l.to == "broker:b1")
        .unwrap();
    assert_eq!(toward_publisher.counts.subscribe, 1);
}

#[test]
fn oracle_syntactic_is_contained_in_semantic() {
    for seed in 0..10 {
        let mut cfg = GeneratorConfig::new(RoutingMode::Syntactic);
        cfg.max_events = 100;
        cfg.max_subscriptions = 40;
        let mut doc = generate_scenario(seed, cfg);
        let syn = Scenario::from_document(doc.clone(), Path::new(".")).unwrap();
        // A literal advertisement match is also a semantic one, so the same
        // script loads in semantic mode.
        doc.mode = RoutingMode::Semantic;
        let sem = Scenario::from_document(doc, Path::new(".")).unwrap();
        let a = oracle_deliveries(&syn).unwrap();
        let b = oracle_deliveries(&sem).unwrap();
        assert!(a.is_subset(&b), "seed {seed}");
    }
}

#[test]
fn identical_subscriptions_share_one_publish_per_link() {
    let doc = br#"{
        "brokers": ["b1", "b2"],
        "edges": [["b1", "b2"]],
        "clients": [{"id": "p", "broker": "b1"}, {"id": "x", "broker": "b2"}, {"id": "y", "broker": "b2"}],
        "mode": "syntactic",
        "script": [
            {"action": "advertise", "client": "p", "payload": "(a = 1)"},
            {"action": "subscribe", "client": "x", "payload": "(a = 1)"},
            {"action": "subscribe", "client": "y", "payload": "(a = 1)"},
            {"action": "publish", "client": "p", "payload": "{(a, 1)}"}
        ]
    }"#;
    let sc = load_scenario(doc, Path::new(".")).unwrap();
    let report = simulate(&sc, RunOptions::default()).unwrap();
    assert_eq!(report.deliveries.len(), 2);
    for l in &report.links {
        assert!(l.counts.publish <= 1, "{l:?}");
    }
    assert_eq!(
        report.suppressed, 1,
        "second subscription is covered by the first"
    );
}

#[test]
fn knowledge_path_resolves_against_scenario_dir() {
    let dir = std::env::temp_dir().join(format!("semsub-sim-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    std::fs::write(dir.join("kb.json"), GAP_KNOWLEDGE).unwrap();
    let doc = r#"{"brokers": ["b"], "knowledge": "kb.json", "mode": "semantic"}"#;
    let sc = load_scenario(doc.as_bytes(), &dir).unwrap();
    assert_eq!(sc.kb.parent("book"), Some("printed material"));
    let missing = load_scenario(doc.as_bytes(), Path::new("/nonexistent"));
    assert!(matches!(missing, Err(ScenarioError::Io { .. })));
    std::fs::remove_dir_all(dir).unwrap();
}

#[test]
fn random_scenarios_match_the_oracle() {
    for mode in [RoutingMode::Syntactic, RoutingMode::Semantic] {
        for seed in 0..12 {
            let mut cfg = GeneratorConfig::new(mode);
            cfg.max_events = 150;
            cfg.max_subscriptions = 60;
            let sc = Scenario::from_document(generate_scenario(seed, cfg), Path::new(".")).unwrap();
            let report = simulate(&sc, RunOptions::default()).unwrap();
            assert_eq!(report.verdict, Some(Verdict::Pass), "{mode} seed {seed}");
            assert_eq!(report.duplicate_notifications, 0);
        }
    }
}

#[test]
fn ablations_keep_deliveries() {
    for seed in 100..106 {
        let mut cfg = GeneratorConfig::new(RoutingMode::Semantic);
        cfg.max_events = 100;
        cfg.max_subscriptions = 60;
        let sc = Scenario::from_document(generate_scenario(seed, cfg), Path::new(".")).unwrap();
        let base = run(&sc, RunOptions::default()).unwrap();
        let no_cover = run(
            &sc,
            RunOptions {
                covering: false,
                gating: true,
            },
        )
        .unwrap();
        let no_gate = run(
            &sc,
            RunOptions {
                covering: true,
                gating: false,
            },
        )
        .unwrap();
        assert_eq!(base.deliveries, no_cover.deliveries);
        assert_eq!(base.deliveries, no_gate.deliveries);
        assert!(no_cover.totals.subscribe >= base.totals.subscribe);
        assert!(base.totals.publish <= no_gate.totals.publish);
    }
}

#[test]
fn runs_are_byte_identical() {
    let mut cfg = GeneratorConfig::new(RoutingMode::Semantic);
    cfg.max_brokers = 8;
    cfg.max_subscriptions = 50;
    cfg.max_events = 200;
    let doc = generate_scenario(42, cfg);
    let bytes = serde_json::to_vec(&doc).unwrap();
    let a = run(
        &load_scenario(&bytes, Path::new(".")).unwrap(),
        RunOptions::default(),
    )
    .unwrap();
    let b = run(
        &load_scenario(&bytes, Path::new(".")).unwrap(),
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.metrics_table(), b.metrics_table());
}
