use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use semsub_core::knowledge::{load_knowledge, KnowledgeBase};
use semsub_core::model::{parse_advertisement, parse_event, parse_subscription, Subscription};
use semsub_core::routing::RoutingMode;
use semsub_core::semantic::{self, Provenance};
use semsub_core::sim::{self, GeneratorConfig, RunOptions, Scenario, Verdict};
use semsub_core::syntactic;

/// Semantic content-based publish/subscribe toolkit.
///
/// Exit status: 0 true / PASS, 1 false, 2 usage or input error,
/// 3 FAIL, 4 MAPPING_GAP.
#[derive(Parser)]
#[command(name = "semsub", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Does the event match the subscription?
    Match {
        event: String,
        subscription: String,
        #[command(flatten)]
        opts: RelationOpts,
    },
    /// Does the first subscription cover the second?
    Covers {
        s1: String,
        s2: String,
        #[command(flatten)]
        opts: RelationOpts,
    },
    /// Does the advertisement intersect the subscription?
    Intersects {
        advertisement: String,
        subscription: String,
        #[command(flatten)]
        opts: RelationOpts,
    },
    /// Run a scenario through the broker overlay.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct RelationOpts {
    /// Knowledge base JSON; required in semantic mode.
    #[arg(long, value_name = "PATH")]
    knowledge: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Syntactic)]
    mode: Mode,
    /// Print normalized forms, added pairs and per-predicate witnesses.
    #[arg(long)]
    explain: bool,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(required_unless_present = "random", conflicts_with = "random")]
    scenario: Option<PathBuf>,
    /// Write the JSON report here.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
    /// Compare against the centralized oracle; exit 3 on FAIL, 4 on MAPPING_GAP.
    #[arg(long)]
    verify: bool,
    /// Generate a mapping-free scenario instead of reading one.
    #[arg(long)]
    random: bool,
    #[arg(long, default_value_t = 0, requires = "random")]
    seed: u64,
    /// Routing mode of the generated scenario.
    #[arg(long, value_enum, default_value_t = Mode::Semantic, requires = "random")]
    mode: Mode,
    /// Save the generated scenario for replay.
    #[arg(long, value_name = "PATH", requires = "random")]
    dump_scenario: Option<PathBuf>,
    /// Disable covering-based subscription suppression.
    #[arg(long)]
    no_covering: bool,
    /// Disable advertisement gating of subscriptions.
    #[arg(long)]
    no_gating: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Syntactic,
    Semantic,
}

impl From<Mode> for RoutingMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Syntactic => RoutingMode::Syntactic,
            Mode::Semantic => RoutingMode::Semantic,
        }
    }
}

/// An error that ends the command with exit status 2.
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Match {
            event,
            subscription,
            opts,
        } => cmd_match(&event, &subscription, &opts),
        Command::Covers { s1, s2, opts } => cmd_covers(&s1, &s2, &opts),
        Command::Intersects {
            advertisement,
            subscription,
            opts,
        } => cmd_intersects(&advertisement, &subscription, &opts),
        Command::Simulate(args) => cmd_simulate(&args),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Failure(msg)) => {
            eprintln!("semsub: {msg}");
            ExitCode::from(2)
        }
    }
}

fn knowledge(opts: &RelationOpts) -> Result<KnowledgeBase, Failure> {
    match (&opts.knowledge, opts.mode) {
        (Some(path), _) => {
            let bytes = fs::read(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            Ok(load_knowledge(&bytes).map_err(|e| Failure(format!("{}: {e}", path.display())))?)
        }
        (None, Mode::Semantic) => Err(Failure("semantic mode needs --knowledge".into())),
        (None, Mode::Syntactic) => Ok(KnowledgeBase::empty()),
    }
}

fn verdict(holds: bool, yes: &str, no: &str) -> u8 {
    println!("{}", if holds { yes } else { no });
    if holds {
        0
    } else {
        1
    }
}

fn cmd_match(event: &str, sub: &str, opts: &RelationOpts) -> Result<u8, Failure> {
    let kb = knowledge(opts)?;
    let event = parse_event(event)?;
    let sub = parse_subscription(sub)?;
    let holds = match opts.mode {
        Mode::Syntactic => {
            if opts.explain {
                println!("event: {event}");
                println!("subscription: {sub}");
                println!("added: none");
                explain_witnesses(&sub, |p| {
                    event
                        .pairs()
                        .iter()
                        .find(|pair| p.matches(pair))
                        .map(|x| x.to_string())
                });
            }
            syntactic::match_event(&event, &sub)
        }
        Mode::Semantic => {
            let normalized = semantic::normalize_event(&event, &kb);
            let nsub = semantic::normalize_subscription(&sub, &kb);
            let augmented = semantic::augment(&normalized, &kb)?;
            if opts.explain {
                println!("event: {normalized}");
                println!("subscription: {nsub}");
                if augmented.added().is_empty() {
                    println!("added: none");
                } else {
                    println!("added:");
                    for a in augmented.added() {
                        match &a.provenance {
                            Provenance::Hierarchy => println!("  {} hierarchy", a.pair),
                            Provenance::Mapping(f) => println!("  {} mapping {f}", a.pair),
                        }
                    }
                }
                explain_witnesses(&nsub, |p| augmented.witness(p).map(|x| x.to_string()));
            }
            augmented.matches(&nsub)
        }
    };
    Ok(verdict(holds, "match", "no-match"))
}

fn explain_witnesses(
    sub: &Subscription,
    witness: impl Fn(&semsub_core::model::Predicate) -> Option<String>,
) {
    println!("witnesses:");
    for p in sub.predicates() {
        println!("  {p} <- {}", witness(p).unwrap_or_else(|| "none".into()));
    }
}

fn cmd_covers(s1: &str, s2: &str, opts: &RelationOpts) -> Result<u8, Failure> {
    let kb = knowledge(opts)?;
    let s1 = parse_subscription(s1)?;
    let s2 = parse_subscription(s2)?;
    let holds = match opts.mode {
        Mode::Syntactic => syntactic::covers(&s1, &s2),
        Mode::Semantic => {
            if opts.explain {
                println!("s1: {}", semantic::normalize_subscription(&s1, &kb));
                println!("s2: {}", semantic::normalize_subscription(&s2, &kb));
            }
            semantic::sem_covers(&s1, &s2, &kb)
        }
    };
    Ok(verdict(holds, "covers", "not-covers"))
}

fn cmd_intersects(adv: &str, sub: &str, opts: &RelationOpts) -> Result<u8, Failure> {
    let kb = knowledge(opts)?;
    let adv = parse_advertisement(adv)?;
    let sub = parse_subscription(sub)?;
    let holds = match opts.mode {
        Mode::Syntactic => syntactic::intersects(&adv, &sub),
        Mode::Semantic => {
            if opts.explain {
                println!(
                    "advertisement: {}",
                    semantic::normalize_advertisement(&adv, &kb)
                );
                println!(
                    "subscription: {}",
                    semantic::normalize_subscription(&sub, &kb)
                );
            }
            semantic::sem_intersects(&adv, &sub, &kb)
        }
    };
    Ok(verdict(holds, "intersects", "not-intersects"))
}

fn cmd_simulate(args: &SimulateArgs) -> Result<u8, Failure> {
    let scenario = match &args.scenario {
        Some(path) => sim::load_scenario_file(path)?,
        None => {
            let doc = sim::generate_scenario(args.seed, GeneratorConfig::new(args.mode.into()));
            if let Some(path) = &args.dump_scenario {
                write(path, &serde_json::to_string_pretty(&doc)?)?;
            }
            Scenario::from_document(doc, Path::new("."))?
        }
    };
    let options = RunOptions {
        covering: !args.no_covering,
        gating: !args.no_gating,
    };
    let report = if args.verify {
        sim::simulate(&scenario, options)?
    } else {
        sim::run(&scenario, options)?
    };
    if let Some(path) = &args.report {
        write(path, &report.to_json())?;
    }
    print!("{}", report.metrics_table());
    Ok(match &report.verdict {
        None => 0,
        Some(v) => {
            println!("{}", v.token());
            match v {
                Verdict::Pass => 0,
                Verdict::Fail { .. } => 3,
                Verdict::MappingGap { .. } => 4,
            }
        }
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure(format!("{}: {e}", path.display())))
}
