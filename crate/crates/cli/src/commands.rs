use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use log::info;

use bridgerank_core::ids::{GroupId, ItemId, PersonId};
use bridgerank_core::io;
use bridgerank_core::metrics::{
    balance_fraction, bridging_delta, ei_index, inputs_digest, modularity,
    random_walk_controversy, RelationMetricReport, RwcOptions,
};
use bridgerank_core::ranking::{rank_from_votes, ValueModel};
use bridgerank_core::relation::{
    aggregate, cluster_people, pca_project, vote_similarity_graph, ClusterOptions, Clustering,
    GraphModel,
};
use bridgerank_core::signals::{
    compute_signal_vectors, credibility_scores, fit_matrix_factorization, MfHyperParams,
};
use bridgerank_core::sim::{run_with, SimConfig};
use bridgerank_core::vote::VoteMatrix;
use bridgerank_core::Backend;

use crate::manifest::ManifestBuilder;

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))
}

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<String> {
    let mut json = serde_json::to_string_pretty(value)?;
    json.push('\n');
    Ok(json)
}

fn load_clustering(path: &Path) -> Result<Clustering> {
    let bytes = std::fs::read(path)
        .with_context(|| format!("reading clustering {}", path.display()))?;
    let clustering: Clustering = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing clustering {}", path.display()))?;
    clustering.validate()?;
    Ok(clustering)
}

/// Clustering person set and vote-matrix person set must coincide.
fn check_population(matrix: &VoteMatrix, clustering: &Clustering) -> Result<()> {
    for person in matrix.people() {
        if !clustering.labels.contains_key(person) {
            bail!(bridgerank_core::Error::UnlabeledPerson {
                person: person.clone()
            });
        }
    }
    for person in clustering.labels.keys() {
        if !matrix.contains_person(person) {
            bail!("clustering references unknown person {person}");
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// cluster
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct ClusterArgs {
    /// Vote CSV (person_id,item_id,vote).
    #[arg(long)]
    votes: PathBuf,
    /// Projection dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    k_min: usize,
    #[arg(long, default_value_t = 5)]
    k_max: usize,
    #[arg(long, default_value_t = 10)]
    restarts: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn cluster(args: ClusterArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new("cluster");
    manifest.seed(args.seed).input(&args.votes)?;

    let matrix = io::read_votes_csv(&args.votes)?;
    let space = pca_project(&matrix, args.dim)?;
    if space.degenerate {
        info!("vote matrix has zero variance; projection is degenerate");
    }
    let clustering = cluster_people(
        &space,
        &ClusterOptions {
            k_min: args.k_min,
            k_max: args.k_max,
            restarts: args.restarts,
            seed: args.seed,
            ..Default::default()
        },
    )?;

    let mut projection = String::from("person_id,x,y,group\n");
    for (person, position) in &space.person_positions {
        let x = position.first().copied().unwrap_or(0.0);
        let y = position.get(1).copied().unwrap_or(0.0);
        let group = clustering.labels[person];
        let _ = writeln!(projection, "{person},{x},{y},{group}");
    }

    write_output(&args.out, "clustering.json", &to_pretty_json(&clustering)?)?;
    write_output(&args.out, "projection.csv", &projection)?;
    manifest.output("clustering.json").output("projection.csv");
    manifest.write(&args.out)?;

    println!(
        "clustered {} people into k={} groups (silhouette {:.4}{})",
        matrix.n_people(),
        clustering.k,
        clustering.silhouette,
        if clustering.degenerate {
            ", degenerate"
        } else {
            ""
        }
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct ScoreArgs {
    #[arg(long)]
    votes: PathBuf,
    #[arg(long)]
    clustering: PathBuf,
    /// Optional file of extra item ids to register (one per line), for
    /// items that exist in the catalogue but have no votes yet.
    #[arg(long)]
    items: Option<PathBuf>,
    /// Optional authorship CSV (item_id,person_id); enables credibility
    /// scores.
    #[arg(long)]
    authors: Option<PathBuf>,
    /// Damping for credibility power iteration.
    #[arg(long, default_value_t = 0.85)]
    alpha: f64,
    /// Optional matrix-factorization hyperparameter JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Also write signals.json when set to json.
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn score(args: ScoreArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new("score");
    manifest.seed(args.seed).input(&args.votes)?;
    manifest.input(&args.clustering)?;

    let mut matrix = io::read_votes_csv(&args.votes)?;
    if let Some(items_path) = &args.items {
        manifest.input(items_path)?;
        let listing = std::fs::read_to_string(items_path)
            .with_context(|| format!("reading {}", items_path.display()))?;
        for line in listing.lines() {
            let id = line.trim();
            if !id.is_empty() {
                matrix.register_item(ItemId::new(id));
            }
        }
    }
    let clustering = load_clustering(&args.clustering)?;
    check_population(&matrix, &clustering)?;

    let mut hypers = match &args.config {
        Some(path) => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?;
            manifest.config_bytes(&bytes);
            serde_json::from_slice::<MfHyperParams>(&bytes)
                .with_context(|| format!("parsing {}", path.display()))?
        }
        None => MfHyperParams::default(),
    };
    hypers.seed = args.seed;

    let agg = aggregate(&matrix, &clustering)?;
    let mf = fit_matrix_factorization(&matrix, &hypers)?;
    if !mf.converged {
        info!("matrix factorization flagged non-convergence; consider more epochs");
    }
    let signals = compute_signal_vectors(&matrix, &clustering, &agg, &mf)?;

    write_output(&args.out, "signals.csv", &io::write_signals_csv(&signals))?;
    manifest.output("signals.csv");
    if args.format == "json" {
        write_output(&args.out, "signals.json", &to_pretty_json(&signals)?)?;
        manifest.output("signals.json");
    }

    if let Some(authors_path) = &args.authors {
        manifest.input(authors_path)?;
        let content = std::fs::read_to_string(authors_path)
            .with_context(|| format!("reading {}", authors_path.display()))?;
        let authors = io::parse_authors_csv(&content, authors_path)?;
        let credibility = credibility_scores(&matrix, &clustering, Some(&authors), args.alpha)?;
        write_output(
            &args.out,
            "credibility.json",
            &to_pretty_json(&credibility)?,
        )?;
        manifest.output("credibility.json");
    }
    manifest.write(&args.out)?;

    println!("scored {} items for {} people", matrix.n_items(), matrix.n_people());
    Ok(())
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct RankArgs {
    #[arg(long)]
    votes: PathBuf,
    #[arg(long)]
    clustering: PathBuf,
    /// Value model JSON: {"weights": {...}, "top_k": n}.
    #[arg(long)]
    value_model: PathBuf,
    #[arg(long)]
    viewer: String,
    /// Comma-separated candidate item ids; all items when omitted.
    #[arg(long, value_delimiter = ',')]
    candidates: Vec<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn rank(args: RankArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new("rank");
    manifest.seed(args.seed).input(&args.votes)?;
    manifest.input(&args.clustering)?;
    manifest.input(&args.value_model)?;

    let matrix = io::read_votes_csv(&args.votes)?;
    let clustering = load_clustering(&args.clustering)?;
    check_population(&matrix, &clustering)?;
    let value_model: ValueModel = {
        let bytes = std::fs::read(&args.value_model)
            .with_context(|| format!("reading {}", args.value_model.display()))?;
        let model: ValueModel = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing {}", args.value_model.display()))?;
        model.validate()?;
        model
    };

    let candidates: Vec<ItemId> = if args.candidates.is_empty() {
        matrix.items().cloned().collect()
    } else {
        args.candidates.iter().map(|c| ItemId::new(c.trim())).collect()
    };

    let hypers = MfHyperParams {
        seed: args.seed,
        ..Default::default()
    };
    let agg = aggregate(&matrix, &clustering)?;
    let mf = fit_matrix_factorization(&matrix, &hypers)?;
    let signals = compute_signal_vectors(&matrix, &clustering, &agg, &mf)?;

    let viewer = PersonId::new(args.viewer.as_str());
    let feed = rank_from_votes(&viewer, &candidates, &matrix, &clustering, &signals, &value_model)?;

    write_output(&args.out, "feed.json", &to_pretty_json(&feed)?)?;
    manifest.output("feed.json");
    manifest.write(&args.out)?;

    println!("feed for {viewer} (value model {}):", &feed.value_model_digest[..12]);
    println!("{:<5} {:<24} {:>10}  components", "slot", "item", "score");
    for allocation in &feed.allocations {
        let components: Vec<String> = allocation
            .properties
            .scores
            .iter()
            .map(|(name, value)| format!("{name}={value:.4}"))
            .collect();
        println!(
            "{:<5} {:<24} {:>10.4}  {}",
            allocation.slot,
            allocation.object,
            allocation.score,
            components.join(" ")
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct MetricsArgs {
    /// Graph model JSON. Mutually exclusive with --votes.
    #[arg(long, conflicts_with = "votes")]
    graph: Option<PathBuf>,
    /// Vote CSV to build a similarity graph from.
    #[arg(long)]
    votes: Option<PathBuf>,
    /// Similarity threshold when building from votes.
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    #[arg(long)]
    clustering: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    walks: u64,
    #[arg(long, default_value_t = 10)]
    steps: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Timestamp recorded on the report.
    #[arg(long, default_value_t = 0)]
    tick: u64,
    /// Earlier report to compute bridging deltas against.
    #[arg(long)]
    baseline: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn metrics(args: MetricsArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let mut manifest = ManifestBuilder::new("metrics");
    manifest.seed(args.seed).input(&args.clustering)?;

    let graph: GraphModel = match (&args.graph, &args.votes) {
        (Some(path), None) => {
            manifest.input(path)?;
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let raw: GraphModel = serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing {}", path.display()))?;
            GraphModel::new(raw.nodes, raw.edges)?
        }
        (None, Some(path)) => {
            manifest.input(path)?;
            let matrix = io::read_votes_csv(path)?;
            vote_similarity_graph(&matrix, args.tau)?
        }
        _ => bail!("exactly one of --graph or --votes is required"),
    };
    let clustering = load_clustering(&args.clustering)?;
    let labels: BTreeMap<PersonId, GroupId> = clustering.labels.clone();
    for node in &graph.nodes {
        if !labels.contains_key(node) {
            bail!(bridgerank_core::Error::UnlabeledPerson {
                person: node.clone()
            });
        }
    }

    let mut values = BTreeMap::new();
    values.insert("modularity".to_owned(), modularity(&graph, &labels)?);
    values.insert("ei_index".to_owned(), ei_index(&graph, &labels)?);

    let mut groups: Vec<GroupId> = graph.nodes.iter().map(|n| labels[n]).collect();
    groups.sort();
    groups.dedup();
    if groups.len() == 2 {
        let estimate = random_walk_controversy(
            &graph,
            &labels,
            &RwcOptions {
                walks: args.walks,
                steps: args.steps,
                seed: args.seed,
                backend: Backend::default(),
            },
        )?;
        values.insert("rwc".to_owned(), estimate.value);
        values.insert("rwc_se".to_owned(), estimate.std_error);
    } else {
        // More than two groups: report pairwise RWC on induced subgraphs.
        for (i, &ga) in groups.iter().enumerate() {
            for &gb in groups.iter().skip(i + 1) {
                let members: Vec<PersonId> = graph
                    .nodes
                    .iter()
                    .filter(|n| labels[*n] == ga || labels[*n] == gb)
                    .cloned()
                    .collect();
                let keep: std::collections::BTreeSet<&PersonId> = members.iter().collect();
                let edges = graph
                    .edges
                    .iter()
                    .filter(|e| keep.contains(&e.a) && keep.contains(&e.b))
                    .cloned()
                    .collect();
                let subgraph = GraphModel::new(members, edges)?;
                let estimate = random_walk_controversy(
                    &subgraph,
                    &labels,
                    &RwcOptions {
                        walks: args.walks,
                        steps: args.steps,
                        seed: args.seed,
                        backend: Backend::default(),
                    },
                )?;
                values.insert(format!("rwc_g{ga}_g{gb}"), estimate.value);
            }
        }
    }

    if graph.edges.iter().all(|e| e.sign.is_some()) && !graph.edges.is_empty() {
        match balance_fraction(&graph) {
            Ok(balance) => {
                values.insert("balance".to_owned(), balance);
            }
            Err(bridgerank_core::Error::NoTriangles) => {
                info!("signed graph has no triangles; balance omitted");
            }
            Err(other) => return Err(other.into()),
        }
    }

    let report = RelationMetricReport::new(args.tick, values, inputs_digest(&graph, &labels))?;
    write_output(&args.out, "report.json", &to_pretty_json(&report)?)?;
    manifest.output("report.json");

    if let Some(baseline_path) = &args.baseline {
        manifest.input(baseline_path)?;
        let bytes = std::fs::read(baseline_path)
            .with_context(|| format!("reading {}", baseline_path.display()))?;
        let baseline: RelationMetricReport = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing {}", baseline_path.display()))?;
        let delta = bridging_delta(&baseline, &report)?;
        write_output(&args.out, "delta.json", &to_pretty_json(&delta)?)?;
        manifest.output("delta.json");
    }
    manifest.write(&args.out)?;

    println!("{:<16} {:>12}", "metric", "value");
    for (name, value) in &report.values {
        println!("{name:<16} {value:>12.6}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct SimulateArgs {
    /// Simulation config JSON (see docs/formats.md).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Fan out N runs with seeds seed..seed+N into seed_<s>/ subdirectories.
    #[arg(long)]
    seeds: Option<u64>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    ensure_out_dir(&args.out)?;
    let bytes = std::fs::read(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg: SimConfig = serde_json::from_slice(&bytes)
        .with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;

    match args.seeds {
        None => {
            let mut manifest = ManifestBuilder::new("simulate");
            manifest.seed(cfg.seed).input(&args.config)?;
            manifest.config_bytes(&bytes);
            run_simulation_into(&cfg, &args.out, &mut manifest)?;
            manifest.write(&args.out)?;
            Ok(())
        }
        Some(count) => {
            // Seed sweep: isolated output directory per run, fanned out on
            // threads; per-run manifests live in the subdirectories.
            let base = cfg.seed;
            let results: Vec<Result<()>> = std::thread::scope(|scope| {
                let handles: Vec<_> = (0..count)
                    .map(|offset| {
                        let mut run_cfg = cfg.clone();
                        run_cfg.seed = base + offset;
                        let dir = args.out.join(format!("seed_{}", run_cfg.seed));
                        let config_path = args.config.clone();
                        let config_bytes = bytes.clone();
                        scope.spawn(move || -> Result<()> {
                            ensure_out_dir(&dir)?;
                            let mut manifest = ManifestBuilder::new("simulate");
                            manifest.seed(run_cfg.seed).input(&config_path)?;
                            manifest.config_bytes(&config_bytes);
                            run_simulation_into(&run_cfg, &dir, &mut manifest)?;
                            manifest.write(&dir)?;
                            Ok(())
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("simulation thread panicked"))
                    .collect()
            });
            for result in results {
                result?;
            }
            println!("swept {count} seeds starting at {base} into {}", args.out.display());
            Ok(())
        }
    }
}

fn run_simulation_into(cfg: &SimConfig, dir: &Path, manifest: &mut ManifestBuilder) -> Result<()> {
    let result = run_with(cfg, Backend::default())?;

    let mut metrics_csv = String::from("tick,metric,value\n");
    for report in &result.reports {
        for (name, value) in &report.values {
            let _ = writeln!(metrics_csv, "{},{name},{value}", report.timestamp);
        }
    }
    let mut affect_csv = String::from("tick,mean_affect_out\n");
    for (tick, mean) in &result.affect {
        let _ = writeln!(affect_csv, "{tick},{mean}");
    }
    let mut feeds_jsonl = String::new();
    for feed in &result.feeds {
        feeds_jsonl.push_str(&serde_json::to_string(feed)?);
        feeds_jsonl.push('\n');
    }

    write_output(dir, "metrics.csv", &metrics_csv)?;
    write_output(dir, "affect.csv", &affect_csv)?;
    write_output(dir, "feeds.jsonl", &feeds_jsonl)?;
    write_output(dir, "world_final.json", &to_pretty_json(&result.world)?)?;
    write_output(dir, "deltas.json", &to_pretty_json(&result.delta)?)?;
    manifest
        .output("metrics.csv")
        .output("affect.csv")
        .output("feeds.jsonl")
        .output("world_final.json")
        .output("deltas.json");

    println!(
        "simulated {} ticks for {} agents (seed {}) into {}",
        cfg.ticks,
        cfg.n_agents,
        cfg.seed,
        dir.display()
    );
    Ok(())
}
