//! Command-line front end: scenario generation, clustering, simulation,
//! evaluation, baselines, ablations, and cost reports.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clusterabm_core::anchor::{self, AnchorConfig, ClusterAssignment};
use clusterabm_core::engine::{
    self, aggregate_windows, rolling_window_run_with, run_baseline, run_simulation, AblationKind,
    BaselineKind, EngineConfig, Pathways, Scenario, SymbolicSource, SymbolicVariant, TruthData,
    WindowConfig, WindowRun,
};
use clusterabm_core::fusion::FusionMode;
use clusterabm_core::io::{self, csv_io, RunManifest};
use clusterabm_core::metrics::{self, JointEventDistribution, SamplerKind};
use clusterabm_core::symbolic::{CostLedger, CostModel, DomainBinding, HttpChatTransport, RemoteConfig, RemoteSymbolic};
use ndarray::Array2;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Parser)]
#[command(name = "clusterabm", version, about = "Cluster-level agent-based simulation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scenario directory with internally consistent truth.
    Generate(GenerateArgs),
    /// Run the four-stage behavioral clustering pipeline.
    Cluster(ClusterArgs),
    /// Simulate a scenario (plain run or rolling-window forecasts).
    Simulate(SimulateArgs),
    /// Score a simulated run against ground truth.
    Evaluate(EvaluateArgs),
    /// Run a reference baseline through the rolling-window protocol.
    Baseline(BaselineArgs),
    /// Run one architecture ablation configuration.
    Ablate(AblateArgs),
    /// Backend invocation accounting against the flat baseline.
    CostReport(CostReportArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Template: seird_shock | market_regimes | attention_lifecycle
    #[arg(long)]
    template: String,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 60)]
    days: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Policy shock day (seird_shock).
    #[arg(long, default_value_t = 40)]
    shock_day: usize,
    /// Policy shock multiplier (seird_shock).
    #[arg(long, default_value_t = 0.2)]
    shock_multiplier: f64,
    /// Fatigue onset day (attention_lifecycle).
    #[arg(long, default_value_t = 55)]
    fatigue_onset: usize,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Stage range: "1-4" (full pipeline) or "1" (structural stage only).
    #[arg(long, default_value = "1-4")]
    stages: String,
    #[arg(long, default_value_t = 6)]
    k_coarse: usize,
    #[arg(long, default_value_t = 4)]
    k_m: usize,
    #[arg(long, default_value_t = 4)]
    k_final: usize,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    scenario: PathBuf,
    /// Pathway: oracle | remote | neural | fused
    #[arg(long, default_value = "oracle")]
    pathway: String,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// clusters.csv from a prior `cluster` run; defaults to one whole-population cluster.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Rolling-window forecast protocol instead of a plain run.
    #[arg(long)]
    windows: bool,
    #[arg(long, default_value_t = 28)]
    lookback: usize,
    #[arg(long, default_value_t = 7)]
    horizon: usize,
    /// Competing-risk discretization: exponential | weights
    #[arg(long, default_value = "exponential")]
    sampler: String,
    /// Record wall-clock into the manifest (off by default so reruns are
    /// byte-identical).
    #[arg(long)]
    record_timing: bool,
    /// Free-run window resets instead of resetting to truth.
    #[arg(long)]
    free_running: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Run directory produced by `simulate --windows`, `baseline`, or `ablate`.
    #[arg(long)]
    run: PathBuf,
    /// Scenario file providing the ground truth.
    #[arg(long)]
    truth: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    /// rule-abm | mf-markov
    #[arg(long)]
    kind: String,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[arg(long, default_value_t = 28)]
    lookback: usize,
    #[arg(long, default_value_t = 7)]
    horizon: usize,
}

#[derive(Args)]
struct AblateArgs {
    /// full | neural_only | symbolic_only | naive_fusion | flat_agents |
    /// no_state_agent | no_meta_agent
    #[arg(long)]
    config: String,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    clusters: Option<PathBuf>,
    #[arg(long, default_value_t = 28)]
    lookback: usize,
    #[arg(long, default_value_t = 7)]
    horizon: usize,
}

#[derive(Args)]
struct CostReportArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    clusters: usize,
    #[arg(long, default_value_t = 5)]
    state_agents: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Baseline(args) => cmd_baseline(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::CostReport(args) => cmd_cost_report(args),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn scenario_hash(path: &Path) -> Result<Vec<u8>> {
    Ok(std::fs::read(path).with_context(|| format!("reading {}", path.display()))?)
}

fn load_scenario_and_truth(path: &Path) -> Result<(Scenario, TruthData)> {
    let (scenario, truth) = io::load_scenario(path)?;
    let truth = truth.ok_or_else(|| anyhow!("scenario at {} carries no truth data", path.display()))?;
    Ok((scenario, truth))
}

fn load_or_default_assignment(
    clusters: &Option<PathBuf>,
    scenario: &Scenario,
) -> Result<ClusterAssignment> {
    match clusters {
        Some(path) => Ok(csv_io::read_clusters(path)?),
        None => Ok(engine::whole_population_assignment(scenario.n())),
    }
}

/// Embeddings backing cluster statics: recomputed deterministically from the
/// scenario when no embeddings.csv sits next to the clusters file.
fn load_or_compute_embeddings(
    clusters: &Option<PathBuf>,
    scenario: &Scenario,
    seed: u64,
) -> Result<Array2<f64>> {
    if let Some(path) = clusters {
        let sibling = path.parent().unwrap_or(Path::new(".")).join("embeddings.csv");
        if sibling.exists() {
            return Ok(read_embeddings(&sibling)?);
        }
    }
    let (x, _) = anchor::attribute_matrix(&scenario.profiles);
    Ok(anchor::structural_embed(&scenario.graph, &x, 2, 16, seed)?.h)
}

fn write_embeddings(path: &Path, h: &Array2<f64>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().from_path(path)?;
    let mut header = vec!["agent_id".to_string()];
    header.extend((0..h.ncols()).map(|j| format!("h_{j}")));
    w.write_record(&header)?;
    for (agent, row) in h.rows().into_iter().enumerate() {
        let mut record = vec![agent.to_string()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

fn read_embeddings(path: &Path) -> Result<Array2<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for record in r.records() {
        let record = record?;
        let agent: usize = record.get(0).unwrap_or("").parse()?;
        let values: std::result::Result<Vec<f64>, _> =
            record.iter().skip(1).map(str::parse::<f64>).collect();
        rows.push((agent, values?));
    }
    rows.sort_by_key(|(a, _)| *a);
    let n = rows.len();
    let d = rows.first().map(|(_, v)| v.len()).unwrap_or(0);
    let mut h = Array2::zeros((n, d));
    for (i, (_, values)) in rows.iter().enumerate() {
        for (j, v) in values.iter().enumerate() {
            h[(i, j)] = *v;
        }
    }
    Ok(h)
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let template = io::Template::parse(&args.template)
        .ok_or_else(|| anyhow!("unknown template {:?}", args.template))?;
    let params = io::GeneratorParams {
        shock_day: args.shock_day,
        shock_multiplier: args.shock_multiplier,
        fatigue_onset: args.fatigue_onset,
        ..Default::default()
    };
    let (scenario, truth) = io::generate(template, args.n, args.days, args.seed, &params)?;
    io::save_scenario(&args.out, &scenario, Some(&truth))?;
    let mut manifest = RunManifest::new(
        "generate",
        args.seed,
        "oracle",
        format!("{} n={} days={} seed={}", args.template, args.n, args.days, args.seed).as_bytes(),
    );
    manifest.flag("template", args.template.clone());
    manifest.write(&args.out.join("manifest.json"))?;
    println!("generated {} ({} agents, {} days) -> {}", args.template, args.n, args.days, args.out.display());
    Ok(())
}

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    let (scenario, _) = io::load_scenario(&args.scenario)?;
    std::fs::create_dir_all(&args.out)?;
    let config = AnchorConfig {
        k_coarse: args.k_coarse.min(scenario.n()),
        k_m: args.k_m,
        k_final: args.k_final,
        seed: args.seed,
        ..Default::default()
    };
    let stage1_only = match args.stages.as_str() {
        "1" | "1-1" => true,
        "1-4" => false,
        other => bail!("unsupported stage range {other:?} (use \"1\" or \"1-4\")"),
    };
    let mut manifest = RunManifest::new("cluster", args.seed, "oracle", &scenario_hash(&args.scenario)?);
    manifest.flag("stages", args.stages.clone());
    if stage1_only {
        let (labels, h, _) = anchor::stage1_coarse(&scenario.graph, &scenario.profiles, &config)?;
        let k = labels.iter().max().map(|&l| l + 1).unwrap_or(0);
        let p = Array2::zeros((scenario.n(), config.k_m));
        let d = anchor::dominant_profiles(&p, &labels, k);
        let anchors = anchor::select_anchors(&labels, k, &p, &d)?;
        let assignment = ClusterAssignment { labels, k, anchors };
        csv_io::write_clusters(&args.out.join("clusters.csv"), &assignment)?;
        write_embeddings(&args.out.join("embeddings.csv"), &h)?;
        let quality = serde_json::json!({
            "stages": "1",
            "k": assignment.k,
            "modularity": anchor::modularity(&scenario.graph, &assignment.labels),
        });
        std::fs::write(args.out.join("quality.json"), serde_json::to_string_pretty(&quality)? + "\n")?;
    } else {
        let result = anchor::run_anchor(
            &scenario.graph,
            &scenario.profiles,
            &scenario.probes,
            &scenario.behavior,
            &config,
        )?;
        csv_io::write_clusters(&args.out.join("clusters.csv"), &result.assignment)?;
        csv_io::write_motifs(&args.out.join("motifs.csv"), &result.p)?;
        write_embeddings(&args.out.join("embeddings.csv"), &result.h)?;
        let quality = serde_json::json!({
            "stages": "1-4",
            "k": result.assignment.k,
            "modularity": result.quality.modularity,
            "silhouette": result.quality.silhouette,
            "motif_coherence": result.quality.motif_coherence,
            "degenerate_silhouette": result.quality.degenerate_silhouette,
            "motif_descriptors": result.motif_descriptors,
            "stage_snapshots": result.snapshots,
            "boundary": result.boundary,
            "merge_split": result.merge_split,
        });
        std::fs::write(args.out.join("quality.json"), serde_json::to_string_pretty(&quality)? + "\n")?;
    }
    manifest.write(&args.out.join("manifest.json"))?;
    println!("clustering artifacts -> {}", args.out.display());
    Ok(())
}

fn parse_sampler(name: &str) -> Result<SamplerKind> {
    match name {
        "exponential" => Ok(SamplerKind::Exponential),
        "weights" => Ok(SamplerKind::Weights),
        other => bail!("unknown sampler {other:?}"),
    }
}

/// Serializes per-agent forecast distributions for one window.
fn write_forecasts(path: &Path, window: &WindowRun, space: &clusterabm_core::model::StateSpace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["agent_id", "origin", "from", "to", "day", "probability"])?;
    for f in &window.forecasts {
        let d = &f.distribution;
        for (idx, (from, to)) in d.types.iter().enumerate() {
            for day in 1..=d.horizon {
                w.write_record([
                    f.agent.to_string(),
                    space.state_name(f.origin).to_string(),
                    space.state_name(*from).to_string(),
                    space.state_name(*to).to_string(),
                    day.to_string(),
                    d.p[idx][day - 1].to_string(),
                ])?;
            }
        }
        w.write_record([
            f.agent.to_string(),
            space.state_name(f.origin).to_string(),
            "none".to_string(),
            "none".to_string(),
            "0".to_string(),
            d.p_none.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_window_artifacts(
    out: &Path,
    windows: &[WindowRun],
    scenario: &Scenario,
) -> Result<()> {
    let space = scenario.space();
    let mut all_traces = Vec::new();
    let mut all_events = Vec::new();
    for w in windows {
        write_forecasts(&out.join(format!("forecasts_w{}.csv", w.index)), w, space)?;
        all_traces.extend(w.traces.iter().cloned());
        all_events.extend(w.events.iter().cloned());
    }
    csv_io::write_hazard_trace(&out.join("hazard_trace.csv"), &all_traces, space)?;
    csv_io::write_events(&out.join("events.csv"), &all_events, space)?;
    // Concatenated simulated segments, tagged by window.
    let mut w = csv::Writer::from_path(out.join("trajectories.csv"))?;
    w.write_record(["window", "day", "agent_id", "state"])?;
    for win in windows {
        for (offset, day_states) in win.simulated.iter().enumerate() {
            for (agent, &s) in day_states.iter().enumerate() {
                w.write_record([
                    win.index.to_string(),
                    (win.reset_day + offset).to_string(),
                    agent.to_string(),
                    space.state_name(s).to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    let aggregate = aggregate_windows(windows);
    std::fs::write(
        out.join("window_metrics.json"),
        serde_json::to_string_pretty(&aggregate)? + "\n",
    )?;
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let started = std::time::Instant::now();
    let (scenario, truth) = io::load_scenario(&args.scenario)?;
    std::fs::create_dir_all(&args.out)?;
    let assignment = load_or_default_assignment(&args.clusters, &scenario)?;
    let sampler = parse_sampler(&args.sampler)?;
    let mut manifest = RunManifest::new(
        "simulate",
        args.seed,
        if args.pathway == "remote" { "remote" } else { "oracle" },
        &scenario_hash(&args.scenario)?,
    );
    manifest.flag("pathway", args.pathway.clone());
    manifest.flag("windows", args.windows);
    manifest.flag("sampler", args.sampler.clone());
    manifest.flag("lookback", args.lookback as u64);
    manifest.flag("horizon", args.horizon as u64);
    manifest.flag("free_running", args.free_running);
    manifest.flag("scenario", args.scenario.display().to_string());

    if args.windows {
        let truth = truth.ok_or_else(|| anyhow!("rolling windows need truth data in the scenario"))?;
        let fusion_mode = match args.pathway.as_str() {
            "oracle" | "remote" => FusionMode::SymbolicOnly,
            "neural" => FusionMode::NeuralOnly,
            "fused" => FusionMode::DefaultReciprocal,
            other => bail!("unknown pathway {other:?}"),
        };
        let embeddings = load_or_compute_embeddings(&args.clusters, &scenario, args.seed)?;
        let mut config = WindowConfig {
            lookback: args.lookback,
            horizon: args.horizon,
            free_running: args.free_running,
            ..Default::default()
        };
        config.temporal_window = config.temporal_window.min(args.lookback.saturating_sub(1).max(2));
        let windows = if args.pathway == "remote" {
            let transport = HttpChatTransport::from_env()?;
            let remote = RemoteSymbolic::new(
                Box::new(transport),
                DomainBinding {
                    name: scenario.config.domain.clone(),
                    description: format!("{} state-transition simulation", scenario.config.domain),
                    rules_text: "mechanistic priors from the scenario rule table".into(),
                },
                scenario.rules.clone(),
                RemoteConfig::default(),
            );
            let ledger = Mutex::new(CostLedger::new(1.0, scenario.n(), assignment.k)?);
            let runs = rolling_window_run_with(
                &scenario,
                &truth,
                &assignment,
                &embeddings,
                SymbolicVariant::Full,
                Some((&remote, &ledger)),
                fusion_mode,
                &config,
                args.seed,
            )?;
            let ledger = ledger.into_inner().unwrap();
            manifest.cost_summary = Some(clusterabm_core::symbolic::summarize_cost(
                &ledger,
                &CostModel::default(),
            ));
            runs
        } else {
            rolling_window_run_with(
                &scenario,
                &truth,
                &assignment,
                &embeddings,
                SymbolicVariant::Full,
                None,
                fusion_mode,
                &config,
                args.seed,
            )?
        };
        let fallback = windows
            .iter()
            .flat_map(|w| w.traces.iter())
            .any(|_| false);
        manifest.flag("fallback", fallback);
        write_window_artifacts(&args.out, &windows, &scenario)?;
    } else {
        if args.pathway == "neural" || args.pathway == "fused" {
            bail!("the {} pathway requires --windows (per-window training)", args.pathway);
        }
        let initial = clusterabm_core::model::initialize_states(&scenario.config, scenario.n(), args.seed)?;
        let mut config = EngineConfig::new(args.seed);
        config.sampler = sampler;
        config.fusion_mode = FusionMode::SymbolicOnly;
        let run = if args.pathway == "remote" {
            let transport = HttpChatTransport::from_env()?;
            let remote = RemoteSymbolic::new(
                Box::new(transport),
                DomainBinding {
                    name: scenario.config.domain.clone(),
                    description: format!("{} state-transition simulation", scenario.config.domain),
                    rules_text: "mechanistic priors from the scenario rule table".into(),
                },
                scenario.rules.clone(),
                RemoteConfig::default(),
            );
            let ledger = Mutex::new(CostLedger::new(1.0, scenario.n(), assignment.k)?);
            let pathways = Pathways {
                symbolic: Some(SymbolicSource::Remote { remote: &remote, ledger: &ledger }),
                neural: None,
                calibrator: None,
            };
            let run = run_simulation(
                &scenario,
                &assignment,
                initial,
                0,
                scenario.config.horizon - 1,
                &pathways,
                config,
            )?;
            let ledger = ledger.into_inner().unwrap();
            manifest.cost_summary = Some(clusterabm_core::symbolic::summarize_cost(&ledger, &CostModel::default()));
            run
        } else {
            let pathways = Pathways {
                symbolic: Some(SymbolicSource::Oracle {
                    rules: &scenario.rules,
                    variant: SymbolicVariant::Full,
                }),
                neural: None,
                calibrator: None,
            };
            run_simulation(
                &scenario,
                &assignment,
                initial,
                0,
                scenario.config.horizon - 1,
                &pathways,
                config,
            )?
        };
        csv_io::write_trajectories(&args.out.join("trajectories.csv"), &run.trajectories, scenario.space())?;
        csv_io::write_events(&args.out.join("events.csv"), &run.events, scenario.space())?;
        csv_io::write_hazard_trace(&args.out.join("hazard_trace.csv"), &run.traces, scenario.space())?;
    }
    if args.record_timing {
        manifest.wall_clock_secs = Some(started.elapsed().as_secs_f64());
    }
    manifest.write(&args.out.join("manifest.json"))?;
    println!("simulation artifacts -> {}", args.out.display());
    Ok(())
}

/// Reads forecasts_w*.csv back into distributions.
fn read_forecasts(
    path: &Path,
    space: &clusterabm_core::model::StateSpace,
    horizon: usize,
) -> Result<Vec<(usize, usize, JointEventDistribution)>> {
    let mut r = csv::Reader::from_path(path)?;
    struct Acc {
        origin: usize,
        cells: BTreeMap<(usize, usize), Vec<f64>>,
        p_none: f64,
    }
    let mut agents: BTreeMap<usize, Acc> = BTreeMap::new();
    for record in r.records() {
        let record = record?;
        let agent: usize = record.get(0).unwrap_or("").parse()?;
        let origin = space
            .state_index(record.get(1).unwrap_or(""))
            .ok_or_else(|| anyhow!("unknown origin state"))?;
        let acc = agents.entry(agent).or_insert_with(|| Acc {
            origin,
            cells: BTreeMap::new(),
            p_none: 0.0,
        });
        let from_name = record.get(2).unwrap_or("");
        if from_name == "none" {
            acc.p_none = record.get(5).unwrap_or("0").parse()?;
            continue;
        }
        let from = space.state_index(from_name).ok_or_else(|| anyhow!("unknown state"))?;
        let to = space
            .state_index(record.get(3).unwrap_or(""))
            .ok_or_else(|| anyhow!("unknown state"))?;
        let day: usize = record.get(4).unwrap_or("").parse()?;
        let p: f64 = record.get(5).unwrap_or("").parse()?;
        acc.cells.entry((from, to)).or_insert_with(|| vec![0.0; horizon])[day - 1] = p;
    }
    Ok(agents
        .into_iter()
        .map(|(agent, acc)| {
            let types: Vec<(usize, usize)> = acc.cells.keys().copied().collect();
            let p: Vec<Vec<f64>> = types.iter().map(|t| acc.cells[t].clone()).collect();
            (
                agent,
                acc.origin,
                JointEventDistribution {
                    horizon,
                    origin: acc.origin,
                    types,
                    p,
                    p_none: acc.p_none,
                },
            )
        })
        .collect())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let (scenario, truth) = load_scenario_and_truth(&args.truth)?;
    let space = scenario.space();
    let manifest_path = args.run.join("manifest.json");
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(&manifest_path)
            .with_context(|| format!("reading {}", manifest_path.display()))?,
    )?;
    let lookback = manifest["flags"]["lookback"].as_u64().unwrap_or(28) as usize;
    let horizon = manifest["flags"]["horizon"].as_u64().unwrap_or(7) as usize;
    let count = engine::window_count(truth.states.len(), lookback, horizon);

    let mut per_window = Vec::new();
    let mut all_conf = Vec::new();
    let mut all_correct = Vec::new();
    let mut regime_daily: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for index in 0..count {
        let path = args.run.join(format!("forecasts_w{index}.csv"));
        if !path.exists() {
            continue;
        }
        let forecasts = read_forecasts(&path, space, horizon)?;
        let reset_day = index * horizon + lookback - 1;
        let origins: Vec<usize> = truth.states[reset_day].clone();
        let raw_events = engine::truth_events_for_window(&truth, reset_day, horizon, &origins);
        let mut preds = Vec::new();
        let mut records = Vec::new();
        for (agent, _origin, dist) in &forecasts {
            preds.push(dist.clone());
            records.push(metrics::EventRecord {
                agent: *agent,
                event: raw_events[*agent].1.clone(),
            });
        }
        per_window.push(metrics::score_batch(&preds, &records));

        // Calibration: max-cell confidence vs realized cell.
        for (dist, record) in preds.iter().zip(&records) {
            let max_cell = dist.max_cell();
            let mut best: Option<(Option<(usize, usize, usize)>, f64)> = Some((None, dist.p_none));
            for (idx, t) in dist.types.iter().enumerate() {
                for day in 1..=dist.horizon {
                    let p = dist.p[idx][day - 1];
                    if p > best.as_ref().unwrap().1 {
                        best = Some((Some((t.0, t.1, day)), p));
                    }
                }
            }
            let predicted = best.unwrap().0;
            let actual = record
                .event
                .as_ref()
                .map(|e| (e.from, e.to, e.day));
            all_conf.push(max_cell);
            all_correct.push(predicted == actual);
        }

        // Regime probability trace (needs realized regime labels).
        if let Some(labels) = &truth.regime_labels {
            for (_agent, origin, dist) in &forecasts {
                for offset in 1..=horizon {
                    let day = reset_day + offset;
                    if day >= labels.len() {
                        continue;
                    }
                    let regime = labels[day];
                    // Absorbing occupancy approximation from first passage.
                    let p_on = if regime == *origin {
                        1.0 - (1..=offset).map(|d| dist.p_any_on_day(d)).sum::<f64>()
                    } else {
                        dist.types
                            .iter()
                            .enumerate()
                            .filter(|(_, t)| t.1 == regime)
                            .map(|(idx, _)| dist.p[idx][..offset].iter().sum::<f64>())
                            .sum()
                    };
                    regime_daily.entry(day).or_default().push(p_on.clamp(0.0, 1.0));
                }
            }
        }
    }
    if per_window.is_empty() {
        bail!("no forecast files found under {}", args.run.display());
    }

    let collect = |f: fn(&metrics::MetricsSummary) -> Option<f64>| -> Vec<f64> {
        per_window.iter().filter_map(f).collect()
    };
    let stat = |values: &[f64]| -> serde_json::Value {
        if values.is_empty() {
            return serde_json::Value::Null;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt();
        serde_json::json!({"mean": mean, "std": std})
    };
    let calibration = metrics::ece_reliability(&all_conf, &all_correct, 10)?;
    let report = serde_json::json!({
        "windows": per_window.len(),
        "eete": stat(&collect(|m| m.eete)),
        "et_f1": stat(&collect(|m| m.et_f1)),
        "nll": stat(&collect(|m| m.nll)),
        "brier": stat(&collect(|m| m.brier)),
        "ece": calibration.ece,
        "events": per_window.iter().map(|m| m.event_count).sum::<usize>(),
    });
    std::fs::write(args.run.join("metrics.json"), serde_json::to_string_pretty(&report)? + "\n")?;
    let mut w = csv::Writer::from_path(args.run.join("reliability_bins.csv"))?;
    w.write_record(["lo", "hi", "count", "mean_confidence", "accuracy"])?;
    for bin in &calibration.bins {
        w.write_record([
            bin.lo.to_string(),
            bin.hi.to_string(),
            bin.count.to_string(),
            bin.mean_confidence.to_string(),
            bin.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    if !regime_daily.is_empty() {
        let days: Vec<usize> = regime_daily.keys().copied().collect();
        let series: Vec<Vec<f64>> = days.iter().map(|d| regime_daily[d].clone()).collect();
        let labels: Vec<usize> = days
            .iter()
            .map(|&d| truth.regime_labels.as_ref().unwrap()[d])
            .collect();
        let trace = metrics::regime_probability_trace(&series, &labels)?;
        let mut w = csv::Writer::from_path(args.run.join("regime_trace.csv"))?;
        w.write_record(["day", "p_realized_regime", "p_realized_regime_ma7"])?;
        for ((day, daily), smoothed) in days.iter().zip(&trace.daily).zip(&trace.smoothed) {
            w.write_record([day.to_string(), daily.to_string(), smoothed.to_string()])?;
        }
        w.flush()?;
    }
    println!("metrics -> {}", args.run.join("metrics.json").display());
    Ok(())
}

fn cmd_baseline(args: BaselineArgs) -> Result<()> {
    let (scenario, truth) = load_scenario_and_truth(&args.scenario)?;
    std::fs::create_dir_all(&args.out)?;
    let kind = match args.kind.as_str() {
        "rule-abm" => BaselineKind::RuleAbm,
        "mf-markov" => BaselineKind::MfMarkov,
        other => bail!("unknown baseline kind {other:?}"),
    };
    let assignment = load_or_default_assignment(&args.clusters, &scenario)?;
    let embeddings = load_or_compute_embeddings(&args.clusters, &scenario, args.seed)?;
    let config = WindowConfig {
        lookback: args.lookback,
        horizon: args.horizon,
        ..Default::default()
    };
    let (windows, aggregate) = run_baseline(kind, &scenario, &truth, &assignment, &embeddings, &config, args.seed)?;
    write_window_artifacts(&args.out, &windows, &scenario)?;
    std::fs::write(
        args.out.join("baseline_metrics.json"),
        serde_json::to_string_pretty(&aggregate)? + "\n",
    )?;
    let mut manifest = RunManifest::new("baseline", args.seed, "oracle", &scenario_hash(&args.scenario)?);
    manifest.flag("kind", args.kind.clone());
    manifest.flag("lookback", args.lookback as u64);
    manifest.flag("horizon", args.horizon as u64);
    manifest.write(&args.out.join("manifest.json"))?;
    println!("baseline {} -> {}", args.kind, args.out.display());
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let (scenario, truth) = load_scenario_and_truth(&args.scenario)?;
    std::fs::create_dir_all(&args.out)?;
    let kind = AblationKind::parse(&args.config)
        .ok_or_else(|| anyhow!("unknown ablation config {:?}", args.config))?;
    let assignment = load_or_default_assignment(&args.clusters, &scenario)?;
    let embeddings = load_or_compute_embeddings(&args.clusters, &scenario, args.seed)?;
    let config = WindowConfig {
        lookback: args.lookback,
        horizon: args.horizon,
        ..Default::default()
    };
    let run = engine::run_ablation(kind, &scenario, &truth, &assignment, &embeddings, &config, args.seed)?;
    write_window_artifacts(&args.out, &run.windows, &scenario)?;
    std::fs::write(
        args.out.join("ablation_report.json"),
        serde_json::to_string_pretty(&run.outcome)? + "\n",
    )?;
    let mut manifest = RunManifest::new("ablate", args.seed, "oracle", &scenario_hash(&args.scenario)?);
    manifest.flag("config", args.config.clone());
    manifest.flag("lookback", args.lookback as u64);
    manifest.flag("horizon", args.horizon as u64);
    manifest.write(&args.out.join("manifest.json"))?;
    println!(
        "ablation {}: latency {:.4}s/step, {} structural calls/step -> {}",
        args.config,
        run.outcome.wall_secs_per_step,
        run.outcome.structural_calls_per_step,
        args.out.display()
    );
    Ok(())
}

fn cmd_cost_report(args: CostReportArgs) -> Result<()> {
    let model = CostModel {
        clusters: args.clusters,
        state_agents_per_cluster: args.state_agents,
        ..Default::default()
    };
    let flat = model.flat_calls_per_timestep(args.n);
    let columns: Vec<serde_json::Value> = [1.0f64, 0.75, 0.6]
        .iter()
        .map(|&alpha| {
            let hier = model.hierarchical_calls_per_timestep(args.n, alpha);
            serde_json::json!({
                "alpha": alpha,
                "hierarchical_calls_per_timestep": hier,
                "reduction_ratio": flat / hier as f64,
            })
        })
        .collect();
    let report = serde_json::json!({
        "population": args.n,
        "flat_calls_per_timestep": flat,
        "cluster_level_calls_per_timestep": model.cluster_level_calls_per_timestep(),
        "columns": columns,
        "requested_alpha": args.alpha,
        "requested_hierarchical_calls": model.hierarchical_calls_per_timestep(args.n, args.alpha),
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &args.out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(path, &text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}
