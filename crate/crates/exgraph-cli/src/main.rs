//! `exgraph`: command-line access to the bounds, sweeps, and checks of the
//! `exgraph` library.
//!
//! Exit codes: 0 on success, 2 when a solver fails, 3 on invalid input.

use clap::{Args, Parser, Subcommand};
use exgraph::{
    alpha_with_set, chain_member, chsh_colored, classical_membership, colored_membership_margin,
    detect_kink, emit_csv, emit_json, emit_svg, enumerate_shadow_family, family_label,
    find_separating_weight, g33_33, naimark_dilate, parse_grid, partial_trace_reference, purify,
    shadow, sweep, theta, theta_body_membership, theta_colored_upper, ColoredExclusivityGraph,
    Event, GraphError, NpaError, NpaLevel, SweepError, SweepOptions, ThetaError, WeightPath,
    WeightVector,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Debug)]
enum CliError {
    /// Exit code 3.
    Invalid(String),
    /// Exit code 2.
    Solver(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Invalid(m) => write!(f, "invalid input: {m}"),
            Self::Solver(m) => write!(f, "solver failure: {m}"),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        Self::Invalid(e.to_string())
    }
}

impl From<NpaError> for CliError {
    fn from(e: NpaError) -> Self {
        match e {
            NpaError::Graph(g) => Self::Invalid(g.to_string()),
            NpaError::TooManyWords(..) | NpaError::TooManyClasses(..) => {
                Self::Invalid(e.to_string())
            }
            other => Self::Solver(other.to_string()),
        }
    }
}

impl From<ThetaError> for CliError {
    fn from(e: ThetaError) -> Self {
        match e {
            ThetaError::Graph(g) => Self::Invalid(g.to_string()),
            ThetaError::Shape => Self::Invalid(e.to_string()),
            other => Self::Solver(other.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Graph(g) => g.into(),
            SweepError::Npa(n) => n.into(),
            SweepError::Theta(t) => t.into(),
            SweepError::Realization(r) => Self::Invalid(r.to_string()),
            SweepError::BadInput(m) => Self::Invalid(m),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "exgraph",
    version,
    about = "Classical and quantum bounds for bicolored exclusivity graphs"
)]
struct Cli {
    /// JSON config file whose keys mirror the flags; explicit flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Weighted independence number with a maximizing independent set.
    Alpha(AlphaArgs),
    /// Lovász theta of the graph's shadow.
    Theta(ThetaArgs),
    /// Colored upper bound from the moment-matrix relaxation.
    ThetaColored(ThetaColoredArgs),
    /// Membership of a behavior in the classical, theta-body, or colored set.
    Membership(MembershipArgs),
    /// Resolution family of a graph with doubled edges.
    Family(FamilyArgs),
    /// Upper/lower bounds along a weight path, emitted as CSV/JSON/SVG.
    Sweep(SweepArgs),
    /// Kinks of a swept bound curve.
    Kink(KinkArgs),
    /// Search for a weight separating two graphs' quantum sets.
    Separate(SeparateArgs),
    /// Round-trip random POVMs through dilation and purification.
    DilateCheck(DilateCheckArgs),
}

/// Keys mirror the command-line flags.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    graph: Option<String>,
    graph2: Option<String>,
    weights: Option<String>,
    behavior: Option<String>,
    path: Option<String>,
    kappa: Option<String>,
    level: Option<String>,
    eps_grid: Option<String>,
    dims: Option<Vec<String>>,
    seed: Option<u64>,
    tol: Option<f64>,
    out: Option<String>,
    format: Option<String>,
    trials: Option<usize>,
    threshold: Option<f64>,
    set: Option<String>,
    curve: Option<String>,
    dim: Option<usize>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("config {}: {e}", path.display())))
}

#[derive(Args)]
struct AlphaArgs {
    /// Graph: a JSON file or builtin:NAME.
    #[arg(long)]
    graph: Option<String>,
    /// JSON file with one weight per vertex (default: uniform 1).
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThetaArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThetaColoredArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Relaxation level: 1, 1ab, or 2.
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MembershipArgs {
    #[arg(long)]
    graph: Option<String>,
    /// JSON file with the behavior to test (one probability per vertex).
    #[arg(long)]
    behavior: Option<PathBuf>,
    /// Which set: classical, theta, or colored.
    #[arg(long)]
    set: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FamilyArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Graph to sweep; repeat for several curves.
    #[arg(long)]
    graph: Vec<String>,
    /// Weight path kind: fig4, random, or custom.
    #[arg(long)]
    path: Option<String>,
    /// Five comma-separated target weights for the random path.
    #[arg(long)]
    kappa: Option<String>,
    /// JSON file with the custom path's target distribution.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Grid as start:stop:step.
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    level: Option<String>,
    /// Seesaw dimensions dA,dB; repeat to try several.
    #[arg(long)]
    dims: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv, json, or svg.
    #[arg(long)]
    format: Option<String>,
}

#[derive(Args)]
struct KinkArgs {
    #[arg(long)]
    graph: Option<String>,
    #[arg(long)]
    path: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Grid as start:stop:step (default 0:1:0.025).
    #[arg(long)]
    eps_grid: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    dims: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    /// Flag second differences above this multiple of the median.
    #[arg(long)]
    threshold: Option<f64>,
    /// Which curve to inspect: upper (default) or lower.
    #[arg(long)]
    curve: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SeparateArgs {
    /// First graph of the pair.
    #[arg(long)]
    graph: Option<String>,
    /// Second graph of the pair.
    #[arg(long)]
    graph2: Option<String>,
    #[arg(long)]
    level: Option<String>,
    /// Random candidate weights to try.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    dims: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DilateCheckArgs {
    /// System dimension of the random POVMs.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(serde::Deserialize)]
struct GraphFile {
    n: usize,
    #[serde(default)]
    edges_a: Vec<(usize, usize)>,
    #[serde(default)]
    edges_b: Vec<(usize, usize)>,
    /// Shorthand for a one-color graph.
    #[serde(default)]
    edges: Vec<(usize, usize)>,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

/// All shadow edges in the first color, none in the second.
fn one_color_shadow() -> ColoredExclusivityGraph {
    let chsh = chsh_colored();
    let sh = shadow(&chsh);
    ColoredExclusivityGraph::new(
        8,
        sh.edges().iter().copied().collect::<Vec<_>>(),
        vec![],
        chsh.labels().map(<[Event]>::to_vec),
    )
    .expect("shadow edges are valid")
}

const BUILTINS: &str = "chsh, 44,43, 44,33, 44,311, 44,1111, 33,33, chain0..chain4, onecolor";

fn builtin_graph(name: &str) -> Result<ColoredExclusivityGraph, CliError> {
    let chain = |k: usize| chain_member(k).map_err(CliError::from);
    match name {
        "chsh" | "44,44" | "chain0" => Ok(chsh_colored()),
        "44,43" | "chain1" => chain(1),
        "44,33" | "chain2" => chain(2),
        "44,311" | "chain3" => chain(3),
        "44,1111" | "chain4" => chain(4),
        "33,33" => Ok(g33_33()),
        "onecolor" | "one-color" => Ok(one_color_shadow()),
        other => Err(CliError::Invalid(format!(
            "unknown builtin graph \"{other}\" (available: {BUILTINS})"
        ))),
    }
}

fn load_graph(spec: &str) -> Result<(String, ColoredExclusivityGraph), CliError> {
    if let Some(name) = spec.strip_prefix("builtin:") {
        let g = builtin_graph(name)?;
        let label = if matches!(name, "onecolor" | "one-color") {
            "onecolor".to_string()
        } else {
            family_label(&g).unwrap_or_else(|_| name.to_string())
        };
        return Ok((label, g));
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| CliError::Invalid(format!("graph {spec}: {e}")))?;
    let file: GraphFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("graph {spec}: {e}")))?;
    let mut edges_a = file.edges_a;
    let edges_b = file.edges_b;
    if !file.edges.is_empty() {
        if !edges_a.is_empty() || !edges_b.is_empty() {
            return Err(CliError::Invalid(format!(
                "graph {spec}: give either edges or edges_a/edges_b, not both"
            )));
        }
        edges_a = file.edges;
    }
    let labels = file
        .labels
        .map(|ls| ls.iter().map(|s| Event::parse(s)).collect::<Result<Vec<_>, _>>())
        .transpose()?;
    let g = ColoredExclusivityGraph::new(file.n, edges_a, edges_b, labels)?;
    let stem = Path::new(spec)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| spec.to_string());
    let label = family_label(&g).unwrap_or(stem);
    Ok((label, g))
}

fn load_numbers(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_weights(path: &Option<PathBuf>, n: usize) -> Result<WeightVector, CliError> {
    match path {
        Some(p) => Ok(WeightVector(load_numbers(p)?)),
        None => Ok(WeightVector(vec![1.0; n])),
    }
}

fn parse_level(s: &str) -> Result<NpaLevel, CliError> {
    let folded: String = s
        .chars()
        .filter(|c| *c != '+')
        .collect::<String>()
        .to_ascii_lowercase();
    match folded.as_str() {
        "1" => Ok(NpaLevel::One),
        "1ab" => Ok(NpaLevel::OnePlusAb),
        "2" => Ok(NpaLevel::Two),
        _ => Err(CliError::Invalid(format!(
            "level must be 1, 1ab, or 2 (got \"{s}\")"
        ))),
    }
}

fn parse_dims(s: &str) -> Result<(usize, usize), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Invalid(format!("dims must be dA,dB (got \"{s}\")")));
    }
    let num = |p: &str| {
        p.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Invalid(format!("dims must be dA,dB (got \"{s}\")")))
    };
    Ok((num(parts[0])?, num(parts[1])?))
}

fn parse_dims_list(cli: &[String], cfg: Option<Vec<String>>) -> Result<Vec<(usize, usize)>, CliError> {
    let source: Vec<String> = if cli.is_empty() { cfg.unwrap_or_default() } else { cli.to_vec() };
    source.iter().map(|s| parse_dims(s)).collect()
}

fn parse_eps_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Invalid(format!(
            "eps grid must be start:stop:step (got \"{s}\")"
        )));
    }
    let num = |p: &str| {
        p.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Invalid(format!("bad number \"{p}\" in eps grid")))
    };
    parse_grid(num(parts[0])?, num(parts[1])?, num(parts[2])?).map_err(Into::into)
}

fn parse_kappa(s: &str) -> Result<[f64; 5], CliError> {
    let vals: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|_| CliError::Invalid(format!("bad kappa \"{s}\"")))?;
    let arr: [f64; 5] = vals
        .try_into()
        .map_err(|_| CliError::Invalid("kappa needs exactly five values".into()))?;
    Ok(arr)
}

fn resolve_weight_path(
    kind: Option<String>,
    kappa: Option<String>,
    weights: Option<PathBuf>,
) -> Result<WeightPath, CliError> {
    let kind = kind.unwrap_or_else(|| {
        if kappa.is_some() {
            "random".into()
        } else if weights.is_some() {
            "custom".into()
        } else {
            "fig4".into()
        }
    });
    match kind.as_str() {
        "fig4" => Ok(WeightPath::fig4()),
        "random" | "random_kappa" => {
            let kappa = kappa
                .ok_or_else(|| CliError::Invalid("the random path needs --kappa".into()))?;
            WeightPath::random_kappa(parse_kappa(&kappa)?).map_err(Into::into)
        }
        "custom" => {
            let weights = weights
                .ok_or_else(|| CliError::Invalid("the custom path needs --weights".into()))?;
            WeightPath::custom(load_numbers(&weights)?).map_err(Into::into)
        }
        other => Err(CliError::Invalid(format!(
            "path must be fig4, random, or custom (got \"{other}\")"
        ))),
    }
}

fn write_output(out: &Option<PathBuf>, content: &str) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", path.display()))),
        None => {
            print!("{content}");
            if !content.ends_with('\n') {
                println!();
            }
            Ok(())
        }
    }
}

fn pretty(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json output");
    s.push('\n');
    s
}

fn run_alpha(args: AlphaArgs, cfg: FileConfig) -> Result<(), CliError> {
    let spec = args
        .graph
        .or(cfg.graph)
        .ok_or_else(|| CliError::Invalid("--graph is required".into()))?;
    let (label, g) = load_graph(&spec)?;
    let weights = args.weights.or(cfg.weights.map(PathBuf::from));
    let w = load_weights(&weights, g.n())?;
    let (value, set) = alpha_with_set(&g, &w)?;
    let out = serde_json::json!({
        "graph": label,
        "alpha": value,
        "set": set.members,
    });
    write_output(&args.out, &pretty(&out))
}

fn run_theta(args: ThetaArgs, cfg: FileConfig) -> Result<(), CliError> {
    let spec = args
        .graph
        .or(cfg.graph)
        .ok_or_else(|| CliError::Invalid("--graph is required".into()))?;
    let (label, g) = load_graph(&spec)?;
    let weights = args.weights.or(cfg.weights.map(PathBuf::from));
    let w = load_weights(&weights, g.n())?;
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-8);
    let value = theta(&shadow(&g), &w, tol)?;
    let out = serde_json::json!({ "graph": label, "theta": value });
    write_output(&args.out, &pretty(&out))
}

fn run_theta_colored(args: ThetaColoredArgs, cfg: FileConfig) -> Result<(), CliError> {
    let spec = args
        .graph
        .or(cfg.graph)
        .ok_or_else(|| CliError::Invalid("--graph is required".into()))?;
    let (label, g) = load_graph(&spec)?;
    let weights = args.weights.or(cfg.weights.map(PathBuf::from));
    let w = load_weights(&weights, g.n())?;
    let level = parse_level(&args.level.or(cfg.level).unwrap_or_else(|| "1ab".into()))?;
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-8);
    let value = theta_colored_upper(&g, &w, level, tol)?;
    let out = serde_json::json!({
        "graph": label,
        "level": level.to_string(),
        "theta_colored": value,
    });
    write_output(&args.out, &pretty(&out))
}

fn run_membership(args: MembershipArgs, cfg: FileConfig) -> Result<(), CliError> {
    let spec = args
        .graph
        .or(cfg.graph)
        .ok_or_else(|| CliError::Invalid("--graph is required".into()))?;
    let (label, g) = load_graph(&spec)?;
    let behavior = args
        .behavior
        .or(cfg.behavior.map(PathBuf::from))
        .ok_or_else(|| CliError::Invalid("--behavior is required".into()))?;
    let p = load_numbers(&behavior)?;
    let set = args.set.or(cfg.set).unwrap_or_else(|| "colored".into());
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-8);
    let out = match set.as_str() {
        "classical" => {
            let member = classical_membership(&p, &g)?;
            serde_json::json!({ "graph": label, "set": "classical", "member": member })
        }
        "theta" => {
            let member = theta_body_membership(&p, &shadow(&g), tol)?;
            serde_json::json!({ "graph": label, "set": "theta", "member": member })
        }
        "colored" => {
            let level = parse_level(&args.level.or(cfg.level).unwrap_or_else(|| "1ab".into()))?;
            let margin = colored_membership_margin(&p, &g, level, tol)?;
            let member = margin >= -(20.0 * tol).max(1e-7);
            serde_json::json!({
                "graph": label,
                "set": "colored",
                "level": level.to_string(),
                "member": member,
                "margin": margin,
            })
        }
        other => {
            return Err(CliError::Invalid(format!(
                "set must be classical, theta, or colored (got \"{other}\")"
            )))
        }
    };
    write_output(&args.out, &pretty(&out))
}

fn run_family(args: FamilyArgs, cfg: FileConfig) -> Result<(), CliError> {
    let spec = args
        .graph
        .or(cfg.graph)
        .unwrap_or_else(|| "builtin:chsh".into());
    let (label, g) = load_graph(&spec)?;
    let fam = enumerate_shadow_family(&g)?;
    let members: Vec<serde_json::Value> = fam
        .members
        .iter()
        .zip(&fam.labels)
        .map(|(m, l)| {
            serde_json::json!({
                "label": l,
                "edges_a": m.edges_a().iter().collect::<Vec<_>>(),
                "edges_b": m.edges_b().iter().collect::<Vec<_>>(),
            })
        })
        .collect();
    let out = serde_json::json!({
        "graph": label,
        "classes": fam.members.len(),
        "classes_without_swap": fam.count_without_swap,
        "labels": fam.labels,
        "covering": fam.covering,
        "members": members,
    });
    write_output(&args.out, &pretty(&out))
}

/// Shared sweep execution for the sweep and kink commands.
#[allow(clippy::too_many_arguments)]
fn run_sweep_core(
    graph_specs: Vec<String>,
    path: WeightPath,
    grid: Vec<f64>,
    level: NpaLevel,
    dims: Vec<(usize, usize)>,
    seed: u64,
    tol: f64,
) -> Result<exgraph::SweepResult, CliError> {
    if graph_specs.is_empty() {
        return Err(CliError::Invalid("--graph is required".into()));
    }
    let mut graphs = Vec::with_capacity(graph_specs.len());
    for spec in &graph_specs {
        graphs.push(load_graph(spec)?);
    }
    let opts = SweepOptions {
        level,
        dims,
        seed,
        tol,
    };
    sweep(&graphs, &path, &grid, &opts).map_err(Into::into)
}

fn run_sweep(args: SweepArgs, cfg: FileConfig) -> Result<(), CliError> {
    let graphs = if args.graph.is_empty() {
        cfg.graph.clone().into_iter().collect()
    } else {
        args.graph
    };
    let path = resolve_weight_path(
        args.path.or(cfg.path),
        args.kappa.or(cfg.kappa),
        args.weights.or(cfg.weights.map(PathBuf::from)),
    )?;
    let grid = parse_eps_grid(
        &args
            .eps_grid
            .or(cfg.eps_grid)
            .unwrap_or_else(|| "0:1:0.05".into()),
    )?;
    let level = parse_level(&args.level.or(cfg.level).unwrap_or_else(|| "1ab".into()))?;
    let dims = parse_dims_list(&args.dims, cfg.dims)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-8);
    let result = run_sweep_core(graphs, path, grid, level, dims, seed, tol)?;
    let format = args.format.or(cfg.format).unwrap_or_else(|| "csv".into());
    let content = match format.as_str() {
        "csv" => emit_csv(&result),
        "json" => emit_json(&result),
        "svg" => emit_svg(&result),
        other => {
            return Err(CliError::Invalid(format!(
                "format must be csv, json, or svg (got \"{other}\")"
            )))
        }
    };
    let out = args.out.or(cfg.out.map(PathBuf::from));
    write_output(&out, &content)?;
    if result.rows.iter().any(|r| r.error.is_some()) {
        return Err(CliError::Solver(
            "one or more sweep rows failed; see the emitted output".into(),
        ));
    }
    Ok(())
}

fn run_kink(args: KinkArgs, cfg: FileConfig) -> Result<(), CliError> {
    let graph = args
        .graph
        .or(cfg.graph)
        .ok_or_else(|| CliError::Invalid("--graph is required".into()))?;
    let path = resolve_weight_path(
        args.path.or(cfg.path),
        args.kappa.or(cfg.kappa),
        args.weights.or(cfg.weights.map(PathBuf::from)),
    )?;
    let grid = parse_eps_grid(
        &args
            .eps_grid
            .or(cfg.eps_grid)
            .unwrap_or_else(|| "0:1:0.025".into()),
    )?;
    let level = parse_level(&args.level.or(cfg.level).unwrap_or_else(|| "1ab".into()))?;
    let dims = parse_dims_list(&args.dims, cfg.dims)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-8);
    let threshold = args.threshold.or(cfg.threshold).unwrap_or(5.0);
    let curve_side = args.curve.or(cfg.curve).unwrap_or_else(|| "upper".into());
    let result = run_sweep_core(vec![graph], path, grid, level, dims, seed, tol)?;
    let curve: Vec<(f64, f64)> = result
        .rows
        .iter()
        .filter_map(|r| {
            let v = match curve_side.as_str() {
                "lower" => r.lower,
                "upper" => r.upper,
                _ => None,
            };
            v.map(|v| (r.epsilon, v))
        })
        .collect();
    if !matches!(curve_side.as_str(), "lower" | "upper") {
        return Err(CliError::Invalid(format!(
            "curve must be lower or upper (got \"{curve_side}\")"
        )));
    }
    if curve.len() < 3 {
        return Err(CliError::Invalid(format!(
            "curve has only {} usable points",
            curve.len()
        )));
    }
    let kinks = detect_kink(&curve, threshold);
    let out = serde_json::json!({
        "graph": result.rows[0].graph_label,
        "curve_side": curve_side,
        "threshold": threshold,
        "kinks": kinks,
        "curve": curve,
    });
    write_output(&args.out, &pretty(&out))
}

fn run_separate(args: SeparateArgs, cfg: FileConfig) -> Result<(), CliError> {
    let spec1 = args
        .graph
        .or(cfg.graph)
        .ok_or_else(|| CliError::Invalid("--graph is required".into()))?;
    let spec2 = args
        .graph2
        .or(cfg.graph2)
        .ok_or_else(|| CliError::Invalid("--graph2 is required".into()))?;
    let (label1, g1) = load_graph(&spec1)?;
    let (label2, g2) = load_graph(&spec2)?;
    let level = parse_level(&args.level.or(cfg.level).unwrap_or_else(|| "1ab".into()))?;
    let trials = args.trials.or(cfg.trials).unwrap_or(24);
    let dims = parse_dims_list(&args.dims, cfg.dims)?;
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    let tol = args.tol.or(cfg.tol).unwrap_or(1e-8);
    let cert = find_separating_weight(&g1, &g2, level, trials, seed, &dims, tol)?;
    let out = match cert {
        Some(c) => {
            let (relaxed, constrained) = if c.relaxed_is_first {
                (&label1, &label2)
            } else {
                (&label2, &label1)
            };
            serde_json::json!({
                "found": true,
                "relaxed": relaxed,
                "constrained": constrained,
                "weight": c.weight.0,
                "lower": c.lower,
                "upper": c.upper,
                "gap": c.gap,
                "realization_kind": c.kind,
                "dims": [c.realization.dims.0, c.realization.dims.1],
            })
        }
        None => serde_json::json!({ "found": false }),
    };
    write_output(&args.out, &pretty(&out))
}

fn run_dilate_check(args: DilateCheckArgs, cfg: FileConfig) -> Result<(), CliError> {
    let dim = args.dim.or(cfg.dim).unwrap_or(3);
    let trials = args.trials.or(cfg.trials).unwrap_or(5);
    let seed = args.seed.or(cfg.seed).unwrap_or(0);
    if dim == 0 || dim > 16 {
        return Err(CliError::Invalid(format!(
            "dim must be between 1 and 16 (got {dim})"
        )));
    }
    if trials == 0 {
        return Err(CliError::Invalid("trials must be positive".into()));
    }
    const PASS: f64 = 1e-8;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::with_capacity(trials);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let gaussian = |rng: &mut ChaCha8Rng| {
            DMatrix::<f64>::from_fn(dim, dim, |_, _| {
                let u: f64 = rng.gen_range(1e-12..1.0);
                let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                (-2.0 * u.ln()).sqrt() * v.cos()
            })
        };
        // Random effect 0 ≤ π₀ ≤ I via a scaled Gram matrix; π₁ completes
        // the resolution of identity.
        let g = gaussian(&mut rng);
        let gram = &g * g.transpose();
        let top = gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(0.0f64, |a, &l| a.max(l));
        let pi0 = gram / (top * (1.0 + rng.gen_range(0.05..0.5)));
        let pi1 = DMatrix::identity(dim, dim) - &pi0;
        let h = gaussian(&mut rng);
        let mix = &h * h.transpose();
        let rho = &mix / mix.trace();

        let dilation = naimark_dilate(&pi0, &pi1, &rho)
            .map_err(|e| CliError::Solver(format!("dilation failed: {e}")))?;
        let psi = purify(&rho).map_err(|e| CliError::Solver(format!("purification failed: {e}")))?;
        let back = partial_trace_reference(&psi, dim);
        let purity_residual = (&back - &rho)
            .iter()
            .fold(0.0f64, |a, &x| a.max(x.abs()));

        let trial_worst = dilation
            .unitary_residual
            .max(dilation.projector_residuals[0])
            .max(dilation.projector_residuals[1])
            .max(dilation.trace_mismatch[0].abs())
            .max(dilation.trace_mismatch[1].abs())
            .max(purity_residual);
        worst = worst.max(trial_worst);
        reports.push(serde_json::json!({
            "trial": trial,
            "unitary_residual": dilation.unitary_residual,
            "projector_residuals": dilation.projector_residuals,
            "trace_mismatch": dilation.trace_mismatch,
            "purification_residual": purity_residual,
        }));
    }
    let ok = worst <= PASS;
    let out = serde_json::json!({
        "dim": dim,
        "trials": trials,
        "worst_residual": worst,
        "pass_threshold": PASS,
        "ok": ok,
        "reports": reports,
    });
    write_output(&args.out, &pretty(&out))?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Solver(format!(
            "worst residual {worst:.3e} exceeds {PASS:.0e}"
        )))
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config(&cli.config)?;
    match cli.cmd {
        Cmd::Alpha(a) => run_alpha(a, cfg),
        Cmd::Theta(a) => run_theta(a, cfg),
        Cmd::ThetaColored(a) => run_theta_colored(a, cfg),
        Cmd::Membership(a) => run_membership(a, cfg),
        Cmd::Family(a) => run_family(a, cfg),
        Cmd::Sweep(a) => run_sweep(a, cfg),
        Cmd::Kink(a) => run_kink(a, cfg),
        Cmd::Separate(a) => run_separate(a, cfg),
        Cmd::DilateCheck(a) => run_dilate_check(a, cfg),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successful outcomes; anything else is
            // invalid input.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            match e {
                CliError::Invalid(_) => ExitCode::from(3),
                CliError::Solver(_) => ExitCode::from(2),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn levels_and_dims_parse() {
        assert_eq!(parse_level("1").unwrap(), NpaLevel::One);
        assert_eq!(parse_level("1ab").unwrap(), NpaLevel::OnePlusAb);
        assert_eq!(parse_level("1+AB").unwrap(), NpaLevel::OnePlusAb);
        assert_eq!(parse_level("2").unwrap(), NpaLevel::Two);
        assert!(parse_level("3").is_err());
        assert_eq!(parse_dims("2,2").unwrap(), (2, 2));
        assert_eq!(parse_dims(" 3 , 1 ").unwrap(), (3, 1));
        assert!(parse_dims("2").is_err());
        let grid = parse_eps_grid("0:1:0.5").unwrap();
        assert_eq!(grid, vec![0.0, 0.5, 1.0]);
        assert!(parse_eps_grid("0,1,0.5").is_err());
        assert_eq!(
            parse_kappa("0.26,0.18,0.19,0.13,0.24").unwrap(),
            [0.26, 0.18, 0.19, 0.13, 0.24]
        );
        assert!(parse_kappa("1,2").is_err());
    }

    #[test]
    fn builtin_graphs_resolve() {
        for name in ["chsh", "44,43", "44,33", "44,311", "44,1111", "33,33", "onecolor"] {
            let (_, g) = load_graph(&format!("builtin:{name}")).unwrap();
            assert_eq!(g.n(), 8);
        }
        assert!(load_graph("builtin:nope").is_err());
        let (label, _) = load_graph("builtin:chsh").unwrap();
        assert_eq!(label, "44,44");
    }

    #[test]
    fn weight_path_resolution_prefers_explicit_kind() {
        let p = resolve_weight_path(None, None, None).unwrap();
        assert_eq!(p.kind(), "fig4");
        let p = resolve_weight_path(None, Some("0.2,0.2,0.2,0.2,0.2".into()), None).unwrap();
        assert_eq!(p.kind(), "random_kappa");
        assert!(resolve_weight_path(Some("random".into()), None, None).is_err());
        assert!(resolve_weight_path(Some("nope".into()), None, None).is_err());
    }
}
