//! `diversity` — command-line front door for the diversity crate.
//!
//! Exit codes: 0 = all checks pass, 2 = a mathematical assertion failed,
//! 1 = usage, I/O, or schema error. Output is deterministic: identical
//! (input, seed, tolerance) produce byte-identical reports.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use diversity::analysis::{
    concatenated_grid_sequence, default_eps_grid, extract_cauchy_subsequence,
    harmonic_sequence, is_cauchy_diversity, is_cauchy_metric, verify_subsequence_windows,
    PointDiversity, SequenceRep, Status,
};
use diversity::axioms::{check_axioms, CheckMode, Pseudodiversity, TableDiversity};
use diversity::conformity::{validate_conformity, FilterBase, Validation};
use diversity::metric::MetricTable;
use diversity::metrization::{verify_metrization, verify_random_suite, NestedBase};
use diversity::power::{generation_check, uc_test_pseudodiversity, validate_power_conformity};
use diversity::zoo::{
    diameter_diversity, grid_experiment, SteinerGraphDiversity, WeightedGraph,
};
use diversity::{Error, FiniteSubset, GroundSet};

const TOOL_NAME: &str = "diversity";
const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Parser)]
#[command(name = TOOL_NAME, version = TOOL_VERSION, about = "Diversities, conformities, and their checkable theorems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write the report to this path instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Numerical tolerance recorded and used by comparisons.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for randomized suites (recorded in every report).
    #[arg(long, global = true, default_value_t = 2026)]
    seed: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Grid experiment: diameter stays small while MST/Steiner grow.
    Grid {
        /// Grid sizes: "10", "2..12" (inclusive), or "2,3,5".
        #[arg(long, default_value = "2..12")]
        n: String,
    },
    /// Check the pseudodiversity axioms of a described diversity.
    Axioms {
        /// JSON description (see README for the schema).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Built-in instance: diameter | graph-steiner | cardinality.
        #[arg(long)]
        demo: Option<String>,
    },
    /// Conformity tooling.
    Conformity {
        #[command(subcommand)]
        action: ConformityAction,
    },
    /// Cauchy analysis of point sequences in R^3.
    Cauchy {
        /// JSON sequence description (see README).
        #[arg(long)]
        input: Option<PathBuf>,
        /// Built-in sequence: grid-concat | harmonic | eventually-constant.
        #[arg(long)]
        demo: Option<String>,
        /// Also extract a subsequence of this length and verify the
        /// 2^(1-N) window bounds.
        #[arg(long)]
        extract_subsequence: Option<u32>,
    },
    /// Uniformity/topology functor diagram on seeded random instances.
    Functors {
        /// Number of random instances.
        #[arg(long, default_value_t = 20)]
        n: u64,
    },
}

#[derive(Subcommand)]
enum ConformityAction {
    /// Check the conformity axioms of a filter base.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Verify the metrization bounds of a nested base (or a random suite).
    Metrize {
        /// Nested-base JSON; omit to run the seeded random suite.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Suite size when no input is given.
        #[arg(long, default_value_t = 100)]
        n: usize,
    },
    /// Uniform-continuity test of a diversity against a conformity.
    UcTest {
        #[arg(long)]
        input: PathBuf,
    },
    /// Validate the induced power conformity.
    Power {
        #[arg(long)]
        input: PathBuf,
    },
    /// Recover the conformity from its metrized diversities.
    Generation {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Report {
    tool: Tool,
    command: String,
    seed: u64,
    tolerance: f64,
    input_sha256: String,
    ok: bool,
    result: Value,
}

/// Usage/IO/schema error (exit 1) as distinct from math failure (exit 2).
struct UsageError(String);

impl From<Error> for UsageError {
    fn from(e: Error) -> Self {
        UsageError(e.to_string())
    }
}

impl From<std::io::Error> for UsageError {
    fn from(e: std::io::Error) -> Self {
        UsageError(e.to_string())
    }
}

impl From<serde_json::Error> for UsageError {
    fn from(e: serde_json::Error) -> Self {
        UsageError(format!("JSON parse error: {e}"))
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read_input(path: &PathBuf) -> Result<(Value, String), UsageError> {
    let bytes = std::fs::read(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))?;
    let v: Value = serde_json::from_slice(&bytes)?;
    Ok((v, sha256_hex(&bytes)))
}

fn parse_n_spec(spec: &str) -> Result<Vec<u32>, UsageError> {
    let parse_one = |s: &str| -> Result<u32, UsageError> {
        s.trim()
            .parse::<u32>()
            .map_err(|_| UsageError(format!("invalid grid size '{s}'")))
    };
    if let Some((a, b)) = spec.split_once("..") {
        let (a, b) = (parse_one(a)?, parse_one(b)?);
        if a > b {
            return Err(UsageError(format!("empty range '{spec}'")));
        }
        return Ok((a..=b).collect());
    }
    spec.split(',').map(parse_one).collect()
}

fn random_point_diversity(
    ground: GroundSet,
    rng: &mut ChaCha8Rng,
) -> Result<TableDiversity, UsageError> {
    let n = ground.len();
    let pts: Vec<[f64; 3]> = (0..n)
        .map(|_| [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()])
        .collect();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dist[i * n + j] = diversity::zoo::euclid(&pts[i], &pts[j]);
        }
    }
    let diam = diameter_diversity(MetricTable::new(ground.clone(), dist)?);
    // Freeze into a table so the report does not depend on float re-eval order.
    Ok(TableDiversity::from_fn(ground, diam.name(), |a| {
        diversity::axioms::evaluate_exact(&diam, a).unwrap()
    })?)
}

/// Build a pseudodiversity from the `axioms` input schema.
fn diversity_from_spec(
    v: &Value,
    seed: u64,
) -> Result<Box<dyn Pseudodiversity>, UsageError> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| UsageError("missing 'kind'".into()))?;
    let labels = |v: &Value| -> Result<GroundSet, UsageError> {
        let l = v
            .get("labels")
            .and_then(Value::as_array)
            .ok_or_else(|| UsageError("missing 'labels'".into()))?;
        let names: Vec<String> = l
            .iter()
            .map(|x| {
                x.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| UsageError("labels must be strings".into()))
            })
            .collect::<Result<_, _>>()?;
        Ok(GroundSet::new(names)?)
    };
    match kind {
        "diameter" => {
            let ground = labels(v)?;
            let pts = v
                .get("points")
                .and_then(Value::as_array)
                .ok_or_else(|| UsageError("missing 'points'".into()))?;
            if pts.len() != ground.len() {
                return Err(UsageError("points/labels length mismatch".into()));
            }
            let coords: Vec<[f64; 3]> = pts
                .iter()
                .map(|p| {
                    let c: Vec<f64> = serde_json::from_value(p.clone())
                        .map_err(|_| UsageError("points must be numeric arrays".into()))?;
                    if c.len() != 3 {
                        return Err(UsageError("points must be 3-dimensional".into()));
                    }
                    Ok([c[0], c[1], c[2]])
                })
                .collect::<Result<_, _>>()?;
            let n = ground.len();
            let mut dist = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    dist[i * n + j] = diversity::zoo::euclid(&coords[i], &coords[j]);
                }
            }
            Ok(Box::new(diameter_diversity(MetricTable::new(ground, dist)?)))
        }
        "graph-steiner" => {
            let ground = labels(v)?;
            let raw = v
                .get("edges")
                .and_then(Value::as_array)
                .ok_or_else(|| UsageError("missing 'edges'".into()))?;
            let mut edges = Vec::new();
            for e in raw {
                let t: (usize, usize, f64) = serde_json::from_value(e.clone())
                    .map_err(|_| UsageError("edges must be [i, j, weight] triples".into()))?;
                edges.push(t);
            }
            Ok(Box::new(SteinerGraphDiversity::new(WeightedGraph::new(
                ground, edges,
            )?)))
        }
        "cardinality" => {
            // Negative control: δ(A) = |A| violates D1 on singletons.
            let ground = labels(v)?;
            Ok(Box::new(TableDiversity::from_fn(
                ground,
                "cardinality",
                |a: &FiniteSubset| a.members().len() as f64,
            )?))
        }
        "random-diameter" => {
            let n = v.get("size").and_then(Value::as_u64).unwrap_or(5) as usize;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(Box::new(random_point_diversity(
                GroundSet::indexed(n, "x"),
                &mut rng,
            )?))
        }
        other => Err(UsageError(format!("unknown diversity kind '{other}'"))),
    }
}

fn demo_axioms_spec(name: &str) -> Result<Value, UsageError> {
    match name {
        "diameter" => Ok(json!({"kind": "random-diameter", "size": 5})),
        "graph-steiner" => Ok(json!({
            "kind": "graph-steiner",
            "labels": ["a", "b", "c", "d", "e", "f"],
            "edges": [[0,1,1.0],[1,2,0.5],[2,3,0.75],[3,4,1.25],[4,5,0.5],[5,0,2.0],[1,4,0.9]]
        })),
        "cardinality" => Ok(json!({
            "kind": "cardinality",
            "labels": ["a", "b", "c", "d"]
        })),
        other => Err(UsageError(format!("unknown axioms demo '{other}'"))),
    }
}

fn sequence_from_spec(v: &Value) -> Result<SequenceRep, UsageError> {
    let kind = v
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| UsageError("missing 'kind'".into()))?;
    let points = |key: &str| -> Result<Vec<[f64; 3]>, UsageError> {
        let raw = v
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| UsageError(format!("missing '{key}'")))?;
        raw.iter()
            .map(|p| {
                let c: Vec<f64> = serde_json::from_value(p.clone())
                    .map_err(|_| UsageError("terms must be numeric arrays".into()))?;
                if c.len() != 3 {
                    return Err(UsageError("terms must be 3-dimensional".into()));
                }
                Ok([c[0], c[1], c[2]])
            })
            .collect()
    };
    match kind {
        "eventually-constant" => {
            let prefix = points("prefix")?;
            let c = points("constant")?;
            if c.len() != 1 {
                return Err(UsageError("'constant' must hold exactly one point".into()));
            }
            Ok(SequenceRep::EventuallyConstant {
                prefix,
                constant: c[0],
            })
        }
        "finite-prefix" => Ok(SequenceRep::FinitePrefix { terms: points("terms")? }),
        other => Err(UsageError(format!("unknown sequence kind '{other}'"))),
    }
}

fn demo_sequence(name: &str) -> Result<SequenceRep, UsageError> {
    match name {
        "grid-concat" => Ok(concatenated_grid_sequence()),
        "harmonic" => Ok(harmonic_sequence()),
        "eventually-constant" => Ok(SequenceRep::EventuallyConstant {
            prefix: vec![[1.0, 0.0, 0.0], [0.5, 0.5, 0.0], [0.25, 0.0, 0.25]],
            constant: [0.0, 0.0, 0.0],
        }),
        other => Err(UsageError(format!("unknown cauchy demo '{other}'"))),
    }
}

fn run(cli: &Cli) -> Result<(bool, String, Value), UsageError> {
    match &cli.cmd {
        Cmd::Grid { n } => {
            let sizes = parse_n_spec(n)?;
            let table = grid_experiment(&sizes)?;
            let ok = table.all_bounds_hold();
            let hash = sha256_hex(format!("grid:{n}").as_bytes());
            Ok((ok, hash, serde_json::to_value(&table)?))
        }
        Cmd::Axioms { input, demo } => {
            let (spec, hash) = match (input, demo) {
                (Some(path), None) => read_input(path)?,
                (None, Some(name)) => {
                    let spec = demo_axioms_spec(name)?;
                    (spec, sha256_hex(format!("demo:{name}").as_bytes()))
                }
                _ => {
                    return Err(UsageError(
                        "axioms requires exactly one of --input or --demo".into(),
                    ))
                }
            };
            let delta = diversity_from_spec(&spec, cli.seed)?;
            let report = check_axioms(delta.as_ref(), CheckMode::Exhaustive)?;
            let ok = report.pass;
            Ok((ok, hash, serde_json::to_value(&report)?))
        }
        Cmd::Conformity { action } => run_conformity(cli, action),
        Cmd::Cauchy {
            input,
            demo,
            extract_subsequence,
        } => {
            let (seq, hash) = match (input, demo) {
                (Some(path), None) => {
                    let (v, h) = read_input(path)?;
                    (sequence_from_spec(&v)?, h)
                }
                (None, Some(name)) => {
                    (demo_sequence(name)?, sha256_hex(format!("demo:{name}").as_bytes()))
                }
                _ => {
                    return Err(UsageError(
                        "cauchy requires exactly one of --input or --demo".into(),
                    ))
                }
            };
            let eps = default_eps_grid();
            let metric = is_cauchy_metric(&seq, &eps)?;
            let diam = is_cauchy_diversity(&seq, PointDiversity::Diameter, &eps, 8)?;
            let steiner =
                is_cauchy_diversity(&seq, PointDiversity::steiner_lb(), &eps, 8)?;
            let mut ok = true;
            let mut result = json!({
                "metric": metric,
                "diversity_diam": diam,
                "diversity_steiner_lb": steiner,
            });
            if let Some(count) = extract_subsequence {
                let extraction = extract_cauchy_subsequence(&seq, *count)?;
                let windows = verify_subsequence_windows(
                    &seq,
                    PointDiversity::Diameter,
                    &extraction,
                    2,
                );
                ok &= windows.iter().all(|w| w.ok);
                result["extraction"] = serde_json::to_value(&extraction)?;
                result["windows"] = serde_json::to_value(&windows)?;
            }
            // An inconclusive verdict is a finding, not a failure; a
            // refuted diversity verdict alongside a certified metric one
            // is exactly what the flagship sequence demonstrates.
            ok &= metric.status != Status::Inconclusive;
            Ok((ok, hash, result))
        }
        Cmd::Functors { n } => {
            let mut rows = Vec::new();
            let mut all = true;
            for i in 0..*n {
                let size = 3 + (i % 3) as usize;
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed.wrapping_add(i));
                let delta =
                    random_point_diversity(GroundSet::indexed(size, "x"), &mut rng)?;
                let report = diversity::conformity::functor_diagram_check(&delta)?;
                all &= report.ok;
                rows.push(json!({
                    "instance": i,
                    "ground_size": size,
                    "uniformities_equal": report.uniformities_equal,
                    "topologies_equal": report.topologies_equal,
                    "ok": report.ok,
                }));
            }
            let hash = sha256_hex(format!("functors:{n}:{}", cli.seed).as_bytes());
            Ok((all, hash, json!({ "instances": rows, "all_ok": all })))
        }
    }
}

fn run_conformity(
    cli: &Cli,
    action: &ConformityAction,
) -> Result<(bool, String, Value), UsageError> {
    match action {
        ConformityAction::Validate { input } => {
            let (v, hash) = read_input(input)?;
            let base = FilterBase::from_json(&v)?;
            match validate_conformity(&base)? {
                Validation::Valid(c) => Ok((
                    true,
                    hash,
                    json!({
                        "valid": true,
                        "families": c.base.families.len(),
                        "c3_witnesses": c.c3_witnesses,
                    }),
                )),
                Validation::Invalid(r) => {
                    Ok((false, hash, json!({ "valid": false, "violation": r })))
                }
            }
        }
        ConformityAction::Metrize { input, n } => match input {
            Some(path) => {
                let (v, hash) = read_input(path)?;
                let base = NestedBase::from_json(&v)?;
                let report = verify_metrization(&base)?;
                let ok = report.ok;
                Ok((ok, hash, serde_json::to_value(&report)?))
            }
            None => {
                let report = verify_random_suite(*n, 4, cli.seed)?;
                let ok = report.all_ok;
                let hash = sha256_hex(format!("suite:{n}:{}", cli.seed).as_bytes());
                Ok((ok, hash, serde_json::to_value(&report)?))
            }
        },
        ConformityAction::UcTest { input } => {
            let (v, hash) = read_input(input)?;
            let base = FilterBase::from_json(
                v.get("conformity")
                    .ok_or_else(|| UsageError("missing 'conformity'".into()))?,
            )?;
            let c = validate_conformity(&base)?.into_conformity()?;
            let delta = diversity_from_spec(
                v.get("diversity")
                    .ok_or_else(|| UsageError("missing 'diversity'".into()))?,
                cli.seed,
            )?;
            let eps: Option<Vec<f64>> = match v.get("eps") {
                Some(e) => Some(serde_json::from_value(e.clone())?),
                None => None,
            };
            let report = uc_test_pseudodiversity(delta.as_ref(), &c, eps.as_deref())?;
            let ok = report.uniformly_continuous;
            Ok((ok, hash, serde_json::to_value(&report)?))
        }
        ConformityAction::Power { input } => {
            let (v, hash) = read_input(input)?;
            let base = FilterBase::from_json(&v)?;
            let c = validate_conformity(&base)?.into_conformity()?;
            let report = validate_power_conformity(&c)?;
            let ok = report.ok;
            Ok((ok, hash, serde_json::to_value(&report)?))
        }
        ConformityAction::Generation { input } => {
            let (v, hash) = read_input(input)?;
            let base = FilterBase::from_json(&v)?;
            let c = validate_conformity(&base)?.into_conformity()?;
            let report = generation_check(&c)?;
            let ok = report.ok;
            Ok((ok, hash, serde_json::to_value(&report)?))
        }
    }
}

/// The invocation with the output destination stripped, so reports for
/// identical (input, seed, tolerance) are byte-identical wherever written.
fn command_line() -> String {
    let mut out = Vec::new();
    let mut skip_next = false;
    for arg in std::env::args().skip(1) {
        if skip_next {
            skip_next = false;
            continue;
        }
        if arg == "--output" {
            skip_next = true;
            continue;
        }
        if arg.starts_with("--output=") {
            continue;
        }
        out.push(arg);
    }
    out.join(" ")
}

/// Aligned plain-text rendering of a JSON value: one `key = value` line
/// per leaf, arrays of objects as rows.
fn render_text(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}{k}:\n"));
                        render_text(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{k} = {val}\n")),
                }
            }
        }
        Value::Array(items) => {
            for (i, item) in items.iter().enumerate() {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{pad}[{i}]\n"));
                        render_text(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{pad}{item}\n")),
                }
            }
        }
        _ => out.push_str(&format!("{pad}{v}\n")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are not usage errors.
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    if cli.tol <= 0.0 {
        eprintln!("error: --tol must be positive");
        return ExitCode::from(1);
    }
    let (ok, input_sha256, result) = match run(&cli) {
        Ok(t) => t,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    let report = Report {
        tool: Tool {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        },
        command: command_line(),
        seed: cli.seed,
        tolerance: cli.tol,
        input_sha256,
        ok,
        result,
    };
    let rendered = match cli.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report).expect("serializable report");
            s.push('\n');
            s
        }
        Format::Text => {
            let v = serde_json::to_value(&report).expect("serializable report");
            let mut s = String::new();
            render_text(&v, 0, &mut s);
            s
        }
    };
    let write_result = match &cli.output {
        Some(path) => std::fs::write(path, rendered.as_bytes()),
        None => std::io::stdout().write_all(rendered.as_bytes()),
    };
    if let Err(e) = write_result {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
