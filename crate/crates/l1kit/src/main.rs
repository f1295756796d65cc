//! Command-line front end: display sets, rSPR graphs, network
//! classification, and level-1 network reconstruction from tree collections.
//!
//! Exit codes: 0 success, 1 usage error, 2 input error, 3 the decision
//! procedure determined that no level-1 network exists.

use std::io::Read;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use l1kit::display::{display_set, DEFAULT_CAP};
use l1kit::level1::{construct_level1, enumerate_level1, Reconstruction};
use l1kit::network::PhyloNetwork;
use l1kit::oracle::{random_network, ClassTarget, GeneratorConfig};
use l1kit::rspr::build_rspr_graph;
use l1kit::tree::PhyloTree;

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Dot,
    Newick,
    Enewick,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Subcommand {
    /// Compute the display set of a level-1 network (eNewick input).
    DisplaySet,
    /// Build the rSPR graph of a tree collection (Newick input).
    RsprGraph,
    /// Report the decision gates: power of two, hypercube, nested labelling.
    Check,
    /// Reconstruct one level-1 network whose display set is the input.
    Reconstruct,
    /// Enumerate all level-1 networks whose display set is the input.
    Enumerate,
    /// Classify a network (eNewick input): tree-child, normal, level-1.
    Classify,
    /// Generate a seeded random network for testing.
    Oracle,
}

/// Display sets, rSPR graphs, and level-1 network reconstruction for rooted
/// binary phylogenetic trees and networks.
#[derive(Parser)]
#[command(name = "l1kit", version, disable_help_subcommand = true)]
struct Cli {
    #[arg(value_enum)]
    subcommand: Subcommand,

    /// Input file; stdin when omitted or `-`. One Newick (or eNewick) per
    /// line; blank lines and `#` comments are ignored. For `oracle` this is
    /// a generator spec `LEAVES,BUDGET[,level1|tree-child|normal|any]`.
    input: Option<String>,

    /// Output format; each subcommand supports a subset.
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// For `reconstruct`: enumerate all networks (same as `enumerate`).
    #[arg(long)]
    all: bool,

    /// Cap on the number of reticulations k (display sets grow as 2^k).
    #[arg(long, env = "L1KIT_CAP", default_value_t = DEFAULT_CAP)]
    cap: usize,

    /// Seed for the `oracle` generator.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Pretty-print JSON output.
    #[arg(long)]
    pretty: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are success, everything else is usage
            use clap::error::ErrorKind::*;
            let _ = e.print();
            return match e.kind() {
                DisplayHelp | DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum Failure {
    Usage(String),
    Input(String),
}

impl From<l1kit::Error> for Failure {
    fn from(e: l1kit::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read_lines(input: &Option<String>) -> Result<Vec<String>, Failure> {
    let text = match input.as_deref() {
        None | Some("-") => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| Failure::Input(format!("stdin: {e}")))?;
            s
        }
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| Failure::Input(format!("{path}: {e}")))?,
    };
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}

fn read_trees(input: &Option<String>) -> Result<Vec<PhyloTree>, Failure> {
    let lines = read_lines(input)?;
    if lines.is_empty() {
        return Err(Failure::Input("no trees in input".into()));
    }
    lines
        .iter()
        .map(|l| PhyloTree::parse_newick(l).map_err(Failure::from))
        .collect()
}

fn read_network(input: &Option<String>) -> Result<PhyloNetwork, Failure> {
    let lines = read_lines(input)?;
    match lines.as_slice() {
        [one] => Ok(PhyloNetwork::parse_enewick(one)?),
        [] => Err(Failure::Input("no network in input".into())),
        _ => Err(Failure::Input("expected exactly one eNewick line".into())),
    }
}

fn emit_json(cli: &Cli, v: &serde_json::Value) {
    if cli.pretty {
        println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
    } else {
        println!("{}", serde_json::to_string(v).expect("serializable"));
    }
}

fn format_or(cli: &Cli, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::Usage(
            "output format not supported by this subcommand".into(),
        ))
    }
}

fn dispatch(cli: &Cli) -> Result<ExitCode, Failure> {
    match cli.subcommand {
        Subcommand::DisplaySet => {
            let f = format_or(cli, Format::Json, &[Format::Json, Format::Newick])?;
            let net = read_network(&cli.input)?;
            let d = display_set(&net, cli.cap)?;
            match f {
                Format::Json => emit_json(cli, &d.to_json()),
                _ => {
                    for t in &d.trees {
                        println!("{}", t.newick());
                    }
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Subcommand::RsprGraph => {
            let f = format_or(cli, Format::Json, &[Format::Json, Format::Dot])?;
            let g = build_rspr_graph(&read_trees(&cli.input)?)?;
            match f {
                Format::Json => emit_json(cli, &g.to_json()),
                _ => print!("{}", g.to_dot()),
            }
            Ok(ExitCode::SUCCESS)
        }
        Subcommand::Check => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let r = construct_level1(&read_trees(&cli.input)?)?;
            emit_json(cli, &check_report(&r));
            Ok(decision_code(&r))
        }
        Subcommand::Reconstruct | Subcommand::Enumerate => {
            let f = format_or(
                cli,
                Format::Json,
                &[Format::Json, Format::Enewick, Format::Dot],
            )?;
            let trees = read_trees(&cli.input)?;
            let all = cli.all || cli.subcommand == Subcommand::Enumerate;
            let r = if all {
                enumerate_level1(&trees)?
            } else {
                construct_level1(&trees)?
            };
            match (&r.network, f) {
                (_, Format::Json) => emit_json(cli, &r.to_json()),
                (None, _) => {
                    eprintln!(
                        "no level-1 network exists: {}",
                        r.reason.map(|x| x.code()).unwrap_or("UNKNOWN")
                    );
                }
                (Some(n), Format::Enewick) => {
                    if all {
                        for m in &r.all_networks {
                            println!("{}", m.serialize_enewick());
                        }
                    } else {
                        println!("{}", n.serialize_enewick());
                    }
                }
                (Some(n), _) => {
                    if all {
                        for m in &r.all_networks {
                            print!("{}", m.to_dot());
                        }
                    } else {
                        print!("{}", n.to_dot());
                    }
                }
            }
            Ok(decision_code(&r))
        }
        Subcommand::Classify => {
            format_or(cli, Format::Json, &[Format::Json])?;
            let net = read_network(&cli.input)?;
            let c = net.validate();
            emit_json(
                cli,
                &serde_json::json!({
                    "tree_child": c.is_tree_child,
                    "normal": c.is_normal,
                    "level1": c.is_level1,
                    "reticulations": c.reticulation_count,
                    "shortcuts": c.shortcuts.iter().collect::<Vec<_>>(),
                }),
            );
            Ok(ExitCode::SUCCESS)
        }
        Subcommand::Oracle => {
            let f = format_or(cli, Format::Json, &[Format::Json, Format::Enewick])?;
            let cfg = parse_generator_spec(cli.input.as_deref().unwrap_or("6,2"), cli.seed)?;
            let net = random_network(&cfg)?;
            match f {
                Format::Json => {
                    let c = net.validate();
                    emit_json(
                        cli,
                        &serde_json::json!({
                            "network": net.serialize_enewick(),
                            "tree_child": c.is_tree_child,
                            "normal": c.is_normal,
                            "level1": c.is_level1,
                            "reticulations": c.reticulation_count,
                        }),
                    );
                }
                _ => println!("{}", net.serialize_enewick()),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn decision_code(r: &Reconstruction) -> ExitCode {
    if r.decided_yes() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    }
}

fn check_report(r: &Reconstruction) -> serde_json::Value {
    use l1kit::level1::FailureReason::*;
    let reason = r.reason;
    serde_json::json!({
        "decision": if r.decided_yes() { "yes" } else { "no" },
        "reason": reason.map(|x| x.code()),
        "k": r.k,
        "power_of_two": reason != Some(NotPowerOfTwo),
        "hypercube": !matches!(reason, Some(NotPowerOfTwo) | Some(NotHypercube)),
        "nested_labelling": reason.is_none(),
    })
}

fn parse_generator_spec(spec: &str, seed: u64) -> Result<GeneratorConfig, Failure> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(Failure::Usage(format!(
            "oracle spec must be LEAVES,BUDGET[,CLASS], got `{spec}`"
        )));
    }
    let leaves: usize = parts[0]
        .parse()
        .map_err(|_| Failure::Usage(format!("invalid leaf count `{}`", parts[0])))?;
    let budget: usize = parts[1]
        .parse()
        .map_err(|_| Failure::Usage(format!("invalid reticulation budget `{}`", parts[1])))?;
    let class = match parts.get(2).copied().unwrap_or("level1") {
        "level1" => ClassTarget::Level1,
        "tree-child" => ClassTarget::TreeChild,
        "normal" => ClassTarget::Normal,
        "any" => ClassTarget::Any,
        other => {
            return Err(Failure::Usage(format!(
                "unknown network class `{other}` (expected level1|tree-child|normal|any)"
            )))
        }
    };
    let mut cfg = GeneratorConfig::new(leaves, budget, seed);
    cfg.class = class;
    Ok(cfg)
}
