use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use credal_core::graph::NodeSet;
use credal_core::io::{NetworkFile, QueryFile};
use credal_core::joint_lp::{build_global_lp, dump, joint_extreme_points};
use credal_core::network::{validate, CredalNetwork, Factor};
use credal_core::query::{run, Query};
use credal_core::{Error, Result};

#[derive(Parser)]
#[command(name = "credal", version, about = "Exact inference in credal networks under epistemic irrelevance")]
struct Cli {
    /// Write the global linear program of the query's target to this file.
    #[arg(long, global = true, value_name = "PATH")]
    lp_dump: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network file and report every problem found.
    Validate { net: PathBuf },
    /// Lower and upper values of a query.
    Infer { net: PathBuf, query: PathBuf },
    /// AD- and d-separation of I and S given C, in both orders. Node sets
    /// are comma-separated names; pass "" for an empty set.
    Adsep { net: PathBuf, i: String, s: String, c: String },
    /// Extreme points of the global polytope.
    Vertices { net: PathBuf },
    /// The reduction audit log of a query's lower value.
    Trace { net: PathBuf, query: PathBuf },
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

fn load_net(path: &Path) -> Result<CredalNetwork> {
    NetworkFile::parse(&read(path)?)?.to_network()
}

fn load_query(net: &CredalNetwork, path: &Path) -> Result<Query> {
    Query::from_file(net, &QueryFile::parse(&read(path)?)?)
}

fn node_set(net: &CredalNetwork, list: &str) -> Result<NodeSet> {
    let names: Vec<&str> = list.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    net.dag().ids(&names)
}

fn write_lp(path: &Path, net: &CredalNetwork, f: &Factor) -> Result<()> {
    let g = build_global_lp(net, f, false)?;
    fs::write(path, dump(net, &g)).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// For a conditional query the dumped objective is `I_B (f − lower)`,
/// whose lower expectation is `ρ` at the reported lower value.
fn lp_target(q: &Query, lower: f64) -> Result<Factor> {
    match &q.evidence {
        None => Ok(q.target.clone()),
        Some(b) => q.target.map(|v| v - lower).product(&b.indicator()),
    }
}

fn execute(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Validate { net } => {
            let spec = NetworkFile::parse(&read(net)?)?.to_spec()?;
            let report = validate(&spec);
            if !report.is_valid() {
                return Err(Error::Input(report.to_string()));
            }
            Ok(format!("valid=true\nnodes={}\nedges={}\n", spec.nodes.len(), spec.edges.len()))
        }
        Command::Infer { net, query } => {
            let net = load_net(net)?;
            let q = load_query(&net, query)?;
            let answer = run(&net, &q)?;
            if let Some(path) = &cli.lp_dump {
                write_lp(path, &net, &lp_target(&q, answer.lower.value)?)?;
            }
            Ok(answer.render())
        }
        Command::Adsep { net, i, s, c } => {
            let net = load_net(net)?;
            let (i, s, c) = (node_set(&net, i)?, node_set(&net, s)?, node_set(&net, c)?);
            let dag = net.dag();
            Ok(format!(
                "AD(I,S|C)={}\nAD(S,I|C)={}\nd(I,S|C)={}\nd(S,I|C)={}\n",
                dag.ad_separated(&i, &s, &c),
                dag.ad_separated(&s, &i, &c),
                dag.d_separated(&i, &s, &c),
                dag.d_separated(&s, &i, &c)
            ))
        }
        Command::Vertices { net } => {
            let net = load_net(net)?;
            let points = joint_extreme_points(&net)?;
            let mut out = format!("count={}\n", points.len());
            for p in points {
                let cells: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
                out.push_str(&format!("vertex={}\n", cells.join(",")));
            }
            Ok(out)
        }
        Command::Trace { net, query } => {
            let net = load_net(net)?;
            let q = load_query(&net, query)?;
            let answer = run(&net, &q)?;
            if let Some(path) = &cli.lp_dump {
                write_lp(path, &net, &lp_target(&q, answer.lower.value)?)?;
            }
            Ok(match &answer.lower.trace {
                Some(t) => t.audit_log(),
                None => format!("depth=0 kind={} value={}\n", answer.method, answer.lower.value),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
