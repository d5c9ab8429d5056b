use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flatgh_core::asymptotics::{
    convergence_experiment, default_s_list, diameter_s_list, verify_diameter_asymptotics, verify_edge_asymptotics, verify_subordinate_estimate,
    AsymptoticsReport, ConvergenceConfig, EdgeEndpoint, Tolerances,
};
use flatgh_core::degeneration::Degeneration;
use flatgh_core::export::fiber_matrix;
use flatgh_core::graph::EdgeId;
use flatgh_core::number::parse_rational;
use flatgh_core::selftest::{run_selected, total_line, SelftestOptions};
use flatgh_core::specfile::{builtin, load_spec, BUILTIN_NAMES};
use flatgh_core::{Error, Rational};

#[derive(Parser)]
#[command(name = "flatgh", version, about = "Limit graphs and GH convergence of degenerating flat surfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(clap::Args)]
struct SpecArg {
    /// Spec file, or `builtin:NAME` for one of the bundled specs.
    #[arg(long)]
    spec: String,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Comma-separated parameter values, strictly decreasing in (0, 1).
    /// Defaults to 1e-2..1e-6, or 1e-8..1e-16 for the diameter target.
    #[arg(long = "s", value_delimiter = ',')]
    s: Option<Vec<f64>>,
    /// Samples per boundary circle.
    #[arg(long, default_value_t = 256)]
    resolution: usize,
    /// Number of sampled fiber points.
    #[arg(long, default_value_t = 300)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl RunArgs {
    fn s_list(&self) -> Vec<f64> {
        self.s.clone().unwrap_or_else(default_s_list)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print the limit metric graph Δ of a spec.
    LimitGraph {
        #[command(flatten)]
        spec: SpecArg,
    },
    /// Write the normalized distance matrix of a fiber sample, plus a
    /// `.points.csv` sidecar of coordinates and retractions next to `--out`.
    FiberMatrix {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the convergence experiment; exits 1 if its checks fail.
    Converge {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        run: RunArgs,
        /// Required bound on the final gh_upper.
        #[arg(long, default_value_t = 0.15)]
        threshold: f64,
        /// Net spacing on Δ relative to its diameter.
        #[arg(long, default_value_t = 0.02)]
        net_eps: f64,
    },
    /// Fit a scaling law: `edge:<id>`, `diameter` or `class:<id>:<id>:<index>`.
    Asymptotics {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        target: String,
        /// Endpoint offsets `a,b` on the edge(s), as rationals.
        #[arg(long, value_delimiter = ',')]
        tau: Option<Vec<String>>,
    },
    /// Run the bundled acceptance suite.
    Selftest {
        /// Comma-separated criterion numbers to run.
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<usize>>,
        #[arg(long, default_value_t = 1.0, hide = true)]
        tolerance_scale: f64,
    },
}

enum Failure {
    Input(Error),
    Check,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::LimitGraph { spec } => limit_graph(&spec),
        Command::FiberMatrix { spec, run } => fiber_matrix_cmd(&spec, &run),
        Command::Converge { spec, run, threshold, net_eps } => converge(&spec, &run, threshold, net_eps),
        Command::Asymptotics { spec, run, target, tau } => asymptotics(&spec, &run, &target, tau.as_deref()),
        Command::Selftest { only, tolerance_scale } => selftest(only, tolerance_scale),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn load(spec: &SpecArg) -> Result<Degeneration, Error> {
    match spec.spec.strip_prefix("builtin:") {
        Some(name) => builtin(name).map_err(|_| {
            Error::Argument(format!("unknown builtin spec {name:?}; available: {}", BUILTIN_NAMES.join(", ")))
        }),
        None => load_spec(&fs::read_to_string(&spec.spec)?),
    }
}

/// Writes `text` to `path` through a temporary file and a rename, or to
/// stdout when no path is given.
fn emit(path: Option<&Path>, text: &str) -> Result<(), Error> {
    match path {
        Some(path) => {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".tmp");
            fs::write(&tmp, text)?;
            fs::rename(&tmp, path)?;
        }
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn limit_graph(spec: &SpecArg) -> Outcome {
    let deg = load(spec)?;
    let lg = deg.limit_graph()?;
    let delta = lg.delta();
    let names: Vec<String> = (0..delta.vertex_count())
        .map(|v| {
            let ids: Vec<&str> = deg
                .spec()
                .junctions
                .iter()
                .enumerate()
                .filter(|(k, _)| lg.delta_vertex(flatgh_core::graph::VertexId(*k)).0 == v)
                .map(|(_, j)| j.id.as_str())
                .collect();
            ids.join("=")
        })
        .collect();
    let lengths: Vec<Rational> = delta.edges().iter().map(|e| e.length).collect();
    let w = lg.weight().minimum;
    let mut out = format!("{}, diam {}, w = {w}\n", shape(delta.vertex_count(), delta.edges(), &lengths), lg.diameter());
    out += &format!("vertices: {}\n", names.join(", "));
    out += "edges:\n";
    for (k, a) in deg.annuli().iter().enumerate() {
        if let Some(e) = lg.delta_edge(EdgeId(k)) {
            let edge = &delta.edges()[e.0];
            out += &format!(
                "  {}: {} -- {}, length {} (factor {})\n",
                a.id,
                names[edge.tail.0],
                names[edge.head.0],
                edge.length,
                lg.edge_factors()[k]
            );
        }
    }
    let collapsed: Vec<&str> = lg.collapsed_edges().iter().map(|e| deg.annuli()[e.0].id.as_str()).collect();
    out += &format!("collapsed: {}\n", if collapsed.is_empty() { "none".to_string() } else { collapsed.join(", ") });
    out += &format!("w: {w}\ndiam: {}\n", lg.diameter());
    emit(None, &out)?;
    Ok(())
}

fn shape(vertices: usize, edges: &[flatgh_core::graph::Edge<Rational>], lengths: &[Rational]) -> String {
    let list = |mut ls: Vec<Rational>| {
        ls.sort();
        ls.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",")
    };
    match (vertices, edges.len()) {
        (1, 1) => format!("circle, circumference {}", lengths[0]),
        (1, k) => format!("wedge of {k} circles ({})", list(lengths.to_vec())),
        (2, 3) if edges.iter().all(|e| e.tail != e.head) => format!("theta({})", list(lengths.to_vec())),
        (v, e) => format!("graph with {v} vertices and {e} edges"),
    }
}

fn fiber_matrix_cmd(spec: &SpecArg, run: &RunArgs) -> Outcome {
    if run.format == Format::Json {
        return Err(Error::Argument("fiber-matrix writes CSV only".into()).into());
    }
    let s = match run.s.as_deref() {
        None => 1e-3,
        Some([s]) => *s,
        Some(_) => return Err(Error::Argument("fiber-matrix takes a single --s value".into()).into()),
    };
    let deg = load(spec)?;
    let fm = fiber_matrix(&deg, s, run.resolution, run.samples, run.seed)?;
    match &run.out {
        Some(path) => {
            emit(Some(path), &fm.matrix_csv())?;
            emit(Some(&path.with_extension("points.csv")), &fm.sidecar)?;
        }
        None => emit(None, &fm.matrix_csv())?,
    }
    Ok(())
}

fn converge(spec: &SpecArg, run: &RunArgs, threshold: f64, net_eps: f64) -> Outcome {
    let deg = load(spec)?;
    let config = ConvergenceConfig { n: run.resolution, m: run.samples, seed: run.seed, threshold, net_eps };
    let report = convergence_experiment(&deg, &run.s_list(), config)?;
    let text = match run.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    };
    emit(run.out.as_deref(), &text)?;
    for c in report.checks.iter().filter(|c| !c.pass) {
        eprintln!("check failed: {} (value {}, bound {})", c.name, c.value, c.target);
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn taus(tau: Option<&[String]>, default: (Rational, Rational)) -> Result<(Rational, Rational), Error> {
    match tau {
        None => Ok(default),
        Some([a, b]) => Ok((parse_rational(a)?, parse_rational(b)?)),
        Some(_) => Err(Error::Argument("--tau takes two offsets a,b".into())),
    }
}

fn annulus(deg: &Degeneration, id: &str) -> Result<EdgeId, Error> {
    deg.annulus_index(id).map(EdgeId).ok_or_else(|| Error::Argument(format!("unknown annulus {id:?}")))
}

fn asymptotics(spec: &SpecArg, run: &RunArgs, target: &str, tau: Option<&[String]>) -> Outcome {
    let deg = load(spec)?;
    let s = run.s_list();
    let parts: Vec<&str> = target.split(':').collect();
    let report: AsymptoticsReport = match parts.as_slice() {
        ["edge", id] => {
            let e = annulus(&deg, id)?;
            let len = deg.annuli()[e.0].length();
            let tol = Tolerances { c_relative: 0.02, w_absolute: 1e-3 };
            verify_edge_asymptotics(&deg, e, taus(tau, (Rational::from_integer(0), len))?, &s, run.resolution, tol)?
        }
        ["diameter"] => {
            let tol = Tolerances { c_relative: 0.05, w_absolute: 1e-2 };
            let s = run.s.clone().unwrap_or_else(diameter_s_list);
            verify_diameter_asymptotics(&deg, &s, run.resolution, run.samples, run.seed, tol)?
        }
        ["class", i, j, index] => {
            let (i, j) = (annulus(&deg, i)?, annulus(&deg, j)?);
            let index: usize = index.parse().map_err(|_| Error::Argument(format!("bad class index {index:?}")))?;
            let lg = deg.limit_graph()?;
            let classes = lg.path_classes(i, j, lg.diameter())?;
            let class = classes
                .get(index)
                .ok_or_else(|| Error::Argument(format!("class index {index} out of range ({} classes)", classes.len())))?;
            let half = |e: EdgeId| deg.annuli()[e.0].length() / Rational::from_integer(2);
            let (tp, tq) = taus(tau, (half(i), half(j)))?;
            let tol = Tolerances { c_relative: 0.05, w_absolute: 1e-3 };
            let (p, q) = (EdgeEndpoint { tau: tp, phi: 0.0 }, EdgeEndpoint { tau: tq, phi: 0.0 });
            verify_subordinate_estimate(&deg, class, p, q, &s, run.resolution, tol)?
        }
        _ => return Err(Error::Argument(format!("bad target {target:?}; use edge:<id>, diameter or class:<id>:<id>:<index>")).into()),
    };
    let text = match run.format {
        Format::Csv => report.to_csv(),
        Format::Json => report.to_json() + "\n",
    };
    emit(run.out.as_deref(), &text)?;
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn selftest(only: Option<Vec<usize>>, tolerance_scale: f64) -> Outcome {
    let ids = only.unwrap_or_else(|| (1..=8).collect());
    if let Some(bad) = ids.iter().find(|&&id| !(1..=8).contains(&id)) {
        return Err(Error::Argument(format!("no criterion {bad}; criteria are numbered 1 to 8")).into());
    }
    let results = run_selected(SelftestOptions { tolerance_scale }, &ids, |r| println!("{}", r.line()));
    let (pass, summary) = total_line(&results);
    println!("{summary}");
    if pass {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}
