//! The `lcn` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lcn_core::build::{dependency_graph_with, mixed_structure_with, structure_with, Identity};
use lcn_core::factorize::{condense_cycles, factorization_plan, prune_hard_constraints, CliqueSpace};
use lcn_core::graph::MixedGraph;
use lcn_core::markov::{compare_conditions, statements, Bounds, Condition, StatementSet};
use lcn_core::model::{parse_lcn, validate, Lcn};
use lcn_core::oracle::ConstraintStatus;
use serde::Serialize;

use crate::dot::to_dot;
use crate::json;
use crate::verify::{verify, VerifyOptions};

#[derive(Parser)]
#[command(name = "lcn", version, about = "Graphs, Markov conditions and factorizations for logical credal networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a model, print it back and report diagnostics.
    Parse {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Print the dependency graph, structure or mixed-structure.
    Graph {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphKind::Structure)]
        kind: GraphKind,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
        /// Merge formula-nodes only when they print identically.
        #[arg(long)]
        syntactic: bool,
    },
    /// List the independence statements a Markov condition yields.
    Indep {
        file: PathBuf,
        #[arg(long, value_enum)]
        condition: Cond,
        /// Graph to apply the condition to (default depends on the condition).
        #[arg(long, value_enum)]
        graph: Option<GraphKind>,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Compare the statements of two conditions, on one model or two.
    Compare {
        file_a: PathBuf,
        file_b: Option<PathBuf>,
        #[arg(long, value_enum)]
        condition_a: Cond,
        #[arg(long, value_enum)]
        condition_b: Cond,
        #[arg(long, value_enum)]
        graph_a: Option<GraphKind>,
        #[arg(long, value_enum)]
        graph_b: Option<GraphKind>,
        #[command(flatten)]
        bounds: BoundArgs,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Chain-component factorization plan of the structure.
    Factorize {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphKind::Structure)]
        graph: GraphKind,
        /// Condense directed cycles into super-nodes first.
        #[arg(long)]
        condense: bool,
        #[arg(long, value_enum, default_value_t = TextFormat::Text)]
        format: TextFormat,
    },
    /// Check a joint probability table against a model.
    CheckDist {
        table: PathBuf,
        model: PathBuf,
        /// Count constraints whose condition has probability zero as violated.
        #[arg(long)]
        strict: bool,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Also check the statements of this condition.
        #[arg(long, value_enum)]
        condition: Option<Cond>,
        #[arg(long, value_enum)]
        graph: Option<GraphKind>,
        #[command(flatten)]
        bounds: BoundArgs,
    },
    /// Cross-check the graphs and Markov conditions on seeded random models.
    Verify {
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        max_props: usize,
        #[arg(long, default_value_t = 8)]
        max_constraints: usize,
    },
    /// Replace directed cycles with super-nodes.
    Condense {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = GraphKind::Mixed)]
        graph: GraphKind,
        #[arg(long, value_enum, default_value_t = CondenseFormat::Text)]
        format: CondenseFormat,
    },
}

#[derive(Args)]
struct BoundArgs {
    /// Largest left-hand set when enumerating the global condition.
    #[arg(long, default_value_t = 2)]
    max_x: usize,
    /// Largest right-hand set (default: unbounded).
    #[arg(long)]
    max_y: Option<usize>,
    /// Largest conditioning set.
    #[arg(long, default_value_t = 3)]
    max_z: usize,
}

impl BoundArgs {
    fn bounds(&self) -> Bounds {
        Bounds {
            max_x: self.max_x,
            max_y: self.max_y.unwrap_or(usize::MAX),
            max_z: self.max_z,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TextFormat {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CondenseFormat {
    Text,
    Dot,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphKind {
    Dependency,
    Structure,
    Mixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Cond {
    LmcLcn,
    LmcC,
    LmcCstr,
    LmcD,
    GmcC,
}

impl Cond {
    fn condition(self) -> Condition {
        match self {
            Cond::LmcLcn => Condition::LmcLcn,
            Cond::LmcC => Condition::LmcC,
            Cond::LmcCstr => Condition::LmcCstr,
            Cond::LmcD => Condition::LmcD,
            Cond::GmcC => Condition::GmcC,
        }
    }

    fn default_graph(self) -> GraphKind {
        match self {
            Cond::LmcLcn => GraphKind::Dependency,
            Cond::LmcD => GraphKind::Mixed,
            Cond::LmcC | Cond::LmcCstr | Cond::GmcC => GraphKind::Structure,
        }
    }
}

/// ANSI colouring, on when `LCN_COLOR` is `1`, `true` or `always`.
struct Style {
    color: bool,
}

impl Style {
    fn from_env() -> Self {
        let color = std::env::var("LCN_COLOR")
            .map(|v| matches!(v.to_ascii_lowercase().as_str(), "1" | "true" | "always" | "yes"))
            .unwrap_or(false);
        Style { color }
    }

    fn paint(&self, text: &str, code: &str) -> String {
        if self.color {
            format!("\x1b[{code}m{text}\x1b[0m")
        } else {
            text.to_string()
        }
    }

    fn good(&self, text: &str) -> String {
        self.paint(text, "32")
    }

    fn bad(&self, text: &str) -> String {
        self.paint(text, "31;1")
    }

    fn warn(&self, text: &str) -> String {
        self.paint(text, "33")
    }
}

/// Failure that should exit with status 1 after its report is printed.
#[derive(Debug)]
struct ChecksFailed;

impl std::fmt::Display for ChecksFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("some checks failed")
    }
}

impl std::error::Error for ChecksFailed {}

/// Runs the command line and returns the process exit status: 0 on
/// success, 1 on a domain error or failed check, 2 on a usage error.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { write!(out, "{text}") } else { write!(err, "{text}") };
            return code;
        }
    };
    let style = Style::from_env();
    match execute(cli.command, out, err, &style) {
        Ok(()) => 0,
        Err(e) if e.is::<ChecksFailed>() => 1,
        Err(e) => {
            let _ = writeln!(err, "{} {e:#}", style.bad("error:"));
            1
        }
    }
}

fn load_model(path: &Path) -> Result<Lcn> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    parse_lcn(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
}

fn build_graph(lcn: &Lcn, kind: GraphKind, identity: Identity) -> MixedGraph {
    match kind {
        GraphKind::Dependency => dependency_graph_with(lcn, identity),
        GraphKind::Structure => structure_with(lcn, identity),
        GraphKind::Mixed => mixed_structure_with(lcn, identity),
    }
}

fn print_json<T: Serialize>(out: &mut dyn Write, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

fn print_statements(out: &mut dyn Write, set: &StatementSet) -> Result<()> {
    for s in set {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

fn execute(command: Command, out: &mut dyn Write, err: &mut dyn Write, style: &Style) -> Result<()> {
    match command {
        Command::Parse { file, format } => {
            let lcn = load_model(&file)?;
            let diagnostics = validate(&lcn);
            match format {
                TextFormat::Text => write!(out, "{lcn}")?,
                TextFormat::Json => {
                    #[derive(Serialize)]
                    struct ParseJson {
                        props: Vec<String>,
                        constraints: Vec<String>,
                        diagnostics: Vec<String>,
                    }
                    print_json(
                        out,
                        &ParseJson {
                            props: lcn.props().iter().map(|p| p.to_string()).collect(),
                            constraints: lcn.constraints().iter().map(|c| c.to_string()).collect(),
                            diagnostics: diagnostics.iter().map(|d| d.to_string()).collect(),
                        },
                    )?;
                }
            }
            for d in &diagnostics {
                writeln!(err, "{}: {}", file.display(), style.warn(&d.to_string()))?;
            }
        }
        Command::Graph {
            file,
            kind,
            format,
            syntactic,
        } => {
            let lcn = load_model(&file)?;
            let identity = if syntactic { Identity::Syntactic } else { Identity::Semantic };
            let g = build_graph(&lcn, kind, identity);
            match format {
                GraphFormat::Dot => write!(out, "{}", to_dot(&g, &graph_name(&file, kind)))?,
                GraphFormat::Json => print_json(out, &json::graph_json(&g))?,
            }
        }
        Command::Indep {
            file,
            condition,
            graph,
            bounds,
            format,
        } => {
            let lcn = load_model(&file)?;
            let g = build_graph(&lcn, graph.unwrap_or(condition.default_graph()), Identity::Semantic);
            let set = statements(&g, condition.condition(), bounds.bounds())?;
            match format {
                TextFormat::Text => print_statements(out, &set)?,
                TextFormat::Json => print_json(out, &json::statements_json(&set))?,
            }
        }
        Command::Compare {
            file_a,
            file_b,
            condition_a,
            condition_b,
            graph_a,
            graph_b,
            bounds,
            format,
        } => {
            let lcn_a = load_model(&file_a)?;
            let lcn_b = match &file_b {
                Some(path) => load_model(path)?,
                None => lcn_a.clone(),
            };
            let g_a = build_graph(&lcn_a, graph_a.unwrap_or(condition_a.default_graph()), Identity::Semantic);
            let g_b = build_graph(&lcn_b, graph_b.unwrap_or(condition_b.default_graph()), Identity::Semantic);
            let report = compare_conditions(&g_a, condition_a.condition(), &g_b, condition_b.condition(), bounds.bounds())?;
            match format {
                TextFormat::Json => print_json(out, &json::comparison_json(&report))?,
                TextFormat::Text => {
                    let sections = [("only in A", &report.only_a), ("only in B", &report.only_b), ("shared", &report.shared)];
                    for (title, set) in sections {
                        writeln!(out, "{title} ({}):", set.len())?;
                        for s in set {
                            writeln!(out, "  {s}")?;
                        }
                    }
                }
            }
        }
        Command::Factorize {
            file,
            graph,
            condense,
            format,
        } => {
            let lcn = load_model(&file)?;
            if graph == GraphKind::Dependency {
                bail!("factorization plans are built from a structure or mixed-structure");
            }
            let mut g = build_graph(&lcn, graph, Identity::Semantic);
            if g.has_directed_cycle() {
                if !condense {
                    bail!("the graph has directed cycles; rerun with --condense to merge them into super-nodes");
                }
                g = condense_cycles(&g).graph;
            }
            let plan = factorization_plan(&g)?;
            let pruning = prune_hard_constraints(&lcn, &plan);
            match format {
                TextFormat::Text => {
                    write!(out, "{plan}")?;
                    if let Ok(spaces) = &pruning {
                        print_pruning(out, spaces)?;
                    }
                }
                TextFormat::Json => print_json(out, &json::plan_json(&plan, pruning.as_ref().ok().map(Vec::as_slice)))?,
            }
            pruning?;
        }
        Command::CheckDist {
            table,
            model,
            strict,
            tol,
            condition,
            graph,
            bounds,
        } => {
            let text = std::fs::read_to_string(&table).with_context(|| format!("cannot read {}", table.display()))?;
            let t = json::parse_table(&text).with_context(|| format!("{}", table.display()))?;
            let lcn = load_model(&model)?;
            let mut failures = 0;
            for (i, c) in lcn.constraints().iter().enumerate() {
                let status = t.check_constraint(c, tol)?;
                let verdict = match status {
                    ConstraintStatus::Satisfied { value } => style.good(&format!("ok ({value:.6})")),
                    ConstraintStatus::Violated { value, margin } => {
                        style.bad(&format!("VIOLATED (value {value:.6}, margin {margin:.3e})"))
                    }
                    ConstraintStatus::Vacuous if strict => style.bad("VIOLATED (condition has probability zero)"),
                    ConstraintStatus::Vacuous => style.warn("vacuous (condition has probability zero)"),
                };
                if !status.passes(strict) {
                    failures += 1;
                }
                writeln!(out, "constraint {}: {c}  {verdict}", i + 1)?;
            }
            if let Some(cond) = condition {
                let g = build_graph(&lcn, graph.unwrap_or(cond.default_graph()), Identity::Semantic);
                for s in statements(&g, cond.condition(), bounds.bounds())? {
                    let r = t.check_independence(&s, tol)?;
                    let verdict = if r.holds() {
                        style.good(&format!("holds (max deviation {:.3e})", r.max_deviation()))
                    } else {
                        failures += 1;
                        style.bad(&format!("FAILS (max deviation {:.3e})", r.max_deviation()))
                    };
                    writeln!(out, "statement {s}  {verdict}")?;
                }
            }
            if failures > 0 {
                writeln!(out, "{}", style.bad(&format!("{failures} check(s) failed")))?;
                return Err(ChecksFailed.into());
            }
            writeln!(out, "{}", style.good("all checks passed"))?;
        }
        Command::Verify {
            samples,
            seed,
            max_props,
            max_constraints,
        } => {
            if !(1..=12).contains(&max_props) {
                bail!("--max-props must be between 1 and 12");
            }
            let report = verify(&VerifyOptions {
                samples,
                seed,
                max_props,
                max_constraints,
            })?;
            for line in &report.lines {
                let mark = if line.failed == 0 { style.good("pass") } else { style.bad("FAIL") };
                writeln!(out, "{mark} {}: {}/{}", line.name, line.checked - line.failed, line.checked)?;
            }
            for example in &report.counterexamples {
                writeln!(err, "counterexample:\n{example}")?;
            }
            if report.lines.iter().any(|l| l.failed > 0) {
                return Err(ChecksFailed.into());
            }
        }
        Command::Condense { file, graph, format } => {
            let lcn = load_model(&file)?;
            let g = build_graph(&lcn, graph, Identity::Semantic);
            if graph == GraphKind::Dependency {
                bail!("condensation applies to a structure or mixed-structure");
            }
            let c = condense_cycles(&g);
            match format {
                CondenseFormat::Dot => write!(out, "{}", to_dot(&c.graph, "condensed"))?,
                CondenseFormat::Json => {
                    #[derive(Serialize)]
                    struct CondenseJson {
                        graph: json::GraphJson,
                        mapping: Vec<[String; 2]>,
                    }
                    print_json(
                        out,
                        &CondenseJson {
                            graph: json::graph_json(&c.graph),
                            mapping: c.mapping.iter().map(|(a, b)| [a.to_string(), b.to_string()]).collect(),
                        },
                    )?;
                }
                CondenseFormat::Text => {
                    for n in c.graph.nodes() {
                        writeln!(out, "node {n}")?;
                    }
                    for (a, b) in c.graph.directed_edges() {
                        writeln!(out, "{} -> {}", c.graph.node(a), c.graph.node(b))?;
                    }
                    for (a, b) in c.graph.undirected_edges() {
                        writeln!(out, "{} -- {}", c.graph.node(a), c.graph.node(b))?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn print_pruning(out: &mut dyn Write, spaces: &[CliqueSpace]) -> Result<()> {
    for s in spaces.iter().filter(|s| s.removed() > 0) {
        let names: Vec<&str> = s.clique.iter().map(|p| p.as_str()).collect();
        writeln!(
            out,
            "hard constraints keep {} of {} configurations of {{{}}}",
            s.allowed.len(),
            s.allowed.len() + s.removed(),
            names.join(",")
        )?;
    }
    Ok(())
}

fn graph_name(file: &Path, kind: GraphKind) -> String {
    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or("lcn");
    let kind = match kind {
        GraphKind::Dependency => "dependency",
        GraphKind::Structure => "structure",
        GraphKind::Mixed => "mixed",
    };
    format!("{stem}_{kind}")
}
