//! The `muxpath` command line.
//!
//! Exit codes: 0 for a positive verdict, 1 for a negative one, 2 on errors.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use muxpath::acceptance::{eval_query_automaton, selected_nodes};
use muxpath::bench::{chain_timings, growth_exponent, linear_fit};
use muxpath::direct::eval_query_direct;
use muxpath::emptiness::{EmptinessOptions, DEFAULT_MAX_STATES};
use muxpath::nsta::{nsta_selected_nodes, nsta_to_twata, twata_to_nsta};
use muxpath::query::{validate_query, MuXPathQuery};
use muxpath::random::{random_tree, TreeShape};
use muxpath::reasoning::{
    certain_answer, contained, implies, parse_constraints, parse_views, satisfiable, Certainty, Containment,
    Implication, NodeRef, ReasoningStats, RootConstraint, SatVerdict, Witness,
};
use muxpath::tree::{encode_binary, parse_tree, render_tree, Label, NodeAddress, SiblingTree};
use muxpath::twata::compile_query;

#[derive(Parser, Debug)]
#[command(name = "muxpath", version, about = "Evaluate and reason about fixpoint tree queries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the nodes of a tree selected by a query.
    Eval {
        #[arg(long)]
        tree: PathBuf,
        #[command(flatten)]
        query: QueryArg,
        /// Evaluate by fixpoint iteration instead of the automaton.
        #[arg(long)]
        direct: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether a query selects a node in some tree.
    Sat {
        #[command(flatten)]
        query: QueryArg,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether q1 selects only nodes that q2 selects, in every tree.
    Contains {
        #[arg(long)]
        q1: String,
        #[arg(long)]
        q2: String,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether root constraints imply another one.
    Implies {
        #[arg(long)]
        constraints: PathBuf,
        /// The implied constraint.
        #[command(flatten)]
        query: QueryArg,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether a node is a certain answer given sound views.
    Certain {
        #[command(flatten)]
        query: QueryArg,
        #[arg(long)]
        views: PathBuf,
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// Identifier (`a`), path (`fchild/right`) or `/` for the root.
        #[arg(long)]
        node: String,
        #[command(flatten)]
        common: Common,
    },
    /// Print the automaton of a query.
    Compile {
        #[command(flatten)]
        query: QueryArg,
        #[command(flatten)]
        common: Common,
    },
    /// Convert a query's automaton to an NSTA and back, comparing selections.
    NstaRoundtrip {
        #[command(flatten)]
        query: QueryArg,
        /// Tree to compare on; random trees are used otherwise.
        #[arg(long)]
        tree: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Time automaton evaluation on chain trees.
    Bench {
        #[command(flatten)]
        query: QueryArg,
        /// Comma-separated chain sizes.
        #[arg(long, value_delimiter = ',', default_values_t = [1000usize, 10000, 100000])]
        sizes: Vec<usize>,
        /// Props on every chain node.
        #[arg(long, value_delimiter = ',', default_value = "red")]
        label: Vec<String>,
        #[arg(long, default_value_t = 3)]
        reps: usize,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct QueryArg {
    /// Query text, or `@FILE`. Text not starting with `$` is read as a node
    /// expression.
    #[arg(long)]
    query: String,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[arg(long, env = "MUXPATH_MAX_STATES", default_value_t = DEFAULT_MAX_STATES)]
    max_states: usize,
    /// Report elapsed time in the stats (output is then not reproducible).
    #[arg(long)]
    timing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Dot,
}

#[derive(Debug)]
struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

/// Result of a command before formatting.
#[derive(Default)]
struct Outcome {
    positive: bool,
    verdict: String,
    nodes: Option<Vec<NodeAddress>>,
    witness: Option<Witness>,
    states: usize,
    nta_states: usize,
    text: String,
    dot: Option<String>,
}

fn read_file(path: &Path) -> Res<String> {
    std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn query_text(arg: &str) -> Res<String> {
    match arg.strip_prefix('@') {
        Some(path) => read_file(Path::new(path)),
        None => Ok(arg.to_string()),
    }
}

fn load_query(arg: &str) -> Res<MuXPathQuery> {
    let q = RootConstraint::parse(&query_text(arg)?)?.query;
    validate_query(&q)?;
    Ok(q)
}

fn load_tree(path: &Path) -> Res<SiblingTree> {
    Ok(parse_tree(&read_file(path)?)?)
}

fn search_states(s: &ReasoningStats) -> usize {
    s.search.interfaces
}

fn witness_text(w: &Witness) -> String {
    format!("witness: {}\nnode: {}\n", render_tree(&w.tree), w.node)
}

fn eval(tree: &Path, query: &str, direct: bool) -> Res<Outcome> {
    let t = load_tree(tree)?;
    let q = load_query(query)?;
    let (nodes, states) = if direct {
        (eval_query_direct(&q, &t)?, 0)
    } else {
        let a = compile_query(&validate_query(&q)?)?;
        (eval_query_automaton(&a, &t), a.len())
    };
    let nodes: Vec<NodeAddress> = nodes.into_iter().collect();
    let text = nodes.iter().map(|n| format!("{n}\n")).collect();
    Ok(Outcome {
        positive: !nodes.is_empty(),
        verdict: if nodes.is_empty() { "NONE" } else { "SELECTED" }.into(),
        nodes: Some(nodes),
        states,
        text,
        ..Default::default()
    })
}

fn sat(query: &str, opts: EmptinessOptions) -> Res<Outcome> {
    let r = satisfiable(&load_query(query)?, opts)?;
    let mut o = Outcome { states: r.stats.automaton_states, nta_states: search_states(&r.stats), ..Default::default() };
    match r.verdict {
        SatVerdict::Sat(w) => {
            o.positive = true;
            o.verdict = "SAT".into();
            o.text = format!("SAT\n{}", witness_text(&w));
            o.witness = Some(w);
        }
        SatVerdict::Unsat => {
            o.verdict = "UNSAT".into();
            o.text = "UNSAT\n".into();
        }
    }
    Ok(o)
}

fn contains(q1: &str, q2: &str, opts: EmptinessOptions) -> Res<Outcome> {
    let r = contained(&load_query(q1)?, &load_query(q2)?, opts)?;
    let mut o = Outcome { states: r.stats.automaton_states, nta_states: search_states(&r.stats), ..Default::default() };
    match r.verdict {
        Containment::Contained => {
            o.positive = true;
            o.verdict = "CONTAINED".into();
            o.text = "CONTAINED\n".into();
        }
        Containment::NotContained(w) => {
            o.verdict = "NOT CONTAINED".into();
            o.text = format!("NOT CONTAINED\n{}", witness_text(&w));
            o.witness = Some(w);
        }
    }
    Ok(o)
}

fn countermodel(tree: SiblingTree, explanation: &str, verdict: &str) -> Outcome {
    let w = Witness { tree, node: NodeAddress::root() };
    Outcome {
        verdict: verdict.into(),
        text: format!("{verdict}\n{}{explanation}\n", witness_text(&w)),
        witness: Some(w),
        ..Default::default()
    }
}

fn implied(constraints: &Path, query: &str, opts: EmptinessOptions) -> Res<Outcome> {
    let gamma = parse_constraints(&read_file(constraints)?)?;
    let phi = RootConstraint::parse(&query_text(query)?)?;
    let r = implies(&gamma, &phi, opts)?;
    let mut o = match r.verdict {
        Implication::Implied => Outcome { positive: true, verdict: "IMPLIED".into(), text: "IMPLIED\n".into(), ..Default::default() },
        Implication::NotImplied { countermodel: t, explanation } => countermodel(t, &explanation, "NOT IMPLIED"),
    };
    o.states = r.stats.automaton_states;
    o.nta_states = search_states(&r.stats);
    Ok(o)
}

fn certain(query: &str, views: &Path, constraints: Option<&Path>, node: &str, opts: EmptinessOptions) -> Res<Outcome> {
    let q = load_query(query)?;
    let views = parse_views(&read_file(views)?)?;
    let gamma = match constraints {
        Some(p) => parse_constraints(&read_file(p)?)?,
        None => Vec::new(),
    };
    let c = NodeRef::parse(node)?;
    let r = certain_answer(&q, &views, &gamma, &c, opts)?;
    let mut o = match r.verdict {
        Certainty::Certain => Outcome { positive: true, verdict: "CERTAIN".into(), text: "CERTAIN\n".into(), ..Default::default() },
        Certainty::NotCertain { countermodel: t, explanation } => {
            let at = c.resolve(&t).map(|x| t.address(x)).unwrap_or_default();
            let mut o = countermodel(t, &explanation, "NOT CERTAIN");
            if let Some(w) = o.witness.as_mut() {
                w.node = at;
                o.text = format!("NOT CERTAIN\n{}{explanation}\n", witness_text(w));
            }
            o
        }
    };
    o.states = r.stats.automaton_states;
    o.nta_states = search_states(&r.stats);
    Ok(o)
}

fn compile(query: &str) -> Res<Outcome> {
    let a = compile_query(&validate_query(&load_query(query)?)?)?;
    Ok(Outcome {
        positive: true,
        verdict: "COMPILED".into(),
        states: a.len(),
        text: a.dump(),
        dot: Some(a.dot()),
        ..Default::default()
    })
}

fn roundtrip(query: &str, tree: Option<&Path>, opts: EmptinessOptions) -> Res<Outcome> {
    let q = load_query(query)?;
    let a = compile_query(&validate_query(&q)?)?;
    let n = twata_to_nsta(&a, opts)?;
    let back = nsta_to_twata(&n)?;
    let trees: Vec<SiblingTree> = match tree {
        Some(p) => vec![load_tree(p)?],
        None => {
            let props: Vec<String> = q.props().into_iter().collect();
            let shape = TreeShape { max_nodes: 8, props, density: 0.4 };
            (0..20).map(|seed| random_tree(seed, &shape)).collect()
        }
    };
    let mut text = String::new();
    let _ = writeln!(text, "automaton states: {}", a.len());
    let _ = writeln!(text, "nsta states: {} ({} transitions)", n.len(), n.transition_count());
    let _ = writeln!(text, "converted automaton states: {} = 1 + 4*{} + {}", back.len(), n.len(), n.letters.len());
    let mut mismatch = None;
    for t in &trees {
        let b = encode_binary(t);
        let want = selected_nodes(&a, &b);
        if nsta_selected_nodes(&n, &b) != want || selected_nodes(&back, &b) != want {
            mismatch = Some(t.clone());
            break;
        }
    }
    let positive = mismatch.is_none() && back.len() == 1 + 4 * n.len() + n.letters.len();
    let verdict = if positive { "PRESERVED" } else { "MISMATCH" };
    let _ = writeln!(text, "trees compared: {}", trees.len());
    if let Some(t) = &mismatch {
        let _ = writeln!(text, "differs on: {}", render_tree(t));
    }
    let _ = writeln!(text, "{verdict}");
    Ok(Outcome {
        positive,
        verdict: verdict.into(),
        witness: mismatch.map(|tree| Witness { tree, node: NodeAddress::root() }),
        states: a.len(),
        nta_states: n.len(),
        text,
        ..Default::default()
    })
}

fn bench(query: &str, sizes: &[usize], label: &[String], reps: usize) -> Res<Outcome> {
    let q = validate_query(&load_query(query)?)?;
    let label: Label = label.iter().filter(|s| !s.is_empty()).cloned().collect();
    let samples = chain_timings(&q, &label, sizes, reps)?;
    let mut text = String::new();
    for s in &samples {
        let _ = writeln!(text, "nodes {:>8}  selected {:>8}  {:>10.3} ms", s.nodes, s.selected, s.millis);
    }
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.nodes as f64, s.millis)).collect();
    let fit = linear_fit(&points);
    let exp = growth_exponent(&samples);
    let linear = fit.is_some_and(|f| f.r2 >= 0.95) && exp.is_none_or(|e| e <= 1.25);
    if let Some(f) = fit {
        let _ = writeln!(text, "fit: {:.6} ms/node, r2 {:.4}", f.slope, f.r2);
    }
    if let Some(e) = exp {
        let _ = writeln!(text, "growth exponent: {e:.3}");
    }
    let verdict = if linear { "LINEAR" } else { "SUPERLINEAR" };
    let _ = writeln!(text, "{verdict}");
    Ok(Outcome {
        positive: linear,
        verdict: verdict.into(),
        states: compile_query(&q)?.len(),
        text,
        ..Default::default()
    })
}

fn json_of(o: &Outcome, millis: u128) -> Value {
    let mut m = Map::new();
    m.insert("verdict".into(), json!(o.verdict));
    if let Some(nodes) = &o.nodes {
        m.insert("nodes".into(), json!(nodes.iter().map(|n| n.to_string()).collect::<Vec<_>>()));
    }
    if let Some(w) = &o.witness {
        m.insert("witness".into(), json!(render_tree(&w.tree)));
        m.insert("witness_node".into(), json!(w.node.to_string()));
    }
    m.insert("stats".into(), json!({ "states": o.states, "nta_states": o.nta_states, "millis": millis }));
    Value::Object(m)
}

fn dispatch(cmd: Command) -> Res<(Outcome, Common)> {
    let opts = |c: &Common| EmptinessOptions { max_states: c.max_states };
    Ok(match cmd {
        Command::Eval { tree, query, direct, common } => (eval(&tree, &query.query, direct)?, common),
        Command::Sat { query, common } => (sat(&query.query, opts(&common))?, common),
        Command::Contains { q1, q2, common } => (contains(&q1, &q2, opts(&common))?, common),
        Command::Implies { constraints, query, common } => (implied(&constraints, &query.query, opts(&common))?, common),
        Command::Certain { query, views, constraints, node, common } => {
            (certain(&query.query, &views, constraints.as_deref(), &node, opts(&common))?, common)
        }
        Command::Compile { query, common } => (compile(&query.query)?, common),
        Command::NstaRoundtrip { query, tree, common } => (roundtrip(&query.query, tree.as_deref(), opts(&common))?, common),
        Command::Bench { query, sizes, label, reps, common } => (bench(&query.query, &sizes, &label, reps)?, common),
    })
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run_command<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let start = Instant::now();
    let (o, common) = match dispatch(cli.command) {
        Ok(r) => r,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            return 2;
        }
    };
    let millis = if common.timing { start.elapsed().as_millis() } else { 0 };
    let written = match common.format {
        Format::Text => out.write_all(o.text.as_bytes()),
        Format::Json => writeln!(out, "{}", json_of(&o, millis)),
        Format::Dot => match &o.dot {
            Some(d) => out.write_all(d.as_bytes()),
            None => {
                let _ = writeln!(err, "error: --format dot is only available for `compile`");
                return 2;
            }
        },
    };
    if written.is_err() {
        return 2;
    }
    if o.positive {
        0
    } else {
        1
    }
}
