//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero when
//! any criterion fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use muxpath::acceptance::{eval_query_automaton, selected_node_ids, selected_nodes};
use muxpath::bench::{chain_timings, growth_exponent, linear_fit};
use muxpath::direct::{eval_expr_direct, eval_query_direct, eval_query_ids, Valuation};
use muxpath::emptiness::EmptinessOptions;
use muxpath::nsta::{nsta_selected_nodes, nsta_to_twata, twata_to_nsta};
use muxpath::query::{closure, validate_query, MuXPathQuery};
use muxpath::random::{for_each_tree, random_node_expr, random_query, random_tree, ExprShape, QueryShape, TreeShape};
use muxpath::reasoning::{
    certain_answer, constraints_satisfiable, contained, dtd_rule_constraint, nominal_constraint, parse_dtd_rule,
    satisfiable, Certainty, Containment, NodeRef, RootConstraint, SatVerdict, ViewSpec,
};
use muxpath::rxpath::lower_paths;
use muxpath::tree::{encode_binary, NodeAddress, SiblingTree};
use muxpath::twata::{compile_query, twata_to_query};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn props(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// A query given as `$X : ...` or as a node expression.
fn q(src: &str) -> MuXPathQuery {
    let c = RootConstraint::parse(src).unwrap_or_else(|e| panic!("{src}: {e}"));
    validate_query(&c.query).unwrap_or_else(|e| panic!("{src}: {e}"));
    c.query
}

fn opts() -> EmptinessOptions {
    EmptinessOptions::default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn selects(query: &MuXPathQuery, t: &SiblingTree, at: &NodeAddress) -> bool {
    eval_query_direct(query, t).unwrap().contains(at)
}

fn relevant_props(qs: &[&MuXPathQuery]) -> Vec<String> {
    let mut all = BTreeSet::new();
    for q in qs {
        all.extend(q.props());
    }
    all.into_iter().filter(|p| !muxpath::tree::is_reserved(p)).collect()
}

const RED_ALL_PATHS: &str = "$X : lfp { $X = red | [child]$X }";
const NO_RED_BLUE_BELOW: &str = "$X : gfp { $X = (red -> !blue) & [child]$X }";
const RED_BLUE_CHILDREN: &str =
    "$X1 : gfp { $X0 = (red -> [child]blue) & (blue -> <child>red) & [child]$X0 } lfp { $X1 = red & $X0 }";
const RED_BLUE_REACH: &str = "$X3 : lfp { $X0 = blue | [child]$X0 } lfp { $X1 = red | <child>$X1 } \
     gfp { $X2 = (red -> $X0) & (blue -> $X1) & [child]$X2 } lfp { $X3 = red & $X2 }";

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let qshape = QueryShape {
        max_blocks: 3,
        max_equations: 6,
        depth: 4,
        props: props(&["a", "b", "c"]),
        ..Default::default()
    };
    let tshape = TreeShape { max_nodes: 12, props: props(&["a", "b", "c"]), density: 0.4 };
    let mut states = 0;
    for seed in 0..1000u64 {
        let query = random_query(seed, &qshape);
        let t = random_tree(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15), &tshape);
        let nq = validate_query(&query).map_err(|e| format!("seed {seed}: generated query invalid: {e}"))?;
        let a = compile_query(&nq).map_err(|e| e.to_string())?;
        states += a.len();
        let got = selected_node_ids(&a, &encode_binary(&t));
        let want = eval_query_ids(&query, &t).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("seed {seed}: automaton and direct evaluation differ on {t}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 120.0, || format!("took {secs:.1} s, limit 120 s"))?;
    Ok(format!("1000 pairs agree, mean automaton size {:.1}, {secs:.1} s", states as f64 / 1000.0))
}

fn rxpath_lowering() -> Outcome {
    const C: usize = 12;
    let shape = ExprShape { depth: 3, props: props(&["a", "b"]), ..Default::default() };
    let tshape = TreeShape { max_nodes: 8, props: props(&["a", "b"]), density: 0.5 };
    let mut worst: f64 = 0.0;
    for seed in 0..300u64 {
        let e = random_node_expr(seed, &shape);
        let lowered = lower_paths(&e);
        let nq = validate_query(&lowered).map_err(|err| format!("seed {seed}: lowering of {e} invalid: {err}"))?;
        let ratio = lowered.size() as f64 / e.size() as f64;
        worst = worst.max(ratio);
        ensure(lowered.size() <= C * e.size(), || format!("seed {seed}: size {} > {C} x {}", lowered.size(), e.size()))?;
        let a = compile_query(&nq).map_err(|err| err.to_string())?;
        for i in 0..3u64 {
            let t = random_tree(seed * 7 + i, &tshape);
            let want = eval_expr_direct(&e, &t, &Valuation::new());
            let got = selected_node_ids(&a, &encode_binary(&t));
            ensure(got == want, || format!("seed {seed}: {e} differs on {t}"))?;
        }
    }
    Ok(format!("300 expressions x 3 trees agree, c = {C}, largest observed ratio {worst:.2}"))
}

fn back_translation() -> Outcome {
    let shape = QueryShape { max_blocks: 3, max_equations: 3, depth: 3, props: props(&["a", "b"]), ..Default::default() };
    let tshape = TreeShape { max_nodes: 10, props: props(&["a", "b"]), density: 0.4 };
    for seed in 0..100u64 {
        let nq = validate_query(&random_query(seed + 5000, &shape)).map_err(|e| e.to_string())?;
        let a = compile_query(&nq).map_err(|e| e.to_string())?;
        let back = twata_to_query(&a);
        validate_query(&back).map_err(|e| format!("seed {seed}: back-translation invalid: {e}"))?;
        for i in 0..5u64 {
            let t = random_tree(seed * 11 + i, &tshape);
            let want = eval_query_automaton(&a, &t);
            let got = eval_query_direct(&back, &t).map_err(|e| e.to_string())?;
            ensure(got == want, || format!("seed {seed}: back-translated query differs on {t}"))?;
        }
    }
    Ok("100 automata x 5 trees agree".into())
}

fn containment_suite() -> Outcome {
    let pairs: &[(&str, &str, bool)] = &[
        (RED_BLUE_CHILDREN, "red", true),
        (RED_BLUE_REACH, "red", true),
        ("red", RED_BLUE_CHILDREN, false),
        (RED_BLUE_CHILDREN, NO_RED_BLUE_BELOW, true),
        (NO_RED_BLUE_BELOW, RED_BLUE_CHILDREN, false),
        (RED_BLUE_CHILDREN, RED_BLUE_REACH, true),
        (RED_BLUE_REACH, RED_BLUE_CHILDREN, false),
        ("red & blue", RED_ALL_PATHS, true),
        (RED_ALL_PATHS, "red", false),
        (RED_ALL_PATHS, "$X : gfp { $X = red | [child]$X }", true),
        ("$X : gfp { $X = red | [child]$X }", RED_ALL_PATHS, true),
        (NO_RED_BLUE_BELOW, "!(red & blue)", true),
        ("!(red & blue)", NO_RED_BLUE_BELOW, false),
        ("<child>red", "<child>true", true),
        ("<fchild>a", "<child>a", true),
        ("<child>a", "<fchild>a", false),
        ("<fchild/right>a", "<child>a", true),
        ("<right>true", "<child^->true", true),
        ("<child^->true", "<right>true", false),
        ("a & <child>b", "a", true),
        ("[child]a & <child>true", "<child>a", true),
        ("<child>a", "[child]a", false),
        ("$X : lfp { $X = a | <right>$X }", "<right*>a", true),
        ("<child>(a & !a)", "b", true),
    ];
    let (mut yes, mut no) = (0, 0);
    for (i, &(s1, s2, expect)) in pairs.iter().enumerate() {
        let (q1, q2) = (q(s1), q(s2));
        let r = contained(&q1, &q2, opts()).map_err(|e| format!("pair {i}: {e}"))?;
        match r.verdict {
            Containment::Contained => {
                ensure(expect, || format!("pair {i} ({s1} in {s2}) reported contained"))?;
                let ps = relevant_props(&[&q1, &q2]);
                let mut bad = None;
                for_each_tree(5, &ps, |t| {
                    let s1 = eval_query_direct(&q1, t).unwrap();
                    let s2 = eval_query_direct(&q2, t).unwrap();
                    if s1.is_subset(&s2) {
                        true
                    } else {
                        bad = Some(t.clone());
                        false
                    }
                });
                ensure(bad.is_none(), || format!("pair {i}: counterexample {} to containment", bad.unwrap()))?;
                yes += 1;
            }
            Containment::NotContained(w) => {
                ensure(!expect, || format!("pair {i} ({s1} in {s2}) reported not contained"))?;
                ensure(selects(&q1, &w.tree, &w.node) && !selects(&q2, &w.tree, &w.node), || {
                    format!("pair {i}: witness {} at {} fails membership", w.tree, w.node)
                })?;
                no += 1;
            }
        }
    }
    Ok(format!("{} pairs: {yes} contained (exhaustive to 5 nodes), {no} not contained (witnesses checked)", pairs.len()))
}

const SAT_QUERIES: &[&str] = &[
    RED_ALL_PATHS,
    NO_RED_BLUE_BELOW,
    RED_BLUE_CHILDREN,
    RED_BLUE_REACH,
    "red",
    "red & !red",
    "<child>(a & <right>b)",
    "<fchild>a & [child]!a",
    "<fchild>a & [child]b & <child>!b",
    "<child^->(a & <child^->b)",
    "$X : lfp { $X = a & <fchild>$X }",
    "$X : gfp { $X = a & <fchild>$X }",
    "$X : lfp { $X = <right>(b & <right>c) }",
    "<right*>a & [right*]!a",
    "<child><child><child>a",
    "<child>a",
    "a & <fchild>b",
    "[child]a & <child>!a",
    "$X : lfp { $X = a | <fchild>$X }",
    "<right^->a & !a",
];

fn sat_witnesses() -> Outcome {
    let mut sat = 0;
    for src in SAT_QUERIES {
        let query = q(src);
        if let SatVerdict::Sat(w) = satisfiable(&query, opts()).map_err(|e| format!("{src}: {e}"))?.verdict {
            ensure(selects(&query, &w.tree, &w.node), || format!("{src}: witness {} fails", w.tree))?;
            sat += 1;
        }
    }
    let rule = dtd_rule_constraint(&parse_dtd_rule("a -> b, (c* | d), e").map_err(|e| e.to_string())?);
    let root_a = RootConstraint::parse("a").map_err(|e| e.to_string())?;
    let r = constraints_satisfiable(&[rule.clone(), root_a.clone()], opts()).map_err(|e| e.to_string())?;
    let t = r.verdict.ok_or("DTD constraint with a root `a` reported unsatisfiable")?;
    ensure(conforms(&t), || format!("DTD witness {t} does not conform"))?;
    let leaf = RootConstraint::parse("[fchild]false").map_err(|e| e.to_string())?;
    let r = constraints_satisfiable(&[rule, root_a, leaf], opts()).map_err(|e| e.to_string())?;
    ensure(r.verdict.is_none(), || "adding `root has no first child` did not give unsat".into())?;
    Ok(format!("{sat} sat witnesses checked; DTD witness {t} conforms; contradiction is unsat"))
}

/// Every `a` node has children `b (c* | d) e`.
fn conforms(t: &SiblingTree) -> bool {
    if !t.label(t.root()).contains("a") {
        return false;
    }
    (0..t.len()).filter(|&x| t.label(x).contains("a")).all(|x| {
        let kids: Vec<&str> = t
            .children(x)
            .iter()
            .map(|&c| {
                let l = t.label(c);
                ["b", "c", "d", "e"].into_iter().find(|p| l.contains(*p)).unwrap_or("?")
            })
            .collect();
        let word: String = kids.concat();
        let n = word.len();
        n >= 2
            && word.starts_with('b')
            && word.ends_with('e')
            && (word[1..n - 1].chars().all(|ch| ch == 'c') || &word[1..n - 1] == "d")
    })
}

fn nominal() -> Outcome {
    let n = nominal_constraint("a").map_err(|e| e.to_string())?;
    let t = constraints_satisfiable(std::slice::from_ref(&n), opts()).map_err(|e| e.to_string())?.verdict.ok_or("nominal unsatisfiable")?;
    let count = (0..t.len()).filter(|&x| t.label(x).contains("a")).count();
    ensure(count == 1, || format!("witness {t} has {count} a-nodes"))?;
    let two = RootConstraint::parse("<fchild>a & <fchild/right>a").map_err(|e| e.to_string())?;
    let alone = constraints_satisfiable(std::slice::from_ref(&two), opts()).map_err(|e| e.to_string())?.verdict;
    ensure(alone.is_some(), || "two a-children alone reported unsatisfiable".into())?;
    let both = constraints_satisfiable(&[n, two], opts()).map_err(|e| e.to_string())?.verdict;
    ensure(both.is_none(), || format!("nominal allowed two a-nodes: {}", both.unwrap()))?;
    Ok(format!("witness {t} has exactly one a-node; two a-children become unsat under the nominal"))
}

struct ViewCase {
    views: Vec<(&'static str, &'static str)>,
    constraints: Vec<&'static str>,
    query: &'static str,
    node: &'static str,
    certain: bool,
}

fn view_cases() -> Vec<ViewCase> {
    let case = |views: Vec<(&'static str, &'static str)>, constraints, query, node, certain| ViewCase {
        views,
        constraints,
        query,
        node,
        certain,
    };
    vec![
        case(vec![("red", "k")], vec![], "red | blue", "k", true),
        case(vec![("red", "k")], vec![], "blue", "k", false),
        case(vec![("<child>red", "/")], vec![], "<child>true", "/", true),
        case(vec![("<child>red", "/")], vec![], "<fchild>red", "/", false),
        case(vec![("red", "fchild")], vec![], "red & <child^->true", "fchild", true),
        case(vec![("red", "fchild/right")], vec![], "red & <right^->true", "fchild/right", true),
        case(vec![("a", "k")], vec!["[u](a -> b)"], "b", "k", true),
        case(vec![("a", "k")], vec![], "b", "k", false),
        case(vec![("red", "k")], vec!["[u](red -> [child]blue)"], "[child]blue", "k", true),
        case(vec![("a", "k"), ("b", "k")], vec![], "a & b", "k", true),
    ]
}

fn view_answering() -> Outcome {
    let (mut certain, mut not) = (0, 0);
    for (i, c) in view_cases().into_iter().enumerate() {
        let views: Vec<ViewSpec> = c
            .views
            .iter()
            .enumerate()
            .map(|(j, (def, ext))| ViewSpec {
                name: format!("v{j}"),
                definition: q(def),
                extension: ext.split(',').map(|r| NodeRef::parse(r).unwrap()).collect(),
            })
            .collect();
        let gamma: Vec<RootConstraint> = c.constraints.iter().map(|s| RootConstraint::parse(s).unwrap()).collect();
        let query = q(c.query);
        let node = NodeRef::parse(c.node).map_err(|e| e.to_string())?;
        let r = certain_answer(&query, &views, &gamma, &node, opts()).map_err(|e| format!("case {i}: {e}"))?;
        let countermodel_ok = |t: &SiblingTree| -> bool {
            let ids: BTreeSet<String> = views
                .iter()
                .flat_map(|v| v.extension.iter())
                .chain(std::iter::once(&node))
                .filter_map(|r| match r {
                    NodeRef::Identifier(p) => Some(p.clone()),
                    NodeRef::Path(_) => None,
                })
                .collect();
            ids.iter().all(|p| (0..t.len()).filter(|&x| t.label(x).contains(p)).count() == 1)
                && views.iter().all(|v| v.holds_on(t).unwrap())
                && gamma.iter().all(|g| g.holds_on(t).unwrap())
                && node.resolve(t).is_some_and(|x| !selects(&query, t, &t.address(x)))
        };
        match r.verdict {
            Certainty::Certain => {
                ensure(c.certain, || format!("case {i} reported certain"))?;
                let mut all: Vec<&MuXPathQuery> = views.iter().map(|v| &v.definition).collect();
                all.push(&query);
                all.extend(gamma.iter().map(|g| &g.query));
                let mut ps = relevant_props(&all);
                if let NodeRef::Identifier(p) = &node {
                    if !ps.contains(p) {
                        ps.push(p.clone());
                    }
                }
                for v in &views {
                    for r in &v.extension {
                        if let NodeRef::Identifier(p) = r {
                            if !ps.contains(p) {
                                ps.push(p.clone());
                            }
                        }
                    }
                }
                let mut found = None;
                for_each_tree(5, &ps, |t| {
                    if countermodel_ok(t) {
                        found = Some(t.clone());
                        false
                    } else {
                        true
                    }
                });
                ensure(found.is_none(), || format!("case {i}: countermodel {} found", found.unwrap()))?;
                certain += 1;
            }
            Certainty::NotCertain { countermodel, .. } => {
                ensure(!c.certain, || format!("case {i} reported not certain"))?;
                ensure(countermodel_ok(&countermodel), || format!("case {i}: countermodel {countermodel} fails"))?;
                not += 1;
            }
        }
    }
    Ok(format!("10 cases: {certain} certain (no countermodel to 5 nodes), {not} not certain (countermodels checked)"))
}

fn nsta_round_trips() -> Outcome {
    let shape = QueryShape { max_blocks: 2, max_equations: 2, depth: 2, props: props(&["a", "b"]), ..Default::default() };
    let tshape = TreeShape { max_nodes: 8, props: props(&["a", "b"]), density: 0.5 };
    let mut queries: Vec<MuXPathQuery> = vec![
        q("$X : lfp { $X = a & <right^->(b | $X) }"),
        q("<child^->a & <child>b"),
    ];
    queries.extend((0..8u64).map(|s| random_query(s + 900, &shape)));
    let mut pairs = 0;
    let mut max_states = 0;
    for (i, query) in queries.iter().enumerate() {
        let a = compile_query(&validate_query(query).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let n = twata_to_nsta(&a, opts()).map_err(|e| format!("automaton {i}: {e}"))?;
        let back = nsta_to_twata(&n).map_err(|e| e.to_string())?;
        let expected = 1 + 4 * n.len() + n.letters.len();
        ensure(back.len() == expected, || format!("automaton {i}: {} states, formula gives {expected}", back.len()))?;
        back.validate_weakness().map_err(|e| format!("automaton {i}: {}", e.0))?;
        max_states = max_states.max(n.len());
        for j in 0..5u64 {
            let t = random_tree(i as u64 * 13 + j, &tshape);
            let b = encode_binary(&t);
            let want = selected_nodes(&a, &b);
            ensure(nsta_selected_nodes(&n, &b) == want, || format!("automaton {i}: NSTA differs on {t}"))?;
            ensure(selected_nodes(&back, &b) == want, || format!("automaton {i}: round trip differs on {t}"))?;
            pairs += 1;
        }
    }
    Ok(format!("{pairs} pairs preserved both ways, state formula exact, largest NSTA {max_states} states"))
}

fn linearity() -> Outcome {
    let query = validate_query(&q("$X : lfp { $X = red & ([child]false | <child>$X) }")).map_err(|e| e.to_string())?;
    let label = ["red".to_string()].into_iter().collect();
    let samples = chain_timings(&query, &label, &[1_000, 10_000, 100_000], 3).map_err(|e| e.to_string())?;
    for s in &samples {
        ensure(s.selected == s.nodes, || format!("chain of {} selected {}", s.nodes, s.selected))?;
    }
    let points: Vec<(f64, f64)> = samples.iter().map(|s| (s.nodes as f64, s.millis)).collect();
    let fit = linear_fit(&points).ok_or("no fit")?;
    let exp = growth_exponent(&samples).ok_or("no growth exponent")?;
    let times: Vec<String> = samples.iter().map(|s| format!("{}:{:.1}ms", s.nodes, s.millis)).collect();
    let detail = format!("{}, r2 {:.4}, growth exponent {exp:.2}", times.join(" "), fit.r2);
    ensure(fit.r2 >= 0.95, || format!("r2 below 0.95: {detail}"))?;
    ensure(exp <= 1.25, || format!("superlinear growth: {detail}"))?;
    Ok(detail)
}

fn desk_scale_sat() -> Outcome {
    let mut checked = 0;
    let mut slowest = Duration::ZERO;
    for src in SAT_QUERIES {
        let query = q(src);
        let size = closure(&validate_query(&query).map_err(|e| e.to_string())?).len();
        if size > 14 {
            continue;
        }
        let start = Instant::now();
        satisfiable(&query, opts()).map_err(|e| format!("{src}: {e}"))?;
        let took = start.elapsed();
        ensure(took < Duration::from_secs(10), || format!("{src}: {:.1} s", took.as_secs_f64()))?;
        slowest = slowest.max(took);
        checked += 1;
    }
    ensure(checked > 0, || "no curated query has at most 14 closure states".into())?;
    Ok(format!("{checked} of {} curated queries within 14 closure states, slowest {:.3} s", SAT_QUERIES.len(), slowest.as_secs_f64()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("oracle equivalence", oracle_equivalence),
        ("rxpath lowering", rxpath_lowering),
        ("back-translation", back_translation),
        ("containment suite", containment_suite),
        ("satisfiability witnesses", sat_witnesses),
        ("nominal constraint", nominal),
        ("view-based answering", view_answering),
        ("nsta round trips", nsta_round_trips),
        ("linearity", linearity),
        ("desk-scale satisfiability", desk_scale_sat),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
