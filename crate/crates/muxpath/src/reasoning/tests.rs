use super::*;
use crate::query::parse_query;
use crate::random::{for_each_tree, random_query, random_tree, QueryShape, TreeShape};
use proptest::prelude::*;

fn q(src: &str) -> MuXPathQuery {
    parse_query(src).unwrap()
}

fn c(src: &str) -> RootConstraint {
    RootConstraint::parse(src).unwrap()
}

fn opts() -> EmptinessOptions {
    EmptinessOptions::default()
}

fn props(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

const RED_BLUE: &str = "$X1 : gfp { $X0 = (red -> [child]blue) & (blue -> <child>red) & [child]$X0 } lfp { $X1 = red & $X0 }";

#[test]
fn sat_examples() {
    assert_eq!(satisfiable(&q("$X : lfp { $X = red & !red }"), opts()).unwrap().verdict, SatVerdict::Unsat);
    let SatVerdict::Sat(w) = satisfiable(&q("$X : lfp { $X = red }"), opts()).unwrap().verdict else {
        panic!("satisfiable")
    };
    let x = w.tree.node_at(&w.node).unwrap();
    assert!(w.tree.label(x).contains("red"));
    let rb = q(RED_BLUE);
    let SatVerdict::Sat(w) = satisfiable(&rb, opts()).unwrap().verdict else { panic!("satisfiable") };
    assert!(eval_query_direct(&rb, &w.tree).unwrap().contains(&w.node));
}

#[test]
fn sat_needs_a_deep_node() {
    let src = "$X : lfp { $X = a & <fchild>(b & <right>(c & <fchild>d)) }";
    let SatVerdict::Sat(w) = satisfiable(&q(src), opts()).unwrap().verdict else { panic!("satisfiable") };
    assert!(w.tree.len() >= 4);
    let up = "$X : lfp { $X = d & <fchild^->(c & <right^->b) }";
    assert!(matches!(satisfiable(&q(up), opts()).unwrap().verdict, SatVerdict::Sat(_)));
    let orphan = "$X : lfp { $X = <fchild^->true & [fchild^-]false }";
    assert_eq!(satisfiable(&q(orphan), opts()).unwrap().verdict, SatVerdict::Unsat);
}

#[test]
fn containment_examples() {
    let rb = q("$X : lfp { $X = red & blue }");
    let r = q("$Y : lfp { $Y = red }");
    assert_eq!(contained(&rb, &r, opts()).unwrap().verdict, Containment::Contained);
    let b = q("$Y : lfp { $Y = blue }");
    let Containment::NotContained(w) = contained(&r, &b, opts()).unwrap().verdict else { panic!("not contained") };
    let x = w.tree.node_at(&w.node).unwrap();
    assert!(w.tree.label(x).contains("red") && !w.tree.label(x).contains("blue"));
}

#[test]
fn containment_with_fixpoints() {
    let desc = q("$X : lfp { $X = red | <child>$X }");
    let child = q("$Y : lfp { $Y = <child>red }");
    assert_eq!(contained(&child, &desc, opts()).unwrap().verdict, Containment::Contained);
    assert!(matches!(contained(&desc, &child, opts()).unwrap().verdict, Containment::NotContained(_)));
    let all = q("$Z : gfp { $Z = !(red & blue) & [child]$Z }");
    let none = q("$W : lfp { $W = (red & blue) | <child>$W }");
    let diff = q("$V : lfp { $V = !$W } lfp { $W = (red & blue) | <child>$W }");
    assert_eq!(contained(&all, &diff, opts()).unwrap().verdict, Containment::Contained);
    assert_eq!(contained(&diff, &all, opts()).unwrap().verdict, Containment::Contained);
    assert!(matches!(contained(&all, &none, opts()).unwrap().verdict, Containment::NotContained(_)));
}

#[test]
fn difference_renames_apart() {
    let a = q("$X : lfp { $X = red }");
    let d = difference_query(&a, &a);
    let vars: Vec<&str> = d.defined_vars().collect();
    assert_eq!(vars, vec!["X#1", "X#2", "X#0"]);
    assert!(validate_query(&d).is_ok());
}

#[test]
fn empty_constraint_set_selects_the_root() {
    let root_only = constraints_to_query(&[]);
    for_each_tree(4, &props(&["a"]), |t| {
        let sel = eval_query_direct(&root_only, t).unwrap();
        assert_eq!(sel.into_iter().collect::<Vec<_>>(), vec![NodeAddress::root()]);
        true
    });
}

#[test]
fn query_as_constraint() {
    let red = q("$X : lfp { $X = red }");
    let rc = query_to_constraint(&red);
    for_each_tree(4, &props(&["red"]), |t| {
        let has_red = (0..t.len()).any(|x| t.label(x).contains("red"));
        assert_eq!(rc.holds_on(t).unwrap(), has_red);
        true
    });
    let unsat = query_to_constraint(&q("$X : lfp { $X = red & !red }"));
    assert_eq!(constraints_satisfiable(&[unsat], opts()).unwrap().verdict, None);
}

#[test]
fn implication_examples() {
    let phi = c("<fchild>red");
    assert_eq!(implies(std::slice::from_ref(&phi), &phi, opts()).unwrap().verdict, Implication::Implied);
    let has_red = query_to_constraint(&q("$X : lfp { $X = red }"));
    let Implication::NotImplied { countermodel, .. } = implies(&[], &has_red, opts()).unwrap().verdict else {
        panic!("not implied")
    };
    assert!((0..countermodel.len()).all(|x| !countermodel.label(x).contains("red")));
    let n = nominal_constraint("a").unwrap();
    let some_a = c("<u>a");
    assert_eq!(implies(&[n], &some_a, opts()).unwrap().verdict, Implication::Implied);
}

#[test]
fn nominal_forces_one_node() {
    let n = nominal_constraint("a").unwrap();
    let tree = constraints_satisfiable(std::slice::from_ref(&n), opts()).unwrap().verdict.expect("satisfiable");
    assert_eq!((0..tree.len()).filter(|&x| tree.label(x).contains("a")).count(), 1);
    let two: SiblingTree = "(r (a) (a))".parse().unwrap();
    assert!(!n.holds_on(&two).unwrap());
    let zero: SiblingTree = "(r (b))".parse().unwrap();
    assert!(!n.holds_on(&zero).unwrap());
    let nested: SiblingTree = "(a (r (a)))".parse().unwrap();
    assert!(!n.holds_on(&nested).unwrap());
    let one: SiblingTree = "(r (b (a)) (c))".parse().unwrap();
    assert!(n.holds_on(&one).unwrap());
}

#[test]
fn dtd_rule_witness() {
    let rule = parse_dtd_rule("a -> b, (c* | d), e").unwrap();
    let dtd = dtd_rule_constraint(&rule);
    let ok: SiblingTree = "(a (b) (e))".parse().unwrap();
    assert!(dtd.holds_on(&ok).unwrap());
    let ok2: SiblingTree = "(a (b) (c) (c) (e))".parse().unwrap();
    assert!(dtd.holds_on(&ok2).unwrap());
    let bad: SiblingTree = "(a (b) (c) (d) (e))".parse().unwrap();
    assert!(!dtd.holds_on(&bad).unwrap());
    let bad_deep: SiblingTree = "(r (a (e)))".parse().unwrap();
    assert!(!dtd.holds_on(&bad_deep).unwrap());

    let root_a = c("a");
    let tree = constraints_satisfiable(&[dtd.clone(), root_a.clone()], opts()).unwrap().verdict.expect("satisfiable");
    let kids = tree.children(tree.root());
    assert!(kids.len() >= 2);
    assert!(tree.label(kids[0]).contains("b"));
    assert!(tree.label(*kids.last().unwrap()).contains("e"));
    let leaf = c("[fchild]false");
    assert_eq!(constraints_satisfiable(&[dtd, root_a, leaf], opts()).unwrap().verdict, None);
}

#[test]
fn certain_answer_examples() {
    let red = q("$X : lfp { $X = red }");
    let v = ViewSpec { name: "v".into(), definition: red.clone(), extension: vec![NodeRef::Identifier("k".into())] };
    let k = NodeRef::Identifier("k".into());
    assert_eq!(certain_answer(&red, std::slice::from_ref(&v), &[], &k, opts()).unwrap().verdict, Certainty::Certain);

    match certain_answer(&red, &[], &[], &k, opts()).unwrap().verdict {
        Certainty::NotCertain { countermodel, .. } => {
            let x = k.resolve(&countermodel).unwrap();
            assert!(!countermodel.label(x).contains("red"));
        }
        Certainty::Certain => panic!("nothing forces k to be red"),
    }

    let p = NodeRef::parse("fchild/right").unwrap();
    let t = q("$X : lfp { $X = true }");
    assert_eq!(certain_answer(&t, &[], &[], &p, opts()).unwrap().verdict, Certainty::Certain);

    let v2 = ViewSpec { name: "w".into(), definition: red.clone(), extension: vec![p.clone()] };
    let parent_red = q("$Y : lfp { $Y = <right^->red }");
    let p2 = NodeRef::parse("fchild/right/right").unwrap();
    let r = certain_answer(&parent_red, std::slice::from_ref(&v2), &[], &p2, opts()).unwrap();
    assert_eq!(r.verdict, Certainty::Certain);
}

#[test]
fn node_refs() {
    assert_eq!(NodeRef::parse("/").unwrap(), NodeRef::Path(vec![]));
    assert_eq!(NodeRef::parse("fchild/right").unwrap().to_string(), "fchild/right");
    assert!(NodeRef::parse("fchild/up").is_err());
    let t: SiblingTree = "(r (a) (b k))".parse().unwrap();
    assert_eq!(NodeRef::parse("fchild/right").unwrap().resolve(&t), NodeRef::parse("k").unwrap().resolve(&t));
    assert_eq!(NodeRef::parse("right").unwrap().resolve(&t), None);
}

#[test]
fn views_and_constraints_files() {
    let text = "# views\nview v1 { def: $X : lfp { $X = red }; ext: k, fchild/right }\n\nview v2 {\n  def: $Y : gfp { $Y = [child]$Y };\n  ext: /\n}\n";
    let vs = parse_views(text).unwrap();
    assert_eq!(vs.len(), 2);
    assert_eq!(vs[0].extension.len(), 2);
    assert_eq!(vs[1].extension, vec![NodeRef::Path(vec![])]);
    assert!(parse_views("view x { def: $X : lfp { $X = a } ext: k }").is_err());
    let cs = parse_constraints("# c\n$X : lfp { $X = a }\n\n<fchild>b\n\n\n").unwrap();
    assert_eq!(cs.len(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn combined_constraints_select_only_the_root(seed in any::<u64>(), tseed in any::<u64>()) {
        let shape = QueryShape { depth: 2, ..Default::default() };
        let g = vec![RootConstraint::new(random_query(seed, &shape)), RootConstraint::new(random_query(seed ^ 7, &shape))];
        let cq = constraints_to_query(&g);
        let t = random_tree(tseed, &TreeShape::default());
        let sel = eval_query_direct(&cq, &t).unwrap();
        prop_assert!(sel.iter().all(|a| a.is_root()));
        let expect = g.iter().all(|c| c.holds_on(&t).unwrap());
        prop_assert_eq!(sel.contains(&NodeAddress::root()), expect);
    }

    #[test]
    fn self_containment(seed in any::<u64>()) {
        let shape = QueryShape { depth: 2, max_blocks: 1, ..Default::default() };
        let x = random_query(seed, &shape);
        prop_assert_eq!(contained(&x, &x, opts()).unwrap().verdict, Containment::Contained);
    }

    #[test]
    fn unsat_has_no_small_model(seed in any::<u64>(), two in any::<bool>()) {
        let ps = if two { props(&["a", "b"]) } else { props(&["a"]) };
        let shape = QueryShape { depth: 3, props: ps.clone(), ..Default::default() };
        let x = random_query(seed, &shape);
        if satisfiable(&x, opts()).unwrap().verdict == SatVerdict::Unsat {
            for_each_tree(if two { 4 } else { 5 }, &ps, |t| {
                assert!(eval_query_direct(&x, t).unwrap().is_empty());
                true
            });
        }
    }
}
