//! Node-selecting top-down tree automata and translations to and from
//! 2WATAs.
//!
//! NSTA runs are defined on full binary trees: every node of the input gets
//! two children, missing ones filled with leaves labeled [`BOTTOM`].

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::emptiness::{Child, EmptinessError, EmptinessOptions, Engine};
use crate::tree::{BinaryTree, Label, NodeAddress, HFC, HRS, IFC, IRS};
use crate::twata::{Letter, Pbf, StateId, Twata};

/// Label of padding leaves.
pub const BOTTOM: &str = "⊥";

/// Full letters are enumerated, so the prop count is kept small.
pub const MAX_NSTA_PROPS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NstaError {
    #[error(transparent)]
    Search(#[from] EmptinessError),
    #[error("{0} props give too many letters (at most {MAX_NSTA_PROPS})")]
    TooManyProps(usize),
    #[error("NSTA props must start with the four structural flags")]
    MissingFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NstLetter {
    Bottom,
    Real(Letter),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NstAutomaton {
    pub props: Vec<String>,
    pub letters: Vec<NstLetter>,
    pub states: Vec<String>,
    pub initial: BTreeSet<usize>,
    pub delta: BTreeMap<(usize, NstLetter), BTreeSet<(usize, usize)>>,
    pub accepting: BTreeSet<usize>,
    pub selecting: BTreeSet<usize>,
}

impl NstAutomaton {
    /// Automaton over the given props with every full letter plus bottom,
    /// and no states.
    pub fn empty(props: Vec<String>) -> Result<Self, NstaError> {
        if props.len() > MAX_NSTA_PROPS {
            return Err(NstaError::TooManyProps(props.len()));
        }
        let mut letters = vec![NstLetter::Bottom];
        letters.extend((0..1u64 << props.len()).map(NstLetter::Real));
        Ok(NstAutomaton {
            props,
            letters,
            states: Vec::new(),
            initial: BTreeSet::new(),
            delta: BTreeMap::new(),
            accepting: BTreeSet::new(),
            selecting: BTreeSet::new(),
        })
    }

    pub fn add_state(&mut self, name: impl Into<String>) -> usize {
        self.states.push(name.into());
        self.states.len() - 1
    }

    pub fn add_transition(&mut self, s: usize, a: NstLetter, pair: (usize, usize)) {
        self.delta.entry((s, a)).or_default().insert(pair);
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn transition_count(&self) -> usize {
        self.delta.values().map(BTreeSet::len).sum()
    }

    pub fn letter(&self, label: &Label) -> NstLetter {
        if label.contains(BOTTOM) {
            return NstLetter::Bottom;
        }
        let mut l = 0;
        for (i, p) in self.props.iter().enumerate() {
            if label.contains(p) {
                l |= 1 << i;
            }
        }
        NstLetter::Real(l)
    }

    fn pairs(&self, s: usize, a: NstLetter) -> impl Iterator<Item = &(usize, usize)> {
        self.delta.get(&(s, a)).into_iter().flatten()
    }

    /// Whether `s` may label a leaf carrying `a`.
    pub fn leaf_ok(&self, s: usize, a: NstLetter) -> bool {
        self.pairs(s, a).any(|(x, y)| self.accepting.contains(x) && self.accepting.contains(y))
    }

    fn letter_text(&self, a: NstLetter) -> String {
        match a {
            NstLetter::Bottom => BOTTOM.to_string(),
            NstLetter::Real(m) => {
                let ps: Vec<&str> =
                    self.props.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| p.as_str()).collect();
                format!("{{{}}}", ps.join(" "))
            }
        }
    }

    pub fn dump(&self) -> String {
        let set = |s: &BTreeSet<usize>| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        out.push_str(&format!("# props: {}\n", self.props.join(" ")));
        out.push_str(&format!("# initial: {}\n", set(&self.initial)));
        out.push_str(&format!("# accepting: {}\n", set(&self.accepting)));
        out.push_str(&format!("# selecting: {}\n", set(&self.selecting)));
        for (i, name) in self.states.iter().enumerate() {
            out.push_str(&format!("# {i}: {name}\n"));
        }
        for ((s, a), pairs) in &self.delta {
            let ps: Vec<String> = pairs.iter().map(|(x, y)| format!("({x}, {y})")).collect();
            out.push_str(&format!("state {s} {}: {}\n", self.letter_text(*a), ps.join(" ")));
        }
        out
    }
}

impl fmt::Display for NstAutomaton {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

fn bottom_label() -> Label {
    std::iter::once(BOTTOM.to_string()).collect()
}

/// Gives every node two children, adding [`BOTTOM`] leaves. Ids of the
/// original nodes are kept.
pub fn pad_full_binary(b: &BinaryTree) -> BinaryTree {
    let mut out = b.clone();
    for x in 0..b.len() {
        for d in [1u8, 2] {
            if b.child(x, d).is_none() {
                out.add_child(x, d, bottom_label());
            }
        }
    }
    out
}

/// Drops the [`BOTTOM`] nodes (and anything below them).
pub fn unpad(b: &BinaryTree) -> BinaryTree {
    let mut out = BinaryTree::new(b.label(b.root()).clone());
    let mut stack = vec![(b.root(), out.root())];
    while let Some((x, y)) = stack.pop() {
        for d in [1u8, 2] {
            if let Some(c) = b.child(x, d) {
                if !b.label(c).contains(BOTTOM) {
                    let nc = out.add_child(y, d, b.label(c).clone());
                    stack.push((c, nc));
                }
            }
        }
    }
    out
}

/// Selected nodes of the unpadded tree `b`: a node is selected when some
/// accepting run on the padded tree gives it a selecting state.
pub fn nsta_selected_nodes(n: &NstAutomaton, b: &BinaryTree) -> BTreeSet<NodeAddress> {
    let p = pad_full_binary(b);
    let k = n.len();
    let order = p.preorder();
    let mut accept: Vec<Vec<bool>> = vec![vec![false; k]; p.len()];
    for &x in order.iter().rev() {
        let a = n.letter(p.label(x));
        match (p.child(x, 1), p.child(x, 2)) {
            (Some(c1), Some(c2)) => {
                for s in 0..k {
                    accept[x][s] = n.pairs(s, a).any(|&(t1, t2)| accept[c1][t1] && accept[c2][t2]);
                }
            }
            _ => {
                for s in 0..k {
                    accept[x][s] = n.leaf_ok(s, a);
                }
            }
        }
    }
    let mut reach: Vec<Vec<bool>> = vec![vec![false; k]; p.len()];
    for &s in &n.initial {
        reach[p.root()][s] = accept[p.root()][s];
    }
    for &x in &order {
        let (Some(c1), Some(c2)) = (p.child(x, 1), p.child(x, 2)) else { continue };
        let a = n.letter(p.label(x));
        for s in 0..k {
            if !reach[x][s] {
                continue;
            }
            for &(t1, t2) in n.pairs(s, a) {
                if accept[c1][t1] && accept[c2][t2] {
                    reach[c1][t1] = true;
                    reach[c2][t2] = true;
                }
            }
        }
    }
    (0..b.len())
        .filter(|&x| n.selecting.iter().any(|&s| reach[x][s]))
        .map(|x| b.address(x))
        .collect()
}

/// An NSTA selecting the same nodes as `a`. Its states are the interfaces
/// found by an exhaustive run of the emptiness search (one per way a
/// subtree can answer its parent), plus a bottom state and an accepting
/// state.
pub fn twata_to_nsta(a: &Twata, opts: EmptinessOptions) -> Result<NstAutomaton, NstaError> {
    let mut n = NstAutomaton::empty(a.props.clone())?;
    let mut e = Engine::new(a, opts, true);
    e.run()?;
    let root_key = e.root_key();
    for (i, f) in e.interfaces.iter().enumerate() {
        let up: Vec<String> = f.up.ones().map(|s| s.to_string()).collect();
        n.add_state(format!("i{i} key{} up{{{}}}", f.key, up.join(",")));
        if f.selecting {
            n.selecting.insert(i);
        }
        if f.key == root_key && f.up.is_clear() {
            n.initial.insert(i);
        }
    }
    let bot = n.add_state("bot");
    let acc = n.add_state("accept");
    n.accepting.insert(acc);
    n.add_transition(bot, NstLetter::Bottom, (acc, acc));
    let free = (1u64 << a.props.len()) - 1;
    for t in &e.transitions {
        let child = |c: Child| match c {
            Child::Absent => bot,
            Child::Node(i) => i,
        };
        let pair = (child(t.children[0]), child(t.children[1]));
        let open = free & !t.pos & !t.neg;
        let mut sub = open;
        loop {
            n.add_transition(t.from, NstLetter::Real(t.pos | sub), pair);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & open;
        }
    }
    Ok(n)
}

/// A 2WATA selecting the same nodes as `n` on flag-labeled trees, with
/// `1 + 4·|S| + |letters|` states and no accepting states.
pub fn nsta_to_twata(n: &NstAutomaton) -> Result<Twata, NstaError> {
    if n.props.len() < 4 || n.props[..4].iter().zip([IFC, IRS, HFC, HRS]).any(|(p, f)| p != f) {
        return Err(NstaError::MissingFlags);
    }
    let k = n.len();
    let (ifc, irs, hfc, hrs) = (0, 1, 2, 3);
    let s0 = 0;
    let tagged = |s: usize, tag: usize| 1 + 4 * s + tag;
    let (u, d, l, r) = (0, 1, 2, 3);
    let letter_state: BTreeMap<NstLetter, StateId> =
        n.letters.iter().enumerate().map(|(i, a)| (*a, 1 + 4 * k + i)).collect();
    let total = 1 + 4 * k + n.letters.len();

    let mut states = vec![String::new(); total];
    let mut delta = vec![Pbf::False; total];
    states[s0] = "s0".into();
    delta[s0] = Pbf::or(
        n.selecting
            .iter()
            .map(|&s| Pbf::and(vec![Pbf::Move(0, tagged(s, d)), Pbf::Move(0, tagged(s, u))]))
            .collect(),
    );
    let leaf = |t: usize| if n.leaf_ok(t, NstLetter::Bottom) { Pbf::True } else { Pbf::False };
    let down_to = |t: usize, dir: i8, flag: usize| {
        Pbf::or(vec![
            Pbf::and(vec![Pbf::Label(flag, true), Pbf::Move(dir, tagged(t, d))]),
            Pbf::and(vec![Pbf::Label(flag, false), leaf(t)]),
        ])
    };
    for s in 0..k {
        let name = &n.states[s];
        states[tagged(s, u)] = format!("({name}, u)");
        states[tagged(s, d)] = format!("({name}, d)");
        states[tagged(s, l)] = format!("({name}, l)");
        states[tagged(s, r)] = format!("({name}, r)");

        let mut down = Vec::new();
        for &a in &n.letters {
            let NstLetter::Real(m) = a else { continue };
            let alts: Vec<Pbf> = n
                .pairs(s, a)
                .map(|&(t1, t2)| {
                    let c1 = if m >> hfc & 1 == 1 { Pbf::Move(1, tagged(t1, d)) } else { leaf(t1) };
                    let c2 = if m >> hrs & 1 == 1 { Pbf::Move(2, tagged(t2, d)) } else { leaf(t2) };
                    Pbf::and(vec![c1, c2])
                })
                .collect();
            if !alts.is_empty() {
                down.push(Pbf::and(vec![Pbf::Move(0, letter_state[&a]), Pbf::or(alts)]));
            }
        }
        delta[tagged(s, d)] = Pbf::or(down);

        let mut from_left = Vec::new();
        let mut from_right = Vec::new();
        for ((t, a), pairs) in &n.delta {
            if *a == NstLetter::Bottom {
                continue;
            }
            for &(t1, t2) in pairs {
                let up = |sib: usize, tag: usize| {
                    Pbf::and(vec![
                        Pbf::Move(-1, tagged(*t, u)),
                        Pbf::Move(-1, letter_state[a]),
                        Pbf::Move(-1, tagged(sib, tag)),
                    ])
                };
                if t1 == s {
                    from_left.push(up(t2, r));
                }
                if t2 == s {
                    from_right.push(up(t1, l));
                }
            }
        }
        let at_root = if n.initial.contains(&s) { Pbf::True } else { Pbf::False };
        delta[tagged(s, u)] = Pbf::or(vec![
            Pbf::and(vec![Pbf::Label(ifc, false), Pbf::Label(irs, false), at_root]),
            Pbf::and(vec![Pbf::Label(ifc, true), Pbf::or(from_left)]),
            Pbf::and(vec![Pbf::Label(irs, true), Pbf::or(from_right)]),
        ]);
        delta[tagged(s, l)] = down_to(s, 1, hfc);
        delta[tagged(s, r)] = down_to(s, 2, hrs);
    }
    for (&a, &q) in &letter_state {
        states[q] = format!("letter {}", n.letter_text(a));
        delta[q] = match a {
            NstLetter::Bottom => Pbf::False,
            NstLetter::Real(m) => Pbf::and((0..n.props.len()).map(|p| Pbf::Label(p, m >> p & 1 == 1)).collect()),
        };
    }
    let mut lower: Vec<StateId> = letter_state.values().copied().collect();
    let mut upper = Vec::new();
    for s in 0..k {
        lower.extend([tagged(s, d), tagged(s, l), tagged(s, r)]);
        upper.push(tagged(s, u));
    }
    lower.sort_unstable();
    Ok(Twata {
        props: n.props.clone(),
        states,
        initial: s0,
        delta,
        alpha: vec![false; total],
        partition: vec![lower, upper, vec![s0]],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acceptance::selected_nodes;
    use crate::query::{parse_query, validate_query};
    use crate::random::{random_query, random_tree, QueryShape, TreeShape};
    use crate::tree::encode_binary;
    use crate::twata::compile_query;
    use proptest::prelude::*;

    fn props(extra: &[&str]) -> Vec<String> {
        Twata::prop_list(extra.iter().map(|s| s.to_string())).unwrap()
    }

    /// One state that accepts everything; selects the nodes carrying `p`.
    fn select_prop(p: &str) -> NstAutomaton {
        let mut n = NstAutomaton::empty(props(&[p])).unwrap();
        let q = n.add_state("q");
        let sel = n.add_state("sel");
        let fin = n.add_state("fin");
        n.accepting.insert(fin);
        n.initial.extend([q, sel]);
        n.selecting.insert(sel);
        let bit = 1 << 4;
        for a in n.letters.clone() {
            match a {
                NstLetter::Bottom => {
                    n.add_transition(q, a, (fin, fin));
                }
                NstLetter::Real(m) => {
                    for x in [q, sel] {
                        if x == sel && m & bit == 0 {
                            continue;
                        }
                        for y in [q, sel] {
                            for z in [q, sel] {
                                n.add_transition(x, a, (y, z));
                            }
                        }
                    }
                }
            }
        }
        n
    }

    /// Every labeling of the padded tree by states, checked against the run
    /// conditions.
    fn brute_force(n: &NstAutomaton, b: &BinaryTree) -> BTreeSet<NodeAddress> {
        let p = pad_full_binary(b);
        let k = n.len();
        let m = p.len();
        let mut out = BTreeSet::new();
        let mut run = vec![0usize; m];
        'outer: loop {
            let ok = n.initial.contains(&run[p.root()])
                && (0..m).all(|x| {
                    let a = n.letter(p.label(x));
                    match (p.child(x, 1), p.child(x, 2)) {
                        (Some(c1), Some(c2)) => n.pairs(run[x], a).any(|&pr| pr == (run[c1], run[c2])),
                        _ => n.leaf_ok(run[x], a),
                    }
                });
            if ok {
                for x in 0..b.len() {
                    if n.selecting.contains(&run[x]) {
                        out.insert(b.address(x));
                    }
                }
            }
            for slot in run.iter_mut() {
                *slot += 1;
                if *slot < k {
                    continue 'outer;
                }
                *slot = 0;
            }
            break;
        }
        out
    }

    fn tree(src: &str) -> BinaryTree {
        encode_binary(&src.parse().unwrap())
    }

    #[test]
    fn padding() {
        let b = tree("(a)");
        let p = pad_full_binary(&b);
        assert_eq!(p.len(), 3);
        assert_eq!(unpad(&p), b);
        let b = tree("(a (b) (c (d)))");
        let p = pad_full_binary(&b);
        assert_eq!(p.len() - b.len(), b.len() + 1);
        assert_eq!(unpad(&p), b);
    }

    #[test]
    fn reference_evaluator_matches_run_enumeration() {
        let n = select_prop("red");
        for src in ["(red)", "(a (red) (b))", "(red (red (a)) (b))", "(a (b (c (red))))"] {
            let b = tree(src);
            assert_eq!(nsta_selected_nodes(&n, &b), brute_force(&n, &b), "{src}");
            let want: BTreeSet<NodeAddress> =
                (0..b.len()).filter(|&x| b.label(x).contains("red")).map(|x| b.address(x)).collect();
            assert_eq!(nsta_selected_nodes(&n, &b), want);
        }
        let mut none = n.clone();
        none.selecting.clear();
        assert!(nsta_selected_nodes(&none, &tree("(red)")).is_empty());
        let mut no_init = n.clone();
        no_init.initial.clear();
        assert!(nsta_selected_nodes(&no_init, &tree("(red)")).is_empty());
    }

    #[test]
    fn select_red_as_twata() {
        let n = select_prop("red");
        let a = nsta_to_twata(&n).unwrap();
        assert_eq!(a.len(), 1 + 4 * n.len() + n.letters.len());
        a.validate_weakness().unwrap();
        assert!(a.alpha.iter().all(|x| !x));
        for src in ["(red)", "(a (red) (b red))", "(red (red (a)) (b))"] {
            let b = tree(src);
            assert_eq!(selected_nodes(&a, &b), nsta_selected_nodes(&n, &b), "{src}");
        }
    }

    #[test]
    fn twata_selecting_nothing() {
        let q = validate_query(&parse_query("$X : lfp { $X = a & !a }").unwrap()).unwrap();
        let a = compile_query(&q).unwrap();
        let n = twata_to_nsta(&a, EmptinessOptions::default()).unwrap();
        assert!(nsta_selected_nodes(&n, &tree("(a (a) (b))")).is_empty());
        let all = validate_query(&parse_query("$X : lfp { $X = true }").unwrap()).unwrap();
        let n = twata_to_nsta(&compile_query(&all).unwrap(), EmptinessOptions::default()).unwrap();
        let b = tree("(a (a) (b (c)))");
        assert_eq!(nsta_selected_nodes(&n, &b).len(), b.len());
    }

    #[test]
    fn two_way_query_round_trip() {
        let q = validate_query(&parse_query("$X : lfp { $X = a & <right^->(b | $X) }").unwrap()).unwrap();
        let a = compile_query(&q).unwrap();
        let n = twata_to_nsta(&a, EmptinessOptions::default()).unwrap();
        let back = nsta_to_twata(&n).unwrap();
        for src in ["(r (b) (a) (a) (c) (a))", "(a (a) (a))", "(r (a) (b (b) (a)))"] {
            let b = tree(src);
            let want = selected_nodes(&a, &b);
            assert_eq!(nsta_selected_nodes(&n, &b), want, "{src}");
            assert_eq!(selected_nodes(&back, &b), want, "{src}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn selection_preserved(seed in any::<u64>()) {
            let shape = QueryShape { max_blocks: 2, max_equations: 2, depth: 2, props: vec!["a".into()], ..Default::default() };
            let q = validate_query(&random_query(seed, &shape)).unwrap();
            let a = compile_query(&q).unwrap();
            let n = twata_to_nsta(&a, EmptinessOptions { max_states: 200_000 }).unwrap();
            let back = nsta_to_twata(&n).unwrap();
            prop_assert_eq!(back.len(), 1 + 4 * n.len() + n.letters.len());
            for i in 0..3u64 {
                let t = random_tree(seed ^ i, &TreeShape { max_nodes: 6, props: vec!["a".into()], density: 0.5 });
                let b = encode_binary(&t);
                let want = selected_nodes(&a, &b);
                prop_assert_eq!(&nsta_selected_nodes(&n, &b), &want);
                prop_assert_eq!(&selected_nodes(&back, &b), &want);
            }
        }
    }
}
