//! Nonemptiness of 2WATAs over finite binary trees.
//!
//! The search builds trees bottom-up. A node is summarized for its parent by
//! an interface: the demand (states sent into it from the parent), the
//! states it sends back up, and which entries can reach which exits through
//! rejecting states only. A node is locally sound when the graph of its
//! rejecting states (0-moves plus excursions through children) is acyclic;
//! every rejecting cycle of a play is caught at its highest node.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::acceptance::accepts;
use crate::tree::BinaryTree;
use crate::twata::{Letter, Pbf, StateId, Twata};

pub const DEFAULT_MAX_STATES: usize = 2_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EmptinessError {
    #[error("state budget of {limit} exhausted before a verdict")]
    BudgetExhausted { limit: usize },
    #[error("internal error: extracted witness is rejected ({0})")]
    WitnessRejected(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EmptinessOptions {
    /// Limit on configurations plus interfaces explored.
    pub max_states: usize,
}

impl Default for EmptinessOptions {
    fn default() -> Self {
        EmptinessOptions { max_states: DEFAULT_MAX_STATES }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EmptinessStats {
    pub keys: usize,
    pub configs: usize,
    pub interfaces: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nonemptiness {
    Empty,
    /// An accepted tree; already checked with the acceptance engine.
    Witness(BinaryTree),
}

#[derive(Clone, Debug)]
pub struct EmptinessReport {
    pub result: Nonemptiness,
    pub stats: EmptinessStats,
}

/// A conjunction of label literals and moves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cube {
    pub pos: Letter,
    pub neg: Letter,
    pub moves: Vec<(i8, StateId)>,
}

impl Cube {
    fn subsumes(&self, other: &Cube) -> bool {
        self.pos & !other.pos == 0
            && self.neg & !other.neg == 0
            && self.moves.iter().all(|m| other.moves.binary_search(m).is_ok())
    }

    fn join(&self, other: &Cube) -> Option<Cube> {
        let pos = self.pos | other.pos;
        let neg = self.neg | other.neg;
        if pos & neg != 0 {
            return None;
        }
        let mut moves = self.moves.clone();
        moves.extend_from_slice(&other.moves);
        moves.sort_unstable();
        moves.dedup();
        Some(Cube { pos, neg, moves })
    }
}

fn minimize(mut cubes: Vec<Cube>) -> Vec<Cube> {
    cubes.sort_by_key(|c| (c.pos.count_ones() + c.neg.count_ones()) as usize + c.moves.len());
    let mut out: Vec<Cube> = Vec::new();
    for c in cubes {
        if !out.iter().any(|d| d.subsumes(&c)) {
            out.push(c);
        }
    }
    out
}

/// Minimal consistent disjunctive normal form of a transition formula.
pub fn cubes(f: &Pbf) -> Vec<Cube> {
    let empty = Cube { pos: 0, neg: 0, moves: Vec::new() };
    match f {
        Pbf::True => vec![empty],
        Pbf::False => vec![],
        Pbf::Label(p, true) => vec![Cube { pos: 1 << p, ..empty }],
        Pbf::Label(p, false) => vec![Cube { neg: 1 << p, ..empty }],
        Pbf::Move(d, s) => vec![Cube { moves: vec![(*d, *s)], ..empty }],
        Pbf::Or(xs) => minimize(xs.iter().flat_map(cubes).collect()),
        Pbf::And(xs) => {
            let mut acc = vec![empty];
            for x in xs {
                let right = cubes(x);
                let mut next = Vec::new();
                for a in &acc {
                    for b in &right {
                        if let Some(c) = a.join(b) {
                            next.push(c);
                        }
                    }
                }
                acc = minimize(next);
                if acc.is_empty() {
                    break;
                }
            }
            acc
        }
    }
}

/// Moves chosen at one node: `(s, d, s')` sends a copy in state `s'` in
/// direction `d` on behalf of state `s`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StrategyLabel {
    pub edges: BTreeSet<(StateId, i8, StateId)>,
}

/// Summaries of finite strategy paths at one node; the bit is 1 when the
/// path visits an accepting state after its source.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct AnnotationLabel {
    pub edges: BTreeSet<(StateId, u8, StateId)>,
}

impl AnnotationLabel {
    /// All cycles visit an accepting state.
    pub fn is_accepting(&self) -> bool {
        self.edges.iter().all(|&(s, c, t)| s != t || c == 1)
    }
}

/// Every way of satisfying the transitions of the `active` states under
/// `letter` with minimal models.
pub fn expand_strategy_labels(a: &Twata, letter: Letter, active: &BTreeSet<StateId>) -> Vec<StrategyLabel> {
    let mut labels = vec![StrategyLabel::default()];
    for &s in active {
        let models = cubes(&a.delta[s].resolve(letter));
        let mut next = Vec::new();
        for l in &labels {
            for m in &models {
                let mut l2 = l.clone();
                l2.edges.extend(m.moves.iter().map(|&(d, t)| (s, d, t)));
                next.push(l2);
            }
        }
        labels = next;
    }
    labels.sort();
    labels.dedup();
    labels
}

/// Strategy and annotation of the neighbours of a node.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neighbors<'a> {
    /// Children in directions 1 and 2.
    pub children: [Option<(&'a StrategyLabel, &'a AnnotationLabel)>; 2],
    /// The parent, with the direction leading from it to this node.
    pub parent: Option<(u8, &'a StrategyLabel, &'a AnnotationLabel)>,
}

/// Least annotation at a node that contains `current` and is closed under
/// the composition, stay, child-excursion and parent-excursion rules, given
/// the neighbours' annotations. An excursion may return immediately (empty
/// middle segment).
pub fn close_annotation(
    a: &Twata,
    r: &StrategyLabel,
    nb: &Neighbors,
    current: &AnnotationLabel,
) -> AnnotationLabel {
    let acc = |s: StateId| a.alpha[s];
    let mut edges = current.edges.clone();
    for &(s, d, t) in &r.edges {
        if d == 0 {
            edges.insert((s, acc(t) as u8, t));
        }
    }
    // segments (entry, bit, exit) inside a neighbour, including empty ones
    let segments = |ann: &AnnotationLabel, entry: StateId| -> Vec<(u8, StateId)> {
        let mut v = vec![(0u8, entry)];
        v.extend(ann.edges.iter().filter(|e| e.0 == entry).map(|e| (e.1, e.2)));
        v
    };
    for (i, child) in nb.children.iter().enumerate() {
        let Some((cr, ca)) = child else { continue };
        let dir = i as i8 + 1;
        for &(s, d, s1) in &r.edges {
            if d != dir {
                continue;
            }
            for (c, s2) in segments(ca, s1) {
                for &(u, d2, s3) in &cr.edges {
                    if u == s2 && d2 == -1 {
                        edges.insert((s, (acc(s1) || c == 1 || acc(s3)) as u8, s3));
                    }
                }
            }
        }
    }
    if let Some((dir, pr, pa)) = nb.parent {
        for &(s, d, s1) in &r.edges {
            if d != -1 {
                continue;
            }
            for (c, s2) in segments(pa, s1) {
                for &(u, d2, s3) in &pr.edges {
                    if u == s2 && d2 == dir as i8 {
                        edges.insert((s, (acc(s1) || c == 1 || acc(s3)) as u8, s3));
                    }
                }
            }
        }
    }
    // transitive closure with max bits
    loop {
        let mut added = Vec::new();
        for &(s, c, t) in &edges {
            for &(t2, c2, u) in edges.range((t, 0, 0)..=(t, 1, usize::MAX)) {
                debug_assert_eq!(t2, t);
                let e = (s, c.max(c2), u);
                if !edges.contains(&e) {
                    added.push(e);
                }
            }
        }
        if added.is_empty() {
            break;
        }
        edges.extend(added);
    }
    AnnotationLabel { edges }
}

/// Checks a strategy on a whole tree: every active state's moves satisfy its
/// transition, every move lands on an existing node whose strategy covers
/// the target state, and the least annotation is accepting. `active[x]` is
/// the set of states the strategy handles at node `x`.
pub fn check_strategy_tree(
    a: &Twata,
    b: &BinaryTree,
    strategy: &[StrategyLabel],
    active: &[BTreeSet<StateId>],
) -> Result<Vec<AnnotationLabel>, String> {
    let n = b.len();
    if !active[b.root()].contains(&a.initial) {
        return Err("initial state not active at the root".into());
    }
    for x in 0..n {
        let letter = a.letter(b.label(x));
        for &s in &active[x] {
            let moves: HashSet<(i8, StateId)> =
                strategy[x].edges.iter().filter(|e| e.0 == s).map(|e| (e.1, e.2)).collect();
            if !a.delta[s].eval(letter, &mut |d, t| moves.contains(&(d, t))) {
                return Err(format!("moves of state {s} at node {x} do not satisfy its transition"));
            }
        }
        for &(s, d, t) in &strategy[x].edges {
            if !active[x].contains(&s) {
                return Err(format!("edge from inactive state {s} at node {x}"));
            }
            let y = match d {
                0 => Some(x),
                1 | 2 => b.child(x, d as u8),
                _ => b.parent(x).map(|p| p.0),
            };
            match y {
                Some(y) if active[y].contains(&t) => {}
                _ => return Err(format!("edge ({s},{d},{t}) at node {x} has no target")),
            }
        }
    }
    let mut ann = vec![AnnotationLabel::default(); n];
    loop {
        let mut changed = false;
        for x in 0..n {
            let mut nb = Neighbors::default();
            for d in [1u8, 2] {
                if let Some(c) = b.child(x, d) {
                    nb.children[d as usize - 1] = Some((&strategy[c], &ann[c]));
                }
            }
            if let Some((p, d)) = b.parent(x) {
                nb.parent = Some((d, &strategy[p], &ann[p]));
            }
            let next = close_annotation(a, &strategy[x], &nb, &ann[x]);
            if next != ann[x] {
                ann[x] = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    match ann.iter().position(|l| !l.is_accepting()) {
        Some(x) => Err(format!("annotation at node {x} has a rejecting cycle")),
        None => Ok(ann),
    }
}

type StateSet = FixedBitSet;

struct LetterInfo {
    /// Value of a state when it does not depend on moves to other nodes.
    value: Vec<Option<bool>>,
    /// Minimal sets of moves for the other states; 0-moves to constant
    /// states are resolved away.
    models: Vec<Vec<Vec<(i8, StateId)>>>,
}

fn substitute(f: &Pbf, value: &[Option<bool>]) -> Pbf {
    match f {
        Pbf::Move(0, t) => match value[*t] {
            Some(true) => Pbf::True,
            Some(false) => Pbf::False,
            None => f.clone(),
        },
        Pbf::And(xs) => Pbf::and(xs.iter().map(|x| substitute(x, value)).collect()),
        Pbf::Or(xs) => Pbf::or(xs.iter().map(|x| substitute(x, value)).collect()),
        _ => f.clone(),
    }
}

impl LetterInfo {
    fn new(a: &Twata, zero_succ: &[Vec<StateId>], letter: Letter) -> LetterInfo {
        let n = a.len();
        let resolved: Vec<Pbf> = a.delta.iter().map(|f| f.resolve(letter)).collect();
        let mut value = vec![None; n];
        let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for (s, ts) in zero_succ.iter().enumerate() {
            for &t in ts {
                preds[t].push(s);
            }
        }
        let mut work: Vec<StateId> = (0..n).collect();
        let mut queued = vec![true; n];
        while let Some(s) = work.pop() {
            queued[s] = false;
            if value[s].is_some() {
                continue;
            }
            let v = match substitute(&resolved[s], &value) {
                Pbf::True => Some(true),
                Pbf::False => Some(false),
                _ => None,
            };
            if v.is_some() {
                value[s] = v;
                for &p in &preds[s] {
                    if !queued[p] && value[p].is_none() {
                        queued[p] = true;
                        work.push(p);
                    }
                }
            }
        }
        let models = (0..n)
            .map(|s| match value[s] {
                Some(_) => Vec::new(),
                None => cubes(&substitute(&resolved[s], &value)).into_iter().map(|c| c.moves).collect(),
            })
            .collect();
        LetterInfo { value, models }
    }
}

type Choice = (StateSet, Letter, Letter, Vec<(StateId, i8, StateId)>);

/// Drops choices whose moves include all moves of another choice.
fn drop_dominated(mut v: Vec<Choice>) -> Vec<Choice> {
    for c in &mut v {
        c.3.sort_unstable();
        c.3.dedup();
    }
    v.sort_by_key(|c| c.3.len());
    let mut kept: Vec<Choice> = Vec::new();
    for c in v {
        let covered = kept.iter().any(|k| {
            let mut it = c.3.iter();
            k.3.iter().all(|e| it.any(|x| x == e))
        });
        if !covered {
            kept.push(c);
        }
    }
    kept
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) enum Child {
    Absent,
    Node(usize),
}

#[derive(Clone, Debug)]
pub(crate) struct Config {
    pub key: usize,
    pub seeds: StateSet,
    pub active: StateSet,
    pub pos: Letter,
    pub neg: Letter,
    pub edges: Vec<(StateId, i8, StateId)>,
    /// Key demanded in each direction; `None` for no demand.
    pub child_keys: [Option<usize>; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Interface {
    pub key: usize,
    pub up: StateSet,
    pub exits: Vec<(StateId, StateId)>,
    /// Whether the initial state is active at the node.
    pub selecting: bool,
}

#[derive(Clone, Debug)]
pub(crate) struct Plan {
    pub config: usize,
    pub children: [Child; 2],
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Transition {
    pub from: usize,
    pub pos: Letter,
    pub neg: Letter,
    pub children: [Child; 2],
}

struct KeyInfo {
    set: StateSet,
    live: Vec<usize>,
    watchers: Vec<usize>,
}

pub(crate) struct Engine<'a> {
    a: &'a Twata,
    zero_succ: Vec<Vec<StateId>>,
    label_mask: Vec<Letter>,
    letters: HashMap<Letter, LetterInfo>,
    rejecting: StateSet,
    all_runs: bool,
    limit: usize,
    keys: Vec<KeyInfo>,
    key_index: HashMap<StateSet, usize>,
    pub configs: Vec<Config>,
    pub interfaces: Vec<Interface>,
    pub plans: Vec<Plan>,
    dominated: Vec<bool>,
    iface_index: HashMap<Interface, usize>,
    pub transitions: Vec<Transition>,
    transition_set: HashSet<Transition>,
    expanded: HashSet<(usize, StateSet)>,
    expand_queue: VecDeque<(usize, StateSet)>,
    iface_queue: VecDeque<usize>,
    root_key: usize,
    found: Option<usize>,
}

impl<'a> Engine<'a> {
    /// `all_runs` keeps every interface and transition (no dominance, no
    /// early exit) and lets any node start the initial state.
    pub(crate) fn new(a: &'a Twata, opts: EmptinessOptions, all_runs: bool) -> Self {
        let n = a.len();
        let mut rejecting = StateSet::with_capacity(n);
        for s in 0..n {
            rejecting.set(s, !a.alpha[s]);
        }
        let mut e = Engine {
            a,
            zero_succ: a
                .delta
                .iter()
                .map(|f| f.moves().into_iter().filter(|m| m.0 == 0).map(|m| m.1).collect())
                .collect(),
            label_mask: a.delta.iter().map(|f| f.labels().into_iter().fold(0, |m, p| m | 1 << p)).collect(),
            letters: HashMap::new(),
            rejecting,
            all_runs,
            limit: opts.max_states,
            keys: Vec::new(),
            key_index: HashMap::new(),
            configs: Vec::new(),
            interfaces: Vec::new(),
            plans: Vec::new(),
            dominated: Vec::new(),
            iface_index: HashMap::new(),
            transitions: Vec::new(),
            transition_set: HashSet::new(),
            expanded: HashSet::new(),
            expand_queue: VecDeque::new(),
            iface_queue: VecDeque::new(),
            root_key: 0,
            found: None,
        };
        let mut root = StateSet::with_capacity(n);
        if !all_runs {
            root.insert(a.initial);
        }
        e.root_key = e.key(root.clone());
        e.request(e.root_key, root);
        e
    }

    fn key(&mut self, set: StateSet) -> usize {
        if let Some(&k) = self.key_index.get(&set) {
            return k;
        }
        let k = self.keys.len();
        self.keys.push(KeyInfo { set: set.clone(), live: Vec::new(), watchers: Vec::new() });
        self.key_index.insert(set, k);
        k
    }

    fn request(&mut self, key: usize, seeds: StateSet) {
        if self.all_runs {
            let mut anchored = seeds.clone();
            anchored.insert(self.a.initial);
            if self.expanded.insert((key, anchored.clone())) {
                self.expand_queue.push_back((key, anchored));
            }
        }
        if self.expanded.insert((key, seeds.clone())) {
            self.expand_queue.push_back((key, seeds));
        }
    }

    fn used(&self) -> usize {
        self.configs.len() + self.interfaces.len()
    }

    fn check_budget(&self) -> Result<(), EmptinessError> {
        if self.used() > self.limit {
            Err(EmptinessError::BudgetExhausted { limit: self.limit })
        } else {
            Ok(())
        }
    }

    pub(crate) fn stats(&self) -> EmptinessStats {
        EmptinessStats { keys: self.keys.len(), configs: self.configs.len(), interfaces: self.interfaces.len() }
    }

    pub(crate) fn root_key(&self) -> usize {
        self.root_key
    }

    pub(crate) fn run(&mut self) -> Result<Option<usize>, EmptinessError> {
        loop {
            if self.found.is_some() {
                return Ok(self.found);
            }
            self.check_budget()?;
            if let Some(i) = self.iface_queue.pop_front() {
                self.on_interface(i)?;
            } else if let Some((k, seeds)) = self.expand_queue.pop_front() {
                self.expand(k, seeds)?;
            } else {
                return Ok(None);
            }
        }
    }

    /// Constant values and move models of every state under a letter.
    fn letter_info(&mut self, letter: Letter) -> &LetterInfo {
        let a = self.a;
        let zero_succ = &self.zero_succ;
        self.letters.entry(letter).or_insert_with(|| LetterInfo::new(a, zero_succ, letter))
    }

    /// All ways of satisfying `seeds` and the states they reach by 0-moves,
    /// one letter at a time over the props those states mention. States
    /// whose value under the letter is constant are not entered.
    fn enumerate(&mut self, seeds: &StateSet) -> Vec<Choice> {
        let n = self.a.len();
        let mut reach = seeds.clone();
        let mut stack: Vec<StateId> = seeds.ones().collect();
        let mut relevant: Letter = 0;
        while let Some(s) = stack.pop() {
            relevant |= self.label_mask[s];
            for &t in &self.zero_succ[s] {
                if !reach.put(t) {
                    stack.push(t);
                }
            }
        }
        let mut out = Vec::new();
        let mut sub = relevant;
        loop {
            let letter = sub;
            let info = self.letter_info(letter);
            if seeds.ones().all(|s| info.value[s] != Some(false)) {
                struct Frame {
                    agenda: Vec<StateId>,
                    assigned: StateSet,
                    edges: Vec<(StateId, i8, StateId)>,
                }
                let mut frames = vec![Frame {
                    agenda: seeds.ones().filter(|&s| info.value[s].is_none()).collect(),
                    assigned: seeds.clone(),
                    edges: Vec::new(),
                }];
                for s in seeds.ones() {
                    if info.value[s].is_none() {
                        frames[0].assigned.set(s, false);
                    }
                }
                while let Some(mut f) = frames.pop() {
                    let next = loop {
                        match f.agenda.pop() {
                            Some(s) if f.assigned.contains(s) => continue,
                            other => break other,
                        }
                    };
                    let Some(s) = next else {
                        out.push((f.assigned, letter, relevant & !letter, f.edges));
                        continue;
                    };
                    for m in &info.models[s] {
                        let mut assigned = f.assigned.clone();
                        assigned.insert(s);
                        let mut agenda = f.agenda.clone();
                        let mut edges = f.edges.clone();
                        for &(d, t) in m {
                            edges.push((s, d, t));
                            if d == 0 && !assigned.contains(t) {
                                agenda.push(t);
                            }
                        }
                        frames.push(Frame { agenda, assigned, edges });
                    }
                }
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & relevant;
        }
        debug_assert!(out.iter().all(|c| c.0.len() == n));
        if !self.all_runs {
            out = drop_dominated(out);
        }
        out
    }

    fn expand(&mut self, key: usize, seeds: StateSet) -> Result<(), EmptinessError> {
        for (active, pos, neg, edges) in self.enumerate(&seeds) {
            let mut child_keys = [None, None];
            for dir in [1i8, 2] {
                let mut demand = StateSet::with_capacity(self.a.len());
                for &(_, d, t) in &edges {
                    if d == dir {
                        demand.insert(t);
                    }
                }
                if !demand.is_clear() || self.all_runs {
                    let k = self.key(demand.clone());
                    child_keys[dir as usize - 1] = Some(k);
                    self.request(k, demand);
                }
            }
            let id = self.configs.len();
            self.configs.push(Config { key, seeds: seeds.clone(), active, pos, neg, edges, child_keys });
            let mut watched = Vec::new();
            for k in child_keys.into_iter().flatten() {
                if !watched.contains(&k) {
                    self.keys[k].watchers.push(id);
                    watched.push(k);
                }
            }
            self.check_budget()?;
            self.try_all(id, None)?;
            if self.found.is_some() {
                break;
            }
        }
        Ok(())
    }

    fn options(&self, cfg: usize, slot: usize) -> Vec<Child> {
        match self.configs[cfg].child_keys[slot] {
            None => vec![Child::Absent],
            Some(k) => {
                let mut v: Vec<Child> = self.keys[k].live.iter().map(|&i| Child::Node(i)).collect();
                if self.keys[k].set.is_clear() {
                    v.push(Child::Absent);
                }
                v
            }
        }
    }

    /// Tries the config with every combination of current child interfaces;
    /// with `fresh`, only combinations that use that interface.
    fn try_all(&mut self, cfg: usize, fresh: Option<usize>) -> Result<(), EmptinessError> {
        let o1 = self.options(cfg, 0);
        let o2 = self.options(cfg, 1);
        for &c1 in &o1 {
            for &c2 in &o2 {
                if let Some(f) = fresh {
                    if c1 != Child::Node(f) && c2 != Child::Node(f) {
                        continue;
                    }
                }
                self.combine(cfg, [c1, c2]);
                if self.found.is_some() {
                    return Ok(());
                }
            }
            self.check_budget()?;
        }
        Ok(())
    }

    fn on_interface(&mut self, i: usize) -> Result<(), EmptinessError> {
        if self.dominated[i] {
            return Ok(());
        }
        let watchers = self.keys[self.interfaces[i].key].watchers.clone();
        for cfg in watchers {
            self.try_all(cfg, Some(i))?;
            if self.found.is_some() {
                break;
            }
        }
        Ok(())
    }

    fn combine(&mut self, cfg_id: usize, children: [Child; 2]) {
        let n = self.a.len();
        let cfg = &self.configs[cfg_id];
        let mut missing = StateSet::with_capacity(n);
        for c in children {
            if let Child::Node(i) = c {
                missing.union_with(&self.interfaces[i].up);
            }
        }
        missing.difference_with(&cfg.active);
        if !missing.is_clear() {
            let mut seeds = cfg.seeds.clone();
            seeds.union_with(&missing);
            let key = cfg.key;
            self.request(key, seeds);
            return;
        }
        // rejecting graph at this node
        let mut adj: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for &(s, d, t) in &cfg.edges {
            if !self.rejecting.contains(s) {
                continue;
            }
            match d {
                0 if self.rejecting.contains(t) => adj[s].push(t),
                1 | 2 => {
                    if let Child::Node(i) = children[d as usize - 1] {
                        for &(entry, exit) in &self.interfaces[i].exits {
                            if entry == t {
                                adj[s].push(exit);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        if has_cycle(&adj, &cfg.active, &self.rejecting) {
            return;
        }
        let mut up = StateSet::with_capacity(n);
        let mut up_edges: Vec<Vec<StateId>> = vec![Vec::new(); n];
        for &(s, d, t) in &cfg.edges {
            if d == -1 {
                up.insert(t);
                if self.rejecting.contains(s) && self.rejecting.contains(t) {
                    up_edges[s].push(t);
                }
            }
        }
        let mut exits = BTreeSet::new();
        for entry in self.keys[cfg.key].set.ones() {
            if !self.rejecting.contains(entry) {
                continue;
            }
            let mut seen = StateSet::with_capacity(n);
            let mut stack = vec![entry];
            seen.insert(entry);
            while let Some(u) = stack.pop() {
                for &t in &up_edges[u] {
                    exits.insert((entry, t));
                }
                for &v in &adj[u] {
                    if !seen.put(v) {
                        stack.push(v);
                    }
                }
            }
        }
        let iface = Interface {
            key: cfg.key,
            up,
            exits: exits.into_iter().collect(),
            selecting: cfg.active.contains(self.a.initial),
        };
        let (pos, neg) = (cfg.pos, cfg.neg);
        let id = match self.iface_index.get(&iface) {
            Some(&id) => id,
            None => {
                if !self.all_runs {
                    let key = &self.keys[iface.key];
                    let dominated_by_live = key.live.iter().any(|&j| {
                        let o = &self.interfaces[j];
                        o.up.is_subset(&iface.up) && o.exits.iter().all(|e| iface.exits.binary_search(e).is_ok())
                    });
                    if dominated_by_live {
                        return;
                    }
                }
                let id = self.interfaces.len();
                if !self.all_runs {
                    let live = std::mem::take(&mut self.keys[iface.key].live);
                    let mut keep = Vec::with_capacity(live.len() + 1);
                    for j in live {
                        let o = &self.interfaces[j];
                        if iface.up.is_subset(&o.up) && iface.exits.iter().all(|e| o.exits.binary_search(e).is_ok()) {
                            self.dominated[j] = true;
                        } else {
                            keep.push(j);
                        }
                    }
                    self.keys[iface.key].live = keep;
                }
                self.keys[iface.key].live.push(id);
                self.iface_index.insert(iface.clone(), id);
                self.interfaces.push(iface);
                self.plans.push(Plan { config: cfg_id, children });
                self.dominated.push(false);
                self.iface_queue.push_back(id);
                id
            }
        };
        if self.all_runs {
            let t = Transition { from: id, pos, neg, children };
            if self.transition_set.insert(t.clone()) {
                self.transitions.push(t);
            }
        } else if self.interfaces[id].key == self.root_key && self.interfaces[id].up.is_clear() {
            self.found = Some(id);
        }
    }

    /// Builds the tree recorded by the plans below interface `root`.
    pub(crate) fn witness(&self, root: usize) -> BinaryTree {
        let label = |i: usize| self.a.letter_label(self.configs[self.plans[i].config].pos);
        let mut b = BinaryTree::new(label(root));
        let mut stack = vec![(root, b.root())];
        while let Some((i, node)) = stack.pop() {
            for (slot, c) in self.plans[i].children.iter().enumerate() {
                if let Child::Node(j) = *c {
                    let id = b.add_child(node, slot as u8 + 1, label(j));
                    stack.push((j, id));
                }
            }
        }
        b
    }
}

fn has_cycle(adj: &[Vec<StateId>], active: &StateSet, rejecting: &StateSet) -> bool {
    // iterative three-colour depth-first search
    let n = adj.len();
    let mut colour = vec![0u8; n];
    for start in active.ones() {
        if !rejecting.contains(start) || colour[start] != 0 {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        colour[start] = 1;
        while let Some(&mut (u, ref mut i)) = stack.last_mut() {
            if *i < adj[u].len() {
                let v = adj[u][*i];
                *i += 1;
                match colour[v] {
                    0 => {
                        colour[v] = 1;
                        stack.push((v, 0));
                    }
                    1 => return true,
                    _ => {}
                }
            } else {
                colour[u] = 2;
                stack.pop();
            }
        }
    }
    false
}

/// Decides whether the automaton accepts some finite binary tree from its
/// root; a witness is checked with the acceptance engine before it is
/// returned.
pub fn twata_nonempty(a: &Twata, opts: EmptinessOptions) -> Result<EmptinessReport, EmptinessError> {
    let mut e = Engine::new(a, opts, false);
    let found = e.run()?;
    let stats = e.stats();
    let result = match found {
        None => Nonemptiness::Empty,
        Some(root) => {
            let w = e.witness(root);
            if !accepts(a, &w) {
                return Err(EmptinessError::WitnessRejected(w.to_string()));
            }
            Nonemptiness::Witness(w)
        }
    };
    Ok(EmptinessReport { result, stats })
}
