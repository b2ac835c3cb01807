//! Evaluation of a 2WATA on a binary tree: the product with the tree is a
//! weak and-or game, solved class by class with counting propagation.

use std::collections::{BTreeSet, HashMap};

use fixedbitset::FixedBitSet;

use crate::tree::{encode_binary, BinaryTree, NodeAddress, SiblingTree};
use crate::twata::{Letter, Pbf, StateId, Twata};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Gate {
    True,
    False,
    And,
    Or,
}

#[derive(Clone, Copy)]
enum Ref {
    Const(bool),
    Node(u32),
}

/// The product of an automaton with a tree.
///
/// Position `(s, x)` has id `s * nodes + x`; auxiliary gates for nested
/// subformulas follow the positions.
pub struct ProductGame {
    states: usize,
    nodes: usize,
    gate: Vec<Gate>,
    class: Vec<u32>,
    row: Vec<(u32, u32)>,
    succ: Vec<u32>,
    accepting_class: Vec<bool>,
    resolved_letters: usize,
}

impl ProductGame {
    pub fn position_count(&self) -> usize {
        self.states * self.nodes
    }

    pub fn position(&self, s: StateId, node: usize) -> usize {
        s * self.nodes + node
    }

    /// The position's formula if it resolved to a constant.
    pub fn constant(&self, pos: usize) -> Option<bool> {
        match self.gate[pos] {
            Gate::True => Some(true),
            Gate::False => Some(false),
            _ => None,
        }
    }

    /// Number of distinct (state, letter) pairs whose transition was resolved.
    pub fn resolved_letters(&self) -> usize {
        self.resolved_letters
    }

    fn succs(&self, x: usize) -> &[u32] {
        let (s, l) = self.row[x];
        &self.succ[s as usize..(s + l) as usize]
    }

    fn push(&mut self, g: Gate, class: u32, kids: &[u32]) -> u32 {
        let id = self.gate.len() as u32;
        self.gate.push(g);
        self.class.push(class);
        self.row.push((self.succ.len() as u32, kids.len() as u32));
        self.succ.extend_from_slice(kids);
        id
    }
}

fn target(b: &BinaryTree, x: usize, d: i8) -> Option<usize> {
    match d {
        0 => Some(x),
        1 | 2 => b.child(x, d as u8),
        _ => b.parent(x).map(|(p, _)| p),
    }
}

/// Builds the product game. Only letters occurring in the tree are resolved.
pub fn build_product(a: &Twata, b: &BinaryTree) -> ProductGame {
    let (ns, nn) = (a.len(), b.len());
    let class_of: Vec<u32> = a.class_of().into_iter().map(|c| c.expect("partition covers states") as u32).collect();
    let mut g = ProductGame {
        states: ns,
        nodes: nn,
        gate: vec![Gate::False; ns * nn],
        class: vec![0; ns * nn],
        row: vec![(0, 0); ns * nn],
        succ: Vec::new(),
        accepting_class: (0..a.partition.len()).map(|c| a.class_accepting(c)).collect(),
        resolved_letters: 0,
    };
    let letters: Vec<Letter> = (0..nn).map(|x| a.letter(b.label(x))).collect();
    let mut cache: HashMap<(StateId, Letter), Pbf> = HashMap::new();
    for s in 0..ns {
        let cls = class_of[s];
        for x in 0..nn {
            let f = cache.entry((s, letters[x])).or_insert_with(|| a.delta[s].resolve(letters[x]));
            let pos = s * nn + x;
            g.class[pos] = cls;
            let r = instantiate(&mut g, f, b, x, cls);
            match r {
                Ref::Const(v) => g.gate[pos] = if v { Gate::True } else { Gate::False },
                Ref::Node(id) => {
                    // the top gate of a position is its own node; copy the row
                    // of an auxiliary gate, or point at another position
                    if id as usize >= ns * nn {
                        g.gate[pos] = g.gate[id as usize];
                        g.row[pos] = g.row[id as usize];
                    } else {
                        g.gate[pos] = Gate::Or;
                        g.row[pos] = (g.succ.len() as u32, 1);
                        g.succ.push(id);
                    }
                }
            }
        }
    }
    g.resolved_letters = cache.len();
    g
}

fn instantiate(g: &mut ProductGame, f: &Pbf, b: &BinaryTree, x: usize, cls: u32) -> Ref {
    match f {
        Pbf::True => Ref::Const(true),
        Pbf::False => Ref::Const(false),
        Pbf::Label(..) => unreachable!("labels are resolved"),
        Pbf::Move(d, t) => match target(b, x, *d) {
            Some(y) => Ref::Node((t * g.nodes + y) as u32),
            None => Ref::Const(false),
        },
        Pbf::And(xs) | Pbf::Or(xs) => {
            let is_and = matches!(f, Pbf::And(_));
            let mut kids = Vec::with_capacity(xs.len());
            for x2 in xs {
                match instantiate(g, x2, b, x, cls) {
                    Ref::Const(v) if v == is_and => {}
                    Ref::Const(v) => return Ref::Const(v),
                    Ref::Node(id) => kids.push(id),
                }
            }
            match kids.len() {
                0 => Ref::Const(is_and),
                1 => Ref::Node(kids[0]),
                _ => Ref::Node(g.push(if is_and { Gate::And } else { Gate::Or }, cls, &kids)),
            }
        }
    }
}

/// Winning positions of the product game (bits `0..position_count()`).
///
/// Classes are solved from the lowest up; a rejecting class is a least
/// fixpoint over its unknowns and an accepting class a greatest one.
pub fn solve_weak_game(g: &ProductGame) -> FixedBitSet {
    let total = g.gate.len();
    // predecessor lists
    let mut pstart = vec![0u32; total + 1];
    for x in 0..total {
        for &y in g.succs(x) {
            pstart[y as usize + 1] += 1;
        }
    }
    for i in 0..total {
        pstart[i + 1] += pstart[i];
    }
    let mut fill = pstart.clone();
    let mut preds = vec![0u32; pstart[total] as usize];
    for x in 0..total {
        for &y in g.succs(x) {
            preds[fill[y as usize] as usize] = x as u32;
            fill[y as usize] += 1;
        }
    }
    // nodes grouped by class
    let nclass = g.accepting_class.len();
    let mut by_class = vec![Vec::new(); nclass];
    for x in 0..total {
        by_class[g.class[x] as usize].push(x as u32);
    }

    // 0 unknown, 1 true, 2 false
    let mut value = vec![0u8; total];
    let mut need = vec![0u32; total];
    let mut queue = Vec::new();
    for (c, members) in by_class.iter().enumerate() {
        // in a rejecting class we propagate truth, in an accepting one falsity
        let goal_true = !g.accepting_class[c];
        let (hit, miss) = if goal_true { (1u8, 2u8) } else { (2u8, 1u8) };
        // a gate "all" needs every successor to hit; a gate "any" needs one
        let is_all = |gate: Gate| match gate {
            Gate::And | Gate::True => goal_true,
            Gate::Or | Gate::False => !goal_true,
        };
        for &x in members {
            let x = x as usize;
            let succs = g.succs(x);
            if is_all(g.gate[x]) {
                need[x] = succs.iter().filter(|&&y| value[y as usize] != hit).count() as u32;
            } else {
                need[x] = if succs.iter().any(|&y| value[y as usize] == hit) { 0 } else { 1 };
            }
        }
        // seeds are marked after all counts are taken
        for &x in members {
            if need[x as usize] == 0 {
                value[x as usize] = hit;
                queue.push(x as usize);
            }
        }
        while let Some(y) = queue.pop() {
            for &p in &preds[pstart[y] as usize..pstart[y + 1] as usize] {
                let p = p as usize;
                if value[p] != 0 || g.class[p] as usize != c {
                    continue;
                }
                need[p] -= 1;
                if need[p] == 0 {
                    value[p] = hit;
                    queue.push(p);
                }
            }
        }
        for &x in members {
            if value[x as usize] == 0 {
                value[x as usize] = miss;
            }
        }
    }
    let mut win = FixedBitSet::with_capacity(g.position_count());
    for (pos, &v) in value.iter().take(g.position_count()).enumerate() {
        win.set(pos, v == 1);
    }
    win
}

/// Ids of the nodes from which the automaton accepts; one game solve.
pub fn selected_node_ids(a: &Twata, b: &BinaryTree) -> FixedBitSet {
    let g = build_product(a, b);
    let win = solve_weak_game(&g);
    let mut out = FixedBitSet::with_capacity(b.len());
    for x in 0..b.len() {
        out.set(x, win.contains(g.position(a.initial, x)));
    }
    out
}

/// Addresses of the nodes from which the automaton accepts.
pub fn selected_nodes(a: &Twata, b: &BinaryTree) -> BTreeSet<NodeAddress> {
    selected_node_ids(a, b).ones().map(|x| b.address(x)).collect()
}

/// Addresses, in the sibling tree `t`, of the nodes from which the automaton
/// accepts the encoding of `t`.
pub fn eval_query_automaton(a: &Twata, t: &SiblingTree) -> BTreeSet<NodeAddress> {
    selected_node_ids(a, &encode_binary(t)).ones().map(|x| t.address(x)).collect()
}

/// Whether the automaton accepts the tree from its root.
pub fn accepts(a: &Twata, b: &BinaryTree) -> bool {
    selected_node_ids(a, b).contains(b.root())
}
