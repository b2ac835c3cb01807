//! Seeded generators for trees, node expressions and valid queries, plus
//! exhaustive enumeration of small trees.

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

use crate::query::{Axis, Equation, FixKind, FixpointBlock, MuXPathQuery, NodeExpr, PathExpr};
use crate::rxpath::well_founded;
use crate::tree::{Label, SiblingTree};

const ALL_AXES: [Axis; 6] = [Axis::Child, Axis::ChildInv, Axis::Fchild, Axis::FchildInv, Axis::Right, Axis::RightInv];

fn default_props() -> Vec<String> {
    vec!["a".into(), "b".into()]
}

#[derive(Clone, Debug)]
pub struct TreeShape {
    pub max_nodes: usize,
    pub props: Vec<String>,
    /// Probability that a given proposition holds at a node.
    pub density: f64,
}

impl Default for TreeShape {
    fn default() -> Self {
        TreeShape { max_nodes: 8, props: default_props(), density: 0.4 }
    }
}

#[derive(Clone, Debug)]
pub struct ExprShape {
    pub depth: usize,
    pub props: Vec<String>,
    pub axes: Vec<Axis>,
    /// Allow sequences, unions, stars, tests and inverses in paths.
    pub paths: bool,
    /// Free variables that may occur (with any polarity).
    pub vars: Vec<String>,
}

impl Default for ExprShape {
    fn default() -> Self {
        ExprShape { depth: 3, props: default_props(), axes: ALL_AXES.to_vec(), paths: true, vars: Vec::new() }
    }
}

#[derive(Clone, Debug)]
pub struct QueryShape {
    pub max_blocks: usize,
    pub max_equations: usize,
    pub depth: usize,
    pub props: Vec<String>,
    pub axes: Vec<Axis>,
    pub paths: bool,
}

impl Default for QueryShape {
    fn default() -> Self {
        QueryShape {
            max_blocks: 2,
            max_equations: 2,
            depth: 3,
            props: default_props(),
            axes: ALL_AXES.to_vec(),
            paths: true,
        }
    }
}

/// A random tree with between 1 and `max_nodes` nodes.
pub fn random_tree(seed: u64, shape: &TreeShape) -> SiblingTree {
    let mut rng = StdRng::seed_from_u64(seed);
    let n = rng.gen_range(1..=shape.max_nodes.max(1));
    let label = |rng: &mut StdRng| -> Label {
        shape.props.iter().filter(|_| rng.gen_bool(shape.density)).cloned().collect()
    };
    let mut t = SiblingTree::new(label(&mut rng));
    for _ in 1..n {
        let parent = rng.gen_range(0..t.len());
        let l = label(&mut rng);
        t.add_child(parent, l);
    }
    t
}

/// Every ordered unlabeled tree with exactly `n` nodes, as child lists of a
/// preorder numbering (node 0 is the root).
pub fn tree_shapes(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn forests(n: usize) -> Vec<Vec<usize>> {
        // a forest is given by the sizes of its trees
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for first in 1..=n {
            for mut rest in forests(n - first) {
                rest.insert(0, first);
                out.push(rest);
            }
        }
        out
    }
    fn build(n: usize) -> Vec<Vec<Vec<usize>>> {
        let mut out = Vec::new();
        for sizes in forests(n - 1) {
            let mut partial: Vec<Vec<Vec<usize>>> = vec![vec![vec![]]];
            for &s in &sizes {
                let mut next = Vec::new();
                for base in &partial {
                    for sub in build(s) {
                        let mut t = base.clone();
                        let off = t.len();
                        t[0].push(off);
                        for kids in sub {
                            t.push(kids.into_iter().map(|k| k + off).collect());
                        }
                        next.push(t);
                    }
                }
                partial = next;
            }
            out.extend(partial);
        }
        out
    }
    if n == 0 {
        return Vec::new();
    }
    build(n)
}

/// Calls `f` on every tree with 1 to `max_nodes` nodes labeled by subsets of
/// `props`. Stops early when `f` returns false; returns whether it ran to
/// completion.
pub fn for_each_tree(max_nodes: usize, props: &[String], mut f: impl FnMut(&SiblingTree) -> bool) -> bool {
    let labels: Vec<Label> = (0..1u32 << props.len())
        .map(|m| props.iter().enumerate().filter(|(i, _)| m >> i & 1 == 1).map(|(_, p)| p.clone()).collect())
        .collect();
    for n in 1..=max_nodes {
        for shape in tree_shapes(n) {
            let mut choice = vec![0usize; n];
            loop {
                let mut t = SiblingTree::new(labels[choice[0]].clone());
                let mut ids = vec![0usize; n];
                for (x, kids) in shape.iter().enumerate() {
                    for &k in kids {
                        ids[k] = t.add_child(ids[x], labels[choice[k]].clone());
                    }
                }
                if !f(&t) {
                    return false;
                }
                let mut i = 0;
                while i < n {
                    choice[i] += 1;
                    if choice[i] < labels.len() {
                        break;
                    }
                    choice[i] = 0;
                    i += 1;
                }
                if i == n {
                    break;
                }
            }
        }
    }
    true
}

struct Gen<'a> {
    rng: StdRng,
    props: &'a [String],
    axes: &'a [Axis],
    paths: bool,
    /// Variables usable with any polarity.
    free: Vec<String>,
    /// Variables of the block being generated: positive occurrences only.
    own: Vec<String>,
    kind: FixKind,
}

impl Gen<'_> {
    fn leaf(&mut self, own_ok: bool) -> NodeExpr {
        let k = self.rng.gen_range(0..10);
        match k {
            0 => NodeExpr::True,
            1 => NodeExpr::False,
            2 | 3 if own_ok && !self.own.is_empty() => NodeExpr::var(self.own.choose(&mut self.rng).unwrap()),
            4 if !self.free.is_empty() => {
                let v = NodeExpr::var(self.free.choose(&mut self.rng).unwrap());
                if self.rng.gen_bool(0.3) {
                    NodeExpr::not(v)
                } else {
                    v
                }
            }
            5 => NodeExpr::not(NodeExpr::prop(self.props.choose(&mut self.rng).unwrap())),
            _ => NodeExpr::prop(self.props.choose(&mut self.rng).unwrap()),
        }
    }

    fn axis(&mut self) -> PathExpr {
        PathExpr::ax(*self.axes.choose(&mut self.rng).unwrap())
    }

    fn path(&mut self, depth: usize) -> PathExpr {
        if !self.paths || depth == 0 {
            return self.axis();
        }
        match self.rng.gen_range(0..9) {
            0 => PathExpr::seq(self.path(depth - 1), self.path(depth - 1)),
            1 => PathExpr::union(self.path(depth - 1), self.path(depth - 1)),
            2 => PathExpr::star(self.path(depth - 1)),
            3 => PathExpr::test(self.expr(depth - 1, false)),
            4 => match self.path(depth - 1) {
                PathExpr::Ax(a) => PathExpr::ax(a.inverse()),
                p => PathExpr::inverse(p),
            },
            _ => self.axis(),
        }
    }

    fn modal(&mut self, depth: usize, own_ok: bool, diamond: bool) -> NodeExpr {
        let target = self.expr(depth - 1, own_ok);
        let mut p = self.path(depth - 1);
        let mismatched = (diamond && self.kind == FixKind::Gfp) || (!diamond && self.kind == FixKind::Lfp);
        let touches_own = self.own.iter().any(|v| target.vars().contains(v));
        if mismatched && touches_own && !stars_well_founded(&p) {
            p = self.axis();
        }
        if diamond {
            NodeExpr::dia(p, target)
        } else {
            NodeExpr::boxed(p, target)
        }
    }

    fn expr(&mut self, depth: usize, own_ok: bool) -> NodeExpr {
        if depth == 0 {
            return self.leaf(own_ok);
        }
        match self.rng.gen_range(0..12) {
            0 | 1 => NodeExpr::and(self.expr(depth - 1, own_ok), self.expr(depth - 1, own_ok)),
            2 | 3 => NodeExpr::or(self.expr(depth - 1, own_ok), self.expr(depth - 1, own_ok)),
            4 => NodeExpr::not(self.expr(depth - 1, false)),
            5 => NodeExpr::implies(self.expr(depth - 1, false), self.expr(depth - 1, own_ok)),
            6..=8 => self.modal(depth, own_ok, true),
            9 | 10 => self.modal(depth, own_ok, false),
            _ => self.leaf(own_ok),
        }
    }
}

fn stars_well_founded(p: &PathExpr) -> bool {
    match p {
        PathExpr::Ax(_) | PathExpr::Test(_) => true,
        PathExpr::Inverse(x) => stars_well_founded(x),
        PathExpr::Seq(a, b) | PathExpr::Union(a, b) => stars_well_founded(a) && stars_well_founded(b),
        PathExpr::Star(x) => well_founded(x) && stars_well_founded(x),
    }
}

/// A random node expression; it may contain the shape's variables anywhere.
pub fn random_node_expr(seed: u64, shape: &ExprShape) -> NodeExpr {
    let mut g = Gen {
        rng: StdRng::seed_from_u64(seed),
        props: &shape.props,
        axes: &shape.axes,
        paths: shape.paths,
        free: shape.vars.clone(),
        own: Vec::new(),
        kind: FixKind::Lfp,
    };
    g.expr(shape.depth, false)
}

/// A random query that passes validation: own-block variables only occur
/// positively, blocks only refer to earlier blocks, and stars under the
/// modality of the other fixpoint kind are well-founded.
pub fn random_query(seed: u64, shape: &QueryShape) -> MuXPathQuery {
    let mut rng = StdRng::seed_from_u64(seed);
    let nblocks = rng.gen_range(1..=shape.max_blocks.max(1));
    let mut g = Gen {
        rng,
        props: &shape.props,
        axes: &shape.axes,
        paths: shape.paths,
        free: Vec::new(),
        own: Vec::new(),
        kind: FixKind::Lfp,
    };
    let mut blocks = Vec::new();
    for i in 0..nblocks {
        let neq = g.rng.gen_range(1..=shape.max_equations.max(1));
        g.own = (0..neq).map(|j| format!("X{i}_{j}")).collect();
        g.kind = if g.rng.gen_bool(0.5) { FixKind::Lfp } else { FixKind::Gfp };
        let depth = shape.depth;
        let equations = g
            .own
            .clone()
            .into_iter()
            .map(|var| Equation { var, body: g.expr(depth, true) })
            .collect();
        blocks.push(FixpointBlock { kind: g.kind, equations });
        let own = std::mem::take(&mut g.own);
        g.free.extend(own);
    }
    let goal = blocks.last().unwrap().equations[0].var.clone();
    MuXPathQuery { goal, blocks }
}
