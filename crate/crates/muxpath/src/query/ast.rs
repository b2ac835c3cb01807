use std::collections::BTreeSet;

/// A primitive node relation or its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    Child,
    ChildInv,
    Fchild,
    FchildInv,
    Right,
    RightInv,
}

impl Axis {
    pub fn inverse(self) -> Axis {
        match self {
            Axis::Child => Axis::ChildInv,
            Axis::ChildInv => Axis::Child,
            Axis::Fchild => Axis::FchildInv,
            Axis::FchildInv => Axis::Fchild,
            Axis::Right => Axis::RightInv,
            Axis::RightInv => Axis::Right,
        }
    }

    /// True for the four axes of the binary encoding.
    pub fn is_core(self) -> bool {
        !matches!(self, Axis::Child | Axis::ChildInv)
    }

    pub fn is_forward(self) -> bool {
        matches!(self, Axis::Child | Axis::Fchild | Axis::Right)
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Child | Axis::ChildInv => "child",
            Axis::Fchild | Axis::FchildInv => "fchild",
            Axis::Right | Axis::RightInv => "right",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PathExpr {
    Ax(Axis),
    Inverse(Box<PathExpr>),
    Test(Box<NodeExpr>),
    Seq(Box<PathExpr>, Box<PathExpr>),
    Union(Box<PathExpr>, Box<PathExpr>),
    Star(Box<PathExpr>),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeExpr {
    True,
    False,
    Prop(String),
    Var(String),
    Not(Box<NodeExpr>),
    And(Box<NodeExpr>, Box<NodeExpr>),
    Or(Box<NodeExpr>, Box<NodeExpr>),
    Implies(Box<NodeExpr>, Box<NodeExpr>),
    Diamond(PathExpr, Box<NodeExpr>),
    Box(PathExpr, Box<NodeExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FixKind {
    Lfp,
    Gfp,
}

impl FixKind {
    pub fn dual(self) -> FixKind {
        match self {
            FixKind::Lfp => FixKind::Gfp,
            FixKind::Gfp => FixKind::Lfp,
        }
    }

    pub fn keyword(self) -> &'static str {
        match self {
            FixKind::Lfp => "lfp",
            FixKind::Gfp => "gfp",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub var: String,
    pub body: NodeExpr,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixpointBlock {
    pub kind: FixKind,
    pub equations: Vec<Equation>,
}

/// A goal variable together with its fixpoint blocks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuXPathQuery {
    pub goal: String,
    pub blocks: Vec<FixpointBlock>,
}

// Constructors keep test and builder code short.
impl NodeExpr {
    pub fn prop(p: &str) -> NodeExpr {
        NodeExpr::Prop(p.to_string())
    }

    pub fn var(v: &str) -> NodeExpr {
        NodeExpr::Var(v.to_string())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: NodeExpr) -> NodeExpr {
        NodeExpr::Not(Box::new(e))
    }

    pub fn and(a: NodeExpr, b: NodeExpr) -> NodeExpr {
        NodeExpr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: NodeExpr, b: NodeExpr) -> NodeExpr {
        NodeExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: NodeExpr, b: NodeExpr) -> NodeExpr {
        NodeExpr::Implies(Box::new(a), Box::new(b))
    }

    pub fn dia(p: PathExpr, e: NodeExpr) -> NodeExpr {
        NodeExpr::Diamond(p, Box::new(e))
    }

    pub fn boxed(p: PathExpr, e: NodeExpr) -> NodeExpr {
        NodeExpr::Box(p, Box::new(e))
    }

    /// Left-nested conjunction; `true` when empty.
    pub fn and_all<I: IntoIterator<Item = NodeExpr>>(items: I) -> NodeExpr {
        items.into_iter().reduce(NodeExpr::and).unwrap_or(NodeExpr::True)
    }

    /// Left-nested disjunction; `false` when empty.
    pub fn or_all<I: IntoIterator<Item = NodeExpr>>(items: I) -> NodeExpr {
        items.into_iter().reduce(NodeExpr::or).unwrap_or(NodeExpr::False)
    }

    /// Number of node and path subexpression occurrences.
    pub fn size(&self) -> usize {
        match self {
            NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => 1,
            NodeExpr::Not(e) => 1 + e.size(),
            NodeExpr::And(a, b) | NodeExpr::Or(a, b) | NodeExpr::Implies(a, b) => 1 + a.size() + b.size(),
            NodeExpr::Diamond(p, e) | NodeExpr::Box(p, e) => 1 + p.size() + e.size(),
        }
    }

    /// Variables occurring anywhere, including inside path tests.
    pub fn vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut |e| {
            if let NodeExpr::Var(v) = e {
                out.insert(v.clone());
            }
        });
        out
    }

    pub fn props(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect(&mut |e| {
            if let NodeExpr::Prop(p) = e {
                out.insert(p.clone());
            }
        });
        out
    }

    pub fn mentions_any(&self, vars: &BTreeSet<String>) -> bool {
        let mut hit = false;
        self.collect(&mut |e| {
            if let NodeExpr::Var(v) = e {
                hit |= vars.contains(v);
            }
        });
        hit
    }

    /// Pre-order visit of every node subexpression (path tests included).
    pub fn collect(&self, f: &mut dyn FnMut(&NodeExpr)) {
        f(self);
        match self {
            NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => {}
            NodeExpr::Not(e) => e.collect(f),
            NodeExpr::And(a, b) | NodeExpr::Or(a, b) | NodeExpr::Implies(a, b) => {
                a.collect(f);
                b.collect(f);
            }
            NodeExpr::Diamond(p, e) | NodeExpr::Box(p, e) => {
                p.collect_tests(f);
                e.collect(f);
            }
        }
    }

    /// Applies `f` to every variable name (definitions are not touched).
    pub fn rename_vars(&self, f: &dyn Fn(&str) -> String) -> NodeExpr {
        match self {
            NodeExpr::Var(v) => NodeExpr::Var(f(v)),
            NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) => self.clone(),
            NodeExpr::Not(e) => NodeExpr::not(e.rename_vars(f)),
            NodeExpr::And(a, b) => NodeExpr::and(a.rename_vars(f), b.rename_vars(f)),
            NodeExpr::Or(a, b) => NodeExpr::or(a.rename_vars(f), b.rename_vars(f)),
            NodeExpr::Implies(a, b) => NodeExpr::implies(a.rename_vars(f), b.rename_vars(f)),
            NodeExpr::Diamond(p, e) => NodeExpr::dia(p.map_tests(&|t| t.rename_vars(f)), e.rename_vars(f)),
            NodeExpr::Box(p, e) => NodeExpr::boxed(p.map_tests(&|t| t.rename_vars(f)), e.rename_vars(f)),
        }
    }

    /// Modal nesting depth.
    pub fn modal_depth(&self) -> usize {
        match self {
            NodeExpr::True | NodeExpr::False | NodeExpr::Prop(_) | NodeExpr::Var(_) => 0,
            NodeExpr::Not(e) => e.modal_depth(),
            NodeExpr::And(a, b) | NodeExpr::Or(a, b) | NodeExpr::Implies(a, b) => a.modal_depth().max(b.modal_depth()),
            NodeExpr::Diamond(p, e) | NodeExpr::Box(p, e) => 1 + p.test_depth().max(e.modal_depth()),
        }
    }
}

impl PathExpr {
    pub fn ax(a: Axis) -> PathExpr {
        PathExpr::Ax(a)
    }

    pub fn test(e: NodeExpr) -> PathExpr {
        PathExpr::Test(Box::new(e))
    }

    pub fn seq(a: PathExpr, b: PathExpr) -> PathExpr {
        PathExpr::Seq(Box::new(a), Box::new(b))
    }

    pub fn union(a: PathExpr, b: PathExpr) -> PathExpr {
        PathExpr::Union(Box::new(a), Box::new(b))
    }

    pub fn star(a: PathExpr) -> PathExpr {
        PathExpr::Star(Box::new(a))
    }

    pub fn inverse(a: PathExpr) -> PathExpr {
        PathExpr::Inverse(Box::new(a))
    }

    /// The `u` macro: `(fchild | right)*`.
    pub fn everywhere_down() -> PathExpr {
        PathExpr::star(PathExpr::union(PathExpr::Ax(Axis::Fchild), PathExpr::Ax(Axis::Right)))
    }

    pub fn size(&self) -> usize {
        match self {
            PathExpr::Ax(_) => 1,
            PathExpr::Inverse(p) | PathExpr::Star(p) => 1 + p.size(),
            PathExpr::Test(e) => 1 + e.size(),
            PathExpr::Seq(a, b) | PathExpr::Union(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn collect_tests(&self, f: &mut dyn FnMut(&NodeExpr)) {
        match self {
            PathExpr::Ax(_) => {}
            PathExpr::Inverse(p) | PathExpr::Star(p) => p.collect_tests(f),
            PathExpr::Test(e) => e.collect(f),
            PathExpr::Seq(a, b) | PathExpr::Union(a, b) => {
                a.collect_tests(f);
                b.collect_tests(f);
            }
        }
    }

    pub fn map_tests(&self, f: &dyn Fn(&NodeExpr) -> NodeExpr) -> PathExpr {
        match self {
            PathExpr::Ax(a) => PathExpr::Ax(*a),
            PathExpr::Inverse(p) => PathExpr::inverse(p.map_tests(f)),
            PathExpr::Star(p) => PathExpr::star(p.map_tests(f)),
            PathExpr::Test(e) => PathExpr::test(f(e)),
            PathExpr::Seq(a, b) => PathExpr::seq(a.map_tests(f), b.map_tests(f)),
            PathExpr::Union(a, b) => PathExpr::union(a.map_tests(f), b.map_tests(f)),
        }
    }

    fn test_depth(&self) -> usize {
        match self {
            PathExpr::Ax(_) => 0,
            PathExpr::Inverse(p) | PathExpr::Star(p) => p.test_depth(),
            PathExpr::Test(e) => e.modal_depth(),
            PathExpr::Seq(a, b) | PathExpr::Union(a, b) => a.test_depth().max(b.test_depth()),
        }
    }

    /// Whether the path is a single axis of the binary encoding.
    pub fn as_core_axis(&self) -> Option<Axis> {
        match self {
            PathExpr::Ax(a) if a.is_core() => Some(*a),
            _ => None,
        }
    }
}

impl MuXPathQuery {
    pub fn defined_vars(&self) -> impl Iterator<Item = &str> {
        self.blocks.iter().flat_map(|b| b.equations.iter().map(|e| e.var.as_str()))
    }

    pub fn block_of(&self, var: &str) -> Option<usize> {
        self.blocks
            .iter()
            .position(|b| b.equations.iter().any(|e| e.var == var))
    }

    pub fn equation(&self, var: &str) -> Option<&Equation> {
        self.blocks.iter().flat_map(|b| b.equations.iter()).find(|e| e.var == var)
    }

    pub fn props(&self) -> BTreeSet<String> {
        self.blocks
            .iter()
            .flat_map(|b| b.equations.iter())
            .flat_map(|e| e.body.props())
            .collect()
    }

    /// Heads plus body sizes.
    pub fn size(&self) -> usize {
        self.blocks
            .iter()
            .flat_map(|b| b.equations.iter())
            .map(|e| 1 + e.body.size())
            .sum()
    }

    pub fn equation_count(&self) -> usize {
        self.blocks.iter().map(|b| b.equations.len()).sum()
    }

    /// Renames every variable (heads, uses and goal).
    pub fn rename_vars(&self, f: &dyn Fn(&str) -> String) -> MuXPathQuery {
        MuXPathQuery {
            goal: f(&self.goal),
            blocks: self
                .blocks
                .iter()
                .map(|b| FixpointBlock {
                    kind: b.kind,
                    equations: b
                        .equations
                        .iter()
                        .map(|e| Equation { var: f(&e.var), body: e.body.rename_vars(f) })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Single-block, single-equation query `$var : kind { $var = body }`.
    pub fn single(var: &str, kind: FixKind, body: NodeExpr) -> MuXPathQuery {
        MuXPathQuery {
            goal: var.to_string(),
            blocks: vec![FixpointBlock { kind, equations: vec![Equation { var: var.to_string(), body }] }],
        }
    }
}
