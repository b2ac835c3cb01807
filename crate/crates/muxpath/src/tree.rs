//! Finite sibling trees, their binary encodings, and the textual tree format.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// The four structural propositions of binary encodings.
pub const FLAGS: [&str; 4] = ["ifc", "irs", "hfc", "hrs"];
pub const IFC: &str = "ifc";
pub const IRS: &str = "irs";
pub const HFC: &str = "hfc";
pub const HRS: &str = "hrs";

pub type Label = BTreeSet<String>;

pub fn is_reserved(name: &str) -> bool {
    FLAGS.contains(&name)
}

pub fn is_prop_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("syntax error at {line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("reserved proposition `{name}` used as a label at {line}:{col}")]
    Reserved { name: String, line: usize, col: usize },
    #[error("binary tree is not well-formed: {0}")]
    NotWellFormed(Violation),
    #[error("invalid node address `{0}`")]
    BadAddress(String),
}

/// A node address: 1-based child indices from the root.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeAddress(pub Vec<u32>);

impl NodeAddress {
    pub fn root() -> Self {
        NodeAddress(Vec::new())
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, i: u32) -> Self {
        let mut v = self.0.clone();
        v.push(i);
        NodeAddress(v)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(NodeAddress(self.0[..self.0.len() - 1].to_vec()))
        }
    }
}

impl fmt::Display for NodeAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "/");
        }
        for i in &self.0 {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl FromStr for NodeAddress {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "/" {
            return Ok(NodeAddress::root());
        }
        let rest = s
            .strip_prefix('/')
            .ok_or_else(|| TreeError::BadAddress(s.to_string()))?;
        rest.split('/')
            .map(|p| match p.parse::<u32>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(TreeError::BadAddress(s.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(NodeAddress)
    }
}

#[derive(Clone, Debug)]
struct SNode {
    label: Label,
    parent: Option<usize>,
    index: u32,
    children: Vec<usize>,
}

/// A finite unranked tree whose nodes carry sets of propositions.
///
/// Nodes live in an arena; id 0 is the root.
#[derive(Clone, Debug)]
pub struct SiblingTree {
    nodes: Vec<SNode>,
}

impl SiblingTree {
    pub fn new(root_label: Label) -> Self {
        SiblingTree {
            nodes: vec![SNode {
                label: root_label,
                parent: None,
                index: 0,
                children: Vec::new(),
            }],
        }
    }

    /// Single-node tree labeled with the given propositions.
    pub fn leaf<I, S>(props: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(props.into_iter().map(Into::into).collect())
    }

    /// Appends a new last child below `parent` and returns its id.
    pub fn add_child(&mut self, parent: usize, label: Label) -> usize {
        let id = self.nodes.len();
        let index = self.nodes[parent].children.len() as u32 + 1;
        self.nodes.push(SNode {
            label,
            parent: Some(parent),
            index,
            children: Vec::new(),
        });
        self.nodes[parent].children.push(id);
        id
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, id: usize) -> &Label {
        &self.nodes[id].label
    }

    pub fn label_mut(&mut self, id: usize) -> &mut Label {
        &mut self.nodes[id].label
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    /// 1-based position among siblings; 0 for the root.
    pub fn index(&self, id: usize) -> u32 {
        self.nodes[id].index
    }

    pub fn first_child(&self, id: usize) -> Option<usize> {
        self.nodes[id].children.first().copied()
    }

    pub fn next_sibling(&self, id: usize) -> Option<usize> {
        let p = self.nodes[id].parent?;
        self.nodes[p]
            .children
            .get(self.nodes[id].index as usize)
            .copied()
    }

    pub fn prev_sibling(&self, id: usize) -> Option<usize> {
        let p = self.nodes[id].parent?;
        let i = self.nodes[id].index as usize;
        if i >= 2 {
            Some(self.nodes[p].children[i - 2])
        } else {
            None
        }
    }

    pub fn address(&self, id: usize) -> NodeAddress {
        let mut v = Vec::new();
        let mut cur = id;
        while let Some(p) = self.nodes[cur].parent {
            v.push(self.nodes[cur].index);
            cur = p;
        }
        v.reverse();
        NodeAddress(v)
    }

    pub fn node_at(&self, addr: &NodeAddress) -> Option<usize> {
        let mut cur = 0;
        for &i in &addr.0 {
            cur = *self.nodes[cur].children.get((i as usize).checked_sub(1)?)?;
        }
        Some(cur)
    }

    /// Node ids in document (pre-)order.
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            out.push(n);
            for &c in self.nodes[n].children.iter().rev() {
                stack.push(c);
            }
        }
        out
    }

    /// All propositions used anywhere in the tree.
    pub fn props(&self) -> BTreeSet<String> {
        self.nodes
            .iter()
            .flat_map(|n| n.label.iter().cloned())
            .collect()
    }

    /// A chain of `n` nodes, each the only child of the previous one.
    pub fn chain(n: usize, label: &Label) -> Self {
        let mut t = SiblingTree::new(label.clone());
        let mut cur = 0;
        for _ in 1..n {
            cur = t.add_child(cur, label.clone());
        }
        t
    }
}

impl PartialEq for SiblingTree {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            let (na, nb) = (&self.nodes[a], &other.nodes[b]);
            if na.label != nb.label || na.children.len() != nb.children.len() {
                return false;
            }
            stack.extend(na.children.iter().copied().zip(nb.children.iter().copied()));
        }
        true
    }
}

impl Eq for SiblingTree {}

impl fmt::Display for SiblingTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_tree(self))
    }
}

impl FromStr for SiblingTree {
    type Err = TreeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_tree(s)
    }
}

enum Tok {
    Open,
    Close,
    Ident(String),
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize, usize)>, TreeError> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            match c {
                '#' => break,
                '(' => {
                    out.push((Tok::Open, line_no, col));
                    i += 1;
                }
                ')' => {
                    out.push((Tok::Close, line_no, col));
                    i += 1;
                }
                c if c.is_whitespace() => i += 1,
                c if c.is_ascii_alphanumeric() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    out.push((Tok::Ident(word), line_no, col));
                }
                other => {
                    return Err(TreeError::Syntax {
                        line: line_no,
                        col,
                        msg: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
    }
    Ok(out)
}

/// Parses the parenthesized tree format, e.g. `(doc (red) (blue (red)))`.
pub fn parse_tree(text: &str) -> Result<SiblingTree, TreeError> {
    let toks = tokenize(text)?;
    let end_pos = || {
        let line = text.lines().count().max(1);
        let col = text.lines().last().map(|l| l.chars().count() + 1).unwrap_or(1);
        (line, col)
    };
    let mut iter = toks.into_iter().peekable();
    match iter.next() {
        Some((Tok::Open, _, _)) => {}
        Some((_, line, col)) => {
            return Err(TreeError::Syntax { line, col, msg: "expected `(`".into() })
        }
        None => {
            let (line, col) = end_pos();
            return Err(TreeError::Syntax { line, col, msg: "empty input".into() });
        }
    }
    let mut tree = SiblingTree::new(Label::new());
    // (node id, whether a child has been seen)
    let mut stack: Vec<(usize, bool)> = vec![(0, false)];
    for (tok, line, col) in iter {
        let Some(top) = stack.last_mut() else {
            return Err(TreeError::Syntax { line, col, msg: "trailing input after tree".into() });
        };
        match tok {
            Tok::Ident(name) => {
                if top.1 {
                    return Err(TreeError::Syntax {
                        line,
                        col,
                        msg: format!("label `{name}` after a child node"),
                    });
                }
                if is_reserved(&name) {
                    return Err(TreeError::Reserved { name, line, col });
                }
                if !is_prop_name(&name) {
                    return Err(TreeError::Syntax {
                        line,
                        col,
                        msg: format!("label `{name}` must start with a lowercase letter"),
                    });
                }
                tree.nodes[top.0].label.insert(name);
            }
            Tok::Open => {
                top.1 = true;
                let parent = top.0;
                let id = tree.add_child(parent, Label::new());
                stack.push((id, false));
            }
            Tok::Close => {
                stack.pop();
            }
        }
    }
    if !stack.is_empty() {
        let (line, col) = end_pos();
        return Err(TreeError::Syntax { line, col, msg: "unclosed `(`".into() });
    }
    Ok(tree)
}

/// Renders a tree in the parenthesized format with sorted labels.
pub fn render_tree(t: &SiblingTree) -> String {
    enum Step {
        Enter(usize),
        Exit,
    }
    let mut out = String::new();
    let mut stack = vec![Step::Enter(0)];
    while let Some(step) = stack.pop() {
        match step {
            Step::Enter(n) => {
                if !out.is_empty() && !out.ends_with('(') {
                    out.push(' ');
                }
                out.push('(');
                let mut first = true;
                for l in &t.nodes[n].label {
                    if !first {
                        out.push(' ');
                    }
                    out.push_str(l);
                    first = false;
                }
                stack.push(Step::Exit);
                for &c in t.nodes[n].children.iter().rev() {
                    stack.push(Step::Enter(c));
                }
            }
            Step::Exit => out.push(')'),
        }
    }
    out
}

#[derive(Clone, Debug)]
struct BNode {
    label: Label,
    parent: Option<(usize, u8)>,
    kids: [Option<usize>; 2],
}

/// A binary tree with children in directions 1 and 2.
///
/// Labels may include the structural flags; their consistency is checked by
/// [`well_formed_check`], not enforced by the type.
#[derive(Clone, Debug)]
pub struct BinaryTree {
    nodes: Vec<BNode>,
}

impl BinaryTree {
    pub fn new(root_label: Label) -> Self {
        BinaryTree {
            nodes: vec![BNode { label: root_label, parent: None, kids: [None, None] }],
        }
    }

    /// Adds a child in direction `dir` (1 or 2); replaces nothing.
    pub fn add_child(&mut self, parent: usize, dir: u8, label: Label) -> usize {
        assert!(dir == 1 || dir == 2, "binary direction must be 1 or 2");
        assert!(self.nodes[parent].kids[dir as usize - 1].is_none(), "child slot taken");
        let id = self.nodes.len();
        self.nodes.push(BNode { label, parent: Some((parent, dir)), kids: [None, None] });
        self.nodes[parent].kids[dir as usize - 1] = Some(id);
        id
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn label(&self, id: usize) -> &Label {
        &self.nodes[id].label
    }

    pub fn label_mut(&mut self, id: usize) -> &mut Label {
        &mut self.nodes[id].label
    }

    pub fn child(&self, id: usize, dir: u8) -> Option<usize> {
        self.nodes[id].kids[dir as usize - 1]
    }

    /// Parent id and the direction leading from it to `id`.
    pub fn parent(&self, id: usize) -> Option<(usize, u8)> {
        self.nodes[id].parent
    }

    pub fn address(&self, id: usize) -> NodeAddress {
        let mut v = Vec::new();
        let mut cur = id;
        while let Some((p, d)) = self.nodes[cur].parent {
            v.push(d as u32);
            cur = p;
        }
        v.reverse();
        NodeAddress(v)
    }

    pub fn node_at(&self, addr: &NodeAddress) -> Option<usize> {
        let mut cur = 0;
        for &d in &addr.0 {
            if d != 1 && d != 2 {
                return None;
            }
            cur = self.child(cur, d as u8)?;
        }
        Some(cur)
    }

    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![0usize];
        while let Some(n) = stack.pop() {
            out.push(n);
            for d in [2u8, 1] {
                if let Some(c) = self.child(n, d) {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Copy of the subtree reachable from the root by following children only
    /// where the parent carries the matching `hfc` / `hrs` flag.
    pub fn flag_core(&self) -> BinaryTree {
        let mut out = BinaryTree::new(self.nodes[0].label.clone());
        let mut stack = vec![(0usize, 0usize)];
        while let Some((src, dst)) = stack.pop() {
            for (d, flag) in [(1u8, HFC), (2u8, HRS)] {
                if !self.nodes[src].label.contains(flag) {
                    continue;
                }
                if let Some(c) = self.child(src, d) {
                    let nc = out.add_child(dst, d, self.nodes[c].label.clone());
                    stack.push((c, nc));
                }
            }
        }
        out
    }
}

impl PartialEq for BinaryTree {
    fn eq(&self, other: &Self) -> bool {
        if self.len() != other.len() {
            return false;
        }
        let mut stack = vec![(0usize, 0usize)];
        while let Some((a, b)) = stack.pop() {
            if self.nodes[a].label != other.nodes[b].label {
                return false;
            }
            for d in [1u8, 2] {
                match (self.child(a, d), other.child(b, d)) {
                    (None, None) => {}
                    (Some(x), Some(y)) => stack.push((x, y)),
                    _ => return false,
                }
            }
        }
        true
    }
}

impl Eq for BinaryTree {}

impl fmt::Display for BinaryTree {
    /// Prints `(labels [1: child] [2: child])`, a debugging view.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        enum Step {
            Enter(usize, Option<u8>),
            Text(&'static str),
        }
        let mut stack = vec![Step::Enter(0, None)];
        while let Some(s) = stack.pop() {
            match s {
                Step::Text(t) => f.write_str(t)?,
                Step::Enter(n, dir) => {
                    match dir {
                        Some(1) => f.write_str(" 1:")?,
                        Some(_) => f.write_str(" 2:")?,
                        None => {}
                    }
                    f.write_str("(")?;
                    let labels: Vec<&str> = self.nodes[n].label.iter().map(String::as_str).collect();
                    f.write_str(&labels.join(" "))?;
                    stack.push(Step::Text(")"));
                    for d in [2u8, 1] {
                        if let Some(c) = self.child(n, d) {
                            stack.push(Step::Enter(c, Some(d)));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The binary encoding of a sibling tree.
///
/// Binary node ids coincide with the sibling node ids of `t`: the first child
/// of a node sits in direction 1, its next sibling in direction 2.
pub fn encode_binary(t: &SiblingTree) -> BinaryTree {
    let mut nodes: Vec<BNode> = (0..t.len())
        .map(|id| BNode { label: t.nodes[id].label.clone(), parent: None, kids: [None, None] })
        .collect();
    for id in 0..t.len() {
        if let Some(c) = t.first_child(id) {
            nodes[id].kids[0] = Some(c);
            nodes[id].label.insert(HFC.to_string());
            nodes[c].parent = Some((id, 1));
            nodes[c].label.insert(IFC.to_string());
        }
        if let Some(r) = t.next_sibling(id) {
            nodes[id].kids[1] = Some(r);
            nodes[id].label.insert(HRS.to_string());
            nodes[r].parent = Some((id, 2));
            nodes[r].label.insert(IRS.to_string());
        }
    }
    BinaryTree { nodes }
}

/// First violated well-formedness condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub at: NodeAddress,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "at {}: {}", self.at, self.reason)
    }
}

/// Checks the structural flag conditions at every node.
pub fn well_formed_check(b: &BinaryTree) -> Result<(), Violation> {
    let root = &b.nodes[0].label;
    for f in [IFC, IRS, HRS] {
        if root.contains(f) {
            return Err(Violation { at: NodeAddress::root(), reason: format!("root labeled {f}") });
        }
    }
    for id in b.preorder() {
        let label = &b.nodes[id].label;
        if label.contains(HFC) {
            match b.child(id, 1) {
                None => {
                    return Err(Violation { at: b.address(id), reason: "hfc without a 1-child".into() })
                }
                Some(c) => {
                    let cl = &b.nodes[c].label;
                    if !cl.contains(IFC) || cl.contains(IRS) {
                        return Err(Violation {
                            at: b.address(c),
                            reason: "1-child must carry ifc and not irs".into(),
                        });
                    }
                }
            }
        }
        if label.contains(HRS) {
            match b.child(id, 2) {
                None => {
                    return Err(Violation { at: b.address(id), reason: "hrs without a 2-child".into() })
                }
                Some(c) => {
                    let cl = &b.nodes[c].label;
                    if !cl.contains(IRS) || cl.contains(IFC) {
                        return Err(Violation {
                            at: b.address(c),
                            reason: "2-child must carry irs and not ifc".into(),
                        });
                    }
                }
            }
        }
    }
    Ok(())
}

/// Decodes a well-formed binary tree; also returns, for each binary node id,
/// the sibling node it became (if it was kept).
pub fn decode_binary_mapped(b: &BinaryTree) -> Result<(SiblingTree, Vec<Option<usize>>), TreeError> {
    well_formed_check(b).map_err(TreeError::NotWellFormed)?;
    let strip = |l: &Label| -> Label { l.iter().filter(|p| !is_reserved(p)).cloned().collect() };
    let mut map = vec![None; b.len()];
    let mut t = SiblingTree::new(strip(&b.nodes[0].label));
    map[0] = Some(0);
    // (binary node, sibling node)
    let mut stack = vec![(0usize, 0usize)];
    while let Some((bn, sn)) = stack.pop() {
        if !b.nodes[bn].label.contains(HFC) {
            continue;
        }
        let mut cur = b.child(bn, 1).expect("checked by well_formed_check");
        loop {
            let id = t.add_child(sn, strip(&b.nodes[cur].label));
            map[cur] = Some(id);
            stack.push((cur, id));
            if !b.nodes[cur].label.contains(HRS) {
                break;
            }
            cur = b.child(cur, 2).expect("checked by well_formed_check");
        }
    }
    // children were appended in sibling order, but the stack visits nodes in
    // an arbitrary order, so ids are not preorder; that is fine for the arena.
    Ok((t, map))
}

/// Decodes a well-formed binary tree to the sibling tree it denotes.
pub fn decode_binary(b: &BinaryTree) -> Result<SiblingTree, TreeError> {
    decode_binary_mapped(b).map(|(t, _)| t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lbl(xs: &[&str]) -> Label {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_example() {
        let t = parse_tree("(doc (red) (blue (red)))").unwrap();
        assert_eq!(t.len(), 4);
        assert_eq!(t.label(0), &lbl(&["doc"]));
        let n = t.node_at(&"/2/1".parse().unwrap()).unwrap();
        assert_eq!(t.label(n), &lbl(&["red"]));
    }

    #[test]
    fn parses_single_node_and_comments() {
        let t = parse_tree("# a tree\n(a a) # dup\n").unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.label(0), &lbl(&["a"]));
    }

    #[test]
    fn rejects_reserved_label() {
        let e = parse_tree("(a (ifc))").unwrap_err();
        assert!(matches!(e, TreeError::Reserved { ref name, line: 1, col: 5 } if name == "ifc"));
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(parse_tree("(a (b)"), Err(TreeError::Syntax { .. })));
        assert!(matches!(parse_tree("(a) (b)"), Err(TreeError::Syntax { .. })));
        assert!(matches!(parse_tree("(a (b) c)"), Err(TreeError::Syntax { .. })));
        assert!(matches!(parse_tree("(A)"), Err(TreeError::Syntax { .. })));
        assert!(matches!(parse_tree(""), Err(TreeError::Syntax { .. })));
    }

    #[test]
    fn renders_sorted_and_unlabeled() {
        let t = parse_tree("(b a (c) ())").unwrap();
        assert_eq!(render_tree(&t), "(a b (c) ())");
        assert_eq!(render_tree(&SiblingTree::leaf(["a"])), "(a)");
    }

    #[test]
    fn addresses_render() {
        assert_eq!(NodeAddress::root().to_string(), "/");
        assert_eq!(NodeAddress(vec![2, 1]).to_string(), "/2/1");
        assert_eq!("/2/1".parse::<NodeAddress>().unwrap(), NodeAddress(vec![2, 1]));
        assert!("/0".parse::<NodeAddress>().is_err());
    }

    #[test]
    fn encodes_example() {
        let b = encode_binary(&parse_tree("(a (b) (c))").unwrap());
        assert_eq!(b.label(0), &lbl(&["a", "hfc"]));
        let n1 = b.node_at(&NodeAddress(vec![1])).unwrap();
        assert_eq!(b.label(n1), &lbl(&["b", "ifc", "hrs"]));
        let n12 = b.node_at(&NodeAddress(vec![1, 2])).unwrap();
        assert_eq!(b.label(n12), &lbl(&["c", "irs"]));
        assert_eq!(b.len(), 3);
    }

    #[test]
    fn encodes_single_and_chain() {
        let b = encode_binary(&SiblingTree::leaf(["a"]));
        assert_eq!(b.label(0), &lbl(&["a"]));
        let b = encode_binary(&parse_tree("(a (b (c)))").unwrap());
        let n1 = b.node_at(&NodeAddress(vec![1])).unwrap();
        let n11 = b.node_at(&NodeAddress(vec![1, 1])).unwrap();
        assert_eq!(b.label(0), &lbl(&["a", "hfc"]));
        assert_eq!(b.label(n1), &lbl(&["b", "hfc", "ifc"]));
        assert_eq!(b.label(n11), &lbl(&["c", "ifc"]));
    }

    #[test]
    fn decodes_example_and_ignores_unflagged() {
        let mut b = BinaryTree::new(lbl(&["a", "hfc"]));
        let n1 = b.add_child(0, 1, lbl(&["b", "ifc", "hrs"]));
        b.add_child(n1, 2, lbl(&["c", "irs"]));
        assert_eq!(decode_binary(&b).unwrap(), parse_tree("(a (b) (c))").unwrap());

        let mut b = BinaryTree::new(lbl(&["a"]));
        b.add_child(0, 1, lbl(&["b", "ifc"]));
        assert_eq!(decode_binary(&b).unwrap(), SiblingTree::leaf(["a"]));
    }

    #[test]
    fn well_formedness_violations() {
        let b = BinaryTree::new(lbl(&["irs"]));
        assert_eq!(well_formed_check(&b).unwrap_err().at, NodeAddress::root());
        let mut b = BinaryTree::new(lbl(&["a", "hfc"]));
        b.add_child(0, 1, lbl(&["b"]));
        let v = well_formed_check(&b).unwrap_err();
        assert_eq!(v.at, NodeAddress(vec![1]));
        assert!(decode_binary(&b).is_err());
    }

    /// Independent encoder: builds flags from the relation definitions on
    /// addresses rather than from the arena links.
    fn relation_encode(t: &SiblingTree) -> Vec<(NodeAddress, Label)> {
        let addrs: BTreeSet<NodeAddress> = (0..t.len()).map(|i| t.address(i)).collect();
        let mut out = Vec::new();
        for id in 0..t.len() {
            let x = t.address(id);
            let mut l = t.label(id).clone();
            if addrs.contains(&x.child(1)) {
                l.insert("hfc".into());
            }
            let mut bin = vec![];
            let mut right_exists = false;
            if let Some(&last) = x.0.last() {
                let mut y = x.clone();
                *y.0.last_mut().unwrap() = last + 1;
                right_exists = addrs.contains(&y);
                if last == 1 {
                    l.insert("ifc".into());
                } else {
                    l.insert("irs".into());
                }
            }
            if right_exists {
                l.insert("hrs".into());
            }
            // binary address: each sibling step i becomes 1 followed by (i-1) 2s
            for &i in &x.0 {
                bin.push(1);
                bin.extend(std::iter::repeat(2).take(i as usize - 1));
            }
            out.push((NodeAddress(bin), l));
        }
        out.sort();
        out
    }

    pub(crate) fn arb_tree(max_nodes: usize) -> impl Strategy<Value = SiblingTree> {
        let labels = prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c"]), 0..3);
        (prop::collection::vec((any::<prop::sample::Index>(), labels), 0..max_nodes), labels_root())
            .prop_map(|(spec, root)| {
                let mut t = SiblingTree::new(root.into_iter().map(String::from).collect());
                for (idx, l) in spec {
                    let p = idx.index(t.len());
                    t.add_child(p, l.into_iter().map(String::from).collect());
                }
                t
            })
    }

    fn labels_root() -> impl Strategy<Value = BTreeSet<&'static str>> {
        prop::collection::btree_set(prop::sample::select(vec!["a", "b", "c"]), 0..3)
    }

    proptest! {
        #[test]
        fn render_parse_roundtrip(t in arb_tree(12)) {
            prop_assert_eq!(parse_tree(&render_tree(&t)).unwrap(), t);
        }

        #[test]
        fn encode_decode_roundtrip(t in arb_tree(12)) {
            let b = encode_binary(&t);
            prop_assert!(well_formed_check(&b).is_ok());
            prop_assert_eq!(decode_binary(&b).unwrap(), t);
        }

        #[test]
        fn encode_matches_relation_oracle(t in arb_tree(10)) {
            let b = encode_binary(&t);
            let mut got: Vec<(NodeAddress, Label)> =
                (0..b.len()).map(|i| (b.address(i), b.label(i).clone())).collect();
            got.sort();
            prop_assert_eq!(got, relation_encode(&t));
        }

        #[test]
        fn encode_preserves_relation_counts(t in arb_tree(12)) {
            let b = encode_binary(&t);
            let fchild = (0..b.len()).filter(|&i| b.child(i, 1).is_some()).count();
            let right = (0..b.len()).filter(|&i| b.child(i, 2).is_some()).count();
            let inner = (0..t.len()).filter(|&i| !t.children(i).is_empty()).count();
            let non_last = (0..t.len()).filter(|&i| t.next_sibling(i).is_some()).count();
            prop_assert_eq!(b.len(), t.len());
            prop_assert_eq!(fchild, inner);
            prop_assert_eq!(right, non_last);
        }
    }

    #[test]
    fn deep_chain_is_iterative() {
        let t = SiblingTree::chain(200_000, &lbl(&["a"]));
        let s = render_tree(&t);
        let back = parse_tree(&s).unwrap();
        assert_eq!(back.len(), 200_000);
        let b = encode_binary(&back);
        assert!(well_formed_check(&b).is_ok());
        assert_eq!(decode_binary(&b).unwrap().len(), 200_000);
    }
}
