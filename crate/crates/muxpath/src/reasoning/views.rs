use std::collections::BTreeSet;
use std::fmt;

use super::{
    combine, constraints_satisfiable, fresh_var, nominal_constraint, used_vars, verify, ReasoningError, Report,
    RootConstraint,
};
use crate::direct::eval_query_direct;
use crate::emptiness::EmptinessOptions;
use crate::query::{parse_query, validate_query, Axis, MuXPathQuery, NodeExpr, PathExpr};
use crate::tree::{is_prop_name, is_reserved, SiblingTree};

/// A node named by an identifier proposition or by a path of `fchild` and
/// `right` steps from the root.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeRef {
    Identifier(String),
    Path(Vec<Axis>),
}

impl NodeRef {
    /// `name` for an identifier; `fchild/right/...` or `/` (the root) for a
    /// path.
    pub fn parse(text: &str) -> Result<NodeRef, ReasoningError> {
        let t = text.trim();
        if t == "/" {
            return Ok(NodeRef::Path(Vec::new()));
        }
        if t.contains('/') || t == "fchild" || t == "right" {
            return t
                .split('/')
                .map(|s| match s.trim() {
                    "fchild" => Ok(Axis::Fchild),
                    "right" => Ok(Axis::Right),
                    other => Err(ReasoningError::Input(format!("bad step `{other}` in node reference `{t}`"))),
                })
                .collect::<Result<Vec<_>, _>>()
                .map(NodeRef::Path);
        }
        if is_prop_name(t) && !is_reserved(t) {
            Ok(NodeRef::Identifier(t.to_string()))
        } else {
            Err(ReasoningError::Input(format!("bad node reference `{t}`")))
        }
    }

    /// The node denoted in `t`; an identifier must label exactly one node.
    pub fn resolve(&self, t: &SiblingTree) -> Option<usize> {
        match self {
            NodeRef::Identifier(p) => {
                let mut hits = (0..t.len()).filter(|&x| t.label(x).contains(p));
                let first = hits.next()?;
                hits.next().is_none().then_some(first)
            }
            NodeRef::Path(steps) => steps.iter().try_fold(t.root(), |x, ax| match ax {
                Axis::Fchild => t.first_child(x),
                _ => t.next_sibling(x),
            }),
        }
    }

    /// Constraint forcing the referenced node to satisfy `q`.
    fn at(&self, q: &MuXPathQuery, negated: bool) -> RootConstraint {
        let x = fresh_var(&used_vars(q), "X#a");
        let target = if negated { NodeExpr::not(NodeExpr::var(&q.goal)) } else { NodeExpr::var(&q.goal) };
        let body = match self {
            NodeRef::Identifier(p) => NodeExpr::or_all([
                NodeExpr::and(NodeExpr::prop(p), target),
                NodeExpr::dia(PathExpr::ax(Axis::Fchild), NodeExpr::var(&x)),
                NodeExpr::dia(PathExpr::ax(Axis::Right), NodeExpr::var(&x)),
            ]),
            NodeRef::Path(steps) => {
                steps.iter().rev().fold(target, |e, ax| NodeExpr::dia(PathExpr::ax(*ax), e))
            }
        };
        RootConstraint::new(combine(&x, body, std::slice::from_ref(q)))
    }
}

impl fmt::Display for NodeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeRef::Identifier(p) => f.write_str(p),
            NodeRef::Path(s) if s.is_empty() => f.write_str("/"),
            NodeRef::Path(s) => {
                let names: Vec<&str> = s.iter().map(|a| a.name()).collect();
                f.write_str(&names.join("/"))
            }
        }
    }
}

/// A sound view: every referenced node is in the answer of the definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ViewSpec {
    pub name: String,
    pub definition: MuXPathQuery,
    pub extension: Vec<NodeRef>,
}

impl ViewSpec {
    /// Whether `t` has every referenced node, selected by the definition.
    pub fn holds_on(&self, t: &SiblingTree) -> Result<bool, ReasoningError> {
        let sel = eval_query_direct(&self.definition, t)?;
        Ok(self.extension.iter().all(|r| r.resolve(t).is_some_and(|x| sel.contains(&t.address(x)))))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certainty {
    Certain,
    NotCertain { countermodel: SiblingTree, explanation: String },
}

fn identifiers<'a>(refs: impl Iterator<Item = &'a NodeRef>) -> BTreeSet<String> {
    refs.filter_map(|r| match r {
        NodeRef::Identifier(p) => Some(p.clone()),
        NodeRef::Path(_) => None,
    })
    .collect()
}

/// Decides whether `c` is selected by `q` on every tree satisfying the views
/// and the constraints. An identifier `c` is itself required to be an
/// identifier in the countermodels.
pub fn certain_answer(
    q: &MuXPathQuery,
    views: &[ViewSpec],
    gamma: &[RootConstraint],
    c: &NodeRef,
    opts: EmptinessOptions,
) -> Result<Report<Certainty>, ReasoningError> {
    validate_query(q)?;
    let mut all = gamma.to_vec();
    for v in views {
        validate_query(&v.definition)?;
        for r in &v.extension {
            all.push(r.at(&v.definition, false));
        }
    }
    let mut ids = identifiers(views.iter().flat_map(|v| v.extension.iter()));
    ids.extend(identifiers(std::iter::once(c)));
    for p in &ids {
        all.push(nominal_constraint(p)?);
    }
    all.push(c.at(q, true));
    let r = constraints_satisfiable(&all, opts)?;
    let verdict = match r.verdict {
        None => Certainty::Certain,
        Some(tree) => {
            for v in views {
                verify(v.holds_on(&tree)?, || format!("countermodel {tree} violates view {}", v.name))?;
            }
            let x = c.resolve(&tree);
            let selected = eval_query_direct(q, &tree)?;
            verify(x.is_some_and(|x| !selected.contains(&tree.address(x))), || {
                format!("countermodel {tree} does not separate {c} from the query")
            })?;
            let explanation = format!("{c} is node {} and the query does not select it", tree.address(x.unwrap()));
            Certainty::NotCertain { countermodel: tree, explanation }
        }
    };
    Ok(Report { verdict, stats: r.stats })
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|l| if l.trim_start().starts_with('#') { "" } else { l })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Reads stanzas `view NAME { def: <query>; ext: ref, ref }`.
pub fn parse_views(text: &str) -> Result<Vec<ViewSpec>, ReasoningError> {
    let text = strip_comments(text);
    let bad = |msg: String| ReasoningError::Input(format!("views file: {msg}"));
    let mut out = Vec::new();
    let mut rest = text.trim_start();
    while !rest.is_empty() {
        let after = rest.strip_prefix("view").ok_or_else(|| bad("expected `view`".into()))?;
        let open = after.find('{').ok_or_else(|| bad("expected `{`".into()))?;
        let name = after[..open].trim().to_string();
        if name.is_empty() {
            return Err(bad("view without a name".into()));
        }
        let body_start = open + 1;
        let mut depth = 1;
        let mut close = None;
        for (i, ch) in after[body_start..].char_indices() {
            match ch {
                '{' => depth += 1,
                '}' => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(body_start + i);
                        break;
                    }
                }
                _ => {}
            }
        }
        let close = close.ok_or_else(|| bad(format!("view {name} is not closed")))?;
        let body = &after[body_start..close];
        let def_at = body.find("def:").ok_or_else(|| bad(format!("view {name} has no `def:`")))?;
        let ext_at = body.rfind("ext:").ok_or_else(|| bad(format!("view {name} has no `ext:`")))?;
        if ext_at < def_at {
            return Err(bad(format!("view {name}: `def:` must come before `ext:`")));
        }
        let def = body[def_at + 4..ext_at].trim_end();
        let def = def.strip_suffix(';').ok_or_else(|| bad(format!("view {name}: `;` expected before `ext:`")))?;
        let definition = parse_query(def)?;
        let extension = body[ext_at + 4..]
            .trim()
            .trim_end_matches(';')
            .split(',')
            .filter(|s| !s.trim().is_empty())
            .map(NodeRef::parse)
            .collect::<Result<Vec<_>, _>>()?;
        out.push(ViewSpec { name, definition, extension });
        rest = after[close + 1..].trim_start();
    }
    Ok(out)
}
