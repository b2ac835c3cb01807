use std::fmt;

use super::{ReasoningError, RootConstraint};
use crate::query::{parse_node_expr, Axis, NodeExpr, PathExpr};
use crate::rxpath::lower_paths;
use crate::tree::{is_prop_name, is_reserved};

fn check_name(p: &str) -> Result<(), ReasoningError> {
    if is_prop_name(p) && !is_reserved(p) {
        Ok(())
    } else {
        Err(ReasoningError::Input(format!("`{p}` is not a proposition name")))
    }
}

/// Forces `p` to hold at exactly one node.
pub fn nominal_constraint(p: &str) -> Result<RootConstraint, ReasoningError> {
    check_name(p)?;
    let text = format!(
        "<u>{p} & [u]((<fchild/u>{p} -> [right/u]!{p}) & (<right/u>{p} -> [fchild/u]!{p}) & ({p} -> [(fchild | right)/u]!{p}))"
    );
    let e = parse_node_expr(&text)?;
    Ok(RootConstraint::new(lower_paths(&e)))
}

/// Content model of an element type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Particle {
    Empty,
    Name(String),
    Seq(Vec<Particle>),
    Alt(Vec<Particle>),
    Star(Box<Particle>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DtdRule {
    pub element: String,
    pub content: Particle,
}

impl fmt::Display for Particle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Particle::Empty => f.write_str("EMPTY"),
            Particle::Name(n) => f.write_str(n),
            Particle::Seq(xs) | Particle::Alt(xs) => {
                let sep = if matches!(self, Particle::Seq(_)) { ", " } else { " | " };
                f.write_str("(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
            Particle::Star(x) => write!(f, "{x}*"),
        }
    }
}

struct RuleParser<'a> {
    chars: Vec<char>,
    pos: usize,
    text: &'a str,
}

impl RuleParser<'_> {
    fn err(&self, msg: &str) -> ReasoningError {
        ReasoningError::Input(format!("DTD rule `{}`: {msg} at offset {}", self.text, self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn name(&mut self) -> Result<String, ReasoningError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.chars.len() && (self.chars[self.pos].is_ascii_alphanumeric() || self.chars[self.pos] == '_') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected a name"));
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn alt(&mut self) -> Result<Particle, ReasoningError> {
        let mut xs = vec![self.seq()?];
        while self.eat('|') {
            xs.push(self.seq()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Particle::Alt(xs) })
    }

    fn seq(&mut self) -> Result<Particle, ReasoningError> {
        let mut xs = vec![self.postfix()?];
        while self.eat(',') {
            xs.push(self.postfix()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Particle::Seq(xs) })
    }

    fn postfix(&mut self) -> Result<Particle, ReasoningError> {
        let mut x = if self.eat('(') {
            let x = self.alt()?;
            if !self.eat(')') {
                return Err(self.err("expected `)`"));
            }
            x
        } else {
            let n = self.name()?;
            if n == "EMPTY" {
                Particle::Empty
            } else {
                check_name(&n)?;
                Particle::Name(n)
            }
        };
        loop {
            if self.eat('*') {
                x = Particle::Star(Box::new(x));
            } else if self.eat('+') {
                x = Particle::Seq(vec![x.clone(), Particle::Star(Box::new(x))]);
            } else if self.eat('?') {
                x = Particle::Alt(vec![x, Particle::Empty]);
            } else {
                return Ok(x);
            }
        }
    }
}

/// Parses `a -> b, (c* | d), e`. Names are propositions; `EMPTY` is the
/// empty content; `*`, `+` and `?` are postfix.
pub fn parse_dtd_rule(text: &str) -> Result<DtdRule, ReasoningError> {
    let mut p = RuleParser { chars: text.chars().collect(), pos: 0, text };
    let element = p.name()?;
    check_name(&element)?;
    if !(p.eat('-') && p.chars.get(p.pos) == Some(&'>')) {
        return Err(p.err("expected `->`"));
    }
    p.pos += 1;
    let content = p.alt()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(DtdRule { element, content })
}

fn nullable(x: &Particle) -> bool {
    match x {
        Particle::Empty | Particle::Star(_) => true,
        Particle::Name(_) => false,
        Particle::Seq(xs) => xs.iter().all(nullable),
        Particle::Alt(xs) => xs.iter().any(nullable),
    }
}

/// The words of `x` with `n` removed from their front, as a particle; `None`
/// when no word starts with `n`.
fn derive(x: &Particle, n: &str) -> Option<Particle> {
    match x {
        Particle::Empty => None,
        Particle::Name(m) => (m == n).then_some(Particle::Empty),
        Particle::Star(y) => derive(y, n).map(|d| seq(vec![d, x.clone()])),
        Particle::Alt(xs) => {
            let ds: Vec<Particle> = xs.iter().filter_map(|y| derive(y, n)).collect();
            match ds.len() {
                0 => None,
                1 => ds.into_iter().next(),
                _ => Some(Particle::Alt(ds)),
            }
        }
        Particle::Seq(xs) => {
            let mut alts = Vec::new();
            for (i, y) in xs.iter().enumerate() {
                if let Some(d) = derive(y, n) {
                    let mut rest = vec![d];
                    rest.extend_from_slice(&xs[i + 1..]);
                    alts.push(seq(rest));
                }
                if !nullable(y) {
                    break;
                }
            }
            match alts.len() {
                0 => None,
                1 => alts.pop(),
                _ => Some(Particle::Alt(alts)),
            }
        }
    }
}

fn seq(xs: Vec<Particle>) -> Particle {
    let mut flat: Vec<Particle> = Vec::new();
    for x in xs {
        match x {
            Particle::Empty => {}
            Particle::Seq(ys) => flat.extend(ys),
            other => flat.push(other),
        }
    }
    match flat.len() {
        0 => Particle::Empty,
        1 => flat.pop().unwrap(),
        _ => Particle::Seq(flat),
    }
}

fn first_names(x: &Particle, out: &mut Vec<String>) {
    match x {
        Particle::Empty => {}
        Particle::Name(n) => {
            if !out.contains(n) {
                out.push(n.clone());
            }
        }
        Particle::Star(y) => first_names(y, out),
        Particle::Alt(xs) => xs.iter().for_each(|y| first_names(y, out)),
        Particle::Seq(xs) => {
            for y in xs {
                first_names(y, out);
                if !nullable(y) {
                    break;
                }
            }
        }
    }
}

fn fold(pieces: Vec<PathExpr>) -> PathExpr {
    pieces.into_iter().reduce(PathExpr::seq).unwrap_or_else(|| PathExpr::test(NodeExpr::True))
}

/// Path pieces along `right` reading the words of `x`, each name entered by
/// one `right` step.
fn sibling_pieces(x: &Particle) -> Vec<PathExpr> {
    match x {
        Particle::Empty => vec![PathExpr::test(NodeExpr::True)],
        Particle::Name(n) => vec![PathExpr::ax(Axis::Right), PathExpr::test(NodeExpr::prop(n))],
        Particle::Star(y) => vec![PathExpr::star(fold(sibling_pieces(y)))],
        Particle::Seq(xs) => xs.iter().flat_map(sibling_pieces).collect(),
        Particle::Alt(xs) => vec![xs.iter().map(|y| fold(sibling_pieces(y))).reduce(PathExpr::union).unwrap()],
    }
}

/// The node expression an element's children must satisfy: a first child
/// followed along `right` by a word of the content model, with nothing
/// after it.
pub fn content_expr(content: &Particle) -> NodeExpr {
    let mut firsts = Vec::new();
    first_names(content, &mut firsts);
    let mut cases: Vec<NodeExpr> = firsts
        .iter()
        .map(|n| {
            let rest = derive(content, n).expect("first name derives");
            let mut pieces = vec![PathExpr::ax(Axis::Fchild), PathExpr::test(NodeExpr::prop(n))];
            if rest != Particle::Empty {
                pieces.extend(sibling_pieces(&rest));
            }
            NodeExpr::dia(fold(pieces), NodeExpr::boxed(PathExpr::ax(Axis::Right), NodeExpr::False))
        })
        .collect();
    if nullable(content) {
        cases.push(NodeExpr::boxed(PathExpr::ax(Axis::Fchild), NodeExpr::False));
    }
    NodeExpr::or_all(cases)
}

/// `[u](element -> content)`, lowered to core µXPath.
pub fn dtd_rule_constraint(rule: &DtdRule) -> RootConstraint {
    let e = NodeExpr::boxed(
        PathExpr::star(PathExpr::union(PathExpr::ax(Axis::Fchild), PathExpr::ax(Axis::Right))),
        NodeExpr::implies(NodeExpr::prop(&rule.element), content_expr(&rule.content)),
    );
    RootConstraint::new(lower_paths(&e))
}
