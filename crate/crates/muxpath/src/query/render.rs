use std::fmt;

use super::ast::{Axis, MuXPathQuery, NodeExpr, PathExpr};

// Precedence levels, loosest first.
const IMPLIES: u8 = 0;
const OR: u8 = 1;
const AND: u8 = 2;
const UNARY: u8 = 3;

fn expr_level(e: &NodeExpr) -> u8 {
    match e {
        NodeExpr::Implies(..) => IMPLIES,
        NodeExpr::Or(..) => OR,
        NodeExpr::And(..) => AND,
        _ => UNARY,
    }
}

fn write_expr(out: &mut String, e: &NodeExpr, min: u8) {
    let paren = expr_level(e) < min;
    if paren {
        out.push('(');
    }
    match e {
        NodeExpr::True => out.push_str("true"),
        NodeExpr::False => out.push_str("false"),
        NodeExpr::Prop(p) => out.push_str(p),
        NodeExpr::Var(v) => {
            out.push('$');
            out.push_str(v);
        }
        NodeExpr::Not(x) => {
            out.push('!');
            write_expr(out, x, UNARY);
        }
        NodeExpr::And(a, b) => {
            write_expr(out, a, AND);
            out.push_str(" & ");
            write_expr(out, b, UNARY);
        }
        NodeExpr::Or(a, b) => {
            write_expr(out, a, OR);
            out.push_str(" | ");
            write_expr(out, b, AND);
        }
        NodeExpr::Implies(a, b) => {
            write_expr(out, a, OR);
            out.push_str(" -> ");
            write_expr(out, b, IMPLIES);
        }
        NodeExpr::Diamond(p, x) => {
            out.push('<');
            write_path(out, p, P_UNION);
            out.push('>');
            write_expr(out, x, UNARY);
        }
        NodeExpr::Box(p, x) => {
            out.push('[');
            write_path(out, p, P_UNION);
            out.push(']');
            write_expr(out, x, UNARY);
        }
    }
    if paren {
        out.push(')');
    }
}

const P_UNION: u8 = 0;
const P_SEQ: u8 = 1;
const P_POST: u8 = 2;

fn path_level(p: &PathExpr) -> u8 {
    match p {
        PathExpr::Union(..) => P_UNION,
        PathExpr::Seq(..) => P_SEQ,
        _ => P_POST,
    }
}

fn write_path(out: &mut String, p: &PathExpr, min: u8) {
    let paren = path_level(p) < min;
    if paren {
        out.push('(');
    }
    match p {
        PathExpr::Ax(a) => {
            out.push_str(a.name());
            if !a.is_forward() {
                out.push_str("^-");
            }
        }
        PathExpr::Inverse(x) => {
            if let PathExpr::Ax(_) = **x {
                // `axis^-` would re-parse as the inverse axis itself
                out.push('(');
                write_path(out, x, P_UNION);
                out.push(')');
            } else {
                write_path(out, x, P_POST);
            }
            out.push_str("^-");
        }
        PathExpr::Star(x) => {
            match **x {
                PathExpr::Ax(a) if !a.is_forward() => {
                    out.push('(');
                    write_path(out, x, P_UNION);
                    out.push(')');
                }
                _ => write_path(out, x, P_POST),
            }
            out.push('*');
        }
        PathExpr::Test(e) => {
            out.push_str("?(");
            write_expr(out, e, IMPLIES);
            out.push(')');
        }
        PathExpr::Seq(a, b) => {
            write_path(out, a, P_SEQ);
            out.push('/');
            write_path(out, b, P_POST);
        }
        PathExpr::Union(a, b) => {
            write_path(out, a, P_UNION);
            out.push_str(" | ");
            write_path(out, b, P_SEQ);
        }
    }
    if paren {
        out.push(')');
    }
}

pub fn render_expr(e: &NodeExpr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, IMPLIES);
    s
}

pub fn render_path(p: &PathExpr) -> String {
    let mut s = String::new();
    write_path(&mut s, p, P_UNION);
    s
}

/// Renders a query in the concrete syntax: goal first, blocks in stored order.
pub fn render_query(q: &MuXPathQuery) -> String {
    let mut s = format!("${} :", q.goal);
    for b in &q.blocks {
        s.push(' ');
        s.push_str(b.kind.keyword());
        s.push_str(" { ");
        for (i, eq) in b.equations.iter().enumerate() {
            if i > 0 {
                s.push_str("; ");
            }
            s.push('$');
            s.push_str(&eq.var);
            s.push_str(" = ");
            write_expr(&mut s, &eq.body, IMPLIES);
        }
        s.push_str(" }");
    }
    s
}

impl fmt::Display for NodeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_expr(self))
    }
}

impl fmt::Display for PathExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_path(self))
    }
}

impl fmt::Display for MuXPathQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_query(self))
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())?;
        if !self.is_forward() {
            f.write_str("^-")?;
        }
        Ok(())
    }
}
