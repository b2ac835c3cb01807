use std::collections::{BTreeSet, HashSet};

use super::ast::{Axis, Equation, FixKind, FixpointBlock, MuXPathQuery, NodeExpr, PathExpr};
use super::QueryError;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Var(String),
    Ident(String),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 19] = [
    "->", "^-", "(", ")", "{", "}", "<", ">", "[", "]", ":", ";", "=", "!", "&", "|", "?", "/", "*",
];

pub(crate) fn is_var_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '#' || c == '~'
}

fn lex(text: &str) -> Result<Vec<Spanned>, QueryError> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut col = 1;
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        if c == '#' {
            // comment to end of line
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c == '$' {
            let start = i + 1;
            let mut j = start;
            if j < chars.len() && (chars[j].is_ascii_alphabetic() || chars[j] == '_') {
                while j < chars.len() && is_var_char(chars[j]) {
                    j += 1;
                }
            }
            if j == start {
                return Err(QueryError::Syntax { line, col, msg: "expected a variable name after `$`".into() });
            }
            let name: String = chars[start..j].iter().collect();
            col += j - i;
            i = j;
            out.push(Spanned { tok: Tok::Var(name), line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                j += 1;
            }
            let name: String = chars[i..j].iter().collect();
            col += j - i;
            i = j;
            out.push(Spanned { tok: Tok::Ident(name), line: start_line, col: start_col });
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMBOLS.iter().find(|s| rest.starts_with(**s));
        match sym {
            Some(s) => {
                let n = s.chars().count();
                i += n;
                col += n;
                out.push(Spanned { tok: Tok::Sym(s), line: start_line, col: start_col });
            }
            None => {
                return Err(QueryError::Syntax { line, col, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

type PResult<T> = Result<T, QueryError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let t = &self.toks[self.pos];
        Err(QueryError::Syntax { line: t.line, col: t.col, msg: msg.into() })
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Var(v) => format!("`${v}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> PResult<()> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.err(format!("expected `{sym}`, found {}", self.describe()))
        }
    }

    fn var(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(v)
            }
            _ => self.err(format!("expected a variable, found {}", self.describe())),
        }
    }

    fn query(&mut self) -> PResult<MuXPathQuery> {
        let goal = self.var()?;
        self.expect(":")?;
        let mut blocks = Vec::new();
        loop {
            let kind = match self.peek() {
                Tok::Ident(k) if k == "lfp" => FixKind::Lfp,
                Tok::Ident(k) if k == "gfp" => FixKind::Gfp,
                Tok::Eof if !blocks.is_empty() => break,
                _ => return self.err(format!("expected `lfp` or `gfp`, found {}", self.describe())),
            };
            self.next();
            self.expect("{")?;
            let mut equations = Vec::new();
            loop {
                if self.eat("}") {
                    break;
                }
                let var = self.var()?;
                self.expect("=")?;
                let body = self.expr()?;
                equations.push(Equation { var, body });
                if self.eat(";") {
                    continue;
                }
                self.expect("}")?;
                break;
            }
            if equations.is_empty() {
                return self.err("empty fixpoint block");
            }
            blocks.push(FixpointBlock { kind, equations });
        }
        Ok(MuXPathQuery { goal, blocks })
    }

    fn expr(&mut self) -> PResult<NodeExpr> {
        let lhs = self.disj()?;
        if self.eat("->") {
            let rhs = self.expr()?;
            return Ok(NodeExpr::implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn disj(&mut self) -> PResult<NodeExpr> {
        let mut e = self.conj()?;
        while self.eat("|") {
            e = NodeExpr::or(e, self.conj()?);
        }
        Ok(e)
    }

    fn conj(&mut self) -> PResult<NodeExpr> {
        let mut e = self.unary()?;
        while self.eat("&") {
            e = NodeExpr::and(e, self.unary()?);
        }
        Ok(e)
    }

    fn unary(&mut self) -> PResult<NodeExpr> {
        if self.eat("!") {
            return Ok(NodeExpr::not(self.unary()?));
        }
        if self.eat("<") {
            let p = self.path()?;
            self.expect(">")?;
            return Ok(NodeExpr::dia(p, self.unary()?));
        }
        if self.eat("[") {
            let p = self.path()?;
            self.expect("]")?;
            return Ok(NodeExpr::boxed(p, self.unary()?));
        }
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        match self.peek().clone() {
            Tok::Var(v) => {
                self.next();
                Ok(NodeExpr::Var(v))
            }
            Tok::Ident(s) => {
                self.next();
                match s.as_str() {
                    "true" => Ok(NodeExpr::True),
                    "false" => Ok(NodeExpr::False),
                    _ if s.starts_with(|c: char| c.is_ascii_lowercase()) => Ok(NodeExpr::Prop(s)),
                    _ => {
                        self.pos -= 1;
                        self.err(format!("proposition `{s}` must start with a lowercase letter"))
                    }
                }
            }
            _ => self.err(format!("expected an expression, found {}", self.describe())),
        }
    }

    fn path(&mut self) -> PResult<PathExpr> {
        let mut p = self.path_seq()?;
        while self.eat("|") {
            p = PathExpr::union(p, self.path_seq()?);
        }
        Ok(p)
    }

    fn path_seq(&mut self) -> PResult<PathExpr> {
        let mut p = self.path_post()?;
        while self.eat("/") {
            p = PathExpr::seq(p, self.path_post()?);
        }
        Ok(p)
    }

    fn path_post(&mut self) -> PResult<PathExpr> {
        let bare_axis = matches!(self.peek(), Tok::Ident(s) if s != "u");
        let mut p = self.path_prim()?;
        let mut first = true;
        loop {
            if self.eat("*") {
                p = PathExpr::star(p);
            } else if self.eat("^-") {
                p = match p {
                    PathExpr::Ax(a) if bare_axis && first => PathExpr::Ax(a.inverse()),
                    other => PathExpr::inverse(other),
                };
            } else {
                return Ok(p);
            }
            first = false;
        }
    }

    fn path_prim(&mut self) -> PResult<PathExpr> {
        if self.eat("?") {
            self.expect("(")?;
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(PathExpr::test(e));
        }
        if self.eat("(") {
            let p = self.path()?;
            self.expect(")")?;
            return Ok(p);
        }
        match self.peek().clone() {
            Tok::Ident(s) => {
                let p = match s.as_str() {
                    "child" => PathExpr::Ax(Axis::Child),
                    "fchild" => PathExpr::Ax(Axis::Fchild),
                    "right" => PathExpr::Ax(Axis::Right),
                    "u" => PathExpr::everywhere_down(),
                    _ => return self.err(format!("unknown axis `{s}`")),
                };
                self.next();
                Ok(p)
            }
            _ => self.err(format!("expected a path, found {}", self.describe())),
        }
    }
}

/// Parses a bare node expression (no fixpoint blocks).
pub fn parse_node_expr(text: &str) -> Result<NodeExpr, QueryError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", p.describe()));
    }
    Ok(e)
}

/// Parses a query and checks that equation heads are unique and every used
/// variable is defined.
pub fn parse_query(text: &str) -> Result<MuXPathQuery, QueryError> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let q = p.query()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", p.describe()));
    }
    check_definitions(&q)?;
    Ok(q)
}

pub(crate) fn check_definitions(q: &MuXPathQuery) -> Result<(), QueryError> {
    let mut defined = HashSet::new();
    for v in q.defined_vars() {
        if !defined.insert(v.to_string()) {
            return Err(QueryError::DuplicateEquation(v.to_string()));
        }
    }
    if !defined.contains(&q.goal) {
        return Err(QueryError::Undefined(q.goal.clone()));
    }
    let used: BTreeSet<String> = q
        .blocks
        .iter()
        .flat_map(|b| b.equations.iter())
        .flat_map(|e| e.body.vars())
        .collect();
    if let Some(v) = used.iter().find(|v| !defined.contains(*v)) {
        return Err(QueryError::Undefined(v.clone()));
    }
    Ok(())
}
