//! Two-way weak alternating tree automata over binary trees.

mod back;
mod compile;
mod wf;

pub use back::twata_to_query;
pub use compile::compile_query;
pub use wf::{build_wf_automaton, WfStates};

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::tree::{Label, FLAGS};

pub type StateId = usize;

/// A set of propositions as a bitmask over [`Twata::props`].
pub type Letter = u64;

pub const MAX_PROPS: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TwataError {
    #[error("{0} propositions (including the four flags); at most 64 are supported")]
    TooManyProps(usize),
}

/// Positive Boolean formula over moves, with label tests as atoms.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pbf {
    True,
    False,
    /// `Label(p, true)` holds iff prop `p` is in the letter.
    Label(usize, bool),
    /// Direction −1 (parent), 0 (stay), 1 or 2.
    Move(i8, StateId),
    And(Vec<Pbf>),
    Or(Vec<Pbf>),
}

impl Pbf {
    pub fn and(items: Vec<Pbf>) -> Pbf {
        let mut out = Vec::new();
        for x in items {
            match x {
                Pbf::True => {}
                Pbf::False => return Pbf::False,
                Pbf::And(inner) => out.extend(inner),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Pbf::True,
            1 => out.pop().unwrap(),
            _ => Pbf::And(out),
        }
    }

    pub fn or(items: Vec<Pbf>) -> Pbf {
        let mut out = Vec::new();
        for x in items {
            match x {
                Pbf::False => {}
                Pbf::True => return Pbf::True,
                Pbf::Or(inner) => out.extend(inner),
                x => out.push(x),
            }
        }
        match out.len() {
            0 => Pbf::False,
            1 => out.pop().unwrap(),
            _ => Pbf::Or(out),
        }
    }

    /// Replaces label atoms by their value under `letter`.
    pub fn resolve(&self, letter: Letter) -> Pbf {
        match self {
            Pbf::True | Pbf::False | Pbf::Move(..) => self.clone(),
            Pbf::Label(p, pos) => {
                if (letter >> p & 1 == 1) == *pos {
                    Pbf::True
                } else {
                    Pbf::False
                }
            }
            Pbf::And(xs) => Pbf::and(xs.iter().map(|x| x.resolve(letter)).collect()),
            Pbf::Or(xs) => Pbf::or(xs.iter().map(|x| x.resolve(letter)).collect()),
        }
    }

    /// Truth value under a letter and an assignment of the moves.
    pub fn eval(&self, letter: Letter, moves: &mut dyn FnMut(i8, StateId) -> bool) -> bool {
        match self {
            Pbf::True => true,
            Pbf::False => false,
            Pbf::Label(p, pos) => (letter >> p & 1 == 1) == *pos,
            Pbf::Move(d, s) => moves(*d, *s),
            Pbf::And(xs) => xs.iter().all(|x| x.eval(letter, moves)),
            Pbf::Or(xs) => xs.iter().any(|x| x.eval(letter, moves)),
        }
    }

    pub fn moves(&self) -> Vec<(i8, StateId)> {
        let mut out = Vec::new();
        self.visit(&mut |x| {
            if let Pbf::Move(d, s) = x {
                out.push((*d, *s));
            }
        });
        out
    }

    pub fn labels(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit(&mut |x| {
            if let Pbf::Label(p, _) = x {
                out.insert(*p);
            }
        });
        out
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    fn visit(&self, f: &mut dyn FnMut(&Pbf)) {
        f(self);
        if let Pbf::And(xs) | Pbf::Or(xs) = self {
            for x in xs {
                x.visit(f);
            }
        }
    }

    fn write(&self, a: &Twata, out: &mut String) {
        match self {
            Pbf::True => out.push_str("true"),
            Pbf::False => out.push_str("false"),
            Pbf::Label(p, pos) => {
                if !pos {
                    out.push('!');
                }
                out.push_str(&a.props[*p]);
            }
            Pbf::Move(d, s) => out.push_str(&format!("({d},{s})")),
            Pbf::And(xs) | Pbf::Or(xs) => {
                let sep = if matches!(self, Pbf::And(_)) { " & " } else { " | " };
                out.push('(');
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        out.push_str(sep);
                    }
                    x.write(a, out);
                }
                out.push(')');
            }
        }
    }
}

/// A 2WATA. The first four props are always the flags `ifc irs hfc hrs`.
///
/// `partition` lists the weakness classes from the lowest up: moves from a
/// state may only reach its own class or a lower one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Twata {
    pub props: Vec<String>,
    /// Human-readable state names.
    pub states: Vec<String>,
    pub initial: StateId,
    pub delta: Vec<Pbf>,
    pub alpha: Vec<bool>,
    pub partition: Vec<Vec<StateId>>,
}

/// Why a [`Twata`] is not a weak automaton.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeaknessViolation(pub String);

impl fmt::Display for WeaknessViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Twata {
    /// Prop list starting with the flags, followed by `extra` in order.
    pub fn prop_list<I: IntoIterator<Item = String>>(extra: I) -> Result<Vec<String>, TwataError> {
        let mut props: Vec<String> = FLAGS.iter().map(|s| s.to_string()).collect();
        for p in extra {
            if !props.contains(&p) {
                props.push(p);
            }
        }
        if props.len() > MAX_PROPS {
            return Err(TwataError::TooManyProps(props.len()));
        }
        Ok(props)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Total size of the transition formulas.
    pub fn size(&self) -> usize {
        self.delta.iter().map(Pbf::size).sum()
    }

    pub fn prop_index(&self, p: &str) -> Option<usize> {
        self.props.iter().position(|x| x == p)
    }

    /// The letter of a label; props unknown to the automaton are ignored.
    pub fn letter(&self, label: &Label) -> Letter {
        let mut l = 0;
        for (i, p) in self.props.iter().enumerate() {
            if label.contains(p) {
                l |= 1 << i;
            }
        }
        l
    }

    pub fn letter_label(&self, letter: Letter) -> Label {
        self.props.iter().enumerate().filter(|(i, _)| letter >> i & 1 == 1).map(|(_, p)| p.clone()).collect()
    }

    /// Class index of every state (`None` if the partition misses it).
    pub fn class_of(&self) -> Vec<Option<usize>> {
        let mut out = vec![None; self.states.len()];
        for (c, members) in self.partition.iter().enumerate() {
            for &s in members {
                if s < out.len() && out[s].is_none() {
                    out[s] = Some(c);
                }
            }
        }
        out
    }

    pub fn class_accepting(&self, c: usize) -> bool {
        self.partition[c].first().is_some_and(|&s| self.alpha[s])
    }

    /// Checks that the partition covers the states disjointly, that each
    /// class is wholly accepting or rejecting, and that no move ascends.
    pub fn validate_weakness(&self) -> Result<(), WeaknessViolation> {
        let n = self.states.len();
        let bad = |m: String| Err(WeaknessViolation(m));
        if self.delta.len() != n || self.alpha.len() != n {
            return bad(format!("{n} states but {} transitions and {} alpha entries", self.delta.len(), self.alpha.len()));
        }
        if self.initial >= n {
            return bad(format!("initial state {} out of range", self.initial));
        }
        let mut class = vec![None; n];
        for (c, members) in self.partition.iter().enumerate() {
            for &s in members {
                if s >= n {
                    return bad(format!("class {c} names unknown state {s}"));
                }
                if let Some(prev) = class[s] {
                    return bad(format!("state {s} is in classes {prev} and {c}"));
                }
                class[s] = Some(c);
            }
            if members.iter().any(|&s| self.alpha[s] != self.alpha[members[0]]) {
                return bad(format!("class {c} mixes accepting and rejecting states"));
            }
        }
        if let Some(s) = class.iter().position(Option::is_none) {
            return bad(format!("state {s} is in no class"));
        }
        for s in 0..n {
            for p in self.delta[s].labels() {
                if p >= self.props.len() {
                    return bad(format!("state {s} tests unknown prop {p}"));
                }
            }
            for (d, t) in self.delta[s].moves() {
                if !(-1..=2).contains(&d) {
                    return bad(format!("state {s} moves in direction {d}"));
                }
                if t >= n {
                    return bad(format!("state {s} moves to unknown state {t}"));
                }
                if class[t] > class[s] {
                    return bad(format!(
                        "state {s} (class {}) moves up to state {t} (class {})",
                        class[s].unwrap(),
                        class[t].unwrap()
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn formula_text(&self, s: StateId) -> String {
        let mut out = String::new();
        self.delta[s].write(self, &mut out);
        out
    }

    /// Text listing: state names as comments, then one line per state.
    pub fn dump(&self) -> String {
        let class = self.class_of();
        let mut out = String::new();
        out.push_str(&format!("# props: {}\n", self.props.join(" ")));
        out.push_str(&format!("# initial: {}\n", self.initial));
        for (i, name) in self.states.iter().enumerate() {
            out.push_str(&format!("# {i}: {name}\n"));
        }
        for s in 0..self.states.len() {
            let c = class[s].map_or("?".to_string(), |c| c.to_string());
            let tag = if self.alpha[s] { "accepting" } else { "rejecting" };
            out.push_str(&format!("state {s} [class C{c} {tag}]: {}\n", self.formula_text(s)));
        }
        out
    }

    /// DOT digraph of the move edges, labeled with directions.
    pub fn dot(&self) -> String {
        let mut out = String::from("digraph twata {\n  rankdir=LR;\n");
        for (s, name) in self.states.iter().enumerate() {
            let shape = if self.alpha[s] { "doublecircle" } else { "circle" };
            let esc = name.replace('\\', "\\\\").replace('"', "\\\"");
            out.push_str(&format!("  s{s} [shape={shape}, label=\"{s}: {esc}\"];\n"));
        }
        out.push_str(&format!("  start [shape=point];\n  start -> s{};\n", self.initial));
        for s in 0..self.states.len() {
            let edges: BTreeSet<(i8, StateId)> = self.delta[s].moves().into_iter().collect();
            for (d, t) in edges {
                out.push_str(&format!("  s{s} -> s{t} [label=\"{d}\"];\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}
