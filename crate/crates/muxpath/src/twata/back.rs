use super::{Pbf, Twata};
use crate::query::{Axis, Equation, FixKind, FixpointBlock, MuXPathQuery, NodeExpr, PathExpr};
use crate::tree::{IFC, IRS};

fn var(s: usize) -> NodeExpr {
    NodeExpr::var(&format!("s{s}"))
}

fn translate(a: &Twata, f: &Pbf) -> NodeExpr {
    match f {
        Pbf::True => NodeExpr::True,
        Pbf::False => NodeExpr::False,
        Pbf::Label(p, true) => NodeExpr::prop(&a.props[*p]),
        Pbf::Label(p, false) => NodeExpr::not(NodeExpr::prop(&a.props[*p])),
        Pbf::Move(0, s) => var(*s),
        Pbf::Move(1, s) => NodeExpr::dia(PathExpr::ax(Axis::Fchild), var(*s)),
        Pbf::Move(2, s) => NodeExpr::dia(PathExpr::ax(Axis::Right), var(*s)),
        Pbf::Move(_, s) => NodeExpr::or(
            NodeExpr::and(NodeExpr::prop(IFC), NodeExpr::dia(PathExpr::ax(Axis::FchildInv), var(*s))),
            NodeExpr::and(NodeExpr::prop(IRS), NodeExpr::dia(PathExpr::ax(Axis::RightInv), var(*s))),
        ),
        Pbf::And(xs) => NodeExpr::and_all(xs.iter().map(|x| translate(a, x))),
        Pbf::Or(xs) => NodeExpr::or_all(xs.iter().map(|x| translate(a, x))),
    }
}

/// A µXPath query selecting exactly the nodes from which the automaton
/// accepts, on trees labeled over the automaton's props.
///
/// Each state `s` becomes a variable `$s<id>`; label atoms are translated in
/// place, which is equivalent to a case split over the letters but linear.
/// Every non-empty class becomes a block, greatest iff accepting.
pub fn twata_to_query(a: &Twata) -> MuXPathQuery {
    let blocks = a
        .partition
        .iter()
        .enumerate()
        .filter(|(_, members)| !members.is_empty())
        .map(|(c, members)| FixpointBlock {
            kind: if a.class_accepting(c) { FixKind::Gfp } else { FixKind::Lfp },
            equations: members
                .iter()
                .map(|&s| Equation { var: format!("s{s}"), body: translate(a, &a.delta[s]) })
                .collect(),
        })
        .collect();
    MuXPathQuery { goal: format!("s{}", a.initial), blocks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{parse_node_expr, render_expr, validate_query};

    #[test]
    fn parent_move_translation() {
        let a = Twata {
            props: Twata::prop_list([]).unwrap(),
            states: vec!["q".into()],
            initial: 0,
            delta: vec![Pbf::Move(-1, 0)],
            alpha: vec![false],
            partition: vec![vec![0]],
        };
        let q = twata_to_query(&a);
        assert_eq!(
            q.blocks[0].equations[0].body,
            parse_node_expr("(ifc & <fchild^->$s0) | (irs & <right^->$s0)").unwrap()
        );
        assert_eq!(render_expr(&translate(&a, &Pbf::True)), "true");
        assert!(validate_query(&q).is_ok());
    }
}
