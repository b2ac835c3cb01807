use super::{compile_query, Pbf, StateId, Twata, TwataError};
use crate::query::NormalizedQuery;
use crate::tree::FLAGS;

/// The three states added by [`build_wf_automaton`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WfStates {
    pub ini: StateId,
    pub structure: StateId,
    pub search: StateId,
}

impl WfStates {
    /// Locates the added states of an automaton built by
    /// [`build_wf_automaton`].
    pub fn of(a: &Twata) -> WfStates {
        let n = a.len();
        WfStates { structure: n - 3, search: n - 2, ini: n - 1 }
    }
}

/// The automaton accepting, from the root, exactly the well-formed binary
/// encodings on which the query selects some node.
///
/// Added states: `ini` checks the root and starts the two conjuncts;
/// `structure` checks the flags of every node below; `search` walks down to
/// a node where the query holds.
pub fn build_wf_automaton(q: &NormalizedQuery) -> Result<Twata, TwataError> {
    let mut a = compile_query(q)?;
    for (i, f) in FLAGS.iter().enumerate() {
        debug_assert_eq!(a.states[i], *f);
        debug_assert_eq!(a.props[i], *f);
    }
    let (ifc, irs, hfc, hrs) = (0, 1, 2, 3);
    let n = a.len();
    let (structure, search, ini) = (n, n + 1, n + 2);
    let goal = a.initial;

    a.states.extend(["s_struc".to_string(), "s_q0".to_string(), "s_ini".to_string()]);
    a.delta.push(Pbf::and(vec![
        Pbf::or(vec![Pbf::Label(ifc, false), Pbf::Label(irs, false)]),
        Pbf::or(vec![Pbf::Label(hfc, false), Pbf::and(vec![Pbf::Move(1, ifc), Pbf::Move(1, structure)])]),
        Pbf::or(vec![Pbf::Label(hrs, false), Pbf::and(vec![Pbf::Move(2, irs), Pbf::Move(2, structure)])]),
    ]));
    a.delta.push(Pbf::or(vec![
        Pbf::Move(0, goal),
        Pbf::and(vec![Pbf::Label(hfc, true), Pbf::Move(1, search)]),
        Pbf::and(vec![Pbf::Label(hrs, true), Pbf::Move(2, search)]),
    ]));
    a.delta.push(Pbf::and(vec![
        Pbf::Label(ifc, false),
        Pbf::Label(irs, false),
        Pbf::Label(hrs, false),
        Pbf::Move(0, structure),
        Pbf::Move(0, search),
    ]));
    a.alpha.extend([true, false, false]);
    let bottom = a.partition.remove(0);
    let mut partition = vec![bottom, vec![structure]];
    partition.append(&mut a.partition);
    partition.push(vec![search]);
    partition.push(vec![ini]);
    a.partition = partition;
    a.initial = ini;
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::query::{closure, parse_query, validate_query};

    #[test]
    fn three_extra_states() {
        let q = validate_query(&parse_query("$X : lfp { $X = red | <fchild>$X }").unwrap()).unwrap();
        let a = build_wf_automaton(&q).unwrap();
        assert_eq!(a.len(), closure(&q).len() + 3);
        a.validate_weakness().unwrap();
        let w = WfStates::of(&a);
        assert_eq!(a.initial, w.ini);
        assert!(a.alpha[w.structure]);
        assert!(!a.alpha[w.search] && !a.alpha[w.ini]);
        let moves = a.delta[w.ini].moves();
        assert_eq!(moves, vec![(0, w.structure), (0, w.search)]);
    }
}
