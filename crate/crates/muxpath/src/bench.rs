//! Timing of automaton evaluation on chain trees, with a least-squares fit.

use std::time::Instant;

use crate::acceptance::selected_node_ids;
use crate::query::NormalizedQuery;
use crate::tree::{encode_binary, Label, SiblingTree};
use crate::twata::{compile_query, TwataError};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sample {
    pub nodes: usize,
    pub millis: f64,
    pub selected: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x`. Needs two distinct `x` values.
pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept, r2 })
}

/// Log-log slope between the two largest samples; about 1 for linear
/// growth.
pub fn growth_exponent(samples: &[Sample]) -> Option<f64> {
    let mut s: Vec<&Sample> = samples.iter().collect();
    s.sort_by_key(|x| x.nodes);
    let [.., a, b] = s.as_slice() else { return None };
    if a.millis <= 0.0 || b.millis <= 0.0 || a.nodes == b.nodes {
        return None;
    }
    Some((b.millis / a.millis).ln() / (b.nodes as f64 / a.nodes as f64).ln())
}

/// Compiles `q` once, then times encoding plus evaluation on a chain of each
/// size, whose nodes all carry `label`. The median of `reps` runs is kept.
pub fn chain_timings(
    q: &NormalizedQuery,
    label: &Label,
    sizes: &[usize],
    reps: usize,
) -> Result<Vec<Sample>, TwataError> {
    let a = compile_query(q)?;
    let mut out = Vec::new();
    for &n in sizes {
        let t = SiblingTree::chain(n, label);
        let mut times = Vec::new();
        let mut selected = 0;
        for _ in 0..reps.max(1) {
            let start = Instant::now();
            let b = encode_binary(&t);
            selected = selected_node_ids(&a, &b).count_ones(..);
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        times.sort_by(f64::total_cmp);
        out.push(Sample { nodes: n, millis: times[times.len() / 2], selected });
    }
    Ok(out)
}
