//! Exact visit probabilities over the Markov chain a model's option
//! generator induces, for models that declare their weights.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::ism::IsmModel;

/// One weighted outcome of a state's option generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Branch<S> {
    pub prob: BigRational,
    pub next: S,
    pub label: &'static str,
}

impl<S> Branch<S> {
    pub fn new(prob: BigRational, next: S, label: &'static str) -> Self {
        Branch { prob, next, label }
    }
}

/// A model whose option generator can be read as a transition kernel.
pub trait DeclaredKernel: IsmModel {
    /// Outcomes of `options(state)` grouped by result state, or `None` when
    /// the model declares nothing for `state`. Several branches may share a
    /// result state.
    fn kernel(&self, state: &Self::State) -> Option<Vec<Branch<Self::State>>>;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("no declared weights for state {state}")]
    NoDeclaredWeights { state: String },
    #[error("weights for state {state} sum to {sum}, not 1")]
    RowSum { state: String, sum: String },
    #[error("state {state} lies beyond the analysed depth")]
    Truncated { state: String },
}

/// The chain restricted to states reachable from `init` in at most `depth`
/// steps. States first reached at exactly `depth` steps have no row.
#[derive(Debug, Clone)]
pub struct MarkovView<S> {
    depth: usize,
    states: Vec<S>,
    rows: HashMap<S, Vec<(BigRational, S)>>,
}

impl<S: Clone + Eq + std::hash::Hash> MarkovView<S> {
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Reachable states in breadth-first order.
    pub fn states(&self) -> &[S] {
        &self.states
    }

    /// Outgoing transitions of `state`, one entry per distinct next state.
    pub fn row(&self, state: &S) -> Option<&[(BigRational, S)]> {
        self.rows.get(state).map(Vec::as_slice)
    }
}

fn merge<S: Clone + Eq>(branches: Vec<Branch<S>>) -> Vec<(BigRational, S)> {
    let mut row: Vec<(BigRational, S)> = Vec::new();
    for b in branches {
        match row.iter_mut().find(|(_, s)| *s == b.next) {
            Some((p, _)) => *p += b.prob,
            None => row.push((b.prob, b.next)),
        }
    }
    row
}

pub fn markov_view<M: DeclaredKernel>(
    model: &M,
    init: M::State,
    depth: usize,
) -> Result<MarkovView<M::State>, OracleError> {
    let mut distance = HashMap::from([(init.clone(), 0usize)]);
    let mut states = vec![init.clone()];
    let mut rows = HashMap::new();
    let mut queue = VecDeque::from([init]);
    while let Some(state) = queue.pop_front() {
        let d = distance[&state];
        if d == depth {
            continue;
        }
        let branches = model
            .kernel(&state)
            .ok_or_else(|| OracleError::NoDeclaredWeights {
                state: model.render_state(&state),
            })?;
        let row = merge(branches);
        let sum: BigRational = row.iter().map(|(p, _)| p).sum();
        if !sum.is_one() || row.iter().any(|(p, _)| p.is_negative()) {
            return Err(OracleError::RowSum {
                state: model.render_state(&state),
                sum: sum.to_string(),
            });
        }
        for (_, next) in &row {
            if !distance.contains_key(next) {
                distance.insert(next.clone(), d + 1);
                states.push(next.clone());
                queue.push_back(next.clone());
            }
        }
        rows.insert(state, row);
    }
    Ok(MarkovView {
        depth,
        states,
        rows,
    })
}

/// Probability that a `depth`-step walk from `init` has some step landing in
/// a state satisfying `target`. The initial state does not count, so depth 0
/// gives 0.
pub fn visit_probability<S>(
    mv: &MarkovView<S>,
    init: &S,
    target: impl Fn(&S) -> bool,
    depth: usize,
) -> Result<BigRational, OracleError>
where
    S: Clone + Eq + std::hash::Hash + fmt::Debug,
{
    let mut visited = BigRational::zero();
    let mut pending: HashMap<S, BigRational> = HashMap::from([(init.clone(), BigRational::one())]);
    for _ in 0..depth {
        let mut next_pending: HashMap<S, BigRational> = HashMap::new();
        for (state, mass) in &pending {
            let row = mv.row(state).ok_or_else(|| OracleError::Truncated {
                state: format!("{state:?}"),
            })?;
            for (p, next) in row {
                let m = mass * p;
                if target(next) {
                    visited += m;
                } else {
                    *next_pending
                        .entry(next.clone())
                        .or_insert_with(BigRational::zero) += m;
                }
            }
        }
        pending = next_pending;
    }
    Ok(visited)
}

/// Builds the view and evaluates [`visit_probability`] in one go.
pub fn model_visit_probability<M: DeclaredKernel>(
    model: &M,
    init: M::State,
    target: impl Fn(&M::State) -> bool,
    depth: usize,
) -> Result<BigRational, OracleError> {
    let mv = markov_view(model, init.clone(), depth)?;
    visit_probability(&mv, &init, target, depth)
}

/// `r` rounded half-up to `places` decimals. `r` must be non-negative.
pub fn format_decimal(r: &BigRational, places: u32) -> String {
    let scale = BigInt::from(10u32).pow(places);
    let scaled = r * BigRational::from_integer(scale.clone());
    let rounded = (scaled + BigRational::new(BigInt::one(), BigInt::from(2)))
        .floor()
        .to_integer();
    let int_part = &rounded / &scale;
    let frac_part = &rounded % &scale;
    if places == 0 {
        return int_part.to_string();
    }
    format!(
        "{int_part}.{:0>width$}",
        frac_part.to_string(),
        width = places as usize
    )
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::arq::{AckDomain, Arq, ArqState};
    use crate::models::atm::{AtmStateBuggy, AtmStateFixed, BuggyAtm, FixedAtm};

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn buggy_card_row() {
        let mv = markov_view(&BuggyAtm, AtmStateBuggy::Ready, 3).unwrap();
        let row = mv.row(&AtmStateBuggy::CardInserted).unwrap();
        assert_eq!(
            row,
            &[
                (q(1, 6), AtmStateBuggy::Session),
                (q(4, 6), AtmStateBuggy::CardInserted),
                (q(1, 6), AtmStateBuggy::Ready),
            ]
        );
    }

    #[test]
    fn arq_waiting_row_splits_the_arbitrary_ack() {
        let mv = markov_view(&Arq::default(), ArqState::Waiting(2), 1).unwrap();
        let row = mv.row(&ArqState::Waiting(2)).unwrap();
        assert_eq!(row[0], (q(1, 5), ArqState::Ready(2)));
        assert_eq!(row[1], (q(3, 4) + q(1, 20 * 101), ArqState::Acked(2, 2)));
        assert_eq!(row[2], (q(100, 20 * 101), ArqState::Acked(2, 3)));

        let ideal = Arq::new(AckDomain::Unbounded);
        let mv = markov_view(&ideal, ArqState::Waiting(2), 1).unwrap();
        let row = mv.row(&ArqState::Waiting(2)).unwrap();
        assert_eq!(row[1], (q(1, 20), ArqState::Acked(2, 3)));
        assert_eq!(row[2], (q(3, 4), ArqState::Acked(2, 2)));
    }

    #[test]
    fn rows_sum_to_one_and_frontier_has_no_row() {
        let mv = markov_view(&Arq::default(), ArqState::Ready(0), 6).unwrap();
        for s in mv.states() {
            if let Some(row) = mv.row(s) {
                let sum: BigRational = row.iter().map(|(p, _)| p).sum();
                assert!(sum.is_one(), "{s:?}");
            }
        }
        assert!(mv.states().contains(&ArqState::Ready(2)));
        assert!(!mv.states().contains(&ArqState::Ready(3)));
    }

    #[test]
    fn depth_zero_is_zero() {
        let p = model_visit_probability(
            &BuggyAtm,
            AtmStateBuggy::Ready,
            |s| *s == AtmStateBuggy::Ready,
            0,
        );
        assert!(p.unwrap().is_zero());
    }

    #[test]
    fn buggy_small_depths_by_hand() {
        let ready = |s: &AtmStateBuggy| *s == AtmStateBuggy::Ready;
        let p = |d| model_visit_probability(&BuggyAtm, AtmStateBuggy::Ready, ready, d).unwrap();
        assert!(p(1).is_zero());
        assert_eq!(p(2), q(1, 6));
        // CardInserted -> Session -> Ready, or the Incorrect loop then Eject
        assert_eq!(p(3), q(1, 6) + q(1, 6) * q(1, 2) + q(4, 6) * q(1, 6));
    }

    #[test]
    fn arq_send_three_needs_nine_steps() {
        let t = |s: &ArqState| *s == ArqState::Ready(3);
        let p = |d| model_visit_probability(&Arq::default(), ArqState::Ready(0), t, d).unwrap();
        assert!(p(8).is_zero());
        let per_packet = q(3, 4) + q(1, 20 * 101);
        assert_eq!(p(9), &per_packet * &per_packet * &per_packet);
    }

    #[test]
    fn monotone_in_depth() {
        let t = |s: &AtmStateFixed| *s == AtmStateFixed::Ready;
        let mut last = BigRational::zero();
        for d in 0..=12 {
            let p = model_visit_probability(&FixedAtm, AtmStateFixed::Ready, t, d).unwrap();
            assert!(p >= last);
            last = p;
        }
    }

    #[test]
    fn truncated_view_is_reported() {
        let mv = markov_view(&BuggyAtm, AtmStateBuggy::Ready, 1).unwrap();
        let err = visit_probability(&mv, &AtmStateBuggy::Ready, |_| false, 2).unwrap_err();
        assert!(matches!(err, OracleError::Truncated { .. }));
    }

    #[test]
    fn decimals() {
        assert_eq!(format_decimal(&q(1, 3), 6), "0.333333");
        assert_eq!(format_decimal(&q(2, 3), 6), "0.666667");
        assert_eq!(format_decimal(&q(0, 1), 6), "0.000000");
        assert_eq!(format_decimal(&q(1, 1), 2), "1.00");
        assert_eq!(format_decimal(&q(1, 200), 2), "0.01");
    }
}
