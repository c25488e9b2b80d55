//! Exhaustive weighted path enumeration, written from the generator weights
//! directly. Shares nothing with the library's transition kernels.

#![allow(dead_code)]

use num_rational::BigRational;
use num_traits::{One, Zero};

use ismpbt::models::arq::ArqState;
use ismpbt::models::atm::{AtmStateBuggy, AtmStateFixed};

pub fn q(n: u64, d: u64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

/// Sum of the weights of all `depth`-step paths from `init` whose result
/// states hit `target`, walking every path to full length.
pub fn enumerate<S: Clone>(
    init: &S,
    depth: usize,
    step: &dyn Fn(&S) -> Vec<(BigRational, S)>,
    target: &dyn Fn(&S) -> bool,
) -> BigRational {
    fn go<S: Clone>(
        s: &S,
        left: usize,
        weight: BigRational,
        hit: bool,
        step: &dyn Fn(&S) -> Vec<(BigRational, S)>,
        target: &dyn Fn(&S) -> bool,
        acc: &mut BigRational,
    ) {
        if left == 0 {
            if hit {
                *acc += weight;
            }
            return;
        }
        for (p, next) in step(s) {
            let h = hit || target(&next);
            go(&next, left - 1, &weight * p, h, step, target, acc);
        }
    }
    let mut acc = BigRational::zero();
    go(
        init,
        depth,
        BigRational::one(),
        false,
        step,
        target,
        &mut acc,
    );
    acc
}

pub fn buggy_step(s: &AtmStateBuggy) -> Vec<(BigRational, AtmStateBuggy)> {
    use AtmStateBuggy::*;
    match s {
        Ready => vec![(q(1, 1), CardInserted)],
        CardInserted => vec![
            (q(1, 6), Session),
            (q(4, 6), CardInserted),
            (q(1, 6), Ready),
        ],
        Session => vec![(q(1, 2), Session), (q(1, 2), Ready)],
    }
}

pub fn fixed_step(s: &AtmStateFixed) -> Vec<(BigRational, AtmStateFixed)> {
    use AtmStateFixed::*;
    match *s {
        Ready => vec![(q(1, 1), CardInserted(2))],
        CardInserted(k) => {
            let wrong = if k == 0 { Ready } else { CardInserted(k - 1) };
            vec![(q(1, 6), Session), (q(4, 6), wrong), (q(1, 6), Ready)]
        }
        Session => vec![(q(1, 2), Session), (q(1, 2), Ready)],
    }
}

/// ARQ with arbitrary acks uniform on `0..=max`, one branch per ack value.
pub fn arq_step(max: u64) -> impl Fn(&ArqState) -> Vec<(BigRational, ArqState)> {
    move |s| match *s {
        ArqState::Ready(k) => vec![(q(1, 1), ArqState::Waiting(k))],
        ArqState::Waiting(k) => {
            let mut out = vec![
                (q(4, 20), ArqState::Ready(k)),
                (q(15, 20), ArqState::Acked(k, k)),
            ];
            for a in 0..=max {
                out.push((q(1, 20 * (max + 1)), ArqState::Acked(k, a)));
            }
            out
        }
        ArqState::Acked(n, a) if n == a => vec![(q(1, 1), ArqState::Ready(n + 1))],
        ArqState::Acked(n, _) => vec![(q(1, 1), ArqState::Ready(n))],
    }
}

/// ARQ where an arbitrary ack never matches: the 1/20 branch always
/// retries.
pub fn arq_step_unbounded(s: &ArqState) -> Vec<(BigRational, ArqState)> {
    match *s {
        ArqState::Waiting(k) => vec![
            (q(4, 20), ArqState::Ready(k)),
            (q(15, 20), ArqState::Acked(k, k)),
            (q(1, 20), ArqState::Acked(k, k + 7)),
        ],
        other => arq_step(0)(&other),
    }
}
