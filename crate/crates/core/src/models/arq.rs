//! Stop-and-wait automatic repeat request sender.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::gen::{frequency, gen_pure, Gen, NAT_RANGE};
use crate::ism::{IsmModel, Prog, Program, Term, Trace};
use crate::oracle::{Branch, DeclaredKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArqState {
    Ready(u64),
    Waiting(u64),
    /// Sequence number sent, acknowledgement received.
    Acked(u64, u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pkt {
    pub pl: u8,
    pub sn: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WaitRes {
    Ack(u64),
    Timeout,
}

pub fn next_fn(n: u64, r: WaitRes) -> ArqState {
    match r {
        WaitRes::Ack(a) => ArqState::Acked(n, a),
        WaitRes::Timeout => ArqState::Ready(n),
    }
}

/// Evidence that an acknowledgement equals the sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AckMatches {
    sn: u64,
}

impl AckMatches {
    pub fn sn(&self) -> u64 {
        self.sn
    }
}

/// Evidence that an acknowledgement differs from the sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AckDiffers {
    sn: u64,
    ack: u64,
}

impl AckDiffers {
    pub fn sn(&self) -> u64 {
        self.sn
    }

    pub fn ack(&self) -> u64 {
        self.ack
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Yes(AckMatches),
    No(AckDiffers),
}

/// Decides whether acknowledgement `ack` matches sequence number `sn`.
pub fn decide(sn: u64, ack: u64) -> Decision {
    if sn == ack {
        Decision::Yes(AckMatches { sn })
    } else {
        Decision::No(AckDiffers { sn, ack })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArqOp {
    Send(Pkt),
    Wait,
    Proceed(AckMatches),
    Retry(AckDiffers),
}

impl From<Decision> for ArqOp {
    fn from(d: Decision) -> Self {
        match d {
            Decision::Yes(p) => ArqOp::Proceed(p),
            Decision::No(p) => ArqOp::Retry(p),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArqRes {
    Unit,
    Wait(WaitRes),
}

/// Where the "arbitrary" acknowledgement is drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AckDomain {
    /// Uniform on `0..=max`.
    Range { max: u64 },
    /// Uniform on all of `u64`; the oracle treats a match as impossible.
    Unbounded,
}

impl Default for AckDomain {
    fn default() -> Self {
        AckDomain::Range { max: NAT_RANGE.1 }
    }
}

/// Weights of (Timeout, arbitrary Ack, Ack of the expected number) while
/// waiting.
pub const WAIT_WEIGHTS: [u32; 3] = [4, 1, 15];

/// Payload byte of every generated packet.
pub const GENERATED_PAYLOAD: u8 = 255;

#[derive(Debug, Clone, Copy, Default)]
pub struct Arq {
    pub acks: AckDomain,
}

impl Arq {
    pub fn new(acks: AckDomain) -> Self {
        Arq { acks }
    }

    fn arbitrary_ack(&self) -> Gen<u64> {
        match self.acks {
            AckDomain::Range { max } => match max.checked_add(1) {
                Some(bound) => Gen::new(move |_, rng| rng.below(bound).1),
                None => Gen::new(|_, rng| rng.next_u64().1),
            },
            AckDomain::Unbounded => Gen::new(|_, rng| rng.next_u64().1),
        }
    }

    /// Probability that an arbitrary acknowledgement equals `sn`.
    pub fn match_probability(&self, sn: u64) -> BigRational {
        match self.acks {
            AckDomain::Range { max } if sn <= max => {
                BigRational::new(BigInt::one(), BigInt::from(max) + 1)
            }
            _ => BigRational::zero(),
        }
    }
}

impl IsmModel for Arq {
    type State = ArqState;
    type Op = ArqOp;
    type Res = ArqRes;

    fn op_type_name(&self) -> &str {
        "ARQOp"
    }

    fn state_term(&self, state: &ArqState) -> Term {
        match state {
            ArqState::Ready(n) => Term::ctor("Ready", vec![Term::Nat(*n)]),
            ArqState::Waiting(n) => Term::ctor("Waiting", vec![Term::Nat(*n)]),
            ArqState::Acked(n, a) => Term::ctor("Acked", vec![Term::Nat(*n), Term::Nat(*a)]),
        }
    }

    fn source(&self, op: &ArqOp) -> Term {
        match op {
            ArqOp::Send(p) => Term::ctor("Ready", vec![Term::Nat(p.sn)]),
            ArqOp::Wait => Term::ctor("Waiting", vec![Term::meta("n")]),
            ArqOp::Proceed(p) => Term::ctor("Acked", vec![Term::Nat(p.sn), Term::Nat(p.sn)]),
            ArqOp::Retry(p) => Term::ctor("Acked", vec![Term::Nat(p.sn), Term::Nat(p.ack)]),
        }
    }

    fn next_state(&self, op: &ArqOp, from: &ArqState, res: &ArqRes) -> ArqState {
        match (op, from, res) {
            (ArqOp::Send(p), _, _) => ArqState::Waiting(p.sn),
            (ArqOp::Wait, ArqState::Waiting(n), ArqRes::Wait(r)) => next_fn(*n, *r),
            (ArqOp::Proceed(p), _, _) => ArqState::Ready(p.sn + 1),
            (ArqOp::Retry(p), _, _) => ArqState::Ready(p.sn),
            (ArqOp::Wait, _, _) => unreachable!("source and result type checked"),
        }
    }

    fn admits_result(&self, op: &ArqOp, res: &ArqRes) -> bool {
        matches!(
            (op, res),
            (ArqOp::Wait, ArqRes::Wait(_))
                | (
                    ArqOp::Send(_) | ArqOp::Proceed(_) | ArqOp::Retry(_),
                    ArqRes::Unit
                )
        )
    }

    fn trivial_result(&self, op: &ArqOp) -> Option<ArqRes> {
        match op {
            ArqOp::Wait => None,
            _ => Some(ArqRes::Unit),
        }
    }

    fn options(&self, state: &ArqState) -> Option<Gen<(ArqOp, ArqRes)>> {
        Some(match *state {
            ArqState::Ready(k) => gen_pure((
                ArqOp::Send(Pkt {
                    pl: GENERATED_PAYLOAD,
                    sn: k,
                }),
                ArqRes::Unit,
            )),
            ArqState::Waiting(k) => {
                let wait = |r: WaitRes| (ArqOp::Wait, ArqRes::Wait(r));
                frequency(vec![
                    (WAIT_WEIGHTS[0], gen_pure(wait(WaitRes::Timeout))),
                    (
                        WAIT_WEIGHTS[1],
                        self.arbitrary_ack().map(move |a| wait(WaitRes::Ack(a))),
                    ),
                    (WAIT_WEIGHTS[2], gen_pure(wait(WaitRes::Ack(k)))),
                ])
                .expect("positive weights")
            }
            ArqState::Acked(n, a) => gen_pure((decide(n, a).into(), ArqRes::Unit)),
        })
    }

    fn render_op(&self, op: &ArqOp) -> String {
        match op {
            ArqOp::Send(p) => format!("Send (MkPkt {} {})", p.pl, p.sn),
            ArqOp::Wait => "Wait".to_string(),
            ArqOp::Proceed(_) => "Proceed".to_string(),
            ArqOp::Retry(_) => "Retry".to_string(),
        }
    }

    fn render_result(&self, res: &ArqRes) -> String {
        match res {
            ArqRes::Unit => "()".to_string(),
            ArqRes::Wait(WaitRes::Ack(a)) => format!("Ack {a}"),
            ArqRes::Wait(WaitRes::Timeout) => "Timeout".to_string(),
        }
    }
}

/// Every non-matching acknowledgement behaves the same way (a retry), so the
/// kernel merges them into a single representative `Acked(k, k + 1)`.
impl DeclaredKernel for Arq {
    fn kernel(&self, state: &ArqState) -> Option<Vec<Branch<ArqState>>> {
        let total: u32 = WAIT_WEIGHTS.iter().sum();
        let w = |i: usize| BigRational::new(BigInt::from(WAIT_WEIGHTS[i]), BigInt::from(total));
        Some(match *state {
            ArqState::Ready(k) => vec![Branch::new(
                BigRational::one(),
                ArqState::Waiting(k),
                "Send",
            )],
            ArqState::Waiting(k) => {
                let hit = self.match_probability(k);
                let miss = BigRational::one() - &hit;
                let mut rows = vec![Branch::new(w(0), ArqState::Ready(k), "Timeout")];
                if !hit.is_zero() {
                    rows.push(Branch::new(
                        w(1) * hit,
                        ArqState::Acked(k, k),
                        "arbitrary Ack, matching",
                    ));
                }
                if !miss.is_zero() {
                    rows.push(Branch::new(
                        w(1) * miss,
                        ArqState::Acked(k, k.wrapping_add(1)),
                        "arbitrary Ack, other",
                    ));
                }
                rows.push(Branch::new(w(2), ArqState::Acked(k, k), "Ack"));
                rows
            }
            ArqState::Acked(n, a) => {
                let next = if n == a {
                    ArqState::Ready(n + 1)
                } else {
                    ArqState::Ready(n)
                };
                vec![Branch::new(BigRational::one(), next, "Proceed/Retry")]
            }
        })
    }
}

/// Sends packet `n` until it is acknowledged, then stops in `Ready (n + 1)`.
pub fn send_n(n: u64) -> Prog<Arq, ()> {
    Prog::op(
        ArqOp::Send(Pkt {
            pl: GENERATED_PAYLOAD,
            sn: n,
        }),
        move |_| {
            Prog::op(ArqOp::Wait, move |r| match r {
                ArqRes::Wait(WaitRes::Timeout) => send_n(n),
                ArqRes::Wait(WaitRes::Ack(a)) => match decide(n, *a) {
                    Decision::Yes(p) => Prog::op(ArqOp::Proceed(p), |_| Prog::pure(())),
                    Decision::No(p) => Prog::op(ArqOp::Retry(p), move |_| send_n(n)),
                },
                ArqRes::Unit => Prog::hole("wait_result"),
            })
        },
    )
}

pub fn send_n_program(n: u64) -> Program<Arq, ()> {
    Program::new(
        ArqState::Ready(n),
        move |_| ArqState::Ready(n + 1),
        send_n(n),
    )
}

/// Target state of the send-three property.
pub const SEND_THREE_TARGET: ArqState = ArqState::Ready(3);

/// Starting from `Ready 0`, three packets get through within the trace.
pub fn prop_send_three_ok(t: &Trace<Arq>) -> bool {
    *t.init() == ArqState::Ready(0) && t.states().contains(&SEND_THREE_TARGET)
}
