//! ATM models: the original machine with unlimited PIN retries, and the
//! fixed machine whose card slot counts the remaining retries.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::gen::{frequency, gen_pure, one_of, Arbitrary, Gen};
use crate::ism::{IsmModel, Prog, Program, Term, Trace};
use crate::oracle::{Branch, DeclaredKernel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PinOk {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtmOp {
    Insert,
    CheckPin(i64),
    Dispense(u64),
    Eject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtmRes {
    Unit,
    Pin(PinOk),
}

/// The PIN the generator always attempts; the outcome is drawn separately.
pub const GENERATED_PIN: i64 = 0;

/// Weights of (CheckPIN ~ Correct, CheckPIN ~ Incorrect, Eject) from a
/// card-inserted state.
pub const CARD_WEIGHTS: [u32; 3] = [1, 4, 1];

fn render_op(op: &AtmOp) -> String {
    match op {
        AtmOp::Insert => "Insert".to_string(),
        AtmOp::CheckPin(pin) => format!("CheckPIN {pin}"),
        AtmOp::Dispense(amount) => format!("Dispense {amount}"),
        AtmOp::Eject => "Eject".to_string(),
    }
}

fn render_result(res: &AtmRes) -> String {
    match res {
        AtmRes::Unit => "()".to_string(),
        AtmRes::Pin(PinOk::Correct) => "Correct".to_string(),
        AtmRes::Pin(PinOk::Incorrect) => "Incorrect".to_string(),
    }
}

fn admits_result(op: &AtmOp, res: &AtmRes) -> bool {
    matches!(
        (op, res),
        (AtmOp::CheckPin(_), AtmRes::Pin(_))
            | (
                AtmOp::Insert | AtmOp::Dispense(_) | AtmOp::Eject,
                AtmRes::Unit
            )
    )
}

fn trivial_result(op: &AtmOp) -> Option<AtmRes> {
    match op {
        AtmOp::CheckPin(_) => None,
        _ => Some(AtmRes::Unit),
    }
}

fn card_inserted_options() -> Gen<(AtmOp, AtmRes)> {
    let [w_correct, w_incorrect, w_eject] = CARD_WEIGHTS;
    frequency(vec![
        (
            w_correct,
            gen_pure((AtmOp::CheckPin(GENERATED_PIN), AtmRes::Pin(PinOk::Correct))),
        ),
        (
            w_incorrect,
            gen_pure((
                AtmOp::CheckPin(GENERATED_PIN),
                AtmRes::Pin(PinOk::Incorrect),
            )),
        ),
        (w_eject, gen_pure((AtmOp::Eject, AtmRes::Unit))),
    ])
    .expect("positive weights")
}

fn session_options() -> Gen<(AtmOp, AtmRes)> {
    u64::arbitrary().bind(|amount| {
        one_of(vec![
            gen_pure((AtmOp::Dispense(amount), AtmRes::Unit)),
            gen_pure((AtmOp::Eject, AtmRes::Unit)),
        ])
        .expect("two options")
    })
}

fn ratio(num: u32, den: u32) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn card_inserted_kernel<S>(correct: S, incorrect: S, eject: S) -> Vec<Branch<S>> {
    let total: u32 = CARD_WEIGHTS.iter().sum();
    vec![
        Branch::new(ratio(CARD_WEIGHTS[0], total), correct, "CheckPIN ~ Correct"),
        Branch::new(
            ratio(CARD_WEIGHTS[1], total),
            incorrect,
            "CheckPIN ~ Incorrect",
        ),
        Branch::new(ratio(CARD_WEIGHTS[2], total), eject, "Eject"),
    ]
}

fn session_kernel<S>(session: S, ready: S) -> Vec<Branch<S>> {
    vec![
        Branch::new(ratio(1, 2), session, "Dispense"),
        Branch::new(ratio(1, 2), ready, "Eject"),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtmStateBuggy {
    Ready,
    CardInserted,
    Session,
}

pub fn chk_pin_fn_buggy(r: PinOk) -> AtmStateBuggy {
    match r {
        PinOk::Correct => AtmStateBuggy::Session,
        PinOk::Incorrect => AtmStateBuggy::CardInserted,
    }
}

/// ATM whose PIN check never runs out of retries.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuggyAtm;

impl IsmModel for BuggyAtm {
    type State = AtmStateBuggy;
    type Op = AtmOp;
    type Res = AtmRes;

    fn op_type_name(&self) -> &str {
        "ATMOp"
    }

    fn state_term(&self, state: &AtmStateBuggy) -> Term {
        Term::atom(match state {
            AtmStateBuggy::Ready => "Ready",
            AtmStateBuggy::CardInserted => "CardInserted",
            AtmStateBuggy::Session => "Session",
        })
    }

    fn source(&self, op: &AtmOp) -> Term {
        match op {
            AtmOp::Insert => Term::atom("Ready"),
            AtmOp::CheckPin(_) => Term::atom("CardInserted"),
            AtmOp::Dispense(_) => Term::atom("Session"),
            AtmOp::Eject => Term::meta("st"),
        }
    }

    fn next_state(&self, op: &AtmOp, _from: &AtmStateBuggy, res: &AtmRes) -> AtmStateBuggy {
        match (op, res) {
            (AtmOp::Insert, _) => AtmStateBuggy::CardInserted,
            (AtmOp::CheckPin(_), AtmRes::Pin(r)) => chk_pin_fn_buggy(*r),
            (AtmOp::Dispense(_), _) => AtmStateBuggy::Session,
            (AtmOp::Eject, _) => AtmStateBuggy::Ready,
            (AtmOp::CheckPin(_), AtmRes::Unit) => unreachable!("result type checked"),
        }
    }

    fn admits_result(&self, op: &AtmOp, res: &AtmRes) -> bool {
        admits_result(op, res)
    }

    fn trivial_result(&self, op: &AtmOp) -> Option<AtmRes> {
        trivial_result(op)
    }

    // Eject from Ready is legal but deliberately never generated.
    fn options(&self, state: &AtmStateBuggy) -> Option<Gen<(AtmOp, AtmRes)>> {
        Some(match state {
            AtmStateBuggy::Ready => gen_pure((AtmOp::Insert, AtmRes::Unit)),
            AtmStateBuggy::CardInserted => card_inserted_options(),
            AtmStateBuggy::Session => session_options(),
        })
    }

    fn render_op(&self, op: &AtmOp) -> String {
        render_op(op)
    }

    fn render_result(&self, res: &AtmRes) -> String {
        render_result(res)
    }
}

impl DeclaredKernel for BuggyAtm {
    fn kernel(&self, state: &AtmStateBuggy) -> Option<Vec<Branch<AtmStateBuggy>>> {
        use AtmStateBuggy::*;
        Some(match state {
            Ready => vec![Branch::new(ratio(1, 1), CardInserted, "Insert")],
            CardInserted => card_inserted_kernel(Session, CardInserted, Ready),
            Session => session_kernel(Session, Ready),
        })
    }
}

/// Retries left after a card is inserted.
pub const INITIAL_RETRIES: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtmStateFixed {
    Ready,
    CardInserted(u64),
    Session,
}

/// With zero retries left the attempt is final: a wrong PIN resets the
/// machine.
pub fn chk_pin_fn_fixed(retries: u64, r: PinOk) -> AtmStateFixed {
    match (retries, r) {
        (_, PinOk::Correct) => AtmStateFixed::Session,
        (0, PinOk::Incorrect) => AtmStateFixed::Ready,
        (k, PinOk::Incorrect) => AtmStateFixed::CardInserted(k - 1),
    }
}

/// ATM that allows three PIN attempts per card.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedAtm;

impl IsmModel for FixedAtm {
    type State = AtmStateFixed;
    type Op = AtmOp;
    type Res = AtmRes;

    fn op_type_name(&self) -> &str {
        "ATMOp"
    }

    fn state_term(&self, state: &AtmStateFixed) -> Term {
        match state {
            AtmStateFixed::Ready => Term::atom("Ready"),
            AtmStateFixed::CardInserted(n) => Term::ctor("CardInserted", vec![Term::Nat(*n)]),
            AtmStateFixed::Session => Term::atom("Session"),
        }
    }

    fn source(&self, op: &AtmOp) -> Term {
        match op {
            AtmOp::Insert => Term::atom("Ready"),
            AtmOp::CheckPin(_) => Term::ctor("CardInserted", vec![Term::meta("tries")]),
            AtmOp::Dispense(_) => Term::atom("Session"),
            AtmOp::Eject => Term::meta("st"),
        }
    }

    fn next_state(&self, op: &AtmOp, from: &AtmStateFixed, res: &AtmRes) -> AtmStateFixed {
        match (op, res) {
            (AtmOp::Insert, _) => AtmStateFixed::CardInserted(INITIAL_RETRIES),
            (AtmOp::CheckPin(_), AtmRes::Pin(r)) => match from {
                AtmStateFixed::CardInserted(tries) => chk_pin_fn_fixed(*tries, *r),
                _ => unreachable!("source checked"),
            },
            (AtmOp::Dispense(_), _) => AtmStateFixed::Session,
            (AtmOp::Eject, _) => AtmStateFixed::Ready,
            (AtmOp::CheckPin(_), AtmRes::Unit) => unreachable!("result type checked"),
        }
    }

    fn admits_result(&self, op: &AtmOp, res: &AtmRes) -> bool {
        admits_result(op, res)
    }

    fn trivial_result(&self, op: &AtmOp) -> Option<AtmRes> {
        trivial_result(op)
    }

    fn options(&self, state: &AtmStateFixed) -> Option<Gen<(AtmOp, AtmRes)>> {
        Some(match state {
            AtmStateFixed::Ready => gen_pure((AtmOp::Insert, AtmRes::Unit)),
            AtmStateFixed::CardInserted(_) => card_inserted_options(),
            AtmStateFixed::Session => session_options(),
        })
    }

    fn render_op(&self, op: &AtmOp) -> String {
        render_op(op)
    }

    fn render_result(&self, res: &AtmRes) -> String {
        render_result(res)
    }
}

impl DeclaredKernel for FixedAtm {
    fn kernel(&self, state: &AtmStateFixed) -> Option<Vec<Branch<AtmStateFixed>>> {
        use AtmStateFixed::*;
        Some(match state {
            Ready => vec![Branch::new(
                ratio(1, 1),
                CardInserted(INITIAL_RETRIES),
                "Insert",
            )],
            CardInserted(tries) => card_inserted_kernel(
                chk_pin_fn_fixed(*tries, PinOk::Correct),
                chk_pin_fn_fixed(*tries, PinOk::Incorrect),
                Ready,
            ),
            Session => session_kernel(Session, Ready),
        })
    }
}

/// Starting from `Ready`, the first operation leads to a card-inserted state.
/// Traces that start elsewhere or have no steps fail.
pub fn prop_ready_insert_buggy(t: &Trace<BuggyAtm>) -> bool {
    *t.init() == AtmStateBuggy::Ready
        && t.steps().first().map(|s| *s.result_state()) == Some(AtmStateBuggy::CardInserted)
}

pub fn prop_ready_insert_fixed(t: &Trace<FixedAtm>) -> bool {
    *t.init() == AtmStateFixed::Ready
        && matches!(
            t.steps().first().map(|s| *s.result_state()),
            Some(AtmStateFixed::CardInserted(_))
        )
}

/// Some step of a trace from `Ready` returns the machine to `Ready`.
pub fn prop_eventually_ready_buggy(t: &Trace<BuggyAtm>) -> bool {
    *t.init() == AtmStateBuggy::Ready && t.states().contains(&AtmStateBuggy::Ready)
}

pub fn prop_eventually_ready_fixed(t: &Trace<FixedAtm>) -> bool {
    *t.init() == AtmStateFixed::Ready && t.states().contains(&AtmStateFixed::Ready)
}

/// Insert, a correct PIN, one withdrawal, eject. A wrong PIN reaches an
/// unwritten branch.
pub fn test_prog<M>() -> Program<M, ()>
where
    M: IsmModel<Op = AtmOp, Res = AtmRes>,
    M::State: ReadyState,
{
    let body = Prog::op(AtmOp::Insert, |_| {
        Prog::op(AtmOp::CheckPin(1234), |r| match r {
            AtmRes::Pin(PinOk::Correct) => Prog::op(AtmOp::Dispense(42), |_| {
                Prog::op(AtmOp::Eject, |_| Prog::pure(()))
            }),
            _ => Prog::hole("handle_incorrect"),
        })
    });
    Program::new(M::State::ready(), |_| M::State::ready(), body)
}

/// Dispensing straight after inserting a card.
pub fn bad_prog() -> Program<BuggyAtm, ()> {
    let body = Prog::op(AtmOp::Insert, |_| {
        Prog::op(AtmOp::Dispense(42), |_| Prog::pure(()))
    });
    Program::new(AtmStateBuggy::Ready, |_| AtmStateBuggy::Ready, body)
}

/// Inserts a card and keeps guessing the same PIN for as long as it is
/// rejected. Accepted by the buggy model; never returns.
pub fn loop_prog() -> Program<BuggyAtm, ()> {
    fn attempt(pin: i64) -> Prog<BuggyAtm, ()> {
        Prog::op(AtmOp::CheckPin(pin), move |r| match r {
            AtmRes::Pin(PinOk::Incorrect) => attempt(pin),
            _ => Prog::hole("omitted"),
        })
    }
    let body = Prog::op(AtmOp::Insert, |_| attempt(4321));
    Program::new(AtmStateBuggy::Ready, |_| AtmStateBuggy::Ready, body)
}

/// Four wrong PINs in a row on the fixed machine. The fourth attempt is made
/// from `Ready` and is rejected.
pub fn no_loop() -> Program<FixedAtm, ()> {
    static PINS: [i64; 4] = [1234, 1243, 1432, 4231];
    fn chain(pins: &'static [i64]) -> Prog<FixedAtm, ()> {
        match pins.split_first() {
            None => Prog::hole("noLoop_rhs"),
            Some((&pin, rest)) => Prog::op(AtmOp::CheckPin(pin), move |r| match r {
                AtmRes::Pin(PinOk::Incorrect) => chain(rest),
                _ => Prog::hole("noLoop_correct"),
            }),
        }
    }
    let body = Prog::op(AtmOp::Insert, |_| chain(&PINS));
    Program::new(AtmStateFixed::Ready, |_| AtmStateFixed::Ready, body)
}

/// States with a distinguished `Ready` value, so programs can be shared
/// between the two ATM models.
pub trait ReadyState {
    fn ready() -> Self;
}

impl ReadyState for AtmStateBuggy {
    fn ready() -> Self {
        AtmStateBuggy::Ready
    }
}

impl ReadyState for AtmStateFixed {
    fn ready() -> Self {
        AtmStateFixed::Ready
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ism::{gen_trace, OpRes, TraceStep};
    use crate::prng::RngState;
    use proptest::prelude::*;

    fn draws<T: 'static>(g: &Gen<T>, seed: u64, n: usize) -> Vec<T> {
        let mut rng = RngState::new(seed);
        (0..n)
            .map(|_| {
                let (now, later) = rng.split();
                rng = later;
                g.run(30, now)
            })
            .collect()
    }

    fn within_3_sigma(count: usize, n: usize, p: f64) -> bool {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        (count as f64 - n as f64 * p).abs() <= 3.0 * sigma
    }

    fn step<M: IsmModel<Op = AtmOp, Res = AtmRes>>(
        m: &M,
        from: M::State,
        op: AtmOp,
        res: AtmRes,
    ) -> TraceStep<M> {
        TraceStep::new(OpRes::new(m, from, op, res).unwrap())
    }

    #[test]
    fn chk_pin_buggy() {
        assert_eq!(chk_pin_fn_buggy(PinOk::Correct), AtmStateBuggy::Session);
        assert_eq!(
            chk_pin_fn_buggy(PinOk::Incorrect),
            AtmStateBuggy::CardInserted
        );
    }

    #[test]
    fn chk_pin_fixed() {
        assert_eq!(chk_pin_fn_fixed(0, PinOk::Incorrect), AtmStateFixed::Ready);
        assert_eq!(
            chk_pin_fn_fixed(2, PinOk::Incorrect),
            AtmStateFixed::CardInserted(1)
        );
        assert_eq!(chk_pin_fn_fixed(0, PinOk::Correct), AtmStateFixed::Session);
    }

    #[test]
    fn three_wrong_pins_reset_the_fixed_machine() {
        let mut s = AtmStateFixed::Ready;
        let mut seen = Vec::new();
        for (op, res) in [
            (AtmOp::Insert, AtmRes::Unit),
            (AtmOp::CheckPin(0), AtmRes::Pin(PinOk::Incorrect)),
            (AtmOp::CheckPin(0), AtmRes::Pin(PinOk::Incorrect)),
            (AtmOp::CheckPin(0), AtmRes::Pin(PinOk::Incorrect)),
        ] {
            s = OpRes::new(&FixedAtm, s, op, res).unwrap().next_state();
            seen.push(s);
        }
        use AtmStateFixed::*;
        assert_eq!(
            seen,
            vec![CardInserted(2), CardInserted(1), CardInserted(0), Ready]
        );
    }

    #[test]
    fn ready_only_inserts() {
        for (op, res) in draws(&BuggyAtm.options(&AtmStateBuggy::Ready).unwrap(), 1, 200) {
            assert_eq!((op, res), (AtmOp::Insert, AtmRes::Unit));
        }
        let op_res =
            OpRes::new(&FixedAtm, AtmStateFixed::Ready, AtmOp::Insert, AtmRes::Unit).unwrap();
        assert_eq!(op_res.next_state(), AtmStateFixed::CardInserted(2));
    }

    #[test]
    fn card_inserted_frequencies() {
        let n = 10_000;
        let xs = draws(
            &BuggyAtm.options(&AtmStateBuggy::CardInserted).unwrap(),
            20240527,
            n,
        );
        let count = |want: (AtmOp, AtmRes)| xs.iter().filter(|x| **x == want).count();
        let correct = count((AtmOp::CheckPin(0), AtmRes::Pin(PinOk::Correct)));
        let incorrect = count((AtmOp::CheckPin(0), AtmRes::Pin(PinOk::Incorrect)));
        let eject = count((AtmOp::Eject, AtmRes::Unit));
        assert_eq!(correct + incorrect + eject, n);
        assert!(within_3_sigma(correct, n, 1.0 / 6.0), "{correct}");
        assert!(within_3_sigma(incorrect, n, 4.0 / 6.0), "{incorrect}");
        assert!(within_3_sigma(eject, n, 1.0 / 6.0), "{eject}");
    }

    #[test]
    fn session_only_dispenses_or_ejects() {
        let xs = draws(&FixedAtm.options(&AtmStateFixed::Session).unwrap(), 9, 2000);
        assert!(xs
            .iter()
            .all(|(op, _)| matches!(op, AtmOp::Dispense(a) if *a <= 100) || *op == AtmOp::Eject));
        let dispenses = xs.iter().filter(|(op, _)| *op != AtmOp::Eject).count();
        assert!(within_3_sigma(dispenses, 2000, 0.5));
    }

    #[test]
    fn ready_insert_examples() {
        let ins = step(&BuggyAtm, AtmStateBuggy::Ready, AtmOp::Insert, AtmRes::Unit);
        let t = Trace::new(AtmStateBuggy::Ready, 1, vec![ins]).unwrap();
        assert!(prop_ready_insert_buggy(&t));
        let eject = step(&BuggyAtm, AtmStateBuggy::Ready, AtmOp::Eject, AtmRes::Unit);
        assert!(!prop_ready_insert_buggy(
            &Trace::new(AtmStateBuggy::Ready, 1, vec![eject]).unwrap()
        ));
        let pin = step(
            &BuggyAtm,
            AtmStateBuggy::CardInserted,
            AtmOp::CheckPin(0),
            AtmRes::Pin(PinOk::Correct),
        );
        let t = Trace::new(AtmStateBuggy::CardInserted, 1, vec![pin]).unwrap();
        assert!(!prop_ready_insert_buggy(&t));
        assert!(!prop_ready_insert_buggy(&Trace::empty(
            AtmStateBuggy::Ready
        )));
        assert!(!prop_ready_insert_fixed(&Trace::empty(
            AtmStateFixed::Ready
        )));
    }

    #[test]
    fn retry_loop_is_a_counterexample() {
        let mut steps = vec![step(
            &BuggyAtm,
            AtmStateBuggy::Ready,
            AtmOp::Insert,
            AtmRes::Unit,
        )];
        for _ in 0..9 {
            steps.push(step(
                &BuggyAtm,
                AtmStateBuggy::CardInserted,
                AtmOp::CheckPin(0),
                AtmRes::Pin(PinOk::Incorrect),
            ));
        }
        let t = Trace::new(AtmStateBuggy::Ready, 10, steps).unwrap();
        assert!(!prop_eventually_ready_buggy(&t));
    }

    #[test]
    fn session_tail_without_eject_is_a_counterexample() {
        use AtmStateFixed::*;
        let mut steps = vec![
            step(&FixedAtm, Ready, AtmOp::Insert, AtmRes::Unit),
            step(
                &FixedAtm,
                CardInserted(2),
                AtmOp::CheckPin(0),
                AtmRes::Pin(PinOk::Correct),
            ),
        ];
        for amount in 0..8 {
            steps.push(step(
                &FixedAtm,
                Session,
                AtmOp::Dispense(amount),
                AtmRes::Unit,
            ));
        }
        let t = Trace::new(Ready, 10, steps.clone()).unwrap();
        assert!(!prop_eventually_ready_fixed(&t));
        steps[9] = step(&FixedAtm, Session, AtmOp::Eject, AtmRes::Unit);
        assert!(prop_eventually_ready_fixed(
            &Trace::new(Ready, 10, steps).unwrap()
        ));
    }

    #[test]
    fn eject_from_ready_is_legal_but_never_generated() {
        assert!(OpRes::new(&BuggyAtm, AtmStateBuggy::Ready, AtmOp::Eject, AtmRes::Unit).is_ok());
    }

    proptest! {
        #[test]
        fn generated_ops_fire_from_their_sources(seed in any::<u64>()) {
            let t = gen_trace(&FixedAtm, AtmStateFixed::Ready, 10).run(30, RngState::new(seed)).unwrap();
            for s in t.steps() {
                let from = *s.op_res().from_state();
                match s.op_res().op() {
                    AtmOp::Dispense(_) => prop_assert_eq!(from, AtmStateFixed::Session),
                    AtmOp::Insert => prop_assert_eq!(from, AtmStateFixed::Ready),
                    AtmOp::CheckPin(pin) => {
                        prop_assert_eq!(*pin, GENERATED_PIN);
                        prop_assert!(matches!(from, AtmStateFixed::CardInserted(k) if k <= INITIAL_RETRIES));
                    }
                    AtmOp::Eject => prop_assert_ne!(from, AtmStateFixed::Ready),
                }
            }
            prop_assert!(prop_ready_insert_fixed(&t));
        }
    }
}
