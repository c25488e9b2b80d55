//! Indexed state machines: operation records, bounded traces, and a
//! runtime-checked program interpreter.
//!
//! A model says, for every operation, which source states it accepts (as a
//! [`Term`] pattern) and how each result value maps to a next state. Trace
//! generation and the interpreter both go through [`OpRes::new`], which
//! attaches the model's own next-state function to the operation. Nothing
//! downstream can advance a trace by any other route.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::hash::Hash;
use std::mem;
use std::sync::Arc;

use thiserror::Error;

use crate::gen::{Gen, DEFAULT_SIZE};
use crate::prng::RngState;

pub const DEFAULT_FUEL: usize = 10_000;

/// First-order term used to render states and to describe the states an
/// operation may fire from.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Term {
    Ctor(String, Vec<Term>),
    Nat(u64),
    Int(i64),
    /// Pattern variable; matches any term, consistently by name.
    Meta(String),
}

impl Term {
    pub fn ctor(name: &str, args: Vec<Term>) -> Term {
        Term::Ctor(name.to_string(), args)
    }

    pub fn atom(name: &str) -> Term {
        Term::Ctor(name.to_string(), Vec::new())
    }

    pub fn meta(name: &str) -> Term {
        Term::Meta(name.to_string())
    }

    fn is_compound(&self) -> bool {
        matches!(self, Term::Ctor(_, args) if !args.is_empty())
            || matches!(self, Term::Int(i) if *i < 0)
    }

    /// Matches `self` (a pattern) against a ground term. On failure returns
    /// the innermost pair of disagreeing subterms.
    pub fn unify(&self, actual: &Term) -> Result<(), (Term, Term)> {
        let mut bound = BTreeMap::new();
        self.unify_into(actual, &mut bound)
    }

    fn unify_into(
        &self,
        actual: &Term,
        bound: &mut BTreeMap<String, Term>,
    ) -> Result<(), (Term, Term)> {
        match (self, actual) {
            (Term::Meta(name), _) => match bound.get(name) {
                Some(prev) if prev != actual => Err((prev.clone(), actual.clone())),
                Some(_) => Ok(()),
                None => {
                    bound.insert(name.clone(), actual.clone());
                    Ok(())
                }
            },
            (Term::Ctor(f, xs), Term::Ctor(g, ys)) if f == g && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    x.unify_into(y, bound)?;
                }
                Ok(())
            }
            (Term::Nat(a), Term::Nat(b)) if a == b => Ok(()),
            (Term::Int(a), Term::Int(b)) if a == b => Ok(()),
            _ => Err((self.clone(), actual.clone())),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Ctor(name, args) => {
                f.write_str(name)?;
                for a in args {
                    if a.is_compound() {
                        write!(f, " ({a})")?;
                    } else {
                        write!(f, " {a}")?;
                    }
                }
                Ok(())
            }
            Term::Nat(n) => write!(f, "{n}"),
            Term::Int(i) => write!(f, "{i}"),
            Term::Meta(name) => write!(f, "?{name}"),
        }
    }
}

/// A state-machine model.
pub trait IsmModel: Clone + Send + Sync + 'static {
    type State: Clone + Eq + Hash + fmt::Debug + Send + Sync + 'static;
    type Op: Clone + PartialEq + fmt::Debug + Send + Sync + 'static;
    type Res: Clone + PartialEq + fmt::Debug + Send + Sync + 'static;

    /// Name used in trace rendering, e.g. `ATMOp`.
    fn op_type_name(&self) -> &str;

    fn state_term(&self, state: &Self::State) -> Term;

    /// Pattern over states from which `op` may fire.
    fn source(&self, op: &Self::Op) -> Term;

    /// The next-state function of `op`, fired from `from`, applied to `res`.
    /// Only called once `from` matches `source(op)` and `res` is admitted.
    fn next_state(&self, op: &Self::Op, from: &Self::State, res: &Self::Res) -> Self::State;

    /// Whether `res` belongs to the result type of `op`.
    fn admits_result(&self, _op: &Self::Op, _res: &Self::Res) -> bool {
        true
    }

    /// The only result of `op` when its result type has a single value.
    fn trivial_result(&self, _op: &Self::Op) -> Option<Self::Res> {
        None
    }

    /// Generator of `(operation, result)` choices leaving `state`, or `None`
    /// when the model offers nothing from `state`.
    fn options(&self, state: &Self::State) -> Option<Gen<(Self::Op, Self::Res)>>;

    fn render_op(&self, op: &Self::Op) -> String;

    fn render_result(&self, res: &Self::Res) -> String;

    fn render_state(&self, state: &Self::State) -> String {
        self.state_term(state).to_string()
    }

    /// Whether two operations are the same operation up to their payload.
    fn same_kind(&self, a: &Self::Op, b: &Self::Op) -> bool {
        mem::discriminant(a) == mem::discriminant(b)
    }
}

/// A failed source-state check, reported the way a unifier would: the
/// innermost pair of subterms that disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mismatch {
    pub context: String,
    pub required: String,
    pub actual: String,
    pub expected_sub: String,
    pub found_sub: String,
}

impl Mismatch {
    fn new(context: String, pattern: &Term, actual: &Term, (want, got): (Term, Term)) -> Self {
        Mismatch {
            context,
            required: pattern.to_string(),
            actual: actual.to_string(),
            expected_sub: want.to_string(),
            found_sub: got.to_string(),
        }
    }
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} requires {} but the machine is in {}. Mismatch between: {} and {}.",
            self.context, self.required, self.actual, self.expected_sub, self.found_sub
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsmError {
    #[error("{0}")]
    TransitionMismatch(Mismatch),
    #[error("result `{result}` is not a result of `{op}`")]
    ResultType { op: String, result: String },
    #[error("model offers no operations from state {state}")]
    NoOptions { state: String },
    #[error("step claims result state {claimed} but the next-state function gives {actual}")]
    StepState { claimed: String, actual: String },
    #[error("step {index} starts in {found} but the previous state is {expected}")]
    BrokenChain {
        index: usize,
        expected: String,
        found: String,
    },
    #[error("trace bound {declared} but {actual} steps")]
    Length { declared: usize, actual: usize },
}

fn check_source<M: IsmModel>(model: &M, op: &M::Op, from: &M::State) -> Result<(), Mismatch> {
    let pattern = model.source(op);
    let actual = model.state_term(from);
    pattern
        .unify(&actual)
        .map_err(|sub| Mismatch::new(format!("`{}`", model.render_op(op)), &pattern, &actual, sub))
}

type NextStateFn<M> = Arc<dyn Fn(&<M as IsmModel>::Res) -> <M as IsmModel>::State + Send + Sync>;

/// An operation, the result it produced, the state it fired from and its
/// next-state function.
pub struct OpRes<M: IsmModel> {
    op: M::Op,
    result: M::Res,
    from_state: M::State,
    next_state_fn: NextStateFn<M>,
}

impl<M: IsmModel> Clone for OpRes<M> {
    fn clone(&self) -> Self {
        OpRes {
            op: self.op.clone(),
            result: self.result.clone(),
            from_state: self.from_state.clone(),
            next_state_fn: Arc::clone(&self.next_state_fn),
        }
    }
}

impl<M: IsmModel> OpRes<M> {
    pub fn new(model: &M, from: M::State, op: M::Op, result: M::Res) -> Result<Self, IsmError> {
        check_source(model, &op, &from).map_err(IsmError::TransitionMismatch)?;
        if !model.admits_result(&op, &result) {
            return Err(IsmError::ResultType {
                op: model.render_op(&op),
                result: model.render_result(&result),
            });
        }
        let next_state_fn: NextStateFn<M> = {
            let (model, op, from) = (model.clone(), op.clone(), from.clone());
            Arc::new(move |r: &M::Res| model.next_state(&op, &from, r))
        };
        Ok(OpRes {
            op,
            result,
            from_state: from,
            next_state_fn,
        })
    }

    pub fn op(&self) -> &M::Op {
        &self.op
    }

    pub fn result(&self) -> &M::Res {
        &self.result
    }

    pub fn from_state(&self) -> &M::State {
        &self.from_state
    }

    /// Applies the stored next-state function to an arbitrary result.
    pub fn next_state_for(&self, res: &M::Res) -> M::State {
        (self.next_state_fn)(res)
    }

    pub fn next_state(&self) -> M::State {
        self.next_state_for(&self.result)
    }
}

impl<M: IsmModel> PartialEq for OpRes<M> {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op && self.result == other.result && self.from_state == other.from_state
    }
}

impl<M: IsmModel> fmt::Debug for OpRes<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} ~ {:?} @ {:?}",
            self.op, self.result, self.from_state
        )
    }
}

pub struct TraceStep<M: IsmModel> {
    op_res: OpRes<M>,
    result_state: M::State,
}

impl<M: IsmModel> Clone for TraceStep<M> {
    fn clone(&self) -> Self {
        TraceStep {
            op_res: self.op_res.clone(),
            result_state: self.result_state.clone(),
        }
    }
}

impl<M: IsmModel> TraceStep<M> {
    pub fn new(op_res: OpRes<M>) -> Self {
        let result_state = op_res.next_state();
        TraceStep {
            op_res,
            result_state,
        }
    }

    /// Pairs `op_res` with a claimed result state, rejecting any state the
    /// next-state function does not produce.
    pub fn checked(op_res: OpRes<M>, claimed: M::State) -> Result<Self, IsmError> {
        let actual = op_res.next_state();
        if actual != claimed {
            return Err(IsmError::StepState {
                claimed: format!("{claimed:?}"),
                actual: format!("{actual:?}"),
            });
        }
        Ok(TraceStep {
            op_res,
            result_state: claimed,
        })
    }

    pub fn op_res(&self) -> &OpRes<M> {
        &self.op_res
    }

    pub fn result_state(&self) -> &M::State {
        &self.result_state
    }
}

impl<M: IsmModel> PartialEq for TraceStep<M> {
    fn eq(&self, other: &Self) -> bool {
        self.op_res == other.op_res && self.result_state == other.result_state
    }
}

impl<M: IsmModel> fmt::Debug for TraceStep<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?})", self.op_res, self.result_state)
    }
}

/// A chained sequence of exactly `bound` steps from `init`.
pub struct Trace<M: IsmModel> {
    init: M::State,
    steps: Vec<TraceStep<M>>,
}

impl<M: IsmModel> Clone for Trace<M> {
    fn clone(&self) -> Self {
        Trace {
            init: self.init.clone(),
            steps: self.steps.clone(),
        }
    }
}

impl<M: IsmModel> Trace<M> {
    pub fn empty(init: M::State) -> Self {
        Trace {
            init,
            steps: Vec::new(),
        }
    }

    pub fn new(init: M::State, bound: usize, steps: Vec<TraceStep<M>>) -> Result<Self, IsmError> {
        if steps.len() != bound {
            return Err(IsmError::Length {
                declared: bound,
                actual: steps.len(),
            });
        }
        let mut current = &init;
        for (index, step) in steps.iter().enumerate() {
            if step.op_res.from_state() != current {
                return Err(IsmError::BrokenChain {
                    index,
                    expected: format!("{current:?}"),
                    found: format!("{:?}", step.op_res.from_state()),
                });
            }
            current = &step.result_state;
        }
        Ok(Trace { init, steps })
    }

    pub fn init(&self) -> &M::State {
        &self.init
    }

    pub fn bound(&self) -> usize {
        self.steps.len()
    }

    pub fn steps(&self) -> &[TraceStep<M>] {
        &self.steps
    }

    /// State after the last step, or the initial state of an empty trace.
    pub fn final_state(&self) -> &M::State {
        self.steps.last().map_or(&self.init, |s| &s.result_state)
    }

    pub fn states(&self) -> Vec<M::State> {
        trace_states(self)
    }
}

impl<M: IsmModel> PartialEq for Trace<M> {
    fn eq(&self, other: &Self) -> bool {
        self.init == other.init && self.steps == other.steps
    }
}

impl<M: IsmModel> fmt::Debug for Trace<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trace")
            .field("init", &self.init)
            .field("steps", &self.steps)
            .finish()
    }
}

/// Result states of every step, in order.
pub fn trace_states<M: IsmModel>(trace: &Trace<M>) -> Vec<M::State> {
    trace.steps.iter().map(|s| s.result_state.clone()).collect()
}

/// Generator of validated operation records leaving `state`.
pub fn op_res_gen<M: IsmModel>(model: &M, state: &M::State) -> Gen<Result<OpRes<M>, IsmError>> {
    match model.options(state) {
        None => {
            let err = IsmError::NoOptions {
                state: model.render_state(state),
            };
            Gen::new(move |_, _| Err(err.clone()))
        }
        Some(choices) => {
            let (model, state) = (model.clone(), state.clone());
            choices.map(move |(op, res)| OpRes::new(&model, state.clone(), op, res))
        }
    }
}

fn trace_steps<M: IsmModel>(
    model: &M,
    init: &M::State,
    bound: usize,
    size: usize,
    rng: RngState,
) -> Result<Vec<TraceStep<M>>, IsmError> {
    let mut steps = Vec::with_capacity(bound);
    let mut state = init.clone();
    let mut rng = rng;
    for _ in 0..bound {
        let (head, tail) = rng.split();
        let op_res = op_res_gen(model, &state).run(size, head)?;
        let step = TraceStep::new(op_res);
        state = step.result_state.clone();
        steps.push(step);
        rng = tail;
    }
    Ok(steps)
}

/// Bounded random traces from `init`. Each step draws one option from the
/// current state (on the left split) and recurses on the right split, so this
/// is the recursive `opRes <- options st; rest <- trace k (nsFn res)` bind
/// chain unrolled into a loop.
pub fn gen_trace<M: IsmModel>(
    model: &M,
    init: M::State,
    bound: usize,
) -> Gen<Result<Trace<M>, IsmError>> {
    let model = model.clone();
    Gen::new(move |size, rng| {
        let steps = trace_steps(&model, &init, bound, size, rng)?;
        Ok(Trace {
            init: init.clone(),
            steps,
        })
    })
}

/// Counterexample rendering:
///
/// ```text
/// Starting @ Ready:
/// [ (<ATMOp 'Insert ~ ()'>, CardInserted)
/// , (<ATMOp 'CheckPIN 0 ~ Incorrect'>, CardInserted)
/// ]
/// ```
pub fn render_trace<M: IsmModel>(model: &M, trace: &Trace<M>) -> String {
    let mut out = format!("Starting @ {}:\n", model.render_state(&trace.init));
    if trace.steps.is_empty() {
        out.push_str("[]");
        return out;
    }
    for (i, step) in trace.steps.iter().enumerate() {
        let lead = if i == 0 { "[ " } else { ", " };
        out.push_str(&format!(
            "{lead}(<{} '{} ~ {}'>, {})\n",
            model.op_type_name(),
            model.render_op(&step.op_res.op),
            model.render_result(&step.op_res.result),
            model.render_state(&step.result_state)
        ));
    }
    out.push(']');
    out
}

type Continuation<M, T> = Arc<dyn Fn(&<M as IsmModel>::Res) -> Prog<M, T> + Send + Sync>;

/// A program over a model's operations. Continuations are built lazily, so
/// recursive programs are ordinary values; the interpreter bounds them with
/// fuel.
pub enum Prog<M: IsmModel, T> {
    Pure(T),
    Op {
        op: M::Op,
        then: Continuation<M, T>,
    },
    /// An unwritten branch.
    Hole(String),
}

impl<M: IsmModel, T> Clone for Prog<M, T>
where
    T: Clone,
{
    fn clone(&self) -> Self {
        match self {
            Prog::Pure(x) => Prog::Pure(x.clone()),
            Prog::Op { op, then } => Prog::Op {
                op: op.clone(),
                then: Arc::clone(then),
            },
            Prog::Hole(name) => Prog::Hole(name.clone()),
        }
    }
}

impl<M: IsmModel, T: Send + Sync + 'static> Prog<M, T> {
    pub fn pure(value: T) -> Self {
        Prog::Pure(value)
    }

    /// Emits `op` and continues with the handler for its result.
    pub fn op(op: M::Op, then: impl Fn(&M::Res) -> Prog<M, T> + Send + Sync + 'static) -> Self {
        Prog::Op {
            op,
            then: Arc::new(then),
        }
    }

    pub fn hole(name: &str) -> Self {
        Prog::Hole(name.to_string())
    }

    pub fn and_then<U: Send + Sync + 'static>(
        self,
        k: impl Fn(T) -> Prog<M, U> + Send + Sync + 'static,
    ) -> Prog<M, U> {
        self.and_then_shared(Arc::new(k))
    }

    fn and_then_shared<U: Send + Sync + 'static>(
        self,
        k: Arc<dyn Fn(T) -> Prog<M, U> + Send + Sync>,
    ) -> Prog<M, U> {
        match self {
            Prog::Pure(x) => k(x),
            Prog::Hole(name) => Prog::Hole(name),
            Prog::Op { op, then } => Prog::Op {
                op,
                then: Arc::new(move |r| then(r).and_then_shared(Arc::clone(&k))),
            },
        }
    }

    /// Sequencing that discards this program's value.
    pub fn then<U: Clone + Send + Sync + 'static>(self, next: Prog<M, U>) -> Prog<M, U> {
        self.and_then(move |_| next.clone())
    }
}

impl<M: IsmModel> Prog<M, M::Res> {
    /// Emits `op` and returns its result.
    pub fn emit(op: M::Op) -> Self {
        Prog::op(op, |r: &M::Res| Prog::Pure(r.clone()))
    }
}

type EndStateFn<M, T> = Arc<dyn Fn(&T) -> <M as IsmModel>::State + Send + Sync>;

/// A program with its declared start state and end-state function.
pub struct Program<M: IsmModel, T> {
    start: M::State,
    end: EndStateFn<M, T>,
    body: Prog<M, T>,
}

impl<M: IsmModel, T> Program<M, T> {
    pub fn new(
        start: M::State,
        end: impl Fn(&T) -> M::State + Send + Sync + 'static,
        body: Prog<M, T>,
    ) -> Self {
        Program {
            start,
            end: Arc::new(end),
            body,
        }
    }

    pub fn start(&self) -> &M::State {
        &self.start
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("{0}")]
    TransitionMismatch(Mismatch),
    #[error("{0}")]
    EndState(Mismatch),
    #[error("fuel exhausted after {fuel} operations in state {state}")]
    FuelExhausted { fuel: usize, state: String },
    #[error("reached hole ?{name} in state {state}")]
    Hole { name: String, state: String },
    #[error("environment has no result for `{op}`")]
    EnvExhausted { op: String },
    #[error("environment could not produce a result for `{op}` in state {state}")]
    NoResult { op: String, state: String },
    #[error("result `{result}` is not a result of `{op}`")]
    ResultType { op: String, result: String },
}

impl ProgramError {
    pub fn mismatch(&self) -> Option<&Mismatch> {
        match self {
            ProgramError::TransitionMismatch(m) | ProgramError::EndState(m) => Some(m),
            _ => None,
        }
    }
}

/// Supplies results for the operations a program emits.
pub trait Environment<M: IsmModel> {
    fn resolve(&mut self, model: &M, state: &M::State, op: &M::Op) -> Result<M::Res, ProgramError>;
}

/// Replays a fixed sequence of results. Operations with a single possible
/// result take it without consuming the script.
#[derive(Debug, Clone)]
pub struct Scripted<R> {
    results: VecDeque<R>,
}

impl<R> Scripted<R> {
    pub fn new(results: impl IntoIterator<Item = R>) -> Self {
        Scripted {
            results: results.into_iter().collect(),
        }
    }

    pub fn remaining(&self) -> usize {
        self.results.len()
    }
}

impl<M: IsmModel> Environment<M> for Scripted<M::Res> {
    fn resolve(
        &mut self,
        model: &M,
        _state: &M::State,
        op: &M::Op,
    ) -> Result<M::Res, ProgramError> {
        if let Some(r) = model.trivial_result(op) {
            return Ok(r);
        }
        self.results
            .pop_front()
            .ok_or_else(|| ProgramError::EnvExhausted {
                op: model.render_op(op),
            })
    }
}

/// Draws results from the model's own option generator, keeping only draws
/// of the same operation kind as the emitted one.
#[derive(Debug, Clone)]
pub struct Sampled {
    rng: RngState,
    size: usize,
    max_attempts: usize,
}

impl Sampled {
    pub fn new(seed: u64) -> Self {
        Sampled {
            rng: RngState::new(seed),
            size: DEFAULT_SIZE,
            max_attempts: 1000,
        }
    }
}

impl<M: IsmModel> Environment<M> for Sampled {
    fn resolve(&mut self, model: &M, state: &M::State, op: &M::Op) -> Result<M::Res, ProgramError> {
        let no_result = || ProgramError::NoResult {
            op: model.render_op(op),
            state: model.render_state(state),
        };
        let options = model.options(state).ok_or_else(no_result)?;
        for _ in 0..self.max_attempts {
            let (now, later) = self.rng.split();
            self.rng = later;
            let (candidate, res) = options.run(self.size, now);
            if model.same_kind(&candidate, op) {
                return Ok(res);
            }
        }
        Err(no_result())
    }
}

pub struct Execution<M: IsmModel, T> {
    pub final_state: M::State,
    pub value: T,
    pub trace: Trace<M>,
}

/// Runs `program` from its declared start state, checking every operation's
/// source state and the declared end state. At most `fuel` operations run.
pub fn run_program<M: IsmModel, T>(
    model: &M,
    program: &Program<M, T>,
    env: &mut impl Environment<M>,
    fuel: usize,
) -> Result<Execution<M, T>, ProgramError>
where
    T: Clone,
{
    let mut state = program.start.clone();
    let mut steps = Vec::new();
    let mut current = program.body.clone();
    loop {
        match current {
            Prog::Pure(value) => {
                let declared = (program.end)(&value);
                if declared != state {
                    let pattern = model.state_term(&declared);
                    let actual = model.state_term(&state);
                    let sub = pattern.unify(&actual).expect_err("states differ");
                    return Err(ProgramError::EndState(Mismatch::new(
                        "program end".to_string(),
                        &pattern,
                        &actual,
                        sub,
                    )));
                }
                let trace = Trace {
                    init: program.start.clone(),
                    steps,
                };
                return Ok(Execution {
                    final_state: state,
                    value,
                    trace,
                });
            }
            Prog::Hole(name) => {
                return Err(ProgramError::Hole {
                    name,
                    state: model.render_state(&state),
                })
            }
            Prog::Op { op, then } => {
                if steps.len() == fuel {
                    return Err(ProgramError::FuelExhausted {
                        fuel,
                        state: model.render_state(&state),
                    });
                }
                check_source(model, &op, &state).map_err(ProgramError::TransitionMismatch)?;
                let res = env.resolve(model, &state, &op)?;
                let op_label = model.render_op(&op);
                let op_res =
                    OpRes::new(model, state.clone(), op, res.clone()).map_err(|e| match e {
                        IsmError::TransitionMismatch(m) => ProgramError::TransitionMismatch(m),
                        _ => ProgramError::ResultType {
                            op: op_label,
                            result: model.render_result(&res),
                        },
                    })?;
                let step = TraceStep::new(op_res);
                state = step.result_state.clone();
                steps.push(step);
                current = then(&res);
            }
        }
    }
}
