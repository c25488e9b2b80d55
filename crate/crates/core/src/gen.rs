//! Deterministic generators.
//!
//! A [`Gen<T>`] is a pure function of a size parameter and an [`RngState`].
//! `bind` splits the generator state, handing the left branch to the head
//! generator and the right branch to the continuation. Nothing here shrinks.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::prng::RngState;

/// Size threaded through every generator. The shipped models ignore it.
pub const DEFAULT_SIZE: usize = 30;

/// Range used by `Arbitrary for i64`.
pub const INT_RANGE: (i64, i64) = (-100, 100);
/// Range used by `Arbitrary` for non-negative integers.
pub const NAT_RANGE: (u64, u64) = (0, 100);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("empty range: lo ({lo}) > hi ({hi})")]
    EmptyRange { lo: i64, hi: i64 },
    #[error("cannot choose from an empty list of generators")]
    EmptyChoice,
    #[error("weight at index {index} is zero")]
    ZeroWeight { index: usize },
    #[error("Mismatch between: {actual} and {declared}.")]
    LengthMismatch { declared: usize, actual: usize },
}

type RunFn<T> = dyn Fn(usize, RngState) -> T + Send + Sync;

pub struct Gen<T> {
    run: Arc<RunFn<T>>,
}

impl<T> Clone for Gen<T> {
    fn clone(&self) -> Self {
        Gen {
            run: Arc::clone(&self.run),
        }
    }
}

impl<T> fmt::Debug for Gen<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Gen(..)")
    }
}

impl<T: 'static> Gen<T> {
    pub fn new(run: impl Fn(usize, RngState) -> T + Send + Sync + 'static) -> Self {
        Gen { run: Arc::new(run) }
    }

    pub fn run(&self, size: usize, rng: RngState) -> T {
        (self.run)(size, rng)
    }

    pub fn pure(value: T) -> Self
    where
        T: Clone + Send + Sync,
    {
        Gen::new(move |_, _| value.clone())
    }

    /// Monadic bind: `run(n, r0) = k(self.run(n, r1)).run(n, r2)` where
    /// `(r1, r2) = r0.split()`.
    pub fn bind<B: 'static>(self, k: impl Fn(T) -> Gen<B> + Send + Sync + 'static) -> Gen<B> {
        Gen::new(move |size, r0| {
            let (r1, r2) = r0.split();
            k(self.run(size, r1)).run(size, r2)
        })
    }

    pub fn map<B: 'static>(self, f: impl Fn(T) -> B + Send + Sync + 'static) -> Gen<B> {
        Gen::new(move |size, rng| f(self.run(size, rng)))
    }

    /// Runs the generator with a caller-chosen size instead of the ambient one.
    pub fn resize(self, size: usize) -> Gen<T> {
        Gen::new(move |_, rng| self.run(size, rng))
    }
}

pub fn gen_pure<T: Clone + Send + Sync + 'static>(value: T) -> Gen<T> {
    Gen::pure(value)
}

pub fn gen_bind<A: 'static, B: 'static>(
    g: Gen<A>,
    k: impl Fn(A) -> Gen<B> + Send + Sync + 'static,
) -> Gen<B> {
    g.bind(k)
}

/// Uniform integer in `[lo, hi]`.
pub fn choose(lo: i64, hi: i64) -> Result<Gen<i64>, GenError> {
    if lo > hi {
        return Err(GenError::EmptyRange { lo, hi });
    }
    Ok(Gen::new(move |_, rng| {
        rng.range(lo, hi).expect("range checked at construction").1
    }))
}

fn choose_index(len: usize) -> Gen<usize> {
    Gen::new(move |_, rng| rng.below(len as u64).1 as usize)
}

/// Picks one of `gens` uniformly.
pub fn one_of<T: 'static>(gens: Vec<Gen<T>>) -> Result<Gen<T>, GenError> {
    if gens.is_empty() {
        return Err(GenError::EmptyChoice);
    }
    let gens = Arc::new(gens);
    Ok(choose_index(gens.len()).bind(move |i| gens[i].clone()))
}

/// Picks generator `i` with probability `weight_i / sum(weights)`.
pub fn frequency<T: 'static>(weighted: Vec<(u32, Gen<T>)>) -> Result<Gen<T>, GenError> {
    if weighted.is_empty() {
        return Err(GenError::EmptyChoice);
    }
    if let Some(index) = weighted.iter().position(|(w, _)| *w == 0) {
        return Err(GenError::ZeroWeight { index });
    }
    let total: u64 = weighted.iter().map(|(w, _)| u64::from(*w)).sum();
    let weighted = Arc::new(weighted);
    let pick = Gen::new(move |_, rng: RngState| rng.below(total).1);
    Ok(pick.bind(move |mut ticket| {
        for (w, g) in weighted.iter() {
            if ticket < u64::from(*w) {
                return g.clone();
            }
            ticket -= u64::from(*w);
        }
        unreachable!("ticket below total weight")
    }))
}

/// Exactly `n` values from `g`, each with its own split of the generator
/// state, in generation order. Equivalent to the recursive
/// `x <- g; xs <- vector(n - 1, g)` formulation.
pub fn vector<T: 'static>(n: usize, g: Gen<T>) -> Gen<Vec<T>> {
    Gen::new(move |size, rng| {
        let mut out = Vec::with_capacity(n);
        let mut rest = rng;
        for _ in 0..n {
            let (head, tail) = rest.split();
            out.push(g.run(size, head));
            rest = tail;
        }
        out
    })
}

/// A list packaged with the length it was generated for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizedVec<T> {
    len: usize,
    items: Vec<T>,
}

impl<T> SizedVec<T> {
    pub fn new(len: usize, items: Vec<T>) -> Result<Self, GenError> {
        if items.len() != len {
            return Err(GenError::LengthMismatch {
                declared: len,
                actual: items.len(),
            });
        }
        Ok(SizedVec { len, items })
    }

    /// Pairs `items` with its own length.
    pub fn infer(items: Vec<T>) -> Self {
        SizedVec {
            len: items.len(),
            items,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn items(&self) -> &[T] {
        &self.items
    }

    pub fn into_parts(self) -> (usize, Vec<T>) {
        (self.len, self.items)
    }
}

/// Generates a length, then exactly that many elements.
pub fn sized_list<T: 'static>(len: Gen<usize>, elem: Gen<T>) -> Gen<SizedVec<T>> {
    len.bind(move |n| vector(n, elem.clone()).map(SizedVec::infer))
}

/// Re-keys `rng` by walking split branches along the binary digits of `v`.
/// Every digit costs two splits (continue, then digit) and the walk ends with
/// a terminal left branch, so distinct values take distinct paths.
pub fn variant_rng(v: u64, rng: RngState) -> RngState {
    let mut rng = rng;
    let mut v = v;
    loop {
        let (stop, more) = rng.split();
        if v == 0 {
            return stop;
        }
        let (zero, one) = more.split();
        rng = if v & 1 == 0 { zero } else { one };
        v >>= 1;
    }
}

pub fn variant<B: 'static>(v: u64, g: Gen<B>) -> Gen<B> {
    Gen::new(move |size, rng| g.run(size, variant_rng(v, rng)))
}

/// Perturbs a generator by a value of `Self`.
pub trait Coarbitrary {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B>;
}

fn zigzag(x: i64) -> u64 {
    ((x << 1) ^ (x >> 63)) as u64
}

impl Coarbitrary for () {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B> {
        variant(0, g)
    }
}

impl Coarbitrary for bool {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B> {
        variant(u64::from(*self), g)
    }
}

impl Coarbitrary for i64 {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B> {
        variant(zigzag(*self), g)
    }
}

impl Coarbitrary for u64 {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B> {
        variant(*self, g)
    }
}

impl Coarbitrary for usize {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B> {
        variant(*self as u64, g)
    }
}

impl Coarbitrary for u8 {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B> {
        variant(u64::from(*self), g)
    }
}

impl<X: Coarbitrary, Y: Coarbitrary> Coarbitrary for (X, Y) {
    fn coarbitrary<B: 'static>(&self, g: Gen<B>) -> Gen<B> {
        self.0.coarbitrary(self.1.coarbitrary(g))
    }
}

pub fn coarb_int<B: 'static>(x: i64, g: Gen<B>) -> Gen<B> {
    x.coarbitrary(g)
}

pub fn coarb_bool<B: 'static>(x: bool, g: Gen<B>) -> Gen<B> {
    x.coarbitrary(g)
}

pub fn coarb_unit<B: 'static>(g: Gen<B>) -> Gen<B> {
    ().coarbitrary(g)
}

type ApplyFn<A, B> = dyn Fn(&A) -> B + Send + Sync;

/// A total function produced by a generator, together with the size and
/// generator state it was drawn with.
pub struct GeneratedFn<A, B> {
    apply: Arc<ApplyFn<A, B>>,
    size: usize,
    rng: RngState,
}

impl<A, B> Clone for GeneratedFn<A, B> {
    fn clone(&self) -> Self {
        GeneratedFn {
            apply: Arc::clone(&self.apply),
            size: self.size,
            rng: self.rng,
        }
    }
}

impl<A, B> fmt::Debug for GeneratedFn<A, B> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<function size={} {:?}>", self.size, self.rng)
    }
}

impl<A, B> GeneratedFn<A, B> {
    pub fn apply(&self, x: &A) -> B {
        (self.apply)(x)
    }

    pub fn provenance(&self) -> (usize, RngState) {
        (self.size, self.rng)
    }
}

/// Turns a generator-valued function into a generator of functions. The
/// `(size, rng)` seen at generation time is captured and reused for every
/// application.
pub fn promote<A: 'static, B: 'static>(
    f: impl Fn(&A) -> Gen<B> + Send + Sync + 'static,
) -> Gen<GeneratedFn<A, B>> {
    let f = Arc::new(f);
    Gen::new(move |size, rng| {
        let f = Arc::clone(&f);
        GeneratedFn {
            apply: Arc::new(move |x: &A| f(x).run(size, rng)),
            size,
            rng,
        }
    })
}

pub fn gen_function<A: Coarbitrary + 'static, B: 'static>(g: Gen<B>) -> Gen<GeneratedFn<A, B>> {
    promote(move |x: &A| x.coarbitrary(g.clone()))
}

pub trait Arbitrary: Sized + 'static {
    fn arbitrary() -> Gen<Self>;
}

impl Arbitrary for () {
    fn arbitrary() -> Gen<Self> {
        Gen::pure(())
    }
}

impl Arbitrary for bool {
    fn arbitrary() -> Gen<Self> {
        Gen::new(|_, rng| rng.below(2).1 == 1)
    }
}

impl Arbitrary for i64 {
    fn arbitrary() -> Gen<Self> {
        choose(INT_RANGE.0, INT_RANGE.1).expect("constant range")
    }
}

impl Arbitrary for u64 {
    fn arbitrary() -> Gen<Self> {
        let (lo, hi) = NAT_RANGE;
        Gen::new(move |_, rng| lo + rng.below(hi - lo + 1).1)
    }
}

impl Arbitrary for usize {
    fn arbitrary() -> Gen<Self> {
        u64::arbitrary().map(|n| n as usize)
    }
}

impl Arbitrary for u8 {
    fn arbitrary() -> Gen<Self> {
        Gen::new(|_, rng| rng.below(256).1 as u8)
    }
}

impl<X, Y> Arbitrary for (X, Y)
where
    X: Arbitrary + Clone + Send + Sync,
    Y: Arbitrary,
{
    fn arbitrary() -> Gen<Self> {
        X::arbitrary().bind(|x| Y::arbitrary().map(move |y| (x.clone(), y)))
    }
}

impl<A: Coarbitrary + 'static, B: Arbitrary> Arbitrary for GeneratedFn<A, B> {
    fn arbitrary() -> Gen<Self> {
        gen_function(B::arbitrary())
    }
}

impl<A: Arbitrary + Send + Sync, B: Coarbitrary + 'static> Coarbitrary for GeneratedFn<A, B> {
    fn coarbitrary<C: 'static>(&self, g: Gen<C>) -> Gen<C> {
        let f = self.clone();
        A::arbitrary().bind(move |x| f.apply(&x).coarbitrary(g.clone()))
    }
}
