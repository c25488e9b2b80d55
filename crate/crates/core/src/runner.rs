//! QuickCheck-style property runner.
//!
//! Test `i` draws its input from [`test_rng`]`(seed, i)`, so every
//! counterexample can be regenerated from the seed and its test index alone.
//! The runner walks the chain of right splits from the root and hands each
//! test the left branch of its node. Handing out the chain nodes themselves
//! would make consecutive inputs overlap, because generators that recurse on
//! their right split walk the same chain.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gen::{Gen, DEFAULT_SIZE};
use crate::prng::RngState;

pub const DEFAULT_SEED: u64 = 20240527;
pub const DEFAULT_MAX_TESTS: u32 = 100;
pub const DEFAULT_MAX_DISCARDS: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("max_tests must be at least 1")]
    ZeroTests,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QcConfig {
    max_tests: u32,
    max_discards: u32,
    size: usize,
    seed: u64,
}

impl Default for QcConfig {
    fn default() -> Self {
        QcConfig {
            max_tests: DEFAULT_MAX_TESTS,
            max_discards: DEFAULT_MAX_DISCARDS,
            size: DEFAULT_SIZE,
            seed: DEFAULT_SEED,
        }
    }
}

impl QcConfig {
    pub fn with_seed(seed: u64) -> Self {
        QcConfig {
            seed,
            ..QcConfig::default()
        }
    }

    pub fn max_tests(self, max_tests: u32) -> Result<Self, ConfigError> {
        if max_tests == 0 {
            return Err(ConfigError::ZeroTests);
        }
        Ok(QcConfig { max_tests, ..self })
    }

    pub fn max_discards(self, max_discards: u32) -> Self {
        QcConfig {
            max_discards,
            ..self
        }
    }

    pub fn size(self, size: usize) -> Self {
        QcConfig { size, ..self }
    }

    pub fn seed(self, seed: u64) -> Self {
        QcConfig { seed, ..self }
    }

    pub fn get_max_tests(&self) -> u32 {
        self.max_tests
    }

    pub fn get_max_discards(&self) -> u32 {
        self.max_discards
    }

    pub fn get_size(&self) -> usize {
        self.size
    }

    pub fn get_seed(&self) -> u64 {
        self.seed
    }
}

/// Generator state for test number `index` (zero-based) under `seed`: the
/// left branch of the `index`-th node in the chain of right splits from the
/// root state.
pub fn test_rng(seed: u64, index: u64) -> RngState {
    let mut rng = RngState::new(seed);
    for _ in 0..index {
        rng = rng.split().1;
    }
    rng.split().0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestOutcome {
    Pass,
    Fail,
    Discard,
}

impl From<bool> for TestOutcome {
    fn from(ok: bool) -> Self {
        if ok {
            TestOutcome::Pass
        } else {
            TestOutcome::Fail
        }
    }
}

type Predicate<T> = dyn Fn(&T) -> TestOutcome + Send + Sync;
type Render<T> = dyn Fn(&T) -> String + Send + Sync;

pub struct Property<T> {
    input: Gen<T>,
    predicate: Arc<Predicate<T>>,
    render: Arc<Render<T>>,
}

impl<T> Clone for Property<T> {
    fn clone(&self) -> Self {
        Property {
            input: self.input.clone(),
            predicate: Arc::clone(&self.predicate),
            render: Arc::clone(&self.render),
        }
    }
}

impl<T: 'static> Property<T> {
    pub fn new(
        input: Gen<T>,
        predicate: impl Fn(&T) -> TestOutcome + Send + Sync + 'static,
        render: impl Fn(&T) -> String + Send + Sync + 'static,
    ) -> Self {
        Property {
            input,
            predicate: Arc::new(predicate),
            render: Arc::new(render),
        }
    }

    pub fn check(&self, input: &T) -> TestOutcome {
        (self.predicate)(input)
    }

    pub fn render(&self, input: &T) -> String {
        (self.render)(input)
    }

    /// Regenerates the input of test `index` under `cfg`.
    pub fn generate(&self, cfg: &QcConfig, index: u64) -> T {
        self.input.run(cfg.size, test_rng(cfg.seed, index))
    }

    pub fn input(&self) -> &Gen<T> {
        &self.input
    }
}

/// A property that never discards.
pub fn for_all<T: 'static>(
    input: Gen<T>,
    predicate: impl Fn(&T) -> bool + Send + Sync + 'static,
    render: impl Fn(&T) -> String + Send + Sync + 'static,
) -> Property<T> {
    Property::new(input, move |x| predicate(x).into(), render)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Passed,
    Falsified,
    Exhausted,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Passed => "passed",
            Verdict::Falsified => "falsified",
            Verdict::Exhausted => "exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    /// Zero-based index of the generated input, counting discards.
    pub test_index: u64,
    pub rendered: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QcResult {
    pub verdict: Verdict,
    /// Non-discarded tests evaluated, including a failing one.
    pub tests_run: u32,
    pub discarded: u32,
    pub seed: u64,
    pub counterexample: Option<Counterexample>,
    pub log: String,
}

impl QcResult {
    /// `Some(true)` passed, `Some(false)` falsified, `None` exhausted.
    pub fn pass(&self) -> Option<bool> {
        match self.verdict {
            Verdict::Passed => Some(true),
            Verdict::Falsified => Some(false),
            Verdict::Exhausted => None,
        }
    }
}

pub fn quick_check<T: 'static>(cfg: &QcConfig, prop: &Property<T>) -> QcResult {
    let mut tests_run = 0u32;
    let mut discarded = 0u32;
    let mut index = 0u64;
    let mut rng = RngState::new(cfg.seed);
    while tests_run < cfg.max_tests {
        let (here, rest) = rng.split();
        rng = rest;
        let input = prop.input.run(cfg.size, here);
        match prop.check(&input) {
            TestOutcome::Pass => tests_run += 1,
            TestOutcome::Fail => {
                tests_run += 1;
                let rendered = prop.render(&input);
                let log = format!("Falsifiable, after {tests_run} tests:\n{rendered}");
                return QcResult {
                    verdict: Verdict::Falsified,
                    tests_run,
                    discarded,
                    seed: cfg.seed,
                    counterexample: Some(Counterexample {
                        test_index: index,
                        rendered,
                    }),
                    log,
                };
            }
            TestOutcome::Discard => {
                discarded += 1;
                if discarded > cfg.max_discards {
                    return QcResult {
                        verdict: Verdict::Exhausted,
                        tests_run,
                        discarded,
                        seed: cfg.seed,
                        counterexample: None,
                        log: format!("Gave up! Passed only {tests_run} tests."),
                    };
                }
            }
        }
        index += 1;
    }
    QcResult {
        verdict: Verdict::Passed,
        tests_run,
        discarded,
        seed: cfg.seed,
        counterexample: None,
        log: format!("OK, passed {tests_run} tests"),
    }
}

/// Collapses a result to a boolean, counting exhaustion as `allow_exhaust`.
pub fn check_bool(allow_exhaust: bool, result: &QcResult) -> bool {
    result.pass().unwrap_or(allow_exhaust)
}
