//! Named property suites for the shipped models.

use std::fmt;

use clap::ValueEnum;
use num_rational::BigRational;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ism::{gen_trace, render_trace, IsmError, IsmModel, Trace};
use crate::models::arq::{self, AckDomain, Arq, ArqState};
use crate::models::atm::{self, AtmStateBuggy, AtmStateFixed, BuggyAtm, FixedAtm};
use crate::oracle::{model_visit_probability, DeclaredKernel, OracleError};
use crate::runner::{quick_check, Property, QcConfig, QcResult, TestOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SuiteName {
    AtmBuggy,
    AtmFixed,
    Arq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropName {
    ReadyInsert,
    EventuallyReady,
    SendThreeOk,
}

fn kebab<T: ValueEnum>(v: &T, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let pv = v.to_possible_value().expect("no skipped variants");
    f.write_str(pv.get_name())
}

impl fmt::Display for SuiteName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        kebab(self, f)
    }
}

impl fmt::Display for PropName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        kebab(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PropSpec {
    pub name: PropName,
    pub bound: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSpec {
    pub name: SuiteName,
    pub properties: &'static [PropSpec],
}

const ATM_PROPS: &[PropSpec] = &[
    PropSpec {
        name: PropName::ReadyInsert,
        bound: 1,
    },
    PropSpec {
        name: PropName::EventuallyReady,
        bound: 10,
    },
];

const ARQ_PROPS: &[PropSpec] = &[PropSpec {
    name: PropName::SendThreeOk,
    bound: 20,
}];

pub const SUITES: &[SuiteSpec] = &[
    SuiteSpec {
        name: SuiteName::AtmBuggy,
        properties: ATM_PROPS,
    },
    SuiteSpec {
        name: SuiteName::AtmFixed,
        properties: ATM_PROPS,
    },
    SuiteSpec {
        name: SuiteName::Arq,
        properties: ARQ_PROPS,
    },
];

pub fn suite(name: SuiteName) -> &'static SuiteSpec {
    SUITES
        .iter()
        .find(|s| s.name == name)
        .expect("every suite is registered")
}

impl SuiteSpec {
    pub fn property(&self, name: PropName) -> Result<&'static PropSpec, SuiteError> {
        self.properties
            .iter()
            .find(|p| p.name == name)
            .ok_or(SuiteError::UnknownProperty {
                suite: self.name,
                prop: name,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SuiteError {
    #[error("suite {suite} has no property {prop}")]
    UnknownProperty { suite: SuiteName, prop: PropName },
    #[error("property {prop} of suite {suite} is not a visit property; no oracle")]
    NoOracle { suite: SuiteName, prop: PropName },
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

pub type TraceInput<M> = Result<Trace<M>, IsmError>;

/// Property over bounded traces from `init`. A trace that fails to generate
/// counts as a failure and renders as its error.
pub fn trace_property<M: IsmModel>(
    model: M,
    init: M::State,
    bound: usize,
    pred: fn(&Trace<M>) -> bool,
) -> Property<TraceInput<M>> {
    let input = gen_trace(&model, init, bound);
    Property::new(
        input,
        move |t: &TraceInput<M>| match t {
            Ok(t) => TestOutcome::from(pred(t)),
            Err(_) => TestOutcome::Fail,
        },
        move |t: &TraceInput<M>| match t {
            Ok(t) => render_trace(&model, t),
            Err(e) => e.to_string(),
        },
    )
}

pub fn atm_buggy_property(prop: PropName, bound: usize) -> Option<Property<TraceInput<BuggyAtm>>> {
    let pred = match prop {
        PropName::ReadyInsert => atm::prop_ready_insert_buggy,
        PropName::EventuallyReady => atm::prop_eventually_ready_buggy,
        PropName::SendThreeOk => return None,
    };
    Some(trace_property(BuggyAtm, AtmStateBuggy::Ready, bound, pred))
}

pub fn atm_fixed_property(prop: PropName, bound: usize) -> Option<Property<TraceInput<FixedAtm>>> {
    let pred = match prop {
        PropName::ReadyInsert => atm::prop_ready_insert_fixed,
        PropName::EventuallyReady => atm::prop_eventually_ready_fixed,
        PropName::SendThreeOk => return None,
    };
    Some(trace_property(FixedAtm, AtmStateFixed::Ready, bound, pred))
}

pub fn arq_property(prop: PropName, bound: usize) -> Option<Property<TraceInput<Arq>>> {
    match prop {
        PropName::SendThreeOk => Some(trace_property(
            Arq::default(),
            ArqState::Ready(0),
            bound,
            arq::prop_send_three_ok,
        )),
        _ => None,
    }
}

/// Runs one property. `bound` overrides the registered default.
pub fn run_property(
    suite_name: SuiteName,
    prop: PropName,
    cfg: &QcConfig,
    bound: Option<usize>,
) -> Result<QcResult, SuiteError> {
    let spec = suite(suite_name).property(prop)?;
    let bound = bound.unwrap_or(spec.bound);
    let unknown = SuiteError::UnknownProperty {
        suite: suite_name,
        prop,
    };
    Ok(match suite_name {
        SuiteName::AtmBuggy => quick_check(cfg, &atm_buggy_property(prop, bound).ok_or(unknown)?),
        SuiteName::AtmFixed => quick_check(cfg, &atm_fixed_property(prop, bound).ok_or(unknown)?),
        SuiteName::Arq => quick_check(cfg, &arq_property(prop, bound).ok_or(unknown)?),
    })
}

/// Probability, under one model variant, that a trace satisfies the property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleLine {
    pub variant: String,
    pub holds: BigRational,
}

impl OracleLine {
    pub fn counterexample(&self) -> BigRational {
        BigRational::one() - &self.holds
    }
}

fn line<M: DeclaredKernel>(
    variant: &str,
    model: &M,
    init: M::State,
    target: impl Fn(&M::State) -> bool,
    depth: usize,
) -> Result<OracleLine, SuiteError> {
    Ok(OracleLine {
        variant: variant.to_string(),
        holds: model_visit_probability(model, init, target, depth)?,
    })
}

/// Exact probabilities for visit properties. ARQ reports both ack domains.
pub fn oracle_property(
    suite_name: SuiteName,
    prop: PropName,
    depth: Option<usize>,
) -> Result<Vec<OracleLine>, SuiteError> {
    let spec = suite(suite_name).property(prop)?;
    let depth = depth.unwrap_or(spec.bound);
    match (suite_name, prop) {
        (SuiteName::AtmBuggy, PropName::EventuallyReady) => Ok(vec![line(
            "default",
            &BuggyAtm,
            AtmStateBuggy::Ready,
            |s| *s == AtmStateBuggy::Ready,
            depth,
        )?]),
        (SuiteName::AtmFixed, PropName::EventuallyReady) => Ok(vec![line(
            "default",
            &FixedAtm,
            AtmStateFixed::Ready,
            |s| *s == AtmStateFixed::Ready,
            depth,
        )?]),
        (SuiteName::Arq, PropName::SendThreeOk) => {
            let target = |s: &ArqState| *s == arq::SEND_THREE_TARGET;
            let ranged = Arq::default();
            let AckDomain::Range { max } = ranged.acks else {
                unreachable!("default ack domain is a range")
            };
            Ok(vec![
                line(
                    &format!("acks 0..={max}"),
                    &ranged,
                    ArqState::Ready(0),
                    target,
                    depth,
                )?,
                line(
                    "acks unbounded",
                    &Arq::new(AckDomain::Unbounded),
                    ArqState::Ready(0),
                    target,
                    depth,
                )?,
            ])
        }
        _ => Err(SuiteError::NoOracle {
            suite: suite_name,
            prop,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Verdict;

    #[test]
    fn registry_bounds() {
        assert_eq!(
            suite(SuiteName::AtmBuggy)
                .property(PropName::ReadyInsert)
                .unwrap()
                .bound,
            1
        );
        assert_eq!(
            suite(SuiteName::AtmFixed)
                .property(PropName::EventuallyReady)
                .unwrap()
                .bound,
            10
        );
        assert_eq!(
            suite(SuiteName::Arq)
                .property(PropName::SendThreeOk)
                .unwrap()
                .bound,
            20
        );
        assert!(suite(SuiteName::Arq)
            .property(PropName::ReadyInsert)
            .is_err());
    }

    #[test]
    fn names_are_kebab_case() {
        assert_eq!(SuiteName::AtmBuggy.to_string(), "atm-buggy");
        assert_eq!(PropName::SendThreeOk.to_string(), "send-three-ok");
        assert_eq!(
            serde_json::to_string(&PropName::EventuallyReady).unwrap(),
            "\"eventually-ready\""
        );
    }

    #[test]
    fn ready_insert_always_passes() {
        for s in [SuiteName::AtmBuggy, SuiteName::AtmFixed] {
            let r = run_property(s, PropName::ReadyInsert, &QcConfig::default(), None).unwrap();
            assert_eq!(r.log, "OK, passed 100 tests");
        }
    }

    #[test]
    fn oracle_rejects_ready_insert() {
        assert_eq!(
            oracle_property(SuiteName::AtmFixed, PropName::ReadyInsert, None),
            Err(SuiteError::NoOracle {
                suite: SuiteName::AtmFixed,
                prop: PropName::ReadyInsert
            })
        );
    }

    #[test]
    fn buggy_eventually_ready_falsified_at_seed_one() {
        let r = run_property(
            SuiteName::AtmBuggy,
            PropName::EventuallyReady,
            &QcConfig::with_seed(1),
            None,
        );
        assert_eq!(r.unwrap().verdict, Verdict::Falsified);
    }
}
