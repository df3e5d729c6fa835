// SPDX-License-Identifier: Apache-2.0

mod common;

use schemeflow::analysis::{analyze, AnalysisConfig};
use schemeflow::oracle::run_fixpoint;
use schemeflow::RelationName::{FlowAa, StateA, StoredKont};

const INVOKE: &str = "(+ 1 (call/cc (lambda (k) (k 10))))";

#[test]
fn invoked_continuation_returns_to_the_call_cc_expression() {
    let p = common::parse(INVOKE);
    let cfg = AnalysisConfig::with_m(0);
    let r = analyze(&p, &cfg).unwrap();
    assert!(r.contains(
        StoredKont,
        &["(KAddr e5 (Context))", "(Callcc (Context) (KAddr e4 (Context)))"]
    ));
    assert_eq!(r.values_at("(VAddr k (Context))"), ["(KontRef (KAddr e4 (Context)))"]);
    assert!(r.contains(StateA, &["(Number 10)", "(KAddr e4 (Context))"]));
    assert!(r.contains(
        StoredKont,
        &["(KAddr e4 (Context))", "(Prim2 + (Number 1) (KAddr e0 (Context)))"]
    ));
    assert!(r.contains(StateA, &["(PrimVal + (Number 1) (Number 10))", "(KAddr e0 (Context))"]));
    assert!(!r.contains(StateA, &["(Number 10)", "(KAddr e0 (Context))"]));
    assert_eq!(r, run_fixpoint(&p, &cfg).unwrap());
}

#[test]
fn context_of_the_capture_does_not_leak_into_the_kont_ref() {
    let p = common::parse(INVOKE);
    let r = analyze(&p, &AnalysisConfig::with_m(1)).unwrap();
    assert_eq!(r.values_at("(VAddr k (Context e4))"), ["(KontRef (KAddr e4 (Context)))"]);
}

#[test]
fn strict_mode_captures_the_frame_address() {
    let p = common::parse(INVOKE);
    let cfg = AnalysisConfig::strict(0);
    let r = analyze(&p, &cfg).unwrap();
    assert_eq!(r.values_at("(VAddr k (Context))"), ["(KontRef (KAddr e5 (Context)))"]);
    assert!(r.contains(StateA, &["(Number 10)", "(KAddr e5 (Context))"]));
    // The value reaches a Callcc frame, which no rule applies to numbers.
    assert!(r.tuples(StateA).all(|t| t[1] != "(KAddr e0 (Context))"));
    assert_eq!(r, run_fixpoint(&p, &cfg).unwrap());
}

#[test]
fn escaping_skips_the_rest_of_the_body() {
    let p = common::parse(&common::corpus_source("14_callcc_escape"));
    let r = analyze(&p, &AnalysisConfig::with_m(0)).unwrap();
    assert_eq!(r.values_at("(VAddr r (Context))"), ["(Number 3)"]);
    assert!(r.values_at("(VAddr x (Context))").is_empty());
}

#[test]
fn continuation_passed_to_call_cc_receives_the_current_one() {
    // k first holds the let's continuation; (call/cc k) then passes the
    // top-level continuation back into the let.
    let p = common::parse(&common::corpus_source("27_kont_to_callcc"));
    let cfg = AnalysisConfig::with_m(0);
    let r = analyze(&p, &cfg).unwrap();
    assert_eq!(
        r.values_at("(VAddr k (Context))"),
        ["(KontRef (KAddr e0 (Context)))", "(KontRef (KAddr e2 (Context)))"]
    );
    assert!(r.contains(StateA, &["(KontRef (KAddr e0 (Context)))", "(KAddr e0 (Context))"]));
    assert!(r.contains(
        FlowAa,
        &["(KontRef (KAddr e2 (Context)))", "(KontRef (KAddr e0 (Context)))"]
    ));
    assert_eq!(r, run_fixpoint(&p, &cfg).unwrap());
}
