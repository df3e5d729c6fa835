// SPDX-License-Identifier: Apache-2.0

mod common;

use proptest::prelude::*;
use schemeflow::analysis::{analyze, AnalysisConfig, AnalysisError, Truthiness};
use schemeflow::oracle::{run_fixpoint, run_fixpoint_with, OracleError, RunOptions, WorklistOrder};
use schemeflow::RelationName;

fn configs() -> Vec<AnalysisConfig> {
    let mut out = Vec::new();
    for m in 0..3 {
        for truthiness in [Truthiness::BothBranches, Truthiness::AppendixExact] {
            out.push(AnalysisConfig {
                truthiness,
                ..AnalysisConfig::with_m(m)
            });
        }
    }
    out
}

#[test]
fn corpus_has_every_form() {
    let all: String = common::corpus().into_iter().map(|(_, s)| s).collect();
    assert!(common::corpus().len() >= 20);
    for form in ["(if ", "(let ((", "(set! ", "(call/cc ", "(+ ", "(lambda (a b c)", "(w z z)"] {
        assert!(all.contains(form), "{form}");
    }
}

#[test]
fn analysis_equals_oracle_on_corpus() {
    for (name, src) in common::corpus() {
        let p = common::parse(&src);
        for cfg in configs() {
            let a = analyze(&p, &cfg).unwrap();
            let o = run_fixpoint(&p, &cfg).unwrap();
            if let Some(d) = a.first_divergence(&o, true) {
                panic!("{name} m={} {:?}: {d:?}", cfg.m, cfg.truthiness);
            }
            assert_eq!(a, o, "{name}");
        }
    }
}

#[test]
fn strict_mode_agrees_or_both_trip_the_ceiling() {
    for (name, src) in common::corpus() {
        let p = common::parse(&src);
        for m in 0..3 {
            let cfg = AnalysisConfig {
                fact_ceiling: Some(30_000),
                ..AnalysisConfig::strict(m)
            };
            match (analyze(&p, &cfg), run_fixpoint(&p, &cfg)) {
                (Ok(a), Ok(o)) => assert_eq!(a, o, "{name} m={m}"),
                (Err(AnalysisError::Ceiling { .. }), Err(OracleError::Ceiling { .. })) => {}
                (a, o) => panic!("{name} m={m}: {:?} vs {:?}", a.err(), o.err()),
            }
        }
    }
}

#[test]
fn worklist_order_does_not_matter() {
    for (name, src) in common::corpus() {
        let p = common::parse(&src);
        let cfg = AnalysisConfig::with_m(1);
        let fifo = run_fixpoint(&p, &cfg).unwrap();
        for order in [WorklistOrder::Lifo, WorklistOrder::Shuffled(7), WorklistOrder::Shuffled(1234)] {
            let opts = RunOptions {
                order,
                ..RunOptions::default()
            };
            let (r, _) = run_fixpoint_with(&p, &cfg, opts).unwrap();
            assert_eq!(r, fifo, "{name} {order:?}");
        }
    }
}

#[test]
fn conflation_matches_paper_at_both_sensitivities() {
    let p = common::parse(&common::corpus_source("04_conflation"));
    let r0 = analyze(&p, &AnalysisConfig::with_m(0)).unwrap();
    assert_eq!(r0.values_at("(VAddr x (Context))"), ["(Bool #f)", "(Bool #t)"]);
    let r1 = analyze(&p, &AnalysisConfig::with_m(1)).unwrap();
    let applied = r1.applied_values();
    assert!(applied.contains(&"(Number 4)") && !applied.contains(&"(Number 5)"));
    assert_eq!(r1, run_fixpoint(&p, &AnalysisConfig::with_m(1)).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_programs_agree(src in common::program(), m in 0usize..3, exact in any::<bool>()) {
        let p = common::parse(&src);
        let cfg = AnalysisConfig {
            truthiness: if exact { Truthiness::AppendixExact } else { Truthiness::BothBranches },
            ..AnalysisConfig::with_m(m)
        };
        let a = analyze(&p, &cfg).unwrap();
        let o = run_fixpoint(&p, &cfg).unwrap();
        prop_assert!(a.first_divergence(&o, true).is_none(), "{}: {:?}", src, a.first_divergence(&o, true));
        prop_assert_eq!(a.rows(RelationName::Freevar), o.rows(RelationName::Freevar));
    }
}
