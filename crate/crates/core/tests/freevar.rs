// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use schemeflow::analysis::{analyze, AnalysisConfig};
use schemeflow::frontend::syntactic_free_vars;
use schemeflow::{LabeledProgram, RelationName};

fn rule_freevars(p: &LabeledProgram) -> BTreeMap<String, BTreeSet<String>> {
    let r = analyze(p, &AnalysisConfig::default()).unwrap();
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in r.tuples(RelationName::Freevar) {
        out.entry(t[1].to_string()).or_default().insert(t[0].to_string());
    }
    out
}

fn syntactic(p: &LabeledProgram) -> BTreeMap<String, BTreeSet<String>> {
    p.labels()
        .map(|l| (l.to_string(), syntactic_free_vars(p, l)))
        .filter(|(_, fv)| !fv.is_empty())
        .collect()
}

#[test]
fn rules_match_syntax_on_corpus() {
    for (name, src) in common::corpus() {
        let p = common::parse(&src);
        assert_eq!(rule_freevars(&p), syntactic(&p), "{name}");
    }
}

#[test]
fn closed_lambda_has_no_free_variables() {
    let p = common::parse("(lambda (x) (lambda (y) (+ x y)))");
    let fv = rule_freevars(&p);
    assert!(!fv.contains_key("e0"));
    assert_eq!(fv["e2"], BTreeSet::from(["x".to_string()]));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn rules_match_syntax_on_random_programs(src in common::program()) {
        let p = common::parse(&src);
        prop_assert_eq!(rule_freevars(&p), syntactic(&p), "{}", src);
    }
}
