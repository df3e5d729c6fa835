// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use schemeflow::analysis::{analyze, analyze_with_stats, saturate_from, AnalysisConfig};
use schemeflow::frontend::extract_facts;
use schemeflow::termgen::{gen_mcfa_worst, GenSpec};
use schemeflow::{AnalysisResult, RelationName};

/// Label counts of every `(Context ...)` occurring in the result.
fn context_lengths(r: &AnalysisResult) -> Vec<usize> {
    let mut out = Vec::new();
    for rel in RelationName::ALL {
        for row in r.rows(rel) {
            let mut rest = row.as_str();
            while let Some(i) = rest.find("(Context") {
                rest = &rest[i + "(Context".len()..];
                let end = rest.find(')').unwrap();
                out.push(rest[..end].split_whitespace().count());
                rest = &rest[end..];
            }
        }
    }
    out
}

fn primval_depth(text: &str) -> usize {
    let mut depth: usize = 0;
    let mut best = 0;
    let mut stack = Vec::new();
    for (i, ch) in text.char_indices() {
        match ch {
            '(' => {
                let pv = text[i..].starts_with("(PrimVal");
                if pv {
                    depth += 1;
                    best = best.max(depth);
                }
                stack.push(pv);
            }
            ')' => {
                if stack.pop() == Some(true) {
                    depth -= 1;
                }
            }
            _ => {}
        }
    }
    best
}

fn check_invariants(src: &str, cfg: &AnalysisConfig) -> Result<(), TestCaseError> {
    let p = common::parse(src);
    let (r, first) = analyze_with_stats(&p, cfg).unwrap();

    for len in context_lengths(&r) {
        prop_assert!(len <= cfg.m, "context of length {} at m={}", len, cfg.m);
    }

    let konts: BTreeSet<&str> = r.tuples(RelationName::StoredKont).map(|t| t[0]).collect();
    for t in r.tuples(RelationName::StateA) {
        prop_assert!(konts.contains(t[1]), "state_a continuation {} not stored", t[1]);
    }
    for t in r.tuples(RelationName::StateE) {
        prop_assert!(konts.contains(t[2]), "state_e continuation {} not stored", t[2]);
    }

    let evaluated: BTreeSet<&str> = r.tuples(RelationName::StateE).map(|t| t[0]).collect();
    for t in r.tuples(RelationName::FlowEe) {
        prop_assert!(evaluated.contains(t[0]) && evaluated.contains(t[1]), "flow_ee {:?}", t);
    }

    if let Some(d) = cfg.effective_widen_depth() {
        for t in r.tuples(RelationName::StoredVal).chain(r.tuples(RelationName::StateA)) {
            for cell in t {
                prop_assert!(primval_depth(cell) <= d, "{}", cell);
            }
        }
    }

    let (again, stats) = saturate_from(&extract_facts(&p), cfg, &r).unwrap();
    prop_assert_eq!(stats.facts, first.facts);
    prop_assert_eq!(&again, &r);
    Ok(())
}

#[test]
fn invariants_hold_on_corpus() {
    for (name, src) in common::corpus() {
        for m in 0..3 {
            if let Err(e) = check_invariants(&src, &AnalysisConfig::with_m(m)) {
                panic!("{name} m={m}: {e}");
            }
        }
    }
}

/// Values bound to each let variable `m<i>`, over all contexts.
fn binding_values(r: &AnalysisResult) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in r.tuples(RelationName::StoredVal) {
        let name = t[0].trim_start_matches("(VAddr ").split(' ').next().unwrap();
        if name.starts_with('m') {
            out.entry(name.to_string()).or_default().insert(t[1].to_string());
        }
    }
    out
}

#[test]
fn generated_family_gets_more_precise_with_m() {
    for n in [2, 4, 6] {
        for pad in 0..3 {
            let src = gen_mcfa_worst(&GenSpec::new(n, 1, pad)).unwrap();
            let p = common::parse(&src);
            let by_m: Vec<_> = (0..4)
                .map(|m| binding_values(&analyze(&p, &AnalysisConfig::with_m(m)).unwrap()))
                .collect();
            for m in 0..3 {
                for (x, vs) in &by_m[m + 1] {
                    assert!(vs.is_subset(&by_m[m][x]), "n={n} p={pad} m={m} {x}");
                }
            }
            for (m, values) in by_m.iter().enumerate() {
                assert_eq!(values.len(), n);
                let singletons = values.values().all(|vs| vs.len() == 1);
                assert_eq!(singletons, m > pad, "n={n} p={pad} m={m}");
            }
        }
    }
}

#[test]
fn strict_mode_has_unbounded_primvals_until_the_ceiling() {
    let src = common::corpus_source("26_accumulate");
    let p = common::parse(&src);
    let widened = analyze(&p, &AnalysisConfig::with_m(0)).unwrap();
    assert!(widened.applied_values().iter().all(|v| primval_depth(v) <= 2));
    let strict = AnalysisConfig {
        fact_ceiling: Some(50_000),
        ..AnalysisConfig::strict(0)
    };
    assert!(analyze(&p, &strict).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn invariants_hold_on_random_programs(src in common::program(), m in 0usize..3) {
        check_invariants(&src, &AnalysisConfig::with_m(m))?;
    }

    #[test]
    fn widening_is_inert_when_nothing_reaches_the_cut(src in common::program()) {
        let p = common::parse(&src);
        let at = |d| AnalysisConfig { widen_depth: Some(d), ..AnalysisConfig::with_m(1) };
        let shallow = analyze(&p, &at(1)).unwrap();
        let deep = analyze(&p, &at(3)).unwrap();
        if !shallow.applied_values().iter().any(|v| v.contains("NumTop")) {
            prop_assert_eq!(shallow, deep);
        }
    }
}
