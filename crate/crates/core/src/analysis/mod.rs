// SPDX-License-Identifier: Apache-2.0

//! m-CFA as deductive rules, saturated by the [`crate::engine`].

mod rules;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use rules::{
    analysis_relations, apply_rules, atomic_rules, context_rules, eval_rules, freevar_rules,
    inject_rules, new_ctx_fn, value_form_rules, widen_fn,
};

use crate::engine::{saturate, EngineError, RuleSet, SaturationStats, TermId, TupleStore};
use crate::frontend::{extract_facts, Cell, Edb, LabeledProgram};
use crate::model::WidenDepth;
use crate::result::{AnalysisResult, RelationName};
use crate::DEFAULT_FACT_CEILING;

/// Which branches of an `if` a PrimVal or NumTop guard takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truthiness {
    /// Both branches: the value is unknown.
    #[default]
    BothBranches,
    /// Neither branch, as the published rules enumerate only literal truthy
    /// kinds.
    AppendixExact,
}

impl Truthiness {
    pub fn as_str(self) -> &'static str {
        match self {
            Truthiness::BothBranches => "both-branches",
            Truthiness::AppendixExact => "appendix-exact",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisConfig {
    pub m: usize,
    /// PrimVal nesting bound; `None` disables widening.
    pub widen_depth: WidenDepth,
    /// Reproduce the published rules verbatim: no widening, literal
    /// truthiness, `call/cc` capturing the Callcc frame. Overrides the
    /// fields it implies.
    pub strict_appendix: bool,
    pub truthiness: Truthiness,
    /// Divergence guard in facts (rules) or derivations (oracle); `None` is
    /// unbounded.
    pub fact_ceiling: Option<u64>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            m: 0,
            widen_depth: Some(2),
            strict_appendix: false,
            truthiness: Truthiness::BothBranches,
            fact_ceiling: Some(DEFAULT_FACT_CEILING),
        }
    }
}

impl AnalysisConfig {
    pub fn with_m(m: usize) -> Self {
        AnalysisConfig {
            m,
            ..Self::default()
        }
    }

    pub fn strict(m: usize) -> Self {
        AnalysisConfig {
            m,
            strict_appendix: true,
            ..Self::default()
        }
    }

    pub fn effective_widen_depth(&self) -> WidenDepth {
        if self.strict_appendix {
            None
        } else {
            self.widen_depth.map(|d| d.max(1))
        }
    }

    /// Whether `call/cc` captures the continuation of the `call/cc`
    /// expression itself. The published rules capture the address of the
    /// Callcc frame, where an escaping value matches no rule.
    pub fn captures_next(&self) -> bool {
        !self.strict_appendix
    }

    pub fn effective_truthiness(&self) -> Truthiness {
        if self.strict_appendix {
            Truthiness::AppendixExact
        } else {
            self.truthiness
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("expected exactly one top-level expression, found {0}")]
    TopExp(usize),
    #[error("fact ceiling of {ceiling} exceeded ({facts} facts); the analysis likely diverges")]
    Ceiling { ceiling: u64, facts: u64 },
    #[error("unreadable seed row {0:?}")]
    Seed(String),
    #[error(transparent)]
    Engine(EngineError),
}

impl From<EngineError> for AnalysisError {
    fn from(e: EngineError) -> Self {
        match e {
            EngineError::FactCeiling { ceiling, facts } => AnalysisError::Ceiling { ceiling, facts },
            other => AnalysisError::Engine(other),
        }
    }
}

/// Every rule group, with `new_ctx` and (if enabled) `widen` installed.
pub fn build_rules(cfg: &AnalysisConfig) -> Result<RuleSet, EngineError> {
    let mut b = RuleSet::builder()
        .relations(analysis_relations())
        .rules(inject_rules())
        .rules(context_rules())
        .rules(freevar_rules())
        .rules(value_form_rules())
        .rules(eval_rules())
        .rules(atomic_rules())
        .rules(apply_rules(cfg))
        .function("new_ctx", new_ctx_fn(cfg.m));
    if let Some(d) = cfg.effective_widen_depth() {
        b = b.function("widen", widen_fn(d));
    }
    b.build()
}

/// The rule set in Datalog-like text.
pub fn rule_dump(cfg: &AnalysisConfig) -> String {
    build_rules(cfg).expect("analysis rules are well-formed").dump()
}

fn load_edb(store: &mut TupleStore, edb: &Edb) -> Result<(), EngineError> {
    for (name, facts) in edb.iter() {
        for fact in facts {
            let tuple: Vec<TermId> = fact
                .iter()
                .map(|c| match c {
                    Cell::Label(l) => store.pool.sym(&l.to_string()),
                    Cell::Name(s) => store.pool.sym(s),
                    Cell::Int(n) => store.pool.int(*n),
                })
                .collect();
            store.insert(name, &tuple)?;
        }
    }
    Ok(())
}

/// Initial facts for `edb`: the injected state, the MT frame and the
/// top-level `peek_ctx`, as `(relation, row)` pairs.
pub fn inject(edb: &Edb, m: usize) -> Result<Vec<(RelationName, String)>, AnalysisError> {
    let top = edb.get("top_exp");
    if top.len() != 1 {
        return Err(AnalysisError::TopExp(top.len()));
    }
    let e = top[0][0].to_string();
    let new = if m == 0 {
        "(Context)".to_string()
    } else {
        format!("(Context {e})")
    };
    Ok(vec![
        (
            RelationName::StateE,
            format!("{e}\t(Context)\t(KAddr {e} (Context))"),
        ),
        (RelationName::StoredKont, format!("(KAddr {e} (Context))\t(MT)")),
        (RelationName::PeekCtx, format!("{e}\t(Context)\t{new}")),
    ])
}

/// Saturates the analysis over an input database.
pub fn analyze_edb(
    edb: &Edb,
    cfg: &AnalysisConfig,
) -> Result<(AnalysisResult, SaturationStats), AnalysisError> {
    saturate_from(edb, cfg, &AnalysisResult::new())
}

/// Like [`analyze_edb`], with the rows of `seed` preloaded. Seeding with a
/// finished result must derive nothing new.
pub fn saturate_from(
    edb: &Edb,
    cfg: &AnalysisConfig,
    seed: &AnalysisResult,
) -> Result<(AnalysisResult, SaturationStats), AnalysisError> {
    let top = edb.get("top_exp").len();
    if top != 1 {
        return Err(AnalysisError::TopExp(top));
    }
    let rs = build_rules(cfg)?;
    let mut store = TupleStore::for_rules(&rs);
    load_edb(&mut store, edb)?;
    for rel in RelationName::ALL {
        for row in seed.rows(rel) {
            let tuple = row
                .split('\t')
                .map(|cell| store.pool.parse(cell))
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| AnalysisError::Seed(row.clone()))?;
            store.insert(rel.as_str(), &tuple)?;
        }
    }
    let stats = saturate(&rs, &mut store, cfg.fact_ceiling)?;
    let result = AnalysisResult::from_rows(
        RelationName::ALL
            .into_iter()
            .map(|r| (r, store.rows(r.as_str()).expect("declared relation"))),
    );
    Ok((result, stats))
}

pub fn analyze_with_stats(
    program: &LabeledProgram,
    cfg: &AnalysisConfig,
) -> Result<(AnalysisResult, SaturationStats), AnalysisError> {
    analyze_edb(&extract_facts(program), cfg)
}

pub fn analyze(program: &LabeledProgram, cfg: &AnalysisConfig) -> Result<AnalysisResult, AnalysisError> {
    analyze_with_stats(program, cfg).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, FrontendOptions};

    const CONFLATION: &str = "(let ((f (lambda (x) x))) (let ((a (f #t)) (b (f #f))) (if a 4 5)))";

    fn run(src: &str, cfg: AnalysisConfig) -> AnalysisResult {
        let p = parse_program(src, &FrontendOptions::default()).unwrap();
        analyze(&p, &cfg).unwrap()
    }

    #[test]
    fn literal_program() {
        let r = run("42", AnalysisConfig::default());
        assert_eq!(r.rows(RelationName::StateE), &["e0\t(Context)\t(KAddr e0 (Context))"]);
        assert_eq!(r.rows(RelationName::StateA), &["(Number 42)\t(KAddr e0 (Context))"]);
        assert_eq!(r.len(RelationName::StoredVal), 0);
        assert_eq!(r.rows(RelationName::StoredKont), &["(KAddr e0 (Context))\t(MT)"]);
    }

    #[test]
    fn injected_facts_are_derived() {
        let p = parse_program(CONFLATION, &FrontendOptions::default()).unwrap();
        for m in 0..3 {
            let r = analyze(&p, &AnalysisConfig::with_m(m)).unwrap();
            for (rel, row) in inject(&extract_facts(&p), m).unwrap() {
                assert!(r.rows(rel).contains(&row), "{rel} {row}");
            }
        }
        assert!(matches!(inject(&Edb::default(), 0), Err(AnalysisError::TopExp(0))));
    }

    #[test]
    fn conflation_conflates_at_m0_and_separates_at_m1() {
        let r0 = run(CONFLATION, AnalysisConfig::with_m(0));
        assert_eq!(
            r0.values_at("(VAddr x (Context))"),
            vec!["(Bool #f)", "(Bool #t)"]
        );
        let applied = r0.applied_values();
        assert!(applied.contains(&"(Number 4)") && applied.contains(&"(Number 5)"));

        let r1 = run(CONFLATION, AnalysisConfig::with_m(1));
        let applied = r1.applied_values();
        assert!(applied.contains(&"(Number 4)"));
        assert!(!applied.contains(&"(Number 5)"));
    }

    #[test]
    fn if_pushes_frame_and_evaluates_guard() {
        let r = run("(if #t 4 5)", AnalysisConfig::default());
        assert!(r.contains(
            RelationName::StoredKont,
            &["(KAddr e1 (Context))", "(If e2 e3 (Context) (KAddr e0 (Context)))"]
        ));
        assert!(r.contains(RelationName::FlowEe, &["e0", "e1"]));
        assert!(r.contains(RelationName::StateA, &["(Number 4)", "(KAddr e0 (Context))"]));
        assert!(!r.contains(RelationName::StateA, &["(Number 5)", "(KAddr e0 (Context))"]));
    }

    #[test]
    fn peek_ctx_pushes_call_label() {
        // The call (f 1) is e3, inside the lambda body entered from e0.
        let r = run("((lambda (f) (f 1)) (lambda (y) y))", AnalysisConfig::with_m(2));
        assert!(r.contains(RelationName::PeekCtx, &["e3", "(Context e0)", "(Context e3 e0)"]));
        assert!(r.contains(RelationName::StoredVal, &["(VAddr y (Context e3 e0))", "(Number 1)"]));
    }

    #[test]
    fn strict_mode_leaves_primval_guards_stuck() {
        let src = "(if (+ 1 2) 4 5)";
        let both = run(src, AnalysisConfig::default());
        assert_eq!(both.applied_values().len(), 5);
        let strict = run(src, AnalysisConfig::strict(0));
        let applied = strict.applied_values();
        assert!(!applied.contains(&"(Number 4)") && !applied.contains(&"(Number 5)"));
    }

    #[test]
    fn rule_dump_lists_every_stratum() {
        let dump = rule_dump(&AnalysisConfig::default());
        assert!(dump.contains("// E-If"));
        let rs = build_rules(&AnalysisConfig::default()).unwrap();
        assert!(rs.stratum_of("freevar").unwrap() < rs.stratum_of("state_e").unwrap());
        for rel in ["state_a", "stored_val", "stored_kont", "copy_ctx", "peek_ctx", "flow_ee"] {
            assert_eq!(rs.stratum_of(rel), rs.stratum_of("state_e"), "{rel}");
        }
    }
}
