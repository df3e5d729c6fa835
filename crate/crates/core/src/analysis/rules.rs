// SPDX-License-Identifier: Apache-2.0

//! The analysis as Horn clauses, one group per family of transitions.
//! Disjunctive bodies are split into one rule per alternative.

use std::sync::Arc;

use super::{AnalysisConfig, Truthiness};
use crate::engine::{
    app, call, int, sym, var, wild, ColumnKind, Pattern, RelationDecl, Rule, TermFn, TermId,
    TermPool,
};
use crate::frontend::{CellKind, EDB_SCHEMA};

fn v(name: &str) -> Pattern {
    var(name)
}

fn empty_ctx() -> Pattern {
    app("Context", vec![])
}

fn kaddr(e: Pattern, ctx: Pattern) -> Pattern {
    app("KAddr", vec![e, ctx])
}

fn vaddr(x: Pattern, ctx: Pattern) -> Pattern {
    app("VAddr", vec![x, ctx])
}

fn new_ctx(e: Pattern, ctx: Pattern) -> Pattern {
    call("new_ctx", vec![e, ctx])
}

/// Input and derived relations, inputs first.
pub fn analysis_relations() -> Vec<RelationDecl> {
    use ColumnKind::{Label, Name, Term};
    let mut rels: Vec<RelationDecl> = EDB_SCHEMA
        .iter()
        .map(|(name, kinds)| {
            let cols: Vec<ColumnKind> = kinds
                .iter()
                .map(|k| match k {
                    CellKind::Label => Label,
                    CellKind::Name => Name,
                    CellKind::Int => ColumnKind::Integer,
                })
                .collect();
            RelationDecl::new(name, &cols)
        })
        .collect();
    rels.extend([
        RelationDecl::new("value_form", &[Label]),
        RelationDecl::new("freevar", &[Name, Label]),
        RelationDecl::new("state_e", &[Label, Term, Term]),
        RelationDecl::new("state_a", &[Term, Term]),
        RelationDecl::new("stored_val", &[Term, Term]),
        RelationDecl::new("stored_kont", &[Term, Term]),
        RelationDecl::new("peek_ctx", &[Label, Term, Term]),
        RelationDecl::new("copy_ctx", &[Term, Term, Label]),
        RelationDecl::new("flow_ee", &[Label, Label]),
        RelationDecl::new("flow_ea", &[Label, Term]),
        RelationDecl::new("flow_aa", &[Term, Term]),
        RelationDecl::new("flow_ae", &[Term, Label]),
    ]);
    rels
}

/// `new_ctx(e, ctx)`: the first `m` labels of `e` pushed onto `ctx`.
pub fn new_ctx_fn(m: usize) -> TermFn {
    Arc::new(move |pool: &mut TermPool, args: &[TermId]| {
        let frames: Vec<TermId> = match pool.as_app(args[1]) {
            Some(("Context", frames)) => frames.to_vec(),
            _ => panic!("new_ctx applied to a non-context"),
        };
        let pushed: Vec<TermId> = std::iter::once(args[0]).chain(frames).take(m).collect();
        pool.app("Context", &pushed)
    })
}

fn primval_depth(pool: &TermPool, t: TermId) -> usize {
    match pool.as_app(t) {
        Some(("PrimVal", [_, l, r])) => 1 + primval_depth(pool, *l).max(primval_depth(pool, *r)),
        _ => 0,
    }
}

fn widen_term(pool: &mut TermPool, t: TermId, d: usize) -> TermId {
    if primval_depth(pool, t) <= d {
        return t;
    }
    let Some(("PrimVal", &[op, l, r])) = pool.as_app(t) else {
        unreachable!("only PrimVal has positive depth")
    };
    let (l, r) = if d == 1 {
        let top = pool.app("NumTop", &[]);
        (top, top)
    } else {
        (widen_term(pool, l, d - 1), widen_term(pool, r, d - 1))
    };
    pool.app("PrimVal", &[op, l, r])
}

/// Term-level counterpart of `Interner::widen_value`.
pub fn widen_fn(depth: usize) -> TermFn {
    let depth = depth.max(1);
    Arc::new(move |pool: &mut TermPool, args: &[TermId]| widen_term(pool, args[0], depth))
}

/// Initial state for the single top-level expression.
pub fn inject_rules() -> Vec<Rule> {
    vec![Rule::new("inject")
        .head("state_e", vec![v("e"), empty_ctx(), kaddr(v("e"), empty_ctx())])
        .head("peek_ctx", vec![v("e"), empty_ctx(), new_ctx(v("e"), empty_ctx())])
        .head("stored_kont", vec![kaddr(v("e"), empty_ctx()), app("MT", vec![])])
        .when("top_exp", vec![v("e")])]
}

/// `peek_ctx` for every reached context-creating form, and the free
/// variable copy performed by `copy_ctx`.
pub fn context_rules() -> Vec<Rule> {
    let forms: [(&str, Vec<Pattern>); 4] = [
        ("callcc", vec![v("e"), wild()]),
        ("call", vec![v("e"), wild(), wild()]),
        ("let", vec![v("e"), wild(), wild()]),
        ("lambda", vec![v("e"), wild(), wild()]),
    ];
    let mut rules: Vec<Rule> = forms
        .into_iter()
        .map(|(rel, args)| {
            Rule::new(&format!("peek_ctx/{rel}"))
                .head("peek_ctx", vec![v("e"), v("ctx"), new_ctx(v("e"), v("ctx"))])
                .when("state_e", vec![v("e"), v("ctx"), wild()])
                .when(rel, args)
        })
        .collect();
    rules.push(
        Rule::new("copy_ctx")
            .head("stored_val", vec![vaddr(v("fv"), v("to")), v("v")])
            .when("copy_ctx", vec![v("from"), v("to"), v("e")])
            .when("freevar", vec![v("fv"), v("e")])
            .when("stored_val", vec![vaddr(v("fv"), v("from")), v("v")]),
    );
    rules
}

pub fn freevar_rules() -> Vec<Rule> {
    let fv = |name: &str| Rule::new(name).head("freevar", vec![v("x"), v("e")]);
    vec![
        fv("freevar/var").when("var", vec![v("e"), v("x")]),
        fv("freevar/lambda")
            .when("lambda", vec![v("e"), v("vars"), v("body")])
            .when("freevar", vec![v("x"), v("body")])
            .when("lambda_arg_list", vec![v("vars"), wild(), v("p")])
            .neq(v("x"), v("p")),
        fv("freevar/call-func")
            .when("call", vec![v("e"), v("f"), wild()])
            .when("freevar", vec![v("x"), v("f")]),
        fv("freevar/call-args")
            .when("call", vec![v("e"), wild(), v("args")])
            .when("freevar", vec![v("x"), v("args")]),
        fv("freevar/prim_call")
            .when("prim_call", vec![v("e"), wild(), v("args")])
            .when("freevar", vec![v("x"), v("args")]),
        fv("freevar/call_arg_list")
            .when("call_arg_list", vec![v("e"), wild(), v("arg")])
            .when("freevar", vec![v("x"), v("arg")]),
        fv("freevar/if-guard")
            .when("if", vec![v("e"), v("c"), wild(), wild()])
            .when("freevar", vec![v("x"), v("c")]),
        fv("freevar/if-then")
            .when("if", vec![v("e"), wild(), v("c"), wild()])
            .when("freevar", vec![v("x"), v("c")]),
        fv("freevar/if-else")
            .when("if", vec![v("e"), wild(), wild(), v("c")])
            .when("freevar", vec![v("x"), v("c")]),
        fv("freevar/setb")
            .when("setb", vec![v("e"), wild(), v("c")])
            .when("freevar", vec![v("x"), v("c")]),
        fv("freevar/callcc")
            .when("callcc", vec![v("e"), v("c")])
            .when("freevar", vec![v("x"), v("c")]),
        fv("freevar/let-binds")
            .when("let", vec![v("e"), v("c"), wild()])
            .when("freevar", vec![v("x"), v("c")]),
        fv("freevar/let-body")
            .when("let", vec![v("e"), wild(), v("c")])
            .when("freevar", vec![v("x"), v("c")]),
        fv("freevar/let_list")
            .when("let_list", vec![v("e"), v("a"), v("c")])
            .when("freevar", vec![v("x"), v("c")])
            .neq(v("x"), v("a")),
    ]
}

pub fn value_form_rules() -> Vec<Rule> {
    [
        ("num", 2),
        ("var", 2),
        ("lambda", 3),
        ("quotation", 2),
        ("bool", 2),
    ]
    .into_iter()
    .map(|(rel, arity)| {
        let mut args = vec![v("id")];
        args.extend((1..arity).map(|_| wild()));
        Rule::new(&format!("value_form/{rel}"))
            .head("value_form", vec![v("id")])
            .when(rel, args)
    })
    .collect()
}

/// Pushes the frame `kont` at `KAddr(sub, ctx)` and evaluates `sub`.
fn push(name: &str, sub: &str, kont: Pattern) -> Rule {
    let ka = kaddr(v(sub), v("ctx"));
    Rule::new(name)
        .head("state_e", vec![v(sub), v("ctx"), ka.clone()])
        .head("stored_kont", vec![ka, kont])
        .head("flow_ee", vec![v("e"), v(sub)])
        .when("state_e", vec![v("e"), v("ctx"), v("ak")])
}

pub fn eval_rules() -> Vec<Rule> {
    vec![
        push(
            "E-If",
            "eguard",
            app("If", vec![v("et"), v("ef"), v("ctx"), v("ak")]),
        )
        .when("if", vec![v("e"), v("eguard"), v("et"), v("ef")]),
        push("E-C/cc", "elam", app("Callcc", vec![v("ectx"), v("ak")]))
            .when("callcc", vec![v("e"), v("elam")])
            .when("peek_ctx", vec![v("e"), v("ctx"), v("ectx")]),
        push(
            "E-Set!",
            "esetto",
            app("Set", vec![vaddr(v("x"), v("ctx")), v("ak")]),
        )
        .when("setb", vec![v("e"), v("x"), v("esetto")]),
        push(
            "E-Call",
            "efunc",
            app("Arg", vec![v("eargs"), v("ctx"), v("ectx"), v("ak")]),
        )
        .when("call", vec![v("e"), v("efunc"), v("eargs")])
        .when("peek_ctx", vec![v("e"), v("ctx"), v("ectx")]),
        push(
            "E-Let",
            "ebnd",
            app(
                "Let",
                vec![vaddr(v("x"), v("ectx")), v("ebody"), v("ectx"), v("ak")],
            ),
        )
        .head("copy_ctx", vec![v("ctx"), v("ectx"), v("e")])
        .when("let", vec![v("e"), v("ll"), v("ebody")])
        .when("let_list", vec![v("ll"), v("x"), v("ebnd")])
        .when("peek_ctx", vec![v("e"), v("ctx"), v("ectx")]),
        push(
            "E-Prim",
            "earg0",
            app("Prim1", vec![v("op"), v("earg1"), v("ctx"), v("ak")]),
        )
        .when("prim_call", vec![v("e"), v("opid"), v("pl")])
        .when("prim", vec![v("opid"), v("op")])
        .when("call_arg_list", vec![v("pl"), int(0), v("earg0")])
        .when("call_arg_list", vec![v("pl"), int(1), v("earg1")]),
    ]
}

pub fn atomic_rules() -> Vec<Rule> {
    let produce = |name: &str, value: Pattern| {
        Rule::new(name)
            .head("state_a", vec![value.clone(), v("ak")])
            .head("flow_ea", vec![v("e"), value])
            .when("state_e", vec![v("e"), v("ctx"), v("ak")])
    };
    vec![
        produce("E-Num", app("Number", vec![v("n")])).when("num", vec![v("e"), v("n")]),
        produce("E-Bool", app("Bool", vec![v("b")])).when("bool", vec![v("e"), v("b")]),
        produce("E-Lam", app("Closure", vec![v("e"), v("ctx")]))
            .when("lambda", vec![v("e"), wild(), wild()]),
        produce("E-Var", v("v"))
            .when("var", vec![v("e"), v("x")])
            .when("stored_val", vec![vaddr(v("x"), v("ctx")), v("v")]),
    ]
}

fn branch(name: &str, taken: &str, flow: &str, value: Pattern, frame: Pattern) -> Rule {
    Rule::new(name)
        .head("state_e", vec![v(taken), v("ctx_k"), v("next")])
        .head("flow_ae", vec![app("Bool", vec![sym(flow)]), v(taken)])
        .when("state_a", vec![value, v("ak")])
        .when("stored_kont", vec![v("ak"), frame])
}

pub fn apply_rules(cfg: &AnalysisConfig) -> Vec<Rule> {
    let if_true = || app("If", vec![v("et"), wild(), v("ctx_k"), v("next")]);
    let if_false = || app("If", vec![wild(), v("ef"), v("ctx_k"), v("next")]);
    let mut truthy: Vec<(&str, Pattern)> = vec![
        ("bool", app("Bool", vec![sym("#t")])),
        ("closure", app("Closure", vec![wild(), wild()])),
        ("number", app("Number", vec![wild()])),
        ("kont", app("KontRef", vec![wild()])),
    ];
    let mut falsy: Vec<(&str, Pattern)> = vec![("bool", app("Bool", vec![sym("#f")]))];
    if cfg.effective_truthiness() == Truthiness::BothBranches {
        let unknown = [
            ("primval", app("PrimVal", vec![wild(), wild(), wild()])),
            ("numtop", app("NumTop", vec![])),
        ];
        truthy.extend(unknown.clone());
        falsy.extend(unknown);
    }
    let mut rules = Vec::new();
    for (kind, value) in truthy {
        rules.push(branch(&format!("A-IfT/{kind}"), "et", "#t", value, if_true()));
    }
    for (kind, value) in falsy {
        rules.push(branch(&format!("A-IfF/{kind}"), "ef", "#f", value, if_false()));
    }

    let closure = app("Closure", vec![v("elam"), v("ctx_clo")]);
    let captured = || app("KontRef", vec![v(if cfg.captures_next() { "next" } else { "ak" })]);
    let primval = app("PrimVal", vec![v("op"), v("v1"), v("v")]);
    let primval = match cfg.effective_widen_depth() {
        Some(d) if d >= 1 => call("widen", vec![primval]),
        _ => primval,
    };
    rules.extend([
        Rule::new("A-C/cc")
            .head("state_e", vec![v("ebody"), v("ectx"), v("next")])
            .head(
                "stored_val",
                vec![vaddr(v("x"), v("ectx")), captured()],
            )
            .head("copy_ctx", vec![v("ctx_clo"), v("ectx"), v("elam")])
            .head("flow_ae", vec![closure.clone(), v("ebody")])
            .when("state_a", vec![closure.clone(), v("ak")])
            .when("stored_kont", vec![v("ak"), app("Callcc", vec![v("ectx"), v("next")])])
            .when("lambda", vec![v("elam"), v("params"), v("ebody")])
            .when("lambda_arg_list", vec![v("params"), int(0), v("x")]),
        Rule::new("A-C/ccKont")
            .head("state_a", vec![captured(), v("bk")])
            .head("flow_aa", vec![app("KontRef", vec![v("bk")]), captured()])
            .when("state_a", vec![app("KontRef", vec![v("bk")]), v("ak")])
            .when("stored_kont", vec![v("ak"), app("Callcc", vec![wild(), v("next")])]),
        Rule::new("A-Ar")
            .head("state_e", vec![v("earg"), v("ctx"), kaddr(v("earg"), v("ctx"))])
            .head(
                "stored_kont",
                vec![
                    kaddr(v("earg"), v("ctx")),
                    app("Fn", vec![v("v"), v("pos"), v("ectx"), v("next")]),
                ],
            )
            .head("flow_ae", vec![v("v"), v("earg")])
            .when("state_a", vec![v("v"), v("ak")])
            .when(
                "stored_kont",
                vec![v("ak"), app("Arg", vec![v("eargs"), v("ctx"), v("ectx"), v("next")])],
            )
            .when("call_arg_list", vec![v("eargs"), v("pos"), v("earg")]),
        Rule::new("A-Call")
            .head("state_e", vec![v("ebody"), v("ectx"), v("next")])
            .head("stored_val", vec![vaddr(v("x"), v("ectx")), v("v")])
            .head("copy_ctx", vec![v("ctx_clo"), v("ectx"), v("elam")])
            .head("flow_ae", vec![v("v"), v("ebody")])
            .when("state_a", vec![v("v"), v("ak")])
            .when(
                "stored_kont",
                vec![v("ak"), app("Fn", vec![closure, v("pos"), v("ectx"), v("next")])],
            )
            .when("lambda", vec![v("elam"), v("params"), v("ebody")])
            .when("lambda_arg_list", vec![v("params"), v("pos"), v("x")]),
        Rule::new("A-CallKont")
            .head("state_a", vec![v("v"), v("ck")])
            .head("flow_aa", vec![v("v"), v("v")])
            .when("state_a", vec![v("v"), v("ak")])
            .when(
                "stored_kont",
                vec![
                    v("ak"),
                    app("Fn", vec![app("KontRef", vec![v("ck")]), int(0), wild(), wild()]),
                ],
            ),
        Rule::new("A-Let")
            .head("state_e", vec![v("ebody"), v("ctx"), v("next")])
            .head("stored_val", vec![v("av"), v("v")])
            .head("flow_ae", vec![v("v"), v("ebody")])
            .when("state_a", vec![v("v"), v("ak")])
            .when(
                "stored_kont",
                vec![v("ak"), app("Let", vec![v("av"), v("ebody"), v("ctx"), v("next")])],
            ),
        Rule::new("A-Prim1")
            .head("state_e", vec![v("earg1"), v("ctx"), kaddr(v("earg1"), v("ctx"))])
            .head(
                "stored_kont",
                vec![
                    kaddr(v("earg1"), v("ctx")),
                    app("Prim2", vec![v("op"), v("v"), v("next")]),
                ],
            )
            .head("flow_ae", vec![v("v"), v("earg1")])
            .when("state_a", vec![v("v"), v("ak")])
            .when(
                "stored_kont",
                vec![v("ak"), app("Prim1", vec![v("op"), v("earg1"), v("ctx"), v("next")])],
            ),
        Rule::new("A-Prim2")
            .head("state_a", vec![primval.clone(), v("next")])
            .head("flow_aa", vec![v("v"), primval])
            .when("state_a", vec![v("v"), v("ak")])
            .when(
                "stored_kont",
                vec![v("ak"), app("Prim2", vec![v("op"), v("v1"), v("next")])],
            ),
        Rule::new("A-Set!")
            .head("state_a", vec![app("Number", vec![int(-42)]), v("next")])
            .head("stored_val", vec![v("loc"), v("v")])
            .head("flow_aa", vec![v("v"), app("Number", vec![int(-42)])])
            .when("state_a", vec![v("v"), v("ak")])
            .when("stored_kont", vec![v("ak"), app("Set", vec![v("loc"), v("next")])]),
    ]);
    rules
}
