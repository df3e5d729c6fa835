// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::rules::{Pattern, Rule, RuleSet, TermFn};
use super::store::{Relation, Tuple, TupleStore};
use super::term::{TermData, TermId, TermPool};
use super::EngineError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SaturationStats {
    /// Semi-naive rounds (or naive passes) across all strata.
    pub rounds: u64,
    /// Tuples added by rules.
    pub derived: u64,
    /// Total tuples in the store at the end.
    pub facts: u64,
}

#[derive(Clone, Debug)]
enum CPat {
    Var(usize),
    Const(TermId),
    Wild,
    App(TermId, Vec<CPat>),
    Call(usize, Vec<CPat>),
}

impl CPat {
    fn vars(&self, out: &mut Vec<usize>) {
        match self {
            CPat::Var(v) => out.push(*v),
            CPat::App(_, args) | CPat::Call(_, args) => args.iter().for_each(|a| a.vars(out)),
            CPat::Const(_) | CPat::Wild => {}
        }
    }

    fn ground_under(&self, bound: &[bool]) -> bool {
        match self {
            CPat::Var(v) => bound[*v],
            CPat::Const(_) => true,
            CPat::Wild | CPat::Call(..) => false,
            CPat::App(_, args) => args.iter().all(|a| a.ground_under(bound)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Range {
    Stable,
    Delta,
    Full,
}

#[derive(Clone, Debug)]
struct Step {
    rel: usize,
    range: Range,
    key_cols: Vec<usize>,
    key: Vec<CPat>,
    /// Non-key columns still to be matched.
    rest: Vec<(usize, CPat)>,
}

#[derive(Clone, Debug)]
struct CompiledRule {
    vars: usize,
    heads: Vec<(usize, Vec<CPat>)>,
    neq: Vec<(CPat, CPat)>,
    body: Vec<(usize, Vec<CPat>)>,
}

#[derive(Clone, Debug)]
struct Plan {
    rule: usize,
    steps: Vec<Step>,
}

struct Compiler<'a> {
    rs: &'a RuleSet,
    fn_index: HashMap<&'a str, usize>,
}

impl<'a> Compiler<'a> {
    fn pattern(&self, p: &Pattern, vars: &mut Vec<String>, pool: &mut TermPool) -> CPat {
        match p {
            Pattern::Var(v) => CPat::Var(match vars.iter().position(|x| x == v) {
                Some(i) => i,
                None => {
                    vars.push(v.clone());
                    vars.len() - 1
                }
            }),
            Pattern::Sym(s) => CPat::Const(pool.sym(s)),
            Pattern::Int(n) => CPat::Const(pool.int(*n)),
            Pattern::Wildcard => CPat::Wild,
            Pattern::App(f, args) => {
                let args: Vec<CPat> = args.iter().map(|a| self.pattern(a, vars, pool)).collect();
                if args.iter().all(|a| matches!(a, CPat::Const(_))) {
                    let ids: Vec<TermId> = args
                        .iter()
                        .map(|a| match a {
                            CPat::Const(c) => *c,
                            _ => unreachable!(),
                        })
                        .collect();
                    CPat::Const(pool.app(f, &ids))
                } else {
                    CPat::App(pool.sym(f), args)
                }
            }
            Pattern::Call(f, args) => CPat::Call(
                self.fn_index[f.as_str()],
                args.iter().map(|a| self.pattern(a, vars, pool)).collect(),
            ),
        }
    }

    fn rule(&self, rule: &Rule, pool: &mut TermPool) -> CompiledRule {
        let mut vars = Vec::new();
        let rel = |name: &str| self.rs.relation_index(name).expect("validated relation");
        let body = rule
            .body
            .iter()
            .map(|a| {
                let args = a.args.iter().map(|p| self.pattern(p, &mut vars, pool)).collect();
                (rel(&a.relation), args)
            })
            .collect();
        let heads = rule
            .heads
            .iter()
            .map(|a| {
                let args = a.args.iter().map(|p| self.pattern(p, &mut vars, pool)).collect();
                (rel(&a.relation), args)
            })
            .collect();
        let neq = rule
            .neq
            .iter()
            .map(|(a, b)| (self.pattern(a, &mut vars, pool), self.pattern(b, &mut vars, pool)))
            .collect();
        CompiledRule {
            vars: vars.len(),
            heads,
            neq,
            body,
        }
    }
}

/// Join order: `first` (if any), then greedily the atom with the most
/// columns already determined.
fn plan(
    rule_id: usize,
    rule: &CompiledRule,
    first: Option<usize>,
    range_of: impl Fn(usize) -> Range,
) -> Plan {
    let mut bound = vec![false; rule.vars];
    let mut remaining: Vec<usize> = (0..rule.body.len()).collect();
    let mut steps = Vec::new();
    while !remaining.is_empty() {
        let pick = match first.filter(|f| remaining.contains(f)) {
            Some(f) => f,
            None => *remaining
                .iter()
                .max_by_key(|&&i| {
                    let n = rule.body[i].1.iter().filter(|p| p.ground_under(&bound)).count();
                    (n, std::cmp::Reverse(i))
                })
                .unwrap(),
        };
        remaining.retain(|&i| i != pick);
        let (rel, args) = &rule.body[pick];
        let mut key_cols = Vec::new();
        let mut key = Vec::new();
        let mut rest = Vec::new();
        for (c, p) in args.iter().enumerate() {
            if p.ground_under(&bound) {
                key_cols.push(c);
                key.push(p.clone());
            } else if !matches!(p, CPat::Wild) {
                rest.push((c, p.clone()));
            }
        }
        for (_, p) in &rest {
            let mut vs = Vec::new();
            p.vars(&mut vs);
            vs.into_iter().for_each(|v| bound[v] = true);
        }
        steps.push(Step {
            rel: *rel,
            range: range_of(pick),
            key_cols,
            key,
            rest,
        });
    }
    Plan {
        rule: rule_id,
        steps,
    }
}

fn unify(
    p: &CPat,
    t: TermId,
    pool: &TermPool,
    b: &mut [Option<TermId>],
    trail: &mut Vec<usize>,
) -> bool {
    match p {
        CPat::Var(v) => match b[*v] {
            Some(x) => x == t,
            None => {
                b[*v] = Some(t);
                trail.push(*v);
                true
            }
        },
        CPat::Const(c) => *c == t,
        CPat::Wild => true,
        CPat::App(f, args) => match pool.get(t) {
            TermData::App(g, targs) if g == f && targs.len() == args.len() => args
                .iter()
                .zip(targs.iter())
                .all(|(p, &t)| unify(p, t, pool, b, trail)),
            _ => false,
        },
        CPat::Call(..) => unreachable!("calls only occur in heads"),
    }
}

/// Value of a ground pattern if the term already exists.
fn lookup_ground(p: &CPat, pool: &TermPool, b: &[Option<TermId>]) -> Option<TermId> {
    match p {
        CPat::Var(v) => b[*v],
        CPat::Const(c) => Some(*c),
        CPat::App(f, args) => {
            let ids = args
                .iter()
                .map(|a| lookup_ground(a, pool, b))
                .collect::<Option<Box<[TermId]>>>()?;
            pool.lookup(&TermData::App(*f, ids))
        }
        CPat::Wild | CPat::Call(..) => unreachable!("key patterns are ground"),
    }
}

fn build(p: &CPat, pool: &mut TermPool, b: &[Option<TermId>], funcs: &[TermFn]) -> TermId {
    match p {
        CPat::Var(v) => b[*v].expect("range-restricted"),
        CPat::Const(c) => *c,
        CPat::App(f, args) => {
            let ids: Box<[TermId]> = args.iter().map(|a| build(a, pool, b, funcs)).collect();
            pool.intern(TermData::App(*f, ids))
        }
        CPat::Call(f, args) => {
            let ids: Vec<TermId> = args.iter().map(|a| build(a, pool, b, funcs)).collect();
            funcs[*f](pool, &ids)
        }
        CPat::Wild => unreachable!("validated heads have no wildcards"),
    }
}

struct Join<'a> {
    rule: &'a CompiledRule,
    plan: &'a Plan,
    relations: &'a [Relation],
    bounds: &'a [(usize, usize)],
    funcs: &'a [TermFn],
    binding: Vec<Option<TermId>>,
    trail: Vec<usize>,
    key: Vec<TermId>,
    out: &'a mut Vec<(usize, Tuple)>,
}

impl Join<'_> {
    fn run(&mut self, k: usize, pool: &mut TermPool) {
        let Some(step) = self.plan.steps.get(k) else {
            self.emit(pool);
            return;
        };
        let rel = &self.relations[step.rel];
        let (stable, recent) = self.bounds[step.rel];
        let (lo, hi) = match step.range {
            Range::Stable => (0, stable),
            Range::Delta => (stable, recent),
            Range::Full => (0, recent),
        };
        if lo >= hi {
            return;
        }
        if step.key_cols.is_empty() {
            for i in lo..hi {
                self.try_tuple(k, rel.tuple(i), pool);
            }
        } else {
            self.key.clear();
            for p in &step.key {
                match lookup_ground(p, pool, &self.binding) {
                    Some(t) => self.key.push(t),
                    None => return,
                }
            }
            for &i in rel.lookup(&step.key_cols, &self.key, lo, hi) {
                self.try_tuple(k, rel.tuple(i as usize), pool);
            }
        }
    }

    fn try_tuple(&mut self, k: usize, tuple: &[TermId], pool: &mut TermPool) {
        let step = &self.plan.steps[k];
        let mark = self.trail.len();
        let ok = step
            .rest
            .iter()
            .all(|(c, p)| unify(p, tuple[*c], pool, &mut self.binding, &mut self.trail));
        if ok {
            self.run(k + 1, pool);
        }
        for v in self.trail.drain(mark..) {
            self.binding[v] = None;
        }
    }

    fn emit(&mut self, pool: &mut TermPool) {
        for (a, b) in &self.rule.neq {
            if build(a, pool, &self.binding, self.funcs) == build(b, pool, &self.binding, self.funcs) {
                return;
            }
        }
        for (rel, args) in &self.rule.heads {
            let tuple: Tuple = args
                .iter()
                .map(|p| build(p, pool, &self.binding, self.funcs))
                .collect();
            if !self.relations[*rel].contains(&tuple) {
                self.out.push((*rel, tuple));
            }
        }
    }
}

struct Prepared {
    rules: Vec<CompiledRule>,
    funcs: Vec<TermFn>,
    /// Per stratum: plan over full relations, then one plan per recursive
    /// body atom.
    full: Vec<Vec<Plan>>,
    delta: Vec<Vec<Plan>>,
}

fn prepare(rs: &RuleSet, store: &mut TupleStore) -> Prepared {
    let names: Vec<&str> = rs.functions.keys().map(|s| s.as_str()).collect();
    let compiler = Compiler {
        rs,
        fn_index: names.iter().enumerate().map(|(i, n)| (*n, i)).collect(),
    };
    let funcs = names.iter().map(|n| rs.functions[*n].clone()).collect();
    let rules: Vec<CompiledRule> = rs
        .rules
        .iter()
        .map(|r| compiler.rule(r, &mut store.pool))
        .collect();
    let mut full = Vec::new();
    let mut delta = Vec::new();
    for stratum in &rs.strata {
        let mut f = Vec::new();
        let mut d = Vec::new();
        for &r in &stratum.rules {
            let rule = &rules[r];
            f.push(plan(r, rule, None, |_| Range::Full));
            for (i, (rel, _)) in rule.body.iter().enumerate() {
                if !stratum.relations.contains(rel) {
                    continue;
                }
                d.push(plan(r, rule, Some(i), |j| {
                    let rj = rule.body[j].0;
                    if j == i {
                        Range::Delta
                    } else if !stratum.relations.contains(&rj) || j > i {
                        Range::Full
                    } else {
                        Range::Stable
                    }
                }));
            }
        }
        full.push(f);
        delta.push(d);
    }
    for plan in full.iter().chain(&delta).flatten() {
        for step in &plan.steps {
            store.relation_at_mut(step.rel).ensure_index(&step.key_cols);
        }
    }
    Prepared {
        rules,
        funcs,
        full,
        delta,
    }
}

fn run_plans(
    plans: &[Plan],
    prep: &Prepared,
    store: &mut TupleStore,
    bounds: &[(usize, usize)],
    ceiling: Option<u64>,
    stats: &mut SaturationStats,
) -> Result<(), EngineError> {
    let mut out = Vec::new();
    for plan in plans {
        let rule = &prep.rules[plan.rule];
        let (pool, relations) = store.split();
        Join {
            rule,
            plan,
            relations,
            bounds,
            funcs: &prep.funcs,
            binding: vec![None; rule.vars],
            trail: Vec::new(),
            key: Vec::new(),
            out: &mut out,
        }
        .run(0, pool);
        for (rel, tuple) in out.drain(..) {
            if store.relation_at_mut(rel).insert(tuple) {
                stats.derived += 1;
            }
        }
        if let Some(c) = ceiling {
            let facts = store.total_facts();
            if facts > c {
                return Err(EngineError::FactCeiling { ceiling: c, facts });
            }
        }
    }
    Ok(())
}

fn snapshot(store: &TupleStore) -> Vec<(usize, usize)> {
    (0..store.relation_count())
        .map(|i| {
            let n = store.relation_at(i).len();
            (n, n)
        })
        .collect()
}

/// Least fixpoint of `rs` over the tuples already in `store`, computed
/// semi-naively stratum by stratum. Aborts once the store holds more than
/// `ceiling` tuples.
pub fn saturate(
    rs: &RuleSet,
    store: &mut TupleStore,
    ceiling: Option<u64>,
) -> Result<SaturationStats, EngineError> {
    let prep = prepare(rs, store);
    let mut stats = SaturationStats::default();
    for (s, stratum) in rs.strata.iter().enumerate() {
        let mut bounds = snapshot(store);
        run_plans(&prep.full[s], &prep, store, &bounds, ceiling, &mut stats)?;
        stats.rounds += 1;
        loop {
            let mut any = false;
            for &r in &stratum.relations {
                let len = store.relation_at(r).len();
                bounds[r] = (bounds[r].1, len);
                any |= bounds[r].0 < len;
            }
            if !any {
                break;
            }
            run_plans(&prep.delta[s], &prep, store, &bounds, ceiling, &mut stats)?;
            stats.rounds += 1;
        }
    }
    stats.facts = store.total_facts();
    Ok(stats)
}

/// Reference evaluator: re-runs every rule over everything until nothing
/// changes.
pub fn saturate_naive(
    rs: &RuleSet,
    store: &mut TupleStore,
    ceiling: Option<u64>,
) -> Result<SaturationStats, EngineError> {
    let prep = prepare(rs, store);
    let mut stats = SaturationStats::default();
    for s in 0..rs.strata.len() {
        loop {
            let before = store.total_facts();
            let bounds = snapshot(store);
            run_plans(&prep.full[s], &prep, store, &bounds, ceiling, &mut stats)?;
            stats.rounds += 1;
            if store.total_facts() == before {
                break;
            }
        }
    }
    stats.facts = store.total_facts();
    Ok(stats)
}

/// Applies every rule once to the current store, adding what it derives.
/// Returns the number of new tuples; zero means `store` is a fixpoint.
pub fn apply_once(rs: &RuleSet, store: &mut TupleStore) -> Result<u64, EngineError> {
    let prep = prepare(rs, store);
    let mut stats = SaturationStats::default();
    let bounds = snapshot(store);
    let all: Vec<Plan> = prep.full.iter().flatten().cloned().collect();
    run_plans(&all, &prep, store, &bounds, None, &mut stats)?;
    Ok(stats.derived)
}
