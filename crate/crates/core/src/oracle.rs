// SPDX-License-Identifier: Apache-2.0

//! The abstract machine run directly: a worklist of configurations over one
//! global value store and one global continuation store.
//!
//! A configuration is re-stepped whenever an address it read grows, so each
//! step can simply recompute all of its successors from the current store.

use std::collections::{HashMap, HashSet, VecDeque};

use indexmap::IndexSet;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rustc_hash::FxBuildHasher;
use thiserror::Error;

use crate::analysis::{AnalysisConfig, Truthiness};
use crate::frontend::{all_free_vars, LabeledProgram, Node};
use crate::model::{alloc_k, alloc_v, AbsValue, CtxId, Interner, KAddr, Kont, KontId, Label, Symbol, VAddr, ValueId};
use crate::result::{AnalysisResult, RelationName};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Config {
    Eval { e: Label, ctx: CtxId, ak: KAddr },
    Apply { v: ValueId, ak: KAddr },
}

#[derive(Clone, Debug, Default)]
pub struct GlobalStore {
    vstore: HashMap<VAddr, IndexSet<ValueId, FxBuildHasher>>,
    kstore: HashMap<KAddr, IndexSet<KontId, FxBuildHasher>>,
}

impl GlobalStore {
    pub fn values(&self, a: VAddr) -> impl Iterator<Item = ValueId> + '_ {
        self.vstore.get(&a).into_iter().flatten().copied()
    }

    pub fn konts(&self, a: KAddr) -> impl Iterator<Item = KontId> + '_ {
        self.kstore.get(&a).into_iter().flatten().copied()
    }

    pub fn join_value(&mut self, a: VAddr, v: ValueId) -> bool {
        self.vstore.entry(a).or_default().insert(v)
    }

    pub fn join_kont(&mut self, a: KAddr, k: KontId) -> bool {
        self.kstore.entry(a).or_default().insert(k)
    }

    pub fn value_count(&self) -> usize {
        self.vstore.values().map(IndexSet::len).sum()
    }

    pub fn kont_count(&self) -> usize {
        self.kstore.values().map(IndexSet::len).sum()
    }
}

/// Store address read by a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Read {
    Value(VAddr),
    Kont(KAddr),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flow {
    Ee(Label, Label),
    Ea(Label, ValueId),
    Aa(ValueId, ValueId),
    Ae(ValueId, Label),
}

/// Everything one transition produces.
#[derive(Clone, Debug, Default)]
pub struct StepOutcome {
    pub successors: Vec<Config>,
    pub values: Vec<(VAddr, ValueId)>,
    pub konts: Vec<(KAddr, KontId)>,
    pub reads: Vec<Read>,
    pub peeks: Vec<(Label, CtxId, CtxId)>,
    pub copies: Vec<(CtxId, CtxId, Label)>,
    pub flows: Vec<Flow>,
    /// Names of the rules that fired, in firing order.
    pub rules: Vec<&'static str>,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("derivation ceiling of {ceiling} exceeded; the analysis likely diverges")]
    Ceiling { ceiling: u64 },
    #[error("{0} is not an atomic expression")]
    NotAtomic(Label),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WorklistOrder {
    #[default]
    Fifo,
    Lifo,
    Shuffled(u64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleStats {
    pub steps: u64,
    pub configs: u64,
    /// Successors and store joins produced over all steps, duplicates
    /// included. This is what the ceiling bounds.
    pub derivations: u64,
}

/// The machine over one program, with its own interner.
pub struct Oracle<'p> {
    program: &'p LabeledProgram,
    cfg: AnalysisConfig,
    pub interner: Interner,
    freevars: Vec<Vec<Symbol>>,
}

impl<'p> Oracle<'p> {
    pub fn new(program: &'p LabeledProgram, cfg: &AnalysisConfig) -> Self {
        let mut interner = Interner::new();
        let freevars = all_free_vars(program)
            .into_iter()
            .map(|set| set.iter().map(|x| interner.symbol(x)).collect())
            .collect();
        Oracle {
            program,
            cfg: *cfg,
            interner,
            freevars,
        }
    }

    pub fn inject(&mut self) -> (Config, KAddr, KontId) {
        let e = self.program.root;
        let ctx = self.interner.empty_context();
        let ak = alloc_k(e, ctx);
        let mt = self.interner.kont(Kont::Mt);
        (Config::Eval { e, ctx, ak }, ak, mt)
    }

    fn new_ctx(&mut self, e: Label, ctx: CtxId) -> CtxId {
        self.interner.make_context(e, ctx, self.cfg.m)
    }

    pub fn atomic_eval(&mut self, e: Label, ctx: CtxId, store: &GlobalStore) -> Result<Vec<ValueId>, OracleError> {
        Ok(match self.program.node(e) {
            Node::Num(n) => vec![self.interner.value(AbsValue::Number(*n))],
            Node::Bool(b) => vec![self.interner.value(AbsValue::Bool(*b))],
            Node::Lambda { .. } => vec![self.interner.value(AbsValue::Closure { lam: e, ctx })],
            Node::Var { name } => match self.interner.find_symbol(name) {
                Some(x) => store.values(alloc_v(x, ctx)).collect(),
                None => Vec::new(),
            },
            _ => return Err(OracleError::NotAtomic(e)),
        })
    }

    /// All successors of `c` under the current store, and the store joins
    /// the fired rules perform.
    pub fn step(&mut self, c: Config, store: &GlobalStore) -> StepOutcome {
        let mut out = StepOutcome::default();
        match c {
            Config::Eval { e, ctx, ak } => self.eval(e, ctx, ak, store, &mut out),
            Config::Apply { v, ak } => {
                out.reads.push(Read::Kont(ak));
                for k in store.konts(ak) {
                    self.apply(v, ak, k, store, &mut out);
                }
            }
        }
        out
    }

    /// Evaluates `sub` under a fresh frame `kont` stored at `KAddr(sub, ctx)`.
    fn push(&mut self, e: Label, sub: Label, ctx: CtxId, kont: Kont, out: &mut StepOutcome) {
        let ka = alloc_k(sub, ctx);
        let k = self.interner.kont(kont);
        out.successors.push(Config::Eval { e: sub, ctx, ak: ka });
        out.konts.push((ka, k));
        out.flows.push(Flow::Ee(e, sub));
    }

    fn captured(&self, frame: KAddr, next: KAddr) -> KAddr {
        if self.cfg.captures_next() {
            next
        } else {
            frame
        }
    }

    fn peek(&mut self, e: Label, ctx: CtxId, out: &mut StepOutcome) -> CtxId {
        let ectx = self.new_ctx(e, ctx);
        out.peeks.push((e, ctx, ectx));
        ectx
    }

    fn copy(&mut self, from: CtxId, to: CtxId, e: Label, store: &GlobalStore, out: &mut StepOutcome) {
        out.copies.push((from, to, e));
        for &fv in &self.freevars[e.index()] {
            let src = alloc_v(fv, from);
            out.reads.push(Read::Value(src));
            for v in store.values(src) {
                out.values.push((alloc_v(fv, to), v));
            }
        }
    }

    fn eval(&mut self, e: Label, ctx: CtxId, ak: KAddr, store: &GlobalStore, out: &mut StepOutcome) {
        let p = self.program;
        match p.node(e) {
            Node::Num(_) | Node::Bool(_) | Node::Lambda { .. } | Node::Var { .. } => {
                let rule = match p.node(e) {
                    Node::Num(_) => "E-Num",
                    Node::Bool(_) => "E-Bool",
                    Node::Lambda { .. } => {
                        self.peek(e, ctx, out);
                        "E-Lam"
                    }
                    _ => "E-Var",
                };
                if let Node::Var { name } = p.node(e) {
                    let x = self.interner.symbol(name);
                    out.reads.push(Read::Value(alloc_v(x, ctx)));
                }
                for v in self.atomic_eval(e, ctx, store).expect("atomic") {
                    out.successors.push(Config::Apply { v, ak });
                    out.flows.push(Flow::Ea(e, v));
                    out.rules.push(rule);
                }
            }
            Node::If {
                guard,
                then_branch,
                else_branch,
            } => {
                let kont = Kont::If {
                    then_branch: *then_branch,
                    else_branch: *else_branch,
                    ctx,
                    next: ak,
                };
                self.push(e, *guard, ctx, kont, out);
                out.rules.push("E-If");
            }
            Node::Callcc { expr } => {
                let ectx = self.peek(e, ctx, out);
                self.push(e, *expr, ctx, Kont::Callcc { ectx, next: ak }, out);
                out.rules.push("E-C/cc");
            }
            Node::SetBang { var, expr } => {
                let loc = alloc_v(self.interner.symbol(var), ctx);
                self.push(e, *expr, ctx, Kont::Set { loc, next: ak }, out);
                out.rules.push("E-Set!");
            }
            Node::Call { func, args } => {
                let ectx = self.peek(e, ctx, out);
                let kont = Kont::Arg {
                    args: *args,
                    ctx,
                    ectx,
                    next: ak,
                };
                self.push(e, *func, ctx, kont, out);
                out.rules.push("E-Call");
            }
            Node::Let { bindings, body } => {
                let ectx = self.peek(e, ctx, out);
                let Node::Bindings { binds } = p.node(*bindings) else {
                    return;
                };
                for (x, ebnd) in binds {
                    let kont = Kont::Let {
                        addr: alloc_v(self.interner.symbol(x), ectx),
                        body: *body,
                        ctx: ectx,
                        next: ak,
                    };
                    self.push(e, *ebnd, ctx, kont, out);
                    self.copy(ctx, ectx, e, store, out);
                    out.rules.push("E-Let");
                }
            }
            Node::PrimCall { op, args } => {
                let (Node::PrimOp { name }, [a0, a1]) = (p.node(*op), p.arg_items(*args)) else {
                    return;
                };
                let kont = Kont::Prim1 {
                    op: self.interner.symbol(name),
                    operand: *a1,
                    ctx,
                    next: ak,
                };
                self.push(e, *a0, ctx, kont, out);
                out.rules.push("E-Prim");
            }
            Node::Params { .. }
            | Node::Bindings { .. }
            | Node::PrimOp { .. }
            | Node::Args { .. }
            | Node::Quote { .. }
            | Node::Datum { .. } => {}
        }
    }

    fn truthy(&self, v: ValueId) -> (bool, bool) {
        match self.interner.value_data(v) {
            AbsValue::Bool(b) => (*b, !*b),
            AbsValue::Number(_) | AbsValue::Closure { .. } | AbsValue::KontRef(_) => (true, false),
            AbsValue::PrimVal { .. } | AbsValue::NumTop => {
                let both = self.cfg.effective_truthiness() == Truthiness::BothBranches;
                (both, both)
            }
        }
    }

    /// Binds parameter `pos` of closure `lam` and enters its body.
    #[allow(clippy::too_many_arguments)]
    fn enter(
        &mut self,
        lam: Label,
        ctx_clo: CtxId,
        pos: usize,
        arg: ValueId,
        ectx: CtxId,
        next: KAddr,
        store: &GlobalStore,
        out: &mut StepOutcome,
    ) -> bool {
        let p = self.program;
        let (Some(params), Some(body)) = (p.lambda_params(lam), p.lambda_body(lam)) else {
            return false;
        };
        let Some(x) = params.get(pos) else {
            return false;
        };
        let x = self.interner.symbol(x);
        out.values.push((alloc_v(x, ectx), arg));
        self.copy(ctx_clo, ectx, lam, store, out);
        out.successors.push(Config::Eval {
            e: body,
            ctx: ectx,
            ak: next,
        });
        true
    }

    fn apply(&mut self, v: ValueId, ak: KAddr, k: KontId, store: &GlobalStore, out: &mut StepOutcome) {
        match *self.interner.kont_data(k) {
            Kont::Mt => {}
            Kont::If {
                then_branch,
                else_branch,
                ctx,
                next,
            } => {
                let (t, f) = self.truthy(v);
                for (taken, branch, flag, rule) in [
                    (t, then_branch, true, "A-IfT"),
                    (f, else_branch, false, "A-IfF"),
                ] {
                    if taken {
                        let b = self.interner.value(AbsValue::Bool(flag));
                        out.successors.push(Config::Eval {
                            e: branch,
                            ctx,
                            ak: next,
                        });
                        out.flows.push(Flow::Ae(b, branch));
                        out.rules.push(rule);
                    }
                }
            }
            Kont::Callcc { ectx, next } => match *self.interner.value_data(v) {
                AbsValue::Closure { lam, ctx } => {
                    let kv = self.interner.value(AbsValue::KontRef(self.captured(ak, next)));
                    if self.enter(lam, ctx, 0, kv, ectx, next, store, out) {
                        let body = self.program.lambda_body(lam).expect("lambda");
                        out.flows.push(Flow::Ae(v, body));
                        out.rules.push("A-C/cc");
                    }
                }
                AbsValue::KontRef(bk) => {
                    let here = self.interner.value(AbsValue::KontRef(self.captured(ak, next)));
                    out.successors.push(Config::Apply { v: here, ak: bk });
                    out.flows.push(Flow::Aa(v, here));
                    out.rules.push("A-C/ccKont");
                }
                _ => {}
            },
            Kont::Arg {
                args,
                ctx,
                ectx,
                next,
            } => {
                for (pos, &earg) in self.program.arg_items(args).iter().enumerate() {
                    let kont = Kont::Fn {
                        func: v,
                        pos: pos as u32,
                        ctx: ectx,
                        next,
                    };
                    let ka = alloc_k(earg, ctx);
                    let k = self.interner.kont(kont);
                    out.successors.push(Config::Eval { e: earg, ctx, ak: ka });
                    out.konts.push((ka, k));
                    out.flows.push(Flow::Ae(v, earg));
                    out.rules.push("A-Ar");
                }
            }
            Kont::Fn {
                func,
                pos,
                ctx: ectx,
                next,
            } => match *self.interner.value_data(func) {
                AbsValue::Closure { lam, ctx } => {
                    if self.enter(lam, ctx, pos as usize, v, ectx, next, store, out) {
                        let body = self.program.lambda_body(lam).expect("lambda");
                        out.flows.push(Flow::Ae(v, body));
                        out.rules.push("A-Call");
                    }
                }
                AbsValue::KontRef(ck) if pos == 0 => {
                    out.successors.push(Config::Apply { v, ak: ck });
                    out.flows.push(Flow::Aa(v, v));
                    out.rules.push("A-CallKont");
                }
                _ => {}
            },
            Kont::Let {
                addr,
                body,
                ctx,
                next,
            } => {
                out.values.push((addr, v));
                out.successors.push(Config::Eval { e: body, ctx, ak: next });
                out.flows.push(Flow::Ae(v, body));
                out.rules.push("A-Let");
            }
            Kont::Prim1 {
                op,
                operand,
                ctx,
                next,
            } => {
                let ka = alloc_k(operand, ctx);
                let k = self.interner.kont(Kont::Prim2 { op, left: v, next });
                out.successors.push(Config::Eval {
                    e: operand,
                    ctx,
                    ak: ka,
                });
                out.konts.push((ka, k));
                out.flows.push(Flow::Ae(v, operand));
                out.rules.push("A-Prim1");
            }
            Kont::Prim2 { op, left, next } => {
                let pv = self.interner.value(AbsValue::PrimVal {
                    op,
                    left,
                    right: v,
                });
                let pv = self
                    .interner
                    .widen_value(pv, self.cfg.effective_widen_depth());
                out.successors.push(Config::Apply { v: pv, ak: next });
                out.flows.push(Flow::Aa(v, pv));
                out.rules.push("A-Prim2");
            }
            Kont::Set { loc, next } => {
                let n = self.interner.value(AbsValue::Number(-42));
                out.values.push((loc, v));
                out.successors.push(Config::Apply { v: n, ak: next });
                out.flows.push(Flow::Aa(v, n));
                out.rules.push("A-Set!");
            }
        }
    }

    pub fn render_config(&self, c: Config) -> String {
        let i = &self.interner;
        match c {
            Config::Eval { e, ctx, ak } => {
                format!("eval {e} {} {}", i.render_context(ctx), i.render_kaddr(ak))
            }
            Config::Apply { v, ak } => {
                format!("apply {} {}", i.render_value(v), i.render_kaddr(ak))
            }
        }
    }
}

/// Worklist with a membership flag so a config is queued at most once.
struct Worklist {
    order: WorklistOrder,
    items: VecDeque<usize>,
    queued: Vec<bool>,
    rng: Option<StdRng>,
}

impl Worklist {
    fn new(order: WorklistOrder) -> Self {
        let rng = match order {
            WorklistOrder::Shuffled(seed) => Some(StdRng::seed_from_u64(seed)),
            _ => None,
        };
        Worklist {
            order,
            items: VecDeque::new(),
            queued: Vec::new(),
            rng,
        }
    }

    fn push(&mut self, i: usize) {
        if self.queued.len() <= i {
            self.queued.resize(i + 1, false);
        }
        if !self.queued[i] {
            self.queued[i] = true;
            self.items.push_back(i);
        }
    }

    fn pop(&mut self) -> Option<usize> {
        let i = match self.order {
            WorklistOrder::Fifo => self.items.pop_front(),
            WorklistOrder::Lifo => self.items.pop_back(),
            WorklistOrder::Shuffled(_) => {
                if self.items.is_empty() {
                    None
                } else {
                    let n = self.items.len();
                    let j = self.rng.as_mut().expect("seeded").gen_range(0..n);
                    self.items.swap_remove_back(j)
                }
            }
        }?;
        self.queued[i] = false;
        Some(i)
    }
}

/// Options for [`run_fixpoint_with`].
#[derive(Default)]
pub struct RunOptions<'a> {
    pub order: WorklistOrder,
    /// Receives one line per fired rule.
    pub trace: Option<&'a mut dyn FnMut(&str)>,
}

pub fn run_fixpoint(program: &LabeledProgram, cfg: &AnalysisConfig) -> Result<AnalysisResult, OracleError> {
    run_fixpoint_with(program, cfg, RunOptions::default()).map(|(r, _)| r)
}

pub fn run_fixpoint_with(
    program: &LabeledProgram,
    cfg: &AnalysisConfig,
    mut opts: RunOptions<'_>,
) -> Result<(AnalysisResult, OracleStats), OracleError> {
    let mut oracle = Oracle::new(program, cfg);
    let mut store = GlobalStore::default();
    let mut configs: IndexSet<Config, FxBuildHasher> = IndexSet::default();
    let mut deps: HashMap<Read, IndexSet<usize, FxBuildHasher>> = HashMap::new();
    let mut peeks = HashSet::new();
    let mut copies = HashSet::new();
    let mut flows = HashSet::new();
    let mut work = Worklist::new(opts.order);
    let mut stats = OracleStats::default();

    let (init, ak, mt) = oracle.inject();
    store.join_kont(ak, mt);
    let root = program.root;
    let empty = oracle.interner.empty_context();
    let top_ctx = oracle.new_ctx(root, empty);
    peeks.insert((root, empty, top_ctx));
    configs.insert(init);
    work.push(0);

    while let Some(i) = work.pop() {
        stats.steps += 1;
        let c = configs[i];
        let out = oracle.step(c, &store);
        stats.derivations += (out.successors.len() + out.values.len() + out.konts.len()) as u64;
        if let Some(ceiling) = cfg.fact_ceiling {
            if stats.derivations > ceiling {
                return Err(OracleError::Ceiling { ceiling });
            }
        }
        if let Some(trace) = opts.trace.as_mut() {
            let rendered = oracle.render_config(c);
            for rule in &out.rules {
                trace(&format!("{rule}\t{rendered}"));
            }
        }
        for r in out.reads {
            deps.entry(r).or_default().insert(i);
        }
        for (a, v) in out.values {
            if store.join_value(a, v) {
                if let Some(ds) = deps.get(&Read::Value(a)) {
                    ds.iter().for_each(|&d| work.push(d));
                }
            }
        }
        for (a, k) in out.konts {
            if store.join_kont(a, k) {
                if let Some(ds) = deps.get(&Read::Kont(a)) {
                    ds.iter().for_each(|&d| work.push(d));
                }
            }
        }
        for s in out.successors {
            let (j, fresh) = configs.insert_full(s);
            if fresh {
                work.push(j);
            }
        }
        peeks.extend(out.peeks);
        copies.extend(out.copies);
        flows.extend(out.flows);
    }
    stats.configs = configs.len() as u64;

    let i = &oracle.interner;
    let mut rows: Vec<(RelationName, Vec<String>)> = Vec::new();
    let (mut se, mut sa) = (Vec::new(), Vec::new());
    for c in &configs {
        match *c {
            Config::Eval { e, ctx, ak } => se.push(format!(
                "{e}\t{}\t{}",
                i.render_context(ctx),
                i.render_kaddr(ak)
            )),
            Config::Apply { v, ak } => {
                sa.push(format!("{}\t{}", i.render_value(v), i.render_kaddr(ak)))
            }
        }
    }
    rows.push((RelationName::StateE, se));
    rows.push((RelationName::StateA, sa));
    rows.push((
        RelationName::StoredVal,
        store
            .vstore
            .iter()
            .flat_map(|(a, vs)| {
                let a = i.render_vaddr(*a);
                vs.iter().map(move |v| format!("{a}\t{}", i.render_value(*v)))
            })
            .collect(),
    ));
    rows.push((
        RelationName::StoredKont,
        store
            .kstore
            .iter()
            .flat_map(|(a, ks)| {
                let a = i.render_kaddr(*a);
                ks.iter().map(move |k| format!("{a}\t{}", i.render_kont(*k)))
            })
            .collect(),
    ));
    rows.push((
        RelationName::PeekCtx,
        peeks
            .iter()
            .map(|(e, a, b)| format!("{e}\t{}\t{}", i.render_context(*a), i.render_context(*b)))
            .collect(),
    ));
    rows.push((
        RelationName::CopyCtx,
        copies
            .iter()
            .map(|(a, b, e)| format!("{}\t{}\t{e}", i.render_context(*a), i.render_context(*b)))
            .collect(),
    ));
    let mut flow_rows: [Vec<String>; 4] = Default::default();
    for f in &flows {
        match *f {
            Flow::Ee(a, b) => flow_rows[0].push(format!("{a}\t{b}")),
            Flow::Ea(a, v) => flow_rows[1].push(format!("{a}\t{}", i.render_value(v))),
            Flow::Aa(u, v) => {
                flow_rows[2].push(format!("{}\t{}", i.render_value(u), i.render_value(v)))
            }
            Flow::Ae(v, e) => flow_rows[3].push(format!("{}\t{e}", i.render_value(v))),
        }
    }
    let [ee, ea, aa, ae] = flow_rows;
    rows.extend([
        (RelationName::FlowEe, ee),
        (RelationName::FlowEa, ea),
        (RelationName::FlowAa, aa),
        (RelationName::FlowAe, ae),
    ]);
    rows.push((
        RelationName::Freevar,
        all_free_vars(program)
            .iter()
            .enumerate()
            .flat_map(|(l, set)| set.iter().map(move |x| format!("{x}\te{l}")))
            .collect(),
    ));
    Ok((AnalysisResult::from_rows(rows), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, FrontendOptions};

    fn program(src: &str) -> LabeledProgram {
        parse_program(src, &FrontendOptions::default()).unwrap()
    }

    #[test]
    fn literal_has_two_configs() {
        let p = program("42");
        let (r, stats) = run_fixpoint_with(&p, &AnalysisConfig::default(), RunOptions::default()).unwrap();
        assert_eq!(stats.configs, 2);
        assert_eq!(r.rows(RelationName::StateA), &["(Number 42)\t(KAddr e0 (Context))"]);
    }

    #[test]
    fn atomic_eval_cases() {
        let p = program("(lambda (x) x)");
        let mut o = Oracle::new(&p, &AnalysisConfig::default());
        let store = GlobalStore::default();
        let ctx = o.interner.context(&[Label(7)]);
        let clo = o.atomic_eval(Label(0), ctx, &store).unwrap();
        assert_eq!(o.interner.render_value(clo[0]), "(Closure e0 (Context e7))");
        assert!(o.atomic_eval(Label(2), ctx, &store).unwrap().is_empty());
        assert_eq!(o.atomic_eval(Label(1), ctx, &store), Err(OracleError::NotAtomic(Label(1))));
    }

    #[test]
    fn bool_false_reaches_every_frame_at_its_address() {
        let p = program("(if #f 1 2)");
        let mut o = Oracle::new(&p, &AnalysisConfig::default());
        let mut store = GlobalStore::default();
        let empty = o.interner.empty_context();
        let ka = alloc_k(Label(1), empty);
        let next = alloc_k(Label(0), empty);
        let fls = o.interner.value(AbsValue::Bool(false));
        let x = o.interner.symbol("x");
        let if_k = o.interner.kont(Kont::If {
            then_branch: Label(2),
            else_branch: Label(3),
            ctx: empty,
            next,
        });
        let let_k = o.interner.kont(Kont::Let {
            addr: alloc_v(x, empty),
            body: Label(2),
            ctx: empty,
            next,
        });
        store.join_kont(ka, if_k);
        store.join_kont(ka, let_k);
        let out = o.step(Config::Apply { v: fls, ak: ka }, &store);
        assert_eq!(
            out.successors,
            vec![
                Config::Eval { e: Label(3), ctx: empty, ak: next },
                Config::Eval { e: Label(2), ctx: empty, ak: next },
            ]
        );
        assert_eq!(out.values, vec![(alloc_v(x, empty), fls)]);
    }

    #[test]
    fn set_writes_and_returns_marker() {
        let p = program("(let ((a 1)) (set! a 2))");
        let r = run_fixpoint(&p, &AnalysisConfig::default()).unwrap();
        let a = r.values_at("(VAddr a (Context))");
        assert_eq!(a, vec!["(Number 1)", "(Number 2)"]);
        assert!(r.applied_values().contains(&"(Number -42)"));
    }

    #[test]
    fn worklist_order_does_not_matter() {
        let p = program(
            "((lambda (f) (let ((a (f 1)) (b (f 2))) (+ a b))) (lambda (z) (call/cc (lambda (k) (k z)))))",
        );
        let cfg = AnalysisConfig::with_m(1);
        let base = run_fixpoint(&p, &cfg).unwrap();
        for order in [WorklistOrder::Lifo, WorklistOrder::Shuffled(3), WorklistOrder::Shuffled(99)] {
            let opts = RunOptions { order, trace: None };
            let (r, _) = run_fixpoint_with(&p, &cfg, opts).unwrap();
            assert_eq!(r, base);
        }
    }

    #[test]
    fn trace_lists_fired_rules() {
        let p = program("(if #t 1 2)");
        let mut lines = Vec::new();
        let mut sink = |l: &str| lines.push(l.to_string());
        let opts = RunOptions {
            order: WorklistOrder::Fifo,
            trace: Some(&mut sink),
        };
        run_fixpoint_with(&p, &AnalysisConfig::default(), opts).unwrap();
        assert_eq!(lines[0], "E-If\teval e0 (Context) (KAddr e0 (Context))");
        assert!(lines.iter().any(|l| l.starts_with("A-IfT\t")));
    }
}
