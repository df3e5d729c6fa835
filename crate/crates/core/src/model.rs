// SPDX-License-Identifier: Apache-2.0

//! Interned analysis terms: labels, contexts, addresses, abstract values and
//! continuation frames, plus the allocators both evaluation paths share.
//!
//! Every term has one canonical S-expression rendering, e.g.
//! `(Context e7 e3)` or `(Closure e4 (Context e7))`. The empty context renders
//! as `(Context)`.

use std::fmt::{self, Write as _};

use indexmap::IndexSet;
use rustc_hash::FxBuildHasher;
use thiserror::Error;

use crate::frontend::reader::{read_sexprs, SExpr, SExprKind};

type Set<T> = IndexSet<T, FxBuildHasher>;

/// One source expression occurrence, rendered `e<N>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Label(pub u32);

impl Label {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn parse(s: &str) -> Option<Label> {
        let digits = s.strip_prefix('e')?;
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        if digits.len() > 1 && digits.starts_with('0') {
            return None;
        }
        digits.parse().ok().map(Label)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.0)
    }
}

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(u32);

        impl $name {
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

id_type!(Symbol);
id_type!(CtxId);
id_type!(ValueId);
id_type!(KontId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct VAddr {
    pub var: Symbol,
    pub ctx: CtxId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KAddr {
    pub expr: Label,
    pub ctx: CtxId,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum AbsValue {
    Number(i64),
    Bool(bool),
    Closure { lam: Label, ctx: CtxId },
    KontRef(KAddr),
    PrimVal { op: Symbol, left: ValueId, right: ValueId },
    /// Stands for any value cut off by widening.
    NumTop,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Kont {
    Mt,
    If {
        then_branch: Label,
        else_branch: Label,
        ctx: CtxId,
        next: KAddr,
    },
    Set {
        loc: VAddr,
        next: KAddr,
    },
    Callcc {
        ectx: CtxId,
        next: KAddr,
    },
    Let {
        addr: VAddr,
        body: Label,
        ctx: CtxId,
        next: KAddr,
    },
    Arg {
        args: Label,
        ctx: CtxId,
        ectx: CtxId,
        next: KAddr,
    },
    Fn {
        func: ValueId,
        pos: u32,
        ctx: CtxId,
        next: KAddr,
    },
    Prim1 {
        op: Symbol,
        operand: Label,
        ctx: CtxId,
        next: KAddr,
    },
    Prim2 {
        op: Symbol,
        left: ValueId,
        next: KAddr,
    },
}

impl Kont {
    pub fn next(&self) -> Option<KAddr> {
        match *self {
            Kont::Mt => None,
            Kont::If { next, .. }
            | Kont::Set { next, .. }
            | Kont::Callcc { next, .. }
            | Kont::Let { next, .. }
            | Kont::Arg { next, .. }
            | Kont::Fn { next, .. }
            | Kont::Prim1 { next, .. }
            | Kont::Prim2 { next, .. } => Some(next),
        }
    }
}

/// PrimVal nesting limit; `None` disables widening.
pub type WidenDepth = Option<usize>;

/// Hash-consing tables for every term kind.
///
/// Structurally equal terms get the same id, so id equality is term equality.
/// Ids from different interners are unrelated; compare across interners via
/// the canonical rendering.
#[derive(Clone, Debug)]
pub struct Interner {
    symbols: Set<Box<str>>,
    contexts: Set<Box<[Label]>>,
    values: Set<AbsValue>,
    konts: Set<Kont>,
}

impl Default for Interner {
    fn default() -> Self {
        Self::new()
    }
}

impl Interner {
    pub fn new() -> Self {
        let mut contexts = Set::default();
        contexts.insert(Box::from([]));
        Interner {
            symbols: Set::default(),
            contexts,
            values: Set::default(),
            konts: Set::default(),
        }
    }

    pub fn symbol(&mut self, name: &str) -> Symbol {
        if let Some(i) = self.symbols.get_index_of(name) {
            return Symbol(i as u32);
        }
        Symbol(self.symbols.insert_full(name.into()).0 as u32)
    }

    pub fn find_symbol(&self, name: &str) -> Option<Symbol> {
        self.symbols.get_index_of(name).map(|i| Symbol(i as u32))
    }

    pub fn name(&self, sym: Symbol) -> &str {
        &self.symbols[sym.index()]
    }

    pub fn empty_context(&self) -> CtxId {
        CtxId(0)
    }

    pub fn context(&mut self, frames: &[Label]) -> CtxId {
        if let Some(i) = self.contexts.get_index_of(frames) {
            return CtxId(i as u32);
        }
        CtxId(self.contexts.insert_full(frames.into()).0 as u32)
    }

    pub fn frames(&self, ctx: CtxId) -> &[Label] {
        &self.contexts[ctx.index()]
    }

    pub fn value(&mut self, value: AbsValue) -> ValueId {
        ValueId(self.values.insert_full(value).0 as u32)
    }

    pub fn value_data(&self, id: ValueId) -> &AbsValue {
        &self.values[id.index()]
    }

    pub fn kont(&mut self, kont: Kont) -> KontId {
        KontId(self.konts.insert_full(kont).0 as u32)
    }

    pub fn kont_data(&self, id: KontId) -> &Kont {
        &self.konts[id.index()]
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    pub fn value_count(&self) -> usize {
        self.values.len()
    }

    /// The context entered at `call` from `ctx`: the first `m` labels of
    /// `call` pushed onto `ctx`.
    pub fn make_context(&mut self, call: Label, ctx: CtxId, m: usize) -> CtxId {
        let frames = push_frame(call, self.frames(ctx), m);
        self.context(&frames)
    }

    /// PrimVal nesting depth: 0 for every non-PrimVal value.
    pub fn primval_depth(&self, v: ValueId) -> usize {
        match *self.value_data(v) {
            AbsValue::PrimVal { left, right, .. } => {
                1 + self.primval_depth(left).max(self.primval_depth(right))
            }
            _ => 0,
        }
    }

    /// Bounds PrimVal nesting at `depth`; below a PrimVal sitting at the
    /// limit, everything collapses to `NumTop`.
    pub fn widen_value(&mut self, v: ValueId, depth: WidenDepth) -> ValueId {
        match depth {
            None => v,
            Some(d) => self.widen_to(v, d.max(1)),
        }
    }

    fn widen_to(&mut self, v: ValueId, d: usize) -> ValueId {
        if self.primval_depth(v) <= d {
            return v;
        }
        let AbsValue::PrimVal { op, left, right } = *self.value_data(v) else {
            unreachable!("only PrimVal has positive depth")
        };
        let (left, right) = if d == 1 {
            let top = self.value(AbsValue::NumTop);
            (top, top)
        } else {
            (self.widen_to(left, d - 1), self.widen_to(right, d - 1))
        };
        self.value(AbsValue::PrimVal { op, left, right })
    }
}

/// The first `m` labels of `call` prepended to `frames`.
pub fn push_frame(call: Label, frames: &[Label], m: usize) -> Vec<Label> {
    std::iter::once(call)
        .chain(frames.iter().copied())
        .take(m)
        .collect()
}

pub fn alloc_v(var: Symbol, ctx: CtxId) -> VAddr {
    VAddr { var, ctx }
}

pub fn alloc_k(expr: Label, ctx: CtxId) -> KAddr {
    KAddr { expr, ctx }
}

// Canonical rendering.
impl Interner {
    pub fn write_context(&self, out: &mut String, ctx: CtxId) {
        out.push_str("(Context");
        for label in self.frames(ctx) {
            let _ = write!(out, " {label}");
        }
        out.push(')');
    }

    pub fn write_vaddr(&self, out: &mut String, a: VAddr) {
        let _ = write!(out, "(VAddr {} ", self.name(a.var));
        self.write_context(out, a.ctx);
        out.push(')');
    }

    pub fn write_kaddr(&self, out: &mut String, a: KAddr) {
        let _ = write!(out, "(KAddr {} ", a.expr);
        self.write_context(out, a.ctx);
        out.push(')');
    }

    pub fn write_value(&self, out: &mut String, v: ValueId) {
        match *self.value_data(v) {
            AbsValue::Number(n) => {
                let _ = write!(out, "(Number {n})");
            }
            AbsValue::Bool(b) => out.push_str(if b { "(Bool #t)" } else { "(Bool #f)" }),
            AbsValue::Closure { lam, ctx } => {
                let _ = write!(out, "(Closure {lam} ");
                self.write_context(out, ctx);
                out.push(')');
            }
            AbsValue::KontRef(ka) => {
                out.push_str("(KontRef ");
                self.write_kaddr(out, ka);
                out.push(')');
            }
            AbsValue::PrimVal { op, left, right } => {
                let _ = write!(out, "(PrimVal {} ", self.name(op));
                self.write_value(out, left);
                out.push(' ');
                self.write_value(out, right);
                out.push(')');
            }
            AbsValue::NumTop => out.push_str("(NumTop)"),
        }
    }

    pub fn write_kont(&self, out: &mut String, k: KontId) {
        match *self.kont_data(k) {
            Kont::Mt => out.push_str("(MT)"),
            Kont::If {
                then_branch,
                else_branch,
                ctx,
                next,
            } => {
                let _ = write!(out, "(If {then_branch} {else_branch} ");
                self.write_context(out, ctx);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
            Kont::Set { loc, next } => {
                out.push_str("(Set ");
                self.write_vaddr(out, loc);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
            Kont::Callcc { ectx, next } => {
                out.push_str("(Callcc ");
                self.write_context(out, ectx);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
            Kont::Let {
                addr,
                body,
                ctx,
                next,
            } => {
                out.push_str("(Let ");
                self.write_vaddr(out, addr);
                let _ = write!(out, " {body} ");
                self.write_context(out, ctx);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
            Kont::Arg {
                args,
                ctx,
                ectx,
                next,
            } => {
                let _ = write!(out, "(Arg {args} ");
                self.write_context(out, ctx);
                out.push(' ');
                self.write_context(out, ectx);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
            Kont::Fn {
                func,
                pos,
                ctx,
                next,
            } => {
                out.push_str("(Fn ");
                self.write_value(out, func);
                let _ = write!(out, " {pos} ");
                self.write_context(out, ctx);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
            Kont::Prim1 {
                op,
                operand,
                ctx,
                next,
            } => {
                let _ = write!(out, "(Prim1 {} {operand} ", self.name(op));
                self.write_context(out, ctx);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
            Kont::Prim2 { op, left, next } => {
                let _ = write!(out, "(Prim2 {} ", self.name(op));
                self.write_value(out, left);
                out.push(' ');
                self.write_kaddr(out, next);
                out.push(')');
            }
        }
    }

    pub fn render_context(&self, ctx: CtxId) -> String {
        let mut s = String::new();
        self.write_context(&mut s, ctx);
        s
    }

    pub fn render_vaddr(&self, a: VAddr) -> String {
        let mut s = String::new();
        self.write_vaddr(&mut s, a);
        s
    }

    pub fn render_kaddr(&self, a: KAddr) -> String {
        let mut s = String::new();
        self.write_kaddr(&mut s, a);
        s
    }

    pub fn render_value(&self, v: ValueId) -> String {
        let mut s = String::new();
        self.write_value(&mut s, v);
        s
    }

    pub fn render_kont(&self, k: KontId) -> String {
        let mut s = String::new();
        self.write_kont(&mut s, k);
        s
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("malformed term '{text}': {reason}")]
pub struct TermParseError {
    pub text: String,
    pub reason: String,
}

fn term_error(s: &SExpr, reason: &str) -> TermParseError {
    TermParseError {
        text: s.to_string(),
        reason: reason.to_string(),
    }
}

fn parse_one(text: &str) -> Result<SExpr, TermParseError> {
    let mut forms = read_sexprs(text).map_err(|e| TermParseError {
        text: text.to_string(),
        reason: e.message,
    })?;
    if forms.len() != 1 {
        return Err(TermParseError {
            text: text.to_string(),
            reason: "expected exactly one term".into(),
        });
    }
    Ok(forms.pop().unwrap())
}

fn tagged<'s>(s: &'s SExpr, tag: &str, arity: usize) -> Result<&'s [SExpr], TermParseError> {
    let items = s.list().ok_or_else(|| term_error(s, "expected a list"))?;
    match items.split_first() {
        Some((head, rest)) if head.ident() == Some(tag) && rest.len() == arity => Ok(rest),
        _ => Err(term_error(s, &format!("expected ({tag} ...) with {arity} fields"))),
    }
}

fn label_of(s: &SExpr) -> Result<Label, TermParseError> {
    s.ident()
        .and_then(Label::parse)
        .ok_or_else(|| term_error(s, "expected a label"))
}

fn name_of(s: &SExpr) -> Result<&str, TermParseError> {
    s.ident().ok_or_else(|| term_error(s, "expected a name"))
}

fn int_of(s: &SExpr) -> Result<i64, TermParseError> {
    match s.kind {
        SExprKind::Int(n) => Ok(n),
        _ => Err(term_error(s, "expected an integer")),
    }
}

// Parsing from the canonical rendering.
impl Interner {
    pub fn parse_context(&mut self, text: &str) -> Result<CtxId, TermParseError> {
        let s = parse_one(text)?;
        self.context_from(&s)
    }

    pub fn parse_value(&mut self, text: &str) -> Result<ValueId, TermParseError> {
        let s = parse_one(text)?;
        self.value_from(&s)
    }

    pub fn parse_kont(&mut self, text: &str) -> Result<KontId, TermParseError> {
        let s = parse_one(text)?;
        self.kont_from(&s)
    }

    pub fn parse_vaddr(&mut self, text: &str) -> Result<VAddr, TermParseError> {
        let s = parse_one(text)?;
        self.vaddr_from(&s)
    }

    pub fn parse_kaddr(&mut self, text: &str) -> Result<KAddr, TermParseError> {
        let s = parse_one(text)?;
        self.kaddr_from(&s)
    }

    pub fn context_from(&mut self, s: &SExpr) -> Result<CtxId, TermParseError> {
        let items = s.list().ok_or_else(|| term_error(s, "expected a context"))?;
        match items.split_first() {
            Some((head, rest)) if head.ident() == Some("Context") => {
                let frames = rest.iter().map(label_of).collect::<Result<Vec<_>, _>>()?;
                Ok(self.context(&frames))
            }
            _ => Err(term_error(s, "expected (Context ...)")),
        }
    }

    pub fn vaddr_from(&mut self, s: &SExpr) -> Result<VAddr, TermParseError> {
        let f = tagged(s, "VAddr", 2)?;
        let var = self.symbol(name_of(&f[0])?);
        Ok(VAddr {
            var,
            ctx: self.context_from(&f[1])?,
        })
    }

    pub fn kaddr_from(&mut self, s: &SExpr) -> Result<KAddr, TermParseError> {
        let f = tagged(s, "KAddr", 2)?;
        Ok(KAddr {
            expr: label_of(&f[0])?,
            ctx: self.context_from(&f[1])?,
        })
    }

    pub fn value_from(&mut self, s: &SExpr) -> Result<ValueId, TermParseError> {
        let tag = s
            .list()
            .and_then(|items| items.first())
            .and_then(SExpr::ident)
            .ok_or_else(|| term_error(s, "expected a value"))?;
        let value = match tag {
            "Number" => AbsValue::Number(int_of(&tagged(s, "Number", 1)?[0])?),
            "Bool" => match tagged(s, "Bool", 1)?[0].kind {
                SExprKind::Bool(b) => AbsValue::Bool(b),
                _ => return Err(term_error(s, "expected #t or #f")),
            },
            "Closure" => {
                let f = tagged(s, "Closure", 2)?;
                AbsValue::Closure {
                    lam: label_of(&f[0])?,
                    ctx: self.context_from(&f[1])?,
                }
            }
            "KontRef" => AbsValue::KontRef(self.kaddr_from(&tagged(s, "KontRef", 1)?[0])?),
            "PrimVal" => {
                let f = tagged(s, "PrimVal", 3)?;
                let op = self.symbol(name_of(&f[0])?);
                AbsValue::PrimVal {
                    op,
                    left: self.value_from(&f[1])?,
                    right: self.value_from(&f[2])?,
                }
            }
            "NumTop" => {
                tagged(s, "NumTop", 0)?;
                AbsValue::NumTop
            }
            _ => return Err(term_error(s, "unknown value kind")),
        };
        Ok(self.value(value))
    }

    pub fn kont_from(&mut self, s: &SExpr) -> Result<KontId, TermParseError> {
        let tag = s
            .list()
            .and_then(|items| items.first())
            .and_then(SExpr::ident)
            .ok_or_else(|| term_error(s, "expected a continuation"))?;
        let kont = match tag {
            "MT" => {
                tagged(s, "MT", 0)?;
                Kont::Mt
            }
            "If" => {
                let f = tagged(s, "If", 4)?;
                Kont::If {
                    then_branch: label_of(&f[0])?,
                    else_branch: label_of(&f[1])?,
                    ctx: self.context_from(&f[2])?,
                    next: self.kaddr_from(&f[3])?,
                }
            }
            "Set" => {
                let f = tagged(s, "Set", 2)?;
                Kont::Set {
                    loc: self.vaddr_from(&f[0])?,
                    next: self.kaddr_from(&f[1])?,
                }
            }
            "Callcc" => {
                let f = tagged(s, "Callcc", 2)?;
                Kont::Callcc {
                    ectx: self.context_from(&f[0])?,
                    next: self.kaddr_from(&f[1])?,
                }
            }
            "Let" => {
                let f = tagged(s, "Let", 4)?;
                Kont::Let {
                    addr: self.vaddr_from(&f[0])?,
                    body: label_of(&f[1])?,
                    ctx: self.context_from(&f[2])?,
                    next: self.kaddr_from(&f[3])?,
                }
            }
            "Arg" => {
                let f = tagged(s, "Arg", 4)?;
                Kont::Arg {
                    args: label_of(&f[0])?,
                    ctx: self.context_from(&f[1])?,
                    ectx: self.context_from(&f[2])?,
                    next: self.kaddr_from(&f[3])?,
                }
            }
            "Fn" => {
                let f = tagged(s, "Fn", 4)?;
                let pos = u32::try_from(int_of(&f[1])?)
                    .map_err(|_| term_error(&f[1], "position out of range"))?;
                Kont::Fn {
                    func: self.value_from(&f[0])?,
                    pos,
                    ctx: self.context_from(&f[2])?,
                    next: self.kaddr_from(&f[3])?,
                }
            }
            "Prim1" => {
                let f = tagged(s, "Prim1", 4)?;
                let op = self.symbol(name_of(&f[0])?);
                Kont::Prim1 {
                    op,
                    operand: label_of(&f[1])?,
                    ctx: self.context_from(&f[2])?,
                    next: self.kaddr_from(&f[3])?,
                }
            }
            "Prim2" => {
                let f = tagged(s, "Prim2", 3)?;
                let op = self.symbol(name_of(&f[0])?);
                Kont::Prim2 {
                    op,
                    left: self.value_from(&f[1])?,
                    next: self.kaddr_from(&f[2])?,
                }
            }
            _ => return Err(term_error(s, "unknown continuation kind")),
        };
        Ok(self.kont(kont))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn e(n: u32) -> Label {
        Label(n)
    }

    #[test]
    fn make_context_examples() {
        let mut i = Interner::new();
        let empty = i.empty_context();
        let c = i.make_context(e(7), empty, 2);
        assert_eq!(i.frames(c), &[e(7)]);
        let c31 = i.context(&[e(3), e(1)]);
        let c = i.make_context(e(7), c31, 2);
        assert_eq!(i.frames(c), &[e(7), e(3)]);
        let c3 = i.context(&[e(3)]);
        assert_eq!(i.make_context(e(7), c3, 0), empty);
    }

    #[test]
    fn allocators_pair_their_inputs() {
        let mut i = Interner::new();
        let x = i.symbol("x");
        let z = i.symbol("z");
        let empty = i.empty_context();
        let c4 = i.context(&[e(4)]);
        assert_eq!(alloc_v(x, empty), VAddr { var: x, ctx: empty });
        assert_eq!(i.render_vaddr(alloc_v(z, c4)), "(VAddr z (Context e4))");
        assert_eq!(alloc_v(x, empty), alloc_v(i.symbol("x"), i.empty_context()));
        assert_eq!(i.render_kaddr(alloc_k(e(2), empty)), "(KAddr e2 (Context))");
        let c9 = i.context(&[e(9)]);
        assert_eq!(alloc_k(e(2), c9).ctx, c9);
        assert_ne!(alloc_k(e(2), c9), alloc_k(e(2), empty));
    }

    #[test]
    fn widen_examples() {
        let mut i = Interner::new();
        let plus = i.symbol("+");
        let n: Vec<ValueId> = (0..5).map(|k| i.value(AbsValue::Number(k))).collect();
        let t = i.value(AbsValue::Bool(true));
        assert_eq!(i.widen_value(t, Some(2)), t);
        let p12 = i.value(AbsValue::PrimVal { op: plus, left: n[1], right: n[2] });
        assert_eq!(i.widen_value(p12, Some(2)), p12);
        let p3 = i.value(AbsValue::PrimVal { op: plus, left: p12, right: n[3] });
        let p4 = i.value(AbsValue::PrimVal { op: plus, left: p3, right: n[4] });
        let w = i.widen_value(p4, Some(2));
        assert_eq!(
            i.render_value(w),
            "(PrimVal + (PrimVal + (NumTop) (NumTop)) (Number 4))"
        );
        assert_eq!(i.widen_value(w, Some(2)), w);
        assert_eq!(i.widen_value(p4, None), p4);
    }

    #[test]
    fn canonical_forms() {
        let mut i = Interner::new();
        let c7 = i.context(&[e(7)]);
        let clo = i.value(AbsValue::Closure { lam: e(4), ctx: c7 });
        assert_eq!(i.render_value(clo), "(Closure e4 (Context e7))");
        let c73 = i.context(&[e(7), e(3)]);
        assert_eq!(i.render_context(c73), "(Context e7 e3)");
        assert_eq!(i.render_context(i.empty_context()), "(Context)");
    }

    #[test]
    fn labels_parse_strictly() {
        assert_eq!(Label::parse("e12"), Some(Label(12)));
        assert_eq!(Label::parse("e"), None);
        assert_eq!(Label::parse("e01"), None);
        assert_eq!(Label::parse("x1"), None);
    }

    #[test]
    fn kont_round_trip() {
        let mut i = Interner::new();
        for text in [
            "(MT)",
            "(If e2 e3 (Context) (KAddr e0 (Context)))",
            "(Set (VAddr x (Context e1)) (KAddr e0 (Context)))",
            "(Callcc (Context e5) (KAddr e0 (Context)))",
            "(Let (VAddr a (Context e1)) e9 (Context e1) (KAddr e0 (Context)))",
            "(Arg e3 (Context) (Context e0) (KAddr e0 (Context)))",
            "(Fn (KontRef (KAddr e4 (Context))) 0 (Context e1) (KAddr e0 (Context)))",
            "(Prim1 + e6 (Context) (KAddr e0 (Context)))",
            "(Prim2 < (PrimVal + (Number -1) (NumTop)) (KAddr e0 (Context)))",
        ] {
            let k = i.parse_kont(text).unwrap();
            assert_eq!(i.render_kont(k), text);
        }
        assert!(i.parse_kont("(If e2)").is_err());
        assert!(i.parse_value("(Bool 1)").is_err());
    }

    fn arb_value() -> impl Strategy<Value = String> {
        let leaf = prop_oneof![
            (-50i64..50).prop_map(|n| format!("(Number {n})")),
            any::<bool>().prop_map(|b| format!("(Bool {})", if b { "#t" } else { "#f" })),
            (0u32..20, proptest::collection::vec(0u32..20, 0..3)).prop_map(|(l, fs)| {
                let frames: String = fs.iter().map(|f| format!(" e{f}")).collect();
                format!("(Closure e{l} (Context{frames}))")
            }),
            Just("(NumTop)".to_string()),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            (prop_oneof![Just("+"), Just("*"), Just("<")], inner.clone(), inner)
                .prop_map(|(op, a, b)| format!("(PrimVal {op} {a} {b})"))
        })
    }

    proptest! {
        #[test]
        fn make_context_is_bounded(m in 0usize..4, call in 0u32..50,
                                   frames in proptest::collection::vec(0u32..50, 0..4)) {
            let mut i = Interner::new();
            let frames: Vec<Label> = frames.into_iter().map(Label).take(m).collect();
            let ctx = i.context(&frames);
            let next = i.make_context(Label(call), ctx, m);
            prop_assert!(i.frames(next).len() <= m);
            prop_assert_eq!(i.frames(next).len(), m.min(1 + frames.len()));
            if m == 0 {
                prop_assert_eq!(next, i.empty_context());
            }
        }

        #[test]
        fn interning_matches_rendering(a in arb_value(), b in arb_value()) {
            let mut i = Interner::new();
            let va = i.parse_value(&a).unwrap();
            let vb = i.parse_value(&b).unwrap();
            prop_assert_eq!(i.render_value(va), a.clone());
            prop_assert_eq!(va == vb, a == b);
        }

        #[test]
        fn widening_is_idempotent_and_bounded(a in arb_value(), d in 1usize..4) {
            let mut i = Interner::new();
            let v = i.parse_value(&a).unwrap();
            let w = i.widen_value(v, Some(d));
            prop_assert!(i.primval_depth(w) <= d);
            prop_assert_eq!(i.widen_value(w, Some(d)), w);
            if i.primval_depth(v) <= d {
                prop_assert_eq!(w, v);
            }
        }
    }
}
