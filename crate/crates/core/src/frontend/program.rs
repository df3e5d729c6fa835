// SPDX-License-Identifier: Apache-2.0

//! Labeling and validation of the supported Scheme subset.
//!
//! Labels are assigned in pre-order: a form gets its label before its
//! children. Auxiliary nodes (parameter lists, argument lists, binding lists
//! and primitive operators) get labels too, since the fact relations refer to
//! them by id.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use thiserror::Error;

use super::reader::{Pos, SExpr, SExprKind};
use crate::model::Label;

pub const DEFAULT_PRIM_OPS: [&str; 8] = ["+", "-", "*", "=", "<", "cons", "and", "or"];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrontendOptions {
    pub prim_ops: BTreeSet<String>,
    pub allow_quote: bool,
}

impl Default for FrontendOptions {
    fn default() -> Self {
        FrontendOptions {
            prim_ops: DEFAULT_PRIM_OPS.iter().map(|s| s.to_string()).collect(),
            allow_quote: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Var { name: String },
    Num(i64),
    Bool(bool),
    Lambda { params: Label, body: Label },
    Params { names: Vec<String> },
    If { guard: Label, then_branch: Label, else_branch: Label },
    SetBang { var: String, expr: Label },
    Callcc { expr: Label },
    Let { bindings: Label, body: Label },
    Bindings { binds: Vec<(String, Label)> },
    PrimCall { op: Label, args: Label },
    PrimOp { name: String },
    Call { func: Label, args: Label },
    Args { items: Vec<Label> },
    Quote { datum: Label },
    Datum { text: String },
}

impl Node {
    /// Child labels in label order.
    pub fn children(&self) -> Vec<Label> {
        match self {
            Node::Var { .. }
            | Node::Num(_)
            | Node::Bool(_)
            | Node::Params { .. }
            | Node::PrimOp { .. }
            | Node::Datum { .. } => vec![],
            Node::Lambda { params, body } => vec![*params, *body],
            Node::If {
                guard,
                then_branch,
                else_branch,
            } => vec![*guard, *then_branch, *else_branch],
            Node::SetBang { expr, .. } => vec![*expr],
            Node::Callcc { expr } => vec![*expr],
            Node::Let { bindings, body } => vec![*bindings, *body],
            Node::Bindings { binds } => binds.iter().map(|(_, e)| *e).collect(),
            Node::PrimCall { op, args } => vec![*op, *args],
            Node::Call { func, args } => vec![*func, *args],
            Node::Args { items } => items.clone(),
            Node::Quote { datum } => vec![*datum],
        }
    }

    pub fn is_atomic(&self) -> bool {
        matches!(
            self,
            Node::Var { .. } | Node::Num(_) | Node::Bool(_) | Node::Lambda { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledProgram {
    pub root: Label,
    nodes: Vec<Node>,
    positions: Vec<Pos>,
    /// Unique variable name to the name written in the source.
    original_names: BTreeMap<String, String>,
}

impl LabeledProgram {
    pub fn node(&self, label: Label) -> &Node {
        &self.nodes[label.index()]
    }

    pub fn pos(&self, label: Label) -> Pos {
        self.positions[label.index()]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.nodes.len() as u32).map(Label)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (Label, &Node)> + '_ {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (Label(i as u32), n))
    }

    /// The source spelling of a (possibly renamed) variable.
    pub fn original_name<'a>(&'a self, name: &'a str) -> &'a str {
        self.original_names
            .get(name)
            .map(String::as_str)
            .unwrap_or(name)
    }

    pub fn lambda_params(&self, lam: Label) -> Option<&[String]> {
        match self.node(lam) {
            Node::Lambda { params, .. } => match self.node(*params) {
                Node::Params { names } => Some(names),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn lambda_body(&self, lam: Label) -> Option<Label> {
        match self.node(lam) {
            Node::Lambda { body, .. } => Some(*body),
            _ => None,
        }
    }

    pub fn arg_items(&self, args: Label) -> &[Label] {
        match self.node(args) {
            Node::Args { items } => items,
            _ => &[],
        }
    }

    /// Variable binders (lambda parameters and let bindings) in label order.
    pub fn binders(&self) -> Vec<&str> {
        let mut out = Vec::new();
        for node in &self.nodes {
            match node {
                Node::Params { names } => out.extend(names.iter().map(String::as_str)),
                Node::Bindings { binds } => out.extend(binds.iter().map(|(x, _)| x.as_str())),
                _ => {}
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValidationRule {
    SingleTopLevelForm,
    EmptyApplication,
    NullaryCall,
    LetRequiresBinding,
    BinaryPrimitive,
    DuplicateParameter,
    DuplicateBinding,
    SetTarget,
    QuoteRejected,
    MalformedForm,
}

impl ValidationRule {
    pub fn name(self) -> &'static str {
        match self {
            ValidationRule::SingleTopLevelForm => "single-top-level-form",
            ValidationRule::EmptyApplication => "empty-application",
            ValidationRule::NullaryCall => "nullary-call",
            ValidationRule::LetRequiresBinding => "let-requires-binding",
            ValidationRule::BinaryPrimitive => "binary-primitive",
            ValidationRule::DuplicateParameter => "duplicate-parameter",
            ValidationRule::DuplicateBinding => "duplicate-binding",
            ValidationRule::SetTarget => "set-target",
            ValidationRule::QuoteRejected => "quote-rejected",
            ValidationRule::MalformedForm => "malformed-form",
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{pos}: [{}] {message}", rule.name())]
pub struct ValidationError {
    pub pos: Pos,
    pub rule: ValidationRule,
    pub message: String,
}

struct Labeler<'o> {
    opts: &'o FrontendOptions,
    nodes: Vec<Option<Node>>,
    positions: Vec<Pos>,
    /// Lexically bound names, innermost last; used only to decide whether a
    /// primitive operator name is shadowed.
    scope: Vec<String>,
}

fn invalid(pos: Pos, rule: ValidationRule, message: impl Into<String>) -> ValidationError {
    ValidationError {
        pos,
        rule,
        message: message.into(),
    }
}

impl<'o> Labeler<'o> {
    fn reserve(&mut self, pos: Pos) -> Label {
        let label = Label(self.nodes.len() as u32);
        self.nodes.push(None);
        self.positions.push(pos);
        label
    }

    fn fill(&mut self, label: Label, node: Node) {
        self.nodes[label.index()] = Some(node);
    }

    fn leaf(&mut self, pos: Pos, node: Node) -> Label {
        let label = self.reserve(pos);
        self.fill(label, node);
        label
    }

    fn is_bound(&self, name: &str) -> bool {
        self.scope.iter().any(|s| s == name)
    }

    fn expr(&mut self, s: &SExpr) -> Result<Label, ValidationError> {
        match &s.kind {
            SExprKind::Ident(name) => Ok(self.leaf(s.pos, Node::Var { name: name.clone() })),
            SExprKind::Int(n) => Ok(self.leaf(s.pos, Node::Num(*n))),
            SExprKind::Bool(b) => Ok(self.leaf(s.pos, Node::Bool(*b))),
            SExprKind::List(items) => {
                let Some((head, rest)) = items.split_first() else {
                    return Err(invalid(
                        s.pos,
                        ValidationRule::EmptyApplication,
                        "empty application '()'",
                    ));
                };
                match head.ident() {
                    Some("lambda") => self.lambda(s, rest),
                    Some("if") => self.if_form(s, rest),
                    Some("set!") => self.set_form(s, rest),
                    Some("call/cc") | Some("call-with-current-continuation") => {
                        self.callcc(s, rest)
                    }
                    Some("let") => self.let_form(s, rest),
                    Some("quote") => self.quote(s, rest),
                    Some(op) if self.opts.prim_ops.contains(op) && !self.is_bound(op) => {
                        self.prim_call(s, head, rest)
                    }
                    _ => self.call(s, head, rest),
                }
            }
        }
    }

    fn lambda(&mut self, s: &SExpr, rest: &[SExpr]) -> Result<Label, ValidationError> {
        let [params, body] = rest else {
            return Err(invalid(
                s.pos,
                ValidationRule::MalformedForm,
                "lambda expects a parameter list and one body expression",
            ));
        };
        let Some(param_forms) = params.list() else {
            return Err(invalid(
                params.pos,
                ValidationRule::MalformedForm,
                "lambda parameters must be a list (varargs are not supported)",
            ));
        };
        let mut names = Vec::with_capacity(param_forms.len());
        for p in param_forms {
            let Some(name) = p.ident() else {
                return Err(invalid(
                    p.pos,
                    ValidationRule::MalformedForm,
                    format!("lambda parameter '{p}' is not an identifier"),
                ));
            };
            if names.iter().any(|n| n == name) {
                return Err(invalid(
                    p.pos,
                    ValidationRule::DuplicateParameter,
                    format!("duplicate parameter '{name}'"),
                ));
            }
            names.push(name.to_string());
        }
        let label = self.reserve(s.pos);
        let params_label = self.leaf(params.pos, Node::Params { names: names.clone() });
        let depth = self.scope.len();
        self.scope.extend(names);
        let body = self.expr(body);
        self.scope.truncate(depth);
        let body = body?;
        self.fill(
            label,
            Node::Lambda {
                params: params_label,
                body,
            },
        );
        Ok(label)
    }

    fn if_form(&mut self, s: &SExpr, rest: &[SExpr]) -> Result<Label, ValidationError> {
        let [g, t, f] = rest else {
            return Err(invalid(
                s.pos,
                ValidationRule::MalformedForm,
                "if expects exactly a guard, a then branch and an else branch",
            ));
        };
        let label = self.reserve(s.pos);
        let guard = self.expr(g)?;
        let then_branch = self.expr(t)?;
        let else_branch = self.expr(f)?;
        self.fill(
            label,
            Node::If {
                guard,
                then_branch,
                else_branch,
            },
        );
        Ok(label)
    }

    fn set_form(&mut self, s: &SExpr, rest: &[SExpr]) -> Result<Label, ValidationError> {
        let [target, value] = rest else {
            return Err(invalid(
                s.pos,
                ValidationRule::MalformedForm,
                "set! expects a variable and one expression",
            ));
        };
        let Some(var) = target.ident() else {
            return Err(invalid(
                target.pos,
                ValidationRule::SetTarget,
                format!("set! target '{target}' is not an identifier"),
            ));
        };
        let label = self.reserve(s.pos);
        let expr = self.expr(value)?;
        self.fill(
            label,
            Node::SetBang {
                var: var.to_string(),
                expr,
            },
        );
        Ok(label)
    }

    fn callcc(&mut self, s: &SExpr, rest: &[SExpr]) -> Result<Label, ValidationError> {
        let [e] = rest else {
            return Err(invalid(
                s.pos,
                ValidationRule::MalformedForm,
                "call/cc expects exactly one expression",
            ));
        };
        let label = self.reserve(s.pos);
        let expr = self.expr(e)?;
        self.fill(label, Node::Callcc { expr });
        Ok(label)
    }

    fn let_form(&mut self, s: &SExpr, rest: &[SExpr]) -> Result<Label, ValidationError> {
        let [binds, body] = rest else {
            return Err(invalid(
                s.pos,
                ValidationRule::MalformedForm,
                "let expects a binding list and one body expression",
            ));
        };
        let Some(bind_forms) = binds.list() else {
            return Err(invalid(
                binds.pos,
                ValidationRule::MalformedForm,
                "let bindings must be a list",
            ));
        };
        if bind_forms.is_empty() {
            return Err(invalid(
                binds.pos,
                ValidationRule::LetRequiresBinding,
                "let requires at least one binding",
            ));
        }
        let mut pairs = Vec::with_capacity(bind_forms.len());
        for b in bind_forms {
            let name = match b.list() {
                Some([name, value]) => name.ident().map(|n| (n, value)),
                _ => None,
            };
            let Some((name, value)) = name else {
                return Err(invalid(
                    b.pos,
                    ValidationRule::MalformedForm,
                    format!("malformed let binding '{b}'"),
                ));
            };
            if pairs.iter().any(|(n, _): &(&str, &SExpr)| *n == name) {
                return Err(invalid(
                    b.pos,
                    ValidationRule::DuplicateBinding,
                    format!("duplicate let binding '{name}'"),
                ));
            }
            pairs.push((name, value));
        }
        let label = self.reserve(s.pos);
        let binds_label = self.reserve(binds.pos);
        let mut bound = Vec::with_capacity(pairs.len());
        for (name, value) in &pairs {
            bound.push((name.to_string(), self.expr(value)?));
        }
        let depth = self.scope.len();
        self.scope.extend(pairs.iter().map(|(n, _)| n.to_string()));
        let body = self.expr(body);
        self.scope.truncate(depth);
        let body = body?;
        self.fill(binds_label, Node::Bindings { binds: bound });
        self.fill(
            label,
            Node::Let {
                bindings: binds_label,
                body,
            },
        );
        Ok(label)
    }

    fn quote(&mut self, s: &SExpr, rest: &[SExpr]) -> Result<Label, ValidationError> {
        if !self.opts.allow_quote {
            return Err(invalid(
                s.pos,
                ValidationRule::QuoteRejected,
                "quote has no analysis semantics (enable quote facts explicitly to keep it)",
            ));
        }
        let [datum] = rest else {
            return Err(invalid(
                s.pos,
                ValidationRule::MalformedForm,
                "quote expects exactly one datum",
            ));
        };
        let label = self.reserve(s.pos);
        let datum = self.leaf(
            datum.pos,
            Node::Datum {
                text: datum.to_string(),
            },
        );
        self.fill(label, Node::Quote { datum });
        Ok(label)
    }

    fn prim_call(
        &mut self,
        s: &SExpr,
        head: &SExpr,
        rest: &[SExpr],
    ) -> Result<Label, ValidationError> {
        let name = head.ident().unwrap_or_default().to_string();
        if rest.len() != 2 {
            return Err(invalid(
                s.pos,
                ValidationRule::BinaryPrimitive,
                format!(
                    "primitive '{name}' takes exactly 2 arguments, got {}",
                    rest.len()
                ),
            ));
        }
        let label = self.reserve(s.pos);
        let op = self.leaf(head.pos, Node::PrimOp { name });
        let args = self.args(s.pos, rest)?;
        self.fill(label, Node::PrimCall { op, args });
        Ok(label)
    }

    fn call(&mut self, s: &SExpr, head: &SExpr, rest: &[SExpr]) -> Result<Label, ValidationError> {
        if rest.is_empty() {
            return Err(invalid(
                s.pos,
                ValidationRule::NullaryCall,
                format!("call '{s}' has no arguments"),
            ));
        }
        let label = self.reserve(s.pos);
        let func = self.expr(head)?;
        let args = self.args(s.pos, rest)?;
        self.fill(label, Node::Call { func, args });
        Ok(label)
    }

    fn args(&mut self, pos: Pos, rest: &[SExpr]) -> Result<Label, ValidationError> {
        let label = self.reserve(pos);
        let mut items = Vec::with_capacity(rest.len());
        for a in rest {
            items.push(self.expr(a)?);
        }
        self.fill(label, Node::Args { items });
        Ok(label)
    }
}

/// Labels the single top-level form and makes every binder's name unique.
pub fn label_program(
    forms: &[SExpr],
    opts: &FrontendOptions,
) -> Result<LabeledProgram, ValidationError> {
    let form = match forms {
        [form] => form,
        [] => {
            return Err(invalid(
                Pos::START,
                ValidationRule::SingleTopLevelForm,
                "expected one top-level expression, found none",
            ))
        }
        [_, second, ..] => {
            return Err(invalid(
                second.pos,
                ValidationRule::SingleTopLevelForm,
                format!("expected one top-level expression, found {}", forms.len()),
            ))
        }
    };
    let mut labeler = Labeler {
        opts,
        nodes: Vec::new(),
        positions: Vec::new(),
        scope: Vec::new(),
    };
    let root = labeler.expr(form)?;
    let nodes = labeler
        .nodes
        .into_iter()
        .map(|n| n.expect("every reserved label is filled"))
        .collect();
    let mut program = LabeledProgram {
        root,
        nodes,
        positions: labeler.positions,
        original_names: BTreeMap::new(),
    };
    rename_binders(&mut program);
    Ok(program)
}

/// Alpha-renames so that no two binders, and no binder and free variable,
/// share a name. The first binder of a name keeps it unless the name also
/// occurs free; later ones become `name~k`.
fn rename_binders(p: &mut LabeledProgram) {
    let mut all_names: HashSet<String> = HashSet::new();
    for node in &p.nodes {
        match node {
            Node::Var { name } | Node::SetBang { var: name, .. } => {
                all_names.insert(name.clone());
            }
            Node::Params { names } => all_names.extend(names.iter().cloned()),
            Node::Bindings { binds } => all_names.extend(binds.iter().map(|(x, _)| x.clone())),
            _ => {}
        }
    }
    let mut taken: HashSet<String> = HashSet::new();
    collect_free(p, p.root, &mut Vec::new(), &mut taken);

    let mut renamer = Renamer { all_names, taken };
    renamer.walk(p, p.root, &mut Vec::new());
}

fn lookup<'a>(scope: &'a [(String, String)], name: &str) -> Option<&'a str> {
    scope
        .iter()
        .rev()
        .find(|(orig, _)| orig == name)
        .map(|(_, unique)| unique.as_str())
}

fn collect_free(p: &LabeledProgram, e: Label, scope: &mut Vec<String>, out: &mut HashSet<String>) {
    match p.node(e).clone() {
        Node::Var { name } => {
            if !scope.contains(&name) {
                out.insert(name);
            }
        }
        Node::SetBang { var, expr } => {
            if !scope.contains(&var) {
                out.insert(var);
            }
            collect_free(p, expr, scope, out);
        }
        Node::Lambda { params, body } => {
            let depth = scope.len();
            if let Node::Params { names } = p.node(params) {
                scope.extend(names.iter().cloned());
            }
            collect_free(p, body, scope, out);
            scope.truncate(depth);
        }
        Node::Let { bindings, body } => {
            let depth = scope.len();
            if let Node::Bindings { binds } = p.node(bindings) {
                for (_, b) in binds {
                    collect_free(p, *b, scope, out);
                }
                scope.extend(binds.iter().map(|(x, _)| x.clone()));
            }
            collect_free(p, body, scope, out);
            scope.truncate(depth);
        }
        node => {
            for child in node.children() {
                collect_free(p, child, scope, out);
            }
        }
    }
}

struct Renamer {
    all_names: HashSet<String>,
    taken: HashSet<String>,
}

impl Renamer {
    fn fresh(&mut self, name: &str) -> String {
        if self.taken.insert(name.to_string()) {
            return name.to_string();
        }
        let mut k = 1;
        loop {
            let candidate = format!("{name}~{k}");
            if !self.all_names.contains(&candidate) && self.taken.insert(candidate.clone()) {
                return candidate;
            }
            k += 1;
        }
    }

    fn walk(&mut self, p: &mut LabeledProgram, e: Label, scope: &mut Vec<(String, String)>) {
        match p.nodes[e.index()].clone() {
            Node::Var { name } => {
                if let Some(unique) = lookup(scope, &name) {
                    p.nodes[e.index()] = Node::Var {
                        name: unique.to_string(),
                    };
                }
            }
            Node::SetBang { var, expr } => {
                if let Some(unique) = lookup(scope, &var) {
                    p.nodes[e.index()] = Node::SetBang {
                        var: unique.to_string(),
                        expr,
                    };
                }
                self.walk(p, expr, scope);
            }
            Node::Lambda { params, body } => {
                let Node::Params { names } = p.nodes[params.index()].clone() else {
                    unreachable!("lambda params node")
                };
                let unique: Vec<String> = names.iter().map(|n| self.fresh(n)).collect();
                self.record(p, &names, &unique);
                p.nodes[params.index()] = Node::Params {
                    names: unique.clone(),
                };
                let depth = scope.len();
                scope.extend(names.into_iter().zip(unique));
                self.walk(p, body, scope);
                scope.truncate(depth);
            }
            Node::Let { bindings, body } => {
                let Node::Bindings { binds } = p.nodes[bindings.index()].clone() else {
                    unreachable!("let bindings node")
                };
                for (_, b) in &binds {
                    self.walk(p, *b, scope);
                }
                let names: Vec<String> = binds.iter().map(|(x, _)| x.clone()).collect();
                let unique: Vec<String> = names.iter().map(|n| self.fresh(n)).collect();
                self.record(p, &names, &unique);
                p.nodes[bindings.index()] = Node::Bindings {
                    binds: unique
                        .iter()
                        .cloned()
                        .zip(binds.iter().map(|(_, b)| *b))
                        .collect(),
                };
                let depth = scope.len();
                scope.extend(names.into_iter().zip(unique));
                self.walk(p, body, scope);
                scope.truncate(depth);
            }
            node => {
                for child in node.children() {
                    self.walk(p, child, scope);
                }
            }
        }
    }

    fn record(&mut self, p: &mut LabeledProgram, names: &[String], unique: &[String]) {
        for (orig, new) in names.iter().zip(unique) {
            if orig != new {
                p.original_names.insert(new.clone(), orig.clone());
            }
        }
    }
}
