// SPDX-License-Identifier: Apache-2.0

//! Free variables computed directly over the syntax tree.
//!
//! The scoping follows the freevar rules of the analysis exactly, including
//! their quirks:
//! - a lambda keeps a body variable unless *every* parameter equals it, so
//!   with two distinct parameters both count as free, and a parameterless
//!   lambda has no free variables at all;
//! - a let binding name is removed only from its own binding expression; the
//!   let body contributes all of its free variables;
//! - the target of `set!` is not itself a free occurrence.

use std::collections::BTreeSet;

use super::program::{LabeledProgram, Node};
use crate::model::Label;

pub fn syntactic_free_vars(p: &LabeledProgram, e: Label) -> BTreeSet<String> {
    match p.node(e) {
        Node::Var { name } => BTreeSet::from([name.clone()]),
        Node::Num(_)
        | Node::Bool(_)
        | Node::Params { .. }
        | Node::PrimOp { .. }
        | Node::Quote { .. }
        | Node::Datum { .. } => BTreeSet::new(),
        Node::Lambda { params, body } => {
            let Node::Params { names } = p.node(*params) else {
                return BTreeSet::new();
            };
            syntactic_free_vars(p, *body)
                .into_iter()
                .filter(|x| names.iter().any(|v| v != x))
                .collect()
        }
        Node::Bindings { binds } => binds
            .iter()
            .flat_map(|(a, b)| {
                syntactic_free_vars(p, *b)
                    .into_iter()
                    .filter(move |x| x != a)
            })
            .collect(),
        Node::PrimCall { args, .. } => syntactic_free_vars(p, *args),
        Node::SetBang { expr, .. } => syntactic_free_vars(p, *expr),
        node @ (Node::Call { .. }
        | Node::Args { .. }
        | Node::If { .. }
        | Node::Callcc { .. }
        | Node::Let { .. }) => node
            .children()
            .into_iter()
            .flat_map(|c| syntactic_free_vars(p, c))
            .collect(),
    }
}

/// Free variables of every label, computed bottom-up in one pass.
pub fn all_free_vars(p: &LabeledProgram) -> Vec<BTreeSet<String>> {
    let mut out: Vec<BTreeSet<String>> = vec![BTreeSet::new(); p.len()];
    // Children always carry larger labels than their parent.
    for label in p.labels().collect::<Vec<_>>().into_iter().rev() {
        let fv = match p.node(label) {
            Node::Var { name } => BTreeSet::from([name.clone()]),
            Node::Lambda { params, body } => match p.node(*params) {
                Node::Params { names } => out[body.index()]
                    .iter()
                    .filter(|x| names.iter().any(|v| v != *x))
                    .cloned()
                    .collect(),
                _ => BTreeSet::new(),
            },
            Node::Bindings { binds } => binds
                .iter()
                .flat_map(|(a, b)| out[b.index()].iter().filter(move |x| *x != a).cloned())
                .collect(),
            Node::PrimCall { args, .. } => out[args.index()].clone(),
            Node::SetBang { expr, .. } => out[expr.index()].clone(),
            node @ (Node::Call { .. }
            | Node::Args { .. }
            | Node::If { .. }
            | Node::Callcc { .. }
            | Node::Let { .. }) => node
                .children()
                .iter()
                .flat_map(|c| out[c.index()].iter().cloned())
                .collect(),
            _ => BTreeSet::new(),
        };
        out[label.index()] = fv;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, FrontendOptions};

    fn fv(text: &str) -> Vec<String> {
        let p = parse_program(text, &FrontendOptions::default()).unwrap();
        let direct = syntactic_free_vars(&p, p.root);
        assert_eq!(all_free_vars(&p)[p.root.index()], direct);
        direct.into_iter().collect()
    }

    #[test]
    fn examples() {
        assert_eq!(fv("x"), vec!["x"]);
        assert!(fv("(lambda (x) x)").is_empty());
        assert_eq!(fv("(lambda (w) (w z z))"), vec!["z"]);
    }

    #[test]
    fn quirks_of_the_rule_scoping() {
        // Two distinct parameters: each is "free" through the other.
        assert_eq!(fv("(lambda (x y) (+ x y))"), vec!["x", "y"]);
        // Let body variables are not removed.
        assert_eq!(fv("(let ((a 1)) a)"), vec!["a"]);
        // Own binding name is removed from the binding expression.
        assert_eq!(fv("(lambda (g) (let ((a (g 1)) (b a)) b))"), vec!["a", "b"]);
        // set! target is not a free occurrence.
        assert!(fv("(set! q 1)").is_empty());
        assert!(fv("(lambda () z)").is_empty());
    }
}
