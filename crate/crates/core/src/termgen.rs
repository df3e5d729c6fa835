// SPDX-License-Identifier: Apache-2.0

//! Worst-case program families for precision and complexity experiments.
//!
//! `gen_mcfa_worst` emits
//!
//! ```text
//! ((lambda (f) (let ((m<N-1> (f <N-1>)) ... (m0 (f 0))) m0))
//!  (lambda (z) PAD_p[BODY_K]))
//! ```
//!
//! `BODY_K` is `(+ z (+ z ... (+ z 0)))` with K additions (just `z` for
//! K = 0). `PAD_0[b]` is `b` and `PAD_{j+1}[b]` is
//! `((lambda (x<j+1>) PAD_j[b]) (lambda (x) x))`: each layer is a call
//! entered with `z` free, so it pushes one frame and copies `z` into the new
//! context. After p layers the frame of the call `(f i)` survives only if
//! m > p; otherwise every `z` lands at one address.

use std::fmt::Write as _;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct GenSpec {
    /// Calls to `f`, each with a distinct constant.
    pub n_bindings: usize,
    /// Additions in the body.
    pub n_plus: usize,
    pub padding: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error("at least one binding is required")]
    NoBindings,
}

impl GenSpec {
    pub fn new(n_bindings: usize, n_plus: usize, padding: usize) -> Self {
        GenSpec {
            n_bindings,
            n_plus,
            padding,
        }
    }

    pub fn validate(&self) -> Result<(), GenError> {
        if self.n_bindings == 0 {
            return Err(GenError::NoBindings);
        }
        Ok(())
    }
}

/// The two-call term whose 1-CFA analysis blows up.
pub fn gen_vanhorn() -> String {
    "((lambda (f) (let ((m (f #t)) (n (f #f))) m)) \
     (lambda (z) ((lambda (x) x) (lambda (w) (w z z)))))"
        .to_string()
}

fn body(k: usize) -> String {
    if k == 0 {
        return "z".to_string();
    }
    let mut s = String::new();
    for _ in 0..k {
        s.push_str("(+ z ");
    }
    s.push('0');
    s.push_str(&")".repeat(k));
    s
}

fn pad(p: usize, inner: String) -> String {
    (1..=p).fold(inner, |acc, j| format!("((lambda (x{j}) {acc}) (lambda (x) x))"))
}

pub fn gen_mcfa_worst(spec: &GenSpec) -> Result<String, GenError> {
    spec.validate()?;
    let mut binds = String::new();
    for i in (0..spec.n_bindings).rev() {
        if !binds.is_empty() {
            binds.push(' ');
        }
        let _ = write!(binds, "(m{i} (f {i}))");
    }
    Ok(format!(
        "((lambda (f) (let ({binds}) m0)) (lambda (z) {}))",
        pad(spec.padding, body(spec.n_plus))
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, FrontendOptions, Node};

    #[test]
    fn vanhorn_text() {
        assert_eq!(
            gen_vanhorn(),
            "((lambda (f) (let ((m (f #t)) (n (f #f))) m)) (lambda (z) ((lambda (x) x) (lambda (w) (w z z)))))"
        );
        assert!(parse_program(&gen_vanhorn(), &FrontendOptions::default()).is_ok());
    }

    #[test]
    fn small_instances() {
        let t = gen_mcfa_worst(&GenSpec::new(2, 1, 0)).unwrap();
        assert_eq!(
            t,
            "((lambda (f) (let ((m1 (f 1)) (m0 (f 0))) m0)) (lambda (z) (+ z 0)))"
        );
        let p = parse_program(&t, &FrontendOptions::default()).unwrap();
        let count = |pred: &dyn Fn(&Node) -> bool| p.nodes().filter(|(_, n)| pred(n)).count();
        assert_eq!(count(&|n| matches!(n, Node::PrimCall { .. })), 1);
        // Two calls to f plus the outer application.
        assert_eq!(count(&|n| matches!(n, Node::Call { .. })), 3);

        assert_eq!(
            gen_mcfa_worst(&GenSpec::new(1, 2, 2)).unwrap(),
            "((lambda (f) (let ((m0 (f 0))) m0)) (lambda (z) \
             ((lambda (x2) ((lambda (x1) (+ z (+ z 0))) (lambda (x) x))) (lambda (x) x))))"
        );
        assert_eq!(gen_mcfa_worst(&GenSpec::new(0, 1, 0)), Err(GenError::NoBindings));
    }

    #[test]
    fn generated_terms_validate() {
        for n in 1..6 {
            for k in 0..4 {
                for pd in 0..3 {
                    let t = gen_mcfa_worst(&GenSpec::new(n, k, pd)).unwrap();
                    assert!(parse_program(&t, &FrontendOptions::default()).is_ok(), "{t}");
                }
            }
        }
    }
}
