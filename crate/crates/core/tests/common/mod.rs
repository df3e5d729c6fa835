// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use schemeflow::{parse_program, FrontendOptions, LabeledProgram};

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/corpus")
}

/// `(file stem, source)` for every corpus program, sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "scm"))
        .map(|p| {
            let name = p.file_stem().unwrap().to_string_lossy().into_owned();
            (name, fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

pub fn corpus_source(stem: &str) -> String {
    fs::read_to_string(corpus_dir().join(format!("{stem}.scm"))).unwrap()
}

pub fn parse(src: &str) -> LabeledProgram {
    parse_program(src, &FrontendOptions::default()).unwrap_or_else(|e| panic!("{e}\n{src}"))
}

/// Skeleton of a random program. Variables are indices into whatever is in
/// scope when rendered, so every generated program is closed.
#[derive(Clone, Debug)]
pub enum Shape {
    Num(i8),
    Bool(bool),
    Var(u8),
    Lambda(u8, Box<Shape>),
    Call(Box<Shape>, Vec<Shape>),
    If(Box<Shape>, Box<Shape>, Box<Shape>),
    Let(Vec<Shape>, Box<Shape>),
    Set(u8, Box<Shape>),
    Prim(u8, Box<Shape>, Box<Shape>),
    Callcc(Box<Shape>),
}

const OPS: [&str; 5] = ["+", "-", "*", "=", "<"];

pub fn shape() -> impl Strategy<Value = Shape> {
    let leaf = prop_oneof![
        (-3i8..4).prop_map(Shape::Num),
        any::<bool>().prop_map(Shape::Bool),
        any::<u8>().prop_map(Shape::Var),
        any::<u8>().prop_map(Shape::Var),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        let boxed = inner.clone();
        let b = move || boxed.clone().prop_map(Box::new);
        prop_oneof![
            (1u8..3, b()).prop_map(|(n, body)| Shape::Lambda(n, body)),
            (b(), prop::collection::vec(inner.clone(), 1..3)).prop_map(|(f, a)| Shape::Call(f, a)),
            (b(), b(), b()).prop_map(|(g, t, f)| Shape::If(g, t, f)),
            (prop::collection::vec(inner.clone(), 1..3), b()).prop_map(|(bs, body)| Shape::Let(bs, body)),
            (any::<u8>(), b()).prop_map(|(x, e)| Shape::Set(x, e)),
            (0u8..5, b(), b()).prop_map(|(op, l, r)| Shape::Prim(op, l, r)),
            b().prop_map(Shape::Callcc),
        ]
    })
}

struct Renderer {
    scope: Vec<String>,
    fresh: usize,
}

impl Renderer {
    fn name(&mut self) -> String {
        self.fresh += 1;
        // A small pool, so shadowing happens; consecutive names never clash.
        format!("v{}", self.fresh % 5)
    }

    fn pick(&self, i: u8) -> Option<String> {
        (!self.scope.is_empty()).then(|| self.scope[i as usize % self.scope.len()].clone())
    }

    fn render(&mut self, s: &Shape) -> String {
        match s {
            Shape::Num(n) => n.to_string(),
            Shape::Bool(b) => if *b { "#t" } else { "#f" }.to_string(),
            Shape::Var(i) => self.pick(*i).unwrap_or_else(|| "0".into()),
            Shape::Lambda(n, body) => {
                let params: Vec<String> = (0..*n).map(|_| self.name()).collect();
                let depth = self.scope.len();
                self.scope.extend(params.iter().cloned());
                let body = self.render(body);
                self.scope.truncate(depth);
                format!("(lambda ({}) {body})", params.join(" "))
            }
            Shape::Call(f, args) => {
                let mut parts = vec![self.render(f)];
                parts.extend(args.iter().map(|a| self.render(a)));
                format!("({})", parts.join(" "))
            }
            Shape::If(g, t, f) => format!("(if {} {} {})", self.render(g), self.render(t), self.render(f)),
            Shape::Let(binds, body) => {
                let mut rendered: Vec<(String, String)> = Vec::new();
                for b in binds {
                    let e = self.render(b);
                    let mut n = self.name();
                    while rendered.iter().any(|(m, _)| *m == n) {
                        n = self.name();
                    }
                    rendered.push((n, e));
                }
                let depth = self.scope.len();
                self.scope.extend(rendered.iter().map(|(n, _)| n.clone()));
                let body = self.render(body);
                self.scope.truncate(depth);
                let bs: Vec<String> = rendered.iter().map(|(n, e)| format!("({n} {e})")).collect();
                format!("(let ({}) {body})", bs.join(" "))
            }
            Shape::Set(i, e) => match self.pick(*i) {
                Some(x) => format!("(set! {x} {})", self.render(e)),
                None => self.render(e),
            },
            Shape::Prim(op, l, r) => format!("({} {} {})", OPS[*op as usize], self.render(l), self.render(r)),
            Shape::Callcc(e) => format!("(call/cc {})", self.render(e)),
        }
    }
}

pub fn render(s: &Shape) -> String {
    Renderer {
        scope: Vec::new(),
        fresh: 0,
    }
    .render(s)
}

pub fn program() -> impl Strategy<Value = String> {
    shape().prop_map(|s| render(&s))
}
