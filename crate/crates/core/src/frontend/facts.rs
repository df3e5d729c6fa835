// SPDX-License-Identifier: Apache-2.0

//! Input relations extracted from a labeled program, and their on-disk form:
//! one `<relation>.facts` file per relation, tab-separated, columns in
//! declaration order.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::program::{LabeledProgram, Node};
use crate::model::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CellKind {
    Label,
    Name,
    Int,
}

/// Input relation schemas, in declaration order.
pub const EDB_SCHEMA: &[(&str, &[CellKind])] = {
    use CellKind::*;
    &[
        ("top_exp", &[Label]),
        ("lambda", &[Label, Label, Label]),
        ("lambda_arg_list", &[Label, Int, Name]),
        ("prim", &[Label, Name]),
        ("prim_call", &[Label, Label, Label]),
        ("call", &[Label, Label, Label]),
        ("call_arg_list", &[Label, Int, Label]),
        ("var", &[Label, Name]),
        ("num", &[Label, Int]),
        ("bool", &[Label, Name]),
        ("quotation", &[Label, Label]),
        ("if", &[Label, Label, Label, Label]),
        ("setb", &[Label, Name, Label]),
        ("callcc", &[Label, Label]),
        ("let", &[Label, Label, Label]),
        ("let_list", &[Label, Name, Label]),
    ]
};

pub fn edb_kinds(relation: &str) -> Option<&'static [CellKind]> {
    EDB_SCHEMA
        .iter()
        .find(|(name, _)| *name == relation)
        .map(|(_, kinds)| *kinds)
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cell {
    Label(Label),
    Name(String),
    Int(i64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Label(l) => write!(f, "{l}"),
            Cell::Name(s) => f.write_str(s),
            Cell::Int(n) => write!(f, "{n}"),
        }
    }
}

pub type Fact = Vec<Cell>;

#[derive(Debug, Error)]
pub enum FactsError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{relation}.facts line {line}: {message}")]
    Malformed {
        relation: String,
        line: usize,
        message: String,
    },
}

/// The extensional database: one tuple list per input relation, in
/// `EDB_SCHEMA` order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edb {
    relations: Vec<Vec<Fact>>,
}

impl Default for Edb {
    fn default() -> Self {
        Edb {
            relations: vec![Vec::new(); EDB_SCHEMA.len()],
        }
    }
}

fn slot(relation: &str) -> usize {
    EDB_SCHEMA
        .iter()
        .position(|(name, _)| *name == relation)
        .unwrap_or_else(|| panic!("unknown input relation {relation}"))
}

impl Edb {
    pub fn get(&self, relation: &str) -> &[Fact] {
        &self.relations[slot(relation)]
    }

    pub fn push(&mut self, relation: &str, fact: Fact) {
        debug_assert_eq!(fact.len(), edb_kinds(relation).unwrap().len());
        self.relations[slot(relation)].push(fact);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &[Fact])> {
        EDB_SCHEMA
            .iter()
            .zip(&self.relations)
            .map(|((name, _), facts)| (*name, facts.as_slice()))
    }

    pub fn len(&self) -> usize {
        self.relations.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn render(&self, relation: &str) -> String {
        let mut out = String::new();
        for fact in self.get(relation) {
            let cells: Vec<String> = fact.iter().map(Cell::to_string).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }

    pub fn write_dir(&self, dir: &Path) -> Result<(), FactsError> {
        fs::create_dir_all(dir).map_err(|source| FactsError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        for (name, _) in EDB_SCHEMA {
            let path = dir.join(format!("{name}.facts"));
            fs::write(&path, self.render(name)).map_err(|source| FactsError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        Ok(())
    }

    /// Loads a fact directory; missing files read as empty relations.
    pub fn read_dir(dir: &Path) -> Result<Edb, FactsError> {
        let mut edb = Edb::default();
        for (name, kinds) in EDB_SCHEMA {
            let path = dir.join(format!("{name}.facts"));
            let text = match fs::read_to_string(&path) {
                Ok(text) => text,
                Err(e) if e.kind() == io::ErrorKind::NotFound => continue,
                Err(source) => {
                    return Err(FactsError::Io {
                        path: path.display().to_string(),
                        source,
                    })
                }
            };
            for (i, line) in text.lines().enumerate() {
                let fact = parse_line(line, kinds).map_err(|message| FactsError::Malformed {
                    relation: name.to_string(),
                    line: i + 1,
                    message,
                })?;
                edb.push(name, fact);
            }
        }
        Ok(edb)
    }
}

fn parse_line(line: &str, kinds: &[CellKind]) -> Result<Fact, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != kinds.len() {
        return Err(format!("expected {} columns, found {}", kinds.len(), cols.len()));
    }
    cols.iter()
        .zip(kinds)
        .map(|(col, kind)| match kind {
            CellKind::Label => Label::parse(col)
                .map(Cell::Label)
                .ok_or_else(|| format!("'{col}' is not a label")),
            CellKind::Int => col
                .parse()
                .map(Cell::Int)
                .map_err(|_| format!("'{col}' is not an integer")),
            CellKind::Name if col.is_empty() => Err("empty name".to_string()),
            CellKind::Name => Ok(Cell::Name(col.to_string())),
        })
        .collect()
}

/// Flattens the program into the input relations, one tuple per node per
/// owning relation, in label order.
pub fn extract_facts(p: &LabeledProgram) -> Edb {
    use Cell::{Int, Label as L, Name};
    let mut edb = Edb::default();
    edb.push("top_exp", vec![L(p.root)]);
    for (id, node) in p.nodes() {
        match node {
            Node::Var { name } => edb.push("var", vec![L(id), Name(name.clone())]),
            Node::Num(n) => edb.push("num", vec![L(id), Int(*n)]),
            Node::Bool(b) => edb.push(
                "bool",
                vec![L(id), Name(if *b { "#t" } else { "#f" }.to_string())],
            ),
            Node::Lambda { params, body } => {
                edb.push("lambda", vec![L(id), L(*params), L(*body)]);
            }
            Node::Params { names } => {
                for (pos, x) in names.iter().enumerate() {
                    edb.push("lambda_arg_list", vec![L(id), Int(pos as i64), Name(x.clone())]);
                }
            }
            Node::If {
                guard,
                then_branch,
                else_branch,
            } => edb.push(
                "if",
                vec![L(id), L(*guard), L(*then_branch), L(*else_branch)],
            ),
            Node::SetBang { var, expr } => {
                edb.push("setb", vec![L(id), Name(var.clone()), L(*expr)]);
            }
            Node::Callcc { expr } => edb.push("callcc", vec![L(id), L(*expr)]),
            Node::Let { bindings, body } => {
                edb.push("let", vec![L(id), L(*bindings), L(*body)]);
            }
            Node::Bindings { binds } => {
                for (x, e) in binds {
                    edb.push("let_list", vec![L(id), Name(x.clone()), L(*e)]);
                }
            }
            Node::PrimCall { op, args } => edb.push("prim_call", vec![L(id), L(*op), L(*args)]),
            Node::PrimOp { name } => edb.push("prim", vec![L(id), Name(name.clone())]),
            Node::Call { func, args } => edb.push("call", vec![L(id), L(*func), L(*args)]),
            Node::Args { items } => {
                for (pos, e) in items.iter().enumerate() {
                    edb.push("call_arg_list", vec![L(id), Int(pos as i64), L(*e)]);
                }
            }
            Node::Quote { datum } => edb.push("quotation", vec![L(id), L(*datum)]),
            Node::Datum { .. } => {}
        }
    }
    edb
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse_program, FrontendOptions};

    fn edb(text: &str) -> Edb {
        extract_facts(&parse_program(text, &FrontendOptions::default()).unwrap())
    }

    fn rows(edb: &Edb) -> Vec<String> {
        edb.iter()
            .flat_map(|(name, facts)| {
                facts.iter().map(move |f| {
                    let cells: Vec<String> = f.iter().map(Cell::to_string).collect();
                    format!("{name}({})", cells.join(","))
                })
            })
            .collect()
    }

    #[test]
    fn number_program() {
        assert_eq!(rows(&edb("42")), vec!["top_exp(e0)", "num(e0,42)"]);
    }

    #[test]
    fn single_call() {
        assert_eq!(
            rows(&edb("(f #t)")),
            vec![
                "top_exp(e0)",
                "call(e0,e1,e2)",
                "call_arg_list(e2,0,e3)",
                "var(e1,f)",
                "bool(e3,#t)",
            ]
        );
    }

    #[test]
    fn conflation_example_flattens_lets_calls_and_if() {
        let e = edb("(let ([f (lambda (x) x)]) (let ([a (f #t)] [b (f #f)]) (if a 4 5)))");
        let got = rows(&e);
        // Hand-flattened: outer let e0 with binding list e1, lambda e2 (params
        // e3, body e4), inner let e5 with bindings e6, two calls e7 and e11,
        // and the if at e15.
        let expected = [
            "top_exp(e0)",
            "lambda(e2,e3,e4)",
            "lambda_arg_list(e3,0,x)",
            "call(e7,e8,e9)",
            "call(e11,e12,e13)",
            "call_arg_list(e9,0,e10)",
            "call_arg_list(e13,0,e14)",
            "var(e4,x)",
            "var(e8,f)",
            "var(e12,f)",
            "var(e16,a)",
            "bool(e10,#t)",
            "bool(e14,#f)",
            "if(e15,e16,e17,e18)",
            "let(e0,e1,e5)",
            "let(e5,e6,e15)",
            "let_list(e1,f,e2)",
            "let_list(e6,a,e7)",
            "let_list(e6,b,e11)",
        ];
        let mut got_sorted = got.clone();
        got_sorted.sort();
        let mut expected_sorted: Vec<String> = expected.iter().map(|s| s.to_string()).collect();
        expected_sorted.extend(["num(e17,4)".to_string(), "num(e18,5)".to_string()]);
        expected_sorted.sort();
        assert_eq!(got_sorted, expected_sorted);
    }

    #[test]
    fn fact_directory_round_trip() {
        let e = edb("((lambda (x y) (+ x y)) (call/cc (lambda (k) (set! k 1))) 2)");
        let dir = tempfile::tempdir().unwrap();
        e.write_dir(dir.path()).unwrap();
        let back = Edb::read_dir(dir.path()).unwrap();
        assert_eq!(back, e);
        let text = std::fs::read_to_string(dir.path().join("lambda_arg_list.facts")).unwrap();
        assert!(text.contains("0\tx\n"));
    }

    #[test]
    fn malformed_fact_lines_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("num.facts"), "e0\tseven\n").unwrap();
        let err = Edb::read_dir(dir.path()).unwrap_err();
        assert!(err.to_string().contains("num.facts line 1"));
    }
}
