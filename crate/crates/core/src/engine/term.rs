// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write as _;

use indexmap::IndexSet;
use rustc_hash::FxBuildHasher;

/// Handle to an interned term in a [`TermPool`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(u32);

impl TermId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum TermData {
    Sym(Box<str>),
    Int(i64),
    /// Constructor application; the functor is always a `Sym` term.
    App(TermId, Box<[TermId]>),
}

/// Hash-consed ground terms. Equal terms share one id.
#[derive(Clone, Debug, Default)]
pub struct TermPool {
    terms: IndexSet<TermData, FxBuildHasher>,
}

impl TermPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, data: TermData) -> TermId {
        TermId(self.terms.insert_full(data).0 as u32)
    }

    pub fn lookup(&self, data: &TermData) -> Option<TermId> {
        self.terms.get_index_of(data).map(|i| TermId(i as u32))
    }

    pub fn sym(&mut self, s: &str) -> TermId {
        if let Some(i) = self.terms.get_index_of(&TermData::Sym(s.into())) {
            return TermId(i as u32);
        }
        self.intern(TermData::Sym(s.into()))
    }

    pub fn int(&mut self, n: i64) -> TermId {
        self.intern(TermData::Int(n))
    }

    pub fn app(&mut self, functor: &str, args: &[TermId]) -> TermId {
        let f = self.sym(functor);
        self.intern(TermData::App(f, args.into()))
    }

    pub fn get(&self, id: TermId) -> &TermData {
        &self.terms[id.index()]
    }

    pub fn as_sym(&self, id: TermId) -> Option<&str> {
        match self.get(id) {
            TermData::Sym(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self, id: TermId) -> Option<i64> {
        match self.get(id) {
            TermData::Int(n) => Some(*n),
            _ => None,
        }
    }

    /// Functor name and arguments of a constructor application.
    pub fn as_app(&self, id: TermId) -> Option<(&str, &[TermId])> {
        match self.get(id) {
            TermData::App(f, args) => Some((self.as_sym(*f)?, args)),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Renders `(Functor arg ...)` for applications, the bare text for
    /// symbols and decimal for integers.
    pub fn write(&self, out: &mut String, id: TermId) {
        match self.get(id) {
            TermData::Sym(s) => out.push_str(s),
            TermData::Int(n) => {
                let _ = write!(out, "{n}");
            }
            TermData::App(f, args) => {
                out.push('(');
                self.write(out, *f);
                for a in args.iter() {
                    out.push(' ');
                    self.write(out, *a);
                }
                out.push(')');
            }
        }
    }

    pub fn render(&self, id: TermId) -> String {
        let mut s = String::new();
        self.write(&mut s, id);
        s
    }

    /// Reads back the output of [`TermPool::write`]. Atoms that parse as
    /// integers become `Int`, everything else `Sym`.
    pub fn parse(&mut self, text: &str) -> Option<TermId> {
        let spaced = text.replace('(', " ( ").replace(')', " ) ");
        let tokens: Vec<&str> = spaced.split_whitespace().collect();
        let mut at = 0;
        let t = self.parse_at(&tokens, &mut at)?;
        (at == tokens.len()).then_some(t)
    }

    fn parse_at(&mut self, tokens: &[&str], at: &mut usize) -> Option<TermId> {
        let tok = *tokens.get(*at)?;
        *at += 1;
        match tok {
            "(" => {
                let functor = *tokens.get(*at).filter(|f| !matches!(**f, "(" | ")"))?;
                *at += 1;
                let mut args = Vec::new();
                while *tokens.get(*at)? != ")" {
                    args.push(self.parse_at(tokens, at)?);
                }
                *at += 1;
                Some(self.app(functor, &args))
            }
            ")" => None,
            atom => Some(match atom.parse::<i64>() {
                Ok(n) => self.int(n),
                Err(_) => self.sym(atom),
            }),
        }
    }

    pub fn render_tuple(&self, tuple: &[TermId]) -> String {
        let mut s = String::new();
        for (i, t) in tuple.iter().enumerate() {
            if i > 0 {
                s.push('\t');
            }
            self.write(&mut s, *t);
        }
        s
    }
}
