// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use indexmap::IndexSet;
use rustc_hash::{FxBuildHasher, FxHashMap};

use super::rules::{ColumnKind, RelationDecl, RuleSet};
use super::term::{TermData, TermId, TermPool};
use super::EngineError;

pub type Tuple = Box<[TermId]>;

/// Tuples of one relation in insertion order, with hash indexes keyed by a
/// subset of columns. Positions in the insertion order double as the
/// stable/delta boundaries of semi-naive evaluation.
#[derive(Clone, Debug)]
pub struct Relation {
    decl: RelationDecl,
    tuples: IndexSet<Tuple, FxBuildHasher>,
    indexes: FxHashMap<Box<[usize]>, FxHashMap<Box<[TermId]>, Vec<u32>>>,
}

impl Relation {
    fn new(decl: RelationDecl) -> Self {
        Relation {
            decl,
            tuples: IndexSet::default(),
            indexes: FxHashMap::default(),
        }
    }

    pub fn decl(&self) -> &RelationDecl {
        &self.decl
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn contains(&self, tuple: &[TermId]) -> bool {
        self.tuples.contains(tuple)
    }

    pub fn tuple(&self, i: usize) -> &[TermId] {
        &self.tuples[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[TermId]> {
        self.tuples.iter().map(|t| &t[..])
    }

    pub(crate) fn insert(&mut self, tuple: Tuple) -> bool {
        let (pos, fresh) = self.tuples.insert_full(tuple);
        if fresh {
            let t = &self.tuples[pos];
            for (cols, index) in self.indexes.iter_mut() {
                let key: Box<[TermId]> = cols.iter().map(|&c| t[c]).collect();
                index.entry(key).or_default().push(pos as u32);
            }
        }
        fresh
    }

    pub(crate) fn ensure_index(&mut self, cols: &[usize]) {
        if cols.is_empty() || self.indexes.contains_key(cols) {
            return;
        }
        let mut index: FxHashMap<Box<[TermId]>, Vec<u32>> = FxHashMap::default();
        for (pos, t) in self.tuples.iter().enumerate() {
            let key: Box<[TermId]> = cols.iter().map(|&c| t[c]).collect();
            index.entry(key).or_default().push(pos as u32);
        }
        self.indexes.insert(cols.into(), index);
    }

    /// Positions in `lo..hi` whose `cols` equal `key`, ascending. An index on
    /// `cols` must exist unless `cols` is empty.
    pub(crate) fn lookup(&self, cols: &[usize], key: &[TermId], lo: usize, hi: usize) -> &[u32] {
        let Some(list) = self.indexes.get(cols).and_then(|ix| ix.get(key)) else {
            return &[];
        };
        let a = list.partition_point(|&p| (p as usize) < lo);
        let b = list.partition_point(|&p| (p as usize) < hi);
        &list[a..b]
    }
}

/// Interned terms plus one [`Relation`] per declared relation.
#[derive(Clone, Debug)]
pub struct TupleStore {
    pub pool: TermPool,
    relations: Vec<Relation>,
    by_name: HashMap<String, usize>,
}

impl TupleStore {
    pub fn new(relations: &[RelationDecl]) -> Self {
        TupleStore {
            pool: TermPool::new(),
            relations: relations.iter().cloned().map(Relation::new).collect(),
            by_name: relations
                .iter()
                .enumerate()
                .map(|(i, r)| (r.name.clone(), i))
                .collect(),
        }
    }

    pub fn for_rules(rules: &RuleSet) -> Self {
        Self::new(rules.relations())
    }

    pub fn relation_index(&self, name: &str) -> Result<usize, EngineError> {
        self.by_name
            .get(name)
            .copied()
            .ok_or_else(|| EngineError::UnknownRelation(name.to_string()))
    }

    pub fn relation(&self, name: &str) -> Result<&Relation, EngineError> {
        Ok(&self.relations[self.relation_index(name)?])
    }

    pub(crate) fn relation_at(&self, i: usize) -> &Relation {
        &self.relations[i]
    }

    pub(crate) fn relation_at_mut(&mut self, i: usize) -> &mut Relation {
        &mut self.relations[i]
    }

    pub(crate) fn split(&mut self) -> (&mut TermPool, &[Relation]) {
        (&mut self.pool, &self.relations)
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn total_facts(&self) -> u64 {
        self.relations.iter().map(|r| r.len() as u64).sum()
    }

    /// Inserts a tuple after checking arity and column kinds. Returns whether
    /// the tuple was new.
    pub fn insert(&mut self, relation: &str, tuple: &[TermId]) -> Result<bool, EngineError> {
        let i = self.relation_index(relation)?;
        let decl = &self.relations[i].decl;
        if tuple.len() != decl.arity() {
            return Err(EngineError::ArityMismatch {
                relation: relation.to_string(),
                expected: decl.arity(),
                found: tuple.len(),
            });
        }
        for (col, (&t, kind)) in tuple.iter().zip(&decl.columns).enumerate() {
            let ok = match (kind, self.pool.get(t)) {
                (ColumnKind::Label | ColumnKind::Name, TermData::Sym(_)) => true,
                (ColumnKind::Integer, TermData::Int(_)) => true,
                (ColumnKind::Term, _) => true,
                _ => false,
            };
            if !ok {
                return Err(EngineError::IllTyped {
                    relation: relation.to_string(),
                    column: col,
                });
            }
        }
        Ok(self.relations[i].insert(tuple.into()))
    }

    /// Convenience insert for tuples of symbols.
    pub fn insert_syms(&mut self, relation: &str, syms: &[&str]) -> Result<bool, EngineError> {
        let tuple: Vec<TermId> = syms.iter().map(|s| self.pool.sym(s)).collect();
        self.insert(relation, &tuple)
    }

    /// All tuples whose leading columns equal `prefix`, in canonical order.
    pub fn query(&self, relation: &str, prefix: &[TermId]) -> Result<Vec<Vec<TermId>>, EngineError> {
        let rel = self.relation(relation)?;
        if prefix.len() > rel.decl.arity() {
            return Err(EngineError::ArityMismatch {
                relation: relation.to_string(),
                expected: rel.decl.arity(),
                found: prefix.len(),
            });
        }
        let mut rows: Vec<(String, Vec<TermId>)> = rel
            .iter()
            .filter(|t| t.starts_with(prefix))
            .map(|t| (self.pool.render_tuple(t), t.to_vec()))
            .collect();
        rows.sort();
        Ok(rows.into_iter().map(|(_, t)| t).collect())
    }

    /// Every tuple of `relation` rendered as a tab-separated line, sorted.
    pub fn rows(&self, relation: &str) -> Result<Vec<String>, EngineError> {
        let rel = self.relation(relation)?;
        let mut rows: Vec<String> = rel.iter().map(|t| self.pool.render_tuple(t)).collect();
        rows.sort();
        Ok(rows)
    }

    /// Canonical text of the whole store: one `name<TAB>row` line per tuple,
    /// relations in declaration order.
    pub fn canonical_dump(&self) -> String {
        let mut out = String::new();
        for rel in &self.relations {
            for row in self.rows(&rel.decl.name).expect("declared relation") {
                out.push_str(&rel.decl.name);
                out.push('\t');
                out.push_str(&row);
                out.push('\n');
            }
        }
        out
    }
}
