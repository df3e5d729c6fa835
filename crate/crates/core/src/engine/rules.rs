// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::term::{TermId, TermPool};
use super::EngineError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ColumnKind {
    Label,
    Name,
    Integer,
    Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationDecl {
    pub name: String,
    pub columns: Vec<ColumnKind>,
}

impl RelationDecl {
    pub fn new(name: &str, columns: &[ColumnKind]) -> Self {
        RelationDecl {
            name: name.to_string(),
            columns: columns.to_vec(),
        }
    }

    pub fn arity(&self) -> usize {
        self.columns.len()
    }
}

/// Argument pattern of an atom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Pattern {
    Var(String),
    Sym(String),
    Int(i64),
    /// Constructor term; in a body atom it deconstructs, in a head it builds.
    App(String, Vec<Pattern>),
    Wildcard,
    /// Registered function applied to its arguments; heads only.
    Call(String, Vec<Pattern>),
}

pub fn var(name: &str) -> Pattern {
    Pattern::Var(name.to_string())
}

pub fn sym(s: &str) -> Pattern {
    Pattern::Sym(s.to_string())
}

pub fn int(n: i64) -> Pattern {
    Pattern::Int(n)
}

pub fn app(functor: &str, args: Vec<Pattern>) -> Pattern {
    Pattern::App(functor.to_string(), args)
}

pub fn call(function: &str, args: Vec<Pattern>) -> Pattern {
    Pattern::Call(function.to_string(), args)
}

pub fn wild() -> Pattern {
    Pattern::Wildcard
}

impl Pattern {
    fn vars_into(&self, out: &mut Vec<String>) {
        match self {
            Pattern::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Pattern::App(_, args) | Pattern::Call(_, args) => {
                args.iter().for_each(|a| a.vars_into(out));
            }
            Pattern::Sym(_) | Pattern::Int(_) | Pattern::Wildcard => {}
        }
    }

    fn has(&self, pred: &dyn Fn(&Pattern) -> bool) -> bool {
        pred(self)
            || match self {
                Pattern::App(_, args) | Pattern::Call(_, args) => args.iter().any(|a| a.has(pred)),
                _ => false,
            }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pattern::Var(v) => f.write_str(v),
            Pattern::Sym(s) => write!(f, "{s:?}"),
            Pattern::Int(n) => write!(f, "{n}"),
            Pattern::Wildcard => f.write_str("_"),
            Pattern::App(name, args) | Pattern::Call(name, args) => {
                let sigil = if matches!(self, Pattern::App(..)) { '$' } else { '@' };
                write!(f, "{sigil}{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub args: Vec<Pattern>,
}

pub fn atom(relation: &str, args: Vec<Pattern>) -> Atom {
    Atom {
        relation: relation.to_string(),
        args,
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.relation)?;
        for (i, a) in self.args.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}")?;
        }
        f.write_str(")")
    }
}

/// A Horn clause with one or more heads, positive body atoms and
/// disequality constraints. Every head is derived from the same body match.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub name: String,
    pub heads: Vec<Atom>,
    pub body: Vec<Atom>,
    pub neq: Vec<(Pattern, Pattern)>,
}

impl Rule {
    pub fn new(name: &str) -> Self {
        Rule {
            name: name.to_string(),
            heads: Vec::new(),
            body: Vec::new(),
            neq: Vec::new(),
        }
    }

    pub fn head(mut self, relation: &str, args: Vec<Pattern>) -> Self {
        self.heads.push(atom(relation, args));
        self
    }

    pub fn when(mut self, relation: &str, args: Vec<Pattern>) -> Self {
        self.body.push(atom(relation, args));
        self
    }

    pub fn neq(mut self, a: Pattern, b: Pattern) -> Self {
        self.neq.push((a, b));
        self
    }

    pub(crate) fn body_vars(&self) -> Vec<String> {
        let mut vars = Vec::new();
        for a in &self.body {
            a.args.iter().for_each(|p| p.vars_into(&mut vars));
        }
        vars
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "// {}", self.name)?;
        for (i, h) in self.heads.iter().enumerate() {
            let sep = if i + 1 == self.heads.len() { " :-" } else { "," };
            writeln!(f, "{h}{sep}")?;
        }
        let mut parts: Vec<String> = self.body.iter().map(|a| a.to_string()).collect();
        parts.extend(self.neq.iter().map(|(a, b)| format!("{a} != {b}")));
        for (i, p) in parts.iter().enumerate() {
            let sep = if i + 1 == parts.len() { "." } else { "," };
            writeln!(f, "    {p}{sep}")?;
        }
        Ok(())
    }
}

/// Function usable in head `@name(...)` patterns.
pub type TermFn = Arc<dyn Fn(&mut TermPool, &[TermId]) -> TermId + Send + Sync>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    /// Relation indices, ascending.
    pub relations: Vec<usize>,
    /// Rule indices whose heads live in this stratum.
    pub rules: Vec<usize>,
}

/// Validated rules over declared relations, split into strata in evaluation
/// order.
#[derive(Clone)]
pub struct RuleSet {
    pub(crate) relations: Vec<RelationDecl>,
    pub(crate) rules: Vec<Rule>,
    pub(crate) functions: HashMap<String, TermFn>,
    pub(crate) strata: Vec<Stratum>,
    by_name: HashMap<String, usize>,
}

impl fmt::Debug for RuleSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RuleSet")
            .field("relations", &self.relations)
            .field("rules", &self.rules.len())
            .field("strata", &self.strata)
            .finish()
    }
}

impl RuleSet {
    pub fn builder() -> RuleSetBuilder {
        RuleSetBuilder::default()
    }

    pub fn relations(&self) -> &[RelationDecl] {
        &self.relations
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    pub fn relation_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    /// Stratum position of a relation; `None` for relations no rule derives.
    pub fn stratum_of(&self, name: &str) -> Option<usize> {
        let rel = self.relation_index(name)?;
        self.strata.iter().position(|s| s.relations.contains(&rel))
    }

    /// The rule set as Datalog-like text, grouped by stratum.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for r in &self.relations {
            let cols: Vec<String> = r.columns.iter().map(|c| format!("{c:?}")).collect();
            out.push_str(&format!(".decl {}({})\n", r.name, cols.join(", ")));
        }
        for (i, s) in self.strata.iter().enumerate() {
            let names: Vec<&str> = s
                .relations
                .iter()
                .map(|&r| self.relations[r].name.as_str())
                .collect();
            out.push_str(&format!("\n// stratum {i}: {}\n", names.join(" ")));
            for &r in &s.rules {
                out.push_str(&self.rules[r].to_string());
            }
        }
        out
    }
}

#[derive(Default)]
pub struct RuleSetBuilder {
    relations: Vec<RelationDecl>,
    rules: Vec<Rule>,
    functions: HashMap<String, TermFn>,
}

impl RuleSetBuilder {
    pub fn relation(mut self, decl: RelationDecl) -> Self {
        self.relations.push(decl);
        self
    }

    pub fn relations(mut self, decls: impl IntoIterator<Item = RelationDecl>) -> Self {
        self.relations.extend(decls);
        self
    }

    pub fn rule(mut self, rule: Rule) -> Self {
        self.rules.push(rule);
        self
    }

    pub fn rules(mut self, rules: impl IntoIterator<Item = Rule>) -> Self {
        self.rules.extend(rules);
        self
    }

    pub fn function(mut self, name: &str, f: TermFn) -> Self {
        self.functions.insert(name.to_string(), f);
        self
    }

    pub fn build(self) -> Result<RuleSet, EngineError> {
        let mut by_name = HashMap::new();
        for (i, r) in self.relations.iter().enumerate() {
            if r.columns.is_empty() {
                return Err(EngineError::ZeroArity(r.name.clone()));
            }
            if by_name.insert(r.name.clone(), i).is_some() {
                return Err(EngineError::DuplicateRelation(r.name.clone()));
            }
        }
        for rule in &self.rules {
            validate_rule(rule, &self.relations, &by_name, &self.functions)?;
        }
        let strata = stratify(&self.relations, &self.rules, &by_name);
        Ok(RuleSet {
            relations: self.relations,
            rules: self.rules,
            functions: self.functions,
            strata,
            by_name,
        })
    }
}

pub fn build_ruleset(
    relations: Vec<RelationDecl>,
    rules: Vec<Rule>,
) -> Result<RuleSet, EngineError> {
    RuleSet::builder().relations(relations).rules(rules).build()
}

fn validate_rule(
    rule: &Rule,
    relations: &[RelationDecl],
    by_name: &HashMap<String, usize>,
    functions: &HashMap<String, TermFn>,
) -> Result<(), EngineError> {
    if rule.heads.is_empty() {
        return Err(EngineError::NoHead(rule.name.clone()));
    }
    for a in rule.heads.iter().chain(&rule.body) {
        let rel = by_name
            .get(&a.relation)
            .ok_or_else(|| EngineError::UnknownRelation(a.relation.clone()))?;
        let expected = relations[*rel].arity();
        if a.args.len() != expected {
            return Err(EngineError::ArityMismatch {
                relation: a.relation.clone(),
                expected,
                found: a.args.len(),
            });
        }
    }
    for a in &rule.body {
        if a.args.iter().any(|p| p.has(&|q| matches!(q, Pattern::Call(..)))) {
            return Err(EngineError::CallInBody(rule.name.clone()));
        }
    }
    let bound = rule.body_vars();
    let mut needed = Vec::new();
    for h in &rule.heads {
        for p in &h.args {
            if p.has(&|q| matches!(q, Pattern::Wildcard)) {
                return Err(EngineError::WildcardInHead(rule.name.clone()));
            }
            if let Some(name) = find_call(p).filter(|n| !functions.contains_key(*n)) {
                return Err(EngineError::UnknownFunction(name.to_string()));
            }
            p.vars_into(&mut needed);
        }
    }
    for (a, b) in &rule.neq {
        if [a, b]
            .iter()
            .any(|p| p.has(&|q| matches!(q, Pattern::Call(..) | Pattern::Wildcard)))
        {
            return Err(EngineError::CallInBody(rule.name.clone()));
        }
        a.vars_into(&mut needed);
        b.vars_into(&mut needed);
    }
    if let Some(v) = needed.iter().find(|v| !bound.contains(v)) {
        return Err(EngineError::UnboundVariable {
            rule: rule.name.clone(),
            var: v.clone(),
        });
    }
    Ok(())
}

fn find_call(p: &Pattern) -> Option<&str> {
    match p {
        Pattern::Call(name, _) => Some(name),
        Pattern::App(_, args) => args.iter().find_map(find_call),
        _ => None,
    }
}

/// Strongly connected components of the body-to-head dependency graph, in
/// topological order. Heads of one rule are tied together so that a
/// multi-head rule belongs to a single stratum.
fn stratify(
    relations: &[RelationDecl],
    rules: &[Rule],
    by_name: &HashMap<String, usize>,
) -> Vec<Stratum> {
    let mut graph = DiGraph::<usize, ()>::new();
    let nodes: Vec<_> = (0..relations.len()).map(|i| graph.add_node(i)).collect();
    for rule in rules {
        let heads: Vec<usize> = rule.heads.iter().map(|h| by_name[&h.relation]).collect();
        for b in &rule.body {
            let b = by_name[&b.relation];
            for &h in &heads {
                graph.update_edge(nodes[b], nodes[h], ());
            }
        }
        for w in heads.windows(2) {
            graph.update_edge(nodes[w[0]], nodes[w[1]], ());
            graph.update_edge(nodes[w[1]], nodes[w[0]], ());
        }
    }
    let derived: BTreeSet<usize> = rules
        .iter()
        .flat_map(|r| r.heads.iter().map(|h| by_name[&h.relation]))
        .collect();
    let mut strata = Vec::new();
    // tarjan_scc yields components in reverse topological order.
    for scc in tarjan_scc(&graph).into_iter().rev() {
        let mut rels: Vec<usize> = scc.iter().map(|n| graph[*n]).collect();
        rels.sort_unstable();
        if !rels.iter().any(|r| derived.contains(r)) {
            continue;
        }
        let rule_ids = rules
            .iter()
            .enumerate()
            .filter(|(_, r)| rels.contains(&by_name[&r.heads[0].relation]))
            .map(|(i, _)| i)
            .collect();
        strata.push(Stratum {
            relations: rels,
            rules: rule_ids,
        });
    }
    strata
}

#[cfg(test)]
mod tests {
    use super::*;
    use ColumnKind::Name;

    fn ancestor_rules() -> (Vec<RelationDecl>, Vec<Rule>) {
        let rels = vec![
            RelationDecl::new("parent", &[Name, Name]),
            RelationDecl::new("ancestor", &[Name, Name]),
        ];
        let rules = vec![
            Rule::new("base")
                .head("ancestor", vec![var("p"), var("a")])
                .when("parent", vec![var("p"), var("a")]),
            Rule::new("step")
                .head("ancestor", vec![var("p"), var("a")])
                .when("parent", vec![var("p"), var("q")])
                .when("ancestor", vec![var("q"), var("a")]),
        ];
        (rels, rules)
    }

    #[test]
    fn ancestor_is_one_recursive_stratum() {
        let (rels, rules) = ancestor_rules();
        let rs = build_ruleset(rels, rules).unwrap();
        assert_eq!(rs.strata().len(), 1);
        assert_eq!(rs.strata()[0].rules, vec![0, 1]);
        assert_eq!(rs.stratum_of("parent"), None);
        assert!(rs.dump().contains("ancestor(p, a) :-"));
    }

    #[test]
    fn range_restriction_is_enforced() {
        let (rels, _) = ancestor_rules();
        let bad = Rule::new("bad")
            .head("ancestor", vec![var("p"), var("z")])
            .when("parent", vec![var("p"), wild()]);
        assert!(matches!(
            build_ruleset(rels, vec![bad]),
            Err(EngineError::UnboundVariable { .. })
        ));
    }

    #[test]
    fn schema_errors() {
        let (rels, _) = ancestor_rules();
        let unknown = Rule::new("u")
            .head("nope", vec![var("p")])
            .when("parent", vec![var("p"), var("q")]);
        assert!(matches!(
            build_ruleset(rels.clone(), vec![unknown]),
            Err(EngineError::UnknownRelation(_))
        ));
        let arity = Rule::new("a")
            .head("ancestor", vec![var("p")])
            .when("parent", vec![var("p"), var("q")]);
        assert!(matches!(
            build_ruleset(rels.clone(), vec![arity]),
            Err(EngineError::ArityMismatch { .. })
        ));
        let func = Rule::new("f")
            .head("ancestor", vec![call("g", vec![var("p")]), var("q")])
            .when("parent", vec![var("p"), var("q")]);
        assert!(matches!(
            build_ruleset(rels, vec![func]),
            Err(EngineError::UnknownFunction(_))
        ));
    }

    #[test]
    fn multi_head_rules_share_a_stratum() {
        let rels = vec![
            RelationDecl::new("edge", &[Name, Name]),
            RelationDecl::new("reach", &[Name]),
            RelationDecl::new("log", &[Name, Name]),
        ];
        let rules = vec![
            Rule::new("r")
                .head("reach", vec![var("b")])
                .head("log", vec![var("a"), var("b")])
                .when("reach", vec![var("a")])
                .when("edge", vec![var("a"), var("b")]),
        ];
        let rs = build_ruleset(rels, rules).unwrap();
        assert_eq!(rs.strata().len(), 1);
        assert_eq!(rs.strata()[0].relations, vec![1, 2]);
    }
}
