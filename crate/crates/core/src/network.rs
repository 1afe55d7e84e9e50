//! Belief-network data model, the JSON document format, validation and
//! structural utilities (topological order, merging, DOT export).

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row sums of a CPT must be within this distance of 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: String,
    pub label: String,
    pub values: Vec<String>,
}

impl Variable {
    pub fn cardinality(&self) -> usize {
        self.values.len()
    }

    pub fn value_index(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

/// Conditional probability table `P(child | parents)`.
///
/// The flat table is indexed mixed-radix over (parents in declared order,
/// child), with the child digit varying fastest and the first parent most
/// significant.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpt {
    pub child: String,
    pub parents: Vec<String>,
    pub table: Vec<f64>,
}

/// One node record of the canonical JSON document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: String,
    pub label: String,
    pub values: Vec<String>,
    pub parents: Vec<String>,
    pub cpt: Vec<f64>,
}

/// The canonical on-disk form of a network. Not validated.
///
/// `layout` is a presentation sidecar owned by editors; it is carried through
/// storage untouched and never read by the engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkDocument {
    pub name: String,
    pub nodes: Vec<NodeRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<serde_json::Value>,
}

impl NetworkDocument {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Syntax {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Pretty-printed JSON with a trailing newline. Numbers use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("document serializes");
        text.push('\n');
        text
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    InvalidId { id: String },
    DuplicateVariable { id: String },
    TooFewValues { variable: String, count: usize },
    DuplicateValue { variable: String, value: String },
    UnknownParent { variable: String, parent: String },
    SelfLoop { variable: String },
    DuplicateParent { variable: String, parent: String },
    CptLength { variable: String, expected: usize, actual: usize },
    OutOfRange { variable: String, row: usize, column: usize, value: f64 },
    RowSum { variable: String, row: usize, sum: f64 },
    Cycle { variables: Vec<String> },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::InvalidId { id } => write!(f, "invalid variable id `{id}`"),
            Violation::DuplicateVariable { id } => write!(f, "variable `{id}` declared twice"),
            Violation::TooFewValues { variable, count } => {
                write!(f, "variable `{variable}` has {count} value(s), at least 2 required")
            }
            Violation::DuplicateValue { variable, value } => {
                write!(f, "variable `{variable}` repeats value label `{value}`")
            }
            Violation::UnknownParent { variable, parent } => {
                write!(f, "variable `{variable}` references undeclared parent `{parent}`")
            }
            Violation::SelfLoop { variable } => write!(f, "variable `{variable}` is its own parent"),
            Violation::DuplicateParent { variable, parent } => {
                write!(f, "variable `{variable}` lists parent `{parent}` twice")
            }
            Violation::CptLength { variable, expected, actual } => {
                write!(f, "cpt of `{variable}` has {actual} entries, expected {expected}")
            }
            Violation::OutOfRange { variable, row, column, value } => {
                write!(f, "cpt of `{variable}` has entry {value} outside [0, 1] at row {row}, column {column}")
            }
            Violation::RowSum { variable, row, sum } => {
                write!(f, "cpt of `{variable}` row {row} sums to {sum}, not 1")
            }
            Violation::Cycle { variables } => {
                write!(f, "cycle through variables {}", variables.join(", "))
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural and numeric invariant of a document and lists all
/// violations found.
pub fn validate(doc: &NetworkDocument) -> ValidationReport {
    let mut violations = Vec::new();

    let mut cards: HashMap<&str, usize> = HashMap::new();
    for node in &doc.nodes {
        if node.id.is_empty() || node.id.chars().any(char::is_whitespace) {
            violations.push(Violation::InvalidId { id: node.id.clone() });
        }
        if cards.insert(&node.id, node.values.len()).is_some() {
            violations.push(Violation::DuplicateVariable { id: node.id.clone() });
        }
        if node.values.len() < 2 {
            violations.push(Violation::TooFewValues { variable: node.id.clone(), count: node.values.len() });
        }
        let mut seen = HashSet::new();
        for value in &node.values {
            if !seen.insert(value.as_str()) {
                violations.push(Violation::DuplicateValue { variable: node.id.clone(), value: value.clone() });
            }
        }
    }

    for node in &doc.nodes {
        let mut parents_ok = true;
        let mut seen = HashSet::new();
        for parent in &node.parents {
            if *parent == node.id {
                violations.push(Violation::SelfLoop { variable: node.id.clone() });
                parents_ok = false;
            } else if !cards.contains_key(parent.as_str()) {
                violations.push(Violation::UnknownParent { variable: node.id.clone(), parent: parent.clone() });
                parents_ok = false;
            }
            if !seen.insert(parent.as_str()) {
                violations.push(Violation::DuplicateParent { variable: node.id.clone(), parent: parent.clone() });
            }
        }
        if !parents_ok || node.values.is_empty() {
            continue;
        }

        let k = node.values.len();
        let rows: usize = node.parents.iter().map(|p| cards[p.as_str()]).product();
        if node.cpt.len() != rows * k {
            violations.push(Violation::CptLength {
                variable: node.id.clone(),
                expected: rows * k,
                actual: node.cpt.len(),
            });
            continue;
        }
        let mut in_range = true;
        for (i, &p) in node.cpt.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                in_range = false;
                violations.push(Violation::OutOfRange {
                    variable: node.id.clone(),
                    row: i / k,
                    column: i % k,
                    value: p,
                });
            }
        }
        if !in_range {
            continue;
        }
        for (row, chunk) in node.cpt.chunks(k).enumerate() {
            let sum: f64 = chunk.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                violations.push(Violation::RowSum { variable: node.id.clone(), row, sum });
            }
        }
    }

    if let Some(cycle) = cyclic_variables(doc) {
        violations.push(Violation::Cycle { variables: cycle });
    }

    ValidationReport { violations }
}

/// Variables lying on (or between) directed cycles, in declaration order.
fn cyclic_variables(doc: &NetworkDocument) -> Option<Vec<String>> {
    let index: HashMap<&str, usize> = doc.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let n = doc.nodes.len();
    let mut children = vec![Vec::new(); n];
    let mut parents = vec![Vec::new(); n];
    for (i, node) in doc.nodes.iter().enumerate() {
        for p in &node.parents {
            if let Some(&j) = index.get(p.as_str()) {
                children[j].push(i);
                parents[i].push(j);
            }
        }
    }

    // Peel sources, then sinks; whatever survives both passes is cyclic.
    let mut alive = vec![true; n];
    peel(&mut alive, &parents, &children);
    peel(&mut alive, &children, &parents);

    let cyclic: Vec<String> = (0..n).filter(|&i| alive[i]).map(|i| doc.nodes[i].id.clone()).collect();
    (!cyclic.is_empty()).then_some(cyclic)
}

/// Repeatedly removes live vertices with no live `incoming` neighbours.
fn peel(alive: &mut [bool], incoming: &[Vec<usize>], outgoing: &[Vec<usize>]) {
    let mut degree: Vec<usize> = incoming.iter().map(|edges| edges.iter().filter(|&&j| alive[j]).count()).collect();
    let mut stack: Vec<usize> = (0..alive.len()).filter(|&i| alive[i] && degree[i] == 0).collect();
    while let Some(v) = stack.pop() {
        alive[v] = false;
        for &w in &outgoing[v] {
            if alive[w] {
                degree[w] -= 1;
                if degree[w] == 0 {
                    stack.push(w);
                }
            }
        }
    }
}

/// A validated belief network. Immutable once constructed.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefNetwork {
    name: String,
    variables: Vec<Variable>,
    cpts: Vec<Cpt>,
    parent_index: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl BeliefNetwork {
    pub fn from_document(doc: NetworkDocument) -> Result<Self> {
        let report = validate(&doc);
        if !report.is_valid() {
            return Err(Error::Invalid(report));
        }
        let index: HashMap<String, usize> = doc.nodes.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        let mut variables = Vec::with_capacity(doc.nodes.len());
        let mut cpts = Vec::with_capacity(doc.nodes.len());
        let mut parent_index = Vec::with_capacity(doc.nodes.len());
        for node in doc.nodes {
            parent_index.push(node.parents.iter().map(|p| index[p]).collect());
            cpts.push(Cpt { child: node.id.clone(), parents: node.parents, table: node.cpt });
            variables.push(Variable { id: node.id, label: node.label, values: node.values });
        }
        Ok(Self { name: doc.name, variables, cpts, parent_index, index })
    }

    /// A network with no variables.
    pub fn empty(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            variables: Vec::new(),
            cpts: Vec::new(),
            parent_index: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn to_document(&self) -> NetworkDocument {
        NetworkDocument {
            name: self.name.clone(),
            nodes: self
                .variables
                .iter()
                .zip(&self.cpts)
                .map(|(v, c)| NodeRecord {
                    id: v.id.clone(),
                    label: v.label.clone(),
                    values: v.values.clone(),
                    parents: c.parents.clone(),
                    cpt: c.table.clone(),
                })
                .collect(),
            layout: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, index: usize) -> &Variable {
        &self.variables[index]
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, index: usize) -> &Cpt {
        &self.cpts[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn cardinality(&self, index: usize) -> usize {
        self.variables[index].values.len()
    }

    /// Parent indices of a variable, in the CPT's declared order.
    pub fn parents(&self, index: usize) -> &[usize] {
        &self.parent_index[index]
    }

    /// All arcs as `(parent, child)` index pairs.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.parent_index.iter().enumerate().flat_map(|(child, ps)| ps.iter().map(move |&p| (p, child)))
    }

    pub fn arc_count(&self) -> usize {
        self.parent_index.iter().map(Vec::len).sum()
    }

    /// `P(x_i = assignment[i] | parents = assignment[parents])`, where
    /// `assignment` gives a value index for every variable.
    pub fn conditional(&self, var: usize, assignment: &[usize]) -> f64 {
        let mut offset = 0;
        for &p in &self.parent_index[var] {
            offset = offset * self.cardinality(p) + assignment[p];
        }
        self.cpts[var].table[offset * self.cardinality(var) + assignment[var]]
    }

    /// Variable indices in a parents-first order; ties go to the earliest
    /// declared variable.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.len();
        let mut pending: Vec<usize> = self.parent_index.iter().map(Vec::len).collect();
        let mut children = vec![Vec::new(); n];
        for (p, c) in self.arcs() {
            children[p].push(c);
        }
        let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| pending[i] == 0).map(Reverse).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(Reverse(v)) = ready.pop() {
            order.push(v);
            for &c in &children[v] {
                pending[c] -= 1;
                if pending[c] == 0 {
                    ready.push(Reverse(c));
                }
            }
        }
        debug_assert_eq!(order.len(), n, "validated network is acyclic");
        order
    }

    pub fn topological_ids(&self) -> Vec<&str> {
        self.topological_order().into_iter().map(|i| self.variables[i].id.as_str()).collect()
    }

    /// Graphviz rendering with one edge per arc.
    pub fn to_dot(&self) -> String {
        let mut out = format!("digraph {} {{\n", dot_quote(&self.name));
        for v in &self.variables {
            out.push_str(&format!("  {} [label={}];\n", dot_quote(&v.id), dot_quote(&v.label)));
        }
        for (p, c) in self.arcs() {
            out.push_str(&format!("  {} -> {};\n", dot_quote(&self.variables[p].id), dot_quote(&self.variables[c].id)));
        }
        out.push_str("}\n");
        out
    }
}

pub(crate) fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Parses and validates a canonical network document.
pub fn parse_network(text: &str) -> Result<BeliefNetwork> {
    BeliefNetwork::from_document(NetworkDocument::from_json(text)?)
}

pub fn serialize_network(net: &BeliefNetwork) -> String {
    net.to_document().to_json()
}

/// Union of two networks. Ids of `addition` that collide with `base` are
/// renamed `id_2`, `id_3`, … and parent references follow the rename.
pub fn merge_networks(base: &BeliefNetwork, addition: &BeliefNetwork) -> Result<BeliefNetwork> {
    let mut taken: HashSet<String> = base.variables.iter().chain(&addition.variables).map(|v| v.id.clone()).collect();
    let mut rename: HashMap<&str, String> = HashMap::new();
    for v in &addition.variables {
        if base.index.contains_key(&v.id) {
            let fresh = (2..)
                .map(|k| format!("{}_{k}", v.id))
                .find(|candidate| !taken.contains(candidate))
                .expect("unbounded suffix search");
            taken.insert(fresh.clone());
            rename.insert(&v.id, fresh);
        }
    }
    let renamed = |id: &str| rename.get(id).cloned().unwrap_or_else(|| id.to_string());

    let mut doc = base.to_document();
    if base.is_empty() {
        doc.name = addition.name.clone();
    }
    for mut node in addition.to_document().nodes {
        node.id = renamed(&node.id);
        node.parents = node.parents.iter().map(|p| renamed(p)).collect();
        doc.nodes.push(node);
    }
    let report = validate(&doc);
    if let Some(Violation::Cycle { variables }) =
        report.violations.iter().find(|v| matches!(v, Violation::Cycle { .. }))
    {
        return Err(Error::Cycle(variables.clone()));
    }
    BeliefNetwork::from_document(doc)
}
