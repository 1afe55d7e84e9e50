//! Compilation of a belief network into a junction forest.
//!
//! The pipeline is moralize → MCS numbering → fill-in triangulation →
//! maximal cliques → forest assembly → CPT assignment. Every step breaks ties
//! by declaration or clique index, so a document always compiles to the same
//! forest.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{mcs_order, moralize, triangulate, EliminationOrder, UndirectedGraph};
use crate::network::{dot_quote, BeliefNetwork};
use crate::potential::{for_each_projected, PotentialTable};

/// Maximal cliques of a chordal graph, in increasing MCS number of their
/// highest-numbered vertex. Each clique's vertices are sorted by index.
pub fn identify_cliques(chordal: &UndirectedGraph, order: &EliminationOrder) -> Result<Vec<Vec<usize>>> {
    if !triangulate(chordal, order).1.is_empty() {
        return Err(Error::NotChordal);
    }
    let candidates: Vec<Vec<usize>> = order
        .order
        .iter()
        .map(|&v| {
            let mut set: Vec<usize> =
                chordal.neighbors(v).iter().copied().filter(|&w| order.number[w] < order.number[v]).collect();
            set.push(v);
            set.sort_unstable();
            set
        })
        .collect();
    let is_subset = |a: &[usize], b: &[usize]| a.len() < b.len() && a.iter().all(|x| b.binary_search(x).is_ok());
    Ok(candidates.iter().filter(|c| !candidates.iter().any(|other| is_subset(c, other))).cloned().collect())
}

/// Junction-forest shape before any potentials are attached.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForestStructure {
    pub cliques: Vec<Vec<usize>>,
    pub parent: Vec<Option<usize>>,
    /// `separators[i]` is clique `i` ∩ its parent; empty for roots.
    pub separators: Vec<Vec<usize>>,
    pub roots: Vec<usize>,
}

/// Links each clique to the earliest earlier clique containing its
/// intersection with all earlier cliques. Cliques with an empty intersection
/// start new trees. Parents always have smaller indices than their children.
pub fn build_forest(cliques: Vec<Vec<usize>>) -> ForestStructure {
    let n_vars = cliques.iter().flatten().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; n_vars];
    let mut parent = Vec::with_capacity(cliques.len());
    let mut separators = Vec::with_capacity(cliques.len());
    let mut roots = Vec::new();

    for (i, clique) in cliques.iter().enumerate() {
        let separator: Vec<usize> = clique.iter().copied().filter(|&v| seen[v]).collect();
        if separator.is_empty() {
            roots.push(i);
            parent.push(None);
        } else {
            let p = (0..i)
                .find(|&j| separator.iter().all(|v| cliques[j].binary_search(v).is_ok()))
                .expect("clique sequence from a chordal graph has the running intersection property");
            parent.push(Some(p));
        }
        for &v in clique {
            seen[v] = true;
        }
        separators.push(separator);
    }

    ForestStructure { cliques, parent, separators, roots }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Clique {
    pub index: usize,
    pub variables: Vec<usize>,
    /// Variables whose CPT was multiplied into this clique.
    pub cpts: Vec<usize>,
    pub potential: PotentialTable,
}

/// A junction forest with initialized potentials. Serves as the immutable
/// template for inference sessions.
#[derive(Clone, Debug, PartialEq)]
pub struct CliqueForest {
    cliques: Vec<Clique>,
    parent: Vec<Option<usize>>,
    separators: Vec<Option<PotentialTable>>,
    children: Vec<Vec<usize>>,
    roots: Vec<usize>,
    home: Vec<usize>,
}

fn state_space(vars: &[usize], net: &BeliefNetwork) -> usize {
    vars.iter().map(|&v| net.cardinality(v)).product()
}

/// Index of the smallest (by state space) clique containing all of `vars`,
/// earliest index on ties.
fn smallest_container(structure: &ForestStructure, vars: &[usize], net: &BeliefNetwork) -> Option<usize> {
    structure
        .cliques
        .iter()
        .enumerate()
        .filter(|(_, c)| vars.iter().all(|v| c.binary_search(v).is_ok()))
        .min_by_key(|(i, c)| (state_space(c, net), *i))
        .map(|(i, _)| i)
}

/// Assigns each CPT to the smallest clique covering its family and sets
/// every clique potential to the product of its CPTs. Separators start as
/// all-ones tables.
pub fn initialize_potentials(net: &BeliefNetwork, structure: &ForestStructure) -> Result<CliqueForest> {
    let card = |v: usize| net.cardinality(v);
    let mut cliques: Vec<Clique> = structure
        .cliques
        .iter()
        .enumerate()
        .map(|(index, vars)| Clique {
            index,
            variables: vars.clone(),
            cpts: Vec::new(),
            potential: PotentialTable::ones(vars.clone(), card),
        })
        .collect();

    for var in 0..net.len() {
        let mut family = net.parents(var).to_vec();
        family.push(var);
        let target = smallest_container(structure, &family, net)
            .ok_or_else(|| Error::FamilyNotCovered(net.variable(var).id.clone()))?;
        let clique = &mut cliques[target];
        clique.cpts.push(var);
        multiply_cpt(&mut clique.potential, net, var);
    }

    let mut home = Vec::with_capacity(net.len());
    for var in 0..net.len() {
        let c = smallest_container(structure, &[var], net)
            .ok_or_else(|| Error::FamilyNotCovered(net.variable(var).id.clone()))?;
        home.push(c);
    }

    let mut children = vec![Vec::new(); cliques.len()];
    for (i, p) in structure.parent.iter().enumerate() {
        if let Some(p) = p {
            children[*p].push(i);
        }
    }
    let separators = structure
        .parent
        .iter()
        .zip(&structure.separators)
        .map(|(p, sep)| p.map(|_| PotentialTable::ones(sep.clone(), card)))
        .collect();

    Ok(CliqueForest {
        cliques,
        parent: structure.parent.clone(),
        separators,
        children,
        roots: structure.roots.clone(),
        home,
    })
}

/// Multiplies `P(var | parents)` into an unrestricted clique table.
fn multiply_cpt(table: &mut PotentialTable, net: &BeliefNetwork, var: usize) {
    // CPT layout: parents in declared order, then the child fastest.
    let mut family_stride = vec![(var, 1usize)];
    let mut stride = net.cardinality(var);
    for &p in net.parents(var).iter().rev() {
        family_stride.push((p, stride));
        stride *= net.cardinality(p);
    }
    let strides: Vec<usize> =
        table.scope().iter().map(|v| family_stride.iter().find(|(f, _)| f == v).map_or(0, |(_, s)| *s)).collect();
    let dims = table.dims();
    let cpt = &net.cpt(var).table;
    let cells = table.cells_mut();
    for_each_projected(&dims, &strides, |src, dst| cells[src] *= cpt[dst]);
}

impl CliqueForest {
    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn parent(&self, clique: usize) -> Option<usize> {
        self.parent[clique]
    }

    pub fn children(&self, clique: usize) -> &[usize] {
        &self.children[clique]
    }

    /// Separator between `clique` and its parent.
    pub fn separator(&self, clique: usize) -> Option<&PotentialTable> {
        self.separators[clique].as_ref()
    }

    pub fn separators(&self) -> &[Option<PotentialTable>] {
        &self.separators
    }

    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    /// Smallest clique containing `var`.
    pub fn home_clique(&self, var: usize) -> usize {
        self.home[var]
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    /// For every variable, the cliques containing it form one connected
    /// subtree.
    pub fn has_running_intersection(&self) -> bool {
        let n_vars = self.home.len();
        (0..n_vars).all(|v| {
            let contains = |c: usize| self.cliques[c].variables.binary_search(&v).is_ok();
            let nodes = (0..self.len()).filter(|&c| contains(c)).count();
            let edges = (0..self.len()).filter(|&c| contains(c) && self.parent[c].is_some_and(contains)).count();
            nodes > 0 && edges + 1 == nodes
        })
    }

    /// ∏ clique cells / ∏ separator cells at a full assignment. Equals the
    /// joint probability for an initialized forest.
    pub fn evaluate(&self, assignment: &[usize]) -> f64 {
        let numerator: f64 = self.cliques.iter().map(|c| c.potential.value_at(assignment)).product();
        let denominator: f64 = self.separators.iter().flatten().map(|s| s.value_at(assignment)).product();
        if denominator == 0.0 {
            0.0
        } else {
            numerator / denominator
        }
    }

    pub fn stats(&self) -> ForestStats {
        forest_stats(self)
    }

    /// Graphviz rendering: cliques as boxes, separators as edge labels.
    pub fn to_dot(&self, net: &BeliefNetwork) -> String {
        let names = |vars: &[usize]| vars.iter().map(|&v| net.variable(v).id.as_str()).collect::<Vec<_>>().join(" ");
        let mut out = format!("graph {} {{\n  node [shape=box];\n", dot_quote(&format!("{} cliques", net.name())));
        for c in &self.cliques {
            let _ = writeln!(out, "  c{} [label={}];", c.index, dot_quote(&names(&c.variables)));
        }
        for (i, sep) in self.separators.iter().enumerate() {
            if let (Some(p), Some(sep)) = (self.parent[i], sep) {
                let _ = writeln!(out, "  c{p} -- c{i} [label={}];", dot_quote(&names(sep.scope())));
            }
        }
        out.push_str("}\n");
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestStats {
    pub cliques: usize,
    pub trees: usize,
    pub max_clique_vars: usize,
    pub clique_cells: usize,
    pub separator_cells: usize,
}

impl ForestStats {
    pub fn total_cells(&self) -> usize {
        self.clique_cells + self.separator_cells
    }
}

pub fn forest_stats(forest: &CliqueForest) -> ForestStats {
    ForestStats {
        cliques: forest.cliques.len(),
        trees: forest.roots.len(),
        max_clique_vars: forest.cliques.iter().map(|c| c.variables.len()).max().unwrap_or(0),
        clique_cells: forest.cliques.iter().map(|c| c.potential.len()).sum(),
        separator_cells: forest.separators.iter().flatten().map(PotentialTable::len).sum(),
    }
}

/// Everything produced by compiling one network.
#[derive(Clone, Debug)]
pub struct CompiledNetwork {
    pub network: BeliefNetwork,
    pub moral: UndirectedGraph,
    /// MCS numbering of the moral graph, used for triangulation.
    pub order: EliminationOrder,
    pub fill_ins: Vec<(usize, usize)>,
    pub triangulated: UndirectedGraph,
    /// MCS numbering of the triangulated graph, used to extract cliques.
    pub clique_order: EliminationOrder,
    pub forest: CliqueForest,
}

pub fn compile(net: &BeliefNetwork) -> Result<CompiledNetwork> {
    let moral = moralize(net);
    let order = mcs_order(&moral);
    let (triangulated, fill_ins) = triangulate(&moral, &order);
    // The moral-graph order is a perfect elimination order of the result but
    // not necessarily an MCS order of it, and only the latter guarantees that
    // listing cliques by highest number has the running intersection property.
    let clique_order = mcs_order(&triangulated);
    let cliques = identify_cliques(&triangulated, &clique_order)?;
    let structure = build_forest(cliques);
    let forest = initialize_potentials(net, &structure)?;
    Ok(CompiledNetwork { network: net.clone(), moral, order, fill_ins, triangulated, clique_order, forest })
}

impl CompiledNetwork {
    pub fn stats(&self) -> ForestStats {
        forest_stats(&self.forest)
    }
}
