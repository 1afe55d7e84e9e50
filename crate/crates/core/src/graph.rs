//! Undirected graphs over network variables: moralization, maximum
//! cardinality search and fill-in triangulation.
//!
//! Vertices are variable indices, so "declaration order" is plain index
//! order and every tie-break below picks the lowest index.

use std::collections::BTreeSet;

use crate::network::BeliefNetwork;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UndirectedGraph {
    adjacency: Vec<BTreeSet<usize>>,
}

impl UndirectedGraph {
    pub fn new(vertices: usize) -> Self {
        Self { adjacency: vec![BTreeSet::new(); vertices] }
    }

    pub fn from_edges(vertices: usize, edges: &[(usize, usize)]) -> Self {
        let mut g = Self::new(vertices);
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.adjacency.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adjacency.is_empty()
    }

    /// Adds `a – b`; returns `false` if it already existed. Self-loops are
    /// ignored.
    pub fn add_edge(&mut self, a: usize, b: usize) -> bool {
        if a == b {
            return false;
        }
        self.adjacency[b].insert(a);
        self.adjacency[a].insert(b)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].contains(&b)
    }

    pub fn neighbors(&self, v: usize) -> &BTreeSet<usize> {
        &self.adjacency[v]
    }

    /// Edges as `(low, high)` pairs in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency.iter().enumerate().flat_map(|(a, ns)| ns.range(a + 1..).map(move |&b| (a, b))).collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    pub fn is_complete_subgraph(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(i, &a)| vertices[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }
}

/// Drops arc directions and marries every pair of co-parents.
pub fn moralize(net: &BeliefNetwork) -> UndirectedGraph {
    let mut g = UndirectedGraph::new(net.len());
    for child in 0..net.len() {
        let parents = net.parents(child);
        for (i, &p) in parents.iter().enumerate() {
            g.add_edge(p, child);
            for &q in &parents[i + 1..] {
                g.add_edge(p, q);
            }
        }
    }
    g
}

/// A maximum-cardinality-search numbering.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EliminationOrder {
    /// `order[k]` is the vertex numbered `k + 1`.
    pub order: Vec<usize>,
    /// `number[v]` is the 1-based number of vertex `v`.
    pub number: Vec<usize>,
    /// Positions in `order` where the search restarted in a fresh component.
    pub restarts: Vec<usize>,
}

impl EliminationOrder {
    /// Builds an order from an explicit vertex sequence.
    pub fn from_sequence(order: Vec<usize>) -> Self {
        let mut number = vec![0; order.len()];
        for (k, &v) in order.iter().enumerate() {
            number[v] = k + 1;
        }
        Self { order, number, restarts: Vec::new() }
    }
}

/// Maximum cardinality search that also handles disconnected graphs: when no
/// unnumbered vertex has a numbered neighbour, the search restarts at the
/// lowest-indexed unnumbered vertex.
pub fn mcs_order(g: &UndirectedGraph) -> EliminationOrder {
    let n = g.len();
    let mut count = vec![0usize; n];
    let mut numbered = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut number = vec![0; n];
    let mut restarts = Vec::new();

    for step in 0..n {
        let mut best: Option<usize> = None;
        for v in 0..n {
            if !numbered[v] && best.is_none_or(|b| count[v] > count[b]) {
                best = Some(v);
            }
        }
        let v = best.expect("an unnumbered vertex remains");
        if step > 0 && count[v] == 0 {
            restarts.push(step);
        }
        numbered[v] = true;
        number[v] = step + 1;
        order.push(v);
        for &w in g.neighbors(v) {
            if !numbered[w] {
                count[w] += 1;
            }
        }
    }

    EliminationOrder { order, number, restarts }
}

/// Eliminates vertices from the highest number down, connecting each
/// vertex's lower-numbered neighbours pairwise. Returns the chordal supergraph
/// and the added edges as `(low, high)` pairs, in the order they were added.
pub fn triangulate(g: &UndirectedGraph, order: &EliminationOrder) -> (UndirectedGraph, Vec<(usize, usize)>) {
    let mut h = g.clone();
    let mut fill_ins = Vec::new();
    for &v in order.order.iter().rev() {
        let earlier: Vec<usize> =
            h.neighbors(v).iter().copied().filter(|&w| order.number[w] < order.number[v]).collect();
        for (i, &a) in earlier.iter().enumerate() {
            for &b in &earlier[i + 1..] {
                if h.add_edge(a, b) {
                    fill_ins.push((a.min(b), a.max(b)));
                }
            }
        }
    }
    (h, fill_ins)
}

/// Zero-fill test: a graph is chordal iff triangulating along its own MCS
/// order adds nothing.
pub fn is_chordal(g: &UndirectedGraph) -> bool {
    triangulate(g, &mcs_order(g)).1.is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;
    const D: usize = 3;

    #[test]
    fn moral_edges() {
        let chain = fixtures::chain();
        assert_eq!(moralize(&chain).edges(), vec![(A, B), (B, C)]);
        let collider = fixtures::collider();
        assert_eq!(moralize(&collider).edges(), vec![(A, B), (A, C), (B, C)]);
        let diamond = fixtures::diamond();
        assert_eq!(moralize(&diamond).edges(), vec![(A, B), (A, C), (B, C), (B, D), (C, D)]);
    }

    #[test]
    fn mcs_triangle() {
        let g = UndirectedGraph::from_edges(3, &[(A, B), (B, C), (C, A)]);
        let order = mcs_order(&g);
        assert_eq!(order.order, vec![A, B, C]);
        assert!(order.restarts.is_empty());
        assert!(triangulate(&g, &order).1.is_empty());
    }

    #[test]
    fn mcs_restarts_on_isolated_vertices() {
        let g = UndirectedGraph::new(2);
        let order = mcs_order(&g);
        assert_eq!(order.order, vec![0, 1]);
        assert_eq!(order.restarts, vec![1]);
    }

    /// Straight simulation of the selection rule, kept separate from the
    /// implementation: among unnumbered vertices take the largest count of
    /// numbered neighbours, lowest index on ties.
    fn simulate_mcs(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
        let adjacent = |a: usize, b: usize| edges.contains(&(a, b)) || edges.contains(&(b, a));
        let mut order: Vec<usize> = Vec::new();
        while order.len() < n {
            let candidates = (0..n).filter(|v| !order.contains(v));
            let scored = candidates.map(|v| (order.iter().filter(|&&w| adjacent(v, w)).count(), v));
            let best = scored.max_by(|x, y| x.0.cmp(&y.0).then(y.1.cmp(&x.1))).unwrap();
            order.push(best.1);
        }
        order
    }

    #[test]
    fn mcs_four_cycle_matches_simulation() {
        let edges = [(A, B), (B, C), (C, D), (D, A)];
        let g = UndirectedGraph::from_edges(4, &edges);
        let expected = simulate_mcs(4, &edges);
        assert_eq!(expected, vec![A, B, C, D]);
        assert_eq!(mcs_order(&g).order, expected);
        // Eliminating D first joins its earlier neighbours A and C.
        assert_eq!(triangulate(&g, &mcs_order(&g)).1, vec![(A, C)]);
    }

    #[test]
    fn four_cycle_with_explicit_order_gets_bd_chord() {
        let g = UndirectedGraph::from_edges(4, &[(A, B), (B, C), (C, D), (D, A)]);
        let order = EliminationOrder::from_sequence(vec![A, B, D, C]);
        let (h, fill) = triangulate(&g, &order);
        assert_eq!(fill, vec![(B, D)]);
        assert!(is_chordal(&h));
        assert!(!is_chordal(&g));
    }

    #[test]
    fn mcs_matches_simulation_on_small_graphs() {
        // Every graph on 5 vertices whose edge mask is a multiple of 7.
        let pairs: Vec<(usize, usize)> = (0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect();
        for mask in (0u32..1 << pairs.len()).step_by(7) {
            let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, e)| *e).collect();
            let g = UndirectedGraph::from_edges(5, &edges);
            assert_eq!(mcs_order(&g).order, simulate_mcs(5, &edges), "mask {mask}");
        }
    }
}
