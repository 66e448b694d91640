use std::collections::BTreeSet;

use super::network::Network;

/// A variable elimination order with the width it induces on the moral graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrder {
    pub order: Vec<usize>,
    pub induced_width: usize,
}

impl EliminationOrder {
    /// Wraps an explicit order, computing its induced width.
    pub fn from_order(net: &Network, order: Vec<usize>) -> Self {
        let mut graph = moral_graph(net);
        let mut width = 0;
        for &v in &order {
            width = width.max(graph[v].len());
            eliminate(&mut graph, v);
        }
        EliminationOrder {
            order,
            induced_width: width,
        }
    }

    /// Position of every variable in the order.
    pub fn positions(&self, n: usize) -> Vec<usize> {
        let mut pos = vec![usize::MAX; n];
        for (i, &v) in self.order.iter().enumerate() {
            pos[v] = i;
        }
        pos
    }
}

/// Undirected moral graph: arcs plus edges between co-parents.
pub fn moral_graph(net: &Network) -> Vec<BTreeSet<usize>> {
    let mut adj = vec![BTreeSet::new(); net.len()];
    for v in 0..net.len() {
        let family: Vec<usize> = net.parents(v).iter().copied().chain([v]).collect();
        for (i, &a) in family.iter().enumerate() {
            for &b in &family[i + 1..] {
                adj[a].insert(b);
                adj[b].insert(a);
            }
        }
    }
    adj
}

fn fill_in(graph: &[BTreeSet<usize>], v: usize) -> usize {
    let nbrs: Vec<usize> = graph[v].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nbrs.iter().enumerate() {
        missing += nbrs[i + 1..]
            .iter()
            .filter(|b| !graph[a].contains(b))
            .count();
    }
    missing
}

fn eliminate(graph: &mut [BTreeSet<usize>], v: usize) {
    let nbrs: Vec<usize> = std::mem::take(&mut graph[v]).into_iter().collect();
    for &a in &nbrs {
        graph[a].remove(&v);
        for &b in &nbrs {
            if a != b {
                graph[a].insert(b);
            }
        }
    }
}

/// Greedy min-fill ordering; ties go to the earliest declared variable.
pub fn min_fill_order(net: &Network) -> EliminationOrder {
    let n = net.len();
    let mut graph = moral_graph(net);
    let mut alive = vec![true; n];
    let mut order = Vec::with_capacity(n);
    let mut width = 0;
    for _ in 0..n {
        let v = (0..n)
            .filter(|&v| alive[v])
            .min_by_key(|&v| (fill_in(&graph, v), v))
            .expect("a live vertex remains");
        width = width.max(graph[v].len());
        eliminate(&mut graph, v);
        alive[v] = false;
        order.push(v);
    }
    EliminationOrder {
        order,
        induced_width: width,
    }
}
