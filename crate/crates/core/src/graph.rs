use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

/// Strongly connected components of a graph on `0..n`.
///
/// Returns the component id of every node; ids are dense and otherwise
/// arbitrary.
pub(crate) fn scc_ids(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<usize> {
    let mut g = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (u, v) in edges {
        g.add_edge(nodes[u], nodes[v], ());
    }
    let mut ids = vec![0; n];
    for (id, comp) in tarjan_scc(&g).into_iter().enumerate() {
        for node in comp {
            ids[node.index()] = id;
        }
    }
    ids
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cycles_and_a_tail() {
        let ids = scc_ids(5, [(0, 1), (1, 0), (1, 2), (2, 3), (3, 2), (4, 4)]);
        assert_eq!(ids[0], ids[1]);
        assert_eq!(ids[2], ids[3]);
        assert_ne!(ids[0], ids[2]);
        assert_ne!(ids[4], ids[0]);
    }
}
