//! Shared test oracles, all independent of the library's search code:
//! exhaustive DFS path enumeration, BFS distances, unit-capacity max-flow,
//! seeded random connected graphs, and the hand-encoded worked-example graph.

#![allow(dead_code)]

use jellyroute::rng::{det_rng, DetRng};
use jellyroute::topology::{Graph, SwitchId};
use rand::Rng;

/// The worked example: one 3-hop and six 4-hop routes from 0 (S1) to 9 (D1).
/// Ids: S1=0 A=1 B=2 C=3 E=4 F=5 G=6 H=7 I=8 D1=9.
pub fn example_graph() -> Graph {
    Graph::from_edges(
        10,
        &[
            (0, 1),
            (0, 2),
            (0, 3),
            (1, 4),
            (1, 6),
            (2, 4),
            (3, 5),
            (4, 6),
            (4, 7),
            (5, 7),
            (5, 8),
            (6, 9),
            (7, 9),
            (8, 9),
        ],
    )
    .unwrap()
}

/// Every loopless path from src to dst by depth-first enumeration, sorted by
/// length. Only usable on small, sparse graphs.
pub fn exhaustive_simple_paths(g: &Graph, src: SwitchId, dst: SwitchId) -> Vec<Vec<SwitchId>> {
    let mut out = Vec::new();
    let mut visited = vec![false; g.n()];
    let mut stack = vec![src];
    visited[src as usize] = true;
    dfs(g, dst, &mut stack, &mut visited, &mut out);
    out.sort_by_key(|p| (p.len(), p.clone()));
    out
}

fn dfs(
    g: &Graph,
    dst: SwitchId,
    stack: &mut Vec<SwitchId>,
    visited: &mut Vec<bool>,
    out: &mut Vec<Vec<SwitchId>>,
) {
    let here = *stack.last().unwrap();
    if here == dst {
        out.push(stack.clone());
        return;
    }
    for &next in g.neighbors(here) {
        if !visited[next as usize] {
            visited[next as usize] = true;
            stack.push(next);
            dfs(g, dst, stack, visited, out);
            stack.pop();
            visited[next as usize] = false;
        }
    }
}

/// Maximum number of edge-disjoint undirected paths between src and dst:
/// BFS augmenting paths on a unit-capacity residual network (each undirected
/// edge carries one unit in either direction, not both).
pub fn max_edge_disjoint_paths(g: &Graph, src: SwitchId, dst: SwitchId) -> usize {
    let n = g.n();
    // cap[(u,v)] as a dense matrix: 1 unit per direction of each edge.
    let mut cap = vec![0i8; n * n];
    for u in 0..n as u32 {
        for &v in g.neighbors(u) {
            cap[u as usize * n + v as usize] = 1;
        }
    }
    let mut flow = 0;
    loop {
        // BFS for an augmenting path in the residual graph.
        let mut pred = vec![usize::MAX; n];
        pred[src as usize] = src as usize;
        let mut queue = std::collections::VecDeque::from([src as usize]);
        'search: while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if pred[v] == usize::MAX && cap[u * n + v] > 0 {
                    pred[v] = u;
                    if v == dst as usize {
                        break 'search;
                    }
                    queue.push_back(v);
                }
            }
        }
        if pred[dst as usize] == usize::MAX {
            return flow;
        }
        let mut v = dst as usize;
        while v != src as usize {
            let u = pred[v];
            cap[u * n + v] -= 1;
            cap[v * n + u] += 1;
            v = u;
        }
        flow += 1;
    }
}

/// A random connected simple graph on up to `max_n` switches, by sprinkling
/// edges over a random spanning tree.
pub fn random_connected_graph(rng: &mut DetRng, max_n: usize) -> Graph {
    let n = rng.gen_range(4..=max_n);
    let mut edges: Vec<(SwitchId, SwitchId)> = Vec::new();
    for v in 1..n as u32 {
        let u = rng.gen_range(0..v);
        edges.push((u, v));
    }
    // Sparse extras keep exhaustive enumeration tractable.
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let u = rng.gen_range(0..n as u32);
        let v = rng.gen_range(0..n as u32);
        if u != v && !edges.contains(&(u, v)) && !edges.contains(&(v, u)) {
            edges.push((u, v));
        }
    }
    Graph::from_edges(n, &edges).expect("tree plus extras is connected")
}

pub fn seeded(seed: u64) -> DetRng {
    det_rng(seed)
}
