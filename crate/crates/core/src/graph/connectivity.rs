use super::{NodeId, Topology};

pub fn is_connected(t: &Topology) -> bool {
    let n = t.node_count();
    if n == 0 {
        return false;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &(v, _) in t.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// True iff `t` is connected and has no articulation node. For `|N| >= 3` this implies that no
/// single node or link failure disconnects the graph.
pub fn is_two_connected(t: &Topology) -> bool {
    let n = t.node_count();
    if !is_connected(t) {
        return false;
    }
    if n <= 2 {
        return true;
    }

    // Iterative DFS computing low-points; an articulation node either is the root with more
    // than one DFS child, or has a child whose subtree cannot reach above it.
    const UNSEEN: usize = usize::MAX;
    let mut disc = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut parent: Vec<Option<NodeId>> = vec![None; n];
    let mut next_edge = vec![0usize; n];
    let mut time = 0;
    let mut root_children = 0;

    disc[0] = 0;
    low[0] = 0;
    let mut stack = vec![0];
    while let Some(&u) = stack.last() {
        if let Some(&(v, _)) = t.neighbors(u).get(next_edge[u]) {
            next_edge[u] += 1;
            if disc[v] == UNSEEN {
                time += 1;
                disc[v] = time;
                low[v] = time;
                parent[v] = Some(u);
                if u == 0 {
                    root_children += 1;
                }
                stack.push(v);
            } else if parent[u] != Some(v) {
                low[u] = low[u].min(disc[v]);
            }
        } else {
            stack.pop();
            if let Some(p) = parent[u] {
                low[p] = low[p].min(low[u]);
                if parent[p].is_some() && low[u] >= disc[p] {
                    return false;
                }
            }
        }
    }
    root_children < 2
}
