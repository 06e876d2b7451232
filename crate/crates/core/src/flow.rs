//! Min-cost transportation by successive shortest paths.

#[derive(Clone, Copy)]
struct Arc {
    to: usize,
    cap: i64,
    cost: i128,
    rev: usize,
}

struct Graph {
    adj: Vec<Vec<Arc>>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: i128) -> (usize, usize) {
        let a = self.adj[from].len();
        let b = self.adj[to].len();
        self.adj[from].push(Arc { to, cap, cost, rev: b });
        self.adj[to].push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
            rev: a,
        });
        (from, a)
    }
}

/// Rows with integer demands, columns with unit capacity. Every row must
/// receive exactly its demand through `edges` (row, column, cost), each
/// column used at most once. Returns the minimum total cost and the indices
/// of the used edges, or `None` when the demands cannot be met.
pub(crate) fn min_cost_transport(
    demands: &[usize],
    n_cols: usize,
    edges: &[(usize, usize, i128)],
) -> Option<(i128, Vec<usize>)> {
    let total: usize = demands.iter().sum();
    if total == 0 {
        return Some((0, Vec::new()));
    }
    let rows = demands.len();
    let source = 0;
    let sink = rows + n_cols + 1;
    let mut g = Graph::new(sink + 1);
    for (r, &d) in demands.iter().enumerate() {
        if d > 0 {
            g.add(source, 1 + r, d as i64, 0);
        }
    }
    let mut col_used = vec![false; n_cols];
    for &(_, c, _) in edges {
        col_used[c] = true;
    }
    for (c, used) in col_used.iter().enumerate() {
        if *used {
            g.add(1 + rows + c, sink, 1, 0);
        }
    }
    let handles: Vec<(usize, usize)> = edges
        .iter()
        .map(|&(r, c, cost)| g.add(1 + r, 1 + rows + c, 1, cost))
        .collect();

    let n = g.adj.len();
    let mut cost_sum: i128 = 0;
    for _ in 0..total {
        // Bellman-Ford (queue based); residual graphs here have no negative cycles.
        let mut dist = vec![i128::MAX; n];
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut in_queue = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        in_queue[source] = true;
        while let Some(u) = queue.pop_front() {
            in_queue[u] = false;
            let du = dist[u];
            for (i, a) in g.adj[u].iter().enumerate() {
                if a.cap > 0 && du + a.cost < dist[a.to] {
                    dist[a.to] = du + a.cost;
                    prev[a.to] = Some((u, i));
                    if !in_queue[a.to] {
                        in_queue[a.to] = true;
                        queue.push_back(a.to);
                    }
                }
            }
        }
        if dist[sink] == i128::MAX {
            return None;
        }
        let mut v = sink;
        while let Some((u, i)) = prev[v] {
            let rev = g.adj[u][i].rev;
            g.adj[u][i].cap -= 1;
            g.adj[v][rev].cap += 1;
            v = u;
        }
        cost_sum += dist[sink];
    }
    let used = handles
        .iter()
        .enumerate()
        .filter(|(_, &(u, i))| g.adj[u][i].cap == 0)
        .map(|(e, _)| e)
        .collect();
    Some((cost_sum, used))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn assignment_picks_cheapest_matching() {
        // rows 0,1 both prefer column 0; optimum sends row 1 to column 0
        let edges = [(0, 0, 1), (0, 1, 2), (1, 0, 1), (1, 1, 10)];
        let (cost, used) = min_cost_transport(&[1, 1], 2, &edges).unwrap();
        assert_eq!(cost, 3);
        assert_eq!(used, vec![1, 2]);
    }

    #[test]
    fn demand_above_one_and_negative_costs() {
        let edges = [(0, 0, -5), (0, 1, -1), (0, 2, 3)];
        let (cost, used) = min_cost_transport(&[2], 3, &edges).unwrap();
        assert_eq!(cost, -6);
        assert_eq!(used, vec![0, 1]);
    }

    #[test]
    fn infeasible() {
        assert!(min_cost_transport(&[2], 1, &[(0, 0, 1)]).is_none());
        assert!(min_cost_transport(&[1, 1], 1, &[(0, 0, 1), (1, 0, 1)]).is_none());
        assert_eq!(min_cost_transport(&[0], 0, &[]), Some((0, vec![])));
    }
}
