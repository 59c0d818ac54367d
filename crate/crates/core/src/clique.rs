//! Exact maximum clique on small graphs.
//!
//! Branch and bound over word bitsets with pivoting: only vertices outside
//! the pivot's neighbourhood are branched on, and a branch is cut once
//! `|clique| + |candidates|` cannot beat the incumbent. A second pass
//! returns the lexicographically smallest clique of the optimal size.

#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut b = Bits::empty(n);
        for v in 0..n {
            b.insert(v);
        }
        b
    }

    fn insert(&mut self, v: usize) {
        self.0[v / 64] |= 1 << (v % 64);
    }

    fn remove(&mut self, v: usize) {
        self.0[v / 64] &= !(1 << (v % 64));
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn and_not(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & !b).collect())
    }

    /// Members in ascending order.
    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(i * 64 + t)
            })
        })
    }
}

struct Graph {
    neighbours: Vec<Bits>,
}

impl Graph {
    fn new(adjacency: &[Vec<bool>]) -> Self {
        let n = adjacency.len();
        let neighbours = adjacency
            .iter()
            .enumerate()
            .map(|(u, row)| {
                let mut b = Bits::empty(n);
                for (v, &adj) in row.iter().enumerate() {
                    if adj && u != v {
                        b.insert(v);
                    }
                }
                b
            })
            .collect();
        Graph { neighbours }
    }

    fn max_size(&self, size: usize, mut candidates: Bits, best: &mut usize) {
        if candidates.is_empty() {
            *best = (*best).max(size);
            return;
        }
        if size + candidates.count() <= *best {
            return;
        }
        let pivot = candidates
            .iter()
            .max_by_key(|&u| (candidates.and(&self.neighbours[u]).count(), std::cmp::Reverse(u)))
            .expect("candidates non-empty");
        let branch = candidates.and_not(&self.neighbours[pivot]);
        for v in branch.iter() {
            if size + candidates.count() <= *best {
                return;
            }
            self.max_size(size + 1, candidates.and(&self.neighbours[v]), best);
            candidates.remove(v);
        }
    }

    /// First clique of exactly `target` vertices in lexicographic order.
    fn first_of_size(&self, clique: &mut Vec<usize>, candidates: Bits, target: usize) -> bool {
        if clique.len() == target {
            return true;
        }
        let mut remaining = candidates;
        for v in remaining.clone().iter() {
            if clique.len() + remaining.count() < target {
                return false;
            }
            remaining.remove(v);
            clique.push(v);
            if self.first_of_size(clique, remaining.and(&self.neighbours[v]), target) {
                return true;
            }
            clique.pop();
        }
        false
    }
}

/// A maximum clique of the graph with the given symmetric adjacency
/// matrix (diagonal ignored), lexicographically smallest among all maximum
/// cliques. Empty graphs give an empty clique.
pub fn maximum_clique(adjacency: &[Vec<bool>]) -> Vec<usize> {
    let n = adjacency.len();
    if n == 0 {
        return Vec::new();
    }
    let graph = Graph::new(adjacency);
    let mut best = 1;
    graph.max_size(0, Bits::full(n), &mut best);
    let mut clique = Vec::with_capacity(best);
    let found = graph.first_of_size(&mut clique, Bits::full(n), best);
    debug_assert!(found);
    clique
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Enumerates all vertex subsets; returns (size, lexicographically smallest witness).
    fn brute_force(adj: &[Vec<bool>]) -> Vec<usize> {
        let n = adj.len();
        let mut best: Vec<usize> = Vec::new();
        for mask in 1u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
            let is_clique = set
                .iter()
                .all(|&u| set.iter().all(|&v| u == v || adj[u][v]));
            if is_clique && (set.len() > best.len() || (set.len() == best.len() && set < best)) {
                best = set;
            }
        }
        best
    }

    fn graph_strategy() -> impl Strategy<Value = Vec<Vec<bool>>> {
        (1usize..11).prop_flat_map(|n| {
            proptest::collection::vec(proptest::bool::weighted(0.5), n * n).prop_map(move |bits| {
                let mut adj = vec![vec![false; n]; n];
                for u in 0..n {
                    for v in u + 1..n {
                        adj[u][v] = bits[u * n + v];
                        adj[v][u] = bits[u * n + v];
                    }
                }
                adj
            })
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force(adj in graph_strategy()) {
            prop_assert_eq!(maximum_clique(&adj), brute_force(&adj));
        }
    }

    #[test]
    fn small_cases() {
        assert_eq!(maximum_clique(&[]), Vec::<usize>::new());
        assert_eq!(maximum_clique(&vec![vec![false; 4]; 4]), vec![0]);
        let complete = vec![vec![true; 3]; 3];
        assert_eq!(maximum_clique(&complete), vec![0, 1, 2]);
        // a∥c, b∥d
        let mut adj = vec![vec![false; 4]; 4];
        for (u, v) in [(0, 2), (1, 3)] {
            adj[u][v] = true;
            adj[v][u] = true;
        }
        assert_eq!(maximum_clique(&adj), vec![0, 2]);
    }

    #[test]
    fn wide_graphs_cross_word_boundaries() {
        // Complete 3-partite graph on 150 vertices: max clique 3, one per part.
        let n = 150;
        let adj: Vec<Vec<bool>> = (0..n)
            .map(|u| (0..n).map(|v| u % 3 != v % 3).collect())
            .collect();
        assert_eq!(maximum_clique(&adj), vec![0, 1, 2]);
    }
}
