//! Reverse Cuthill-McKee ordering to keep fill-in low in the LDL^T factors.

use super::CsrMatrix;

/// Returns `perm` with `perm[new] = old`, computed per connected component
/// from a pseudo-peripheral start node.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|r| a.row(r).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(a, seed);
        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let mut nbrs: Vec<usize> = a
                .row(u)
                .0
                .iter()
                .copied()
                .filter(|&v| v != u && !visited[v])
                .collect();
            nbrs.sort_by_key(|&v| (degree[v], v));
            for v in nbrs {
                if !visited[v] {
                    visited[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }
    order.reverse();
    order
}

fn pseudo_peripheral(a: &CsrMatrix, seed: usize) -> usize {
    let mut start = seed;
    let mut eccentricity = 0;
    for _ in 0..4 {
        let (far, ecc) = bfs_farthest(a, start);
        if ecc <= eccentricity {
            break;
        }
        eccentricity = ecc;
        start = far;
    }
    start
}

fn bfs_farthest(a: &CsrMatrix, start: usize) -> (usize, usize) {
    let n = a.nrows();
    let mut level = vec![usize::MAX; n];
    level[start] = 0;
    let mut queue = std::collections::VecDeque::from([start]);
    let mut last = start;
    while let Some(u) = queue.pop_front() {
        last = u;
        for &v in a.row(u).0 {
            if level[v] == usize::MAX {
                level[v] = level[u] + 1;
                queue.push_back(v);
            }
        }
    }
    // prefer the lowest-degree vertex in the last level for determinism
    let far_level = level[last];
    let best = (0..n)
        .filter(|&v| level[v] == far_level)
        .min_by_key(|&v| (a.row(v).0.len(), v))
        .unwrap_or(last);
    (best, far_level)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rcm_is_a_permutation() {
        // path graph 0-1-2-3-4 listed out of order
        let mut triplets = Vec::new();
        for (u, v) in [(0, 3), (3, 1), (1, 4), (4, 2)] {
            triplets.push((u, v, 1.0));
            triplets.push((v, u, 1.0));
        }
        for i in 0..5 {
            triplets.push((i, i, 1.0));
        }
        let a = CsrMatrix::from_triplets(5, 5, triplets);
        let perm = reverse_cuthill_mckee(&a);
        let mut sorted = perm.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2, 3, 4]);
        // bandwidth of the permuted path must be 1
        let pa = a.permute_symmetric(&perm);
        let mut bw = 0usize;
        for r in 0..5 {
            for &c in pa.row(r).0 {
                bw = bw.max(r.abs_diff(c));
            }
        }
        assert_eq!(bw, 1);
    }
}
