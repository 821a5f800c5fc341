//! Bandwidth-reducing orderings.

use std::collections::VecDeque;

use crate::linalg::sparse::SparseMatrix;

/// Unknown ordering applied before a banded factorization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Ordering {
    Natural,
    /// Reverse Cuthill-McKee on the symmetrized pattern.
    #[default]
    ReverseCuthillMcKee,
}

/// Returns `perm` with `perm[new] = old`.
pub fn compute_ordering(m: &SparseMatrix, ordering: Ordering) -> Vec<usize> {
    match ordering {
        Ordering::Natural => (0..m.nrows()).collect(),
        Ordering::ReverseCuthillMcKee => {
            let rcm = reverse_cuthill_mckee(&symmetric_adjacency(m));
            let natural: Vec<usize> = (0..m.nrows()).collect();
            let width = |p: &[usize]| {
                let (kl, ku) = bandwidths(m, p);
                kl + ku
            };
            // keep the given numbering when it is already at least as narrow
            if width(&natural) <= width(&rcm) {
                natural
            } else {
                rcm
            }
        }
    }
}

/// Adjacency lists of the pattern of `M + M^T`, without self loops.
pub fn symmetric_adjacency(m: &SparseMatrix) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for &j in m.row(i).0 {
            if i != j {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

fn bfs_levels(adj: &[Vec<usize>], start: usize, level: &mut [usize], stamp: &mut [usize], tag: usize) -> (usize, Vec<usize>) {
    let mut queue = VecDeque::new();
    let mut last_level = Vec::new();
    let mut depth = 0;
    stamp[start] = tag;
    level[start] = 0;
    queue.push_back(start);
    while let Some(v) = queue.pop_front() {
        if level[v] > depth {
            depth = level[v];
            last_level.clear();
        }
        if level[v] == depth {
            last_level.push(v);
        }
        for &w in &adj[v] {
            if stamp[w] != tag {
                stamp[w] = tag;
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    (depth, last_level)
}

/// Pseudo-peripheral node of the component containing `start`
/// (George-Liu iteration).
fn pseudo_peripheral(adj: &[Vec<usize>], start: usize, level: &mut [usize], stamp: &mut [usize], tag: &mut usize) -> usize {
    let mut root = start;
    *tag += 1;
    let (mut ecc, mut last) = bfs_levels(adj, root, level, stamp, *tag);
    loop {
        let cand = *last
            .iter()
            .min_by_key(|&&v| (adj[v].len(), v))
            .expect("non-empty level");
        *tag += 1;
        let (e, l) = bfs_levels(adj, cand, level, stamp, *tag);
        if e > ecc {
            root = cand;
            ecc = e;
            last = l;
        } else {
            return root;
        }
    }
}

pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    let mut level = vec![0usize; n];
    let mut stamp = vec![0usize; n];
    let mut tag = 0usize;
    let mut nbrs = Vec::new();
    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        let root = pseudo_peripheral(adj, seed, &mut level, &mut stamp, &mut tag);
        visited[root] = true;
        let mut head = order.len();
        order.push(root);
        while head < order.len() {
            let v = order[head];
            head += 1;
            nbrs.clear();
            nbrs.extend(adj[v].iter().copied().filter(|&w| !visited[w]));
            nbrs.sort_by_key(|&w| (adj[w].len(), w));
            for &w in &nbrs {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

/// Lower and upper bandwidth of `M` under the permutation `perm`
/// (`perm[new] = old`).
pub fn bandwidths(m: &SparseMatrix, perm: &[usize]) -> (usize, usize) {
    let mut inv = vec![0usize; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let (mut kl, mut ku) = (0, 0);
    for i in 0..m.nrows() {
        let pi = inv[i];
        for &j in m.row(i).0 {
            let pj = inv[j];
            if pi > pj {
                kl = kl.max(pi - pj);
            } else {
                ku = ku.max(pj - pi);
            }
        }
    }
    (kl, ku)
}
