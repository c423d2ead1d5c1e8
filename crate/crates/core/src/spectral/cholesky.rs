//! Reverse Cuthill–McKee ordering and skyline (profile) Cholesky, the
//! factorization backend for the shift-invert eigensolver.

use super::SpectralError;

/// Reverse Cuthill–McKee permutation of an undirected graph given as sorted
/// neighbor lists. Returns `perm` with `perm[new] = old`. Each connected
/// component is ordered from a pseudo-peripheral start vertex.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];

    // Stable scan by (degree, index) so disconnected pieces start small.
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&v| (adj[v].len(), v));

    let mut frontier = Vec::new();
    for &seed in &by_degree {
        if visited[seed] {
            continue;
        }
        let start = pseudo_peripheral(adj, seed);
        visited[start] = true;
        frontier.clear();
        frontier.push(start);
        let comp_begin = order.len();
        order.push(start);
        let mut head = 0;
        while head < frontier.len() {
            let v = frontier[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !visited[u]).collect();
            next.sort_by_key(|&u| (adj[u].len(), u));
            for u in next {
                if !visited[u] {
                    visited[u] = true;
                    frontier.push(u);
                    order.push(u);
                }
            }
        }
        order[comp_begin..].reverse();
    }
    order
}

/// Endpoint of a repeated BFS: a vertex of maximal eccentricity estimate.
fn pseudo_peripheral(adj: &[Vec<usize>], seed: usize) -> usize {
    let mut start = seed;
    let mut depth = 0usize;
    for _ in 0..4 {
        let (far, d) = bfs_farthest(adj, start);
        if d <= depth {
            break;
        }
        depth = d;
        start = far;
    }
    start
}

fn bfs_farthest(adj: &[Vec<usize>], start: usize) -> (usize, usize) {
    let n = adj.len();
    let mut dist = vec![usize::MAX; n];
    dist[start] = 0;
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(start);
    let mut far = start;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                if (dist[u], u) > (dist[far], far) {
                    far = u;
                }
                queue.push_back(u);
            }
        }
    }
    // Among the farthest, prefer minimal degree (classic heuristic).
    let dmax = dist[far];
    let mut best = far;
    for v in 0..n {
        if dist[v] == dmax && adj[v].len() < adj[best].len() {
            best = v;
        }
    }
    (best, dmax)
}

/// Cholesky factor of a symmetric positive definite matrix in skyline
/// storage: row `i` holds columns `first[i] ..= i` contiguously.
pub struct SkylineCholesky {
    n: usize,
    first: Vec<usize>,
    offsets: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    /// Factors the matrix given by symmetric `entries` (both triangles or
    /// lower only; duplicates are summed). Entry indices must already be in
    /// the target ordering.
    pub fn factor(
        n: usize,
        entries: impl Iterator<Item = (usize, usize, f64)>,
    ) -> Result<Self, SpectralError> {
        let mut first: Vec<usize> = (0..n).collect();
        let mut lower: Vec<(usize, usize, f64)> = Vec::new();
        for (r, c, v) in entries {
            let (i, j) = if r >= c { (r, c) } else { (c, r) };
            first[i] = first[i].min(j);
            lower.push((i, j, v));
        }
        let mut offsets = vec![0usize; n + 1];
        for i in 0..n {
            offsets[i + 1] = offsets[i] + (i - first[i] + 1);
        }
        let mut data = vec![0.0; offsets[n]];
        for (i, j, v) in lower {
            data[offsets[i] + (j - first[i])] += v;
        }

        // In-place factorization; fill stays inside the profile.
        for i in 0..n {
            for j in first[i]..=i {
                let lo = first[i].max(first[j]);
                let mut sum = data[offsets[i] + (j - first[i])];
                for t in lo..j {
                    sum -= data[offsets[i] + (t - first[i])] * data[offsets[j] + (t - first[j])];
                }
                if j < i {
                    data[offsets[i] + (j - first[i])] = sum / data[offsets[j] + (j - first[j])];
                } else {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(SpectralError::FactorizationFailed { pivot: i });
                    }
                    data[offsets[i] + (i - first[i])] = sum.sqrt();
                }
            }
        }
        Ok(Self {
            n,
            first,
            offsets,
            data,
        })
    }

    /// Solves `L Lᵀ x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let mut sum = b[i];
            for t in self.first[i]..i {
                sum -= self.data[self.offsets[i] + (t - self.first[i])] * b[t];
            }
            b[i] = sum / self.data[self.offsets[i] + (i - self.first[i])];
        }
        for i in (0..self.n).rev() {
            let x = b[i] / self.data[self.offsets[i] + (i - self.first[i])];
            b[i] = x;
            for t in self.first[i]..i {
                b[t] -= self.data[self.offsets[i] + (t - self.first[i])] * x;
            }
        }
    }
}
