//! Approximate minimum degree ordering on the quotient graph.
//!
//! A compact variant of the classical AMD scheme: eliminated variables
//! become elements, element lists are absorbed when covered, and degrees are
//! refreshed with the usual approximate external-degree bound. No
//! supervariable detection; the grids assembled in this crate are small
//! enough that it does not matter.

use std::collections::BTreeSet;

/// Returns `perm` such that `perm[k]` is the original index eliminated at
/// step `k`. The input is the pattern of a structurally symmetric matrix
/// given as adjacency lists (diagonal entries are ignored).
pub fn amd_order(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    // variable -> adjacent variables / adjacent elements
    let mut avars: Vec<Vec<usize>> = adj
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r: Vec<usize> = row.iter().copied().filter(|&j| j != i).collect();
            r.sort_unstable();
            r.dedup();
            r
        })
        .collect();
    let mut aelems: Vec<Vec<usize>> = vec![Vec::new(); n];
    // element -> variables (indexed by the pivot that created it)
    let mut evars: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut eliminated = vec![false; n];
    let mut absorbed = vec![false; n];
    let mut degree: Vec<usize> = avars.iter().map(|r| r.len()).collect();
    let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (degree[i], i)).collect();
    let mut mark = vec![usize::MAX; n];
    let mut wmark = vec![usize::MAX; n];
    let mut w = vec![0usize; n];
    let mut perm = Vec::with_capacity(n);
    let mut live = n;

    while let Some((_, p)) = queue.pop_first() {
        perm.push(p);
        eliminated[p] = true;
        live -= 1;
        let stamp = perm.len();

        // Lp = A_p ∪ (∪ L_e for e in E_p) \ {p}
        let mut lp: Vec<usize> = Vec::new();
        mark[p] = stamp;
        for &j in &avars[p] {
            if !eliminated[j] && mark[j] != stamp {
                mark[j] = stamp;
                lp.push(j);
            }
        }
        for &e in &aelems[p] {
            if absorbed[e] {
                continue;
            }
            for &j in &evars[e] {
                if !eliminated[j] && mark[j] != stamp {
                    mark[j] = stamp;
                    lp.push(j);
                }
            }
            absorbed[e] = true;
            evars[e] = Vec::new();
        }
        avars[p] = Vec::new();
        aelems[p] = Vec::new();

        // external element sizes |L_e \ Lp| for elements touching Lp
        for &j in &lp {
            for &e in &aelems[j] {
                if absorbed[e] {
                    continue;
                }
                if wmark[e] != stamp {
                    wmark[e] = stamp;
                    evars[e].retain(|&v| !eliminated[v]);
                    w[e] = evars[e].len();
                }
                w[e] = w[e].saturating_sub(1);
            }
        }

        let lp_len = lp.len();
        for &j in &lp {
            // prune: variables in Lp are now reached through element p
            avars[j].retain(|&v| !eliminated[v] && mark[v] != stamp);
            aelems[j].retain(|&e| !absorbed[e]);
            let mut ext = 0usize;
            let mut keep = Vec::with_capacity(aelems[j].len() + 1);
            for &e in &aelems[j] {
                if wmark[e] == stamp && w[e] == 0 {
                    // covered by Lp: aggressive absorption
                    absorbed[e] = true;
                    evars[e] = Vec::new();
                    continue;
                }
                ext += if wmark[e] == stamp {
                    w[e]
                } else {
                    evars[e].len()
                };
                keep.push(e);
            }
            keep.push(p);
            aelems[j] = keep;
            let old = degree[j];
            let bound = [
                live.saturating_sub(1),
                old + lp_len - 1,
                avars[j].len() + lp_len - 1 + ext,
            ]
            .into_iter()
            .min()
            .unwrap();
            queue.remove(&(old, j));
            degree[j] = bound;
            queue.insert((bound, j));
        }
        evars[p] = lp;
    }
    perm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_adj(nx: usize, ny: usize) -> Vec<Vec<usize>> {
        let id = |i: usize, j: usize| i * ny + j;
        let mut adj = vec![Vec::new(); nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                if i + 1 < nx {
                    adj[id(i, j)].push(id(i + 1, j));
                    adj[id(i + 1, j)].push(id(i, j));
                }
                if j + 1 < ny {
                    adj[id(i, j)].push(id(i, j + 1));
                    adj[id(i, j + 1)].push(id(i, j));
                }
            }
        }
        adj
    }

    #[test]
    fn is_permutation() {
        let adj = grid_adj(13, 7);
        let mut p = amd_order(&adj);
        p.sort_unstable();
        assert_eq!(p, (0..91).collect::<Vec<_>>());
    }

    #[test]
    fn path_graph_orders_leaves_first() {
        let adj = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let p = amd_order(&adj);
        assert!(p[0] == 0 || p[0] == 3);
    }
}
