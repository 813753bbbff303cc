//! GYO ear removal on hypergraphs given as lists of vertex sets.

/// Computes a join forest of `edges`, returned as a parent pointer per edge.
///
/// An edge `e` is an ear if the vertices it shares with the other remaining
/// edges all lie in one remaining edge `f`; it is then removed with parent `f`
/// (the lowest such index). An edge sharing nothing becomes a root. Returns
/// `None` if the hypergraph is not alpha-acyclic.
///
/// Edges must be sorted and duplicate-free.
pub fn join_forest(edges: &[Vec<usize>]) -> Option<Vec<Option<usize>>> {
    let m = edges.len();
    let n = edges.iter().flatten().copied().max().map_or(0, |v| v + 1);
    // occ[v] = number of alive edges containing v
    let mut occ = vec![0usize; n];
    for e in edges {
        for &v in e {
            occ[v] += 1;
        }
    }
    let mut alive = vec![true; m];
    let mut parent = vec![None; m];
    let mut remaining = m;
    while remaining > 0 {
        let mut removed = None;
        'scan: for e in 0..m {
            if !alive[e] {
                continue;
            }
            let shared: Vec<usize> = edges[e].iter().copied().filter(|&v| occ[v] > 1).collect();
            if shared.is_empty() {
                removed = Some((e, None));
                break;
            }
            for f in 0..m {
                if f != e && alive[f] && is_subset(&shared, &edges[f]) {
                    removed = Some((e, Some(f)));
                    break 'scan;
                }
            }
        }
        let (e, p) = removed?;
        alive[e] = false;
        parent[e] = p;
        remaining -= 1;
        for &v in &edges[e] {
            occ[v] -= 1;
        }
    }
    Some(parent)
}

/// `a ⊆ b` for sorted slices.
pub fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

/// Intersection of sorted slices.
pub fn intersect(a: &[usize], b: &[usize]) -> Vec<usize> {
    a.iter().copied().filter(|x| b.binary_search(x).is_ok()).collect()
}
