//! Structural analysis of a validated pairwise-comparison matrix: equality
//! quotient, transitivity checks, width through a minimum chain cover, and
//! covering (Hasse) edges.

use super::Comparison;
use crate::{Error, Result};

/// Equality classes plus the strict order between them.
pub(super) struct Quotient {
    /// Class index of each member.
    pub class_of: Vec<usize>,
    /// Member indices per class, each sorted ascending.
    pub classes: Vec<Vec<usize>>,
    /// `below[a][b]` iff class `a` sits strictly below class `b`; validated
    /// transitive and antisymmetric.
    pub below: Vec<Vec<bool>>,
}

fn find(parent: &mut Vec<usize>, x: usize) -> usize {
    if parent[x] != x {
        let root = find(parent, parent[x]);
        parent[x] = root;
    }
    parent[x]
}

/// Validates the comparison matrix and folds equal members into classes.
///
/// Rejects matrices that are not flip-symmetric, whose equality relation is
/// not transitive, whose equal members relate differently to a third member,
/// or whose strict order is intransitive.
pub(super) fn build_quotient(
    names: &[String],
    relation: &[Vec<Comparison>],
) -> Result<Quotient> {
    let n = names.len();
    if relation.len() != n || relation.iter().any(|row| row.len() != n) {
        return Err(Error::NotSquare {
            rows: relation.len(),
            cols: relation.first().map_or(0, |row| row.len()),
        });
    }
    for (i, row) in relation.iter().enumerate() {
        if row[i] != Comparison::Equal {
            return Err(Error::Numerical(format!(
                "member {} does not compare equal to itself",
                names[i]
            )));
        }
        for (j, &cmp) in row.iter().enumerate() {
            if relation[j][i] != cmp.flip() {
                return Err(Error::Numerical(format!(
                    "comparison of {} and {} is not consistent with its reverse",
                    names[i], names[j]
                )));
            }
        }
    }

    // Equality must be transitive before it can be quotiented out.
    for i in 0..n {
        for j in 0..n {
            if relation[i][j] != Comparison::Equal {
                continue;
            }
            for k in 0..n {
                if relation[j][k] == Comparison::Equal
                    && relation[i][k] != Comparison::Equal
                {
                    return Err(Error::InconsistentEquality {
                        i: names[i].clone(),
                        j: names[j].clone(),
                        k: names[k].clone(),
                    });
                }
            }
        }
    }

    let mut parent: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            if relation[i][j] == Comparison::Equal {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[rj] = ri;
                }
            }
        }
    }
    let mut class_of = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for x in 0..n {
        let root = find(&mut parent, x);
        if class_of[root] == usize::MAX {
            class_of[root] = classes.len();
            classes.push(Vec::new());
        }
        class_of[x] = class_of[root];
        classes[class_of[x]].push(x);
    }
    let c = classes.len();

    // Equal members must agree on how they compare to everything else.
    for class in &classes {
        let lead = class[0];
        for &other in &class[1..] {
            for k in 0..n {
                if class_of[k] == class_of[lead] {
                    continue;
                }
                if relation[lead][k] != relation[other][k] {
                    return Err(Error::InconsistentEquality {
                        i: names[lead].clone(),
                        j: names[other].clone(),
                        k: names[k].clone(),
                    });
                }
            }
        }
    }

    let mut below = vec![vec![false; c]; c];
    for a in 0..c {
        for b in 0..c {
            if a != b {
                below[a][b] = relation[classes[a][0]][classes[b][0]] == Comparison::Below;
            }
        }
    }

    // The strict order must already be transitively closed.
    for a in 0..c {
        for b in 0..c {
            if !below[a][b] {
                continue;
            }
            for d in 0..c {
                if below[b][d] && !below[a][d] {
                    let outcome = relation[classes[a][0]][classes[d][0]];
                    return Err(Error::IntransitiveRelation {
                        i: names[classes[a][0]].clone(),
                        j: names[classes[b][0]].clone(),
                        k: names[classes[d][0]].clone(),
                        outcome: format!("{outcome:?}").to_lowercase(),
                    });
                }
            }
        }
    }

    Ok(Quotient {
        class_of,
        classes,
        below,
    })
}

fn try_augment(
    u: usize,
    adj: &[Vec<usize>],
    seen: &mut [bool],
    match_r: &mut [Option<usize>],
) -> bool {
    for &v in &adj[u] {
        if seen[v] {
            continue;
        }
        seen[v] = true;
        let free = match match_r[v] {
            None => true,
            Some(w) => try_augment(w, adj, seen, match_r),
        };
        if free {
            match_r[v] = Some(u);
            return true;
        }
    }
    false
}

/// Width of the class-level order and one maximum antichain (class indices).
///
/// The strict order is split into a bipartite graph (each class providing a
/// left and a right copy, edges along the transitively closed order); a
/// minimum chain cover has size `c - matching`, and the complement of the
/// minimum vertex cover recovers an antichain of exactly that size.
pub(super) fn width_and_antichain(below: &[Vec<bool>]) -> Result<(usize, Vec<usize>)> {
    let c = below.len();
    let adj: Vec<Vec<usize>> = (0..c)
        .map(|a| (0..c).filter(|&b| below[a][b]).collect())
        .collect();

    let mut match_r: Vec<Option<usize>> = vec![None; c];
    let mut matching = 0usize;
    for u in 0..c {
        let mut seen = vec![false; c];
        if try_augment(u, &adj, &mut seen, &mut match_r) {
            matching += 1;
        }
    }
    let width = c - matching;

    let mut match_l: Vec<Option<usize>> = vec![None; c];
    for (v, m) in match_r.iter().enumerate() {
        if let Some(u) = *m {
            match_l[u] = Some(v);
        }
    }

    // Alternating reachability from unmatched left copies; the uncovered
    // vertices on both sides mark the antichain.
    let mut visited_l = vec![false; c];
    let mut visited_r = vec![false; c];
    let mut stack: Vec<usize> = (0..c).filter(|&u| match_l[u].is_none()).collect();
    for &u in &stack {
        visited_l[u] = true;
    }
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if visited_r[v] {
                continue;
            }
            visited_r[v] = true;
            if let Some(w) = match_r[v] {
                if !visited_l[w] {
                    visited_l[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    let antichain: Vec<usize> = (0..c)
        .filter(|&a| visited_l[a] && !visited_r[a])
        .collect();

    if antichain.len() != width {
        return Err(Error::Numerical(format!(
            "antichain recovery produced {} classes where the chain cover promises {}",
            antichain.len(),
            width
        )));
    }
    for (pos, &a) in antichain.iter().enumerate() {
        for &b in &antichain[(pos + 1)..] {
            if below[a][b] || below[b][a] {
                return Err(Error::Numerical(
                    "antichain recovery returned comparable classes".into(),
                ));
            }
        }
    }
    Ok((width, antichain))
}

/// Covering pairs of the class-level order: `a` is covered by `b` when
/// nothing sits strictly between them.
pub(super) fn covering_edges(below: &[Vec<bool>]) -> Vec<(usize, usize)> {
    let c = below.len();
    let mut edges = Vec::new();
    for a in 0..c {
        for b in 0..c {
            if !below[a][b] {
                continue;
            }
            let skipped = (0..c).any(|m| below[a][m] && below[m][b]);
            if !skipped {
                edges.push((a, b));
            }
        }
    }
    edges
}

/// Reachability closure of a covering-edge list; lets tests confirm the
/// reduction regenerates the full order.
#[cfg(test)]
pub(super) fn closure_of_edges(c: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; c]; c];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for m in 0..c {
        for a in 0..c {
            for b in 0..c {
                if reach[a][m] && reach[m][b] {
                    reach[a][b] = true;
                }
            }
        }
    }
    reach
}
