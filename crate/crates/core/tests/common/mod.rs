//! Independent brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;

use nonconvex_minimax::mesh::Space;

/// Connected components of the induced subgraph, by breadth-first search.
pub fn bfs_component_count(space: &Space, flags: &[bool]) -> usize {
    let mut seen = vec![false; space.len()];
    let mut count = 0;
    for start in 0..space.len() {
        if !flags[start] || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &k in space.neighbors(i) {
                if flags[k] && !seen[k] {
                    seen[k] = true;
                    queue.push_back(k);
                }
            }
        }
    }
    count
}

/// Maximal runs of consecutive `true` entries.
pub fn run_count(flags: &[bool]) -> usize {
    let mut count = 0;
    let mut prev = false;
    for &f in flags {
        if f && !prev {
            count += 1;
        }
        prev = f;
    }
    count
}

/// `(max_j min_i, min_i max_j)` by direct double loops.
pub fn brute_gap(rows: &[Vec<f64>]) -> (f64, f64) {
    let cols = rows[0].len();
    let mut sup_inf = f64::NEG_INFINITY;
    for j in 0..cols {
        let mut m = f64::INFINITY;
        for r in rows {
            m = m.min(r[j]);
        }
        sup_inf = sup_inf.max(m);
    }
    let mut inf_sup = f64::INFINITY;
    for r in rows {
        let mut m = f64::NEG_INFINITY;
        for &v in r {
            m = m.max(v);
        }
        inf_sup = inf_sup.min(m);
    }
    (sup_inf, inf_sup)
}

/// Indices of exact maxima of a row.
pub fn exact_argmax(row: &[f64]) -> Vec<usize> {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..row.len()).filter(|&j| row[j] == m).collect()
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn rel_err(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}
