//! Maximum spanning arborescences over `(N+1) × (N+1)` score matrices.
//! `scores[[h, d]]` scores the arc h → d; node 0 is ROOT. The diagonal and
//! column 0 are ignored.

use ndarray::Array2;

use crate::error::{Error, Result};

pub type ScoreMatrix = Array2<f64>;

/// Size limit of [`brute_force_arborescence`].
pub const BRUTE_FORCE_MAX: usize = 8;

/// Sum of `scores[[heads[d-1], d]]` over tokens.
pub fn tree_score(scores: &ScoreMatrix, heads: &[usize]) -> f64 {
    heads.iter().enumerate().map(|(i, &h)| scores[[h, i + 1]]).sum()
}

/// Highest-scoring arborescence rooted at 0, any number of root children.
/// Returns heads of tokens 1..=N.
pub fn cle(scores: &ScoreMatrix) -> Vec<usize> {
    let n = scores.nrows();
    assert!(n >= 2 && scores.ncols() == n, "score matrix must be square with at least one token");
    let dense: Vec<Vec<f64>> = (0..n)
        .map(|h| {
            (0..n)
                .map(|d| if d == 0 || d == h { f64::NEG_INFINITY } else { scores[[h, d]] })
                .collect()
        })
        .collect();
    let heads = contract(&dense);
    heads[1..].to_vec()
}

/// Best head for every node (lowest index on ties); entry 0 unused.
fn greedy_heads(s: &[Vec<f64>]) -> Vec<usize> {
    let n = s.len();
    let mut heads = vec![0; n];
    for d in 1..n {
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        let mut found = false;
        for (h, row) in s.iter().enumerate() {
            if h == d {
                continue;
            }
            if !found || row[d] > best {
                best = row[d];
                arg = h;
                found = true;
            }
        }
        heads[d] = arg;
    }
    heads
}

fn find_cycle(heads: &[usize]) -> Option<Vec<usize>> {
    let n = heads.len();
    // 0 = unvisited, 1 = on current path, 2 = done
    let mut state = vec![0u8; n];
    state[0] = 2;
    for start in 1..n {
        let mut path = Vec::new();
        let mut v = start;
        while state[v] == 0 {
            state[v] = 1;
            path.push(v);
            v = heads[v];
        }
        if state[v] == 1 {
            let pos = path.iter().position(|&x| x == v).expect("on path");
            let mut cycle = path[pos..].to_vec();
            cycle.sort_unstable();
            return Some(cycle);
        }
        for p in path {
            state[p] = 2;
        }
    }
    None
}

fn contract(s: &[Vec<f64>]) -> Vec<usize> {
    let n = s.len();
    let heads = greedy_heads(s);
    let Some(cycle) = find_cycle(&heads) else {
        return heads;
    };
    let mut in_cycle = vec![false; n];
    for &v in &cycle {
        in_cycle[v] = true;
    }
    // old index of every kept node; the contracted node goes last
    let kept: Vec<usize> = (0..n).filter(|&v| !in_cycle[v]).collect();
    let m = kept.len() + 1;
    let c = m - 1;
    let mut sub = vec![vec![f64::NEG_INFINITY; m]; m];
    let mut enter = vec![0usize; m];
    let mut leave = vec![0usize; m];
    for (i, &u) in kept.iter().enumerate() {
        for (j, &v) in kept.iter().enumerate() {
            sub[i][j] = s[u][v];
        }
        let mut best = f64::NEG_INFINITY;
        let mut arg = cycle[0];
        for (k, &v) in cycle.iter().enumerate() {
            let gain = s[u][v] - s[heads[v]][v];
            if k == 0 || gain > best {
                best = gain;
                arg = v;
            }
        }
        sub[i][c] = best;
        enter[i] = arg;
        if i > 0 {
            let mut best = f64::NEG_INFINITY;
            let mut arg = cycle[0];
            for (k, &w) in cycle.iter().enumerate() {
                if k == 0 || s[w][u] > best {
                    best = s[w][u];
                    arg = w;
                }
            }
            sub[c][i] = best;
            leave[i] = arg;
        }
    }
    let sub_heads = contract(&sub);

    let mut out = heads.clone();
    for (i, &u) in kept.iter().enumerate().skip(1) {
        out[u] = if sub_heads[i] == c { leave[i] } else { kept[sub_heads[i]] };
    }
    let h = sub_heads[c];
    out[enter[h]] = kept[h];
    out
}

/// Highest-scoring arborescence with exactly one child of ROOT, found by
/// running [`cle`] once per candidate root child. Ties go to the lowest
/// candidate.
pub fn single_root_cle(scores: &ScoreMatrix) -> Vec<usize> {
    let n = scores.nrows() - 1;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for r in 1..=n {
        let mut masked = scores.clone();
        for d in 1..=n {
            if d != r {
                masked[[0, d]] = f64::NEG_INFINITY;
            }
        }
        let heads = cle(&masked);
        let total = tree_score(scores, &heads);
        if best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, heads));
        }
    }
    best.expect("at least one token").1
}

/// True when `heads` (tokens 1..=N) forms a tree rooted at 0.
pub fn is_arborescence(heads: &[usize]) -> bool {
    let n = heads.len();
    (1..=n).all(|start| {
        let mut v = start;
        for _ in 0..=n {
            if v == 0 {
                return true;
            }
            let h = heads[v - 1];
            if h > n || h == v {
                return false;
            }
            v = h;
        }
        false
    })
}

/// Exhaustive search over all head arrays. Ties go to the lexicographically
/// smallest heads array.
pub fn brute_force_arborescence(scores: &ScoreMatrix, single_root: bool) -> Result<Vec<usize>> {
    let n = scores.nrows() - 1;
    if n == 0 {
        return Err(Error::Empty("score matrix"));
    }
    if n > BRUTE_FORCE_MAX {
        return Err(Error::Invalid(format!(
            "brute force is limited to {BRUTE_FORCE_MAX} tokens, got {n}"
        )));
    }
    let mut heads = vec![0usize; n];
    let mut best: Option<(f64, Vec<usize>)> = None;
    loop {
        let valid = heads.iter().enumerate().all(|(i, &h)| h != i + 1)
            && (!single_root || heads.iter().filter(|&&h| h == 0).count() == 1)
            && is_arborescence(&heads);
        if valid {
            let total = tree_score(scores, &heads);
            if best.as_ref().is_none_or(|(b, _)| total > *b) {
                best = Some((total, heads.clone()));
            }
        }
        // odometer increment, last position fastest, so lexicographic order
        let mut pos = n;
        loop {
            if pos == 0 {
                return Ok(best.expect("some arborescence exists").1);
            }
            pos -= 1;
            heads[pos] += 1;
            if heads[pos] <= n {
                break;
            }
            heads[pos] = 0;
        }
    }
}
