#![allow(dead_code)]

use std::collections::BTreeMap;

use dalsa_core::data::{ClassId, SampleTable};
use dalsa_core::forest::TreeNode;
use rand::Rng;

const EPS: f64 = 1e-12;

fn sums(table: &SampleTable, rows: &[usize]) -> BTreeMap<ClassId, f64> {
    let mut m = BTreeMap::new();
    for &r in rows {
        *m.entry(table.labels()[r]).or_insert(0.0) += table.weights()[r];
    }
    m.retain(|_, w| *w > 0.0);
    m
}

fn gini(s: &BTreeMap<ClassId, f64>) -> (f64, f64) {
    let total: f64 = s.values().sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    (
        1.0 - s.values().map(|w| (w / total).powi(2)).sum::<f64>(),
        total,
    )
}

/// Tree grown by trying every feature and every midpoint threshold at each
/// node, with impurities recomputed from scratch for each candidate.
pub fn cart_oracle(table: &SampleTable, max_depth: usize) -> TreeNode {
    let rows: Vec<usize> = (0..table.len()).collect();
    grow(table, &rows, 0, max_depth)
}

fn grow(table: &SampleTable, rows: &[usize], depth: usize, max_depth: usize) -> TreeNode {
    let here = sums(table, rows);
    if depth >= max_depth || here.len() <= 1 || rows.len() < 2 {
        return TreeNode::Leaf { leaf: here };
    }
    let (parent, _) = gini(&here);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..table.d() {
        let mut vals: Vec<f64> = rows.iter().map(|&r| table.row(r)[f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for pair in vals.windows(2) {
            let mut t = pair[0] + (pair[1] - pair[0]) / 2.0;
            if t >= pair[1] {
                t = pair[0];
            }
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| table.row(i)[f] <= t);
            let (gl, wl) = gini(&sums(table, &l));
            let (gr, wr) = gini(&sums(table, &r));
            let w = wl + wr;
            let imp = wl / w * gl + wr / w * gr;
            let take = match best {
                None => true,
                Some((bi, bf, bt)) => imp < bi - EPS || (imp <= bi + EPS && (f, t) < (bf, bt)),
            };
            if take {
                best = Some((imp, f, t));
            }
        }
    }
    match best {
        Some((imp, f, t)) if imp < parent - EPS => {
            let (l, r): (Vec<usize>, Vec<usize>) =
                rows.iter().partition(|&&i| table.row(i)[f] <= t);
            TreeNode::Split {
                f,
                t,
                l: Box::new(grow(table, &l, depth + 1, max_depth)),
                r: Box::new(grow(table, &r, depth + 1, max_depth)),
            }
        }
        _ => TreeNode::Leaf { leaf: here },
    }
}

/// Mann-Whitney probability that a positive outscores a negative, ties
/// counted one half.
pub fn mann_whitney(scores: &[f64], reference: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !reference[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if reference[j] {
                continue;
            }
            pairs += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Small table with values on a coarse grid, so ties are frequent, and
/// integer weights in `1..=max_weight`.
pub fn random_table<R: Rng>(
    rng: &mut R,
    n: usize,
    d: usize,
    n_classes: u8,
    max_weight: u32,
) -> SampleTable {
    let features: Vec<f64> = (0..n * d)
        .map(|_| f64::from(rng.random_range(0..5)) * 0.25)
        .collect();
    let labels: Vec<ClassId> = (0..n).map(|_| rng.random_range(1..=n_classes)).collect();
    let weights: Vec<f64> = (0..n)
        .map(|_| f64::from(rng.random_range(1..=max_weight)))
        .collect();
    SampleTable::from_rows(d, features, labels, "r")
        .unwrap()
        .with_weights(weights)
        .unwrap()
}

/// Each row of `table` repeated `weight` times with unit weight.
pub fn duplicate_by_weight(table: &SampleTable) -> SampleTable {
    let mut idx = Vec::new();
    for i in 0..table.len() {
        for _ in 0..table.weights()[i] as usize {
            idx.push(i);
        }
    }
    let out = table.select(&idx);
    let n = out.len();
    out.with_weights(vec![1.0; n]).unwrap()
}

/// Split structure of a tree with leaves reduced to their majority class.
pub fn shape(node: &TreeNode) -> String {
    match node {
        TreeNode::Split { f, t, l, r } => format!("({f}<={t} {} {})", shape(l), shape(r)),
        TreeNode::Leaf { leaf } => format!("{:?}", TreeNode::leaf_vote(leaf)),
    }
}
