use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::split::{best_split, TrainingView, IMPURITY_EPS};
use super::ForestParams;
use crate::data::ClassId;
use crate::rng::rng_from_seed;

/// A binary decision node or a leaf of per-class training weight mass.
///
/// Serialized as `{"f", "t", "l", "r"}` for splits and `{"leaf": {class: w}}`
/// for leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, try_from = "RawNode")]
pub enum TreeNode {
    Split {
        f: usize,
        t: f64,
        l: Box<TreeNode>,
        r: Box<TreeNode>,
    },
    Leaf {
        leaf: BTreeMap<ClassId, f64>,
    },
}

// Buffered untagged content keeps map keys as strings, so leaves are read
// with string keys and parsed afterwards.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawNode {
    Split {
        f: usize,
        t: f64,
        l: Box<TreeNode>,
        r: Box<TreeNode>,
    },
    Leaf {
        leaf: BTreeMap<String, f64>,
    },
}

impl TryFrom<RawNode> for TreeNode {
    type Error = String;

    fn try_from(raw: RawNode) -> Result<Self, String> {
        Ok(match raw {
            RawNode::Split { f, t, l, r } => TreeNode::Split { f, t, l, r },
            RawNode::Leaf { leaf } => TreeNode::Leaf {
                leaf: leaf
                    .into_iter()
                    .map(|(k, w)| {
                        k.parse::<ClassId>()
                            .map(|c| (c, w))
                            .map_err(|_| format!("invalid class id {k:?} in leaf"))
                    })
                    .collect::<Result<_, _>>()?,
            },
        })
    }
}

impl TreeNode {
    /// Class with the largest weight mass; masses within a relative
    /// `IMPURITY_EPS` of each other tie and go to the lower class id.
    pub fn leaf_vote(sums: &BTreeMap<ClassId, f64>) -> Option<ClassId> {
        let mut best: Option<(ClassId, f64)> = None;
        for (&c, &w) in sums {
            if best.is_none_or(|(_, bw)| w > bw + IMPURITY_EPS * bw.abs()) {
                best = Some((c, w));
            }
        }
        best.map(|(c, _)| c)
    }

    pub fn leaf_for(&self, x: &[f64]) -> &BTreeMap<ClassId, f64> {
        let mut node = self;
        loop {
            match node {
                TreeNode::Split { f, t, l, r } => {
                    node = if x[*f] <= *t { l } else { r };
                }
                TreeNode::Leaf { leaf } => return leaf,
            }
        }
    }

    pub fn vote(&self, x: &[f64]) -> Option<ClassId> {
        Self::leaf_vote(self.leaf_for(x))
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Split { l, r, .. } => 1 + l.depth().max(r.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Split { l, r, .. } => l.n_leaves() + r.n_leaves(),
            TreeNode::Leaf { .. } => 1,
        }
    }
}

pub(crate) fn make_leaf(view: &TrainingView<'_>, rows: &[usize], alphabet: &[ClassId]) -> TreeNode {
    let sums = view.class_sums(rows);
    let leaf = sums
        .iter()
        .enumerate()
        .filter(|(_, w)| **w > 0.0)
        .map(|(i, &w)| (alphabet[i], w))
        .collect();
    TreeNode::Leaf { leaf }
}

struct Builder<'a, R> {
    view: TrainingView<'a>,
    alphabet: &'a [ClassId],
    params: &'a ForestParams,
    mtry: usize,
    rng: R,
}

impl<R: Rng> Builder<'_, R> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> TreeNode {
        let n_present = self
            .view
            .class_sums(&rows)
            .iter()
            .filter(|w| **w > 0.0)
            .count();
        if depth >= self.params.max_depth || n_present <= 1 || rows.len() < 2 {
            return make_leaf(&self.view, &rows, self.alphabet);
        }
        let mut candidates = sample(&mut self.rng, self.view.d, self.mtry).into_vec();
        candidates.sort_unstable();
        let Some(split) = best_split(&self.view, &rows, &candidates, self.params.min_leaf) else {
            return make_leaf(&self.view, &rows, self.alphabet);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.view.value(r, split.feature) <= split.threshold);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        TreeNode::Split {
            f: split.feature,
            t: split.threshold,
            l: Box::new(l),
            r: Box::new(r),
        }
    }
}

/// Grow one tree on `view`. With bootstrapping, `n` row draws are made with
/// replacement and each drawn row's weight is multiplied by its draw count.
pub(crate) fn grow_tree(
    view: &TrainingView<'_>,
    alphabet: &[ClassId],
    params: &ForestParams,
    mtry: usize,
    tree_seed: u64,
) -> TreeNode {
    let n = view.classes.len();
    let mut rng = rng_from_seed(tree_seed);
    if params.bootstrap {
        let mut counts = vec![0u32; n];
        for _ in 0..n {
            counts[rng.random_range(0..n)] += 1;
        }
        let weights: Vec<f64> = view
            .weights
            .iter()
            .zip(&counts)
            .map(|(w, &k)| w * f64::from(k))
            .collect();
        let rows: Vec<usize> = (0..n).filter(|&i| counts[i] > 0).collect();
        let boot = TrainingView {
            weights: &weights,
            ..*view
        };
        let mut b = Builder {
            view: boot,
            alphabet,
            params,
            mtry,
            rng,
        };
        b.grow(rows, 0)
    } else {
        let mut b = Builder {
            view: *view,
            alphabet,
            params,
            mtry,
            rng,
        };
        b.grow((0..n).collect(), 0)
    }
}
