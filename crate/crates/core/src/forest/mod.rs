//! Observation-weighted random forest.
//!
//! Trees are CART-style with weighted Gini impurity: class proportions at a
//! node are computed from weight sums instead of sample counts. Each tree draws
//! `mtry` candidate features per node from its own seeded stream, so a forest
//! is a pure function of `(table, params)` regardless of thread count.

mod gini;
mod split;
mod tree;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{ClassId, SampleTable};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub use gini::weighted_gini;
pub use split::{best_split, better, midpoint, Split, TrainingView, IMPURITY_EPS};
pub use tree::TreeNode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features drawn per node; `None` means `ceil(sqrt(d))`.
    pub mtry: Option<usize>,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 1000,
            mtry: None,
            max_depth: 8,
            min_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_mtry(&self, d: usize) -> usize {
        self.mtry
            .unwrap_or_else(|| (d as f64).sqrt().ceil() as usize)
            .clamp(1, d.max(1))
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("n_trees must be at least 1"));
        }
        if self.max_depth == 0 {
            return Err(Error::config("max_depth must be at least 1"));
        }
        if self.min_leaf == 0 {
            return Err(Error::config("min_leaf must be at least 1"));
        }
        if d == 0 {
            return Err(Error::data("cannot train a forest on zero features"));
        }
        if let Some(m) = self.mtry {
            if m == 0 || m > d {
                return Err(Error::config(format!("mtry must lie in 1..={d}, got {m}")));
            }
        }
        Ok(())
    }
}

/// Seed of tree `index` in a forest with master seed `seed`.
pub fn tree_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, index as u64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    pub class_alphabet: Vec<ClassId>,
    pub d: usize,
    pub trees: Vec<TreeNode>,
}

struct Prepared {
    alphabet: Vec<ClassId>,
    classes: Vec<usize>,
}

fn prepare(table: &SampleTable) -> Result<Prepared> {
    if table.is_empty() {
        return Err(Error::data("cannot train on an empty table"));
    }
    if let Some(w) = table
        .weights()
        .iter()
        .find(|w| !(**w > 0.0) || !w.is_finite())
    {
        return Err(Error::data(format!(
            "training weights must be positive and finite, got {w}"
        )));
    }
    let mut alphabet: Vec<ClassId> = table.labels().to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    let mut index = [usize::MAX; 256];
    for (i, &c) in alphabet.iter().enumerate() {
        index[c as usize] = i;
    }
    let classes = table.labels().iter().map(|&c| index[c as usize]).collect();
    Ok(Prepared { alphabet, classes })
}

fn view<'a>(table: &'a SampleTable, prep: &'a Prepared) -> TrainingView<'a> {
    TrainingView {
        features: table.features(),
        d: table.d(),
        classes: &prep.classes,
        weights: table.weights(),
        n_classes: prep.alphabet.len(),
    }
}

/// Train a single tree from `tree_seed`.
pub fn train_tree(table: &SampleTable, params: &ForestParams, tree_seed: u64) -> Result<TreeNode> {
    params.validate(table.d())?;
    let prep = prepare(table)?;
    let mtry = params.resolved_mtry(table.d());
    Ok(tree::grow_tree(
        &view(table, &prep),
        &prep.alphabet,
        params,
        mtry,
        tree_seed,
    ))
}

/// Train `params.n_trees` trees in parallel. Tree `i` uses
/// [`tree_seed`]`(params.seed, i)`; the output is identical for any worker count.
pub fn train_forest(table: &SampleTable, params: &ForestParams) -> Result<Forest> {
    params.validate(table.d())?;
    let prep = prepare(table)?;
    let mtry = params.resolved_mtry(table.d());
    let v = view(table, &prep);
    let trees = (0..params.n_trees)
        .into_par_iter()
        .map(|i| tree::grow_tree(&v, &prep.alphabet, params, mtry, tree_seed(params.seed, i)))
        .collect();
    Ok(Forest {
        params: ForestParams {
            mtry: Some(mtry),
            ..params.clone()
        },
        class_alphabet: prep.alphabet,
        d: table.d(),
        trees,
    })
}

/// Per-sample tree vote counts, one column per entry of the class alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteMatrix {
    pub alphabet: Vec<ClassId>,
    pub n_trees: usize,
    counts: Vec<u32>,
}

impl VoteMatrix {
    pub fn len(&self) -> usize {
        self.counts.len() / self.alphabet.len().max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        let k = self.alphabet.len();
        &self.counts[i * k..(i + 1) * k]
    }

    /// Fraction of trees whose vote satisfies `is_positive`.
    pub fn score<F: Fn(ClassId) -> bool>(&self, i: usize, is_positive: F) -> f64 {
        let hits: u32 = self
            .row(i)
            .iter()
            .zip(&self.alphabet)
            .filter(|(_, &c)| is_positive(c))
            .map(|(n, _)| n)
            .sum();
        f64::from(hits) / self.n_trees as f64
    }

    /// Class with the most votes; ties go to the lower class id.
    pub fn plurality(&self, i: usize) -> ClassId {
        let row = self.row(i);
        let mut best = 0;
        for (j, &n) in row.iter().enumerate() {
            if n > row[best] {
                best = j;
            }
        }
        self.alphabet[best]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub labels: Vec<ClassId>,
    /// Fraction of trees voting for the positive class.
    pub scores: Vec<f64>,
}

impl Forest {
    fn check_dim(&self, table: &SampleTable) -> Result<()> {
        if table.d() != self.d {
            return Err(Error::data(format!(
                "forest expects d = {}, table has d = {}",
                self.d,
                table.d()
            )));
        }
        Ok(())
    }

    pub fn votes(&self, table: &SampleTable) -> Result<VoteMatrix> {
        self.check_dim(table)?;
        let k = self.class_alphabet.len();
        let counts: Vec<u32> = (0..table.len())
            .into_par_iter()
            .flat_map_iter(|i| {
                let x = table.row(i);
                let mut row = vec![0u32; k];
                for tree in &self.trees {
                    if let Some(c) = tree.vote(x) {
                        if let Ok(j) = self.class_alphabet.binary_search(&c) {
                            row[j] += 1;
                        }
                    }
                }
                row
            })
            .collect();
        Ok(VoteMatrix {
            alphabet: self.class_alphabet.clone(),
            n_trees: self.trees.len(),
            counts,
        })
    }

    /// Majority-vote prediction.
    ///
    /// The score of a sample is the fraction of trees voting `positive_class`.
    /// With at most two classes the label is positive iff `score >= threshold`;
    /// with more classes the label is the plurality vote and `threshold` is
    /// ignored.
    pub fn predict(
        &self,
        table: &SampleTable,
        positive_class: ClassId,
        threshold: f64,
    ) -> Result<Prediction> {
        if !threshold.is_finite() {
            return Err(Error::config("decision threshold must be finite"));
        }
        let votes = self.votes(table)?;
        let negative = self
            .class_alphabet
            .iter()
            .copied()
            .find(|&c| c != positive_class)
            .unwrap_or(positive_class);
        let two_class = self.class_alphabet.len() <= 2;
        let mut labels = Vec::with_capacity(table.len());
        let mut scores = Vec::with_capacity(table.len());
        for i in 0..votes.len() {
            let s = votes.score(i, |c| c == positive_class);
            scores.push(s);
            labels.push(if two_class {
                if s >= threshold {
                    positive_class
                } else {
                    negative
                }
            } else {
                votes.plurality(i)
            });
        }
        Ok(Prediction { labels, scores })
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(TreeNode::depth).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let forest: Forest = serde_json::from_str(text)?;
        if forest.trees.len() != forest.params.n_trees {
            return Err(Error::data(format!(
                "model declares {} trees but holds {}",
                forest.params.n_trees,
                forest.trees.len()
            )));
        }
        if forest.class_alphabet.is_empty() {
            return Err(Error::data("model has an empty class alphabet"));
        }
        Ok(forest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
