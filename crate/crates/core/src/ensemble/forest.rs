//! Random regression forest: CART trees on bootstrap samples with random
//! feature subsets at every node.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::RngStream;
use crate::par::map_indexed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features tried per node; `None` means `ceil(p / 3)`.
    pub mtry: Option<usize>,
    /// Smallest number of bootstrap samples allowed in a child.
    pub min_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            mtry: None,
            min_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
    },
    /// `x[feature] <= threshold` goes to `left`.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// A tree flattened into a node array; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_features: usize,
    pub mtry: usize,
    pub min_leaf: usize,
    pub trees: Vec<RegressionTree>,
    /// Mean over the trees whose bootstrap sample left the observation out;
    /// `None` if every tree used it.
    pub oob_predictions: Vec<Option<f64>>,
}

/// Column-major view used while growing trees.
struct Columns<'a> {
    data: &'a [f64],
    n: usize,
    p: usize,
}

impl Columns<'_> {
    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }
}

struct Grower<'a, R: Rng> {
    x: Columns<'a>,
    y: &'a [f64],
    mtry: usize,
    min_leaf: usize,
    rng: R,
    buf: Vec<(f64, f64)>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl<R: Rng> Grower<'_, R> {
    fn grow(mut self, sample: Vec<usize>) -> RegressionTree {
        let mut nodes = vec![Node::Leaf { value: 0.0 }];
        let mut stack = vec![(0usize, sample)];
        while let Some((id, idx)) = stack.pop() {
            let n = idx.len() as f64;
            let sum: f64 = idx.iter().map(|&i| self.y[i]).sum();
            let mean = sum / n;
            let constant = idx.iter().all(|&i| self.y[i] == self.y[idx[0]]);
            let split = if constant || idx.len() < 2 * self.min_leaf {
                None
            } else {
                self.best_split(&idx, sum)
            };
            match split {
                None => nodes[id] = Node::Leaf { value: mean },
                Some(s) => {
                    let (l, r): (Vec<usize>, Vec<usize>) =
                        idx.iter().partition(|&&i| self.x.get(i, s.feature) <= s.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes.push(Node::Leaf { value: 0.0 });
                    nodes[id] = Node::Split {
                        feature: s.feature,
                        threshold: s.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r));
                    stack.push((left, l));
                }
            }
        }
        RegressionTree { nodes }
    }

    /// Split maximizing `S_L^2 / n_L + S_R^2 / n_R`, i.e. minimizing the
    /// children's summed squared error.
    fn best_split(&mut self, idx: &[usize], total: f64) -> Option<BestSplit> {
        let n = idx.len();
        let parent = total * total / n as f64;
        let mut best: Option<BestSplit> = None;
        let features = sample(&mut self.rng, self.x.p, self.mtry);
        for f in features.iter() {
            self.buf.clear();
            self.buf.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            self.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if self.buf[0].0 == self.buf[n - 1].0 {
                continue;
            }
            let mut left_sum = 0.0;
            for k in 0..n - self.min_leaf {
                left_sum += self.buf[k].1;
                let n_left = k + 1;
                if n_left < self.min_leaf || self.buf[k].0 == self.buf[k + 1].0 {
                    continue;
                }
                let right_sum = total - left_sum;
                let score = left_sum * left_sum / n_left as f64 + right_sum * right_sum / (n - n_left) as f64;
                if score > parent * (1.0 + 1e-12) + 1e-12 && best.as_ref().is_none_or(|b| score > b.score) {
                    let (a, b) = (self.buf[k].0, self.buf[k + 1].0);
                    let mid = a + (b - a) / 2.0;
                    best = Some(BestSplit {
                        feature: f,
                        threshold: if mid < b { mid } else { a },
                        score,
                    });
                }
            }
        }
        best
    }
}

/// Fits `params.n_trees` trees, each from its own child stream of `rng`, so
/// the result does not depend on the number of worker threads.
pub fn forest_fit(x: &DMatrix<f64>, y: &[f64], params: ForestParams, rng: RngStream) -> Result<ForestModel> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(Error::ShapeMismatch(format!("{n} rows and {} targets", y.len())));
    }
    if params.n_trees == 0 || params.min_leaf == 0 {
        return Err(Error::InvalidParameter("forest needs n_trees >= 1 and min_leaf >= 1".into()));
    }
    if n < 2 * params.min_leaf {
        return Err(Error::InvalidDataset(format!(
            "forest needs at least {} observations, got {n}",
            2 * params.min_leaf
        )));
    }
    if p == 0 {
        return Err(Error::ShapeMismatch("forest needs at least one feature".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::InvalidDataset("non-finite forest input".into()));
    }
    let mtry = params.mtry.unwrap_or(p.div_ceil(3)).clamp(1, p);
    let data = x.as_slice();

    let grown: Vec<(RegressionTree, Vec<(usize, f64)>)> = map_indexed(params.n_trees, |t| {
        let mut rng = rng.derive(t as u64).rng();
        let mut in_bag = vec![false; n];
        let boot: Vec<usize> = (0..n)
            .map(|_| {
                let i = rng.random_range(0..n);
                in_bag[i] = true;
                i
            })
            .collect();
        let tree = Grower {
            x: Columns { data, n, p },
            y,
            mtry,
            min_leaf: params.min_leaf,
            rng,
            buf: Vec::with_capacity(n),
        }
        .grow(boot);
        let mut row = vec![0.0; p];
        let oob = (0..n)
            .filter(|&i| !in_bag[i])
            .map(|i| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = data[j * n + i];
                }
                (i, tree.predict(&row))
            })
            .collect();
        (tree, oob)
    });

    let mut oob_sum = vec![0.0; n];
    let mut oob_count = vec![0usize; n];
    let mut trees = Vec::with_capacity(grown.len());
    for (tree, oob) in grown {
        for (i, v) in oob {
            oob_sum[i] += v;
            oob_count[i] += 1;
        }
        trees.push(tree);
    }
    let oob_predictions = oob_sum
        .iter()
        .zip(&oob_count)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    Ok(ForestModel {
        n_features: p,
        mtry,
        min_leaf: params.min_leaf,
        trees,
        oob_predictions,
    })
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n_features {
            return Err(Error::ShapeMismatch(format!(
                "forest expects {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        Ok(self.trees.iter().map(|t| t.predict(x)).sum::<f64>() / self.trees.len() as f64)
    }

    /// Mean squared OOB error over observations that have an OOB prediction.
    pub fn oob_mse(&self, y: &[f64]) -> Option<f64> {
        let (sum, count) = self
            .oob_predictions
            .iter()
            .zip(y)
            .filter_map(|(p, t)| p.map(|p| (p - t).powi(2)))
            .fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
        (count > 0).then(|| sum / count as f64)
    }
}
