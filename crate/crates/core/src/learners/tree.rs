//! CART trees on presorted feature orders.
//!
//! Regression splits minimise squared error, classification splits minimise
//! Gini impurity. Both reduce to maximising `Σ_k s_k² / n` over the two
//! children, where `s` is the per-channel target sum (the value itself for
//! regression, one-hot counts for classification).

use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Matrix, Response, Task};
use crate::math;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    #[default]
    All,
    Sqrt,
    /// All features for regression, `sqrt(d)` for classification.
    Auto,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn count(&self, d: usize, task: Task) -> usize {
        let m = match self {
            MaxFeatures::All => d,
            MaxFeatures::Sqrt => math::floor(math::sqrt(d as f64)) as usize,
            MaxFeatures::Auto => match task {
                Task::Regression => d,
                Task::Classification => math::floor(math::sqrt(d as f64)) as usize,
            },
            MaxFeatures::Fraction(f) => math::ceil(f * d as f64) as usize,
        };
        m.clamp(1, d.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

impl TreeParams {
    pub fn is_valid(&self) -> bool {
        let frac_ok = match self.max_features {
            MaxFeatures::Fraction(f) => f > 0.0 && f <= 1.0,
            _ => true,
        };
        self.min_samples_split >= 2
            && self.min_samples_leaf >= 1
            && self.max_depth.is_none_or(|d| d >= 1)
            && frac_ok
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        leaf: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
    /// Leaf outputs, `width` values per leaf.
    values: Vec<f64>,
    width: usize,
    importances: Vec<f64>,
}

impl Tree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut id = 0usize;
        loop {
            match self.nodes[id] {
                Node::Leaf { leaf } => return leaf as usize,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    id = if x[feature as usize] <= threshold {
                        left as usize
                    } else {
                        right as usize
                    };
                }
            }
        }
    }

    pub fn predict_row(&self, x: &[f64]) -> &[f64] {
        let l = self.leaf_index(x);
        &self.values[l * self.width..(l + 1) * self.width]
    }

    #[cfg(test)]
    pub fn n_leaves(&self) -> usize {
        self.values.len() / self.width
    }

    /// Replaces the output of one leaf; `value` must have the tree's width.
    pub fn set_leaf_value(&mut self, leaf: usize, value: &[f64]) {
        self.values[leaf * self.width..(leaf + 1) * self.width].copy_from_slice(value);
    }

    /// Total impurity decrease per feature, unnormalised.
    pub fn raw_importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn normalized_importances(&self) -> Vec<f64> {
        normalize(self.importances.clone())
    }
}

pub(crate) fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        v.iter_mut().for_each(|x| *x /= s);
    }
    v
}

#[derive(Clone, Copy)]
pub(crate) enum Targets<'a> {
    Values(&'a [f64]),
    Labels(&'a [usize], usize),
}

impl Targets<'_> {
    pub(crate) fn from_response(y: &Response) -> Targets<'_> {
        match y {
            Response::Continuous(v) => Targets::Values(v),
            Response::Classes {
                labels,
                num_classes,
            } => Targets::Labels(labels, *num_classes),
        }
    }

    fn width(&self) -> usize {
        match self {
            Targets::Values(_) => 1,
            Targets::Labels(_, c) => *c,
        }
    }

    fn task(&self) -> Task {
        match self {
            Targets::Values(_) => Task::Regression,
            Targets::Labels(..) => Task::Classification,
        }
    }
}

struct Builder<'a> {
    cols: Vec<Vec<f64>>,
    targets: Targets<'a>,
    /// Regression targets are centred by this before accumulating sums.
    offset: f64,
    samples: &'a [usize],
    mtry: usize,
}

impl Builder<'_> {
    #[inline]
    fn add(&self, stats: &mut [f64], pos: usize, sign: f64) {
        let row = self.samples[pos];
        match self.targets {
            Targets::Values(v) => stats[0] += sign * (v[row] - self.offset),
            Targets::Labels(l, _) => stats[l[row]] += sign,
        }
    }

    fn sq(&self, pos: usize) -> f64 {
        match self.targets {
            Targets::Values(v) => {
                let c = v[self.samples[pos]] - self.offset;
                c * c
            }
            Targets::Labels(..) => 1.0,
        }
    }
}

fn proxy(stats: &[f64], n: f64) -> f64 {
    stats.iter().map(|s| s * s).sum::<f64>() / n
}

struct Best {
    score: f64,
    feature: usize,
    threshold: f64,
    n_left: usize,
}

/// Grows one tree on `samples` (row ids, repeats allowed). Returns the tree
/// and, for each leaf, the row ids that landed in it.
pub(crate) fn build(
    x: &Matrix,
    targets: Targets<'_>,
    samples: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> (Tree, Vec<Vec<usize>>) {
    let d = x.cols();
    let m = samples.len();
    let width = targets.width();
    let offset = match targets {
        Targets::Values(v) => samples.iter().map(|&r| v[r]).sum::<f64>() / m as f64,
        Targets::Labels(..) => 0.0,
    };
    let b = Builder {
        cols: (0..d).map(|j| x.column(j)).collect(),
        targets,
        offset,
        samples,
        mtry: params.max_features.count(d, targets.task()),
    };
    // orders[f] holds sample positions sorted by feature f; every node owns
    // the same contiguous range in each of them.
    let mut orders: Vec<Vec<usize>> = (0..d)
        .map(|f| {
            let mut o: Vec<usize> = (0..m).collect();
            let col = &b.cols[f];
            o.sort_by(|&p, &q| col[samples[p]].total_cmp(&col[samples[q]]));
            o
        })
        .collect();
    if d == 0 {
        orders.push((0..m).collect());
    }

    let mut nodes: Vec<Node> = alloc::vec![Node::Leaf { leaf: 0 }];
    let mut values: Vec<f64> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let mut importances = alloc::vec![0.0; d];
    let mut goes_left = alloc::vec![false; m];
    let mut scratch: Vec<usize> = Vec::with_capacity(m);
    let mut feats: Vec<usize> = (0..d).collect();
    let mut stack: Vec<(usize, usize, usize, usize)> = alloc::vec![(0, 0, m, 0)];

    while let Some((id, lo, hi, depth)) = stack.pop() {
        let n = hi - lo;
        let mut total = alloc::vec![0.0; width];
        let mut sumsq = 0.0;
        for &p in &orders[0][lo..hi] {
            b.add(&mut total, p, 1.0);
            sumsq += b.sq(p);
        }
        let node_proxy = proxy(&total, n as f64);
        let can_split = n >= params.min_samples_split
            && n >= 2 * params.min_samples_leaf
            && params.max_depth.is_none_or(|md| depth < md)
            && sumsq - node_proxy > 1e-12 * sumsq.max(1e-300);
        let mut best: Option<Best> = None;
        if can_split && d > 0 {
            if b.mtry < d {
                for i in 0..b.mtry {
                    let j = rng.random_range(i..d);
                    feats.swap(i, j);
                }
            }
            let mut chosen: Vec<usize> = feats[..b.mtry].to_vec();
            chosen.sort_unstable();
            let min_leaf = params.min_samples_leaf;
            let mut left = alloc::vec![0.0; width];
            for &f in &chosen {
                let col = &b.cols[f];
                let ord = &orders[f][lo..hi];
                left.iter_mut().for_each(|v| *v = 0.0);
                for k in 0..n - 1 {
                    b.add(&mut left, ord[k], 1.0);
                    let nl = k + 1;
                    let nr = n - nl;
                    if nl < min_leaf {
                        continue;
                    }
                    if nr < min_leaf {
                        break;
                    }
                    let xa = col[samples[ord[k]]];
                    let xb = col[samples[ord[k + 1]]];
                    if !(xb > xa) {
                        continue;
                    }
                    let mut score = 0.0;
                    let mut right_sq = 0.0;
                    for c in 0..width {
                        score += left[c] * left[c];
                        let r = total[c] - left[c];
                        right_sq += r * r;
                    }
                    let score = score / nl as f64 + right_sq / nr as f64;
                    if best.as_ref().is_none_or(|bb| score > bb.score) {
                        let mut t = 0.5 * (xa + xb);
                        if !(t < xb) {
                            t = xa;
                        }
                        best = Some(Best {
                            score,
                            feature: f,
                            threshold: t,
                            n_left: nl,
                        });
                    }
                }
            }
        }
        match best {
            Some(bs) if bs.score - node_proxy > 1e-12 * sumsq.max(1e-300) => {
                importances[bs.feature] += bs.score - node_proxy;
                let split_ord = &orders[bs.feature][lo..hi];
                for (k, &p) in split_ord.iter().enumerate() {
                    goes_left[p] = k < bs.n_left;
                }
                for ord in orders.iter_mut() {
                    scratch.clear();
                    let seg = &mut ord[lo..hi];
                    scratch.extend(seg.iter().copied().filter(|&p| goes_left[p]));
                    scratch.extend(seg.iter().copied().filter(|&p| !goes_left[p]));
                    seg.copy_from_slice(&scratch);
                }
                let left_id = nodes.len();
                nodes.push(Node::Leaf { leaf: 0 });
                nodes.push(Node::Leaf { leaf: 0 });
                nodes[id] = Node::Split {
                    feature: bs.feature as u32,
                    threshold: bs.threshold,
                    left: left_id as u32,
                    right: (left_id + 1) as u32,
                };
                let mid = lo + bs.n_left;
                // right pushed first so the left subtree is numbered first
                stack.push((left_id + 1, mid, hi, depth + 1));
                stack.push((left_id, lo, mid, depth + 1));
            }
            _ => {
                let leaf = members.len();
                nodes[id] = Node::Leaf { leaf: leaf as u32 };
                for (c, t) in total.iter().enumerate() {
                    let v = t / n as f64;
                    values.push(if c == 0 { v + offset } else { v });
                }
                members.push(orders[0][lo..hi].iter().map(|&p| samples[p]).collect());
            }
        }
    }
    (
        Tree {
            nodes,
            values,
            width,
            importances,
        },
        members,
    )
}

pub fn fit_single(x: &Matrix, y: &Response, params: &TreeParams, seed: SeedSpec) -> Tree {
    let samples: Vec<usize> = (0..x.rows()).collect();
    let mut rng = seed.derive("tree", 0).rng();
    build(x, Targets::from_response(y), &samples, params, &mut rng).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn constant_target_is_single_leaf() {
        let x = Matrix::from_rows(&[[1.0], [2.0], [3.0], [4.0]]).unwrap();
        let t = fit_single(&x, &Response::Continuous(vec![2.5; 4]), &TreeParams::default(), SeedSpec::new(0));
        assert_eq!(t.n_leaves(), 1);
        assert_eq!(t.predict_row(&[10.0]), &[2.5]);
    }

    #[test]
    fn step_function_split_at_midpoint() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let t = fit_single(
            &x,
            &Response::Continuous(vec![0.0, 0.0, 5.0, 5.0]),
            &TreeParams::default(),
            SeedSpec::new(0),
        );
        assert_eq!(t.n_leaves(), 2);
        assert_eq!(t.predict_row(&[1.5]), &[0.0]);
        assert_eq!(t.predict_row(&[1.5000001]), &[5.0]);
    }

    #[test]
    fn pure_leaf_is_one_hot() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]]).unwrap();
        let y = Response::Classes {
            labels: vec![0, 0, 2, 2],
            num_classes: 3,
        };
        let t = fit_single(&x, &y, &TreeParams::default(), SeedSpec::new(0));
        assert_eq!(t.predict_row(&[0.0]), &[1.0, 0.0, 0.0]);
        assert_eq!(t.predict_row(&[3.0]), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn tie_goes_to_lowest_feature() {
        // both columns separate the classes equally well
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]).unwrap();
        let t = fit_single(
            &x,
            &Response::Continuous(vec![0.0, 0.0, 1.0, 1.0]),
            &TreeParams::default(),
            SeedSpec::new(0),
        );
        let imp = t.normalized_importances();
        assert_eq!(imp, vec![1.0, 0.0]);
    }

    #[test]
    fn depth_limit_respected() {
        let rows: Vec<[f64; 1]> = (0..64).map(|i| [i as f64]).collect();
        let y: Vec<f64> = (0..64).map(|i| (i * i % 17) as f64).collect();
        let p = TreeParams {
            max_depth: Some(2),
            ..TreeParams::default()
        };
        let t = fit_single(&Matrix::from_rows(&rows).unwrap(), &Response::Continuous(y), &p, SeedSpec::new(0));
        assert!(t.n_leaves() <= 4);
    }

    #[test]
    fn leaf_members_cover_samples() {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [i as f64, (i % 7) as f64]).collect();
        let y: Vec<f64> = (0..30).map(|i| (i % 5) as f64).collect();
        let samples: Vec<usize> = (0..30).chain(0..10).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let (t, members) = build(
            &x,
            Targets::Values(&y),
            &samples,
            &TreeParams::default(),
            &mut SeedSpec::new(1).rng(),
        );
        assert_eq!(members.iter().map(|m| m.len()).sum::<usize>(), 40);
        for (leaf, rows) in members.iter().enumerate() {
            for &r in rows {
                assert_eq!(t.leaf_index(x.row(r)), leaf);
            }
        }
    }
}
