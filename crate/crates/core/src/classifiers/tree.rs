//! Binary CART trees: Gini classification trees for the forest and
//! second-order regression trees for boosting.

use rand::seq::SliceRandom;

use crate::matrix::Matrix;
use crate::Rng;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Flat binary tree; rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    /// Leaf value reached by `row`.
    pub fn evaluate(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match nodes[at] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

/// Indices sorted by feature value, with the midpoint thresholds between
/// consecutive distinct values.
fn sorted_by_feature(x: &Matrix, idx: &[usize], feature: usize) -> Vec<usize> {
    let mut sorted = idx.to_vec();
    sorted.sort_by(|&a, &b| x.get(a, feature).total_cmp(&x.get(b, feature)).then(a.cmp(&b)));
    sorted
}

fn midpoint(a: f64, b: f64) -> f64 {
    let t = a + (b - a) / 2.0;
    if t < b {
        t
    } else {
        a
    }
}

#[derive(Debug, Clone)]
pub struct ClassTreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Features examined per split before falling back to the rest.
    pub max_features: usize,
}

/// Gini CART over `idx` (duplicates allowed, as from a bootstrap sample).
/// Leaves hold the fraction of class-1 rows.
pub fn fit_class_tree(
    x: &Matrix,
    y: &[u8],
    idx: &[usize],
    params: &ClassTreeParams,
    rng: &mut Rng,
) -> Tree {
    let mut tree = Tree { nodes: Vec::new() };
    grow_class(&mut tree, x, y, idx.to_vec(), 0, params, rng);
    tree
}

fn grow_class(
    tree: &mut Tree,
    x: &Matrix,
    y: &[u8],
    idx: Vec<usize>,
    depth: usize,
    params: &ClassTreeParams,
    rng: &mut Rng,
) -> usize {
    let at = tree.nodes.len();
    let n = idx.len();
    let ones = idx.iter().filter(|&&i| y[i] == 1).count();
    tree.nodes.push(Node::Leaf(ones as f64 / n as f64));
    let pure = ones == 0 || ones == n;
    if pure || n < params.min_samples_split || params.max_depth.is_some_and(|d| depth >= d) {
        return at;
    }

    let mut features: Vec<usize> = (0..x.cols()).collect();
    features.shuffle(rng);
    let mut best: Option<(f64, usize, f64)> = None;
    for (tried, &f) in features.iter().enumerate() {
        if tried >= params.max_features && best.is_some() {
            break;
        }
        let sorted = sorted_by_feature(x, &idx, f);
        let mut left_ones = 0usize;
        for s in 0..n - 1 {
            if y[sorted[s]] == 1 {
                left_ones += 1;
            }
            let a = x.get(sorted[s], f);
            let b = x.get(sorted[s + 1], f);
            if a == b {
                continue;
            }
            let nl = (s + 1) as f64;
            let nr = (n - s - 1) as f64;
            let pl = left_ones as f64 / nl;
            let pr = (ones - left_ones) as f64 / nr;
            let impurity = nl * 2.0 * pl * (1.0 - pl) + nr * 2.0 * pr * (1.0 - pr);
            if best.is_none_or(|(bi, _, _)| impurity < bi) {
                best = Some((impurity, f, midpoint(a, b)));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return at;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, feature) <= threshold);
    let left = grow_class(tree, x, y, l, depth + 1, params, rng);
    let right = grow_class(tree, x, y, r, depth + 1, params, rng);
    tree.nodes[at] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

#[derive(Debug, Clone)]
pub struct BoostTreeParams {
    pub max_depth: usize,
    pub lambda: f64,
    pub min_child_weight: f64,
}

/// Exact-greedy regression tree on gradient/Hessian pairs. Leaves hold the
/// Newton step `-G / (H + lambda)`; splits need positive gain.
pub fn fit_boost_tree(x: &Matrix, grad: &[f64], hess: &[f64], params: &BoostTreeParams) -> Tree {
    let mut tree = Tree { nodes: Vec::new() };
    let idx: Vec<usize> = (0..x.rows()).collect();
    grow_boost(&mut tree, x, grad, hess, idx, 0, params);
    tree
}

fn grow_boost(
    tree: &mut Tree,
    x: &Matrix,
    grad: &[f64],
    hess: &[f64],
    idx: Vec<usize>,
    depth: usize,
    params: &BoostTreeParams,
) -> usize {
    let at = tree.nodes.len();
    let g: f64 = idx.iter().map(|&i| grad[i]).sum();
    let h: f64 = idx.iter().map(|&i| hess[i]).sum();
    tree.nodes.push(Node::Leaf(-g / (h + params.lambda)));
    if depth >= params.max_depth || idx.len() < 2 {
        return at;
    }
    let parent = g * g / (h + params.lambda);
    let mut best: Option<(f64, usize, f64)> = None;
    for f in 0..x.cols() {
        let sorted = sorted_by_feature(x, &idx, f);
        let (mut gl, mut hl) = (0.0, 0.0);
        for s in 0..sorted.len() - 1 {
            gl += grad[sorted[s]];
            hl += hess[sorted[s]];
            let a = x.get(sorted[s], f);
            let b = x.get(sorted[s + 1], f);
            if a == b {
                continue;
            }
            let (gr, hr) = (g - gl, h - hl);
            if hl < params.min_child_weight || hr < params.min_child_weight {
                continue;
            }
            let gain = 0.5 * (gl * gl / (hl + params.lambda) + gr * gr / (hr + params.lambda) - parent);
            if gain > 0.0 && best.is_none_or(|(bg, _, _)| gain > bg) {
                best = Some((gain, f, midpoint(a, b)));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return at;
    };
    let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| x.get(i, feature) <= threshold);
    let left = grow_boost(tree, x, grad, hess, l, depth + 1, params);
    let right = grow_boost(tree, x, grad, hess, r, depth + 1, params);
    tree.nodes[at] = Node::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;

    #[test]
    fn unlimited_tree_memorizes() {
        let x = Matrix::from_rows(&[[0.1, 0.9], [0.2, 0.1], [0.3, 0.5], [0.4, 0.4], [0.5, 0.2], [0.6, 0.8]]);
        let y = [0, 1, 1, 0, 1, 0];
        let params = ClassTreeParams {
            max_depth: None,
            min_samples_split: 2,
            max_features: 1,
        };
        let idx: Vec<usize> = (0..6).collect();
        let tree = fit_class_tree(&x, &y, &idx, &params, &mut seeded_rng(0));
        for (i, row) in x.iter_rows().enumerate() {
            assert_eq!(tree.evaluate(row), f64::from(y[i]));
        }
    }

    #[test]
    fn constant_features_give_a_leaf() {
        let x = Matrix::from_rows(&[[1.0], [1.0], [1.0]]);
        let params = ClassTreeParams {
            max_depth: None,
            min_samples_split: 2,
            max_features: 1,
        };
        let tree = fit_class_tree(&x, &[0, 1, 1], &[0, 1, 2], &params, &mut seeded_rng(0));
        assert_eq!(tree.n_leaves(), 1);
        assert!((tree.evaluate(&[1.0]) - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn boost_leaf_is_newton_step() {
        let x = Matrix::from_rows(&[[0.0], [1.0]]);
        let params = BoostTreeParams {
            max_depth: 0,
            lambda: 1.0,
            min_child_weight: 0.0,
        };
        let tree = fit_boost_tree(&x, &[0.5, -0.5 + 1.0], &[0.25, 0.25], &params);
        // G = 1.0, H = 0.5 → -1 / 1.5
        assert!((tree.evaluate(&[0.0]) + 1.0 / 1.5).abs() < 1e-12);
    }
}
