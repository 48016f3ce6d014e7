//! Binary CART with Gini impurity, grown best-first.

use ndarray::{ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use super::argmax_class;
use crate::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        class: Label,
        /// Training weight per class reaching the leaf.
        weight: [f64; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Node arena; index 0 is the root. `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<Node>,
}

impl TreeModel {
    pub fn predict(&self, x: ArrayView1<'_, f64>) -> Label {
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => id = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn n_splits(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Split { .. }))
            .count()
    }

    pub fn leaves(&self) -> impl Iterator<Item = (&Label, &[f64; 2])> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { class, weight } => Some((class, weight)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn sum_sq_over(w: [f64; 2]) -> f64 {
    let total = w[0] + w[1];
    if total > 0.0 {
        (w[0] * w[0] + w[1] * w[1]) / total
    } else {
        0.0
    }
}

fn class_weights(rows: &[usize], y: &[Label], w: &[f64]) -> [f64; 2] {
    let mut out = [0.0; 2];
    for &r in rows {
        out[y[r].index()] += w[r];
    }
    out
}

/// Best split of `rows`: exhaustive search over midpoints between sorted
/// distinct values. Equal gains keep the lower feature, then the lower
/// threshold.
fn best_split(x: ArrayView2<'_, f64>, y: &[Label], w: &[f64], rows: &[usize]) -> Option<Candidate> {
    let total = class_weights(rows, y, w);
    if total[0] == 0.0 || total[1] == 0.0 {
        return None;
    }
    let parent = sum_sq_over(total);
    let tie_eps = 1e-12 * (total[0] + total[1]);
    let mut best: Option<Candidate> = None;
    let mut sorted: Vec<(f64, usize)> = Vec::with_capacity(rows.len());
    for f in 0..x.ncols() {
        sorted.clear();
        sorted.extend(rows.iter().map(|&r| (x[[r, f]], r)));
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut left = [0.0; 2];
        for p in 0..sorted.len() - 1 {
            let (v, r) = sorted[p];
            left[y[r].index()] += w[r];
            let next = sorted[p + 1].0;
            if next <= v {
                continue;
            }
            let right = [total[0] - left[0], total[1] - left[1]];
            let gain = sum_sq_over(left) + sum_sq_over(right) - parent;
            if best.is_none_or(|b| gain > b.gain + tie_eps) {
                let mut threshold = 0.5 * (v + next);
                if threshold >= next {
                    threshold = v;
                }
                best = Some(Candidate {
                    feature: f,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}

/// Grows a tree until `max_splits` internal nodes exist or no impure leaf
/// can be split. The leaf with the largest impurity decrease is split
/// first (lowest node id on ties). `weights` defaults to uniform.
pub fn tree_fit(
    x: ArrayView2<'_, f64>,
    y: &[Label],
    weights: Option<&[f64]>,
    max_splits: usize,
) -> TreeModel {
    let uniform;
    let w = match weights {
        Some(w) => w,
        None => {
            uniform = vec![1.0; y.len()];
            &uniform
        }
    };
    let root_rows: Vec<usize> = (0..y.len()).filter(|&r| w[r] > 0.0).collect();
    let leaf = |rows: &[usize]| {
        let weight = class_weights(rows, y, w);
        Node::Leaf {
            class: argmax_class(weight),
            weight,
        }
    };
    let mut nodes = vec![leaf(&root_rows)];
    // (node id, rows, candidate split) for every splittable leaf.
    let mut frontier: Vec<(usize, Vec<usize>, Candidate)> = Vec::new();
    if let Some(c) = best_split(x, y, w, &root_rows) {
        frontier.push((0, root_rows, c));
    }
    let mut splits = 0;
    while splits < max_splits && !frontier.is_empty() {
        let mut pick = 0;
        for (i, item) in frontier.iter().enumerate().skip(1) {
            let cur = &frontier[pick];
            if item.2.gain > cur.2.gain || (item.2.gain == cur.2.gain && item.0 < cur.0) {
                pick = i;
            }
        }
        let (id, rows, cand) = frontier.swap_remove(pick);
        let (l_rows, r_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| x[[r, cand.feature]] <= cand.threshold);
        let (l_id, r_id) = (nodes.len(), nodes.len() + 1);
        nodes.push(leaf(&l_rows));
        nodes.push(leaf(&r_rows));
        nodes[id] = Node::Split {
            feature: cand.feature,
            threshold: cand.threshold,
            left: l_id,
            right: r_id,
        };
        splits += 1;
        for (child, child_rows) in [(l_id, l_rows), (r_id, r_rows)] {
            if let Some(c) = best_split(x, y, w, &child_rows) {
                frontier.push((child, child_rows, c));
            }
        }
    }
    TreeModel { nodes }
}
