use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::bisect::{bisect_partition, splitmix64};
use super::chi2::chi_square_2x2;
use super::matrix::TermMatrix;
use super::AnalyticsError;

const TOP_TERMS_PER_CLASS: usize = 25;

/// One class of the descending hierarchical classification. Leaves are the
/// final classes; internal nodes record the splits that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterNode {
    pub class_id: u32,
    pub ecu_ids: BTreeSet<usize>,
    /// Terms most associated with membership in this class, chi-square
    /// ranked, highest first.
    pub top_terms: Vec<(String, f64)>,
    /// Zero or two children.
    pub children: Vec<ClusterNode>,
}

impl ClusterNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// The full classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterTree {
    pub root: ClusterNode,
    pub seed: u64,
    pub max_classes: u32,
    pub min_class_size: usize,
}

impl ClusterTree {
    pub fn leaves(&self) -> Vec<&ClusterNode> {
        let mut leaves = Vec::new();
        let mut stack = vec![&self.root];
        while let Some(node) = stack.pop() {
            if node.is_leaf() {
                leaves.push(node);
            } else {
                for child in node.children.iter().rev() {
                    stack.push(child);
                }
            }
        }
        leaves.sort_by_key(|n| n.class_id);
        leaves
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves().len()
    }
}

struct ArenaNode {
    class_id: u32,
    rows: Vec<usize>,
    children: Option<(usize, usize)>,
    splittable: bool,
}

/// Chi-square ranking of terms against membership in `rows`, over the whole
/// corpus: a = in-class ECUs with the term, c = out-of-class ECUs with it.
fn rank_terms(matrix: &TermMatrix, rows: &[usize]) -> Vec<(String, f64)> {
    let inside: BTreeSet<usize> = rows.iter().copied().collect();
    let outside: Vec<usize> =
        (0..matrix.ecu_count()).filter(|row| !inside.contains(row)).collect();
    let n_in = rows.len() as u64;
    let n_out = outside.len() as u64;

    let mut ranked: Vec<(String, f64)> = matrix
        .terms
        .iter()
        .enumerate()
        .filter_map(|(term_index, term)| {
            let a = matrix.present_in(rows, term_index);
            let c = matrix.present_in(&outside, term_index);
            let chi2 = chi_square_2x2(a, n_in - a, c, n_out - c);
            // Only terms over-represented inside the class characterize it.
            let in_rate = a as f64 / n_in.max(1) as f64;
            let out_rate = c as f64 / n_out.max(1) as f64;
            (chi2 > 0.0 && in_rate > out_rate).then(|| (term.clone(), chi2))
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(TOP_TERMS_PER_CLASS);
    ranked
}

/// Descending hierarchical classification: starting from one root class
/// holding every ECU, repeatedly bisects the largest current leaf (ties go to
/// the lower class id) until `max_classes` leaves exist or nothing more can
/// split. Splits that would leave a side below `min_class_size` are rejected.
/// Deterministic given the seed.
pub fn dhc_cluster(
    matrix: &TermMatrix,
    max_classes: u32,
    min_class_size: usize,
    seed: u64,
) -> Result<ClusterTree, AnalyticsError> {
    if matrix.ecu_count() == 0 {
        return Err(AnalyticsError::EmptyCorpus("matrix has no ECUs".into()));
    }
    if max_classes < 1 {
        return Err(AnalyticsError::InvalidArgument("max_classes must be >= 1".into()));
    }
    let min_class_size = min_class_size.max(1);

    let mut arena = vec![ArenaNode {
        class_id: 0,
        rows: (0..matrix.ecu_count()).collect(),
        children: None,
        splittable: true,
    }];
    let mut next_class_id = 1u32;
    let mut leaf_count = 1usize;

    while (leaf_count as u32) < max_classes {
        // Largest splittable leaf; ties to the lower class id. Leaves too
        // small to yield two min_class_size children are skipped outright.
        let candidate = arena
            .iter()
            .enumerate()
            .filter(|(_, node)| {
                node.children.is_none() && node.splittable && node.rows.len() >= min_class_size * 2
            })
            .max_by(|(_, x), (_, y)| {
                x.rows.len().cmp(&y.rows.len()).then(y.class_id.cmp(&x.class_id))
            })
            .map(|(index, _)| index);
        let Some(node_index) = candidate else { break };

        let rows = arena[node_index].rows.clone();
        let sub = matrix.restrict(&rows);
        let mut split_seed = seed ^ u64::from(arena[node_index].class_id);
        let split_seed = splitmix64(&mut split_seed);

        match bisect_partition(&sub, split_seed) {
            Ok((left_local, right_local, _phi)) => {
                let left: Vec<usize> = left_local.iter().map(|&i| rows[i]).collect();
                let right: Vec<usize> = right_local.iter().map(|&i| rows[i]).collect();
                if left.len() < min_class_size || right.len() < min_class_size {
                    arena[node_index].splittable = false;
                    continue;
                }
                let left_id = next_class_id;
                let right_id = next_class_id + 1;
                next_class_id += 2;
                arena.push(ArenaNode {
                    class_id: left_id,
                    rows: left,
                    children: None,
                    splittable: true,
                });
                arena.push(ArenaNode {
                    class_id: right_id,
                    rows: right,
                    children: None,
                    splittable: true,
                });
                let (left_index, right_index) = (arena.len() - 2, arena.len() - 1);
                arena[node_index].children = Some((left_index, right_index));
                leaf_count += 1;
            }
            Err(AnalyticsError::Unsplittable) => {
                arena[node_index].splittable = false;
            }
            Err(other) => return Err(other),
        }
    }

    fn build(arena: &[ArenaNode], index: usize, matrix: &TermMatrix) -> ClusterNode {
        let node = &arena[index];
        let children = match node.children {
            Some((left, right)) => {
                vec![build(arena, left, matrix), build(arena, right, matrix)]
            }
            None => Vec::new(),
        };
        ClusterNode {
            class_id: node.class_id,
            ecu_ids: node.rows.iter().copied().collect(),
            top_terms: rank_terms(matrix, &node.rows),
            children,
        }
    }

    Ok(ClusterTree {
        root: build(&arena, 0, matrix),
        seed,
        max_classes,
        min_class_size,
    })
}

/// Plain-text indented rendering of the tree with per-class top terms — the
/// dendrogram's content in textual form.
pub fn render_cluster_text(tree: &ClusterTree) -> String {
    fn walk(node: &ClusterNode, depth: usize, out: &mut String) {
        let indent = "  ".repeat(depth);
        let marker = if node.is_leaf() { "class" } else { "split" };
        out.push_str(&format!("{indent}{marker} {} [n={}]", node.class_id, node.ecu_ids.len()));
        if node.is_leaf() && !node.top_terms.is_empty() {
            let terms: Vec<String> = node
                .top_terms
                .iter()
                .take(10)
                .map(|(term, chi2)| format!("{term}({chi2:.2})"))
                .collect();
            out.push_str(&format!(" top: {}", terms.join(" ")));
        }
        out.push('\n');
        for child in &node.children {
            walk(child, depth + 1, out);
        }
    }
    let mut out = String::new();
    walk(&tree.root, 0, &mut out);
    out
}
