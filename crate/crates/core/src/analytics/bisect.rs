use std::collections::BTreeSet;

use super::chi2::chi_square_2x2;
use super::matrix::TermMatrix;
use super::AnalyticsError;

const POWER_ITERATIONS: usize = 50;
const IMPROVEMENT_EPSILON: f64 = 1e-12;
/// Seed-derived random restarts hill-climbed alongside the principal-axis
/// start; the best final Φ wins. A single start strands on local optima
/// often enough to break exactness on planted corpora.
const RANDOM_RESTARTS: usize = 8;

pub(crate) fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Partition objective: summed chi-square association between side
/// membership and term presence, over every retained term.
fn phi_from_counts(count_left: &[u64], n_left: u64, count_right: &[u64], n_right: u64) -> f64 {
    count_left
        .iter()
        .zip(count_right)
        .map(|(&l, &r)| chi_square_2x2(l, n_left - l, r, n_right - r))
        .sum()
}

/// Per-term presence counts for the rows currently on each side.
struct SideCounts {
    left: Vec<u64>,
    right: Vec<u64>,
    n_left: u64,
    n_right: u64,
}

impl SideCounts {
    fn new(matrix: &TermMatrix, assignment: &[bool]) -> Self {
        let terms = matrix.term_count();
        let mut counts = SideCounts {
            left: vec![0; terms],
            right: vec![0; terms],
            n_left: 0,
            n_right: 0,
        };
        for (row, &left) in assignment.iter().enumerate() {
            counts.push_row(matrix, row, left);
        }
        counts
    }

    fn push_row(&mut self, matrix: &TermMatrix, row: usize, left: bool) {
        let side = if left {
            self.n_left += 1;
            &mut self.left
        } else {
            self.n_right += 1;
            &mut self.right
        };
        for (term, &present) in matrix.presence[row].iter().enumerate() {
            if present {
                side[term] += 1;
            }
        }
    }

    fn move_row(&mut self, matrix: &TermMatrix, row: usize, to_left: bool) {
        let (from, to) = if to_left {
            self.n_right -= 1;
            self.n_left += 1;
            (&mut self.right, &mut self.left)
        } else {
            self.n_left -= 1;
            self.n_right += 1;
            (&mut self.left, &mut self.right)
        };
        for (term, &present) in matrix.presence[row].iter().enumerate() {
            if present {
                from[term] -= 1;
                to[term] += 1;
            }
        }
    }

    fn phi(&self) -> f64 {
        phi_from_counts(&self.left, self.n_left, &self.right, self.n_right)
    }
}

/// Scores each ECU on the first principal axis of the column-centered
/// presence matrix, via a fixed-iteration power method with a deterministic
/// seed-derived start vector.
fn principal_axis_scores(matrix: &TermMatrix, seed: u64) -> Vec<f64> {
    let n = matrix.ecu_count();
    let terms = matrix.term_count();

    let mut column_means = vec![0.0f64; terms];
    for row in &matrix.presence {
        for (term, &present) in row.iter().enumerate() {
            if present {
                column_means[term] += 1.0;
            }
        }
    }
    for mean in &mut column_means {
        *mean /= n as f64;
    }
    let centered = |row: usize, term: usize| -> f64 {
        (matrix.presence[row][term] as u8 as f64) - column_means[term]
    };

    let mut state = seed ^ 0xD1B5_4A32_D192_ED03;
    let mut scores: Vec<f64> = (0..n)
        .map(|_| (splitmix64(&mut state) as f64 / u64::MAX as f64) - 0.5)
        .collect();

    for _ in 0..POWER_ITERATIONS {
        // v = Bᵀ·u, then u' = B·v, normalized.
        let mut v = vec![0.0f64; terms];
        for (row, &score) in scores.iter().enumerate() {
            if score == 0.0 {
                continue;
            }
            for (term, slot) in v.iter_mut().enumerate() {
                *slot += centered(row, term) * score;
            }
        }
        let mut next = vec![0.0f64; n];
        for (row, slot) in next.iter_mut().enumerate() {
            let mut total = 0.0;
            for (term, &vt) in v.iter().enumerate() {
                total += centered(row, term) * vt;
            }
            *slot = total;
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-30 {
            break;
        }
        for value in &mut next {
            *value /= norm;
        }
        scores = next;
    }

    // Fixed sign convention so equal inputs give equal partitions.
    let dominant = scores
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    if scores[dominant] < 0.0 {
        for value in &mut scores {
            *value = -*value;
        }
    }
    scores
}

/// Steepest-ascent hill climb with single-ECU moves; neither side may empty.
fn climb(matrix: &TermMatrix, assignment: &mut [bool]) -> f64 {
    let mut counts = SideCounts::new(matrix, assignment);
    let mut phi = counts.phi();

    loop {
        let mut best: Option<(usize, f64)> = None;
        for (row, &currently_left) in assignment.iter().enumerate() {
            if (currently_left && counts.n_left == 1) || (!currently_left && counts.n_right == 1) {
                continue;
            }
            counts.move_row(matrix, row, !currently_left);
            let candidate = counts.phi();
            counts.move_row(matrix, row, currently_left);
            let gain = candidate - phi;
            if gain > IMPROVEMENT_EPSILON && best.is_none_or(|(_, g)| gain > g) {
                best = Some((row, gain));
            }
        }
        match best {
            Some((row, _)) => {
                let to_left = !assignment[row];
                counts.move_row(matrix, row, to_left);
                assignment[row] = to_left;
                phi = counts.phi();
            }
            None => break,
        }
    }
    phi
}

/// Forces both sides non-empty by flipping the lowest-index row when needed.
fn ensure_two_sides(assignment: &mut [bool]) {
    let left_count = assignment.iter().filter(|&&l| l).count();
    if left_count == 0 {
        assignment[0] = true;
    } else if left_count == assignment.len() {
        assignment[0] = false;
    }
}

/// Splits the matrix rows into two non-empty sets maximizing the summed
/// chi-square objective Φ. The primary start assigns each ECU by the sign of
/// its coordinate on the first principal axis; seed-derived random restarts
/// are climbed alongside it and the best final Φ wins. Every start is
/// hill-climbed with single-ECU moves until no move improves Φ.
/// Deterministic given (matrix, seed).
///
/// Fails with `Unsplittable` when every row is identical (no partition can
/// separate anything) or fewer than two rows exist.
pub fn bisect_partition(
    matrix: &TermMatrix,
    seed: u64,
) -> Result<(BTreeSet<usize>, BTreeSet<usize>, f64), AnalyticsError> {
    let n = matrix.ecu_count();
    if n < 2 {
        return Err(AnalyticsError::Unsplittable);
    }
    if matrix.presence.iter().all(|row| *row == matrix.presence[0]) {
        return Err(AnalyticsError::Unsplittable);
    }

    let scores = principal_axis_scores(matrix, seed);
    let mut axis_start: Vec<bool> = scores.iter().map(|&s| s >= 0.0).collect();
    // Degenerate axis split: fall back to a median split over the axis.
    let left_count = axis_start.iter().filter(|&&l| l).count();
    if left_count == 0 || left_count == n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            scores[a].partial_cmp(&scores[b]).unwrap().then_with(|| a.cmp(&b))
        });
        for (rank, &row) in order.iter().enumerate() {
            axis_start[row] = rank < n / 2;
        }
        ensure_two_sides(&mut axis_start);
    }

    let mut best_assignment = axis_start.clone();
    let mut best_phi = climb(matrix, &mut best_assignment);

    let mut state = seed ^ 0x5DEE_CE66_C0FF_EE00;
    for _ in 0..RANDOM_RESTARTS {
        let mut assignment: Vec<bool> =
            (0..n).map(|_| splitmix64(&mut state).is_multiple_of(2)).collect();
        ensure_two_sides(&mut assignment);
        let phi = climb(matrix, &mut assignment);
        if phi > best_phi + IMPROVEMENT_EPSILON {
            best_phi = phi;
            best_assignment = assignment;
        }
    }

    let left: BTreeSet<usize> =
        best_assignment.iter().enumerate().filter(|(_, &l)| l).map(|(i, _)| i).collect();
    let right: BTreeSet<usize> =
        best_assignment.iter().enumerate().filter(|(_, &l)| !l).map(|(i, _)| i).collect();
    Ok((left, right, best_phi))
}

/// Objective value for an arbitrary bipartition (rows in `left` against the
/// rest), for callers that compare partitions.
pub fn partition_phi(matrix: &TermMatrix, left: &BTreeSet<usize>) -> f64 {
    let terms = matrix.term_count();
    let mut count_left = vec![0u64; terms];
    let mut count_right = vec![0u64; terms];
    let mut n_left = 0u64;
    let mut n_right = 0u64;
    for row in 0..matrix.ecu_count() {
        let side = if left.contains(&row) {
            n_left += 1;
            &mut count_left
        } else {
            n_right += 1;
            &mut count_right
        };
        for (term, &present) in matrix.presence[row].iter().enumerate() {
            if present {
                side[term] += 1;
            }
        }
    }
    phi_from_counts(&count_left, n_left, &count_right, n_right)
}
