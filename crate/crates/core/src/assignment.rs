//! Square linear assignment (Kuhn-Munkres) with dummy padding for
//! rectangular prediction/detection blocks.
//!
//! A `p × d` block of genuine costs is embedded in an `n × n` matrix with
//! `n = max(p, d)`. Every padding entry holds the dummy value
//! `V = max(genuine) + k`, so a prediction paired with a padding column is
//! "unmatched" and a detection paired with a padding row is a new object.

use thiserror::Error;

/// Largest matrix the factorial oracle accepts.
pub const BRUTE_FORCE_MAX_DIM: usize = 9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AssignmentError {
    #[error("cost matrix has no rows and no columns")]
    Empty,
    #[error("expected {expected} cost entries for a {rows}x{cols} block, got {actual}")]
    Shape {
        rows: usize,
        cols: usize,
        expected: usize,
        actual: usize,
    },
    #[error("cost at ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("cost at ({row}, {col}) is negative ({value})")]
    Negative { row: usize, col: usize, value: f64 },
    #[error("padding constant must be positive, got {0}")]
    InvalidPadding(f64),
    #[error("brute force is limited to n <= {BRUTE_FORCE_MAX_DIM}, got n = {0}")]
    TooLarge(usize),
    #[error("step-count model needs at least one non-empty class")]
    NoObjects,
}

/// Square cost matrix with dummy-row/column bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    values: Vec<f64>,
    n: usize,
    real_rows: usize,
    real_cols: usize,
    dummy_value: f64,
    /// Row-major `real_rows × real_cols` mask; `None` means every genuine
    /// cell is admissible.
    admissible: Option<Vec<bool>>,
}

impl CostMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn real_rows(&self) -> usize {
        self.real_rows
    }

    pub fn real_cols(&self) -> usize {
        self.real_cols
    }

    pub fn dummy_value(&self) -> f64 {
        self.dummy_value
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.n..(row + 1) * self.n]
    }

    /// Number of padding rows plus padding columns.
    pub fn padding_lines(&self) -> usize {
        (self.n - self.real_rows) + (self.n - self.real_cols)
    }

    /// True when `(row, col)` is a genuine prediction/detection pair that may
    /// be reported as a match.
    pub fn is_admissible(&self, row: usize, col: usize) -> bool {
        if row >= self.real_rows || col >= self.real_cols {
            return false;
        }
        match &self.admissible {
            Some(mask) => mask[row * self.real_cols + col],
            None => true,
        }
    }

    /// Multiplies every entry (dummy value included) by `factor`.
    pub fn scaled(&self, factor: f64) -> CostMatrix {
        CostMatrix {
            values: self.values.iter().map(|v| v * factor).collect(),
            dummy_value: self.dummy_value * factor,
            ..self.clone()
        }
    }
}

/// Pads a row-major `rows × cols` block to a square matrix, filling padding
/// with `V = max(raw) + k` (or `V = k` when one side is empty).
pub fn pad_costs(
    rows: usize,
    cols: usize,
    raw: &[f64],
    k: f64,
) -> Result<CostMatrix, AssignmentError> {
    build(rows, cols, raw.len(), |i| Some(raw[i]), k, 0)
}

/// Like [`pad_costs`], but `None` cells are inadmissible pairs: they are
/// filled with the dummy value and never reported as matches. The dummy value
/// is computed over the admissible cells only.
pub fn pad_costs_masked(
    rows: usize,
    cols: usize,
    raw: &[Option<f64>],
    k: f64,
) -> Result<CostMatrix, AssignmentError> {
    build(rows, cols, raw.len(), |i| raw[i], k, 0)
}

/// Masked padding to at least `min_dim`.
///
/// A class-gated block (cross-class cells masked) needs one dummy partner per
/// element that has no same-class counterpart, which is
/// `sum over classes of max(p_c, d_c)` and can exceed `max(p, d)`.
pub fn pad_costs_gated(
    rows: usize,
    cols: usize,
    raw: &[Option<f64>],
    k: f64,
    min_dim: usize,
) -> Result<CostMatrix, AssignmentError> {
    build(rows, cols, raw.len(), |i| raw[i], k, min_dim)
}

fn build(
    rows: usize,
    cols: usize,
    len: usize,
    cell: impl Fn(usize) -> Option<f64>,
    k: f64,
    min_dim: usize,
) -> Result<CostMatrix, AssignmentError> {
    if rows == 0 && cols == 0 {
        return Err(AssignmentError::Empty);
    }
    if len != rows * cols {
        return Err(AssignmentError::Shape {
            rows,
            cols,
            expected: rows * cols,
            actual: len,
        });
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(AssignmentError::InvalidPadding(k));
    }

    let mut max_cost: Option<f64> = None;
    let mut any_masked = false;
    for i in 0..len {
        match cell(i) {
            Some(c) => {
                let (row, col) = (i / cols, i % cols);
                if !c.is_finite() {
                    return Err(AssignmentError::NonFinite { row, col });
                }
                if c < 0.0 {
                    return Err(AssignmentError::Negative { row, col, value: c });
                }
                max_cost = Some(max_cost.map_or(c, |m: f64| m.max(c)));
            }
            None => any_masked = true,
        }
    }
    let dummy_value = max_cost.unwrap_or(0.0) + k;

    let n = rows.max(cols).max(min_dim);
    let mut values = vec![dummy_value; n * n];
    for r in 0..rows {
        for c in 0..cols {
            if let Some(v) = cell(r * cols + c) {
                values[r * n + c] = v;
            }
        }
    }
    let admissible = any_masked.then(|| (0..len).map(|i| cell(i).is_some()).collect());

    Ok(CostMatrix {
        values,
        n,
        real_rows: rows,
        real_cols: cols,
        dummy_value,
        admissible,
    })
}

/// Optimal permutation of a [`CostMatrix`] with the genuine/dummy split
/// already resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    /// `(row, col)` for every row, in row order.
    pub pairs: Vec<(usize, usize)>,
    pub total_cost: f64,
    /// Admissible `(prediction, detection)` pairs.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_predictions: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    fn from_permutation(matrix: &CostMatrix, col_of_row: &[usize]) -> Self {
        let mut pairs = Vec::with_capacity(matrix.n);
        let mut total_cost = 0.0;
        let mut matches = Vec::new();
        let mut unmatched_predictions = Vec::new();
        let mut unmatched_detections = Vec::new();

        for (row, &col) in col_of_row.iter().enumerate() {
            pairs.push((row, col));
            total_cost += matrix.get(row, col);
            if matrix.is_admissible(row, col) {
                matches.push((row, col));
                continue;
            }
            if row < matrix.real_rows {
                unmatched_predictions.push(row);
            }
            if col < matrix.real_cols {
                unmatched_detections.push(col);
            }
        }
        unmatched_detections.sort_unstable();

        Assignment {
            pairs,
            total_cost,
            matches,
            unmatched_predictions,
            unmatched_detections,
        }
    }
}

/// Solves the assignment problem in `O(n³)`.
///
/// Uses the shortest-augmenting-path form of Kuhn-Munkres with row/column
/// potentials. Among equal-cost optima the lexicographically smallest
/// column sequence is returned (lowest row first, then lowest column).
pub fn solve(matrix: &CostMatrix) -> Assignment {
    let n = matrix.n;
    let (mut col_of_row, u, v) = shortest_augmenting_path(matrix);

    let scale = matrix.values.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-12 * scale.max(1.0);
    let tight = |r: usize, c: usize| matrix.get(r, c) - u[r] - v[c] <= eps;
    canonicalize(n, &mut col_of_row, tight);

    Assignment::from_permutation(matrix, &col_of_row)
}

/// Returns the row→column assignment plus the final dual potentials.
fn shortest_augmenting_path(matrix: &CostMatrix) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = matrix.n;
    // 1-based internally; index 0 is the virtual root column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut min_slack = vec![f64::INFINITY; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        min_slack.fill(f64::INFINITY);
        used.fill(false);

        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let row = matrix.row(i0 - 1);
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;

            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = row[j - 1] - u[i0] - v[j];
                if cur < min_slack[j] {
                    min_slack[j] = cur;
                    way[j] = j0;
                }
                if min_slack[j] < delta {
                    delta = min_slack[j];
                    j1 = j;
                }
            }

            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_slack[j] -= delta;
                }
            }

            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for j in 1..=n {
        col_of_row[row_of_col[j] - 1] = j - 1;
    }
    (col_of_row, u[1..].to_vec(), v[1..].to_vec())
}

/// Rewrites an optimal perfect matching into the lexicographically smallest
/// one that uses only tight (zero reduced cost) edges.
///
/// Every optimal assignment lies on tight edges of an optimal dual, so this
/// walks rows in order and moves each row to its smallest reachable tight
/// column via an alternating path. `O(n²)` per row.
fn canonicalize(n: usize, col_of_row: &mut [usize], tight: impl Fn(usize, usize) -> bool) {
    let mut row_of_col = vec![0usize; n];
    for (r, &c) in col_of_row.iter().enumerate() {
        row_of_col[c] = r;
    }
    let mut fixed_col = vec![false; n];
    let mut reaches = vec![false; n];
    let mut next_col = vec![0usize; n];
    let mut queue = Vec::with_capacity(n);

    for i in 0..n {
        let current = col_of_row[i];

        // Rows (after i) that can hand their column over and still be
        // re-seated, ending with `current` being freed by row i.
        reaches.fill(false);
        queue.clear();
        queue.push(current);
        let mut head = 0;
        while head < queue.len() {
            let c = queue[head];
            head += 1;
            for x in (i + 1)..n {
                if !reaches[x] && col_of_row[x] != c && tight(x, c) {
                    reaches[x] = true;
                    next_col[x] = c;
                    queue.push(col_of_row[x]);
                }
            }
        }

        let target = (0..current).find(|&j| !fixed_col[j] && tight(i, j) && reaches[row_of_col[j]]);
        if let Some(j) = target {
            let mut r = row_of_col[j];
            col_of_row[i] = j;
            row_of_col[j] = i;
            loop {
                let c = next_col[r];
                let previous_owner = row_of_col[c];
                col_of_row[r] = c;
                row_of_col[c] = r;
                if c == current {
                    break;
                }
                r = previous_owner;
            }
        }
        fixed_col[col_of_row[i]] = true;
    }
}

/// Exhaustive `n!` search, used as a test oracle. Ties resolve to the
/// lexicographically smallest column sequence, like [`solve`].
pub fn brute_force_solve(matrix: &CostMatrix) -> Result<Assignment, AssignmentError> {
    let n = matrix.n;
    if n > BRUTE_FORCE_MAX_DIM {
        return Err(AssignmentError::TooLarge(n));
    }

    struct Search<'a> {
        matrix: &'a CostMatrix,
        used: Vec<bool>,
        current: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, row: usize, cost: f64) {
            let n = self.matrix.n;
            if row == n {
                if self.best.as_ref().is_none_or(|(b, _)| cost < *b) {
                    self.best = Some((cost, self.current.clone()));
                }
                return;
            }
            for col in 0..n {
                if self.used[col] {
                    continue;
                }
                self.used[col] = true;
                self.current.push(col);
                self.visit(row + 1, cost + self.matrix.get(row, col));
                self.current.pop();
                self.used[col] = false;
            }
        }
    }

    let mut search = Search {
        matrix,
        used: vec![false; n],
        current: Vec::with_capacity(n),
        best: None,
    };
    search.visit(0, 0.0);
    let (_, cols) = search.best.expect("n >= 1 has at least one permutation");
    Ok(Assignment::from_permutation(matrix, &cols))
}

/// Cubic step counts for one monolithic solve versus per-class solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepCounts {
    pub monolithic: u64,
    pub partitioned_sequential: u64,
    pub partitioned_parallel: u64,
}

pub fn step_count_model(class_sizes: &[usize]) -> Result<StepCounts, AssignmentError> {
    if class_sizes.iter().all(|&s| s == 0) {
        return Err(AssignmentError::NoObjects);
    }
    let cube = |s: usize| (s as u64).pow(3);
    let total: usize = class_sizes.iter().sum();
    Ok(StepCounts {
        monolithic: cube(total),
        partitioned_sequential: class_sizes.iter().map(|&s| cube(s)).sum(),
        partitioned_parallel: class_sizes.iter().map(|&s| cube(s)).max().unwrap_or(0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn square(rows: &[&[f64]]) -> CostMatrix {
        let n = rows.len();
        let raw: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        pad_costs(n, rows[0].len(), &raw, 1.0).unwrap()
    }

    #[test]
    fn pads_single_row_with_dummy() {
        let m = pad_costs(1, 2, &[0.2, 0.5], 1.0).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.dummy_value(), 1.5);
        assert_eq!(m.row(0), &[0.2, 0.5]);
        assert_eq!(m.row(1), &[1.5, 1.5]);
    }

    #[test]
    fn square_input_is_unchanged() {
        let m = pad_costs(1, 1, &[0.0], 1.0).unwrap();
        assert_eq!(m.n(), 1);
        assert_eq!(m.get(0, 0), 0.0);
        assert_eq!(m.padding_lines(), 0);
    }

    #[test]
    fn pads_missing_column() {
        let raw = [0.1, 0.9, 0.4, 0.3, 0.7, 0.2];
        let m = pad_costs(3, 2, &raw, 0.1).unwrap();
        assert_eq!(m.n(), 3);
        for r in 0..3 {
            assert!((m.get(r, 2) - 1.0).abs() < 1e-12);
        }
        assert_eq!(m.padding_lines(), 1);
    }

    #[test]
    fn empty_side_uses_k_as_dummy() {
        let m = pad_costs(0, 3, &[], 0.5).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.dummy_value(), 0.5);
        let a = solve(&m);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_detections, vec![0, 1, 2]);
        assert!(a.unmatched_predictions.is_empty());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert_eq!(pad_costs(0, 0, &[], 1.0), Err(AssignmentError::Empty));
        assert!(matches!(
            pad_costs(1, 2, &[0.1, f64::NAN], 1.0),
            Err(AssignmentError::NonFinite { row: 0, col: 1 })
        ));
        assert!(matches!(
            pad_costs(2, 1, &[0.1, -0.5], 1.0),
            Err(AssignmentError::Negative { row: 1, col: 0, .. })
        ));
        assert_eq!(
            pad_costs(1, 1, &[0.1], 0.0),
            Err(AssignmentError::InvalidPadding(0.0))
        );
        assert_eq!(
            pad_costs(1, 1, &[0.1], -1.0),
            Err(AssignmentError::InvalidPadding(-1.0))
        );
        assert!(matches!(
            pad_costs(2, 2, &[0.1], 1.0),
            Err(AssignmentError::Shape { .. })
        ));
    }

    #[test]
    fn masked_cells_take_dummy_and_never_match() {
        let raw = [Some(0.3), None, None, Some(0.6)];
        let m = pad_costs_masked(2, 2, &raw, 1.0).unwrap();
        assert!((m.dummy_value() - 1.6).abs() < 1e-12);
        assert_eq!(m.get(0, 1), m.dummy_value());
        assert!(!m.is_admissible(0, 1));

        let forced = pad_costs_masked(1, 1, &[None], 1.0).unwrap();
        let a = solve(&forced);
        assert!(a.matches.is_empty());
        assert_eq!(a.unmatched_predictions, vec![0]);
        assert_eq!(a.unmatched_detections, vec![0]);
    }

    #[test]
    fn gated_padding_adds_a_partner_per_orphan() {
        // Rows: track of class A, track of class B. Columns: two class-B
        // detections. Row 0 cannot match anything.
        let raw = [None, None, Some(0.2), Some(0.4)];
        let m = pad_costs_gated(2, 2, &raw, 1.0, 3).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.padding_lines(), 2);
        let a = solve(&m);
        assert_eq!(a.matches, vec![(1, 0)]);
        assert_eq!(a.unmatched_predictions, vec![0]);
        assert_eq!(a.unmatched_detections, vec![1]);
    }

    #[test]
    fn diagonal_zero_matrix() {
        let m = square(&[&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0], &[1.0, 1.0, 0.0]]);
        let a = solve(&m);
        assert_eq!(a.pairs, vec![(0, 0), (1, 1), (2, 2)]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn two_by_two_enumerated() {
        // Permutations: identity = 1 + 1 = 2, swap = 2 + 2 = 4.
        let m = square(&[&[1.0, 2.0], &[2.0, 1.0]]);
        let a = solve(&m);
        assert_eq!(a.pairs, vec![(0, 0), (1, 1)]);
        assert_eq!(a.total_cost, 2.0);
        assert_eq!(brute_force_solve(&m).unwrap().total_cost, 2.0);
    }

    #[test]
    fn brute_force_single_cell() {
        let m = square(&[&[0.7]]);
        let a = brute_force_solve(&m).unwrap();
        assert_eq!(a.pairs, vec![(0, 0)]);
        assert_eq!(a.total_cost, 0.7);
    }

    #[test]
    fn brute_force_refuses_large() {
        let m = pad_costs(10, 10, &[0.0; 100], 1.0).unwrap();
        assert_eq!(brute_force_solve(&m), Err(AssignmentError::TooLarge(10)));
    }

    #[test]
    fn ties_resolve_to_lowest_row_then_column() {
        let m = square(&[&[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]);
        assert_eq!(solve(&m).pairs, vec![(0, 0), (1, 1), (2, 2)]);

        // Both anti-diagonal and diagonal cost 2; the diagonal wins.
        let m = square(&[&[1.0, 1.0], &[1.0, 1.0]]);
        assert_eq!(solve(&m).pairs, vec![(0, 0), (1, 1)]);

        // Row 0 prefers column 1 even though column 2 ties for it.
        let m = square(&[&[5.0, 1.0, 1.0], &[1.0, 5.0, 5.0], &[5.0, 5.0, 1.0]]);
        let a = solve(&m);
        assert_eq!(a.pairs, vec![(0, 1), (1, 0), (2, 2)]);
        assert_eq!(a.pairs, brute_force_solve(&m).unwrap().pairs);
    }

    #[test]
    fn splits_genuine_and_dummy_pairs() {
        // Two predictions, three detections: detection 1 is new.
        let raw = [0.1, 0.9, 0.8, 0.9, 0.8, 0.2];
        let a = solve(&pad_costs(2, 3, &raw, 1.0).unwrap());
        assert_eq!(a.matches, vec![(0, 0), (1, 2)]);
        assert_eq!(a.unmatched_detections, vec![1]);
        assert!(a.unmatched_predictions.is_empty());
    }

    #[test]
    fn step_counts() {
        let s = step_count_model(&[2, 2, 2]).unwrap();
        assert_eq!(
            (
                s.monolithic,
                s.partitioned_sequential,
                s.partitioned_parallel
            ),
            (216, 24, 8)
        );
        let s = step_count_model(&[6]).unwrap();
        assert_eq!(
            (
                s.monolithic,
                s.partitioned_sequential,
                s.partitioned_parallel
            ),
            (216, 216, 216)
        );
        let s = step_count_model(&[3, 2, 1]).unwrap();
        assert_eq!(
            (
                s.monolithic,
                s.partitioned_sequential,
                s.partitioned_parallel
            ),
            (216, 36, 27)
        );
        assert_eq!(step_count_model(&[0, 0]), Err(AssignmentError::NoObjects));
        assert_eq!(step_count_model(&[]), Err(AssignmentError::NoObjects));
    }

    fn random_matrix(max_n: usize, integer: bool) -> impl Strategy<Value = CostMatrix> {
        (1..=max_n).prop_flat_map(move |n| {
            let cell = if integer {
                (0u32..=10).prop_map(f64::from).boxed()
            } else {
                (0.0f64..10.0).boxed()
            };
            prop::collection::vec(cell, n * n)
                .prop_map(move |raw| pad_costs(n, n, &raw, 1.0).unwrap())
        })
    }

    proptest! {
        #[test]
        fn matches_brute_force_integer(m in random_matrix(6, true)) {
            let fast = solve(&m);
            let slow = brute_force_solve(&m).unwrap();
            prop_assert_eq!(fast.total_cost, slow.total_cost);
            prop_assert_eq!(fast.pairs, slow.pairs);
        }

        #[test]
        fn matches_brute_force_real(m in random_matrix(6, false)) {
            let fast = solve(&m);
            let slow = brute_force_solve(&m).unwrap();
            prop_assert!((fast.total_cost - slow.total_cost).abs() <= 1e-9);
        }

        #[test]
        fn is_a_permutation(m in random_matrix(8, false)) {
            let a = solve(&m);
            let mut cols: Vec<usize> = a.pairs.iter().map(|p| p.1).collect();
            cols.sort_unstable();
            prop_assert_eq!(cols, (0..m.n()).collect::<Vec<_>>());
            let sum: f64 = a.pairs.iter().map(|&(r, c)| m.get(r, c)).sum();
            prop_assert!((sum - a.total_cost).abs() < 1e-12);
        }

        #[test]
        fn deterministic_and_scale_invariant(m in random_matrix(7, true), factor in 0.01f64..100.0) {
            let a = solve(&m);
            prop_assert_eq!(&a.pairs, &solve(&m).pairs);
            prop_assert_eq!(&a.pairs, &solve(&m.scaled(factor)).pairs);
        }

        #[test]
        fn padded_rectangles_cover_everything(
            (p, d, raw) in (0usize..6, 0usize..6)
                .prop_filter("non-empty", |(p, d)| p + d > 0)
                .prop_flat_map(|(p, d)| (Just(p), Just(d), prop::collection::vec(0.0f64..2.0, p * d)))
        ) {
            let a = solve(&pad_costs(p, d, &raw, 1.0).unwrap());
            let mut rows: Vec<usize> = a.matches.iter().map(|m| m.0).chain(a.unmatched_predictions.iter().copied()).collect();
            let mut cols: Vec<usize> = a.matches.iter().map(|m| m.1).chain(a.unmatched_detections.iter().copied()).collect();
            rows.sort_unstable();
            cols.sort_unstable();
            prop_assert_eq!(rows, (0..p).collect::<Vec<_>>());
            prop_assert_eq!(cols, (0..d).collect::<Vec<_>>());
            prop_assert_eq!(a.matches.len(), p.min(d));
        }

        #[test]
        fn balanced_blocks_never_use_dummies(n in 1usize..6, raw in prop::collection::vec(0.0f64..2.0, 36)) {
            let a = solve(&pad_costs(n, n, &raw[..n * n], 1.0).unwrap());
            prop_assert_eq!(a.matches.len(), n);
            prop_assert!(a.unmatched_predictions.is_empty() && a.unmatched_detections.is_empty());
        }
    }
}
