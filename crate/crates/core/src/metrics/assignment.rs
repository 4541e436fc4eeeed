//! Linear assignment: exact Hungarian (shortest augmenting paths with dual
//! potentials, O(N³)) and an ε-scaling auction approximation for very large
//! problems.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;

/// Below this size the plain column reduction is cheap enough.
const AUCTION_SEED_MIN: usize = 64;
/// Relative gap at which the seeding auction stops.
const AUCTION_SEED_GAP: f64 = 1e-4;

/// Dense row-major cost matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidArgument(format!(
                "cost matrix data has {} entries, expected {rows}x{cols}",
                data.len()
            )));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CostMatrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::NonSquareMatrix {
                rows: rows.len(),
                cols: bad.len(),
            });
        }
        Ok(CostMatrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    fn validate(&self) -> Result<()> {
        if self.rows != self.cols {
            return Err(Error::NonSquareMatrix {
                rows: self.rows,
                cols: self.cols,
            });
        }
        if let Some(pos) = self.data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteCost {
                row: pos / self.cols,
                col: pos % self.cols,
            });
        }
        Ok(())
    }
}

/// A perfect matching: row `i` is matched to column `mapping[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub mapping: Vec<usize>,
    pub total_cost: f64,
}

impl Assignment {
    fn from_mapping(cost: &CostMatrix, mapping: Vec<usize>) -> Self {
        let total_cost = mapping.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum();
        Assignment { mapping, total_cost }
    }

    pub fn is_bijection(&self) -> bool {
        let n = self.mapping.len();
        let mut seen = vec![false; n];
        self.mapping.iter().all(|&j| j < n && !std::mem::replace(&mut seen[j], true))
    }
}

/// Column potentials retained between solves of slowly changing problems.
///
/// Any potentials yield a correct optimum; potentials close to the new
/// problem's optimal duals mean fewer augmenting paths.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    col_potential: Vec<f64>,
}

impl WarmStart {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Minimum-cost perfect matching of a square matrix.
pub fn solve_assignment(cost: &CostMatrix) -> Result<Assignment> {
    cost.validate()?;
    Ok(hungarian(cost, None))
}

/// As [`solve_assignment`], seeding the dual potentials from `warm` and
/// storing the final potentials back into it.
pub fn solve_assignment_warm(cost: &CostMatrix, warm: &mut WarmStart) -> Result<Assignment> {
    cost.validate()?;
    Ok(hungarian(cost, Some(warm)))
}

fn hungarian(cost: &CostMatrix, warm: Option<&mut WarmStart>) -> Assignment {
    let n = cost.rows;
    if n == 0 {
        return Assignment {
            mapping: Vec::new(),
            total_cost: 0.0,
        };
    }
    let mut v = vec![0.0; n];
    match warm.as_ref() {
        Some(w) if w.col_potential.len() == n => v.copy_from_slice(&w.col_potential),
        _ if n >= AUCTION_SEED_MIN => {
            // Near-optimal auction prices are near-optimal duals: most rows
            // then land on a free cheapest column and paths stay short.
            let (_, price, _) = auction(cost, AUCTION_SEED_GAP);
            for (vj, p) in v.iter_mut().zip(price) {
                *vj = -p;
            }
        }
        _ => {
            for (j, vj) in v.iter_mut().enumerate() {
                *vj = (0..n).map(|i| cost.get(i, j)).fold(f64::INFINITY, f64::min);
            }
        }
    }

    // Invariant from here on: every assigned row sits on a column of minimum
    // reduced cost `c[i][j] - v[j]` within its row.
    let mut row_of_col = vec![NONE; n];
    let mut col_of_row = vec![NONE; n];
    let mut free = Vec::new();
    for i in 0..n {
        let (best_j, _, _) = two_smallest(cost.row(i), &v);
        if row_of_col[best_j] == NONE {
            row_of_col[best_j] = i;
            col_of_row[i] = best_j;
        } else {
            free.push(i);
        }
    }

    augmenting_row_reduction(cost, &mut v, &mut row_of_col, &mut col_of_row, &mut free);

    let mut search = PathSearch::new(n);
    for &i in &free {
        search.augment(cost, &mut v, &mut row_of_col, &mut col_of_row, i);
    }

    if let Some(w) = warm {
        w.col_potential.clear();
        w.col_potential.extend_from_slice(&v);
    }
    Assignment::from_mapping(cost, col_of_row)
}

/// Smallest and second-smallest reduced cost of a row:
/// `(argmin, min, second min)`.
#[inline]
fn two_smallest(row: &[f64], v: &[f64]) -> (usize, f64, f64) {
    two_smallest_by(row, v, |c, vj| c - vj)
}

/// As [`two_smallest`] for `row[j] + price[j]`.
#[inline]
fn two_smallest_plus(row: &[f64], price: &[f64]) -> (usize, f64, f64) {
    two_smallest_by(row, price, |c, p| c + p)
}

#[inline(always)]
fn two_smallest_by(row: &[f64], other: &[f64], f: impl Fn(f64, f64) -> f64) -> (usize, f64, f64) {
    let (mut best_j, mut best, mut second) = (0, f64::INFINITY, f64::INFINITY);
    for (j, (&c, &vj)) in row.iter().zip(other).enumerate() {
        let r = f(c, vj);
        if r < second {
            if r < best {
                second = best;
                best = r;
                best_j = j;
            } else {
                second = r;
            }
        }
    }
    (best_j, best, second)
}

/// Auction-like pass over the free rows: each takes its cheapest column,
/// lowering that column's potential to the row's second-best level and
/// evicting the previous owner. Lowering a potential only makes the column
/// less attractive to other rows, so the row-minimum invariant survives.
/// Rows still free afterwards are left in `free`.
fn augmenting_row_reduction(
    cost: &CostMatrix,
    v: &mut [f64],
    row_of_col: &mut [usize],
    col_of_row: &mut [usize],
    free: &mut Vec<usize>,
) {
    let n = cost.rows;
    for _pass in 0..2 {
        if free.is_empty() {
            return;
        }
        let mut queue: std::collections::VecDeque<usize> = std::mem::take(free).into();
        let mut steps = 0;
        while let Some(i) = queue.pop_front() {
            steps += 1;
            if steps > 4 * n {
                free.push(i);
                free.extend(queue.drain(..));
                break;
            }
            let (mut j, best, second) = two_smallest(cost.row(i), v);
            let mut owner = row_of_col[j];
            let lowered = best < second;
            if lowered {
                if second.is_finite() {
                    v[j] -= second - best;
                }
            } else if owner != NONE {
                // Tie: prefer a column nobody holds.
                if let Some(k) = (0..n).find(|&k| k != j && cost.get(i, k) - v[k] == best && row_of_col[k] == NONE) {
                    j = k;
                    owner = NONE;
                }
            }
            row_of_col[j] = i;
            col_of_row[i] = j;
            if owner != NONE {
                col_of_row[owner] = NONE;
                if lowered {
                    queue.push_front(owner);
                } else {
                    free.push(owner);
                }
            }
        }
    }
}

/// Scratch space for Dijkstra-style augmenting path searches over
/// reduced costs (Jonker–Volgenant).
struct PathSearch {
    dist: Vec<f64>,
    pred: Vec<usize>,
    cols: Vec<usize>,
}

impl PathSearch {
    fn new(n: usize) -> Self {
        PathSearch {
            dist: vec![0.0; n],
            pred: vec![0; n],
            cols: (0..n).collect(),
        }
    }

    fn augment(&mut self, cost: &CostMatrix, v: &mut [f64], row_of_col: &mut [usize], col_of_row: &mut [usize], start: usize) {
        let n = cost.rows;
        let PathSearch { dist, pred, cols } = self;
        let row = cost.row(start);
        for j in 0..n {
            dist[j] = row[j] - v[j];
            pred[j] = start;
        }
        // cols[..low] are finalized, cols[low..up] sit at the current minimum
        // distance and await scanning, cols[up..] are unreached.
        let (mut low, mut up, mut last) = (0, 0, 0);
        let mut min = 0.0;
        let end = 'search: loop {
            if low == up {
                last = low;
                min = dist[cols[up]];
                up += 1;
                for k in up..n {
                    let j = cols[k];
                    let d = dist[j];
                    if d <= min {
                        if d < min {
                            up = low;
                            min = d;
                        }
                        cols[k] = cols[up];
                        cols[up] = j;
                        up += 1;
                    }
                }
                if let Some(&j) = cols[low..up].iter().find(|&&j| row_of_col[j] == NONE) {
                    break 'search j;
                }
            }
            let j1 = cols[low];
            low += 1;
            let i = row_of_col[j1];
            let crow = cost.row(i);
            let u = crow[j1] - v[j1] - min;
            let mut k = up;
            while k < n {
                let j = cols[k];
                let d = crow[j] - v[j] - u;
                if d < dist[j] {
                    dist[j] = d;
                    pred[j] = i;
                    if d == min {
                        if row_of_col[j] == NONE {
                            break 'search j;
                        }
                        cols[k] = cols[up];
                        cols[up] = j;
                        up += 1;
                    }
                }
                k += 1;
            }
        };
        for &j in &cols[..last] {
            v[j] += dist[j] - min;
        }
        let mut j = end;
        loop {
            let i = pred[j];
            row_of_col[j] = i;
            let previous = std::mem::replace(&mut col_of_row[i], j);
            if i == start {
                break;
            }
            j = previous;
        }
    }
}

/// Result of the auction approximation, with its certified optimality gap.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxAssignment {
    pub assignment: Assignment,
    /// Upper bound on `(cost - optimum) / optimum`.
    pub relative_gap_bound: f64,
}

/// ε-scaling auction. Stops once the assignment is certified within
/// `relative_gap` of the optimum (the auction guarantees `cost ≤ opt + N·ε`).
pub fn solve_assignment_auction(cost: &CostMatrix, relative_gap: f64) -> Result<ApproxAssignment> {
    cost.validate()?;
    if !(relative_gap > 0.0) {
        return Err(Error::InvalidArgument("relative gap must be positive".into()));
    }
    let n = cost.rows;
    if n == 0 {
        return Ok(ApproxAssignment {
            assignment: Assignment {
                mapping: Vec::new(),
                total_cost: 0.0,
            },
            relative_gap_bound: 0.0,
        });
    }
    let (assignment, _, slack) = auction(cost, relative_gap);
    let lower = (assignment.total_cost - slack).max(0.0);
    let relative_gap_bound = if assignment.total_cost == 0.0 {
        0.0
    } else if lower > 0.0 {
        slack / lower
    } else {
        f64::INFINITY
    };
    Ok(ApproxAssignment {
        assignment,
        relative_gap_bound,
    })
}

/// ε-scaling forward auction on a validated, non-empty matrix. Returns the
/// assignment, the final column prices (for minimization, `c[i][j] + price[j]`
/// is what rows compare) and the additive slack `N·ε` bounding
/// `cost − optimum`.
fn auction(cost: &CostMatrix, relative_gap: f64) -> (Assignment, Vec<f64>, f64) {
    let n = cost.rows;
    let max_cost = cost.data.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
    let mut price = vec![0.0; n];
    if max_cost == 0.0 {
        return (Assignment::from_mapping(cost, (0..n).collect()), price, 0.0);
    }
    let mut eps = max_cost / 4.0;
    let floor = max_cost * 1e-15;
    let mut owner = vec![NONE; n];
    let mut col_of_row = vec![NONE; n];
    let mut unassigned: Vec<usize> = Vec::with_capacity(n);
    loop {
        owner.fill(NONE);
        col_of_row.fill(NONE);
        unassigned.clear();
        unassigned.extend((0..n).rev());
        while let Some(i) = unassigned.pop() {
            let (best_j, best, second) = two_smallest_plus(cost.row(i), &price);
            let increment = if second.is_finite() { second - best } else { 0.0 };
            price[best_j] += increment + eps;
            let previous = std::mem::replace(&mut owner[best_j], i);
            col_of_row[i] = best_j;
            if previous != NONE {
                col_of_row[previous] = NONE;
                unassigned.push(previous);
            }
        }
        let assignment = Assignment::from_mapping(cost, col_of_row.clone());
        let slack = n as f64 * eps;
        let lower = (assignment.total_cost - slack).max(0.0);
        let certified = lower > 0.0 && slack <= relative_gap * lower;
        if certified || eps <= floor {
            return (assignment, price, slack);
        }
        eps /= 5.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive minimum over all permutations (Heap's algorithm).
    fn brute_force_min(cost: &CostMatrix) -> f64 {
        let n = cost.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        let eval = |p: &[usize]| p.iter().enumerate().map(|(i, &j)| cost.get(i, j)).sum::<f64>();
        let mut best = eval(&perm);
        let mut c = vec![0usize; n];
        let mut i = 0;
        while i < n {
            if c[i] < i {
                if i % 2 == 0 {
                    perm.swap(0, i);
                } else {
                    perm.swap(c[i], i);
                }
                best = best.min(eval(&perm));
                c[i] += 1;
                i = 0;
            } else {
                c[i] = 0;
                i += 1;
            }
        }
        best
    }

    /// Textbook O(N³) Hungarian with row/column potentials (1-indexed,
    /// column 0 as the search root); an independent reference for sizes too
    /// large to enumerate.
    fn reference_hungarian(cost: &CostMatrix) -> f64 {
        let n = cost.rows();
        let (mut u, mut v) = (vec![0.0; n + 1], vec![0.0; n + 1]);
        let (mut p, mut way) = (vec![0usize; n + 1], vec![0usize; n + 1]);
        for i in 1..=n {
            p[0] = i;
            let mut j0 = 0;
            let mut minv = vec![f64::INFINITY; n + 1];
            let mut used = vec![false; n + 1];
            loop {
                used[j0] = true;
                let (i0, mut delta, mut j1) = (p[j0], f64::INFINITY, 0);
                for j in 1..=n {
                    if !used[j] {
                        let cur = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                        if cur < minv[j] {
                            minv[j] = cur;
                            way[j] = j0;
                        }
                        if minv[j] < delta {
                            delta = minv[j];
                            j1 = j;
                        }
                    }
                }
                for j in 0..=n {
                    if used[j] {
                        u[p[j]] += delta;
                        v[j] -= delta;
                    } else {
                        minv[j] -= delta;
                    }
                }
                j0 = j1;
                if p[j0] == 0 {
                    break;
                }
            }
            loop {
                let j1 = way[j0];
                p[j0] = p[j1];
                j0 = j1;
                if j0 == 0 {
                    break;
                }
            }
        }
        (1..=n).map(|j| cost.get(p[j] - 1, j - 1)).sum()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CostMatrix {
        CostMatrix::from_fn(n, n, |_, _| rng.random_range(0.0..10.0))
    }

    #[test]
    fn zero_diagonal() {
        let a = solve_assignment(&CostMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()).unwrap();
        assert_eq!(a.mapping, vec![0, 1]);
        assert_eq!(a.total_cost, 0.0);
    }

    #[test]
    fn two_by_two_prefers_diagonal() {
        let a = solve_assignment(&CostMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 1.0]]).unwrap()).unwrap();
        assert_eq!(a.total_cost, 2.0);
        assert_eq!(a.mapping, vec![0, 1]);
    }

    #[test]
    fn rejects_bad_matrices() {
        let rect = CostMatrix::new(2, 3, vec![0.0; 6]).unwrap();
        assert!(matches!(solve_assignment(&rect), Err(Error::NonSquareMatrix { .. })));
        let nan = CostMatrix::new(2, 2, vec![0.0, f64::NAN, 1.0, 1.0]).unwrap();
        assert!(matches!(solve_assignment(&nan), Err(Error::NonFiniteCost { row: 0, col: 1 })));
        assert!(CostMatrix::from_rows(&[vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn empty_and_single() {
        assert_eq!(solve_assignment(&CostMatrix::new(0, 0, vec![]).unwrap()).unwrap().total_cost, 0.0);
        let a = solve_assignment(&CostMatrix::new(1, 1, vec![4.5]).unwrap()).unwrap();
        assert_eq!((a.mapping, a.total_cost), (vec![0], 4.5));
    }

    #[test]
    fn matches_permutation_enumeration_7x7() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let m = random_matrix(&mut rng, 7);
            let a = solve_assignment(&m).unwrap();
            assert!(a.is_bijection());
            assert!((a.total_cost - brute_force_min(&m)).abs() < 1e-9);
            assert!((a.total_cost - reference_hungarian(&m)).abs() < 1e-9);
        }
    }

    #[test]
    fn handles_ties_and_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for n in 1..=7 {
            let m = CostMatrix::from_fn(n, n, |_, _| rng.random_range(0..3) as f64);
            let a = solve_assignment(&m).unwrap();
            assert!(a.is_bijection());
            assert_eq!(a.total_cost, brute_force_min(&m));
        }
    }

    #[test]
    fn warm_start_gives_same_optimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let base = random_matrix(&mut rng, 60);
        let mut warm = WarmStart::new();
        solve_assignment_warm(&base, &mut warm).unwrap();
        for _ in 0..5 {
            let perturbed = CostMatrix::from_fn(60, 60, |i, j| base.get(i, j) + rng.random_range(0.0..0.5));
            let cold = solve_assignment(&perturbed).unwrap();
            let hot = solve_assignment_warm(&perturbed, &mut warm).unwrap();
            assert!(hot.is_bijection());
            assert!((cold.total_cost - hot.total_cost).abs() < 1e-9);
        }
        // Potentials from an unrelated problem are still correct, just slower.
        let other = random_matrix(&mut rng, 60);
        let hot = solve_assignment_warm(&other, &mut warm).unwrap();
        assert!((hot.total_cost - solve_assignment(&other).unwrap().total_cost).abs() < 1e-9);
    }

    #[test]
    fn matches_reference_on_larger_problems() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [20, 75, 150] {
            let m = random_matrix(&mut rng, n);
            let a = solve_assignment(&m).unwrap();
            assert!(a.is_bijection());
            assert!((a.total_cost - reference_hungarian(&m)).abs() < 1e-9);
            // Heavily tied integer costs stress the equal-distance paths.
            let m = CostMatrix::from_fn(n, n, |_, _| rng.random_range(0..4) as f64);
            let a = solve_assignment(&m).unwrap();
            assert!(a.is_bijection());
            assert_eq!(a.total_cost, reference_hungarian(&m));
        }
    }

    #[test]
    fn euclidean_clouds_match_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for n in [50, 200] {
            let a: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            let b: Vec<[f64; 3]> = (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect();
            let d = |p: &[f64; 3], q: &[f64; 3]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            let m = CostMatrix::from_fn(n, n, |i, j| d(&a[i], &b[j]));
            let got = solve_assignment(&m).unwrap().total_cost;
            assert!((got - reference_hungarian(&m)).abs() < 1e-9);
            // A grid against itself: the optimum is zero and massively tied.
            let grid: Vec<[f64; 3]> = (0..n).map(|k| [(k % 10) as f64, (k / 10) as f64, 0.0]).collect();
            let m = CostMatrix::from_fn(n, n, |i, j| d(&grid[i], &grid[j]));
            assert_eq!(solve_assignment(&m).unwrap().total_cost, 0.0);
        }
    }

    #[test]
    fn auction_within_certified_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for n in [1, 5, 40, 120] {
            let m = CostMatrix::from_fn(n, n, |_, _| rng.random_range(0.5..10.0));
            let exact = solve_assignment(&m).unwrap().total_cost;
            let approx = solve_assignment_auction(&m, 1e-3).unwrap();
            assert!(approx.assignment.is_bijection());
            assert!(approx.relative_gap_bound <= 1e-3);
            assert!(approx.assignment.total_cost >= exact - 1e-9);
            assert!(approx.assignment.total_cost <= exact * (1.0 + 1e-3) + 1e-12);
        }
    }
}
