//! Dense two-phase simplex for small equality-form linear programs:
//! maximize `c·x` subject to `A x = b`, `x >= 0`.
//!
//! The problems solved here have few rows (one per channel plus a
//! normalization row) and up to `2^16` columns, so a dense tableau is fine.

/// Pivot and feasibility tolerance.
pub const LP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize, // structural + artificial columns, excluding rhs
    width: usize,
    data: Vec<f64>, // (rows + 1) x width, objective row last
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.data[pr * w..(pr + 1) * w] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.data[r * w + pc];
            if f != 0.0 {
                for (v, p) in self.data[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                self.data[r * w + pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
    }

    /// Minimizes the objective row over columns `< allowed`. Returns false if
    /// unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        let obj = self.rows;
        let mut stall = 0usize;
        let mut last_value = f64::INFINITY;
        loop {
            let bland = stall > 50;
            let mut enter = None;
            let mut best = -LP_TOL;
            for c in 0..allowed {
                let d = self.at(obj, c);
                if d < best {
                    enter = Some(c);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(pc) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > LP_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-15
                                || (ratio <= lratio + 1e-15 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else { return false };
            self.pivot(pr, pc);
            let value = -self.rhs(obj);
            if value < last_value - 1e-15 {
                stall = 0;
                last_value = value;
            } else {
                stall += 1;
            }
        }
    }
}

fn phase_one(a: &[Vec<f64>], b: &[f64]) -> Option<Tableau> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let cols = n + m;
    let width = cols + 1;
    let mut data = vec![0.0; (m + 1) * width];
    for (i, (row, &bi)) in a.iter().zip(b).enumerate() {
        assert_eq!(row.len(), n, "ragged constraint matrix");
        let sign = if bi < 0.0 { -1.0 } else { 1.0 };
        for (j, &v) in row.iter().enumerate() {
            data[i * width + j] = sign * v;
        }
        data[i * width + n + i] = 1.0;
        data[i * width + cols] = sign * bi;
    }
    // Reduced costs of min Σ artificials with the artificials basic.
    for i in 0..m {
        for j in 0..n {
            data[m * width + j] -= data[i * width + j];
        }
        data[m * width + cols] -= data[i * width + cols];
    }
    let mut t = Tableau { rows: m, cols, width, data, basis: (n..n + m).collect() };
    t.run(n);
    let infeasibility = -t.rhs(m);
    let scale = 1.0 + b.iter().map(|v| v.abs()).sum::<f64>();
    if infeasibility > LP_TOL * scale {
        return None;
    }
    // Drive remaining artificials out of the basis where possible.
    for r in 0..m {
        if t.basis[r] >= n {
            if let Some(c) = (0..n).find(|&c| t.at(r, c).abs() > LP_TOL) {
                t.pivot(r, c);
            }
        }
    }
    Some(t)
}

fn extract(t: &Tableau, n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for (r, &bcol) in t.basis.iter().enumerate() {
        if bcol < n {
            x[bcol] = t.rhs(r).max(0.0);
        }
    }
    x
}

/// Finds any `x >= 0` with `A x = b`.
pub fn feasible_point(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.first().map_or(0, |r| r.len());
    phase_one(a, b).map(|t| extract(&t, n))
}

/// Maximizes `c·x` subject to `A x = b`, `x >= 0`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> LpOutcome {
    let n = c.len();
    let Some(mut t) = phase_one(a, b) else { return LpOutcome::Infeasible };
    let m = t.rows;
    let w = t.width;
    // Objective row for min -c·x in terms of the current basis.
    for j in 0..w {
        t.data[m * w + j] = 0.0;
    }
    for (j, cj) in c.iter().enumerate() {
        t.data[m * w + j] = -cj;
    }
    for r in 0..m {
        let bc = t.basis[r];
        let cb = if bc < n { -c[bc] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..w {
                t.data[m * w + j] -= cb * t.data[r * w + j];
            }
        }
    }
    if !t.run(n) {
        return LpOutcome::Unbounded;
    }
    let x = extract(&t, n);
    let value = x.iter().zip(c).map(|(a, b)| a * b).sum();
    LpOutcome::Optimal { x, value }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max() {
        // max 3x + 5y; x <= 4; 2y <= 12; 3x + 2y <= 18  (slacks s1..s3)
        let a = vec![
            vec![1.0, 0.0, 1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0, 1.0, 0.0],
            vec![3.0, 2.0, 0.0, 0.0, 1.0],
        ];
        let b = vec![4.0, 12.0, 18.0];
        let c = vec![3.0, 5.0, 0.0, 0.0, 0.0];
        match maximize(&c, &a, &b) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 36.0).abs() < 1e-9);
                assert!((x[0] - 2.0).abs() < 1e-9 && (x[1] - 6.0).abs() < 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        // x + y = -1 with x, y >= 0
        assert_eq!(maximize(&[1.0, 0.0], &[vec![1.0, 1.0]], &[-1.0]), LpOutcome::Infeasible);
        assert!(feasible_point(&[vec![1.0, 1.0]], &[-1.0]).is_none());
        // x - y = 1, max x
        assert_eq!(maximize(&[1.0, 0.0], &[vec![1.0, -1.0]], &[1.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows() {
        let a = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let b = vec![1.0, 2.0];
        match maximize(&[1.0, 2.0], &a, &b) {
            LpOutcome::Optimal { x, value } => {
                assert!((value - 2.0).abs() < 1e-9);
                assert!((x[1] - 1.0).abs() < 1e-9);
            }
            o => panic!("{o:?}"),
        }
    }
}
