//! Dense two-phase simplex with Bland's rule, sized for the small systems of
//! the joint-probability check (tens of rows and columns).
//!
//! Solves `min cᵀx` subject to `A x = b`, `x ≥ 0`. Phase 1 minimizes the sum
//! of one artificial variable per row. When phase 1 ends with a positive
//! optimum, its dual solution `y` satisfies `Aᵀy ≤ 0` and `bᵀy > 0`, a
//! Farkas certificate of infeasibility.

pub const PIVOT_EPS: f64 = 1e-12;
pub const FEASIBILITY_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal {
        x: Vec<f64>,
        objective: f64,
    },
    /// Phase-1 optimum and its dual vector.
    Infeasible {
        phase1_objective: f64,
        farkas: Vec<f64>,
    },
    Unbounded,
}

struct Tableau {
    m: usize,
    /// Structural columns; artificials follow at `n..n+m`.
    n: usize,
    rows: Vec<Vec<f64>>,
    /// Reduced costs, last entry is minus the objective value.
    z: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.n + self.m + 1
    }

    fn rhs(&self) -> usize {
        self.n + self.m
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.rows[r][c];
        for j in 0..w {
            self.rows[r][j] /= p;
        }
        let pivot_row = self.rows[r].clone();
        for i in 0..self.m {
            if i != r && self.active[i] {
                let f = self.rows[i][c];
                if f != 0.0 {
                    for j in 0..w {
                        self.rows[i][j] -= f * pivot_row[j];
                    }
                }
            }
        }
        let f = self.z[c];
        if f != 0.0 {
            for j in 0..w {
                self.z[j] -= f * pivot_row[j];
            }
        }
        self.basis[r] = c;
    }

    fn reset_costs(&mut self, cost: &[f64]) {
        let w = self.width();
        self.z = cost.to_vec();
        self.z.resize(w, 0.0);
        for i in 0..self.m {
            if !self.active[i] {
                continue;
            }
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..w {
                    self.z[j] -= cb * self.rows[i][j];
                }
            }
        }
    }

    /// Runs Bland's rule over columns `0..limit`. Returns `false` when
    /// unbounded.
    fn optimize(&mut self, limit: usize) -> bool {
        let rhs = self.rhs();
        loop {
            let Some(c) = (0..limit).find(|&j| self.z[j] < -PIVOT_EPS) else {
                return true;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for i in 0..self.m {
                if !self.active[i] || self.rows[i][c] <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rows[i][rhs] / self.rows[i][c];
                let better = match best {
                    None => true,
                    Some((r, _, b)) => {
                        ratio < r - PIVOT_EPS || (ratio <= r + PIVOT_EPS && self.basis[i] < b)
                    }
                };
                if better {
                    best = Some((ratio, i, self.basis[i]));
                }
            }
            let Some((_, r, _)) = best else {
                return false;
            };
            self.pivot(r, c);
        }
    }
}

/// Solves `min cᵀx, A x = b, x ≥ 0`.
pub fn solve(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    let mut flip = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for i in 0..m {
        assert_eq!(a[i].len(), n);
        flip[i] = b[i] < 0.0;
        let s = if flip[i] { -1.0 } else { 1.0 };
        let mut row: Vec<f64> = a[i].iter().map(|v| s * v).collect();
        row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
        row.push(s * b[i]);
        rows.push(row);
    }
    let mut t = Tableau {
        m,
        n,
        rows,
        z: Vec::new(),
        basis: (n..n + m).collect(),
        active: vec![true; m],
    };
    let mut phase1_cost = vec![0.0; n];
    phase1_cost.extend(std::iter::repeat(1.0).take(m));
    t.reset_costs(&phase1_cost);
    t.optimize(n + m);
    let rhs = t.rhs();
    let w = -t.z[rhs];
    if w > FEASIBILITY_EPS {
        // Reduced cost of artificial k is 1 − y_k.
        let farkas = (0..m)
            .map(|k| {
                let y = 1.0 - t.z[n + k];
                if flip[k] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        return LpOutcome::Infeasible {
            phase1_objective: w,
            farkas,
        };
    }
    // Drive artificials out of the basis; rows where that is impossible are
    // redundant and dropped.
    for i in 0..m {
        if t.basis[i] < n {
            continue;
        }
        match (0..n).find(|&j| t.rows[i][j].abs() > 1e-9) {
            Some(j) => t.pivot(i, j),
            None => t.active[i] = false,
        }
    }
    t.reset_costs(c);
    if !t.optimize(n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![0.0; n];
    for i in 0..m {
        if t.active[i] && t.basis[i] < n {
            x[t.basis[i]] = t.rows[i][rhs].max(0.0);
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    LpOutcome::Optimal { x, objective }
}
