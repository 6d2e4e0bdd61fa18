//! Dense tableau simplex for small LPs of the form
//!
//! ```text
//! maximize c·x   subject to  A x ≤ b,  x ≥ 0,   with b ≥ 0,
//! ```
//!
//! returning both the primal solution and the dual prices read off the slack
//! columns. The all-slack basis is feasible (b ≥ 0), so no phase one is
//! needed. Bland's rule keeps degenerate pivoting finite; the group rows of
//! the ad-allocation LP have b = 0 and do produce degenerate pivots.

pub struct SimplexSolution {
    pub x: Vec<f64>,
    /// Dual value per constraint row (≥ 0 up to round-off).
    pub duals: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

#[derive(Debug)]
pub enum SimplexError {
    Unbounded,
    IterationLimit,
}

const RC_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-11;

pub fn solve_max(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<SimplexSolution, SimplexError> {
    let m = a.len();
    let n = c.len();
    debug_assert!(b.iter().all(|&bi| bi >= 0.0));

    // tableau: m rows × (n structural + m slack) columns, plus rhs
    let cols = n + m;
    let mut tab: Vec<Vec<f64>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        debug_assert_eq!(row.len(), n);
        let mut t = vec![0.0; cols + 1];
        t[..n].copy_from_slice(row);
        t[n + i] = 1.0;
        t[cols] = b[i];
        tab.push(t);
    }
    // reduced-cost row d_j = c_j − z_j; entering while some d_j > 0
    let mut d = vec![0.0; cols + 1];
    d[..n].copy_from_slice(c);
    let mut basis: Vec<usize> = (n..cols).collect();

    let max_pivots = 50 * (m + n).max(64);
    let mut pivots = 0;
    // Bland: smallest improving column index
    while let Some(enter) = (0..cols).find(|&j| d[j] > RC_TOL) {
        // ratio test; ties resolved toward the smallest basic variable index
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let coef = tab[i][enter];
            if coef > PIVOT_TOL {
                let ratio = tab[i][cols] / coef;
                let better = match leave {
                    None => true,
                    Some(current) => {
                        ratio < best_ratio - 1e-12
                            || ((ratio - best_ratio).abs() <= 1e-12 && basis[i] < basis[current])
                    }
                };
                if better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(SimplexError::Unbounded);
        };

        // pivot on (leave, enter)
        let pivot = tab[leave][enter];
        for v in tab[leave].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = tab[leave].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != leave {
                let factor = row[enter];
                if factor != 0.0 {
                    for (v, &p) in row.iter_mut().zip(&pivot_row) {
                        *v -= factor * p;
                    }
                }
            }
        }
        let factor = d[enter];
        for (v, &p) in d.iter_mut().zip(&pivot_row) {
            *v -= factor * p;
        }
        basis[leave] = enter;

        pivots += 1;
        if pivots > max_pivots {
            return Err(SimplexError::IterationLimit);
        }
    }

    let mut x = vec![0.0; n];
    for (i, &var) in basis.iter().enumerate() {
        if var < n {
            x[var] = tab[i][cols];
        }
    }
    // dual price of row i = −d at its slack column (0 for basic slacks)
    let duals: Vec<f64> = (0..m).map(|i| (-d[n + i]).max(0.0)).collect();
    let objective = -d[cols];
    Ok(SimplexSolution { x, duals, objective, pivots })
}
