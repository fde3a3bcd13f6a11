//! Small dense simplex for the margin problems of mixed-cell enumeration:
//!
//! ```text
//! maximize t  subject to  A x = b,  g_p · x >= h_p + t,  x free
//! ```

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-12;
const MAX_PIVOTS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Margin {
    /// The equality rows are linearly dependent.
    Dependent,
    /// Optimal margin, or a value already above the requested stop level.
    Value(f64),
}

/// `x = x0 + Z y` for the solution set of `A x = b`. `None` when `A` has
/// dependent rows.
fn affine_solutions(a: &[Vec<f64>], b: &[f64], n: usize) -> Option<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut rows: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &rhs)| {
            let mut r = r.clone();
            r.push(rhs);
            r
        })
        .collect();
    let mut pivots = Vec::with_capacity(rows.len());
    let mut r = 0;
    for c in 0..n {
        if r == rows.len() {
            break;
        }
        let (best, mag) = (r..rows.len())
            .map(|i| (i, rows[i][c].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= PIVOT_TOL {
            continue;
        }
        rows.swap(r, best);
        let p = rows[r][c];
        for v in rows[r].iter_mut() {
            *v /= p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0.0 {
                let f = rows[i][c];
                for j in c..=n {
                    rows[i][j] -= f * rows[r][j];
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if pivots.len() < rows.len() {
        return None;
    }
    let mut x0 = vec![0.0; n];
    for (i, &c) in pivots.iter().enumerate() {
        x0[c] = rows[i][n];
    }
    let mut is_pivot = vec![false; n];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let basis = (0..n)
        .filter(|&f| !is_pivot[f])
        .map(|f| {
            let mut z = vec![0.0; n];
            z[f] = 1.0;
            for (i, &c) in pivots.iter().enumerate() {
                z[c] = -rows[i][f];
            }
            z
        })
        .collect();
    Some((x0, basis))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Maximum of `t` (capped at `cap`). Stops early once `t > stop`.
pub fn max_margin(
    eq_rows: &[Vec<f64>],
    eq_rhs: &[f64],
    ineq_rows: &[Vec<f64>],
    ineq_rhs: &[f64],
    n: usize,
    cap: f64,
    stop: f64,
) -> Margin {
    let Some((x0, z)) = affine_solutions(eq_rows, eq_rhs, n) else {
        return Margin::Dependent;
    };
    if ineq_rows.is_empty() {
        return Margin::Value(cap);
    }
    let nf = z.len();
    // g'_p y >= h'_p + t
    let g: Vec<Vec<f64>> = ineq_rows
        .iter()
        .map(|row| z.iter().map(|zc| dot(row, zc)).collect())
        .collect();
    let h: Vec<f64> = ineq_rows
        .iter()
        .zip(ineq_rhs)
        .map(|(row, &hp)| hp - dot(row, &x0))
        .collect();
    let t0 = h.iter().map(|&x| -x).fold(f64::INFINITY, f64::min);
    if nf == 0 || t0 > stop || t0 >= cap {
        return Margin::Value(t0.min(cap));
    }

    // Variables: y+ (nf), y- (nf), tau; then one slack per row.
    // Rows: -g y+ + g y- + tau <= -h - t0, and tau <= cap - t0.
    let m = g.len() + 1;
    let nv = 2 * nf + 1;
    let width = nv + m + 1;
    let mut tab = vec![vec![0.0; width]; m + 1];
    for (p, gp) in g.iter().enumerate() {
        for j in 0..nf {
            tab[p][j] = -gp[j];
            tab[p][nf + j] = gp[j];
        }
        tab[p][2 * nf] = 1.0;
        tab[p][nv + p] = 1.0;
        tab[p][width - 1] = (-h[p] - t0).max(0.0);
    }
    tab[m - 1][2 * nf] = 1.0;
    tab[m - 1][nv + m - 1] = 1.0;
    tab[m - 1][width - 1] = cap - t0;
    // Objective row holds reduced costs of maximizing tau; last entry is -value.
    tab[m][2 * nf] = 1.0;
    let mut basis: Vec<usize> = (nv..nv + m).collect();

    for _ in 0..MAX_PIVOTS {
        let value = -tab[m][width - 1];
        if t0 + value > stop {
            return Margin::Value(t0 + value);
        }
        let Some(enter) = (0..nv + m).find(|&j| tab[m][j] > COST_TOL) else {
            return Margin::Value(t0 + value);
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            let a = tab[i][enter];
            if a > PIVOT_TOL {
                let ratio = tab[i][width - 1] / a;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((li, lr)) => {
                        if ratio < lr - 1e-15 || (ratio <= lr + 1e-15 && basis[i] < basis[li]) {
                            Some((i, ratio))
                        } else {
                            Some((li, lr))
                        }
                    }
                };
            }
        }
        let Some((row, _)) = leave else {
            return Margin::Value(cap);
        };
        let p = tab[row][enter];
        for v in tab[row].iter_mut() {
            *v /= p;
        }
        let pivot_row = tab[row].clone();
        for (i, r) in tab.iter_mut().enumerate() {
            if i != row {
                let f = r[enter];
                if f != 0.0 {
                    for (x, y) in r.iter_mut().zip(&pivot_row) {
                        *x -= f * y;
                    }
                }
            }
        }
        basis[row] = enter;
    }
    Margin::Value(t0 - tab[m][width - 1])
}
