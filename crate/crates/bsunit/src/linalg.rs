//! Integer linear algebra: row Hermite normal form and Smith normal form over Z.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

pub type Matrix = Vec<Vec<BigInt>>;

pub fn to_big(rows: &[Vec<i64>]) -> Matrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

/// Row-style Hermite normal form: returns the nonzero rows of an echelon basis of the
/// row lattice, pivots positive and entries above each pivot reduced into `[0, pivot)`.
pub fn hnf_rows(rows: &Matrix, ncols: usize) -> Matrix {
    let mut m: Matrix = rows
        .iter()
        .filter(|r| r.iter().any(|x| !x.is_zero()))
        .cloned()
        .collect();
    let mut out: Matrix = Vec::new();
    let mut col = 0;
    while col < ncols && !m.is_empty() {
        loop {
            // pick the row with the smallest nonzero entry in this column
            let mut best: Option<usize> = None;
            for (i, r) in m.iter().enumerate() {
                if !r[col].is_zero() {
                    match best {
                        None => best = Some(i),
                        Some(b) if r[col].abs() < m[b][col].abs() => best = Some(i),
                        _ => {}
                    }
                }
            }
            let Some(b) = best else { break };
            let piv = m[b].clone();
            let mut done = true;
            for (i, r) in m.iter_mut().enumerate() {
                if i == b || r[col].is_zero() {
                    continue;
                }
                let q = r[col].div_floor(&piv[col]);
                for j in col..ncols {
                    r[j] -= &q * &piv[j];
                }
                if !r[col].is_zero() {
                    done = false;
                }
            }
            if done {
                let mut piv = m.swap_remove(b);
                if piv[col].is_negative() {
                    for x in piv.iter_mut() {
                        *x = -x.clone();
                    }
                }
                out.push(piv);
                break;
            }
        }
        m.retain(|r| r.iter().any(|x| !x.is_zero()));
        col += 1;
    }
    // reduce entries above pivots
    for i in 0..out.len() {
        let pc = (0..ncols).find(|&c| !out[i][c].is_zero()).unwrap();
        for k in 0..i {
            let q = out[k][pc].div_floor(&out[i][pc]);
            if !q.is_zero() {
                let row = out[i].clone();
                for j in 0..ncols {
                    out[k][j] -= &q * &row[j];
                }
            }
        }
    }
    out
}

/// Smith normal form diagonal of an integer matrix (invariant factors, zeros omitted).
pub fn smith_diagonal(mat: &Matrix) -> Vec<BigInt> {
    let mut m: Matrix = mat.clone();
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut diag = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // locate a nonzero entry of minimal absolute value in the trailing block
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !m[i][j].is_zero()
                    && best.map_or(true, |(bi, bj)| m[i][j].abs() < m[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((bi, bj)) = best else { break };
        m.swap(t, bi);
        for r in m.iter_mut() {
            r.swap(t, bj);
        }
        loop {
            let mut clean = true;
            for i in t + 1..rows {
                if !m[i][t].is_zero() {
                    let q = m[i][t].div_floor(&m[t][t]);
                    for j in t..cols {
                        let v = &q * &m[t][j];
                        m[i][j] -= v;
                    }
                    if !m[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..cols {
                if !m[t][j].is_zero() {
                    let q = m[t][j].div_floor(&m[t][t]);
                    for i in t..rows {
                        let v = &q * &m[i][t];
                        m[i][j] -= v;
                    }
                    if !m[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if clean {
                // divisibility condition on the trailing block
                let mut bad = None;
                'outer: for i in t + 1..rows {
                    for j in t + 1..cols {
                        if !(&m[i][j] % &m[t][t]).is_zero() {
                            bad = Some(i);
                            break 'outer;
                        }
                    }
                }
                match bad {
                    None => break,
                    Some(i) => {
                        for j in t..cols {
                            let v = m[i][j].clone();
                            m[t][j] += v;
                        }
                        continue;
                    }
                }
            }
            // move the smallest entry of row/column t to the pivot
            let mut best = (t, t);
            for i in t..rows {
                if !m[i][t].is_zero() && m[i][t].abs() < m[best.0][best.1].abs() {
                    best = (i, t);
                }
            }
            for j in t..cols {
                if !m[t][j].is_zero() && m[t][j].abs() < m[best.0][best.1].abs() {
                    best = (t, j);
                }
            }
            m.swap(t, best.0);
            for r in m.iter_mut() {
                r.swap(t, best.1);
            }
        }
        diag.push(m[t][t].abs());
        t += 1;
    }
    diag
}

/// Determinant by fraction-free elimination (Bareiss).
pub fn det(mat: &Matrix) -> BigInt {
    let n = mat.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut m = mat.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            let Some(s) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, s);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &m[i][j] * &m[k][k] - &m[i][k] * &m[k][j];
                m[i][j] = v / &prev;
            }
        }
        prev = m[k][k].clone();
    }
    sign * &m[n - 1][n - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smith_of_small_matrix() {
        let m = to_big(&[vec![2, 4, 4], vec![-6, 6, 12], vec![10, -4, -16]]);
        let d = smith_diagonal(&m);
        assert_eq!(d, vec![BigInt::from(2), BigInt::from(6), BigInt::from(12)]);
    }

    #[test]
    fn hnf_spans_same_lattice() {
        let m = to_big(&[vec![4, 6], vec![6, 9], vec![2, 1]]);
        let h = hnf_rows(&m, 2);
        assert_eq!(h.len(), 2);
        assert_eq!(h[0][0], BigInt::from(2));
        assert_eq!(&h[0][0] * &h[1][1], BigInt::from(4));
    }

    #[test]
    fn bareiss_determinant() {
        let m = to_big(&[vec![0, 2, 1], vec![3, 1, 4], vec![1, 5, 9]]);
        assert_eq!(det(&m), BigInt::from(-32));
    }
}
