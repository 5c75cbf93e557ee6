//! Integer linear algebra over small matrices: Smith normal form with
//! transforms, exact integer solving, lattice membership, and determinants.
//!
//! All matrices here are tiny (a handful of rows/columns, entries a few
//! digits), so `i128` arithmetic with textbook algorithms is both exact and
//! fast enough.

pub type Mat = Vec<Vec<i128>>;

pub fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect()
}

pub fn transpose(a: &[Vec<i128>]) -> Mat {
    if a.is_empty() {
        return Vec::new();
    }
    let cols = a[0].len();
    (0..cols)
        .map(|j| a.iter().map(|row| row[j]).collect())
        .collect()
}

pub fn mat_mul(a: &[Vec<i128>], b: &[Vec<i128>]) -> Mat {
    let inner = if a.is_empty() { 0 } else { a[0].len() };
    assert!(b.len() == inner);
    let cols = if b.is_empty() { 0 } else { b[0].len() };
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|j| (0..inner).map(|k| row[k] * b[k][j]).sum())
                .collect()
        })
        .collect()
}

pub fn mat_vec(a: &[Vec<i128>], x: &[i128]) -> Vec<i128> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

/// Smith normal form: returns `(d, p, q)` with `p * a * q = d`, `p` and `q`
/// unimodular and `d` diagonal with non-negative entries each dividing the
/// next.
pub fn smith_normal_form(a: &[Vec<i128>]) -> (Mat, Mat, Mat) {
    let m = a.len();
    let n = if m == 0 { 0 } else { a[0].len() };
    let mut d: Mat = a.to_vec();
    let mut p = identity(m);
    let mut q = identity(n);

    let mut t = 0;
    while t < m && t < n {
        // locate a smallest-magnitude nonzero entry in the trailing block
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if d[i][j] != 0
                    && pivot.is_none_or(|(pi, pj)| d[i][j].abs() < d[pi][pj].abs())
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        d.swap(t, pi);
        p.swap(t, pi);
        swap_cols(&mut d, t, pj);
        swap_cols(&mut q, t, pj);

        // clear the pivot row and column; restart whenever a remainder forces
        // a smaller pivot into view
        let mut dirty = true;
        while dirty {
            dirty = false;
            for i in t + 1..m {
                if d[i][t] != 0 {
                    let f = div_round(d[i][t], d[t][t]);
                    row_sub(&mut d, i, t, f);
                    row_sub(&mut p, i, t, f);
                    if d[i][t] != 0 {
                        d.swap(t, i);
                        p.swap(t, i);
                        dirty = true;
                    }
                }
            }
            for j in t + 1..n {
                if d[t][j] != 0 {
                    let f = div_round(d[t][j], d[t][t]);
                    col_sub(&mut d, j, t, f);
                    col_sub(&mut q, j, t, f);
                    if d[t][j] != 0 {
                        swap_cols(&mut d, t, j);
                        swap_cols(&mut q, t, j);
                        dirty = true;
                    }
                }
            }
        }

        // enforce the divisibility chain: fold any non-multiple into the pivot
        let mut fixed = false;
        'scan: for i in t + 1..m {
            for j in t + 1..n {
                if d[i][j] % d[t][t] != 0 {
                    for jj in 0..n {
                        d[t][jj] += d[i][jj];
                    }
                    for jj in 0..m {
                        p[t][jj] += p[i][jj];
                    }
                    fixed = true;
                    break 'scan;
                }
            }
        }
        if fixed {
            continue; // redo this pivot with the folded row
        }
        if d[t][t] < 0 {
            for jj in 0..n {
                d[t][jj] = -d[t][jj];
            }
            for jj in 0..m {
                p[t][jj] = -p[t][jj];
            }
        }
        t += 1;
    }
    (d, p, q)
}

/// The positive diagonal invariant factors of `a` (zeros omitted).
pub fn invariant_factors(a: &[Vec<i128>]) -> Vec<i128> {
    let (d, _, _) = smith_normal_form(a);
    let mut out = Vec::new();
    for (i, row) in d.iter().enumerate() {
        if i < row.len() && row[i] != 0 {
            out.push(row[i]);
        }
    }
    out
}

/// Solve `a x = b` over the integers; `None` when no integral solution exists.
pub fn solve(a: &[Vec<i128>], b: &[i128]) -> Option<Vec<i128>> {
    let m = a.len();
    assert_eq!(b.len(), m);
    let n = if m == 0 { 0 } else { a[0].len() };
    let (d, p, q) = smith_normal_form(a);
    let pb = mat_vec(&p, b);
    let mut y = vec![0i128; n];
    for i in 0..m {
        let di = if i < n { d[i][i] } else { 0 };
        if di == 0 {
            if pb[i] != 0 {
                return None;
            }
        } else {
            if pb[i] % di != 0 {
                return None;
            }
            y[i] = pb[i] / di;
        }
    }
    Some(mat_vec(&q, &y))
}

/// Whether `v` lies in the sublattice of `Z^n` spanned by the given rows.
pub fn lattice_contains(rows: &[Vec<i128>], v: &[i128]) -> bool {
    if rows.is_empty() {
        return v.iter().all(|&x| x == 0);
    }
    solve(&transpose(rows), v).is_some()
}

/// Signed determinant by fraction-free (Bareiss) elimination.
pub fn det(a: &[Vec<i128>]) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    assert!(a.iter().all(|r| r.len() == n));
    let mut m = a.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return 0;
            };
            m.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    if a == b {
        return;
    }
    for row in m.iter_mut() {
        row.swap(a, b);
    }
}

fn row_sub(m: &mut Mat, i: usize, t: usize, f: i128) {
    if f == 0 {
        return;
    }
    for j in 0..m[i].len() {
        m[i][j] -= f * m[t][j];
    }
}

fn col_sub(m: &mut Mat, j: usize, t: usize, f: i128) {
    if f == 0 {
        return;
    }
    for row in m.iter_mut() {
        row[j] -= f * row[t];
    }
}

/// Round-to-nearest integer division, so remainders shrink fastest.
fn div_round(a: i128, b: i128) -> i128 {
    let q = a / b;
    let r = a - q * b;
    if 2 * r.abs() > b.abs() {
        q + if (r > 0) == (b > 0) { 1 } else { -1 }
    } else {
        q
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_transforms(a: &Mat) {
        let (d, p, q) = smith_normal_form(a);
        assert_eq!(mat_mul(&mat_mul(&p, a), &q), d);
        assert_eq!(det(&p).abs(), 1);
        assert_eq!(det(&q).abs(), 1);
        // diagonal, non-negative, divisibility chain
        for (i, row) in d.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if i != j {
                    assert_eq!(x, 0);
                }
            }
            assert!(i >= row.len() || row[i] >= 0);
        }
        let f = invariant_factors(a);
        for w in f.windows(2) {
            assert_eq!(w[1] % w[0], 0);
        }
    }

    #[test]
    fn smith_small_cases() {
        let a = vec![vec![2, 4], vec![6, 8]];
        assert_eq!(invariant_factors(&a), vec![2, 4]);
        check_transforms(&a);

        assert_eq!(invariant_factors(&vec![vec![2]]), vec![2]);
        assert_eq!(
            invariant_factors(&vec![vec![1, 0], vec![0, 1]]),
            vec![1, 1]
        );
        assert_eq!(invariant_factors(&vec![vec![0, 0]]), Vec::<i128>::new());

        let wide = vec![vec![2, 0, 0], vec![0, 3, 0]];
        assert_eq!(invariant_factors(&wide), vec![1, 6]);
        check_transforms(&wide);

        let awkward = vec![vec![6, 4], vec![4, 4], vec![2, 8]];
        check_transforms(&awkward);
    }

    #[test]
    fn integer_solving() {
        let a = vec![vec![2, 0], vec![0, 3]];
        assert_eq!(solve(&a, &[4, 9]), Some(vec![2, 3]));
        assert_eq!(solve(&a, &[3, 3]), None);

        // underdetermined: any solution must satisfy the system exactly
        let a = vec![vec![1, 2, 3]];
        let x = solve(&a, &[7]).unwrap();
        assert_eq!(x[0] + 2 * x[1] + 3 * x[2], 7);

        // inconsistent overdetermined
        let a = vec![vec![1, 0], vec![1, 0]];
        assert_eq!(solve(&a, &[1, 2]), None);
    }

    #[test]
    fn membership_in_a_sublattice() {
        let rows = vec![vec![2, 0], vec![0, 2]];
        assert!(lattice_contains(&rows, &[4, 2]));
        assert!(!lattice_contains(&rows, &[1, 0]));
        assert!(lattice_contains(&rows, &[0, 0]));
        assert!(lattice_contains(&[], &[0, 0]));
        assert!(!lattice_contains(&[], &[1, 0]));
        // non-diagonal generators
        let rows = vec![vec![1, 1], vec![1, -1]];
        assert!(lattice_contains(&rows, &[2, 0]));
        assert!(!lattice_contains(&rows, &[1, 0]));
    }

    #[test]
    fn determinants() {
        assert_eq!(det(&[vec![1, 1], vec![0, 1]]), 1);
        assert_eq!(det(&[vec![2, 1], vec![1, 1]]), 1);
        assert_eq!(det(&[vec![2, 0], vec![0, 2]]), 4);
        assert_eq!(det(&[vec![0, 1], vec![1, 0]]), -1);
        assert_eq!(
            det(&[vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 10]]),
            -3
        );
        assert_eq!(det(&[vec![1, 2], vec![2, 4]]), 0);
    }
}
