//! Exact integer matrix arithmetic for lattices `Mℤⁿ ⊂ ℤⁿ`.
//!
//! Matrices are small (`n` is the torus dimension), so everything is done in
//! `i128` with fraction-free elimination.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn to_wide(m: &DMatrix<i64>) -> Result<DMatrix<i128>> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.map(|x| x as i128))
}

fn det_wide(m: &DMatrix<i128>) -> i128 {
    let n = m.nrows();
    if n == 0 {
        return 1;
    }
    // Bareiss: every intermediate is a minor of m, so divisions are exact
    let mut a = m.clone();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if a[(k, k)] == 0 {
            match (k + 1..n).find(|&r| a[(r, k)] != 0) {
                Some(r) => {
                    a.swap_rows(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[(i, j)] = (a[(i, j)] * a[(k, k)] - a[(i, k)] * a[(k, j)]) / prev;
            }
        }
        prev = a[(k, k)];
    }
    sign * a[(n - 1, n - 1)]
}

/// Exact determinant.
pub fn det(m: &DMatrix<i64>) -> Result<i128> {
    Ok(det_wide(&to_wide(m)?))
}

fn minor(m: &DMatrix<i128>, rows: &[usize], cols: &[usize]) -> i128 {
    det_wide(&DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])]))
}

/// Adjugate `adj(M)`, so that `M·adj(M) = det(M)·I`.
pub fn adjugate(m: &DMatrix<i64>) -> Result<DMatrix<i128>> {
    let w = to_wide(m)?;
    let n = w.nrows();
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let rows: Vec<usize> = (0..n).filter(|&r| r != j).collect();
            let cols: Vec<usize> = (0..n).filter(|&c| c != i).collect();
            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
            adj[(i, j)] = sign * minor(&w, &rows, &cols);
        }
    }
    Ok(adj)
}

// (g, x, y) with g = gcd(a, b) ≥ 0 and a·x + b·y = g
fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut s0, mut s1) = (1, 0);
    let (mut t0, mut t1) = (0, 1);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    if r0 < 0 {
        (-r0, -s0, -t0)
    } else {
        (r0, s0, t0)
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    ext_gcd(a, b).0
}

/// Column Hermite normal form `H = M·U` of a nonsingular `M`, `U` unimodular.
///
/// `H` is lower triangular with `h_ii > 0` and `0 ≤ h_ij < h_ii` for `j < i`.
/// Its columns span the same lattice as the columns of `M`, and the box
/// `∏[0, h_ii)` holds exactly one point of each class of `ℤⁿ/Mℤⁿ`.
pub fn column_hnf(m: &DMatrix<i64>) -> Result<DMatrix<i128>> {
    let mut h = to_wide(m)?;
    let n = h.nrows();
    if det_wide(&h) == 0 {
        return Err(Error::Singular);
    }
    for i in 0..n {
        // fold every column j > i into column i until only h_ii is nonzero in row i
        for j in i + 1..n {
            let (a, b) = (h[(i, i)], h[(i, j)]);
            if b == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(a, b);
            let (ca, cb) = (h.column(i).clone_owned(), h.column(j).clone_owned());
            // [ci cj] ← [ci cj]·[[x, −b/g], [y, a/g]], determinant 1
            h.set_column(i, &(&ca * x + &cb * y));
            h.set_column(j, &(&ca * (-b / g) + &cb * (a / g)));
        }
        if h[(i, i)] < 0 {
            let c = -h.column(i).clone_owned();
            h.set_column(i, &c);
        }
        let d = h[(i, i)];
        for j in 0..i {
            let q = h[(i, j)].div_euclid(d);
            if q != 0 {
                let c = h.column(j) - h.column(i) * q;
                h.set_column(j, &c);
            }
        }
    }
    Ok(h)
}

/// Canonical representative of `x + Hℤⁿ` in the box `∏[0, h_ii)`, for `H`
/// from [`column_hnf`].
pub fn reduce_mod_hnf(h: &DMatrix<i128>, x: &[i64]) -> Vec<i64> {
    let n = h.nrows();
    let mut v: Vec<i128> = x.iter().map(|&a| a as i128).collect();
    for i in 0..n {
        let q = v[i].div_euclid(h[(i, i)]);
        if q != 0 {
            for r in i..n {
                v[r] -= q * h[(r, i)];
            }
        }
    }
    v.into_iter().map(|a| a as i64).collect()
}

/// Whether `z ∈ Mℤⁿ`, by checking `adj(M)·z ≡ 0 (mod det M)`.
pub fn in_lattice(m: &DMatrix<i64>, z: &[i64]) -> Result<bool> {
    let d = det(m)?;
    if d == 0 {
        return Err(Error::Singular);
    }
    let adj = adjugate(m)?;
    Ok((0..adj.nrows()).all(|i| {
        let s: i128 = (0..adj.ncols()).map(|j| adj[(i, j)] * z[j] as i128).sum();
        s % d == 0
    }))
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    if n < k {
        return Vec::new();
    }
    let mut out = subsets(n - 1, k);
    for mut s in subsets(n - 1, k - 1) {
        s.push(n - 1);
        out.push(s);
    }
    out
}

/// Smith invariant factors `s₁ | s₂ | ⋯ | s_n` (so `ℤⁿ/Mℤⁿ ≅ ⊕ ℤ/s_iℤ`),
/// from the determinantal divisors `d_k = gcd of k×k minors`,
/// `s_k = d_k / d_{k−1}`.
pub fn invariant_factors(m: &DMatrix<i64>) -> Result<Vec<i128>> {
    let w = to_wide(m)?;
    let n = w.nrows();
    let mut prev = 1i128;
    let mut out = Vec::with_capacity(n);
    for k in 1..=n {
        let sets = subsets(n, k);
        let mut dk = 0;
        for rows in &sets {
            for cols in &sets {
                dk = gcd(dk, minor(&w, rows, cols));
            }
        }
        if dk == 0 {
            return Err(Error::Singular);
        }
        out.push(dk / prev);
        prev = dk;
    }
    Ok(out)
}

/// Parses `"a,b,c,d"` (row-major, `n²` entries) into an `n×n` matrix.
pub fn parse_square(text: &str) -> Result<DMatrix<i64>> {
    let vals: Vec<i64> = text
        .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<i64>()
                .map_err(|_| Error::Schema(format!("not an integer: `{s}`")))
        })
        .collect::<Result<_>>()?;
    let n = (vals.len() as f64).sqrt().round() as usize;
    if n == 0 || n * n != vals.len() {
        return Err(Error::Schema(format!("{} entries do not form a square matrix", vals.len())));
    }
    Ok(DMatrix::from_row_slice(n, n, &vals))
}
