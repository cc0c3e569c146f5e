//! Sparse integer matrices, Smith normal form and exact rank computations.
//!
//! Complex differentials keep small `i64` entries; Smith normal form switches
//! to `BigInt` after a sparse unit-pivot reduction so intermediate entry
//! growth cannot overflow.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Sparse integer matrix in (row, col) -> entry form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SpMat {
    pub rows: usize,
    pub cols: usize,
    entries: BTreeMap<(usize, usize), i64>,
}

impl SpMat {
    pub fn new(rows: usize, cols: usize) -> Self {
        SpMat { rows, cols, entries: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = SpMat::new(n, n);
        for i in 0..n {
            m.set(i, i, 1);
        }
        m
    }

    pub fn set(&mut self, r: usize, c: usize, v: i64) {
        assert!(r < self.rows && c < self.cols);
        if v == 0 {
            self.entries.remove(&(r, c));
        } else {
            self.entries.insert((r, c), v);
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: i64) {
        let cur = self.get(r, c);
        self.set(r, c, cur.checked_add(v).expect("matrix entry overflow"));
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        *self.entries.get(&(r, c)).unwrap_or(&0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.entries.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn transpose(&self) -> SpMat {
        let mut t = SpMat::new(self.cols, self.rows);
        for (r, c, v) in self.iter() {
            t.set(c, r, v);
        }
        t
    }

    pub fn mul(&self, other: &SpMat) -> SpMat {
        assert_eq!(self.cols, other.rows, "dimension mismatch in matrix product");
        let mut by_row: Vec<Vec<(usize, i64)>> = vec![Vec::new(); other.rows];
        for (r, c, v) in other.iter() {
            by_row[r].push((c, v));
        }
        let mut out = SpMat::new(self.rows, other.cols);
        for (r, k, a) in self.iter() {
            for &(c, b) in &by_row[k] {
                out.add(r, c, a.checked_mul(b).expect("matrix entry overflow"));
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &BTreeMap<usize, i64>) -> BTreeMap<usize, i64> {
        let mut out: BTreeMap<usize, i64> = BTreeMap::new();
        for (r, c, a) in self.iter() {
            if let Some(&x) = v.get(&c) {
                let e = out.entry(r).or_insert(0);
                *e = e.checked_add(a.checked_mul(x).expect("overflow")).expect("overflow");
            }
        }
        out.retain(|_, x| *x != 0);
        out
    }

    pub fn scaled(&self, k: i64) -> SpMat {
        let mut out = SpMat::new(self.rows, self.cols);
        for (r, c, v) in self.iter() {
            out.set(r, c, v.checked_mul(k).expect("overflow"));
        }
        out
    }

    pub fn sum(&self, other: &SpMat) -> SpMat {
        assert!(self.rows == other.rows && self.cols == other.cols);
        let mut out = self.clone();
        for (r, c, v) in other.iter() {
            out.add(r, c, v);
        }
        out
    }

    pub fn to_dense_big(&self) -> Vec<Vec<BigInt>> {
        let mut d = vec![vec![BigInt::zero(); self.cols]; self.rows];
        for (r, c, v) in self.iter() {
            d[r][c] = BigInt::from(v);
        }
        d
    }

    /// Row and column permuted submatrix keeping the given indices, in order.
    pub fn submatrix(&self, keep_rows: &[usize], keep_cols: &[usize]) -> SpMat {
        let rmap: BTreeMap<usize, usize> = keep_rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
        let cmap: BTreeMap<usize, usize> = keep_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let mut out = SpMat::new(keep_rows.len(), keep_cols.len());
        for (r, c, v) in self.iter() {
            if let (Some(&nr), Some(&nc)) = (rmap.get(&r), cmap.get(&c)) {
                out.set(nr, nc, v);
            }
        }
        out
    }
}

/// Smith normal form `U * A * V = diag(d1, d2, ...)` with `d1 | d2 | ...`.
#[derive(Debug, Clone)]
pub struct SmithDecomposition {
    pub diag: Vec<BigInt>,
    pub u: Vec<Vec<BigInt>>,
    pub v: Vec<Vec<BigInt>>,
    pub rank: usize,
}

impl SmithDecomposition {
    pub fn invariant_factors(&self) -> Vec<BigInt> {
        self.diag.iter().filter(|d| !d.is_zero()).cloned().collect()
    }

    /// Torsion coefficients: invariant factors with absolute value > 1.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.invariant_factors().into_iter().map(|d| d.abs()).filter(|d| *d > BigInt::one()).collect()
    }
}

fn big_mat_mul(a: &[Vec<BigInt>], b: &[Vec<BigInt>]) -> Vec<Vec<BigInt>> {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    let mut out = vec![vec![BigInt::zero(); m]; n];
    for i in 0..n {
        for t in 0..k {
            if a[i][t].is_zero() {
                continue;
            }
            for j in 0..m {
                if !b[t][j].is_zero() {
                    let p = &a[i][t] * &b[t][j];
                    out[i][j] += p;
                }
            }
        }
    }
    out
}

struct SnfWork {
    m: Vec<Vec<BigInt>>,
    u: Vec<Vec<BigInt>>,
    v: Vec<Vec<BigInt>>,
    rows: usize,
    cols: usize,
}

impl SnfWork {
    fn swap_rows(&mut self, a: usize, b: usize) {
        self.m.swap(a, b);
        self.u.swap(a, b);
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        for row in self.m.iter_mut() {
            row.swap(a, b);
        }
        for row in self.v.iter_mut() {
            row.swap(a, b);
        }
    }

    fn row_sub(&mut self, i: usize, t: usize, q: &BigInt) {
        for j in 0..self.cols {
            let s = q * &self.m[t][j];
            self.m[i][j] -= s;
        }
        for j in 0..self.rows {
            let s = q * &self.u[t][j];
            self.u[i][j] -= s;
        }
    }

    fn col_sub(&mut self, j: usize, t: usize, q: &BigInt) {
        for i in 0..self.rows {
            let s = q * &self.m[i][t];
            self.m[i][j] -= s;
        }
        for i in 0..self.cols {
            let s = q * &self.v[i][t];
            self.v[i][j] -= s;
        }
    }

    fn col_add(&mut self, dst: usize, src: usize) {
        for i in 0..self.rows {
            let s = self.m[i][src].clone();
            self.m[i][dst] += s;
        }
        for i in 0..self.cols {
            let s = self.v[i][src].clone();
            self.v[i][dst] += s;
        }
    }

    /// Diagonalize the block starting at (t, t); pivot ends at (t, t).
    /// Returns false if the block is zero.
    fn clear_position(&mut self, t: usize) -> bool {
        let mut piv: Option<(usize, usize)> = None;
        for i in t..self.rows {
            for j in t..self.cols {
                if !self.m[i][j].is_zero()
                    && piv.is_none_or(|(pi, pj): (usize, usize)| {
                        self.m[i][j].abs() < self.m[pi][pj].abs()
                    })
                {
                    piv = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = piv else { return false };
        self.swap_rows(t, pi);
        self.swap_cols(t, pj);
        loop {
            // clear column t: euclid swaps strictly shrink the pivot
            let mut progressed = false;
            for i in t + 1..self.rows {
                while !self.m[i][t].is_zero() {
                    let q = &self.m[i][t] / &self.m[t][t];
                    self.row_sub(i, t, &q);
                    if !self.m[i][t].is_zero() {
                        self.swap_rows(t, i);
                        progressed = true;
                    }
                }
            }
            for j in t + 1..self.cols {
                while !self.m[t][j].is_zero() {
                    let q = &self.m[t][j] / &self.m[t][t];
                    self.col_sub(j, t, &q);
                    if !self.m[t][j].is_zero() {
                        self.swap_cols(t, j);
                        progressed = true;
                    }
                }
            }
            let col_clear = (t + 1..self.rows).all(|i| self.m[i][t].is_zero());
            let row_clear = (t + 1..self.cols).all(|j| self.m[t][j].is_zero());
            if col_clear && row_clear {
                return true;
            }
            if !progressed {
                // column clearing refilled the row or vice versa; loop again
                continue;
            }
        }
    }
}

/// Full Smith normal form with unimodular transforms, dense over `BigInt`.
pub fn smith_normal_form(a: &SpMat) -> SmithDecomposition {
    let rows = a.rows;
    let cols = a.cols;
    let ident = |n: usize| -> Vec<Vec<BigInt>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
            .collect()
    };
    let mut w = SnfWork { m: a.to_dense_big(), u: ident(rows), v: ident(cols), rows, cols };

    let mut rank = 0usize;
    for t in 0..rows.min(cols) {
        if !w.clear_position(t) {
            break;
        }
        rank += 1;
    }

    // enforce the divisibility chain; each repair re-diagonalizes from i
    'repair: loop {
        for i in 0..rank.saturating_sub(1) {
            if (&w.m[i + 1][i + 1] % &w.m[i][i]).is_zero() {
                continue;
            }
            w.col_add(i, i + 1);
            for t in i..rank {
                let ok = w.clear_position(t);
                debug_assert!(ok);
            }
            continue 'repair;
        }
        break;
    }

    let mut diag = Vec::new();
    for i in 0..rows.min(cols) {
        diag.push(w.m[i][i].clone());
    }
    for (i, d) in diag.iter_mut().enumerate() {
        if d.is_negative() {
            *d = -d.clone();
            for j in 0..cols {
                w.v[j][i] = -w.v[j][i].clone();
            }
        }
    }
    SmithDecomposition { diag, u: w.u, v: w.v, rank }
}

/// Rank and nontrivial invariant factors, via sparse unit-pivot elimination
/// followed by a dense Smith normal form on the small residue.
pub fn rank_and_torsion(a: &SpMat) -> (usize, Vec<BigInt>) {
    let mut rows: Vec<BTreeMap<usize, i128>> = vec![BTreeMap::new(); a.rows];
    let mut cols: Vec<BTreeMap<usize, ()>> = vec![BTreeMap::new(); a.cols];
    for (r, c, v) in a.iter() {
        rows[r].insert(c, v as i128);
        cols[c].insert(r, ());
    }
    let mut live_rows: Vec<bool> = vec![true; a.rows];
    let mut live_cols: Vec<bool> = vec![true; a.cols];
    let mut pivots = 0usize;

    loop {
        // pick a unit pivot with minimal fill estimate
        let mut best: Option<(usize, usize, usize)> = None;
        for r in 0..a.rows {
            if !live_rows[r] {
                continue;
            }
            for (&c, &v) in rows[r].iter() {
                if v == 1 || v == -1 {
                    let fill = (rows[r].len() - 1) * (cols[c].len() - 1);
                    if best.is_none_or(|(_, _, f)| fill < f) {
                        best = Some((r, c, fill));
                    }
                    if fill == 0 {
                        break;
                    }
                }
            }
            if matches!(best, Some((_, _, 0))) {
                break;
            }
        }
        let Some((pr, pc, _)) = best else { break };
        let pv = rows[pr][&pc];
        let prow: Vec<(usize, i128)> = rows[pr].iter().map(|(&c, &v)| (c, v)).collect();
        let affected: Vec<usize> = cols[pc].keys().copied().filter(|&r| r != pr && live_rows[r]).collect();
        for r in affected {
            let factor = rows[r][&pc] / pv;
            if factor != 0 {
                for &(c, v) in &prow {
                    let cur = rows[r].get(&c).copied().unwrap_or(0);
                    let nv = cur.checked_sub(factor.checked_mul(v).expect("overflow")).expect("overflow");
                    if nv == 0 {
                        rows[r].remove(&c);
                        cols[c].remove(&r);
                    } else {
                        rows[r].insert(c, nv);
                        cols[c].insert(r, ());
                    }
                }
            }
        }
        for &(c, _) in &prow {
            cols[c].remove(&pr);
        }
        rows[pr].clear();
        live_rows[pr] = false;
        live_cols[pc] = false;
        for r in 0..a.rows {
            if live_rows[r] {
                rows[r].remove(&pc);
            }
        }
        pivots += 1;
    }

    let keep_rows: Vec<usize> = (0..a.rows).filter(|&r| live_rows[r] && !rows[r].is_empty()).collect();
    let keep_cols: Vec<usize> = (0..a.cols).filter(|&c| live_cols[c]).collect();
    if keep_rows.is_empty() {
        return (pivots, Vec::new());
    }
    let mut res = SpMat::new(keep_rows.len(), keep_cols.len());
    let cmap: BTreeMap<usize, usize> = keep_cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    for (i, &r) in keep_rows.iter().enumerate() {
        for (&c, &v) in rows[r].iter() {
            res.set(i, cmap[&c], i64::try_from(v).expect("residual entry too large"));
        }
    }
    let snf = smith_normal_form(&res);
    (pivots + snf.rank, snf.torsion())
}

pub fn rank_over_z(a: &SpMat) -> usize {
    rank_and_torsion(a).0
}

/// Rank of `a` over the prime field F_p.
pub fn rank_mod_p(a: &SpMat, p: u64) -> usize {
    let mut m: Vec<Vec<u64>> = vec![vec![0; a.cols]; a.rows];
    for (r, c, v) in a.iter() {
        m[r][c] = v.rem_euclid(p as i64) as u64;
    }
    let mut rank = 0;
    let mut row = 0;
    for col in 0..a.cols {
        if row >= a.rows {
            break;
        }
        let Some(pr) = (row..a.rows).find(|&r| !m[r][col].is_multiple_of(p)) else { continue };
        m.swap(row, pr);
        let inv = mod_inv(m[row][col] % p, p);
        for v in m[row][col..a.cols].iter_mut() {
            *v = *v % p * inv % p;
        }
        let pivot_row = m[row].clone();
        for (r, mrow) in m.iter_mut().enumerate() {
            if r != row && !mrow[col].is_multiple_of(p) {
                let f = mrow[col] % p;
                for (v, pv) in mrow[col..a.cols].iter_mut().zip(&pivot_row[col..a.cols]) {
                    *v = (*v + (p - f) * pv) % p;
                }
            }
        }
        row += 1;
        rank += 1;
    }
    rank
}

fn mod_inv(a: u64, p: u64) -> u64 {
    // p is a small prime
    let mut res = 1u64;
    let mut base = a % p;
    let mut e = p - 2;
    while e > 0 {
        if e & 1 == 1 {
            res = res * base % p;
        }
        base = base * base % p;
        e >>= 1;
    }
    res
}

/// Exact linear algebra over a field: Q or F_p. Entries as BigRational for Q,
/// integers reduced mod p for F_p.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Q,
    Fp(u64),
}

#[derive(Debug, Clone)]
pub struct FieldMat {
    pub field: Field,
    pub rows: usize,
    pub cols: usize,
    q: Vec<Vec<BigRational>>,
    p: Vec<Vec<u64>>,
}

impl FieldMat {
    pub fn from_sp(a: &SpMat, field: Field) -> FieldMat {
        match field {
            Field::Q => {
                let mut q = vec![vec![BigRational::zero(); a.cols]; a.rows];
                for (r, c, v) in a.iter() {
                    q[r][c] = BigRational::from(BigInt::from(v));
                }
                FieldMat { field, rows: a.rows, cols: a.cols, q, p: Vec::new() }
            }
            Field::Fp(pr) => {
                let mut m = vec![vec![0u64; a.cols]; a.rows];
                for (r, c, v) in a.iter() {
                    m[r][c] = v.rem_euclid(pr as i64) as u64;
                }
                FieldMat { field, rows: a.rows, cols: a.cols, q: Vec::new(), p: m }
            }
        }
    }

    pub fn zero(rows: usize, cols: usize, field: Field) -> FieldMat {
        match field {
            Field::Q => FieldMat { field, rows, cols, q: vec![vec![BigRational::zero(); cols]; rows], p: Vec::new() },
            Field::Fp(_) => FieldMat { field, rows, cols, q: Vec::new(), p: vec![vec![0; cols]; rows] },
        }
    }

    pub fn set_int(&mut self, r: usize, c: usize, v: i64) {
        match self.field {
            Field::Q => self.q[r][c] = BigRational::from(BigInt::from(v)),
            Field::Fp(p) => self.p[r][c] = v.rem_euclid(p as i64) as u64,
        }
    }

    /// Append the columns of `other` on the right.
    pub fn hstack(&self, other: &FieldMat) -> FieldMat {
        assert_eq!(self.rows, other.rows);
        assert_eq!(self.field, other.field);
        let mut out = FieldMat::zero(self.rows, self.cols + other.cols, self.field);
        match self.field {
            Field::Q => {
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        out.q[r][c] = self.q[r][c].clone();
                    }
                    for c in 0..other.cols {
                        out.q[r][self.cols + c] = other.q[r][c].clone();
                    }
                }
            }
            Field::Fp(_) => {
                for r in 0..self.rows {
                    for c in 0..self.cols {
                        out.p[r][c] = self.p[r][c];
                    }
                    for c in 0..other.cols {
                        out.p[r][self.cols + c] = other.p[r][c];
                    }
                }
            }
        }
        out
    }

    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        m.row_reduce().len()
    }

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn row_reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..self.cols {
            if row >= self.rows {
                break;
            }
            match self.field {
                Field::Q => {
                    let Some(pr) = (row..self.rows).find(|&r| !self.q[r][col].is_zero()) else { continue };
                    self.q.swap(row, pr);
                    let inv = self.q[row][col].clone();
                    for j in col..self.cols {
                        let v = &self.q[row][j] / &inv;
                        self.q[row][j] = v;
                    }
                    for r in 0..self.rows {
                        if r != row && !self.q[r][col].is_zero() {
                            let f = self.q[r][col].clone();
                            for j in col..self.cols {
                                let s = &f * &self.q[row][j];
                                self.q[r][j] -= s;
                            }
                        }
                    }
                }
                Field::Fp(p) => {
                    let Some(pr) = (row..self.rows).find(|&r| !self.p[r][col].is_multiple_of(p)) else { continue };
                    self.p.swap(row, pr);
                    let inv = mod_inv(self.p[row][col] % p, p);
                    for j in col..self.cols {
                        self.p[row][j] = self.p[row][j] % p * inv % p;
                    }
                    for r in 0..self.rows {
                        if r != row && !self.p[r][col].is_multiple_of(p) {
                            let f = self.p[r][col] % p;
                            for j in col..self.cols {
                                self.p[r][j] = (self.p[r][j] + (p - f) * self.p[row][j]) % p;
                            }
                        }
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        pivots
    }

    pub fn q_entry(&self, r: usize, c: usize) -> BigRational {
        self.q[r][c].clone()
    }

    pub fn p_entry(&self, r: usize, c: usize) -> u64 {
        self.p[r][c]
    }

    /// Does `b` lie in the column span? (solves `A x = b`)
    pub fn solves(&self, b: &FieldMat) -> bool {
        assert_eq!(b.cols, 1);
        let aug = self.hstack(b);
        let r1 = self.clone().rank();
        let r2 = aug.rank();
        r1 == r2
    }
}

pub fn big_mat_is_identity(m: &[Vec<BigInt>]) -> bool {
    m.iter().enumerate().all(|(i, row)| {
        row.iter().enumerate().all(|(j, v)| if i == j { v.is_one() } else { v.is_zero() })
    })
}

pub fn verify_smith(a: &SpMat, s: &SmithDecomposition) -> bool {
    let ua = big_mat_mul(&s.u, &a.to_dense_big());
    let uav = big_mat_mul(&ua, &s.v);
    for (i, row) in uav.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let expect = if i == j && i < s.diag.len() { s.diag[i].clone() } else { BigInt::zero() };
            if *v != expect {
                return false;
            }
        }
    }
    // divisibility chain
    for i in 0..s.rank.saturating_sub(1) {
        if !(&s.diag[i + 1] % &s.diag[i]).is_zero() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(rows: usize, cols: usize, data: &[(usize, usize, i64)]) -> SpMat {
        let mut m = SpMat::new(rows, cols);
        for &(r, c, v) in data {
            m.set(r, c, v);
        }
        m
    }

    #[test]
    fn snf_2_3_gives_1_6() {
        let a = sp(2, 2, &[(0, 0, 2), (1, 1, 3)]);
        let s = smith_normal_form(&a);
        assert!(verify_smith(&a, &s));
        assert_eq!(s.diag, vec![BigInt::from(1), BigInt::from(6)]);
    }

    #[test]
    fn snf_zero_matrix() {
        let a = SpMat::new(3, 2);
        let s = smith_normal_form(&a);
        assert_eq!(s.rank, 0);
        assert!(s.invariant_factors().is_empty());
    }

    #[test]
    fn snf_identity() {
        let a = SpMat::identity(4);
        let s = smith_normal_form(&a);
        assert!(verify_smith(&a, &s));
        assert_eq!(s.diag, vec![BigInt::one(); 4]);
    }

    #[test]
    fn rank_and_torsion_matches_dense() {
        let a = sp(3, 3, &[(0, 0, 2), (0, 1, 4), (1, 0, 6), (1, 1, 4), (2, 2, 0)]);
        let (r, t) = rank_and_torsion(&a);
        let s = smith_normal_form(&a);
        assert!(verify_smith(&a, &s));
        assert_eq!(r, s.rank);
        assert_eq!(t, s.torsion());
    }

    #[test]
    fn field_ranks() {
        let a = sp(2, 2, &[(0, 0, 2), (1, 1, 3)]);
        assert_eq!(rank_mod_p(&a, 2), 1);
        assert_eq!(rank_mod_p(&a, 3), 1);
        assert_eq!(FieldMat::from_sp(&a, Field::Q).rank(), 2);
    }

    #[test]
    fn solve_membership() {
        // column span of [[1],[2]] contains [2,4] but not [1,0]
        let a = sp(2, 1, &[(0, 0, 1), (1, 0, 2)]);
        let fa = FieldMat::from_sp(&a, Field::Q);
        let b1 = FieldMat::from_sp(&sp(2, 1, &[(0, 0, 2), (1, 0, 4)]), Field::Q);
        let b2 = FieldMat::from_sp(&sp(2, 1, &[(0, 0, 1)]), Field::Q);
        assert!(fa.solves(&b1));
        assert!(!fa.solves(&b2));
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn snf_random_verifies(entries in proptest::collection::vec((0usize..5, 0usize..5, -6i64..7), 0..14)) {
            let mut a = SpMat::new(5, 5);
            for (r, c, v) in entries {
                a.set(r, c, v);
            }
            let s = smith_normal_form(&a);
            proptest::prop_assert!(verify_smith(&a, &s));
            let (r, t) = rank_and_torsion(&a);
            proptest::prop_assert_eq!(r, s.rank);
            proptest::prop_assert_eq!(t, s.torsion());
        }
    }
}
