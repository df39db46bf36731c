//! Exact rational matrices indexed by a filter basis.
//!
//! Entries are arbitrary-precision rationals; every identity check is exact.
//! A matrix built over a truncated graph may have columns whose image is
//! hidden by the bound; such columns are marked undefined and equality
//! checks report how many columns they could actually verify. The only
//! deliberate float boundary in the crate is `operator_norm`.

use crate::error::{Error, Result};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// Column-sparse exact matrix with per-column definedness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatrixOp {
    dim: usize,
    cols: Vec<Vec<(u32, BigRational)>>,
    col_ok: Vec<bool>,
}

/// Outcome of comparing two partially defined matrices columnwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnComparison {
    pub equal: bool,
    pub verified: usize,
    pub skipped: usize,
}

impl MatrixOp {
    pub fn zero(dim: usize) -> MatrixOp {
        MatrixOp {
            dim,
            cols: vec![Vec::new(); dim],
            col_ok: vec![true; dim],
        }
    }

    pub fn identity(dim: usize) -> MatrixOp {
        let mut m = MatrixOp::zero(dim);
        for j in 0..dim {
            m.cols[j].push((j as u32, BigRational::one()));
        }
        m
    }

    /// Build from explicit columns; `None` marks an undefined column.
    pub fn from_columns(dim: usize, columns: Vec<Option<Vec<(u32, BigRational)>>>) -> MatrixOp {
        assert_eq!(columns.len(), dim);
        let mut cols = Vec::with_capacity(dim);
        let mut col_ok = Vec::with_capacity(dim);
        for c in columns {
            match c {
                Some(mut v) => {
                    v.retain(|(_, x)| !x.is_zero());
                    v.sort_by_key(|(r, _)| *r);
                    cols.push(v);
                    col_ok.push(true);
                }
                None => {
                    cols.push(Vec::new());
                    col_ok.push(false);
                }
            }
        }
        MatrixOp { dim, cols, col_ok }
    }

    /// Diagonal 0/1 matrix from a membership predicate.
    pub fn diagonal(dim: usize, f: impl Fn(usize) -> bool) -> MatrixOp {
        let mut m = MatrixOp::zero(dim);
        for j in 0..dim {
            if f(j) {
                m.cols[j].push((j as u32, BigRational::one()));
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_fully_defined(&self) -> bool {
        self.col_ok.iter().all(|&b| b)
    }

    pub fn defined_columns(&self) -> usize {
        self.col_ok.iter().filter(|&&b| b).count()
    }

    pub fn col_defined(&self, j: usize) -> bool {
        self.col_ok[j]
    }

    /// Entry (i, j); `None` when the column is undefined.
    pub fn entry(&self, i: usize, j: usize) -> Option<BigRational> {
        if !self.col_ok[j] {
            return None;
        }
        Some(
            self.cols[j]
                .iter()
                .find(|(r, _)| *r as usize == i)
                .map(|(_, x)| x.clone())
                .unwrap_or_else(BigRational::zero),
        )
    }

    fn check_dim(&self, other: &MatrixOp) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimMismatch(format!("{} vs {}", self.dim, other.dim)));
        }
        Ok(())
    }

    pub fn add(&self, other: &MatrixOp) -> Result<MatrixOp> {
        self.check_dim(other)?;
        let mut cols = Vec::with_capacity(self.dim);
        let mut col_ok = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            if self.col_ok[j] && other.col_ok[j] {
                let mut acc: BTreeMap<u32, BigRational> = BTreeMap::new();
                for (r, x) in self.cols[j].iter().chain(other.cols[j].iter()) {
                    let e = acc.entry(*r).or_insert_with(BigRational::zero);
                    *e += x;
                }
                let v: Vec<(u32, BigRational)> =
                    acc.into_iter().filter(|(_, x)| !x.is_zero()).collect();
                cols.push(v);
                col_ok.push(true);
            } else {
                cols.push(Vec::new());
                col_ok.push(false);
            }
        }
        Ok(MatrixOp {
            dim: self.dim,
            cols,
            col_ok,
        })
    }

    pub fn scale(&self, c: &BigRational) -> MatrixOp {
        if c.is_zero() {
            let mut m = MatrixOp::zero(self.dim);
            m.col_ok = self.col_ok.clone();
            return m;
        }
        MatrixOp {
            dim: self.dim,
            cols: self
                .cols
                .iter()
                .map(|col| col.iter().map(|(r, x)| (*r, x * c)).collect())
                .collect(),
            col_ok: self.col_ok.clone(),
        }
    }

    pub fn neg(&self) -> MatrixOp {
        self.scale(&-BigRational::one())
    }

    pub fn sub(&self, other: &MatrixOp) -> Result<MatrixOp> {
        self.add(&other.neg())
    }

    /// Product self · other. A result column is defined when the column of
    /// `other` is defined and every row it touches indexes a defined column
    /// of `self`.
    pub fn mul(&self, other: &MatrixOp) -> Result<MatrixOp> {
        self.check_dim(other)?;
        let mut cols = Vec::with_capacity(self.dim);
        let mut col_ok = Vec::with_capacity(self.dim);
        for j in 0..self.dim {
            if !other.col_ok[j] {
                cols.push(Vec::new());
                col_ok.push(false);
                continue;
            }
            if other.cols[j]
                .iter()
                .any(|(r, _)| !self.col_ok[*r as usize])
            {
                cols.push(Vec::new());
                col_ok.push(false);
                continue;
            }
            let mut acc: BTreeMap<u32, BigRational> = BTreeMap::new();
            for (r, x) in &other.cols[j] {
                for (i, y) in &self.cols[*r as usize] {
                    let e = acc.entry(*i).or_insert_with(BigRational::zero);
                    *e += x * y;
                }
            }
            let v: Vec<(u32, BigRational)> =
                acc.into_iter().filter(|(_, x)| !x.is_zero()).collect();
            cols.push(v);
            col_ok.push(true);
        }
        Ok(MatrixOp {
            dim: self.dim,
            cols,
            col_ok,
        })
    }

    /// Transpose; requires a fully defined matrix.
    pub fn transpose(&self) -> Result<MatrixOp> {
        if !self.is_fully_defined() {
            return Err(Error::PartialMatrix("transpose".into()));
        }
        let mut cols: Vec<Vec<(u32, BigRational)>> = vec![Vec::new(); self.dim];
        for j in 0..self.dim {
            for (r, x) in &self.cols[j] {
                cols[*r as usize].push((j as u32, x.clone()));
            }
        }
        for c in &mut cols {
            c.sort_by_key(|(r, _)| *r);
        }
        Ok(MatrixOp {
            dim: self.dim,
            cols,
            col_ok: vec![true; self.dim],
        })
    }

    /// Compare on the columns where both sides are defined.
    pub fn compare_columns(&self, other: &MatrixOp) -> Result<ColumnComparison> {
        self.check_dim(other)?;
        let mut verified = 0;
        let mut skipped = 0;
        let mut equal = true;
        for j in 0..self.dim {
            if self.col_ok[j] && other.col_ok[j] {
                verified += 1;
                if self.cols[j] != other.cols[j] {
                    equal = false;
                }
            } else {
                skipped += 1;
            }
        }
        Ok(ColumnComparison {
            equal,
            verified,
            skipped,
        })
    }

    /// Does `other` behave as the adjoint of `self` on every entry both
    /// sides can see? Checks a[i,j] = b[j,i] whenever column j of `self`
    /// and column i of `other` are defined.
    pub fn adjoint_consistent(&self, other: &MatrixOp) -> Result<bool> {
        self.check_dim(other)?;
        for j in 0..self.dim {
            if !self.col_ok[j] {
                continue;
            }
            for (i, x) in &self.cols[j] {
                if other.col_ok[*i as usize] {
                    let mirrored = other.entry(j, *i as usize).unwrap();
                    if &mirrored != x {
                        return Ok(false);
                    }
                }
            }
        }
        for j in 0..self.dim {
            if !other.col_ok[j] {
                continue;
            }
            for (i, x) in &other.cols[j] {
                if self.col_ok[*i as usize] {
                    let mirrored = self.entry(j, *i as usize).unwrap();
                    if &mirrored != x {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// First differing entry on commonly defined columns, as (row, col).
    pub fn first_difference(&self, other: &MatrixOp) -> Option<(usize, usize)> {
        for j in 0..self.dim {
            if !(self.col_ok[j] && other.col_ok[j]) {
                continue;
            }
            if self.cols[j] != other.cols[j] {
                for i in 0..self.dim {
                    if self.entry(i, j) != other.entry(i, j) {
                        return Some((i, j));
                    }
                }
            }
        }
        None
    }

    /// Zero on every defined column?
    pub fn is_zero_on_defined(&self) -> bool {
        (0..self.dim).all(|j| !self.col_ok[j] || self.cols[j].is_empty())
    }

    /// Exactly zero (and fully defined)?
    pub fn is_zero(&self) -> bool {
        self.is_fully_defined() && self.cols.iter().all(|c| c.is_empty())
    }

    pub fn is_projection(&self) -> Result<bool> {
        let sq = self.mul(self)?;
        let idem = sq.compare_columns(self)?.equal;
        let sym = if self.is_fully_defined() {
            self.transpose()? == *self
        } else {
            true
        };
        Ok(idem && sym)
    }

    /// Flatten to a dense row-major vector; requires full definedness.
    pub fn to_dense(&self) -> Result<Vec<BigRational>> {
        if !self.is_fully_defined() {
            return Err(Error::PartialMatrix("to_dense".into()));
        }
        let mut out = vec![BigRational::zero(); self.dim * self.dim];
        for j in 0..self.dim {
            for (r, x) in &self.cols[j] {
                out[*r as usize * self.dim + j] = x.clone();
            }
        }
        Ok(out)
    }

    /// Largest singular value via power iteration on AᵀA, to absolute
    /// tolerance 1e-10, with a deterministic start vector and an iteration
    /// cap of 10^5.
    pub fn operator_norm(&self) -> Result<f64> {
        if !self.is_fully_defined() {
            return Err(Error::PartialMatrix("operator_norm".into()));
        }
        let n = self.dim;
        if n == 0 || self.cols.iter().all(|c| c.is_empty()) {
            return Ok(0.0);
        }
        let colsf: Vec<Vec<(usize, f64)>> = self
            .cols
            .iter()
            .map(|c| {
                c.iter()
                    .map(|(r, x)| (*r as usize, x.to_f64().expect("entry fits f64")))
                    .collect()
            })
            .collect();
        let apply = |v: &[f64]| -> Vec<f64> {
            // w = A v
            let mut w = vec![0.0; n];
            for (j, col) in colsf.iter().enumerate() {
                if v[j] != 0.0 {
                    for (i, x) in col {
                        w[*i] += x * v[j];
                    }
                }
            }
            // u = Aᵀ w
            let mut u = vec![0.0; n];
            for (j, col) in colsf.iter().enumerate() {
                let mut s = 0.0;
                for (i, x) in col {
                    s += x * w[*i];
                }
                u[j] = s;
            }
            u
        };
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + ((i % 7) as f64) / 8.0).collect();
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nv = norm(&v);
        for x in &mut v {
            *x /= nv;
        }
        let mut sigma = 0.0f64;
        const CAP: usize = 100_000;
        for _ in 0..CAP {
            let w = apply(&v);
            let rayleigh: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let new_sigma = rayleigh.max(0.0).sqrt();
            let wn = norm(&w);
            if wn == 0.0 {
                return Ok(0.0);
            }
            for (x, y) in v.iter_mut().zip(&w) {
                *x = y / wn;
            }
            if (new_sigma - sigma).abs() <= 1e-12_f64.max(1e-12 * new_sigma) {
                return Ok(new_sigma);
            }
            sigma = new_sigma;
        }
        Err(Error::NonConvergence(CAP))
    }

    /// Maximum absolute entry as f64 (diagnostics only).
    pub fn max_abs_entry(&self) -> f64 {
        self.cols
            .iter()
            .flatten()
            .map(|(_, x)| x.abs().to_f64().unwrap_or(f64::INFINITY))
            .fold(0.0, f64::max)
    }
}

/// Rank over the rationals of a family of vectors, by exact Gaussian
/// elimination.
pub fn rational_rank(mut vectors: Vec<Vec<BigRational>>) -> usize {
    let mut rank = 0;
    let width = vectors.first().map(|v| v.len()).unwrap_or(0);
    let mut pivot_col = 0;
    while pivot_col < width && rank < vectors.len() {
        if let Some(r) = (rank..vectors.len()).find(|&r| !vectors[r][pivot_col].is_zero()) {
            vectors.swap(rank, r);
            let pivot = vectors[rank][pivot_col].clone();
            for r2 in (rank + 1)..vectors.len() {
                if !vectors[r2][pivot_col].is_zero() {
                    let factor = &vectors[r2][pivot_col] / &pivot;
                    for c in pivot_col..width {
                        let delta = &vectors[rank][c] * &factor;
                        vectors[r2][c] -= delta;
                    }
                }
            }
            rank += 1;
        }
        pivot_col += 1;
    }
    rank
}
