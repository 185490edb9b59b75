//! Compressed-row matrices, sparse vectors and the operator trait used by
//! the eigensolvers.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::C64;

/// Anything that can multiply a dense vector.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`.
    fn apply(&self, x: &[C64], y: &mut [C64]);

    /// Max absolute row sum (an upper bound on the spectral norm).
    fn norm_bound(&self) -> f64 {
        let n = self.dim();
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        let mut rows = vec![0.0; n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            for (r, z) in rows.iter_mut().zip(&col) {
                *r += z.norm();
            }
            e[j] = C64::new(0.0, 0.0);
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<C64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        let mut col = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            self.apply(&e, &mut col);
            m.set_column(j, &nalgebra::DVector::from_column_slice(&col));
            e[j] = C64::new(0.0, 0.0);
        }
        m
    }
}

impl LinearOperator for DMatrix<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        let n = self.nrows();
        for (r, yr) in y.iter_mut().enumerate().take(n) {
            *yr = (0..n).map(|c| self[(r, c)] * x[c]).sum();
        }
    }

    fn norm_bound(&self) -> f64 {
        self.row_iter()
            .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<C64> {
        self.clone()
    }
}

/// Sparse vector keyed by basis index.
pub type SparseVector = BTreeMap<usize, C64>;

pub fn sparse_norm(v: &SparseVector) -> f64 {
    v.values().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `<a|b>`.
pub fn sparse_dot(a: &SparseVector, b: &SparseVector) -> C64 {
    let (small, large, conj_small) = if a.len() <= b.len() { (a, b, true) } else { (b, a, false) };
    small
        .iter()
        .filter_map(|(k, x)| {
            large.get(k).map(|y| if conj_small { x.conj() * y } else { y.conj() * x })
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<C64>,
}

impl CsrMatrix {
    /// Sorts and merges duplicate coordinates; exact zeros are dropped.
    pub fn from_triples(dim: usize, mut triples: Vec<(usize, usize, C64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triples.iter().find(|t| t.0 >= dim || t.1 >= dim) {
            return Err(Error::OutOfRange(format!("entry ({r},{c}) in dimension {dim}")));
        }
        triples.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triples.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triples.len());
        let mut rows = Vec::with_capacity(triples.len());
        for (r, c, v) in triples {
            if rows.last() == Some(&r) && col_idx.last() == Some(&c) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                col_idx.push(c);
                vals.push(v);
            }
        }
        let mut keep_cols = Vec::with_capacity(col_idx.len());
        let mut keep_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(col_idx).zip(vals) {
            if v != C64::new(0.0, 0.0) {
                row_ptr[r + 1] += 1;
                keep_cols.push(c);
                keep_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            dim,
            row_ptr,
            col_idx: keep_cols,
            vals: keep_vals,
        })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: vec![],
            vals: vec![],
        }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()].iter().copied().zip(self.vals[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[span.clone()].binary_search(&c) {
            Ok(k) => self.vals[span.start + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    /// Entries sorted by `(row, col)`.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// `max |A_rc - conj(A_cr)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        self.triples()
            .map(|(r, c, v)| (v - self.get(c, r).conj()).norm())
            .fold(0.0, f64::max)
    }

    /// `max |A_rc - B_rc|` over the union of nonzeros.
    pub fn max_abs_diff(&self, other: &CsrMatrix) -> f64 {
        let a = self.triples().map(|(r, c, v)| (v - other.get(r, c)).norm());
        let b = other.triples().map(|(r, c, v)| (v - self.get(r, c)).norm());
        a.chain(b).fold(0.0, f64::max)
    }

    /// Writes `% dim <D> nnz <K> hermitian` and one `row col re im` line per entry.
    pub fn write_triplets<W: Write>(&self, mut w: W) -> Result<()> {
        let tag = if self.hermiticity_residual() <= 1e-10 { "hermitian" } else { "general" };
        writeln!(w, "% dim {} nnz {} {}", self.dim, self.nnz(), tag)?;
        for (r, c, v) in self.triples() {
            writeln!(w, "{r} {c} {} {}", v.re, v.im)?;
        }
        Ok(())
    }

    /// Parses the triplet format written by [`CsrMatrix::write_triplets`].
    pub fn read_triplets(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty file".into(),
        })?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() < 5 || h[0] != "%" || h[1] != "dim" || h[3] != "nnz" {
            return Err(Error::Parse {
                line: 1,
                msg: "expected `% dim <D> nnz <K> ...`".into(),
            });
        }
        let perr = |line: usize, msg: &str| Error::Parse {
            line,
            msg: msg.to_string(),
        };
        let dim: usize = h[2].parse().map_err(|_| perr(1, "bad dim"))?;
        let nnz: usize = h[4].parse().map_err(|_| perr(1, "bad nnz"))?;
        let mut triples = Vec::with_capacity(nnz);
        for (i, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            if t.is_empty() {
                continue;
            }
            if t.len() != 4 {
                return Err(perr(i + 1, "expected `row col re im`"));
            }
            let r = t[0].parse().map_err(|_| perr(i + 1, "bad row"))?;
            let c = t[1].parse().map_err(|_| perr(i + 1, "bad col"))?;
            let re = t[2].parse().map_err(|_| perr(i + 1, "bad re"))?;
            let im = t[3].parse().map_err(|_| perr(i + 1, "bad im"))?;
            triples.push((r, c, C64::new(re, im)));
        }
        if triples.len() != nnz {
            return Err(perr(1, "nnz does not match entry count"));
        }
        Self::from_triples(dim, triples)
    }

    /// Principal submatrix on `keep` (in the given order).
    pub fn submatrix(&self, keep: &[usize]) -> DMatrix<C64> {
        let pos: std::collections::HashMap<usize, usize> =
            keep.iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut m = DMatrix::zeros(keep.len(), keep.len());
        for (i, &r) in keep.iter().enumerate() {
            for (c, v) in self.row(r) {
                if let Some(&j) = pos.get(&c) {
                    m[(i, j)] = v;
                }
            }
        }
        m
    }

    /// `(A v)` for a sparse `v`.
    pub fn apply_sparse(&self, v: &SparseVector) -> SparseVector {
        let mut out = SparseVector::new();
        for r in 0..self.dim {
            let s: C64 = self.row(r).filter_map(|(c, a)| v.get(&c).map(|x| a * x)).sum();
            if s != C64::new(0.0, 0.0) {
                out.insert(r, s);
            }
        }
        out
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.par_iter_mut().enumerate().for_each(|(r, yr)| {
            *yr = self.row(r).map(|(c, v)| v * x[c]).sum();
        });
    }

    fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn to_dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triples() {
            m[(r, c)] = v;
        }
        m
    }
}
