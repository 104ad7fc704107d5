use std::io::{self, Write};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length for the deterministic blocked reductions.
const CHUNK: usize = 1 << 14;

/// Square sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from rows whose column indices are strictly increasing.
    pub(crate) fn from_sorted_rows(n: usize, indptr: Vec<usize>, indices: Vec<u32>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indptr.len(), n + 1);
        debug_assert_eq!(indices.len(), values.len());
        Self {
            n,
            indptr,
            indices,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .zip(&self.values[span])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&(c as u32)) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    fn row_dot(&self, r: usize, x: &[f64]) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        let mut acc = 0.0;
        for (&c, &v) in self.indices[span.clone()].iter().zip(&self.values[span]) {
            acc += v * x[c as usize];
        }
        acc
    }

    /// `y = A x`.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        #[cfg(feature = "parallel")]
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(k, out)| {
            let base = k * CHUNK;
            for (i, yi) in out.iter_mut().enumerate() {
                *yi = self.row_dot(base + i, x);
            }
        });
        #[cfg(not(feature = "parallel"))]
        for (r, yi) in y.iter_mut().enumerate() {
            *yi = self.row_dot(r, x);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|r| self.row(r).all(|(c, v)| self.get(c, r) == v))
    }

    /// Coordinate listing, one `row col value` triple per line, zero-based.
    pub fn write_coo<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "% {} {} {}", self.n, self.n, self.nnz())?;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                writeln!(out, "{r} {c} {v:e}")?;
            }
        }
        Ok(())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partial = |(x, y): (&[f64], &[f64])| -> f64 { x.iter().zip(y).map(|(p, q)| p * q).sum() };
    #[cfg(feature = "parallel")]
    let parts: Vec<f64> = a.par_chunks(CHUNK).zip(b.par_chunks(CHUNK)).map(partial).collect();
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<f64> = a.chunks(CHUNK).zip(b.chunks(CHUNK)).map(partial).collect();
    parts.iter().sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += s x`.
pub(crate) fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    #[cfg(feature = "parallel")]
    y.par_iter_mut().zip(x.par_iter()).for_each(|(yi, xi)| *yi += s * xi);
    #[cfg(not(feature = "parallel"))]
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += s * xi);
}

pub(crate) fn scale(s: f64, x: &mut [f64]) {
    #[cfg(feature = "parallel")]
    x.par_iter_mut().for_each(|v| *v *= s);
    #[cfg(not(feature = "parallel"))]
    x.iter_mut().for_each(|v| *v *= s);
}

/// `out = a x + b y`.
pub(crate) fn combine2(out: &mut [f64], a: f64, x: &[f64], b: f64, y: &[f64]) {
    #[cfg(feature = "parallel")]
    out.par_iter_mut()
        .zip(x.par_iter().zip(y.par_iter()))
        .for_each(|(o, (xi, yi))| *o = a * xi + b * yi);
    #[cfg(not(feature = "parallel"))]
    for ((o, xi), yi) in out.iter_mut().zip(x).zip(y) {
        *o = a * xi + b * yi;
    }
}
