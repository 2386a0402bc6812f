//! Compressed sparse row matrices with cached assembly scatter.
//!
//! A `Pattern` is built once per (mesh, space) pair; it owns the CSR
//! structure and, for every cell, the value-slot index of each local
//! (i, j) entry, so repeated reassembly inside Newton loops touches no
//! search structures.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut per_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in triplets {
            if i >= nrows || j >= ncols {
                return Err(Error::Input(format!(
                    "triplet ({i}, {j}) outside {nrows}x{ncols}"
                )));
            }
            per_row[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut per_row {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn set_zero(&mut self) {
        self.values.fill(0.0);
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.nrows {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut count = vec![0usize; self.ncols];
        for &j in &self.col_idx {
            count[j] += 1;
        }
        let mut row_ptr = vec![0usize; self.ncols + 1];
        for j in 0..self.ncols {
            row_ptr[j + 1] = row_ptr[j] + count[j];
        }
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        let mut next = row_ptr.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let slot = next[j];
                col_idx[slot] = i;
                values[slot] = self.values[k];
                next[j] += 1;
            }
        }
        SparseMatrix {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Symmetric elimination of constrained dofs: constrained rows and
    /// columns are zeroed (diagonal set to 1), the right-hand side receives
    /// the column contribution of inhomogeneous values, and constrained
    /// right-hand side entries are set to the prescribed values.
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], bc: &[Option<f64>]) {
        assert_eq!(self.nrows, self.ncols);
        assert_eq!(bc.len(), self.nrows);
        assert_eq!(rhs.len(), self.nrows);
        for i in 0..self.nrows {
            let row_constrained = bc[i].is_some();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                if row_constrained {
                    self.values[k] = if j == i { 1.0 } else { 0.0 };
                } else if let Some(xj) = bc[j] {
                    rhs[i] -= self.values[k] * xj;
                    self.values[k] = 0.0;
                }
            }
            if let Some(xi) = bc[i] {
                rhs[i] = xi;
            }
        }
    }

    /// Coordinate-format text dump (one `i j value` line per entry).
    pub fn to_coordinate_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.nrows, self.ncols, self.nnz());
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s.push_str(&format!("{} {} {}\n", i, self.col_idx[k], self.values[k]));
            }
        }
        s
    }

    /// Max |A - A^T| entry; structure need not be symmetric.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// CSR structure shared by all matrices assembled over the same cell dof
/// lists, plus the per-cell scatter table.
#[derive(Debug, Clone)]
pub struct Pattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    scatter: Vec<u32>,
    per_cell: usize,
}

impl Pattern {
    /// `cell_dofs` is a flat list, `per_cell` consecutive dof indices per cell.
    pub fn build(n: usize, cell_dofs: &[usize], per_cell: usize) -> Pattern {
        assert_eq!(cell_dofs.len() % per_cell, 0);
        let ncells = cell_dofs.len() / per_cell;
        let mut neighbors: Vec<Vec<usize>> = vec![Vec::new(); n];
        for c in 0..ncells {
            let dofs = &cell_dofs[c * per_cell..(c + 1) * per_cell];
            for &i in dofs {
                neighbors[i].extend_from_slice(dofs);
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut neighbors {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let mut scatter = Vec::with_capacity(ncells * per_cell * per_cell);
        for c in 0..ncells {
            let dofs = &cell_dofs[c * per_cell..(c + 1) * per_cell];
            for &i in dofs {
                let lo = row_ptr[i];
                let hi = row_ptr[i + 1];
                for &j in dofs {
                    let k = col_idx[lo..hi].binary_search(&j).unwrap();
                    scatter.push((lo + k) as u32);
                }
            }
        }
        Pattern {
            n,
            row_ptr,
            col_idx,
            scatter,
            per_cell,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn zeros(&self) -> SparseMatrix {
        SparseMatrix {
            nrows: self.n,
            ncols: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: vec![0.0; self.col_idx.len()],
        }
    }

    /// Adds a dense `per_cell x per_cell` local matrix (row-major) into the
    /// global values of cell `c`.
    #[inline]
    pub fn scatter_add(&self, values: &mut [f64], c: usize, local: &[f64]) {
        let m = self.per_cell * self.per_cell;
        let slots = &self.scatter[c * m..(c + 1) * m];
        for (slot, v) in slots.iter().zip(local) {
            values[*slot as usize] += v;
        }
    }
}
