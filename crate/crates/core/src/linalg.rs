//! Exact sparse and dense linear algebra over [`Scalar`].

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use std::collections::{BTreeMap, BinaryHeap, HashMap};

/// Sparse vector: `(index, value)` pairs sorted by index, no zero values.
pub type SparseVec = Vec<(usize, Scalar)>;

/// `x + c * y` for sparse vectors.
pub fn axpy(x: &[(usize, Scalar)], c: &Scalar, y: &[(usize, Scalar)]) -> SparseVec {
    let mut out = Vec::with_capacity(x.len() + y.len());
    let (mut i, mut j) = (0, 0);
    while i < x.len() || j < y.len() {
        if j >= y.len() || (i < x.len() && x[i].0 < y[j].0) {
            out.push(x[i].clone());
            i += 1;
        } else if i >= x.len() || y[j].0 < x[i].0 {
            out.push((y[j].0, c * &y[j].1));
            j += 1;
        } else {
            let v = &x[i].1 + &(c * &y[j].1);
            if !v.is_zero() {
                out.push((x[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

/// Collects `(index, value)` contributions into a sorted sparse vector.
pub fn collect_sparse<I: IntoIterator<Item = (usize, Scalar)>>(items: I) -> SparseVec {
    let mut m: BTreeMap<usize, Scalar> = BTreeMap::new();
    for (i, v) in items {
        if v.is_zero() {
            continue;
        }
        match m.get_mut(&i) {
            Some(e) => *e += &v,
            None => {
                m.insert(i, v);
            }
        }
    }
    m.into_iter().filter(|(_, v)| !v.is_zero()).collect()
}

/// Matrices with fewer nonzeros are reduced on the calling thread.
const PARALLEL_NNZ: usize = 50_000;

/// Column-major sparse matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    rows: usize,
    cols: usize,
    columns: Vec<SparseVec>,
}

impl SparseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> SparseMatrix {
        SparseMatrix {
            rows,
            cols,
            columns: vec![Vec::new(); cols],
        }
    }

    pub fn identity(n: usize) -> SparseMatrix {
        SparseMatrix {
            rows: n,
            cols: n,
            columns: (0..n).map(|i| vec![(i, Scalar::one())]).collect(),
        }
    }

    /// Builds from `(row, col, value)` triplets. Duplicate positions are rejected.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        triplets: Vec<(usize, usize, Scalar)>,
    ) -> Result<SparseMatrix> {
        let mut columns: Vec<BTreeMap<usize, Scalar>> = vec![BTreeMap::new(); cols];
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::DimensionMismatch(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            if columns[c].insert(r, v).is_some() {
                return Err(Error::DuplicateEntry { row: r, col: c });
            }
        }
        Ok(SparseMatrix {
            rows,
            cols,
            columns: columns
                .into_iter()
                .map(|m| m.into_iter().filter(|(_, v)| !v.is_zero()).collect())
                .collect(),
        })
    }

    /// Builds from columns; each column may contain repeated indices, which are summed.
    pub fn from_columns(rows: usize, columns: Vec<Vec<(usize, Scalar)>>) -> Result<SparseMatrix> {
        let cols = columns.len();
        let mut out = Vec::with_capacity(cols);
        for col in columns {
            if let Some((r, _)) = col.iter().find(|(r, _)| *r >= rows) {
                return Err(Error::DimensionMismatch(format!(
                    "row {r} outside {rows} rows"
                )));
            }
            out.push(collect_sparse(col));
        }
        Ok(SparseMatrix {
            rows,
            cols,
            columns: out,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn column(&self, j: usize) -> &[(usize, Scalar)] {
        &self.columns[j]
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(|c| c.len()).sum()
    }

    pub fn get(&self, r: usize, c: usize) -> Scalar {
        match self.columns[c].binary_search_by_key(&r, |e| e.0) {
            Ok(i) => self.columns[c][i].1.clone(),
            Err(_) => Scalar::zero(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(|c| c.is_empty())
    }

    pub fn apply(&self, v: &[(usize, Scalar)]) -> SparseVec {
        let mut acc: SparseVec = Vec::new();
        for (j, x) in v {
            acc = axpy(&acc, x, &self.columns[*j]);
        }
        acc
    }

    /// Matrix product `self * other`.
    pub fn mul(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let columns = other.columns.iter().map(|c| self.apply(c)).collect();
        Ok(SparseMatrix {
            rows: self.rows,
            cols: other.cols,
            columns,
        })
    }

    pub fn add(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        self.lin_comb(&Scalar::one(), other)
    }

    /// `self + c * other`.
    pub fn lin_comb(&self, c: &Scalar, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(
                "matrix sum of different shapes".into(),
            ));
        }
        let columns = self
            .columns
            .iter()
            .zip(&other.columns)
            .map(|(a, b)| axpy(a, c, b))
            .collect();
        Ok(SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            columns,
        })
    }

    pub fn scale(&self, c: &Scalar) -> SparseMatrix {
        let columns = self
            .columns
            .iter()
            .map(|col| {
                col.iter()
                    .map(|(r, v)| (*r, v * c))
                    .filter(|(_, v)| !v.is_zero())
                    .collect()
            })
            .collect();
        SparseMatrix {
            rows: self.rows,
            cols: self.cols,
            columns,
        }
    }

    pub fn transpose(&self) -> SparseMatrix {
        let mut cols: Vec<SparseVec> = vec![Vec::new(); self.rows];
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col {
                cols[*i].push((j, v.clone()));
            }
        }
        SparseMatrix {
            rows: self.cols,
            cols: self.rows,
            columns: cols,
        }
    }

    /// Restriction to the given columns, in order.
    pub fn select_columns(&self, idx: &[usize]) -> SparseMatrix {
        SparseMatrix {
            rows: self.rows,
            cols: idx.len(),
            columns: idx.iter().map(|&j| self.columns[j].clone()).collect(),
        }
    }

    /// Rank by exact column reduction.
    pub fn rank(&self) -> usize {
        self.rank_profile().len()
    }

    /// Indices of the columns that are independent of all earlier columns.
    /// The reduction order is fixed, so the result is deterministic.
    pub fn rank_profile(&self) -> Vec<usize> {
        let comps = self.column_components();
        let reduce = |cols: &[usize]| -> Vec<usize> {
            let mut reducer = ColumnReducer::new(self.rows);
            cols.iter()
                .copied()
                .filter(|&j| reducer.insert(self.columns[j].clone()))
                .collect()
        };
        let mut piv: Vec<usize> = if self.nnz() < PARALLEL_NNZ || comps.len() < 2 {
            comps.iter().flat_map(|c| reduce(c)).collect()
        } else {
            let threads = std::thread::available_parallelism()
                .map_or(1, |n| n.get())
                .min(comps.len());
            let mut buckets: Vec<(usize, Vec<&Vec<usize>>)> =
                (0..threads).map(|_| (0, Vec::new())).collect();
            let mut order: Vec<&Vec<usize>> = comps.iter().collect();
            order.sort_by_key(|c| std::cmp::Reverse(c.len()));
            for c in order {
                let b = buckets.iter_mut().min_by_key(|b| b.0).unwrap();
                b.0 += c.len();
                b.1.push(c);
            }
            std::thread::scope(|sc| {
                let handles: Vec<_> = buckets
                    .iter()
                    .map(|(_, cs)| {
                        sc.spawn(move || cs.iter().flat_map(|c| reduce(c)).collect::<Vec<usize>>())
                    })
                    .collect();
                handles
                    .into_iter()
                    .flat_map(|h| h.join().expect("rank worker"))
                    .collect()
            })
        };
        piv.sort_unstable();
        piv
    }

    /// Column index sets of the connected components of the row/column incidence graph.
    /// Zero columns are omitted; each set is increasing.
    pub fn column_components(&self) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..self.rows).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for col in &self.columns {
            if let Some((r0, _)) = col.first() {
                let a = find(&mut parent, *r0);
                for (r, _) in &col[1..] {
                    let b = find(&mut parent, *r);
                    if a != b {
                        parent[b] = a;
                    }
                }
            }
        }
        let mut index: HashMap<usize, usize> = HashMap::new();
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (j, col) in self.columns.iter().enumerate() {
            if let Some((r0, _)) = col.first() {
                let root = find(&mut parent, *r0);
                let k = *index.entry(root).or_insert_with(|| {
                    out.push(Vec::new());
                    out.len() - 1
                });
                out[k].push(j);
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (j, col) in self.columns.iter().enumerate() {
            for (i, v) in col {
                d.set(*i, j, v.clone());
            }
        }
        d
    }

    /// Block matrix `[self | other]`.
    pub fn hcat(&self, other: &SparseMatrix) -> Result<SparseMatrix> {
        if self.rows != other.rows {
            return Err(Error::DimensionMismatch(
                "hcat with different row counts".into(),
            ));
        }
        let mut columns = self.columns.clone();
        columns.extend(other.columns.iter().cloned());
        Ok(SparseMatrix {
            rows: self.rows,
            cols: self.cols + other.cols,
            columns,
        })
    }
}

/// Incremental column echelon form with pivots at the largest row index.
pub struct ColumnReducer {
    owner: Vec<Option<SparseVec>>,
    rank: usize,
}

impl ColumnReducer {
    pub fn new(rows: usize) -> ColumnReducer {
        ColumnReducer {
            owner: vec![None; rows],
            rank: 0,
        }
    }

    /// Reduces `col` against the stored pivots; returns the remainder.
    pub fn reduce(&self, col: SparseVec) -> SparseVec {
        match col.last() {
            Some((low, _)) if self.owner[*low].is_some() => {}
            _ => return col,
        }
        // Working column as a max-heap of row indices over a value map.
        let mut vals: HashMap<usize, Scalar> = HashMap::with_capacity(col.len() * 4);
        let mut heap: BinaryHeap<usize> = BinaryHeap::with_capacity(col.len() * 4);
        for (i, v) in col {
            heap.push(i);
            vals.insert(i, v);
        }
        let mut rest: SparseVec = Vec::new();
        while let Some(low) = heap.pop() {
            while heap.peek() == Some(&low) {
                heap.pop();
            }
            let v = match vals.remove(&low) {
                Some(v) if !v.is_zero() => v,
                _ => continue,
            };
            match &self.owner[low] {
                Some(p) => {
                    let c = -&v;
                    for (i, x) in &p[..p.len() - 1] {
                        let t = &c * x;
                        match vals.get_mut(i) {
                            Some(e) => *e += &t,
                            None => {
                                vals.insert(*i, t);
                                heap.push(*i);
                            }
                        }
                    }
                }
                None => {
                    rest.push((low, v));
                    for i in heap.drain() {
                        if let Some(v) = vals.remove(&i) {
                            if !v.is_zero() {
                                rest.push((i, v));
                            }
                        }
                    }
                }
            }
        }
        rest.sort_by_key(|e| e.0);
        rest
    }

    /// Adds `col`; returns true if it increased the rank.
    pub fn insert(&mut self, col: SparseVec) -> bool {
        let col = self.reduce(col);
        match col.last() {
            None => false,
            Some((low, v)) => {
                let low = *low;
                let inv = v.inv();
                let normed: SparseVec = col.iter().map(|(i, x)| (*i, x * &inv)).collect();
                self.owner[low] = Some(normed);
                self.rank += 1;
                true
            }
        }
    }

    pub fn contains(&self, col: SparseVec) -> bool {
        self.reduce(col).is_empty()
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Total number of stored nonzeros.
    pub fn stored_nnz(&self) -> usize {
        self.owner.iter().flatten().map(|c| c.len()).sum()
    }
}

/// `dim ker(d_out) - rank(d_in)` for `C_in -> C -> C_out`, after checking `d_out * d_in = 0`.
pub fn homology_dimension(d_in: &SparseMatrix, d_out: &SparseMatrix) -> Result<usize> {
    if d_in.rows() != d_out.cols() {
        return Err(Error::DimensionMismatch(format!(
            "incoming map lands in dimension {}, outgoing map starts from dimension {}",
            d_in.rows(),
            d_out.cols()
        )));
    }
    let comp = d_out.mul(d_in)?;
    if !comp.is_zero() {
        return Err(Error::NotAComplex {
            nonzero: comp.nnz(),
        });
    }
    Ok(d_out.cols() - d_out.rank() - d_in.rank())
}

/// Small dense matrix with row-reduction utilities.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    /// Reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for k in 0..self.cols {
                    self.data.swap(p * self.cols + k, r * self.cols + k);
                }
            }
            let inv = self.get(r, c).inv();
            for k in c..self.cols {
                let v = self.get(r, k) * &inv;
                self.set(r, k, v);
            }
            for i in 0..self.rows {
                if i != r && !self.get(i, c).is_zero() {
                    let f = self.get(i, c).clone();
                    for k in c..self.cols {
                        if !self.get(r, k).is_zero() {
                            let v = self.get(i, k) - &(&f * self.get(r, k));
                            self.set(i, k, v);
                        }
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right kernel, as dense column vectors.
    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let mut basis = Vec::new();
        for free in 0..self.cols {
            if pivots.contains(&free) {
                continue;
            }
            let mut v = vec![Scalar::zero(); self.cols];
            v[free] = Scalar::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -m.get(i, free);
            }
            basis.push(v);
        }
        basis
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    #[test]
    fn rank_of_small_matrices() {
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![(0, 0, q(1)), (0, 1, q(2)), (1, 0, q(2)), (1, 1, q(4))],
        )
        .unwrap();
        assert_eq!(m.rank(), 1);
        let i = Scalar::root_of_unity(4, 1);
        let m = SparseMatrix::from_triplets(
            2,
            2,
            vec![
                (0, 0, q(1)),
                (0, 1, i.clone()),
                (1, 0, i.clone()),
                (1, 1, q(-1)),
            ],
        )
        .unwrap();
        assert_eq!(m.rank(), 1);
        assert_eq!(m.to_dense().rank(), 1);
    }

    #[test]
    fn duplicate_triplets_rejected() {
        let e = SparseMatrix::from_triplets(2, 2, vec![(0, 0, q(1)), (0, 0, q(2))]);
        assert!(matches!(e, Err(Error::DuplicateEntry { row: 0, col: 0 })));
    }

    #[test]
    fn homology_of_circle() {
        // Simplicial circle: 3 vertices, 3 edges.
        let d1 = SparseMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, q(-1)),
                (1, 0, q(1)),
                (1, 1, q(-1)),
                (2, 1, q(1)),
                (2, 2, q(-1)),
                (0, 2, q(1)),
            ],
        )
        .unwrap();
        let d0 = SparseMatrix::zeros(0, 3);
        let d2 = SparseMatrix::zeros(3, 0);
        assert_eq!(homology_dimension(&d1, &d0).unwrap(), 1);
        assert_eq!(homology_dimension(&d2, &d1).unwrap(), 1);
    }

    #[test]
    fn non_complex_rejected() {
        let a = SparseMatrix::identity(2);
        assert!(matches!(
            homology_dimension(&a, &a),
            Err(Error::NotAComplex { .. })
        ));
    }

    #[test]
    fn nullspace_is_kernel() {
        let mut d = DenseMatrix::zeros(2, 3);
        d.set(0, 0, q(1));
        d.set(0, 1, q(1));
        d.set(1, 1, q(1));
        d.set(1, 2, q(1));
        let ns = d.nullspace();
        assert_eq!(ns.len(), 1);
        let v = &ns[0];
        assert!((&v[0] + &v[1]).is_zero() && (&v[1] + &v[2]).is_zero());
    }
}
