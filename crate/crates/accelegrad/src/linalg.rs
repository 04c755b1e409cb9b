//! Dense and sparse vectors, row matrices, and Euclidean-ball projection.
//!
//! All scalars are `f64`. Values admitted into optimizer state must be
//! finite; checked constructors enforce this, while arithmetic on already
//! validated data uses plain operations. Dimension mismatches are
//! programming errors and panic.

use crate::error::{Error, Result};

/// Fixed-dimension vector of finite `f64` entries.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseVector {
    entries: Vec<f64>,
}

impl DenseVector {
    /// Builds a vector, rejecting NaN and infinite entries.
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dense vector entries".into()));
        }
        Ok(DenseVector { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        DenseVector {
            entries: vec![0.0; dim],
        }
    }

    /// Construction from a generator; entries are not re-validated.
    pub(crate) fn from_fn(dim: usize, f: impl FnMut(usize) -> f64) -> Self {
        DenseVector {
            entries: (0..dim).map(f).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.entries
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.entries.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.is_finite())
    }

    /// Euclidean norm; 0 for the zero vector.
    pub fn norm2(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.entries.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, other: &DenseVector) -> f64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "dot: dimension mismatch {} vs {}",
            self.dim(),
            other.dim()
        );
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `self += alpha * x`
    pub fn add_scaled(&mut self, alpha: f64, x: &DenseVector) {
        assert_eq!(
            self.dim(),
            x.dim(),
            "add_scaled: dimension mismatch {} vs {}",
            self.dim(),
            x.dim()
        );
        for (s, v) in self.entries.iter_mut().zip(x.entries.iter()) {
            *s += alpha * v;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for s in self.entries.iter_mut() {
            *s *= alpha;
        }
    }

    pub fn scaled(&self, alpha: f64) -> DenseVector {
        let mut out = self.clone();
        out.scale(alpha);
        out
    }

    /// `self - other`
    pub fn minus(&self, other: &DenseVector) -> DenseVector {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }

    pub fn distance(&self, other: &DenseVector) -> f64 {
        assert_eq!(
            self.dim(),
            other.dim(),
            "distance: dimension mismatch {} vs {}",
            self.dim(),
            other.dim()
        );
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.entries
    }
}

impl std::ops::Index<usize> for DenseVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.entries[i]
    }
}

/// `y + alpha * x`
pub fn axpy(alpha: f64, x: &DenseVector, y: &DenseVector) -> DenseVector {
    let mut out = y.clone();
    out.add_scaled(alpha, x);
    out
}

/// Sparse vector with strictly increasing indices and nonzero finite values.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    /// Builds from (index, value) pairs; indices must be strictly
    /// increasing and below `dim`, values nonzero and finite.
    pub fn new(pairs: impl IntoIterator<Item = (usize, f64)>, dim: usize) -> Result<Self> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, val) in pairs {
            if idx >= dim {
                return Err(Error::InvalidArgument(format!(
                    "sparse index {idx} out of bounds for dimension {dim}"
                )));
            }
            if let Some(&last) = indices.last() {
                if idx <= last {
                    return Err(Error::InvalidArgument(format!(
                        "sparse indices not strictly increasing: {last} then {idx}"
                    )));
                }
            }
            if !val.is_finite() {
                return Err(Error::NonFinite(format!("sparse value at index {idx}")));
            }
            if val == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "explicit zero stored at index {idx}"
                )));
            }
            indices.push(idx);
            values.push(val);
        }
        Ok(SparseVector {
            indices,
            values,
            dim,
        })
    }

    /// Sparsifies a dense vector, dropping exact zeros.
    pub fn from_dense(x: &DenseVector) -> Self {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, &v) in x.iter().enumerate() {
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        SparseVector {
            indices,
            values,
            dim: x.dim(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn norm2(&self) -> f64 {
        self.norm2_sq().sqrt()
    }

    pub fn norm2_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn dot(&self, dense: &DenseVector) -> f64 {
        assert_eq!(
            self.dim,
            dense.dim(),
            "sparse dot: dimension mismatch {} vs {}",
            self.dim,
            dense.dim()
        );
        let d = dense.as_slice();
        self.iter().map(|(i, v)| v * d[i]).sum()
    }

    /// `out += alpha * self`
    pub fn axpy_into(&self, alpha: f64, out: &mut DenseVector) {
        assert_eq!(
            self.dim,
            out.dim(),
            "sparse axpy: dimension mismatch {} vs {}",
            self.dim,
            out.dim()
        );
        for (i, v) in self.iter() {
            let slot = &mut out.entries[i];
            *slot += alpha * v;
        }
    }

    pub fn to_dense(&self) -> DenseVector {
        let mut out = DenseVector::zeros(self.dim);
        self.axpy_into(1.0, &mut out);
        out
    }
}

/// Euclidean ball `{ y : ||y - center|| <= radius }`.
///
/// The radius is half the feasible-set diameter consumed by the optimizers.
#[derive(Clone, Debug)]
pub struct Ball {
    center: DenseVector,
    radius: f64,
}

impl Ball {
    pub fn new(center: DenseVector, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "ball radius must be positive and finite, got {radius}"
            )));
        }
        Ok(Ball { center, radius })
    }

    /// Ball of the given diameter centered at `center`.
    pub fn with_diameter(center: DenseVector, diameter: f64) -> Result<Self> {
        Ball::new(center, diameter / 2.0)
    }

    pub fn center(&self) -> &DenseVector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn contains(&self, x: &DenseVector, relative_slack: f64) -> bool {
        x.distance(&self.center) <= self.radius * (1.0 + relative_slack)
    }

    /// Projection onto the ball: the closest point of the ball to `x`.
    ///
    /// Interior points (including the boundary case `||x - center|| ==
    /// radius`) are returned unchanged; exterior points are scaled radially
    /// onto the boundary.
    pub fn project(&self, x: &DenseVector) -> DenseVector {
        assert_eq!(
            self.dim(),
            x.dim(),
            "project: dimension mismatch {} vs {}",
            self.dim(),
            x.dim()
        );
        let dist = x.distance(&self.center);
        if dist <= self.radius {
            return x.clone();
        }
        let scale = self.radius / dist;
        let mut out = self.center.clone();
        for (o, (xi, ci)) in out.entries.iter_mut().zip(x.iter().zip(self.center.iter())) {
            *o = ci + scale * (xi - ci);
        }
        out
    }
}

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        let expected = nrows
            .checked_mul(ncols)
            .ok_or_else(|| Error::InvalidArgument("matrix size overflow".into()))?;
        if data.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "matrix data length {} does not match {nrows}x{ncols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        Ok(DenseMatrix { nrows, ncols, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.ncols..(i + 1) * self.ncols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Matrix stored by rows, dense or sparse; the shared row interface used
/// by the finite-sum objectives.
#[derive(Clone, Debug)]
pub enum RowMatrix {
    Dense(DenseMatrix),
    Sparse {
        rows: Vec<SparseVector>,
        ncols: usize,
    },
}

impl RowMatrix {
    pub fn sparse(rows: Vec<SparseVector>, ncols: usize) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.dim() != ncols {
                return Err(Error::InvalidArgument(format!(
                    "sparse row {i} has dimension {}, expected {ncols}",
                    r.dim()
                )));
            }
        }
        Ok(RowMatrix::Sparse { rows, ncols })
    }

    pub fn nrows(&self) -> usize {
        match self {
            RowMatrix::Dense(m) => m.nrows(),
            RowMatrix::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn ncols(&self) -> usize {
        match self {
            RowMatrix::Dense(m) => m.ncols(),
            RowMatrix::Sparse { ncols, .. } => *ncols,
        }
    }

    /// `<row_i, x>`
    pub fn row_dot(&self, i: usize, x: &DenseVector) -> f64 {
        match self {
            RowMatrix::Dense(m) => {
                debug_assert_eq!(m.ncols(), x.dim());
                m.row(i).iter().zip(x.iter()).map(|(a, b)| a * b).sum()
            }
            RowMatrix::Sparse { rows, .. } => rows[i].dot(x),
        }
    }

    /// `out += alpha * row_i`
    pub fn row_add_scaled(&self, i: usize, alpha: f64, out: &mut DenseVector) {
        match self {
            RowMatrix::Dense(m) => {
                debug_assert_eq!(m.ncols(), out.dim());
                for (o, a) in out.entries.iter_mut().zip(m.row(i).iter()) {
                    *o += alpha * a;
                }
            }
            RowMatrix::Sparse { rows, .. } => rows[i].axpy_into(alpha, out),
        }
    }

    pub fn row_norm2(&self, i: usize) -> f64 {
        match self {
            RowMatrix::Dense(m) => m.row(i).iter().map(|v| v * v).sum::<f64>().sqrt(),
            RowMatrix::Sparse { rows, .. } => rows[i].norm2(),
        }
    }
}

/// Fixed-tree pairwise summation. Used as an order-independent reference
/// for averaging accumulators and for reproducible reductions.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
