//! Dense complex linear algebra helpers built on `nalgebra`.
//!
//! Every rank decision goes through [`RankInfo`], which keeps the singular
//! values on both sides of the cut so callers can audit borderline cases.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

pub type C64 = Complex64;
pub type CMat = DMatrix<Complex64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Outcome of a singular-value rank decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    /// Absolute cut: singular values strictly above it are kept.
    pub threshold: f64,
    /// Smallest singular value counted towards the rank.
    pub smallest_kept: Option<f64>,
    /// Largest singular value treated as zero.
    pub largest_dropped: Option<f64>,
}

impl RankInfo {
    fn from_sorted(sv: &[f64], threshold: f64) -> Self {
        let rank = sv.iter().take_while(|&&s| s > threshold).count();
        RankInfo {
            rank,
            threshold,
            smallest_kept: rank.checked_sub(1).map(|r| sv[r]),
            largest_dropped: sv.get(rank).copied(),
        }
    }

    /// True when a singular value sits within a factor `band` of the cut.
    pub fn is_near_threshold(&self, band: f64) -> bool {
        if self.threshold <= 0.0 {
            return false;
        }
        let kept_close = self
            .smallest_kept
            .is_some_and(|s| s < self.threshold * band);
        let dropped_close = self
            .largest_dropped
            .is_some_and(|s| s > self.threshold / band);
        kept_close || dropped_close
    }
}

/// Singular values of `m`, sorted descending. Empty matrices have none.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().copied().collect()
}

pub fn rank(m: &CMat, threshold: f64) -> RankInfo {
    RankInfo::from_sorted(&singular_values(m), threshold)
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn null_space(m: &CMat, threshold: f64) -> (CMat, RankInfo) {
    let cols = m.ncols();
    if cols == 0 {
        return (CMat::zeros(0, 0), RankInfo::from_sorted(&[], threshold));
    }
    if m.nrows() == 0 {
        return (CMat::identity(cols, cols), RankInfo::from_sorted(&[], threshold));
    }
    // Pad with zero rows so the thin SVD returns a full right basis.
    let rows = m.nrows().max(cols);
    let mut padded = CMat::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let info = RankInfo::from_sorted(&sv[..m.nrows().min(cols)], threshold);
    let kernel_dim = cols - info.rank;
    let mut basis = CMat::zeros(cols, kernel_dim);
    for (c, row) in (info.rank..cols).enumerate() {
        for i in 0..cols {
            basis[(i, c)] = v_t[(row, i)].conj();
        }
    }
    (basis, info)
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn column_space(m: &CMat, threshold: f64) -> (CMat, RankInfo) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (
            CMat::zeros(m.nrows(), 0),
            RankInfo::from_sorted(&[], threshold),
        );
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let info = RankInfo::from_sorted(&sv, threshold);
    (u.columns(0, info.rank).into_owned(), info)
}

/// Orthonormal basis of the orthogonal complement of `span(q)` inside
/// `C^n`, where `q` has orthonormal columns.
pub fn orthogonal_complement(q: &CMat, n: usize) -> CMat {
    let r = q.ncols();
    if r == 0 {
        return CMat::identity(n, n);
    }
    let projector = CMat::identity(n, n) - q * q.adjoint();
    let svd = projector.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    u.columns(0, n.saturating_sub(r)).into_owned()
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_slice(v: &[C64]) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Dense complex 3-tensor with shape `(n0, n1, n2)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CTensor3 {
    shape: [usize; 3],
    data: Vec<C64>,
}

impl CTensor3 {
    pub fn zeros(n0: usize, n1: usize, n2: usize) -> Self {
        CTensor3 {
            shape: [n0, n1, n2],
            data: vec![ZERO; n0 * n1 * n2],
        }
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    #[inline]
    fn offset(&self, a: usize, b: usize, c: usize) -> usize {
        debug_assert!(a < self.shape[0] && b < self.shape[1] && c < self.shape[2]);
        (a * self.shape[1] + b) * self.shape[2] + c
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize) -> C64 {
        self.data[self.offset(a, b, c)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, value: C64) {
        let o = self.offset(a, b, c);
        self.data[o] = value;
    }

    pub fn max_abs(&self) -> f64 {
        max_abs_slice(&self.data)
    }

    pub fn conj(&self) -> Self {
        CTensor3 {
            shape: self.shape,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Max-norm of the entrywise difference; shapes must agree.
    pub fn distance(&self, other: &CTensor3) -> f64 {
        assert_eq!(self.shape, other.shape, "tensor shapes differ");
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).norm()))
    }

    /// Flattens slots 1 and 2, giving a `n0 × (n1·n2)` matrix.
    pub fn flatten_first(&self) -> CMat {
        let [n0, n1, n2] = self.shape;
        CMat::from_fn(n0, n1 * n2, |r, c| self.data[r * n1 * n2 + c])
    }

    /// Nested `[n0][n1][n2]` view, for serialization.
    pub fn to_nested(&self) -> Vec<Vec<Vec<C64>>> {
        let [n0, n1, n2] = self.shape;
        (0..n0)
            .map(|a| {
                (0..n1)
                    .map(|b| (0..n2).map(|c| self.get(a, b, c)).collect())
                    .collect()
            })
            .collect()
    }
}
