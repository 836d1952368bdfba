//! Complex structures on a lattice: a `2n × n` period matrix `Ω` whose
//! columns span `V ⊂ ℤ^{2n} ⊗ ℂ`, with `V ⊕ V̄` the whole space.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::linalg::{self, CMat, C64, I, ONE, ZERO};

/// Default relative tolerance on the singular-value ratio of `(Ω | Ω̄)`.
pub const DEFAULT_TOL_DET: f64 = 1e-9;

const MAX_DRAWS: usize = 64;

/// Below this singular-value ratio `(Ω | Ω̄)` is treated as not invertible.
const SINGULAR_RATIO: f64 = 1e-14;

/// Smallest singular-value ratio of `Ω'` for which [`ComplexStructure::chart`] is defined.
const CHART_RATIO: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StructureError {
    #[error("period matrix has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    Shape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("degenerate complex structure: singular-value ratio {ratio:.3e} <= tolerance {tol:.3e}")]
    Degenerate { ratio: f64, tol: f64 },
    #[error("no non-degenerate structure found after {0} draws")]
    Exhausted(usize),
}

/// Result of the non-degeneracy test on `(Ω | Ω̄)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructureCheck {
    /// `σ_min / σ_max` of the `2n × 2n` block matrix.
    pub ratio: f64,
    pub tol: f64,
}

impl StructureCheck {
    pub fn is_ok(&self) -> bool {
        self.ratio > self.tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexStructure {
    period: CMat,
}

impl ComplexStructure {
    /// Wraps a `2n × n` period matrix with `n ≥ 1`. No degeneracy check.
    pub fn new(period: CMat) -> Result<Self, StructureError> {
        let n = period.ncols();
        if n == 0 || period.nrows() != 2 * n {
            return Err(StructureError::Shape {
                rows: period.nrows(),
                cols: n,
                expected_rows: 2 * n.max(1),
                expected_cols: n.max(1),
            });
        }
        Ok(ComplexStructure { period })
    }

    /// The structure of `ℤ[i]^n` with lattice basis `(1,0,..), (i,0,..), (0,1,..), ..`:
    /// column `k` has `1` in row `2k` and `i` in row `2k+1`.
    pub fn standard(n: usize) -> Self {
        let mut period = CMat::zeros(2 * n, n);
        for k in 0..n {
            period[(2 * k, k)] = ONE;
            period[(2 * k + 1, k)] = I;
        }
        ComplexStructure { period }
    }

    /// The graph `{(u', U*·u')}` of a `n × n` chart matrix.
    pub fn from_chart(chart: &CMat) -> Result<Self, StructureError> {
        let n = chart.nrows();
        if n == 0 || chart.ncols() != n {
            return Err(StructureError::Shape {
                rows: chart.nrows(),
                cols: chart.ncols(),
                expected_rows: n.max(1),
                expected_cols: n.max(1),
            });
        }
        let mut period = CMat::zeros(2 * n, n);
        period.view_mut((0, 0), (n, n)).fill_with_identity();
        period.view_mut((n, 0), (n, n)).copy_from(chart);
        Ok(ComplexStructure { period })
    }

    /// Chart matrix `U* = Ω'' Ω'^{-1}` in the standard coordinate split, if
    /// the top block is well conditioned.
    pub fn chart(&self) -> Option<CMat> {
        let n = self.half_rank();
        let top = self.period.rows(0, n).into_owned();
        let bottom = self.period.rows(n, n).into_owned();
        let sv = linalg::singular_values(&top);
        if sv[n - 1] <= CHART_RATIO * sv[0] {
            return None;
        }
        let inv = top.try_inverse()?;
        Some(bottom * inv)
    }

    pub fn half_rank(&self) -> usize {
        self.period.ncols()
    }

    pub fn period(&self) -> &CMat {
        &self.period
    }

    /// Same subspace conjugated: `V ↦ V̄`.
    pub fn conjugate(&self) -> Self {
        ComplexStructure {
            period: self.period.map(|z| z.conj()),
        }
    }

    /// The `2n × 2n` matrix `(Ω | Ω̄)`: `(V, V̄)`-coordinates to lattice coordinates.
    pub fn block_matrix(&self) -> CMat {
        let n = self.half_rank();
        let mut m = CMat::zeros(2 * n, 2 * n);
        m.view_mut((0, 0), (2 * n, n)).copy_from(&self.period);
        m.view_mut((0, n), (2 * n, n))
            .copy_from(&self.period.map(|z| z.conj()));
        m
    }

    pub fn check(&self, tol: f64) -> StructureCheck {
        let sv = linalg::singular_values(&self.block_matrix());
        let max = sv.first().copied().unwrap_or(0.0);
        let min = sv.last().copied().unwrap_or(0.0);
        let ratio = if max > 0.0 { min / max } else { 0.0 };
        StructureCheck { ratio, tol }
    }

    pub fn validate(&self, tol: f64) -> Result<StructureCheck, StructureError> {
        let check = self.check(tol);
        if check.is_ok() {
            Ok(check)
        } else {
            Err(StructureError::Degenerate {
                ratio: check.ratio,
                tol,
            })
        }
    }

    /// `C = (Ω | Ω̄)⁻¹`, mapping lattice coordinates to `(V, V̄)`-coordinates.
    pub fn basis_change(&self) -> Result<CMat, StructureError> {
        let check = self.check(SINGULAR_RATIO);
        self.block_matrix()
            .try_inverse()
            .filter(|_| check.is_ok())
            .ok_or(StructureError::Degenerate {
                ratio: check.ratio,
                tol: check.tol,
            })
    }

    /// `V`-coordinates of a real lattice-coordinate vector.
    pub fn project(&self, basis_change: &CMat, x: &[f64]) -> Vec<C64> {
        let n = self.half_rank();
        (0..n)
            .map(|r| {
                x.iter()
                    .enumerate()
                    .fold(ZERO, |acc, (c, &xc)| acc + basis_change[(r, c)] * xc)
            })
            .collect()
    }
}

/// Draws a structure with i.i.d. standard complex Gaussian period entries.
pub fn random_structure_with<R: Rng>(n: usize, rng: &mut R) -> Result<ComplexStructure, StructureError> {
    if n == 0 {
        return Err(StructureError::Shape {
            rows: 0,
            cols: 0,
            expected_rows: 2,
            expected_cols: 1,
        });
    }
    for _ in 0..MAX_DRAWS {
        let period = CMat::from_fn(2 * n, n, |_, _| gaussian(rng));
        let s = ComplexStructure { period };
        if s.check(DEFAULT_TOL_DET).is_ok() {
            return Ok(s);
        }
    }
    Err(StructureError::Exhausted(MAX_DRAWS))
}

/// Deterministic in `seed`.
pub fn random_structure(n: usize, seed: u64) -> Result<ComplexStructure, StructureError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_structure_with(n, &mut rng)
}

pub(crate) fn gaussian<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::Rng;

    fn col(v: &[C64]) -> ComplexStructure {
        ComplexStructure::new(CMat::from_column_slice(v.len(), 1, v)).unwrap()
    }

    #[test]
    fn elliptic_standard_structure_is_valid() {
        let s = col(&[ONE, I]);
        assert!(s.validate(DEFAULT_TOL_DET).is_ok());
        // det [[1,1],[i,-i]] = -2i
        let det = s.block_matrix().determinant();
        assert!((det - C64::new(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn real_period_is_degenerate() {
        let s = col(&[ONE, ZERO]);
        assert!(matches!(
            s.validate(DEFAULT_TOL_DET),
            Err(StructureError::Degenerate { .. })
        ));
        assert!(s.basis_change().is_err());
    }

    #[test]
    fn two_dimensional_example_determinant() {
        let p = CMat::from_row_slice(4, 2, &[ONE, ZERO, ZERO, ONE, I, ZERO, ZERO, I]);
        let s = ComplexStructure::new(p).unwrap();
        assert!(s.validate(DEFAULT_TOL_DET).is_ok());
        let det = s.block_matrix().determinant();
        // (-2i)^2
        assert!((det - C64::new(-4.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn wrong_shape_is_rejected() {
        assert!(matches!(
            ComplexStructure::new(CMat::zeros(3, 2)),
            Err(StructureError::Shape { .. })
        ));
    }

    #[test]
    fn elliptic_basis_change_by_hand() {
        let c = col(&[ONE, I]).basis_change().unwrap();
        let half = C64::new(0.5, 0.0);
        let expected = CMat::from_row_slice(2, 2, &[half, -I * half, half, I * half]);
        assert!(max_abs(&(c - expected)) < 1e-15);
    }

    #[test]
    fn basis_change_inverts_block_matrix() {
        for seed in 0..20 {
            let s = random_structure(3, seed).unwrap();
            let c = s.basis_change().unwrap();
            let id = &c * s.block_matrix();
            assert!(max_abs(&(id - CMat::identity(6, 6))) < 10.0 * 1e-9);
        }
    }

    #[test]
    fn real_vectors_have_conjugate_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = random_structure(2, 11).unwrap();
        let c = s.basis_change().unwrap();
        for _ in 0..10 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let xc = nalgebra::DVector::from_iterator(4, x.iter().map(|&v| C64::new(v, 0.0)));
            let y = &c * xc;
            for r in 0..2 {
                assert!((y[r].conj() - y[r + 2]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruct_after_basis_change_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for seed in 0..10 {
            let s = random_structure(4, seed).unwrap();
            let block = s.block_matrix();
            let c = s.basis_change().unwrap();
            let sv = linalg::singular_values(&block);
            let cond = sv[0] / sv[sv.len() - 1];
            let x = nalgebra::DVector::from_fn(8, |_, _| gaussian(&mut rng));
            let back = &block * (&c * &x);
            let err = (back - &x).camax();
            assert!(err < 100.0 * f64::EPSILON * cond * x.camax());
        }
    }

    #[test]
    fn random_structure_is_deterministic_and_valid() {
        assert_eq!(random_structure(1, 5).unwrap(), random_structure(1, 5).unwrap());
        assert!(random_structure(3, 5).unwrap().validate(DEFAULT_TOL_DET).is_ok());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            let n = rng.random_range(1..=4);
            let s = random_structure(n, rng.random()).unwrap();
            assert!(s.validate(DEFAULT_TOL_DET).is_ok());
            // V ∩ V̄ = 0 numerically
            assert_eq!(linalg::rank(&s.block_matrix(), 1e-9).rank, 2 * n);
        }
    }

    #[test]
    fn chart_needs_invertible_top_block() {
        // Ω' = [[1, 0], [i, 0]] for ℤ[i]².
        let s = ComplexStructure::standard(2);
        assert!(s.validate(DEFAULT_TOL_DET).is_ok());
        assert!(s.chart().is_none());
        let c = ComplexStructure::standard(1).chart().unwrap();
        assert_eq!(c[(0, 0)], I);
    }

    #[test]
    fn chart_round_trip() {
        let s = random_structure(2, 9).unwrap();
        let chart = s.chart().unwrap();
        let t = ComplexStructure::from_chart(&chart).unwrap();
        // same subspace: t's columns lie in span of s's columns
        let stacked = {
            let mut m = CMat::zeros(4, 4);
            m.view_mut((0, 0), (4, 2)).copy_from(s.period());
            m.view_mut((0, 2), (4, 2)).copy_from(t.period());
            m
        };
        assert_eq!(linalg::rank(&stacked, 1e-9).rank, 2);
    }
}
