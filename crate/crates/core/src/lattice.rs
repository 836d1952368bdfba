//! Integer lattice data: the alternating extension tensor `A: Γ × Γ → Λ` and
//! the fundamental group `Π` as an explicit central extension of `Γ` by `Λ`.
//!
//! All arithmetic here is exact.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("rank {0} must be a positive even integer")]
    BadRank(usize),
    #[error("extension tensor has shape {found:?}, expected {expected:?}")]
    Shape {
        expected: [usize; 3],
        found: [usize; 3],
    },
    #[error("group element has ranks ({lambda}, {gamma}), expected ({fibre_rank}, {base_rank})")]
    RankMismatch {
        lambda: usize,
        gamma: usize,
        fibre_rank: usize,
        base_rank: usize,
    },
}

/// What went wrong at one tensor entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `A[k][i][i] != 0`.
    Diagonal,
    /// `A[k][i][j] != -A[k][j][i]`.
    NotAntisymmetric,
}

/// A failed invariant at entry `(k, i, j)`, stored 0-based and displayed 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub k: usize,
    pub i: usize,
    pub j: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self.kind {
            ViolationKind::Diagonal => "nonzero diagonal entry",
            ViolationKind::NotAntisymmetric => "A[k][i][j] != -A[k][j][i]",
        };
        write!(f, "({},{},{}): {}", self.k + 1, self.i + 1, self.j + 1, what)
    }
}

/// Integer tensor `A[k][i][j]`: the `k`-th `Λ`-coordinate of `A(e_i, e_j)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtensionForm {
    base_rank: usize,
    fibre_rank: usize,
    coeffs: Vec<i64>,
}

impl ExtensionForm {
    /// The zero form, i.e. the trivial (product) extension.
    pub fn zero(base_rank: usize, fibre_rank: usize) -> Result<Self, LatticeError> {
        check_rank(base_rank)?;
        check_rank(fibre_rank)?;
        Ok(ExtensionForm {
            base_rank,
            fibre_rank,
            coeffs: vec![0; fibre_rank * base_rank * base_rank],
        })
    }

    /// Builds the tensor from a nested `[2d][2m][2m]` array. Only shapes are
    /// checked; use [`ExtensionForm::validate`] for the alternating property.
    pub fn from_nested(nested: &[Vec<Vec<i64>>]) -> Result<Self, LatticeError> {
        let fibre_rank = nested.len();
        let base_rank = nested.first().map_or(0, Vec::len);
        check_rank(fibre_rank)?;
        check_rank(base_rank)?;
        let mut coeffs = Vec::with_capacity(fibre_rank * base_rank * base_rank);
        for slice in nested {
            let cols = slice.first().map_or(0, Vec::len);
            if slice.len() != base_rank || slice.iter().any(|row| row.len() != base_rank) {
                return Err(LatticeError::Shape {
                    expected: [fibre_rank, base_rank, base_rank],
                    found: [fibre_rank, slice.len(), cols],
                });
            }
            for row in slice {
                coeffs.extend_from_slice(row);
            }
        }
        Ok(ExtensionForm {
            base_rank,
            fibre_rank,
            coeffs,
        })
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<i64>>> {
        (0..self.fibre_rank)
            .map(|k| {
                (0..self.base_rank)
                    .map(|i| (0..self.base_rank).map(|j| self.get(k, i, j)).collect())
                    .collect()
            })
            .collect()
    }

    /// `2m`, the rank of `Γ`.
    pub fn base_rank(&self) -> usize {
        self.base_rank
    }

    /// `2d`, the rank of `Λ`.
    pub fn fibre_rank(&self) -> usize {
        self.fibre_rank
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> i64 {
        self.coeffs[(k * self.base_rank + i) * self.base_rank + j]
    }

    #[inline]
    pub fn set(&mut self, k: usize, i: usize, j: usize, value: i64) {
        let b = self.base_rank;
        self.coeffs[(k * b + i) * b + j] = value;
    }

    /// Sets `A(e_i, e_j) = value` and `A(e_j, e_i) = -value` in coordinate `k`.
    pub fn set_pair(&mut self, k: usize, i: usize, j: usize, value: i64) {
        self.set(k, i, j, value);
        self.set(k, j, i, -value);
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn max_abs(&self) -> i64 {
        self.coeffs.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Every entry breaking the alternating invariants; empty means valid.
    /// Antisymmetry failures are reported once, at `i < j`.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for k in 0..self.fibre_rank {
            for i in 0..self.base_rank {
                if self.get(k, i, i) != 0 {
                    out.push(Violation {
                        k,
                        i,
                        j: i,
                        kind: ViolationKind::Diagonal,
                    });
                }
                for j in i + 1..self.base_rank {
                    if self.get(k, i, j) != -self.get(k, j, i) {
                        out.push(Violation {
                            k,
                            i,
                            j,
                            kind: ViolationKind::NotAntisymmetric,
                        });
                    }
                }
            }
        }
        out
    }

    /// `A(x, y)` for integer vectors.
    pub fn apply(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        self.bilinear(x, y, |_, _| true)
    }

    /// The upper-triangular cocycle `c(x, y) = Σ_{i<j} A(e_i, e_j) x_i y_j`.
    /// It is bilinear and `c(x, y) - c(y, x) = A(x, y)`.
    pub fn cocycle(&self, x: &[i64], y: &[i64]) -> Vec<i64> {
        self.bilinear(x, y, |i, j| i < j)
    }

    fn bilinear(&self, x: &[i64], y: &[i64], keep: impl Fn(usize, usize) -> bool) -> Vec<i64> {
        debug_assert_eq!(x.len(), self.base_rank);
        debug_assert_eq!(y.len(), self.base_rank);
        (0..self.fibre_rank)
            .map(|k| {
                let mut acc = 0i64;
                for (i, &xi) in x.iter().enumerate() {
                    if xi == 0 {
                        continue;
                    }
                    for (j, &yj) in y.iter().enumerate() {
                        if keep(i, j) {
                            acc += self.get(k, i, j) * xi * yj;
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Real-valued `A(x, y)` for real vectors in `Γ ⊗ ℝ`.
    pub fn apply_real(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        (0..self.fibre_rank)
            .map(|k| {
                let mut acc = 0.0;
                for (i, &xi) in x.iter().enumerate() {
                    for (j, &yj) in y.iter().enumerate() {
                        acc += self.get(k, i, j) as f64 * xi * yj;
                    }
                }
                acc
            })
            .collect()
    }
}

fn check_rank(r: usize) -> Result<(), LatticeError> {
    if r == 0 || !r.is_multiple_of(2) {
        Err(LatticeError::BadRank(r))
    } else {
        Ok(())
    }
}

/// An element `(λ, γ)` of `Π`, with `λ ∈ Λ` and `γ ∈ Γ` in lattice coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub lambda: Vec<i64>,
    pub gamma: Vec<i64>,
}

impl GroupElement {
    pub fn new(lambda: Vec<i64>, gamma: Vec<i64>) -> Self {
        GroupElement { lambda, gamma }
    }

    pub fn identity(form: &ExtensionForm) -> Self {
        GroupElement {
            lambda: vec![0; form.fibre_rank()],
            gamma: vec![0; form.base_rank()],
        }
    }

    /// The lift `(0, e_i)` of a basis vector of `Γ`.
    pub fn lift(form: &ExtensionForm, i: usize) -> Self {
        let mut g = Self::identity(form);
        g.gamma[i] = 1;
        g
    }

    /// The central element `(f_k, 0)`.
    pub fn central(form: &ExtensionForm, k: usize) -> Self {
        let mut g = Self::identity(form);
        g.lambda[k] = 1;
        g
    }

    fn check(&self, form: &ExtensionForm) -> Result<(), LatticeError> {
        if self.lambda.len() != form.fibre_rank() || self.gamma.len() != form.base_rank() {
            return Err(LatticeError::RankMismatch {
                lambda: self.lambda.len(),
                gamma: self.gamma.len(),
                fibre_rank: form.fibre_rank(),
                base_rank: form.base_rank(),
            });
        }
        Ok(())
    }
}

/// `(λ₁,γ₁)·(λ₂,γ₂) = (λ₁ + λ₂ + c(γ₁,γ₂), γ₁ + γ₂)`.
pub fn group_multiply(
    g1: &GroupElement,
    g2: &GroupElement,
    form: &ExtensionForm,
) -> Result<GroupElement, LatticeError> {
    g1.check(form)?;
    g2.check(form)?;
    let c = form.cocycle(&g1.gamma, &g2.gamma);
    Ok(GroupElement {
        lambda: izip3(&g1.lambda, &g2.lambda, &c),
        gamma: g1.gamma.iter().zip(&g2.gamma).map(|(a, b)| a + b).collect(),
    })
}

/// `(λ,γ)⁻¹ = (-λ + c(γ,γ), -γ)`.
pub fn group_inverse(g: &GroupElement, form: &ExtensionForm) -> Result<GroupElement, LatticeError> {
    g.check(form)?;
    let c = form.cocycle(&g.gamma, &g.gamma);
    Ok(GroupElement {
        lambda: g.lambda.iter().zip(&c).map(|(l, c)| c - l).collect(),
        gamma: g.gamma.iter().map(|x| -x).collect(),
    })
}

/// `g₁ g₂ g₁⁻¹ g₂⁻¹`; central with `λ = A(γ₁, γ₂)`.
pub fn commutator(
    g1: &GroupElement,
    g2: &GroupElement,
    form: &ExtensionForm,
) -> Result<GroupElement, LatticeError> {
    let a = group_multiply(g1, g2, form)?;
    let b = group_multiply(&a, &group_inverse(g1, form)?, form)?;
    group_multiply(&b, &group_inverse(g2, form)?, form)
}

fn izip3(a: &[i64], b: &[i64], c: &[i64]) -> Vec<i64> {
    a.iter().zip(b).zip(c).map(|((x, y), z)| x + y + z).collect()
}
