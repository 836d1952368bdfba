//! Splitting the real extension tensor along `Γ ⊗ ℂ = V ⊕ V̄` and
//! `Λ ⊗ ℂ = U ⊕ Ū`, the First Riemann Relation, and the Appell-Humbert
//! cocycle of a bundle.
//!
//! Complex tensors are indexed `[k][a][b]` with `k` a fibre coordinate and
//! `a`, `b` base coordinates. For the Hermitian component `B"` the slot `a`
//! is in `V` and `b` in `V̄`; for its conjugate partner the order is reversed.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::lattice::ExtensionForm;
use crate::linalg::{self, CMat, CTensor3, C64, ZERO};
use crate::structure::{ComplexStructure, StructureError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecomposeError {
    #[error("rank mismatch: form has ranks (base {base_rank}, fibre {fibre_rank}) but V has half rank {v} and U has half rank {u}")]
    Ranks {
        base_rank: usize,
        fibre_rank: usize,
        v: usize,
        u: usize,
    },
    #[error("{which} structure: {source}")]
    Structure {
        which: &'static str,
        source: StructureError,
    },
    #[error("First Riemann Relation fails: forbidden component {residual:.3e} exceeds {tol:.1e} x {scale:.3e}")]
    NotInVariety { residual: f64, scale: f64, tol: f64 },
    #[error("translation cocycle has shape {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    PhiShape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("vector of length {found} where {expected} was expected")]
    Dimension { expected: usize, found: usize },
}

fn check_ranks(
    form: &ExtensionForm,
    v: &ComplexStructure,
    u: &ComplexStructure,
) -> Result<(), DecomposeError> {
    if form.base_rank() != 2 * v.half_rank() || form.fibre_rank() != 2 * u.half_rank() {
        return Err(DecomposeError::Ranks {
            base_rank: form.base_rank(),
            fibre_rank: form.fibre_rank(),
            v: v.half_rank(),
            u: u.half_rank(),
        });
    }
    Ok(())
}

fn basis_change(which: &'static str, s: &ComplexStructure) -> Result<CMat, DecomposeError> {
    s.basis_change()
        .map_err(|source| DecomposeError::Structure { which, source })
}

fn form_slice(form: &ExtensionForm, k: usize) -> CMat {
    let n = form.base_rank();
    DMatrix::from_fn(n, n, |i, j| C64::new(form.get(k, i, j) as f64, 0.0))
}

/// The six complex components of `A`.
#[derive(Debug, Clone)]
pub struct DecomposedForm {
    /// `B' ∈ Λ²V^∨ ⊗ U`.
    pub complex: CTensor3,
    /// `B" ∈ (V ⊗ V̄)^∨ ⊗ U`, slots `[k][v][v̄]`.
    pub hermitian: CTensor3,
    /// Component in `Λ²V̄^∨ ⊗ U`; zero exactly on the parameter variety.
    pub forbidden: CTensor3,
    /// `Λ²V̄^∨ ⊗ Ū`, the conjugate of `B'`.
    pub conj_complex: CTensor3,
    /// `(V̄ ⊗ V)^∨ ⊗ Ū`, slots `[k][v̄][v]`, the conjugate of `B"`.
    pub conj_hermitian: CTensor3,
    /// `Λ²V^∨ ⊗ Ū`, the conjugate of the forbidden component.
    pub conj_forbidden: CTensor3,
    /// Max-norm of `A` in `(V,V̄)/(U,Ū)` coordinates.
    pub scale: f64,
    pub tol: f64,
    full: Vec<CMat>,
    base_change: CMat,
    fibre_block: CMat,
}

/// Residuals of the structural invariants of a [`DecomposedForm`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionResiduals {
    /// Relative max-norm error of rebuilding `A` from the six components.
    pub reconstruction: f64,
    /// `max |B'(a,b) + B'(b,a)|`.
    pub complex_antisymmetry: f64,
    /// Mismatch between each conjugate block and its partner.
    pub conjugation: f64,
    /// Mismatch between the `V̄V` block of `A` and `-B"ᵀ`.
    pub hermitian_mirror: f64,
}

impl DecomposedForm {
    pub fn base_dim(&self) -> usize {
        self.complex.shape()[1]
    }

    pub fn fibre_dim(&self) -> usize {
        self.complex.shape()[0]
    }

    /// `(V, V̄)`-coordinate change on the base (`C_V`).
    pub fn base_change(&self) -> &CMat {
        &self.base_change
    }

    /// Rebuilds the full tensor in `(V,V̄)/(U,Ū)` coordinates from the six
    /// stored blocks (the mirrored Hermitian blocks by antisymmetry).
    fn assemble(&self) -> Vec<CMat> {
        let d = self.fibre_dim();
        let m = self.base_dim();
        let mut out = vec![CMat::zeros(2 * m, 2 * m); 2 * d];
        for k in 0..d {
            for a in 0..m {
                for b in 0..m {
                    let u = &mut out[k];
                    u[(a, b)] = self.complex.get(k, a, b);
                    u[(a, m + b)] = self.hermitian.get(k, a, b);
                    u[(m + b, a)] = -self.hermitian.get(k, a, b);
                    u[(m + a, m + b)] = self.forbidden.get(k, a, b);
                    let ub = &mut out[d + k];
                    ub[(a, b)] = self.conj_forbidden.get(k, a, b);
                    ub[(m + a, b)] = self.conj_hermitian.get(k, a, b);
                    ub[(b, m + a)] = -self.conj_hermitian.get(k, a, b);
                    ub[(m + a, m + b)] = self.conj_complex.get(k, a, b);
                }
            }
        }
        out
    }

    /// Maps the components back to a real tensor in lattice coordinates.
    pub fn reconstruct(&self) -> Vec<DMatrix<f64>> {
        let slices = self.assemble();
        let c = &self.base_change;
        let c_t = c.transpose();
        let n_fibre = slices.len();
        let transformed: Vec<CMat> = slices.iter().map(|s| &c_t * s * c).collect();
        (0..n_fibre)
            .map(|k| {
                let mut acc = CMat::zeros(c.nrows(), c.nrows());
                for (kp, t) in transformed.iter().enumerate() {
                    acc += t * self.fibre_block[(k, kp)];
                }
                acc.map(|z| z.re)
            })
            .collect()
    }

    pub fn residuals(&self, form: &ExtensionForm) -> DecompositionResiduals {
        let rebuilt = self.reconstruct();
        let mut err: f64 = 0.0;
        for (k, slice) in rebuilt.iter().enumerate() {
            for i in 0..slice.nrows() {
                for j in 0..slice.ncols() {
                    err = err.max((slice[(i, j)] - form.get(k, i, j) as f64).abs());
                }
            }
        }
        let denom = (form.max_abs() as f64).max(1.0);
        let (d, m) = (self.fibre_dim(), self.base_dim());
        let mut antisym: f64 = 0.0;
        let mut mirror: f64 = 0.0;
        for k in 0..d {
            for a in 0..m {
                for b in 0..m {
                    antisym = antisym
                        .max((self.complex.get(k, a, b) + self.complex.get(k, b, a)).norm());
                    mirror = mirror
                        .max((self.full[k][(m + b, a)] + self.hermitian.get(k, a, b)).norm());
                }
            }
        }
        let conjugation = self
            .conj_complex
            .distance(&self.complex.conj())
            .max(self.conj_hermitian.distance(&self.hermitian.conj()))
            .max(self.conj_forbidden.distance(&self.forbidden.conj()));
        DecompositionResiduals {
            reconstruction: err / denom,
            complex_antisymmetry: antisym,
            conjugation,
            hermitian_mirror: mirror,
        }
    }

    /// `B"` is zero relative to the scale of `A`.
    pub fn hermitian_vanishes(&self) -> bool {
        self.hermitian.max_abs() <= self.tol * self.scale
    }

    pub fn complex_vanishes(&self) -> bool {
        self.complex.max_abs() <= self.tol * self.scale
    }
}

/// Writes `A` in `(V,V̄)` coordinates on its inputs and `(U,Ū)` coordinates
/// on its output and splits off the six components.
pub fn decompose(
    form: &ExtensionForm,
    v: &ComplexStructure,
    u: &ComplexStructure,
    tol: f64,
) -> Result<DecomposedForm, DecomposeError> {
    check_ranks(form, v, u)?;
    let base_change = basis_change("V", v)?;
    let fibre_change = basis_change("U", u)?;
    let p = v.block_matrix();
    let p_t = p.transpose();
    let m = v.half_rank();
    let d = u.half_rank();

    // Input slots first: P_Vᵀ A_k P_V for each lattice coordinate k.
    let pulled: Vec<CMat> = (0..2 * d)
        .map(|k| &p_t * form_slice(form, k) * &p)
        .collect();
    let full: Vec<CMat> = (0..2 * d)
        .map(|kp| {
            let mut acc = CMat::zeros(2 * m, 2 * m);
            for (k, s) in pulled.iter().enumerate() {
                acc += s * fibre_change[(kp, k)];
            }
            acc
        })
        .collect();

    let block = |kp: usize, row0: usize, col0: usize| {
        let mut t = CTensor3::zeros(d, m, m);
        for k in 0..d {
            for a in 0..m {
                for b in 0..m {
                    t.set(k, a, b, full[kp + k][(row0 + a, col0 + b)]);
                }
            }
        }
        t
    };
    let scale = full.iter().map(linalg::max_abs).fold(0.0, f64::max);
    Ok(DecomposedForm {
        complex: block(0, 0, 0),
        hermitian: block(0, 0, m),
        forbidden: block(0, m, m),
        conj_complex: block(d, m, m),
        conj_hermitian: block(d, m, 0),
        conj_forbidden: block(d, 0, 0),
        scale,
        tol,
        full,
        base_change,
        fibre_block: u.block_matrix(),
    })
}

/// Verdict of the First Riemann Relation test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannVerdict {
    pub member: bool,
    /// Max-norm of the `Λ²V̄^∨ ⊗ U` component.
    pub residual_norm: f64,
    /// Max-norm of `A` in `(V,V̄)/(U,Ū)` coordinates.
    pub scale: f64,
    pub tol: f64,
}

impl RiemannVerdict {
    pub fn relative_residual(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual_norm / self.scale
        } else {
            0.0
        }
    }
}

/// Evaluates `A` directly on pairs of columns of `(Ω_V | Ω̄_V)` and projects
/// with `C_U`; this path shares no code with [`decompose`].
pub fn riemann_check(
    form: &ExtensionForm,
    v: &ComplexStructure,
    u: &ComplexStructure,
    tol: f64,
) -> Result<RiemannVerdict, DecomposeError> {
    check_ranks(form, v, u)?;
    let c_u = basis_change("U", u)?;
    let cols = v.block_matrix();
    let m = v.half_rank();
    let d = u.half_rank();
    let n = 2 * m;
    let eval = |a: usize, b: usize| -> Vec<C64> {
        (0..2 * d)
            .map(|k| {
                let mut acc = ZERO;
                for i in 0..n {
                    let x = cols[(i, a)];
                    for j in 0..n {
                        let coeff = form.get(k, i, j);
                        if coeff != 0 {
                            acc += x * cols[(j, b)] * coeff as f64;
                        }
                    }
                }
                acc
            })
            .collect()
    };
    let mut residual: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let value = eval(a, b);
            for kp in 0..2 * d {
                let z: C64 = (0..2 * d).map(|k| c_u[(kp, k)] * value[k]).sum();
                scale = scale.max(z.norm());
                if kp < d && a >= m && b >= m {
                    residual = residual.max(z.norm());
                }
            }
        }
    }
    Ok(RiemannVerdict {
        member: residual <= tol * scale,
        residual_norm: residual,
        scale,
        tol,
    })
}

/// One member `X_{V,U,φ}` of the complete Appell-Humbert family.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleDatum {
    pub form: ExtensionForm,
    pub base: ComplexStructure,
    pub fibre: ComplexStructure,
    /// `φ(e_i)` in `U`-coordinates, as a `d × 2m` matrix.
    pub phi: Option<CMat>,
}

impl BundleDatum {
    /// Checks ranks, non-degeneracy of both structures, the shape of `φ`
    /// and the First Riemann Relation.
    pub fn new(
        form: ExtensionForm,
        base: ComplexStructure,
        fibre: ComplexStructure,
        phi: Option<CMat>,
        tol: f64,
    ) -> Result<Self, DecomposeError> {
        check_ranks(&form, &base, &fibre)?;
        base.validate(tol)
            .map_err(|source| DecomposeError::Structure { which: "V", source })?;
        fibre
            .validate(tol)
            .map_err(|source| DecomposeError::Structure { which: "U", source })?;
        if let Some(p) = &phi {
            let (er, ec) = (fibre.half_rank(), form.base_rank());
            if p.nrows() != er || p.ncols() != ec {
                return Err(DecomposeError::PhiShape {
                    rows: p.nrows(),
                    cols: p.ncols(),
                    expected_rows: er,
                    expected_cols: ec,
                });
            }
        }
        let verdict = riemann_check(&form, &base, &fibre, tol)?;
        if !verdict.member {
            return Err(DecomposeError::NotInVariety {
                residual: verdict.residual_norm,
                scale: verdict.scale,
                tol,
            });
        }
        Ok(BundleDatum {
            form,
            base,
            fibre,
            phi,
        })
    }

    pub fn base_dim(&self) -> usize {
        self.base.half_rank()
    }

    pub fn fibre_dim(&self) -> usize {
        self.fibre.half_rank()
    }

    pub fn decompose(&self, tol: f64) -> Result<DecomposedForm, DecomposeError> {
        decompose(&self.form, &self.base, &self.fibre, tol)
    }
}

/// The linear Appell-Humbert cocycle of a bundle,
///
/// `F_γ(z) = B'(z, γ_V) + 2 B"(z, γ_V̄) + B"(γ_V, γ_V̄) + φ(γ)`,
///
/// with `z ∈ V` and `γ ↦ (γ_V, γ_V̄)` through `C_V`. It is complex linear in
/// `z`, and its defect `F_{γ₁+γ₂}(z) − F_{γ₁}(z+γ₂) − F_{γ₂}(z)` is the
/// `U`-image of the lattice vector `A(γ₁, γ₂)`.
#[derive(Debug, Clone)]
pub struct AppellHumbert {
    parts: DecomposedForm,
    fibre_change: CMat,
    fibre_block: CMat,
    phi: Option<CMat>,
}

impl AppellHumbert {
    pub fn new(datum: &BundleDatum, tol: f64) -> Result<Self, DecomposeError> {
        Ok(AppellHumbert {
            parts: datum.decompose(tol)?,
            fibre_change: basis_change("U", &datum.fibre)?,
            fibre_block: datum.fibre.block_matrix(),
            phi: datum.phi.clone(),
        })
    }

    pub fn decomposed(&self) -> &DecomposedForm {
        &self.parts
    }

    fn split(&self, gamma: &[i64]) -> Result<(Vec<C64>, Vec<C64>), DecomposeError> {
        let m = self.parts.base_dim();
        if gamma.len() != 2 * m {
            return Err(DecomposeError::Dimension {
                expected: 2 * m,
                found: gamma.len(),
            });
        }
        let c = &self.parts.base_change;
        let coords: Vec<C64> = (0..2 * m)
            .map(|r| {
                gamma
                    .iter()
                    .enumerate()
                    .map(|(i, &g)| c[(r, i)] * g as f64)
                    .sum()
            })
            .collect();
        Ok((coords[..m].to_vec(), coords[m..].to_vec()))
    }

    fn check_z(&self, z: &[C64]) -> Result<(), DecomposeError> {
        let m = self.parts.base_dim();
        if z.len() != m {
            return Err(DecomposeError::Dimension {
                expected: m,
                found: z.len(),
            });
        }
        Ok(())
    }

    /// `F_γ(z)` in `U`-coordinates.
    pub fn eval(&self, gamma: &[i64], z: &[C64]) -> Result<Vec<C64>, DecomposeError> {
        self.check_z(z)?;
        let (g_v, g_vbar) = self.split(gamma)?;
        let (d, m) = (self.parts.fibre_dim(), self.parts.base_dim());
        let b1 = &self.parts.complex;
        let b2 = &self.parts.hermitian;
        Ok((0..d)
            .map(|k| {
                let mut acc = ZERO;
                for a in 0..m {
                    for b in 0..m {
                        acc += b1.get(k, a, b) * z[a] * g_v[b];
                        acc += b2.get(k, a, b) * (z[a] * 2.0 + g_v[a]) * g_vbar[b];
                    }
                }
                if let Some(phi) = &self.phi {
                    for (i, &g) in gamma.iter().enumerate() {
                        acc += phi[(k, i)] * g as f64;
                    }
                }
                acc
            })
            .collect())
    }

    /// `F_{γ₁+γ₂}(z) − F_{γ₁}(z + p_V(γ₂)) − F_{γ₂}(z)`.
    pub fn defect(
        &self,
        gamma1: &[i64],
        gamma2: &[i64],
        z: &[C64],
    ) -> Result<Vec<C64>, DecomposeError> {
        self.check_z(z)?;
        if gamma1.len() != gamma2.len() {
            return Err(DecomposeError::Dimension {
                expected: gamma1.len(),
                found: gamma2.len(),
            });
        }
        let sum: Vec<i64> = gamma1.iter().zip(gamma2).map(|(a, b)| a + b).collect();
        let (g2_v, _) = self.split(gamma2)?;
        let shifted: Vec<C64> = z.iter().zip(&g2_v).map(|(a, b)| a + b).collect();
        let f12 = self.eval(&sum, z)?;
        let f1 = self.eval(gamma1, &shifted)?;
        let f2 = self.eval(gamma2, z)?;
        Ok((0..f12.len()).map(|k| f12[k] - f1[k] - f2[k]).collect())
    }

    /// `U`-coordinates of a lattice vector of `Λ`.
    pub fn fibre_coords(&self, lambda: &[i64]) -> Vec<C64> {
        let d = self.parts.fibre_dim();
        (0..d)
            .map(|k| {
                lambda
                    .iter()
                    .enumerate()
                    .map(|(i, &l)| self.fibre_change[(k, i)] * l as f64)
                    .sum()
            })
            .collect()
    }

    /// Nearest lattice vector to a `U`-coordinate vector, and the max-norm
    /// distance (in `U`-coordinates) to its image.
    pub fn nearest_lattice_vector(&self, w: &[C64]) -> (Vec<i64>, f64) {
        let d = self.parts.fibre_dim();
        // A real vector has (U, Ū)-coordinates (w, w̄).
        let lambda: Vec<i64> = (0..2 * d)
            .map(|i| {
                let x: C64 = (0..d)
                    .map(|k| {
                        self.fibre_block[(i, k)] * w[k] + self.fibre_block[(i, d + k)] * w[k].conj()
                    })
                    .sum();
                x.re.round() as i64
            })
            .collect();
        let image = self.fibre_coords(&lambda);
        let err = image
            .iter()
            .zip(w)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).norm()));
        (lambda, err)
    }
}

/// `F_γ(z)`; see [`AppellHumbert`].
pub fn cocycle_eval(
    datum: &BundleDatum,
    gamma: &[i64],
    z: &[C64],
    tol: f64,
) -> Result<Vec<C64>, DecomposeError> {
    AppellHumbert::new(datum, tol)?.eval(gamma, z)
}

/// Cocycle defect; see [`AppellHumbert::defect`].
pub fn cocycle_defect(
    datum: &BundleDatum,
    gamma1: &[i64],
    gamma2: &[i64],
    z: &[C64],
    tol: f64,
) -> Result<Vec<C64>, DecomposeError> {
    AppellHumbert::new(datum, tol)?.defect(gamma1, gamma2, z)
}
